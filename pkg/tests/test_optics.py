import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpclone.analytic import (
    PCC,
    UC,
    CloneParameter,
    InputQubit,
    lambda_from_theta,
    single_copy_fidelity,
)
from mpclone.detectors import DetectorModel, coincidences, fidelities_from_coincidences
from mpclone.fock import ModeLabel, PureState, inner_product, ket
from mpclone.optics import (
    MU0,
    NU0,
    FeedforwardConfig,
    InfeasibleConfigurationError,
    PdbsConfig,
    SpdcConfig,
    clone_density,
    damping_operator,
    feedforward_output,
    kappa_for,
    pdbs,
    post_pdbs_state,
    prepare_input,
    spdc_state,
)

PAIR = SpdcConfig(order=2)


def test_config_validation():
    with pytest.raises(ValueError):
        SpdcConfig(gamma=0.5)
    with pytest.raises(ValueError):
        SpdcConfig(order=4)
    with pytest.raises(ValueError):
        PdbsConfig(1.2, 0.1)
    with pytest.raises(ValueError):
        FeedforwardConfig(1.5)
    assert PdbsConfig().balanced_for_mpcc
    assert not PdbsConfig(0.3, 0.5).balanced_for_mpcc


def test_order2_source_is_bell_times_pair():
    s = spdc_state(PAIR)
    assert s.norm() == pytest.approx(1)
    r = 1 / math.sqrt(2)
    assert abs(s[ket(("0", "H", 1), ("1", "V", 1), ("0'", "H", 1), ("2", "H", 1))]) == pytest.approx(r)
    assert abs(s[ket(("0", "V", 1), ("1", "H", 1), ("0'", "H", 1), ("2", "H", 1))]) == pytest.approx(r)
    assert len(s) == 2


def test_order3_coefficients_read_verbatim():
    g = 0.1
    s = spdc_state(SpdcConfig(gamma=g))
    lead = s[ket(("0", "H", 1), ("1", "V", 1), ("0'", "H", 1), ("2", "H", 1))]
    double = s[ket(("0", "H", 1), ("1", "V", 1), ("0'", "H", 2), ("2", "H", 2))]
    eps = s[ket(("0", "H", 1), ("0", "V", 1), ("0'", "H", 1), ("2", "H", 1))]
    assert double / lead == pytest.approx(g)
    # |eps> has norm one and 1/2 on each ket; psi+ has 1/sqrt2
    assert eps / lead == pytest.approx(g * 0.5 * math.sqrt(2))
    assert s.norm() == pytest.approx(1)
    # N^2 (gamma^4 + 2 gamma^6) = 1 once the gamma^2 factor is divided out
    assert abs(lead) ** 2 * 2 == pytest.approx(1 / (1 + 2 * g * g))


def test_double_pair_weight_scales_that_ket_only():
    s1 = spdc_state(SpdcConfig(gamma=0.1))
    s2 = spdc_state(SpdcConfig(gamma=0.1, double_pair_weight=math.sqrt(2)))
    k_lead = ket(("0", "H", 1), ("1", "V", 1), ("0'", "H", 1), ("2", "H", 1))
    k_double = ket(("0", "H", 1), ("1", "V", 1), ("0'", "H", 2), ("2", "H", 2))
    r1 = s1[k_double] / s1[k_lead]
    r2 = s2[k_double] / s2[k_lead]
    assert r2 / r1 == pytest.approx(math.sqrt(2))


def test_gamma_zero_is_single_pair_limit():
    a = spdc_state(SpdcConfig(gamma=0.0, order=3))
    b = spdc_state(PAIR)
    assert abs(inner_product(a, b)) == pytest.approx(1)


@pytest.mark.parametrize("phi", [0.0, 0.7, 2.5])
def test_phase_phi_does_not_change_outputs(phi):
    q, p = InputQubit(1.1), lambda_from_theta(1.1)
    d = DetectorModel.counter(0.8, 1e-3)
    base = coincidences(clone_density(q, p, SpdcConfig(gamma=0.1), detector=d), q, d)
    other = coincidences(clone_density(q, p, SpdcConfig(gamma=0.1, phi=phi), detector=d), q, d)
    assert other.c11 == pytest.approx(base.c11, abs=1e-13)
    assert other.total == pytest.approx(base.total, abs=1e-13)


def test_prepare_input_examples():
    s = spdc_state(PAIR)
    same = prepare_input(s, InputQubit(0))
    assert abs(inner_product(same, s)) == pytest.approx(1)
    flipped = prepare_input(s, InputQubit(math.pi, 0.4))
    assert all(k.occupation(ModeLabel("2", "H")) == 0 for k, _ in flipped)


def test_prepare_input_two_photon_sector():
    # (alpha a_H^dag + beta a_V^dag)^2 / sqrt2 at theta = pi/2, delta = 0
    s = PureState.basis(ket(("2", "H", 2)))
    out = prepare_input(s, InputQubit(math.pi / 2))
    a = b = 1 / math.sqrt(2)
    assert out[ket(("2", "H", 2))] == pytest.approx(a * a)
    assert out[ket(("2", "H", 1), ("2", "V", 1))] == pytest.approx(math.sqrt(2) * a * b)
    assert out[ket(("2", "V", 2))] == pytest.approx(b * b)


def test_pdbs_limits_and_mu0():
    m = pdbs(PdbsConfig(0, 1)).matrix.real
    # H straight through, V swaps modes
    assert m[:, 0] == pytest.approx([1, 0, 0, 0])
    assert m[:, 2] == pytest.approx([0, 0, 1, 0])
    assert m[:, 1] == pytest.approx([0, 0, 0, 1])
    assert m[:, 3] == pytest.approx([0, 1, 0, 0])
    s3 = 1 / math.sqrt(3)
    assert 1 - 2 * MU0 == pytest.approx(s3)
    assert 2 * NU0 - 1 == pytest.approx(s3)
    assert math.sqrt(2 * MU0 * NU0) == pytest.approx(s3)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(0, 1))
def test_pdbs_unitary(mu, nu):
    m = pdbs(PdbsConfig(mu, nu)).matrix
    assert np.abs(m.conj().T @ m - np.eye(4)).max() <= 1e-12


def test_damping_examples():
    two = PureState.basis(ket(("1'", "H", 1), ("2'", "H", 1)))
    out = damping_operator(FeedforwardConfig(0.3), "H").apply(two)
    assert out[ket(("1'", "H", 1), ("2'", "H", 1))] == pytest.approx(0.09)
    vv = PureState.basis(ket(("2'", "V", 2)))
    assert damping_operator(FeedforwardConfig(0.5), "V").apply(vv)[ket(("2'", "V", 2))] == pytest.approx(0.25)
    v1 = PureState.basis(ket(("1'", "V", 1), ("2'", "H", 1)))
    out = damping_operator(FeedforwardConfig(1.0), "V").apply(v1)
    assert out[ket(("1'", "V", 1), ("2'", "H", 1))] == pytest.approx(-1)
    with pytest.raises(ValueError):
        damping_operator(FeedforwardConfig(0.5), "D")


def test_kappa_for_examples():
    for lam in (0.75, 0.85, 1.0):
        p = CloneParameter(lam)
        assert kappa_for(p, PdbsConfig()) == pytest.approx(p.lam_bar / p.lam)
    assert kappa_for(CloneParameter(1.0), PdbsConfig(0.3, 0.7)) == 0
    assert kappa_for(PCC, PdbsConfig()) == pytest.approx(1)
    with pytest.raises(InfeasibleConfigurationError):
        kappa_for(PCC, PdbsConfig(0.1, 0.9))
    with pytest.raises(ValueError):
        kappa_for(PCC, PdbsConfig(0.3, 0.5))


def test_post_pdbs_normalized():
    psi = post_pdbs_state(InputQubit(0.7, 1.3), SpdcConfig(gamma=0.1))
    assert psi.norm() == pytest.approx(1, abs=1e-12)


def one_photon_each(rho):
    w = lambda k: float(k.spatial_total("1''") == 1 and k.spatial_total("2''") == 1)
    return rho.expectation_diagonal(w)


@pytest.mark.parametrize("theta", [0.3, 1.0, math.pi / 2, 2.5])
def test_ideal_pipeline_success_probability(theta):
    q, p = InputQubit(theta), lambda_from_theta(theta)
    rho = clone_density(q, p, PAIR)
    assert one_photon_each(rho) == pytest.approx(1 / (6 * p.lam**2), abs=1e-12)


@pytest.mark.parametrize("mu", [MU0, 0.3, 0.4, 0.49])
def test_general_mu_success_probability(mu):
    q, p = InputQubit(1.2), UC
    rho = clone_density(q, p, PAIR, PdbsConfig(mu, 1 - mu))
    assert one_photon_each(rho) == pytest.approx((1 - 2 * mu) ** 2 / (2 * p.lam**2), abs=1e-12)


def test_pole_input_gives_two_h_photons():
    q, p = InputQubit(0), CloneParameter(1.0)
    rho = clone_density(q, p, PAIR)
    hh = ket(("1''", "H", 1), ("2''", "H", 1))
    # conditioned on one photon per output
    assert (rho.entry(hh, hh) / one_photon_each(rho)).real == pytest.approx(1, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, math.pi - 0.05), st.floats(0, 2 * math.pi), st.floats(MU0, 0.49))
def test_pipeline_matches_closed_form(theta, delta, mu):
    q, p = InputQubit(theta, delta), lambda_from_theta(theta)
    d = DetectorModel.perfect()
    rho = clone_density(q, p, PAIR, PdbsConfig(mu, 1 - mu))
    r = fidelities_from_coincidences(coincidences(rho, q, d))
    f = single_copy_fidelity(theta, p)
    assert r.f1 == pytest.approx(f, abs=1e-9)
    assert r.f2 == pytest.approx(f, abs=1e-9)
    assert r.p_success == pytest.approx((1 - 2 * mu) ** 2 / (2 * p.lam**2), abs=1e-9)


@settings(max_examples=8, deadline=None)
@given(st.floats(0, math.pi), st.floats(0.3, 1), st.floats(0, 0.05), st.sampled_from(["single_photon_counter", "on_off"]))
def test_output_hermitian_psd(theta, eta, zeta, kind):
    d = DetectorModel(kind, eta, zeta)
    rho = clone_density(InputQubit(theta, 0.4), lambda_from_theta(theta), SpdcConfig(gamma=0.15), detector=d)
    assert rho.is_hermitian(1e-10)
    assert rho.is_psd(1e-10)
    assert 0 <= rho.trace() <= 1 + 1e-12


def test_feedforward_branches_keep_only_output_modes():
    psi = post_pdbs_state(InputQubit(1.0))
    d = DetectorModel.perfect()
    rho = feedforward_output(psi, FeedforwardConfig(0.5), d, d)
    assert {m.spatial for k in rho.basis for m, _ in k} <= {"1''", "2''"}
