import csv
import io
import json
import math

import numpy as np
import pytest

from mpclone.analytic import (
    PCC,
    UC,
    InputQubit,
    QubitDistribution,
    average_fidelity,
    lambda_from_theta,
    success_probability_mu,
)
from mpclone.detectors import DetectorModel
from mpclone.experiments import (
    RESULT_COLUMNS,
    ClonerSpec,
    EvalConfig,
    SweepSpec,
    _ideal_reports,
    average_over_inputs,
    balanced_line,
    evaluate,
    haar_nodes,
    resolve_kappa,
    run_sweep,
    sweep_mu_nu,
    table_dark_counts,
    table_detector_efficiency,
)
from mpclone.optics import (
    MU0,
    NU0,
    InfeasibleConfigurationError,
    PdbsConfig,
    SpdcConfig,
)

PAIR = SpdcConfig(order=2)


def test_haar_nodes_integrate_sin_measure():
    t, w = haar_nodes(32)
    assert w.sum() == pytest.approx(1)
    assert (w * np.cos(t) ** 2).sum() == pytest.approx(1 / 3)


def test_cloner_spec():
    assert ClonerSpec("UC").parameter(0.3) == UC
    assert ClonerSpec("MPCC", theta=1.0).parameter(0.3) == lambda_from_theta(1.0)
    assert ClonerSpec("a2", a2=-0.5).parameter(2.0).lam == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ValueError):
        ClonerSpec("a2")
    with pytest.raises(ValueError):
        ClonerSpec("XYZ")


def test_resolve_kappa():
    p = lambda_from_theta(1.0)
    k, ok = resolve_kappa(p, PdbsConfig())
    assert ok and k == pytest.approx(p.lam_bar / p.lam)
    with pytest.raises(InfeasibleConfigurationError):
        resolve_kappa(UC, PdbsConfig(0.05, 0.95))
    k, ok = resolve_kappa(UC, PdbsConfig(0.05, 0.95), clamp=True)
    assert (k, ok) == (1.0, False)
    k, ok = resolve_kappa(UC, PdbsConfig(0.95, 0.05), clamp=True)
    assert (k, ok) == (-1.0, False)


@pytest.mark.parametrize("theta", np.linspace(0.1, 3.0, 7))
def test_fast_path_matches_pipeline(theta):
    for mu, nu in ((MU0, NU0), (0.3, 0.7), (0.3, 0.5), (0.1, 0.6)):
        fast = _ideal_reports(np.array([theta]), ClonerSpec(), mu, nu)[0]
        full = evaluate(InputQubit(float(theta)), EvalConfig(spdc=PAIR, splitter=PdbsConfig(mu, nu), clamp=True))
        assert fast.p_success == pytest.approx(full.p_success, abs=1e-12)
        if full.p_success > 1e-12:
            assert fast.f1 == pytest.approx(full.f1, abs=1e-10)
            assert fast.f2 == pytest.approx(full.f2, abs=1e-10)
        assert fast.kappa == pytest.approx(full.kappa)


def test_headline_averages_from_pipeline():
    r = average_over_inputs(EvalConfig(spdc=PAIR), 32)
    assert r.f_avg == pytest.approx(0.8594, abs=3e-4)
    r = average_over_inputs(EvalConfig(ClonerSpec("UC"), PAIR), 16)
    assert r.f_avg == pytest.approx(5 / 6, abs=1e-9)
    assert r.p_success == pytest.approx(0.25, abs=1e-9)
    with pytest.raises(ValueError):
        average_over_inputs(EvalConfig(spdc=PAIR), 8)


def test_pcc_average_from_fast_path():
    t, w = haar_nodes(64)
    reps = _ideal_reports(t, ClonerSpec("PCC"), MU0, NU0)
    f = sum(wi * r.f_avg for r, wi in zip(reps, w))
    # the PCC tuned to the equator, averaged over the whole sphere
    assert f == pytest.approx(average_fidelity(QubitDistribution.universal(), PCC), abs=1e-9)
    eq = _ideal_reports(np.array([math.pi / 2]), ClonerSpec("PCC"), MU0, NU0)[0]
    assert eq.f_avg == pytest.approx(0.8536, abs=1e-4)


def test_balanced_line_plateau_and_success_law():
    lo, hi = 0.5 * (1 - 1 / math.sqrt(3)), 0.5
    mus = np.linspace(lo, hi - 0.02, 9)
    res = balanced_line(mus)
    f = res.column("f_avg")
    assert f.max() - f.min() < 1e-6
    t, w = haar_nodes(64)
    inv = sum(wi / (2 * lambda_from_theta(float(ti)).lam ** 2) for ti, wi in zip(t, w))
    for mu, p in zip(mus, res.column("p_success")):
        assert p == pytest.approx((1 - 2 * mu) ** 2 * inv, abs=1e-6)
    # largest success probability at the band edge, on the plateau
    assert np.argmax(res.column("p_success")) == 0


def test_success_vanishes_at_center():
    r = sweep_mu_nu(SweepSpec(mu=(0.5,), nu=(0.5,)))
    assert r.rows[0][RESULT_COLUMNS.index("p_success")] == 0


def test_uc_success_matches_closed_form():
    rep = _ideal_reports(np.array([0.7]), ClonerSpec("UC"), 0.35, 0.65)[0]
    assert rep.p_success == pytest.approx(success_probability_mu(UC, 0.35))


@pytest.mark.parametrize("offset", [0.005, 0.01])
def test_fig3_reflection_symmetry_near_balanced_line(offset):
    for mu in (0.25, 0.3, 0.4):
        nu = 1 - mu + offset
        a = sweep_mu_nu(SweepSpec(mu=(mu,), nu=(nu,), quadrature_points=32)).as_dicts()[0]
        b = sweep_mu_nu(SweepSpec(mu=(1 - nu,), nu=(1 - mu,), quadrature_points=32)).as_dicts()[0]
        assert a["f_avg"] == pytest.approx(b["f_avg"], abs=1e-4)


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(mu=())
    with pytest.raises(ValueError):
        SweepSpec(eta=(1.2,), detector="on_off")
    with pytest.raises(ValueError):
        SweepSpec(eta=(0.9,))  # perfect detectors
    with pytest.raises(ValueError):
        SweepSpec(quadrature_points=8)
    with pytest.raises(ValueError):
        SweepSpec.from_dict({"mu": [0.2], "bogus": 1})
    s = SweepSpec.from_dict({"mu": 0.2, "nu": [0.8], "cloner": {"kind": "UC"}})
    assert s.mu == (0.2,) and s.cloner.kind == "UC"
    assert SweepSpec.from_dict(s.to_dict()) == s


def small_grid():
    return SweepSpec(mu=(0.0, 0.2, 0.5), nu=(0.5, 0.9), quadrature_points=16)


def test_sweep_rows_and_infeasible_marking():
    res = run_sweep(small_grid())
    assert len(res.rows) == 6
    rows = res.as_dicts()
    assert [(r["mu"], r["nu"]) for r in rows] == [(m, n) for m in (0.0, 0.2, 0.5) for n in (0.5, 0.9)]
    # mu = 0 sends every photon straight through; the damping cannot compensate
    assert not rows[0]["feasible"]
    assert all(abs(r["kappa_max"]) <= 1 for r in rows)


def test_csv_is_deterministic_and_full_precision():
    a = run_sweep(small_grid()).to_csv()
    b = run_sweep(small_grid()).to_csv()
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert tuple(rows[0]) == RESULT_COLUMNS
    f = float(rows[3][RESULT_COLUMNS.index("f_avg")])
    assert repr(f) == rows[3][RESULT_COLUMNS.index("f_avg")]


def test_json_schema(tmp_path):
    res = run_sweep(small_grid())
    out = json.loads(res.write(tmp_path / "s.json", "json").read_text())
    assert set(out) == {"metadata", "rows"}
    assert len(out["rows"]) == 6
    assert set(out["rows"][0]) == set(RESULT_COLUMNS)
    meta = out["metadata"]
    assert {"config", "config_hash", "tolerances", "timestamp"} <= set(meta)
    assert meta["config_hash"] == run_sweep(small_grid()).metadata["config_hash"]


def test_parallel_sweep_keeps_grid_order():
    spec = SweepSpec(mu=tuple(np.linspace(0.2, 0.45, 5)), nu=(0.6, 0.8), quadrature_points=16)
    assert run_sweep(spec, jobs=3).rows == run_sweep(spec, jobs=1).rows


def test_tables_shape_and_first_rows():
    t1 = table_detector_efficiency(etas=(1.0, 0.5), quadrature_points=16)
    assert len(t1.rows) == 4
    r = t1.as_dicts()[0]
    assert r["kind"] == "single_photon_counter"
    assert r["f1"] == pytest.approx(0.8594, abs=0.002)
    assert r["p_success"] == pytest.approx(0.2552, abs=0.005)
    t2 = table_dark_counts(zetas=(1e-6,), kinds=("single_photon_counter",), quadrature_points=16)
    assert t2.rows[0][5:] == t1.rows[0][5:]


def test_counters_beat_onoff_in_fidelity_without_dark_counts():
    rows = table_detector_efficiency(etas=(1.0, 0.7), quadrature_points=16).as_dicts()
    by = {(r["eta"], r["kind"]): r for r in rows}
    for eta in (1.0, 0.7):
        assert by[eta, "single_photon_counter"]["f1"] > by[eta, "on_off"]["f1"]


def test_counter_success_drops_with_dark_counts():
    rows = table_dark_counts(zetas=(1e-6, 1e-2, 1e-1), kinds=("single_photon_counter",), quadrature_points=16)
    p = rows.column("p_success")
    assert np.all(np.diff(p) < 0)


def test_lossy_detectors_keep_symmetric_averages():
    cfg = EvalConfig(detector=DetectorModel.counter(0.6, 0))
    r = average_over_inputs(cfg, 16)
    assert r.f1 == pytest.approx(r.f2, abs=1e-10)
