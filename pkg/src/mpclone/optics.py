"""Photonic cloning pipeline: SPDC source, input encoding, PDBS, feedforward.

Mode names follow the setup: ``0``/``1`` carry the entangled ancilla pair,
``0'`` the herald, ``2`` the input photon; the PDBS maps ``1``, ``2`` onto
``1'``, ``2'`` and the clones leave in ``1''``, ``2''`` after feedforward.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .analytic import CloneParameter, InputQubit
from .detectors import DetectorModel
from .fock import (
    DensityOperator,
    FockBasisState,
    ModeLabel,
    ModeTransform,
    Operator,
    PureState,
    Truncation,
    apply_mode_transform,
    ket,
    partial_trace,
    project_outcome,
    tensor,
)

MU0 = (1 - 1 / math.sqrt(3)) / 2
NU0 = (1 + 1 / math.sqrt(3)) / 2

# after the PDBS up to three photons can bunch into one output mode
PIPELINE_TRUNCATION = Truncation(per_mode=3, total=6)

H, V = "H", "V"


class InfeasibleConfigurationError(ValueError):
    """The requested damping would need |kappa| > 1."""


@dataclass(frozen=True)
class SpdcConfig:
    gamma: float = 0.1
    phi: float = 0.0
    order: int = 3
    # extra factor on the double-pair ket; 1 reads the source state as printed
    double_pair_weight: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.gamma**2 > 0.1:
            raise ValueError("gamma**2 must lie in [0, 0.1]")
        if self.order not in (2, 3):
            raise ValueError("order must be 2 or 3")
        if self.double_pair_weight < 0:
            raise ValueError("double_pair_weight must be non-negative")

    @classmethod
    def from_gamma2(cls, gamma2: float, phi: float = 0.0, order: int = 3, double_pair_weight: float = 1.0) -> "SpdcConfig":
        return cls(math.sqrt(gamma2), phi, order, double_pair_weight)


@dataclass(frozen=True)
class PdbsConfig:
    mu: float = MU0
    nu: float = NU0

    def __post_init__(self):
        if not (0 <= self.mu <= 1 and 0 <= self.nu <= 1):
            raise ValueError("mu and nu must lie in [0, 1]")

    @property
    def balanced_for_mpcc(self) -> bool:
        return abs(self.mu + self.nu - 1) < 1e-12


@dataclass(frozen=True)
class FeedforwardConfig:
    kappa: float

    def __post_init__(self):
        if not 0 <= self.kappa <= 1:
            raise ValueError("damping kappa must lie in [0, 1]")


def _psi_plus(truncation: Truncation) -> PureState:
    s = 1 / math.sqrt(2)
    return PureState(
        {ket(("0", H, 1), ("1", V, 1)): s, ket(("0", V, 1), ("1", H, 1)): s}, truncation
    )


def _epsilon(truncation: Truncation) -> PureState:
    return PureState(
        {
            ket(("0", H, 1), ("0", V, 1)): 0.5,
            ket(("1", H, 1), ("1", V, 1)): 0.5,
            ket(("0", H, 2), ("1", V, 2)): 0.5,
            ket(("0", V, 2), ("1", H, 2)): 0.5,
        },
        truncation,
    )


def spdc_state(cfg: SpdcConfig, truncation: Truncation = PIPELINE_TRUNCATION) -> PureState:
    """Source state on modes 0, 1, 0', 2 through order gamma**cfg.order, normalized.

    The common factor gamma**2 exp(2i phi) is divided out before normalizing,
    so gamma = 0 gives the single-pair limit instead of the zero vector.
    """
    g, ph = cfg.gamma, cfg.phi
    pair = PureState({ket(("0'", H, 1), ("2", H, 1)): 1.0}, truncation)
    psi = tensor(_psi_plus(truncation), pair) * cmath.exp(2j * ph)
    if cfg.order == 3 and g > 0:
        double = PureState({ket(("0'", H, 2), ("2", H, 2)): 1.0}, truncation)
        c3 = g * cmath.exp(3j * ph)
        psi = psi + tensor(_psi_plus(truncation), double) * (c3 * cfg.double_pair_weight)
        psi = psi + tensor(_epsilon(truncation), pair) * c3
    return psi.normalize()


def encoding_transform(q: InputQubit) -> ModeTransform:
    """a_2H^dag -> alpha a_2H^dag + beta a_2V^dag (wave plates on mode 2)."""
    a, b = q.alpha, q.beta
    u = np.array([[a, -b.conjugate()], [b, a.conjugate()]])
    return ModeTransform(u, (ModeLabel("2", H), ModeLabel("2", V)))


def prepare_input(state: PureState, q: InputQubit) -> PureState:
    return apply_mode_transform(state, encoding_transform(q))


def pdbs(cfg: PdbsConfig) -> ModeTransform:
    mu, nu = cfg.mu, cfg.nu
    sm, cm = math.sqrt(mu), math.sqrt(1 - mu)
    sn, cn = math.sqrt(nu), math.sqrt(1 - nu)
    inputs = [ModeLabel("1", H), ModeLabel("1", V), ModeLabel("2", H), ModeLabel("2", V)]
    outputs = [ModeLabel("1'", H), ModeLabel("1'", V), ModeLabel("2'", H), ModeLabel("2'", V)]
    # columns: images of 1H, 1V, 2H, 2V
    u = np.array(
        [
            [cm, 0, sm, 0],
            [0, cn, 0, sn],
            [-sm, 0, cm, 0],
            [0, sn, 0, -cn],
        ]
    )
    return ModeTransform(u, inputs, outputs)


def damping_factor(k: FockBasisState, kappa: float, pol: str, spatial=("1'", "2'")) -> float:
    n = sum(k.occupation(ModeLabel(s, pol)) for s in spatial)
    return (-kappa) ** n if pol == V else kappa**n


def damping_operator(cfg: FeedforwardConfig, pol: str, spatial=("1'", "2'")) -> Operator:
    """Pockels-cell damping of ``pol`` photons in modes 1' and 2'.

    Each such photon picks up kappa (H) or -kappa (V); other kets are unchanged.
    """
    if pol not in (H, V):
        raise ValueError("pol must be 'H' or 'V'")
    return Operator.diagonal(lambda k: damping_factor(k, cfg.kappa, pol, spatial))


def kappa_for(p: CloneParameter, cfg: PdbsConfig, atol: float = 1e-12) -> float:
    """Damping that restores the optimal cloner for splitter ratios with mu + nu = 1."""
    if not cfg.balanced_for_mpcc:
        raise ValueError("kappa_for requires mu + nu = 1")
    mu, nu = cfg.mu, cfg.nu
    denom = p.lam * math.sqrt(2 * mu * nu)
    num = p.lam_bar * (1 - 2 * mu)
    if denom == 0:
        if num == 0:
            return 0.0
        raise InfeasibleConfigurationError(f"mu={mu} cannot realise lambda={p.lam}")
    kappa = num / denom
    if abs(kappa) > 1 + atol:
        raise InfeasibleConfigurationError(
            f"|kappa|={abs(kappa):.6g} > 1: mu={mu} is outside the admissible band for lambda={p.lam}"
        )
    return min(abs(kappa), 1.0) if kappa >= 0 else max(kappa, -1.0)


def admissible_mu_band() -> tuple[float, float]:
    return MU0, NU0


def post_pdbs_state(
    q: InputQubit,
    spdc: SpdcConfig = SpdcConfig(order=2),
    splitter: PdbsConfig = PdbsConfig(),
) -> PureState:
    """|Psi'> on modes 0, 0', 1', 2'."""
    return apply_mode_transform(prepare_input(spdc_state(spdc), q), pdbs(splitter))


OUT_RELABEL = {"1'": "1''", "2'": "2''"}


def feedforward_output(
    psi_prime: PureState,
    cfg: FeedforwardConfig,
    trigger: DetectorModel,
    herald: DetectorModel,
    kappa_sign: float = 1.0,
) -> DensityOperator:
    """Conditional clone state on modes 1'', 2'' (sub-normalized).

    ``trigger`` reads the ancilla photon in mode 0 behind a PBS; an H click
    (with a silent V arm) fires H damping, a V click fires V damping.
    ``herald`` must register one photon in mode 0'. ``kappa_sign`` is -1
    when the splitter has mu > 1/2 and the damping amplitude changes sign.
    """
    click = trigger.click_outcome
    hclick = herald.click_outcome
    h0, v0 = ModeLabel("0", H), ModeLabel("0", V)
    kappa = kappa_sign * cfg.kappa

    def herald_w(k: FockBasisState) -> float:
        return herald.weight(hclick, k.spatial_total("0'"))

    branches = []
    for pol, (oh, ov) in ((H, (click, "zero")), (V, ("zero", click))):

        def w(k, oh=oh, ov=ov):
            return (
                trigger.weight(oh, k.occupation(h0))
                * trigger.weight(ov, k.occupation(v0))
                * herald_w(k)
            )

        damped = {}
        for k, a in psi_prime:
            f = damping_factor(k, kappa, pol)
            if f != 0:
                damped[k] = a * f
        branch = PureState(damped, psi_prime.truncation)
        basis = branch.kets()
        vec = branch.to_vector(basis)
        rho = DensityOperator(basis, np.outer(vec, vec.conj()))
        branches.append(partial_trace(project_outcome(rho, w), keep=("1'", "2'")))
    return (branches[0] + branches[1]).relabel(OUT_RELABEL).pruned()


def clone_density(
    q: InputQubit,
    p: CloneParameter,
    spdc: SpdcConfig = SpdcConfig(order=2),
    splitter: PdbsConfig = PdbsConfig(),
    detector: DetectorModel = DetectorModel(),
    kappa: float | None = None,
) -> DensityOperator:
    """Run the whole optical chain for one input and cloner setting."""
    if kappa is None:
        kappa = kappa_for(p, splitter)
    sign = -1.0 if kappa < 0 else 1.0
    psi = post_pdbs_state(q, spdc, splitter)
    return feedforward_output(psi, FeedforwardConfig(abs(kappa)), detector, detector, sign)
