"""Closed-form cloning formulas used as the oracle for the photonic pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import eval_legendre

SQRT2 = math.sqrt(2.0)
LAMBDA_UC = math.sqrt(2.0 / 3.0)
LAMBDA_PCC = 1.0 / SQRT2


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class CloneParameter:
    """Amplitudes (lam, lam_bar) of the cloning isometry, lam**2 + lam_bar**2 = 1."""

    lam: float
    lam_bar: float = field(default=float("nan"))

    def __post_init__(self):
        if not (1 / SQRT2 - 1e-12 <= self.lam <= 1 + 1e-12):
            raise ValueError(f"lambda={self.lam} outside [1/sqrt(2), 1]")
        lam = min(max(self.lam, 1 / SQRT2), 1.0)
        object.__setattr__(self, "lam", lam)
        if math.isnan(self.lam_bar):
            object.__setattr__(self, "lam_bar", math.sqrt(max(0.0, 1.0 - lam * lam)))
        elif abs(self.lam**2 + self.lam_bar**2 - 1) > 1e-12:
            raise ValueError("lambda**2 + lambda_bar**2 must equal 1")


UC = CloneParameter(LAMBDA_UC)
PCC = CloneParameter(LAMBDA_PCC)


@dataclass(frozen=True)
class InputQubit:
    """alpha|H> + beta|V> with alpha = cos(theta/2), beta = exp(i delta) sin(theta/2)."""

    theta: float
    delta: float = 0.0

    @property
    def alpha(self) -> complex:
        return complex(math.cos(self.theta / 2))

    @property
    def beta(self) -> complex:
        return complex(np.exp(1j * self.delta) * math.sin(self.theta / 2))

    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])

    def orthogonal(self) -> np.ndarray:
        """The antipodal state on the Bloch sphere."""
        return np.array([-self.beta.conjugate(), self.alpha.conjugate()])


@dataclass(frozen=True)
class FidelityReport:
    f1: float
    f2: float
    p_success: float

    @property
    def f_avg(self) -> float:
        return 0.5 * (self.f1 + self.f2)


def p_poly(theta: float) -> float:
    c2 = math.cos(theta) ** 2
    return 2 - 4 * c2 + 3 * c2 * c2


def lambda_from_theta(theta: float) -> CloneParameter:
    """Optimal lambda for a mirror pair of latitude circles at theta and pi - theta."""
    c2 = math.cos(theta) ** 2
    return CloneParameter(math.sqrt(0.5 + c2 / (2 * math.sqrt(p_poly(theta)))))


def lambda_from_a2(a2: float) -> CloneParameter:
    """Optimal lambda for a mirror-symmetric distribution with Legendre moment a2."""
    if not -0.5 <= a2 <= 1.0:
        raise ValueError(f"a2={a2} outside the supported range [-1/2, 1]")
    denom = 3 * (3 + 4 * a2 * a2 - 4 * a2)
    inner = 1 - 8 * (1 - a2) ** 2 / denom
    if inner < 0:
        if inner < -1e-14:
            raise ValueError(f"negative radicand for a2={a2}")
        inner = 0.0
    return CloneParameter(math.sqrt(0.5 + 0.5 * math.sqrt(inner)))


# ---------------------------------------------------------------------------
# distributions on the Bloch sphere


@dataclass(frozen=True)
class QubitDistribution:
    """Azimuth-independent input distribution g(theta) per unit solid angle.

    ``kind`` is ``universal``, ``phase_covariant``, ``mirror`` (delta pair at
    ``theta`` and pi - theta, evaluated pointwise) or ``custom`` (``density``).
    """

    kind: str
    theta: float | None = None
    density: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind not in ("universal", "phase_covariant", "mirror", "custom"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "mirror" and self.theta is None:
            raise ValueError("mirror distribution needs theta")
        if self.kind == "custom" and self.density is None:
            raise ValueError("custom distribution needs a density")

    @classmethod
    def universal(cls) -> "QubitDistribution":
        return cls("universal")

    @classmethod
    def phase_covariant(cls) -> "QubitDistribution":
        return cls("phase_covariant")

    @classmethod
    def mirror(cls, theta: float) -> "QubitDistribution":
        return cls("mirror", theta=theta)

    @classmethod
    def custom(cls, density: Callable[[float], float]) -> "QubitDistribution":
        return cls("custom", density=density)

    def point_support(self) -> list[tuple[float, float]] | None:
        """(theta, weight) atoms for delta-type distributions, else None."""
        if self.kind == "phase_covariant":
            return [(math.pi / 2, 1.0)]
        if self.kind == "mirror":
            return [(self.theta, 0.5), (math.pi - self.theta, 0.5)]
        return None

    def polar_density(self, theta: float) -> float:
        """Weight per d(theta) after the azimuthal integral: 2 pi g sin(theta)."""
        if self.kind == "universal":
            return 0.5 * math.sin(theta)
        if self.kind == "custom":
            return 2 * math.pi * self.density(theta) * math.sin(theta)
        raise ValueError("delta-type distributions have no pointwise density")


def _quad(f: Callable[[float], float], a: float, b: float, atol: float) -> float:
    val, err = integrate.quad(f, a, b, epsabs=atol, epsrel=0, limit=200)
    if not err <= atol:
        raise QuadratureError(f"quadrature error estimate {err:g} exceeds {atol:g}")
    return val


def legendre_coefficients(dist: QubitDistribution, n_max: int = 2, atol: float = 1e-10) -> list[float]:
    """a_n = int dphi int d(cos theta) g(theta) P_n(cos theta), n = 0..n_max."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    atoms = dist.point_support()
    out = []
    for n in range(n_max + 1):
        if atoms is not None:
            out.append(sum(w * float(eval_legendre(n, math.cos(t))) for t, w in atoms))
        else:
            out.append(
                _quad(lambda t, n=n: dist.polar_density(t) * float(eval_legendre(n, math.cos(t))), 0, math.pi, atol)
            )
    return out


# ---------------------------------------------------------------------------
# cloning map and fidelities


def ideal_clone(q: InputQubit, p: CloneParameter) -> np.ndarray:
    """Three-qubit output (clone1, clone2, ancilla) as a length-8 vector.

    Index = 4*c1 + 2*c2 + anc.
    """
    psi = np.zeros(8, dtype=complex)
    a, b = q.alpha, q.beta
    s = p.lam_bar / SQRT2
    # |0> -> lam|00>|0> + lam_bar|psi+>|1>
    psi[0b000] += a * p.lam
    psi[0b011] += a * s
    psi[0b101] += a * s
    # |1> -> lam|11>|1> + lam_bar|psi+>|0>
    psi[0b111] += b * p.lam
    psi[0b010] += b * s
    psi[0b100] += b * s
    return psi


def reduced_clone(psi: np.ndarray, which: int) -> np.ndarray:
    """2x2 density matrix of clone ``which`` (1 or 2) of a three-qubit vector."""
    t = psi.reshape(2, 2, 2)
    if which == 1:
        m = t.reshape(2, 4)
    elif which == 2:
        m = t.transpose(1, 0, 2).reshape(2, 4)
    else:
        raise ValueError("which must be 1 or 2")
    return m @ m.conj().T


def state_fidelity(rho: np.ndarray, q: InputQubit) -> float:
    v = q.vector()
    return float((v.conj() @ rho @ v).real / np.trace(rho).real)


def single_copy_fidelity(theta: float, p: CloneParameter) -> float:
    lam, lb = p.lam, p.lam_bar
    return (1 + lam * lam) / 2 - 0.5 * lam * (lam - lb * SQRT2) * math.sin(theta) ** 2


def average_fidelity(
    dist: QubitDistribution,
    lambda_rule: Callable[[float], CloneParameter] | CloneParameter,
    atol: float = 1e-6,
) -> float:
    """Average of (F1 + F2)/2 over inputs drawn from ``dist``.

    ``lambda_rule`` maps theta to a cloner; a fixed CloneParameter is also
    accepted. Mirror-family averages over every theta use ``mpcc_average_fidelity``.
    """
    rule = (lambda t: lambda_rule) if isinstance(lambda_rule, CloneParameter) else lambda_rule
    atoms = dist.point_support()
    if atoms is not None:
        return sum(w * single_copy_fidelity(t, rule(t)) for t, w in atoms)
    return _quad(lambda t: dist.polar_density(t) * single_copy_fidelity(t, rule(t)), 0, math.pi, atol)


def mpcc_average_fidelity(atol: float = 1e-6) -> float:
    """Mirror cloner tuned to each theta, averaged over theta with weight sin(theta)/2."""
    return average_fidelity(QubitDistribution.universal(), lambda_from_theta, atol)


def success_probability_ideal(p: CloneParameter) -> float:
    return 1.0 / (6 * p.lam**2)


def success_probability_mu(p: CloneParameter, mu: float) -> float:
    """Post-selection probability with an imperfect splitter obeying mu + nu = 1."""
    return (1 - 2 * mu) ** 2 / (2 * p.lam**2)
