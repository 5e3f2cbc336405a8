"""Photon-detector POVMs and coincidence-based fidelity estimation.

All effects are diagonal in photon number. A detector is characterised by a
quantum efficiency ``eta`` and a dark-count rate ``zeta`` (per gate); every
detector in the setup shares the same model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .analytic import FidelityReport, InputQubit
from .fock import (
    DensityOperator,
    FockBasisState,
    ModeLabel,
    ModeTransform,
    transform_density,
)

KINDS = ("perfect", "single_photon_counter", "on_off")


class InvalidDetectorModelError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    kind: str = "perfect"
    eta: float = 1.0
    zeta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidDetectorModelError(f"unknown detector kind {self.kind!r}")
        if not 0 <= self.eta <= 1:
            raise InvalidDetectorModelError(f"efficiency {self.eta} outside [0, 1]")
        if self.zeta < 0:
            raise InvalidDetectorModelError("dark-count rate must be non-negative")
        if self.kind == "perfect" and (self.eta != 1 or self.zeta != 0):
            raise InvalidDetectorModelError("a perfect detector has eta=1, zeta=0")

    @classmethod
    def perfect(cls) -> "DetectorModel":
        return cls("perfect")

    @classmethod
    def counter(cls, eta: float = 1.0, zeta: float = 0.0) -> "DetectorModel":
        return cls("single_photon_counter", eta, zeta)

    @classmethod
    def on_off(cls, eta: float = 1.0, zeta: float = 0.0) -> "DetectorModel":
        return cls("on_off", eta, zeta)

    @property
    def click_outcome(self) -> str:
        """The outcome read as "one photon" by the post-selection logic."""
        return "at_least_one" if self.kind == "on_off" else "one"

    def povm(self, n_max: int = 6) -> dict[str, "PovmElement"]:
        if self.kind == "perfect":
            return perfect_povm(n_max)
        if self.kind == "single_photon_counter":
            return spc_povm(self, n_max)
        return onoff_povm(self, n_max)

    def weight(self, outcome: str, n: int) -> float:
        """<n|Pi_outcome|n>."""
        return _weights(self, max(n, 6))[outcome][n]


@dataclass(frozen=True)
class PovmElement:
    """Diagonal effect on one mode: ``weights[n] = <n|Pi|n>`` for n = 0..n_max."""

    outcome: str
    weights: tuple[float, ...]

    def __call__(self, n: int) -> float:
        return self.weights[n]

    def matrix(self) -> np.ndarray:
        return np.diag(self.weights)


def _zero_weights(eta: float, zeta: float, n_max: int) -> np.ndarray:
    m = np.arange(n_max + 1)
    return math.exp(-zeta) * (1 - eta) ** m


def _one_weights(eta: float, zeta: float, n_max: int) -> np.ndarray:
    # n = 0 branch: a dark count with every photon missed; n = 1 branch: one
    # photon registered, m - 1 missed.
    m = np.arange(n_max + 1)
    dark = zeta * (1 - eta) ** m
    real = np.zeros(n_max + 1)
    real[1:] = eta * m[1:] * (1 - eta) ** (m[1:] - 1)
    return math.exp(-zeta) * (dark + real)


def spc_povm(d: DetectorModel, n_max: int = 6) -> dict[str, PovmElement]:
    """Zero / one / many effects of a single-photon counter."""
    if d.kind != "single_photon_counter":
        raise InvalidDetectorModelError("spc_povm needs a single_photon_counter model")
    p0 = _zero_weights(d.eta, d.zeta, n_max)
    p1 = _one_weights(d.eta, d.zeta, n_max)
    return {
        "zero": PovmElement("zero", tuple(p0)),
        "one": PovmElement("one", tuple(p1)),
        "many": PovmElement("many", tuple(1 - p0 - p1)),
    }


def onoff_povm(d: DetectorModel, n_max: int = 6) -> dict[str, PovmElement]:
    """Zero / at-least-one effects of a bucket detector."""
    if d.kind != "on_off":
        raise InvalidDetectorModelError("onoff_povm needs an on_off model")
    p0 = _zero_weights(d.eta, d.zeta, n_max)
    return {
        "zero": PovmElement("zero", tuple(p0)),
        "at_least_one": PovmElement("at_least_one", tuple(1 - p0)),
    }


def perfect_povm(n_max: int = 6) -> dict[str, PovmElement]:
    e = np.eye(n_max + 1)
    return {
        "zero": PovmElement("zero", tuple(e[0])),
        "one": PovmElement("one", tuple(e[1])),
        "many": PovmElement("many", tuple(1 - e[0] - e[1])),
    }


@lru_cache(maxsize=256)
def _weights(d: DetectorModel, n_max: int) -> dict[str, tuple[float, ...]]:
    return {k: v.weights for k, v in d.povm(n_max).items()}


# ---------------------------------------------------------------------------
# polarization analysis of the clones


def analysis_rotation(spatial: str, q: InputQubit) -> ModeTransform:
    """Wave-plate rotation sending |psi> to H and |psi_bar> to V in one spatial mode."""
    u = np.vstack([q.vector().conj(), q.orthogonal().conj()])
    modes = (ModeLabel(spatial, "H"), ModeLabel(spatial, "V"))
    return ModeTransform(u, modes)


def arm_weight(d: DetectorModel, spatial: str, outcome_h: str, outcome_v: str) -> Callable[[FockBasisState], float]:
    """Diagonal weight of (H-arm outcome, V-arm outcome) on one spatial mode."""
    h, v = ModeLabel(spatial, "H"), ModeLabel(spatial, "V")

    def w(k: FockBasisState) -> float:
        return d.weight(outcome_h, k.occupation(h)) * d.weight(outcome_v, k.occupation(v))

    return w


def _outcomes(d: DetectorModel) -> tuple[str, ...]:
    return tuple(d.povm(1))


def measure_in_basis(rho: DensityOperator, spatial: str, q: InputQubit, d: DetectorModel) -> dict[tuple[str, str], float]:
    """Joint (psi-arm, psi_bar-arm) outcome probabilities for one output mode."""
    t = analysis_rotation(spatial, q)
    rotated = transform_density(rho, t)
    outs = _outcomes(d)
    return {
        (oh, ov): rotated.expectation_diagonal(arm_weight(d, spatial, oh, ov))
        for oh in outs
        for ov in outs
    }


@dataclass(frozen=True)
class CoincidenceTable:
    """c{ij}: clone 1 found in psi (i=1) or psi_bar (i=0), likewise j for clone 2."""

    c00: float
    c01: float
    c10: float
    c11: float

    @property
    def total(self) -> float:
        return self.c00 + self.c01 + self.c10 + self.c11


def coincidences(
    rho_out: DensityOperator,
    q: InputQubit,
    d: DetectorModel,
    modes: tuple[str, str] = ("1''", "2''"),
) -> CoincidenceTable:
    """Four-detector coincidences: exactly one detector of each analysis pair clicks."""
    m1, m2 = modes
    rotated = transform_density(transform_density(rho_out, analysis_rotation(m1, q)), analysis_rotation(m2, q))
    click, silent = d.click_outcome, "zero"
    psi1 = arm_weight(d, m1, click, silent)
    bar1 = arm_weight(d, m1, silent, click)
    psi2 = arm_weight(d, m2, click, silent)
    bar2 = arm_weight(d, m2, silent, click)
    c = {}
    for name, w1, w2 in (("c11", psi1, psi2), ("c10", psi1, bar2), ("c01", bar1, psi2), ("c00", bar1, bar2)):
        c[name] = rotated.expectation_diagonal(lambda k, w1=w1, w2=w2: w1(k) * w2(k))
    return CoincidenceTable(**c)


def fidelities_from_coincidences(t: CoincidenceTable) -> FidelityReport:
    p = t.total
    if p <= 0:
        raise ZeroDivisionError("no coincidences: the configuration is fully blocked")
    return FidelityReport((t.c11 + t.c10) / p, (t.c11 + t.c01) / p, p)
