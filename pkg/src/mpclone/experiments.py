"""Sweeps and input averages behind the fidelity surfaces and detector tables.

Output layout: ``SweepResult.to_csv`` writes one header row followed by one
row per grid point, in grid order, floats in shortest round-trip form.
``to_json`` writes ``{"metadata": {...}, "rows": [{column: value}, ...]}``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analytic import (
    PCC,
    UC,
    CloneParameter,
    FidelityReport,
    InputQubit,
    lambda_from_a2,
    lambda_from_theta,
)
from .detectors import (
    CoincidenceTable,
    DetectorModel,
    coincidences,
    fidelities_from_coincidences,
)
from .optics import (
    MU0,
    NU0,
    InfeasibleConfigurationError,
    PdbsConfig,
    SpdcConfig,
    clone_density,
)
from .reference import TABLE1, TABLE2, TOLERANCE

CLONER_KINDS = ("UC", "PCC", "MPCC", "a2")
DEFAULT_QUADRATURE = 64
DEFAULT_GRID = 81


@dataclass(frozen=True)
class ClonerSpec:
    """UC, PCC, MPCC (tuned to each input unless ``theta`` is fixed) or a Legendre a2 value."""

    kind: str = "MPCC"
    theta: float | None = None
    a2: float | None = None

    def __post_init__(self):
        if self.kind not in CLONER_KINDS:
            raise ValueError(f"unknown cloner {self.kind!r}")
        if self.kind == "a2" and self.a2 is None:
            raise ValueError("cloner 'a2' needs a value for a2")

    def parameter(self, theta_input: float) -> CloneParameter:
        if self.kind == "UC":
            return UC
        if self.kind == "PCC":
            return PCC
        if self.kind == "a2":
            return lambda_from_a2(self.a2)
        return lambda_from_theta(theta_input if self.theta is None else self.theta)


@dataclass(frozen=True)
class EvalConfig:
    cloner: ClonerSpec = ClonerSpec()
    spdc: SpdcConfig = SpdcConfig.from_gamma2(0.01)
    splitter: PdbsConfig = PdbsConfig()
    detector: DetectorModel = DetectorModel()
    # clamp an infeasible damping to |kappa| = 1 instead of raising
    clamp: bool = False


@dataclass(frozen=True)
class CloneReport:
    f1: float
    f2: float
    p_success: float
    table: CoincidenceTable
    kappa: float
    feasible: bool = True

    @property
    def f_avg(self) -> float:
        return 0.5 * (self.f1 + self.f2)


def resolve_kappa(p: CloneParameter, splitter: PdbsConfig, clamp: bool = False) -> tuple[float, bool]:
    """Signed damping for ``p`` behind ``splitter`` and whether it is realisable.

    Off the mu + nu = 1 line the same expression is evaluated at the actual
    (mu, nu); it no longer restores the ideal cloner there.
    """
    mu, nu = splitter.mu, splitter.nu
    num = p.lam_bar * (1 - 2 * mu)
    denom = p.lam * math.sqrt(2 * mu * nu)
    if denom == 0:
        kappa = 0.0 if num == 0 else math.copysign(math.inf, num)
    else:
        kappa = num / denom
    if abs(kappa) <= 1 + 1e-12:
        return max(-1.0, min(1.0, kappa)), True
    if not clamp:
        raise InfeasibleConfigurationError(f"|kappa|={abs(kappa):.6g} > 1 at mu={mu}, nu={nu}")
    return math.copysign(1.0, kappa), False


def evaluate(q: InputQubit, cfg: EvalConfig) -> CloneReport:
    """Full optical chain plus coincidence analysis for one input state."""
    p = cfg.cloner.parameter(q.theta)
    kappa, ok = resolve_kappa(p, cfg.splitter, cfg.clamp)
    rho = clone_density(q, p, cfg.spdc, cfg.splitter, cfg.detector, kappa=kappa)
    t = coincidences(rho, q, cfg.detector)
    if t.total <= 0:
        return CloneReport(math.nan, math.nan, 0.0, t, kappa, ok)
    r = fidelities_from_coincidences(t)
    return CloneReport(r.f1, r.f2, r.p_success, t, kappa, ok)


def haar_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in cos(theta); weights sum to one (sin(theta)/2 measure)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return np.arccos(x), w / 2


def average_over_inputs(cfg: EvalConfig, quadrature_points: int = DEFAULT_QUADRATURE) -> FidelityReport:
    """Haar average of F1, F2 and P_success over input states.

    Pipeline outputs do not depend on the azimuth delta, so only theta is
    integrated. Inputs with no coincidences contribute to P only.
    """
    if quadrature_points < 16:
        raise ValueError("quadrature_points must be at least 16")
    thetas, weights = haar_nodes(quadrature_points)
    reports = [evaluate(InputQubit(float(t)), cfg) for t in thetas]
    return _combine(reports, weights)


def _combine(reports, weights) -> FidelityReport:
    p = float(sum(w * r.p_success for r, w in zip(reports, weights)))
    live = [(r, w) for r, w in zip(reports, weights) if r.p_success > 0]
    if not live:
        return FidelityReport(math.nan, math.nan, p)
    wsum = sum(w for _, w in live)
    f1 = sum(w * r.f1 for r, w in live) / wsum
    f2 = sum(w * r.f2 for r, w in live) / wsum
    return FidelityReport(float(f1), float(f2), p)


# ---------------------------------------------------------------------------
# vectorized coincidences for perfect detectors and a single photon pair


def _pdbs_columns(mu: float, nu: float) -> dict[str, np.ndarray]:
    # rows: 1'H, 1'V, 2'H, 2'V
    sm, cm, sn, cn = math.sqrt(mu), math.sqrt(1 - mu), math.sqrt(nu), math.sqrt(1 - nu)
    return {
        "1H": np.array([cm, 0, -sm, 0]),
        "1V": np.array([0, cn, 0, sn]),
        "2H": np.array([sm, 0, cm, 0]),
        "2V": np.array([0, sn, 0, -cn]),
    }


def ideal_coincidences(thetas, lams, mu: float, nu: float, clamp: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C[ij] for perfect detectors and order-2 SPDC, vectorized over inputs.

    Returns (C with shape (n, 2, 2) indexed [i, j] with 1 = psi, 0 = psi_bar,
    kappa per input, feasibility per input). Reproduces ``evaluate`` in that
    regime to rounding; used where the full pipeline would be too slow.
    """
    thetas = np.asarray(thetas, dtype=float)
    lams = np.asarray(lams, dtype=float)
    cols = _pdbs_columns(mu, nu)
    a, b = np.cos(thetas / 2), np.sin(thetas / 2)
    psi = np.stack([a, b], axis=1)
    bar = np.stack([-b, a], axis=1)
    vecs = np.stack([bar, psi], axis=1)  # [n, i, pol]
    two = a[:, None] * cols["2H"] + b[:, None] * cols["2V"]

    kap = np.empty_like(thetas)
    ok = np.empty(thetas.shape, dtype=bool)
    for n, lam in enumerate(lams):
        kap[n], ok[n] = resolve_kappa(CloneParameter(float(lam)), PdbsConfig(mu, nu), clamp)

    c = np.zeros((len(thetas), 2, 2))
    # mode-0 H pairs with a V photon in mode 1 and fires H damping; likewise V
    for one, damp_pol in ((cols["1V"], 0), (cols["1H"], 1)):
        m1 = np.broadcast_to(one, two.shape)
        # two-photon amplitude on (1' pol x, 2' pol y)
        amp = m1[:, :2, None] * two[:, None, 2:] + two[:, :2, None] * m1[:, None, 2:]
        f = np.ones((len(thetas), 2))
        f[:, damp_pol] = kap if damp_pol == 0 else -kap
        amp = amp * f[:, :, None] * f[:, None, :]
        proj = np.einsum("nix,nxy,njy->nij", vecs, amp, vecs)
        c += 0.5 * np.abs(proj) ** 2
    return c, kap, ok


def _ideal_reports(thetas, cloner: ClonerSpec, mu: float, nu: float):
    lams = [cloner.parameter(float(t)).lam for t in thetas]
    c, kap, ok = ideal_coincidences(thetas, lams, mu, nu)
    p = c.sum(axis=(1, 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = (c[:, 1, 1] + c[:, 1, 0]) / p
        f2 = (c[:, 1, 1] + c[:, 0, 1]) / p
    out = []
    for n in range(len(thetas)):
        t = CoincidenceTable(c[n, 0, 0], c[n, 0, 1], c[n, 1, 0], c[n, 1, 1])
        out.append(CloneReport(float(f1[n]), float(f2[n]), float(p[n]), t, float(kap[n]), bool(ok[n])))
    return out


# ---------------------------------------------------------------------------
# sweep description and results


@dataclass(frozen=True)
class SweepSpec:
    mu: tuple[float, ...] = (MU0,)
    nu: tuple[float, ...] = (NU0,)
    eta: tuple[float, ...] = (1.0,)
    zeta: tuple[float, ...] = (0.0,)
    gamma2: tuple[float, ...] = (0.01,)
    theta: tuple[float, ...] | None = None  # fixed inputs instead of the Haar average
    detector: str = "perfect"
    cloner: ClonerSpec = ClonerSpec()
    quadrature_points: int = DEFAULT_QUADRATURE
    spdc_order: int = 2
    double_pair_weight: float = 1.0

    def __post_init__(self):
        for name in ("mu", "nu", "eta", "zeta", "gamma2"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"grid {name!r} is empty")
            object.__setattr__(self, name, vals)
        if self.theta is not None:
            if not self.theta:
                raise ValueError("grid 'theta' is empty")
            object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if any(not 0 <= v <= 1 for v in self.mu + self.nu + self.eta):
            raise ValueError("mu, nu, eta must lie in [0, 1]")
        if any(v < 0 for v in self.zeta) or any(not 0 <= v <= 0.1 for v in self.gamma2):
            raise ValueError("zeta must be >= 0 and gamma2 in [0, 0.1]")
        if self.quadrature_points < 16:
            raise ValueError("quadrature_points must be at least 16")
        if self.detector == "perfect" and (set(self.eta) != {1.0} or set(self.zeta) != {0.0}):
            raise ValueError("perfect detectors need eta = 1 and zeta = 0")
        DetectorModel(self.detector, 1.0, 0.0)

    def points(self):
        return list(itertools.product(self.mu, self.nu, self.eta, self.zeta, self.gamma2))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cloner"] = asdict(self.cloner)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        if isinstance(d.get("cloner"), dict):
            d["cloner"] = ClonerSpec(**d["cloner"])
        for k in ("mu", "nu", "eta", "zeta", "gamma2", "theta"):
            if k in d and d[k] is not None:
                v = d[k]
                d[k] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        return cls(**d)


RESULT_COLUMNS = ("mu", "nu", "eta", "zeta", "gamma2", "f1", "f2", "f_avg", "p_success", "kappa_min", "kappa_max", "feasible")


@dataclass
class SweepResult:
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{k: _jsonable(v) for k, v in zip(self.columns, r)} for r in self.rows]
        return json.dumps({"metadata": self.metadata, "rows": rows}, indent=1, allow_nan=True)

    def write(self, path: str | Path, fmt: str = "csv") -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json())
        return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def config_hash(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _metadata(kind: str, config: dict, **extra) -> dict:
    return {
        "kind": kind,
        "config": config,
        "config_hash": config_hash(config),
        "tolerances": dict(TOLERANCE),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        **extra,
    }


def _eval_point(args) -> tuple:
    spec, (mu, nu, eta, zeta, g2) = args
    splitter = PdbsConfig(mu, nu)
    if spec.theta is None:
        thetas, weights = haar_nodes(spec.quadrature_points)
    else:
        thetas, weights = np.array(spec.theta), np.full(len(spec.theta), 1 / len(spec.theta))
    if spec.detector == "perfect" and spec.spdc_order == 2:
        reports = _ideal_reports(thetas, spec.cloner, mu, nu)
    else:
        cfg = EvalConfig(
            spec.cloner,
            SpdcConfig.from_gamma2(g2, order=spec.spdc_order, double_pair_weight=spec.double_pair_weight),
            splitter,
            DetectorModel(spec.detector, eta, zeta),
            clamp=True,
        )
        reports = [evaluate(InputQubit(float(t)), cfg) for t in thetas]
    r = _combine(reports, weights)
    kaps = [abs(x.kappa) for x in reports]
    feasible = all(x.feasible for x in reports)
    return (mu, nu, eta, zeta, g2, r.f1, r.f2, r.f_avg, r.p_success, min(kaps), max(kaps), feasible)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Evaluate every grid point; rows come back in grid order whatever ``jobs`` is."""
    tasks = [(spec, pt) for pt in spec.points()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_eval_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_eval_point(t) for t in tasks]
    return SweepResult(RESULT_COLUMNS, rows, _metadata("sweep", spec.to_dict()))


def sweep_mu_nu(spec: SweepSpec | None = None, n: int = DEFAULT_GRID, jobs: int = 1) -> SweepResult:
    """Averaged fidelities and success rate on a (mu, nu) grid covering the unit square.

    Infeasible damping is clamped to |kappa| = 1 and the row marked
    ``feasible = False``.
    """
    if spec is None:
        grid = tuple(np.linspace(0, 1, n))
        spec = SweepSpec(mu=grid, nu=grid)
    return run_sweep(spec, jobs)


def balanced_line(mus, cloner: ClonerSpec = ClonerSpec(), quadrature_points: int = DEFAULT_QUADRATURE) -> SweepResult:
    """Sweep along nu = 1 - mu."""
    res = [_eval_point((SweepSpec(cloner=cloner, quadrature_points=quadrature_points), (m, 1 - m, 1.0, 0.0, 0.0))) for m in mus]
    return SweepResult(RESULT_COLUMNS, res, _metadata("balanced_line", {"mu": list(map(float, mus))}))


# ---------------------------------------------------------------------------
# detector tables

TABLE_COLUMNS = ("key", "kind", "eta", "zeta", "gamma2", "p_success", "f1", "f2")
TABLE_KINDS = ("single_photon_counter", "on_off")


def _table(points, kinds, gamma2: float, quadrature_points: int, jobs: int, double_pair_weight: float) -> list[tuple]:
    tasks = []
    for key, eta, zeta in points:
        for kind in kinds:
            spec = SweepSpec(
                eta=(eta,), zeta=(zeta,), gamma2=(gamma2,), detector=kind,
                quadrature_points=quadrature_points, spdc_order=3, double_pair_weight=double_pair_weight,
            )
            tasks.append((key, kind, spec))

    args = [(s, s.points()[0]) for _, _, s in tasks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            vals = list(ex.map(_eval_point, args))
    else:
        vals = [_eval_point(a) for a in args]
    rows = []
    for (key, kind, _), v in zip(tasks, vals):
        _, _, eta, zeta, g2, f1, f2, _, p = v[:9]
        rows.append((key, kind, eta, zeta, g2, p, f1, f2))
    return rows


def table_detector_efficiency(
    etas=tuple(TABLE1),
    kinds=TABLE_KINDS,
    gamma2: float = 0.01,
    zeta: float = 1e-6,
    quadrature_points: int = DEFAULT_QUADRATURE,
    jobs: int = 1,
    double_pair_weight: float = 1.0,
) -> SweepResult:
    """P_success, F1, F2 per efficiency and detector kind (order-3 source)."""
    rows = _table([(e, e, zeta) for e in etas], kinds, gamma2, quadrature_points, jobs, double_pair_weight)
    cfg = {
        "etas": list(etas), "kinds": list(kinds), "gamma2": gamma2, "zeta": zeta,
        "quadrature_points": quadrature_points, "double_pair_weight": double_pair_weight,
    }
    return SweepResult(TABLE_COLUMNS, rows, _metadata("table1", cfg))


def table_dark_counts(
    zetas=tuple(TABLE2),
    kinds=TABLE_KINDS,
    gamma2: float = 0.01,
    eta: float = 1.0,
    quadrature_points: int = DEFAULT_QUADRATURE,
    jobs: int = 1,
    double_pair_weight: float = 1.0,
) -> SweepResult:
    """P_success, F1, F2 per dark-count rate and detector kind at unit efficiency."""
    rows = _table([(z, eta, z) for z in zetas], kinds, gamma2, quadrature_points, jobs, double_pair_weight)
    cfg = {
        "zetas": list(zetas), "kinds": list(kinds), "gamma2": gamma2, "eta": eta,
        "quadrature_points": quadrature_points, "double_pair_weight": double_pair_weight,
    }
    return SweepResult(TABLE_COLUMNS, rows, _metadata("table2", cfg))


def gamma2_sensitivity(
    gamma2s=(0.0, 0.005, 0.01, 0.02), quadrature_points: int = 32, jobs: int = 1, double_pair_weight: float = 1.0
) -> dict:
    """Both tables at each gamma**2, with the number of cells outside tolerance."""
    from .reference import cell_diffs

    out = {}
    for g2 in gamma2s:
        kw = dict(gamma2=g2, quadrature_points=quadrature_points, jobs=jobs, double_pair_weight=double_pair_weight)
        t1 = table_detector_efficiency(**kw)
        t2 = table_dark_counts(**kw)
        d1, d2 = cell_diffs(t1.as_dicts(), TABLE1), cell_diffs(t2.as_dicts(), TABLE2)
        out[g2] = {
            "table1_misses": sum(not c["ok"] for c in d1),
            "table2_misses": sum(not c["ok"] for c in d2),
            "table1": t1,
            "table2": t2,
        }
    return out
