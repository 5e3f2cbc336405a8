"""Command-line front end.

    mpclone fidelity [--config FILE]
    mpclone reproduce {table1,table2,fig3,fig4} [--out DIR] [--format csv|json] [--jobs N]
    mpclone sweep SPEC_FILE [--out DIR] [--format csv|json] [--jobs N]
    mpclone validate

Exit codes: 0 ok, 1 tolerance or validation failure, 2 usage or configuration error.
The default output directory is taken from ``MPCLONE_OUT`` (else ``./results``).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from . import experiments as ex
from .analytic import (
    InputQubit,
    QubitDistribution,
    average_fidelity,
    single_copy_fidelity,
)
from .detectors import KINDS, DetectorModel, InvalidDetectorModelError
from .optics import MU0, NU0, InfeasibleConfigurationError, PdbsConfig, SpdcConfig
from .reference import TABLE1, TABLE2, cell_diffs

OUT_ENV = "MPCLONE_OUT"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat run configuration; every key is optional in the file.

    ``eta`` and ``zeta`` apply to the counter and ON/OFF detector kinds; a
    perfect detector always has eta = 1, zeta = 0.
    """

    cloner: str = "MPCC"
    cloner_theta: float | None = None  # fix the MPCC tuning instead of matching each input
    a2: float | None = None
    theta: float | None = None  # single input state; None averages over the sphere
    delta: float = 0.0
    gamma2: float = 0.01
    phi: float = 0.0
    spdc_order: int = 3
    double_pair_weight: float = 1.0
    mu: float = MU0
    nu: float = NU0
    detector: str = "perfect"
    eta: float = 1.0
    zeta: float = 1e-6
    quadrature_points: int = ex.DEFAULT_QUADRATURE
    grid: int = ex.DEFAULT_GRID
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.detector not in KINDS:
            raise ConfigError(f"unknown detector {self.detector!r}")
        try:
            self.cloner_spec()
            self.spdc_config()
            self.pdbs_config()
            self.detector_model()
        except (ValueError, InvalidDetectorModelError) as e:
            raise ConfigError(str(e)) from e

    def cloner_spec(self) -> ex.ClonerSpec:
        return ex.ClonerSpec(self.cloner, self.cloner_theta, self.a2)

    def spdc_config(self) -> SpdcConfig:
        return SpdcConfig.from_gamma2(self.gamma2, self.phi, self.spdc_order, self.double_pair_weight)

    def pdbs_config(self) -> PdbsConfig:
        return PdbsConfig(self.mu, self.nu)

    def detector_model(self) -> DetectorModel:
        if self.detector == "perfect":
            return DetectorModel.perfect()
        return DetectorModel(self.detector, self.eta, self.zeta)

    def eval_config(self) -> ex.EvalConfig:
        return ex.EvalConfig(self.cloner_spec(), self.spdc_config(), self.pdbs_config(), self.detector_model())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> "RunConfig":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for k, v in d.items():
            d[k] = _coerce(k, v)
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(_parse_mapping(text))


FLOAT_KEYS = {"cloner_theta", "a2", "theta", "delta", "gamma2", "phi", "double_pair_weight", "mu", "nu", "eta", "zeta"}
INT_KEYS = {"spdc_order", "quadrature_points", "grid"}


def _coerce(key: str, v):
    # YAML 1.1 reads 1e-6 (no decimal point) as a string
    if v is None or isinstance(v, bool):
        return v
    try:
        if key in FLOAT_KEYS:
            return float(v)
        if key in INT_KEYS:
            if isinstance(v, float) and not v.is_integer():
                raise ValueError
            return int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None
    return v


def _parse_mapping(text: str) -> dict:
    try:
        d = json.loads(text)
    except ValueError:
        try:
            d = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse configuration: {e}") from e
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a key-value mapping")
    return d


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return RunConfig.loads(text)


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.out or os.environ.get(OUT_ENV) or "results")


# ---------------------------------------------------------------------------
# verbs


def _oracle(cfg: RunConfig) -> tuple[float, float]:
    """Closed-form F and P for the configured cloner (P assumes perfect detectors)."""
    spec = cfg.cloner_spec()
    if cfg.theta is not None:
        p = spec.parameter(cfg.theta)
        f = single_copy_fidelity(cfg.theta, p)
        prob = (1 - 2 * cfg.mu) ** 2 / (2 * p.lam**2)
        return f, prob
    f = average_fidelity(QubitDistribution.universal(), spec.parameter)
    thetas, w = ex.haar_nodes(cfg.quadrature_points)
    prob = sum(wi * (1 - 2 * cfg.mu) ** 2 / (2 * spec.parameter(float(t)).lam ** 2) for t, wi in zip(thetas, w))
    return f, float(prob)


def cmd_fidelity(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    ecfg = cfg.eval_config()
    if cfg.theta is not None:
        r = ex.evaluate(InputQubit(cfg.theta, cfg.delta), ecfg)
        sim = (r.f1, r.f2, r.f_avg, r.p_success)
    else:
        r = ex.average_over_inputs(ecfg, cfg.quadrature_points)
        sim = (r.f1, r.f2, r.f_avg, r.p_success)
    f, p = _oracle(cfg)
    balanced = cfg.pdbs_config().balanced_for_mpcc
    ora = (f, f, f, p if balanced else math.nan)
    print(f"{'':10s} {'analytic':>12s} {'simulation':>12s} {'difference':>12s}", file=out)
    for name, a, s in zip(("F1", "F2", "F_avg", "P_success"), ora, sim):
        print(f"{name:10s} {a:12.6f} {s:12.6f} {s - a:12.2e}", file=out)
    if cfg.detector != "perfect" or cfg.spdc_order == 3:
        print("note: the analytic P_success assumes perfect detectors and a single photon pair", file=out)
    return EXIT_OK


def _write(result: ex.SweepResult, out_dir: Path, stem: str, fmt: str) -> Path:
    return result.write(out_dir / f"{stem}.{fmt}", fmt)


def _report_table(result: ex.SweepResult, reference, out_dir: Path, stem: str, out) -> int:
    diffs = cell_diffs(result.as_dicts(), reference)
    lines = [f"{'key':>8s} {'kind':22s} {'quantity':10s} {'value':>9s} {'ref':>7s} {'diff':>9s} {'tol':>6s}  status"]
    for c in diffs:
        lines.append(
            f"{c['key']:8g} {c['kind']:22s} {c['quantity']:10s} {c['value']:9.4f} {c['reference']:7.4f} "
            f"{c['diff']:+9.4f} {c['tolerance']:6.3f}  {'ok' if c['ok'] else 'MISS'}"
        )
    misses = sum(not c["ok"] for c in diffs)
    lines.append(f"{len(diffs) - misses}/{len(diffs)} cells within tolerance")
    text = "\n".join(lines) + "\n"
    (out_dir / f"{stem}_diff.txt").write_text(text)
    print(text, end="", file=out)
    return EXIT_OK if misses == 0 else EXIT_FAIL


def cmd_reproduce(target: str, cfg: RunConfig, out_dir: Path, fmt: str, jobs: int, out=None) -> int:
    out = out or sys.stdout
    out_dir.mkdir(parents=True, exist_ok=True)
    if target == "table1":
        res = ex.table_detector_efficiency(
            gamma2=cfg.gamma2, zeta=cfg.zeta, quadrature_points=cfg.quadrature_points, jobs=jobs,
            double_pair_weight=cfg.double_pair_weight,
        )
        print(f"wrote {_write(res, out_dir, 'table1', fmt)}", file=out)
        return _report_table(res, TABLE1, out_dir, "table1", out)
    if target == "table2":
        res = ex.table_dark_counts(
            gamma2=cfg.gamma2, quadrature_points=cfg.quadrature_points, jobs=jobs,
            double_pair_weight=cfg.double_pair_weight,
        )
        print(f"wrote {_write(res, out_dir, 'table2', fmt)}", file=out)
        return _report_table(res, TABLE2, out_dir, "table2", out)
    if target in ("fig3", "fig4"):
        grid = tuple(np.linspace(0, 1, cfg.grid))
        spec = ex.SweepSpec(mu=grid, nu=grid, cloner=cfg.cloner_spec(), quadrature_points=cfg.quadrature_points)
        res = ex.sweep_mu_nu(spec, jobs=jobs)
        print(f"wrote {_write(res, out_dir, target, fmt)}", file=out)
        rows = res.as_dicts()
        centre = min(rows, key=lambda r: abs(r["mu"] - 0.5) + abs(r["nu"] - 0.5))
        best_f = max(rows, key=lambda r: -1 if math.isnan(r["f_avg"]) else r["f_avg"])
        print(f"P_success at mu=nu=1/2: {centre['p_success']:.3g}", file=out)
        print(f"max F_avg {best_f['f_avg']:.6f} at mu={best_f['mu']:.4f}, nu={best_f['nu']:.4f}", file=out)
        return EXIT_OK if abs(centre["p_success"]) < 1e-12 else EXIT_FAIL
    raise ConfigError(f"unknown target {target!r}")


def cmd_sweep(spec_path: str, out_dir: Path, fmt: str, jobs: int, out=None) -> int:
    out = out or sys.stdout
    try:
        spec = ex.SweepSpec.from_dict(_parse_mapping(Path(spec_path).read_text()))
    except OSError as e:
        raise ConfigError(f"cannot read {spec_path}: {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    res = ex.run_sweep(spec, jobs)
    print(f"wrote {_write(res, out_dir, Path(spec_path).stem, fmt)}", file=out)
    return EXIT_OK


def cmd_validate(out=None) -> int:
    out = out or sys.stdout
    from . import validation

    results = validation.run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} properties pass", file=out)
    return EXIT_OK if failed == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML key-value configuration file")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    p = argparse.ArgumentParser(prog="mpclone", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("fidelity", parents=[common], help="F1, F2, P_success for one configuration")
    r = sub.add_parser("reproduce", parents=[common], help="regenerate a table or figure surface")
    r.add_argument("target", choices=("table1", "table2", "fig3", "fig4"))
    s = sub.add_parser("sweep", parents=[common], help="run a sweep described by a spec file")
    s.add_argument("spec_file")
    sub.add_parser("validate", parents=[common], help="run the invariant checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        fmt = args.format or cfg.format
        if args.jobs < 1:
            raise ConfigError("--jobs must be positive")
        if args.verb == "fidelity":
            return cmd_fidelity(cfg)
        if args.verb == "reproduce":
            return cmd_reproduce(args.target, cfg, _out_dir(args, cfg), fmt, args.jobs)
        if args.verb == "sweep":
            return cmd_sweep(args.spec_file, _out_dir(args, cfg), fmt, args.jobs)
        return cmd_validate()
    except (ConfigError, InfeasibleConfigurationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
