"""Averaged fidelity and success probability over the (mu, nu) unit square."""
import argparse

import numpy as np

from mpclone.experiments import SweepSpec, sweep_mu_nu

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--grid", type=int, default=81)
ap.add_argument("--points", type=int, default=64)
ap.add_argument("--jobs", type=int, default=1)
ap.add_argument("--out", default="results/mu_nu_surface.csv")
args = ap.parse_args()

g = tuple(np.linspace(0, 1, args.grid))
res = sweep_mu_nu(SweepSpec(mu=g, nu=g, quadrature_points=args.points), jobs=args.jobs)
res.write(args.out)

rows = res.as_dicts()
centre = min(rows, key=lambda r: abs(r["mu"] - 0.5) + abs(r["nu"] - 0.5))
line = [r for r in rows if abs(r["mu"] + r["nu"] - 1) < 1e-9 and r["p_success"] > 0]
f_line = [r["f_avg"] for r in line if r["feasible"]]
print(f"wrote {args.out} ({len(rows)} points, {sum(not r['feasible'] for r in rows)} with clamped damping)")
print(f"P at mu = nu = 1/2: {centre['p_success']:.3g}")
print(f"F_avg on the feasible part of mu + nu = 1: {min(f_line):.6f} .. {max(f_line):.6f}")
