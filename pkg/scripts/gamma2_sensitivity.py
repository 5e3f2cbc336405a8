"""Number of table cells outside tolerance as a function of gamma**2."""
import argparse

from mpclone.experiments import gamma2_sensitivity

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--gamma2", type=float, nargs="+", default=[0.0, 0.005, 0.01, 0.02])
ap.add_argument("--points", type=int, default=32)
ap.add_argument("--double-pair-weight", type=float, default=1.0)
ap.add_argument("--jobs", type=int, default=1)
args = ap.parse_args()

res = gamma2_sensitivity(tuple(args.gamma2), args.points, args.jobs, args.double_pair_weight)
print(f"{'gamma2':>8s} {'table1 misses':>14s} {'table2 misses':>14s}")
for g2, r in res.items():
    print(f"{g2:8g} {r['table1_misses']:>11d}/48 {r['table2_misses']:>11d}/36")
best = min(res, key=lambda g: res[g]["table1_misses"] + res[g]["table2_misses"])
print(f"best gamma2: {best:g}")
