"""Analytic and simulated averages for UC, PCC and MPCC under perfect detection."""
import argparse

from mpclone.analytic import (
    PCC,
    UC,
    QubitDistribution,
    average_fidelity,
    mpcc_average_fidelity,
)
from mpclone.experiments import ClonerSpec, EvalConfig, average_over_inputs
from mpclone.optics import SpdcConfig

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--points", type=int, default=64, help="quadrature points in cos(theta)")
args = ap.parse_args()

analytic = {
    "UC": average_fidelity(QubitDistribution.universal(), UC),
    "PCC (equator)": average_fidelity(QubitDistribution.phase_covariant(), PCC),
    "MPCC": mpcc_average_fidelity(),
}
for name, f in analytic.items():
    print(f"{name:14s} analytic F = {f:.6f}")

pair = SpdcConfig(order=2)
for kind in ("UC", "PCC", "MPCC"):
    r = average_over_inputs(EvalConfig(ClonerSpec(kind), pair), args.points)
    print(f"{kind:14s} pipeline F1 = {r.f1:.6f}  F2 = {r.f2:.6f}  P = {r.p_success:.6f}  (Haar average)")
