"""Published reference values for the detector tables, kept next to their tolerances."""
from __future__ import annotations

import math

# absolute tolerances used by every table comparison
TOLERANCE = {"p_success": 0.005, "f1": 0.002, "f2": 0.002}

KIND_COLUMNS = ("single_photon_counter", "on_off")

# eta -> {kind: (P_success, F1, F2)}; zeta in {0, 1e-6}, gamma**2 = 0.01
TABLE1 = {
    1.00: {"single_photon_counter": (0.2552, 0.8594, 0.8594), "on_off": (0.2598, 0.8567, 0.8569)},
    0.90: {"single_photon_counter": (0.1357, 0.8591, 0.8592), "on_off": (0.1387, 0.8562, 0.8564)},
    0.80: {"single_photon_counter": (0.0671, 0.8588, 0.8589), "on_off": (0.0688, 0.8555, 0.8558)},
    0.70: {"single_photon_counter": (0.0302, 0.8583, 0.8584), "on_off": (0.0311, 0.8548, 0.8551)},
    0.60: {"single_photon_counter": (0.0120, 0.8576, 0.8578), "on_off": (0.0124, 0.8540, 0.8543)},
    0.50: {"single_photon_counter": (0.0041, 0.8567, 0.8569), "on_off": (0.0042, 0.8531, 0.8534)},
    0.40: {"single_photon_counter": (0.0011, 0.8555, 0.8558), "on_off": (0.0011, 0.8521, 0.8524)},
    0.30: {"single_photon_counter": (0.0002, 0.8540, 0.8543), "on_off": (0.0002, 0.8510, 0.8513)},
}

# zeta -> {kind: (P_success, F1, F2)}; eta = 1
TABLE2 = {
    1e-6: {"single_photon_counter": (0.2552, 0.8594, 0.8594), "on_off": (0.2598, 0.8567, 0.8569)},
    1e-5: {"single_photon_counter": (0.2552, 0.8594, 0.8594), "on_off": (0.2598, 0.8567, 0.8569)},
    1e-4: {"single_photon_counter": (0.2550, 0.8589, 0.8589), "on_off": (0.2598, 0.8566, 0.8568)},
    1e-3: {"single_photon_counter": (0.2536, 0.8543, 0.8543), "on_off": (0.2600, 0.8557, 0.8559)},
    1e-2: {"single_photon_counter": (0.2403, 0.8094, 0.8094), "on_off": (0.2620, 0.8470, 0.8472)},
    1e-1: {"single_photon_counter": (0.1409, 0.4724, 0.4724), "on_off": (0.2718, 0.7818, 0.7820)},
}

HEADLINE = {"MPCC": 0.8594, "UC": 0.8333, "PCC": 0.8536}
HEADLINE_TOLERANCE = 3e-4


def cell_diffs(rows, reference) -> list[dict]:
    """Compare result rows (dicts with key, kind, p_success, f1, f2) against a table.

    ``key`` is the row parameter (eta or zeta); returns one record per cell.
    """
    out = []
    for row in rows:
        ref = _lookup(reference, row["key"])[row["kind"]]
        for name, r in zip(("p_success", "f1", "f2"), ref):
            diff = row[name] - r
            out.append(
                {
                    "key": row["key"],
                    "kind": row["kind"],
                    "quantity": name,
                    "value": row[name],
                    "reference": r,
                    "diff": diff,
                    "tolerance": TOLERANCE[name],
                    "ok": abs(diff) <= TOLERANCE[name] + 1e-12,
                }
            )
    return out


def _lookup(reference, key):
    for k, v in reference.items():
        if math.isclose(k, key, rel_tol=1e-9, abs_tol=0):
            return v
    raise KeyError(key)
