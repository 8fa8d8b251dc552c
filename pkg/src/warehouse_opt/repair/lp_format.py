"""LP text export for repair models.

Produces the classic LP file dialect (Minimize / Subject To / Bounds /
Binaries / End) with fully deterministic ordering and naming, so any
external solver can consume a model and return an assignment by name.
"""

from __future__ import annotations

import math

from .model import RepairModel

_SENSE = {"=": "=", "<=": "<=", ">=": ">="}


def _num(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(x)


def _terms(pairs, names) -> str:
    parts = []
    for idx, coef in pairs:
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        term = names[idx] if mag == 1 else f"{_num(mag)} {names[idx]}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0"
    return " ".join(parts)


def export_lp(model: RepairModel) -> str:
    """Serialize ``model`` to LP text; identical models yield identical
    bytes."""
    names = model.var_names
    out = []
    out.append("\\ layout repair model: "
               f"{model.layout.height}x{model.layout.width} grid, "
               f"{model.scenario.label} scenario, "
               f"N_s={model.n_s} N_w={model.n_w} N_h={model.n_h}")
    out.append("Minimize")
    obj = _terms(
        ((i, c) for i, c in enumerate(model.objective)), names)
    if model.objective_const:
        obj += f" + {_num(model.objective_const)}"
    out.append(f" obj: {obj}")
    out.append("Subject To")
    for row in model.constraints:
        out.append(f" {row.name}: {_terms(row.terms, names)} "
                   f"{_SENSE[row.sense]} {_num(row.rhs)}")
    out.append("Bounds")
    for i, name in enumerate(names):
        lo, hi = model.lower[i], model.upper[i]
        if model.integrality[i]:
            default_lo, default_hi = 0.0, 1.0
        else:
            default_lo, default_hi = 0.0, math.inf
        if (lo, hi) == (default_lo, default_hi):
            continue
        if lo == hi:
            out.append(f" {name} = {_num(lo)}")
        elif math.isinf(hi):
            out.append(f" {name} >= {_num(lo)}")
        else:
            out.append(f" {_num(lo)} <= {name} <= {_num(hi)}")
    out.append("Binaries")
    binaries = [n for i, n in enumerate(names) if model.integrality[i]]
    for k in range(0, len(binaries), 8):
        out.append(" " + " ".join(binaries[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
