"""JSON-ready reports with deterministic formatting.

Floats are rounded to 12 significant digits and anything below 1e-12 in
magnitude prints as 0, so reports are byte-stable across runs and across
equivalent gate completions.
"""
from __future__ import annotations

import itertools
import json
from typing import Mapping, Optional

import numpy as np

from . import causal, fr
from .assignment import CONSISTENCY_TOL
from .causal import Surface
from .qkernel import DensityOperator, StateVector, as_pure, partial_trace, purity_eigenvalue
from .qlogic import Deduction, assess_soundness, projection_weight, render, support, valuate
from .relstate import ChainResult

SIG_DIGITS = 12
ZERO_TOL = 1e-12


def num(x) -> float:
    x = float(x)
    if abs(x) < ZERO_TOL:
        return 0.0
    return float(f"{x:.{SIG_DIGITS}g}")


def cnum(z) -> list[float]:
    z = complex(z)
    return [num(z.real), num(z.imag)]


def dumps(report, pretty: bool = False) -> str:
    if pretty:
        return "\n".join(_pretty(report, 0)) + "\n"
    return json.dumps(report, sort_keys=True, ensure_ascii=False, separators=(",", ": "), indent=1) + "\n"


def _pretty(obj, depth):
    pad = "  " * depth
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v and not _flat(v):
                yield f"{pad}{k}:"
                yield from _pretty(v, depth + 1)
            else:
                yield f"{pad}{k}: {_scalar(v)}"
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat(v):
                yield f"{pad}-"
                yield from _pretty(v, depth + 1)
            else:
                yield f"{pad}- {_scalar(v)}"
    else:
        yield pad + _scalar(obj)


def _flat(v):
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) or
                                       (isinstance(x, list) and all(not isinstance(y, (dict, list)) for y in x))
                                       for x in v) and len(v) <= 12


def _scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    return json.dumps(v, ensure_ascii=False) if not isinstance(v, str) else v


# -- building blocks ---------------------------------------------------------

def surface_info(c, s: Surface) -> dict:
    info = {"fired": sorted(s.fired), "edges": sorted(s.edges)}
    name = c.name_of(s) if hasattr(c, "name_of") else None
    if name is not None:
        info["name"] = name
    return info


def _label(c, edge, k):
    labels = getattr(c, "basis_labels", {}).get(edge)
    return labels[k] if labels else str(k)


def state_terms(c, psi: StateVector) -> list[dict]:
    out = []
    for flat, idx in enumerate(itertools.product(*[range(d) for d in psi.dims])):
        amp = psi.amplitudes[flat]
        if abs(amp) < ZERO_TOL:
            continue
        ket = ",".join(_label(c, e, k) for e, k in zip(psi.labels, idx))
        out.append({"ket": f"|{ket}>", "amplitude": cnum(amp)})
    return out


def state_info(c, psi: StateVector) -> dict:
    psi = psi.phase_fixed()
    return {
        "labels": list(psi.labels),
        "dims": list(psi.dims),
        "amplitudes": [cnum(z) for z in psi.amplitudes],
        "terms": state_terms(c, psi),
    }


def density_info(rho: DensityOperator) -> dict:
    return {
        "labels": list(rho.labels),
        "matrix": [[cnum(z) for z in row] for row in rho.matrix],
        "eigenvalues": [num(x) for x in rho.eigenvalues()],
    }


# -- command reports ---------------------------------------------------------

def surfaces_report(c) -> dict:
    ss = causal.enumerate_surfaces(c.structure)
    return {"count": len(ss), "surfaces": [surface_info(c, s) for s in ss]}


def state_report(c, s: Surface) -> dict:
    return {"surface": surface_info(c, s), "state": state_info(c, c.state_on(s))}


def consistency_report(c, s1: Surface, s2: Surface) -> dict:
    shared = s1.edges & s2.edges
    r1 = partial_trace(c.state_on(s1), shared)
    r2 = partial_trace(c.state_on(s2), shared)
    dev = float(np.max(np.abs(r1.matrix - r2.matrix), initial=0.0))
    return {
        "surfaces": [surface_info(c, s1), surface_info(c, s2)],
        "shared_edges": sorted(shared),
        "max_deviation": num(dev),
        "consistent": dev <= CONSISTENCY_TOL,
    }


def chain_report(c, res: ChainResult) -> dict:
    links = []
    for link in res.links:
        item = {
            "from": link.edge_from,
            "to": link.edge_to,
            "surface": surface_info(c, link.surface),
            "input": [cnum(z) for z in link.input],
            "defined": link.density is not None,
        }
        if link.density is not None:
            item["density"] = density_info(link.density)
            item["purity_eigenvalue"] = num(link.purity)
            item["pure"] = link.pure is not None
            if link.pure is not None:
                item["state"] = state_info(c, link.pure)
        links.append(item)
    return {"edges": list(res.edges), "status": res.status, "flag_index": res.flag_index, "links": links}


def eval_report(c, p) -> dict:
    sup = support(p)
    s = causal.surface_containing(c.structure, sup)
    w = projection_weight(p, c)
    return {
        "proposition": render(p),
        "support": sorted(sup),
        "surface": surface_info(c, s),
        "weight": num(w),
        "norm": num(np.sqrt(w)),
        "value": valuate(p, c).value,
    }


def deduction_report(c, d: Deduction) -> dict:
    verdict = assess_soundness(d, c)
    steps = []
    for st, v in zip(d.steps, verdict.report.steps):
        steps.append({"rule": st.rule, "from": list(st.sources), "proposition": render(st.prop),
                      "valid": v.ok, "reason": v.reason})
    return {
        "name": d.name,
        "premises": [{"proposition": render(p), "value": val.value}
                     for p, val in zip(d.premises, verdict.premise_values)],
        "steps": steps,
        "valid_steps": verdict.report.n_valid,
        "conclusion": {"proposition": render(d.conclusion),
                       "value": verdict.conclusion_value.value if verdict.conclusion_value else None},
        "single_surface": verdict.single_surface,
        "verdict": verdict.kind,
    }


def fr_demo_report(c, deduction: Deduction) -> dict:
    """Everything the protocol reproduces, computed from a circuit and its deduction."""
    table = {name: num(f) for name, f in fr.verify_table1(c).items()}
    arg1 = fr.run_argument1(c)
    rho2 = fr.run_argument2(c)
    return {
        "reference_fidelity": table,
        "born_weights": {k: num(v) for k, v in fr.born_weights(c).items()},
        "argument1": chain_report(c, arg1),
        "argument2": {
            "from": fr.ARGUMENT2_EDGES[0],
            "to": fr.ARGUMENT2_EDGES[1],
            "density": density_info(rho2),
            "purity_eigenvalue": num(purity_eigenvalue(rho2)),
            "pure": as_pure(rho2) is not None,
        },
        "deduction": deduction_report(c, deduction),
    }
