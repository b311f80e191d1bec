"""Consistent state assignments generated by unitary circuits.

A :class:`CircuitAssignment` binds a dimension to each edge, a unitary to
each vertex (mapping the vertex's ordered inputs to its ordered outputs), and
an initial state to the sourceless cut. The state on any other surface is the
initial state pushed through the fired vertices.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import causal
from .causal import CausalStructure, EdgeId, Surface, VertexId
from .errors import DimensionMismatch, UnknownSurface, ValidationError
from .qkernel import (
    NORM_TOL,
    StateVector,
    apply_on_factors,
    complete_isometry,
    gram_schmidt_completion,
    is_unitary,
    partial_trace,
)

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CircuitAssignment:
    structure: CausalStructure
    dims: Mapping[EdgeId, int]
    gates: Mapping[VertexId, np.ndarray]
    initial: StateVector
    basis_labels: Mapping[EdgeId, tuple[str, ...]] = field(default_factory=dict)
    surface_names: Mapping[str, frozenset[VertexId]] = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", dict(self.dims))
        object.__setattr__(self, "gates", {v: np.asarray(u, dtype=complex) for v, u in self.gates.items()})
        object.__setattr__(self, "basis_labels", {e: tuple(b) for e, b in self.basis_labels.items()})
        object.__setattr__(self, "surface_names",
                           {k: frozenset(v) for k, v in self.surface_names.items()})
        problems = assignment_problems(self)
        if problems:
            raise ValidationError("; ".join(problems))

    def surface(self, name_or_fired) -> Surface:
        """Resolve a surface by user-assigned name or by its fired-vertex set."""
        if isinstance(name_or_fired, Surface):
            return name_or_fired
        if isinstance(name_or_fired, str):
            if name_or_fired not in self.surface_names:
                raise UnknownSurface(f"no surface named {name_or_fired!r}")
            return causal.surface_from_downset(self.structure, self.surface_names[name_or_fired])
        return causal.surface_from_downset(self.structure, name_or_fired)

    def name_of(self, s: Surface) -> Optional[str]:
        for name, fired in sorted(self.surface_names.items()):
            if fired == s.fired:
                return name
        return None

    def state_on(self, s: Surface) -> StateVector:
        key = s.fired
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        g = self.structure
        if not key <= set(g.vertex_map) or g.down_closure(key) != key:
            raise UnknownSurface(f"{sorted(key)} is not a surface of this structure")
        psi = self.initial
        for v in causal.linearize(g, key):
            psi = evolve_vertex(self, v, psi)
        with self._lock:
            self._memo.setdefault(key, psi)
        return self._memo[key]


def assignment_problems(c: CircuitAssignment) -> list[str]:
    g = c.structure
    report = causal.validate(g)
    if report:
        return [v.message for v in report.violations]
    out = []
    for e in g.edge_ids:
        d = c.dims.get(e)
        if not isinstance(d, (int, np.integer)) or d < 1:
            out.append(f"edge {e!r} needs a positive integer dimension, got {d!r}")
    if out:
        return out
    for v in g.vertices:
        din = math.prod(c.dims[e] for e in v.inputs)
        dout = math.prod(c.dims[e] for e in v.outputs)
        if din != dout:
            out.append(f"vertex {v.id!r}: product of input dimensions ({din}) differs from "
                       f"product of output dimensions ({dout})")
            continue
        u = c.gates.get(v.id)
        if u is None:
            out.append(f"vertex {v.id!r} has no gate")
        elif u.shape != (din, din):
            out.append(f"vertex {v.id!r}: gate shape {u.shape} but inputs span dimension {din}")
        elif not is_unitary(u):
            out.append(f"vertex {v.id!r}: gate is not unitary")
    s0 = causal.initial_surface(g)
    init = c.initial
    if set(init.labels) != set(s0.edges):
        out.append(f"initial state factors {list(init.labels)} differ from the sourceless "
                   f"edges {sorted(s0.edges)}")
    else:
        for lab, d in zip(init.labels, init.dims):
            if c.dims[lab] != d:
                out.append(f"initial state gives edge {lab!r} dimension {d}, expected {c.dims[lab]}")
        if not init.is_normalized():
            out.append(f"initial state has norm {init.norm}")
    for e, labels in c.basis_labels.items():
        if e in c.dims and len(labels) != c.dims[e]:
            out.append(f"edge {e!r} has {len(labels)} basis labels for dimension {c.dims[e]}")
    for name, fired in c.surface_names.items():
        if not fired <= set(g.vertex_map) or g.down_closure(fired) != fired:
            out.append(f"named surface {name!r} is not a downward-closed vertex set")
    return out


def evolve_vertex(c: CircuitAssignment, v: VertexId, psi: StateVector) -> StateVector:
    vert = c.structure.vertex_map[v]
    return apply_on_factors(c.gates[v], vert.inputs, vert.outputs, psi,
                            [c.dims[e] for e in vert.outputs])


@dataclass(frozen=True, eq=False)
class TabulatedAssignment:
    """Surface states given explicitly rather than generated by a circuit.

    Used to exhibit state tables that are not consistent.
    """

    structure: CausalStructure
    states: Mapping[frozenset, StateVector]

    def state_on(self, s: Surface) -> StateVector:
        try:
            return self.states[s.fired]
        except KeyError:
            raise UnknownSurface(f"no state tabulated for {sorted(s.fired)}") from None


def state_on_surface(c, s: Surface) -> StateVector:
    return c.state_on(s)


def check_consistency(c, s1: Surface, s2: Surface, tol: float = CONSISTENCY_TOL) -> bool:
    """True iff the two surface states have the same marginal on their shared edges."""
    shared = s1.edges & s2.edges
    r1 = partial_trace(c.state_on(s1), shared)
    r2 = partial_trace(c.state_on(s2), shared)
    return bool(np.max(np.abs(r1.matrix - r2.matrix), initial=0.0) <= tol)


def inconsistent_pairs(c, surfaces=None) -> list[tuple[Surface, Surface]]:
    if surfaces is None:
        surfaces = causal.enumerate_surfaces(c.structure)
    bad = []
    for i, s1 in enumerate(surfaces):
        for s2 in surfaces[i + 1:]:
            if not check_consistency(c, s1, s2):
                bad.append((s1, s2))
    return bad


def make_recording_gate(
    pointer_dim: int,
    observed_basis: Sequence,
    outcome_index: Mapping[int, int] | Sequence[int],
    blank_index: int,
    order: str = "forward",
) -> np.ndarray:
    """Unitary on pointer (x) observed that copies an outcome into a blank pointer.

    ``observed_basis`` lists orthonormal states of the observed system; state
    ``i`` writes pointer index ``outcome_index[i]``. Observed directions outside
    their span leave the pointer blank. Inputs with a non-blank pointer are
    never constrained and are filled in by :func:`complete_isometry`.
    """
    listed = np.stack([np.asarray(b, dtype=complex) for b in observed_basis], axis=1) \
        if len(observed_basis) else None
    if listed is None:
        raise DimensionMismatch("observed_basis must list at least one state")
    d_obs = listed.shape[0]
    if isinstance(outcome_index, Mapping):
        outcomes = [outcome_index[i] for i in range(listed.shape[1])]
    else:
        outcomes = list(outcome_index)
    if len(outcomes) != listed.shape[1]:
        raise DimensionMismatch("one outcome index is needed per listed state")
    if pointer_dim < len(set(outcomes)) + 1:
        raise DimensionMismatch("pointer too small to hold every outcome and the blank")
    if blank_index in outcomes or not 0 <= blank_index < pointer_dim:
        raise DimensionMismatch(f"blank index {blank_index} clashes with the outcomes")
    unlisted = gram_schmidt_completion(listed, d_obs, "forward")

    def pointer(k):
        p = np.zeros(pointer_dim, dtype=complex)
        p[k] = 1.0
        return p

    blank = pointer(blank_index)
    pairs = []
    for i in range(listed.shape[1]):
        chi = listed[:, i]
        pairs.append((np.kron(blank, chi), np.kron(pointer(outcomes[i]), chi)))
    for j in range(unlisted.shape[1]):
        chi = unlisted[:, j]
        pairs.append((np.kron(blank, chi), np.kron(blank, chi)))
    return complete_isometry(pairs, pointer_dim * d_obs, order)


def make_controlled_gate(
    control_dim: int,
    case_map: Mapping[int, np.ndarray],
    target_dim: Optional[int] = None,
) -> np.ndarray:
    """Block-diagonal unitary on control (x) target; unlisted control values act as identity."""
    mats = {int(k): np.asarray(u, dtype=complex) for k, u in case_map.items()}
    shapes = {m.shape for m in mats.values()}
    if target_dim is None:
        if not shapes:
            raise DimensionMismatch("target_dim required when no cases are given")
        target_dim = next(iter(shapes))[0]
    if shapes - {(target_dim, target_dim)}:
        raise DimensionMismatch(f"case unitaries must all be {target_dim}x{target_dim}")
    for k in mats:
        if not 0 <= k < control_dim:
            raise DimensionMismatch(f"control value {k} out of range")
    out = np.zeros((control_dim * target_dim,) * 2, dtype=complex)
    for k in range(control_dim):
        block = mats.get(k, np.eye(target_dim))
        out[k * target_dim:(k + 1) * target_dim, k * target_dim:(k + 1) * target_dim] = block
    return out


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
