"""Random causal structures, circuits and logic instances for property suites.

Seeds come from ``RELSURF_SEED`` when set, so a failing trial can be replayed.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import causal
from .assignment import CircuitAssignment
from .causal import CausalStructure, Surface
from .qkernel import StateVector, partial_trace, random_unitary
from .qlogic import (
    And,
    Atom,
    Deduction,
    Step,
    Subspace,
    Truth,
    as_implication,
    implies,
    make_atom,
    valuate,
)

DEFAULT_SEED = 20240601


def seed_from_env(default: int = DEFAULT_SEED) -> int:
    return int(os.environ.get("RELSURF_SEED", default))


# -- structures and circuits -------------------------------------------------

def random_dag(rng: np.random.Generator, n_vertices: int, max_io: int = 3) -> CausalStructure:
    """Random causal structure; edges may be sourceless, targetless or both."""
    counter = iter(range(10_000))
    open_edges = [f"e{next(counter)}" for _ in range(rng.integers(0, 4))]
    isolated = []
    vertices = {}
    for i in range(n_vertices):
        k_in = int(rng.integers(0, min(max_io, len(open_edges)) + 1))
        picks = list(rng.choice(len(open_edges), size=k_in, replace=False)) if k_in else []
        ins = [open_edges[j] for j in sorted(picks)]
        open_edges = [e for j, e in enumerate(open_edges) if j not in picks]
        outs = [f"e{next(counter)}" for _ in range(rng.integers(0, max_io + 1))]
        vertices[f"v{i}"] = (ins, outs)
        open_edges += outs
        if rng.random() < 0.3:
            open_edges.append(f"e{next(counter)}")
        if rng.random() < 0.1:
            isolated.append(f"e{next(counter)}")
    extra = [e for e in open_edges if not any(e in o for _, o in vertices.values())] + isolated
    return CausalStructure.from_vertices(vertices, extra)


def _permutation(dim: int, rng) -> np.ndarray:
    return np.eye(dim, dtype=complex)[rng.permutation(dim)]


def random_gate(dim: int, rng, kind: Optional[str] = None) -> np.ndarray:
    kind = kind or rng.choice(["unitary", "permutation", "phased"])
    if kind == "unitary":
        return random_unitary(dim, rng)
    perm = _permutation(dim, rng)
    if kind == "phased":
        return perm * np.exp(2j * np.pi * rng.random(dim))
    return perm


def random_initial(dims, labels, rng, sparse: Optional[bool] = None) -> StateVector:
    n = math.prod(dims)
    if sparse is None:
        sparse = rng.random() < 0.6
    v = np.zeros(n, dtype=complex)
    if sparse:
        idx = rng.choice(n, size=int(rng.integers(1, min(4, n) + 1)), replace=False)
        v[idx] = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    else:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StateVector.from_factors(v / np.linalg.norm(v), labels, dims)


def random_circuit(rng: np.random.Generator, max_vertices: int = 4, dims=(2, 3),
                   n_initial: Optional[int] = None, max_total_dim: int = 108) -> CircuitAssignment:
    """Random unitary circuit on ``n_initial`` (3-4) sourceless edges.

    Each vertex consumes one or two live edges and emits the same number with
    the input dimensions shuffled, so every surface has ``n_initial`` edges.
    """
    n0 = n_initial or int(rng.integers(3, 5))
    while True:
        edge_dims = [int(rng.choice(dims)) for _ in range(n0)]
        if math.prod(edge_dims) <= max_total_dim:
            break
    live = [f"e{i}" for i in range(n0)]
    dim = dict(zip(live, edge_dims))
    counter = iter(range(n0, 10_000))
    vertices, gates = {}, {}
    for i in range(int(rng.integers(1, max_vertices + 1))):
        k = int(rng.integers(1, 3))
        picks = sorted(rng.choice(len(live), size=k, replace=False))
        ins = [live[j] for j in picks]
        in_dims = [dim[e] for e in ins]
        out_dims = list(rng.permutation(in_dims))
        outs = [f"e{next(counter)}" for _ in ins]
        for e, d in zip(outs, out_dims):
            dim[e] = int(d)
        live = [e for j, e in enumerate(live) if j not in picks] + outs
        vid = f"v{i}"
        vertices[vid] = (ins, outs)
        gates[vid] = random_gate(math.prod(in_dims), rng)
    g = CausalStructure.from_vertices(vertices, [e for e in dim if not any(
        e in ins or e in outs for ins, outs in vertices.values())])
    s0 = sorted(causal.initial_surface(g).edges)
    init = random_initial([dim[e] for e in s0], s0, rng)
    return CircuitAssignment(g, dim, gates, init)


# -- single-surface relative-state instances --------------------------------

@dataclass(frozen=True, eq=False)
class ChainInstance:
    circuit: CircuitAssignment
    surface: Surface
    edges: tuple[str, ...]
    input: np.ndarray


def random_chain_instance(rng, min_len: int = 3, max_len: int = 5) -> ChainInstance:
    c = random_circuit(rng)
    surfaces = causal.enumerate_surfaces(c.structure)
    s = surfaces[int(rng.integers(len(surfaces)))]
    edges = sorted(s.edges)
    n = int(rng.integers(min_len, min(max_len, len(edges)) + 1))
    chosen = tuple(edges[j] for j in rng.choice(len(edges), size=n, replace=False))
    d = c.dims[chosen[0]]
    phi = np.zeros(d, dtype=complex)
    phi[int(rng.integers(d))] = 1
    return ChainInstance(c, s, chosen, phi)


# -- single-surface logic instances -----------------------------------------

def _random_span(dim: int, rank: int, rng) -> np.ndarray:
    return random_unitary(dim, rng)[:, :rank]


def _range_of(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    return vecs[:, vals > tol]


def _pad(cols: np.ndarray, dim: int, rng, commuting: bool) -> np.ndarray:
    """Sometimes widen a subspace by one extra direction, keeping it proper."""
    if cols.shape[1] >= dim - 1 or rng.random() < 0.5:
        return cols
    extra = np.eye(dim, dtype=complex)[:, [int(rng.integers(dim))]] if commuting else \
        _random_span(dim, 1, rng)
    return np.hstack([cols, extra])


def _diag_support(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    idx = np.flatnonzero(np.real(np.diag(rho)) > tol)
    return np.eye(rho.shape[0], dtype=complex)[:, idx]


@dataclass(frozen=True, eq=False)
class LogicInstance:
    circuit: CircuitAssignment
    surface: Surface
    atoms: tuple[Atom, ...]
    deduction: Deduction


def _make(name, support, cols, c) -> Atom:
    dims = [c.dims[e] for e in support]
    return make_atom(name, support, Subspace.span(list(cols.T), support, dims), c.structure)


def random_atoms(rng, c: CircuitAssignment, s: Surface, commuting: bool = False) -> list[Atom]:
    """Atoms on edges of ``s``: some true by construction, some arbitrary, some implied.

    With ``commuting`` every denotation is spanned by product-basis vectors,
    so all of them commute with each other.
    """
    psi = c.state_on(s)
    edges = sorted(s.edges)
    atoms: list[Atom] = []

    used: list[list[str]] = []

    def support():
        if used and rng.random() < 0.5:
            return used[int(rng.integers(len(used)))]
        k = int(rng.integers(1, min(2, len(edges)) + 1))
        sup = sorted(edges[j] for j in rng.choice(len(edges), size=k, replace=False))
        used.append(sup)
        return sup

    for k in range(int(rng.integers(2, 5))):
        sup = support()
        dim = math.prod(c.dims[e] for e in sup)
        rho = partial_trace(psi, sup).matrix
        kind = rng.choice(["true", "arbitrary", "implied"]) if atoms else rng.choice(["true", "arbitrary"])
        if kind == "true":
            cols = _diag_support(rho) if commuting else _range_of(rho)
            cols = _pad(cols, dim, rng, commuting)
        elif kind == "arbitrary":
            rank = int(rng.integers(1, dim))
            if commuting:
                cols = np.eye(dim, dtype=complex)[:, np.sort(rng.choice(dim, size=rank, replace=False))]
            else:
                cols = _random_span(dim, rank, rng)
        else:
            ante = atoms[int(rng.integers(len(atoms)))]
            cols = _implied_columns(psi, ante, sup, c, commuting)
            if cols is None:
                continue
        if cols.shape[1] == 0:
            continue
        atoms.append(_make(f"a{k}", sup, cols, c))
    return atoms


def _implied_columns(psi: StateVector, ante: Atom, sup, c, commuting: bool):
    """Smallest subspace on ``sup`` holding the part of ``psi`` inside ``ante``."""
    from .qlogic import embed

    emb = embed(ante.denotation, ante.support, c.dims)
    b = emb.basis
    # project psi's ante factors onto the denotation
    from .qkernel import apply_on_factors
    proj = b @ b.conj().T
    kept = apply_on_factors(proj, list(emb.support), list(emb.support), psi)
    if kept.norm < 1e-9:
        return None
    rho = partial_trace(kept, sup).matrix
    return _diag_support(rho) if commuting else _range_of(rho)


def random_deduction(rng, premises: list, max_steps: int = 8) -> Deduction:
    props = list(premises)
    steps = []
    for _ in range(int(rng.integers(1, max_steps + 1))):
        moves = []
        for i, p in enumerate(props):
            if isinstance(p, And):
                moves += [(1, (i,), p.left), (2, (i,), p.right)]
        for j, q in enumerate(props):
            imp = as_implication(q)
            if imp is None:
                continue
            for i, p in enumerate(props):
                if p == imp[0]:
                    moves += [(4, (i, j), imp[1])] * 3
        for _ in range(2):
            i, j = (int(x) for x in rng.integers(len(props), size=2))
            moves.append((3, (i, j), And(props[i], props[j])))
        rule, src, prop = moves[int(rng.integers(len(moves)))]
        steps.append(Step(rule, src, prop))
        props.append(prop)
    return Deduction(premises, steps, name="random")


def random_logic_instance(rng, commuting: bool = False, max_steps: int = 8,
                          allow_possible: bool = True) -> Optional[LogicInstance]:
    """Deduction whose premises sit on one surface, are all true except at most one possible.

    Returns None when the draw yields no true premise to work with.
    """
    c = random_circuit(rng, max_total_dim=36)
    surfaces = causal.enumerate_surfaces(c.structure)
    s = surfaces[int(rng.integers(len(surfaces)))]
    atoms = random_atoms(rng, c, s, commuting)
    if not atoms:
        return None
    candidates = list(atoms)
    for a in atoms:
        for b in atoms:
            if a is not b:
                candidates.append(implies(a, b))
                if rng.random() < 0.3:
                    candidates.append(And(a, b))
    values = [valuate(p, c) for p in candidates]
    true = [p for p, v in zip(candidates, values) if v is Truth.TRUE]
    possible = [p for p, v in zip(candidates, values) if v is Truth.POSSIBLE]
    if not true and not possible:
        return None
    k = int(rng.integers(0, min(4, len(true)) + 1)) if true else 0
    premises = [true[j] for j in rng.choice(len(true), size=k, replace=False)] if k else []
    if allow_possible and possible and (rng.random() < 0.75 or not premises):
        premises.append(possible[int(rng.integers(len(possible)))])
    if not premises:
        return None
    order = rng.permutation(len(premises))
    premises = [premises[j] for j in order]
    return LogicInstance(c, s, tuple(atoms), random_deduction(rng, premises, max_steps))


def draw_logic_instance(rng, **kwargs) -> LogicInstance:
    """Keep drawing until :func:`random_logic_instance` yields an instance."""
    while True:
        inst = random_logic_instance(rng, **kwargs)
        if inst is not None:
            return inst
