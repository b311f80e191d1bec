"""Relative-state maps between edges and iterated chains of them.

``relative_state`` conditions a surface state on an input vector at one edge
and returns the normalised reduced state at another edge. Chaining these
across different surfaces is exactly what can go wrong; on a single surface
the chained and direct answers agree whenever the chain stays pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import causal
from .causal import EdgeId, Surface
from .errors import DimensionMismatch, NoCommonSurface, UnknownLabel
from .qkernel import (
    NORM_TOL,
    DensityOperator,
    StateVector,
    as_pure,
    fidelity,
    partial_trace,
    purity_eigenvalue,
)

DEFINED_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RelStateQuery:
    edge_from: EdgeId
    edge_to: EdgeId
    input: np.ndarray

    def __post_init__(self):
        vec = self.input.amplitudes if isinstance(self.input, StateVector) else self.input
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(vec) - 1) > NORM_TOL:
            raise ValueError(f"input state has norm {np.linalg.norm(vec):.3g}, expected 1")
        if self.edge_from == self.edge_to:
            raise ValueError("relative state needs two distinct edges")
        object.__setattr__(self, "input", vec)


def _query_surface(c, edges, surface: Optional[Surface], index=None) -> Surface:
    g = c.structure
    for e in edges:
        if e not in g.edge_map:
            raise UnknownLabel(f"unknown edge {e!r}")
    if surface is not None:
        missing = [e for e in edges if e not in surface.edges]
        if missing:
            raise NoCommonSurface(f"surface does not contain {missing}", edges, index)
        return surface
    s = causal.surface_containing(g, edges)
    if s is None:
        raise NoCommonSurface(f"no spacelike surface contains {list(edges)}", edges, index)
    return s


def conditioned_state(psi: StateVector, edge: EdgeId, phi: np.ndarray) -> StateVector:
    """(<phi|_edge (x) 1) psi, unnormalised, on the remaining factors."""
    axis = psi.labels.index(edge)
    if phi.size != psi.dims[axis]:
        raise DimensionMismatch(f"input has length {phi.size}, edge {edge!r} has dimension {psi.dims[axis]}")
    t = np.tensordot(phi.conj(), psi.tensor, axes=([0], [axis]))
    labels = psi.labels[:axis] + psi.labels[axis + 1:]
    dims = psi.dims[:axis] + psi.dims[axis + 1:]
    return StateVector(t.reshape(-1), dims, labels)


def relative_state(c, q: RelStateQuery, surface: Optional[Surface] = None) -> Optional[DensityOperator]:
    """Normalised reduced state on ``q.edge_to`` given ``q.input`` on ``q.edge_from``.

    Uses ``surface`` if given, else the least surface holding both edges.
    Returns None when the conditioned weight is below ``DEFINED_TOL``.
    """
    s = _query_surface(c, [q.edge_from, q.edge_to], surface)
    psi = c.state_on(s)
    cond = conditioned_state(psi, q.edge_from, q.input)
    rho = partial_trace(cond, [q.edge_to])
    weight = rho.trace
    if weight < DEFINED_TOL:
        return None
    return DensityOperator(rho.matrix / weight, rho.dims, rho.labels)


@dataclass(frozen=True, eq=False)
class Link:
    edge_from: EdgeId
    edge_to: EdgeId
    surface: Surface
    input: np.ndarray
    density: Optional[DensityOperator]
    purity: Optional[float]
    pure: Optional[StateVector]


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Trajectory of an iterated relative-state computation.

    ``status`` is ``"pure"``, ``"mixed"`` or ``"undefined"``; for the latter two
    ``flag_index`` is the position in ``edges`` where the chain stopped.
    """

    edges: tuple[EdgeId, ...]
    links: tuple[Link, ...]
    status: str
    flag_index: Optional[int] = None

    @property
    def final(self):
        if not self.links:
            return None
        last = self.links[-1]
        return last.pure if last.pure is not None else last.density

    @property
    def final_density(self) -> Optional[DensityOperator]:
        return self.links[-1].density if self.links else None

    @property
    def intermediates(self) -> list:
        return [link.pure if link.pure is not None else link.density for link in self.links[:-1]]

    @property
    def mixed_at(self) -> Optional[int]:
        return self.flag_index if self.status == "mixed" else None

    @property
    def undefined_at(self) -> Optional[int]:
        return self.flag_index if self.status == "undefined" else None


def chain(c, edges: Sequence[EdgeId], input, tol: float = NORM_TOL,
          surface: Optional[Surface] = None) -> ChainResult:
    """Apply relative-state maps along ``edges``, purifying after each link.

    Each link uses its own least containing surface unless ``surface`` pins
    them all to one. Stops at the first undefined or mixed intermediate.
    """
    edges = tuple(edges)
    if len(edges) < 2:
        raise ValueError("a chain needs at least two edges")
    vec = input.amplitudes if isinstance(input, StateVector) else np.asarray(input, dtype=complex)
    surfaces = [_query_surface(c, edges[i:i + 2], surface, i) for i in range(len(edges) - 1)]
    links = []
    for i, s in enumerate(surfaces):
        rho = relative_state(c, RelStateQuery(edges[i], edges[i + 1], vec), s)
        if rho is None:
            links.append(Link(edges[i], edges[i + 1], s, vec, None, None, None))
            return ChainResult(edges, tuple(links), "undefined", i + 1)
        pure = as_pure(rho, tol)
        links.append(Link(edges[i], edges[i + 1], s, vec, rho, purity_eigenvalue(rho), pure))
        if pure is None:
            return ChainResult(edges, tuple(links), "mixed", i + 1)
        vec = pure.amplitudes
    return ChainResult(edges, tuple(links), "pure")


@dataclass(frozen=True, eq=False)
class TheoremCheck:
    verdict: str  # "holds" | "not_applicable" | "violated"
    chain: ChainResult
    direct: Optional[DensityOperator]
    fidelity: Optional[float] = None


def verify_single_surface_theorem(c, s: Surface, edges: Sequence[EdgeId], input,
                                  tol: float = NORM_TOL) -> TheoremCheck:
    """Compare the chained and direct relative states, all computed on ``s``."""
    res = chain(c, edges, input, tol, surface=s)
    vec = input.amplitudes if isinstance(input, StateVector) else np.asarray(input, dtype=complex)
    direct = relative_state(c, RelStateQuery(edges[0], edges[-1], vec), s)
    if res.status != "pure":
        return TheoremCheck("not_applicable", res, direct)
    if direct is None:
        return TheoremCheck("violated", res, direct)
    f = fidelity(res.final, direct)
    verdict = "holds" if f >= 1 - tol else "violated"
    return TheoremCheck(verdict, res, direct, f)
