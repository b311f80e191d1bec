"""Causal structures: finite DAGs whose edges may dangle at either end.

Vertices are events and edges are system segments. A spacelike surface is
the frontier of a downward-closed set of fired vertices; surfaces are keyed
by that downset.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from .errors import NotEnabled, UnknownSurface, ValidationError

EdgeId = str
VertexId = str


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    source: Optional[VertexId] = None
    target: Optional[VertexId] = None


@dataclass(frozen=True)
class Vertex:
    id: VertexId
    inputs: tuple[EdgeId, ...] = ()
    outputs: tuple[EdgeId, ...] = ()


@dataclass(frozen=True)
class Violation:
    kind: str  # "cycle" | "dangling" | "duplicate" | "mismatch"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self):
        return bool(self.violations)

    def __contains__(self, kind):
        return kind in self.kinds()


@dataclass(frozen=True)
class CausalStructure:
    edges: tuple[Edge, ...]
    vertices: tuple[Vertex, ...]

    @classmethod
    def from_vertices(
        cls,
        vertices: Mapping[VertexId, tuple[Sequence[EdgeId], Sequence[EdgeId]]],
        extra_edges: Iterable[EdgeId] = (),
    ) -> "CausalStructure":
        """Build a structure from ``{vertex: (inputs, outputs)}``.

        Edge endpoints are derived from the vertex lists. ``extra_edges`` adds
        edges touching no vertex at all.
        """
        source: dict[EdgeId, VertexId] = {}
        target: dict[EdgeId, VertexId] = {}
        order: list[EdgeId] = []
        verts = []
        for vid, (ins, outs) in vertices.items():
            verts.append(Vertex(vid, tuple(ins), tuple(outs)))
            for e in ins:
                target[e] = vid
                if e not in order:
                    order.append(e)
            for e in outs:
                source[e] = vid
                if e not in order:
                    order.append(e)
        for e in extra_edges:
            if e not in order:
                order.append(e)
        edges = tuple(Edge(e, source.get(e), target.get(e)) for e in order)
        return cls(edges, tuple(verts))

    # lookup tables; valid only when the structure validates
    @cached_property
    def edge_map(self) -> dict[EdgeId, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def vertex_map(self) -> dict[VertexId, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def edge_ids(self) -> tuple[EdgeId, ...]:
        return tuple(sorted(self.edge_map))

    @cached_property
    def vertex_ids(self) -> tuple[VertexId, ...]:
        return tuple(sorted(self.vertex_map))

    @cached_property
    def predecessors(self) -> dict[VertexId, frozenset[VertexId]]:
        preds = {v: set() for v in self.vertex_map}
        for e in self.edges:
            if e.source is not None and e.target is not None:
                preds[e.target].add(e.source)
        return {v: frozenset(p) for v, p in preds.items()}

    @cached_property
    def successors(self) -> dict[VertexId, frozenset[VertexId]]:
        succ = {v: set() for v in self.vertex_map}
        for v, ps in self.predecessors.items():
            for p in ps:
                succ[p].add(v)
        return {v: frozenset(s) for v, s in succ.items()}

    def down_closure(self, vertices: Iterable[VertexId]) -> frozenset[VertexId]:
        return _closure(vertices, self.predecessors)

    def up_closure(self, vertices: Iterable[VertexId]) -> frozenset[VertexId]:
        return _closure(vertices, self.successors)

    def precedes(self, u: VertexId, v: VertexId) -> bool:
        """Reflexive causal order: u is v or an ancestor of v."""
        return u in self.down_closure([v])


def _closure(start, step):
    seen = set(start)
    todo = deque(seen)
    while todo:
        for w in step[todo.popleft()]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return frozenset(seen)


def validate(g: CausalStructure) -> ValidationReport:
    """Collect every structural violation in ``g``; never raises."""
    out: list[Violation] = []

    seen_e: set[EdgeId] = set()
    for e in g.edges:
        if e.id in seen_e:
            out.append(Violation("duplicate", f"duplicate edge id {e.id!r}"))
        seen_e.add(e.id)
    seen_v: set[VertexId] = set()
    for v in g.vertices:
        if v.id in seen_v:
            out.append(Violation("duplicate", f"duplicate vertex id {v.id!r}"))
        seen_v.add(v.id)

    vmap = {v.id: v for v in g.vertices}
    emap = {e.id: e for e in g.edges}
    for e in g.edges:
        for end, lst in ((e.source, "outputs"), (e.target, "inputs")):
            if end is None:
                continue
            if end not in vmap:
                out.append(Violation("dangling", f"edge {e.id!r} references unknown vertex {end!r}"))
                continue
            n = getattr(vmap[end], lst).count(e.id)
            if n != 1:
                out.append(Violation(
                    "mismatch", f"edge {e.id!r} appears {n} times in the {lst} of {end!r}"))
    for v in g.vertices:
        for lst, attr in ((v.inputs, "target"), (v.outputs, "source")):
            for eid in lst:
                if eid not in emap:
                    out.append(Violation("dangling", f"vertex {v.id!r} references unknown edge {eid!r}"))
                elif getattr(emap[eid], attr) != v.id:
                    out.append(Violation(
                        "mismatch", f"vertex {v.id!r} lists edge {eid!r} but the edge's {attr} "
                                    f"is {getattr(emap[eid], attr)!r}"))

    # Kahn's algorithm on the vertex graph
    preds: dict[VertexId, set[VertexId]] = {v: set() for v in vmap}
    for e in g.edges:
        if e.source in vmap and e.target in vmap:
            preds[e.target].add(e.source)
    indeg = {v: len(p) for v, p in preds.items()}
    succ: dict[VertexId, set[VertexId]] = {v: set() for v in vmap}
    for v, ps in preds.items():
        for p in ps:
            succ[p].add(v)
    ready = [v for v, d in indeg.items() if d == 0]
    done = 0
    while ready:
        u = ready.pop()
        done += 1
        for w in succ[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if done < len(vmap):
        stuck = sorted(v for v, d in indeg.items() if d > 0)
        out.append(Violation("cycle", f"cycle through vertices {stuck}"))
    return ValidationReport(tuple(out))


def check_valid(g: CausalStructure) -> CausalStructure:
    report = validate(g)
    if report:
        raise ValidationError("; ".join(v.message for v in report.violations))
    return g


@dataclass(frozen=True)
class Surface:
    fired: frozenset[VertexId]
    edges: frozenset[EdgeId] = field(compare=False)

    @property
    def key(self) -> tuple[int, tuple[VertexId, ...]]:
        """Canonical sort key: size of the downset, then its sorted ids."""
        return (len(self.fired), tuple(sorted(self.fired)))

    def sorted_edges(self) -> tuple[EdgeId, ...]:
        return tuple(sorted(self.edges))

    def __repr__(self):
        return f"Surface(fired={sorted(self.fired)}, edges={sorted(self.edges)})"


def surface_from_downset(g: CausalStructure, fired: Iterable[VertexId]) -> Surface:
    fired = frozenset(fired)
    unknown = fired - set(g.vertex_map)
    if unknown:
        raise UnknownSurface(f"unknown vertices {sorted(unknown)}")
    if g.down_closure(fired) != fired:
        raise UnknownSurface(f"{sorted(fired)} is not downward closed")
    edges = set()
    for e in g.edges:
        born = e.source is None or e.source in fired
        consumed = e.target is not None and e.target in fired
        if born and not consumed:
            edges.add(e.id)
    return Surface(fired, frozenset(edges))


def initial_surface(g: CausalStructure) -> Surface:
    return Surface(frozenset(), frozenset(e.id for e in g.edges if e.source is None))


def final_surface(g: CausalStructure) -> Surface:
    return surface_from_downset(g, g.vertex_map)


def fire(g: CausalStructure, s: Surface, v: VertexId) -> Surface:
    vert = g.vertex_map[v]
    if v in s.fired:
        raise NotEnabled(f"vertex {v!r} has already fired")
    missing = [e for e in vert.inputs if e not in s.edges]
    if missing:
        raise NotEnabled(f"vertex {v!r} is missing inputs {missing}")
    edges = (s.edges - set(vert.inputs)) | set(vert.outputs)
    return Surface(s.fired | {v}, frozenset(edges))


def enabled(g: CausalStructure, s: Surface) -> list[VertexId]:
    return [v for v in g.vertex_ids
            if v not in s.fired and all(e in s.edges for e in g.vertex_map[v].inputs)]


def enumerate_surfaces(g: CausalStructure) -> list[Surface]:
    """All spacelike surfaces, as the closure of the initial cut under firing.

    Returned in canonical order (by :attr:`Surface.key`).
    """
    start = initial_surface(g)
    seen = {start.fired: start}
    todo = deque([start])
    while todo:
        s = todo.popleft()
        for v in enabled(g, s):
            t = fire(g, s, v)
            if t.fired not in seen:
                seen[t.fired] = t
                todo.append(t)
    return sorted(seen.values(), key=lambda s: s.key)


def linearize(g: CausalStructure, fired: Iterable[VertexId]) -> list[VertexId]:
    """Deterministic topological order of a downset (smallest ready id first)."""
    fired = set(fired)
    order = []
    done: set[VertexId] = set()
    while len(order) < len(fired):
        ready = sorted(v for v in fired - done if g.predecessors[v] <= done)
        if not ready:
            raise UnknownSurface("vertex set is not downward closed")
        order.append(ready[0])
        done.add(ready[0])
    return order


def surface_containing(g: CausalStructure, required: Iterable[EdgeId]) -> Optional[Surface]:
    """Least surface whose edge set includes ``required``, or None.

    Every containing surface has fired at least the down-closure of the
    required sources, and fired nothing above a required target; so the
    down-closure itself works exactly when those two sets are disjoint.
    """
    required = list(required)
    emap = g.edge_map
    sources = [emap[e].source for e in required if emap[e].source is not None]
    targets = [emap[e].target for e in required if emap[e].target is not None]
    need = g.down_closure(sources)
    forbid = g.up_closure(targets)
    if need & forbid:
        return None
    return surface_from_downset(g, need)


def edges_share_surface(g: CausalStructure, edges: Iterable[EdgeId]) -> bool:
    return surface_containing(g, edges) is not None
