"""Propositions about edges, their subspace denotations, and deduction checking.

Propositions are built from atoms with ``Not`` and ``And``; an ``And`` is only
well formed when both sides live on a common spacelike surface. Implication
``a -> b`` is sugar for ``Not(And(a, Not(b)))``. Each proposition denotes a
subspace of the Hilbert space of its support and is valued true, false or
possible against the state on any surface holding that support.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import causal
from .causal import CausalStructure, EdgeId, Surface
from .errors import DimensionMismatch, NoCommonSurface, UnknownAtom, ValidationError
from .qkernel import partial_trace

RANK_TOL = 1e-10
VALUE_TOL = 1e-9


# -- subspaces ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of orthonormal columns inside the space of ``support`` (canonical factor order)."""

    support: tuple[EdgeId, ...]
    dims: tuple[int, ...]
    basis: np.ndarray

    def __post_init__(self):
        support = tuple(self.support)
        dims = tuple(int(d) for d in self.dims)
        if list(support) != sorted(support) or len(set(support)) != len(support):
            raise ValueError("support must be sorted and duplicate free")
        total = math.prod(dims)
        b = np.asarray(self.basis, dtype=complex).reshape(total, -1)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors, support: Sequence[EdgeId], dims: Sequence[int]) -> "Subspace":
        """Orthonormalised span of ``vectors`` (each laid out in the given factor order)."""
        support, dims = list(support), [int(d) for d in dims]
        total = math.prod(dims)
        vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        for v in vecs:
            if v.size != total:
                raise DimensionMismatch(f"vector of length {v.size} in a space of dimension {total}")
        perm = sorted(range(len(support)), key=lambda i: support[i])
        cols = []
        for v in vecs:
            cols.append(np.transpose(v.reshape(dims), perm).reshape(-1) if dims else v)
        canon = ([support[i] for i in perm], [dims[i] for i in perm])
        if not cols:
            return cls(tuple(canon[0]), tuple(canon[1]), np.zeros((total, 0)))
        return cls(tuple(canon[0]), tuple(canon[1]), _orth(np.stack(cols, axis=1)))

    @classmethod
    def from_projector(cls, proj, support, dims) -> "Subspace":
        proj = np.asarray(proj, dtype=complex)
        total = math.prod(dims)
        if proj.shape != (total, total):
            raise DimensionMismatch(f"projector shape {proj.shape}, expected {(total, total)}")
        if np.max(np.abs(proj @ proj - proj)) > 1e-8 or np.max(np.abs(proj - proj.conj().T)) > 1e-8:
            raise ValidationError("matrix is not an orthogonal projector")
        return cls.span(list(proj.T), support, dims)

    @classmethod
    def full(cls, support, dims) -> "Subspace":
        return cls.span(list(np.eye(math.prod(dims))), support, dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def same_span(self, other: "Subspace", tol: float = RANK_TOL) -> bool:
        if self.support != other.support or self.dims != other.dims:
            return False
        return bool(np.max(np.abs(self.projector - other.projector), initial=0.0) <= max(tol, 1e-9))

    def contains(self, other: "Subspace", tol: float = 1e-9) -> bool:
        """Whether ``other`` lies inside this subspace (supports must match)."""
        resid = other.basis - self.basis @ (self.basis.conj().T @ other.basis)
        return bool(np.max(np.abs(resid), initial=0.0) <= tol)

    def __repr__(self):
        return f"Subspace(support={self.support}, rank={self.rank}/{self.total_dim})"


def _orth(mat: np.ndarray) -> np.ndarray:
    if mat.shape[1] == 0:
        return mat
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * max(1.0, s[0] if s.size else 0.0)))
    return u[:, :rank]


def _null_space(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    n = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def subspace_complement(s: Subspace) -> Subspace:
    if s.rank == 0:
        return Subspace(s.support, s.dims, np.eye(s.total_dim, dtype=complex))
    return Subspace(s.support, s.dims, _null_space(s.basis.conj().T))


def embed(s: Subspace, support: Iterable[EdgeId], dims: Mapping[EdgeId, int]) -> Subspace:
    """``s`` tensored with the full space of every edge of ``support`` it lacks."""
    target = tuple(sorted(set(support)))
    missing = [e for e in target if e not in s.support]
    if set(s.support) - set(target):
        raise ValueError(f"cannot embed support {s.support} into {target}")
    if not missing:
        return s
    m_dims = [dims[e] for e in missing]
    d_m = math.prod(m_dims)
    big = np.kron(s.basis, np.eye(d_m))
    labels = list(s.support) + missing
    all_dims = list(s.dims) + m_dims
    perm = sorted(range(len(labels)), key=lambda i: labels[i])
    cols = big.reshape(all_dims + [-1])
    cols = np.transpose(cols, perm + [len(labels)]).reshape(math.prod(all_dims), -1)
    return Subspace(target, tuple(all_dims[i] for i in perm), cols)


def subspace_meet(a: Subspace, b: Subspace, joint_support=None, dims=None,
                  structure: Optional[CausalStructure] = None) -> Subspace:
    """Intersection of ``a`` and ``b`` after embedding both into the joint support.

    With ``structure`` given, the joint support must lie on some spacelike surface.
    """
    if joint_support is None:
        joint_support = set(a.support) | set(b.support)
    joint_support = tuple(sorted(set(joint_support)))
    if dims is None:
        dims = dict(zip(a.support, a.dims)) | dict(zip(b.support, b.dims))
    if structure is not None and not causal.edges_share_surface(structure, joint_support):
        raise NoCommonSurface(f"no spacelike surface contains {list(joint_support)}", joint_support)
    ea, eb = embed(a, joint_support, dims), embed(b, joint_support, dims)
    n = ea.total_dim
    eye = np.eye(n)
    stacked = np.vstack([eye - ea.projector, eye - eb.projector])
    return Subspace(ea.support, ea.dims, _null_space(stacked))


# -- propositions ------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    name: str
    support: tuple[EdgeId, ...]
    denotation: Optional[Subspace] = field(default=None, compare=False, hash=False, repr=False)


@dataclass(frozen=True)
class Name:
    """Unresolved atom reference produced by the parser."""

    name: str
    line: Optional[int] = field(default=None, compare=False)
    column: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Not:
    operand: "Prop"


@dataclass(frozen=True)
class And:
    left: "Prop"
    right: "Prop"


Prop = Union[Atom, Not, And]


def implies(a, b) -> Not:
    return Not(And(a, Not(b)))


def as_implication(p) -> Optional[tuple]:
    """``(a, b)`` if ``p`` is ``a -> b`` in desugared form."""
    if isinstance(p, Not) and isinstance(p.operand, And) and isinstance(p.operand.right, Not):
        return p.operand.left, p.operand.right.operand
    return None


def support(p) -> frozenset[EdgeId]:
    if isinstance(p, Atom):
        return frozenset(p.support)
    if isinstance(p, Not):
        return support(p.operand)
    if isinstance(p, And):
        return support(p.left) | support(p.right)
    raise TypeError(f"not a resolved proposition: {p!r}")


def render(p, level: int = 0) -> str:
    """Text form using ``!``, ``&`` and ``->`` with minimal parentheses."""
    imp = as_implication(p)
    if imp is not None:
        text, own = f"{render(imp[0], 2)} -> {render(imp[1], 1)}", 1
    elif isinstance(p, (Atom, Name)):
        return p.name
    elif isinstance(p, Not):
        text, own = "!" + render(p.operand, 3), 3
    elif isinstance(p, And):
        text, own = f"{render(p.left, 2)} & {render(p.right, 3)}", 2
    else:
        raise TypeError(f"cannot render {p!r}")
    return f"({text})" if own < level else text


def make_atom(name: str, support_edges: Iterable[EdgeId], denotation: Subspace,
              structure: Optional[CausalStructure] = None) -> Atom:
    sup = tuple(sorted(set(support_edges)))
    if denotation.support != sup:
        raise ValidationError(f"atom {name!r}: denotation support {denotation.support} != {sup}")
    if structure is not None:
        unknown = [e for e in sup if e not in structure.edge_map]
        if unknown:
            raise ValidationError(f"atom {name!r} references unknown edges {unknown}")
        if not causal.edges_share_surface(structure, sup):
            raise ValidationError(f"atom {name!r}: support {list(sup)} lies on no spacelike surface")
    return Atom(name, sup, denotation)


def wellformed(raw, g: CausalStructure, atoms: Optional[Mapping[str, Atom]] = None):
    """Resolve names against ``atoms`` and check every conjunction's surface condition."""
    atoms = atoms or {}
    if isinstance(raw, Name):
        if raw.name not in atoms:
            raise UnknownAtom(f"unknown atom {raw.name!r}")
        return atoms[raw.name]
    if isinstance(raw, Atom):
        if raw.denotation is None:
            if raw.name not in atoms:
                raise UnknownAtom(f"atom {raw.name!r} has no denotation")
            return atoms[raw.name]
        return raw
    if isinstance(raw, Not):
        return Not(wellformed(raw.operand, g, atoms))
    if isinstance(raw, And):
        left, right = wellformed(raw.left, g, atoms), wellformed(raw.right, g, atoms)
        node = And(left, right)
        if not causal.edges_share_surface(g, support(node)):
            raise NoCommonSurface(
                f"conjunction {render(node)!r} has support {sorted(support(node))} "
                f"on no spacelike surface", tuple(sorted(support(node))))
        return node
    raise TypeError(f"not a proposition: {raw!r}")


def denotation(p, dims: Mapping[EdgeId, int], _memo=None) -> Subspace:
    memo = {} if _memo is None else _memo
    if p in memo:
        return memo[p]
    if isinstance(p, Atom):
        if p.denotation is None:
            raise UnknownAtom(f"atom {p.name!r} has no denotation")
        out = p.denotation
    elif isinstance(p, Not):
        out = subspace_complement(denotation(p.operand, dims, memo))
    elif isinstance(p, And):
        out = subspace_meet(denotation(p.left, dims, memo), denotation(p.right, dims, memo),
                            support(p), dims)
    else:
        raise TypeError(f"not a resolved proposition: {p!r}")
    memo[p] = out
    return out


class Truth(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    POSSIBLE = "possible"

    def __str__(self):
        return self.value


def projection_weight(p, c, surface: Optional[Surface] = None) -> float:
    """Squared norm of the projection of the surface state onto the denotation of ``p``.

    Uses the least surface holding the support unless ``surface`` is given.
    """
    sup = support(p)
    s = causal.surface_containing(c.structure, sup) if surface is None else surface
    if s is None or not sup <= s.edges:
        raise NoCommonSurface(f"support {sorted(sup)} lies on no spacelike surface", tuple(sup))
    rho = partial_trace(c.state_on(s), sup)
    den = denotation(p, c.dims)
    b = den.basis
    return float(max(0.0, np.real(np.trace(b.conj().T @ rho.matrix @ b))))


def valuate(p, c, tol: float = VALUE_TOL, surface: Optional[Surface] = None) -> Truth:
    n = math.sqrt(projection_weight(p, c, surface))
    if n < tol:
        return Truth.FALSE
    if n > 1 - tol:
        return Truth.TRUE
    return Truth.POSSIBLE


# -- deductions --------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    rule: int
    sources: tuple[int, ...]
    prop: Prop


@dataclass(frozen=True)
class Deduction:
    premises: tuple
    steps: tuple = ()
    name: str = "deduction"

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(self.premises))
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def propositions(self) -> list:
        return list(self.premises) + [st.prop for st in self.steps]

    @property
    def conclusion(self):
        props = self.propositions
        return props[-1] if props else None


@dataclass(frozen=True)
class StepVerdict:
    index: int
    rule: int
    ok: bool
    reason: str = ""


@dataclass(frozen=True)
class DeductionReport:
    steps: tuple[StepVerdict, ...]
    conclusion: Optional[Prop]

    @property
    def valid(self) -> bool:
        return all(v.ok for v in self.steps)

    @property
    def n_valid(self) -> int:
        return sum(v.ok for v in self.steps)


def _check_step(g: CausalStructure, props: list, step: Step) -> str:
    """Empty string when the step matches its rule, else the reason it does not."""
    n = len(props)
    if any(not 0 <= i < n for i in step.sources):
        return f"antecedent index out of range 0..{n - 1}"
    ante = [props[i] for i in step.sources]
    target = step.prop
    if step.rule in (1, 2):
        if len(ante) != 1:
            return f"rule {step.rule} takes one antecedent"
        if not isinstance(ante[0], And):
            return "antecedent is not a conjunction"
        part = ante[0].left if step.rule == 1 else ante[0].right
        return "" if part == target else "derived proposition is not the projected conjunct"
    if step.rule == 3:
        if len(ante) != 2:
            return "rule 3 takes two antecedents"
        if target not in (And(ante[0], ante[1]), And(ante[1], ante[0])):
            return "derived proposition is not the conjunction of the antecedents"
        if not causal.edges_share_surface(g, support(ante[0]) | support(ante[1])):
            return "antecedent supports lie on no common spacelike surface"
        return ""
    if step.rule == 4:
        if len(ante) != 2:
            return "rule 4 takes two antecedents"
        for phi, imp in (ante, ante[::-1]):
            if imp == implies(phi, target):
                return ""
        return "antecedents are not of the form p, p -> q with q derived"
    return f"unknown rule {step.rule}"


def check_deduction(d: Deduction, g: CausalStructure) -> DeductionReport:
    props = list(d.premises)
    verdicts = []
    for k, step in enumerate(d.steps):
        reason = _check_step(g, props, step)
        verdicts.append(StepVerdict(k, step.rule, not reason, reason))
        props.append(step.prop)
    return DeductionReport(tuple(verdicts), props[-1] if props else None)


@dataclass(frozen=True)
class SoundnessVerdict:
    kind: str  # "sound" | "unsound" | "premises_ineligible" | "invalid"
    premise_values: tuple[Truth, ...]
    conclusion_value: Optional[Truth]
    single_surface: bool
    report: DeductionReport


def assess_soundness(d: Deduction, c) -> SoundnessVerdict:
    g = c.structure
    report = check_deduction(d, g)
    values = tuple(valuate(p, c) for p in d.premises)
    concl = valuate(d.conclusion, c) if d.conclusion is not None else None
    sup = frozenset().union(*(support(p) for p in d.premises)) if d.premises else frozenset()
    single = causal.edges_share_surface(g, sup)
    if not report.valid:
        kind = "invalid"
    elif Truth.FALSE in values or values.count(Truth.POSSIBLE) > 1:
        kind = "premises_ineligible"
    elif concl is Truth.FALSE:
        kind = "unsound"
    else:
        kind = "sound"
    return SoundnessVerdict(kind, values, concl, single, report)
