"""Dense state vectors and density operators over labelled tensor factors.

Every public state keeps its factors sorted by label, so two states over the
same edges can be compared amplitude by amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, LabelClash, NotIsometric, UnknownLabel

NORM_TOL = 1e-9
UNITARY_TOL = 1e-10


def _prod(xs) -> int:
    return int(math.prod(xs))


def fix_phase(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    vec = np.asarray(vec, dtype=complex)
    idx = np.flatnonzero(np.abs(vec) > tol)
    if idx.size == 0:
        return vec
    a = vec[idx[0]]
    return vec * (abs(a) / a)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.dims) != len(self.labels):
            raise DimensionMismatch("dims and labels differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise LabelClash(f"repeated labels in {self.labels}")
        if amps.size != _prod(self.dims):
            raise DimensionMismatch(f"{amps.size} amplitudes for dims {self.dims}")
        if list(self.labels) != sorted(self.labels):
            raise LabelClash("labels must be in canonical order; use StateVector.from_factors")

    @classmethod
    def from_factors(cls, amplitudes, labels: Sequence[str], dims: Sequence[int]) -> "StateVector":
        """Build from amplitudes laid out in the given factor order, reordering canonically."""
        labels = tuple(labels)
        dims = tuple(int(d) for d in dims)
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != _prod(dims):
            raise DimensionMismatch(f"{amps.size} amplitudes for dims {dims}")
        if len(set(labels)) != len(labels):
            raise LabelClash(f"repeated labels in {labels}")
        perm = sorted(range(len(labels)), key=lambda i: labels[i])
        tensor = amps.reshape(dims) if dims else amps.reshape(())
        tensor = np.transpose(tensor, perm)
        return cls(tensor.reshape(-1), tuple(dims[i] for i in perm), tuple(labels[i] for i in perm))

    @classmethod
    def basis(cls, label: str, dim: int, index: int) -> "StateVector":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v, (dim,), (label,))

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims) if self.dims else self.amplitudes.reshape(())

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def dim_of(self, label: str) -> int:
        try:
            return self.dims[self.labels.index(label)]
        except ValueError:
            raise UnknownLabel(f"no factor {label!r} in {self.labels}") from None

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm, self.dims, self.labels)

    def phase_fixed(self) -> "StateVector":
        return StateVector(fix_phase(self.amplitudes), self.dims, self.labels)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm - 1.0) <= tol

    def __repr__(self):
        return f"StateVector(labels={self.labels}, dims={self.dims})"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        n = _prod(self.dims)
        if m.shape != (n, n):
            raise DimensionMismatch(f"matrix shape {m.shape} for dims {self.dims}")

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)[::-1]

    def is_valid(self, tol: float = NORM_TOL) -> bool:
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T), initial=0.0) <= UNITARY_TOL
        return bool(herm and abs(self.trace - 1) <= tol and self.eigenvalues()[-1] >= -tol)

    def __repr__(self):
        return f"DensityOperator(labels={self.labels}, dims={self.dims})"


def outer(psi: StateVector) -> DensityOperator:
    a = psi.amplitudes
    return DensityOperator(np.outer(a, a.conj()), psi.dims, psi.labels)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise LabelClash(f"factors {sorted(clash)} appear on both sides")
    return StateVector.from_factors(
        np.kron(a.amplitudes, b.amplitudes), a.labels + b.labels, a.dims + b.dims)


def apply_on_factors(
    u: np.ndarray,
    in_labels: Sequence[str],
    out_labels: Sequence[str],
    psi: StateVector,
    out_dims: Optional[Sequence[int]] = None,
) -> StateVector:
    """Apply ``u`` to the factors ``in_labels`` of ``psi`` and relabel them ``out_labels``.

    ``u`` maps the ordered input factors to the ordered output factors.
    ``out_dims`` defaults to the input dimensions when the factor counts match.
    """
    in_labels, out_labels = list(in_labels), list(out_labels)
    for lab in in_labels:
        if lab not in psi.labels:
            raise UnknownLabel(f"no factor {lab!r} in {psi.labels}")
    in_dims = [psi.dim_of(lab) for lab in in_labels]
    if out_dims is None:
        if len(out_labels) != len(in_labels):
            raise DimensionMismatch("out_dims required when factor counts differ")
        out_dims = in_dims
    out_dims = [int(d) for d in out_dims]
    n_in = _prod(in_dims)
    u = np.asarray(u, dtype=complex)
    if u.shape != (n_in, n_in) or _prod(out_dims) != n_in:
        raise DimensionMismatch(
            f"gate of shape {u.shape} cannot map dims {in_dims} to {out_dims}")
    rest = [lab for lab in psi.labels if lab not in in_labels]
    clash = set(rest) & set(out_labels)
    if clash:
        raise LabelClash(f"output labels {sorted(clash)} already present")
    axes = [psi.labels.index(lab) for lab in in_labels] + [psi.labels.index(lab) for lab in rest]
    rest_dims = [psi.dim_of(lab) for lab in rest]
    mat = np.transpose(psi.tensor, axes).reshape(n_in, -1)
    mat = u @ mat
    return StateVector.from_factors(mat.reshape(-1), out_labels + rest, out_dims + rest_dims)


def partial_trace(state, keep: Iterable[str]) -> DensityOperator:
    """Reduced density operator of ``state`` on the factors ``keep``."""
    keep = sorted(set(keep))
    for lab in keep:
        if lab not in state.labels:
            raise UnknownLabel(f"no factor {lab!r} in {state.labels}")
    dims = list(state.dims)
    kept_dims = [dims[state.labels.index(lab)] for lab in keep]
    n = len(dims)
    kept_axes = [state.labels.index(lab) for lab in keep]
    traced = [i for i in range(n) if i not in kept_axes]
    if isinstance(state, StateVector):
        t = np.transpose(state.tensor, kept_axes + traced).reshape(_prod(kept_dims), -1)
        return DensityOperator(t @ t.conj().T, kept_dims, keep)
    t = state.matrix.reshape(dims + dims)
    row = list(range(n))
    col = [i + n if i in kept_axes else i for i in range(n)]
    out = [i for i in kept_axes] + [i + n for i in kept_axes]
    red = np.einsum(t, row + col, out)
    k = _prod(kept_dims)
    return DensityOperator(red.reshape(k, k), kept_dims, keep)


def purity_eigenvalue(rho: DensityOperator) -> float:
    return float(rho.eigenvalues()[0])


def as_pure(rho: DensityOperator, tol: float = NORM_TOL) -> Optional[StateVector]:
    """Dominant eigenvector of ``rho`` when its eigenvalue is at least ``1 - tol``."""
    herm = (rho.matrix + rho.matrix.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    if vals[-1] < 1 - tol:
        return None
    return StateVector(fix_phase(vecs[:, -1]), rho.dims, rho.labels)


def fidelity(a, b) -> float:
    """|<a|b>|^2 for vectors, <a|rho|a> for a vector against a density operator."""
    va = a.amplitudes if isinstance(a, StateVector) else a
    if isinstance(b, DensityOperator):
        return float(np.real(np.vdot(va, b.matrix @ va)))
    vb = b.amplitudes if isinstance(b, StateVector) else b
    return float(abs(np.vdot(va, vb)) ** 2)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0) < tol)


def gram_schmidt_completion(vectors: np.ndarray, dim: int, order: str = "forward") -> np.ndarray:
    """Orthonormal columns spanning the complement of the columns of ``vectors``.

    Standard basis vectors are orthogonalised against the span in index order
    (``order="reversed"`` walks the indices backwards). Two passes of
    classical Gram-Schmidt keep the result orthonormal to ~1e-15.
    """
    basis = [np.asarray(v, dtype=complex) for v in np.asarray(vectors, dtype=complex).reshape(dim, -1).T]
    found = []
    indices = range(dim) if order == "forward" else range(dim - 1, -1, -1)
    for i in indices:
        if len(basis) + len(found) >= dim:
            break
        w = np.zeros(dim, dtype=complex)
        w[i] = 1.0
        for _ in range(2):
            for q in basis + found:
                w = w - np.vdot(q, w) * q
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            found.append(w / nrm)
    if not found:
        return np.zeros((dim, 0), dtype=complex)
    return np.stack(found, axis=1)


def complete_isometry(partial_map, dim: Optional[int] = None, order: str = "forward") -> np.ndarray:
    """Extend a partial map between orthonormal sets to a full unitary.

    ``partial_map`` is a list of ``(input, output)`` vector pairs. Inputs and
    outputs left unspecified are completed by :func:`gram_schmidt_completion`
    on each side and paired in order. An empty map gives the identity.
    """
    partial_map = list(partial_map)
    if dim is None:
        if not partial_map:
            raise DimensionMismatch("dim required for an empty partial map")
        dim = len(partial_map[0][0])
    if not partial_map:
        return np.eye(dim, dtype=complex)
    ins = np.stack([np.asarray(i, dtype=complex) for i, _ in partial_map], axis=1)
    outs = np.stack([np.asarray(o, dtype=complex) for _, o in partial_map], axis=1)
    if ins.shape[0] != dim or outs.shape[0] != dim:
        raise DimensionMismatch(f"partial map vectors must have length {dim}")
    k = ins.shape[1]
    if np.max(np.abs(ins.conj().T @ ins - np.eye(k))) > UNITARY_TOL:
        raise NotIsometric("specified inputs are not orthonormal")
    if np.max(np.abs(outs.conj().T @ outs - np.eye(k))) > UNITARY_TOL:
        raise NotIsometric("specified outputs are not orthonormal")
    ins_full = np.concatenate([ins, gram_schmidt_completion(ins, dim, order)], axis=1)
    outs_full = np.concatenate([outs, gram_schmidt_completion(outs, dim, order)], axis=1)
    u = outs_full @ ins_full.conj().T
    if not is_unitary(u):
        raise NotIsometric("completion failed to produce a unitary")
    return u


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dims: Sequence[int], labels: Sequence[str], rng: np.random.Generator) -> StateVector:
    n = _prod(dims)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StateVector.from_factors(v / np.linalg.norm(v), labels, dims)
