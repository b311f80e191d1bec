import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsurf import qkernel as qk
from relsurf.errors import DimensionMismatch, LabelClash, NotIsometric


def loop_partial_trace(psi, keep):
    """Entry-by-entry reduced density matrix; slow but obviously right."""
    keep = sorted(keep)
    ki = [psi.labels.index(k) for k in keep]
    ti = [i for i in range(len(psi.labels)) if i not in ki]
    kd = [psi.dims[i] for i in ki]
    td = [psi.dims[i] for i in ti]
    t = psi.tensor
    n = int(np.prod(kd)) if kd else 1
    rho = np.zeros((n, n), dtype=complex)
    for r, a in enumerate(itertools.product(*[range(d) for d in kd])):
        for c, b in enumerate(itertools.product(*[range(d) for d in kd])):
            acc = 0
            for rest in itertools.product(*[range(d) for d in td]):
                ia, ib = [0] * len(psi.dims), [0] * len(psi.dims)
                for pos, v in zip(ki, a):
                    ia[pos] = v
                for pos, v in zip(ki, b):
                    ib[pos] = v
                for pos, v in zip(ti, rest):
                    ia[pos] = ib[pos] = v
                acc += t[tuple(ia)] * np.conj(t[tuple(ib)])
            rho[r, c] = acc
    return rho


dims_st = st.lists(st.integers(2, 3), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(dims=dims_st, seed=st.integers(0, 2**31), data=st.data())
def test_partial_trace_matches_loop_oracle(dims, seed, data):
    rng = np.random.default_rng(seed)
    labels = [f"q{i}" for i in range(len(dims))]
    psi = qk.random_state(dims, labels, rng)
    keep = data.draw(st.lists(st.sampled_from(labels), unique=True))
    rho = qk.partial_trace(psi, keep)
    assert np.allclose(rho.matrix, loop_partial_trace(psi, keep), atol=1e-12)
    assert abs(rho.trace - 1) < 1e-9
    # density-input path agrees with the vector path
    rho2 = qk.partial_trace(qk.outer(psi), keep)
    assert np.allclose(rho.matrix, rho2.matrix, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), dim=st.integers(1, 6))
def test_random_unitary_is_unitary(seed, dim):
    assert qk.is_unitary(qk.random_unitary(dim, np.random.default_rng(seed)))


def test_from_factors_reorders_canonically():
    a = np.array([1, 0], dtype=complex)
    b = np.array([0, 0, 1], dtype=complex)
    psi = qk.StateVector.from_factors(np.kron(b, a), ["z", "a"], [3, 2])
    assert psi.labels == ("a", "z") and psi.dims == (2, 3)
    assert np.allclose(psi.amplitudes, np.kron(a, b))


def test_constructor_rejects_bad_input():
    with pytest.raises(LabelClash):
        qk.StateVector(np.ones(4), (2, 2), ("b", "a"))
    with pytest.raises(DimensionMismatch):
        qk.StateVector(np.ones(3), (2,), ("a",))
    with pytest.raises(LabelClash):
        qk.tensor_product(qk.StateVector.basis("a", 2, 0), qk.StateVector.basis("a", 2, 1))


def test_apply_on_factors_relabels():
    psi = qk.tensor_product(qk.StateVector.basis("a", 2, 0), qk.StateVector.basis("b", 2, 1))
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    out = qk.apply_on_factors(x, ["a"], ["a'"], psi)
    assert out.labels == ("a'", "b")
    assert np.allclose(out.amplitudes, [0, 0, 0, 1])


def test_fix_phase_makes_first_entry_positive():
    v = qk.fix_phase(np.array([0, -1j, 1]) / np.sqrt(2))
    assert abs(v[1] - 1 / np.sqrt(2)) < 1e-15


def test_as_pure_and_fidelity():
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    rho = qk.outer(qk.StateVector(plus, (2,), ("a",)))
    pure = qk.as_pure(rho)
    assert pure is not None and abs(qk.fidelity(pure, plus) - 1) < 1e-12
    mixed = qk.DensityOperator(np.eye(2) / 2, (2,), ("a",))
    assert qk.as_pure(mixed) is None
    assert abs(qk.purity_eigenvalue(mixed) - 0.5) < 1e-12
    assert abs(qk.fidelity(plus, mixed) - 0.5) < 1e-12


@pytest.mark.parametrize("order", ["forward", "reversed"])
def test_complete_isometry_respects_partial_map(order):
    rng = np.random.default_rng(3)
    u = qk.random_unitary(5, rng)
    v = qk.random_unitary(5, rng)
    pairs = [(u[:, i], v[:, i]) for i in range(2)]
    w = qk.complete_isometry(pairs, order=order)
    assert qk.is_unitary(w)
    for i, o in pairs:
        assert np.allclose(w @ i, o)


def test_completion_orders_differ():
    e = np.eye(3, dtype=complex)
    pair = [(e[0], (e[0] + e[1]) / np.sqrt(2))]
    f = qk.complete_isometry(pair, order="forward")
    r = qk.complete_isometry(pair, order="reversed")
    assert not np.allclose(f, r)


def test_complete_isometry_errors():
    with pytest.raises(NotIsometric):
        qk.complete_isometry([(np.array([1, 0]), np.array([1, 1]))])
    assert np.allclose(qk.complete_isometry([], dim=3), np.eye(3))
    with pytest.raises(DimensionMismatch):
        qk.complete_isometry([])
