import itertools

import numpy as np
import pytest

from relsurf import causal
from relsurf.assignment import (
    HADAMARD,
    CircuitAssignment,
    TabulatedAssignment,
    check_consistency,
    inconsistent_pairs,
    make_controlled_gate,
    make_recording_gate,
)
from relsurf.causal import CausalStructure
from relsurf.errors import DimensionMismatch, UnknownSurface, ValidationError
from relsurf.qkernel import StateVector, is_unitary
from relsurf.randomized import random_circuit


def two_parallel():
    return CausalStructure.from_vertices({"u": (["a"], ["a'"]), "v": (["b"], ["b'"])})


def ket(vec, labels, dims):
    return StateVector.from_factors(np.asarray(vec, dtype=complex), labels, dims)


def test_fr_all_pairs_consistent(fr_scenario):
    c = fr_scenario.circuit
    ss = causal.enumerate_surfaces(c.structure)
    pairs = list(itertools.combinations(ss, 2))
    assert len(pairs) == 28
    assert all(check_consistency(c, a, b) for a, b in pairs)


def test_tabulated_table_with_mismatched_marginals_fails():
    g = two_parallel()
    zero_zero = ket([1, 0, 0, 0], ["a", "b"], [2, 2])
    states = {
        frozenset(): zero_zero,
        frozenset({"u"}): ket([1, 0, 0, 0], ["a'", "b"], [2, 2]),
        # a was never touched and b' should be |0>; the row claims |1,1>
        frozenset({"v"}): ket([0, 0, 0, 1], ["a", "b'"], [2, 2]),
        frozenset({"u", "v"}): ket([1, 0, 0, 0], ["a'", "b'"], [2, 2]),
    }
    t = TabulatedAssignment(g, states)
    s0, su, sv, suv = causal.enumerate_surfaces(g)
    assert not check_consistency(t, s0, sv)
    assert check_consistency(t, s0, su)
    assert check_consistency(t, su, suv)
    assert not check_consistency(t, sv, suv)
    assert len(inconsistent_pairs(t)) == 2


def test_tampered_fr_table_fails(fr_scenario):
    c = fr_scenario.circuit
    ss = causal.enumerate_surfaces(c.structure)
    states = {s.fired: c.state_on(s) for s in ss}
    s4 = c.surface("S4")
    psi = states[s4.fired]
    amps = psi.amplitudes.copy()
    nz = np.flatnonzero(np.abs(amps) > 1e-9)
    amps[nz[0]], amps[nz[1]] = amps[nz[1]], amps[nz[0]]
    states[s4.fired] = StateVector(amps, psi.dims, psi.labels)
    bad = inconsistent_pairs(TabulatedAssignment(c.structure, states))
    assert bad and all(s4 in pair for pair in bad)


@pytest.mark.parametrize("trial", range(10))
def test_random_circuits_are_consistent(trial):
    c = random_circuit(np.random.default_rng(trial))
    assert inconsistent_pairs(c) == []


def test_dimension_product_mismatch_rejected():
    g = CausalStructure.from_vertices({"v": (["a"], ["b"])})
    with pytest.raises(ValidationError, match="product"):
        CircuitAssignment(g, {"a": 2, "b": 3}, {"v": np.eye(2)}, StateVector.basis("a", 2, 0))


def test_non_unitary_and_bad_initial_rejected():
    g = CausalStructure.from_vertices({"v": (["a"], ["b"])})
    with pytest.raises(ValidationError, match="unitary"):
        CircuitAssignment(g, {"a": 2, "b": 2}, {"v": np.ones((2, 2))}, StateVector.basis("a", 2, 0))
    with pytest.raises(ValidationError, match="norm"):
        CircuitAssignment(g, {"a": 2, "b": 2}, {"v": np.eye(2)},
                          StateVector(np.array([1, 1]), (2,), ("a",)))
    with pytest.raises(ValidationError, match="sourceless"):
        CircuitAssignment(g, {"a": 2, "b": 2}, {"v": np.eye(2)}, StateVector.basis("b", 2, 0))


def test_named_surfaces(fr_scenario):
    c = fr_scenario.circuit
    s2 = c.surface("S2")
    assert c.name_of(s2) == "S2"
    assert c.surface(s2.fired) == s2
    with pytest.raises(UnknownSurface):
        c.surface("S9")
    with pytest.raises(UnknownSurface):
        c.surface({"M_U"})


def test_recording_gate_action():
    e = np.eye(2, dtype=complex)
    u = make_recording_gate(3, [e[0], e[1]], [0, 1], 2)
    assert is_unitary(u)
    blank = np.array([0, 0, 1], dtype=complex)
    for k in (0, 1):
        out = u @ np.kron(blank, e[k])
        want = np.kron(np.eye(3)[k], e[k])
        assert np.allclose(out, want)


def test_recording_gate_leaves_unlisted_directions_blank():
    e = np.eye(3, dtype=complex)
    u = make_recording_gate(3, [e[0]], [0], 2)
    blank = e[2]
    assert np.allclose(u @ np.kron(blank, e[1]), np.kron(blank, e[1]))
    with pytest.raises(DimensionMismatch):
        make_recording_gate(2, [e[0], e[1]], [0, 1], 1)


def test_controlled_gate():
    u = make_controlled_gate(3, {1: HADAMARD})
    assert is_unitary(u)
    assert np.allclose(u[2:4, 2:4], HADAMARD)
    assert np.allclose(u[:2, :2], np.eye(2))
