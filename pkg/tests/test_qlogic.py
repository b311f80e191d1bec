import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsurf import qlogic as ql
from relsurf.assignment import CircuitAssignment
from relsurf.causal import CausalStructure
from relsurf.errors import NoCommonSurface, UnknownAtom
from relsurf.qkernel import StateVector, random_unitary
from relsurf.qlogic import And, Deduction, Not, Step, Subspace, Truth, implies
from relsurf.randomized import draw_logic_instance

EDGES = ["a", "b", "c"]
DIMS = {"a": 2, "b": 3, "c": 2}


def random_subspace(rng, sup, rank=None):
    dims = [DIMS[e] for e in sup]
    n = math.prod(dims)
    rank = int(rng.integers(0, n + 1)) if rank is None else rank
    return Subspace.span(list(random_unitary(n, rng)[:, :rank].T), sup, dims)


def meet_oracle(a, b, dims):
    """Intersection as the eigenvalue-2 eigenspace of the summed embedded projectors."""
    joint = sorted(set(a.support) | set(b.support))
    pa = ql.embed(a, joint, dims).projector
    pb = ql.embed(b, joint, dims).projector
    vals, vecs = np.linalg.eigh(pa + pb)
    return vecs[:, vals > 2 - 1e-8]


def single_qubit(state):
    g = CausalStructure.from_vertices({}, ["e"])
    c = CircuitAssignment(g, {"e": 2}, {}, StateVector(np.asarray(state, dtype=complex), (2,), ("e",)))
    return g, c


def qubit_atom(name, vec):
    return ql.make_atom(name, ["e"], Subspace.span([np.asarray(vec, dtype=complex)], ["e"], [2]))


SUPPORTS = st.lists(st.sampled_from(EDGES), min_size=1, max_size=2, unique=True).map(sorted)


@settings(max_examples=60, deadline=None)
@given(sa=SUPPORTS, sb=SUPPORTS, seed=st.integers(0, 2**31))
def test_meet_matches_eigenspace_oracle(sa, sb, seed):
    rng = np.random.default_rng(seed)
    a, b = random_subspace(rng, sa), random_subspace(rng, sb)
    m = ql.subspace_meet(a, b, dims=DIMS)
    want = meet_oracle(a, b, DIMS)
    assert m.rank == want.shape[1]
    assert np.allclose(m.projector, want @ want.conj().T, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(sa=SUPPORTS, seed=st.integers(0, 2**31))
def test_complement_is_orthogonal_and_spanning(sa, seed):
    a = random_subspace(np.random.default_rng(seed), sa)
    c = ql.subspace_complement(a)
    assert a.rank + c.rank == a.total_dim
    assert np.allclose(a.basis.conj().T @ c.basis, 0, atol=1e-10)
    assert ql.subspace_complement(c).same_span(a)


@settings(max_examples=40, deadline=None)
@given(sa=SUPPORTS, sb=SUPPORTS, seed=st.integers(0, 2**31))
def test_meet_with_implication_and_consequent(sa, sb, seed):
    # [[p & (p -> q) & q]] = [[p & q]] for arbitrary subspaces
    rng = np.random.default_rng(seed)
    p = ql.make_atom("p", sa, random_subspace(rng, sa))
    q = ql.make_atom("q", sb, random_subspace(rng, sb))
    lhs = ql.denotation(And(And(p, implies(p, q)), q), DIMS)
    rhs = ql.denotation(And(p, q), DIMS)
    assert lhs.same_span(rhs, 1e-8)


def test_meet_with_implication_alone_differs_from_conjunction():
    # [[p & (p -> q)]] is the Sasaki projection of q onto p, not [[p & q]]
    p = qubit_atom("p", [1, 0])
    q = qubit_atom("q", [1, 1])
    dims = {"e": 2}
    assert ql.denotation(And(p, implies(p, q)), dims).rank == 1
    assert ql.denotation(And(p, q), dims).rank == 0


def test_commuting_implication_identity():
    p = qubit_atom("p", [1, 0])
    q = qubit_atom("q", [1, 0])
    dims = {"e": 2}
    assert ql.denotation(And(p, implies(p, q)), dims).same_span(ql.denotation(And(p, q), dims))


def test_render_round_trip_shapes():
    a, b, c = (ql.Atom(n, ("e",)) for n in "abc")
    assert ql.render(implies(a, implies(b, c))) == "a -> b -> c"
    assert ql.render(implies(implies(a, b), c)) == "(a -> b) -> c"
    assert ql.render(Not(And(a, b))) == "!(a & b)"
    assert ql.render(And(a, And(b, c))) == "a & (b & c)"
    assert ql.as_implication(implies(a, b)) == (a, b)
    assert ql.as_implication(Not(a)) is None


def test_wellformed_rejects_timelike_conjunction(fr_scenario):
    g = fr_scenario.circuit.structure
    atoms = fr_scenario.atoms
    with pytest.raises(NoCommonSurface):
        ql.wellformed(And(ql.Name("U_minus"), ql.Name("A_1")), g, atoms)
    with pytest.raises(UnknownAtom):
        ql.wellformed(ql.Name("nope"), g, atoms)
    p = ql.wellformed(And(ql.Name("U_minus"), ql.Name("W_minus")), g, atoms)
    assert ql.support(p) == {"U'", "W'"}


def test_fr_valuations(fr_scenario):
    c, at = fr_scenario.circuit, fr_scenario.atoms
    assert ql.valuate(And(at["U_minus"], at["W_minus"]), c) is Truth.POSSIBLE
    assert abs(ql.projection_weight(And(at["U_minus"], at["W_minus"]), c) - 1 / 12) < 1e-12
    assert ql.valuate(implies(at["U_minus"], at["B_1"]), c) is Truth.TRUE
    assert ql.valuate(implies(at["B_1"], at["A_1"]), c) is Truth.TRUE
    assert ql.valuate(implies(at["A_1"], at["W_plus"]), c) is Truth.TRUE
    assert ql.valuate(And(at["W_plus"], at["W_minus"]), c) is Truth.FALSE


def test_fr_deduction_verdict(fr_scenario):
    v = ql.assess_soundness(fr_scenario.deduction, fr_scenario.circuit)
    assert v.report.n_valid == 6 and v.report.valid
    assert [x.value for x in v.premise_values] == ["possible", "true", "true", "true"]
    assert v.conclusion_value is Truth.FALSE
    assert v.kind == "unsound" and not v.single_surface


@pytest.mark.parametrize("step, fragment", [
    (Step(1, (1,), "x"), "not a conjunction"),
    (Step(2, (0,), "x"), "projected conjunct"),
    (Step(3, (0,), "x"), "two antecedents"),
    (Step(4, (0, 0), "x"), "p, p -> q"),
    (Step(7, (0,), "x"), "unknown rule"),
    (Step(1, (9,), "x"), "out of range"),
])
def test_invalid_steps_are_reported(step, fragment):
    g, _ = single_qubit([1, 0])
    a, b = qubit_atom("a", [1, 0]), qubit_atom("b", [0, 1])
    report = ql.check_deduction(Deduction([And(a, b), b], [step]), g)
    assert not report.valid and fragment in report.steps[0].reason


def test_rule3_surface_side_condition(fr_scenario):
    at = fr_scenario.atoms
    d = Deduction([at["U_minus"], at["A_1"]], [Step(3, (0, 1), And(at["U_minus"], at["A_1"]))])
    report = ql.check_deduction(d, fr_scenario.circuit.structure)
    assert "no common spacelike surface" in report.steps[0].reason


def test_rule4_accepts_either_order():
    g, _ = single_qubit([1, 0])
    a, b = qubit_atom("a", [1, 0]), qubit_atom("b", [0, 1])
    for src in ((0, 1), (1, 0)):
        assert ql.check_deduction(Deduction([a, implies(a, b)], [Step(4, src, b)]), g).valid


def test_premises_with_two_possibles_are_ineligible():
    g, c = single_qubit(np.array([1, 1]) / np.sqrt(2))
    a, b = qubit_atom("a", [1, 0]), qubit_atom("b", [0, 1])
    v = ql.assess_soundness(Deduction([a, b], [Step(3, (0, 1), And(a, b))]), c)
    assert v.kind == "premises_ineligible"


# Single-surface soundness only holds when the denotations involved commute.
# The two deductions below meet every hypothesis of that claim and still end false.

def test_single_surface_true_and_possible_premise_can_conclude_false():
    g, c = single_qubit([1, 0])
    a, b = qubit_atom("a", [1, 0]), qubit_atom("b", [1, 1])
    v = ql.assess_soundness(Deduction([a, b], [Step(3, (0, 1), And(a, b))]), c)
    assert [x.value for x in v.premise_values] == ["true", "possible"]
    assert v.single_surface and v.report.valid
    assert v.conclusion_value is Truth.FALSE and v.kind == "unsound"


def test_single_surface_all_true_premises_can_conclude_false():
    g, c = single_qubit([1, 0])
    a, b = qubit_atom("a", [1, 0]), qubit_atom("b", [1, 1])
    d = Deduction([a, implies(a, b)], [Step(4, (0, 1), b), Step(3, (0, 2), And(a, b))])
    v = ql.assess_soundness(d, c)
    assert [x.value for x in v.premise_values] == ["true", "true"]
    assert v.single_surface and v.report.valid
    assert v.conclusion_value is Truth.FALSE and v.kind == "unsound"


def _meet_all(props, dims):
    acc = ql.denotation(props[0], dims)
    for p in props[1:]:
        acc = ql.subspace_meet(acc, ql.denotation(p, dims), dims=dims)
    return acc


@pytest.mark.parametrize("seed", range(60))
def test_commuting_single_surface_deductions_are_monotone_and_sound(seed):
    inst = draw_logic_instance(np.random.default_rng(seed), commuting=True)
    c, d = inst.circuit, inst.deduction
    v = ql.assess_soundness(d, c)
    assert v.report.valid and v.single_surface
    assert v.kind == "sound"
    dims, props = c.dims, d.propositions
    base = _meet_all(list(d.premises), dims)
    full = _meet_all(props, dims)
    joint = sorted(set(base.support) | set(full.support))
    assert ql.embed(base, joint, dims).same_span(ql.embed(full, joint, dims), 1e-8)


@pytest.mark.parametrize("seed", range(30))
def test_rules_without_modus_ponens_keep_the_premise_meet(seed):
    rng = np.random.default_rng(seed)
    inst = draw_logic_instance(rng, commuting=False)
    d = inst.deduction
    steps = []
    props = list(d.premises)
    for st_ in d.steps:
        if st_.rule == 4:
            break
        steps.append(st_)
        props.append(st_.prop)
    dims = inst.circuit.dims
    base = _meet_all(list(d.premises), dims)
    full = _meet_all(props, dims)
    joint = sorted(set(base.support) | set(full.support))
    assert ql.embed(base, joint, dims).same_span(ql.embed(full, joint, dims), 1e-8)


@settings(max_examples=40, deadline=None)
@given(sa=SUPPORTS, sb=SUPPORTS, seed=st.integers(0, 2**31))
def test_double_negation_and_idempotence(sa, sb, seed):
    rng = np.random.default_rng(seed)
    p = ql.make_atom("p", sa, random_subspace(rng, sa))
    q = ql.make_atom("q", sb, random_subspace(rng, sb))
    for phi in (p, And(p, q), implies(p, q)):
        assert ql.denotation(Not(Not(phi)), DIMS).same_span(ql.denotation(phi, DIMS))
        assert ql.denotation(And(phi, phi), DIMS).same_span(ql.denotation(phi, DIMS))


def test_valuation_is_surface_independent_on_fr(fr_scenario):
    from relsurf import causal

    c, at = fr_scenario.circuit, fr_scenario.atoms
    ss = causal.enumerate_surfaces(c.structure)
    props = list(at.values()) + [implies(at["U_minus"], at["B_1"]), implies(at["A_1"], at["W_plus"]),
                                 And(at["U_minus"], at["W_minus"])]
    for p in props:
        holders = [s for s in ss if ql.support(p) <= s.edges]
        weights = [ql.projection_weight(p, c, s) for s in holders]
        assert max(weights) - min(weights) < 1e-12
    assert any(len([s for s in ss if ql.support(p) <= s.edges]) >= 2 for p in props)


@pytest.mark.parametrize("seed", range(20))
def test_valuation_is_surface_independent_on_random_circuits(seed):
    from relsurf import causal
    from relsurf.randomized import random_atoms, random_circuit

    rng = np.random.default_rng(seed)
    c = random_circuit(rng)
    ss = causal.enumerate_surfaces(c.structure)
    for a in random_atoms(rng, c, ss[0]):
        holders = [s for s in ss if set(a.support) <= s.edges]
        weights = [ql.projection_weight(a, c, s) for s in holders]
        assert max(weights) - min(weights) < 1e-10
