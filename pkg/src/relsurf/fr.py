"""The FR two-lab, four-agent protocol as a causal structure with a circuit assignment.

Edge ids follow the protocol: each agent or qubit segment gets one more prime
per event it passes through (``R``, ``R'``, ``R''``). Agent edges ``A``, ``B``
use the basis (0, 1, ⊥); ``U``, ``W`` use (+, -, ⊥); ``R``, ``S`` are qubits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import causal
from .assignment import HADAMARD, CircuitAssignment, make_controlled_gate, make_recording_gate
from .causal import CausalStructure, Surface
from .qkernel import DensityOperator, StateVector, fidelity, partial_trace, tensor_product
from .qlogic import Atom, Deduction, SoundnessVerdict, Step, Subspace, assess_soundness, implies, make_atom
from .qlogic import And
from .relstate import ChainResult, RelStateQuery, chain, relative_state

BLANK = 2

VERTICES = {
    "M_A": (("A", "R"), ("A'", "R'")),
    "P": (("A'", "S"), ("A''", "S'")),
    "M_B": (("B", "S'"), ("B'", "S''")),
    "M_U": (("U", "R'", "A''"), ("U'", "R''", "A'''")),
    "M_W": (("W", "S''", "B'"), ("W'", "S'''", "B''")),
}

SURFACE_NAMES = {
    "S0": frozenset(),
    "S1": frozenset({"M_A", "P", "M_B", "M_U"}),
    "S2": frozenset({"M_A", "P", "M_B"}),
    "S3": frozenset({"M_A", "P", "M_B", "M_W"}),
    "S4": frozenset({"M_A", "P", "M_B", "M_U", "M_W"}),
}

KIND_LABELS = {
    "R": ("0", "1"),
    "S": ("0", "1"),
    "A": ("0", "1", "⊥"),
    "B": ("0", "1", "⊥"),
    "U": ("+", "-", "⊥"),
    "W": ("+", "-", "⊥"),
}

ARGUMENT1_EDGES = ("U'", "B'", "A''", "W'")
ARGUMENT2_EDGES = ("U'", "W'")


def _kind(edge: str) -> str:
    return edge.rstrip("'")


def edge_dim(edge: str) -> int:
    return len(KIND_LABELS[_kind(edge)])


def _basis(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def bell_pair(sign: int, d2: int = 3) -> np.ndarray:
    """(|0,0> + sign |1,1>)/sqrt(2) on a qubit (x) a ``d2``-level agent."""
    return (np.kron(_basis(2, 0), _basis(d2, 0)) + sign * np.kron(_basis(2, 1), _basis(d2, 1))) / np.sqrt(2)


def protocol_gates(completion: str = "forward") -> dict[str, np.ndarray]:
    qubit = [_basis(2, 0), _basis(2, 1)]
    agent_meas = make_recording_gate(3, qubit, [0, 1], BLANK, order=completion)
    pair_meas = make_recording_gate(3, [bell_pair(+1), bell_pair(-1)], [0, 1], BLANK, order=completion)
    return {
        "M_A": agent_meas,
        "P": make_controlled_gate(3, {1: HADAMARD}),
        "M_B": agent_meas,
        "M_U": pair_meas,
        "M_W": pair_meas,
    }


def initial_state() -> StateVector:
    r = StateVector(np.array([math.sqrt(1 / 3), math.sqrt(2 / 3)]), (2,), ("R",))
    psi = tensor_product(r, StateVector.basis("S", 2, 0))
    for agent in "ABUW":
        psi = tensor_product(psi, StateVector.basis(agent, 3, BLANK))
    return psi


def fr_structure() -> CausalStructure:
    return causal.CausalStructure.from_vertices(VERTICES)


def atom_table(dims: Mapping[str, int]) -> dict[str, Atom]:
    specs = [("U_minus", "U'", 1), ("B_1", "B'", 1), ("A_1", "A''", 1),
             ("W_minus", "W'", 1), ("W_plus", "W'", 0)]
    return {
        name: make_atom(name, [edge], Subspace.span([_basis(dims[edge], k)], [edge], [dims[edge]]))
        for name, edge, k in specs
    }


def fr_deduction(atoms: Mapping[str, Atom]) -> Deduction:
    u, b, a = atoms["U_minus"], atoms["B_1"], atoms["A_1"]
    wm, wp = atoms["W_minus"], atoms["W_plus"]
    premises = [And(u, wm), implies(u, b), implies(b, a), implies(a, wp)]
    steps = [
        Step(1, (0,), u),
        Step(4, (4, 1), b),
        Step(4, (5, 2), a),
        Step(4, (6, 3), wp),
        Step(2, (0,), wm),
        Step(3, (7, 8), And(wp, wm)),
    ]
    return Deduction(premises, steps, name="fr")


@dataclass(frozen=True, eq=False)
class FrScenario:
    circuit: CircuitAssignment
    surfaces: dict[str, Surface]
    atoms: dict[str, Atom]
    deduction: Deduction


def build_fr(completion: str = "forward") -> FrScenario:
    """Assemble the protocol. ``completion`` picks how recording gates fill unreached inputs."""
    g = fr_structure()
    dims = {e: edge_dim(e) for e in g.edge_ids}
    circuit = CircuitAssignment(
        g, dims, protocol_gates(completion), initial_state(),
        basis_labels={e: KIND_LABELS[_kind(e)] for e in g.edge_ids},
        surface_names=SURFACE_NAMES,
    )
    surfaces = {name: circuit.surface(name) for name in SURFACE_NAMES}
    atoms = atom_table(dims)
    return FrScenario(circuit, surfaces, atoms, fr_deduction(atoms))


# -- reference states written in grouped bases -------------------------------

REFERENCE_GROUPS = {
    "S0": (("U",), ("R",), ("A",), ("S",), ("B",), ("W",)),
    "S1": (("U'",), ("R''", "A'''"), ("S''",), ("B'",), ("W",)),
    "S2": (("U",), ("R'",), ("A''",), ("S''",), ("B'",), ("W",)),
    "S3": (("U",), ("R'",), ("A''",), ("S'''", "B''"), ("W'",)),
    "S4": (("U'",), ("R''", "A'''"), ("S'''", "B''"), ("W'",)),
}

REFERENCE_TERMS = {
    "S0": ((math.sqrt(1 / 3), "⊥0⊥0⊥⊥"), (math.sqrt(2 / 3), "⊥1⊥0⊥⊥")),
    "S1": ((math.sqrt(2 / 3), "++00⊥"), (math.sqrt(1 / 6), "++11⊥"), (-math.sqrt(1 / 6), "--11⊥")),
    "S2": ((math.sqrt(1 / 3), "⊥0000⊥"), (math.sqrt(1 / 3), "⊥1100⊥"), (math.sqrt(1 / 3), "⊥1111⊥")),
    "S3": ((math.sqrt(1 / 6), "⊥00++"), (math.sqrt(1 / 6), "⊥00--"), (math.sqrt(2 / 3), "⊥11++")),
    "S4": ((math.sqrt(3 / 4), "++++"), (math.sqrt(1 / 12), "++--"),
           (-math.sqrt(1 / 12), "--++"), (math.sqrt(1 / 12), "----")),
}


def grouped_ket(groups, symbols: str) -> StateVector:
    """Product ket with one symbol per group; two-edge groups take ``+``/``-`` Bell pairs."""
    if len(groups) != len(symbols):
        raise ValueError(f"{len(symbols)} symbols for {len(groups)} groups")
    labels, dims, vec = [], [], np.ones(1, dtype=complex)
    for group, sym in zip(groups, symbols):
        if len(group) == 1:
            (edge,) = group
            kind = KIND_LABELS[_kind(edge)]
            part = _basis(len(kind), kind.index(sym))
        else:
            part = bell_pair(+1 if sym == "+" else -1, edge_dim(group[1]))
        labels.extend(group)
        dims.extend(edge_dim(e) for e in group)
        vec = np.kron(vec, part)
    return StateVector.from_factors(vec, labels, dims)


def table_state(name: str) -> StateVector:
    groups = REFERENCE_GROUPS[name]
    amps = None
    for coef, symbols in REFERENCE_TERMS[name]:
        ket = grouped_ket(groups, symbols)
        amps = coef * ket.amplitudes if amps is None else amps + coef * ket.amplitudes
    return StateVector(amps, ket.dims, ket.labels)


def verify_table1(sc) -> dict[str, float]:
    """Fidelity between each computed named surface state and its reference."""
    circuit = sc.circuit if isinstance(sc, FrScenario) else sc
    out = {}
    for name in REFERENCE_TERMS:
        psi = circuit.state_on(circuit.surface(name))
        ref = table_state(name)
        if psi.labels != ref.labels:
            raise ValueError(f"surface {name} carries {psi.labels}, reference has {ref.labels}")
        out[name] = fidelity(psi, ref)
    return out


def born_weights(sc) -> dict[str, float]:
    """Joint outcome probabilities of the two final pair measurements."""
    circuit = sc.circuit if isinstance(sc, FrScenario) else sc
    rho = partial_trace(circuit.state_on(circuit.surface("S4")), ["U'", "W'"])
    diag = np.real(np.diag(rho.matrix)).reshape(3, 3)
    signs = "+-"
    return {u + w: float(diag[i, j]) for i, u in enumerate(signs) for j, w in enumerate(signs)}


def minus(dim: int = 3) -> np.ndarray:
    return _basis(dim, 1)


def run_argument1(sc) -> ChainResult:
    circuit = sc.circuit if isinstance(sc, FrScenario) else sc
    return chain(circuit, ARGUMENT1_EDGES, minus())


def run_argument2(sc) -> DensityOperator:
    circuit = sc.circuit if isinstance(sc, FrScenario) else sc
    return relative_state(circuit, RelStateQuery(*ARGUMENT2_EDGES, minus()))


def run_fr_deduction(sc) -> SoundnessVerdict:
    return assess_soundness(sc.deduction, sc.circuit)
