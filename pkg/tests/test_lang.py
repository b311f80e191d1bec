import json

import numpy as np
import pytest

from relsurf import lang, report
from relsurf.cli import bundled_fr_dir, builtin_workspace
from relsurf.errors import ParseError, ValidationError
from relsurf.qlogic import And, Name, Not, implies, render


def names(*xs):
    return [Name(x) for x in xs]


def test_precedence_and_associativity():
    a, b, c = names("a", "b", "c")
    assert lang.parse_prop("a & b -> c") == implies(And(a, b), c)
    assert lang.parse_prop("a -> b -> c") == implies(a, implies(b, c))
    assert lang.parse_prop("!a & b") == And(Not(a), b)
    assert lang.parse_prop("a & b & c") == And(And(a, b), c)
    assert lang.parse_prop("!(a -> b)") == Not(implies(a, b))
    assert lang.parse_prop("U' & A''") == And(Name("U'"), Name("A''"))


@pytest.mark.parametrize("text", ["a -> b -> c", "(a -> b) -> c", "!(a & b)", "a & (b & c)",
                                  "!!a", "a & !b -> !(c & a)"])
def test_render_parse_round_trip(text):
    p = lang.parse_prop(text)
    assert render(p) == text
    assert lang.parse_prop(render(p)) == p


@pytest.mark.parametrize("text, col, fragment", [
    ("a & ", 4, "end of proposition"),
    ("a $ b", 3, "unexpected character"),
    ("(a & b", 7, "expected ')'"),
    ("a b", 3, "unexpected 'b'"),
    ("", 1, "empty"),
])
def test_parse_errors_carry_positions(text, col, fragment):
    with pytest.raises(ParseError) as info:
        lang.parse_prop(text, line=4, source="x.ded")
    err = info.value
    assert (err.line, err.column) == (4, col)
    assert fragment in str(err) and str(err).startswith("x.ded:4:")


def test_undeclared_atom_in_deduction(fr_scenario):
    c = fr_scenario.circuit
    text = "deduction t\npremises:\n  U_minus & Nope\n"
    with pytest.raises(ParseError) as info:
        lang.parse_deduction(text, c.structure, fr_scenario.atoms, "t.ded")
    assert (info.value.line, info.value.column) == (3, 13)


def test_timelike_conjunction_is_a_validation_error(fr_scenario):
    c = fr_scenario.circuit
    text = "premises:\n  U_minus & A_1\n"
    with pytest.raises(ValidationError):
        lang.parse_deduction(text, c.structure, fr_scenario.atoms)


@pytest.mark.parametrize("text, line, fragment", [
    ("atom x on U' : ket 7\n", 1, "outside dimension"),
    ("\natom x on Q : ket 0\n", 2, "unknown edge"),
    ("atom x on U' : basis [[1, 0\n", 1, "bad basis"),
    ("atom x U'\n", 1, "expected 'atom"),
    ("atom x on W' : ket 0\natom x on W' : ket 1\n", 2, "declared twice"),
])
def test_atom_file_errors(fr_scenario, text, line, fragment):
    c = fr_scenario.circuit
    with pytest.raises(ParseError) as info:
        lang.parse_atoms(text, c.structure, c.dims, "a.txt")
    assert info.value.line == line and fragment in str(info.value)


def test_atom_payload_kinds_agree(fr_scenario):
    c = fr_scenario.circuit
    text = ("atom k on W' : ket 1\n"
            "atom b on W' : basis [[0, [1, 0], 0]]\n"
            "atom p on W' : projector [[0,0,0],[0,1,0],[0,0,0]]\n")
    at = lang.parse_atoms(text, c.structure, c.dims)
    assert at["k"].denotation.same_span(at["b"].denotation)
    assert at["k"].denotation.same_span(at["p"].denotation)


def test_deduction_file_structure_errors(fr_scenario):
    c = fr_scenario.circuit
    with pytest.raises(ParseError, match="premises"):
        lang.parse_deduction("step 1 from 0: U_minus\n", c.structure, fr_scenario.atoms)
    with pytest.raises(ParseError, match="unknown rule"):
        lang.parse_deduction("premises:\n U_minus\nstep 9 from 0: U_minus\n", c.structure, fr_scenario.atoms)


def test_bundled_files_match_constructor(fr_scenario):
    ws = lang.load_workspace_dir(bundled_fr_dir())
    c, ref = ws.circuit, fr_scenario.circuit
    assert c.structure == ref.structure and c.dims == ref.dims
    for v in ref.gates:
        assert np.allclose(c.gates[v], ref.gates[v], atol=1e-15)
    assert np.allclose(c.initial.amplitudes, ref.initial.amplitudes, atol=1e-15)
    assert c.surface_names == ref.surface_names
    assert ws.deductions["fr"] == fr_scenario.deduction
    for name, atom in fr_scenario.atoms.items():
        assert ws.atoms[name].denotation.same_span(atom.denotation)


def test_workspace_round_trip(tmp_path):
    ws = builtin_workspace()
    lang.save_workspace(ws, tmp_path)
    back = lang.load_workspace_dir(tmp_path)
    before = report.fr_demo_report(ws.circuit, ws.deductions["fr"])
    after = report.fr_demo_report(back.circuit, back.deductions["fr"])
    assert report.dumps(before) == report.dumps(after)
    assert back.deductions == ws.deductions
    # a second trip is textually stable
    lang.save_workspace(back, tmp_path / "again")
    for f in ("circuit.json", "atoms.txt", "fr.ded"):
        assert (tmp_path / f).read_text() == (tmp_path / "again" / f).read_text()


def test_dimension_mismatch_in_circuit_file(tmp_path):
    data = {"edges": [{"id": "a", "dim": 2}, {"id": "b", "dim": 3}],
            "vertices": [{"id": "v", "in": ["a"], "out": ["b"], "gate": "identity"}],
            "initial": {"product": [{"edge": "a", "amplitudes": [1, 0]}]}}
    with pytest.raises(ValidationError, match="product of input dimensions"):
        lang.circuit_from_dict(data)


def test_json_syntax_error_position(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n "edges": [\n  {"id": "a",, "dim": 2}]\n}\n')
    with pytest.raises(ParseError) as info:
        lang.load_circuit(p)
    assert info.value.line == 3


def test_state_literals():
    labels = ("+", "-", "⊥")
    assert np.allclose(lang.parse_state_literal("|->", 3, labels), [0, 1, 0])
    assert np.allclose(lang.parse_state_literal("2", 3), [0, 0, 1])
    assert np.allclose(lang.parse_state_literal(json.dumps([0.6, [0, 0.8]]), 2), [0.6, 0.8j])
    with pytest.raises(ValidationError):
        lang.parse_state_literal("[1, 1]", 2)
    with pytest.raises(ParseError):
        lang.parse_state_literal("|x>", 3, labels)
