"""Readers and writers for circuit, atom and deduction files.

Circuit files are JSON. Atom and deduction files are line-oriented text;
every parse failure raises :class:`ParseError` with a 1-based line and column.

Atom file::

    # name     support         denotation
    atom U_minus on U' : ket 1
    atom RA_plus on R'', A''' : basis [[0.7071, 0, 0, 0, 0.7071, 0]]

Deduction file::

    deduction fr
    premises:
      U_minus & W_minus
      U_minus -> B_1
    step 1 from 0: U_minus
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import causal
from .assignment import HADAMARD, CircuitAssignment, make_controlled_gate, make_recording_gate
from .causal import CausalStructure
from .errors import DimensionMismatch, NoCommonSurface, ParseError, UnknownAtom, ValidationError
from .qkernel import StateVector, fix_phase, tensor_product
from .qlogic import And, Atom, Deduction, Name, Not, Step, Subspace, implies, make_atom, render, wellformed

# -- numbers -----------------------------------------------------------------


def complex_entry(x, where="") -> complex:
    if isinstance(x, bool):
        raise ValidationError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ValidationError(f"{where}: expected a number or [re, im], got {x!r}")


def complex_vector(xs, where="") -> np.ndarray:
    if not isinstance(xs, list):
        raise ValidationError(f"{where}: expected a list of amplitudes")
    return np.array([complex_entry(x, where) for x in xs], dtype=complex)


def complex_matrix(rows, where="") -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ValidationError(f"{where}: expected a list of rows")
    mat = [complex_vector(r, where) for r in rows]
    if len({len(r) for r in mat}) != 1:
        raise ValidationError(f"{where}: ragged matrix")
    return np.array(mat)


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real + 0.0, z.imag + 0.0]  # no negative zeros


# -- proposition grammar -----------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<arrow>->)|(?P<op>[!&()])|(?P<name>[A-Za-z_][A-Za-z0-9_']*))")


class _Tokens:
    def __init__(self, text, line, col, source):
        self.items = []
        self.line, self.source = line, source
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError(f"unexpected character {text[bad]!r}", line, col + bad, source)
            kind = m.lastgroup
            start = m.start(kind)
            self.items.append((kind, m.group(kind), col + start))
            pos = m.end()
        self.end_col = col + len(text)
        self.i = 0

    def peek(self):
        return self.items[self.i] if self.i < len(self.items) else ("end", None, self.end_col)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, reason, tok=None):
        tok = tok or self.peek()
        raise ParseError(reason, self.line, tok[2], self.source)


def parse_prop(text: str, line: int = 1, column: int = 1, source: Optional[str] = None):
    """Parse proposition text into a tree whose leaves are :class:`Name` nodes.

    Precedence is ``!`` over ``&`` over ``->``; ``&`` groups left, ``->`` right.
    """
    toks = _Tokens(text, line, column, source)
    if not toks.items:
        toks.fail("empty proposition")
    tree = _implication(toks)
    if toks.peek()[0] != "end":
        toks.fail(f"unexpected {toks.peek()[1]!r}")
    return tree


def _implication(toks):
    left = _conjunction(toks)
    if toks.peek()[0] == "arrow":
        toks.take()
        return implies(left, _implication(toks))
    return left


def _conjunction(toks):
    node = _unary(toks)
    while toks.peek()[1] == "&":
        toks.take()
        node = And(node, _unary(toks))
    return node


def _unary(toks):
    kind, value, col = toks.take()
    if value == "!":
        return Not(_unary(toks))
    if value == "(":
        inner = _implication(toks)
        if toks.peek()[1] != ")":
            toks.fail("expected ')'")
        toks.take()
        return inner
    if kind == "name":
        return Name(value, toks.line, col)
    if kind == "end":
        toks.fail("unexpected end of proposition", (kind, value, col))
    toks.fail(f"unexpected {value!r}", (kind, value, col))


def resolve_prop(raw, structure: CausalStructure, atoms: Mapping[str, Atom], source=None):
    """Resolve names and check conjunctions; undeclared atoms become a ParseError."""
    for node in _names(raw):
        if node.name not in atoms:
            raise ParseError(f"undeclared atom {node.name!r}", node.line, node.column, source)
    try:
        return wellformed(raw, structure, atoms)
    except NoCommonSurface as exc:
        raise ValidationError(str(exc)) from exc


def _names(p):
    if isinstance(p, Name):
        yield p
    elif isinstance(p, Not):
        yield from _names(p.operand)
    elif isinstance(p, And):
        yield from _names(p.left)
        yield from _names(p.right)


# -- atom files --------------------------------------------------------------

_EDGE = r"[A-Za-z_][A-Za-z0-9_]*'*"
_ATOM_LINE = re.compile(
    rf"atom\s+(?P<name>[A-Za-z_][A-Za-z0-9_']*)\s+on\s+(?P<support>{_EDGE}(?:\s*,\s*{_EDGE})*)"
    r"\s*:\s*(?P<kind>ket|basis|projector)\b\s*(?P<payload>.*)$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def parse_atoms(text: str, structure: CausalStructure, dims: Mapping[str, int],
                source: Optional[str] = None) -> dict[str, Atom]:
    atoms: dict[str, Atom] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        m = _ATOM_LINE.match(line.strip())
        if not m:
            raise ParseError("expected 'atom <name> on <edges> : ket|basis|projector ...'",
                             lineno, indent + 1, source)
        name = m["name"]
        if name in atoms:
            raise ParseError(f"atom {name!r} declared twice", lineno, indent + 1 + m.start("name"), source)
        edges = [e.strip() for e in m["support"].split(",")]
        for e in edges:
            if e not in dims:
                raise ParseError(f"unknown edge {e!r}", lineno, indent + 1 + m.start("support"), source)
        edge_dims = [dims[e] for e in edges]
        total = math.prod(edge_dims)
        payload_col = indent + 1 + m.start("payload")
        payload = m["payload"].strip()
        try:
            if m["kind"] == "ket":
                idx = [int(tok) for tok in payload.split(",")]
                vecs = []
                for k in idx:
                    if not 0 <= k < total:
                        raise ValidationError(f"ket index {k} outside dimension {total}")
                    v = np.zeros(total)
                    v[k] = 1
                    vecs.append(v)
                sub = Subspace.span(vecs, edges, edge_dims)
            elif m["kind"] == "basis":
                data = json.loads(payload)
                if not isinstance(data, list):
                    raise ValidationError("basis expects a list of vectors")
                sub = Subspace.span([complex_vector(v, name) for v in data], edges, edge_dims)
            else:
                sub = Subspace.from_projector(complex_matrix(json.loads(payload), name), edges, edge_dims)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad {m['kind']} payload: {exc.msg}", lineno, payload_col + exc.pos,
                             source) from None
        except (ValueError, ValidationError, DimensionMismatch) as exc:
            raise ParseError(f"bad {m['kind']} payload: {exc}", lineno, payload_col, source) from None
        atoms[name] = make_atom(name, edges, sub, structure)
    return atoms


def _ket_indices(sub: Subspace) -> Optional[list[int]]:
    """Indices of the standard basis vectors spanning ``sub``, if it is such a span."""
    diag = np.real(np.diag(sub.projector))
    idx = [int(k) for k in np.flatnonzero(diag > 0.5)]
    if len(idx) != sub.rank:
        return None
    ref = np.zeros_like(diag)
    ref[idx] = 1
    return idx if np.allclose(sub.projector, np.diag(ref), atol=1e-12) else None


def dump_atoms(atoms: Mapping[str, Atom]) -> str:
    lines = []
    for name, atom in atoms.items():
        head = f"atom {name} on {', '.join(atom.support)} :"
        idx = _ket_indices(atom.denotation)
        if idx is not None and idx:
            lines.append(f"{head} ket {','.join(map(str, idx))}")
            continue
        basis = [[encode_complex(z) for z in fix_phase(col)] for col in atom.denotation.basis.T]
        lines.append(f"{head} basis {json.dumps(basis)}")
    return "\n".join(lines) + "\n"


# -- deduction files ---------------------------------------------------------

_STEP_LINE = re.compile(r"step\s+(?P<rule>\d+)\s+from\s+(?P<src>\d+(?:\s*,\s*\d+)*)\s*:(?P<prop>.*)$")


def parse_deduction(text: str, structure: CausalStructure, atoms: Mapping[str, Atom],
                    source: Optional[str] = None, default_name: str = "deduction") -> Deduction:
    name = default_name
    premises, steps = [], []
    state = "header"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        col = indent + 1
        if state == "header" and body.startswith("deduction"):
            parts = body.split()
            if len(parts) != 2 or not re.fullmatch(r"[A-Za-z_][\w\-]*", parts[1]):
                raise ParseError("expected 'deduction <name>'", lineno, col, source)
            name = parts[1]
            continue
        if body == "premises:":
            if state != "header":
                raise ParseError("'premises:' must come before any step", lineno, col, source)
            state = "premises"
            continue
        if body.startswith("step"):
            if state == "header":
                raise ParseError("steps must follow a 'premises:' block", lineno, col, source)
            m = _STEP_LINE.match(body)
            if not m:
                raise ParseError("expected 'step <rule> from <i>[,<j>]: <proposition>'", lineno, col, source)
            rule = int(m["rule"])
            if rule not in (1, 2, 3, 4):
                raise ParseError(f"unknown rule {rule}", lineno, col + m.start("rule"), source)
            srcs = tuple(int(s) for s in m["src"].split(","))
            raw_prop = parse_prop(m["prop"], lineno, col + m.start("prop"), source)
            steps.append(Step(rule, srcs, resolve_prop(raw_prop, structure, atoms, source)))
            state = "steps"
            continue
        if state == "premises":
            raw_prop = parse_prop(body, lineno, col, source)
            premises.append(resolve_prop(raw_prop, structure, atoms, source))
            continue
        raise ParseError(f"unexpected line {body[:20]!r}", lineno, col, source)
    if state == "header":
        raise ParseError("missing 'premises:' block", None, None, source)
    if not premises:
        raise ParseError("a deduction needs at least one premise", None, None, source)
    return Deduction(premises, steps, name=name)


def dump_deduction(d: Deduction) -> str:
    lines = [f"deduction {d.name}", "premises:"]
    lines += [f"  {render(p)}" for p in d.premises]
    lines += [f"step {st.rule} from {','.join(map(str, st.sources))}: {render(st.prop)}" for st in d.steps]
    return "\n".join(lines) + "\n"


# -- circuit files -----------------------------------------------------------

def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    return obj[key]


def build_gate(spec, in_dims: Sequence[int], where: str) -> np.ndarray:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = _require(spec, "kind", where)
    total = math.prod(in_dims)
    if kind == "identity":
        return np.eye(total, dtype=complex)
    if kind == "hadamard":
        if total != 2:
            raise ValidationError(f"{where}: hadamard needs a qubit, got dimension {total}")
        return HADAMARD.copy()
    if kind == "matrix":
        return complex_matrix(_require(spec, "matrix", where), where)
    if kind == "recording":
        basis = [complex_vector(v, where) for v in _require(spec, "observed_basis", where)]
        return make_recording_gate(in_dims[0], basis, list(_require(spec, "outcomes", where)),
                                   int(_require(spec, "blank", where)),
                                   order=spec.get("completion", "forward"))
    if kind == "controlled":
        cases = _require(spec, "cases", where)
        target = in_dims[1:]
        mats = {int(k): build_gate(v, target, f"{where} case {k}") for k, v in cases.items()}
        return make_controlled_gate(in_dims[0], mats, math.prod(target))
    raise ValidationError(f"{where}: unknown gate kind {kind!r}")


def circuit_from_dict(data) -> CircuitAssignment:
    edges = _require(data, "edges", "circuit")
    verts = _require(data, "vertices", "circuit")
    dims, labels = {}, {}
    for i, e in enumerate(edges):
        eid = _require(e, "id", f"edge #{i}")
        if eid in dims:
            raise ValidationError(f"duplicate edge id {eid!r}")
        dims[eid] = _require(e, "dim", f"edge {eid!r}")
        if "labels" in e:
            labels[eid] = tuple(e["labels"])
    vmap = {}
    for i, v in enumerate(verts):
        vid = _require(v, "id", f"vertex #{i}")
        if vid in vmap:
            raise ValidationError(f"duplicate vertex id {vid!r}")
        vmap[vid] = (tuple(_require(v, "in", f"vertex {vid!r}")), tuple(_require(v, "out", f"vertex {vid!r}")))
        for e in vmap[vid][0] + vmap[vid][1]:
            if e not in dims:
                raise ValidationError(f"vertex {vid!r} references unknown edge {e!r}")
    attached = {e for ins, outs in vmap.values() for e in ins + outs}
    g = CausalStructure.from_vertices(vmap, [e for e in dims if e not in attached])
    report = causal.validate(g)
    if report:
        raise ValidationError("; ".join(x.message for x in report.violations))
    for vid, (ins, outs) in vmap.items():
        din, dout = math.prod(dims[e] for e in ins), math.prod(dims[e] for e in outs)
        if din != dout:
            raise ValidationError(f"vertex {vid!r}: product of input dimensions ({din}) differs "
                                  f"from product of output dimensions ({dout})")
    gates = {}
    for v in verts:
        vid = v["id"]
        gates[vid] = build_gate(_require(v, "gate", f"vertex {vid!r}"),
                                [dims[e] for e in vmap[vid][0]], f"vertex {vid!r}")
    init = _require(data, "initial", "circuit")
    if "product" in init:
        psi = None
        for part in init["product"]:
            edge = _require(part, "edge", "initial")
            if edge not in dims:
                raise ValidationError(f"initial state names unknown edge {edge!r}")
            factor = StateVector(complex_vector(_require(part, "amplitudes", "initial"), "initial"),
                                 (dims[edge],), (edge,))
            psi = factor if psi is None else tensor_product(psi, factor)
        if psi is None:
            psi = StateVector(np.ones(1), (), ())
    elif "joint" in init:
        s0 = sorted(causal.initial_surface(g).edges)
        psi = StateVector(complex_vector(init["joint"], "initial"), [dims[e] for e in s0], s0)
    else:
        raise ValidationError("initial: expected 'product' or 'joint'")
    surfaces = {k: frozenset(v) for k, v in data.get("surfaces", {}).items()}
    return CircuitAssignment(g, dims, gates, psi, basis_labels=labels, surface_names=surfaces)


def circuit_to_dict(c: CircuitAssignment) -> dict:
    """Serialise with explicit gate matrices and a joint initial state."""
    g = c.structure
    edges = []
    for e in g.edges:
        item = {"id": e.id, "dim": int(c.dims[e.id])}
        if e.id in c.basis_labels:
            item["labels"] = list(c.basis_labels[e.id])
        edges.append(item)
    verts = [{"id": v.id, "in": list(v.inputs), "out": list(v.outputs),
              "gate": {"kind": "matrix",
                       "matrix": [[encode_complex(z) for z in row] for row in c.gates[v.id]]}}
             for v in g.vertices]
    out = {"edges": edges, "vertices": verts,
           "initial": {"joint": [encode_complex(z) for z in c.initial.amplitudes]}}
    if c.surface_names:
        out["surfaces"] = {k: sorted(v) for k, v in sorted(c.surface_names.items())}
    return out


def load_circuit(path) -> CircuitAssignment:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, str(path)) from None
    return circuit_from_dict(data)


# -- workspaces --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Workspace:
    circuit: CircuitAssignment
    atoms: dict[str, Atom] = field(default_factory=dict)
    deductions: dict[str, Deduction] = field(default_factory=dict)
    paths: tuple[str, ...] = ()


def load_workspace(circuit_path, atoms_path=None, deduction_paths: Iterable = ()) -> Workspace:
    circuit = load_circuit(circuit_path)
    paths = [str(circuit_path)]
    atoms = {}
    if atoms_path is not None:
        atoms = parse_atoms(Path(atoms_path).read_text(encoding="utf-8"), circuit.structure,
                            circuit.dims, str(atoms_path))
        paths.append(str(atoms_path))
    deductions = {}
    for p in deduction_paths:
        p = Path(p)
        d = parse_deduction(p.read_text(encoding="utf-8"), circuit.structure, atoms, str(p), p.stem)
        if d.name in deductions:
            raise ValidationError(f"deduction {d.name!r} defined twice")
        deductions[d.name] = d
        paths.append(str(p))
    return Workspace(circuit, atoms, deductions, tuple(paths))


def load_workspace_dir(directory) -> Workspace:
    """Load ``circuit.json``, optional ``atoms.txt`` and every ``*.ded`` in ``directory``."""
    directory = Path(directory)
    atoms = directory / "atoms.txt"
    return load_workspace(directory / "circuit.json", atoms if atoms.exists() else None,
                          sorted(directory.glob("*.ded")))


def save_workspace(ws: Workspace, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "circuit.json").write_text(
        json.dumps(circuit_to_dict(ws.circuit), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    if ws.atoms:
        (directory / "atoms.txt").write_text(dump_atoms(ws.atoms), encoding="utf-8")
    for name, d in ws.deductions.items():
        (directory / f"{name}.ded").write_text(dump_deduction(d), encoding="utf-8")


def parse_state_literal(text: str, dim: int, labels: Optional[Sequence[str]] = None) -> np.ndarray:
    """Read ``|k>``, ``k``, ``|label>`` or a JSON amplitude list as a unit vector."""
    text = text.strip()
    m = re.fullmatch(r"\|(.+)>|(\d+)", text)
    if m:
        key = m.group(1) if m.group(1) is not None else m.group(2)
        if labels is not None and key in labels:
            k = list(labels).index(key)
        elif key.isdigit():
            k = int(key)
        else:
            raise ParseError(f"unknown basis label {key!r}", 1, 1)
        if not 0 <= k < dim:
            raise ValidationError(f"basis index {k} outside dimension {dim}")
        v = np.zeros(dim, dtype=complex)
        v[k] = 1
        return v
    try:
        vec = complex_vector(json.loads(text), "input")
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad state literal: {exc.msg}", 1, exc.colno) from None
    if vec.size != dim:
        raise ValidationError(f"input has {vec.size} amplitudes, edge has dimension {dim}")
    if abs(np.linalg.norm(vec) - 1) > 1e-9:
        raise ValidationError(f"input state has norm {np.linalg.norm(vec):.6g}, expected 1")
    return vec
