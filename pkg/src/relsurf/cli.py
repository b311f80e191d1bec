"""Command-line front end.

Exit codes: 0 success, 1 usage or unknown name, 2 parse error, 3 validation
error, 4 a deduction step is invalid, 5 a deduction is unsound.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import fr, lang, report
from .errors import NoCommonSurface, ParseError, RelsurfError, UnknownAtom, UnknownName, UnknownSurface, ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INVALID_STEP = 4
EXIT_UNSOUND = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def bundled_fr_dir() -> Path:
    return Path(str(resources.files("relsurf") / "data" / "fr"))


def builtin_workspace() -> lang.Workspace:
    sc = fr.build_fr()
    return lang.Workspace(sc.circuit, dict(sc.atoms), {sc.deduction.name: sc.deduction}, ("<built-in>",))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relsurf", description="Spacelike surfaces, relative states and quantum-logic deductions.")
    src = p.add_argument_group("workspace (default: the built-in FR scenario)")
    src.add_argument("--circuit", help="circuit JSON file")
    src.add_argument("--atoms", help="atom declaration file")
    src.add_argument("--deductions", nargs="*", default=[], help="deduction files")
    src.add_argument("--workspace", help="directory holding circuit.json, atoms.txt and *.ded")
    src.add_argument("--bundled", action="store_true", help="load the bundled FR example files")
    p.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("surfaces", help="list every spacelike surface")
    st = sub.add_parser("state", help="state on one surface")
    st.add_argument("--surface", required=True, help="surface name or comma-separated fired vertices")
    cons = sub.add_parser("consistency", help="compare marginals of two surfaces")
    cons.add_argument("s1")
    cons.add_argument("s2")
    rel = sub.add_parser("relstate", help="chained relative states")
    rel.add_argument("--chain", required=True, help="comma-separated edge ids")
    rel.add_argument("--input", required=True, help="input state: |k>, |label>, k or a JSON amplitude list")
    ev = sub.add_parser("eval", help="valuate a proposition")
    ev.add_argument("expr")
    de = sub.add_parser("deduce", help="check and assess a named deduction")
    de.add_argument("name")
    sub.add_parser("fr-demo", help="reproduce both arguments and the counterexample deduction")
    return p


def load(args) -> lang.Workspace:
    if args.bundled:
        return lang.load_workspace_dir(bundled_fr_dir())
    if args.workspace:
        return lang.load_workspace_dir(args.workspace)
    if args.circuit:
        return lang.load_workspace(args.circuit, args.atoms, args.deductions)
    if args.atoms or args.deductions:
        raise UnknownName("--atoms/--deductions need --circuit")
    return builtin_workspace()


def resolve_surface(c, text: str):
    if text in c.surface_names:
        return c.surface(text)
    body = text.strip().strip("{}")
    fired = [v.strip() for v in body.split(",") if v.strip()]
    for v in fired:
        if v not in c.structure.vertex_map:
            raise UnknownName(f"{text!r} is neither a surface name nor a list of vertices")
    try:
        return c.surface(frozenset(fired))
    except UnknownSurface as exc:
        raise UnknownName(str(exc)) from None


def run_command(ws: lang.Workspace, args) -> tuple[dict, int]:
    c = ws.circuit
    cmd = args.command
    if cmd == "surfaces":
        return report.surfaces_report(c), EXIT_OK
    if cmd == "state":
        return report.state_report(c, resolve_surface(c, args.surface)), EXIT_OK
    if cmd == "consistency":
        rep = report.consistency_report(c, resolve_surface(c, args.s1), resolve_surface(c, args.s2))
        return rep, EXIT_OK
    if cmd == "relstate":
        from .relstate import chain
        edges = [e.strip() for e in args.chain.split(",") if e.strip()]
        for e in edges:
            if e not in c.dims:
                raise UnknownName(f"unknown edge {e!r}")
        if len(edges) < 2:
            raise UnknownName("--chain needs at least two edges")
        vec = lang.parse_state_literal(args.input, c.dims[edges[0]], c.basis_labels.get(edges[0]))
        return report.chain_report(c, chain(c, edges, vec)), EXIT_OK
    if cmd == "eval":
        raw = lang.parse_prop(args.expr, source="<expr>")
        prop = lang.resolve_prop(raw, c.structure, ws.atoms, "<expr>")
        return report.eval_report(c, prop), EXIT_OK
    if cmd == "deduce":
        if args.name not in ws.deductions:
            raise UnknownName(f"no deduction named {args.name!r}")
        rep = report.deduction_report(c, ws.deductions[args.name])
        return rep, _deduction_exit(rep)
    if cmd == "fr-demo":
        if "fr" not in ws.deductions:
            raise UnknownName("fr-demo needs a deduction named 'fr'")
        rep = report.fr_demo_report(c, ws.deductions["fr"])
        return rep, _deduction_exit(rep["deduction"])
    raise UnknownName(f"unknown command {cmd!r}")


def _deduction_exit(rep) -> int:
    if rep["verdict"] == "invalid":
        return EXIT_INVALID_STEP
    if rep["verdict"] == "unsound":
        return EXIT_UNSOUND
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        ws = load(args)
        rep, code = run_command(ws, args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnknownAtom as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, NoCommonSurface) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnknownName, UnknownSurface) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RelsurfError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(report.dumps(rep, pretty=args.pretty))
    return code


if __name__ == "__main__":
    sys.exit(main())
