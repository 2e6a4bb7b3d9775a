"""Command-line surface.

Subcommands: ``check | sections | extend | merge | transfer | diff | render``.
A workspace (``--workspace``, a ``.pshw`` or single-model ``.psh`` file) is
parsed and its directives executed before any command runs; commands then
address artifacts by name.

Exit codes: 0 success, 1 a check failed, 2 usage or parse error, 3 an
enumeration bound was hit and the computation refused.  With
``--format machine`` every command prints one JSON object with stable,
documented field names (see README); output is byte-stable for fixed inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .dsl import (
    CheckDirective,
    MergeDirective,
    ParseError,
    TransferDirective,
    Workspace,
    parse_workspace_file,
    serialize,
)
from .errors import EnumerationBoundError, MalformedInputError, PreshError
from .lattice import Subset, check_adjunction_triple, close_family
from .model import Model, compile_model
from .ops import (
    MergedModel,
    amalgamate,
    analogy_check,
    diff_presheaves,
    emergent_sections,
    overlap_union_report,
    transfer,
)
from .presheaf import (
    Assignment,
    AssignmentPresheaf,
    blocking_sets,
    extensions,
    global_sections,
    random_abstract_presheaf,
    representable,
    validate_laws,
    yoneda_check,
)
from . import render as render_mod

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_REFUSED = 3

ALL_SUITES = ("closure", "adjunction", "yoneda", "analogy")


class _CheckFailed(PreshError):
    def __init__(self, lines: list[str]):
        super().__init__("\n".join(lines))
        self.lines = lines


@dataclass
class Execution:
    """A parsed workspace with its directives carried out."""

    workspace: Workspace
    max_enum: int
    artifacts: dict[str, Model] = field(default_factory=dict)
    merges: dict[str, MergedModel] = field(default_factory=dict)
    transfer_skips: dict[str, tuple[Subset, ...]] = field(default_factory=dict)
    _compiled: dict[str, AssignmentPresheaf] = field(default_factory=dict)

    def artifact(self, name: str) -> Model:
        model = self.artifacts.get(name)
        if model is None:
            known = ", ".join(sorted(self.artifacts)) or "none"
            raise MalformedInputError(f"unknown artifact {name!r} (defined: {known})")
        return model

    def compiled(self, name: str) -> AssignmentPresheaf:
        if name not in self._compiled:
            model = self.artifact(name)
            estimate = 1
            for fib in model.fibers.values():
                estimate *= 1 + len(fib.values)
            if estimate > self.max_enum:
                raise EnumerationBoundError(
                    f"presheaf of {name!r} refused",
                    required=estimate,
                    bound=self.max_enum,
                )
            self._compiled[name] = compile_model(model)
        return self._compiled[name]


def execute(workspace: Workspace, *, max_enum: int) -> Execution:
    ex = Execution(workspace, max_enum)
    ex.artifacts.update(workspace.models)
    for directive in workspace.directives:
        if isinstance(directive, MergeDirective):
            merged = amalgamate(
                ex.artifact(directive.left),
                ex.artifact(directive.right),
                name=directive.result,
            )
            ex.merges[directive.result] = merged
            ex.artifacts[directive.result] = merged.result
        elif isinstance(directive, TransferDirective):
            decl = workspace.identifications[directive.identification]
            model, skipped = transfer(
                decl.ident, ex.artifact(directive.source), name=directive.result
            )
            ex.artifacts[directive.result] = model
            ex.transfer_skips[directive.result] = skipped
        elif isinstance(directive, CheckDirective):
            report = validate_laws(ex.compiled(directive.target))
            if not report.passed:
                raise _CheckFailed(
                    [f"check {directive.target}: FAIL"]
                    + [f"  {v}" for v in report.violations]
                )
    return ex


# ---------------------------------------------------------------------------
# helpers


def _parse_object_spec(spec: str, model: Model) -> Subset:
    body = spec.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    names = [n.strip() for n in body.split(",") if n.strip()]
    unknown = [n for n in names if n not in model.fibers]
    if unknown:
        known = Subset(n for n in names if n in model.fibers)
        candidates = [
            str(known.union(Subset([f])))
            for f in model.feature_order()
            if f not in known
        ]
        raise MalformedInputError(
            f"unknown feature {unknown[0]!r} in object spec; nearest family "
            f"objects: {str(known)}, " + ", ".join(candidates[:4])
        )
    return Subset(names)


def _parse_assignment(literal: str, model: Model) -> Assignment:
    binding: dict[str, str] = {}
    for part in literal.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise MalformedInputError(f"bad assignment literal {part!r}, need f=v")
        f, v = part.split("=", 1)
        f, v = f.strip(), v.strip()
        fib = model.fibers.get(f)
        if fib is None:
            raise MalformedInputError(f"unknown feature {f!r}")
        if v not in fib:
            raise MalformedInputError(
                f"{v!r} is not a value of {f!r} (fiber: {', '.join(fib.values)})"
            )
        if f in binding:
            raise MalformedInputError(f"feature {f!r} bound twice")
        binding[f] = v
    return Assignment.from_mapping(binding)


def _assignment_json(a: Assignment) -> dict:
    return a.as_dict()


class _Out:
    def __init__(self, machine: bool):
        self.machine = machine
        self.lines: list[str] = []
        self.payload: dict = {}

    def text(self, line: str = "") -> None:
        self.lines.append(line)

    def flush(self, command: str, exit_code: int) -> int:
        if self.machine:
            body = {"command": command, "exit": exit_code}
            body.update(self.payload)
            print(json.dumps(body, sort_keys=True, separators=(",", ":")))
        else:
            for line in self.lines:
                print(line)
        return exit_code


# ---------------------------------------------------------------------------
# commands


def cmd_check(ex: Execution, args, out: _Out) -> int:
    suites = tuple(s.strip() for s in args.laws.split(",") if s.strip())
    for s in suites:
        if s not in ALL_SUITES:
            raise MalformedInputError(
                f"unknown law suite {s!r} (choose from {', '.join(ALL_SUITES)})"
            )
    failed = False
    results: dict[str, dict] = {}
    for suite in suites:
        violations: list[str] = []
        if suite == "closure":
            for name in sorted(ex.artifacts):
                report = validate_laws(ex.compiled(name))
                violations.extend(f"{name}: {v}" for v in report.violations)
        elif suite == "adjunction":
            universe = Subset([f"a{i}" for i in range(5)])
            family = close_family(universe)
            for s2 in family.objects_sorted:
                sub = close_family(s2)
                for s1 in sub.objects_sorted:
                    report = check_adjunction_triple(s1, s2)
                    violations.extend(str(v) for v in report.violations)
        elif suite == "yoneda":
            for n in range(4):
                family = close_family(Subset([f"g{i}" for i in range(n)]))
                sheaves = [representable(family, family.universe)] + [
                    random_abstract_presheaf(args.seed * 97 + n * 10 + i, family)
                    for i in range(6)
                ]
                for f in sheaves:
                    for d in family.objects_sorted:
                        report = yoneda_check(f, d)
                        violations.extend(f"|S|={n} at {d}: {v}" for v in report.violations)
        elif suite == "analogy":
            for decl in ex.workspace.identifications.values():
                if decl.target_name not in ex.artifacts:
                    continue
                report = analogy_check(
                    decl.ident,
                    ex.artifact(decl.source_name),
                    ex.artifact(decl.target_name),
                )
                violations.extend(f"{decl.ident.name}: {v}" for v in report.violations)
        results[suite] = {"passed": not violations, "violations": violations}
        if violations:
            failed = True
            out.text(f"{suite}: FAIL ({len(violations)} violations)")
            for v in violations:
                out.text(f"  {v}")
        else:
            out.text(f"{suite}: ok")
    out.payload["suites"] = results
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_sections(ex: Execution, args, out: _Out) -> int:
    model = ex.artifact(args.model)
    p = ex.compiled(args.model)
    obj = (
        _parse_object_spec(args.object, model)
        if args.object is not None
        else p.family.universe
    )
    p.family.require(obj)
    secs = p.sections[obj]
    out.payload.update(
        {
            "model": args.model,
            "object": list(obj.names),
            "count": len(secs),
            "sections": None if args.count else [_assignment_json(a) for a in secs],
        }
    )
    out.text(f"sections of {args.model} at {obj}: {len(secs)}")
    if not args.count:
        for a in secs:
            out.text(f"  {a}")
    return EXIT_OK


def cmd_extend(ex: Execution, args, out: _Out) -> int:
    model = ex.artifact(args.model)
    p = ex.compiled(args.model)
    a = _parse_assignment(args.assignment, model)
    target = (
        _parse_object_spec(args.target, model)
        if args.target is not None
        else p.family.universe
    )
    exts = extensions(p, a, target)
    out.payload.update(
        {
            "model": args.model,
            "assignment": _assignment_json(a),
            "target": list(target.names),
            "extensions": [_assignment_json(b) for b in exts],
        }
    )
    out.text(f"extensions of {a} to {target}: {len(exts)}")
    for b in exts:
        out.text(f"  {b}")
    if not exts:
        blocks = blocking_sets(p, a)
        out.payload["blocking"] = [list(w.names) for w in blocks]
        out.text("no extension; blocking scopes:")
        for w in blocks:
            out.text(f"  {w}")
    return EXIT_OK


def _emit(model: Model, path: str, out: _Out) -> None:
    Path(path).write_text(serialize(model), encoding="utf-8")
    out.text(f"wrote {path}")
    out.payload["emitted"] = path


def cmd_merge(ex: Execution, args, out: _Out) -> int:
    left = ex.artifact(args.left)
    right = ex.artifact(args.right)
    merged = amalgamate(left, right, name=args.name)
    p = compile_model(merged.result)
    gs = global_sections(p)
    emergent = emergent_sections(merged, left, right)
    overlap = overlap_union_report(left, right)
    out.text(f"merge {merged.result.name} = {args.left} + {args.right}")
    for record in merged.shared:
        if record.reordered:
            out.text(
                f"warning: shared fiber {record.feature!r} declared in a "
                "different order on each side; left order kept"
            )
    out.text(f"global sections: {len(gs)}")
    out.text(f"emergent sections: {len(emergent)}")
    for a in emergent:
        out.text(f"  {a}")
    cross = [
        (u, d.only_in_right)
        for u, d in sorted(overlap.per_object.items(), key=lambda kv: kv[0].key())
        if d.only_in_right
    ]
    if cross:
        out.text("cross-combinations on the overlap (amalgam only):")
        for u, extra in cross:
            for a in extra:
                out.text(f"  {u}: {a}")
    out.payload.update(
        {
            "result": merged.result.name,
            "global_sections": [_assignment_json(a) for a in gs],
            "emergent": [_assignment_json(a) for a in emergent],
            "cross_combinations": {
                str(u): [_assignment_json(a) for a in extra] for u, extra in cross
            },
        }
    )
    if args.emit:
        _emit(merged.result, args.emit, out)
    return EXIT_OK


def cmd_transfer(ex: Execution, args, out: _Out) -> int:
    decl = ex.workspace.identifications.get(args.identification)
    if decl is None:
        raise MalformedInputError(f"unknown identification {args.identification!r}")
    source = ex.artifact(args.source)
    model, skipped = transfer(decl.ident, source, name=args.name)
    p = compile_model(model)
    gs = global_sections(p)
    out.text(f"transfer {model.name} = {decl.ident.name} of {args.source}")
    for scope in skipped:
        out.text(f"  skipped table scope {scope} (unmapped features)")
    out.text(f"global sections: {len(gs)}")
    for a in gs:
        out.text(f"  {a}")
    out.payload.update(
        {
            "result": model.name,
            "skipped_scopes": [list(s.names) for s in skipped],
            "global_sections": [_assignment_json(a) for a in gs],
        }
    )
    code = EXIT_OK
    if decl.target_name in ex.artifacts:
        report = analogy_check(decl.ident, source, ex.artifact(decl.target_name))
        out.payload["analogy"] = {
            "target": decl.target_name,
            "passed": report.passed,
            "violations": [str(v) for v in report.violations],
        }
        if report.passed:
            out.text(f"analogy against {decl.target_name}: ok")
        else:
            out.text(f"analogy against {decl.target_name}: FAIL")
            for v in report.violations:
                out.text(f"  {v}")
            code = EXIT_CHECK_FAILED
    if args.emit:
        _emit(model, args.emit, out)
    return code


def cmd_diff(ex: Execution, args, out: _Out) -> int:
    diff = diff_presheaves(ex.compiled(args.left), ex.compiled(args.right))
    dirty = diff.dirty_objects()
    out.payload["objects"] = {
        str(u): {
            "only_in_left": [_assignment_json(a) for a in diff.per_object[u].only_in_left],
            "only_in_right": [_assignment_json(a) for a in diff.per_object[u].only_in_right],
        }
        for u in dirty
    }
    if not dirty:
        out.text(f"{args.left} and {args.right} agree on all shared objects")
        return EXIT_OK
    out.text(f"{args.left} vs {args.right}:")
    for u in dirty:
        d = diff.per_object[u]
        for a in d.only_in_left:
            out.text(f"  {u}: < {a}")
        for a in d.only_in_right:
            out.text(f"  {u}: > {a}")
    return EXIT_OK


def cmd_render(ex: Execution, args, out: _Out) -> int:
    if args.artifact == "workspace":
        if args.render_format != "dot":
            raise MalformedInputError("the workspace graph only renders as dot")
        text = render_mod.dot_workspace(ex.workspace, ex.artifacts)
    else:
        model = ex.artifact(args.artifact)
        if args.render_format == "dot":
            text = render_mod.dot_cover_family(ex.compiled(args.artifact), model.name)
        else:
            text = render_mod.canvas(model, ex.compiled(args.artifact))
    out.payload["rendering"] = text
    out.lines.extend(text.rstrip("\n").split("\n"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # keep exit-code contract: usage errors are 2
        self.print_usage(sys.stderr)
        raise MalformedInputError(message)


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="presh", description=__doc__)
    parser.add_argument("--workspace", required=True, help="path to a .pshw or .psh file")
    parser.add_argument(
        "--format", choices=("text", "machine"), default="text", dest="fmt"
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    parser.add_argument(
        "--max-enum",
        type=int,
        default=10**6,
        help="refusal bound for exhaustive enumerations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run law suites over the workspace")
    p.add_argument("--laws", default=",".join(ALL_SUITES))
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sections", help="list sections of a model at an object")
    p.add_argument("model")
    p.add_argument("--object", default=None, help="e.g. {a,b} or a,b; default universe")
    p.add_argument("--count", action="store_true")
    p.set_defaults(func=cmd_sections)

    p = sub.add_parser("extend", help="extend a local section to a larger object")
    p.add_argument("model")
    p.add_argument("assignment", help="literal like feature=value,feature=value")
    p.add_argument("target", nargs="?", default=None, help="default universe")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("merge", help="amalgamate two models")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--name", default=None)
    p.add_argument("--emit", default=None, help="write the result as canonical .psh")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("transfer", help="apply an identification to a model")
    p.add_argument("identification")
    p.add_argument("source")
    p.add_argument("--name", default=None)
    p.add_argument("--emit", default=None)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("diff", help="objectwise section diff of two models")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("render", help="dot or canvas rendering")
    p.add_argument("artifact", help="model name, or 'workspace' for the hub graph")
    p.add_argument("render_format", choices=("dot", "canvas"), metavar="format")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except MalformedInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = _Out(machine=False)
    try:
        out.machine = args.fmt == "machine"
        workspace = parse_workspace_file(args.workspace)
        ex = execute(workspace, max_enum=args.max_enum)
        code = args.func(ex, args, out)
        return out.flush(args.command, code)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _CheckFailed as exc:
        for line in exc.lines:
            print(line, file=sys.stderr)
        return EXIT_CHECK_FAILED
    except EnumerationBoundError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (MalformedInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
