"""Text format for models and workspaces.

Line-oriented, ``#`` starts a comment, tokens are ASCII names.  A model file
(``.psh``) holds exactly one model; a workspace file (``.pshw``) holds
models (inline or via ``include "file.psh"``), feature identifications and
merge/transfer/check instructions::

    format 1
    model Camcorder
    feature screen: small
    feature edit: difficult | quick
    label edit "editing possibilities"
    cover: {edit,film}
    forbid (edit, screen): (quick, small)

    identify h: Target -> Source { feature a -> b { v1 -> w1, v2 -> w2 } }
    merge Hub = PC + Camcorder
    transfer Audio = h of Hub
    check Hub

Names must be declared before use; parsing never executes anything.  Every
rejection carries a 1-based source span.  ``serialize`` emits the canonical
form (tables and seeds sorted, one value-map pair per line) and is a fixed
point: ``serialize(parse(serialize(x))) == serialize(x)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

from .errors import MalformedInputError, PreshError
from .lattice import Subset
from .model import ALLOW, FORBID, ConstraintTable, Model
from .ops import FeatureIdentification
from .presheaf import Fiber

FORMAT_VERSION = 1


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(PreshError):
    def __init__(
        self,
        message: str,
        span: SourceSpan,
        *,
        source: str = "<text>",
        expected: str | None = None,
        found: str | None = None,
    ):
        detail = message
        if expected is not None:
            detail += f" (expected {expected}, found {found or 'nothing'})"
        super().__init__(f"{source}:{span}: {detail}")
        self.message = message
        self.span = span
        self.source = source
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class IdentificationDecl:
    """A named identification plus the domain names it was declared between."""

    ident: FeatureIdentification
    target_name: str
    source_name: str


@dataclass(frozen=True)
class MergeDirective:
    result: str
    left: str
    right: str


@dataclass(frozen=True)
class TransferDirective:
    result: str
    identification: str
    source: str


@dataclass(frozen=True)
class CheckDirective:
    target: str


Directive = Union[MergeDirective, TransferDirective, CheckDirective]
WorkspaceItem = Union[Model, IdentificationDecl, Directive]


@dataclass(frozen=True)
class Workspace:
    """Everything a workspace file declares, in declaration order."""

    items: tuple[WorkspaceItem, ...]

    @cached_property
    def models(self) -> dict[str, Model]:
        return {i.name: i for i in self.items if isinstance(i, Model)}

    @cached_property
    def identifications(self) -> dict[str, IdentificationDecl]:
        return {
            i.ident.name: i for i in self.items if isinstance(i, IdentificationDecl)
        }

    @property
    def directives(self) -> tuple[Directive, ...]:
        return tuple(
            i
            for i in self.items
            if isinstance(i, (MergeDirective, TransferDirective, CheckDirective))
        )


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t]+)
      | (?P<comment>\#.*)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<arrow>->)
      | (?P<name>[A-Za-z_][A-Za-z0-9_-]*)
      | (?P<number>\d+)
      | (?P<punct>[:|{}()=+,.])
    """,
    re.X,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(line: str, lineno: int, source: str) -> list[_Token]:
    out: list[_Token] = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {line[pos]!r}",
                SourceSpan(lineno, pos + 1),
                source=source,
            )
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            out.append(
                _Token(kind, m.group(), SourceSpan(lineno, pos + 1, len(m.group())))
            )
        pos = m.end()
    return out


class _Line:
    """Cursor over one line's tokens."""

    def __init__(self, tokens: list[_Token], lineno: int, source: str):
        self.tokens = tokens
        self.lineno = lineno
        self.source = source
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def error(self, message: str, token: _Token | None = None, **kw) -> ParseError:
        if token is None:
            token = self.peek()
        span = token.span if token else SourceSpan(self.lineno, len_of_line(self))
        return ParseError(message, span, source=self.source, **kw)

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of line")
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.text != text:
            raise self.error(
                f"expected {text!r}", expected=repr(text), found=tok.text if tok else None
            )
        return self.take()

    def name(self, what: str = "name") -> _Token:
        tok = self.peek()
        if tok is None or tok.kind != "name":
            raise self.error(
                f"expected a {what}", expected=what, found=tok.text if tok else None
            )
        return self.take()

    def end(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise self.error(f"trailing input {tok.text!r}", tok)


def len_of_line(line: _Line) -> int:
    if line.tokens:
        last = line.tokens[-1].span
        return last.column + last.length
    return 1


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


# ---------------------------------------------------------------------------
# parser


class _ModelBuilder:
    def __init__(self, name: str, head: _Token):
        self.name = name
        self.head = head
        self.fibers: list[Fiber] = []
        self.by_name: dict[str, Fiber] = {}
        self.tables: list[ConstraintTable] = []
        self.seeds: list[Subset] = []
        self.labels: dict[str, str] = {}

    def build(self) -> Model:
        return Model(self.name, self.fibers, self.tables, self.seeds, self.labels)


class _IdentBuilder:
    def __init__(self, name: str, target: str, source: str, head: _Token):
        self.name = name
        self.target_name = target
        self.source_name = source
        self.head = head
        self.feature_map: dict[str, str] = {}
        self.value_maps: dict[str, dict[str, str]] = {}
        self.current: str | None = None

    def build(self) -> IdentificationDecl:
        ident = FeatureIdentification(self.name, self.feature_map, self.value_maps)
        return IdentificationDecl(ident, self.target_name, self.source_name)


class _Parser:
    def __init__(
        self,
        text: str,
        *,
        source: str = "<text>",
        base: Path | None = None,
        workspace: bool = True,
    ):
        self.text = text
        self.source = source
        self.base = base
        self.workspace = workspace
        self.items: list[WorkspaceItem] = []
        self.defined: dict[str, str] = {}  # name -> kind
        self.model: _ModelBuilder | None = None
        self.ident: _IdentBuilder | None = None
        self.saw_any = False

    # -- helpers

    def _define(self, name: str, kind: str, tok: _Token, line: _Line) -> None:
        if name in self.defined:
            raise line.error(f"duplicate name {name!r}", tok)
        self.defined[name] = kind

    def _resolve_artifact(self, tok: _Token, line: _Line) -> str:
        kind = self.defined.get(tok.text)
        if kind is None:
            raise line.error(f"undefined reference {tok.text!r}", tok)
        if kind == "identification":
            raise line.error(f"{tok.text!r} is an identification, not a model", tok)
        return tok.text

    def _close_model(self):
        if self.model is not None:
            self.items.append(self.model.build())
            self.model = None

    def _require_workspace(self, line: _Line, tok: _Token):
        if not self.workspace:
            raise line.error(
                f"{tok.text!r} is not allowed in a model file", tok
            )

    # -- line dispatch

    def parse(self) -> Workspace:
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            tokens = _tokenize(raw, lineno, self.source)
            if not tokens:
                continue
            line = _Line(tokens, lineno, self.source)
            if self.ident is not None:
                self._ident_line(line)
            else:
                self._top_line(line)
        if self.ident is not None:
            raise ParseError(
                "identification block never closed",
                self.ident.head.span,
                source=self.source,
            )
        self._close_model()
        return Workspace(tuple(self.items))

    def _top_line(self, line: _Line) -> None:
        head = line.peek()
        assert head is not None
        if head.text == "format":
            line.take()
            if self.saw_any:
                raise line.error("format line must come first", head)
            version = line.take()
            if version.text != str(FORMAT_VERSION):
                raise line.error(
                    f"unsupported format {version.text!r}",
                    version,
                    expected=str(FORMAT_VERSION),
                    found=version.text,
                )
            line.end()
            return
        self.saw_any = True
        if head.text == "model":
            self._close_model()
            line.take()
            name = line.name("model name")
            line.end()
            self._define(name.text, "model", name, line)
            self.model = _ModelBuilder(name.text, name)
            return
        if head.text in ("feature", "label", "cover", "allow", "forbid"):
            if self.model is None:
                raise line.error(f"{head.text!r} outside a model block", head)
            getattr(self, f"_model_{head.text}")(line)
            return
        if head.text == "include":
            self._require_workspace(line, head)
            self._close_model()
            self._include(line)
            return
        if head.text == "identify":
            self._require_workspace(line, head)
            self._close_model()
            self._identify_head(line)
            return
        if head.text in ("merge", "transfer", "check"):
            self._require_workspace(line, head)
            self._close_model()
            getattr(self, f"_directive_{head.text}")(line)
            return
        raise line.error(f"unexpected {head.text!r} at top level", head)

    # -- model bodies

    def _model_feature(self, line: _Line) -> None:
        line.take()
        m = self.model
        assert m is not None
        name = line.name("feature name")
        if name.text in m.by_name:
            raise line.error(f"feature {name.text!r} declared twice", name)
        line.expect(":")
        values: list[str] = []
        while True:
            v = line.name("value")
            if v.text in values:
                raise line.error(f"duplicate value {v.text!r}", v)
            values.append(v.text)
            if line.done():
                break
            line.expect("|")
        fib = Fiber(name.text, tuple(values))
        m.fibers.append(fib)
        m.by_name[name.text] = fib

    def _model_label(self, line: _Line) -> None:
        line.take()
        m = self.model
        assert m is not None
        feat = line.name("feature name")
        if feat.text not in m.by_name:
            raise line.error(f"unknown feature {feat.text!r}", feat)
        key = feat.text
        if not line.done() and line.peek().text == ".":
            line.take()
            val = line.name("value")
            if val.text not in m.by_name[feat.text].index:
                raise line.error(
                    f"{val.text!r} is not a value of {feat.text!r}", val
                )
            key = f"{feat.text}.{val.text}"
        tok = line.peek()
        if tok is None or tok.kind != "string":
            raise line.error("expected a quoted label", tok, expected="string")
        line.take()
        line.end()
        m.labels[key] = _unquote(tok.text)

    def _subset(self, line: _Line) -> Subset:
        m = self.model
        assert m is not None
        line.expect("{")
        names: list[str] = []
        while line.peek() is not None and line.peek().text != "}":
            tok = line.name("feature name")
            if tok.text not in m.by_name:
                raise line.error(f"unknown feature {tok.text!r}", tok)
            names.append(tok.text)
            if line.peek() is not None and line.peek().text == ",":
                line.take()
        line.expect("}")
        return Subset(names)

    def _model_cover(self, line: _Line) -> None:
        line.take()
        line.expect(":")
        m = self.model
        assert m is not None
        while not line.done():
            m.seeds.append(self._subset(line))
            if not line.done():
                line.expect(",")

    def _model_allow(self, line: _Line) -> None:
        self._table(line, ALLOW)

    def _model_forbid(self, line: _Line) -> None:
        self._table(line, FORBID)

    def _table(self, line: _Line, polarity: str) -> None:
        line.take()
        m = self.model
        assert m is not None
        line.expect("(")
        written: list[str] = []
        while True:
            tok = line.name("feature name")
            if tok.text not in m.by_name:
                raise line.error(f"unknown feature {tok.text!r}", tok)
            if tok.text in written:
                raise line.error(f"feature {tok.text!r} repeated in scope", tok)
            written.append(tok.text)
            if line.peek() is not None and line.peek().text == ",":
                line.take()
                continue
            break
        line.expect(")")
        line.expect(":")
        scope = Subset(written)
        order = [written.index(f) for f in scope.names]  # written -> canonical
        rows: list[tuple[str, ...]] = []
        while not line.done():
            open_tok = line.expect("(")
            row: list[_Token] = []
            while line.peek() is not None and line.peek().text != ")":
                row.append(line.name("value"))
                if line.peek() is not None and line.peek().text == ",":
                    line.take()
            line.expect(")")
            if len(row) != len(written):
                raise line.error(
                    f"tuple has {len(row)} values, scope has {len(written)}",
                    open_tok,
                    expected=f"{len(written)} values",
                    found=f"{len(row)}",
                )
            for f, vtok in zip(written, row):
                if vtok.text not in m.by_name[f].index:
                    raise line.error(
                        f"{vtok.text!r} is not a value of {f!r}",
                        vtok,
                        expected=f"one of {'|'.join(m.by_name[f].values)}",
                        found=vtok.text,
                    )
            rows.append(tuple(row[i].text for i in order))
            if not line.done():
                line.expect(",")
        m.tables.append(ConstraintTable(scope, polarity, rows))

    # -- workspace items

    def _include(self, line: _Line) -> None:
        line.take()
        tok = line.peek()
        if tok is None or tok.kind != "string":
            raise line.error("expected a quoted path", tok, expected="string")
        line.take()
        line.end()
        rel = _unquote(tok.text)
        if not rel.endswith(".psh"):
            raise line.error("only model files (.psh) can be included", tok)
        path = (self.base / rel) if self.base is not None else Path(rel)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise line.error(f"cannot include {rel!r}: {exc}", tok) from exc
        model = parse_model(text, source=str(path))
        fake = _Token("name", model.name, tok.span)
        self._define(model.name, "model", fake, line)
        self.items.append(model)

    def _identify_head(self, line: _Line) -> None:
        head = line.take()
        name = line.name("identification name")
        self._define(name.text, "identification", name, line)
        line.expect(":")
        target = line.name("target name")
        line.expect("->")
        source = line.name("source name")
        self._resolve_artifact(source, line)
        line.expect("{")
        self.ident = _IdentBuilder(name.text, target.text, source.text, head)
        self._ident_line(line)  # blocks may continue on the same line

    def _ident_line(self, line: _Line) -> None:
        ident = self.ident
        assert ident is not None
        while not line.done():
            head = line.peek()
            assert head is not None
            if head.text == "}":
                line.take()
                if ident.current is not None:
                    ident.current = None
                    continue
                try:
                    self.items.append(ident.build())
                except MalformedInputError as exc:
                    raise ParseError(str(exc), ident.head.span, source=self.source)
                self.ident = None
                line.end()
                return
            if head.text == "feature":
                if ident.current is not None:
                    raise line.error("previous feature block never closed", head)
                line.take()
                tgt = line.name("target feature")
                if tgt.text in ident.feature_map:
                    raise line.error(f"target feature {tgt.text!r} mapped twice", tgt)
                line.expect("->")
                src = line.name("source feature")
                if src.text in ident.feature_map.values():
                    raise line.error(f"source feature {src.text!r} mapped twice", src)
                line.expect("{")
                ident.feature_map[tgt.text] = src.text
                ident.value_maps[tgt.text] = {}
                ident.current = tgt.text
                continue
            if ident.current is None:
                raise line.error("expected 'feature' or '}'", head)
            vmap = ident.value_maps[ident.current]
            tv = line.name("target value")
            if tv.text in vmap:
                raise line.error(f"value {tv.text!r} mapped twice", tv)
            line.expect("->")
            sv = line.name("source value")
            vmap[tv.text] = sv.text
            if not line.done() and line.peek().text == ",":
                line.take()

    # -- directives

    def _directive_merge(self, line: _Line) -> None:
        line.take()
        result = line.name("result name")
        line.expect("=")
        left = line.name("model name")
        line.expect("+")
        right = line.name("model name")
        line.end()
        self._resolve_artifact(left, line)
        self._resolve_artifact(right, line)
        self._define(result.text, "result", result, line)
        self.items.append(MergeDirective(result.text, left.text, right.text))

    def _directive_transfer(self, line: _Line) -> None:
        line.take()
        result = line.name("result name")
        line.expect("=")
        ident = line.name("identification name")
        if self.defined.get(ident.text) != "identification":
            raise line.error(f"undefined identification {ident.text!r}", ident)
        line.expect("of")
        source = line.name("model name")
        line.end()
        self._resolve_artifact(source, line)
        self._define(result.text, "result", result, line)
        self.items.append(TransferDirective(result.text, ident.text, source.text))

    def _directive_check(self, line: _Line) -> None:
        line.take()
        target = line.name("artifact name")
        line.end()
        if target.text not in self.defined:
            raise line.error(f"undefined reference {target.text!r}", target)
        self.items.append(CheckDirective(target.text))


def parse_workspace(
    text: str, *, source: str = "<workspace>", base: Path | str | None = None
) -> Workspace:
    base_path = Path(base) if base is not None else None
    return _Parser(text, source=source, base=base_path, workspace=True).parse()


def parse_model(text: str, *, source: str = "<model>") -> Model:
    ws = _Parser(text, source=source, workspace=False).parse()
    models = [i for i in ws.items if isinstance(i, Model)]
    if len(models) != 1:
        raise ParseError(
            f"a model file must define exactly one model, found {len(models)}",
            SourceSpan(1, 1),
            source=source,
        )
    return models[0]


def parse_workspace_file(path: Path | str) -> Workspace:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".psh":
        return Workspace((parse_model(text, source=str(path)),))
    return parse_workspace(text, source=str(path), base=path.parent)


# ---------------------------------------------------------------------------
# serializer


def _model_lines(m: Model) -> list[str]:
    lines = [f"model {m.name}"]
    for f in m.feature_order():
        fib = m.fibers[f]
        lines.append(f"feature {f}: " + " | ".join(fib.values))
        if f in m.labels:
            lines.append(f"label {f} {_quote(m.labels[f])}")
        for v in fib.values:
            key = f"{f}.{v}"
            if key in m.labels:
                lines.append(f"label {key} {_quote(m.labels[key])}")
    if m.cover_seeds:
        lines.append("cover: " + ", ".join(str(s) for s in m.cover_seeds))
    for t in m.tables:
        scope = "(" + ", ".join(t.scope.names) + ")"
        rows = ", ".join("(" + ", ".join(r) + ")" for r in t.tuples)
        line = f"{t.polarity} {scope}:"
        lines.append(f"{line} {rows}" if rows else line)
    return lines


def _ident_lines(decl: IdentificationDecl) -> list[str]:
    h = decl.ident
    lines = [f"identify {h.name}: {decl.target_name} -> {decl.source_name} {{"]
    for tgt, src in h.feature_map.items():
        lines.append(f"  feature {tgt} -> {src} {{")
        for tv, sv in h.value_maps[tgt].items():
            lines.append(f"    {tv} -> {sv}")
        lines.append("  }")
    lines.append("}")
    return lines


def serialize(value: Union[Model, Workspace]) -> str:
    """Canonical text; parsing it back yields an equal value."""
    if isinstance(value, Model):
        return "\n".join([f"format {FORMAT_VERSION}", ""] + _model_lines(value)) + "\n"
    if not isinstance(value, Workspace):
        raise MalformedInputError(f"cannot serialize {type(value).__name__}")
    blocks: list[list[str]] = []
    for item in value.items:
        if isinstance(item, Model):
            blocks.append(_model_lines(item))
        elif isinstance(item, IdentificationDecl):
            blocks.append(_ident_lines(item))
        elif isinstance(item, MergeDirective):
            blocks.append([f"merge {item.result} = {item.left} + {item.right}"])
        elif isinstance(item, TransferDirective):
            blocks.append(
                [f"transfer {item.result} = {item.identification} of {item.source}"]
            )
        else:
            blocks.append([f"check {item.target}"])
    out = [f"format {FORMAT_VERSION}"]
    for block in blocks:
        out.append("")
        out.extend(block)
    return "\n".join(out) + "\n"


def canonicalize(
    text: str, *, source: str = "<text>", base: Path | str | None = None
) -> str:
    """Parse and re-emit in canonical form; parse errors propagate."""
    return serialize(parse_workspace(text, source=source, base=base))
