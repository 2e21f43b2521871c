"""Story scripting language: lexer, recursive-descent parser, and semantic checks.

The surface syntax is keyword-led so the parser can resynchronize at the next
`node` keyword after an error and keep reporting (up to MAX_ERRORS findings
per file).  Declarations conventionally precede nodes; the parser accepts them
interleaved.

`parse` builds an AST without resolving names; `check` resolves names and
type-checks mini-game parameter tables; `lower_params` turns a checked params
block into its normalized engine form and is reused by the compiler so the
two stages cannot drift.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum, auto

from .diagnostics import Diagnostic, Severity, SourceSpan
from .model import (
    CMP_OPS,
    NODE_ID_RE,
    BiolinkParams,
    Channel,
    CoordParams,
    MiniGameParams,
    ScanParams,
    SequenceParams,
)

MAX_ERRORS = 20

NODE_KINDS = ("narration", "choice", "minigame", "ending")
GAME_KINDS = ("biolink", "scan", "coord", "sequence")
ENDING_KINDS = ("main", "sub")
CHANNEL_WORDS = ("touch", "handset", "any")

# Normalized defaults for optional mini-game tuning parameters.
BIOLINK_DEFAULTS = {"cost": 5, "regen": 2, "threshold": 0, "visibility": 2}


# ---------------------------------------------------------------------------
# Lexer


class TokKind(Enum):
    STRING = auto()
    INT = auto()
    IDENT = auto()
    ARROW = auto()
    LBRACE = auto()
    RBRACE = auto()
    CMP = auto()
    PLUS = auto()
    MINUS = auto()
    BANG = auto()
    EOF = auto()


@dataclass(frozen=True)
class Token:
    kind: TokKind
    value: str | int
    line: int
    col: int
    length: int


class _Sink:
    """Collects diagnostics, saturating at MAX_ERRORS errors."""

    def __init__(self, filename: str):
        self.filename = filename
        self.diags: list[Diagnostic] = []
        self.error_count = 0

    @property
    def saturated(self) -> bool:
        return self.error_count >= MAX_ERRORS

    def span(self, tok: Token) -> SourceSpan:
        return SourceSpan(self.filename, tok.line, tok.col, tok.length)

    def error(self, code: str, message: str, span: SourceSpan) -> None:
        if self.saturated:
            return
        self.error_count += 1
        self.diags.append(Diagnostic(Severity.ERROR, code, message, span=span))


_IDENT_START = re.compile(r"[A-Za-z]")


def _lex(source: str, sink: _Sink) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)
    if source.startswith("﻿"):
        i = 1
        col = 2

    def push(kind: TokKind, value, ln: int, cl: int, length: int) -> None:
        tokens.append(Token(kind, value, ln, cl, length))

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            i += 1
            col += 1
            buf = []
            terminated = False
            while i < n:
                c = source[i]
                if c == '"':
                    i += 1
                    col += 1
                    terminated = True
                    break
                if c == "\n":
                    break
                if c == "\\":
                    if i + 1 < n and source[i + 1] in ('"', "\\"):
                        buf.append(source[i + 1])
                        i += 2
                        col += 2
                        continue
                    sink.error(
                        "lex-bad-escape",
                        "only \\\" and \\\\ escapes are allowed in strings",
                        SourceSpan(sink.filename, line, col, 1),
                    )
                    buf.append(c)
                    i += 1
                    col += 1
                    continue
                buf.append(c)
                i += 1
                col += 1
            if not terminated:
                sink.error(
                    "lex-unterminated-string",
                    "string is not terminated",
                    SourceSpan(sink.filename, start_line, start_col, 1),
                )
            push(TokKind.STRING, "".join(buf), start_line, start_col, col - start_col)
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            push(TokKind.INT, int(source[i:j]), start_line, start_col, j - i)
            col += j - i
            i = j
            continue
        if _IDENT_START.match(ch):
            j = i + 1
            while j < n:
                c = source[j]
                if c.isascii() and (c.isalnum()):
                    j += 1
                elif c == "-" and j + 1 < n and source[j + 1].isascii() and source[j + 1].isalnum():
                    # A hyphen continues the identifier only when followed by
                    # a letter/digit, so `A->B` lexes as `A`, `->`, `B`.
                    j += 1
                else:
                    break
            push(TokKind.IDENT, source[i:j], start_line, start_col, j - i)
            col += j - i
            i = j
            continue
        if ch == "-" and i + 1 < n and source[i + 1] == ">":
            push(TokKind.ARROW, "->", start_line, start_col, 2)
            i += 2
            col += 2
            continue
        if ch in "<>" and i + 1 < n and source[i + 1] == "=":
            push(TokKind.CMP, ch + "=", start_line, start_col, 2)
            i += 2
            col += 2
            continue
        simple = {
            "{": (TokKind.LBRACE, "{"),
            "}": (TokKind.RBRACE, "}"),
            "<": (TokKind.CMP, "<"),
            ">": (TokKind.CMP, ">"),
            "=": (TokKind.CMP, "="),
            "+": (TokKind.PLUS, "+"),
            "-": (TokKind.MINUS, "-"),
            "!": (TokKind.BANG, "!"),
        }
        if ch in simple:
            kind, val = simple[ch]
            push(kind, val, start_line, start_col, 1)
            i += 1
            col += 1
            continue
        sink.error(
            "lex-unexpected-char",
            f"unexpected character {ch!r}",
            SourceSpan(sink.filename, start_line, start_col, 1),
        )
        i += 1
        col += 1
    tokens.append(Token(TokKind.EOF, "", line, col, 0))
    return tokens


# ---------------------------------------------------------------------------
# AST


@dataclass
class AstMeter:
    name: str
    min: int
    max: int
    init: int
    span: SourceSpan


@dataclass
class AstItem:
    name: str
    label: str | None
    span: SourceSpan


@dataclass
class AstFlag:
    name: str
    span: SourceSpan


@dataclass
class AstGuard:
    kind: str  # "flag-set" | "flag-clear" | "item-held" | "meter-cmp"
    name: str
    op: str | None
    value: int | None
    span: SourceSpan


@dataclass
class AstEffect:
    kind: str  # "set-flag" | "clear-flag" | "give-item" | "take-item" | "meter-add"
    name: str
    delta: int | None
    span: SourceSpan


@dataclass
class AstOption:
    label: str
    target: str
    target_span: SourceSpan
    guards: list[AstGuard] = field(default_factory=list)
    effects: list[AstEffect] = field(default_factory=list)


@dataclass
class AstParam:
    key: str
    value: str | int
    is_ident: bool
    key_span: SourceSpan
    value_span: SourceSpan


@dataclass
class AstNode:
    id: str
    id_span: SourceSpan
    kind: str
    game: str | None = None
    ending: str | None = None
    channel: str | None = None
    pages: list[str] = field(default_factory=list)
    next: str | None = None
    next_span: SourceSpan | None = None
    effects: list[AstEffect] = field(default_factory=list)
    prompt: str | None = None
    options: list[AstOption] = field(default_factory=list)
    params: list[AstParam] = field(default_factory=list)
    success: str | None = None
    success_span: SourceSpan | None = None
    failure: str | None = None
    failure_span: SourceSpan | None = None
    text: str | None = None


@dataclass
class AstStory:
    file: str
    title: str
    start: str
    start_span: SourceSpan
    meters: list[AstMeter] = field(default_factory=list)
    items: list[AstItem] = field(default_factory=list)
    flags: list[AstFlag] = field(default_factory=list)
    nodes: list[AstNode] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Parser


class _ParseError(Exception):
    """Internal: unwinds to the nearest recovery point."""


class _Saturated(Exception):
    """Internal: the error cap was reached; abandon the parse."""


_EFFECT_KINDS = {
    "set": "set-flag",
    "clear": "clear-flag",
    "give": "give-item",
    "take": "take-item",
    "meter": "meter-add",
}


class _Parser:
    def __init__(self, tokens: list[Token], sink: _Sink):
        self.toks = tokens
        self.i = 0
        self.sink = sink

    # -- token plumbing

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind is not TokKind.EOF:
            self.i += 1
        return tok

    def at_kw(self, word: str) -> bool:
        return self.cur.kind is TokKind.IDENT and self.cur.value == word

    def error(self, code: str, message: str, tok: Token | None = None) -> None:
        """Record an error and unwind to the enclosing recovery point."""
        tok = tok or self.cur
        self.sink.error(code, message, self.sink.span(tok))
        if self.sink.saturated:
            raise _Saturated()
        raise _ParseError()

    def soft_error(self, code: str, message: str, tok: Token) -> None:
        """Record an error without unwinding (structure is still parseable)."""
        self.sink.error(code, message, self.sink.span(tok))
        if self.sink.saturated:
            raise _Saturated()

    def expect(self, kind: TokKind, what: str) -> Token:
        if self.cur.kind is not kind:
            self.error("parse-expected", f"expected {what}, found {self._describe(self.cur)}")
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            self.error("parse-expected", f"expected {word!r}, found {self._describe(self.cur)}")
        return self.advance()

    def expect_ident(self, what: str = "an identifier") -> Token:
        return self.expect(TokKind.IDENT, what)

    def expect_string(self, what: str = "a string") -> Token:
        return self.expect(TokKind.STRING, what)

    def expect_int(self, what: str = "an integer") -> tuple[int, Token]:
        if self.cur.kind is TokKind.MINUS:
            minus = self.advance()
            tok = self.expect(TokKind.INT, what)
            return -tok.value, minus
        tok = self.expect(TokKind.INT, what)
        return tok.value, tok

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind is TokKind.EOF:
            return "end of input"
        if tok.kind is TokKind.STRING:
            return "a string"
        return repr(str(tok.value))

    def resync(self) -> None:
        """Skip ahead to the next plausible declaration or node start."""
        self.advance()
        while self.cur.kind is not TokKind.EOF:
            if self.cur.kind is TokKind.IDENT and self.cur.value in (
                "node",
                "meter",
                "item",
                "flag",
            ):
                return
            self.advance()

    # -- grammar

    def parse_story(self) -> AstStory:
        title = ""
        start = ""
        start_span = self.sink.span(self.cur)
        try:
            self.expect_kw("story")
            title = self.expect_string("the story title").value
            self.expect_kw("start")
            start_tok = self.expect_ident("the start node id")
            start = start_tok.value
            start_span = self.sink.span(start_tok)
        except _ParseError:
            self.resync()
        story = AstStory(self.sink.filename, title, start, start_span)
        while self.cur.kind is not TokKind.EOF:
            try:
                if self.at_kw("meter"):
                    story.meters.append(self.parse_meter())
                elif self.at_kw("item"):
                    story.items.append(self.parse_item())
                elif self.at_kw("flag"):
                    story.flags.append(self.parse_flag())
                elif self.at_kw("node"):
                    story.nodes.append(self.parse_node())
                else:
                    self.error(
                        "parse-unexpected",
                        f"expected a declaration or 'node', found {self._describe(self.cur)}",
                    )
            except _ParseError:
                self.resync()
        if not story.nodes and not self.sink.diags:
            self.sink.error("parse-no-nodes", "story has no nodes", self.sink.span(self.cur))
        return story

    def parse_meter(self) -> AstMeter:
        self.expect_kw("meter")
        name = self.expect_ident("the meter name")
        self.expect_kw("min")
        lo, _ = self.expect_int()
        self.expect_kw("max")
        hi, _ = self.expect_int()
        self.expect_kw("init")
        init, _ = self.expect_int()
        return AstMeter(name.value, lo, hi, init, self.sink.span(name))

    def parse_item(self) -> AstItem:
        self.expect_kw("item")
        name = self.expect_ident("the item name")
        label = None
        if self.cur.kind is TokKind.STRING:
            label = self.advance().value
        return AstItem(name.value, label, self.sink.span(name))

    def parse_flag(self) -> AstFlag:
        self.expect_kw("flag")
        name = self.expect_ident("the flag name")
        return AstFlag(name.value, self.sink.span(name))

    def parse_node(self) -> AstNode:
        self.expect_kw("node")
        id_tok = self.expect_ident("a node id")
        kind_tok = self.expect_ident("a node kind")
        if kind_tok.value not in NODE_KINDS:
            self.error(
                "parse-bad-kind",
                f"node kind must be one of {', '.join(NODE_KINDS)}",
                kind_tok,
            )
        node = AstNode(id_tok.value, self.sink.span(id_tok), kind_tok.value)
        if node.kind == "minigame":
            game_tok = self.expect_ident("a mini-game kind")
            if game_tok.value not in GAME_KINDS:
                self.error(
                    "parse-bad-game",
                    f"mini-game kind must be one of {', '.join(GAME_KINDS)}",
                    game_tok,
                )
            node.game = game_tok.value
        elif node.kind == "ending":
            end_tok = self.expect_ident("'main' or 'sub'")
            if end_tok.value not in ENDING_KINDS:
                self.error("parse-bad-ending", "ending kind must be 'main' or 'sub'", end_tok)
            node.ending = end_tok.value
        if self.at_kw("channel"):
            self.advance()
            chan_tok = self.expect_ident("'touch', 'handset' or 'any'")
            if chan_tok.value not in CHANNEL_WORDS:
                self.error(
                    "parse-bad-channel",
                    "channel must be 'touch', 'handset' or 'any'",
                    chan_tok,
                )
            node.channel = chan_tok.value
        self.expect(TokKind.LBRACE, "'{'")
        if node.kind == "narration":
            self.parse_narration_body(node)
        elif node.kind == "choice":
            self.parse_choice_body(node)
        elif node.kind == "minigame":
            self.parse_minigame_body(node)
        else:
            self.expect_kw("text")
            node.text = self.expect_string("the ending text").value
        self.expect(TokKind.RBRACE, "'}'")
        return node

    def parse_narration_body(self, node: AstNode) -> None:
        while self.at_kw("text"):
            self.advance()
            node.pages.append(self.expect_string("the page text").value)
        if not node.pages:
            self.error("parse-narration-text", "narration needs at least one 'text' page")
        self.expect_kw("next")
        next_tok = self.expect_ident("the next node id")
        node.next = next_tok.value
        node.next_span = self.sink.span(next_tok)
        node.effects = self.parse_effects()

    def parse_choice_body(self, node: AstNode) -> None:
        prompt_tok = self.expect_kw("prompt")
        node.prompt = self.expect_string("the prompt text").value
        while self.at_kw("option"):
            self.advance()
            label = self.expect_string("the option label").value
            guards = []
            while self.at_kw("if"):
                guards.append(self.parse_guard())
            self.expect(TokKind.ARROW, "'->'")
            target_tok = self.expect_ident("the option target")
            option = AstOption(label, target_tok.value, self.sink.span(target_tok), guards)
            option.effects = self.parse_effects()
            node.options.append(option)
        if len(node.options) < 2:
            self.soft_error("parse-choice-options", "choice requires >= 2 options", prompt_tok)

    def parse_guard(self) -> AstGuard:
        if_tok = self.expect_kw("if")
        negated = False
        if self.cur.kind is TokKind.BANG:
            self.advance()
            negated = True
        if self.at_kw("flag"):
            self.advance()
            name = self.expect_ident("the flag name")
            kind = "flag-clear" if negated else "flag-set"
            return AstGuard(kind, name.value, None, None, self.sink.span(name))
        if negated:
            self.error("parse-bad-guard", "'!' applies only to flag guards", if_tok)
        if self.at_kw("item"):
            self.advance()
            name = self.expect_ident("the item name")
            return AstGuard("item-held", name.value, None, None, self.sink.span(name))
        if self.at_kw("meter"):
            self.advance()
            name = self.expect_ident("the meter name")
            op_tok = self.expect(TokKind.CMP, "a comparator")
            value, _ = self.expect_int("the comparison value")
            return AstGuard("meter-cmp", name.value, op_tok.value, value, self.sink.span(name))
        self.error("parse-bad-guard", "guard must test a flag, item or meter")
        raise AssertionError("unreachable")

    def parse_effects(self) -> list[AstEffect]:
        effects: list[AstEffect] = []
        while self.cur.kind is TokKind.IDENT and self.cur.value in _EFFECT_KINDS:
            word = self.advance()
            name = self.expect_ident("a declared name")
            delta = None
            if word.value == "meter":
                if self.cur.kind is TokKind.PLUS:
                    self.advance()
                    delta, _ = self.expect_int("the meter delta")
                elif self.cur.kind is TokKind.MINUS:
                    self.advance()
                    amount, _ = self.expect_int("the meter delta")
                    delta = -amount
                else:
                    self.error("parse-expected", "expected '+' or '-' after the meter name")
            effects.append(
                AstEffect(_EFFECT_KINDS[word.value], name.value, delta, self.sink.span(name))
            )
        return effects

    def parse_minigame_body(self, node: AstNode) -> None:
        self.expect_kw("params")
        self.expect(TokKind.LBRACE, "'{'")
        while self.cur.kind is TokKind.IDENT:
            key = self.advance()
            value_tok = self.cur
            if self.cur.kind is TokKind.STRING:
                value: str | int = self.advance().value
                is_ident = False
            elif self.cur.kind in (TokKind.INT, TokKind.MINUS):
                value, value_tok = self.expect_int("the parameter value")
                is_ident = False
            elif self.cur.kind is TokKind.IDENT:
                value = self.advance().value
                is_ident = True
            else:
                self.error("parse-expected", "expected a parameter value")
                raise AssertionError("unreachable")
            node.params.append(
                AstParam(key.value, value, is_ident, self.sink.span(key), self.sink.span(value_tok))
            )
        self.expect(TokKind.RBRACE, "'}'")
        self.expect_kw("success")
        self.expect(TokKind.ARROW, "'->'")
        succ = self.expect_ident("the success target")
        node.success = succ.value
        node.success_span = self.sink.span(succ)
        self.expect_kw("failure")
        self.expect(TokKind.ARROW, "'->'")
        fail = self.expect_ident("the failure target")
        node.failure = fail.value
        node.failure_span = self.sink.span(fail)


def parse(source: str, filename: str = "<story>") -> tuple[AstStory | None, list[Diagnostic]]:
    """Parse DSL text.  Returns (ast, []) on success or (None, diagnostics).

    Never raises on any input; the worst outcome is a saturated diagnostic
    list of MAX_ERRORS findings.
    """
    sink = _Sink(filename)
    tokens = _lex(source, sink)
    parser = _Parser(tokens, sink)
    story: AstStory | None = None
    try:
        story = parser.parse_story()
    except (_ParseError, _Saturated):
        pass
    if sink.error_count:
        return None, sink.diags
    return story, sink.diags


# ---------------------------------------------------------------------------
# Mini-game parameter schemas

# DSL key -> value shape, per mini-game kind. "cells"/"grid"/"steps" are
# strings with their own micro-syntax, parsed by the helpers below.
_SCHEMAS: dict[str, dict[str, str]] = {
    "biolink": {
        "creature": "string",
        "grid": "string",
        "meter": "ident",
        "required-trash": "int",
        "cost": "int",
        "regen": "int",
        "threshold": "int",
        "visibility": "int",
    },
    "scan": {
        "width": "int",
        "height": "int",
        "target": "string",
        "decoys": "string",
        "budget": "int",
    },
    "coord": {"expected": "string", "max-attempts": "int"},
    "sequence": {"steps": "string"},
}

_REQUIRED: dict[str, set[str]] = {
    "biolink": {"creature", "grid", "meter", "required-trash"},
    "scan": {"width", "height", "target"},
    "coord": {"expected"},
    "sequence": {"steps"},
}


def _parse_cell(text: str) -> tuple[int, int] | None:
    parts = text.split(",")
    if len(parts) != 2:
        return None
    try:
        return (int(parts[0].strip()), int(parts[1].strip()))
    except ValueError:
        return None


def _parse_decoys(text: str) -> list[tuple[int, int]] | None:
    if not text.strip():
        return []
    cells = []
    for chunk in text.split(";"):
        cell = _parse_cell(chunk)
        if cell is None:
            return None
        cells.append(cell)
    return cells


def _parse_steps(text: str) -> list[tuple[str, str]] | None:
    steps = []
    for chunk in text.split(","):
        entry = chunk.strip()
        if not entry:
            continue
        if "@" not in entry:
            return None
        step_id, _, chan = entry.partition("@")
        steps.append((step_id.strip(), chan.strip()))
    return steps


def check_params(node: AstNode) -> list[Diagnostic]:
    """Type-check one minigame node's params block against its kind's schema."""
    diags: list[Diagnostic] = []

    def err(code: str, message: str, span: SourceSpan) -> None:
        diags.append(Diagnostic(Severity.ERROR, code, message, span=span))

    schema = _SCHEMAS[node.game or ""]
    seen: set[str] = set()
    values: dict[str, AstParam] = {}
    for param in node.params:
        if param.key not in schema:
            err("unknown-param", f"{node.game} has no parameter {param.key!r}", param.key_span)
            continue
        if param.key in seen:
            err("duplicate-param", f"parameter {param.key!r} given more than once", param.key_span)
            continue
        seen.add(param.key)
        shape = schema[param.key]
        if shape == "int" and not isinstance(param.value, int):
            err("param-type", f"parameter {param.key!r} takes an integer", param.value_span)
            continue
        if shape == "string" and (not isinstance(param.value, str) or param.is_ident):
            err("param-type", f"parameter {param.key!r} takes a string", param.value_span)
            continue
        if shape == "ident" and not param.is_ident:
            err("param-type", f"parameter {param.key!r} takes a bare name", param.value_span)
            continue
        values[param.key] = param
    for missing in sorted(_REQUIRED[node.game or ""] - seen):
        err("missing-param", f"{node.game} requires parameter {missing!r}", node.id_span)

    if "target" in values:
        if _parse_cell(values["target"].value) is None:
            err("param-syntax", "target must be 'x,y'", values["target"].value_span)
    if "decoys" in values:
        if _parse_decoys(values["decoys"].value) is None:
            err("param-syntax", "decoys must be 'x,y' pairs separated by ';'", values["decoys"].value_span)
    if "steps" in values:
        steps = _parse_steps(values["steps"].value)
        if steps is None:
            err("param-syntax", "steps must be 'id@channel' entries separated by ','", values["steps"].value_span)
        elif not steps:
            err("param-syntax", "steps must list at least one step", values["steps"].value_span)
        else:
            for step_id, chan in steps:
                if chan not in ("touch", "handset"):
                    err(
                        "sequence-step-channel",
                        f"step {step_id!r} channel must be touch or handset",
                        values["steps"].value_span,
                    )
                if not NODE_ID_RE.match(step_id):
                    err("param-syntax", f"step id {step_id!r} is not a legal identifier", values["steps"].value_span)
    return diags


def lower_params(node: AstNode) -> MiniGameParams:
    """Build normalized engine params from a checked params block.

    Callers must have run check_params first; this fills documented defaults
    and applies the micro-syntax parsers without re-validating.
    """
    vals: dict[str, str | int] = {p.key: p.value for p in node.params}
    if node.game == "biolink":
        grid = tuple(row.strip() for row in str(vals["grid"]).split("/"))
        return BiolinkParams(
            creature=str(vals["creature"]),
            grid=grid,
            meter=str(vals["meter"]),
            required_trash=int(vals["required-trash"]),
            cost=int(vals.get("cost", BIOLINK_DEFAULTS["cost"])),
            regen=int(vals.get("regen", BIOLINK_DEFAULTS["regen"])),
            threshold=int(vals.get("threshold", BIOLINK_DEFAULTS["threshold"])),
            visibility=int(vals.get("visibility", BIOLINK_DEFAULTS["visibility"])),
        )
    if node.game == "scan":
        decoys = _parse_decoys(str(vals.get("decoys", ""))) or []
        budget = vals.get("budget")
        return ScanParams(
            width=int(vals["width"]),
            height=int(vals["height"]),
            target=_parse_cell(str(vals["target"])) or (0, 0),
            decoys=tuple(sorted(decoys)),
            budget=None if budget is None else int(budget),
        )
    if node.game == "coord":
        attempts = vals.get("max-attempts")
        return CoordParams(
            expected=str(vals["expected"]),
            max_attempts=None if attempts is None else int(attempts),
        )
    steps = _parse_steps(str(vals["steps"])) or []
    return SequenceParams(steps=tuple((sid, Channel(chan)) for sid, chan in steps))


# ---------------------------------------------------------------------------
# Semantic checks


def check(ast: AstStory) -> list[Diagnostic]:
    """Resolve names and type-check params; returns findings sorted by position.

    Errors block compilation; the only warning is "unreachable-by-syntax" for
    nodes nothing points at.
    """
    diags: list[Diagnostic] = []

    def err(code: str, message: str, span: SourceSpan) -> None:
        diags.append(Diagnostic(Severity.ERROR, code, message, span=span))

    meters: set[str] = set()
    for m in ast.meters:
        if m.name in meters:
            err("duplicate-meter", f"meter {m.name!r} declared more than once", m.span)
        meters.add(m.name)
    items: set[str] = set()
    for it in ast.items:
        if it.name in items:
            err("duplicate-item", f"item {it.name!r} declared more than once", it.span)
        items.add(it.name)
    flags: set[str] = set()
    for fl in ast.flags:
        if fl.name in flags:
            err("duplicate-flag", f"flag {fl.name!r} declared more than once", fl.span)
        flags.add(fl.name)

    node_ids: set[str] = set()
    for node in ast.nodes:
        if node.id in node_ids:
            err("duplicate-node-id", f"node {node.id!r} is already defined", node.id_span)
        node_ids.add(node.id)

    if ast.start and ast.start not in node_ids:
        err("unknown-start", f"start node {ast.start!r} is not defined", ast.start_span)

    def check_target(target: str | None, span: SourceSpan | None) -> None:
        if target is not None and span is not None and target not in node_ids:
            err("unknown-target", f"target {target!r} is not defined", span)

    def check_guard(guard: AstGuard) -> None:
        if guard.kind in ("flag-set", "flag-clear") and guard.name not in flags:
            err("unknown-flag", f"flag {guard.name!r} is not declared", guard.span)
        elif guard.kind == "item-held" and guard.name not in items:
            err("unknown-item", f"item {guard.name!r} is not declared", guard.span)
        elif guard.kind == "meter-cmp" and guard.name not in meters:
            err("unknown-meter", f"meter {guard.name!r} is not declared", guard.span)

    def check_effect(effect: AstEffect) -> None:
        if effect.kind in ("set-flag", "clear-flag") and effect.name not in flags:
            err("unknown-flag", f"flag {effect.name!r} is not declared", effect.span)
        elif effect.kind in ("give-item", "take-item") and effect.name not in items:
            err("unknown-item", f"item {effect.name!r} is not declared", effect.span)
        elif effect.kind == "meter-add" and effect.name not in meters:
            err("unknown-meter", f"meter {effect.name!r} is not declared", effect.span)

    incoming: dict[str, set[str]] = {}

    def note_edge(source: str, target: str | None) -> None:
        if target is not None and target != source:
            incoming.setdefault(target, set()).add(source)

    for node in ast.nodes:
        check_target(node.next, node.next_span)
        note_edge(node.id, node.next)
        check_target(node.success, node.success_span)
        note_edge(node.id, node.success)
        check_target(node.failure, node.failure_span)
        note_edge(node.id, node.failure)
        for effect in node.effects:
            check_effect(effect)
        for option in node.options:
            check_target(option.target, option.target_span)
            note_edge(node.id, option.target)
            for guard in option.guards:
                check_guard(guard)
            for effect in option.effects:
                check_effect(effect)
        if node.kind == "minigame":
            diags.extend(check_params(node))
            for param in node.params:
                if param.key == "meter" and param.is_ident and param.value not in meters:
                    err("unknown-meter", f"meter {param.value!r} is not declared", param.value_span)

    for node in ast.nodes:
        if node.id != ast.start and not incoming.get(node.id):
            diags.append(
                Diagnostic(
                    Severity.WARNING,
                    "unreachable-by-syntax",
                    f"nothing points at node {node.id!r}",
                    span=node.id_span,
                    node=node.id,
                )
            )

    diags.sort(key=lambda d: (d.span.line, d.span.column, d.code, d.message))
    return diags
