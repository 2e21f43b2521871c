"""Typed story graph, its validation rules, and the canonical on-disk format.

The graph is the compiler's output and the runtime's input.  Everything here
is a pure function over immutable values; the graph never changes after
construction.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Union

from .diagnostics import Diagnostic, error
from .errors import InvalidGraphError, MalformedInputError, UnsupportedVersionError

GRAPH_VERSION = 1

NODE_ID_RE = re.compile(r"[A-Za-z][A-Za-z0-9-]*\Z")

CMP_OPS = ("<", "<=", "=", ">=", ">")

GRID_CELLS = frozenset(".T#S")


class Channel(str, Enum):
    """Input device a node accepts (ANY) or an event carries (TOUCH/HANDSET)."""

    TOUCH = "touch"
    HANDSET = "handset"
    ANY = "any"


class NodeKind(str, Enum):
    NARRATION = "narration"
    CHOICE = "choice"
    MINIGAME = "minigame"
    ENDING = "ending"


@dataclass(frozen=True)
class MeterDef:
    name: str
    min: int
    max: int
    init: int


@dataclass(frozen=True)
class ItemDef:
    name: str
    label: str | None = None


@dataclass(frozen=True)
class Guard:
    """Predicate over session state; `op`/`value` are used only by meter-cmp."""

    kind: str  # "flag-set" | "flag-clear" | "item-held" | "meter-cmp"
    name: str
    op: str | None = None
    value: int | None = None


@dataclass(frozen=True)
class Effect:
    """State mutation applied on a transition; `delta` is used only by meter-add."""

    kind: str  # "set-flag" | "clear-flag" | "give-item" | "take-item" | "meter-add"
    name: str
    delta: int | None = None


@dataclass(frozen=True)
class ChoiceOption:
    label: str
    target: str
    guards: tuple[Guard, ...] = ()
    effects: tuple[Effect, ...] = ()


@dataclass(frozen=True)
class BiolinkParams:
    creature: str
    grid: tuple[str, ...]
    meter: str
    required_trash: int
    cost: int
    regen: int
    threshold: int
    visibility: int

    def trash_cells(self) -> list[tuple[int, int]]:
        return [
            (x, y)
            for y, row in enumerate(self.grid)
            for x, cell in enumerate(row)
            if cell == "T"
        ]

    def start_cell(self) -> tuple[int, int]:
        for y, row in enumerate(self.grid):
            for x, cell in enumerate(row):
                if cell == "S":
                    return (x, y)
        raise ValueError("grid has no start cell")


@dataclass(frozen=True)
class ScanParams:
    width: int
    height: int
    target: tuple[int, int]
    decoys: tuple[tuple[int, int], ...] = ()
    budget: int | None = None


@dataclass(frozen=True)
class CoordParams:
    expected: str
    max_attempts: int | None = None


@dataclass(frozen=True)
class SequenceParams:
    steps: tuple[tuple[str, Channel], ...]


MiniGameParams = Union[BiolinkParams, ScanParams, CoordParams, SequenceParams]

_PARAMS_KIND = {
    BiolinkParams: "biolink",
    ScanParams: "scan",
    CoordParams: "coord",
    SequenceParams: "sequence",
}


@dataclass(frozen=True)
class NarrationBody:
    pages: tuple[str, ...]
    next: str
    effects: tuple[Effect, ...] = ()


@dataclass(frozen=True)
class ChoiceBody:
    prompt: str
    options: tuple[ChoiceOption, ...]


@dataclass(frozen=True)
class MiniGameBody:
    params: MiniGameParams
    success: str
    failure: str

    @property
    def game(self) -> str:
        return _PARAMS_KIND[type(self.params)]


@dataclass(frozen=True)
class EndingBody:
    category: str  # "main" | "sub"
    text: str


NodeBody = Union[NarrationBody, ChoiceBody, MiniGameBody, EndingBody]

_BODY_KIND = {
    NarrationBody: NodeKind.NARRATION,
    ChoiceBody: NodeKind.CHOICE,
    MiniGameBody: NodeKind.MINIGAME,
    EndingBody: NodeKind.ENDING,
}


@dataclass(frozen=True)
class Node:
    id: str
    channel: Channel
    body: NodeBody

    @property
    def kind(self) -> NodeKind:
        return _BODY_KIND[type(self.body)]


@dataclass(frozen=True)
class StoryGraph:
    title: str
    start: str
    meters: tuple[MeterDef, ...]
    items: tuple[ItemDef, ...]
    flags: tuple[str, ...]
    nodes: dict[str, Node] = field(default_factory=dict)
    version: int = GRAPH_VERSION

    def meter(self, name: str) -> MeterDef:
        for m in self.meters:
            if m.name == name:
                return m
        raise KeyError(name)

    def ending_ids(self) -> list[str]:
        return sorted(nid for nid, n in self.nodes.items() if n.kind is NodeKind.ENDING)


def edge_targets(node: Node) -> list[str]:
    """All node ids this node can transition to, in authored order."""
    body = node.body
    if isinstance(body, NarrationBody):
        return [body.next]
    if isinstance(body, ChoiceBody):
        return [opt.target for opt in body.options]
    if isinstance(body, MiniGameBody):
        return [body.success, body.failure]
    return []


def iter_guards(node: Node) -> Iterator[Guard]:
    if isinstance(node.body, ChoiceBody):
        for opt in node.body.options:
            yield from opt.guards


def iter_effects(node: Node) -> Iterator[Effect]:
    body = node.body
    if isinstance(body, NarrationBody):
        yield from body.effects
    elif isinstance(body, ChoiceBody):
        for opt in body.options:
            yield from opt.effects


# ---------------------------------------------------------------------------
# Validation


def graph_validate(graph: StoryGraph) -> list[Diagnostic]:
    """Check every graph invariant; returns one Error per violation.

    The list is sorted by (node id, rule code, message) so equal graphs always
    produce the same diagnostics in the same order.  Declaration-level
    findings carry no node id and sort first.
    """
    out: list[Diagnostic] = []

    def err(code: str, message: str, node: str | None = None) -> None:
        out.append(error(code, message, node=node))

    if graph.version < 1:
        err("bad-version", f"graph version must be >= 1, got {graph.version}")

    meter_names = _check_decls(graph, err)

    if graph.start not in graph.nodes:
        err("unknown-start", "unknown start node")

    if not any(n.kind is NodeKind.ENDING for n in graph.nodes.values()):
        err("no-ending", "story has no ending node")

    flag_names = set(graph.flags)
    item_names = {i.name for i in graph.items}

    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        if not NODE_ID_RE.match(nid):
            err("bad-node-id", f"node id {nid!r} is not a legal identifier", node=nid)
        if node.id != nid:
            err("node-id-mismatch", f"node keyed {nid!r} carries id {node.id!r}", node=nid)

        for target in edge_targets(node):
            if target not in graph.nodes:
                err("unknown-target", f"edge target {target!r} does not exist", node=nid)

        for guard in iter_guards(node):
            _check_guard(guard, nid, flag_names, item_names, meter_names, err)
        for effect in iter_effects(node):
            _check_effect(effect, nid, flag_names, item_names, meter_names, err)

        body = node.body
        if isinstance(body, NarrationBody):
            if not body.pages:
                err("narration-no-pages", "narration has no text pages", node=nid)
        elif isinstance(body, ChoiceBody):
            if len(body.options) < 2:
                err("choice-min-options", "choice requires >= 2 options", node=nid)
        elif isinstance(body, EndingBody):
            if body.category not in ("main", "sub"):
                err("bad-ending-kind", f"ending kind {body.category!r} is not main/sub", node=nid)
        elif isinstance(body, MiniGameBody):
            _check_params(body.params, nid, meter_names, err)

    out.sort(key=lambda d: (d.node or "", d.code, d.message))
    return out


def _check_decls(graph: StoryGraph, err) -> set[str]:
    seen_meters: set[str] = set()
    for m in graph.meters:
        if m.name in seen_meters:
            err("duplicate-meter", f"meter {m.name!r} declared more than once")
        seen_meters.add(m.name)
        if not NODE_ID_RE.match(m.name):
            err("bad-name", f"meter name {m.name!r} is not a legal identifier")
        if m.max <= m.min or not (m.min <= m.init <= m.max):
            err("meter-bounds", f"meter {m.name!r} needs min < max and min <= init <= max")
    seen_items: set[str] = set()
    for i in graph.items:
        if i.name in seen_items:
            err("duplicate-item", f"item {i.name!r} declared more than once")
        seen_items.add(i.name)
        if not NODE_ID_RE.match(i.name):
            err("bad-name", f"item name {i.name!r} is not a legal identifier")
    seen_flags: set[str] = set()
    for f in graph.flags:
        if f in seen_flags:
            err("duplicate-flag", f"flag {f!r} declared more than once")
        seen_flags.add(f)
        if not NODE_ID_RE.match(f):
            err("bad-name", f"flag name {f!r} is not a legal identifier")
    return seen_meters


def _check_guard(guard: Guard, nid: str, flags: set[str], items: set[str], meters: set[str], err) -> None:
    if guard.kind in ("flag-set", "flag-clear"):
        if guard.name not in flags:
            err("unknown-flag", f"guard references undeclared flag {guard.name!r}", node=nid)
    elif guard.kind == "item-held":
        if guard.name not in items:
            err("unknown-item", f"guard references undeclared item {guard.name!r}", node=nid)
    elif guard.kind == "meter-cmp":
        if guard.name not in meters:
            err("unknown-meter", f"guard references undeclared meter {guard.name!r}", node=nid)
        if guard.op not in CMP_OPS:
            err("bad-guard-op", f"guard comparator {guard.op!r} is not one of {'/'.join(CMP_OPS)}", node=nid)
        if not isinstance(guard.value, int):
            err("bad-guard-op", "meter guard needs an integer comparison value", node=nid)
    else:
        err("bad-guard-op", f"unknown guard kind {guard.kind!r}", node=nid)


def _check_effect(effect: Effect, nid: str, flags: set[str], items: set[str], meters: set[str], err) -> None:
    if effect.kind in ("set-flag", "clear-flag"):
        if effect.name not in flags:
            err("unknown-flag", f"effect references undeclared flag {effect.name!r}", node=nid)
    elif effect.kind in ("give-item", "take-item"):
        if effect.name not in items:
            err("unknown-item", f"effect references undeclared item {effect.name!r}", node=nid)
    elif effect.kind == "meter-add":
        if effect.name not in meters:
            err("unknown-meter", f"effect references undeclared meter {effect.name!r}", node=nid)
        if not isinstance(effect.delta, int):
            err("bad-effect", "meter effect needs an integer delta", node=nid)
    else:
        err("bad-effect", f"unknown effect kind {effect.kind!r}", node=nid)


def _check_params(params: MiniGameParams, nid: str, meters: set[str], err) -> None:
    if isinstance(params, BiolinkParams):
        widths = {len(row) for row in params.grid}
        if not params.grid or len(widths) > 1:
            err("biolink-grid-ragged", "biolink grid must be rectangular and nonempty", node=nid)
        bad = {c for row in params.grid for c in row} - GRID_CELLS
        if bad:
            err("biolink-grid-char", f"biolink grid holds unknown cell(s) {sorted(bad)}", node=nid)
        starts = sum(row.count("S") for row in params.grid)
        if starts != 1:
            err("biolink-grid-start", f"biolink grid needs exactly one S, found {starts}", node=nid)
        trash = sum(row.count("T") for row in params.grid)
        if trash < params.required_trash:
            err(
                "biolink-trash-count",
                f"grid holds {trash} trash cell(s) but required_trash is {params.required_trash}",
                node=nid,
            )
        if params.meter not in meters:
            err("unknown-meter", f"biolink references undeclared meter {params.meter!r}", node=nid)
        if params.cost < 0 or params.regen < 0:
            err("param-range", "biolink cost and regen must be >= 0", node=nid)
        if params.visibility < 1:
            err("param-range", "biolink visibility must be >= 1", node=nid)
        if params.required_trash < 0:
            err("param-range", "biolink required_trash must be >= 0", node=nid)
    elif isinstance(params, ScanParams):
        if params.width < 1 or params.height < 1:
            err("param-range", "scan width and height must be >= 1", node=nid)
        else:
            cells = [("target", params.target)] + [("decoy", d) for d in params.decoys]
            for label, (x, y) in cells:
                if not (0 <= x < params.width and 0 <= y < params.height):
                    err("scan-cell-oob", f"scan {label} ({x},{y}) is out of bounds", node=nid)
        if params.target in params.decoys:
            err("scan-target-decoy", "scan target cannot also be a decoy", node=nid)
        if params.budget is not None and params.budget < 1:
            err("param-range", "scan budget must be >= 1 when present", node=nid)
    elif isinstance(params, CoordParams):
        if params.max_attempts is not None and params.max_attempts < 1:
            err("param-range", "coord max_attempts must be >= 1 when present", node=nid)
    elif isinstance(params, SequenceParams):
        if not params.steps:
            err("sequence-empty", "sequence needs at least one step", node=nid)
        for step_id, chan in params.steps:
            if chan not in (Channel.TOUCH, Channel.HANDSET):
                err("sequence-step-channel", f"step {step_id!r} channel must be touch or handset", node=nid)
            if not NODE_ID_RE.match(step_id):
                err("bad-name", f"step id {step_id!r} is not a legal identifier", node=nid)


# ---------------------------------------------------------------------------
# Canonical serialization

_JSON_KW = dict(sort_keys=True, indent=2, ensure_ascii=False)


def _guard_to_json(g: Guard) -> dict[str, Any]:
    doc: dict[str, Any] = {"kind": g.kind, "name": g.name}
    if g.kind == "meter-cmp":
        doc["op"] = g.op
        doc["value"] = g.value
    return doc


def _effect_to_json(e: Effect) -> dict[str, Any]:
    doc: dict[str, Any] = {"kind": e.kind, "name": e.name}
    if e.kind == "meter-add":
        doc["delta"] = e.delta
    return doc


def _params_to_json(params: MiniGameParams) -> dict[str, Any]:
    if isinstance(params, BiolinkParams):
        return {
            "creature": params.creature,
            "grid": list(params.grid),
            "meter": params.meter,
            "required_trash": params.required_trash,
            "cost": params.cost,
            "regen": params.regen,
            "threshold": params.threshold,
            "visibility": params.visibility,
        }
    if isinstance(params, ScanParams):
        return {
            "width": params.width,
            "height": params.height,
            "target": list(params.target),
            "decoys": [list(d) for d in params.decoys],
            "budget": params.budget,
        }
    if isinstance(params, CoordParams):
        return {"expected": params.expected, "max_attempts": params.max_attempts}
    return {"steps": [[sid, chan.value] for sid, chan in params.steps]}


def _node_to_json(node: Node) -> dict[str, Any]:
    doc: dict[str, Any] = {"type": node.kind.value, "channel": node.channel.value}
    body = node.body
    if isinstance(body, NarrationBody):
        doc["pages"] = list(body.pages)
        doc["next"] = body.next
        doc["effects"] = [_effect_to_json(e) for e in body.effects]
    elif isinstance(body, ChoiceBody):
        doc["prompt"] = body.prompt
        doc["options"] = [
            {
                "label": opt.label,
                "target": opt.target,
                "guards": [_guard_to_json(g) for g in opt.guards],
                "effects": [_effect_to_json(e) for e in opt.effects],
            }
            for opt in body.options
        ]
    elif isinstance(body, MiniGameBody):
        doc["game"] = body.game
        doc["params"] = _params_to_json(body.params)
        doc["success"] = body.success
        doc["failure"] = body.failure
    else:
        doc["category"] = body.category
        doc["text"] = body.text
    return doc


def graph_to_json(graph: StoryGraph) -> dict[str, Any]:
    """Plain-dict form of the graph, mirroring the canonical file layout."""
    return {
        "version": graph.version,
        "title": graph.title,
        "start": graph.start,
        "meters": [
            {"name": m.name, "min": m.min, "max": m.max, "init": m.init} for m in graph.meters
        ],
        "items": [{"name": i.name, "label": i.label} for i in graph.items],
        "flags": list(graph.flags),
        "nodes": {nid: _node_to_json(n) for nid, n in graph.nodes.items()},
    }


def graph_encode(graph: StoryGraph) -> bytes:
    """Canonical bytes: UTF-8 JSON, sorted keys, two-space indent, one trailing LF.

    Equal graphs encode to identical bytes regardless of construction order.
    Invalid graphs are refused.
    """
    diags = graph_validate(graph)
    if diags:
        raise InvalidGraphError(diags)
    return (json.dumps(graph_to_json(graph), **_JSON_KW) + "\n").encode("utf-8")


def story_hash(graph: StoryGraph) -> str:
    """Content identity of a graph: SHA-256 hex digest of its canonical bytes."""
    return hashlib.sha256(graph_encode(graph)).hexdigest()


# ---------------------------------------------------------------------------
# Decoding

_CHANNELS = {c.value: c for c in Channel}


class _Shape:
    """Tiny structural reader; every miss raises MalformedInputError with a path."""

    @staticmethod
    def obj(value: Any, where: str) -> dict:
        if not isinstance(value, dict):
            raise MalformedInputError(f"{where}: expected an object")
        return value

    @staticmethod
    def arr(value: Any, where: str) -> list:
        if not isinstance(value, list):
            raise MalformedInputError(f"{where}: expected an array")
        return value

    @staticmethod
    def text(value: Any, where: str) -> str:
        if not isinstance(value, str):
            raise MalformedInputError(f"{where}: expected a string")
        return value

    @staticmethod
    def num(value: Any, where: str) -> int:
        # bool is an int subclass; a save or graph never stores booleans here.
        if not isinstance(value, int) or isinstance(value, bool):
            raise MalformedInputError(f"{where}: expected an integer")
        return value

    @staticmethod
    def get(doc: dict, key: str, where: str) -> Any:
        if key not in doc:
            raise MalformedInputError(f"{where}: missing key {key!r}")
        return doc[key]


def _pair(value: Any, where: str) -> tuple[int, int]:
    arr = _Shape.arr(value, where)
    if len(arr) != 2:
        raise MalformedInputError(f"{where}: expected [x, y]")
    return (_Shape.num(arr[0], where), _Shape.num(arr[1], where))


def _channel(value: Any, where: str) -> Channel:
    name = _Shape.text(value, where)
    if name not in _CHANNELS:
        raise MalformedInputError(f"{where}: unknown channel {name!r}")
    return _CHANNELS[name]


def _guard_from_json(doc: Any, where: str) -> Guard:
    obj = _Shape.obj(doc, where)
    kind = _Shape.text(_Shape.get(obj, "kind", where), where)
    name = _Shape.text(_Shape.get(obj, "name", where), where)
    if kind == "meter-cmp":
        return Guard(
            kind,
            name,
            op=_Shape.text(_Shape.get(obj, "op", where), where),
            value=_Shape.num(_Shape.get(obj, "value", where), where),
        )
    return Guard(kind, name)


def _effect_from_json(doc: Any, where: str) -> Effect:
    obj = _Shape.obj(doc, where)
    kind = _Shape.text(_Shape.get(obj, "kind", where), where)
    name = _Shape.text(_Shape.get(obj, "name", where), where)
    if kind == "meter-add":
        return Effect(kind, name, delta=_Shape.num(_Shape.get(obj, "delta", where), where))
    return Effect(kind, name)


def _params_from_json(game: str, doc: Any, where: str) -> MiniGameParams:
    obj = _Shape.obj(doc, where)
    if game == "biolink":
        return BiolinkParams(
            creature=_Shape.text(_Shape.get(obj, "creature", where), where),
            grid=tuple(
                _Shape.text(row, where) for row in _Shape.arr(_Shape.get(obj, "grid", where), where)
            ),
            meter=_Shape.text(_Shape.get(obj, "meter", where), where),
            required_trash=_Shape.num(_Shape.get(obj, "required_trash", where), where),
            cost=_Shape.num(_Shape.get(obj, "cost", where), where),
            regen=_Shape.num(_Shape.get(obj, "regen", where), where),
            threshold=_Shape.num(_Shape.get(obj, "threshold", where), where),
            visibility=_Shape.num(_Shape.get(obj, "visibility", where), where),
        )
    if game == "scan":
        budget = _Shape.get(obj, "budget", where)
        return ScanParams(
            width=_Shape.num(_Shape.get(obj, "width", where), where),
            height=_Shape.num(_Shape.get(obj, "height", where), where),
            target=_pair(_Shape.get(obj, "target", where), where),
            decoys=tuple(
                _pair(d, where) for d in _Shape.arr(_Shape.get(obj, "decoys", where), where)
            ),
            budget=None if budget is None else _Shape.num(budget, where),
        )
    if game == "coord":
        attempts = _Shape.get(obj, "max_attempts", where)
        return CoordParams(
            expected=_Shape.text(_Shape.get(obj, "expected", where), where),
            max_attempts=None if attempts is None else _Shape.num(attempts, where),
        )
    if game == "sequence":
        steps = []
        for raw in _Shape.arr(_Shape.get(obj, "steps", where), where):
            pair = _Shape.arr(raw, where)
            if len(pair) != 2:
                raise MalformedInputError(f"{where}: step entries are [id, channel]")
            steps.append((_Shape.text(pair[0], where), _channel(pair[1], where)))
        return SequenceParams(steps=tuple(steps))
    raise MalformedInputError(f"{where}: unknown mini-game {game!r}")


def _node_from_json(nid: str, doc: Any) -> Node:
    where = f"nodes.{nid}"
    obj = _Shape.obj(doc, where)
    kind = _Shape.text(_Shape.get(obj, "type", where), where)
    channel = _channel(_Shape.get(obj, "channel", where), where)
    body: NodeBody
    if kind == "narration":
        body = NarrationBody(
            pages=tuple(
                _Shape.text(p, where) for p in _Shape.arr(_Shape.get(obj, "pages", where), where)
            ),
            next=_Shape.text(_Shape.get(obj, "next", where), where),
            effects=tuple(
                _effect_from_json(e, where)
                for e in _Shape.arr(_Shape.get(obj, "effects", where), where)
            ),
        )
    elif kind == "choice":
        options = []
        for raw in _Shape.arr(_Shape.get(obj, "options", where), where):
            opt = _Shape.obj(raw, where)
            options.append(
                ChoiceOption(
                    label=_Shape.text(_Shape.get(opt, "label", where), where),
                    target=_Shape.text(_Shape.get(opt, "target", where), where),
                    guards=tuple(
                        _guard_from_json(g, where)
                        for g in _Shape.arr(_Shape.get(opt, "guards", where), where)
                    ),
                    effects=tuple(
                        _effect_from_json(e, where)
                        for e in _Shape.arr(_Shape.get(opt, "effects", where), where)
                    ),
                )
            )
        body = ChoiceBody(
            prompt=_Shape.text(_Shape.get(obj, "prompt", where), where), options=tuple(options)
        )
    elif kind == "minigame":
        game = _Shape.text(_Shape.get(obj, "game", where), where)
        body = MiniGameBody(
            params=_params_from_json(game, _Shape.get(obj, "params", where), where),
            success=_Shape.text(_Shape.get(obj, "success", where), where),
            failure=_Shape.text(_Shape.get(obj, "failure", where), where),
        )
    elif kind == "ending":
        body = EndingBody(
            category=_Shape.text(_Shape.get(obj, "category", where), where),
            text=_Shape.text(_Shape.get(obj, "text", where), where),
        )
    else:
        raise MalformedInputError(f"{where}: unknown node type {kind!r}")
    return Node(id=nid, channel=channel, body=body)


def graph_from_json(doc: Any) -> StoryGraph:
    """Build a StoryGraph from parsed JSON; structural misses raise, invariants do not."""
    obj = _Shape.obj(doc, "document")
    version = _Shape.num(_Shape.get(obj, "version", "document"), "document")
    if version != GRAPH_VERSION:
        raise UnsupportedVersionError(f"story format version {version} is not supported")
    meters = []
    for raw in _Shape.arr(_Shape.get(obj, "meters", "document"), "meters"):
        m = _Shape.obj(raw, "meters")
        meters.append(
            MeterDef(
                name=_Shape.text(_Shape.get(m, "name", "meters"), "meters"),
                min=_Shape.num(_Shape.get(m, "min", "meters"), "meters"),
                max=_Shape.num(_Shape.get(m, "max", "meters"), "meters"),
                init=_Shape.num(_Shape.get(m, "init", "meters"), "meters"),
            )
        )
    items = []
    for raw in _Shape.arr(_Shape.get(obj, "items", "document"), "items"):
        i = _Shape.obj(raw, "items")
        label = _Shape.get(i, "label", "items")
        items.append(
            ItemDef(
                name=_Shape.text(_Shape.get(i, "name", "items"), "items"),
                label=None if label is None else _Shape.text(label, "items"),
            )
        )
    flags = tuple(
        _Shape.text(f, "flags") for f in _Shape.arr(_Shape.get(obj, "flags", "document"), "flags")
    )
    nodes_doc = _Shape.obj(_Shape.get(obj, "nodes", "document"), "nodes")
    nodes = {nid: _node_from_json(nid, nd) for nid, nd in nodes_doc.items()}
    return StoryGraph(
        title=_Shape.text(_Shape.get(obj, "title", "document"), "document"),
        start=_Shape.text(_Shape.get(obj, "start", "document"), "document"),
        meters=tuple(meters),
        items=tuple(items),
        flags=flags,
        nodes=nodes,
        version=version,
    )


def graph_decode(data: bytes | str) -> StoryGraph:
    """Parse canonical bytes back into a validated graph.

    Raises MalformedInputError for syntax/shape problems, UnsupportedVersionError
    for a foreign version, InvalidGraphError (with diagnostics) for a graph that
    parses but breaks invariants.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInputError(f"not UTF-8: {exc}") from None
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"not JSON: {exc}") from None
    graph = graph_from_json(doc)
    diags = graph_validate(graph)
    if diags:
        raise InvalidGraphError(diags)
    return graph
