"""Deterministic session state machine over a compiled story graph.

Transitions are pure: `apply_event` returns a successor session and never
mutates its input.  An event is either *accepted* (it advanced the machine,
possibly as a gameplay no-op like bumping a wall) or *rejected* (wrong
channel, malformed index, out-of-bounds cell, ...).  Only accepted events
increment `event_count`; rejected ones leave the session untouched and carry
an explanatory note.  The seed is stored for forward compatibility and
currently influences nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

from .errors import (
    HashMismatchError,
    MalformedInputError,
    MalformedSaveError,
    SessionFinishedError,
    UnsupportedVersionError,
)
from .model import (
    BiolinkParams,
    Channel,
    ChoiceBody,
    ChoiceOption,
    CoordParams,
    EndingBody,
    Guard,
    Effect,
    MeterDef,
    MiniGameBody,
    NarrationBody,
    Node,
    NodeKind,
    ScanParams,
    SequenceParams,
    StoryGraph,
    story_hash,
)

SAVE_VERSION = 1

# Handset keypad: digits, punctuation for coordinates, compass letters
# (either case), space, and the submit key.
KEYPAD_SYMBOLS = frozenset("0123456789.- NSEWnsew") | {"⏎"}

COORD_BUFFER_CAP = 32

# Note codes that mark an event as rejected (state unchanged, not counted).
REJECTED_NOTE_CODES = frozenset(
    {"wrong-channel", "bad-choice", "bad-event", "bad-key", "out-of-bounds", "unknown-step"}
)


# ---------------------------------------------------------------------------
# Events and notes


@dataclass(frozen=True)
class Advance:
    pass


@dataclass(frozen=True)
class Choose:
    index: int


@dataclass(frozen=True)
class Key:
    symbol: str


@dataclass(frozen=True)
class Mini:
    action: str
    x: int | None = None
    y: int | None = None
    step: str | None = None


@dataclass(frozen=True)
class Ack:
    pass


Payload = Union[Advance, Choose, Key, Mini, Ack]


@dataclass(frozen=True)
class Event:
    channel: Channel  # TOUCH or HANDSET; events never carry ANY
    payload: Payload


@dataclass(frozen=True)
class EngineNote:
    code: str
    message: str


def _note(code: str, message: str) -> EngineNote:
    return EngineNote(code, message)


class Outcome(Enum):
    CONTINUE = "continue"
    SUCCESS = "success"
    FAILURE = "failure"


# ---------------------------------------------------------------------------
# Mini-game state


@dataclass(frozen=True)
class BiolinkState:
    x: int
    y: int
    collected: frozenset[tuple[int, int]] = frozenset()


@dataclass(frozen=True)
class ScanState:
    revealed: frozenset[tuple[int, int]] = frozenset()
    scans_used: int = 0


@dataclass(frozen=True)
class CoordState:
    buffer: str = ""
    attempts_used: int = 0


@dataclass(frozen=True)
class SequenceState:
    next_step: int = 0


MiniState = Union[BiolinkState, ScanState, CoordState, SequenceState]


def _mini_init(node: Node) -> MiniState:
    body = node.body
    assert isinstance(body, MiniGameBody)
    params = body.params
    if isinstance(params, BiolinkParams):
        x, y = params.start_cell()
        return BiolinkState(x, y)
    if isinstance(params, ScanParams):
        return ScanState()
    if isinstance(params, CoordParams):
        return CoordState()
    return SequenceState()


# ---------------------------------------------------------------------------
# Session


@dataclass
class Session:
    graph: StoryGraph
    current: str
    flags: frozenset[str]
    inventory: dict[str, int]
    meters: dict[str, int]
    page: int
    mini: MiniState | None
    seed: int
    event_count: int
    finished: str | None

    @property
    def node(self) -> Node:
        return self.graph.nodes[self.current]


def new_session(graph: StoryGraph, seed: int = 0) -> Session:
    session = Session(
        graph=graph,
        current=graph.start,
        flags=frozenset(),
        inventory={},
        meters={m.name: m.init for m in graph.meters},
        page=0,
        mini=None,
        seed=seed,
        event_count=0,
        finished=None,
    )
    start = graph.nodes[graph.start]
    if start.kind is NodeKind.MINIGAME:
        session.mini = _mini_init(start)
    return session


def _clone(session: Session) -> Session:
    return Session(
        graph=session.graph,
        current=session.current,
        flags=session.flags,
        inventory=dict(session.inventory),
        meters=dict(session.meters),
        page=session.page,
        mini=session.mini,
        seed=session.seed,
        event_count=session.event_count,
        finished=session.finished,
    )


def _clamp(value: int, meter: MeterDef) -> int:
    return max(meter.min, min(meter.max, value))


def guard_passes(session: Session, guard: Guard) -> bool:
    if guard.kind == "flag-set":
        return guard.name in session.flags
    if guard.kind == "flag-clear":
        return guard.name not in session.flags
    if guard.kind == "item-held":
        return session.inventory.get(guard.name, 0) > 0
    value = session.meters[guard.name]
    bound = guard.value or 0
    return {
        "<": value < bound,
        "<=": value <= bound,
        "=": value == bound,
        ">=": value >= bound,
        ">": value > bound,
    }[guard.op or "="]


def filtered_options(session: Session) -> list[tuple[int, ChoiceOption]]:
    """Options whose guards all pass, paired with their authored index."""
    body = session.node.body
    if not isinstance(body, ChoiceBody):
        return []
    return [
        (i, opt)
        for i, opt in enumerate(body.options)
        if all(guard_passes(session, g) for g in opt.guards)
    ]


def _apply_effects(session: Session, effects: tuple[Effect, ...]) -> None:
    for effect in effects:
        if effect.kind == "set-flag":
            session.flags = session.flags | {effect.name}
        elif effect.kind == "clear-flag":
            session.flags = session.flags - {effect.name}
        elif effect.kind == "give-item":
            session.inventory[effect.name] = session.inventory.get(effect.name, 0) + 1
        elif effect.kind == "take-item":
            # Taking removes every copy; guards only ever test presence.
            session.inventory.pop(effect.name, None)
        elif effect.kind == "meter-add":
            meter = session.graph.meter(effect.name)
            session.meters[effect.name] = _clamp(
                session.meters[effect.name] + (effect.delta or 0), meter
            )


def _enter(session: Session, target: str) -> None:
    session.current = target
    session.page = 0
    node = session.graph.nodes[target]
    session.mini = _mini_init(node) if node.kind is NodeKind.MINIGAME else None


# ---------------------------------------------------------------------------
# Mini-game update rules

_MOVE_DELTAS = {"move-n": (0, -1), "move-s": (0, 1), "move-e": (1, 0), "move-w": (-1, 0)}

BIOLINK_ACTIONS = ("move-n", "move-s", "move-e", "move-w", "grab", "wait")


def biolink_update(
    params: BiolinkParams,
    state: BiolinkState,
    meter_value: int,
    meter_def: MeterDef,
    action: str,
) -> tuple[BiolinkState, int, Outcome, list[EngineNote]]:
    """One creature command: move/grab spend `cost`, wait restores `regen`.

    The loss check (meter at or below threshold) runs before the win check, so
    a grab that both drains the link and completes the haul still fails.
    """
    notes: list[EngineNote] = []
    x, y, collected = state.x, state.y, state.collected
    meter = meter_value
    if action in _MOVE_DELTAS:
        dx, dy = _MOVE_DELTAS[action]
        nx, ny = x + dx, y + dy
        meter -= params.cost
        if 0 <= ny < len(params.grid) and 0 <= nx < len(params.grid[ny]) and params.grid[ny][nx] != "#":
            x, y = nx, ny
        else:
            notes.append(_note("blocked", "the creature balks at the obstacle"))
    elif action == "grab":
        meter -= params.cost
        if params.grid[y][x] == "T" and (x, y) not in collected:
            collected = collected | {(x, y)}
    elif action == "wait":
        meter += params.regen
    else:
        raise ValueError(f"unknown biolink action {action!r}")
    meter = _clamp(meter, meter_def)
    new_state = BiolinkState(x, y, collected)
    if meter <= params.threshold:
        notes.append(_note("control-lost", "the link slips; the creature wanders off"))
        return new_state, meter, Outcome.FAILURE, notes
    if len(collected) >= params.required_trash:
        return new_state, meter, Outcome.SUCCESS, notes
    return new_state, meter, Outcome.CONTINUE, notes


def scan_update(
    params: ScanParams, state: ScanState, x: int, y: int
) -> tuple[ScanState, Outcome, list[EngineNote]]:
    """Reveal one cell; the target wins immediately, overspending the budget loses."""
    if not (0 <= x < params.width and 0 <= y < params.height):
        return state, Outcome.CONTINUE, [_note("out-of-bounds", f"({x},{y}) is outside the sweep")]
    cell = (x, y)
    if cell in state.revealed:
        return state, Outcome.CONTINUE, [_note("already-scanned", "that spot is already mapped")]
    new_state = ScanState(state.revealed | {cell}, state.scans_used + 1)
    if cell == params.target:
        return new_state, Outcome.SUCCESS, []
    if params.budget is not None and new_state.scans_used > params.budget:
        return new_state, Outcome.FAILURE, [_note("budget-spent", "the scanner battery dies")]
    return new_state, Outcome.CONTINUE, []


def normalize_code(text: str) -> str:
    return " ".join(text.split()).upper()


def coord_update(
    params: CoordParams, state: CoordState, action: str, symbol: str | None = None
) -> tuple[CoordState, Outcome, list[EngineNote]]:
    """Keypad entry: `key` appends, `backspace` trims, `submit` compares.

    Comparison normalizes both sides (trim, collapse runs of whitespace,
    uppercase).  A mismatch clears the buffer and burns one attempt.
    """
    if action == "key":
        if symbol is None or symbol not in KEYPAD_SYMBOLS:
            return state, Outcome.CONTINUE, [_note("bad-key", f"the keypad has no {symbol!r} key")]
        if symbol == "⏎":
            return coord_update(params, state, "submit")
        if len(state.buffer) >= COORD_BUFFER_CAP:
            return state, Outcome.CONTINUE, [_note("buffer-full", "the readout is full")]
        return CoordState(state.buffer + symbol, state.attempts_used), Outcome.CONTINUE, []
    if action == "backspace":
        return CoordState(state.buffer[:-1], state.attempts_used), Outcome.CONTINUE, []
    if action == "submit":
        if normalize_code(state.buffer) == normalize_code(params.expected):
            return state, Outcome.SUCCESS, []
        new_state = CoordState("", state.attempts_used + 1)
        notes = [_note("wrong-code", "the console rejects the entry")]
        if params.max_attempts is not None and new_state.attempts_used >= params.max_attempts:
            return new_state, Outcome.FAILURE, notes
        return new_state, Outcome.CONTINUE, notes
    raise ValueError(f"unknown coord action {action!r}")


def sequence_update(
    params: SequenceParams, state: SequenceState, step_id: str, channel: Channel
) -> tuple[SequenceState, Outcome, list[EngineNote]]:
    """Exact (step, channel) match advances; anything else known is "not yet".

    This mini-game has no failure outcome; its failure edge exists only for
    authored graph shape.
    """
    if not any(sid == step_id for sid, _ in params.steps):
        return state, Outcome.CONTINUE, [_note("unknown-step", "nothing here responds to that")]
    expected_id, expected_chan = params.steps[state.next_step]
    if step_id == expected_id and channel is expected_chan:
        new_state = SequenceState(state.next_step + 1)
        if new_state.next_step >= len(params.steps):
            return new_state, Outcome.SUCCESS, []
        return new_state, Outcome.CONTINUE, []
    return state, Outcome.CONTINUE, [_note("not-yet", "that is not the next move")]


# ---------------------------------------------------------------------------
# The transition function


def apply_event(session: Session, event: Event) -> tuple[Session, list[EngineNote]]:
    """Apply one player event; returns (successor, notes).

    Raises SessionFinishedError once an ending was acknowledged.  Rejected
    events (see REJECTED_NOTE_CODES) return the session unchanged.
    """
    if session.finished is not None:
        raise SessionFinishedError(f"session already finished at {session.finished!r}")
    node = session.node
    if node.channel is not Channel.ANY and event.channel is not node.channel:
        return session, [
            _note("wrong-channel", f"this step only listens on the {node.channel.value} channel")
        ]
    payload = event.payload
    body = node.body

    if isinstance(body, NarrationBody):
        if not isinstance(payload, Advance):
            return session, [_bad_event(node, payload)]
        result = _clone(session)
        if session.page + 1 < len(body.pages):
            result.page = session.page + 1
        else:
            _apply_effects(result, body.effects)
            _enter(result, body.next)
        result.event_count += 1
        return result, []

    if isinstance(body, ChoiceBody):
        if not isinstance(payload, Choose):
            return session, [_bad_event(node, payload)]
        options = filtered_options(session)
        if not (0 <= payload.index < len(options)):
            return session, [_note("bad-choice", f"there is no option {payload.index}")]
        _, option = options[payload.index]
        result = _clone(session)
        _apply_effects(result, option.effects)
        _enter(result, option.target)
        result.event_count += 1
        return result, []

    if isinstance(body, EndingBody):
        if not isinstance(payload, Ack):
            return session, [_bad_event(node, payload)]
        result = _clone(session)
        result.finished = node.id
        result.event_count += 1
        return result, []

    return _apply_mini(session, node, body, event)


def _bad_event(node: Node, payload: Payload) -> EngineNote:
    return _note(
        "bad-event",
        f"a {node.kind.value} node does not take {type(payload).__name__.lower()}",
    )


def _apply_mini(
    session: Session, node: Node, body: MiniGameBody, event: Event
) -> tuple[Session, list[EngineNote]]:
    params = body.params
    state = session.mini
    payload = event.payload
    meters_delta: dict[str, int] = {}

    if isinstance(params, BiolinkParams):
        if not (isinstance(payload, Mini) and payload.action in BIOLINK_ACTIONS):
            return session, [_bad_event(node, payload)]
        assert isinstance(state, BiolinkState)
        meter_def = session.graph.meter(params.meter)
        new_state, new_meter, outcome, notes = biolink_update(
            params, state, session.meters[params.meter], meter_def, payload.action
        )
        meters_delta[params.meter] = new_meter
    elif isinstance(params, ScanParams):
        if not (
            isinstance(payload, Mini)
            and payload.action == "scan"
            and payload.x is not None
            and payload.y is not None
        ):
            return session, [_bad_event(node, payload)]
        assert isinstance(state, ScanState)
        new_state, outcome, notes = scan_update(params, state, payload.x, payload.y)
    elif isinstance(params, CoordParams):
        assert isinstance(state, CoordState)
        if isinstance(payload, Key):
            new_state, outcome, notes = coord_update(params, state, "key", payload.symbol)
        elif isinstance(payload, Mini) and payload.action in ("submit", "backspace"):
            new_state, outcome, notes = coord_update(params, state, payload.action)
        else:
            return session, [_bad_event(node, payload)]
    else:
        assert isinstance(params, SequenceParams)
        if not (isinstance(payload, Mini) and payload.action == "step" and payload.step):
            return session, [_bad_event(node, payload)]
        assert isinstance(state, SequenceState)
        new_state, outcome, notes = sequence_update(params, state, payload.step, event.channel)

    if any(n.code in REJECTED_NOTE_CODES for n in notes):
        return session, notes

    result = _clone(session)
    result.mini = new_state
    for name, value in meters_delta.items():
        result.meters[name] = value
    if outcome is Outcome.SUCCESS:
        _enter(result, body.success)
    elif outcome is Outcome.FAILURE:
        _enter(result, body.failure)
    result.event_count += 1
    return result, notes


# ---------------------------------------------------------------------------
# Views


@dataclass
class View:
    """Everything a player may see; guards and hidden puzzle data stay out."""

    node: str
    kind: str
    channel: str
    meters: dict[str, int]
    finished: str | None = None
    text: str | None = None
    page: int | None = None
    pages: int | None = None
    prompt: str | None = None
    options: list[dict[str, Any]] | None = None
    game: str | None = None
    mini: dict[str, Any] | None = None
    category: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "node": self.node,
            "kind": self.kind,
            "channel": self.channel,
            "meters": dict(self.meters),
            "finished": self.finished,
            "text": self.text,
            "page": self.page,
            "pages": self.pages,
            "prompt": self.prompt,
            "options": self.options,
            "game": self.game,
            "mini": self.mini,
            "category": self.category,
        }


_GAME_PROMPTS = {
    "biolink": "Steady the link and guide the creature.",
    "scan": "Sweep the area and scan anything suspicious.",
    "coord": "Key in the coordinates and confirm.",
    "sequence": "Work the controls in the right order.",
}


def view(session: Session) -> View:
    node = session.node
    body = node.body
    v = View(
        node=node.id,
        kind=node.kind.value,
        channel=node.channel.value,
        meters=dict(session.meters),
        finished=session.finished,
    )
    if isinstance(body, NarrationBody):
        v.text = body.pages[session.page]
        v.page = session.page
        v.pages = len(body.pages)
    elif isinstance(body, ChoiceBody):
        v.prompt = body.prompt
        v.options = [
            {"index": shown, "source": source, "label": opt.label}
            for shown, (source, opt) in enumerate(filtered_options(session))
        ]
    elif isinstance(body, EndingBody):
        v.text = body.text
        v.category = body.category
    else:
        v.game = body.game
        v.text = _GAME_PROMPTS[body.game]
        v.mini = _mini_view(body, session)
    return v


def _mini_view(body: MiniGameBody, session: Session) -> dict[str, Any]:
    params = body.params
    state = session.mini
    if isinstance(params, BiolinkParams):
        assert isinstance(state, BiolinkState)
        cells = []
        for y, row in enumerate(params.grid):
            for x, cell in enumerate(row):
                if max(abs(x - state.x), abs(y - state.y)) > params.visibility:
                    continue
                shown = cell
                if cell == "S" or (cell == "T" and (x, y) in state.collected):
                    shown = "."
                cells.append({"x": x, "y": y, "cell": shown})
        return {
            "creature": params.creature,
            "position": [state.x, state.y],
            "visibility": params.visibility,
            "cells": cells,
            "collected": len(state.collected),
            "required": params.required_trash,
            "meter": params.meter,
        }
    if isinstance(params, ScanParams):
        assert isinstance(state, ScanState)
        decoys = set(params.decoys)
        revealed = [
            {"x": x, "y": y, "marker": "decoy" if (x, y) in decoys else "empty"}
            for x, y in sorted(state.revealed, key=lambda c: (c[1], c[0]))
        ]
        return {
            "width": params.width,
            "height": params.height,
            "revealed": revealed,
            "scans_used": state.scans_used,
            "budget": params.budget,
        }
    if isinstance(params, CoordParams):
        assert isinstance(state, CoordState)
        return {
            "masked": "•" * len(state.buffer),
            "attempts_used": state.attempts_used,
            "max_attempts": params.max_attempts,
        }
    assert isinstance(state, SequenceState)
    return {
        "available": sorted({sid for sid, _ in params.steps}),
        "done": state.next_step,
        "total": len(params.steps),
    }


# ---------------------------------------------------------------------------
# Save / restore


def _mini_to_json(state: MiniState | None) -> dict[str, Any] | None:
    if state is None:
        return None
    if isinstance(state, BiolinkState):
        return {
            "kind": "biolink",
            "x": state.x,
            "y": state.y,
            "collected": [list(c) for c in sorted(state.collected)],
        }
    if isinstance(state, ScanState):
        return {
            "kind": "scan",
            "revealed": [list(c) for c in sorted(state.revealed)],
            "scans_used": state.scans_used,
        }
    if isinstance(state, CoordState):
        return {"kind": "coord", "buffer": state.buffer, "attempts_used": state.attempts_used}
    return {"kind": "sequence", "next_step": state.next_step}


def save(session: Session) -> bytes:
    """Serialize the session (minus the graph) as sorted-key UTF-8 JSON."""
    inventory: list[str] = []
    for name in sorted(session.inventory):
        inventory.extend([name] * session.inventory[name])
    doc = {
        "version": SAVE_VERSION,
        "story_hash": story_hash(session.graph),
        "node": session.current,
        "flags": sorted(session.flags),
        "inventory": inventory,
        "meters": dict(session.meters),
        "page": session.page,
        "mini": _mini_to_json(session.mini),
        "seed": session.seed,
        "event_count": session.event_count,
        "finished": session.finished,
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False).encode("utf-8")


def _bad_save(reason: str) -> MalformedSaveError:
    return MalformedSaveError(f"save rejected: {reason}")


def _require(doc: dict, key: str, kinds: type | tuple, reason: str) -> Any:
    if key not in doc:
        raise _bad_save(f"missing field {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise _bad_save(f"field {key!r} {reason}")
    return value


def _mini_from_json(doc: Any, node: Node) -> MiniState:
    if not isinstance(doc, dict):
        raise _bad_save("mini state must be an object")
    body = node.body
    assert isinstance(body, MiniGameBody)
    kind = doc.get("kind")
    if kind != body.game:
        raise _bad_save(f"mini state kind {kind!r} does not match node {node.id!r}")
    params = body.params
    if isinstance(params, BiolinkParams):
        x = _require(doc, "x", int, "must be an integer")
        y = _require(doc, "y", int, "must be an integer")
        if not (0 <= y < len(params.grid) and 0 <= x < len(params.grid[y])):
            raise _bad_save("creature position out of bounds")
        if params.grid[y][x] == "#":
            raise _bad_save("creature position inside a wall")
        raw = _require(doc, "collected", list, "must be an array")
        trash = set(params.trash_cells())
        collected = set()
        for entry in raw:
            if not (isinstance(entry, list) and len(entry) == 2):
                raise _bad_save("collected entries are [x, y]")
            cell = (entry[0], entry[1])
            if cell not in trash:
                raise _bad_save(f"collected cell {cell} is not a trash cell")
            collected.add(cell)
        return BiolinkState(x, y, frozenset(collected))
    if isinstance(params, ScanParams):
        raw = _require(doc, "revealed", list, "must be an array")
        revealed = set()
        for entry in raw:
            if not (isinstance(entry, list) and len(entry) == 2):
                raise _bad_save("revealed entries are [x, y]")
            x, y = entry
            if not (isinstance(x, int) and isinstance(y, int)):
                raise _bad_save("revealed entries are [x, y]")
            if not (0 <= x < params.width and 0 <= y < params.height):
                raise _bad_save("revealed cell out of bounds")
            revealed.add((x, y))
        scans_used = _require(doc, "scans_used", int, "must be an integer")
        if scans_used < 0:
            raise _bad_save("scans_used must be >= 0")
        return ScanState(frozenset(revealed), scans_used)
    if isinstance(params, CoordParams):
        buffer = _require(doc, "buffer", str, "must be a string")
        if len(buffer) > COORD_BUFFER_CAP:
            raise _bad_save("buffer exceeds the keypad cap")
        attempts = _require(doc, "attempts_used", int, "must be an integer")
        if attempts < 0:
            raise _bad_save("attempts_used must be >= 0")
        return CoordState(buffer, attempts)
    assert isinstance(params, SequenceParams)
    next_step = _require(doc, "next_step", int, "must be an integer")
    if not (0 <= next_step < len(params.steps)):
        raise _bad_save("next_step outside the step list")
    return SequenceState(next_step)


def restore(graph: StoryGraph, data: bytes | str) -> Session:
    """Rebuild a session from `save` output against the graph it came from."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError:
            raise _bad_save("not UTF-8") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise _bad_save(f"not JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise _bad_save("top level must be an object")
    version = _require(doc, "version", int, "must be an integer")
    if version != SAVE_VERSION:
        raise UnsupportedVersionError(f"save version {version} is not supported")
    declared_hash = _require(doc, "story_hash", str, "must be a string")
    if declared_hash != story_hash(graph):
        raise HashMismatchError("save belongs to a different story")

    node_id = _require(doc, "node", str, "must be a string")
    if node_id not in graph.nodes:
        raise _bad_save(f"unknown node {node_id!r}")
    node = graph.nodes[node_id]

    flags = _require(doc, "flags", list, "must be an array")
    declared_flags = set(graph.flags)
    for flag in flags:
        if not isinstance(flag, str) or flag not in declared_flags:
            raise _bad_save(f"unknown flag {flag!r}")

    raw_inventory = _require(doc, "inventory", list, "must be an array")
    declared_items = {i.name for i in graph.items}
    inventory: dict[str, int] = {}
    for item in raw_inventory:
        if not isinstance(item, str) or item not in declared_items:
            raise _bad_save(f"unknown item {item!r}")
        inventory[item] = inventory.get(item, 0) + 1

    raw_meters = _require(doc, "meters", dict, "must be an object")
    meters: dict[str, int] = {}
    for meter_def in graph.meters:
        if meter_def.name not in raw_meters:
            raise _bad_save(f"missing meter {meter_def.name!r}")
        value = raw_meters[meter_def.name]
        if isinstance(value, bool) or not isinstance(value, int):
            raise _bad_save(f"meter {meter_def.name!r} must be an integer")
        if not (meter_def.min <= value <= meter_def.max):
            raise _bad_save(f"meter {meter_def.name!r} out of bounds")
        meters[meter_def.name] = value
    if set(raw_meters) - {m.name for m in graph.meters}:
        raise _bad_save("save carries undeclared meters")

    page = _require(doc, "page", int, "must be an integer")
    if isinstance(node.body, NarrationBody):
        if not (0 <= page < len(node.body.pages)):
            raise _bad_save("page cursor outside the narration")
    elif page != 0:
        raise _bad_save("page cursor on a non-narration node")

    seed = _require(doc, "seed", int, "must be an integer")
    event_count = _require(doc, "event_count", int, "must be an integer")
    if event_count < 0:
        raise _bad_save("event_count must be >= 0")

    finished = doc.get("finished")
    if finished is not None:
        if not isinstance(finished, str):
            raise _bad_save("finished must be null or an ending id")
        if finished != node_id or node.kind is not NodeKind.ENDING:
            raise _bad_save("finished does not name the current ending")

    mini_doc = doc.get("mini")
    if node.kind is NodeKind.MINIGAME:
        if mini_doc is None:
            raise _bad_save("mini state missing for a mini-game node")
        mini: MiniState | None = _mini_from_json(mini_doc, node)
    else:
        if mini_doc is not None:
            raise _bad_save("mini state present on a non-mini-game node")
        mini = None

    return Session(
        graph=graph,
        current=node_id,
        flags=frozenset(flags),
        inventory=inventory,
        meters=meters,
        page=page,
        mini=mini,
        seed=seed,
        event_count=event_count,
        finished=finished,
    )


# ---------------------------------------------------------------------------
# Wire form of events

_PAYLOAD_TYPES = ("advance", "choose", "key", "mini", "ack")


def event_to_json(event: Event) -> dict[str, Any]:
    doc: dict[str, Any] = {"channel": event.channel.value}
    payload = event.payload
    if isinstance(payload, Advance):
        doc["type"] = "advance"
    elif isinstance(payload, Choose):
        doc["type"] = "choose"
        doc["index"] = payload.index
    elif isinstance(payload, Key):
        doc["type"] = "key"
        doc["symbol"] = payload.symbol
    elif isinstance(payload, Mini):
        doc["type"] = "mini"
        doc["action"] = payload.action
        if payload.x is not None:
            doc["x"] = payload.x
        if payload.y is not None:
            doc["y"] = payload.y
        if payload.step is not None:
            doc["step"] = payload.step
    else:
        doc["type"] = "ack"
    return doc


def event_from_json(doc: Any) -> Event:
    """Parse a wire event; raises MalformedInputError on anything off-shape."""
    if not isinstance(doc, dict):
        raise MalformedInputError("event must be an object")
    channel = doc.get("channel")
    if channel not in (Channel.TOUCH.value, Channel.HANDSET.value):
        raise MalformedInputError("event channel must be 'touch' or 'handset'")
    etype = doc.get("type")
    if etype not in _PAYLOAD_TYPES:
        raise MalformedInputError(f"unknown event type {etype!r}")
    payload: Payload
    if etype == "advance":
        payload = Advance()
    elif etype == "ack":
        payload = Ack()
    elif etype == "choose":
        index = doc.get("index")
        if isinstance(index, bool) or not isinstance(index, int):
            raise MalformedInputError("choose needs an integer 'index'")
        payload = Choose(index)
    elif etype == "key":
        symbol = doc.get("symbol")
        if not isinstance(symbol, str) or len(symbol) != 1:
            raise MalformedInputError("key needs a single-character 'symbol'")
        payload = Key(symbol)
    else:
        action = doc.get("action")
        if not isinstance(action, str):
            raise MalformedInputError("mini needs an 'action'")
        x, y, step = doc.get("x"), doc.get("y"), doc.get("step")
        for name, value in (("x", x), ("y", y)):
            if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
                raise MalformedInputError(f"mini '{name}' must be an integer")
        if step is not None and not isinstance(step, str):
            raise MalformedInputError("mini 'step' must be a string")
        payload = Mini(action, x=x, y=y, step=step)
    return Event(Channel(channel), payload)
