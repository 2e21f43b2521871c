"""Static analyses over compiled graphs.

Reachability runs over an abstract state (node, flags, item presence); meters
are deliberately ignored there because they can oscillate without bound, so a
meter guard is treated as always passable.  Meter-dependent feasibility is
handled exactly inside biolink_feasible, whose state space is finite.

Trace synthesis plans over the same abstraction with per-edge event-count
estimates, then replays each candidate through the real runtime, recomputing
mini-game witnesses against live state; a candidate that fails to replay is
discarded and the next cheapest is tried.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass
from typing import Any, Iterator

from .errors import StateBudgetExceededError, UnreachableError
from .model import (
    BiolinkParams,
    Channel,
    ChoiceBody,
    CoordParams,
    Guard,
    Effect,
    MeterDef,
    MiniGameBody,
    NarrationBody,
    Node,
    ScanParams,
    SequenceParams,
    StoryGraph,
    edge_targets,
)
from .runtime import (
    BIOLINK_ACTIONS,
    KEYPAD_SYMBOLS,
    REJECTED_NOTE_CODES,
    Advance,
    BiolinkState,
    Choose,
    Event,
    Key,
    Mini,
    Outcome,
    apply_event,
    biolink_update,
    event_to_json,
    filtered_options,
    new_session,
    normalize_code,
)

DEFAULT_STATE_BUDGET = 10**6

# How many times one abstract state may be re-expanded while planning a trace,
# and how many fully planned candidates may fail concretization before giving up.
_REVISIT_CAP = 4
_CONCRETIZE_CAP = 16


@dataclass(frozen=True)
class AbstractState:
    node: str
    flags: frozenset[str]
    items: frozenset[str]


@dataclass(frozen=True)
class TraceStep:
    node: str
    event: Event


# ---------------------------------------------------------------------------
# Reachability


def overapprox_reachable(graph: StoryGraph) -> set[str]:
    """Plain graph walk from start, ignoring guards and meters entirely."""
    seen = {graph.start}
    queue = deque([graph.start])
    while queue:
        nid = queue.popleft()
        for target in edge_targets(graph.nodes[nid]):
            if target not in seen:
                seen.add(target)
                queue.append(target)
    return seen


def _abs_guard(guard: Guard, state: AbstractState) -> bool:
    if guard.kind == "flag-set":
        return guard.name in state.flags
    if guard.kind == "flag-clear":
        return guard.name not in state.flags
    if guard.kind == "item-held":
        return guard.name in state.items
    return True  # meter-cmp: meters are outside the abstraction


def _abs_effects(
    flags: frozenset[str], items: frozenset[str], effects: tuple[Effect, ...]
) -> tuple[frozenset[str], frozenset[str]]:
    for effect in effects:
        if effect.kind == "set-flag":
            flags = flags | {effect.name}
        elif effect.kind == "clear-flag":
            flags = flags - {effect.name}
        elif effect.kind == "give-item":
            items = items | {effect.name}
        elif effect.kind == "take-item":
            # Runtime take removes every copy, so presence-tracking is exact.
            items = items - {effect.name}
    return flags, items


def _abs_successors(graph: StoryGraph, state: AbstractState) -> Iterator[AbstractState]:
    body = graph.nodes[state.node].body
    if isinstance(body, NarrationBody):
        flags, items = _abs_effects(state.flags, state.items, body.effects)
        yield AbstractState(body.next, flags, items)
    elif isinstance(body, ChoiceBody):
        for option in body.options:
            if all(_abs_guard(g, state) for g in option.guards):
                flags, items = _abs_effects(state.flags, state.items, option.effects)
                yield AbstractState(option.target, flags, items)
    elif isinstance(body, MiniGameBody):
        yield AbstractState(body.success, state.flags, state.items)
        yield AbstractState(body.failure, state.flags, state.items)


def exact_reachable(graph: StoryGraph, budget: int | None = None) -> set[str]:
    """Nodes appearing in any state reachable over (node, flags, item presence).

    Mini-games contribute both outcome edges; meter guards always pass.  Raises
    StateBudgetExceededError past `budget` explored states (default 10^6).
    """
    limit = DEFAULT_STATE_BUDGET if budget is None else budget
    start = AbstractState(graph.start, frozenset(), frozenset())
    seen = {start}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for succ in _abs_successors(graph, state):
            if succ not in seen:
                seen.add(succ)
                if len(seen) > limit:
                    raise StateBudgetExceededError(limit)
                queue.append(succ)
    return {state.node for state in seen}


def ending_coverage(graph: StoryGraph, budget: int | None = None) -> dict[str, str]:
    reachable = exact_reachable(graph, budget)
    return {
        eid: "reachable" if eid in reachable else "unreachable" for eid in graph.ending_ids()
    }


def dead_nodes(graph: StoryGraph, budget: int | None = None) -> set[str]:
    return set(graph.nodes) - exact_reachable(graph, budget)


# ---------------------------------------------------------------------------
# Biolink feasibility

_BiolinkKey = tuple[int, int, frozenset, int]


@dataclass
class Feasibility:
    status: str  # "winnable" | "lossy-only" | "unwinnable"
    witness: list[str] | None = None
    failure_witness: list[str] | None = None

    @property
    def winnable(self) -> bool:
        return self.status == "winnable"


def biolink_feasible(
    params: BiolinkParams, meter_def: MeterDef, start_value: int | None = None
) -> Feasibility:
    """Exhaustive search over (position, collected, meter).

    Winnable carries a shortest winning action list; failure_witness (when a
    losing line exists) is a shortest losing one, used for trace synthesis.
    Unwinnable means no win exists but play can dodge failure forever;
    lossy-only means every line eventually fails.
    """
    if params.required_trash <= 0:
        return Feasibility("winnable", witness=[], failure_witness=None)
    sx, sy = params.start_cell()
    init = meter_def.init if start_value is None else start_value
    init = max(meter_def.min, min(meter_def.max, init))
    start: _BiolinkKey = (sx, sy, frozenset(), init)

    parent: dict[_BiolinkKey, tuple[_BiolinkKey, str]] = {}
    adjacency: dict[_BiolinkKey, list[_BiolinkKey]] = {}
    witness: list[str] | None = None
    failure_witness: list[str] | None = None
    seen = {start}
    queue = deque([start])

    def unwind(key: _BiolinkKey, last: str) -> list[str]:
        actions = [last]
        while key in parent:
            key, action = parent[key]
            actions.append(action)
        actions.reverse()
        return actions

    while queue and (witness is None or failure_witness is None):
        key = queue.popleft()
        x, y, collected, meter = key
        succs: list[_BiolinkKey] = []
        for action in BIOLINK_ACTIONS:
            state, new_meter, outcome, _ = biolink_update(
                params, BiolinkState(x, y, collected), meter, meter_def, action
            )
            if outcome is Outcome.SUCCESS:
                if witness is None:
                    witness = unwind(key, action)
                continue
            if outcome is Outcome.FAILURE:
                if failure_witness is None:
                    failure_witness = unwind(key, action)
                continue
            succ: _BiolinkKey = (state.x, state.y, state.collected, new_meter)
            succs.append(succ)
            if succ not in seen:
                seen.add(succ)
                parent[succ] = (key, action)
                queue.append(succ)
        adjacency[key] = succs

    if witness is not None:
        return Feasibility("winnable", witness=witness, failure_witness=failure_witness)
    if _has_cycle(start, adjacency):
        return Feasibility("unwinnable", failure_witness=failure_witness)
    return Feasibility("lossy-only", failure_witness=failure_witness)


def _has_cycle(start: _BiolinkKey, adjacency: dict[_BiolinkKey, list[_BiolinkKey]]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[_BiolinkKey, int] = {}
    stack: list[tuple[_BiolinkKey, int]] = [(start, 0)]
    color[start] = GRAY
    while stack:
        key, idx = stack.pop()
        succs = adjacency.get(key, [])
        if idx < len(succs):
            stack.append((key, idx + 1))
            succ = succs[idx]
            c = color.get(succ, WHITE)
            if c == GRAY:
                return True
            if c == WHITE:
                color[succ] = GRAY
                stack.append((succ, 0))
        else:
            color[key] = BLACK
    return False


# ---------------------------------------------------------------------------
# Trace synthesis

_Edge = tuple  # ("narr",) | ("choose", authored_index) | ("mini", "success"|"failure")


def _event_channel(node: Node, preferred: Channel) -> Channel:
    return preferred if node.channel is Channel.ANY else node.channel


def _typeable(expected: str) -> bool:
    return len(expected) <= 32 and all(c in KEYPAD_SYMBOLS and c != "⏎" for c in expected)


class _Planner:
    """Caches per-node mini-game cost estimates for the path search."""

    def __init__(self, graph: StoryGraph):
        self.graph = graph
        self._feas: dict[str, Feasibility] = {}

    def feas(self, node: Node) -> Feasibility:
        if node.id not in self._feas:
            body = node.body
            assert isinstance(body, MiniGameBody) and isinstance(body.params, BiolinkParams)
            self._feas[node.id] = biolink_feasible(
                body.params, self.graph.meter(body.params.meter)
            )
        return self._feas[node.id]

    def mini_cost(self, node: Node, success: bool) -> int | None:
        body = node.body
        assert isinstance(body, MiniGameBody)
        params = body.params
        if isinstance(params, BiolinkParams):
            feas = self.feas(node)
            if success:
                return max(1, len(feas.witness)) if feas.winnable else None
            return len(feas.failure_witness) if feas.failure_witness is not None else None
        if isinstance(params, ScanParams):
            if success:
                return 1
            if params.budget is None:
                return None
            spare = params.width * params.height - 1
            return params.budget + 1 if spare >= params.budget + 1 else None
        if isinstance(params, CoordParams):
            if success:
                return len(params.expected) + 1 if _typeable(params.expected) else None
            if params.max_attempts is None:
                return None
            per = 1 if normalize_code(params.expected) != "" else 2
            return per * params.max_attempts
        assert isinstance(params, SequenceParams)
        if not success:
            return None  # this mini-game never fails
        ok = node.channel is Channel.ANY or all(
            chan is node.channel for _, chan in params.steps
        )
        return len(params.steps) if ok else None

    def edges(self, state: AbstractState) -> Iterator[tuple[_Edge, int, AbstractState]]:
        node = self.graph.nodes[state.node]
        body = node.body
        if isinstance(body, NarrationBody):
            flags, items = _abs_effects(state.flags, state.items, body.effects)
            yield ("narr",), len(body.pages), AbstractState(body.next, flags, items)
        elif isinstance(body, ChoiceBody):
            for i, option in enumerate(body.options):
                if all(_abs_guard(g, state) for g in option.guards):
                    flags, items = _abs_effects(state.flags, state.items, option.effects)
                    yield ("choose", i), 1, AbstractState(option.target, flags, items)
        elif isinstance(body, MiniGameBody):
            for outcome, target in (("success", body.success), ("failure", body.failure)):
                cost = self.mini_cost(node, outcome == "success")
                if cost is not None:
                    yield ("mini", outcome), cost, AbstractState(target, state.flags, state.items)


def _mini_events(graph: StoryGraph, node: Node, session, success: bool) -> list[Event] | None:
    """Concrete event list driving this mini-game to the requested outcome,
    computed against the live session (the meter may differ from init)."""
    body = node.body
    assert isinstance(body, MiniGameBody)
    params = body.params
    if isinstance(params, BiolinkParams):
        meter_def = graph.meter(params.meter)
        live = session.meters[params.meter]
        feas = biolink_feasible(params, meter_def, start_value=live)
        chan = _event_channel(node, Channel.HANDSET)
        if success:
            if not feas.winnable:
                return None
            actions = feas.witness or []
            if not actions:
                actions = _single_winning_action(params, meter_def, live)
                if actions is None:
                    return None
            return [Event(chan, Mini(a)) for a in actions]
        if feas.failure_witness is None:
            return None
        return [Event(chan, Mini(a)) for a in feas.failure_witness]
    if isinstance(params, ScanParams):
        chan = _event_channel(node, Channel.HANDSET)
        if success:
            x, y = params.target
            return [Event(chan, Mini("scan", x=x, y=y))]
        if params.budget is None:
            return None
        cells = [
            (x, y)
            for y in range(params.height)
            for x in range(params.width)
            if (x, y) != params.target
        ]
        if len(cells) < params.budget + 1:
            return None
        return [Event(chan, Mini("scan", x=x, y=y)) for x, y in cells[: params.budget + 1]]
    if isinstance(params, CoordParams):
        chan = _event_channel(node, Channel.HANDSET)
        if success:
            if not _typeable(params.expected):
                return None
            keys = [Event(chan, Key(c)) for c in params.expected]
            return keys + [Event(chan, Mini("submit"))]
        if params.max_attempts is None:
            return None
        if normalize_code(params.expected) != "":
            attempt = [Event(chan, Mini("submit"))]
        else:
            attempt = [Event(chan, Key("0")), Event(chan, Mini("submit"))]
        return attempt * params.max_attempts
    assert isinstance(params, SequenceParams)
    if not success:
        return None
    events = []
    for step_id, step_chan in params.steps:
        chan = _event_channel(node, step_chan)
        if chan is not step_chan:
            return None
        events.append(Event(chan, Mini("step", step=step_id)))
    return events


def _single_winning_action(
    params: BiolinkParams, meter_def: MeterDef, live: int
) -> list[str] | None:
    """A zero-trash mini-game still needs one accepted action to resolve."""
    sx, sy = params.start_cell()
    for action in BIOLINK_ACTIONS:
        _, _, outcome, _ = biolink_update(
            params, BiolinkState(sx, sy), live, meter_def, action
        )
        if outcome is Outcome.SUCCESS:
            return [action]
    return None


def _concretize(graph: StoryGraph, path: tuple, target: str) -> list[TraceStep] | None:
    session = new_session(graph, seed=0)
    steps: list[TraceStep] = []
    for node_id, edge in path:
        if session.current != node_id:
            return None
        node = graph.nodes[node_id]
        if edge[0] == "narr":
            body = node.body
            assert isinstance(body, NarrationBody)
            events = [
                Event(_event_channel(node, Channel.TOUCH), Advance())
                for _ in range(len(body.pages))
            ]
        elif edge[0] == "choose":
            shown = None
            for index, (source, _) in enumerate(filtered_options(session)):
                if source == edge[1]:
                    shown = index
                    break
            if shown is None:
                return None
            events = [Event(_event_channel(node, Channel.TOUCH), Choose(shown))]
        else:
            maybe = _mini_events(graph, node, session, success=edge[1] == "success")
            if maybe is None:
                return None
            events = maybe
        for event in events:
            steps.append(TraceStep(session.current, event))
            session, notes = apply_event(session, event)
            if any(n.code in REJECTED_NOTE_CODES for n in notes):
                return None
    return steps if session.current == target else None


def trace_to(graph: StoryGraph, target: str, budget: int | None = None) -> list[TraceStep]:
    """A replayable event trace from a fresh session to `target`.

    Plans cheapest-first over the abstraction, so the result is shortest up to
    the mini-game estimates; every returned trace is verified by replay.
    Raises UnreachableError when no candidate concretizes.
    """
    if target not in graph.nodes:
        raise UnreachableError(target)
    if target == graph.start:
        return []
    if target not in overapprox_reachable(graph):
        raise UnreachableError(target)
    limit = DEFAULT_STATE_BUDGET if budget is None else budget
    planner = _Planner(graph)
    start = AbstractState(graph.start, frozenset(), frozenset())
    counter = 0
    heap: list[tuple[int, int, AbstractState, tuple]] = [(0, 0, start, ())]
    visits: dict[AbstractState, int] = {}
    attempts = 0
    pops = 0
    while heap:
        cost, _, state, path = heapq.heappop(heap)
        pops += 1
        if pops > limit:
            raise StateBudgetExceededError(limit)
        if state.node == target:
            trace = _concretize(graph, path, target)
            if trace is not None:
                return trace
            attempts += 1
            if attempts >= _CONCRETIZE_CAP:
                break
            continue
        visits[state] = visits.get(state, 0) + 1
        if visits[state] > _REVISIT_CAP:
            continue
        for edge, delta, succ in planner.edges(state):
            counter += 1
            heapq.heappush(heap, (cost + delta, counter, succ, path + ((state.node, edge),)))
    raise UnreachableError(target)


# ---------------------------------------------------------------------------
# Reports


def analysis_report(graph: StoryGraph, budget: int | None = None) -> dict[str, Any]:
    """The full report: reachable/dead nodes, ending coverage, witness traces."""
    reachable = exact_reachable(graph, budget)
    endings = {
        eid: "reachable" if eid in reachable else "unreachable" for eid in graph.ending_ids()
    }
    traces: dict[str, Any] = {}
    for eid in graph.ending_ids():
        if endings[eid] == "unreachable":
            traces[eid] = None
            continue
        try:
            trace = trace_to(graph, eid, budget)
        except UnreachableError:
            traces[eid] = None
            continue
        traces[eid] = [
            {"node": step.node, "event": event_to_json(step.event)} for step in trace
        ]
    return {
        "reachable": sorted(reachable),
        "dead": sorted(set(graph.nodes) - reachable),
        "endings": endings,
        "traces": traces,
    }


def report_to_json(report: dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_report(report: dict[str, Any]) -> str:
    lines = [f"reachable: {len(report['reachable'])} node(s)"]
    dead = report["dead"]
    lines.append("dead: none" if not dead else "dead: " + ", ".join(dead))
    lines.append("endings:")
    for eid in sorted(report["endings"]):
        status = report["endings"][eid]
        trace = report["traces"].get(eid)
        suffix = f"  (witness: {len(trace)} events)" if trace is not None else ""
        lines.append(f"  {eid}: {status}{suffix}")
    return "\n".join(lines) + "\n"


_DOT_SHAPES = {
    "narration": "box",
    "choice": "diamond",
    "minigame": "component",
    "ending": "doubleoctagon",
}


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: StoryGraph) -> str:
    """GraphViz form of the story graph for visual inspection."""
    lines = ["digraph story {", "  rankdir=LR;"]
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        kind = node.kind.value
        label = nid if not isinstance(node.body, MiniGameBody) else f"{nid} ({node.body.game})"
        lines.append(
            f"  {_dot_quote(nid)} [shape={_DOT_SHAPES[kind]} label={_dot_quote(label)}];"
        )
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        body = node.body
        if isinstance(body, NarrationBody):
            lines.append(f"  {_dot_quote(nid)} -> {_dot_quote(body.next)};")
        elif isinstance(body, ChoiceBody):
            for i, option in enumerate(body.options):
                lines.append(
                    f"  {_dot_quote(nid)} -> {_dot_quote(option.target)} [label={_dot_quote(f'opt {i}')}];"
                )
        elif isinstance(body, MiniGameBody):
            lines.append(
                f"  {_dot_quote(nid)} -> {_dot_quote(body.success)} [label=success];"
            )
            lines.append(
                f"  {_dot_quote(nid)} -> {_dot_quote(body.failure)} [label=failure style=dashed];"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"
