"""Oracles and generators shared across the suite.

The oracle functions restate engine rules from scratch rather than calling
into the engine, so agreement between the two is evidence and not tautology.
The generators build model objects directly and assert their own validity.
"""

from __future__ import annotations

import functools
import random
from collections import deque

from fuselage.model import (
    BiolinkParams,
    Channel,
    ChoiceBody,
    ChoiceOption,
    CoordParams,
    Effect,
    EndingBody,
    Guard,
    ItemDef,
    MeterDef,
    MiniGameBody,
    NarrationBody,
    Node,
    ScanParams,
    SequenceParams,
    StoryGraph,
    graph_validate,
)
from fuselage.runtime import Ack, Advance, Choose, Event, Key, Mini

# ---------------------------------------------------------------------------
# Biolink oracle: the grid-walk rules, restated

TOY_ACTIONS = ("move-n", "move-s", "move-e", "move-w", "grab", "wait")
_DELTAS = {"move-n": (0, -1), "move-s": (0, 1), "move-e": (1, 0), "move-w": (-1, 0)}


def toy_biolink_start(params: BiolinkParams) -> tuple[int, int]:
    for y, row in enumerate(params.grid):
        for x, cell in enumerate(row):
            if cell == "S":
                return x, y
    raise AssertionError("grid has no S cell")


def toy_biolink_step(
    params: BiolinkParams,
    meter_def: MeterDef,
    pos: tuple[int, int],
    collected: frozenset,
    meter: int,
    action: str,
):
    """One action: moves and grabs cost `cost` whether or not they achieve
    anything, wait restores `regen`, the meter clamps to the declared bounds,
    and after the action meter <= threshold loses before enough trash wins."""
    x, y = pos
    grid = params.grid
    if action == "wait":
        meter += params.regen
    else:
        meter -= params.cost
        if action in _DELTAS:
            dx, dy = _DELTAS[action]
            nx, ny = x + dx, y + dy
            if 0 <= ny < len(grid) and 0 <= nx < len(grid[ny]) and grid[ny][nx] != "#":
                x, y = nx, ny
        elif grid[y][x] == "T" and (x, y) not in collected:
            collected = collected | {(x, y)}
    meter = max(meter_def.min, min(meter_def.max, meter))
    if meter <= params.threshold:
        return (x, y), collected, meter, "failure"
    if len(collected) >= params.required_trash:
        return (x, y), collected, meter, "success"
    return (x, y), collected, meter, "continue"


def toy_biolink_enumerate(
    params: BiolinkParams, meter_def: MeterDef, max_len: int
) -> tuple[int | None, int | None]:
    """Shortest winning and losing sequence lengths within max_len, by
    enumerating every action sequence (memoized on state and remaining depth).
    """
    if params.required_trash <= 0:
        return 0, None
    sx, sy = toy_biolink_start(params)

    @functools.lru_cache(maxsize=None)
    def best(x: int, y: int, collected: frozenset, meter: int, depth: int):
        if depth == 0:
            return None, None
        win = loss = None
        for action in TOY_ACTIONS:
            (nx, ny), ncol, nmet, outcome = toy_biolink_step(
                params, meter_def, (x, y), collected, meter, action
            )
            if outcome == "success":
                win = 1 if win is None else min(win, 1)
            elif outcome == "failure":
                loss = 1 if loss is None else min(loss, 1)
            else:
                sub_win, sub_loss = best(nx, ny, ncol, nmet, depth - 1)
                if sub_win is not None:
                    win = sub_win + 1 if win is None else min(win, sub_win + 1)
                if sub_loss is not None:
                    loss = sub_loss + 1 if loss is None else min(loss, sub_loss + 1)
        return win, loss

    init = max(meter_def.min, min(meter_def.max, meter_def.init))
    result = best(sx, sy, frozenset(), init, max_len)
    best.cache_clear()
    return result


# ---------------------------------------------------------------------------
# Reachability oracle: a concrete little interpreter
#
# Tracks item counts (capped so the space stays finite) instead of presence,
# which is what the engine abstracts to; meter guards never appear in the
# generated corpus, so ignoring meters keeps this exact.


def toy_reachable(graph: StoryGraph, item_cap: int = 2) -> set[str]:
    def apply(flags: frozenset, items: tuple, effects) -> tuple[frozenset, tuple]:
        counts = dict(items)
        flag_set = set(flags)
        for effect in effects:
            if effect.kind == "set-flag":
                flag_set.add(effect.name)
            elif effect.kind == "clear-flag":
                flag_set.discard(effect.name)
            elif effect.kind == "give-item":
                counts[effect.name] = min(item_cap, counts.get(effect.name, 0) + 1)
            elif effect.kind == "take-item":
                counts.pop(effect.name, None)
        return frozenset(flag_set), tuple(sorted(counts.items()))

    def passes(guard: Guard, flags: frozenset, items: tuple) -> bool:
        if guard.kind == "flag-set":
            return guard.name in flags
        if guard.kind == "flag-clear":
            return guard.name not in flags
        if guard.kind == "item-held":
            return any(name == guard.name for name, _ in items)
        return True

    start = (graph.start, frozenset(), ())
    seen = {start}
    queue = deque([start])
    nodes_seen = {graph.start}
    while queue:
        nid, flags, items = queue.popleft()
        body = graph.nodes[nid].body
        succs = []
        if isinstance(body, NarrationBody):
            new_flags, new_items = apply(flags, items, body.effects)
            succs.append((body.next, new_flags, new_items))
        elif isinstance(body, ChoiceBody):
            for option in body.options:
                if all(passes(g, flags, items) for g in option.guards):
                    new_flags, new_items = apply(flags, items, option.effects)
                    succs.append((option.target, new_flags, new_items))
        elif isinstance(body, MiniGameBody):
            succs.append((body.success, flags, items))
            succs.append((body.failure, flags, items))
        for succ in succs:
            if succ not in seen:
                seen.add(succ)
                nodes_seen.add(succ[0])
                queue.append(succ)
    return nodes_seen


# ---------------------------------------------------------------------------
# Random graphs

_WORDS = (
    "gull", "tide", "spit", "crate", "buoy", "kelp", "drift", "shoal",
    "reef", "wake", "pier", "mast", "hull", "gust", "foam", "dune",
)


def _label(rng: random.Random) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 3)))


def _random_guards(rng: random.Random, flags: list[str], items: list[str]) -> tuple:
    guards = []
    for _ in range(rng.randint(0, 2)):
        roll = rng.random()
        if roll < 0.4 and flags:
            guards.append(Guard("flag-set", rng.choice(flags)))
        elif roll < 0.7 and flags:
            guards.append(Guard("flag-clear", rng.choice(flags)))
        elif items:
            guards.append(Guard("item-held", rng.choice(items)))
    return tuple(guards)


def _random_effects(
    rng: random.Random, flags: list[str], items: list[str], meters: list[str]
) -> tuple:
    effects = []
    for _ in range(rng.randint(0, 3)):
        roll = rng.random()
        if roll < 0.3 and flags:
            effects.append(Effect("set-flag", rng.choice(flags)))
        elif roll < 0.45 and flags:
            effects.append(Effect("clear-flag", rng.choice(flags)))
        elif roll < 0.7 and items:
            effects.append(Effect("give-item", rng.choice(items)))
        elif roll < 0.85 and items:
            effects.append(Effect("take-item", rng.choice(items)))
        elif meters:
            effects.append(Effect("meter-add", rng.choice(meters), rng.randint(-6, 6)))
    return tuple(effects)


def _random_biolink(rng: random.Random, meter: str) -> BiolinkParams:
    w, h = rng.randint(2, 4), rng.randint(2, 4)
    cells = [["." for _ in range(w)] for _ in range(h)]
    sx, sy = rng.randrange(w), rng.randrange(h)
    cells[sy][sx] = "S"
    spots = [(x, y) for y in range(h) for x in range(w) if (x, y) != (sx, sy)]
    rng.shuffle(spots)
    trash = spots[: rng.randint(0, min(3, len(spots)))]
    for x, y in trash:
        cells[y][x] = "T"
    for x, y in spots[len(trash):]:
        if rng.random() < 0.25:
            cells[y][x] = "#"
    return BiolinkParams(
        creature=rng.choice(_WORDS),
        grid=tuple("".join(row) for row in cells),
        meter=meter,
        required_trash=rng.randint(0, len(trash)),
        cost=rng.randint(1, 5),
        regen=rng.randint(0, 3),
        threshold=0,
        visibility=rng.randint(1, 3),
    )


def _random_scan(rng: random.Random) -> ScanParams:
    w, h = rng.randint(1, 4), rng.randint(1, 4)
    cells = [(x, y) for y in range(h) for x in range(w)]
    rng.shuffle(cells)
    target = cells[0]
    decoys = tuple(sorted(cells[1 : 1 + rng.randint(0, min(2, len(cells) - 1))]))
    budget = None if rng.random() < 0.4 else rng.randint(1, w * h + 2)
    return ScanParams(width=w, height=h, target=target, decoys=decoys, budget=budget)


def _random_coord(rng: random.Random) -> CoordParams:
    symbols = "0123456789.-NSEW "
    expected = "".join(rng.choice(symbols) for _ in range(rng.randint(1, 8)))
    attempts = None if rng.random() < 0.5 else rng.randint(1, 3)
    return CoordParams(expected=expected, max_attempts=attempts)


def _random_sequence(rng: random.Random) -> tuple[SequenceParams, Channel]:
    count = rng.randint(1, 4)
    if rng.random() < 0.5:
        chan = rng.choice([Channel.TOUCH, Channel.HANDSET])
        steps = tuple((f"s{i}", chan) for i in range(count))
        node_chan = rng.choice([chan, Channel.ANY])
    else:
        steps = tuple(
            (f"s{i}", rng.choice([Channel.TOUCH, Channel.HANDSET])) for i in range(count)
        )
        node_chan = Channel.ANY
    return SequenceParams(steps=steps), node_chan


def random_graph(
    rng: random.Random, max_nodes: int = 12, max_flags: int = 4, max_items: int = 3
) -> StoryGraph:
    """A structurally valid graph with random topology, guards, and effects.

    Meter guards are deliberately never generated (see toy_reachable)."""
    n = rng.randint(2, max_nodes)
    ids = [f"n{i}" for i in range(n)]
    flags = [f"f{i}" for i in range(rng.randint(0, max_flags))]
    items = [f"i{i}" for i in range(rng.randint(0, max_items))]
    meters = ["m0"]
    meter_def = MeterDef("m0", 0, 20, rng.randint(1, 20))

    ending_count = rng.randint(1, max(1, n // 4))
    ending_ids = set(rng.sample(ids[1:], ending_count)) if n > 1 else {ids[0]}

    nodes: dict[str, Node] = {}
    for nid in ids:
        channel = rng.choice([Channel.TOUCH, Channel.HANDSET, Channel.ANY])
        if nid in ending_ids:
            category = rng.choice(["main", "sub"])
            nodes[nid] = Node(nid, Channel.TOUCH, EndingBody(category, _label(rng)))
            continue
        roll = rng.random()
        if roll < 0.35:
            pages = tuple(_label(rng) for _ in range(rng.randint(1, 3)))
            body = NarrationBody(
                pages, rng.choice(ids), _random_effects(rng, flags, items, meters)
            )
            nodes[nid] = Node(nid, channel, body)
        elif roll < 0.7:
            options = tuple(
                ChoiceOption(
                    _label(rng),
                    rng.choice(ids),
                    _random_guards(rng, flags, items),
                    _random_effects(rng, flags, items, meters),
                )
                for _ in range(rng.randint(2, 4))
            )
            nodes[nid] = Node(nid, channel, ChoiceBody(_label(rng), options))
        else:
            game = rng.choice(["biolink", "scan", "coord", "sequence"])
            if game == "biolink":
                params = _random_biolink(rng, "m0")
                channel = rng.choice([Channel.HANDSET, Channel.ANY])
            elif game == "scan":
                params = _random_scan(rng)
                channel = rng.choice([Channel.HANDSET, Channel.ANY])
            elif game == "coord":
                params = _random_coord(rng)
            else:
                params, channel = _random_sequence(rng)
            body = MiniGameBody(params, rng.choice(ids), rng.choice(ids))
            nodes[nid] = Node(nid, channel, body)

    graph = StoryGraph(
        title=_label(rng).title(),
        start=ids[0],
        meters=(meter_def,),
        items=tuple(ItemDef(name, None) for name in items),
        flags=tuple(flags),
        nodes=nodes,
    )
    problems = [d for d in graph_validate(graph) if d.is_error]
    assert not problems, [d.render() for d in problems]
    return graph


# ---------------------------------------------------------------------------
# Random event streams


def random_event(rng: random.Random) -> Event:
    channel = rng.choice([Channel.TOUCH, Channel.HANDSET])
    roll = rng.random()
    if roll < 0.25:
        return Event(channel, Advance())
    if roll < 0.45:
        return Event(channel, Choose(rng.randint(0, 3)))
    if roll < 0.55:
        return Event(channel, Key(rng.choice("0123456789.-NSEW nsewq⏎")))
    if roll < 0.65:
        return Event(channel, Ack())
    action = rng.choice(
        ["move-n", "move-s", "move-e", "move-w", "grab", "wait", "submit", "backspace"]
    )
    if rng.random() < 0.3:
        return Event(channel, Mini("scan", x=rng.randint(0, 4), y=rng.randint(0, 4)))
    if rng.random() < 0.3:
        return Event(channel, Mini("step", step=rng.choice(["s0", "s1", "s2", "s3", "nope"])))
    return Event(channel, Mini(action))


def random_events(rng: random.Random, length: int) -> list[Event]:
    return [random_event(rng) for _ in range(length)]


# ---------------------------------------------------------------------------
# Graph -> source, for parser round trips


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _guard_src(guard: Guard) -> str:
    if guard.kind == "flag-set":
        return f"if flag {guard.name}"
    if guard.kind == "flag-clear":
        return f"if !flag {guard.name}"
    if guard.kind == "item-held":
        return f"if item {guard.name}"
    return f"if meter {guard.name} {guard.op} {guard.value}"


def _effect_src(effect: Effect) -> str:
    word = {
        "set-flag": "set",
        "clear-flag": "clear",
        "give-item": "give",
        "take-item": "take",
    }.get(effect.kind)
    if word is not None:
        return f"{word} {effect.name}"
    sign = "+" if effect.delta >= 0 else "-"
    return f"meter {effect.name} {sign} {abs(effect.delta)}"


def graph_to_source(graph: StoryGraph) -> str:
    """DSL text that should compile back to exactly this graph."""
    out = [f"story {_quote(graph.title)} start {graph.start}", ""]
    for m in graph.meters:
        out.append(f"meter {m.name} min {m.min} max {m.max} init {m.init}")
    for item in graph.items:
        label = f" {_quote(item.label)}" if item.label is not None else ""
        out.append(f"item {item.name}{label}")
    for flag in graph.flags:
        out.append(f"flag {flag}")
    for node in graph.nodes.values():
        out.append("")
        body = node.body
        if isinstance(body, NarrationBody):
            out.append(f"node {node.id} narration channel {node.channel.value} {{")
            for page in body.pages:
                out.append(f"  text {_quote(page)}")
            line = f"  next {body.next}"
            for effect in body.effects:
                line += " " + _effect_src(effect)
            out.append(line)
        elif isinstance(body, ChoiceBody):
            out.append(f"node {node.id} choice channel {node.channel.value} {{")
            out.append(f"  prompt {_quote(body.prompt)}")
            for option in body.options:
                parts = [f"  option {_quote(option.label)}"]
                parts.extend(_guard_src(g) for g in option.guards)
                parts.append(f"-> {option.target}")
                parts.extend(_effect_src(e) for e in option.effects)
                out.append(" ".join(parts))
        elif isinstance(body, EndingBody):
            out.append(f"node {node.id} ending {body.category} channel {node.channel.value} {{")
            out.append(f"  text {_quote(body.text)}")
        else:
            out.append(
                f"node {node.id} minigame {body.game} channel {node.channel.value} {{"
            )
            out.append("  params {")
            params = body.params
            if isinstance(params, BiolinkParams):
                out.append(f"    creature {_quote(params.creature)}")
                out.append(f"    grid {_quote(' / '.join(params.grid))}")
                out.append(f"    meter {params.meter}")
                out.append(f"    required-trash {params.required_trash}")
                out.append(f"    cost {params.cost}")
                out.append(f"    regen {params.regen}")
                out.append(f"    threshold {params.threshold}")
                out.append(f"    visibility {params.visibility}")
            elif isinstance(params, ScanParams):
                out.append(f"    width {params.width}")
                out.append(f"    height {params.height}")
                out.append(f"    target {_quote('%d,%d' % params.target)}")
                if params.decoys:
                    cells = ";".join("%d,%d" % cell for cell in params.decoys)
                    out.append(f"    decoys {_quote(cells)}")
                if params.budget is not None:
                    out.append(f"    budget {params.budget}")
            elif isinstance(params, CoordParams):
                out.append(f"    expected {_quote(params.expected)}")
                if params.max_attempts is not None:
                    out.append(f"    max-attempts {params.max_attempts}")
            else:
                steps = ", ".join(f"{sid}@{chan.value}" for sid, chan in params.steps)
                out.append(f"    steps {_quote(steps)}")
            out.append("  }")
            out.append(f"  success -> {body.success}")
            out.append(f"  failure -> {body.failure}")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Trace -> play-CLI script


def events_to_script(events: list[Event], start_channel: str = "touch") -> list[str]:
    lines = []
    channel = start_channel
    for event in events:
        if event.channel.value != channel:
            lines.append("tab")
            channel = event.channel.value
        payload = event.payload
        if isinstance(payload, Advance):
            lines.append("a")
        elif isinstance(payload, Choose):
            lines.append(f"c {payload.index}")
        elif isinstance(payload, Key):
            lines.append("k space" if payload.symbol == " " else f"k {payload.symbol}")
        elif isinstance(payload, Ack):
            lines.append("ack")
        elif payload.action == "scan":
            lines.append(f"m scan {payload.x} {payload.y}")
        elif payload.action == "step":
            lines.append(f"m step {payload.step}")
        else:
            lines.append(f"m {payload.action}")
    return lines
