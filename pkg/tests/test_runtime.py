"""Session semantics: paging, choices, gating, the four mini-games, saves."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuselage.compiler import compile_source
from fuselage.errors import (
    HashMismatchError,
    MalformedInputError,
    MalformedSaveError,
    SessionFinishedError,
    UnsupportedVersionError,
)
from fuselage.model import BiolinkParams, Channel, MeterDef
from fuselage.runtime import (
    COORD_BUFFER_CAP,
    KEYPAD_SYMBOLS,
    REJECTED_NOTE_CODES,
    Ack,
    Advance,
    BiolinkState,
    Choose,
    Event,
    Key,
    Mini,
    Outcome,
    apply_event,
    biolink_update,
    event_from_json,
    event_to_json,
    filtered_options,
    new_session,
    normalize_code,
    restore,
    save,
    view,
)
from support import (
    TOY_ACTIONS,
    random_events,
    random_graph,
    toy_biolink_start,
    toy_biolink_step,
)


def build(source):
    result = compile_source(source)
    assert result.graph is not None, [d.render() for d in result.diagnostics]
    return result.graph


def touch(payload):
    return Event(Channel.TOUCH, payload)


def handset(payload):
    return Event(Channel.HANDSET, payload)


def note_codes(notes):
    return [n.code for n in notes]


STORY = """\
story "rig" start intro
meter nerve min 0 max 10 init 6
item rope
flag brave

node intro narration {
  text "one"
  text "two"
  next fork set brave give rope give rope meter nerve - 2
}

node fork choice {
  prompt "pick"
  option "guarded" if flag brave -> drop
  option "blocked" if !flag brave -> done
  option "open" -> done
}

node drop narration {
  text "drop everything"
  next done take rope clear brave
}

node done ending main { text "over" }
"""


@pytest.fixture()
def graph():
    return build(STORY)


def test_new_session_initial_state(graph):
    s = new_session(graph, seed=3)
    assert s.current == "intro"
    assert s.page == 0 and s.event_count == 0 and not s.finished
    assert s.meters == {"nerve": 6}
    assert s.flags == frozenset() and s.inventory == {}
    assert s.seed == 3


def test_sessions_are_not_mutated_in_place(graph):
    s0 = new_session(graph, seed=0)
    s1, _ = apply_event(s0, touch(Advance()))
    assert s0.page == 0 and s1.page == 1
    assert s0.current == "intro"


def test_narration_pages_then_exit_effects(graph):
    s = new_session(graph, seed=0)
    s, notes = apply_event(s, touch(Advance()))
    assert notes == [] and s.current == "intro" and s.page == 1
    s, notes = apply_event(s, touch(Advance()))
    assert s.current == "fork"
    # Effects fire exactly once, on exit.
    assert s.flags == {"brave"}
    assert s.inventory == {"rope": 2}
    assert s.meters["nerve"] == 4
    assert s.event_count == 2


def to_fork(graph):
    s = new_session(graph, seed=0)
    s, _ = apply_event(s, touch(Advance()))
    s, _ = apply_event(s, touch(Advance()))
    return s


def test_choice_filters_guarded_options(graph):
    s = to_fork(graph)
    shown = filtered_options(s)
    # "blocked" requires !brave, so positions are the authored 0 and 2.
    assert [(i, o.label) for i, o in shown] == [(0, "guarded"), (2, "open")]
    v = view(s)
    assert [o["index"] for o in v.options] == [0, 1]
    assert [o["source"] for o in v.options] == [0, 2]
    assert [o["label"] for o in v.options] == ["guarded", "open"]


def test_choose_indexes_the_filtered_list(graph):
    s = to_fork(graph)
    s, notes = apply_event(s, touch(Choose(1)))
    assert notes == []
    assert s.current == "done"


def test_choose_out_of_range_rejected(graph):
    s = to_fork(graph)
    before = s.event_count
    s2, notes = apply_event(s, touch(Choose(2)))
    assert note_codes(notes) == ["bad-choice"]
    assert s2 is s and s.event_count == before


def test_take_item_removes_every_copy(graph):
    s = to_fork(graph)
    assert s.inventory == {"rope": 2}
    s, _ = apply_event(s, touch(Choose(0)))
    s, _ = apply_event(s, touch(Advance()))
    assert s.current == "done"
    assert s.inventory == {}
    assert s.flags == frozenset()


def test_wrong_channel_is_soft_and_uncounted(graph):
    s = new_session(graph, seed=0)
    s2, notes = apply_event(s, handset(Advance()))
    assert note_codes(notes) == ["wrong-channel"]
    assert s2 is s and s2.event_count == 0


def test_wrong_payload_for_node_kind(graph):
    s = new_session(graph, seed=0)
    _, notes = apply_event(s, touch(Choose(0)))
    assert note_codes(notes) == ["bad-event"]
    _, notes = apply_event(s, touch(Key("1")))
    assert note_codes(notes) == ["bad-event"]


def test_ending_ack_finishes(graph):
    s = to_fork(graph)
    s, _ = apply_event(s, touch(Choose(1)))
    assert not s.finished
    s, notes = apply_event(s, touch(Ack()))
    assert notes == [] and s.finished == "done"
    with pytest.raises(SessionFinishedError):
        apply_event(s, touch(Ack()))


def test_rejected_events_never_change_state(graph):
    rng = random.Random(7)
    s = new_session(graph, seed=0)
    for event in random_events(rng, 300):
        if s.finished:
            break
        after, notes = apply_event(s, event)
        if any(code in REJECTED_NOTE_CODES for code in note_codes(notes)):
            assert after is s
        s = after


# ---------------------------------------------------------------------------
# Biolink


def bl_params(**overrides):
    base = dict(
        creature="crab",
        grid=("S.T", "###", "..."),
        meter="m",
        required_trash=1,
        cost=5,
        regen=2,
        threshold=0,
        visibility=2,
    )
    base.update(overrides)
    return BiolinkParams(**base)


METER = MeterDef("m", 0, 100, 12)


def run_actions(params, meter_def, actions, start=None):
    sx, sy = toy_biolink_start(params)
    state = BiolinkState(sx, sy)
    meter = meter_def.init if start is None else start
    outcome = Outcome.CONTINUE
    for action in actions:
        state, meter, outcome, _ = biolink_update(params, state, meter, meter_def, action)
        if outcome is not Outcome.CONTINUE:
            break
    return state, meter, outcome


def test_biolink_rush_fails_at_threshold():
    # Two moves leave 2 on the meter; the grab's cost lands on the threshold,
    # and the loss check runs before the win check even though the trash is up.
    state, meter, outcome = run_actions(bl_params(), METER, ["move-e", "move-e", "grab"])
    assert (meter, outcome) == (0, Outcome.FAILURE)
    assert state.collected == {(2, 0)}


def test_biolink_waiting_wins_with_one_left():
    actions = ["move-e", "wait", "move-e", "wait", "grab"]
    _, meter, outcome = run_actions(bl_params(), METER, actions)
    assert (meter, outcome) == (1, Outcome.SUCCESS)


def test_biolink_blocked_move_costs_and_notes():
    params = bl_params()
    state, meter, outcome, notes = biolink_update(
        params, BiolinkState(0, 0), 100, METER, "move-n"
    )
    assert note_codes(notes) == ["blocked"]
    assert (state.x, state.y) == (0, 0)
    assert meter == 95 and outcome is Outcome.CONTINUE


def test_biolink_grab_on_empty_cell_still_costs():
    state, meter, outcome, notes = biolink_update(
        bl_params(), BiolinkState(1, 0), 100, METER, "grab"
    )
    assert meter == 95 and state.collected == frozenset()
    assert outcome is Outcome.CONTINUE


def test_biolink_agrees_with_oracle_on_random_walks():
    rng = random.Random(41)
    from support import _random_biolink  # generator, not oracle

    for _ in range(80):
        params = _random_biolink(rng, "m")
        meter_def = MeterDef("m", 0, rng.randint(10, 30), rng.randint(5, 25))
        sx, sy = toy_biolink_start(params)
        engine = BiolinkState(sx, sy)
        toy_pos, toy_col, toy_meter = (sx, sy), frozenset(), max(
            meter_def.min, min(meter_def.max, meter_def.init)
        )
        meter = toy_meter
        for _ in range(30):
            action = rng.choice(TOY_ACTIONS)
            engine, meter, outcome, _ = biolink_update(
                params, engine, meter, meter_def, action
            )
            toy_pos, toy_col, toy_meter, toy_outcome = toy_biolink_step(
                params, meter_def, toy_pos, toy_col, toy_meter, action
            )
            assert (engine.x, engine.y) == toy_pos
            assert engine.collected == toy_col
            assert meter == toy_meter
            assert outcome.value == toy_outcome
            if outcome is not Outcome.CONTINUE:
                break


# ---------------------------------------------------------------------------
# Scan / coord / sequence via full sessions

MINI_STORY = """\
story "minis" start sc
meter m min 0 max 10 init 10

node sc minigame scan {
  params { width 3 height 2 target "2,1" decoys "0,0" budget 2 }
  success -> co failure -> co
}

node co minigame coord {
  params { expected "N1 .2" max-attempts 2 }
  success -> sq failure -> sq
}

node sq minigame sequence {
  params { steps "alpha@handset, beta@touch" }
  success -> e failure -> e
}

node e ending main { text "t" }
"""


@pytest.fixture()
def minis():
    return build(MINI_STORY)


def scan(x, y):
    return handset(Mini("scan", x=x, y=y))


def test_scan_reveal_decoy_and_win(minis):
    s = new_session(minis, seed=0)
    s, notes = apply_event(s, scan(0, 0))
    assert notes == []
    assert view(s).mini["revealed"] == [{"x": 0, "y": 0, "marker": "decoy"}]
    s, _ = apply_event(s, scan(2, 1))
    assert s.current == "co"


def test_scan_rescan_is_accepted_noop(minis):
    s = new_session(minis, seed=0)
    s, _ = apply_event(s, scan(0, 0))
    before_used = s.mini.scans_used
    s2, notes = apply_event(s, scan(0, 0))
    assert note_codes(notes) == ["already-scanned"]
    assert s2.mini.scans_used == before_used
    assert s2.event_count == s.event_count + 1


def test_scan_out_of_bounds_rejected(minis):
    s = new_session(minis, seed=0)
    s2, notes = apply_event(s, scan(5, 0))
    assert note_codes(notes) == ["out-of-bounds"]
    assert s2 is s


def test_scan_budget_exhaustion_fails(minis):
    s = new_session(minis, seed=0)
    for x, y in [(0, 0), (1, 0)]:
        s, _ = apply_event(s, scan(x, y))
    assert s.current == "sc"
    s, notes = apply_event(s, scan(0, 1))
    assert "budget-spent" in note_codes(notes)
    assert s.current == "co"


def test_scan_target_wins_even_on_last_scan(minis):
    s = new_session(minis, seed=0)
    for x, y in [(0, 0), (1, 0)]:
        s, _ = apply_event(s, scan(x, y))
    s, _ = apply_event(s, scan(2, 1))
    assert s.current == "co"


def to_coord(minis):
    s = new_session(minis, seed=0)
    s, _ = apply_event(s, scan(2, 1))
    return s


def type_code(s, text, channel=Channel.HANDSET):
    for ch in text:
        s, _ = apply_event(s, Event(channel, Key(ch)))
    return s


def test_coord_normalize_and_submit(minis):
    s = to_coord(minis)
    s = type_code(s, "  n1    .2 ")
    s, notes = apply_event(s, handset(Mini("submit")))
    assert notes == []
    assert s.current == "sq"


def test_coord_enter_key_submits(minis):
    s = to_coord(minis)
    s = type_code(s, "N1 .2")
    s, _ = apply_event(s, handset(Key("⏎")))
    assert s.current == "sq"


def test_coord_bad_symbol_rejected(minis):
    s = to_coord(minis)
    s2, notes = apply_event(s, handset(Key("z")))
    assert note_codes(notes) == ["bad-key"]
    assert s2 is s


def test_coord_backspace_and_masked_view(minis):
    s = to_coord(minis)
    s = type_code(s, "N1")
    assert view(s).mini["masked"] == "••"
    s, _ = apply_event(s, handset(Mini("backspace")))
    assert view(s).mini["masked"] == "•"
    s, notes = apply_event(s, handset(Mini("backspace")))
    assert view(s).mini["masked"] == ""
    s2, notes = apply_event(s, handset(Mini("backspace")))
    assert notes == []  # backspace on empty buffer stays quiet


def test_coord_buffer_cap(minis):
    s = to_coord(minis)
    s = type_code(s, "1" * COORD_BUFFER_CAP)
    assert len(s.mini.buffer) == COORD_BUFFER_CAP
    s2, notes = apply_event(s, handset(Key("2")))
    assert note_codes(notes) == ["buffer-full"]
    assert len(s2.mini.buffer) == COORD_BUFFER_CAP
    assert s2.event_count == s.event_count + 1


def test_coord_wrong_submits_then_fail(minis):
    s = to_coord(minis)
    s = type_code(s, "9")
    s, notes = apply_event(s, handset(Mini("submit")))
    assert "wrong-code" in note_codes(notes)
    assert s.current == "co" and s.mini.attempts_used == 1
    assert s.mini.buffer == ""
    s, notes = apply_event(s, handset(Mini("submit")))
    assert s.current == "sq"  # failure edge after max_attempts


def to_sequence(minis):
    s = to_coord(minis)
    s = type_code(s, "N1 .2")
    s, _ = apply_event(s, handset(Mini("submit")))
    return s


def step_on(chan, step):
    return Event(chan, Mini("step", step=step))


def test_sequence_requires_id_and_channel(minis):
    s = to_sequence(minis)
    s2, notes = apply_event(s, step_on(Channel.TOUCH, "alpha"))
    assert note_codes(notes) == ["not-yet"]
    assert s2.mini.next_step == 0
    assert s2.event_count == s.event_count + 1  # accepted no-op

    s3, notes = apply_event(s2, step_on(Channel.HANDSET, "beta"))
    assert note_codes(notes) == ["not-yet"]

    s4, notes = apply_event(s3, step_on(Channel.HANDSET, "alpha"))
    assert notes == [] and s4.mini.next_step == 1


def test_sequence_unknown_step_rejected(minis):
    s = to_sequence(minis)
    s2, notes = apply_event(s, step_on(Channel.HANDSET, "gamma"))
    assert note_codes(notes) == ["unknown-step"]
    assert s2 is s


def test_sequence_completion_succeeds(minis):
    s = to_sequence(minis)
    s, _ = apply_event(s, step_on(Channel.HANDSET, "alpha"))
    s, _ = apply_event(s, step_on(Channel.TOUCH, "beta"))
    assert s.current == "e"


# ---------------------------------------------------------------------------
# Properties


@given(st.text())
def test_normalize_code_collapses_whitespace(text):
    normalized = normalize_code(text)
    assert normalized == normalize_code(normalized)
    assert "  " not in normalized
    assert normalized == normalized.strip().upper()


@settings(max_examples=60)
@given(st.integers(-50, 50), st.data())
def test_meter_clamping_property(delta, data):
    lo = data.draw(st.integers(-10, 10))
    hi = data.draw(st.integers(lo + 1, lo + 30))
    init = data.draw(st.integers(lo, hi))
    src = f"""\
story "clamp" start a
meter m min {lo} max {hi} init {init}
node a narration {{ text "t" next e meter m {"+" if delta >= 0 else "-"} {abs(delta)} }}
node e ending main {{ text "t" }}
"""
    graph = build(src)
    s = new_session(graph, seed=0)
    s, _ = apply_event(s, touch(Advance()))
    assert lo <= s.meters["m"] <= hi


_symbols = sorted(KEYPAD_SYMBOLS)

event_strategy = st.one_of(
    st.builds(Advance),
    st.builds(Ack),
    st.builds(Choose, st.integers(0, 5)),
    st.builds(Key, st.sampled_from(_symbols)),
    st.builds(
        Mini,
        st.sampled_from(["move-n", "move-s", "move-e", "move-w", "grab", "wait", "submit", "backspace"]),
    ),
    st.builds(lambda x, y: Mini("scan", x=x, y=y), st.integers(0, 9), st.integers(0, 9)),
    st.builds(lambda sid: Mini("step", step=sid), st.sampled_from(["a", "b-2", "c"])),
).map(lambda p: Event(Channel.TOUCH, p))


@given(event_strategy)
def test_event_json_round_trip(event):
    doc = event_to_json(event)
    json.dumps(doc)  # must be serializable as-is
    assert event_from_json(doc) == event


@pytest.mark.parametrize(
    "doc",
    [
        "nope",
        {},
        {"channel": "radio", "type": "advance"},
        {"channel": "touch", "type": "jump"},
        {"channel": "touch", "type": "choose"},
        {"channel": "touch", "type": "choose", "index": True},
        {"channel": "touch", "type": "choose", "index": "0"},
        {"channel": "touch", "type": "key", "symbol": "ab"},
        {"channel": "touch", "type": "key"},
        {"channel": "touch", "type": "mini"},
        {"channel": "touch", "type": "mini", "action": "scan", "x": "1"},
        {"channel": "touch", "type": "mini", "action": "step", "step": 3},
    ],
)
def test_event_from_json_rejects_bad_shapes(doc):
    with pytest.raises(MalformedInputError):
        event_from_json(doc)


# ---------------------------------------------------------------------------
# Save / restore


def test_save_restore_round_trip_mid_minigame(minis):
    s = new_session(minis, seed=9)
    s, _ = apply_event(s, scan(0, 0))
    data = save(s)
    again = restore(minis, data)
    assert again == s
    assert save(again) == data


def test_save_is_deterministic(graph):
    s = new_session(graph, seed=1)
    assert save(s) == save(s)


def test_restore_requires_matching_story(graph, minis):
    s = new_session(graph, seed=0)
    with pytest.raises(HashMismatchError):
        restore(minis, save(s))


def test_restore_version_checked_before_hash(graph):
    s = new_session(graph, seed=0)
    doc = json.loads(save(s))
    doc["version"] = 9
    doc["story_hash"] = "0" * 64
    with pytest.raises(UnsupportedVersionError):
        restore(graph, json.dumps(doc).encode())


def corrupt(graph, fn):
    doc = json.loads(save(new_session(graph, seed=0)))
    fn(doc)
    with pytest.raises(MalformedSaveError):
        restore(graph, json.dumps(doc).encode())


def test_restore_rejects_bad_shapes(graph):
    with pytest.raises(MalformedSaveError):
        restore(graph, b"\xff")
    with pytest.raises(MalformedSaveError):
        restore(graph, b"[]")
    corrupt(graph, lambda d: d.pop("node"))
    corrupt(graph, lambda d: d.update(node="GONE"))
    corrupt(graph, lambda d: d.update(flags=["ghost"]))
    corrupt(graph, lambda d: d.update(inventory=["phantom"]))
    corrupt(graph, lambda d: d.update(meters={}))
    corrupt(graph, lambda d: d.update(meters={"nerve": 999}))
    corrupt(graph, lambda d: d.update(meters={"nerve": 5, "extra": 1}))
    corrupt(graph, lambda d: d.update(page=7))
    corrupt(graph, lambda d: d.update(event_count=True))
    corrupt(graph, lambda d: d.update(finished="done"))
    corrupt(graph, lambda d: d.update(mini={"kind": "scan"}))


def test_restore_rejects_inconsistent_mini(minis):
    doc = json.loads(save(new_session(minis, seed=0)))
    doc["mini"] = {"kind": "coord", "buffer": "1", "attempts_used": 0}
    with pytest.raises(MalformedSaveError):
        restore(minis, json.dumps(doc).encode())
    doc = json.loads(save(new_session(minis, seed=0)))
    doc["mini"]["revealed"] = [[9, 9]]
    with pytest.raises(MalformedSaveError):
        restore(minis, json.dumps(doc).encode())


def test_restore_accepts_any_consistent_state(graph):
    # Restore checks declarations and bounds, not reachability.
    s = new_session(graph, seed=0)
    doc = json.loads(save(s))
    doc.update(node="done", flags=["brave"], inventory=["rope", "rope"], page=0)
    again = restore(graph, json.dumps(doc).encode())
    assert again.current == "done"
    assert again.inventory == {"rope": 2}


def test_view_json_has_stable_key_set(graph, minis):
    keys = None
    for g in (graph, minis):
        s = new_session(g, seed=0)
        doc = view(s).to_json()
        if keys is None:
            keys = set(doc)
        assert set(doc) == keys
    assert "node" in keys and "mini" in keys and "finished" in keys
