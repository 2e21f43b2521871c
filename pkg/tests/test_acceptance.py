"""Acceptance gate: one test per shipping criterion, tolerances pinned here.

Each test is meant to read as a single pass/fail line under `pytest -v`.
"""

import random
import subprocess
import sys
import time

import pytest

from fuselage.analysis import biolink_feasible, exact_reachable, trace_to
from fuselage.errors import HashMismatchError
from fuselage.model import Channel, MeterDef, graph_decode, graph_encode, story_hash
from fuselage.runtime import (
    Advance,
    BiolinkState,
    Event,
    Outcome,
    apply_event,
    biolink_update,
    new_session,
    restore,
    save,
)
from support import (
    _random_biolink,
    random_events,
    random_graph,
    toy_biolink_enumerate,
    toy_biolink_start,
    toy_reachable,
)


def drive(graph, events):
    """Apply events until the stream ends or the session finishes; returns
    every intermediate session including the initial one."""
    session = new_session(graph, seed=0)
    trail = [session]
    for event in events:
        if session.finished:
            break
        session, _ = apply_event(session, event)
        trail.append(session)
    return trail


def test_bundled_story_compiles_clean_and_every_ending_replays(mask_graph):
    endings = {nid: mask_graph.nodes[nid].body.category for nid in mask_graph.ending_ids()}
    assert sorted(endings.values()) == ["main", "sub", "sub"]
    started = time.perf_counter()
    for ending in sorted(endings):
        trace = trace_to(mask_graph, ending)
        session = new_session(mask_graph, seed=0)
        for step in trace:
            assert session.current == step.node
            session, _ = apply_event(session, step.event)
        assert session.current == ending
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"ending replays took {elapsed:.3f}s"


def test_replay_determinism_over_1000_randomized_sessions():
    rng = random.Random(11)
    divergences = 0
    for case in range(1000):
        graph = random_graph(random.Random(1000 + case))
        events = random_events(rng, rng.randint(1, 200))
        first = drive(graph, events)
        second = drive(graph, events)
        if first != second:
            divergences += 1
    assert divergences == 0


def test_exact_reachability_matches_bruteforce_on_500_graphs():
    started = time.perf_counter()
    mismatches = 0
    for case in range(500):
        graph = random_graph(random.Random(7000 + case), max_nodes=12, max_flags=4, max_items=3)
        if exact_reachable(graph) != toy_reachable(graph):
            mismatches += 1
    elapsed = time.perf_counter() - started
    assert mismatches == 0
    assert elapsed < 60.0, f"oracle comparison took {elapsed:.1f}s"


def test_biolink_feasibility_matches_enumeration_on_200_grids():
    checked = 0
    case = 0
    while checked < 200:
        rng = random.Random(3000 + case)
        case += 1
        params = _random_biolink(rng, "m")
        if len(params.grid) > 4 or len(params.grid[0]) > 4:
            continue
        checked += 1
        meter_def = MeterDef("m", 0, rng.randint(6, 24), rng.randint(3, 24))
        win_len, loss_len = toy_biolink_enumerate(params, meter_def, 12)
        feas = biolink_feasible(params, meter_def)

        if win_len is not None:
            assert feas.status == "winnable"
            assert len(feas.witness) == win_len
        elif feas.status == "winnable":
            assert len(feas.witness) > 12

        if loss_len is not None:
            assert feas.failure_witness is not None
            assert len(feas.failure_witness) == loss_len

        if feas.status == "winnable" and feas.witness:
            sx, sy = toy_biolink_start(params)
            state, meter = BiolinkState(sx, sy), meter_def.init
            outcome = Outcome.CONTINUE
            for action in feas.witness:
                assert outcome is Outcome.CONTINUE
                state, meter, outcome, _ = biolink_update(
                    params, state, meter, meter_def, action
                )
            assert outcome is Outcome.SUCCESS


def test_meters_stay_clamped_across_fuzz_runs():
    rng = random.Random(23)
    for case in range(300):
        graph = random_graph(random.Random(5000 + case))
        bounds = {m.name: (m.min, m.max) for m in graph.meters}
        for session in drive(graph, random_events(rng, 120)):
            for name, value in session.meters.items():
                lo, hi = bounds[name]
                assert lo <= value <= hi


def test_save_restore_round_trips_1000_prefixes_and_rejects_foreign_hashes(mask_graph):
    rng = random.Random(31)
    done = 0
    case = 0
    while done < 1000:
        graph = random_graph(random.Random(9000 + case))
        case += 1
        trail = drive(graph, random_events(rng, rng.randint(1, 80)))
        for _ in range(4):
            if done >= 1000:
                break
            session = trail[rng.randrange(len(trail))]
            data = save(session)
            assert restore(graph, data) == session
            done += 1
        assert story_hash(graph) != story_hash(mask_graph)
        with pytest.raises(HashMismatchError):
            restore(mask_graph, save(trail[-1]))


def test_channel_gating_exhaustive_over_reachable_mask_nodes(mask_graph):
    reachable = exact_reachable(mask_graph)
    assert reachable == set(mask_graph.nodes)
    for nid in sorted(reachable):
        node = mask_graph.nodes[nid]
        trace = trace_to(mask_graph, nid)
        session = new_session(mask_graph, seed=0)
        for step in trace:
            session, _ = apply_event(session, step.event)
        assert session.current == nid

        if node.channel is Channel.ANY:
            for channel in (Channel.TOUCH, Channel.HANDSET):
                _, notes = apply_event(session, Event(channel, Advance()))
                assert all(n.code != "wrong-channel" for n in notes), nid
            continue
        wrong = Channel.HANDSET if node.channel is Channel.TOUCH else Channel.TOUCH
        after, notes = apply_event(session, Event(wrong, Advance()))
        assert [n.code for n in notes] == ["wrong-channel"], nid
        assert after is session, nid
        _, notes = apply_event(session, Event(node.channel, Advance()))
        assert all(n.code != "wrong-channel" for n in notes), nid


def test_canonical_encoding_identical_across_processes(mask_path, mask_graph):
    runs = []
    for hash_seed in ("1", "2"):
        proc = subprocess.run(
            [sys.executable, "-m", "fuselage", "compile", str(mask_path)],
            capture_output=True,
            env={"PATH": "/usr/bin:/bin", "PYTHONHASHSEED": hash_seed},
        )
        assert proc.returncode == 0, proc.stderr.decode()
        runs.append(proc.stdout)
    assert runs[0] == runs[1]
    assert runs[0] == graph_encode(mask_graph)

    for case in range(100):
        graph = random_graph(random.Random(42 + case))
        data = graph_encode(graph)
        assert graph_encode(graph_decode(data)) == data
