"""Command-line entry points.

Subcommands: compile, validate, play, analyze, serve.  Exit codes are 0 for
success, 1 for content problems (diagnostics, failed analysis, bad saves) and
2 for usage errors, matching argparse's own convention.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from pathlib import Path
from typing import Any

from .analysis import (
    DEFAULT_STATE_BUDGET,
    analysis_report,
    exact_reachable,
    render_report,
    report_to_json,
    to_dot,
)
from .compiler import CompileResult, compile_file, load_graph
from .errors import (
    FuselageError,
    StateBudgetExceededError,
)
from .model import Channel, StoryGraph, graph_encode
from .runtime import (
    Ack,
    Advance,
    Choose,
    Event,
    Key,
    Mini,
    Session,
    apply_event,
    new_session,
    restore,
    save,
    view,
)

STATE_BUDGET_ENV = "FUSELAGE_STATE_BUDGET"

_PLAY_HELP = """\
commands:
  a | advance           turn the page
  c N | choose N        pick option N
  k X | key X           press keypad symbol X ("space" for a blank, ⏎ submits)
  m ACTION [args]       mini-game action: move-n/s/e/w, grab, wait,
                        scan X Y, submit, backspace, step ID
  ack                   acknowledge an ending
  tab                   switch between touch and handset
  save [PATH]           write the session to PATH (default: --save)
  help                  show this text
  q | quit              leave without saving
"""


def _print_diagnostics(result: CompileResult) -> None:
    for diag in result.diagnostics:
        print(diag.render(), file=sys.stderr)


def _load_or_fail(path: str) -> StoryGraph | None:
    result = load_graph(Path(path))
    _print_diagnostics(result)
    return result.graph


# ---------------------------------------------------------------------------
# compile / validate


def cmd_compile(args: argparse.Namespace) -> int:
    result = compile_file(Path(args.story))
    _print_diagnostics(result)
    if result.graph is None:
        return 1
    data = graph_encode(result.graph)
    if args.output is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(args.output).write_bytes(data)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    result = load_graph(Path(args.path))
    _print_diagnostics(result)
    if result.graph is None:
        return 1
    print(f"ok: {result.graph.title} ({len(result.graph.nodes)} nodes)")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _resolve_budget(args: argparse.Namespace) -> int | None:
    """Explicit flag wins, then the environment, then the built-in default.

    Returns None on a usage error (after printing it)."""
    if args.budget is not None:
        if args.budget < 1:
            print("fuselage: --budget must be a positive integer", file=sys.stderr)
            return None
        return args.budget
    raw = os.environ.get(STATE_BUDGET_ENV)
    if raw is None:
        return DEFAULT_STATE_BUDGET
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        print(f"fuselage: invalid {STATE_BUDGET_ENV}: {raw!r}", file=sys.stderr)
        return None
    return value


def cmd_analyze(args: argparse.Namespace) -> int:
    graph = _load_or_fail(args.path)
    if graph is None:
        return 1
    budget = _resolve_budget(args)
    if budget is None:
        return 2
    try:
        if args.dot:
            sys.stdout.write(to_dot(graph))
            reachable = exact_reachable(graph, budget)
            dead = set(graph.nodes) - reachable
            bad_endings = [e for e in graph.ending_ids() if e not in reachable]
        else:
            report = analysis_report(graph, budget)
            sys.stdout.write(
                report_to_json(report) if args.json else render_report(report)
            )
            dead = report["dead"]
            bad_endings = [
                e for e, status in report["endings"].items() if status != "reachable"
            ]
    except StateBudgetExceededError as exc:
        print(f"fuselage: {exc}", file=sys.stderr)
        return 1
    if dead or bad_endings:
        for eid in sorted(bad_endings):
            print(f"fuselage: ending {eid} is unreachable", file=sys.stderr)
        for nid in sorted(dead):
            print(f"fuselage: node {nid} is dead", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# play


def _render_mini(game: str, mini: dict[str, Any]) -> list[str]:
    if game == "biolink":
        lines = [
            f"  creature: {mini['creature']}  meter: {mini['meter']}",
            f"  position: ({mini['position'][0]},{mini['position'][1]})"
            f"  collected: {mini['collected']}/{mini['required']}",
        ]
        cells = {(c["x"], c["y"]): c["cell"] for c in mini["cells"]}
        if cells:
            xs = [x for x, _ in cells]
            ys = [y for _, y in cells]
            px, py = mini["position"]
            for y in range(min(ys), max(ys) + 1):
                row = []
                for x in range(min(xs), max(xs) + 1):
                    if (x, y) == (px, py):
                        row.append("@")
                    else:
                        row.append(cells.get((x, y), " "))
                lines.append("    " + "".join(row))
        return lines
    if game == "scan":
        budget = mini["budget"]
        used = f"{mini['scans_used']}/{budget}" if budget is not None else str(mini["scans_used"])
        lines = [f"  grid {mini['width']}x{mini['height']}  scans: {used}"]
        if mini["revealed"]:
            shown = " ".join(f"({c['x']},{c['y']})={c['marker']}" for c in mini["revealed"])
            lines.append(f"  revealed: {shown}")
        return lines
    if game == "coord":
        cap = mini["max_attempts"]
        attempts = f"{mini['attempts_used']}/{cap}" if cap is not None else str(mini["attempts_used"])
        return [f"  buffer: [{mini['masked']}]  attempts: {attempts}"]
    return [
        f"  steps done: {mini['done']}/{mini['total']}"
        f"  available: {', '.join(mini['available'])}"
    ]


def _render_view(session: Session) -> str:
    v = view(session)
    meters = "  ".join(f"{name}={value}" for name, value in sorted(v.meters.items()))
    lines = [f"== {v.node} [{v.kind}] ({v.channel})" + (f"  {meters}" if meters else "")]
    if v.kind == "narration":
        lines.append(f"-- page {v.page + 1}/{v.pages}")
        lines.append(v.text or "")
    elif v.kind == "choice":
        lines.append(v.prompt or "")
        for opt in v.options or []:
            lines.append(f"  [{opt['index']}] {opt['label']}")
    elif v.kind == "ending":
        lines.append(v.text or "")
        lines.append(f"-- ending ({v.category}); type ack to finish")
    else:
        lines.append(f"-- {v.game}: {v.text}")
        lines.extend(_render_mini(v.game or "", v.mini or {}))
    return "\n".join(lines)


def _parse_play_line(line: str, channel: Channel) -> tuple[str, Event | str | None]:
    """Returns ("event", Event), ("meta", word), ("error", message) or ("skip", None)."""
    stripped = line.strip("\n")
    if stripped.strip() == "" and stripped != "\t":
        return "skip", None
    if stripped == "\t" or stripped.strip().lower() == "tab":
        return "meta", "tab"
    parts = stripped.split()
    word = parts[0].lower()
    if word in ("q", "quit"):
        return "meta", "quit"
    if word in ("help", "h", "?"):
        return "meta", "help"
    if word == "save":
        return "meta", stripped
    if word in ("a", "advance"):
        return "event", Event(channel, Advance())
    if word == "ack":
        return "event", Event(channel, Ack())
    if word in ("c", "choose"):
        if len(parts) != 2 or not parts[1].isdigit():
            return "error", "usage: c N"
        return "event", Event(channel, Choose(int(parts[1])))
    if word in ("k", "key"):
        if len(parts) != 2:
            return "error", "usage: k X"
        symbol = " " if parts[1].lower() == "space" else parts[1]
        if len(symbol) != 1:
            return "error", "key takes a single symbol"
        return "event", Event(channel, Key(symbol))
    if word in ("m", "mini"):
        if len(parts) < 2:
            return "error", "usage: m ACTION [args]"
        action = parts[1]
        if action == "scan":
            if len(parts) != 4 or not all(_is_int(p) for p in parts[2:]):
                return "error", "usage: m scan X Y"
            return "event", Event(channel, Mini("scan", x=int(parts[2]), y=int(parts[3])))
        if action == "step":
            if len(parts) != 3:
                return "error", "usage: m step ID"
            return "event", Event(channel, Mini("step", step=parts[2]))
        if len(parts) != 2:
            return "error", f"m {action} takes no arguments"
        return "event", Event(channel, Mini(action))
    return "error", f"unknown command: {word} (try help)"


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def cmd_play(args: argparse.Namespace) -> int:
    graph = _load_or_fail(args.path)
    if graph is None:
        return 1
    if args.load is not None:
        try:
            session = restore(graph, Path(args.load).read_bytes())
        except (OSError, FuselageError) as exc:
            print(f"fuselage: cannot load save: {exc}", file=sys.stderr)
            return 1
    else:
        session = new_session(graph, seed=args.seed)
    channel = Channel.TOUCH
    out = sys.stdout
    print(graph.title, file=out)
    print(_render_view(session), file=out)
    while not session.finished:
        out.write(f"{channel.value}> ")
        out.flush()
        line = sys.stdin.readline()
        if line == "":
            print(file=out)
            return 0
        kind, payload = _parse_play_line(line, channel)
        if kind == "skip":
            continue
        if kind == "error":
            print(f"note[input]: {payload}", file=out)
            continue
        if kind == "meta":
            assert isinstance(payload, str)
            if payload == "quit":
                return 0
            if payload == "help":
                out.write(_PLAY_HELP)
                continue
            if payload == "tab":
                channel = Channel.HANDSET if channel is Channel.TOUCH else Channel.TOUCH
                print(f"channel: {channel.value}", file=out)
                continue
            parts = payload.split()
            target = parts[1] if len(parts) > 1 else args.save
            if target is None:
                print("note[input]: no save path (use save PATH or --save)", file=out)
                continue
            Path(target).write_bytes(save(session))
            print(f"saved: {target}", file=out)
            continue
        assert isinstance(payload, Event)
        session, notes = apply_event(session, payload)
        for note in notes:
            print(f"note[{note.code}]: {note.message}", file=out)
        print(_render_view(session), file=out)
    print(f"finished: {session.finished}", file=out)
    if args.save is not None:
        Path(args.save).write_bytes(save(session))
        print(f"saved: {args.save}", file=out)
    return 0


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args: argparse.Namespace) -> int:
    stories: dict[str, StoryGraph] = {}
    for path in args.stories:
        graph = _load_or_fail(path)
        if graph is None:
            return 1
        story_id = Path(path).name.split(".")[0]
        if story_id in stories:
            print(f"fuselage: duplicate story id {story_id!r}", file=sys.stderr)
            return 1
        stories[story_id] = graph
    ui_dir = Path(args.ui) if args.ui is not None else None
    if ui_dir is not None and not ui_dir.is_dir():
        print(f"fuselage: --ui is not a directory: {ui_dir}", file=sys.stderr)
        return 1

    from .server import create_app

    import uvicorn

    app = create_app(stories, ui_dir=ui_dir)
    # Bind before handing off to uvicorn so the announced address is real
    # even with --port 0.
    try:
        sock = socket.create_server((args.host, args.port))
    except OSError as err:
        print(f"fuselage: cannot bind {args.host}:{args.port}: {err}", file=sys.stderr)
        return 1
    host, port = sock.getsockname()[:2]
    print(f"serving on http://{host}:{port}", file=sys.stderr, flush=True)
    config = uvicorn.Config(app, log_level="warning")
    uvicorn.Server(config).run(sockets=[sock])
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuselage",
        description="Compile, inspect, play, and serve branching story files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a story source to its canonical graph")
    p.add_argument("story", help="path to a .story source file")
    p.add_argument("-o", "--output", help="write the graph here instead of stdout")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("validate", help="check a story source or compiled graph")
    p.add_argument("path", help=".story source or .storyc.json graph")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("play", help="play a story interactively on stdin/stdout")
    p.add_argument("path", help=".story source or .storyc.json graph")
    p.add_argument("--seed", type=int, default=0, help="session seed (default 0)")
    p.add_argument("--load", metavar="PATH", help="resume from a saved session")
    p.add_argument("--save", metavar="PATH", help="default path for the save command")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("analyze", help="report reachability, endings, and witness traces")
    p.add_argument("path", help=".story source or .storyc.json graph")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit the report as JSON")
    fmt.add_argument("--dot", action="store_true", help="emit the graph in DOT form")
    p.add_argument(
        "--budget",
        type=int,
        help=f"abstract state budget (default {DEFAULT_STATE_BUDGET}, or ${STATE_BUDGET_ENV})",
    )
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="serve stories over HTTP")
    p.add_argument("stories", nargs="+", help="story files; the id is the file stem")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", metavar="DIR", help="static directory to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
