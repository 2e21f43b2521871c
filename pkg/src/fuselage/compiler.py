"""Source-to-graph pipeline: parse, check, lower, validate.

Lowering applies per-kind channel defaults and normalizes mini-game params
(via dsl.lower_params) so a successful compile always yields a graph that
graph_validate accepts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import dsl
from .diagnostics import Diagnostic, error, has_errors, warning
from .errors import InvalidGraphError, MalformedInputError, UnsupportedVersionError
from .model import (
    Channel,
    ChoiceBody,
    ChoiceOption,
    Effect,
    EndingBody,
    Guard,
    ItemDef,
    MeterDef,
    MiniGameBody,
    NarrationBody,
    Node,
    StoryGraph,
    edge_targets,
    graph_decode,
    graph_validate,
)

# Channel a node accepts when the author writes no `channel` clause.
_KIND_CHANNELS = {"narration": Channel.TOUCH, "choice": Channel.TOUCH, "ending": Channel.TOUCH}
_GAME_CHANNELS = {
    "biolink": Channel.HANDSET,
    "scan": Channel.HANDSET,
    "coord": Channel.ANY,
    "sequence": Channel.ANY,
}


@dataclass
class CompileResult:
    """Graph plus accumulated findings; graph is None when any finding is an error."""

    graph: StoryGraph | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.graph is not None


def default_channel(kind: str, game: str | None) -> Channel:
    if kind == "minigame":
        return _GAME_CHANNELS[game or ""]
    return _KIND_CHANNELS[kind]


def _lower_guard(g: dsl.AstGuard) -> Guard:
    return Guard(g.kind, g.name, op=g.op, value=g.value)


def _lower_effect(e: dsl.AstEffect) -> Effect:
    return Effect(e.kind, e.name, delta=e.delta)


def _lower_node(ast_node: dsl.AstNode) -> Node:
    channel = (
        Channel(ast_node.channel)
        if ast_node.channel is not None
        else default_channel(ast_node.kind, ast_node.game)
    )
    if ast_node.kind == "narration":
        body = NarrationBody(
            pages=tuple(ast_node.pages),
            next=ast_node.next or "",
            effects=tuple(_lower_effect(e) for e in ast_node.effects),
        )
    elif ast_node.kind == "choice":
        body = ChoiceBody(
            prompt=ast_node.prompt or "",
            options=tuple(
                ChoiceOption(
                    label=opt.label,
                    target=opt.target,
                    guards=tuple(_lower_guard(g) for g in opt.guards),
                    effects=tuple(_lower_effect(e) for e in opt.effects),
                )
                for opt in ast_node.options
            ),
        )
    elif ast_node.kind == "minigame":
        body = MiniGameBody(
            params=dsl.lower_params(ast_node),
            success=ast_node.success or "",
            failure=ast_node.failure or "",
        )
    else:
        body = EndingBody(category=ast_node.ending or "", text=ast_node.text or "")
    return Node(id=ast_node.id, channel=channel, body=body)


def _sequence_failure_warnings(graph: StoryGraph) -> list[Diagnostic]:
    """Warn when a sequence's failure edge is the only way into its target.

    The sequence mini-game never produces a Failure outcome, so such a target
    can never be entered at runtime.
    """
    out: list[Diagnostic] = []
    incoming: dict[str, set[tuple[str, int]]] = {}
    for nid in sorted(graph.nodes):
        for idx, target in enumerate(edge_targets(graph.nodes[nid])):
            incoming.setdefault(target, set()).add((nid, idx))
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        if not isinstance(node.body, MiniGameBody) or node.body.game != "sequence":
            continue
        failure_edge = (nid, 1)
        others = incoming.get(node.body.failure, set()) - {failure_edge}
        if not others and node.body.failure != graph.start:
            out.append(
                warning(
                    "sequence-failure-unreachable",
                    f"sequence failure target {node.body.failure!r} has no other way in",
                    node=nid,
                )
            )
    return out


def compile_source(source: str, filename: str = "<story>") -> CompileResult:
    """Compile DSL text into a validated StoryGraph.

    Diagnostics from every stage are aggregated; the graph is present only if
    none of them is an error.
    """
    ast, diags = dsl.parse(source, filename)
    if ast is None:
        return CompileResult(None, diags)
    diags = list(diags) + dsl.check(ast)
    if has_errors(diags):
        return CompileResult(None, diags)
    graph = StoryGraph(
        title=ast.title,
        start=ast.start,
        meters=tuple(MeterDef(m.name, m.min, m.max, m.init) for m in ast.meters),
        items=tuple(ItemDef(i.name, i.label) for i in ast.items),
        flags=tuple(f.name for f in ast.flags),
        nodes={node.id: _lower_node(node) for node in ast.nodes},
    )
    diags += _sequence_failure_warnings(graph)
    diags += graph_validate(graph)
    if has_errors(diags):
        return CompileResult(None, diags)
    return CompileResult(graph, diags)


def compile_file(path: str | Path) -> CompileResult:
    path = Path(path)
    try:
        source = path.read_text(encoding="utf-8")
    except OSError as exc:
        return CompileResult(None, [error("io-error", f"cannot read {path}: {exc}")])
    return compile_source(source, filename=str(path))


def load_graph(path: str | Path) -> CompileResult:
    """Load a story from either surface: `.story` source or compiled `.storyc.json`.

    Read and decode failures are folded into diagnostics so callers handle
    one shape.
    """
    path = Path(path)
    if path.suffix == ".story":
        return compile_file(path)
    try:
        graph = graph_decode(path.read_bytes())
    except OSError as exc:
        return CompileResult(None, [error("io-error", f"cannot read {path}: {exc}")])
    except InvalidGraphError as exc:
        return CompileResult(None, exc.diagnostics)
    except MalformedInputError as exc:
        return CompileResult(None, [error("malformed-input", str(exc))])
    except UnsupportedVersionError as exc:
        return CompileResult(None, [error("unsupported-version", str(exc))])
    return CompileResult(graph, [])
