"""A small engine for two-channel branching stories.

The pipeline: a text DSL compiles to a canonical JSON story graph, a pure
functional runtime steps sessions through that graph, and static analysis
answers reachability and feasibility questions about it.  The HTTP server
(`fuselage.server`) and the CLI (`fuselage.cli`) sit on top and are imported
on demand so that compile-only callers do not pay for the web stack.
"""

from .analysis import (
    DEFAULT_STATE_BUDGET,
    Feasibility,
    TraceStep,
    analysis_report,
    biolink_feasible,
    dead_nodes,
    ending_coverage,
    exact_reachable,
    overapprox_reachable,
    to_dot,
    trace_to,
)
from .compiler import CompileResult, compile_file, compile_source, load_graph
from .diagnostics import Diagnostic, Severity, SourceSpan
from .errors import (
    CompileFailedError,
    FuselageError,
    HashMismatchError,
    InvalidGraphError,
    MalformedInputError,
    MalformedSaveError,
    SessionFinishedError,
    StateBudgetExceededError,
    UnreachableError,
    UnsupportedVersionError,
)
from .model import (
    GRAPH_VERSION,
    Channel,
    NodeKind,
    StoryGraph,
    graph_decode,
    graph_encode,
    graph_validate,
    story_hash,
)
from .runtime import (
    SAVE_VERSION,
    Ack,
    Advance,
    Choose,
    EngineNote,
    Event,
    Key,
    Mini,
    Outcome,
    Session,
    View,
    apply_event,
    event_from_json,
    event_to_json,
    new_session,
    restore,
    save,
    view,
)

__version__ = "0.1.0"

__all__ = [
    "GRAPH_VERSION",
    "SAVE_VERSION",
    "DEFAULT_STATE_BUDGET",
    "Ack",
    "Advance",
    "Channel",
    "Choose",
    "CompileFailedError",
    "CompileResult",
    "Diagnostic",
    "EngineNote",
    "Event",
    "Feasibility",
    "FuselageError",
    "HashMismatchError",
    "InvalidGraphError",
    "Key",
    "MalformedInputError",
    "MalformedSaveError",
    "Mini",
    "NodeKind",
    "Outcome",
    "Session",
    "SessionFinishedError",
    "Severity",
    "SourceSpan",
    "StateBudgetExceededError",
    "StoryGraph",
    "TraceStep",
    "UnreachableError",
    "UnsupportedVersionError",
    "View",
    "analysis_report",
    "apply_event",
    "biolink_feasible",
    "compile_file",
    "compile_source",
    "dead_nodes",
    "ending_coverage",
    "event_from_json",
    "event_to_json",
    "exact_reachable",
    "graph_decode",
    "graph_encode",
    "graph_validate",
    "load_graph",
    "new_session",
    "overapprox_reachable",
    "restore",
    "save",
    "story_hash",
    "to_dot",
    "trace_to",
    "view",
]
