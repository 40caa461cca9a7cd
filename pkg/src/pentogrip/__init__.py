"""Pentomino gripper reference game: deterministic environment and tools.

A teacher instructs, a follower moves: episodes start with a generated
referring expression naming the target piece, optionally stream feedback
while the gripper moves, and end on a grip or a timeout with a sparse
reward.  The package exposes the environment as a library, a line-
delimited JSON protocol service, and a command line.
"""

from .board import (
    COLOR_RGB,
    ROTATIONS,
    TRAIL_RGB,
    VIEW_SIZE,
    Board,
    BoardError,
    CenterRegionError,
    Color,
    GripperState,
    Piece,
    PieceSymbol,
    PlacementError,
    Region,
    Shape,
    extract_view,
    piece_tiles,
    project_coords,
    region_from_tile,
    region_of,
    render,
)
from .env import (
    T_MAX,
    Action,
    EnvError,
    EpisodeDoneError,
    EpisodeOutcome,
    GripEnv,
    InvalidTaskError,
    Observation,
    Status,
    observation_digest,
    record_episode,
    replay_trajectory,
    terminal_reward,
)
from .language import (
    DIST_THRESHOLD,
    MAX_TOKENS,
    TIME_THRESHOLD,
    VOCABULARY,
    LanguageError,
    Property,
    PropertyKind,
    TeacherState,
    Utterance,
    UtteranceKind,
    detokenize,
    feedback,
    ia_select,
    make_teacher,
    parse_order,
    realize,
    tokenize,
)
from .oracle import (
    FOLLOWERS,
    Evaluation,
    FeedbackFollower,
    OracleError,
    TaskResult,
    evaluate,
    run_episode,
    shortest_episode,
    shortest_path_actions,
)
from .protocol import PROTOCOL_VERSION, ProtocolError
from .service import GameService, ServiceServer, run_server
from .tasks import (
    BENCHMARK_LAYOUT,
    DEFAULT_SEED,
    GenerationError,
    SymbolSplits,
    Task,
    TaskError,
    TaskPiece,
    build_benchmark,
    build_board,
    enumerate_symbols,
    generate_task,
    load_split,
    load_tasks,
    make_splits,
    save_tasks,
    task_from_payload,
    task_to_payload,
    write_benchmark,
)

__version__ = "1.0.0"
