"""Symbol splits and reproducible scene generation.

A piece symbol is a (shape, color, region) triple; with 9 shapes, 6 colors
and 8 regions there are 432 of them.  Symbols are partitioned into four
disjoint target splits (275 training / 25 validation / 60 testing / 72
holdout) and each split is expanded into a fixed benchmark of concrete
scenes, cycling the split's symbols evenly over the task count.

All randomness flows through ``random.Random`` instances seeded with
strings of the form ``"{seed}/{split}/{size}/{pieces}/{index}"``, so any
single task can be regenerated in isolation and full builds parallelize
without changing the result.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .board import (
    ROTATIONS,
    Board,
    Color,
    PieceSymbol,
    Region,
    Shape,
    region_from_tile,
)

DEFAULT_SEED = 49184
MAX_RESAMPLES = 100

TASKFILE_FORMAT = "pentogrip.tasks"
MANIFEST_FORMAT = "pentogrip.manifest"
TASKFILE_VERSION = 1

SPLIT_NAMES = ("training", "validation", "testing", "holdout")

# (map size, pieces on the board, number of tasks) per split.  Counts are
# exact multiples of the split's symbol count, so cycling is perfectly even.
BENCHMARK_LAYOUT: dict[str, tuple[tuple[int, int, int], ...]] = {
    "training": ((20, 4, 1650), (20, 8, 1650)),
    "validation": ((20, 4, 150), (20, 8, 150)),
    "testing": (
        (20, 4, 360),
        (20, 8, 360),
        (30, 4, 180),
        (30, 8, 180),
        (30, 12, 180),
        (30, 18, 180),
    ),
    "holdout": ((20, 4, 432), (20, 8, 432)),
}


class TaskError(Exception):
    """Base class for task construction and serialization errors."""


class GenerationError(TaskError):
    """Raised when a scene cannot be completed within the re-sample budget."""


@dataclass(frozen=True, slots=True)
class TaskPiece:
    """One placed piece of a task: identity plus concrete placement."""

    symbol: PieceSymbol
    anchor: tuple[int, int]
    rotation: int


@dataclass(frozen=True, slots=True)
class Task:
    """A concrete scene: board size, placed pieces and the target index."""

    id: str
    size: int
    pieces: tuple[TaskPiece, ...]
    target_id: int
    seed: int


@dataclass(frozen=True, slots=True)
class SymbolSplits:
    """Disjoint target-symbol sets; union is all 432 symbols."""

    training: tuple[PieceSymbol, ...]
    validation: tuple[PieceSymbol, ...]
    testing: tuple[PieceSymbol, ...]
    holdout: tuple[PieceSymbol, ...]

    def by_name(self, name: str) -> tuple[PieceSymbol, ...]:
        if name not in SPLIT_NAMES:
            raise TaskError(f"unknown split {name!r}; expected one of {SPLIT_NAMES}")
        return getattr(self, name)


def enumerate_symbols() -> tuple[PieceSymbol, ...]:
    """All 432 piece symbols, ordered by (shape, color, region) value."""
    shapes = sorted(Shape, key=lambda s: s.value)
    colors = sorted(Color, key=lambda c: c.value)
    regions = sorted(Region, key=lambda r: r.value)
    return tuple(
        PieceSymbol(shape, color, region)
        for shape in shapes
        for color in colors
        for region in regions
    )


def _covers_all_attributes(symbols: tuple[PieceSymbol, ...]) -> bool:
    return (
        {s.shape for s in symbols} == set(Shape)
        and {s.color for s in symbols} == set(Color)
        and {s.region for s in symbols} == set(Region)
    )


def make_splits(seed: int = DEFAULT_SEED) -> SymbolSplits:
    """Partition the 432 symbols into target splits, deterministically.

    The holdout split is structural: one color is held out per shape and
    the 9 resulting (shape, color) pairs contribute all 8 of their regions.
    The remaining 360 symbols are shuffled into 275/25/60 and re-drawn
    until every one of those splits contains every shape, color and region.
    """
    rng = random.Random(f"{seed}/splits")
    symbols = enumerate_symbols()
    shapes = sorted(Shape, key=lambda s: s.value)
    colors = sorted(Color, key=lambda c: c.value)
    while True:
        held = {shape: rng.choice(colors) for shape in shapes}
        holdout = tuple(s for s in symbols if held[s.shape] is s.color)
        pool = [s for s in symbols if held[s.shape] is not s.color]
        rng.shuffle(pool)
        training = tuple(pool[:275])
        validation = tuple(pool[275:300])
        testing = tuple(pool[300:360])
        if all(
            _covers_all_attributes(part) for part in (training, validation, testing)
        ):
            return SymbolSplits(training, validation, testing, holdout)


@lru_cache(maxsize=None)
def _region_tiles(width: int, height: int) -> dict[Region, tuple[tuple[int, int], ...]]:
    """Tiles of each named region, row-major, for one board size."""
    tiles: dict[Region, list[tuple[int, int]]] = {region: [] for region in Region}
    for y in range(height):
        for x in range(width):
            region = region_from_tile(x, y, width, height)
            if region is not None:
                tiles[region].append((x, y))
    return {region: tuple(found) for region, found in tiles.items()}


def _admissible_anchors(
    board: Board, shape: Shape, rotation: int, region: Region
) -> list[tuple[int, int]]:
    return [
        anchor
        for anchor in _region_tiles(board.width, board.height)[region]
        if board.can_place(shape, anchor, rotation)
    ]


def generate_task(
    symbol: PieceSymbol,
    size: int,
    n_pieces: int,
    rng: random.Random,
    *,
    task_id: str = "task",
    seed: int = DEFAULT_SEED,
) -> Task:
    """Build one scene: the target first, then uniformly sampled distractors.

    Every piece is anchored uniformly over the legal anchors inside its own
    region, so no piece ever sits in the unnamed center where the gripper
    starts.  A distractor whose sampled placement has no legal anchor is
    re-sampled, up to :data:`MAX_RESAMPLES` times per slot.

    Raises:
        GenerationError: if a piece slot exhausts its re-sample budget.
    """
    if n_pieces < 1:
        raise ValueError(f"a task needs at least one piece, got {n_pieces}")
    board = Board(size, size)
    symbols = enumerate_symbols()
    placed: list[TaskPiece] = []

    def try_place(candidate: PieceSymbol) -> bool:
        rotation = rng.choice(ROTATIONS)
        anchors = _admissible_anchors(board, candidate.shape, rotation, candidate.region)
        if not anchors:
            return False
        anchor = rng.choice(anchors)
        board.place(candidate, anchor, rotation)
        placed.append(TaskPiece(candidate, anchor, rotation))
        return True

    if not try_place(symbol):
        raise GenerationError(
            f"target {symbol.shape.value}/{symbol.color.value}/{symbol.region.value}"
            f" has no admissible anchor on an empty {size}x{size} board"
        )
    while len(placed) < n_pieces:
        for _ in range(MAX_RESAMPLES):
            if try_place(rng.choice(symbols)):
                break
        else:
            raise GenerationError(
                f"piece {len(placed) + 1} of {n_pieces} could not be placed"
                f" after {MAX_RESAMPLES} re-samples on a {size}x{size} board"
            )
    return Task(task_id, size, tuple(placed), 0, seed)


def build_benchmark(
    splits: SymbolSplits, seed: int = DEFAULT_SEED
) -> dict[str, list[Task]]:
    """Expand symbol splits into the full fixed benchmark of 6168 tasks."""
    benchmark: dict[str, list[Task]] = {}
    for split, configs in BENCHMARK_LAYOUT.items():
        symbols = splits.by_name(split)
        tasks: list[Task] = []
        for size, n_pieces, count in configs:
            for i in range(count):
                rng = random.Random(f"{seed}/{split}/{size}/{n_pieces}/{i}")
                tasks.append(
                    generate_task(
                        symbols[i % len(symbols)],
                        size,
                        n_pieces,
                        rng,
                        task_id=f"{split}-{size}x{size}-{n_pieces}p-{i:04d}",
                        seed=seed,
                    )
                )
        benchmark[split] = tasks
    return benchmark


def build_board(task: Task) -> Board:
    """Materialize a task's board; piece ids follow placement order."""
    board = Board(task.size, task.size)
    for piece in task.pieces:
        board.place(piece.symbol, piece.anchor, piece.rotation)
    return board


# --------------------------------------------------------------------------
# Serialization: JSON payloads, line-delimited task files, and the manifest.


def symbol_to_payload(symbol: PieceSymbol) -> list[str]:
    return [symbol.shape.value, symbol.color.value, symbol.region.value]


def symbol_from_payload(payload: list[str]) -> PieceSymbol:
    return PieceSymbol(Shape(payload[0]), Color(payload[1]), Region(payload[2]))


def task_to_payload(task: Task) -> dict:
    return {
        "id": task.id,
        "size": task.size,
        "pieces": [
            {
                "symbol": symbol_to_payload(piece.symbol),
                "anchor": list(piece.anchor),
                "rotation": piece.rotation,
            }
            for piece in task.pieces
        ],
        "target": task.target_id,
        "seed": task.seed,
    }


def task_from_payload(payload: dict) -> Task:
    try:
        pieces = tuple(
            TaskPiece(
                symbol_from_payload(entry["symbol"]),
                (int(entry["anchor"][0]), int(entry["anchor"][1])),
                int(entry["rotation"]),
            )
            for entry in payload["pieces"]
        )
        target = int(payload["target"])
        if not 0 <= target < len(pieces):
            raise TaskError(f"target id {target} outside 0..{len(pieces) - 1}")
        return Task(
            str(payload["id"]),
            int(payload["size"]),
            pieces,
            target,
            int(payload["seed"]),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise TaskError(f"malformed task payload: {exc}") from exc


def save_tasks(tasks: list[Task], path: str | Path) -> None:
    """Write tasks as one header line plus one JSON record per task."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": TASKFILE_FORMAT,
            "version": TASKFILE_VERSION,
            "count": len(tasks),
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for task in tasks:
            fh.write(json.dumps(task_to_payload(task), separators=(",", ":")) + "\n")


def load_tasks(path: str | Path) -> list[Task]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("format") != TASKFILE_FORMAT:
        raise TaskError(f"{path}: not a task file")
    if lines[0].get("version") != TASKFILE_VERSION:
        raise TaskError(f"{path}: unsupported version {lines[0].get('version')!r}")
    tasks = [task_from_payload(payload) for payload in lines[1:]]
    if len(tasks) != lines[0].get("count"):
        raise TaskError(f"{path}: header says {lines[0].get('count')} tasks, found {len(tasks)}")
    return tasks


def write_benchmark(out_dir: str | Path, seed: int = DEFAULT_SEED) -> dict:
    """Generate the benchmark into ``out_dir`` and return its manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = make_splits(seed)
    benchmark = build_benchmark(splits, seed)
    manifest: dict = {
        "format": MANIFEST_FORMAT,
        "version": TASKFILE_VERSION,
        "seed": seed,
        "splits": {},
    }
    for split, tasks in benchmark.items():
        filename = f"{split}.jsonl"
        save_tasks(tasks, out / filename)
        manifest["splits"][split] = {
            "file": filename,
            "tasks": len(tasks),
            "configs": [
                {"size": size, "pieces": n_pieces, "count": count}
                for size, n_pieces, count in BENCHMARK_LAYOUT[split]
            ],
            "symbols": [symbol_to_payload(s) for s in splits.by_name(split)],
        }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


def load_split(directory: str | Path, split: str) -> list[Task]:
    """Load one split's tasks from a benchmark directory via its manifest."""
    directory = Path(directory)
    with open(directory / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise TaskError(f"{directory}: not a benchmark directory")
    try:
        entry = manifest["splits"][split]
    except KeyError:
        known = ", ".join(manifest.get("splits", {}))
        raise TaskError(f"unknown split {split!r}; manifest has: {known}") from None
    return load_tasks(directory / entry["file"])
