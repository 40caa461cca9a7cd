"""Shared fixtures: deterministic tasks, a regenerated testing split."""

from __future__ import annotations

import random

import pytest

from pentogrip.board import Color, PieceSymbol, Region, Shape
from pentogrip.tasks import (
    BENCHMARK_LAYOUT,
    DEFAULT_SEED,
    Task,
    generate_task,
    make_splits,
)


def make_task(
    symbol: PieceSymbol | None = None,
    size: int = 20,
    n_pieces: int = 4,
    key: str = "fixture",
    seed: int = DEFAULT_SEED,
) -> Task:
    """One deterministic small task; vary ``key`` for a different board."""
    if symbol is None:
        symbol = PieceSymbol(Shape.T, Color.RED, Region.TOP_LEFT)
    rng = random.Random(f"{seed}/{key}")
    return generate_task(symbol, size, n_pieces, rng, task_id=f"{key}-task", seed=seed)


def regenerate_split(split: str, seed: int = DEFAULT_SEED) -> list[Task]:
    """Rebuild a benchmark split in memory, same recipe as gen-tasks."""
    symbols = make_splits(seed).by_name(split)
    out: list[Task] = []
    for size, n_pieces, count in BENCHMARK_LAYOUT[split]:
        for i in range(count):
            rng = random.Random(f"{seed}/{split}/{size}/{n_pieces}/{i}")
            out.append(
                generate_task(
                    symbols[i % len(symbols)],
                    size,
                    n_pieces,
                    rng,
                    task_id=f"{split}-{size}x{size}-{n_pieces}p-{i:04d}",
                    seed=seed,
                )
            )
    return out


@pytest.fixture(scope="session")
def testing_split() -> list[Task]:
    return regenerate_split("testing")


@pytest.fixture(scope="session")
def test20(testing_split: list[Task]) -> list[Task]:
    return [task for task in testing_split if task.size == 20]


@pytest.fixture()
def small_task() -> Task:
    return make_task()
