"""Evaluation reports: delimited rows, matplotlib figures, board images.

Everything written here is deterministic for a given evaluation: CSV rows
follow task order, figures are rendered with a fixed style on the Agg
backend, and PNGs are written without timestamps or ancillary metadata so
identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np
from PIL import Image

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .board import GripperState, render
from .env import T_MAX
from .oracle import Evaluation
from .tasks import Task, build_board


def write_csv(evaluation: Evaluation, path: str | Path) -> None:
    """Per-task rows plus the aggregate, as comma-separated values."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "size", "pieces", "status", "steps", "reward"])
        for row in evaluation.results:
            writer.writerow(
                [row.task_id, row.size, row.n_pieces, row.status, row.steps, row.reward]
            )


def _config_groups(evaluation: Evaluation) -> dict[tuple[int, int], list]:
    groups: dict[tuple[int, int], list] = {}
    for row in evaluation.results:
        groups.setdefault((row.size, row.n_pieces), []).append(row)
    return dict(sorted(groups.items()))


def format_table(evaluation: Evaluation) -> str:
    """Plain-text summary table, one row per (size, pieces) configuration."""
    lines = [
        f"follower={evaluation.follower or 'unnamed'} order={evaluation.order}"
        f" feedback={'on' if evaluation.feedback else 'off'}",
        f"{'config':<12} {'N':>6} {'mSR%':>8} {'mEPL':>8} {'mReward':>9}",
    ]
    def stats(rows):
        n = len(rows)
        msr = 100.0 * sum(1 for r in rows if r.status == "correct") / n
        mepl = sum(r.steps for r in rows) / n
        mrew = sum(r.reward for r in rows) / n
        return n, msr, mepl, mrew

    for (size, pieces), rows in _config_groups(evaluation).items():
        n, msr, mepl, mrew = stats(rows)
        lines.append(
            f"{f'{size}x{size}/{pieces}p':<12} {n:>6} {msr:>8.2f} {mepl:>8.2f} {mrew:>9.3f}"
        )
    n, msr, mepl, mrew = stats(list(evaluation.results))
    lines.append(f"{'overall':<12} {n:>6} {msr:>8.2f} {mepl:>8.2f} {mrew:>9.3f}")
    return "\n".join(lines)


def write_figures(evaluation: Evaluation, out_dir: str | Path) -> list[Path]:
    """Episode-length histogram and per-config success bars, as PNG files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(7, 4))
    steps = [row.steps for row in evaluation.results]
    ax.hist(steps, bins=range(0, T_MAX + 2, 2), color="#4878cf", edgecolor="white")
    ax.set_xlabel("episode length (steps)")
    ax.set_ylabel("episodes")
    ax.set_title(
        f"Episode lengths: {evaluation.follower or 'unnamed'}"
        f" ({'with' if evaluation.feedback else 'no'} feedback, {evaluation.order})"
    )
    fig.tight_layout()
    path = out / "episode_lengths.png"
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    groups = _config_groups(evaluation)
    labels = [f"{size}x{size}/{pieces}p" for size, pieces in groups]
    values = [
        100.0 * sum(1 for r in rows if r.status == "correct") / len(rows)
        for rows in groups.values()
    ]
    ax.bar(labels, values, color="#6acc64", edgecolor="white")
    ax.set_ylim(0, 100)
    ax.set_ylabel("mSR (%)")
    ax.set_title("Success rate by configuration")
    for index, value in enumerate(values):
        ax.text(index, value + 1, f"{value:.1f}", ha="center", fontsize=8)
    fig.tight_layout()
    path = out / "success_by_config.png"
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    written.append(path)

    return written


def board_image(task: Task, scale: int = 16) -> np.ndarray:
    """Full-board RGB image of a task's start state, integer-upscaled."""
    board = build_board(task)
    start = (task.size // 2, task.size // 2)
    image = render(board, GripperState(start, ()))
    return np.repeat(np.repeat(image, scale, axis=0), scale, axis=1)


def save_board_png(task: Task, path: str | Path, scale: int = 16) -> None:
    """Write a task's start state as a PNG with byte-stable output."""
    Image.fromarray(board_image(task, scale)).save(path, format="PNG")
