"""Shortest-path solver, scripted followers, and the evaluation harness.

The solver breadth-first-searches the board from the start tile to the
nearest tile of the target piece; pieces are traversable, so the clamping
board edge is the only constraint.  Scripted followers provide calibration
baselines: an optimal path executor, a feedback-driven walker that acts on
observations alone, a uniform-random agent and an all-wait agent.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .board import COLOR_RGB
from .env import Action, GripEnv, Observation, Status
from .tasks import DEFAULT_SEED, Task, build_board

Follower = Callable[[Observation], Action]
FollowerFactory = Callable[[Task, random.Random], Follower]


class OracleError(Exception):
    """Raised when the solver cannot reach the target (broken board)."""


_MOVES = (
    (Action.LEFT, -1, 0),
    (Action.RIGHT, 1, 0),
    (Action.UP, 0, -1),
    (Action.DOWN, 0, 1),
)


def shortest_path_actions(task: Task) -> list[Action]:
    """Breadth-first action sequence from the start onto the target piece.

    Expansion order is fixed (left, right, up, down), so the returned path
    is deterministic, not merely minimal.
    """
    board = build_board(task)
    goal = set(board.pieces[task.target_id].tiles)
    start = (task.size // 2, task.size // 2)
    if start in goal:
        return []
    parents: dict[tuple[int, int], tuple[tuple[int, int], Action]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        pos = queue.popleft()
        if pos in goal:
            actions: list[Action] = []
            while pos != start:
                pos, action = parents[pos]
                actions.append(action)
            actions.reverse()
            return actions
        x, y = pos
        for action, dx, dy in _MOVES:
            nxt = (x + dx, y + dy)
            if 0 <= nxt[0] < task.size and 0 <= nxt[1] < task.size and nxt not in seen:
                seen.add(nxt)
                parents[nxt] = (pos, action)
                queue.append(nxt)
    raise OracleError(f"task {task.id}: target unreachable from {start}")


def shortest_episode(task: Task) -> int:
    """Minimum number of steps to end the episode correctly (path + grip)."""
    return len(shortest_path_actions(task)) + 1


def shortest_path_follower(task: Task, rng: random.Random) -> Follower:
    """Scripted optimal follower: walk the solver's path, then grip."""
    script: Iterator[Action] = iter(shortest_path_actions(task) + [Action.GRIP])

    def follower(obs: Observation) -> Action:
        return next(script, Action.WAIT)

    return follower


_CLOCKWISE = (Action.UP, Action.RIGHT, Action.DOWN, Action.LEFT)
_HEADING_DELTAS = ((0, -1), (1, 0), (0, 1), (-1, 0))
_ACTION_DELTAS = {
    Action.UP: (0, -1),
    Action.RIGHT: (1, 0),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
}


def _third_bounds(third: int, extent: int) -> tuple[int, int]:
    """Inclusive coordinate range of one third of an axis."""
    lo = -(-third * extent // 3)
    hi = extent - 1 if third == 2 else -(-(third + 1) * extent // 3) - 1
    return lo, hi


def _region_words(text: str) -> tuple[int | None, int | None]:
    """Thirds named by an instruction's position words, if any."""
    words = set(text.lower().split())
    col = 0 if "left" in words else 2 if "right" in words else None
    row = 0 if "top" in words else 2 if "bottom" in words else None
    if col is None and row is None:
        return None, None
    return (1 if col is None else col), (1 if row is None else row)


class FeedbackFollower:
    """Observation-only walker steered by the teacher's utterances.

    The follower never touches the task description: it reconstructs its
    board position from the observed normalized coordinates (the board
    size follows from one move's coordinate delta), reads the instruction
    text for position and color words, and scans its own 11x11 view for
    piece-colored pixels.  It walks toward the announced area, then keeps
    a persistent heading that bounces off the area's bounds, chasing any
    sighted candidate pixels on the way.

    Teacher utterances steer it: positive piece feedback grips; negative
    piece feedback marks the tiles around the contact as not-the-target
    and walks on; negative direction feedback rotates the heading
    clockwise and abandons the current chase; positive direction feedback
    keeps the course; a repeated instruction -- recognizably the initial
    expression again -- re-randomizes the heading.  Hitting the board edge
    (coordinates unchanged after a move) also rotates.  Without feedback
    the grip cue never arrives, so every episode runs into the timeout.
    """

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._heading = rng.randrange(4)
        self._size: int | None = None
        self._parsed = False
        self._color: tuple[int, int, int] | None = None
        self._thirds: tuple[int | None, int | None] = (None, None)
        self._box: tuple[int, int, int, int] | None = None
        self._blacklist: set[tuple[int, int]] = set()
        self._visits: dict[tuple[int, int], int] = {}
        self._chase: tuple[int, int] | None = None
        self._verdict_tile: tuple[int, int] | None = None
        self._last_coords: tuple[float, float] | None = None
        self._moved_last = False

    # -- observation decoding ------------------------------------------------

    def _parse(self, obs: Observation) -> None:
        self._parsed = True
        words = set(obs.re_text.lower().split())
        for color, rgb in COLOR_RGB.items():
            if color.value in words:
                self._color = rgb
                break
        self._thirds = _region_words(obs.re_text)

    def _locate(self, obs: Observation) -> tuple[int, int] | None:
        """Absolute tile from normalized coordinates, once the size is known."""
        if self._size is None:
            if self._last_coords is not None and obs.coords != self._last_coords:
                delta = max(
                    abs(obs.coords[0] - self._last_coords[0]),
                    abs(obs.coords[1] - self._last_coords[1]),
                )
                self._size = round(2.0 / delta)
                if self._thirds != (None, None):
                    cx, cy = self._thirds
                    assert cx is not None and cy is not None
                    x0, x1 = _third_bounds(cx, self._size)
                    y0, y1 = _third_bounds(cy, self._size)
                else:
                    x0 = y0 = 0
                    x1 = y1 = self._size - 1
                self._box = (x0, y0, x1, y1)
            else:
                return None
        half = self._size / 2.0
        return (
            round((obs.coords[0] + 1.0) * half),
            round((obs.coords[1] + 1.0) * half),
        )

    def _sightings(self, obs: Observation, pos: tuple[int, int]) -> tuple[int, int] | None:
        """Nearest unexplained piece-colored view pixel, as an absolute tile.

        Background, padding and the trail are all achromatic, so chromatic
        pixels are exactly the visible piece tiles.  Sightings outside the
        announced area (plus the two tiles a piece may protrude) are not
        worth visiting and are skipped.
        """
        view = obs.view
        if self._color is not None:
            mask = (
                (view[:, :, 0] == self._color[0])
                & (view[:, :, 1] == self._color[1])
                & (view[:, :, 2] == self._color[2])
            )
        else:
            mask = (view[:, :, 0] != view[:, :, 1]) | (view[:, :, 1] != view[:, :, 2])
        rows, cols = np.nonzero(mask)
        if rows.size == 0:
            return None
        x, y = pos
        assert self._box is not None
        x0, y0, x1, y1 = self._box
        best: tuple[int, int, int] | None = None
        for r, c in zip(rows.tolist(), cols.tolist()):
            tile = (x + c - 5, y + r - 5)
            if tile == pos or tile in self._blacklist:
                continue
            if not (x0 - 2 <= tile[0] <= x1 + 2 and y0 - 2 <= tile[1] <= y1 + 2):
                continue
            key = (abs(tile[0] - x) + abs(tile[1] - y), tile[1], tile[0])
            if best is None or key < best:
                best = key
        if best is None:
            return None
        return (best[2], best[1])

    # -- movement ------------------------------------------------------------

    def _toward(self, pos: tuple[int, int], goal: tuple[int, int]) -> Action:
        dx, dy = goal[0] - pos[0], goal[1] - pos[1]
        if abs(dx) >= abs(dy):
            return Action.RIGHT if dx > 0 else Action.LEFT
        return Action.DOWN if dy > 0 else Action.UP

    def _explore(self, pos: tuple[int, int]) -> Action:
        """Sweep the announced area: persistent heading, fresh tiles first.

        Preferring the least-visited in-bounds neighbor (ties broken by
        keeping the current heading, then clockwise) cannot settle into a
        loop before the whole area has been swept, unlike a plain bounce
        walk; known-bad tiles are avoided while anything else is open.
        """
        assert self._box is not None
        x0, y0, x1, y1 = self._box
        best: tuple[int, int, int, int] | None = None
        for turn in range(4):
            heading = (self._heading + turn) % 4
            dx, dy = _HEADING_DELTAS[heading]
            nxt = (pos[0] + dx, pos[1] + dy)
            if not (x0 <= nxt[0] <= x1 and y0 <= nxt[1] <= y1):
                continue
            key = (nxt in self._blacklist, self._visits.get(nxt, 0), turn, heading)
            if best is None or key < best:
                best = key
        if best is None:
            return _CLOCKWISE[self._heading]
        self._heading = best[3]
        return _CLOCKWISE[self._heading]

    def _record(self, obs: Observation, action: Action) -> Action:
        self._last_coords = obs.coords
        self._moved_last = action not in (Action.WAIT, Action.GRIP)
        return action

    def __call__(self, obs: Observation) -> Action:
        if not self._parsed:
            self._parse(obs)
        fb = obs.fb_text
        if fb == "Yes this piece":
            return self._record(obs, Action.GRIP)
        pos = self._locate(obs)
        piece_verdict = fb in ("Not this piece", "Yes this piece")
        if fb == "Not this piece" and pos is not None:
            for ddx in (-1, 0, 1):
                for ddy in (-1, 0, 1):
                    self._blacklist.add((pos[0] + ddx, pos[1] + ddy))
            self._chase = None
        elif fb == "Not this way":
            self._heading = (self._heading + 1) % 4
            self._chase = None
        elif fb and fb == obs.re_text:
            self._heading = self._rng.randrange(4)
            self._chase = None
        # A chase that reached its tile without any piece verdict (feedback
        # off) marks the tile dead so the walk cannot orbit one sighting.
        if self._verdict_tile is not None:
            if not piece_verdict:
                self._blacklist.add(self._verdict_tile)
                if self._chase == self._verdict_tile:
                    self._chase = None
            self._verdict_tile = None
        if self._moved_last and obs.coords == self._last_coords:
            self._heading = (self._heading + 1) % 4
        if pos is None:
            return self._record(obs, _CLOCKWISE[self._heading])
        self._visits[pos] = self._visits.get(pos, 0) + 1
        if self._chase is not None and (
            self._chase in self._blacklist or self._chase == pos
        ):
            self._chase = None
        sighting = self._sightings(obs, pos)
        if self._chase is None and sighting is not None:
            self._chase = sighting
        if self._chase is not None:
            action = self._toward(pos, self._chase)
            dx, dy = _ACTION_DELTAS[action]
            if (pos[0] + dx, pos[1] + dy) == self._chase:
                self._verdict_tile = self._chase
            return self._record(obs, action)
        assert self._box is not None
        x0, y0, x1, y1 = self._box
        if not (x0 <= pos[0] <= x1 and y0 <= pos[1] <= y1):
            return self._record(obs, self._toward(pos, ((x0 + x1) // 2, (y0 + y1) // 2)))
        return self._record(obs, self._explore(pos))


def feedback_follower(task: Task, rng: random.Random) -> Follower:
    """Factory for :class:`FeedbackFollower`; ignores the task entirely."""
    return FeedbackFollower(rng)


def wait_follower(task: Task, rng: random.Random) -> Follower:
    """Does nothing until the episode times out."""
    return lambda obs: Action.WAIT


def random_follower(task: Task, rng: random.Random) -> Follower:
    """Uniform over all six actions; grips blindly."""
    return lambda obs: Action(rng.randrange(6))


FOLLOWERS: dict[str, FollowerFactory] = {
    "shortest-path": shortest_path_follower,
    "feedback": feedback_follower,
    "random": random_follower,
    "wait": wait_follower,
}


@dataclass(frozen=True, slots=True)
class TaskResult:
    """Outcome of one evaluated episode."""

    task_id: str
    size: int
    n_pieces: int
    status: str
    steps: int
    reward: float


@dataclass(frozen=True, slots=True)
class Evaluation:
    """Aggregate metrics over a task set; msr is a fraction in [0, 1]."""

    follower: str
    order: str
    feedback: bool
    n_tasks: int
    msr: float
    mepl: float
    mean_reward: float
    results: tuple[TaskResult, ...]


def run_episode(env: GripEnv, follower: Follower):
    """Drive one episode to termination and return its outcome."""
    obs = env.reset()
    while not env.done:
        obs, _, _, _ = env.step(follower(obs))
    assert env.outcome is not None
    return env.outcome


def evaluate(
    follower_factory: FollowerFactory,
    tasks: list[Task],
    *,
    order: str = "PCS",
    feedback_enabled: bool = True,
    seed: int = DEFAULT_SEED,
    name: str = "",
) -> Evaluation:
    """Run one episode per task and aggregate mSR and mEPL.

    Each task gets its own rng keyed by task id, so results do not depend
    on the iteration order and re-running any subset reproduces its rows.
    """
    if not tasks:
        raise ValueError("cannot evaluate an empty task set")
    results = []
    for task in tasks:
        env = GripEnv(task, order=order, feedback_enabled=feedback_enabled)
        follower = follower_factory(task, random.Random(f"{seed}/eval/{task.id}"))
        outcome = run_episode(env, follower)
        results.append(
            TaskResult(
                task.id,
                task.size,
                len(task.pieces),
                outcome.status.value,
                outcome.steps,
                outcome.reward,
            )
        )
    n = len(results)
    correct = sum(1 for r in results if r.status == Status.CORRECT.value)
    return Evaluation(
        follower=name,
        order=order,
        feedback=feedback_enabled,
        n_tasks=n,
        msr=correct / n,
        mepl=sum(r.steps for r in results) / n,
        mean_reward=sum(r.reward for r in results) / n,
        results=tuple(results),
    )
