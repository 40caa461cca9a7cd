"""Episode state machine: actions, transitions, reward and observations.

One :class:`GripEnv` drives one task.  The follower moves a gripper one
tile per step (clamped at the board edge), may wait, and ends the episode
by gripping while on a piece tile.  Reward is sparse: zero everywhere
except the terminal step, where it is ``1 - 0.9 * (T / 100)`` plus one for
the correct piece or minus one for a wrong piece or no piece at all.

Episodes are fully deterministic: the observation stream is a pure
function of (task, preference order, feedback flag, action sequence),
which the trajectory log format at the bottom of this module exploits for
byte-exact replay verification.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable

import numpy as np

from . import language
from .board import (
    TRAIL_RGB,
    VIEW_RADIUS,
    VIEW_SIZE,
    Board,
    CenterRegionError,
    GripperState,
    Piece,
    PlacementError,
    region_of,
)
from .language import TeacherState, Utterance, feedback, make_teacher, parse_order
from .tasks import Task, build_board, task_from_payload, task_to_payload

T_MAX = 100

TRAJECTORY_FORMAT = "pentogrip.trajectory"
TRAJECTORY_VERSION = 1


class EnvError(Exception):
    """Base class for episode errors."""


class InvalidTaskError(EnvError):
    """Raised when a task cannot produce a valid board."""


class EpisodeDoneError(EnvError):
    """Raised when stepping an episode that already terminated."""


class Action(IntEnum):
    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3
    WAIT = 4
    GRIP = 5


# Indexed by action value; WAIT and GRIP do not move the gripper.
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0), (0, 0))

ACTION_NAMES = tuple(a.name for a in Action)


class Status(str, Enum):
    CORRECT = "correct"
    WRONG = "wrong"
    TIMEOUT = "timeout"


@dataclass(frozen=True, slots=True)
class EpisodeOutcome:
    status: Status
    steps: int
    reward: float


@dataclass(slots=True)
class Observation:
    """What the follower sees after a step (and at reset)."""

    view: np.ndarray
    coords: tuple[float, float]
    re_tokens: tuple[int, ...]
    fb_tokens: tuple[int, ...]
    t: int
    re_text: str
    fb_text: str


def terminal_reward(steps: int, correct: bool) -> float:
    """Sparse terminal reward; exact decimals via integer arithmetic."""
    bonus = 1000 if correct else -1000
    return (1000 - 9 * steps + bonus) / 1000.0


def observation_digest(obs: Observation) -> str:
    """Stable hash over every observation field, for replay verification."""
    h = hashlib.sha256()
    h.update(obs.view.tobytes())
    h.update(struct.pack("<dd", *obs.coords))
    h.update(bytes(obs.re_tokens))
    h.update(bytes(obs.fb_tokens))
    h.update(struct.pack("<i", obs.t))
    return h.hexdigest()


class GripEnv:
    """One episode of the gripper game for a fixed task."""

    def __init__(self, task: Task, order: str = "PCS", feedback_enabled: bool = True):
        self.task = task
        self.order_code = order.replace("-", "").upper()
        self.order = parse_order(order)
        self.feedback_enabled = feedback_enabled
        try:
            self.board: Board = build_board(task)
        except PlacementError as exc:
            raise InvalidTaskError(str(exc)) from exc
        if task.target_id not in self.board.pieces:
            raise InvalidTaskError(f"task {task.id}: target {task.target_id} missing")
        for piece in self.board.pieces.values():
            try:
                actual = region_of(piece, self.board.width, self.board.height)
            except CenterRegionError as exc:
                raise InvalidTaskError(f"task {task.id}: {exc}") from exc
            if actual is not piece.symbol.region:
                raise InvalidTaskError(
                    f"task {task.id}: piece {piece.id} declared in"
                    f" '{piece.symbol.region.value}' but sits in '{actual.value}'"
                )
        self.target: Piece = self.board.pieces[task.target_id]
        self._grid = self.board._grid
        self._width = self.board.width
        self._height = self.board.height
        self._start = (self._width // 2, self._height // 2)
        self.t = 0
        self.done = False
        self.outcome: EpisodeOutcome | None = None
        self.teacher: TeacherState | None = None
        self.last_utterance: Utterance | None = None
        self._pos = self._start
        self._hist: tuple[tuple[int, int], ...] = ()
        self._re_text = ""
        self._re_tokens = language.EMPTY_TOKENS
        self._base = self.board.base_image()

    def reset(self) -> Observation:
        """Start (or restart) the episode and return the first observation."""
        self.t = 0
        self.done = False
        self.outcome = None
        self._pos = self._start
        self._hist = ()
        distractors = [
            p.symbol for p in self.board.pieces.values() if p.id != self.target.id
        ]
        self.teacher = make_teacher(
            self.target.symbol,
            distractors,
            self.order,
            self._start,
            self.feedback_enabled,
        )
        self._re_text = self.teacher.initial_re.text
        self._re_tokens = self.teacher.initial_re.tokens
        self.last_utterance = self.teacher.initial_re
        return self._observe(None)

    def step(self, action: Action) -> tuple[Observation, float, bool, dict]:
        """Apply one action; returns (observation, reward, done, info)."""
        if self.done:
            raise EpisodeDoneError("episode already terminated")
        if self.teacher is None:
            raise EnvError("call reset() before step()")
        x, y = self._pos
        self._hist = (self._pos,) + self._hist[:1]
        dx, dy = _DELTAS[action]
        if dx or dy:
            nx, ny = x + dx, y + dy
            if 0 <= nx < self._width and 0 <= ny < self._height:
                self._pos = (nx, ny)
                x, y = nx, ny
        self.t += 1

        pid = self._grid[y * self._width + x]
        over = pid if pid >= 0 else None

        reward = 0.0
        # A grip on a piece decides the episode even on the very last step.
        if action == Action.GRIP and over is not None:
            status = Status.CORRECT if over == self.target.id else Status.WRONG
            reward = self._finish(status)
        elif self.t >= T_MAX:
            reward = self._finish(Status.TIMEOUT)

        utterance = feedback(self.teacher, self._pos, over, self.target)
        self.last_utterance = utterance
        obs = self._observe(utterance)
        info = {
            "gripper": self._pos,
            "fb_text": obs.fb_text,
            "outcome": self.outcome,
        }
        return obs, reward, self.done, info

    def _finish(self, status: Status) -> float:
        self.done = True
        reward = terminal_reward(self.t, status is Status.CORRECT)
        self.outcome = EpisodeOutcome(status, self.t, reward)
        return reward

    def _observe(self, utterance: Utterance | None) -> Observation:
        x, y = self._pos
        view = np.zeros((VIEW_SIZE, VIEW_SIZE, 3), dtype=np.uint8)
        sx0 = x - VIEW_RADIUS
        sy0 = y - VIEW_RADIUS
        cx0, cx1 = max(0, sx0), min(self._width, x + VIEW_RADIUS + 1)
        cy0, cy1 = max(0, sy0), min(self._height, y + VIEW_RADIUS + 1)
        view[cy0 - sy0 : cy1 - sy0, cx0 - sx0 : cx1 - sx0] = self._base[
            cy0:cy1, cx0:cx1
        ]
        # The trail never escapes the view: history lags the gripper by at
        # most two tiles while the view radius is five.
        trail = (self._pos,) + self._hist
        for i in range(len(trail) - 1, -1, -1):
            tx, ty = trail[i]
            view[ty - sy0, tx - sx0] = TRAIL_RGB[i]
        coords = (2.0 * x / self._width - 1.0, 2.0 * y / self._height - 1.0)
        if utterance is None:
            fb_tokens, fb_text = language.EMPTY_TOKENS, ""
        else:
            fb_tokens, fb_text = utterance.tokens, utterance.text
        return Observation(
            view, coords, self._re_tokens, fb_tokens, self.t, self._re_text, fb_text
        )

    def gripper(self) -> GripperState:
        """Snapshot of the gripper for full-board rendering."""
        return GripperState(self._pos, self._hist)


# --------------------------------------------------------------------------
# Trajectory logs: one JSON header line, then one JSON record per step.


def _step_line(action: Action | None, obs: Observation, gripper: tuple[int, int],
                reward: float, done: bool) -> str:
    record = {
        "t": obs.t,
        "action": None if action is None else action.name,
        "gripper": list(gripper),
        "fb": obs.fb_text,
        "reward": reward,
        "done": done,
        "obs": observation_digest(obs),
    }
    return json.dumps(record, separators=(",", ":"))


def record_episode(env: GripEnv, actions: Iterable[Action], path: str) -> EpisodeOutcome:
    """Run ``actions`` through a fresh episode while logging every step."""
    obs = env.reset()
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": TRAJECTORY_FORMAT,
            "version": TRAJECTORY_VERSION,
            "task": task_to_payload(env.task),
            "order": env.order_code,
            "feedback": env.feedback_enabled,
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        fh.write(_step_line(None, obs, env._pos, 0.0, False) + "\n")
        for action in actions:
            obs, reward, done, info = env.step(action)
            fh.write(_step_line(action, obs, info["gripper"], reward, done) + "\n")
            if done:
                break
    if env.outcome is None:
        raise EnvError("episode did not terminate; log is partial")
    return env.outcome


@dataclass(frozen=True, slots=True)
class ReplayResult:
    match: bool
    steps: int
    detail: str


def replay_trajectory(path: str) -> ReplayResult:
    """Re-execute a trajectory log and verify byte-identical behaviour."""
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("format") != TRAJECTORY_FORMAT:
        return ReplayResult(False, 0, "not a trajectory log")
    header, records = lines[0], lines[1:]
    if not records:
        return ReplayResult(False, 0, "log has no step records")
    env = GripEnv(
        task_from_payload(header["task"]),
        order=header["order"],
        feedback_enabled=header["feedback"],
    )
    obs = env.reset()

    def mismatch(i: int, field: str, want, got) -> ReplayResult:
        return ReplayResult(False, i, f"step {i}: {field} mismatch ({want!r} != {got!r})")

    first = records[0]
    if first["obs"] != observation_digest(obs):
        return mismatch(0, "obs", first["obs"], observation_digest(obs))
    if first["fb"] != obs.fb_text:
        return mismatch(0, "fb", first["fb"], obs.fb_text)
    for i, rec in enumerate(records[1:], start=1):
        obs, reward, done, info = env.step(Action[rec["action"]])
        if tuple(rec["gripper"]) != info["gripper"]:
            return mismatch(i, "gripper", tuple(rec["gripper"]), info["gripper"])
        if rec["fb"] != obs.fb_text:
            return mismatch(i, "fb", rec["fb"], obs.fb_text)
        if rec["reward"] != reward:
            return mismatch(i, "reward", rec["reward"], reward)
        if rec["done"] != done:
            return mismatch(i, "done", rec["done"], done)
        if rec["obs"] != observation_digest(obs):
            return mismatch(i, "obs", rec["obs"], observation_digest(obs))
    return ReplayResult(True, len(records) - 1, "replay matches")
