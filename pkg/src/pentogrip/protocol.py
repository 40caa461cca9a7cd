"""Wire protocol: line-delimited JSON messages shared by server and clients.

Every message is one JSON object per line with a ``type`` field.  Requests
are ``hello``, ``new_session``, ``reset``, ``step``, ``render_request`` and
``close``; replies are ``welcome``, ``session``, ``observation``, ``frame``
and ``closed``.  Human-mode sessions additionally receive pushed ``frame``,
``utterance`` and ``outcome`` events after each transition.  Failures are
``error`` replies with a stable machine-readable ``code``; they never tear
down the session.

The view travels as nested integer rows (height x width x rgb), never as
an image blob, so any client language can parse it losslessly.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .board import Board, GripperState, render
from .env import Action, EpisodeOutcome, Observation

PROTOCOL_VERSION = 1
SERVICE_NAME = "pentogrip"

# Error codes carried in `error` replies.
MALFORMED = "MALFORMED"
UNKNOWN_TYPE = "UNKNOWN_TYPE"
UNKNOWN_SESSION = "UNKNOWN_SESSION"
NO_EPISODE = "NO_EPISODE"
EPISODE_DONE = "EPISODE_DONE"
BAD_TASK = "BAD_TASK"
BAD_ACTION = "BAD_ACTION"
INTERNAL = "INTERNAL"

REQUEST_TYPES = ("hello", "new_session", "reset", "step", "render_request", "close")
REPLY_TYPES = ("welcome", "session", "observation", "frame", "closed", "error")
EVENT_TYPES = ("frame", "utterance", "outcome")

ACTION_NAMES = tuple(action.name for action in Action)


class ProtocolError(Exception):
    """A request that cannot be honored; carries a stable error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def encode(message: dict[str, Any]) -> str:
    """One message as one compact JSON line (no trailing newline)."""
    return json.dumps(message, separators=(",", ":"))


def decode(line: str | bytes) -> dict[str, Any]:
    """Parse one line into a message dict.

    Raises:
        ProtocolError: with code MALFORMED if the line is not a JSON object
            with a string ``type`` field.
    """
    try:
        message = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(MALFORMED, f"not valid JSON: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError(MALFORMED, "message must be a JSON object")
    if not isinstance(message.get("type"), str):
        raise ProtocolError(MALFORMED, "message needs a string 'type' field")
    return message


def parse_action(value: Any) -> Action:
    """Accept an action as an integer value or a name like ``"GRIP"``."""
    if isinstance(value, bool):
        raise ProtocolError(BAD_ACTION, f"not an action: {value!r}")
    if isinstance(value, int):
        try:
            return Action(value)
        except ValueError:
            raise ProtocolError(BAD_ACTION, f"action value out of range: {value}") from None
    if isinstance(value, str):
        try:
            return Action[value.upper()]
        except KeyError:
            raise ProtocolError(BAD_ACTION, f"unknown action name: {value!r}") from None
    raise ProtocolError(BAD_ACTION, f"not an action: {value!r}")


# --------------------------------------------------------------------------
# Payload builders (server side).


def observation_payload(obs: Observation, include_view: bool = True) -> dict[str, Any]:
    view = obs.view.tolist() if include_view else None
    return {
        "view": view,
        "coords": [obs.coords[0], obs.coords[1]],
        "re": {"text": obs.re_text, "tokens": list(obs.re_tokens)},
        "fb": {"text": obs.fb_text, "tokens": list(obs.fb_tokens)},
        "t": obs.t,
    }


def outcome_payload(outcome: EpisodeOutcome | None) -> dict[str, Any] | None:
    if outcome is None:
        return None
    return {
        "status": outcome.status.value,
        "steps": outcome.steps,
        "reward": outcome.reward,
    }


def frame_payload(board: Board, gripper: GripperState) -> dict[str, Any]:
    image: np.ndarray = render(board, gripper)
    return {
        "width": board.width,
        "height": board.height,
        "image": image.tolist(),
        "gripper": [gripper.position[0], gripper.position[1]],
    }


def welcome_message() -> dict[str, Any]:
    from . import __version__

    return {
        "type": "welcome",
        "service": SERVICE_NAME,
        "protocol": PROTOCOL_VERSION,
        "version": __version__,
        "actions": list(ACTION_NAMES),
    }


def error_message(code: str, text: str, session: str | None = None) -> dict[str, Any]:
    message: dict[str, Any] = {"type": "error", "code": code, "message": text}
    if session is not None:
        message["session"] = session
    return message
