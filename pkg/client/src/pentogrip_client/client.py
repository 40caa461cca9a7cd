"""TCP client presenting the remote game as a reset/step environment.

Speaks the server's newline-delimited JSON protocol (protocol version 1,
see the server's PROTOCOL.md) and nothing else — observation and reward
semantics come entirely from the server. One :class:`RemoteEnv` is one
session; run N independent handles for vectorized collection.
"""

from __future__ import annotations

import json
import socket
from typing import Any, Iterator, NamedTuple

import numpy as np

PROTOCOL_VERSION = 1
DEFAULT_PORT = 7481

ACTION_NAMES = ("LEFT", "RIGHT", "UP", "DOWN", "WAIT", "GRIP")
N_ACTIONS = len(ACTION_NAMES)

VIEW_SHAPE = (11, 11, 3)
TOKEN_LENGTH = 11


class RemoteError(Exception):
    """The server answered with an error reply."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class DesyncError(Exception):
    """The server's step counter diverged from the client's."""


class Observation(NamedTuple):
    """One observation: pixels, position, and the teacher's words."""

    view: np.ndarray  # (11, 11, 3) uint8
    coords: tuple[float, float]  # gripper position projected to [-1, 1]
    re: tuple[int, ...]  # instruction token ids, length 11
    fb: tuple[int, ...]  # feedback token ids, length 11 (all zero = silent)


class RemoteEnv:
    """A remote episode runner with ``reset()`` / ``step(action)``.

    Connects on construction, performs the protocol handshake, and opens
    one session. Transport failures raise :class:`ConnectionError` (or the
    underlying ``OSError``); error replies raise :class:`RemoteError`
    carrying the server's error code.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        order: str = "PCS",
        feedback: bool = True,
        timeout: float = 30.0,
    ):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._sock.settimeout(timeout)
        self._file = self._sock.makefile("rwb")
        self._session: str | None = None
        self._t = -1
        self._done = True

        welcome = self._request({"type": "hello"})
        if welcome.get("protocol") != PROTOCOL_VERSION:
            raise RemoteError(
                "CLIENT_PROTOCOL",
                f"server speaks protocol {welcome.get('protocol')}, need {PROTOCOL_VERSION}",
            )
        reply = self._request(
            {"type": "new_session", "mode": "agent", "order": order, "feedback": feedback}
        )
        self._session = reply["session"]

    # ------------------------------------------------------------ transport

    def _request(self, msg: dict[str, Any]) -> dict[str, Any]:
        self._file.write(json.dumps(msg, separators=(",", ":")).encode("utf-8") + b"\n")
        self._file.flush()
        line = self._file.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        reply: dict[str, Any] = json.loads(line)
        if reply.get("type") == "error":
            raise RemoteError(reply.get("code", "UNKNOWN"), reply.get("message", ""))
        return reply

    # ----------------------------------------------------------------- api

    def reset(
        self,
        *,
        split: str | None = None,
        index: int | None = None,
        task: dict[str, Any] | None = None,
        size: int = 20,
        pieces: int = 8,
        seed: int | None = None,
        symbol: tuple[str, str, str] | None = None,
    ) -> Observation:
        """Start an episode and return its first observation.

        Pass ``task`` (an inline task payload), or ``split`` and ``index``
        (a benchmark row; the server must have task files), or neither to
        have the server generate a task from ``size``/``pieces``/``seed``/
        ``symbol``.
        """
        if self._session is None:
            raise RemoteError("CLIENT_CLOSED", "environment is closed")
        msg: dict[str, Any] = {"type": "reset", "session": self._session}
        if task is not None:
            msg["task"] = task
        elif split is not None:
            if index is None:
                raise ValueError("reset(split=...) needs index=")
            msg["task_ref"] = {"split": split, "index": index}
        else:
            generate: dict[str, Any] = {"size": size, "pieces": pieces}
            if seed is not None:
                generate["seed"] = seed
            if symbol is not None:
                generate["symbol"] = list(symbol)
            msg["generate"] = generate
        reply = self._request(msg)
        obs = self._parse_observation(reply)
        self._t = reply["obs"]["t"]
        if self._t != 0:
            raise DesyncError(f"reset returned t={self._t}")
        self._done = False
        self._task_id = reply["task_id"]
        return obs

    def step(self, action: int | str) -> tuple[Observation, float, bool, dict[str, Any]]:
        """Apply one action; returns ``(observation, reward, done, info)``."""
        if self._session is None:
            raise RemoteError("CLIENT_CLOSED", "environment is closed")
        reply = self._request({"type": "step", "session": self._session, "action": action})
        obs = self._parse_observation(reply)
        t = reply["obs"]["t"]
        if t != self._t + 1:
            raise DesyncError(f"server at t={t}, client at t={self._t}")
        self._t = t
        self._done = reply["done"]
        info = {
            "t": t,
            "task_id": reply["task_id"],
            "re_text": reply["obs"]["re"]["text"],
            "fb_text": reply["obs"]["fb"]["text"],
            "outcome": reply["outcome"],
        }
        return obs, float(reply["reward"]), bool(reply["done"]), info

    def close(self) -> None:
        """Close the session and the connection. Safe to call twice."""
        if self._session is not None:
            try:
                self._request({"type": "close", "session": self._session})
            except (OSError, RemoteError):
                pass
            self._session = None
        try:
            self._file.close()
            self._sock.close()
        except OSError:
            pass

    @property
    def done(self) -> bool:
        return self._done

    @property
    def t(self) -> int:
        return self._t

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def __iter__(self) -> Iterator[None]:  # pragma: no cover - guard against misuse
        raise TypeError("RemoteEnv is not iterable; call reset()/step()")

    # ------------------------------------------------------------- parsing

    @staticmethod
    def _parse_observation(reply: dict[str, Any]) -> Observation:
        if reply.get("type") != "observation":
            raise RemoteError("CLIENT_PROTOCOL", f"expected observation, got {reply.get('type')}")
        payload = reply["obs"]
        view = np.asarray(payload["view"], dtype=np.uint8)
        if view.shape != VIEW_SHAPE:
            raise RemoteError("CLIENT_PROTOCOL", f"view shape {view.shape} != {VIEW_SHAPE}")
        coords = (float(payload["coords"][0]), float(payload["coords"][1]))
        re_tokens = tuple(int(i) for i in payload["re"]["tokens"])
        fb_tokens = tuple(int(i) for i in payload["fb"]["tokens"])
        if len(re_tokens) != TOKEN_LENGTH or len(fb_tokens) != TOKEN_LENGTH:
            raise RemoteError("CLIENT_PROTOCOL", "token rows must be 11 ids long")
        return Observation(view, coords, re_tokens, fb_tokens)
