"""Game service: sessions over TCP lines and WebSocket, plus static UI.

One :class:`GameService` holds all sessions and is transport-agnostic;
:func:`run_server` wires it to a line-delimited TCP listener for agents
and a WebSocket listener for the browser, both handling many connections
concurrently.  Messages within one session are serialized by a per-session
lock, so a session always sees a strictly ordered request stream no matter
how many connections address it.  Idle sessions are pruned by a janitor
thread after a configurable timeout, which doubles as the grace period for
dropped browser connections.
"""

from __future__ import annotations

import itertools
import logging
import mimetypes
import os
import random
import secrets
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from websockets.datastructures import Headers
from websockets.http11 import Response
from websockets.sync.server import serve as ws_serve

from . import protocol
from .env import EpisodeDoneError, GripEnv, InvalidTaskError
from .language import LanguageError, parse_order
from .protocol import ProtocolError
from .tasks import (
    DEFAULT_SEED,
    Task,
    TaskError,
    enumerate_symbols,
    generate_task,
    load_split,
    symbol_from_payload,
    task_from_payload,
)

log = logging.getLogger(__name__)

HOST_ENV_VAR = "PENTOGRIP_HOST"
DEFAULT_TCP_PORT = 7481
DEFAULT_SESSION_TIMEOUT = 300.0

_GENERATE_SIZES = (20, 30)
_MODES = ("agent", "human")


def default_host() -> str:
    return os.environ.get(HOST_ENV_VAR, "127.0.0.1")


@dataclass
class Session:
    id: str
    mode: str
    order: str
    feedback: bool
    env: GripEnv | None = None
    lock: threading.RLock = field(default_factory=threading.RLock)
    last_active: float = field(default_factory=time.monotonic)


class GameService:
    """All session state and message handling, independent of transport."""

    def __init__(
        self,
        tasks_dir: str | Path | None = None,
        seed: int = DEFAULT_SEED,
        session_timeout: float = DEFAULT_SESSION_TIMEOUT,
    ):
        self.tasks_dir = Path(tasks_dir) if tasks_dir is not None else None
        self.seed = seed
        self.session_timeout = session_timeout
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._split_cache: dict[str, list[Task]] = {}
        self._counter = itertools.count(1)

    # -- session bookkeeping -------------------------------------------------

    def _new_session(self, mode: str, order: str, feedback: bool) -> Session:
        session_id = f"s{next(self._counter):04d}-{secrets.token_hex(4)}"
        session = Session(session_id, mode, order, feedback)
        with self._lock:
            self._sessions[session_id] = session
        return session

    def _get_session(self, message: dict[str, Any]) -> Session:
        session_id = message.get("session")
        if not isinstance(session_id, str):
            raise ProtocolError(protocol.MALFORMED, "missing 'session' field")
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ProtocolError(protocol.UNKNOWN_SESSION, f"no such session: {session_id}")
        return session

    def session_count(self) -> int:
        with self._lock:
            return len(self._sessions)

    def prune_idle(self) -> int:
        """Drop sessions idle beyond the timeout; returns how many."""
        cutoff = time.monotonic() - self.session_timeout
        with self._lock:
            stale = [sid for sid, s in self._sessions.items() if s.last_active < cutoff]
            for sid in stale:
                del self._sessions[sid]
        return len(stale)

    # -- task resolution -----------------------------------------------------

    def _load_split(self, split: str) -> list[Task]:
        if self.tasks_dir is None:
            raise ProtocolError(
                protocol.BAD_TASK, "server was started without a task directory"
            )
        if split not in self._split_cache:
            try:
                self._split_cache[split] = load_split(self.tasks_dir, split)
            except (TaskError, OSError) as exc:
                raise ProtocolError(protocol.BAD_TASK, str(exc)) from exc
        return self._split_cache[split]

    def _resolve_task(self, message: dict[str, Any]) -> Task:
        sources = [key for key in ("task", "task_ref", "generate") if key in message]
        if len(sources) != 1:
            raise ProtocolError(
                protocol.MALFORMED,
                "reset needs exactly one of 'task', 'task_ref' or 'generate'",
            )
        if "task" in message:
            try:
                return task_from_payload(message["task"])
            except TaskError as exc:
                raise ProtocolError(protocol.BAD_TASK, str(exc)) from exc
        if "task_ref" in message:
            ref = message["task_ref"]
            if not isinstance(ref, dict):
                raise ProtocolError(protocol.MALFORMED, "'task_ref' must be an object")
            tasks = self._load_split(str(ref.get("split")))
            index = ref.get("index")
            if not isinstance(index, int) or isinstance(index, bool):
                raise ProtocolError(protocol.MALFORMED, "'task_ref.index' must be an integer")
            if not 0 <= index < len(tasks):
                raise ProtocolError(
                    protocol.BAD_TASK,
                    f"index {index} out of range for split of {len(tasks)} tasks",
                )
            return tasks[index]
        spec = message["generate"]
        if not isinstance(spec, dict):
            raise ProtocolError(protocol.MALFORMED, "'generate' must be an object")
        size = spec.get("size", 20)
        n_pieces = spec.get("pieces", 8)
        if size not in _GENERATE_SIZES:
            raise ProtocolError(protocol.BAD_TASK, f"size must be one of {_GENERATE_SIZES}")
        if not isinstance(n_pieces, int) or isinstance(n_pieces, bool) or not 1 <= n_pieces <= 18:
            raise ProtocolError(protocol.BAD_TASK, "pieces must be an integer in 1..18")
        seed = spec.get("seed")
        if seed is None:
            seed = next(self._counter)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ProtocolError(protocol.BAD_TASK, "seed must be an integer")
        rng = random.Random(f"{self.seed}/service/{seed}")
        try:
            if "symbol" in spec:
                symbol = symbol_from_payload(spec["symbol"])
            else:
                symbol = rng.choice(enumerate_symbols())
            return generate_task(
                symbol, size, n_pieces, rng,
                task_id=f"generated-{size}x{size}-{n_pieces}p-{seed}",
                seed=self.seed,
            )
        except (TaskError, ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(protocol.BAD_TASK, f"cannot generate task: {exc}") from exc

    # -- message handling ----------------------------------------------------

    def handle_line(self, line: str | bytes) -> list[dict[str, Any]]:
        """Decode and dispatch one request line; never raises."""
        try:
            message = protocol.decode(line)
        except ProtocolError as exc:
            return [protocol.error_message(exc.code, str(exc))]
        return self.handle(message)

    def handle(self, message: dict[str, Any]) -> list[dict[str, Any]]:
        """Dispatch one message; returns the reply plus any pushed events."""
        kind = message.get("type")
        session_id = message.get("session") if isinstance(message.get("session"), str) else None
        try:
            if kind == "hello":
                return [protocol.welcome_message()]
            if kind == "new_session":
                return self._handle_new_session(message)
            if kind in ("reset", "step", "render_request", "close"):
                session = self._get_session(message)
                with session.lock:
                    session.last_active = time.monotonic()
                    if kind == "reset":
                        return self._handle_reset(session, message)
                    if kind == "step":
                        return self._handle_step(session, message)
                    if kind == "render_request":
                        return self._handle_render(session)
                    return self._handle_close(session)
            raise ProtocolError(protocol.UNKNOWN_TYPE, f"unknown message type: {kind!r}")
        except ProtocolError as exc:
            return [protocol.error_message(exc.code, str(exc), session_id)]
        except Exception as exc:  # pragma: no cover - defensive guard
            log.exception("internal error handling %r", kind)
            return [protocol.error_message(protocol.INTERNAL, str(exc), session_id)]

    def _handle_new_session(self, message: dict[str, Any]) -> list[dict[str, Any]]:
        mode = message.get("mode", "agent")
        if mode not in _MODES:
            raise ProtocolError(protocol.MALFORMED, f"mode must be one of {_MODES}")
        order = message.get("order", "PCS")
        try:
            parse_order(str(order))
        except ValueError as exc:
            raise ProtocolError(protocol.MALFORMED, str(exc)) from exc
        feedback = message.get("feedback", True)
        if not isinstance(feedback, bool):
            raise ProtocolError(protocol.MALFORMED, "'feedback' must be a boolean")
        session = self._new_session(mode, str(order), feedback)
        return [
            {
                "type": "session",
                "session": session.id,
                "mode": session.mode,
                "order": session.order,
                "feedback": session.feedback,
                "actions": list(protocol.ACTION_NAMES),
            }
        ]

    def _events(self, session: Session) -> list[dict[str, Any]]:
        """Pushed events for human sessions: frame, utterance, outcome."""
        if session.mode != "human" or session.env is None:
            return []
        env = session.env
        events: list[dict[str, Any]] = []
        frame = protocol.frame_payload(env.board, env.gripper())
        frame.update({"type": "frame", "session": session.id, "t": env.t})
        events.append(frame)
        if env.last_utterance is not None:
            events.append(
                {
                    "type": "utterance",
                    "session": session.id,
                    "kind": env.last_utterance.kind.value,
                    "text": env.last_utterance.text,
                    "tokens": list(env.last_utterance.tokens),
                    "t": env.t,
                }
            )
        if env.outcome is not None:
            outcome = protocol.outcome_payload(env.outcome)
            assert outcome is not None
            outcome.update({"type": "outcome", "session": session.id})
            events.append(outcome)
        return events

    def _observation_reply(
        self, session: Session, obs, reward: float, done: bool
    ) -> dict[str, Any]:
        env = session.env
        assert env is not None
        return {
            "type": "observation",
            "session": session.id,
            "task_id": env.task.id,
            "obs": protocol.observation_payload(obs, include_view=session.mode == "agent"),
            "reward": reward,
            "done": done,
            "outcome": protocol.outcome_payload(env.outcome),
        }

    def _handle_reset(self, session: Session, message: dict[str, Any]) -> list[dict[str, Any]]:
        task = self._resolve_task(message)
        try:
            env = GripEnv(task, order=session.order, feedback_enabled=session.feedback)
        except (InvalidTaskError, LanguageError) as exc:
            raise ProtocolError(protocol.BAD_TASK, str(exc)) from exc
        obs = env.reset()
        session.env = env
        reply = self._observation_reply(session, obs, 0.0, False)
        return self._events(session) + [reply]

    def _handle_step(self, session: Session, message: dict[str, Any]) -> list[dict[str, Any]]:
        if session.env is None:
            raise ProtocolError(protocol.NO_EPISODE, "reset the session before stepping")
        action = protocol.parse_action(message.get("action"))
        try:
            obs, reward, done, _ = session.env.step(action)
        except EpisodeDoneError as exc:
            raise ProtocolError(protocol.EPISODE_DONE, str(exc)) from exc
        reply = self._observation_reply(session, obs, reward, done)
        return self._events(session) + [reply]

    def _handle_render(self, session: Session) -> list[dict[str, Any]]:
        if session.env is None:
            raise ProtocolError(protocol.NO_EPISODE, "reset the session before rendering")
        frame = protocol.frame_payload(session.env.board, session.env.gripper())
        frame.update({"type": "frame", "session": session.id, "t": session.env.t})
        return [frame]

    def _handle_close(self, session: Session) -> list[dict[str, Any]]:
        with self._lock:
            self._sessions.pop(session.id, None)
        return [{"type": "closed", "session": session.id}]


# --------------------------------------------------------------------------
# Transports.


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], service: GameService):
        super().__init__(address, _TCPHandler)
        self.service = service


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: _TCPServer = self.server  # type: ignore[assignment]
        for line in self.rfile:
            if not line.strip():
                continue
            replies = server.service.handle_line(line)
            data = "".join(protocol.encode(reply) + "\n" for reply in replies)
            try:
                self.wfile.write(data.encode("utf-8"))
                self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                return


def _static_file_responder(ui_dir: Path):
    """Serve files from ``ui_dir`` for plain HTTP requests on the WS port."""
    root = ui_dir.resolve()

    def process_request(connection: Any, request: Any) -> Response | None:
        upgrade = request.headers.get("Upgrade", "")
        if upgrade.lower() == "websocket":
            return None
        path = request.path.split("?", 1)[0]
        if path.endswith("/"):
            path += "index.html"
        candidate = (root / path.lstrip("/")).resolve()
        if not candidate.is_relative_to(root) or not candidate.is_file():
            body = b"not found\n"
            headers = Headers()
            headers["Content-Type"] = "text/plain"
            headers["Content-Length"] = str(len(body))
            return Response(404, "Not Found", headers, body)
        body = candidate.read_bytes()
        content_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        headers = Headers()
        headers["Content-Type"] = content_type
        headers["Content-Length"] = str(len(body))
        return Response(200, "OK", headers, body)

    return process_request


@dataclass
class ServiceServer:
    """A running pair of listeners plus their shared service."""

    service: GameService
    host: str
    tcp_port: int
    ws_port: int
    _tcp: _TCPServer
    _ws: Any
    _threads: list[threading.Thread]
    _stop: threading.Event

    def shutdown(self) -> None:
        self._stop.set()
        self._tcp.shutdown()
        self._tcp.server_close()
        self._ws.shutdown()
        for thread in self._threads:
            thread.join(timeout=5.0)


def run_server(
    host: str | None = None,
    tcp_port: int = DEFAULT_TCP_PORT,
    ws_port: int | None = None,
    tasks_dir: str | Path | None = None,
    seed: int = DEFAULT_SEED,
    session_timeout: float = DEFAULT_SESSION_TIMEOUT,
    ui_dir: str | Path | None = None,
    janitor_interval: float = 30.0,
) -> ServiceServer:
    """Start the TCP and WebSocket listeners on background threads.

    Passing port 0 binds an ephemeral port; the chosen ports are reported
    on the returned handle.  The WebSocket port defaults to the TCP port
    plus one.  ``ui_dir``, when given, is served as static files on the
    WebSocket port for plain HTTP requests.
    """
    bind_host = host if host is not None else default_host()
    service = GameService(tasks_dir=tasks_dir, seed=seed, session_timeout=session_timeout)

    tcp = _TCPServer((bind_host, tcp_port), service)
    actual_tcp_port = tcp.server_address[1]

    if ws_port is None:
        ws_port = actual_tcp_port + 1
    ws_sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    ws_sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    ws_sock.bind((bind_host, ws_port))
    ws_sock.listen()
    actual_ws_port = ws_sock.getsockname()[1]

    def ws_handler(connection: Any) -> None:
        for raw in connection:
            for reply in service.handle_line(raw):
                connection.send(protocol.encode(reply))

    process_request = None
    if ui_dir is not None:
        process_request = _static_file_responder(Path(ui_dir))
    ws = ws_serve(ws_handler, sock=ws_sock, process_request=process_request)

    stop = threading.Event()

    def janitor() -> None:
        while not stop.wait(janitor_interval):
            pruned = service.prune_idle()
            if pruned:
                log.info("pruned %d idle session(s)", pruned)

    threads = [
        threading.Thread(target=tcp.serve_forever, name="pentogrip-tcp", daemon=True),
        threading.Thread(target=ws.serve_forever, name="pentogrip-ws", daemon=True),
        threading.Thread(target=janitor, name="pentogrip-janitor", daemon=True),
    ]
    for thread in threads:
        thread.start()
    log.info(
        "serving on %s: tcp %d, ws %d", bind_host, actual_tcp_port, actual_ws_port
    )
    return ServiceServer(
        service, bind_host, actual_tcp_port, actual_ws_port, tcp, ws, threads, stop
    )
