"""Fixtures: a live game server (spawned via its CLI) and benchmark files.

The client package is exercised purely over the wire — these fixtures run
the ``pentogrip`` executable in subprocesses and never import the server's
code.
"""

import os
import re
import shutil
import subprocess
import sys
import time

import pytest

SERVE_READY = re.compile(r"tcp (\d+), ws (\d+)")
SERVER_START_ATTEMPTS = 3


def _require_cli() -> str:
    path = shutil.which("pentogrip")
    if path is None:
        raise RuntimeError("the 'pentogrip' CLI must be installed to run these tests")
    return path


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    """Benchmark task files, generated once through the CLI."""
    out = tmp_path_factory.mktemp("bench")
    subprocess.run(
        [_require_cli(), "gen-tasks", "--seed", "49184", "--out", str(out)],
        check=True,
        stdout=subprocess.DEVNULL,
    )
    return out


def _spawn_server(tasks_dir) -> tuple[subprocess.Popen, int]:
    env = dict(os.environ, PYTHONUNBUFFERED="1")
    proc = subprocess.Popen(
        [_require_cli(), "serve", "--port", "0", "--tasks", str(tasks_dir)],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
        env=env,
    )
    deadline = time.time() + 30
    while time.time() < deadline:
        line = proc.stdout.readline()
        if not line:
            raise RuntimeError(f"server exited with {proc.poll()} before listening")
        found = SERVE_READY.search(line)
        if found:
            return proc, int(found.group(1))
    proc.terminate()
    raise RuntimeError("server never reported its ports")


@pytest.fixture(scope="session")
def server(bench_dir):
    """A live server on an ephemeral port; yields {'host', 'port'}."""
    last_error = None
    for _ in range(SERVER_START_ATTEMPTS):
        try:
            proc, port = _spawn_server(bench_dir)
        except RuntimeError as exc:  # ephemeral ws port may collide; retry
            last_error = exc
            continue
        try:
            yield {"host": "127.0.0.1", "port": port}
        finally:
            proc.terminate()
            try:
                proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()
        return
    raise RuntimeError(f"could not start the server: {last_error}")


@pytest.fixture(scope="session")
def eval_logs(bench_dir, tmp_path_factory):
    """Trajectory logs written by an in-process run of the random follower."""
    log_dir = tmp_path_factory.mktemp("logs")
    out_dir = tmp_path_factory.mktemp("report")
    subprocess.run(
        [
            _require_cli(),
            "eval",
            "--follower",
            "random",
            "--split",
            "validation",
            "--tasks",
            str(bench_dir),
            "--out",
            str(out_dir),
            "--log-dir",
            str(log_dir),
        ],
        check=True,
        stdout=subprocess.DEVNULL,
    )
    logs = sorted(log_dir.glob("*.jsonl"))
    assert logs, "eval produced no trajectory logs"
    return logs
