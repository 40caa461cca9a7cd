"""Contract tests for RemoteEnv against a live server."""

import hashlib
import json
import random
import struct
import sys

import numpy as np
import pytest

from pentogrip_client import (
    ACTION_NAMES,
    N_ACTIONS,
    Observation,
    RemoteEnv,
    RemoteError,
)

WAIT = 4


@pytest.fixture
def env(server):
    with RemoteEnv(server["host"], server["port"]) as remote:
        yield remote


def observation_digest(obs: Observation, t: int) -> str:
    """The trajectory-log observation hash (PROTOCOL.md appendix)."""
    h = hashlib.sha256()
    h.update(obs.view.tobytes())
    h.update(struct.pack("<dd", *obs.coords))
    h.update(bytes(obs.re))
    h.update(bytes(obs.fb))
    h.update(struct.pack("<i", t))
    return h.hexdigest()


def test_client_does_not_import_the_server_package():
    assert "pentogrip" not in sys.modules


def test_action_space():
    assert N_ACTIONS == 6
    assert ACTION_NAMES == ("LEFT", "RIGHT", "UP", "DOWN", "WAIT", "GRIP")


def test_reset_contract(env):
    obs = env.reset(seed=11)
    assert isinstance(obs, Observation)
    assert obs.view.shape == (11, 11, 3)
    assert obs.view.dtype == np.uint8
    # the gripper starts at the board center
    assert obs.coords == (0.0, 0.0)
    assert len(obs.re) == 11 and len(obs.fb) == 11
    assert obs.re[0] == 1 and 2 in obs.re  # <s> … <e>
    assert all(0 <= i < 33 for i in obs.re)
    assert obs.fb == (0,) * 11  # the teacher has not given feedback yet
    assert env.t == 0 and not env.done


def test_step_contract(env):
    env.reset(seed=11)
    obs, reward, done, info = env.step(WAIT)
    assert isinstance(obs, Observation)
    assert reward == 0.0 and done is False
    assert info["t"] == 1 == env.t
    assert info["task_id"].startswith("generated-")
    assert isinstance(info["re_text"], str) and info["re_text"]
    assert isinstance(info["fb_text"], str)
    assert info["outcome"] is None


def test_action_names_accepted(env):
    env.reset(seed=11)
    for name in ACTION_NAMES[:4]:
        _, reward, done, _ = env.step(name)
        assert reward == 0.0 and not done


def test_instruction_constant_within_episode(env):
    env.reset(seed=13)
    first = None
    for _ in range(5):
        _, _, _, info = env.step(WAIT)
        first = first or info["re_text"]
        assert info["re_text"] == first


def test_timeout_reward_exact(env):
    env.reset(seed=11)
    for step_number in range(1, 101):
        obs, reward, done, info = env.step(WAIT)
        assert done is (step_number == 100)
    assert reward == -0.9
    assert info["outcome"] == {"status": "timeout", "steps": 100, "reward": -0.9}
    assert env.done


def test_benchmark_reset(server):
    with RemoteEnv(server["host"], server["port"]) as env:
        env.reset(split="testing", index=0)
        _, _, _, info = env.step(WAIT)
        assert info["task_id"] == "testing-20x20-4p-0000"


def test_generation_is_deterministic_across_sessions(server):
    def first_obs():
        with RemoteEnv(server["host"], server["port"], order="CSP") as env:
            return env.reset(size=30, pieces=12, seed=99)

    a, b = first_obs(), first_obs()
    assert np.array_equal(a.view, b.view)
    assert a == b._replace(view=a.view)  # remaining fields compare directly

    with RemoteEnv(server["host"], server["port"], order="CSP") as env:
        c = env.reset(size=30, pieces=12, seed=100)
    assert observation_digest(a, 0) != observation_digest(c, 0)


def test_step_before_reset_is_a_server_error(env):
    with pytest.raises(RemoteError) as excinfo:
        env.step(WAIT)
    assert excinfo.value.code == "NO_EPISODE"


def test_step_after_done_is_a_server_error(env):
    env.reset(seed=11)
    for _ in range(100):
        env.step(WAIT)
    with pytest.raises(RemoteError) as excinfo:
        env.step(WAIT)
    assert excinfo.value.code == "EPISODE_DONE"
    # the session survives: a new reset starts a fresh episode
    obs = env.reset(seed=12)
    assert obs.view.shape == (11, 11, 3)


def test_bad_action_carries_the_server_code(env):
    env.reset(seed=11)
    for bad in (9, -1, "SPEAK"):
        with pytest.raises(RemoteError) as excinfo:
            env.step(bad)
        assert excinfo.value.code == "BAD_ACTION"


def test_bad_order_rejected_at_session_open(server):
    with pytest.raises(RemoteError) as excinfo:
        RemoteEnv(server["host"], server["port"], order="XYZ")
    assert excinfo.value.code == "MALFORMED"


def test_unknown_split_is_bad_task(env):
    with pytest.raises(RemoteError) as excinfo:
        env.reset(split="nonesuch", index=0)
    assert excinfo.value.code == "BAD_TASK"


def test_split_without_index_is_a_client_error(env):
    with pytest.raises(ValueError):
        env.reset(split="testing")


def test_connection_refused_surfaces_as_oserror():
    with pytest.raises(OSError):
        RemoteEnv("127.0.0.1", 1, timeout=2)


def test_use_after_close_raises(server):
    env = RemoteEnv(server["host"], server["port"])
    env.close()
    env.close()  # idempotent
    with pytest.raises(RemoteError):
        env.reset(seed=1)


def test_sessions_are_independent(server):
    with RemoteEnv(server["host"], server["port"]) as a, RemoteEnv(
        server["host"], server["port"]
    ) as b:
        a.reset(seed=1)
        b.reset(seed=2)
        a.step(WAIT)
        a.step(WAIT)
        b.step(WAIT)
        assert a.t == 2 and b.t == 1


def test_remote_trajectories_match_inprocess_logs(server, eval_logs):
    """Replaying logged actions remotely reproduces every logged field."""
    compared_steps = 0
    for path in eval_logs[:25]:
        with open(path, encoding="utf-8") as fh:
            header, *records = [json.loads(line) for line in fh]
        assert header["format"] == "pentogrip.trajectory"

        with RemoteEnv(
            server["host"],
            server["port"],
            order=header["order"],
            feedback=header["feedback"],
        ) as env:
            obs = env.reset(task=header["task"])
            assert observation_digest(obs, 0) == records[0]["obs"]
            assert records[0]["action"] is None

            for record in records[1:]:
                obs, reward, done, info = env.step(record["action"])
                assert info["t"] == record["t"]
                assert info["fb_text"] == record["fb"]
                assert reward == record["reward"]
                assert done == record["done"]
                assert observation_digest(obs, info["t"]) == record["obs"]
                compared_steps += 1
            assert env.done
    assert compared_steps > 100


def test_short_random_episodes_stay_in_lockstep(server):
    """Small always-on version of the soak: every step checks t agreement."""
    completed = 0
    with RemoteEnv(server["host"], server["port"]) as env:
        for episode in range(20):
            rng = random.Random(f"lockstep/{episode}")
            env.reset(size=20, pieces=8, seed=episode)
            for _ in range(100):
                action = rng.randrange(N_ACTIONS)
                _, _, done, info = env.step(action)
                assert info["t"] == env.t
                if done:
                    break
            assert env.done
            completed += 1
    assert completed == 20


@pytest.mark.soak
def test_soak_10000_random_episodes(server):
    """10,000 random-action remote episodes with zero desyncs.

    RemoteEnv raises DesyncError the moment the server's step counter
    disagrees with the client's, so completing all episodes IS the
    zero-desync property.
    """
    sizes_pieces = [(20, 4), (20, 8), (30, 8), (30, 18)]
    outcomes = {"correct": 0, "wrong": 0, "timeout": 0}
    total_steps = 0
    with RemoteEnv(server["host"], server["port"]) as env:
        for episode in range(10_000):
            size, pieces = sizes_pieces[episode % len(sizes_pieces)]
            rng = random.Random(f"soak/{episode}")
            env.reset(size=size, pieces=pieces, seed=episode)
            done = False
            while not done:
                _, _, done, info = env.step(rng.randrange(N_ACTIONS))
                total_steps += 1
            outcomes[info["outcome"]["status"]] += 1
    assert sum(outcomes.values()) == 10_000
    print(f"\n[SOAK] 10,000 episodes, {total_steps} steps, 0 desyncs; outcomes {outcomes}")
