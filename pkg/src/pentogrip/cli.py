"""Command line: generate benchmarks, serve, evaluate, replay, render.

Every run with identical flags and seed writes identical files.  An
optional JSON config file supplies defaults for any flag; explicit flags
win.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from . import report
from .board import Color, PieceSymbol, Region, Shape
from .env import GripEnv, record_episode, replay_trajectory
from .language import VOCABULARY, parse_order
from .oracle import FOLLOWERS, evaluate
from .service import DEFAULT_SESSION_TIMEOUT, DEFAULT_TCP_PORT, run_server
from .tasks import (
    BENCHMARK_LAYOUT,
    DEFAULT_SEED,
    GenerationError,
    Task,
    TaskError,
    generate_task,
    load_split,
    make_splits,
    write_benchmark,
)

ORDER_CODES = ("CSP", "CPS", "PCS", "PSC", "SCP", "SPC")

# Split selectors: a benchmark split name, optionally restricted by size.
SPLIT_ALIASES = {
    "test20": ("testing", 20),
    "test30": ("testing", 30),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pentogrip",
        description="Pentomino gripper reference game: tasks, service, evaluation.",
    )
    parser.add_argument(
        "--config",
        metavar="FILE",
        help="JSON file with default values for any flag (flags win)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-tasks", help="write the benchmark task files")
    gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.add_argument("--out", default="tasks", help="output directory")

    serve = sub.add_parser("serve", help="run the TCP + WebSocket service")
    serve.add_argument("--host", default=None, help="bind host (default: $PENTOGRIP_HOST or 127.0.0.1)")
    serve.add_argument("--port", type=int, default=DEFAULT_TCP_PORT, help="TCP port")
    serve.add_argument("--ws-port", type=int, default=None, help="WebSocket port (default: port+1)")
    serve.add_argument("--tasks", default=None, help="benchmark directory for task_ref resets")
    serve.add_argument("--ui-dir", default=None, help="static files served on the WebSocket port")
    serve.add_argument("--seed", type=int, default=DEFAULT_SEED)
    serve.add_argument("--session-timeout", type=float, default=DEFAULT_SESSION_TIMEOUT)

    ev = sub.add_parser("eval", help="run a scripted follower over a split")
    ev.add_argument("--follower", choices=sorted(FOLLOWERS), default="shortest-path")
    ev.add_argument(
        "--split",
        default="test20",
        help="training/validation/testing/holdout, or test20/test30",
    )
    ev.add_argument("--tasks", default=None, help="benchmark directory (default: regenerate)")
    ev.add_argument("--order", choices=ORDER_CODES, default="PCS")
    ev.add_argument("--feedback", choices=("on", "off"), default="on")
    ev.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ev.add_argument("--map-size", type=int, default=None, help="restrict to one board size")
    ev.add_argument("--pieces", type=int, default=None, help="restrict to one piece count")
    ev.add_argument("--out", default=None, help="directory for CSV and figures")
    ev.add_argument("--log-dir", default=None, help="directory for per-task trajectory logs")

    rep = sub.add_parser("replay", help="verify trajectory logs byte-for-byte")
    rep.add_argument("paths", nargs="+", metavar="LOG")

    ren = sub.add_parser("render", help="export a task's start state as PNG")
    ren.add_argument("--out", required=True, help="output PNG path")
    ren.add_argument("--tasks", default=None, help="benchmark directory")
    ren.add_argument("--split", default="testing")
    ren.add_argument("--index", type=int, default=0)
    ren.add_argument("--map-size", type=int, default=20, choices=(20, 30))
    ren.add_argument("--pieces", type=int, default=8)
    ren.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ren.add_argument("--symbol", default=None, help="target as 'shape,color,region'")
    ren.add_argument("--scale", type=int, default=16)

    sub.add_parser("vocab", help="print the vocabulary, one 'id<TAB>word' per line")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        with open(known.config, encoding="utf-8") as fh:
            defaults = json.load(fh)
        if not isinstance(defaults, dict):
            parser.error(f"{known.config}: config must be a JSON object")
        parser.set_defaults(**{key.replace("-", "_"): value for key, value in defaults.items()})
    return parser.parse_args(argv)


def _resolve_split(name: str) -> tuple[str, int | None]:
    if name in SPLIT_ALIASES:
        return SPLIT_ALIASES[name]
    if name in BENCHMARK_LAYOUT:
        return name, None
    choices = ", ".join(list(BENCHMARK_LAYOUT) + sorted(SPLIT_ALIASES))
    raise TaskError(f"unknown split {name!r}; expected one of: {choices}")


def _split_tasks(args: argparse.Namespace, split: str, seed: int) -> list[Task]:
    """Load a split from --tasks, or regenerate it deterministically."""
    if args.tasks is not None:
        return load_split(args.tasks, split)
    symbols = make_splits(seed).by_name(split)
    tasks = []
    for size, n_pieces, count in BENCHMARK_LAYOUT[split]:
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
    return tasks


def _cmd_gen_tasks(args: argparse.Namespace) -> int:
    manifest = write_benchmark(args.out, seed=args.seed)
    for split, entry in manifest["splits"].items():
        configs = ", ".join(
            f"{c['count']}@{c['size']}x{c['size']}/{c['pieces']}p" for c in entry["configs"]
        )
        print(f"{split}: {len(entry['symbols'])} symbols, {entry['tasks']} tasks ({configs})")
    print(f"wrote {Path(args.out) / 'manifest.json'} (seed {manifest['seed']})")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    server = run_server(
        host=args.host,
        tcp_port=args.port,
        ws_port=args.ws_port,
        tasks_dir=args.tasks,
        seed=args.seed,
        session_timeout=args.session_timeout,
        ui_dir=args.ui_dir,
    )
    print(
        f"listening on {server.host} (tcp {server.tcp_port}, ws {server.ws_port});"
        " Ctrl-C to stop"
    )
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("shutting down")
        server.shutdown()
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    split, size_filter = _resolve_split(args.split)
    parse_order(args.order)
    tasks = _split_tasks(args, split, args.seed)
    if size_filter is not None:
        tasks = [task for task in tasks if task.size == size_filter]
    if args.map_size is not None:
        tasks = [task for task in tasks if task.size == args.map_size]
    if args.pieces is not None:
        tasks = [task for task in tasks if len(task.pieces) == args.pieces]
    if not tasks:
        print("no tasks match the requested split and filters", file=sys.stderr)
        return 1
    feedback = args.feedback == "on"
    factory = FOLLOWERS[args.follower]
    evaluation = evaluate(
        factory,
        tasks,
        order=args.order,
        feedback_enabled=feedback,
        seed=args.seed,
        name=args.follower,
    )
    print(report.format_table(evaluation))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_csv(evaluation, out / "eval.csv")
        figures = report.write_figures(evaluation, out)
        print(f"wrote {out / 'eval.csv'} and {len(figures)} figure(s) to {out}")
    if args.log_dir is not None:
        log_dir = Path(args.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        for task in tasks:
            env = GripEnv(task, order=args.order, feedback_enabled=feedback)
            follower = factory(task, random.Random(f"{args.seed}/eval/{task.id}"))
            actions = []
            obs = env.reset()
            while not env.done:
                action = follower(obs)
                actions.append(action)
                obs, _, _, _ = env.step(action)
            fresh = GripEnv(task, order=args.order, feedback_enabled=feedback)
            record_episode(fresh, actions, str(log_dir / f"{task.id}.jsonl"))
        print(f"wrote {len(tasks)} trajectory log(s) to {log_dir}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    failed = 0
    for path in args.paths:
        result = replay_trajectory(path)
        if result.match:
            print(f"{path}: MATCH ({result.steps} steps)")
        else:
            print(f"{path}: MISMATCH — {result.detail}")
            failed += 1
    return 1 if failed else 0


def _parse_symbol(text: str) -> PieceSymbol:
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 3:
        raise TaskError(f"symbol must be 'shape,color,region', got {text!r}")
    try:
        return PieceSymbol(Shape(parts[0].upper()), Color(parts[1].lower()), Region(parts[2].lower()))
    except ValueError as exc:
        raise TaskError(str(exc)) from exc


def _cmd_render(args: argparse.Namespace) -> int:
    if args.tasks is not None:
        split, size_filter = _resolve_split(args.split)
        tasks = load_split(args.tasks, split)
        if size_filter is not None:
            tasks = [task for task in tasks if task.size == size_filter]
        if not 0 <= args.index < len(tasks):
            print(f"index {args.index} out of range ({len(tasks)} tasks)", file=sys.stderr)
            return 1
        task = tasks[args.index]
    else:
        rng = random.Random(f"{args.seed}/render/{args.map_size}/{args.pieces}")
        if args.symbol is not None:
            symbol = _parse_symbol(args.symbol)
        else:
            symbol = make_splits(args.seed).testing[args.index % 60]
        task = generate_task(
            symbol,
            args.map_size,
            args.pieces,
            rng,
            task_id=f"render-{args.map_size}x{args.map_size}-{args.pieces}p",
            seed=args.seed,
        )
    report.save_board_png(task, args.out, scale=args.scale)
    print(f"wrote {args.out} ({task.id}: {task.size}x{task.size}, {len(task.pieces)} pieces)")
    return 0


def _cmd_vocab(args: argparse.Namespace) -> int:
    for token_id, word in enumerate(VOCABULARY):
        print(f"{token_id}\t{word}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
    handlers = {
        "gen-tasks": _cmd_gen_tasks,
        "serve": _cmd_serve,
        "eval": _cmd_eval,
        "replay": _cmd_replay,
        "render": _cmd_render,
        "vocab": _cmd_vocab,
    }
    try:
        return handlers[args.command](args)
    except (TaskError, GenerationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
