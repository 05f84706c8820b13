"""Command line entry points: serve, eval, memory dump."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import AppConfig
from .evaluation import load_tasks, run_batch, write_report
from .gateway import LiveProvider, ReplayProvider
from .memory import MemoryPool
from .session import SessionService


def _load_config(args: argparse.Namespace) -> AppConfig:
    config = AppConfig.load(args.config) if args.config else AppConfig()
    if getattr(args, "workspace", None):
        config.workspace = args.workspace
    if getattr(args, "provider", None):
        config.provider = args.provider
    if getattr(args, "fixtures", None):
        config.fixtures_dir = args.fixtures
    return config


def _build_provider(config: AppConfig):
    if config.provider == "live":
        return LiveProvider(config.base_url, config.api_key_env, timeout_s=config.request_timeout_s)
    return ReplayProvider(config.fixtures_dir)


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    config = _load_config(args)
    service = SessionService.from_config(config, provider=_build_provider(config))
    app = create_app(service, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args)
    tasks = load_tasks(args.tasks)
    k_values = tuple(int(k) for k in args.k.split(","))
    records = run_batch(
        tasks,
        _build_provider(config),
        config,
        samples_per_task=args.samples,
        k_values=k_values,
        run_dir=args.run_dir,
        test_command_template=args.test_cmd_template,
        jobs=args.jobs,
    )
    write_report(records, k_values, args.out)
    failures = sum(1 for r in records for s in r.samples if not s.ok)
    print(f"wrote {args.out} ({len(records)} tasks, {failures} failed samples)")
    return 0


def _cmd_memory_dump(args: argparse.Namespace) -> int:
    pool = MemoryPool(Path(args.store))
    pool.dump_csv(sys.stdout)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="storyloom")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", default=None)
    serve.add_argument("--workspace", default=None)
    serve.add_argument("--provider", choices=["live", "replay"], default=None)
    serve.add_argument("--fixtures", default=None)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--ui", default=None, help="directory with built frontend assets")
    serve.set_defaults(func=_cmd_serve)

    evaluate = sub.add_parser("eval", help="run the batch evaluation")
    evaluate.add_argument("--tasks", required=True)
    evaluate.add_argument("--config", default=None)
    evaluate.add_argument("--workspace", default=None)
    evaluate.add_argument("--provider", choices=["live", "replay"], default=None)
    evaluate.add_argument("--fixtures", default=None)
    evaluate.add_argument("--samples", type=int, default=1)
    evaluate.add_argument("--k", default="1")
    evaluate.add_argument("--jobs", type=int, default=1)
    evaluate.add_argument("--out", default="report.csv")
    evaluate.add_argument("--run-dir", default="eval_run")
    evaluate.add_argument("--test-cmd-template", default=None)
    evaluate.set_defaults(func=_cmd_eval)

    memory = sub.add_parser("memory", help="memory pool tools")
    memory_sub = memory.add_subparsers(dest="memory_command", required=True)
    dump = memory_sub.add_parser("dump", help="dump the pool as CSV on stdout")
    dump.add_argument("--store", required=True)
    dump.set_defaults(func=_cmd_memory_dump)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
