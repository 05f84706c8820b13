"""Batch evaluation: run the full pipeline per task and report metrics.

The runner exercises the same session machinery end users hit, with every
proposed scenario confirmed as-is and zero modification rounds. Each sample
gets an isolated workspace and an empty requirement memory so no task can
leak guidance into another and runs stay order-independent under
concurrency.
"""

from __future__ import annotations

import csv
import json
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .config import AppConfig
from .errors import DomainError, StoryloomError
from .gateway import LlmGateway, PriceTable, Provider, TokenCounter
from .prototype import FILE_NAMES
from .scenarios import DecisionAction, ScenarioDecision
from .session import SessionService


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased estimator for the chance at least one of k samples passes.

    Computed in the numerically stable product form
    ``1 - prod_{i=0..k-1} (n-c-i)/(n-i)``; returns exactly 1.0 whenever
    ``n - c < k`` because every k-subset then contains a passing sample.
    """
    if not all(isinstance(v, int) for v in (n, c, k)):
        raise DomainError("n, c, k must be integers")
    if not 0 <= c <= n:
        raise DomainError(f"c must satisfy 0 <= c <= n, got n={n} c={c}")
    if not 1 <= k <= n:
        raise DomainError(f"k must satisfy 1 <= k <= n, got n={n} k={k}")
    if n - c < k:
        return 1.0
    product = 1.0
    for i in range(k):
        product *= (n - c - i) / (n - i)
    return 1.0 - product


def pro_code(code_tokens: int, input_tokens: int, output_tokens: int) -> float:
    """Share of the conversation's tokens that ended up as delivered code."""
    total = input_tokens + output_tokens
    if total <= 0:
        raise DomainError("input_tokens + output_tokens must be positive")
    if code_tokens < 0 or code_tokens > total:
        raise DomainError("code_tokens must lie within [0, input+output]")
    return code_tokens / total


@dataclass(frozen=True, slots=True)
class TaskSpec:
    id: str
    name: str
    description: str

    def __post_init__(self) -> None:
        if not self.id.strip() or not self.description.strip():
            raise ValueError("task id and description must be non-empty")


def load_tasks(path: Path | str) -> list[TaskSpec]:
    """Task list CSV with header id,name,description."""
    with open(path, newline="", encoding="utf-8") as fp:
        reader = csv.DictReader(fp)
        expected = ["id", "name", "description"]
        if reader.fieldnames != expected:
            raise ValueError(f"task CSV header must be {','.join(expected)}")
        return [
            TaskSpec(id=row["id"], name=row["name"], description=row["description"])
            for row in reader
        ]


@dataclass(slots=True)
class SampleResult:
    index: int
    ok: bool
    error: str | None
    wall_time_s: float
    phase_durations: dict[str, float]
    input_tokens: int
    output_tokens: int
    cost_usd: float
    code_tokens: int
    passed: bool | None
    artifact_dir: str


@dataclass(slots=True)
class RunRecord:
    task_id: str
    n: int
    c: int | None
    k_values: tuple[int, ...]
    samples: list[SampleResult]


def _run_sample(
    task: TaskSpec,
    sample_index: int,
    provider: Provider,
    config: AppConfig,
    run_dir: Path,
    test_command_template: str | None,
    clock: Callable[[], float],
    counter: TokenCounter,
) -> SampleResult:
    sample_dir = run_dir / task.id / f"sample_{sample_index}"
    sample_dir.mkdir(parents=True, exist_ok=True)
    gateway = LlmGateway(provider, PriceTable(config.price_table), counter)
    service = SessionService(config, gateway, workspace=sample_dir / "session")
    phases: dict[str, float] = {}
    try:
        session_id = service.create_session()
        start = clock()
        scenarios = service.submit_requirement(session_id, task.description)
        phases["scenarios"] = clock() - start
        mark = clock()
        service.decide_scenarios(
            session_id,
            [ScenarioDecision(action=DecisionAction.CONFIRM) for _ in scenarios],
        )
        phases["decide"] = clock() - mark
        mark = clock()
        service.generate_prototype(session_id)
        phases["generate"] = clock() - mark
        view = service.session_view(session_id)
        files = service.read_version_files(session_id, 1)
        for name in FILE_NAMES:
            (sample_dir / name).write_text(files[name], encoding="utf-8")
        code_tokens = sum(counter.count(files[name]) for name in FILE_NAMES)
        passed: bool | None = None
        if test_command_template is not None:
            command = test_command_template.format(dir=str(sample_dir))
            completed = subprocess.run(command, shell=True, capture_output=True)
            passed = completed.returncode == 0
        return SampleResult(
            index=sample_index,
            ok=True,
            error=None,
            wall_time_s=sum(phases.values()),
            phase_durations=phases,
            input_tokens=view["usage"]["input_tokens"],
            output_tokens=view["usage"]["output_tokens"],
            cost_usd=view["usage"]["cost_usd"],
            code_tokens=code_tokens,
            passed=passed,
            artifact_dir=str(sample_dir),
        )
    except StoryloomError as exc:
        return SampleResult(
            index=sample_index,
            ok=False,
            error=f"{type(exc).__name__}: {exc}",
            wall_time_s=sum(phases.values()),
            phase_durations=phases,
            input_tokens=0,
            output_tokens=0,
            cost_usd=0.0,
            code_tokens=0,
            passed=False if test_command_template is not None else None,
            artifact_dir=str(sample_dir),
        )


def run_batch(
    tasks: list[TaskSpec],
    provider: Provider,
    config: AppConfig,
    *,
    samples_per_task: int,
    k_values: tuple[int, ...],
    run_dir: Path | str,
    test_command_template: str | None = None,
    jobs: int = 1,
    clock: Callable[[], float] = time.monotonic,
) -> list[RunRecord]:
    """Run every task; per-task failures are recorded, never fatal."""
    if samples_per_task < 1:
        raise ValueError("samples_per_task must be positive")
    for k in k_values:
        if not 1 <= k <= samples_per_task:
            raise DomainError(f"k={k} outside 1..samples_per_task={samples_per_task}")
    run_path = Path(run_dir)
    run_path.mkdir(parents=True, exist_ok=True)
    counter = TokenCounter()

    work = [(task, j) for task in tasks for j in range(samples_per_task)]
    results: dict[tuple[str, int], SampleResult] = {}
    if jobs <= 1:
        for task, j in work:
            results[(task.id, j)] = _run_sample(
                task, j, provider, config, run_path, test_command_template, clock, counter
            )
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(
                    _run_sample, task, j, provider, config, run_path,
                    test_command_template, clock, counter,
                ): (task.id, j)
                for task, j in work
            }
            for future, key in futures.items():
                results[key] = future.result()

    records: list[RunRecord] = []
    for task in tasks:
        samples = [results[(task.id, j)] for j in range(samples_per_task)]
        c: int | None = None
        if test_command_template is not None:
            c = sum(1 for s in samples if s.passed)
        records.append(
            RunRecord(
                task_id=task.id,
                n=samples_per_task,
                c=c,
                k_values=tuple(k_values),
                samples=samples,
            )
        )
    metadata = {
        "model_id": config.model_id,
        "samples_per_task": samples_per_task,
        "k_values": list(k_values),
        "tasks": [t.id for t in tasks],
        "tokenizer": counter.name,
        "tokenizer_approximate": counter.approximate,
        "test_command_template": test_command_template,
    }
    (run_path / "metadata.json").write_text(
        json.dumps(metadata, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    return records


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return str(value)


def _mean(values: list[float]) -> float | None:
    if not values:
        return None
    return sum(values) / len(values)


def write_report(records: list[RunRecord], k_values: tuple[int, ...], out_path: Path | str) -> None:
    """One CSV row per task plus an AVERAGE row.

    pass@k columns stay blank when a task has no pass count (no test
    command was configured). Floats are written in shortest round-trip
    form so parsing the report recovers the exact values.
    """
    rows: list[dict[str, str]] = []
    columns = ["task_id", "n", "c"]
    columns += [f"pass@{k}" for k in k_values]
    columns += ["pro_code", "time_s", "cost_usd"]

    per_task: dict[str, dict[str, float | None]] = {}
    for record in records:
        ok_samples = [s for s in record.samples if s.ok]
        ratios = [
            pro_code(s.code_tokens, s.input_tokens, s.output_tokens) for s in ok_samples
        ]
        values: dict[str, float | None] = {}
        for k in record.k_values:
            values[f"pass@{k}"] = (
                pass_at_k(record.n, record.c, k) if record.c is not None else None
            )
        values["pro_code"] = _mean(ratios)
        values["time_s"] = _mean([s.wall_time_s for s in record.samples])
        values["cost_usd"] = _mean([s.cost_usd for s in record.samples])
        per_task[record.task_id] = values
        row = {
            "task_id": record.task_id,
            "n": str(record.n),
            "c": "" if record.c is None else str(record.c),
        }
        for column in columns[3:]:
            row[column] = _fmt(values.get(column))
        rows.append(row)

    average_row = {"task_id": "AVERAGE", "n": "", "c": ""}
    for column in columns[3:]:
        present = [v[column] for v in per_task.values() if v.get(column) is not None]
        average_row[column] = _fmt(_mean(present)) if present else ""
    rows.append(average_row)

    with open(out_path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.DictWriter(fp, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
