"""Stateful sessions: one per requirement, from first submit to download.

A session walks AwaitingRequirement -> ScenariosProposed -> Generating ->
PrototypeReady and ends in Accepted (or Failed from anywhere). Generating
is transient: it is never written to disk as a resting state, so a crashed
generation resumes from the last stable state. Every mutation is serialized
per session; all session artifacts live under one workspace directory and
survive process restarts byte-for-byte.
"""

from __future__ import annotations

import io
import json
import mimetypes
import os
import threading
import time
import uuid
import zipfile
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .config import AppConfig
from .errors import (
    EmptyRequirement,
    ExtractionFailed,
    GatewayError,
    IllegalState,
    PathTraversalRejected,
    PreviewFileNotFound,
    StoreWriteFailed,
    StoryloomError,
    UnknownSession,
    UnknownVersion,
    WorkspaceUnwritable,
)
from .gateway import (
    LiveProvider,
    LlmGateway,
    PriceTable,
    Provider,
    ReplayProvider,
    TokenCounter,
    Transcript,
    TranscriptEntry,
    Usage,
)
from .gherkin import assemble_feature, render
from .memory import STORE_FILENAME, MemoryPool
from .prompts import PromptLibrary
from .prototype import (
    FILE_NAMES,
    ModificationRequest,
    ProjectCode,
    PrototypeDesigner,
)
from .scenarios import NLScenario, ScenarioDecision, ScenarioDesigner


class SessionState(str, Enum):
    AWAITING_REQUIREMENT = "AwaitingRequirement"
    SCENARIOS_PROPOSED = "ScenariosProposed"
    GENERATING = "Generating"
    PROTOTYPE_READY = "PrototypeReady"
    ACCEPTED = "Accepted"
    FAILED = "Failed"


TERMINAL_STATES = (SessionState.ACCEPTED, SessionState.FAILED)


@dataclass(frozen=True, slots=True)
class LogEvent:
    seq: int
    ts: float
    message: str

    def to_dict(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "message": self.message}


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class PhaseEstimator:
    """Rolling mean over the last 10 completed durations per operation,
    seeded with configured defaults until real samples exist."""

    def __init__(self, defaults: dict[str, float]):
        self._defaults = dict(defaults)
        self._samples: dict[str, deque[float]] = {}
        self._lock = threading.Lock()

    def record(self, op: str, seconds: float) -> None:
        with self._lock:
            self._samples.setdefault(op, deque(maxlen=10)).append(seconds)

    def estimate(self, op: str) -> float:
        with self._lock:
            samples = self._samples.get(op)
            if samples:
                return sum(samples) / len(samples)
            return self._defaults.get(op, 30.0)

    def estimates(self) -> dict[str, float]:
        return {op: self.estimate(op) for op in self._defaults}


class Session:
    """Runtime state plus the on-disk mirror for one session."""

    def __init__(self, session_id: str, directory: Path):
        self.id = session_id
        self.dir = directory
        self.state = SessionState.AWAITING_REQUIREMENT
        self.requirement: str | None = None
        self.nl_scenarios: list[NLScenario] = []
        self.decided_gherkin: str | None = None
        self.versions: list[int] = []
        self.flags: list[str] = []
        self.created_at = time.time()
        self.lock = threading.RLock()
        self.events: list[LogEvent] = []
        self._code_cache: dict[int, dict[str, str]] = {}
        self.transcript = Transcript(sink=self._on_transcript_entry)

    # -- logging --

    def log(self, message: str) -> None:
        event = LogEvent(seq=len(self.events) + 1, ts=time.time(), message=message)
        self.events.append(event)
        with open(self.dir / "log.jsonl", "a", encoding="utf-8") as fp:
            fp.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")

    def events_after(self, cursor: int) -> list[LogEvent]:
        return [e for e in self.events if e.seq > cursor]

    def _on_transcript_entry(self, entry: TranscriptEntry) -> None:
        with open(self.dir / "transcript.jsonl", "a", encoding="utf-8") as fp:
            fp.write(json.dumps(entry.to_dict(), ensure_ascii=False) + "\n")
        self.log(f"model step {entry.step} completed")

    # -- usage --

    def usage_tokens(self) -> tuple[int, int]:
        total_in = sum(e.usage.input_tokens for e in self.transcript.entries)
        total_out = sum(e.usage.output_tokens for e in self.transcript.entries)
        return total_in, total_out

    # -- persistence --

    def persist(self) -> None:
        if self.state is SessionState.GENERATING:
            raise AssertionError("Generating is transient and must not be persisted")
        total_in, total_out = self.usage_tokens()
        snapshot = {
            "id": self.id,
            "state": self.state.value,
            "requirement": self.requirement,
            "nl_scenarios": [{"index": s.index, "text": s.text} for s in self.nl_scenarios],
            "decided_gherkin": self.decided_gherkin,
            "versions": self.versions,
            "flags": self.flags,
            "created_at": self.created_at,
            "usage": {"input_tokens": total_in, "output_tokens": total_out},
        }
        _atomic_write_text(self.dir / "session.json", json.dumps(snapshot, ensure_ascii=False, indent=1))

    @classmethod
    def load(cls, directory: Path) -> "Session":
        data = json.loads((directory / "session.json").read_text(encoding="utf-8"))
        session = cls(data["id"], directory)
        session.state = SessionState(data["state"])
        session.requirement = data["requirement"]
        session.nl_scenarios = [
            NLScenario(index=s["index"], text=s["text"]) for s in data["nl_scenarios"]
        ]
        session.decided_gherkin = data["decided_gherkin"]
        session.versions = list(data["versions"])
        session.flags = list(data.get("flags", []))
        session.created_at = data["created_at"]
        log_path = directory / "log.jsonl"
        if log_path.exists():
            for line in log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    raw = json.loads(line)
                    session.events.append(
                        LogEvent(seq=raw["seq"], ts=raw["ts"], message=raw["message"])
                    )
        transcript_path = directory / "transcript.jsonl"
        if transcript_path.exists():
            for line in transcript_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    raw = json.loads(line)
                    session.transcript.entries.append(
                        TranscriptEntry(
                            step=raw["step"],
                            prompt=raw["prompt"],
                            completion=raw["completion"],
                            usage=Usage(**raw["usage"]),
                            timestamp=raw["timestamp"],
                            attempt=raw.get("attempt", 0),
                        )
                    )
        return session

    # -- version files --

    def version_dir(self, version: int) -> Path:
        return self.dir / f"v{version}"

    def write_version(self, code: ProjectCode) -> None:
        """Write the three files under a temp name, then rename into place."""
        final_dir = self.version_dir(code.version)
        tmp_dir = self.dir / f".v{code.version}.tmp"
        if tmp_dir.exists():
            for child in tmp_dir.iterdir():
                child.unlink()
        else:
            tmp_dir.mkdir()
        for name in FILE_NAMES:
            (tmp_dir / name).write_text(code.files[name], encoding="utf-8")
        os.replace(tmp_dir, final_dir)
        self._code_cache[code.version] = dict(code.files)

    def read_version(self, version: int) -> dict[str, str]:
        if version not in self.versions:
            raise UnknownVersion(f"session {self.id} has no version {version}")
        if version not in self._code_cache:
            vdir = self.version_dir(version)
            self._code_cache[version] = {
                name: (vdir / name).read_text(encoding="utf-8") for name in FILE_NAMES
            }
        return self._code_cache[version]


class SessionService:
    """Orchestrates the chains over sessions and owns the workspace."""

    def __init__(
        self,
        config: AppConfig,
        gateway: LlmGateway,
        *,
        workspace: Path | str | None = None,
    ):
        self.config = config
        self.gateway = gateway
        self.workspace = Path(workspace or config.workspace)
        try:
            (self.workspace / "sessions").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise WorkspaceUnwritable(f"cannot create workspace {self.workspace}: {exc}") from exc
        self.memory = MemoryPool(self.workspace / STORE_FILENAME)
        library = PromptLibrary()
        generation = config.generation_config()
        self.scenario_designer = ScenarioDesigner(
            gateway, library, generation, max_scenarios=config.max_scenarios
        )
        self.prototype_designer = PrototypeDesigner(gateway, library, generation)
        self.estimator = PhaseEstimator(config.estimate_defaults)
        self._sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._active: dict[str, tuple[str, float]] = {}
        self._load_existing()

    @classmethod
    def from_config(cls, config: AppConfig, provider: Provider | None = None) -> "SessionService":
        if provider is None:
            if config.provider == "live":
                provider = LiveProvider(
                    config.base_url, config.api_key_env, timeout_s=config.request_timeout_s
                )
            else:
                provider = ReplayProvider(config.fixtures_dir)
        gateway = LlmGateway(
            provider,
            PriceTable(config.price_table),
            TokenCounter(),
            max_inflight=config.max_inflight,
        )
        return cls(config, gateway)

    def _load_existing(self) -> None:
        sessions_dir = self.workspace / "sessions"
        for entry in sorted(sessions_dir.iterdir()) if sessions_dir.exists() else []:
            if (entry / "session.json").exists():
                session = Session.load(entry)
                self._sessions[session.id] = session

    # -- helpers --

    def _get(self, session_id: str) -> Session:
        with self._sessions_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}")
        return session

    def _require_state(self, session: Session, expected: SessionState) -> None:
        if session.state is not expected:
            raise IllegalState(
                f"operation requires state {expected.value}, "
                f"session {session.id} is {session.state.value}"
            )

    def _fail(self, session: Session, exc: Exception) -> None:
        session.state = SessionState.FAILED
        if session.decided_gherkin is not None:
            session.log("discarding decided scenarios of the failed run")
            session.decided_gherkin = None
        session.log(f"session failed: {type(exc).__name__}: {exc}")
        session.persist()

    def _preview_url(self, session_id: str, version: int) -> str:
        return f"/preview/{session_id}/{version}/index.html"

    # -- operations --

    def create_session(self) -> str:
        session_id = uuid.uuid4().hex[:12]
        directory = self.workspace / "sessions" / session_id
        try:
            directory.mkdir(parents=True)
        except OSError as exc:
            raise WorkspaceUnwritable(f"cannot create session directory: {exc}") from exc
        session = Session(session_id, directory)
        with self._sessions_lock:
            self._sessions[session_id] = session
        session.log("session created")
        session.persist()
        return session_id

    def submit_requirement(self, session_id: str, text: str) -> list[NLScenario]:
        session = self._get(session_id)
        with session.lock:
            self._require_state(session, SessionState.AWAITING_REQUIREMENT)
            requirement = text.strip()
            if not requirement:
                raise EmptyRequirement("requirement text is empty")
            started = time.monotonic()
            self._active[session_id] = ("scenarios", started)
            try:
                session.requirement = requirement
                session.log(f"requirement received: {requirement}")
                match = self.memory.best_match(requirement, self.config.similarity_threshold)
                if match is not None:
                    session.log(
                        f"memory: matched item {match.item.id} with score {match.score:.3f}"
                    )
                else:
                    session.log("memory: no match at or above threshold")
                document = self.scenario_designer.design_scenarios(
                    requirement,
                    match.item if match is not None else None,
                    transcript=session.transcript,
                    log=session.log,
                )
                session.nl_scenarios = self.scenario_designer.gherkin_to_nl(
                    list(document.scenarios),
                    transcript=session.transcript,
                    log=session.log,
                )
                session.state = SessionState.SCENARIOS_PROPOSED
                session.persist()
                session.log(f"proposed {len(session.nl_scenarios)} scenarios")
                return list(session.nl_scenarios)
            except StoryloomError as exc:
                self._fail(session, exc)
                raise
            finally:
                self._active.pop(session_id, None)
                self.estimator.record("scenarios", time.monotonic() - started)

    def decide_scenarios(
        self, session_id: str, decisions: list[ScenarioDecision]
    ) -> list[NLScenario]:
        from .scenarios import apply_decisions

        session = self._get(session_id)
        with session.lock:
            self._require_state(session, SessionState.SCENARIOS_PROPOSED)
            session.nl_scenarios = apply_decisions(session.nl_scenarios, decisions)
            session.persist()
            session.log(
                f"applied {len(decisions)} decision(s), "
                f"{len(session.nl_scenarios)} scenarios remain"
            )
            return list(session.nl_scenarios)

    def generate_prototype(self, session_id: str) -> tuple[int, str]:
        session = self._get(session_id)
        with session.lock:
            self._require_state(session, SessionState.SCENARIOS_PROPOSED)
            if not session.nl_scenarios:
                raise IllegalState("no decided scenarios to generate from")
            started = time.monotonic()
            self._active[session_id] = ("generate", started)
            session.state = SessionState.GENERATING
            try:
                assert session.requirement is not None
                try:
                    item = self.memory.record(
                        session.requirement, [s.text for s in session.nl_scenarios]
                    )
                    session.log(f"memory: recorded item {item.id}")
                except StoreWriteFailed as exc:
                    session.log(f"memory: record failed, continuing: {exc}")
                blocks = self.scenario_designer.nl_to_gherkin(
                    session.nl_scenarios, transcript=session.transcript, log=session.log
                )
                document = assemble_feature(session.requirement, blocks)
                session.decided_gherkin = render(document)
                _atomic_write_text(session.dir / "scenarios.feature", session.decided_gherkin)
                cycle = self.prototype_designer.run_generation_cycle(
                    document, transcript=session.transcript, log=session.log
                )
                session.flags.extend(cycle.flags)
                session.write_version(cycle.version1)
                session.versions = [1]
                session.state = SessionState.PROTOTYPE_READY
                session.persist()
                session.log("version 1 ready")
                return 1, self._preview_url(session_id, 1)
            except StoryloomError as exc:
                self._fail(session, exc)
                raise
            finally:
                self._active.pop(session_id, None)
                self.estimator.record("generate", time.monotonic() - started)

    def request_modification(
        self, session_id: str, request: ModificationRequest
    ) -> tuple[int, str]:
        session = self._get(session_id)
        with session.lock:
            self._require_state(session, SessionState.PROTOTYPE_READY)
            started = time.monotonic()
            self._active[session_id] = ("modify", started)
            session.state = SessionState.GENERATING
            try:
                latest = max(session.versions)
                current = ProjectCode(version=latest, files=session.read_version(latest))
                next_version = latest + 1
                session.log(f"{request.kind.value} modification requested: {request.text}")
                code = self.prototype_designer.user_modify(
                    current, request, next_version, transcript=session.transcript
                )
                session.write_version(code)
                session.versions.append(next_version)
                session.state = SessionState.PROTOTYPE_READY
                session.persist()
                session.log(f"version {next_version} ready")
                return next_version, self._preview_url(session_id, next_version)
            except (ExtractionFailed, GatewayError) as exc:
                # the prototype that existed before the request stays current
                session.state = SessionState.PROTOTYPE_READY
                session.log(f"modification failed, keeping version {max(session.versions)}: {exc}")
                raise
            except StoryloomError as exc:
                self._fail(session, exc)
                raise
            finally:
                self._active.pop(session_id, None)
                self.estimator.record("modify", time.monotonic() - started)

    def accept(self, session_id: str) -> int:
        session = self._get(session_id)
        with session.lock:
            self._require_state(session, SessionState.PROTOTYPE_READY)
            session.state = SessionState.ACCEPTED
            session.persist()
            final = max(session.versions)
            session.log(f"prototype accepted at version {final}")
            return final

    def read_version_files(self, session_id: str, version: int) -> dict[str, str]:
        return self._get(session_id).read_version(version)

    def package_download(self, session_id: str, version: int) -> bytes:
        session = self._get(session_id)
        files = session.read_version(version)
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            for name in FILE_NAMES:
                info = zipfile.ZipInfo(name, date_time=(2020, 1, 1, 0, 0, 0))
                archive.writestr(info, files[name])
        return buffer.getvalue()

    def preview_file(self, session_id: str, version: int, relpath: str) -> tuple[bytes, str]:
        session = self._get(session_id)
        if version not in session.versions:
            raise UnknownVersion(f"session {session_id} has no version {version}")
        clean = relpath.strip("/")
        if not clean:
            clean = "index.html"
        if "\\" in clean or any(part == ".." for part in clean.split("/")):
            raise PathTraversalRejected(f"illegal preview path {relpath!r}")
        base = session.version_dir(version).resolve()
        candidate = (base / clean).resolve()
        if not candidate.is_relative_to(base):
            raise PathTraversalRejected(f"illegal preview path {relpath!r}")
        if not candidate.is_file():
            raise PreviewFileNotFound(f"no file {clean} in version {version}")
        content_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        return candidate.read_bytes(), content_type

    # -- read side --

    def get_log(self, session_id: str, after: int = 0) -> list[LogEvent]:
        return self._get(session_id).events_after(after)

    def session_view(self, session_id: str) -> dict:
        session = self._get(session_id)
        total_in, total_out = session.usage_tokens()
        cost = self.gateway.price_table.cost(self.config.model_id, total_in, total_out)
        active = self._active.get(session_id)
        progress = None
        if active is not None:
            op, started = active
            progress = {
                "op": op,
                "elapsed_s": time.monotonic() - started,
                "estimated_s": self.estimator.estimate(op),
            }
        return {
            "id": session.id,
            "state": session.state.value,
            "requirement": session.requirement,
            "scenarios": [{"index": s.index, "text": s.text} for s in session.nl_scenarios],
            "versions": [
                {
                    "version": v,
                    "preview_url": self._preview_url(session.id, v),
                    "download_url": f"/api/sessions/{session.id}/download/{v}",
                }
                for v in session.versions
            ],
            "usage": {
                "input_tokens": total_in,
                "output_tokens": total_out,
                "cost_usd": cost,
            },
            "flags": list(session.flags),
            "log_cursor": session.events[-1].seq if session.events else 0,
            "estimates": self.estimator.estimates(),
            "progress": progress,
        }

    def session_ids(self) -> list[str]:
        with self._sessions_lock:
            return list(self._sessions)
