"""Model access: providers, sampling configuration, usage and transcripts.

Providers implement one method, ``complete(prompt, config)``. The live
provider speaks the common chat-completions JSON shape over HTTP. The
replay provider answers from recorded fixture files keyed by a stable hash
of (model id, prompt), which keeps every test and batch run offline and
bit-reproducible. A recording provider wraps any other provider and writes
those fixture files as a side effect.

Cost accounting never trusts provider-reported billing: cost is always
token counts times the configured price table.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Protocol, TypeVar

import httpx

from .errors import (
    AuthFailure,
    EmptyCompletion,
    FixtureMissing,
    FormatViolation,
    GatewayError,
    ProviderTimeout,
    ProviderUnavailable,
    RateLimited,
)

T = TypeVar("T")


@dataclass(slots=True)
class GenerationConfig:
    """Sampling parameters sent with every completion request."""

    model_id: str
    temperature: float = 0.3
    top_p: float = 1.0
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0
    max_tokens: int = 4096

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature out of range")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p out of range")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True, slots=True)
class Usage:
    input_tokens: int
    output_tokens: int
    cost_usd: float

    def to_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cost_usd": self.cost_usd,
        }


class PriceTable:
    """Per-model USD prices per 1000 input/output tokens."""

    def __init__(self, prices: dict[str, dict[str, float]] | None = None):
        self._prices = prices or {}

    def rates(self, model_id: str) -> tuple[float, float]:
        entry = self._prices.get(model_id) or self._prices.get("default") or {}
        return float(entry.get("input_per_1k", 0.0)), float(entry.get("output_per_1k", 0.0))

    def cost(self, model_id: str, input_tokens: int, output_tokens: int) -> float:
        rate_in, rate_out = self.rates(model_id)
        return input_tokens * rate_in / 1000.0 + output_tokens * rate_out / 1000.0

    def usage(self, model_id: str, input_tokens: int, output_tokens: int) -> Usage:
        return Usage(input_tokens, output_tokens, self.cost(model_id, input_tokens, output_tokens))


# --------------------------------------------------------------------------
# Token counting

_TOKEN_PIECE_RE = re.compile(r"[A-Za-z0-9_]+|[^A-Za-z0-9_\s]+")


def approx_token_count(text: str) -> int:
    """Deterministic approximation: whitespace pieces split again at punctuation."""
    return sum(len(_TOKEN_PIECE_RE.findall(piece)) for piece in text.split())


class TokenCounter:
    """Counts tokens with a pluggable tokenizer.

    Without a real model tokenizer the approximate rule above is used; the
    ``approximate`` flag is carried into evaluation run metadata so reports
    are honest about it.
    """

    def __init__(self, name: str = "approximate", fn: Callable[[str], int] | None = None):
        self.name = name
        self._fn = fn or approx_token_count
        self.approximate = fn is None

    def count(self, text: str) -> int:
        return self._fn(text)


# --------------------------------------------------------------------------
# Transcript

@dataclass(frozen=True, slots=True)
class TranscriptEntry:
    step: str
    prompt: str
    completion: str
    usage: Usage
    timestamp: float
    attempt: int = 0

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "prompt": self.prompt,
            "completion": self.completion,
            "usage": self.usage.to_dict(),
            "timestamp": self.timestamp,
            "attempt": self.attempt,
        }


class Transcript:
    """Ordered record of every completion call made on behalf of one session."""

    def __init__(self, sink: Callable[[TranscriptEntry], None] | None = None):
        self.entries: list[TranscriptEntry] = []
        self._sink = sink

    def append(self, entry: TranscriptEntry) -> None:
        self.entries.append(entry)
        if self._sink is not None:
            self._sink(entry)

    def steps(self) -> list[str]:
        return [e.step for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


# --------------------------------------------------------------------------
# Providers

class ProviderReply(NamedTuple):
    text: str
    input_tokens: int | None = None
    output_tokens: int | None = None


class Provider(Protocol):
    def complete(self, prompt: str, config: GenerationConfig) -> ProviderReply: ...


def prompt_key(model_id: str, prompt: str) -> str:
    """Stable fixture key: sha256 over model id and the prompt.

    Normalization strips trailing whitespace only, so any intentional
    prompt-template change invalidates old fixtures.
    """
    digest = hashlib.sha256()
    digest.update(model_id.encode("utf-8"))
    digest.update(b"\n")
    digest.update(prompt.rstrip().encode("utf-8"))
    return digest.hexdigest()


class ReplayProvider:
    """Answers completions from fixture files recorded earlier.

    Fixture layout: one ``<key>.json`` file per prompt under the fixtures
    directory, holding the prompt, the completion, and token counts.
    """

    def __init__(self, fixtures_dir: Path | str):
        self.fixtures_dir = Path(fixtures_dir)

    def fixture_path(self, key: str) -> Path:
        return self.fixtures_dir / f"{key}.json"

    def complete(self, prompt: str, config: GenerationConfig) -> ProviderReply:
        key = prompt_key(config.model_id, prompt)
        path = self.fixture_path(key)
        if not path.exists():
            raise FixtureMissing(key)
        data = json.loads(path.read_text(encoding="utf-8"))
        return ProviderReply(
            text=data["completion"],
            input_tokens=data.get("input_tokens"),
            output_tokens=data.get("output_tokens"),
        )


class RecordingProvider:
    """Wraps a provider and writes a replay fixture for every completion."""

    def __init__(self, inner: Provider, fixtures_dir: Path | str):
        self.inner = inner
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, prompt: str, config: GenerationConfig) -> ProviderReply:
        reply = self.inner.complete(prompt, config)
        key = prompt_key(config.model_id, prompt)
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)
        record = {
            "model_id": config.model_id,
            "prompt": prompt,
            "completion": reply.text,
            "input_tokens": reply.input_tokens,
            "output_tokens": reply.output_tokens,
        }
        path = self.fixtures_dir / f"{key}.json"
        path.write_text(json.dumps(record, ensure_ascii=False, indent=1), encoding="utf-8")
        return reply


class LiveProvider:
    """Chat-completions HTTP provider.

    The API key is read from the environment variable named in the
    configuration; the key itself never appears in config files or logs.
    """

    def __init__(self, base_url: str, api_key_env: str, timeout_s: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def _api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise AuthFailure(f"environment variable {self.api_key_env} is not set")
        return key

    def complete(self, prompt: str, config: GenerationConfig) -> ProviderReply:
        body = {
            "model": config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
            "top_p": config.top_p,
            "frequency_penalty": config.frequency_penalty,
            "presence_penalty": config.presence_penalty,
            "max_tokens": config.max_tokens,
        }
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self._api_key()}"},
                timeout=self.timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        if response.status_code in (401, 403):
            raise AuthFailure(f"provider rejected credentials ({response.status_code})")
        if response.status_code == 429:
            raise RateLimited("provider rate limit hit")
        if response.status_code >= 500:
            raise ProviderUnavailable(f"provider returned {response.status_code}")
        if response.status_code != 200:
            raise GatewayError(f"unexpected provider status {response.status_code}")
        payload = response.json()
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed provider response: {exc}") from exc
        usage = payload.get("usage") or {}
        return ProviderReply(
            text=text or "",
            input_tokens=usage.get("prompt_tokens"),
            output_tokens=usage.get("completion_tokens"),
        )


# --------------------------------------------------------------------------
# Gateway

_REPAIR_SUFFIX = (
    "\n\nYour previous reply did not follow the required format: {hint}. "
    "Reply again and follow the required format exactly."
)


@dataclass(slots=True)
class _Attempt:
    text: str
    usage: Usage


class LlmGateway:
    """Single entry point for completions with retries, pricing and transcripts.

    Transient provider failures are retried up to ``max_attempts`` times
    with exponential backoff. A bounded semaphore caps in-flight requests
    across all sessions sharing the gateway.
    """

    def __init__(
        self,
        provider: Provider,
        price_table: PriceTable,
        token_counter: TokenCounter | None = None,
        *,
        max_attempts: int = 3,
        backoff_base_s: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
        max_inflight: int = 8,
        clock: Callable[[], float] = time.time,
    ):
        self.provider = provider
        self.price_table = price_table
        self.token_counter = token_counter or TokenCounter()
        self.max_attempts = max_attempts
        self.backoff_base_s = backoff_base_s
        self._sleep = sleep
        self._clock = clock
        self._inflight = threading.BoundedSemaphore(max_inflight)

    def _call_provider(self, prompt: str, config: GenerationConfig) -> ProviderReply:
        last: GatewayError | None = None
        for attempt in range(self.max_attempts):
            try:
                with self._inflight:
                    return self.provider.complete(prompt, config)
            except GatewayError as exc:
                if not exc.transient:
                    raise
                last = exc
                if attempt + 1 < self.max_attempts:
                    self._sleep(self.backoff_base_s * (2**attempt))
        assert last is not None
        raise last

    def complete(
        self,
        prompt: str,
        config: GenerationConfig,
        *,
        step: str,
        transcript: Transcript | None = None,
        attempt: int = 0,
    ) -> tuple[str, Usage]:
        """Run one completion; returns the text and its priced usage."""
        if not prompt.strip():
            raise ValueError("prompt must be non-empty")
        reply = self._call_provider(prompt, config)
        if not reply.text.strip():
            raise EmptyCompletion(f"provider returned an empty completion at step {step}")
        input_tokens = (
            reply.input_tokens
            if reply.input_tokens is not None
            else self.token_counter.count(prompt)
        )
        output_tokens = (
            reply.output_tokens
            if reply.output_tokens is not None
            else self.token_counter.count(reply.text)
        )
        usage = self.price_table.usage(config.model_id, input_tokens, output_tokens)
        if transcript is not None:
            transcript.append(
                TranscriptEntry(
                    step=step,
                    prompt=prompt,
                    completion=reply.text,
                    usage=usage,
                    timestamp=self._clock(),
                    attempt=attempt,
                )
            )
        return reply.text, usage

    def complete_with_repair(
        self,
        prompt: str,
        config: GenerationConfig,
        *,
        step: str,
        parse: Callable[[str], T],
        hint: str,
        final_error: Callable[[str], Exception],
        transcript: Transcript | None = None,
        max_repairs: int = 2,
    ) -> T:
        """Completion with format repair.

        ``parse`` must raise :class:`FormatViolation` on bad output. The
        original prompt is re-sent with a corrective suffix on violation;
        after ``max_repairs`` failed repairs the caller's error surfaces.
        """
        current = prompt
        last_message = ""
        for attempt in range(max_repairs + 1):
            text, _usage = self.complete(
                current, config, step=step, transcript=transcript, attempt=attempt
            )
            try:
                return parse(text)
            except FormatViolation as violation:
                last_message = str(violation)
                current = prompt + _REPAIR_SUFFIX.format(hint=hint)
        raise final_error(last_message)

    def accumulate(self, usages: list[Usage], model_id: str) -> Usage:
        """Total usage: token sums are exact; cost is re-priced from the totals."""
        total_in = sum(u.input_tokens for u in usages)
        total_out = sum(u.output_tokens for u in usages)
        return self.price_table.usage(model_id, total_in, total_out)
