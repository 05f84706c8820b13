"""Application configuration: one JSON file, flat keys, CLI overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import GenerationConfig

DEFAULT_PRICE_TABLE: dict[str, dict[str, float]] = {
    "gpt-3.5-turbo": {"input_per_1k": 0.0015, "output_per_1k": 0.002},
    "default": {"input_per_1k": 0.0, "output_per_1k": 0.0},
}

DEFAULT_ESTIMATES: dict[str, float] = {
    "scenarios": 15.0,
    "generate": 45.0,
    "modify": 20.0,
}


@dataclass(slots=True)
class AppConfig:
    provider: str = "replay"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    model_id: str = "gpt-3.5-turbo"
    temperature: float = 0.3
    top_p: float = 1.0
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0
    max_tokens: int = 4096
    similarity_threshold: float = 0.7
    max_scenarios: int = 10
    price_table: dict = field(default_factory=lambda: dict(DEFAULT_PRICE_TABLE))
    workspace: str = "./workspace"
    fixtures_dir: str = "./transcript_fixtures"
    estimate_defaults: dict = field(default_factory=lambda: dict(DEFAULT_ESTIMATES))
    request_timeout_s: float = 60.0
    max_inflight: int = 8

    def __post_init__(self) -> None:
        if self.provider not in ("replay", "live"):
            raise ValueError("provider must be 'replay' or 'live'")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be within [0, 1]")
        if self.max_scenarios < 1:
            raise ValueError("max_scenarios must be positive")

    @classmethod
    def load(cls, path: Path | str) -> "AppConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            model_id=self.model_id,
            temperature=self.temperature,
            top_p=self.top_p,
            frequency_penalty=self.frequency_penalty,
            presence_penalty=self.presence_penalty,
            max_tokens=self.max_tokens,
        )

    def workspace_path(self) -> Path:
        return Path(self.workspace)
