from __future__ import annotations

import pytest

from storyloom.config import AppConfig
from storyloom.gateway import LlmGateway, PriceTable, RecordingProvider, TokenCounter
from storyloom.session import SessionService

from providers import ScriptedProvider, run_rollcall_flow


def make_config(workspace, **overrides) -> AppConfig:
    settings = {"workspace": str(workspace)}
    settings.update(overrides)
    return AppConfig(**settings)


def build_service(workspace, provider, **config_overrides) -> SessionService:
    config = make_config(workspace, **config_overrides)
    gateway = LlmGateway(provider, PriceTable(config.price_table), TokenCounter())
    return SessionService(config, gateway)


@pytest.fixture()
def scripted_service(tmp_path):
    return build_service(tmp_path / "ws", ScriptedProvider())


@pytest.fixture(scope="session")
def rollcall_fixtures(tmp_path_factory):
    """Replay fixtures for the full roll-call flow, recorded once."""
    fixtures_dir = tmp_path_factory.mktemp("transcript_fixtures")
    workspace = tmp_path_factory.mktemp("recording_ws")
    service = build_service(workspace, RecordingProvider(ScriptedProvider(), fixtures_dir))
    run_rollcall_flow(service)
    return fixtures_dir
