"""Serve a replay-backed instance of the API plus the built UI for the e2e smoke.

Records the canonical scripted flow into a temp fixture directory first, then
boots the server with a replay provider so the smoke test runs fully offline.
Prints one JSON line with the flow inputs the UI must replay, then serves.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

FRONTEND_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(FRONTEND_DIR.parent / "tests"))

import uvicorn  # noqa: E402

import conftest  # noqa: E402
from providers import (  # noqa: E402
    DESIGN_FEEDBACK,
    FUNCTION_FEEDBACK,
    MOD_SENTENCE,
    ROLL_CALL_NL,
    ScriptedProvider,
    run_rollcall_flow,
)
from storyloom.gateway import RecordingProvider, ReplayProvider  # noqa: E402
from storyloom.server import create_app  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, default=8917)
    args = parser.parse_args()

    base = Path(tempfile.mkdtemp(prefix="storyloom-e2e-"))
    fixtures = base / "fixtures"
    fixtures.mkdir()
    recorder = conftest.build_service(
        base / "ws-record", RecordingProvider(ScriptedProvider(), fixtures)
    )
    run_rollcall_flow(recorder)

    service = conftest.build_service(base / "ws-serve", ReplayProvider(fixtures))
    app = create_app(service, ui_dir=str(FRONTEND_DIR))
    print(
        json.dumps(
            {
                "ready": True,
                "port": args.port,
                "requirement": ROLL_CALL_NL,
                "mod_sentence": MOD_SENTENCE,
                "design_feedback": DESIGN_FEEDBACK,
                "function_feedback": FUNCTION_FEEDBACK,
            }
        ),
        flush=True,
    )
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
