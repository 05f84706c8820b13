"""Requirement -> scenario chain: design, translate, apply user decisions.

The chain keeps the user in charge of scope: the model proposes Gherkin
scenarios, they are translated to plain language, the user confirms, adds,
deletes or modifies them, and only the decided set moves on to code
generation. ``apply_decisions`` is a pure fold so the decision checkpoint
can be replayed and audited.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import FormatViolation, IndexOutOfRange, MalformedGherkin
from .gateway import GenerationConfig, LlmGateway, Transcript
from .gherkin import (
    SCENARIO_KINDS,
    BlockKind,
    GherkinDocument,
    GherkinScenario,
    assemble_feature,
    split_scenarios,
)
from .memory import MemoryItem
from .prompts import PromptLibrary

LogFn = Callable[[str], None]


def _noop_log(_message: str) -> None:
    return None


@dataclass(frozen=True, slots=True)
class NLScenario:
    """One scenario in user-facing wording; indices run 1..n without gaps."""

    index: int
    text: str


class DecisionAction(str, Enum):
    CONFIRM = "confirm"
    ADD = "add"
    DELETE = "delete"
    MODIFY = "modify"


@dataclass(frozen=True, slots=True)
class ScenarioDecision:
    action: DecisionAction
    index: int | None = None
    text: str | None = None


def _reindex(texts: list[str]) -> list[NLScenario]:
    return [NLScenario(index=i + 1, text=t) for i, t in enumerate(texts)]


def apply_decisions(
    scenarios: list[NLScenario], decisions: list[ScenarioDecision]
) -> list[NLScenario]:
    """Left-fold user decisions over the scenario list.

    Confirm keeps the list as is, Add appends with the next index, Delete
    removes and closes the gap, Modify replaces the text at an index. Each
    decision is validated against the list state at its application point.
    Applying decisions one call at a time equals one batched call.
    """
    texts = [s.text for s in scenarios]
    for decision in decisions:
        if decision.action is DecisionAction.CONFIRM:
            continue
        if decision.action is DecisionAction.ADD:
            if not decision.text or not decision.text.strip():
                raise ValueError("add decision requires non-empty text")
            texts.append(decision.text)
            continue
        if decision.index is None or not 1 <= decision.index <= len(texts):
            raise IndexOutOfRange(
                f"decision {decision.action.value} targets index {decision.index} "
                f"but the list has {len(texts)} scenarios"
            )
        if decision.action is DecisionAction.DELETE:
            del texts[decision.index - 1]
        else:
            if not decision.text or not decision.text.strip():
                raise ValueError("modify decision requires non-empty text")
            texts[decision.index - 1] = decision.text
    return _reindex(texts)


# --------------------------------------------------------------------------
# Parsing helpers

_NUMBERED_ITEM_RE = re.compile(r"^\s*(\d+)[.)]\s*(.*)$")


def parse_numbered_lines(text: str) -> list[str]:
    """Collect items from a numbered list; continuation lines join their item."""
    items: list[str] = []
    current: list[str] | None = None
    for line in text.splitlines():
        match = _NUMBERED_ITEM_RE.match(line)
        if match:
            if current is not None:
                items.append("\n".join(current).strip())
            current = [match.group(2)]
        elif current is not None and line.strip():
            current.append(line.rstrip())
    if current is not None:
        items.append("\n".join(current).strip())
    return [item for item in items if item]


def _scenario_blocks(blocks: list[GherkinScenario]) -> list[GherkinScenario]:
    return [b for b in blocks if b.kind is not BlockKind.FEATURE_HEADER]


# --------------------------------------------------------------------------
# Chain

class ScenarioDesigner:
    """Scenario-side chain steps, one model call each."""

    def __init__(
        self,
        gateway: LlmGateway,
        library: PromptLibrary,
        config: GenerationConfig,
        max_scenarios: int = 10,
    ):
        self.gateway = gateway
        self.library = library
        self.config = config
        self.max_scenarios = max_scenarios

    # -- prompt assembly (pure, used by tests and fixture tooling) --

    def build_design_prompt(self, nl: str, example: MemoryItem | None) -> str:
        example_section = ""
        if example is not None:
            numbered = "\n".join(
                f"{i}. {text}" for i, text in enumerate(example.scenarios, start=1)
            )
            example_section = (
                "A previous user with a similar requirement decided on these "
                "scenarios, use them as reference:\n"
                f"Requirement: {example.feature_text}\n"
                f"Decided scenarios:\n{numbered}\n\n"
            )
        return self.library.render("scenario_design", example=example_section, nl=nl)

    def build_gherkin_to_nl_prompt(self, scenarios: list[GherkinScenario]) -> str:
        joined = ",".join(f"{{{s.raw_text}}}" for s in scenarios)
        return self.library.render("gherkin_to_nl", scenarios=joined)

    def build_nl_to_gherkin_prompt(self, decided: list[NLScenario]) -> str:
        numbered = "\n".join(f"{s.index}. {s.text}" for s in decided)
        return self.library.render("nl_to_gherkin", scenarios=numbered)

    # -- chain steps --

    def design_scenarios(
        self,
        nl: str,
        example: MemoryItem | None,
        *,
        transcript: Transcript | None = None,
        log: LogFn = _noop_log,
    ) -> GherkinDocument:
        """Propose a feature for the requirement, capped at ``max_scenarios``."""
        if not nl.strip():
            raise ValueError("requirement must be non-empty")
        prompt = self.build_design_prompt(nl, example)

        def parse(text: str) -> list[GherkinScenario]:
            try:
                blocks = split_scenarios(text)
            except Exception as exc:
                raise FormatViolation(str(exc)) from exc
            scenario_blocks = _scenario_blocks(blocks)
            if not any(b.kind in SCENARIO_KINDS for b in scenario_blocks):
                raise FormatViolation("reply contains no Scenario block")
            return scenario_blocks

        blocks = self.gateway.complete_with_repair(
            prompt,
            self.config,
            step="scenario_design",
            parse=parse,
            hint="reply must be a Gherkin feature with at least one Scenario block",
            final_error=MalformedGherkin,
            transcript=transcript,
        )
        kept: list[GherkinScenario] = []
        scenario_count = 0
        truncating = False
        for block in blocks:
            if block.kind in SCENARIO_KINDS:
                if scenario_count == self.max_scenarios:
                    truncating = True
                    continue
                scenario_count += 1
                truncating = False
            elif block.kind is BlockKind.EXAMPLES and truncating:
                # Examples belonging to a truncated outline go with it.
                continue
            kept.append(block)
        if scenario_count < len([b for b in blocks if b.kind in SCENARIO_KINDS]):
            log(f"scenario_design: truncated to the first {self.max_scenarios} scenarios")
        return assemble_feature(nl, kept)

    def gherkin_to_nl(
        self,
        scenarios: list[GherkinScenario],
        *,
        transcript: Transcript | None = None,
        log: LogFn = _noop_log,
    ) -> list[NLScenario]:
        """Translate scenario blocks to plain language, one entry per block.

        A count mismatch is repaired once; if it persists, the verbatim
        block text is used so the user always sees the full set.
        """
        if not scenarios:
            raise ValueError("scenarios must be non-empty")
        prompt = self.build_gherkin_to_nl_prompt(scenarios)
        texts: list[str] | None = None
        for attempt in range(2):
            completion, _usage = self.gateway.complete(
                prompt, self.config, step="gherkin_to_nl",
                transcript=transcript, attempt=attempt,
            )
            items = parse_numbered_lines(completion)
            if len(items) == len(scenarios):
                texts = items
                break
            log(
                f"gherkin_to_nl: expected {len(scenarios)} descriptions, "
                f"got {len(items)} (attempt {attempt})"
            )
            prompt = self.build_gherkin_to_nl_prompt(scenarios) + (
                f"\n\nYour previous reply did not contain exactly "
                f"{len(scenarios)} numbered descriptions. Reply again with one "
                f"numbered line per scenario."
            )
        if texts is None:
            log("gherkin_to_nl: falling back to verbatim scenario text")
            texts = [s.raw_text for s in scenarios]
        return _reindex(texts)

    def nl_to_gherkin(
        self,
        decided: list[NLScenario],
        *,
        transcript: Transcript | None = None,
        log: LogFn = _noop_log,
    ) -> list[GherkinScenario]:
        """Turn decided descriptions back into Gherkin scenario blocks."""
        if not decided:
            raise ValueError("decided scenarios must be non-empty")
        prompt = self.build_nl_to_gherkin_prompt(decided)
        stray_header = False

        def parse(text: str) -> list[GherkinScenario]:
            try:
                blocks = split_scenarios(text)
            except Exception as exc:
                raise FormatViolation(str(exc)) from exc
            nonlocal stray_header
            stray_header = any(b.kind is BlockKind.FEATURE_HEADER for b in blocks)
            scenario_blocks = _scenario_blocks(blocks)
            if len(scenario_blocks) < len(decided):
                raise FormatViolation(
                    f"expected at least {len(decided)} scenario blocks, "
                    f"got {len(scenario_blocks)}"
                )
            return scenario_blocks

        blocks = self.gateway.complete_with_repair(
            prompt,
            self.config,
            step="nl_to_gherkin",
            parse=parse,
            hint=(
                f"reply must contain at least {len(decided)} Gherkin Scenario "
                "blocks and no Feature line"
            ),
            final_error=MalformedGherkin,
            transcript=transcript,
        )
        if stray_header:
            log("nl_to_gherkin: dropped a stray Feature header from the reply")
        return blocks
