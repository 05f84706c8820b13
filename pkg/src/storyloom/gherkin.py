"""Keyword-anchored handling of Gherkin-style scenario text.

Parsing here is deliberately line-oriented and lenient: model output is
noisy, and downstream only needs the block structure. A line opens a new
block when it starts (after optional indentation) with one of the keywords
``Feature``, ``Background``, ``Scenario``, ``Scenario Outline`` or
``Examples``. Matching is case-sensitive and anchored to the line start;
everything between two keyword lines belongs to the earlier block.

Prose that precedes the first keyword line (for example a chatty lead-in
sentence from a model) is preserved verbatim inside the first block rather
than dropped, so splitting always partitions the input lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import DuplicateFeatureHeader, NoKeywordFound

_KEYWORD_RE = re.compile(r"^\s*(Feature|Background|Scenario Outline|Scenario|Examples)\b")


class BlockKind(str, Enum):
    FEATURE_HEADER = "feature-header"
    BACKGROUND = "background"
    SCENARIO = "scenario"
    SCENARIO_OUTLINE = "scenario-outline"
    EXAMPLES = "examples"


_KIND_BY_KEYWORD = {
    "Feature": BlockKind.FEATURE_HEADER,
    "Background": BlockKind.BACKGROUND,
    "Scenario": BlockKind.SCENARIO,
    "Scenario Outline": BlockKind.SCENARIO_OUTLINE,
    "Examples": BlockKind.EXAMPLES,
}

#: block kinds that count toward the scenario cap
SCENARIO_KINDS = (BlockKind.SCENARIO, BlockKind.SCENARIO_OUTLINE)


def is_keyword_line(line: str) -> bool:
    return _KEYWORD_RE.match(line) is not None


@dataclass(frozen=True, slots=True)
class GherkinScenario:
    """One keyword-anchored block of a feature file.

    ``raw_text`` is the verbatim block (trailing whitespace per line
    stripped). ``body_lines`` are the lines under the keyword line; for
    well-formed input, joining the keyword line and ``body_lines`` with
    newlines reproduces ``raw_text``.
    """

    kind: BlockKind
    title: str
    body_lines: tuple[str, ...]
    raw_text: str

    def rendered(self) -> str:
        return self.raw_text


@dataclass(frozen=True, slots=True)
class GherkinDocument:
    """A full feature: one feature-header block followed by scenario blocks."""

    feature_title: str
    blocks: tuple[GherkinScenario, ...]

    def __post_init__(self) -> None:
        if not self.blocks or self.blocks[0].kind is not BlockKind.FEATURE_HEADER:
            raise ValueError("document must start with a feature header block")
        for block in self.blocks[1:]:
            if block.kind is BlockKind.FEATURE_HEADER:
                raise DuplicateFeatureHeader(
                    "document contains more than one feature header"
                )

    @property
    def scenarios(self) -> tuple[GherkinScenario, ...]:
        return self.blocks[1:]

    def scenario_count(self) -> int:
        return sum(1 for b in self.blocks if b.kind in SCENARIO_KINDS)


def _title_of(keyword: str, line: str) -> str:
    rest = line.lstrip()[len(keyword):]
    return rest.lstrip(":").strip()


def split_scenarios(text: str) -> list[GherkinScenario]:
    """Partition text into keyword-anchored blocks.

    Every input line lands in exactly one block and block boundaries fall
    on keyword lines. Raises :class:`NoKeywordFound` when no line matches
    the keyword rule.
    """
    lines = [ln.rstrip() for ln in text.splitlines()]
    anchors = [i for i, ln in enumerate(lines) if _KEYWORD_RE.match(ln)]
    if not anchors:
        raise NoKeywordFound("no Gherkin keyword line in input")

    blocks: list[GherkinScenario] = []
    for pos, anchor in enumerate(anchors):
        start = 0 if pos == 0 else anchor
        end = anchors[pos + 1] if pos + 1 < len(anchors) else len(lines)
        keyword = _KEYWORD_RE.match(lines[anchor]).group(1)  # type: ignore[union-attr]
        blocks.append(
            GherkinScenario(
                kind=_KIND_BY_KEYWORD[keyword],
                title=_title_of(keyword, lines[anchor]),
                body_lines=tuple(lines[anchor + 1 : end]),
                raw_text="\n".join(lines[start:end]),
            )
        )
    return blocks


def document_from_blocks(blocks: list[GherkinScenario]) -> GherkinDocument:
    """Build a document from split output whose first block is the header."""
    if not blocks:
        raise NoKeywordFound("no blocks")
    head = blocks[0]
    if head.kind is not BlockKind.FEATURE_HEADER:
        raise ValueError("first block is not a feature header")
    return GherkinDocument(feature_title=head.title, blocks=tuple(blocks))


def parse_document(text: str) -> GherkinDocument:
    return document_from_blocks(split_scenarios(text))


def assemble_feature(nl: str, scenarios: list[GherkinScenario]) -> GherkinDocument:
    """Merge scenario blocks under a fresh ``Feature: <nl>`` header.

    ``Examples`` blocks are kept directly after the block they followed, so
    the rendered feature stays valid for outlines. Passing a feature-header
    block raises :class:`DuplicateFeatureHeader`.
    """
    title = " ".join(nl.split())
    if not title:
        raise ValueError("requirement text must be non-empty")
    for block in scenarios:
        if block.kind is BlockKind.FEATURE_HEADER:
            raise DuplicateFeatureHeader("scenario list already contains a feature header")
    header = GherkinScenario(
        kind=BlockKind.FEATURE_HEADER,
        title=title,
        body_lines=(),
        raw_text=f"Feature: {title}",
    )
    return GherkinDocument(feature_title=title, blocks=(header, *scenarios))


def render(document: GherkinDocument) -> str:
    """Serialize deterministically: blocks joined by newline, single trailing newline."""
    return "\n".join(block.raw_text for block in document.blocks) + "\n"
