"""Scenario -> prototype chain: page design, visual guidance, code, revision.

Generated prototypes are always exactly three files (index.html, style.css,
script.js). The model is told to wrap each file in named markers; extraction
matches those markers first and falls back to bare fenced blocks when a
model drops the markers. Extraction never reformats file bodies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ExtractionFailed, FormatViolation
from .gateway import GenerationConfig, LlmGateway, Transcript
from .gherkin import GherkinDocument, render
from .prompts import PromptLibrary
from .scenarios import LogFn, _noop_log, parse_numbered_lines

FILE_NAMES = ("index.html", "style.css", "script.js")
_FENCE_TAGS = {"index.html": "html", "style.css": "css", "script.js": "javascript"}

#: instruction and marker block every code-producing prompt must end with
CODE_FORMAT_BLOCK = (
    "Please generate the codes for the three files in <Code> without any note.\n"
    "1.index.html:\n```html\n<Code>\n```\nend index.html\n"
    "2.style.css:\n```css\n<Code>\n```\nend style.css\n"
    "3.script.js:\n```javascript\n<Code>\n```\nend script.js"
)

_PRIMARY_PATTERNS = {
    name: re.compile(
        rf"{re.escape(name)}:\s*\n```{tag}\n(.*?)\n```\s*\nend {re.escape(name)}",
        re.DOTALL,
    )
    for name, tag in _FENCE_TAGS.items()
}

_FALLBACK_FENCE_RE = re.compile(r"```(html|css|javascript)[ \t]*\n(.*?)\n```", re.DOTALL)


def extract_files(raw: str) -> dict[str, str]:
    """Pull the three file bodies out of a completion.

    Named markers win; for files whose markers are missing the first unused
    fenced block with the right language tag is taken, in document order.
    Raises :class:`ExtractionFailed` when any of the three files cannot be
    found either way.
    """
    files: dict[str, str] = {}
    for name in FILE_NAMES:
        match = _PRIMARY_PATTERNS[name].search(raw)
        if match:
            files[name] = match.group(1)
    if len(files) < len(FILE_NAMES):
        used_spans = set()
        fences: list[tuple[str, str, tuple[int, int]]] = [
            (m.group(1), m.group(2), m.span()) for m in _FALLBACK_FENCE_RE.finditer(raw)
        ]
        for name in FILE_NAMES:
            if name in files:
                continue
            tag = _FENCE_TAGS[name]
            for fence_tag, body, span in fences:
                if fence_tag == tag and span not in used_spans:
                    files[name] = body
                    used_spans.add(span)
                    break
    missing = [name for name in FILE_NAMES if name not in files]
    if missing:
        raise ExtractionFailed(f"completion is missing code for: {', '.join(missing)}")
    return {name: files[name] for name in FILE_NAMES}


def render_code_sections(files: dict[str, str]) -> str:
    """Serialize three file bodies in the marker format prompts prescribe.

    ``extract_files(render_code_sections(files)) == files`` holds for any
    bodies that do not themselves contain a closing fence line.
    """
    parts = []
    for i, name in enumerate(FILE_NAMES, start=1):
        tag = _FENCE_TAGS[name]
        parts.append(f"{i}.{name}:\n```{tag}\n{files[name]}\n```\nend {name}")
    return "\n".join(parts)


@dataclass(frozen=True, slots=True)
class VisualDesign:
    page_design: str
    visual_description: str


@dataclass(frozen=True, slots=True)
class ConsistencyFactor:
    """Concrete business-logic cases the generated code must satisfy."""

    cases: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class ProjectCode:
    """One prototype version. Version 0 is the transient pre-revision output;
    persisted versions start at 1."""

    version: int
    files: dict[str, str]

    def __post_init__(self) -> None:
        if self.version < 0:
            raise ValueError("version must be >= 0")
        if tuple(self.files.keys()) != FILE_NAMES:
            raise ValueError(f"files must be exactly {FILE_NAMES} in order")


class ModificationKind(str, Enum):
    DESIGN = "design"
    FUNCTION = "function"


@dataclass(frozen=True, slots=True)
class ModificationRequest:
    kind: ModificationKind
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("modification text must be non-empty")


@dataclass(slots=True)
class CycleResult:
    visual: VisualDesign
    factor: ConsistencyFactor
    version1: ProjectCode
    flags: list[str] = field(default_factory=list)


class PrototypeDesigner:
    """Prototype-side chain steps.

    One full generation cycle is: page design, visual description, code
    generation, extraction, consistency cases, then exactly one automatic
    revision pass that produces version 1.
    """

    def __init__(self, gateway: LlmGateway, library: PromptLibrary, config: GenerationConfig):
        self.gateway = gateway
        self.library = library
        self.config = config

    # -- prompt assembly --

    def build_page_prompt(self, document: GherkinDocument) -> str:
        return self.library.render("page_design", gherkin=render(document).rstrip("\n"))

    def build_visual_prompt(self, page_design: str) -> str:
        return self.library.render("visual_description", page_design=page_design)

    def build_code_prompt(self, document: GherkinDocument, visual: VisualDesign) -> str:
        return self.library.render(
            "code_generation",
            gherkin=render(document).rstrip("\n"),
            page_design=visual.page_design,
            visual_description=visual.visual_description,
        ).rstrip("\n")

    def build_factor_prompt(self, document: GherkinDocument) -> str:
        return self.library.render(
            "consistency_factor", gherkin=render(document).rstrip("\n")
        )

    def build_auto_prompt(self, factor: ConsistencyFactor, code: ProjectCode) -> str:
        numbered = "\n".join(f"{i}. {c}" for i, c in enumerate(factor.cases, start=1))
        return self.library.render(
            "auto_modification", factor=numbered, code=render_code_sections(code.files)
        ).rstrip("\n")

    def build_modification_prompt(self, request: ModificationRequest, code: ProjectCode) -> str:
        template = (
            "design_modification"
            if request.kind is ModificationKind.DESIGN
            else "function_modification"
        )
        return self.library.render(
            template, feedback=request.text, code=render_code_sections(code.files)
        ).rstrip("\n")

    # -- chain steps --

    def design_pages(
        self,
        document: GherkinDocument,
        *,
        transcript: Transcript | None = None,
    ) -> str:
        text, _usage = self.gateway.complete(
            self.build_page_prompt(document), self.config,
            step="page_design", transcript=transcript,
        )
        return text

    def describe_visuals(
        self,
        page_design: str,
        *,
        transcript: Transcript | None = None,
    ) -> str:
        if not page_design.strip():
            raise ValueError("page_design must be non-empty")
        text, _usage = self.gateway.complete(
            self.build_visual_prompt(page_design), self.config,
            step="visual_description", transcript=transcript,
        )
        return text

    def generate_code(
        self,
        document: GherkinDocument,
        visual: VisualDesign,
        *,
        transcript: Transcript | None = None,
    ) -> ProjectCode:
        """First code pass; marker violations go through the repair cycle."""

        def parse(text: str) -> dict[str, str]:
            try:
                return extract_files(text)
            except ExtractionFailed as exc:
                raise FormatViolation(str(exc)) from exc

        files = self.gateway.complete_with_repair(
            self.build_code_prompt(document, visual),
            self.config,
            step="code_generation",
            parse=parse,
            hint="reply must contain index.html, style.css and script.js in the marker format",
            final_error=ExtractionFailed,
            transcript=transcript,
        )
        return ProjectCode(version=0, files=files)

    def consistency_factor(
        self,
        document: GherkinDocument,
        *,
        transcript: Transcript | None = None,
        log: LogFn = _noop_log,
    ) -> tuple[ConsistencyFactor, bool]:
        """At least one case per scenario; one repair, then accept with a flag."""
        expected = document.scenario_count()
        prompt = self.build_factor_prompt(document)
        cases: list[str] = []
        flagged = False
        for attempt in range(2):
            completion, _usage = self.gateway.complete(
                prompt, self.config, step="consistency_factor",
                transcript=transcript, attempt=attempt,
            )
            cases = parse_numbered_lines(completion)
            if len(cases) >= expected and cases:
                break
            log(
                f"consistency_factor: expected at least {expected} cases, "
                f"got {len(cases)} (attempt {attempt})"
            )
            prompt = self.build_factor_prompt(document) + (
                f"\n\nYour previous reply did not contain at least {expected} "
                f"numbered cases. Reply again with one numbered case per scenario."
            )
        if len(cases) < expected or not cases:
            flagged = True
            log("consistency_factor: accepting an undersized case list")
        return ConsistencyFactor(cases=tuple(cases)), flagged

    def auto_modify(
        self,
        code: ProjectCode,
        factor: ConsistencyFactor,
        *,
        transcript: Transcript | None = None,
        log: LogFn = _noop_log,
    ) -> tuple[ProjectCode, bool]:
        """The single automatic revision pass; falls back to the unrevised code."""
        completion, _usage = self.gateway.complete(
            self.build_auto_prompt(factor, code), self.config,
            step="auto_modification", transcript=transcript,
        )
        try:
            files = extract_files(completion)
        except ExtractionFailed:
            log("auto_modification: revised reply unusable, keeping unrevised code")
            return ProjectCode(version=1, files=dict(code.files)), True
        return ProjectCode(version=1, files=files), False

    def user_modify(
        self,
        code: ProjectCode,
        request: ModificationRequest,
        next_version: int,
        *,
        transcript: Transcript | None = None,
    ) -> ProjectCode:
        """Apply one user feedback round; extraction failure surfaces to the caller."""
        step = (
            "design_modification"
            if request.kind is ModificationKind.DESIGN
            else "function_modification"
        )
        completion, _usage = self.gateway.complete(
            self.build_modification_prompt(request, code), self.config,
            step=step, transcript=transcript,
        )
        return ProjectCode(version=next_version, files=extract_files(completion))

    def run_generation_cycle(
        self,
        document: GherkinDocument,
        *,
        transcript: Transcript | None = None,
        log: LogFn = _noop_log,
    ) -> CycleResult:
        """Full cycle from a decided feature to version 1."""
        page = self.design_pages(document, transcript=transcript)
        visual = VisualDesign(
            page_design=page,
            visual_description=self.describe_visuals(page, transcript=transcript),
        )
        code = self.generate_code(document, visual, transcript=transcript)
        factor, factor_flag = self.consistency_factor(
            document, transcript=transcript, log=log
        )
        version1, fallback_flag = self.auto_modify(
            code, factor, transcript=transcript, log=log
        )
        flags = []
        if factor_flag:
            flags.append("consistency_factor_undersized")
        if fallback_flag:
            flags.append("auto_modification_fallback")
        return CycleResult(visual=visual, factor=factor, version1=version1, flags=flags)
