"""Prompt template loading and rendering.

Templates are plain text files shipped under ``prompt_templates/`` (one per
chain step) using ``{name}`` placeholders. Rendering is a single substitution
pass, so inserted values may safely contain braces or further ``{name}``
lookalikes without being re-expanded. Template text is configuration:
editing a template intentionally changes prompt hashes and therefore
invalidates replay fixtures.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")

TEMPLATE_NAMES = (
    "scenario_design",
    "gherkin_to_nl",
    "nl_to_gherkin",
    "page_design",
    "visual_description",
    "code_generation",
    "consistency_factor",
    "auto_modification",
    "design_modification",
    "function_modification",
)


def render_template(template: str, **values: str) -> str:
    """Replace each known ``{name}`` once; unknown placeholders are an error."""

    def substitute(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in values:
            raise KeyError(f"template placeholder {{{name}}} has no value")
        return values[name]

    return _PLACEHOLDER_RE.sub(substitute, template)


class PromptLibrary:
    """All chain templates, loaded once.

    By default templates come from the packaged ``prompt_templates/``
    directory; an override directory replaces any template that has a
    matching filename.
    """

    def __init__(self, override_dir: Path | str | None = None):
        self._templates: dict[str, str] = {}
        package_dir = resources.files("storyloom") / "prompt_templates"
        for name in TEMPLATE_NAMES:
            text = (package_dir / f"{name}.txt").read_text(encoding="utf-8")
            if override_dir is not None:
                candidate = Path(override_dir) / f"{name}.txt"
                if candidate.exists():
                    text = candidate.read_text(encoding="utf-8")
            # The file-final newline is an artifact of the file format, not
            # part of the prompt.
            self._templates[name] = text.rstrip("\n")

    def get(self, name: str) -> str:
        return self._templates[name]

    def render(self, name: str, **values: str) -> str:
        return render_template(self._templates[name], **values)
