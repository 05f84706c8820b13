"""Deterministic provider doubles and shared flow helpers for the tests.

ScriptedProvider recognizes which chain step a prompt belongs to (every
template opens with a distinct sentence) and answers with canned,
well-formed content. Wrapping it in a RecordingProvider materializes replay
fixtures; the replay tests then re-run the same flows offline.
"""

from __future__ import annotations

import re

from storyloom.gateway import ProviderReply
from storyloom.prototype import (
    ModificationKind,
    ModificationRequest,
    extract_files,
    render_code_sections,
)
from storyloom.scenarios import DecisionAction, ScenarioDecision

ROLL_CALL_NL = "Please generate a web system with random roll call function."
MOD_SENTENCE = "Then the chosen student could be any of the five students."
DESIGN_FEEDBACK = "I want more colors for kids, instead of off-white"
FUNCTION_FEEDBACK = "I want to be able to click on a card and read it automatically"

_MARKERS = {
    "scenario_design": "You are designing behavior scenarios",
    "gherkin_to_nl": "You are explaining formal behavior scenarios",
    "nl_to_gherkin": "You are turning decided natural-language scenario descriptions",
    "page_design": "You are planning the page content",
    "visual_description": "You are writing visual styling guidance",
    "code_generation": "You are generating a complete static web application",
    "consistency_factor": "You are writing business-logic test cases",
    "auto_modification": "You are revising a static web application",
    "design_modification": "You are restyling a static web application",
    "function_modification": "You are modifying the functionality of a static web application",
}

ROLL_CALL_FEATURE = """Feature: Random roll call
Scenario: Randomly select a student
  Given a class list with five students
  When the user clicks the Start button
  Then one student name is shown as the pick
Scenario: Manage the student list
  Given the class list is shown
  When the user adds or removes a student name
  Then the list updates and later picks use it"""

ROLL_CALL_NLS = [
    "The page shows the five students and a Start button; clicking Start picks one student at random and shows the name.",
    "The page lets the user add or remove student names, and later picks use the updated list.",
]

GENERIC_FEATURE_TAIL = """Scenario: Basic use
  Given the page is open
  When the user performs the main action
  Then the expected result is shown
Scenario: Handle empty input
  Given the page is open
  When the user submits without any input
  Then a helpful message is shown"""

PAGE_DESIGN_TEXT = """Header: page title and a one-line purpose statement.
Main: the interactive area holding the list, the input field and the primary button.
Footer: small print with usage hints.
Sitemap: a single page served as index.html."""

VISUAL_TEXT = """Palette: soft off-white background, one saturated accent for the primary button.
Typography: a single sans-serif family, larger weight for the page title.
Spacing: generous padding around the main area, grouped controls sit together.
Emphasis: the primary action button is the focal point of the page."""

ROLL_CALL_HTML = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Random Roll Call</title>
<link rel="stylesheet" href="style.css">
</head>
<body>
<h1>Random Roll Call</h1>
<main id="app">
  <ul id="students"></ul>
  <input id="entry" type="text" placeholder="Student name">
  <button id="add">Add</button>
  <button id="start">Start</button>
  <p id="result" class="card"></p>
</main>
<script src="script.js"></script>
</body>
</html>"""

ROLL_CALL_CSS = """body {
  font-family: sans-serif;
  background: #faf9f6;
  margin: 2rem;
}
#app {
  max-width: 30rem;
  padding: 1rem;
}
#start {
  background: #2f6fed;
  color: white;
  padding: 0.5rem 1rem;
}
.card {
  border: 1px solid #ddd;
  padding: 0.5rem;
}"""

ROLL_CALL_JS = """var students = ["Ava", "Ben", "Chloe", "Dan", "Eri"];
function renderList() {
  var list = document.getElementById("students");
  list.innerHTML = "";
  students.forEach(function (name, i) {
    var li = document.createElement("li");
    li.textContent = name;
    var del = document.createElement("button");
    del.textContent = "Remove";
    del.onclick = function () { students.splice(i, 1); renderList(); };
    li.appendChild(del);
    list.appendChild(li);
  });
}
document.getElementById("add").onclick = function () {
  var entry = document.getElementById("entry");
  if (entry.value.trim()) { students.push(entry.value.trim()); entry.value = ""; renderList(); }
};
document.getElementById("start").onclick = function () {
  if (!students.length) { return; }
  var pick = students[Math.floor(Math.random() * students.length)];
  document.getElementById("result").textContent = pick;
};
renderList();"""

KID_CSS = """body {
  font-family: sans-serif;
  background: #fff3b0;
  margin: 2rem;
}
#app {
  max-width: 30rem;
  padding: 1rem;
  background: #bde0fe;
  border-radius: 12px;
}
#start {
  background: #ff6392;
  color: white;
  padding: 0.5rem 1rem;
  border-radius: 8px;
}
.card {
  border: 3px dotted #7bdff2;
  padding: 0.5rem;
  background: #cdeac0;
}"""

READ_ALOUD_JS_SUFFIX = """
document.addEventListener("click", function (event) {
  var card = event.target.closest(".card");
  if (card && card.textContent.trim()) {
    var utterance = new SpeechSynthesisUtterance(card.textContent);
    window.speechSynthesis.speak(utterance);
  }
});"""

_NUMBERED_RE = re.compile(r"(?m)^\s*(\d+)[.)]\s*(.+)$")
_EMBED_BLOCK_RE = re.compile(r"\{(?:Feature|Background|Scenario Outline|Scenario|Examples)\b")
_SCENARIO_LINE_RE = re.compile(r"(?m)^\s*Scenario(?: Outline)?\b")


def _slug(text: str, words: int = 6) -> str:
    return " ".join(text.split()[:words])


class ScriptedProvider:
    """Canned but content-aware completions for every chain step."""

    def complete(self, prompt: str, config) -> ProviderReply:
        for step, marker in _MARKERS.items():
            if marker in prompt:
                return ProviderReply(text=getattr(self, f"_{step}")(prompt))
        raise AssertionError("prompt matched no known template")

    # -- scenario chain --

    def _scenario_design(self, prompt: str) -> str:
        requirement = prompt.rsplit("Feature:", 1)[1].strip()
        if "roll call" in requirement.lower():
            return ROLL_CALL_FEATURE
        return f"Feature: {requirement}\n{GENERIC_FEATURE_TAIL}"

    def _gherkin_to_nl(self, prompt: str) -> str:
        section = prompt.split("Scenarios:[", 1)[1]
        count = len(_EMBED_BLOCK_RE.findall("{" + section))
        if "roll call" in prompt.lower() or "student" in prompt.lower():
            texts = ROLL_CALL_NLS[:count]
            while len(texts) < count:
                texts.append(f"The user can complete step {len(texts) + 1} and sees the outcome.")
        else:
            texts = [
                f"The user can complete scenario {i} and sees the expected outcome."
                for i in range(1, count + 1)
            ]
        return "\n".join(f"{i}. {t}" for i, t in enumerate(texts, start=1))

    def _nl_to_gherkin(self, prompt: str) -> str:
        decided = prompt.split("Decided scenarios:", 1)[1]
        blocks = []
        for i, (num, text) in enumerate(_NUMBERED_RE.findall(decided), start=1):
            lines = [
                f"Scenario: Decided behavior {i}",
                "  Given the application is open",
                f"  When the user follows: {_slug(text, 10)}",
                "  Then the described outcome is observable",
            ]
            if "any of the five students" in text:
                lines.append("  And the chosen student could be any of the five students")
            blocks.append("\n".join(lines))
        return "\n".join(blocks)

    # -- prototype chain --

    def _page_design(self, prompt: str) -> str:
        return PAGE_DESIGN_TEXT

    def _visual_description(self, prompt: str) -> str:
        return VISUAL_TEXT

    def _feature_title(self, prompt: str) -> str:
        match = re.search(r"(?m)^Feature: (.+)$", prompt)
        return match.group(1).strip() if match else "Prototype"

    def _code_generation(self, prompt: str) -> str:
        if "student" in prompt.lower():
            files = {
                "index.html": ROLL_CALL_HTML,
                "style.css": ROLL_CALL_CSS,
                "script.js": ROLL_CALL_JS,
            }
        else:
            title = self._feature_title(prompt)
            files = {
                "index.html": ROLL_CALL_HTML.replace("Random Roll Call", title),
                "style.css": ROLL_CALL_CSS,
                "script.js": ROLL_CALL_JS,
            }
        return "Here are the three files.\n\n" + render_code_sections(files)

    def _consistency_factor(self, prompt: str) -> str:
        gherkin = prompt.split("Gherkin:", 1)[1]
        count = max(1, len(_SCENARIO_LINE_RE.findall(gherkin)))
        if "student" in prompt.lower():
            cases = [
                "With five students listed, clicking Start shows exactly one of the five names.",
                "After removing a student, later picks never show the removed name.",
            ][:count]
            while len(cases) < count:
                cases.append(f"Case {len(cases) + 1}: the described outcome holds for valid input.")
        else:
            cases = [
                f"Case for scenario {i}: given valid input, the expected outcome appears."
                for i in range(1, count + 1)
            ]
        return "\n".join(f"{i}. {c}" for i, c in enumerate(cases, start=1))

    def _current_files(self, prompt: str) -> dict[str, str]:
        return extract_files(prompt)

    def _auto_modification(self, prompt: str) -> str:
        files = self._current_files(prompt)
        files["script.js"] = files["script.js"] + "\n// revision pass: checked against the business cases"
        return render_code_sections(files)

    def _design_modification(self, prompt: str) -> str:
        files = self._current_files(prompt)
        feedback = prompt.split("Design feedback: ", 1)[1].splitlines()[0]
        if "colors" in feedback:
            files["style.css"] = KID_CSS
        else:
            files["style.css"] = files["style.css"] + f"\n/* restyled: {feedback} */"
        return render_code_sections(files)

    def _function_modification(self, prompt: str) -> str:
        files = self._current_files(prompt)
        feedback = prompt.split("Instruction: ", 1)[1].splitlines()[0]
        if "read it automatically" in feedback:
            files["script.js"] = files["script.js"] + READ_ALOUD_JS_SUFFIX
        else:
            files["script.js"] = files["script.js"] + f"\n// function update: {feedback}"
        return render_code_sections(files)


class SequenceProvider:
    """Replies with a fixed list of completions, in order."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.prompts: list[str] = []

    def complete(self, prompt: str, config) -> ProviderReply:
        self.prompts.append(prompt)
        if not self.replies:
            raise AssertionError("SequenceProvider ran out of replies")
        return ProviderReply(text=self.replies.pop(0))


class FailingProvider:
    """Raises the given errors in order, then defers to an inner provider."""

    def __init__(self, failures: list[Exception], inner):
        self.failures = list(failures)
        self.inner = inner
        self.calls = 0

    def complete(self, prompt: str, config) -> ProviderReply:
        self.calls += 1
        if self.failures:
            raise self.failures.pop(0)
        return self.inner.complete(prompt, config)


# --------------------------------------------------------------------------
# Shared flows

def run_rollcall_flow(service) -> tuple[str, str]:
    """The full collaborative session: submit, modify a scenario, generate,
    one design and one function feedback round, accept, then a fresh session
    re-submitting the same requirement (which should hit the memory pool)."""
    sid = service.create_session()
    scenarios = service.submit_requirement(sid, ROLL_CALL_NL)
    modified = scenarios[0].text + " " + MOD_SENTENCE
    service.decide_scenarios(
        sid, [ScenarioDecision(action=DecisionAction.MODIFY, index=1, text=modified)]
    )
    service.generate_prototype(sid)
    service.request_modification(
        sid, ModificationRequest(kind=ModificationKind.DESIGN, text=DESIGN_FEEDBACK)
    )
    service.request_modification(
        sid, ModificationRequest(kind=ModificationKind.FUNCTION, text=FUNCTION_FEEDBACK)
    )
    service.accept(sid)
    sid2 = service.create_session()
    service.submit_requirement(sid2, ROLL_CALL_NL)
    return sid, sid2
