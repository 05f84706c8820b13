import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storyloom.errors import IndexOutOfRange, MalformedGherkin
from storyloom.gateway import GenerationConfig, LlmGateway, PriceTable, TokenCounter, Transcript
from storyloom.gherkin import BlockKind, parse_document, render, split_scenarios
from storyloom.memory import MemoryItem
from storyloom.prompts import PromptLibrary
from storyloom.scenarios import (
    DecisionAction,
    NLScenario,
    ScenarioDecision,
    ScenarioDesigner,
    apply_decisions,
    parse_numbered_lines,
)

from providers import ROLL_CALL_NL, ScriptedProvider, SequenceProvider


CONFIG = GenerationConfig(model_id="gpt-3.5-turbo")


def make_designer(provider):
    gateway = LlmGateway(
        provider, PriceTable({"default": {"input_per_1k": 0, "output_per_1k": 0}}),
        TokenCounter(), sleep=lambda s: None,
    )
    return ScenarioDesigner(gateway, PromptLibrary(), CONFIG)


def nl_list(*texts):
    return [NLScenario(index=i + 1, text=t) for i, t in enumerate(texts)]


# ---------------------------------------------------------------------------
# apply_decisions

def test_confirm_keeps_everything():
    scenarios = nl_list("a", "b")
    result = apply_decisions(scenarios, [ScenarioDecision(DecisionAction.CONFIRM)])
    assert result == scenarios


def test_add_appends_with_next_index():
    result = apply_decisions(nl_list("a"), [ScenarioDecision(DecisionAction.ADD, text="b")])
    assert result == nl_list("a", "b")


def test_delete_closes_the_gap():
    result = apply_decisions(
        nl_list("a", "b", "c"), [ScenarioDecision(DecisionAction.DELETE, index=2)]
    )
    assert result == nl_list("a", "c")
    assert [s.index for s in result] == [1, 2]


def test_modify_replaces_text_in_place():
    result = apply_decisions(
        nl_list("a", "b"), [ScenarioDecision(DecisionAction.MODIFY, index=1, text="a2")]
    )
    assert result == nl_list("a2", "b")


def test_decisions_validate_against_current_state():
    # Index 3 only exists after the Add is applied.
    decisions = [
        ScenarioDecision(DecisionAction.ADD, text="c"),
        ScenarioDecision(DecisionAction.MODIFY, index=3, text="c2"),
    ]
    assert apply_decisions(nl_list("a", "b"), decisions) == nl_list("a", "b", "c2")

    with pytest.raises(IndexOutOfRange):
        apply_decisions(nl_list("a"), [ScenarioDecision(DecisionAction.DELETE, index=2)])
    with pytest.raises(IndexOutOfRange):
        apply_decisions(nl_list("a"), [ScenarioDecision(DecisionAction.MODIFY, index=0, text="x")])
    with pytest.raises(ValueError):
        apply_decisions(nl_list("a"), [ScenarioDecision(DecisionAction.ADD, text="  ")])
    with pytest.raises(ValueError):
        apply_decisions(nl_list("a"), [ScenarioDecision(DecisionAction.MODIFY, index=1, text="")])


_decision_st = st.one_of(
    st.just(ScenarioDecision(DecisionAction.CONFIRM)),
    st.builds(
        ScenarioDecision,
        st.just(DecisionAction.ADD),
        st.none(),
        st.text(alphabet="abcdef ", min_size=1).filter(str.strip),
    ),
    st.builds(ScenarioDecision, st.just(DecisionAction.DELETE), st.integers(1, 6)),
    st.builds(
        ScenarioDecision,
        st.just(DecisionAction.MODIFY),
        st.integers(1, 6),
        st.text(alphabet="abcdef ", min_size=1).filter(str.strip),
    ),
)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.text(alphabet="xyz ", min_size=1).filter(str.strip), min_size=1, max_size=6),
    st.lists(_decision_st, max_size=8),
    st.integers(0, 8),
)
def test_apply_decisions_batched_equals_stepwise(texts, decisions, cut):
    start = nl_list(*texts)
    cut = min(cut, len(decisions))
    try:
        batched = apply_decisions(start, decisions)
    except (IndexOutOfRange, ValueError) as exc:
        batched = type(exc)
    try:
        stepwise = apply_decisions(apply_decisions(start, decisions[:cut]), decisions[cut:])
    except (IndexOutOfRange, ValueError) as exc:
        stepwise = type(exc)
    assert batched == stepwise
    if not isinstance(batched, type):
        assert [s.index for s in batched] == list(range(1, len(batched) + 1))


# ---------------------------------------------------------------------------
# parse_numbered_lines

def test_parse_numbered_lines_basic():
    text = "1. first item\n2. second item\n3) third item"
    assert parse_numbered_lines(text) == ["first item", "second item", "third item"]


def test_parse_numbered_lines_joins_continuations():
    text = "Intro chatter\n1. first line\n   continues here\n2. second"
    assert parse_numbered_lines(text) == ["first line\n   continues here", "second"]


def test_parse_numbered_lines_ignores_blank_items():
    assert parse_numbered_lines("1.\n2. kept") == ["kept"]
    assert parse_numbered_lines("no numbers at all") == []


# ---------------------------------------------------------------------------
# Prompt assembly goldens

def test_design_prompt_without_example_has_empty_slot():
    designer = make_designer(ScriptedProvider())
    prompt = designer.build_design_prompt("a to-do list", None)
    assert prompt.startswith(
        "You are designing behavior scenarios for a small web application.\n"
        "Write one Gherkin feature"
    )
    assert prompt.endswith("Feature:a to-do list")
    assert "previous user" not in prompt


def test_design_prompt_with_example_embeds_decided_scenarios():
    designer = make_designer(ScriptedProvider())
    item = MemoryItem(
        id=4, feature_text="a similar requirement",
        scenarios=("first decided", "second decided"), created_at="2024-01-01T00:00:00",
    )
    prompt = designer.build_design_prompt("a to-do list", item)
    assert (
        "A previous user with a similar requirement decided on these scenarios, "
        "use them as reference:\n"
        "Requirement: a similar requirement\n"
        "Decided scenarios:\n"
        "1. first decided\n"
        "2. second decided\n\n"
    ) in prompt
    assert prompt.index("previous user") < prompt.index("Write one Gherkin feature")


def test_gherkin_to_nl_prompt_wraps_blocks_in_braces():
    designer = make_designer(ScriptedProvider())
    blocks = split_scenarios(
        "Scenario: One\n  Given a\nScenario: Two\n  Given b\n"
    )
    prompt = designer.build_gherkin_to_nl_prompt(blocks)
    assert prompt.endswith(
        "Scenarios:[{Scenario: One\n  Given a},{Scenario: Two\n  Given b}]"
    )


def test_nl_to_gherkin_prompt_numbers_decided_items():
    designer = make_designer(ScriptedProvider())
    prompt = designer.build_nl_to_gherkin_prompt(nl_list("alpha", "beta"))
    assert prompt.endswith("Decided scenarios:\n1. alpha\n2. beta")


# ---------------------------------------------------------------------------
# design_scenarios

def test_design_scenarios_returns_feature_document():
    designer = make_designer(ScriptedProvider())
    doc = designer.design_scenarios(ROLL_CALL_NL, None)
    assert doc.feature_title == ROLL_CALL_NL
    assert doc.scenario_count() == 2
    assert doc.blocks[0].kind is BlockKind.FEATURE_HEADER


def test_design_scenarios_caps_at_max_and_logs():
    body = "\n".join(
        f"Scenario: Case {i}\n  Given thing {i}" for i in range(1, 13)
    )
    provider = SequenceProvider([f"Feature: Big\n{body}"])
    designer = make_designer(provider)
    logs = []
    doc = designer.design_scenarios("big requirement", None, log=logs.append)
    assert doc.scenario_count() == 10
    titles = [b.title for b in doc.blocks if b.kind is not BlockKind.FEATURE_HEADER]
    assert titles == [f"Case {i}" for i in range(1, 11)]
    assert logs == ["scenario_design: truncated to the first 10 scenarios"]


def test_design_scenarios_truncation_drops_orphaned_examples():
    blocks = [f"Scenario: Case {i}\n  Given thing {i}" for i in range(1, 11)]
    blocks.append(
        "Scenario Outline: Case 11\n  Given <x>\nExamples:\n  | x |\n  | 1 |"
    )
    provider = SequenceProvider(["Feature: Big\n" + "\n".join(blocks)])
    designer = make_designer(provider)
    doc = designer.design_scenarios("big requirement", None)
    assert doc.scenario_count() == 10
    assert all(b.kind is not BlockKind.EXAMPLES for b in doc.blocks)


def test_design_scenarios_repairs_then_fails_malformed():
    provider = SequenceProvider(["no keywords here", "still prose", "not gherkin"])
    designer = make_designer(provider)
    with pytest.raises(MalformedGherkin):
        designer.design_scenarios("req", None)
    assert len(provider.prompts) == 3


def test_design_scenarios_repair_recovers():
    provider = SequenceProvider(
        ["just prose", "Feature: Later\nScenario: Works\n  Given recovery"]
    )
    designer = make_designer(provider)
    doc = designer.design_scenarios("req", None)
    assert doc.scenario_count() == 1
    assert "did not follow the required format" in provider.prompts[1]


def test_design_scenarios_rejects_blank_requirement():
    designer = make_designer(ScriptedProvider())
    with pytest.raises(ValueError):
        designer.design_scenarios("   ", None)


# ---------------------------------------------------------------------------
# gherkin_to_nl

def _two_blocks():
    return split_scenarios("Scenario: One\n  Given a\nScenario: Two\n  Given b\n")


def test_gherkin_to_nl_parses_numbered_reply():
    provider = SequenceProvider(["1. user does one\n2. user does two"])
    designer = make_designer(provider)
    result = designer.gherkin_to_nl(_two_blocks())
    assert result == nl_list("user does one", "user does two")


def test_gherkin_to_nl_retries_on_count_mismatch():
    provider = SequenceProvider(["1. only one", "1. one\n2. two"])
    designer = make_designer(provider)
    logs = []
    result = designer.gherkin_to_nl(_two_blocks(), log=logs.append)
    assert [s.text for s in result] == ["one", "two"]
    assert "did not contain exactly 2 numbered descriptions" in provider.prompts[1]
    assert logs == ["gherkin_to_nl: expected 2 descriptions, got 1 (attempt 0)"]


def test_gherkin_to_nl_falls_back_to_verbatim_text():
    provider = SequenceProvider(["nothing numbered", "still nothing"])
    designer = make_designer(provider)
    logs = []
    result = designer.gherkin_to_nl(_two_blocks(), log=logs.append)
    assert [s.text for s in result] == [b.raw_text for b in _two_blocks()]
    assert logs[-1] == "gherkin_to_nl: falling back to verbatim scenario text"


# ---------------------------------------------------------------------------
# nl_to_gherkin

def test_nl_to_gherkin_returns_scenario_blocks():
    designer = make_designer(ScriptedProvider())
    blocks = designer.nl_to_gherkin(nl_list("user does one", "user does two"))
    assert len(blocks) == 2
    assert all(b.kind is BlockKind.SCENARIO for b in blocks)


def test_nl_to_gherkin_strips_stray_feature_header():
    provider = SequenceProvider(
        ["Feature: Stray\nScenario: Kept\n  Given a"]
    )
    designer = make_designer(provider)
    logs = []
    blocks = designer.nl_to_gherkin(nl_list("one"), log=logs.append)
    assert [b.kind for b in blocks] == [BlockKind.SCENARIO]
    assert logs == ["nl_to_gherkin: dropped a stray Feature header from the reply"]


def test_nl_to_gherkin_requires_enough_blocks():
    provider = SequenceProvider(
        ["Scenario: Only one\n  Given a"] * 3
    )
    designer = make_designer(provider)
    with pytest.raises(MalformedGherkin):
        designer.nl_to_gherkin(nl_list("one", "two"))


def test_full_translation_loop_round_trips_via_document():
    designer = make_designer(ScriptedProvider())
    doc = designer.design_scenarios(ROLL_CALL_NL, None)
    nl = designer.gherkin_to_nl(
        [b for b in doc.blocks if b.kind is not BlockKind.FEATURE_HEADER]
    )
    blocks = designer.nl_to_gherkin(nl)
    from storyloom.gherkin import assemble_feature

    final = assemble_feature(ROLL_CALL_NL, blocks)
    reparsed = parse_document(render(final))
    assert reparsed.scenario_count() == len(nl)
