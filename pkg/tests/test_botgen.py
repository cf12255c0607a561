import copy

import pytest

from odcb.botgen import (
    INTENT_KINDS,
    bot_doc,
    bot_dumps,
    bot_from_doc,
    build_state_machine,
    expand_templates,
    field_domain,
    filterable_properties,
    generate_bot,
    iter_exposed_leaves,
)
from odcb.errors import MalformedDocument, NoExposedConcept, NoExposedProperties
from odcb.model import SemanticType
from odcb.refine import set_annotation

from test_model import flat_model


def transition_set(machine):
    return {(t.state, t.intent, t.next_state) for t in machine.transitions}


class TestGenerateBot:
    def test_all_twelve_intent_kinds(self, bot):
        assert [i.kind for i in bot.intents] == list(INTENT_KINDS)

    def test_add_filter_vocabulary_covers_filterables(self, bot):
        tokens = {token for token, _ in field_domain("AddFilter", bot.model_ref)}
        assert "date" in tokens
        assert "municipality" in tokens
        assert "town" in tokens and "city" in tokens
        # non-filterable fields are absent
        assert "station code" not in tokens

    def test_select_field_vocabulary_covers_exposed_leaves(self, bot):
        paths = {path for _, path in field_domain("SelectField", bot.model_ref)}
        assert paths == {path for path, _ in iter_exposed_leaves(bot.model_ref)}

    def test_aggregation_fields_are_numeric_only(self, bot):
        paths = {path for _, path in field_domain("AddPostFunction", bot.model_ref)}
        model = bot.model_ref
        for path in paths:
            concept_name, prop_name = path.split(".")
            prop = model.concept_named(concept_name).property_named(prop_name)
            assert prop.semantic_type is SemanticType.NUMBER

    def test_hidden_core_concept(self, refined_model):
        hidden = set_annotation(refined_model, "AirQualityData", {"toExpose": False})
        with pytest.raises(NoExposedConcept):
            generate_bot(hidden)

    def test_no_exposed_properties(self):
        model = flat_model([("a", SemanticType.TEXT)])
        model.core_concept().properties[0].bot.to_expose = False
        with pytest.raises(NoExposedProperties):
            generate_bot(model)

    def test_only_municipality_filterable(self, refined_model):
        model = copy.deepcopy(refined_model)
        for prop in model.core_concept().properties:
            prop.to_filter_with = prop.name == "municipality"
        tokens = sorted({token for token, _ in field_domain("AddFilter", model)})
        assert tokens == ["city", "municipality", "town"]

    def test_generation_is_deterministic(self, refined_model):
        assert generate_bot(refined_model) == generate_bot(refined_model)

    def test_allowed_states_mirror_transitions(self, bot):
        for intent in bot.intents:
            from_transitions = {t.state for t in bot.state_machine.transitions
                                if t.intent == intent.kind}
            assert intent.allowed_states == from_transitions

    def test_no_template_mentions_hidden_elements(self, refined_model):
        hidden = set_annotation(refined_model, "Location.latitude", {"toExpose": False})
        bot = generate_bot(hidden)
        for intent in bot.intents:
            for sentence in expand_templates(intent.kind, hidden, intent.training_templates):
                assert "latitude" not in sentence

    def test_page_size_must_be_positive(self, refined_model):
        from odcb.errors import InvariantViolation

        with pytest.raises(InvariantViolation):
            generate_bot(refined_model, page_size=0)


class TestExpandTemplates:
    def test_direct_search_canonical_sentence(self, refined_model):
        sentences = expand_templates("DirectSearch", refined_model)
        assert "show me all the air quality data with municipality equals to {value}" in sentences

    def test_guided_search_canonical_sentence(self, refined_model):
        sentences = expand_templates("GuidedSearch", refined_model)
        assert "show me the list of air quality data" in sentences

    def test_next_page_canonical_sentence(self, refined_model):
        assert "show me next page" in expand_templates("NextPage", refined_model)

    def test_all_lowercase_and_deduplicated(self, refined_model):
        for kind in INTENT_KINDS:
            sentences = expand_templates(kind, refined_model)
            assert sentences, kind
            assert all(s == s.lower() for s in sentences)
            assert len(set(sentences)) == len(sentences)

    def test_add_filter_mentions_every_filterable_and_synonym(self, refined_model):
        sentences = expand_templates("AddFilter", refined_model)
        joined = "\n".join(sentences)
        for _, prop in filterable_properties(refined_model):
            assert prop.bot.readable_name in joined
            for synonym in prop.bot.synonyms:
                assert synonym in joined

    def test_value_slot_stays_placeholder(self, refined_model):
        for sentence in expand_templates("AddPostFilter", refined_model):
            assert "{value}" in sentence


class TestStateMachine:
    def test_normative_transitions(self, refined_model):
        machine = build_state_machine(refined_model)
        expected = {
            ("Idle", "GuidedSearch", "AwaitingFilterField"),
            ("Idle", "DirectSearch", "AwaitingFieldSelection"),
            ("AwaitingFilterField", "AddFilter", "AwaitingOperator"),
            ("AwaitingFilterField", "EndFilter", "AwaitingFieldSelection"),
            ("AwaitingOperator", "ChooseOperator", "AwaitingValue"),
            ("AwaitingValue", "ProvideValue", "AwaitingFilterField"),
            ("AwaitingFieldSelection", "SelectField", "AwaitingFieldSelection"),
            ("AwaitingFieldSelection", "ShowResult", "ShowingResults"),
            ("ShowingResults", "AddPostFilter", "ShowingResults"),
            ("ShowingResults", "SortOrderBy", "ShowingResults"),
            ("ShowingResults", "NextPage", "ShowingResults"),
            ("ShowingResults", "AddPostFunction", "ShowingResults"),
            ("ShowingResults", "DirectSearch", "AwaitingFieldSelection"),
            ("ShowingResults", "GuidedSearch", "AwaitingFilterField"),
        }
        assert transition_set(machine) == expected
        assert machine.initial == "Idle"
        assert machine.states == {s for s, _, _ in expected} | {n for _, _, n in expected}

    def test_showing_results_accepts_all_post_intents(self, bot):
        accepted = set(bot.state_machine.intents_in("ShowingResults"))
        assert accepted == {"AddPostFilter", "SortOrderBy", "NextPage",
                            "AddPostFunction", "DirectSearch", "GuidedSearch"}

    def test_deterministic_transitions(self, bot):
        seen = set()
        for t in bot.state_machine.transitions:
            key = (t.state, t.intent)
            assert key not in seen, f"duplicate transition for {key}"
            seen.add(key)

    def test_every_state_reaches_showing_results(self, bot):
        machine = bot.state_machine
        for start in machine.states:
            assert _reaches(machine, start, "ShowingResults"), start

    def test_no_filterables_collapses_filter_loop(self):
        model = flat_model([("a", SemanticType.TEXT), ("n", SemanticType.NUMBER)])
        machine = build_state_machine(model)
        assert machine.lookup("Idle", "GuidedSearch").next_state == "AwaitingFieldSelection"
        assert machine.states == {"Idle", "AwaitingFieldSelection", "ShowingResults"}
        assert machine.lookup("ShowingResults", "AddPostFilter") is None
        for start in machine.states:
            assert _reaches(machine, start, "ShowingResults")

    def test_no_numeric_drops_aggregation(self):
        model = flat_model([("a", SemanticType.TEXT, True)])
        machine = build_state_machine(model)
        assert machine.lookup("ShowingResults", "AddPostFunction") is None
        assert machine.lookup("ShowingResults", "AddPostFilter") is not None


def _reaches(machine, start, goal):
    frontier, seen = [start], set()
    while frontier:
        state = frontier.pop()
        if state == goal:
            return True
        if state in seen:
            continue
        seen.add(state)
        frontier += [t.next_state for t in machine.transitions if t.state == state]
    return False


class TestBotSerialization:
    def test_round_trip(self, bot):
        assert bot_from_doc(bot_doc(bot)) == bot

    def test_round_trip_through_text(self, bot):
        assert bot_from_doc(bot_dumps(bot)) == bot

    def test_dumps_deterministic(self, refined_model):
        assert bot_dumps(generate_bot(refined_model)) == bot_dumps(generate_bot(refined_model))

    def test_missing_intent_kind_rejected(self, bot):
        doc = bot_doc(bot)
        doc["intents"] = doc["intents"][:-1]
        with pytest.raises(MalformedDocument):
            bot_from_doc(doc)

    def test_truncated_text_rejected(self, bot):
        text = bot_dumps(bot)
        with pytest.raises(MalformedDocument):
            bot_from_doc(text[: len(text) // 2])
