from datetime import date
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odcb.botgen import generate_bot, load_template_pack
from odcb.errors import AmbiguousVocabulary, NoMatch, UnknownVocabulary, UnparsableValue
from odcb.model import SemanticType
from odcb.nlu import (
    DateValue,
    NumberValue,
    TextValue,
    match,
    normalize_utterance,
    parse_value,
    resolve_vocabulary,
    tokenize,
)
from odcb.refine import set_annotation

from test_model import flat_model


class TestNormalization:
    def test_collapse_and_strip(self):
        assert normalize_utterance("  show   me  next page!!  ") == "show me next page"

    def test_terminal_punctuation_only(self):
        assert normalize_utterance("i don't want to add filters.") == "i don't want to add filters"

    def test_quoted_span_is_one_token(self):
        assert tokenize('municipality equals "Sant Cugat"') == ["municipality", "equals", '"Sant Cugat"']


class TestMatch:
    def test_choose_operator_bare_token(self, bot):
        result = match(bot, "AwaitingOperator", "equals")
        assert result.kind == "ChooseOperator"
        assert result.slots["operator"].op == "equals"
        assert result.score == 1.0

    def test_end_filter_sentence(self, bot):
        result = match(bot, "AwaitingFilterField", "I don't want to add filters")
        assert result.kind == "EndFilter"

    def test_post_filter_out_of_scope_in_idle(self, bot):
        with pytest.raises(NoMatch):
            match(bot, "Idle", 'add filter magnitude less than "14"')

    def test_scoping_follows_allowed_states(self, bot):
        for state in sorted(bot.state_machine.states):
            try:
                result = match(bot, state, "show me next page")
            except NoMatch:
                assert state not in bot.intent("NextPage").allowed_states
                continue
            assert state in bot.intent(result.kind).allowed_states

    def test_direct_search_slot_extraction(self, bot):
        result = match(bot, "Idle", 'show me all the air quality data with town equals "Girona"')
        assert result.kind == "DirectSearch"
        assert result.slots["field"].path == "AirQualityData.municipality"
        assert result.slots["operator"].op == "equals"
        assert result.slots["value"].text == '"Girona"'

    def test_quoted_value_keeps_spaces_and_casing(self, bot):
        result = match(bot, "Idle",
                       'show me all the air quality data with municipality equals "Sant Cugat"')
        assert result.slots["value"].text == '"Sant Cugat"'

    def test_multiword_field_token(self, bot):
        result = match(bot, "AwaitingFieldSelection", "station name")
        assert result.kind == "SelectField"
        assert result.slots["field"].path == "AirQualityData.station_name"

    def test_partial_match_at_threshold(self, bot):
        result = match(bot, "ShowingResults", "please show me next page")
        assert result.kind == "NextPage"
        assert result.score == pytest.approx(0.8)

    def test_partial_match_below_threshold(self, bot):
        with pytest.raises(NoMatch):
            match(bot, "ShowingResults", "pretty please dear bot show me next page")

    def test_gibberish_no_match(self, bot):
        with pytest.raises(NoMatch):
            match(bot, "Idle", "zzz qqq flurble")

    def test_empty_utterance_no_match(self, bot):
        with pytest.raises(NoMatch):
            match(bot, "Idle", "   ")

    def test_deterministic(self, bot):
        first = match(bot, "ShowingResults", "sort by date desc")
        second = match(bot, "ShowingResults", "sort by date desc")
        assert first == second

    def test_sort_without_direction(self, bot):
        result = match(bot, "ShowingResults", "sort by magnitude")
        assert result.kind == "SortOrderBy"
        assert "direction" not in result.slots

    def test_aggregation_surface_forms(self, bot):
        result = match(bot, "ShowingResults", "calculate the maximum of magnitude")
        assert result.kind == "AddPostFunction"
        assert result.slots["function"].fn == "max"


@pytest.fixture(scope="module")
def colliding_bot(refined_model):
    pack = dict(load_template_pack())
    pack["EndFilter"] = pack["EndFilter"] + ["date"]  # collides with AddFilter "{field}"
    pack["SortOrderBy"] = pack["SortOrderBy"] + ["more"]
    pack["NextPage"] = pack["NextPage"] + ["more"]
    return generate_bot(refined_model, template_pack=pack)


class TestTieBreaking:
    def test_longest_literal_wins(self, colliding_bot):
        # "date" matches AddFilter "{field}" (0 literal chars) and the
        # crafted EndFilter literal "date" (4 chars): literal length wins
        result = match(colliding_bot, "AwaitingFilterField", "date")
        assert result.kind == "EndFilter"

    def test_declaration_order_breaks_exact_ties(self, colliding_bot):
        # "more" appears verbatim in SortOrderBy and NextPage; SortOrderBy
        # comes first in the intent table
        result = match(colliding_bot, "ShowingResults", "more")
        assert result.kind == "SortOrderBy"


@settings(max_examples=80, deadline=None)
@given(st.text(min_size=1, max_size=40))
def test_match_total_and_stable_on_arbitrary_text(bot_holder, text):
    bot = bot_holder
    try:
        first = match(bot, "Idle", text)
    except NoMatch:
        with pytest.raises(NoMatch):
            match(bot, "Idle", text)
        return
    assert first == match(bot, "Idle", text)
    assert 0.0 < first.score <= 1.0


@pytest.fixture(scope="module")
def bot_holder(refined_model):
    return generate_bot(refined_model)


class TestParseValue:
    def test_yesterday(self):
        value = parse_value(SemanticType.DATETIME, "yesterday", date(2020, 6, 16))
        assert value == DateValue(date(2020, 6, 15))

    def test_today(self):
        value = parse_value(SemanticType.DATETIME, "today", date(2020, 6, 16))
        assert value == DateValue(date(2020, 6, 16))

    def test_iso_date(self):
        assert parse_value(SemanticType.DATETIME, "2020-06-01") == DateValue(date(2020, 6, 1))

    def test_quoted_text_preserves_casing(self):
        value = parse_value(SemanticType.TEXT, '"Barcelona"')
        assert value == TextValue("Barcelona")
        assert value.match_text == "barcelona"

    def test_number(self):
        assert parse_value(SemanticType.NUMBER, "14") == NumberValue(Decimal("14"))
        assert parse_value(SemanticType.NUMBER, '"14.5"') == NumberValue(Decimal("14.5"))

    def test_number_rejects_garbage(self):
        with pytest.raises(UnparsableValue):
            parse_value(SemanticType.NUMBER, "abc")

    def test_boolean(self):
        assert parse_value(SemanticType.BOOLEAN, "true").value is True
        assert parse_value(SemanticType.BOOLEAN, "no").value is False
        with pytest.raises(UnparsableValue):
            parse_value(SemanticType.BOOLEAN, "perhaps")

    def test_date_rejects_garbage(self):
        with pytest.raises(UnparsableValue):
            parse_value(SemanticType.DATETIME, "not-a-date")


class TestResolveVocabulary:
    def test_synonym_resolves(self, refined_model):
        assert resolve_vocabulary(refined_model, "town") == "AirQualityData.municipality"

    def test_readable_name_resolves(self, refined_model):
        assert resolve_vocabulary(refined_model, "municipality") == "AirQualityData.municipality"

    def test_case_insensitive(self, refined_model):
        assert resolve_vocabulary(refined_model, "TOWN") == "AirQualityData.municipality"

    def test_unknown_token(self, refined_model):
        with pytest.raises(UnknownVocabulary):
            resolve_vocabulary(refined_model, "sandwich")

    def test_ambiguous_token(self):
        model = flat_model([("a", SemanticType.TEXT), ("b", SemanticType.TEXT)])
        model.core_concept().properties[0].bot.synonyms = ["code"]
        model.core_concept().properties[1].bot.synonyms = ["code"]
        with pytest.raises(AmbiguousVocabulary):
            resolve_vocabulary(model, "code")

    def test_hidden_element_never_resolves(self, refined_model):
        hidden = set_annotation(refined_model, "Location.latitude", {"toExpose": False})
        with pytest.raises(UnknownVocabulary):
            resolve_vocabulary(hidden, "latitude")
