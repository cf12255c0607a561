import copy
import json

import pytest

from odcb.errors import CompositeProperty, InvariantViolation, UnknownPath
from odcb.model import dumps, validate
from odcb.refine import apply_default_annotations, apply_script, set_annotation, set_binding

from conftest import SOCRATA_DIR, load_json
from test_model import flat_model
from odcb.model import SemanticType


class TestDefaults:
    def test_fills_missing_readable_names(self):
        model = flat_model([("air_quality_data", SemanticType.TEXT)])
        model.core_concept().properties[0].bot.readable_name = ""
        defaulted = apply_default_annotations(model)
        prop = defaulted.core_concept().properties[0]
        assert prop.bot.to_expose is True
        assert prop.bot.readable_name == "air quality data"
        assert prop.bot.synonyms == []

    def test_idempotent(self, imported_model):
        once = apply_default_annotations(imported_model)
        twice = apply_default_annotations(once)
        assert once == twice

    def test_already_annotated_unchanged(self, refined_model):
        assert apply_default_annotations(refined_model) == refined_model


class TestSetAnnotation:
    def test_add_synonyms_in_order(self, imported_model):
        step1 = set_annotation(imported_model, "AirQualityData.municipality", {"addSynonym": "town"})
        step2 = set_annotation(step1, "AirQualityData.municipality", {"addSynonym": "city"})
        prop = step2.core_concept().property_named("municipality")
        assert prop.bot.synonyms == ["town", "city"]
        assert validate(step2).empty()

    def test_synonyms_stored_lowercase(self, imported_model):
        result = set_annotation(imported_model, "AirQualityData.municipality", {"addSynonym": "Town"})
        assert result.core_concept().property_named("municipality").bot.synonyms == ["town"]

    def test_remove_synonym(self, refined_model):
        result = set_annotation(refined_model, "AirQualityData.municipality", {"removeSynonym": "town"})
        assert result.core_concept().property_named("municipality").bot.synonyms == ["city"]

    def test_hide_filterable_property_rejected(self, refined_model):
        with pytest.raises(InvariantViolation):
            set_annotation(refined_model, "AirQualityData.date", {"toExpose": False})

    def test_hide_plain_property(self, refined_model):
        result = set_annotation(refined_model, "Location.latitude", {"toExpose": False})
        prop = result.concept_named("Location").property_named("latitude")
        assert prop.bot.to_expose is False
        assert validate(result).empty()

    def test_unknown_path(self, imported_model):
        with pytest.raises(UnknownPath):
            set_annotation(imported_model, "AirQualityData.nonexistent", {"toExpose": False})
        with pytest.raises(UnknownPath):
            set_annotation(imported_model, "NoSuchConcept", {"toExpose": False})

    def test_synonym_repeating_readable_name_rejected(self, imported_model):
        with pytest.raises(InvariantViolation):
            set_annotation(imported_model, "AirQualityData.municipality", {"addSynonym": "municipality"})

    def test_to_filter_with_on_concept_rejected(self, imported_model):
        with pytest.raises(InvariantViolation):
            set_annotation(imported_model, "AirQualityData", {"toFilterWith": True})

    def test_concept_readable_name_change(self, imported_model):
        result = set_annotation(imported_model, "AirQualityData", {"readableName": "air quality"})
        assert result.core_concept().bot.readable_name == "air quality"

    def test_input_unmodified(self, imported_model):
        snapshot = copy.deepcopy(imported_model)
        set_annotation(imported_model, "AirQualityData.municipality", {"addSynonym": "town"})
        assert imported_model == snapshot

    def test_changes_exactly_one_element(self, imported_model):
        changed = set_annotation(imported_model, "AirQualityData.unit", {"readableName": "units"})
        diffs = _leaf_diffs(json.loads(dumps(imported_model)), json.loads(dumps(changed)))
        assert diffs == ["concepts[0].properties[6].bot.readableName"]


def _leaf_diffs(a, b, prefix=""):
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for key in sorted(set(a) | set(b)):
            out += _leaf_diffs(a.get(key), b.get(key), f"{prefix}.{key}" if prefix else key)
        return out
    if isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        out = []
        for index, (xa, xb) in enumerate(zip(a, b)):
            out += _leaf_diffs(xa, xb, f"{prefix}[{index}]")
        return out
    return [] if a == b else [prefix]


class TestSetBinding:
    def test_fix_field_name(self):
        model = flat_model([("date", SemanticType.DATETIME)])
        model.core_concept().properties[0].binding.field_name = "data"
        fixed = set_binding(model, "Sample.date", "date")
        assert fixed.core_concept().property_named("date").binding.field_name == "date"
        # nothing else moved
        fixed.core_concept().property_named("date").binding.field_name = "data"
        assert fixed == model

    def test_composite_rejected(self, refined_model):
        with pytest.raises(CompositeProperty):
            set_binding(refined_model, "AirQualityData.location", "loc")

    def test_empty_field_name_rejected(self, refined_model):
        with pytest.raises(InvariantViolation):
            set_binding(refined_model, "AirQualityData.date", "")

    def test_unknown_path(self, refined_model):
        with pytest.raises(UnknownPath):
            set_binding(refined_model, "AirQualityData.missing", "x")


class TestScript:
    def test_bundled_refinement_script(self, imported_model):
        script = load_json(SOCRATA_DIR / "refinements.json")
        refined = apply_script(imported_model, script)
        assert refined.concept_named("Location") is not None
        municipality = refined.core_concept().property_named("municipality")
        assert municipality.bot.synonyms == ["town", "city"]
        assert municipality.to_filter_with is True
        assert validate(refined).empty()

    def test_unknown_op_rejected(self, imported_model):
        with pytest.raises(InvariantViolation):
            apply_script(imported_model, [{"op": "explode", "path": "x", "value": 1}])

    def test_script_applies_in_order(self, imported_model):
        script = [
            {"op": "setAnnotation", "path": "AirQualityData.municipality", "value": {"addSynonym": "town"}},
            {"op": "setAnnotation", "path": "AirQualityData.municipality", "value": {"removeSynonym": "town"}},
        ]
        result = apply_script(imported_model, script)
        assert result.core_concept().property_named("municipality").bot.synonyms == []
