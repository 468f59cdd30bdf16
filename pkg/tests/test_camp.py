from __future__ import annotations

import itertools
import json
import random

import pytest

from urbanlab.camp import (
    CampHypothesis,
    InnovationType,
    Lineage,
    TierRating,
    build_hypothesis,
    camp_text,
    parse_hypothesis,
    serialize_hypothesis,
    validate_hypothesis,
)
from urbanlab.errors import AllWeightsZero, InvalidHypothesis, MalformedDocument, SchemaViolation
from urbanlab.fixtures import camp_listing_document

from conftest import random_hypothesis


class TestValidation:
    def test_paper_listing_is_valid(self, mobile_money):
        assert validate_hypothesis(mobile_money) == []

    def test_empty_context_reported_at_field_path(self, mobile_money):
        h = mobile_money.model_copy(update={"context": ""})
        report = validate_hypothesis(h)
        assert [v.field_path for v in report] == ["context"]

    def test_innovation_without_parents_is_lineage_violation(self, mobile_money):
        h = mobile_money.model_copy(
            update={"innovation_type": InnovationType.RECOMBINATION, "lineage": Lineage()}
        )
        report = validate_hypothesis(h)
        assert any(v.field_path == "lineage.parents" for v in report)

    def test_generation_zero_iff_no_parents(self, mobile_money):
        h = mobile_money.model_copy(
            update={"innovation_type": None, "lineage": Lineage(parents=("x",), generation=0)}
        )
        assert any(v.field_path == "lineage.generation" for v in validate_hypothesis(h))
        h2 = mobile_money.model_copy(
            update={"innovation_type": None, "lineage": Lineage(parents=(), generation=2)}
        )
        assert any(v.field_path == "lineage.generation" for v in validate_hypothesis(h2))

    def test_targeted_violations_are_all_caught(self):
        rng = random.Random(1)
        base = random_hypothesis(rng)
        whitespace = base.model_copy(update={"mechanism": "   "})
        assert any(v.field_path == "mechanism" for v in validate_hypothesis(whitespace))
        no_id = base.model_copy(update={"id": ""})
        assert any(v.field_path == "id" for v in validate_hypothesis(no_id))


class TestParse:
    def test_paper_listing_fields(self, mobile_money):
        assert mobile_money.innovation_type is InnovationType.RECOMBINATION
        assert (
            mobile_money.title
            == "Mobile Money and Urban Spatial Inequality: A Dual-Pathway Analysis (2010-2025)"
        )
        assert mobile_money.context.startswith("Emerging economies with rapid urbanization")
        assert mobile_money.var_a.startswith("Mobile money penetration")
        assert mobile_money.var_b.startswith("Urban spatial inequality")
        assert mobile_money.why_it_matters is not None

    def test_missing_mechanism_names_the_key(self):
        doc = dict(camp_listing_document()["New CAMP"])
        del doc["Mechanism"]
        with pytest.raises(SchemaViolation) as excinfo:
            parse_hypothesis(doc)
        assert "Mechanism" in str(excinfo.value)

    def test_malformed_json(self):
        with pytest.raises(MalformedDocument):
            parse_hypothesis("{not json")

    def test_non_object_root(self):
        with pytest.raises(MalformedDocument):
            parse_hypothesis("[1, 2]")

    def test_unknown_keys_preserved_in_extras(self):
        doc = dict(camp_listing_document()["New CAMP"])
        doc["CustomAnnotation"] = {"source": "reviewer"}
        h = parse_hypothesis(doc)
        assert h.extras["CustomAnnotation"] == {"source": "reviewer"}

    def test_invalid_content_raises(self):
        doc = dict(camp_listing_document()["New CAMP"])
        doc["Context"] = "  "
        with pytest.raises(InvalidHypothesis):
            parse_hypothesis(doc)

    def test_build_hypothesis_tolerates_missing_keys(self):
        h = build_hypothesis({"Context": "somewhere"})
        assert h.context == "somewhere"
        assert any(v.field_path == "mechanism" for v in validate_hypothesis(h))


class TestSerialize:
    def test_listing_values_reproduced_verbatim(self, mobile_money):
        doc = json.loads(serialize_hypothesis(mobile_money))
        source = camp_listing_document()
        for key, value in source["New CAMP"].items():
            assert doc[key] == value
        for key, value in source["New Idea"].items():
            assert doc[key] == value

    def test_equal_hypotheses_serialize_byte_identically(self, mobile_money):
        other = parse_hypothesis(camp_listing_document())
        assert serialize_hypothesis(mobile_money) == serialize_hypothesis(other)

    def test_key_order_is_canonical(self, mobile_money):
        doc = json.loads(serialize_hypothesis(mobile_money))
        keys = list(doc)
        assert keys[:5] == ["Context", "A", "B", "Mechanism", "Pattern"]
        assert keys.index("Id") > keys.index("Pattern")

    def test_serialize_rejects_invalid(self, mobile_money):
        bad = mobile_money.model_copy(update={"pattern": ""})
        with pytest.raises(InvalidHypothesis):
            serialize_hypothesis(bad)

    def test_round_trip_on_generated_corpus(self):
        rng = random.Random(42)
        for i in range(250):
            h = random_hypothesis(rng, i)
            assert parse_hypothesis(serialize_hypothesis(h)) == h


class TestTierOrder:
    def test_strict_total_order(self):
        ordered = [
            TierRating.REJECT,
            TierRating.TIER4,
            TierRating.TIER3,
            TierRating.TIER2,
            TierRating.TIER1,
        ]
        for lower, upper in itertools.combinations(ordered, 2):
            assert lower < upper
            assert upper > lower
            assert not upper < lower

    def test_tier1_is_maximal(self):
        assert max(TierRating) is TierRating.TIER1
        assert all(t <= TierRating.TIER1 for t in TierRating)


class TestCampText:
    def test_unit_weights_include_each_component_once(self, mobile_money):
        text = camp_text(mobile_money)
        for field in ("context", "var_a", "var_b", "mechanism", "pattern"):
            assert text.count(getattr(mobile_money, field)) == 1

    def test_zero_weight_excludes_field(self, mobile_money):
        text = camp_text(mobile_money, {"context": 0})
        assert mobile_money.context not in text
        assert mobile_money.mechanism in text

    def test_doubling_weights_doubles_counts_same_segments(self, mobile_money):
        single = camp_text(mobile_money)
        double = camp_text(mobile_money, {f: 2 for f in ("context", "var_a", "var_b", "mechanism", "pattern")})
        for field in ("context", "var_a", "var_b", "mechanism", "pattern"):
            segment = f"{field}: {getattr(mobile_money, field)}"
            assert double.count(segment) == 2 * single.count(segment)
        assert set(single.split("\n")) == set(double.split("\n"))

    def test_all_zero_weights_rejected(self, mobile_money):
        with pytest.raises(AllWeightsZero):
            camp_text(mobile_money, {f: 0 for f in ("context", "var_a", "var_b", "mechanism", "pattern")})

    def test_deterministic(self, mobile_money):
        assert camp_text(mobile_money) == camp_text(mobile_money)

    def test_unknown_weight_key_rejected(self, mobile_money):
        with pytest.raises(AllWeightsZero):
            camp_text(mobile_money, {"title": 1})
