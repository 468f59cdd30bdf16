from __future__ import annotations

import json

import pytest

from urbanlab.camp import InnovationType, TierRating, serialize_hypothesis
from urbanlab.critic.review import ReviewReport
from urbanlab.errors import (
    IdenticalParents,
    InvalidChild,
    ProviderFailure,
    SameContext,
    TooFewParents,
)
from urbanlab.ideation import (
    DEFAULT_PANEL,
    PanelConfig,
    Persona,
    RefinementConfig,
    generate_meta,
    recombine,
    refine_loop,
    transfer_context,
    transform_mechanism,
)
from urbanlab.provider import MockBackend


def _report(decision: TierRating) -> ReviewReport:
    return ReviewReport(
        decision=decision,
        rating=6.0,
        soundness=3.0,
        presentation=3.0,
        contribution=3.0,
        summary="scripted",
        strengths=("s",),
        weaknesses=("w",),
        suggestions=("g",),
    )


class TestRecombine:
    def test_element_swap_and_attribution(self, mobile_money, second_hypothesis, mock_provider):
        child = recombine(mobile_money, second_hypothesis, mock_provider, seed=1)
        assert child.innovation_type is InnovationType.RECOMBINATION
        assert set(child.lineage.parents) == {mobile_money.id, second_hypothesis.id}
        assert child.context == mobile_money.context
        assert child.mechanism == second_hypothesis.mechanism
        attribution = child.extras["Attribution"]
        assert attribution["Context"] == mobile_money.id
        assert attribution["Mechanism"] == second_hypothesis.id

    def test_rationale_names_both_parents(self, mobile_money, second_hypothesis, mock_provider):
        child = recombine(mobile_money, second_hypothesis, mock_provider, seed=1)
        assert mobile_money.id in child.innovation_rationale
        assert second_hypothesis.id in child.innovation_rationale

    def test_identical_parents_rejected(self, mobile_money, mock_provider):
        with pytest.raises(IdenticalParents):
            recombine(mobile_money, mobile_money, mock_provider)

    def test_generation_increments_past_max_parent(self, mobile_money, second_hypothesis, mock_provider):
        child = recombine(mobile_money, second_hypothesis, mock_provider, seed=1)
        expected = 1 + max(
            mobile_money.lineage.generation, second_hypothesis.lineage.generation
        )
        assert child.lineage.generation == expected

    def test_deterministic_across_runs(self, mobile_money, second_hypothesis):
        a = recombine(mobile_money, second_hypothesis, MockBackend(seed=4), seed=11)
        b = recombine(mobile_money, second_hypothesis, MockBackend(seed=4), seed=11)
        assert serialize_hypothesis(a) == serialize_hypothesis(b)


class TestTransformMechanism:
    def test_preserves_all_but_mechanism(self, mobile_money, mock_provider):
        child = transform_mechanism(mobile_money, mock_provider, seed=2)
        assert child.innovation_type is InnovationType.MECHANISM_TRANSFORMATION
        assert child.context == mobile_money.context
        assert child.var_a == mobile_money.var_a
        assert child.var_b == mobile_money.var_b
        assert child.pattern == mobile_money.pattern
        assert child.mechanism != mobile_money.mechanism

    def test_verbatim_mechanism_is_rejected_as_no_change(self, mobile_money):
        echo = json.dumps(
            {
                "Context": mobile_money.context,
                "A": mobile_money.var_a,
                "B": mobile_money.var_b,
                "Mechanism": mobile_money.mechanism,
                "Pattern": mobile_money.pattern,
            }
        )
        backend = MockBackend(use_default=False).script(echo, echo, echo)
        with pytest.raises(InvalidChild):
            transform_mechanism(mobile_money, backend, seed=2)

    def test_lineage_parent_is_source(self, mobile_money, mock_provider):
        child = transform_mechanism(mobile_money, mock_provider, seed=2)
        assert child.lineage.parents == (mobile_money.id,)
        assert child.lineage.generation == mobile_money.lineage.generation + 1


class TestTransferContext:
    TARGET = "Southeast Asian secondary cities, 2015-2030"

    def test_context_replaced_abm_fixed(self, mobile_money, mock_provider):
        child = transfer_context(mobile_money, self.TARGET, mock_provider, seed=3)
        assert child.innovation_type is InnovationType.CONTEXT_TRANSFER
        assert child.context == self.TARGET
        assert child.var_a == mobile_money.var_a
        assert child.var_b == mobile_money.var_b
        assert child.mechanism == mobile_money.mechanism

    def test_same_context_rejected(self, mobile_money, mock_provider):
        with pytest.raises(SameContext):
            transfer_context(mobile_money, mobile_money.context, mock_provider)

    def test_empty_target_rejected(self, mobile_money, mock_provider):
        with pytest.raises(SameContext):
            transfer_context(mobile_money, "   ", mock_provider)

    def test_pattern_may_change_but_abm_must_not(self, mobile_money):
        # scripted provider shifts the temporal window in the pattern: legal
        doc = {
            "Context": self.TARGET,
            "A": mobile_money.var_a,
            "B": mobile_money.var_b,
            "Mechanism": mobile_money.mechanism,
            "Pattern": "Polarization emerges after 2025 as hubs capture liquidity.",
        }
        backend = MockBackend(use_default=False).script(json.dumps(doc))
        child = transfer_context(mobile_money, self.TARGET, backend, seed=3)
        assert child.pattern != mobile_money.pattern


class TestGenerateMeta:
    def test_parents_recorded_exactly(self, mobile_money, second_hypothesis, mock_provider):
        child = generate_meta([mobile_money, second_hypothesis], mock_provider, seed=4)
        assert child.innovation_type is InnovationType.META_HYPOTHESIS
        assert set(child.lineage.parents) == {mobile_money.id, second_hypothesis.id}

    def test_single_input_rejected(self, mobile_money, mock_provider):
        with pytest.raises(TooFewParents):
            generate_meta([mobile_money], mock_provider)

    def test_meta_of_regional_variants_spans_contexts(self, mobile_money, mock_provider):
        variant = transfer_context(
            mobile_money, "Andean secondary cities, 2012-2028", mock_provider, seed=9
        )
        child = generate_meta([mobile_money, variant], mock_provider, seed=4)
        assert "Cross-context" in child.context


class TestRefineLoop:
    def test_scripted_tiers_converge_in_three_steps(self, mobile_money, mock_provider):
        tiers = iter([TierRating.TIER4, TierRating.TIER3, TierRating.TIER1])
        trace = refine_loop(
            mobile_money,
            DEFAULT_PANEL,
            lambda h: _report(next(tiers)),
            mock_provider,
            RefinementConfig(max_iterations=5, target_tier=TierRating.TIER1, seed=0),
        )
        assert len(trace.steps) == 3
        assert trace.converged is True
        assert trace.final.tier is TierRating.TIER1
        assert trace.final == trace.steps[-1].hypothesis

    def test_always_reject_exhausts_budget(self, mobile_money, mock_provider):
        trace = refine_loop(
            mobile_money,
            DEFAULT_PANEL,
            lambda h: _report(TierRating.REJECT),
            mock_provider,
            RefinementConfig(max_iterations=4, target_tier=TierRating.TIER2, seed=0),
        )
        assert len(trace.steps) == 4
        assert trace.converged is False
        # ties break toward the most recent snapshot
        assert trace.final == trace.steps[-1].hypothesis

    def test_single_iteration_bound(self, mobile_money, mock_provider):
        trace = refine_loop(
            mobile_money,
            DEFAULT_PANEL,
            lambda h: _report(TierRating.TIER4),
            mock_provider,
            RefinementConfig(max_iterations=1, target_tier=TierRating.TIER1, seed=0),
        )
        assert len(trace.steps) == 1

    def test_best_snapshot_wins_even_if_not_last(self, mobile_money, mock_provider):
        tiers = iter([TierRating.TIER2, TierRating.TIER4, TierRating.TIER4])
        trace = refine_loop(
            mobile_money,
            DEFAULT_PANEL,
            lambda h: _report(next(tiers)),
            mock_provider,
            RefinementConfig(max_iterations=3, target_tier=TierRating.TIER1, seed=0),
        )
        assert trace.final == trace.steps[0].hypothesis
        assert trace.final.tier is TierRating.TIER2

    def test_transcript_has_persona_turns_in_order(self, mobile_money, mock_provider):
        panel = PanelConfig(
            personas=(
                Persona(name="A1", discipline="economics", stance="press on identification"),
                Persona(name="B2", discipline="geography", stance="press on scale"),
            ),
            rounds=2,
        )
        trace = refine_loop(
            mobile_money,
            panel,
            lambda h: _report(TierRating.TIER1),
            mock_provider,
            RefinementConfig(max_iterations=1, target_tier=TierRating.TIER1, seed=0),
        )
        transcript = trace.steps[0].transcript
        assert len(transcript) == 4  # 2 personas x 2 rounds
        assert transcript[0].startswith("[A1")
        assert transcript[1].startswith("[B2")
        assert transcript[2].startswith("[A1")

    def test_provider_failure_attaches_partial_trace(self, mobile_money):
        backend = MockBackend(use_default=False)  # no responses at all
        with pytest.raises(ProviderFailure) as excinfo:
            refine_loop(
                mobile_money,
                DEFAULT_PANEL,
                lambda h: _report(TierRating.TIER1),
                backend,
                RefinementConfig(max_iterations=2, target_tier=TierRating.TIER1, seed=0),
            )
        assert excinfo.value.partial_trace.steps == ()

    def test_deterministic_trace(self, mobile_money):
        def run():
            return refine_loop(
                mobile_money,
                DEFAULT_PANEL,
                lambda h: _report(TierRating.TIER3),
                MockBackend(seed=1),
                RefinementConfig(max_iterations=2, target_tier=TierRating.TIER2, seed=5),
            )

        a, b = run(), run()
        assert [s.transcript for s in a.steps] == [s.transcript for s in b.steps]
        assert serialize_hypothesis(a.final) == serialize_hypothesis(b.final)

    def test_config_rejects_reject_target(self):
        with pytest.raises(ValueError):
            RefinementConfig(target_tier=TierRating.REJECT)

    def test_panel_needs_two_personas(self):
        with pytest.raises(ValueError):
            PanelConfig(personas=(Persona(name="solo", discipline="x", stance="y"),))
