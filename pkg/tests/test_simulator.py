import json

import numpy as np
import pytest

from bacta.errors import SimulationError
from bacta.mcmc import McmcConfig, PosteriorSamples
from bacta.rng import mix_seed
from bacta.trial import (
    DecisionRule,
    InterimOutcome,
    TrialOutcome,
    build_stage2_dataset,
    evaluate_final,
    evaluate_interim,
    generate_cohort,
    load_trial_spec,
    replicate_seed,
    run_oc_simulation,
    run_single_trial,
)
from bacta.rng import RandomStream

RULES = DecisionRule(
    effect_parameter="beta1",
    efficacy_delta=10.0,
    efficacy_threshold=0.95,
    futility_delta=5.0,
    futility_threshold=0.05,
    final_delta=5.0,
    final_threshold=0.95,
)


def _effect_samples(draws):
    arr = np.asarray(draws, dtype=float)[None, :, None]
    cfg = McmcConfig(n_chains=1, burn_in=0, iterations=arr.shape[1])
    return PosteriorSamples(parameter_names=["beta1"], draws=arr, config=cfg)


def _fast_doc(appendix_trial_path, n_per_arm=25):
    doc = json.loads(appendix_trial_path.read_text())
    doc["stages"] = [{"n_per_arm": n_per_arm}, {"n_per_arm": n_per_arm}]
    doc["mcmc"] = {"n_chains": 2, "burn_in": 300, "iterations": 600, "seed": 0}
    return doc


@pytest.fixture(scope="module")
def fast_design(appendix_trial_path):
    return load_trial_spec(json.dumps(_fast_doc(appendix_trial_path)))


# -- decision rules -----------------------------------------------------


def test_interim_boundary_is_not_efficacy():
    # p_eff exactly at the threshold must NOT trigger early success
    draws = [11.0] * 19 + [9.0]  # P(beta1 > 10) = 0.95 exactly
    decision = evaluate_interim(_effect_samples(draws), RULES)
    assert decision.p_eff == 0.95
    assert decision.variant is InterimOutcome.CONTINUE


def test_interim_above_threshold_is_efficacy():
    draws = [11.0] * 96 + [9.0] * 4  # P = 0.96 > 0.95
    decision = evaluate_interim(_effect_samples(draws), RULES)
    assert decision.variant is InterimOutcome.EARLY_SUCCESS


def test_interim_boundary_is_not_futility():
    draws = [6.0] * 1 + [4.0] * 19  # P(beta1 > 5) = 0.05 exactly
    decision = evaluate_interim(_effect_samples(draws), RULES)
    assert decision.p_fut == 0.05
    assert decision.variant is InterimOutcome.CONTINUE


def test_interim_below_threshold_is_futility():
    draws = [6.0] * 4 + [4.0] * 96  # P = 0.04 < 0.05
    decision = evaluate_interim(_effect_samples(draws), RULES)
    assert decision.variant is InterimOutcome.EARLY_FUTILITY


def test_efficacy_checked_before_futility():
    # with a permissive futility threshold both rules fire; efficacy wins
    rules = DecisionRule(
        effect_parameter="beta1",
        efficacy_delta=0.0,
        efficacy_threshold=0.5,
        futility_delta=100.0,
        futility_threshold=0.99,
        final_delta=5.0,
        final_threshold=0.95,
    )
    decision = evaluate_interim(_effect_samples([1.0] * 20), rules)
    assert decision.p_eff > 0.5 and decision.p_fut < 0.99
    assert decision.variant is InterimOutcome.EARLY_SUCCESS


def test_final_boundary_is_failure():
    draws = [6.0] * 19 + [4.0]  # P(beta1 > 5) = 0.95 exactly
    outcome, prob = evaluate_final(_effect_samples(draws), RULES)
    assert prob == 0.95
    assert outcome is TrialOutcome.FINAL_FAILURE
    outcome2, _ = evaluate_final(_effect_samples([6.0] * 96 + [4.0] * 4), RULES)
    assert outcome2 is TrialOutcome.FINAL_SUCCESS


# -- seeds and stage-2 data ---------------------------------------------


def test_replicate_seed_derivation():
    assert replicate_seed(42, 0) == mix_seed(42, 0)
    seeds = {replicate_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000


def test_stage2_accumulate_keeps_prefix(fast_design):
    rng = RandomStream(mix_seed(777, 1))
    stage1 = generate_cohort(fast_design, fast_design.stages[0], rng)
    full = build_stage2_dataset(fast_design, stage1, 777)
    assert full.row_count == 100
    for name in stage1.columns:
        assert full.columns[name][:50] == stage1.columns[name]


def test_stage2_regenerate_full(appendix_trial_path):
    doc = _fast_doc(appendix_trial_path)
    doc["data_accumulation"] = "regenerate_full"
    design = load_trial_spec(json.dumps(doc))
    rng = RandomStream(mix_seed(777, 1))
    stage1 = generate_cohort(design, design.stages[0], rng)
    full = build_stage2_dataset(design, stage1, 777)
    assert full.row_count == 100
    # stage-1 rows are not a prefix: everything was regenerated
    assert full.columns["Y"][:50] != stage1.columns["Y"]
    # block allocation applies to the cumulative cohort
    assert full.columns["X"] == [0.0] * 50 + [1.0] * 50


# -- single replicates --------------------------------------------------


def test_run_single_trial_deterministic(fast_design):
    a = run_single_trial(fast_design, replicate_seed(5, 0), 0)
    b = run_single_trial(fast_design, replicate_seed(5, 0), 0)
    assert a == b
    assert not a.failed
    assert a.outcome in set(TrialOutcome)
    assert a.total_n in (50, 100)
    if a.outcome in (TrialOutcome.EARLY_SUCCESS, TrialOutcome.EARLY_FUTILITY):
        assert a.total_n == 50 and a.final_prob is None
    else:
        assert a.total_n == 100 and a.final_prob is not None


def test_run_single_trial_requires_two_stages(appendix_trial_path):
    doc = _fast_doc(appendix_trial_path)
    doc["stages"].append({"n_per_arm": 10})
    design = load_trial_spec(json.dumps(doc))
    with pytest.raises(SimulationError):
        run_single_trial(design, 1, 0)


def test_generation_error_becomes_failed_record(appendix_trial_path):
    # dividing by the treatment indicator produces non-finite means for
    # the control arm, which must surface as a failed record
    doc = _fast_doc(appendix_trial_path)
    doc["outcome"]["mean"] = "intercept / X"
    design = load_trial_spec(json.dumps(doc))
    record = run_single_trial(design, 1, 0)
    assert record.failed
    assert record.outcome is None
    assert "mean" in record.error


# -- Monte Carlo aggregation --------------------------------------------


def test_oc_simulation_aggregates(fast_design):
    oc, records = run_oc_simulation(fast_design, n_replicates=4, master_seed=9)
    assert oc.n_replicates == 4
    assert len(records) == 4
    assert sum(oc.proportions.values()) == pytest.approx(1.0)
    assert 50.0 <= oc.expected_sample_size <= 100.0
    assert oc.failed_replicate_count == 0
    for outcome, p in oc.proportions.items():
        se = oc.mc_standard_errors[outcome]
        assert se == pytest.approx((p * (1 - p) / 4) ** 0.5)
    assert oc.any_success_rate == pytest.approx(
        oc.proportions[TrialOutcome.EARLY_SUCCESS]
        + oc.proportions[TrialOutcome.FINAL_SUCCESS]
    )


def test_oc_parallelism_invariance(fast_design):
    oc1, rec1 = run_oc_simulation(fast_design, n_replicates=4, master_seed=31)
    oc2, rec2 = run_oc_simulation(
        fast_design, n_replicates=4, master_seed=31, parallelism=2
    )
    assert rec1 == rec2
    assert oc1 == oc2


def test_oc_failure_threshold(appendix_trial_path):
    doc = _fast_doc(appendix_trial_path)
    doc["outcome"]["mean"] = "intercept / X"
    design = load_trial_spec(json.dumps(doc))
    with pytest.raises(SimulationError) as exc:
        run_oc_simulation(design, n_replicates=3, master_seed=1)
    assert len(exc.value.failed_records) == 3


def test_oc_requires_replicates(fast_design):
    with pytest.raises(SimulationError):
        run_oc_simulation(fast_design, n_replicates=0, master_seed=1)
