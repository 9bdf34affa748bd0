"""Two-stage adaptive trial execution and Monte Carlo replication.

Decision rules follow the generated-code semantics exactly: strict
comparisons, efficacy checked before futility, and no further analysis
after an early stop. Every source of randomness in a replicate derives
from its replicate seed through fixed-purpose substreams, so results
are independent of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional
import warnings

from ..errors import BactaError, DivergenceWarning, SimulationError
from ..graph import Dataset, compile_model
from ..mcmc.diagnostics import rhat
from ..mcmc.sampler import run_mcmc
from ..mcmc.summary import posterior_probability
from ..rng import RandomStream, mix_seed
from .design import DataAccumulation, DecisionRule, StagePlan, TrialDesign
from .generate import generate_cohort, merge_datasets

FAILURE_THRESHOLD_DEFAULT = 0.10

# fixed-purpose substream keys
_KEY_DATA_STAGE1 = 1
_KEY_MCMC_INTERIM = 2
_KEY_DATA_STAGE2 = 3
_KEY_MCMC_FINAL = 4


class InterimOutcome(Enum):
    EARLY_SUCCESS = "early_success"
    EARLY_FUTILITY = "early_futility"
    CONTINUE = "continue"


class TrialOutcome(Enum):
    EARLY_SUCCESS = "early_success"
    EARLY_FUTILITY = "early_futility"
    FINAL_SUCCESS = "final_success"
    FINAL_FAILURE = "final_failure"


@dataclass(frozen=True)
class InterimDecision:
    variant: InterimOutcome
    p_eff: float
    p_fut: float


@dataclass(frozen=True)
class ReplicateRecord:
    replicate_index: int
    outcome: Optional[TrialOutcome]
    p_eff: Optional[float]
    p_fut: Optional[float]
    final_prob: Optional[float]
    total_n: Optional[int]
    seed_used: int
    diagnostics_flag: bool
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class OperatingCharacteristics:
    n_replicates: int
    proportions: dict[TrialOutcome, float]
    any_success_rate: float
    expected_sample_size: float
    mc_standard_errors: dict[TrialOutcome, float]
    divergent_replicate_count: int
    failed_replicate_count: int


def evaluate_interim(samples, rules: DecisionRule) -> InterimDecision:
    """Efficacy first, then futility; both comparisons strict."""
    p_eff = posterior_probability(
        samples, rules.effect_parameter, "gt", rules.efficacy_delta
    )
    p_fut = posterior_probability(
        samples, rules.effect_parameter, "gt", rules.futility_delta
    )
    if p_eff > rules.efficacy_threshold:
        variant = InterimOutcome.EARLY_SUCCESS
    elif p_fut < rules.futility_threshold:
        variant = InterimOutcome.EARLY_FUTILITY
    else:
        variant = InterimOutcome.CONTINUE
    return InterimDecision(variant=variant, p_eff=p_eff, p_fut=p_fut)


def evaluate_final(samples, rules: DecisionRule):
    final_prob = posterior_probability(
        samples, rules.effect_parameter, "gt", rules.final_delta
    )
    outcome = (
        TrialOutcome.FINAL_SUCCESS
        if final_prob > rules.final_threshold
        else TrialOutcome.FINAL_FAILURE
    )
    return outcome, final_prob


def replicate_seed(master_seed: int, index: int) -> int:
    """Stateless seed derivation; collision-free over practical index ranges."""
    return mix_seed(master_seed, index)


def build_stage2_dataset(
    design: TrialDesign, stage1_data: Dataset, seed: int
) -> Dataset:
    """Accumulate keeps stage-1 rows as a prefix and appends a fresh
    cohort; RegenerateFull discards them and generates the cumulative
    size from scratch (generated-code compatibility mode)."""
    rng = RandomStream(mix_seed(seed, _KEY_DATA_STAGE2))
    stage2 = design.stages[1]
    if design.data_accumulation is DataAccumulation.ACCUMULATE:
        fresh = generate_cohort(design, stage2, rng)
        return merge_datasets(stage1_data, fresh)
    cumulative = StagePlan(
        stage_index=stage2.stage_index,
        n_per_arm=design.stages[0].n_per_arm + stage2.n_per_arm,
    )
    return generate_cohort(design, cumulative, rng)


def _fit(design: TrialDesign, data: Dataset, seed: int):
    graph = compile_model(design.analysis_ast, data)
    config = replace(design.mcmc, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergenceWarning)
        samples = run_mcmc(graph, config)
    divergent = any(r > 1.1 for r in rhat(samples).values())
    return samples, divergent


def run_single_trial(
    design: TrialDesign, replicate_seed_value: int, replicate_index: int = 0
) -> ReplicateRecord:
    """Full pipeline for one replicate; module errors become a failed
    record rather than an exception."""
    if len(design.stages) != 2:
        raise SimulationError(
            f"exactly 2 stages are supported, got {len(design.stages)}"
        )
    try:
        stage1_rng = RandomStream(mix_seed(replicate_seed_value, _KEY_DATA_STAGE1))
        stage1 = generate_cohort(design, design.stages[0], stage1_rng)
        samples, div1 = _fit(
            design, stage1, mix_seed(replicate_seed_value, _KEY_MCMC_INTERIM)
        )
        interim = evaluate_interim(samples, design.rules)
        if interim.variant is not InterimOutcome.CONTINUE:
            outcome = (
                TrialOutcome.EARLY_SUCCESS
                if interim.variant is InterimOutcome.EARLY_SUCCESS
                else TrialOutcome.EARLY_FUTILITY
            )
            return ReplicateRecord(
                replicate_index=replicate_index,
                outcome=outcome,
                p_eff=interim.p_eff,
                p_fut=interim.p_fut,
                final_prob=None,
                total_n=stage1.row_count,
                seed_used=replicate_seed_value,
                diagnostics_flag=div1,
            )
        full = build_stage2_dataset(design, stage1, replicate_seed_value)
        samples2, div2 = _fit(
            design, full, mix_seed(replicate_seed_value, _KEY_MCMC_FINAL)
        )
        outcome, final_prob = evaluate_final(samples2, design.rules)
        return ReplicateRecord(
            replicate_index=replicate_index,
            outcome=outcome,
            p_eff=interim.p_eff,
            p_fut=interim.p_fut,
            final_prob=final_prob,
            total_n=full.row_count,
            seed_used=replicate_seed_value,
            diagnostics_flag=div1 or div2,
        )
    except BactaError as exc:
        return ReplicateRecord(
            replicate_index=replicate_index,
            outcome=None,
            p_eff=None,
            p_fut=None,
            final_prob=None,
            total_n=None,
            seed_used=replicate_seed_value,
            diagnostics_flag=False,
            error=str(exc),
        )


def _replicate_worker(args):
    design, master_seed, index = args
    return run_single_trial(design, replicate_seed(master_seed, index), index)


def run_oc_simulation(
    design: TrialDesign,
    n_replicates: int,
    master_seed: int,
    parallelism: int = 1,
    failure_threshold: float = FAILURE_THRESHOLD_DEFAULT,
):
    """Replicates are independent work items; aggregation is in index
    order so the result is invariant to the degree of parallelism."""
    if n_replicates < 1:
        raise SimulationError("n_replicates must be at least 1")
    tasks = [(design, master_seed, i) for i in range(n_replicates)]
    if parallelism <= 1:
        records = [_replicate_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            records = list(
                pool.map(_replicate_worker, tasks, chunksize=max(1, n_replicates // (4 * parallelism)))
            )
    failed = [r for r in records if r.failed]
    if len(failed) > failure_threshold * n_replicates:
        raise SimulationError(
            f"{len(failed)} of {n_replicates} replicates failed "
            f"(threshold {failure_threshold:.0%}); first error: {failed[0].error}",
            failed_records=failed,
        )
    ok = [r for r in records if not r.failed]
    n_ok = len(ok)
    proportions = {}
    mc_se = {}
    for outcome in TrialOutcome:
        p = sum(1 for r in ok if r.outcome is outcome) / n_ok
        proportions[outcome] = p
        mc_se[outcome] = math.sqrt(p * (1.0 - p) / n_ok)
    oc = OperatingCharacteristics(
        n_replicates=n_ok,
        proportions=proportions,
        any_success_rate=proportions[TrialOutcome.EARLY_SUCCESS]
        + proportions[TrialOutcome.FINAL_SUCCESS],
        expected_sample_size=sum(r.total_n for r in ok) / n_ok,
        mc_standard_errors=mc_se,
        divergent_replicate_count=sum(1 for r in ok if r.diagnostics_flag),
        failed_replicate_count=len(failed),
    )
    return oc, records
