"""Declarative trial specification.

A trial spec is a JSON document with keys `covariates`, `outcome`,
`stages`, `analysis_model`, `mcmc`, `rules` and `data_accumulation`.
Truth parameters live only in the outcome block and are never visible
to the analysis model, so type-I-error and power scenarios differ by a
single value.

The outcome mean expression may use `center(col)`, which subtracts the
within-cohort mean of a covariate column at generation time while the
stored column stays raw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..dsl.ast import (
    BinaryOp,
    Expression,
    FunctionCall,
    ModelAst,
    NumberLiteral,
    UnaryNeg,
    VarRef,
)
from ..dsl.parser import parse_expression, parse_model
from ..dsl.semantics import check_semantics
from ..errors import BactaError, SpecError
from ..mcmc.config import McmcConfig


class DataAccumulation(Enum):
    ACCUMULATE = "accumulate"
    REGENERATE_FULL = "regenerate_full"


@dataclass(frozen=True)
class CovariateSpec:
    name: str
    kind: str  # normal | constant | block_treatment
    mean: Optional[float] = None
    sd: Optional[float] = None
    lower_truncation: Optional[float] = None
    value: Optional[float] = None
    ratio: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class OutcomeSpec:
    name: str
    mean_source: str
    mean_expr: Expression
    noise_kind: str  # normal | bernoulli | poisson
    noise_sd: Optional[float]
    truth_params: dict[str, float]


@dataclass(frozen=True)
class StagePlan:
    stage_index: int  # 1-based
    n_per_arm: int  # new patients per arm enrolled in this stage


@dataclass(frozen=True)
class DecisionRule:
    effect_parameter: str
    efficacy_delta: float
    efficacy_threshold: float
    futility_delta: float
    futility_threshold: float
    final_delta: float
    final_threshold: float


@dataclass(frozen=True)
class TrialDesign:
    covariates: tuple[CovariateSpec, ...]
    outcome: OutcomeSpec
    stages: tuple[StagePlan, ...]
    analysis_model_source: str
    analysis_ast: ModelAst
    mcmc: McmcConfig
    rules: DecisionRule
    data_accumulation: DataAccumulation

    @property
    def column_order(self) -> list[str]:
        return [self.outcome.name] + [c.name for c in self.covariates]


# -- loading ------------------------------------------------------------


def _require(mapping, key, path, type_=None):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SpecError(f"{path}.{key}" if path else key, "missing required field")
    value = mapping[key]
    if type_ is not None and not isinstance(value, type_):
        raise SpecError(
            f"{path}.{key}" if path else key,
            f"expected {getattr(type_, '__name__', type_)}, got {type(value).__name__}",
        )
    return value


def _number(mapping, key, path):
    v = _require(mapping, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{path}.{key}", "expected a number")
    return float(v)


def _threshold(mapping, key, path):
    v = _number(mapping, key, path)
    if not 0.0 < v < 1.0:
        raise SpecError(f"{path}.{key}", f"must be in (0, 1), got {v}")
    return v


def _load_covariate(entry, path) -> CovariateSpec:
    name = _require(entry, "name", path, str)
    gen = _require(entry, "generator", path, dict)
    kind = _require(gen, "type", f"{path}.generator", str)
    if kind == "normal":
        sd = _number(gen, "sd", f"{path}.generator")
        if sd <= 0:
            raise SpecError(f"{path}.generator.sd", f"must be positive, got {sd}")
        lower = gen.get("lower_truncation")
        if lower is not None:
            lower = float(lower)
        return CovariateSpec(
            name=name,
            kind="normal",
            mean=_number(gen, "mean", f"{path}.generator"),
            sd=sd,
            lower_truncation=lower,
        )
    if kind == "constant":
        return CovariateSpec(
            name=name, kind="constant", value=_number(gen, "value", f"{path}.generator")
        )
    if kind == "block_treatment":
        ratio = gen.get("ratio", [1, 1])
        if (
            not isinstance(ratio, list)
            or len(ratio) != 2
            or not all(isinstance(r, int) and r > 0 for r in ratio)
        ):
            raise SpecError(f"{path}.generator.ratio", "expected two positive integers")
        return CovariateSpec(name=name, kind="block_treatment", ratio=(ratio[0], ratio[1]))
    raise SpecError(f"{path}.generator.type", f"unknown generator type {kind!r}")


def _expr_names(expr) -> set[str]:
    if isinstance(expr, NumberLiteral):
        return set()
    if isinstance(expr, VarRef):
        names = {expr.name}
        if expr.index is not None:
            names |= _expr_names(expr.index)
        return names
    if isinstance(expr, UnaryNeg):
        return _expr_names(expr.operand)
    if isinstance(expr, BinaryOp):
        return _expr_names(expr.left) | _expr_names(expr.right)
    if isinstance(expr, FunctionCall):
        out = set()
        for a in expr.args:
            out |= _expr_names(a)
        return out
    return set()


def load_trial_spec(text: str) -> TrialDesign:
    """Parse and fully validate a trial spec document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("<document>", "top level must be an object")

    cov_entries = _require(doc, "covariates", "", list)
    covariates = tuple(
        _load_covariate(e, f"covariates[{i}]") for i, e in enumerate(cov_entries)
    )
    cov_names = [c.name for c in covariates]
    if len(set(cov_names)) != len(cov_names):
        raise SpecError("covariates", "duplicate covariate names")

    out = _require(doc, "outcome", "", dict)
    out_name = _require(out, "name", "outcome", str)
    if out_name in cov_names:
        raise SpecError("outcome.name", f"{out_name!r} collides with a covariate")
    mean_source = _require(out, "mean", "outcome", str)
    try:
        mean_expr = parse_expression(mean_source)
    except BactaError as exc:
        raise SpecError("outcome.mean", str(exc)) from exc
    truth = _require(out, "truth_params", "outcome", dict)
    truth_params = {}
    for k, v in truth.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SpecError(f"outcome.truth_params.{k}", "expected a number")
        truth_params[k] = float(v)
    allowed = set(cov_names) | set(truth_params) | {"center"}
    unknown = _expr_names(mean_expr) - allowed
    if unknown:
        raise SpecError(
            "outcome.mean", f"references undeclared names: {sorted(unknown)}"
        )
    noise = _require(out, "noise", "outcome", dict)
    noise_kind = _require(noise, "type", "outcome.noise", str)
    noise_sd = None
    if noise_kind == "normal":
        noise_sd = _number(noise, "sd", "outcome.noise")
        if noise_sd <= 0:
            raise SpecError("outcome.noise.sd", f"must be positive, got {noise_sd}")
    elif noise_kind not in ("bernoulli", "poisson"):
        raise SpecError("outcome.noise.type", f"unknown noise type {noise_kind!r}")
    outcome = OutcomeSpec(
        name=out_name,
        mean_source=mean_source,
        mean_expr=mean_expr,
        noise_kind=noise_kind,
        noise_sd=noise_sd,
        truth_params=truth_params,
    )

    stage_entries = _require(doc, "stages", "", list)
    if not stage_entries:
        raise SpecError("stages", "at least one stage is required")
    stages = []
    for i, entry in enumerate(stage_entries):
        n = _require(entry, "n_per_arm", f"stages[{i}]")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise SpecError(f"stages[{i}].n_per_arm", "expected a positive integer")
        stages.append(StagePlan(stage_index=i + 1, n_per_arm=n))

    model_source = _require(doc, "analysis_model", "", str)
    try:
        ast = parse_model(model_source, source_name="analysis_model")
    except BactaError as exc:
        raise SpecError("analysis_model", str(exc)) from exc
    data_names = set(cov_names) | {out_name, "n"}
    diagnostics = check_semantics(ast, data_names)
    if diagnostics:
        raise SpecError("analysis_model", "; ".join(str(d) for d in diagnostics))

    mcmc_doc = doc.get("mcmc", {})
    if not isinstance(mcmc_doc, dict):
        raise SpecError("mcmc", "expected an object")
    known = {"n_chains", "burn_in", "iterations", "thinning", "seed", "target_acceptance"}
    unknown_keys = set(mcmc_doc) - known
    if unknown_keys:
        raise SpecError("mcmc", f"unknown keys {sorted(unknown_keys)}")
    try:
        mcmc = McmcConfig(**mcmc_doc)
    except (TypeError, ValueError) as exc:
        raise SpecError("mcmc", str(exc)) from exc

    rules_doc = _require(doc, "rules", "", dict)
    effect_parameter = _require(rules_doc, "effect_parameter", "rules", str)
    from ..dsl.semantics import defined_names

    if effect_parameter not in defined_names(ast):
        raise SpecError(
            "rules.effect_parameter",
            f"{effect_parameter!r} is not defined by the analysis model",
        )
    interim = _require(rules_doc, "interim", "rules", dict)
    eff = _require(interim, "efficacy", "rules.interim", dict)
    fut = _require(interim, "futility", "rules.interim", dict)
    final = _require(rules_doc, "final", "rules", dict)
    rules = DecisionRule(
        effect_parameter=effect_parameter,
        efficacy_delta=_number(eff, "delta", "rules.interim.efficacy"),
        efficacy_threshold=_threshold(eff, "prob_threshold", "rules.interim.efficacy"),
        futility_delta=_number(fut, "delta", "rules.interim.futility"),
        futility_threshold=_threshold(fut, "prob_threshold", "rules.interim.futility"),
        final_delta=_number(final, "delta", "rules.final"),
        final_threshold=_threshold(final, "prob_threshold", "rules.final"),
    )

    accumulation_raw = doc.get("data_accumulation", "accumulate")
    try:
        accumulation = DataAccumulation(accumulation_raw)
    except ValueError:
        raise SpecError(
            "data_accumulation",
            f"expected 'accumulate' or 'regenerate_full', got {accumulation_raw!r}",
        )

    return TrialDesign(
        covariates=covariates,
        outcome=outcome,
        stages=tuple(stages),
        analysis_model_source=model_source,
        analysis_ast=ast,
        mcmc=mcmc,
        rules=rules,
        data_accumulation=accumulation,
    )


def load_trial_spec_file(path) -> TrialDesign:
    with open(path, encoding="utf-8") as fh:
        return load_trial_spec(fh.read())
