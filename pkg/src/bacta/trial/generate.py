"""Simulation-truth data generation for trial stages."""

from __future__ import annotations

import csv

import numpy as np

from ..dists import VEC_BUILTINS, sample_normal_by_sd
from ..dsl.ast import BinaryOp, FunctionCall, NumberLiteral, UnaryNeg, VarRef
from ..errors import EvalError, SchemaError
from ..graph import Dataset
from ..rng import RandomStream
from .design import StagePlan, TrialDesign


def _eval_mean_expr(expr, env: dict[str, np.ndarray | float]):
    """Vectorized evaluation over cohort columns; `center(col)` subtracts
    the within-cohort mean of its argument."""
    if isinstance(expr, NumberLiteral):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.index is not None:
            raise EvalError("indexed references are not allowed in outcome means")
        if expr.name not in env:
            raise EvalError(f"unknown name {expr.name} in outcome mean")
        return env[expr.name]
    if isinstance(expr, UnaryNeg):
        return -_eval_mean_expr(expr.operand, env)
    if isinstance(expr, BinaryOp):
        left = _eval_mean_expr(expr.left, env)
        right = _eval_mean_expr(expr.right, env)
        op = expr.op
        if op == "add":
            return left + right
        if op == "sub":
            return left - right
        if op == "mul":
            return left * right
        if op == "div":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.divide(left, right)
        if op == "pow":
            return np.power(left, right)
        raise EvalError(f"unknown operator {op}")
    if isinstance(expr, FunctionCall):
        if expr.name == "center":
            col = _eval_mean_expr(expr.args[0], env)
            return col - np.mean(col)
        fn = VEC_BUILTINS.get(expr.name)
        if fn is None:
            raise EvalError(f"unknown function {expr.name} in outcome mean")
        return fn(*[_eval_mean_expr(a, env) for a in expr.args])
    raise EvalError(f"cannot evaluate {expr!r}")


def generate_cohort(design: TrialDesign, stage: StagePlan, rng: RandomStream) -> Dataset:
    """One cohort of 2 * n_per_arm patients.

    Treatment allocation is a deterministic block (control rows first),
    truncated normals clamp at the bound, and the outcome mean is
    evaluated on the generated covariates before noise is applied.
    Stored columns are always the raw (pre-centering) values.
    """
    total = 2 * stage.n_per_arm
    env: dict[str, np.ndarray] = {}
    columns: dict[str, list[float]] = {}
    for cov in design.covariates:
        if cov.kind == "block_treatment":
            a, b = cov.ratio
            n_control = int(round(total * a / (a + b)))
            col = np.concatenate(
                [np.zeros(n_control), np.ones(total - n_control)]
            )
        elif cov.kind == "constant":
            col = np.full(total, cov.value)
        else:  # normal
            col = np.array(
                [sample_normal_by_sd(cov.mean, cov.sd, rng) for _ in range(total)]
            )
            if cov.lower_truncation is not None:
                col = np.maximum(col, cov.lower_truncation)
        env[cov.name] = col
        columns[cov.name] = col.tolist()

    env.update(design.outcome.truth_params)
    mu = np.broadcast_to(
        np.asarray(_eval_mean_expr(design.outcome.mean_expr, env), dtype=float),
        (total,),
    )
    if not np.all(np.isfinite(mu)):
        raise EvalError("non-finite outcome mean during generation")

    noise = design.outcome.noise_kind
    if noise == "normal":
        sd = design.outcome.noise_sd
        y = [m + sd * rng.normal() for m in mu]
    elif noise == "bernoulli":
        if np.any((mu < 0) | (mu > 1)):
            raise EvalError("bernoulli outcome mean outside [0, 1]")
        y = [1.0 if rng.uniform() < m else 0.0 for m in mu]
    else:  # poisson
        if np.any(mu <= 0):
            raise EvalError("poisson outcome mean must be positive")
        y = [_poisson_draw(m, rng) for m in mu]

    ordered = {design.outcome.name: [float(v) for v in y]}
    for cov in design.covariates:
        ordered[cov.name] = columns[cov.name]
    return Dataset.from_columns(ordered)


def _poisson_draw(lam: float, rng: RandomStream) -> float:
    count = 0
    waited = rng.exponential()
    while waited < lam:
        count += 1
        waited += rng.exponential()
    return float(count)


def merge_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Row concatenation; requires identical column sets."""
    if set(a.columns) != set(b.columns):
        raise SchemaError(
            f"column mismatch: {sorted(a.columns)} vs {sorted(b.columns)}"
        )
    merged = {name: list(a.columns[name]) + list(b.columns[name]) for name in a.columns}
    return Dataset.from_columns(merged)


# -- CSV I/O ------------------------------------------------------------


def write_dataset_csv(data: Dataset, path, column_order: list[str] | None = None) -> None:
    names = column_order or sorted(data.columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(data.row_count):
            writer.writerow(
                [
                    "" if data.columns[n][i] is None else repr(float(data.columns[n][i]))
                    for n in names
                ]
            )


def read_dataset_csv(path, scalars: dict[str, float] | None = None) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV")
        columns: dict[str, list] = {name.strip(): [] for name in header}
        names = [name.strip() for name in header]
        for row in reader:
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(names):
                raise SchemaError(f"{path}: ragged row {row!r}")
            for name, cell in zip(names, row):
                cell = cell.strip()
                if cell == "" or cell.upper() == "NA":
                    columns[name].append(None)
                else:
                    try:
                        columns[name].append(float(cell))
                    except ValueError:
                        raise SchemaError(f"{path}: non-numeric cell {cell!r}")
    return Dataset.from_columns(columns, scalars)
