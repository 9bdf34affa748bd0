"""Command-line front end: check, fit, generate-data, simulate.

Exit codes: 0 success, 1 domain/validation failure, 2 I/O or usage
error. All randomized commands accept --seed and reproduce exactly.
"""

from __future__ import annotations

import os
import re
import sys
import warnings
from dataclasses import replace

import click
import numpy as np

from .dsl.parser import parse_model
from .dsl.semantics import check_semantics
from .errors import BactaError, DivergenceWarning, SimulationError, SpecError
from .graph import compile_model
from .mcmc.config import McmcConfig
from .mcmc.sampler import run_mcmc
from .mcmc.summary import posterior_probability, summarize
from .trial.design import load_trial_spec_file
from .trial.generate import generate_cohort, read_dataset_csv, write_dataset_csv
from .trial.simulate import TrialOutcome, run_oc_simulation

_PROB_RE = re.compile(r"^\s*(.+?)\s*(>|<)\s*([-+0-9.eE]+)\s*$")


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def _parse_scalars(pairs: tuple[str, ...]) -> dict[str, float]:
    scalars = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise click.UsageError(f"--scalar expects NAME=VALUE, got {pair!r}")
        try:
            scalars[name.strip()] = float(value)
        except ValueError:
            raise click.UsageError(f"--scalar value {value!r} is not a number")
    return scalars


def _load_data(path: str, scalars: dict[str, float]):
    try:
        return read_dataset_csv(path, scalars)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@click.group()
@click.version_option(package_name="bacta")
def main():
    """Bayesian adaptive trial engine."""


@main.command()
@click.argument("model_path", type=click.Path())
@click.option("--data", "data_path", type=click.Path(), default=None, help="CSV dataset to compile against.")
@click.option("--scalar", "scalars", multiple=True, help="Extra data scalar as NAME=VALUE; repeatable.")
@click.option("--strict", is_flag=True, help="Reject '=' deterministic assignments (strict JAGS).")
def check(model_path, data_path, scalars, strict):
    """Parse and validate a model file, optionally against a dataset."""
    source = _read_text(model_path)
    scalar_map = _parse_scalars(scalars)
    try:
        ast = parse_model(source, source_name=model_path, strict_assign=strict)
    except BactaError as exc:
        click.echo(f"{model_path}:{exc}")
        sys.exit(1)
    if data_path is not None:
        data = _load_data(data_path, scalar_map)
        data_names = data.names
    else:
        data = None
        data_names = set(scalar_map)
    diagnostics = check_semantics(ast, data_names)
    for d in diagnostics:
        click.echo(f"{model_path}:{d}")
    if diagnostics:
        sys.exit(1)
    if data is not None:
        try:
            graph = compile_model(ast, data)
        except BactaError as exc:
            click.echo(f"{model_path}: {exc}")
            sys.exit(1)
        click.echo(
            f"ok: {len(graph.parameter_ids)} parameter, "
            f"{len(graph.observed_ids)} observed, "
            f"{sum(1 for n in graph.nodes if n.kind.value == 'deterministic')} deterministic node(s)"
        )
    else:
        click.echo("ok")


@main.command()
@click.argument("model_path", type=click.Path())
@click.argument("data_path", type=click.Path())
@click.option("--chains", default=3, show_default=True, help="Number of chains.")
@click.option("--burnin", default=5000, show_default=True, help="Burn-in sweeps per chain.")
@click.option("--iters", default=10000, show_default=True, help="Recorded sweeps per chain.")
@click.option("--thin", default=1, show_default=True, help="Thinning interval.")
@click.option("--seed", default=0, show_default=True, help="Random seed.")
@click.option("--monitor", multiple=True, help="Node to record; repeatable (default: parameters plus scalar deterministic nodes).")
@click.option("--prob", "probs", multiple=True, help="Posterior probability query like 'beta1>5'; repeatable.")
@click.option("--samples-out", type=click.Path(), default=None, help="Write raw draws as CSV.")
@click.option("--summary-out", type=click.Path(), default=None, help="Write the summary table as CSV.")
@click.option("--scalar", "scalars", multiple=True, help="Extra data scalar as NAME=VALUE; repeatable.")
@click.option("--strict", is_flag=True, help="Reject '=' deterministic assignments (strict JAGS).")
def fit(model_path, data_path, chains, burnin, iters, thin, seed, monitor, probs,
        samples_out, summary_out, scalars, strict):
    """Fit a model to a CSV dataset and print posterior summaries."""
    source = _read_text(model_path)
    data = _load_data(data_path, _parse_scalars(scalars))
    try:
        ast = parse_model(source, source_name=model_path, strict_assign=strict)
        diagnostics = check_semantics(ast, data.names)
        if diagnostics:
            for d in diagnostics:
                click.echo(f"{model_path}:{d}", err=True)
            sys.exit(1)
        graph = compile_model(ast, data)
        config = McmcConfig(
            n_chains=chains, burn_in=burnin, iterations=iters, thinning=thin, seed=seed
        )
        if chains < 2 or iters < 100:
            click.echo(
                "warning: convergence diagnostics are unreliable with fewer than "
                "2 chains or 100 iterations",
                err=True,
            )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DivergenceWarning)
            samples = run_mcmc(graph, config, monitor=list(monitor) or None)
        for w in caught:
            if issubclass(w.category, DivergenceWarning):
                click.echo(f"warning: {w.message}", err=True)
        table = summarize(samples)
        click.echo(table.to_text())
        for query in probs:
            m = _PROB_RE.match(query)
            if m is None:
                raise click.UsageError(f"--prob expects '<expr><op><number>', got {query!r}")
            expr, op, threshold = m.group(1), m.group(2), float(m.group(3))
            comparator = "gt" if op == ">" else "lt"
            p = posterior_probability(samples, expr, comparator, threshold)
            click.echo(f"P({expr} {op} {m.group(3)}) = {p:.6f}")
        if samples_out:
            samples.to_csv(samples_out)
        if summary_out:
            table.to_csv(summary_out)
    except BactaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command("generate-data")
@click.argument("spec_path", type=click.Path())
@click.option("--stage", default=1, show_default=True, help="1-based stage whose cohort to generate.")
@click.option("--seed", default=0, show_default=True, help="Random seed.")
@click.option("-o", "--out", "out_path", type=click.Path(), required=True, help="Output CSV path.")
def generate_data(spec_path, stage, seed, out_path):
    """Generate one stage cohort from a trial spec and write it as CSV."""
    try:
        design = load_trial_spec_file(spec_path)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except SpecError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if not 1 <= stage <= len(design.stages):
        click.echo(
            f"error: stage {stage} out of range (design has {len(design.stages)} stages)",
            err=True,
        )
        sys.exit(1)
    try:
        from .rng import RandomStream

        cohort = generate_cohort(design, design.stages[stage - 1], RandomStream(seed))
        write_dataset_csv(cohort, out_path, design.column_order)
    except BactaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {cohort.row_count} rows to {out_path}")
    for name in design.column_order:
        col = np.array(cohort.columns[name], dtype=float)
        click.echo(
            f"  {name}: min={col.min():.6g} mean={col.mean():.6g} max={col.max():.6g}"
        )


def _default_threads() -> int:
    env = os.environ.get("BACTA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@main.command()
@click.argument("spec_path", type=click.Path())
@click.option("--replicates", default=100, show_default=True, help="Number of Monte Carlo replicates.")
@click.option("--seed", default=0, show_default=True, help="Master seed.")
@click.option("--threads", default=None, type=int, help="Worker processes (default: BACTA_THREADS or 1).")
@click.option("--oc-mcmc-burnin", default=None, type=int, help="Override burn-in for replicate analyses.")
@click.option("--oc-mcmc-iters", default=None, type=int, help="Override iterations for replicate analyses.")
@click.option("--failure-threshold", default=0.10, show_default=True, help="Abort if this fraction of replicates fails.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the OC table as CSV.")
@click.option("--replicate-log", type=click.Path(), default=None, help="Write per-replicate records as CSV.")
def simulate(spec_path, replicates, seed, threads, oc_mcmc_burnin, oc_mcmc_iters,
             failure_threshold, out_path, replicate_log):
    """Estimate operating characteristics by simulating full trials."""
    try:
        design = load_trial_spec_file(spec_path)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except SpecError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    mcmc = design.mcmc
    if oc_mcmc_burnin is not None:
        mcmc = replace(mcmc, burn_in=oc_mcmc_burnin)
    if oc_mcmc_iters is not None:
        mcmc = replace(mcmc, iterations=oc_mcmc_iters)
    if mcmc is not design.mcmc:
        design = replace(design, mcmc=mcmc)
    if threads is None:
        threads = _default_threads()
    try:
        oc, records = run_oc_simulation(
            design,
            n_replicates=replicates,
            master_seed=seed,
            parallelism=threads,
            failure_threshold=failure_threshold,
        )
    except SimulationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(format_oc_table(oc))
    if out_path:
        _write_oc_csv(oc, out_path)
    if replicate_log:
        _write_replicate_log(records, replicate_log)


def format_oc_table(oc) -> str:
    lines = [f"{'outcome':<16}{'count':>8}{'proportion':>12}{'mc_se':>10}"]
    for outcome in TrialOutcome:
        p = oc.proportions[outcome]
        count = round(p * oc.n_replicates)
        lines.append(
            f"{outcome.value:<16}{count:>8}{p:>12.4f}{oc.mc_standard_errors[outcome]:>10.4f}"
        )
    lines.append(f"any_success_rate      {oc.any_success_rate:.4f}")
    lines.append(f"expected_sample_size  {oc.expected_sample_size:.2f}")
    lines.append(f"replicates            {oc.n_replicates}")
    lines.append(f"divergent_replicates  {oc.divergent_replicate_count}")
    lines.append(f"failed_replicates     {oc.failed_replicate_count}")
    return "\n".join(lines)


def _write_oc_csv(oc, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outcome", "count", "proportion", "mc_se"])
        for outcome in TrialOutcome:
            p = oc.proportions[outcome]
            writer.writerow(
                [outcome.value, round(p * oc.n_replicates), p, oc.mc_standard_errors[outcome]]
            )


def _write_replicate_log(records, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["replicate_index", "outcome", "p_eff", "p_fut", "final_prob",
             "total_n", "seed_used", "diagnostics_flag", "error"]
        )
        for r in records:
            writer.writerow(
                [
                    r.replicate_index,
                    r.outcome.value if r.outcome else "",
                    "" if r.p_eff is None else r.p_eff,
                    "" if r.p_fut is None else r.p_fut,
                    "" if r.final_prob is None else r.final_prob,
                    "" if r.total_n is None else r.total_n,
                    r.seed_used,
                    int(r.diagnostics_flag),
                    r.error or "",
                ]
            )


if __name__ == "__main__":
    main()
