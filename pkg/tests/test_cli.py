import json

import numpy as np
import pytest
from click.testing import CliRunner

from bacta.cli import main
from bacta.rng import RandomStream
from bacta.trial import generate_cohort, load_trial_spec_file, write_dataset_csv


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def appendix_csv(tmp_path_factory, appendix_trial_path):
    design = load_trial_spec_file(appendix_trial_path)
    cohort = generate_cohort(design, design.stages[0], RandomStream(101))
    path = tmp_path_factory.mktemp("data") / "stage1.csv"
    write_dataset_csv(cohort, path, design.column_order)
    return path


@pytest.fixture(scope="module")
def fast_spec(tmp_path_factory, appendix_trial_path):
    doc = json.loads(appendix_trial_path.read_text())
    doc["stages"] = [{"n_per_arm": 20}, {"n_per_arm": 20}]
    doc["mcmc"] = {"n_chains": 2, "burn_in": 200, "iterations": 400, "seed": 0}
    path = tmp_path_factory.mktemp("spec") / "fast.json"
    path.write_text(json.dumps(doc))
    return path


# -- top level ----------------------------------------------------------


def test_help_lists_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for cmd in ("check", "fit", "generate-data", "simulate"):
        assert cmd in result.output


@pytest.mark.parametrize("cmd", ["check", "fit", "generate-data", "simulate"])
def test_subcommand_help(runner, cmd):
    result = runner.invoke(main, [cmd, "--help"])
    assert result.exit_code == 0
    assert "--help" in result.output


# -- check --------------------------------------------------------------


def test_check_ok_without_data(runner, tmp_path):
    path = tmp_path / "m.bug"
    path.write_text("model { x ~ dnorm(0, 1) }")
    result = runner.invoke(main, ["check", str(path)])
    assert result.exit_code == 0
    assert result.output.strip() == "ok"


def test_check_with_data_prints_node_counts(runner, specs_dir, appendix_csv):
    result = runner.invoke(
        main,
        ["check", str(specs_dir / "appendix_model.bug"), "--data", str(appendix_csv)],
    )
    assert result.exit_code == 0
    assert "ok: 4 parameter, 200 observed, 201 deterministic node(s)" in result.output


def test_check_undefined_variable_exit_1(runner, tmp_path):
    path = tmp_path / "m.bug"
    path.write_text("model { x ~ dnorm(mu, 1) }")
    result = runner.invoke(main, ["check", str(path)])
    assert result.exit_code == 1
    assert "undefined variable mu" in result.output


def test_check_parse_error_exit_1(runner, tmp_path):
    path = tmp_path / "m.bug"
    path.write_text("model { x <- }")
    result = runner.invoke(main, ["check", str(path)])
    assert result.exit_code == 1


def test_check_missing_file_exit_2(runner, tmp_path):
    result = runner.invoke(main, ["check", str(tmp_path / "nope.bug")])
    assert result.exit_code == 2


def test_check_strict_rejects_equals(runner, specs_dir, appendix_csv):
    # the canonical model uses '=' assignments
    args = ["check", str(specs_dir / "appendix_model.bug"), "--data", str(appendix_csv)]
    assert runner.invoke(main, args).exit_code == 0
    assert runner.invoke(main, args + ["--strict"]).exit_code == 1


def test_check_scalar_option(runner, tmp_path):
    path = tmp_path / "m.bug"
    path.write_text("model { x ~ dnorm(m0, 1) }")
    assert runner.invoke(main, ["check", str(path)]).exit_code == 1
    result = runner.invoke(main, ["check", str(path), "--scalar", "m0=2.5"])
    assert result.exit_code == 0
    bad = runner.invoke(main, ["check", str(path), "--scalar", "m0"])
    assert bad.exit_code == 2


# -- fit ----------------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_fit(tmp_path_factory):
    base = tmp_path_factory.mktemp("fit")
    model = base / "m.bug"
    model.write_text(
        "model { for (i in 1:n) { y[i] ~ dnorm(mu, 1) } mu ~ dnorm(0, 0.01) }"
    )
    data = base / "d.csv"
    rng = np.random.default_rng(55)
    rows = "\n".join(str(v) for v in 3.0 + rng.normal(size=30))
    data.write_text("y\n" + rows + "\n")
    return model, data


def test_fit_summary_and_prob(runner, tiny_fit):
    model, data = tiny_fit
    result = runner.invoke(
        main,
        ["fit", str(model), str(data), "--chains", "2", "--burnin", "300",
         "--iters", "600", "--seed", "4", "--prob", "mu>0"],
    )
    assert result.exit_code == 0
    assert "parameter" in result.output and "mu" in result.output
    assert "P(mu > 0) = 1.000000" in result.output


def test_fit_writes_outputs_deterministically(runner, tiny_fit, tmp_path):
    model, data = tiny_fit
    outs = []
    for tag in ("a", "b"):
        samples = tmp_path / f"samples_{tag}.csv"
        summary = tmp_path / f"summary_{tag}.csv"
        result = runner.invoke(
            main,
            ["fit", str(model), str(data), "--chains", "2", "--burnin", "200",
             "--iters", "400", "--seed", "8", "--samples-out", str(samples),
             "--summary-out", str(summary)],
        )
        assert result.exit_code == 0
        outs.append((samples.read_bytes(), summary.read_bytes(), result.output))
    assert outs[0] == outs[1]  # byte-identical reruns


def test_fit_semantic_error_exit_1(runner, tiny_fit, tmp_path):
    _, data = tiny_fit
    model = tmp_path / "bad.bug"
    model.write_text("model { for (i in 1:n) { y[i] ~ dnorm(zeta, 1) } }")
    result = runner.invoke(main, ["fit", str(model), str(data)])
    assert result.exit_code == 1


def test_fit_bad_prob_query_is_usage_error(runner, tiny_fit):
    model, data = tiny_fit
    result = runner.invoke(
        main,
        ["fit", str(model), str(data), "--chains", "2", "--burnin", "100",
         "--iters", "200", "--prob", "mu>=0"],
    )
    assert result.exit_code == 2


# -- generate-data ------------------------------------------------------


def test_generate_data(runner, fast_spec, tmp_path):
    out = tmp_path / "cohort.csv"
    result = runner.invoke(
        main, ["generate-data", str(fast_spec), "--stage", "1", "--seed", "3",
               "-o", str(out)]
    )
    assert result.exit_code == 0
    assert "wrote 40 rows" in result.output
    for name in ("Y:", "X:", "A:"):
        assert name in result.output
    header = out.read_text().splitlines()[0]
    assert header == "Y,X,A"


def test_generate_data_byte_identical(runner, fast_spec, tmp_path):
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / f"c_{tag}.csv"
        result = runner.invoke(
            main, ["generate-data", str(fast_spec), "--seed", "12", "-o", str(out)]
        )
        assert result.exit_code == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


def test_generate_data_stage_out_of_range(runner, fast_spec, tmp_path):
    result = runner.invoke(
        main, ["generate-data", str(fast_spec), "--stage", "5",
               "-o", str(tmp_path / "x.csv")]
    )
    assert result.exit_code == 1


def test_generate_data_missing_spec_exit_2(runner, tmp_path):
    result = runner.invoke(
        main, ["generate-data", str(tmp_path / "nope.json"),
               "-o", str(tmp_path / "x.csv")]
    )
    assert result.exit_code == 2


def test_generate_data_invalid_spec_exit_1(runner, tmp_path):
    spec = tmp_path / "bad.json"
    spec.write_text("{}")
    result = runner.invoke(
        main, ["generate-data", str(spec), "-o", str(tmp_path / "x.csv")]
    )
    assert result.exit_code == 1


# -- simulate -----------------------------------------------------------


def test_simulate_table_and_logs(runner, fast_spec, tmp_path):
    oc_csv = tmp_path / "oc.csv"
    log_csv = tmp_path / "log.csv"
    result = runner.invoke(
        main,
        ["simulate", str(fast_spec), "--replicates", "2", "--seed", "6",
         "--oc-mcmc-burnin", "150", "--oc-mcmc-iters", "300",
         "--out", str(oc_csv), "--replicate-log", str(log_csv)],
    )
    assert result.exit_code == 0
    for label in ("early_success", "early_futility", "final_success",
                  "final_failure", "expected_sample_size", "replicates"):
        assert label in result.output
    assert oc_csv.read_text().splitlines()[0] == "outcome,count,proportion,mc_se"
    log_lines = log_csv.read_text().splitlines()
    assert len(log_lines) == 3  # header + 2 replicates
    assert log_lines[0].startswith("replicate_index,outcome,")


def test_simulate_deterministic_output(runner, fast_spec):
    args = ["simulate", str(fast_spec), "--replicates", "2", "--seed", "7",
            "--oc-mcmc-burnin", "150", "--oc-mcmc-iters", "300"]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args)
    assert a.exit_code == 0 and a.output == b.output


def test_simulate_threads_env_default(runner, fast_spec, monkeypatch):
    monkeypatch.setenv("BACTA_THREADS", "2")
    result = runner.invoke(
        main,
        ["simulate", str(fast_spec), "--replicates", "2", "--seed", "7",
         "--oc-mcmc-burnin", "150", "--oc-mcmc-iters", "300"],
    )
    assert result.exit_code == 0


def test_simulate_invalid_spec_exit_1(runner, tmp_path):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"covariates": []}))
    result = runner.invoke(main, ["simulate", str(spec)])
    assert result.exit_code == 1
