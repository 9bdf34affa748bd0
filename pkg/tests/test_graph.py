import math

import numpy as np
import pytest

from bacta.dsl import parse_model
from bacta.errors import CompileError
from bacta.graph import Dataset, NodeKind, compile_model


def _appendix_dataset(n=200, seed=7):
    rng = np.random.default_rng(seed)
    x = [0.0] * (n // 2) + [1.0] * (n - n // 2)
    a = np.clip(rng.normal(8.0, 4.0, size=n), 3.0, None).tolist()
    y = (10.0 + 6.0 * np.array(x) + 1.1 ** np.array(a)).tolist()
    return Dataset.from_columns({"Y": y, "X": x, "A": a})


def test_appendix_node_counts(appendix_model_source):
    ast = parse_model(appendix_model_source)
    graph = compile_model(ast, _appendix_dataset())
    counts = {}
    for node in graph.nodes:
        counts[node.kind] = counts.get(node.kind, 0) + 1
    assert counts[NodeKind.STOCHASTIC_PARAM] == 4
    assert counts[NodeKind.STOCHASTIC_OBSERVED] == 200
    assert counts[NodeKind.DETERMINISTIC] == 201  # mu[1..200] + sigma2
    assert counts[NodeKind.CONSTANT] == 400  # X and A columns
    assert graph.param_names == ["beta0", "beta1", "alpha", "tau"]


def test_eval_deterministic_values(appendix_model_source):
    ast = parse_model(appendix_model_source)
    data = _appendix_dataset(n=4)
    graph = compile_model(ast, data)
    values = {"beta0": 2.0, "beta1": 3.0, "alpha": 1.1, "tau": 0.0025}
    out = graph.eval_deterministic(values)
    # [DERIVED] sigma2 = 1 / tau = 1 / 0.0025
    assert out["sigma2"] == pytest.approx(400.0)
    for i in range(1, 5):
        x = data.columns["X"][i - 1]
        a = data.columns["A"][i - 1]
        assert out[f"mu[{i}]"] == pytest.approx(2.0 + 3.0 * x + 1.1**a)


def test_log_joint_standard_normal_oracle():
    # [DERIVED] log N(0 | 0, 1) = -0.5 * log(2*pi)
    ast = parse_model("model { y ~ dnorm(0, 1) }")
    graph = compile_model(ast, Dataset.from_columns({}, {"y": 0.0}))
    assert graph.log_joint({}) == pytest.approx(-0.5 * math.log(2 * math.pi))


def test_log_joint_sums_over_nodes():
    ast = parse_model("model { for (i in 1:n) { y[i] ~ dnorm(m, 1) } m ~ dnorm(0, 1) }")
    graph = compile_model(ast, Dataset.from_columns({"y": [1.0, -1.0, 0.5]}))
    m = 0.25
    # [DERIVED] sum of normal log densities plus the prior term
    expected = sum(
        -0.5 * math.log(2 * math.pi) - 0.5 * (v - m) ** 2 for v in (1.0, -1.0, 0.5)
    ) + (-0.5 * math.log(2 * math.pi) - 0.5 * m**2)
    assert graph.log_joint({"m": m}) == pytest.approx(expected, abs=1e-12)


def test_out_of_support_gives_neg_inf():
    ast = parse_model("model { p ~ dunif(0, 1) }")
    graph = compile_model(ast, Dataset())
    assert graph.log_joint({"p": 1.5}) == float("-inf")
    assert graph.log_joint({"p": 0.5}) == pytest.approx(0.0)


def test_invalid_dependent_params_give_neg_inf():
    ast = parse_model(
        "model { tau <- 1 / sigma2 \n sigma2 ~ dunif(0, 10) \n y ~ dnorm(0, tau) }"
    )
    graph = compile_model(ast, Dataset.from_columns({}, {"y": 1.0}))
    assert graph.log_joint({"sigma2": -2.0}) == float("-inf")


def test_missing_data_becomes_parameter():
    ast = parse_model("model { for (i in 1:n) { y[i] ~ dnorm(0, 1) } }")
    graph = compile_model(ast, Dataset.from_columns({"y": [1.0, None, 2.0]}))
    assert graph.param_names == ["y[2]"]
    kinds = {n.name: n.kind for n in graph.nodes}
    assert kinds["y[1]"] is NodeKind.STOCHASTIC_OBSERVED
    assert kinds["y[2]"] is NodeKind.STOCHASTIC_PARAM
    # imputed entry participates in the likelihood
    lp0 = graph.log_joint({"y[2]": 0.0})
    lp3 = graph.log_joint({"y[2]": 3.0})
    assert lp0 - lp3 == pytest.approx(4.5)  # [DERIVED] 0.5*(3^2 - 0)


def test_cycle_detection():
    ast = parse_model("model { a <- b + 1 \n b <- a + 1 }")
    with pytest.raises(CompileError, match="cycle"):
        compile_model(ast, Dataset())


def test_duplicate_definition_rejected():
    ast = parse_model("model { a ~ dnorm(0, 1) \n a <- 2 }")
    with pytest.raises(CompileError, match="more than once"):
        compile_model(ast, Dataset())


def test_undefined_reference_rejected():
    ast = parse_model("model { a <- q + 1 }")
    with pytest.raises(CompileError, match="undefined"):
        compile_model(ast, Dataset())


def test_index_out_of_range():
    ast = parse_model("model { a <- y[5] }")
    with pytest.raises(CompileError, match="out of"):
        compile_model(ast, Dataset.from_columns({"y": [1.0, 2.0]}))


def test_declaration_order_is_not_evaluation_order():
    # tau is defined before sigma2 exists, as in the three-coefficient model
    ast = parse_model(
        "model { tau <- 1 / sigma2 \n sigma2 ~ dunif(0, 10) \n y ~ dnorm(0, tau) }"
    )
    graph = compile_model(ast, Dataset.from_columns({}, {"y": 0.0}))
    out = graph.eval_deterministic({"sigma2": 4.0})
    assert out["tau"] == pytest.approx(0.25)


def test_fast_and_generic_paths_agree(appendix_model_source):
    ast = parse_model(appendix_model_source)
    graph = compile_model(ast, _appendix_dataset(n=50))
    assert graph._fast_plan is not None
    values = {"beta0": 9.0, "beta1": 5.5, "alpha": 1.05, "tau": 0.003}
    fast = graph._fast_plan.log_joint(values)
    generic = graph._log_joint_generic(values)
    assert fast == pytest.approx(generic, rel=1e-12)


def test_log_joint_bit_determinism(appendix_model_source):
    ast = parse_model(appendix_model_source)
    data = _appendix_dataset(n=80)
    values = {"beta0": 9.0, "beta1": 5.5, "alpha": 1.05, "tau": 0.003}
    a = compile_model(ast, data).log_joint(values)
    b = compile_model(parse_model(appendix_model_source), data).log_joint(values)
    assert a == b and repr(a) == repr(b)


def test_dataset_row_count_mismatch():
    with pytest.raises(ValueError):
        Dataset(columns={"y": [1.0, 2.0]}, row_count=3)


def test_dataset_n_scalar_consistency():
    with pytest.raises(ValueError):
        Dataset(columns={"y": [1.0]}, scalars={"n": 5.0}, row_count=1)
