from bacta.dsl import Severity, check_semantics, parse_model

DATA = {"Y", "X", "A", "n"}


def test_appendix_model_clean(appendix_model_source):
    ast = parse_model(appendix_model_source)
    assert check_semantics(ast, DATA) == []


def test_undefined_variable():
    ast = parse_model("model { for (i in 1:n) { Y[i] ~ dnorm(Z[i], 1) } }")
    diags = check_semantics(ast, DATA)
    assert len(diags) == 1
    assert diags[0].severity is Severity.ERROR
    assert "undefined variable Z" in diags[0].message
    assert diags[0].span is not None


def test_loop_index_is_defined():
    ast = parse_model("model { for (i in 1:n) { m[i] <- i } }")
    assert check_semantics(ast, DATA) == []


def test_unknown_distribution():
    ast = parse_model("model { x ~ dwish(1, 2) }")
    diags = check_semantics(ast, set())
    assert any("unknown distribution dwish" in d.message for d in diags)


def test_wrong_arity():
    ast = parse_model("model { x ~ dnorm(0) }")
    diags = check_semantics(ast, set())
    assert any("dnorm requires 2" in d.message for d in diags)


def test_unknown_function():
    ast = parse_model("model { x <- foo(1) }")
    diags = check_semantics(ast, set())
    assert any("unknown function foo" in d.message for d in diags)


def test_builtin_arity():
    ast = parse_model("model { x <- log(1, 2) }")
    diags = check_semantics(ast, set())
    assert any("log requires 1" in d.message for d in diags)


def test_relation_targets_count_as_defined():
    ast = parse_model("model { a ~ dnorm(0, 1) \n b <- a + 1 }")
    assert check_semantics(ast, set()) == []


def test_multiple_diagnostics_accumulate():
    ast = parse_model("model { x ~ dfoo(q) }")
    diags = check_semantics(ast, set())
    assert len(diags) == 2  # unknown dist + undefined q
