"""Unrolls a parsed model against a dataset into a directed graphical model.

Two evaluation paths share one contract:

* a generic per-node path (closures over a name -> value environment,
  walked in topological order) used by eval_deterministic, prior
  initialization and posterior predictive regeneration;
* a vectorized block plan used for log-joint evaluation inside MCMC,
  built whenever the model is a list of top-level relations plus
  single-level loops indexed by their own loop variable. Models outside
  that shape (e.g. nested loops) fall back to the generic path.

Both paths agree to full recomputation value-equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import dists
from .dsl.ast import (
    BinaryOp,
    Deterministic,
    DistCall,
    ForLoop,
    FunctionCall,
    ModelAst,
    NumberLiteral,
    Stochastic,
    UnaryNeg,
    VarRef,
)
from .errors import CompileError, EvalError
from .rng import RandomStream


# -- dataset ------------------------------------------------------------


@dataclass
class Dataset:
    """Column-oriented data bound to a model at compile time.

    Missing entries are None; a stochastic node observed as missing
    becomes a parameter (imputed).
    """

    columns: dict[str, list[Optional[float]]] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    row_count: int = 0

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != self.row_count:
                raise ValueError(
                    f"column {name!r} has {len(col)} rows, expected {self.row_count}"
                )
        if "n" in self.scalars and self.scalars["n"] != self.row_count:
            raise ValueError(
                f"scalar n = {self.scalars['n']} does not match row count {self.row_count}"
            )

    @property
    def names(self) -> set[str]:
        names = set(self.columns) | set(self.scalars)
        if self.row_count or self.columns:
            names.add("n")
        return names

    def with_n(self) -> dict[str, float]:
        scalars = dict(self.scalars)
        scalars.setdefault("n", float(self.row_count))
        return scalars

    @classmethod
    def from_columns(cls, columns: dict[str, list], scalars: dict[str, float] | None = None):
        columns = {k: list(v) for k, v in columns.items()}
        row_count = len(next(iter(columns.values()))) if columns else 0
        return cls(columns=columns, scalars=dict(scalars or {}), row_count=row_count)


# -- nodes --------------------------------------------------------------


class NodeKind(Enum):
    STOCHASTIC_PARAM = "stochastic_param"
    STOCHASTIC_OBSERVED = "stochastic_observed"
    DETERMINISTIC = "deterministic"
    CONSTANT = "constant"


@dataclass
class GraphNode:
    id: int
    name: str
    kind: NodeKind
    dist_name: Optional[str] = None
    dist_arg_fns: Optional[tuple] = None  # closures env -> float
    expr_fn: Optional[Callable] = None  # closures env -> float
    observed_value: Optional[float] = None
    ref_names: tuple[str, ...] = ()  # instance names this node reads


@dataclass
class ParamMeta:
    """What the sampler needs to know about one parameter node."""

    name: str
    dist_name: str
    static_support: Optional[dists.SupportDescriptor]
    static_params: Optional[tuple[float, ...]]


class GraphModel:
    """Immutable after compile; share freely across threads."""

    def __init__(self, ast, data, nodes, parents, topo_order, name_to_id, fast_plan):
        self.ast = ast
        self.data = data
        self.nodes: list[GraphNode] = nodes
        self.parents: dict[int, tuple[int, ...]] = parents
        self.topo_order: list[int] = topo_order
        self.name_to_id: dict[str, int] = name_to_id
        self.parameter_ids = [
            n.id for n in nodes if n.kind is NodeKind.STOCHASTIC_PARAM
        ]
        self.observed_ids = [
            n.id for n in nodes if n.kind is NodeKind.STOCHASTIC_OBSERVED
        ]
        self._fast_plan = fast_plan
        # parameter order = topological, fixed per compile (sweep determinism)
        topo_rank = {nid: r for r, nid in enumerate(topo_order)}
        self.parameter_ids.sort(key=lambda nid: topo_rank[nid])
        self.param_names = [nodes[i].name for i in self.parameter_ids]
        self._constant_env = {
            n.name: n.observed_value
            for n in nodes
            if n.kind is NodeKind.CONSTANT
        }
        self._constant_env.update(data.with_n())
        self.param_meta = [self._meta_for(nodes[i]) for i in self.parameter_ids]
        # deterministic scalar nodes that can be monitored alongside parameters
        self.scalar_deterministic_names = [
            n.name
            for n in nodes
            if n.kind is NodeKind.DETERMINISTIC and "[" not in n.name
        ]

    def _meta_for(self, node: GraphNode) -> ParamMeta:
        static_params = None
        try:
            args = tuple(fn(self._constant_env) for fn in node.dist_arg_fns)
            dists.validate_params(node.dist_name, args)
            static_params = args
        except Exception:
            static_params = None
        if static_params is not None:
            sup = dists.support(dists.DistributionSpec(node.dist_name, static_params))
        else:
            sup = _family_support(node.dist_name)
        return ParamMeta(node.name, node.dist_name, sup, static_params)

    # -- evaluation -----------------------------------------------------

    def eval_deterministic(self, values: dict[str, float]) -> dict[str, float]:
        """Full node-value assignment given values for every parameter."""
        env = dict(self._constant_env)
        for node in (self.nodes[i] for i in self.topo_order):
            if node.kind is NodeKind.CONSTANT:
                continue
            if node.kind is NodeKind.STOCHASTIC_OBSERVED:
                env[node.name] = node.observed_value
            elif node.kind is NodeKind.STOCHASTIC_PARAM:
                env[node.name] = values[node.name]
            else:
                v = node.expr_fn(env)
                if v != v:
                    raise EvalError(f"non-finite value for {node.name}")
                env[node.name] = v
        return {n.name: env[n.name] for n in self.nodes}

    def log_joint(self, values: dict[str, float]) -> float:
        """Sum of log densities over all stochastic nodes; -inf outside support."""
        if self._fast_plan is not None:
            return self._fast_plan.log_joint(values)
        return self._log_joint_generic(values)

    def _log_joint_generic(self, values: dict[str, float]) -> float:
        env = dict(self._constant_env)
        total = 0.0
        for node in (self.nodes[i] for i in self.topo_order):
            if node.kind is NodeKind.CONSTANT:
                continue
            if node.kind is NodeKind.DETERMINISTIC:
                v = node.expr_fn(env)
                if v != v:
                    raise EvalError(f"non-finite value for {node.name}")
                env[node.name] = v
                continue
            x = (
                node.observed_value
                if node.kind is NodeKind.STOCHASTIC_OBSERVED
                else values[node.name]
            )
            env[node.name] = x
            args = tuple(fn(env) for fn in node.dist_arg_fns)
            try:
                dists.validate_params(node.dist_name, args)
            except Exception:
                return float("-inf")
            lp = float(dists.logpdf_vec(node.dist_name, x, *args))
            if lp != lp:
                raise EvalError(f"non-finite log density at {node.name}")
            total += lp
            if total == float("-inf"):
                return total
        return total

    def sample_observed(self, values: dict[str, float], rng: RandomStream) -> dict[str, float]:
        """Regenerate every observed node from its distribution (PPC)."""
        env = dict(self._constant_env)
        out = {}
        for node in (self.nodes[i] for i in self.topo_order):
            if node.kind is NodeKind.CONSTANT:
                continue
            if node.kind is NodeKind.DETERMINISTIC:
                env[node.name] = node.expr_fn(env)
            elif node.kind is NodeKind.STOCHASTIC_PARAM:
                env[node.name] = values[node.name]
            else:
                args = tuple(fn(env) for fn in node.dist_arg_fns)
                draw = dists.sample(dists.DistributionSpec(node.dist_name, args), rng)
                env[node.name] = draw
                out[node.name] = draw
        return out

    def observed_vector(self) -> np.ndarray:
        return np.array(
            [self.nodes[i].observed_value for i in self.observed_ids], dtype=float
        )


def _family_support(dist_name: str) -> dists.SupportDescriptor:
    # fallback when distribution arguments depend on other parameters
    return {
        "dnorm": dists.SupportDescriptor("real_line"),
        "dunif": dists.SupportDescriptor("real_line"),
        "dgamma": dists.SupportDescriptor("positive", 0.0),
        "dexp": dists.SupportDescriptor("positive", 0.0),
        "dbeta": dists.SupportDescriptor("interval", 0.0, 1.0),
        "dbern": dists.SupportDescriptor("binary", 0.0, 1.0),
        "dbin": dists.SupportDescriptor("nonneg_integers", 0.0),
        "dpois": dists.SupportDescriptor("nonneg_integers", 0.0),
    }[dist_name]


# -- scalar expression compilation --------------------------------------


def _instance_name(name: str, index: Optional[int]) -> str:
    return name if index is None else f"{name}[{index}]"


def _resolve_index(expr, index_env: dict[str, int]) -> int:
    """Indices are restricted to the loop variable or integer literals."""
    if isinstance(expr, NumberLiteral):
        if expr.value != int(expr.value):
            raise CompileError(f"non-integer index {expr.value}")
        return int(expr.value)
    if isinstance(expr, VarRef) and expr.index is None and expr.name in index_env:
        return index_env[expr.name]
    raise CompileError(
        "index expressions are limited to the loop variable or integer literals"
    )


def compile_scalar_expr(expr, index_env: dict[str, int], refs: set[str]):
    """Compile to a closure over a name -> float environment.

    refs collects the instance names the expression reads.
    """
    if isinstance(expr, NumberLiteral):
        v = expr.value
        return lambda env: v
    if isinstance(expr, VarRef):
        if expr.index is None and expr.name in index_env:
            v = float(index_env[expr.name])
            return lambda env: v
        idx = None if expr.index is None else _resolve_index(expr.index, index_env)
        key = _instance_name(expr.name, idx)
        refs.add(key)
        return lambda env: env[key]
    if isinstance(expr, UnaryNeg):
        inner = compile_scalar_expr(expr.operand, index_env, refs)
        return lambda env: -inner(env)
    if isinstance(expr, BinaryOp):
        left = compile_scalar_expr(expr.left, index_env, refs)
        right = compile_scalar_expr(expr.right, index_env, refs)
        op = expr.op
        if op == "add":
            return lambda env: left(env) + right(env)
        if op == "sub":
            return lambda env: left(env) - right(env)
        if op == "mul":
            return lambda env: left(env) * right(env)
        if op == "div":
            return lambda env: _ieee_div(left(env), right(env))
        if op == "pow":
            return lambda env: dists.apply_builtin("pow", [left(env), right(env)])
        raise CompileError(f"unknown operator {op}")
    if isinstance(expr, FunctionCall):
        arg_fns = [compile_scalar_expr(a, index_env, refs) for a in expr.args]
        name = expr.name
        return lambda env: dists.apply_builtin(name, [f(env) for f in arg_fns])
    raise CompileError(f"cannot compile expression {expr!r}")


def _ieee_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a > 0:
            return math.inf
        if a < 0:
            return -math.inf
        return math.nan


# -- vectorized expression compilation ----------------------------------


def compile_vector_expr(expr, loop_var: str, length: int, refs: set[str]):
    """Compile to a closure over a name -> (scalar | array) environment.

    Column references indexed by the loop variable evaluate to whole
    columns; the loop variable itself evaluates to 1..length.
    """
    if isinstance(expr, NumberLiteral):
        v = expr.value
        return lambda env: v
    if isinstance(expr, VarRef):
        if expr.index is None:
            if expr.name == loop_var:
                arange = np.arange(1, length + 1, dtype=float)
                return lambda env: arange
            key = expr.name
            refs.add(key)
            return lambda env: env[key]
        if (
            isinstance(expr.index, VarRef)
            and expr.index.index is None
            and expr.index.name == loop_var
        ):
            key = expr.name
            refs.add(key)
            return lambda env: env[key]
        if isinstance(expr.index, NumberLiteral):
            idx = int(expr.index.value) - 1
            key = expr.name
            refs.add(key)
            return lambda env: env[key][idx]
        raise CompileError("unsupported index expression in vector block")
    if isinstance(expr, UnaryNeg):
        inner = compile_vector_expr(expr.operand, loop_var, length, refs)
        return lambda env: -inner(env)
    if isinstance(expr, BinaryOp):
        left = compile_vector_expr(expr.left, loop_var, length, refs)
        right = compile_vector_expr(expr.right, loop_var, length, refs)
        op = expr.op
        if op == "add":
            return lambda env: left(env) + right(env)
        if op == "sub":
            return lambda env: left(env) - right(env)
        if op == "mul":
            return lambda env: left(env) * right(env)
        if op == "div":
            return lambda env: np.divide(left(env), right(env))
        if op == "pow":
            return lambda env: np.power(left(env), right(env))
        raise CompileError(f"unknown operator {op}")
    if isinstance(expr, FunctionCall):
        fn = dists.VEC_BUILTINS.get(expr.name)
        if fn is None:
            raise CompileError(f"unknown builtin {expr.name}")
        arg_fns = [compile_vector_expr(a, loop_var, length, refs) for a in expr.args]
        return lambda env: fn(*[f(env) for f in arg_fns])
    raise CompileError(f"cannot compile expression {expr!r}")


# -- fast block plan ----------------------------------------------------


@dataclass
class _Block:
    kind: str  # scalar_det | scalar_stoch | vector_det | vector_stoch
    name: str
    fn: Optional[Callable] = None
    dist_name: Optional[str] = None
    arg_fns: Optional[tuple] = None
    observed: bool = False
    obs_values: Optional[np.ndarray] = None  # nan where imputed
    missing: tuple = ()  # (row, param_name) pairs for imputed entries
    all_param: bool = False
    param_names: tuple = ()  # per-row names when the whole column is latent
    reads: frozenset = frozenset()


class _FastPlan:
    """Topologically ordered blocks evaluated with numpy columns."""

    def __init__(self, blocks, base_env):
        self.blocks = blocks
        self.base_env = base_env

    def log_joint(self, values: dict[str, float]) -> float:
        env = dict(self.base_env)
        total = 0.0
        for block in self.blocks:
            if block.kind == "scalar_det":
                env[block.name] = block.fn(env)
            elif block.kind == "scalar_stoch":
                x = block.obs_values if block.observed else values[block.name]
                env[block.name] = x
                args = [fn(env) for fn in block.arg_fns]
                total += float(dists.logpdf_vec(block.dist_name, x, *args))
            elif block.kind == "vector_det":
                env[block.name] = block.fn(env)
            else:  # vector_stoch
                if block.all_param:
                    x = np.array([values[p] for p in block.param_names])
                elif block.missing:
                    x = block.obs_values.copy()
                    for row, pname in block.missing:
                        x[row] = values[pname]
                else:
                    x = block.obs_values
                env[block.name] = x
                args = [fn(env) for fn in block.arg_fns]
                total += float(np.sum(dists.logpdf_vec(block.dist_name, x, *args)))
        if total != total:
            raise EvalError("non-finite log joint evaluation")
        return total


# -- compiler -----------------------------------------------------------


def _const_eval(expr, scalars: dict[str, float]) -> float:
    refs: set[str] = set()
    fn = compile_scalar_expr(expr, {}, refs)
    env = dict(scalars)
    if not refs <= set(env):
        raise CompileError(
            f"loop bound references non-data names {sorted(refs - set(env))}"
        )
    return fn(env)


def compile_model(ast: ModelAst, data: Dataset) -> GraphModel:
    """Unroll the model against data; classify, wire and order the nodes."""
    scalars = data.with_n()
    nodes: list[GraphNode] = []
    name_to_id: dict[str, int] = {}

    def new_node(name, kind, **kw) -> GraphNode:
        if name in name_to_id:
            existing = nodes[name_to_id[name]]
            if existing.kind is not NodeKind.CONSTANT or kind is not NodeKind.CONSTANT:
                raise CompileError(f"{name} defined more than once")
            return existing
        node = GraphNode(id=len(nodes), name=name, kind=kind, **kw)
        nodes.append(node)
        name_to_id[name] = node.id
        return node

    def data_value(name: str, index: Optional[int]):
        if index is None:
            if name in scalars:
                return scalars[name]
            return None
        col = data.columns.get(name)
        if col is None:
            return None
        if not 1 <= index <= data.row_count:
            raise CompileError(
                f"index {index} out of 1..{data.row_count} for column {name}"
            )
        return col[index - 1]

    def unroll(items, index_env):
        for item in items:
            if isinstance(item, ForLoop):
                lo = _const_eval(item.lower, scalars)
                hi = _const_eval(item.upper, scalars)
                if lo != int(lo) or hi != int(hi) or int(hi) < 0 or int(lo) < 1:
                    raise CompileError(
                        f"loop bounds {lo}:{hi} do not resolve to positive integers"
                    )
                for i in range(int(lo), int(hi) + 1):
                    unroll(item.body, {**index_env, item.index_var: i})
                continue
            target = item.target
            idx = (
                None
                if target.index is None
                else _resolve_index(target.index, index_env)
            )
            name = _instance_name(target.name, idx)
            if isinstance(item, Deterministic):
                if target.name in data.columns or target.name in scalars:
                    raise CompileError(
                        f"deterministic target {target.name} is bound in data"
                    )
                refs: set[str] = set()
                fn = compile_scalar_expr(item.expr, index_env, refs)
                new_node(
                    name,
                    NodeKind.DETERMINISTIC,
                    expr_fn=fn,
                    ref_names=tuple(sorted(refs)),
                )
            else:
                refs = set()
                arg_fns = tuple(
                    compile_scalar_expr(a, index_env, refs) for a in item.dist.args
                )
                value = data_value(target.name, idx)
                kind = (
                    NodeKind.STOCHASTIC_OBSERVED
                    if value is not None
                    else NodeKind.STOCHASTIC_PARAM
                )
                new_node(
                    name,
                    kind,
                    dist_name=item.dist.name,
                    dist_arg_fns=arg_fns,
                    observed_value=value,
                    ref_names=tuple(sorted(refs)),
                )

    unroll(ast.items, {})

    # resolve references: defined nodes first, then data constants
    def resolve(name: str) -> int:
        if name in name_to_id:
            return name_to_id[name]
        base, idx = _split_instance(name)
        value = data_value(base, idx)
        if value is None:
            raise CompileError(f"undefined reference {name}")
        return new_node(name, NodeKind.CONSTANT, observed_value=float(value)).id

    parents: dict[int, tuple[int, ...]] = {}
    for node in list(nodes):
        parents[node.id] = tuple(resolve(r) for r in node.ref_names)
    for node in nodes:
        parents.setdefault(node.id, ())

    topo_order = _topo_sort(nodes, parents)
    fast_plan = _try_fast_plan(ast, data, scalars, nodes, name_to_id)
    return GraphModel(ast, data, nodes, parents, topo_order, name_to_id, fast_plan)


def _split_instance(name: str):
    if name.endswith("]"):
        base, _, rest = name.partition("[")
        return base, int(rest[:-1])
    return name, None


def _topo_sort(nodes, parents) -> list[int]:
    children: dict[int, list[int]] = {n.id: [] for n in nodes}
    indeg = {n.id: 0 for n in nodes}
    for nid, ps in parents.items():
        for p in ps:
            children[p].append(nid)
            indeg[nid] += 1
    ready = sorted(nid for nid, d in indeg.items() if d == 0)
    order = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        fresh = []
        for c in children[nid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                fresh.append(c)
        ready.extend(sorted(fresh))
    if len(order) != len(nodes):
        cyclic = sorted(nodes[nid].name for nid, d in indeg.items() if d > 0)
        raise CompileError(f"directed cycle involving {', '.join(cyclic[:5])}")
    return order


# -- fast-plan construction ---------------------------------------------


def _try_fast_plan(ast, data, scalars, nodes, name_to_id):
    try:
        return _build_fast_plan(ast, data, scalars, nodes, name_to_id)
    except _NoFastPlan:
        return None


class _NoFastPlan(Exception):
    pass


def _build_fast_plan(ast, data, scalars, nodes, name_to_id):
    blocks: list[_Block] = []
    for item in ast.items:
        if isinstance(item, ForLoop):
            lo = _const_eval(item.lower, scalars)
            hi = _const_eval(item.upper, scalars)
            if lo != 1:
                raise _NoFastPlan
            length = int(hi)
            for rel in item.body:
                if isinstance(rel, ForLoop):
                    raise _NoFastPlan
                blocks.append(
                    _vector_block(rel, item.index_var, length, data, name_to_id, nodes)
                )
        else:
            blocks.append(_scalar_block(item, nodes, name_to_id))

    base_env: dict[str, object] = dict(scalars)
    for cname, col in data.columns.items():
        base_env[cname] = np.array(
            [np.nan if v is None else float(v) for v in col], dtype=float
        )
    # indexed reads (e.g. X[3]) from top-level relations resolve to data
    # scalars; anything else is outside the vectorizable shape
    produced = {b.name for b in blocks}
    for block in blocks:
        for key in block.reads:
            if "[" in key and key not in produced:
                base, idx = _split_instance(key)
                col = data.columns.get(base)
                if col is None or not 1 <= idx <= len(col) or col[idx - 1] is None:
                    raise _NoFastPlan
                base_env[key] = float(col[idx - 1])
    ordered = _order_blocks(blocks, set(base_env) - produced)
    return _FastPlan(ordered, base_env)


def _scalar_block(rel, nodes, name_to_id) -> _Block:
    name = rel.target.name
    if rel.target.index is not None:
        raise _NoFastPlan
    refs: set[str] = set()
    if isinstance(rel, Deterministic):
        fn = compile_scalar_expr(rel.expr, {}, refs)
        return _Block(kind="scalar_det", name=name, fn=fn, reads=frozenset(refs))
    arg_fns = tuple(compile_scalar_expr(a, {}, refs) for a in rel.dist.args)
    node = nodes[name_to_id[name]]
    observed = node.kind is NodeKind.STOCHASTIC_OBSERVED
    return _Block(
        kind="scalar_stoch",
        name=name,
        dist_name=rel.dist.name,
        arg_fns=arg_fns,
        observed=observed,
        obs_values=node.observed_value if observed else None,
        reads=frozenset(refs),
    )


def _vector_block(rel, loop_var, length, data, name_to_id, nodes) -> _Block:
    target = rel.target
    if (
        target.index is None
        or not isinstance(target.index, VarRef)
        or target.index.name != loop_var
        or target.index.index is not None
    ):
        raise _NoFastPlan
    name = target.name
    refs: set[str] = set()
    if isinstance(rel, Deterministic):
        fn = compile_vector_expr(rel.expr, loop_var, length, refs)
        return _Block(kind="vector_det", name=name, fn=fn, reads=frozenset(refs))
    arg_fns = tuple(
        compile_vector_expr(a, loop_var, length, refs) for a in rel.dist.args
    )
    if name in data.columns:
        col = data.columns[name]
        obs = np.array([np.nan if v is None else float(v) for v in col], dtype=float)
        missing = tuple(
            (i, f"{name}[{i + 1}]") for i, v in enumerate(col) if v is None
        )
        return _Block(
            kind="vector_stoch",
            name=name,
            dist_name=rel.dist.name,
            arg_fns=arg_fns,
            observed=True,
            obs_values=obs,
            missing=missing,
            reads=frozenset(refs),
        )
    param_names = tuple(f"{name}[{i}]" for i in range(1, length + 1))
    return _Block(
        kind="vector_stoch",
        name=name,
        dist_name=rel.dist.name,
        arg_fns=arg_fns,
        all_param=True,
        param_names=param_names,
        reads=frozenset(refs),
    )


def _order_blocks(blocks, given: set[str]) -> list[_Block]:
    """Dependency-order blocks at column granularity (declarative source
    order is not evaluation order in this language)."""
    produced = {b.name: b for b in blocks}
    ordered: list[_Block] = []
    done = set(given)
    pending = list(blocks)
    while pending:
        progressed = False
        remaining = []
        for block in pending:
            deps = {r for r in block.reads if r in produced and r not in done}
            if not deps:
                ordered.append(block)
                done.add(block.name)
                progressed = True
            else:
                remaining.append(block)
        if not progressed:
            raise _NoFastPlan  # block-level cycle; generic path decides
        pending = remaining
    return ordered


# backwards-friendly aliases matching the operation names
compile = compile_model


def eval_deterministic(graph: GraphModel, values: dict[str, float]) -> dict[str, float]:
    return graph.eval_deterministic(values)


def log_joint(graph: GraphModel, values: dict[str, float]) -> float:
    return graph.log_joint(values)
