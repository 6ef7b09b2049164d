"""
ランダムなインスタンスでの全列挙・動的計画法との突き合わせ

- 部分和問題の帰着と動的計画法
- パレート近似と全列挙のパレートフロント (ε 近似になっていること)
- 分枝限定法と二値変数の全列挙
- MEC 分解・値 0 の状態集合・訪問回数の上界と、定義からの直接計算
"""
import itertools
from dataclasses import replace
from fractions import Fraction
from typing import Optional, Set

import networkx as nx
import numpy as np
import pytest

from src.analysis.end_components import compute_mecs
from src.analysis.state_sets import compute_zero_states
from src.core.mdp import Mdp
from src.core.objectives import Objective
from src.core.strategy import PureStationaryStrategy, induce_chain
from src.encodings.achievability import psma_check
from src.encodings.flow_encoding import common_zero_states, flow_visit_bounds
from src.evaluation.brute_force import brute_force_pareto, enumerate_value_vectors
from src.evaluation.exact_evaluator import evaluate_strategy
from src.instances.random_models import RandomMdpParams, random_mdp, random_total_reward_mdp
from src.instances.subset_sum import SubsetSumInstance, gen_subset_sum, subset_sum_exists
from src.milp.branch_and_bound import lp_relax, solve
from src.milp.model import MilpModel, Sense, SolveStatus
from src.pareto.pareto_approximator import COMPLETE, approximate_pareto, to_gain

pytestmark = pytest.mark.integration


def all_strategies(m: Mdp):
    for choices in itertools.product(*(range(len(labels)) for labels in m.actions)):
        yield PureStationaryStrategy(tuple(choices))


# ---------------------------------------------------------------- 部分和


def random_subset_sum(seed: int, max_items: int = 10) -> SubsetSumInstance:
    """偶数のシードは部分集合の和、奇数のシードは一様な目標値"""
    rng = np.random.default_rng(seed)
    weights = tuple(int(a) for a in rng.integers(1, 21, size=int(rng.integers(1, max_items + 1))))
    if seed % 2 == 0:
        target = sum(a for a in weights if rng.random() < 0.5)
    else:
        target = int(rng.integers(0, sum(weights) + 1))
    return SubsetSumInstance(weights, target)


def check_subset_sum(seed: int, solver_options, max_items: int = 10) -> None:
    inst = random_subset_sum(seed, max_items)
    m, q, point = gen_subset_sum(inst)
    result = psma_check(m, q, point, options=solver_options)
    assert result.achievable is subset_sum_exists(inst.weights, inst.target), inst
    if result.achievable:
        assert result.values == point


@pytest.mark.parametrize("seed", range(10))
def test_small_subset_sums(seed, solver_options):
    check_subset_sum(seed, solver_options, max_items=5)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100, 200))
def test_subset_sums(seed, solver_options):
    """重み 20 以下、要素数 10 以下の 100 インスタンス"""
    check_subset_sum(seed, solver_options)


# ---------------------------------------------------------------- パレート近似


def check_eps_cover(seed: int, solver_options) -> None:
    params = RandomMdpParams(num_states=2 + seed % 5, max_actions=3, num_objectives=2, finite_rewards=True)
    m, q = random_mdp(seed, params)
    approx = approximate_pareto(m, q, eps=0.05, options=solver_options)
    assert approx.status == COMPLETE

    achievable = {values for _, values in enumerate_value_vectors(m, q)}
    assert set(approx.points()) <= achievable, seed

    found = [f.gain for f in approx.pareto_points()]
    margin = Fraction(1, 10**6)
    for values in brute_force_pareto(m, q):
        gain = to_gain(q, values)
        if gain is None:
            continue
        assert any(
            all(f[j] >= gain[j] - approx.eps[j] - margin for j in range(q.dimension)) for f in found
        ), (seed, values)


@pytest.mark.parametrize("seed", range(5))
def test_small_pareto_approximations(seed, solver_options):
    check_eps_cover(seed, solver_options)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5, 60))
def test_pareto_approximations(seed, solver_options):
    """最大6状態の 55 モデルで ε = 0.05·δ の近似になっている"""
    check_eps_cover(seed, solver_options)


# ---------------------------------------------------------------- MILP


def random_milp(seed: int, max_binaries: int = 12) -> MilpModel:
    """
    二値変数 max_binaries 個以下、連続変数 20 個以下のランダムな MILP

    10 の倍数以外のシードでは、無作為に選んだ点が実行可能になるよう右辺を決める。
    """
    rng = np.random.default_rng(seed)
    model = MilpModel(f"random_{seed}")
    binaries = [model.add_binary(f"b{i}") for i in range(int(rng.integers(1, max_binaries + 1)))]
    uppers = [int(rng.integers(1, 11)) for _ in range(int(rng.integers(0, 21)))]
    continuous = [model.add_continuous(f"x{i}", 0, u) for i, u in enumerate(uppers)]
    variables = binaries + continuous

    reference = {b: Fraction(int(rng.integers(0, 2))) for b in binaries}
    reference.update({x: Fraction(int(rng.integers(0, 2 * u + 1)), 2) for x, u in zip(continuous, uppers)})
    planted = seed % 10 != 0

    for k in range(int(rng.integers(1, 9))):
        support = [v for v in variables if rng.random() < 0.5] or [binaries[0]]
        coeffs = {v: int(rng.integers(-5, 6)) for v in support}
        sense = Sense.EQ if rng.random() < 0.15 else (Sense.LE if rng.random() < 0.5 else Sense.GE)
        if planted:
            lhs = sum((c * reference[v] for v, c in coeffs.items()), Fraction(0))
            slack = int(rng.integers(0, 4))
            rhs = {Sense.LE: lhs + slack, Sense.GE: lhs - slack, Sense.EQ: lhs}[sense]
        else:
            rhs = int(rng.integers(-10, 11))
        model.add_constraint(coeffs, sense, rhs, f"row{k}")
    model.set_objective({v: int(rng.integers(-5, 6)) for v in variables})
    return model


def optimum_by_enumeration(model: MilpModel, solver_options) -> Optional[float]:
    """二値変数の全ての割当について連続変数の LP を解いた最大値 (実行不能なら None)"""
    binaries = model.binary_indices()
    best: Optional[float] = None
    for bits in itertools.product((0, 1), repeat=len(binaries)):
        fixed = model.copy()
        for var, bit in zip(binaries, bits):
            fixed.add_constraint({var: 1}, Sense.EQ, bit, f"fix_{var}")
        relaxed = lp_relax(fixed, solver_options)
        if relaxed.is_feasible and (best is None or relaxed.objective > best):
            best = relaxed.objective
    return best


def check_milp(seed: int, solver_options, max_binaries: int = 12) -> None:
    model = random_milp(seed, max_binaries)
    expected = optimum_by_enumeration(model, solver_options)
    solution = solve(model, solver_options)
    if expected is None:
        assert solution.status is SolveStatus.INFEASIBLE, seed
        return
    assert solution.status is SolveStatus.OPTIMAL, seed
    assert abs(solution.objective - expected) <= 1e-6 * (1 + abs(expected)), (seed, solution.objective, expected)
    for var in model.binary_indices():
        assert min(solution.values[var], 1 - solution.values[var]) <= solver_options.integrality_tol
    assert solution.max_violation <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_small_milps(seed, solver_options):
    check_milp(seed, solver_options, max_binaries=5)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20, 220))
def test_milps_match_enumeration(seed, solver_options):
    """二値変数 12 個以下、連続変数 20 個以下の 200 モデル"""
    check_milp(seed, solver_options)


# ---------------------------------------------------------------- グラフ解析


def mecs_by_enumeration(m: Mdp) -> Set[frozenset]:
    """状態集合ごとに閉じた行動だけを残し、強連結なものの中で包含について極大なもの"""
    ends = []
    for size in range(1, m.num_states + 1):
        for states in itertools.combinations(range(m.num_states), size):
            inside = set(states)
            pairs = frozenset(
                (s, a)
                for s in inside
                for a in range(len(m.actions[s]))
                if all(t in inside for t, _ in m.transitions[s][a])
            )
            if {s for s, _ in pairs} != inside:
                continue
            g = nx.DiGraph()
            g.add_nodes_from(inside)
            g.add_edges_from((s, t) for s, a in pairs for t, _ in m.transitions[s][a])
            if nx.is_strongly_connected(g):
                ends.append((frozenset(inside), pairs))
    return {pairs for inside, pairs in ends if not any(inside < other for other, _ in ends)}


def zero_by_enumeration(m: Mdp, obj: Objective) -> Set[int]:
    """全ての純粋定常戦略で値が 0 になる状態"""
    return {
        s
        for s in range(m.num_states)
        if all(evaluate_strategy(replace(m, initial=s), sigma, obj) == 0 for sigma in all_strategies(m))
    }


def maybe_by_search(m: Mdp, zero: Set[int]) -> Set[int]:
    """値 0 の状態を除いたグラフで初期状態から到達できる状態"""
    if m.initial in zero:
        return set()
    nonzero = m.graph().subgraph(s for s in range(m.num_states) if s not in zero)
    return {m.initial} | nx.descendants(nonzero, m.initial)


def expected_visits(m: Mdp, sigma: PureStationaryStrategy, zero: Set[int]) -> Optional[np.ndarray]:
    """zero を吸収的とみなした期待訪問回数 (zero に確率1で到達しない場合は None)"""
    induced = induce_chain(m, sigma)
    chain = induced.chain
    transient = [i for i, s in enumerate(induced.state_map) if s not in zero]
    if chain.initial not in transient:
        return None
    g = chain.graph()
    exits = {i for i, s in enumerate(induced.state_map) if s in zero}
    leaving = set(exits)
    for i in exits:
        leaving |= nx.ancestors(g, i)
    if not set(transient) <= leaving:
        return None
    index = {i: k for k, i in enumerate(transient)}
    p = np.zeros((len(transient), len(transient)))
    for i in transient:
        for t, prob in chain.transitions[i][0]:
            if t in index:
                p[index[i], index[t]] += float(prob)
    start = np.zeros(len(transient))
    start[index[chain.initial]] = 1.0
    visits = np.linalg.solve(np.eye(len(transient)) - p.T, start)
    result = np.zeros(m.num_states)
    for i, k in index.items():
        result[induced.state_map[i]] = visits[k]
    return result


def check_graph_analysis(seed: int) -> None:
    params = RandomMdpParams(num_states=2 + seed % 3, max_actions=3, num_objectives=2)
    m, q = random_mdp(seed, params)
    assert set(compute_mecs(m)) == mecs_by_enumeration(m), seed
    for obj in q.objectives:
        sets = compute_zero_states(m, obj)
        zero = zero_by_enumeration(m, obj)
        assert set(sets.zero) == zero, seed
        assert set(sets.maybe) == maybe_by_search(m, zero), seed


def check_visit_bounds(seed: int) -> None:
    params = RandomMdpParams(num_states=2 + seed % 4, max_actions=3, num_objectives=2)
    m, q = random_total_reward_mdp(seed, params)
    sets = [compute_zero_states(m, obj) for obj in q.objectives]
    zero = set(common_zero_states(m, sets))
    bounds = flow_visit_bounds(m, q, sets)
    for sigma in all_strategies(m):
        visits = expected_visits(m, sigma, zero)
        if visits is None:
            continue
        for s in np.flatnonzero(visits > 0):
            assert int(s) in bounds, (seed, sigma.choices, int(s))
            assert visits[s] <= float(bounds[int(s)]) * (1 + 1e-9) + 1e-9, (seed, sigma.choices, int(s))


@pytest.mark.parametrize("seed", range(5))
def test_small_graph_analysis(seed):
    check_graph_analysis(seed)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5, 105))
def test_graph_analysis_matches_definitions(seed):
    """MEC 分解と S0 / S? を定義どおりの全列挙と比べる"""
    check_graph_analysis(seed)


@pytest.mark.parametrize("seed", range(10))
def test_small_visit_bounds(seed):
    check_visit_bounds(seed)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10, 110))
def test_visit_bounds_are_safe(seed):
    """zero に確率1で到達する全ての純粋定常戦略で、期待訪問回数が上界以下"""
    check_visit_bounds(seed)
