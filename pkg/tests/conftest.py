"""
pytest設定ファイル
組み込みモデル・小さなランダムモデル・ソルバー設定の共通フィクスチャ
"""
import os
from fractions import Fraction

import pytest

# テスト環境であることを示す環境変数を設定
os.environ["TESTING"] = "true"

from src.core.mdp import Mdp  # noqa: E402
from src.core.objectives import Objective, Query, Relation, RewardStructure, reachability_to_reward  # noqa: E402
from src.instances.builtins import builtin, builtin_model_file  # noqa: E402
from src.milp.model import SolverOptions  # noqa: E402
from src.utils.monitoring import cache_monitor, performance_monitor  # noqa: E402


@pytest.fixture(autouse=True)
def reset_metrics():
    """テストごとにメトリクスを初期化する"""
    performance_monitor.reset()
    cache_monitor.reset()
    yield


@pytest.fixture
def fig1():
    """2つの到達確率目的を持つ6状態のモデル"""
    return builtin("fig1")


@pytest.fixture
def fig1_file():
    return builtin_model_file("fig1")


@pytest.fixture
def fig5a_file():
    return builtin_model_file("fig5a")


@pytest.fixture
def fig5b():
    return builtin("fig5b")


@pytest.fixture
def solver_options():
    return SolverOptions(
        feasibility_tol=1e-9, integrality_tol=1e-6, node_limit=100000, time_limit=None, lp_iteration_limit=50000
    )


@pytest.fixture
def chain_mdp():
    """s0 -a-> s1 (1/2) / s2 (1/2)、s1・s2 は吸収的"""
    return Mdp.from_dict(
        ["s0", "s1", "s2"],
        {
            "s0": {"a": {"s1": "1/2", "s2": "1/2"}, "b": {"s2": "1"}},
            "s1": {"loop": {"s1": "1"}},
            "s2": {"loop": {"s2": "1"}},
        },
        "s0",
    )


@pytest.fixture
def coin_with_cost(chain_mdp):
    """chain_mdp 上の (s1 への到達確率を最大化, 行動 a のコスト1を最小化)"""
    m = chain_mdp
    reach = reachability_to_reward(m, {1})
    cost = Objective(
        RewardStructure("cost", {(0, 0, 1): Fraction(1), (0, 0, 2): Fraction(1)}), Relation.AT_MOST, frozenset()
    )
    return m, Query((reach, cost))
