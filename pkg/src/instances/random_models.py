"""
シード付きのランダムMDP生成 (オラクルとの照合テスト用)
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from src.analysis.end_components import compute_mecs
from src.core.exceptions import InvalidModelError
from src.core.mdp import Mdp
from src.core.objectives import Objective, Query, Relation, RewardStructure, reachability_to_reward

logger = logging.getLogger(__name__)

DENOMINATOR = 16


@dataclass(frozen=True)
class RandomMdpParams:
    """
    num_states: 状態数
    max_actions: 状態あたりの最大行動数
    density: 各状態が後続状態に選ばれる確率 (少なくとも1つは選ばれる)
    reward_range: 報酬は 0..reward_range の整数
    num_objectives: 目的数
    plant_cycle: 閉じた2状態サイクルを埋め込む (非自明な EC を作る)
    finite_rewards: 最大化目的の報酬を MEC 内の行動に置かない
    """
    num_states: int = 4
    max_actions: int = 2
    density: float = 0.4
    reward_range: int = 3
    num_objectives: int = 2
    plant_cycle: bool = True
    finite_rewards: bool = False

    def validate(self) -> None:
        if self.num_states < 1 or self.max_actions < 1 or self.num_objectives < 1:
            raise InvalidModelError("状態数・行動数・目的数は1以上である必要があります")
        if not 0.0 <= self.density <= 1.0:
            raise InvalidModelError(f"density {self.density} は [0, 1] の範囲外です")
        if self.reward_range < 0:
            raise InvalidModelError("reward_range は0以上である必要があります")


def _distribution(rng: np.random.Generator, n: int, density: float) -> Dict[int, Fraction]:
    support = [t for t in range(n) if rng.random() < density]
    if not support:
        support = [int(rng.integers(n))]
    support = support[:DENOMINATOR]
    units = rng.multinomial(DENOMINATOR - len(support), [1.0 / len(support)] * len(support)) + 1
    return {t: Fraction(int(u), DENOMINATOR) for t, u in zip(support, units)}


def _random_structure(rng: np.random.Generator, params: RandomMdpParams) -> Mdp:
    n = params.num_states
    names = [f"s{i}" for i in range(n)]
    transitions: Dict[str, Dict[str, Dict[str, Fraction]]] = {}
    for s in range(n):
        k = 1 if n == 1 else int(rng.integers(1, params.max_actions + 1))
        transitions[names[s]] = {}
        for a in range(k):
            dist = {s: Fraction(1)} if n == 1 else _distribution(rng, n, params.density)
            transitions[names[s]][f"a{a}"] = {names[t]: p for t, p in dist.items()}

    if params.plant_cycle and n >= 2:
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        transitions[names[u]]["c"] = {names[v]: Fraction(1)}
        transitions[names[v]]["c"] = {names[u]: Fraction(1)}
    return Mdp.from_dict(names, transitions, names[0])


def _random_objective(
    rng: np.random.Generator, m: Mdp, params: RandomMdpParams, j: int, mec_pairs: frozenset
) -> Objective:
    relation = Relation.AT_LEAST if rng.random() < 0.5 else Relation.AT_MOST
    goal = frozenset(int(g) for g in np.flatnonzero(rng.random(m.num_states) < 0.25) if g != m.initial)
    if rng.random() < 0.4 and goal:
        return reachability_to_reward(m, goal, relation)
    if rng.random() < 0.5:
        goal = frozenset()
    excluded = mec_pairs if params.finite_rewards and relation is Relation.AT_LEAST else frozenset()
    return Objective(RewardStructure(f"r{j}", _random_entries(rng, m, params, excluded)), relation, goal)


def _random_entries(
    rng: np.random.Generator, m: Mdp, params: RandomMdpParams, excluded: frozenset
) -> Dict[Tuple[int, int, int], Fraction]:
    entries = {}
    for s, a in m.pairs():
        if (s, a) in excluded:
            continue
        for t, _ in m.transitions[s][a]:
            if rng.random() < 0.5:
                value = int(rng.integers(0, params.reward_range + 1))
                if value:
                    entries[(s, a, t)] = Fraction(value)
    return entries


def random_mdp(seed: int, params: RandomMdpParams = RandomMdpParams()) -> Tuple[Mdp, Query]:
    """
    シードから決定的に (MDP, クエリ) を生成する

    確率は分母16の有理数。目的は最大化/最小化、到達確率/期待報酬 (ゴールあり・なし) が混在する。
    """
    params.validate()
    rng = np.random.default_rng(seed)
    m = _random_structure(rng, params)
    mec_pairs = compute_mecs(m).all_pairs() if params.finite_rewards else frozenset()
    objectives: List[Objective] = [
        _random_objective(rng, m, params, j, mec_pairs) for j in range(params.num_objectives)
    ]
    logger.debug(f"Generated random MDP (seed={seed}) with {m.num_states} states and {m.num_pairs} actions")
    return m, Query(tuple(objectives))


def random_total_reward_mdp(seed: int, params: RandomMdpParams = RandomMdpParams()) -> Tuple[Mdp, Query]:
    """
    ゴールを持たない総報酬目的だけのランダムMDP

    報酬は MEC に属さない行動にだけ置くので、どの純粋定常戦略でも値は有限になる。
    総報酬形式のままなので base と flow の両方のエンコーディングで解ける。
    """
    params.validate()
    rng = np.random.default_rng(seed)
    m = _random_structure(rng, params)
    mec_pairs = compute_mecs(m).all_pairs()
    objectives: List[Objective] = []
    for j in range(params.num_objectives):
        relation = Relation.AT_LEAST if rng.random() < 0.5 else Relation.AT_MOST
        entries = _random_entries(rng, m, params, mec_pairs)
        objectives.append(Objective(RewardStructure(f"r{j}", entries), relation))
    logger.debug(f"Generated random total reward MDP (seed={seed}) with {m.num_states} states")
    return m, Query(tuple(objectives))
