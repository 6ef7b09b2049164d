"""
エンコーディングで使用する数値上界

- u_s^j: 純粋定常戦略で状態 s から得られる (有限な) 期待報酬の上界
- F_s: シンクへ確率1で到達する戦略のもとでの状態 s の期待訪問回数の上界

いずれも EC を除去したモデル上で方策反復 (厳密な有理数の線形求解) により求める。
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Tuple

from src.analysis.end_components import eliminate_ecs_detailed, make_absorbing
from src.analysis.state_sets import compute_zero_states, prob1_max
from src.config import Config
from src.core.exceptions import EmptySinkError, SingularSystemError, UnboundedRewardError
from src.core.mdp import Mdp
from src.core.objectives import Objective
from src.evaluation.linear_solver import solve_linear_system

logger = logging.getLogger(__name__)

ExpectedReward = Callable[[int, int], Fraction]


@dataclass
class Bounds:
    """reward_upper[(s, j)] = u_s^j, visit_upper[s] = F_s"""
    reward_upper: Dict[Tuple[int, int], Fraction] = field(default_factory=dict)
    visit_upper: Dict[int, Fraction] = field(default_factory=dict)

    def u(self, s: int, j: int) -> Fraction:
        if (s, j) not in self.reward_upper:
            raise UnboundedRewardError(f"状態 {s}、目的 {j} の上界が計算されていません")
        return self.reward_upper[(s, j)]

    def f(self, s: int) -> Fraction:
        return self.visit_upper.get(s, Fraction(1))

    def max_magnitude(self) -> Fraction:
        values = list(self.reward_upper.values()) + list(self.visit_upper.values())
        return max(values, default=Fraction(0))


def evaluate_policy(
    m: Mdp, policy: Mapping[int, int], expected: ExpectedReward, sink: FrozenSet[int]
) -> Dict[int, Fraction]:
    """方策の価値 v_s = r(s, σ(s)) + Σ_{t∉sink} P(s, σ(s), t)·v_t を厳密に解く"""
    states = sorted(policy)
    index = {s: i for i, s in enumerate(states)}
    a_rows: List[List[Fraction]] = []
    b: List[Fraction] = []
    for s in states:
        row = [Fraction(0)] * len(states)
        row[index[s]] += 1
        for t, p in m.transitions[s][policy[s]]:
            if t not in sink:
                row[index[t]] -= p
        a_rows.append(row)
        b.append(expected(s, policy[s]))
    values = solve_linear_system(a_rows, b)
    result = {s: values[index[s]] for s in states}
    for s in sink:
        result[s] = Fraction(0)
    return result


def maximize_total_reward(m: Mdp, expected: ExpectedReward, sink: Iterable[int]) -> Dict[int, Fraction]:
    """
    sink 到達までの最大期待総報酬を方策反復で求める

    sink 外に EC が存在しない (全ての方策が sink に確率1で到達する) ことを前提とする。

    Raises:
        SingularSystemError: 前提が満たされない
    """
    sink = frozenset(sink)
    policy = {s: 0 for s in range(m.num_states) if s not in sink}
    iterations = 0
    while True:
        iterations += 1
        values = evaluate_policy(m, policy, expected, sink)
        changed = False
        for s in policy:
            def q(a: int) -> Fraction:
                return expected(s, a) + sum((p * values[t] for t, p in m.transitions[s][a]), Fraction(0))
            best_a = policy[s]
            best = q(best_a)
            for a in range(len(m.actions[s])):
                value = q(a)
                if value > best:
                    best, best_a = value, a
            if best_a != policy[s]:
                policy[s] = best_a
                changed = True
        if not changed:
            logger.debug(f"Policy iteration converged after {iterations} iterations")
            return values


def compute_reward_upper_bounds(m: Mdp, obj: Objective) -> Dict[int, Fraction]:
    """
    各状態 s について u_s ≥ max_σ E^σ_s(R ◊ G) (有限値となる純粋定常戦略について)

    S0 の状態を吸収的にし、それ以外の MEC を除去する。MEC E 内での滞在は
    |S_E|/p 手以内に抜ける (または報酬0の底に入る) ため、除去で加える行動に
    |S_E|·rmax_E の報酬を、停止行動に |S_E|·rmax_E/p の報酬を与える。
    """
    sets = compute_zero_states(m, obj)
    zero = sets.zero
    stopped = make_absorbing(m, zero)
    elim = eliminate_ecs_detailed(stopped, zero, add_stop=True)
    model = elim.mdp

    base_reward: Dict[Tuple[int, int], Fraction] = {}
    for s in range(m.num_states):
        if s in zero:
            continue
        for a in range(len(stopped.actions[s])):
            base_reward[(s, a)] = obj.reward.expected(m, s, a)

    rmax = []
    for mec in elim.mecs:
        values = [obj.reward.reward(s, a, t) for s, a in mec for t, _ in m.transitions[s][a]]
        rmax.append(max(values, default=Fraction(0)))

    fresh_reward: Dict[Tuple[int, int], Fraction] = {}
    for fa in elim.fresh:
        size = len(elim.mecs.states_of(fa.mec))
        wander = size * rmax[fa.mec]
        p = elim.exit_probability[fa.mec]
        if fa.exit_pair is None:
            fresh_reward[(fa.state, fa.action)] = wander / p
        else:
            s2, a2 = fa.exit_pair
            fresh_reward[(fa.state, fa.action)] = wander + p * obj.reward.expected(m, s2, a2)

    def expected(s: int, a: int) -> Fraction:
        if (s, a) in fresh_reward:
            return fresh_reward[(s, a)]
        if s >= m.num_states:
            return Fraction(0)
        original = stopped.action_index(s, model.actions[s][a])
        return base_reward.get((s, original), Fraction(0))

    sink = set(zero) | {model.num_states - 1}
    try:
        values = maximize_total_reward(model, expected, sink)
    except SingularSystemError as e:
        logger.error(f"Reward bound computation failed for {obj.reward.name}: {e}")
        raise UnboundedRewardError(f"報酬 {obj.reward.name} に有限な上界を計算できません") from e

    bounds = {s: values.get(s, Fraction(0)) for s in range(m.num_states)}
    _warn_if_large(bounds.values(), f"reward {obj.reward.name}")
    return bounds


def compute_visit_upper_bounds(m: Mdp, sink: Iterable[int]) -> Dict[int, Fraction]:
    """
    F_s ≥ (sink に確率1で到達する戦略のもとでの s の期待訪問回数)

    Pmax(◊sink) = 1 の領域へ制限し、sink 外の EC を除去した後、
    s から出発して s を訪れる回数の最大期待値を求める。領域外の状態は 1 とする。

    Raises:
        EmptySinkError: sink が空
    """
    sink = frozenset(sink)
    if not sink:
        raise EmptySinkError("訪問回数の上界にはシンク状態が必要です")

    region = prob1_max(m, sink)
    blocked = frozenset(range(m.num_states)) - region
    actions = []
    transitions = []
    for s in range(m.num_states):
        if s in sink or s in blocked:
            actions.append((m.actions[s][0],))
            transitions.append((((s, Fraction(1)),),))
            continue
        kept = [
            a for a in range(len(m.actions[s]))
            if all(t in region for t, _ in m.transitions[s][a])
        ]
        actions.append(tuple(m.actions[s][a] for a in kept))
        transitions.append(tuple(m.transitions[s][a] for a in kept))
    restricted = Mdp(m.states, tuple(actions), tuple(transitions), m.initial)
    stop = sink | blocked
    model = eliminate_ecs_detailed(restricted, stop).mdp

    bounds: Dict[int, Fraction] = {}
    for target in range(m.num_states):
        if target in stop:
            bounds[target] = Fraction(1)
            continue

        def entering(s: int, a: int, target=target) -> Fraction:
            return model.probability(s, a, target)

        values = maximize_total_reward(model, entering, stop)
        bounds[target] = 1 + values[target]
    _warn_if_large(bounds.values(), "visit counts")
    return bounds


def _warn_if_large(values: Iterable[Fraction], what: str) -> None:
    largest = max(values, default=Fraction(0))
    if largest > Config.BOUND_WARNING:
        logger.warning(
            f"Upper bound for {what} is {float(largest):.3e}; big-M constraints may be numerically unstable"
        )
