"""
目的ごとの状態集合 (S0, S?) と無限報酬状態 S_inf のグラフ解析
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Set

from src.analysis.end_components import compute_mecs, largest_closed_subset
from src.core.exceptions import InitialInfiniteError
from src.core.mdp import Mdp, Pair, sub_mdp
from src.core.objectives import Objective, Query

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveStateSets:
    """
    zero: ゴール到達前に正の報酬を得られない状態 (S0)
    maybe: 初期状態から zero を通らずに到達可能な残りの状態 (S?)
    """
    zero: FrozenSet[int]
    maybe: FrozenSet[int]

    def maybe_pairs(self, m: Mdp) -> FrozenSet[Pair]:
        return frozenset((s, a) for s in self.maybe for a in range(len(m.actions[s])))


def positive_pairs(m: Mdp, obj: Objective) -> FrozenSet[Pair]:
    """ゴール外の状態で期待報酬が正となるペア"""
    return frozenset(
        (s, a) for s, a in obj.reward.positive_pairs() if s not in obj.goal
    )


def compute_zero_states(m: Mdp, obj: Objective) -> ObjectiveStateSets:
    """
    S0 と S? を計算する

    ゴール状態を吸収的とみなしたグラフで、正の報酬を持つ遷移に
    到達できない状態を S0 とする (ゴール状態自身を含む)。
    """
    sources = {s for s, _ in positive_pairs(m, obj)}
    can_reach: Set[int] = set(sources)
    queue = deque(sources)
    while queue:
        t = queue.popleft()
        for s, _, _ in m.predecessors(t):
            if s in obj.goal or s in can_reach:
                continue
            can_reach.add(s)
            queue.append(s)
    zero = frozenset(range(m.num_states)) - can_reach

    maybe: Set[int] = set()
    if m.initial not in zero:
        maybe.add(m.initial)
        queue = deque([m.initial])
        while queue:
            s = queue.popleft()
            for a in range(len(m.actions[s])):
                for t, _ in m.transitions[s][a]:
                    if t not in zero and t not in maybe:
                        maybe.add(t)
                        queue.append(t)
    return ObjectiveStateSets(zero, frozenset(maybe))


def prob1_max(m: Mdp, target: Iterable[int], pairs: Optional[Iterable[Pair]] = None) -> FrozenSet[int]:
    """
    ある戦略で target に確率1で到達できる状態集合 (Pmax(◊target) = 1)

    pairs を指定した場合はその行動のみ使用する。
    """
    target = frozenset(target)
    usable = list(m.pairs() if pairs is None else pairs)
    u: Set[int] = set(range(m.num_states))
    while True:
        r: Set[int] = set(target)
        changed = True
        while changed:
            changed = False
            for s, a in usable:
                if s in r or s not in u:
                    continue
                succ = [t for t, _ in m.transitions[s][a]]
                if all(t in u for t in succ) and any(t in r for t in succ):
                    r.add(s)
                    changed = True
        if r == u:
            return frozenset(u)
        u = r


def finite_states_for(m: Mdp, obj: Objective) -> FrozenSet[int]:
    """最小化目的 obj を有限にできる状態 (ゴールか報酬0のECへ確率1で到達可能)"""
    zero_pairs = [
        (s, a)
        for s, a in m.pairs()
        if s not in obj.goal and obj.reward.expected(m, s, a) == 0
    ]
    good = set(obj.goal)
    for mec in compute_mecs(m, zero_pairs):
        good |= {s for s, _ in mec}
    usable = [(s, a) for s, a in m.pairs() if s not in obj.goal]
    return prob1_max(m, good, usable)


def compute_sinfty(m: Mdp, q: Query) -> FrozenSet[int]:
    """
    全ての戦略が何れかの最小化目的で無限の期待報酬となる状態の集合

    最小化目的ごとに、ゴールまたは報酬0のECへ確率1で到達できない状態を求め、
    その和集合を返す。
    """
    result: Set[int] = set()
    for j in q.minimizing_indices:
        result |= set(range(m.num_states)) - finite_states_for(m, q[j])
    return frozenset(result)


def finite_pairs(m: Mdp, q: Query) -> FrozenSet[Pair]:
    """(S \\ S_inf) × Act の最大閉部分集合 E_fin"""
    sinf = compute_sinfty(m, q)
    return largest_closed_subset(m, [(s, a) for s, a in m.pairs() if s not in sinf])


def restrict_to_finite(m: Mdp, q: Query) -> Mdp:
    """
    部分MDP M↓(E_fin, s_I) を返す

    Raises:
        InitialInfiniteError: 初期状態が S_inf に含まれる (または E_fin に覆われない)
    """
    sinf = compute_sinfty(m, q)
    if m.initial in sinf:
        raise InitialInfiniteError(f"初期状態 {m.states[m.initial]} から全ての戦略が無限の報酬を生みます")
    pairs = largest_closed_subset(m, [(s, a) for s, a in m.pairs() if s not in sinf])
    if m.initial not in {s for s, _ in pairs}:
        raise InitialInfiniteError(
            f"初期状態 {m.states[m.initial]} から S_inf を確率1で避ける戦略がありません"
        )
    if len(pairs) == m.num_pairs:
        return m
    logger.debug(f"Restricted model to {len(pairs)} of {m.num_pairs} state-action pairs")
    return sub_mdp(m, pairs, m.initial)
