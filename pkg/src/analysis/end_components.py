"""
エンドコンポーネント解析

- 極大エンドコンポーネント (MEC) 分解 (SCC の反復的な絞り込み)
- ペア集合の最大閉部分集合
- EC の除去 (訪問回数の上界計算の前処理)
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from src.core.mdp import Mdp, Pair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MecDecomposition:
    """MEC の一覧 (最小状態インデックス順)"""
    mecs: Tuple[FrozenSet[Pair], ...]

    def __len__(self) -> int:
        return len(self.mecs)

    def __iter__(self):
        return iter(self.mecs)

    def states_of(self, i: int) -> FrozenSet[int]:
        return frozenset(s for s, _ in self.mecs[i])

    def state_sets(self) -> List[FrozenSet[int]]:
        return [self.states_of(i) for i in range(len(self.mecs))]

    def mec_of_state(self) -> Dict[int, int]:
        """状態 -> 所属する MEC のインデックス"""
        return {s: i for i in range(len(self.mecs)) for s in self.states_of(i)}

    def all_pairs(self) -> FrozenSet[Pair]:
        return frozenset().union(*self.mecs) if self.mecs else frozenset()


def compute_mecs(m: Mdp, pairs: Optional[Iterable[Pair]] = None) -> MecDecomposition:
    """
    MEC 分解を計算する

    pairs を指定した場合、そのペアのみからなる部分構造の MEC を求める。
    SCC に分解し、SCC の外へ出る行動を取り除く操作を不動点まで繰り返す。
    """
    remaining: Set[Pair] = set(m.pairs() if pairs is None else pairs)
    while True:
        g = nx.DiGraph()
        g.add_nodes_from({s for s, _ in remaining})
        for s, a in remaining:
            for t, _ in m.transitions[s][a]:
                g.add_edge(s, t)
        component: Dict[int, int] = {}
        for i, scc in enumerate(nx.strongly_connected_components(g)):
            for s in scc:
                component[s] = i
        covered = {s for s, _ in remaining}
        kept = {
            (s, a)
            for s, a in remaining
            if all(t in covered and component.get(t) == component[s] for t, _ in m.transitions[s][a])
        }
        if kept == remaining:
            break
        remaining = kept

    groups: Dict[int, Set[Pair]] = {}
    for s, a in remaining:
        groups.setdefault(component[s], set()).add((s, a))
    mecs = sorted((frozenset(g) for g in groups.values()), key=lambda e: min(s for s, _ in e))
    return MecDecomposition(tuple(mecs))


def largest_closed_subset(m: Mdp, pairs: Iterable[Pair]) -> FrozenSet[Pair]:
    """後続状態が全て集合内の状態に留まるペアの最大部分集合"""
    remaining = set(pairs)
    while True:
        covered = {s for s, _ in remaining}
        kept = {(s, a) for s, a in remaining if all(t in covered for t, _ in m.transitions[s][a])}
        if kept == remaining:
            return frozenset(kept)
        remaining = kept


@dataclass(frozen=True)
class FreshAction:
    """EC 除去で追加された行動の由来"""
    state: int
    action: int
    exit_pair: Optional[Pair]
    mec: int
    stay_probability: Fraction


@dataclass(frozen=True)
class Elimination:
    mdp: Mdp
    fresh: Tuple[FreshAction, ...]
    mecs: MecDecomposition
    exit_probability: Tuple[Fraction, ...]


STOP_STATE = "__stop__"
STOP_ACTION = "__stop__"


def eliminate_ecs_detailed(m: Mdp, keep: Iterable[int], add_stop: bool = False) -> Elimination:
    """
    keep 外の全ての MEC を除去したMDPと、追加行動の対応を返す

    MEC E ごとに p = ∏_{s'∈S_E} min_α min_{s''} P(s', α, s'') を計算し、
    E 内部のペアを削除して、E から出るペア (s', α) ごとに各状態 s へ
    P(s, α', ·) = p·P(s', α, ·) + (1-p)·[· = s] となる行動 α' を追加する。
    出るペアを持たない (底の) MEC は除去できないためそのまま残す。

    add_stop が True の場合、吸収状態 __stop__ を末尾に追加し、MEC の各状態に
    そこへ移る行動 __stop__ を加える (底の MEC も内部ペアを削除する)。
    追加行動のうち停止行動は exit_pair が None になる。
    """
    keep = frozenset(keep)
    stop_index = m.num_states
    outside = [(s, a) for s, a in m.pairs() if s not in keep]
    mecs = compute_mecs(m, outside)

    internal: Set[Pair] = set()
    added: Dict[int, List[Tuple[str, Tuple[Tuple[int, Fraction], ...], Pair, int, Fraction]]] = {}
    exit_probability = []
    for i, mec in enumerate(mecs):
        states = sorted({s for s, _ in mec})
        p = Fraction(1)
        for s in states:
            p *= min(prob for a in range(len(m.actions[s])) for _, prob in m.transitions[s][a])
        exit_probability.append(p)
        exits = [(s, a) for s in states for a in range(len(m.actions[s])) if (s, a) not in mec]
        if not exits and not add_stop:
            logger.debug(f"MEC {i} has no leaving action and is kept")
            continue
        internal |= mec
        for s in states:
            for s2, a2 in exits:
                dist: Dict[int, Fraction] = {t: p * prob for t, prob in m.transitions[s2][a2]}
                if p < 1:
                    dist[s] = dist.get(s, Fraction(0)) + (1 - p)
                label = f"{m.actions[s2][a2]}@{m.states[s2]}"
                added.setdefault(s, []).append((label, tuple(sorted(dist.items())), (s2, a2), i, 1 - p))
            if add_stop:
                added.setdefault(s, []).append(
                    (STOP_ACTION, ((stop_index, Fraction(1)),), None, i, Fraction(0))
                )

    actions = []
    transitions = []
    fresh = []
    for s in range(m.num_states):
        labels = []
        dists = []
        for a in range(len(m.actions[s])):
            if (s, a) not in internal:
                labels.append(m.actions[s][a])
                dists.append(m.transitions[s][a])
        for label, dist, exit_pair, mec_index, stay in added.get(s, []):
            while label in labels:
                label += "'"
            fresh.append(FreshAction(s, len(labels), exit_pair, mec_index, stay))
            labels.append(label)
            dists.append(dist)
        actions.append(tuple(labels))
        transitions.append(tuple(dists))

    states = m.states
    if add_stop:
        name = STOP_STATE
        while name in m.states:
            name += "'"
        states = m.states + (name,)
        actions.append((STOP_ACTION,))
        transitions.append((((stop_index, Fraction(1)),),))
    result = Mdp(states, tuple(actions), tuple(transitions), m.initial)
    logger.debug(f"Eliminated {len(mecs)} end components, added {len(fresh)} actions")
    return Elimination(result, tuple(fresh), mecs, tuple(exit_probability))


def eliminate_ecs(m: Mdp, keep: Iterable[int]) -> Mdp:
    """keep 外の EC を除去したMDP (状態インデックスは元と同じ)"""
    return eliminate_ecs_detailed(m, keep).mdp


def make_absorbing(m: Mdp, states: Iterable[int]) -> Mdp:
    """指定状態の行動を先頭ラベルの自己ループ1つに置き換える"""
    states = frozenset(states)
    actions = []
    transitions = []
    for s in range(m.num_states):
        if s in states:
            actions.append((m.actions[s][0],))
            transitions.append((((s, Fraction(1)),),))
        else:
            actions.append(m.actions[s])
            transitions.append(m.transitions[s])
    return Mdp(m.states, tuple(actions), tuple(transitions), m.initial)
