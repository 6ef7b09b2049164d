"""
全純粋定常戦略の列挙による達成可能性・パレートフロントのオラクル

戦略は状態インデックス、行動インデックスの辞書式順で列挙する。
値は初期状態から到達可能な部分の選択のみに依存するため、その部分を
キーとしてキャッシュする。
"""
import itertools
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from src.config import Config
from src.core.exceptions import TooManyStrategiesError
from src.core.mdp import Mdp
from src.core.numbers import Extended
from src.core.objectives import Point, Query, dominates
from src.core.strategy import PureStationaryStrategy
from src.evaluation.exact_evaluator import evaluate_query, meets_point
from src.utils.monitoring import cache_monitor

logger = logging.getLogger(__name__)

CACHE_NAME = "strategy_values"


def strategy_count(m: Mdp) -> int:
    count = 1
    for labels in m.actions:
        count *= len(labels)
    return count


def _check_cap(m: Mdp, cap: Optional[int]) -> None:
    cap = Config.STRATEGY_CAP if cap is None else cap
    count = strategy_count(m)
    if count > cap:
        raise TooManyStrategiesError(f"戦略数 {count} が上限 {cap} を超えています")


def _reachable_key(m: Mdp, choices: Sequence[int]) -> Tuple[Tuple[int, int], ...]:
    seen = {m.initial}
    queue = deque([m.initial])
    while queue:
        s = queue.popleft()
        for t, _ in m.transitions[s][choices[s]]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return tuple((s, choices[s]) for s in sorted(seen))


def _enumerate_block(
    m: Mdp, q: Query, first_choices: Sequence[int]
) -> List[Tuple[PureStationaryStrategy, Tuple[Extended, ...]]]:
    ranges = [first_choices] + [range(len(m.actions[s])) for s in range(1, m.num_states)]
    cache: Dict[Tuple[Tuple[int, int], ...], Tuple[Extended, ...]] = {}
    result = []
    for choices in itertools.product(*ranges):
        key = _reachable_key(m, choices)
        if key in cache:
            cache_monitor.record_cache_hit(CACHE_NAME)
        else:
            cache_monitor.record_cache_miss(CACHE_NAME)
            cache[key] = evaluate_query(m, PureStationaryStrategy(choices), q)
        result.append((PureStationaryStrategy(choices), cache[key]))
    return result


def enumerate_value_vectors(
    m: Mdp, q: Query, cap: Optional[int] = None, threads: int = 1
) -> Iterator[Tuple[PureStationaryStrategy, Tuple[Extended, ...]]]:
    """
    全ての純粋定常戦略とその値ベクトルを辞書式順に列挙する

    threads > 1 の場合、初期インデックス0の状態の行動ごとのブロックを並行に評価する。

    Raises:
        TooManyStrategiesError: 戦略数が上限を超える
    """
    _check_cap(m, cap)
    blocks = [[a] for a in range(len(m.actions[0]))]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(lambda block: _enumerate_block(m, q, block), blocks))
        for block_result in results:
            yield from block_result
    else:
        for block in blocks:
            yield from _enumerate_block(m, q, block)


def brute_force_witness(
    m: Mdp, q: Query, p: Sequence[Extended], cap: Optional[int] = None
) -> Optional[PureStationaryStrategy]:
    """p を達成する最初の (辞書式順) 戦略、なければ None"""
    q.check_point(p)
    for sigma, values in enumerate_value_vectors(m, q, cap):
        if meets_point(q, values, p):
            return sigma
    return None


def brute_force_achievable(m: Mdp, q: Query, p: Sequence[Extended], cap: Optional[int] = None) -> bool:
    """p ∈ Ach^PS(M, Q) を全列挙で判定する"""
    return brute_force_witness(m, q, p, cap) is not None


def pareto_filter(q: Query, points) -> List[Point]:
    """支配されない点のみを残す (重複除去、辞書式に整列)"""
    unique = sorted(set(tuple(p) for p in points))
    return [
        p for p in unique
        if not any(other != p and dominates(q, other, p) for other in unique)
    ]


def brute_force_pareto_detailed(
    m: Mdp, q: Query, cap: Optional[int] = None, threads: int = 1
) -> List[Tuple[Point, PureStationaryStrategy]]:
    """パレート点と、各点を最初に達成した戦略の組"""
    witnesses: Dict[Point, PureStationaryStrategy] = {}
    for sigma, values in enumerate_value_vectors(m, q, cap, threads):
        witnesses.setdefault(values, sigma)
    front = pareto_filter(q, witnesses)
    logger.info(f"Brute force found {len(witnesses)} distinct value vectors, {len(front)} Pareto points")
    return [(p, witnesses[p]) for p in front]


def brute_force_pareto(m: Mdp, q: Query, cap: Optional[int] = None, threads: int = 1) -> set:
    """純粋定常戦略の厳密なパレート点集合"""
    return {p for p, _ in brute_force_pareto_detailed(m, q, cap, threads)}
