"""
有限メモリ戦略による達成可能性 (PBMA) の判定

メモリ構造との積を作り、持ち上げたクエリで PSMA を解き、得られた定常戦略を
Mealy 戦略に戻して元のモデル上で厳密に再検証する。
完全メモリでは判定は厳密、カウンタ・ゴール訪問メモリでは Achievable のみ確定的
(NotAchievable は K メモリ戦略が存在しないことを意味しない)。
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from src.core.exceptions import ZeroMemoryError
from src.core.mdp import Mdp
from src.core.numbers import Extended
from src.core.objectives import Query
from src.encodings.achievability import AUTO, PsmaResult, PsmaStatus, psma_check
from src.evaluation.exact_evaluator import meets_point
from src.memory.mealy import MealyStrategy, evaluate_mealy_query, translate_goal_strategy, translate_product_strategy
from src.memory.memory_structure import (
    COMPLETE, COUNTER, GOAL, MEMORY_KINDS, MemoryStructure, build_complete_memory, build_counter_memory,
)
from src.memory.product import ProductMdp, goal_product, lift_query, product
from src.milp.model import SolverOptions
from src.utils.monitoring import monitor_performance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PbmaResult:
    """
    exact: 判定が PBMA として厳密か (完全メモリのみ True)。False の場合
        NotAchievable は「このメモリ構造では見つからない」ことだけを意味する
    """
    status: PsmaStatus
    strategy: Optional[MealyStrategy]
    values: Optional[Tuple[Extended, ...]]
    memory_kind: str
    memory_size: int
    exact: bool
    product_states: int
    psma: PsmaResult

    @property
    def achievable(self) -> bool:
        return self.status is PsmaStatus.ACHIEVABLE

    @property
    def completeness(self) -> str:
        return "exact" if self.exact else "lower_bound_only"


def memory_structure(kind: str, k: int) -> MemoryStructure:
    if kind == COMPLETE:
        return build_complete_memory(k)
    if kind == COUNTER:
        return build_counter_memory(k)
    raise ValueError(f"不明なメモリ構造です: {kind} ({', '.join(MEMORY_KINDS)})")


def build_product(m: Mdp, q: Query, k: int, kind: str) -> ProductMdp:
    if kind == GOAL:
        return goal_product(m, q)
    return product(m, memory_structure(kind, k))


def translate(prod: ProductMdp, q: Query, sigma) -> MealyStrategy:
    if prod.memory.kind == GOAL:
        return translate_goal_strategy(prod, q, sigma)
    return translate_product_strategy(prod, sigma)


@monitor_performance("pbma.check")
def pbma_check(
    m: Mdp,
    q: Query,
    k: int,
    p: Sequence[Extended],
    kind: str = COMPLETE,
    encoding: str = AUTO,
    options: Optional[SolverOptions] = None,
    export_lp: Optional[str] = None,
) -> PbmaResult:
    """
    p がメモリ k の純粋戦略で達成可能かを判定する

    Args:
        k: メモリサイズ (kind="goal" の場合はゴール集合から決まるため無視する)
        kind: "complete" / "counter" / "goal"

    Raises:
        ZeroMemoryError: k < 1
    """
    if kind not in MEMORY_KINDS:
        raise ValueError(f"不明なメモリ構造です: {kind} ({', '.join(MEMORY_KINDS)})")
    if kind != GOAL and k < 1:
        raise ZeroMemoryError(f"メモリサイズ K は1以上である必要があります (K={k})")
    q.validate(m)
    q.check_point(p)

    prod = build_product(m, q, k, kind)
    lifted = lift_query(q, prod)
    result = psma_check(prod.mdp, lifted, p, encoding, options, export_lp)
    exact = kind == COMPLETE
    size = prod.memory.size
    logger.info(f"PSMA on {kind} memory product ({prod.num_states} states): {result.status.value}")

    if result.status is PsmaStatus.NOT_ACHIEVABLE or result.strategy is None:
        return PbmaResult(result.status, None, None, kind, size, exact, prod.num_states, result)

    mealy = translate(prod, q, result.strategy)
    values = evaluate_mealy_query(m, mealy, q)
    status = result.status
    if status is PsmaStatus.ACHIEVABLE and not meets_point(q, values, p):
        logger.error(f"Mealy strategy values {values} differ from the product strategy values {result.values}")
        status = PsmaStatus.VERIFICATION_FAILED
    return PbmaResult(status, mealy, values, kind, size, exact, prod.num_states, result)
