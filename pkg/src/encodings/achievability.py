"""
純粋定常戦略による達成可能性 (PSMA) の判定

前処理 (無限報酬状態の除去・状態集合と上界の計算)、エンコーディングの選択、
MILP の求解、戦略の抽出、厳密評価による再検証を順に行う。
Achievable は再検証に通った戦略がある場合にのみ返す。
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from src.analysis.bounds import Bounds, compute_reward_upper_bounds
from src.analysis.state_sets import ObjectiveStateSets, compute_zero_states, restrict_to_finite
from src.core.exceptions import (
    AmbiguousSelectionError,
    InitialInfiniteError,
    NotTotalRewardError,
    NumericalTroubleError,
)
from src.core.mdp import Mdp
from src.core.numbers import Extended, is_infinite
from src.core.objectives import Query, project_query
from src.core.strategy import PureStationaryStrategy
from src.encodings.artifacts import BASE, FLOW, EncodingArtifacts
from src.encodings.base_encoding import encode_base
from src.encodings.conversion import convert_to_total_reward
from src.encodings.ec_encoding import encode_ec_constraints
from src.encodings.flow_encoding import encode_ec_constraints_flow, encode_total_reward, flow_visit_bounds
from src.encodings.infinite_encoding import encode_infinite_max, infinite_objectives
from src.evaluation.exact_evaluator import evaluate_query, meets_point
from src.milp.branch_and_bound import solve
from src.milp.lp_writer import write_lp
from src.milp.model import MilpSolution, SolverOptions
from src.utils.monitoring import monitor_performance

logger = logging.getLogger(__name__)

AUTO = "auto"
ENCODINGS = (AUTO, BASE, FLOW)
# ε がこれ以下の解は狭義不等式を満たしていないとみなす
STRICT_TOLERANCE = 1e-7


class PsmaStatus(Enum):
    ACHIEVABLE = "Achievable"
    NOT_ACHIEVABLE = "NotAchievable"
    VERIFICATION_FAILED = "VerificationFailed"


@dataclass(frozen=True)
class PsmaResult:
    """
    PSMA の判定結果

    strategy と values は元のモデル上の戦略とその厳密な値ベクトル
    (VerificationFailed の場合は検証に失敗した最後の戦略)。
    """
    status: PsmaStatus
    strategy: Optional[PureStationaryStrategy] = None
    values: Optional[Tuple[Extended, ...]] = None
    flavor: Optional[str] = None
    reason: str = ""
    nodes: int = 0
    encoding_size: Dict[str, int] = field(default_factory=dict)

    @property
    def achievable(self) -> bool:
        return self.status is PsmaStatus.ACHIEVABLE


@dataclass
class PreparedEncoding:
    """
    前処理済みのエンコーディング

    mdp / query は実際にエンコードしたモデルとクエリ (無限報酬状態の除去や
    総報酬への変換の後)。kept は元のクエリのうちエンコードした目的の番号。
    verdict が設定されている場合は MILP を解くまでもなく NotAchievable。
    """
    original: Mdp
    original_query: Query
    mdp: Optional[Mdp] = None
    query: Optional[Query] = None
    kept: Tuple[int, ...] = ()
    artifacts: Optional[EncodingArtifacts] = None
    verdict: Optional[str] = None
    infinite: Tuple[int, ...] = ()

    @property
    def trivial(self) -> bool:
        """エンコードすべき目的が残っていない (全て閾値 ∞ の最小化目的)"""
        return self.verdict is None and not self.kept

    def lift(self, sigma: PureStationaryStrategy) -> PureStationaryStrategy:
        """エンコード側の戦略を元のモデルの戦略へ名前で写す (未対応の状態は最小の行動)"""
        return PureStationaryStrategy.from_labels(self.original, sigma.to_labels(self.mdp), default_lowest=True)


def _objective_sets(m: Mdp, q: Query) -> List[ObjectiveStateSets]:
    return [compute_zero_states(m, obj) for obj in q.objectives]


def _base_bounds(m: Mdp, q: Query, sets: Sequence[ObjectiveStateSets]) -> Bounds:
    bounds = Bounds()
    for j, obj in enumerate(q.objectives):
        if not sets[j].maybe:
            continue
        upper = compute_reward_upper_bounds(m, obj)
        for s in sets[j].maybe:
            bounds.reward_upper[(s, j)] = upper[s]
    return bounds


def prepare_encoding(
    m: Mdp, q: Query, p: Optional[Sequence[Extended]], encoding: str = AUTO
) -> PreparedEncoding:
    """
    判定用の MILP を構築する

    Args:
        p: 閾値。None の場合は閾値の行を持たないモデルを作る (パレート近似で使用)
        encoding: "auto" / "base" / "flow"

    Raises:
        NotTotalRewardError: "flow" が指定されたが総報酬目的へ変換できない
    """
    if encoding not in ENCODINGS:
        raise ValueError(f"不明なエンコーディングです: {encoding}")
    q.validate(m)
    if p is not None:
        q.check_point(p)
    prepared = PreparedEncoding(m, q)

    kept = [
        j for j, obj in enumerate(q.objectives)
        if p is None or obj.maximizing or not is_infinite(p[j])
    ]
    prepared.kept = tuple(kept)
    if not kept:
        return prepared
    sub_q = Query(tuple(q[j] for j in kept))
    sub_p = None if p is None else tuple(p[j] for j in kept)

    try:
        restricted = restrict_to_finite(m, sub_q)
    except InitialInfiniteError as e:
        logger.info(f"Every strategy has infinite value for a minimizing objective: {e}")
        prepared.verdict = str(e)
        return prepared
    if restricted is not m:
        sub_q = project_query(sub_q, m, restricted)

    sets = _objective_sets(restricted, sub_q)
    infinite = infinite_objectives(restricted, sub_q, sets)
    prepared.infinite = tuple(kept[j] for j in infinite)
    if sub_p is not None:
        for j, obj in enumerate(sub_q.objectives):
            if obj.maximizing and is_infinite(sub_p[j]) and j not in infinite:
                prepared.verdict = f"目的 {kept[j]} は有限の値しか取れないため閾値 ∞ を満たせません"
                return prepared

    conversion = convert_to_total_reward(sub_q, restricted)
    if encoding == FLOW and conversion is None:
        raise NotTotalRewardError("ゴール集合が異なり離脱可能なため総報酬目的へ変換できません")
    use_flow = conversion is not None and not infinite and encoding != BASE
    if encoding == FLOW and infinite:
        logger.warning("Flow encoding does not support infinite rewards; falling back to the base encoding")

    if use_flow:
        mf, qf = conversion.mdp, conversion.query
        flow_sets = _objective_sets(mf, qf)
        visit = flow_visit_bounds(mf, qf, flow_sets)
        art = encode_total_reward(mf, qf, sub_p, visit, flow_sets)
        encode_ec_constraints_flow(art, mf, qf, visit)
        prepared.mdp, prepared.query = mf, qf
        logger.debug(f"Using flow encoding ({conversion.rule})")
    else:
        bounds = _base_bounds(restricted, sub_q, sets)
        art = encode_base(restricted, sub_q, sub_p, bounds, sets, free=infinite)
        encode_ec_constraints(art, restricted, sub_q)
        encode_infinite_max(art, restricted, sub_q, sub_p, infinite)
        prepared.mdp, prepared.query = restricted, sub_q
    prepared.artifacts = art
    logger.info(f"Prepared {art.flavor} encoding: {art.summary()}")
    return prepared


def extract_strategy(art: EncodingArtifacts, solution: MilpSolution) -> PureStationaryStrategy:
    """
    a_{s,α} > 0.5 の行動から戦略を読み出す

    Raises:
        AmbiguousSelectionError: ある状態で選ばれた行動が1つでない
    """
    m = art.mdp
    choices = []
    for s in range(m.num_states):
        selected = [a for a in range(len(m.actions[s])) if solution.value(art.a_vars[(s, a)]) > 0.5]
        if len(selected) != 1:
            raise AmbiguousSelectionError(
                f"状態 {m.states[s]} で選択された行動が {len(selected)} 個あります"
            )
        choices.append(selected[0])
    return PureStationaryStrategy(tuple(choices))


def _verified(
    prepared: PreparedEncoding, sigma: PureStationaryStrategy, p: Sequence[Extended]
) -> Tuple[PureStationaryStrategy, Tuple[Extended, ...], bool]:
    lifted = prepared.lift(sigma) if prepared.mdp is not None else sigma
    values = evaluate_query(prepared.original, lifted, prepared.original_query)
    return lifted, values, meets_point(prepared.original_query, values, p)


def _numerical_fallbacks(
    prepared: PreparedEncoding, m: Mdp, q: Query, p: Sequence[Extended], options: SolverOptions
) -> Iterator[Tuple[PreparedEncoding, SolverOptions]]:
    """単体法が数値的に行き詰まったときに順に試す (エンコーディング, 設定)"""
    yield prepared, options.stabilized()
    other = BASE if prepared.artifacts.flavor == FLOW else FLOW
    try:
        alternative = prepare_encoding(m, q, p, other)
    except NotTotalRewardError:
        return
    if alternative.artifacts is None or alternative.artifacts.flavor != other:
        return
    yield alternative, options
    yield alternative, options.stabilized()


def _solve_prepared(
    prepared: PreparedEncoding, m: Mdp, q: Query, p: Sequence[Extended], options: SolverOptions
) -> Tuple[PreparedEncoding, Optional[MilpSolution]]:
    """MILP を解く。数値的に解けなければ設定とエンコーディングを変えて解き直す (全て失敗したら解は None)"""
    try:
        return prepared, solve(prepared.artifacts.model, options)
    except NumericalTroubleError as e:
        logger.warning(f"Numerical trouble in the {prepared.artifacts.flavor} encoding: {e}")
    for candidate, opts in _numerical_fallbacks(prepared, m, q, p, options):
        mode = "stable simplex" if opts.stable else "default simplex"
        logger.info(f"Retrying with the {candidate.artifacts.flavor} encoding and {mode}")
        try:
            return candidate, solve(candidate.artifacts.model, opts)
        except NumericalTroubleError as e:
            logger.warning(f"Numerical trouble persists ({candidate.artifacts.flavor}, {mode}): {e}")
    return prepared, None


@monitor_performance("psma.check")
def psma_check(
    m: Mdp,
    q: Query,
    p: Sequence[Extended],
    encoding: str = AUTO,
    options: Optional[SolverOptions] = None,
    export_lp: Optional[str] = None,
) -> PsmaResult:
    """
    p が純粋定常戦略で達成可能かを判定する

    単体法が数値的に行き詰まった場合は、安全モードの単体法、もう一方のエンコーディングの順に
    解き直す。全て失敗した場合は VerificationFailed を返す。

    Args:
        encoding: "auto" (総報酬へ変換できればフロー) / "base" / "flow"
        export_lp: 指定した場合は構築した MILP を LP 形式で書き出す
    """
    options = options or SolverOptions.from_config()
    prepared = prepare_encoding(m, q, p, encoding)

    if prepared.verdict is not None:
        return PsmaResult(PsmaStatus.NOT_ACHIEVABLE, reason=prepared.verdict)
    if prepared.trivial:
        sigma = PureStationaryStrategy(tuple(0 for _ in range(m.num_states)))
        values = evaluate_query(m, sigma, q)
        return PsmaResult(PsmaStatus.ACHIEVABLE, sigma, values, reason="全ての閾値が ∞ の最小化目的です")

    if export_lp:
        write_lp(prepared.artifacts.model, export_lp)
        logger.info(f"Exported MILP to {export_lp}")

    attempts = [options, options.tightened(100)]
    nodes = 0
    last: Optional[Tuple[PureStationaryStrategy, Tuple[Extended, ...]]] = None
    for attempt, opts in enumerate(attempts):
        used, solution = _solve_prepared(prepared, m, q, p, opts)
        art = used.artifacts
        size = art.summary()
        if solution is None:
            strategy, values = last if last is not None else (None, None)
            return PsmaResult(
                PsmaStatus.VERIFICATION_FAILED, strategy, values, art.flavor, nodes=nodes, encoding_size=size,
                reason="MILP を数値的に解けませんでした",
            )
        nodes += solution.nodes
        if not solution.is_feasible:
            return PsmaResult(PsmaStatus.NOT_ACHIEVABLE, flavor=art.flavor, nodes=nodes, encoding_size=size)

        sigma = extract_strategy(art, solution)
        lifted, values, ok = _verified(used, sigma, p)
        if ok:
            return PsmaResult(PsmaStatus.ACHIEVABLE, lifted, values, art.flavor, nodes=nodes, encoding_size=size)
        last = (lifted, values)

        if art.eps is not None and solution.value(art.eps) <= STRICT_TOLERANCE:
            logger.info(f"Strict inequality slack {solution.value(art.eps):.3e} is zero; point not achievable")
            return PsmaResult(
                PsmaStatus.NOT_ACHIEVABLE, flavor=art.flavor, nodes=nodes, encoding_size=size,
                reason="無限の値を要求する狭義不等式を満たす解がありません",
            )
        logger.warning(
            f"Exact recheck failed for {lifted.choices} (values {values}); attempt {attempt + 1} of {len(attempts)}"
        )

    return PsmaResult(
        PsmaStatus.VERIFICATION_FAILED, last[0], last[1], art.flavor, nodes=nodes, encoding_size=size,
        reason="MILP の解から得た戦略が厳密な再検証に失敗しました",
    )
