"""
純粋定常戦略のパレートフロントの ε 近似

利得空間の候補領域を作業リストに持ち、領域ごとに重み付き和を最大化する MILP を解く。
解が得られれば戦略を厳密に再評価した点を記録し、重み方向の上側を達成不能として
残りを分割する。実行不能なら領域全体が達成不能。
"""
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from src.config import Config
from src.core.exceptions import IterationLimitError, NumericalTroubleError, UnboundedRewardError
from src.core.mdp import Mdp
from src.core.numbers import Extended, is_infinite, parse_rational
from src.core.objectives import Query
from src.core.strategy import PureStationaryStrategy
from src.encodings.achievability import AUTO, PreparedEncoding, extract_strategy, prepare_encoding
from src.evaluation.exact_evaluator import evaluate_query
from src.milp.branch_and_bound import solve
from src.milp.model import MilpModel, Sense, SolverOptions
from src.pareto.regions import GainPoint, Region, box_region, choose_direction, covered, split_region
from src.utils.monitoring import monitor_performance

logger = logging.getLogger(__name__)

COMPLETE = "complete"
INCOMPLETE = "incomplete"
# 達成不能とする半空間の境界に加える余裕 (相対)
CUT_SLACK = 1e-7


@dataclass(frozen=True)
class FoundPoint:
    """values は元の値、gain は利得空間の座標"""
    values: Tuple[Extended, ...]
    gain: GainPoint
    strategy: PureStationaryStrategy
    mealy: Optional[object] = None


@dataclass
class ParetoApprox:
    query: Query
    eps: Tuple[Fraction, ...]
    lower: Tuple[Fraction, ...] = ()
    upper: Tuple[Fraction, ...] = ()
    found: List[FoundPoint] = field(default_factory=list)
    unachievable: List[Region] = field(default_factory=list)
    candidates: List[Region] = field(default_factory=list)
    status: str = COMPLETE
    solves: int = 0
    flavor: Optional[str] = None

    @property
    def dimension(self) -> int:
        return self.query.dimension

    def pareto_points(self) -> List[FoundPoint]:
        """互いに支配しない見つかった点 (利得空間で比較、重複は除く)"""
        result: List[FoundPoint] = []
        for f in self.found:
            dominated = any(
                other.gain != f.gain and all(a >= b for a, b in zip(other.gain, f.gain))
                for other in self.found
            )
            if not dominated and all(r.gain != f.gain for r in result):
                result.append(f)
        return sorted(result, key=lambda f: f.gain)

    def points(self) -> List[Tuple[Extended, ...]]:
        return [f.values for f in self.pareto_points()]


def to_gain(q: Query, values: Sequence[Extended]) -> Optional[GainPoint]:
    """値ベクトルを利得に変換する (∞ を含む場合は None)"""
    if any(is_infinite(v) for v in values):
        return None
    return tuple(Fraction(v) if obj.maximizing else -Fraction(v) for obj, v in zip(q.objectives, values))


def _float_to_fraction(value: float) -> Fraction:
    return Fraction(value)


class RegionOptimizer:
    """
    前処理済みのエンコーディング上で、利得空間の領域内の重み付き和を最大化する
    """

    def __init__(self, prepared: PreparedEncoding, options: SolverOptions):
        self.prepared = prepared
        self.options = options
        self.art = prepared.artifacts
        self.logger = logging.getLogger(__name__)
        self.solves = 0

    def gain_expression(self, w: Sequence[Fraction]) -> Dict[int, Fraction]:
        expr: Dict[int, Fraction] = {}
        for j, weight in enumerate(w):
            for var, coef in self.art.gain_terms(j).items():
                expr[var] = expr.get(var, Fraction(0)) + Fraction(weight) * coef
        return expr

    def _model(self, region: Optional[Region], w: Sequence[Fraction]) -> MilpModel:
        model = self.art.model.copy()
        if region is not None:
            for k, h in enumerate(region.halfspaces):
                model.add_constraint(self.gain_expression(h.normal), Sense.GE, h.offset, f"region_{region.rid}_{k}")
        model.set_objective(self.gain_expression(w))
        return model

    def optimize(
        self, region: Optional[Region], w: Sequence[Fraction]
    ) -> Optional[Tuple[FoundPoint, Fraction]]:
        """
        領域内で w·g を最大化する

        Returns:
            (再評価した点, MILP の最適値) または実行不能なら None
        """
        model = self._model(region, w)
        try:
            solution = solve(model, self.options)
        except NumericalTroubleError as e:
            self.logger.warning(f"Numerical trouble in weighted optimization: {e}; retrying with stable simplex")
            solution = solve(model, self.options.stabilized())
        self.solves += 1
        if not solution.is_feasible:
            return None
        sigma = extract_strategy(self.art, solution)
        lifted = self.prepared.lift(sigma)
        values = evaluate_query(self.prepared.original, lifted, self.prepared.original_query)
        gain = to_gain(self.prepared.original_query, values)
        optimum = _float_to_fraction(solution.objective)
        if gain is None:
            self.logger.warning(f"Extracted strategy {lifted.choices} has infinite values {values}; point skipped")
            return None
        exact = sum((Fraction(x) * g for x, g in zip(w, gain)), Fraction(0))
        if abs(float(exact) - solution.objective) > 1e-6 * (1 + abs(solution.objective)):
            self.logger.warning(
                f"Exact weighted value {float(exact):.9g} differs from the MILP optimum {solution.objective:.9g}"
            )
        return FoundPoint(values, gain, lifted), optimum


def optimize_in_region(
    m: Mdp,
    q: Query,
    region: Optional[Region],
    w: Sequence[Fraction],
    options: Optional[SolverOptions] = None,
    encoding: str = AUTO,
) -> Optional[FoundPoint]:
    """
    利得空間の領域内で w·g を最大化する戦略を1つ求める (region=None なら制約なし)

    Returns:
        厳密に再評価した点、領域内に戦略がなければ None

    Raises:
        UnboundedRewardError: 無限の値を取り得る最大化目的がある
    """
    prepared = prepare_encoding(m, q, None, encoding)
    if prepared.infinite:
        raise UnboundedRewardError(f"目的 {list(prepared.infinite)} は無限の値を取り得ます")
    if prepared.artifacts is None:
        return None
    result = RegionOptimizer(prepared, options or SolverOptions.from_config()).optimize(region, w)
    return None if result is None else result[0]


def scale_eps(
    eps: float, lower: Sequence[Fraction], upper: Sequence[Fraction], absolute: bool = False
) -> Tuple[Fraction, ...]:
    """ε_j = ε·δ_j (δ_j = 最大値と最小値の差、0 の場合は ε)。absolute では全座標 ε"""
    base = parse_rational(eps)
    if base <= 0:
        raise ValueError(f"eps は正である必要があります: {eps}")
    if absolute:
        return tuple(base for _ in lower)
    return tuple(base * (hi - lo) if hi > lo else base for lo, hi in zip(lower, upper))


def compute_box(
    optimizer: RegionOptimizer, dimension: int
) -> Optional[Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...], List[FoundPoint]]]:
    """
    目的ごとに利得の最大値と最小値を単一目的の MILP で求める

    Returns:
        (下端, 上端, 最大化で得た点) または戦略が存在しない場合 None
    """
    lower, upper, extremes = [], [], []
    for j in range(dimension):
        top = [Fraction(0)] * dimension
        top[j] = Fraction(1)
        best = optimizer.optimize(None, top)
        bottom = [Fraction(0)] * dimension
        bottom[j] = Fraction(-1)
        worst = optimizer.optimize(None, bottom)
        if best is None or worst is None:
            return None
        point, optimum = best
        upper.append(max(point.gain[j], optimum))
        extremes.append(point)
        point, optimum = worst
        lower.append(min(point.gain[j], -optimum))
    return tuple(lower), tuple(upper), extremes


def _cut_value(exact: Fraction, optimum: Fraction) -> Fraction:
    top = max(exact, optimum)
    return top + Fraction(CUT_SLACK) * (1 + abs(top))


@monitor_performance("pareto.approximate")
def approximate_pareto(
    m: Mdp,
    q: Query,
    eps: Optional[float] = None,
    eps_absolute: Optional[bool] = None,
    options: Optional[SolverOptions] = None,
    time_limit: Optional[float] = None,
    encoding: str = AUTO,
) -> ParetoApprox:
    """
    純粋定常戦略の達成可能点の ε 近似を求める

    Args:
        eps: 相対許容誤差 (省略時は Config.PARETO_EPS)
        eps_absolute: True なら eps を全座標の絶対誤差として使う
        time_limit: 全体の時間制限 (秒)。超えた場合は status="incomplete" で途中結果を返す

    Raises:
        UnboundedRewardError: 無限の値を取り得る最大化目的がある
    """
    settings = Config.get_pareto_config()
    eps = settings["eps"] if eps is None else eps
    eps_absolute = settings["eps_absolute"] if eps_absolute is None else eps_absolute
    options = options or SolverOptions.from_config()
    start = time.monotonic()

    prepared = prepare_encoding(m, q, None, encoding)
    if prepared.infinite:
        raise UnboundedRewardError(
            f"目的 {list(prepared.infinite)} は無限の値を取り得るため近似できません"
        )
    approx = ParetoApprox(q, ())
    if prepared.artifacts is None:
        logger.info(f"No strategy with finite values: {prepared.verdict}")
        return approx
    approx.flavor = prepared.artifacts.flavor
    optimizer = RegionOptimizer(prepared, options)
    dim = q.dimension

    try:
        box = compute_box(optimizer, dim)
    except IterationLimitError as e:
        logger.warning(f"Could not compute the value box: {e}")
        approx.status = INCOMPLETE
        approx.solves = optimizer.solves
        return approx
    if box is None:
        approx.solves = optimizer.solves
        return approx
    lower, upper, _ = box
    approx.lower, approx.upper = lower, upper
    approx.eps = scale_eps(eps, lower, upper, eps_absolute)
    logger.info(f"Value box {[(float(l), float(h)) for l, h in zip(lower, upper)]}, eps {[float(e) for e in approx.eps]}")

    next_id = 1
    worklist: List[Region] = [box_region(0, lower, upper)]
    gains: List[GainPoint] = []
    while worklist:
        if time_limit is not None and time.monotonic() - start > time_limit:
            logger.warning(f"Time limit {time_limit}s reached with {len(worklist)} open regions")
            approx.status = INCOMPLETE
            break
        region = _pop(worklist, dim)
        if covered(region, gains, approx.eps):
            logger.debug(f"Region {region.rid} is covered by found points")
            continue
        w = choose_direction(gains, region, lower, upper)
        try:
            result = optimizer.optimize(region, w)
        except IterationLimitError as e:
            logger.warning(f"Region {region.rid} left open: {e}")
            worklist.append(region)
            approx.status = INCOMPLETE
            break
        if result is None:
            logger.debug(f"Region {region.rid} is unachievable")
            approx.unachievable.append(region)
            continue
        point, optimum = result
        approx.found.append(point)
        gains.append(point.gain)
        exact = sum((x * g for x, g in zip(w, point.gain)), Fraction(0))
        split = split_region(region, point.gain, w, _cut_value(exact, optimum), approx.eps, next_id)
        next_id += 1 + dim
        approx.unachievable.append(split.unachievable)
        worklist.extend(split.candidates)
        logger.info(
            f"Found point {[float(g) for g in point.gain]} in region {region.rid}; "
            f"{len(split.candidates)} new candidates, {len(worklist)} open"
        )

    approx.candidates = worklist
    approx.solves = optimizer.solves
    logger.info(f"Pareto approximation {approx.status}: {len(approx.pareto_points())} points, {approx.solves} MILP solves")
    return approx


def _pop(worklist: List[Region], dim: int) -> Region:
    """2目的では面積最大、それ以外では最後に作られた領域を取り出す"""
    if dim == 2:
        index = max(range(len(worklist)), key=lambda i: (worklist[i].area(), -worklist[i].rid))
        return worklist.pop(index)
    return worklist.pop()


@monitor_performance("pareto.approximate_with_memory")
def approximate_pareto_with_memory(
    m: Mdp,
    q: Query,
    k: int,
    kind: str = "complete",
    eps: Optional[float] = None,
    eps_absolute: Optional[bool] = None,
    options: Optional[SolverOptions] = None,
    time_limit: Optional[float] = None,
) -> ParetoApprox:
    """
    メモリ構造との積の上でパレート近似を行い、証拠の戦略を Mealy 戦略に戻す

    値は積の上の戦略の厳密値 (元のモデルでの Mealy 戦略の値と一致する)。
    """
    from src.memory.bounded_memory import build_product, translate
    from src.memory.product import lift_query

    prod = build_product(m, q, k, kind)
    lifted = lift_query(q, prod)
    approx = approximate_pareto(prod.mdp, lifted, eps, eps_absolute, options, time_limit)
    approx.query = q
    approx.found = [
        FoundPoint(f.values, f.gain, f.strategy, translate(prod, q, f.strategy)) for f in approx.found
    ]
    return approx
