"""
分枝限定法による MILP ソルバー

- ノード選択: 最良上界優先。上界が等しい場合は後に作られたノードを先に調べる
- 分枝変数: インデックス最小の非整数の二値変数
- 子ノードは値1の側を先に調べる
- 整数解が得られたら二値変数を固定して LP を解き直し、割当を整える
- 解き直しが実行不能なら (許容誤差内で整数に見えただけ)、未固定で最も 1/2 に近い二値変数で分枝する
"""
import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.exceptions import IterationLimitError
from src.milp.model import MilpModel, MilpSolution, SolveStatus, SolverOptions
from src.milp.simplex import LpProblem, LpStatus, SimplexSolver
from src.utils.monitoring import monitor_performance, performance_monitor


@dataclass(order=True)
class _Node:
    priority: Tuple[float, int]
    fixings: Dict[int, int] = field(compare=False)
    depth: int = field(compare=False, default=0)


class BranchAndBound:
    """MILP を LP 緩和の分枝限定法で解く"""

    def __init__(self, model: MilpModel, options: Optional[SolverOptions] = None):
        self.logger = logging.getLogger(__name__)
        self.model = model
        self.options = options or SolverOptions()
        self.simplex = SimplexSolver(self.options)
        a, senses, rhs, cost, lower, upper = model.to_arrays()
        self.problem = LpProblem(a, senses, rhs, cost, lower, upper)
        self.binaries = model.binary_indices()
        self.nodes = 0
        self.lp_iterations = 0

    def _solve_lp(self, fixings: Dict[int, int]):
        lower = self.problem.lower.copy()
        upper = self.problem.upper.copy()
        for var, value in fixings.items():
            lower[var] = upper[var] = float(value)
        problem = LpProblem(self.problem.a, self.problem.senses, self.problem.rhs, self.problem.cost, lower, upper)
        result = self.simplex.solve(problem)
        self.lp_iterations += result.iterations
        return result

    def _first_fractional(self, x: np.ndarray) -> Optional[int]:
        tol = self.options.integrality_tol
        for var in self.binaries:
            if min(x[var], 1.0 - x[var]) > tol:
                return var
        return None

    def _most_fractional(self, x: np.ndarray, fixings: Dict[int, int]) -> Optional[int]:
        """未固定の二値変数のうち min(x, 1 - x) が最大のもの (同値ならインデックス最小)"""
        best, best_frac = None, -1.0
        for var in self.binaries:
            if var in fixings:
                continue
            frac = min(x[var], 1.0 - x[var])
            if frac > best_frac:
                best, best_frac = var, frac
        return best

    def _polish(self, x: np.ndarray) -> Optional[np.ndarray]:
        """二値変数を丸めて固定し、連続変数を解き直す"""
        fixings = {var: int(round(x[var])) for var in self.binaries}
        result = self._solve_lp(fixings)
        if result.status is not LpStatus.OPTIMAL:
            self.logger.warning("Rounded integral solution became infeasible after fixing binaries; branching further")
            return None
        values = result.x.copy()
        for var, value in fixings.items():
            values[var] = float(value)
        return values

    def relax(self) -> MilpSolution:
        """LP 緩和 (二値変数を [0, 1] の連続変数として扱う)"""
        result = self._solve_lp({})
        self.nodes = 1
        if result.status is not LpStatus.OPTIMAL:
            return MilpSolution(SolveStatus.INFEASIBLE, nodes=1, lp_iterations=self.lp_iterations)
        values = tuple(float(v) for v in result.x)
        return MilpSolution(
            SolveStatus.OPTIMAL, values, result.objective, 1, self.lp_iterations, self.model.max_violation(values)
        )

    def solve(self) -> MilpSolution:
        has_objective = self.model.objective is not None
        start = time.monotonic()
        counter = 0
        heap: List[_Node] = [_Node((-np.inf, 0), {})]
        incumbent: Optional[np.ndarray] = None
        incumbent_value = -np.inf
        limit_hit = None

        while heap:
            node = heapq.heappop(heap)
            bound = -node.priority[0]
            if incumbent is not None and bound <= incumbent_value + self._gap(incumbent_value):
                continue
            if self.nodes >= self.options.node_limit:
                limit_hit = f"ノード数の上限 {self.options.node_limit}"
                break
            if self.options.time_limit is not None and time.monotonic() - start > self.options.time_limit:
                limit_hit = f"時間制限 {self.options.time_limit} 秒"
                break

            self.nodes += 1
            result = self._solve_lp(node.fixings)
            if result.status is not LpStatus.OPTIMAL:
                continue
            if incumbent is not None and result.objective <= incumbent_value + self._gap(incumbent_value):
                continue

            var = self._first_fractional(result.x)
            if var is None:
                values = self._polish(result.x)
                if values is None:
                    var = self._most_fractional(result.x, node.fixings)
                    if var is None:
                        continue
                    self.logger.debug(f"Branching on near-integral binary {var} at node {self.nodes}")
                    counter = self._branch(heap, node, var, result.objective, counter)
                    continue
                value = float(self.problem.cost @ values)
                if incumbent is None or value > incumbent_value:
                    incumbent, incumbent_value = values, value
                    self.logger.debug(f"New incumbent {value:.9g} at node {self.nodes} (depth {node.depth})")
                if not has_objective:
                    break
                continue

            counter = self._branch(heap, node, var, result.objective, counter)

        performance_monitor.record_metric("milp.nodes", self.nodes)
        performance_monitor.record_metric("milp.lp_iterations", self.lp_iterations)

        if incumbent is None:
            if limit_hit is not None:
                raise IterationLimitError(f"{limit_hit}に達しましたが実行可能解は見つかっていません")
            self.logger.debug(f"MILP infeasible after {self.nodes} nodes")
            return MilpSolution(SolveStatus.INFEASIBLE, nodes=self.nodes, lp_iterations=self.lp_iterations)

        status = SolveStatus.OPTIMAL
        if limit_hit is not None:
            self.logger.warning(f"Branch and bound stopped at {limit_hit}; returning best solution found")
            status = SolveStatus.FEASIBLE
        values = tuple(float(v) for v in incumbent)
        violation = self.model.max_violation(values)
        if violation > self.options.feasibility_tol * 1e3:
            self.logger.warning(f"Solution violates constraints by {violation:.3e}")
        return MilpSolution(status, values, incumbent_value, self.nodes, self.lp_iterations, violation)

    @staticmethod
    def _branch(heap: List[_Node], node: _Node, var: int, bound: float, counter: int) -> int:
        for branch in (0, 1):
            counter += 1
            fixings = dict(node.fixings)
            fixings[var] = branch
            heapq.heappush(heap, _Node((-bound, -counter), fixings, node.depth + 1))
        return counter

    @staticmethod
    def _gap(value: float) -> float:
        return 1e-9 * (1.0 + abs(value))


@monitor_performance("milp.solve")
def solve(model: MilpModel, options: Optional[SolverOptions] = None) -> MilpSolution:
    """MILP を解く (目的関数がない場合は最初に見つかった実行可能解を返す)"""
    solver = BranchAndBound(model, options)
    solution = solver.solve()
    solver.logger.info(
        f"Solved {model.name}: {solution.status.value} "
        f"({model.num_variables} vars, {model.num_binaries} binaries, {solution.nodes} nodes)"
    )
    return solution


def lp_relax(model: MilpModel, options: Optional[SolverOptions] = None) -> MilpSolution:
    """連続緩和を解く"""
    return BranchAndBound(model, options).relax()
