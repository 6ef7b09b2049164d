#!/usr/bin/env python3
"""
コマンドラインインターフェース

    python -m src.cli check fig1 q0 0.7,0.7
    python -m src.cli pareto fig1 q0 --eps 0.01 --out results/fig1
    python -m src.cli oracle fig1 q0
    python -m src.cli evaluate model.json strategy.json q0
    python -m src.cli generate subset-sum --weights 3,5,7 --target 8

標準出力には JSON のみを書き、ログは標準エラー出力に出す。
終了コード: 0 = 達成可能 / 正常終了、1 = 達成不能、2 = エラー
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

from src.config import Config
from src.core.exceptions import ModelCheckingError, UnknownNameError
from src.core.mdp import Mdp
from src.core.numbers import format_rational
from src.core.objectives import Query
from src.core.strategy import PureStationaryStrategy
from src.encodings.achievability import ENCODINGS, PsmaStatus, psma_check
from src.evaluation.brute_force import brute_force_pareto_detailed, brute_force_witness
from src.evaluation.exact_evaluator import evaluate_query
from src.instances.builtins import BUILTINS, DEFAULT_QUERY, builtin_model_file
from src.instances.random_models import RandomMdpParams, random_mdp
from src.instances.subset_sum import SubsetSumInstance, gen_subset_sum
from src.memory.bounded_memory import pbma_check
from src.memory.mealy import MealyStrategy, evaluate_mealy_query
from src.memory.memory_structure import COMPLETE, MEMORY_KINDS
from src.milp.model import SolverOptions
from src.pareto.export import approx_to_dict, write_approximation, write_points_csv
from src.pareto.pareto_approximator import approximate_pareto, approximate_pareto_with_memory
from src.parsers.model_parser import ModelFile, load_model, model_file_from_query, point_from_text
from src.parsers.strategy_parser import load_strategy
from src.utils.monitoring import performance_monitor

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_ACHIEVABLE = 1
EXIT_ERROR = 2

GENERATORS = ("builtin", "subset-sum", "random")


def resolve_model(name: str) -> ModelFile:
    """ファイルパスまたは組み込みモデル名からモデルファイルを得る"""
    if os.path.exists(name):
        return load_model(name)
    if name in BUILTINS:
        return builtin_model_file(name)
    raise UnknownNameError(f"モデルファイルまたは組み込みモデル {name} が見つかりません")


def resolve_query(model_file: ModelFile, query_id: Optional[str], model_name: str) -> Query:
    if query_id is None:
        query_id = DEFAULT_QUERY.get(model_name) or next(iter(model_file.queries), None)
        if query_id is None:
            raise UnknownNameError("モデルファイルにクエリが定義されていません")
    return model_file.query(query_id)


def solver_options(args: argparse.Namespace) -> SolverOptions:
    options = SolverOptions.from_config()
    if getattr(args, "time_limit", None) is not None:
        options = replace(options, time_limit=args.time_limit)
    return options


def _values(values) -> Optional[List[str]]:
    return None if values is None else [format_rational(v) for v in values]


def _strategy_doc(m: Mdp, strategy) -> Optional[Dict[str, Any]]:
    if strategy is None:
        return None
    if isinstance(strategy, MealyStrategy):
        return strategy.to_dict(m)
    return strategy.to_labels(m)


def _emit(doc: Dict[str, Any], args: argparse.Namespace) -> None:
    if getattr(args, "metrics", False):
        doc["metrics"] = performance_monitor.summary()
    print(json.dumps(doc, ensure_ascii=False, indent=2))


def cmd_check(args: argparse.Namespace) -> int:
    """点の達成可能性を判定する (--memory 指定時は有限メモリ戦略)"""
    model_file = resolve_model(args.model)
    m = model_file.mdp
    q = resolve_query(model_file, args.query, args.model)
    p = point_from_text(args.point)
    options = solver_options(args)

    if args.memory is not None or args.memory_kind != COMPLETE:
        k = args.memory if args.memory is not None else 1
        result = pbma_check(m, q, k, p, args.memory_kind, args.encoding, options, args.export_lp)
        status = result.status
        doc = {
            "verdict": status.value,
            "memory": {"kind": result.memory_kind, "size": result.memory_size, "completeness": result.completeness},
            "product_states": result.product_states,
            "strategy": _strategy_doc(m, result.strategy),
            "values": _values(result.values),
            "encoding": result.psma.flavor,
        }
    else:
        result = psma_check(m, q, p, args.encoding, options, args.export_lp)
        status = result.status
        doc = {
            "verdict": status.value,
            "strategy": _strategy_doc(m, result.strategy),
            "values": _values(result.values),
            "encoding": result.flavor,
            "encoding_size": result.encoding_size,
            "nodes": result.nodes,
        }
        if result.reason:
            doc["reason"] = result.reason
    doc["point"] = _values(p)
    if args.export_lp:
        doc["lp_file"] = args.export_lp
    _emit(doc, args)
    if status is PsmaStatus.ACHIEVABLE:
        return EXIT_OK
    if status is PsmaStatus.NOT_ACHIEVABLE:
        return EXIT_NOT_ACHIEVABLE
    return EXIT_ERROR


def cmd_pareto(args: argparse.Namespace) -> int:
    """パレートフロントの ε 近似を求める"""
    model_file = resolve_model(args.model)
    m = model_file.mdp
    q = resolve_query(model_file, args.query, args.model)
    options = solver_options(args)
    eps_absolute = True if args.eps_absolute else None

    if args.memory is not None or args.memory_kind != COMPLETE:
        k = args.memory if args.memory is not None else 1
        approx = approximate_pareto_with_memory(
            m, q, k, args.memory_kind, args.eps, eps_absolute, options, args.time_limit
        )
    else:
        approx = approximate_pareto(m, q, args.eps, eps_absolute, options, args.time_limit, args.encoding)
    doc = approx_to_dict(m, approx)
    if args.out:
        doc["files"] = write_approximation(m, approx, args.out, doc)
    _emit(doc, args)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    """全列挙で点を判定する、または厳密なパレート点集合を求める"""
    model_file = resolve_model(args.model)
    m = model_file.mdp
    q = resolve_query(model_file, args.query, args.model)

    if args.point is not None:
        p = point_from_text(args.point)
        sigma = brute_force_witness(m, q, p)
        doc = {
            "verdict": (PsmaStatus.ACHIEVABLE if sigma else PsmaStatus.NOT_ACHIEVABLE).value,
            "point": _values(p),
            "strategy": _strategy_doc(m, sigma),
            "values": _values(evaluate_query(m, sigma, q)) if sigma else None,
        }
        _emit(doc, args)
        return EXIT_OK if sigma else EXIT_NOT_ACHIEVABLE

    front = brute_force_pareto_detailed(m, q, threads=args.threads)
    doc = {"points": [{"values": _values(p), "strategy": _strategy_doc(m, s)} for p, s in front]}
    if args.out:
        write_points_csv(q, [p for p, _ in front], args.out)
        doc["files"] = [args.out]
    _emit(doc, args)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """戦略ファイルの厳密な値ベクトルを求める"""
    model_file = resolve_model(args.model)
    m = model_file.mdp
    q = resolve_query(model_file, args.query, args.model)
    strategy = load_strategy(m, args.strategy)
    if isinstance(strategy, PureStationaryStrategy):
        values = evaluate_query(m, strategy, q)
    else:
        values = evaluate_mealy_query(m, strategy, q)
    _emit({"values": _values(values), "strategy": _strategy_doc(m, strategy)}, args)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    """モデルファイルを生成する"""
    if args.kind == "builtin":
        model_file = builtin_model_file(args.name)
    elif args.kind == "subset-sum":
        weights = tuple(int(w) for w in args.weights.split(",") if w.strip())
        mdp, query, point = gen_subset_sum(SubsetSumInstance(weights, args.target))
        model_file = model_file_from_query(mdp, query)
        model_file.points["q0"] = [point]
    else:
        params = RandomMdpParams(
            num_states=args.states,
            max_actions=args.actions,
            num_objectives=args.objectives,
            finite_rewards=args.finite_rewards,
        )
        mdp, query = random_mdp(args.seed, params)
        model_file = model_file_from_query(mdp, query)

    text = model_file.dumps()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        logger.info(f"Wrote model to {args.out}")
        _emit({"model_file": args.out, "states": model_file.mdp.num_states}, args)
    else:
        print(text)
    return EXIT_OK


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("model", help="モデルファイル (JSON) または組み込みモデル名 (fig1, fig5a, fig5b)")
    parser.add_argument("query", nargs="?", default=None, help="クエリID (省略時は既定のクエリ)")


def _add_memory_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--memory", type=int, default=None, metavar="K", help="メモリサイズ")
    parser.add_argument("--memory-kind", choices=MEMORY_KINDS, default=COMPLETE, help="メモリ構造")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="多目的MDPの純粋戦略による達成可能性とパレート近似")
    parser.add_argument("--metrics", action="store_true", help="出力にメトリクスを含める")
    parser.add_argument("--threads", type=int, default=Config.THREADS, help="総当たり評価の並列数")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, help="ログレベル")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="点の達成可能性を判定する")
    check.add_argument("model")
    check.add_argument("query")
    check.add_argument("point", help="点 (例: 7/10,0.7)")
    _add_memory_arguments(check)
    check.add_argument("--encoding", choices=ENCODINGS, default="auto")
    check.add_argument("--export-lp", default=None, metavar="PATH", help="エンコーディングをLP形式で書き出す")
    check.add_argument("--time-limit", type=float, default=None, metavar="S")
    check.set_defaults(handler=cmd_check)

    pareto = sub.add_parser("pareto", help="パレートフロントの ε 近似")
    _add_model_arguments(pareto)
    pareto.add_argument("--eps", type=float, default=None, help=f"許容誤差 (既定 {Config.PARETO_EPS})")
    pareto.add_argument("--eps-absolute", action="store_true", help="eps を絶対誤差として使う")
    pareto.add_argument("--time-limit", type=float, default=None, metavar="S")
    pareto.add_argument("--out", default=None, metavar="PATH", help="JSON / CSV / gnuplot 表の出力先")
    pareto.add_argument("--encoding", choices=ENCODINGS, default="auto")
    _add_memory_arguments(pareto)
    pareto.set_defaults(handler=cmd_pareto)

    oracle = sub.add_parser("oracle", help="全列挙による判定・パレート点集合")
    _add_model_arguments(oracle)
    oracle.add_argument("point", nargs="?", default=None)
    oracle.add_argument("--out", default=None, metavar="PATH", help="パレート点のCSV出力先")
    oracle.set_defaults(handler=cmd_oracle)

    evaluate = sub.add_parser("evaluate", help="戦略の厳密な値")
    evaluate.add_argument("model")
    evaluate.add_argument("strategy", help="戦略ファイル (定常戦略または Mealy 戦略のJSON)")
    evaluate.add_argument("query", nargs="?", default=None)
    evaluate.set_defaults(handler=cmd_evaluate)

    generate = sub.add_parser("generate", help="モデルファイルを生成する")
    generate.add_argument("kind", choices=GENERATORS)
    generate.add_argument("--name", choices=sorted(BUILTINS), default="fig1")
    generate.add_argument("--weights", default="3,5,7", help="subset-sum の重み")
    generate.add_argument("--target", type=int, default=8, help="subset-sum の目標値")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--states", type=int, default=4)
    generate.add_argument("--actions", type=int, default=2)
    generate.add_argument("--objectives", type=int, default=2)
    generate.add_argument("--finite-rewards", action="store_true")
    generate.add_argument("--out", default=None, metavar="PATH")
    generate.set_defaults(handler=cmd_generate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    problems = Config.validate_config()
    if problems:
        print(json.dumps({"error": "ConfigurationError", "message": "; ".join(problems)}, ensure_ascii=False))
        return EXIT_ERROR
    try:
        return args.handler(args)
    except (ModelCheckingError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps({"error": type(e).__name__, "message": str(e)}, ensure_ascii=False))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
