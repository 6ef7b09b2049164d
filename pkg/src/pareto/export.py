"""
パレート近似結果の出力

JSON (見つかった点と証拠の戦略、達成不能領域、残った候補領域)、
CSV (目的ごとに1列) と gnuplot 用の空白区切り表を書き出す。
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.core.mdp import Mdp
from src.core.numbers import Extended, format_rational, to_float
from src.core.objectives import Query
from src.pareto.pareto_approximator import FoundPoint, ParetoApprox
from src.pareto.regions import Region

logger = logging.getLogger(__name__)


def objective_columns(q: Query) -> List[str]:
    """CSV の列名 (obj0_max_reach, obj1_min_r のように目的の番号・向き・報酬名)"""
    columns = []
    for j, obj in enumerate(q.objectives):
        direction = "max" if obj.maximizing else "min"
        columns.append(f"obj{j}_{direction}_{obj.reward.name}")
    return columns


def region_to_dict(region: Region) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "id": region.rid,
        "halfspaces": [
            {"normal": [format_rational(n) for n in h.normal], "offset": format_rational(h.offset)}
            for h in region.halfspaces
        ],
    }
    if region.vertices is not None:
        doc["vertices"] = [[format_rational(x) for x in v] for v in region.vertices]
    return doc


def _point_to_dict(m: Mdp, point: FoundPoint) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "values": [format_rational(v) for v in point.values],
        "gain": [format_rational(g) for g in point.gain],
    }
    if point.mealy is not None:
        doc["strategy"] = point.mealy.to_dict(m)
    else:
        doc["strategy"] = point.strategy.to_labels(m)
    return doc


def approx_to_dict(m: Mdp, approx: ParetoApprox) -> Dict[str, Any]:
    """
    ParetoApprox を JSON に変換できる辞書にする

    m は証拠の戦略のラベル付けに使う (メモリ付きの場合は元のモデル、
    それ以外は近似を行ったモデル)。
    """
    return {
        "status": approx.status,
        "flavor": approx.flavor,
        "eps": [format_rational(e) for e in approx.eps],
        "box": {
            "lower": [format_rational(x) for x in approx.lower],
            "upper": [format_rational(x) for x in approx.upper],
        },
        "points": [_point_to_dict(m, f) for f in approx.pareto_points()],
        "found": len(approx.found),
        "solves": approx.solves,
        "unachievable": [region_to_dict(r) for r in approx.unachievable],
        "candidates": [region_to_dict(r) for r in approx.candidates],
    }


def points_frame(q: Query, points: Sequence[Sequence[Extended]]) -> pd.DataFrame:
    """点の集合を目的ごとに1列の DataFrame にする (値は float、∞ は inf)"""
    columns = objective_columns(q)
    rows = [[to_float(v) for v in p] for p in points]
    return pd.DataFrame(rows, columns=columns)


def write_points_csv(q: Query, points: Sequence[Sequence[Extended]], path: str) -> None:
    points_frame(q, points).to_csv(path, index=False)
    logger.info(f"Wrote {len(points)} points to {path}")


def write_gnuplot(q: Query, points: Sequence[Sequence[Extended]], path: str) -> None:
    """gnuplot の plot 'file' using 1:2 でそのまま読める空白区切りの表"""
    df = points_frame(q, points)
    with open(path, "w", encoding="utf-8") as f:
        f.write("# " + " ".join(df.columns) + "\n")
        df.to_csv(f, sep=" ", header=False, index=False)
    logger.info(f"Wrote gnuplot table {path}")


def output_paths(out: str) -> Tuple[Path, Path, Path]:
    """--out の指定から JSON / CSV / dat のパスを決める (拡張子は置き換える)"""
    base = Path(out)
    stem = base.with_suffix("") if base.suffix else base
    return stem.with_suffix(".json"), stem.with_suffix(".csv"), stem.with_suffix(".dat")


def write_approximation(m: Mdp, approx: ParetoApprox, out: str, doc: Optional[Dict[str, Any]] = None) -> List[str]:
    """
    近似結果を JSON・CSV・gnuplot 表の3ファイルに書き出す

    Returns:
        書き出したファイルのパス
    """
    json_path, csv_path, dat_path = output_paths(out)
    doc = doc if doc is not None else approx_to_dict(m, approx)
    json_path.write_text(json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8")
    points = approx.points()
    write_points_csv(approx.query, points, str(csv_path))
    write_gnuplot(approx.query, points, str(dat_path))
    return [str(json_path), str(csv_path), str(dat_path)]
