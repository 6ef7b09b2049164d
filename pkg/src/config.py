"""
設定管理モジュール
"""
import os
from typing import Dict, Any, List
import logging


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Config:
    """アプリケーション設定管理クラス"""

    # 基本設定
    APP_NAME = "momdp-check"
    VERSION = "1.0.0"
    DEBUG = _env_bool("DEBUG", "false")
    TESTING = _env_bool("TESTING", "false")

    # ソルバー設定
    FEASIBILITY_TOL = float(os.getenv("MOMDP_FEASIBILITY_TOL", "1e-9"))
    INTEGRALITY_TOL = float(os.getenv("MOMDP_INTEGRALITY_TOL", "1e-6"))
    NODE_LIMIT = int(os.getenv("MOMDP_NODE_LIMIT", "200000"))
    TIME_LIMIT = float(os.getenv("MOMDP_TIME_LIMIT", "0"))  # 秒 (0 = 無制限)
    LP_ITERATION_LIMIT = int(os.getenv("MOMDP_LP_ITERATION_LIMIT", "50000"))

    # 上限設定
    STRATEGY_CAP = int(os.getenv("MOMDP_STRATEGY_CAP", "1000000"))
    PRODUCT_STATE_CAP = int(os.getenv("MOMDP_PRODUCT_STATE_CAP", "1000000"))
    BOUND_WARNING = float(os.getenv("MOMDP_BOUND_WARNING", "1e9"))

    # パレート近似設定
    PARETO_EPS = float(os.getenv("MOMDP_PARETO_EPS", "0.01"))
    PARETO_EPS_ABSOLUTE = _env_bool("MOMDP_PARETO_EPS_ABSOLUTE", "false")

    # 並列処理設定
    THREADS = int(os.getenv("MOMDP_THREADS", "1"))

    # ログ設定
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

    # 監視設定
    ENABLE_METRICS = _env_bool("ENABLE_METRICS", "true")

    @classmethod
    def get_solver_config(cls) -> Dict[str, Any]:
        """MILPソルバー関連の設定を取得"""
        return {
            "feasibility_tol": cls.FEASIBILITY_TOL,
            "integrality_tol": cls.INTEGRALITY_TOL,
            "node_limit": cls.NODE_LIMIT,
            "time_limit": cls.TIME_LIMIT if cls.TIME_LIMIT > 0 else None,
            "lp_iteration_limit": cls.LP_ITERATION_LIMIT,
        }

    @classmethod
    def get_limits_config(cls) -> Dict[str, Any]:
        """列挙・積構成の上限設定を取得"""
        return {
            "strategy_cap": cls.STRATEGY_CAP,
            "product_state_cap": cls.PRODUCT_STATE_CAP,
            "bound_warning": cls.BOUND_WARNING,
        }

    @classmethod
    def get_pareto_config(cls) -> Dict[str, Any]:
        """パレート近似関連の設定を取得"""
        return {
            "eps": cls.PARETO_EPS,
            "eps_absolute": cls.PARETO_EPS_ABSOLUTE,
            "threads": cls.THREADS,
        }

    @classmethod
    def validate_config(cls) -> List[str]:
        """設定の妥当性を検証し、問題点の一覧を返す"""
        problems = []
        positive = {
            "MOMDP_FEASIBILITY_TOL": cls.FEASIBILITY_TOL,
            "MOMDP_INTEGRALITY_TOL": cls.INTEGRALITY_TOL,
            "MOMDP_NODE_LIMIT": cls.NODE_LIMIT,
            "MOMDP_LP_ITERATION_LIMIT": cls.LP_ITERATION_LIMIT,
            "MOMDP_STRATEGY_CAP": cls.STRATEGY_CAP,
            "MOMDP_PRODUCT_STATE_CAP": cls.PRODUCT_STATE_CAP,
            "MOMDP_PARETO_EPS": cls.PARETO_EPS,
            "MOMDP_THREADS": cls.THREADS,
        }
        for name, value in positive.items():
            if value <= 0:
                problems.append(f"{name} は正の値である必要があります: {value}")
        if cls.TIME_LIMIT < 0:
            problems.append(f"MOMDP_TIME_LIMIT は0以上である必要があります: {cls.TIME_LIMIT}")
        if cls.INTEGRALITY_TOL >= 0.5:
            problems.append(f"MOMDP_INTEGRALITY_TOL が大きすぎます: {cls.INTEGRALITY_TOL}")

        if problems:
            logging.error(f"Invalid configuration: {problems}")
        return problems
