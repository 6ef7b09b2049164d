"""
パフォーマンス監視とメトリクス収集モジュール

ソルバーのノード数・反復回数・実行時間や、総当たり評価のキャッシュ効率を記録する。
"""
import time
import logging
from typing import Dict, Any, Optional, Callable, Union
from functools import wraps
from datetime import datetime
import threading
from collections import defaultdict, deque

from src.config import Config


class PerformanceMonitor:
    """パフォーマンス監視クラス"""

    def __init__(self, enable_metrics: bool = True):
        self.logger = logging.getLogger(__name__)
        self.enable_metrics = enable_metrics
        self.metrics = defaultdict(lambda: deque(maxlen=1000))
        self.counters: Dict[str, int] = defaultdict(int)
        self.lock = threading.Lock()

    def record_metric(self, metric_name: str, value: float, tags: Optional[Dict[str, str]] = None):
        """メトリクスの記録"""
        if not self.enable_metrics:
            return

        with self.lock:
            metric_data = {
                "timestamp": datetime.now().isoformat(),
                "value": value,
                "tags": tags or {}
            }
            self.metrics[metric_name].append(metric_data)

    def increment(self, counter_name: str, amount: int = 1):
        """カウンタの加算"""
        if not self.enable_metrics:
            return
        with self.lock:
            self.counters[counter_name] += amount

    def get_metric_stats(self, metric_name: str) -> Dict[str, Any]:
        """メトリクスの統計情報を取得"""
        if not self.enable_metrics:
            return {}

        with self.lock:
            if metric_name not in self.metrics or not self.metrics[metric_name]:
                return {}
            values = [item["value"] for item in self.metrics[metric_name]]

        return {
            "count": len(values),
            "min": min(values),
            "max": max(values),
            "avg": sum(values) / len(values),
            "latest": values[-1]
        }

    def summary(self) -> Dict[str, Any]:
        """全メトリクスの統計とカウンタ (CLI の --metrics 出力用)"""
        if not self.enable_metrics:
            return {}
        with self.lock:
            names = list(self.metrics)
            counters = dict(self.counters)
        result: Dict[str, Any] = {name: self.get_metric_stats(name) for name in sorted(names)}
        result["counters"] = counters
        return result

    def reset(self):
        with self.lock:
            self.metrics.clear()
            self.counters.clear()


class PerformanceDecorator:
    """パフォーマンス計測デコレータ"""

    def __init__(self, monitor: PerformanceMonitor, name: Optional[str] = None):
        self.monitor = monitor
        self.name = name

    def __call__(self, func: Callable) -> Callable:
        metric_name = self.name or f"function.{func.__module__}.{func.__name__}"

        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            success = False
            try:
                result = func(*args, **kwargs)
                success = True
                return result
            finally:
                execution_time = time.perf_counter() - start_time
                self.monitor.record_metric(
                    f"{metric_name}.execution_time",
                    execution_time,
                    {"success": str(success)}
                )
                self.monitor.increment(f"{metric_name}.{'success' if success else 'error'}")

                if execution_time > 10.0:
                    self.monitor.logger.warning(
                        f"Slow execution detected: {func.__name__} took {execution_time:.2f}s"
                    )

        return wrapper


class CacheMonitor:
    """キャッシュ監視クラス"""

    def __init__(self, monitor: PerformanceMonitor):
        self.monitor = monitor
        self.cache_hits = 0
        self.cache_misses = 0
        self.lock = threading.Lock()

    def record_cache_hit(self, cache_name: str):
        """キャッシュヒットの記録"""
        with self.lock:
            self.cache_hits += 1
        self.monitor.increment(f"cache.{cache_name}.hits")

    def record_cache_miss(self, cache_name: str):
        """キャッシュミスの記録"""
        with self.lock:
            self.cache_misses += 1
        self.monitor.increment(f"cache.{cache_name}.misses")

    def get_cache_stats(self) -> Dict[str, Any]:
        """キャッシュ統計の取得"""
        with self.lock:
            total_requests = self.cache_hits + self.cache_misses
            hit_rate = (self.cache_hits / total_requests * 100) if total_requests > 0 else 0

            return {
                "hits": self.cache_hits,
                "misses": self.cache_misses,
                "total_requests": total_requests,
                "hit_rate": hit_rate
            }

    def reset(self):
        with self.lock:
            self.cache_hits = 0
            self.cache_misses = 0


# グローバルインスタンス
performance_monitor = PerformanceMonitor(enable_metrics=Config.ENABLE_METRICS)
cache_monitor = CacheMonitor(performance_monitor)


def monitor_performance(target: Union[Callable, str]) -> Callable:
    """
    パフォーマンス監視デコレータ

    @monitor_performance と @monitor_performance("milp.solve") の両方の形で使用できる。
    """
    if callable(target):
        return PerformanceDecorator(performance_monitor)(target)
    return PerformanceDecorator(performance_monitor, target)


def log_performance_metrics():
    """パフォーマンスメトリクスのログ出力"""
    if not performance_monitor.enable_metrics:
        return

    solve_stats = performance_monitor.get_metric_stats("milp.solve.execution_time")
    cache_stats = cache_monitor.get_cache_stats()

    performance_monitor.logger.info(
        f"Performance metrics - MILP solves: {solve_stats.get('count', 0)}, "
        f"avg solve time: {solve_stats.get('avg', 0):.3f}s, "
        f"Cache hit rate: {cache_stats.get('hit_rate', 0):.1f}%"
    )
