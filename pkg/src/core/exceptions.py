"""
モデル検査で使用する例外クラス
"""


class ModelCheckingError(Exception):
    """全てのドメインエラーの基底クラス"""


# --- モデル構築 ---

class InvalidModelError(ModelCheckingError, ValueError):
    """MDPの不変条件(空でない行動集合、確率の総和=1など)に違反した"""


class ModelFormatError(ModelCheckingError, ValueError):
    """JSON / LP ファイルの形式が不正"""


class NotClosedError(ModelCheckingError):
    """状態行動ペア集合が閉じていない"""


class StartOutsideError(ModelCheckingError):
    """開始状態がペア集合に含まれない"""


class InvalidStrategyError(ModelCheckingError):
    """戦略が有効でない行動を選択している"""


class DimensionMismatchError(ModelCheckingError):
    """点とクエリの次元が一致しない"""


class UnknownNameError(ModelCheckingError):
    """組み込みモデル名・クエリIDなどが存在しない"""


# --- グラフ解析・評価 ---

class UnboundedRewardError(ModelCheckingError):
    """有限な上界が存在しない"""


class EmptySinkError(ModelCheckingError):
    """訪問回数の上界計算でシンク集合が空"""


class SingularSystemError(ModelCheckingError):
    """線形方程式系が一意解を持たない"""


class TooManyStrategiesError(ModelCheckingError):
    """戦略の総数が列挙上限を超えた"""


class InitialInfiniteError(ModelCheckingError):
    """初期状態が S_inf に含まれる(達成可能集合が空)"""


# --- MILP ---

class IterationLimitError(ModelCheckingError):
    """反復・ノード・時間の上限に到達した"""


class NumericalTroubleError(ModelCheckingError):
    """数値的に不安定な状態を検出した"""


# --- エンコーディング ---

class InfinitePointError(ModelCheckingError):
    """達成可能性判定に無限大の閾値が渡された"""


class NotTotalRewardError(ModelCheckingError):
    """総報酬目的でないクエリがフローエンコーディングに渡された"""


class AmbiguousSelectionError(ModelCheckingError):
    """丸め後の行動選択が一意でない"""


# --- メモリ ---

class ZeroMemoryError(ModelCheckingError):
    """メモリサイズが1未満"""


class ProductTooLargeError(ModelCheckingError):
    """積MDPの状態数が上限を超えた"""
