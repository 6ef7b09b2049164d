"""
パレート近似の候補領域

全ての目的を利得空間 (最大化目的は値、最小化目的は値の符号反転) で扱い、
領域は半空間 n·g ≥ d の共通部分として表す。2目的の場合は頂点列 (凸多角形、
有理数座標) も保持し、面積・重心・空判定に使う。
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

GainPoint = Tuple[Fraction, ...]


@dataclass(frozen=True)
class Halfspace:
    """n·g ≥ offset"""
    normal: Tuple[Fraction, ...]
    offset: Fraction

    def value(self, g: Sequence[Fraction]) -> Fraction:
        return sum((n * x for n, x in zip(self.normal, g)), Fraction(0))

    def contains(self, g: Sequence[Fraction], tol: Fraction = Fraction(0)) -> bool:
        return self.value(g) >= self.offset - tol

    def axis(self) -> Optional[Tuple[int, int]]:
        """座標軸に平行なら (軸, 符号)"""
        nonzero = [(j, n) for j, n in enumerate(self.normal) if n != 0]
        if len(nonzero) != 1:
            return None
        j, n = nonzero[0]
        return j, (1 if n > 0 else -1)


def unit(dimension: int, j: int, sign: int = 1) -> Tuple[Fraction, ...]:
    return tuple(Fraction(sign) if i == j else Fraction(0) for i in range(dimension))


@dataclass(frozen=True)
class Region:
    rid: int
    halfspaces: Tuple[Halfspace, ...]
    vertices: Optional[Tuple[GainPoint, ...]] = None
    focus: Optional[int] = None

    @property
    def dimension(self) -> int:
        return len(self.halfspaces[0].normal)

    def contains(self, g: Sequence[Fraction], tol: Fraction = Fraction(0)) -> bool:
        return all(h.contains(g, tol) for h in self.halfspaces)

    def axis_bounds(self) -> Tuple[List[Optional[Fraction]], List[Optional[Fraction]]]:
        """座標軸に平行な半空間から得られる各座標の下界・上界"""
        lower: List[Optional[Fraction]] = [None] * self.dimension
        upper: List[Optional[Fraction]] = [None] * self.dimension
        for h in self.halfspaces:
            found = h.axis()
            if found is None:
                continue
            j, sign = found
            bound = h.offset / h.normal[j]
            if sign > 0:
                lower[j] = bound if lower[j] is None else max(lower[j], bound)
            else:
                upper[j] = bound if upper[j] is None else min(upper[j], bound)
        return lower, upper

    def is_empty(self) -> bool:
        if self.vertices is not None and not self.vertices:
            return True
        lower, upper = self.axis_bounds()
        return any(lo is not None and hi is not None and lo > hi for lo, hi in zip(lower, upper))

    def area(self) -> Fraction:
        return polygon_area(self.vertices) if self.vertices else Fraction(0)

    def centroid(self) -> Optional[GainPoint]:
        if not self.vertices:
            return None
        k = len(self.vertices)
        return tuple(sum((v[j] for v in self.vertices), Fraction(0)) / k for j in range(self.dimension))

    def restrict(self, rid: int, extra: Sequence[Halfspace], focus: Optional[int] = None) -> "Region":
        vertices = self.vertices
        if vertices is not None:
            for h in extra:
                vertices = clip_polygon(vertices, h)
        return Region(rid, self.halfspaces + tuple(extra), vertices, focus)


def box_region(rid: int, lo: Sequence[Fraction], hi: Sequence[Fraction]) -> Region:
    """∏_j [lo_j, hi_j]"""
    dim = len(lo)
    halfspaces = []
    for j in range(dim):
        halfspaces.append(Halfspace(unit(dim, j), Fraction(lo[j])))
        halfspaces.append(Halfspace(unit(dim, j, -1), -Fraction(hi[j])))
    vertices = None
    if dim == 2:
        vertices = _dedupe([(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])])
    return Region(rid, tuple(halfspaces), vertices)


def _dedupe(points: Sequence[GainPoint]) -> Tuple[GainPoint, ...]:
    out: List[GainPoint] = []
    for p in points:
        p = tuple(Fraction(x) for x in p)
        if not out or out[-1] != p:
            out.append(p)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return tuple(out)


def clip_polygon(vertices: Sequence[GainPoint], h: Halfspace) -> Tuple[GainPoint, ...]:
    """凸多角形を半空間で切る (Sutherland–Hodgman の1辺分)"""
    if not vertices:
        return ()
    out: List[GainPoint] = []
    n = len(vertices)
    for i in range(n):
        cur, nxt = vertices[i], vertices[(i + 1) % n]
        fc = h.value(cur) - h.offset
        fn = h.value(nxt) - h.offset
        if fc >= 0:
            out.append(cur)
        if (fc > 0 > fn) or (fc < 0 < fn):
            t = fc / (fc - fn)
            out.append(tuple(c + t * (d - c) for c, d in zip(cur, nxt)))
    return _dedupe(out)


def polygon_area(vertices: Sequence[GainPoint]) -> Fraction:
    n = len(vertices)
    if n < 3:
        return Fraction(0)
    twice = sum(
        (vertices[i][0] * vertices[(i + 1) % n][1] - vertices[(i + 1) % n][0] * vertices[i][1] for i in range(n)),
        Fraction(0),
    )
    return abs(twice) / 2


def _cross(o: GainPoint, a: GainPoint, b: GainPoint) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def upper_hull(points: Sequence[GainPoint]) -> List[GainPoint]:
    """2次元の点集合の上側凸包 (左から右)"""
    hull: List[GainPoint] = []
    for p in sorted(set(points), key=lambda p: (p[0], -p[1])):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    return hull


def _normalize(w: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    w = [max(Fraction(0), x) for x in w]
    total = sum(w, Fraction(0))
    if total == 0:
        return tuple(Fraction(1, len(w)) for _ in w)
    return tuple(x / total for x in w)


def choose_direction(
    found: Sequence[GainPoint], region: Region, lo: Sequence[Fraction], hi: Sequence[Fraction]
) -> Tuple[Fraction, ...]:
    """
    最適化の重みベクトル w (非負、Σw = 1)

    2目的では (lo1, hi2) と (hi1, lo2) を端点に加えた見つかった点の上側凸包のうち、
    領域の重心の g1 座標を覆う辺に直交する向きを選ぶ。
    それ以外の次元では各目的の幅の逆数を重みとし、領域の注目座標を強める。
    """
    dim = len(lo)
    if dim == 1:
        return (Fraction(1),)
    if dim == 2:
        anchors = [(Fraction(lo[0]), Fraction(hi[1])), (Fraction(hi[0]), Fraction(lo[1]))]
        chain = upper_hull(list(found) + anchors)
        center = region.centroid()
        x = center[0] if center is not None else (Fraction(lo[0]) + Fraction(hi[0])) / 2
        for a, b in zip(chain, chain[1:]):
            if a[0] <= x <= b[0]:
                return _normalize((a[1] - b[1], b[0] - a[0]))
        if len(chain) >= 2:
            a, b = chain[0], chain[-1]
            return _normalize((a[1] - b[1], b[0] - a[0]))
        return _normalize((Fraction(1), Fraction(1)))

    widths = [Fraction(h) - Fraction(l) for l, h in zip(lo, hi)]
    w = [1 / width if width > 0 else Fraction(1) for width in widths]
    if region.focus is not None:
        w[region.focus] += sum(w, Fraction(0))
    return _normalize(w)


@dataclass(frozen=True)
class Split:
    """
    unachievable: 領域 ∩ {w·g ≥ c} (境界を除き達成不能)
    candidates: 残りのうち p + ε の閉包で覆われない部分
    """
    unachievable: Region
    candidates: Tuple[Region, ...]


def split_region(
    region: Region,
    p: Sequence[Fraction],
    w: Sequence[Fraction],
    c: Fraction,
    eps: Sequence[Fraction],
    next_id: int,
) -> Split:
    """
    点 p (重み w での最適値 c) で領域を分割する

    残り領域 {w·g ≤ c} から p + ε 以下の部分を除いたものを、座標 j ごとに
    g_j ≥ p_j + ε_j かつ g_i ≤ p_i + ε_i (i < j) の部分へ分ける。
    """
    dim = region.dimension
    w = tuple(Fraction(x) for x in w)
    unachievable = region.restrict(next_id, [Halfspace(w, Fraction(c))])
    below = Halfspace(tuple(-x for x in w), -Fraction(c))
    candidates = []
    rid = next_id + 1
    for j in range(dim):
        extra = [below, Halfspace(unit(dim, j), Fraction(p[j]) + eps[j])]
        extra += [Halfspace(unit(dim, i, -1), -(Fraction(p[i]) + eps[i])) for i in range(j)]
        child = region.restrict(rid, extra, focus=j)
        rid += 1
        if not child.is_empty():
            candidates.append(child)
    return Split(unachievable, tuple(candidates))


def covered(region: Region, found: Sequence[GainPoint], eps: Sequence[Fraction]) -> bool:
    """領域全体がある見つかった点 p について p + ε 以下に含まれるか"""
    if region.vertices:
        for p in found:
            if all(v[j] <= p[j] + eps[j] for v in region.vertices for j in range(len(p))):
                return True
        return False
    _, upper = region.axis_bounds()
    if any(u is None for u in upper):
        return False
    return any(all(upper[j] <= p[j] + eps[j] for j in range(len(p))) for p in found)
