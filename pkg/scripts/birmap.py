"""
双有理映射模块 — SL(2,Z) Cremona 嵌入验证工具
P² 与 P¹×P¹ 上的双有理自映射：最简形式表示、复合、次数与四重次数、
迭代次数序列、增长分类、动力学次数估计、基点判定与求值、JSON 序列化。
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import sympy
from sympy import Symbol, integer_nthroot
from sympy.polys.domains import QQ_I

from algebra import (
    MultiPoly, P2_VARS, P1P1_VARS, poly_gcd_many, scalar, format_scalar,
)
from utils import (
    UsageError, ResourceError, DegenerateCompositionError, IndeterminacyError,
    SCHEMA_VERSION, DEFAULT_MAX_ITERATES, DEFAULT_GROWTH_WINDOW, DEFAULT_GROWTH_DELTA,
    DEFAULT_TERM_CAP, DECIMAL_DIGITS, format_rational, format_decimal,
)

log = logging.getLogger(__name__)

AMBIENTS = {
    "P2": ("射影平面 P²", P2_VARS, (3,), ((0, 1, 2),)),
    "P1xP1": ("P¹×P¹", P1P1_VARS, (2, 2), ((0, 1), (2, 3))),
}

_X, _Y = Symbol("x"), Symbol("y")
_LOCALS = {"i": sympy.I, "x": _X, "y": _Y}


def _ambient(name: str) -> tuple:
    if name not in AMBIENTS:
        raise UsageError(f"不支持的环境空间: {name}，可选: {', '.join(AMBIENTS)}")
    return AMBIENTS[name]


# ─── 映射 ───────────────────────────────────────────────────────────────────────

class BirMap:
    """
    P²: 三个同次齐次分量 (F₀ : F₁ : F₂)。
    P¹×P¹: ((P₁ : P₂), (P₃ : P₄))，变量 (x₁, x₂, y₁, y₂)。
    构造时约去公因式，并把每个射影因子的首个非零分量首一化。
    """

    __slots__ = ("ambient", "components", "name", "inverse_name")

    def __init__(self, ambient: str, components, name: str = "", inverse_name: str = ""):
        _, names, blocks, groups = _ambient(ambient)
        components = tuple(components)
        if len(components) != sum(blocks):
            raise UsageError(f"{ambient} 需要 {sum(blocks)} 个分量，得到 {len(components)} 个")
        for c in components:
            if c.names != names or c.grading is None or c.grading.blocks != blocks:
                raise UsageError(f"分量 {c} 不在 {ambient} 的齐次坐标环中")
        reduced = list(components)
        for group in groups:
            members = [reduced[i] for i in group]
            if all(m.is_zero for m in members):
                raise DegenerateCompositionError(f"{ambient} 映射的一组分量恒为零")
            if len({m.degrees for m in members}) != 1:
                raise UsageError(f"同一射影因子的分量次数不一致: {[m.degrees for m in members]}")
            g = poly_gcd_many(members)
            if g.total_degree > 0:
                members = [m.exquo(g) for m in members]
            lc = next(m for m in members if not m.is_zero).leading_coefficient()
            inv = QQ_I.one / lc
            for i, m in zip(group, members):
                reduced[i] = m.scale(inv)
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "components", tuple(reduced))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "inverse_name", inverse_name)

    def __setattr__(self, key, value):
        raise AttributeError("BirMap 不可变")

    # ── 构造 ──

    @classmethod
    def from_components(cls, ambient: str, exprs, name: str = "", inverse_name: str = "") -> "BirMap":
        """由齐次坐标下的表达式（字符串或 sympy 表达式）构造。"""
        _, names, blocks, groups = _ambient(ambient)
        polys = [MultiPoly.from_expr(e, names) for e in exprs]
        graded = []
        for group in groups:
            nonzero = [polys[i] for i in group if not polys[i].is_zero]
            ref = MultiPoly(nonzero[0].elem, blocks) if nonzero else None
            for i in group:
                degrees = ref.degrees if ref is not None else (0,) * len(blocks)
                graded.append(MultiPoly(polys[i].elem, blocks, degrees))
        return cls(ambient, graded, name, inverse_name)

    @classmethod
    def from_affine(cls, ambient: str, exprs, name: str = "", inverse_name: str = "") -> "BirMap":
        """
        由仿射形式 (f(x, y), g(x, y)) 构造。
        P²: 通分后补 z 齐次化；P¹×P¹: 每个坐标各自写成 (分子 : 分母) 再双齐次化。
        """
        if len(exprs) != 2:
            raise UsageError("仿射形式需要两个有理函数")
        fracs = [_split(e) for e in exprs]
        if ambient == "P2":
            (n1, d1), (n2, d2) = fracs
            den = sympy.lcm(d1, d2)
            polys = [sympy.expand(n1 * sympy.cancel(den / d1)),
                     sympy.expand(n2 * sympy.cancel(den / d2)),
                     sympy.expand(den)]
            return cls.from_components("P2", _homogenize_p2(polys), name, inverse_name)
        if ambient == "P1xP1":
            comps = []
            for num, den in fracs:
                comps.extend(_bihomogenize(num, den))
            return cls.from_components("P1xP1", comps, name, inverse_name)
        _ambient(ambient)

    def with_name(self, name: str, inverse_name: str = "") -> "BirMap":
        return BirMap(self.ambient, self.components, name, inverse_name)

    # ── 次数 ──

    @property
    def groups(self) -> tuple:
        return AMBIENTS[self.ambient][3]

    def quadridegree(self) -> tuple:
        """P¹×P¹ 映射的 (d₁, d₂, d₃, d₄)。"""
        if self.ambient != "P1xP1":
            raise UsageError("四重次数只对 P¹×P¹ 映射有定义")
        return self.components[0].degrees + self.components[2].degrees

    def degree(self) -> int:
        """P² 为公共次数；P¹×P¹ 约定为四重次数之和。"""
        if self.ambient == "P2":
            return self.components[0].degrees[0]
        return sum(self.quadridegree())

    @property
    def nterms(self) -> int:
        return max(c.nterms for c in self.components)

    # ── 比较 ──

    def __eq__(self, other) -> bool:
        if not isinstance(other, BirMap):
            return NotImplemented
        return equals(self, other)

    def __hash__(self):
        return hash((self.ambient, self.components))

    def affine_form(self) -> tuple:
        """仿射坐标下的两个有理函数（sympy 表达式，变量 x、y）。"""
        exprs = [c.as_expr() for c in self.components]
        if self.ambient == "P2":
            sub = {Symbol("x"): _X, Symbol("y"): _Y, Symbol("z"): 1}
            f0, f1, f2 = (e.subs(sub) for e in exprs)
            return sympy.cancel(f0 / f2), sympy.cancel(f1 / f2)
        sub = {Symbol("x1"): _X, Symbol("x2"): 1, Symbol("y1"): _Y, Symbol("y2"): 1}
        p1, p2, p3, p4 = (e.subs(sub) for e in exprs)
        return sympy.cancel(p1 / p2), sympy.cancel(p3 / p4)

    def __str__(self) -> str:
        parts = [str(c) for c in self.components]
        if self.ambient == "P2":
            return f"({' : '.join(parts)})"
        return f"(({parts[0]} : {parts[1]}), ({parts[2]} : {parts[3]}))"

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"BirMap[{self.ambient}{label}]{self}"

    # ── 序列化 ──

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "ambient": self.ambient,
            "name": self.name,
            "inverse": self.inverse_name,
            "degrees": [list(c.degrees) for c in self.components],
            "components": [c.to_json() for c in self.components],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BirMap":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise UsageError(f"不支持的格式版本: {data.get('schema_version')}")
        ambient = data["ambient"]
        _, names, blocks, _ = _ambient(ambient)
        comps = [MultiPoly.from_json(names, terms, blocks, degs)
                 for terms, degs in zip(data["components"], data["degrees"])]
        return cls(ambient, comps, data.get("name", ""), data.get("inverse", ""))


def _split(expr) -> tuple:
    """有理函数 → (分子, 分母)，已约分并展开。"""
    if isinstance(expr, str):
        expr = sympy.sympify(expr, locals=_LOCALS, rational=True)
    num, den = sympy.fraction(sympy.cancel(sympy.together(sympy.sympify(expr))))
    if den == 0:
        raise UsageError(f"分母为零: {expr}")
    return sympy.expand(num), sympy.expand(den)


def _homogenize_p2(polys) -> list:
    x, y, z = (Symbol(n) for n in P2_VARS)
    d = max(sympy.Poly(p, _X, _Y).total_degree() for p in polys if p != 0)
    out = []
    for p in polys:
        h = sympy.expand(z ** d * p.xreplace({_X: x / z, _Y: y / z}))
        out.append(h)
    return out


def _bihomogenize(num, den) -> list:
    x1, x2, y1, y2 = (Symbol(n) for n in P1P1_VARS)
    dx = max(sympy.degree(p, _X) for p in (num, den) if p != 0)
    dy = max(sympy.degree(p, _Y) for p in (num, den) if p != 0)
    sub = {_X: x1 / x2, _Y: y1 / y2}
    return [sympy.expand(x2 ** dx * y2 ** dy * p.xreplace(sub)) for p in (num, den)]


def identity(ambient: str) -> BirMap:
    _, names, _, _ = _ambient(ambient)
    return BirMap.from_components(ambient, names, name="id", inverse_name="id")


# ─── 复合 ───────────────────────────────────────────────────────────────────────

def _image_degrees(g: BirMap, f: BirMap, comp) -> tuple:
    """g 的分量 comp 代入 f 后的次数（不计约分）。"""
    if g.ambient == "P2":
        return (comp.degrees[0] * f.degree(),)
    d1, d2, d3, d4 = f.quadridegree()
    e1, e2 = comp.degrees
    return (e1 * d1 + e2 * d3, e1 * d2 + e2 * d4)


def compose(g: BirMap, f: BirMap) -> BirMap:
    """g∘f：把 f 的分量代入 g，再约去公因式。"""
    if g.ambient != f.ambient:
        raise UsageError(f"环境空间不一致: {g.ambient} vs {f.ambient}")
    blocks = AMBIENTS[g.ambient][2]
    comps = [c.substitute(list(f.components), blocks, _image_degrees(g, f, c)) for c in g.components]
    if all(c.is_zero for c in comps):
        raise DegenerateCompositionError(f"复合 {g.name or 'g'}∘{f.name or 'f'} 恒为零")
    h = BirMap(g.ambient, comps)
    log.debug("复合: %s∘%s 次数 %d（上界 %d），%d 项", g.name or "g", f.name or "f",
              h.degree(), g.degree() * f.degree(), h.nterms)
    return h


def compose_all(maps) -> BirMap:
    """f₁∘f₂∘…∘f_k，从右往左累积。"""
    maps = list(maps)
    if not maps:
        raise UsageError("至少需要一个映射")
    acc = maps[-1]
    for m in reversed(maps[:-1]):
        acc = compose(m, acc)
    return acc


def equals(f: BirMap, g: BirMap) -> bool:
    """每个射影因子的分量相差同一个非零常数（交叉相乘判定）。"""
    if f.ambient != g.ambient:
        raise UsageError(f"环境空间不一致: {f.ambient} vs {g.ambient}")
    if f.components == g.components:
        return True
    for group in f.groups:
        fs = [f.components[i] for i in group]
        gs = [g.components[i] for i in group]
        if [p.degrees for p in fs] != [q.degrees for q in gs]:
            return False
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if fs[i] * gs[j] != fs[j] * gs[i]:
                    return False
    return True


def inverse_check(f: BirMap, g: BirMap) -> bool:
    """g 是否为 f 的逆：两个方向的复合都是恒等。"""
    ident = identity(f.ambient)
    return equals(compose(f, g), ident) and equals(compose(g, f), ident)


# ─── 迭代与增长 ──────────────────────────────────────────────────────────────────

def iterate_maps(f: BirMap, n: int, cap: int = DEFAULT_TERM_CAP):
    """依次产生 f¹, …, f^N（左复合）；任一分量项数超过 cap 时报 ResourceError。"""
    if n < 1:
        raise UsageError(f"迭代次数必须 ≥ 1，得到 {n}")
    current = f
    for k in range(1, n + 1):
        if k > 1:
            current = compose(f, current)
        if current.nterms > cap:
            raise ResourceError(k, current.nterms, cap)
        log.debug("第 %d 次迭代: 次数 %d，%d 项", k, current.degree(), current.nterms)
        yield current


def iterate_degrees(f: BirMap, n: int, cap: int = DEFAULT_TERM_CAP) -> list:
    """deg f¹, …, deg f^N。"""
    return [g.degree() for g in iterate_maps(f, n, cap)]


@dataclass(frozen=True)
class GrowthClass:
    """kind ∈ {bounded, linear, quadratic, exponential, undetermined}。"""
    kind: str
    window: int
    tail: tuple
    min_ratio: Fraction = None
    stats: dict = field(default_factory=dict)

    LABELS = {
        "bounded": "有界（椭圆）",
        "linear": "线性（抛物，保持有理纤维化）",
        "quadratic": "二次（抛物，保持椭圆纤维化）",
        "exponential": "指数（双曲）",
        "undetermined": "无法判定",
    }

    @property
    def label(self) -> str:
        return self.LABELS[self.kind]

    def to_dict(self) -> dict:
        out = {"class": self.kind, "window": self.window, "tail": list(self.tail)}
        if self.min_ratio is not None:
            out["min_ratio"] = format_rational(self.min_ratio)
            out["min_ratio_decimal"] = format_decimal(self.min_ratio, 6)
        out.update(self.stats)
        return out


MAX_BOUNDED_PERIOD = 6      # 有限阶映射的次数周期上限（SL(2,Z) 中有限阶元素的阶至多为 6）


def _periodic_tail(seq: list, window: int):
    """末尾 window+p 项以 p 为周期的最小 p（p ≤ 6）；没有则返回 None。"""
    for p in range(1, min(MAX_BOUNDED_PERIOD, len(seq) - window) + 1):
        part = seq[-(window + p):]
        if all(a == b for a, b in zip(part, part[p:])):
            return p
    return None


def _differences(seq: list, order: int) -> list:
    for _ in range(order):
        seq = [b - a for a, b in zip(seq, seq[1:])]
    return seq


def classify_growth(seq, window: int = DEFAULT_GROWTH_WINDOW,
                    delta=DEFAULT_GROWTH_DELTA) -> GrowthClass:
    """
    尾部窗口为常数，或末尾 window+p 项以某个 p ≤ 6 为周期 → 有界；
    二阶/三阶差分在尾部为零 → 线性/二次；尾部相邻比值都 ≥ 1+δ → 指数；否则无法判定。
    """
    seq = [int(d) for d in seq]
    if len(seq) < 6:
        raise UsageError(f"次数序列至少需要 6 项，得到 {len(seq)} 项")
    if window < 2 or window >= len(seq):
        raise UsageError(f"窗口长度 {window} 不合法（序列长度 {len(seq)}）")
    delta = Fraction(delta)
    tail = seq[-window:]
    period = 1 if len(set(tail)) == 1 else _periodic_tail(seq, window)
    if period is not None:
        return GrowthClass("bounded", window, tuple(tail), stats={"period": period})
    second = _differences(seq[-min(window + 2, len(seq)):], 2)
    if all(v == 0 for v in second):
        return GrowthClass("linear", window, tuple(tail), stats={"slope": tail[-1] - tail[-2]})
    third = _differences(seq[-min(window + 3, len(seq)):], 3)
    if all(v == 0 for v in third):
        return GrowthClass("quadratic", window, tuple(tail))
    ratios = [Fraction(b, a) for a, b in zip(tail, tail[1:]) if a > 0]
    min_ratio = min(ratios) if ratios else None
    if min_ratio is not None and len(ratios) == window - 1 and min_ratio >= 1 + delta:
        return GrowthClass("exponential", window, tuple(tail), min_ratio)
    log.info("增长无法判定: 尾部 %s", tail)
    return GrowthClass("undetermined", window, tuple(tail), min_ratio)


@dataclass(frozen=True)
class DynamicalEstimate:
    """(deg f^N)^{1/N} 与末项比值 deg f^N / deg f^{N−1}。"""
    degrees: tuple
    root: Fraction       # N 次方根，截断到 digits 位小数
    last_ratio: Fraction
    digits: int

    @property
    def spread(self) -> Fraction:
        return abs(self.last_ratio - self.root)

    def to_dict(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "root_decimal": format_decimal(self.root, self.digits),
            "last_ratio": format_rational(self.last_ratio),
            "last_ratio_decimal": format_decimal(self.last_ratio, self.digits),
            "spread_decimal": format_decimal(self.spread, self.digits),
        }


def nth_root(value: int, n: int, digits: int = DECIMAL_DIGITS) -> Fraction:
    """value^{1/n} 向下截断到 digits 位小数。"""
    root, _ = integer_nthroot(value * 10 ** (digits * n), n)
    return Fraction(int(root), 10 ** digits)


def dynamical_degree_estimate(f: BirMap, n: int = DEFAULT_MAX_ITERATES,
                              cap: int = DEFAULT_TERM_CAP, digits: int = DECIMAL_DIGITS,
                              degrees=None) -> DynamicalEstimate:
    """给出 degrees 时直接使用（避免重复迭代）。"""
    if n < 4:
        raise UsageError(f"估计动力学次数至少需要 4 次迭代，得到 {n}")
    degs = list(degrees) if degrees is not None else iterate_degrees(f, n, cap)
    return DynamicalEstimate(tuple(degs), nth_root(degs[-1], len(degs), digits),
                             Fraction(degs[-1], degs[-2]), digits)


# ─── 点、基点与求值 ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ProjPoint:
    """P²: (x : y : z)；P¹×P¹: ((x₁ : x₂), (y₁ : y₂))。坐标在构造时归一化。"""
    ambient: str
    coords: tuple

    def __post_init__(self):
        _, names, _, groups = _ambient(self.ambient)
        coords = [scalar(c) for c in self.coords]
        if len(coords) != len(names):
            raise UsageError(f"{self.ambient} 的点需要 {len(names)} 个齐次坐标")
        for group in groups:
            vals = [coords[i] for i in group]
            if all(v == QQ_I.zero for v in vals):
                raise UsageError(f"齐次坐标不能全为零: {[format_scalar(v) for v in vals]}")
            # 最后一个非零坐标归一为 1
            pivot = next(v for v in reversed(vals) if v != QQ_I.zero)
            for i in group:
                coords[i] = coords[i] / pivot
        object.__setattr__(self, "coords", tuple(coords))

    @classmethod
    def affine(cls, ambient: str, x, y) -> "ProjPoint":
        """仿射点 (x, y)；P¹×P¹ 上 None 表示 ∞。"""
        if ambient == "P2":
            return cls("P2", (x, y, 1))
        xs = (1, 0) if x is None else (x, 1)
        ys = (1, 0) if y is None else (y, 1)
        return cls("P1xP1", xs + ys)

    def affine_coords(self) -> tuple:
        """仿射坐标；在无穷远处的坐标记为 None。"""
        c = self.coords
        if self.ambient == "P2":
            return (c[0], c[1]) if c[2] == QQ_I.one else (None, None)
        return (c[0] if c[1] == QQ_I.one else None, c[2] if c[3] == QQ_I.one else None)

    def __str__(self) -> str:
        s = [format_scalar(v) for v in self.coords]
        if self.ambient == "P2":
            return f"({s[0]} : {s[1]} : {s[2]})"
        return f"(({s[0]} : {s[1]}), ({s[2]} : {s[3]}))"


def _values(f: BirMap, p: ProjPoint) -> list:
    if f.ambient != p.ambient:
        raise UsageError(f"环境空间不一致: {f.ambient} vs {p.ambient}")
    return [c.evaluate(p.coords) for c in f.components]


def is_base_point(f: BirMap, p: ProjPoint) -> bool:
    """某个射影因子的全部分量在 p 处同时为零。"""
    vals = _values(f, p)
    return any(all(vals[i] == QQ_I.zero for i in group) for group in f.groups)


def apply(f: BirMap, p: ProjPoint) -> ProjPoint:
    vals = _values(f, p)
    if any(all(vals[i] == QQ_I.zero for i in group) for group in f.groups):
        raise IndeterminacyError(f"{p} 是 {f.name or '映射'} 的基点")
    return ProjPoint(f.ambient, tuple(vals))


def base_points_on_grid(f: BirMap, grid) -> list:
    """在给定点集中筛出基点，保持输入顺序。"""
    return [p for p in grid if is_base_point(f, p)]


def probe_grid(ambient: str, radius: int = 3, with_infinity: bool = True) -> list:
    """整数网格 {−r..r}² 上的仿射点，可附加无穷远点。"""
    pts = [ProjPoint.affine(ambient, x, y)
           for x in range(-radius, radius + 1) for y in range(-radius, radius + 1)]
    if with_infinity:
        pts.append(ProjPoint("P2", (1, 0, 0)) if ambient == "P2" else ProjPoint.affine(ambient, None, None))
    return pts
