"""
精确代数模块 — SL(2,Z) Cremona 嵌入验证工具
高斯有理数标量、带分次信息的稀疏多元多项式（基于 sympy PolyRing）与 gcd、
整数方阵的特征多项式、谱半径有理区间（Sturm 序列 + 二分）以及公共不动子空间。
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd, isqrt, lcm

import numpy as np
import sympy
from sympy import Matrix, Poly, Rational, Symbol
from sympy.polys.domains import QQ, QQ_I, ZZ
from sympy.polys.domains.gaussiandomains import GaussianRational
from sympy.polys.orderings import grlex
from sympy.polys.polyerrors import CoercionFailed, ExactQuotientFailed, GeneratorsNeeded, PolynomialError
from sympy.polys.rings import PolyRing

from utils import UsageError, DEFAULT_TOL, to_fraction, format_rational

log = logging.getLogger(__name__)

T = Symbol("t")


# ─── 精确标量（高斯有理数 Q(i)）──────────────────────────────────────────────────

ExactScalar = GaussianRational


def _as_qq(value):
    """实有理数 → QQ 元素。"""
    if isinstance(value, GaussianRational):
        if value.y != 0:
            raise UsageError(f"期望实有理数，得到 {format_scalar(value)}")
        return value.x
    q = to_fraction(value)
    return QQ(q.numerator, q.denominator)


def scalar(re=0, im=0) -> ExactScalar:
    """构造精确标量 re + im·i，接受 int / Fraction / 字符串 / sympy 有理数 / 已有标量。"""
    if isinstance(re, GaussianRational):
        if im == 0:
            return re
        return re + QQ_I(0, _as_qq(im))
    if isinstance(re, str):
        base = parse_scalar(re)
        return base if im == 0 else base + QQ_I(0, _as_qq(im))
    return QQ_I(_as_qq(re), _as_qq(im))


def parse_scalar(text: str) -> ExactScalar:
    """解析 '2'、'-1/2'、'i'、'1+i/3' 之类的字符串。"""
    try:
        expr = sympy.sympify(text.strip(), locals={"i": sympy.I}, rational=True)
        return QQ_I.from_sympy(sympy.expand(expr))
    except (sympy.SympifyError, CoercionFailed, TypeError, ValueError, SyntaxError) as exc:
        raise UsageError(f"无法解析精确标量: {text!r}（支持有理数与高斯有理数，如 2、-1/2、1+i/3）") from exc


def _as_gaussian(c) -> ExactScalar:
    """QQ 或 QQ_I 的元素统一成 QQ_I 元素。"""
    if isinstance(c, GaussianRational):
        return c
    return QQ_I(c)


def is_gaussian(s: ExactScalar) -> bool:
    """虚部非零即为真正的高斯有理数。"""
    return _as_gaussian(s).y != 0


def scalar_quad(s: ExactScalar) -> list:
    """[re_num, re_den, im_num, im_den]，分母为正且既约。"""
    s = _as_gaussian(s)
    return [int(s.x.numerator), int(s.x.denominator), int(s.y.numerator), int(s.y.denominator)]


def scalar_from_quad(quad) -> ExactScalar:
    if len(quad) != 4 or int(quad[1]) <= 0 or int(quad[3]) <= 0:
        raise UsageError(f"标量四元组格式错误: {quad}")
    return QQ_I(QQ(int(quad[0]), int(quad[1])), QQ(int(quad[2]), int(quad[3])))


def scalar_to_sympy(s: ExactScalar):
    return QQ_I.to_sympy(_as_gaussian(s))


def scalar_real(s: ExactScalar) -> Fraction:
    """实部（要求虚部为零）。"""
    s = _as_gaussian(s)
    if s.y != 0:
        raise UsageError(f"期望实数，得到 {format_scalar(s)}")
    return Fraction(int(s.x.numerator), int(s.x.denominator))


def format_scalar(s: ExactScalar) -> str:
    """精确字符串：'5/3'、'i'、'1/2 - (1/3)i'。"""
    s = _as_gaussian(s)
    re = Fraction(int(s.x.numerator), int(s.x.denominator))
    im = Fraction(int(s.y.numerator), int(s.y.denominator))
    if im == 0:
        return format_rational(re)
    if abs(im) == 1:
        imag = "i"
    elif im.denominator == 1:
        imag = f"{abs(im.numerator)}i"
    else:
        imag = f"({format_rational(abs(im))})i"
    if re == 0:
        return imag if im > 0 else f"-{imag}"
    return f"{format_rational(re)} {'+' if im > 0 else '-'} {imag}"


def to_complex(s: ExactScalar) -> complex:
    s = _as_gaussian(s)
    return complex(float(s.x), float(s.y))


# ─── 多项式环 ────────────────────────────────────────────────────────────────────

P2_VARS = ("x", "y", "z")
P1P1_VARS = ("x1", "x2", "y1", "y2")
AFFINE_VARS = ("x", "y")


def poly_ring(names, gaussian: bool = False) -> PolyRing:
    """按变量名与系数域取得（sympy 内部缓存的）分次字典序多项式环。"""
    return PolyRing(tuple(names), QQ_I if gaussian else QQ, grlex)


def _is_gaussian_ring(ring) -> bool:
    return ring.domain == QQ_I


def _promote(elem):
    """QQ 系数的元素提升到 QQ_I 环。"""
    if _is_gaussian_ring(elem.ring):
        return elem
    ring = poly_ring([str(s) for s in elem.ring.symbols], True)
    return ring.from_dict({m: _as_gaussian(c) for m, c in elem.iterterms()})


def _shrink(elem):
    """虚部全为零的 QQ_I 元素降回 QQ 环（有理系数走 sympy 的稀疏启发式 gcd）。"""
    if not _is_gaussian_ring(elem.ring):
        return elem
    if any(c.y != 0 for c in elem.itercoeffs()):
        return elem
    ring = poly_ring([str(s) for s in elem.ring.symbols], False)
    return ring.from_dict({m: c.x for m, c in elem.iterterms()})


def _unify(a, b):
    if a.ring == b.ring:
        return a, b
    if a.ring.symbols != b.ring.symbols:
        raise UsageError(f"变量集不一致: {a.ring.symbols} vs {b.ring.symbols}")
    return _promote(a), _promote(b)


def _block_degrees(elem, blocks) -> tuple:
    """各块的次数；零多项式返回 None；单项式之间不一致时报错。"""
    found = None
    for monom in elem.itermonoms():
        degs, start = [], 0
        for size in blocks:
            degs.append(sum(monom[start:start + size]))
            start += size
        degs = tuple(degs)
        if found is None:
            found = degs
        elif degs != found:
            raise UsageError(f"单项式 {monom} 与分次 {found} 不符")
    return found


@dataclass(frozen=True)
class Grading:
    """分次信息：blocks 为各块变量个数（P² 为 (3,)，P¹×P¹ 为 (2, 2)），degrees 为各块次数。"""
    blocks: tuple
    degrees: tuple

    @property
    def total(self) -> int:
        return sum(self.degrees)


class MultiPoly:
    """带分次元数据的稀疏多元多项式，系数在 Q 或 Q(i)。值不可变。"""

    __slots__ = ("elem", "grading")

    def __init__(self, elem, blocks=None, degrees=None):
        elem = _shrink(elem)
        grading = None
        if blocks is not None:
            blocks = tuple(blocks)
            if sum(blocks) != elem.ring.ngens:
                raise UsageError(f"分次块 {blocks} 与变量个数 {elem.ring.ngens} 不符")
            found = _block_degrees(elem, blocks)
            if found is None:
                if degrees is None:
                    raise UsageError("零多项式需要显式给出次数")
                found = tuple(degrees)
            elif degrees is not None and tuple(degrees) != found:
                raise UsageError(f"声明的次数 {tuple(degrees)} 与实际 {found} 不符")
            grading = Grading(blocks, found)
        object.__setattr__(self, "elem", elem)
        object.__setattr__(self, "grading", grading)

    def __setattr__(self, key, value):
        raise AttributeError("MultiPoly 不可变")

    # ── 构造 ──

    @classmethod
    def from_terms(cls, names, terms: dict, blocks=None, degrees=None) -> "MultiPoly":
        """terms: {指数元组: 标量}。"""
        gaussian = any(is_gaussian(scalar(c)) for c in terms.values())
        ring = poly_ring(names, gaussian)
        if gaussian:
            data = {tuple(m): scalar(c) for m, c in terms.items()}
        else:
            data = {tuple(m): _as_qq(scalar(c)) for m, c in terms.items()}
        for m in data:
            if len(m) != len(names) or any(e < 0 for e in m):
                raise UsageError(f"指数向量 {m} 不合法")
        return cls(ring.from_dict(data), blocks, degrees)

    @classmethod
    def from_expr(cls, expr, names, blocks=None, degrees=None) -> "MultiPoly":
        """由 sympy 表达式（或字符串）构造，变量名需与 names 一致。"""
        if isinstance(expr, str):
            expr = sympy.sympify(expr, locals={"i": sympy.I, **{n: Symbol(n) for n in names}}, rational=True)
        gens = [Symbol(n) for n in names]
        try:
            poly = Poly(sympy.expand(expr), *gens, domain=QQ_I)
        except (PolynomialError, CoercionFailed, GeneratorsNeeded) as exc:
            raise UsageError(f"不是 {names} 上的高斯有理系数多项式: {expr}") from exc
        ring = poly_ring(names, True)
        return cls(ring.from_dict(poly.as_dict(native=True)), blocks, degrees)

    @classmethod
    def constant(cls, names, c, blocks=None) -> "MultiPoly":
        degrees = None if blocks is None else (0,) * len(blocks)
        terms = {} if scalar(c) == QQ_I.zero else {(0,) * len(names): c}
        return cls.from_terms(names, terms, blocks, degrees)

    @classmethod
    def variable(cls, names, index: int, blocks=None) -> "MultiPoly":
        monom = tuple(1 if i == index else 0 for i in range(len(names)))
        return cls.from_terms(names, {monom: 1}, blocks)

    # ── 基本属性 ──

    @property
    def names(self) -> tuple:
        return tuple(str(s) for s in self.elem.ring.symbols)

    @property
    def nvars(self) -> int:
        return self.elem.ring.ngens

    @property
    def is_zero(self) -> bool:
        return not self.elem

    @property
    def nterms(self) -> int:
        return len(self.elem)

    @property
    def is_gaussian(self) -> bool:
        return _is_gaussian_ring(self.elem.ring)

    @property
    def degrees(self) -> tuple:
        if self.grading is None:
            raise UsageError("未声明分次的多项式没有块次数")
        return self.grading.degrees

    @property
    def total_degree(self) -> int:
        if self.is_zero:
            return -1
        return max(sum(m) for m in self.elem.itermonoms())

    def terms(self) -> dict:
        """{指数元组: QQ_I 标量}，按分次字典序从高到低。"""
        return {m: _as_gaussian(c) for m, c in self.elem.terms()}

    def leading_coefficient(self) -> ExactScalar:
        return _as_gaussian(self.elem.LC) if self.elem else QQ_I.zero

    def _blocks(self):
        return None if self.grading is None else self.grading.blocks

    # ── 运算 ──

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        if self.names != other.names:
            return False
        a, b = _unify(self.elem, other.elem)
        return a == b

    def __hash__(self):
        return hash((self.names, frozenset(self.terms().items())))

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(-self.elem, self._blocks(), None if self.grading is None else self.degrees)

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        a, b = _unify(self.elem, other.elem)
        blocks = self._blocks() or other._blocks()
        graded = [p for p in (self, other) if p.grading is not None]
        degrees = next((p.degrees for p in graded if not p.is_zero), None)
        if degrees is None and graded:
            degrees = graded[0].degrees
        return MultiPoly(a + b, blocks, degrees)

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        a, b = _unify(self.elem, other.elem)
        blocks, degrees = None, None
        if self.grading is not None and other.grading is not None:
            blocks = self.grading.blocks
            degrees = tuple(d + e for d, e in zip(self.degrees, other.degrees))
        return MultiPoly(a * b, blocks, degrees)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiPoly":
        if n < 0:
            raise UsageError("多项式不支持负指数")
        degrees = None if self.grading is None else tuple(d * n for d in self.degrees)
        return MultiPoly(self.elem ** n, self._blocks(), degrees)

    def scale(self, c) -> "MultiPoly":
        c = scalar(c)
        elem = _promote(self.elem) if c.y != 0 else self.elem
        factor = c if _is_gaussian_ring(elem.ring) else c.x
        return MultiPoly(elem.mul_ground(factor), self._blocks(),
                         None if self.grading is None else self.degrees)

    def monic(self) -> "MultiPoly":
        """首项系数（分次字典序）归一为 1。"""
        if self.is_zero:
            return self
        return MultiPoly(self.elem.monic(), self._blocks(), None if self.grading is None else self.degrees)

    def exquo(self, other: "MultiPoly") -> "MultiPoly":
        """精确除法，不整除时报错。"""
        a, b = _unify(self.elem, other.elem)
        try:
            q = a.exquo(b)
        except ExactQuotientFailed as exc:
            raise UsageError("多项式不能整除") from exc
        degrees = None
        if self.grading is not None and other.grading is not None:
            degrees = tuple(d - e for d, e in zip(self.degrees, other.degrees))
        return MultiPoly(q, self._blocks(), degrees)

    def divides(self, other: "MultiPoly") -> bool:
        """self | other。"""
        if self.is_zero:
            return other.is_zero
        a, b = _unify(self.elem, other.elem)
        return not b.rem(a)

    def substitute(self, images: list, blocks=None, degrees=None) -> "MultiPoly":
        """同时代入：第 i 个变量换成 images[i]（幂次缓存，单项式走快速路径）。"""
        if len(images) != self.nvars:
            raise UsageError(f"代入需要 {self.nvars} 个多项式，得到 {len(images)} 个")
        names = images[0].names
        if any(img.names != names for img in images):
            raise UsageError("代入的多项式变量集不一致")
        gaussian = self.is_gaussian or any(img.is_gaussian for img in images)
        ring = poly_ring(names, gaussian)
        imgs = [_promote(img.elem) if gaussian else img.elem for img in images]
        caches = [{0: ring.one} for _ in imgs]
        zero = ring.domain.zero
        acc = {}
        for monom, coeff in self.elem.iterterms():
            c = _as_gaussian(coeff) if gaussian else coeff
            term = None
            for i, e in enumerate(monom):
                if e:
                    p = _cached_power(imgs[i], e, caches[i])
                    term = p if term is None else term * p
            if term is None:
                term = ring.one
            for m, v in term.iterterms():
                acc[m] = acc.get(m, zero) + c * v
        return MultiPoly(ring.from_dict(acc), blocks, degrees)

    def evaluate(self, values) -> ExactScalar:
        """在一点求值，values 为 QQ_I 标量序列。"""
        if len(values) != self.nvars:
            raise UsageError(f"求值需要 {self.nvars} 个坐标")
        values = [scalar(v) for v in values]
        total = QQ_I.zero
        for monom, coeff in self.elem.iterterms():
            t = _as_gaussian(coeff)
            for v, e in zip(values, monom):
                if e:
                    t = t * v ** e
            total = total + t
        return total

    def as_expr(self):
        return self.elem.as_expr()

    def __str__(self) -> str:
        return str(self.as_expr()).replace("I", "i")

    def __repr__(self) -> str:
        return f"MultiPoly({self})"

    # ── 序列化 ──

    def to_json(self) -> dict:
        """{指数向量字符串: [re_num, re_den, im_num, im_den]}。"""
        return {",".join(str(e) for e in m): scalar_quad(c) for m, c in self.terms().items()}

    @classmethod
    def from_json(cls, names, data: dict, blocks=None, degrees=None) -> "MultiPoly":
        terms = {}
        for key, quad in data.items():
            monom = tuple(int(e) for e in key.split(",")) if key else ()
            terms[monom] = scalar_from_quad(quad)
        return cls.from_terms(names, terms, blocks, degrees)


def _cached_power(base, e: int, cache: dict):
    if e in cache:
        return cache[e]
    if len(base) == 1:
        p = base ** e
    else:
        k = max(j for j in cache if j < e)
        p = cache[k]
        if e - k > 8:
            p = p * base ** (e - k)
        else:
            for j in range(k + 1, e):
                p = p * base
                cache[j] = p
            p = p * base
    cache[e] = p
    return p


# ─── gcd ────────────────────────────────────────────────────────────────────────

def _min_exponents(elem) -> tuple:
    monoms = list(elem.itermonoms())
    return tuple(min(col) for col in zip(*monoms))


def _shift(elem, shift: tuple):
    """除以单项式 x^shift。"""
    if not any(shift):
        return elem
    return elem.ring.from_dict({tuple(e - s for e, s in zip(m, shift)): c for m, c in elem.iterterms()})


def _affine_chart(blocks) -> tuple:
    """每块去掉最后一个变量后剩下的下标；某块只有一个变量时返回 None。"""
    if blocks is None or any(size < 2 for size in blocks):
        return None
    kept, start = [], 0
    for size in blocks:
        kept.extend(range(start, start + size - 1))
        start += size
    return tuple(kept)


def _dehomogenize(elem, kept: tuple):
    """把每块最后一个变量取 1。分次齐次时不同单项式的像互不相同。"""
    names = [str(elem.ring.symbols[i]) for i in kept]
    ring = poly_ring(names, _is_gaussian_ring(elem.ring))
    return ring.from_dict({tuple(m[i] for i in kept): c for m, c in elem.iterterms()})


def _rehomogenize(elem, ring, blocks):
    """仿射 gcd 补回每块的最后一个变量，块次数取仿射部分在该块的最高次数。"""
    spans, pos = [], 0
    for size in blocks:
        spans.append((pos, size - 1))
        pos += size - 1
    block_deg = [max(sum(m[s:s + n]) for m in elem.itermonoms()) for s, n in spans]
    data = {}
    for m, c in elem.iterterms():
        full = []
        for (s, n), d in zip(spans, block_deg):
            part = m[s:s + n]
            full.extend(part)
            full.append(d - sum(part))
        data[tuple(full)] = c
    return ring.from_dict(data)


def _gcd_elements(a, b, blocks=None):
    """先提出单项式公因子；分次齐次时在仿射坐标（每块最后一个变量取 1）里求 gcd 再齐次化。
    余下部分交给 sympy（Q 上为稀疏启发式 gcd，Q(i) 上为 PRS）。"""
    ring = a.ring
    ma, mb = _min_exponents(a), _min_exponents(b)
    common = tuple(min(x, y) for x, y in zip(ma, mb))
    a1, b1 = _shift(a, ma), _shift(b, mb)
    kept = _affine_chart(blocks)
    if len(a1) == 1 or len(b1) == 1:
        g = ring.one
    elif kept is None:
        g = a1.gcd(b1)
        log.debug("gcd: %d 项 / %d 项 → %d 项", len(a1), len(b1), len(g))
    else:
        # 去掉单项式因子后 a1、b1 不被任何变量整除，齐次化是精确的
        g_aff = _dehomogenize(a1, kept).gcd(_dehomogenize(b1, kept))
        g = _rehomogenize(g_aff, ring, blocks)
        log.debug("仿射 gcd: %d 项 / %d 项 → %d 项", len(a1), len(b1), len(g))
    monomial = ring.from_dict({common: ring.domain.one})
    return (g * monomial).monic()


def poly_gcd(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    """最大公因式，首项系数（分次字典序）为 1；gcd(0, q) = q 的首一化。"""
    if p.names != q.names:
        raise UsageError(f"变量集不一致: {p.names} vs {q.names}")
    blocks = p._blocks() or q._blocks()
    if p.is_zero:
        return q.monic()
    if q.is_zero:
        return p.monic()
    a, b = _unify(p.elem, q.elem)
    graded = p._blocks() is not None and p._blocks() == q._blocks()
    return MultiPoly(_gcd_elements(a, b, blocks if graded else None), blocks)


def poly_gcd_many(polys: list) -> MultiPoly:
    """一组多项式的 gcd，遇到常数提前结束。"""
    nonzero = [p for p in polys if not p.is_zero]
    if not nonzero:
        return polys[0]
    g = nonzero[0].monic()
    for p in nonzero[1:]:
        if g.total_degree == 0:
            break
        g = poly_gcd(g, p)
    return g


# ─── 整数方阵 ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class IntMatrix:
    """n×n 整数方阵（n ∈ {2,3,4,5}），行优先存储。列是基向量的像。"""
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.rows)
        n = len(rows)
        if n not in (2, 3, 4, 5) or any(len(r) != n for r in rows):
            raise UsageError(f"需要 2..5 阶方阵，得到 {n} 行 {[len(r) for r in rows]}")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, entries) -> "IntMatrix":
        n = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.n != other.n:
            raise UsageError(f"矩阵阶数不一致: {self.n} vs {other.n}")
        cols = list(zip(*other.rows))
        return IntMatrix(tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.rows))

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def scale(self, c: int) -> "IntMatrix":
        return IntMatrix(tuple(tuple(c * a for a in r) for r in self.rows))

    def apply(self, vector) -> tuple:
        if len(vector) != self.n:
            raise UsageError(f"向量长度 {len(vector)} 与矩阵阶数 {self.n} 不符")
        return tuple(sum(a * v for a, v in zip(row, vector)) for row in self.rows)

    def power(self, p: int) -> "IntMatrix":
        if p < 0:
            raise UsageError("只支持非负幂")
        result, base = IntMatrix.identity(self.n), self
        while p:
            if p & 1:
                result = result @ base
            base = base @ base
            p >>= 1
        return result

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)))

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    @property
    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.n))

    def is_identity(self) -> bool:
        return self == IntMatrix.identity(self.n)

    def to_sympy(self) -> Matrix:
        return Matrix(self.rows)

    def tolist(self) -> list:
        return [list(r) for r in self.rows]


def char_poly(m: IntMatrix) -> Poly:
    """det(tI − m)，整数系数。"""
    cp = m.to_sympy().charpoly(T)
    return Poly(cp.as_expr(), T, domain=ZZ)


def matrix_polyval(poly: Poly, m: IntMatrix) -> IntMatrix:
    """Horner 法计算 poly(m)。"""
    ident = IntMatrix.identity(m.n)
    result = ident.scale(0)
    for c in poly.all_coeffs():
        result = result @ m + ident.scale(int(c))
    return result


# ─── 根隔离与谱半径 ──────────────────────────────────────────────────────────────

def sturm_sequence(poly: Poly) -> list:
    """Sturm 序列 p0 = poly, p1 = poly', p_{i+1} = −rem(p_{i−1}, p_i)。"""
    return [Poly(p, T) for p in sympy.sturm(Poly(poly, T, domain=QQ))]


def count_sign_changes(values) -> int:
    """忽略零值的符号变化次数。"""
    nonzero = [v for v in values if v != 0]
    return sum(1 for a, b in zip(nonzero, nonzero[1:]) if (a > 0) != (b > 0))


def _variations(seq, x: Fraction) -> int:
    point = Rational(x.numerator, x.denominator)
    return count_sign_changes([p.eval(point) for p in seq])


def _cauchy_bound(poly: Poly) -> Fraction:
    coeffs = [to_fraction(c) for c in poly.all_coeffs()]
    lead = abs(coeffs[0])
    return 1 + max((abs(c) / lead for c in coeffs[1:]), default=Fraction(0))


def _irreducible_factors(poly: Poly) -> list:
    _, factors = Poly(poly, T, domain=QQ).factor_list()
    return [Poly(f, T, domain=QQ) for f, _ in factors]


def real_root_intervals(poly: Poly, tol=DEFAULT_TOL) -> list:
    """
    实根隔离：有理根给出退化区间，其余每个实根给出宽度 ≤ tol 的有理区间 (a, b]。
    在每个不可约因子上用 Sturm 序列计数、二分细化。
    """
    tol = to_fraction(tol)
    if tol <= 0:
        raise UsageError("tol 必须为正")
    out = []
    for f in _irreducible_factors(poly):
        if f.degree() < 1:
            continue
        if f.degree() == 1:
            c1, c0 = f.all_coeffs()
            r = -to_fraction(c0) / to_fraction(c1)
            out.append((r, r))
            continue
        seq = sturm_sequence(f)
        bound = _cauchy_bound(f)
        stack = [(-bound, bound)]
        while stack:
            a, b = stack.pop()
            count = _variations(seq, a) - _variations(seq, b)
            if count == 0:
                continue
            if count == 1 and b - a <= tol:
                out.append((a, b))
                continue
            mid = (a + b) / 2
            stack.append((a, mid))
            stack.append((mid, b))
    return sorted(out)


def _sqrt_bounds(lo2: Fraction, hi2: Fraction, tol: Fraction) -> tuple:
    scale = ceil(8 / tol)
    lo = Fraction(isqrt(floor(lo2 * scale * scale)), scale)
    hi = Fraction(isqrt(ceil(hi2 * scale * scale)) + 1, scale)
    return lo, hi


def root_modulus_intervals(poly: Poly, tol=DEFAULT_TOL) -> list:
    """每个不同根的模长有理区间 [lo, hi]，宽度 ≤ tol。"""
    tol = to_fraction(tol)
    out = []
    for f in _irreducible_factors(poly):
        if f.degree() < 1:
            continue
        reals = real_root_intervals(f, tol)
        for a, b in reals:
            if a >= 0:
                out.append((a, b))
            elif b <= 0:
                out.append((-b, -a))
            else:
                out.append((Fraction(0), max(-a, b)))
        if f.degree() > len(reals):
            eps = Rational((tol / 4).numerator, (tol / 4).denominator)
            _, rects = f.intervals(all=True, eps=eps, sqf=True)
            for u, v in rects:
                re_lo, im_lo = to_fraction(sympy.re(u)), to_fraction(sympy.im(u))
                re_hi, im_hi = to_fraction(sympy.re(v)), to_fraction(sympy.im(v))
                x0 = min(max(Fraction(0), re_lo), re_hi)
                y0 = min(max(Fraction(0), im_lo), im_hi)
                lo2 = x0 * x0 + y0 * y0
                hi2 = max(re_lo ** 2, re_hi ** 2) + max(im_lo ** 2, im_hi ** 2)
                out.append(_sqrt_bounds(lo2, hi2, tol))
    return out


def spectral_radius(m: IntMatrix, tol=DEFAULT_TOL) -> tuple:
    """
    最大特征值模长的有理区间 (lo, hi)，宽度 ≤ tol。
    由特征多项式的精确根隔离得到：lo = 各根下界的最大值，hi = 各根上界的最大值。
    """
    tol = to_fraction(tol)
    if tol <= 0:
        raise UsageError("tol 必须为正")
    intervals = root_modulus_intervals(char_poly(m), tol)
    lo = max(a for a, _ in intervals)
    hi = max(b for _, b in intervals)
    log.debug("谱半径区间 [%s, %s]", lo, hi)
    return lo, hi


def spectral_radius_float(m: IntMatrix) -> float:
    """双精度特征值求解给出的谱半径（只作交叉核对）。"""
    eig = np.linalg.eigvals(np.array(m.rows, dtype=float))
    return float(np.max(np.abs(eig)))


# ─── 不动子空间 ──────────────────────────────────────────────────────────────────

def primitive_vector(vec) -> tuple:
    """有理向量化为内容为 1 的整数向量，首个非零分量为正。"""
    fracs = [to_fraction(v) for v in vec]
    den = lcm(*(f.denominator for f in fracs)) if fracs else 1
    ints = [int(f * den) for f in fracs]
    g = 0
    for v in ints:
        g = gcd(g, v)
    if g == 0:
        return tuple(ints)
    ints = [v // g for v in ints]
    first = next(v for v in ints if v != 0)
    if first < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def fixed_subspace(ms: list) -> list:
    """∩ ker(m − I) 的整数基（每个向量内容为 1）。"""
    if not ms:
        raise UsageError("fixed_subspace 需要至少一个矩阵")
    n = ms[0].n
    if any(m.n != n for m in ms):
        raise UsageError("矩阵阶数不一致")
    ident = IntMatrix.identity(n)
    stacked = Matrix.vstack(*[(m - ident).to_sympy() for m in ms])
    return [primitive_vector(list(v)) for v in stacked.nullspace()]
