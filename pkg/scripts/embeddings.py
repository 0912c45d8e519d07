"""
嵌入族模块 — SL(2,Z) Cremona 嵌入验证工具
七个嵌入族（θ_s、θ_-、θ_ε、θ_e、θ_n、θ_P、θ_k）的生成元像与按字求值，
表现关系验证、轨道不交（有界深度）证书、Cayley 三次曲面商映射检查。
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import sympy
from sympy import Symbol
from sympy.polys.domains import QQ_I

from algebra import (
    MultiPoly, P1P1_VARS, P2_VARS, scalar, parse_scalar, scalar_to_sympy, scalar_quad,
    scalar_from_quad, format_scalar,
)
from birmap import (
    BirMap, compose, compose_all, equals, identity,
)
from sl2z import (
    GroupWord, Mat2, R_MAT, S_MAT, IDENTITY, positive_factorization,
    syllable_form, matrix_to_word,
)
from utils import (
    UsageError, SpecError, ResourceError, DEFAULT_TERM_CAP, DEFAULT_ORBIT_DEPTH,
)

log = logging.getLogger(__name__)

_X, _Y = Symbol("x"), Symbol("y")
_LOCALS = {"x": _X, "y": _Y, "i": sympy.I}


# ─── 嵌入参数 ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class EmbeddingSpec:
    """嵌入族及其参数；与该族无关的参数为 None。"""
    family: str
    eps: object = None      # θ_ε 的 ε（高斯有理数，非零）
    n: int = None           # θ_n 的 n ≥ 0
    P: str = None           # θ_P 的有理函数 P(x)
    k: int = None           # θ_k 的偶数 k > 0
    mu: object = None       # θ_k 的 μ ≠ 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"不支持的嵌入族: {self.family}，可选: {', '.join(FAMILIES)}")
        if self.family == "theta_eps":
            if self.eps is None or scalar(self.eps) == QQ_I.zero:
                raise SpecError("θ_ε 需要非零的 ε")
            object.__setattr__(self, "eps", scalar(self.eps))
            if not self.eps_positive:
                log.warning("ε = %s 不是正实数，(⋆) 型四重次数规律不保证成立", format_scalar(self.eps))
        if self.family == "theta_n":
            if self.n is None or int(self.n) < 0:
                raise SpecError(f"θ_n 需要 n ≥ 0，得到 {self.n}")
            object.__setattr__(self, "n", int(self.n))
        if self.family == "theta_P":
            if not self.P:
                raise SpecError("θ_P 需要有理函数 P")
            _check_p(self.P)
        if self.family == "theta_k":
            if self.k is None or int(self.k) <= 0 or int(self.k) % 2:
                raise SpecError(f"θ_k 需要正偶数 k，得到 {self.k}")
            if self.mu is None or scalar(self.mu) == QQ_I.zero:
                raise SpecError("θ_k 需要非零的 μ")
            object.__setattr__(self, "k", int(self.k))
            object.__setattr__(self, "mu", scalar(self.mu))

    @property
    def label(self) -> str:
        return FAMILIES[self.family][0]

    @property
    def ambient(self) -> str:
        return FAMILIES[self.family][3]

    @property
    def eps_positive(self) -> bool:
        e = self.eps
        return e is not None and e.y == 0 and e.x > 0

    def params(self) -> dict:
        """非空参数，精确标量写成字符串。"""
        out = {}
        for key in ("eps", "n", "P", "k", "mu"):
            v = getattr(self, key)
            if v is not None:
                out[key] = format_scalar(v) if key in ("eps", "mu") else v
        return out

    def __str__(self) -> str:
        ps = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.family}({ps})" if ps else self.family

    def to_json(self) -> dict:
        params = {}
        for key in ("eps", "n", "P", "k", "mu"):
            v = getattr(self, key)
            if v is not None:
                params[key] = scalar_quad(v) if key in ("eps", "mu") else v
        return {"family": self.family, "params": params}

    @classmethod
    def from_json(cls, data: dict) -> "EmbeddingSpec":
        params = dict(data.get("params", {}))
        for key in ("eps", "mu"):
            if key in params:
                params[key] = scalar_from_quad(params[key])
        return cls(data["family"], **params)


def make_spec(family: str, **params) -> EmbeddingSpec:
    """按族的默认参数补全；字符串形式的 ε、μ 会被解析。"""
    if family not in FAMILIES:
        raise SpecError(f"不支持的嵌入族: {family}，可选: {', '.join(FAMILIES)}")
    merged = dict(FAMILIES[family][2])
    merged.update({k: v for k, v in params.items() if v is not None and k in merged})
    for key in ("eps", "mu"):
        if isinstance(merged.get(key), str):
            merged[key] = parse_scalar(merged[key])
    return EmbeddingSpec(family, **merged)


def _parse_p(text: str):
    try:
        expr = sympy.sympify(text, locals=_LOCALS, rational=True)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise SpecError(f"无法解析 P: {text!r}") from exc
    if not expr.free_symbols <= {_X}:
        raise SpecError(f"P 只能含变量 x: {text}")
    return expr


def _check_p(text: str):
    """分子、分母各自无重根且互素（不先约分）。"""
    num, den = sympy.fraction(sympy.together(_parse_p(text)))
    if num == 0:
        raise SpecError("P 不能恒为零")
    if sympy.degree(sympy.gcd(num, den), _X) > 0:
        raise SpecError(f"P 的分子分母有公因子: {text}")
    for part in (num, den):
        if sympy.degree(part, _X) > 0 and sympy.degree(sympy.gcd(part, sympy.diff(part, _X)), _X) > 0:
            raise SpecError(f"P 的零点或极点不是单重的: {text}")


# ─── 生成元像 ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GeneratorImages:
    """alphabet 为 "SR"（按 R、S 定义）或 "S(RS)"（按 S、RS 定义，经音节形式求值）。"""
    ambient: str
    alphabet: str
    images: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> BirMap:
        return self.images[key]

    def letter(self, gen: str, sign: int) -> BirMap:
        return self.images[gen if sign > 0 else f"{gen}^-1"]


def _monomial(m: Mat2):
    return (_X ** m.a * _Y ** m.b, _X ** m.c * _Y ** m.d)


def _theta_n_affine(m: Mat2, n: int, chi):
    den = m.c * _X + m.d
    return ((m.a * _X + m.b) / den, scalar_to_sympy(chi) * _Y / den ** n)


def direct_image(spec: EmbeddingSpec, m: Mat2) -> BirMap:
    """θ_s、θ_e、θ_n 对任意矩阵的闭式像。"""
    if spec.family == "theta_s":
        return BirMap.from_affine("P2", _monomial(m), name=f"θ_s({m})")
    if spec.family == "theta_e":
        x, y, z = (Symbol(v) for v in P2_VARS)
        return BirMap.from_components("P2", [m.a * x + m.b * y, m.c * x + m.d * y, z], name=f"θ_e({m})")
    if spec.family == "theta_n":
        chi = character(spec, matrix_to_word(m))
        return BirMap.from_affine("P2", _theta_n_affine(m, spec.n, chi), name=f"θ_n({m})")
    raise UsageError(f"闭式像只支持 theta_s、theta_e、theta_n，得到 {spec.family}")


def character(spec: EmbeddingSpec, w: GroupWord):
    """θ_n 的特征 χ：χ(S) = 1（n 奇）或 i（n 偶），χ(RS) = 1。"""
    if spec.family != "theta_n":
        raise UsageError(f"特征 χ 只对 theta_n 有定义，得到 {spec.family}")
    chi_s = QQ_I.one if spec.n % 2 else QQ_I(0, 1)
    power = sum(e if g == "S" else -e for g, e in w.letters) % 4
    return chi_s ** power


def _from_matrices(spec: EmbeddingSpec) -> dict:
    r_inv, s_inv = R_MAT.inverse(), S_MAT.inverse()
    return {"S": direct_image(spec, S_MAT), "S^-1": direct_image(spec, s_inv),
            "R": direct_image(spec, R_MAT), "R^-1": direct_image(spec, r_inv)}


def _theta_s(spec):
    return GeneratorImages("P2", "SR", _from_matrices(spec))


def _theta_minus(spec):
    images = _from_matrices(make_spec("theta_s"))
    images["R"] = BirMap.from_affine("P2", (_X * _Y, -_Y), name="θ_-(R)")
    images["R^-1"] = BirMap.from_affine("P2", (-_X / _Y, -_Y), name="θ_-(R^-1)")
    return GeneratorImages("P2", "SR", images)


def _theta_eps(spec):
    e = scalar_to_sympy(spec.eps)
    x, y = _X, _Y
    images = {
        "S": BirMap.from_affine("P1xP1", (y, -x), name="θ_ε(S)"),
        "S^-1": BirMap.from_affine("P1xP1", (-y, x), name="θ_ε(S^-1)"),
        "R": BirMap.from_affine("P1xP1", ((x + e * y) / (e + x * y), e * y), name="θ_ε(R)"),
        "R^-1": BirMap.from_affine("P1xP1", (e * (e * x - y) / (e - x * y), y / e), name="θ_ε(R^-1)"),
    }
    return GeneratorImages("P1xP1", "SR", images)


def theta_eps_r2(eps) -> tuple:
    """θ_ε(R₂) 与其逆，R₂ = (RS)²S = [[1,0],[1,1]]。"""
    e = scalar_to_sympy(scalar(eps))
    x, y = _X, _Y
    r2 = BirMap.from_affine("P1xP1", (x / e, e * (x + e * y) / (e + x * y)), name="θ_ε(R2)")
    r2_inv = BirMap.from_affine("P1xP1", (e * x, (y - e * x) / (e - x * y)), name="θ_ε(R2^-1)")
    return r2, r2_inv


def _theta_e(spec):
    return GeneratorImages("P2", "SR", _from_matrices(spec))


def _theta_n(spec):
    return GeneratorImages("P2", "SR", _from_matrices(spec))


def _theta_p(spec):
    p = _parse_p(spec.P)
    x, y = _X, _Y
    i = sympy.I
    # φ_P = (x, y·P(x))，θ_P(RS) = φ_P ∘ ((x−1)/x, y) ∘ φ_P⁻¹
    u = (x - 1) / x
    u_inv = 1 / (1 - x)
    images = {
        "S": BirMap.from_affine("P1xP1", (-1 / x, i * y), name="θ_P(S)"),
        "S^-1": BirMap.from_affine("P1xP1", (-1 / x, -i * y), name="θ_P(S^-1)"),
        "RS": BirMap.from_affine("P1xP1", (u, y * p.xreplace({x: u}) / p), name="θ_P(RS)"),
        "RS^-1": BirMap.from_affine("P1xP1", (u_inv, y * p.xreplace({x: u_inv}) / p), name="θ_P((RS)^-1)"),
    }
    return GeneratorImages("P1xP1", "S(RS)", images)


def _theta_k(spec):
    k, mu = spec.k, scalar_to_sympy(spec.mu)
    x, y, z = (Symbol(v) for v in P2_VARS)
    psi1 = BirMap.from_components("P2", [x ** k, y * x ** (k - 1) + z ** k, z * x ** (k - 1)])
    psi1_inv = BirMap.from_components("P2", [x ** k, y * x ** (k - 1) - z ** k, z * x ** (k - 1)])
    a = BirMap.from_components("P2", [x + mu * y, y, z])
    a_inv = BirMap.from_components("P2", [x - mu * y, y, z])
    psi = compose_all([a, psi1, a_inv])
    psi_inv = compose_all([a, psi1_inv, a_inv])
    e_u = BirMap.from_components("P2", [-x + y, -x, z])
    e_u_inv = BirMap.from_components("P2", [-y, x - y, z])
    images = {
        "S": BirMap.from_components("P2", [y, -x, z], name="θ_k(S)"),
        "S^-1": BirMap.from_components("P2", [-y, x, z], name="θ_k(S^-1)"),
        "RS": compose_all([psi, e_u, psi_inv]).with_name("θ_k(RS)"),
        "RS^-1": compose_all([psi, e_u_inv, psi_inv]).with_name("θ_k((RS)^-1)"),
    }
    log.debug("θ_k(RS) 次数 %d", images["RS"].degree())
    return GeneratorImages("P2", "S(RS)", images)


# 嵌入族注册表: key → (中文名, 生成元像构造函数, 默认参数, 环境空间)
FAMILIES = {
    "theta_s": ("标准嵌入 θ_s（单项式映射）", _theta_s, {}, "P2"),
    "theta_minus": ("扭转嵌入 θ_-", _theta_minus, {}, "P2"),
    "theta_eps": ("θ_ε 族（P¹×P¹）", _theta_eps, {"eps": 1}, "P1xP1"),
    "theta_e": ("椭圆嵌入 θ_e（线性）", _theta_e, {}, "P2"),
    "theta_n": ("椭圆嵌入 θ_n（带特征 χ）", _theta_n, {"n": 0}, "P2"),
    "theta_P": ("抛物嵌入 θ_P", _theta_p, {"P": "(x-2)/(x-3)"}, "P1xP1"),
    "theta_k": ("双曲嵌入 θ_k", _theta_k, {"k": 2, "mu": 5}, "P2"),
}


@lru_cache(maxsize=32)
def generator_images(spec: EmbeddingSpec) -> GeneratorImages:
    images = FAMILIES[spec.family][1](spec)
    for key, value in images.images.items():
        log.debug("%s: %s 次数 %d", spec, key, value.degree())
    return images


# ─── 按字求值 ───────────────────────────────────────────────────────────────────

def _letter_maps(spec: EmbeddingSpec, w: GroupWord) -> list:
    images = generator_images(spec)
    maps = []
    if images.alphabet == "SR":
        for gen, exp in w.letters:
            maps.extend([images.letter(gen, exp)] * abs(exp))
        return maps
    form = syllable_form(w)
    if form.prefix:
        maps.extend([images["S^-1"]] if form.prefix == 3 else [images["S"]] * form.prefix)
    for a, b in form.syllables:
        maps.append(images.letter("RS", a))
        if b:
            maps.append(images.letter("S", b))
    return maps


def evaluate(spec: EmbeddingSpec, w, cap: int = DEFAULT_TERM_CAP) -> BirMap:
    """θ(w₁⋯w_k) = θ(w₁)∘⋯∘θ(w_k)，从最右边的字母开始累积。"""
    if isinstance(w, str):
        w = GroupWord.parse(w)
    maps = _letter_maps(spec, w)
    if not maps:
        return identity(spec.ambient)
    acc = maps[-1]
    for step, m in enumerate(reversed(maps[:-1]), start=2):
        acc = compose(m, acc)
        if acc.nterms > cap:
            raise ResourceError(step, acc.nterms, cap)
    return acc.with_name(f"θ({w})")


def theta_eps_positive(eps, m: Mat2) -> BirMap:
    """非负矩阵上 θ_ε 的显式递推（不做 gcd 约分），按 R₁、R₂ 分解从右往左展开。"""
    e = scalar(eps)
    blocks = (2, 2)
    p1, p2, p3, p4 = (MultiPoly.variable(P1P1_VARS, i, blocks) for i in range(4))
    for letter in reversed(positive_factorization(m)):
        cross = p1 * p4 + p2 * p3 * e
        other = p2 * p4 * e + p1 * p3
        if letter == "R1":
            p1, p2, p3, p4 = cross, other, p3 * e, p4
        else:
            p1, p2, p3, p4 = p1, p2 * e, cross * e, other
    raw = (p1.degrees + p3.degrees)
    f = BirMap("P1xP1", (p1, p2, p3, p4), name=f"θ_ε({m})")
    if f.quadridegree() != raw:
        log.warning("正矩阵 %s 的递推出现约分: %s → %s", m, raw, f.quadridegree())
    return f


# ─── 关系验证 ───────────────────────────────────────────────────────────────────

@dataclass
class RelationReport:
    spec: EmbeddingSpec
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"spec": str(self.spec), "checks": dict(self.checks), "passed": self.passed}


def verify_relations(spec: EmbeddingSpec, cap: int = DEFAULT_TERM_CAP) -> RelationReport:
    """S⁴ = (RS)³ = 1，S² 与 RS 交换，θ(S²) ≠ 1。"""
    images = generator_images(spec)
    ident = identity(spec.ambient)
    s = images["S"]
    s2 = compose(s, s)
    u = compose(evaluate(spec, "R", cap), s)
    u2 = compose(u, u)
    report = RelationReport(spec)
    report.checks["S^4 = 1"] = equals(compose(s2, s2), ident)
    report.checks["(RS)^3 = 1"] = equals(compose(u, u2), ident)
    report.checks["S^2 RS = RS S^2"] = equals(compose(s2, u), compose(u, s2))
    report.checks["θ(S^2) ≠ 1"] = not equals(s2, ident)
    log.info("%s 关系验证: %s", spec, "通过" if report.passed else "失败")
    return report


# ─── 轨道不交证书 ────────────────────────────────────────────────────────────────

# PSL(2,Z) 中的字母（S⁻¹ = −S 与 S 作用相同）
_ORBIT_LETTERS = (("R", 1, R_MAT), ("R", -1, R_MAT.inverse()), ("S", 1, S_MAT))


def _as_proj(value) -> tuple:
    """None 表示 ∞ = (1 : 0)。"""
    if value is None:
        return (QQ_I.one, QQ_I.zero)
    return (scalar(value), QQ_I.one)


def _mobius(m: Mat2, p: tuple) -> tuple:
    u, v = p
    return (u * m.a + v * m.b, u * m.c + v * m.d)


def _same(p: tuple, q: tuple) -> bool:
    return p[0] * q[1] == p[1] * q[0]


def _format_proj(p: tuple) -> str:
    return "∞" if p[1] == QQ_I.zero else format_scalar(p[0] / p[1])


@dataclass(frozen=True)
class OrbitCertificate:
    """有界深度证书：只断言“验证到深度 depth”。"""
    holds: bool
    depth: int
    elements_checked: int
    values: tuple
    witness: str = ""

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "verified_to_depth": self.depth,
            "elements_checked": self.elements_checked,
            "values": list(self.values),
            "witness": self.witness,
        }


def orbit_disjointness_check(values, depth: int = DEFAULT_ORBIT_DEPTH) -> OrbitCertificate:
    """
    在 PSL(2,Z) 中字长 ≤ depth 的元素（按字母个数计）作用 x ↦ (ax+b)/(cx+d) 下：
    各值两两不在同一轨道，且没有非单位元固定任一值。
    """
    if depth < 1:
        raise UsageError(f"深度必须 ≥ 1，得到 {depth}")
    pts = [_as_proj(v) for v in values]
    labels = tuple(_format_proj(p) for p in pts)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if _same(pts[i], pts[j]):
                return OrbitCertificate(False, depth, 0, labels, f"{labels[i]} 重复出现")

    def key(m: Mat2) -> tuple:
        return min(m.entries(), (-m).entries())

    seen = {key(IDENTITY)}
    frontier = [(IDENTITY, ())]
    checked = 0
    for _ in range(depth):
        nxt = []
        for mat, letters in frontier:
            for gen, exp, gm in _ORBIT_LETTERS:
                m = mat @ gm
                if key(m) in seen:
                    continue
                seen.add(key(m))
                word = letters + ((gen, exp),)
                nxt.append((m, word))
                checked += 1
                for i, p in enumerate(pts):
                    image = _mobius(m, p)
                    for j, q in enumerate(pts):
                        if _same(image, q):
                            w = GroupWord(word)
                            if i == j:
                                witness = f"{w} 固定 {labels[i]}"
                            else:
                                witness = f"{w} 把 {labels[i]} 映到 {labels[j]}"
                            log.warning("轨道检查失败: %s", witness)
                            return OrbitCertificate(False, depth, checked, labels, witness)
        frontier = nxt
    log.info("轨道不交验证到深度 %d（%d 个群元素）", depth, checked)
    return OrbitCertificate(True, depth, checked, labels)


def p_zeros_and_poles(spec: EmbeddingSpec) -> tuple:
    """P 在 P¹ 上的零点与极点（含 ∞）；非线性不可约因子的根无法精确表示，单独返回。"""
    expr = _parse_p(spec.P)
    num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))
    points, unresolved = [], []
    for part in (num, den):
        _, factors = sympy.factor_list(part, _X, gaussian=True)
        for f, _ in factors:
            deg = sympy.degree(f, _X)
            if deg == 1:
                root = sympy.solve(f, _X)[0]
                points.append(scalar(QQ_I.from_sympy(sympy.expand(root))))
            elif deg > 1:
                unresolved.append(str(f))
    if sympy.degree(num, _X) != sympy.degree(den, _X):
        points.append(None)
    return points, unresolved


def hypothesis_report(spec: EmbeddingSpec, depth: int = DEFAULT_ORBIT_DEPTH) -> dict:
    """报告（不强制）各族的一般性假设。"""
    items = []
    if spec.family == "theta_eps":
        items.append({"name": "ε 为正实数", "holds": spec.eps_positive, "detail": format_scalar(spec.eps)})
    elif spec.family == "theta_P":
        points, unresolved = p_zeros_and_poles(spec)
        cert = orbit_disjointness_check(points, depth)
        item = {"name": "P 的零点与极点轨道两两不交且无迷向", "holds": cert.holds, **cert.to_dict()}
        if unresolved:
            item["holds"] = False
            item["unresolved_factors"] = unresolved
        items.append(item)
    elif spec.family == "theta_k":
        cert = orbit_disjointness_check([spec.mu], depth)
        items.append({"name": "μ 的迷向群平凡", **cert.to_dict()})
    for item in items:
        if not item["holds"]:
            log.warning("%s: 假设“%s”未通过", spec, item["name"])
    return {"spec": str(spec), "hypotheses": items}


# ─── Cayley 三次曲面 ─────────────────────────────────────────────────────────────

def cayley_quotient() -> tuple:
    """P¹×P¹ → P³ 的四个双二次分量 (W, X, Y, Z)。"""
    x, y = _X, _Y
    affine = [
        (x - 1) * (x - y) * (1 + y),
        (y - 1) * (y - x) * (1 + x),
        (x * y + 1) * (x + 1) * (y + 1),
        (x - 1) * (y - 1) * (x * y + 1),
    ]
    x1, x2, y1, y2 = (Symbol(v) for v in P1P1_VARS)
    sub = {x: x1 / x2, y: y1 / y2}
    return tuple(
        MultiPoly.from_expr(sympy.expand(x2 ** 2 * y2 ** 2 * f.xreplace(sub)), P1P1_VARS, (2, 2))
        for f in affine
    )


def cayley_check(involution: BirMap = None) -> dict:
    """商映射在对合下不变（作为到 P³ 的映射），且像落在 XYZ+WYZ+WXZ+WXY = 0 上。"""
    if involution is None:
        involution = BirMap.from_affine("P1xP1", (1 / _X, 1 / _Y), name="(1/x, 1/y)")
    if involution.ambient != "P1xP1":
        raise UsageError("Cayley 检查的对合必须是 P¹×P¹ 映射")
    q = cayley_quotient()
    d1, d2, d3, d4 = involution.quadridegree()
    degrees = (2 * d1 + 2 * d3, 2 * d2 + 2 * d4)
    pulled = [c.substitute(list(involution.components), (2, 2), degrees) for c in q]
    invariant = all(
        pulled[i] * q[j] == pulled[j] * q[i]
        for i in range(4) for j in range(i + 1, 4)
    )
    w, x, y, z = q
    on_cubic = (x * y * z + w * y * z + w * x * z + w * x * y).is_zero
    name = involution.name or str(involution)
    log.info("Cayley 检查（%s）: 不变=%s，三次曲面=%s", name, invariant, on_cubic)
    return {"involution": name, "invariant": invariant, "on_cubic": on_cubic,
            "passed": invariant and on_cubic}
