"""
Picard 格模块 — SL(2,Z) Cremona 嵌入验证工具
带交形式的整格与内置等距矩阵：保形检查、典范类固定、阶数、公共不动子空间、
ρ₁/ρ₂ 字的等距与 ℓ_n 不等式归纳验证、Gram 矩阵交叉项推导（含矛盾证书）。
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd
import sympy
from sympy import Matrix, Symbol, linear_eq_to_matrix, linsolve

from algebra import IntMatrix, fixed_subspace, spectral_radius, spectral_radius_float
from utils import (
    UsageError, SpecError, DEFAULT_TOL, format_rational, format_decimal, format_interval,
)

log = logging.getLogger(__name__)

P, Q, R = Symbol("p"), Symbol("q"), Symbol("r")    # E·E′, E·E_τ, E′·E_τ


# ─── 格与等距 ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MarkedLattice:
    """有序基标签、Gram 矩阵（可含未知数符号）与典范向量 K（坐标）。"""
    labels: tuple
    gram: Matrix
    canonical: tuple = None
    k_squared: int = None

    def __post_init__(self):
        n = len(self.labels)
        if self.gram.shape != (n, n):
            raise UsageError(f"Gram 矩阵形状 {self.gram.shape} 与基 {self.labels} 不符")
        if self.gram != self.gram.T:
            raise UsageError("Gram 矩阵必须对称")
        if self.canonical is not None and len(self.canonical) != n:
            raise UsageError("典范向量长度与秩不符")

    def __hash__(self):
        return hash((self.labels, tuple(self.gram), self.canonical))

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def unknowns(self) -> set:
        return set(self.gram.free_symbols)

    @property
    def is_known(self) -> bool:
        return not self.unknowns

    def dot(self, u, v):
        return sympy.expand((Matrix([list(u)]) * self.gram * Matrix(list(v)))[0, 0])

    def square(self, v):
        return self.dot(v, v)

    def substitute(self, solution: dict) -> "MarkedLattice":
        return MarkedLattice(self.labels, self.gram.subs(solution), self.canonical, self.k_squared)

    def sublattice(self, labels) -> "MarkedLattice":
        idx = [self.labels.index(lab) for lab in labels]
        return MarkedLattice(tuple(labels), self.gram.extract(idx, idx))


def fibre_gram() -> Matrix:
    """两个圆锥丛纤维类：f₁² = f₂² = 0，f₁·f₂ = 2。"""
    return Matrix([[0, 2], [2, 0]])


def exceptional_gram(count: int) -> Matrix:
    """同一次爆破的互不相交例外曲线：对角 −1。"""
    return -sympy.eye(count)


def _lattice(labels, blocks, canonical=None, k_squared=None, extra=None) -> MarkedLattice:
    """f₁, f₂ 块加上给定自交数的对角块；extra 为额外的对称项 {(i, j): 值}。"""
    n = len(labels)
    g = sympy.zeros(n, n)
    g[0, 1] = g[1, 0] = 2
    for i, d in enumerate(blocks, start=2):
        g[i, i] = d
    for (i, j), v in (extra or {}).items():
        g[i, j] = g[j, i] = v
    return MarkedLattice(tuple(labels), g, canonical, k_squared)


@dataclass(frozen=True)
class IsometryAction:
    """某个情形下作用在标记格上的整数矩阵（列为基向量的像）。"""
    tag: str
    label: str
    matrix: IntMatrix
    lattice: MarkedLattice
    declared_order: int
    square: IntMatrix = None        # 印出的 α² 矩阵
    flags: tuple = ()
    note: str = ""

    def __post_init__(self):
        if self.matrix.n != self.lattice.rank:
            raise UsageError(f"{self.tag}: 矩阵阶数 {self.matrix.n} 与格的秩 {self.lattice.rank} 不符")

    @property
    def gated(self) -> bool:
        """标记为非几何的情形不参与通过/失败判定。"""
        return "non-geometric" not in self.flags


@dataclass(frozen=True)
class HVector:
    """H_n = (−a_n, −b_n, −c_n, ℓ_n)。"""
    n: int
    coords: tuple

    @property
    def a(self) -> int:
        return -self.coords[0]

    @property
    def b(self) -> int:
        return -self.coords[1]

    @property
    def c(self) -> int:
        return -self.coords[2]

    @property
    def ell(self) -> int:
        return self.coords[3]

    def inequalities(self, case: str) -> dict:
        """逐条检查该步的不等式。"""
        a, b, c, ell, n = self.a, self.b, self.c, self.ell, self.n
        checks = {"a,b,c,ℓ ≥ 0": min(a, b, c, ell) >= 0}
        if case == "j1":
            checks["ℓ > 6c/5"] = ell > Fraction(6, 5) * c
            checks["ℓ > 2a"] = ell > 2 * a
        else:
            checks["ℓ > c"] = ell > c
        checks[f"ℓ ≥ {BOUND_LABELS[case]}^n"] = ell >= growth_bound(case, n)
        return checks


# ─── 内置情形 ───────────────────────────────────────────────────────────────────

def _m(rows) -> IntMatrix:
    return IntMatrix(tuple(tuple(r) for r in rows))


_L_M6_I = _lattice(("f1", "f2", "E1"), (-1,), (1, 1, -1), 3)
_L_M6_II = _lattice(("f1", "f2", "E1", "E2", "E3"), (-1, -1, -1), (1, 1, -1, -1, -1), 1)
_L_M4_I = _lattice(("f1", "f2", "E1", "E2"), (-1, -1), (1, 1, -1, -1), 2)
_L_M4_II = _lattice(("f1", "f2", "E1", "E2", "E3"), (-1, -1, -1), (1, 1, -1, -1, -1), 1)
_L_TAU = _lattice(("f1", "f2", "Etau"), (-2,), (1, 1, -1))

_Z_LABELS = ("f1", "f2", "E", "E'", "Etau")
_Z_K = (1, 1, -1, -1, -1)
# E² 为 −3（j=1）或 −1（j=2,3）；交叉项 E·E′、E·E_τ、E′·E_τ 未知
_L_Z = {
    "j1": _lattice(_Z_LABELS, (-3, -2, -2), _Z_K, -3, {(2, 3): P, (2, 4): Q, (3, 4): R}),
    "j23": _lattice(_Z_LABELS, (-1, -2, -2), _Z_K, -1, {(2, 3): P, (2, 4): Q, (3, 4): R}),
}

# W₀ 的基（5 维坐标）与声称的自交数
W0_BASIS = {
    "j1": ((1, 0, 0, -1, 0), (2, 1, 0, -1, -2), (3, 1, -2, -1, -2), (4, 2, -2, -2, -3)),
    "j23": ((1, 0, 0, -1, 0), (2, 1, 0, -1, -2), (8, 2, -2, -2, -5), (9, 3, -2, -3, -6)),
}
W0_SQUARES = {"j1": (-2, -2, -2, 2), "j23": (-2, -2, -6, 6)}

_L_W0 = {
    case: MarkedLattice(("w1", "w2", "w3", "w4"), Matrix.diag(*W0_SQUARES[case]))
    for case in ("j1", "j23")
}

_BETA_Z = _m([[5, 10, 0, 6, 8], [2, 5, 0, 2, 4], [0, 0, 1, 0, 0], [-2, -6, 0, -3, -4], [-4, -8, 0, -4, -7]])

_RED_ALPHA = {
    "j1": (_m([[0, -1, -2, -2], [-2, -2, -3, -4], [-1, 0, -2, -2], [2, 2, 4, 5]]),
           _m([[0, -2, -1, -2], [-1, -2, 0, -2], [-2, -3, -2, -4], [2, 4, 2, 5]])),
    "j23": (_m([[-2, -9, -18, -24], [-6, -20, -36, -51], [-6, -18, -35, -48], [7, 22, 42, 58]]),
            _m([[-2, -6, -18, -21], [-9, -20, -54, -66], [-6, -12, -35, -42], [8, 17, 48, 58]])),
}
_RED_BETA = IntMatrix.diagonal((-1, -1, 1, 1))

_M4_II_NOTE = "数值上可能但不存在的情形；印出矩阵第 1、2 列下方块的符号与保形要求不符"

# 情形注册表: tag → IsometryAction
CASES = {
    "M6-i": IsometryAction(
        "M6-i", "α 作用于 Pic(X)^{α³}，(K_X)² = 3",
        _m([[1, 1, 1], [1, 0, 0], [-2, 0, -1]]), _L_M6_I, 3,
        square=_m([[0, 1, 0], [1, 1, 1], [0, -2, -1]])),
    "M6-ii": IsometryAction(
        "M6-ii", "α 作用于 Pic(X)^{α³}，(K_X)² = 1",
        _m([[1, 3, 1, 1, 1], [3, 4, 2, 2, 2], [-2, -4, -2, -2, -1],
            [-2, -4, -1, -2, -2], [-2, -4, -2, -1, -2]]), _L_M6_II, 3,
        square=_m([[4, 3, 2, 2, 2], [3, 1, 1, 1, 1], [-4, -2, -2, -1, -2],
                   [-4, -2, -2, -2, -1], [-4, -2, -1, -2, -2]])),
    "M4-i": IsometryAction(
        "M4-i", "β 作用于 Pic(Y)^{β²}，(K_Y)² = 2",
        _m([[1, 2, 1, 1], [2, 1, 1, 1], [-2, -2, -2, -1], [-2, -2, -1, -2]]), _L_M4_I, 2),
    "M4-ii": IsometryAction(
        "M4-ii", "β 作用于 Pic(Y)^{β²}，(K_Y)² = 1",
        _m([[3, 4, 2, 2, 2], [4, 3, 2, 2, 2], [-3, -3, -3, -2, -2],
            [-3, -3, -2, -3, -2], [-3, -3, -2, -2, -3]]), _L_M4_II, 2,
        flags=("non-geometric",), note=_M4_II_NOTE),
    "tau-relations": IsometryAction(
        "tau-relations", "X₄ ⇢ Y₄ 的基变换 (f₁, f₂, E_τ)",
        _m([[1, 2, 2], [0, 1, 0], [0, -2, -1]]), _L_TAU, 2),
    "Zj1-α": IsometryAction(
        "Zj1-α", "j=1: α 作用于 (f₁, f₂, E, E′, E_τ)",
        _m([[1, 3, 3, 0, 0], [3, 4, 6, 0, 0], [-2, -4, -5, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]]),
        _L_Z["j1"], 3),
    "Zj1-β": IsometryAction("Zj1-β", "j=1: β 作用于 (f₁, f₂, E, E′, E_τ)", _BETA_Z, _L_Z["j1"], 2),
    "Zj23-α": IsometryAction(
        "Zj23-α", "j=2,3: α 作用于 (f₁, f₂, E, E′, E_τ)",
        _m([[0, 1, 0, 0, 0], [1, 1, 1, 0, 0], [0, -2, -1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]]),
        _L_Z["j23"], 3),
    "Zj23-β": IsometryAction("Zj23-β", "j=2,3: β 作用于 (f₁, f₂, E, E′, E_τ)", _BETA_Z, _L_Z["j23"], 2),
    "Zj1-red-α": IsometryAction(
        "Zj1-red-α", "j=1: α 作用于 W₀", _RED_ALPHA["j1"][0], _L_W0["j1"], 3, square=_RED_ALPHA["j1"][1]),
    "Zj1-red-β": IsometryAction("Zj1-red-β", "j=1: β 作用于 W₀", _RED_BETA, _L_W0["j1"], 2),
    "Zj23-red-α": IsometryAction(
        "Zj23-red-α", "j=2,3: α 作用于 W₀", _RED_ALPHA["j23"][0], _L_W0["j23"], 3, square=_RED_ALPHA["j23"][1]),
    "Zj23-red-β": IsometryAction("Zj23-red-β", "j=2,3: β 作用于 W₀", _RED_BETA, _L_W0["j23"], 2),
}

Z_CASES = ("j1", "j23")


def builtin_action(tag: str) -> IsometryAction:
    if tag not in CASES:
        raise SpecError(f"未知情形: {tag}，可选: {', '.join(CASES)}")
    act = CASES[tag]
    if not act.gated:
        log.warning("%s: %s", tag, act.note)
    return act


def normalize_case(case) -> str:
    """'1'/'j1' → 'j1'；'2'/'3'/'23'/'j2'/'j3'/'j23' → 'j23'。"""
    key = str(case).lower().lstrip("j")
    if key == "1":
        return "j1"
    if key in ("2", "3", "23"):
        return "j23"
    raise SpecError(f"未知情形 j={case}，可选: j1, j23")


# ─── 检查 ───────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FormCheck:
    """Gram 已知时 holds 为布尔值；含未知数时 holds 为 None，constraints 为须为零的线性式。"""
    holds: object
    constraints: tuple = ()

    def __bool__(self) -> bool:
        return self.holds is True


def _form_defect(m: IntMatrix, lattice: MarkedLattice) -> list:
    """MᵀGM − G 上三角部分的非零项。"""
    g = lattice.gram
    mm = m.to_sympy()
    diff = (mm.T * g * mm - g).applyfunc(sympy.expand)
    n = lattice.rank
    return [diff[i, j] for i in range(n) for j in range(i, n) if diff[i, j] != 0]


def preserves_form(act: IsometryAction) -> FormCheck:
    defect = _form_defect(act.matrix, act.lattice)
    if act.lattice.is_known:
        return FormCheck(not defect)
    return FormCheck(None, tuple(defect))


def fixes_canonical(act: IsometryAction) -> bool:
    k = act.lattice.canonical
    if k is None:
        raise UsageError(f"{act.tag} 的格没有设定典范向量")
    return act.matrix.apply(k) == tuple(k)


def order_check(act_or_matrix, limit: int = 12):
    """最小的 p ≤ limit 使 M^p = I；没有则返回 None。"""
    m = act_or_matrix.matrix if isinstance(act_or_matrix, IsometryAction) else act_or_matrix
    p = m
    for k in range(1, limit + 1):
        if p.is_identity():
            return k
        p = p @ m
    return None


def case_report(act: IsometryAction) -> dict:
    """单个内置情形的全部检查；非几何情形只报告，不计入通过与否。"""
    checks = {}
    form = preserves_form(act)
    if form.holds is not None:
        checks["保持交形式"] = bool(form)
    if act.lattice.canonical is not None:
        checks["M·K = K"] = fixes_canonical(act)
    checks[f"阶数 = {act.declared_order}"] = order_check(act) == act.declared_order
    if act.square is not None:
        checks["印出的 α² = α·α"] = act.matrix @ act.matrix == act.square
    out = {"case": act.tag, "label": act.label, "checks": checks, "gated": act.gated,
           "passed": all(checks.values())}
    if form.holds is None:
        out["form_constraints"] = [f"{c} = 0" for c in form.constraints]
    if act.note:
        out["note"] = act.note
    return out


def canonical_fixed_space(case: str) -> list:
    """Z 上 α、β 的公共不动子空间。"""
    case = normalize_case(case)
    prefix = "Zj1" if case == "j1" else "Zj23"
    return fixed_subspace([CASES[f"{prefix}-α"].matrix, CASES[f"{prefix}-β"].matrix])


# ─── ρ 字与不等式归纳 ────────────────────────────────────────────────────────────

BOUND_LABELS = {"j1": "(5/3)", "j23": "10"}
H0 = (0, 0, 0, 1)


def growth_bound(case: str, n: int) -> Fraction:
    return Fraction(5, 3) ** n if case == "j1" else Fraction(10) ** n


def rho(case, i: int) -> IntMatrix:
    """ρ_i = α^i β（约化后的 4×4 矩阵），i ∈ {1, 2}。"""
    case = normalize_case(case)
    if i not in (1, 2):
        raise UsageError(f"字母只能是 1 或 2（ρ₁、ρ₂），得到 {i}")
    return _RED_ALPHA[case][i - 1] @ _RED_BETA


def parse_letters(text) -> tuple:
    """'1,2,1' 或 [1, 2, 1] → (1, 2, 1)。"""
    if isinstance(text, str):
        parts = [p for p in text.replace(" ", "").split(",") if p]
        try:
            letters = tuple(int(p) for p in parts)
        except ValueError as exc:
            raise UsageError(f"无法解析字母序列: {text!r}") from exc
    else:
        letters = tuple(int(v) for v in text)
    if not letters or any(v not in (1, 2) for v in letters):
        raise UsageError(f"字母序列须非空且只含 1、2，得到 {text!r}")
    return letters


def word_isometry(case, letters) -> IntMatrix:
    """按顺序作用：H_n = ρ_{i_n}⋯ρ_{i_1}·H₀，返回 ρ_{i_n}⋯ρ_{i_1}。"""
    letters = parse_letters(letters)
    m = IntMatrix.identity(4)
    for i in letters:
        m = rho(case, i) @ m
    return m


def h_sequence(case, letters, n_max: int = None) -> list:
    """H₀, H₁, …；n_max 超过字长时循环使用该字（字的幂）。"""
    case = normalize_case(case)
    letters = parse_letters(letters)
    n_max = len(letters) if n_max is None else n_max
    if n_max < 1:
        raise UsageError(f"n_max 必须 ≥ 1，得到 {n_max}")
    h = H0
    out = [HVector(0, h)]
    for n in range(1, n_max + 1):
        h = rho(case, letters[(n - 1) % len(letters)]).apply(h)
        out.append(HVector(n, h))
    return out


@dataclass
class InequalityReport:
    case: str
    words_checked: int = 0
    steps_checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"case": self.case, "words_checked": self.words_checked,
                "steps_checked": self.steps_checked, "violations": self.violations[:20],
                "violation_count": len(self.violations), "passed": self.passed}


def _violation(case, letters, h: HVector, checks: dict) -> dict:
    return {"letters": ",".join(map(str, letters)), "n": h.n, "H": list(h.coords),
            "failed": [k for k, ok in checks.items() if not ok]}


def verify_inequalities(case, letters, n_max: int = None) -> InequalityReport:
    """沿一个字逐步检查全部不等式，记录首个违例。"""
    case = normalize_case(case)
    letters = parse_letters(letters)
    report = InequalityReport(case, words_checked=1)
    for h in h_sequence(case, letters, n_max):
        report.steps_checked += 1
        checks = h.inequalities(case)
        if not all(checks.values()):
            report.violations.append(_violation(case, letters, h, checks))
            break
    return report


def verify_all_words(case, max_len: int) -> InequalityReport:
    """长度 ≤ max_len 的全部 ρ₁/ρ₂ 字（深度优先，共享前缀）。"""
    case = normalize_case(case)
    if max_len < 1:
        raise UsageError(f"字长上限必须 ≥ 1，得到 {max_len}")
    report = InequalityReport(case)
    mats = {1: rho(case, 1), 2: rho(case, 2)}
    stack = [((), H0)]
    while stack:
        letters, h = stack.pop()
        n = len(letters)
        hv = HVector(n, h)
        checks = hv.inequalities(case)
        report.steps_checked += 1
        if n:
            report.words_checked += 1
        if not all(checks.values()):
            report.violations.append(_violation(case, letters, hv, checks))
            continue
        if n < max_len:
            for i in (2, 1):
                stack.append((letters + (i,), mats[i].apply(h)))
    log.info("%s: 检查 %d 个字，违例 %d", case, report.words_checked, len(report.violations))
    return report


def ell_table(case, letters, n_max: int = None) -> pd.DataFrame:
    """(n, 字母, a_n, b_n, c_n, ℓ_n, 下界, ℓ_n/ℓ_{n−1}) 表。"""
    case = normalize_case(case)
    letters = parse_letters(letters)
    rows, prev = [], None
    for h in h_sequence(case, letters, n_max):
        letter = "" if h.n == 0 else f"ρ{letters[(h.n - 1) % len(letters)]}"
        bound = growth_bound(case, h.n)
        rows.append({
            "n": h.n, "letter": letter, "a": h.a, "b": h.b, "c": h.c, "ell": h.ell,
            "bound": format_rational(bound),
            "ratio": "" if prev is None else format_decimal(Fraction(h.ell, prev), 6),
        })
        prev = h.ell
    return pd.DataFrame(rows)


def word_spectral_bound(case, letters, tol=DEFAULT_TOL, powers: int = 4) -> dict:
    """
    ρ 字的谱半径：沿字的幂的 ℓ 增长作为证据，特征多项式根隔离的区间作为判定。
    要求区间下界 ≥ (5/3)^m（j=1）或 10^m（j=2,3），m 为字长。
    """
    case = normalize_case(case)
    letters = parse_letters(letters)
    m = word_isometry(case, letters)
    lo, hi = spectral_radius(m, tol)
    bound = growth_bound(case, len(letters))
    ells, h = [], H0
    for _ in range(powers):
        h = m.apply(h)
        ells.append(h[3])
    return {
        "case": case,
        "letters": ",".join(map(str, letters)),
        "interval": [format_rational(lo), format_rational(hi)],
        "interval_decimal": format_interval(lo, hi, 8),
        "float_check": round(spectral_radius_float(m), 8),
        "required": format_rational(bound),
        "ell_along_powers": ells,
        "passed": lo >= bound,
    }


# ─── Gram 推导 ──────────────────────────────────────────────────────────────────

@dataclass
class GramDerivation:
    """consistent 时给出 solution/gram；否则 minimal_inconsistent 为极小矛盾约束组。"""
    case: str
    consistent: bool
    solution: dict = None
    gram: Matrix = None
    minimal_inconsistent: list = field(default_factory=list)
    geometric_solution: dict = None
    geometric_gram: Matrix = None
    violated_claims: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def sol(d):
            return None if d is None else {str(k): str(v) for k, v in d.items()}

        def mat(g):
            return None if g is None else [[str(v) for v in row] for row in g.tolist()]

        return {
            "case": self.case,
            "outcome": "solved" if self.consistent else "inconsistent",
            "solution": sol(self.solution),
            "gram": mat(self.gram),
            "minimal_inconsistent": self.minimal_inconsistent,
            "geometric_solution": sol(self.geometric_solution),
            "geometric_gram": mat(self.geometric_gram),
            "violated_claims": self.violated_claims,
        }


def gram_constraints(case) -> list:
    """[(名称, 是否几何约束, [须为零的表达式...])]。"""
    case = normalize_case(case)
    prefix = "Zj1" if case == "j1" else "Zj23"
    lattice = _L_Z[case]
    groups = []
    for name in ("α", "β"):
        act = CASES[f"{prefix}-{name}"]
        groups.append((f"{name} 保持交形式", True, _form_defect(act.matrix, lattice)))
    k = lattice.canonical
    groups.append((f"K² = {lattice.k_squared}", True, [lattice.square(k) - lattice.k_squared]))
    basis, squares = W0_BASIS[case], W0_SQUARES[case]
    for i, (w, s) in enumerate(zip(basis, squares), start=1):
        groups.append((f"w{i}² = {s}", False, [lattice.square(w) - s]))
        groups.append((f"w{i}·K = 0", False, [lattice.dot(w, k)]))
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            groups.append((f"w{i + 1}·w{j + 1} = 0", False, [lattice.dot(basis[i], basis[j])]))
    return [(n, geo, [sympy.expand(e) for e in eqs if sympy.expand(e) != 0]) for n, geo, eqs in groups]


def _consistent(equations: list) -> bool:
    if not equations:
        return True
    a, b = linear_eq_to_matrix(equations, [P, Q, R])
    return a.rank() == a.row_join(b).rank()


def _solve(equations: list) -> dict:
    if not equations:
        return {}
    (values,) = linsolve(equations, [P, Q, R])
    return {s: v for s, v in zip((P, Q, R), values) if v != s}


def derive_gram(case) -> GramDerivation:
    """把 E·E′、E·E_τ、E′·E_τ 作为未知数，按几何约束与 W₀ 声称逐组求解。"""
    case = normalize_case(case)
    lattice = _L_Z[case]
    groups = gram_constraints(case)
    everything = [e for _, _, eqs in groups for e in eqs]
    geometric = [e for _, geo, eqs in groups if geo for e in eqs]

    result = GramDerivation(case, _consistent(everything))
    if _consistent(geometric):
        result.geometric_solution = _solve(geometric)
        result.geometric_gram = lattice.gram.subs(result.geometric_solution)
        sub = result.geometric_solution
        result.violated_claims = [name for name, geo, eqs in groups
                                  if not geo and any(sympy.expand(e.subs(sub)) != 0 for e in eqs)
                                  and not any(e.subs(sub).free_symbols for e in eqs)]
    if result.consistent:
        result.solution = _solve(everything)
        result.gram = lattice.gram.subs(result.solution)
        log.info("%s: Gram 矩阵与全部声称相容", case)
        return result

    # 贪心删除：去掉后仍矛盾的约束组就删掉，剩下的每一组都是必要的
    keep = list(groups)
    for g in list(groups):
        trial = [h for h in keep if h is not g]
        if not _consistent([e for _, _, eqs in trial for e in eqs]):
            keep = trial
    result.minimal_inconsistent = [name for name, _, _ in keep]
    log.warning("%s: 约束矛盾，极小矛盾组: %s", case, "; ".join(result.minimal_inconsistent))
    return result
