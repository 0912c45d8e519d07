"""
SL(2,Z) 模块 — Cremona 嵌入验证工具
群字（生成元 R、S 带指数）解析与求值、椭圆/抛物/双曲三分类、
以 S 与 RS 为字母表的音节形式改写、字的确定性枚举。
"""

import logging
import re
from dataclasses import dataclass
from itertools import product
from math import gcd

from utils import UsageError, WordParseError

log = logging.getLogger(__name__)


# ─── 2×2 矩阵 ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Mat2:
    """[[a, b], [c, d]]，ad − bc = 1。"""
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.a * self.d - self.b * self.c != 1:
            raise UsageError(f"行列式不为 1: {self.tolist()}")

    @classmethod
    def from_rows(cls, rows) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                    self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    def power(self, n: int) -> "Mat2":
        base = self if n >= 0 else self.inverse()
        result = IDENTITY
        n = abs(n)
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    @property
    def trace(self) -> int:
        return self.a + self.d

    def is_identity(self) -> bool:
        return self == IDENTITY

    def is_central(self) -> bool:
        """±I。"""
        return self == IDENTITY or self == -IDENTITY

    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def tolist(self) -> list:
        return [[self.a, self.b], [self.c, self.d]]

    def __str__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


IDENTITY = Mat2(1, 0, 0, 1)
R_MAT = Mat2(1, 1, 0, 1)
S_MAT = Mat2(0, 1, -1, 0)
RS_MAT = R_MAT @ S_MAT          # [[-1,1],[-1,0]]，3 阶
R2_MAT = Mat2(1, 0, 1, 1)       # (RS)²S

GENERATORS = {"R": R_MAT, "S": S_MAT}

# 有限阶元素的共轭类代表（阶数）
ELLIPTIC_REPRESENTATIVES = {
    "-I": (Mat2(-1, 0, 0, -1), 2),
    "[[0,1],[-1,-1]]": (Mat2(0, 1, -1, -1), 3),
    "[[0,1],[-1,0]]": (Mat2(0, 1, -1, 0), 4),
    "[[0,-1],[1,0]]": (Mat2(0, -1, 1, 0), 4),
    "[[0,-1],[1,1]]": (Mat2(0, -1, 1, 1), 6),
}


# ─── 群字 ───────────────────────────────────────────────────────────────────────

_TERM = re.compile(r"([RS])")
_EXP = re.compile(r"\^([+-]?\d+)")


def _merge(pairs) -> tuple:
    out = []
    for gen, exp in pairs:
        if out and out[-1][0] == gen:
            exp += out.pop()[1]
        if exp != 0:
            out.append((gen, exp))
    return tuple(out)


@dataclass(frozen=True)
class GroupWord:
    """生成元 R、S 上的字：((生成元, 非零指数), ...)，相邻同名生成元在构造时合并。"""
    letters: tuple = ()

    def __post_init__(self):
        pairs = []
        for gen, exp in self.letters:
            if gen not in GENERATORS:
                raise UsageError(f"未知生成元: {gen}，可选: R, S")
            pairs.append((gen, int(exp)))
        object.__setattr__(self, "letters", _merge(pairs))

    @classmethod
    def parse(cls, text: str) -> "GroupWord":
        """解析 'R S^-1 R^2 S^2'；空串或 '1' 表示单位元。"""
        return parse_word(text)

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.letters + other.letters)

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple((g, -e) for g, e in reversed(self.letters)))

    def power(self, n: int) -> "GroupWord":
        base = self if n >= 0 else self.inverse()
        return GroupWord(base.letters * abs(n))

    @property
    def length(self) -> int:
        """字母个数（指数绝对值之和）。"""
        return sum(abs(e) for _, e in self.letters)

    @property
    def matrix(self) -> Mat2:
        return word_to_matrix(self)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(g if e == 1 else f"{g}^{e}" for g, e in self.letters)


def parse_word(text: str) -> GroupWord:
    """word := term (ws term)* ; term := ("R"|"S") ("^" signed-int)?"""
    text = text or ""
    stripped = text.strip()
    if stripped in ("", "1"):
        return GroupWord()
    pairs, pos = [], 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TERM.match(text, pos)
        if not m:
            raise WordParseError(f"期望生成元 R 或 S，得到 {text[pos]!r}", pos)
        gen, pos = m.group(1), m.end()
        exp = 1
        if pos < len(text) and text[pos] == "^":
            e = _EXP.match(text, pos)
            if not e:
                raise WordParseError("'^' 后需要带符号整数", pos + 1)
            exp, pos = int(e.group(1)), e.end()
        pairs.append((gen, exp))
    return GroupWord(tuple(pairs))


def word_to_matrix(w: GroupWord) -> Mat2:
    """按字的顺序相乘；空字为单位阵。"""
    m = IDENTITY
    for gen, exp in w.letters:
        m = m @ GENERATORS[gen].power(exp)
    return m


def matrix_to_word(m: Mat2) -> GroupWord:
    """把矩阵写成 R^{q1} S R^{q2} S ... 的形式（类欧几里得下降）。"""
    pairs = []
    while m.c != 0:
        q = m.a // m.c
        # m = R^q · S · m'，m' 的左下元 a − q·c 绝对值更小
        m = S_MAT.inverse() @ R_MAT.power(-q) @ m
        pairs += [("R", q), ("S", 1)]
    if m.a == -1:
        pairs.append(("S", 2))
        m = -m
    pairs.append(("R", m.b))
    word = GroupWord(tuple(pairs))
    return word


# ─── 分类 ───────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MatrixType:
    """kind ∈ {elliptic, parabolic, hyperbolic}；椭圆时 order ∈ {1,2,3,4,6}。"""
    kind: str
    order: int = None

    @property
    def label(self) -> str:
        names = {"elliptic": "椭圆", "parabolic": "抛物", "hyperbolic": "双曲"}
        if self.kind == "elliptic":
            return f"{names[self.kind]}（{self.order} 阶）"
        return names[self.kind]

    def __str__(self) -> str:
        if self.kind == "elliptic":
            return f"elliptic(order {self.order})"
        return self.kind


def classify(m: Mat2) -> MatrixType:
    """|迹| < 2 或 ±I 为椭圆（阶数直接乘幂求得，不超过 6）；迹 ±2 为抛物；否则双曲。"""
    tr = m.trace
    if abs(tr) < 2 or m.is_central():
        p, k = m, 1
        while not p.is_identity():
            p, k = p @ m, k + 1
            if k > 6:
                raise UsageError(f"有限阶判定失败: {m}")
        return MatrixType("elliptic", k)
    if abs(tr) == 2:
        return MatrixType("parabolic")
    return MatrixType("hyperbolic")


def parabolic_normal_form(m: Mat2) -> tuple:
    """抛物元共轭于 sign·[[1, a], [0, 1]]，返回 (sign, a)。"""
    if classify(m).kind != "parabolic":
        raise UsageError(f"不是抛物元: {m}")
    sign = 1 if m.trace > 0 else -1
    b, c = m.b, m.c
    size = gcd(gcd(m.a - sign, b), gcd(c, m.d - sign))
    # m − sign·I = a·[[-pq, p²], [-q², pq]]
    a = size if (b > 0 or (b == 0 and c < 0)) else -size
    return sign, a * sign


def positive_factorization(m: Mat2) -> list:
    """非负矩阵唯一地写成 R1 = R 与 R2 = (RS)²S 的乘积，返回字母列表（从左到右）。"""
    if min(m.entries()) < 0:
        raise UsageError(f"矩阵含负元: {m}")
    letters = []
    while not m.is_identity():
        if m.a >= m.c and m.b >= m.d:
            letters.append("R1")
            m = Mat2(m.a - m.c, m.b - m.d, m.c, m.d)
        elif m.c >= m.a and m.d >= m.b:
            letters.append("R2")
            m = Mat2(m.a, m.b, m.c - m.a, m.d - m.b)
        else:
            raise UsageError(f"无法分解: {m}")
    return letters


# ─── 音节形式 ───────────────────────────────────────────────────────────────────

def _rs_word(a: int) -> tuple:
    """(RS)^a，a ∈ {±1}。"""
    return (("R", 1), ("S", 1)) if a == 1 else (("S", -1), ("R", -1))


@dataclass(frozen=True)
class SyllableForm:
    """
    w = S^prefix · ∏ (RS)^{a_i} S^{b_i}
    prefix ∈ {0,1,2,3}（含中心元 S² 与首个 S^{±1}）；a_i ∈ {±1}；
    b_i ∈ {±1}，仅最后一个音节允许 b = 0（字以 (RS)^{±1} 结尾）。
    """
    prefix: int
    syllables: tuple

    @property
    def count(self) -> int:
        return len(self.syllables)

    def to_word(self) -> GroupWord:
        pairs = []
        if self.prefix:
            pairs.append(("S", -1 if self.prefix == 3 else self.prefix))
        for a, b in self.syllables:
            pairs.extend(_rs_word(a))
            if b:
                pairs.append(("S", b))
        return GroupWord(tuple(pairs))

    @property
    def matrix(self) -> Mat2:
        return word_to_matrix(self.to_word())

    def __str__(self) -> str:
        parts = [f"S^{self.prefix}"] if self.prefix else []
        for a, b in self.syllables:
            parts.append(f"(RS)^{a}" + (f" S^{b}" if b else ""))
        return " ".join(parts) or "1"


def _to_alphabet(w: GroupWord) -> list:
    """R = (RS)S⁻¹，R⁻¹ = S(RS)⁻¹。"""
    out = []
    for gen, exp in w.letters:
        if gen == "S":
            out.append(("S", exp))
        elif exp > 0:
            out.extend([("U", 1), ("S", -1)] * exp)
        else:
            out.extend([("S", 1), ("U", -1)] * (-exp))
    return out


def syllable_form(w: GroupWord) -> SyllableForm:
    """改写为中心元 S² 的幂乘以 S^{±1} 与 (RS)^{±1} 的交错积；S⁴ = (RS)³ = 1 精确成立。"""
    stack, central = [], 0
    for gen, exp in _to_alphabet(w):
        if stack and stack[-1][0] == gen:
            exp += stack.pop()[1]
        if gen == "U":
            exp %= 3
            if exp == 2:
                exp = -1
        else:
            exp %= 4
            if exp == 2:
                central += 1
                exp = 0
            elif exp == 3:
                exp = -1
        if exp:
            stack.append((gen, exp))
    head = 0
    if stack and stack[0][0] == "S":
        head = stack.pop(0)[1]
    syllables = []
    i = 0
    while i < len(stack):
        a = stack[i][1]
        b = stack[i + 1][1] if i + 1 < len(stack) else 0
        syllables.append((a, b))
        i += 2
    form = SyllableForm((2 * central + head) % 4, tuple(syllables))
    log.debug("音节形式 %s → %s", w, form)
    return form


def enumerate_words(max_syllables: int, modulo_center: bool = False):
    """
    确定性枚举 S^{b0} ∏ (RS)^{a_i} S^{b_i}（至多 max_syllables 个音节），
    按矩阵去重；modulo_center=True 时按 ±矩阵 去重。
    """
    if max_syllables < 0:
        raise UsageError("max_syllables 不能为负")
    seen = set()
    for m in range(max_syllables + 1):
        heads = (0,) if m == 0 else (0, 1, -1)
        for b0 in heads:
            for a_s in product((1, -1), repeat=m):
                for mid in product((1, -1), repeat=max(m - 1, 0)):
                    for last in ((0,) if m == 0 else (0, 1, -1)):
                        bs = mid + (last,) if m else ()
                        form = SyllableForm(b0 % 4, tuple(zip(a_s, bs)))
                        word = form.to_word()
                        mat = word.matrix
                        key = min(mat.entries(), (-mat).entries()) if modulo_center else mat.entries()
                        if key in seen:
                            continue
                        seen.add(key)
                        yield word
