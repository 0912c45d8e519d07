"""
公共工具函数 — SL(2,Z) Cremona 嵌入验证工具
提供全局配置、异常类型、日志配置、精确数值格式化、控制台输出与报告写出等通用功能。
"""

import os
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import pandas as pd


# ─── 路径 ───────────────────────────────────────────────────────────────────────

SKILL_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = SKILL_DIR / "data"
REPORT_DIR = DATA_DIR / "reports"


def ensure_dirs():
    """确保数据目录存在。"""
    DATA_DIR.mkdir(exist_ok=True)
    REPORT_DIR.mkdir(exist_ok=True)


# ─── 全局配置 ────────────────────────────────────────────────────────────────────

SCHEMA_VERSION = 1                         # JSON 报告 / 映射序列化格式版本
DEFAULT_MAX_ITERATES = 12                  # 迭代次数 N
DEFAULT_GROWTH_WINDOW = 4                  # 增长分类的尾部窗口长度
DEFAULT_GROWTH_DELTA = Fraction(1, 10)     # 指数增长判定阈值 1+δ
DEFAULT_TERM_CAP = 200_000                 # 单个多项式的项数上限
DEFAULT_ORBIT_DEPTH = 6                    # 轨道检查的字长深度
DEFAULT_TOL = Fraction(1, 10 ** 8)         # 谱半径区间宽度
DECIMAL_DIGITS = 12                        # 小数渲染位数（与精确值并列输出）
DEFAULT_WORKERS = 1                        # 扫描并发进程数，1 表示进程内顺序执行

LOG_LEVEL_ENV = "CREMONA_LOG_LEVEL"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


# ─── 异常 ───────────────────────────────────────────────────────────────────────

class CremonaError(Exception):
    """本工具所有异常的基类。"""


class UsageError(CremonaError, ValueError):
    """参数错误：环境空间不匹配、变量集不一致、序列过短等。"""


class WordParseError(UsageError):
    """群字解析错误，附带出错字符位置（从 0 开始）。"""

    def __init__(self, message: str, position: int):
        super().__init__(f"位置 {position}: {message}")
        self.position = position
        self.detail = message


class SpecError(UsageError):
    """嵌入参数或 Picard 情形不合法。"""


class ResourceError(CremonaError):
    """多项式项数超过上限。"""

    def __init__(self, iterate: int, terms: int, cap: int):
        super().__init__(f"第 {iterate} 次迭代项数 {terms} 超过上限 {cap}")
        self.iterate = iterate
        self.terms = terms
        self.cap = cap


class DegenerateCompositionError(CremonaError):
    """复合后各分量恒为零。"""


class IndeterminacyError(CremonaError):
    """在基点处求值。"""


# ─── 日志 ───────────────────────────────────────────────────────────────────────

def setup_logging(verbose: int = 0):
    """
    配置根日志器（输出到 stderr，stdout 保留给报告）。
    verbose: 0 使用环境变量 CREMONA_LOG_LEVEL（默认 WARNING），1 为 INFO，≥2 为 DEBUG。
    """
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, os.environ.get(LOG_LEVEL_ENV, "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


# ─── 精确数值格式化 ──────────────────────────────────────────────────────────────

def to_fraction(value) -> Fraction:
    """把 int / str / Fraction / sympy Rational 等转为 Fraction。"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"无法解析有理数: {value!r}") from exc
    num = getattr(value, "numerator", None)
    den = getattr(value, "denominator", None)
    if num is not None and den is not None:
        num = num() if callable(num) else num
        den = den() if callable(den) else den
        return Fraction(int(num), int(den))
    raise UsageError(f"不是有理数: {value!r}")


def format_rational(value) -> str:
    """精确有理数字符串：整数写成 '5'，分数写成 '5/3'。"""
    q = to_fraction(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_decimal(value, decimals: int = DECIMAL_DIGITS) -> str:
    """有理数的定点小数渲染（精确舍入，不经过浮点）。"""
    q = to_fraction(value)
    scale = 10 ** decimals
    scaled = q * scale
    rounded = (scaled.numerator * 2 + scaled.denominator) // (2 * scaled.denominator)
    sign = "-" if rounded < 0 else ""
    rounded = abs(rounded)
    whole, frac = divmod(rounded, scale)
    if decimals == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{decimals}d}"


def format_interval(lo, hi, decimals: int = DECIMAL_DIGITS) -> str:
    """区间的小数渲染。"""
    return f"[{format_decimal(lo, decimals)}, {format_decimal(hi, decimals)}]"


# ─── 控制台输出 ──────────────────────────────────────────────────────────────────

HEADER_WIDTH = 50
STATUS_MARKS = {None: "📊", True: "✅", False: "❌"}


def print_header(title: str, status=None):
    """命令标题；status 为 True / False 时用 ✅ / ❌ 标出整体结论。"""
    print(f"\n{'━' * HEADER_WIDTH}")
    print(f"  {STATUS_MARKS[status]} {title}")
    print(f"{'━' * HEADER_WIDTH}")


def print_section(title: str, count: int = None):
    suffix = f"（{count} 项）" if count is not None else ""
    print(f"\n  ▸ {title}{suffix}")
    print(f"  {'─' * 40}")


def print_kv(key: str, value, indent: int = 4):
    """打印键值对。"""
    print(f"{' ' * indent}{key}: {value}")


def print_check(label: str, passed: bool, detail: str = "", indent: int = 4):
    """打印单项检查结果。"""
    mark = "✅" if passed else "❌"
    suffix = f"  ({detail})" if detail else ""
    print(f"{' ' * indent}{mark} {label}{suffix}")


def _exact_cell(value):
    """表格单元：Fraction 写成 '5/3'，元组写成 '(a, b, …)'，其余原样。"""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, tuple):
        return "(" + ", ".join(str(_exact_cell(v)) for v in value) + ")"
    return value


def print_table(df: pd.DataFrame, max_rows: int = 20):
    """DataFrame 渲染为缩进表格，精确有理数不转成浮点。"""
    if df.empty:
        print("    (无数据)")
        return
    shown = df.head(max_rows).apply(lambda col: col.map(_exact_cell))
    for line in shown.to_string(index=False).splitlines():
        print(f"    {line}")
    if len(df) > max_rows:
        print(f"    ... 共 {len(df)} 条，仅显示前 {max_rows} 条")


# ─── 报告写出 ────────────────────────────────────────────────────────────────────

def _resolve_output(path) -> Path:
    """无目录部分的文件名写到 data/reports/ 下。"""
    path = Path(path)
    if path.parent == Path("."):
        ensure_dirs()
        return REPORT_DIR / path.name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def make_report(command: str, config: dict, results: list, summary: dict) -> dict:
    """统一的 JSON 报告结构（不含时间戳，保证可复现）。"""
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "results": results,
        "summary": summary,
    }


def dump_json(payload: dict, path=None) -> str:
    """输出 JSON；给出 path 时同时写文件。"""
    text = json.dumps(payload, ensure_ascii=False, indent=2, default=str)
    if path is not None:
        target = _resolve_output(path)
        with open(target, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    return text


def dump_csv(df: pd.DataFrame, path=None) -> str:
    """输出 CSV（表头 + 逗号分隔，无本地化格式）。"""
    text = df.to_csv(index=False)
    if path is not None:
        target = _resolve_output(path)
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text
