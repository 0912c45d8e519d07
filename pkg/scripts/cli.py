"""
批处理入口 — SL(2,Z) Cremona 嵌入验证工具
解析群字与嵌入参数，运行次数序列、动力学次数估计、关系验证、Picard 检查与字的扫描，
按 text / json / csv 输出报告。

用法: python3 scripts/cli.py [-v] <action> [options]
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from itertools import product

import pandas as pd

from algebra import IntMatrix, spectral_radius
from birmap import (
    iterate_maps, classify_growth, dynamical_degree_estimate,
)
from embeddings import (
    FAMILIES, EmbeddingSpec, make_spec, evaluate, verify_relations, hypothesis_report, cayley_check,
)
from picard import (
    CASES, Z_CASES, builtin_action, normalize_case, case_report, canonical_fixed_space,
    verify_all_words, verify_inequalities, ell_table, word_spectral_bound, derive_gram,
)
from sl2z import GroupWord, classify, syllable_form, parabolic_normal_form, enumerate_words
from utils import (
    CremonaError, UsageError,
    DEFAULT_MAX_ITERATES, DEFAULT_ORBIT_DEPTH, DEFAULT_TOL, DEFAULT_TERM_CAP, DEFAULT_WORKERS,
    DEFAULT_GROWTH_WINDOW, DEFAULT_GROWTH_DELTA,
    setup_logging, to_fraction, format_rational, format_decimal, format_interval,
    print_header, print_section, print_kv, print_check, print_table,
    make_report, dump_json, dump_csv,
)

log = logging.getLogger(__name__)

FORMATS = ("text", "json", "csv")
PICARD_MAXLEN = 12                 # verify picard 的默认字长上限
SPECTRAL_SAMPLES = 20              # 谱半径抽样的字数
SPECTRAL_SAMPLE_MAXLEN = 6

# 矩阵类型 → 保型嵌入下应有的增长类型
EXPECTED_GROWTH = {"elliptic": "bounded", "parabolic": "linear", "hyperbolic": "exponential"}
TYPE_PRESERVING = ("theta_s", "theta_minus", "theta_eps")


# ─── 运行配置 ───────────────────────────────────────────────────────────────────

@dataclass
class RunConfig:
    command: str
    family: str = None
    params: dict = field(default_factory=dict)
    word: str = None
    target: str = None
    case: str = None
    letters: str = None
    n_max: int = None
    maxlen: int = PICARD_MAXLEN
    max_syllables: int = 2
    max_iterates: int = DEFAULT_MAX_ITERATES
    depth: int = DEFAULT_ORBIT_DEPTH
    tol: Fraction = DEFAULT_TOL
    cap: int = DEFAULT_TERM_CAP
    workers: int = DEFAULT_WORKERS
    fmt: str = "text"
    output: str = None

    def __post_init__(self):
        if self.fmt not in FORMATS:
            raise UsageError(f"不支持的输出格式: {self.fmt}，可选: {', '.join(FORMATS)}")
        self.tol = to_fraction(self.tol)
        for name in ("max_iterates", "depth", "cap", "workers", "maxlen"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} 必须为正，得到 {getattr(self, name)}")
        if self.tol <= 0:
            raise UsageError("--tol 必须为正")
        if self.max_syllables < 0:
            raise UsageError("--max-syllables 不能为负")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        params = {k: getattr(args, k, None) for k in ("eps", "n", "P", "k", "mu")}
        return cls(
            command=args.action,
            family=getattr(args, "family", None),
            params={k: v for k, v in params.items() if v is not None},
            word=getattr(args, "word", None),
            target=getattr(args, "target", None),
            case=getattr(args, "case", None),
            letters=getattr(args, "letters", None),
            n_max=getattr(args, "n_max", None),
            maxlen=getattr(args, "maxlen", None) or PICARD_MAXLEN,
            max_syllables=getattr(args, "max_syllables", 2),
            max_iterates=args.max_iterates,
            depth=args.depth,
            tol=args.tol,
            cap=args.cap,
            workers=args.workers,
            fmt=args.format,
            output=args.output,
        )

    def spec(self) -> EmbeddingSpec:
        return make_spec(self.family, **self.params)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v not in (None, {}) and k != "output"}
        out["tol"] = format_rational(self.tol)
        return out


@dataclass
class Outcome:
    """一次命令的结果：results 写入 JSON，table 用于 CSV，render 负责 text 输出。"""
    title: str
    results: list = field(default_factory=list)
    table: pd.DataFrame = None
    render: object = None
    checks: int = 0
    passed: int = 0
    errors: int = 0

    def check(self, ok: bool):
        self.checks += 1
        self.passed += int(bool(ok))

    @property
    def failed(self) -> int:
        return self.checks - self.passed

    @property
    def status(self):
        """没有检查项时为 None。"""
        if not self.checks and not self.errors:
            return None
        return self.failed == 0 and self.errors == 0

    def summary(self) -> dict:
        return {"checks": self.checks, "passed": self.passed, "failed": self.failed, "errors": self.errors}


# ─── 命令 ───────────────────────────────────────────────────────────────────────

def cmd_classify(config: RunConfig) -> Outcome:
    w = GroupWord.parse(config.word)
    m = w.matrix
    kind = classify(m)
    form = syllable_form(w)
    record = {"word": str(w), "matrix": m.tolist(), "trace": m.trace, "type": str(kind),
              "syllable_form": str(form), "syllables": form.count}
    if kind.kind == "parabolic":
        sign, a = parabolic_normal_form(m)
        record["normal_form"] = {"sign": sign, "translation": a}
    out = Outcome(f"群字分类: {w}", [record], pd.DataFrame([{
        "word": str(w), "a": m.a, "b": m.b, "c": m.c, "d": m.d, "trace": m.trace, "type": str(kind)}]))

    def render():
        print_header(out.title)
        print_kv("矩阵", m)
        print_kv("迹", m.trace)
        print_kv("类型", kind.label)
        print_kv("音节形式", f"{form}（{form.count} 个音节）")
        if "normal_form" in record:
            print_kv("抛物标准形", f"{record['normal_form']['sign']}·[[1,{record['normal_form']['translation']}],[0,1]]")

    out.render = render
    return out


def _degree_rows(config: RunConfig) -> tuple:
    spec = config.spec()
    w = GroupWord.parse(config.word)
    f = evaluate(spec, w, config.cap)
    rows = []
    for n, g in enumerate(iterate_maps(f, config.max_iterates, config.cap), start=1):
        row = {"n": n, "degree": g.degree(), "terms": g.nterms}
        if g.ambient == "P1xP1":
            row["quadridegree"] = " ".join(map(str, g.quadridegree()))
        rows.append(row)
    return spec, w, rows


def cmd_degrees(config: RunConfig) -> Outcome:
    spec, w, rows = _degree_rows(config)
    out = Outcome(f"次数序列: {spec} 在 {w}", rows, pd.DataFrame(rows))

    def render():
        print_header(out.title)
        print_kv("嵌入", spec.label)
        print_table(out.table, max_rows=len(rows))

    out.render = render
    return out


def cmd_lambda(config: RunConfig) -> Outcome:
    spec, w, rows = _degree_rows(config)
    degrees = [r["degree"] for r in rows]
    growth = classify_growth(degrees) if len(degrees) >= 6 else None
    estimate = dynamical_degree_estimate(None, len(degrees), degrees=degrees) if len(degrees) >= 4 else None
    m = w.matrix
    lo, hi = spectral_radius(IntMatrix(m.tolist()), config.tol)
    record = {"spec": str(spec), "word": str(w), "degrees": degrees,
              "matrix_type": str(classify(m)),
              "matrix_spectral_radius": [format_rational(lo), format_rational(hi)],
              "matrix_spectral_radius_decimal": format_interval(lo, hi, 8)}
    if growth is not None:
        record["growth"] = growth.to_dict()
    if estimate is not None:
        record["estimate"] = estimate.to_dict()
    out = Outcome(f"动力学次数: {spec} 在 {w}", [record], pd.DataFrame(rows))

    def render():
        print_header(out.title)
        print_kv("次数", ", ".join(map(str, degrees)))
        if growth is not None:
            print_kv("增长类型", growth.label)
        if estimate is not None:
            print_kv("(deg f^N)^(1/N)", format_decimal(estimate.root, 8))
            print_kv("deg f^N / deg f^(N-1)", format_decimal(estimate.last_ratio, 8))
        print_kv("矩阵类型", classify(m).label)
        print_kv("矩阵谱半径", record["matrix_spectral_radius_decimal"])

    out.render = render
    return out


def _verify_family(spec: EmbeddingSpec, config: RunConfig, out: Outcome):
    report = verify_relations(spec, config.cap)
    hyp = hypothesis_report(spec, config.depth)
    for ok in report.checks.values():
        out.check(ok)
    out.results.append({"target": str(spec), "kind": "relations", **report.to_dict(), "hypotheses": hyp["hypotheses"]})


def _sample_words(maxlen: int, count: int) -> list:
    words = [w for n in range(1, maxlen + 1) for w in product((1, 2), repeat=n)]
    step = max(1, len(words) // count)
    return words[::step][:count]


def _verify_picard(config: RunConfig, out: Outcome):
    case = config.case
    tags = list(CASES)
    zs = list(Z_CASES)
    if case in CASES:
        tags, zs = [case], []
    elif case:
        zs = [normalize_case(case)]
        prefix = "Zj1" if zs[0] == "j1" else "Zj23"
        tags = [t for t in CASES if t.startswith(prefix + "-")]
    for tag in tags:
        rep = case_report(builtin_action(tag))
        if rep["gated"]:
            for ok in rep["checks"].values():
                out.check(ok)
        out.results.append({"target": tag, "kind": "case", **rep})
    for z in zs:
        basis = canonical_fixed_space(z)
        fixed_ok = basis == [(1, 1, -1, -1, -1)]
        out.check(fixed_ok)
        out.results.append({"target": z, "kind": "fixed_subspace", "basis": [list(v) for v in basis],
                            "passed": fixed_ok})
        ineq = verify_all_words(z, config.maxlen)
        out.check(ineq.passed)
        out.results.append({"target": z, "kind": "inequalities", "maxlen": config.maxlen, **ineq.to_dict()})
        for letters in _sample_words(min(SPECTRAL_SAMPLE_MAXLEN, config.maxlen), SPECTRAL_SAMPLES):
            bound = word_spectral_bound(z, letters, config.tol)
            out.check(bound["passed"])
            out.results.append({"target": z, "kind": "spectral_bound", **bound})


def cmd_verify(config: RunConfig) -> Outcome:
    target = config.target
    out = Outcome(f"验证: {target}")
    if target in FAMILIES:
        _verify_family(config.spec() if config.family else make_spec(target, **config.params), config, out)
    elif target == "picard":
        _verify_picard(config, out)
    elif target == "cayley":
        rep = cayley_check()
        out.check(rep["invariant"])
        out.check(rep["on_cubic"])
        out.results.append({"target": "cayley", "kind": "cayley", **rep})
    elif target == "all":
        for family in FAMILIES:
            try:
                _verify_family(make_spec(family), config, out)
            except CremonaError as exc:
                out.errors += 1
                out.results.append({"target": family, "kind": "relations", "status": "error", "error": str(exc)})
        _verify_picard(config, out)
        rep = cayley_check()
        out.check(rep["passed"])
        out.results.append({"target": "cayley", "kind": "cayley", **rep})
    else:
        choices = ", ".join(list(FAMILIES) + ["picard", "cayley", "all"])
        raise UsageError(f"不支持的验证目标: {target}，可选: {choices}")
    out.table = pd.DataFrame([{"target": r["target"], "kind": r["kind"], "passed": r.get("passed", False)}
                              for r in out.results])

    def render():
        print_header(out.title, out.status)
        for r in out.results:
            if r.get("status") == "error":
                print(f"    ❌ {r['target']}: {r['error']}")
                continue
            if r["kind"] in ("relations", "case"):
                print_section(f"{r['target']}" + ("" if r.get("gated", True) else "（非几何，仅报告）"),
                              len(r["checks"]))
                for name, ok in r["checks"].items():
                    print_check(name, ok)
                for h in r.get("hypotheses", []):
                    mark = "✅" if h["holds"] else "⚠️"
                    print(f"    {mark} 假设: {h['name']} {h.get('witness', '')}")
                if r.get("note"):
                    print(f"    ⚠️ {r['note']}")
            elif r["kind"] == "spectral_bound":
                print_check(f"{r['target']} 字 {r['letters']} 谱半径 ≥ {r['required']}", r["passed"],
                            r["interval_decimal"])
            elif r["kind"] == "inequalities":
                print_check(f"{r['target']} 全部长度 ≤ {r['maxlen']} 的字满足不等式", r["passed"],
                            f"{r['words_checked']} 个字")
            elif r["kind"] == "fixed_subspace":
                print_check(f"{r['target']} 公共不动子空间 = span(1,1,-1,-1,-1)", r["passed"], str(r["basis"]))
            elif r["kind"] == "cayley":
                print_check("Cayley 商映射对合不变", r["invariant"])
                print_check("像在 Cayley 三次曲面上", r["on_cubic"])
        print(f"\n    📌 共 {out.checks} 项检查，通过 {out.passed}，失败 {out.failed}，错误 {out.errors}")

    out.render = render
    return out


def cmd_picard_word(config: RunConfig) -> Outcome:
    case = normalize_case(config.case)
    table = ell_table(case, config.letters, config.n_max)
    ineq = verify_inequalities(case, config.letters, config.n_max)
    bound = word_spectral_bound(case, config.letters, config.tol)
    out = Outcome(f"ρ 字 {config.letters}（{case}）", [{"inequalities": ineq.to_dict(), "spectral": bound,
                                                       "table": table.to_dict(orient="records")}], table)
    out.check(ineq.passed)
    out.check(bound["passed"])

    def render():
        print_header(out.title)
        print_table(table, max_rows=len(table))
        print_check("不等式归纳", ineq.passed, f"{ineq.steps_checked} 步")
        print_check(f"谱半径 ≥ {bound['required']}", bound["passed"], bound["interval_decimal"])

    out.render = render
    return out


def cmd_gram_derive(config: RunConfig) -> Outcome:
    result = derive_gram(config.case)
    record = result.to_dict()
    out = Outcome(f"Gram 矩阵推导（{result.case}）", [record], pd.DataFrame([{
        "case": result.case, "outcome": record["outcome"],
        "minimal_inconsistent": "; ".join(result.minimal_inconsistent),
        "violated_claims": "; ".join(result.violated_claims)}]))

    def render():
        print_header(out.title)
        if result.consistent:
            print_kv("结果", "✅ 全部约束相容")
            print_kv("解", record["solution"])
        else:
            print_kv("结果", "⚠️ 约束矛盾")
            for name in result.minimal_inconsistent:
                print(f"    📌 {name}")
        if result.geometric_solution is not None:
            print_section("仅几何约束（保形、K²）")
            print_kv("解", record["geometric_solution"])
            for name in result.violated_claims:
                print(f"    ❌ 与之矛盾的声称: {name}")

    out.render = render
    return out


def _sweep_one(job: tuple) -> dict:
    """单个字的扫描记录；在子进程中运行，参数均可序列化。"""
    spec_json, word, n, cap = job
    spec = EmbeddingSpec.from_json(spec_json)
    w = GroupWord.parse(word)
    kind = classify(w.matrix)
    row = {"word": word, "type": str(kind), "status": "ok"}
    try:
        f = evaluate(spec, w, cap)
        degrees = [g.degree() for g in iterate_maps(f, n, cap)]
        growth = classify_growth(degrees, DEFAULT_GROWTH_WINDOW, DEFAULT_GROWTH_DELTA)
        row.update({"degree": degrees[0], "degrees": " ".join(map(str, degrees)), "growth": growth.kind})
        if spec.family in TYPE_PRESERVING:
            row["agrees"] = growth.kind == EXPECTED_GROWTH[kind.kind]
    except CremonaError as exc:
        row.update({"status": "error", "error": str(exc)})
    return row


def cmd_sweep(config: RunConfig) -> Outcome:
    spec = config.spec()
    words = [str(w) for w in enumerate_words(config.max_syllables)]
    jobs = [(spec.to_json(), w, config.max_iterates, config.cap) for w in words]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]
    out = Outcome(f"扫描: {spec}，至多 {config.max_syllables} 个音节", rows, pd.DataFrame(rows))
    for row in rows:
        if row["status"] == "error":
            out.errors += 1
        elif "agrees" in row:
            out.check(row["agrees"])
    log.info("扫描完成: %d 个字，错误 %d", len(rows), out.errors)

    def render():
        print_header(out.title, out.status)
        print_table(out.table, max_rows=50)
        print(f"\n    📌 共 {len(rows)} 个字，一致 {out.passed}/{out.checks}，错误 {out.errors}")

    out.render = render
    return out


COMMANDS = {
    "classify": ("群字分类", cmd_classify),
    "degrees": ("次数序列", cmd_degrees),
    "lambda": ("动力学次数估计", cmd_lambda),
    "verify": ("关系与格验证", cmd_verify),
    "picard-word": ("ρ 字的不等式与谱半径", cmd_picard_word),
    "gram-derive": ("Gram 矩阵推导", cmd_gram_derive),
    "sweep": ("按字扫描", cmd_sweep),
}


# ─── 输出 ───────────────────────────────────────────────────────────────────────

def emit(config: RunConfig, out: Outcome):
    report = make_report(config.command, config.to_dict(), out.results, out.summary())
    if config.fmt == "json":
        print(dump_json(report, config.output))
    elif config.fmt == "csv":
        table = out.table if out.table is not None else pd.DataFrame(out.results)
        print(dump_csv(table, config.output), end="")
    else:
        out.render()
        if config.output:
            dump_json(report, config.output)
            print(f"\n    📌 报告已写入 {config.output}")


def emit_error(command: str, fmt: str, exc: CremonaError):
    if fmt == "json":
        error = {"type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "position", None) is not None:
            error["position"] = exc.position
        print(dump_json({**make_report(command, {}, [], {"checks": 0, "passed": 0, "failed": 0, "errors": 1}),
                         "error": error}))
    else:
        print(f"❌ {exc}")


def exit_code(out: Outcome) -> int:
    return 0 if out.failed == 0 and out.errors == 0 else 1


# ─── 参数解析 ───────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", default="text", choices=FORMATS, help="输出格式")
    common.add_argument("--max-iterates", type=int, default=DEFAULT_MAX_ITERATES, help="迭代次数 N")
    common.add_argument("--depth", type=int, default=DEFAULT_ORBIT_DEPTH, help="轨道检查深度")
    common.add_argument("--tol", default=str(DEFAULT_TOL), help="谱半径区间宽度（有理数）")
    common.add_argument("--cap", type=int, default=DEFAULT_TERM_CAP, help="单个多项式项数上限")
    common.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="扫描并发进程数")
    common.add_argument("--output", default=None, help="报告文件（无目录时写到 data/reports/）")

    family = argparse.ArgumentParser(add_help=False)
    family.add_argument("--eps", default=None, help="θ_ε 的 ε，如 2、1/2")
    family.add_argument("--n", type=int, default=None, help="θ_n 的 n")
    family.add_argument("--P", default=None, help="θ_P 的有理函数，如 '(x-2)/(x-3)'")
    family.add_argument("--k", type=int, default=None, help="θ_k 的偶数 k")
    family.add_argument("--mu", default=None, help="θ_k 的 μ")

    parser = argparse.ArgumentParser(description="SL(2,Z) Cremona 嵌入验证工具")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v 为 INFO，-vv 为 DEBUG")
    sub = parser.add_subparsers(dest="action", help="操作类型")

    p_cls = sub.add_parser("classify", parents=[common], help="群字的矩阵、迹与类型")
    p_cls.add_argument("word", help="群字，如 'R S^-1 R^2'")

    for name in ("degrees", "lambda"):
        p = sub.add_parser(name, parents=[common, family], help=COMMANDS[name][0])
        p.add_argument("family", choices=list(FAMILIES), help="嵌入族")
        p.add_argument("word", help="群字")

    p_ver = sub.add_parser("verify", parents=[common, family], help="关系、Picard 格或 Cayley 检查")
    p_ver.add_argument("target", help=f"{', '.join(FAMILIES)}, picard, cayley, all")
    p_ver.add_argument("--case", default=None, help="j1、j23 或内置情形名")
    p_ver.add_argument("--maxlen", type=int, default=PICARD_MAXLEN, help="ρ 字的长度上限")

    p_pw = sub.add_parser("picard-word", parents=[common], help=COMMANDS["picard-word"][0])
    p_pw.add_argument("--case", required=True, help="j1 或 j23")
    p_pw.add_argument("--letters", required=True, help="字母序列，如 1,2,1")
    p_pw.add_argument("--n-max", type=int, default=None, help="步数（超过字长时取字的幂）")

    p_gd = sub.add_parser("gram-derive", parents=[common], help=COMMANDS["gram-derive"][0])
    p_gd.add_argument("--case", required=True, help="j1 或 j23")

    p_sw = sub.add_parser("sweep", parents=[common, family], help=COMMANDS["sweep"][0])
    p_sw.add_argument("family", choices=list(FAMILIES), help="嵌入族")
    p_sw.add_argument("--max-syllables", type=int, default=2, help="音节数上限")

    sub.add_parser("list", help="列出嵌入族与 Picard 情形")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    if args.action == "list":
        print_header("嵌入族")
        for key, (label, _, defaults, ambient) in FAMILIES.items():
            ds = ", ".join(f"{k}={v}" for k, v in defaults.items())
            print(f"    📌 {key}: {label} [{ambient}]" + (f"  默认 {ds}" if ds else ""))
        print_header("Picard 情形")
        for tag, act in CASES.items():
            flag = "  ⚠️ 非几何" if not act.gated else ""
            print(f"    📌 {tag}: {act.label}{flag}")
        return 0
    if args.action not in COMMANDS:
        parser.print_help()
        return 2

    fmt = args.format
    try:
        config = RunConfig.from_args(args)
        if args.action == "verify" and config.target in FAMILIES:
            config.family = config.target
        out = COMMANDS[args.action][1](config)
    except UsageError as exc:
        emit_error(args.action, fmt, exc)
        return 2
    except CremonaError as exc:
        emit_error(args.action, fmt, exc)
        return 1
    emit(config, out)
    return exit_code(out)


if __name__ == "__main__":
    sys.exit(main())
