"""
随机变量族 - 解析绝对矩 / 带符号矩、矩有界参数 L 的认证、基于计数器的可复现采样。

所有分布均为不可变对象，可在线程之间安全共享。
"""
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import special, stats

from polytail.errors import ParameterError, UnsupportedMoment
from polytail.settings import BUDGETS, TOLERANCES

logger = logging.getLogger(__name__)

# ============================================================
# 分布族与参数名（JSON 字段名与此一致）
# ============================================================
PARAM_NAMES: dict[str, tuple[str, ...]] = {
    "bernoulli": ("p",),
    "scaled_bernoulli": ("p", "value"),
    "rademacher": (),
    "uniform": ("a", "b"),
    "exponential": ("rate",),
    "normal": ("mean", "sd"),
    "poisson": ("mean",),
    "geometric": ("p",),
    "binomial": ("n", "p"),
    "finite_support": (),
}

FINITE_FAMILIES = frozenset({"bernoulli", "scaled_bernoulli", "rademacher", "binomial", "finite_support"})

# 超过该量级时改用对数空间
_LOG_SWITCH = math.log(1e300)
_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DistributionSpec:
    """
    一个独立随机变量的分布描述。

    Args:
        family: 分布族名称，见 PARAM_NAMES。
        params: 与 PARAM_NAMES[family] 对齐的实数参数。
        atoms: 仅 finite_support 使用，(取值, 概率) 列表。
    """

    family: str
    params: tuple[float, ...] = ()
    atoms: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.family not in PARAM_NAMES:
            raise ParameterError(f"未知分布族: {self.family}")
        expected = PARAM_NAMES[self.family]
        if len(self.params) != len(expected):
            raise ParameterError(f"{self.family} 需要参数 {expected}，实际收到 {self.params}")
        for value in self.params:
            if not math.isfinite(value):
                raise ParameterError(f"{self.family} 参数必须有限: {self.params}")
        _validate(self)

    # --------------------------------------------------------
    # 参数访问
    # --------------------------------------------------------

    def param(self, name: str) -> float:
        """按名称取参数。"""
        return self.params[PARAM_NAMES[self.family].index(name)]

    @property
    def is_finite(self) -> bool:
        return self.family in FINITE_FAMILIES

    def support(self) -> list[tuple[float, float]]:
        """
        有限支撑分布的 (取值, 概率) 列表，零概率原子已剔除。

        Raises:
            ParameterError: 分布不是有限支撑。
        """
        fam = self.family
        if fam == "bernoulli":
            p = self.param("p")
            atoms = [(0.0, 1.0 - p), (1.0, p)]
        elif fam == "scaled_bernoulli":
            p = self.param("p")
            atoms = [(0.0, 1.0 - p), (self.param("value"), p)]
        elif fam == "rademacher":
            atoms = [(-1.0, 0.5), (1.0, 0.5)]
        elif fam == "binomial":
            n, p = int(self.param("n")), self.param("p")
            ks = np.arange(n + 1)
            atoms = list(zip(ks.astype(float).tolist(), stats.binom.pmf(ks, n, p).tolist()))
        elif fam == "finite_support":
            atoms = list(self.atoms)
        else:
            raise ParameterError(f"{fam} 不是有限支撑分布")
        return [(v, pr) for v, pr in atoms if pr > 0]

    def exact_support(self) -> list[tuple[Fraction, Fraction]]:
        """有限支撑的精确有理数形式（浮点值按二进制精确转换）。"""
        if self.family == "binomial":
            n, p = int(self.param("n")), Fraction(self.param("p"))
            return [
                (Fraction(k), math.comb(n, k) * p**k * (1 - p) ** (n - k))
                for k in range(n + 1)
                if not (p == 0 and k > 0) and not (p == 1 and k < n)
            ]
        if self.family == "bernoulli":
            p = Fraction(self.param("p"))
            atoms = [(Fraction(0), 1 - p), (Fraction(1), p)]
        elif self.family == "scaled_bernoulli":
            p = Fraction(self.param("p"))
            atoms = [(Fraction(0), 1 - p), (Fraction(self.param("value")), p)]
        elif self.family == "rademacher":
            atoms = [(Fraction(-1), Fraction(1, 2)), (Fraction(1), Fraction(1, 2))]
        else:
            atoms = [(Fraction(v), Fraction(pr)) for v, pr in self.support()]
        return [(v, pr) for v, pr in atoms if pr > 0]

    # --------------------------------------------------------
    # JSON
    # --------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        """序列化为 {"family": ..., 参数...}。"""
        out: dict[str, Any] = {"family": self.family}
        if self.family == "finite_support":
            out["atoms"] = [[v, p] for v, p in self.atoms]
        for name, value in zip(PARAM_NAMES[self.family], self.params):
            out[name] = int(value) if name == "n" else value
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "DistributionSpec":
        """从 JSON 对象构造。"""
        family = data.get("family")
        if family not in PARAM_NAMES:
            raise ParameterError(f"未知分布族: {family}")
        if family == "finite_support":
            atoms = tuple((float(v), float(p)) for v, p in data.get("atoms", []))
            return cls(family, (), atoms)
        try:
            params = tuple(float(data[name]) for name in PARAM_NAMES[family])
        except KeyError as exc:
            raise ParameterError(f"{family} 缺少参数 {exc}") from exc
        return cls(family, params)


def _validate(dist: DistributionSpec) -> None:
    """参数合法性检查。"""
    fam = dist.family
    if fam in ("bernoulli", "scaled_bernoulli", "binomial"):
        p = dist.param("p")
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"{fam} 概率越界: p={p}")
    if fam == "binomial":
        n = dist.param("n")
        if n < 0 or n != int(n):
            raise ParameterError(f"binomial 的 n 必须是非负整数: {n}")
    elif fam == "uniform":
        if not dist.param("a") < dist.param("b"):
            raise ParameterError("uniform 需要 a < b")
    elif fam == "exponential":
        if dist.param("rate") <= 0:
            raise ParameterError("exponential 需要 rate > 0")
    elif fam == "normal":
        if dist.param("sd") <= 0:
            raise ParameterError("normal 需要 sd > 0")
    elif fam == "poisson":
        if dist.param("mean") < 0:
            raise ParameterError("poisson 需要 mean >= 0")
    elif fam == "geometric":
        p = dist.param("p")
        if not 0.0 < p <= 1.0:
            raise ParameterError(f"geometric 概率越界: p={p}")
    elif fam == "finite_support":
        if not dist.atoms:
            raise ParameterError("finite_support 至少需要一个原子")
        total = math.fsum(p for _, p in dist.atoms)
        if any(not 0.0 <= p <= 1.0 for _, p in dist.atoms):
            raise ParameterError("finite_support 概率越界")
        if abs(total - 1.0) > _SUM_TOL:
            raise ParameterError(f"finite_support 概率之和为 {total!r}，偏离 1 超过 1e-12")


# ============================================================
# 便捷构造函数
# ============================================================

def bernoulli(p: float) -> DistributionSpec:
    return DistributionSpec("bernoulli", (float(p),))


def scaled_bernoulli(p: float, value: float) -> DistributionSpec:
    return DistributionSpec("scaled_bernoulli", (float(p), float(value)))


def rademacher() -> DistributionSpec:
    return DistributionSpec("rademacher")


def uniform(a: float, b: float) -> DistributionSpec:
    return DistributionSpec("uniform", (float(a), float(b)))


def exponential(rate: float = 1.0) -> DistributionSpec:
    return DistributionSpec("exponential", (float(rate),))


def normal(mean: float = 0.0, sd: float = 1.0) -> DistributionSpec:
    return DistributionSpec("normal", (float(mean), float(sd)))


def poisson(mean: float) -> DistributionSpec:
    return DistributionSpec("poisson", (float(mean),))


def geometric(p: float) -> DistributionSpec:
    return DistributionSpec("geometric", (float(p),))


def binomial(n: int, p: float) -> DistributionSpec:
    return DistributionSpec("binomial", (float(n), float(p)))


def finite_support(atoms: Sequence[tuple[float, float]]) -> DistributionSpec:
    return DistributionSpec("finite_support", (), tuple((float(v), float(p)) for v, p in atoms))


def dists_from_json(data: Any, n: int | None = None) -> list[DistributionSpec]:
    """
    解析分布 JSON：对象列表（逐顶点）或单个对象（广播到 n 个顶点）。

    Args:
        data: 已解析的 JSON。
        n: 广播时的顶点数。

    Returns:
        分布列表。
    """
    if isinstance(data, dict):
        if n is None:
            raise ParameterError("单个分布对象需要指定顶点数 n 才能广播")
        spec = DistributionSpec.from_json(data)
        return [spec] * n
    return [DistributionSpec.from_json(item) for item in data]


def load_dists(path: str | Path, n: int | None = None) -> list[DistributionSpec]:
    """从文件读取分布 JSON。"""
    with open(path, encoding="utf-8") as fh:
        return dists_from_json(json.load(fh), n)


# ============================================================
# 组合数辅助
# ============================================================

@lru_cache(maxsize=None)
def _stirling2_row(d: int) -> tuple[int, ...]:
    """第二类 Stirling 数 S(d, j), j=0..d（精确整数）。"""
    row = [1]
    for m in range(1, d + 1):
        new = [0] * (m + 1)
        for j in range(1, m + 1):
            new[j] = j * (row[j] if j < len(row) else 0) + row[j - 1]
        row = new
    return tuple(row)


def _log_sum_positive(log_terms: list[float]) -> float:
    if not log_terms:
        return -math.inf
    return float(special.logsumexp(log_terms))


# ============================================================
# 解析矩
# ============================================================

def _check_order(d: int) -> None:
    if d < 0 or int(d) != d:
        raise ParameterError(f"矩的阶必须是非负整数: {d}")
    if d > BUDGETS["d_max"]:
        raise UnsupportedMoment(f"阶数 {d} 超过 d_max={BUDGETS['d_max']}")


@lru_cache(maxsize=65536)
def log_abs_moment(dist: DistributionSpec, d: int) -> float:
    """
    ln E|Y|^d；零矩返回 -inf。用于大数值场合，避免上溢。

    Args:
        dist: 分布。
        d: 非负整数阶。

    Returns:
        对数绝对矩。
    """
    _check_order(d)
    if d == 0:
        return 0.0
    fam = dist.family
    if fam == "bernoulli":
        p = dist.param("p")
        return math.log(p) if p > 0 else -math.inf
    if fam == "scaled_bernoulli":
        p, value = dist.param("p"), dist.param("value")
        if p == 0 or value == 0:
            return -math.inf
        return math.log(p) + d * math.log(abs(value))
    if fam == "rademacher":
        return 0.0
    if fam == "uniform":
        a, b = dist.param("a"), dist.param("b")
        return math.log(_uniform_abs(a, b, d))
    if fam == "exponential":
        return math.lgamma(d + 1) - d * math.log(dist.param("rate"))
    if fam == "normal":
        return _normal_log_abs(dist.param("mean"), dist.param("sd"), d)
    if fam == "poisson":
        mean = dist.param("mean")
        if mean == 0:
            return -math.inf
        row = _stirling2_row(d)
        return _log_sum_positive([math.log(row[j]) + j * math.log(mean) for j in range(1, d + 1) if row[j]])
    if fam == "geometric":
        p = dist.param("p")
        ratio = (1.0 - p) / p
        row = _stirling2_row(d + 1)
        if ratio == 0:
            return 0.0
        return _log_sum_positive(
            [math.lgamma(j + 1) + math.log(row[j + 1]) + j * math.log(ratio) for j in range(d + 1)]
        )
    if fam == "binomial":
        n, p = int(dist.param("n")), dist.param("p")
        if p == 0 or n == 0:
            return -math.inf
        row = _stirling2_row(d)
        terms = [
            math.log(row[j]) + _log_falling(n, j) + j * math.log(p)
            for j in range(1, min(d, n) + 1)
            if row[j]
        ]
        return _log_sum_positive(terms)
    if fam == "finite_support":
        value = _finite_moment(dist, d, absolute=True)
        return math.log(value) if value > 0 else -math.inf
    raise UnsupportedMoment(f"{fam} 没有解析矩公式")


def _log_falling(n: int, j: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(n - j + 1)


def _uniform_abs(a: float, b: float, d: int) -> float:
    width = (d + 1) * (b - a)
    if a >= 0:
        return (b ** (d + 1) - a ** (d + 1)) / width
    if b <= 0:
        return (abs(a) ** (d + 1) - abs(b) ** (d + 1)) / width
    return (abs(a) ** (d + 1) + b ** (d + 1)) / width


def _normal_log_abs(mean: float, sd: float, d: int) -> float:
    """非中心正态的对数绝对矩，使用 Kummer 变换后的 1F1 保持数值稳定。"""
    z = mean * mean / (2.0 * sd * sd)
    base = d * math.log(sd) + 0.5 * d * math.log(2.0) + math.lgamma((d + 1) / 2.0) - 0.5 * math.log(math.pi)
    if z == 0:
        return base
    # 1F1(-d/2; 1/2; -z) = e^{-z} 1F1((d+1)/2; 1/2; z)
    return base - z + math.log(special.hyp1f1((d + 1) / 2.0, 0.5, z))


def _finite_moment(dist: DistributionSpec, d: int, absolute: bool) -> float:
    """有限支撑的精确有理求和。"""
    total = Fraction(0)
    for value, prob in dist.atoms:
        v = Fraction(value)
        total += Fraction(prob) * (abs(v) if absolute else v) ** d
    return float(total)


def abs_moment(dist: DistributionSpec, d: int) -> float:
    """
    E|Y|^d（解析形式；有限支撑为精确有理数求和后转浮点）。

    Args:
        dist: 分布。
        d: 非负整数阶，不超过 d_max。

    Returns:
        绝对矩；超出浮点范围时返回 inf 并记录警告。
    """
    if d == 0:
        _check_order(d)
        return 1.0
    direct = _direct_moment(dist, d, absolute=True)
    if direct is not None:
        return direct
    log_value = log_abs_moment(dist, d)
    if log_value > 709.0:
        logger.warning("%s 的 %d 阶绝对矩超出浮点范围", dist.family, d)
        return math.inf
    return math.exp(log_value)


def raw_moment(dist: DistributionSpec, d: int) -> float:
    """
    带符号矩 E[Y^d]。

    Args:
        dist: 分布。
        d: 非负整数阶。

    Returns:
        带符号矩。
    """
    _check_order(d)
    if d == 0:
        return 1.0
    fam = dist.family
    if fam == "rademacher":
        return 1.0 if d % 2 == 0 else 0.0
    if fam == "scaled_bernoulli":
        return dist.param("p") * dist.param("value") ** d
    if fam == "uniform":
        a, b = dist.param("a"), dist.param("b")
        return (b ** (d + 1) - a ** (d + 1)) / ((d + 1) * (b - a))
    if fam == "normal":
        mean, sd = dist.param("mean"), dist.param("sd")
        # E[(m + sZ)^d] = sum_j C(d,j) m^{d-j} s^j E[Z^j]，仅偶数 j 非零
        total = 0.0
        for j in range(0, d + 1, 2):
            total += math.comb(d, j) * mean ** (d - j) * sd**j * _double_factorial(j - 1)
        return total
    if fam == "finite_support":
        return _finite_moment(dist, d, absolute=False)
    # 其余族非负，带符号矩等于绝对矩
    return abs_moment(dist, d)


def _double_factorial(m: int) -> int:
    if m <= 0:
        return 1
    return math.prod(range(m, 0, -2))


def _direct_moment(dist: DistributionSpec, d: int, absolute: bool) -> float | None:
    """量级安全时直接计算，否则返回 None 交给对数空间。"""
    _check_order(d)
    fam = dist.family
    if fam == "bernoulli":
        return dist.param("p")
    if fam == "rademacher":
        return 1.0
    if fam == "exponential":
        log_value = math.lgamma(d + 1) - d * math.log(dist.param("rate"))
        if log_value < _LOG_SWITCH:
            return math.factorial(d) / dist.param("rate") ** d
        return None
    if fam == "finite_support":
        return _finite_moment(dist, d, absolute=absolute)
    if fam == "normal" and d % 2 == 0:
        log_value = log_abs_moment(dist, d)
        if log_value < _LOG_SWITCH:
            return raw_moment(dist, d)
        return None
    return None


# ============================================================
# 矩有界参数
# ============================================================

@dataclass(frozen=True)
class MomentBoundReport:
    """矩有界性检查结果：holds ⇔ worst_ratio ≤ 1 + 1e-12。"""

    L: float
    i_max: int
    holds: bool
    worst_index: int
    worst_ratio: float
    basis: str = "user"
    certified: bool = True

    def to_json(self) -> dict[str, Any]:
        return {
            "L": self.L,
            "i_max": self.i_max,
            "holds": self.holds,
            "worst_index": self.worst_index,
            "worst_ratio": self.worst_ratio,
            "basis": self.basis,
            "status": "certified" if self.certified else "unproven-in-paper",
        }


def mean_abs(dist: DistributionSpec) -> float:
    """E|Y|。"""
    return abs_moment(dist, 1)


def conditional_abs_means(dist: DistributionSpec) -> tuple[float, float]:
    """
    (E[|X| | X ≥ 0], E[|X| | X < 0])，仅限有限支撑；某一侧无质量时记为 0。
    """
    atoms = dist.support()
    pos = [(v, p) for v, p in atoms if v >= 0]
    neg = [(v, p) for v, p in atoms if v < 0]

    def _cond(side: list[tuple[float, float]]) -> float:
        mass = math.fsum(p for _, p in side)
        return math.fsum(abs(v) * p for v, p in side) / mass if mass > 0 else 0.0

    return _cond(pos), _cond(neg)


def _is_integer_log_concave(dist: DistributionSpec) -> bool:
    atoms = sorted(dist.support())
    values = [v for v, _ in atoms]
    if any(v != int(v) for v in values):
        return False
    lo, hi = int(values[0]), int(values[-1])
    pmf = dict(atoms)
    seq = [pmf.get(float(i), 0.0) for i in range(lo, hi + 1)]
    if any(p == 0 for p in seq):
        return False
    return all(seq[i + 1] ** 2 >= seq[i] * seq[i + 2] for i in range(len(seq) - 2))


def moment_bound_certificate(dist: DistributionSpec, rule: str = "auto") -> tuple[float, str, bool]:
    """
    分布族对应的矩有界参数 L 及其依据。

    Args:
        dist: 分布。
        rule: "auto" 按族选择；"discrete_two_sided" 对整数值有限支撑使用两侧条件均值规则。

    Returns:
        (L, 依据名称, 是否有完整证明)。
    """
    fam = dist.family
    if rule == "discrete_two_sided":
        if fam != "finite_support" or not _is_integer_log_concave(dist):
            raise ParameterError("两侧离散规则需要整数值、对数凹的 finite_support 分布")
        pos, neg = conditional_abs_means(dist)
        logger.warning("两侧离散对数凹规则的 L 没有给出证明，报告标记为 unproven-in-paper")
        return max(pos, neg), "discrete-log-concave-two-sided", False
    if rule != "auto":
        raise ParameterError(f"未知规则: {rule}")

    if fam == "bernoulli" or fam == "rademacher":
        return 1.0, "bounded", True
    if fam == "scaled_bernoulli":
        return abs(dist.param("value")), "bounded", True
    if fam == "uniform":
        return max(abs(dist.param("a")), abs(dist.param("b"))), "bounded", True
    if fam == "finite_support":
        return max(abs(v) for v, _ in dist.support()), "bounded", True
    if fam == "exponential":
        return 1.0 / dist.param("rate"), "log-concave-nonnegative", True
    if fam == "normal":
        return mean_abs(dist) / math.log(2.0), "log-concave", True
    if fam in ("poisson", "geometric", "binomial"):
        return 1.0 + mean_abs(dist), "discrete-log-concave-nonnegative", True
    raise ParameterError(f"无法为 {fam} 给出矩有界参数")


def moment_bound_parameter(dist: DistributionSpec) -> float:
    """
    按分布族返回矩有界参数 L。

    有界 → sup|Z|；非负连续对数凹 → E[X]；一般连续对数凹 → E|X|/ln 2；
    非负整数对数凹 → 1 + E[X]。
    """
    return moment_bound_certificate(dist)[0]


def check_moment_bounded(dist: DistributionSpec, L: float, i_max: int) -> MomentBoundReport:
    """
    验证 E|Z|^i ≤ i·L·E|Z|^{i-1} 对 1 ≤ i ≤ i_max 均成立，并给出最差比值。

    Args:
        dist: 分布。
        L: 待检验参数，需 > 0。
        i_max: 最高检验阶，1 ≤ i_max ≤ d_max。

    Returns:
        MomentBoundReport。
    """
    if L <= 0:
        raise ParameterError(f"L 必须为正: {L}")
    if not 1 <= i_max <= BUDGETS["d_max"]:
        raise ParameterError(f"i_max 需在 [1, {BUDGETS['d_max']}] 内: {i_max}")

    worst_index, worst_ratio = 1, -math.inf
    prev = abs_moment(dist, 0)
    for i in range(1, i_max + 1):
        cur = abs_moment(dist, i)
        if math.isfinite(cur) and math.isfinite(prev) and prev > 0:
            ratio = cur / (i * L * prev)
        else:
            log_prev = log_abs_moment(dist, i - 1)
            log_cur = log_abs_moment(dist, i)
            ratio = 0.0 if log_prev == -math.inf else math.exp(log_cur - math.log(i * L) - log_prev)
        if ratio > worst_ratio:
            worst_index, worst_ratio = i, ratio
        prev = cur

    holds = worst_ratio <= 1.0 + TOLERANCES["moment_bounded"]
    logger.debug("%s 矩有界检查: L=%.6g, 最差比值 %.6g (i=%d)", dist.family, L, worst_ratio, worst_index)
    return MomentBoundReport(L, i_max, holds, worst_index, worst_ratio)


def certify(dist: DistributionSpec, i_max: int = 20, rule: str = "auto") -> MomentBoundReport:
    """用分布族自身的 L 做检查，并把依据写进报告。"""
    L, basis, certified = moment_bound_certificate(dist, rule)
    report = check_moment_bounded(dist, L, i_max)
    return MomentBoundReport(report.L, report.i_max, report.holds, report.worst_index,
                             report.worst_ratio, basis, certified)


def factorial_moment_check(dist: DistributionSpec, L: float, i_max: int) -> list[tuple[int, float, float]]:
    """
    矩有界的推论 E|Z|^i ≤ L^i·i!，返回 (i, ln 左边, ln 右边) 列表。
    """
    rows = []
    for i in range(1, i_max + 1):
        rows.append((i, log_abs_moment(dist, i), i * math.log(L) + math.lgamma(i + 1)))
    return rows


def mixed_moment_bound_check(dist: DistributionSpec, powers: Sequence[int], L: float) -> dict[str, float]:
    """
    单个顶点出现在 d 条超边中、幂次依次为 τ_1..τ_d（最后一个为 δ）时的混合矩界：
    |E Π(Y^τ_j − E Y^τ_j)| ≤ 2^d L^{D−δ} D! E|Y|^δ / δ!，
    以及不中心化版本 |E Π Y^τ_j| ≤ L^{D−δ} D! E|Y|^δ / δ!。

    Returns:
        含 centered_lhs / centered_rhs / plain_lhs / plain_rhs 的字典。
    """
    if not powers or any(t < 1 for t in powers):
        raise ParameterError("幂次列表必须非空且为正整数")
    d = len(powers)
    D = sum(powers)
    delta = powers[-1]
    means = [raw_moment(dist, t) for t in powers]

    # 容斥：E Π (Y^τ_j − m_j) = Σ_S E[Y^{Σ_{j∈S} τ_j}] Π_{j∉S} (−m_j)
    centered = 0.0
    for mask in range(1 << d):
        exponent = 0
        coef = 1.0
        for j in range(d):
            if mask >> j & 1:
                exponent += powers[j]
            else:
                coef *= -means[j]
        if coef != 0.0:
            centered += coef * raw_moment(dist, exponent)

    plain_rhs = L ** (D - delta) * math.factorial(D) * abs_moment(dist, delta) / math.factorial(delta)
    return {
        "centered_lhs": abs(centered),
        "centered_rhs": 2**d * plain_rhs,
        "plain_lhs": abs(raw_moment(dist, D)),
        "plain_rhs": plain_rhs,
    }


# ============================================================
# 基于计数器的随机流
# ============================================================

_U53 = 2.0**-53


class RandomStream:
    """
    Philox 计数器随机流：(seed, 流下标 i, 第 j 次抽取) 唯一决定一个均匀数。

    第 j 次抽取取自密钥 (seed, j // 4) 下计数块 i+1 的第 j % 4 个通道，
    因此任意切分样本区间都会得到逐位相同的结果。
    """

    def __init__(self, seed: int, index: int = 0) -> None:
        if seed < 0 or seed >= 2**64:
            raise ParameterError(f"seed 需在 [0, 2^64) 内: {seed}")
        if index < 0:
            raise ParameterError(f"流下标必须非负: {index}")
        self.seed = int(seed)
        self.index = int(index)
        self._draw = 0

    def spawn(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, index)

    def uniform(self) -> float:
        """下一个 (0,1) 均匀数。"""
        value = block_uniforms(self.seed, self.index, 1, draw=self._draw)[0]
        self._draw += 1
        return float(value)


def block_uniforms(seed: int, start: int, count: int, draw: int = 0) -> np.ndarray:
    """
    连续流下标 start..start+count-1 的第 draw 次抽取，向量化生成。

    Args:
        seed: 随机种子。
        start: 起始流下标。
        count: 流数量。
        draw: 抽取序号。

    Returns:
        (0,1) 内的均匀数数组。
    """
    key = (int(seed) << 64) | (draw // 4)
    bit_gen = np.random.Philox(counter=int(start), key=key)
    raw = bit_gen.random_raw(4 * count)[draw % 4 :: 4]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U53


def quantile(dist: DistributionSpec, u: np.ndarray) -> np.ndarray:
    """
    逆分布函数采样：每个样本只消耗一个均匀数。

    Args:
        dist: 分布。
        u: (0,1) 内均匀数。

    Returns:
        与 u 同形状的样本。
    """
    u = np.asarray(u, dtype=np.float64)
    fam = dist.family
    if fam == "bernoulli":
        return (u < dist.param("p")).astype(np.float64)
    if fam == "scaled_bernoulli":
        return np.where(u < dist.param("p"), dist.param("value"), 0.0)
    if fam == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if fam == "uniform":
        a, b = dist.param("a"), dist.param("b")
        return a + (b - a) * u
    if fam == "exponential":
        return -np.log1p(-u) / dist.param("rate")
    if fam == "normal":
        return dist.param("mean") + dist.param("sd") * special.ndtri(u)
    if fam == "poisson":
        return stats.poisson.ppf(u, dist.param("mean"))
    if fam == "geometric":
        return stats.geom.ppf(u, dist.param("p"))
    if fam == "binomial":
        return stats.binom.ppf(u, int(dist.param("n")), dist.param("p"))
    if fam == "finite_support":
        values = np.array([v for v, _ in dist.atoms])
        cdf = np.cumsum([p for _, p in dist.atoms])
        idx = np.searchsorted(cdf, u, side="right")
        return values[np.minimum(idx, len(values) - 1)]
    raise ParameterError(f"无法采样 {fam}")


def sample(dist: DistributionSpec, stream: RandomStream) -> float:
    """从随机流抽取一个样本。"""
    return float(quantile(dist, np.array([stream.uniform()]))[0])


def sample_many(dist: DistributionSpec, seed: int, start: int, count: int) -> np.ndarray:
    """流下标 start..start+count-1 各抽一次。"""
    return quantile(dist, block_uniforms(seed, start, count))
