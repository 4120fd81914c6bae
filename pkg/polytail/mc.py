"""
蒙特卡洛估计 - 尾概率、矩，以及随机矩阵积和式的 Ryser 采样。

样本 s 的第 v 个变量使用流下标 s·n + v，任务按全局样本下标切块，
因此结果与线程数、切分方式无关。
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd
from scipy.stats import beta

from polytail.errors import DimensionMismatch, ParameterError, SizeLimit
from polytail.poly import PoweredPolynomial, evaluate_many, expectation
from polytail.rv import DistributionSpec, block_uniforms, quantile
from polytail.settings import BUDGETS, MC_CONFIG, default_threads
from polytail.tailbounds import ConstantsConfig, evaluate_bound

logger = logging.getLogger(__name__)

DIRECTIONS = ("two_sided", "upper")


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    n_samples: int
    hits: int
    seed: int
    lam: float
    direction: str
    confidence: float

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    n_samples: int
    k: int
    central: bool
    seed: int

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def clopper_pearson(hits: int, n: int, confidence: float | None = None) -> tuple[float, float]:
    """精确二项置信区间。"""
    confidence = MC_CONFIG["confidence"] if confidence is None else confidence
    if n < 1 or not 0 <= hits <= n:
        raise ParameterError(f"非法计数: hits={hits}, n={n}")
    alpha = 1.0 - confidence
    low = 0.0 if hits == 0 else float(beta.ppf(alpha / 2, hits, n - hits + 1))
    high = 1.0 if hits == n else float(beta.ppf(1 - alpha / 2, hits + 1, n - hits))
    return low, high


# ============================================================
# 分块并行
# ============================================================

def _chunks(n_samples: int, chunk: int | None = None) -> list[tuple[int, int]]:
    size = chunk or MC_CONFIG["chunk"]
    return [(start, min(size, n_samples - start)) for start in range(0, n_samples, size)]


def _run_chunks(work: Callable[[int, int], Any], n_samples: int, threads: int | None) -> list[Any]:
    """按块执行并保持块顺序；合并只依赖块顺序，与线程数无关。"""
    chunks = _chunks(n_samples)
    threads = threads or default_threads()
    if threads <= 1 or len(chunks) == 1:
        return [work(start, count) for start, count in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: work(*c), chunks))


def sample_matrix(dists: Sequence[DistributionSpec], seed: int, start: int, count: int) -> np.ndarray:
    """样本 start..start+count-1 的 (count, n) 取值矩阵。"""
    n = len(dists)
    if n == 0:
        return np.zeros((count, 0))
    u = block_uniforms(seed, start * n, count * n).reshape(count, n)
    out = np.empty_like(u)
    # 同一分布的列一起做逆变换
    groups: dict[DistributionSpec, list[int]] = {}
    for v, dist in enumerate(dists):
        groups.setdefault(dist, []).append(v)
    for dist, cols in groups.items():
        out[:, cols] = quantile(dist, u[:, cols])
    return out


def _check(poly: PoweredPolynomial, dists: Sequence[DistributionSpec], n_samples: int) -> None:
    if len(dists) != poly.n:
        raise DimensionMismatch(f"分布列表长度 {len(dists)} 与变量数 {poly.n} 不一致")
    if n_samples < 1:
        raise ParameterError("样本数必须 ≥ 1")


# ============================================================
# 尾概率与矩
# ============================================================

def estimate_tail(
    poly: PoweredPolynomial,
    dists: Sequence[DistributionSpec],
    lam: float,
    n_samples: int,
    seed: int,
    direction: str = "two_sided",
    threads: int | None = None,
    confidence: float | None = None,
) -> TailEstimate:
    """
    估计 Pr[|f − Ef| ≥ λ]（direction="upper" 时为 Pr[f − Ef ≥ λ]），附 Clopper–Pearson 区间。

    Raises:
        UnsupportedMoment: 无法计算 Ef。
    """
    _check(poly, dists, n_samples)
    if direction not in DIRECTIONS:
        raise ParameterError(f"未知方向: {direction}")
    mean = expectation(poly, dists)
    confidence = MC_CONFIG["confidence"] if confidence is None else confidence

    def work(start: int, count: int) -> int:
        diff = evaluate_many(poly, sample_matrix(dists, seed, start, count)) - mean
        hit = diff >= lam if direction == "upper" else np.abs(diff) >= lam
        return int(np.count_nonzero(hit))

    hits = sum(_run_chunks(work, n_samples, threads))
    low, high = clopper_pearson(hits, n_samples, confidence)
    estimate = TailEstimate(hits / n_samples, low, high, n_samples, hits, seed, lam, direction, confidence)
    logger.info("尾概率估计 λ=%.6g: %d/%d, CI [%.3g, %.3g]", lam, hits, n_samples, low, high)
    return estimate


def estimate_moment(
    poly: PoweredPolynomial,
    dists: Sequence[DistributionSpec],
    k: int,
    n_samples: int,
    seed: int,
    central: bool = False,
    threads: int | None = None,
) -> MomentEstimate:
    """E[f^k]（central=True 时 E|f − Ef|^k）的样本均值与标准误。"""
    _check(poly, dists, n_samples)
    if k < 1:
        raise ParameterError("k 必须 ≥ 1")
    shift = expectation(poly, dists) if central else 0.0

    def work(start: int, count: int) -> tuple[float, float]:
        values = evaluate_many(poly, sample_matrix(dists, seed, start, count)) - shift
        powered = np.abs(values) ** k if central else values**k
        return math.fsum(powered.tolist()), math.fsum((powered**2).tolist())

    parts = _run_chunks(work, n_samples, threads)
    total = math.fsum(s for s, _ in parts)
    total_sq = math.fsum(s for _, s in parts)
    mean = total / n_samples
    var = max(0.0, total_sq / n_samples - mean * mean)
    stderr = math.sqrt(var / n_samples)
    return MomentEstimate(mean, stderr, n_samples, k, central, seed)


# ============================================================
# 积和式
# ============================================================

def _subset_column_sums(matrix: np.ndarray, cols: int) -> np.ndarray:
    """前 cols 列所有子集的行和，形状 (2^cols, n)。"""
    n = matrix.shape[0]
    sums = np.zeros((1 << cols, n))
    for mask in range(1, 1 << cols):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + matrix[:, low.bit_length() - 1]
    return sums


def ryser(matrix: np.ndarray) -> float:
    """
    Ryser 容斥公式求积和式：低位列的子集行和一次性预计算，高位列按 Gray 码逐个翻转。

    Raises:
        SizeLimit: n 超过上限。
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"积和式需要方阵: {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n > BUDGETS["ryser_n"]:
        raise SizeLimit(f"Ryser 最多支持 n={BUDGETS['ryser_n']}")
    low_cols = min(n, 12)
    low = _subset_column_sums(a, low_cols)
    low_parity = np.array([bin(m).count("1") & 1 for m in range(1 << low_cols)])
    high_cols = n - low_cols
    high_sum = np.zeros(n)
    total = 0.0
    gray_prev = 0
    for step in range(1 << high_cols):
        gray = step ^ (step >> 1)
        changed = gray ^ gray_prev
        if changed:
            col = low_cols + changed.bit_length() - 1
            high_sum = high_sum + a[:, col] if gray & changed else high_sum - a[:, col]
        gray_prev = gray
        prods = np.prod(low + high_sum, axis=1)
        signs = np.where((low_parity + bin(gray).count("1")) & 1, -1.0, 1.0)
        total += math.fsum((signs * prods).tolist())
    return total if n % 2 == 0 else -total


def entry_count(n: int, symmetric: bool) -> int:
    return n * (n + 1) // 2 if symmetric else n * n


def build_matrix(entries: np.ndarray, n: int, symmetric: bool) -> np.ndarray:
    """按积和式多项式的变量顺序把元素向量还原为矩阵（对称时镜像上三角）。"""
    if not symmetric:
        return np.asarray(entries, dtype=float).reshape(n, n)
    a = np.zeros((n, n))
    iu = np.triu_indices(n)
    a[iu] = entries
    a[(iu[1], iu[0])] = entries
    return a


def permanent_sample(
    n: int,
    entry_dist: DistributionSpec,
    symmetric: bool,
    seed: int,
    n_samples: int,
    threads: int | None = None,
) -> np.ndarray:
    """
    n_samples 个随机矩阵的积和式。样本 s 的第 e 个独立元素使用流下标 s·N + e，
    N 为 n² 或 C(n,2)+n。
    """
    if n < 1 or n > BUDGETS["ryser_n"]:
        raise SizeLimit(f"积和式采样需要 1 ≤ n ≤ {BUDGETS['ryser_n']}: {n}")
    if n_samples < 1:
        raise ParameterError("样本数必须 ≥ 1")
    dists = [entry_dist] * entry_count(n, symmetric)

    def work(start: int, count: int) -> np.ndarray:
        entries = sample_matrix(dists, seed, start, count)
        return np.array([ryser(build_matrix(row, n, symmetric)) for row in entries])

    return np.concatenate(_run_chunks(work, n_samples, threads))


def permanent_tail_table(
    n: int,
    entry_dist: DistributionSpec,
    symmetric: bool,
    n_samples: int,
    t_grid: Sequence[float],
    seed: int,
    constants: ConstantsConfig | None = None,
    threads: int | None = None,
) -> pd.DataFrame:
    """
    经验尾概率 Pr[|P(A)| ≥ t√n!] 及其 Clopper–Pearson 上限，与积和式定理上界并列。
    """
    values = permanent_sample(n, entry_dist, symmetric, seed, n_samples, threads)
    scale = math.sqrt(math.factorial(n))
    theorem = "permanent_symmetric" if symmetric else "permanent"
    rows = []
    for t in t_grid:
        hits = int(np.count_nonzero(np.abs(values) >= t * scale))
        low, high = clopper_pearson(hits, n_samples)
        bound = evaluate_bound(theorem, {"n": n, "t": t}, t * scale, constants).bound
        rows.append({"t": float(t), "lambda": t * scale, "p_hat": hits / n_samples,
                     "ci_low": low, "ci_high": high, "bound": bound})
    logger.info("积和式尾概率表: n=%d, %d 个样本, %d 个 t 值", n, n_samples, len(rows))
    return pd.DataFrame(rows)

