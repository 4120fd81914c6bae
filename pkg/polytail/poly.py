"""
带幂超图多项式 - f(x) = Σ_h w_h Π_v x_v^{τ_hv} 的表示、求值、期望与各类生成器。

多项式构造后不可变，可在线程间共享。
"""
import itertools
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

from polytail.errors import DimensionMismatch, ParameterError, SizeLimit
from polytail.rv import DistributionSpec, bernoulli, raw_moment
from polytail.settings import BUDGETS

logger = logging.getLogger(__name__)

Weight = Union[float, Fraction]


@dataclass(frozen=True, order=True)
class PoweredHyperedge:
    """
    带幂超边：严格递增的顶点列表，以及与之对齐的正整数幂次 τ_hv。
    """

    vertices: tuple[int, ...] = ()
    powers: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.vertices) != len(self.powers):
            raise ParameterError("超边的顶点与幂次长度不一致")
        if any(b <= a for a, b in zip(self.vertices, self.vertices[1:])):
            raise ParameterError(f"超边顶点必须严格递增: {self.vertices}")
        if any(v < 0 for v in self.vertices):
            raise ParameterError("顶点编号必须非负")
        if any(t < 1 for t in self.powers):
            raise ParameterError(f"幂次必须 ≥ 1: {self.powers}")

    @classmethod
    def from_items(cls, items: Iterable[tuple[int, int]]) -> "PoweredHyperedge":
        """由 (顶点, 幂次) 对构造，同一顶点的幂次相加。"""
        merged: Counter = Counter()
        for v, t in items:
            merged[int(v)] += int(t)
        ordered = sorted(merged.items())
        return cls(tuple(v for v, _ in ordered), tuple(t for _, t in ordered))

    @property
    def eta(self) -> int:
        """基数 η(h)。"""
        return len(self.vertices)

    @property
    def total_power(self) -> int:
        """总幂次 q(h)。"""
        return sum(self.powers)

    @property
    def max_power(self) -> int:
        return max(self.powers, default=0)

    def items(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.vertices, self.powers))

    def contains(self, sub: "PoweredHyperedge") -> bool:
        """h ⊒ h₀：顶点包含且 h₀ 上幂次逐一相等。"""
        mine = dict(self.items())
        return all(mine.get(v) == t for v, t in sub.items())

    def shifted(self, offset: int) -> "PoweredHyperedge":
        return PoweredHyperedge(tuple(v + offset for v in self.vertices), self.powers)

    def to_json(self) -> list[list[int]]:
        return [[v, t] for v, t in self.items()]


EMPTY_EDGE = PoweredHyperedge()


class PoweredPolynomial:
    """
    带权带幂超图表示的多项式。

    相同 (顶点, 幂次) 的单项式在构造时合并权重，合并后权重为零的项被丢弃。

    Args:
        n: 变量数。
        terms: (超边, 权重) 序列，权重可为 float 或 Fraction（精确模式）。
    """

    def __init__(self, n: int, terms: Iterable[tuple[PoweredHyperedge, Weight]] = ()) -> None:
        if n < 0:
            raise ParameterError(f"变量数必须非负: {n}")
        merged: dict[PoweredHyperedge, Weight] = {}
        for edge, weight in terms:
            if edge.vertices and edge.vertices[-1] >= n:
                raise ParameterError(f"顶点 {edge.vertices[-1]} 超出变量数 {n}")
            merged[edge] = merged.get(edge, 0) + weight
        self.n = n
        self.terms: tuple[tuple[PoweredHyperedge, Weight], ...] = tuple(
            (edge, w) for edge, w in merged.items() if w != 0
        )
        self.q = max((e.total_power for e, _ in self.terms), default=0)
        self.gamma = max((e.max_power for e, _ in self.terms), default=1)

    @property
    def multilinear(self) -> bool:
        return self.gamma <= 1

    @property
    def is_exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for _, w in self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"PoweredPolynomial(n={self.n}, terms={len(self.terms)}, q={self.q}, Γ={self.gamma})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PoweredPolynomial):
            return NotImplemented
        return self.n == other.n and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.terms)))

    def weights(self) -> list[Weight]:
        return [w for _, w in self.terms]

    # --------------------------------------------------------
    # JSON
    # --------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        """{"n": int, "terms": [{"vars": [[v, τ], ...], "w": real}, ...]}"""
        return {
            "n": self.n,
            "terms": [{"vars": edge.to_json(), "w": float(w)} for edge, w in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "PoweredPolynomial":
        try:
            n = int(data["n"])
            terms = [
                (PoweredHyperedge.from_items((int(v), int(t)) for v, t in item["vars"]), float(item["w"]))
                for item in data["terms"]
            ]
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"多项式 JSON 格式错误: {exc}") from exc
        return cls(n, terms)


def load_poly(path: str | Path) -> PoweredPolynomial:
    """从文件读取多项式 JSON。"""
    with open(path, encoding="utf-8") as fh:
        return PoweredPolynomial.from_json(json.load(fh))


def save_poly(poly: PoweredPolynomial, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(poly.to_json(), fh, indent=2)


def monomial(n: int, items: Iterable[tuple[int, int]], weight: Weight = 1.0) -> PoweredPolynomial:
    """单个单项式构成的多项式。"""
    return PoweredPolynomial(n, [(PoweredHyperedge.from_items(items), weight)])


# ============================================================
# 求值与期望
# ============================================================

def _check_length(poly: PoweredPolynomial, length: int, what: str) -> None:
    if length != poly.n:
        raise DimensionMismatch(f"{what} 长度 {length} 与变量数 {poly.n} 不一致")


def evaluate(poly: PoweredPolynomial, assignment: Sequence[Any]) -> Any:
    """
    在给定赋值处求值：Σ_h w_h Π_v a_v^{τ_hv}；空多项式返回 0。

    赋值与权重都是 Fraction 时结果精确。
    """
    _check_length(poly, len(assignment), "赋值向量")
    total: Any = 0
    for edge, w in poly.terms:
        value: Any = w
        for v, t in edge.items():
            value = value * assignment[v] ** t
        total = total + value
    return total


def evaluate_many(poly: PoweredPolynomial, samples: np.ndarray) -> np.ndarray:
    """
    对一批样本（形状 (m, n)）向量化求值。

    Returns:
        长度 m 的数组。
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise DimensionMismatch("样本矩阵必须是二维的")
    _check_length(poly, samples.shape[1], "样本列")
    out = np.zeros(samples.shape[0])
    for edge, w in poly.terms:
        term = np.full(samples.shape[0], float(w))
        for v, t in edge.items():
            term *= samples[:, v] if t == 1 else samples[:, v] ** t
        out += term
    return out


def expectation(poly: PoweredPolynomial, dists: Sequence[DistributionSpec]) -> float:
    """
    E[f(Y)] = Σ_h w_h Π_v E[Y_v^{τ_hv}]（独立性）。
    """
    _check_length(poly, len(dists), "分布列表")
    parts = []
    for edge, w in poly.terms:
        value = float(w)
        for v, t in edge.items():
            value *= raw_moment(dists[v], t)
        parts.append(value)
    return math.fsum(parts)


# ============================================================
# 代数运算
# ============================================================

def product(f: PoweredPolynomial, g: PoweredPolynomial) -> PoweredPolynomial:
    """
    乘积多项式，g 的顶点整体平移 f.n 以保证变量集不相交。
    """
    terms = [
        (PoweredHyperedge(ef.vertices + eg.shifted(f.n).vertices, ef.powers + eg.powers), wf * wg)
        for ef, wf in f.terms
        for eg, wg in g.terms
    ]
    return PoweredPolynomial(f.n + g.n, terms)


def scale(poly: PoweredPolynomial, c: Weight) -> PoweredPolynomial:
    return PoweredPolynomial(poly.n, [(edge, w * c) for edge, w in poly.terms])


def merge(f: PoweredPolynomial, g: PoweredPolynomial) -> PoweredPolynomial:
    """同一变量集上的和 f + g（项列表拼接后合并）。"""
    return PoweredPolynomial(max(f.n, g.n), list(f.terms) + list(g.terms))


def add_constant(poly: PoweredPolynomial, c: Weight) -> PoweredPolynomial:
    return PoweredPolynomial(poly.n, list(poly.terms) + [(EMPTY_EDGE, c)])


def to_exact(poly: PoweredPolynomial) -> PoweredPolynomial:
    """把权重转换为 Fraction（浮点值按二进制精确转换）。"""
    return PoweredPolynomial(poly.n, [(edge, Fraction(w)) for edge, w in poly.terms])


# ============================================================
# 生成器
# ============================================================

def complete_multilinear(n: int, q: int, scale: Weight = 1.0) -> PoweredPolynomial:
    """
    完全 q-一致多线性多项式：所有 C(n, q) 个 q 元子集各一项，权重为 scale。
    """
    if not 1 <= q <= n:
        raise ParameterError(f"需要 1 ≤ q ≤ n，实际 q={q}, n={n}")
    ones = (1,) * q
    return PoweredPolynomial(n, [(PoweredHyperedge(combo, ones), scale) for combo in itertools.combinations(range(n), q)])


def linear(n: int, weights: Sequence[Weight] | None = None) -> PoweredPolynomial:
    """线性多项式 Σ w_i x_i（q=1）。"""
    weights = [1.0] * n if weights is None else list(weights)
    if len(weights) != n:
        raise DimensionMismatch("权重个数与 n 不一致")
    return PoweredPolynomial(n, [(PoweredHyperedge((i,), (1,)), w) for i, w in enumerate(weights)])


def pair_index(n: int, i: int, j: int) -> int:
    """对称矩阵中无序对 (i, j), i ≤ j 的变量编号（按行优先的上三角顺序）。"""
    if i > j:
        i, j = j, i
    return i * n - i * (i - 1) // 2 + (j - i)


def matrix_variables(matrix: np.ndarray, symmetric: bool) -> np.ndarray:
    """把矩阵元素按积和式多项式的变量顺序展开。"""
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if not symmetric:
        return matrix.reshape(-1)
    return np.array([matrix[i, j] for i in range(n) for j in range(i, n)])


def permanent_poly(n: int, symmetric: bool = False) -> PoweredPolynomial:
    """
    积和式的多项式形式。

    一般情形有 n² 个变量，变量 i*n+j 对应 A[i][j]，每个置换一项；
    对称情形有 C(n,2)+n 个变量对应上三角，置换经无序对映射后幂次可达 2。

    Raises:
        SizeLimit: n 超过多项式形式上限（n! 项）。
    """
    if n < 1:
        raise ParameterError("积和式阶数必须 ≥ 1")
    if n > BUDGETS["perm_poly_n"]:
        raise SizeLimit(f"积和式多项式形式最多支持 n={BUDGETS['perm_poly_n']}（n! 项），请改用采样")
    terms = []
    for sigma in itertools.permutations(range(n)):
        if symmetric:
            edge = PoweredHyperedge.from_items((pair_index(n, i, sigma[i]), 1) for i in range(n))
        else:
            edge = PoweredHyperedge.from_items((i * n + sigma[i], 1) for i in range(n))
        terms.append((edge, 1.0))
    n_vars = n * (n + 1) // 2 if symmetric else n * n
    return PoweredPolynomial(n_vars, terms)


def edge_index(n: int, i: int, j: int) -> int:
    """完全图 K_n 中边 {i, j} 的变量编号。"""
    if i == j:
        raise ParameterError("自环不是边")
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def cycle_count_through_vertex(n: int, q: int) -> int:
    """经过固定顶点的 q-简单环个数 (q−1)!·C(n−1, q−1)/2。"""
    return math.factorial(q - 1) * math.comb(n - 1, q - 1) // 2


def cycles_poly(n: int, q: int) -> PoweredPolynomial:
    """
    K_n 的每条边一个变量；每个经过顶点 0 的 q-简单环对应一个权重为 1 的多线性项。

    Raises:
        SizeLimit: 项数超过配置上限。
    """
    if not 3 <= q <= n:
        raise ParameterError(f"需要 3 ≤ q ≤ n，实际 q={q}, n={n}")
    expected = cycle_count_through_vertex(n, q)
    if expected > BUDGETS["cycles_terms"]:
        raise SizeLimit(f"环多项式项数 {expected} 超过上限 {BUDGETS['cycles_terms']}")
    terms = []
    for path in itertools.permutations(range(1, n), q - 1):
        # 每个环的两个方向只保留一个
        if path[0] > path[-1]:
            continue
        cycle = (0,) + path
        edges = [edge_index(n, cycle[i], cycle[(i + 1) % q]) for i in range(q)]
        terms.append((PoweredHyperedge.from_items((e, 1) for e in edges), 1.0))
    poly = PoweredPolynomial(n * (n - 1) // 2, terms)
    logger.debug("cycles_poly(n=%d, q=%d): %d 项", n, q, len(poly))
    return poly


def gnp_cycle_dists(n: int, p: float) -> list[DistributionSpec]:
    """G(n, p) 中每条边一个 bernoulli(p)。"""
    return [bernoulli(p)] * (n * (n - 1) // 2)
