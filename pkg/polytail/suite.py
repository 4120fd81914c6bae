"""
冻结的校准套件 - 由固定种子生成的小实例集合，用于反推主定理与矩引理中的绝对常数。

每个实例都能做全支撑枚举，因此精确尾概率与精确中心矩可直接与上界比较。
隐含常数 = 使上界在该实例、该 λ 上恰好成立的最小常数；套件上取最大值后，
推荐值为不小于最大值的最小 2 的幂再乘 2。
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import pandas as pd

from polytail.moments import enumerate_outcomes
from polytail.poly import PoweredHyperedge, PoweredPolynomial, complete_multilinear, linear
from polytail.rv import DistributionSpec, bernoulli, finite_support, rademacher
from polytail.settings import CALIBRATION_SUITE
from polytail.smoothness import mu_profile
from polytail.tailbounds import ConstantsConfig, common_L

logger = logging.getLogger(__name__)

SUITE_SEED = CALIBRATION_SUITE["seed"]
LAMBDA_POINTS = 20
MOMENT_ORDERS = (2, 4, 6)
WEIGHTS = (0.5, 1.0, 2.0)
CALIBRATED = ("R_main", "Q_main2", "R3_moment")


@dataclass(frozen=True)
class SuiteInstance:
    name: str
    poly: PoweredPolynomial
    dists: tuple[DistributionSpec, ...]

    @property
    def nonnegative_multilinear(self) -> bool:
        return self.poly.multilinear and all(float(w) >= 0 for w in self.poly.weights())

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "poly": self.poly.to_json(), "dists": [d.to_json() for d in self.dists]}


# ============================================================
# 套件生成
# ============================================================

def _random_multilinear(rng: np.random.Generator, n: int, q: int) -> PoweredPolynomial:
    subsets = [tuple(sorted(rng.choice(n, size=q, replace=False).tolist())) for _ in range(int(rng.integers(1, 2 * n + 1)))]
    weights = rng.choice(WEIGHTS, size=len(subsets))
    return PoweredPolynomial(n, [(PoweredHyperedge(s, (1,) * q), float(w)) for s, w in zip(subsets, weights)])


def _random_powered(rng: np.random.Generator, n: int, q: int, gamma: int = 2) -> PoweredPolynomial:
    terms = []
    for _ in range(int(rng.integers(1, n + 2))):
        powers: list[int] = []
        while sum(powers) < q:
            powers.append(int(rng.integers(1, min(gamma, q - sum(powers)) + 1)))
        if len(powers) > n:
            powers = [q]
        verts = sorted(rng.choice(n, size=len(powers), replace=False).tolist())
        terms.append((PoweredHyperedge.from_items(zip(verts, powers)), float(rng.choice(WEIGHTS))))
    return PoweredPolynomial(n, terms)


def _three_atom() -> DistributionSpec:
    return finite_support([(0.0, 0.5), (1.0, 0.3), (2.0, 0.2)])


def multilinear_suite(seed: int = SUITE_SEED) -> list[SuiteInstance]:
    """n ≤ 8、q ≤ 3、权重取自 {0.5, 1, 2} 的多线性实例，变量为 Bernoulli 或 Rademacher。"""
    rng = np.random.default_rng(seed)
    families = {"b05": bernoulli(0.5), "b02": bernoulli(0.2), "rad": rademacher()}
    out = []
    for n in range(2, 9):
        for q in range(1, min(3, n) + 1):
            for tag, dist in families.items():
                out.append(SuiteInstance(f"rand-n{n}-q{q}-{tag}", _random_multilinear(rng, n, q), (dist,) * n))
            if n <= 6:
                out.append(SuiteInstance(f"complete-n{n}-q{q}", complete_multilinear(n, q), (bernoulli(0.5),) * n))
        out.append(SuiteInstance(f"linear-n{n}", linear(n), (bernoulli(0.5),) * n))
    return out


def powered_suite(seed: int = SUITE_SEED + 1) -> list[SuiteInstance]:
    """Γ = 2、n ≤ 6 的带幂实例。"""
    rng = np.random.default_rng(seed)
    families = {"b05": bernoulli(0.5), "rad": rademacher(), "atom3": _three_atom()}
    out = []
    for n in range(2, 7):
        for q in (2, 3):
            for tag, dist in families.items():
                out.append(SuiteInstance(f"powered-n{n}-q{q}-{tag}", _random_powered(rng, n, q), (dist,) * n))
    return out


def frozen_suite(seed: int = SUITE_SEED) -> list[SuiteInstance]:
    return multilinear_suite(seed) + powered_suite(seed + 1)


def suite_hash(instances: Sequence[SuiteInstance]) -> str:
    """规范 JSON 的 sha256。"""
    payload = json.dumps([inst.to_json() for inst in instances], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def lambda_grid(max_deviation: float, points: int = LAMBDA_POINTS) -> list[float]:
    return [j / points * max_deviation for j in range(1, points + 1)]


# ============================================================
# 隐含常数
# ============================================================

def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def implied_main_constant(mus: Sequence[float], q: int, L: float, gamma: float, lam: float, tail: float,
                          placement: str) -> float:
    """
    使 e²·max_r max{e^{−λ²/(μ₀μ_r(LΓ)^r R^e)}, e^{−(λ/(μ_r(LΓ)^r R^e))^{1/r}}} ≥ tail 的最小 R，
    e = r（placement="r"）或 q（placement="q"）。
    """
    if tail <= 0 or lam <= 0:
        return 0.0
    slack = 2.0 - math.log(tail)
    if slack <= 0:
        return 0.0
    log_slack = math.log(slack)
    best = math.inf
    for r in range(1, q + 1):
        if mus[r] <= 0:
            continue
        e = r if placement == "r" else q
        log_scale = _log(mus[r]) + r * (_log(L) + _log(gamma))
        if mus[0] > 0:
            best = min(best, (2 * math.log(lam) - _log(mus[0]) - log_scale - log_slack) / e)
        best = min(best, (math.log(lam) - log_scale - r * log_slack) / e)
    return math.exp(best) if best < math.inf else math.inf


def implied_moment_constant(mus: Sequence[float], q: int, L: float, gamma: float, k: int, moment: float) -> float:
    """使一般偶数阶矩引理对精确中心矩 E|f−Ef|^k 成立的最小 R₃。"""
    if moment <= 0:
        return 0.0
    log_m = math.log(moment)
    best = math.inf
    for t in range(1, q + 1):
        if mus[t] <= 0:
            continue
        common = t * (_log(gamma) + _log(L)) + _log(mus[t])
        if mus[0] > 0:
            log_a = 0.5 * k * (math.log(k) + common + _log(mus[0]))
            best = min(best, 2 * (log_m - log_a) / (q * k))
        log_b = k * (t * math.log(k) + common)
        best = min(best, (log_m - log_b) / (q * k))
    return math.exp(best) if best < math.inf else math.inf


@dataclass
class CalibrationReport:
    suite_hash: str
    n_instances: int
    implied: dict[str, float]
    worst: dict[str, str] = field(default_factory=dict)

    def power_of_two(self, name: str) -> float:
        value = self.implied[name]
        if value <= 1:
            return 1.0
        return float(2 ** math.ceil(math.log2(value)))

    def recommended(self) -> dict[str, float]:
        return {name: 2 * self.power_of_two(name) for name in self.implied}

    def drift(self, shipped: ConstantsConfig | None = None) -> dict[str, tuple[float, float]]:
        """推荐值与当前常数不一致的项：{名称: (当前值, 推荐值)}。"""
        current = (shipped or ConstantsConfig()).to_json()
        return {name: (current[name], value) for name, value in self.recommended().items() if current[name] != value}

    def constants(self, base: ConstantsConfig | None = None) -> ConstantsConfig:
        data = (base or ConstantsConfig()).to_json()
        data.update(self.recommended())
        return ConstantsConfig.from_json(data)

    def rows(self) -> list[dict[str, Any]]:
        """calibration_runs 表的行。"""
        return [
            {
                "suite_hash": self.suite_hash, "constant": name, "implied_max": self.implied[name],
                "power_of_two": self.power_of_two(name), "shipped_value": 2 * self.power_of_two(name),
                "n_instances": self.n_instances,
            }
            for name in self.implied
        ]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.rows())
        df["worst_instance"] = [self.worst.get(name, "") for name in self.implied]
        return df


def calibrate(instances: Sequence[SuiteInstance] | None = None,
              moment_orders: Sequence[int] = MOMENT_ORDERS) -> CalibrationReport:
    """在套件上逐实例、逐 λ 计算隐含常数并取最大值。"""
    instances = list(instances) if instances is not None else frozen_suite()
    implied = {name: 0.0 for name in CALIBRATED}
    worst: dict[str, str] = {}

    def record(name: str, value: float, where: str) -> None:
        if value > implied[name]:
            implied[name] = value
            worst[name] = where

    for inst in instances:
        profile = mu_profile(inst.poly, inst.dists)
        mus, q, gamma = list(profile.values), inst.poly.q, float(inst.poly.gamma)
        if q == 0:
            continue
        L = common_L(inst.dists)
        table = enumerate_outcomes(inst.poly, inst.dists)
        for lam in lambda_grid(table.max_deviation()):
            tail = table.tail(lam)
            where = f"{inst.name}@{lam:.6g}"
            if inst.nonnegative_multilinear:
                record("R_main", implied_main_constant(mus, q, L, 1.0, lam, tail, "r"), where)
            record("R_main", implied_main_constant(mus, q, L, gamma, lam, tail, "q"), where)
            r_main2 = implied_main_constant(mus, q, L, gamma, lam, tail, "r")
            record("Q_main2", r_main2 ** (1.0 / (gamma + 1)), where)
        for k in moment_orders:
            record("R3_moment", implied_moment_constant(mus, q, L, gamma, k, table.abs_central_moment(k)),
                   f"{inst.name}@k={k}")

    report = CalibrationReport(suite_hash(instances), len(instances), implied, worst)
    logger.info("校准完成: %d 个实例, 隐含常数 %s", len(instances),
                ", ".join(f"{k}={v:.4g}" for k, v in implied.items()))
    return report
