"""
polytail - 独立随机变量多项式的集中不等式工具箱。

提供带幂超图多项式表示、μ 光滑度剖面、精确矩与全支撑预言机、各尾概率上界、
超图普查、下界实例构造与蒙特卡洛估计。
"""
from polytail.errors import PolytailError
from polytail.poly import PoweredHyperedge, PoweredPolynomial
from polytail.rv import DistributionSpec
from polytail.smoothness import MuProfile, mu_profile
from polytail.tailbounds import ConstantsConfig, evaluate_bound

__version__ = "0.1.0"

__all__ = [
    "ConstantsConfig",
    "DistributionSpec",
    "MuProfile",
    "PolytailError",
    "PoweredHyperedge",
    "PoweredPolynomial",
    "evaluate_bound",
    "mu_profile",
]
