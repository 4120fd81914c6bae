"""
异常体系 - 所有领域错误均继承自 PolytailError，并携带命令行退出码。
"""


class PolytailError(Exception):
    """工具箱错误基类。"""

    exit_code = 1


class ParameterError(PolytailError, ValueError):
    """参数非法（概率越界、奇数阶矩、前置条件不满足等）。"""


class UnsupportedMoment(PolytailError):
    """没有解析矩公式，或阶数超过 d_max。"""


class BudgetExceeded(PolytailError):
    """枚举 / 展开规模超过配置预算。"""

    exit_code = 3


class DimensionMismatch(PolytailError, ValueError):
    """赋值向量或分布列表长度与变量数不一致。"""


class SizeLimit(PolytailError):
    """生成器规模超过硬上限（积和式阶数、环多项式项数等）。"""


class MissingInput(PolytailError):
    """所选定理缺少必需的输入符号。"""


class KimVuConditionViolated(PolytailError):
    """Kim–Vu 条件 (1) 或 (2) 不成立。"""

    def __init__(self, condition: int, index: int, message: str) -> None:
        super().__init__(message)
        self.condition = condition
        self.index = index


class NonFiniteSupport(PolytailError):
    """全支撑枚举遇到无限支撑分布。"""


class DegenerateExponent(PolytailError):
    """指数退化（例如 k=1 时的 k^0 约定）。"""


class InvariantViolation(PolytailError):
    """检测到不变量被破坏（例如上界低于精确尾概率）。"""

    exit_code = 2
