"""
多项式集中不等式工具箱 - 全局配置

所有配置项集中管理，可由环境变量 (POLYTAIL_*) 覆盖。
"""
import os
from pathlib import Path


# ============================================================
# 基础路径
# ============================================================
PROJECT_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = PROJECT_ROOT / "data"
OUTPUT_DIR = PROJECT_ROOT / "output"
DB_PATH = os.getenv("POLYTAIL_DB", str(DATA_DIR / "polytail.db"))
LOG_DIR = PROJECT_ROOT / "logs"
LOG_FILE = str(LOG_DIR / "polytail.log")

# 确保目录存在
DATA_DIR.mkdir(parents=True, exist_ok=True)
LOG_DIR.mkdir(parents=True, exist_ok=True)

# ============================================================
# 运行环境
# ============================================================
ENVIRONMENT = os.getenv("POLYTAIL_ENV", "prod")  # dev / prod
LOG_LEVEL = os.getenv("POLYTAIL_LOG_LEVEL", "INFO")


def default_threads() -> int:
    """工作线程数：POLYTAIL_THREADS 优先，否则为 1。"""
    raw = os.getenv("POLYTAIL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ============================================================
# 计算预算（超出即抛 BudgetExceeded / SizeLimit）
# ============================================================
BUDGETS: dict = {
    "d_max": int(os.getenv("POLYTAIL_D_MAX", "64")),  # 解析矩的最高阶
    "mu_subedges": 10**7,          # μ_r 子超边枚举总数
    "center_subedges": 10**7,      # 中心化分解子超边总数
    "expansion_profiles": 10**7,   # 矩展开的不同幂次剖面数
    "enum_support": 2**24,         # 全支撑枚举的联合支撑大小
    "census_space": 10**8,         # 普查原始搜索空间
    "perm_poly_n": 8,              # 多项式形式积和式的最大阶
    "ryser_n": 24,                 # Ryser 采样的最大阶
    "cycles_terms": 10**6,         # 环多项式项数上限
    "lb_support": 10**6,           # 下界实例精确尾概率的卷积支撑上限
    "lift_m": 10**6,               # 下界实例提升因子的二项试验数上限
    "markov_k": 10**5,             # Markov 步骤候选阶数上限（超出截断，不抛错）
}

# ============================================================
# 绝对常数（校准协议：套件上成立的最小 2 的幂，再乘 2）
# ============================================================
# 前三项由 `polytail calibrate` 在下述冻结套件上给出（隐含最大值 0.6945 / 0.8334 / 0.7709），
# 套件 sha256 见该命令输出的 suite_hash 与 calibration_runs 表
CALIBRATION_SUITE: dict = {
    "seed": 20240601,    # 多线性部分用 seed，带幂部分用 seed + 1
    "n_instances": 111,
}

DEFAULT_CONSTANTS: dict = {
    "R_main": 2.0,       # 定理 main1special / main1
    "Q_main2": 2.0,      # 定理 main2，R = Q^(Γ+1)
    "R3_moment": 2.0,    # 一般偶数阶矩引理
    "R_hyper": 4.0,      # 超压缩不等式
    "R_bblm": 4.0,       # BBLM 不等式
    "R_cw": 4.0,         # Carbery–Wright 不等式
    "c_perm": 1.0,       # 积和式定理中的 c
    "c_cycles": 0.125,   # 环计数定理中的 c
}

# ============================================================
# 普查 / 蒙特卡洛 / 容差
# ============================================================
CENSUS_CONFIG: dict = {
    "R0_cap": 1000.0,   # 主计数引理隐含常数的上限
    "k_max": 4,
    "q_max": 3,
}

MC_CONFIG: dict = {
    "confidence": 0.99,  # Clopper–Pearson 置信水平
    "chunk": 4096,       # 每个任务块的样本数（按全局样本下标切分）
}

TOLERANCES: dict = {
    "moment_bounded": 1e-12,
    "mu_relative": 1e-12,
    "reconstruction": 1e-10,
}

# ============================================================
# 日志配置
# ============================================================
LOGGING_CONFIG: dict = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        },
    },
    "handlers": {
        "file": {
            "class": "logging.FileHandler",
            "filename": LOG_FILE,
            "formatter": "standard",
            "encoding": "utf-8",
        },
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "stream": "ext://sys.stderr",
        },
    },
    "root": {
        "level": LOG_LEVEL,
        "handlers": ["file", "console"],
    },
}
