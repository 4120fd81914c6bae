# 报告生成模块
from .report_generator import ReportGenerator

__all__ = ["ReportGenerator"]
