"""
phenosim 核心模块
包含约束表型抽样、疾病模型、基因型读写、关联检验、ROC 分析和环境检查
"""

__version__ = '1.0.0'
__author__ = 'phenosim Team'

from .environment import EnvironmentChecker
from .errors import PhenosimError

__all__ = [
    'EnvironmentChecker',
    'PhenosimError',
]
