"""
异常与警告定义

所有模块抛出的业务异常都继承自 PhenosimError，CLI 据此区分数据错误（退出码 1）
和程序缺陷。非致命情况通过 warnings.warn 发出对应的 Warning 子类。
"""

from typing import List, Optional, Tuple


class PhenosimError(Exception):
    """所有 phenosim 业务异常的基类"""


class InvalidParameter(PhenosimError, ValueError):
    """参数不满足前置条件"""


class ConfigError(PhenosimError):
    """实验配置文件无效（未知字段、类型错误、取值越界）"""


# ===== sampling-core =====

class ConstraintInfeasible(PhenosimError):
    """约束 C = {sum(Y) = n1} 的概率为 0，无法采样"""


class RejectionBudgetExceeded(PhenosimError):
    """拒绝采样在允许的尝试次数内没有得到满足约束的样本"""

    def __init__(self, max_attempts: int, prob_constraint: float, log10_prob: float):
        self.max_attempts = max_attempts
        self.prob_constraint = prob_constraint
        self.log10_prob = log10_prob
        super().__init__(
            f"{max_attempts} 次尝试均未满足约束, "
            f"P(C)={prob_constraint:.3g} (log10 P(C)={log10_prob:.2f}), "
            f"期望尝试次数约 10^{-log10_prob:.1f}"
        )


# ===== disease-model =====

class PiOutOfRange(PhenosimError):
    """疾病模型给出的 π 不在 [0,1] 内"""

    def __init__(self, value: float, genotype: Optional[Tuple] = None, individual: Optional[str] = None):
        self.value = value
        self.genotype = genotype
        self.individual = individual
        where = f", 基因型 {genotype}" if genotype is not None else ""
        who = f", 个体 {individual}" if individual is not None else ""
        super().__init__(f"π={value!r} 超出 [0,1]{where}{who}")


class MissingModelGenotype(PhenosimError):
    """模型 SNP 上存在缺失基因型"""


# ===== genotype-io =====

class ParseError(PhenosimError):
    """基因型文件无法解析"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ''
        if line is not None:
            location = f" (行 {line}" + (f", 列 {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class DimensionMismatch(PhenosimError):
    """矩阵维度与元数据或表头不一致"""


class UnknownValue(ParseError):
    """基因型取值不在 {0,1,2,NA} 中"""


class EmptyAfterFilter(PhenosimError):
    """MAF 过滤后没有剩余 SNP"""


class NotMultipleOf20(InvalidParameter):
    """玩具数据集的 n 必须是 20 的倍数"""


# ===== association-stats / roc-analysis =====

class EmptyRadius(PhenosimError):
    """半径 ρ 内没有任何 SNP"""


class EmptySample(PhenosimError):
    """ROC 输入样本为空"""


# ===== power-harness =====

class PartialFailure(PhenosimError):
    """部分重复实验失败"""

    def __init__(self, failures: List[Tuple[str, int, str]]):
        self.failures = failures
        preview = '; '.join(f"{hyp}#{rep}: {msg}" for hyp, rep, msg in failures[:5])
        more = f" ... 以及另外 {len(failures) - 5} 个" if len(failures) > 5 else ''
        super().__init__(f"{len(failures)} 个重复实验失败: {preview}{more}")


# ===== warnings =====

class DegenerateChainWarning(UserWarning):
    """MCMC 链退化（n1=0、n1=n 或所有自由个体同一状态），只能返回唯一构型"""


class DuplicatePositionWarning(UserWarning):
    """同一染色体上出现重复的 SNP 位置"""


class EmptyAfterFilterWarning(UserWarning):
    """MAF 过滤后矩阵为空（未要求报错时）"""
