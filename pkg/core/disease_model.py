"""
疾病模型：把基因型映射为每个个体的患病概率 π_i

- SingleSnpModel: 单 SNP 外显率模型 (f0, f0*RR1, f0*RR2)
- TwoLocusEpistaticModel: 两位点加性 + 上位效应模型
- TabularModel: 显式基因型组合 -> π 查表，可选协变量（logistic 或线性风险连接）
- null_model: 常数 π（H0）

π 超出 [0,1] 时直接报错，不做截断。
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from .errors import ConfigError, InvalidParameter, MissingModelGenotype, PiOutOfRange
from .genotype_io import MISSING, GenotypeMatrix, SnpRef
from .sampling import CaseProbabilityVector

MISSING_POLICIES = ('error', 'zero')
LINKS = ('logistic', 'linear')

GENOTYPE_PAIRS = [(a, b) for a in range(3) for b in range(3)]


def _check_probability(value: float, genotype: Optional[Tuple] = None):
    if not (0.0 <= value <= 1.0) or np.isnan(value):
        raise PiOutOfRange(float(value), genotype=genotype)


@dataclass(frozen=True)
class SingleSnpModel:
    """单 SNP 模型：π = f0 * (1, RR1, RR2)[X]"""

    snp: SnpRef
    f0: float
    rr1: float
    rr2: float

    def __post_init__(self):
        if not 0.0 < self.f0 <= 1.0:
            raise InvalidParameter(f"f0 必须位于 (0,1]，得到 {self.f0}")
        if self.rr1 < 0.0 or self.rr2 < 0.0:
            raise InvalidParameter(f"相对风险必须 >= 0，得到 RR1={self.rr1}, RR2={self.rr2}")
        for genotype, value in enumerate(self.penetrances):
            _check_probability(value, genotype=(genotype,))

    @property
    def penetrances(self) -> Tuple[float, float, float]:
        return self.f0, self.f0 * self.rr1, self.f0 * self.rr2

    @property
    def snp_refs(self) -> List[SnpRef]:
        return [self.snp]

    def compute(self, genotypes: np.ndarray, covariates: Optional[np.ndarray] = None) -> np.ndarray:
        return np.asarray(self.penetrances, dtype=np.float64)[genotypes[:, 0]]


@dataclass(frozen=True)
class TwoLocusEpistaticModel:
    """
    两位点上位模型

    π = f0 * (1 + β X1)            若 X2 = 0
        f0 * (1 + β X2)            若 X1 = 0
        f0 * (1 + η + β (X1 + X2)) 若 X1 X2 ≠ 0
    """

    snp1: SnpRef
    snp2: SnpRef
    f0: float
    beta: float
    eta: float

    def __post_init__(self):
        if not 0.0 < self.f0 <= 1.0:
            raise InvalidParameter(f"f0 必须位于 (0,1]，得到 {self.f0}")
        if self.beta < 0.0:
            raise InvalidParameter(f"加性效应 β 必须 >= 0，得到 {self.beta}")
        for x1, x2 in GENOTYPE_PAIRS:
            _check_probability(self.penetrance(x1, x2), genotype=(x1, x2))

    def penetrance(self, x1: int, x2: int) -> float:
        if x2 == 0:
            return self.f0 * (1.0 + self.beta * x1)
        if x1 == 0:
            return self.f0 * (1.0 + self.beta * x2)
        return self.f0 * (1.0 + self.eta + self.beta * (x1 + x2))

    @property
    def snp_refs(self) -> List[SnpRef]:
        return [self.snp1, self.snp2]

    def compute(self, genotypes: np.ndarray, covariates: Optional[np.ndarray] = None) -> np.ndarray:
        x1 = genotypes[:, 0].astype(np.float64)
        x2 = genotypes[:, 1].astype(np.float64)
        interaction = np.where((x1 != 0) & (x2 != 0), self.eta, 0.0)
        return self.f0 * (1.0 + interaction + self.beta * (x1 + x2))


@dataclass(frozen=True)
class TabularModel:
    """
    查表模型：基因型组合（按 snps 顺序）-> π

    coefficients 非空时，每个个体的 π 再经过协变量调整：
    logistic: π = expit(logit(π_table) + Σ β_c x_c)
    linear:   π = π_table + Σ β_c x_c
    """

    snps: Tuple[SnpRef, ...]
    table: Mapping[Tuple[int, ...], float]
    default: Optional[float] = None
    coefficients: Mapping[str, float] = field(default_factory=dict)
    link: str = 'logistic'

    def __post_init__(self):
        object.__setattr__(self, 'snps', tuple(self.snps))
        table = {tuple(int(g) for g in key): float(value) for key, value in self.table.items()}
        for key, value in table.items():
            if len(key) != len(self.snps):
                raise InvalidParameter(f"基因型组合 {key} 的长度与 SNP 数 {len(self.snps)} 不一致")
            _check_probability(value, genotype=key)
        if self.default is not None:
            _check_probability(self.default)
        if self.link not in LINKS:
            raise InvalidParameter(f"未知的连接函数 {self.link!r}，支持 {', '.join(LINKS)}")
        object.__setattr__(self, 'table', table)
        object.__setattr__(self, 'coefficients', dict(self.coefficients))

    @property
    def snp_refs(self) -> List[SnpRef]:
        return list(self.snps)

    def compute(self, genotypes: np.ndarray, covariates: Optional[np.ndarray] = None) -> np.ndarray:
        rows, inverse = np.unique(genotypes, axis=0, return_inverse=True)
        lookup = np.empty(len(rows))
        for k, row in enumerate(rows):
            key = tuple(int(g) for g in row)
            if key in self.table:
                lookup[k] = self.table[key]
            elif self.default is not None:
                lookup[k] = self.default
            else:
                raise InvalidParameter(f"查表模型没有覆盖基因型组合 {key}，且未声明 default")
        pi = lookup[np.asarray(inverse).reshape(-1)]

        if not self.coefficients:
            return pi
        if covariates is None:
            raise InvalidParameter(f"模型需要协变量 {sorted(self.coefficients)}，但没有提供协变量文件")
        shift = covariates @ np.array([self.coefficients[name] for name in sorted(self.coefficients)])
        if self.link == 'linear':
            return pi + shift
        with np.errstate(divide='ignore'):
            return expit(logit(pi) + shift)


DiseaseModel = Union[SingleSnpModel, TwoLocusEpistaticModel, TabularModel]


def load_covariates(path: Union[str, Path]) -> pd.DataFrame:
    """读取协变量 CSV（可选 individual_id 列，其余列为数值协变量）"""
    return pd.read_csv(path)


def _covariate_matrix(model: DiseaseModel,
                      genotypes: GenotypeMatrix,
                      covariates: Optional[pd.DataFrame]) -> Optional[np.ndarray]:
    names = sorted(getattr(model, 'coefficients', {}) or {})
    if not names or covariates is None:
        return None
    frame = covariates
    if 'individual_id' in frame.columns:
        frame = frame.set_index(frame['individual_id'].astype(str))
        absent = [ind for ind in genotypes.individual_ids if ind not in frame.index]
        if absent:
            raise InvalidParameter(f"协变量文件缺少个体 {absent[:5]}")
        frame = frame.loc[list(genotypes.individual_ids)]
    elif len(frame) != genotypes.n:
        raise InvalidParameter(f"协变量文件有 {len(frame)} 行，基因型有 {genotypes.n} 个个体")
    missing = [name for name in names if name not in frame.columns]
    if missing:
        raise InvalidParameter(f"协变量文件缺少列 {missing}")
    return frame[names].to_numpy(dtype=np.float64)


def evaluate_pi(model: DiseaseModel,
                genotypes: GenotypeMatrix,
                missing_policy: str = 'error',
                covariates: Optional[pd.DataFrame] = None) -> CaseProbabilityVector:
    """
    计算每个个体的患病概率 π_i

    Args:
        model: 疾病模型
        genotypes: 基因型矩阵
        missing_policy: 模型 SNP 上缺失值的处理方式，'error'（默认）或 'zero'（按 0 个拷贝处理）
        covariates: TabularModel 协变量（DataFrame）

    Returns:
        CaseProbabilityVector

    Raises:
        PiOutOfRange: 任一 π 不在 [0,1]（报告对应基因型与个体）
        MissingModelGenotype: missing_policy='error' 且模型 SNP 上存在缺失值
    """
    if missing_policy not in MISSING_POLICIES:
        raise InvalidParameter(f"未知的缺失值策略 {missing_policy!r}，支持 {', '.join(MISSING_POLICIES)}")

    columns = [genotypes.snp_index(ref) for ref in model.snp_refs]
    x = np.array(genotypes.values[:, columns], dtype=np.int64)
    missing = x == MISSING
    if missing.any():
        if missing_policy == 'error':
            row, col = np.argwhere(missing)[0]
            raise MissingModelGenotype(
                f"个体 {genotypes.individual_ids[row]} 在模型 SNP {genotypes.snps[columns[col]].id} 上缺失基因型 "
                f"（共 {int(missing.sum())} 处），可使用 missing_policy='zero'"
            )
        x[missing] = 0

    pi = model.compute(x, _covariate_matrix(model, genotypes, covariates))
    bad = np.flatnonzero(~((pi >= 0.0) & (pi <= 1.0)))
    if bad.size:
        i = int(bad[0])
        raise PiOutOfRange(float(pi[i]), genotype=tuple(int(g) for g in x[i]), individual=genotypes.individual_ids[i])
    return CaseProbabilityVector(pi)


def null_model(n: int, p0: float) -> CaseProbabilityVector:
    """H0：所有个体 π = p0"""
    if not 0.0 < p0 < 1.0:
        raise InvalidParameter(f"p0 必须位于 (0,1)，得到 {p0}")
    if int(n) < 1:
        raise InvalidParameter(f"n 必须 >= 1，得到 {n}")
    return CaseProbabilityVector(np.full(int(n), float(p0)))


# ===== 配置解析 =====

_MODEL_FIELDS = {
    'single_snp': {'type', 'snp', 'f0', 'rr1', 'rr2'},
    'two_locus': {'type', 'snp1', 'snp2', 'f0', 'beta', 'eta'},
    'tabular': {'type', 'snps', 'table', 'default', 'coefficients', 'link'},
    'null': {'type', 'p0'},
}


def _require(block: Mapping[str, Any], key: str, kind: str):
    if key not in block:
        raise ConfigError(f"model.{key} 缺失（模型类型 {kind}）")
    return block[key]


def model_from_dict(block: Mapping[str, Any]) -> Union[DiseaseModel, float]:
    """
    从配置字典构建疾病模型

    null 类型返回常数 p0（调用方用 null_model 展开）。表格模型的 table 写作
    {"0,1": 0.12, ...} 或 [[[0,1], 0.12], ...]。
    """
    if not isinstance(block, Mapping):
        raise ConfigError("model 必须是一个对象")
    kind = block.get('type')
    if kind not in _MODEL_FIELDS:
        raise ConfigError(f"未知的模型类型 {kind!r}，支持 {', '.join(_MODEL_FIELDS)}")
    unknown = set(block) - _MODEL_FIELDS[kind]
    if unknown:
        hint = '（协变量文件写在顶层 covariates 字段）' if any('covariate' in key for key in unknown) else ''
        raise ConfigError(f"model 中存在未知字段: {sorted(unknown)}{hint}")

    try:
        if kind == 'single_snp':
            return SingleSnpModel(
                snp=_require(block, 'snp', kind),
                f0=float(_require(block, 'f0', kind)),
                rr1=float(_require(block, 'rr1', kind)),
                rr2=float(_require(block, 'rr2', kind)),
            )
        if kind == 'two_locus':
            return TwoLocusEpistaticModel(
                snp1=_require(block, 'snp1', kind),
                snp2=_require(block, 'snp2', kind),
                f0=float(_require(block, 'f0', kind)),
                beta=float(_require(block, 'beta', kind)),
                eta=float(_require(block, 'eta', kind)),
            )
        if kind == 'tabular':
            raw_table = _require(block, 'table', kind)
            if isinstance(raw_table, Mapping):
                table = {tuple(int(g) for g in str(key).split(',')): value for key, value in raw_table.items()}
            else:
                table = {tuple(int(g) for g in key): value for key, value in raw_table}
            return TabularModel(
                snps=tuple(_require(block, 'snps', kind)),
                table=table,
                default=block.get('default'),
                coefficients=block.get('coefficients') or {},
                link=block.get('link', 'logistic'),
            )
        return float(_require(block, 'p0', kind))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"模型参数无效: {e}")
