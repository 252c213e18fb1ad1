"""
单标记关联检验与半径限定的最大统计量 S_ρ

趋势检验采用 Cochran-Armitage 加性评分 (0,1,2)，缺失基因型按 SNP 逐列剔除。
TrendTestPanel 预先计算与表型无关的列统计量，每个重复实验只需两次矩阵-向量乘法。
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy.special import erfc, log_ndtr

from .errors import DimensionMismatch, EmptyRadius, InvalidParameter
from .genotype_io import MISSING, SnpInfo
from .sampling import PhenotypeAssignment

LN10 = math.log(10.0)
INFINITE_RHO = math.inf

PhenotypeLike = Union[PhenotypeAssignment, Sequence[int], np.ndarray]


def _phenotype_array(phenotypes: PhenotypeLike) -> np.ndarray:
    if isinstance(phenotypes, PhenotypeAssignment):
        return np.asarray(phenotypes.y, dtype=np.int8)
    y = np.asarray(phenotypes)
    if y.ndim != 1 or not np.isin(y, (0, 1)).all():
        raise InvalidParameter("表型向量必须是一维 0/1 向量")
    return y.astype(np.int8)


def chi2_sf(statistic: np.ndarray) -> np.ndarray:
    """1 自由度卡方上尾概率 P(χ²₁ > x) = erfc(√(x/2))"""
    return erfc(np.sqrt(np.asarray(statistic, dtype=np.float64) / 2.0))


def chi2_neg_log10_sf(statistic: np.ndarray) -> np.ndarray:
    """-log10 P(χ²₁ > x)，统计量很大时不会下溢为 ∞"""
    root = np.sqrt(np.asarray(statistic, dtype=np.float64))
    return -(math.log(2.0) + log_ndtr(-root)) / LN10


@dataclass(frozen=True)
class TrendTestResult:
    """单个 SNP 的趋势检验结果；degenerate 表示单态列或方差为 0（统计量 0，p=1）"""

    snp_id: str
    statistic: float
    p_value: float
    degenerate: bool = False
    neg_log10_p: Optional[float] = None

    def __post_init__(self):
        if self.neg_log10_p is None:
            value = -math.log10(self.p_value) if self.p_value > 0.0 else math.inf
            object.__setattr__(self, 'neg_log10_p', max(value, 0.0))


@dataclass(frozen=True)
class TrendScan:
    """整矩阵趋势检验（各数组按 SNP 列顺序）"""

    statistic: np.ndarray
    p_value: np.ndarray
    neg_log10_p: np.ndarray
    degenerate: np.ndarray

    def results(self, snp_ids: Sequence[str]) -> List[TrendTestResult]:
        return [
            TrendTestResult(snp_id, float(s), float(p), bool(d), float(q))
            for snp_id, s, p, d, q in zip(snp_ids, self.statistic, self.p_value, self.degenerate, self.neg_log10_p)
        ]


class TrendTestPanel:
    """
    针对固定基因型矩阵的批量趋势检验

    Args:
        values: n×p 基因型矩阵（0/1/2，缺失为 -1）

    Example:
        >>> panel = TrendTestPanel(gm.values)
        >>> scan = panel.scan(assignment.y)
        >>> scan.neg_log10_p.max()
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values)
        if values.ndim != 2:
            raise DimensionMismatch(f"基因型矩阵必须是二维，得到形状 {values.shape}")
        self.n, self.p = values.shape
        valid = values != MISSING
        self.has_missing = not bool(valid.all())
        # float32 保存 0/1/2 与计数，n < 2^23 时矩阵-向量乘积是精确整数
        self._dosage = np.where(valid, values, 0).astype(np.float32)
        self._valid = valid.astype(np.float32) if self.has_missing else None
        self._n_valid = valid.sum(axis=0).astype(np.float64)
        self._sum_wm = self._dosage.sum(axis=0, dtype=np.float64)
        self._sum_w2m = (self._dosage.astype(np.float64) ** 2).sum(axis=0)

    def scan(self, phenotypes: PhenotypeLike) -> TrendScan:
        y = _phenotype_array(phenotypes)
        if y.shape[0] != self.n:
            raise DimensionMismatch(f"表型长度 {y.shape[0]} 与基因型行数 {self.n} 不一致")
        y32 = y.astype(np.float32)

        n = self._n_valid
        if self.has_missing:
            cases = (y32 @ self._valid).astype(np.float64)
        else:
            cases = np.full(self.p, float(y.sum()))
        controls = n - cases
        sum_wc = (y32 @ self._dosage).astype(np.float64)

        spread = n * self._sum_w2m - self._sum_wm ** 2
        degenerate = (n < 2) | (cases == 0) | (controls == 0) | (spread <= 0)

        with np.errstate(divide='ignore', invalid='ignore'):
            t = sum_wc - cases / n * self._sum_wm
            var = cases * controls / (n ** 2 * (n - 1)) * spread
            statistic = np.where(degenerate, 0.0, t ** 2 / var)
        statistic = np.where(np.isfinite(statistic), statistic, 0.0)

        return TrendScan(
            statistic=statistic,
            p_value=np.where(degenerate, 1.0, chi2_sf(statistic)),
            neg_log10_p=np.where(degenerate, 0.0, np.maximum(chi2_neg_log10_sf(statistic), 0.0)),
            degenerate=degenerate,
        )


def trend_test_matrix(values: np.ndarray, phenotypes: PhenotypeLike) -> TrendScan:
    """对矩阵的每一列做趋势检验（一次性调用，重复调用请复用 TrendTestPanel）"""
    return TrendTestPanel(values).scan(phenotypes)


def trend_test(genotype_column: Sequence[int], phenotypes: PhenotypeLike, snp_id: str = '') -> TrendTestResult:
    """
    Cochran-Armitage 趋势检验（评分 0,1,2）

    Args:
        genotype_column: 单个 SNP 的基因型（缺失为 -1）
        phenotypes: 0/1 表型
        snp_id: 结果中记录的 SNP 标识

    Returns:
        TrendTestResult；单态或方差为 0 时 degenerate=True, statistic=0, p=1
    """
    column = np.asarray(genotype_column).reshape(-1, 1)
    scan = TrendTestPanel(column).scan(phenotypes)
    return scan.results([snp_id])[0]


# ===== S_ρ =====

@dataclass(frozen=True)
class DiseaseLocus:
    chromosome: str
    position: int


@dataclass(frozen=True)
class RadiusStatistic:
    rho: float
    value: float


def parse_rho(value: Union[str, int, float]) -> float:
    """解析半径：正数或 'inf'"""
    if isinstance(value, str):
        if value.strip().lower() in ('inf', 'infinity', '∞'):
            return INFINITE_RHO
        try:
            value = float(value)
        except ValueError:
            raise InvalidParameter(f"无效的半径 {value!r}")
    rho = float(value)
    if not rho > 0.0:
        raise InvalidParameter(f"半径必须为正数或 inf，得到 {value!r}")
    return rho


def format_rho(rho: float) -> str:
    """半径的文本形式（文件名与表格使用）：inf 或整数碱基对"""
    if math.isinf(rho):
        return 'inf'
    return str(int(rho)) if float(rho).is_integer() else repr(float(rho))


def radius_mask(snps: Sequence[SnpInfo], disease_loci: Iterable[DiseaseLocus], rho: float) -> np.ndarray:
    """
    J_ρ 的布尔掩码：与最近致病位点同染色体且距离严格小于 ρ 的 SNP

    ρ = ∞ 时包含所有 SNP（不论染色体）
    """
    if math.isinf(rho):
        return np.ones(len(snps), dtype=bool)
    chromosomes = np.array([s.chromosome for s in snps], dtype=object)
    positions = np.array([s.position_bp for s in snps], dtype=np.int64)
    mask = np.zeros(len(snps), dtype=bool)
    for locus in disease_loci:
        mask |= (chromosomes == str(locus.chromosome)) & (np.abs(positions - int(locus.position)) < rho)
    return mask


def max_in_radius(neg_log10_p: np.ndarray, mask: np.ndarray, rho: float) -> RadiusStatistic:
    if not mask.any():
        raise EmptyRadius(f"半径 ρ={format_rho(rho)} 内没有任何 SNP")
    return RadiusStatistic(rho=rho, value=float(np.max(neg_log10_p[mask])))


def s_rho(results: Sequence[TrendTestResult],
          snps: Sequence[SnpInfo],
          disease_loci: Sequence[DiseaseLocus],
          rho: float) -> RadiusStatistic:
    """
    S_ρ = max_{j ∈ J_ρ} -log10 p_j

    Raises:
        DimensionMismatch: results 与 snps 长度不一致
        EmptyRadius: J_ρ 为空
    """
    if len(results) != len(snps):
        raise DimensionMismatch(f"检验结果数 {len(results)} 与 SNP 数 {len(snps)} 不一致")
    scores = np.array([r.neg_log10_p for r in results], dtype=np.float64)
    return max_in_radius(scores, radius_mask(snps, disease_loci, rho), rho)
