"""
ROC 曲线与 AUC

AUC 使用 Mann-Whitney 估计（平局记 1/2），置信区间采用 DeLong 结构分量方差，
auc ± 1.96·SE 并截断到 [0,1]。
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import EmptySample, InvalidParameter

Z_95 = 1.959963984540054

# (上界, 标签)，区间左开右闭
AUC_BANDS = [
    (0.6, 'fail'),
    (0.7, 'poor'),
    (0.8, 'fair'),
    (0.9, 'good'),
    (1.0, 'excellent'),
]


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    threshold: float


@dataclass(frozen=True)
class RocSummary:
    """
    ROC 汇总

    curve 从 (0,0)（阈值 +inf）开始，到 (1,1) 结束，两个坐标单调不减。
    """

    auc: float
    ci_low: float
    ci_high: float
    se: float
    band: str
    n_h1: int
    n_h0: int
    curve: List[RocPoint] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict:
        return {
            'auc': self.auc,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high,
            'se': self.se,
            'band': self.band,
            'n_h1': self.n_h1,
            'n_h0': self.n_h0,
        }


def auc_band(auc: float) -> str:
    """AUC 定性分级：≤0.6 fail, ≤0.7 poor, ≤0.8 fair, ≤0.9 good, 其余 excellent"""
    if not 0.0 <= auc <= 1.0:
        raise InvalidParameter(f"AUC 必须位于 [0,1]，得到 {auc}")
    for upper, label in AUC_BANDS:
        if auc <= upper:
            return label
    return AUC_BANDS[-1][1]


def _as_sample(values: Sequence[float], name: str) -> np.ndarray:
    sample = np.asarray(values, dtype=np.float64).reshape(-1)
    if sample.size == 0:
        raise EmptySample(f"{name} 样本为空")
    if np.isnan(sample).any():
        raise InvalidParameter(f"{name} 样本包含 NaN")
    return sample


def _sample_variance(values: np.ndarray) -> float:
    return float(np.var(values, ddof=1)) if values.size > 1 else 0.0


def roc_curve(h1: np.ndarray, h0: np.ndarray) -> List[RocPoint]:
    """按合并样本的唯一值从大到小扫描阈值（判为阳性: 统计量 >= 阈值）"""
    thresholds = np.unique(np.concatenate([h1, h0]))[::-1]
    h1_sorted = np.sort(h1)
    h0_sorted = np.sort(h0)
    tpr = (h1.size - np.searchsorted(h1_sorted, thresholds, side='left')) / h1.size
    fpr = (h0.size - np.searchsorted(h0_sorted, thresholds, side='left')) / h0.size

    points = [RocPoint(0.0, 0.0, math.inf)]
    points.extend(RocPoint(float(f), float(t), float(th)) for f, t, th in zip(fpr, tpr, thresholds))
    return points


def trapezoid_area(curve: Sequence[RocPoint]) -> float:
    fpr = np.array([p.fpr for p in curve])
    tpr = np.array([p.tpr for p in curve])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def roc_auc(h1_stats: Sequence[float], h0_stats: Sequence[float]) -> RocSummary:
    """
    由 H1 / H0 两组统计量计算 AUC、DeLong 95% 置信区间与 ROC 曲线

    Args:
        h1_stats: H1 下各重复实验的统计量
        h0_stats: H0 下各重复实验的统计量

    Returns:
        RocSummary

    Raises:
        EmptySample: 任一样本为空

    Example:
        >>> roc_auc([3, 2, 1], [2, 1, 0]).auc
        0.7777777777777778
    """
    h1 = _as_sample(h1_stats, 'H1')
    h0 = _as_sample(h0_stats, 'H0')
    n1, n0 = h1.size, h0.size

    pooled_ranks = rankdata(np.concatenate([h1, h0]))
    rank_h1 = pooled_ranks[:n1]
    rank_h0 = pooled_ranks[n1:]
    auc = (rank_h1.sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0)

    # DeLong 结构分量：V10_i = P(X_i > Y)，V01_j = P(X > Y_j)
    v10 = (rank_h1 - rankdata(h1)) / n0
    v01 = 1.0 - (rank_h0 - rankdata(h0)) / n1
    se = math.sqrt(max(_sample_variance(v10) / n1 + _sample_variance(v01) / n0, 0.0))

    auc = float(min(max(auc, 0.0), 1.0))
    return RocSummary(
        auc=auc,
        ci_low=max(0.0, auc - Z_95 * se),
        ci_high=min(1.0, auc + Z_95 * se),
        se=se,
        band=auc_band(auc),
        n_h1=n1,
        n_h0=n0,
        curve=roc_curve(h1, h0),
    )


def split_half_null_auc(h0_stats: Sequence[float]) -> RocSummary:
    """H0 自检：按重复编号将 H0 统计量对半分，前半为 'H1'，后半为 'H0'"""
    h0 = np.asarray(h0_stats, dtype=np.float64).reshape(-1)
    if h0.size < 2:
        raise EmptySample(f"H0 样本至少需要 2 个值，得到 {h0.size}")
    half = h0.size // 2
    return roc_auc(h0[:half], h0[half:2 * half])


def _format_value(value: float) -> str:
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.12g}'


def curve_to_csv(summary: RocSummary) -> str:
    """导出 ROC 曲线为 CSV（表头 fpr,tpr,threshold）"""
    lines = ['fpr,tpr,threshold']
    lines.extend(
        f'{_format_value(p.fpr)},{_format_value(p.tpr)},{_format_value(p.threshold)}'
        for p in summary.curve
    )
    return '\n'.join(lines) + '\n'
