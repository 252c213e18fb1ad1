"""
基因型矩阵读写与生成

支持两种输入格式：
- dense-csv: 首行 SNP id、首列个体 id，取值 {0,1,2,NA}；SNP 元数据放在旁路文件
  <stem>.snps.csv（列 snp_id,chromosome,position_bp）
- plink-raw: `plink --recodeA` 输出，空白分隔，前 6 列为 FID IID PAT MAT SEX PHENOTYPE

另外提供 MAF 过滤、玩具数据集、合成两位点数据集以及个体复制。
"""

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    DimensionMismatch,
    DuplicatePositionWarning,
    EmptyAfterFilter,
    EmptyAfterFilterWarning,
    InvalidParameter,
    NotMultipleOf20,
    ParseError,
    UnknownValue,
)
from .file_utils import atomic_write_text

MISSING = -1

GENOTYPE_CODES = {
    '0': 0,
    '1': 1,
    '2': 2,
    'NA': MISSING,
}

PLINK_RAW_HEADER = ['FID', 'IID', 'PAT', 'MAT', 'SEX', 'PHENOTYPE']
METADATA_COLUMNS = ['snp_id', 'chromosome', 'position_bp']
FORMATS = ('dense-csv', 'plink-raw')

SnpRef = Union[str, int]


@dataclass(frozen=True)
class SnpInfo:
    id: str
    chromosome: str
    position_bp: int
    maf: float = 0.0


@dataclass(frozen=True)
class GenotypeMatrix:
    """n x p 基因型矩阵，缺失值记为 MISSING (-1)"""

    values: np.ndarray
    individual_ids: Tuple[str, ...]
    snps: Tuple[SnpInfo, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.int8)
        if values.ndim != 2:
            raise DimensionMismatch(f"基因型矩阵必须是二维的，得到 {values.ndim} 维")
        if values.shape[0] != len(self.individual_ids) or values.shape[1] != len(self.snps):
            raise DimensionMismatch(
                f"矩阵形状 {values.shape} 与 {len(self.individual_ids)} 个个体、{len(self.snps)} 个 SNP 不一致"
            )
        allowed = (values == MISSING) | ((values >= 0) & (values <= 2))
        if not np.all(allowed):
            row, col = np.argwhere(~allowed)[0]
            raise UnknownValue(f"非法基因型取值 {int(values[row, col])}", line=int(row) + 1, column=int(col) + 1)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'individual_ids', tuple(str(i) for i in self.individual_ids))
        object.__setattr__(self, 'snps', tuple(self.snps))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    @property
    def snp_ids(self) -> List[str]:
        return [snp.id for snp in self.snps]

    @property
    def mafs(self) -> np.ndarray:
        return np.array([snp.maf for snp in self.snps], dtype=np.float64)

    def snp_index(self, ref: SnpRef) -> int:
        """按 SNP id 或列下标查找列"""
        if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
            if not 0 <= int(ref) < self.p:
                raise InvalidParameter(f"SNP 下标 {ref} 超出范围 [0, {self.p})")
            return int(ref)
        for idx, snp in enumerate(self.snps):
            if snp.id == ref:
                return idx
        raise InvalidParameter(f"矩阵中不存在 SNP {ref!r}")

    def column(self, ref: SnpRef) -> np.ndarray:
        return self.values[:, self.snp_index(ref)]

    def select_snps(self, indices: Sequence[int]) -> 'GenotypeMatrix':
        indices = list(indices)
        return GenotypeMatrix(
            values=self.values[:, indices],
            individual_ids=self.individual_ids,
            snps=tuple(self.snps[i] for i in indices),
        )


def compute_mafs(values: np.ndarray) -> np.ndarray:
    """逐列计算 MAF = min(f, 1-f)，f 为计数等位基因频率，缺失值不计入分母"""
    values = np.asarray(values)
    observed = values != MISSING
    counts = observed.sum(axis=0)
    allele_sum = np.where(observed, values, 0).sum(axis=0, dtype=np.int64)
    freq = np.divide(allele_sum, 2.0 * counts, out=np.zeros(values.shape[1]), where=counts > 0)
    return np.minimum(freq, 1.0 - freq)


def build_matrix(values: np.ndarray,
                 individual_ids: Sequence[str],
                 snp_ids: Sequence[str],
                 chromosomes: Sequence[str],
                 positions: Sequence[int],
                 sort: bool = True) -> GenotypeMatrix:
    """
    构建 GenotypeMatrix：计算 MAF，并按（染色体首次出现顺序, 位置）稳定排序 SNP

    同一染色体上的重复位置保留，但会发出 DuplicatePositionWarning。
    """
    values = np.asarray(values, dtype=np.int8)
    chromosomes = [str(c) for c in chromosomes]
    positions = [int(p) for p in positions]
    if any(p < 0 for p in positions):
        raise InvalidParameter("SNP 位置必须为非负整数")

    order = list(range(len(snp_ids)))
    if sort:
        chrom_rank: Dict[str, int] = {}
        for chrom in chromosomes:
            chrom_rank.setdefault(chrom, len(chrom_rank))
        order.sort(key=lambda j: (chrom_rank[chromosomes[j]], positions[j]))

    values = values[:, order]
    mafs = compute_mafs(values)
    snps = tuple(
        SnpInfo(id=str(snp_ids[j]), chromosome=chromosomes[j], position_bp=positions[j], maf=float(mafs[k]))
        for k, j in enumerate(order)
    )

    duplicates = [
        (a.chromosome, a.position_bp) for a, b in zip(snps, snps[1:])
        if a.chromosome == b.chromosome and a.position_bp == b.position_bp
    ]
    if duplicates:
        warnings.warn(
            DuplicatePositionWarning(f"{len(duplicates)} 处重复 SNP 位置，例如 {duplicates[0]}"),
            stacklevel=2,
        )

    return GenotypeMatrix(values=values, individual_ids=tuple(individual_ids), snps=snps)


# ===== 解析 =====

def _parser_error(exc: Exception) -> ParseError:
    match = re.search(r'line (\d+)', str(exc))
    line = int(match.group(1)) if match else None
    return ParseError(f"无法解析文件: {exc}", line=line)


def _decode_cells(raw: np.ndarray, first_line: int, first_column: int) -> np.ndarray:
    """把字符串单元格转换为基因型编码；遇到非法取值抛出 UnknownValue（行列号从 1 开始）"""
    values = np.full(raw.shape, -2, dtype=np.int8)
    for token, code in GENOTYPE_CODES.items():
        values[raw == token] = code

    bad = np.argwhere(values == -2)
    if bad.size:
        row, col = bad[0]
        cell = raw[row, col]
        if cell is None or (isinstance(cell, float) and np.isnan(cell)):
            raise DimensionMismatch(f"第 {first_line + row} 行字段数少于表头")
        raise UnknownValue(
            f"未知的基因型取值 {cell!r}（允许 0/1/2/NA）",
            line=int(first_line + row),
            column=int(first_column + col),
        )
    return values


def _read_table(path: Path, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, **kwargs)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise _parser_error(e)


def default_metadata_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.snps.csv")


def _load_metadata(metadata_path: Path, snp_ids: List[str]) -> Tuple[List[str], List[int]]:
    meta = _read_table(metadata_path, skipinitialspace=True)
    if list(meta.columns) != METADATA_COLUMNS:
        raise ParseError(f"元数据表头必须为 {','.join(METADATA_COLUMNS)}，得到 {','.join(meta.columns)}", line=1)
    if meta['snp_id'].duplicated().any():
        raise DimensionMismatch(f"元数据中存在重复的 snp_id: {meta['snp_id'][meta['snp_id'].duplicated()].iloc[0]}")

    meta = meta.set_index('snp_id')
    missing = [s for s in snp_ids if s not in meta.index]
    if missing or len(meta) != len(snp_ids):
        raise DimensionMismatch(
            f"元数据包含 {len(meta)} 个 SNP，矩阵包含 {len(snp_ids)} 个；缺少 {missing[:5]}"
        )

    chromosomes = meta.loc[snp_ids, 'chromosome'].tolist()
    positions = []
    for line_no, value in zip(range(2, len(snp_ids) + 2), meta.loc[snp_ids, 'position_bp']):
        if not str(value).isdigit():
            raise ParseError(f"position_bp 必须为非负整数，得到 {value!r}", line=line_no, column=3)
        positions.append(int(value))
    return chromosomes, positions


def _snp_coordinates(metadata_path: Optional[Path],
                     implicit_path: Optional[Path],
                     snp_ids: List[str]) -> Tuple[List[str], List[int]]:
    """
    显式给出的元数据文件必须存在；只有未指定时才回退到隐式 sidecar，
    两者都没有时使用占位坐标（染色体 '0'，位置 1..p）
    """
    if metadata_path is not None:
        if not metadata_path.exists():
            raise ParseError(f"文件不存在: {metadata_path}")
        return _load_metadata(metadata_path, snp_ids)
    if implicit_path is not None and implicit_path.exists():
        return _load_metadata(implicit_path, snp_ids)
    return ['0'] * len(snp_ids), list(range(1, len(snp_ids) + 1))


def _load_dense_csv(path: Path, metadata_path: Optional[Path]) -> GenotypeMatrix:
    frame = _read_table(path, skipinitialspace=True)
    if frame.shape[1] < 2:
        raise DimensionMismatch("dense-csv 至少需要个体 id 列和一个 SNP 列")

    snp_ids = [str(c).strip() for c in frame.columns[1:]]
    if len(set(snp_ids)) != len(snp_ids):
        raise DimensionMismatch("dense-csv 表头中存在重复的 SNP id")
    individual_ids = frame.iloc[:, 0].tolist()
    values = _decode_cells(frame.iloc[:, 1:].to_numpy(dtype=object), first_line=2, first_column=2)

    chromosomes, positions = _snp_coordinates(metadata_path, default_metadata_path(path), snp_ids)

    return build_matrix(values, individual_ids, snp_ids, chromosomes, positions)


def _load_plink_raw(path: Path, metadata_path: Optional[Path]) -> GenotypeMatrix:
    frame = _read_table(path, sep=r'\s+')
    header = list(frame.columns)
    if header[:6] != PLINK_RAW_HEADER:
        raise ParseError(f"plink-raw 表头前 6 列必须为 {' '.join(PLINK_RAW_HEADER)}", line=1)
    if len(header) < 7:
        raise DimensionMismatch("plink-raw 文件不包含任何 SNP 列")

    # rs1_A -> rs1（去掉计数等位基因后缀）
    snp_ids = [c.rsplit('_', 1)[0] if '_' in c else c for c in header[6:]]
    individual_ids = frame['IID'].tolist()
    values = _decode_cells(frame.iloc[:, 6:].to_numpy(dtype=object), first_line=2, first_column=7)

    chromosomes, positions = _snp_coordinates(metadata_path, None, snp_ids)

    return build_matrix(values, individual_ids, snp_ids, chromosomes, positions)


def load_matrix(path: Union[str, Path],
                fmt: str = 'dense-csv',
                metadata_path: Optional[Union[str, Path]] = None) -> GenotypeMatrix:
    """
    加载并校验基因型矩阵

    Args:
        path: 基因型文件路径
        fmt: 'dense-csv' 或 'plink-raw'
        metadata_path: SNP 元数据文件；dense-csv 默认使用 <stem>.snps.csv

    Returns:
        GenotypeMatrix（SNP 已按染色体内位置排序，MAF 已计算）

    Raises:
        ParseError: 无法解析（带行/列号）
        DimensionMismatch: 维度不一致
        UnknownValue: 出现 {0,1,2,NA} 之外的取值
    """
    path = Path(path)
    if fmt not in FORMATS:
        raise InvalidParameter(f"未知的基因型格式 {fmt!r}，支持 {', '.join(FORMATS)}")
    if not path.exists():
        raise ParseError(f"文件不存在: {path}")
    metadata_path = Path(metadata_path) if metadata_path is not None else None

    if fmt == 'dense-csv':
        return _load_dense_csv(path, metadata_path)
    return _load_plink_raw(path, metadata_path)


def write_matrix(gm: GenotypeMatrix,
                 path: Union[str, Path],
                 metadata_path: Optional[Union[str, Path]] = None) -> Tuple[Path, Path]:
    """以 dense-csv 格式写出矩阵和旁路元数据（原子写入）"""
    path = Path(path)
    metadata_path = Path(metadata_path) if metadata_path is not None else default_metadata_path(path)

    lines = [','.join(['individual_id'] + gm.snp_ids)]
    for ind, row in zip(gm.individual_ids, gm.values):
        lines.append(','.join([ind] + ['NA' if v == MISSING else str(int(v)) for v in row]))
    atomic_write_text(path, '\n'.join(lines) + '\n')

    meta_lines = [','.join(METADATA_COLUMNS)]
    meta_lines += [f"{snp.id},{snp.chromosome},{snp.position_bp}" for snp in gm.snps]
    atomic_write_text(metadata_path, '\n'.join(meta_lines) + '\n')
    return path, metadata_path


# ===== 变换 =====

def filter_maf(gm: GenotypeMatrix, threshold: float, error_if_empty: bool = False) -> GenotypeMatrix:
    """保留 MAF 严格大于 threshold 的 SNP（MAF <= threshold 的被剔除）"""
    if not 0.0 <= threshold <= 0.5:
        raise InvalidParameter(f"MAF 阈值必须位于 [0, 0.5]，得到 {threshold}")
    keep = [j for j, snp in enumerate(gm.snps) if snp.maf > threshold]
    if not keep:
        message = f"MAF > {threshold} 的 SNP 为 0 个（原有 {gm.p} 个）"
        if error_if_empty:
            raise EmptyAfterFilter(message)
        warnings.warn(EmptyAfterFilterWarning(message), stacklevel=2)
    if len(keep) == gm.p:
        return gm
    return gm.select_snps(keep)


def replicate_individuals(gm: GenotypeMatrix, k: int) -> GenotypeMatrix:
    """把所有个体复制 k 份（个体 id 追加 _r1.._rk 后缀），SNP 元数据不变"""
    if int(k) < 1:
        raise InvalidParameter(f"复制倍数 k 必须 >= 1，得到 {k}")
    if k == 1:
        return gm
    ids = tuple(f"{ind}_r{copy + 1}" for copy in range(k) for ind in gm.individual_ids)
    return GenotypeMatrix(values=np.tile(gm.values, (k, 1)), individual_ids=ids, snps=gm.snps)


# ===== 数据生成 =====

TOY_SNP_ID = 'toy_snp'


def make_toy_dataset(n: int) -> GenotypeMatrix:
    """
    玩具数据集：单个 SNP，80% 基因型 0、15% 基因型 1、5% 基因型 2，按基因型排序

    Example:
        >>> make_toy_dataset(20).column(0).tolist().count(1)
        3
    """
    if int(n) < 20 or int(n) % 20 != 0:
        raise NotMultipleOf20(f"n 必须是 20 的正整数倍，得到 {n}")
    n = int(n)
    counts = (n * 16 // 20, n * 3 // 20, n // 20)
    column = np.repeat(np.array([0, 1, 2], dtype=np.int8), counts)
    return build_matrix(
        values=column.reshape(-1, 1),
        individual_ids=[f"ind{i + 1}" for i in range(n)],
        snp_ids=[TOY_SNP_ID],
        chromosomes=['1'],
        positions=[1],
    )


CAUSAL_POSITIONS = (627_641, 1_986_325)
CAUSAL_MAFS = (0.26, 0.23)


def make_synthetic_dataset(n: int = 629,
                           p: int = 8000,
                           seed: int = 2012,
                           chromosome: str = 'X',
                           causal_positions: Sequence[int] = CAUSAL_POSITIONS,
                           causal_mafs: Sequence[float] = CAUSAL_MAFS,
                           start: int = 100_000,
                           spacing: int = 1_000) -> GenotypeMatrix:
    """
    生成合成两位点数据集（独立 SNP 列，Hardy-Weinberg 平衡）

    SNP 大约每 spacing bp 一个（带 ±30% 抖动），离每个致病位点最近的网格 SNP
    被替换为致病 SNP（id 为 causal1, causal2, ...，位置和 MAF 取指定值）。
    其余 SNP 的 MAF 在 (0.05, 0.5) 上均匀抽取。给定 seed 时结果确定。
    """
    if n < 2 or p < len(causal_positions):
        raise InvalidParameter(f"n 必须 >= 2 且 p >= {len(causal_positions)}")
    if len(causal_positions) != len(causal_mafs):
        raise InvalidParameter("causal_positions 与 causal_mafs 长度不一致")

    rng = np.random.default_rng(seed)
    jitter = rng.integers(-(spacing * 3) // 10, (spacing * 3) // 10 + 1, size=p)
    positions = start + np.arange(p, dtype=np.int64) * spacing + jitter
    mafs = rng.uniform(0.05, 0.5, size=p)
    snp_ids = [f"snp{j + 1}" for j in range(p)]

    for k, (pos, maf) in enumerate(zip(causal_positions, causal_mafs)):
        slot = int(round((pos - start) / spacing))
        if not 0 <= slot < p:
            raise InvalidParameter(
                f"致病位点 {pos} 不在网格范围 [{start}, {start + (p - 1) * spacing}] 内，请调整 p 或 spacing"
            )
        positions[slot] = pos
        mafs[slot] = maf
        snp_ids[slot] = f"causal{k + 1}"

    values = rng.binomial(2, mafs, size=(n, p)).astype(np.int8)
    return build_matrix(
        values=values,
        individual_ids=[f"ind{i + 1}" for i in range(n)],
        snp_ids=snp_ids,
        chromosomes=[chromosome] * p,
        positions=positions.tolist(),
    )
