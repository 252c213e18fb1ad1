"""
确定性随机流派生

每个重复实验的随机流由 (master_seed, 假设, 重复编号) 经 splitmix64 终结函数派生，
与线程调度无关，跨平台逐位一致。
"""

from typing import Union

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF

HYPOTHESIS_TAGS = {
    'H0': 0,
    'H1': 1,
}


def avalanche(x: int) -> int:
    """splitmix64 终结函数（64 位无符号整数运算）"""
    z = (int(x) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _hypothesis_tag(hypothesis: Union[str, int]) -> int:
    if isinstance(hypothesis, str):
        try:
            return HYPOTHESIS_TAGS[hypothesis.upper()]
        except KeyError:
            raise ValueError(f"未知的假设标签: {hypothesis!r}（应为 H0 或 H1）")
    if hypothesis not in (0, 1):
        raise ValueError(f"未知的假设标签: {hypothesis!r}（应为 0 或 1）")
    return int(hypothesis)


def derive_seed(master_seed: int, hypothesis: Union[str, int], replicate_index: int) -> int:
    """
    派生单个重复实验的 64 位种子

    seed = avalanche(master_seed XOR (tag * 2^62 + replicate_index))，tag: H0=0, H1=1

    Example:
        >>> derive_seed(0, 'H0', 0) == avalanche(0)
        True
    """
    tag = _hypothesis_tag(hypothesis)
    mixed = (int(master_seed) & MASK64) ^ ((tag << 62) + int(replicate_index)) & MASK64
    return avalanche(mixed)


def make_stream(master_seed: int, hypothesis: Union[str, int], replicate_index: int) -> np.random.Generator:
    """返回该重复实验专用的 numpy Generator"""
    return np.random.default_rng(derive_seed(master_seed, hypothesis, replicate_index))
