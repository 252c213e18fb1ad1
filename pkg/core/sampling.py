"""
约束条件下的表型采样核心模块

给定每个个体的患病概率 π_i 和病例总数 n1，在约束 C = {sum(Y) = n1} 下
采样二值表型向量。提供四种方法：

- 拒绝采样（独立 Bernoulli，直到满足约束）
- MCMC（病例/对照交换提议的 Metropolis-Hastings）
- 后向精确采样（一次构建 B 表，之后每个样本 O(n)）
- 置换（H0，均匀抽取 n1 个病例）

所有递推都在对数空间进行，log 0 用 LOG_ZERO（-inf）表示。
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import (
    ConstraintInfeasible,
    DegenerateChainWarning,
    InvalidParameter,
    RejectionBudgetExceeded,
)

LOG_ZERO = float('-inf')

# 拒绝采样默认预算: max(10^6, 1000 / P(C))，上限 10^8
REJECTION_MIN_BUDGET = 10 ** 6
REJECTION_MAX_BUDGET = 10 ** 8
REJECTION_BATCH_SIZE = 4096

MCMC_BURN_IN_PER_INDIVIDUAL = 10 ** 5
MCMC_BLOCK_SIZE = 1 << 16

RandomStream = np.random.Generator


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


# ===== 领域类型 =====

@dataclass(frozen=True)
class CaseProbabilityVector:
    """每个个体的患病概率 π_i = P(Y_i = 1 | X_i)"""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if probs.size < 1:
            raise InvalidParameter("π 向量长度必须 >= 1")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0) or np.any(probs > 1.0):
            bad = probs[~((probs >= 0.0) & (probs <= 1.0))]
            raise InvalidParameter(f"π 必须全部位于 [0,1]，发现 {bad[:5].tolist()}")
        object.__setattr__(self, 'probs', _freeze(probs))

    @property
    def n(self) -> int:
        return int(self.probs.size)

    def log_terms(self) -> Tuple[np.ndarray, np.ndarray]:
        """返回 (log π, log(1-π))，0 和 1 映射到 LOG_ZERO"""
        with np.errstate(divide='ignore'):
            return np.log(self.probs), np.log1p(-self.probs)

    def __len__(self) -> int:
        return self.n


ProbabilityLike = Union[CaseProbabilityVector, Sequence[float], np.ndarray]


def as_case_probabilities(pi: ProbabilityLike) -> CaseProbabilityVector:
    if isinstance(pi, CaseProbabilityVector):
        return pi
    return CaseProbabilityVector(np.asarray(pi, dtype=np.float64))


@dataclass(frozen=True)
class CaseCountConstraint:
    """病例数约束 C：n 个个体中恰好 n1 个病例"""

    n1: int
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidParameter(f"n 必须 >= 1，得到 {self.n}")
        if not 0 <= int(self.n1) <= int(self.n):
            raise InvalidParameter(f"需要 0 <= n1 <= n，得到 n1={self.n1}, n={self.n}")
        object.__setattr__(self, 'n1', int(self.n1))
        object.__setattr__(self, 'n', int(self.n))

    @property
    def n0(self) -> int:
        return self.n - self.n1


@dataclass(frozen=True)
class PhenotypeAssignment:
    """长度为 n 的 0/1 表型向量"""

    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.int8).reshape(-1)
        if np.any((y != 0) & (y != 1)):
            raise InvalidParameter("表型只能是 0 或 1")
        object.__setattr__(self, 'y', _freeze(y))

    @property
    def n_cases(self) -> int:
        return int(self.y.sum())

    def prefix_sums(self) -> np.ndarray:
        """Z_i = sum_{j<=i} Y_j（Z_0 = 0）"""
        return np.concatenate(([0], np.cumsum(self.y, dtype=np.int64)))

    def to_bits(self) -> str:
        return ''.join('1' if v else '0' for v in self.y)

    def to_csv(self) -> str:
        return ','.join('1' if v else '0' for v in self.y)


@dataclass(frozen=True)
class ForwardTable:
    """前向量 log F_i(m) = log P(Z_i = m)，形状 (n+1, n1+1)"""

    log_f: np.ndarray
    pi: CaseProbabilityVector
    constraint: CaseCountConstraint

    @property
    def log_prob_constraint(self) -> float:
        return float(self.log_f[self.constraint.n, self.constraint.n1])

    @property
    def prob_constraint(self) -> float:
        return math.exp(self.log_prob_constraint)


@dataclass(frozen=True)
class BackwardTable:
    """后向量 log B_i(m) = log P(C | Z_i = m)，形状 (n+1, n1+1)

    构建后不可变，可以在多个线程间共享，每个采样调用使用自己的随机流。
    """

    log_b: np.ndarray
    pi: CaseProbabilityVector
    constraint: CaseCountConstraint
    log_p: np.ndarray = field(repr=False)

    @property
    def log_prob_constraint(self) -> float:
        return float(self.log_b[0, 0])

    @property
    def prob_constraint(self) -> float:
        return math.exp(self.log_prob_constraint)

    @property
    def feasible(self) -> bool:
        return self.log_prob_constraint > LOG_ZERO

    def require_feasible(self):
        if not self.feasible:
            raise ConstraintInfeasible(
                f"P(C)=0: 无法在 n={self.constraint.n} 个个体中恰好分配 n1={self.constraint.n1} 个病例 "
                f"(π=1 的个体 {int(np.sum(self.pi.probs >= 1.0))} 个, "
                f"π>0 的个体 {int(np.sum(self.pi.probs > 0.0))} 个)"
            )


@dataclass(frozen=True)
class McmcSettings:
    burn_in: int
    thinning: int

    def __post_init__(self):
        if int(self.burn_in) < 1 or int(self.thinning) < 1:
            raise InvalidParameter(f"burn_in 与 thinning 必须 >= 1，得到 {self.burn_in}, {self.thinning}")
        object.__setattr__(self, 'burn_in', int(self.burn_in))
        object.__setattr__(self, 'thinning', int(self.thinning))

    @classmethod
    def default_for(cls, n: int, burn_in: Optional[int] = None, thinning: Optional[int] = None) -> 'McmcSettings':
        """默认 burn-in = 10^5 * n，thinning = n（一次“扫描”长度）"""
        return cls(
            burn_in=burn_in if burn_in is not None else MCMC_BURN_IN_PER_INDIVIDUAL * n,
            thinning=thinning if thinning is not None else n,
        )


@dataclass(frozen=True)
class MultiClassConstraint:
    """K 类分配约束：counts[k] 个个体属于第 k 类，prob_matrix[i, k] 为个体 i 属于 k 类的概率"""

    counts: Tuple[int, ...]
    prob_matrix: np.ndarray

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        matrix = np.array(self.prob_matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise InvalidParameter("prob_matrix 必须是 n x K 矩阵")
        n, k = matrix.shape
        if len(counts) != k or k < 2:
            raise InvalidParameter(f"counts 长度 ({len(counts)}) 必须等于类别数 K={k} 且 K >= 2")
        if any(c < 0 for c in counts) or sum(counts) != n:
            raise InvalidParameter(f"counts 必须非负且总和为 n={n}，得到 {counts}")
        if np.any(matrix < 0.0) or np.any(matrix > 1.0):
            raise InvalidParameter("prob_matrix 的元素必须位于 [0,1]")
        if np.any(np.abs(matrix.sum(axis=1) - 1.0) > 1e-12):
            raise InvalidParameter("prob_matrix 每一行之和必须为 1（误差 1e-12）")
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'prob_matrix', _freeze(matrix))

    @property
    def n(self) -> int:
        return int(self.prob_matrix.shape[0])

    @property
    def k(self) -> int:
        return int(self.prob_matrix.shape[1])


def _check_constraint(pi: CaseProbabilityVector, c: CaseCountConstraint):
    if c.n != pi.n:
        raise InvalidParameter(f"约束的 n={c.n} 与 π 的长度 {pi.n} 不一致")


def _assert_case_count(y: np.ndarray, n1: int):
    total = int(y.sum())
    if total != n1:
        raise AssertionError(f"采样结果病例数 {total} != n1={n1}")


# ===== 表构建 =====

def forward_table(pi: ProbabilityLike, c: CaseCountConstraint) -> ForwardTable:
    """
    计算前向量 F_i(m) = P(Z_i = m)

    递推: F_i(m) = F_{i-1}(m-1) π_i + F_{i-1}(m) (1-π_i)，m > n1 的状态被裁剪。

    Args:
        pi: 患病概率向量
        c: 病例数约束

    Returns:
        ForwardTable，其中 exp(log_f[n, n1]) = P(C)
    """
    pi = as_case_probabilities(pi)
    _check_constraint(pi, c)
    n, n1 = c.n, c.n1
    log_p, log_q = pi.log_terms()

    log_f = np.full((n + 1, n1 + 1), LOG_ZERO)
    log_f[0, 0] = 0.0
    for i in range(1, n + 1):
        prev = log_f[i - 1]
        row = prev + log_q[i - 1]
        if n1 > 0:
            row[1:] = np.logaddexp(row[1:], prev[:-1] + log_p[i - 1])
        log_f[i] = row

    return ForwardTable(log_f=_freeze(log_f), pi=pi, constraint=c)


def backward_table(pi: ProbabilityLike, c: CaseCountConstraint, strict: bool = True) -> BackwardTable:
    """
    计算后向量 B_i(m) = P(C | Z_i = m)

    递推: B_{i-1}(m) = π_i B_i(m+1) + (1-π_i) B_i(m)，起点 B_n(n1) = 1。
    只需构建一次，之后可用于任意多次 sample_backward 调用。

    Args:
        pi: 患病概率向量
        c: 病例数约束
        strict: 为 True 时若 P(C)=0 立即抛出 ConstraintInfeasible；
            为 False 时返回不可行的表，由采样阶段拒绝

    Returns:
        BackwardTable，其中 exp(log_b[0, 0]) = P(C)
    """
    pi = as_case_probabilities(pi)
    _check_constraint(pi, c)
    n, n1 = c.n, c.n1
    log_p, log_q = pi.log_terms()

    log_b = np.full((n + 1, n1 + 1), LOG_ZERO)
    log_b[n, n1] = 0.0
    for i in range(n, 0, -1):
        nxt = log_b[i]
        row = nxt + log_q[i - 1]
        if n1 > 0:
            row[:-1] = np.logaddexp(row[:-1], nxt[1:] + log_p[i - 1])
        log_b[i - 1] = row

    table = BackwardTable(log_b=_freeze(log_b), pi=pi, constraint=c, log_p=_freeze(log_p))
    if strict:
        table.require_feasible()
    return table


# ===== 采样器 =====

def sample_backward(table: BackwardTable, pi: ProbabilityLike, rng: RandomStream) -> PhenotypeAssignment:
    """
    后向精确采样

    依次采样 Y_i，P(Y_i=1 | Z_{i-1}=m, C) = π_i B_i(m+1) / B_{i-1}(m)。
    给定表后每次调用 O(n)。
    """
    table.require_feasible()
    pi = as_case_probabilities(pi)
    if pi is not table.pi and not np.array_equal(pi.probs, table.pi.probs):
        raise InvalidParameter("后向表不是由该 π 向量构建的")

    n, n1 = table.constraint.n, table.constraint.n1
    log_b = table.log_b
    log_p = table.log_p
    u = rng.random(n)
    y = np.zeros(n, dtype=np.int8)

    m = 0
    for i in range(1, n + 1):
        if m == n1:
            # 病例已满，剩余个体只能是对照
            break
        log_num = log_p[i - 1] + log_b[i, m + 1]
        if log_num == LOG_ZERO:
            continue
        if u[i - 1] < math.exp(log_num - log_b[i - 1, m]):
            y[i - 1] = 1
            m += 1

    _assert_case_count(y, n1)
    return PhenotypeAssignment(y)


def default_rejection_budget(log_prob_constraint: float) -> int:
    """max(10^6, 1000 / P(C))，上限 10^8"""
    if log_prob_constraint == LOG_ZERO:
        return REJECTION_MAX_BUDGET
    log_budget = math.log(1000.0) - log_prob_constraint
    if log_budget >= math.log(REJECTION_MAX_BUDGET):
        return REJECTION_MAX_BUDGET
    return max(REJECTION_MIN_BUDGET, int(math.ceil(math.exp(log_budget))))


def sample_rejection(pi: ProbabilityLike,
                     c: CaseCountConstraint,
                     max_attempts: Optional[int] = None,
                     rng: Optional[RandomStream] = None,
                     log_prob_constraint: Optional[float] = None) -> PhenotypeAssignment:
    """
    拒绝采样：独立抽取 Bernoulli(π_i) 向量，直到病例数恰好为 n1

    期望尝试次数为 1/P(C)。抽取按批进行，但尝试次数按逐个向量计数。

    Args:
        pi: 患病概率向量
        c: 病例数约束
        max_attempts: 最大尝试次数，None 时使用 default_rejection_budget
        rng: 随机流
        log_prob_constraint: 已知的 log P(C)，省略时由 forward_table 计算

    Raises:
        RejectionBudgetExceeded: 超出尝试预算（消息中包含 P(C)）
        ConstraintInfeasible: P(C) = 0
    """
    pi = as_case_probabilities(pi)
    _check_constraint(pi, c)
    if rng is None:
        raise InvalidParameter("需要显式提供随机流 rng")
    if log_prob_constraint is None:
        log_prob_constraint = forward_table(pi, c).log_prob_constraint
    if log_prob_constraint == LOG_ZERO:
        raise ConstraintInfeasible(f"P(C)=0，拒绝采样永远不会成功 (n={c.n}, n1={c.n1})")
    if max_attempts is None:
        max_attempts = default_rejection_budget(log_prob_constraint)
    if max_attempts < 1:
        raise InvalidParameter(f"max_attempts 必须 >= 1，得到 {max_attempts}")

    probs = pi.probs
    # 批大小约为两倍期望尝试次数
    if -log_prob_constraint >= math.log(REJECTION_BATCH_SIZE / 2):
        batch = REJECTION_BATCH_SIZE
    else:
        batch = max(8, int(math.ceil(2.0 * math.exp(-log_prob_constraint))))
    attempts = 0
    while attempts < max_attempts:
        size = min(batch, max_attempts - attempts)
        draws = rng.random((size, c.n)) < probs
        hits = np.flatnonzero(draws.sum(axis=1) == c.n1)
        if hits.size:
            y = draws[hits[0]].astype(np.int8)
            _assert_case_count(y, c.n1)
            return PhenotypeAssignment(y)
        attempts += size

    raise RejectionBudgetExceeded(
        max_attempts,
        math.exp(log_prob_constraint),
        log_prob_constraint / math.log(10.0),
    )


def _initial_state(probs: np.ndarray, n1: int, init: Optional[PhenotypeAssignment]) -> np.ndarray:
    forced_one = probs >= 1.0
    forced_zero = probs <= 0.0
    free_idx = np.flatnonzero(~(forced_one | forced_zero))
    n1_free = n1 - int(forced_one.sum())
    if n1_free < 0 or n1_free > free_idx.size:
        raise ConstraintInfeasible(
            f"无法构造满足约束的初始状态: 需要 {n1} 个病例, π=1 的个体 {int(forced_one.sum())} 个, "
            f"可自由分配的个体 {free_idx.size} 个"
        )

    if init is not None:
        y0 = np.array(init.y, dtype=np.int8)
        if y0.size != probs.size or int(y0.sum()) != n1:
            raise ConstraintInfeasible(f"初始状态必须长度为 {probs.size} 且恰好包含 {n1} 个病例")
        if np.any(y0[forced_one] != 1) or np.any(y0[forced_zero] != 0):
            raise ConstraintInfeasible("初始状态与 π=0/π=1 的个体矛盾（概率为 0）")
        return y0

    y0 = forced_one.astype(np.int8)
    # 从 π 最大的自由个体开始
    order = free_idx[np.argsort(-probs[free_idx], kind='stable')]
    y0[order[:n1_free]] = 1
    return y0


def sample_mcmc(pi: ProbabilityLike,
                c: CaseCountConstraint,
                settings: Optional[McmcSettings] = None,
                n_samples: int = 1,
                init: Optional[PhenotypeAssignment] = None,
                rng: Optional[RandomStream] = None) -> List[PhenotypeAssignment]:
    """
    Metropolis-Hastings 采样

    提议: 随机选一个病例 i 和一个对照 j 交换表型，
    以 min(1, α) 接受，α = (1-π_i) π_j / (π_i (1-π_j))。
    π 为 0 或 1 的个体固定为其唯一可能取值，不参与提议。

    丢弃 burn_in 次迭代后，每 thinning 次迭代输出一个样本。
    n1=0、n1=n（或自由个体全部同一状态）时发出 DegenerateChainWarning，
    返回 n_samples 份唯一构型。
    """
    pi = as_case_probabilities(pi)
    _check_constraint(pi, c)
    if rng is None:
        raise InvalidParameter("需要显式提供随机流 rng")
    if n_samples < 1:
        raise InvalidParameter(f"n_samples 必须 >= 1，得到 {n_samples}")
    if settings is None:
        settings = McmcSettings.default_for(c.n)

    probs = pi.probs
    y0 = _initial_state(probs, c.n1, init)
    free = (probs > 0.0) & (probs < 1.0)
    cases = np.flatnonzero(free & (y0 == 1)).tolist()
    controls = np.flatnonzero(free & (y0 == 0)).tolist()

    if not cases or not controls:
        warnings.warn(
            DegenerateChainWarning(
                f"MCMC 链退化 (n={c.n}, n1={c.n1}, 自由病例 {len(cases)}, 自由对照 {len(controls)})，"
                f"返回唯一可能的构型"
            ),
            stacklevel=2,
        )
        return [PhenotypeAssignment(y0) for _ in range(n_samples)]

    with np.errstate(divide='ignore'):
        logit = (np.log(probs) - np.log1p(-probs)).tolist()
    pinned = np.where(free, 0, y0).astype(np.int8)
    n_cases, n_controls = len(cases), len(controls)

    total = settings.burn_in + n_samples * settings.thinning
    next_emit = settings.burn_in + settings.thinning
    samples: List[PhenotypeAssignment] = []

    done = 0
    while done < total:
        block = min(MCMC_BLOCK_SIZE, total - done)
        pick_case = rng.integers(0, n_cases, size=block).tolist()
        pick_control = rng.integers(0, n_controls, size=block).tolist()
        with np.errstate(divide='ignore'):
            log_u = np.log(rng.random(block)).tolist()

        for t in range(block):
            a = pick_case[t]
            b = pick_control[t]
            i = cases[a]
            j = controls[b]
            log_alpha = logit[j] - logit[i]
            if log_alpha >= 0.0 or log_u[t] < log_alpha:
                cases[a] = j
                controls[b] = i

            done += 1
            if done == next_emit:
                y = pinned.copy()
                y[cases] = 1
                _assert_case_count(y, c.n1)
                samples.append(PhenotypeAssignment(y))
                next_emit += settings.thinning

    return samples


def sample_permutation(n: int, n1: int, rng: RandomStream) -> PhenotypeAssignment:
    """H0 采样：在 C(n, n1) 个构型上均匀抽取"""
    c = CaseCountConstraint(n1=n1, n=n)
    y = np.zeros(c.n, dtype=np.int8)
    y[rng.permutation(c.n)[:c.n1]] = 1
    _assert_case_count(y, c.n1)
    return PhenotypeAssignment(y)


# ===== 概率查询 =====

def conditional_marginals(pi: ProbabilityLike,
                          c: CaseCountConstraint,
                          forward: Optional[ForwardTable] = None,
                          backward: Optional[BackwardTable] = None) -> np.ndarray:
    """
    计算 P(Y_i = 1 | C)

    P(Y_i=1 | C) = sum_m F_{i-1}(m) π_i B_i(m+1) / P(C)，结果之和为 n1。
    """
    pi = as_case_probabilities(pi)
    _check_constraint(pi, c)
    fwd = forward if forward is not None else forward_table(pi, c)
    bwd = backward if backward is not None else backward_table(pi, c)
    bwd.require_feasible()

    if c.n1 == 0:
        return np.zeros(c.n)

    log_p, _ = pi.log_terms()
    terms = fwd.log_f[:-1, :-1] + bwd.log_b[1:, 1:] + log_p[:, None]
    with np.errstate(divide='ignore'):
        log_marginals = logsumexp(terms, axis=1) - bwd.log_prob_constraint
    return np.exp(log_marginals)


def log_configuration_probability(pi: ProbabilityLike,
                                  c: CaseCountConstraint,
                                  y: Union[PhenotypeAssignment, Iterable[int]],
                                  table: Optional[BackwardTable] = None) -> float:
    """log P(Y = y | C)；不满足约束的构型返回 LOG_ZERO"""
    pi = as_case_probabilities(pi)
    _check_constraint(pi, c)
    bits = y.y if isinstance(y, PhenotypeAssignment) else np.asarray(list(y), dtype=np.int8)
    if bits.size != c.n or int(bits.sum()) != c.n1:
        return LOG_ZERO
    table = table if table is not None else backward_table(pi, c)
    log_p, log_q = pi.log_terms()
    joint = float(np.sum(np.where(bits == 1, log_p, log_q)))
    if joint == LOG_ZERO:
        return LOG_ZERO
    return joint - table.log_prob_constraint


def format_log10_probability(log10_prob: float, digits: int = 2) -> str:
    """
    由 log10 概率直接格式化科学计数法，极小的 P(C) 不会下溢为 0

    Example:
        >>> format_log10_probability(math.log10(4.5e-3))
        '4.5e-03'
    """
    if log10_prob == LOG_ZERO:
        return '0'
    exponent = math.floor(log10_prob)
    mantissa = round(10.0 ** (log10_prob - exponent), digits - 1)
    if mantissa >= 10.0:
        mantissa /= 10.0
        exponent += 1
    sign = '-' if exponent < 0 else '+'
    return f'{mantissa:.{digits - 1}f}e{sign}{abs(exponent):02d}'


def sample_multiclass(mc: MultiClassConstraint, rng: RandomStream) -> np.ndarray:
    """
    多类别分配（一对其余递推）

    第 k 阶段在尚未分配的个体中选出 counts[k] 个归入第 k 类，
    个体概率为 prob_matrix[i,k] / sum_{l>=k} prob_matrix[i,l]，
    通过 sample_backward 完成；剩余个体归入最后一类。总复杂度 O(n (K-1))。

    Returns:
        长度为 n 的类别标签数组（0..K-1）
    """
    matrix = mc.prob_matrix
    tail = np.cumsum(matrix[:, ::-1], axis=1)[:, ::-1]
    labels = np.full(mc.n, -1, dtype=np.int64)
    remaining = np.arange(mc.n)

    for k in range(mc.k - 1):
        if remaining.size == 0:
            break
        num = matrix[remaining, k]
        den = tail[remaining, k]
        stage_pi = np.divide(num, den, out=np.zeros_like(num), where=den > 0.0)
        # 舍入误差可能让比值略大于 1
        stage_pi = np.minimum(stage_pi, 1.0)

        constraint = CaseCountConstraint(n1=mc.counts[k], n=int(remaining.size))
        table = backward_table(stage_pi, constraint)
        y = sample_backward(table, table.pi, rng).y
        labels[remaining[y == 1]] = k
        remaining = remaining[y == 0]

    last = mc.k - 1
    if np.any(matrix[remaining, last] <= 0.0):
        raise ConstraintInfeasible(f"剩余个体无法归入最后一类 {last}（概率为 0）")
    labels[remaining] = last

    counts = np.bincount(labels, minlength=mc.k)
    if tuple(int(v) for v in counts) != mc.counts:
        raise AssertionError(f"类别计数 {counts.tolist()} != {list(mc.counts)}")
    return labels
