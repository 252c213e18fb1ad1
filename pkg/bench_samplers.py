#!/usr/bin/env python3
"""
Sampler Benchmark

在玩具数据集网格 (n, f0) 上为三种采样算法计时（每格 100 个重复实验，n1 = n/2），
同时给出 P(C)。拒绝采样使用固定的 10^6 次尝试上限，超出预算的格子记为 NA。
"""

import argparse
import math
import sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from colorama import Fore, Style, init

from core.disease_model import SingleSnpModel, evaluate_pi
from core.errors import PhenosimError, RejectionBudgetExceeded
from core.file_utils import atomic_write_text
from core.genotype_io import TOY_SNP_ID, make_toy_dataset
from core.sampling import (
    CaseCountConstraint,
    McmcSettings,
    REJECTION_MIN_BUDGET,
    backward_table,
    format_log10_probability,
    sample_backward,
    sample_mcmc,
    sample_rejection,
)
from core.seeding import make_stream

init(autoreset=True)

# (n, f0)
DEFAULT_GRID: List[Tuple[int, float]] = [
    (20, 0.2),
    (20, 0.1),
    (20, 0.07),
    (20, 0.05),
    (40, 0.2),
    (100, 0.2),
    (100, 0.1),
    (100, 0.01),
]

TOY_RR1 = 1.5
TOY_RR2 = 2.0

NA = 'NA'


@dataclass
class BenchRow:
    n: int
    f0: float
    n1: int
    log10_prob_constraint: float
    table_seconds: float
    backward_seconds: float
    rejection_seconds: Optional[float]
    mcmc_seconds: Optional[float]

    @property
    def prob_constraint(self) -> str:
        return format_log10_probability(self.log10_prob_constraint)

    def to_record(self) -> Dict:
        def seconds(value: Optional[float]):
            return NA if value is None else round(value, 4)

        return {
            'n': self.n,
            'f0': self.f0,
            'n1': self.n1,
            'P(C)': self.prob_constraint,
            'backward_table_s': round(self.table_seconds, 4),
            'backward_s': round(self.backward_seconds, 4),
            'rejection_s': seconds(self.rejection_seconds),
            'mcmc_s': seconds(self.mcmc_seconds),
        }


class SamplerBenchmark:
    """采样算法计时器"""

    def __init__(self,
                 grid: Sequence[Tuple[int, float]] = tuple(DEFAULT_GRID),
                 replicates: int = 100,
                 seed: int = 0,
                 algorithms: Sequence[str] = ('backward', 'rejection', 'mcmc'),
                 rejection_budget: int = REJECTION_MIN_BUDGET,
                 burn_in: Optional[int] = None,
                 debug: bool = False):
        """
        Args:
            grid: (n, f0) 列表，n 必须是 20 的倍数
            replicates: 每格生成的表型向量数
            seed: master seed
            algorithms: 要计时的算法
            rejection_budget: 拒绝采样每个向量的尝试上限
            burn_in: MCMC burn-in（默认 10^5 * n）
            debug: 是否启用调试模式
        """
        self.grid = list(grid)
        self.replicates = replicates
        self.seed = seed
        self.algorithms = tuple(algorithms)
        self.rejection_budget = rejection_budget
        self.burn_in = burn_in
        self.debug = debug
        self.rows: List[BenchRow] = []

    def bench_cell(self, n: int, f0: float) -> BenchRow:
        gm = make_toy_dataset(n)
        pi = evaluate_pi(SingleSnpModel(TOY_SNP_ID, f0, TOY_RR1, TOY_RR2), gm)
        c = CaseCountConstraint(n1=n // 2, n=n)

        started = time.perf_counter()
        table = backward_table(pi, c)
        table_seconds = time.perf_counter() - started

        started = time.perf_counter()
        for r in range(self.replicates):
            sample_backward(table, pi, make_stream(self.seed, 'H1', r))
        backward_seconds = time.perf_counter() - started
        log_pc = table.log_prob_constraint

        rejection_seconds = None
        if 'rejection' in self.algorithms:
            started = time.perf_counter()
            try:
                for r in range(self.replicates):
                    sample_rejection(pi, c, max_attempts=self.rejection_budget,
                                     rng=make_stream(self.seed, 'H1', r), log_prob_constraint=log_pc)
                rejection_seconds = time.perf_counter() - started
            except RejectionBudgetExceeded as e:
                if self.debug:
                    print(f"[DEBUG] n={n}, f0={f0}: {e}", file=sys.stderr)

        mcmc_seconds = None
        if 'mcmc' in self.algorithms:
            settings = McmcSettings.default_for(n, burn_in=self.burn_in)
            started = time.perf_counter()
            sample_mcmc(pi, c, settings=settings, n_samples=self.replicates, rng=make_stream(self.seed, 'H1', 0))
            mcmc_seconds = time.perf_counter() - started

        return BenchRow(
            n=n,
            f0=f0,
            n1=c.n1,
            log10_prob_constraint=log_pc / math.log(10.0),
            table_seconds=table_seconds,
            backward_seconds=backward_seconds,
            rejection_seconds=rejection_seconds,
            mcmc_seconds=mcmc_seconds,
        )

    def run(self, verbose: bool = True) -> List[BenchRow]:
        for n, f0 in self.grid:
            if verbose:
                print(f"  测试 n={n}, f0={f0} ...", file=sys.stderr)
            self.rows.append(self.bench_cell(n, f0))
        return self.rows

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.to_record() for row in self.rows])

    def format_table(self) -> str:
        return self.to_frame().to_string(index=False)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description='在玩具网格上为后向 / 拒绝 / MCMC 采样计时',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:

  python3 bench_samplers.py
  python3 bench_samplers.py --replicates 20 --burn-in 10000 -o bench.csv

拒绝采样预算:
  默认每个向量最多尝试 10^6 次，是固定上限，不随 P(C) 放大；功效实验和 sample
  子命令使用的是 max(10^6, 1000/P(C))。因此 n=20, f0<=0.07 以及 n=100 的各行会记为 NA。
  需要这些格子的时间时用 --rejection-budget 放宽上限。

列说明:
  backward_table_s  构建后向表的时间
  backward_s        建表之后生成全部向量的时间（不含建表）
        """
    )
    parser.add_argument('--replicates', type=int, default=100, help='每格生成的向量数（默认 100）')
    parser.add_argument('--seed', type=int, default=0, help='master seed')
    parser.add_argument('--rejection-budget', type=int, default=REJECTION_MIN_BUDGET,
                        help=f'拒绝采样每个向量的尝试上限（默认固定为 {REJECTION_MIN_BUDGET}，低于 max(10^6, 1000/P(C))）')
    parser.add_argument('--burn-in', type=int, help='MCMC burn-in（默认 10^5 * n）')
    parser.add_argument('-o', '--output', help='同时写出 CSV')
    parser.add_argument('--debug', action='store_true', help='启用调试模式')
    args = parser.parse_args(argv)

    bench = SamplerBenchmark(replicates=args.replicates, seed=args.seed,
                             rejection_budget=args.rejection_budget, burn_in=args.burn_in, debug=args.debug)
    try:
        bench.run()
    except KeyboardInterrupt:
        print(f"\n\n{Fore.YELLOW}用户中断{Style.RESET_ALL}", file=sys.stderr)
        return 1
    except PhenosimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1

    print(bench.format_table())
    if args.output:
        atomic_write_text(args.output, bench.to_frame().to_csv(index=False, lineterminator='\n'))
        print(f"{Fore.GREEN}✓{Style.RESET_ALL} 结果已保存到: {args.output}", file=sys.stderr)
    return 0


if __name__ == '__main__':
    sys.exit(main())
