#!/usr/bin/env python3
"""
phenosim - 约束病例/对照表型模拟工具，统一 CLI 入口
支持 Windows/macOS/Linux 跨平台

子命令：
- sample: 在病例数约束下采样表型向量
- prob: 计算 P(C) 与 log10 P(C)
- marginals: 计算条件边际 P(Y_i=1 | C)
- power: 运行功效实验（H1 vs H0，ROC/AUC）
- bench: 采样算法计时网格
- toygen: 写出玩具基因型数据集
- check-env: 检查环境依赖

退出码：0 成功，1 数据错误（stderr 输出错误类名），2 用法错误
"""

import argparse
import math
import os
import sys
from typing import List, Optional

import numpy as np
import pandas as pd
from colorama import Fore, Style, init

from core.association import format_rho
from core.environment import EnvironmentChecker
from core.errors import InvalidParameter, ParseError, PhenosimError
from core.file_utils import atomic_write_text, get_timestamped_name
from core.genotype_io import make_toy_dataset, write_matrix
from core.sampling import (
    CaseCountConstraint,
    CaseProbabilityVector,
    McmcSettings,
    backward_table,
    conditional_marginals,
    format_log10_probability,
    forward_table,
    sample_backward,
    sample_mcmc,
    sample_permutation,
    sample_rejection,
)
from core.seeding import make_stream

init(autoreset=True)  # Windows 兼容初始化

SAMPLE_ALGORITHMS = ('backward', 'rejection', 'mcmc', 'permutation')


def parse_pi(text: str) -> CaseProbabilityVector:
    """
    解析 π：已存在的文件（每行一个概率），或内联写法 "v1xk1,v2xk2,..."

    Example:
        >>> parse_pi('0.2x16,0.3x3,0.4x1').n
        20
    """
    if os.path.isfile(text):
        try:
            frame = pd.read_csv(text, header=None, comment='#', skip_blank_lines=True, dtype=float)
        except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ParseError(f"无法解析 π 文件 {text}: {e}")
        if frame.shape[1] != 1:
            raise ParseError(f"π 文件每行只能有一个概率，发现 {frame.shape[1]} 列")
        return CaseProbabilityVector(frame[0].to_numpy())

    values: List[float] = []
    for token in text.split(','):
        token = token.strip()
        if not token:
            continue
        value, _, count = token.partition('x')
        try:
            repeat = int(count) if count else 1
            values.extend([float(value)] * repeat)
        except ValueError:
            raise InvalidParameter(f"无法解析 π 片段 {token!r}（应为 0.2 或 0.2x16），也不存在同名文件")
        if repeat < 1:
            raise InvalidParameter(f"π 片段 {token!r} 的重复次数必须 >= 1")
    return CaseProbabilityVector(np.array(values))


def _emit(text: str, output: Optional[str]):
    if output:
        atomic_write_text(output, text)
        print(f"{Fore.GREEN}✓{Style.RESET_ALL} 结果已保存到: {output}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='phenosim_cli.py',
        description='phenosim - 约束病例/对照表型模拟与功效分析',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
示例:
  # P(C) 与 log10 P(C)
  python phenosim_cli.py prob --pi 0.2x16,0.3x3,0.4x1 --n1 10

  # 采样 5 个表型向量（后向精确采样）
  python phenosim_cli.py sample --pi 0.2x16,0.3x3,0.4x1 --n1 10 --n-samples 5 --seed 7

  # 条件边际
  python phenosim_cli.py marginals --pi pi.txt --n1 10

  # 功效实验
  python phenosim_cli.py power --config toy_power_config.json --out results/ --plot

  # 采样算法计时
  python phenosim_cli.py bench --replicates 100

  # 写出玩具数据集
  python phenosim_cli.py toygen --n 40 -o toy40.csv

  # 检查环境（可同时校验实验配置）
  python phenosim_cli.py check-env
  python phenosim_cli.py check-env --config toy_power_config.json
        '''
    )
    subparsers = parser.add_subparsers(dest='command', help='子命令')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--debug', action='store_true', help='调试模式（出错时打印 traceback）')

    def add_constraint_args(sub: argparse.ArgumentParser):
        sub.add_argument('--pi', required=True,
                         help='患病概率：文件（每行一个）或内联 "0.2x16,0.3x3,0.4x1"')
        sub.add_argument('--n1', type=int, required=True, help='病例数')

    # ===== sample 子命令 =====
    sample_parser = subparsers.add_parser('sample', parents=[common], help='在约束下采样表型向量')
    add_constraint_args(sample_parser)
    sample_parser.add_argument('--algorithm', choices=SAMPLE_ALGORITHMS, default='backward',
                               help='采样算法（默认: backward）')
    sample_parser.add_argument('--n-samples', type=int, default=1, help='向量个数（默认: 1）')
    sample_parser.add_argument('--seed', type=int, default=0, help='master seed（默认: 0）')
    sample_parser.add_argument('--format', choices=('bits', 'csv'), default='bits',
                               help='输出格式: bits 为 0/1 字符串, csv 为逗号分隔（默认: bits）')
    sample_parser.add_argument('--burn-in', type=int, help='MCMC burn-in（默认 10^5 * n）')
    sample_parser.add_argument('--thinning', type=int, help='MCMC 抽稀间隔（默认 n）')
    sample_parser.add_argument('--max-attempts', type=int, help='拒绝采样尝试上限（默认 max(10^6, 1000/P(C))）')
    sample_parser.add_argument('-o', '--output', help='输出文件（默认: 标准输出）')

    # ===== prob 子命令 =====
    prob_parser = subparsers.add_parser('prob', parents=[common], help='计算 P(C) 与 log10 P(C)')
    add_constraint_args(prob_parser)

    # ===== marginals 子命令 =====
    marginals_parser = subparsers.add_parser('marginals', parents=[common], help='计算条件边际 P(Y_i=1 | C)')
    add_constraint_args(marginals_parser)
    marginals_parser.add_argument('-o', '--output', help='输出 CSV 文件（默认: 标准输出）')

    # ===== power 子命令 =====
    power_parser = subparsers.add_parser('power', parents=[common], help='运行功效实验')
    power_parser.add_argument('--config', required=True, help='实验配置 JSON')
    power_parser.add_argument('--out', help='输出目录（默认: power_study_YYYYMMDD_HHMMSS）')
    power_parser.add_argument('--threads', type=int, help='工作线程数上限')
    power_parser.add_argument('--seed', type=int, help='覆盖配置中的 master_seed')
    power_parser.add_argument('--keep-going', action='store_true', default=None,
                              help='重复实验出错时继续，失败列在 summary.json 中')
    power_parser.add_argument('--plot', action='store_true', help='同时输出 roc_<rho>.svg')
    power_parser.add_argument('--quiet', action='store_true', help='不打印进度')

    # ===== bench 子命令 =====
    bench_parser = subparsers.add_parser('bench', parents=[common], help='采样算法计时网格')
    bench_parser.add_argument('--replicates', type=int, default=100, help='每格向量数（默认: 100）')
    bench_parser.add_argument('--seed', type=int, default=0, help='master seed（默认: 0）')
    bench_parser.add_argument('--rejection-budget', type=int,
                              help='拒绝采样每个向量的尝试上限（默认固定为 10^6，低于 max(10^6, 1000/P(C))，小 P(C) 的格子记为 NA）')
    bench_parser.add_argument('--burn-in', type=int, help='MCMC burn-in（默认 10^5 * n）')
    bench_parser.add_argument('-o', '--output', help='同时写出 CSV')

    # ===== toygen 子命令 =====
    toygen_parser = subparsers.add_parser('toygen', parents=[common], help='写出玩具基因型数据集（dense-csv）')
    toygen_parser.add_argument('--n', type=int, default=20, help='个体数，必须是 20 的倍数（默认: 20）')
    toygen_parser.add_argument('-o', '--output', required=True, help='输出文件（另写 <stem>.snps.csv）')

    # ===== check-env 子命令 =====
    env_parser = subparsers.add_parser('check-env', parents=[common], help='检查环境依赖')
    env_parser.add_argument('-c', '--config', help='同时检查一个功效实验配置文件')

    return parser


def handle_sample_command(args) -> int:
    """处理 sample 子命令"""
    pi = parse_pi(args.pi)
    c = CaseCountConstraint(n1=args.n1, n=pi.n)
    if args.n_samples < 1:
        raise InvalidParameter(f"--n-samples 必须 >= 1，得到 {args.n_samples}")

    if args.algorithm == 'backward':
        table = backward_table(pi, c)
        samples = [sample_backward(table, pi, make_stream(args.seed, 'H1', k)) for k in range(args.n_samples)]
    elif args.algorithm == 'rejection':
        log_pc = forward_table(pi, c).log_prob_constraint
        samples = [
            sample_rejection(pi, c, max_attempts=args.max_attempts, rng=make_stream(args.seed, 'H1', k),
                             log_prob_constraint=log_pc)
            for k in range(args.n_samples)
        ]
    elif args.algorithm == 'mcmc':
        settings = McmcSettings.default_for(c.n, burn_in=args.burn_in, thinning=args.thinning)
        samples = sample_mcmc(pi, c, settings=settings, n_samples=args.n_samples,
                              rng=make_stream(args.seed, 'H1', 0))
    else:
        samples = [sample_permutation(c.n, c.n1, make_stream(args.seed, 'H0', k)) for k in range(args.n_samples)]

    lines = [s.to_bits() if args.format == 'bits' else s.to_csv() for s in samples]
    _emit('\n'.join(lines) + '\n', args.output)
    return 0


def handle_prob_command(args) -> int:
    """处理 prob 子命令"""
    pi = parse_pi(args.pi)
    table = forward_table(pi, CaseCountConstraint(n1=args.n1, n=pi.n))
    log10_pc = table.log_prob_constraint / math.log(10.0)
    log10_text = '-inf' if math.isinf(log10_pc) else f'{log10_pc:.6f}'
    sys.stdout.write(f"P(C)={format_log10_probability(log10_pc)}\n")
    sys.stdout.write(f"log10 P(C)={log10_text}\n")
    return 0


def handle_marginals_command(args) -> int:
    """处理 marginals 子命令"""
    pi = parse_pi(args.pi)
    marginals = conditional_marginals(pi, CaseCountConstraint(n1=args.n1, n=pi.n))
    lines = ['individual,marginal']
    lines.extend(f'{i + 1},{value:.12g}' for i, value in enumerate(marginals))
    _emit('\n'.join(lines) + '\n', args.output)
    return 0


def handle_power_command(args) -> int:
    """处理 power 子命令"""
    from dataclasses import replace

    from power_study import ExperimentConfig, PowerStudy

    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    study = PowerStudy(config, threads=args.threads, keep_going=args.keep_going,
                       debug=args.debug, verbose=not args.quiet)
    report = study.run()
    if not args.quiet:
        study.print_summary(report)
    report.save(args.out or get_timestamped_name('power_study'), plot=args.plot, verbose=not args.quiet)
    return 0


def handle_bench_command(args) -> int:
    """处理 bench 子命令"""
    from bench_samplers import SamplerBenchmark

    options = {}
    if args.rejection_budget is not None:
        options['rejection_budget'] = args.rejection_budget
    bench = SamplerBenchmark(replicates=args.replicates, seed=args.seed, burn_in=args.burn_in,
                             debug=args.debug, **options)
    bench.run()
    sys.stdout.write(bench.format_table() + '\n')
    if args.output:
        atomic_write_text(args.output, bench.to_frame().to_csv(index=False, lineterminator='\n'))
    return 0


def handle_toygen_command(args) -> int:
    """处理 toygen 子命令"""
    gm = make_toy_dataset(args.n)
    matrix_path, metadata_path = write_matrix(gm, args.output)
    print(f"{Fore.GREEN}✓{Style.RESET_ALL} 玩具数据集已写出: {matrix_path}（元数据 {metadata_path}）",
          file=sys.stderr)
    return 0


def handle_check_env_command(args) -> int:
    """处理 check-env 子命令"""
    print(f"{Fore.BLUE}╔════════════════════════════════════════╗{Style.RESET_ALL}")
    print(f"{Fore.BLUE}║  环境依赖检查工具                      ║{Style.RESET_ALL}")
    print(f"{Fore.BLUE}╚════════════════════════════════════════╝{Style.RESET_ALL}\n")

    checker = EnvironmentChecker()
    print(f"{Fore.CYAN}检测到运行环境: {Fore.GREEN}{checker.detect_environment()}{Style.RESET_ALL}\n")
    print(f"{Fore.CYAN}检查必需依赖...{Style.RESET_ALL}")

    if not checker.run_all_checks(show_instructions=True):
        print(f"{Fore.RED}✗ 部分依赖缺失，请按照上述指令安装{Style.RESET_ALL}\n")
        return 1
    print(f"{Fore.GREEN}✓ 所有依赖检查通过！{Style.RESET_ALL}\n")

    if args.config and not check_experiment_config(checker, args.config):
        return 1
    return 0


def check_experiment_config(checker: EnvironmentChecker, config_path: str) -> bool:
    """检查配置文件：先确认文件和 JSON 合法，再走一遍实验配置校验"""
    from power_study import ExperimentConfig

    print(f"{Fore.CYAN}检查配置文件...{Style.RESET_ALL}")
    ok, error = checker.check_config_file(config_path)
    if ok:
        try:
            config = ExperimentConfig.from_file(config_path)
        except PhenosimError as e:
            ok, error = False, str(e)
    if not ok:
        print(f"  {Fore.RED}✗{Style.RESET_ALL} {config_path}: {error}\n")
        return False

    rhos = ', '.join(format_rho(rho) for rho in config.rhos)
    print(f"  {Fore.GREEN}✓{Style.RESET_ALL} 配置文件有效: {config_path}")
    print(f"  {Fore.GREEN}✓{Style.RESET_ALL} 算法: {config.algorithm}，每个假设 {config.replicates} 次重复")
    print(f"  {Fore.GREEN}✓{Style.RESET_ALL} 半径: {rhos}\n")
    return True


HANDLERS = {
    'sample': handle_sample_command,
    'prob': handle_prob_command,
    'marginals': handle_marginals_command,
    'power': handle_power_command,
    'bench': handle_bench_command,
    'toygen': handle_toygen_command,
    'check-env': handle_check_env_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help(sys.stderr)
        return 2

    try:
        return HANDLERS[args.command](args)
    except KeyboardInterrupt:
        print(f"\n{Fore.YELLOW}用户中断{Style.RESET_ALL}", file=sys.stderr)
        return 1
    except (PhenosimError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == '__main__':
    sys.exit(main())
