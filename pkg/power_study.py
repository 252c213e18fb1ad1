#!/usr/bin/env python3
"""
Case/Control Power Study Runner

在固定基因型上模拟 H1（疾病模型 + 约束采样）与 H0（置换）表型，
对每个重复实验计算全部 SNP 的趋势检验与各半径的 S_ρ，
最后用 ROC / AUC 总结检验功效。

给定 master_seed 时结果与线程数无关：每个重复实验使用独立派生的随机流，
结果按重复编号排序后输出。
"""

import argparse
import copy
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from colorama import Fore, Style, init

from core import __version__
from core.association import (
    DiseaseLocus,
    TrendTestPanel,
    format_rho,
    max_in_radius,
    parse_rho,
    radius_mask,
)
from core.disease_model import evaluate_pi, load_covariates, model_from_dict, null_model
from core.errors import ConfigError, InvalidParameter, PartialFailure, PhenosimError
from core.file_utils import atomic_write_json, atomic_write_text, get_timestamped_name
from core.genotype_io import (
    FORMATS,
    GenotypeMatrix,
    filter_maf,
    load_matrix,
    make_synthetic_dataset,
    make_toy_dataset,
    replicate_individuals,
)
from core.roc_analysis import RocSummary, curve_to_csv, roc_auc, split_half_null_auc
from core.sampling import (
    CaseCountConstraint,
    CaseProbabilityVector,
    McmcSettings,
    PhenotypeAssignment,
    backward_table,
    forward_table,
    sample_backward,
    sample_mcmc,
    sample_permutation,
    sample_rejection,
)
from core.seeding import make_stream

init(autoreset=True)

ALGORITHMS = ('backward', 'mcmc', 'rejection')
HYPOTHESES = ('H1', 'H0')
DEFAULT_REPLICATES = 1000

_TOP_LEVEL_KEYS = {
    'genotypes', 'model', 'missing_policy', 'covariates', 'n1', 'statistic', 'replicates',
    'algorithm', 'master_seed', 'replication_factor', 'maf_threshold', 'threads', 'keep_going',
}
_GENOTYPE_KEYS = {'path', 'format', 'metadata', 'toy', 'synthetic'}
_SYNTHETIC_KEYS = {'n', 'p', 'seed', 'chromosome', 'causal_positions', 'causal_mafs', 'start', 'spacing'}
_STATISTIC_KEYS = {'rho', 'disease_loci'}
_LOCUS_KEYS = {'chromosome', 'position'}
_ALGORITHM_KEYS = {'name', 'burn_in', 'thinning', 'max_attempts'}


def _reject_unknown(block: Mapping[str, Any], allowed: set, where: str):
    if not isinstance(block, Mapping):
        raise ConfigError(f"{where} 必须是一个对象")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"{where} 中存在未知字段: {sorted(unknown)}")


def load_config_file(config_path: Union[str, Path]) -> Dict:
    """
    读取 JSON 实验配置

    Raises:
        ConfigError: 文件不存在或不是合法 JSON
    """
    if not os.path.exists(config_path):
        raise ConfigError(f"配置文件不存在: {config_path}")
    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"无法解析配置文件 {config_path}: {e}")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    功效实验配置（JSON 文档，未知字段一律拒绝）

    n1 可以写成整数，或写成 "half" 表示复制后个体数的一半。
    """

    genotypes: Dict[str, Any]
    model: Dict[str, Any]
    n1: Union[int, str]
    rhos: Tuple[float, ...] = (math.inf,)
    disease_loci: Optional[Tuple[DiseaseLocus, ...]] = None
    replicates: int = DEFAULT_REPLICATES
    algorithm: str = 'backward'
    burn_in: Optional[int] = None
    thinning: Optional[int] = None
    max_attempts: Optional[int] = None
    master_seed: int = 0
    replication_factor: int = 1
    maf_threshold: Optional[float] = None
    missing_policy: str = 'error'
    covariates: Optional[str] = None
    threads: Optional[int] = None
    keep_going: bool = False
    base_dir: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"未知的采样算法 {self.algorithm!r}，支持 {', '.join(ALGORITHMS)}")
        if int(self.replicates) < 2:
            raise ConfigError(f"replicates 必须 >= 2，得到 {self.replicates}")
        if int(self.replication_factor) < 1:
            raise ConfigError(f"replication_factor 必须 >= 1，得到 {self.replication_factor}")
        if not self.rhos:
            raise ConfigError("statistic.rho 至少需要一个半径")
        if isinstance(self.n1, str) and self.n1 != 'half':
            raise ConfigError(f"n1 必须是整数或 \"half\"，得到 {self.n1!r}")
        if not isinstance(self.n1, str) and int(self.n1) < 0:
            raise ConfigError(f"n1 必须 >= 0，得到 {self.n1}")
        if self.maf_threshold is not None and not 0.0 <= float(self.maf_threshold) <= 0.5:
            raise ConfigError(f"maf_threshold 必须位于 [0, 0.5]，得到 {self.maf_threshold}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError(f"master_seed 必须是 64 位无符号整数，得到 {self.master_seed}")
        if self.threads is not None and int(self.threads) < 1:
            raise ConfigError(f"threads 必须 >= 1，得到 {self.threads}")
        sources = [key for key in ('path', 'toy', 'synthetic') if key in self.genotypes]
        if len(sources) != 1:
            raise ConfigError("genotypes 必须且只能包含 path / toy / synthetic 之一")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Optional[Union[str, Path]] = None) -> 'ExperimentConfig':
        _reject_unknown(data, _TOP_LEVEL_KEYS, '配置')
        for key in ('genotypes', 'model', 'n1'):
            if key not in data:
                raise ConfigError(f"配置缺少必填字段 {key!r}")

        genotypes = dict(data['genotypes'])
        _reject_unknown(genotypes, _GENOTYPE_KEYS, 'genotypes')
        if 'format' in genotypes and genotypes['format'] not in FORMATS:
            raise ConfigError(f"未知的基因型格式 {genotypes['format']!r}，支持 {', '.join(FORMATS)}")
        if 'toy' in genotypes:
            _reject_unknown(genotypes['toy'], {'n'}, 'genotypes.toy')
        if 'synthetic' in genotypes:
            _reject_unknown(genotypes['synthetic'], _SYNTHETIC_KEYS, 'genotypes.synthetic')

        model_block = dict(data['model'])
        model_from_dict(model_block)

        statistic = data.get('statistic', {})
        _reject_unknown(statistic, _STATISTIC_KEYS, 'statistic')
        try:
            rhos = tuple(parse_rho(value) for value in statistic.get('rho', ['inf']))
        except InvalidParameter as e:
            raise ConfigError(f"statistic.rho 无效: {e}")
        loci = None
        if statistic.get('disease_loci') is not None:
            for locus in statistic['disease_loci']:
                _reject_unknown(locus, _LOCUS_KEYS, 'statistic.disease_loci[]')
            loci = tuple(
                DiseaseLocus(chromosome=str(locus['chromosome']), position=int(locus['position']))
                for locus in statistic['disease_loci']
            )

        algorithm = data.get('algorithm', {'name': 'backward'})
        if isinstance(algorithm, str):
            algorithm = {'name': algorithm}
        _reject_unknown(algorithm, _ALGORITHM_KEYS, 'algorithm')

        try:
            return cls(
                genotypes=genotypes,
                model=model_block,
                n1=data['n1'] if data['n1'] == 'half' else int(data['n1']),
                rhos=rhos,
                disease_loci=loci,
                replicates=int(data.get('replicates', DEFAULT_REPLICATES)),
                algorithm=algorithm.get('name', 'backward'),
                burn_in=algorithm.get('burn_in'),
                thinning=algorithm.get('thinning'),
                max_attempts=algorithm.get('max_attempts'),
                master_seed=int(data.get('master_seed', 0)),
                replication_factor=int(data.get('replication_factor', 1)),
                maf_threshold=data.get('maf_threshold'),
                missing_policy=data.get('missing_policy', 'error'),
                covariates=data.get('covariates'),
                threads=data.get('threads'),
                keep_going=bool(data.get('keep_going', False)),
                base_dir=str(base_dir) if base_dir is not None else None,
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, PhenosimError):
                raise
            raise ConfigError(f"配置字段类型错误: {e}")

    @classmethod
    def from_file(cls, config_path: Union[str, Path]) -> 'ExperimentConfig':
        data = load_config_file(config_path)
        return cls.from_dict(data, base_dir=Path(config_path).resolve().parent)

    def to_dict(self) -> Dict[str, Any]:
        """配置回显（写入 summary.json 的 provenance）"""
        algorithm = {'name': self.algorithm}
        for key in ('burn_in', 'thinning', 'max_attempts'):
            if getattr(self, key) is not None:
                algorithm[key] = getattr(self, key)
        statistic: Dict[str, Any] = {'rho': [format_rho(rho) for rho in self.rhos]}
        if self.disease_loci is not None:
            statistic['disease_loci'] = [
                {'chromosome': locus.chromosome, 'position': locus.position} for locus in self.disease_loci
            ]
        data = {
            'genotypes': copy.deepcopy(self.genotypes),
            'model': copy.deepcopy(self.model),
            'missing_policy': self.missing_policy,
            'n1': self.n1,
            'statistic': statistic,
            'replicates': self.replicates,
            'algorithm': algorithm,
            'master_seed': self.master_seed,
            'replication_factor': self.replication_factor,
            'maf_threshold': self.maf_threshold,
            'keep_going': self.keep_going,
        }
        if self.covariates is not None:
            data['covariates'] = self.covariates
        if self.threads is not None:
            data['threads'] = self.threads
        return data

    def with_override(self, dotted_key: str, value: Any) -> 'ExperimentConfig':
        """
        返回修改了一个字段的新配置，如 with_override('model.beta', 0.2)

        修改后重新走一遍 from_dict 校验。
        """
        data = self.to_dict()
        node = data
        parts = dotted_key.split('.')
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"无法覆盖 {dotted_key!r}: {part!r} 不是配置中的对象")
            node = node[part]
        node[parts[-1]] = value
        return ExperimentConfig.from_dict(data, base_dir=self.base_dir)

    def resolve_path(self, value: str) -> Path:
        path = Path(value)
        if not path.is_absolute() and self.base_dir is not None:
            path = Path(self.base_dir) / path
        return path


@dataclass
class PowerReport:
    """一次功效实验的全部输出"""

    config: ExperimentConfig
    statistics: pd.DataFrame
    summaries: Dict[float, RocSummary]
    null_checks: Dict[float, RocSummary]
    timings: Dict[str, float]
    provenance: Dict[str, Any]
    failures: List[Tuple[str, int, str]] = field(default_factory=list)

    def values(self, hypothesis: str, rho: float) -> np.ndarray:
        """某假设、某半径下按重复编号排序的 S_ρ"""
        frame = self.statistics
        rows = frame[(frame['hypothesis'] == hypothesis) & (frame['rho'] == format_rho(rho))]
        return rows.sort_values('replicate')['s_rho'].to_numpy(dtype=np.float64)

    def summary_dict(self) -> Dict[str, Any]:
        results = {}
        for rho, summary in self.summaries.items():
            entry = summary.to_dict()
            if rho in self.null_checks:
                entry['null_split_half'] = self.null_checks[rho].to_dict()
            results[format_rho(rho)] = entry
        return {
            'results': results,
            'replicates': {hyp: int((self.statistics['hypothesis'] == hyp).sum() // len(self.summaries))
                           for hyp in HYPOTHESES},
            'failures': [{'hypothesis': h, 'replicate': r, 'error': msg} for h, r, msg in self.failures],
            'timings': self.timings,
            'provenance': self.provenance,
        }

    def replicates_csv(self) -> str:
        return self.statistics.to_csv(index=False, float_format='%.17g', lineterminator='\n')

    def save(self, out_dir: Union[str, Path], plot: bool = False, verbose: bool = True) -> Dict[str, Path]:
        """
        写出 replicates.csv、summary.json，以及每个半径的 roc_<rho>.csv（plot=True 时另有 .svg）

        Returns:
            {名称: 路径}
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = {
            'replicates': atomic_write_text(out_dir / 'replicates.csv', self.replicates_csv()),
            'summary': atomic_write_json(out_dir / 'summary.json', self.summary_dict()),
        }
        visualizer = None
        if plot:
            from roc_visualizer import RocVisualizer
            visualizer = RocVisualizer()
        for rho, summary in self.summaries.items():
            label = format_rho(rho)
            written[f'roc_{label}'] = atomic_write_text(out_dir / f'roc_{label}.csv', curve_to_csv(summary))
            if visualizer is not None:
                written[f'svg_{label}'] = visualizer.save_svg(summary, out_dir / f'roc_{label}.svg',
                                                              title=f'S_rho, rho={label}')
        if verbose:
            print(f"{Fore.GREEN}✓{Style.RESET_ALL} 结果已保存到: {out_dir}")
        return written


class PowerStudy:
    """功效实验引擎"""

    def __init__(self,
                 config: ExperimentConfig,
                 threads: Optional[int] = None,
                 keep_going: Optional[bool] = None,
                 debug: bool = False,
                 verbose: bool = True):
        """
        初始化实验

        Args:
            config: 实验配置
            threads: 工作线程数（覆盖配置，默认 min(8, CPU 数)）
            keep_going: 重复实验出错时是否继续（覆盖配置）
            debug: 是否启用调试模式
            verbose: 是否打印进度
        """
        self.config = config
        self.threads = threads or config.threads or min(8, os.cpu_count() or 1)
        self.keep_going = config.keep_going if keep_going is None else keep_going
        self.debug = debug
        self.verbose = verbose
        self.timings: Dict[str, float] = {}

        self.genotypes: Optional[GenotypeMatrix] = None
        self.tested: Optional[GenotypeMatrix] = None
        self.pi: Optional[CaseProbabilityVector] = None
        self.constraint: Optional[CaseCountConstraint] = None
        self.loci: Tuple[DiseaseLocus, ...] = ()
        self.masks: Dict[float, np.ndarray] = {}
        self.panel: Optional[TrendTestPanel] = None
        self._table = None
        self._log_prob_constraint: Optional[float] = None
        self._chain: List[PhenotypeAssignment] = []

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def _debug(self, message: str):
        if self.debug:
            print(f"[DEBUG] {message}")

    def _timed(self, phase: str, started: float):
        self.timings[phase] = round(time.perf_counter() - started, 6)
        self._debug(f"{phase}: {self.timings[phase]:.3f}s")

    # ----- 准备阶段 -----

    def load_genotypes(self) -> GenotypeMatrix:
        source = self.config.genotypes
        if 'toy' in source:
            return make_toy_dataset(int(source['toy']['n']))
        if 'synthetic' in source:
            return make_synthetic_dataset(**source['synthetic'])
        metadata = source.get('metadata')
        return load_matrix(
            self.config.resolve_path(source['path']),
            fmt=source.get('format', 'dense-csv'),
            metadata_path=self.config.resolve_path(metadata) if metadata else None,
        )

    def _build_pi(self, gm: GenotypeMatrix) -> CaseProbabilityVector:
        model = model_from_dict(self.config.model)
        if isinstance(model, float):
            return null_model(gm.n, model)
        covariates = None
        if self.config.covariates:
            covariates = load_covariates(self.config.resolve_path(self.config.covariates))
        return evaluate_pi(model, gm, missing_policy=self.config.missing_policy, covariates=covariates)

    def _disease_loci(self, gm: GenotypeMatrix) -> Tuple[DiseaseLocus, ...]:
        if self.config.disease_loci is not None:
            return self.config.disease_loci
        model = model_from_dict(self.config.model)
        if isinstance(model, float):
            return ()
        return tuple(
            DiseaseLocus(gm.snps[gm.snp_index(ref)].chromosome, gm.snps[gm.snp_index(ref)].position_bp)
            for ref in model.snp_refs
        )

    def prepare(self):
        """加载数据、计算 π、构建后向表与检验面板（每个实验只做一次）"""
        cfg = self.config

        started = time.perf_counter()
        gm = replicate_individuals(self.load_genotypes(), cfg.replication_factor)
        self.genotypes = gm
        self.tested = filter_maf(gm, float(cfg.maf_threshold), error_if_empty=True) \
            if cfg.maf_threshold is not None else gm
        self._timed('load', started)
        self._log(f"  ✓ 基因型: {gm.n} 个个体, {gm.p} 个 SNP（检验 {self.tested.p} 个）")

        started = time.perf_counter()
        self.pi = self._build_pi(gm)
        n1 = gm.n // 2 if cfg.n1 == 'half' else int(cfg.n1)
        if n1 > gm.n:
            raise InvalidParameter(f"n1={n1} 超过个体数 n={gm.n}")
        self.constraint = CaseCountConstraint(n1=n1, n=gm.n)

        self.loci = self._disease_loci(gm)
        for rho in cfg.rhos:
            if not math.isinf(rho) and not self.loci:
                raise ConfigError(f"有限半径 ρ={format_rho(rho)} 需要 statistic.disease_loci（null 模型没有默认致病位点）")
            self.masks[rho] = radius_mask(self.tested.snps, self.loci, rho)
        self._timed('model', started)

        started = time.perf_counter()
        if cfg.algorithm == 'backward':
            self._table = backward_table(self.pi, self.constraint)
            self._log_prob_constraint = self._table.log_prob_constraint
        else:
            self._log_prob_constraint = forward_table(self.pi, self.constraint).log_prob_constraint
        self.panel = TrendTestPanel(self.tested.values)
        self._timed('tables', started)
        self._debug(f"log10 P(C) = {self._log_prob_constraint / math.log(10.0):.4f}")

        if cfg.algorithm == 'mcmc':
            started = time.perf_counter()
            settings = McmcSettings.default_for(gm.n, burn_in=cfg.burn_in, thinning=cfg.thinning)
            self._debug(f"MCMC burn_in={settings.burn_in}, thinning={settings.thinning}")
            self._chain = sample_mcmc(self.pi, self.constraint, settings=settings,
                                      n_samples=cfg.replicates, rng=make_stream(cfg.master_seed, 'H1', 0))
            self._timed('mcmc_chain', started)

    # ----- 单个重复实验 -----

    def draw_phenotypes(self, hypothesis: str, replicate: int) -> PhenotypeAssignment:
        cfg = self.config
        c = self.constraint
        if hypothesis == 'H0':
            return sample_permutation(c.n, c.n1, make_stream(cfg.master_seed, 'H0', replicate))
        if cfg.algorithm == 'backward':
            return sample_backward(self._table, self.pi, make_stream(cfg.master_seed, 'H1', replicate))
        if cfg.algorithm == 'rejection':
            return sample_rejection(self.pi, c, max_attempts=cfg.max_attempts,
                                    rng=make_stream(cfg.master_seed, 'H1', replicate),
                                    log_prob_constraint=self._log_prob_constraint)
        return self._chain[replicate]

    def simulate_replicate(self, hypothesis: str, replicate: int) -> Dict[float, float]:
        """模拟一个重复实验，返回 {ρ: S_ρ}"""
        y = self.draw_phenotypes(hypothesis, replicate)
        scan = self.panel.scan(y)
        return {rho: max_in_radius(scan.neg_log10_p, mask, rho).value for rho, mask in self.masks.items()}

    def run_hypothesis(self, hypothesis: str) -> Tuple[Dict[int, Dict[float, float]], List[Tuple[str, int, str]]]:
        """并行运行某个假设下的全部重复实验"""
        results: Dict[int, Dict[float, float]] = {}
        failures: List[Tuple[str, int, str]] = []
        replicates = range(self.config.replicates)

        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            futures = {
                executor.submit(self.simulate_replicate, hypothesis, r): r
                for r in replicates
            }
            for future in as_completed(futures):
                r = futures[future]
                if future.cancelled():
                    continue
                try:
                    results[r] = future.result()
                except PhenosimError as e:
                    failures.append((hypothesis, r, f"{type(e).__name__}: {e}"))
                    print(f"{Fore.RED}✗{Style.RESET_ALL} {hypothesis} 重复实验 {r} 出错: {e}", file=sys.stderr)
                    if not self.keep_going:
                        for pending in futures:
                            pending.cancel()

        return results, sorted(failures, key=lambda f: f[1])

    # ----- 汇总 -----

    def _statistics_frame(self, collected: Dict[str, Dict[int, Dict[float, float]]]) -> pd.DataFrame:
        rows = []
        for hypothesis in HYPOTHESES:
            for r in sorted(collected[hypothesis]):
                for rho in self.config.rhos:
                    rows.append((hypothesis, r, format_rho(rho), collected[hypothesis][r][rho]))
        return pd.DataFrame(rows, columns=['hypothesis', 'replicate', 'rho', 's_rho'])

    def _provenance(self) -> Dict[str, Any]:
        return {
            'tool': 'phenosim',
            'version': __version__,
            'master_seed': self.config.master_seed,
            'algorithm': self.config.algorithm,
            'n': self.constraint.n,
            'n1': self.constraint.n1,
            'snps_tested': self.tested.p,
            'disease_loci': [{'chromosome': l.chromosome, 'position': l.position} for l in self.loci],
            'log10_prob_constraint': self._log_prob_constraint / math.log(10.0),
            'config': self.config.to_dict(),
        }

    def run(self) -> PowerReport:
        """
        运行完整实验

        Raises:
            PartialFailure: 有重复实验失败且未开启 keep_going
        """
        cfg = self.config
        self._log(f"\n{'='*80}")
        self._log(f"功效实验: 算法 {cfg.algorithm}, 每个假设 {cfg.replicates} 个重复, 线程 {self.threads}")
        self._log(f"{'='*80}")

        self.prepare()

        collected: Dict[str, Dict[int, Dict[float, float]]] = {}
        failures: List[Tuple[str, int, str]] = []
        for hypothesis in HYPOTHESES:
            started = time.perf_counter()
            collected[hypothesis], failed = self.run_hypothesis(hypothesis)
            failures.extend(failed)
            self._timed(f'simulate_{hypothesis}', started)
            self._log(f"  ✓ {hypothesis}: {len(collected[hypothesis])}/{cfg.replicates} 个重复实验完成")
            if failed and not self.keep_going:
                raise PartialFailure(failures)

        started = time.perf_counter()
        statistics = self._statistics_frame(collected)
        summaries: Dict[float, RocSummary] = {}
        null_checks: Dict[float, RocSummary] = {}
        for rho in cfg.rhos:
            h1 = [collected['H1'][r][rho] for r in sorted(collected['H1'])]
            h0 = [collected['H0'][r][rho] for r in sorted(collected['H0'])]
            summaries[rho] = roc_auc(h1, h0)
            if len(h0) >= 2:
                null_checks[rho] = split_half_null_auc(h0)
        self._timed('roc', started)

        return PowerReport(
            config=cfg,
            statistics=statistics,
            summaries=summaries,
            null_checks=null_checks,
            timings=dict(self.timings),
            provenance=self._provenance(),
            failures=failures,
        )

    @staticmethod
    def print_summary(report: PowerReport):
        """打印各半径的 AUC 摘要"""
        print(f"\n{'='*80}")
        print("功效摘要")
        print(f"{'='*80}")
        for rho, summary in report.summaries.items():
            color = Fore.GREEN if summary.band in ('good', 'excellent') else Fore.YELLOW
            print(f"  ρ={format_rho(rho):>8}: AUC = {summary.auc:.3f} "
                  f"[{summary.ci_low:.3f}, {summary.ci_high:.3f}] {color}{summary.band}{Style.RESET_ALL}")
        if report.failures:
            print(f"\n{Fore.YELLOW}⚠ {len(report.failures)} 个重复实验失败（已跳过）{Style.RESET_ALL}")


def run_experiment(config: ExperimentConfig,
                   threads: Optional[int] = None,
                   keep_going: Optional[bool] = None,
                   debug: bool = False,
                   verbose: bool = False) -> PowerReport:
    """运行一次功效实验（同样的配置得到逐位相同的重复实验统计量表）"""
    return PowerStudy(config, threads=threads, keep_going=keep_going, debug=debug, verbose=verbose).run()


def run_parameter_sweep(base_config: ExperimentConfig,
                        dotted_key: str,
                        values: Sequence[Any],
                        rho: Optional[float] = None,
                        threads: Optional[int] = None,
                        verbose: bool = False) -> Dict[Any, RocSummary]:
    """
    对一个配置字段取多个值分别运行实验

    Args:
        base_config: 基础配置
        dotted_key: 要修改的字段，如 'model.beta'、'replication_factor'
        values: 取值列表
        rho: 汇总哪个半径（默认配置中的第一个）

    Returns:
        {取值: RocSummary}

    Example:
        >>> run_parameter_sweep(cfg, 'model.beta', [0.1, 0.2, 0.3, 0.4], rho=5000)
    """
    rho = base_config.rhos[0] if rho is None else parse_rho(rho)
    if rho not in base_config.rhos:
        raise InvalidParameter(f"半径 ρ={format_rho(rho)} 不在配置的 statistic.rho 中")
    results: Dict[Any, RocSummary] = {}
    for value in values:
        config = base_config.with_override(dotted_key, value)
        if verbose:
            print(f"\n{Fore.CYAN}{dotted_key} = {value}{Style.RESET_ALL}")
        results[value] = run_experiment(config, threads=threads, verbose=verbose).summaries[rho]
    return results


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description='运行病例/对照功效实验（H1 约束采样 vs H0 置换）',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:

  # 使用附带的玩具配置
  python3 power_study.py -c toy_power_config.json

  # 指定输出目录和线程数
  python3 power_study.py -c exp.json -o results/ --threads 4

  # 某些重复实验失败时继续，并输出 ROC SVG
  python3 power_study.py -c exp.json --keep-going --plot

配置文件:
  JSON 格式，未知字段会被拒绝
  命令行参数优先级高于配置文件
        """
    )
    parser.add_argument('-c', '--config', required=True, help='实验配置 JSON 文件')
    parser.add_argument('-o', '--out', help='输出目录（默认: power_study_YYYYMMDD_HHMMSS）')
    parser.add_argument('--threads', type=int, help='工作线程数')
    parser.add_argument('--seed', type=int, help='覆盖配置中的 master_seed')
    parser.add_argument('--keep-going', action='store_true', default=None, help='重复实验出错时继续')
    parser.add_argument('--plot', action='store_true', help='同时输出 roc_<rho>.svg')
    parser.add_argument('--debug', action='store_true', help='启用调试模式')
    args = parser.parse_args(argv)

    try:
        config = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        study = PowerStudy(config, threads=args.threads, keep_going=args.keep_going, debug=args.debug)
        report = study.run()
        study.print_summary(report)
        report.save(args.out or get_timestamped_name('power_study'), plot=args.plot)
    except KeyboardInterrupt:
        print(f"\n\n{Fore.YELLOW}用户中断实验{Style.RESET_ALL}")
        return 1
    except PhenosimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
