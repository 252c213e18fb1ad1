import copy
import json
import math

import numpy as np
import pytest

from core.errors import ConfigError, InvalidParameter, PartialFailure
from power_study import (
    ExperimentConfig,
    PowerStudy,
    load_config_file,
    main,
    run_experiment,
    run_parameter_sweep,
)

TOY_CONFIG = {
    'genotypes': {'toy': {'n': 20}},
    'model': {'type': 'single_snp', 'snp': 'toy_snp', 'f0': 0.2, 'rr1': 1.5, 'rr2': 2.0},
    'n1': 10,
    'statistic': {'rho': ['inf']},
    'replicates': 100,
    'algorithm': {'name': 'backward'},
    'master_seed': 2012,
}

SMALL_SYNTHETIC_CONFIG = {
    'genotypes': {'synthetic': {'n': 120, 'p': 300, 'seed': 7,
                                'causal_positions': [150000, 300000], 'causal_mafs': [0.3, 0.3]}},
    'model': {'type': 'two_locus', 'snp1': 'causal1', 'snp2': 'causal2', 'f0': 0.1, 'beta': 0.5, 'eta': 0.5},
    'n1': 'half',
    'statistic': {'rho': [5000, 50000, 'inf']},
    'replicates': 20,
    'master_seed': 11,
}


def make_config(base=TOY_CONFIG, **changes):
    data = copy.deepcopy(base)
    data.update(changes)
    return ExperimentConfig.from_dict(data)


# ===== 配置 =====

def test_shipped_toy_config_loads():
    import pathlib

    path = pathlib.Path(__file__).resolve().parents[1] / 'toy_power_config.json'
    cfg = ExperimentConfig.from_file(path)
    assert cfg.genotypes == {'toy': {'n': 20}}
    assert cfg.n1 == 10
    assert cfg.rhos == (math.inf,)
    assert cfg.algorithm == 'backward'
    assert cfg.master_seed == 2012


def test_config_defaults():
    cfg = ExperimentConfig.from_dict({'genotypes': {'toy': {'n': 20}},
                                      'model': {'type': 'null', 'p0': 0.3}, 'n1': 'half'})
    assert cfg.replicates == 1000
    assert cfg.algorithm == 'backward'
    assert cfg.rhos == (math.inf,)
    assert cfg.master_seed == 0
    assert cfg.replication_factor == 1


@pytest.mark.parametrize('mutate', [
    lambda d: d.update(colour='blue'),
    lambda d: d['genotypes']['toy'].update(p=3),
    lambda d: d['genotypes'].update(path='x.csv'),
    lambda d: d['statistic'].update(window=3),
    lambda d: d['statistic'].update(rho=['wide']),
    lambda d: d['algorithm'].update(name='gibbs'),
    lambda d: d['algorithm'].update(chains=4),
    lambda d: d['model'].update(rr3=2.0),
    lambda d: d.update(n1='quarter'),
    lambda d: d.update(replicates=1),
    lambda d: d.update(maf_threshold=0.7),
    lambda d: d.pop('model'),
])
def test_config_rejects_invalid_documents(mutate):
    data = copy.deepcopy(TOY_CONFIG)
    mutate(data)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / 'absent.json')
    broken = tmp_path / 'broken.json'
    broken.write_text('{"n1": ', encoding='utf-8')
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(broken)


def test_config_file_resolves_relative_paths(tmp_path):
    path = tmp_path / 'exp.json'
    data = dict(TOY_CONFIG, genotypes={'path': 'geno.csv'})
    path.write_text(json.dumps(data), encoding='utf-8')
    cfg = ExperimentConfig.from_file(path)
    assert cfg.resolve_path('geno.csv') == tmp_path.resolve() / 'geno.csv'


def test_with_override():
    cfg = make_config()
    changed = cfg.with_override('model.f0', 0.1)
    assert changed.model['f0'] == 0.1
    assert cfg.model['f0'] == 0.2
    assert cfg.with_override('replication_factor', 3).replication_factor == 3
    with pytest.raises(ConfigError):
        cfg.with_override('model.rr3', 1.0)
    with pytest.raises(ConfigError):
        cfg.with_override('nowhere.value', 1)


def test_to_dict_reloads_to_same_config():
    cfg = make_config(SMALL_SYNTHETIC_CONFIG)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


# ===== 运行 =====

def test_toy_run_is_deterministic_across_thread_counts():
    cfg = make_config(replicates=30)
    single = run_experiment(cfg, threads=1)
    pooled = run_experiment(cfg, threads=4)
    assert single.replicates_csv() == pooled.replicates_csv()
    assert single.summaries[math.inf].auc == pooled.summaries[math.inf].auc


def test_replicates_table_layout():
    report = run_experiment(make_config(replicates=5), threads=2)
    lines = report.replicates_csv().splitlines()
    assert lines[0] == 'hypothesis,replicate,rho,s_rho'
    assert lines[1].startswith('H1,0,inf,')
    assert lines[6].startswith('H0,0,inf,')
    assert len(lines) == 1 + 2 * 5
    assert report.values('H1', math.inf).shape == (5,)


def test_seed_changes_statistics():
    a = run_experiment(make_config(replicates=10, master_seed=1), threads=1)
    b = run_experiment(make_config(replicates=10, master_seed=2), threads=1)
    assert a.replicates_csv() != b.replicates_csv()


@pytest.mark.parametrize('algorithm', ['backward', 'rejection', 'mcmc'])
@pytest.mark.parametrize('f0, band', [(0.2, (0.54, 0.68)), (0.1, (0.51, 0.65))])
def test_toy_auc_interval_overlaps_reported_band(algorithm, f0, band):
    model = dict(TOY_CONFIG['model'], f0=f0)
    report = run_experiment(make_config(model=model, algorithm={'name': algorithm}), threads=4)
    summary = report.summaries[math.inf]
    assert summary.n_h1 == summary.n_h0 == 100
    assert summary.ci_low <= band[1] and summary.ci_high >= band[0]


def test_mcmc_run_is_deterministic():
    cfg = make_config(replicates=10, algorithm={'name': 'mcmc', 'burn_in': 2000, 'thinning': 20})
    assert run_experiment(cfg, threads=1).replicates_csv() == run_experiment(cfg, threads=3).replicates_csv()


def test_s_rho_grows_with_radius():
    report = run_experiment(make_config(SMALL_SYNTHETIC_CONFIG), threads=2)
    for hypothesis in ('H1', 'H0'):
        narrow = report.values(hypothesis, 5000)
        medium = report.values(hypothesis, 50000)
        wide = report.values(hypothesis, math.inf)
        assert np.all(narrow <= medium) and np.all(medium <= wide)
    assert report.provenance['disease_loci'] == [
        {'chromosome': 'X', 'position': 150000},
        {'chromosome': 'X', 'position': 300000},
    ]


def test_uniform_pi_gives_null_auc():
    cfg = make_config(SMALL_SYNTHETIC_CONFIG, model={'type': 'null', 'p0': 0.3},
                      statistic={'rho': ['inf']}, replicates=100)
    summary = run_experiment(cfg, threads=4).summaries[math.inf]
    assert abs(summary.auc - 0.5) < 3 * summary.se


def test_top_level_covariates_reach_the_model(tmp_path):
    (tmp_path / 'cov.csv').write_text('age\n' + '1\n' * 20, encoding='utf-8')
    model = {'type': 'tabular', 'snps': ['toy_snp'], 'table': {'0': 0.2, '1': 0.3, '2': 0.4},
             'coefficients': {'age': 0.05}, 'link': 'linear'}
    path = tmp_path / 'exp.json'
    path.write_text(json.dumps(dict(TOY_CONFIG, model=model, covariates='cov.csv')), encoding='utf-8')

    study = PowerStudy(ExperimentConfig.from_file(path), verbose=False)
    study.prepare()
    assert study.pi.probs.tolist() == pytest.approx([0.25] * 16 + [0.35] * 3 + [0.45])


def test_finite_radius_needs_loci_for_null_model():
    cfg = make_config(model={'type': 'null', 'p0': 0.3}, statistic={'rho': [5000]})
    with pytest.raises(ConfigError):
        PowerStudy(cfg, verbose=False).prepare()


def test_case_count_larger_than_sample():
    with pytest.raises(InvalidParameter):
        PowerStudy(make_config(n1=21), verbose=False).prepare()


def test_replication_and_maf_filter():
    cfg = make_config(SMALL_SYNTHETIC_CONFIG, replication_factor=2, maf_threshold=0.1)
    study = PowerStudy(cfg, verbose=False)
    study.prepare()
    assert study.constraint.n == 240
    assert study.constraint.n1 == 120
    assert all(snp.maf > 0.1 for snp in study.tested.snps)
    assert study.genotypes.p == 300


def test_failed_replicates(tmp_path):
    # n1=4 时 P(C) 约 0.19，两次尝试的预算会让一部分重复实验失败
    data = dict(TOY_CONFIG, n1=4, replicates=50, algorithm={'name': 'rejection', 'max_attempts': 2})
    with pytest.raises(PartialFailure) as excinfo:
        run_experiment(ExperimentConfig.from_dict(data), threads=2)
    assert excinfo.value.failures

    report = run_experiment(ExperimentConfig.from_dict(data), threads=2, keep_going=True)
    assert report.failures
    assert all(h == 'H1' for h, _, _ in report.failures)
    assert len(report.values('H1', math.inf)) == 50 - len(report.failures)
    assert len(report.values('H0', math.inf)) == 50
    assert report.summary_dict()['failures'][0]['hypothesis'] == 'H1'


def test_report_save(tmp_path):
    report = run_experiment(make_config(replicates=20), threads=2)
    written = report.save(tmp_path / 'out', plot=True, verbose=False)

    assert (tmp_path / 'out' / 'replicates.csv').read_text(encoding='utf-8') == report.replicates_csv()
    summary = json.loads((tmp_path / 'out' / 'summary.json').read_text(encoding='utf-8'))
    assert set(summary['results']) == {'inf'}
    assert 'null_split_half' in summary['results']['inf']
    assert summary['replicates'] == {'H1': 20, 'H0': 20}
    assert summary['provenance']['master_seed'] == 2012
    assert summary['provenance']['config']['n1'] == 10

    roc_csv = (tmp_path / 'out' / 'roc_inf.csv').read_text(encoding='utf-8')
    assert roc_csv.startswith('fpr,tpr,threshold\n0,0,inf\n')
    assert written['svg_inf'].read_text(encoding='utf-8').startswith('<svg')


def test_main_runs_toy_config(tmp_path, capsys):
    path = tmp_path / 'toy.json'
    path.write_text(json.dumps(dict(TOY_CONFIG, replicates=10)), encoding='utf-8')
    assert main(['-c', str(path), '-o', str(tmp_path / 'res'), '--threads', '2']) == 0
    assert (tmp_path / 'res' / 'summary.json').exists()
    assert 'AUC' in capsys.readouterr().out


def test_main_reports_config_errors(tmp_path, capsys):
    assert main(['-c', str(tmp_path / 'absent.json')]) == 1
    assert 'ConfigError' in capsys.readouterr().err


# ===== 参数扫描（合成 629×8000 数据集上的趋势） =====

REFERENCE_DESIGN = {
    'genotypes': {'synthetic': {}},
    'model': {'type': 'two_locus', 'snp1': 'causal1', 'snp2': 'causal2', 'f0': 0.1, 'beta': 0.3, 'eta': 0.3},
    'n1': 'half',
    'statistic': {'rho': [5000, 'inf']},
    'replicates': 200,
    'master_seed': 2012,
}


def sweep_aucs(dotted_key, values, rho):
    results = run_parameter_sweep(ExperimentConfig.from_dict(REFERENCE_DESIGN), dotted_key, values, rho=rho)
    return [results[value].auc for value in values]


def strictly_increasing(values):
    return all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_auc_increases_with_additive_effect():
    aucs = sweep_aucs('model.beta', [0.1, 0.2, 0.3, 0.4], rho=5000)
    assert strictly_increasing(aucs), aucs


@pytest.mark.slow
def test_auc_increases_with_epistasis():
    aucs = sweep_aucs('model.eta', [0.0, 0.3, 0.6, 0.9], rho=5000)
    assert strictly_increasing(aucs), aucs


@pytest.mark.slow
def test_auc_increases_with_sample_size_on_whole_dataset():
    aucs = sweep_aucs('replication_factor', [1, 2, 3, 4], rho='inf')
    assert strictly_increasing(aucs), aucs


@pytest.mark.slow
def test_auc_does_not_decrease_with_baseline_penetrance():
    aucs = sweep_aucs('model.f0', [0.01, 0.1, 0.25], rho=5000)
    assert aucs == sorted(aucs), aucs
