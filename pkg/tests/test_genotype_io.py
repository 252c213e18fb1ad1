import numpy as np
import pytest

from core.errors import (
    DimensionMismatch,
    DuplicatePositionWarning,
    EmptyAfterFilter,
    EmptyAfterFilterWarning,
    InvalidParameter,
    NotMultipleOf20,
    ParseError,
    UnknownValue,
)
from core.genotype_io import (
    MISSING,
    build_matrix,
    compute_mafs,
    filter_maf,
    load_matrix,
    make_synthetic_dataset,
    make_toy_dataset,
    replicate_individuals,
    write_matrix,
)


def write(path, text):
    path.write_text(text, encoding='utf-8')
    return path


@pytest.fixture
def dense_csv(tmp_path):
    write(tmp_path / 'geno.csv', 'individual_id,rs3,rs1,rs2\ni1,0,1,2\ni2,1,NA,2\ni3,2,0,1\n')
    write(tmp_path / 'geno.snps.csv', 'snp_id,chromosome,position_bp\nrs1,1,100\nrs2,1,200\nrs3,1,300\n')
    return tmp_path / 'geno.csv'


def test_load_dense_csv_sorts_by_position(dense_csv):
    gm = load_matrix(dense_csv)
    assert gm.n == 3 and gm.p == 3
    assert gm.snp_ids == ['rs1', 'rs2', 'rs3']
    assert gm.individual_ids == ('i1', 'i2', 'i3')
    assert gm.column('rs1').tolist() == [1, MISSING, 0]
    assert gm.column('rs3').tolist() == [0, 1, 2]
    assert [s.position_bp for s in gm.snps] == [100, 200, 300]


def test_maf_ignores_missing(dense_csv):
    gm = load_matrix(dense_csv)
    # rs1: 观测值 1,0 -> f = 1/4；rs2: 2,2,1 -> f = 5/6 -> MAF 1/6
    assert gm.mafs == pytest.approx([0.25, 1 / 6, 0.5])


def test_dense_csv_without_metadata_uses_column_order(tmp_path):
    path = write(tmp_path / 'plain.csv', 'individual_id,b,a\ni1,0,1\ni2,2,1\n')
    gm = load_matrix(path)
    assert gm.snp_ids == ['b', 'a']
    assert [s.position_bp for s in gm.snps] == [1, 2]


def test_unknown_value_reports_line_and_column(tmp_path):
    path = write(tmp_path / 'bad.csv', 'individual_id,rs1,rs2\ni1,0,1\ni2,2,3\n')
    with pytest.raises(UnknownValue) as excinfo:
        load_matrix(path)
    assert excinfo.value.line == 3
    assert excinfo.value.column == 3


def test_metadata_mismatch(tmp_path):
    path = write(tmp_path / 'geno.csv', 'individual_id,rs1,rs2\ni1,0,1\n')
    write(tmp_path / 'geno.snps.csv', 'snp_id,chromosome,position_bp\nrs1,1,100\n')
    with pytest.raises(DimensionMismatch):
        load_matrix(path)


def test_metadata_bad_header(tmp_path):
    path = write(tmp_path / 'geno.csv', 'individual_id,rs1\ni1,0\n')
    write(tmp_path / 'geno.snps.csv', 'id,chr,pos\nrs1,1,100\n')
    with pytest.raises(ParseError):
        load_matrix(path)


def test_duplicate_positions_warn(tmp_path):
    path = write(tmp_path / 'geno.csv', 'individual_id,rs1,rs2\ni1,0,1\ni2,1,1\n')
    write(tmp_path / 'geno.snps.csv', 'snp_id,chromosome,position_bp\nrs1,1,100\nrs2,1,100\n')
    with pytest.warns(DuplicatePositionWarning):
        gm = load_matrix(path)
    assert gm.p == 2


def test_load_plink_raw(tmp_path):
    path = write(
        tmp_path / 'geno.raw',
        'FID IID PAT MAT SEX PHENOTYPE rs1_A rs2_C\n'
        'f1 i1 0 0 1 2 0 2\n'
        'f2 i2 0 0 2 1 NA 1\n',
    )
    gm = load_matrix(path, fmt='plink-raw')
    assert gm.values.shape == (2, 2)
    assert gm.snp_ids == ['rs1', 'rs2']
    assert gm.individual_ids == ('i1', 'i2')
    assert gm.column('rs1').tolist() == [0, MISSING]


def test_explicit_metadata_path_must_exist(tmp_path, dense_csv):
    with pytest.raises(ParseError, match='文件不存在'):
        load_matrix(dense_csv, metadata_path=tmp_path / 'does_not_exist.snps.csv')

    raw = write(tmp_path / 'geno.raw', 'FID IID PAT MAT SEX PHENOTYPE rs1_A\nf1 i1 0 0 1 2 0\n')
    with pytest.raises(ParseError, match='文件不存在'):
        load_matrix(raw, fmt='plink-raw', metadata_path=tmp_path / 'typo.snps.csv')


def test_plink_raw_uses_explicit_metadata(tmp_path):
    raw = write(tmp_path / 'geno.raw', 'FID IID PAT MAT SEX PHENOTYPE rs2_A rs1_A\nf1 i1 0 0 1 2 0 1\n')
    meta = write(tmp_path / 'pos.csv', 'snp_id,chromosome,position_bp\nrs1,3,500\nrs2,3,900\n')
    gm = load_matrix(raw, fmt='plink-raw', metadata_path=meta)
    assert [(s.chromosome, s.position_bp) for s in gm.snps] == [('3', 500), ('3', 900)]


def test_plink_raw_bad_header(tmp_path):
    path = write(tmp_path / 'geno.raw', 'FID IID SEX rs1_A\nf1 i1 1 0\n')
    with pytest.raises(ParseError):
        load_matrix(path, fmt='plink-raw')


def test_missing_file_and_unknown_format(tmp_path):
    with pytest.raises(ParseError):
        load_matrix(tmp_path / 'absent.csv')
    with pytest.raises(InvalidParameter):
        load_matrix(tmp_path / 'absent.vcf', fmt='vcf')


def test_written_matrix_loads_back(tmp_path):
    gm = build_matrix(
        values=np.array([[0, 2, MISSING], [1, 1, 0]]),
        individual_ids=['a', 'b'],
        snp_ids=['x', 'y', 'z'],
        chromosomes=['2', '2', '5'],
        positions=[10, 20, 5],
    )
    path, meta = write_matrix(gm, tmp_path / 'out.csv')
    assert meta.name == 'out.snps.csv'
    loaded = load_matrix(path)
    assert np.array_equal(loaded.values, gm.values)
    assert loaded.snps == gm.snps


def test_filter_maf_is_strict():
    gm = build_matrix(
        values=np.array([[0, 0, 1], [0, 1, 1], [0, 0, 1], [0, 0, 1], [0, 0, 0]]),
        individual_ids=list('abcde'),
        snp_ids=['mono', 'rare', 'common'],
        chromosomes=['1'] * 3,
        positions=[1, 2, 3],
    )
    assert gm.mafs == pytest.approx([0.0, 0.1, 0.4])
    assert filter_maf(gm, 0.1).snp_ids == ['common']
    assert filter_maf(gm, 0.05).snp_ids == ['rare', 'common']
    assert filter_maf(gm, 0.0).snp_ids == ['rare', 'common']


def test_filter_maf_is_idempotent():
    gm = make_synthetic_dataset(n=60, p=200, seed=3, causal_positions=[150_000], causal_mafs=[0.3])
    once = filter_maf(gm, 0.2)
    twice = filter_maf(once, 0.2)
    assert 0 < once.p < gm.p
    assert twice.snp_ids == once.snp_ids
    assert np.array_equal(twice.values, once.values)
    assert twice.mafs == pytest.approx(once.mafs)


def test_filter_maf_empty():
    gm = make_toy_dataset(20)
    with pytest.warns(EmptyAfterFilterWarning):
        assert filter_maf(gm, 0.5).p == 0
    with pytest.raises(EmptyAfterFilter):
        filter_maf(gm, 0.5, error_if_empty=True)
    with pytest.raises(InvalidParameter):
        filter_maf(gm, 0.7)


def test_compute_mafs_all_missing_column():
    assert compute_mafs(np.array([[MISSING], [MISSING]])).tolist() == [0.0]


def test_replicate_individuals():
    gm = make_toy_dataset(20)
    rep = replicate_individuals(gm, 3)
    assert rep.n == 60
    assert rep.individual_ids[0] == 'ind1_r1'
    assert rep.individual_ids[20] == 'ind1_r2'
    assert np.array_equal(rep.values[40:], gm.values)
    assert rep.snps == gm.snps
    assert replicate_individuals(gm, 1) is gm
    with pytest.raises(InvalidParameter):
        replicate_individuals(gm, 0)


@pytest.mark.parametrize('n', [20, 40, 100])
def test_toy_dataset_proportions(n):
    column = make_toy_dataset(n).column(0)
    assert np.bincount(column, minlength=3).tolist() == [n * 16 // 20, n * 3 // 20, n // 20]


@pytest.mark.parametrize('n', [0, 10, 30])
def test_toy_dataset_requires_multiple_of_20(n):
    with pytest.raises(NotMultipleOf20):
        make_toy_dataset(n)


def test_synthetic_dataset():
    gm = make_synthetic_dataset()
    assert gm.values.shape == (629, 8000)
    causal1 = gm.snps[gm.snp_index('causal1')]
    causal2 = gm.snps[gm.snp_index('causal2')]
    assert (causal1.chromosome, causal1.position_bp) == ('X', 627641)
    assert causal2.position_bp == 1986325
    assert causal1.maf == pytest.approx(0.26, abs=0.05)
    assert causal2.maf == pytest.approx(0.23, abs=0.05)
    positions = [s.position_bp for s in gm.snps]
    assert positions == sorted(positions)

    again = make_synthetic_dataset()
    assert np.array_equal(gm.values, again.values)


def test_synthetic_dataset_rejects_causal_outside_grid():
    with pytest.raises(InvalidParameter):
        make_synthetic_dataset(n=10, p=100)
