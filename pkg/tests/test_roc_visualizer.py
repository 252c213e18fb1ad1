from core.roc_analysis import roc_auc
from roc_visualizer import RocVisualizer


def test_render_svg_contains_curve_and_auc():
    summary = roc_auc([3, 2, 1], [2, 1, 0])
    svg = RocVisualizer().render_svg(summary, title='S_rho <inf>')

    assert svg.startswith('<svg')
    assert 'AUC = 0.778' in svg
    assert '(fair)' in svg
    assert '&lt;inf&gt;' in svg
    # 起点 (0,0) 位于绘图区左下角
    assert 'points="56.00,424.00' in svg


def test_save_svg(tmp_path):
    summary = roc_auc([5, 6], [1, 2])
    path = RocVisualizer(width=300, height=300).save_svg(summary, tmp_path / 'plots' / 'roc.svg')
    text = path.read_text(encoding='utf-8')
    assert 'width="300"' in text
    assert 'AUC = 1.000' in text
