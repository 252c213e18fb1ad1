import pathlib
import sys

import pytest

# 根目录脚本不是安装包，直接加入导入路径
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='运行耗时较长的验收测试')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: 耗时较长的验收测试，需要 --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='需要 --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def toy_pi():
    """玩具设计 n=20, f0=0.2, RR=(1.5, 2.0) 的 π 向量"""
    import numpy as np

    return np.array([0.2] * 16 + [0.3] * 3 + [0.4])
