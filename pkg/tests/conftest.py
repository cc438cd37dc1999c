import pytest

from litsynth.core.numerics import Rng


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='slow 표시 테스트 실행 (복잡도 기울기, 과적합)')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='--runslow 필요')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return Rng(1234)
