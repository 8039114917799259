import pytest

from ttiq import load_schema, load_taxonomy

from . import poi


@pytest.fixture
def poi_dir(tmp_path):
    return poi.write_files(tmp_path / "poi")


@pytest.fixture
def poi_space(tmp_path):
    return poi.build_space(tmp_path / "poi")


@pytest.fixture(scope="session")
def poi_schema(tmp_path_factory):
    root = poi.write_files(tmp_path_factory.mktemp("schema"))
    return load_schema(root / "poi.ttiq")


@pytest.fixture(scope="session")
def poi_tax(tmp_path_factory):
    root = poi.write_files(tmp_path_factory.mktemp("tax"))
    return load_taxonomy(root / "poi.tax")


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
