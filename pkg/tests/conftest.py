import pytest

from risparking.harness import ExperimentConfig, build_matrix

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def default_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def default_matrix(default_cfg):
    return build_matrix(default_cfg, 2)


@pytest.fixture(scope="session")
def default_layout(default_cfg):
    return default_cfg.layout()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
