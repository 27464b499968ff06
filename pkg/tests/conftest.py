import pytest

from kicstat.pipeline import PipelineConfig, ensemble_statistics
from kicstat.rmt import EnsembleSpec


@pytest.fixture(scope="session")
def coe500_reference():
    """Independent 40-member COE run used to estimate ensemble standard errors."""
    cfg = PipelineConfig(statistics=("form_factor", "number_variance"))
    return ensemble_statistics(EnsembleSpec("COE", 500, 40, seed=1), cfg)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
