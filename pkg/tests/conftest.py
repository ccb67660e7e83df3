import numpy as np
import pytest

from lgparasite.model import DemographyParams, DiseaseParams
from lgparasite.reduction import ReducedParams, reduce_params_at_nu


def _paired(table):
    """Expand {"ij": (c_xS, c_xI_for_I_focal)} tables where coefficients only
    depend on the focal status."""
    out = {}
    for ij, (s, i) in table.items():
        out.update({f"c_SS_{ij}": s, f"c_SI_{ij}": s, f"c_IS_{ij}": i, f"c_II_{ij}": i})
    return out


# Basins example: coefficients depend on the focal status only.
FIG2_COEF = _paired({"11": (0.9, 0.1), "12": (1.1, 5.0), "21": (6.0, 0.3), "22": (0.2, 0.8)})

# Bifurcation example.
FIG3_COEF = {
    "c_SS_11": 1.3, "c_SI_11": 0.5, "c_IS_11": 0.1, "c_II_11": 0.1,
    "c_SS_12": 1.0, "c_SI_12": 0.05, "c_IS_12": 8.0, "c_II_12": 3.0,
    "c_SS_21": 6.0, "c_SI_21": 0.3, "c_IS_21": 0.3, "c_II_21": 0.3,
    "c_SS_22": 0.2, "c_SI_22": 0.2, "c_IS_22": 0.8, "c_II_22": 0.8,
}


@pytest.fixture(scope="session")
def fig2_demography():
    return DemographyParams.from_mapping([13.0, 3.4], [3.6, 8.0], FIG2_COEF)


@pytest.fixture(scope="session")
def fig2_disease():
    return DiseaseParams.homogeneous(0.8, 0.4)


@pytest.fixture(scope="session")
def fig2_rp(fig2_demography):
    return reduce_params_at_nu(fig2_demography, 0.5)


@pytest.fixture(scope="session")
def fig3_demography():
    return DemographyParams.from_mapping([16.0, 4.4], [2.0, 9.0], FIG3_COEF)


@pytest.fixture(scope="session")
def symmetric_lg():
    """b = 2, self-competition 1, cross-competition 0.5."""
    return ReducedParams.from_leslie_gower([2.0, 2.0], [[1.0, 0.5], [0.5, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_reduced_params(rng, n, nu_range=(0.05, 0.95)):
    """Random generic-looking reduced parameter sets."""
    out = []
    for _ in range(n):
        nu = rng.uniform(*nu_range)
        out.append(ReducedParams(
            nu, rng.uniform(0.5, 10, 2), rng.uniform(0.0, 10, 2),
            rng.uniform(0.05, 5, (2, 2)), rng.uniform(0.05, 5, (2, 2))))
    return out


# -- acceptance report -------------------------------------------------------

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(tag, passed, detail)``."""
    def record(tag, passed, detail=""):
        _VERDICTS.append((tag, bool(passed), detail))
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag, passed, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {tag}  {detail}")
