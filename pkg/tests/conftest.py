import math

import pytest

from subexp import (
    GallerySpec,
    ModelParams,
    PeriodicProfile,
    PhiAC,
    MixtureDistribution,
    QuadratureSpec,
    normalizer_M,
)

ACCEPTANCE_LINES: list = []


def record_criterion(label: str, ok: bool, detail: str = "",
                     expected_failure: bool = False) -> None:
    status = "PASS" if ok else ("FAIL (expected, see notes ledger)"
                                if expected_failure else "FAIL")
    ACCEPTANCE_LINES.append(f"[{status}] {label}" + (f" -- {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def profile(params):
    return PeriodicProfile(params)


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec(rel_tol=1e-9)


@pytest.fixture(scope="session")
def quad_fast():
    return QuadratureSpec(rel_tol=1e-7)


@pytest.fixture(scope="session")
def m_norm(params, quad, profile):
    return normalizer_M(params, quad, profile)


@pytest.fixture(scope="session")
def mu(profile, m_norm):
    return MixtureDistribution.single(PhiAC(profile=profile, m_log=math.log(m_norm)))


@pytest.fixture(scope="session")
def spec_default():
    return GallerySpec()


@pytest.fixture(scope="session")
def thm11(spec_default):
    from subexp import thm11_report
    return thm11_report(spec_default)


@pytest.fixture(scope="session")
def thm12(spec_default):
    from subexp import thm12_report
    return thm12_report(spec_default)


@pytest.fixture(scope="session")
def prop11(spec_default):
    from subexp import prop11_report
    return prop11_report(spec_default)


@pytest.fixture(scope="session")
def lem32(spec_default):
    from subexp import lem32_report
    return lem32_report(spec_default)


@pytest.fixture(scope="session")
def tiltrep(spec_default):
    from subexp import tilt_report
    return tilt_report(spec_default)
