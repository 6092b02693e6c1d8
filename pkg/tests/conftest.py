import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("momentlab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("momentlab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def table1_results():
    """Implicant critical ratios for every tabulated alpha, computed once per session."""
    from momentlab.implicants import TABLE1, critical_ratio_implicants

    return {row[0]: critical_ratio_implicants(row[0]) for row in TABLE1}


# criterion number -> list of (ok, detail); filled by test_acceptance and printed once at the end
CRITERIA: dict[int, list[tuple[bool, str]]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA.setdefault(number, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        parts = CRITERIA[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(d + ("" if ok else " [not met]") for ok, d in parts)
        terminalreporter.write_line(f"criterion {number}: {verdict}  {details}")
