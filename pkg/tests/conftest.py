import numpy as np
import pytest

_CRITERIA: list[str] = []


@pytest.fixture
def record_criterion():
    """Log a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{label} {'PASS' if passed else 'FAIL'}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def product_echo(ka, lam_t, delta, t, coupling=1.0, hbar=1.0):
    """Mode product written straight from the Bogoliubov angles.

    Independent of the package's fast path; ``ka`` is any array of k*a.
    """
    ka = np.asarray(ka, dtype=float)
    x = lam_t + delta
    theta_g = np.arctan2(-np.sin(ka), np.cos(ka) - lam_t)
    theta_e = np.arctan2(-np.sin(ka), np.cos(ka) - x)
    eps = 2 * coupling * np.sqrt(1 + x * x - 2 * x * np.cos(ka))
    return float(np.prod(1 - np.sin(theta_g - theta_e) ** 2 * np.sin(eps * t / hbar) ** 2))


def periodic_ka(n):
    return 2 * np.pi * np.arange(1, n // 2 + 1) / n


def antiperiodic_ka(n):
    return (2 * np.arange(1, n // 2 + 1) - 1) * np.pi / n
