import mpmath
import pytest


def mp_gauss_legendre(m):
    """Gauss-Legendre nodes and weights on [0, 1] at the current mpmath precision."""
    nodes, weights = [], []
    for i in range(1, m + 1):
        x = mpmath.cos(mpmath.pi * (i - mpmath.mpf(1) / 4) / (m + mpmath.mpf(1) / 2))
        for _ in range(100):
            p = mpmath.legendre(m, x)
            dp = m * (x * p - mpmath.legendre(m - 1, x)) / (x * x - 1)
            dx = p / dp
            x -= dx
            if abs(dx) < mpmath.mpf(10) ** (-mpmath.mp.dps + 5):
                break
        dp = m * (x * mpmath.legendre(m, x) - mpmath.legendre(m - 1, x)) / (x * x - 1)
        nodes.append((x + 1) / 2)
        weights.append(1 / ((1 - x * x) * dp * dp))
    return nodes[::-1], weights[::-1]


@pytest.fixture
def mp_rule():
    return mp_gauss_legendre


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import summary_lines
    except ImportError:
        return
    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
