import numpy as np
import pytest

from kdiff import ComplexGrid, Domain

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rand_grid(rng: np.random.Generator, height: int, width: int,
              domain: Domain = Domain.KSPACE) -> ComplexGrid:
    data = rng.standard_normal((height, width)) + 1j * rng.standard_normal((height, width))
    return ComplexGrid(data, domain)


def rand_grid_f32(rng: np.random.Generator, height: int, width: int,
                  domain: Domain = Domain.KSPACE) -> ComplexGrid:
    """Random grid whose values are exactly representable in float32."""
    re = rng.standard_normal((height, width)).astype(np.float32).astype(np.float64)
    im = rng.standard_normal((height, width)).astype(np.float32).astype(np.float64)
    return ComplexGrid(re + 1j * im, domain)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
