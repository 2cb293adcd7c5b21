import numpy as np
import pytest

from gpscatter.grid import Grid, SpectralField, ifft, random_field


def mean_zero(field: SpectralField) -> SpectralField:
    c = field.coefficients().copy()
    c.flat[0] = 0.0
    return SpectralField(field.grid, c, rep="frequency", frame=field.frame).to_physical()


def smooth_field(grid: Grid, seed: int, amplitude: float | None = None, rule: str | None = None, width: float = 0.1):
    """Mean-zero random field with a Gaussian envelope, optionally masked and scaled to ``sup = amplitude``."""
    u = random_field(grid, lambda r: np.exp(-width * r**2), seed)
    c = u.coefficients().copy()
    c.flat[0] = 0.0
    if rule:
        c = c * grid.dealias_mask(rule)
    vals = ifft(grid, c)
    if amplitude is not None:
        vals = vals * (amplitude / np.max(np.abs(vals)))
    return SpectralField(grid, vals)


@pytest.fixture
def grid2():
    return Grid(2, 32, 4 * np.pi)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL summary for an acceptance criterion and assert it."""

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{label}: {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
