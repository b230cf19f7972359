import numpy as np
import pytest

from polyprune.polyfunc import MaxAffine

# max(-1, x - 1, y - 1, x + y - 2, 2x - 3, 2y - 3), rows are [q_x, q_y, p]
SIX_TERMS = [
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [1.0, 1.0, 2.0],
    [2.0, 0.0, 3.0],
    [0.0, 2.0, 3.0],
]


@pytest.fixture
def six_terms():
    return MaxAffine.from_terms(SIX_TERMS)


def random_max_affine(rng: np.random.Generator, n_terms: int, dim: int) -> MaxAffine:
    return MaxAffine(rng.normal(size=(n_terms, dim)), rng.normal(size=n_terms))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criterion")
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion; printed at the end of the run."""

    def record(label: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        request.config._acceptance_lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(" ")[0])):
            terminalreporter.write_line(line)
