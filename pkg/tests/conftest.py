"""Expensive relaxations are solved once per session and shared."""
from pathlib import Path

import pytest

from heatsos.problem import RelaxationConfig, default_paper_instance, load_config
from heatsos.sdpsolver import pseudo_moments, save_pseudo_moments, solve
from heatsos.weakform import assemble

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class Relaxed:
    def __init__(self, problem, config):
        self.problem = problem
        self.program = assemble(problem, config)
        self.solution = solve(self.program)
        self.pm = pseudo_moments(self.program, self.solution)

    def dump(self, directory: Path) -> Path:
        path = directory / f"moments_d{self.program.d}.json"
        if not path.exists():
            save_pseudo_moments(self.pm, path)
        return path


@pytest.fixture(scope="session")
def linear_d4():
    return Relaxed(default_paper_instance(), RelaxationConfig(d=4))


@pytest.fixture(scope="session")
def linear_d6():
    return Relaxed(default_paper_instance(), RelaxationConfig(d=6))


@pytest.fixture(scope="session")
def nonlinear_d6():
    """Nonlinear instance with the widened boxes of configs/nonlinear.json."""
    problem, config = load_config(CONFIGS / "nonlinear.json")
    return Relaxed(problem, config)


@pytest.fixture(scope="session")
def session_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("session")


ACCEPTANCE_LINES: list = []


@pytest.fixture
def verdict(request):
    """Record one pass/fail line per acceptance criterion; shown in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
