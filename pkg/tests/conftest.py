from __future__ import annotations

import os
from fractions import Fraction as F
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from fixedpass.system import ControllerBasis, ParamBox, RationalTransfer, compose_closed_loop

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"


def tf(num, den, domain):
    return RationalTransfer.from_coeffs(num, den, domain)


def example1_parts():
    g0 = tf([0, 1], [-2, 1], "dt")
    basis = ControllerBasis((tf([1], [1], "dt"), tf([1], [F(-1, 2), 1], "dt")))
    box = ParamBox((F(1, 10), F(1)), (F(1), F(2)))
    return g0, basis, box


def example2_parts():
    g0 = tf([6, 5, 1], [2, -3, 1], "ct")
    basis = ControllerBasis((tf([1], [1], "ct"), tf([1], [1, 1], "ct")))
    box = ParamBox((F(0), F(0)), (F(1), F(1)))
    return g0, basis, box


@pytest.fixture(scope="session")
def example1():
    g0, basis, box = example1_parts()
    return compose_closed_loop(g0, basis), box


@pytest.fixture(scope="session")
def example2():
    g0, basis, box = example2_parts()
    return compose_closed_loop(g0, basis), box


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
