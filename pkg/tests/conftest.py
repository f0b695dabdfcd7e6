import pytest

from hhverify.funcspace import Interval, make_builtin_function, make_builtin_h, make_builtin_phi, sum_functions

UNIT = Interval(0.0, 1.0)

_acceptance_lines: list[str] = []


def square(iv=UNIT):
    return make_builtin_function("poly", [0, 0, 1], iv)


def exp1(iv=UNIT):
    return make_builtin_function("exp_scale", [1], iv)


def abs15_plus_square(iv=UNIT):
    return sum_functions([make_builtin_function("abs_power", [1.5], iv), square(iv)])


def linear(iv=UNIT, slope=1.0, offset=0.0):
    return make_builtin_function("poly", [offset, slope], iv)


def identity(iv=UNIT):
    return make_builtin_phi("identity", [], iv)


def affine(iv=UNIT):
    return make_builtin_phi("affine", [0.5, 0.25], iv)


def warp2(iv=UNIT):
    return make_builtin_phi("power_warp", [2], iv)


F_FAMILY = {"x^2": square, "exp": exp1, "|x|^1.5+x^2": abs15_plus_square}
PHI_FAMILY = {"identity": identity, "affine": affine, "power_warp": warp2}


@pytest.fixture
def h_linear():
    return make_builtin_h("h_linear")


@pytest.fixture
def h_one():
    return make_builtin_h("h_one")


@pytest.fixture
def acceptance_log():
    return _acceptance_lines.append


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
