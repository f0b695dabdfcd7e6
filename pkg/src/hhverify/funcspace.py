"""Functions, warp maps and weight functions used by the inequality checks.

Everything here is an immutable value built from a named parametric family.
Callables are numpy-vectorised: they accept floats or arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

GRID_POINTS = 1001
FD_RELATIVE_STEP = 1e-6

RealMap = Callable[[np.ndarray], np.ndarray]


class FuncSpaceError(ValueError):
    """Invalid family name, parameter or range violation."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise FuncSpaceError(f"interval endpoints must be finite, got [{self.a}, {self.b}]")
        if not self.a < self.b:
            raise FuncSpaceError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a

    def grid(self, n: int = GRID_POINTS) -> np.ndarray:
        return np.linspace(self.a, self.b, n)

    def contains(self, x, slack: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.a - slack) & (x <= self.b + slack)))


@dataclass(frozen=True)
class DifferentiableFunction:
    """Scalar function on an interval, with an optional exact derivative.

    When ``deriv`` is None, :meth:`derivative` falls back to finite
    differences and ``exact_derivative`` reports False so that downstream
    records can flag the value as approximate.
    """

    eval: RealMap
    domain: Interval
    label: str
    deriv: Optional[RealMap] = None

    def __post_init__(self):
        if not self.label:
            raise FuncSpaceError("functions need a non-empty label")

    def __call__(self, x):
        return self.eval(x)

    @property
    def exact_derivative(self) -> bool:
        return self.deriv is not None

    def derivative(self, x):
        if self.deriv is not None:
            return self.deriv(x)
        return _stencil_derivative(self.eval, self.domain, x)


@dataclass(frozen=True)
class PhiMap:
    """Continuous warp map of an interval into itself."""

    eval: RealMap
    domain: Interval
    label: str

    def __post_init__(self):
        if not self.label:
            raise FuncSpaceError("warp maps need a non-empty label")

    def __call__(self, x):
        return self.eval(x)

    @property
    def start(self) -> float:
        """phi(a)"""
        return float(self.eval(self.domain.a))

    @property
    def end(self) -> float:
        """phi(b)"""
        return float(self.eval(self.domain.b))

    @property
    def delta(self) -> float:
        return self.end - self.start

    def check_containment(self, n: int = GRID_POINTS) -> None:
        values = np.asarray(self.eval(self.domain.grid(n)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise FuncSpaceError(f"{self.label}: non-finite value on the check grid")
        # a few ulps of slack so that e.g. a + (b-a)*1.0 is not rejected
        slack = 8 * np.finfo(float).eps * max(abs(self.domain.a), abs(self.domain.b), 1.0)
        if not self.domain.contains(values, slack):
            raise FuncSpaceError(
                f"{self.label}: range [{values.min():.6g}, {values.max():.6g}] leaves "
                f"[{self.domain.a:g}, {self.domain.b:g}]"
            )


@dataclass(frozen=True)
class HFunction:
    """Positive weight on the open unit interval."""

    eval: RealMap
    moment_integrable: bool
    label: str

    def __post_init__(self):
        if not self.label:
            raise FuncSpaceError("weight functions need a non-empty label")

    def __call__(self, t):
        return self.eval(t)

    def reflected(self, t):
        """h(1 - t)"""
        return self.eval(1.0 - np.asarray(t, dtype=float))

    def check_positive(self, n: int = GRID_POINTS) -> None:
        t = np.linspace(0.0, 1.0, n)[1:-1]
        values = np.asarray(self.eval(t), dtype=float)
        if not np.all(np.isfinite(values) & (values > 0)):
            raise FuncSpaceError(f"{self.label}: weight must be finite and positive on (0,1)")


@dataclass(frozen=True)
class StrongParams:
    """Strong-convexity modulus ``c`` and Hoelder exponents ``q`` and ``p``."""

    c: float = 0.0
    q: float = 2.0
    p: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c >= 0):
            raise FuncSpaceError(f"modulus c must be finite and >= 0, got {self.c}")
        if not (math.isfinite(self.q) and self.q > 1):
            raise FuncSpaceError(f"exponent q must be > 1, got {self.q}")
        object.__setattr__(self, "p", self.q / (self.q - 1.0))


# -- finite differences ------------------------------------------------------


def default_step(x: float) -> float:
    return FD_RELATIVE_STEP * max(1.0, abs(x))


def numeric_derivative(f: DifferentiableFunction, x: float, step: Optional[float] = None) -> float:
    """Central difference (f(x+step) - f(x-step)) / (2 step).

    Both stencil points must lie inside the function's domain.
    """
    if step is None:
        step = default_step(x)
    if not step > 0:
        raise FuncSpaceError(f"step must be positive, got {step}")
    lo, hi = x - step, x + step
    if not (f.domain.a <= lo and hi <= f.domain.b):
        raise FuncSpaceError(
            f"stencil [{lo:g}, {hi:g}] leaves domain [{f.domain.a:g}, {f.domain.b:g}]"
        )
    return float((f.eval(hi) - f.eval(lo)) / (2.0 * step))


def _stencil_derivative(fn: RealMap, domain: Interval, x):
    # Central where the stencil fits; second-order one-sided otherwise.
    x = np.asarray(x, dtype=float)
    h = FD_RELATIVE_STEP * np.maximum(1.0, np.abs(x))
    central = (fn(x + h) - fn(x - h)) / (2 * h)
    forward = (-3 * fn(x) + 4 * fn(x + h) - fn(x + 2 * h)) / (2 * h)
    backward = (3 * fn(x) - 4 * fn(x - h) + fn(x - 2 * h)) / (2 * h)
    out = np.where(x - h < domain.a, forward, np.where(x + h > domain.b, backward, central))
    return out if out.ndim else float(out)


# -- builtin families ----------------------------------------------------------

FUNCTION_FAMILIES = ("poly", "exp_scale", "abs_power")
PHI_FAMILIES = ("identity", "affine", "power_warp")
H_FAMILIES = ("h_linear", "h_power", "h_one", "h_godunova")


def _fmt(v: float) -> str:
    return f"{v:g}"


def make_builtin_function(family: str, params: Sequence[float], domain: Interval) -> DifferentiableFunction:
    """Build a named function family with its analytic derivative.

    ``poly``       coefficients c0, c1, ... of c0 + c1 x + c2 x^2 + ...
    ``exp_scale``  single k, giving exp(k x)
    ``abs_power``  single r >= 1, giving |x|^r
    """
    params = [float(p) for p in params]
    if family == "poly":
        if not params:
            raise FuncSpaceError("poly needs at least one coefficient")
        coeffs = np.array(params)
        dcoeffs = np.polynomial.polynomial.polyder(coeffs) if len(coeffs) > 1 else np.zeros(1)

        def ev(x, _c=coeffs):
            return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), _c)

        def dv(x, _c=dcoeffs):
            x = np.asarray(x, dtype=float)
            return np.polynomial.polynomial.polyval(x, _c) + np.zeros_like(x)

        label = "poly[" + ",".join(_fmt(p) for p in params) + "]"
        return DifferentiableFunction(ev, domain, label, dv)

    if family == "exp_scale":
        if len(params) != 1:
            raise FuncSpaceError("exp_scale takes exactly one parameter k")
        (k,) = params

        def ev(x, _k=k):
            return np.exp(_k * np.asarray(x, dtype=float))

        def dv(x, _k=k):
            return _k * np.exp(_k * np.asarray(x, dtype=float))

        return DifferentiableFunction(ev, domain, f"exp[{_fmt(k)}x]", dv)

    if family == "abs_power":
        if len(params) != 1:
            raise FuncSpaceError("abs_power takes exactly one parameter r")
        (r,) = params
        if not r >= 1:
            raise FuncSpaceError(f"abs_power needs r >= 1 (derivative unbounded at 0), got {r}")

        def ev(x, _r=r):
            return np.abs(np.asarray(x, dtype=float)) ** _r

        def dv(x, _r=r):
            x = np.asarray(x, dtype=float)
            return _r * np.sign(x) * np.abs(x) ** (_r - 1)

        return DifferentiableFunction(ev, domain, f"|x|^{_fmt(r)}", dv)

    raise FuncSpaceError(f"unknown function family {family!r}; expected one of {FUNCTION_FAMILIES}")


def sum_functions(parts: Sequence[DifferentiableFunction]) -> DifferentiableFunction:
    """Pointwise sum of builtin functions sharing a domain."""
    if not parts:
        raise FuncSpaceError("cannot sum an empty list of functions")
    if len(parts) == 1:
        return parts[0]
    domain = parts[0].domain
    if any(p.domain != domain for p in parts):
        raise FuncSpaceError("summed functions must share a domain")
    parts = tuple(parts)

    def ev(x):
        return sum(p.eval(x) for p in parts)

    deriv = None
    if all(p.exact_derivative for p in parts):

        def deriv(x):
            return sum(p.deriv(x) for p in parts)

    return DifferentiableFunction(ev, domain, " + ".join(p.label for p in parts), deriv)


def make_builtin_phi(family: str, params: Sequence[float], domain: Interval) -> PhiMap:
    """Build a warp map and check that it maps the domain into itself.

    ``identity``    no parameters
    ``affine``      slope, offset: phi(x) = slope * x + offset
    ``power_warp``  k > 0: phi(x) = a + (b - a) * ((x - a) / (b - a))^k
    """
    params = [float(p) for p in params]
    a, b = domain.a, domain.b
    if family == "identity":
        if params:
            raise FuncSpaceError("identity takes no parameters")

        def ev(x):
            return np.asarray(x, dtype=float) + 0.0

        phi = PhiMap(ev, domain, "identity")
    elif family == "affine":
        if len(params) != 2:
            raise FuncSpaceError("affine takes two parameters: slope, offset")
        slope, offset = params

        def ev(x, _m=slope, _o=offset):
            return _m * np.asarray(x, dtype=float) + _o

        phi = PhiMap(ev, domain, f"affine[{_fmt(slope)},{_fmt(offset)}]")
    elif family == "power_warp":
        if len(params) != 1:
            raise FuncSpaceError("power_warp takes one parameter k")
        (k,) = params
        if not k > 0:
            raise FuncSpaceError(f"power_warp needs k > 0, got {k}")

        def ev(x, _k=k):
            u = np.clip((np.asarray(x, dtype=float) - a) / (b - a), 0.0, None)
            return a + (b - a) * u**_k

        phi = PhiMap(ev, domain, f"power_warp[{_fmt(k)}]")
    else:
        raise FuncSpaceError(f"unknown phi family {family!r}; expected one of {PHI_FAMILIES}")
    phi.check_containment()
    return phi


def make_builtin_h(family: str, s: Optional[float] = None) -> HFunction:
    if family == "h_linear":
        h = HFunction(lambda t: np.asarray(t, dtype=float) + 0.0, True, "h=t")
    elif family == "h_power":
        if s is None or not 0 < s < 1:
            raise FuncSpaceError(f"h_power needs s in (0,1), got {s}")
        s = float(s)
        h = HFunction(lambda t, _s=s: np.asarray(t, dtype=float) ** _s, True, f"h=t^{_fmt(s)}")
    elif family == "h_one":
        h = HFunction(lambda t: np.ones_like(np.asarray(t, dtype=float)), True, "h=1")
    elif family == "h_godunova":
        # |2t-1|/t behaves like 1/t at 0, so the moments diverge logarithmically
        h = HFunction(lambda t: 1.0 / np.asarray(t, dtype=float), False, "h=1/t")
    else:
        raise FuncSpaceError(f"unknown h family {family!r}; expected one of {H_FAMILIES}")
    h.check_positive()
    return h


def abs_derivative_power(f: DifferentiableFunction, q: float = 1.0) -> DifferentiableFunction:
    """The function x -> |f'(x)|^q, the object the bound theorems assume convexity of."""

    def ev(x, _f=f, _q=q):
        return np.abs(_f.derivative(x)) ** _q

    label = f"|{f.label}'|" if q == 1 else f"|{f.label}'|^{_fmt(q)}"
    return DifferentiableFunction(ev, f.domain, label)
