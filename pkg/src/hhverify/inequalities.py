"""Both sides of the integral identities and Hermite-Hadamard type bounds.

Every quantity is taken between phi(a) and phi(b) for a warp map phi. The
trapezoid defect |(f(phi a) + f(phi b))/2 - mean| is bounded by the first two
theorems, the midpoint defect |mean - f((phi a + phi b)/2)| by the last two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .convexity import ConvexityCertificate
from .funcspace import (
    DifferentiableFunction,
    HFunction,
    Interval,
    PhiMap,
    StrongParams,
    make_builtin_h,
)
from .quadrature import DEFAULT_TOL, beta, incomplete_beta_half, integrate, integrate_open

VERDICT_FACTOR = 10.0


class PreconditionError(ValueError):
    """A hypothesis of the requested identity or bound does not hold."""


@dataclass(frozen=True)
class Gaps:
    left_gap: float
    right_gap: float


@dataclass(frozen=True)
class BoundConstants:
    delta_phi: float
    A: Optional[float] = None
    G: Optional[float] = None
    G_proof_variant: Optional[float] = None


@dataclass(frozen=True)
class Thm2Result:
    bound: float
    constants: BoundConstants


@dataclass(frozen=True)
class Thm4Result:
    bound_printed: float
    bound_proof: float
    constants: BoundConstants
    first_half: float
    second_half: float

    @property
    def loosest(self) -> float:
        return max(self.bound_printed, self.bound_proof)


@dataclass(frozen=True)
class CorollaryResult:
    id: str
    printed_value: float
    theorem_value: float
    discrepancy: float

    def flagged(self, slack: float) -> bool:
        if not math.isfinite(self.discrepancy):
            return False
        return abs(self.discrepancy) > slack * max(1.0, abs(self.theorem_value))


@dataclass(frozen=True)
class Tolerances:
    quad_tol: float
    slack: float


@dataclass(frozen=True)
class VerificationRecord:
    case_label: str
    check: str
    lhs: float
    bound: float
    holds: bool
    margin: float
    preconditions_ok: bool
    reason: str
    tolerances: Tolerances
    seed: int
    certificate: Optional[ConvexityCertificate] = None
    discrepancy: Optional[float] = None
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.preconditions_ok:
            return "skip"
        return "passed" if self.holds else "failed"


def make_record(
    case_label: str,
    check: str,
    lhs: float,
    bound: float,
    *,
    quad_tol: float,
    seed: int,
    preconditions_ok: bool = True,
    reason: str = "",
    certificate: Optional[ConvexityCertificate] = None,
    discrepancy: Optional[float] = None,
    details: Optional[dict] = None,
) -> VerificationRecord:
    """Build a record; the verdict is lhs <= bound + slack, only when preconditions hold.

    slack is ``VERDICT_FACTOR * quad_tol`` plus the certificate's own slack.
    """
    slack = VERDICT_FACTOR * quad_tol + (certificate.slack if certificate is not None else 0.0)
    lhs = float(lhs)
    bound = float(bound)
    holds = bool(preconditions_ok and math.isfinite(lhs) and math.isfinite(bound) and lhs <= bound + slack)
    return VerificationRecord(
        case_label=case_label,
        check=check,
        lhs=lhs,
        bound=bound,
        holds=holds,
        margin=bound - lhs,
        preconditions_ok=preconditions_ok,
        reason=reason,
        tolerances=Tolerances(quad_tol, slack),
        seed=seed,
        certificate=certificate,
        discrepancy=discrepancy,
        details=dict(details or {}),
    )


# -- helpers ---------------------------------------------------------------------


def _signed_integral(f: DifferentiableFunction, lo: float, hi: float, tol: float) -> float:
    if lo == hi:
        return 0.0
    if lo < hi:
        return integrate(f, lo, hi, tol).value
    return -integrate(f, hi, lo, tol).value


def _require_increasing(phi: PhiMap) -> float:
    delta = phi.delta
    if not delta > 0:
        raise PreconditionError(f"{phi.label}: need phi(a) < phi(b), got delta = {delta:.6g}")
    return delta


def _require_integrable(h: HFunction) -> None:
    if not h.moment_integrable:
        raise PreconditionError(f"{h.label}: weighted moments of h diverge")


def _dprime(f: DifferentiableFunction, x: float) -> float:
    return abs(float(f.derivative(x)))


def _root(x: float, q: float) -> float:
    return x ** (1.0 / q) if x >= 0 else math.nan


def _mean_value(f: DifferentiableFunction, lo: float, hi: float, tol: float) -> float:
    return _signed_integral(f, lo, hi, tol) / (hi - lo)


# -- classical and phi Hermite-Hadamard --------------------------------------------------


def hh_classical_gap(f: DifferentiableFunction, iv: Optional[Interval] = None, tol: float = DEFAULT_TOL) -> Gaps:
    """Left gap mean - f(mid) and right gap (f(a)+f(b))/2 - mean; both >= 0 for convex f."""
    iv = iv or f.domain
    mean = _mean_value(f, iv.a, iv.b, tol)
    left = mean - float(f(0.5 * (iv.a + iv.b)))
    right = 0.5 * (float(f(iv.a)) + float(f(iv.b))) - mean
    return Gaps(left, right)


def hh_phi_gap(f: DifferentiableFunction, phi: PhiMap, tol: float = DEFAULT_TOL) -> Gaps:
    _require_increasing(phi)
    return hh_classical_gap(f, Interval(phi.start, phi.end), tol)


# -- identities ----------------------------------------------------------------------------


def lemma1_sides(f: DifferentiableFunction, phi: PhiMap, c: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(trapezoid side, kernel side) of the first integral identity."""
    lo, hi = phi.start, phi.end
    delta = hi - lo
    if delta == 0:
        raise PreconditionError(f"{phi.label}: phi(a) = phi(b)")
    lhs = 0.5 * (float(f(lo)) + float(f(hi))) - _signed_integral(f, lo, hi, tol) / delta
    spread = c * delta**2

    def kernel(t):
        return (2 * t - 1) * (f.derivative(t * hi + (1 - t) * lo) + spread * t * (1 - t))

    rhs = 0.5 * delta * integrate(kernel, 0.0, 1.0, tol, points=[0.5]).value
    return lhs, rhs


def lemma1_residual(f: DifferentiableFunction, phi: PhiMap, c: float, tol: float = DEFAULT_TOL) -> float:
    lhs, rhs = lemma1_sides(f, phi, c, tol)
    return lhs - rhs


def lemma2_sides(f: DifferentiableFunction, phi: PhiMap, c: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(midpoint side, kernel side) of the second integral identity.

    The kernel runs from phi(b) at t=0 to phi(a) at t=1; its modulus terms
    contribute +-5 c delta^2 / 192 on the two halves and cancel.
    """
    lo, hi = phi.start, phi.end
    delta = hi - lo
    if delta == 0:
        raise PreconditionError(f"{phi.label}: phi(a) = phi(b)")
    lhs = _signed_integral(f, lo, hi, tol) / delta - float(f(0.5 * (lo + hi)))
    spread = c * delta**2

    def kernel(t):
        return f.derivative(t * lo + (1 - t) * hi) + spread * t * (1 - t)

    first = integrate(lambda t: t * kernel(t), 0.0, 0.5, tol / 2).value
    second = integrate(lambda t: (t - 1) * kernel(t), 0.5, 1.0, tol / 2).value
    return lhs, delta * (first + second)


def lemma2_residual(f: DifferentiableFunction, phi: PhiMap, c: float, tol: float = DEFAULT_TOL) -> float:
    lhs, rhs = lemma2_sides(f, phi, c, tol)
    return lhs - rhs


# -- defects ---------------------------------------------------------------------------------


def trapezoid_defect(f: DifferentiableFunction, phi: PhiMap, tol: float = DEFAULT_TOL) -> float:
    return abs(hh_phi_gap(f, phi, tol).right_gap)


def midpoint_defect(f: DifferentiableFunction, phi: PhiMap, tol: float = DEFAULT_TOL) -> float:
    return abs(hh_phi_gap(f, phi, tol).left_gap)


# -- weight moments -----------------------------------------------------------------------------


def trapezoid_moment(h: HFunction, tol: float = DEFAULT_TOL) -> float:
    """Integral of |2t - 1| h(t) over (0, 1)."""
    _require_integrable(h)
    return integrate_open(lambda t: abs(2 * t - 1) * h(t), 0.0, 1.0, tol, points=[0.5]).value


def midpoint_moment(h: HFunction, tol: float = DEFAULT_TOL) -> float:
    """Integral of t [h(t) + h(1-t)] over (0, 1/2)."""
    _require_integrable(h)
    return integrate_open(lambda t: t * (h(t) + h.reflected(t)), 0.0, 0.5, tol).value


def h_mass(h: HFunction, lo: float = 0.0, hi: float = 1.0, tol: float = DEFAULT_TOL) -> float:
    _require_integrable(h)
    return integrate_open(h, lo, hi, tol).value


def h_reflected_mass(h: HFunction, lo: float, hi: float, tol: float = DEFAULT_TOL) -> float:
    _require_integrable(h)
    return integrate_open(h.reflected, lo, hi, tol).value


# -- bounds ----------------------------------------------------------------------------------------


def thm1_bound(f: DifferentiableFunction, phi: PhiMap, h: HFunction, tol: float = DEFAULT_TOL) -> float:
    """Trapezoid bound for |f'| strongly phi_h-convex; independent of the modulus."""
    delta = _require_increasing(phi)
    moment = trapezoid_moment(h, tol)
    return 0.5 * delta * (_dprime(f, phi.end) + _dprime(f, phi.start)) * moment


def thm2_constant(params: StrongParams, delta: float) -> float:
    c, q = params.c, params.q
    if c == 0:
        return 0.0
    return c**q * delta ** (2 * q) * beta(q + 1, q + 1) - c / 6 * delta**2


def thm2_bound(
    f: DifferentiableFunction, phi: PhiMap, h: HFunction, params: StrongParams, tol: float = DEFAULT_TOL
) -> Thm2Result:
    """Hoelder form of the trapezoid bound for |f'|^q strongly phi_h-convex."""
    delta = _require_increasing(phi)
    q, p = params.q, params.p
    A = thm2_constant(params, delta)
    if params.c > 0 and not A > 0:
        raise PreconditionError(f"constant A = {A:.6g} must be positive when c > 0")
    ends = _dprime(f, phi.end) ** q + _dprime(f, phi.start) ** q
    bracket = ends * h_mass(h, tol=tol) + A
    bound = delta / 2 ** (1 / q) * (1 / (p + 1)) ** (1 / p) * _root(bracket, q)
    return Thm2Result(bound, BoundConstants(delta_phi=delta, A=A))


def thm3_bound(f: DifferentiableFunction, phi: PhiMap, h: HFunction, tol: float = DEFAULT_TOL) -> float:
    """Midpoint bound for |f'| strongly phi_h-convex."""
    delta = _require_increasing(phi)
    moment = midpoint_moment(h, tol)
    return delta * (_dprime(f, phi.start) + _dprime(f, phi.end)) * moment


def thm4_constants(params: StrongParams, delta: float) -> tuple[float, float]:
    """(G as stated with a linear c, the c^q variant the Hoelder step produces)."""
    c, q = params.c, params.q
    if c == 0:
        return 0.0, 0.0
    half_beta = incomplete_beta_half(q)
    tail = c / 12 * delta**2
    return c * delta ** (2 * q) * half_beta - tail, c**q * delta ** (2 * q) * half_beta - tail


def thm4_bound(
    f: DifferentiableFunction, phi: PhiMap, h: HFunction, params: StrongParams, tol: float = DEFAULT_TOL
) -> Thm4Result:
    """Hoelder form of the midpoint bound for |f'|^q strongly phi_h-convex.

    The stated prefactor is delta / 2^(1/q); the last line of the derivation
    has delta / 2. Both are returned, each built with the stated G.
    """
    delta = _require_increasing(phi)
    q, p = params.q, params.p
    G, G_variant = thm4_constants(params, delta)
    if params.c > 0 and not G > 0:
        raise PreconditionError(f"constant G = {G:.6g} must be positive when c > 0")
    fa = _dprime(f, phi.start) ** q
    fb = _dprime(f, phi.end) ** q
    first = fa * h_mass(h, 0.0, 0.5, tol) + fb * h_reflected_mass(h, 0.0, 0.5, tol) + G
    second = fa * h_mass(h, 0.5, 1.0, tol) + fb * h_reflected_mass(h, 0.5, 1.0, tol) + G
    holder = (1 / (p + 1)) ** (1 / p) * (_root(first, q) + _root(second, q))
    return Thm4Result(
        bound_printed=delta / 2 ** (1 / q) * holder,
        bound_proof=delta / 2 * holder,
        constants=BoundConstants(delta_phi=delta, G=G, G_proof_variant=G_variant),
        first_half=first,
        second_half=second,
    )


# -- corollaries ---------------------------------------------------------------------------------

# id -> (parent theorem, h family)
COROLLARIES = {
    "c1": ("thm1", "h_linear"),
    "c2": ("thm1", "h_power"),
    "c3": ("thm1", "h_one"),
    "k1": ("thm2", "h_linear"),
    "k2": ("thm2", "h_power"),
    "k3": ("thm2", "h_one"),
    "c4": ("thm3", "h_linear"),
    "c5": ("thm3", "h_power"),
    "c6": ("thm3", "h_one"),
    "r10": ("thm4", "h_linear"),
    "r20": ("thm4", "h_power"),
    "r30": ("thm4", "h_one"),
}


def _printed_corollary(cid: str, delta: float, fa: float, fb: float, params: StrongParams, s: float) -> float:
    # fa = |f'(phi a)|, fb = |f'(phi b)|; formulas transcribed term by term
    q, p = params.q, params.p
    holder = delta / 2 ** (1 / q) * (1 / (p + 1)) ** (1 / p)
    if cid == "c1":
        return delta * (fb + fa) / 8
    if cid == "c2":
        return delta / 2 * (s + 1 / 2 ** (s + 1)) * (fb + fa) / ((s + 1) * (s + 2))
    if cid == "c3":
        return delta / 2 * (fb + fa) / 2
    if cid in ("k1", "k2", "k3"):
        A = thm2_constant(params, delta)
        ends = fb**q + fa**q
        inner = {"k1": ends / 2, "k2": ends / (s + 1), "k3": ends}[cid]
        return holder * _root(inner + A, q)
    if cid == "c4":
        return delta * (fa + fb) / 8
    if cid == "c5":
        return delta * (1 + (s + 3) / 2 ** (s + 2)) * (fa + fb) / ((s + 1) * (s + 2))
    if cid == "c6":
        return delta * (fa + fb) / 4
    G, _ = thm4_constants(params, delta)
    aq, bq = fa**q, fb**q
    if cid == "r10":
        return holder * (_root((aq + 3 * bq) / 8 + G, q) + _root((3 * aq + bq) / 8 + G, q))
    if cid == "r20":
        near = 1 / (2 ** (s + 1) * (s + 1))
        far = (1 - 1 / 2 ** (s + 1)) / (s + 1)
        return holder * (_root(near * aq + far * bq + G, q) + _root(far * aq + near * bq + G, q))
    if cid == "r30":
        return delta / 2 ** (1 / q - 1) * (1 / (p + 1)) ** (1 / p) * _root((bq + aq) / 2 + G, q)
    raise ValueError(f"unknown corollary {cid!r}")


def corollary_bound(
    cid: str,
    f: DifferentiableFunction,
    phi: PhiMap,
    params: StrongParams,
    s: float = 0.5,
    tol: float = DEFAULT_TOL,
) -> CorollaryResult:
    """Evaluate a corollary twice: as printed, and through its parent theorem.

    ``s`` is the exponent of h(t) = t^s for the c2, k2, c5 and r20 cases.
    A nonzero discrepancy means the printed closed form disagrees with the
    theorem evaluated by quadrature; the theorem path is authoritative.
    """
    if cid not in COROLLARIES:
        raise ValueError(f"unknown corollary {cid!r}; expected one of {sorted(COROLLARIES)}")
    parent, family = COROLLARIES[cid]
    h = make_builtin_h(family, s if family == "h_power" else None)
    if parent == "thm1":
        theorem = thm1_bound(f, phi, h, tol)
    elif parent == "thm2":
        theorem = thm2_bound(f, phi, h, params, tol).bound
    elif parent == "thm3":
        theorem = thm3_bound(f, phi, h, tol)
    else:
        theorem = thm4_bound(f, phi, h, params, tol).bound_printed
    delta = phi.delta
    printed = _printed_corollary(cid, delta, _dprime(f, phi.start), _dprime(f, phi.end), params, s)
    return CorollaryResult(cid, printed, theorem, printed - theorem)


def corollary_h(cid: str, s: float = 0.5) -> HFunction:
    family = COROLLARIES[cid][1]
    return make_builtin_h(family, s if family == "h_power" else None)
