"""Sampled certification of strong phi_h-convexity with modulus c.

A function g is strongly phi_h-convex with modulus c when, for all x, y in the
domain and t in (0, 1),

    g(t phi(x) + (1-t) phi(y))
        <= h(t) g(phi(x)) + h(1-t) g(phi(y)) - c t (1-t) (phi(x) - phi(y))^2.

The certifier evaluates the defect (left side minus right side) over a fixed
lattice plus seeded random triples. A passing certificate is evidence, not a
proof: it only says no sampled triple violates the inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcspace import DifferentiableFunction, FuncSpaceError, HFunction, PhiMap

GRID_XY = 21
GRID_T = 19
RELATIVE_SLACK = 1e-9
# max_modulus ignores triples whose denominator t(1-t)(phi x - phi y)^2 is below
# this fraction of width^2; their ratios are dominated by rounding.
MIN_RELATIVE_DENOMINATOR = 1e-8


class CertificationError(ValueError):
    pass


@dataclass(frozen=True)
class ConvexityCertificate:
    holds: bool
    max_violation: float
    worst_point: tuple[float, float, float]
    samples_used: int
    seed: int
    c: float
    slack: float
    nonnegative: bool
    function: str = ""
    phi: str = ""
    h: str = ""


@dataclass(frozen=True)
class SampledTerms:
    """All pieces of the defect at every sampled triple."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    chord_gap: np.ndarray  # g(mid) - h(t) g(phi x) - h(1-t) g(phi y)
    spread: np.ndarray  # t (1-t) (phi x - phi y)^2
    scale: float
    nonnegative: bool

    def defect(self, c: float) -> np.ndarray:
        return self.chord_gap + c * self.spread


def sample_triples(phi: PhiMap, samples: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """21 x 21 x 19 lattice (t strictly inside (0,1)) followed by ``samples`` random triples."""
    if samples < 1:
        raise CertificationError(f"samples must be >= 1, got {samples}")
    dom = phi.domain
    xs = np.linspace(dom.a, dom.b, GRID_XY)
    ts = np.arange(1, GRID_T + 1) / (GRID_T + 1)
    gx, gy, gt = np.meshgrid(xs, xs, ts, indexing="ij")
    rng = np.random.default_rng(seed)
    rx = rng.uniform(dom.a, dom.b, samples)
    ry = rng.uniform(dom.a, dom.b, samples)
    rt = rng.random(samples)
    rt[rt == 0.0] = 0.5  # open interval
    return (
        np.concatenate([gx.ravel(), rx]),
        np.concatenate([gy.ravel(), ry]),
        np.concatenate([gt.ravel(), rt]),
    )


def sampled_terms(g: DifferentiableFunction, phi: PhiMap, h: HFunction, samples: int, seed: int) -> SampledTerms:
    x, y, t = sample_triples(phi, samples, seed)
    px = np.asarray(phi(x), dtype=float)
    py = np.asarray(phi(y), dtype=float)
    mid = t * px + (1 - t) * py
    gx = np.asarray(g(px), dtype=float)
    gy = np.asarray(g(py), dtype=float)
    gm = np.asarray(g(mid), dtype=float)
    hv = np.asarray(h(t), dtype=float)
    hr = np.asarray(h.reflected(t), dtype=float)
    for name, arr in (("g", gx), ("g", gy), ("g", gm), ("h", hv), ("h", hr)):
        if not np.all(np.isfinite(arr)):
            raise FuncSpaceError(f"non-finite {name} value while sampling {g.label} under {phi.label}")
    chord_gap = gm - hv * gx - hr * gy
    spread = t * (1 - t) * (px - py) ** 2
    scale = float(max(np.max(np.abs(gx)), np.max(np.abs(gy))))
    nonneg = bool(min(gx.min(), gy.min(), gm.min()) >= 0)
    return SampledTerms(x, y, t, chord_gap, spread, scale, nonneg)


def certify(
    g: DifferentiableFunction,
    phi: PhiMap,
    h: HFunction,
    c: float,
    samples: int = 4096,
    seed: int = 42,
) -> ConvexityCertificate:
    terms = sampled_terms(g, phi, h, samples, seed)
    return _certificate(terms, g, phi, h, c, samples, seed)


def _certificate(terms: SampledTerms, g, phi, h, c, samples, seed) -> ConvexityCertificate:
    d = terms.defect(c)
    i = int(np.argmax(d))
    slack = RELATIVE_SLACK * terms.scale
    worst = float(d[i])
    return ConvexityCertificate(
        holds=worst <= slack,
        max_violation=worst,
        worst_point=(float(terms.x[i]), float(terms.y[i]), float(terms.t[i])),
        samples_used=int(d.size),
        seed=seed,
        c=float(c),
        slack=slack,
        nonnegative=terms.nonnegative,
        function=g.label,
        phi=phi.label,
        h=h.label,
    )


def max_modulus(
    g: DifferentiableFunction,
    phi: PhiMap,
    h: HFunction,
    samples: int = 4096,
    seed: int = 42,
) -> float:
    """Largest c, clamped at 0, for which no sampled triple violates the inequality."""
    terms = sampled_terms(g, phi, h, samples, seed)
    floor = MIN_RELATIVE_DENOMINATOR * phi.domain.width**2
    usable = terms.spread > floor
    if not np.any(usable):
        raise CertificationError(f"{phi.label} is degenerate: phi(x) = phi(y) at every sampled pair")
    ratios = -terms.chord_gap[usable] / terms.spread[usable]
    return max(0.0, float(np.min(ratios)))
