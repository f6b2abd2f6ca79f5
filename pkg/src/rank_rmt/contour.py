"""Rectangular contours and adaptive quadrature for the LSS CLT moments.

The asymptotic mean and variance of a centred linear spectral statistic are

    mean = -1/(2 pi i) oint f(y z) (mu(z) + [improved] mu_tilde(z)) dz
    var  = -1/(4 pi^2) oint oint f(y z1) f(y z2) sigma(z1, z2) dz1 dz2

over positively oriented contours enclosing the support of the companion
law. The variance uses two nested rectangles so ``z1 != z2`` everywhere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AnalyticityWarning, DomainError, QuadratureFailure
from .mp_theory import (
    CltMoments,
    Variant,
    _sigma_terms,
    mp_support,
    mu_integrand,
    mu_tilde_integrand,
    sigma_integrand,
)

__all__ = [
    "LssFunction",
    "log_function",
    "power_function",
    "custom_function",
    "Contour",
    "default_contour",
    "ContourRule",
    "contour_rule",
    "lss_asymptotics",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class LssFunction:
    """A test function ``f`` for a linear spectral statistic.

    ``func`` must accept complex arrays. ``positive_support`` marks functions
    such as ``log`` that are only analytic on the right half plane, so the
    contour must keep away from the origin.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    family: str = "custom"
    k: int | None = None
    positive_support: bool = False

    def __call__(self, x):
        return self.func(x)


def log_function() -> LssFunction:
    return LssFunction("log", np.log, family="log", positive_support=True)


def power_function(k: int) -> LssFunction:
    if int(k) < 1:
        raise DomainError("power requires k >= 1")
    k = int(k)
    return LssFunction(f"power({k})", lambda x: x**k, family="power", k=k)


def custom_function(func, name: str = "custom", positive_support: bool = False) -> LssFunction:
    return LssFunction(name, func, positive_support=positive_support)


@dataclass(frozen=True)
class Contour:
    """Axis-aligned rectangle ``[eta_l, eta_r] x [-v0, v0]`` traversed counterclockwise."""

    eta_l: float
    eta_r: float
    v0: float

    def __post_init__(self):
        if not (self.eta_l < self.eta_r and self.v0 > 0):
            raise DomainError(f"degenerate contour {self}")

    @property
    def vertices(self) -> list[complex]:
        return [
            complex(self.eta_r, -self.v0),
            complex(self.eta_r, self.v0),
            complex(self.eta_l, self.v0),
            complex(self.eta_l, -self.v0),
        ]

    @property
    def edges(self) -> list[tuple[complex, complex]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % 4]) for i in range(4)]

    def check_encloses(self, y0: float, positive_support: bool = False) -> None:
        a, b = mp_support(y0)
        if not self.eta_r > b:
            raise DomainError(f"eta_r={self.eta_r} must exceed the right edge {b:.6g}")
        if not self.eta_l < a:
            raise DomainError(f"eta_l={self.eta_l} must lie left of the support edge {a:.6g}")
        if y0 <= 1 and not self.eta_l < 0:
            # the companion law carries an atom 1 - y0 at the origin
            raise DomainError("for y >= 1 the contour must enclose the origin; eta_l must be negative")
        if positive_support and not self.eta_l > 0:
            raise DomainError("this f needs a contour in the right half plane (eta_l > 0)")

    def nested(self, y0: float, fraction: float = 0.6) -> "Contour":
        """A rectangle strictly inside this one, keeping ``fraction`` of each margin."""
        a, b = mp_support(y0)
        return Contour(
            eta_l=a - fraction * (a - self.eta_l),
            eta_r=b + fraction * (self.eta_r - b),
            v0=fraction * self.v0,
        )


def default_contour(y: float, f: LssFunction | None = None) -> Contour:
    """Default rectangle for ratio ``y``.

    It must enclose the support of the companion law, which is the MP law
    with ratio ``y0 = 1/y`` plus, for ``y >= 1``, an atom at the origin. For
    ``y < 1`` ``eta_l`` is half the left edge, which keeps ``log(y z)``
    analytic. For ``y >= 1`` the rectangle crosses to -0.5, which is only
    valid for entire ``f``.
    """
    y0 = 1.0 / y
    a, b = mp_support(y0)
    if y0 > 1:
        eta_l = 0.5 * a
    else:
        if f is not None and f.positive_support:
            raise DomainError(f"{f.name} is not analytic around the support at y={y}")
        eta_l = -0.5
    return Contour(eta_l=eta_l, eta_r=b + 1.0, v0=1.0)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Legendre panels


@dataclass(frozen=True)
class ContourRule:
    """Quadrature nodes and complex weights (``dz`` included) for a closed contour."""

    nodes: np.ndarray
    weights: np.ndarray
    unresolved: int = 0

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * values))


def _panel(z0: complex, z1: complex, lo: float, hi: float):
    t = lo + (hi - lo) * _GL_X
    return z0 + t * (z1 - z0), (hi - lo) * _GL_W * (z1 - z0)


def _eval(g, z):
    with np.errstate(all="ignore"):
        v = np.asarray(g(z), dtype=complex)
    if not np.all(np.isfinite(v)):
        warnings.warn("non-finite integrand on the contour; f is probably not analytic there", AnalyticityWarning, stacklevel=3)
        raise QuadratureFailure("non-finite integrand value on the contour")
    return v


def contour_rule(
    contour: Contour,
    g: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-12,
    init_panels: int = 4,
    max_depth: int = 30,
    max_panels: int = 20000,
    scale: float | None = None,
    magnitude: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ContourRule:
    """Adaptively build a rule that integrates ``g`` around ``contour``.

    ``g`` maps a 1-D array of nodes to values of shape ``(len(nodes), ...)``;
    every trailing component must reach the tolerance. A panel is split
    until its 16-point estimate agrees with the sum over its two halves to
    ``tol * scale * panel_length``, where ``scale`` is the largest integrand
    magnitude seen on the initial panels unless given, or until the
    disagreement is at rounding level for the values on the panel. Pass
    ``scale`` when ``g`` is itself the result of heavy cancellation, and
    ``magnitude`` (same shape as ``g``) when the rounding level of ``g`` is
    set by larger terms that cancel inside it.

    Panels still failing at ``max_depth`` are kept and counted in
    ``unresolved``; callers judge the result by refinement.
    """
    edges = contour.edges
    lengths = np.array([abs(b - a) for a, b in edges])

    def est(a, b, lo, hi):
        z, w = _panel(a, b, lo, hi)
        v = _eval(g, z)
        mag = np.abs(v) if magnitude is None else magnitude(z)
        aw = np.abs(w).reshape((-1,) + (1,) * (v.ndim - 1))
        return z, w, np.tensordot(w, v, axes=(0, 0)), np.sum(aw * mag, axis=0)

    stack = []
    seen = 0.0
    for (a, b), length in zip(edges, lengths):
        m = max(1, int(round(init_panels * length / lengths.max())))
        for i in range(m):
            lo, hi = i / m, (i + 1) / m
            whole = est(a, b, lo, hi)
            seen = max(seen, float(np.max(whole[3])) / (length * (hi - lo)))
            stack.append((a, b, lo, hi, 0, whole[2]))
    if scale is None:
        scale = seen

    nodes, weights = [], []
    unresolved = 0
    while stack:
        a, b, lo, hi, depth, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        zl, wl, left, l1_left = est(a, b, lo, mid)
        zr, wr, right, l1_right = est(a, b, mid, hi)
        err = np.abs(whole - (left + right))
        plen = abs(b - a) * (hi - lo)
        ok = (err <= tol * scale * plen) | (err <= 64 * np.finfo(float).eps * (l1_left + l1_right))
        if np.all(ok) or depth >= max_depth:
            unresolved += not np.all(ok)
            nodes += [zl, zr]
            weights += [wl, wr]
            if len(nodes) > max_panels:
                raise QuadratureFailure("too many quadrature panels")
        else:
            stack.append((a, b, mid, hi, depth + 1, right))
            stack.append((a, b, lo, mid, depth + 1, left))
    return ContourRule(np.concatenate(nodes), np.concatenate(weights), unresolved)


# ---------------------------------------------------------------------------
# CLT moments by contour integration


def _mean(f, y, variant, contour, tol):
    y0 = 1.0 / y

    def g(z):
        h = mu_integrand(y0, z)
        if variant is Variant.IMPROVED:
            h = h + mu_tilde_integrand(y, z)
        return f(y * z) * h

    rule = contour_rule(contour, g, tol=tol)
    val = -rule.integrate(g(rule.nodes)) / (2j * math.pi)
    return val


def _variance(f, y, outer, inner, tol):
    y0 = 1.0 / y
    # Sample the outer contour coarsely; the inner rule must integrate
    # sigma(z1, .) accurately for every one of these z1 at once.
    probe = np.concatenate([_panel(a, b, 0.0, 1.0)[0] for a, b in outer.edges])

    def g_inner(z2):
        return f(y * z2)[:, None] * sigma_integrand(y0, probe[None, :], z2[:, None])

    def mag_inner(z2):
        terms = _sigma_terms(y0, probe[None, :], z2[:, None])
        return np.abs(f(y * z2))[:, None] * sum(np.abs(t) for t in terms)

    rule_in = contour_rule(inner, g_inner, tol=tol, magnitude=mag_inner)
    fw_in = rule_in.weights * f(y * rule_in.nodes)

    def g_outer(z1):
        kern = sigma_integrand(y0, z1[:, None], rule_in.nodes[None, :])
        return f(y * z1) * (kern @ fw_in)

    # J(z1) = oint f sigma dz2 may cancel to nothing (f(x) = x), so the
    # tolerance is set by the size of the terms being summed
    kern = sigma_integrand(y0, probe[:, None], rule_in.nodes[None, :])
    scale = float(np.max(np.abs(f(y * probe)) * (np.abs(kern) @ np.abs(fw_in))))
    rule_out = contour_rule(outer, g_outer, tol=tol, scale=scale)
    val = -rule_out.integrate(g_outer(rule_out.nodes)) / (4.0 * math.pi**2)
    return val


def lss_asymptotics(
    f: LssFunction,
    y: float,
    variant: Variant | str = Variant.CLASSICAL,
    contour: Contour | None = None,
    tol: float = 1e-8,
) -> CltMoments:
    """Asymptotic mean and variance of ``sum f(lambda_i)`` by contour integration.

    The quadrature tolerance is tightened until two successive estimates of
    both moments agree to ``tol`` (relative, or absolute when the moment is
    below 1).

    Raises
    ------
    QuadratureFailure
        If the estimates do not settle.
    """
    if not y > 0:
        raise DomainError("y must be positive")
    variant = Variant(variant)
    y0 = 1.0 / y
    contour = contour or default_contour(y, f)
    contour.check_encloses(y0, f.positive_support)
    inner = contour.nested(y0)

    prev = None
    for qtol in (1e-9, 1e-11, 1e-13):
        cur = (_mean(f, y, variant, contour, qtol), _variance(f, y, contour, inner, qtol))
        if prev is not None:
            diffs = [abs(c - p) / max(1.0, abs(c)) for c, p in zip(cur, prev)]
            if max(diffs) < tol:
                mean, var = cur
                return CltMoments(float(mean.real), float(var.real), f.name, variant, y)
        prev = cur
    raise QuadratureFailure(f"contour moments for {f.name} at y={y} did not settle to {tol}")
