"""Convolutions: pointwise self-convolution of the dip density, window masses
of convolutions of mixtures, n-fold powers, kernel smoothing, and a
brute-force Riemann oracle for cross-validation.

Window masses of a convolution expand bilinearly over component pairs.
Atoms shift the window; absolutely continuous pairs reduce to an outer
integral of one side's density against the other side's shifted window
masses, with the shifted evaluation point kept in scale-split form so dip
phases survive the subtraction exactly.

For the dip-density pair at points too large to traverse numerically the
integral is split at ``L = (log x)^beta``: the two near-edge pieces are
computed numerically (they are equal by symmetry) and the middle piece is
covered by the envelope bound ``2 K^2 (2/x)^(1+alpha) L^(-alpha) / alpha``,
so the result is a certified (lower, upper) bracket rather than a point
value.  Downstream ratio probes propagate such brackets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .logsum import LOG_ZERO, log_add, log_sum
from .quadrature import QuadratureSpec, integrate_log
from .scaledcore import ModelParams, PeriodicProfile, ScaledSum, phi_window_log_eval
from .measures import (
    KernelAC,
    MixtureDistribution,
    ParetoAC,
    PhiAC,
    PiecewiseLinearDensity,
    UniformAC,
    dip_hints,
)


@dataclass(frozen=True)
class LogBracket:
    """Certified log-scale interval [lo, hi] for a positive quantity."""

    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def bracket_pair(v) -> tuple:
    if isinstance(v, LogBracket):
        return v.lo, v.hi
    return v, v


def _combine_log_terms(terms):
    """log-sum-exp over a list of floats or LogBrackets."""
    if any(isinstance(t, LogBracket) for t in terms):
        lo = log_sum([bracket_pair(t)[0] for t in terms])
        hi = log_sum([bracket_pair(t)[1] for t in terms])
        if hi - lo < 1e-15:
            return lo
        return LogBracket(lo, hi)
    return log_sum(terms)


def _shift_terms(terms, delta: float):
    if isinstance(terms, LogBracket):
        return LogBracket(terms.lo + delta, terms.hi + delta)
    return terms + delta


@dataclass(frozen=True)
class ConvPlan:
    """Strategy constants for convolution evaluation.

    ``split_threshold`` is the point size beyond which the dip-density pair
    switches from full numeric integration to the split-plus-bracket form.
    """

    params: ModelParams
    split_threshold: float = 1e8

    @property
    def log_split(self) -> float:
        return math.log(self.split_threshold)


def _as_point(x, b: float) -> ScaledSum:
    return x if isinstance(x, ScaledSum) else ScaledSum.from_float(float(x), b)


def _width(w) -> float:
    c = w.c if hasattr(w, "c") else float(w)
    if not (c > 0.0):
        raise ParameterError("window width must be positive")
    return c


# ---------------------------------------------------------------------------
# dip-density self-convolution at a point
# ---------------------------------------------------------------------------

def phi_self_conv_at(profile: PeriodicProfile, x, quad: QuadratureSpec,
                     plan: ConvPlan | None = None):
    """log of (phi (x) phi)(x) = log 2 int_1^{x/2} phi(x-u) phi(u) du.

    Returns a float for representable points, a :class:`LogBracket` beyond
    the split threshold.
    """
    p = profile.params
    plan = plan or ConvPlan(p)
    x = _as_point(x, p.b)
    if x.sign() <= 0:
        return LOG_ZERO
    xlog = x.log_abs()
    if xlog <= math.log(2.0):
        return LOG_ZERO

    ev = phi_window_log_eval(profile, x)
    plain = phi_window_log_eval(profile, ScaledSum.zero(p.b))

    def integrand(u):
        a = plain(u)
        if a == LOG_ZERO:
            return LOG_ZERO
        b = ev(-u)
        if b == LOG_ZERO:
            return LOG_ZERO
        return a + b

    if xlog > plan.log_split:
        L = xlog ** p.beta
        if 2.0 * L >= math.exp(min(xlog, 700.0)):
            raise ParameterError("split point exceeds x/2; point too small for split mode")
        hints = dip_hints(p, 1.0, L)
        numeric = math.log(2.0) + integrate_log(integrand, 1.0, L, quad, hints=hints)
        k_log = math.log(profile.plateau)
        bound = (math.log(2.0) + 2.0 * k_log
                 + (1.0 + p.alpha) * (math.log(2.0) - xlog)
                 - math.log(p.alpha) - p.alpha * p.beta * math.log(xlog))
        return LogBracket(numeric, log_add(numeric, bound))

    xv = x.value()
    half = 0.5 * xv
    if half <= 1.0:
        return LOG_ZERO
    hints = dip_hints(p, 1.0, half)
    hints += [xv - u for u in dip_hints(p, half, xv) ]
    L = xlog ** p.beta
    if 1.0 < L < half:
        hints.append(L)
    return math.log(2.0) + integrate_log(
        integrand, 1.0, half, quad, hints=[t for t in hints if 1.0 < t < half])


# ---------------------------------------------------------------------------
# window masses of convolutions
# ---------------------------------------------------------------------------

def conv_local_mass(d1: MixtureDistribution, d2: MixtureDistribution, x, w,
                    quad: QuadratureSpec, plan: ConvPlan | None = None):
    """log of (d1 * d2)((x, x+c]); LogBracket when a far-tail bound is active."""
    c = _width(w)
    b = d1.base
    x = _as_point(x, b)
    terms = []
    for w1, c1 in d1.components:
        if w1 == 0.0:
            continue
        for w2, c2 in d2.components:
            if w2 == 0.0:
                continue
            pair = _pair_window_mass(c1, c2, x, c, quad, plan)
            if pair == LOG_ZERO:
                continue
            terms.append(_shift_terms(pair, math.log(w1) + math.log(w2)))
    return _combine_log_terms(terms) if terms else LOG_ZERO


def _atoms_of(comp):
    return comp.atoms()


def _pair_window_mass(c1, c2, x: ScaledSum, c: float, quad, plan):
    if c1.is_atomic:
        terms = []
        for loc, aw in _atoms_of(c1):
            if aw <= 0.0:
                continue
            pt = x.sub(loc) if isinstance(loc, ScaledSum) else x.add_offset(-loc)
            m = c2.log_window_mass(pt, c, quad)
            if m != LOG_ZERO:
                terms.append(_shift_terms(m, math.log(aw)))
        return _combine_log_terms(terms) if terms else LOG_ZERO
    if c2.is_atomic:
        return _pair_window_mass(c2, c1, x, c, quad, plan)

    if isinstance(c1, PhiAC) and isinstance(c2, PhiAC):
        plan = plan or ConvPlan(c1.params)
        if x.sign() > 0 and x.log_abs() > plan.log_split:
            return _phi_pair_split(c1, c2, x, c, quad, plan)

    lo1, hi1 = c1.support_bounds()
    lo2, hi2 = c2.support_bounds()
    outer, inner = c1, c2
    olo, ohi, ilo = lo1, hi1, lo2
    if not math.isfinite(hi1) and math.isfinite(hi2):
        outer, inner = c2, c1
        olo, ohi, ilo = lo2, hi2, lo1

    xv = x.value()
    if math.isfinite(xv):
        ohi = min(ohi, xv + c - ilo)
    if not math.isfinite(ohi):
        raise ParameterError(
            "convolution pair with two unbounded supports beyond float range "
            "is only handled for the dip-density pair")
    if ohi <= olo:
        return LOG_ZERO

    dens = outer.log_density_eval(ScaledSum.zero(x.b), quad)

    def f(u):
        a = dens(u)
        if a == LOG_ZERO:
            return LOG_ZERO
        m = inner.log_window_mass(x.add_offset(-u), c, quad)
        if m == LOG_ZERO:
            return LOG_ZERO
        return a + m

    hints = outer.density_hints(ScaledSum.zero(x.b), olo, ohi)
    if math.isfinite(xv):
        hints.extend(_inner_cross_hints(inner, xv, c, olo, ohi))
        hints.append(xv + c - ilo)
        hints.append(xv - ilo)
    return integrate_log(f, olo, ohi, quad,
                         hints=[t for t in hints if olo < t < ohi])


def _structure_points(comp, xv, c, olo, ohi):
    """Absolute x-points where a component's mass changes character."""
    from .measures import Tilted

    pts = []
    if isinstance(comp, Tilted):
        for w, sub in comp.base.components:
            if w > 0.0:
                pts.extend(_structure_points(sub, xv, c, olo, ohi))
        return pts
    if comp.is_atomic:
        for loc, aw in comp.atoms():
            if aw <= 0.0:
                continue
            lv = loc.value() if isinstance(loc, ScaledSum) else loc
            if math.isfinite(lv):
                pts.append(lv)
        return pts
    if isinstance(comp, PhiAC):
        lo_inner = max(xv - ohi, 0.25)
        pts.extend(dip_hints(comp.params, lo_inner, xv + c - olo + 1.0))
        pts.append(1.0)
        return pts
    lo, hi = comp.support_bounds()
    if math.isfinite(lo):
        pts.append(lo)
    if math.isfinite(hi):
        pts.append(hi)
    if isinstance(comp, KernelAC):
        blo, _ = comp.base.support_bounds()
        if math.isfinite(blo):
            pts.extend(blo + k for k in comp.kernel.knots)
    return pts


def _inner_cross_hints(inner, xv, c, olo, ohi):
    """Outer abscissae where (x - u) lands on the inner component's structure."""
    pts = []
    for s in _structure_points(inner, xv, c, olo, ohi):
        for shift in (0.0, c):
            u = xv + shift - s
            if olo < u < ohi:
                pts.append(u)
    return pts


def _phi_pair_split(c1: PhiAC, c2: PhiAC, x: ScaledSum, c: float, quad, plan):
    """Split-plus-bracket window mass for the dip-density pair at huge x.

    (phi1*phi2)((x, x+c]) = 2 * int_1^L f1(u) F2((x-u, x+c-u]) du + middle,
    where L = (log x)^beta, the doubling is exact because {u <= L} and
    {v <= L} contribute symmetrically and cannot overlap inside the window,
    and 0 <= middle <= 2 c K^2 (2/(x-c))^(1+alpha) L^(-alpha) / alpha in
    normalized units.
    """
    p = c1.params
    xlog = x.log_abs()
    L = xlog ** p.beta
    if 2.0 * L >= plan.split_threshold:
        raise ParameterError("split point too large relative to the threshold")

    dens = c1.log_density_eval(ScaledSum.zero(x.b), quad)

    def f(u):
        a = dens(u)
        if a == LOG_ZERO:
            return LOG_ZERO
        m = c2.log_window_mass(x.add_offset(-u), c, quad)
        if m == LOG_ZERO:
            return LOG_ZERO
        return a + m

    hints = dip_hints(p, 1.0, L)
    numeric = math.log(2.0) + integrate_log(f, 1.0, L, quad,
                                            hints=[t for t in hints if 1.0 < t < L])
    k_log = math.log(c1.profile.plateau)
    log_x_minus_c = xlog + math.log1p(-c * math.exp(-min(xlog, 700.0)))
    bound = (math.log(2.0) + math.log(c) + 2.0 * k_log - c1.m_log - c2.m_log
             + (1.0 + p.alpha) * (math.log(2.0) - log_x_minus_c)
             - math.log(p.alpha) - p.alpha * math.log(L))
    return LogBracket(numeric, log_add(numeric, bound))


def nfold_local_mass(dist: MixtureDistribution, n: int, x, w,
                     quad: QuadratureSpec, plan: ConvPlan | None = None):
    """log of dist^{n*}((x, x+c]) for n in {1, 2, 3}."""
    if n not in (1, 2, 3):
        raise ParameterError(f"n-fold masses support n in {{1,2,3}}, got {n}")
    c = _width(w)
    x = _as_point(x, dist.base)
    if n == 1:
        return dist.log_window_mass(x, c, quad)
    if n == 2:
        return conv_local_mass(dist, dist, x, c, quad, plan)

    terms = []
    for wt, comp in dist.components:
        if wt == 0.0:
            continue
        lw = math.log(wt)
        if comp.is_atomic:
            for loc, aw in _atoms_of(comp):
                if aw <= 0.0:
                    continue
                pt = x.sub(loc) if isinstance(loc, ScaledSum) else x.add_offset(-loc)
                m2 = conv_local_mass(dist, dist, pt, c, quad, plan)
                if isinstance(m2, LogBracket):
                    raise ParameterError("3-fold masses do not propagate far-tail brackets")
                if m2 != LOG_ZERO:
                    terms.append(lw + math.log(aw) + m2)
        else:
            lo, hi = comp.support_bounds()
            xv = x.value()
            if not math.isfinite(xv):
                raise ParameterError("3-fold masses need float-representable points")
            hi = min(hi, xv + c)
            if hi <= lo:
                continue
            dens = comp.log_density_eval(ScaledSum.zero(x.b), quad)

            def f(u):
                a = dens(u)
                if a == LOG_ZERO:
                    return LOG_ZERO
                m2 = conv_local_mass(dist, dist, x.add_offset(-u), c, quad, plan)
                if isinstance(m2, LogBracket):
                    raise ParameterError("3-fold masses do not propagate far-tail brackets")
                if m2 == LOG_ZERO:
                    return LOG_ZERO
                return a + m2

            terms.append(lw + integrate_log(
                f, lo, hi, quad, hints=comp.density_hints(ScaledSum.zero(x.b), lo, hi)))
    return log_sum(terms) if terms else LOG_ZERO


def smoothed_density(kernel: PiecewiseLinearDensity, base: MixtureDistribution,
                     x, quad: QuadratureSpec) -> float:
    """log q(x) with q(x) = int q1(x-u) base(du) (compact continuous kernel)."""
    pt = _as_point(x, base.base)
    return KernelAC(kernel=kernel, base=base).log_density(pt, quad)


# ---------------------------------------------------------------------------
# brute-force Riemann oracle
# ---------------------------------------------------------------------------

def phi_values(profile: PeriodicProfile, u: np.ndarray) -> np.ndarray:
    """Vectorized raw dip density (linear scale) for oracle grids."""
    p = profile.params
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u >= 1.0
    if not np.any(pos):
        return out
    v = u[pos]
    lnb = p.log_b
    m = np.floor(np.log(v) / lnb)
    y = v / p.b ** m
    y = np.where(y >= p.b, y / p.b, y)
    y = np.where(y < 1.0, y * p.b, y)
    d = np.abs(y - p.x0)
    h = np.full_like(v, profile.plateau)
    dip = (d < p.delta) & (d > 0.0)
    h[dip] = -1.0 / np.log(d[dip])
    h[d == 0.0] = 0.0
    out[pos] = v ** (-p.alpha - 1.0) * h
    return out


def mixture_density_grid(dist: MixtureDistribution, u: np.ndarray) -> np.ndarray:
    """Vectorized density of an absolutely continuous mixture on a float grid."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for w, comp in dist.components:
        if w == 0.0:
            continue
        if isinstance(comp, PhiAC):
            out += w * phi_values(comp.profile, u) / math.exp(comp.m_log)
        elif isinstance(comp, UniformAC):
            lo, hi = comp.support_bounds()
            out += w * ((u >= lo) & (u < hi)) / comp.width
        elif isinstance(comp, ParetoAC):
            a = comp.shape
            mask = u >= 0.0
            vals = np.zeros_like(u)
            vals[mask] = a * (1.0 + u[mask]) ** (-a - 1.0)
            out += w * vals
        else:
            raise ParameterError(f"no vectorized density for {type(comp).__name__}")
    return out


_MAX_ORACLE_POINTS = 2e8


def _check_grid(lo, hi, step):
    if step > 1e-3:
        raise ParameterError(f"oracle step must be <= 1e-3, got {step}")
    if not (-1e6 <= lo < hi <= 1e6):
        raise ParameterError("oracle supports are truncated to [-1e6, 1e6]")
    if (hi - lo) / step > _MAX_ORACLE_POINTS:
        raise ParameterError("oracle grid exceeds the memory budget")


def oracle_window_mass(density_grid, lo: float, hi: float, step: float,
                       chunk: int = 4_000_000) -> float:
    """Midpoint-Riemann integral of a vectorized density over [lo, hi].

    Chunk sums are combined with math.fsum, so the summation error stays at
    the level of a single rounding.
    """
    _check_grid(lo, hi, step)
    n = max(1, int(round((hi - lo) / step)))
    edges = np.linspace(lo, hi, n + 1)
    partials = []
    for i in range(0, n, chunk):
        j = min(n, i + chunk)
        mids = 0.5 * (edges[i:j] + edges[i + 1:j + 1])
        partials.append(float(np.sum(density_grid(mids) * np.diff(edges[i:j + 1]))))
    return math.fsum(partials)


def oracle_conv_density_at(grid1, grid2, x: float, lo: float, hi: float,
                           step: float, chunk: int = 4_000_000) -> float:
    """Midpoint-Riemann value of (f1 (x) f2)(x) over u in [lo, hi]."""
    _check_grid(lo, hi, step)
    n = max(1, int(round((hi - lo) / step)))
    edges = np.linspace(lo, hi, n + 1)
    partials = []
    for i in range(0, n, chunk):
        j = min(n, i + chunk)
        mids = 0.5 * (edges[i:j] + edges[i + 1:j + 1])
        partials.append(float(np.sum(grid1(mids) * grid2(x - mids)
                                     * np.diff(edges[i:j + 1]))))
    return math.fsum(partials)


def brute_force_conv_oracle(d1: MixtureDistribution, d2: MixtureDistribution,
                            x_points, step: float, lo: float | None = None,
                            hi: float | None = None) -> list:
    """Density table of d1 * d2 at the given points by midpoint Riemann sums."""
    lo1, hi1 = d1.support_bounds()
    lo = lo1 if lo is None else lo
    hi = (max(x_points) - lo1 + 1.0) if hi is None else hi
    lo = max(lo, -1e6)
    hi = min(hi, 1e6)
    g1 = lambda u: mixture_density_grid(d1, u)
    g2 = lambda u: mixture_density_grid(d2, u)
    return [(float(xp), oracle_conv_density_at(g1, g2, float(xp), lo, hi, step))
            for xp in x_points]
