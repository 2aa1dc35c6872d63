"""Distributions as weighted mixtures of a closed set of component kinds.

Components: the normalized dip density (``PhiAC``), uniform densities,
shifted-Pareto densities, kernel-smoothed measures, atom series at scaled
locations, point masses, and exponential-tilt wrappers.  Every component
integrates to 1 on its own; mixtures carry the weights.

All masses, tails, and moments are computed and returned in natural-log
space.  Each component accepts an extra exponent ``gamma`` so that tilted
wrappers can delegate ``int e^{gamma u} (du)`` to their base components; the
plain (untilted) quantities are the ``gamma = 0`` case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DivergentMomentError, ParameterError
from .logsum import LOG_ZERO, log_add, log_sub, log_sum
from .quadrature import QuadratureSpec, integrate_log
from .scaledcore import (
    ModelParams,
    PeriodicProfile,
    ScaledSum,
    phi_window_log_eval,
)

_FLOAT_SAFE = 2.0 ** 50


@dataclass(frozen=True)
class WindowSpec:
    """Window convention: mass over (x, x+c]."""

    c: float

    def __post_init__(self):
        if not (self.c > 0.0):
            raise ParameterError(f"window width must be positive, got {self.c}")


def _as_width(w) -> float:
    return w.c if isinstance(w, WindowSpec) else float(w)


def _as_point(x, b: float) -> ScaledSum:
    return x if isinstance(x, ScaledSum) else ScaledSum.from_float(float(x), b)


# ---------------------------------------------------------------------------
# normalizer of the dip density
# ---------------------------------------------------------------------------

def phi_integral_log(profile: PeriodicProfile, lo: float, hi: float,
                     quad: QuadratureSpec) -> float:
    """log of the integral of the raw dip density over a finite [lo, hi]."""
    p = profile.params
    ev = phi_window_log_eval(profile, ScaledSum.zero(p.b))
    return integrate_log(ev, lo, hi, quad,
                         hints=dip_hints(p, lo, hi, quad.phase_hints))


def dip_hints(params: ModelParams, lo: float, hi: float, phases=None) -> list:
    """Concrete abscissae where the profile changes branch within [lo, hi].

    ``phases`` overrides the mantissa-space hint points; by default they are
    the dip boundary and center phases of the model.
    """
    if not (hi > lo) or hi <= 0:
        return []
    if not phases:
        phases = (params.x0 - params.delta, params.x0, params.x0 + params.delta)
    lo_eff = max(lo, 0.5)
    m_lo = int(math.floor(math.log(lo_eff) / params.log_b)) - 1
    m_hi = int(math.floor(math.log(hi) / params.log_b)) + 1
    pts = []
    for m in range(m_lo, m_hi + 1):
        scale = params.b ** m
        for y in phases:
            u = scale * y
            if lo < u < hi:
                pts.append(u)
    if lo < 1.0 < hi:
        pts.append(1.0)
    return pts


def normalizer_M(params: ModelParams, quad: QuadratureSpec,
                 profile: PeriodicProfile | None = None,
                 return_detail: bool = False):
    """Total integral of the raw dip density over [1, inf).

    One period cell is integrated adaptively; the integral up to any ``b^m``
    follows from exact log-periodic self-similarity, and the remainder beyond
    the cut is covered by the plateau envelope ``plateau * X_cut^-alpha /
    alpha``.  The cut is the smallest power of ``b`` that pushes this bound
    below ``rel_tol`` of the partial sum.
    """
    profile = profile or PeriodicProfile(params)
    p = params
    i1 = math.exp(phi_integral_log(profile, 1.0, p.b, quad))
    r = p.b ** (-p.alpha)
    geom = 1.0 / (1.0 - r)

    m = 1
    while True:
        partial = i1 * (1.0 - r ** m) * geom
        bound = profile.plateau * p.b ** (-p.alpha * m) / p.alpha
        if bound < quad.rel_tol * partial or m >= 100_000:
            break
        m += 1
    total = partial + bound
    if return_detail:
        return total, p.b ** m, bound
    return total


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------

class Component:
    """Shared primitive queries; every subclass integrates to one."""

    is_atomic = False

    def log_window_mass(self, x: ScaledSum, c: float, quad: QuadratureSpec,
                        gamma: float = 0.0) -> float:
        raise NotImplementedError

    def log_density(self, x: ScaledSum, quad: QuadratureSpec,
                    gamma: float = 0.0) -> float:
        raise ParameterError(f"{type(self).__name__} has no density")

    def log_density_eval(self, base: ScaledSum, quad: QuadratureSpec,
                         gamma: float = 0.0):
        raise ParameterError(f"{type(self).__name__} has no density")

    def log_tail(self, x: ScaledSum, quad: QuadratureSpec,
                 gamma: float = 0.0) -> float:
        raise NotImplementedError

    def log_exp_moment(self, gamma: float, quad: QuadratureSpec) -> float:
        raise NotImplementedError

    def support_bounds(self):
        """(lo, hi) as floats; hi may be inf, lo may be -inf."""
        raise NotImplementedError

    def window_hints(self, x: ScaledSum, c: float) -> list:
        return []

    def density_hints(self, base: ScaledSum, lo: float, hi: float) -> list:
        return []


def _finite_value(x: ScaledSum, what: str) -> float:
    v = x.value()
    if not math.isfinite(v):
        raise ParameterError(f"{what} requires a float-representable point, got {x.describe()}")
    return v


@dataclass(frozen=True)
class PhiAC(Component):
    """The normalized dip density on [1, inf)."""

    profile: PeriodicProfile
    m_log: float  # log of the normalizer

    @property
    def params(self) -> ModelParams:
        return self.profile.params

    def support_bounds(self):
        return (1.0, math.inf)

    def window_hints(self, x: ScaledSum, c: float) -> list:
        p = self.params
        xv = x.value()
        hints = []
        if math.isfinite(xv) and abs(xv) < _FLOAT_SAFE:
            for u in dip_hints(p, xv, xv + c):
                hints.append(u - xv)
            if xv < 1.0 < xv + c:
                hints.append(1.0 - xv)
            return hints
        if x.sign() < 0:
            return hints
        info = x.phase()
        scale = p.b ** info.scale if info.scale < 500 else math.inf
        if info.rem is None:
            return hints
        centers = []
        if info.mantissa == p.x0:
            centers.append(-info.rem)
        elif math.isfinite(scale):
            centers.append((p.x0 - info.mantissa) * scale - info.rem)
        for t0 in centers:
            for t in (t0, t0 - p.delta * scale, t0 + p.delta * scale):
                if math.isfinite(t) and 0.0 < t < c:
                    hints.append(t)
        return hints

    def density_hints(self, base: ScaledSum, lo: float, hi: float) -> list:
        return self.window_hints(base, hi)  # same branch-change structure

    def log_density(self, x, quad, gamma=0.0):
        return self.log_density_eval(x, quad, gamma)(0.0)

    def log_density_eval(self, base, quad, gamma=0.0):
        ev = phi_window_log_eval(self.profile, base)
        m_log = self.m_log
        if gamma == 0.0:
            return lambda t: ev(t) - m_log
        xv = _finite_value(base, "tilted dip density")
        return lambda t: ev(t) - m_log + gamma * (xv + t)

    def log_window_mass(self, x, c, quad, gamma=0.0):
        f = self.log_density_eval(x, quad, gamma)
        return integrate_log(f, 0.0, c, quad, hints=self.window_hints(x, c))

    def log_tail(self, x, quad, gamma=0.0):
        p = self.params
        if gamma > 0.0:
            raise DivergentMomentError(
                "power-law tail has no positive exponential moment", gamma)
        xlog = x.log_abs()
        if x.sign() <= 0 or xlog < 0.0:
            xv = 1.0
        else:
            xv = _finite_value(x, "tail")
            xv = max(xv, 1.0)
        if gamma == 0.0:
            m_hi = int(math.ceil(math.log(xv) / p.log_b)) + 1
            x_cut = p.b ** m_hi
            f = self.log_density_eval(ScaledSum.zero(p.b), quad)
            part = integrate_log(f, xv, x_cut, quad, hints=dip_hints(p, xv, x_cut))
            rem = -p.alpha * m_hi * p.log_b  # self-similar remainder: b^{-alpha m} * M / M
            return log_add(part, rem)
        # gamma < 0: extend until the envelope remainder is negligible
        f = self.log_density_eval(ScaledSum.zero(p.b), quad, gamma=0.0)
        t_hi = xv + max(8.0 / -gamma, 4.0)
        while True:
            part = integrate_log(lambda u: f(u) + gamma * u, xv, t_hi, quad,
                                 hints=dip_hints(p, xv, t_hi))
            bound = (math.log(self.profile.plateau) - (p.alpha + 1.0) * math.log(t_hi)
                     + gamma * t_hi - math.log(-gamma) - self.m_log)
            if bound <= math.log(quad.rel_tol) + part or t_hi > 1e12:
                return log_add(part, bound)
            t_hi *= 2.0

    def log_exp_moment(self, gamma, quad):
        if gamma == 0.0:
            return 0.0
        if gamma > 0.0:
            raise DivergentMomentError(
                "power-law tail has no positive exponential moment", gamma)
        return self.log_tail(ScaledSum.from_float(1.0, self.params.b), quad, gamma=gamma)


@dataclass(frozen=True)
class UniformAC(Component):
    """Uniform density on [left, left + width)."""

    left: float
    width: float

    def __post_init__(self):
        if not (self.width > 0.0):
            raise ParameterError("uniform width must be positive")

    def support_bounds(self):
        return (self.left, self.left + self.width)

    def window_hints(self, x, c):
        xv = x.value()
        if not math.isfinite(xv):
            return []
        return [e - xv for e in self.support_bounds() if 0.0 < e - xv < c]

    def density_hints(self, base, lo, hi):
        return self.window_hints(base, hi)

    def _segment(self, xv, c):
        o1 = max(xv, self.left)
        o2 = min(xv + c, self.left + self.width)
        return o1, o2

    def log_window_mass(self, x, c, quad, gamma=0.0):
        xv = x.value()
        if not math.isfinite(xv):
            return LOG_ZERO
        o1, o2 = self._segment(xv, c)
        if o2 <= o1:
            return LOG_ZERO
        if gamma == 0.0:
            return math.log((o2 - o1) / self.width)
        if gamma > 0.0:
            body = gamma * o2 + math.log1p(-math.exp(gamma * (o1 - o2))) - math.log(gamma)
        else:
            body = gamma * o1 + math.log1p(-math.exp(gamma * (o2 - o1))) - math.log(-gamma)
        return body - math.log(self.width)

    def log_density(self, x, quad, gamma=0.0):
        xv = _finite_value(x, "uniform density")
        if self.left <= xv < self.left + self.width:
            return gamma * xv - math.log(self.width)
        return LOG_ZERO

    def log_density_eval(self, base, quad, gamma=0.0):
        xv = base.value()
        if not math.isfinite(xv):
            return lambda t: LOG_ZERO
        lw = math.log(self.width)
        lo, hi = self.support_bounds()
        return lambda t: (gamma * (xv + t) - lw) if lo <= xv + t < hi else LOG_ZERO

    def log_tail(self, x, quad, gamma=0.0):
        xv = x.value()
        if xv == math.inf:
            return LOG_ZERO
        xv = max(xv, self.left) if math.isfinite(xv) else self.left
        right = self.left + self.width
        if xv >= right:
            return LOG_ZERO
        pt = ScaledSum.from_float(xv, x.b) if xv != 0.0 else ScaledSum.zero(x.b)
        return self.log_window_mass(pt, right - xv, quad, gamma)

    def log_exp_moment(self, gamma, quad):
        if gamma == 0.0:
            return 0.0
        l, r = self.support_bounds()
        if gamma > 0.0:
            return gamma * r + math.log1p(-math.exp(gamma * (l - r))) \
                - math.log(gamma) - math.log(self.width)
        return gamma * l + math.log1p(-math.exp(gamma * (r - l))) \
            - math.log(-gamma) - math.log(self.width)


@dataclass(frozen=True)
class ParetoAC(Component):
    """Density a (1+u)^(-a-1) on [0, inf) (shifted Pareto, tail index a)."""

    shape: float

    def __post_init__(self):
        if not (self.shape > 0.0):
            raise ParameterError("pareto shape must be positive")

    def support_bounds(self):
        return (0.0, math.inf)

    def window_hints(self, x, c):
        xv = x.value()
        if math.isfinite(xv) and 0.0 < -xv < c:
            return [-xv]
        return []

    def log_window_mass(self, x, c, quad, gamma=0.0):
        xv = x.value()
        if not math.isfinite(xv):
            return LOG_ZERO
        o1, o2 = max(xv, 0.0), xv + c
        if o2 <= o1:
            return LOG_ZERO
        a = self.shape
        if gamma == 0.0:
            return log_sub(-a * math.log1p(o1), -a * math.log1p(o2))
        f = self.log_density_eval(ScaledSum.zero(x.b), quad, gamma)
        return integrate_log(f, o1, o2, quad)

    def log_density(self, x, quad, gamma=0.0):
        xv = _finite_value(x, "pareto density")
        if xv < 0.0:
            return LOG_ZERO
        return math.log(self.shape) - (self.shape + 1.0) * math.log1p(xv) + gamma * xv

    def log_density_eval(self, base, quad, gamma=0.0):
        xv = base.value()
        if not math.isfinite(xv):
            return lambda t: LOG_ZERO
        a = self.shape
        la = math.log(a)

        def f(t):
            u = xv + t
            if u < 0.0:
                return LOG_ZERO
            return la - (a + 1.0) * math.log1p(u) + gamma * u

        return f

    def log_tail(self, x, quad, gamma=0.0):
        xv = x.value()
        if not math.isfinite(xv):
            if xv == -math.inf:
                xv = 0.0
            else:
                raise ParameterError("pareto tail needs a float-representable point")
        xv = max(xv, 0.0)
        a = self.shape
        if gamma > 0.0:
            raise DivergentMomentError(
                "power-law tail has no positive exponential moment", gamma)
        if gamma == 0.0:
            return -a * math.log1p(xv)
        f = self.log_density_eval(ScaledSum.zero(x.b), quad, gamma)
        t_hi = xv + max(8.0 / -gamma, 4.0)
        while True:
            part = integrate_log(f, xv, t_hi, quad)
            bound = math.log(a) - (a + 1.0) * math.log1p(t_hi) + gamma * t_hi - math.log(-gamma)
            if bound <= math.log(quad.rel_tol) + part or t_hi > 1e12:
                return log_add(part, bound)
            t_hi *= 2.0

    def log_exp_moment(self, gamma, quad):
        if gamma == 0.0:
            return 0.0
        if gamma > 0.0:
            raise DivergentMomentError(
                "power-law tail has no positive exponential moment", gamma)
        return self.log_tail(ScaledSum.zero(4.0), quad, gamma=gamma)


@dataclass(frozen=True)
class PointMass(Component):
    """Unit mass at a plain-float location."""

    location: float
    is_atomic = True

    def support_bounds(self):
        return (self.location, self.location)

    def atoms(self):
        return ((self.location, 1.0),)

    def log_window_mass(self, x, c, quad, gamma=0.0):
        below = x.add_offset(-self.location)  # x - loc < 0  <=>  loc > x
        above = x.add_offset(c - self.location)  # x + c - loc >= 0  <=>  loc <= x+c
        if below.sign() < 0 and above.sign() >= 0:
            return gamma * self.location
        return LOG_ZERO

    def log_tail(self, x, quad, gamma=0.0):
        return gamma * self.location if x.add_offset(-self.location).sign() < 0 else LOG_ZERO

    def log_exp_moment(self, gamma, quad):
        return gamma * self.location


@dataclass(frozen=True)
class AtomSeries(Component):
    """Atoms at scale-split locations with weights summing to one."""

    locations: tuple  # tuple[ScaledSum]
    weights: tuple

    is_atomic = True

    def __post_init__(self):
        if len(self.locations) != len(self.weights):
            raise ParameterError("locations and weights must align")
        if any(w < 0 for w in self.weights):
            raise ParameterError("weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ParameterError("atom weights must sum to 1")

    def support_bounds(self):
        vals = [loc.value() for loc in self.locations]
        return (min(vals), max(vals))

    def atoms(self):
        return tuple(zip(self.locations, self.weights))

    def _gamma_term(self, loc: ScaledSum, w: float, gamma: float) -> float:
        if gamma == 0.0:
            return math.log(w) if w > 0 else LOG_ZERO
        g = gamma * loc.value()
        if g == math.inf:
            raise DivergentMomentError(
                "exponential weight overflows at a scaled atom", gamma)
        return g + (math.log(w) if w > 0 else LOG_ZERO)

    def log_window_mass(self, x, c, quad, gamma=0.0):
        terms = []
        for loc, w in zip(self.locations, self.weights):
            d = loc.sub(x)
            if d.sign() > 0 and d.add_offset(-c).sign() <= 0:
                terms.append(self._gamma_term(loc, w, gamma))
        return log_sum(terms)

    def log_tail(self, x, quad, gamma=0.0):
        terms = [self._gamma_term(loc, w, gamma)
                 for loc, w in zip(self.locations, self.weights)
                 if loc.sub(x).sign() > 0]
        return log_sum(terms)

    def log_exp_moment(self, gamma, quad):
        return log_sum([self._gamma_term(loc, w, gamma)
                        for loc, w in zip(self.locations, self.weights)])


@dataclass(frozen=True)
class PiecewiseLinearDensity:
    """Continuous piecewise-linear density with compact support [knots0, knotsN]."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ParameterError("need matching knots/values, at least two")
        if any(b <= a for a, b in zip(self.knots[:-1], self.knots[1:])):
            raise ParameterError("knots must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ParameterError("density values must be nonnegative")
        if abs(self.integral() - 1.0) > 1e-9:
            raise ParameterError(f"kernel must integrate to 1, got {self.integral()}")

    @classmethod
    def triangle(cls, lo: float = 0.0, hi: float = 1.0) -> "PiecewiseLinearDensity":
        mid = 0.5 * (lo + hi)
        peak = 2.0 / (hi - lo)
        return cls(knots=(lo, mid, hi), values=(0.0, peak, 0.0))

    def integral(self) -> float:
        return math.fsum(0.5 * (v0 + v1) * (k1 - k0) for k0, k1, v0, v1 in
                         zip(self.knots[:-1], self.knots[1:], self.values[:-1], self.values[1:]))

    def value(self, x: float) -> float:
        if x <= self.knots[0] or x >= self.knots[-1]:
            if x == self.knots[0]:
                return self.values[0]
            if x == self.knots[-1]:
                return self.values[-1]
            return 0.0
        for k0, k1, v0, v1 in zip(self.knots[:-1], self.knots[1:],
                                  self.values[:-1], self.values[1:]):
            if k0 <= x <= k1:
                return v0 + (v1 - v0) * (x - k0) / (k1 - k0)
        return 0.0

    def cdf(self, x: float) -> float:
        if x <= self.knots[0]:
            return 0.0
        if x >= self.knots[-1]:
            return 1.0
        total = 0.0
        for k0, k1, v0, v1 in zip(self.knots[:-1], self.knots[1:],
                                  self.values[:-1], self.values[1:]):
            if x >= k1:
                total += 0.5 * (v0 + v1) * (k1 - k0)
            else:
                t = (x - k0) / (k1 - k0)
                vx = v0 + (v1 - v0) * t
                total += 0.5 * (v0 + vx) * (x - k0)
                break
        return total

    def log_tilt_integral(self, gamma: float) -> float:
        """log of int e^{gamma v} q(v) dv (exact per linear piece)."""
        if gamma == 0.0:
            return 0.0
        total = 0.0
        for k0, k1, v0, v1 in zip(self.knots[:-1], self.knots[1:],
                                  self.values[:-1], self.values[1:]):
            w = k1 - k0
            s = (v1 - v0) / w
            # int_{k0}^{k1} (v0 + s (v-k0)) e^{gamma v} dv
            e0, e1 = math.exp(gamma * k0), math.exp(gamma * k1)
            total += (v1 * e1 - v0 * e0) / gamma - s * (e1 - e0) / gamma ** 2
        return math.log(total)

    def self_convolution_value(self, v: float) -> float:
        """(q ** q)(v) by exact Simpson on the piecewise-quadratic overlap."""
        a = max(self.knots[0], v - self.knots[-1])
        b = min(self.knots[-1], v - self.knots[0])
        if b <= a:
            return 0.0
        cuts = sorted({a, b, *(k for k in self.knots if a < k < b),
                       *(v - k for k in self.knots if a < v - k < b)})
        total = 0.0
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            sm = 0.5 * (s0 + s1)
            g = lambda s: self.value(s) * self.value(v - s)
            total += (s1 - s0) * (g(s0) + 4.0 * g(sm) + g(s1)) / 6.0
        return total


@dataclass(frozen=True)
class KernelAC(Component):
    """The measure q(x) dx with q(x) = int q1(x-u) base(du).

    ``q1`` is a continuous piecewise-linear density with compact support;
    smoothing any base mixture with it yields an absolutely continuous
    measure whose windows reduce to exact kernel-CDF differences against the
    base.
    """

    kernel: PiecewiseLinearDensity
    base: "MixtureDistribution"

    def support_bounds(self):
        blo, bhi = self.base.support_bounds()
        return (blo + self.kernel.knots[0], bhi + self.kernel.knots[-1])

    def log_window_mass(self, x, c, quad, gamma=0.0):
        if gamma != 0.0:
            f = self.log_density_eval(x, quad, gamma)
            return integrate_log(f, 0.0, c, quad, hints=self.window_hints(x, c))
        terms = []
        n_lo, n_hi = self.kernel.knots[0], self.kernel.knots[-1]
        for w, comp in self.base.components:
            if w == 0.0:
                continue
            lw = math.log(w)
            if comp.is_atomic:
                for loc, aw in comp.atoms():
                    if aw <= 0.0:
                        continue
                    sh = x.sub(loc if isinstance(loc, ScaledSum)
                               else ScaledSum.from_float(loc, x.b))
                    shv = sh.value()
                    if not math.isfinite(shv):
                        continue
                    frac = self.kernel.cdf(shv + c) - self.kernel.cdf(shv)
                    if frac > 0.0:
                        terms.append(lw + math.log(aw) + math.log(frac))
            else:
                # int f(u) [Q1(x+c-u) - Q1(x-u)] du, u = x + s, s in [-N-?, c]
                dens = comp.log_density_eval(x, quad)

                def f(s):
                    frac = self.kernel.cdf(c - s) - self.kernel.cdf(-s)
                    if frac <= 0.0:
                        return LOG_ZERO
                    return dens(s) + math.log(frac)

                lo, hi = -n_hi, c - n_lo
                hints = [c - k for k in self.kernel.knots] + [-k for k in self.kernel.knots]
                hints += comp.density_hints(x, lo, hi)
                terms.append(lw + integrate_log(f, lo, hi, quad,
                                                hints=[t for t in hints if lo < t < hi]))
        return log_sum(terms)

    def window_hints(self, x, c):
        xv = x.value()
        if not math.isfinite(xv):
            return []
        blo, _bhi = self.base.support_bounds()
        return [blo + k - xv for k in self.kernel.knots if 0.0 < blo + k - xv < c]

    def log_density(self, x, quad, gamma=0.0):
        return self.log_density_eval(x, quad, gamma)(0.0)

    def log_density_eval(self, base, quad, gamma=0.0):
        kernel = self.kernel
        n_lo, n_hi = kernel.knots[0], kernel.knots[-1]

        def q_log(t):
            pt = base.add_offset(t) if t != 0.0 else base
            terms = []
            for w, comp in self.base.components:
                if w == 0.0:
                    continue
                lw = math.log(w)
                if comp.is_atomic:
                    for loc, aw in comp.atoms():
                        if aw <= 0.0:
                            continue
                        sh = pt.sub(loc if isinstance(loc, ScaledSum)
                                    else ScaledSum.from_float(loc, pt.b))
                        shv = sh.value()
                        if math.isfinite(shv):
                            val = kernel.value(shv)
                            if val > 0.0:
                                terms.append(lw + math.log(aw) + math.log(val))
                else:
                    dens = comp.log_density_eval(pt, quad)

                    def f(s):
                        val = kernel.value(-s)
                        if val <= 0.0:
                            return LOG_ZERO
                        return dens(s) + math.log(val)

                    hints = [-k for k in kernel.knots] + comp.density_hints(pt, -n_hi, -n_lo)
                    terms.append(lw + integrate_log(
                        f, -n_hi, -n_lo, quad,
                        hints=[s for s in hints if -n_hi < s < -n_lo]))
            out = log_sum(terms)
            if gamma != 0.0 and out != LOG_ZERO:
                out += gamma * pt.value()
            return out

        return q_log

    def log_tail(self, x, quad, gamma=0.0):
        if gamma != 0.0:
            raise ParameterError("tilted tails of smoothed measures are not supported")
        terms = []
        n_lo, n_hi = self.kernel.knots[0], self.kernel.knots[-1]
        for w, comp in self.base.components:
            if w == 0.0:
                continue
            lw = math.log(w)
            if comp.is_atomic:
                for loc, aw in comp.atoms():
                    if aw <= 0.0:
                        continue
                    sh = x.sub(loc if isinstance(loc, ScaledSum)
                               else ScaledSum.from_float(loc, x.b))
                    shv = sh.value()
                    frac = 1.0 - self.kernel.cdf(shv) if math.isfinite(shv) else \
                        (1.0 if shv == -math.inf else 0.0)
                    if frac > 0.0:
                        terms.append(lw + math.log(aw) + math.log(frac))
            else:
                terms.append(lw + comp.log_tail(x.add_offset(-n_lo), quad))
                dens = comp.log_density_eval(x, quad)

                def f(s):
                    frac = 1.0 - self.kernel.cdf(-s)
                    if frac <= 0.0:
                        return LOG_ZERO
                    return dens(s) + math.log(frac)

                lo, hi = -n_hi, -n_lo
                terms.append(lw + integrate_log(f, lo, hi, quad,
                                                hints=[-k for k in self.kernel.knots
                                                       if lo < -k < hi]))
        return log_sum(terms)

    def log_exp_moment(self, gamma, quad):
        if gamma == 0.0:
            return 0.0
        return self.kernel.log_tilt_integral(gamma) + self.base.log_exp_moment(gamma, quad)


@dataclass(frozen=True)
class Tilted(Component):
    """Exponential reweighting e^{gamma u}/Z of a base mixture."""

    gamma: float
    base: "MixtureDistribution"
    log_norm: float

    @property
    def is_atomic(self):
        return all(comp.is_atomic for w, comp in self.base.components if w > 0.0)

    def atoms(self):
        """Reweighted atoms when the base is purely atomic (exact tilt)."""
        out = []
        for w, comp in self.base.components:
            if w <= 0.0:
                continue
            for loc, aw in comp.atoms():
                if aw <= 0.0:
                    continue
                lv = loc.value() if isinstance(loc, ScaledSum) else loc
                lw = math.log(w * aw) + self.gamma * lv - self.log_norm
                out.append((loc, math.exp(lw) if lw < 700.0 else math.inf))
        return tuple(out)

    def support_bounds(self):
        return self.base.support_bounds()

    def log_window_mass(self, x, c, quad, gamma=0.0):
        return self.base.log_window_mass(x, c, quad, gamma=self.gamma + gamma) - self.log_norm

    def log_density(self, x, quad, gamma=0.0):
        return self.base.log_density(x, quad, gamma=self.gamma + gamma) - self.log_norm

    def log_density_eval(self, base, quad, gamma=0.0):
        f = self.base.log_density_eval(base, quad, gamma=self.gamma + gamma)
        ln = self.log_norm
        return lambda t: f(t) - ln

    def log_tail(self, x, quad, gamma=0.0):
        return self.base.log_tail(x, quad, gamma=self.gamma + gamma) - self.log_norm

    def log_exp_moment(self, gamma, quad):
        return self.base.log_exp_moment(self.gamma + gamma, quad) - self.log_norm

    def window_hints(self, x, c):
        return self.base.window_hints(x, c)

    def density_hints(self, base, lo, hi):
        return self.base.density_hints(base, lo, hi)


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureDistribution:
    """Weighted mixture of components; weights sum to one."""

    components: tuple  # tuple[(weight, Component)]

    def __post_init__(self):
        if not self.components:
            raise ParameterError("mixture needs at least one component")
        if any(w < 0 for w, _ in self.components):
            raise ParameterError("mixture weights must be nonnegative")
        total = math.fsum(w for w, _ in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"mixture weights must sum to 1, got {total}")

    @classmethod
    def single(cls, comp: Component) -> "MixtureDistribution":
        return cls(components=((1.0, comp),))

    @property
    def base(self) -> float:
        for _w, comp in self.components:
            if isinstance(comp, PhiAC):
                return comp.params.b
        return 4.0

    def support_bounds(self):
        los, his = zip(*(c.support_bounds() for _w, c in self.components if _w > 0))
        return (min(los), max(his))

    def _combine(self, fn):
        return log_sum([math.log(w) + fn(comp)
                        for w, comp in self.components if w > 0.0])

    def log_window_mass(self, x, c, quad, gamma=0.0):
        return self._combine(lambda comp: comp.log_window_mass(x, c, quad, gamma))

    def log_density(self, x, quad, gamma=0.0):
        return self._combine(lambda comp: comp.log_density(x, quad, gamma))

    def log_density_eval(self, base, quad, gamma=0.0):
        evs = [(math.log(w), comp.log_density_eval(base, quad, gamma))
               for w, comp in self.components if w > 0.0]
        if len(evs) == 1:
            lw, f = evs[0]
            return lambda t: lw + f(t)
        return lambda t: log_sum([lw + f(t) for lw, f in evs])

    def log_tail(self, x, quad, gamma=0.0):
        return self._combine(lambda comp: comp.log_tail(x, quad, gamma))

    def log_exp_moment(self, gamma, quad):
        return self._combine(lambda comp: comp.log_exp_moment(gamma, quad))

    def window_hints(self, x, c):
        out = []
        for w, comp in self.components:
            if w > 0.0:
                out.extend(comp.window_hints(x, c))
        return out

    def density_hints(self, base, lo, hi):
        out = []
        for w, comp in self.components:
            if w > 0.0:
                out.extend(comp.density_hints(base, lo, hi))
        return out


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def local_mass(dist: MixtureDistribution, x, w, quad: QuadratureSpec) -> float:
    """log of dist((x, x+c])."""
    c = _as_width(w)
    if not (c > 0.0):
        raise ParameterError("window width must be positive")
    return dist.log_window_mass(_as_point(x, dist.base), c, quad)


def local_density(dist: MixtureDistribution, x, c: float, quad: QuadratureSpec) -> float:
    """log of c^-1 dist((x-c, x]), the window density anchored at x."""
    if not (c > 0.0):
        raise ParameterError("window width must be positive")
    pt = _as_point(x, dist.base).add_offset(-c)
    return dist.log_window_mass(pt, c, quad) - math.log(c)


def tail(dist: MixtureDistribution, x, quad: QuadratureSpec) -> float:
    """log of dist((x, inf))."""
    return dist.log_tail(_as_point(x, dist.base), quad)


def exp_moment(dist: MixtureDistribution, gamma: float, quad: QuadratureSpec) -> float:
    """int e^{gamma u} dist(du); raises DivergentMomentError when infinite."""
    if gamma == 0.0:
        return 1.0
    lm = dist.log_exp_moment(gamma, quad)
    if lm > 700.0:
        raise DivergentMomentError("exponential moment overflows float64", gamma)
    return math.exp(lm)


def tilt(dist: MixtureDistribution, gamma: float, quad: QuadratureSpec) -> MixtureDistribution:
    """The reweighting e^{gamma u} dist(du) / Z, with Z checked finite.

    Tilting a tilted mixture combines the exponents analytically; in
    particular a round trip tilt(tilt(d, g), -g) has total exponent zero and
    unit normalizer, so it reproduces d's masses through the same code path.
    """
    if gamma == 0.0 and not _is_pure_tilt(dist):
        return dist
    if _is_pure_tilt(dist):
        inner: Tilted = dist.components[0][1]
        g_total = inner.gamma + gamma
        base = inner.base
    else:
        g_total = gamma
        base = dist
    if g_total == 0.0:
        return base
    log_norm = base.log_exp_moment(g_total, quad)
    if log_norm > 700.0:
        raise DivergentMomentError("tilt normalizer overflows float64", g_total)
    return MixtureDistribution.single(Tilted(gamma=g_total, base=base, log_norm=log_norm))


def _is_pure_tilt(dist: MixtureDistribution) -> bool:
    return len(dist.components) == 1 and isinstance(dist.components[0][1], Tilted)
