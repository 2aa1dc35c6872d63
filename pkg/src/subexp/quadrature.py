"""Adaptive Simpson quadrature for log-scale integrands.

The integrands here span hundreds of orders of magnitude across a run but only
a handful within any single integral, so each integral is evaluated in a
linear domain scaled by the largest sampled log-value.  Singular structure
(the dip centers of the periodic profile, support edges, kernel knots) is
handled by forcing initial subdivisions at caller-supplied hint points;
between hints the integrands are smooth and bisection converges quickly.

Refinement is budgeted: the total error target ``rel_tol * I`` is distributed
over the initial segments proportionally to their first-pass mass (with a
floor so empty-looking segments still get attention), and each bisection
passes half its budget to each child.  Accepted panel sums are combined with
compensated summation in a fixed order, so results do not depend on thread
count or platform scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, QuadratureError
from .logsum import LOG_ZERO, NeumaierSum

_ONE_THIRD = 1.0 / 3.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and subdivision policy for all adaptive integrals.

    ``phase_hints`` are mantissa-space points (within one period cell) at
    which the integrand may lose smoothness; integration routines translate
    them into concrete abscissae per integral.
    """

    rel_tol: float = 1e-9
    abs_floor: float = 1e-300
    max_depth: int = 48
    phase_hints: tuple = ()

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise ParameterError(f"rel_tol must be in (0, 1e-3], got {self.rel_tol}")
        if not (0 < self.max_depth <= 60):
            raise ParameterError(f"max_depth must be in [1, 60], got {self.max_depth}")
        if self.abs_floor < 0.0:
            raise ParameterError("abs_floor must be nonnegative")


def _simpson(fa, fm, fb, width):
    return width * (fa + 4.0 * fm + fb) / 6.0


def integrate_log(f_log, lo: float, hi: float, quad: QuadratureSpec, hints=()) -> float:
    """Return log of the integral of exp(f_log(t)) over [lo, hi].

    ``f_log`` may return -inf where the integrand vanishes.  Raises
    :class:`QuadratureError` when the depth budget is exhausted before the
    error bound falls below tolerance.
    """
    if not (hi > lo):
        return LOG_ZERO

    cuts = {lo, hi}
    for h in hints:
        if lo < h < hi:
            cuts.add(float(h))
    pts = sorted(cuts)

    # First pass: 5-point composite Simpson per segment, shared scale.
    seg_nodes = []
    ref = LOG_ZERO
    for a, b in zip(pts[:-1], pts[1:]):
        width = b - a
        xs = (a, a + 0.25 * width, a + 0.5 * width, a + 0.75 * width, b)
        fs = tuple(f_log(x) for x in xs)
        seg_nodes.append((a, b, xs, fs))
        m = max(fs)
        if m > ref:
            ref = m
    if ref == LOG_ZERO:
        return LOG_ZERO

    seg_est = []
    total0 = 0.0
    for a, b, xs, fs in seg_nodes:
        g = tuple(0.0 if v == LOG_ZERO else math.exp(v - ref) for v in fs)
        half = 0.5 * (b - a)
        s2 = _simpson(g[0], g[1], g[2], half) + _simpson(g[2], g[3], g[4], half)
        seg_est.append(s2)
        total0 += s2

    if total0 <= 0.0:
        return LOG_ZERO

    budget_total = quad.rel_tol * total0
    floor_share = 1.0 / (8.0 * len(seg_nodes))
    # Exhaustion floor: panels whose entire possible contribution is below
    # this are accepted outright.  Needed at dip centers, where the integrand
    # has a log-type singular derivative and the Simpson error only halves
    # per bisection level, so budget-halving alone would never terminate.
    floor_abs = budget_total / 64.0
    acc = NeumaierSum()
    err_acc = NeumaierSum()
    failed = False

    for (a, b, xs, fs), est in zip(seg_nodes, seg_est):
        budget = budget_total * max(est / total0, floor_share)
        g = tuple(0.0 if v == LOG_ZERO else math.exp(v - ref) for v in fs)

        def f(t):
            v = f_log(t)
            return 0.0 if v == LOG_ZERO else math.exp(v - ref)

        # Iterative adaptive bisection over (a, fa, m, fm, b, fb, S, budget, depth).
        half = 0.5 * (b - a)
        s_left = _simpson(g[0], g[1], g[2], half)
        s_right = _simpson(g[2], g[3], g[4], half)
        stack = [
            (a, g[0], xs[1], g[1], xs[2], g[2], s_left, 0.5 * budget, 1),
            (xs[2], g[2], xs[3], g[3], b, g[4], s_right, 0.5 * budget, 1),
        ]
        while stack:
            a0, fa, m0, fm, b0, fb, s1, bud, depth = stack.pop()
            lm = 0.5 * (a0 + m0)
            rm = 0.5 * (m0 + b0)
            flm = f(lm)
            frm = f(rm)
            half_w = 0.5 * (b0 - a0)
            sl = _simpson(fa, flm, fm, half_w)
            sr = _simpson(fm, frm, fb, half_w)
            s2 = sl + sr
            err = (s2 - s1) * _ONE_THIRD * 0.2  # |S2-S1|/15
            cap = (b0 - a0) * max(fa, flm, fm, frm, fb)
            if abs(err) <= bud or abs(err) <= quad.abs_floor:
                acc.add(s2 + err)  # Richardson extrapolation
                err_acc.add(abs(err))
            elif cap <= floor_abs:
                acc.add(s2)
                err_acc.add(cap)
            elif depth >= quad.max_depth:
                acc.add(s2)
                err_acc.add(abs(err))
                failed = True
            else:
                stack.append((a0, fa, lm, flm, m0, fm, sl, 0.5 * bud, depth + 1))
                stack.append((m0, fm, rm, frm, b0, fb, sr, 0.5 * bud, depth + 1))

    total = acc.total
    log_total = LOG_ZERO if total <= 0.0 else ref + math.log(total)
    if failed:
        bound = err_acc.total
        raise QuadratureError(
            f"adaptive quadrature did not converge within depth {quad.max_depth}",
            partial_log=log_total,
            bound_log=(LOG_ZERO if bound <= 0.0 else ref + math.log(bound)),
        )
    return log_total


def integrate_linear(f, lo: float, hi: float, quad: QuadratureSpec, hints=()) -> float:
    """Adaptive Simpson for plain nonnegative integrands (convenience wrapper)."""

    def f_log(t):
        v = f(t)
        return LOG_ZERO if v <= 0.0 else math.log(v)

    r = integrate_log(f_log, lo, hi, quad, hints=hints)
    return 0.0 if r == LOG_ZERO else math.exp(r)
