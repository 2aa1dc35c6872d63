"""Construction constants, the log-periodic dip profile, and scale-split points.

The whole laboratory is built around one density shape::

    phi(x) = x^(-alpha-1) * h(log x) * 1[x >= 1]

where ``h`` is continuous, periodic with period ``log b``, positive away from
the mantissa point ``x0``, and collapses there like ``-1/log|x - x0|`` within
a ring of radius ``delta`` (the "dip").  Everything interesting happens at
probe points of the form ``x = b^m * y`` with ``m`` up to several hundred,
where the value of ``h`` depends on the distance of the mantissa ``y`` from
``x0`` at resolutions far below one float64 ulp of ``x``.

``ScaledSum`` therefore represents a point as a short signed sum of scaled
mantissas plus a small offset,

    x = sum_i  s_i * b^(m_i) * y_i  +  offset,

with the leading term strictly dominant.  The dip distance of the phase is
then ``|rest| * b^(-m_1)`` whenever ``y_1 == x0`` exactly, which is computable
in log space without any cancellation.  Dominance threshold: a lesser term
within 2^-20 of the head is folded into the head mantissa (float64 still has
>30 bits of headroom to represent the perturbed phase).  Dust threshold:
terms below 2^-70 of the *leading remainder* are dropped; such dust cannot
move any reported ratio at the 1e-12 level.  The leading remainder itself is
never dropped, no matter how small relative to the head: when the head
mantissa sits exactly on the dip center it carries the entire phase signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ContractViolationError, ParameterError

DOMINANCE = 2.0 ** -20
DUST = 2.0 ** -70

_LOG_ZERO = float("-inf")


# ---------------------------------------------------------------------------
# model constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    """Constants of the construction, with their ordering invariants.

    Defaults: ``b=4, x0=2, delta=0.25, alpha=1, beta=2, x1=0.5, x2=1.5``.
    They satisfy every constraint below and keep the shifted-interval
    mantissa ``x0 + x1`` outside the dip ring.
    """

    b: float = 4.0
    x0: float = 2.0
    delta: float = 0.25
    alpha: float = 1.0
    beta: float = 2.0
    x1: float = 0.5
    x2: float = 1.5

    def __post_init__(self):
        p = self
        if not (1.0 < p.x0 < p.b):
            raise ParameterError(f"need 1 < x0 < b, got x0={p.x0}, b={p.b}")
        if not (0.0 < p.delta < 1.0):
            raise ParameterError(f"need delta in (0,1), got {p.delta}")
        if not (p.delta < min(p.x0 - 1.0, p.b - p.x0)):
            raise ParameterError("delta must keep the dip ring inside the period cell")
        if not (p.alpha > 0.0):
            raise ParameterError(f"need alpha > 0, got {p.alpha}")
        if not (p.alpha * p.beta > 1.0):
            raise ParameterError(f"need alpha*beta > 1, got {p.alpha * p.beta}")
        if not (0.0 < p.x1 < p.x2):
            raise ParameterError(f"need 0 < x1 < x2, got x1={p.x1}, x2={p.x2}")
        if not (p.x0 + p.x2 < p.b):
            raise ParameterError("need x0 + x2 < b")
        if not (p.x1 > p.delta):
            raise ParameterError("need x1 > delta so shifted intervals clear the dip")

    @property
    def log_b(self) -> float:
        return math.log(self.b)


# ---------------------------------------------------------------------------
# scale-split points
# ---------------------------------------------------------------------------

def _range_fix(m: int, y: float, b: float):
    # mantissa into [1, b); exact when b is a power of two
    while y >= b:
        y /= b
        m += 1
    while y < 1.0:
        y *= b
        m -= 1
    return m, y


@dataclass(frozen=True)
class PhaseInfo:
    """Head scale/mantissa of a positive point plus its remainder.

    ``rem`` is the remainder in absolute units (``x - b^scale * mantissa``)
    as a float when representable, else None with (sign, log) fallback.
    """

    scale: int
    mantissa: float
    rem: float | None
    rem_sign: int
    rem_log: float


@dataclass(frozen=True)
class ScaledSum:
    """Immutable scale-split representation of a real number.

    Construct via :meth:`from_float`, :meth:`scaled`, or arithmetic on
    existing values; those paths return canonical instances.  Hand-built
    instances can be canonicalized with :meth:`normalize`.
    """

    b: float
    terms: tuple  # tuple of (sign: ±1, m: int, y: float in [1, b))
    offset: float = 0.0

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, b: float = 4.0) -> "ScaledSum":
        return cls(b=b, terms=(), offset=0.0)

    @classmethod
    def from_float(cls, x: float, b: float = 4.0) -> "ScaledSum":
        if not math.isfinite(x):
            raise ParameterError(f"cannot represent non-finite value {x}")
        if x == 0.0:
            return cls.zero(b)
        s = 1 if x > 0 else -1
        ax = abs(x)
        m = int(math.floor(math.log(ax) / math.log(b)))
        m, y = _range_fix(m, ax / b ** m, b)
        return cls(b=b, terms=((s, m, y),), offset=0.0)

    @classmethod
    def scaled(cls, m: int, y: float, b: float = 4.0, offset: float = 0.0, sign: int = 1) -> "ScaledSum":
        """b^m * y (+ offset), canonicalized."""
        if y <= 0.0 or not math.isfinite(y):
            raise ParameterError(f"mantissa must be positive finite, got {y}")
        return cls(b=b, terms=((1 if sign >= 0 else -1, int(m), float(y)),), offset=float(offset)).normalize()

    # -- canonical form -----------------------------------------------------

    def normalize(self) -> "ScaledSum":
        b = self.b
        lnb = math.log(b)

        def mag(m, y):
            return m * lnb + math.log(y)

        # signed mantissas per scale
        acc: dict[int, float] = {}
        for s, m, y in self.terms:
            if y == 0.0:
                continue
            sy = s * y
            m2, y2 = _range_fix(m, abs(sy), b)
            acc[m2] = acc.get(m2, 0.0) + math.copysign(y2, sy)

        changed = True
        while changed:
            changed = False
            for m in list(acc):
                v = acc[m]
                if v == 0.0:
                    del acc[m]
                    changed = True
                    continue
                if abs(v) >= b or abs(v) < 1.0:
                    del acc[m]
                    m2, y2 = _range_fix(m, abs(v), b)
                    prev = acc.get(m2, 0.0)
                    acc[m2] = prev + math.copysign(y2, v)
                    changed = True

        terms = sorted(
            ((1 if v > 0 else -1, m, abs(v)) for m, v in acc.items()),
            key=lambda t: (t[1], t[2]),
            reverse=True,
        )
        offset = self.offset

        # fold lesser terms within the dominance threshold into the head
        while len(terms) >= 2:
            s1, m1, y1 = terms[0]
            s2, m2, y2 = terms[1]
            if mag(m2, y2) - mag(m1, y1) < math.log(DOMINANCE):
                break
            combined = s1 * y1 + s2 * y2 * b ** (m2 - m1)
            rest = terms[2:]
            if combined == 0.0:
                terms = rest
                continue
            m3, y3 = _range_fix(m1, abs(combined), b)
            terms = sorted(
                rest + [(1 if combined > 0 else -1, m3, y3)],
                key=lambda t: (t[1], t[2]),
                reverse=True,
            )

        # fold a large offset into the terms
        if terms and offset != 0.0:
            s1, m1, y1 = terms[0]
            head_mag = mag(m1, y1)
            if math.log(abs(offset)) - head_mag >= math.log(DOMINANCE):
                if head_mag <= 50.0 * math.log(2.0):
                    total = math.fsum([s * y * b ** m for s, m, y in terms]) + offset
                    return ScaledSum.from_float(total, b)
                combined = s1 * y1 + offset * b ** (-m1)
                m3, y3 = _range_fix(m1, abs(combined), b)
                terms = sorted(
                    terms[1:] + [(1 if combined > 0 else -1, m3, y3)],
                    key=lambda t: (t[1], t[2]),
                    reverse=True,
                )
                offset = 0.0

        # drop dust relative to the leading remainder (never the remainder head)
        if len(terms) >= 2:
            rem_head = mag(terms[1][1], terms[1][2])
            if offset != 0.0:
                rem_head = max(rem_head, math.log(abs(offset)))
            kept = list(terms[:2])
            for s, m, y in terms[2:]:
                if mag(m, y) - rem_head >= math.log(DUST):
                    kept.append((s, m, y))
            terms = kept

        return ScaledSum(b=b, terms=tuple(terms), offset=offset)

    def is_canonical(self) -> bool:
        try:
            other = self.normalize()
        except (OverflowError, ValueError):
            return False
        return other.terms == self.terms and other.offset == self.offset

    # -- queries ------------------------------------------------------------

    def value(self) -> float:
        """Plain float value; overflows to inf beyond float64 range."""
        total = self.offset
        for s, m, y in self.terms:
            try:
                total += s * y * self.b ** m
            except OverflowError:
                return math.copysign(math.inf, s)
        return total

    def sign(self) -> int:
        if self.terms:
            return self.terms[0][0]
        if self.offset > 0:
            return 1
        if self.offset < 0:
            return -1
        return 0

    def log_abs(self) -> float:
        """log |x|; -inf for zero."""
        if not self.terms:
            return _LOG_ZERO if self.offset == 0.0 else math.log(abs(self.offset))
        lnb = math.log(self.b)
        s1, m1, y1 = self.terms[0]
        head = m1 * lnb + math.log(y1)
        rel = 0.0
        for s, m, y in self.terms[1:]:
            rel += (s * s1) * math.exp((m - m1) * lnb + math.log(y / y1))
        if self.offset != 0.0:
            e = math.log(abs(self.offset)) - head
            if e > -745.0:
                rel += math.copysign(math.exp(e), self.offset * s1)
        return head + math.log1p(rel)

    def phase(self) -> PhaseInfo:
        """Head scale/mantissa plus remainder; requires a positive value."""
        if not self.terms:
            x = self.offset
            if x <= 0.0:
                raise ParameterError("phase undefined for non-positive values")
            m = int(math.floor(math.log(x) / math.log(self.b)))
            m, y = _range_fix(m, x / self.b ** m, self.b)
            return PhaseInfo(scale=m, mantissa=y, rem=0.0, rem_sign=0, rem_log=_LOG_ZERO)
        s1, m1, y1 = self.terms[0]
        if s1 < 0:
            raise ParameterError("phase undefined for negative values")
        rem = self.offset
        overflow = False
        for s, m, y in self.terms[1:]:
            try:
                rem += s * y * self.b ** m
            except OverflowError:
                overflow = True
                break
        if overflow or not math.isfinite(rem):
            rest = ScaledSum(b=self.b, terms=self.terms[1:], offset=self.offset)
            return PhaseInfo(scale=m1, mantissa=y1, rem=None,
                             rem_sign=rest.sign(), rem_log=rest.log_abs())
        rlog = _LOG_ZERO if rem == 0.0 else math.log(abs(rem))
        rsign = 0 if rem == 0.0 else (1 if rem > 0 else -1)
        return PhaseInfo(scale=m1, mantissa=y1, rem=rem, rem_sign=rsign, rem_log=rlog)

    # -- arithmetic ----------------------------------------------------------

    def add_offset(self, t: float) -> "ScaledSum":
        return ScaledSum(b=self.b, terms=self.terms, offset=self.offset + t).normalize()

    def add(self, other: "ScaledSum") -> "ScaledSum":
        if other.b != self.b:
            raise ParameterError("mismatched bases")
        return ScaledSum(b=self.b, terms=self.terms + other.terms,
                         offset=self.offset + other.offset).normalize()

    def sub(self, other: "ScaledSum") -> "ScaledSum":
        neg = tuple((-s, m, y) for s, m, y in other.terms)
        return ScaledSum(b=self.b, terms=self.terms + neg,
                         offset=self.offset - other.offset).normalize()

    def neg(self) -> "ScaledSum":
        return ScaledSum(b=self.b, terms=tuple((-s, m, y) for s, m, y in self.terms),
                         offset=-self.offset)

    def scale_pow_b(self, k: int) -> "ScaledSum":
        """Multiply by b^k (exact on terms)."""
        return ScaledSum(b=self.b, terms=tuple((s, m + k, y) for s, m, y in self.terms),
                         offset=self.offset * self.b ** k).normalize()

    def describe(self) -> str:
        """Compact human-readable form, e.g. '4^8*2+138.87'."""
        if not self.terms:
            return repr(self.offset)
        parts = []
        for s, m, y in self.terms:
            sgn = "-" if s < 0 else ("+" if parts else "")
            parts.append(f"{sgn}{self.b:g}^{m}*{y:.17g}")
        if self.offset:
            parts.append(f"{'+' if self.offset > 0 else '-'}{abs(self.offset):.17g}")
        return "".join(parts)


# ---------------------------------------------------------------------------
# the periodic dip profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicProfile:
    """The period-``log b`` profile ``h``.

    Inside the dip ring (mantissa distance ``d = |y - x0| < delta``) the value
    is ``-1/log d``; at the center it is 0.  Outside the ring the profile is a
    constant plateau ``-1/log delta``, which matches the ring boundary value,
    so ``h`` is continuous on the whole line and the period endpoints agree
    with zero tuning.  The plateau is also the supremum of ``h``.
    """

    params: ModelParams
    plateau: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        std = -1.0 / math.log(self.params.delta)
        if self.plateau is None:
            object.__setattr__(self, "plateau", std)
        elif not math.isclose(self.plateau, std, rel_tol=1e-12):
            raise ContractViolationError(
                f"plateau {self.plateau} breaks continuity; must be -1/log(delta) = {std}")

    @property
    def sup_value(self) -> float:
        return self.plateau

    def _eval_phase(self, scale: int, ystar: float):
        # returns (h, branch) for a mantissa point; wraps into [1, b) first
        b = self.params.b
        scale, ystar = _range_fix(scale, ystar, b)
        d = abs(ystar - self.params.x0)
        if d == 0.0:
            return 0.0, "center"
        if d < self.params.delta:
            return -1.0 / math.log(d), "dip"
        return self.plateau, "plateau"

    def value(self, x) -> float:
        """h(log x) for SupportsFloat or ScaledSum x; x must be positive."""
        h, _branch = self._value_branch(x)
        return h

    def branch(self, x) -> str:
        """Which formula applies at the phase of x: 'center', 'dip', or 'plateau'."""
        _h, branch = self._value_branch(x)
        return branch

    def _value_branch(self, x):
        if not isinstance(x, ScaledSum):
            xf = float(x)
            if xf <= 0.0:
                raise ParameterError("profile phase undefined for non-positive x")
            x = ScaledSum.from_float(xf, self.params.b)
        elif not x.is_canonical():
            raise ContractViolationError("profile_value requires a normalized ScaledSum")
        p = self.params
        info = x.phase()
        lnb = p.log_b
        if info.mantissa == p.x0:
            if info.rem_sign == 0:
                return 0.0, "center"
            dlog = info.rem_log - info.scale * lnb
            if dlog < math.log(p.delta):
                return -1.0 / dlog, "dip"
            # wide remainder: evaluate as an explicit mantissa point
            ystar = p.x0 + info.rem_sign * math.exp(dlog)
            return self._eval_phase(info.scale, ystar)
        rel = 0.0
        if info.rem_sign != 0:
            e = info.rem_log - info.scale * lnb
            if e > -745.0:
                rel = info.rem_sign * math.exp(e)
        return self._eval_phase(info.scale, info.mantissa + rel)


def profile_value(profile: PeriodicProfile, x) -> float:
    """Value of the periodic profile at the phase of ``x`` (always >= 0)."""
    return profile.value(x)


def phi_log_value(profile: PeriodicProfile, x) -> float:
    """log phi(x) = -(alpha+1) log x + log h(log x); -inf for x < 1 or h = 0."""
    ev = phi_window_log_eval(profile, x if isinstance(x, ScaledSum)
                             else ScaledSum.from_float(float(x), profile.params.b))
    return ev(0.0)


def phi_window_log_eval(profile: PeriodicProfile, base: ScaledSum):
    """Specialized evaluator ``t -> log phi(base + t)``.

    This is the hot kernel behind every window mass and convolution: the
    phase decomposition of ``base`` is done once, after which each call costs
    a couple of logs.  The remainder of ``base`` is carried in absolute units
    so the dip distance of ``base + t`` is exact for scales far beyond
    float64 ulp resolution.
    """
    p = profile.params
    if not base.is_canonical():
        base = base.normalize()
    alpha1 = p.alpha + 1.0
    lnb = p.log_b
    ln_delta = math.log(p.delta)
    plateau = profile.plateau
    x0 = p.x0
    b = p.b

    if not base.terms or base.terms[0][0] < 0:
        xv = base.offset if not base.terms else base.value()
        if xv == -math.inf:
            return lambda t: _LOG_ZERO  # far below the support for any window offset

        def f_plain(t: float) -> float:
            x = xv + t
            if x < 1.0:
                return _LOG_ZERO
            m = int(math.floor(math.log(x) / lnb))
            y = x / b ** m
            m, y = _range_fix(m, y, b)
            d = abs(y - x0)
            if d == 0.0:
                return _LOG_ZERO
            h = -1.0 / math.log(d) if d < p.delta else plateau
            return -alpha1 * math.log(x) + math.log(h)

        return f_plain

    info = base.phase()  # raises for negative bases
    M = info.scale
    y1 = info.mantissa
    Mlnb = M * lnb
    lny1 = math.log(y1)
    head_log = Mlnb + lny1

    if info.rem is None:
        # remainder beyond float range; O(1) eval offsets are absorbed exactly
        rem_sign, rem_log = info.rem_sign, info.rem_log

        def f_absorbed(t: float) -> float:
            if y1 == x0:
                if rem_sign == 0:
                    return _LOG_ZERO
                dlog = rem_log - Mlnb
                if dlog < ln_delta:
                    return -alpha1 * head_log + math.log(-1.0 / dlog)
            h, _ = profile._eval_phase(M, y1 + rem_sign * math.exp(min(rem_log - Mlnb, 700.0)))
            if h == 0.0:
                return _LOG_ZERO
            return -alpha1 * head_log + math.log(h)

        return f_absorbed

    R = info.rem
    binvM = b ** (-M) if M < 530 else 0.0

    if y1 == x0:

        def f_dip(t: float) -> float:
            v = R + t
            if v == 0.0:
                return _LOG_ZERO
            dlog = math.log(abs(v)) - Mlnb
            if dlog < ln_delta:
                rel_log = dlog - lny1
                if rel_log < -40.0:
                    xlog = head_log
                else:
                    xlog = head_log + math.log1p(math.copysign(math.exp(rel_log), v))
                if xlog < 0.0:
                    return _LOG_ZERO
                return -alpha1 * xlog + math.log(-1.0 / dlog)
            ystar = y1 + v * binvM
            if ystar <= 0.0:
                return _LOG_ZERO
            h, _ = profile._eval_phase(M, ystar)
            xlog = Mlnb + math.log(ystar)
            if xlog < 0.0 or h == 0.0:
                return _LOG_ZERO
            return -alpha1 * xlog + math.log(h)

        return f_dip

    def f_generic(t: float) -> float:
        ystar = y1 + (R + t) * binvM
        if ystar <= 0.0:
            return _LOG_ZERO
        h, _ = profile._eval_phase(M, ystar)
        xlog = Mlnb + math.log(ystar)
        if xlog < 0.0 or h == 0.0:
            return _LOG_ZERO
        return -alpha1 * xlog + math.log(h)

    return f_generic


# ---------------------------------------------------------------------------
# structured probe sequences
# ---------------------------------------------------------------------------

INF = math.inf


@dataclass(frozen=True)
class SequenceSpec:
    """A family x_n = b^n * y_n along one of the construction's regimes.

    regime 'fixed-y':  y_n = target for all n (target in [1, b], != x0 for
        the plateau sections).
    regime 'lambda':   |y_n - x0| * b^n = target; target may be ``math.inf``,
        realized as the linearly growing family ``lambda_n = n``.
    regime 'gamma':    |y_n - x0| * b^n * (log x_n)^(-beta) = target, same
        convention for ``inf``.
    """

    regime: str
    target: float
    m_range: tuple
    side: int = 1

    def __post_init__(self):
        if self.regime not in ("fixed-y", "lambda", "gamma"):
            raise ParameterError(f"unknown regime {self.regime!r}")
        if self.regime != "fixed-y" and self.target < 0.0:
            raise ParameterError("lambda/gamma targets must be nonnegative")
        if self.side not in (1, -1):
            raise ParameterError("side must be +1 or -1")
        if not self.m_range:
            raise ParameterError("m_range must be nonempty")


def make_sequence(spec: SequenceSpec, params: ModelParams) -> list:
    """Generate the probe points of a SequenceSpec as ScaledSums."""
    out = []
    b, x0, beta = params.b, params.x0, params.beta
    for n in spec.m_range:
        n = int(n)
        if spec.regime == "fixed-y":
            y = spec.target
            if not (1.0 <= y <= b):
                raise ParameterError(f"fixed mantissa {y} outside [1, {b}]")
            out.append(ScaledSum.scaled(n, y, b=b))
            continue
        if spec.regime == "lambda":
            lam = float(n) if spec.target == INF else spec.target
            off = spec.side * lam
        else:
            gam = float(n) if spec.target == INF else spec.target
            L = n * params.log_b + math.log(x0)
            off = gam * L ** beta
            for _ in range(6):
                xv_log = n * params.log_b + math.log(x0) + math.log1p(
                    spec.side * off * math.exp(-n * params.log_b) / x0)
                off = gam * xv_log ** beta
            off *= spec.side
        y_n = x0 + off * b ** (-n) if n < 530 else x0
        if not (1.0 <= y_n <= b):
            raise ParameterError(
                f"regime {spec.regime} target {spec.target} puts mantissa {y_n} outside [1, {b}] at n={n}")
        out.append(ScaledSum(b=b, terms=((1, n, x0),), offset=off).normalize())
    return out


def point_lambda(x: ScaledSum, params: ModelParams) -> float:
    """Recover |y - x0| * b^m from a probe point (diagnostic for sequences)."""
    info = x.phase()
    if info.mantissa == params.x0:
        return 0.0 if info.rem_sign == 0 else math.exp(info.rem_log)
    rel = 0.0 if info.rem is None else info.rem * params.b ** (-info.scale)
    return abs(info.mantissa + rel - params.x0) * params.b ** info.scale


def point_gamma(x: ScaledSum, params: ModelParams) -> float:
    """Recover |y - x0| * b^m * (log x)^(-beta) from a probe point."""
    return point_lambda(x, params) * x.log_abs() ** (-params.beta)
