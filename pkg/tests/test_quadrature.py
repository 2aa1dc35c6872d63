import math

import pytest

from subexp import ParameterError, QuadratureError, QuadratureSpec, integrate_log
from subexp.quadrature import integrate_linear


def test_spec_validation():
    with pytest.raises(ParameterError):
        QuadratureSpec(rel_tol=1e-2)
    with pytest.raises(ParameterError):
        QuadratureSpec(max_depth=100)


def test_polynomial_exact():
    # Simpson integrates cubics exactly
    spec = QuadratureSpec()
    val = integrate_linear(lambda t: 3 * t ** 2, 0.0, 2.0, spec)
    assert math.isclose(val, 8.0, rel_tol=1e-12)


def test_exponential():
    spec = QuadratureSpec()
    val = integrate_log(lambda t: -t, 0.0, 50.0, spec)
    # log of the integral of e^-t over [0, 50] is -1.93e-22; the check is on
    # the integral's relative error
    assert math.isclose(val, math.log(1.0 - math.exp(-50.0)), abs_tol=1e-9)


def test_log_singular_derivative_endpoint():
    # integrand -1/log(t) near 0: continuous, infinite slope at the endpoint
    spec = QuadratureSpec()
    val = integrate_linear(lambda t: 0.0 if t <= 0 else -1.0 / math.log(t),
                           0.0, 0.5, spec)
    # reference: 200k-panel midpoint rule refined near 0 (geometric grid)
    import numpy as np
    edges = np.concatenate([[0.0], np.geomspace(1e-18, 0.5, 400_000)])
    mids = 0.5 * (edges[:-1] + edges[1:])
    ref = float(np.sum(-1.0 / np.log(mids) * np.diff(edges)))
    assert abs(val / ref - 1.0) < 1e-8


def test_zero_integrand():
    spec = QuadratureSpec()
    assert integrate_log(lambda t: -math.inf, 0.0, 1.0, spec) == -math.inf


def test_empty_range():
    spec = QuadratureSpec()
    assert integrate_log(lambda t: 0.0, 1.0, 1.0, spec) == -math.inf


def test_hints_allow_narrow_support():
    # without the hint the 5-point presample misses the bump entirely
    spec = QuadratureSpec()
    f = lambda t: 0.0 if 0.1001 < t < 0.1002 else -math.inf
    with_hint = integrate_log(f, 0.0, 1.0, spec, hints=(0.1001, 0.1002))
    assert math.isclose(with_hint, math.log(1e-4), rel_tol=1e-6)


def test_depth_exhaustion_raises():
    spec = QuadratureSpec(rel_tol=1e-9, max_depth=4)
    f = lambda t: math.log(1e-30 + abs(math.sin(200.0 * t)))
    with pytest.raises(QuadratureError) as exc:
        integrate_log(f, 0.0, 3.0, spec)
    assert math.isfinite(exc.value.partial_log)
    assert exc.value.bound_log > -math.inf
