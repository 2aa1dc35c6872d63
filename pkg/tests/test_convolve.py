import math

import numpy as np
import pytest

from subexp import (
    LogBracket,
    MixtureDistribution,
    ParameterError,
    PiecewiseLinearDensity,
    PointMass,
    ScaledSum,
    UniformAC,
    brute_force_conv_oracle,
    conv_local_mass,
    local_mass,
    nfold_local_mass,
    phi_self_conv_at,
    smoothed_density,
    tilt,
)
from subexp.convolve import (
    oracle_conv_density_at,
    oracle_window_mass,
    phi_values,
)

LN4 = math.log(4.0)


@pytest.fixture(scope="module")
def uni():
    return MixtureDistribution.single(UniformAC(0.0, 1.0))


class TestAnalyticCases:
    def test_uniform_pair_triangle_masses(self, uni, quad):
        # triangle density on [0, 2]
        assert math.isclose(math.exp(conv_local_mass(uni, uni, 0.0, 1.0, quad)),
                            0.5, rel_tol=1e-10)
        assert math.isclose(math.exp(conv_local_mass(uni, uni, 1.0, 1.0, quad)),
                            0.5, rel_tol=1e-10)
        assert conv_local_mass(uni, uni, 2.5, 1.0, quad) == -math.inf

    def test_delta_is_identity(self, mu, quad):
        d0 = MixtureDistribution.single(PointMass(0.0))
        x = ScaledSum.scaled(2, 2.0)
        assert conv_local_mass(d0, mu, x, 1.0, quad) == \
            local_mass(mu, x, 1.0, quad)

    def test_commutativity(self, mu, uni, quad):
        for x in (5.0, 33.0):
            a = conv_local_mass(mu, uni, x, 1.0, quad)
            b = conv_local_mass(uni, mu, x, 1.0, quad)
            assert abs(a - b) < 1e-10

    def test_mass_conservation(self, uni, quad):
        total = sum(math.exp(conv_local_mass(uni, uni, 0.25 * j, 0.25, quad))
                    for j in range(8))
        assert abs(total - 1.0) < 1e-9


class TestSelfConvOracle:
    def test_at_192(self, profile, quad):
        got = phi_self_conv_at(profile, 192.0, quad)
        g = lambda u: phi_values(profile, u)
        oracle = oracle_conv_density_at(g, g, 192.0, 1.0, 191.0, 1e-4)
        assert abs(math.exp(got) / oracle - 1.0) < 1e-6

    @pytest.mark.parametrize("x", [10.0, 100.0, 1000.0])
    def test_small_points(self, profile, quad, x):
        got = phi_self_conv_at(profile, x, quad)
        g = lambda u: phi_values(profile, u)
        oracle = oracle_conv_density_at(g, g, x, 1.0, x - 1.0, 1e-4)
        assert abs(math.exp(got) / oracle - 1.0) < 1e-5

    def test_below_two(self, profile, quad):
        assert phi_self_conv_at(profile, 1.9, quad) == -math.inf

    def test_far_point_bracketed(self, profile, quad):
        v = phi_self_conv_at(profile, ScaledSum.scaled(64, 3.0), quad)
        assert isinstance(v, LogBracket)
        assert v.hi >= v.lo
        # the bracket stays tight relative to trend tolerances
        assert v.width < 0.05

    def test_trend_to_self_conv_limit(self, profile, mu, m_norm, quad):
        # phi(x)phi / (2 M int_x^{x+1} phi) -> 1 along mantissa-3 points
        rs = []
        for n in (2, 5, 8):
            x = ScaledSum.scaled(n, 3.0)
            num = phi_self_conv_at(profile, x, quad)
            den = math.log(2.0) + math.log(m_norm) + m_norm_window(mu, m_norm, x, quad)
            rs.append(abs(math.exp(num - den) - 1.0))
        assert rs[2] < rs[0]
        assert rs[2] < 0.01


def m_norm_window(mu, m_norm, x, quad):
    return local_mass(mu, x, 1.0, quad) + math.log(m_norm)


class TestConvWindows:
    def test_conv_window_vs_oracle(self, mu, profile, m_norm, quad):
        # two-fold window mass against a Riemann oracle: outer density grid
        # against exact window masses read off a cumulative fine grid
        x, c = 50.0, 1.0
        got = math.exp(conv_local_mass(mu, mu, x, c, quad))
        step = 4e-6
        n = int(round((x + c) / step))
        edges = np.linspace(0.0, x + c, n + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        dens = phi_values(profile, mids) / m_norm
        cdf = np.concatenate([[0.0], np.cumsum(dens) * step])  # G on the edges
        lo = int(round(1.0 / step))
        u = mids[lo:]
        du = dens[lo:]
        g_hi = np.interp(x + c - u, edges, cdf)
        g_lo = np.interp(x - u, edges, cdf)
        oracle = float(np.sum(du * (g_hi - g_lo)) * step)
        assert abs(got / oracle - 1.0) < 1e-5

    def test_phi_uniform_pair_vs_oracle(self, mu, profile, m_norm, quad):
        # mixed pair: uniform smoothing of the dip measure, window over a dip
        x, c = 31.6, 1.0
        got = math.exp(conv_local_mass(
            MixtureDistribution.single(UniformAC(0.0, 1.0)), mu, x, c, quad))
        step = 1e-6
        n = int(round(1.0 / step))
        edges = np.linspace(0.0, 1.0, n + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        # inner window masses on a cumulative grid over [x-1, x+c]
        fine = np.linspace(x - 1.0, x + c, 2_000_001)
        fm = 0.5 * (fine[:-1] + fine[1:])
        dens = phi_values(profile, fm) / m_norm
        cdf = np.concatenate([[0.0], np.cumsum(dens) * (fine[1] - fine[0])])
        g_hi = np.interp(x + c - mids, fine, cdf)
        g_lo = np.interp(x - mids, fine, cdf)
        oracle = float(np.sum(g_hi - g_lo) * step)
        assert abs(got / oracle - 1.0) < 1e-5

    def test_ratio_to_two_trend(self, mu, quad_fast):
        rs = []
        for n in (4, 8):
            x = ScaledSum.scaled(n, 3.0)
            r = math.exp(conv_local_mass(mu, mu, x, 1.0, quad_fast)
                         - local_mass(mu, x, 1.0, quad_fast))
            rs.append(abs(r / 2.0 - 1.0))
        assert rs[1] < rs[0] < 0.05
        assert rs[1] < 1e-3

    def test_split_bracket_contains_two(self, mu, quad_fast):
        x = ScaledSum.scaled(64, 3.0)
        v = conv_local_mass(mu, mu, x, 1.0, quad_fast)
        den = local_mass(mu, x, 1.0, quad_fast)
        assert isinstance(v, LogBracket)
        lo, hi = math.exp(v.lo - den), math.exp(v.hi - den)
        assert lo < 2.0 < hi or abs(lo / 2.0 - 1.0) < 0.02


class TestNFold:
    def test_n1_equals_local(self, uni, quad):
        assert nfold_local_mass(uni, 1, 0.25, 0.5, quad) == \
            local_mass(uni, 0.25, 0.5, quad)

    def test_n2_triangle(self, uni, quad):
        assert math.isclose(math.exp(nfold_local_mass(uni, 2, 1.0, 1.0, quad)),
                            0.5, rel_tol=1e-10)

    def test_n3_uniform(self, uni, quad):
        # Irwin-Hall(3): P(S <= 1) = 1/6, symmetric about 1.5
        got = math.exp(nfold_local_mass(uni, 3, 0.0, 1.0, quad))
        assert math.isclose(got, 1.0 / 6.0, rel_tol=1e-7)

    def test_n_out_of_range(self, uni, quad):
        with pytest.raises(ParameterError):
            nfold_local_mass(uni, 4, 0.0, 1.0, quad)

    def test_n2_long_tail_at_anchor(self, mu, quad_fast):
        # two-fold masses stay shift-insensitive at large plateau points
        x = ScaledSum.scaled(8, 3.0)
        a = nfold_local_mass(mu, 2, x, 1.0, quad_fast)
        b = nfold_local_mass(mu, 2, x.add_offset(1.0), 1.0, quad_fast)
        assert abs(math.exp(a - b) - 1.0) < 1e-3

    def test_n2_shift_ratio_near_dip_anchor(self, mu, quad_fast):
        # two-fold masses keep their shift-insensitivity trend even at the
        # dip anchors, with the usual slow 1/(n log b) correction
        devs = []
        for n in (4, 7):
            x = ScaledSum.scaled(n, 2.0)
            a = nfold_local_mass(mu, 2, x, 1.0, quad_fast)
            b = nfold_local_mass(mu, 2, x.add_offset(1.0), 1.0, quad_fast)
            devs.append(abs(math.exp(b - a) - 1.0))
        assert devs[1] < devs[0] < 0.35


class TestSmoothing:
    def test_kernel_on_delta(self, quad):
        tri = PiecewiseLinearDensity.triangle(0.0, 2.0)
        d0 = MixtureDistribution.single(PointMass(0.0))
        for x in (0.4, 1.0, 1.9):
            got = math.exp(smoothed_density(tri, d0, x, quad))
            assert math.isclose(got, tri.value(x), rel_tol=1e-12)

    def test_negative_point(self, mu, quad):
        tri = PiecewiseLinearDensity.triangle(0.0, 2.0)
        assert smoothed_density(tri, mu, -1.0, quad) == -math.inf

    def test_smoothing_tracks_window(self, mu, quad):
        tri = PiecewiseLinearDensity.triangle(0.0, 2.0)
        rs = []
        for n in (4, 8):
            x = ScaledSum.scaled(n, 3.0)
            q = smoothed_density(tri, mu, x, quad)
            w = local_mass(mu, x.add_offset(-1.0), 1.0, quad)
            rs.append(abs(math.exp(q - w) - 1.0))
        assert rs[1] < rs[0] < 0.01


class TestBruteForceOracle:
    def test_uniform_table(self, uni):
        rows = brute_force_conv_oracle(uni, uni, (0.5, 1.0, 1.5), 1e-3)
        for x, dens in rows:
            want = x if x <= 1.0 else 2.0 - x
            assert abs(dens - want) < 2e-3  # sup error below the step

    def test_atom_shift_table(self, uni):
        d = MixtureDistribution(components=((1.0, UniformAC(2.0, 1.0)),))
        rows = brute_force_conv_oracle(uni, d, (2.5, 3.0), 1e-3)
        assert abs(rows[0][1] - 0.5) < 2e-3

    def test_step_guard(self, uni):
        with pytest.raises(ParameterError):
            brute_force_conv_oracle(uni, uni, (0.5,), 0.01)

    def test_grid_guard(self, uni):
        with pytest.raises(ParameterError):
            oracle_window_mass(lambda u: u, 0.0, 1e6, 1e-3 / 300)


class TestTiltConvCommute:
    def test_commuting_diagram(self, quad):
        g = 0.9
        uni = MixtureDistribution.single(UniformAC(0.0, 1.0))
        atoms = MixtureDistribution(components=((0.5, PointMass(0.0)),
                                                (0.5, PointMass(1.5))))
        plain_conv = MixtureDistribution(components=((0.5, UniformAC(0.0, 1.0)),
                                                     (0.5, UniformAC(1.5, 1.0))))
        lhs = tilt(plain_conv, g, quad)
        tu, ta = tilt(uni, g, quad), tilt(atoms, g, quad)
        for x in (0.25, 0.75, 1.75, 2.25):
            a = local_mass(lhs, x, 0.2, quad)
            b = conv_local_mass(tu, ta, x, 0.2, quad)
            assert abs(a - b) < 1e-8
