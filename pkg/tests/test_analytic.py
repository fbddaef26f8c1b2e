"""Quadrature paths: ring transform, two-point coupling weights, P_h curve."""

import math

import numpy as np
import pytest

from oamturb import (
    DomainError,
    QuadratureConfig,
    RangeError,
    ToleranceError,
    TurbulenceParams,
    coupling_coefficients,
    default_params_list,
    ph_curve,
    ring_coefficients,
    success_probability,
    theta_transform,
)
from oamturb.analytic import DEFAULT_STRENGTHS

P0 = TurbulenceParams(w_over_r0=0.0)
P06 = TurbulenceParams(w_over_r0=0.6)
P10 = TurbulenceParams(w_over_r0=1.0)
P14 = TurbulenceParams(w_over_r0=1.4)

COARSE = QuadratureConfig(8, 8, 1e-10)


class TestQuadratureConfig:
    def test_defaults(self):
        q = QuadratureConfig()
        assert (q.radial_nodes, q.angular_nodes, q.tolerance) == (200, 512, 1e-6)

    def test_guards(self):
        with pytest.raises(RangeError):
            QuadratureConfig(4, 512, 1e-6)
        with pytest.raises(RangeError):
            QuadratureConfig(200, 4, 1e-6)
        with pytest.raises(RangeError):
            QuadratureConfig(200, 512, 0.0)


class TestThetaTransform:
    def test_zero_turbulence_values(self):
        assert theta_transform(0, 0.5, P0) == pytest.approx((2 * np.pi) ** 2, rel=1e-12)
        assert abs(theta_transform(2, 0.5, P0)) < 1e-10

    def test_even_in_the_index(self):
        assert theta_transform(2, 0.5, P10) == theta_transform(-2, 0.5, P10)

    def test_matches_midpoint_riemann_sum(self):
        # 1e6-node midpoint rule as an independent oracle
        r, n = 0.5, 1_000_000
        u = (np.arange(n) + 0.5) * (np.pi / n)
        decay = 6.88 * 2 ** (2 / 3) * (r * P10.w_over_r0) ** (5 / 3)
        gam = np.exp(-decay * np.abs(np.sin(u / 2)) ** (5 / 3))
        for dl in (0, 2):
            brute = 4 * np.pi * float(np.cos(dl * u) @ gam) * (np.pi / n)
            assert theta_transform(dl, r, P10) == pytest.approx(brute, rel=1e-6)

    def test_validation_guards(self):
        with pytest.raises(RangeError):
            theta_transform(0.5, 0.5, P10)
        with pytest.raises(DomainError):
            theta_transform(0, -0.1, P10)
        with pytest.raises(ToleranceError):
            theta_transform(2, 1.0, P14, COARSE)

    def test_coarse_rule_passes_without_validation(self):
        val = theta_transform(2, 1.0, P14, COARSE, validate=False)
        assert math.isfinite(val)


class TestCouplingCoefficients:
    def test_zero_turbulence_is_exact(self):
        cc = coupling_coefficients(1, P0)
        assert cc.c0 == 1.0
        assert cc.c2l == 0.0

    def test_frozen_reference_point(self):
        cc = coupling_coefficients(1, P06)
        assert cc.c0 == pytest.approx(0.2298790730629461, abs=1e-9)
        assert cc.c2l == pytest.approx(0.0640688086803178, abs=1e-9)

    def test_node_doubling_converged(self):
        quad = QuadratureConfig()
        fine = QuadratureConfig(2 * quad.radial_nodes, 2 * quad.angular_nodes, 1e-6)
        for params in (P06, P14):
            a = coupling_coefficients(1, params, quad, validate=False)
            b = coupling_coefficients(1, params, fine, validate=False)
            assert abs(a.c0 - b.c0) < 1e-6
            assert abs(a.c2l - b.c2l) < 1e-6

    def test_matches_direct_sampling(self):
        # crude two-point sampler over the LG_1 radial density as an oracle
        rng = np.random.default_rng(7)
        n = 2_000_000
        # intensity density r^3 e^{-2 r^2}: radii from the Gamma(2, 1/2) law
        r = np.sqrt(rng.gamma(2.0, 0.5, size=2 * n)).reshape(2, n)
        u = rng.uniform(0.0, 2 * np.pi, size=n)
        chord_sq = r[0] ** 2 + r[1] ** 2 - 2 * r[0] * r[1] * np.cos(u)
        gam = np.exp(-3.44 * (0.6 * np.sqrt(chord_sq)) ** (5 / 3))
        cc = coupling_coefficients(1, P06)
        for dl, target in ((0, cc.c0), (2, cc.c2l)):
            vals = np.cos(dl * u) * gam
            mean = float(vals.mean())
            stderr = float(vals.std(ddof=1) / math.sqrt(n))
            assert abs(mean - target) <= 4 * stderr

    def test_monotone_decay_and_bounds(self):
        values = [
            coupling_coefficients(1, TurbulenceParams(w_over_r0=w), validate=False)
            for w in (0.0, 0.4, 0.8, 1.2)
        ]
        c0s = [v.c0 for v in values]
        assert all(a > b for a, b in zip(c0s, c0s[1:]))
        for v in values:
            assert 0.0 <= v.c2l <= v.c0 <= 1.0

    def test_index_guards(self):
        with pytest.raises(RangeError):
            coupling_coefficients(0, P06)
        with pytest.raises(RangeError):
            coupling_coefficients(1.5, P06)

    def test_coarse_quadrature_fails_validation(self):
        with pytest.raises(ToleranceError):
            coupling_coefficients(1, P14, COARSE)

    def test_ensemble_agreement(self, coef_2000):
        cc = coupling_coefficients(1, P06)
        assert abs(coef_2000.c0.mean - cc.c0) <= 3 * coef_2000.c0.stderr
        assert abs(coef_2000.c2l.mean - cc.c2l) <= 3 * coef_2000.c2l.stderr


class TestRingCoefficients:
    def test_zero_turbulence_is_exact(self):
        rc = ring_coefficients(1, P0)
        assert rc.c0 == pytest.approx(1.0, abs=1e-12)
        assert rc.c2l == pytest.approx(0.0, abs=1e-10)

    def test_upper_bounds_the_two_point_survival(self):
        for params in (P06, P10):
            assert (
                ring_coefficients(1, params).c0
                > coupling_coefficients(1, params).c0
            )

    def test_kernel_variants_agree_on_survival_only(self):
        # |sin(u/2)| and |sin u| kernels integrate identically at dl = 0
        half = ring_coefficients(1, P06)
        full = ring_coefficients(1, P06, full_angle=True)
        assert half.c0 == pytest.approx(full.c0, abs=1e-10)
        assert half.c2l < full.c2l

    def test_coarse_quadrature_fails_validation(self):
        with pytest.raises(ToleranceError):
            ring_coefficients(1, P14, COARSE)


class TestPhCurve:
    def test_success_probability_is_survival_weight(self):
        assert success_probability(P06) == coupling_coefficients(1, P06).c0

    def test_curve_is_sorted_and_monotone(self):
        params = [TurbulenceParams(w_over_r0=w) for w in (1.0, 0.2, 0.6)]
        rows = ph_curve(params, validate=False)
        assert [w for w, _ in rows] == [0.2, 0.6, 1.0]
        values = [p for _, p in rows]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 < p <= 1.0 for p in values)

    def test_empty_input_rejected(self):
        with pytest.raises(DomainError):
            ph_curve([])

    def test_default_presets(self):
        params = default_params_list()
        assert tuple(p.w_over_r0 for p in params) == DEFAULT_STRENGTHS
        assert len(params) == 14
        assert params[0].w_over_r0 == 0.0
