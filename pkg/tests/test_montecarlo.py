"""Ensemble bookkeeping, scan engines, and seeding reproducibility."""

import math

import numpy as np
import pytest

from oamturb import (
    DomainError,
    EnsembleStats,
    ExperimentConfig,
    GridSpec,
    HybridQubit,
    MUB_LABELS,
    RangeError,
    StatisticsError,
    TurbulenceParams,
    coupling_coefficients,
    rotation_preset,
    run_coefficient_estimate,
    run_fidelity_scan,
    run_rotation_scan,
)

P06 = TurbulenceParams(w_over_r0=0.6)
SMALL = GridSpec(64, 6.0)


@pytest.fixture(scope="module")
def est_400():
    return run_coefficient_estimate(1, P06, 400, 2)


class TestEnsembleStats:
    def test_matches_numpy(self):
        x = np.array([0.2, 0.4, 0.9, 1.3])
        s = EnsembleStats.from_samples(x)
        assert s.mean == pytest.approx(x.mean())
        assert s.stderr == pytest.approx(x.std(ddof=1) / 2)
        assert (s.n, s.min, s.max) == (4, 0.2, 1.3)

    def test_single_sample(self):
        s = EnsembleStats.from_samples(np.array([0.7]))
        assert (s.mean, s.stderr, s.n) == (0.7, 0.0, 1)

    def test_empty(self):
        s = EnsembleStats.from_samples(np.array([]))
        assert s.n == 0
        assert math.isnan(s.mean) and math.isnan(s.stderr)


class TestExperimentConfig:
    def test_defaults_give_mub_cells(self):
        cfg = ExperimentConfig()
        assert len(cfg.strengths) == 14
        assert cfg.state_labels == MUB_LABELS
        assert len(cfg.states) == 6
        assert cfg.n_realizations == 500
        assert cfg.master_seed == 2

    def test_custom_states_get_generic_labels(self):
        cfg = ExperimentConfig(strengths=(0.5,), states=(HybridQubit(1, 0, 2),))
        assert cfg.state_labels == ("state0",)

    def test_label_length_mismatch_rejected(self):
        with pytest.raises(DomainError):
            ExperimentConfig(states=(HybridQubit(1, 0, 1),), state_labels=("a", "b"))

    def test_empty_strengths_rejected(self):
        with pytest.raises(DomainError):
            ExperimentConfig(strengths=())

    def test_negative_strength_rejected(self):
        with pytest.raises(DomainError):
            ExperimentConfig(strengths=(-0.1,))

    def test_negative_seed_rejected(self):
        with pytest.raises(RangeError):
            ExperimentConfig(master_seed=-1)

    def test_zero_realizations_rejected(self):
        with pytest.raises(DomainError):
            ExperimentConfig(n_realizations=0)


@pytest.fixture(scope="module")
def tiny_config():
    return ExperimentConfig(
        strengths=(0.0, 0.6), n_realizations=5, master_seed=9, grid=SMALL
    )


class TestFidelityScan:
    def test_row_layout(self, tiny_config):
        rows = run_fidelity_scan(tiny_config)
        assert len(rows) == 12
        assert [r.w_over_r0 for r in rows[:6]] == [0.0] * 6
        assert tuple(r.state_label for r in rows[:6]) == MUB_LABELS

    def test_zero_strength_is_lossless_and_exact(self, tiny_config):
        rows = run_fidelity_scan(tiny_config)
        for r in rows[:6]:
            assert r.fidelity.mean == pytest.approx(1.0, abs=1e-12)
            assert r.success_prob.mean == pytest.approx(1.0, abs=1e-9)
            assert r.n_loss == 0

    def test_turbulent_cells_keep_unit_fidelity(self, tiny_config):
        rows = run_fidelity_scan(tiny_config)
        for r in rows[6:]:
            assert r.fidelity.min >= 1 - 1e-12
            assert r.fidelity.max <= 1 + 1e-12
            assert r.success_prob.mean < 1.0
            assert r.fidelity.n + r.n_loss == 5

    def test_reruns_are_bitwise(self, tiny_config):
        a = run_fidelity_scan(tiny_config)
        b = run_fidelity_scan(tiny_config)
        assert [r.fidelity.mean for r in a] == [r.fidelity.mean for r in b]
        assert [r.success_prob.mean for r in a] == [r.success_prob.mean for r in b]

    def test_worker_count_does_not_change_results(self, tiny_config):
        a = run_fidelity_scan(tiny_config, n_workers=1)
        b = run_fidelity_scan(tiny_config, n_workers=3)
        assert [r.success_prob.mean for r in a] == [r.success_prob.mean for r in b]

    def test_higher_charge_states(self):
        cfg = ExperimentConfig(
            strengths=(0.4,),
            states=(HybridQubit(1, 0, 2), HybridQubit(0, 1, 2)),
            n_realizations=3,
            master_seed=1,
            grid=SMALL,
        )
        for r in run_fidelity_scan(cfg):
            assert r.fidelity.mean == pytest.approx(1.0, abs=1e-12)


class TestRotationScan:
    def test_quarter_turn_grid_is_angle_independent(self):
        cfg = ExperimentConfig(
            strengths=(0.6,), n_realizations=4, master_seed=2, grid=SMALL,
            angles=tuple(np.pi / 2 * k for k in range(4)),
        )
        rows = run_rotation_scan(cfg)
        assert len(rows) == 24
        for label in MUB_LABELS:
            means = [r.fidelity.mean for r in rows if r.state_label == label]
            assert max(means) - min(means) < 1e-12

    def test_zero_angle_column_matches_fidelity_scan(self):
        base = dict(strengths=(0.6,), n_realizations=4, master_seed=2, grid=SMALL)
        rot = run_rotation_scan(ExperimentConfig(angles=(0.0, 0.35), **base))
        flat = run_fidelity_scan(ExperimentConfig(**base))
        zero_rows = [r for r in rot if r.theta == 0.0]
        assert [r.success_prob.mean for r in zero_rows] == [
            r.success_prob.mean for r in flat
        ]

    def test_generic_angle_keeps_fidelity(self):
        cfg = ExperimentConfig(
            strengths=(0.6,), n_realizations=4, master_seed=2, grid=SMALL,
            angles=(0.35,),
        )
        for r in run_rotation_scan(cfg):
            assert r.fidelity.mean == pytest.approx(1.0, abs=1e-9)

    def test_requires_single_strength_and_angles(self):
        with pytest.raises(DomainError):
            run_rotation_scan(
                ExperimentConfig(strengths=(0.2, 0.6), angles=(0.0,), n_realizations=2)
            )
        with pytest.raises(DomainError):
            run_rotation_scan(ExperimentConfig(strengths=(0.6,), n_realizations=2))

    def test_preset_shape(self):
        cfg = rotation_preset()
        assert cfg.strengths == (0.6,)
        assert len(cfg.angles) == 5
        assert cfg.angles[0] == 0.0
        assert cfg.n_realizations == 30
        assert cfg.master_seed == 2


class TestCoefficientEstimate:
    def test_zero_turbulence(self):
        est = run_coefficient_estimate(1, TurbulenceParams(w_over_r0=0.0), 100, 1)
        assert est.c0.mean == pytest.approx(1.0, abs=1e-12)
        assert est.c0.stderr < 1e-13
        assert est.c2l.mean < 1e-12
        assert est.mirror_dev < 1e-14

    def test_agrees_with_quadrature(self, est_400):
        cc = coupling_coefficients(1, P06)
        assert abs(est_400.c0.mean - cc.c0) <= 3 * est_400.c0.stderr
        assert abs(est_400.c2l.mean - cc.c2l) <= 3 * est_400.c2l.stderr

    def test_mirror_identity_per_realization(self, est_400):
        assert est_400.mirror_dev < 1e-12

    def test_cross_terms_statistically_equal(self, est_400):
        diff = abs(est_400.c2l.mean - est_400.c2l_reverse.mean)
        band = 3 * math.hypot(est_400.c2l.stderr, est_400.c2l_reverse.stderr)
        assert diff <= band

    def test_stderr_shrinks_like_root_n(self, est_400):
        est_100 = run_coefficient_estimate(1, P06, 100, 2)
        ratio = est_100.c0.stderr / est_400.c0.stderr
        assert 1.6 < ratio < 2.5

    def test_tuple_unpacking(self, est_400):
        c0, c2l = est_400
        assert c0 is est_400.c0
        assert c2l is est_400.c2l

    def test_sample_count_guard(self):
        with pytest.raises(StatisticsError):
            run_coefficient_estimate(1, P06, 50, 1)
