import numpy as np
import pytest

from sdfguide.calibration import (CalibrationError, GravityModel, bernstein_basis,
                                  compensate, fit_gravity_model, hand_eye_calibrate,
                                  make_hand_eye_pairs, make_pivot_poses,
                                  make_registration_points, orientation_params,
                                  pivot_calibrate, register_points)
from sdfguide.transforms import RigidTransform, random_rotation, rotvec_to_rot


class TestPivot:
    def test_noise_free_recovery(self, rng):
        tip = np.array([10.0, 5.0, 120.0])
        pivot = np.array([300.0, -50.0, 75.0])
        poses = make_pivot_poses(tip, pivot, 20, rng)
        offset, pivot_est, rmse = pivot_calibrate(poses)
        assert np.abs(offset - tip).max() <= 1e-9
        assert np.abs(pivot_est - pivot).max() <= 1e-9
        assert rmse <= 1e-9

    def test_identical_poses_are_degenerate(self, rng):
        pose = RigidTransform(random_rotation(rng), rng.uniform(-10, 10, 3))
        with pytest.raises(CalibrationError, match="degenerate"):
            pivot_calibrate([pose] * 10)

    def test_single_axis_rotations_are_degenerate(self, rng):
        tip = np.array([0.0, 0.0, 100.0])
        pivot = np.zeros(3)
        poses = []
        for _ in range(10):
            r = rotvec_to_rot(np.array([0.0, 0.0, rng.uniform(-2, 2)]))
            poses.append(RigidTransform(r, pivot - r @ tip))
        with pytest.raises(CalibrationError, match="degenerate"):
            pivot_calibrate(poses)

    def test_too_few_poses(self, rng):
        poses = make_pivot_poses(np.zeros(3), np.zeros(3), 2, rng)
        with pytest.raises(CalibrationError, match=">= 3"):
            pivot_calibrate(poses)

    def test_noise_scales_rmse(self, rng):
        sigma = 0.01
        poses = make_pivot_poses(np.array([10.0, 5.0, 120.0]), np.zeros(3), 20, rng,
                                 noise_mm=sigma)
        _, _, rmse = pivot_calibrate(poses)
        assert 0.5 * sigma <= rmse <= 2.0 * sigma


class TestHandEye:
    def test_noise_free_recovery(self, rng):
        x = RigidTransform(random_rotation(rng), rng.uniform(-100, 100, 3))
        pairs = make_hand_eye_pairs(x, 12, rng)
        x_est, rot_rmse, trans_rmse = hand_eye_calibrate(pairs)
        assert np.abs(x_est.rotation - x.rotation).max() <= 1e-9
        assert np.abs(x_est.translation - x.translation).max() <= 1e-9
        assert rot_rmse <= np.degrees(1e-9)
        assert trans_rmse <= 1e-9

    def test_single_pair_is_degenerate(self, rng):
        x = RigidTransform(random_rotation(rng), rng.uniform(-10, 10, 3))
        pairs = make_hand_eye_pairs(x, 1, rng)
        with pytest.raises(CalibrationError):
            hand_eye_calibrate(pairs)

    def test_parallel_axes_are_degenerate(self, rng):
        x = RigidTransform(random_rotation(rng), rng.uniform(-10, 10, 3))
        pairs = []
        for _ in range(8):
            r = rotvec_to_rot(np.array([0, 0, 1.0]) * rng.uniform(0.2, 1.5))
            a = RigidTransform(r, rng.uniform(-100, 100, 3))
            pairs.append((a, x.inverse().compose(a).compose(x)))
        with pytest.raises(CalibrationError, match="parallel"):
            hand_eye_calibrate(pairs)

    def test_tracker_scale_noise_band(self):
        # sigma_pos 0.02 mm plus 0.05 deg orientation jitter: translation
        # residual lands near the few-tenths-of-a-millimetre scale
        hits = 0
        for seed in range(25):
            rng = np.random.default_rng(seed)
            x = RigidTransform(random_rotation(rng), rng.uniform(-120, 120, 3))
            pairs = make_hand_eye_pairs(x, 30, rng, pos_noise_mm=0.02,
                                        rot_noise_deg=0.05)
            _, _, trans_rmse = hand_eye_calibrate(pairs)
            if 0.05 <= trans_rmse <= 0.5:
                hits += 1
        assert hits >= 24


class TestRegistration:
    def test_identity_fit(self):
        p = np.array([[0.0, 0, 0], [10, 0, 0], [0, 10, 0], [0, 0, 10]])
        t, rmse = register_points(p, p)
        assert np.allclose(t.rotation, np.eye(3), atol=1e-12)
        assert np.allclose(t.translation, 0, atol=1e-12)
        assert rmse <= 1e-12

    def test_noise_free_recovery(self, rng):
        t_true = RigidTransform(random_rotation(rng), rng.uniform(-50, 50, 3))
        p, q = make_registration_points(t_true, 10, rng)
        t_est, rmse = register_points(p, q)
        assert np.abs(t_est.rotation - t_true.rotation).max() <= 1e-9
        assert np.abs(t_est.translation - t_true.translation).max() <= 1e-9
        assert rmse <= 1e-9

    def test_noise_keeps_rmse_under_half_mm(self, rng):
        t_true = RigidTransform(random_rotation(rng), rng.uniform(-50, 50, 3))
        p, q = make_registration_points(t_true, 6, rng, noise_mm=0.1)
        _, rmse = register_points(p, q)
        assert rmse < 0.5

    def test_size_mismatch_and_collinear(self, rng):
        with pytest.raises(CalibrationError, match="size"):
            register_points(np.zeros((4, 3)), np.zeros((5, 3)))
        line = np.outer(np.arange(6, dtype=float), [1.0, 2.0, 3.0])
        with pytest.raises(CalibrationError, match="collinear"):
            register_points(line, line)

    def test_left_invariance(self, rng):
        t_true = RigidTransform(random_rotation(rng), rng.uniform(-50, 50, 3))
        p, q = make_registration_points(t_true, 8, rng, noise_mm=0.2)
        _, rmse = register_points(p, q)
        t_l = RigidTransform(random_rotation(rng), rng.uniform(-30, 30, 3))
        _, rmse_l = register_points(t_l.apply(p), t_l.apply(q))
        assert rmse_l == pytest.approx(rmse, abs=1e-9)

    def test_reflection_guard(self, rng):
        p = rng.uniform(-10, 10, (12, 3))
        q = p.copy()
        q[:, 2] = -q[:, 2]  # best orthogonal map is a reflection
        t, _ = register_points(p, q)
        assert np.linalg.det(t.rotation) == pytest.approx(1.0, abs=1e-9)
        assert t.is_orthonormal(tol=1e-9)


class TestGravityModel:
    def test_basis_partition_of_unity(self, rng):
        t = rng.uniform(0, 1, 50)
        assert np.allclose(bernstein_basis(3, t).sum(axis=1), 1.0, atol=1e-12)

    def test_constant_coefficients_predict_constant(self):
        model = GravityModel(degree=3, coefficients=np.full((3, 4, 4), 0.75))
        for u, v in [(0, 0), (0.3, 0.9), (1, 1), (0.5, 0.5)]:
            assert np.allclose(model.predict(u, v), 0.75, atol=1e-12)

    def test_generate_and_invert(self, rng):
        coef = rng.uniform(-2, 2, (3, 4, 4))
        true = GravityModel(degree=3, coefficients=coef)
        uv = rng.uniform(0, 1, (80, 2))
        samples = [(u, v, true.predict(u, v)) for u, v in uv]
        model = fit_gravity_model(samples, degree=3)
        assert np.abs(model.coefficients - coef).max() <= 1e-9

    def test_underdetermined_raises(self, rng):
        samples = [(0.1 * i, 0.2, np.zeros(3)) for i in range(10)]
        with pytest.raises(CalibrationError):
            fit_gravity_model(samples, degree=3)  # needs 16, and v has no spread

    def test_holdout_compensation(self, rng):
        # raw readings are pure bias + noise (no hand force), so the
        # compensated output itself is the residual
        coef = rng.uniform(-2, 2, (3, 4, 4))
        true = GravityModel(degree=3, coefficients=coef)
        sigma = 0.05
        uv = rng.uniform(0, 1, (400, 2))
        samples = [(u, v, true.predict(u, v) + rng.normal(0, sigma, 3)) for u, v in uv]
        model = fit_gravity_model(samples[:300], degree=3)
        resid = np.array([compensate(model, (u, v), f) for u, v, f in samples[300:]])
        rms = np.sqrt(np.mean(np.sum(resid ** 2, axis=1) / 3))
        assert rms <= 0.1

    def test_compensate_identities(self, rng):
        model = GravityModel(degree=2, coefficients=rng.uniform(-1, 1, (3, 3, 3)))
        u, v = 0.4, 0.7
        assert np.allclose(compensate(model, (u, v), model.predict(u, v)), 0, atol=1e-12)
        raw = rng.uniform(-3, 3, 3)
        assert np.array_equal(compensate(None, (u, v), raw), raw)

    def test_bias_energy_reduction(self, rng):
        coef = rng.uniform(-2, 2, (3, 4, 4))
        true = GravityModel(degree=3, coefficients=coef)
        hand_true = rng.uniform(-3, 3, (120, 3))
        uv = rng.uniform(0, 1, (120, 2))
        raw = np.array([hand_true[i] + true.predict(*uv[i]) + rng.normal(0, 0.05, 3)
                        for i in range(120)])
        train = [(uv[i, 0], uv[i, 1], raw[i] - hand_true[i]) for i in range(100)]
        model = fit_gravity_model(train, degree=3)
        err_raw = raw[100:] - hand_true[100:]
        err_comp = np.array([compensate(model, tuple(uv[100 + i]), raw[100 + i])
                             - hand_true[100 + i] for i in range(20)])
        reduction = 1.0 - np.sum(err_comp ** 2) / np.sum(err_raw ** 2)
        assert reduction >= 0.90

    def test_orientation_params_in_unit_square(self, rng):
        for _ in range(50):
            u, v = orientation_params(random_rotation(rng))
            assert 0.0 <= u <= 1.0
            assert 0.0 <= v <= 1.0
        u, v = orientation_params(np.eye(3))
        assert v == pytest.approx(1.0)  # gravity anti-parallel to tool z
