import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsslab.numerics import DimensionError
from vsslab.plant import (DisturbanceSpec, LinearModel, bank_factors, build_model_bank, auv_nominal,
                          disturbance_eval, model_output, plant_derivative, random_unit_ball)


def test_nominal_matrices():
    m = auv_nominal()
    assert m.a[0][0] == 0.47 and m.a[1][0] == -0.69
    np.testing.assert_array_equal(m.b, [0.05, 0.14, 0, 0])
    assert model_output(m, [1, 2, 3, 4]) == 4


def test_model_is_read_only():
    m = auv_nominal()
    with pytest.raises(ValueError):
        m.a[0, 0] = 1.0


def test_model_dimension_checks():
    with pytest.raises(DimensionError):
        LinearModel(np.eye(2), [1, 0, 0], [1, 0])
    with pytest.raises(ValueError):
        LinearModel(np.eye(2), [np.inf, 0], [1, 0])


class TestDerivative:
    off = DisturbanceSpec(kind="off")

    def test_origin(self):
        np.testing.assert_array_equal(plant_derivative(auv_nominal(), np.zeros(4), 0.0, self.off), np.zeros(4))

    def test_zero_fourth_column(self):
        np.testing.assert_array_equal(plant_derivative(auv_nominal(), [0, 0, 0, 1], 0.0, self.off), np.zeros(4))

    def test_input_column(self):
        np.testing.assert_array_equal(plant_derivative(auv_nominal(), np.zeros(4), 1.0, self.off),
                                      [0.05, 0.14, 0, 0])

    def test_dimension(self):
        with pytest.raises(DimensionError):
            plant_derivative(auv_nominal(), [1, 2], 0.0)

    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(-10, 10), st.floats(-5, 5))
    def test_linearity(self, x, u, alpha):
        m = auv_nominal()
        lhs = plant_derivative(m, alpha * np.array(x), alpha * u, self.off)
        rhs = alpha * plant_derivative(m, x, u, self.off)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_disturbance_added(self):
        d = DisturbanceSpec(0.1, "sinusoidal", 1.0)
        x = np.array([0.0, 0, 0, 1.0])
        got = plant_derivative(auv_nominal(), x, 0.0, d, t=np.pi / 2)
        np.testing.assert_allclose(got, disturbance_eval(d, x, np.pi / 2))


class TestDisturbance:
    def test_zero_state(self):
        for kind in ("off", "sinusoidal", "seeded-random"):
            np.testing.assert_array_equal(disturbance_eval(DisturbanceSpec(kind=kind), np.zeros(4), 0.3), 0)

    def test_off(self):
        np.testing.assert_array_equal(disturbance_eval(DisturbanceSpec(kind="off"), [1, 2, 3, 4], 1.0), 0)

    def test_sinusoid_peak(self):
        d = DisturbanceSpec(0.1, "sinusoidal", 1.0)
        phi = disturbance_eval(d, [1.0, 0, 0, 0], np.pi / 2)
        assert np.linalg.norm(phi) == pytest.approx(0.1, abs=1e-15)

    def test_default_direction_matched(self):
        phi = disturbance_eval(DisturbanceSpec(0.1), [1.0, 0, 0, 0], np.pi / 2, model=auv_nominal())
        b = auv_nominal().b
        np.testing.assert_allclose(phi, 0.1 * b / np.linalg.norm(b), atol=1e-15)

    def test_explicit_direction(self):
        d = DisturbanceSpec(0.1, direction=(1.0, 1.0, 0.0, 0.0))
        phi = disturbance_eval(d, [1.0, 0, 0, 0], np.pi / 2)
        np.testing.assert_allclose(phi, [0.1 / np.sqrt(2)] * 2 + [0, 0], atol=1e-15)

    def test_random_is_function_of_seed_and_step(self):
        np.testing.assert_array_equal(random_unit_ball(3, 10, 4), random_unit_ball(3, 10, 4))
        assert not np.array_equal(random_unit_ball(3, 10, 4), random_unit_ball(3, 11, 4))
        assert not np.array_equal(random_unit_ball(3, 10, 4), random_unit_ball(4, 10, 4))

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            DisturbanceSpec(kind="gust")
        with pytest.raises(ValueError):
            DisturbanceSpec(m_bound=-1.0)

    def test_bound_fuzz(self):
        rng = np.random.default_rng(0)
        specs = [DisturbanceSpec(0.1, "sinusoidal", 1.3), DisturbanceSpec(0.25, "seeded-random", seed=5),
                 DisturbanceSpec(0.1, "sinusoidal", direction=(1.0, 1.0, 0.0, 0.0))]
        for i in range(10_000):
            d = specs[i % 3]
            x = rng.standard_normal(4) * rng.uniform(0, 10)
            t = rng.uniform(0, 100)
            phi = disturbance_eval(d, x, t, step=i)
            assert np.linalg.norm(phi) <= d.m_bound * np.linalg.norm(x) + 1e-12


class TestBank:
    def test_zero_spread(self):
        bank = build_model_bank(auv_nominal(), 3, 0.0)
        assert all(m == auv_nominal() for m in bank)

    def test_extremes(self):
        bank = build_model_bank(auv_nominal(), 3, 0.2)
        assert bank[0].a[0, 0] == pytest.approx(0.376)
        assert bank[2].a[0, 0] == pytest.approx(0.564)

    def test_single(self):
        bank = build_model_bank(auv_nominal(), 1, 0.5)
        assert len(bank) == 1 and bank[0] == auv_nominal()

    @pytest.mark.parametrize("n", [3, 5, 7, 9])
    @pytest.mark.parametrize("delta", [0.1, 0.2, 0.37])
    def test_middle_is_nominal(self, n, delta):
        bank = build_model_bank(auv_nominal(), n, delta)
        assert bank[n // 2] == auv_nominal()
        assert bank_factors(n, delta)[n // 2] == 1.0

    def test_structural_zeros_kept(self):
        for m in build_model_bank(auv_nominal(), 4, 0.3):
            np.testing.assert_array_equal(m.a[:, 3], 0)
            np.testing.assert_array_equal(m.c_out, auv_nominal().c_out)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            build_model_bank(auv_nominal(), 0, 0.1)
        with pytest.raises(ValueError):
            build_model_bank(auv_nominal(), 3, 1.0)
