import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigvals

from vsslab.multimodel import InvalidValidities
from vsslab.numerics import DimensionError
from vsslab.plant import auv_nominal, build_model_bank
from vsslab.surfaces import (SecondOrderParams, SlidingSurfaceSpec, aggregate_surface, default_surface,
                             place_surface, sigma_eval, surface_eval, surface_rate)

finite = st.floats(-100, 100, allow_nan=False)
vec4 = st.lists(finite, min_size=4, max_size=4).map(np.array)
positive3 = st.lists(st.floats(0.01, 50), min_size=3, max_size=3)


def test_full_row_eval():
    assert surface_eval(SlidingSurfaceSpec.full_row([1, 0, 0, 1]), [1, 2, 3, 4]) == 5


def test_reduced_on_surface():
    assert surface_eval(SlidingSurfaceSpec.reduced([1, 2, 3]), [1, 1, 1, -6]) == 0


@pytest.mark.parametrize("spec", [SlidingSurfaceSpec.full_row([1, -2, 0, 3]), SlidingSurfaceSpec.reduced([1, 2, 2])])
def test_origin(spec):
    assert surface_eval(spec, np.zeros(4)) == 0


def test_eval_dimension():
    with pytest.raises(DimensionError):
        surface_eval(SlidingSurfaceSpec.reduced([1, 2, 3]), [1, 2, 3])


def test_spec_invariants():
    with pytest.raises(ValueError):
        SlidingSurfaceSpec.full_row([0, 0, 0, 0])
    with pytest.raises(ValueError):
        SlidingSurfaceSpec.reduced([1, 0, 2])
    with pytest.raises(ValueError):
        SlidingSurfaceSpec("diagonal", [1.0])
    with pytest.raises(ValueError):
        SecondOrderParams(0.0)


class TestRate:
    def test_zero(self):
        assert surface_rate(default_surface(), auv_nominal(), np.zeros(4), 0.0) == 0

    def test_input_channel(self):
        assert surface_rate(SlidingSurfaceSpec.full_row([1, 1, 0, 0]), auv_nominal(), np.zeros(4), 1.0) \
            == pytest.approx(0.19, abs=1e-15)

    def test_pitch_row(self):
        assert surface_rate(SlidingSurfaceSpec.full_row([0, 0, 1, 0]), auv_nominal(), [0, 1, 0, 0], 0.0) == 1


class TestSigma:
    def test_examples(self):
        assert sigma_eval(SecondOrderParams(1.0), 2.0, -2.0) == 0
        assert sigma_eval(SecondOrderParams(0.5), 1.0, 0.0) == 0.5
        assert sigma_eval(SecondOrderParams(), 0.0, 0.0) == 0


class TestAggregate:
    a = SlidingSurfaceSpec.full_row([1, 0, 0, 0])
    b = SlidingSurfaceSpec.full_row([0, 1, 0, 0])

    def test_degenerate_weights(self):
        assert aggregate_surface([self.a, self.b], [1, 0], [3.0, 7.0, 0, 0]) == 3.0

    def test_cancel(self):
        assert aggregate_surface([self.a, self.b], [0.5, 0.5], [2.0, -2.0, 0, 0]) == 0

    def test_identical(self):
        spec = SlidingSurfaceSpec.reduced([1, 2, 2])
        x = [0.3, -0.2, 0.5, 1.0]
        assert aggregate_surface([spec] * 3, [0.2, 0.3, 0.5], x) == pytest.approx(surface_eval(spec, x), abs=1e-15)

    def test_errors(self):
        with pytest.raises(DimensionError):
            aggregate_surface([self.a], [0.5, 0.5], np.zeros(4))
        with pytest.raises(InvalidValidities):
            aggregate_surface([self.a, self.b], [0.7, 0.7], np.zeros(4))

    @given(vec4, st.lists(st.floats(0, 1), min_size=3, max_size=3))
    def test_bounds(self, x, w):
        w = np.array(w) + 1e-3
        v = w / w.sum()
        specs = [self.a, self.b, SlidingSurfaceSpec.reduced([1, 2, 2])]
        vals = [surface_eval(s, x) for s in specs]
        agg = aggregate_surface(specs, v, x)
        tol = 1e-9 * (1 + max(abs(t) for t in vals))
        assert min(vals) - tol <= agg <= max(vals) + tol


@given(vec4, st.floats(-10, 10))
def test_homogeneity(x, alpha):
    spec = SlidingSurfaceSpec.full_row([2.0, -1.0, 0.5, 1.0])
    assert surface_eval(spec, alpha * x) == pytest.approx(alpha * surface_eval(spec, x), rel=1e-12, abs=1e-9)


@given(positive3, vec4, finite)
def test_reduced_full_equivalence(l, x, u):
    red = SlidingSurfaceSpec.reduced(l)
    full = SlidingSurfaceSpec.full_row(list(l) + [1.0])
    assert surface_eval(red, x) == surface_eval(full, x)
    assert surface_rate(red, auv_nominal(), x, u) == surface_rate(full, auv_nominal(), x, u)


def _transmission_zeros(model, row):
    """Finite generalized eigenvalues of the Rosenbrock pencil."""
    n = model.n
    top = np.hstack([model.a, model.b.reshape(-1, 1)])
    bottom = np.append(row, 0.0)
    m = np.vstack([top, bottom])
    e = np.zeros((n + 1, n + 1))
    e[:n, :n] = np.eye(n)
    z = eigvals(m, e)
    return np.sort_complex(z[np.isfinite(z)])


class TestPlacement:
    def test_default_row_frozen(self):
        row = default_surface().row
        np.testing.assert_allclose(row, [92.14428680464309, -32.028465525467766, -21.593773637257314, -1.0],
                                   rtol=1e-10)
        assert row @ auv_nominal().b == pytest.approx(0.12322916666666671, rel=1e-10)

    @pytest.mark.parametrize("poles", [(0.8, 1.0, 1.2), (0.5, 2.0, 3.0), (1.0, 1.0, 1.0)])
    def test_zeros_at_requested_poles(self, poles):
        for m in build_model_bank(auv_nominal(), 3, 0.2):
            spec = place_surface(m, poles)
            z = _transmission_zeros(m, spec.row)
            # compare characteristic coefficients; repeated roots are ill-conditioned individually
            np.testing.assert_allclose(np.poly(z).real, np.poly(-np.array(poles)), atol=1e-8)
            assert spec.row @ m.b > 0
            assert abs(spec.row[-1]) == 1.0

    def test_bad_poles(self):
        with pytest.raises(ValueError):
            place_surface(auv_nominal(), (1.0, 2.0))
        with pytest.raises(ValueError):
            place_surface(auv_nominal(), (1.0, -2.0, 3.0))
