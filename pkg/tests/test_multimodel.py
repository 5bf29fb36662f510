import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsslab.multimodel import (InvalidValidities, ResidueFilter, check_validities, fuse_controls, reinforce,
                               residues, validities, validity_update)
from vsslab.numerics import DimensionError

residue_lists = st.lists(st.one_of(st.just(0.0), st.floats(0, 1e6)), min_size=1, max_size=9)


class TestResidues:
    def test_examples(self):
        np.testing.assert_array_equal(residues(5, (5, 7)), [0, 2])
        np.testing.assert_array_equal(residues(5, (4, 7)), [1, 2])
        np.testing.assert_array_equal(residues(0, (0,)), [0])

    def test_empty(self):
        with pytest.raises(ValueError):
            residues(1.0, [])


class TestValidities:
    def test_examples(self):
        np.testing.assert_array_equal(validities([0, 2]), [1, 0])
        np.testing.assert_array_equal(validities([1, 1]), [0.5, 0.5])
        np.testing.assert_allclose(validities([0, 0, 0]), [1 / 3] * 3)

    def test_three_models_sum(self):
        # r_in = (1/6, 2/6, 3/6); (1 - r_in) / 2
        np.testing.assert_allclose(validities([1, 2, 3]), [5 / 12, 4 / 12, 3 / 12])

    def test_single(self):
        np.testing.assert_array_equal(validities([3.0]), [1.0])

    def test_negative(self):
        with pytest.raises(ValueError):
            validities([-1.0, 1.0])


class TestReinforce:
    def test_examples(self):
        np.testing.assert_allclose(reinforce([0.7, 0.3]), [0.49 / 0.58, 0.09 / 0.58], rtol=1e-14)
        assert reinforce([0.7, 0.3])[0] == pytest.approx(0.8448, abs=1e-4)
        np.testing.assert_array_equal(reinforce([1, 0]), [1, 0])
        np.testing.assert_array_equal(reinforce([0.5, 0.5]), [0.5, 0.5])

    def test_all_vanish_uniform(self):
        # two certain models: every product is zero
        np.testing.assert_array_equal(reinforce([1.0, 1.0, 0.0]), [1 / 3] * 3)


class TestConvexSum:
    def test_fuzz(self):
        rng = np.random.default_rng(0)
        for i in range(10_000):
            n = int(rng.integers(1, 10))
            r = rng.exponential(size=n) * 10.0 ** rng.uniform(-6, 6)
            if i % 5 == 0:
                r[rng.random(n) < 0.4] = 0.0
            if i % 7 == 0:
                r[:] = r[0]
            for mode in ("raw", "reinforced"):
                check_validities(validity_update(r, mode))

    @given(residue_lists)
    def test_property(self, r):
        for mode in ("raw", "reinforced"):
            v = validity_update(r, mode)
            assert np.all(v >= 0) and np.all(v <= 1)
            assert abs(v.sum() - 1.0) <= 1e-12

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8))
    def test_sharpening(self, w):
        v = np.array(w) / np.sum(w)
        i = int(np.argmax(v))
        if np.sum(v == v[i]) > 1 or np.isclose(np.sort(v)[-2], v[i], rtol=1e-9):
            return
        out = reinforce(v)
        assert out[i] >= v[i] - 1e-12
        assert int(np.argmax(out)) == i

    @given(st.floats(1e-9, 1e9))
    def test_exact_match_dominance(self, other):
        np.testing.assert_array_equal(validities([0.0, other]), [1.0, 0.0])
        np.testing.assert_array_equal(validities([other, 0.0]), [0.0, 1.0])


class TestFuse:
    def test_examples(self):
        assert fuse_controls([1, 0], [3.5, -2.0]) == 3.5
        assert fuse_controls([0.5, 0.5], [2, 4]) == 3
        assert fuse_controls([0.2, 0.3, 0.5], [1.25] * 3) == pytest.approx(1.25, abs=1e-15)

    def test_errors(self):
        with pytest.raises(DimensionError):
            fuse_controls([0.5, 0.5], [1, 2, 3])
        with pytest.raises(InvalidValidities):
            fuse_controls([0.6, 0.6], [1, 2])
        with pytest.raises(InvalidValidities):
            fuse_controls([1.5, -0.5], [1, 2])

    @given(st.lists(st.tuples(st.floats(0.0, 1.0), st.floats(-1e6, 1e6)), min_size=1, max_size=8))
    def test_bounds(self, pairs):
        w = np.array([p[0] for p in pairs]) + 1e-6
        u = np.array([p[1] for p in pairs])
        v = w / w.sum()
        if abs(v.sum() - 1) > 1e-12:
            return
        out = fuse_controls(v, u)
        slack = 1e-9 * (1 + np.abs(u).max())
        assert u.min() - slack <= out <= u.max() + slack


class TestFilter:
    def test_passthrough(self):
        f = ResidueFilter(0.0, 0.01)
        np.testing.assert_array_equal(f([1.0, 2.0]), [1, 2])
        np.testing.assert_array_equal(f([3.0, 4.0]), [3, 4])

    def test_low_pass(self):
        f = ResidueFilter(0.09, 0.01)
        f([0.0])
        assert f([1.0])[0] == pytest.approx(0.1)

    def test_bad(self):
        with pytest.raises(ValueError):
            ResidueFilter(-1, 0.01)
        with pytest.raises(ValueError):
            validity_update([1.0, 2.0], "sharp")
