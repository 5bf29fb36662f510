import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vsslab.controllers import SurfaceDegenerate
from vsslab.numerics import DimensionError, lyapunov_expr, solve_lyapunov
from vsslab.plant import LinearModel, ModelBank, auv_nominal, build_model_bank
from vsslab.stability import (GainBound, Infeasible, StabilityReport, check_free_regime, check_gain,
                              check_multi_gain, check_reduced_surface, check_state_feedback, estimate_gain_bound,
                              find_common_p, gain_bound_closed_form, reaching_products, reduced_dynamics,
                              sample_region)
from vsslab.stability import _ratio
from vsslab.surfaces import SlidingSurfaceSpec, default_surface, place_surface

I2 = np.eye(2)
NOM = auv_nominal()
SPEC = default_surface()
BANK = build_model_bank(NOM, 3, 0.2)
PER_MODEL = [place_surface(m, (0.8, 1.0, 1.2)) for m in BANK]

# Two-model bank whose closed-loop diagonal members share a P while the
# symmetrised cross member is unstable (found by random search, seed 7).
CROSS_A = [np.array([[-0.4, -0.9], [0.5, 1.2]]), np.array([[0.5, 0.7], [0.5, -1.0]])]
CROSS_B = [np.array([-0.2, 0.7]), np.array([0.9, -0.6])]
CROSS_K = [np.array([-2.9, 2.8]), np.array([2.2, 0.6])]


def _cross_bank():
    return ModelBank(tuple(LinearModel(a, b, [1.0, 0.0]) for a, b in zip(CROSS_A, CROSS_B)))


def _hurwitz(rng, n):
    low = rng.standard_normal((n, n))
    return -low @ low.T - 0.1 * np.eye(n) + 0.3 * rng.standard_normal((n, n))


class TestFreeRegime:
    def test_pass(self):
        rep = check_free_regime([-I2], I2)
        assert rep.passed and rep.margin == pytest.approx(-2.0) and rep.witness is None

    def test_unstable_member(self):
        rep = check_free_regime([-I2, I2], I2)
        assert not rep.passed
        assert rep.witness["kind"] == "lyapunov" and rep.witness["member"] == 1

    def test_p_not_pd(self):
        rep = check_free_regime([-I2], -I2)
        assert not rep.passed and rep.witness["kind"] == "p-not-positive-definite"

    def test_dimension(self):
        with pytest.raises(DimensionError):
            check_free_regime([-I2], np.eye(3))

    def test_auv_model_fails(self):
        assert not check_free_regime(ModelBank((NOM,)), np.eye(4)).passed


class TestStateFeedback:
    def test_n1_matches_free_regime(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b, k = rng.standard_normal((2, 2)), rng.standard_normal(2), rng.standard_normal(2)
            p = np.eye(2) + 0.1 * np.diag(rng.random(2))
            r1 = check_state_feedback([LinearModel(a, b, [1, 0])], [k], p)
            r2 = check_free_regime([a - np.outer(b, k)], p)
            assert (r1.passed, r1.margin) == (r2.passed, r2.margin)

    def test_identical_models_cross_equals_diagonal(self):
        a = np.array([[0.0, 1.0], [-1.0, 0.5]])
        m = LinearModel(a, [0.0, 1.0], [1.0, 0.0])
        k = np.array([1.0, 3.0])
        p = solve_lyapunov(a - np.outer(m.b, k), I2)
        rep2 = check_state_feedback([m, m], [k, k], p)
        rep1 = check_state_feedback([m], [k], p)
        assert rep2.passed and rep2.margin == rep1.margin

    def test_cross_only_violation(self):
        bank = _cross_bank()
        g = [[m.a - np.outer(m.b, k) for k in CROSS_K] for m in bank]
        p = find_common_p([g[0][0], g[1][1]])
        assert not isinstance(p, Infeasible)
        assert check_free_regime([g[0][0], g[1][1]], p).passed
        rep = check_state_feedback(bank, CROSS_K, p)
        assert not rep.passed
        assert rep.witness["member"] == (0, 1)
        assert rep.margin == pytest.approx(4.291362773913148, rel=1e-6)

    def test_gain_count(self):
        with pytest.raises(DimensionError):
            check_state_feedback(_cross_bank(), CROSS_K[:1], I2)


class TestReduced:
    def test_double_integrator(self):
        m = LinearModel([[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0], [1.0, 0.0])
        spec = SlidingSurfaceSpec.reduced([1.0])
        np.testing.assert_array_equal(reduced_dynamics(m, spec), [[-1.0]])
        assert check_reduced_surface([m], spec, np.array([[1.0]])).passed

    def test_hurwitz_companion(self):
        a = np.diag([1.0, 1.0, 1.0], 1)
        m = LinearModel(a, [0, 0, 0, 1.0], [1.0, 0, 0, 0])
        spec = SlidingSurfaceSpec.reduced([1.0, 3.0, 3.0])  # (s + 1)^3
        a_red = reduced_dynamics(m, spec)
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(a_red).real), [-1, -1, -1], atol=1e-4)
        p = solve_lyapunov(a_red, np.eye(3))
        assert np.abs(lyapunov_expr(a_red, p) + np.eye(3)).max() < 1e-12
        assert check_reduced_surface([m], spec, p).passed

    def test_invalid_l(self):
        with pytest.raises(ValueError):
            check_reduced_surface([NOM], [1.0, 0.0, 2.0])

    def test_auv_bank_per_model_surfaces(self):
        rep = check_reduced_surface(BANK, PER_MODEL)
        assert rep.passed and rep.details["reduction"] == "equivalent-control"

    def test_reduced_eigs_are_placed_poles(self):
        for m, spec in zip(BANK, PER_MODEL):
            eig = np.sort(np.linalg.eigvals(reduced_dynamics(m, spec)).real)
            np.testing.assert_allclose(eig, [-1.2, -1.0, -0.8], atol=1e-6)

    def test_unstable_surface_fails(self):
        rep = check_reduced_surface(BANK, [1.0, 2.0, 2.0])
        assert not rep.passed


class TestGainBound:
    def test_zero_dynamics(self):
        m = LinearModel(np.zeros((2, 2)), [1.0, 0.0], [1.0, 0.0])
        assert estimate_gain_bound(m, SlidingSurfaceSpec.full_row([1.0, 0.5]), 0.0).k_min == 0.0

    def test_monotone_in_m(self):
        vals = [estimate_gain_bound(NOM, SPEC, mb).k_min for mb in (0.05, 0.1, 0.2, 0.4)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_degenerate(self):
        with pytest.raises(SurfaceDegenerate):
            estimate_gain_bound(NOM, SlidingSurfaceSpec.full_row([0, 0, 1, 0]), 0.1)

    def test_golden_and_closed_form(self):
        gb = estimate_gain_bound(NOM, SPEC, 0.1, 2.0, 5000, 0)
        assert isinstance(gb, GainBound)
        assert gb.k_min == pytest.approx(22388.129, rel=1e-6)
        assert gb.k_min == pytest.approx(gain_bound_closed_form(NOM, SPEC, 0.1, 2.0), rel=1e-8)

    def test_dense_resample(self):
        gb = estimate_gain_bound(NOM, SPEC, 0.1, 2.0, 5000, 0)
        dense = estimate_gain_bound(NOM, SPEC, 0.1, 2.0, 50_000, 991)
        assert abs(dense.k_min - gb.k_min) <= 0.05 * dense.k_min
        # raw dense sampling approaches the bound from below
        xs = sample_region(SPEC.row, 2.0, 50_000, 992)
        raw = _ratio(xs, NOM.a.T @ SPEC.row, SPEC.row, abs(SPEC.row @ NOM.b), 0.1).max()
        assert 0.9 * gb.k_min <= raw <= gb.k_min * (1 + 1e-9)

    def test_usefulness(self):
        gb = estimate_gain_bound(NOM, SPEC, 0.1)
        fresh = sample_region(SPEC.row, 2.0, 1000, seed=4242)
        assert np.all(reaching_products(NOM, SPEC, 0.1, 1.1 * gb.k_min, fresh) < 0)
        assert np.any(reaching_products(NOM, SPEC, 0.1, 0.5 * gb.k_min, fresh) >= 0)
        assert check_gain(NOM, SPEC, 0.1, 1.1 * gb.k_min).passed
        rep = check_gain(NOM, SPEC, 0.1, 0.5 * gb.k_min)
        assert not rep.passed and "x" in rep.witness

    def test_sampler_region(self):
        xs = sample_region(SPEC.row, 2.0, 2000, 5)
        assert np.all(np.linalg.norm(xs, axis=1) <= 2.0 + 1e-12)
        assert np.all(np.abs(xs @ SPEC.row) >= 0.01 * (1 - 1e-12))


class TestMultiGain:
    def test_n1_matches_single(self):
        gb = estimate_gain_bound(NOM, SPEC, 0.1)
        for f, expect in ((1.1, True), (0.5, False)):
            rep = check_multi_gain([NOM], [SPEC], [1.0], 0.1, f * gb.k_min)
            assert rep.passed is expect
            assert rep.details["bound"] == gb.k_min

    def test_mu_scaling_monotone(self):
        bounds = [check_multi_gain(BANK, PER_MODEL, np.full(3, c), 0.1, 1.0).details["bound"]
                  for c in (1 / 3, 0.25, 0.1)]
        assert bounds[0] > bounds[1] > bounds[2]

    def test_golden(self):
        rep = check_multi_gain(BANK, PER_MODEL, np.full(3, 1 / 3), 0.1, 1.0)
        assert rep.details["bound"] == pytest.approx(25407.181, rel=1e-6)
        assert not rep.passed and rep.witness["gain_below_bound"]
        closed = sum(gain_bound_closed_form(m, s, 0.1, 2.0) for m, s in zip(BANK, PER_MODEL)) / 3
        assert rep.details["bound"] == pytest.approx(closed, rel=1e-8)

    def test_usefulness(self):
        bound = check_multi_gain(BANK, PER_MODEL, np.full(3, 1 / 3), 0.1, 1.0).details["bound"]
        assert check_multi_gain(BANK, PER_MODEL, np.full(3, 1 / 3), 0.1, 1.1 * bound, seed=9).passed
        assert not check_multi_gain(BANK, PER_MODEL, np.full(3, 1 / 3), 0.1, 0.5 * bound, seed=9).passed

    def test_per_model_gains(self):
        rep = check_multi_gain(BANK, PER_MODEL, [0.2, 0.3, 0.5], 0.1, [1.0, 2.0, 3.0])
        assert rep.details["K"] == pytest.approx(0.2 + 0.6 + 1.5)


class TestFindCommonP:
    def test_minus_identity(self):
        np.testing.assert_allclose(find_common_p([-I2]), I2, atol=1e-12)

    def test_duplicates(self):
        a = np.array([[-1.0, 2.0], [0.0, -3.0]])
        np.testing.assert_array_equal(find_common_p([a, a]), find_common_p([a]))

    def test_non_hurwitz_member(self):
        out = find_common_p([np.diag([-1.0, -2.0]), np.diag([1.0, -2.0])])
        assert isinstance(out, Infeasible) and not out
        assert "member 1" in out.reason

    def test_soundness_random_banks(self):
        rng = np.random.default_rng(11)
        found = 0
        for _ in range(40):
            n = int(rng.integers(2, 5))
            base = _hurwitz(rng, n)
            mats = [base + 0.2 * rng.standard_normal((n, n)) for _ in range(int(rng.integers(1, 4)))]
            p = find_common_p(mats)
            if isinstance(p, Infeasible):
                continue
            found += 1
            assert check_free_regime(mats, p).passed
        assert found >= 20

    def test_state_feedback_bank_from_cli_design(self):
        # closed loops of the AUV bank under the sliding-mode equivalent law
        mats = []
        for m, spec in zip(BANK, PER_MODEL):
            row = spec.row
            k = (row @ m.a + 0.1 * row) / (row @ m.b) + 2.0 * row
            mats.append(m.a - np.outer(m.b, k))
        p = find_common_p(mats)
        assert not isinstance(p, Infeasible)
        assert check_free_regime(mats, p).passed


class TestReport:
    def test_witness_iff_failing(self):
        with pytest.raises(ValueError):
            StabilityReport("x", True, -1.0, {"kind": "a"})
        assert StabilityReport("x", False, 1.0).witness == {}

    def test_to_text(self):
        rep = check_free_regime([-I2, I2], I2)
        text = rep.to_text("free")
        assert text.splitlines()[:3] == ["free.condition = free-regime", "free.pass = false",
                                         "free.margin = 2.0"]
        assert "free.witness.member = 1" in text
