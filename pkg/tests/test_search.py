import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nccwitness import cmatrix as cm
from nccwitness import states as S
from nccwitness import search as MC
from nccwitness.witness import f_value, sigma_factors

A_HAT = (2 + math.sqrt(2)) / 4
B_HAT = math.sqrt(1 / 8)
C_OPT = MC.closed_form_c_opt()[0]

SMALL = dict(refine_steps=300)


def tau_sample(a=A_HAT, theta=0.0):
    """Pure product point |s>|phi> with phi the top eigenvector of rho_B(a, sqrt(a(1-a)))."""
    s = np.array([1, np.exp(1j * theta)]) / math.sqrt(2)
    s_perp = np.array([1, -np.exp(1j * theta)]) / math.sqrt(2)
    b = math.sqrt(a * (1 - a))
    eig = cm.hermitian_eig(np.array([[a, b], [b, 1 - a]]))
    basis_b = eig.vectors[:, ::-1]
    return S.PccSample(np.array([[1.0, 0.0], [0.0, 0.0]]), np.column_stack([s, s_perp]), basis_b)


class TestTauF:
    def test_optimum(self):
        assert abs(MC.tau_f(A_HAT, B_HAT) - 0.18213835) < 1e-8

    def test_plugins(self):
        assert MC.tau_f(1, 0) == 1 / 8
        assert MC.tau_f(0, 0) == 0

    def test_positivity(self):
        with pytest.raises(ValueError):
            MC.tau_f(0.5, 0.6)

    def test_family_consistency(self, rng):
        for _ in range(200):
            a = rng.uniform()
            b = math.sqrt(a * (1 - a)) * rng.uniform() * np.exp(2j * math.pi * rng.uniform())
            expected = MC.tau_f(a, b)
            for theta in (0.0, rng.uniform(0, 2 * math.pi)):
                rho = S.tau_state(S.TauParameters(theta, a, b))
                assert abs(f_value(rho, sigma_factors()) - expected) <= 1e-12


class TestClosedForm:
    def test_values(self):
        c, a = MC.closed_form_c_opt()
        assert abs(c - 0.182138) < 1e-6
        assert abs(a - A_HAT) < 1e-6

    def test_dense_grid_oracle(self):
        a = np.linspace(0, 1, 2_000_001)
        g = a * (1 + 2 * np.sqrt(a * (1 - a))) / 8
        assert abs(g.max() - C_OPT) < 1e-12
        assert abs(a[np.argmax(g)] - A_HAT) < 1e-6

    def test_product_state_grid_oracle(self):
        # brute force over pure product states, independent of the one-parameter reduction
        theta = np.deg2rad(np.arange(0, 180.5, 0.5))
        phi = np.deg2rad(np.arange(0, 360, 1.0))
        t, p = np.meshgrid(theta, phi, indexing="ij")
        x = np.stack([np.cos(t / 2).ravel(), (np.exp(1j * p) * np.sin(t / 2)).ravel()], axis=1)
        pa0, pa1 = np.abs(x[:, 0]) ** 2, np.abs(x[:, 1]) ** 2
        pb0 = np.abs(x[:, 0]) ** 2
        pbplus = np.abs(x[:, 0] + x[:, 1]) ** 2 / 2
        # for pure product states f = (p_a0 p_a1)(p_b0 p_b+), so the two maxima decouple
        f_max = (pa0 * pa1).max() * (pb0 * pbplus).max()
        assert f_max <= C_OPT + 1e-12
        assert C_OPT - f_max < 1e-5

    def test_plugin_and_bracket(self):
        assert MC.g_boundary(0.5) == 0.125
        _, a = MC.closed_form_c_opt()
        assert MC.g_boundary(a - 0.01) < MC.g_boundary(a) > MC.g_boundary(a + 0.01)

    def test_golden_section_quadratic(self):
        assert abs(MC.golden_section_max(lambda x: -(x - 0.3) ** 2, 0, 1) - 0.3) < 1e-6


class TestMonteCarlo:
    def test_w_sigma_bounded(self):
        r = MC.monte_carlo_search(sigma_factors(), 2, 2, MC.SearchConfig(n_samples=20_000, seed=1))
        assert 0.17 <= r.max_f <= C_OPT + 1e-8
        assert r.samples_evaluated == 20_000
        assert r.refine_improvement >= 0
        assert abs(f_value(r.best_sample.state(), sigma_factors()) - r.max_f) < 1e-12

    def test_fixed_profile_bound(self):
        cfg = MC.SearchConfig(n_samples=20_000, seed=2, eig_mode=(1 / 3, 1 / 3, 1 / 3, 0))
        r = MC.monte_carlo_search(sigma_factors(), 2, 2, cfg)
        assert r.max_f <= 1 / 6 + 1e-9
        assert_allclose(np.sort(r.best_sample.eigenvalues.ravel()), [0, 1 / 3, 1 / 3, 1 / 3])

    def test_shard_independent(self):
        results = {
            MC.monte_carlo_search(sigma_factors(), 2, 2,
                                  MC.SearchConfig(n_samples=30_000, seed=9, shards=k, **SMALL)).max_f
            for k in (1, 4, 16)
        }
        assert len(results) == 1

    def test_deterministic(self):
        cfg = MC.SearchConfig(n_samples=5000, seed=4, **SMALL)
        a = MC.monte_carlo_search(S.qutrit_02plus_factors(), 3, 3, cfg).to_json()
        b = MC.monte_carlo_search(S.qutrit_02plus_factors(), 3, 3, cfg).to_json()
        assert a == b

    def test_sample_at_matches_batch(self):
        cfg = MC.SearchConfig(n_samples=5000, seed=11)
        sample = MC.sample_at(4100, 2, 2, cfg)
        eig, ua, ub = MC._block_samples(1, 904, 2, 2, cfg)
        assert np.array_equal(sample.basis_a, ua[4])

    def test_batched_traces_match_direct(self, rng):
        eig = S.sample_eigenvalues(2, 3, S.DIRICHLET, rng, size=5)
        ua, ub = cm.haar_unitary(2, rng, size=5), cm.haar_unitary(3, rng, size=5)
        a = cm.projector(rng.standard_normal(6) + 1j * rng.standard_normal(6))
        got = MC.pcc_factor_traces([a], eig, ua, ub)[:, 0]
        for k in range(5):
            rho = S.assemble_pcc(eig[k], ua[k], ub[k])
            assert abs(got[k] - cm.trace_product(rho, a)) < 1e-12

    def test_rejects_bad_factor(self):
        with pytest.raises(ValueError):
            MC.monte_carlo_search([cm.kron(cm.Z, cm.I2)], 2, 2, MC.SearchConfig(n_samples=10))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MC.SearchConfig(refine_decay=1.0)
        with pytest.raises(ValueError):
            MC.SearchConfig(n_samples=0)

    def test_report_json_roundtrip(self):
        r = MC.monte_carlo_search(sigma_factors(), 2, 2, MC.SearchConfig(n_samples=100, **SMALL))
        back = S.PccSample.from_json(r.to_json()["best_sample"])
        assert np.array_equal(back.basis_b, r.best_sample.basis_b)


class TestRefine:
    def test_fixed_point(self):
        start = tau_sample()
        f0 = f_value(start.state(), sigma_factors())
        assert abs(f0 - C_OPT) < 1e-12
        _, f = MC.refine(sigma_factors(), start, MC.SearchConfig(refine_steps=500))
        assert abs(f - f0) <= 1e-9

    def test_monotone_and_improves(self, rng):
        _, start = S.random_pcc(2, 2, rng=rng)
        f0 = f_value(start.state(), sigma_factors())
        trace = []
        _, f = MC.refine(sigma_factors(), start, MC.SearchConfig(refine_steps=400), trace=trace)
        assert f >= f0
        assert np.all(np.diff(trace) >= 0)
        assert f <= C_OPT + 1e-8
