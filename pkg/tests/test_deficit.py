import numpy as np
import pytest
from numpy.testing import assert_allclose

from nccwitness import cmatrix as cm
from nccwitness import deficit as D
from nccwitness import states as S
from nccwitness.search import SearchConfig

QUICK = SearchConfig(refine_steps=600)


class TestDephase:
    def test_sigma(self):
        assert_allclose(D.dephase(S.sigma()).mat, np.diag([0.5, 0, 0.25, 0.25]))

    def test_diagonal_fixed(self):
        rho = S.DensityMatrix(2, 2, np.diag([0.1, 0.2, 0.3, 0.4]))
        assert np.array_equal(D.dephase(rho).mat, rho.mat)

    def test_idempotent(self, rng):
        rho = S.random_density(6, 3, rng, dims=(2, 3))
        once = D.dephase(rho)
        assert np.array_equal(D.dephase(once).mat, once.mat)

    def test_entropy_nondecreasing(self, rng):
        for _ in range(50):
            rho = S.random_density(4, int(rng.integers(1, 5)), rng, dims=(2, 2))
            assert S.entropy_purity(D.dephase(rho))[0] >= S.entropy_purity(rho)[0] - 1e-9


class TestZeroWayDeficit:
    def test_max_mixed(self, rng):
        d, _ = D.zero_way_deficit(S.max_mixed(2, 2), 4, rng, QUICK)
        assert d == 0.0

    def test_pcc_reaches_zero(self, rng):
        for _ in range(3):
            rho, _ = S.random_pcc(2, 2, rng=rng)
            d, basis = D.zero_way_deficit(rho, rng=rng)
            assert d <= 1e-4
            assert cm.is_unitary(basis.u_a) and cm.is_unitary(basis.u_b)

    def test_sigma_bounds(self, rng):
        d, _ = D.zero_way_deficit(S.sigma(), rng=rng)
        upper = S.entropy_purity(D.dephase(S.sigma()))[0] - S.entropy_purity(S.sigma())[0]
        assert abs(upper - 0.5) < 1e-12
        assert 0.01 < d <= upper + 1e-12

    def test_deficit_in_basis_unclamped(self, rng):
        rho = S.random_density(4, 4, rng, dims=(2, 2))
        for _ in range(20):
            basis = D.LocalBasisPair(cm.haar_unitary(2, rng), cm.haar_unitary(2, rng))
            assert D.deficit_in_basis(rho, basis) > -1e-9

    def test_local_unitary_covariance(self, rng):
        rho = S.random_density(4, 2, rng, dims=(2, 2))
        u = cm.kron(cm.haar_unitary(2, rng), cm.haar_unitary(2, rng))
        moved = S.DensityMatrix(2, 2, cm.conjugate(rho.mat, u))
        d1, _ = D.zero_way_deficit(rho, rng=rng)
        d2, _ = D.zero_way_deficit(moved, rng=rng)
        assert abs(d1 - d2) <= 2e-3


class TestClassifier:
    def test_random_pcc_exact_yes(self, rng):
        for _ in range(100):
            rho, _ = S.random_pcc(2, 3, rng=rng)
            r = D.has_product_eigenbasis(rho)
            assert (r.verdict, r.path) == (D.YES, D.EXACT_PATH)
            assert r.residual <= 1e-7

    def test_witness_basis_diagonalizes(self, rng):
        rho, _ = S.random_pcc(2, 2, rng=rng)
        r = D.has_product_eigenbasis(rho)
        w = cm.kron(r.witness_basis.u_a, r.witness_basis.u_b)
        rotated = w.conj().T @ rho.mat @ w
        assert np.max(np.abs(rotated - np.diag(np.diagonal(rotated)))) < 1e-10

    def test_nondegenerate_ncc_exact_no(self, rng):
        rho = S.random_density(4, 4, rng, dims=(2, 2))
        r = D.has_product_eigenbasis(rho)
        assert (r.verdict, r.path) == (D.NO, D.EXACT_PATH)

    def test_nondegenerate_sigma_variant_no(self):
        # unequal weights lift the degeneracy; still no product eigenbasis
        mat = 0.7 * cm.projector(S.product_ket("00")) + 0.3 * cm.projector(S.product_ket("1+"))
        r = D.has_product_eigenbasis(S.DensityMatrix(2, 2, mat))
        assert r.verdict == D.NO

    def test_sigma_no(self, rng):
        r = D.has_product_eigenbasis(S.sigma(), rng=rng)
        assert (r.verdict, r.path) == (D.NO, D.DEFICIT_PATH)

    def test_max_mixed_yes(self, rng):
        r = D.has_product_eigenbasis(S.max_mixed(2, 2), rng=rng)
        assert r.verdict == D.YES and r.residual == 0.0

    def test_json(self, rng):
        js = D.has_product_eigenbasis(S.random_pcc(2, 2, rng=rng)[0]).to_json()
        assert js["verdict"] == "Yes" and js["path"] == "exact_nondegenerate"
        assert js["witness_basis"]["u_a"]["rows"] == 2
