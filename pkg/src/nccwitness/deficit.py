"""Zero-way deficit estimate and a product-eigenbasis classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cmatrix as cm
from .search import SearchConfig
from .states import DensityMatrix, entropy_purity

DEGENERACY_GAP = 1e-8
DEFAULT_TOL = 1e-7
DEFAULT_RESTARTS = 64

YES, NO, INDETERMINATE = "Yes", "No", "Indeterminate"
EXACT_PATH, DEFICIT_PATH = "exact_nondegenerate", "deficit_minimization"


@dataclass(frozen=True, eq=False)
class LocalBasisPair:
    u_a: np.ndarray
    u_b: np.ndarray

    def to_json(self) -> dict:
        return {"u_a": cm.matrix_to_json(self.u_a), "u_b": cm.matrix_to_json(self.u_b)}


@dataclass(frozen=True, eq=False)
class ClassificationResult:
    verdict: str
    residual: float
    witness_basis: LocalBasisPair | None
    path: str
    deficit_bits: float | None = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "residual": self.residual,
            "path": self.path,
            "deficit_bits": self.deficit_bits,
            "witness_basis": None if self.witness_basis is None else self.witness_basis.to_json(),
        }


def dephase(rho: DensityMatrix) -> DensityMatrix:
    """Complete dephasing in the computational product basis."""
    return DensityMatrix(rho.dim_a, rho.dim_b, np.diag(np.diagonal(rho.mat)))


def _diag_entropy(p: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits along the last axis."""
    p = np.where(p > 1e-12, p, 1.0)
    return -np.sum(p * np.log2(p), axis=-1)


def _dephased_entropies(mat: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    # diag of (Ua x Ub)^dagger rho (Ua x Ub): populations in the rotated product basis
    da, db = ua.shape[-1], ub.shape[-1]
    t = mat.reshape(da, db, da, db)
    pops = np.einsum("rxi,ryj,xyzw,rzi,rwj->rij", ua.conj(), ub.conj(), t, ua, ub, optimize=True)
    return _diag_entropy(pops.real.reshape(pops.shape[0], -1))


def deficit_in_basis(rho: DensityMatrix, basis: LocalBasisPair) -> float:
    """Unclamped ``S(dephased in basis) - S(rho)`` in bits.

    The basis columns are the local measurement vectors.
    """
    s_rho = entropy_purity(rho)[0]
    return float(_dephased_entropies(rho.mat, basis.u_a[None], basis.u_b[None])[0]) - s_rho


def zero_way_deficit(rho: DensityMatrix, restarts: int = DEFAULT_RESTARTS,
                     rng: np.random.Generator | None = None,
                     schedule: SearchConfig | None = None) -> tuple[float, LocalBasisPair]:
    """Minimize the dephasing entropy gap over local bases.

    All restarts are hill-climbed in lockstep with the refinement schedule
    of :class:`SearchConfig`; restart 0 starts from the computational basis,
    the rest from Haar-random bases.  Returns the clamped deficit in bits
    and the best local basis pair found.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    schedule = SearchConfig() if schedule is None else schedule
    da, db = rho.dim_a, rho.dim_b
    ua = cm.haar_unitary(da, rng, size=restarts)
    ub = cm.haar_unitary(db, rng, size=restarts)
    ua[0], ub[0] = np.eye(da), np.eye(db)
    cur = _dephased_entropies(rho.mat, ua, ub)

    step = schedule.refine_initial_step
    for _ in range(schedule.refine_steps):
        ua_new = ua @ cm.cayley_unitary(cm.random_hermitian(da, rng, size=restarts), step)
        ub_new = ub @ cm.cayley_unitary(cm.random_hermitian(db, rng, size=restarts), step)
        new = _dephased_entropies(rho.mat, ua_new, ub_new)
        better = new < cur
        ua[better], ub[better], cur[better] = ua_new[better], ub_new[better], new[better]
        step *= schedule.refine_decay

    k = int(np.argmin(cur))
    basis = LocalBasisPair(ua[k], ub[k])
    raw = float(cur[k]) - entropy_purity(rho)[0]
    if raw < -1e-9:
        raise ArithmeticError(f"dephased entropy fell below S(rho) by {-raw:.3e}")
    return max(raw, 0.0), basis


def _cluster(vectors: list[np.ndarray]) -> tuple[list[int], list[np.ndarray], float]:
    """Group unit vectors that agree up to phase.

    Returns group labels, one representative per group, and the worst
    deviation: ``1 - |overlap|`` within a group or ``|overlap|`` between
    representatives.
    """
    reps: list[np.ndarray] = []
    labels = []
    worst = 0.0
    for v in vectors:
        overlaps = [abs(np.vdot(r, v)) for r in reps]
        k = int(np.argmax(overlaps)) if overlaps else -1
        if k >= 0 and overlaps[k] > 0.5:
            labels.append(k)
            worst = max(worst, 1.0 - overlaps[k])
        else:
            labels.append(len(reps))
            reps.append(v)
    for i in range(len(reps)):
        for j in range(i):
            worst = max(worst, abs(np.vdot(reps[i], reps[j])))
    return labels, reps, worst


def _exact_classification(rho: DensityMatrix, vectors: np.ndarray, tol: float) -> ClassificationResult:
    da, db = rho.dim_a, rho.dim_b
    a_side, b_side, residual = [], [], 0.0
    for k in range(vectors.shape[1]):
        u, s, vh = np.linalg.svd(vectors[:, k].reshape(da, db))
        residual = max(residual, float(s[1]) if s.size > 1 else 0.0)
        a_side.append(u[:, 0])
        b_side.append(vh[0])
    labels_a, reps_a, dev_a = _cluster(a_side)
    labels_b, reps_b, dev_b = _cluster(b_side)
    residual = max(residual, dev_a, dev_b)
    grid = set(zip(labels_a, labels_b))
    if len(reps_a) != da or len(reps_b) != db or len(grid) != da * db:
        return ClassificationResult(NO, max(residual, 1.0), None, EXACT_PATH)
    if residual > tol:
        return ClassificationResult(NO, residual, None, EXACT_PATH)
    basis = LocalBasisPair(np.column_stack(reps_a), np.column_stack(reps_b))
    return ClassificationResult(YES, residual, basis, EXACT_PATH)


def has_product_eigenbasis(rho: DensityMatrix, tol: float = DEFAULT_TOL,
                           restarts: int = DEFAULT_RESTARTS,
                           rng: np.random.Generator | None = None) -> ClassificationResult:
    """Decide whether ``rho`` is diagonal in some product basis.

    With a nondegenerate spectrum the eigenbasis is unique up to phases and is
    checked directly.  Otherwise the deficit estimate decides: ``Yes`` at or
    below ``tol``, ``No`` at or above ``100 * tol``, ``Indeterminate`` in
    between.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    eig = cm.hermitian_eig(rho.mat)
    if np.all(np.diff(eig.values) > DEGENERACY_GAP):
        return _exact_classification(rho, eig.vectors, tol)
    deficit, basis = zero_way_deficit(rho, restarts, rng)
    if deficit <= tol:
        verdict = YES
    elif deficit >= 100 * tol:
        verdict = NO
    else:
        verdict = INDETERMINATE
    return ClassificationResult(verdict, deficit, basis if verdict == YES else None,
                                DEFICIT_PATH, deficit_bits=deficit)
