"""Dense complex linear algebra on small numpy matrices.

Matrices are plain ``complex128`` ndarrays.  Subsystem A (qubit 1) is always
the left Kronecker factor, so ``|x1 x2>`` has index ``x1 * d_b + x2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
JACOBI_OFF_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


class MatrixError(ValueError):
    """Raised when a matrix violates a structural precondition."""


@dataclass(frozen=True)
class HermitianEigen:
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def as_cmatrix(a) -> np.ndarray:
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise MatrixError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=np.complex128).ravel()
    return v / np.linalg.norm(v)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    return np.outer(v, v.conj())


def kron(a, b, *more) -> np.ndarray:
    """Kronecker product; the first argument is the left (subsystem-A) factor."""
    return reduce(np.kron, (a, b, *more)).astype(np.complex128, copy=False)


def max_asymmetry(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return h.shape[0] == h.shape[1] and max_asymmetry(h) <= tol


def unitarity_defect(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return u.shape[0] == u.shape[1] and unitarity_defect(u) <= tol


def conjugate(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Return ``U rho U^dagger``; ``u`` must be unitary."""
    if u.shape[1] != rho.shape[0] or u.shape[0] != u.shape[1]:
        raise MatrixError(f"shape mismatch: U {u.shape} vs rho {rho.shape}")
    defect = unitarity_defect(u)
    if defect > UNITARY_TOL:
        raise MatrixError(f"conjugating matrix is not unitary (defect {defect:.3e})")
    return u @ rho @ u.conj().T


def trace_product(rho: np.ndarray, a: np.ndarray) -> float:
    """Real value of ``Tr(rho A)`` for Hermitian ``rho`` and ``A``."""
    if rho.shape != a.shape:
        raise MatrixError(f"shape mismatch: {rho.shape} vs {a.shape}")
    for name, m in (("rho", rho), ("A", a)):
        if not is_hermitian(m):
            raise MatrixError(f"{name} is not Hermitian (asymmetry {max_asymmetry(m):.3e})")
    # Tr(rho A) = sum_ij rho_ij A_ji
    t = complex(np.sum(rho * a.T))
    if abs(t.imag) > 1e-10:
        raise MatrixError(f"Tr(rho A) has imaginary part {t.imag:.3e}")
    return t.real


def hermitian_eig(h, *, tol: float = JACOBI_OFF_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> HermitianEigen:
    """Cyclic complex Jacobi eigensolver.

    Each rotation first removes the phase of the pivot ``h[p, q]`` and then
    applies the real symmetric Jacobi rotation that annihilates it.  Sweeps
    stop once the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||h||_F)``.

    Returns eigenvalues in ascending order (stable with respect to the
    original diagonal position) and the matching eigenvectors as columns.
    """
    a = as_cmatrix(h).copy()
    n = a.shape[0]
    if a.shape != (n, n):
        raise MatrixError(f"matrix is not square: {a.shape}")
    asym = max_asymmetry(a)
    if asym > HERMITIAN_TOL:
        raise MatrixError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        if np.linalg.norm(a[off_mask]) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    else:
        raise MatrixError(f"Jacobi did not converge in {max_sweeps} sweeps")

    values = np.diag(a).real.copy()
    order = np.argsort(values, kind="stable")
    return HermitianEigen(values=values[order], vectors=v[:, order])


def haar_unitary(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random unitary(s) from a QR-factored Ginibre sample.

    Columns of Q are rescaled by the phases of R's diagonal so the result is
    exactly Haar distributed.  With ``size`` a stack of shape ``(size, d, d)``
    is returned.
    """
    if d < 1:
        raise MatrixError("dimension must be at least 1")
    shape = (d, d) if size is None else (size, d, d)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def cayley_unitary(h: np.ndarray, step: float | np.ndarray) -> np.ndarray:
    """Unitary ``(I - i s h/2)^{-1} (I + i s h/2)`` close to ``exp(i s h)``.

    ``h`` may be a stack of Hermitian matrices; ``step`` broadcasts over it.
    """
    step = np.asarray(step, dtype=float)[..., None, None]
    eye = np.eye(h.shape[-1])
    half = 0.5j * step * h
    return np.linalg.solve(eye - half, eye + half)


def random_hermitian(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = (d, d) if size is None else (size, d, d)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / 2.0
    return g + dagger(g)


def matrix_to_json(m: np.ndarray) -> dict:
    m = as_cmatrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise MatrixError(f"malformed matrix JSON: {exc}") from None
    if len(entries) != rows * cols:
        raise MatrixError(f"expected {rows * cols} entries, got {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return as_cmatrix(flat.reshape(rows, cols))


def dumps_matrix(m: np.ndarray) -> str:
    return json.dumps(matrix_to_json(m))


# Frequently used single-qubit operators.
I2 = np.eye(2, dtype=np.complex128)
Z = np.diag([1.0, -1.0]).astype(np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)
KET_PLUS = np.array([1, 1], dtype=np.complex128) / np.sqrt(2.0)
