"""Product-form witness maps ``rho -> c - prod_i Tr(rho A_i)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cmatrix as cm
from .states import DensityMatrix, qutrit_02plus_factors, product_ket

DEFAULT_TOL = 1e-9
PSD_TOL = 1e-9
C_02PLUS_CEILING = 0.02


class WitnessError(ValueError):
    """Raised for malformed witnesses or mismatched inputs."""


@dataclass(frozen=True, eq=False)
class WitnessMap:
    c: float
    factors: tuple[np.ndarray, ...]
    dim_a: int
    dim_b: int

    @property
    def m(self) -> int:
        return len(self.factors)

    def to_json(self) -> dict:
        return {
            "c": self.c,
            "factors": [cm.matrix_to_json(a) for a in self.factors],
            "dim_a": self.dim_a,
            "dim_b": self.dim_b,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WitnessMap":
        try:
            factors = [cm.matrix_from_json(f) for f in obj["factors"]]
            return make_witness(float(obj["c"]), factors, obj.get("dim_a"), obj.get("dim_b"))
        except (KeyError, TypeError) as exc:
            raise WitnessError(f"malformed witness JSON: {exc}") from None


@dataclass(frozen=True)
class Verdict:
    value: float
    detected: bool
    tolerance: float


def _infer_dims(d: int) -> tuple[int, int]:
    root = math.isqrt(d)
    if root * root != d:
        raise WitnessError(f"cannot infer subsystem dims for total dimension {d}; pass dim_a/dim_b")
    return root, root


def check_positive(a: np.ndarray, label: str = "factor") -> np.ndarray:
    a = cm.as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise WitnessError(f"{label} is not square: {a.shape}")
    asym = cm.max_asymmetry(a)
    if asym > cm.HERMITIAN_TOL:
        raise WitnessError(f"{label} is not Hermitian (max asymmetry {asym:.3e})")
    lam_min = float(np.linalg.eigvalsh(a)[0])
    if lam_min < -PSD_TOL:
        raise WitnessError(f"{label} has negative eigenvalue {lam_min:.3e}")
    return a


def make_witness(c: float, factors, dim_a: int | None = None, dim_b: int | None = None) -> WitnessMap:
    if c < 0:
        raise WitnessError(f"constant c must be nonnegative, got {c}")
    factors = list(factors)
    if not factors:
        raise WitnessError("a witness needs at least one factor")
    checked = [check_positive(a, f"factor {i}") for i, a in enumerate(factors)]
    d = checked[0].shape[0]
    for i, a in enumerate(checked):
        if a.shape != (d, d):
            raise WitnessError(f"factor {i} has shape {a.shape}, expected {(d, d)}")
        a.setflags(write=False)
    if dim_a is None or dim_b is None:
        dim_a, dim_b = _infer_dims(d)
    if dim_a * dim_b != d:
        raise WitnessError(f"dims {dim_a}x{dim_b} do not match factor size {d}")
    return WitnessMap(float(c), tuple(checked), int(dim_a), int(dim_b))


def sigma_factors() -> list[np.ndarray]:
    return [cm.projector(product_ket("00")), cm.projector(product_ket("1+"))]


def w_sigma(c: float | None = None) -> WitnessMap:
    """Witness for the |00>,|1+> mixture; ``c`` defaults to the optimal constant."""
    if c is None:
        from .search import closed_form_c_opt

        c = closed_form_c_opt()[0]
    return make_witness(c, sigma_factors(), 2, 2)


def w_bell() -> WitnessMap:
    return make_witness(0.5, [cm.projector(cm.ket(1, 0, 0, 1))], 2, 2)


def w_02plus(c: float = C_02PLUS_CEILING) -> WitnessMap:
    return make_witness(c, qutrit_02plus_factors(), 3, 3)


CANONICAL_WITNESSES = {"w_sigma": w_sigma, "w_bell": w_bell, "w_02plus": w_02plus}


def canonical_witness(name: str) -> WitnessMap:
    try:
        return CANONICAL_WITNESSES[name]()
    except KeyError:
        raise WitnessError(f"unknown canonical witness {name!r}") from None


def _matrix_of(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else cm.as_cmatrix(rho)


def factor_traces(rho, factors) -> list[float]:
    """``Tr(rho A_i)`` per factor; small negative roundoff is clamped to 0."""
    mat = _matrix_of(rho)
    out = []
    for i, a in enumerate(factors):
        if a.shape != mat.shape:
            raise WitnessError(f"factor {i} has shape {a.shape}, state has {mat.shape}")
        t = cm.trace_product(mat, a)
        if t < -1e-10:
            raise WitnessError(f"Tr(rho A_{i}) = {t:.3e} is negative")
        out.append(max(t, 0.0))
    return out


def f_value(rho, factors) -> float:
    return math.prod(factor_traces(rho, factors))


def evaluate(w: WitnessMap, rho) -> float:
    if isinstance(rho, DensityMatrix) and (rho.dim_a, rho.dim_b) != (w.dim_a, w.dim_b):
        raise WitnessError(
            f"state dims {rho.dim_a}x{rho.dim_b} do not match witness dims {w.dim_a}x{w.dim_b}")
    return w.c - f_value(rho, w.factors)


def verdict(w: WitnessMap, rho, tol: float = DEFAULT_TOL) -> Verdict:
    if tol < 0:
        raise WitnessError("tolerance must be nonnegative")
    value = evaluate(w, rho)
    return Verdict(value=value, detected=value < -tol, tolerance=tol)


def _top_vector(h: np.ndarray) -> np.ndarray:
    return cm.hermitian_eig(h).vectors[:, -1]


def linear_optimal_c(a, restarts: int = 32, rng: np.random.Generator | None = None,
                     dim_a: int | None = None, dim_b: int | None = None,
                     max_iter: int = 500, tol: float = 1e-12) -> float:
    """Maximum of ``<xy|A|xy>`` over product unit vectors.

    Alternates between the two sides: with one side fixed the objective is a
    Hermitian form in the other, maximized by its top eigenvector.  Each
    restart starts from a Haar-random B-side vector.
    """
    a = check_positive(a, "A")
    if dim_a is None or dim_b is None:
        dim_a, dim_b = _infer_dims(a.shape[0])
    rng = np.random.default_rng() if rng is None else rng
    t = a.reshape(dim_a, dim_b, dim_a, dim_b)
    best = -np.inf
    for _ in range(restarts):
        y = cm.haar_unitary(dim_b, rng)[:, 0]
        value = -np.inf
        for _ in range(max_iter):
            x = _top_vector(np.einsum("j,ajbk,k->ab", y.conj(), t, y))
            y = _top_vector(np.einsum("a,ajbk,b->jk", x.conj(), t, x))
            new = float(np.einsum("a,j,ajbk,b,k->", x.conj(), y.conj(), t, x, y).real)
            if new - value < tol:
                value = max(value, new)
                break
            value = new
        best = max(best, value)
    return best
