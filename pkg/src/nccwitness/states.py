"""Bipartite density matrices: named states, random generators, functionals."""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import cmatrix as cm

EIG_ZERO = 1e-12
PSD_TOL = 1e-9
TRACE_TOL = 1e-10

DIRICHLET = "dirichlet_uniform"


class StateError(ValueError):
    """Raised for invalid state data or parameters."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dim_a: int
    dim_b: int
    mat: np.ndarray

    def __post_init__(self):
        m = cm.as_cmatrix(self.mat)
        d = self.dim_a * self.dim_b
        if m.shape != (d, d):
            raise StateError(f"matrix shape {m.shape} does not match dims {self.dim_a}x{self.dim_b}")
        asym = cm.max_asymmetry(m)
        if asym > cm.HERMITIAN_TOL:
            raise StateError(f"state is not Hermitian (max asymmetry {asym:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateError(f"state has trace {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(m)[0])
        if lam_min < -PSD_TOL:
            raise StateError(f"state has negative eigenvalue {lam_min:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    def to_json(self) -> dict:
        out = cm.matrix_to_json(self.mat)
        out.update(dim_a=self.dim_a, dim_b=self.dim_b)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        try:
            dim_a, dim_b = int(obj["dim_a"]), int(obj["dim_b"])
        except (KeyError, TypeError) as exc:
            raise StateError(f"state JSON lacks dimensions: {exc}") from None
        return cls(dim_a, dim_b, cm.matrix_from_json(obj))


@dataclass(frozen=True, eq=False)
class PccSample:
    """Product-eigenbasis state ``sum_ij e_ij |u_i><u_i| (x) |v_j><v_j|``.

    ``eigenvalues[i, j]`` belongs to column ``i`` of ``basis_a`` and column
    ``j`` of ``basis_b``.
    """

    eigenvalues: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.basis_a.shape[0], self.basis_b.shape[0]

    @property
    def p(self) -> float:
        """Population ``|<0|u_0>|^2`` of the first A-side eigenvector."""
        return float(abs(self.basis_a[0, 0]) ** 2)

    def matrix(self) -> np.ndarray:
        return assemble_pcc(self.eigenvalues, self.basis_a, self.basis_b)

    def state(self) -> DensityMatrix:
        da, db = self.dims
        return DensityMatrix(da, db, self.matrix())

    def to_json(self) -> dict:
        return {
            "eigenvalues": cm.matrix_to_json(self.eigenvalues),
            "basis_a": cm.matrix_to_json(self.basis_a),
            "basis_b": cm.matrix_to_json(self.basis_b),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PccSample":
        return cls(
            eigenvalues=cm.matrix_from_json(obj["eigenvalues"]).real,
            basis_a=cm.matrix_from_json(obj["basis_a"]),
            basis_b=cm.matrix_from_json(obj["basis_b"]),
        )


@dataclass(frozen=True)
class TauParameters:
    theta: float
    a: float
    b: complex

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise StateError(f"a={self.a} outside [0, 1]")
        bound = np.sqrt(self.a * (1.0 - self.a))
        if abs(self.b) > bound + 1e-12:
            raise StateError(f"|b|={abs(self.b):.6g} exceeds sqrt(a(1-a))={bound:.6g}")


def assemble_pcc(eigenvalues, basis_a, basis_b) -> np.ndarray:
    w = cm.kron(basis_a, basis_b)
    e = np.asarray(eigenvalues, dtype=float).ravel()
    return (w * e) @ w.conj().T


# -- named states ---------------------------------------------------------

_KET_LABELS = {"0": cm.KET0, "1": cm.KET1, "+": cm.KET_PLUS,
               "-": np.array([1, -1], dtype=np.complex128) / np.sqrt(2.0)}


def product_ket(label: str) -> np.ndarray:
    """Qubit product ket from a label such as ``"1+"``."""
    try:
        kets = [_KET_LABELS[ch] for ch in label]
    except KeyError as exc:
        raise StateError(f"unknown single-qubit label {exc.args[0]!r} in {label!r}") from None
    out = kets[0]
    for k in kets[1:]:
        out = np.kron(out, k)
    return out


def qutrit_ket(label: str) -> np.ndarray:
    """Qutrit product ket; ``+`` is ``(|0> + |1>)/sqrt 2``."""
    basis = {"0": [1, 0, 0], "1": [0, 1, 0], "2": [0, 0, 1], "+": [1 / np.sqrt(2), 1 / np.sqrt(2), 0]}
    out = np.ones(1, dtype=np.complex128)
    for ch in label:
        out = np.kron(out, np.asarray(basis[ch], dtype=np.complex128))
    return out


def sigma() -> DensityMatrix:
    """Equal mixture of |00> and |1+>: separable with no product eigenbasis."""
    mat = 0.5 * (cm.projector(product_ket("00")) + cm.projector(product_ket("1+")))
    return DensityMatrix(2, 2, mat)


def bell_phi_plus() -> DensityMatrix:
    return DensityMatrix(2, 2, cm.projector(cm.ket(1, 0, 0, 1)))


def qutrit_02plus_factors() -> list[np.ndarray]:
    """Projectors onto |02>, |+0>, |2+> of two qutrits."""
    return [cm.projector(qutrit_ket(lbl)) for lbl in ("02", "+0", "2+")]


def rho_02plus() -> DensityMatrix:
    return DensityMatrix(3, 3, sum(qutrit_02plus_factors()) / 3.0)


def max_mixed(dim_a: int, dim_b: int) -> DensityMatrix:
    d = dim_a * dim_b
    return DensityMatrix(dim_a, dim_b, np.eye(d) / d)


def tau_state(params: TauParameters) -> DensityMatrix:
    s = np.array([1.0, np.exp(1j * params.theta)]) / np.sqrt(2.0)
    rho_b = np.array([[params.a, params.b], [np.conj(params.b), 1.0 - params.a]])
    return DensityMatrix(2, 2, cm.kron(cm.projector(s), rho_b))


def canonical_state(name: str) -> DensityMatrix:
    """Resolve a canonical state name.

    Accepted: ``sigma``, ``bell``/``bell_phi_plus``, ``rho_02plus``,
    ``max_mixed:AxB``, ``tau:theta,a,re_b,im_b`` and qubit product labels
    built from ``0 1 + -`` (e.g. ``00``, ``1+``).
    """
    key = name.strip()
    if key == "sigma":
        return sigma()
    if key in ("bell", "bell_phi_plus"):
        return bell_phi_plus()
    if key == "rho_02plus":
        return rho_02plus()
    if key.startswith("max_mixed"):
        _, _, dims = key.partition(":")
        try:
            da, db = (int(x) for x in (dims or "2x2").lower().split("x"))
        except ValueError:
            raise StateError(f"bad max_mixed dimensions in {name!r}") from None
        return max_mixed(da, db)
    if key.startswith("tau:"):
        try:
            theta, a, re_b, im_b = (float(x) for x in key[4:].split(","))
        except ValueError:
            raise StateError(f"tau expects theta,a,re_b,im_b; got {name!r}") from None
        return tau_state(TauParameters(theta, a, complex(re_b, im_b)))
    if len(key) == 2 and set(key) <= set(_KET_LABELS):
        return DensityMatrix(2, 2, cm.projector(product_ket(key)))
    raise StateError(f"unknown canonical state {name!r}")


# -- random generators ----------------------------------------------------

def _check_fixed(eig, size: int) -> np.ndarray:
    e = np.asarray(eig, dtype=float).ravel()
    if e.size != size:
        raise StateError(f"fixed eigenvalue vector has length {e.size}, expected {size}")
    if np.any(e < 0) or abs(e.sum() - 1.0) > 1e-10:
        raise StateError("fixed eigenvalues must be nonnegative and sum to 1")
    return e


def sample_eigenvalues(dim_a: int, dim_b: int, eig_mode, rng: np.random.Generator,
                       size: int | None = None) -> np.ndarray:
    d = dim_a * dim_b
    n = 1 if size is None else size
    if isinstance(eig_mode, str):
        if eig_mode != DIRICHLET:
            raise StateError(f"unknown eig_mode {eig_mode!r}")
        e = rng.dirichlet(np.ones(d), size=n)
    else:
        e = np.broadcast_to(_check_fixed(eig_mode, d), (n, d)).copy()
    e = e.reshape(n, dim_a, dim_b)
    return e[0] if size is None else e


def random_pcc(dim_a: int, dim_b: int, eig_mode=DIRICHLET,
               rng: np.random.Generator | None = None) -> tuple[DensityMatrix, PccSample]:
    rng = np.random.default_rng() if rng is None else rng
    e = sample_eigenvalues(dim_a, dim_b, eig_mode, rng)
    sample = PccSample(e, cm.haar_unitary(dim_a, rng), cm.haar_unitary(dim_b, rng))
    return sample.state(), sample


def random_product_ket(dim_a: int, dim_b: int, rng: np.random.Generator) -> np.ndarray:
    a = cm.haar_unitary(dim_a, rng)[:, 0]
    b = cm.haar_unitary(dim_b, rng)[:, 0]
    return np.kron(a, b)


def random_separable(dim_a: int, dim_b: int, k: int, rng: np.random.Generator) -> DensityMatrix:
    if k < 1:
        raise StateError("need at least one product term")
    weights = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
    mat = sum(w * cm.projector(random_product_ket(dim_a, dim_b, rng)) for w in weights)
    return DensityMatrix(dim_a, dim_b, mat)


def random_density(d: int, rank: int, rng: np.random.Generator,
                   dims: tuple[int, int] | None = None) -> DensityMatrix:
    """``G G^dagger / Tr`` with ``G`` a ``d x rank`` Ginibre matrix."""
    if not 1 <= rank <= d:
        raise StateError(f"rank {rank} outside [1, {d}]")
    dim_a, dim_b = dims if dims is not None else (d, 1)
    if dim_a * dim_b != d:
        raise StateError(f"dims {dims} do not multiply to {d}")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(dim_a, dim_b, m / np.trace(m).real)


# -- functionals ----------------------------------------------------------

def entropy_bits(eigenvalues) -> float:
    lam = np.asarray(eigenvalues, dtype=float)
    lam = lam[lam > EIG_ZERO]
    return float(-np.sum(lam * np.log2(lam))) if lam.size else 0.0


def entropy_purity(rho: DensityMatrix) -> tuple[float, float]:
    """Von Neumann entropy in bits and purity ``Tr rho^2``."""
    lam = cm.hermitian_eig(rho.mat).values
    purity = float(np.sum(np.abs(rho.mat) ** 2))
    return entropy_bits(lam), purity

