"""Single-run ensemble measurement simulation.

Readouts are ensemble expectation values of single-qubit Z; reading a
polarization never changes the state.  Qubits are numbered from 1, with
qubit 1 the leftmost tensor factor (most significant index bit).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cmatrix as cm
from .states import DensityMatrix


class ProtocolError(ValueError):
    """Raised for states or observables the qubit protocol cannot handle."""


@dataclass(frozen=True, eq=False)
class Gate:
    label: str
    unitary: np.ndarray

    def __post_init__(self):
        if not cm.is_unitary(self.unitary, 1e-12):
            raise ProtocolError(f"gate {self.label} is not unitary")


@dataclass(frozen=True)
class ProtocolResult:
    z1_ii: float
    z2_ii: float
    z2_iv: float
    w_value: float
    c_used: float

    def to_json(self) -> dict:
        return {"z1_ii": self.z1_ii, "z2_ii": self.z2_ii, "z2_iv": self.z2_iv,
                "w_value": self.w_value, "c_used": self.c_used}


@dataclass(frozen=True)
class PlanTerm:
    coefficient: float
    z_mask: int
    network: tuple[tuple[int, int], ...]  # (control, target) CNOTs, applied in order
    readout_qubit: int | None


@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    n_qubits: int
    diagonalizer: np.ndarray
    terms: list[PlanTerm] = field(default_factory=list)

    def label(self, mask: int) -> str:
        return mask_label(mask, self.n_qubits)

    def coefficients(self) -> dict[str, float]:
        return {self.label(t.z_mask): t.coefficient for t in self.terms}

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "diagonalizer": cm.matrix_to_json(self.diagonalizer),
            "terms": [
                {"label": self.label(t.z_mask), "coefficient": t.coefficient,
                 "network": [list(g) for g in t.network], "readout_qubit": t.readout_qubit}
                for t in self.terms
            ],
        }


def mask_label(mask: int, n: int) -> str:
    return "".join("Z" if mask >> (n - q) & 1 else "I" for q in range(1, n + 1))


def n_qubits_of(d: int) -> int:
    n = d.bit_length() - 1
    if d < 1 or 1 << n != d:
        raise ProtocolError(f"dimension {d} is not a power of 2")
    return n


def _matrix_and_qubits(rho) -> tuple[np.ndarray, int]:
    if isinstance(rho, DensityMatrix):
        for d in (rho.dim_a, rho.dim_b):
            n_qubits_of(d)
        return rho.mat, n_qubits_of(rho.dim)
    mat = cm.as_cmatrix(rho)
    return mat, n_qubits_of(mat.shape[0])


def z_diagonal(mask: int, n: int) -> np.ndarray:
    """Diagonal of the Z-string selected by ``mask``."""
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=int)
    for bit in range(n):
        if mask >> bit & 1:
            parity ^= idx >> bit & 1
    return 1.0 - 2.0 * parity


def cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    """CNOT on ``n`` qubits as a permutation matrix."""
    if control == target or not (1 <= control <= n and 1 <= target <= n):
        raise ProtocolError(f"invalid CNOT({control}->{target}) on {n} qubits")
    idx = np.arange(1 << n)
    cbit, tbit = 1 << (n - control), 1 << (n - target)
    image = np.where(idx & cbit, idx ^ tbit, idx)
    p = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    p[image, idx] = 1.0
    return p


def standard_gates() -> tuple[Gate, Gate]:
    """Controlled-Hadamard and CNOT, both controlled by qubit 1."""
    ch = np.eye(4, dtype=np.complex128)
    ch[2:, 2:] = cm.H
    return Gate("controlled-H", ch), Gate("CNOT", cnot_matrix(1, 2, 2))


def _read_z(mat: np.ndarray, qubit: int, n: int) -> float:
    if not 1 <= qubit <= n:
        raise ProtocolError(f"qubit {qubit} out of range 1..{n}")
    z = z_diagonal(1 << (n - qubit), n)
    return float(np.dot(np.diagonal(mat).real, z))


def polarization(rho, qubit: int, noise_sigma: float = 0.0,
                 rng: np.random.Generator | None = None) -> float:
    """Nondestructive ``<Z_qubit>`` readout, optionally with Gaussian noise."""
    if noise_sigma < 0:
        raise ProtocolError("noise_sigma must be nonnegative")
    mat, n = _matrix_and_qubits(rho)
    value = _read_z(mat, qubit, n)
    if noise_sigma > 0:
        rng = np.random.default_rng() if rng is None else rng
        value += noise_sigma * rng.standard_normal()
    return value


def sigma_witness_value(c: float, z1_ii: float, z2_ii: float, z2_iv: float) -> float:
    return c - (1 + z1_ii + z2_ii + z2_iv) * (1 - z1_ii + z2_ii - z2_iv) / 16.0


def run_sigma_protocol(rho, c: float, noise_sigma: float = 0.0,
                       rng: np.random.Generator | None = None) -> ProtocolResult:
    """Controlled-H, read Z1 and Z2, CNOT, read Z2 again, combine."""
    if isinstance(rho, DensityMatrix) and (rho.dim_a, rho.dim_b) != (2, 2):
        raise ProtocolError(f"protocol needs a two-qubit state, got {rho.dim_a}x{rho.dim_b}")
    mat, n = _matrix_and_qubits(rho)
    if n != 2:
        raise ProtocolError("protocol needs a two-qubit state")
    ch, cnot = standard_gates()
    hat = cm.conjugate(mat, ch.unitary)
    z1_ii = polarization(hat, 1, noise_sigma, rng)
    z2_ii = polarization(hat, 2, noise_sigma, rng)
    hathat = cm.conjugate(hat, cnot.unitary)
    z2_iv = polarization(hathat, 2, noise_sigma, rng)
    return ProtocolResult(z1_ii, z2_ii, z2_iv, sigma_witness_value(c, z1_ii, z2_ii, z2_iv), c)


def z_string_coefficients(diag) -> np.ndarray:
    """Walsh-Hadamard transform: ``diag = sum_m coef[m] * z_diagonal(m)``."""
    coef = np.asarray(diag, dtype=float).copy()
    h = 1
    while h < coef.size:
        for i in range(0, coef.size, 2 * h):
            lo, hi = coef[i:i + h].copy(), coef[i + h:i + 2 * h].copy()
            coef[i:i + h], coef[i + h:i + 2 * h] = lo + hi, lo - hi
        h *= 2
    return coef / coef.size


def reduction_network(mask: int, n: int) -> tuple[tuple[int, int], ...]:
    """CNOT chain folding the parity of the active qubits onto the lowest one."""
    active = [q for q in range(1, n + 1) if mask >> (n - q) & 1]
    return tuple((active[k], active[k - 1]) for k in range(len(active) - 1, 0, -1))


def compile_measurement_plan(a, coef_tol: float = 1e-15) -> MeasurementPlan:
    a = cm.as_cmatrix(a)
    n = n_qubits_of(a.shape[0])
    off = a - np.diag(np.diagonal(a))
    if np.max(np.abs(off), initial=0.0) <= cm.HERMITIAN_TOL and cm.is_hermitian(a):
        diagonalizer = np.eye(a.shape[0], dtype=np.complex128)
        diag = np.diagonal(a).real
    else:
        eig = cm.hermitian_eig(a)
        diagonalizer = eig.vectors.conj().T
        diag = eig.values
    coef = z_string_coefficients(diag)
    terms = []
    for mask in range(coef.size):
        if mask and abs(coef[mask]) <= coef_tol:
            continue
        network = reduction_network(mask, n)
        readout = None if mask == 0 else min(q for q in range(1, n + 1) if mask >> (n - q) & 1)
        terms.append(PlanTerm(float(coef[mask]), mask, network, readout))
    return MeasurementPlan(n, diagonalizer, terms)


def execute_plan(plan: MeasurementPlan, rho, noise_sigma: float = 0.0,
                 rng: np.random.Generator | None = None) -> float:
    """Run a plan on one state, reading one polarization per Z-string term."""
    mat, n = _matrix_and_qubits(rho)
    if n != plan.n_qubits:
        raise ProtocolError(f"plan is for {plan.n_qubits} qubits, state has {n}")
    state = cm.conjugate(mat, plan.diagonalizer)
    total = 0.0
    for term in plan.terms:
        if term.z_mask == 0:
            total += term.coefficient * float(np.trace(state).real)
            continue
        gates = [cnot_matrix(c, t, n) for c, t in term.network]
        for g in gates:
            state = g @ state @ g.conj().T
        total += term.coefficient * polarization(state, term.readout_qubit, noise_sigma, rng)
        for g in reversed(gates):
            state = g.conj().T @ state @ g
    return total
