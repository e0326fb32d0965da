"""Optimal-constant determination for product-form witnesses.

Two routes: the closed-form maximization over the pure-A-side family for the
two-qubit |00>,|1+> witness, and a seeded Monte-Carlo search over random
product-eigenbasis states followed by hill-climb refinement.

Reproducibility: samples are generated in fixed-size blocks and block ``k``
draws from ``default_rng([seed, 0, k])``.  Sample ``n`` is therefore a pure
function of ``(seed, n)`` and the result does not depend on how blocks are
distributed over shards.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import cmatrix as cm
from .states import DIRICHLET, PccSample, sample_eigenvalues
from .witness import check_positive

BLOCK_SIZE = 4096
_REFINE_STREAM = 1
_SAMPLE_STREAM = 0
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    n_samples: int = 100_000
    seed: int = 0
    shards: int = 1
    eig_mode: object = DIRICHLET
    refine_steps: int = 2000
    refine_initial_step: float = 0.3
    refine_decay: float = 0.995

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.shards < 1:
            raise ValueError("shards must be >= 1")
        if not 0.0 < self.refine_decay < 1.0:
            raise ValueError("refine_decay must lie in (0, 1)")
        if not isinstance(self.eig_mode, str):
            object.__setattr__(self, "eig_mode", tuple(float(x) for x in np.ravel(self.eig_mode)))

    @property
    def fixed_eigenvalues(self) -> bool:
        return not isinstance(self.eig_mode, str)

    def to_json(self) -> dict:
        out = asdict(self)
        out["eig_mode"] = self.eig_mode if isinstance(self.eig_mode, str) else list(self.eig_mode)
        return out


@dataclass(frozen=True, eq=False)
class SearchReport:
    max_f: float
    best_sample: PccSample
    best_purity: float
    distinct_nonzero_eigenvalues: int
    samples_evaluated: int
    refine_improvement: float
    sampled_max_f: float
    best_index: int
    config: SearchConfig

    def to_json(self) -> dict:
        return {
            "max_f": self.max_f,
            "best_sample": self.best_sample.to_json(),
            "best_purity": self.best_purity,
            "distinct_nonzero_eigenvalues": self.distinct_nonzero_eigenvalues,
            "samples_evaluated": self.samples_evaluated,
            "refine_improvement": self.refine_improvement,
            "sampled_max_f": self.sampled_max_f,
            "best_index": self.best_index,
            "config": self.config.to_json(),
        }


# -- closed form ----------------------------------------------------------

def tau_f(a: float, b: complex) -> float:
    """Witness product on the pure-A-side family: ``a (1 + 2 Re b) / 8``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a={a} outside [0, 1]")
    if abs(b) > math.sqrt(a * (1.0 - a)) + 1e-12:
        raise ValueError(f"|b|={abs(b):.6g} violates positivity bound sqrt(a(1-a))")
    return a * (1.0 + 2.0 * complex(b).real) / 8.0


def g_boundary(a: float) -> float:
    """``tau_f`` with ``b`` at its positivity bound."""
    return a * (1.0 + 2.0 * math.sqrt(a * (1.0 - a))) / 8.0


def golden_section_max(fn, lo: float, hi: float, width: float = 1e-12) -> float:
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > width:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = fn(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = fn(x1)
    return 0.5 * (lo + hi)


def closed_form_c_opt() -> tuple[float, float]:
    """``(c_opt, a_hat)`` for the two-qubit |00>,|1+> witness."""
    a_hat = golden_section_max(g_boundary, 0.0, 1.0)
    return g_boundary(a_hat), a_hat


# -- batched evaluation ---------------------------------------------------

def pcc_factor_traces(factors, eig, ua, ub) -> np.ndarray:
    """``Tr(rho A_i)`` for a stack of product-eigenbasis states.

    ``eig`` is ``(n, da, db)``, ``ua``/``ub`` are stacks of local bases.
    Returns shape ``(n, m)``.
    """
    da, db = ua.shape[-1], ub.shape[-1]
    out = np.empty((eig.shape[0], len(factors)))
    for k, a in enumerate(factors):
        t = a.reshape(da, db, da, db)
        # <u_i v_j| A |u_i v_j> for every grid cell
        diag = np.einsum("nxi,nyj,xyzw,nzi,nwj->nij", ua.conj(), ub.conj(), t, ua, ub, optimize=True)
        out[:, k] = np.einsum("nij,nij->n", eig, diag.real)
    return out


def pcc_f_values(factors, eig, ua, ub) -> np.ndarray:
    return np.prod(np.clip(pcc_factor_traces(factors, eig, ua, ub), 0.0, None), axis=1)


def _block_samples(block: int, count: int, dim_a: int, dim_b: int, config: SearchConfig):
    rng = np.random.default_rng([config.seed, _SAMPLE_STREAM, block])
    eig = sample_eigenvalues(dim_a, dim_b, config.eig_mode, rng, size=count)
    ua = cm.haar_unitary(dim_a, rng, size=count)
    ub = cm.haar_unitary(dim_b, rng, size=count)
    return eig, ua, ub


def _block_count(block: int, n_samples: int) -> int:
    return min(BLOCK_SIZE, n_samples - block * BLOCK_SIZE)


def _scan_blocks(blocks, factors, dim_a, dim_b, config) -> tuple[float, int]:
    best_f, best_idx = -1.0, -1
    for block in blocks:
        eig, ua, ub = _block_samples(block, _block_count(block, config.n_samples), dim_a, dim_b, config)
        f = pcc_f_values(factors, eig, ua, ub)
        k = int(np.argmax(f))
        if f[k] > best_f:
            best_f, best_idx = float(f[k]), block * BLOCK_SIZE + k
    return best_f, best_idx


def sample_at(index: int, dim_a: int, dim_b: int, config: SearchConfig) -> PccSample:
    """Regenerate sample ``index`` of a search."""
    block, offset = divmod(index, BLOCK_SIZE)
    eig, ua, ub = _block_samples(block, _block_count(block, config.n_samples), dim_a, dim_b, config)
    return PccSample(eig[offset], ua[offset], ub[offset])


def _validated(factors) -> list[np.ndarray]:
    factors = [check_positive(a, f"factor {i}") for i, a in enumerate(factors)]
    if not factors:
        raise ValueError("need at least one factor")
    return factors


def monte_carlo_search(factors, dim_a: int, dim_b: int, config: SearchConfig | None = None) -> SearchReport:
    config = SearchConfig() if config is None else config
    factors = _validated(factors)
    for i, a in enumerate(factors):
        if a.shape != (dim_a * dim_b,) * 2:
            raise ValueError(f"factor {i} has shape {a.shape}, expected dimension {dim_a * dim_b}")

    n_blocks = -(-config.n_samples // BLOCK_SIZE)
    shard_blocks = [range(s, n_blocks, config.shards) for s in range(config.shards)]
    with ThreadPoolExecutor(max_workers=config.shards) as pool:
        partials = list(pool.map(lambda b: _scan_blocks(b, factors, dim_a, dim_b, config), shard_blocks))
    # max reduction; ties go to the lowest sample index
    sampled_f, best_idx = max((p for p in partials if p[1] >= 0), key=lambda p: (p[0], -p[1]))

    start = sample_at(best_idx, dim_a, dim_b, config)
    refined, max_f = refine(factors, start, config)
    e = refined.eigenvalues.ravel()
    nonzero = np.sort(e[e > 1e-12])
    distinct = int(np.sum(np.diff(nonzero) > 1e-9)) + 1 if nonzero.size else 0
    return SearchReport(
        max_f=max_f,
        best_sample=refined,
        best_purity=float(np.sum(e ** 2)),
        distinct_nonzero_eigenvalues=distinct,
        samples_evaluated=config.n_samples,
        refine_improvement=max_f - sampled_f,
        sampled_max_f=sampled_f,
        best_index=best_idx,
        config=config,
    )


def refine(factors, start: PccSample, config: SearchConfig | None = None,
           trace: list | None = None) -> tuple[PccSample, float]:
    """Hill-climb from ``start``; only improving moves are accepted.

    Local bases are rotated by Cayley unitaries of random Hermitian
    generators and, unless eigenvalues are fixed, the eigenvalue grid is
    jittered and projected back onto the simplex.  The step size decays
    geometrically.  If ``trace`` is given, the objective after every step is
    appended to it.
    """
    config = SearchConfig() if config is None else config
    factors = [cm.as_cmatrix(a) for a in factors]
    rng = np.random.default_rng([config.seed, _REFINE_STREAM])
    eig = np.asarray(start.eigenvalues, dtype=float)
    ua, ub = start.basis_a.copy(), start.basis_b.copy()
    da, db = ua.shape[0], ub.shape[0]

    def f_of(e, a, b):
        return float(pcc_f_values(factors, e[None], a[None], b[None])[0])

    best = f_of(eig, ua, ub)
    step = config.refine_initial_step
    for _ in range(config.refine_steps):
        ua_new = ua @ cm.cayley_unitary(cm.random_hermitian(da, rng), step)
        ub_new = ub @ cm.cayley_unitary(cm.random_hermitian(db, rng), step)
        eig_new = eig
        if not config.fixed_eigenvalues:
            eig_new = np.clip(eig + step * rng.standard_normal(eig.shape) / eig.size, 0.0, None)
            eig_new /= eig_new.sum()
        f = f_of(eig_new, ua_new, ub_new)
        if f > best:
            best, eig, ua, ub = f, eig_new, ua_new, ub_new
        if trace is not None:
            trace.append(best)
        step *= config.refine_decay
    return PccSample(eig, ua, ub), best
