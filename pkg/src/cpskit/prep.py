"""Projected P-functions over discrete phase pairs.

A density matrix supported on the number range ``[n0, n_max]`` of each mode is
written as

    rho = sum_{q, q'} p[q, q'] |alpha_q><conj(beta_q')|

with unnormalized projected coherent states, ``alpha_q = alpha e^{i q phi}``
on the ket side and ``beta_q' = beta e^{-i q' phi}`` on the bra side. With the
default ``beta = conj(alpha)`` the two sides are complex conjugates of each
other and Hermitian ``rho`` gives Hermitian ``p``. The coefficients are unique
and follow from a discrete Fourier transform on each index.

Multimode arrays are products over modes, flattened row-major over the phase
indices ``(q_1, ..., q_M)`` and the number indices ``(n_1, ..., n_M)``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import unitary_group

from . import kernels
from .basis import CpsBasis, geometric_sum
from .fock_oracle import permanent
from .operators import analysis_matrix, op_from_fock_matrix, synthesis_matrix

UNNORMALIZED_P = "unnormalized"
NORMALIZED_P = "normalized"

MAX_DENSE_MODES = 3
MAX_EXACT_PHOTONS = 12
MAX_MC_PHOTONS = 30
UNITARY_TOL = 1e-10
MC_BLOCK = 8192


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def beta_amplitudes(basis: CpsBasis, beta: complex) -> np.ndarray:
    """Bra-side amplitudes ``beta e^{-i q' phi}``."""
    return complex(beta) * np.exp(-1j * basis.phi * np.arange(basis.d))


def _beta_log_scale(basis: CpsBasis, beta: complex) -> np.ndarray:
    beta = complex(beta)
    if beta == 0:
        raise ValueError("beta must be non-zero")
    n = basis.numbers
    return n * complex(math.log(abs(beta)), math.atan2(beta.imag, beta.real)) - 0.5 * gammaln(n + 1.0)


def beta_synthesis_matrix(basis: CpsBasis, beta: complex) -> np.ndarray:
    """``V_beta[n, q'] = (beta e^{-i q' phi})**n / sqrt(n!)``."""
    q = np.arange(basis.d)
    return np.exp(_beta_log_scale(basis, beta))[:, None] * np.exp(-1j * basis.phi * np.outer(basis.numbers, q))


def beta_analysis_matrix(basis: CpsBasis, beta: complex) -> np.ndarray:
    """Inverse of :func:`beta_synthesis_matrix`."""
    q = np.arange(basis.d)
    scale = np.exp(-_beta_log_scale(basis, beta))
    return np.exp(1j * basis.phi * np.outer(q, basis.numbers)) * scale[None, :] / basis.d


def left_action_matrix(basis: CpsBasis, O_fock) -> np.ndarray:
    """Matrix acting on the first P-function index for ``O rho``."""
    return op_from_fock_matrix(basis, O_fock).entries


def right_action_matrix(basis: CpsBasis, beta: complex, O_fock) -> np.ndarray:
    """Matrix ``R`` with ``rho O  <->  p R`` on the second P-function index."""
    O_fock = np.asarray(O_fock, dtype=complex)
    if O_fock.shape != (basis.d, basis.d):
        raise ValueError("number-basis block has the wrong size")
    ls = _beta_log_scale(basis, beta)
    scaled = O_fock * np.exp(ls[:, None] - ls[None, :])
    q = np.arange(basis.d)
    e_minus = np.exp(-1j * basis.phi * np.outer(basis.numbers, q))
    return e_minus.T @ scaled @ e_minus.conj() / basis.d


def pair_normalization(basis: CpsBasis, beta: complex | None = None) -> np.ndarray:
    """``G[q, q'] = sum_{n=n0}^{n_max} (alpha_q beta_q')**n / n!``."""
    beta = basis.alpha.conjugate() if beta is None else complex(beta)
    x = basis.amplitudes[:, None] * beta_amplitudes(basis, beta)[None, :]
    return truncated_exponential(x, basis.n0, basis.n_max)


def truncated_exponential(x, n_lo: int, n_hi: int) -> np.ndarray:
    """``sum_{n=n_lo}^{n_hi} x**n / n!`` evaluated with log-scaled terms; 0 for empty ranges."""
    x = np.asarray(x, dtype=complex)
    if n_hi < n_lo:
        return np.zeros_like(x)
    n = np.arange(n_lo, n_hi + 1)
    r = np.abs(x)
    out = np.zeros_like(x)
    nz = r > 0
    if n_lo == 0:
        out[~nz] = 1.0
    if nz.any():
        lr = np.log(r[nz])[..., None]
        logmag = n * lr - gammaln(n + 1.0)
        top = logmag.max(axis=-1, keepdims=True)
        phase = np.exp(1j * np.angle(x[nz])[..., None] * n)
        out[nz] = np.exp(top[..., 0]) * np.sum(np.exp(logmag - top) * phase, axis=-1)
    return out


def number_moment_weight(x, n0: int, n_max: int) -> np.ndarray:
    """``x d/dx ln G(x)`` for the truncated pair sum ``G``; tends to ``x`` at large cutoff."""
    x = np.asarray(x, dtype=complex)
    G = truncated_exponential(x, n0, n_max)
    # x G'(x) = sum n x**n / n! = x * sum_{m=n0-1}^{n_max-1} x**m / m!
    num = x * truncated_exponential(x, max(n0 - 1, 0), n_max - 1)
    return num / G


@dataclass(frozen=True, eq=False)
class CpsPFunction:
    """Coefficients over phase-index pairs for one or more modes.

    ``coeffs`` has shape ``(Q, Q)`` with ``Q = prod(d_j)``; rows index the
    ket-side phases, columns the bra-side phases.
    """

    bases: tuple
    betas: tuple
    coeffs: np.ndarray
    convention: str = UNNORMALIZED_P

    def __post_init__(self):
        bases = tuple(self.bases)
        betas = tuple(complex(b) for b in self.betas)
        if len(bases) != len(betas) or not bases:
            raise ValueError("need one beta per mode")
        Q = int(np.prod([b.d for b in bases]))
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (Q, Q):
            c = c.reshape(Q, Q)
        if self.convention not in (UNNORMALIZED_P, NORMALIZED_P):
            raise ValueError(f"unknown convention {self.convention!r}")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self) -> int:
        return len(self.bases)

    def pair_norm(self) -> np.ndarray:
        return _kron_all([pair_normalization(b, be) for b, be in zip(self.bases, self.betas)])

    def as_unnormalized(self) -> "CpsPFunction":
        if self.convention == UNNORMALIZED_P:
            return self
        return CpsPFunction(self.bases, self.betas, self.coeffs / self.pair_norm(), UNNORMALIZED_P)

    def as_normalized(self) -> "CpsPFunction":
        if self.convention == NORMALIZED_P:
            return self
        return CpsPFunction(self.bases, self.betas, self.coeffs * self.pair_norm(), NORMALIZED_P)

    def tensor(self) -> np.ndarray:
        """Coefficients reshaped to ``(d_1, ..., d_M, d_1, ..., d_M)``."""
        dims = tuple(b.d for b in self.bases)
        return self.coeffs.reshape(dims + dims)


def _resolve(bases, betas) -> tuple[tuple, tuple]:
    if isinstance(bases, CpsBasis):
        bases = (bases,)
    bases = tuple(bases)
    if betas is None:
        betas = tuple(b.alpha.conjugate() for b in bases)
    elif np.isscalar(betas):
        betas = (complex(betas),)
    betas = tuple(complex(b) for b in betas)
    if len(betas) != len(bases):
        raise ValueError("need one beta per mode")
    if len(bases) > MAX_DENSE_MODES:
        raise ValueError(f"dense P-functions are limited to {MAX_DENSE_MODES} modes")
    return bases, betas


def _restrict(rho: np.ndarray, bases: tuple, fock_dims, tol: float) -> np.ndarray:
    """Cut the projected block out of a density matrix over ``0..D_j-1`` per mode."""
    fock_dims = tuple(int(D) for D in fock_dims)
    if len(fock_dims) != len(bases):
        raise ValueError("need one Fock dimension per mode")
    mask = np.zeros(fock_dims, dtype=bool)
    sel = []
    for b, D in zip(bases, fock_dims):
        idx = np.arange(b.n0, b.n0 + b.d)
        if idx[-1] >= D:
            raise ValueError("Fock dimension does not cover the projected range")
        sel.append(idx)
    mask[np.ix_(*sel)] = True
    flat = mask.reshape(-1)
    outside = np.abs(rho[~flat][:, :]).max(initial=0.0)
    outside = max(outside, np.abs(rho[:, ~flat]).max(initial=0.0))
    if outside > tol:
        raise ValueError(f"density matrix has weight {outside:.3g} outside the projected number range")
    return rho[np.ix_(flat, flat)]


def pfunc_from_rho(
    rho,
    bases,
    betas=None,
    convention: str = UNNORMALIZED_P,
    fock_dims: Sequence[int] | None = None,
    tol: float = 1e-12,
) -> CpsPFunction:
    """Unique P-function of a density matrix on the projected number range.

    ``rho`` is indexed by ``[n0, n_max]`` per mode, or by ``0..D_j-1`` when
    ``fock_dims`` is given, in which case any support outside the projected
    range is an error.
    """
    bases, betas = _resolve(bases, betas)
    rho = np.asarray(rho, dtype=complex)
    if fock_dims is not None:
        rho = _restrict(rho, bases, fock_dims, tol)
    Q = int(np.prod([b.d for b in bases]))
    if rho.shape != (Q, Q):
        raise ValueError(f"expected a {Q}x{Q} density matrix over the projected range")
    W = _kron_all([analysis_matrix(b) for b in bases])
    Wb = _kron_all([beta_analysis_matrix(b, be) for b, be in zip(bases, betas)])
    pf = CpsPFunction(bases, betas, W @ rho @ Wb.T, UNNORMALIZED_P)
    return pf.as_normalized() if convention == NORMALIZED_P else pf


def rho_from_pfunc(pfunc: CpsPFunction) -> np.ndarray:
    """Density matrix over the projected number range (row-major across modes)."""
    p = pfunc.as_unnormalized().coeffs
    V = _kron_all([synthesis_matrix(b) for b in pfunc.bases])
    Vb = _kron_all([beta_synthesis_matrix(b, be) for b, be in zip(pfunc.bases, pfunc.betas)])
    return V @ p @ Vb.T


def pfunc_reexpand(alpha_tilde, beta_tilde, bases, betas=None) -> CpsPFunction:
    """Expansion of ``|alpha~><conj(beta~)|`` (unnormalized, projected) in the target bases."""
    bases, betas = _resolve(bases, betas)
    alpha_tilde = np.atleast_1d(np.asarray(alpha_tilde, dtype=complex))
    beta_tilde = np.atleast_1d(np.asarray(beta_tilde, dtype=complex))
    if len(alpha_tilde) != len(bases) or len(beta_tilde) != len(bases):
        raise ValueError("need one source amplitude pair per mode")
    factors = []
    for b, be, at, bt in zip(bases, betas, alpha_tilde, beta_tilde):
        if b.n0 != 0:
            raise ValueError("re-expansion is defined for n0 = 0 targets only")
        left = geometric_sum(at / b.amplitudes, b.d) / b.d
        right = geometric_sum(bt / beta_amplitudes(b, be), b.d) / b.d
        factors.append(np.outer(left, right))
    return CpsPFunction(bases, betas, _kron_all(factors), UNNORMALIZED_P)


def _moment_factor(basis: CpsBasis, beta: complex, k: int, l: int) -> np.ndarray:
    # Tr(|a><conj b| a^dag^k a^l) over the projected range:
    # a**l b**k sum_{m} (a b)**m / m!, m in [max(0, n0-k, n0-l), n_max - max(k, l)]
    a = basis.amplitudes[:, None]
    b = beta_amplitudes(basis, beta)[None, :]
    lo = max(0, basis.n0 - k, basis.n0 - l)
    hi = basis.n_max - max(k, l)
    return a**l * b**k * truncated_exponential(a * b, lo, hi)


def pfunc_moment(pfunc: CpsPFunction, creators: Sequence[int], annihilators: Sequence[int]) -> complex:
    """``Tr(rho prod_j a_j^dag**k_j a_j**l_j)`` from the P-function.

    ``creators[j]`` and ``annihilators[j]`` are the powers on mode ``j``.
    Unnormalized coefficients are weighted by the exact truncated pair sums;
    normalized ones use the same weights divided by ``G``, which for the
    number operator is the logarithmic-derivative weight
    :func:`number_moment_weight`.
    """
    creators = [int(k) for k in creators]
    annihilators = [int(l) for l in annihilators]
    if len(creators) != pfunc.modes or len(annihilators) != pfunc.modes:
        raise ValueError("observable mode count does not match the P-function")
    if min(creators + annihilators) < 0:
        raise ValueError("operator powers must be non-negative")
    factors = []
    for b, be, k, l in zip(pfunc.bases, pfunc.betas, creators, annihilators):
        if pfunc.convention == NORMALIZED_P:
            if k == l == 1:
                x = b.amplitudes[:, None] * beta_amplitudes(b, be)[None, :]
                factors.append(number_moment_weight(x, b.n0, b.n_max))
            else:
                factors.append(_moment_factor(b, be, k, l) / pair_normalization(b, be))
        else:
            factors.append(_moment_factor(b, be, k, l))
    F = _kron_all(factors)
    return complex(np.sum(pfunc.coeffs * F))


# -- boson sampling ------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationResult:
    value: float
    stderr: float | None
    method: str
    samples: int
    seed: int | None
    oracle: float | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "stderr": self.stderr,
            "method": self.method,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.oracle is not None:
            out["oracle_perm_sq"] = self.oracle
        out.update(self.meta)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def unitarity_residual(U) -> float:
    U = np.asarray(U, dtype=complex)
    return float(np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])), initial=0.0))


def _check_modes(modes, m: int, what: str) -> list[int]:
    modes = [int(k) for k in modes]
    if len(set(modes)) != len(modes):
        raise ValueError(f"duplicate {what} modes")
    if any(k < 0 or k >= m for k in modes):
        raise ValueError(f"{what} mode index out of range 0..{m - 1}")
    return modes


def _qubit_mc_block(A: np.ndarray, seed: int, block: int, size: int):
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))
    N = A.shape[0]
    s = 1.0 - 2.0 * gen.integers(0, 2, size=(size, N))
    sp = 1.0 - 2.0 * gen.integers(0, 2, size=(size, N))
    f = np.prod(s, axis=1) * np.prod(sp, axis=1) * np.prod(s @ A.T, axis=1) * np.prod(sp @ A.T, axis=1).conj()
    v = f.real
    return v.sum(), (v**2).sum()


def boson_sampling_correlation(
    U,
    inputs: Sequence[int],
    outputs: Sequence[int],
    method: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    radius: float = 1.0,
    workers: int | None = None,
) -> CorrelationResult:
    """Output coincidence ``<prod_k n_k>`` for single photons entering ``inputs``.

    Each occupied input is a two-phase basis at radius ``r`` holding ``|1><1|``,
    whose P-function is ``s s' / (4 r**2)`` over signs ``s, s' = +-1``. Output
    amplitudes are ``U (r s)`` on the ket side and ``conj(U) (r s')`` on the bra
    side. The moment picks up ``r**(2N)`` from the amplitudes and ``r**(-2N)``
    from the coefficients; the exponents are added before anything is
    evaluated, so the result carries no dependence on ``radius``.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("network matrix must be square")
    m = U.shape[0]
    res = unitarity_residual(U)
    if res > UNITARY_TOL:
        raise ValueError(f"network matrix is not unitary (residual {res:.3e})")
    inputs = _check_modes(inputs, m, "input")
    outputs = _check_modes(outputs, m, "output")
    if len(inputs) != len(outputs):
        raise ValueError("need as many output modes as input photons")
    if not radius > 0:
        raise ValueError("radius must be positive")
    N = len(inputs)
    A = np.ascontiguousarray(U[np.ix_(outputs, inputs)])
    r_power = -2 * N + 2 * N
    scale = float(radius) ** r_power

    if method == "exact":
        if N > MAX_EXACT_PHOTONS:
            raise ValueError(f"exact enumeration is limited to N <= {MAX_EXACT_PHOTONS}")
        value = scale * complex(kernels.qubit_config_sum(A)).real
        oracle = abs(permanent(A)) ** 2
        return CorrelationResult(float(value), None, "exact", 4**N, None, float(oracle))
    if method in ("mc", "monte-carlo"):
        if N > MAX_MC_PHOTONS:
            raise ValueError(f"sampling is limited to N <= {MAX_MC_PHOTONS}")
        if samples < 2:
            raise ValueError("need at least two samples for a standard error")
        from .evolution import worker_count

        sizes = [min(MC_BLOCK, samples - s) for s in range(0, samples, MC_BLOCK)]
        nw = workers if workers is not None else worker_count(len(sizes))
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(lambda k: _qubit_mc_block(A, seed, k, sizes[k]), range(len(sizes))))
        s1 = float(np.sum([a for a, _ in parts]))
        s2 = float(np.sum([b for _, b in parts]))
        mean = s1 / samples
        var = max(s2 / samples - mean**2, 0.0) * samples / (samples - 1)
        oracle = abs(permanent(A)) ** 2 if N <= MAX_EXACT_PHOTONS else None
        return CorrelationResult(
            scale * mean, scale * math.sqrt(var / samples), "mc", samples, seed, oracle
        )
    raise ValueError(f"unknown method {method!r}")


def random_unitary(m: int, seed: int | None = None) -> np.ndarray:
    """Haar-random ``m x m`` unitary."""
    if m == 1:
        rng = np.random.default_rng(seed)
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(m, random_state=seed)


def unitary_to_json(U) -> str:
    U = np.asarray(U, dtype=complex)
    return json.dumps({"m": U.shape[0], "re": U.real.tolist(), "im": U.imag.tolist()})


def unitary_from_json(text: str) -> np.ndarray:
    try:
        doc = json.loads(text)
        m = int(doc["m"])
        U = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed unitary document: {exc}") from None
    if U.shape != (m, m):
        raise ValueError(f"unitary document declares m={m} but holds shape {U.shape}")
    return U
