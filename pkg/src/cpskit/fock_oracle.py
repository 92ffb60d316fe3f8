"""Brute-force truncated number-basis reference implementation.

Everything here is dense and deliberately naive. It exists to check the
coherent-phase-state machinery against an independent route, so nothing in
this module imports from the CPS modules.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

MAX_DIM = 256


class EmptyProjectionWarning(UserWarning):
    """Raised (as a warning) when a number projector selects no states."""


@dataclass(frozen=True, eq=False)
class FockVector:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("FockVector needs a non-empty 1-d coefficient array")
        if not np.all(np.isfinite(c)):
            raise ValueError("FockVector coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def cutoff_dim(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True, eq=False)
class FockOperator:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("FockOperator must be square")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.entries @ other.entries)
        if isinstance(other, FockVector):
            return FockVector(self.entries @ other.coeffs)
        return NotImplemented


@dataclass(frozen=True, eq=False)
class FockDensity:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("FockDensity must be square")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def pure(cls, psi: FockVector, normalize: bool = True) -> "FockDensity":
        c = psi.coeffs
        if normalize:
            c = c / np.linalg.norm(c)
        return cls(np.outer(c, c.conj()))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def is_valid(self, tol: float = 1e-12, eig_tol: float = -1e-10) -> bool:
        herm = np.max(np.abs(self.entries - self.entries.conj().T)) <= tol
        if not herm:
            return False
        return float(np.linalg.eigvalsh(self.entries).min()) >= eig_tol


def _check_dim(D: int) -> int:
    D = int(D)
    if D < 1:
        raise ValueError(f"dimension must be >= 1, got {D}")
    if D > MAX_DIM:
        raise ValueError(f"oracle dimension capped at {MAX_DIM}, got {D}")
    return D


def ladder_ops(D: int) -> tuple[FockOperator, FockOperator, FockOperator]:
    """Truncated annihilation, creation and number operators on ``D`` levels."""
    D = _check_dim(D)
    a = np.diag(np.sqrt(np.arange(1, D, dtype=float)), k=1).astype(complex)
    a_dag = a.conj().T.copy()
    n = np.diag(np.arange(D, dtype=float)).astype(complex)
    return FockOperator(a), FockOperator(a_dag), FockOperator(n)


def coherent_vector(alpha: complex, D: int, normalized: bool = False) -> FockVector:
    """Number-basis coefficients ``alpha**n / sqrt(n!)`` for ``n < D``.

    With ``normalized=True`` the result is divided by the full-space norm
    ``exp(|alpha|**2 / 2)``, not by the truncated norm.
    """
    D = _check_dim(D)
    alpha = complex(alpha)
    c = np.empty(D, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2) if normalized else 1.0
    for n in range(1, D):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return FockVector(c)


def number_projector(
    D: int, selector: Callable, modes: int = 1
) -> FockOperator:
    """Diagonal 0/1 projector selecting number states.

    For ``modes == 1`` the selector receives the integer ``n``; otherwise it
    receives the occupation tuple, and states are ordered row-major over
    ``(D,) * modes``.
    """
    D = _check_dim(D)
    if modes < 1:
        raise ValueError("modes must be >= 1")
    if D**modes > MAX_DIM**2:
        raise ValueError("multimode oracle space too large")
    if modes == 1:
        keep = [bool(selector(n)) for n in range(D)]
    else:
        keep = [bool(selector(ns)) for ns in np.ndindex(*(D,) * modes)]
    diag = np.array(keep, dtype=float)
    if not diag.any():
        warnings.warn("number projector selects no states", EmptyProjectionWarning)
    return FockOperator(np.diag(diag).astype(complex))


def _hermitian_or_raise(H: np.ndarray, tol: float = 1e-12) -> None:
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > tol * scale:
        raise ValueError("Hamiltonian is not Hermitian")


def evolve_exact(psi: FockVector, H: FockOperator, t: float) -> FockVector:
    """``exp(-i H t) psi`` through the eigendecomposition of ``H``."""
    h = H.entries
    if h.shape[0] != psi.cutoff_dim:
        raise ValueError("dimension mismatch between state and Hamiltonian")
    _hermitian_or_raise(h)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return FockVector(v @ (np.exp(-1j * w * t) * (v.conj().T @ psi.coeffs)))


def evolve_time_ordered(
    psi: FockVector, H_of_t: Callable[[float], FockOperator], t: float, steps: int
) -> FockVector:
    """Piecewise-constant (midpoint) stepping for a time-dependent Hamiltonian."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = t / steps
    out = psi
    for k in range(steps):
        out = evolve_exact(out, H_of_t((k + 0.5) * dt), dt)
    return out


def _lindblad_superop(
    D: int, omega: float, kappa: float, gamma_p: float, gamma_a: float
) -> np.ndarray:
    # row-major vec: vec(A rho B) = kron(A, B.T) vec(rho)
    a, ad, n = (op.entries for op in ladder_ops(D))
    eye = np.eye(D)
    H = omega * n + 0.5 * kappa * (n @ n)
    n2 = n @ n
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    L += gamma_p * (2 * np.kron(n, n.T) - np.kron(n2, eye) - np.kron(eye, n2.T))
    L += gamma_a * (2 * np.kron(a, ad.T) - np.kron(n, eye) - np.kron(eye, n.T))
    return L


def lindblad_evolve_exact(
    rho: FockDensity,
    omega: float,
    kappa: float,
    gamma_p: float,
    gamma_a: float,
    t: float,
    steps: int = 1,
) -> FockDensity:
    """Integrate the anharmonic master equation with dephasing and loss.

    Uses the dense ``D**2 x D**2`` superoperator and its matrix exponential,
    applied ``steps`` times.
    """
    for name, rate in (("gamma_p", gamma_p), ("gamma_a", gamma_a)):
        if rate < 0:
            raise ValueError(f"{name} must be non-negative")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    D = rho.dim
    if D > 64:
        raise ValueError("superoperator oracle limited to D <= 64")
    L = _lindblad_superop(D, omega, kappa, gamma_p, gamma_a)
    prop = expm(L * (t / steps))
    v = rho.entries.reshape(-1)
    for _ in range(steps):
        v = prop @ v
    return FockDensity(v.reshape(D, D))


def hermite_functions(nmax: int, x: np.ndarray) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``h_n(x)`` for ``n < nmax``.

    Three-term recursion; rows are ``n``, columns are grid points.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((nmax, x.size))
    if nmax == 0:
        return out
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(2, nmax):
        out[n] = math.sqrt(2.0 / n) * x * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def momentum_overlaps(nmax: int, p_grid: np.ndarray) -> np.ndarray:
    """``<p|n>`` for the quadrature ``p = (a - a^dag) / (i sqrt 2)``."""
    phase = (-1j) ** np.arange(nmax)
    return phase[:, None] * hermite_functions(nmax, p_grid)


def quadrature_density(psi: FockVector, p_grid) -> np.ndarray:
    """Probability density of the ``p`` quadrature on ``p_grid``."""
    p_grid = np.asarray(p_grid, dtype=float)
    if not np.all(np.isfinite(p_grid)):
        raise ValueError("grid must be finite")
    amp = psi.coeffs @ momentum_overlaps(psi.cutoff_dim, p_grid)
    return np.abs(amp) ** 2


def permanent_naive(matrix) -> complex:
    """Sum over all ``N!`` permutations. Test oracle only."""
    A = np.asarray(matrix, dtype=complex)
    N = A.shape[0]
    total = 0j
    for perm in itertools.permutations(range(N)):
        term = 1 + 0j
        for i, j in enumerate(perm):
            term *= A[i, j]
        total += term
    return total


def permanent(matrix) -> complex:
    """Permanent by Ryser's inclusion-exclusion formula, ``O(2**N N)``."""
    from .kernels import ryser_permanent

    A = np.ascontiguousarray(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("permanent needs a square matrix")
    if A.shape[0] > 30:
        raise ValueError("permanent limited to N <= 30")
    if A.shape[0] == 0:
        return 1 + 0j
    return complex(ryser_permanent(A))


def phase_conjugation(d: int, n0: int, alpha: complex, O_fock, digits: int = 40) -> np.ndarray:
    """Matrix of ``O_fock`` in the discrete-phase coherent basis, in extended precision.

    Builds the change of basis ``V[n, q] = (alpha e^{2 pi i q/d})**n / sqrt(n!)``
    over ``n0 .. n0+d-1`` and its explicit inverse with ``mpmath`` and returns
    ``V^{-1} O V`` rounded to double. The scalings span many decades for
    small ``|alpha|`` or large ``d``, which is why this does not run in float64.
    """
    import mpmath

    O_fock = np.asarray(O_fock, dtype=complex)
    if O_fock.shape != (d, d):
        raise ValueError("O_fock must be d x d")
    with mpmath.workdps(digits):
        a = mpmath.mpc(complex(alpha).real, complex(alpha).imag)
        V = mpmath.matrix(d, d)
        W = mpmath.matrix(d, d)
        for i in range(d):
            n = n0 + i
            root = mpmath.sqrt(mpmath.factorial(n))
            for q in range(d):
                aq_n = (a * mpmath.expjpi(mpmath.mpf(2 * q) / d)) ** n
                V[i, q] = aq_n / root
                W[q, i] = root / (aq_n * d)
        O = mpmath.matrix([[mpmath.mpc(z.real, z.imag) for z in row] for row in O_fock.tolist()])
        R = W * O * V
        return np.array([[complex(R[i, j]) for j in range(d)] for i in range(d)])
