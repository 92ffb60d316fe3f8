"""Coherent-phase-state bases: norms, Gram matrix and the number <-> phase maps.

A basis with ``d`` phases, lowest occupation ``n0`` and reference amplitude
``alpha`` spans the number states ``n0 .. n0 + d - 1`` with the projected
coherent states at amplitudes ``alpha * exp(2j*pi*q/d)``. All normalization
arithmetic runs on log-factorials so that ``|alpha|**2`` in the hundreds does
not overflow.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import gammaincc, gammaln, logsumexp

NORMALIZED = "normalized"
UNNORMALIZED = "unnormalized"
_CONVENTIONS = (NORMALIZED, UNNORMALIZED)

# below this distance from the pole the geometric sum is evaluated term by term
POLE_TOL = 1e-8


def _log_complex(alpha: complex) -> complex:
    return complex(math.log(abs(alpha)), math.atan2(alpha.imag, alpha.real))


@dataclass(frozen=True, eq=False)
class CpsBasis:
    """Single-mode coherent-phase-state basis.

    Use :func:`make_basis` rather than constructing this directly.
    """

    d: int
    n0: int
    alpha: complex
    log_gn: np.ndarray
    log_gq: float
    gram: np.ndarray

    @property
    def phi(self) -> float:
        return 2 * math.pi / self.d

    @property
    def n_max(self) -> int:
        return self.n0 + self.d - 1

    @property
    def numbers(self) -> np.ndarray:
        return np.arange(self.n0, self.n0 + self.d)

    @property
    def amplitudes(self) -> np.ndarray:
        """The ``d`` basis amplitudes ``alpha * exp(i q phi)``."""
        return self.alpha * np.exp(1j * self.phi * np.arange(self.d))

    @property
    def gn(self) -> np.ndarray:
        return np.exp(self.log_gn)

    @property
    def gq(self) -> float:
        return math.exp(self.log_gq)

    def log_scale(self, normalized: bool = False) -> np.ndarray:
        """Complex log of ``alpha**n / sqrt(n!)`` (divided by ``gQ`` if normalized)."""
        n = self.numbers
        out = n * _log_complex(self.alpha) - 0.5 * gammaln(n + 1.0)
        if normalized:
            out = out - self.log_gq
        return out

    def same_as(self, other: "CpsBasis") -> bool:
        return self is other or (
            self.d == other.d and self.n0 == other.n0 and self.alpha == other.alpha
        )

    def with_alpha(self, alpha: complex) -> "CpsBasis":
        """Same basis with a rotated reference amplitude.

        Norms and the Gram matrix depend only on ``|alpha|``, so they are
        shared when the modulus is unchanged.
        """
        alpha = complex(alpha)
        if math.isclose(abs(alpha), abs(self.alpha), rel_tol=1e-14):
            return CpsBasis(self.d, self.n0, alpha, self.log_gn, self.log_gq, self.gram)
        return make_basis(self.d, self.n0, alpha)

    def to_dict(self) -> dict:
        return {"d": self.d, "n0": self.n0, "alpha": [self.alpha.real, self.alpha.imag]}


def log_gn2(alpha_abs2: float, n) -> np.ndarray:
    """``log(|alpha|**(2n) / n!)``; ``-inf`` for negative ``n``."""
    n = np.asarray(n, dtype=float)
    if alpha_abs2 > 0:
        out = n * math.log(alpha_abs2) - gammaln(np.maximum(n, 0.0) + 1.0)
    else:
        out = np.where(n == 0, 0.0, -np.inf)
    return np.where(n < 0, -np.inf, out)


def gaussian_gn2(alpha_abs2: float, n) -> np.ndarray:
    """Large-amplitude normal approximation to ``|alpha|**(2n) / n!``."""
    r = math.sqrt(alpha_abs2)
    n = np.asarray(n, dtype=float)
    return np.exp(alpha_abs2 - (n / r - r) ** 2 / 2) / math.sqrt(2 * math.pi * alpha_abs2)


def _circulant_sum(weights: np.ndarray, n0: int, d: int) -> np.ndarray:
    # c[k] = sum_j weights[j] * exp(2i pi k (n0 + j) / d)
    k = np.arange(d)
    return np.exp(2j * np.pi * k * n0 / d) * d * np.fft.ifft(weights)


def make_basis(d: int, n0: int = 0, alpha: complex = 1.0) -> CpsBasis:
    d, n0, alpha = int(d), int(n0), complex(alpha)
    if d < 1:
        raise ValueError("d must be >= 1")
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if alpha == 0:
        raise ValueError("alpha must be non-zero; the phase map is undefined at 0")
    n = np.arange(n0, n0 + d)
    lg2 = log_gn2(abs(alpha) ** 2, n)
    log_gq2 = float(logsumexp(lg2))
    w = np.exp(lg2 - log_gq2)
    c = _circulant_sum(w, n0, d)
    q = np.arange(d)
    gram = c[(q[None, :] - q[:, None]) % d]  # M[q1, q2] depends on q2 - q1
    gram[np.diag_indices(d)] = 1.0
    return CpsBasis(d, n0, alpha, 0.5 * lg2, 0.5 * log_gq2, gram)


def norm_gq_gamma(alpha: complex, n_max: int) -> float:
    """Projected coherent norm for the cutoff ``n <= n_max`` via the incomplete gamma function."""
    x = abs(complex(alpha)) ** 2
    return math.sqrt(math.exp(x) * gammaincc(n_max + 1, x))


def norm_gq_direct(alpha: complex, n0: int, n_max: int) -> float:
    n = np.arange(n0, n_max + 1)
    return math.exp(0.5 * float(logsumexp(log_gn2(abs(complex(alpha)) ** 2, n))))


@dataclass(frozen=True, eq=False)
class CpsState:
    """Expansion coefficients over the basis phases.

    ``convention`` says whether ``coeffs`` multiply normalized basis states
    (``Psi_q``) or unnormalized ones (``psi_q``); ``Psi_q = gQ psi_q``.
    """

    basis: CpsBasis
    coeffs: np.ndarray
    convention: str = NORMALIZED

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.d,):
            raise ValueError(f"expected {self.basis.d} coefficients, got shape {c.shape}")
        if self.convention not in _CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")
        object.__setattr__(self, "coeffs", c)

    def as_normalized(self) -> "CpsState":
        if self.convention == NORMALIZED:
            return self
        return CpsState(self.basis, self.coeffs * self.basis.gq, NORMALIZED)

    def as_unnormalized(self) -> "CpsState":
        if self.convention == UNNORMALIZED:
            return self
        return CpsState(self.basis, self.coeffs / self.basis.gq, UNNORMALIZED)

    def physical_norm(self) -> float:
        """``Psi^dagger M Psi``, the squared Hilbert-space norm."""
        c = self.as_normalized().coeffs
        val = np.vdot(c, self.basis.gram @ c)
        return float(val.real)

    def to_json(self) -> str:
        doc = self.basis.to_dict()
        doc["coeffs"] = [[z.real, z.imag] for z in self.coeffs.tolist()]
        doc["convention"] = self.convention
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "CpsState":
        doc = json.loads(text)
        basis = make_basis(doc["d"], doc["n0"], complex(*doc["alpha"]))
        coeffs = np.array([complex(re, im) for re, im in doc["coeffs"]])
        return cls(basis, coeffs, doc.get("convention", NORMALIZED))


def basis_member(basis: CpsBasis, q: int, convention: str = NORMALIZED) -> CpsState:
    c = np.zeros(basis.d, dtype=complex)
    c[q % basis.d] = 1.0
    return CpsState(basis, c, convention)


def fock_to_cps(basis: CpsBasis, psi_n, convention: str = NORMALIZED) -> CpsState:
    """Expand number-basis amplitudes over ``n0 .. n_max`` in the CPS basis."""
    psi_n = np.asarray(psi_n, dtype=complex)
    if psi_n.shape != (basis.d,):
        raise ValueError(f"expected {basis.d} amplitudes over n0..n_max")
    u = psi_n * np.exp(-basis.log_scale(convention == NORMALIZED))
    q = np.arange(basis.d)
    coeffs = np.exp(-2j * np.pi * q * basis.n0 / basis.d) * np.fft.fft(u) / basis.d
    return CpsState(basis, coeffs, convention)


def cps_to_fock(state: CpsState) -> np.ndarray:
    """Number-basis amplitudes over ``n0 .. n_max`` of a CPS expansion."""
    b = state.basis
    q = np.arange(b.d)
    v = np.fft.ifft(state.coeffs * np.exp(2j * np.pi * q * b.n0 / b.d)) * b.d
    return v * np.exp(b.log_scale(state.convention == NORMALIZED))


def dft_condition(basis: CpsBasis) -> float:
    """Spread of the number <-> phase scaling, ``max|s_n| / min|s_n|``.

    Round trips lose roughly ``eps * dft_condition`` in accuracy.
    """
    ls = basis.log_scale().real
    return math.exp(float(ls.max() - ls.min()))


def gram_inner(state1: CpsState, state2: CpsState) -> complex:
    """``Psi1^dagger M Psi2`` in the normalized convention."""
    if not state1.basis.same_as(state2.basis):
        raise ValueError("states live in different bases")
    a = state1.as_normalized().coeffs
    b = state2.as_normalized().coeffs
    return complex(np.vdot(a, state1.basis.gram @ b))


def geometric_sum(z, d: int) -> np.ndarray:
    """``sum_{n<d} z**n`` with term-by-term evaluation near ``z = 1``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty_like(z)
    near = np.abs(1 - z) < POLE_TOL
    far = ~near
    with np.errstate(over="ignore", invalid="ignore"):
        out[far] = (1 - z[far] ** d) / (1 - z[far])
    if near.any():
        powers = z[near][:, None] ** np.arange(d)
        out[near] = powers.sum(axis=1)
    return out


def reexpand_coherent(
    basis: CpsBasis, alpha_tilde: complex, convention: str = UNNORMALIZED
) -> CpsState:
    """Expansion of the projected coherent state at ``alpha_tilde`` in ``basis``."""
    if basis.n0 != 0:
        raise ValueError("coherent re-expansion is defined for n0 = 0 only")
    alpha_tilde = complex(alpha_tilde)
    z = alpha_tilde / basis.amplitudes
    coeffs = geometric_sum(z, basis.d) / basis.d
    if convention == NORMALIZED:
        g_tilde = norm_gq_direct(alpha_tilde, 0, basis.n_max) if alpha_tilde != 0 else 1.0
        coeffs = coeffs * (basis.gq / g_tilde)
    return CpsState(basis, coeffs, convention)


def log_norm_gradient(basis: CpsBasis) -> complex:
    """Wirtinger derivative of ``ln gQ`` with respect to ``alpha``."""
    x = abs(basis.alpha) ** 2
    lower = math.exp(float(log_gn2(x, basis.n0 - 1)) - 2 * basis.log_gq)
    upper = math.exp(2 * basis.log_gn[-1] - 2 * basis.log_gq)
    return basis.alpha.conjugate() / 2 * (1 + lower - upper)


def total_number_norm(
    alphas: Sequence[complex],
    selector: Iterable[Sequence[int]] | Callable[[tuple], bool],
    n_max: int | None = None,
) -> float:
    """Norm of a multimode coherent state projected onto the occupation set ``selector``.

    ``selector`` is either an explicit collection of occupation tuples or a
    predicate; a predicate needs ``n_max`` to bound the enumeration.
    """
    alphas = [complex(a) for a in alphas]
    m = len(alphas)
    if m > 4:
        raise ValueError("total_number_norm enumerates at most 4 modes")
    if callable(selector):
        if n_max is None:
            raise ValueError("an unbounded predicate needs n_max")
        states = [ns for ns in itertools.product(range(n_max + 1), repeat=m) if selector(ns)]
    else:
        states = [tuple(int(k) for k in ns) for ns in selector]
    total = 0.0
    for ns in states:
        if len(ns) != m:
            raise ValueError("occupation tuple length does not match the mode count")
        term = 1.0
        for a, k in zip(alphas, ns):
            term *= abs(a) ** (2 * k) / math.factorial(k)
        total += term
    return math.sqrt(total)


def total_number_set(modes: int, total: int) -> list[tuple[int, ...]]:
    """All occupation tuples of ``modes`` modes with fixed total ``total``."""
    return [ns for ns in itertools.product(range(total + 1), repeat=modes) if sum(ns) == total]


@dataclass(frozen=True)
class CpsProductBasis:
    modes: tuple

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("need at least one mode")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.d for b in self.modes)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def gq(self) -> float:
        return math.exp(sum(b.log_gq for b in self.modes))
