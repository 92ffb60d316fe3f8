"""Projected operators as ``d x d`` matrices acting on CPS coefficient vectors.

An operator ``O`` restricted to the projected space maps basis member ``q``
to ``sum_q' O[q', q] |alpha^(q')>``, so applying it to a state is a plain
matrix-vector product on the coefficients (either convention).

The generic path, :func:`op_from_fock_matrix`, is the reference; the closed
forms below are checked against it.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .basis import CpsBasis, CpsState

MAX_POWER = 8


@dataclass(frozen=True, eq=False)
class CpsOperatorMatrix:
    basis: CpsBasis
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.basis.d, self.basis.d):
            raise ValueError("operator matrix shape does not match the basis")
        object.__setattr__(self, "entries", m)

    def apply(self, state: CpsState) -> CpsState:
        if not state.basis.same_as(self.basis):
            raise ValueError("state and operator use different bases")
        return CpsState(state.basis, self.entries @ state.coeffs, state.convention)

    __call__ = apply

    def __add__(self, other: "CpsOperatorMatrix") -> "CpsOperatorMatrix":
        _check_same(self, other)
        return CpsOperatorMatrix(self.basis, self.entries + other.entries, f"{self.label}+{other.label}")

    def __sub__(self, other: "CpsOperatorMatrix") -> "CpsOperatorMatrix":
        _check_same(self, other)
        return CpsOperatorMatrix(self.basis, self.entries - other.entries, f"{self.label}-{other.label}")

    def __matmul__(self, other: "CpsOperatorMatrix") -> "CpsOperatorMatrix":
        _check_same(self, other)
        return CpsOperatorMatrix(self.basis, self.entries @ other.entries, f"{self.label}*{other.label}")

    def scaled(self, c: complex) -> "CpsOperatorMatrix":
        return CpsOperatorMatrix(self.basis, c * self.entries, self.label)

    def expectation(self, state: CpsState) -> complex:
        """``Psi^dagger M O Psi`` with normalized-convention coefficients."""
        psi = state.as_normalized().coeffs
        return complex(np.vdot(psi, self.basis.gram @ (self.entries @ psi)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                **self.basis.to_dict(),
                "re": self.entries.real.tolist(),
                "im": self.entries.imag.tolist(),
            }
        )

    def to_csv(self) -> str:
        """Row-major ``row, col, re, im`` table."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        for (i, j), z in np.ndenumerate(self.entries):
            w.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()


def _check_same(a: CpsOperatorMatrix, b: CpsOperatorMatrix) -> None:
    if not a.basis.same_as(b.basis):
        raise ValueError("operators use different bases")


def synthesis_matrix(basis: CpsBasis, normalized: bool = False) -> np.ndarray:
    """``V[n, q]``: number amplitudes of each basis member (rows ``n0..n_max``)."""
    n = basis.numbers
    q = np.arange(basis.d)
    return np.exp(basis.log_scale(normalized))[:, None] * np.exp(1j * basis.phi * np.outer(n, q))


def analysis_matrix(basis: CpsBasis, normalized: bool = False) -> np.ndarray:
    """``W = V^{-1}``, mapping number amplitudes to CPS coefficients."""
    n = basis.numbers
    q = np.arange(basis.d)
    return np.exp(-1j * basis.phi * np.outer(q, n)) * np.exp(-basis.log_scale(normalized))[None, :] / basis.d


def op_from_fock_matrix(basis: CpsBasis, O_fock, label: str = "generic") -> CpsOperatorMatrix:
    """CPS matrix of ``Q O Q`` given its number-basis block over ``n0..n_max``."""
    O_fock = np.asarray(O_fock, dtype=complex)
    d = basis.d
    if O_fock.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} number-basis block, got {O_fock.shape}")
    ls = basis.log_scale()
    # O_{n'n}(alpha) = sqrt(n'!) alpha^-n' <n'|O|n> alpha^n / sqrt(n!)
    scaled = O_fock * np.exp(ls[None, :] - ls[:, None])
    q = np.arange(d)
    phase = np.exp(2j * np.pi * q * basis.n0 / d)
    # X[n', q] = sum_n scaled[n', n] e^{i q n phi}
    X = scaled @ np.exp(1j * basis.phi * np.outer(basis.numbers, q))
    # entries[q', q] = (1/d) sum_n' e^{-i q' n' phi} X[n', q]
    entries = np.fft.fft(X, axis=0) * phase.conj()[:, None] / d
    return CpsOperatorMatrix(basis, entries, label)


def _circulant(basis: CpsBasis, weights: np.ndarray, label: str) -> CpsOperatorMatrix:
    # entries[q', q] = (1/d) sum_n w_n z^n with z = exp(i (q - q') phi)
    d = basis.d
    k = np.arange(d)
    c = np.exp(2j * np.pi * k * basis.n0 / d) * np.fft.ifft(np.asarray(weights, dtype=complex))
    q = np.arange(d)
    return CpsOperatorMatrix(basis, c[(q[None, :] - q[:, None]) % d], label)


def op_number_power(basis: CpsBasis, k: int) -> CpsOperatorMatrix:
    """``n**k`` by direct summation over the projected numbers."""
    if not 0 <= k <= MAX_POWER:
        raise ValueError(f"power must be in 0..{MAX_POWER}")
    return _circulant(basis, basis.numbers.astype(float) ** k, f"n^{k}")


def op_number_polynomial(basis: CpsBasis, coeffs, label: str = "poly(n)") -> CpsOperatorMatrix:
    """``sum_k coeffs[k] n**k`` for any number-diagonal polynomial."""
    n = basis.numbers.astype(float)
    w = np.polynomial.polynomial.polyval(n, np.asarray(coeffs, dtype=complex))
    return _circulant(basis, w, label)


def number_power_closed_form(d: int, k: int, z) -> np.ndarray:
    """Rational closed forms of ``(1/d) sum_{n<d} n**k z**n`` for ``k`` in 1, 2.

    ``z`` must be a ``d``-th root of unity or 1 (the diagonal).
    """
    z = np.asarray(z, dtype=complex)
    diag = np.abs(1 - z) < 1e-12
    out = np.empty_like(z)
    zz = np.where(diag, 0.5, z)  # placeholder off the pole
    if k == 1:
        val = (zz - zz**d * (d - zz * (d - 1))) / (d * (1 - zz) ** 2)
        out = np.where(diag, (d - 1) / 2, val)
    elif k == 2:
        val = (zz + zz**2 - zz**d * (d - zz * (d - 1)) ** 2 - zz ** (d + 1)) / (d * (1 - zz) ** 3)
        out = np.where(diag, (d - 1) * (2 * d - 1) / 6, val)
    else:
        raise ValueError("closed forms exist here for k = 1, 2 only")
    return out


def shifted_quadratic_closed_form(d: int, z) -> np.ndarray:
    """Closed form of the ``n**2 - n_max n`` matrix entries (``n0 = 0``)."""
    z = np.asarray(z, dtype=complex)
    diag = np.abs(1 - z) < 1e-12
    zz = np.where(diag, 0.5, z)
    val = zz * (zz**d * (d - 2) - d * (zz ** (d - 1) - zz + 1) + 2) / (d * (1 - zz) ** 3)
    return np.where(diag, (d - 1) * (2 - d) / 6, val)


def _require_zero_based(basis: CpsBasis, what: str) -> None:
    if basis.n0 != 0:
        raise ValueError(f"{what} closed form needs n0 = 0; use op_from_fock_matrix")


def op_shifted_quadratic(basis: CpsBasis) -> CpsOperatorMatrix:
    _require_zero_based(basis, "shifted quadratic")
    m = op_number_power(basis, 2).entries - basis.n_max * op_number_power(basis, 1).entries
    return CpsOperatorMatrix(basis, m, "n^2-n_max*n")


def op_annihilation(basis: CpsBasis) -> CpsOperatorMatrix:
    """Projected annihilation operator.

    ``O[q', q] = alpha_q delta_{q q'} - alpha_{q'} / d``. The ``1/d`` term
    carries the row amplitude ``alpha_{q'}``; putting ``alpha_q`` there does
    not reproduce the number-basis action (d = 2 already disagrees).
    """
    _require_zero_based(basis, "annihilation")
    amp = basis.amplitudes
    m = np.diag(amp) - np.repeat(amp[:, None] / basis.d, basis.d, axis=1)
    return CpsOperatorMatrix(basis, m, "a")


def op_creation(basis: CpsBasis) -> CpsOperatorMatrix:
    _require_zero_based(basis, "creation")
    n1 = op_number_power(basis, 1).entries
    return CpsOperatorMatrix(basis, n1 / basis.amplitudes[None, :], "a^dag")


def assemble_hamiltonian(basis: CpsBasis, omega: float, kappa: float) -> CpsOperatorMatrix:
    """``omega n + kappa n**2 / 2``."""
    h = omega * op_number_power(basis, 1).entries + 0.5 * kappa * op_number_power(basis, 2).entries
    return CpsOperatorMatrix(basis, h, f"H(omega={omega},kappa={kappa})")


def fock_ladder_block(basis: CpsBasis, which: str) -> np.ndarray:
    """Number-basis block of ``a``, ``a^dag`` or ``n`` over ``n0..n_max``."""
    n = basis.numbers.astype(float)
    d = basis.d
    if which == "a":
        return np.diag(np.sqrt(n[1:]), k=1).astype(complex)
    if which == "a_dag":
        return np.diag(np.sqrt(n[1:]), k=-1).astype(complex)
    if which == "n":
        return np.diag(n).astype(complex)
    raise ValueError(f"unknown ladder operator {which!r}")
