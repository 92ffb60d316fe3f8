"""Time evolution in a coherent-phase-state basis.

Three routes are provided:

* direct stepping with one cached ``expm(-i H dt)`` propagator,
* the hybrid picture, where the reference amplitude follows the linear
  rotation and the coefficients only see the number-conserving remainder,
* master-equation evolution of the projected P-function.

The phase-noise fringe ensemble for the anharmonic cat lives here as well.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, simpson
from scipy.linalg import expm

from .basis import NORMALIZED, CpsBasis, CpsState, basis_member, cps_to_fock, make_basis
from .fock_oracle import momentum_overlaps
from .operators import (
    CpsOperatorMatrix,
    assemble_hamiltonian,
    op_annihilation,
    op_from_fock_matrix,
    fock_ladder_block,
    op_number_polynomial,
    op_number_power,
)

DIRECT = "direct"
HYBRID = "hybrid"

MONTE_CARLO = "monte-carlo"
GAUSS_HERMITE = "gauss-hermite"
FOURIER = "fourier"
GH_NODES = 64

# samples per RNG block; fixed so results do not depend on the worker count
MC_BLOCK = 4096


def worker_count(limit: int | None = None) -> int:
    """Worker threads to use, capped by ``CPSKIT_THREADS`` when set."""
    n = os.cpu_count() or 1
    env = os.environ.get("CPSKIT_THREADS")
    if env:
        try:
            n = max(1, int(env))
        except ValueError:
            raise ValueError(f"CPSKIT_THREADS must be a positive integer, got {env!r}") from None
    if limit is not None:
        n = min(n, max(1, limit))
    return n


# -- unitary evolution -------------------------------------------------------


@dataclass(frozen=True)
class EvolutionPlan:
    hamiltonian: CpsOperatorMatrix
    t_max: float
    steps: int
    picture: str = DIRECT

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.t_max >= 0:
            raise ValueError("t_max must be >= 0")
        if self.picture not in (DIRECT, HYBRID):
            raise ValueError(f"unknown picture {self.picture!r}")

    @property
    def dt(self) -> float:
        return self.t_max / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.steps + 1)


@dataclass(frozen=True, eq=False)
class Propagator:
    """``exp(-i H dt)`` for a fixed step; independent of the initial state."""

    basis: CpsBasis
    matrix: np.ndarray
    dt: float

    def step(self, state: CpsState) -> CpsState:
        if not state.basis.same_as(self.basis):
            raise ValueError("state and propagator use different bases")
        return CpsState(state.basis, self.matrix @ state.coeffs, state.convention)


def make_propagator(hamiltonian: CpsOperatorMatrix, dt: float) -> Propagator:
    return Propagator(hamiltonian.basis, expm(-1j * dt * hamiltonian.entries), float(dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a time grid; each state carries its own (possibly rotated) basis."""

    times: np.ndarray
    states: tuple

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> CpsState:
        return self.states[-1]

    def norms(self) -> np.ndarray:
        return np.array([s.physical_norm() for s in self.states])

    def norm_drift(self) -> np.ndarray:
        n = self.norms()
        return np.abs(n - n[0])

    def mean_amplitude(self) -> np.ndarray:
        return np.array([annihilation_matrix(s.basis).expectation(s) for s in self.states])

    def mean_number(self) -> np.ndarray:
        return np.array([op_number_power(s.basis, 1).expectation(s).real for s in self.states])

    def rows(self, analytic: np.ndarray | None = None) -> list[list[float]]:
        a = self.mean_amplitude()
        cols = [self.times, a.real, a.imag, self.mean_number(), self.norm_drift()]
        if analytic is not None:
            cols += [analytic.real, analytic.imag, np.abs(a - analytic)]
        return [list(map(float, r)) for r in zip(*cols)]

    def to_csv(self, analytic: np.ndarray | None = None) -> str:
        header = ["t", "re_a", "im_a", "n_mean", "norm_drift"]
        if analytic is not None:
            header += ["re_a_analytic", "im_a_analytic", "deviation"]
        return _csv_text(header, self.rows(analytic))


def annihilation_matrix(basis: CpsBasis) -> CpsOperatorMatrix:
    """Closed form when ``n0 = 0``, generic conjugation otherwise."""
    if basis.n0 == 0:
        return op_annihilation(basis)
    return op_from_fock_matrix(basis, fock_ladder_block(basis, "a"), "a")


def propagate_unitary(
    state: CpsState, plan: EvolutionPlan, propagator: Propagator | None = None
) -> Trajectory:
    """Direct stepping ``Psi <- exp(-i H dt) Psi``."""
    H = plan.hamiltonian
    if not state.basis.same_as(H.basis):
        raise ValueError("state and Hamiltonian use different bases")
    if propagator is None:
        propagator = make_propagator(H, plan.dt)
    elif not math.isclose(propagator.dt, plan.dt, rel_tol=1e-15, abs_tol=0.0):
        raise ValueError("propagator step does not match the plan")
    states = [state]
    for _ in range(plan.steps):
        states.append(propagator.step(states[-1]))
    return Trajectory(plan.times, tuple(states))


def _accumulated_phase(omega, times: np.ndarray) -> np.ndarray:
    if not callable(omega):
        return float(omega) * times
    theta = np.zeros_like(times)
    for k in range(1, len(times)):
        val, _ = quad(omega, times[k - 1], times[k], epsabs=1e-14, epsrel=1e-13)
        theta[k] = theta[k - 1] + val
    return theta


def hybrid_evolve(
    state: CpsState,
    omega: float | Callable[[float], float],
    kappa: float,
    t_max: float,
    steps: int,
    nonlinear: CpsOperatorMatrix | None = None,
) -> Trajectory:
    """Evolve under ``omega(t) n + kappa n**2 / 2 [+ nonlinear]`` in the hybrid picture.

    The Hamiltonian is split as ``(omega + kappa n_max / 2) n`` plus
    ``kappa (n**2 - n_max n) / 2``. The first piece rotates the reference
    amplitude; the second, whose matrix does not depend on ``alpha``, acts on
    the coefficients. ``nonlinear`` adds any further operator, which must be
    diagonal in the number basis (circulant in the phase indices).
    """
    basis = state.basis
    plan = EvolutionPlan(CpsOperatorMatrix(basis, np.zeros((basis.d, basis.d))), t_max, steps, HYBRID)
    shift = 0.5 * kappa * basis.n_max
    h = op_number_polynomial(basis, [0.0, -shift, 0.5 * kappa], "kappa(n^2-n_max n)/2").entries
    if nonlinear is not None:
        if not nonlinear.basis.same_as(basis):
            raise ValueError("nonlinear term uses a different basis")
        if not is_circulant(nonlinear.entries):
            raise ValueError("nonlinear term must conserve the number of quanta")
        h = h + nonlinear.entries
    U = expm(-1j * plan.dt * h)
    times = plan.times
    theta = _accumulated_phase(omega, times) + shift * times
    states = [state]
    coeffs = state.coeffs
    for k in range(1, steps + 1):
        coeffs = U @ coeffs
        rotated = basis.with_alpha(basis.alpha * np.exp(-1j * theta[k]))
        states.append(CpsState(rotated, coeffs, state.convention))
    return Trajectory(times, tuple(states))


def is_circulant(m: np.ndarray, tol: float = 1e-12) -> bool:
    d = m.shape[0]
    q = np.arange(d)
    first = m[0]
    ref = first[(q[None, :] - q[:, None]) % d]
    return bool(np.max(np.abs(m - ref), initial=0.0) <= tol * max(1.0, np.max(np.abs(m))))


def anharmonic_analytic(alpha: complex, omega: float, kappa: float, t) -> np.ndarray | complex:
    """Mean amplitude of an unprojected coherent state under ``omega n + kappa n**2 / 2``."""
    t = np.asarray(t, dtype=float)
    x = abs(alpha) ** 2
    out = alpha * np.exp(x * (np.exp(-1j * kappa * t) - 1) - 1j * (omega + kappa / 2) * t)
    return complex(out) if out.ndim == 0 else out


def run_anharmonic(
    alpha: complex = 4.0,
    d: int = 32,
    omega: float = 0.5,
    kappa: float = 1.0,
    steps: int = 500,
    t_max: float = 4 * math.pi,
    picture: str = DIRECT,
) -> tuple[Trajectory, np.ndarray]:
    """Evolve the normalized basis member at ``alpha``; returns (trajectory, analytic amplitude)."""
    basis = make_basis(d, 0, alpha)
    psi0 = basis_member(basis, 0, NORMALIZED)
    if picture == DIRECT:
        plan = EvolutionPlan(assemble_hamiltonian(basis, omega, kappa), t_max, steps, DIRECT)
        traj = propagate_unitary(psi0, plan)
    elif picture == HYBRID:
        traj = hybrid_evolve(psi0, omega, kappa, t_max, steps)
    else:
        raise ValueError(f"unknown picture {picture!r}")
    return traj, anharmonic_analytic(complex(alpha), omega, kappa, traj.times)


# -- cat fringes with phase noise --------------------------------------------


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Gaussian accumulated phase ``theta ~ N(0, sigma**2)``.

    ``method`` is one of ``monte-carlo`` (seeded ensemble), ``gauss-hermite``
    (64-node rule) or ``fourier`` (exact average, since
    ``E[exp(-i k theta)] = exp(-k**2 sigma**2 / 2)``).

    The 64-node rule aliases once ``k sigma`` reaches about 16 for some
    number difference ``k < d``; prefer ``fourier`` as a reference.
    """

    sigma: float = 0.0
    samples: int = 100_000
    seed: int = 0
    method: str = MONTE_CARLO

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.method not in (MONTE_CARLO, GAUSS_HERMITE, FOURIER):
            raise ValueError(f"unknown phase-noise method {self.method!r}")


@dataclass(frozen=True, eq=False)
class FringeResult:
    p_grid: np.ndarray
    density: np.ndarray
    stderr: np.ndarray | None = None
    analytic: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(simpson(self.density, x=self.p_grid))

    def contrast(self, window: float | None = None) -> float:
        """``(max - min) / (max + min)`` of the density over ``|p| <= window``.

        The default window is one fringe period either side of the origin.
        """
        if window is None:
            window = math.pi / (math.sqrt(2) * self.meta["alpha"])
        sel = np.abs(self.p_grid) <= window
        if not sel.any():
            raise ValueError("contrast window contains no grid points")
        v = self.density[sel]
        return float((v.max() - v.min()) / (v.max() + v.min()))

    def to_csv(self) -> str:
        header = ["p", "P"]
        cols = [self.p_grid, self.density]
        if self.stderr is not None:
            header.append("stderr")
            cols.append(self.stderr)
        if self.analytic is not None:
            header.append("P_analytic")
            cols.append(self.analytic)
        return _csv_text(header, [list(map(float, r)) for r in zip(*cols)])


def cat_fringe_analytic(alpha: float, p_grid) -> np.ndarray:
    """Fringe pattern of the even-odd cat ``((1-i)|alpha> + (1+i)|-alpha>)/2``."""
    p = np.asarray(p_grid, dtype=float)
    return np.exp(-p**2) / math.sqrt(math.pi) * (1 - np.sin(2 * math.sqrt(2) * alpha * p))


def default_cat_dimension(alpha: float) -> int:
    d = 2 * math.ceil(alpha**2)
    return d + (d % 2)


def prepare_cat(alpha: float, d: int, kappa: float = 1.0) -> CpsState:
    """Evolve the normalized coherent basis member under ``kappa n**2 / 2`` to ``t = pi / kappa``."""
    if d % 2:
        raise ValueError("d must be even so that -alpha is one of the basis phases")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    basis = make_basis(d, 0, alpha)
    H = assemble_hamiltonian(basis, 0.0, kappa)
    return make_propagator(H, math.pi / kappa).step(basis_member(basis, 0, NORMALIZED))


def _fringe_amplitudes(state: CpsState, p_grid: np.ndarray) -> np.ndarray:
    # B[n, p] = c_n <p|n>, normalized so that the state has unit norm
    c = cps_to_fock(state.as_normalized()) / math.sqrt(state.physical_norm())
    return c[:, None] * momentum_overlaps(state.basis.d, p_grid)


def _mc_block(B: np.ndarray, n: np.ndarray, sigma: float, seed: int, block: int, size: int):
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))
    theta = sigma * gen.standard_normal(size)
    # rotating the reference amplitude by exp(-i theta) multiplies c_n by exp(-i n theta)
    amp = np.exp(-1j * np.outer(theta, n)) @ B
    vals = amp.real**2 + amp.imag**2
    return vals.sum(axis=0), (vals**2).sum(axis=0)


def cat_fringe(
    alpha: float,
    noise: PhaseNoiseModel,
    p_grid: Sequence[float] | None = None,
    d: int | None = None,
    kappa: float = 1.0,
    workers: int | None = None,
) -> FringeResult:
    """Momentum distribution of the anharmonic cat averaged over a Gaussian phase."""
    alpha = float(alpha)
    if d is None:
        d = default_cat_dimension(alpha)
    if d % 2:
        raise ValueError("d must be even so that -alpha is one of the basis phases")
    p = np.linspace(-4.0, 4.0, 500) if p_grid is None else np.asarray(p_grid, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("grid must be finite")
    state = prepare_cat(alpha, d, kappa)
    B = _fringe_amplitudes(state, p)
    n = state.basis.numbers.astype(float)
    sigma = noise.sigma
    stderr = None
    if sigma == 0:
        amp = B.sum(axis=0)
        density = amp.real**2 + amp.imag**2
        if noise.method == MONTE_CARLO:
            stderr = np.zeros_like(density)
    elif noise.method == MONTE_CARLO:
        sizes = [min(MC_BLOCK, noise.samples - s) for s in range(0, noise.samples, MC_BLOCK)]
        nw = workers if workers is not None else worker_count(len(sizes))
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(
                pool.map(lambda k: _mc_block(B, n, sigma, noise.seed, k, sizes[k]), range(len(sizes)))
            )
        # reduce in block order with numpy's pairwise summation
        s1 = np.sum(np.stack([a for a, _ in parts]), axis=0)
        s2 = np.sum(np.stack([b for _, b in parts]), axis=0)
        N = noise.samples
        density = s1 / N
        var = np.maximum(s2 / N - density**2, 0.0) * N / max(N - 1, 1)
        stderr = np.sqrt(var / N)
    elif noise.method == GAUSS_HERMITE:
        x, w = np.polynomial.hermite.hermgauss(GH_NODES)
        amp = np.exp(-1j * np.outer(math.sqrt(2) * sigma * x, n)) @ B
        density = (w / math.sqrt(math.pi)) @ (amp.real**2 + amp.imag**2)
    else:
        k = n[:, None] - n[None, :]
        K = np.exp(-0.5 * sigma**2 * k**2)
        density = np.einsum("np,mp,nm->p", B, B.conj(), K).real
    meta = {
        "alpha": alpha,
        "d": d,
        "kappa": kappa,
        "sigma": sigma,
        "method": noise.method,
        "samples": noise.samples if noise.method == MONTE_CARLO else None,
        "seed": noise.seed if noise.method == MONTE_CARLO else None,
    }
    analytic = cat_fringe_analytic(alpha, p) if sigma == 0 else None
    return FringeResult(p, np.maximum(density, 0.0), stderr, analytic, meta)


# -- master equation -----------------------------------------------------------


def master_evolve_cps(pfunc, omega: float, kappa: float, gamma_p: float, gamma_a: float, t: float, steps: int = 1):
    """Evolve an unnormalized single-mode P-function under the Lindblad equation.

    Hamiltonian ``omega n + kappa n**2 / 2``; dephasing
    ``gamma_p (2 n rho n - n**2 rho - rho n**2)``; loss
    ``gamma_a (2 a rho a^dag - n rho - rho n)``. Operators on the left of
    ``rho`` act on the first P-function index through their phase-basis
    matrices; operators on the right act on the second index through the
    matching matrices of the conjugate-side basis.
    """
    from .prep import UNNORMALIZED_P, CpsPFunction, left_action_matrix, right_action_matrix

    if min(gamma_p, gamma_a) < 0:
        raise ValueError("rates must be non-negative")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if len(pfunc.bases) != 1:
        raise ValueError("master-equation evolution is single-mode")
    basis, beta = pfunc.bases[0], pfunc.betas[0]
    if basis.n0 != 0:
        raise ValueError("master-equation evolution needs n0 = 0 so that loss stays in range")
    pf = pfunc.as_unnormalized()
    n = basis.numbers.astype(float)
    blocks = {
        "H": np.diag(omega * n + 0.5 * kappa * n**2).astype(complex),
        "n": np.diag(n).astype(complex),
        "n2": np.diag(n**2).astype(complex),
        "a": fock_ladder_block(basis, "a"),
        "a_dag": fock_ladder_block(basis, "a_dag"),
    }
    L = {k: left_action_matrix(basis, v) for k, v in blocks.items()}
    R = {k: right_action_matrix(basis, beta, v) for k, v in blocks.items()}
    d = basis.d
    eye = np.eye(d)

    def lr(A, B):  # vec(A p B) for row-major vec
        return np.kron(A, B.T)

    S = -1j * (lr(L["H"], eye) - lr(eye, R["H"]))
    S += gamma_p * (2 * lr(L["n"], R["n"]) - lr(L["n2"], eye) - lr(eye, R["n2"]))
    S += gamma_a * (2 * lr(L["a"], R["a_dag"]) - lr(L["n"], eye) - lr(eye, R["n"]))
    step = expm(S * (t / steps))
    vec = pf.coeffs.reshape(-1)
    for _ in range(steps):
        vec = step @ vec
    return CpsPFunction(pf.bases, pf.betas, vec.reshape(d, d), UNNORMALIZED_P)


def _csv_text(header: list[str], rows: list[list[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) for x in r])
    return buf.getvalue()
