"""Self-check suites comparing the phase-basis machinery with the number-basis oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock_oracle as fo
from .basis import (
    CpsState,
    cps_to_fock,
    fock_to_cps,
    make_basis,
    norm_gq_direct,
    norm_gq_gamma,
)
from .evolution import master_evolve_cps, run_anharmonic
from .operators import (
    fock_ladder_block,
    op_annihilation,
    op_creation,
    op_from_fock_matrix,
    op_number_power,
    op_shifted_quadratic,
)
from .prep import boson_sampling_correlation, pfunc_from_rho, pfunc_moment, random_unitary, rho_from_pfunc

SUITES = ("basis", "operators", "evolution", "prep")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "residual": float(self.residual),
            "tol": self.tol,
            "passed": self.passed,
        }


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def _random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def suite_basis(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    b = make_basis(2, 0, 1.0)
    out.append(Check("basis", "qubit orthogonality |M01|", abs(b.gram[0, 1]), 1e-12))
    out.append(Check("basis", "qubit gQ = sqrt(2)", abs(b.gq - math.sqrt(2)), 1e-12))
    res = max(
        abs(norm_gq_gamma(a, nm) / norm_gq_direct(a, 0, nm) - 1)
        for a in (0.3, 1.0, 2.0, 4.0)
        for nm in (0, 3, 8, 30)
    )
    out.append(Check("basis", "incomplete-gamma norm vs direct sum", res, 1e-12))
    worst_rt = worst_norm = 0.0
    for d in (2, 5, 8, 16, 32):
        alpha = math.sqrt(d / 2) * np.exp(0.4j)
        basis = make_basis(d, 0, alpha)
        psi = _random_complex(rng, d)
        worst_rt = max(worst_rt, _rel(cps_to_fock(fock_to_cps(basis, psi)), psi))
        s = CpsState(basis, _random_complex(rng, d))
        f = cps_to_fock(s)
        worst_norm = max(worst_norm, abs(s.physical_norm() - np.vdot(f, f).real) / np.vdot(f, f).real)
    out.append(Check("basis", "number/phase round trip", worst_rt, 1e-12))
    out.append(Check("basis", "physical norm vs number-basis norm", worst_norm, 1e-12))
    return out


def suite_operators(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = {}
    for d in (3, 8, 16):
        for n0 in (0, 2):
            for alpha in (0.5, 2.0, 4 * np.exp(1j * math.pi / 7)):
                basis = make_basis(d, n0, alpha)
                n = basis.numbers.astype(float)
                cases = {f"n^{k}": (op_number_power(basis, k), np.diag(n**k)) for k in range(1, 5)}
                X = _random_complex(rng, d, d)
                cases["generic"] = (op_from_fock_matrix(basis, X), X)
                if n0 == 0:
                    cases["a"] = (op_annihilation(basis), fock_ladder_block(basis, "a"))
                    cases["a_dag"] = (op_creation(basis), fock_ladder_block(basis, "a_dag"))
                    cases["n^2-n_max n"] = (op_shifted_quadratic(basis), np.diag(n**2 - basis.n_max * n))
                for name, (op, F) in cases.items():
                    ref = fo.phase_conjugation(d, n0, alpha, F)
                    worst[name] = max(worst.get(name, 0.0), _rel(op.entries, ref))
    return [Check("operators", f"{k} vs oracle conjugation", v, 1e-12) for k, v in worst.items()]


def suite_evolution(seed: int = 0) -> list[Check]:
    out = []
    direct, _ = run_anharmonic(d=32)
    out.append(Check("evolution", "direct norm drift d=32", float(direct.norm_drift().max()), 1e-10))
    hyb, _ = run_anharmonic(d=48, picture="hybrid")
    out.append(Check("evolution", "hybrid norm drift d=48", float(hyb.norm_drift().max()), 1e-10))
    dir48, _ = run_anharmonic(d=48)
    out.append(
        Check(
            "evolution",
            "hybrid vs direct <a>",
            float(np.max(np.abs(hyb.mean_amplitude() - dir48.mean_amplitude()))),
            1e-10,
        )
    )
    basis = make_basis(12, 0, 2.0)
    psi = fo.coherent_vector(2.0, 12).coeffs
    rho = np.outer(psi, psi.conj())
    rho /= np.trace(rho)
    pf = pfunc_from_rho(rho, basis)
    evolved = master_evolve_cps(pf, 0.5, 1.0, 0.05, 0.02, 1.0)
    ref = fo.lindblad_evolve_exact(fo.FockDensity(rho), 0.5, 1.0, 0.05, 0.02, 1.0)
    out.append(Check("evolution", "master equation vs oracle", _rel(rho_from_pfunc(evolved), ref.entries), 1e-8))
    return out


def suite_prep(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst_rt = worst_mom = 0.0
    for trial in range(20):
        dims = [int(rng.integers(1, 5)) for _ in range(1 + trial % 2)]
        bases = [make_basis(d, int(rng.integers(0, 3)), complex(*rng.uniform(0.5, 1.5, 2))) for d in dims]
        Q = int(np.prod(dims))
        X = _random_complex(rng, Q, Q)
        rho = X @ X.conj().T
        rho /= np.trace(rho)
        pf = pfunc_from_rho(rho, bases)
        worst_rt = max(worst_rt, _rel(rho_from_pfunc(pf), rho))
        # <n_1> through the P-function vs trace against the number operator
        N1 = np.diag(bases[0].numbers.astype(float))
        for b in bases[1:]:
            N1 = np.kron(N1, np.eye(b.d))
        k = [1] + [0] * (len(bases) - 1)
        worst_mom = max(worst_mom, abs(pfunc_moment(pf, k, k) - np.trace(rho @ N1)))
    worst_bs = 0.0
    for s in range(10):
        U = random_unitary(5, seed + s)
        r = boson_sampling_correlation(U, [0, 1, 2], [2, 3, 4])
        worst_bs = max(worst_bs, abs(r.value - r.oracle))
    return [
        Check("prep", "P-function round trip", worst_rt, 1e-12),
        Check("prep", "number moment vs trace", worst_mom, 1e-12),
        Check("prep", "boson sampling vs |Perm|^2", worst_bs, 1e-10),
    ]


def run_suites(names) -> list[Check]:
    table = {
        "basis": suite_basis,
        "operators": suite_operators,
        "evolution": suite_evolution,
        "prep": suite_prep,
    }
    checks = []
    for name in names:
        if name not in table:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
        checks.extend(table[name]())
    return checks
