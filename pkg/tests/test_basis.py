import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpskit import fock_oracle as fo
from cpskit.basis import (
    NORMALIZED,
    UNNORMALIZED,
    CpsProductBasis,
    CpsState,
    basis_member,
    cps_to_fock,
    dft_condition,
    fock_to_cps,
    gaussian_gn2,
    geometric_sum,
    gram_inner,
    log_gn2,
    log_norm_gradient,
    make_basis,
    norm_gq_direct,
    norm_gq_gamma,
    reexpand_coherent,
    total_number_norm,
    total_number_set,
)


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_qubit_basis_norm_and_orthogonality():
    b = make_basis(2, 0, 1.0)
    assert b.gq == pytest.approx(math.sqrt(2), abs=1e-15)
    assert abs(b.gram[0, 1]) <= 1e-12


def test_orthogonality_at_half_filling_with_offset():
    # |alpha|^2 = n0 + d/2 also makes the two-phase basis orthogonal
    b = make_basis(2, 3, math.sqrt(4.0))
    assert abs(b.gram[0, 1]) <= 1e-12


def test_gram_matches_direct_sum_d12():
    d, x = 12, 6.0
    b = make_basis(d, 0, math.sqrt(x))
    n = np.arange(d)
    w = x**n / np.array([math.factorial(k) for k in n])
    for q1 in range(d):
        for q2 in range(d):
            ref = np.sum(np.exp(1j * (q2 - q1) * n * 2 * math.pi / d) * w) / w.sum()
            assert abs(b.gram[q1, q2] - ref) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 5), st.floats(0.1, 8.0), st.floats(0, 2 * math.pi))
def test_gram_structure(d, n0, r, theta):
    b = make_basis(d, n0, r * np.exp(1j * theta))
    M = b.gram
    q = np.arange(d)
    circ = M[0][(q[None, :] - q[:, None]) % d]
    assert np.max(np.abs(M - circ)) < 1e-12
    assert np.max(np.abs(M - M.conj().T)) < 1e-12
    np.testing.assert_array_equal(np.diag(M), 1.0)
    assert np.linalg.eigvalsh(M).min() >= -1e-10
    assert abs(b.phi * d - 2 * math.pi) < 1e-15
    assert abs(np.sum(b.gn**2) / b.gq**2 - 1) < 1e-12


def test_make_basis_rejects_bad_input():
    with pytest.raises(ValueError):
        make_basis(2, 0, 0.0)
    with pytest.raises(ValueError):
        make_basis(0, 0, 1.0)
    with pytest.raises(ValueError):
        make_basis(3, -1, 1.0)


def test_large_amplitude_does_not_overflow():
    b = make_basis(2048, 0, math.sqrt(1000.0))
    assert np.isfinite(b.log_gq)
    assert np.all(np.isfinite(b.gram))
    assert b.log_gq == pytest.approx(500.0, rel=1e-12)


def test_gq_gamma_values():
    assert norm_gq_gamma(0, 5) == 1.0
    assert norm_gq_gamma(1.5, 200) == pytest.approx(math.exp(1.5**2 / 2), rel=1e-10)
    direct = math.sqrt(sum(4.0**n / math.factorial(n) for n in range(9)))
    assert norm_gq_gamma(2.0, 8) == pytest.approx(direct, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 6.0), st.integers(0, 60))
def test_gq_gamma_matches_direct(r, nm):
    assert abs(norm_gq_gamma(r, nm) / norm_gq_direct(r, 0, nm) - 1) < 1e-12


def test_gaussian_tail_formula_accuracy():
    exact = math.exp(float(log_gn2(100.0, 100)))
    assert abs(gaussian_gn2(100.0, 100) / exact - 1) < 5e-3


def test_fock_to_cps_number_state():
    d, n, alpha = 6, 2, 1.3
    b = make_basis(d, 0, alpha)
    psi = np.zeros(d)
    psi[n] = 1
    s = fock_to_cps(b, psi, UNNORMALIZED)
    q = np.arange(d)
    ref = math.sqrt(math.factorial(n)) / (d * alpha**n) * np.exp(-1j * q * n * b.phi)
    np.testing.assert_allclose(s.coeffs, ref, atol=1e-15)


def test_fock_to_cps_of_basis_member_is_delta():
    b = make_basis(7, 0, 1.1 * np.exp(0.3j))
    psi = fo.coherent_vector(b.alpha, 7).coeffs
    s = fock_to_cps(b, psi, UNNORMALIZED)
    np.testing.assert_allclose(s.coeffs, np.eye(7)[0], atol=1e-14)


def test_cps_to_fock_qubit_branches():
    b = make_basis(2, 0, 1.0)
    plus = cps_to_fock(CpsState(b, [1, 0], UNNORMALIZED))
    minus = cps_to_fock(CpsState(b, [0, 1], UNNORMALIZED))
    np.testing.assert_allclose(plus, [1, 1], atol=1e-15)
    np.testing.assert_allclose(minus, [1, -1], atol=1e-15)


def test_uniform_coefficients_give_single_number_state():
    b = make_basis(5, 0, 0.9)
    out = cps_to_fock(CpsState(b, np.full(5, 1 / 5), UNNORMALIZED))
    np.testing.assert_allclose(out, np.eye(5)[0], atol=1e-15)
    # with an offset the surviving number is the one divisible by d
    b = make_basis(5, 2, 0.9)
    out = cps_to_fock(CpsState(b, np.full(5, 1 / 5), UNNORMALIZED))
    ref = np.zeros(5, dtype=complex)
    ref[3] = 0.9**5 / math.sqrt(math.factorial(5))
    np.testing.assert_allclose(out, ref, atol=1e-15)


def test_normalized_convention_divides_by_gq():
    b = make_basis(4, 0, 1.4)
    c = np.array([0.3, -0.2j, 1.0, 0.5])
    un = cps_to_fock(CpsState(b, c, UNNORMALIZED))
    nm = cps_to_fock(CpsState(b, c, NORMALIZED))
    np.testing.assert_allclose(nm, un / b.gq, atol=1e-15)
    s = CpsState(b, c, UNNORMALIZED)
    np.testing.assert_allclose(s.as_normalized().coeffs, c * b.gq)
    np.testing.assert_allclose(s.as_normalized().as_unnormalized().coeffs, c)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.integers(0, 3), st.floats(0, 2 * math.pi), st.integers(0, 2**31 - 1))
def test_round_trip_well_conditioned(d, n0, theta, seed):
    # near |alpha|^2 = n0 + d/2 the scaling spread is smallest
    alpha = math.sqrt(n0 + d / 2) * np.exp(1j * theta)
    b = make_basis(d, n0, alpha)
    rng = np.random.default_rng(seed)
    psi = rand_c(rng, d)
    back = cps_to_fock(fock_to_cps(b, psi))
    assert np.max(np.abs(back - psi)) <= 1e-12 * np.max(np.abs(psi))
    c = rand_c(rng, d)
    again = fock_to_cps(b, cps_to_fock(CpsState(b, c))).coeffs
    assert np.max(np.abs(again - c)) <= 1e-12 * np.max(np.abs(c))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.floats(0.1, 8.0), st.integers(0, 2**31 - 1))
def test_round_trip_error_tracks_conditioning(d, r, seed):
    b = make_basis(d, 0, r)
    rng = np.random.default_rng(seed)
    psi = rand_c(rng, d)
    back = cps_to_fock(fock_to_cps(b, psi))
    err = np.max(np.abs(back - psi)) / np.max(np.abs(psi))
    assert err <= 1e-14 * max(1.0, dft_condition(b)) * d


def test_round_trip_fails_at_1e12_when_ill_conditioned():
    # the scaling spread alone puts float64 round trips out of reach here
    b = make_basis(32, 0, 0.1)
    assert dft_condition(b) > 1e40


def test_gram_inner_basis_members():
    b = make_basis(2, 0, 1.0)
    assert abs(gram_inner(basis_member(b, 0), basis_member(b, 0)) - 1) < 1e-15
    assert abs(gram_inner(basis_member(b, 0), basis_member(b, 1))) < 1e-12


@pytest.mark.parametrize("n0", [0, 2])
def test_gram_inner_matches_fock_inner(n0):
    rng = np.random.default_rng(n0)
    b = make_basis(8, n0, math.sqrt(n0 + 4) * np.exp(0.7j))
    s1, s2 = CpsState(b, rand_c(rng, 8)), CpsState(b, rand_c(rng, 8))
    ref = np.vdot(cps_to_fock(s1), cps_to_fock(s2))
    assert abs(gram_inner(s1, s2) - ref) < 1e-12 * abs(ref)
    f = cps_to_fock(s1)
    assert abs(s1.physical_norm() - np.vdot(f, f).real) < 1e-12 * np.vdot(f, f).real


def test_gram_inner_rejects_basis_mismatch():
    s1 = basis_member(make_basis(3, 0, 1.0), 0)
    s2 = basis_member(make_basis(3, 0, 2.0), 0)
    with pytest.raises(ValueError):
        gram_inner(s1, s2)


def test_reexpand_identity_and_vacuum():
    b = make_basis(6, 0, 1.7)
    s = reexpand_coherent(b, b.amplitudes[2])
    np.testing.assert_allclose(s.coeffs, np.eye(6)[2], atol=1e-14)
    v = reexpand_coherent(b, 0)
    np.testing.assert_allclose(v.coeffs, np.full(6, 1 / 6), atol=1e-15)


def test_reexpand_matches_truncated_coherent_vector():
    b = make_basis(4, 0, 1.5 * np.exp(0.2j))
    at = 0.5 * b.alpha
    out = cps_to_fock(reexpand_coherent(b, at))
    np.testing.assert_allclose(out, fo.coherent_vector(at, 4).coeffs, atol=1e-12)
    nm = reexpand_coherent(b, at, NORMALIZED)
    ref = fo.coherent_vector(at, 4).coeffs / norm_gq_direct(at, 0, 3)
    np.testing.assert_allclose(cps_to_fock(nm), ref, atol=1e-12)


def test_reexpand_needs_zero_offset():
    with pytest.raises(ValueError):
        reexpand_coherent(make_basis(4, 1, 1.0), 0.3)


def test_geometric_sum_near_pole():
    z = np.array([1.0, 1 + 1e-10, np.exp(1e-9j), 0.5])
    out = geometric_sum(z, 9)
    direct = np.array([np.sum(zz ** np.arange(9)) for zz in z])
    np.testing.assert_allclose(out, direct, rtol=1e-12)


def _fd_log_gq(b, h=1e-6):
    def lg(a):
        return make_basis(b.d, b.n0, a).log_gq

    dx = (lg(b.alpha + h) - lg(b.alpha - h)) / (2 * h)
    dy = (lg(b.alpha + 1j * h) - lg(b.alpha - 1j * h)) / (2 * h)
    return 0.5 * (dx - 1j * dy)


@pytest.mark.parametrize("d,n0,alpha", [(6, 0, 2.0), (5, 2, 1.3 + 0.4j), (12, 1, 0.7j), (3, 0, 2.5)])
def test_log_norm_gradient_matches_finite_difference(d, n0, alpha):
    b = make_basis(d, n0, alpha)
    assert abs(log_norm_gradient(b) - _fd_log_gq(b)) < 1e-8


def test_log_norm_gradient_limits():
    assert log_norm_gradient(make_basis(1, 0, 1.7)) == 0
    b = make_basis(200, 0, 1.5 + 0.5j)
    assert abs(log_norm_gradient(b) - b.alpha.conjugate() / 2) < 1e-10


def test_total_number_norm_cases():
    assert total_number_norm([1.3, 0.4], [(0, 0)]) == 1.0
    one = total_number_norm([2.0], lambda ns: ns[0] <= 8, n_max=8)
    assert one == pytest.approx(norm_gq_gamma(2.0, 8), rel=1e-12)
    two = total_number_norm([1, 1], total_number_set(2, 2))
    assert two == pytest.approx(math.sqrt(2), rel=1e-15)


def test_total_number_norm_guards():
    with pytest.raises(ValueError):
        total_number_norm([1.0], lambda ns: True)
    with pytest.raises(ValueError):
        total_number_norm([1.0] * 5, [(0,) * 5])


def test_product_basis():
    pb = CpsProductBasis([make_basis(2, 0, 1.0), make_basis(3, 0, 0.5)])
    assert pb.dims == (2, 3)
    assert pb.size == 6
    assert pb.gq == pytest.approx(pb.modes[0].gq * pb.modes[1].gq)


def test_state_json_round_trip():
    rng = np.random.default_rng(5)
    b = make_basis(5, 1, 1.2 - 0.3j)
    s = CpsState(b, rand_c(rng, 5), UNNORMALIZED)
    back = CpsState.from_json(s.to_json())
    assert back.convention == UNNORMALIZED
    assert back.basis.same_as(b)
    np.testing.assert_allclose(back.coeffs, s.coeffs, rtol=1e-15)
    np.testing.assert_allclose(back.basis.gram, b.gram, rtol=1e-15, atol=1e-16)


def test_state_rejects_bad_shape_and_convention():
    b = make_basis(3, 0, 1.0)
    with pytest.raises(ValueError):
        CpsState(b, np.zeros(4))
    with pytest.raises(ValueError):
        CpsState(b, np.zeros(3), "other")


def test_with_alpha_shares_norms():
    b = make_basis(8, 0, 2.0)
    r = b.with_alpha(2.0 * np.exp(0.4j))
    assert r.gram is b.gram
    assert r.alpha == pytest.approx(2.0 * np.exp(0.4j))
