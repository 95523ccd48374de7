import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pseudospec import (DimensionTooLarge, NotHermitian, batched_singular_values,
                        hermitian_eigs, schur_decompose, singular_values, small_svd)
from fixtures import random_matrix

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def complex_matrices(max_n=6):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(arrays(float, (n, n), elements=finite),
                            arrays(float, (n, n), elements=finite)).map(lambda p: p[0] + 1j * p[1]))


def cubic_roots(c2, c1, c0):
    """Real roots of x^3 + c2 x^2 + c1 x + c0 with three real roots (trigonometric form)."""
    p = c1 - c2 ** 2 / 3
    q = 2 * c2 ** 3 / 27 - c2 * c1 / 3 + c0
    if abs(p) < 1e-300:
        return np.full(3, -c2 / 3 + np.cbrt(-q))
    r = 2 * np.sqrt(-p / 3)
    arg = np.clip(3 * q / (p * r), -1, 1)
    phi = np.arccos(arg) / 3
    return np.sort(r * np.cos(phi - 2 * np.pi * np.arange(3) / 3) - c2 / 3)


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_matrix(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_hermitian_eigs_against_cubic_formula(rng):
    for _ in range(200):
        m = random_matrix(rng, 3)
        h = m + m.conj().T
        c2 = -np.trace(h).real
        c1 = 0.5 * (np.trace(h).real ** 2 - np.trace(h @ h).real)
        c0 = -np.linalg.det(h).real
        w, _ = hermitian_eigs(h)
        assert np.allclose(np.sort(w), cubic_roots(c2, c1, c0), atol=1e-9 * (1 + abs(w).max()))


def test_hermitian_eigs_vectors(rng):
    h = random_matrix(rng, 7)
    h = h + h.conj().T
    w, v = hermitian_eigs(h)
    assert np.allclose(h @ v, v * w, atol=1e-10)
    assert np.allclose(v.conj().T @ v, np.eye(7), atol=1e-12)


def test_hermitian_eigs_rejects_nonhermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigs(np.array([[1, 2], [0, 1]], dtype=complex))


def test_dimension_cap():
    with pytest.raises(DimensionTooLarge):
        singular_values(np.zeros((65, 65)))


@given(complex_matrices())
def test_singular_values_match_lapack(a):
    s = singular_values(a)
    ref = np.linalg.svd(a, compute_uv=False)
    assert np.allclose(s, ref, atol=1e-10 * (1 + ref[0]))
    assert np.all(np.diff(s) <= 0)


def test_singular_values_unitary_invariance(rng):
    for n in (2, 4, 8):
        a = random_matrix(rng, n)
        u, v = random_unitary(rng, n), random_unitary(rng, n)
        assert np.allclose(singular_values(u @ a @ v), singular_values(a), atol=1e-10)


def test_small_svd_vectors(rng):
    a = random_matrix(rng, 5)
    s, v = small_svd(a, want_vectors=True)
    assert np.allclose(v.conj().T @ v, np.eye(5), atol=1e-12)
    assert np.allclose(np.linalg.norm(a @ v, axis=0), s, atol=1e-12)
    assert np.allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-12)


def test_rank_deficient_input():
    a = np.full((3, 3), 2.0625j)
    assert np.allclose(singular_values(a), [6.1875, 0, 0], atol=1e-14)
    assert np.allclose(batched_singular_values(a[None]), [[6.1875, 0, 0]], atol=1e-14)
    assert np.allclose(small_svd(a), [6.1875, 0, 0], atol=1e-14)


def test_batched_matches_single(rng):
    stack = np.stack([random_matrix(rng, 4) for _ in range(30)])
    out = batched_singular_values(stack)
    assert out.shape == (30, 4)
    for m, s in zip(stack, out):
        assert np.allclose(s, np.linalg.svd(m, compute_uv=False), atol=1e-12)


def test_schur_round_trip(rng):
    for _ in range(500):
        n = int(rng.integers(1, 9))
        a = random_matrix(rng, n)
        f = schur_decompose(a)
        assert np.allclose(np.tril(f.s, -1), 0)
        assert np.linalg.norm(a - f.u @ f.s @ f.u.conj().T) <= 1e-10 * np.linalg.norm(a)
        assert np.allclose(f.u.conj().T @ f.u, np.eye(n), atol=1e-12)


def test_schur_of_triangular_keeps_diagonal():
    a = np.array([[3, 0, 0], [0, -1, 1], [0, 0, 1]], dtype=complex)
    f = schur_decompose(a)
    assert sorted(np.diag(f.s).real) == pytest.approx([-1, 1, 3], abs=1e-12)


@given(complex_matrices(5))
def test_hermitian_eigs_match_lapack(m):
    h = m + m.conj().T
    w, _ = hermitian_eigs(h)
    ref = np.linalg.eigvalsh(h)
    assert np.allclose(np.sort(w), ref, atol=1e-10 * (1 + abs(ref).max()))


@pytest.mark.parametrize("h", [np.zeros((3, 3)), np.ones((4, 4)), np.full((3, 3), 1e-300)])
def test_hermitian_eigs_degenerate(h):
    w, _ = hermitian_eigs(h.astype(complex))
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(h), atol=1e-12)
