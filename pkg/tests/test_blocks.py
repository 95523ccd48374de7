import numpy as np
import pytest
from hypothesis import given, strategies as st

from pseudospec import (DegenerateSwap, NotTriangular, block_classes, block_diagonalize,
                        singular_values, swap_adjacent, swap_kernel)
from fixtures import conic_double_point, crossing_lines, cube_roots, essential_family, \
    hyperbola_fault


def sparse_triangle(rng, n, p_zero=0.5):
    s = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    s[np.triu(rng.random((n, n)) < p_zero, 1)] = 0
    return s


def mapped(classes, perm):
    """Classes of positions, rewritten as sets of original indices."""
    return {frozenset(int(perm[p]) for p in c) for c in classes}


def test_hyperbola_fault_classes_and_blocks():
    assert block_classes(hyperbola_fault).classes == ((0,), (1, 2))
    dec = block_diagonalize(hyperbola_fault)
    assert np.array_equal(dec.accumulated_unitary, np.eye(3))
    assert dec.block_sizes == (1, 2)
    assert np.array_equal(dec.blocks[0], [[3]])
    assert np.array_equal(dec.blocks[1], [[-1, 1], [0, 1]])


def test_cube_roots_are_singletons():
    assert block_classes(cube_roots).classes == ((0,), (1,), (2,))


@pytest.mark.parametrize("k", range(5))
def test_essential_family_one_class(k):
    assert block_classes(essential_family(k)).classes == ((0, 1, 2),)


def test_crossing_lines_blocks():
    dec = block_diagonalize(crossing_lines)
    assert [sorted(np.diag(b), key=lambda z: (z.real, z.imag)) for b in dec.blocks] == \
        [[-1, 1], [-1j, 1j]]


def test_interleaved_classes_are_made_contiguous():
    s = np.array([[1, 0, 2, 0], [0, 2, 0, 1], [0, 0, 3, 0], [0, 0, 0, 4]], dtype=complex)
    dec = block_diagonalize(s)
    assert dec.classes == ((0, 2), (1, 3))
    assert list(dec.sigma) == [0, 2, 1, 3]
    u = dec.accumulated_unitary
    assert np.allclose(u.conj().T @ s @ u, dec.assembled(), atol=1e-14)
    assert dec.block_of(3) == 1


def test_graph_queries():
    g = block_classes(conic_double_point)
    assert g.equivalent(0, 2)
    assert list(g.labels()) == [0, 0, 0]


def test_not_triangular():
    with pytest.raises(NotTriangular):
        block_classes(np.array([[1, 0], [1, 1]], dtype=complex))


def test_degenerate_swap():
    with pytest.raises(DegenerateSwap):
        swap_adjacent(np.array([[1, 1], [0, 1]], dtype=complex), 0)
    # an uncoupled repeated eigenvalue swaps trivially
    out, v = swap_adjacent(np.eye(2, dtype=complex), 0)
    assert np.array_equal(out, np.eye(2))


@given(st.complex_numbers(max_magnitude=5, allow_nan=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_swap_kernel_exchanges_diagonal(a1, a2, t):
    if abs(a1 - a2) < 1e-6:
        return
    w = swap_kernel(a1, a2, t)
    assert np.allclose(w.conj().T @ w, np.eye(2), atol=1e-12)
    out = w.conj().T @ np.array([[a1, t], [0, a2]]) @ w
    scale = 1 + abs(a1) + abs(a2) + abs(t)
    assert abs(out[1, 0]) <= 1e-12 * scale
    assert abs(out[0, 0] - a2) <= 1e-12 * scale and abs(out[1, 1] - a1) <= 1e-12 * scale
    assert abs(abs(out[0, 1]) - abs(t)) <= 1e-12 * scale


def test_swap_adjacent_preserves_values_and_classes(rng):
    for _ in range(300):
        n = int(rng.integers(2, 7))
        s = sparse_triangle(rng, n)
        k = int(rng.integers(0, n - 1))
        out, v = swap_adjacent(s, k)
        assert np.allclose(v.conj().T @ s @ v, out, atol=1e-12)
        perm = np.arange(n)
        perm[[k, k + 1]] = perm[[k + 1, k]]
        assert mapped(block_classes(out).classes, perm) == mapped(block_classes(s).classes,
                                                                  np.arange(n))
        for lam in rng.normal(size=5) + 1j * rng.normal(size=5):
            e = np.eye(n)
            assert np.allclose(singular_values(lam * e - out), singular_values(lam * e - s),
                               atol=1e-10)


def test_block_singular_values_merge(rng):
    for _ in range(500):
        n = int(rng.integers(2, 8))
        s = sparse_triangle(rng, n, p_zero=rng.uniform(0.3, 0.9))
        dec = block_diagonalize(s)
        assert np.allclose(dec.accumulated_unitary.conj().T @ s @ dec.accumulated_unitary,
                           dec.assembled(), atol=1e-12)
        for lam in rng.normal(size=20) + 1j * rng.normal(size=20):
            merged = np.sort(np.concatenate(
                [singular_values(lam * np.eye(len(b)) - b) for b in dec.blocks]))[::-1]
            assert np.allclose(singular_values(lam * np.eye(n) - s), merged, atol=1e-9)


def test_swaps_reproduce_class_order(rng):
    for _ in range(200):
        n = int(rng.integers(2, 8))
        s = sparse_triangle(rng, n, p_zero=0.8)
        dec = block_diagonalize(s)
        order = list(range(n))
        for k in dec.swaps:
            order[k], order[k + 1] = order[k + 1], order[k]
        assert order == list(dec.sigma) == [i for c in dec.classes for i in c]
        assert np.allclose(np.diag(dec.assembled()), np.diag(s)[dec.sigma], atol=0)
