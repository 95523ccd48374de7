"""Block structure of a Schur triangle.

Two diagonal entries ``S[i, i]`` and ``S[j, j]`` are *directly related* when
``i == j`` or the off-diagonal entry linking them is nonzero; *block
equivalence* is the transitive closure, i.e. connected components of the
coupling graph.  Permuting the diagonal so each class is contiguous (by
unitary adjacent swaps) makes the triangle block diagonal.

Indices are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import check_matrix
from .exceptions import DegenerateSwap, NotTriangular


def default_zero_tol(s) -> float:
    """``1e-12`` times the largest entry modulus of ``s``."""
    return 1e-12 * float(np.abs(np.asarray(s)).max(initial=0.0))


@dataclass(frozen=True)
class AdjacencyGraph:
    """Coupling graph of a triangle: ``d[i, j] = 1`` iff ``i == j`` or linked."""

    d: np.ndarray
    classes: tuple
    zero_tol: float

    def labels(self) -> np.ndarray:
        """Class index of every diagonal position."""
        out = np.empty(self.d.shape[0], dtype=int)
        for c, members in enumerate(self.classes):
            out[list(members)] = c
        return out

    def equivalent(self, i: int, j: int) -> bool:
        lab = self.labels()
        return bool(lab[i] == lab[j])


@dataclass(frozen=True)
class BlockDecomposition:
    """``U* S U = diag(B_1, ..., B_k)``.

    ``sigma[p]`` is the original diagonal index now sitting at position
    ``p``; ``swaps`` lists the adjacent transpositions (by left position)
    in the order they were applied.
    """

    sigma: np.ndarray
    accumulated_unitary: np.ndarray
    blocks: tuple
    block_sizes: tuple
    residual: float
    classes: tuple
    swaps: tuple = ()

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_sizes)])

    def block_of(self, original_index: int) -> int:
        """Block number holding the given original diagonal index."""
        for l, members in enumerate(self.classes):
            if original_index in members:
                return l
        raise IndexError(original_index)

    def assembled(self) -> np.ndarray:
        n = int(sum(self.block_sizes))
        out = np.zeros((n, n), dtype=np.complex128)
        for off, b in zip(self.offsets[:-1], self.blocks):
            m = b.shape[0]
            out[off:off + m, off:off + m] = b
        return out


def _check_triangular(s, zero_tol):
    s = check_matrix(s, name="s")
    lower = np.abs(np.tril(s, -1))
    if lower.max(initial=0.0) > zero_tol:
        raise NotTriangular("matrix is not upper triangular within zero_tol")
    return np.triu(s)


def block_classes(s, zero_tol: float | None = None) -> AdjacencyGraph:
    """Partition the diagonal of an upper triangle into block-equivalence classes.

    Classes are listed by smallest member; members ascend within a class.
    """
    s = np.asarray(s, dtype=np.complex128)
    if zero_tol is None:
        zero_tol = default_zero_tol(s)
    s = _check_triangular(s, zero_tol)
    n = s.shape[0]
    upper = np.triu(np.abs(s) > zero_tol, 1)
    d = (upper | upper.T | np.eye(n, dtype=bool)).astype(np.int8)
    _, labels = connected_components(csr_matrix(d), directed=False)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    classes = tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0]))
    d.setflags(write=False)
    return AdjacencyGraph(d=d, classes=classes, zero_tol=float(zero_tol))


def swap_kernel(alpha1: complex, alpha2: complex, t: complex) -> np.ndarray:
    """2x2 unitary ``W`` with ``W* [[a1, t], [0, a2]] W = [[a2, t'], [0, a1]]``.

    With ``a = |t|`` and ``a2 - a1 = b e^{i theta}`` this is the real rotation
    ``[[a, -b], [b, a]] / sqrt(a^2 + b^2)`` when ``arg t == theta``; for other
    phases of ``t`` the ``a`` entries pick up ``e^{+-i(arg t - theta)}`` so the
    first column stays the eigenvector for ``a2``.  ``|t'| == |t|``.
    """
    diff = alpha2 - alpha1
    b = abs(diff)
    a = abs(t)
    if b == 0.0:
        if a == 0.0:
            return np.eye(2, dtype=np.complex128)
        raise DegenerateSwap("equal diagonal entries with nonzero coupling cannot be swapped")
    if a == 0.0:
        return np.array([[0.0, -1.0], [1.0, 0.0]], dtype=np.complex128)
    psi = np.angle(t) - np.angle(diff)
    ph = np.exp(1j * psi)
    nrm = np.hypot(a, b)
    return np.array([[a * ph, -b], [b, a * ph.conjugate()]], dtype=np.complex128) / nrm


def swap_adjacent(s, k: int, zero_tol: float | None = None):
    """Unitary swap of diagonal positions ``k`` and ``k + 1``.

    Returns ``(s_new, v)`` with ``s_new = v* s v`` upper triangular and the two
    diagonal entries exchanged.  When the pair is uncoupled, ``v`` is an exact
    permutation so existing zeros stay exact.
    """
    s = np.asarray(s, dtype=np.complex128)
    if zero_tol is None:
        zero_tol = default_zero_tol(s)
    s = _check_triangular(s, zero_tol).copy()
    n = s.shape[0]
    if not 0 <= k < n - 1:
        raise IndexError(f"k must be in [0, {n - 2}], got {k}")
    t = s[k, k + 1]
    if abs(t) <= zero_tol:
        t = 0.0
        s[k, k + 1] = 0.0
    w = swap_kernel(s[k, k], s[k + 1, k + 1], t)
    v = np.eye(n, dtype=np.complex128)
    v[k:k + 2, k:k + 2] = w
    # for t == 0 the kernel has entries 0 and +-1 only, so this is exact
    out = s.copy()
    out[:, k:k + 2] = out[:, k:k + 2] @ w
    out[k:k + 2, :] = w.conj().T @ out[k:k + 2, :]
    out[k + 1, k] = 0.0
    out = np.triu(out)
    out.setflags(write=False)
    v.setflags(write=False)
    return out, v


def block_diagonalize(s, zero_tol: float | None = None) -> BlockDecomposition:
    """Reorder the diagonal so each block-equivalence class is contiguous.

    Classes appear in order of their smallest original index and keep their
    relative order inside; the permutation is realised by bubble passes of
    :func:`swap_adjacent`.  Only uncoupled neighbours are ever exchanged, so
    every swap is an exact permutation.
    """
    s = np.asarray(s, dtype=np.complex128)
    if zero_tol is None:
        zero_tol = default_zero_tol(s)
    graph = block_classes(s, zero_tol)
    s0 = np.triu(np.asarray(s, dtype=np.complex128))
    s0[np.abs(s0) <= zero_tol] = 0.0
    s0[np.diag_indices_from(s0)] = np.diag(np.asarray(s, dtype=np.complex128))
    n = s0.shape[0]
    target = [i for cls in graph.classes for i in cls]
    rank = np.empty(n, dtype=int)
    rank[target] = np.arange(n)

    order = list(range(n))
    cur = s0
    u = np.eye(n, dtype=np.complex128)
    swaps = []
    changed = True
    while changed:
        changed = False
        for k in range(n - 1):
            if rank[order[k]] > rank[order[k + 1]]:
                cur, v = swap_adjacent(cur, k, zero_tol)
                u = u @ v
                order[k], order[k + 1] = order[k + 1], order[k]
                swaps.append(k)
                changed = True

    sizes = tuple(len(c) for c in graph.classes)
    blocks = []
    off = 0
    for m in sizes:
        b = np.array(cur[off:off + m, off:off + m])
        b.setflags(write=False)
        blocks.append(b)
        off += m
    assembled = np.zeros_like(cur)
    off = 0
    for b in blocks:
        m = b.shape[0]
        assembled[off:off + m, off:off + m] = b
        off += m
    snorm = np.linalg.norm(s0)
    resid = float(np.linalg.norm(u.conj().T @ s0 @ u - assembled) / snorm) if snorm > 0 else 0.0
    u.setflags(write=False)
    sigma = np.array(order)
    sigma.setflags(write=False)
    return BlockDecomposition(
        sigma=sigma,
        accumulated_unitary=u,
        blocks=tuple(blocks),
        block_sizes=sizes,
        residual=resid,
        classes=graph.classes,
        swaps=tuple(swaps),
    )
