"""The singular-value field of ``P(lambda) = lambda I - A``.

Point evaluations (profiles, the determinant polynomial
``d(x, y, S) = det(S I - P* P)``, gradients of ``s_n^2``, fault tests) and a
vectorised :class:`SigmaField` used by the grid scanners and the tracer.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np

from ._validation import check_matrix, check_points
from .blocks import BlockDecomposition, block_diagonalize
from .exceptions import AtEigenvalue, AtFaultPoint, MultiplicityUnstable
from .linalg import batched_singular_values, hermitian_eigs, schur_decompose, small_svd

_CHUNK = 1 << 15


def default_fault_tol(s_n: float) -> float:
    return 1e-8 * (1.0 + s_n)


@dataclass(frozen=True)
class SingularValueProfile:
    """Singular values of ``lambda I - A`` at one point."""

    lam: complex
    values: np.ndarray
    gap: float
    per_block_minima: tuple = ()

    @property
    def s_min(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class SurfaceProfile:
    representatives: tuple
    multiplicities: tuple
    sample_count: int
    agreement: float = 1.0


class FaultIndicator(NamedTuple):
    is_fault: bool
    gap: float
    kind_hint: str  # "regular" | "essential" | "none"


def decompose(a, zero_tol: float | None = None) -> BlockDecomposition:
    """Schur form of ``a`` refined into its block-equivalence blocks."""
    return block_diagonalize(schur_decompose(a).s, zero_tol)


def _pmat(a, lam):
    n = a.shape[0]
    return lam * np.eye(n) - a


def sigma_profile(a, lam, blocks: BlockDecomposition | None = None) -> SingularValueProfile:
    a = check_matrix(a)
    lam = complex(lam)
    values = np.asarray(small_svd(_pmat(a, lam))) if a.shape[0] <= 8 else \
        batched_singular_values(_pmat(a, lam)[None])[0]
    gap = float(values[-2] - values[-1]) if len(values) > 1 else np.inf
    minima = ()
    if blocks is not None:
        minima = tuple(
            (l, float(small_svd(lam * np.eye(b.shape[0]) - b)[-1]))
            for l, b in enumerate(blocks.blocks)
        )
    return SingularValueProfile(lam=lam, values=values, gap=gap, per_block_minima=minima)


def char_det(a, x: float, y: float, s_val: float) -> float:
    """``det(S I - P(x+iy)* P(x+iy))`` -- real because the argument is Hermitian."""
    a = check_matrix(a)
    p = _pmat(a, complex(x, y))
    m = s_val * np.eye(a.shape[0]) - p.conj().T @ p
    return float(np.linalg.det(m).real)


def char_det_partials(a, x: float, y: float, s_val: float):
    """``(d, dd/dx, dd/dy, dd/dS)`` at one point.

    For ``n <= 8`` the partials come from Jacobi's formula
    ``dd = tr(adj(M) dM)`` with the adjugate accumulated from the
    eigen-decomposition of ``M = S I - P* P`` (well defined even when ``M`` is
    singular).  Larger matrices use Richardson-extrapolated central
    differences of :func:`char_det`.
    """
    a = check_matrix(a)
    n = a.shape[0]
    lam = complex(x, y)
    p = _pmat(a, lam)
    if n > 8:
        return _richardson_partials(a, x, y, s_val)
    m = s_val * np.eye(n) - p.conj().T @ p
    mu, v = hermitian_eigs(m)
    cof = np.array([np.prod(np.delete(mu, j)) for j in range(n)])
    adj = (v * cof) @ v.conj().T
    dmx = -(p + p.conj().T)
    dmy = -1j * (p.conj().T - p)
    d = float(np.prod(mu))
    dx = float(np.trace(adj @ dmx).real)
    dy = float(np.trace(adj @ dmy).real)
    ds = float(cof.sum())
    return d, dx, dy, ds


def _richardson_partials(a, x, y, s_val):
    scale = 1.0 + abs(complex(x, y)) + float(np.abs(a).max())

    def deriv(f, h):
        d1 = (f(h) - f(-h)) / (2 * h)
        d2 = (f(h / 2) - f(-h / 2)) / h
        return (4 * d2 - d1) / 3

    hx = 1e-4 * scale
    hs = 1e-4 * scale * scale
    d = char_det(a, x, y, s_val)
    dx = deriv(lambda e: char_det(a, x + e, y, s_val), hx)
    dy = deriv(lambda e: char_det(a, x, y + e, s_val), hx)
    ds = deriv(lambda e: char_det(a, x, y, s_val + e), hs)
    return d, dx, dy, ds


def grad_sn_sq(a, lam, *, fault_tol: float | None = None, eig_tol: float | None = None):
    """Gradient ``(d/dx, d/dy)`` of ``s_n(lambda)^2`` by implicit differentiation of ``d``.

    Raises
    ------
    AtFaultPoint
        ``s_{n-1} - s_n <= fault_tol`` (``dd/dS`` vanishes there).
    AtEigenvalue
        ``s_n <= eig_tol``.
    """
    a = check_matrix(a)
    lam = complex(lam)
    prof = sigma_profile(a, lam)
    s_n = prof.s_min
    if eig_tol is None:
        eig_tol = 1e-12 * float(np.linalg.norm(a))
    if fault_tol is None:
        fault_tol = default_fault_tol(s_n)
    if s_n <= eig_tol:
        raise AtEigenvalue(f"lambda={lam} is (numerically) an eigenvalue")
    if prof.gap <= fault_tol:
        raise AtFaultPoint(f"lambda={lam} is a fault point (gap {prof.gap:.3g})", gap=prof.gap)
    _, dx, dy, ds = char_det_partials(a, lam.real, lam.imag, s_n * s_n)
    return -dx / ds, -dy / ds


def fault_indicator(a, lam, fault_tol: float | None = None,
                    blocks: BlockDecomposition | None = None) -> FaultIndicator:
    """Is ``lam`` a fault point, and is the fault internal to one block?

    ``essential`` requires a block that attains ``s_n`` (within ``fault_tol``)
    to have its own two smallest singular values within ``fault_tol``.
    """
    a = check_matrix(a)
    lam = complex(lam)
    if blocks is None:
        blocks = decompose(a)
    prof = sigma_profile(a, lam, blocks)
    tol = default_fault_tol(prof.s_min) if fault_tol is None else fault_tol
    if not prof.gap <= tol:
        return FaultIndicator(False, prof.gap, "none")
    for l, b in enumerate(blocks.blocks):
        if b.shape[0] < 2:
            continue
        sv = small_svd(lam * np.eye(b.shape[0]) - b)
        if sv[-1] - prof.s_min <= tol and sv[-2] - sv[-1] <= tol:
            return FaultIndicator(True, prof.gap, "essential")
    return FaultIndicator(True, prof.gap, "regular")


def _spectral_box(a, pad_factor=1.0):
    ev = np.diag(schur_decompose(a).s)
    spread = max(np.ptp(ev.real), np.ptp(ev.imag), 1.0)
    pad = pad_factor * spread
    return ev.real.min() - pad, ev.imag.min() - pad, ev.real.max() + pad, ev.imag.max() + pad


def _cluster_pattern(sq, rel_tol):
    scale = max(float(sq[0]), 1.0)
    sizes = [1]
    starts = [0]
    for i in range(1, len(sq)):
        if sq[i - 1] - sq[i] <= rel_tol * scale:
            sizes[-1] += 1
        else:
            sizes.append(1)
            starts.append(i)
    return tuple(sizes), tuple(starts)


def surface_profile(a, sample_count: int = 200, seed: int = 0, *,
                    rel_tol: float = 1e-9, min_agreement: float = 0.9) -> SurfaceProfile:
    """Estimate the distinct surfaces ``s_j^2`` and their multiplicities.

    ``s_j^2`` at random points are grouped when consecutive values agree to
    ``rel_tol`` (relative to ``max(s_1^2, 1)``); the grouping must agree on at
    least ``min_agreement`` of the samples.
    """
    if sample_count < 20:
        raise ValueError("sample_count must be >= 20")
    a = check_matrix(a)
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = _spectral_box(a)
    pts = rng.uniform(x0, x1, sample_count) + 1j * rng.uniform(y0, y1, sample_count)
    sv = SigmaField.plain_values(a, pts)
    patterns = [_cluster_pattern(row * row, rel_tol) for row in sv]
    counts = Counter(tuple(sorted(p[0], reverse=True)) for p in patterns)
    modal, hits = counts.most_common(1)[0]
    agreement = hits / sample_count
    if agreement < min_agreement:
        raise MultiplicityUnstable(
            f"surface grouping agrees on only {agreement:.0%} of samples")
    for sizes, starts in patterns:
        if tuple(sorted(sizes, reverse=True)) == modal:
            return SurfaceProfile(representatives=starts, multiplicities=sizes,
                                  sample_count=sample_count, agreement=agreement)
    raise AssertionError("unreachable")


class FieldValues(NamedTuple):
    s_min: np.ndarray      # (N,)
    gap: np.ndarray        # (N,) s_{n-1} - s_n (inf for n == 1)
    block_min: np.ndarray  # (N, k)
    block_gap: np.ndarray  # (N, k) internal gap of each block (inf for 1x1)


@dataclass
class SigmaField:
    """Vectorised evaluation of the singular-value field through the block form.

    The singular values of ``lambda - A`` are the union of those of
    ``lambda - B_l``; evaluating per block gives ``s_n`` together with the
    per-block minima needed to tell regular from essential faults.
    """

    a: np.ndarray
    decomposition: BlockDecomposition = None
    zero_tol: float | None = None
    _blocks: tuple = dc_field(init=False, repr=False)

    def __post_init__(self):
        self.a = check_matrix(self.a)
        if self.decomposition is None:
            self.decomposition = decompose(self.a, self.zero_tol)
        self._blocks = tuple(np.asarray(b) for b in self.decomposition.blocks)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def blocks(self) -> tuple:
        return self._blocks

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([np.diag(b) for b in self._blocks])

    @staticmethod
    def plain_values(a, z) -> np.ndarray:
        """All singular values of ``z_i - a`` for each point, shape ``(N, n)``."""
        a = np.asarray(a, dtype=np.complex128)
        z = check_points(z)
        n = a.shape[0]
        out = np.empty((z.size, n))
        eye = np.eye(n)
        for start in range(0, z.size, _CHUNK):
            zz = z[start:start + _CHUNK]
            stack = zz[:, None, None] * eye - a
            out[start:start + zz.size] = batched_singular_values(stack)
        return out

    def evaluate(self, z) -> FieldValues:
        z = check_points(z)
        k = len(self._blocks)
        bmin = np.empty((z.size, k))
        bgap = np.full((z.size, k), np.inf)
        second = np.full(z.size, np.inf)
        for l, b in enumerate(self._blocks):
            sv = self.plain_values(b, z)
            bmin[:, l] = sv[:, -1]
            if sv.shape[1] > 1:
                bgap[:, l] = sv[:, -2] - sv[:, -1]
        order = np.argsort(bmin, axis=1, kind="stable")
        rows = np.arange(z.size)
        best = order[:, 0]
        s_min = bmin[rows, best]
        # second smallest overall: own block's s_{m-1} or the next block minimum
        own_second = s_min + bgap[rows, best]
        if k > 1:
            second = np.minimum(own_second, bmin[rows, order[:, 1]])
        else:
            second = own_second
        return FieldValues(s_min, second - s_min, bmin, bgap)

    def grid(self, xs, ys) -> FieldValues:
        """Evaluate on the tensor grid; arrays come back shaped ``(len(ys), len(xs))``."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        zz = (xs[None, :] + 1j * ys[:, None]).ravel()
        fv = self.evaluate(zz)
        shape = (ys.size, xs.size)
        k = len(self._blocks)
        return FieldValues(fv.s_min.reshape(shape), fv.gap.reshape(shape),
                           fv.block_min.reshape(shape + (k,)), fv.block_gap.reshape(shape + (k,)))

    def s_min(self, z) -> float:
        z = complex(z)
        return min(float(small_svd(z * np.eye(b.shape[0]) - b)[-1]) for b in self._blocks)

    def block_values(self, z) -> list:
        z = complex(z)
        return [small_svd(z * np.eye(b.shape[0]) - b) for b in self._blocks]

    def point(self, z):
        """``(s_min, gap, block_minima, block_gaps)`` at one point."""
        vals = self.block_values(z)
        mins = np.array([v[-1] for v in vals])
        gaps = np.array([v[-2] - v[-1] if len(v) > 1 else np.inf for v in vals])
        l = int(np.argmin(mins))
        s = float(mins[l])
        second = s + gaps[l]
        if len(vals) > 1:
            second = min(second, float(np.partition(mins, 1)[1]))
        return s, float(second - s), mins, gaps

    def block_min_grad(self, l: int, z):
        """Value and gradient (as ``gx + i gy``) of ``s_min(z - B_l)``."""
        b = self._blocks[l]
        z = complex(z)
        p = z * np.eye(b.shape[0]) - b
        sv, v = small_svd(p, want_vectors=True)
        s = float(sv[-1])
        vn = v[:, -1]
        w = vn.conj() @ p @ vn
        if s == 0.0:
            return 0.0, 0j
        return s, complex(w) / s
