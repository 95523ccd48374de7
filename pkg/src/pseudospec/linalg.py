"""Dense complex factorizations used by every other module.

* :func:`hermitian_eigs` -- cyclic two-sided Jacobi for Hermitian matrices.
* :func:`singular_values` -- one-sided (Hestenes) Jacobi, i.e. the cyclic
  Jacobi method applied implicitly to ``m* m`` without forming it, which keeps
  small singular values accurate to high relative precision.
* :func:`schur_decompose` -- Householder reduction to Hessenberg form followed
  by Wilkinson-shifted complex QR with deflation.

All functions are pure; inputs are copied and never modified.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix
from .exceptions import NoConvergence, NotHermitian

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SchurForm:
    """``A = u @ s @ u.conj().T`` with ``u`` unitary and ``s`` upper triangular."""

    u: np.ndarray
    s: np.ndarray
    residual: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.s).copy()


def _jacobi_tangent(theta):
    """Smaller root of ``t**2 + 2*theta*t - 1 = 0`` (works elementwise)."""
    theta = np.asarray(theta, dtype=float)
    sign = np.where(theta >= 0.0, 1.0, -1.0)
    big = np.abs(theta) > 1e150
    with np.errstate(over="ignore", invalid="ignore"):
        t = sign / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
    return np.where(big, 0.5 / np.where(big, theta, 1.0), t)


def hermitian_eigs(h, *, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    h : array_like, shape (n, n)
        Hermitian matrix; symmetry is checked to ``1e-12 * ||h||_F``.
    max_sweeps : int
        Iteration cap (full cyclic sweeps).

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in ascending order.
    v : ndarray, shape (n, n)
        Unitary matrix whose columns are the matching eigenvectors.

    Raises
    ------
    NotHermitian
        If ``h`` is not Hermitian within tolerance.
    NoConvergence
        If the off-diagonal mass does not vanish within ``max_sweeps``.
    """
    h = check_matrix(h, name="h")
    n = h.shape[0]
    scale = np.linalg.norm(h)
    if np.linalg.norm(h - h.conj().T) > 1e-12 * max(scale, np.finfo(float).tiny):
        raise NotHermitian("matrix is not Hermitian")
    a = 0.5 * (h + h.conj().T)
    v = np.eye(n, dtype=np.complex128)
    if scale == 0.0 or n == 1:
        return a.diagonal().real.copy(), v

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= EPS * scale:
            break
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                if g <= 0.5 * EPS * np.sqrt(abs(app * aqq)) or g < 1e-300:
                    a[p, q] = a[q, p] = 0.0
                    continue
                rotated = True
                ph = apq / g
                t = float(_jacobi_tangent((aqq - app) / (2.0 * g)))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(ph)) @ [[c, s], [-s, c]] restricted to (p, q)
                g2 = np.array([[c, s], [-s * ph.conjugate(), c * ph.conjugate()]])
                cols = a[:, [p, q]] @ g2
                a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
                rows = g2.conj().T @ a[[p, q], :]
                a[p, :], a[q, :] = rows[0], rows[1]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * g
                a[q, q] = aqq + t * g
                vc = v[:, [p, q]] @ g2
                v[:, p], v[:, q] = vc[:, 0], vc[:, 1]
        if not rotated:
            break
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = a.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def batched_singular_values(m, *, max_sweeps: int = 60) -> np.ndarray:
    """Singular values of a stack of square matrices, shape ``(N, n, n)``.

    Returns an ``(N, n)`` array, each row sorted descending.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 3 or m.shape[1] != m.shape[2]:
        raise ValueError("expected a stack of square matrices")
    N, n, _ = m.shape
    if n == 1:
        return np.abs(m[:, 0, 0]).reshape(N, 1)
    # w[:, j, :] is column j
    w = np.ascontiguousarray(np.swapaxes(m, 1, 2))
    tol = EPS * n
    # columns below eps * ||m||_F are numerically zero and never get more orthogonal
    floor = (EPS * np.sqrt((m.real ** 2 + m.imag ** 2).sum((1, 2)))) ** 2
    for _ in range(max_sweeps):
        any_rot = False
        for j in range(n - 1):
            for k in range(j + 1, n):
                wj = w[:, j, :]
                wk = w[:, k, :]
                alpha = (wj.real ** 2 + wj.imag ** 2).sum(-1)
                beta = (wk.real ** 2 + wk.imag ** 2).sum(-1)
                gamma = (wj.conj() * wk).sum(-1)
                g = np.abs(gamma)
                need = (g > tol * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > floor)
                if not need.any():
                    continue
                any_rot = True
                idx = np.nonzero(need)[0]
                gi = g[idx]
                ph = gamma[idx] / gi
                t = _jacobi_tangent((beta[idx] - alpha[idx]) / (2.0 * gi))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = (t * c)[:, None]
                c = c[:, None]
                a_j = wj[idx]
                a_k = wk[idx] * ph.conj()[:, None]
                w[idx, j, :] = c * a_j - s * a_k
                w[idx, k, :] = s * a_j + c * a_k
        if not any_rot:
            break
    else:
        raise NoConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    sv = np.sqrt((w.real ** 2 + w.imag ** 2).sum(-1))
    return -np.sort(-sv, axis=1)


def small_svd(m, *, want_vectors: bool = False, max_sweeps: int = 60):
    """One-sided Jacobi on plain Python complex scalars, for one small matrix.

    Same rotations as :func:`batched_singular_values` but without numpy
    dispatch overhead, which dominates for ``n <= 8``.  Returns the
    descending singular values and, if requested, the matching right
    singular vectors as columns of an ``(n, n)`` array.
    """
    n = len(m)
    cols = [[complex(m[i][j]) for i in range(n)] for j in range(n)]
    vs = [[1.0 + 0j if i == j else 0j for i in range(n)] for j in range(n)]
    tol = EPS * n
    floor = EPS * EPS * sum(z.real * z.real + z.imag * z.imag for col in cols for z in col)
    for _ in range(max_sweeps):
        rotated = False
        for j in range(n - 1):
            for k in range(j + 1, n):
                cj, ck = cols[j], cols[k]
                alpha = sum(z.real * z.real + z.imag * z.imag for z in cj)
                beta = sum(z.real * z.real + z.imag * z.imag for z in ck)
                gamma = sum(x.conjugate() * y for x, y in zip(cj, ck))
                g = abs(gamma)
                if not g > tol * (alpha * beta) ** 0.5 or min(alpha, beta) <= floor:
                    continue
                rotated = True
                phc = (gamma / g).conjugate()
                theta = (beta - alpha) / (2.0 * g)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + (1.0 + theta * theta) ** 0.5)
                c = 1.0 / (1.0 + t * t) ** 0.5
                s = t * c
                ak = [z * phc for z in ck]
                cols[j] = [c * x - s * y for x, y in zip(cj, ak)]
                cols[k] = [s * x + c * y for x, y in zip(cj, ak)]
                if want_vectors:
                    vj, vk = vs[j], [z * phc for z in vs[k]]
                    vs[j] = [c * x - s * y for x, y in zip(vj, vk)]
                    vs[k] = [s * x + c * y for x, y in zip(vj, vk)]
        if not rotated:
            break
    else:
        raise NoConvergence(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    norms = [sum(z.real * z.real + z.imag * z.imag for z in col) ** 0.5 for col in cols]
    order = sorted(range(n), key=lambda i: -norms[i])
    sv = np.array([norms[i] for i in order])
    if not want_vectors:
        return sv
    v = np.array([vs[i] for i in order], dtype=np.complex128).T
    return sv, v


def singular_values(m) -> np.ndarray:
    """Singular values ``s_1 >= ... >= s_n >= 0`` of a square complex matrix."""
    m = check_matrix(m, name="m")
    if m.shape[0] <= 8:
        return small_svd(m)
    return batched_singular_values(m[None])[0]



def _householder_hessenberg(a):
    n = a.shape[0]
    h = a.copy()
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        if np.all(x[1:] == 0):
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # P = I - 2 v v*, applied on both sides
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _givens(x, y):
    """Unitary ``[[c, s], [-conj(s), c]]`` (c real) mapping ``(x, y)`` to ``(r, 0)``."""
    if y == 0:
        return 1.0, 0.0 + 0.0j
    if x == 0:
        return 0.0, np.conj(y) / abs(y)
    rho = np.hypot(abs(x), abs(y))
    c = abs(x) / rho
    s = (x / abs(x)) * np.conj(y) / rho
    return c, s


def _wilkinson_shift(a, b, c, d):
    """Eigenvalue of ``[[a, b], [c, d]]`` closer to ``d``; ties go to larger real part."""
    tr_half = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    m1, m2 = tr_half + disc, tr_half - disc
    d1, d2 = abs(m1 - d), abs(m2 - d)
    if d1 < d2 or (d1 == d2 and (m1.real, m1.imag) >= (m2.real, m2.imag)):
        return m1
    return m2


def schur_decompose(a, *, max_iter: int | None = None) -> SchurForm:
    """Complex Schur form ``A = U S U*``.

    Hessenberg reduction by Householder reflections, then implicit
    single-shift QR (Wilkinson shift, exceptional shift after 10 stalled
    steps). The iteration cap is ``100 * n`` QR steps by default.
    Strictly-lower entries of ``S`` are set to exact zeros after checking
    they are below ``1e-12 * ||S||``.
    """
    a = check_matrix(a)
    n = a.shape[0]
    if max_iter is None:
        max_iter = 100 * n
    h, q = _householder_hessenberg(np.array(a))
    hi = n - 1
    total = 0
    stalled = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= EPS * (abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])) or sub < 1e-300:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stalled = 0
            continue
        if total >= max_iter:
            raise NoConvergence(f"QR iteration did not converge in {max_iter} steps")
        total += 1
        stalled += 1
        if stalled % 11 == 10:
            mu = h[hi, hi] + abs(h[hi, hi - 1])
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        for k in range(lo, hi):
            if k == lo:
                x, y = h[lo, lo] - mu, h[lo + 1, lo]
            else:
                x, y = h[k, k - 1], h[k + 1, k - 1]
            c, s = _givens(x, y)
            g = np.array([[c, s], [-np.conj(s), c]])
            j0 = lo if k == lo else k - 1
            h[k:k + 2, j0:] = g @ h[k:k + 2, j0:]
            if k > lo:
                h[k + 1, k - 1] = 0.0
            r1 = min(k + 2, hi)
            h[:r1 + 1, k:k + 2] = h[:r1 + 1, k:k + 2] @ g.conj().T
            q[:, k:k + 2] = q[:, k:k + 2] @ g.conj().T

    s_norm = np.linalg.norm(h)
    lower = np.tril(h, -1)
    if np.abs(lower).max(initial=0.0) > 1e-12 * max(s_norm, 1.0):
        raise NoConvergence("Schur form has non-negligible sub-triangular entries")
    s = np.triu(h)
    a_norm = np.linalg.norm(a)
    residual = float(np.linalg.norm(a - q @ s @ q.conj().T) / a_norm) if a_norm > 0 else 0.0
    q.setflags(write=False)
    s.setflags(write=False)
    return SchurForm(u=q, s=s, residual=residual)
