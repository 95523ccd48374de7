"""Fault sets: where the smallest singular value of ``lambda - A`` is multiple.

Grid scanning for general matrices, the closed form for fully coupled 3x3
triangles, Voronoi diagrams for normal matrices, the bidiagonal predicate,
and a flood-fill check that eigenvalues sharing a fault-free component are
block equivalent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import Box, check_grid, check_matrix, check_region
from .blocks import block_classes, default_zero_tol
from .exceptions import EigenvalueOnFaultCell, NotFullyCoupled, NotNormal, RootRejected
from .field import SigmaField, default_fault_tol

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


# analytic descriptors ---------------------------------------------------------

@dataclass(frozen=True)
class Empty:
    kind: ClassVar[str] = "empty"


@dataclass(frozen=True)
class Line:
    """The line ``point + tau * direction`` (``|direction| == 1``)."""

    point: complex
    direction: complex
    kind: ClassVar[str] = "line"


@dataclass(frozen=True)
class Bisector:
    alpha: complex
    beta: complex
    kind: ClassVar[str] = "bisector"


@dataclass(frozen=True)
class SinglePoint:
    lam: complex
    kind: ClassVar[str] = "single_point"


@dataclass(frozen=True)
class Voronoi:
    """Sites plus clipped edges ``(p, q, i, j)`` on the bisector of sites ``i < j``."""

    sites: tuple
    edges: tuple = ()
    kind: ClassVar[str] = "voronoi"


@dataclass(frozen=True)
class FaultSample:
    lam: complex
    gap: float
    kind: str  # "regular" | "essential"


@dataclass(frozen=True)
class FaultSet:
    analytic: object = None
    samples: tuple = ()
    region: Box | None = None
    fault_tol: float | None = None

    @property
    def points(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples], dtype=np.complex128)

    def of_kind(self, kind: str) -> tuple:
        return tuple(s for s in self.samples if s.kind == kind)


# scanning -----------------------------------------------------------------------

def _golden(f, a, b, iters=64):
    lo = np.zeros(a.shape)
    hi = np.ones(a.shape)
    d = b - a
    for _ in range(iters):
        m1 = hi - _GOLDEN * (hi - lo)
        m2 = lo + _GOLDEN * (hi - lo)
        left = f(a + m1 * d) <= f(a + m2 * d)
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
    return a + 0.5 * (lo + hi) * d


def _kinds(fv, tol):
    """Batched :func:`~pseudospec.field.fault_indicator` kind for fault points."""
    attains = fv.block_min - fv.s_min[:, None] <= tol[:, None]
    internal = fv.block_gap <= tol[:, None]
    return np.where(np.any(attains & internal, axis=1), "essential", "regular")


def _line_minima(gap):
    """Interior local minima along the last axis that look like V-shaped dips."""
    c = gap[..., 1:-1]
    l = gap[..., :-2]
    r = gap[..., 2:]
    dip = (c < l) & (c <= r)
    rise = np.maximum(l - c, r - c)
    return dip & (c <= 2.0 * rise)


def fault_scan(a, region, grid=(256, 256), *, fault_tol: float | None = None,
               field: SigmaField | None = None) -> FaultSet:
    """Locate fault points on a grid.

    Every local minimum of the gap ``s_{n-1} - s_n`` along a grid row or
    column is refined by golden-section search on the bracketing pair of
    grid edges, then kept when the refined gap is at most ``fault_tol``
    (default ``1e-8 (1 + s_n)`` per point).  Samples are ordered by
    ``(Im, Re)`` and tagged ``regular``/``essential`` from the block
    decomposition.
    """
    box = check_region(region)
    nx, ny = check_grid(grid)
    if field is None:
        field = SigmaField(check_matrix(a))
    xs = np.linspace(box.x0, box.x1, nx)
    ys = np.linspace(box.y0, box.y1, ny)
    gap = field.grid(xs, ys).gap

    starts, ends = [], []
    jj, ii = np.nonzero(_line_minima(gap))            # along rows (x varies)
    ii = ii + 1
    starts.append(xs[ii - 1] + 1j * ys[jj])
    ends.append(xs[ii + 1] + 1j * ys[jj])
    ii, jj = np.nonzero(_line_minima(gap.T))          # along columns (y varies)
    jj = jj + 1
    starts.append(xs[ii] + 1j * ys[jj - 1])
    ends.append(xs[ii] + 1j * ys[jj + 1])
    a0 = np.concatenate(starts)
    b0 = np.concatenate(ends)
    if a0.size == 0:
        return FaultSet(samples=(), region=box, fault_tol=fault_tol)

    z = _golden(lambda w: field.evaluate(w).gap, a0, b0)
    fv = field.evaluate(z)
    tol = default_fault_tol(fv.s_min) if fault_tol is None else np.full(z.size, float(fault_tol))
    keep = fv.gap <= tol
    kinds = _kinds(fv, tol)
    order = np.lexsort((z.real, z.imag))
    samples = []
    seen = set()
    for k in order:
        if not keep[k]:
            continue
        key = (round(z[k].real, 9), round(z[k].imag, 9))
        if key in seen:
            continue
        seen.add(key)
        samples.append(FaultSample(complex(z[k]), float(fv.gap[k]), str(kinds[k])))
    return FaultSet(samples=tuple(samples), region=box, fault_tol=fault_tol)


# closed form for 3x3 ------------------------------------------------------------

@dataclass(frozen=True)
class EssentialFaultResult:
    """``result`` is :class:`Empty` or :class:`SinglePoint`; ``certificate`` the line."""

    result: object
    certificate: Line | None = None
    diagnostics: dict = field(default_factory=dict)


def interlacing_q(b, lam) -> complex:
    """``q(lambda)``, whose zeros are where ``B_1^* u`` is orthogonal to the
    minimal eigenvector of ``B_1^* B_1`` (``B_1`` the leading 2x2 of ``b - lambda``).
    """
    b = np.asarray(b, dtype=np.complex128)
    lam = complex(lam)
    a1 = b[0, 0] - lam
    a2 = b[1, 1] - lam
    r, s, t = b[0, 1], b[0, 2], b[1, 2]
    aa, bb, rr = abs(a1) ** 2, abs(a2) ** 2, abs(r) ** 2
    root = np.sqrt(max((aa + bb + rr) ** 2 - 4 * aa * bb, 0.0))
    return complex(np.conj(s) * (bb - aa - rr + root) - 2 * np.conj(r) * np.conj(t) * a2)


def fault_line(b) -> Line:
    """The line through ``b[1, 1]`` at angle ``arg(r conj(s) t)`` holding any essential fault."""
    b = np.asarray(b, dtype=np.complex128)
    r, s, t = b[0, 1], b[0, 2], b[1, 2]
    w = r * np.conj(s) * t
    return Line(point=complex(b[1, 1]), direction=complex(w / abs(w)))


def _bidiagonal_permutation(r0, s0, t0):
    """Ordering under which the shifted matrix has an irreducible tridiagonal Gram matrix."""
    if s0:
        return (0, 1, 2), "X*X"
    if r0:
        return (0, 2, 1), "X*X"
    return (1, 0, 2), "XX*"


def essential_fault_small(b, *, fault_tol: float | None = None,
                          zero_tol: float | None = None, strict: bool = False
                          ) -> EssentialFaultResult:
    """Essential fault point of a fully coupled upper triangle with ``n <= 3``.

    For ``n = 3`` and ``rst != 0`` every essential fault lies on
    ``alpha_2 + tau e^{i arg(r conj(s) t)}``.  On that line ``q / conj(s)``
    is real, ``2 m tau + |b|^2 - |a|^2 - |r|^2 + sqrt(D)`` with ``m = |rt|/|s|``,
    vanishing at ``tau = 0`` (``lambda = alpha_2``, never a fault) and at most
    at one more value, found in closed form.  That candidate is accepted only
    when the full 3x3 gap is within ``fault_tol``; otherwise the result is
    empty (or :class:`RootRejected` is raised when ``strict``).
    """
    b = check_matrix(b, name="b")
    n = b.shape[0]
    if n > 3:
        raise ValueError("essential_fault_small handles n <= 3; scan larger blocks")
    if zero_tol is None:
        zero_tol = default_zero_tol(b)
    if len(block_classes(b, zero_tol).classes) != 1:
        raise NotFullyCoupled("b has more than one block-equivalence class; decompose first")
    if n < 3:
        return EssentialFaultResult(Empty(), None, {"reason": "n < 3"})

    r, s, t = b[0, 1], b[0, 2], b[1, 2]
    nz = [abs(v) > zero_tol for v in (r, s, t)]
    if not all(nz):
        perm, gram = _bidiagonal_permutation(*(not z for z in nz))
        return EssentialFaultResult(Empty(), None, {
            "reason": "rst = 0", "permutation": perm, "gram": gram})

    line = fault_line(b)
    d12 = b[0, 0] - b[1, 1]
    m = abs(r * t) / abs(s)
    p2 = abs(d12) ** 2
    rr = abs(r) ** 2
    kappa = float((np.conj(d12) * line.direction).real)
    denom = 2 * kappa * m + m * m - rr
    diag = {"m": m, "kappa": kappa, "denominator": denom}
    if denom == 0.0:
        diag["reason"] = "no nontrivial root"
        return EssentialFaultResult(Empty(), line, diag)
    tau = m * (p2 + rr) / denom
    lam = line.point + tau * line.direction
    sv = np.linalg.svd(lam * np.eye(3) - b, compute_uv=False)
    gap = float(sv[-2] - sv[-1])
    tol = default_fault_tol(float(sv[-1])) if fault_tol is None else fault_tol
    diag.update(tau=float(tau), candidate=complex(lam), gap=gap,
                q=abs(interlacing_q(b, lam)))
    # the closed form solves a squared equation, so the full gap test decides
    if gap <= tol:
        return EssentialFaultResult(SinglePoint(complex(lam)), line, diag)
    diag["reason"] = "candidate fails the full gap test"
    if strict:
        raise RootRejected(f"candidate {lam} has gap {gap:.3g} > {tol:.3g}")
    return EssentialFaultResult(Empty(), line, diag)


# normal matrices ------------------------------------------------------------------

def _clip(poly, nrm, c):
    """Sutherland-Hodgman clip of ``poly`` to ``Re(conj(nrm) z) <= c``."""
    out = []
    k = len(poly)
    for idx in range(k):
        p, q = poly[idx], poly[(idx + 1) % k]
        fp = (np.conj(nrm) * p).real - c
        fq = (np.conj(nrm) * q).real - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            out.append(p + (q - p) * fp / (fp - fq))
    return out


def voronoi_cells(sites, box: Box) -> list:
    """Cell polygon (counter-clockwise vertex list) of each site, clipped to ``box``."""
    corners = [complex(box.x0, box.y0), complex(box.x1, box.y0),
               complex(box.x1, box.y1), complex(box.x0, box.y1)]
    cells = []
    for i, si in enumerate(sites):
        poly = list(corners)
        for j, sj in enumerate(sites):
            if i == j or not poly:
                continue
            # |z - si| <= |z - sj|  <=>  Re(conj(sj - si) z) <= (|sj|^2 - |si|^2) / 2
            poly = _clip(poly, sj - si, (abs(sj) ** 2 - abs(si) ** 2) / 2)
        cells.append(poly)
    return cells


def voronoi_faults(a, region, *, fault_tol: float | None = None,
                   normal_tol: float = 1e-10) -> FaultSet:
    """Fault set of a normal matrix: the Voronoi diagram of its distinct eigenvalues.

    Edges come from clipping the region by pairwise bisector half-planes.
    Each edge midpoint is added as a sample with its measured gap.
    """
    a = check_matrix(a)
    box = check_region(region)
    nrm = float(np.linalg.norm(a))
    if np.linalg.norm(a @ a.conj().T - a.conj().T @ a) > normal_tol * max(nrm * nrm, 1e-300):
        raise NotNormal("a is not normal within tolerance")
    ev = np.linalg.eigvals(a)
    scale = max(float(np.abs(ev).max()), 1.0)
    sites: list[complex] = []
    for e in sorted(ev, key=lambda z: (round(z.real, 12), round(z.imag, 12))):
        if all(abs(e - s) > 1e-12 * scale for s in sites):
            sites.append(complex(e))
    cells = voronoi_cells(sites, box)
    edges = []
    eps = 1e-9 * box.diameter
    for i, poly in enumerate(cells):
        for k in range(len(poly)):
            p, q = poly[k], poly[(k + 1) % len(poly)]
            if abs(q - p) <= eps:
                continue
            mid = 0.5 * (p + q)
            di = abs(mid - sites[i])
            for j in range(len(sites)):
                if j != i and abs(abs(mid - sites[j]) - di) <= eps:
                    if i < j:
                        edges.append((complex(p), complex(q), i, j))
                    break
    fld = SigmaField(a)
    samples = []
    if edges:
        mids = np.array([0.5 * (p + q) for p, q, _, _ in edges])
        fv = fld.evaluate(mids)
        samples = [FaultSample(complex(z), float(g), "regular") for z, g in zip(mids, fv.gap)]
    return FaultSet(analytic=Voronoi(tuple(sites), tuple(edges)), samples=tuple(samples),
                    region=box, fault_tol=fault_tol)


def segment_distance(z, p, q) -> np.ndarray:
    """Distance from points ``z`` to the segment ``[p, q]``."""
    z = np.asarray(z, dtype=np.complex128)
    d = q - p
    if d == 0:
        return np.abs(z - p)
    t = np.clip(((z - p) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(z - (p + t * d))


def bidiagonal_fault_predicate(a, zero_tol: float | None = None):
    """``(is_bidiagonal, fault_free)``; ``fault_free`` is ``None`` unless bidiagonal.

    An upper bidiagonal matrix is fault free exactly when no superdiagonal
    entry vanishes: the shifted Gram matrix is then irreducible tridiagonal.
    """
    a = check_matrix(a)
    if zero_tol is None:
        zero_tol = default_zero_tol(a)
    mask = np.ones(a.shape, dtype=bool)
    idx = np.arange(a.shape[0])
    mask[idx, idx] = False
    mask[idx[:-1], idx[:-1] + 1] = False
    if np.abs(a[mask]).max(initial=0.0) > zero_tol:
        return False, None
    sup = np.abs(np.diag(a, 1))
    return True, bool(np.all(sup > zero_tol))


# component check -------------------------------------------------------------------

@dataclass(frozen=True)
class PairReport:
    i: int
    j: int
    same_component: bool
    equivalent: bool


@dataclass(frozen=True)
class ComponentReport:
    eigenvalues: np.ndarray
    components: tuple
    pairs: tuple
    violations: tuple
    converse_counterexamples: tuple
    labels: np.ndarray = field(repr=False, default=None)


def component_equivalence_check(a, region, grid=(256, 256), *,
                                fault_tol: float | None = None) -> ComponentReport:
    """Flood-fill the grid avoiding faults and compare components with block classes.

    Grid edges are cut where the active block (the one attaining ``s_n``)
    changes, including changes between the endpoints detected by sampling
    edges near label boundaries, and where :func:`fault_scan` placed a sample.
    Nodes with gap at most ``fault_tol`` are removed.  Eigenvalues in one
    component but in different classes are violations; equivalent
    eigenvalues in different components are converse counterexamples.
    """
    box = check_region(region)
    nx, ny = check_grid(grid)
    fld = SigmaField(check_matrix(a))
    dec = fld.decomposition
    xs = np.linspace(box.x0, box.x1, nx)
    ys = np.linspace(box.y0, box.y1, ny)
    fv = fld.grid(xs, ys)
    active = np.argmin(fv.block_min, axis=2)
    tol = default_fault_tol(fv.s_min) if fault_tol is None else np.full(fv.gap.shape, fault_tol)
    alive = fv.gap > tol

    def node(j, i):
        return j * nx + i

    # horizontal and vertical edges: cut[h][j, i] refers to (j,i)-(j,i+1)
    cut_h = active[:, :-1] != active[:, 1:]
    cut_v = active[:-1, :] != active[1:, :]
    if len(fld.blocks) > 1:
        near = np.zeros_like(active, dtype=bool)
        diff = np.zeros_like(active, dtype=bool)
        diff[:, :-1] |= cut_h
        diff[:, 1:] |= cut_h
        diff[:-1, :] |= cut_v
        diff[1:, :] |= cut_v
        near[:] = diff
        near[1:, :] |= diff[:-1, :]
        near[:-1, :] |= diff[1:, :]
        near[:, 1:] |= diff[:, :-1]
        near[:, :-1] |= diff[:, 1:]
        sub = np.linspace(0.0, 1.0, 10)[1:-1]
        for horiz in (True, False):
            cut = cut_h if horiz else cut_v
            jj, ii = np.nonzero(~cut & (near[:, :-1] if horiz else near[:-1, :]))
            if jj.size == 0:
                continue
            p = xs[ii] + 1j * ys[jj]
            q = (xs[ii + 1] + 1j * ys[jj]) if horiz else (xs[ii] + 1j * ys[jj + 1])
            lab0 = active[jj, ii]
            bad = np.zeros(jj.size, dtype=bool)
            for t in sub:
                bm = fld.evaluate(p + t * (q - p)).block_min
                bad |= np.argmin(bm, axis=1) != lab0
            cut[jj[bad], ii[bad]] = True

    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    for smp in fault_scan(a, box, (nx, ny), fault_tol=fault_tol, field=fld).samples:
        fx = (smp.lam.real - box.x0) / hx
        fy = (smp.lam.imag - box.y0) / hy
        i, j = int(np.clip(np.floor(fx), 0, nx - 2)), int(np.clip(np.floor(fy), 0, ny - 2))
        ir, jr = int(round(fx)), int(round(fy))
        if abs(fy - jr) < 1e-6 and 0 <= jr < ny:
            cut_h[jr, i] = True
        if abs(fx - ir) < 1e-6 and 0 <= ir < nx:
            cut_v[j, ir] = True

    rows, cols = [], []
    jj, ii = np.nonzero(~cut_h & alive[:, :-1] & alive[:, 1:])
    rows.append(node(jj, ii))
    cols.append(node(jj, ii + 1))
    jj, ii = np.nonzero(~cut_v & alive[:-1, :] & alive[1:, :])
    rows.append(node(jj, ii))
    cols.append(node(jj + 1, ii))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(r.size), (r, c)), shape=(nx * ny, nx * ny))
    _, labels = connected_components(graph, directed=False)
    labels = labels.reshape(ny, nx)
    labels = np.where(alive, labels, -1)

    ev = np.concatenate([np.diag(b) for b in dec.blocks])
    orig = [int(i) for i in dec.sigma]
    eig = np.empty(len(orig), dtype=np.complex128)
    eig[orig] = ev
    comps = []
    for e in eig:
        if not box.contains(e):
            raise ValueError(f"eigenvalue {e} lies outside the region")
        i = int(round((e.real - box.x0) / hx))
        j = int(round((e.imag - box.y0) / hy))
        if labels[j, i] < 0:
            raise EigenvalueOnFaultCell(f"eigenvalue {e} sits on a fault node; refine the grid")
        comps.append(int(labels[j, i]))
    graph_cls = {i: l for l, cls in enumerate(dec.classes) for i in cls}
    pairs, viol, conv = [], [], []
    for i in range(len(eig)):
        for j in range(i + 1, len(eig)):
            pr = PairReport(i, j, comps[i] == comps[j], graph_cls[i] == graph_cls[j])
            pairs.append(pr)
            if pr.same_component and not pr.equivalent:
                viol.append(pr)
            elif pr.equivalent and not pr.same_component:
                conv.append(pr)
    return ComponentReport(eigenvalues=eig, components=tuple(comps), pairs=tuple(pairs),
                           violations=tuple(viol), converse_counterexamples=tuple(conv),
                           labels=labels)
