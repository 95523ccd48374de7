"""Singular points of the pseudospectral boundary, and critical levels.

A boundary point is *stationary* when it is not a fault point but the
gradient of ``s_n`` vanishes there, an *essential fault* when two singular
values of a single block coincide there, and a *regular fault* when the
minima of two different blocks meet.  Points where separate arcs of the
boundary meet are reported as *self intersections*.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, optimize

from ._validation import check_grid, check_matrix, check_region
from .blocks import BlockDecomposition
from .exceptions import UnclassifiablePoint, UnclassifiablePointWarning
from .faults import essential_fault_small
from .field import SigmaField, default_fault_tol
from .tracer import (
    BoundaryCurve,
    default_grad_tol,
    default_level_tol,
    default_region,
    sector_probe,
)

STATIONARY = "stationary"
REGULAR_FAULT = "regular_fault"
ESSENTIAL_FAULT = "essential_fault"
SELF_INTERSECTION = "self_intersection"


@dataclass(frozen=True)
class SingularPointRecord:
    location: complex
    kind: str
    delta: float
    gap: float
    grad_norm: float
    blocks: tuple
    sector_angle: float
    source: str = ""


# local refinement ---------------------------------------------------------------

def _hessian_newton(fld: SigmaField, l: int, z0: complex, max_iter: int = 40):
    """Solve ``grad f_l = 0`` by Newton with a central-difference Hessian."""
    z = complex(z0)
    for _ in range(max_iter):
        _, g = fld.block_min_grad(l, z)
        e = 1e-6 * (1.0 + abs(z))
        _, gx1 = fld.block_min_grad(l, z + e)
        _, gx0 = fld.block_min_grad(l, z - e)
        _, gy1 = fld.block_min_grad(l, z + 1j * e)
        _, gy0 = fld.block_min_grad(l, z - 1j * e)
        hx = (gx1 - gx0) / (2 * e)
        hy = (gy1 - gy0) / (2 * e)
        hess = np.array([[hx.real, hy.real], [hx.imag, hy.imag]])
        if not np.all(np.isfinite(hess)) or abs(np.linalg.det(hess)) < 1e-14:
            return None
        d = np.linalg.solve(hess, -np.array([g.real, g.imag]))
        z = z + complex(d[0], d[1])
        if np.hypot(*d) <= 1e-14 * (1.0 + abs(z)):
            break
    _, g = fld.block_min_grad(l, z)
    return z, abs(g), float(np.linalg.det(hess))


def _nelder_mead(fun, z0: complex, scale: float):
    x0 = np.array([z0.real, z0.imag])
    simplex = np.array([x0, x0 + [scale, 0.0], x0 + [0.0, scale]])
    best = x0
    for shrink in (1.0, 1e-3):
        res = optimize.minimize(lambda p: fun(complex(p[0], p[1])), best, method="Nelder-Mead",
                                options={"initial_simplex": best + (simplex - x0) * shrink,
                                         "xatol": 1e-13, "fatol": 1e-15, "maxiter": 800})
        best = res.x
    return complex(best[0], best[1])


def _refine_fault(fld, delta, z0, scale):
    def phi(w):
        s, gap, _, _ = fld.point(w)
        return gap + abs(s - delta)
    return _nelder_mead(phi, complex(z0), scale)


def _refine_stationary(fld, z0):
    s, gap, mins, _ = fld.point(z0)
    res = _hessian_newton(fld, int(np.argmin(mins)), z0)
    return None if res is None else res[0]


# arcs near a point -----------------------------------------------------------------

def _arc_runs(curves, p, radius) -> int:
    """Number of separate polyline pieces of ``curves`` within ``radius`` of ``p``."""
    runs = 0
    for c in curves:
        v = c.vertices[:-1] if c.closed and len(c.vertices) > 1 else c.vertices
        near = np.abs(v - p) <= radius
        if not near.any():
            # a long segment may pass by without a nearby vertex
            if c.distance(p)[0] <= radius:
                runs += 1
            continue
        if near.all():
            runs += 1
            continue
        starts = near & ~np.roll(near, 1)
        if not c.closed:
            starts[0] = near[0]
        runs += int(starts.sum())
    return runs


# classification -------------------------------------------------------------------

def _local_minima(vals, closed):
    v = np.asarray(vals, dtype=float)
    if v.size < 3:
        return np.array([], dtype=int)
    if closed:
        left, right = np.roll(v, 1), np.roll(v, -1)
        idx = np.nonzero((v < left) & (v <= right))[0]
    else:
        idx = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
    return idx


def _candidates(fld, delta, curves, level_tol, fault_tol_fn, grad_tol):
    raw = []
    for c in curves:
        v = c.vertices
        for k in c.corner_indices:
            raw.append((complex(v[k]), "corner"))
        for p in c.stall_points:
            raw.append((complex(p), "stall"))
        body = v[:-1] if c.closed else v
        if body.size < 3:
            continue
        fv = fld.evaluate(body)
        step = np.abs(np.diff(np.append(body, body[0]))) if c.closed else \
            np.abs(np.diff(body, append=body[-1]))
        spacing = np.maximum(step, np.roll(step, 1))
        for k in _local_minima(fv.gap, c.closed):
            if fv.gap[k] <= 4.0 * spacing[k]:
                raw.append((complex(body[k]), "gap_minimum"))
        gn = np.abs(c.gradients[:-1] if c.closed else c.gradients)
        gn = np.where(np.isfinite(gn), gn, np.inf)
        med = np.median(gn[np.isfinite(gn)]) if np.isfinite(gn).any() else 0.0
        for k in _local_minima(gn, c.closed):
            if gn[k] <= 0.25 * med:
                raw.append((complex(body[k]), "gradient_minimum"))
    for b in fld.blocks:
        if b.shape[0] == 3:
            res = essential_fault_small(b).result
            if getattr(res, "lam", None) is not None:
                if abs(fld.s_min(res.lam) - delta) <= 10 * level_tol:
                    raw.append((complex(res.lam), "analytic"))
    return raw


def _refine(fld, delta, z0, source, scale, level_tol, fault_tol_fn, grad_tol):
    """Move a raw candidate onto the singular point it signals, if one is close.

    Returns ``(point, hit)``; ``hit`` is false when no refinement succeeded.
    """
    if source == "analytic":
        return z0, True
    s, gap, _, _ = fld.point(z0)
    if gap <= fault_tol_fn(s) and abs(s - delta) <= level_tol:
        return z0, True
    options = []
    w = _refine_fault(fld, delta, z0, scale)
    s, gap, _, _ = fld.point(w)
    if abs(w - z0) <= 4 * scale and gap <= fault_tol_fn(s) and abs(s - delta) <= level_tol:
        options.append(w)
    w = _refine_stationary(fld, z0)
    if w is not None and abs(w - z0) <= 4 * scale:
        s, gap, mins, _ = fld.point(w)
        gn = abs(fld.block_min_grad(int(np.argmin(mins)), w)[1])
        if gap > fault_tol_fn(s) and gn <= grad_tol and abs(s - delta) <= level_tol:
            options.append(w)
    if not options:
        return z0, False
    return min(options, key=lambda q: abs(q - z0)), True


def classify_singular_points(a, delta: float, curves, blocks: BlockDecomposition | None = None,
                             *, fault_tol: float | None = None, level_tol: float | None = None,
                             grad_tol: float | None = None, probe_radius: float | None = None,
                             rays: int = 256, strict: bool = False,
                             field: SigmaField | None = None) -> list:
    """Detect and classify singular points of the traced boundary at ``delta``.

    Candidates are tracer corners and stall points, local minima of the gap
    and of the gradient norm along the vertices, and closed-form essential
    points of 3x3 blocks.  Each is refined, interior points (sector angle
    ``2 pi``) are discarded, and the rest are tested in order: stationary,
    fault (essential, else self intersection when several arcs meet, else
    regular), self intersection.  A candidate passing none of the tests
    raises :class:`UnclassifiablePoint` when ``strict`` and otherwise emits
    :class:`UnclassifiablePointWarning`.
    """
    a = check_matrix(a)
    fld = field if field is not None else SigmaField(a, decomposition=blocks)
    curves = [c for c in curves if isinstance(c, BoundaryCurve)]
    level_tol = default_level_tol(delta) if level_tol is None else level_tol
    grad_tol = default_grad_tol(delta) if grad_tol is None else grad_tol
    fault_tol_fn = default_fault_tol if fault_tol is None else (lambda s: fault_tol)
    h_max = max((c.h_max for c in curves), default=1e-2)
    h_min = max((c.h_min for c in curves), default=1e-6)
    radius = 1e-2 * h_max if probe_radius is None else probe_radius
    merge = max(10 * h_min, 1e-9)

    points: list[tuple[complex, str]] = []
    for z0, src in _candidates(fld, delta, curves, level_tol, fault_tol_fn, grad_tol):
        z, hit = _refine(fld, delta, z0, src, 4 * h_min if src == "stall" else 0.5 * h_max,
                         level_tol, fault_tol_fn, grad_tol)
        if not hit and src in ("gap_minimum", "gradient_minimum"):
            continue  # screening heuristics only count once refined onto a singular point
        if all(abs(z - q) > merge for q, _ in points):
            points.append((z, src))

    records = []
    for z, src in points:
        s, gap, mins, gaps = fld.point(z)
        ftol = fault_tol_fn(s)
        involved = tuple(int(l) for l in np.nonzero(mins - s <= ftol)[0])
        if gap > ftol:
            gn = abs(fld.block_min_grad(int(np.argmin(mins)), z)[1])
        else:
            gn = float("nan")
        angle = sector_probe(a, delta, z, radius, rays, field=fld)
        if angle >= 2 * np.pi:
            continue
        multi = _arc_runs(curves, z, 2 * h_max) >= 2
        if gap > ftol and gn <= grad_tol:
            kind = STATIONARY
        elif gap <= ftol:
            if any(gaps[l] <= ftol for l in involved):
                kind = ESSENTIAL_FAULT
            elif multi:
                kind = SELF_INTERSECTION
            else:
                kind = REGULAR_FAULT
        elif multi:
            kind = SELF_INTERSECTION
        else:
            msg = (f"candidate {z} ({src}) at delta={delta}: gap {gap:.3g}, "
                   f"|grad| {gn:.3g}; no test fired")
            if strict:
                raise UnclassifiablePoint(msg, location=z)
            warnings.warn(msg, UnclassifiablePointWarning, stacklevel=2)
            continue
        records.append(SingularPointRecord(
            location=complex(z), kind=kind, delta=float(delta), gap=float(gap),
            grad_norm=float(gn), blocks=involved, sector_angle=float(angle), source=src))
    records.sort(key=lambda r: (r.location.imag, r.location.real))
    return records


def is_interior(a, delta: float, lam, radius: float = 1e-3, probes: int = 64, *,
                field: SigmaField | None = None) -> bool:
    """All ``probes`` points on the circle of ``radius`` about ``lam`` have ``s_n < delta``."""
    fld = field if field is not None else SigmaField(check_matrix(a))
    pts = complex(lam) + radius * np.exp(2j * np.pi * np.arange(probes) / probes)
    return bool(np.all(fld.evaluate(pts).s_min < delta))


# critical levels ------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalDelta:
    """A level where the number of components of ``{s_n <= delta}`` changes."""

    delta: float
    count_below: int
    count_above: int
    location: complex
    kind: str  # "stationary" | "fault" | "essential" | "minimum" | "grid"
    grid_delta: float


def _pass_candidates(fld, p, scale):
    """Refined levels for a merge near grid node ``p``."""
    out = []
    s, gap, mins, gaps = fld.point(p)
    order = np.argsort(mins)
    l = int(order[0])
    res = _hessian_newton(fld, l, p)
    if res is not None:
        w, gn, det = res
        if abs(w - p) <= scale and det < 0:
            out.append((float(fld.block_min_grad(l, w)[0]), w, "stationary"))
    if len(order) > 1:
        m = int(order[1])

        def eqs(x):
            w = complex(x[0], x[1])
            fl, gl = fld.block_min_grad(l, w)
            fm, gm = fld.block_min_grad(m, w)
            return [fl - fm, (np.conj(gl) * gm).imag]

        sol = optimize.root(eqs, [p.real, p.imag], method="hybr", options={"xtol": 1e-14})
        w = complex(*sol.x)
        if sol.success and abs(w - p) <= scale:
            fl, gl = fld.block_min_grad(l, w)
            _, gm = fld.block_min_grad(m, w)
            if (np.conj(gl) * gm).real < 0:
                out.append((float(fl), w, "fault"))
    if gaps[l] < np.inf:
        def block_gap(w):
            sv = fld.block_values(w)[l]
            return sv[-2] - sv[-1]
        w = _nelder_mead(block_gap, p, scale / 4)
        if abs(w - p) <= scale and block_gap(w) <= default_fault_tol(fld.s_min(w)):
            out.append((float(fld.block_values(w)[l][-1]), w, "essential"))
    return out


def critical_deltas(a, lo: float, hi: float, *, region=None, grid=(256, 256), scan: int = 64,
                    field: SigmaField | None = None) -> list:
    """Levels in ``(lo, hi)`` where the component count of ``{s_n <= delta}`` changes.

    The count is bisected on a cached grid; each transition is then refined
    at the grid node where it happens: a saddle of one block's minimum
    (Newton on the gradient), a touching of two blocks (equal values with
    antiparallel gradients), or an essential fault of one block.  The
    candidate level closest to the grid estimate wins.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    fld = field if field is not None else SigmaField(check_matrix(a))
    box = default_region(a, hi, field=fld) if region is None else check_region(region)
    nx, ny = check_grid(grid)
    xs = np.linspace(box.x0, box.x1, nx)
    ys = np.linspace(box.y0, box.y1, ny)
    smin = fld.grid(xs, ys).s_min
    cell = float(np.hypot(xs[1] - xs[0], ys[1] - ys[0]))

    def count(d):
        return int(ndimage.label(smin <= d)[1])

    events = []
    levels = np.linspace(lo, hi, scan)
    counts = [count(d) for d in levels]
    for d0, d1, c0, c1 in zip(levels[:-1], levels[1:], counts[:-1], counts[1:]):
        left = d0
        while c0 != c1:
            a0, a1 = left, d1
            while a1 - a0 > 1e-14 * max(1.0, a1):
                mid = 0.5 * (a0 + a1)
                if count(mid) == c0:
                    a0 = mid
                else:
                    a1 = mid
            if a1 == a0:
                break
            new = count(a1)
            events.append((a0, a1, c0, new))
            left, c0 = a1, new

    out = []
    for a0, a1, c0, c1 in events:
        fresh = (smin > a0) & (smin <= a1)
        jj, ii = np.nonzero(fresh)
        if jj.size == 0:
            continue
        k = int(np.argmin(smin[jj, ii]))
        p = complex(xs[ii[k]], ys[jj[k]])
        grid_delta = float(smin[jj[k], ii[k]])
        if c1 > c0:
            w = _nelder_mead(fld.s_min, p, cell)
            out.append(CriticalDelta(fld.s_min(w), c0, c1, w, "minimum", grid_delta))
            continue
        cands = _pass_candidates(fld, p, 3 * cell)
        if cands:
            dval, w, kind = min(cands, key=lambda c: abs(c[0] - grid_delta))
            if abs(dval - grid_delta) <= 2 * cell:
                out.append(CriticalDelta(dval, c0, c1, w, kind, grid_delta))
                continue
        out.append(CriticalDelta(grid_delta, c0, c1, p, "grid", grid_delta))
    return out
