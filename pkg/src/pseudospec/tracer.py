"""Tracing the level set ``s_n(lambda) = delta``.

Grid seeding by sign changes, predictor-corrector continuation along the
active block's level curve, corner location where the active block changes,
restart across singular points, and grid flood-fill component counts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from ._validation import Box, check_grid, check_matrix, check_region
from .exceptions import CorrectorDivergence, EmptyLevelSet, StallAtSingularity
from .faults import segment_distance
from .field import SigmaField, default_fault_tol
from .linalg import small_svd


def default_level_tol(delta: float) -> float:
    return 1e-8 * (1.0 + delta)


def default_grad_tol(delta: float) -> float:
    return 1e-6 * (1.0 + delta)


def _field(a, fld):
    return fld if fld is not None else SigmaField(check_matrix(a))


def _border(box: Box, per_side: int = 256) -> np.ndarray:
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    w, h = box.width, box.height
    return np.concatenate([
        box.x0 + w * t + 1j * box.y0,
        box.x1 + 1j * (box.y0 + h * t),
        box.x1 - w * t + 1j * box.y1,
        box.x0 + 1j * (box.y1 - h * t),
    ])


def default_region(a, delta: float, *, field: SigmaField | None = None) -> Box:
    """Eigenvalue bounding box inflated by ``delta + spread / 2``.

    The box keeps growing until ``s_n > delta`` all along its border, which a
    non-normal matrix may need since its pseudospectrum can reach far past
    ``delta`` from the spectrum.
    """
    fld = _field(a, field)
    ev = fld.eigenvalues
    spread = max(float(np.ptp(ev.real)), float(np.ptp(ev.imag)))
    margin = delta + 0.5 * spread
    box = Box(ev.real.min() - margin, ev.imag.min() - margin,
              ev.real.max() + margin, ev.imag.max() + margin)
    for _ in range(16):
        if fld.evaluate(_border(box)).s_min.min() > delta:
            return box
        box = box.inflate(margin)
        margin *= 2.0
    raise ValueError(f"could not find a region enclosing the delta={delta} pseudospectrum")


def _bisect(fn, inside, outside, iters=60):
    """Vectorised bisection between points with ``fn <= 0`` and ``fn > 0``."""
    lo, hi = inside.copy(), outside.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        out = fn(mid) > 0
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    return 0.5 * (lo + hi)


def grid_seed(a, delta: float, region=None, grid=(256, 256), *,
              level_tol: float | None = None, field: SigmaField | None = None) -> np.ndarray:
    """One point of ``s_n = delta`` on every grid edge where ``s_n - delta`` changes sign.

    Seeds come back sorted by ``(Im, Re)``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    fld = _field(a, field)
    box = default_region(a, delta, field=fld) if region is None else check_region(region)
    nx, ny = check_grid(grid)
    tol = default_level_tol(delta) if level_tol is None else level_tol
    xs = np.linspace(box.x0, box.x1, nx)
    ys = np.linspace(box.y0, box.y1, ny)
    out = fld.grid(xs, ys).s_min > delta
    if out.all():
        raise EmptyLevelSet(f"s_n > {delta} on the whole region", reason="above")
    if not out.any():
        raise EmptyLevelSet(f"s_n <= {delta} on the whole region", reason="below")
    zz = xs[None, :] + 1j * ys[:, None]
    ins, outs = [], []
    for p, q, op, oq in ((zz[:, :-1], zz[:, 1:], out[:, :-1], out[:, 1:]),
                         (zz[:-1, :], zz[1:, :], out[:-1, :], out[1:, :])):
        m = op != oq
        ins.append(np.where(op[m], q[m], p[m]))
        outs.append(np.where(op[m], p[m], q[m]))
    seeds = _bisect(lambda w: fld.evaluate(w).s_min - delta,
                    np.concatenate(ins), np.concatenate(outs))
    res = np.abs(fld.evaluate(seeds).s_min - delta)
    seeds = seeds[res <= tol]
    return seeds[np.lexsort((seeds.real, seeds.imag))]


@dataclass(frozen=True)
class BoundaryCurve:
    """Oriented polyline on ``s_n = delta``; the inside lies to the left."""

    delta: float
    vertices: np.ndarray
    s_min: np.ndarray
    gradients: np.ndarray          # grad s_n as gx + i gy, nan at fault vertices
    fault_flags: np.ndarray
    closed: bool
    corner_indices: tuple = ()
    stall_points: tuple = ()
    active_blocks: np.ndarray = field(default=None, repr=False)
    h_min: float = 0.0
    h_max: float = 0.0

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def length(self) -> float:
        return float(np.abs(np.diff(self.vertices)).sum())

    def segments(self):
        v = self.vertices
        return v[:-1], v[1:]

    def distance(self, z) -> np.ndarray:
        """Distance from each of ``z`` to the polyline."""
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        if len(self.vertices) == 1:
            return np.abs(z - self.vertices[0])
        p, q = self.segments()
        d = q - p
        dd = np.where(np.abs(d) > 0, np.abs(d) ** 2, 1.0)
        t = np.clip(((z[:, None] - p[None]) * np.conj(d)[None]).real / dd[None], 0.0, 1.0)
        return np.abs(z[:, None] - (p[None] + t * d[None])).min(axis=1)


class _Tracer:
    """Predictor-corrector continuation on ``min_l f_l = delta``."""

    def __init__(self, fld: SigmaField, delta, box, level_tol, fault_tol,
                 h_min, h_max, corner_angle, max_vertices):
        self.f = fld
        self.delta = delta
        self.box = box
        self.tol = level_tol
        self.fault_tol = fault_tol
        self.h_min = h_min
        self.h_max = h_max
        self.corner_cos = np.cos(corner_angle)
        self.grow_cos = np.cos(0.25 * corner_angle)
        self.max_vertices = max_vertices
        self._eyes = [np.eye(b.shape[0]) for b in fld.blocks]

    # field access
    def active(self, z):
        mins = [small_svd(z * e - b)[-1] for e, b in zip(self._eyes, self.f.blocks)]
        l = int(np.argmin(mins))
        return float(mins[l]), l, mins

    def grad(self, l, z):
        return self.f.block_min_grad(l, z)

    def tangent(self, l, z):
        _, g = self.grad(l, z)
        ag = abs(g)
        if ag == 0.0:
            return None
        return 1j * g / ag

    def correct(self, w, max_iter=12, reach=np.inf):
        """Newton along the gradient; polishes well below ``level_tol`` when it can.

        Updates longer than ``reach`` abort (near stationary points the
        gradient is tiny and Newton would slide along the level set).
        """
        best = None
        for _ in range(max_iter):
            s, l, _ = self.active(w)
            r = s - self.delta
            if abs(r) <= self.tol:
                best = (w, s, l)
                if abs(r) <= 1e-3 * self.tol:
                    break
            elif best is not None:
                break
            _, g = self.grad(l, w)
            gg = abs(g) ** 2
            if gg < 1e-28 or abs(r) > reach * np.sqrt(gg):
                break
            w = w - r * g / gg
        return best

    def closes(self, verts, arc, z, w, t0, t, h):
        """Does the step ``z -> w`` pass the seed heading the original way?  Snaps if so."""
        if arc <= 2 * self.h_max or len(verts) <= 3:
            return False
        if segment_distance(verts[0], z, w)[()] > max(0.5 * h, 2 * self.h_min):
            return False
        if (np.conj(t0) * t).real <= 0:
            return False
        if abs(z - verts[0]) < self.h_min and len(verts) > 1:
            verts.pop()
        verts.append(verts[0])
        return True

    def corner(self, l, m, z0):
        """Point with ``f_l = f_m = delta`` near ``z0`` (2-D Newton)."""
        w = z0
        for _ in range(30):
            fl, gl = self.grad(l, w)
            fm, gm = self.grad(m, w)
            jac = np.array([[gl.real, gl.imag], [gm.real, gm.imag]])
            rhs = -np.array([fl - self.delta, fm - self.delta])
            if abs(np.linalg.det(jac)) < 1e-12:
                return None
            d = np.linalg.solve(jac, rhs)
            w = w + complex(d[0], d[1])
            if np.hypot(*d) <= 1e-15 * (1 + abs(w)) or max(abs(rhs)) <= 1e-3 * self.tol:
                s, _, _ = self.active(w)
                if abs(s - self.delta) <= self.tol:
                    return w
                return None
        return None

    def exits(self, p, heading):
        """Continuations of the level set leaving a small circle around ``p``.

        Candidates are crossings with the inside on their left; the one
        closest to straight ahead wins.
        """
        rho = max(64 * self.h_min, 1e-3 * self.h_max)
        k = 256
        th = 2 * np.pi * np.arange(k) / k
        vals = self.f.evaluate(p + rho * np.exp(1j * th)).s_min - self.delta
        out = vals > 0
        nxt = np.roll(out, -1)
        idx = np.nonzero(out & ~nxt)[0]
        if idx.size == 0:
            return None
        lo = th[idx]
        hi = lo + 2 * np.pi / k  # inside end
        fn = lambda t: self.f.evaluate(p + rho * np.exp(1j * t)).s_min - self.delta
        ang = _bisect(fn, hi, lo)
        pts = p + rho * np.exp(1j * ang)
        turn = np.abs(np.angle(np.exp(1j * ang) / heading))
        c = complex(pts[int(np.argmin(turn))])
        res = self.correct(c)
        return None if res is None else res[0]

    def run(self, seed, sign=1.0, restart=True):
        z = complex(seed)
        s, l, _ = self.active(z)
        verts, blocks, corners, stalls = [z], [l], [], []
        t = self.tangent(l, z)
        if t is None:
            raise StallAtSingularity("zero gradient at the seed", point=z)
        t *= sign
        t0 = t
        h = 0.25 * self.h_max
        arc = 0.0
        closed = False
        restarts = 0
        while True:
            if len(verts) > self.max_vertices:
                raise CorrectorDivergence("vertex budget exhausted before closure")
            res = self.correct(z + h * t, reach=h)
            m = res[2] if res is not None else self.active(z + h * t)[1]
            if m != l:
                # active block changed: step to the corner where both equal delta
                c = self.corner(l, m, z + 0.5 * h * t)
                if c is not None and 0 < abs(c - z) <= 2 * h and (np.conj(c - z) * t).real > 0:
                    t_c = self.tangent(m, c)
                    if t_c is not None:
                        if self.closes(verts, arc, z, c, t0, t, h):
                            closed = True
                            break
                        corners.append(len(verts))
                        verts.append(c)
                        blocks.append(m)
                        arc += abs(c - z)
                        z, t, l = c, sign * t_c, m
                        continue
            ok = res is not None
            if ok:
                w, s_w, l_w = res
                step = w - z
                dist = abs(step)
                ok = 0.25 * h <= dist <= 2.0 * h and (np.conj(step) * t).real >= 0.5 * dist
            if ok:
                t_w = self.tangent(l_w, w)
                ok = t_w is not None
            if ok:
                t_w = t_w * sign
                cosang = float((np.conj(t_w) * t).real)
                if cosang < self.corner_cos:
                    ok = False
            if not ok:
                h *= 0.5
                if h >= self.h_min:
                    continue
                # step underflow: a singular point; jump across it if possible
                if restart and restarts < 32:
                    c = self.exits(z, t)
                    if c is not None and abs(c - z) > self.h_min:
                        s_c, l_c, _ = self.active(c)
                        t_c = self.tangent(l_c, c)
                        if t_c is not None:
                            stalls.append(z)
                            corners.append(len(verts) - 1)
                            restarts += 1
                            arc += abs(c - z)
                            verts.append(c)
                            blocks.append(l_c)
                            z, t, l = c, sign * t_c, l_c
                            h = 0.25 * self.h_max
                            continue
                raise StallAtSingularity(
                    f"step size fell below h_min at {z}", point=z,
                    curve=np.array(verts), direction=t)
            if self.closes(verts, arc, z, w, t0, t, h):
                closed = True
                break
            arc += abs(w - z)
            verts.append(w)
            blocks.append(l_w)
            if not self.box.contains(w):
                break
            z, t, l = w, t_w, l_w
            if cosang > self.grow_cos:
                h = min(1.5 * h, self.h_max)
        if closed:
            blocks = blocks[:len(verts) - 1] + [blocks[0]]
            corners = [c for c in corners if c < len(verts) - 1]
        return verts, blocks, corners, stalls, closed


def _finish(fld, delta, verts, blocks, corners, stalls, closed, fault_tol, h_min, h_max):
    v = np.array(verts, dtype=np.complex128)
    fv = fld.evaluate(v)
    tol = default_fault_tol(fv.s_min) if fault_tol is None else np.full(v.size, fault_tol)
    faults = fv.gap <= tol
    grads = np.full(v.size, np.nan + 0j)
    for k, (z, l) in enumerate(zip(v, blocks)):
        if not faults[k]:
            grads[k] = fld.block_min_grad(l, z)[1]
    return BoundaryCurve(delta=float(delta), vertices=v, s_min=fv.s_min, gradients=grads,
                         fault_flags=faults, closed=closed,
                         corner_indices=tuple(sorted(set(corners))),
                         stall_points=tuple(complex(p) for p in stalls),
                         active_blocks=np.array(blocks), h_min=h_min, h_max=h_max)


def trace_contour(a, delta: float, seed, *, region=None, level_tol: float | None = None,
                  fault_tol: float | None = None, h_max: float | None = None,
                  h_min: float | None = None, corner_angle: float = np.deg2rad(20.0),
                  restart: bool = True, max_vertices: int = 200_000,
                  field: SigmaField | None = None) -> BoundaryCurve:
    """Follow ``s_n = delta`` from ``seed`` counter-clockwise around the inside.

    Step sizes default to ``[1e-6, 1e-2]`` times the region diameter.  A
    change of active block between two vertices inserts the corner where
    both blocks equal ``delta``.  When the step underflows, the trace jumps
    across the singular point along the level-set branch closest to straight
    ahead (``restart=False`` raises :class:`StallAtSingularity` instead).
    The trace stops on closure or when it leaves the region; open traces are
    completed backwards from the seed.
    """
    fld = _field(a, field)
    box = default_region(a, delta, field=fld) if region is None else check_region(region)
    level_tol = default_level_tol(delta) if level_tol is None else level_tol
    diam = box.diameter
    h_max = 1e-2 * diam if h_max is None else h_max
    h_min = 1e-6 * diam if h_min is None else h_min
    seed = complex(seed)
    s0 = fld.s_min(seed)
    if abs(s0 - delta) > level_tol:
        raise ValueError(f"seed is off the level set (|s_n - delta| = {abs(s0 - delta):.3g})")
    tr = _Tracer(fld, delta, box, level_tol, fault_tol, h_min, h_max,
                 corner_angle, max_vertices)
    verts, blocks, corners, stalls, closed = tr.run(seed, 1.0, restart)
    if not closed:
        bv, bb, bc, bs, _ = tr.run(seed, -1.0, restart)
        shift = len(bv) - 1
        corners = [shift - c for c in bc] + [c + shift for c in corners]
        verts = bv[::-1] + verts[1:]
        blocks = bb[::-1] + blocks[1:]
        stalls = bs + stalls
    return _finish(fld, delta, verts, blocks, corners, stalls, closed, fault_tol, h_min, h_max)


def trace_boundary(a, delta: float, region=None, grid=(128, 128), *,
                   level_tol: float | None = None, fault_tol: float | None = None,
                   h_max: float | None = None, h_min: float | None = None,
                   field: SigmaField | None = None, **kwargs) -> list:
    """All boundary curves at ``delta``: seed on a grid, trace each unvisited seed."""
    fld = _field(a, field)
    box = default_region(a, delta, field=fld) if region is None else check_region(region)
    diam = box.diameter
    h_max = 1e-2 * diam if h_max is None else h_max
    h_min = 1e-6 * diam if h_min is None else h_min
    seeds = grid_seed(a, delta, box, grid, level_tol=level_tol, field=fld)
    curves: list[BoundaryCurve] = []
    visit_tol = 0.05 * h_max
    for sd in seeds:
        if any(c.distance(sd)[0] <= visit_tol for c in curves):
            continue
        curves.append(trace_contour(a, delta, sd, region=box, level_tol=level_tol,
                                    fault_tol=fault_tol, h_max=h_max, h_min=h_min,
                                    field=fld, **kwargs))
    return curves


def sector_probe(a, delta: float, lambda0, radius: float, rays: int = 256, *,
                 field: SigmaField | None = None) -> float:
    """Largest contiguous angle of rays lying in ``{s_n <= delta}``.

    A ray counts as inside when ``s_n <= delta`` at radii ``radius / 4``,
    ``radius / 2`` and ``radius``.  Each inside ray contributes
    ``2 pi / rays``; ``2 pi`` means an interior point, ``0`` an exterior one.
    """
    if rays < 64:
        raise ValueError("rays must be >= 64")
    fld = _field(a, field)
    th = 2 * np.pi * np.arange(rays) / rays
    dirs = np.exp(1j * th)
    pts = complex(lambda0) + np.concatenate([r * dirs for r in (radius / 4, radius / 2, radius)])
    inside = (fld.evaluate(pts).s_min <= delta).reshape(3, rays).all(axis=0)
    if inside.all():
        return 2 * np.pi
    if not inside.any():
        return 0.0
    start = int(np.argmin(inside))  # an outside ray
    rolled = np.roll(inside, -start)
    best = run = 0
    for v in rolled:
        run = run + 1 if v else 0
        best = max(best, run)
    return best * 2 * np.pi / rays


def _count(mask) -> int:
    return int(ndimage.label(mask)[1])


def component_count(a, delta: float, region=None, grid=(256, 256), *,
                    field: SigmaField | None = None, max_doublings: int = 3) -> int:
    """Connected components of ``{s_n <= delta}`` by 4-connected flood fill.

    The grid is doubled until the count agrees across one doubling.
    """
    fld = _field(a, field)
    if region is None:
        box = default_region(a, delta, field=fld)
    else:
        box = check_region(region)
        if fld.evaluate(_border(box)).s_min.min() <= delta:
            raise ValueError("region does not contain the pseudospectrum")
    nx, ny = check_grid(grid)
    prev = None
    for _ in range(max_doublings + 1):
        xs = np.linspace(box.x0, box.x1, nx)
        ys = np.linspace(box.y0, box.y1, ny)
        cnt = _count(fld.grid(xs, ys).s_min <= delta)
        if cnt == prev:
            return cnt
        prev = cnt
        nx, ny = 2 * nx - 1, 2 * ny - 1
    return prev
