"""Deterministic SVG rendering of boundaries, fault sets and spectra."""
from __future__ import annotations

from html import escape

import numpy as np

from ._validation import Box, check_region
from .faults import Bisector, FaultSet, Line, Voronoi

_STYLE = {
    "boundary": 'fill="none" stroke="#1f3b73" stroke-width="2" stroke-linejoin="round"',
    "fault": 'fill="none" stroke="#b03a2e" stroke-width="0.6"',
    "fault_point": 'fill="#b03a2e" stroke="none"',
    "eigenvalue": 'fill="none" stroke="#000000" stroke-width="1.2"',
    "singular": 'fill="#ffffff" stroke="#117a65" stroke-width="1.2"',
}


def _f(x: float) -> str:
    s = format(float(x), ".9g")
    return "0" if s == "-0" else s


class _Frame:
    """Data box to pixel mapping; the imaginary axis points up."""

    def __init__(self, box: Box, width: float):
        self.box = box
        self.scale = width / box.width
        self.width = width
        self.height = box.height * self.scale

    def xy(self, z) -> tuple[str, str]:
        return (_f((z.real - self.box.x0) * self.scale),
                _f((self.box.y1 - z.imag) * self.scale))


def _clip_line(p: complex, d: complex, box: Box):
    """Segment of the line ``p + t d`` inside ``box`` (None when it misses)."""
    lo, hi = -np.inf, np.inf
    for pc, dc, a, b in ((p.real, d.real, box.x0, box.x1), (p.imag, d.imag, box.y0, box.y1)):
        if dc == 0:
            if not a <= pc <= b:
                return None
            continue
        t0, t1 = sorted(((a - pc) / dc, (b - pc) / dc))
        lo, hi = max(lo, t0), min(hi, t1)
    if lo >= hi:
        return None
    return p + lo * d, p + hi * d


def _chains(z: np.ndarray) -> list:
    """Greedy nearest-neighbour chains through unordered samples.

    Links longer than three times the median nearest-neighbour spacing
    are not made, so separate branches stay separate.
    """
    m = len(z)
    if m < 2:
        return [list(range(m))]
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    reach = 3.0 * float(np.median(d.min(axis=1)))
    free = np.ones(m, dtype=bool)
    chains = []
    for start in range(m):
        if not free[start]:
            continue
        free[start] = False
        chain = [start]
        for end in (1, 0):
            while True:
                tip = chain[-1] if end else chain[0]
                cand = np.where(free, d[tip], np.inf)
                j = int(np.argmin(cand))
                if cand[j] > reach:
                    break
                free[j] = False
                if end:
                    chain.append(j)
                else:
                    chain.insert(0, j)
        chains.append(chain)
    return chains


def _bounds(curves, faults, spectrum, singular):
    pts = [c.vertices for c in curves]
    if faults is not None:
        if faults.region is not None:
            r = faults.region
            pts.append(np.array([complex(r.x0, r.y0), complex(r.x1, r.y1)]))
        pts.append(faults.points)
    if spectrum is not None:
        pts.append(np.asarray(spectrum, dtype=np.complex128))
    if singular:
        pts.append(np.array([s.location for s in singular]))
    z = np.concatenate([np.ravel(p) for p in pts if np.size(p)])
    x0, x1, y0, y1 = z.real.min(), z.real.max(), z.imag.min(), z.imag.max()
    pad = 0.05 * max(x1 - x0, y1 - y0, 1e-3)
    return Box(x0 - pad, y0 - pad, x1 + pad, y1 + pad)


def emit_svg(curves=(), faults: FaultSet | None = None, spectrum=None, config=None,
             singular_points=()) -> str:
    """Render an SVG document.

    ``config`` may carry ``region`` (x0, y0, x1, y1), ``width`` in pixels
    (default 640) and ``title``.  Output depends only on the inputs:
    numbers use 9 significant digits and elements appear in input order.
    """
    curves = list(curves)
    singular_points = list(singular_points or ())
    has_faults = faults is not None and (faults.samples or (
        faults.analytic is not None and getattr(faults.analytic, "kind", "") != "empty"))
    if not (curves or has_faults or (spectrum is not None and len(spectrum)) or singular_points):
        raise ValueError("nothing to draw")
    config = dict(config or {})
    box = check_region(config["region"]) if config.get("region") is not None else \
        _bounds(curves, faults, spectrum, singular_points)
    fr = _Frame(box, float(config.get("width", 640)))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(fr.width)}" '
        f'height="{_f(fr.height)}" viewBox="0 0 {_f(fr.width)} {_f(fr.height)}">',
    ]
    if config.get("title"):
        out.append(f"<title>{escape(str(config['title']))}</title>")
    out.append(f'<rect x="0" y="0" width="{_f(fr.width)}" height="{_f(fr.height)}" '
               'fill="#ffffff"/>')

    if has_faults:
        out.append('<g class="faults">')
        an = faults.analytic
        segs = []
        if isinstance(an, Voronoi):
            segs = [(p, q) for p, q, _, _ in an.edges]
        elif isinstance(an, Line):
            seg = _clip_line(an.point, an.direction, box)
            segs = [seg] if seg else []
        elif isinstance(an, Bisector):
            mid = 0.5 * (an.alpha + an.beta)
            seg = _clip_line(mid, 1j * (an.beta - an.alpha), box)
            segs = [seg] if seg else []
        for p, q in segs:
            (x1, y1), (x2, y2) = fr.xy(p), fr.xy(q)
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" {_STYLE["fault"]}/>')
        if not segs and faults.samples:
            z = faults.points
            for chain in _chains(z):
                pts = [fr.xy(z[i]) for i in chain]
                if len(pts) == 1:
                    (x, y), = pts
                    out.append(f'<circle cx="{x}" cy="{y}" r="1" {_STYLE["fault_point"]}/>')
                else:
                    d = "M" + " L".join(f"{x} {y}" for x, y in pts)
                    out.append(f'<path d="{d}" {_STYLE["fault"]}/>')
        out.append("</g>")

    if curves:
        out.append('<g class="boundaries">')
        for c in curves:
            pts = [fr.xy(z) for z in c.vertices]
            d = "M" + " L".join(f"{x} {y}" for x, y in pts) + (" Z" if c.closed else "")
            out.append(f'<path data-delta="{_f(c.delta)}" d="{d}" {_STYLE["boundary"]}/>')
        out.append("</g>")

    if spectrum is not None and len(spectrum):
        out.append('<g class="eigenvalues">')
        for z in np.asarray(spectrum, dtype=np.complex128):
            x, y = (float(v) for v in fr.xy(z))
            out.append(f'<path d="M{_f(x - 4)} {_f(y - 4)} L{_f(x + 4)} {_f(y + 4)} '
                       f'M{_f(x - 4)} {_f(y + 4)} L{_f(x + 4)} {_f(y - 4)}" '
                       f'{_STYLE["eigenvalue"]}/>')
        out.append("</g>")

    if singular_points:
        out.append('<g class="singular-points">')
        for r in singular_points:
            x, y = fr.xy(r.location)
            out.append(f'<circle class="{r.kind}" cx="{x}" cy="{y}" r="3.5" '
                       f'{_STYLE["singular"]}/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
