import numpy as np
import pytest

from pseudospec import (Empty, NotFullyCoupled, NotNormal, RootRejected, SigmaField,
                        SinglePoint, bidiagonal_fault_predicate, component_equivalence_check,
                        essential_fault_small, fault_line, fault_scan, interlacing_q,
                        voronoi_faults)
from pseudospec.faults import segment_distance, voronoi_cells
from pseudospec._validation import Box
from fixtures import W, conic_double_point, crossing_lines, cube_roots, essential_angle, \
    essential_family, hyperbola_fault


def coupled_triangle(rng):
    b = np.triu(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        while abs(b[i, j]) < 0.2:
            b[i, j] = complex(*rng.normal(size=2))
    return b


def test_hyperbola_scan():
    fs = fault_scan(hyperbola_fault, (0, -2, 4, 2), (256, 256))
    z = fs.points
    assert len(z) > 100
    assert np.abs(31 * z.real ** 2 - z.imag ** 2 - 90 * z.real + 55).max() <= 1e-5
    assert z.real.min() > 1
    assert {s.kind for s in fs.samples} == {"regular"}


def test_crossing_lines_scan():
    fs = fault_scan(crossing_lines, (-2, -2, 2, 2), (256, 256))
    z = fs.points
    assert np.minimum(abs(z.real - z.imag), abs(z.real + z.imag)).max() <= 1e-5


def test_no_faults_is_valid():
    assert fault_scan(np.diag([0, 10]).astype(complex), (-1, -1, 1, 1), (32, 32)).samples == ()


def test_regular_samples_sit_between_two_blocks():
    fs = fault_scan(hyperbola_fault, (0, -2, 4, 2), (128, 128))
    fld = SigmaField(hyperbola_fault)
    mins = fld.evaluate(fs.points).block_min
    assert np.all(np.abs(mins[:, 0] - mins[:, 1]) <= 1e-8 * (1 + mins.min(axis=1)))


@pytest.mark.parametrize("k", range(5))
def test_essential_family_single_point(k):
    res = essential_fault_small(essential_family(k))
    assert isinstance(res.result, SinglePoint)
    assert abs(res.result.lam) <= 1e-12
    assert res.certificate.point == 1.25 and res.certificate.direction == pytest.approx(1)


def test_conic_double_point_on_real_axis():
    res = essential_fault_small(conic_double_point)
    assert abs(res.result.lam) <= 1e-12
    assert res.certificate.direction == pytest.approx(1)


def test_missing_coupling_has_no_essential_fault():
    b = np.array([[0.75, 1, 1], [0, 1.25, 0], [0, 0, -0.75]], dtype=complex)
    res = essential_fault_small(b)
    assert isinstance(res.result, Empty)
    assert res.diagnostics["permutation"] == (1, 0, 2)


def test_essential_preconditions():
    with pytest.raises(NotFullyCoupled):
        essential_fault_small(np.diag([1, 2, 3]).astype(complex))
    with pytest.raises(ValueError):
        essential_fault_small(np.triu(np.ones((4, 4))))
    assert isinstance(essential_fault_small(np.array([[0, 1], [0, 1]])).result, Empty)


def test_rejected_candidate(rng):
    rejected = 0
    for _ in range(200):
        b = coupled_triangle(rng)
        res = essential_fault_small(b)
        if isinstance(res.result, Empty) and "candidate" in res.diagnostics:
            rejected += 1
            with pytest.raises(RootRejected):
                essential_fault_small(b, strict=True)
    assert rejected > 0


def test_q_structure_on_the_line(rng):
    # q / conj(s) = q1 + sqrt(D): q1 affine, D the squared eigenvalue spread of B1* B1
    for _ in range(50):
        b = coupled_triangle(rng)
        line = fault_line(b)
        taus = np.linspace(-2, 2, 9)
        g, spread = [], []
        for tau in taus:
            lam = line.point + tau * line.direction
            q = interlacing_q(b, lam) / np.conj(b[0, 2])
            assert abs(q.imag) <= 1e-9 * (1 + abs(q))
            b1 = b[:2, :2] - lam * np.eye(2)
            mu = np.linalg.eigvalsh(b1.conj().T @ b1)
            g.append(q.real)
            spread.append(mu[1] - mu[0])
        q1 = np.array(g) - np.array(spread)
        assert np.abs(np.diff(q1, 2)).max() <= 1e-9 * (1 + np.abs(q1).max())
        f = np.polyfit(taus, q1 ** 2 - np.array(spread) ** 2, 3)
        scale = 1 + np.abs(f).max()
        assert abs(f[0]) <= 1e-8 * scale and abs(f[3]) <= 1e-8 * scale
        res = essential_fault_small(b)
        if f[1] != 0 and "tau" in res.diagnostics:
            assert res.diagnostics["tau"] == pytest.approx(-f[2] / f[1], rel=1e-6, abs=1e-9)


def test_essential_points_unique_and_on_line(rng):
    found = 0
    for trial in range(300):
        # generic triangles have no essential fault; the symmetric family always has one
        b = essential_angle(rng.uniform(0, 2 * np.pi)) if trial % 3 == 0 else coupled_triangle(rng)
        res = essential_fault_small(b)
        line = res.certificate
        if isinstance(res.result, SinglePoint):
            lam = res.result.lam
            # centre the grid on the root so it is a node
            box = Box(lam.real - 1.5, lam.imag - 1.5, lam.real + 1.5, lam.imag + 1.5)
            grid = (65, 65)
        else:
            c = line.point
            box = Box(c.real - 2, c.imag - 2, c.real + 2, c.imag + 2)
            grid = (64, 64)
        cell = box.width / (grid[0] - 1)
        ess = fault_scan(b, box, grid).of_kind("essential")
        pts = np.array([s.lam for s in ess])
        if len(pts):
            # one cluster, on the line
            assert np.abs(pts - pts[0]).max() <= 2 * cell
            off = np.abs(((pts - line.point) * np.conj(line.direction)).imag)
            assert off.max() <= 2 * cell
        if isinstance(res.result, SinglePoint):
            found += 1
            assert len(pts) and np.abs(pts - res.result.lam).min() <= 1e-6
    assert found >= 100


def test_voronoi_cube_roots():
    fs = voronoi_faults(cube_roots, (-2, -2, 2, 2))
    edges = fs.analytic.edges
    assert len(edges) == 3
    angles = sorted(np.angle(p if abs(p) > abs(q) else q) for p, q, _, _ in edges)
    assert angles == pytest.approx([-np.pi / 3, np.pi / 3, np.pi], abs=1e-12)
    p = np.exp(1j * np.pi / 3)
    assert abs(p - 1) == pytest.approx(1) and abs(p - W) == pytest.approx(1)
    assert all(s.gap <= 1e-12 for s in fs.samples)


def test_voronoi_two_sites():
    (p, q, i, j), = voronoi_faults(np.diag([0, 2]).astype(complex), (-2, -2, 4, 2)).analytic.edges
    assert p.real == pytest.approx(1) and q.real == pytest.approx(1)
    assert abs(p.imag - q.imag) == pytest.approx(4)


def test_voronoi_cells_partition(rng):
    sites = list(rng.uniform(-1, 1, 6) + 1j * rng.uniform(-1, 1, 6))
    box = Box(-2, -2, 2, 2)
    cells = voronoi_cells(sites, box)
    area = sum(0.5 * abs(sum((np.conj(p) * q).imag for p, q in zip(c, c[1:] + c[:1])))
               for c in cells)
    assert area == pytest.approx(16)


def test_voronoi_needs_normal():
    with pytest.raises(NotNormal):
        voronoi_faults(hyperbola_fault, (-2, -2, 4, 2))


def test_segment_distance():
    assert segment_distance(np.array([1j, 2 + 1j, -1]), 0, 1) == pytest.approx([1, np.sqrt(2), 1])


def test_bidiagonal_predicate():
    assert bidiagonal_fault_predicate(np.array([[1, 1, 0], [0, 2, 1], [0, 0, 3]])) == (True, True)
    assert bidiagonal_fault_predicate(np.array([[1, 1, 0], [0, 2, 0], [0, 0, 3]])) == (True, False)
    assert bidiagonal_fault_predicate(np.ones((3, 3))) == (False, None)


def test_component_check_crossing_lines():
    rep = component_equivalence_check(crossing_lines, (-2, -2, 2, 2), (128, 128))
    assert rep.violations == ()
    assert {(p.i, p.j) for p in rep.converse_counterexamples} == {(0, 1), (2, 3)}


@pytest.mark.parametrize("a, region", [(hyperbola_fault, (-2, -2, 4, 2)),
                                       (np.diag([0, 1j, 2, -1 - 1j]), (-2, -2, 3, 2))])
def test_component_check_no_violations(a, region):
    rep = component_equivalence_check(np.asarray(a, dtype=complex), region, (128, 128))
    assert rep.violations == ()
