import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pseudospec import (DimensionTooLarge, FaultSet, MalformedMatrix, emit_svg, format_matrix,
                        matrix_to_json, parse_matrix, parse_matrix_text, trace_boundary,
                        voronoi_faults)
from pseudospec.cli import real_expression, run_command
from pseudospec.io import parse_entry
from fixtures import HYPERBOLA_STATIONARY_DELTA, HYPERBOLA_TOUCH_DELTA, cube_roots, \
    hyperbola_fault

floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@pytest.fixture
def hyperbola_file(tmp_path):
    p = tmp_path / "hyperbola_fault.txt"
    p.write_text("# two blocks\n3\n3 0 0\n0 -1 1\n0 0 1\n")
    return p


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


# parsing -------------------------------------------------------------------------

def test_scalar_zero():
    assert np.array_equal(parse_matrix_text("1\n0"), np.zeros((1, 1)))


def test_hyperbola_file(hyperbola_file):
    a = parse_matrix(hyperbola_file)
    assert np.array_equal(np.diag(a), [3, -1, 1])


@pytest.mark.parametrize("tok, val", [
    ("1", 1), ("-2.5", -2.5), ("1+2i", 1 + 2j), ("1-2i", 1 - 2j), ("i", 1j), ("-i", -1j),
    ("+i", 1j), ("3j", 3j), ("2.5e-3i", 0.0025j), ("1e-3+1e+2i", 0.001 + 100j),
    ("-1E3-.5i", -1000 - 0.5j), (".5", 0.5), ("0.1", 0.1)])
def test_entries(tok, val):
    assert parse_entry(tok) == val


@pytest.mark.parametrize("tok", ["1+", "abc", "nan", "inf", "1++2i", "1,5", "2i3", "", "e5"])
def test_bad_entries(tok):
    with pytest.raises(MalformedMatrix):
        parse_entry(tok or "?", 1, 1)


def test_short_row_position():
    with pytest.raises(MalformedMatrix) as info:
        parse_matrix_text("2\n1 2\n3")
    assert info.value.line == 3 and "short" in str(info.value)


def test_bad_entry_position():
    with pytest.raises(MalformedMatrix) as info:
        parse_matrix_text("2\n1 2\n3  x4")
    assert (info.value.line, info.value.column) == (3, 4)


@pytest.mark.parametrize("text", ["", "x\n", "2\n1 2\n3 4\n5 6", "2\n1 2 3\n4 5", "0\n",
                                  '{"n": 2, "rows": [[[1, 0], [0, 0]]]}',
                                  '{"n": 1, "rows": [[[1]]]}', '{"n": 1, "rows": [[[1, "a"]]]}',
                                  '{"n": 1}', '{"n": 1, "rows": [[[1, 0]]]'])
def test_malformed(text):
    with pytest.raises(MalformedMatrix):
        parse_matrix_text(text)


def test_too_large():
    with pytest.raises(DimensionTooLarge):
        parse_matrix_text("65\n")


def test_json_format():
    a = parse_matrix_text('{"n": 2, "rows": [[[1, 0], [0, 1]], [[0, 0], [-0.5, 0]]]}')
    assert np.array_equal(a, [[1, 1j], [0, -0.5]])


@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
    arrays(float, (n, n), elements=floats), arrays(float, (n, n), elements=floats))))
def test_round_trips_are_exact(parts):
    a = parts[0] + 1j * parts[1]
    for back in (parse_matrix_text(format_matrix(a)),
                 parse_matrix_text(json.dumps(matrix_to_json(a)))):
        assert np.array_equal(back.view(np.uint64), a.view(np.uint64))


def test_expressions():
    assert real_expression("2/5") == 0.4
    assert real_expression("sqrt((3-sqrt(5))/2)") == pytest.approx(HYPERBOLA_STATIONARY_DELTA)
    assert real_expression("(48-8*sqrt(5))/31") == HYPERBOLA_TOUCH_DELTA
    for bad in ("__import__('os')", "1/0", "x", "sqrt(-1)"):
        with pytest.raises(Exception):
            real_expression(bad)


# command line ----------------------------------------------------------------------

def test_blocks_command(tmp_path):
    p = tmp_path / "crossing_lines.txt"
    p.write_text("4\n-1 1 0 0\n0 1 0 0\n0 0 -i 1\n0 0 0 i\n")
    code, out, _ = run(["blocks", p, "--out", tmp_path])
    assert code == 0
    rep = json.loads((tmp_path / "blocks.json").read_text())
    assert rep["schema"] == 1
    assert rep["classes"] == [[0, 1], [2, 3]]
    assert rep["tolerances"]["fault_tol"] == "1e-08*(1+s_n)"
    echoed = parse_matrix_text(json.dumps(rep["matrix"]))
    assert np.array_equal(echoed, parse_matrix(p))


def test_trace_command_writes_one_file_per_level(hyperbola_file, tmp_path):
    out = tmp_path / "o"
    code, _, _ = run(["trace", hyperbola_file, "--out", out, "--delta", "8/5", "--delta", "2/5",
                      "--delta", "sqrt((3-sqrt(5))/2)", "--delta", "(48-8*sqrt(5))/31"])
    assert code == 0
    rep = json.loads((out / "trace.json").read_text())
    assert [lv["delta"] for lv in rep["levels"]] == sorted(lv["delta"] for lv in rep["levels"])
    for k, lv in enumerate(rep["levels"]):
        lines = (out / f"trace_{k}.csv").read_text().splitlines()
        assert lines[0] == "x,y,s_n,flags"
        rows = [ln.split(",") for ln in lines[1:]]
        assert all(len(r) == 4 for r in rows)
        assert sum(r[3].startswith("B") for r in rows) == len(lv["curves"])
        s = np.array([float(r[2]) for r in rows])
        assert np.abs(s - lv["delta"]).max() <= 1e-8 * (1 + lv["delta"])


def test_sweep_command(hyperbola_file, tmp_path):
    code, out, _ = run(["sweep", hyperbola_file, "--range", "0.3", "1.5", "--out", tmp_path])
    assert code == 0
    rep = json.loads((tmp_path / "sweep.json").read_text())
    got = [c["delta"] for c in rep["critical"]]
    assert got == pytest.approx([HYPERBOLA_STATIONARY_DELTA, HYPERBOLA_TOUCH_DELTA], abs=1e-6)


def test_classify_and_faults_commands(hyperbola_file, tmp_path):
    assert run(["classify", hyperbola_file, "--delta", "1.2", "--out", tmp_path])[0] == 0
    rep = json.loads((tmp_path / "classify.json").read_text())
    assert [p["kind"] for p in rep["levels"][0]["points"]] == ["regular_fault"] * 2
    assert run(["faults", hyperbola_file, "--region", "0", "-2", "4", "2",
                "--out", tmp_path])[0] == 0
    rows = (tmp_path / "faults.csv").read_text().splitlines()
    assert rows[0] == "x,y,gap,kind" and len(rows) > 100


def test_artifacts_are_byte_identical(hyperbola_file, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert run(["render", hyperbola_file, "--delta", "0.4", "--delta", "1.2",
                    "--out", d])[0] == 0
        assert run(["trace", hyperbola_file, "--delta", "1.2", "--out", d])[0] == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]


def test_exit_codes(hyperbola_file, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2\n1 2\n3\n")
    code, _, err = run(["blocks", bad])
    assert code == 2 and "MalformedMatrix" in err and "line 3" in err
    assert run(["blocks", tmp_path / "missing.txt"])[0] == 2
    assert run(["trace", hyperbola_file])[0] == 2
    assert run(["launch", hyperbola_file])[0] == 2
    code, _, err = run(["trace", hyperbola_file, "--delta", "1e-5", "--region", "10", "10",
                        "11", "11", "--out", tmp_path])
    assert code == 3 and "EmptyLevelSet" in err


# svg ---------------------------------------------------------------------------------

def test_svg_curves_only():
    curves = trace_boundary(hyperbola_fault, 1.6)
    doc = emit_svg(curves, FaultSet(), None)
    assert doc.startswith("<?xml") and doc.count("<path") == 1
    assert 'class="faults"' not in doc
    assert doc == emit_svg(curves, FaultSet(), None)


def test_svg_requires_content():
    with pytest.raises(ValueError):
        emit_svg([], None, None)


def test_svg_flips_imaginary_axis():
    doc = emit_svg([], None, [0, 1j], {"region": (-1, -1, 1, 1), "width": 200})
    # the marker for i sits near the top
    assert 'd="M96 -4 L104 4' in doc and 'd="M96 96 L104 104' in doc


def test_svg_voronoi_overlay(rng):
    a = np.diag(rng.uniform(-2, 2, 8) + 1j * rng.uniform(-2, 2, 8))
    fs = voronoi_faults(a, (-3, -3, 3, 3))
    curves = trace_boundary(a, 0.3, (-3, -3, 3, 3))
    doc = emit_svg(curves, fs, np.diag(a), {"region": (-3, -3, 3, 3)})
    assert doc.count("<line") == len(fs.analytic.edges)
    for num in doc.split('"')[1::2]:
        if num.replace(".", "").replace("-", "").isdigit():
            assert len(num.lstrip("-").replace(".", "").lstrip("0")) <= 9


def test_svg_cube_roots_markers():
    doc = emit_svg(trace_boundary(cube_roots, 1.0), None, np.diag(cube_roots))
    assert doc.count('class="eigenvalues"') == 1 and doc.count("<path") == 1 + 3
