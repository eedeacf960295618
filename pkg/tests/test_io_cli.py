import json

import numpy as np
import pytest

from conftest import square
from ehzcap import cli, geometry, io, selftest
from ehzcap.errors import DimensionMismatch, ValidationError
from ehzcap.geometry import make_random_polytope


def test_polytope_round_trip(tmp_path):
    K = make_random_polytope(2, 7, seed=1)
    path = tmp_path / "k.json"
    io.save_polytope(K, path)
    text = path.read_text()
    K2 = io.load_polytope(path)
    assert np.array_equal(K2.normals, K.normals)
    assert io.dumps(io.polytope_to_dict(K2)) == text


def test_bad_documents():
    with pytest.raises(ValidationError):
        io.polytope_from_dict({"dim": 2})
    with pytest.raises(DimensionMismatch):
        io.polytope_from_dict({"dim": 3, "facets": [{"normal": [1, 0, 0], "height": 1}]})
    with pytest.raises(DimensionMismatch):
        io.polytope_from_dict({"dim": 2, "facets": [{"normal": [1, 0, 0], "height": 1}]})


def _write(tmp_path, name, K):
    path = tmp_path / name
    io.save_polytope(K, path)
    return str(path)


def _run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_capacity_command(tmp_path, capsys):
    path = _write(tmp_path, "square.json", square())
    code, out, _ = _run(["capacity", "--in", path, "--mode", "exact"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["capacity"] == 4.0
    assert doc["beta"] == [0.25] * 4
    assert doc["orbit"]["action"] == 4.0
    assert set(doc) >= {"capacity", "sigma", "beta", "orbit", "mode", "diagnostics"}


def test_capacity_output_is_byte_deterministic(tmp_path, capsys):
    path = _write(tmp_path, "k.json", make_random_polytope(2, 6, seed=3))
    _, a, _ = _run(["capacity", "--in", path, "--workers", "1"], capsys)
    _, b, _ = _run(["capacity", "--in", path, "--workers", "1"], capsys)
    assert a == b


def test_unbounded_input_exit_2(tmp_path, capsys):
    path = tmp_path / "u.json"
    path.write_text(json.dumps({"dim": 2, "facets": [
        {"normal": [1, 0], "height": 1}, {"normal": [-1, 0], "height": 1}, {"normal": [0, 1], "height": 1},
    ]}))
    code, _, err = _run(["capacity", "--in", str(path)], capsys)
    assert code == 2
    assert "Unbounded" in err


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, _ = _run(["capacity", "--in", str(tmp_path / "nope.json")], capsys)
    assert code == 2


def test_solver_error_exit_3(tmp_path, capsys):
    path = _write(tmp_path, "x.json", geometry.make_cross_polytope(2))
    code, _, err = _run(["capacity", "--in", path], capsys)
    assert code == 3
    assert "ExactLimitExceeded" in err


def test_symmetric_command_matches_exact(tmp_path, capsys):
    path = _write(tmp_path, "cube.json", geometry.make_cube(2))
    _, a, _ = _run(["symmetric", "--in", path], capsys)
    _, b, _ = _run(["capacity", "--in", path], capsys)
    assert json.loads(a)["capacity"] == pytest.approx(json.loads(b)["capacity"], rel=1e-9)
    _, c, _ = _run(["pruned", "--in", path], capsys)
    assert json.loads(c)["mode"] == "pruned"


def test_orbit_command(tmp_path, capsys):
    path = _write(tmp_path, "square.json", square())
    code, out, _ = _run(["orbit", "--in", path], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["segments"]) == 4
    code, out, _ = _run(["orbit", "--in", path, "--format", "csv"], capsys)
    assert out.splitlines()[0] == "x0,x1"
    assert len(out.splitlines()) == 6


def test_cut_check_file(tmp_path, capsys):
    path = _write(tmp_path, "square.json", square())
    cuts = tmp_path / "cuts.json"
    cuts.write_text(json.dumps({"cuts": [
        {"normal": [1, 0], "offset": 0.0}, {"normal": [1, 0], "offset": 0.5}, {"normal": [1, 0], "offset": 3.0},
    ]}))
    code, out, _ = _run(["cut-check", "--in", path, "--cuts", str(cuts)], capsys)
    assert code == 0
    rows = [line.split() for line in out.splitlines()[1:]]
    assert len(rows) == 2  # the third cut misses K and is skipped
    assert [float(r[2]) for r in rows] == pytest.approx([2.0, 1.0])
    assert [float(r[3]) for r in rows] == pytest.approx([2.0, 3.0])


def test_cut_check_random(tmp_path, capsys):
    path = _write(tmp_path, "k.json", make_random_polytope(1, 5, seed=2))
    code, out, _ = _run(["cut-check", "--in", path, "--count", "3", "--seed", "1"], capsys)
    assert code == 0
    assert len(out.splitlines()) == 4


def test_gen_commands(tmp_path, capsys):
    _, out, _ = _run(["gen", "cube", "--n", "2", "--r", "1"], capsys)
    assert len(json.loads(out)["facets"]) == 8
    _, out, _ = _run(["gen", "simplex", "--n", "1"], capsys)
    assert len(json.loads(out)["facets"]) == 3
    _, a, _ = _run(["gen", "random", "--n", "2", "--facets", "6", "--seed", "7"], capsys)
    _, b, _ = _run(["gen", "random", "--n", "2", "--facets", "6", "--seed", "7"], capsys)
    assert a == b


def test_exact_limit_flag_validated(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["capacity", "--in", "x.json", "--exact-limit", "13"])
    assert info.value.code == 2


def test_workers_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("EHZ_WORKERS", "2")
    path = _write(tmp_path, "square.json", square())
    _, out, _ = _run(["capacity", "--in", path], capsys)
    assert json.loads(out)["diagnostics"]["workers"] == 2


def test_selftest_quick(capsys):
    code, out, _ = _run(["selftest", "--quick"], capsys)
    assert code == 0, out
    assert out.strip().endswith("checks passed")


def test_selftest_catches_sign_flip(monkeypatch):
    from ehzcap import core, oracles, orbit

    flipped = geometry.omega_matrix

    def bad(ctx, vectors):
        return -flipped(ctx, vectors)

    for mod in (geometry, core, orbit, oracles):
        monkeypatch.setattr(mod, "omega_matrix", bad)
    monkeypatch.setattr(geometry, "omega", lambda ctx, u, v: -float(np.dot(geometry.apply_J(ctx, u), v)))
    monkeypatch.setattr(selftest, "omega", geometry.omega)
    results = selftest.run(quick=True)
    assert not all(r.ok for r in results)
