import csv
import io
import json

import numpy as np
import pytest

from mrorka.cli import main
from mrorka.dataio import path_from_document, read_grid


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def grid10(tmp_path, capsys):
    f = tmp_path / "d.orka"
    code, _, _ = run(["generate", "--M", "128", "--N", "40", "--alpha", "10", "--s", "10",
                      "--out", str(f)], capsys)
    assert code == 0
    return f


def test_generate(grid10):
    D = read_grid(grid10)
    assert D.shape == (128, 40)
    for k in range(1, 41):
        assert np.argmax(D[:, k - 1]) == (64 + 10 * k) % 128


def test_generate_static(tmp_path, capsys):
    f = tmp_path / "s0.csv"
    assert run(["generate", "--M", "16", "--N", "5", "--s", "0", "--out", str(f)], capsys)[0] == 0
    D = read_grid(f)
    assert np.all(D == D[:, [0]])


def test_generate_requires_output(capsys):
    with pytest.raises(SystemExit) as err:
        main(["generate", "--M", "16"])
    assert err.value.code == 2


def test_track_modes(grid10, tmp_path, capsys):
    single = tmp_path / "orka.json"
    multi = tmp_path / "multi.json"
    assert run(["track", "--mode", "orka", "--C", "10", "--K", "3", "--out", str(single),
                str(grid10)], capsys)[0] == 0
    assert run(["track", "--Cprime", "10", "--K", "3", "--J", "0", "--out", str(multi),
                str(grid10)], capsys)[0] == 0
    a = json.loads(single.read_text())["objects"][0]
    b = json.loads(multi.read_text())["objects"][0]
    np.testing.assert_array_equal(np.diff(path_from_document(a["path"]).entries), 10)
    np.testing.assert_array_equal(path_from_document(b["path"]).entries,
                                  path_from_document(a["path"]).entries)
    assert b["nodes"] < a["nodes"]


def test_track_bounds_and_objects(grid10, capsys):
    code, out, _ = run(["track", "--Cprime", "10", "--K", "2", "--J", "1", "--bounds",
                        "--objects", "2", "--threshold", "1e-6", str(grid10)], capsys)
    assert code == 0
    doc = json.loads(out)
    obj = doc["objects"][0]
    assert obj["path"]["denominator"] == 2
    assert [b["level"] for b in obj["bounds"]] == [2, 1, 0, -1]
    assert obj["bounds"][-1]["rhs14"] == 0


def test_track_errors(grid10, tmp_path, capsys):
    code, _, err = run(["track", str(tmp_path / "missing.orka")], capsys)
    assert code == 1 and "error" in err
    code, _, err = run(["track", "--mode", "orka", "--C", "10", "--K", "8", str(grid10)], capsys)
    assert code == 1 and "multiresolution" in err
    code, _, err = run(["track", "--L", "9", str(grid10)], capsys)
    assert code == 1 and "maximal feasible level: 7" in err
    bad = tmp_path / "bad.orka"
    bad.write_bytes(b"NOPE" + bytes(20))
    code, _, err = run(["track", str(bad)], capsys)
    assert code == 1 and "magic" in err


def test_bench_runtime_node_ratios(capsys):
    argv = ["bench", "--experiment", "runtime", "--M", "64", "--N", "128", "--C", "3",
            "--K", "1,2,3", "--metric", "nodes", "--seed", "7"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    rows = rows_of(out)
    assert rows[0] == ["experiment", "variant", "param", "value"]
    nodes = {(r[1], int(r[2])): int(r[3]) for r in rows[1:]}
    for K in (2, 3):
        assert nodes["multires", K] / nodes["multires", K - 1] == pytest.approx(3, rel=0.05)
        assert nodes["orka", K] / nodes["orka", K - 1] == pytest.approx(7, rel=0.05)
    # the seed only changes the job order, never the output
    assert run(argv[:-1] + ["99"], capsys)[1] == out


def test_bench_upsampling_rows(capsys):
    code, out, _ = run(["bench", "--experiment", "upsampling", "--M", "64", "--N", "48",
                        "--K", "3", "--J", "0,1,2"], capsys)
    assert code == 0
    rows = rows_of(out)[1:]
    assert [(r[1], r[2]) for r in rows] == [("orka", "0"), ("multires", "0"), ("multires", "1"),
                                            ("multires", "2")]
    assert all(float(r[3]) >= 0 for r in rows)


def test_bench_localization_wide_kernel(tmp_path, capsys):
    out = tmp_path / "loc.csv"
    code, _, _ = run(["bench", "--experiment", "localization", "--M", "128", "--N", "32",
                      "--K", "3", "--alpha", "10", "--out", str(out)], capsys)
    assert code == 0
    rows = rows_of(out.read_text())
    assert rows[1] == ["localization", "multires-K3", "10.0", "0.0"]


def test_unknown_experiment(capsys):
    with pytest.raises(SystemExit) as err:
        main(["bench", "--experiment", "nope"])
    assert err.value.code == 2
