"""CLI surface tests: subcommands, config files, exit codes, dumps."""

import csv
import io
import struct
from contextlib import redirect_stdout

import numpy as np
import pytest

from gffperc.cli import main
from gffperc.experiments import CSV_FIELDS
from gffperc.gff import make_sampler
from gffperc.lattice import make_box
from gffperc.potential import arcsin_two_point, hitting_probability, killed_green


def _run(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def test_greens_subcommand_matches_library():
    code, out = _run(["greens", "--d", "3", "--N", "4",
                      "--pairs", "0,0,0:2,0,0;0,0,0:1,1,0"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    box = make_box(3, 4, 1.0)
    g = killed_green(box, box.shell())
    x, y = box.origin, int(box.index((2, 0, 0)))
    assert float(rows[0]["G_D"]) == pytest.approx(g.green(x, y), rel=1e-9)
    assert float(rows[0]["hitting"]) == pytest.approx(hitting_probability(g, x, y), rel=1e-9)
    assert float(rows[0]["arcsin_pred"]) == pytest.approx(arcsin_two_point(g, x, y), rel=1e-9)


def test_greens_with_extra_absorbing_vertex():
    code, out = _run(["greens", "--d", "3", "--N", "3",
                      "--absorb-point", "1,1,1", "--pairs", "0,0,0:1,0,0"])
    assert code == 0
    box = make_box(3, 3, 1.0)
    D = np.zeros(box.n_vertices, dtype=bool)
    D[box.shell()] = True
    D[box.index((1, 1, 1))] = True
    g = killed_green(box, D)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["G_D"]) == pytest.approx(
        g.green(box.origin, int(box.index((1, 0, 0)))), rel=1e-9)


def test_sample_dump_layout(tmp_path):
    out = tmp_path / "fields.bin"
    code, _ = _run(["sample", "--d", "3", "--N", "2", "--pad", "1",
                    "--seed", "5", "--count", "3", "--out", str(out)])
    assert code == 0
    raw = out.read_bytes()
    d, side, count = struct.unpack("<3q", raw[:24])
    assert (d, side, count) == (3, 5, 3)
    vals = np.frombuffer(raw[24:], dtype="<f8").reshape(count, side**3)
    box = make_box(3, 2, 1)
    sampler = make_sampler(box)
    for r in range(3):
        assert np.array_equal(vals[r], sampler.sample(5, r).values)


def test_one_arm_subcommand_with_config(tmp_path):
    cfg = tmp_path / "spec.cfg"
    cfg.write_text("""
# one-arm scaling probe
observable = one_arm
d = 3
N = 2,3
pad = 2.0
seed = 33
replicas = 80
""")
    code, out = _run(["run", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "one_arm.csv") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    assert header == list(CSV_FIELDS)
    assert len(rows) == 2
    assert rows[0][CSV_FIELDS.index("seed")] == "33"


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "spec.cfg"
    cfg.write_text("observable = one_arm\nN = 2\npad = 2\nreplicas = 40\nseed = 1\n")
    code, _ = _run(["run", "--config", str(cfg), "--seed", "77",
                    "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "one_arm.csv") as fh:
        row = list(csv.DictReader(fh))[0]
    assert row["seed"] == "77"


def test_env_seed_overrides_config(tmp_path, monkeypatch):
    cfg = tmp_path / "spec.cfg"
    cfg.write_text("observable = one_arm\nN = 2\npad = 2\nreplicas = 40\nseed = 1\n")
    monkeypatch.setenv("GFFPERC_SEED", "55")
    code, _ = _run(["run", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "one_arm.csv") as fh:
        row = list(csv.DictReader(fh))[0]
    assert row["seed"] == "55"


def test_bad_config_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("observable = nonsense\nN = 2\n")
    code, _ = _run(["run", "--config", str(cfg)])
    assert code == 2
    cfg.write_text("observable = one_arm\nwibble = 3\n")
    assert _run(["run", "--config", str(cfg)])[0] == 2
    cfg.write_text("observable = one_arm\nno equals sign here\n")
    assert _run(["run", "--config", str(cfg)])[0] == 2


def test_missing_observable_exits_2(tmp_path):
    cfg = tmp_path / "none.cfg"
    cfg.write_text("N = 4\n")
    assert _run(["run", "--config", str(cfg)])[0] == 2


def test_pivotal_subcommand_emits_replica_csv(tmp_path):
    code, _ = _run(["pivotal", "--d", "3", "--N", "2", "--pad", "2",
                    "--delta", "0.5", "--seed", "21", "--replicas", "50",
                    "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "pivotal_replicas.csv") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    assert header == ["N", "replica", "one_arm", "n_pivotal",
                      "het_same_sign", "het_opposite"]
    assert len(rows) == 50
    with open(tmp_path / "pivotal.csv") as fh:
        srows = list(csv.DictReader(fh))
    assert srows[0]["observable"] == "pivotal"


def test_mindist_subcommand(tmp_path):
    code, out = _run(["mindist", "--d", "3", "--N", "3", "--pad", "1.5",
                      "--delta", "0.5", "--k", "4", "--seed", "2",
                      "--replicas", "60", "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "mindist_cdf.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5
    assert {r["observable"] for r in rows} == {"mindist_cdf"}
