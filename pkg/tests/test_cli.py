"""End-to-end command-line runs: exit codes, files, headers, determinism."""

import numpy as np
import pytest

import cnls
from cnls.cli import main
from cnls.fieldio import read_fields, write_fields

BENCH = """
seed = 42

[problem]
n_dims = 1
ell = 1
family = "scalar_cubic"

[grid]
points = [256]
lengths = [40.0]

[constraints]
c = [2.0]

[dynamics]
dt = 1e-3
t_final = 0.5
sample_every = 50
snapshot_times = [0.5]

[stability]
deltas = [1e-3, 1e-2]
seeds = [1]
t_final = 0.5
sample_every = 100

[output]
directory = "PLACEHOLDER"
plots = true
"""


@pytest.fixture()
def config_path(tmp_path):
    out = tmp_path / "out"
    path = tmp_path / "bench.toml"
    path.write_text(BENCH.replace("PLACEHOLDER", str(out)))
    return path, out


def test_groundstate_success(config_path, capsys):
    path, out = config_path
    assert main(["groundstate", str(path)]) == 0
    assert (out / "groundstate" / "groundstate.nlsf").exists()
    meta = (out / "groundstate" / "groundstate_meta.txt").read_text()
    assert "# cnls" in meta
    assert "# seed = 42" in meta
    assert "converged = True" in meta
    value = float([line for line in meta.splitlines()
                   if line.startswith("value =")][0].split("=")[1])
    assert value == pytest.approx(-2.0 / 3.0, abs=1e-5)
    assert (out / "groundstate" / "groundstate_profile.png").exists()
    assert "constrained minimum" in capsys.readouterr().out


def test_groundstate_free_field_not_attained(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out))
    cfg = cfg.replace('family = "scalar_cubic"', 'family = "free"')
    cfg += "\n[solver]\nmax_iterations = 400\n"
    path = tmp_path / "free.toml"
    path.write_text(cfg)
    assert main(["groundstate", str(path)]) == 1


def test_groundstate_invalid_constraint(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out)).replace("c = [2.0]", "c = [-1.0]")
    path = tmp_path / "bad.toml"
    path.write_text(cfg)
    assert main(["groundstate", str(path)]) == 2


def test_evolve_soliton(config_path):
    path, out = config_path
    assert main(["groundstate", str(path)]) == 0
    dump = out / "groundstate" / "groundstate.nlsf"
    assert main(["evolve", str(path), str(dump)]) == 0
    csv = (out / "evolve" / "trajectory.csv").read_text().splitlines()
    assert csv[3] == "t,Q_1,E"
    rows = [line.split(",") for line in csv[4:]]
    q = np.array([float(r[1]) for r in rows])
    assert np.max(np.abs(q - q[0]) / q[0]) <= 1e-12
    assert (out / "evolve" / "snapshot_00.nlsf").exists()
    summary = (out / "evolve" / "evolve_summary.txt").read_text()
    assert "status = completed" in summary


def test_evolve_zero_field(config_path, tmp_path):
    path, out = config_path
    grid = cnls.Grid((256,), (40.0,))
    zero = cnls.FieldVector.from_arrays(grid, [np.zeros(256, dtype=complex)])
    dump = tmp_path / "zero.nlsf"
    write_fields(dump, zero)
    assert main(["evolve", str(path), str(dump)]) == 0
    csv = (out / "evolve" / "trajectory.csv").read_text().splitlines()
    data = [line.split(",") for line in csv[4:]]
    assert all(float(r[1]) == 0.0 and float(r[2]) == 0.0 for r in data)


def test_evolve_component_mismatch(config_path, tmp_path):
    path, _ = config_path
    grid = cnls.Grid((256,), (40.0,))
    two = cnls.FieldVector.from_arrays(
        grid, [np.zeros(256, dtype=complex)] * 2)
    dump = tmp_path / "two.nlsf"
    write_fields(dump, two)
    assert main(["evolve", str(path), str(dump)]) == 2


def test_evolve_grid_mismatch(config_path, tmp_path):
    path, _ = config_path
    grid = cnls.Grid((128,), (40.0,))
    dump = tmp_path / "small.nlsf"
    write_fields(dump, cnls.FieldVector.from_arrays(
        grid, [np.zeros(128, dtype=complex)]))
    assert main(["evolve", str(path), str(dump)]) == 2


def test_evolve_unreadable_dump(config_path, tmp_path):
    path, _ = config_path
    bad = tmp_path / "bad.nlsf"
    bad.write_bytes(b"garbage")
    assert main(["evolve", str(path), str(bad)]) == 2


def test_stability_sweep(config_path):
    path, out = config_path
    assert main(["stability", str(path)]) == 0
    sweep = (out / "stability" / "sweep.csv").read_text().splitlines()
    assert sweep[3] == "delta,eps"
    rows = [tuple(map(float, line.split(","))) for line in sweep[4:]]
    assert len(rows) == 2
    assert rows[0][1] <= rows[1][1]  # monotone response
    assert (out / "stability" / "distance_d0.001_s1.csv").exists()
    assert (out / "stability" / "sweep.png").exists()


def test_stability_empty_deltas(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out))
    cfg = cfg.replace("deltas = [1e-3, 1e-2]", "deltas = []")
    path = tmp_path / "s.toml"
    path.write_text(cfg)
    assert main(["stability", str(path)]) == 2


def test_stability_upstream_failure(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out))
    cfg = cfg.replace('family = "scalar_cubic"', 'family = "free"')
    cfg += "\n[solver]\nmax_iterations = 400\n"
    path = tmp_path / "s.toml"
    path.write_text(cfg)
    assert main(["stability", str(path)]) == 1


def test_check_passes_with_hypotheses(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out))
    cfg = cfg.replace('family = "scalar_cubic"', 'family = "manakov"')
    cfg = cfg.replace("ell = 1", "ell = 2")
    cfg = cfg.replace("c = [2.0]", "c = [1.4142135623730951, 1.4142135623730951]")
    cfg += "\n[problem.hypothesis]\nK = 0.5\nell1 = 2.0\n"
    path = tmp_path / "c.toml"
    path.write_text(cfg)
    assert main(["check", str(path)]) == 0
    report = (out / "check" / "check_report.csv").read_text()
    assert "H0,pass" in report
    assert "H4,pass" in report


def test_check_inconsistent_fixture_fails(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out))
    cfg = cfg.replace('family = "scalar_cubic"', 'family = "inconsistent_fixture"')
    path = tmp_path / "c.toml"
    path.write_text(cfg)
    assert main(["check", str(path)]) == 1


def test_check_missing_limit_family(tmp_path):
    out = tmp_path / "out"
    cfg = BENCH.replace("PLACEHOLDER", str(out))
    cfg += "\n[problem.hypothesis]\nGamma = 2.0\n"
    path = tmp_path / "c.toml"
    path.write_text(cfg)
    assert main(["check", str(path)]) == 2


def test_diag_benchmark(config_path, capsys):
    path, out = config_path
    assert main(["diag", str(path)]) == 0
    report = (out / "diag" / "diag_report.txt").read_text()
    assert "coercivity-exponent" in report
    # the constraint-exponent for quadratic growth in one dimension is 6
    assert "6.000000e+00" in report
    assert (out / "diag" / "diag_report.csv").exists()


def test_seed_override_changes_header(config_path):
    path, out = config_path
    assert main(["groundstate", str(path), "--seed", "9"]) == 0
    meta = (out / "groundstate" / "groundstate_meta.txt").read_text()
    assert "# seed = 9" in meta


def test_reruns_byte_identical(config_path, tmp_path):
    path, _ = config_path
    a, b = tmp_path / "A", tmp_path / "B"
    assert main(["groundstate", str(path), "--output-dir", str(a)]) == 0
    assert main(["groundstate", str(path), "--output-dir", str(b)]) == 0
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b and files_a
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "cnls" in capsys.readouterr().out
