import subprocess
import sys

import pytest

from prioplan.cli import main

MAP_1x5 = "height 1\nwidth 5\n.....\n"
CROSS_MAP = "height 5\nwidth 5\n.....\n.....\n.....\n.....\n.....\n"


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_solve_single_robot(files, tmp_path, capsys):
    m = files("row.map", MAP_1x5)
    s = files("one.scen", "agents 1\n0 0 0 4 0\n")
    out = str(tmp_path / "one.sol")
    assert main(["solve", m, s, "-o", out]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert last.startswith("SR=1 t=") and "Msp=4.000 Flt=4.000 attempts=1" in last
    assert main(["validate", m, s, out]) == 0


def test_corridor_swap_exits_2(files, capsys):
    m = files("row.map", MAP_1x5)
    s = files("swap.scen", "agents 2\n0 0 0 4 0\n1 4 0 0 0\n")
    assert main(["solve", m, s, "--method", "det"]) == 2
    assert "attempts=2" in capsys.readouterr().out


def test_bad_map_exits_1(files, capsys):
    m = files("bad.map", "height 1\nwidth 5\n..x..\n")
    s = files("one.scen", "agents 1\n0 0 0 4 0\n")
    assert main(["solve", m, s]) == 1
    assert "line 3" in capsys.readouterr().err


def test_validate_exit_codes(files, tmp_path, capsys):
    m = files("cross.map", CROSS_MAP)
    s = files("cross.scen", "agents 2\n0 0 2 4 2\n1 2 0 2 4\n")
    sol = tmp_path / "cross.sol"
    assert main(["solve", m, s, "-o", str(sol)]) == 0
    assert main(["validate", m, s, str(sol)]) == 0
    # the waiting robot now leaves 5 time units early and meets the other head on
    lines = sol.read_text().splitlines()
    assert "; " in lines[1]
    perturbed = [lines[0], "1: (2.000000,0.000000,0.000000); (2.000000,1.000000,1.000000); "
                           "(2.000000,2.000000,2.000000); (2.000000,3.000000,3.000000); "
                           "(2.000000,4.000000,4.000000)"]
    bad = files("bad.sol", "\n".join(perturbed) + "\n")
    capsys.readouterr()
    assert main(["validate", m, s, bad]) == 2
    assert "pairwise" in capsys.readouterr().out
    empty = files("empty.sol", "")
    assert main(["validate", m, s, empty]) == 1


def test_time_perturbation_is_caught(files, tmp_path):
    m = files("cross.map", CROSS_MAP)
    s = files("cross.scen", "agents 2\n0 0 2 4 2\n1 2 0 2 4\n")
    sol = tmp_path / "cross.sol"
    assert main(["solve", m, s, "-o", str(sol)]) == 0
    text = sol.read_text()
    head, tail = text.splitlines()[1].rsplit("; ", 1)
    x, y, t = tail.strip("()").split(",")
    moved = f"{head}; ({x},{y},{float(t) + 5:.6f})"
    bad = files("late.sol", text.splitlines()[0] + "\n" + moved + "\n")
    assert main(["validate", m, s, bad]) == 2


def test_bench_writes_identical_csvs(tmp_path, capsys):
    args = ["bench", "--map", "empty:8x8", "--agents", "4", "--instances", "2",
            "--ssi", "0,3,inf", "--methods", "none,det,rand", "--repeats", "2", "--seed", "5", "--time-cap", "0.5"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("bench_runs.csv", "bench_aggregate.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    runs = (tmp_path / "a" / "bench_runs.csv").read_text().splitlines()
    assert len(runs) == 1 + 3 * (2 + 2 + 4)
    assert {line.split(",")[2] for line in runs[1:]} == {"0", "3", "inf"}


def test_bench_config_file_and_seed_requirement(files, tmp_path, capsys):
    cfg = files("cfg.json", '{"map": "empty:6x6", "agents": [2], "instances": 2, '
                            '"ssi": [0, "inf"], "methods": ["none"], "seed": 9}')
    assert main(["bench", "--config", cfg, "--out-dir", str(tmp_path)]) == 0
    assert len((tmp_path / "bench_runs.csv").read_text().splitlines()) == 5
    assert main(["bench", "--map", "empty:6x6", "--agents", "2"]) == 1
    assert "--seed" in capsys.readouterr().err


def test_bench_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["bench", "--agents", "1", "--instances", "1", "--seed", "0",
                 "--out-dir", str(blocker / "sub")]) == 1


def test_console_script_entry_point(files):
    m = files("row.map", MAP_1x5)
    s = files("one.scen", "agents 1\n0 0 0 4 0\n")
    proc = subprocess.run([sys.executable, "-m", "prioplan.cli", "solve", m, s],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("SR=1")
