import hashlib
from pathlib import Path

import numpy as np
import pytest

from swarmmap import io as sio
from swarmmap.cli import main
from swarmmap.habitats import generate_cross
from swarmmap.model import Habitat

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL_RUN = """
habitat = cross
width = 20
height = 20
arm_thickness = 6
n_ants = 30
p = 1
eta = 0.01
coupling = contrast
steps = 40
snapshot_every = 10
save_snapshots = true
"""


def tree_digest(root: Path) -> dict:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["run"]) == 1
    assert "usage" in capsys.readouterr().err


def test_metric_identical(tmp_path, capsys):
    pgm = sio.write_pgm(Habitat(np.arange(9).reshape(3, 3) * 7))
    (tmp_path / "a.pgm").write_bytes(pgm)
    (tmp_path / "b.pgm").write_bytes(pgm)
    assert main(["metric", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["lambda_stat = 1.0", "lambda_ulam = 1.0"]


def test_metric_reversed(tmp_path, capsys):
    (tmp_path / "a.pgm").write_bytes(sio.write_pgm(Habitat(np.arange(9).reshape(3, 3))))
    (tmp_path / "b.pgm").write_bytes(sio.write_pgm(Habitat(np.arange(9)[::-1].reshape(3, 3))))
    assert main(["metric", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm"), "--weights", "0", "0", "1"]) == 0
    assert "lambda_ulam = 0.0" in capsys.readouterr().out


def test_metric_bad_file(tmp_path, capsys):
    (tmp_path / "a.pgm").write_bytes(b"P5 3 3 255\n" + bytes(4))
    assert main(["metric", str(tmp_path / "a.pgm"), str(tmp_path / "a.pgm")]) == 2
    assert main(["metric", str(tmp_path / "missing.pgm"), str(tmp_path / "a.pgm")]) == 2
    assert "swarmmap:" in capsys.readouterr().err


def test_metric_bad_weights(tmp_path):
    pgm = sio.write_pgm(Habitat.constant(3, 3))
    (tmp_path / "a.pgm").write_bytes(pgm)
    assert main(["metric", str(tmp_path / "a.pgm"), str(tmp_path / "a.pgm"), "--weights", "0.5", "0.5", "0.5"]) == 3


def test_run_twice_is_byte_identical(tmp_path):
    cfg = write(tmp_path / "small.cfg", SMALL_RUN)
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b")]) == 0
    (dir_a,) = (tmp_path / "a").iterdir()
    (dir_b,) = (tmp_path / "b").iterdir()
    assert dir_a.name == dir_b.name and dir_a.name.startswith("run-")
    assert tree_digest(dir_a) == tree_digest(dir_b)
    names = {p.name for p in dir_a.iterdir()}
    tag = dir_a.name[len("run-"):]
    assert f"map-{tag}.pgm" in names and f"metrics-{tag}.csv" in names
    assert f"field-{tag}-t000040.swrm" in names
    records = sio.read_metrics_csv((dir_a / f"metrics-{tag}.csv").read_bytes())
    assert [r.t for r in records] == [0, 10, 20, 30, 40]


def test_manifest_lists_every_file_once(tmp_path):
    cfg = write(tmp_path / "small.cfg", SMALL_RUN)
    assert main(["run", str(cfg), "--seed", "3", "--out", str(tmp_path)]) == 0
    (run_dir,) = [p for p in tmp_path.iterdir() if p.is_dir()]
    manifest = (run_dir / "manifest.txt").read_text().splitlines()
    assert "seed = 3" in manifest
    assert f"config_hash = {run_dir.name[4:]}" in manifest
    table = [line.split("  ") for line in manifest[manifest.index("") + 1:]]
    listed = [name for _, name in table]
    on_disk = sorted(p.name for p in run_dir.iterdir() if p.name != "manifest.txt")
    assert sorted(listed) == on_disk and len(set(listed)) == len(listed)
    for digest, name in table:
        assert hashlib.sha256((run_dir / name).read_bytes()).hexdigest() == digest


def test_output_root_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path / "small.cfg", SMALL_RUN.replace("steps = 40", "steps = 5"))
    monkeypatch.setenv("SWARMMAP_OUTPUT_ROOT", str(tmp_path / "env"))
    assert main(["run", str(cfg)]) == 0
    assert len(list((tmp_path / "env").glob("run-*"))) == 1


def test_seed_override_changes_output_dir(tmp_path):
    cfg = write(tmp_path / "small.cfg", SMALL_RUN.replace("steps = 40", "steps = 5"))
    assert main(["run", str(cfg), "--seed", "1", "--out", str(tmp_path / "o")]) == 0
    assert main(["run", str(cfg), "--seed", "2", "--out", str(tmp_path / "o")]) == 0
    assert len(list((tmp_path / "o").iterdir())) == 2


def test_bad_config_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["run", str(write(tmp_path / "a.cfg", "gamma = 1\n")), "--out", out]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.cfg"), "--out", out]) == 2
    cfg = write(tmp_path / "b.cfg", "habitat = constant\nsteps = 2\n")
    assert main(["cross", str(cfg), "--out", out]) == 3
    assert not (tmp_path / "o").exists() or not any((tmp_path / "o").iterdir())


def test_failed_run_leaves_no_output(tmp_path):
    cfg = write(tmp_path / "c.cfg", "habitat = nothere.pgm\nsteps = 2\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_run_on_pgm_habitat(tmp_path):
    (tmp_path / "h.pgm").write_bytes(sio.write_pgm(Habitat(np.arange(100).reshape(10, 10))))
    cfg = write(tmp_path / "c.cfg", "habitat = h.pgm\nsteps = 5\nn_ants = 5\np = 1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_gen_cross(tmp_path):
    out, mask = tmp_path / "cross.pgm", tmp_path / "mask.pgm"
    args = ["gen-cross", str(out), "--width", "30", "--height", "20", "--arm", "6", "--seed", "2", "--mask", str(mask)]
    assert main(args) == 0
    habitat = sio.read_pgm(out.read_bytes())
    want, want_mask = generate_cross((20, 30), 6, (2, 3, 4), 2)
    assert habitat == want
    assert np.array_equal(sio.read_pgm(mask.read_bytes()).grey == 255, want_mask)
    assert main(["gen-cross", str(out), "--arm", "500"]) == 3


@pytest.mark.parametrize("name", ["run", "sweep", "cross", "transition", "cross-contrast", "transition-contrast"])
def test_shipped_configs_parse(name):
    from swarmmap.config import load_config

    cfg = load_config(CONFIGS / f"{name}.cfg")
    assert cfg.steps == 1000


def test_small_experiment_commands(tmp_path, capsys):
    base = "width = 20\nheight = 20\nn_ants = 20\nsteps = 20\nreps = 2\n"
    sweep = write(tmp_path / "s.cfg", base + "beta_list = 0, 3\ndelta_list = 0.2\nbaseline_t = 5\n")
    cross = write(tmp_path / "c.cfg", base + "habitat = cross\narm_thickness = 6\np = 1\ncoupling = contrast\n")
    trans = write(
        tmp_path / "t.cfg",
        base + "habitat = cross\narm_thickness = 6\np = 1\neta = 0.01\ncoupling = contrast\n"
        "swap_t = 10\nmax_adapt_steps = 20\n",
    )
    for cmd, cfg in (("sweep", sweep), ("cross", cross), ("transition", trans)):
        assert main([cmd, str(cfg), "--out", str(tmp_path / "o")]) == 0
        (run_dir,) = (tmp_path / "o").glob(f"{cmd}-*")
        assert (run_dir / "manifest.txt").exists()
    out = capsys.readouterr().out
    assert "beta-monotone" in out and "median on-target ratio" in out and "sign test" in out
