"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numeric or
domain error. Batch commands write into ``<out>/<command>-<config hash>/``
via a staging directory that is renamed into place only once every file,
including ``manifest.txt``, has been written.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import experiments
from . import io as sio
from .config import Config, load_config
from .engine import init_state, run
from .errors import DomainError, FormatError
from .habitats import generate_cross
from .model import Habitat
from .similarity import Window, stat_similarity, ulam_similarity

log = logging.getLogger("swarmmap")

OUTPUT_ROOT_ENV = "SWARMMAP_OUTPUT_ROOT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swarmmap", description="Ant colony simulator on grey-level habitats.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    for name, help_text in (
        ("run", "simulate one colony and export maps and metrics"),
        ("sweep", "beta/delta phase sweep on a constant habitat"),
        ("cross", "cross perception experiment"),
        ("transition", "habitat transition (memory) experiment"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="configuration file (key = value)")
        cmd.add_argument("--seed", type=int, help="override the configured seed")
        cmd.add_argument("--out", help=f"output root (default ${OUTPUT_ROOT_ENV} or ./runs)")

    metric = sub.add_parser("metric", help="compare two PGM windows with both similarity measures")
    metric.add_argument("first")
    metric.add_argument("second")
    metric.add_argument("--weights", nargs=3, type=float, metavar=("A", "B", "C"),
                        default=(1 / 3, 1 / 3, 1 / 3))

    gen = sub.add_parser("gen-cross", help="write a synthetic cross habitat as PGM")
    gen.add_argument("output")
    gen.add_argument("--config", help="take geometry from a configuration file")
    gen.add_argument("--width", type=int)
    gen.add_argument("--height", type=int)
    gen.add_argument("--arm", type=int, help="arm thickness")
    gen.add_argument("--sizes", type=int, nargs="+", help="square sizes")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--background", type=int)
    gen.add_argument("--inverted", action="store_true")
    gen.add_argument("--mask", help="also write the figure mask as a 0/255 PGM")
    return parser


def build_habitat(cfg: Config, which: str = "habitat"):
    """Habitat and target mask (None for file habitats) named by a config key."""
    choice = getattr(cfg, which)
    dims = (cfg.height, cfg.width)
    if choice == "constant":
        return Habitat.constant(cfg.height, cfg.width, cfg.background), None
    if choice in ("cross", "inverted-cross"):
        return generate_cross(
            dims, cfg.arm_thickness, cfg.square_sizes, cfg.cross_seed,
            cfg.background, inverted=choice == "inverted-cross",
        )
    return sio.read_pgm(cfg.resolve_path(choice).read_bytes()), None


def atomic_write(path: Path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest(command: str, cfg: Config, files: dict) -> bytes:
    lines = [
        f"command = {command}",
        f"config_hash = {cfg.hash()}",
        f"seed = {cfg.seed}",
        f"files = {len(files)}",
        "",
    ]
    lines += [f"{hashlib.sha256(files[name]).hexdigest()}  {name}" for name in sorted(files)]
    return ("\n".join(lines) + "\n").encode("ascii")


def publish(out_root: Path, command: str, cfg: Config, files: dict) -> Path:
    """Write ``files`` plus a manifest into the run directory, all or nothing."""
    out_root.mkdir(parents=True, exist_ok=True)
    final = out_root / f"{command}-{cfg.hash()}"
    staging = Path(tempfile.mkdtemp(dir=out_root, prefix=".staging-"))
    try:
        for name, data in files.items():
            (staging / name).write_bytes(data)
        (staging / "manifest.txt").write_bytes(manifest(command, cfg, files))
        if final.exists():
            trash = Path(tempfile.mkdtemp(dir=out_root, prefix=".old-"))
            os.replace(final, trash / final.name)
            os.replace(staging, final)
            shutil.rmtree(trash)
        else:
            os.replace(staging, final)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return final


def _seeds(cfg: Config):
    return range(cfg.seed, cfg.seed + cfg.reps)


def cmd_run(cfg: Config) -> dict:
    habitat, mask = build_habitat(cfg)
    params = cfg.params_for(habitat.shape)
    state = init_state(habitat, params, cfg.seed)
    result = run(state, cfg.steps, cfg.snapshot_every, mask=mask, keep_fields=cfg.save_snapshots)
    tag = cfg.hash()
    files = {f"config-{tag}.cfg": cfg.canonical().encode("ascii")}
    files.update(experiments.final_map_artifacts(tag, state.field.sigma, result.records))
    for t, sigma in result.snapshots:
        files[f"field-{tag}-t{t:06d}.swrm"] = sio.write_field_raw(sigma)
    last = result.records[-1]
    print(f"t = {last.t}  total = {last.total_pheromone:.6g}  entropy = {last.spatial_entropy:.6g}")
    return files


def cmd_sweep(cfg: Config) -> dict:
    params = cfg.params_for((cfg.height, cfg.width))
    result = experiments.sweep_phase(
        cfg.beta_list, cfg.delta_list, cfg.steps, _seeds(cfg), params,
        (cfg.height, cfg.width), cfg.baseline_t, cfg.order_threshold, cfg.background,
    )
    for delta in result.deltas:
        row = " ".join("#" if result.ordered(b, delta) else "." for b in result.betas)
        print(f"delta = {delta:<6g} {row}")
    print(f"beta-monotone: {result.beta_monotone()}")
    tag = cfg.hash()
    return {f"config-{tag}.cfg": cfg.canonical().encode("ascii"), f"sweep-{tag}.csv": result.to_csv()}


def cmd_cross(cfg: Config) -> dict:
    habitat, mask = build_habitat(cfg)
    if mask is None:
        raise DomainError("cross needs habitat = cross or inverted-cross")
    params = cfg.params_for(habitat.shape)
    result = experiments.cross_perception(
        habitat, mask, params, cfg.steps, _seeds(cfg), cfg.snapshot_every or cfg.steps
    )
    print(f"median on-target ratio at t = {cfg.steps}: {result.median_ratio:.6g}")
    tag = cfg.hash()
    files = {f"config-{tag}.cfg": cfg.canonical().encode("ascii")}
    files.update(experiments.cross_artifacts(result, tag))
    return files


def cmd_transition(cfg: Config) -> dict:
    habitat_a, _ = build_habitat(cfg, "habitat")
    habitat_b, mask_b = build_habitat(cfg, "habitat_b")
    if mask_b is None:
        raise DomainError("transition needs habitat_b = cross or inverted-cross")
    params = cfg.params_for(habitat_a.shape)
    result = experiments.habitat_transition(
        habitat_a, habitat_b, mask_b, params, cfg.swap_t, _seeds(cfg),
        cfg.on_threshold, cfg.max_adapt_steps,
    )
    slower, untied, pvalue = result.sign_test()
    print(f"median steps after learning = {result.median_after_learning:g}, "
          f"from scratch = {result.median_from_scratch:g}, sign test p = {pvalue:.4g}")
    tag = cfg.hash()
    return {f"config-{tag}.cfg": cfg.canonical().encode("ascii"), f"transition-{tag}.csv": result.to_csv()}


def cmd_metric(args) -> int:
    first = Window(sio.read_pgm(Path(args.first).read_bytes()).grey)
    second = Window(sio.read_pgm(Path(args.second).read_bytes()).grey)
    a, b, c = args.weights
    print(f"lambda_stat = {stat_similarity(first, second, a, b, c)!r}")
    print(f"lambda_ulam = {ulam_similarity(first, second)!r}")
    return 0


def cmd_gen_cross(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    width = args.width or cfg.width
    height = args.height or cfg.height
    habitat, mask = generate_cross(
        (height, width),
        args.arm or cfg.arm_thickness,
        args.sizes or cfg.square_sizes,
        cfg.cross_seed if args.seed is None else args.seed,
        cfg.background if args.background is None else args.background,
        inverted=args.inverted,
    )
    atomic_write(Path(args.output), sio.write_pgm(habitat))
    if args.mask:
        atomic_write(Path(args.mask), sio.write_pgm(mask.astype(np.uint8) * 255))
    return 0


BATCH = {"run": cmd_run, "sweep": cmd_sweep, "cross": cmd_cross, "transition": cmd_transition}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        print(f"swarmmap: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1

    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "metric":
            return cmd_metric(args)
        if args.command == "gen-cross":
            return cmd_gen_cross(args)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        log.info("%s with config hash %s", args.command, cfg.hash())
        files = BATCH[args.command](cfg)
        out_root = Path(args.out or os.environ.get(OUTPUT_ROOT_ENV, "runs"))
        final = publish(out_root, args.command, cfg, files)
        print(f"wrote {final}")
        return 0
    except (FormatError, OSError) as exc:
        print(f"swarmmap: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ArithmeticError) as exc:
        print(f"swarmmap: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
