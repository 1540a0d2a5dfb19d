"""Command line entry point: ``lpm run <experiment> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, build_config, load_config_file
from .harness import run_maze_coverage, run_mnist_convergence, run_theorem_verify

log = logging.getLogger("lpm")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _str_list(text: str) -> list[str]:
    return [x for x in text.replace(",", " ").split() if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpm", description="Learning-progress exploration experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="YAML file with flat dotted keys")
    run.add_argument("--seed-list", type=_int_list, help="seeds, e.g. 0,1,2")
    run.add_argument("--out", help="output directory")
    run.add_argument("--explorer", type=_str_list, help="explorer name(s), comma separated")
    run.add_argument("--noise-mode", type=_str_list, help="noise mode(s), comma separated")
    run.add_argument("--total-steps", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--max-wall-seconds", type=float)
    run.add_argument("--debug-frames", type=int, metavar="K",
                     help="dump the first K observations of each run as PGM files")
    run.add_argument("--instances", type=int, help="grid count for theorem_verify")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override any dotted config key, e.g. agent.beta=0.5")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def _parse_value(text: str):
    import yaml

    return yaml.safe_load(text)


def config_from_args(args):
    flat = load_config_file(args.config) if args.config else {}
    flat["experiment"] = args.experiment
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        flat[key.strip()] = _parse_value(value)
    flags = {
        "seeds": args.seed_list, "out_dir": args.out, "explorers": args.explorer,
        "noise_modes": args.noise_mode, "total_steps": args.total_steps, "workers": args.workers,
        "max_wall_seconds": args.max_wall_seconds, "debug_frames": args.debug_frames,
        "instance_count": args.instances,
    }
    flat.update({k: v for k, v in flags.items() if v is not None})
    return build_config(flat)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if config.experiment == "theorem_verify":
            summary, code = run_theorem_verify(config)
            print(summary.table())
            print(f"negative pointwise reward instances: {summary.negative_examples}")
            if code:
                print(f"FAILED: counterexamples written to {config.out_dir}/counterexamples.json",
                      file=sys.stderr)
            return code
        if config.experiment == "mnist_convergence":
            result = run_mnist_convergence(config)
            for (name, branch), step in result.crossings.items():
                print(f"{name:<10}{branch:<6} crossing step: {'never' if step is None else step}")
        else:
            result = run_maze_coverage(config)
            for (name, mode), poses in result.final_coverage.items():
                print(f"{name:<10}{mode:<14} coverage {result.mean_coverage(name, mode):8.1f}"
                      f" / {result.state_count}")
    except FileNotFoundError as exc:
        print(f"startup error: {exc}", file=sys.stderr)
        return 2
    if result.partial:
        print("wall-clock budget reached: results are partial", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
