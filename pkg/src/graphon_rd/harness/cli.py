"""Command-line entry point ``graphon-rd``.

Exit codes: 0 success, 1 usage or validation error, 2 a bound or invariant
assertion failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ..cutnorm import VARIANTS, cut_norm_exact, cut_norm_heuristic
from ..errors import GraphonRDError
from ..kernel import StepGraphon, difference_matrix, load_kernel
from .config import ExperimentConfig, flag_names
from .records import atomic_write
from .studies import run_convergence_study, run_lln_study, run_single_particles, run_single_rd

EXIT_OK, EXIT_INVALID, EXIT_ASSERTION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_config_args(p):
    p.add_argument("config", nargs="?", help="INI experiment file (optional; flags alone also work)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any config key")
    for flag, sec, key in flag_names():
        p.add_argument(flag, dest=f"cfg__{sec}__{key}", metavar=key.upper(),
                       help=f"[{sec}] {key}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphon-rd", description="Graph/graphon reaction-diffusion experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    for name, helptext in (
        ("simulate-rd", "integrate the graph reaction-diffusion equation once"),
        ("simulate-particles", "simulate one particle trajectory"),
        ("convergence", "graph-to-graphon convergence sweep with bound checks"),
        ("lln", "law-of-large-numbers exceedance study"),
        ("validate-config", "parse and validate a config, echo the resolved form"),
    ):
        _add_config_args(sub.add_parser(name, help=helptext))

    cut = sub.add_parser("cut-norm", help="cut norm of the difference of two kernels")
    cut.add_argument("--a", required=True, help="first kernel (text matrix or .json)")
    cut.add_argument("--b", required=True, help="second kernel (text matrix or .json)")
    cut.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    cut.add_argument("--variant", choices=VARIANTS, default="st",
                     help="exact-mode variant (heuristic always bounds the bilinear form)")
    cut.add_argument("--restarts", type=int, default=32)
    cut.add_argument("--seed", type=int, default=0)
    return parser


def _overrides(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k.startswith("cfg__") and v is not None:
            _, sec, key = k.split("__")
            out[(sec, key)] = v
    for item in args.set:
        lhs, sep, value = item.partition("=")
        sec, dot, key = lhs.partition(".")
        if not sep or not dot:
            raise UsageError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        out[(sec.strip(), key.strip())] = value
    return out


def _load_config(args, kind=None) -> ExperimentConfig:
    overrides = _overrides(args)
    if kind is not None:
        overrides.setdefault(("experiment", "kind"), kind)
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    sections: dict = {}
    for (sec, key), v in overrides.items():
        sections.setdefault(sec, {})[key] = v
    return ExperimentConfig.from_sections(sections)


def _write(cfg, name, text):
    return atomic_write(os.path.join(cfg.resolved_output_dir(), name), text)


def _cmd_validate(args):
    cfg = _load_config(args)
    print(cfg.to_ini(), end="")
    print(f"# config_hash = {cfg.config_hash()}")
    return EXIT_OK


def _cmd_simulate_rd(args):
    cfg = _load_config(args)
    sol = run_single_rd(cfg)
    path = _write(cfg, "rd_solution.csv", sol.to_csv())
    meta = json.loads(sol.to_json())
    meta.pop("states")
    meta.update(config_hash=cfg.config_hash(), experiment=cfg.to_dict())
    _write(cfg, "rd_solution.json", json.dumps(meta, indent=2, sort_keys=True, default=str))
    print(f"simulate-rd: n={sol.n} T={cfg.T} final mean={sol.values[-1].mean():.6g} -> {path}")
    return EXIT_OK


def _cmd_simulate_particles(args):
    cfg = _load_config(args)
    traj = run_single_particles(cfg)
    traj.validate()
    path = _write(cfg, "events.csv", traj.events_csv())
    grid = np.linspace(0.0, traj.horizon, cfg.n_outputs)
    _write(cfg, "density.csv", traj.density_csv(grid))
    meta = traj.metadata()
    meta.update(config_hash=cfg.config_hash(), experiment=cfg.to_dict())
    _write(cfg, "trajectory.json", json.dumps(meta, indent=2, sort_keys=True, default=str))
    print(f"simulate-particles: n={traj.n} events={traj.n_events} capped={traj.capped_flag} -> {path}")
    return EXIT_OK


def _cmd_convergence(args):
    cfg = _load_config(args)
    if cfg.kind not in ("diffusion_convergence", "rd_convergence"):
        raise GraphonRDError(f"convergence needs kind = rd_convergence or diffusion_convergence, got {cfg.kind}")
    rec = run_convergence_study(cfg)
    path = _write(cfg, "convergence.csv", rec.to_csv())
    _write(cfg, "convergence.json", rec.sidecar(cfg.to_dict()))
    ok = rec.summary["all_passed"] and rec.summary.get("rk4_check_passed", True)
    print(f"convergence: {len(rec.rows)} rows, all_passed={rec.summary['all_passed']}, "
          f"monotone_ok={rec.summary['monotone_ok']} -> {path}")
    return EXIT_OK if ok else EXIT_ASSERTION


def _cmd_lln(args):
    cfg = _load_config(args, kind="lln")
    if cfg.kind != "lln":
        raise GraphonRDError(f"lln needs kind = lln, got {cfg.kind}")
    rec, reps = run_lln_study(cfg)
    path = _write(cfg, "lln.csv", rec.to_csv())
    _write(cfg, "lln_replicas.csv", reps.to_csv())
    _write(cfg, "lln.json", rec.sidecar(cfg.to_dict()))
    s = rec.summary
    print(f"lln: {s['label']}, p_hat={[round(x, 4) for x in rec.column('p_hat')]}, "
          f"trend_ok={s['trend_ok']} -> {path}")
    if s["any_unreliable"] or s["trend_ok"] is False:
        return EXIT_ASSERTION
    return EXIT_OK


def _load_step(path) -> StepGraphon:
    try:
        return load_kernel(path)
    except OSError as exc:
        raise GraphonRDError(f"cannot read {path}: {exc.strerror or exc}") from None


def _cmd_cut_norm(args):
    d = difference_matrix(_load_step(args.a), _load_step(args.b))
    if args.mode == "exact":
        res = cut_norm_exact(d, args.variant)
    else:
        res = cut_norm_heuristic(d, restarts=args.restarts, seed=args.seed)
    print(f"{res.value:.12g}")
    print(f"# variant={res.variant} mode={args.mode} n={d.shape[0]}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "validate-config": _cmd_validate,
    "simulate-rd": _cmd_simulate_rd,
    "simulate-particles": _cmd_simulate_particles,
    "convergence": _cmd_convergence,
    "lln": _cmd_lln,
    "cut-norm": _cmd_cut_norm,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_INVALID
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except GraphonRDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
