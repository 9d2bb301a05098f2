"""Command-line front end for reproducible sketching experiments.

Every subcommand reads an optional flat key-value config file plus
flag overrides, validates the merged configuration before computing,
runs the corresponding experiment grid, and writes a CSV.  Exit codes:
0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from ..core.io import write_csv
from .config import (
    ConfigError,
    ExperimentConfig,
    Option,
    float_list,
    int_list,
    parse_config_file,
    resolve_options,
)
from . import runners

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


_FAMILY_OPTIONS = [
    Option("family", str, None, "test-matrix family"),
    Option("field", str, "real", "scalar field: real or complex"),
    Option("zeta", int, 4, "row sparsity for sparse families"),
    Option("xi", int, None, "column sparsity (sparsecol / sparsertt)"),
    Option("transform", str, None, "sparsertt transform: wht, dct, dft"),
    Option("diagonal", str, None, "sparsertt diagonal distribution"),
    Option("base", str, "real_spherical", "khatri-rao base distribution"),
    Option("d0", int, 2, "khatri-rao base dimension"),
]

_COMMON = [
    Option("config", str, None, "flat key-value config file"),
    Option("out", str, None, "output CSV path", required=True),
    Option("seed", int, 0, "root seed"),
    Option("trials", int, 10, "number of trials"),
]

_COMMANDS: dict[str, list[Option]] = {
    "lowrank": _COMMON + _FAMILY_OPTIONS + [
        Option("source", str, None, "matrix source: .mtx path or testbed label", required=True),
        Option("algo", str, "rsvd", "rsvd, gn, or gnsvd"),
        Option("n", int, 1024, "rows for synthetic sources"),
        Option("d", int, None, "columns for synthetic sources (default n)"),
        Option("k", int, None, "sketch / approximation rank", required=True),
        Option("p", int, None, "left sketch size (default ceil(1.5 k))"),
    ],
    "lsq": _COMMON + _FAMILY_OPTIONS + [
        Option("n", int, 512, "rows"),
        Option("d", int, 20, "columns"),
        Option("m", int, 1, "right-hand sides"),
        Option("p", int, None, "sketch size", required=True),
        Option("noise", float, 0.1, "orthogonal residual level (relative)"),
    ],
    "nystrom": _COMMON + _FAMILY_OPTIONS + [
        Option("kind", str, "exp_decay", "testbed spectrum kind or label"),
        Option("n", int, 512, "matrix dimension"),
        Option("k", int, None, "approximation rank", required=True),
    ],
    "recover": _COMMON + [
        Option("n", int, 32, "matrix dimension (Toeplitz family, d = 2n - 1)"),
        Option("p", int, None, "bilinear query budget", required=True),
        Option("noise", float, 0.1, "orthogonal perturbation level (relative)"),
    ],
    "trace": _COMMON + _FAMILY_OPTIONS + [
        Option("ell", int, 10, "TFIM sites"),
        Option("h", float, 10.0, "transverse field strength"),
        Option("beta", float, 4.0, "inverse temperature"),
        Option("t", int_list, [600], "matvec budgets, comma separated"),
        Option("estimators", str, "gh,na-hutch++", "comma-separated estimator list"),
        Option("expm", str, "eig", "matrix exponential mode: eig or taylor"),
    ],
    "osi-diag": _COMMON + _FAMILY_OPTIONS + [
        Option("r", int, None, "subspace dimension", required=True),
        Option("k", int, None, "embedding dimension", required=True),
        Option("d", int, None, "ambient dimension (default r)"),
        Option("subspace", str, "adversarial", "adversarial or kron_gaussian"),
    ],
    "timing": _COMMON + [
        Option("n", int, 4096, "input dimension"),
        Option("k", int, 512, "embedding dimension"),
        Option("families", str, "gaussian,sparsestack", "comma-separated family list"),
        Option("reps", int, 10, "measured repetitions (2 warmups added)"),
        Option("zeta", int, 4, "row sparsity"),
        Option("xi", int, None, "column sparsity"),
    ],
    "testbed": _COMMON + [
        Option("n", int, 1024, "matrix dimension"),
    ],
}


def _family_kwargs(cfg: ExperimentConfig) -> dict:
    kwargs = {}
    for key in ("field", "zeta", "xi", "transform", "diagonal", "base", "d0"):
        value = cfg.as_dict().get(key)
        if value is not None:
            kwargs[key] = value
    return kwargs


# family used when a subcommand gets no --family flag
_DEFAULT_FAMILY = {
    "lowrank": "gaussian",
    "lsq": "sparsestack",
    "nystrom": "sparsestack",
    "trace": "khatri-rao",
    "osi-diag": "sparsestack",
}


def _dispatch(cfg: ExperimentConfig):
    cmd = cfg.command
    family = cfg.as_dict().get("family") or _DEFAULT_FAMILY.get(cmd, "gaussian")
    if cmd == "lowrank":
        return runners.run_lowrank(
            cfg.source, cfg.algo, cfg.k, cfg.p, cfg.trials, seed=cfg.seed,
            n=cfg.n, d=cfg.d, family=family, family_kwargs=_family_kwargs(cfg),
        )
    if cmd == "lsq":
        return runners.run_lsq(
            cfg.n, cfg.d, cfg.m, cfg.p, cfg.trials, noise=cfg.noise, seed=cfg.seed,
            family=family, family_kwargs=_family_kwargs(cfg),
        )
    if cmd == "nystrom":
        return runners.run_nystrom(
            cfg.kind, cfg.n, cfg.k, cfg.trials, seed=cfg.seed,
            family=family, family_kwargs=_family_kwargs(cfg),
        )
    if cmd == "recover":
        return runners.run_recover(cfg.n, cfg.p, cfg.trials, noise=cfg.noise, seed=cfg.seed)
    if cmd == "trace":
        estimators = [e.strip() for e in cfg.estimators.split(",") if e.strip()]
        return runners.run_trace(
            cfg.ell, cfg.h, cfg.beta, cfg.t, estimators, cfg.trials, seed=cfg.seed,
            family=family, family_kwargs=_family_kwargs(cfg), expm_mode=cfg.expm,
        )
    if cmd == "osi-diag":
        return runners.run_osi_diag(
            family, cfg.r, cfg.k, cfg.trials, d=cfg.d, subspace=cfg.subspace,
            seed=cfg.seed, family_kwargs=_family_kwargs(cfg),
        )
    if cmd == "timing":
        families = [f.strip() for f in cfg.families.split(",") if f.strip()]
        return runners.run_timing(
            cfg.n, cfg.k, families, reps=cfg.reps, seed=cfg.seed,
            zeta=cfg.zeta, xi=cfg.xi,
        )
    if cmd == "testbed":
        return runners.run_testbed(cfg.n)
    raise ConfigError(f"unknown command {cmd!r}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sketchkit", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, options in _COMMANDS.items():
        sub = subparsers.add_parser(command)
        for opt in options:
            sub.add_argument("--" + opt.name, type=opt.type, default=None, help=opt.help)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        command = args.command
        cli_values = {key: value for key, value in vars(args).items() if key != "command"}
        file_values = {}
        if cli_values.get("config"):
            file_values = parse_config_file(cli_values["config"])
        cfg = resolve_options(command, _COMMANDS[command], file_values, cli_values)
        rows, schema = _dispatch(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    try:
        write_csv(rows, schema, cfg.out)
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
