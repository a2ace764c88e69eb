"""Command-line experiment driver.

Every subcommand writes CSV to ``--output`` (stdout by default). Exit status
is 0 on success, 1 for a bad configuration and 2 for a numerical failure; on
failure a single ``error,<kind>,<message>`` line goes to stderr.
"""

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from .analysis import (compute_errors, convergence_study, exact_solution, gamma_sweep,
                       linear_solution, norm_equivalence_bound)
from .exceptions import (DegenerateCut, InvalidArgument, NumericalFailure, SingularSystem,
                         UnsupportedConfiguration)
from .solver import MethodSpec, Variant, compute_infsup, infsup_matrices, solve_method
from .spaces import P0_DISC, P1_CONT, P2_DISC
from .unfitted import interface_convergence, solve_interface

SUBCOMMANDS = ("solve", "converge", "infsup", "gamma-sweep", "unfitted", "equivalence")

# pair name -> (primal degree, multiplier kind, refine factor)
PAIRS = {
    "p1-p0refined": (1, P0_DISC, 2),
    "p1-p0": (1, P0_DISC, 1),
    "p1-p1cont": (1, P1_CONT, 1),
    "p2-p2disc": (2, P2_DISC, 1),
    "p2-p1cont": (2, P1_CONT, 1),
}

ERROR_HEADER = "n,h,dofs,err_h1,err_l2,err_mult,status"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    method: str = "projection"
    degree: int = 1
    levels: list = field(default_factory=lambda: [8, 16, 32, 64])
    n: int = 8
    gamma: float = 1.0
    x0: float = 0.5137
    output: str = "-"
    patch: bool = False
    pair: str = "p1-p0refined"
    stabilizer: str = "none"
    gammas: list = field(default_factory=list)
    mult: str = "p0"
    seed: int = 0

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("levels must be strictly increasing")
        if any(n < 1 for n in self.levels) or self.n < 1:
            raise ConfigError("mesh sizes must be positive")
        if self.gamma < 0 or any(g < 0 for g in self.gammas):
            raise ConfigError("gamma must be non-negative")
        if self.degree not in (1, 2):
            raise ConfigError(f"degree must be 1 or 2, got {self.degree}")
        try:
            Variant(self.method)
        except ValueError:
            raise ConfigError(f"unknown method {self.method!r}; choose from "
                              + ", ".join(v.value for v in Variant)) from None
        if self.pair not in PAIRS:
            raise ConfigError(f"unknown pair {self.pair!r}; choose from {', '.join(PAIRS)}")
        if self.stabilizer not in ("none", "projection", "jump"):
            raise ConfigError(f"unknown stabiliser {self.stabilizer!r}")
        if self.mult not in ("p0", "p2"):
            raise ConfigError("equivalence multiplier must be p0 or p2")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.10e}"


def _record_line(r):
    return ",".join(_fmt(v) for v in (r.n, r.h, r.n_dofs, r.err_h1, r.err_l2, r.err_mult, r.status))


def _solve(cfg):
    data = linear_solution() if cfg.patch else exact_solution()
    spec = MethodSpec(cfg.method, degree=cfg.degree, n=cfg.n, gamma=cfg.gamma)
    rec = compute_errors(solve_method(spec, data), data, spec)
    return [ERROR_HEADER, _record_line(rec)]


def _converge(cfg):
    records, slopes = convergence_study(cfg.method, cfg.degree, cfg.levels, cfg.gamma)
    lines = [ERROR_HEADER] + [_record_line(r) for r in records]
    lines += [f"slope_h1={_fmt(slopes['err_h1'])}", f"slope_l2={_fmt(slopes['err_l2'])}"]
    return lines


def _infsup(cfg):
    degree, kind, r = PAIRS[cfg.pair]
    stab = None if cfg.stabilizer == "none" else cfg.stabilizer
    lines = ["n,pair,stabilizer,beta"]
    for n in cfg.levels:
        beta = compute_infsup(*infsup_matrices(n, degree, kind, r, stab, cfg.gamma))
        lines.append(f"{n},{cfg.pair},{cfg.stabilizer},{_fmt(beta)}")
    return lines


def _gamma_sweep(cfg):
    gammas = cfg.gammas or list(np.round(np.arange(1.0, 4.0 + 1e-9, 0.05), 10))
    rows = gamma_sweep(cfg.method, gammas, n=cfg.n, degree=cfg.degree)
    lines = ["gamma,distance,status,pivot_ratio,negative_eigs,near_singular"]
    for r in rows:
        lines.append(",".join([_fmt(r.gamma), _fmt(r.distance), r.status, _fmt(r.pivot_ratio),
                               str(r.negative_eigs), str(int(r.near_singular))]))
    flagged = [r.gamma for r in rows if r.near_singular]
    lines.append("flagged=" + ";".join(_fmt(g) for g in flagged))
    return lines


def _unfitted(cfg):
    if len(cfg.levels) >= 3:
        records, slopes = interface_convergence(cfg.levels, cfg.x0, cfg.gamma)
    else:
        records = [solve_interface(n, cfg.x0, cfg.gamma)[1] for n in cfg.levels]
        slopes = None
    lines = [ERROR_HEADER] + [_record_line(r) for r in records]
    if slopes is not None:
        lines += [f"slope_h1={_fmt(slopes['err_h1'])}", f"slope_l2={_fmt(slopes['err_l2'])}"]
    return lines


def _equivalence(cfg):
    kind, r = (P0_DISC, 2) if cfg.mult == "p0" else (P2_DISC, 1)
    lines = ["n,lambda_max"]
    for n in cfg.levels:
        lines.append(f"{n},{_fmt(norm_equivalence_bound(n, kind, r))}")
    return lines


HANDLERS = {
    "solve": _solve,
    "converge": _converge,
    "infsup": _infsup,
    "gamma-sweep": _gamma_sweep,
    "unfitted": _unfitted,
    "equivalence": _equivalence,
}


def run(cfg):
    """Run one configuration; returns the exit status."""
    try:
        cfg.validate()
        lines = HANDLERS[cfg.subcommand](cfg)
    except (ConfigError, InvalidArgument, UnsupportedConfiguration, DegenerateCut) as exc:
        print(f"error,config,{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (SingularSystem, NumericalFailure) as exc:
        print(f"error,numerical,{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = "\n".join(lines) + "\n"
    if cfg.output == "-":
        sys.stdout.write(text)
        return 0
    try:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error,config,cannot write {cfg.output}: {exc.strerror}", file=sys.stderr)
        return 1
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; here 2 means numerical failure
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error,config,{message}", file=sys.stderr)
        sys.exit(1)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    """``a,b,c`` or ``start:stop:step`` (stop included)."""
    try:
        if ":" in text:
            a, b, s = (float(v) for v in text.split(":"))
            if s <= 0:
                raise ValueError
            count = int(np.floor((b - a) / s + 1e-9)) + 1
            return [round(a + i * s, 10) for i in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gamma list {text!r}")


def _bool(text):
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser():
    p = _Parser(prog="lagstab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, levels=True):
        sp.add_argument("--output", "-o", default="-", help="CSV path, '-' for stdout")
        sp.add_argument("--gamma", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=0, help="accepted for reproducible scripts; "
                        "all studies are deterministic")
        if levels:
            sp.add_argument("--levels", type=_int_list, default=[8, 16, 32, 64])

    s = sub.add_parser("solve", help="one solve with error norms")
    s.add_argument("--method", default="projection")
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--patch", action="store_true", help="use globally linear data")
    common(s, levels=False)

    s = sub.add_parser("converge", help="error table and fitted rates")
    s.add_argument("--method", default="projection")
    s.add_argument("--degree", type=int, default=1)
    common(s)

    s = sub.add_parser("infsup", help="discrete inf-sup constants")
    s.add_argument("--pair", default="p1-p0refined", choices=sorted(PAIRS))
    s.add_argument("--stabilized", type=_bool, default=False,
                   help="add the projection stabiliser")
    s.add_argument("--stabilizer", choices=("none", "projection", "jump"), default=None)
    common(s)

    s = sub.add_parser("gamma-sweep", help="residual-stabilised vs Nitsche over gamma")
    s.add_argument("--method", default="bh-sym", choices=("bh-sym", "bh-nonsym"))
    s.add_argument("--degree", type=int, default=1)
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--gammas", type=_float_list, default=None,
                   help="comma list or start:stop:step (default 1:4:0.05)")
    common(s, levels=False)

    s = sub.add_parser("unfitted", help="interface problem across x = x0")
    s.add_argument("--x0", type=float, default=0.5137)
    common(s)

    s = sub.add_parser("equivalence", help="projection vs jump stabiliser bound")
    s.add_argument("--mult", choices=("p0", "p2"), default="p0")
    common(s)
    return p


def config_from_args(ns):
    cfg = RunConfig(ns.subcommand, output=ns.output, gamma=ns.gamma, seed=ns.seed)
    for name in ("method", "degree", "levels", "n", "x0", "patch", "pair", "mult"):
        if getattr(ns, name, None) is not None:
            setattr(cfg, name, getattr(ns, name))
    if ns.subcommand == "infsup":
        cfg.stabilizer = ns.stabilizer or ("projection" if ns.stabilized else "none")
    if getattr(ns, "gammas", None):
        cfg.gammas = ns.gammas
    return cfg


def main(argv=None):
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
