"""Command line front end: ``entrate <command> [options]``.

Tabular results are CSV (with a JSON sidecar ``<out>.json`` when written to
a file, ``#`` header lines on stdout); structured results are JSON.  Exit
codes: 0 ok, 1 contract violation, 2 input error, 3 resource error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from .entropy import cesaro_entropy_sandwich, entropy_curve, entropy_rate_estimate, finite_entropy_rate, shift_residuals
from .errors import EntrateError, InputError
from .evolution import (
    DEFAULT_HORIZON,
    DEFAULT_RANK_TOL,
    build_shift_representation,
    evolution_dimension,
    tv_convergence_profile,
)
from .evolution import stationary_mean as compute_stationary_mean
from .modelfile import load_model, save_model
from .source import check_consistency, max_support
from .tv import counterexample_construct, lipschitz_profile

COMMANDS = (
    "validate",
    "entropy-curve",
    "tv",
    "lipschitz",
    "cesaro",
    "stationary-mean",
    "evo-dim",
    "counterexample",
    "residuals",
)
LIPSCHITZ_SLACK = 1e-9
SANDWICH_SLACK = 1e-9


@dataclass
class ExperimentConfig:
    command: str
    models: list = field(default_factory=list)
    t_max: int | None = None
    t: int | None = None
    n: int | None = None
    k: int | None = None
    tol: float | None = None
    window: tuple | None = None
    p: float | None = None
    delta: float | None = None
    out: str | None = None
    base: str = "e"
    seed: int | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for name in ("t_max", "t", "n", "k"):
            value = getattr(self, name)
            if value is not None and value < (0 if name == "t" else 1):
                raise InputError(f"--{name.replace('_', '-')} must be positive, got {value}")
        if self.tol is not None and not self.tol > 0:
            raise InputError(f"--tol must be positive, got {self.tol}")
        if self.window is not None and not 1 <= self.window[0] <= self.window[1]:
            raise InputError(f"--window needs 1 <= LO <= HI, got {self.window}")
        if self.base not in ("e", "2"):
            raise InputError(f"--base must be e or 2, got {self.base}")


def _window(text):
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="entrate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"entrate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, n_models, help_text):
        p = sub.add_parser(name, help=help_text)
        if n_models:
            p.add_argument("models", nargs=n_models, metavar="MODEL")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--base", choices=("e", "2"), default="e", help="log base of entropy outputs")
        p.add_argument("--seed", type=int, help="recorded in the report header")
        return p

    p = command("validate", 1, "validate a model file and check consistency")
    p.add_argument("--t-max", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9)

    p = command("entropy-curve", 1, "finite-horizon entropy rates H^t for t = 1..t_max")
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--window", type=_window, help="report window max/min of H^t over LO:HI")

    for name, text in (("tv", "truncated total-variation distances"), ("lipschitz", "entropy Lipschitz bound check")):
        p = command(name, 2, text)
        p.add_argument("--t-max", type=int, required=True)
        p.add_argument("--tol", type=float, default=1e-9)

    p = command("cesaro", 1, "entropy sandwich and TV distance of Cesaro means to the stationary mean")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--k", type=int, default=8, help="shifts used for the stationary mean")
    p.add_argument("--tol", type=float, default=1e-10)

    p = command("stationary-mean", 1, "stationary mean as a linear_combination model file")
    p.add_argument("--k", type=int, default=8, help="number of shifts scanned for a basis")
    p.add_argument("--t", type=int, default=DEFAULT_HORIZON, help="coordinate horizon L")
    p.add_argument("--tol", type=float, default=1e-10)

    p = command("evo-dim", 1, "numerical evolution dimension")
    p.add_argument("--k", type=int, default=8, help="k_max")
    p.add_argument("--t", type=int, default=DEFAULT_HORIZON, help="coordinate horizon L")
    p.add_argument("--tol", type=float, default=DEFAULT_RANK_TOL)

    p = command("counterexample", 0, "simplex points close in p-norm, far in scaled entropy")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)

    p = command("residuals", 1, "shift residuals I and J")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    return parser


def config_from_args(args):
    values = {k: v for k, v in vars(args).items() if k in ExperimentConfig.__dataclass_fields__}
    return ExperimentConfig(**values)


def _header(config, extra=None):
    meta = {k: v for k, v in asdict(config).items() if v is not None}
    meta["max_support"] = max_support()
    meta["version"] = __version__
    meta.update(extra or {})
    return meta


def _emit_json(config, payload, extra=None):
    doc = {"meta": _header(config, extra), **payload}
    text = json.dumps(doc, indent=2, default=_jsonable) + "\n"
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(config, columns, rows, extra=None):
    meta = _header(config, extra)
    lines = [",".join(columns)] + [",".join(_cell(v) for v in row) for row in rows]
    if config.out:
        with open(config.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(f"{config.out}.json", "w") as fh:
            json.dump(meta, fh, indent=2, default=_jsonable)
    else:
        for key, value in meta.items():
            sys.stdout.write(f"# {key}: {json.dumps(value, default=_jsonable)}\n")
        sys.stdout.write("\n".join(lines) + "\n")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def _scale(config):
    return 1.0 if config.base == "e" else 1.0 / math.log(2)


def cmd_validate(config):
    source = load_model(config.models[0])
    report = check_consistency(source, config.t_max, config.tol)
    _emit_json(config, {"source": source.descriptor, "consistency": report.as_dict()})
    return 0 if report.passed else 1


def cmd_entropy_curve(config):
    source = load_model(config.models[0])
    curve = entropy_curve(source, config.t_max, config.base)
    extra = {"source": source.descriptor}
    if config.window:
        est = entropy_rate_estimate(source, *config.window)
        extra["estimate"] = {k: v * _scale(config) if isinstance(v, float) else v for k, v in est.as_dict().items()}
    rows = [(t, curve.values[t]) for t in range(1, config.t_max + 1)]
    _emit_csv(config, ("t", "entropy_rate"), rows, extra)
    return 0


def _tv_rows(config):
    p, q = (load_model(path) for path in config.models)
    profile = lipschitz_profile(p, q, config.t_max)
    scale = _scale(config)
    rows = [(r.t, r.d_tv, r.lhs * scale, r.rhs * scale, r.applicable) for r in profile]
    increment = profile[-1].d_tv - (profile[-2].d_tv if len(profile) > 1 else 0.0)
    extra = {"converged": increment < config.tol, "last_increment": increment}
    return profile, rows, extra


def cmd_tv(config):
    _, rows, extra = _tv_rows(config)
    _emit_csv(config, ("t", "d_tv_t", "lhs", "rhs", "applicable"), rows, extra)
    return 0


def cmd_lipschitz(config):
    profile, rows, extra = _tv_rows(config)
    violations = [r.t for r in profile if r.applicable and r.lhs > r.rhs + LIPSCHITZ_SLACK]
    extra["violations"] = violations
    _emit_csv(config, ("t", "d_tv_t", "lhs", "rhs", "applicable"), rows, extra)
    return 1 if violations else 0


def _stationary(source, config, L=DEFAULT_HORIZON):
    rep = build_shift_representation(source, config.k, L)
    return rep, compute_stationary_mean(source, rep, config.tol)


def cmd_cesaro(config):
    source = load_model(config.models[0])
    _, mean = _stationary(source, config)
    profile = dict(tv_convergence_profile(source, mean.source, config.n, config.t))
    scale = _scale(config)
    rows = []
    violated = []
    for n in range(1, config.n + 1):
        s = cesaro_entropy_sandwich(source, n, config.t)
        if not s.lower - SANDWICH_SLACK <= s.mid <= s.upper + SANDWICH_SLACK:
            violated.append(n)
        rows.append((n, s.lower * scale, s.mid * scale, s.upper * scale, profile[n]))
    extra = {"stationary_mean_valid": mean.valid, "sandwich_violations": violated}
    _emit_csv(config, ("n", "lower", "mid", "upper", "d_tv_t_to_mean"), rows, extra)
    return 1 if violated or not mean.valid else 0


def cmd_stationary_mean(config):
    source = load_model(config.models[0])
    rep, mean = _stationary(source, config, config.t)
    model = mean.to_model(source.to_model())
    report = {
        "representation": rep.as_dict(),
        "coefficients": mean.coefficients,
        "n_used": mean.n_used,
        "converged": mean.converged,
        "stationarity_gap": mean.stationarity_gap,
        "negativity": mean.negativity,
        "valid": mean.valid,
    }
    if config.out:
        save_model(model, config.out)
        with open(f"{config.out}.report.json", "w") as fh:
            json.dump({"meta": _header(config), **report}, fh, indent=2, default=_jsonable)
    else:
        _emit_json(config, {**report, "model": model})
    return 0 if mean.valid else 1


def cmd_evo_dim(config):
    source = load_model(config.models[0])
    result = evolution_dimension(source, config.k, config.t, config.tol)
    _emit_json(config, result.as_dict(), {"source": source.descriptor})
    return 0


def cmd_counterexample(config):
    result = counterexample_construct(config.p, config.delta)
    ok = result.norm_gap < config.delta and result.entropy_gap > 0.5
    _emit_json(config, {**result._asdict(), "verified": ok})
    return 0 if ok else 1


def cmd_residuals(config):
    source = load_model(config.models[0])
    k, t = config.k, config.t
    res = shift_residuals(source, k, t)
    h = finite_entropy_rate(source, t)
    h_shift = finite_entropy_rate(source.shifted(k), t)
    gap = abs(h + res.J - res.I - h_shift)
    bound = k / t * math.log(source.alphabet.size)
    scale = _scale(config)
    payload = {
        "I": res.I * scale,
        "J": res.J * scale,
        "H_t": h * scale,
        "H_t_shifted": h_shift * scale,
        "identity_gap": gap * scale,
        "bound": bound * scale,
    }
    _emit_json(config, payload, {"source": source.descriptor})
    in_bounds = all(-1e-9 <= x <= bound + 1e-9 for x in res)
    return 0 if gap <= 1e-9 and in_bounds else 1


HANDLERS = {
    "validate": cmd_validate,
    "entropy-curve": cmd_entropy_curve,
    "tv": cmd_tv,
    "lipschitz": cmd_lipschitz,
    "cesaro": cmd_cesaro,
    "stationary-mean": cmd_stationary_mean,
    "evo-dim": cmd_evo_dim,
    "counterexample": cmd_counterexample,
    "residuals": cmd_residuals,
}


def run_command(config):
    return HANDLERS[config.command](config)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return run_command(config)
    except EntrateError as exc:
        error = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        report = getattr(exc, "report", None)
        if report is not None:
            error["report"] = report.as_dict()
        sys.stderr.write(json.dumps(error, default=_jsonable) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
