"""Command-line harness.

    umax constants --config exp.json
    umax simulate  --config exp.json --seed 7 --workers 4 --out-dir results/
    umax tail      --config exp.json
    umax bound     --config exp.json
    umax study     --config exp.json

The configuration format is documented in ``docs/config.schema.json``.
Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 a Poisson bound check was flagged.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

from . import limits, streams
from .experiment import (DEFAULT_MAX_EVALUATIONS, ExperimentConfig, ResourceCapExceeded,
                         convergence_study, ks_statistic, run_trials)
from .kernels import KERNELS, get_kernel
from .poisson import estimate_exceed_prob, verify_bounds
from .specfun import DomainError
from .sphere import (DirectionalLaw, PointLaw, RadialLaw, log_vmf_normalizer, overlap_antipodal,
                     overlap_self)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_FLAGGED = 4


class ConfigError(ValueError):
    pass


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing field '{where}{key}'")
    return doc[key]


def parse_law(doc: dict) -> PointLaw:
    law = _require(doc, "law", "")
    if not isinstance(law, dict):
        raise ConfigError("field 'law' must be an object")
    dirs = _require(law, "directional", "law.")
    kind = _require(dirs, "kind", "law.directional.")
    if kind == "uniform":
        directional = DirectionalLaw.uniform(int(_require(dirs, "d", "law.directional.")))
    elif kind == "vmf":
        mu = _require(dirs, "mu", "law.directional.")
        directional = DirectionalLaw.vmf(mu, float(_require(dirs, "kappa", "law.directional.")))
        if "d" in dirs and int(dirs["d"]) != directional.d:
            raise ConfigError("law.directional.d does not match the length of mu")
    else:
        raise ConfigError(f"unknown directional law {kind!r}")
    rad = law.get("radial", {"kind": "unit"})
    rkind = _require(rad, "kind", "law.radial.")
    if rkind == "unit":
        radial = RadialLaw.unit_norm()
    elif rkind == "ball":
        radial = RadialLaw.ball_uniform(directional.d)
    elif rkind == "power":
        radial = RadialLaw.power_tail(float(_require(rad, "alpha", "law.radial.")),
                                      float(_require(rad, "a", "law.radial.")))
    elif rkind == "atom":
        radial = RadialLaw.atom_mix(float(_require(rad, "a", "law.radial.")))
    else:
        raise ConfigError(f"unknown radial law {rkind!r}")
    return PointLaw(directional, radial)


def limit_for(law: PointLaw, kernel: str) -> limits.LimitLaw:
    """The limit law matching a point law and kernel, or ``ConfigError``."""
    d, rad = law.d, law.radial
    if kernel == "distance":
        return limits.diameter_law(d, rad.alpha, rad.a, overlap_antipodal(law.directional))
    if kernel == "scalar":
        return limits.scalar_law(d, rad.alpha, rad.a, overlap_self(law.directional))
    if kernel == "angle":
        if rad.kind != "unit":
            raise ConfigError("the angle kernel needs unit-norm points (law.radial.kind = 'unit')")
        return limits.min_angle_law(d, overlap_self(law.directional))
    if kernel == "perimeter":
        if not (d == 2 and law.directional.is_uniform and rad.kind == "unit"):
            raise ConfigError("the perimeter law covers uniform points on the circle only")
        return limits.perimeter_law()
    raise ConfigError(f"unknown kernel {kernel!r}; expected one of {sorted(KERNELS)}")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _experiment(doc: dict, args) -> ExperimentConfig:
    law = parse_law(doc)
    kernel = _require(doc, "kernel", "")
    limit = limit_for(law, kernel)
    n = int(args.n if args.n is not None else _require(doc, "n", ""))
    trials = int(args.trials if args.trials is not None else doc.get("trials", 1000))
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    degree = get_kernel(kernel).degree
    if n < degree:
        raise ConfigError(f"n={n} is below the {kernel} kernel degree {degree}")
    try:
        return ExperimentConfig(law, kernel, n, trials, limit, seed, int(doc.get("shards", 1)),
                                float(doc.get("max_evaluations", DEFAULT_MAX_EVALUATIONS)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _stamp(payload: dict, args) -> dict:
    if not args.deterministic:
        payload["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return payload


def _emit(payload: dict, args, name: str) -> None:
    text = json.dumps(_stamp(payload, args), indent=2, sort_keys=True) + "\n"
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    sys.stdout.write(text)


def cmd_constants(doc: dict, args) -> int:
    law = parse_law(doc)
    kernel = _require(doc, "kernel", "")
    limit = limit_for(law, kernel)
    payload = {
        "kernel": kernel,
        "law": law.to_dict(),
        "limit": limit.to_dict(),
        "overlap_antipodal": overlap_antipodal(law.directional),
        "overlap_self": overlap_self(law.directional),
    }
    if not law.directional.is_uniform:
        payload["vmf_normalizer"] = math.exp(log_vmf_normalizer(law.d, law.directional.kappa))
    _emit(payload, args, "constants.json")
    return EXIT_OK


def cmd_simulate(doc: dict, args) -> int:
    cfg = _experiment(doc, args)
    ts = run_trials(cfg, args.workers)
    summary = {
        "ks": ks_statistic(ts.ecdf(), cfg.limit),
        "trials": cfg.trials,
        "n": cfg.n,
        "clamped": ts.clamped,
        "law": cfg.limit.to_dict(),
        "config": cfg.to_dict(),
    }
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    ts.write_csv(out / "trials.csv")
    _emit(summary, args, "summary.json")
    return EXIT_OK


def cmd_tail(doc: dict, args) -> int:
    """Monte Carlo tail slope ``s^-gamma P(kernel within s of its extreme)`` against theory."""
    law = parse_law(doc)
    kernel_name = _require(doc, "kernel", "")
    limit = limit_for(law, kernel_name)
    kernel = get_kernel(kernel_name)
    opts = doc.get("tail", {})
    s_grid = [float(s) for s in opts.get("s", [1e-2, 1e-3])]
    reps = int(opts.get("reps", 10**6))
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    rows = []
    for i, s in enumerate(s_grid):
        p, se = estimate_exceed_prob(law, kernel, limit.threshold(s, 1), reps,
                                     streams.child(streams.root(seed), i), int(doc.get("shards", 1)),
                                     args.workers)
        rows.append({"s": s, "prob": p, "slope_estimate": p / s ** limit.gamma,
                     "se": se / s ** limit.gamma})
    _emit({"kernel": kernel_name, "gamma": limit.gamma, "sigma": limit.sigma, "reps": reps,
           "rows": rows}, args, "tail.json")
    return EXIT_OK


def cmd_bound(doc: dict, args) -> int:
    law = parse_law(doc)
    kernel_name = _require(doc, "kernel", "")
    kernel = get_kernel(kernel_name)
    opts = _require(doc, "bound", "")
    n = int(args.n if args.n is not None else _require(doc, "n", ""))
    if n < kernel.degree:
        raise ConfigError(f"n={n} is below the {kernel_name} kernel degree {kernel.degree}")
    zs = [float(z) for z in _require(opts, "z", "bound.")]
    outer = int(opts.get("outer_reps", 10**4))
    inner = int(opts.get("inner_reps", 10**5))
    cap = float(doc.get("max_evaluations", DEFAULT_MAX_EVALUATIONS))
    if outer * math.comb(n, kernel.degree) > cap:
        raise ResourceCapExceeded(outer * math.comb(n, kernel.degree), cap)
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    reports = verify_bounds(law, kernel, n, zs, outer, inner, streams.root(seed),
                            int(doc.get("shards", 1)), args.workers)
    flagged = [r.z for r in reports if not r.holds]
    _emit({"kernel": kernel_name, "n": n, "reports": [r.to_dict() for r in reports],
           "flagged": flagged}, args, "bound.json")
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_study(doc: dict, args) -> int:
    cfg = _experiment(doc, args)
    grid = _require(_require(doc, "study", ""), "n_grid", "study.")
    try:
        result = convergence_study(cfg, grid, args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(result.to_dict(), args, "study.json")
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "tail": cmd_tail,
    "bound": cmd_bound,
    "study": cmd_study,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umax", description="U-max-statistics experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else None)
        p.add_argument("--config", required=True, help="experiment JSON document")
        p.add_argument("--seed", type=int, help="override the master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, default=1, help="worker pool size; never changes results")
        p.add_argument("--trials", type=int, help="override the number of trials")
        p.add_argument("--n", type=int, help="override the sample size")
        p.add_argument("--out-dir", help="directory for CSV/JSON outputs")
        p.add_argument("--deterministic", action="store_true", help="omit the timestamp field")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = load_config(args.config)
        return COMMANDS[args.command](doc, args)
    except ResourceCapExceeded as exc:
        print(f"umax: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, DomainError, ValueError, TypeError) as exc:
        print(f"umax: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
