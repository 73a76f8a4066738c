"""Command-line harness: plan, rates, run, universality, certify.

A single JSON config file can seed any subcommand; explicit flags override
file values.  The environment variable ``LIPDON_OUT_DIR`` sets the default
output directory for report files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .harness import (calibrate_for_example, hs_rate_study, make_example,
                      run_end_to_end, truncation_rate_study,
                      universality_study)
from .planner import PlannerConstants, make_plan
from .surrogate import estimate_lipschitz
from .weights import SmoothnessParams, make_weights


def _load_config(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _merge(config: dict, args, keys):
    """Config file values fill in flags the user left at None."""
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else config.get(key)
    return out


def _out_path(name, flag_value):
    if flag_value:
        return Path(flag_value)
    base = Path(os.environ.get("LIPDON_OUT_DIR", "."))
    base.mkdir(parents=True, exist_ok=True)
    return base / name


def _bundle_from(cfg, example, seed, n_grid=None, out_dim=None, **kw):
    opts = {k: v for k, v in dict(cfg.get("example_options", {}), **kw).items()
            if v is not None}
    if n_grid:
        opts["n_grid"] = n_grid
    if out_dim:
        opts["out_dim"] = out_dim
    return make_example(example, seed=seed, **opts)


def cmd_plan(args):
    cfg = _load_config(args.config)
    vals = _merge(cfg, args, ["eps", "s", "t", "gamma"])
    if vals["eps"] is None or vals["s"] is None or vals["t"] is None:
        sys.exit("plan needs --eps, --s and --t (or config values)")
    params = SmoothnessParams(s=vals["s"], t=vals["t"],
                              gamma=vals["gamma"] or 1.0)
    w = make_weights("power", cfg.get("weight_exponent", 1.0))
    if args.constants:
        with open(args.constants) as fh:
            consts = PlannerConstants(**json.load(fh))
    else:
        consts = PlannerConstants.defaults(params)
    plan = make_plan(vals["eps"], params, w, consts)
    print(plan.to_json())


def cmd_rates(args):
    cfg = _load_config(args.config)
    vals = _merge(cfg, args, ["example", "mode", "indices", "samples", "seed"])
    example = vals["example"] or "synthetic"
    mode = {"output": "output_N", "input": "input_M"}[vals["mode"] or "output"]
    indices = [int(v) for v in (vals["indices"] or "2,4,8,16,32").split(",")]
    samples = int(vals["samples"] or 200)
    seed = int(vals["seed"] or 0)
    if example == "hs":
        report = hs_rate_study(indices, n_samples=samples, seed=seed)
    else:
        bundle = _bundle_from(cfg, example, seed)
        report = truncation_rate_study(bundle.spec, bundle.law, indices, mode,
                                       n_samples=samples)
    path = _out_path(f"rates_{example}_{mode}.csv", args.out)
    path.write_text(report.to_csv())
    print(f"slope={report.slope:.4f} predicted={report.predicted_slope:.4f} "
          f"pass={report.passed} -> {path}")
    return 0 if report.passed else 1


def cmd_run(args):
    cfg = _load_config(args.config)
    vals = _merge(cfg, args, ["example", "eps", "backend", "samples", "seed"])
    example = vals["example"] or "evi"
    bundle = _bundle_from(cfg, example, int(vals["seed"] or 0),
                          n_grid=args.n_grid)
    result = run_end_to_end(bundle, float(vals["eps"] or 0.2),
                            backend=vals["backend"] or "grid",
                            n_samples=int(vals["samples"] or 200),
                            seed=int(vals["seed"] or 0))
    out = {k: v for k, v in result.items() if k not in ("plan", "surrogate")}
    out["plan"] = json.loads(result["plan"].to_json())
    path = _out_path(f"run_{example}.json", args.out)
    path.write_text(json.dumps(out, indent=2, default=float))
    print(f"rms={result['rms']:.4f} ci={result['ci']:.4f} eps={result['eps']} "
          f"pass={result['passed']} -> {path}")
    return 0 if result["passed"] else 1


def cmd_universality(args):
    cfg = _load_config(args.config)
    vals = _merge(cfg, args, ["example", "n_max", "seed"])
    example = vals["example"] or "evi"
    seed = int(vals["seed"] or 0)
    n_grid = args.n_grid or (64 if example == "evi" else None)
    bundle = _bundle_from(cfg, example, seed, n_grid=n_grid)
    ns = list(range(1, int(vals["n_max"] or 6) + 1))
    report = universality_study(bundle.spec, bundle.law, ns, seed=seed)
    path = _out_path(f"universality_{example}.csv", args.out)
    path.write_text(report.to_csv())
    print(f"sup errors {['%.4f' % e for e in report.sup_errors]} "
          f"pass={report.passed} -> {path}")
    return 0 if report.passed else 1


def cmd_certify(args):
    cfg = _load_config(args.config)
    vals = _merge(cfg, args, ["example", "pairs", "seed"])
    example = vals["example"] or "evi"
    pairs = int(vals["pairs"] or 500)
    seed = int(vals["seed"] or 0)
    if example == "hs":
        from .hscalc import lipschitz_certificate, soft_threshold
        rng = np.random.default_rng(seed)
        fn = soft_threshold(1.0)
        worst = 0.0
        for _ in range(pairs):
            A = rng.standard_normal((8, 8))
            B = rng.standard_normal((8, 8))
            worst = max(worst, lipschitz_certificate(fn, A, B))
        ok = worst <= fn.lipschitz_constant + 1e-8
        print(f"max ratio {worst:.12f} <= L_f={fn.lipschitz_constant} : {ok}")
        return 0 if ok else 1
    bundle = _bundle_from(cfg, example, seed)
    L = estimate_lipschitz(bundle.spec.evaluate, bundle.law, pairs=pairs,
                           t_weight=bundle.spec.params.t)
    print(f"estimated Lipschitz constant (lower bound): {L:.6f}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lipdon",
        description="truncation planning and operator-surrogate studies")
    parser.add_argument("--config", help="JSON config file mirroring the "
                                         "experiment options")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="emit a truncation plan as JSON")
    p.add_argument("--eps", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--constants", help="JSON file with planner constants")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("rates", help="truncation-rate study to CSV")
    p.add_argument("--example", choices=["evi", "hs", "synthetic"])
    p.add_argument("--mode", choices=["output", "input"])
    p.add_argument("--indices")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("run", help="end-to-end surrogate assembly and MSE")
    p.add_argument("--example", choices=["evi", "synthetic"])
    p.add_argument("--eps", type=float)
    p.add_argument("--backend", choices=["grid", "net"])
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-grid", type=int, dest="n_grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("universality", help="sup-error trend study")
    p.add_argument("--example", choices=["evi", "synthetic"])
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-grid", type=int, dest="n_grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_universality)

    p = sub.add_parser("certify", help="Lipschitz certificates")
    p.add_argument("--example", choices=["evi", "hs", "synthetic"])
    p.add_argument("--pairs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_certify)

    args = parser.parse_args(argv)
    code = args.func(args)
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
