"""Command-line front door.

Verbs:
    lattice info      cell counts, Euler characteristic, Betti numbers
    code sample       draw noise, emit error/syndrome chain files
    code map          error chain -> spin model disorder + coupling
    mc run            one Monte Carlo chain, CSV series + manifest
    mc sweep          disorder-averaged Binder curves over a grid
    exact check       enumeration validations (mapping, kw, partition, mc-tv)
    duality solve     coupling/entropy duality report for a model kind
    threshold run     full pipeline: sweep, crossing, dual inference

Exit codes: 0 success, 2 config error, 3 resource error, 4 no
crossing / unfittable, 1 failed validation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, duality, oracle, pipeline, toric
from .cells import Chain, build_complex, chain_from_text, chain_to_text
from .errors import (
    ConfigError,
    NoCrossingError,
    ResourceError,
    Tc3dError,
    UnfittableError,
)
from .gf2 import betti_numbers
from .manifest import (
    RunManifest,
    load_config,
    require_keys,
    save_series,
    write_table,
)
from .mc import MCConfig, MeasurePlan, run_chain
from .models import (
    build_model,
    kind_of,
    nishimori_beta,
    sample_disorder,
)


def _parse_lengths(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad lengths {text!r}: {exc}") from exc


def _parse_bcs(text):
    flags = []
    for ch in text:
        if ch not in "po":
            raise ConfigError(f"bad boundary flags {text!r} (use p/o per axis)")
        flags.append(ch == "p")
    return tuple(flags)


def _emit(payload, out=None):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


# -- lattice ------------------------------------------------------------------


def cmd_lattice_info(args):
    lengths = _parse_lengths(args.lengths)
    bcs = _parse_bcs(args.bc) if args.bc else None
    cx = build_complex(args.dim, lengths, bcs)
    payload = {
        "dimension": cx.dimension,
        "lengths": list(cx.lengths),
        "periodic": list(cx.periodic),
        "cell_counts": list(cx.cell_counts),
        "euler_characteristic": cx.euler_characteristic(),
    }
    if cx.fully_periodic:
        payload["betti_numbers"] = list(betti_numbers(cx))
    _emit(payload, args.out)
    return 0


# -- code ---------------------------------------------------------------------


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_code_sample(args):
    code = toric.build_code(args.L)
    rng = np.random.default_rng(args.seed)
    out = _out_dir(args)
    manifest = RunManifest(
        command="code sample",
        params={
            "L": args.L,
            "p": args.p,
            "q": args.q,
            "rounds": args.rounds,
            "sector": args.sector,
            "time_bc": args.time_bc,
        },
        master_seed=args.seed,
    )
    header = json.dumps(
        {"L": args.L, "rounds": args.rounds, "sector": args.sector,
         "time_bc": args.time_bc}
    )
    if args.rounds == 1 and args.time_bc == "open":
        z_err, x_err = toric.sample_pauli_error(code, args.p, rng)
        err = z_err if args.sector == "Z" else x_err
        synd = toric.static_syndrome(code, err, args.sector)
        (out / "error.chain").write_text(chain_to_text(err, header))
        (out / "syndrome.chain").write_text(chain_to_text(synd, header))
    else:
        noise = toric.NoiseParams(
            p=args.p, q=args.q, rounds=args.rounds, sector=args.sector
        )
        err = toric.sample_spacetime_error(code, noise, rng, args.time_bc)
        synd = toric.detection_events(code, err)
        (out / "error.chain").write_text(chain_to_text(err.chain, header))
        (out / "syndrome.chain").write_text(chain_to_text(synd.chain, header))
    manifest.register(out / "error.chain")
    manifest.register(out / "syndrome.chain")
    manifest.save(out / "manifest.json")
    _emit({"out": str(out), "error_weight": len(err.chain) if args.rounds > 1
           or args.time_bc != "open" else len(err),
           "content_hash": manifest.content_hash()})
    return 0


def cmd_code_map(args):
    code = toric.build_code(args.L)
    rng = np.random.default_rng(args.seed)
    if args.rounds == 1:
        model = oracle.mapped_model(code, args.sector)
        host = code.complex
        rank = 1 if args.sector == "Z" else 2
    else:
        layout = code.spacetime(args.rounds, "periodic")
        model = oracle.mapped_model_spacetime(layout, args.sector)
        host = layout.complex
        rank = layout.error_rank(args.sector)
    if args.error_file:
        err = chain_from_text(host, rank, Path(args.error_file).read_text())
    else:
        bits = rng.random(host.n_cells(rank)) < args.p
        err = Chain.from_bits(host, rank, bits)
    disorder = oracle.error_to_disorder(model, err)
    payload = {
        "model": model.kind.name,
        "lattice": {
            "dimension": host.dimension,
            "lengths": list(host.lengths),
            "periodic": list(host.periodic),
        },
        "n_spins": model.n_spins,
        "n_terms": model.n_terms,
        "p": args.p,
        "nishimori_beta": nishimori_beta(args.p),
        "error_weight": len(err),
        "disorder_minus_fraction": disorder.minus_fraction(),
        "disorder": disorder.to_hex(),
    }
    _emit(payload, args.out)
    return 0


# -- mc -----------------------------------------------------------------------


def cmd_mc_run(args):
    overrides = {"seed": args.seed, "out": args.out}
    config = load_config(args.config, overrides)
    require_keys(config, ("model", "lengths", "p", "seed", "out"), "mc run")
    kind = kind_of(config["model"])
    cx = build_complex(
        kind.dimension,
        tuple(config["lengths"]),
        tuple(config["periodic"]) if "periodic" in config else None,
    )
    model = build_model(kind, cx)
    seed = int(config["seed"])
    rng = np.random.default_rng(seed)
    p = float(config["p"])
    if "disorder" in config:
        from .models import DisorderSample

        disorder = DisorderSample.from_hex(model.n_terms, config["disorder"], p=p)
    else:
        disorder = sample_disorder(model, p, rng)
    beta = (
        nishimori_beta(p) if config.get("nishimori", "beta" not in config)
        else float(config["beta"])
    )
    cfg = pipeline.mc_config_from(config, seed)
    plan = MeasurePlan(
        loops=tuple(tuple(x) for x in config.get("loops", ())),
        surfaces=tuple(tuple(x) for x in config.get("surfaces", ())),
        average_anchors=bool(config.get("average_anchors", False)),
    )
    series = run_chain(model, disorder, beta, cfg, plan)
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    csv_path = save_series(series, out / "series.csv")
    manifest = RunManifest(
        command="mc run",
        params={k: config[k] for k in sorted(config) if k != "out"},
        master_seed=seed,
    )
    manifest.register(csv_path)
    manifest.register(Path(str(csv_path) + ".json"))
    manifest.save(out / "manifest.json")
    _emit(
        {
            "out": str(out),
            "beta": beta,
            "measurements": len(series),
            "means": {k: series.mean(k) for k in series.keys()},
            "content_hash": manifest.content_hash(),
        }
    )
    return 0


def cmd_mc_sweep(args):
    config = load_config(args.config, {"seed": args.seed, "out": args.out})
    require_keys(config, ("model", "sizes", "grid", "seed", "out"), "mc sweep")
    grid = config["grid"]
    require_keys(grid, ("mode", "values"), "mc sweep: grid")
    seed = int(config["seed"])
    cfg = pipeline.mc_config_from(config, seed)
    curves, points = pipeline.binder_sweep(
        config["model"],
        [int(s) for s in config["sizes"]],
        [float(v) for v in grid["values"]],
        grid["mode"],
        cfg,
        workers=int(config.get("workers", 1)),
        p_fixed=float(config.get("p_fixed", 0.0)),
    )
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    table = write_table(
        out / "binder_curves.csv",
        ["L", "x", "beta", "binder", "binder_err", "n_samples"],
        [
            (pt.size, pt.x, pt.beta, pt.binder_mean, pt.binder_err,
             len(pt.samples))
            for pt in points
        ],
    )
    manifest = RunManifest(
        command="mc sweep",
        params={k: config[k] for k in sorted(config) if k != "out"},
        master_seed=seed,
    )
    manifest.register(table)
    manifest.save(out / "manifest.json")
    _emit({"out": str(out), "points": len(points),
           "content_hash": manifest.content_hash()})
    return 0


# -- exact --------------------------------------------------------------------


def cmd_exact_check(args):
    rng = np.random.default_rng(args.seed)
    budget = oracle.EnumerationBudget(max_states=1 << args.budget_bits)
    if args.what == "mapping":
        code = toric.build_code(args.L)
        worst = 0.0
        for _ in range(args.trials):
            bits = rng.random(code.n_qubits) < args.p
            err = Chain.from_bits(code.complex, 1, bits)
            synd = toric.static_syndrome(code, err, "Z")
            pr_code = oracle.exact_class_probabilities(code, synd, args.p,
                                                       budget=budget)
            pr_sm = oracle.sm_class_probabilities(code, synd, args.p,
                                                  budget=budget)
            worst = max(worst, float(np.abs(pr_code - pr_sm).max()))
        payload = {"check": "mapping", "L": args.L, "p": args.p,
                   "trials": args.trials, "max_abs_diff": worst,
                   "tolerance": 1e-10, "passed": worst < 1e-10}
    elif args.what == "kw":
        lengths = _parse_lengths(args.slab)
        cx = build_complex(3, lengths, (False,) * 3)
        model = build_model("RPGM3", cx)
        rep = oracle.kw_prefactor_check(model, args.beta, budget=budget)
        payload = {"check": "kw", "slab": list(lengths), "beta": args.beta,
                   "residual": rep.residual,
                   "exact_expected": rep.exact_expected,
                   "passed": rep.residual < 1e-9}
    elif args.what == "partition":
        cx = build_complex(3, (2, 1, 1), (False,) * 3)
        model = build_model("RBIM3", cx)
        from .models import DisorderSample
        import math

        dis = DisorderSample(np.ones(1, dtype=np.int8))
        lnz = oracle.exact_log_partition(model, dis, args.beta, budget)
        expected = math.log(4 * math.cosh(args.beta))
        payload = {"check": "partition", "beta": args.beta, "ln_z": lnz,
                   "closed_form": expected,
                   "passed": abs(lnz - expected) < 1e-12}
    elif args.what == "mc-tv":
        cx = build_complex(3, (2, 1, 1), (False,) * 3) if args.L == 0 else \
            build_complex(3, args.L)
        model = build_model("RBIM3", cx)
        dis = sample_disorder(model, args.p, rng)
        tv = oracle.mc_distribution_check(model, dis, args.beta,
                                          n_sweeps=args.trials, seed=args.seed)
        payload = {"check": "mc-tv", "beta": args.beta, "tv": tv,
                   "tolerance": 0.02, "passed": tv < 0.02}
    else:
        raise ConfigError(f"unknown check {args.what!r}")
    _emit(payload, args.out)
    return 0 if payload["passed"] else 1


# -- duality ------------------------------------------------------------------


def cmd_duality_solve(args):
    payload = duality.duality_summary(args.kind, p_c=args.p_c, beta=args.beta)
    if args.structural:
        kind = kind_of(args.kind)
        L = args.L or (3 if kind.dimension == 3 else 2)
        model = build_model(kind, build_complex(kind.dimension, L))
        dual, report = duality.derive_dual_model(model)
        payload["structural"] = {
            "L": L,
            "dual_kind": dual.kind.name,
            "witness": report.witness,
            "input_hash": report.input_hash,
            "dual_hash": report.dual_hash,
        }
    _emit(payload, args.out)
    return 0


# -- threshold ----------------------------------------------------------------


def cmd_threshold_run(args):
    config = load_config(args.config, {"seed": args.seed, "out": args.out})
    report = pipeline.threshold_pipeline(config)
    out = config.get("out")
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / "threshold_report.json"
        report_path.write_text(
            json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"
        )
        manifest = RunManifest(
            command="threshold run",
            params={k: config[k] for k in sorted(config) if k != "out"},
            master_seed=int(config.get("seed", 0)),
        )
        manifest.register(report_path)
        manifest.save(out / "manifest.json")
    _emit(report)
    return 0


# -- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tc3d",
        description="3D toric code thresholds via random gauge models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)

    lattice = groups.add_parser("lattice").add_subparsers(dest="verb",
                                                          required=True)
    info = lattice.add_parser("info")
    info.add_argument("--dim", type=int, required=True, choices=(3, 4))
    info.add_argument("--lengths", required=True)
    info.add_argument("--bc", default="")
    info.add_argument("--out")
    info.set_defaults(func=cmd_lattice_info)

    code = groups.add_parser("code").add_subparsers(dest="verb", required=True)
    sample = code.add_parser("sample")
    sample.add_argument("--L", type=int, required=True)
    sample.add_argument("--p", type=float, required=True)
    sample.add_argument("--q", type=float, default=None)
    sample.add_argument("--rounds", type=int, default=1)
    sample.add_argument("--sector", choices=("X", "Z"), default="Z")
    sample.add_argument("--time-bc", choices=("open", "periodic"),
                        default="open")
    sample.add_argument("--seed", type=int, required=True)
    sample.add_argument("--out", required=True)
    sample.set_defaults(func=cmd_code_sample)
    cmap = code.add_parser("map")
    cmap.add_argument("--L", type=int, required=True)
    cmap.add_argument("--p", type=float, required=True)
    cmap.add_argument("--rounds", type=int, default=1)
    cmap.add_argument("--sector", choices=("X", "Z"), default="Z")
    cmap.add_argument("--error-file")
    cmap.add_argument("--seed", type=int, default=0)
    cmap.add_argument("--out")
    cmap.set_defaults(func=cmd_code_map)

    mc = groups.add_parser("mc").add_subparsers(dest="verb", required=True)
    run = mc.add_parser("run")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.set_defaults(func=cmd_mc_run)
    sweep = mc.add_parser("sweep")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out")
    sweep.set_defaults(func=cmd_mc_sweep)

    exact = groups.add_parser("exact").add_subparsers(dest="verb",
                                                      required=True)
    check = exact.add_parser("check")
    check.add_argument("--what", required=True,
                       choices=("mapping", "kw", "partition", "mc-tv"))
    check.add_argument("--L", type=int, default=2)
    check.add_argument("--p", type=float, default=0.08)
    check.add_argument("--beta", type=float, default=0.6)
    check.add_argument("--slab", default="3,3,2")
    check.add_argument("--trials", type=int, default=3)
    check.add_argument("--seed", type=int, default=1)
    check.add_argument("--budget-bits", type=int, default=22)
    check.add_argument("--out")
    check.set_defaults(func=cmd_exact_check)

    dual = groups.add_parser("duality").add_subparsers(dest="verb",
                                                       required=True)
    solve = dual.add_parser("solve")
    solve.add_argument("--kind", required=True)
    solve.add_argument("--p-c", type=float, dest="p_c")
    solve.add_argument("--beta", type=float)
    solve.add_argument("--structural", action="store_true")
    solve.add_argument("--L", type=int)
    solve.add_argument("--out")
    solve.set_defaults(func=cmd_duality_solve)

    thr = groups.add_parser("threshold").add_subparsers(dest="verb",
                                                        required=True)
    trun = thr.add_parser("run")
    trun.add_argument("--config", required=True)
    trun.add_argument("--seed", type=int)
    trun.add_argument("--out")
    trun.set_defaults(func=cmd_threshold_run)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except (NoCrossingError, UnfittableError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 4
    except Tc3dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
