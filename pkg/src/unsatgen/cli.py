"""Command-line pipeline: core extraction, pair harvesting, training,
generation, evaluation, and the augmentation benchmark.

Every command writes its artifacts plus a manifest.json (inputs, root seed,
package version, wall time, failures) into the output directory. DIMACS and
CSV outputs are deterministic given the same inputs and --seed; manifests
record wall-clock times and are not byte-stable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .augment import augmentation_experiment, extract_features, identity_generator, FEATURE_NAMES
from .cnf import Cnf, parse_dimacs, serialize_dimacs
from .gnn import (
    GnnConfig,
    init_model,
    load_model,
    load_pairs,
    prediction_metrics,
    save_model,
    save_pairs,
    train,
)
from .generate import (
    RefineConfig,
    build_training_pairs,
    generate_batch,
)
from .metrics import (
    classify_hardness,
    complete_only,
    hardness_ratio,
    hardness_vector,
    mmd,
    per_preset_ratios,
    rank_histogram,
)
from .mus import SatInputError, core_to_json, extract_mus
from .solver import PORTFOLIO, PORTFOLIO_NAMES, SolverConfig


def _fmt(x: float) -> str:
    """Fixed 6-significant-digit formatting for diffable reports."""
    return f"{x:.6g}"


def _read_dimacs_dir(path: Path) -> list[tuple[str, Cnf]]:
    files = sorted(path.glob("*.cnf"))
    if not files:
        raise FileNotFoundError(f"no .cnf files in {path}")
    return [(f.name, parse_dimacs(f.read_text())) for f in files]


def _write_manifest(out_dir: Path, command: str, args: dict, started: float, failures: list[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "args": {k: str(v) for k, v in args.items()},
        "version": __version__,
        "wall_seconds": time.time() - started,
        "failures": failures,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(conflict_limit=args.conflict_limit)


def _portfolio(args: argparse.Namespace) -> tuple[list[SolverConfig], list[str]]:
    if not args.portfolio:
        return list(PORTFOLIO), list(PORTFOLIO_NAMES)
    names = [n.strip() for n in args.portfolio.split(",") if n.strip()]
    presets = []
    for n in names:
        if n not in PORTFOLIO_NAMES:
            raise SystemExit(f"unknown portfolio preset {n!r}; choose from {PORTFOLIO_NAMES}")
        presets.append(PORTFOLIO[PORTFOLIO_NAMES.index(n)])
    return presets, names


# ---------------------------------------------------------------- commands


def cmd_extract_core(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        cnf = parse_dimacs(Path(args.input).read_text())
        label = extract_mus(cnf, _solver_config(args))
    except SatInputError:
        print("input is satisfiable", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return 1
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(core_to_json(label, instance=str(args.input)) + "\n")
    print(f"core of {len(label.clause_indices)} clauses -> {out} ({time.time()-started:.1f}s)")
    return 0


def cmd_harvest(args: argparse.Namespace) -> int:
    started = time.time()
    out_dir = Path(args.out_dir)
    failures: list[str] = []
    named = _read_dimacs_dir(Path(args.seeds_dir))
    pairs = []
    for i, (name, seed) in enumerate(named):
        try:
            pairs.extend(
                build_training_pairs(
                    [seed],
                    args.iterations,
                    rng_seed=args.seed + i,
                    solver_config=_solver_config(args),
                )
            )
        except SatInputError:
            failures.append(f"{name}: satisfiable, skipped")
    save_pairs(pairs, out_dir)
    _write_manifest(out_dir, "harvest", vars(args), started, failures)
    print(f"{len(pairs)} pairs from {len(named) - len(failures)} seeds -> {out_dir}")
    for f in failures:
        print(f"  skipped: {f}", file=sys.stderr)
    return 0 if not failures else 1


def cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    pairs = load_pairs(Path(args.pairs_dir))
    if not pairs:
        print("no training pairs found", file=sys.stderr)
        return 1
    config = GnnConfig(
        num_layers=args.layers,
        hidden_dim=args.hidden_dim,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        rng_seed=args.seed,
    )
    model, trace = train(init_model(config), pairs, config)
    out = Path(args.model)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(save_model(model))
    metrics = prediction_metrics(model, pairs)
    print(
        f"trained on {len(pairs)} pairs, {config.epochs} epochs: "
        f"loss {_fmt(trace[0])} -> {_fmt(trace[-1])}, "
        f"train recall {_fmt(metrics['recall'])}, accuracy {_fmt(metrics['accuracy'])}"
    )
    print(f"model -> {out} ({time.time()-started:.1f}s)")
    return 0


def _generate_one(payload: tuple) -> tuple[int, int, list[tuple[str, str]], float, str | None]:
    """Worker: all outputs for one seed. Returns DIMACS text so results are
    written in deterministic order by the parent."""
    si, name, text, model_blob, count, root_seed, conflict_limit, iterations, protect, policy = payload
    t0 = time.perf_counter()
    try:
        seed = parse_dimacs(text)
        model = load_model(model_blob) if model_blob is not None else None
        config = RefineConfig(
            max_iterations=iterations,
            decore_policy=policy,
            protect_seed_core=protect,
            rng_seed=root_seed,
            solver_config=SolverConfig(conflict_limit=conflict_limit),
        )
        results = generate_batch(seed, model, count, refine_config=config, seed_index=si)
        out = []
        for oi, (cnf, report) in enumerate(results):
            stem = f"{Path(name).stem}_gen{oi}"
            manifest = {
                "seed_path": name,
                "core_indices": report.core_indices,
                "iterations_run": report.refine.iterations_run,
                "terminated_early": report.refine.terminated_early,
                "rng_seed": report.rng_seed,
                "decore_events": [
                    {
                        "iteration": e.iteration,
                        "target": e.target,
                        "literal": e.literal,
                        "core_size": len(e.core_indices),
                        "policy": e.policy,
                        "oracle_fallback": e.oracle_fallback,
                        "retries": e.retries,
                    }
                    for e in report.refine.events
                ],
            }
            out.append((stem, serialize_dimacs(cnf) + "\x00" + json.dumps(manifest, indent=2)))
        return si, count, out, time.perf_counter() - t0, None
    except Exception as exc:  # per-instance failures are logged, not fatal
        return si, count, [], time.perf_counter() - t0, f"{name}: {exc}\n{traceback.format_exc()}"


def cmd_generate(args: argparse.Namespace) -> int:
    started = time.time()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    named = _read_dimacs_dir(Path(args.seeds_dir))
    model_blob = Path(args.model).read_bytes() if args.model != "oracle" else None
    iterations = None if args.iterations == "auto" else int(args.iterations)

    payloads = [
        (
            si,
            name,
            serialize_dimacs(cnf),
            model_blob,
            args.count_per_seed,
            args.seed,
            args.conflict_limit,
            iterations,
            args.protect_core,
            "existing_model_guided" if args.decore_policy == "model" else "fresh_variable",
        )
        for si, (name, cnf) in enumerate(named)
    ]
    failures: list[str] = []
    times: list[float] = []
    produced = 0
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_generate_one, payloads))
    else:
        results = [_generate_one(p) for p in payloads]
    for si, count, outputs, dt, err in sorted(results):
        times.append(dt / max(count, 1))
        if err:
            failures.append(err)
            continue
        for stem, blob in outputs:
            dimacs, manifest = blob.split("\x00", 1)
            (out_dir / f"{stem}.cnf").write_text(dimacs)
            (out_dir / f"{stem}.json").write_text(manifest + "\n")
            produced += 1
    _write_manifest(out_dir, "generate", vars(args), started, failures)
    mean_t = sum(times) / len(times) if times else 0.0
    print(
        f"{produced} instances from {len(named)} seeds -> {out_dir} "
        f"(mean {mean_t:.2f}s per instance)"
    )
    for f in failures:
        print(f"  failed: {f.splitlines()[0]}", file=sys.stderr)
    return 0 if not failures else 1


def _measure_dir(named: list[tuple[str, Cnf]], presets, conflict_limit):
    out = []
    for name, cnf in named:
        out.append((name, hardness_vector(cnf, presets, conflict_limit)))
    return out


def _hardness_csv(rows: list[tuple[str, object]], names: list[str]) -> str:
    lines = ["instance," + ",".join(f"{n}_conflicts" for n in names)]
    for name, v in rows:
        lines.append(name + "," + ",".join(str(c) for c in v.conflicts))
    return "\n".join(lines) + "\n"


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.time()
    report_dir = Path(args.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    presets, names = _portfolio(args)
    orig = _read_dimacs_dir(Path(args.orig_dir))
    gen = _read_dimacs_dir(Path(args.gen_dir))

    orig_rows = _measure_dir(orig, presets, args.conflict_limit)
    gen_rows = _measure_dir(gen, presets, args.conflict_limit)
    (report_dir / "hardness_original.csv").write_text(_hardness_csv(orig_rows, names))
    (report_dir / "hardness_generated.csv").write_text(_hardness_csv(gen_rows, names))

    orig_ok = complete_only([v for _, v in orig_rows])
    gen_ok = complete_only([v for _, v in gen_rows])
    ratio = hardness_ratio(gen_ok, orig_ok)
    preset_ratios = per_preset_ratios(gen_ok, orig_ok)
    distance = mmd(orig_ok, gen_ok)
    ranks_orig = rank_histogram(orig_ok)
    ranks_gen = rank_histogram(gen_ok)

    rank_lines = ["preset," + ",".join(f"rank{r+1}_orig" for r in range(len(names)))
                  + "," + ",".join(f"rank{r+1}_gen" for r in range(len(names)))]
    for i, n in enumerate(names):
        rank_lines.append(
            n + "," + ",".join(str(c) for c in ranks_orig[i]) + ","
            + ",".join(str(c) for c in ranks_gen[i])
        )
    (report_dir / "rank_histogram.csv").write_text("\n".join(rank_lines) + "\n")

    summary = {
        "hardness_ratio_percent": float(f"{ratio:.6g}"),
        "hardness_class": classify_hardness(ratio),
        "per_preset_ratio_percent": [float(f"{r:.6g}") for r in preset_ratios],
        "mmd": float(f"{distance:.6g}"),
        "instances_original": len(orig_ok),
        "instances_generated": len(gen_ok),
        "presets": names,
    }
    (report_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_manifest(report_dir, "evaluate", vars(args), started, [])
    print(
        f"hardness ratio {_fmt(ratio)}% ({summary['hardness_class']}), "
        f"mmd {_fmt(distance)} -> {report_dir}"
    )
    return 0


def cmd_augment_bench(args: argparse.Namespace) -> int:
    started = time.time()
    report_dir = Path(args.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    presets, names = _portfolio(args)
    named = _read_dimacs_dir(Path(args.pool_dir))
    pool = [cnf for _, cnf in named]
    pool_hardness = [hardness_vector(c, presets, args.conflict_limit) for c in pool]

    if args.model == "identity":
        generator = identity_generator(args.count_per_seed)
    else:
        model = load_model(Path(args.model).read_bytes())

        def generator(cnf: Cnf, index: int) -> list[Cnf]:
            config = RefineConfig(
                rng_seed=args.seed,
                solver_config=SolverConfig(conflict_limit=args.conflict_limit),
            )
            return [
                out
                for out, _ in generate_batch(
                    cnf, model, args.count_per_seed, refine_config=config, seed_index=index
                )
            ]

    report = augmentation_experiment(
        pool,
        pool_hardness,
        generator,
        lambda c: hardness_vector(c, presets, args.conflict_limit),
        trials=args.trials,
        sizes=args.sizes,
        rng_seed=args.seed,
    )

    lines = ["size,trial,mae_original,mae_augmented"]
    for size, cell in report["sizes"].items():
        for t, (mo, ma) in enumerate(zip(cell["mae_original"], cell["mae_augmented"])):
            lines.append(f"{size},{t},{_fmt(mo)},{_fmt(ma)}")
    (report_dir / "mae_table.csv").write_text("\n".join(lines) + "\n")
    summary = {
        str(size): {
            "mae_original_median": float(_fmt(cell["mae_original_median"])),
            "mae_augmented_median": float(_fmt(cell["mae_augmented_median"])),
            "wilcoxon_p": float(_fmt(cell["wilcoxon_p"])),
            "significant_gain": cell["significant_gain"],
        }
        for size, cell in report["sizes"].items()
    }
    (report_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_manifest(report_dir, "augment-bench", vars(args), started, [])
    for size, cell in summary.items():
        print(
            f"size {size}: original {cell['mae_original_median']} vs augmented "
            f"{cell['mae_augmented_median']} (p={cell['wilcoxon_p']})"
        )
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    named = _read_dimacs_dir(Path(args.input_dir))
    lines = ["instance," + ",".join(FEATURE_NAMES)]
    for name, cnf in named:
        feats = extract_features(cnf)
        lines.append(name + "," + ",".join(_fmt(f) for f in feats))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text, end="")
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unsatgen",
        description="Generate hard UNSAT instances by core refinement and evaluate them.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0, help="root RNG seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--conflict-limit", type=int, default=None)

    p = sub.add_parser("extract-core", help="write a verified core label for one instance")
    p.add_argument("input")
    p.add_argument("output")
    common(p)
    p.set_defaults(func=cmd_extract_core)

    p = sub.add_parser("harvest", help="build (instance, core) training pairs from seeds")
    p.add_argument("seeds_dir")
    p.add_argument("out_dir")
    p.add_argument("--iterations", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("train", help="train the core predictor on harvested pairs")
    p.add_argument("pairs_dir")
    p.add_argument("model")
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--hidden-dim", type=int, default=32)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--learning-rate", type=float, default=1e-2)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="generate hard UNSAT instances from seeds")
    p.add_argument("seeds_dir")
    p.add_argument("model", help="model JSON path, or 'oracle' for exact core detection")
    p.add_argument("out_dir")
    p.add_argument("--count-per-seed", type=int, default=3)
    p.add_argument("--iterations", default="auto", help="refinement iterations or 'auto'")
    p.add_argument("--protect-core", type=lambda s: s.lower() != "false", default=True)
    p.add_argument("--decore-policy", choices=("model", "fresh"), default="model")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="hardness preservation and similarity reports")
    p.add_argument("orig_dir")
    p.add_argument("gen_dir")
    p.add_argument("report_dir")
    p.add_argument("--portfolio", default="", help="comma-separated preset names")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("augment-bench", help="augmentation benefit on effort prediction")
    p.add_argument("pool_dir")
    p.add_argument("model", help="model JSON path, or 'identity' for the control")
    p.add_argument("report_dir")
    p.add_argument("--sizes", type=int, nargs="+", default=[30])
    p.add_argument("--trials", type=int, default=15)
    p.add_argument("--count-per-seed", type=int, default=3)
    p.add_argument("--portfolio", default="")
    common(p)
    p.set_defaults(func=cmd_augment_bench)

    p = sub.add_parser("features", help="dump per-instance feature vectors as CSV")
    p.add_argument("input_dir")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_features)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
