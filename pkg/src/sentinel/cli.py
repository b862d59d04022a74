"""Operator command line for the full pipeline.

Every subcommand is reproducible from its flags: all randomness sits behind
an explicit --seed, data goes to files, and anything human-readable goes to
stdout.  Report directories receive both delimited text and rendered figures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dataset as ds
from . import evaluation as ev
from . import mlp
from .netbank import MissingModelError, ModelRecord, NetworkBank, TrainingProvenance
from .simulator import (
    ScenarioSpec,
    SimulatorError,
    generate_scenario,
    read_scenario,
    run_headless,
    write_scenario,
)


def _cmd_normalize(args) -> int:
    raw = ds.read_raw(args.raw)
    if args.sample is not None:
        policy = ds.SampledPermutations(count=args.sample, seed=args.seed)
    else:
        policy = ds.FullPermutations()
    normalized = ds.normalize(raw, policy)
    ds.write_normalized(normalized, args.out)
    print(f"normalized {raw.record_count} records -> {normalized.record_count} ({args.out})")
    return 0


def _train_config(args) -> mlp.TrainConfig:
    return mlp.TrainConfig(
        learning_rate=args.lr,
        momentum=args.momentum,
        max_epochs=args.max_epochs,
        patience=args.patience,
        shuffle_seed=args.seed,
    )


def _cmd_train(args) -> int:
    normalized = ds.read_normalized(args.normalized)
    if normalized.n_objects != args.n:
        raise SystemExit(
            f"error: {args.normalized} holds {normalized.n_objects}-object data, --n says {args.n}"
        )
    scaled = normalized if normalized.meta.coordinate_scale == ds.UNIT_SCALE \
        else ds.scale_coordinates(normalized)
    assignment = ds.split(scaled, args.seed)
    config = mlp.NetworkConfig(n_objects=args.n, hidden_size=args.hidden, seed=args.seed)
    net = mlp.init(config)
    tc = _train_config(args)
    trained, report = mlp.train_early_stop(net, scaled, assignment, tc)
    mlp.save_model(trained, args.out)
    print(
        f"trained {args.n}-object model: best epoch {report.best_epoch}, "
        f"validation mse {report.best_validation_mse:.6f} ({args.out})"
    )
    if args.bank is not None:
        bank = NetworkBank.load(args.bank)
        version = 1
        try:
            version = bank.select(args.n).version + 1
        except MissingModelError:
            pass
        raw = None
        if args.raw is not None:
            raw = ds.read_raw(args.raw)
        record = ModelRecord(
            n_objects=args.n,
            network=trained,
            meta=ds.DatasetMeta(area_bounds=normalized.meta.area_bounds,
                                coordinate_scale=ds.NO_SCALE, seed=normalized.meta.seed),
            version=version,
            provenance=TrainingProvenance(
                dataset_digest=ds.content_digest(normalized),
                policy=normalized.provenance.policy,
                split_seed=args.seed,
                train_config=tc,
                stop_epoch=report.stop_epoch,
                best_epoch=report.best_epoch,
                best_validation_mse=report.best_validation_mse,
            ),
        )
        bank.install(record, raw)
        print(f"installed into bank {args.bank} as n{args.n}/v{version}")
    if args.report_dir is not None:
        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        ev.write_training_curve(report, out / "training_curve.tsv")
        from .figures import render_training_curve
        render_training_curve(report, out / "training_curve.png")
        print(f"training curve written to {out}")
    return 0


def _cmd_eval(args) -> int:
    net = mlp.load_model(args.model)
    normalized = ds.read_normalized(args.normalized)
    records = list(normalized.records())
    if args.slice != "all":
        assignment = ds.split(normalized, args.split_seed)
        picked = set(assignment.indices(args.slice).tolist())
        records = [r for i, r in enumerate(records) if i in picked]
    cm = ev.confusion(net, records, normalized.meta, mode=args.mode, threshold=args.threshold)
    hist = ev.error_histogram(net, records, normalized.meta)
    print(ev.format_confusion(cm), end="")
    print(ev.format_histogram(hist), end="")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ev.write_confusion(cm, out / "confusion.tsv")
    ev.write_histogram(hist, out / "histogram.tsv")
    from .figures import render_confusion, render_histogram
    render_confusion(cm, out / "confusion.png")
    render_histogram(hist, out / "histogram.png")
    print(f"metrics written to {out}")
    return 0


def _cmd_genscenario(args) -> int:
    spec = ScenarioSpec(
        n_objects=args.n,
        n_patterns=args.patterns,
        records_per_pattern=args.records,
        seed=args.seed,
        total_records=args.total,
        patterns=tuple(args.pattern) if args.pattern else None,
    )
    scenario, raw = generate_scenario(spec)
    write_scenario(scenario, args.out_scenario)
    ds.write_raw(raw, args.out_raw)
    print(
        f"scenario with {scenario.n_objects} objects, {spec.n_patterns} patterns "
        f"-> {args.out_scenario}; {raw.record_count} raw records -> {args.out_raw}"
    )
    return 0


def _cmd_simulate(args) -> int:
    scenario = read_scenario(args.scenario)
    bank = NetworkBank.load(args.bank)
    if not args.headless:
        raise SystemExit("error: interactive simulation runs behind `sentinel serve`; pass --headless")
    ticks = args.ticks
    if ticks is None:
        last = 0.0
        for t in scenario.trajectories:
            if t.waypoints:
                last = max(last, t.waypoints[-1][0])
        ticks = int(round(last / scenario.tick_interval))
    log, report = run_headless(scenario, bank, ticks, threshold=args.threshold,
                               out_dir=args.out_dir)
    print(f"simulated {len(log)} ticks")
    if report is not None:
        alarmed = sum(1 for e in log.entries if e.alarms)
        print(f"ticks with alarms: {alarmed}; reports in {args.out_dir}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    scenario = read_scenario(args.scenario)
    bank = NetworkBank.load(args.bank)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise SystemExit(f"error: --bind must be host:port, got {args.bind!r}")
    print(f"serving {args.scenario} on {host}:{port} (ctrl-c to stop)")
    try:
        serve(scenario, bank, (host, int(port)), threshold=args.threshold,
              tick_seconds=args.tick_seconds)
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentinel",
        description="hostility scoring: data normalization, training, evaluation, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="expand a raw dataset with object-order permutations")
    p.add_argument("raw", help="raw dataset file")
    p.add_argument("out", help="output normalized dataset file")
    p.add_argument("--sample", type=int, default=None,
                   help="sample this many permutations per record instead of all N!")
    p.add_argument("--seed", type=int, default=0, help="seed for permutation sampling")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("train", help="train a model on a normalized dataset")
    p.add_argument("normalized", help="normalized dataset file")
    p.add_argument("--n", type=int, required=True, help="object count the model serves")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--hidden", type=int, default=None, help="hidden layer width (default 2N)")
    p.add_argument("--lr", type=float, default=0.05, help="learning rate")
    p.add_argument("--momentum", type=float, default=0.0, help="momentum")
    p.add_argument("--patience", type=int, default=6,
                   help="epochs without validation improvement before stopping")
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for weight init, the 70/20/10 split and epoch shuffling")
    p.add_argument("--bank", default=None, help="also install the model into this bank root")
    p.add_argument("--raw", default=None, help="raw dataset to store alongside a bank install")
    p.add_argument("--report-dir", default=None, help="write training curve (tsv + png) here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="confusion matrix and error histogram for a model")
    p.add_argument("model", help="model file")
    p.add_argument("normalized", help="normalized dataset file")
    p.add_argument("--mode", choices=("argmax", "threshold"), required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--slice", choices=("all", "train", "validation", "test"), default="all",
                   help="evaluate everything or one split slice")
    p.add_argument("--split-seed", type=int, default=0, help="seed used when slicing")
    p.add_argument("--out-dir", default="reports", help="directory for tsv + png outputs")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("genscenario", help="synthesize a scenario plus raw training data")
    p.add_argument("--n", type=int, required=True, help="object count")
    p.add_argument("--patterns", type=int, required=True, help="number of attack patterns")
    p.add_argument("--records", type=int, required=True, help="dataset records per pattern")
    p.add_argument("--total", type=int, default=None, help="cap the total record count")
    p.add_argument("--pattern", action="append", default=None,
                   help="explicit pattern name (repeatable), overriding the default set")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-scenario", required=True)
    p.add_argument("--out-raw", required=True)
    p.set_defaults(func=_cmd_genscenario)

    p = sub.add_parser("simulate", help="run a scenario against a model bank")
    p.add_argument("scenario", help="scenario file")
    p.add_argument("bank", help="bank root directory")
    p.add_argument("--headless", action="store_true", help="run without an operator")
    p.add_argument("--ticks", type=int, default=None,
                   help="tick count (default: full scripted span)")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out-dir", default="reports", help="directory for log + metrics outputs")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="serve a scenario to an operator console")
    p.add_argument("scenario", help="scenario file")
    p.add_argument("bank", help="bank root directory")
    p.add_argument("--bind", required=True, help="host:port to listen on")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--tick-seconds", type=float, default=None,
                   help="real seconds per tick (default: the scenario's tick interval)")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    from .netbank import NetbankError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ds.DatasetError, mlp.MlpError, ev.EvaluationError, SimulatorError,
            NetbankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
