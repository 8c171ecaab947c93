"""Command-line entry point: synth | search | audit | plot | serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Environment overrides for reproducible runs: FAIRAUDIT_SEED pins the split
seed when --seed is absent, FAIRAUDIT_TIMESTAMP pins the report timestamp,
FAIRAUDIT_ASSETS points serve at the explorer's static bundle.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .canonical import dumps_canonical
from .dataset import (
    SplitSpec,
    encode,
    load_schema,
    load_table,
    split,
    synth_generate,
    synth_schema,
    write_csv,
)
from .doctrine import DiConfig, LdaRule, UdapConfig, acceptability_geometry, evaluate
from .doctrine import di_config_from_dict, udap_config_from_dict
from .errors import AuditError, ConfigError
from .report import AuditReport, emit_json, emit_summary, emit_svg_scatter, load_report
from .search import (
    SearchPlan,
    parse_baseline_policy,
    plan_from_dict,
    run_search,
    select_baseline,
)
from .server import create_server

DEFAULT_SEED = 42
DEFAULT_DELTAS = (0.01, 0.02)
DEFAULT_KS = (4.0, 1.0)

DEFAULT_PLAN = {
    "retention": 0.3,
    "drop_tolerance": 0.10,
    "drop_mode": "relative",
    "searches": [
        {
            "name": "logistic-full",
            "family": "logistic_regression",
            "hyperparams": {"learning_rate": [0.05, 0.1], "iterations": [200, 400]},
            "interventions": [
                {"kind": "none"},
                {"kind": "reweigh", "strength": 1.0},
                {"kind": "group_threshold_postprocess", "target_disparity": 0.0},
            ],
            "seed_base": 100,
        },
        {
            "name": "logistic-no-credit",
            "family": "logistic_regression",
            "exclude_tags": ["credit"],
            "hyperparams": {"learning_rate": [0.1], "iterations": [300]},
            "interventions": [{"kind": "none"}, {"kind": "reweigh", "strength": 0.5}],
            "seed_base": 200,
        },
        {
            "name": "logistic-numeric-only",
            "family": "logistic_regression",
            "exclude_tags": ["categorical"],
            "hyperparams": {"learning_rate": [0.1], "iterations": [300]},
            "interventions": [{"kind": "none"}],
            "seed_base": 250,
        },
        {
            "name": "tree-full",
            "family": "decision_tree",
            "hyperparams": {"max_depth": [2, 3, 5]},
            "interventions": [
                {"kind": "none"},
                {"kind": "reweigh", "strength": 1.0},
                {"kind": "group_threshold_postprocess", "target_disparity": 0.0},
            ],
            "seed_base": 300,
        },
        {
            "name": "tree-no-employment",
            "family": "decision_tree",
            "exclude_tags": ["employment"],
            "hyperparams": {"max_depth": [3, 5]},
            "interventions": [{"kind": "none"}],
            "seed_base": 400,
        },
        {
            "name": "forest-full",
            "family": "bagged_forest",
            "hyperparams": {"tree_count": [15], "max_depth": [3, 5]},
            "interventions": [{"kind": "none"}, {"kind": "group_threshold_postprocess", "target_disparity": 0.0}],
            "seed_base": 500,
        },
        {
            "name": "svm-full",
            "family": "linear_svm",
            "hyperparams": {"learning_rate": [0.05, 0.1], "iterations": [300], "l2": [0.001, 0.01]},
            "interventions": [{"kind": "none"}, {"kind": "reweigh", "strength": 1.0}],
            "seed_base": 600,
        },
        {
            "name": "svm-limited",
            "family": "linear_svm",
            "exclude_tags": ["credit", "employment", "demographic"],
            "hyperparams": {"learning_rate": [0.1], "iterations": [300]},
            "interventions": [{"kind": "none"}, {"kind": "group_threshold_postprocess", "target_disparity": 0.0}],
            "seed_base": 700,
        },
    ],
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fairaudit", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    synth = sub.add_parser("synth", help="write a synthetic dataset and its schema")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=None)

    def io_flags(p: _Parser, plan: bool = True) -> None:
        p.add_argument("--data", required=True, help="input CSV")
        p.add_argument("--schema", required=True, help="dataset schema JSON")
        if plan:
            p.add_argument("--plan", default=None, help="search plan JSON (built-in default)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)

    search_p = sub.add_parser("search", help="run the model search and write the pool")
    io_flags(search_p)

    audit = sub.add_parser("audit", help="full pipeline: search, doctrines, report, plot")
    io_flags(audit)
    audit.add_argument("--di-delta", type=float, action="append", default=None)
    audit.add_argument("--udap-k", type=float, action="append", default=None)
    audit.add_argument("--tau-pf", type=float, default=None)
    audit.add_argument("--tau-inj", type=float, default=None)
    audit.add_argument("--air-threshold", type=float, default=None)
    audit.add_argument("--alpha", type=float, default=None)
    audit.add_argument(
        "--baseline-policy",
        default="max-accuracy",
        help="max-accuracy | id:<id> | off-frontier:<eps>",
    )

    plot = sub.add_parser("plot", help="re-render the SVG scatter from a report")
    plot.add_argument("--data", required=True, help="report JSON")
    plot.add_argument("--out", required=True, help="output SVG path")

    serve = sub.add_parser("serve", help="serve a report and the explorer UI")
    serve.add_argument("--data", required=True, help="report JSON")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("FAIRAUDIT_SEED")
    return int(env) if env else DEFAULT_SEED


def _timestamp() -> str:
    env = os.environ.get("FAIRAUDIT_TIMESTAMP")
    if env:
        return env
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _doctrine_configs(args, plan_raw: dict) -> tuple[list[DiConfig], list[UdapConfig]]:
    """First config of each doctrine drives the verdicts; the rest only add
    geometry lines. Flag overrides apply on top of any plan-file doctrine
    section."""
    doc = plan_raw.get("doctrine", {})
    base_di = di_config_from_dict(doc.get("di", {}))
    base_udap = udap_config_from_dict(doc.get("udap", {}))

    if args.tau_pf is not None:
        base_di = dataclasses.replace(base_di, tau_pf=args.tau_pf)
    if args.air_threshold is not None:
        base_di = dataclasses.replace(base_di, air_threshold=args.air_threshold)
    if args.alpha is not None:
        base_di = dataclasses.replace(base_di, alpha=args.alpha)
    if args.tau_inj is not None:
        base_udap = dataclasses.replace(base_udap, tau_inj=args.tau_inj)

    deltas = args.di_delta if args.di_delta else list(DEFAULT_DELTAS)
    ks = args.udap_k if args.udap_k else list(DEFAULT_KS)
    di_configs = [
        dataclasses.replace(base_di, lda_rule=LdaRule("absolute_tolerance", delta=d))
        for d in deltas
    ]
    udap_configs = [dataclasses.replace(base_udap, k=k) for k in ks]
    return di_configs, udap_configs


def _load_plan_raw(path: str | None) -> dict:
    if path is None:
        return DEFAULT_PLAN
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _build_pool(args, plan: SearchPlan, seed: int):
    schema = load_schema(args.schema)
    table = load_table(args.data, schema)
    matrix = encode(table, schema)
    train_m, holdout_m = split(matrix, SplitSpec(seed=seed))
    fingerprint = {
        "schema_hash": schema.fingerprint(),
        "split_seed": seed,
        "holdout_fraction": 0.2,
        "n_rows": table.n_rows,
        "dropped_rows": table.dropped_count,
    }
    pool = run_search(plan, train_m, holdout_m, fingerprint)
    return schema, table, pool


def run_audit(args) -> int:
    stage = "load"
    try:
        plan_raw = _load_plan_raw(args.plan)
        plan = plan_from_dict(plan_raw)
        seed = _resolve_seed(args.seed)
        stage = "search"
        schema, table, pool = _build_pool(args, plan, seed)
        stage = "baseline"
        policy = parse_baseline_policy(args.baseline_policy)
        pool = dataclasses.replace(pool, baseline_id=select_baseline(pool, policy))
        stage = "evaluate"
        di_configs, udap_configs = _doctrine_configs(args, plan_raw)
        di_verdict, udap_verdict, divergence = evaluate(pool, di_configs[0], udap_configs[0])
        geometry = acceptability_geometry(pool.baseline, di_configs, udap_configs)
        stage = "emit"
        report = AuditReport(
            dataset={
                "schema": schema.to_dict(),
                "fingerprint": schema.fingerprint(),
                "split": {"holdout_fraction": 0.2, "seed": seed},
                "n_rows": table.n_rows,
                "dropped_rows": table.dropped_count,
                "baseline_policy": policy.canonical(),
            },
            pool=pool,
            di_configs=tuple(di_configs),
            udap_configs=tuple(udap_configs),
            di_verdict=di_verdict,
            udap_verdict=udap_verdict,
            divergence=divergence,
            geometry=tuple(geometry),
            tool_version=__version__,
            generated_at=_timestamp(),
        )
        os.makedirs(args.out, exist_ok=True)
        emit_json(report, os.path.join(args.out, "report.json"))
        emit_svg_scatter(report, os.path.join(args.out, "report.svg"))
        with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(emit_summary(report))
        print(emit_summary(report))
        return 0
    except ConfigError:
        raise  # usage error, mapped to exit 1 by run_cli
    except (OSError, AuditError) as exc:
        print(f"audit failed at stage {stage!r}: {exc}", file=sys.stderr)
        return 2


def run_cli(argv: list[str]) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.subcommand == "synth":
            seed = _resolve_seed(args.seed)
            os.makedirs(args.out, exist_ok=True)
            table = synth_generate(2000, 0.5, 1.5, 2.0, seed)
            write_csv(table, os.path.join(args.out, "data.csv"))
            with open(os.path.join(args.out, "schema.json"), "w", encoding="utf-8") as fh:
                fh.write(dumps_canonical(synth_schema().to_dict()))
            print(f"wrote synthetic dataset ({table.n_rows} rows) to {args.out}")
            return 0

        if args.subcommand == "search":
            plan_raw = _load_plan_raw(args.plan)
            plan = plan_from_dict(plan_raw)
            seed = _resolve_seed(args.seed)
            try:
                _, _, pool = _build_pool(args, plan, seed)
            except (OSError, AuditError) as exc:
                print(f"search failed: {exc}", file=sys.stderr)
                return 2
            os.makedirs(args.out, exist_ok=True)
            out_path = os.path.join(args.out, "pool.json")
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(dumps_canonical(pool.to_dict()))
            print(f"wrote {len(pool.records)} candidate models to {out_path}")
            return 0

        if args.subcommand == "audit":
            return run_audit(args)

        if args.subcommand == "plot":
            try:
                report = load_report(args.data)
                emit_svg_scatter(report, args.out)
            except (OSError, AuditError, KeyError) as exc:
                print(f"plot failed: {exc}", file=sys.stderr)
                return 2
            print(f"wrote {args.out}")
            return 0

        if args.subcommand == "serve":
            try:
                report = load_report(args.data)
            except (OSError, AuditError, KeyError) as exc:
                print(f"serve failed: {exc}", file=sys.stderr)
                return 2
            assets = os.environ.get("FAIRAUDIT_ASSETS")
            if assets is None and os.path.isdir(os.path.join("frontend", "dist")):
                assets = os.path.join("frontend", "dist")
            server = create_server(report, args.port, assets)
            host, port = server.server_address[:2]
            print(f"serving on http://{host}:{port} (assets: {assets or 'built-in page'})")
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
            return 0

        raise ConfigError(f"unknown subcommand {args.subcommand!r}")
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, AuditError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal fault
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
