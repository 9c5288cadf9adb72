"""Batch command-line interface.

Eight subcommands tie the pipeline together:

  fit-dt      train the sequence model on a triangle CSV
  fit-copula  joint MLE of marginals and a copula on a triangle pair
  bootstrap   predictive reserve distributions (mc, parametric, block, synth)
  synth       synthetic triangle pairs from the tabular synthesizer
  risk        TVaR / risk-capital ladder from a distribution CSV
  simulate    the full simulated comparison study
  sweep       validation error versus sequence length
  report      summarize a run directory; optionally replay and verify it

Every command that draws random numbers requires an explicit --seed so
that no artifact ever depends on hidden state. Each run directory gets
a manifest recording argv, configuration, input/output hashes, and
library versions; `report --replay` re-executes the recorded command
and verifies the outputs byte for byte.

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

import numpy as np

from . import risk
from .copulas import COPULA_FAMILIES, PRODUCT
from .copula_reg import fit as fit_copula_regression
from .copula_reg import reserves_for_pair
from .deep_triangle import (
    ASYMMETRIC,
    SYMMETRIC,
    TrainConfig,
    load_model,
    predict_reserves,
    save_model,
    train,
)
from .manifest import RunManifest, load_manifest, replay_manifest
from .resample import (
    BLOCK_BOOTSTRAP,
    COPULA_SYNTH,
    EDT_GENERATORS,
    ReserveDistribution,
    build_dev_year_tables,
    copula_synthesize,
    edt_predictive_distribution,
    mc_simulate,
    parametric_bootstrap,
)
from .simulation import (
    StudyConfig,
    default_params,
    generate_portfolio,
    run_study,
    sequence_length_sweep,
)
from .triangles import (
    PortfolioDataset,
    parse_triangle_csv,
    write_triangle_csv,
)

MC = "mc"
PARAMETRIC = "parametric"
BLOCK = "block"
SYNTH = "synth"
GENERATOR_CHOICES = (MC, PARAMETRIC, BLOCK, SYNTH)

WORKERS_ENV = "MVRESERVE_WORKERS"


class CliError(RuntimeError):
    """Runtime failure surfaced as exit code 1."""


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise CliError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise CliError(f"{WORKERS_ENV} must be >= 1, got {value}")
    return value


def _load_dataset(args) -> PortfolioDataset:
    premiums = getattr(args, "premiums", None)
    return parse_triangle_csv(args.data, premiums, schema=args.schema)


def _write_distribution(out_dir: str, dist: ReserveDistribution) -> None:
    path = os.path.join(out_dir, "distribution.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication", "R1", "R2", "R"])
        for b, row in enumerate(dist.draws, start=1):
            writer.writerow([b, repr(float(row[0])), repr(float(row[1])), repr(float(row[2]))])
    meta = {
        "generator": dist.generator,
        "seed": dist.seed,
        "requested": dist.requested,
        "n_draws": dist.n_draws,
        "failures": dist.failures,
        "metadata": dist.metadata,
    }
    with open(os.path.join(out_dir, "metadata.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_distribution(path: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["replication", "R1", "R2", "R"]:
            raise CliError(f"{path}: expected header replication,R1,R2,R, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 4:
                raise CliError(f"{path}:{lineno}: too few columns")
            try:
                rows.append([float(row[1]), float(row[2]), float(row[3])])
            except ValueError:
                raise CliError(f"{path}:{lineno}: non-numeric value in {row[1:4]}") from None
    if len(rows) < 2:
        raise CliError(f"{path}: need at least two replications, found {len(rows)}")
    return np.asarray(rows, dtype=np.float64)


def _write_reserves_csv(out_dir: str, rows: list[tuple[str, float, float, float]]) -> None:
    with open(os.path.join(out_dir, "reserves.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["company", "R1", "R2", "R"])
        for company, r1, r2, total in rows:
            writer.writerow([company, repr(r1), repr(r2), repr(total)])


def _train_config(args, hidden: int | None = None) -> TrainConfig:
    return TrainConfig(
        max_epochs=args.max_epochs,
        patience=args.patience,
        split_fraction=args.split_fraction,
        loss_kind=args.loss,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        seed=args.seed,
        hidden=args.hidden if hidden is None else hidden,
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--hidden", type=int, default=64)
    parser.add_argument("--max-epochs", type=int, default=1000)
    parser.add_argument("--patience", type=int, default=200)
    parser.add_argument("--learning-rate", type=float, default=5e-4)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--split-fraction", type=float, default=0.8)
    parser.add_argument(
        "--loss", choices=(SYMMETRIC, ASYMMETRIC), default=SYMMETRIC
    )


def _add_data_flags(parser: argparse.ArgumentParser, premiums_required: bool = False) -> None:
    parser.add_argument("--data", required=True, help="loss triangle CSV")
    parser.add_argument(
        "--premiums",
        required=premiums_required,
        default=None,
        help="premium CSV (required for the long schema)",
    )
    parser.add_argument("--schema", choices=("long", "wide"), default="long")


def _manifest_inputs(manifest: RunManifest, *paths: str | None) -> None:
    for path in paths:
        if path:
            manifest.add_input(path)


def _cmd_fit_dt(args) -> int:
    data = _load_dataset(args)
    config = _train_config(args)
    result = train(data, config, max_history=args.max_history)
    pred = predict_reserves(result.model, data)

    os.makedirs(args.out, exist_ok=True)
    save_model(result.model, os.path.join(args.out, "model.json"))
    _write_reserves_csv(
        args.out, [(e.company_id, e.r1, e.r2, e.total) for e in pred.estimates]
    )
    summary = {
        "best_epoch": result.best_epoch,
        "best_valid_loss": result.best_valid_loss,
        "stopped_epoch": result.stopped_epoch,
        "config": config.__dict__,
        "max_history": args.max_history,
    }
    with open(os.path.join(args.out, "training.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest = RunManifest(argv=args._argv, seed=args.seed, config=summary["config"])
    _manifest_inputs(manifest, args.data, args.premiums)
    manifest.write(args.out)
    print(f"trained {len(data.companies)} companies; best epoch {result.best_epoch}")
    return 0


def _serialize_fit(fit_result) -> dict:
    def marginal(m):
        return {
            "family": m.family,
            "xi": m.xi,
            "alpha": m.alpha.tolist(),
            "beta": m.beta.tolist(),
            "shape": m.shape,
            "company_effects": None
            if m.company_effects is None
            else m.company_effects.tolist(),
        }

    return {
        "marginal1": marginal(fit_result.marginal1),
        "marginal2": marginal(fit_result.marginal2),
        "copula": {
            "family": fit_result.copula.family,
            "theta": fit_result.copula.theta,
            "df": fit_result.copula.df,
        },
        "loglik": fit_result.loglik,
        "aic": fit_result.aic,
        "bic": fit_result.bic,
        "n_obs": fit_result.n_obs,
        "n_params": fit_result.n_params,
        "converged": fit_result.converged,
        "n_iter": fit_result.n_iter,
        "grad_norm": fit_result.grad_norm,
    }


def _cmd_fit_copula(args) -> int:
    data = _load_dataset(args)
    fit_result = fit_copula_regression(
        data,
        copula_family=args.copula,
        include_company_effects=args.company_effects,
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "fit.json"), "w", encoding="utf-8") as fh:
        json.dump(_serialize_fit(fit_result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    rows = []
    for pair in data.companies:
        r1, r2, total = reserves_for_pair(fit_result, pair)
        rows.append((pair.company_id, r1, r2, total))
    _write_reserves_csv(args.out, rows)

    manifest = RunManifest(
        argv=args._argv,
        seed=None,
        config={"copula": args.copula, "company_effects": args.company_effects},
    )
    _manifest_inputs(manifest, args.data, args.premiums)
    manifest.write(args.out)
    theta = fit_result.copula.theta
    print(
        f"fit {args.copula}: loglik={fit_result.loglik:.4f} theta={theta:.6f} "
        f"converged={fit_result.converged}"
    )
    return 0


def _cmd_bootstrap(args) -> int:
    data = _load_dataset(args)
    workers = args.workers if args.workers is not None else _default_workers()
    config_record: dict = {"generator": args.generator, "n_draws": args.n_draws}

    if args.generator in (MC, PARAMETRIC):
        fit_result = fit_copula_regression(data, copula_family=args.copula)
        pair = data.companies[0]
        config_record["copula"] = args.copula
        if args.generator == MC:
            dist = mc_simulate(
                fit_result,
                pair.lob1.premiums,
                pair.lob2.premiums,
                n_draws=args.n_draws,
                seed=args.seed,
            )
        else:
            dist = parametric_bootstrap(
                fit_result, data, n_draws=args.n_draws, seed=args.seed
            )
    else:
        if args.model is None:
            raise CliError(
                f"--generator {args.generator} requires --model (train one with fit-dt)"
            )
        model = load_model(args.model)
        generator = BLOCK_BOOTSTRAP if args.generator == BLOCK else COPULA_SYNTH
        config = TrainConfig(
            max_epochs=args.finetune_epochs,
            patience=args.finetune_epochs,
            hidden=model.hidden,
            seed=args.seed,
            learning_rate=args.finetune_learning_rate,
        )
        config_record.update(
            {
                "model": os.path.abspath(args.model),
                "finetune_epochs": args.finetune_epochs,
                "finetune_learning_rate": args.finetune_learning_rate,
                "warm_start": not args.cold_start,
            }
        )
        edt = edt_predictive_distribution(
            model,
            data,
            generator,
            n_draws=args.n_draws,
            seed=args.seed,
            config=config,
            warm_start=not args.cold_start,
            workers=workers,
        )
        dist = edt.total

    os.makedirs(args.out, exist_ok=True)
    _write_distribution(args.out, dist)
    manifest = RunManifest(argv=args._argv, seed=args.seed, config=config_record)
    _manifest_inputs(manifest, args.data, args.premiums, args.model)
    manifest.write(args.out)
    totals = dist.draws[:, 2]
    print(
        f"{args.generator}: {dist.n_draws} draws, mean={totals.mean():.2f}, "
        f"cv={totals.std(ddof=1) / totals.mean():.4f}"
    )
    return 0


def _cmd_synth(args) -> int:
    data = _load_dataset(args)
    if args.model is not None:
        model = load_model(args.model)
        squares = predict_reserves(model, data).squares
    else:
        if not all(
            p.lob1.is_full_square and p.lob2.is_full_square for p in data.companies
        ):
            raise CliError(
                "input triangles are not completed squares; pass --model to "
                "fill the unobserved cells first"
            )
        squares = data.companies
    tables = build_dev_year_tables(squares)
    synthetic = copula_synthesize(
        tables, data, n_companies=args.n_companies, seed=args.seed
    )
    os.makedirs(args.out, exist_ok=True)
    write_triangle_csv(
        synthetic,
        os.path.join(args.out, "synthetic_losses.csv"),
        os.path.join(args.out, "synthetic_premiums.csv"),
    )
    manifest = RunManifest(
        argv=args._argv,
        seed=args.seed,
        config={"n_companies": args.n_companies, "model": args.model},
    )
    _manifest_inputs(manifest, args.data, args.premiums, args.model)
    manifest.write(args.out)
    print(f"synthesized {len(synthetic.companies)} triangle pairs")
    return 0


def _parse_levels(raw: str) -> list[float]:
    levels = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            pct = float(token)
        except ValueError:
            raise CliError(f"bad level {token!r}; expected percentages like 80,95,99") from None
        if not 0.0 < pct < 100.0:
            raise CliError(f"level {pct} out of range (0, 100)")
        levels.append(pct / 100.0)
    if not levels:
        raise CliError("no levels given")
    return levels


def _cmd_risk(args) -> int:
    draws = _read_distribution(args.dist)
    levels = _parse_levels(args.levels)
    r1, r2, total = draws[:, 0], draws[:, 1], draws[:, 2]
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "rc_ladder.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["level", "tvar", "risk_capital", "silo_tvar", "silo_risk_capital", "gain"]
        )
        for k in levels:
            joint_tvar = risk.tvar(total, k)
            silo_tvar = risk.tvar(r1, k) + risk.tvar(r2, k)
            if k >= 0.6:
                rc_joint = risk.risk_capital(total, k)
                rc_silo = risk.silo(r1, r2, k)
                gain = risk.gain(rc_silo, rc_joint)
                row = [k, joint_tvar, rc_joint, silo_tvar, rc_silo, gain]
            else:
                row = [k, joint_tvar, "", silo_tvar, "", ""]
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    manifest = RunManifest(
        argv=args._argv, seed=None, config={"levels": levels}
    )
    _manifest_inputs(manifest, args.dist)
    manifest.write(args.out)
    print(f"wrote ladder for {len(levels)} levels")
    return 0


def _cmd_simulate(args) -> int:
    workers = args.workers if args.workers is not None else _default_workers()
    params = default_params(n_pairs=args.pairs, seed=args.seed)
    config = StudyConfig(edt_generator=args.edt_generator, workers=workers)
    if args.train_epochs is not None or args.train_hidden is not None:
        base = config.train
        epochs = args.train_epochs or base.max_epochs
        config = StudyConfig(
            edt_generator=args.edt_generator,
            workers=workers,
            train=TrainConfig(
                max_epochs=epochs,
                patience=min(base.patience, epochs),
                split_fraction=base.split_fraction,
                loss_kind=base.loss_kind,
                learning_rate=base.learning_rate,
                batch_size=base.batch_size,
                seed=base.seed,
                hidden=args.train_hidden or base.hidden,
            ),
            finetune=TrainConfig(
                max_epochs=config.finetune.max_epochs,
                patience=config.finetune.patience,
                loss_kind=config.finetune.loss_kind,
                learning_rate=config.finetune.learning_rate,
                seed=config.finetune.seed,
                hidden=args.train_hidden or config.finetune.hidden,
            ),
        )
    report = run_study(params, n_draws=args.draws, config=config)
    report.write(args.out)
    manifest = RunManifest(
        argv=args._argv,
        seed=args.seed,
        config={"pairs": args.pairs, "draws": args.draws, "edt_generator": args.edt_generator},
    )
    manifest.write(args.out)
    dt_mape = report.mape["dt"]
    print(
        f"study done in {report.runtime_seconds:.0f}s: "
        f"sequence-model MAPE lob1={dt_mape['lob1']:.4f} lob2={dt_mape['lob2']:.4f}"
    )
    return 0


def _cmd_sweep(args) -> int:
    params = default_params(n_pairs=args.pairs, seed=args.seed)
    data, _ = generate_portfolio(params)
    lengths = tuple(
        int(t) for t in args.lengths.split(",") if t.strip()
    ) if args.lengths else tuple(range(1, data.origin_count))
    config = _train_config(args)
    result = sequence_length_sweep(data, lengths, config)
    os.makedirs(args.out, exist_ok=True)
    result.write_csv(os.path.join(args.out, "sweep.csv"))
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "lengths": list(result.lengths),
                "valid_losses": list(result.valid_losses),
                "best_length": result.best_length,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    manifest = RunManifest(
        argv=args._argv,
        seed=args.seed,
        config={"pairs": args.pairs, "lengths": list(lengths)},
    )
    manifest.write(args.out)
    print(f"best length: {result.best_length}")
    return 0


def _cmd_report(args) -> int:
    manifest_path = os.path.join(args.run, "manifest.json")
    payload = load_manifest(manifest_path)
    lines = [
        f"command: {' '.join(payload['argv'])}",
        f"seed: {payload.get('seed')}",
        f"inputs: {len(payload['inputs'])} file(s)",
        f"outputs: {len(payload['outputs'])} file(s)",
        f"versions: {json.dumps(payload.get('versions', {}), sort_keys=True)}",
    ]
    print("\n".join(lines))
    if not args.replay:
        return 0
    work_dir = args.work_dir or tempfile.mkdtemp(prefix="mvreserve-replay-")
    outcome = replay_manifest(manifest_path, work_dir)
    print(
        f"replay into {work_dir}: {len(outcome['matched'])} matched, "
        f"{len(outcome['mismatched'])} mismatched, {len(outcome['missing'])} missing"
    )
    if outcome["mismatched"] or outcome["missing"]:
        for rel in outcome["mismatched"]:
            print(f"mismatch: {rel}", file=sys.stderr)
        for rel in outcome["missing"]:
            print(f"missing: {rel}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvreserve",
        description="Multivariate loss reserving: sequence model, copula "
        "regression, predictive distributions, and risk capital.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-dt", help="train the sequence reserve model")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--max-history", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_fit_dt)

    p = sub.add_parser("fit-copula", help="copula regression MLE")
    _add_data_flags(p)
    p.add_argument("--copula", choices=COPULA_FAMILIES, default=PRODUCT)
    p.add_argument("--company-effects", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit_copula)

    p = sub.add_parser("bootstrap", help="predictive reserve distribution")
    _add_data_flags(p)
    p.add_argument("--generator", choices=GENERATOR_CHOICES, required=True)
    p.add_argument("--copula", choices=COPULA_FAMILIES, default=PRODUCT)
    p.add_argument("--model", default=None, help="model.json from fit-dt")
    p.add_argument("--n-draws", type=int, default=1000)
    p.add_argument("--finetune-epochs", type=int, default=5)
    p.add_argument("--finetune-learning-rate", type=float, default=1e-4)
    p.add_argument("--cold-start", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("synth", help="synthetic triangle pairs")
    _add_data_flags(p)
    p.add_argument("--model", default=None, help="model.json to complete squares")
    p.add_argument("--n-companies", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("risk", help="TVaR / risk-capital ladder")
    p.add_argument("--dist", required=True, help="distribution.csv from bootstrap")
    p.add_argument("--levels", default="80,85,90,95,99")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_risk)

    p = sub.add_parser("simulate", help="run the simulated comparison study")
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--draws", type=int, default=200)
    p.add_argument(
        "--edt-generator", choices=EDT_GENERATORS, default=BLOCK_BOOTSTRAP
    )
    p.add_argument("--train-epochs", type=int, default=None, help="cap the training schedule")
    p.add_argument("--train-hidden", type=int, default=None, help="override the hidden width")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="sequence-length validation curve")
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--lengths", default=None, help="comma list, default 1..I-1")
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="summarize (and optionally replay) a run")
    p.add_argument("--run", required=True, help="run directory with manifest.json")
    p.add_argument("--replay", action="store_true")
    p.add_argument("--work-dir", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = ["mvreserve"] + argv
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
