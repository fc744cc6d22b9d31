"""ussl command-line interface.

Subcommands follow the pipeline order:

    ussl gen-data      --preset universal --seed 7 --out runs/data
    ussl pretrain-vae  --scenario runs/data/scenario.csv --out runs/vae
    ussl train         --scenario runs/data/scenario.csv --vae runs/vae --out runs/train
    ussl score         --scenario runs/data/scenario.csv --params runs/train/params.npz --out runs/score
    ussl evaluate      --preset universal --seeds 5 --out runs/eval
    ussl reproduce     --seeds 5 --out runs/acceptance

Every subcommand writes `manifest.json` into its `--out` directory. Exit
code is 0 on success, 1 on any pipeline error (or failed acceptance
criterion), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from app.cli.manifest import ManifestWriter
from app.config import DEFAULT_OUT_DIR, DEFAULT_SEEDS, PROFILES, load_train_config, parse_overrides, write_config_file
from app.exceptions import DataError, UsslError
from app.logging import get_logger, log_context, setup_logging
from app.models.scenario import ScenarioSpec
from app.models.training import LOSS_COLUMNS, TrainConfig
from app.networks.bundle import ModelBundle
from app.networks.vae import Vae
from app.services.acceptance_service import run_acceptance
from app.services.cds_service import CdsResult, GmmFit, run_cds, separate_domains
from app.services.doe_service import labeled_prototypes, score_unlabeled
from app.services.eval_service import ABLATIONS, run_experiment
from app.services.report_service import ReportService
from app.services.synthdata_service import SCENARIO_KINDS, generate_from_spec, preset_scenario, with_seed
from app.services.training_service import train
from app.utils.csv_utils import load_csv, save_csv, write_table
from app.utils.scenario_file import read_scenario_file, write_scenario_file
from app.utils.seeding import stage_rng

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


# Argument parsing


def _add_common(parser: argparse.ArgumentParser, out_default: str) -> None:
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT_DIR / out_default, help="Output directory")
    parser.add_argument("--seed", type=int, default=0, help="Root seed of the run")
    parser.add_argument("--config", type=Path, default=None, help="KEY=VALUE training config file")
    parser.add_argument(
        "--profile",
        choices=sorted(PROFILES),
        default="desk",
        help="Named defaults applied before --config and --set",
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key (repeatable)",
    )
    parser.add_argument("--debug", action="store_true", help="Colored console logs at DEBUG level")
    parser.add_argument("--log-level", default=None, help="Log level override (e.g. WARNING)")


def _add_scenario_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--preset", choices=SCENARIO_KINDS, default=None, help="Built-in scenario (default universal)")
    source.add_argument("--scenario-file", type=Path, default=None, help="KEY=VALUE scenario description")


def _parse_seeds(text: str) -> list[int]:
    """'5' → [0..4]; '3,8,11' → [3, 8, 11]."""
    try:
        if "," in text:
            return [int(part) for part in text.split(",") if part.strip()]
        count = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list '{text}'")
    if count < 1:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return list(range(count))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ussl",
        description="Universal semi-supervised learning at desk scale",
    )
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")

    gen = sub.add_parser("gen-data", help="Generate a synthetic scenario")
    _add_common(gen, "data")
    _add_scenario_source(gen)

    pre = sub.add_parser("pretrain-vae", help="Pre-train the VAE and fit the domain mixture")
    _add_common(pre, "vae")
    pre.add_argument("--scenario", type=Path, required=True, help="Scenario CSV")

    tr = sub.add_parser("train", help="Run joint training")
    _add_common(tr, "train")
    tr.add_argument("--scenario", type=Path, required=True, help="Scenario CSV")
    tr.add_argument("--vae", type=Path, default=None, help="Output directory of pretrain-vae to reuse")

    sc = sub.add_parser("score", help="Score the unlabeled pool with trained parameters")
    _add_common(sc, "score")
    sc.add_argument("--scenario", type=Path, required=True, help="Scenario CSV")
    sc.add_argument("--params", type=Path, required=True, help="params.npz written by train")

    ev = sub.add_parser("evaluate", help="Multi-seed experiment report")
    _add_common(ev, "eval")
    _add_scenario_source(ev)
    ev.add_argument("--seeds", type=_parse_seeds, default=list(DEFAULT_SEEDS), help="Count N (seeds 0..N-1) or a list")
    ev.add_argument("--no-erm", action="store_true", help="Skip the supervised baseline")
    ev.add_argument(
        "--ablations",
        action="store_true",
        help="Also train one model per switched-off component (w/o SSL, DOE, CDS, DA)",
    )

    rep = sub.add_parser("reproduce", help="Run the acceptance suite")
    _add_common(rep, "acceptance")
    _add_scenario_source(rep)
    rep.add_argument("--seeds", type=_parse_seeds, default=list(DEFAULT_SEEDS), help="Count N (seeds 0..N-1) or a list")

    return parser


# Shared helpers


def _require_file(path: Path, what: str) -> Path:
    if not path.exists():
        raise DataError(f"{what} not found: {path}", details={"path": str(path)})
    return path


def _resolve_config(args: argparse.Namespace) -> TrainConfig:
    config = load_train_config(args.config, parse_overrides(args.overrides), profile=args.profile)
    if "seed" not in parse_overrides(args.overrides):
        config = config.model_copy(update={"seed": args.seed})
    return config


def _resolve_spec(args: argparse.Namespace) -> tuple[ScenarioSpec, str]:
    if args.scenario_file is not None:
        spec = read_scenario_file(_require_file(args.scenario_file, "Scenario description"))
        return with_seed(spec, args.seed), str(args.scenario_file)
    kind = args.preset or "universal"
    return preset_scenario(kind, args.seed), kind


def _load_cds(vae_dir: Path, scenario, config: TrainConfig) -> CdsResult:
    vae = Vae.from_config(scenario.input_dim, config.vae, config.seed)
    vae.load(_require_file(vae_dir / "vae.npz", "VAE parameters"))
    with open(_require_file(vae_dir / "gmm.json", "Mixture fit")) as f:
        gmm = GmmFit.from_dict(json.load(f))
    return CdsResult(vae=vae, gmm=gmm, scores=separate_domains(vae, gmm, scenario.unlabeled.x), trace=[])


def _flag(values: np.ndarray, i: int) -> int:
    return int(bool(values[i]))


# Subcommands


def cmd_gen_data(args: argparse.Namespace, writer: ManifestWriter) -> int:
    spec, name = _resolve_spec(args)
    writer.start(config={"scenario": name}, seeds=[args.seed])
    scenario = generate_from_spec(spec)
    save_csv(scenario, writer.add_output("scenario_csv", args.out / "scenario.csv"))
    write_scenario_file(spec, writer.add_output("scenario_file", args.out / "scenario.env"))
    logger.info("Scenario written", out=str(args.out), labeled=len(scenario.labeled), unlabeled=len(scenario.unlabeled))
    return EXIT_OK


def cmd_pretrain_vae(args: argparse.Namespace, writer: ManifestWriter) -> int:
    config = _resolve_config(args)
    writer.start(config=config.model_dump(mode="json"), seeds=[config.seed], inputs={"scenario": args.scenario})
    scenario = load_csv(_require_file(args.scenario, "Scenario CSV"))
    cds = run_cds(scenario, config)
    cds.vae.save(writer.add_output("vae", args.out / "vae.npz"))
    if cds.gmm is not None:
        with open(writer.add_output("gmm", args.out / "gmm.json"), "w") as f:
            json.dump(cds.gmm.to_dict(), f, indent=2)
    pool = scenario.unlabeled
    write_table(
        writer.add_output("domain_scores", args.out / "domain_scores.csv"),
        ["index", "L_re", "w_d", "is_ukd"],
        ([i, cds.scores.l_re[i], cds.scores.w_d[i], _flag(pool.is_ukd, i)] for i in range(len(pool))),
    )
    write_table(
        writer.add_output("vae_trace", args.out / "vae_trace.csv"),
        ["epoch", "objective"],
        enumerate(cds.trace),
    )
    return EXIT_OK


def cmd_train(args: argparse.Namespace, writer: ManifestWriter) -> int:
    config = _resolve_config(args)
    inputs = {"scenario": args.scenario}
    if args.vae is not None:
        inputs["vae"] = args.vae
    writer.start(config=config.model_dump(mode="json"), seeds=[config.seed], inputs=inputs)
    scenario = load_csv(_require_file(args.scenario, "Scenario CSV"))

    cds: Optional[CdsResult] = None
    if not config.drop_unlabeled and len(scenario.unlabeled) > 0:
        cds = _load_cds(args.vae, scenario, config) if args.vae is not None else run_cds(scenario, config)

    bundle = ModelBundle.from_config(scenario.input_dim, scenario.known_class_count, config)
    result = train(scenario, bundle, cds, config)

    write_table(
        writer.add_output("history", args.out / "history.csv"),
        list(LOSS_COLUMNS),
        ([getattr(h, column) for column in LOSS_COLUMNS] for h in result.history),
    )
    bundle.save(writer.add_output("params", args.out / "params.npz"))
    write_config_file(config, writer.add_output("config", args.out / "config.env"))
    pool = scenario.unlabeled
    n_u = result.w_uc.shape[0]
    write_table(
        writer.add_output("weights", args.out / "weights.csv"),
        ["index", "w_uc", "w_ud", "w_d", "is_ukc", "is_ukd"],
        (
            [i, result.w_uc[i], result.w_ud[i], result.w_d[i], _flag(pool.is_ukc, i), _flag(pool.is_ukd, i)]
            for i in range(n_u)
        ),
    )
    return EXIT_OK


def cmd_score(args: argparse.Namespace, writer: ManifestWriter) -> int:
    config = _resolve_config(args)
    writer.start(
        config=config.model_dump(mode="json"),
        seeds=[config.seed],
        inputs={"scenario": args.scenario, "params": args.params},
    )
    scenario = load_csv(_require_file(args.scenario, "Scenario CSV"))
    bundle = ModelBundle.from_config(scenario.input_dim, scenario.known_class_count, config)
    bundle.load(_require_file(args.params, "Parameter file"))
    pool = scenario.unlabeled
    if len(pool) == 0:
        raise DataError("Scenario has no unlabeled samples to score", details={"path": str(args.scenario)})
    protos = labeled_prototypes(bundle, scenario.labeled.x, scenario.labeled.class_id)
    scores = score_unlabeled(bundle, protos, pool.x, config.aug, stage_rng(config.seed, "scoring"))
    write_table(
        writer.add_output("ukc_scores", args.out / "ukc_scores.csv"),
        ["index", "d_avg", "p_ood", "w_uc", "is_ukc"],
        ([i, scores.d_avg[i], scores.p_ood[i], scores.w_uc[i], _flag(pool.is_ukc, i)] for i in range(len(pool))),
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, writer: ManifestWriter) -> int:
    config = _resolve_config(args)
    spec, name = _resolve_spec(args)
    writer.start(config=config.model_dump(mode="json"), seeds=args.seeds, inputs=_spec_inputs(args))
    report = run_experiment(
        spec,
        config,
        args.seeds,
        scenario_name=name,
        with_erm=not args.no_erm,
        ablations=list(ABLATIONS) if args.ablations else (),
    )
    text = ReportService().render_experiment(report)
    _write_json(writer.add_output("report_json", args.out / "report.json"), report.body())
    (writer.add_output("report_text", args.out / "report.txt")).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace, writer: ManifestWriter) -> int:
    config = _resolve_config(args)
    spec, name = _resolve_spec(args)
    writer.start(config=config.model_dump(mode="json"), seeds=args.seeds, inputs=_spec_inputs(args))
    acceptance = run_acceptance(args.seeds, config, spec, scenario_name=name)
    service = ReportService()
    _write_json(writer.add_output("acceptance_json", args.out / "acceptance.json"), acceptance.body())
    text = service.render_acceptance(acceptance)
    (writer.add_output("acceptance_text", args.out / "acceptance.txt")).write_text(text)
    if acceptance.experiment is not None:
        _write_json(writer.add_output("report_json", args.out / "report.json"), acceptance.experiment.body())
        (writer.add_output("report_text", args.out / "report.txt")).write_text(
            service.render_experiment(acceptance.experiment)
        )
    sys.stdout.write(text)
    return EXIT_OK if acceptance.passed else EXIT_ERROR


def _spec_inputs(args: argparse.Namespace) -> dict[str, Path]:
    return {"scenario_file": args.scenario_file} if args.scenario_file is not None else {}


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


COMMANDS: dict[str, Callable[[argparse.Namespace, ManifestWriter], int]] = {
    "gen-data": cmd_gen_data,
    "pretrain-vae": cmd_pretrain_vae,
    "train": cmd_train,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "reproduce": cmd_reproduce,
}


def dispatch(argv: Sequence[str]) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    setup_logging(debug=args.debug, log_level=args.log_level)
    writer = ManifestWriter(args.out, args.command, argv)
    with log_context(command=args.command, seed=args.seed):
        try:
            code = COMMANDS[args.command](args, writer)
        except UsslError as e:
            logger.error("Command failed", error=e.message, error_type=type(e).__name__, details=e.details)
            sys.stderr.write(f"ussl {args.command}: error: {e.message}\n")
            writer.finalize(error=e.message)
            return EXIT_ERROR
    writer.finalize(error=None if code == EXIT_OK else "acceptance criteria failed")
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
