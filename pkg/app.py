"""
Binary latent ranking - command-line entry point.

Trains dense and binarized learning-to-rank factorization models on
implicit-feedback ratings, evaluates them by MRR and benchmarks scoring
throughput.
"""
import argparse
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from src.controllers.experiment_controller import ExperimentController
from src.database.db_manager import DatabaseManager
from src.services.search_service import SearchSpace
from src.services.trainer import TrainConfig
from src.utils.logging_config import setup_logging
from src.utils.exceptions import ConfigError
from src.utils.config import (
    BPR_VARIANTS,
    DATA_FORMATS,
    DEFAULT_BENCH_ITEMS,
    DEFAULT_BENCH_REPETITIONS,
    DEFAULT_DIM,
    DEFAULT_DIMS,
    DEFAULT_EPOCHS,
    DEFAULT_L2,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LOG_LEVEL,
    DEFAULT_MAX_SAMPLED,
    DEFAULT_MINIBATCH_SIZE,
    DEFAULT_SEARCH_TRIALS,
    DEFAULT_SEED,
    DEFAULT_SPLIT_FRACTIONS,
    ENV_LOG_LEVEL,
    ENV_RUNS_DB,
    ENV_SEED,
    ERROR_MESSAGES,
    EXIT_CODES,
    LOSSES,
    REPRESENTATIONS,
    SEARCH_SPACE,
)


class UsageErrorParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CODES['usage'], f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageErrorParser(prog="app.py", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default ${ENV_SEED} or {DEFAULT_SEED})")
    parser.add_argument("--format", choices=DATA_FORMATS, default="dat", dest="data_format",
                        help="ratings input format")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--log-level", default=None,
                        help=f"logging level (default ${ENV_LOG_LEVEL} or {DEFAULT_LOG_LEVEL})")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=UsageErrorParser)

    p = commands.add_parser("split", help="split ratings into train/test/validation files")
    p.add_argument("input", type=Path)
    p.add_argument("--fractions", type=float, nargs=3, default=list(DEFAULT_SPLIT_FRACTIONS))
    p.add_argument("--min-rating", type=float, default=None)

    p = commands.add_parser("fit", help="train a model")
    p.add_argument("train", type=Path)
    _add_model_flags(p)
    p.add_argument("--loss", choices=LOSSES, default="bpr")
    p.add_argument("--bpr-variant", choices=BPR_VARIANTS, default="sigmoid")
    p.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--l2", type=float, default=DEFAULT_L2)
    p.add_argument("--batch-size", type=int, default=DEFAULT_MINIBATCH_SIZE)
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--k", type=int, default=DEFAULT_MAX_SAMPLED,
                   help="maximum negatives drawn per pair by the adaptive hinge loss")
    p.add_argument("--name", default=None)
    p.add_argument("--config", type=Path, default=None,
                   help="JSON training configuration (e.g. best_config.json from search); "
                        "replaces the hyperparameter flags and --seed")

    p = commands.add_parser(
        "search",
        help="random hyperparameter search scored by test MRR",
        description="Search ranges are chosen defaults, not taken from any published protocol.",
    )
    p.add_argument("train", type=Path)
    p.add_argument("test", type=Path)
    _add_model_flags(p)
    p.add_argument("--trials", type=int, default=DEFAULT_SEARCH_TRIALS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lr-range", type=float, nargs=2, default=list(SEARCH_SPACE["learning_rate"]))
    p.add_argument("--l2-range", type=float, nargs=2, default=list(SEARCH_SPACE["l2"]))

    p = commands.add_parser("binarize", help="pack a dense model into 1-bit factors")
    p.add_argument("model", type=Path)
    p.add_argument("--name", default=None)

    p = commands.add_parser("evaluate", help="MRR of a model on a held-out file")
    p.add_argument("model", type=Path)
    p.add_argument("eval", type=Path)
    p.add_argument("train", type=Path)

    p = commands.add_parser("benchmark", help="scoring throughput and memory use")
    p.add_argument("--dims", type=int, nargs="+", default=list(DEFAULT_DIMS))
    p.add_argument("--items", type=int, default=DEFAULT_BENCH_ITEMS)
    p.add_argument("--reps", type=int, default=DEFAULT_BENCH_REPETITIONS)

    p = commands.add_parser("report", help="render JSON-lines reports as a comparison table")
    p.add_argument("files", type=Path, nargs="+")
    return parser


def _add_model_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM)
    parser.add_argument("--representation", choices=REPRESENTATIONS, default="dense")


def dispatch(args, controller: ExperimentController) -> int:
    """Route parsed arguments to the controller command."""
    seed = controller.seed
    command = args.command
    details = {k: str(v) for k, v in vars(args).items()}

    if command == "split":
        action = lambda: controller.cmd_split(args.input, args.fractions, args.min_rating)
    elif command == "fit":
        def action():
            if args.config is not None:
                return controller.cmd_fit(args.train, controller.load_train_config(args.config), args.name)
            config = TrainConfig(
                dim=args.dim, representation=args.representation, loss=args.loss,
                bpr_variant=args.bpr_variant, learning_rate=args.lr, l2=args.l2,
                minibatch_size=args.batch_size, epochs=args.epochs,
                max_sampled=args.k, seed=seed,
            )
            return controller.cmd_fit(args.train, config, args.name)
    elif command == "search":
        def action():
            space = SearchSpace(
                learning_rate=tuple(args.lr_range), l2=tuple(args.l2_range),
                trials=args.trials, seed=seed,
            )
            base = TrainConfig(dim=args.dim, representation=args.representation, seed=seed)
            return controller.cmd_search(args.train, args.test, space, base, workers=args.workers)
    elif command == "binarize":
        action = lambda: controller.cmd_binarize(args.model, args.name)
    elif command == "evaluate":
        action = lambda: controller.cmd_evaluate(args.model, args.eval, args.train)
    elif command == "benchmark":
        action = lambda: controller.cmd_benchmark(args.dims, args.items, args.reps)
    else:
        action = lambda: controller.cmd_report(args.files)
    return controller.run(command, action, details)


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        setup_logging(args.log_level or os.getenv(ENV_LOG_LEVEL, DEFAULT_LOG_LEVEL))
    except ConfigError as e:
        print(ERROR_MESSAGES['usage'].format(detail=e), file=sys.stderr)
        return EXIT_CODES['usage']

    try:
        seed = args.seed if args.seed is not None else int(os.getenv(ENV_SEED, DEFAULT_SEED))
    except ValueError:
        detail = f"${ENV_SEED} must be an integer, got {os.getenv(ENV_SEED)!r}"
        print(ERROR_MESSAGES['usage'].format(detail=detail), file=sys.stderr)
        return EXIT_CODES['usage']
    runs_db = os.getenv(ENV_RUNS_DB) or args.out / "runs.db"
    controller = ExperimentController(
        out_dir=args.out,
        seed=seed,
        data_format=args.data_format,
        db_manager=DatabaseManager(runs_db),
    )
    return dispatch(args, controller)


if __name__ == "__main__":
    sys.exit(main())
