"""Command-line interface."""
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any
from typing import Optional

import click
import pandas as pd
from click.core import ParameterSource
from dotenv import load_dotenv

from .boost import evaluate as evaluate_model
from .boost import feature_importance
from .boost import load_model
from .boost import Metrics
from .boost import save_model
from .boost import train as train_model
from .config import Config
from .config import default_map
from .config import DEFAULT_SEED
from .config import ENV_PREFIX
from .config import LOG_LEVELS
from .config import read_config_file
from .dataset import AblationTable
from .dataset import analyze_subthreads
from .dataset import build_feature_matrix
from .dataset import Dataset
from .dataset import EvaluationProtocol
from .dataset import FeatureMatrix
from .dataset import filter_threads
from .dataset import load_dataset
from .dataset import METRIC_COLUMNS
from .dataset import USER_FILTERS
from .dataset import retention_summary
from .dataset import run_ablation
from .dataset import save_dataset
from .dataset import score_cell
from .exceptions import MotifControversyError
from .features import MASKS
from .synthetic import generate_synthetic
from .synthetic import SynthParams
from .thread_model import Label

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

READABLE = click.Path(
    exists=True, file_okay=True, dir_okay=False, readable=True, path_type=Path
)
WRITABLE = click.Path(
    exists=False, file_okay=True, dir_okay=False, writable=True, path_type=Path
)
DIRECTORY = click.Path(exists=False, file_okay=False, dir_okay=True, path_type=Path)

threads_option = click.option(
    "--threads", type=READABLE, required=True, help="Threads, one JSON object per line."
)
follows_option = click.option(
    "--follows", type=READABLE, help="Follow edges, 'follower<TAB>followee' per line."
)
out_option = click.option(
    "--out",
    type=DIRECTORY,
    default=Path("out"),
    show_default=True,
    help="Output directory."
)
k_option = click.option(
    "--k",
    type=click.IntRange(min=0),
    default=2,
    show_default=True,
    help="Keep threads with more than K users.",
)
mask_option = click.option(
    "--mask",
    type=click.Choice(sorted(MASKS)),
    default="all",
    show_default=True,
    help="Feature slots shown to the classifier.",
)
rounds_option = click.option(
    "--rounds", type=click.IntRange(min=1), default=100, show_default=True
)
folds_option = click.option(
    "--folds", type=click.IntRange(min=2), default=5, show_default=True
)
seed_option = click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
strict_option = click.option(
    "--strict/--lenient",
    default=False,
    help="Reject malformed lines and invalid threads instead of skipping them.",
)


def _check_jobs(ctx: click.Context, param: click.Parameter, value: int) -> int:
    if value == 0:
        raise click.BadParameter("use -1 for every core or a positive count")
    return value


jobs_option = click.option(
    "--jobs",
    type=int,
    default=-1,
    show_default=True,
    callback=_check_jobs,
    help="Parallel feature extraction workers, -1 for every core.",
)


def _announce(seed: Optional[int]) -> None:
    click.echo(f"seed: {seed}", err=True)


def _load(config: Config) -> Dataset:
    assert config.threads is not None  # noqa: S101
    try:
        dataset = load_dataset(config.threads, config.follows, strict=config.strict)
    except (MotifControversyError, OSError) as err:
        raise click.ClickException(str(err)) from err
    if not dataset.trees:
        raise click.ClickException(f"no threads in {config.threads}")
    return dataset


def _labeled_matrix(config: Config) -> FeatureMatrix:
    dataset = _load(config)
    trees = [t for t in filter_threads(dataset.trees, config.k) if t.label is not None]
    if not trees:
        raise click.ClickException(f"no labeled thread with more than {config.k} users")
    return build_feature_matrix(trees, dataset.follows, jobs=config.jobs)


def _write_table(table: AblationTable, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "metrics.csv")
    text = table.to_text()
    (out / "metrics.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


def _write_single(config: Config, mask: str, metrics: Metrics) -> None:
    row = {"mask": mask, "k": config.k, **metrics.scores()}
    row.update(tp=metrics.tp, fp=metrics.fp, tn=metrics.tn, fn=metrics.fn)
    frame = pd.DataFrame([row], columns=list(METRIC_COLUMNS))
    _write_table(AblationTable(frame), config.out)
    if metrics.undefined:
        click.echo(f"undefined (reported as 0): {', '.join(metrics.undefined)}")


@click.group(context_settings={"auto_envvar_prefix": ENV_PREFIX})
@click.version_option()
@click.option(
    "--config",
    "config_file",
    type=READABLE,
    help="YAML file of option defaults, overridden by environment and flags.",
)
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default="WARNING",
    show_default=True,
)
@click.pass_context
def main(ctx: click.Context, config_file: Optional[Path], log_level: str) -> None:
    """Detect controversy in conversation threads from interaction motifs."""
    load_dotenv()
    if config_file is not None:
        try:
            values = read_config_file(config_file)
        except ValueError as err:
            raise click.ClickException(str(err)) from err
        ctx.default_map = default_map(values, main.commands)
        if ctx.get_parameter_source("log_level") is ParameterSource.DEFAULT:
            log_level = str(values.get("log_level", log_level))
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT)


@main.command()
@threads_option
@follows_option
@out_option
@strict_option
@jobs_option
def extract(**kwargs: Any) -> None:
    """Threads to features.csv and diagnostics.csv."""
    config = Config.from_options(**kwargs)
    _announce(config.seed)
    dataset = _load(config)
    matrix = build_feature_matrix(dataset.trees, dataset.follows, jobs=config.jobs)
    config.out.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(config.out / "features.csv")
    matrix.diagnostics_to_csv(config.out / "diagnostics.csv")
    retention = retention_summary(dataset.trees, USER_FILTERS)
    retention.to_csv(config.out / "retention.csv", index=False, encoding="utf-8")
    click.echo(f"{len(matrix)} threads written to {config.out / 'features.csv'}")
    for row in retention.itertuples(index=False):
        click.echo(
            f">{row.k} users: {row.threads} threads ({row.share:.0%}),"
            f" {row.avg_users:.1f} users on average, {row.total_posts} posts"
        )


@main.command()
@threads_option
@follows_option
@click.option(
    "--model",
    type=WRITABLE,
    default=Path("out/model.json"),
    show_default=True,
    help="Where to write the trained model.",
)
@k_option
@mask_option
@rounds_option
@seed_option
@strict_option
@jobs_option
def train(**kwargs: Any) -> None:
    """Train boosted stumps on labeled threads."""
    config = Config.from_options(**kwargs)
    _announce(config.seed)
    matrix = _labeled_matrix(config)
    try:
        model = train_model(
            matrix.X, matrix.y, mask=config.mask, rounds=config.rounds, seed=config.seed
        )
        metrics = evaluate_model(model, matrix.X, matrix.y)
    except MotifControversyError as err:
        raise click.ClickException(str(err)) from err
    assert config.model is not None  # noqa: S101
    config.model.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, config.model)

    click.echo(f"{len(matrix)} threads, {len(model.stumps)} stumps, mask {config.mask}")
    for round_no, (err, bound) in enumerate(
        zip(model.training_error, model.error_bound()), start=1
    ):
        click.echo(f"round {round_no:3d}: training error {err:.4f} (bound {bound:.4f})")
    click.echo(f"training accuracy {metrics.accuracy:.4f}")
    click.echo("importance:")
    for name, score in feature_importance(model):
        if score > 0:
            click.echo(f"  {name:<28}{score:.4f}")
    click.echo(f"model written to {config.model}")


@main.command()
@threads_option
@follows_option
@click.option("--model", type=READABLE, help="Score this model instead of retraining.")
@out_option
@click.option(
    "--ablation/--single",
    default=True,
    help="Every feature block under every user filter, or only --mask at --k.",
)
@k_option
@mask_option
@rounds_option
@folds_option
@click.option(
    "--protocol", type=click.Choice(["cv", "holdout"]), default="cv", show_default=True
)
@seed_option
@strict_option
@jobs_option
def evaluate(ablation: bool, **kwargs: Any) -> None:
    """Metrics table, cross-validated or on a trained model."""
    config = Config.from_options(**kwargs)
    _announce(config.seed)
    if config.model is not None:
        matrix = _labeled_matrix(config)
        try:
            model = load_model(config.model)
            metrics = evaluate_model(model, matrix.X, matrix.y)
        except MotifControversyError as err:
            raise click.ClickException(str(err)) from err
        _write_single(config, "model", metrics)
        return

    protocol = EvaluationProtocol(
        kind=config.protocol, folds=config.folds, seed=config.seed, rounds=config.rounds
    )
    if ablation:
        dataset = _load(config)
        matrix = build_feature_matrix(dataset.trees, dataset.follows, jobs=config.jobs)
        _write_table(run_ablation(matrix, protocol=protocol), config.out)
        return
    matrix = _labeled_matrix(config)
    try:
        metrics = score_cell(matrix, config.mask, protocol)
    except (MotifControversyError, ValueError) as err:
        raise click.ClickException(str(err)) from err
    _write_single(config, config.mask, metrics)


@main.command()
@threads_option
@follows_option
@click.option("--model", type=READABLE, required=True, help="A trained model.")
@out_option
@k_option
@click.option(
    "--all-threads",
    is_flag=True,
    help="Analyse every thread, not only non-controversial ones.",
)
@seed_option
@strict_option
@jobs_option
def subthreads(all_threads: bool, **kwargs: Any) -> None:
    """Classify the direct-reply subtrees of non-controversial threads."""
    config = Config.from_options(**kwargs)
    _announce(config.seed)
    dataset = _load(config)
    assert config.model is not None  # noqa: S101
    try:
        model = load_model(config.model)
        report = analyze_subthreads(
            model,
            dataset.trees,
            dataset.follows,
            k=config.k,
            only_non_controversial=not all_threads,
            jobs=config.jobs,
        )
    except MotifControversyError as err:
        raise click.ClickException(str(err)) from err
    config.out.mkdir(parents=True, exist_ok=True)
    report.predictions.to_csv(
        config.out / "subthreads.csv", index=False, encoding="utf-8"
    )
    analysed = len(report.per_tree)
    if report.fraction is None:
        click.echo(
            f"{analysed} threads analysed; no subtree with more than {config.k} users"
        )
        return
    click.echo(
        f"{analysed} threads analysed, {len(report.predictions)} subtrees,"
        f" {report.fraction:.1%} controversial"
    )


@main.command()
@click.option("--params", type=READABLE, help="YAML generator parameters.")
@out_option
@click.option("--seed", type=int, help="Overrides the seed of the parameter file.")
def synth(params: Optional[Path], out: Path, seed: Optional[int]) -> None:
    """Write a labeled synthetic corpus as threads.jsonl and follows.tsv."""
    try:
        synth_params = SynthParams.from_yaml(params) if params else SynthParams()
        if seed is not None:
            synth_params = replace(synth_params, seed=seed)
        _announce(synth_params.seed)
        trees, follows = generate_synthetic(synth_params)
    except (MotifControversyError, OSError) as err:
        raise click.ClickException(str(err)) from err
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(
        Dataset(trees=tuple(trees), follows=follows),
        out / "threads.jsonl",
        out / "follows.tsv",
    )
    counts = [
        f"{sum(t.label is label for t in trees)} {label.value}" for label in Label
    ]
    click.echo(
        f"{len(trees)} threads ({', '.join(counts)}),"
        f" {len(follows.edges)} follow edges"
    )


if __name__ == "__main__":
    main(prog_name="motif-controversy")  # pragma: no cover
