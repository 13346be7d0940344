"""Command-line pipeline: ingest feeds, select, label, train, evaluate.

Defaults can come from a JSON config file (``--config``); explicit
flags always win. All paths are explicit arguments, there is no hidden
state directory, and every random choice flows from the single
``--seed`` value.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus, errors, nvd
from .evaluate import build_report, confusion, render_report
from .experiment import ExperimentSpec, run_experiment, run_sweep, sweep_csv
from .svm import TrainParams, load_model, predict, save_model, train_ovr
from .textprep import load_stopwords, stopwords_hash

_PARAM_DEFAULTS = {
    "c": 1.0,
    "tol": 1e-4,
    "max_iter": 1000,
    "seed": 42,
    "min_df": 1,
    "balanced": False,
    "include_versions": False,
}


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with default values for the training flags.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    config = {}
    if config_path:
        try:
            config = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise errors.UsageError(f"cannot read config {config_path}: {exc}")
        if not isinstance(config, dict):
            raise errors.UsageError(f"config {config_path} is not a JSON object")
    # the cost parameter is spelled C in config files and on the CLI
    ctx.obj = {("c" if key == "C" else key): value for key, value in config.items()}


def _train_options(command):
    for option in reversed([
        click.option("--C", "c", type=float, default=None, help="Hinge-loss cost trade-off."),
        click.option("--tol", type=float, default=None, help="Stop when the max KKT violation drops below this."),
        click.option("--max-iter", type=int, default=None, help="Epoch cap for the solver."),
        click.option("--seed", type=int, default=None, help="Seed for the per-epoch shuffle."),
        click.option("--min-df", type=int, default=None, help="Drop tokens seen in fewer training records."),
        click.option("--balanced/--no-balanced", default=None, help="Rescale per-example cost by inverse class frequency."),
        click.option("--include-versions/--no-include-versions", default=None, help="Also emit version tokens (off by default: they explode the vocabulary)."),
        click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None, help="Override the bundled stop-word list."),
    ]):
        command = option(command)
    return command


def _resolve_params(ctx: click.Context, **flags) -> TrainParams:
    config = ctx.obj or {}

    def pick(name):
        if flags.get(name) is not None:
            return flags[name]
        if name in config:
            return config[name]
        return _PARAM_DEFAULTS[name]

    return TrainParams(
        C=float(pick("c")),
        tol=float(pick("tol")),
        max_iter=int(pick("max_iter")),
        seed=int(pick("seed")),
        min_df=int(pick("min_df")),
        balanced=bool(pick("balanced")),
        include_versions=bool(pick("include_versions")),
    )


def _resolve_stopwords(ctx: click.Context, stopwords_path: str | None):
    config = ctx.obj or {}
    path = stopwords_path or config.get("stopwords")
    if path:
        return load_stopwords(path), stopwords_hash(path)
    return None, stopwords_hash()


def _load_taxonomy(taxonomy_path: str | None, extra_classes: tuple[str, ...]) -> corpus.Taxonomy:
    if taxonomy_path:
        try:
            entries = json.loads(Path(taxonomy_path).read_text(encoding="utf-8"))
            taxonomy = corpus.Taxonomy(tuple(
                corpus.ClassLabel(e["code"], e.get("description", "")) for e in entries
            ))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise errors.UsageError(f"bad taxonomy file {taxonomy_path}: {exc}")
    else:
        taxonomy = corpus.Taxonomy.default()
    for extra in extra_classes:
        code, _, description = extra.partition(":")
        taxonomy = taxonomy.with_extra(code.strip(), description.strip())
    return taxonomy


def _taxonomy_options(command):
    for option in reversed([
        click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None,
                     help="JSON list of {code, description} replacing the default six classes."),
        click.option("--extra-class", "extra_classes", multiple=True,
                     help="Add a class as CODE or CODE:DESCRIPTION (repeatable)."),
    ]):
        command = option(command)
    return command


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, sort_keys=True))


@cli.command()
@click.argument("feeds", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(), help="Record store to write (NDJSON).")
def ingest(feeds: tuple[str, ...], out_path: str) -> None:
    """Parse NVD feed files (XML/JSON, optionally gzipped) into a record store."""
    stats = nvd.IngestStats()
    records = []
    failures = 0
    for feed in feeds:
        try:
            recs, feed_stats = nvd.read_feed(feed)
        except errors.FeedUnreadable as exc:
            failures += 1
            click.echo(f"warning: {exc}", err=True)
            continue
        records.extend(recs)
        stats.merge(feed_stats)
    if failures == len(feeds):
        raise errors.FeedUnreadable("no feed file could be read")
    nvd.write_store(records, out_path)
    _echo_json(stats.as_dict())


@cli.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--start-year", type=int, default=None)
@click.option("--end-year", type=int, default=None)
def select(store_path: str, out_path: str, start_year: int | None, end_year: int | None) -> None:
    """Keep only hardware-affecting records, optionally in a year range."""
    records = list(nvd.read_store(store_path))
    hardware = corpus.select_hardware(records)
    if start_year is not None or end_year is not None:
        if start_year is None or end_year is None:
            raise errors.UsageError("--start-year and --end-year go together")
        hardware = corpus.filter_years(hardware, start_year, end_year)
    nvd.write_store(hardware, out_path)
    _echo_json({"records_in": len(records), "hardware_out": len(hardware)})


@cli.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None, help="Dataset export (NDJSON).")
@_taxonomy_options
def dataset(store_path: str, labels_path: str, out_path: str | None,
            taxonomy_path: str | None, extra_classes: tuple[str, ...]) -> None:
    """Attach labels to the hardware records and summarize supports."""
    taxonomy = _load_taxonomy(taxonomy_path, extra_classes)
    labels = corpus.load_labels(labels_path, taxonomy)
    hardware = corpus.select_hardware(nvd.read_store(store_path))
    ds = corpus.build_dataset(hardware, labels, taxonomy)
    if out_path:
        corpus.write_dataset(ds, out_path)
    _echo_json({
        "size": len(ds),
        "unlabeled": ds.unlabeled,
        "unmatched_labels": list(ds.unmatched_labels),
        "class_counts": ds.class_counts(),
        "by_year": {str(y): row for y, row in corpus.count_by_year_and_class(ds).items()},
    })


@cli.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--train-start", type=int, required=True)
@click.option("--train-end", type=int, required=True)
@click.option("--model-out", "model_path", required=True, type=click.Path())
@_taxonomy_options
@_train_options
@click.pass_context
def train(ctx: click.Context, store_path: str, labels_path: str, train_start: int,
          train_end: int, model_path: str, taxonomy_path: str | None,
          extra_classes: tuple[str, ...], stopwords_path: str | None, **flags) -> None:
    """Train a one-vs-rest model on labeled hardware records of a year range."""
    params = _resolve_params(ctx, **flags)
    stopwords, sw_hash = _resolve_stopwords(ctx, stopwords_path)
    taxonomy = _load_taxonomy(taxonomy_path, extra_classes)
    labels = corpus.load_labels(labels_path, taxonomy)
    hardware = corpus.select_hardware(nvd.read_store(store_path))
    in_range = corpus.filter_years(hardware, train_start, train_end)
    ds = corpus.build_dataset(in_range, labels, taxonomy)
    if not ds.examples:
        raise errors.EmptyTrainSet(f"no labeled records in {train_start}..{train_end}")
    model = train_ovr(ds, params, stopwords=stopwords, stopword_hash=sw_hash)
    save_model(model, model_path)
    _echo_json({
        "classes": list(model.class_order),
        "vocabulary_size": len(model.tfidf),
        "train_size": len(ds),
        "unlabeled": ds.unlabeled,
        "model": str(model_path),
    })


def _check_stopword_hash(model, sw_hash: str) -> None:
    if model.stopword_list_hash != sw_hash:
        raise errors.DataError(
            "stop-word list does not match the one the model was trained with"
        )


@cli.command(name="predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_path", type=click.Path(exists=True), default=None)
@click.option("--record", "record_json", default=None, help="Single record as inline JSON (store schema).")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write NDJSON here instead of stdout.")
@click.option("--hardware-only", is_flag=True, default=False, help="Skip records without a hardware CPE.")
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.pass_context
def predict_cmd(ctx: click.Context, model_path: str, store_path: str | None,
                record_json: str | None, out_path: str | None,
                hardware_only: bool, stopwords_path: str | None) -> None:
    """Classify records from a store (or one inline record)."""
    if (store_path is None) == (record_json is None):
        raise errors.UsageError("give exactly one of --store or --record")
    model = load_model(model_path)
    stopwords, sw_hash = _resolve_stopwords(ctx, stopwords_path)
    _check_stopword_hash(model, sw_hash)

    if record_json is not None:
        try:
            records = [nvd.dict_to_record(json.loads(record_json))]
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise errors.DataError(f"bad inline record: {exc}")
    else:
        records = list(nvd.read_store(store_path))

    lines = []
    for rec in records:
        if hardware_only and not corpus.is_hardware(rec):
            click.echo(f"notice: {rec.cve_id} has no hardware CPE, skipped", err=True)
            continue
        pred = predict(model, corpus.extract_text_fields(rec), stopwords=stopwords)
        lines.append(json.dumps({
            "cve_id": rec.cve_id,
            "predicted_class": pred.label,
            "decisions": pred.decisions,
            "low_confidence": pred.low_confidence,
        }, sort_keys=True))
    output = "\n".join(lines) + ("\n" if lines else "")
    if out_path:
        Path(out_path).write_text(output, encoding="utf-8")
    else:
        click.echo(output, nl=False)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--year", type=int, required=True)
@click.option("--quarter", type=int, default=None)
@click.option("--exclude-class", "excluded", multiple=True, help="Drop a class from the metric rows (repeatable).")
@click.option("--out-base", "out_base", type=click.Path(), default=None,
              help="Write <base>.json, <base>.csv and <base>.txt reports.")
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.pass_context
def evaluate(ctx: click.Context, model_path: str, store_path: str, labels_path: str,
             year: int, quarter: int | None, excluded: tuple[str, ...],
             out_base: str | None, stopwords_path: str | None) -> None:
    """Classify one labeled year and report precision/recall/F1."""
    model = load_model(model_path)
    stopwords, sw_hash = _resolve_stopwords(ctx, stopwords_path)
    _check_stopword_hash(model, sw_hash)
    labels = corpus.load_labels(labels_path, model.taxonomy)
    hardware = corpus.select_hardware(nvd.read_store(store_path))
    in_year = corpus.filter_years(hardware, year, year)
    if quarter is not None:
        if not 1 <= quarter <= 4:
            raise errors.BadRange(f"quarter must be 1..4, got {quarter}")
        in_year = [rec for rec in in_year if nvd.published_quarter(rec) == quarter]
    ds = corpus.build_dataset(in_year, labels, model.taxonomy)
    if not ds.examples:
        raise errors.EmptyTestSet(f"no labeled records in {year}" + (f" Q{quarter}" if quarter else ""))
    truth = [ex.label for ex in ds.examples]
    predicted = [predict(model, ex.fields, stopwords=stopwords).label for ex in ds.examples]
    matrix = confusion(truth, predicted, model.taxonomy)
    report = build_report(matrix, excluded=frozenset(excluded))
    if out_base:
        base = Path(out_base)
        base.with_suffix(".json").write_bytes(render_report(report, "json"))
        base.with_suffix(".csv").write_bytes(render_report(report, "csv"))
        base.with_suffix(".txt").write_bytes(render_report(report, "text"))
    click.echo(render_report(report, "text").decode("utf-8"), nl=False)


def _experiment_spec(train_start: int, train_end: int, test_year: int,
                     test_quarter: int | None, params: TrainParams,
                     excluded: tuple[str, ...], exclusion_stage: str) -> ExperimentSpec:
    return ExperimentSpec(
        train_start=train_start,
        train_end=train_end,
        test_year=test_year,
        test_quarter=test_quarter,
        params=params,
        excluded_classes=frozenset(excluded),
        exclusion_stage=exclusion_stage,
    )


def _write_experiment_artifacts(result, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(result.model, out_dir / "model.json")
    (out_dir / "report.json").write_bytes(render_report(result.report, "json"))
    (out_dir / "report.csv").write_bytes(render_report(result.report, "csv"))
    (out_dir / "matrix.txt").write_bytes(render_report(result.report, "text"))


@cli.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--train-start", type=int, required=True)
@click.option("--train-end", type=int, required=True)
@click.option("--test-year", type=int, required=True)
@click.option("--test-quarter", type=int, default=None)
@click.option("--exclude-class", "excluded", multiple=True)
@click.option("--exclusion-stage", type=click.Choice(["report", "data"]), default="report",
              help="Drop excluded classes from metric rows only, or from the data entirely.")
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@_taxonomy_options
@_train_options
@click.pass_context
def experiment(ctx: click.Context, store_path: str, labels_path: str, train_start: int,
               train_end: int, test_year: int, test_quarter: int | None,
               excluded: tuple[str, ...], exclusion_stage: str, out_dir: str,
               taxonomy_path: str | None, extra_classes: tuple[str, ...],
               stopwords_path: str | None, **flags) -> None:
    """Train on a year range, classify a later year, write all artifacts."""
    params = _resolve_params(ctx, **flags)
    # validate the spec before touching any data
    spec = _experiment_spec(train_start, train_end, test_year, test_quarter,
                            params, excluded, exclusion_stage)
    stopwords, sw_hash = _resolve_stopwords(ctx, stopwords_path)
    taxonomy = _load_taxonomy(taxonomy_path, extra_classes)
    labels = corpus.load_labels(labels_path, taxonomy)
    records = list(nvd.read_store(store_path))
    result = run_experiment(records, labels, taxonomy, spec, stopwords=stopwords)
    _write_experiment_artifacts(result, Path(out_dir))
    _echo_json({
        "spec": spec.key(),
        "weighted_f1": result.report.weighted_f1,
        "accuracy": result.report.accuracy,
        "train_size": len(result.train_ids),
        "test_size": len(result.test_ids),
        "out_dir": str(out_dir),
    })


def _parse_sweep_spec(raw: str) -> tuple[int, int, int, int | None]:
    parts = raw.split(":")
    if len(parts) not in (3, 4):
        raise errors.UsageError(f"spec {raw!r} is not START:END:TESTYEAR[:Qn]")
    try:
        start, end, test_year = int(parts[0]), int(parts[1]), int(parts[2])
        quarter = None
        if len(parts) == 4:
            if not parts[3].upper().startswith("Q"):
                raise ValueError(parts[3])
            quarter = int(parts[3][1:])
        return start, end, test_year, quarter
    except ValueError:
        raise errors.UsageError(f"spec {raw!r} is not START:END:TESTYEAR[:Qn]")


@cli.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "raw_specs", multiple=True, required=True,
              help="Experiment as START:END:TESTYEAR or START:END:TESTYEAR:Qn (repeatable).")
@click.option("--exclude-class", "excluded", multiple=True)
@click.option("--exclusion-stage", type=click.Choice(["report", "data"]), default="report")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Summary CSV path.")
@click.option("--artifacts-dir", type=click.Path(), default=None,
              help="Also write per-spec artifacts under this directory.")
@_taxonomy_options
@_train_options
@click.pass_context
def sweep(ctx: click.Context, store_path: str, labels_path: str, raw_specs: tuple[str, ...],
          excluded: tuple[str, ...], exclusion_stage: str, out_path: str | None,
          artifacts_dir: str | None, taxonomy_path: str | None,
          extra_classes: tuple[str, ...], stopwords_path: str | None, **flags) -> None:
    """Run several temporal experiments and tabulate weighted F1."""
    params = _resolve_params(ctx, **flags)
    specs = [
        _experiment_spec(*_parse_sweep_spec(raw), params, excluded, exclusion_stage)
        for raw in raw_specs
    ]
    stopwords, _ = _resolve_stopwords(ctx, stopwords_path)
    taxonomy = _load_taxonomy(taxonomy_path, extra_classes)
    labels = corpus.load_labels(labels_path, taxonomy)
    records = list(nvd.read_store(store_path))
    rows = run_sweep(records, labels, taxonomy, specs, stopwords=stopwords)
    table = sweep_csv(rows)
    if out_path:
        Path(out_path).write_text(table, encoding="utf-8")
    if artifacts_dir:
        for row in rows:
            if row.result is not None:
                _write_experiment_artifacts(
                    row.result, Path(artifacts_dir) / row.spec.key().replace("->", "_to_")
                )
    click.echo(table, nl=False)


def main(argv: list[str] | None = None) -> int:
    try:
        cli(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except errors.UsageError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except errors.DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except errors.InternalError as exc:
        click.echo(f"internal error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
