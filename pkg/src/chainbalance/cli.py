"""Batch command line: dataset stats, cross-validated runs, sweeps, ranks.

Exit codes: 0 on success, 2 on configuration errors, 3 on data errors. Any
failure writes a one-line JSON error record to stderr.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .dataset import (
    all_label_stats,
    load_mulan_files,
    reduce_features_by_frequency,
    summarize,
)
from .errors import ChainbalanceError, ConfigError, DataError
from .experiment import ExperimentConfig, collect_rank_matrix, run_cv
from .learner import TreeSpec
from .metrics import METRIC_KEYS, average_ranks
from .sampling import RngStream
from .simulate import sweep, sweep_to_csv

CONFIG_EXIT = 2
DATA_EXIT = 3


def _fail(code: int, exc: BaseException) -> None:
    record = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(record), err=True)
    sys.exit(code)


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        _fail(CONFIG_EXIT, exc)
    except DataError as exc:
        _fail(DATA_EXIT, exc)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        _fail(DATA_EXIT, exc)
    except ChainbalanceError as exc:
        _fail(DATA_EXIT, exc)


@click.group()
def main() -> None:
    """Multi-label chain ensembles with undersampling, plus evaluation tools."""


@main.command()
@click.option("--arff", "arff_path", required=True, type=click.Path(path_type=Path))
@click.option("--xml", "xml_path", required=True, type=click.Path(path_type=Path))
@click.option("--feature-keep-fraction", type=float, default=None)
@click.option("--json", "json_path", type=click.Path(path_type=Path), default=None,
              help="Also write the statistics as JSON.")
def stats(arff_path: Path, xml_path: Path, feature_keep_fraction: float | None,
          json_path: Path | None) -> None:
    """Dataset sizes, label cardinality, and per-label imbalance ratios."""

    def body() -> None:
        ds = load_mulan_files(arff_path, xml_path)
        if feature_keep_fraction is not None:
            ds = reduce_features_by_frequency(ds, feature_keep_fraction)
        summary = summarize(ds)
        per_label = all_label_stats(ds)
        click.echo(
            f"relation={ds.relation} n={summary.n} d={summary.d} q={summary.q}"
        )
        click.echo(
            f"LC={summary.label_cardinality:.3f} "
            f"MeanImR={summary.mean_imr:.3f} "
            f"MaxImR={summary.max_imr:.3f} "
            f"CVImR={summary.cv_imr:.3f} "
            f"degenerate_labels={summary.degenerate_labels}"
        )
        click.echo("label_index,name,minority,majority,minority_class,imr")
        for stat in per_label:
            imr = "" if stat.imr is None else f"{stat.imr:.6g}"
            click.echo(
                f"{stat.label_index},{ds.label_names[stat.label_index]},"
                f"{stat.minority_count},{stat.majority_count},"
                f"{stat.minority_class},{imr}"
            )
        if json_path is not None:
            payload = {
                "relation": ds.relation,
                "summary": {
                    "n": summary.n,
                    "d": summary.d,
                    "q": summary.q,
                    "label_cardinality": summary.label_cardinality,
                    "mean_imr": summary.mean_imr,
                    "max_imr": summary.max_imr,
                    "cv_imr": summary.cv_imr,
                    "degenerate_labels": summary.degenerate_labels,
                },
                "per_label": [
                    {
                        "label_index": s.label_index,
                        "name": ds.label_names[s.label_index],
                        "minority_count": s.minority_count,
                        "majority_count": s.majority_count,
                        "minority_class": s.minority_class,
                        "imr": s.imr,
                    }
                    for s in per_label
                ],
            }
            json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    _guard(body)


def _merged(ctx: click.Context, file_values: dict, key: str, default):
    """Command line beats config file beats default."""
    source = ctx.get_parameter_source(key)
    if source == click.core.ParameterSource.COMMANDLINE:
        return ctx.params[key]
    if key in file_values:
        return file_values[key]
    value = ctx.params[key]
    return default if value is None else value


def _flatten_config(values: dict) -> dict:
    """Accept nested ensemble/tree sections alongside flat flag-style keys."""
    flat = {k: v for k, v in values.items() if k not in ("ensemble", "tree")}
    ensemble = values.get("ensemble")
    if isinstance(ensemble, dict):
        for key in ("c", "theta_max", "theta_min"):
            if key in ensemble and key not in flat:
                flat[key] = ensemble[key]
    tree = values.get("tree")
    if isinstance(tree, dict):
        for src, dst in (
            ("max_depth", "tree_max_depth"),
            ("min_samples_leaf", "tree_min_samples_leaf"),
        ):
            if src in tree and dst not in flat:
                flat[dst] = tree[src]
    return flat


@main.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="JSON config file; explicit flags override its keys.")
@click.option("--arff", default=None)
@click.option("--xml", default=None)
@click.option("--out-dir", default=None)
@click.option("--methods", default=None, help="Comma-separated method names.")
@click.option("--c", "c", type=int, default=10, show_default=True)
@click.option("--theta-max", type=float, default=10.0, show_default=True)
@click.option("--theta-min", type=float, default=None)
@click.option("--tree-max-depth", type=int, default=None)
@click.option("--tree-min-samples-leaf", type=int, default=2, show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--folds", type=int, default=2, show_default=True)
@click.option("--feature-keep-fraction", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-jobs", type=int, default=1, show_default=True)
@click.pass_context
def cv(ctx: click.Context, config_path: Path | None, **_: object) -> None:
    """Cross-validated comparison of the configured methods on one dataset."""

    def body() -> None:
        file_values: dict = {}
        if config_path is not None:
            try:
                file_values = json.loads(config_path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad config file: {exc}") from exc
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
            file_values = _flatten_config(file_values)

        def get(key: str, default=None):
            return _merged(ctx, file_values, key, default)

        arff = get("arff")
        xml = get("xml")
        out_dir = get("out_dir") or "chainbalance-results"
        methods_value = get("methods")
        if arff is None or xml is None or methods_value is None:
            raise ConfigError("arff, xml, and methods are required")
        if isinstance(methods_value, str):
            methods = tuple(m.strip() for m in methods_value.split(",") if m.strip())
        else:
            methods = tuple(methods_value)
        config = ExperimentConfig(
            arff_path=Path(arff),
            xml_path=Path(xml),
            out_dir=Path(out_dir),
            methods=methods,
            c=int(get("c", 10)),
            theta_max=float(get("theta_max", 10.0)),
            theta_min=(lambda v: None if v is None else float(v))(get("theta_min")),
            tree=TreeSpec(
                max_depth=(lambda v: None if v is None else int(v))(
                    get("tree_max_depth")
                ),
                min_samples_leaf=int(get("tree_min_samples_leaf", 2)),
            ),
            repeats=int(get("repeats", 5)),
            folds=int(get("folds", 2)),
            feature_keep_fraction=(lambda v: None if v is None else float(v))(
                get("feature_keep_fraction")
            ),
            seed=int(get("seed", 0)),
            n_jobs=int(get("n_jobs", 1)),
        )
        payload = run_cv(config)
        for method in config.methods:
            macro = payload["methods"][method]["overall"]["macro"]
            parts = " ".join(
                f"{key}={'NA' if macro[key] is None else f'{macro[key]:.4f}'}"
                for key in METRIC_KEYS
            )
            click.echo(f"{method}: {parts}")
        click.echo(f"results written to {config.out_dir}")

    _guard(body)


@main.command()
@click.option("--n", type=int, default=1000, show_default=True)
@click.option("--c", "c", type=int, default=10, show_default=True)
@click.option("--m-start", type=int, default=20, show_default=True)
@click.option("--m-end", type=int, default=400, show_default=True)
@click.option("--m-step", type=int, default=20, show_default=True)
@click.option("--runs", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="CSV destination; stdout when omitted.")
def simulate(n: int, c: int, m_start: int, m_end: int, m_step: int, runs: int,
             seed: int, out_path: Path | None) -> None:
    """Majority-exploitation probability sweep: closed form vs Monte Carlo."""

    def body() -> None:
        if m_start < 1 or m_step < 1 or m_end < m_start:
            raise ConfigError("need 1 <= m-start <= m-end and m-step >= 1")
        rows = sweep(
            range(m_start, m_end + 1, m_step),
            n=n,
            c=c,
            runs=runs,
            rng=RngStream(seed),
        )
        if out_path is None:
            sweep_to_csv(rows, sys.stdout)
        else:
            sweep_to_csv(rows, out_path)
            click.echo(f"wrote {len(rows)} rows to {out_path}")

    _guard(body)


@main.command()
@click.option("--input-dir", type=click.Path(path_type=Path), default=None,
              help="Directory scanned recursively for cv_results.json files.")
@click.option("--results", "result_files", multiple=True,
              type=click.Path(path_type=Path), help="Explicit result files.")
@click.option("--metric", "metrics", multiple=True,
              help=f"Metrics to rank (default: all of {', '.join(METRIC_KEYS)}).")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="CSV destination; stdout when omitted.")
def rank(input_dir: Path | None, result_files: tuple[Path, ...],
         metrics: tuple[str, ...], out_path: Path | None) -> None:
    """Average ranks of methods across several cv result files."""

    def body() -> None:
        paths = list(result_files)
        if input_dir is not None:
            paths.extend(sorted(input_dir.rglob("cv_results.json")))
        if not paths:
            raise ConfigError("no result files found")
        chosen = metrics or METRIC_KEYS
        table: dict[str, dict[str, float]] = {}
        methods: list[str] = []
        for metric in chosen:
            methods, _, matrix = collect_rank_matrix(paths, metric)
            ranks = average_ranks(matrix, higher_is_better=True)
            for method, value in zip(methods, ranks):
                table.setdefault(method, {})[metric] = float(value)
        lines = [["method", *chosen]]
        for method in methods:
            lines.append(
                [method, *[f"{table[method][metric]:.4f}" for metric in chosen]]
            )
        if out_path is None:
            writer = csv.writer(sys.stdout)
            writer.writerows(lines)
        else:
            with open(out_path, "w", newline="") as handle:
                csv.writer(handle).writerows(lines)
            click.echo(f"wrote rank table to {out_path}")

    _guard(body)


if __name__ == "__main__":
    main()
