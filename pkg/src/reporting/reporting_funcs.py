import json
import os
import warnings

import polars as pl
import wandb
from prefect import get_run_logger
from prefect.artifacts import create_markdown_artifact
from prefect.exceptions import MissingContextError

from .file_utils import (
    RUN_TRACKING_COLUMNS,
    canonical_hash,
    dict_to_csv,
    ensure_directory_exists,
    get_git_info,
    package_versions,
)

MANIFEST_NAME = "manifest.json"


def write_manifest(path, command, config, seed=None, wall_time=None, extra=None):
    """
    Write manifest.json into `path`: command, config hash, seed, versions, git and wall time.

    `config` is any JSON-serializable description of the inputs (spec dict, CLI args).
    """
    ensure_directory_exists(path)
    git_info = get_git_info() or {}
    manifest = {
        "command": command,
        "config": config,
        "config_hash": canonical_hash(config),
        "seed": seed,
        "versions": package_versions(),
        "git_commit": git_info.get("git_commit"),
        "git_branch": git_info.get("git_branch"),
        "wall_time_seconds": wall_time,
    }
    if extra:
        manifest.update(extra)
    manifest_path = os.path.join(path, MANIFEST_NAME)
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)
    return manifest_path


def local_setup(path):
    """Prepare a run directory, warning when it already holds files."""
    ensure_directory_exists(path)
    if os.listdir(path):
        warnings.warn(f"Directory already exists and is not empty: {path}", UserWarning)
    return path


def track_run(config, manifest_path, exit_code):
    """Append one row per run to config['run_tracking_csv'] (skipped when unset)."""
    tracking_csv = (config or {}).get("run_tracking_csv")
    if not tracking_csv:
        return None
    with open(manifest_path) as f:
        manifest = json.load(f)
    row = {
        "command": manifest["command"],
        "out_dir": os.path.dirname(os.path.abspath(manifest_path)),
        "config_hash": manifest["config_hash"],
        "seed": manifest["seed"],
        "wall_time_seconds": manifest["wall_time_seconds"],
        "exit_code": exit_code,
        "commit": manifest["git_commit"],
        "commit_branch": manifest["git_branch"],
    }
    ensure_directory_exists(os.path.dirname(os.path.abspath(tracking_csv)))
    dict_to_csv({k: row[k] for k in RUN_TRACKING_COLUMNS}, tracking_csv)
    return tracking_csv


def _run_logger():
    try:
        return get_run_logger()
    except MissingContextError:
        return None


def log_table_result(result: pl.DataFrame, name, log_options, wandb_run=None, path=None):
    """
    Route a result table to its configured sinks: "file" (CSV under path), "WandB"
    (wandb.Table on the active run) and "prefect" (markdown artifact, inside a flow).
    """
    file_path = None
    if "file" in log_options and path:
        file_path = os.path.join(path, f"{name}.csv")
        result.write_csv(file_path)
    if "WandB" in log_options and wandb_run:
        wandb_run.log({name: wandb.Table(columns=result.columns, data=result.rows())})
    if "prefect" in log_options and _run_logger() is not None:
        create_markdown_artifact(
            key=name.replace("_", "-").lower(),
            markdown=_markdown_table(result),
            description=f"Table {name}" + (f" saved as CSV: {file_path}" if file_path else ""),
        )
    return file_path


def _markdown_table(frame: pl.DataFrame, max_rows: int = 50) -> str:
    shown = frame.head(max_rows)
    header = "| " + " | ".join(shown.columns) + " |"
    rule = "|" + "---|" * len(shown.columns)
    body = [
        "| " + " | ".join(_fmt(v) for v in row) + " |" for row in shown.iter_rows()
    ]
    more = [f"\n_{frame.height - max_rows} more rows_"] if frame.height > max_rows else []
    return "\n".join([header, rule, *body, *more])


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def init_wandb(wandb_config, run_config, name=None):
    """Start a wandb run from the reporting config; None when wandb is disabled."""
    if not wandb_config or wandb_config.get("mode", "disabled") == "disabled":
        return None
    return wandb.init(
        project=wandb_config.get("project"),
        entity=wandb_config.get("entity"),
        mode=wandb_config.get("mode"),
        name=name,
        config=run_config,
    )
