import os

from prefect import task
from prefect.cache_policies import NO_CACHE

from src.harness.aggregate import SweepResult, emit_heatmap
from src.reporting.reporting_funcs import (
    init_wandb,
    local_setup,
    log_table_result,
    track_run,
    write_manifest,
)


@task(name="emit_heatmap", cache_policy=NO_CACHE)
def emit_heatmap_task(result, heatmap, out_dir):
    return emit_heatmap(
        result,
        heatmap.metric,
        heatmap.x_axis,
        heatmap.y_axis,
        model=heatmap.model,
        out_dir=out_dir,
    )


class SweepReportingPipeline:
    """Writes a sweep's table, heatmaps and manifest locally, and optionally to wandb."""

    def __init__(self, reporting_config):
        self.config = reporting_config or {}
        self.local_reporting_config = self.config.get("local_reporting") or {}
        self.wandb_config = self.config.get("wandb")
        self.log_options = self.config.get("log", ["file", "prefect"])

    def run(self, result: SweepResult, out_dir, command="sweep", wall_time=None, extra=None):
        local_setup(out_dir)
        wandb_run = init_wandb(self.wandb_config, result.spec.to_dict(), name=result.spec.name)

        log_options = set(self.log_options) | {"file"}
        log_table_result(result.table, "table", log_options, wandb_run, out_dir)
        for heatmap in result.spec.heatmaps:
            long, _ = emit_heatmap_task(result, heatmap, out_dir)
            if wandb_run:
                log_table_result(long, f"heatmap_{heatmap.metric}_{heatmap.model}", {"WandB"}, wandb_run)

        manifest_path = write_manifest(
            out_dir,
            command,
            result.spec.to_dict(),
            seed=result.spec.master_seed,
            wall_time=wall_time,
            extra={
                "spec_hash": result.spec.digest(),
                "failed_cells": sorted(result.failures),
                **(extra or {}),
            },
        )
        track_run(self.local_reporting_config, manifest_path, exit_code=1 if result.failed else 0)

        if wandb_run:
            wandb_run.finish()
        print(f"Sweep report written to {os.path.abspath(out_dir)}")
        return out_dir
