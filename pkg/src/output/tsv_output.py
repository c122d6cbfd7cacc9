"""TSV and JSON output handler for SyncKern runs."""

import json
import logging
import os

import numpy as np
import pandas as pd

from src.sync.align import store_transform

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"
MANIFEST_NAME = "run-manifest.json"


class TSVOutput:
    """Output handler writing tables and the run manifest into one directory."""

    def __init__(self, output_dir=None):
        """
        Initialize the output handler.

        Args:
            output_dir (str, optional): Directory to save output files.
                If not provided, uses ./out.
        """
        self.output_dir = output_dir or os.path.join(os.getcwd(), "out")
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.output_dir, name)

    def _save_table(self, frame, name, trailer=None):
        """
        Write a DataFrame as tab-separated text with fixed float formatting.

        Args:
            frame (pd.DataFrame): Table to write.
            name (str): File name inside the output directory.
            trailer (str, optional): Extra final line.

        Returns:
            str: Path of the written file.
        """
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            frame.to_csv(f, sep="\t", index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
            if trailer is not None:
                f.write(trailer + "\n")
        logger.info(f"Saved {name} to {path}")
        return path

    def save_stat_map(self, stat_map, name):
        frame = pd.DataFrame(
            {
                "vertex": stat_map.vertex_index,
                "statistic": stat_map.statistic,
                "p": stat_map.p_value,
                "q": stat_map.q_value,
                "rejected": stat_map.rejected.astype(np.int64),
            }
        )
        return self._save_table(frame, name)

    def save_bandwidth_report(self, grid, name="bandwidth.tsv"):
        frame = pd.DataFrame({"gamma": grid.values, "loo_mse": grid.loo_mse})
        return self._save_table(frame, name, trailer=f"selected\t{grid.selected:.9g}")

    def save_bootstrap_report(self, report, name="bootstrap.tsv"):
        columns = {"vertex": np.arange(report.p_variance.size), "p_var": report.p_variance}
        for b in range(report.n_boot):
            columns[f"boot{b}_p"] = report.p_samples[b]
        return self._save_table(pd.DataFrame(columns), name)

    def save_simulation_report(self, report, name="simulation.tsv"):
        methods = sorted(report.stat_maps)
        frame = pd.DataFrame(
            {
                "method": methods,
                "roi_detection_rate": [report.roi_detection_rate[m] for m in methods],
                "false_positive_rate": [report.false_positive_rate[m] for m in methods],
                "n_rejected": [len(report.stat_maps[m].rejected_vertices()) for m in methods],
            }
        )
        return self._save_table(frame, name)

    def save_null_check_report(self, report, name="nullcheck.tsv"):
        columns = {"repeat": np.arange(report.n_repeats)}
        for method in sorted(report.rejected_counts):
            columns[f"{method}_rejected"] = report.rejected_counts[method]
        return self._save_table(pd.DataFrame(columns), name)

    def save_population_size_report(self, report, name="sizes.tsv"):
        frame = pd.DataFrame(report.rows, columns=["cohort", "n_subjects", "method", "n_rejected", "dice"])
        return self._save_table(frame, name)

    def save_sync_result(self, transform, residual, name="sync"):
        """Write the transform (SKOT) and a one-row summary TSV."""
        store_transform(transform, self.path(f"{name}.skot"))
        frame = pd.DataFrame(
            {
                "source": [transform.source_id],
                "target": [transform.target_id],
                "residual": [residual],
                "orthogonality_error": [transform.orthogonality_error()],
            }
        )
        return self._save_table(frame, f"{name}.tsv")

    def save_run_manifest(self, command, parameters, version, results=None):
        """
        Record everything needed to rerun: command, resolved options, version,
        plus the derived values (selected gamma, rates) under ``results``.

        The manifest has no timestamps, so identical runs write identical
        bytes.
        """
        data = {"command": command, "version": version, "parameters": parameters, "results": results or {}}
        path = self.path(MANIFEST_NAME)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Saved run manifest to {path}")
        return path
