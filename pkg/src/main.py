#!/usr/bin/env python3
"""
SyncKern - pointwise group statistics on synchronized time series.
Aligns subjects pairwise, builds per-vertex distances and tests them against
a clinical score with permutation tests and FDR control.
"""

import argparse
import logging
import os
import sys

# Add the project root to the path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src import __version__
from src.config import AUTO, DEFAULTS, RunConfig, load_config
from src.data.cohort import load_cohort, store_cohort
from src.data.timeseries import MODES
from src.errors import EXIT_DATA, EXIT_OK, EXIT_USAGE, SynckernError, UsageError
from src.metric.distances import GEODESIC, build_distance_tensor
from src.output.tsv_output import TSVOutput
from src.regress.bandwidth import sample_vertices, select_bandwidth
from src.sim.study import compare_population_sizes, permuted_null_check, run_simulation_study
from src.sim.synthetic import simulate_cohort
from src.stats.base_test import PAIRWISE_STATISTICS
from src.stats.bootstrap import METHODS, bootstrap_stability
from src.stats.kernel_test import kernel_regression_test
from src.stats.pairwise import pairwise_pipeline
from src.sync.align import compute_sync_transform, sync_error

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_NAME = "synckern.log"


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--manifest", help="cohort manifest (JSON)")
    parent.add_argument("--out", help="output directory")
    parent.add_argument("--seed", type=int, help="unsigned 64-bit seed (required)")
    parent.add_argument("--threads", type=int, help="worker threads")
    parent.add_argument("--mode", choices=MODES, help="zero-variance column handling")
    parent.add_argument("--config", help="JSON/YAML options or a run manifest; overrides flags")
    parent.add_argument("--verbose", action="store_true", help="debug logging")
    return parent


def _test_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--gamma", help=f"kernel bandwidth or '{AUTO}'")
    parent.add_argument("--permutations", type=int, help="permutations per test")
    parent.add_argument("--alpha", type=float, help="FDR level")
    parent.add_argument("--pairs", type=int, help="sampled subject pairs for the pairwise test")
    parent.add_argument("--pairwise-statistic", dest="pairwise_statistic", choices=PAIRWISE_STATISTICS)
    parent.add_argument("--parametric-f", dest="parametric_f", action="store_const", const=True,
                        help="F-distribution p-values for the kernel test")
    parent.add_argument("--grid-low", dest="grid_low", type=float)
    parent.add_argument("--grid-high", dest="grid_high", type=float)
    parent.add_argument("--grid-size", dest="grid_size", type=int)
    parent.add_argument("--vertex-sample", dest="vertex_sample", type=int)
    return parent


def _simulation_options():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--subjects", type=int)
    parent.add_argument("--timepoints", type=int)
    parent.add_argument("--vertices", type=int)
    parent.add_argument("--roi", type=int, nargs="+", help="ROI vertex indices")
    parent.add_argument("--sigma-max", dest="sigma_max", type=float)
    parent.add_argument("--score-low", dest="score_low", type=float)
    parent.add_argument("--score-high", dest="score_high", type=float)
    parent.add_argument("--latent-rank", dest="latent_rank", type=int)
    parent.add_argument("--subject-noise", dest="subject_noise", type=float)
    parent.add_argument("--background-weight", dest="background_weight", type=float)
    return parent


def build_parser():
    """
    Build the command-line parser.

    Returns:
        argparse.ArgumentParser: Parser with one subcommand per pipeline.
    """
    parser = _ArgumentParser(prog="synckern", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_ArgumentParser)
    commands.required = True
    common, tests, sim = _common_options(), _test_options(), _simulation_options()

    sync = commands.add_parser("sync", parents=[common], help="sync one subject pair")
    sync.add_argument("--source", help="subject id to transform")
    sync.add_argument("--target", help="subject id to align to")

    commands.add_parser("pairwise", parents=[common, tests], help="pairwise correlation test")
    commands.add_parser("kernreg", parents=[common, tests], help="kernel-regression test")
    commands.add_parser("bandwidth", parents=[common, tests], help="LOO bandwidth grid report")

    simulate = commands.add_parser("simulate", parents=[common, tests, sim], help="simulation study")
    simulate.add_argument("--write-cohort", dest="write_cohort", help="store the simulated cohort here")

    bootstrap = commands.add_parser("bootstrap", parents=[common, tests], help="p-value stability")
    bootstrap.add_argument("--nboot", type=int)
    bootstrap.add_argument("--method", choices=METHODS)

    nullcheck = commands.add_parser("nullcheck", parents=[common, tests, sim], help="permuted-score null check")
    nullcheck.add_argument("--repeats", type=int)

    sizes = commands.add_parser("sizes", parents=[common, tests], help="small vs full cohort comparison")
    sizes.add_argument("--n-small", dest="n_small", type=int)
    return parser


def resolve_options(args):
    """Defaults < command-line flags < config-file values."""
    options = dict(DEFAULTS)
    options.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    if args.config:
        options = load_config(args.config, defaults=options)
    return RunConfig.from_options(args.command, options)


def _configure_logging(log_path, verbose):
    handlers = [logging.StreamHandler(), logging.FileHandler(log_path, mode="w", encoding="utf-8")]
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    return handlers


def _resolve_gamma(cfg, distances, scores, output):
    if cfg.gamma != AUTO:
        return cfg.gamma, {}
    vertices = sample_vertices(distances, cfg.vertex_sample, cfg.seed)
    grid = select_bandwidth(distances, scores, cfg.bandwidth_grid(), vertices, n_jobs=cfg.threads)
    output.save_bandwidth_report(grid)
    return grid.selected, {"selected_gamma": grid.selected}


def _subject_index(cohort, subject_id):
    try:
        return cohort.subject_ids.index(subject_id)
    except ValueError:
        raise UsageError(f"subject id {subject_id!r} is not in the manifest") from None


def run_sync(cfg, output):
    cohort = load_cohort(cfg.manifest, cfg.mode)
    x = cohort.data(_subject_index(cohort, cfg.target))
    y = cohort.data(_subject_index(cohort, cfg.source))
    transform = compute_sync_transform(x, y, source_id=cfg.source, target_id=cfg.target)
    residual = sync_error(x, y, transform)
    logger.info(f"Synced {cfg.source} onto {cfg.target}: residual {residual:.6g}")
    output.save_sync_result(transform, residual)
    return {"residual": residual}


def run_pairwise(cfg, output):
    cohort = load_cohort(cfg.manifest, cfg.mode)
    stat_map = pairwise_pipeline(cohort, cfg.test_config())
    output.save_stat_map(stat_map, "pairwise.tsv")
    return {}


def run_kernreg(cfg, output):
    cohort = load_cohort(cfg.manifest, cfg.mode)
    distances = build_distance_tensor(cohort, GEODESIC, n_jobs=cfg.threads)
    gamma, results = _resolve_gamma(cfg, distances, cohort.scores, output)
    stat_map = kernel_regression_test(distances, cohort.scores, cfg.test_config(gamma=gamma))
    output.save_stat_map(stat_map, "kernreg.tsv")
    return results


def run_bandwidth(cfg, output):
    cohort = load_cohort(cfg.manifest, cfg.mode)
    distances = build_distance_tensor(cohort, GEODESIC, n_jobs=cfg.threads)
    vertices = sample_vertices(distances, cfg.vertex_sample, cfg.seed)
    grid = select_bandwidth(distances, cohort.scores, cfg.bandwidth_grid(), vertices, n_jobs=cfg.threads)
    output.save_bandwidth_report(grid)
    return {"selected_gamma": grid.selected}


def run_simulate(cfg, output):
    sim_cfg = cfg.simulation_config()
    cohort = simulate_cohort(sim_cfg, n_jobs=cfg.threads)
    if cfg.write_cohort:
        store_cohort(cohort, cfg.write_cohort)
    distances = build_distance_tensor(cohort, GEODESIC, n_jobs=cfg.threads)
    gamma, results = _resolve_gamma(cfg, distances, cohort.scores, output)
    report = run_simulation_study(sim_cfg, cfg.test_config(gamma=gamma), cohort=cohort, distances=distances)
    output.save_simulation_report(report)
    for method, stat_map in sorted(report.stat_maps.items()):
        output.save_stat_map(stat_map, f"simulate-{method}.tsv")
    results.update({f"{m}_roi_detection_rate": r for m, r in sorted(report.roi_detection_rate.items())})
    return results


def run_bootstrap(cfg, output):
    cohort = load_cohort(cfg.manifest, cfg.mode)
    distances, gamma, results = None, cfg.gamma, {}
    if cfg.method == "kernel":
        distances = build_distance_tensor(cohort, GEODESIC, n_jobs=cfg.threads)
        gamma, results = _resolve_gamma(cfg, distances, cohort.scores, output)
    elif gamma == AUTO:
        raise UsageError("--gamma auto only applies to the kernel bootstrap")
    report = bootstrap_stability(cohort, cfg.method, cfg.nboot, cfg.test_config(gamma=gamma), distances=distances)
    output.save_bootstrap_report(report)
    return results


def run_nullcheck(cfg, output):
    report = permuted_null_check(cfg.simulation_config(), cfg.test_config(), cfg.repeats)
    output.save_null_check_report(report)
    return {f"{m}_clean_repeats": report.clean_repeats(m) for m in sorted(report.rejected_counts)}


def run_sizes(cfg, output):
    cohort = load_cohort(cfg.manifest, cfg.mode)
    report = compare_population_sizes(cohort, cfg.n_small, cfg.test_config())
    output.save_population_size_report(report)
    for (label, method), stat_map in sorted(report.stat_maps.items()):
        output.save_stat_map(stat_map, f"sizes-{label}-{method}.tsv")
    return {}


HANDLERS = {
    "sync": run_sync,
    "pairwise": run_pairwise,
    "kernreg": run_kernreg,
    "bandwidth": run_bandwidth,
    "simulate": run_simulate,
    "bootstrap": run_bootstrap,
    "nullcheck": run_nullcheck,
    "sizes": run_sizes,
}


def _report_failure(command, error, handlers):
    # the stream handler already echoes the record to stderr
    if handlers:
        logger.error(f"{command} failed: {error}")
    else:
        print(f"synckern {command}: {error}", file=sys.stderr)


def run_pipeline(argv):
    """
    Parse ``argv``, run one subcommand and write its artifacts.

    Args:
        argv (list): Arguments without the program name.

    Returns:
        int: 0 on success, 1 usage error, 2 data/format error, 3 numerical
            error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    handlers = []
    try:
        cfg = resolve_options(args)
        output = TSVOutput(cfg.out)
        handlers = _configure_logging(output.path(LOG_NAME), args.verbose)
        logger.info(f"Starting synckern {cfg.command}")
        results = HANDLERS[cfg.command](cfg, output)
        output.save_run_manifest(cfg.command, cfg.to_parameters(), __version__, results)
        logger.info(f"synckern {cfg.command} completed")
        return EXIT_OK
    except SynckernError as e:
        _report_failure(args.command, e, handlers)
        return e.exit_code
    except OSError as e:
        _report_failure(args.command, e, handlers)
        return EXIT_DATA
    finally:
        for handler in handlers:
            logging.getLogger().removeHandler(handler)
            handler.close()


def main():
    """Main function to run the SyncKern command line."""
    sys.exit(run_pipeline(sys.argv[1:]))


if __name__ == "__main__":
    main()
