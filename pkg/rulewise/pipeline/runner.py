"""Variable selection, cross-validated evaluation and reporting for one run."""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

import rulewise
from cohort.folds import spawn_seeds
from cohort.horizon import restrict_horizon
from cohort.ingest import load_cohort
from forest.importance import aggregate_importance, variable_importance_table
from forest.propensity import fit_propensity
from learners.fitting import fit_learner
from rist.imputation import run_imputation
from valueeval.compare import compare_to_zero_order
from valueeval.crossval import cross_validated_values
from valueeval.report import report_frame, write_report

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'


@dataclass
class RunResult:
    files: list = field(default_factory=list)
    report: pd.DataFrame | None = None
    selected: dict = field(default_factory=dict)


def write_manifest(directory, command, config, seeds, files):
    """Config echo, seeds, package version and outputs of a command."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        'command': command,
        'version': rulewise.__version__,
        'seeds': seeds,
        'config': config,
        'outputs': sorted(Path(f).name for f in files),
    }
    path = directory / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def outcomes_for(config):
    return config.outcomes or tuple(config.schema.outcomes)


def complete_rewards(cohort, rist_params, seed):
    """``cohort`` with censored subjects imputed, unchanged when none are flagged."""
    if not cohort.needs_imputation.any():
        return cohort
    return run_imputation(cohort, rist_params, seed=seed).cohort


def importance_tables(cohort, k, seed, params, rist_params):
    """Per-fold and aggregate importance on the completed cohort."""
    impute_seed, importance_seed = spawn_seeds(seed, 2)
    completed = complete_rewards(cohort, rist_params, impute_seed)
    per_fold = variable_importance_table(completed, k, importance_seed, params)
    return per_fold, aggregate_importance(per_fold, completed.schema)


def _block_seeds(seed, blocks):
    seeds = spawn_seeds(seed, 2 * len(blocks))
    return {block: (seeds[2 * i], seeds[2 * i + 1]) for i, block in enumerate(blocks)}


def run_pipeline(config, select_variables=None, command='pipeline'):
    """Evaluate the comparator and every learner per (outcome, horizon).

    With variable selection the top ``config.top_m`` covariates by mean
    importance rank are kept before evaluation.
    """
    select_variables = config.select_variables if select_variables is None else select_variables
    config.check_input()
    out = Path(config.output_dir)
    evaluation = config.evaluation
    blocks = [(outcome, horizon) for outcome in outcomes_for(config) for horizon in config.horizons]
    seeds = _block_seeds(config.seed, blocks)

    result = RunResult()
    report_blocks, importance_frames, fold_frames = [], [], []
    for outcome in outcomes_for(config):
        cohort = load_cohort(config.input, config.schema, outcome=outcome)
        for horizon in config.horizons:
            selection_seed, cv_seed = seeds[(outcome, horizon)]
            restricted = restrict_horizon(cohort, horizon)
            if select_variables and restricted.p > config.top_m:
                per_fold, aggregate = importance_tables(
                    restricted, evaluation.k, selection_seed, evaluation.forest, evaluation.rist,
                )
                keep = list(aggregate['covariate'][:config.top_m])
                restricted = restricted.select(keep)
                result.selected[(outcome, horizon)] = keep
                fold_frames.append(per_fold.assign(outcome=outcome, horizon_days=horizon))
                importance_frames.append(aggregate.assign(outcome=outcome, horizon_days=horizon))
                logger.info('Selected %d of %d covariates at %.0f days: %s', len(keep), cohort.p, horizon, keep)

            estimates = cross_validated_values(
                restricted, config.rules, k=evaluation.k, seed=cv_seed, config=evaluation,
            )
            compared = compare_to_zero_order(estimates, estimates[config.comparator])
            report_blocks.append((outcome, compared))

    result.report = report_frame(report_blocks)
    result.files.extend(write_report(result.report, out))
    if importance_frames:
        importance_path = out / 'importance.csv'
        pd.concat(importance_frames, ignore_index=True).to_csv(importance_path, index=False, float_format='%.6f')
        folds_path = out / 'importance_folds.csv'
        pd.concat(fold_frames, ignore_index=True).to_csv(folds_path, index=False, float_format='%.6f')
        result.files.extend([importance_path, folds_path])

    block_seeds = {f'{outcome}@{horizon:g}': list(pair) for (outcome, horizon), pair in seeds.items()}
    manifest_seeds = {'seed': config.seed, 'blocks': block_seeds}
    result.files.append(write_manifest(out, command, config.as_dict(), manifest_seeds, result.files))
    return result


def fit_rule(config, learner, outcome=None, horizon=None, select_variables=False):
    """Fit ``learner`` on the whole cohort at one horizon.

    Returns the rule and the covariates it was fitted on.
    """
    config.check_input()
    evaluation = config.evaluation
    outcome = outcome or outcomes_for(config)[0]
    horizon = horizon or config.horizons[-1]
    selection_seed, propensity_seed, impute_seed, learner_seed = spawn_seeds(config.seed, 4)

    cohort = restrict_horizon(load_cohort(config.input, config.schema, outcome=outcome), horizon)
    if select_variables and cohort.p > config.top_m:
        _, aggregate = importance_tables(cohort, evaluation.k, selection_seed, evaluation.forest, evaluation.rist)
        cohort = cohort.select(list(aggregate['covariate'][:config.top_m]))
    propensity = fit_propensity(cohort, evaluation.forest, seed=propensity_seed, clip=evaluation.clip)
    completed = complete_rewards(cohort, evaluation.rist, impute_seed)
    rule = fit_learner(learner, completed, propensity, evaluation.learner, seed=learner_seed)
    logger.info('Fitted %s on n=%d at %.0f days with %d covariates', learner, cohort.n, horizon, cohort.p)
    return rule, list(cohort.schema)
