"""
Management command fitting the pairwise ranking models of a run: whole-data
coefficients, k-fold accuracies, McNemar comparisons and collinearity.
"""
import logging
from itertools import combinations

from django.conf import settings

from analysis.exceptions import FoldError
from analysis.ranking import (
    FEATURES, INTERCEPT, FeatureVector, build_pairs, cross_validate, design_matrix, discordant_counts,
    fit_pairs, mcnemar_test, vif,
)
from analysis.stats import pearson
from utils.commands import PipelineCommand
from utils.runs import group_variants, read_variants
from utils.tables import write_table

logger = logging.getLogger(__name__)


def pairs_from_records(records):
    pairs = []
    for sent_id, reference, variants in group_variants(records):
        if not variants:
            continue
        pairs.extend(build_pairs(
            FeatureVector.from_record(reference),
            [FeatureVector.from_record(variant) for variant in variants],
            sent_id,
        ))
    return pairs


class Command(PipelineCommand):
    help = 'Fit and cross-validate the reference-vs-variant ranking models of a run'
    reads_run = True

    def process(self, config, run_dir, options):
        pairs = pairs_from_records(read_variants(run_dir))
        if not pairs:
            raise FoldError("no reference has any variant to pair with")
        logger.info(f"Built {len(pairs)} pairs from {len({p.sent_id for p in pairs})} references")

        coefficients, accuracy, reports = [], [], {}
        for model, features in settings.ORDOLEX_MODELS.items():
            features = tuple(features)
            fit = fit_pairs(pairs, features)
            for name in (INTERCEPT, *features):
                coefficients.append({
                    'model': model,
                    'feature': name,
                    'coef': fit.coefficients[name],
                    'se': fit.std_errors[name],
                    'z': fit.z_scores[name],
                    'p': fit.p_values[name],
                    'separated': int(fit.norm_guard),
                })
            report = cross_validate(pairs, k=config.folds, seed=config.seed, features=features)
            reports[model] = report
            for fold, value in enumerate(report.fold_accuracies, start=1):
                accuracy.append({'model': model, 'fold': fold, 'accuracy': value})
            accuracy.append({'model': model, 'fold': 'mean', 'accuracy': report.mean_accuracy})
            self.stdout.write(f"{model}: {report.mean_accuracy:.2f}% ({config.folds}-fold)")

        comparisons = []
        for model_a, model_b in combinations(reports, 2):
            b, c = discordant_counts(reports[model_a].correct, reports[model_b].correct)
            result = mcnemar_test(b, c)
            comparisons.append({
                'model_a': model_a, 'model_b': model_b, 'b': b, 'c': c,
                'statistic': result.statistic, 'p': result.p_value, 'exact': int(result.exact),
            })

        X, _ = design_matrix(pairs, FEATURES)
        collinearity = [
            {'statistic': 'vif', 'feature': item.feature, 'value': item.value, 'capped': int(item.capped)}
            for item in vif(X, FEATURES)
        ]
        collinearity.append({
            'statistic': 'pearson', 'feature': '+'.join(FEATURES),
            'value': pearson(X[:, 0], X[:, 1]), 'capped': 0,
        })

        write_table(run_dir / 'coefficients.csv', coefficients,
                    ('model', 'feature', 'coef', 'se', 'z', 'p', 'separated'))
        write_table(run_dir / 'accuracy.csv', accuracy, ('model', 'fold', 'accuracy'))
        write_table(run_dir / 'mcnemar.csv', comparisons,
                    ('model_a', 'model_b', 'b', 'c', 'statistic', 'p', 'exact'))
        write_table(run_dir / 'collinearity.csv', collinearity, ('statistic', 'feature', 'value', 'capped'))
        self.stdout.write(self.style.SUCCESS(f"Model reports written to {run_dir}"))
