import math

import numpy as np
from django.test import SimpleTestCase
from scipy import optimize
from scipy.special import expit
from scipy.stats import binom, chi2

from treebank.synthetic import synthetic_corpus
from treebank.trees import ClauseLayout, build_tree, extract_layout
from treebank.variants import SeedPolicy, VariantRecord, Permutation, generate_variants, strategy_records
from .exceptions import FoldError, RankDeficientError, UndefinedStatisticError
from .ranking import (
    FeatureVector, PairRecord, assign_folds, build_pairs, cross_validate, design_matrix, discordant_counts,
    fit_logistic, fit_pairs, mcnemar_test, vif,
)
from .stats import (
    deprel_position_profile, mean_normalized_dl, pearson, positional_mean_lengths, shortest_last_rate, zscore,
)


def layout(lengths, deprels=None, sent_id='t'):
    verb = sum(lengths) + 1
    heads = []
    start = 1
    for length in lengths:
        heads.extend(verb if p == start else start for p in range(start, start + length))
        start += length
    heads.append(0)
    return ClauseLayout.rebuild(sent_id, heads, verb, lengths, [length - 1 for length in lengths],
                                deprels or ['dep'] * len(lengths))


def record(total_dl, n_words, n_constituents=4, sent_id='s'):
    return VariantRecord(
        sent_id=sent_id, order=Permutation.identity(n_constituents), is_reference=True,
        n_constituents=n_constituents, n_words=n_words, cl_last=1, total_dl=total_dl, root_arc_dl=total_dl,
    )


def synthetic_pairs(n_references, seed=0):
    pairs = []
    seed_policy = SeedPolicy(seed)
    for sentence in synthetic_corpus(n_references, seed=seed):
        reference, *variants = generate_variants(extract_layout(build_tree(sentence)), 120, seed_policy)
        pairs.extend(build_pairs(
            FeatureVector.from_record(reference),
            [FeatureVector.from_record(v) for v in variants],
            sentence.sent_id,
        ))
    return pairs


def likelihood_oracle(X, y):
    """Newton-free maximiser of the logistic likelihood with intercept"""
    design = np.column_stack([np.ones(len(y)), X])

    def loss(beta):
        eta = design @ beta
        return np.sum(np.logaddexp(0, eta) - y * eta)

    def grad(beta):
        return design.T @ (expit(design @ beta) - y)

    def hess(beta):
        p = expit(design @ beta)
        return design.T @ (design * (p * (1 - p))[:, None])

    result = optimize.minimize(loss, np.zeros(design.shape[1]), jac=grad, hess=hess,
                               method='trust-exact', options={'gtol': 1e-12})
    return result.x


class PositionalProfileTests(SimpleTestCase):
    def test_slot_means(self):
        profile = positional_mean_lengths([layout([1, 3]), layout([3, 1])], 2)
        self.assertEqual(profile.mean_lengths, (2.0, 2.0))
        self.assertEqual(profile.counts, 2)
        self.assertEqual(positional_mean_lengths([layout([2, 3, 1, 4])], 4).mean_lengths, (2, 3, 1, 4))

    def test_only_matching_sizes_count(self):
        corpus = [layout([1, 2, 3]), layout([3, 2, 1]), layout([2, 5, 2]), layout([4, 4])]
        profile = positional_mean_lengths(corpus, 3)
        self.assertEqual(profile.counts, 3)
        self.assertEqual(profile.mean_lengths, (2.0, 3.0, 2.0))

    def test_empty_profile(self):
        profile = positional_mean_lengths([layout([1, 2])], 5)
        self.assertTrue(profile.is_empty)
        self.assertEqual(len(profile.mean_lengths), 5)

    def test_least_effort_corpus_is_shortest_last(self):
        layouts = [extract_layout(build_tree(s)) for s in synthetic_corpus(300, seed=7)]
        for n in range(2, 6):
            means = positional_mean_lengths(layouts, n).mean_lengths
            self.assertEqual(means[-1], min(means))
            self.assertEqual(shortest_last_rate(layouts, n)[0], 1.0)


class NormalizedDependencyLengthTests(SimpleTestCase):
    def test_means(self):
        self.assertAlmostEqual(mean_normalized_dl([('reference', record(20, 11))], 'reference', 4), 20 / 11)
        self.assertEqual(mean_normalized_dl([('random', record(0, 5))], 'random', 4), 0.0)
        records = [('random', record(10, 10)), ('random', record(20, 10)), ('ascending', record(50, 10))]
        self.assertAlmostEqual(mean_normalized_dl(records, 'random', 4), 1.5)

    def test_empty_selection_is_absent(self):
        self.assertIsNone(mean_normalized_dl([('random', record(10, 10))], 'random', 3))
        self.assertIsNone(mean_normalized_dl([], 'descending', 4))

    def test_strategy_ordering_on_generated_corpus(self):
        seed_policy = SeedPolicy(11)
        tagged = []
        for sentence in synthetic_corpus(400, seed=3):
            records = strategy_records(extract_layout(build_tree(sentence)), seed_policy)
            tagged.extend(records.items())
        for n in range(2, 6):
            with self.subTest(n=n):
                means = [mean_normalized_dl(tagged, strategy, n)
                         for strategy in ('descending', 'least_effort', 'random', 'ascending')]
                self.assertNotIn(None, means)
                self.assertEqual(means, sorted(means))


class NumericHelperTests(SimpleTestCase):
    def test_pearson(self):
        self.assertAlmostEqual(pearson([1, 2, 3], [2, 4, 6]), 1.0)
        self.assertAlmostEqual(pearson([1, 2, 3], [3, 2, 1]), -1.0)
        self.assertAlmostEqual(pearson([1, 2, 3, 4], [1, 3, 2, 4]), 0.8)
        with self.assertRaises(UndefinedStatisticError):
            pearson([1, 1, 1], [1, 2, 3])

    def test_zscore(self):
        self.assertEqual(list(zscore([1, 2, 3])), [-1.0, 0.0, 1.0])
        np.testing.assert_allclose(zscore([10, 20]), [-0.70710678, 0.70710678], atol=1e-8)
        column = zscore([3.0, 7.5, -2.0, 11.0, 0.5])
        np.testing.assert_allclose(zscore(column), column, atol=1e-12)
        with self.assertRaises(UndefinedStatisticError):
            zscore([4, 4, 4])

    def test_deprel_profile(self):
        corpus = [layout([1, 2], ['cc', 'obj']), layout([2, 1], ['nsubj', 'obl'])]
        self.assertEqual(deprel_position_profile(corpus, 'first'), {'cc': 0.5, 'nsubj': 0.5})
        self.assertEqual(deprel_position_profile(corpus[:1], 'first'), {'cc': 1.0})
        tally = ['nsubj'] * 6 + ['cc'] * 3 + ['obl']
        corpus = [layout([1, 1], [deprel, 'obj']) for deprel in tally]
        profile = deprel_position_profile(corpus, 'first')
        self.assertEqual(profile, {'cc': 0.3, 'nsubj': 0.6, 'obl': 0.1})
        self.assertAlmostEqual(sum(profile.values()), 1.0, places=9)
        self.assertEqual(deprel_position_profile(corpus, 'last'), {'obj': 1.0})


class PairTests(SimpleTestCase):
    reference = FeatureVector({'cl_last': 1, 'total_dl': 10})

    def variants(self, count):
        return [FeatureVector({'cl_last': 2 + k, 'total_dl': 12 + k}) for k in range(count)]

    def test_alternating_labels(self):
        self.assertEqual([p.label for p in build_pairs(self.reference, self.variants(3), 's')], [1, 0, 1])
        self.assertEqual([p.label for p in build_pairs(self.reference, self.variants(4), 's')], [1, 0, 1, 0])

    def test_deltas(self):
        first, second = build_pairs(self.reference, self.variants(2), 's')
        self.assertEqual(first.delta.values, {'cl_last': -1, 'total_dl': -2})
        self.assertEqual(second.delta.values, {'cl_last': 2, 'total_dl': 3})

    def test_flipping_negates(self):
        pair = build_pairs(self.reference, self.variants(1), 's')[0]
        flipped = pair.flipped()
        self.assertEqual(flipped.label, 0)
        self.assertEqual(flipped.delta.values, {'cl_last': 1, 'total_dl': 2})

    def test_labels_balanced_per_group(self):
        pairs = synthetic_pairs(50)
        for sent_id in {p.sent_id for p in pairs}:
            labels = [p.label for p in pairs if p.sent_id == sent_id]
            self.assertLessEqual(abs(labels.count(1) - labels.count(0)), 1)


class LogisticFitTests(SimpleTestCase):
    def test_symmetric_feature_gets_zero_weight(self):
        fit = fit_logistic([-1, 1, -1, 1], [0, 1, 1, 0], features=('x',))
        self.assertTrue(fit.converged)
        self.assertAlmostEqual(fit.coefficients['x'], 0.0, delta=1e-6)

    def test_matches_likelihood_oracle(self):
        rng = np.random.default_rng(5)
        X2 = rng.normal(size=(80, 2))
        y2 = (rng.random(80) < expit(0.8 * X2[:, 0] - 0.5 * X2[:, 1] + 0.2)).astype(float)
        fixtures = [
            (np.array([[-2.0], [1.0], [-1.0], [2.0], [0.5], [-0.5]]), np.array([0, 1, 1, 1, 0, 0.0])),
            (np.array([[-2.0], [1.0], [-1.0], [2.0], [-0.5], [0.5], [1.5]]), np.array([0, 1, 0, 1, 1, 0, 1.0])),
            (X2, y2),
        ]
        for X, y in fixtures:
            with self.subTest(shape=X.shape):
                fit = fit_logistic(X, y)
                self.assertTrue(fit.converged)
                self.assertLess(fit.gradient_max_norm, 1e-8)
                beta = [fit.coefficients['intercept'], *(fit.coefficients[f"x{j}"] for j in range(X.shape[1]))]
                np.testing.assert_allclose(beta, likelihood_oracle(X, y), atol=1e-6)

    def test_standard_errors_and_p_values(self):
        X = np.array([[-2.0], [1.0], [-1.0], [2.0], [0.5], [-0.5]])
        y = np.array([0, 1, 1, 1, 0, 0.0])
        fit = fit_logistic(X, y, features=('x',))
        design = np.column_stack([np.ones(6), X])
        p = expit(design @ [fit.coefficients['intercept'], fit.coefficients['x']])
        covariance = np.linalg.inv(design.T @ (design * (p * (1 - p))[:, None]))
        self.assertAlmostEqual(fit.std_errors['x'], math.sqrt(covariance[1, 1]), places=8)
        self.assertAlmostEqual(fit.z_scores['x'], fit.coefficients['x'] / fit.std_errors['x'], places=8)
        self.assertTrue(0 < fit.p_values['x'] < 1)

    def test_separable_data_stops(self):
        with self.assertLogs('analysis.ranking', level='WARNING'):
            fit = fit_logistic([-2, -1, 1, 2], [0, 0, 1, 1], features=('x',))
        self.assertFalse(fit.converged)
        self.assertTrue(fit.norm_guard)
        self.assertLess(abs(fit.coefficients['x']), 1e6)
        self.assertGreater(fit.coefficients['x'], 0)
        design = np.column_stack([np.ones(4), [-2, -1, 1, 2]])
        p = expit(design @ [fit.coefficients['intercept'], fit.coefficients['x']])
        self.assertAlmostEqual(fit.gradient_max_norm, np.max(np.abs(design.T @ ([0, 0, 1, 1] - p))), places=12)

    def test_quasi_separated_data_is_flagged(self):
        x = [-2, -1, 0, 0, 1, 2]
        y = [1, 1, 1, 0, 0, 0]
        with self.assertLogs('analysis.ranking', level='WARNING'):
            fit = fit_logistic(x, y, features=('x',))
        self.assertFalse(fit.converged)
        self.assertTrue(fit.norm_guard)
        self.assertLess(fit.coefficients['x'], 0)
        self.assertAlmostEqual(fit.coefficients['intercept'], 0.0, places=6)
        for values in (fit.std_errors, fit.z_scores, fit.p_values):
            self.assertTrue(all(math.isfinite(v) for v in values.values()), values)
        # the tied rows keep the fitted log-likelihood at 2 log(1/2); the intercept-only fit has 6 log(1/2)
        self.assertAlmostEqual(fit.p_values['x'], chi2.sf(8 * math.log(2), 1), places=6)
        self.assertLess(fit.z_scores['x'], 0)

    def test_rank_deficient_design(self):
        x = np.array([-2.0, 1.0, -1.0, 2.0, 0.5])
        with self.assertRaises(RankDeficientError) as ctx:
            fit_logistic(np.column_stack([x, 2 * x]), [0, 1, 0, 1, 1], features=('cl_last', 'total_dl'))
        self.assertEqual(ctx.exception.column, 'total_dl')
        with self.assertRaises(RankDeficientError) as ctx:
            fit_logistic(np.ones(4), [0, 1, 0, 1], features=('flat',))
        self.assertEqual(ctx.exception.column, 'flat')


class CrossValidationTests(SimpleTestCase):
    def dominated_pairs(self, n_groups):
        reference = FeatureVector({'cl_last': 1, 'total_dl': 10})
        variants = [
            FeatureVector({'cl_last': 2, 'total_dl': 12}),
            FeatureVector({'cl_last': 3, 'total_dl': 11}),
            FeatureVector({'cl_last': 4, 'total_dl': 15}),
        ]
        return [p for g in range(n_groups) for p in build_pairs(reference, variants, f"g{g:02d}")]

    def test_folds_hold_whole_groups(self):
        folds = assign_folds([f"g{g}" for g in range(20)], 10, seed=3)
        self.assertEqual(sorted(list(folds.values()).count(f) for f in range(10)), [2] * 10)
        self.assertEqual(folds, assign_folds([f"g{g}" for g in reversed(range(20))], 10, seed=3))

    def test_dominating_references_are_always_found(self):
        report = cross_validate(self.dominated_pairs(20), k=10, seed=0)
        self.assertEqual(report.fold_accuracies, (100.0,) * 10)
        self.assertEqual(report.mean_accuracy, 100.0)
        self.assertTrue(all(report.correct))

    def test_too_few_groups(self):
        with self.assertRaises(FoldError):
            cross_validate(self.dominated_pairs(5), k=10)


class SignificanceTests(SimpleTestCase):
    def test_exact_mcnemar(self):
        self.assertEqual(mcnemar_test(10, 10).p_value, 1.0)
        result = mcnemar_test(15, 5)
        self.assertTrue(result.exact)
        self.assertAlmostEqual(result.p_value, 2 * binom.cdf(5, 20, 0.5), delta=1e-4)
        self.assertAlmostEqual(result.p_value, 0.0414, delta=1e-4)

    def test_chi_square_mcnemar(self):
        result = mcnemar_test(100, 50)
        self.assertFalse(result.exact)
        self.assertAlmostEqual(result.statistic, 49 ** 2 / 150, places=6)
        self.assertAlmostEqual(result.p_value, chi2.sf(49 ** 2 / 150, 1), places=10)
        self.assertAlmostEqual(result.p_value, 6.3e-5, delta=1e-6)

    def test_no_discordant_items(self):
        result = mcnemar_test(0, 0)
        self.assertTrue(result.undefined)
        self.assertEqual(result.p_value, 1.0)

    def test_discordant_counts(self):
        self.assertEqual(discordant_counts([1, 1, 0, 0, 1], [1, 0, 1, 0, 0]), (2, 1))

    def test_vif(self):
        z1 = np.array([1.0, -1.0, 1.0, -1.0])
        z2 = np.array([1.0, 1.0, -1.0, -1.0])
        np.testing.assert_allclose([v.value for v in vif(np.column_stack([z1, z2]))], [1.0, 1.0])
        correlated = np.column_stack([z1, 0.7 * z1 + math.sqrt(0.51) * z2])
        for item in vif(correlated):
            self.assertAlmostEqual(item.value, 1 / (1 - 0.49), delta=1e-3)
        self.assertEqual([v.value for v in vif(z1)], [1.0])

    def test_perfect_collinearity_is_capped(self):
        x = np.array([1.0, 2.0, 4.0, 7.0])
        with self.assertLogs('analysis.ranking', level='WARNING'):
            result = vif(np.column_stack([x, 3 * x + 1]), names=('a', 'b'))
        self.assertTrue(all(item.capped for item in result))


class RankingModelTests(SimpleTestCase):
    """End-to-end behaviour on a synthetic corpus whose references put the shortest constituent last"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.pairs = synthetic_pairs(300, seed=1)

    def test_coefficient_directions(self):
        for feature in ('cl_last', 'total_dl'):
            with self.subTest(feature=feature):
                fit = fit_pairs(self.pairs, (feature,))
                self.assertLess(fit.coefficients[feature], 0)
                self.assertLess(fit.p_values[feature], 0.001)
                for values in (fit.std_errors, fit.z_scores, fit.p_values):
                    self.assertTrue(all(math.isfinite(v) for v in values.values()), values)

    def test_verb_adjacent_length_quasi_separates(self):
        # references are never longer-last than their variants, so delta CL Last <= 0 for every label-1 pair
        pairs = self.pairs
        self.assertTrue(all(p.delta['cl_last'] <= 0 for p in pairs if p.label == 1))
        self.assertTrue(all(p.delta['cl_last'] >= 0 for p in pairs if p.label == 0))
        with self.assertLogs('analysis.ranking', level='WARNING'):
            fit = fit_pairs(pairs, ('cl_last',))
        self.assertTrue(fit.norm_guard)
        self.assertFalse(fit.converged)
        self.assertLess(fit.z_scores['cl_last'], 0)

    def test_intercept_vanishes_on_symmetric_pairs(self):
        """The intercept is ~0 once every pair also appears flipped.

        The alternating pair set alone does not get below 0.05: every
        two-constituent reference has a single, reference-first pair, which
        tips the labels towards 1 and leaves a few hundredths of intercept.
        """
        pairs = self.pairs[:2000]
        fit = fit_pairs(pairs + [p.flipped() for p in pairs], ('cl_last',))
        self.assertAlmostEqual(fit.coefficients['intercept'], 0.0, places=6)
        self.assertLess(abs(fit_pairs(self.pairs, ('total_dl',)).coefficients['intercept']), 0.15)

    def test_accuracy_above_chance(self):
        cl_last = cross_validate(self.pairs, k=10, seed=0, features=('cl_last',))
        total_dl = cross_validate(self.pairs, k=10, seed=0, features=('total_dl',))
        combined = cross_validate(self.pairs, k=10, seed=0, features=('total_dl', 'cl_last'))
        self.assertGreater(cl_last.mean_accuracy, 65)
        self.assertGreaterEqual(combined.mean_accuracy, max(cl_last.mean_accuracy, total_dl.mean_accuracy) - 1)

    def test_shuffled_labels_are_at_chance(self):
        rng = np.random.default_rng(0)
        shuffled = []
        for sent_id in sorted({p.sent_id for p in self.pairs}):
            group = [p for p in self.pairs if p.sent_id == sent_id]
            labels = rng.permutation([p.label for p in group])
            shuffled.extend(PairRecord(p.sent_id, p.delta, int(label)) for p, label in zip(group, labels))
        report = cross_validate(shuffled, k=10, seed=0, features=('cl_last', 'total_dl'))
        self.assertLess(abs(report.mean_accuracy - 50), 3)

    def test_orientation_invariance(self):
        pairs = self.pairs[:3000]
        flipped = [p.flipped() for p in pairs]
        fit, mirrored = fit_pairs(pairs, ('total_dl',)), fit_pairs(flipped, ('total_dl',))
        for name, value in fit.coefficients.items():
            self.assertAlmostEqual(mirrored.coefficients[name], -value, places=8)
        self.assertAlmostEqual(
            cross_validate(pairs, k=10, seed=2, features=('total_dl',)).mean_accuracy,
            cross_validate(flipped, k=10, seed=2, features=('total_dl',)).mean_accuracy,
        )
        combined = ('total_dl', 'cl_last')
        fit, mirrored = fit_pairs(pairs, combined), fit_pairs(flipped, combined)
        for name in combined:
            self.assertEqual(np.sign(mirrored.coefficients[name]), -np.sign(fit.coefficients[name]))

    def test_design_matrix_columns(self):
        X, y = design_matrix(self.pairs[:5], ('cl_last', 'total_dl'))
        self.assertEqual(X.shape, (5, 2))
        self.assertEqual(list(y), [p.label for p in self.pairs[:5]])


class AcceptanceScaleTests(SimpleTestCase):
    """Single-feature models on 1,000 least-effort references"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.pairs = synthetic_pairs(1000, seed=0)

    def test_both_features_prefer_the_reference(self):
        for feature in ('cl_last', 'total_dl'):
            with self.subTest(feature=feature):
                fit = fit_pairs(self.pairs, (feature,))
                self.assertLess(fit.coefficients[feature], 0)
                self.assertLess(fit.p_values[feature], 0.001)

    def test_verb_adjacent_length_accuracy(self):
        report = cross_validate(self.pairs, k=10, seed=0, features=('cl_last',))
        self.assertGreater(report.mean_accuracy, 65)
        self.assertTrue(all(0 <= a <= 100 for a in report.fold_accuracies))
