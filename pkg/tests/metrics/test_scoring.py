"""Tests for cosine scoring, EER and minDCF."""

import os
import sys
import unittest

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))

from tests.test_config import BaseTestCase
from petforge.core.errors import ConfigurationError, InputError, MissingEmbeddingError, NumericError
from petforge.data.models import Trial, TrialSet
from petforge.data.repositories import TrialRepository
from petforge.engine.tensor import Tensor
from petforge.metrics.scoring import (DcfParams, compute_eer, compute_min_dcf, cosine_score, error_rates,
                                      evaluate_scores, score_trials)

ORACLE_INSTANCES = 1000


def labelled(targets, nontargets):
    scores = list(targets) + list(nontargets)
    labels = [1] * len(targets) + [0] * len(nontargets)
    return scores, labels


def brute_force_rates(scores, labels):
    """Rates at every distinct score and +inf by direct counting."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    targets, nontargets = scores[labels == 1], scores[labels == 0]
    thresholds = sorted(set(scores.tolist())) + [np.inf]
    p_miss = [sum(1 for s in targets if s < t) / len(targets) for t in thresholds]
    p_fa = [sum(1 for s in nontargets if s >= t) / len(nontargets) for t in thresholds]
    return p_miss, p_fa


def brute_force_eer(scores, labels):
    p_miss, p_fa = brute_force_rates(scores, labels)
    for k in range(len(p_miss)):
        if p_miss[k] >= p_fa[k]:
            if k == 0:
                return p_miss[0]
            d0 = p_fa[k - 1] - p_miss[k - 1]
            d1 = p_fa[k] - p_miss[k]
            return p_miss[k - 1] + d0 / (d0 - d1) * (p_miss[k] - p_miss[k - 1])
    raise AssertionError("rates never cross")


def brute_force_min_dcf(scores, labels, params=DcfParams()):
    p_miss, p_fa = brute_force_rates(scores, labels)
    costs = [params.p_target * params.c_miss * m + (1 - params.p_target) * params.c_fa * f
             for m, f in zip(p_miss, p_fa)]
    return min(costs) / min(params.p_target * params.c_miss, (1 - params.p_target) * params.c_fa)


class TestCosineScore(BaseTestCase):
    """Cosine similarity of two embeddings."""

    def test_reference_angles(self):
        """Parallel, orthogonal and opposite vectors."""
        self.assertAlmostEqual(cosine_score([1.0, 2.0], [2.0, 4.0]), 1.0, places=12)
        self.assertAlmostEqual(cosine_score([1.0, 0.0], [0.0, 3.0]), 0.0, places=12)
        self.assertAlmostEqual(cosine_score([1.0, 1.0], [-1.0, -1.0]), -1.0, places=12)

    def test_accepts_tensors(self):
        """Tensors and arrays score alike."""
        self.assertAlmostEqual(cosine_score(Tensor([[3.0, 4.0]]), np.array([4.0, 3.0])), 24.0 / 25.0, places=12)

    def test_zero_norm(self):
        """A zero embedding has no direction."""
        with self.assertRaises(NumericError):
            cosine_score([0.0, 0.0], [1.0, 0.0])

    def test_size_mismatch(self):
        """Embeddings must share a size."""
        with self.assertRaises(InputError):
            cosine_score([1.0, 0.0], [1.0, 0.0, 0.0])


class TestEqualErrorRate(BaseTestCase):
    """Miss / false-alarm crossing."""

    def test_perfect_separation(self):
        """All targets above all nontargets: 0."""
        self.assertEqual(compute_eer(*labelled([0.9, 0.8], [0.1, 0.2])), 0.0)

    def test_interleaved(self):
        """Targets {0.9, 0.4}, nontargets {0.6, 0.1}: 0.5."""
        self.assertAlmostEqual(compute_eer(*labelled([0.9, 0.4], [0.6, 0.1])), 0.5, places=12)

    def test_reversed(self):
        """All targets below all nontargets: 1."""
        self.assertAlmostEqual(compute_eer(*labelled([0.1, 0.2], [0.8, 0.9])), 1.0, places=12)

    def test_single_class(self):
        """Both classes are required."""
        with self.assertRaises(InputError):
            compute_eer([0.1, 0.2], [1, 1])

    def test_non_finite_scores(self):
        """NaN scores are numeric errors."""
        with self.assertRaises(NumericError):
            compute_eer([np.nan, 0.2], [1, 0])

    def test_label_count(self):
        """Scores and labels pair up."""
        with self.assertRaises(InputError):
            compute_eer([0.1, 0.2, 0.3], [1, 0])


class TestMinDcf(BaseTestCase):
    """Normalized minimum detection cost."""

    def test_uninformative_scores(self):
        """Equal scores cost exactly the normalizer: 1."""
        self.assertEqual(compute_min_dcf(*labelled([0.3, 0.3], [0.3, 0.3, 0.3])), 1.0)

    def test_perfect_separation(self):
        """Separable scores cost 0."""
        self.assertEqual(compute_min_dcf(*labelled([0.9, 0.8], [0.1, 0.2])), 0.0)

    def test_parameter_validation(self):
        """p_target in (0, 1) and positive costs."""
        scores, labels = labelled([0.9], [0.1])
        for params in (DcfParams(p_target=0.0), DcfParams(p_target=1.0), DcfParams(c_fa=0.0)):
            with self.assertRaises(ConfigurationError):
                compute_min_dcf(scores, labels, params)

    def test_custom_operating_point(self):
        """p_target=0.01 follows the brute-force cost."""
        params = DcfParams(p_target=0.01)
        scores, labels = labelled([0.9, 0.4, 0.7], [0.6, 0.1, 0.5, 0.8])
        self.assertAlmostEqual(compute_min_dcf(scores, labels, params),
                               brute_force_min_dcf(scores, labels, params), delta=1e-12)


class TestAgainstBruteForce(BaseTestCase):
    """Random instances, ties included, against direct counting."""

    def test_random_instances(self):
        """1000 instances agree within 1e-9 (EER) and 1e-12 (minDCF)."""
        rng = np.random.default_rng(2024)
        for instance in range(ORACLE_INSTANCES):
            n_target = int(rng.integers(1, 12))
            n_nontarget = int(rng.integers(1, 20))
            decimals = int(rng.integers(1, 4))
            targets = np.round(rng.normal(0.5, 0.3, n_target), decimals)
            nontargets = np.round(rng.normal(0.2, 0.3, n_nontarget), decimals)
            scores, labels = labelled(targets, nontargets)
            with self.subTest(instance=instance):
                self.assertAlmostEqual(compute_eer(scores, labels), brute_force_eer(scores, labels), delta=1e-9)
                self.assertAlmostEqual(compute_min_dcf(scores, labels), brute_force_min_dcf(scores, labels),
                                       delta=1e-12)

    def test_rates_shape(self):
        """Thresholds are the distinct scores plus +inf; rates end at (1, 0)."""
        thresholds, p_miss, p_fa = error_rates(*labelled([0.5, 0.5, 0.9], [0.1, 0.5]))
        self.assertArrayEqual(thresholds, [0.1, 0.5, 0.9, np.inf])
        self.assertEqual((p_miss[-1], p_fa[-1]), (1.0, 0.0))
        self.assertEqual((p_miss[0], p_fa[0]), (0.0, 1.0))


class TestScoreTrials(BaseTestCase):
    """Scoring a trial list from an embedding lookup."""

    def setUp(self):
        super().setUp()
        self.embeddings = {'a': np.array([1.0, 0.0]), 'b': np.array([1.0, 0.1]), 'c': np.array([0.0, 1.0])}
        self.trials = TrialSet([Trial(1, 'a', 'b'), Trial(0, 'a', 'c'), Trial(0, 'b', 'c')])

    def test_scores_and_file(self):
        """Scores follow trial order and round-trip through the score file."""
        path = os.path.join(self.work_dir, 'scores.txt')
        scored = score_trials(self.trials, self.embeddings, path)
        self.assertTrue(scored.has_scores)
        self.assertAlmostEqual(scored.trials[1].score, 0.0, places=12)
        reloaded = TrialRepository.attach_scores(self.trials, TrialRepository.load_scores(path))
        self.assertArrayClose(reloaded.scores, scored.scores, atol=1e-6)

    def test_callable_lookup(self):
        """A callable lookup works like a mapping."""
        scored = score_trials(self.trials, self.embeddings.__getitem__)
        self.assertEqual(len(scored), 3)

    def test_missing_embedding(self):
        """Unknown utterances name the id."""
        trials = TrialSet([Trial(1, 'a', 'zz')])
        with self.assertRaises(MissingEmbeddingError) as ctx:
            score_trials(trials, self.embeddings)
        self.assertEqual(ctx.exception.utt_id, 'zz')

    def test_evaluate(self):
        """The target pair scores highest: EER and minDCF are 0."""
        eer, min_dcf = evaluate_scores(score_trials(self.trials, self.embeddings))
        self.assertEqual(eer, 0.0)
        self.assertEqual(min_dcf, 0.0)

    def test_evaluate_unscored(self):
        """Unscored trials cannot be evaluated."""
        with self.assertRaises(InputError):
            evaluate_scores(self.trials)


if __name__ == '__main__':
    unittest.main()
