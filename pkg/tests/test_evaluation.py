import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgtdetect.errors import AurocUndefined, DataError
from mgtdetect.evaluation import (
    AdversarialTransform,
    ConfusionMatrix,
    DetectorScorer,
    adversarial_transform,
    auroc,
    confusion,
    metrics,
    robustness_report,
    youden_threshold,
)
from mgtdetect.ingest import Label
from mgtdetect.text_core import tokenize, word_tokens

from conftest import make_corpus, make_doc


def brute_force_auroc(scores, labels):
    """Exhaustive pairwise comparison: win 1, tie 0.5."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(
        1.0 if p > n else (0.5 if p == n else 0.0) for p in pos for n in neg
    )
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_hand_count(self):
        cm = confusion([1, 1, 0], [1, 1, 0])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (2, 1, 0, 0)

    def test_total_inversion(self):
        cm = confusion([0, 0, 1], [1, 1, 0])
        assert (cm.tp, cm.tn) == (0, 0)
        assert (cm.fp, cm.fn) == (1, 2)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            confusion([], [])

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            confusion([1], [1, 0])


class TestMetrics:
    def test_f1_exact_for_symmetric_097(self):
        # tp=97, fp=3, fn=3 gives P = R = 0.97 and F1 = 194/200 = 0.97.
        cm = ConfusionMatrix(tp=97, fp=3, fn=3, tn=97)
        scores = [1.0] * 100 + [0.0] * 100
        labels = [1] * 100 + [0] * 100
        report = metrics(cm, scores, labels)
        assert report.precision == 0.97
        assert report.recall == 0.97
        assert report.f1 == 0.97

    def test_perfect_separation_auroc(self):
        assert auroc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0

    def test_overlapping_scores_match_brute_force(self):
        scores = [0.8, 0.2, 0.5]
        labels = [1, 1, 0]
        assert auroc(scores, labels) == brute_force_auroc(scores, labels) == 0.5

    def test_single_class_undefined(self):
        with pytest.raises(AurocUndefined):
            auroc([0.1, 0.9], [1, 1])

    def test_zero_denominators_flagged(self):
        cm = ConfusionMatrix(tp=0, fp=0, fn=2, tn=2)
        report = metrics(cm, [0.1, 0.2, 0.3, 0.4], [1, 1, 0, 0])
        assert report.precision == 0.0
        assert report.f1 == 0.0
        assert "precision_zero_denominator" in report.flags

    def test_accuracy_identity(self):
        cm = ConfusionMatrix(tp=3, fp=2, fn=1, tn=4)
        report = metrics(cm, list(np.linspace(0, 1, 10)), [1, 1, 1, 1, 0, 0, 0, 0, 0, 1])
        assert report.accuracy == (3 + 4) / 10

    @settings(max_examples=200, deadline=None)
    @given(
        n_pos=st.integers(1, 25),
        n_neg=st.integers(1, 25),
        seed=st.integers(0, 10_000),
    )
    def test_rank_auroc_equals_brute_force(self, n_pos, n_neg, seed):
        rng = np.random.default_rng(seed)
        # Quantized scores so ties actually occur.
        scores = list(rng.integers(0, 8, size=n_pos + n_neg) / 7.0)
        labels = [1] * n_pos + [0] * n_neg
        assert abs(auroc(scores, labels) - brute_force_auroc(scores, labels)) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_auroc_invariant_under_increasing_transforms(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.normal(size=20)
        labels = [1] * 10 + [0] * 10
        base = auroc(list(scores), labels)
        assert auroc(list(3.0 * scores + 1.0), labels) == pytest.approx(base, abs=1e-12)
        assert auroc(list(np.tanh(scores)), labels) == pytest.approx(base, abs=1e-12)

    def test_f1_between_precision_and_recall(self):
        cm = ConfusionMatrix(tp=6, fp=4, fn=1, tn=9)
        report = metrics(cm, list(np.linspace(0, 1, 20)), [1] * 7 + [0] * 13)
        assert min(report.precision, report.recall) <= report.f1
        assert report.f1 <= max(report.precision, report.recall)


class TestYouden:
    def test_matches_sweep_oracle(self):
        rng = np.random.default_rng(4)
        scores = list(rng.normal(0, 1, 15)) + list(rng.normal(1.5, 1, 15))
        labels = [0] * 15 + [1] * 15

        best_j, best_t = -2.0, None
        for t in sorted(set(scores)):
            tpr = sum(s >= t for s, y in zip(scores, labels) if y == 1) / 15
            fpr = sum(s >= t for s, y in zip(scores, labels) if y == 0) / 15
            if tpr - fpr > best_j + 1e-12:
                best_j, best_t = tpr - fpr, t
        assert youden_threshold(scores, labels) == best_t


class TestAdversarialTransforms:
    def test_intensity_zero_identity(self):
        doc = make_doc("Some plain text here.")
        for kind in ("special_chars", "whitespace_noise", "case_flip"):
            tf = AdversarialTransform(kind=kind, intensity=0.0, seed=1)
            assert adversarial_transform(doc, tf).body == doc.body

    def test_special_chars_exact_insertions(self):
        doc = make_doc("one two three four five six seven eight nine ten")
        tf = AdversarialTransform(kind="special_chars", intensity=0.2, seed=3)
        out = adversarial_transform(doc, tf)
        sequences = ('\\"', "\\'", "/", "\\")
        changed = [
            (orig, new)
            for orig, new in zip(doc.body.split(" "), out.body.split(" "))
            if orig != new
        ]
        # floor(0.2 * 10) = 2 insertion points, each one escaped sequence
        assert len(changed) == 2
        for orig, new in changed:
            assert new[: len(orig)] == orig
            assert new[len(orig):] in sequences
        assert word_tokens(out.body) == word_tokens(doc.body)

    def test_whitespace_noise_doubles_spaces(self):
        doc = make_doc("a b c d e")
        tf = AdversarialTransform(kind="whitespace_noise", intensity=1.0, seed=2)
        out = adversarial_transform(doc, tf)
        assert out.body.count(" ") == 8  # all four spaces doubled
        assert word_tokens(out.body) == word_tokens(doc.body)

    def test_case_flip_changes_exact_count(self):
        doc = make_doc("abcdefghij")
        tf = AdversarialTransform(kind="case_flip", intensity=0.5, seed=7)
        out = adversarial_transform(doc, tf)
        changed = sum(a != b for a, b in zip(doc.body, out.body))
        assert changed == 5

    def test_deterministic(self):
        doc = make_doc("Some plain text, with punctuation marks!")
        tf = AdversarialTransform(kind="special_chars", intensity=0.5, seed=11)
        assert adversarial_transform(doc, tf).body == adversarial_transform(doc, tf).body

    def test_label_preserved(self):
        doc = make_doc("text sample", label=Label.MACHINE)
        tf = AdversarialTransform(kind="case_flip", intensity=0.8, seed=0)
        assert adversarial_transform(doc, tf).label == Label.MACHINE

    def test_unknown_kind_rejected(self):
        with pytest.raises(DataError):
            AdversarialTransform(kind="homoglyphs", intensity=0.1, seed=0)


class TestRobustnessReport:
    def _corpus(self):
        return make_corpus(
            ["human one speaks.", "human two speaks."],
            ["machine one talks.", "machine two talks."],
        )

    def test_identity_transforms_have_zero_deltas(self):
        scorer = DetectorScorer(
            name="by-label",
            score_fn=lambda d: 1.0 if d.label == Label.MACHINE else 0.0,
            threshold=0.5,
        )
        transforms = [AdversarialTransform(kind="case_flip", intensity=0.0, seed=0)]
        report = robustness_report(scorer, self._corpus(), transforms)
        entry = report.per_transform["case_flip@0.0"]
        assert all(v == 0.0 for v in entry["delta"].values())

    def test_constant_score_detector_gets_half_auroc(self):
        scorer = DetectorScorer(name="const", score_fn=lambda d: 0.5, threshold=0.5)
        transforms = [AdversarialTransform(kind="case_flip", intensity=0.5, seed=0)]
        report = robustness_report(scorer, self._corpus(), transforms)
        assert report.before.auroc == 0.5
        entry = report.per_transform["case_flip@0.5"]
        assert all(v == 0.0 for v in entry["delta"].values())

    def test_surface_sensitive_scorer_records_deltas(self):
        # Scores depend on raw punctuation counts, so the special-chars
        # attack moves them; only the report shape is asserted.
        scorer = DetectorScorer(
            name="punct-counter",
            score_fn=lambda d: sum(not t.is_word for t in tokenize(d.body)) / 10.0,
            threshold=0.15,
        )
        transforms = [AdversarialTransform(kind="special_chars", intensity=0.5, seed=5)]
        report = robustness_report(scorer, self._corpus(), transforms)
        entry = report.per_transform["special_chars@0.5"]
        assert set(entry["delta"]) == {"precision", "recall", "f1", "accuracy", "auroc"}
        assert all(np.isfinite(v) for v in entry["delta"].values())

    def test_single_class_rejected(self):
        scorer = DetectorScorer(name="c", score_fn=lambda d: 0.0, threshold=0.5)
        corpus = make_corpus(["only human."], [])
        with pytest.raises(DataError):
            robustness_report(scorer, corpus, [])
