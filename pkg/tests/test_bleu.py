import math
import random
import re
import shutil
import subprocess
from pathlib import Path

import pytest

from app.errors import DataError, EmptyCorpus, LengthMismatch, MissingBaseline
from app.models import Annotation, StripMethod, StripOutcome, TranslationRecord
from app.services.bleu import (
    CSV_COLUMNS,
    condition_report,
    corpus_bleu,
    report_csv_rows,
    report_from_json,
    report_json,
)

MULTI_BLEU = Path(__file__).parent / "oracle" / "multi-bleu.perl"


class TestCorpusBleu:
    """Scores pinned against multi-bleu.perl output on the same toy corpora"""

    def test_partial_match_with_brevity_penalty(self):
        score = corpus_bleu(
            ["the cat sat on a mat", "there is cat here"],
            ["the cat sat on the mat", "there is a cat here"],
        )
        # BLEU = 42.10, 90.0/62.5/33.3/25.0 (BP=0.905, ratio=0.909, hyp_len=10, ref_len=11)
        assert score.bleu == pytest.approx(42.10, abs=0.005)
        assert score.precisions == pytest.approx([9 / 10, 5 / 8, 2 / 6, 1 / 4])
        assert score.brevity_penalty == pytest.approx(math.exp(1 - 11 / 10))
        assert (score.hyp_len, score.ref_len) == (10, 11)
        assert score.length_ratio == pytest.approx(10 / 11)

    def test_short_hypothesis(self):
        score = corpus_bleu(["a b c d"], ["a b c d e f g h"])
        # BLEU = 36.79, 100.0/100.0/100.0/100.0 (BP=0.368, ratio=0.500)
        assert score.bleu == pytest.approx(36.79, abs=0.005)
        assert score.brevity_penalty == pytest.approx(math.exp(-1))

    def test_no_overlap_is_zero(self):
        score = corpus_bleu(["x y z"], ["a b c"])
        assert score.bleu == 0.0
        assert score.precisions == [0.0, 0.0, 0.0, 0.0]
        assert score.brevity_penalty == 1.0

    def test_zero_fourgram_precision_is_zero(self):
        # no smoothing: one empty order zeroes the score
        score = corpus_bleu(["a b c"], ["a b c"])
        assert score.precisions[3] == 0.0
        assert score.bleu == 0.0

    def test_identity_is_100(self):
        corpus = ["i love you so much", "she said that she is very happy today"]
        score = corpus_bleu(corpus, corpus)
        assert score.bleu == pytest.approx(100.0)
        assert score.brevity_penalty == 1.0

    def test_case_sensitivity_and_lowercase(self):
        hyp, ref = ["the cat sat on the mat today"], ["The Cat sat on the mat today"]
        # BLEU = 61.48 (cased), 100.00 with -lc
        assert corpus_bleu(hyp, ref).bleu == pytest.approx(61.48, abs=0.005)
        assert corpus_bleu(hyp, ref, lowercase=True).bleu == pytest.approx(100.0)

    def test_empty_hypotheses_score_zero(self):
        score = corpus_bleu(["", ""], ["a b c d", "e f"])
        assert score.bleu == 0.0
        assert score.brevity_penalty == 0.0
        assert score.hyp_len == 0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            corpus_bleu(["a"], ["a", "b"])

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            corpus_bleu([], [])

    def test_empty_references(self):
        with pytest.raises(EmptyCorpus):
            corpus_bleu(["a b"], [""])

    def test_unknown_tokenizer(self):
        with pytest.raises(DataError, match="tokenizer"):
            corpus_bleu(["a"], ["a"], tokenize="moses")

    def test_sentence_order_does_not_matter(self):
        hypotheses = ["the cat sat on a mat", "there is cat here", "a dog barked loudly at night"]
        references = ["the cat sat on the mat", "there is a cat here", "the dog barked loudly at night"]
        expected = corpus_bleu(hypotheses, references)
        pairs = list(zip(hypotheses, references))
        rng = random.Random(7)
        for _ in range(5):
            rng.shuffle(pairs)
            shuffled = corpus_bleu([h for h, _ in pairs], [r for _, r in pairs])
            assert shuffled.bleu == pytest.approx(expected.bleu)
            assert shuffled.precisions == pytest.approx(expected.precisions)

    def test_truncating_hypotheses_never_raises_brevity_penalty(self):
        references = ["a b c d e f", "g h i j", "k l m n o"]
        hypotheses = ["a b c d e f g h", "g h i j k", "k l m n o p"]
        previous = corpus_bleu(hypotheses, references).brevity_penalty
        while any(hypotheses):
            hypotheses = [" ".join(h.split()[:-1]) for h in hypotheses]
            penalty = corpus_bleu(hypotheses, references).brevity_penalty
            assert penalty <= previous
            previous = penalty
        assert previous == 0.0

    def test_raw_mode_tokenizer(self):
        hyp, ref = ["I love you, really."], ["I love you , really ."]
        assert corpus_bleu(hyp, ref).bleu < 100.0
        assert corpus_bleu(hyp, ref, tokenize="13a").bleu == pytest.approx(100.0)


@pytest.mark.skipif(shutil.which("perl") is None, reason="perl is not installed")
class TestMultiBleuOracle:
    """corpus_bleu agrees with multi-bleu.perl on random corpora"""

    @staticmethod
    def oracle(hypotheses, references, tmp_path):
        ref_path = tmp_path / "ref.txt"
        ref_path.write_text("\n".join(references) + "\n", encoding="utf-8")
        result = subprocess.run(
            ["perl", str(MULTI_BLEU), str(ref_path)],
            input="\n".join(hypotheses) + "\n",
            capture_output=True,
            text=True,
            check=True,
        )
        return float(re.match(r"BLEU = ([0-9.]+)", result.stdout).group(1))

    @staticmethod
    def random_corpus(rng):
        vocabulary = [f"w{i}" for i in range(rng.randint(3, 20))]
        size = rng.randint(1, 50)

        def sentence():
            return " ".join(rng.choice(vocabulary) for _ in range(rng.randint(1, 15)))

        references = [sentence() for _ in range(size)]
        hypotheses = []
        for reference in references:
            words = reference.split()
            if rng.random() < 0.5:
                hypotheses.append(sentence())
            else:
                # a noisy, sometimes shortened copy keeps precisions away from zero
                cut = rng.randint(1, len(words))
                hypotheses.append(" ".join(w if rng.random() < 0.8 else rng.choice(vocabulary) for w in words[:cut]))
        return hypotheses, references

    def test_twenty_random_corpora(self, tmp_path):
        rng = random.Random(2019)
        for _ in range(20):
            hypotheses, references = self.random_corpus(rng)
            expected = self.oracle(hypotheses, references, tmp_path)
            assert corpus_bleu(hypotheses, references).bleu == pytest.approx(expected, abs=0.01)


def make_records(label, hypotheses, method=StripMethod.EXACT_PATTERN, start=0):
    records = []
    for index, text in enumerate(hypotheses, start=start):
        if label == "baseline":
            outcome = StripOutcome(stripped=text, method=StripMethod.NOT_APPLICABLE)
        elif method == StripMethod.EXACT_PATTERN:
            outcome = StripOutcome(stripped=text, method=method, matched_pattern="P:")
        else:
            outcome = StripOutcome(stripped=text, method=method)
        records.append(TranslationRecord(
            index=index,
            source=f"s{index}",
            condition_label=label,
            wrapped=f"P: s{index}",
            raw_translation=text,
            strip=outcome,
            backend_name="fixture",
            from_cache=False,
            timestamp=0,
        ))
    return records


class TestConditionReport:
    """Test cases for per-condition BLEU reports"""

    def setup_method(self):
        self.references = ["the cat sat on the mat", "there is a cat here"]
        self.records = {
            "she+them": make_records("she+them", self.references),
            "baseline": make_records("baseline", ["the cat sat on a mat", "there is cat here"]),
            "he": make_records("he", ["a cat sat on a mat", "there is cat"]),
        }

    def test_rows_in_grid_order_with_deltas(self):
        report = condition_report(self.records, self.references)
        assert [row.condition for row in report.rows] == ["baseline", "he", "she+them"]
        baseline = report.row("baseline")
        assert baseline.delta_vs_baseline == 0.0
        assert baseline.strip_rate is None
        she = report.row("she+them")
        assert she.score.bleu == pytest.approx(100.0)
        assert she.delta_vs_baseline == pytest.approx(100.0 - baseline.score.bleu)
        assert she.strip_rate == 1.0

    def test_missing_baseline(self):
        del self.records["baseline"]
        with pytest.raises(MissingBaseline):
            condition_report(self.records, self.references)

    def test_mismatch_names_condition(self):
        self.records["he"] = self.records["he"][:1]
        with pytest.raises(LengthMismatch, match="condition he"):
            condition_report(self.records, self.references)

    def test_unstripped_policy(self):
        self.records["he"] = make_records("he", self.references[:1], method=StripMethod.EXACT_PATTERN) + \
            make_records("he", ["She told them there is a cat here"], method=StripMethod.UNSTRIPPED, start=1)
        kept = condition_report(self.records, self.references).row("he")
        dropped = condition_report(self.records, self.references, drop_unstripped=True).row("he")
        assert kept.unstripped == dropped.unstripped == 1
        assert kept.strip_rate == 0.5
        assert dropped.score.ref_len == 6
        assert kept.bleu_other_policy == pytest.approx(dropped.score.bleu)
        assert dropped.bleu_other_policy == pytest.approx(kept.score.bleu)

    def test_condition_with_every_translation_unstripped(self):
        self.records["he"] = make_records("he", ["He said: the cat", "He said: a cat"],
                                          method=StripMethod.UNSTRIPPED)
        report = condition_report(self.records, self.references, drop_unstripped=True)
        he = report.row("he")
        assert he.score is None
        assert he.delta_vs_baseline is None
        assert he.unstripped == 2
        assert he.strip_rate == 0.0
        assert he.bleu_other_policy is not None
        assert report.row("she+them").score.bleu == pytest.approx(100.0)

        csv_row = report_csv_rows(report)[2]
        assert csv_row == ["he"] + [""] * (len(CSV_COLUMNS) - 1)
        data = report_json(report)
        assert data["rows"][1]["bleu"] is None
        assert data["rows"][1]["unstripped"] == 2
        assert report_from_json(data).row("he").score is None

    def test_metadata_records_scoring_choices(self):
        report = condition_report(self.records, self.references, lowercase=True, metadata={"backend": "fixture"})
        assert report.metadata == {
            "backend": "fixture", "lowercase": True, "tokenizer": "none", "unstripped_policy": "keep",
        }

    def test_csv_rows(self):
        rows = report_csv_rows(condition_report(self.records, self.references))
        assert rows[0] == CSV_COLUMNS
        assert rows[1][0] == "baseline"
        assert rows[1][1] == "42.10"
        assert rows[3][1] == "100.00"

    def test_json_round_trip_keeps_rows_and_annotations(self):
        annotation = Annotation(label="prior system", values={"bleu": 19.2}, note="reported score")
        report = condition_report(self.records, self.references, annotations=[annotation])
        restored = report_from_json(report_json(report))
        assert [row.condition for row in restored.rows] == ["baseline", "he", "she+them"]
        assert restored.row("she+them").score.bleu == pytest.approx(100.0)
        assert restored.annotations == [annotation]
