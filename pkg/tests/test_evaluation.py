import itertools
import math
import os

import numpy as np
import pytest

from stylemelody.evaluation import (
    EvalReport,
    METRIC_COLUMNS,
    compute_metrics,
    controllability_sweep,
    emit_report,
    ngram_repetitions,
    self_bleu,
    style_mse,
)
from stylemelody.notes import MelodySequence


def _melody(pitches, durations=None, rests=None):
    n = len(pitches)
    durations = durations or [1.0] * n
    rests = rests or [0.0] * n
    return MelodySequence.from_triplets(list(zip(pitches, durations, rests)))


# -- corpus metrics ------------------------------------------------------------


def test_constant_melody_metrics():
    record = compute_metrics([_melody([60] * 20)])
    assert record.midi_span == 0
    assert record.unique_midi == 1
    assert record.restless_notes == 20
    assert record.avg_rest == 0
    assert record.song_length == 20.0


def test_restless_and_rest_metrics():
    record = compute_metrics([_melody([60, 62], rests=[0.5, 1.0])])
    assert record.restless_notes == 0
    assert record.avg_rest == pytest.approx(0.75)
    record2 = compute_metrics([_melody([60] * 20, rests=[0.0] * 20)])
    assert record2.restless_notes == 20 and record2.avg_rest == 0.0


def test_ngram_repetition_strategies():
    assert ngram_repetitions([60, 62, 60, 62, 60], 2, "positions") == 2
    assert ngram_repetitions([60, 62, 60, 62, 60], 2, "distinct") == 2
    assert ngram_repetitions([60, 60, 60], 2, "positions") == 1
    assert ngram_repetitions([60, 60, 60], 2, "distinct") == 1
    assert ngram_repetitions([1, 2, 3], 2, "positions") == 0
    with pytest.raises(ValueError):
        ngram_repetitions([1], 2, "bogus")


def _brute_force_metrics(melodies):
    # independent per-sequence reference: explicit loops only
    rows = []
    for m in melodies:
        p = [n.pitch for n in m.notes]
        reps2 = 0
        for i in range(len(p) - 1):
            for j in range(i):
                if p[j : j + 2] == p[i : i + 2]:
                    reps2 += 1
                    break
        reps3 = 0
        for i in range(len(p) - 2):
            for j in range(i):
                if p[j : j + 3] == p[i : i + 3]:
                    reps3 += 1
                    break
        rows.append(
            [
                max(p) - min(p),
                reps2,
                reps3,
                len(set(p)),
                sum(1 for n in m.notes if n.rest == 0),
                sum(n.rest for n in m.notes) / len(m.notes),
                sum(n.duration + n.rest for n in m.notes),
            ]
        )
    return [sum(col) / len(col) for col in zip(*rows)]


def test_metrics_match_brute_force_oracle():
    rng = np.random.default_rng(4)
    melodies = []
    for _ in range(12):
        t = int(rng.integers(4, 15))
        pitches = rng.integers(55, 70, size=t).tolist()
        durations = rng.choice([0.5, 1.0, 2.0], size=t).tolist()
        rests = rng.choice([0.0, 0.0, 0.5, 1.0], size=t).tolist()
        melodies.append(_melody(pitches, durations, rests))
    record = compute_metrics(melodies)
    oracle = _brute_force_metrics(melodies)
    got = [
        record.midi_span, record.two_midi_reps, record.three_midi_reps,
        record.unique_midi, record.restless_notes, record.avg_rest, record.song_length,
    ]
    assert got == pytest.approx(oracle, abs=1e-12)


def test_metrics_empty_corpus():
    with pytest.raises(ValueError):
        compute_metrics([])


DATASET_ENV = "STYLEMELODY_DATASET"


@pytest.mark.skipif(DATASET_ENV not in os.environ, reason="published dataset not mounted")
def test_ground_truth_row_reproduction():
    """With the published corpus mounted, the ground-truth test split must
    reproduce the reference metric row within +-0.5 per column."""
    from stylemelody.corpus import filter_samples, ingest_corpus, split_samples

    samples = ingest_corpus(os.environ[DATASET_ENV]).samples
    assert len(samples) == 13251
    kept = filter_samples(samples)
    assert len(kept) == 10768
    split = split_samples(kept, (8, 1, 1), seed=0)
    record = compute_metrics([s.melody for s in split.test])
    expected = {
        "midi_span": 10.38, "two_midi_reps": 7.33, "three_midi_reps": 3.72,
        "unique_midi": 5.91, "restless_notes": 15.82, "avg_rest": 0.54,
        "song_length": 37.39,
    }
    for key, value in expected.items():
        assert getattr(record, key) == pytest.approx(value, abs=0.5), key


# -- style MSE -----------------------------------------------------------------


def test_attribute_histograms_count_values():
    from stylemelody.evaluation import attribute_histograms

    corpus = [_melody([60, 60, 62], durations=[1.0, 0.5, 1.0], rests=[0.0, 0.0, 0.5])]
    hist = attribute_histograms(corpus)
    assert hist["pitch"] == {60.0: 2, 62.0: 1}
    assert hist["duration"] == {0.5: 1, 1.0: 2}
    assert hist["rest"] == {0.0: 2, 0.5: 1}
    # toy corpus audit: duration mass at <= 1 quarter, rest mass at 0
    from stylemelody.corpus import make_toy_corpus

    toy = attribute_histograms([s.melody for s in make_toy_corpus(50, seed=2)])
    short = sum(c for v, c in toy["duration"].items() if v <= 1.0)
    assert short > 0.5 * sum(toy["duration"].values())
    assert toy["rest"][0.0] > 0.5 * sum(toy["rest"].values())


def test_style_mse_identity():
    corpus = [_melody([60, 64, 67]), _melody([55, 57, 59])]
    mses = style_mse(corpus, corpus)
    assert all(v == 0.0 for v in mses.values())


def test_style_mse_isolated_average_shift():
    a = _melody([60, 62, 64])
    b = _melody([62, 64, 66])  # +2 pitch average, same range and variance
    mses = style_mse([b], [a])
    assert mses["pitch.avg"] == pytest.approx(4.0)
    for key, value in mses.items():
        if key != "pitch.avg":
            assert value == 0.0


def test_style_mse_requires_alignment():
    with pytest.raises(ValueError):
        style_mse([_melody([60, 62])], [])


# -- Self-BLEU -----------------------------------------------------------------


def _oracle_bleu(candidate, references, max_n):
    # exhaustive reference implementation: explicit n-gram enumeration
    log_precisions = []
    for n in range(1, max_n + 1):
        cand_grams = [tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1)]
        matches = 0
        for gram in set(cand_grams):
            cand_count = sum(1 for g in cand_grams if g == gram)
            best_ref = 0
            for ref in references:
                ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
                best_ref = max(best_ref, sum(1 for g in ref_grams if g == gram))
            matches += min(cand_count, best_ref)
        log_precisions.append(matches / len(cand_grams))
    if log_precisions[0] == 0:
        return 0.0
    body = sum(math.log(p) if p > 0 else math.log(1e-9) for p in log_precisions) / max_n
    c = len(candidate)
    r = min((len(ref) for ref in references), key=lambda L: (abs(L - c), L))
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return bp * math.exp(body)


def test_self_bleu_identical_corpus():
    corpus = [[1, 2, 3, 4, 5]] * 4
    scores = self_bleu(corpus, max_n=4)
    for n, score in scores.items():
        assert score == pytest.approx(1.0), n


def test_self_bleu_disjoint_corpus():
    scores = self_bleu([[1, 2, 3], [4, 5, 6], [7, 8, 9]], max_n=3)
    for score in scores.values():
        assert score == 0.0


def test_self_bleu_matches_oracle_exactly():
    corpus = [[1, 2, 3, 4, 5], [1, 2, 3, 4, 6], [9, 1, 2, 3, 4]]
    scores = self_bleu(corpus, max_n=4)
    for n in range(1, 5):
        expected = sum(
            _oracle_bleu(corpus[i], corpus[:i] + corpus[i + 1 :], n) for i in range(3)
        ) / 3
        assert scores[n] == pytest.approx(expected, abs=1e-12), n


def test_self_bleu_permutation_invariant():
    corpus = [[1, 2, 3], [1, 2, 4], [5, 1, 2], [2, 2, 2]]
    base = self_bleu(corpus)
    for perm in itertools.islice(itertools.permutations(corpus), 4):
        permuted = self_bleu(list(perm))
        for n in base:
            assert permuted[n] == pytest.approx(base[n], abs=1e-12)


def test_self_bleu_needs_two():
    with pytest.raises(ValueError):
        self_bleu([[1, 2]])


# -- controllability sweep -------------------------------------------------------


def _responsive_generator(lyr, controls, seed):
    # pitch mean tracks the pitch.avg control linearly; rng adds jitter
    rng = np.random.default_rng(seed)
    center = 50 + 25 * controls["pitch.avg"]
    pitches = np.clip(np.round(rng.normal(center, 1.0, size=8)), 36, 84).astype(int)
    return _melody(pitches.tolist())


def test_sweep_detects_responsive_model():
    result = controllability_sweep(_responsive_generator, ["la"] * 6, "pitch.avg", seed=3)
    assert result.spearman == pytest.approx(1.0)
    means = [s["mean"] for s in result.summaries]
    assert means == sorted(means)
    assert all(s["count"] == 6 * 8 for s in result.summaries)


def test_sweep_null_baseline_uncorrelated():
    def unconditioned(lyr, controls, seed):
        rng = np.random.default_rng(seed % 7)
        return _melody(rng.integers(55, 65, size=8).tolist())

    result = controllability_sweep(unconditioned, ["la"] * 4, "pitch.avg", seed=0)
    assert result.spearman is None or abs(result.spearman) < 1.0


def test_sweep_degenerate_single_candidate():
    result = controllability_sweep(
        _responsive_generator, ["la"] * 3, "pitch.avg", candidates=(0.5,), seed=1
    )
    assert result.spearman is None
    assert len(result.summaries) == 1


def test_sweep_validation():
    with pytest.raises(KeyError):
        controllability_sweep(_responsive_generator, ["la"], "pitch.mean")
    with pytest.raises(ValueError):
        controllability_sweep(_responsive_generator, ["la"], "pitch.avg", candidates=(1.5,))


def test_sweep_deterministic():
    a = controllability_sweep(_responsive_generator, ["la"] * 3, "pitch.avg", seed=9)
    b = controllability_sweep(_responsive_generator, ["la"] * 3, "pitch.avg", seed=9)
    assert a.summaries == b.summaries


# -- report emission ---------------------------------------------------------------


def test_emit_eval_report_deterministic(tmp_path):
    report = EvalReport(
        metrics=compute_metrics([_melody([60, 62, 64])]),
        style_mse={k: 0.0 for k in style_mse([_melody([60, 62])], [_melody([60, 62])])},
        self_bleu={1: 0.5, 2: 0.25},
        metadata={"corpus": "unit-test"},
    )
    first = emit_report(report, tmp_path / "a")
    second = emit_report(report, tmp_path / "b")
    for p1, p2 in zip(first, second):
        assert p1.read_bytes() == p2.read_bytes()


def test_emit_eval_report_column_names(tmp_path):
    report = EvalReport(metrics=compute_metrics([_melody([60, 62, 64])]))
    jsonl, csv_path = emit_report(report, tmp_path)
    text = jsonl.read_text(encoding="utf-8")
    for column in METRIC_COLUMNS.values():
        assert column in text
    header = csv_path.read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",")[0] == "MIDI Span"


def test_emit_sweep_report(tmp_path):
    result = controllability_sweep(_responsive_generator, ["la"] * 2, "pitch.avg", seed=2)
    jsonl, csv_path = emit_report(result, tmp_path)
    lines = jsonl.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + len(result.candidates)
    assert "q1" in lines[1]
    rows = csv_path.read_text(encoding="utf-8").splitlines()
    assert len(rows) == 1 + len(result.candidates)
