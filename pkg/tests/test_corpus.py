import math

import numpy as np
import pytest

from burstlm import corpus

from oracles import two_pass_moments


def make_docs(*texts):
    return [corpus.Document(tokens=corpus.tokenize(t)) for t in texts]


class TestTokenize:
    def test_uppercases_and_splits_on_whitespace(self):
        assert corpus.tokenize("The the THE") == ["THE", "THE", "THE"]
        assert corpus.tokenize("a\tb  c\n") == ["A", "B", "C"]

    def test_empty_line(self):
        assert corpus.tokenize("   ") == []


class TestSegmentation:
    def test_blank_line_boundaries(self):
        lines = ["one two three", "", "four five", "six", "", ""]
        result = corpus.segment_corpus(lines, min_doc_length=1)
        assert [d.tokens for d in result.documents] == [
            ["ONE", "TWO", "THREE"],
            ["FOUR", "FIVE", "SIX"],
        ]
        assert result.n_kept == 2
        assert result.n_dropped == 0

    def test_marker_boundaries(self):
        lines = ["a b", "<DOC>", "c d e", "<DOC>", "f"]
        result = corpus.segment_corpus(lines, marker="<DOC>", min_doc_length=1)
        assert result.n_kept == 3
        assert result.documents[2].tokens == ["F"]

    def test_short_documents_dropped(self):
        lines = ["one two three four five", "", "too short"]
        result = corpus.segment_corpus(lines, min_doc_length=3)
        assert result.n_kept == 1
        assert result.n_dropped == 1

    def test_order_preserved(self):
        lines = ["b", "", "a", "", "c"]
        result = corpus.segment_corpus(lines, min_doc_length=1)
        assert [d.tokens[0] for d in result.documents] == ["B", "A", "C"]

    def test_everything_filtered_raises(self):
        with pytest.raises(corpus.CorpusError, match="no documents"):
            corpus.segment_corpus(["a b", "", "c"], min_doc_length=50)

    def test_empty_input_raises(self):
        with pytest.raises(corpus.CorpusError):
            corpus.segment_corpus([], min_doc_length=1)


class TestVocabulary:
    def test_frequency_order_with_alphabetical_ties(self):
        docs = make_docs("b b b a a c c z")
        vocab = corpus.build_vocabulary(docs)
        # b first (3), then a and c tied at 2 alphabetically, then z, then unk
        assert vocab.words == ["B", "A", "C", "Z", corpus.UNK_TOKEN]

    def test_unknown_words_map_to_unk(self):
        vocab = corpus.Vocabulary(["A", "B"])
        assert vocab.id_of("MISSING") == vocab.unk_id
        assert vocab.id_of("A") == 0

    def test_max_size_cap_and_min_count(self):
        docs = make_docs("a a a b b c")
        capped = corpus.build_vocabulary(docs, max_size=2)
        assert len(capped) == 3  # unk on top of the cap
        assert "C" not in capped
        filtered = corpus.build_vocabulary(docs, min_count=2)
        assert "C" not in filtered
        assert "B" in filtered

    def test_encode(self):
        vocab = corpus.Vocabulary(["A", "B"])
        assert vocab.encode(["A", "X", "B"]) == [0, vocab.unk_id, 1]

    def test_save_load_round_trip(self, tmp_path):
        vocab = corpus.Vocabulary(["HELLO", "WORLD"])
        path = tmp_path / "vocab.txt"
        vocab.save(str(path))
        loaded = corpus.Vocabulary.load(str(path))
        assert loaded.words == vocab.words
        assert loaded.unk_id == vocab.unk_id

    def test_duplicate_words_rejected(self):
        with pytest.raises(corpus.CorpusError):
            corpus.Vocabulary(["A", "A"])


class TestCounting:
    def test_per_document_sums_match_length(self):
        docs = make_docs("a b a c a", "b b c")
        vocab = corpus.build_vocabulary(docs)
        counts = corpus.count_events(docs, vocab)
        for doc in counts.documents:
            assert sum(doc.unigrams.values()) == doc.length
            assert sum(doc.bigrams.values()) == doc.length - 1

    def test_bigrams_do_not_cross_documents(self):
        docs = make_docs("a b", "c d")
        vocab = corpus.build_vocabulary(docs)
        counts = corpus.count_events(docs, vocab)
        b = vocab.id_of("B")
        c = vocab.id_of("C")
        assert (b, c) not in counts.bigram_totals

    def test_totals_are_sums_of_documents(self, toy_counts):
        for w, total in toy_counts.unigram_totals.items():
            assert total == sum(d.unigrams.get(w, 0) for d in toy_counts.documents)
        assert toy_counts.total_tokens == sum(toy_counts.doc_lengths)

    def test_inverted_index_agrees(self, toy_counts):
        w = next(iter(toy_counts.unigram_totals))
        per_doc = toy_counts.unigram_doc_counts(w)
        for di, doc in enumerate(toy_counts.documents):
            assert per_doc.get(di, 0) == doc.unigrams.get(w, 0)


class TestNormalization:
    def test_scaled_values(self):
        samples = corpus.normalized_samples({0: 3}, [150, 200], n_tokens=1000)
        assert samples.values[0] == 3 * 1000 / 150
        assert samples.values[1] == 0.0

    def test_weighted_mean_equals_token_share(self):
        # sum_d (L_d/T) * (c_d N / L_d) telescopes to N * C / T
        doc_counts = {0: 3, 2: 5}
        lengths = [150, 200, 120]
        samples = corpus.normalized_samples(doc_counts, lengths, n_tokens=1000)
        expected = 1000 * (3 + 5) / sum(lengths)
        assert math.isclose(samples.mean, expected, rel_tol=1e-12)

    def test_histogram_sums_to_documents_and_rounds_half_up(self):
        # value 2.5 must land in bucket 3, not banker's 2
        samples = corpus.normalized_samples({0: 5}, [100, 100, 100], n_tokens=50)
        assert samples.values[0] == 2.5
        assert samples.histogram == {0: 2, 3: 1}
        assert sum(samples.histogram.values()) == 3

    def test_variance_none_for_single_document(self):
        samples = corpus.normalized_samples({0: 2}, [100], n_tokens=100)
        assert samples.variance is None

    def test_sparse_moments_match_dense(self, toy_counts):
        lengths = toy_counts.doc_lengths
        T = toy_counts.total_tokens
        for w in list(toy_counts.unigram_totals)[:25]:
            doc_counts = toy_counts.unigram_doc_counts(w)
            mean_s, var_s = corpus.event_moments(doc_counts, lengths, T, 1000)
            mean_d, var_d = two_pass_moments(doc_counts, lengths, 1000)
            np.testing.assert_allclose(mean_s, mean_d, rtol=1e-12)
            np.testing.assert_allclose(var_s, var_d, rtol=1e-9, atol=1e-12)

    def test_moments_agree_with_normalized_samples(self, toy_counts):
        w = max(toy_counts.unigram_totals, key=toy_counts.unigram_totals.get)
        doc_counts = toy_counts.unigram_doc_counts(w)
        samples = corpus.normalized_samples(doc_counts, toy_counts.doc_lengths, 500)
        mean, var = corpus.event_moments(
            doc_counts, toy_counts.doc_lengths, toy_counts.total_tokens, 500
        )
        np.testing.assert_allclose(mean, samples.mean, rtol=1e-12)
        np.testing.assert_allclose(var, samples.variance, rtol=1e-9)


class TestSerialization:
    def test_counts_round_trip(self, toy_counts, tmp_path):
        path = tmp_path / "counts.json"
        corpus.save_counts(toy_counts, str(path))
        loaded = corpus.load_counts(str(path))
        assert loaded.vocabulary.words == toy_counts.vocabulary.words
        assert loaded.unigram_totals == toy_counts.unigram_totals
        assert loaded.bigram_totals == toy_counts.bigram_totals
        assert loaded.total_tokens == toy_counts.total_tokens
        assert [d.length for d in loaded.documents] == toy_counts.doc_lengths

    def test_counts_csv_schema(self, toy_counts, tmp_path):
        import csv

        path = tmp_path / "counts.csv"
        rows = corpus.export_counts_csv(toy_counts, str(path), n_tokens=1000)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            assert header == ["event", "doc_index", "count", "doc_length", "scaled_count"]
            body = list(reader)
        assert len(body) == rows > 0
        event, di, c, length, scaled = body[0]
        assert float(scaled) == pytest.approx(int(c) * 1000 / int(length), rel=1e-12)

    def test_corpus_write_round_trip(self, tmp_path):
        docs = make_docs("a b c d e", "f g h i j")
        path = tmp_path / "corpus.txt"
        corpus.write_corpus(docs, str(path), tokens_per_line=2)
        with open(path) as fh:
            result = corpus.segment_corpus(fh, min_doc_length=1)
        assert [d.tokens for d in result.documents] == [d.tokens for d in docs]

    def test_corpus_write_marker_round_trip(self, tmp_path):
        docs = make_docs("a b c", "d e f")
        path = tmp_path / "corpus.txt"
        corpus.write_corpus(docs, str(path), marker="<DOC>")
        with open(path) as fh:
            result = corpus.segment_corpus(fh, marker="<DOC>", min_doc_length=1)
        assert [d.tokens for d in result.documents] == [d.tokens for d in docs]

    def test_summary_line_format(self, toy_counts):
        line = corpus.summary(toy_counts)
        assert line.startswith("docs=")
        assert " tokens=" in line and " types=" in line
