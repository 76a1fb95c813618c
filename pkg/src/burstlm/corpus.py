"""Corpus ingestion: segmentation into documents, vocabulary building, event counting.

A corpus is a sequence of documents; every per-document count is later
normalized to a common reference length, so document boundaries and exact
lengths are the ground truth everything downstream depends on.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

UNK_TOKEN = "<UNK>"

DEFAULT_MIN_DOC_LENGTH = 100


class CorpusError(Exception):
    """Raised when input text cannot be turned into a usable corpus."""


def tokenize(line: str) -> list[str]:
    """Split a line on whitespace and uppercase each token."""
    return line.upper().split()


@dataclass
class Document:
    """One document: an ordered list of tokens."""

    tokens: list[str]

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass
class SegmentResult:
    documents: list[Document]
    n_kept: int
    n_dropped: int


def segment_corpus(
    lines: Iterable[str],
    marker: str | None = None,
    min_doc_length: int = DEFAULT_MIN_DOC_LENGTH,
) -> SegmentResult:
    """Split a stream of text lines into documents.

    Boundaries are blank lines by default, or lines exactly equal to
    ``marker`` (after stripping) when one is given.  Documents shorter than
    ``min_doc_length`` tokens are dropped; raises CorpusError if nothing
    survives.
    """
    documents: list[Document] = []
    dropped = 0
    current: list[str] = []

    def flush() -> None:
        nonlocal dropped
        if not current:
            return
        if len(current) >= min_doc_length:
            documents.append(Document(tokens=list(current)))
        else:
            dropped += 1
        current.clear()

    for line in lines:
        stripped = line.strip()
        is_boundary = (stripped == marker) if marker is not None else (stripped == "")
        if is_boundary:
            flush()
        else:
            current.extend(tokenize(line))
    flush()

    if not documents:
        raise CorpusError(
            "no documents: every candidate was empty or shorter than "
            f"min_doc_length={min_doc_length}"
        )
    return SegmentResult(documents=documents, n_kept=len(documents), n_dropped=dropped)


class Vocabulary:
    """Fixed word list with id lookup; unknown words map to the <UNK> id."""

    def __init__(self, words: Sequence[str], unk_token: str = UNK_TOKEN):
        self.words: list[str] = list(words)
        if unk_token not in self.words:
            self.words.append(unk_token)
        self.unk_token = unk_token
        self._ids: dict[str, int] = {w: i for i, w in enumerate(self.words)}
        if len(self._ids) != len(self.words):
            raise CorpusError("vocabulary contains duplicate words")
        self.unk_id: int = self._ids[unk_token]

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def __getitem__(self, word_id: int) -> str:
        return self.words[word_id]

    def id_of(self, word: str) -> int:
        """Return the id for ``word``, or the <UNK> id if out of vocabulary."""
        return self._ids.get(word, self.unk_id)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        unk = self.unk_id
        ids = self._ids
        return [ids.get(t, unk) for t in tokens]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#unk {self.unk_token}\n")
            for word in self.words:
                fh.write(word + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if not header.startswith("#unk "):
                raise CorpusError(f"bad vocabulary header: {header!r}")
            unk_token = header[len("#unk "):]
            words = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(words, unk_token=unk_token)


def build_vocabulary(
    documents: Sequence[Document],
    max_size: int | None = None,
    min_count: int = 1,
) -> Vocabulary:
    """Collect word types, most frequent first (ties broken alphabetically).

    ``max_size`` caps the number of kept types; <UNK> is added on top of the
    cap and absorbs everything cut off or below ``min_count``.
    """
    freq: Counter[str] = Counter()
    for doc in documents:
        freq.update(doc.tokens)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [w for w, c in ranked if c >= min_count]
    if max_size is not None:
        kept = kept[:max_size]
    return Vocabulary(kept)


@dataclass
class DocumentCounts:
    """Sparse event counts for one document."""

    length: int
    unigrams: dict[int, int]
    bigrams: dict[tuple[int, int], int]


@dataclass
class CorpusCounts:
    """Per-document and corpus-total event counts over a fixed vocabulary.

    Bigram events never cross document boundaries: a document of L tokens
    contributes L unigram tokens and L - 1 bigram tokens.
    """

    vocabulary: Vocabulary
    documents: list[DocumentCounts]
    unigram_totals: dict[int, int] = field(default_factory=dict)
    bigram_totals: dict[tuple[int, int], int] = field(default_factory=dict)
    total_tokens: int = 0

    # inverted indexes (event -> {doc index: count}), built on first use
    _by_unigram: dict[int, dict[int, int]] | None = field(
        default=None, repr=False, compare=False
    )
    _by_bigram: dict[tuple[int, int], dict[int, int]] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def n_documents(self) -> int:
        return len(self.documents)

    @property
    def doc_lengths(self) -> list[int]:
        return [d.length for d in self.documents]

    def unigram_doc_counts(self, word_id: int) -> dict[int, int]:
        """Map doc index -> count for one word (documents with zero omitted)."""
        if self._by_unigram is None:
            index: dict[int, dict[int, int]] = {}
            for di, doc in enumerate(self.documents):
                for w, c in doc.unigrams.items():
                    index.setdefault(w, {})[di] = c
            self._by_unigram = index
        return self._by_unigram.get(word_id, {})

    def bigram_doc_counts(self, pair: tuple[int, int]) -> dict[int, int]:
        if self._by_bigram is None:
            index: dict[tuple[int, int], dict[int, int]] = {}
            for di, doc in enumerate(self.documents):
                for vw, c in doc.bigrams.items():
                    index.setdefault(vw, {})[di] = c
            self._by_bigram = index
        return self._by_bigram.get(pair, {})


def count_events(documents: Sequence[Document], vocabulary: Vocabulary) -> CorpusCounts:
    """Count unigram and bigram occurrences per document and in total."""
    per_doc: list[DocumentCounts] = []
    uni_totals: Counter[int] = Counter()
    bi_totals: Counter[tuple[int, int]] = Counter()
    total_tokens = 0

    for doc in documents:
        ids = vocabulary.encode(doc.tokens)
        uni: Counter[int] = Counter(ids)
        bi: Counter[tuple[int, int]] = Counter(zip(ids, ids[1:]))
        per_doc.append(DocumentCounts(length=len(ids), unigrams=dict(uni), bigrams=dict(bi)))
        uni_totals.update(uni)
        bi_totals.update(bi)
        total_tokens += len(ids)

    return CorpusCounts(
        vocabulary=vocabulary,
        documents=per_doc,
        unigram_totals=dict(uni_totals),
        bigram_totals=dict(bi_totals),
        total_tokens=total_tokens,
    )


@dataclass
class NormalizedSamples:
    """Counts of one event rescaled to a common document length.

    ``values`` holds one unrounded sample per document, count * N / L_d; the
    mean and variance are length-weighted (weight L_d / sum L).  ``histogram``
    buckets the samples rounded half-up and always sums to the number of
    documents, zero bucket included.
    """

    event: str
    n_tokens: int
    values: np.ndarray
    mean: float
    variance: float | None
    histogram: dict[int, int]


def normalized_samples(
    doc_counts: Mapping[int, int],
    doc_lengths: Sequence[int],
    n_tokens: int,
    event: str = "",
) -> NormalizedSamples:
    """Rescale per-document counts of one event to a reference length ``n_tokens``."""
    if n_tokens < 1:
        raise ValueError("n_tokens must be >= 1")
    lengths = np.asarray(doc_lengths, dtype=np.float64)
    if lengths.size == 0:
        raise CorpusError("no documents to normalize over")
    counts = np.zeros(lengths.size, dtype=np.float64)
    for di, c in doc_counts.items():
        counts[di] = c
    values = counts * (float(n_tokens) / lengths)

    weights = lengths / lengths.sum()
    mean = float(weights @ values)
    variance = float(weights @ (values - mean) ** 2) if lengths.size > 1 else None

    rounded = np.floor(values + 0.5).astype(np.int64)  # half-up, not banker's
    histogram = dict(sorted(Counter(rounded.tolist()).items()))

    return NormalizedSamples(
        event=event,
        n_tokens=n_tokens,
        values=values,
        mean=mean,
        variance=variance,
        histogram=histogram,
    )


def event_moments(
    doc_counts: Mapping[int, int],
    doc_lengths: Sequence[int],
    total_tokens: int,
    n_tokens: int,
) -> tuple[float, float | None]:
    """Length-weighted mean and variance of an event's normalized counts.

    Same quantities as ``normalized_samples`` but computed from the sparse
    counts alone: documents where the event is absent contribute zero samples,
    so only sum(w x) and sum(w x^2) over nonzero documents are needed.
    The mean reduces exactly to n_tokens * total_count / total_tokens.
    """
    n_docs = len(doc_lengths)
    total = sum(doc_counts.values())
    mean = float(n_tokens) * total / total_tokens
    if n_docs < 2:
        return mean, None
    # sum_d w_d x_d^2 with w_d = L_d / T and x_d = c_d N / L_d
    second = 0.0
    for di, c in doc_counts.items():
        second += float(c) * c / doc_lengths[di]
    second *= float(n_tokens) * n_tokens / total_tokens
    variance = max(0.0, second - mean * mean)
    return mean, variance


def summary(counts: CorpusCounts) -> str:
    """One-line ingest summary: document, token, and type totals."""
    return (
        f"docs={counts.n_documents} tokens={counts.total_tokens} "
        f"types={len(counts.vocabulary)}"
    )


def write_corpus(
    documents: Sequence[Document],
    path: str,
    marker: str | None = None,
    tokens_per_line: int = 15,
) -> None:
    """Write documents as text, separated by blank lines or a marker line."""
    with open(path, "w", encoding="utf-8") as fh:
        for di, doc in enumerate(documents):
            if di > 0:
                fh.write((marker + "\n") if marker is not None else "\n")
            for start in range(0, len(doc.tokens), tokens_per_line):
                fh.write(" ".join(doc.tokens[start : start + tokens_per_line]) + "\n")


# ---------------------------------------------------------------------------
# serialization

def _pair_key(pair: tuple[int, int]) -> str:
    return f"{pair[0]},{pair[1]}"


def _parse_pair(key: str) -> tuple[int, int]:
    v, w = key.split(",")
    return int(v), int(w)


def save_counts(counts: CorpusCounts, path: str) -> None:
    """Write counts to JSON, self-contained (vocabulary included)."""
    payload = {
        "format": "burstlm-counts-v1",
        "unk_token": counts.vocabulary.unk_token,
        "words": counts.vocabulary.words,
        "documents": [
            {
                "length": d.length,
                "unigrams": {str(w): c for w, c in d.unigrams.items()},
                "bigrams": {_pair_key(vw): c for vw, c in d.bigrams.items()},
            }
            for d in counts.documents
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))


def load_counts(path: str) -> CorpusCounts:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "burstlm-counts-v1":
        raise CorpusError(f"unrecognized counts file: {path}")
    vocabulary = Vocabulary(payload["words"], unk_token=payload["unk_token"])

    documents: list[DocumentCounts] = []
    uni_totals: Counter[int] = Counter()
    bi_totals: Counter[tuple[int, int]] = Counter()
    total_tokens = 0
    for entry in payload["documents"]:
        uni = {int(w): c for w, c in entry["unigrams"].items()}
        bi = {_parse_pair(k): c for k, c in entry["bigrams"].items()}
        documents.append(DocumentCounts(length=entry["length"], unigrams=uni, bigrams=bi))
        uni_totals.update(uni)
        bi_totals.update(bi)
        total_tokens += entry["length"]

    return CorpusCounts(
        vocabulary=vocabulary,
        documents=documents,
        unigram_totals=dict(uni_totals),
        bigram_totals=dict(bi_totals),
        total_tokens=total_tokens,
    )


def export_counts_csv(
    counts: CorpusCounts,
    path: str,
    n_tokens: int,
    events: Sequence[str] | None = None,
) -> int:
    """Write per-document counts as CSV rows: event,doc_index,count,doc_length,scaled_count.

    Only nonzero counts produce rows.  ``events`` restricts output to the
    named unigrams (or "v w" bigram pairs); default is every unigram event.
    Returns the number of rows written.
    """
    vocab = counts.vocabulary
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "doc_index", "count", "doc_length", "scaled_count"])
        if events is None:
            targets: list[tuple[str, Mapping[int, int]]] = [
                (vocab[w], counts.unigram_doc_counts(w)) for w in sorted(counts.unigram_totals)
            ]
        else:
            targets = []
            for label in events:
                parts = tokenize(label)
                if len(parts) == 1:
                    targets.append((parts[0], counts.unigram_doc_counts(vocab.id_of(parts[0]))))
                elif len(parts) == 2:
                    pair = (vocab.id_of(parts[0]), vocab.id_of(parts[1]))
                    targets.append((f"{parts[0]} {parts[1]}", counts.bigram_doc_counts(pair)))
                else:
                    raise CorpusError(f"event must be one word or a word pair: {label!r}")
        for label, doc_counts in targets:
            for di in sorted(doc_counts):
                c = doc_counts[di]
                length = counts.documents[di].length
                scaled = c * float(n_tokens) / length
                writer.writerow([label, di, c, length, f"{scaled:.17g}"])
                rows += 1
    return rows
