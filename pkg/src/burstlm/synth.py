"""Synthetic corpus generation from known occurrence distributions.

Documents are built by drawing each word's count from its occurrence
distribution (scaled to the document's target length), laying the tokens out
in random order.  Collocations are drawn as atomic pairs, which plants
bigram structure on top of the per-word burstiness.  Everything is driven by
one seeded generator, so a spec reproduces its corpus byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import ratemodel
from .corpus import Document
from .ratemodel import RateDistribution


class SynthError(Exception):
    """Raised when a generative spec cannot produce a corpus."""


@dataclass(frozen=True)
class WordSpec:
    word: str
    dist: RateDistribution


@dataclass(frozen=True)
class CollocationSpec:
    """A word pair emitted as an adjacent unit, with its own occurrence model."""

    first: str
    second: str
    dist: RateDistribution


@dataclass
class GenerativeSpec:
    """Recipe for a synthetic corpus.

    Rates are expressed at the reference length ``n_tokens`` and rescaled to
    each document's target length, drawn uniformly from ``doc_length``
    (inclusive; equal endpoints give fixed-length documents).  When
    ``pad_word`` is set, that word's count is not drawn but chosen to make
    every document exactly its target length, so all other words keep their
    exact distributions.
    """

    n_tokens: int
    n_documents: int
    doc_length: tuple[int, int]
    seed: int
    words: list[WordSpec]
    collocations: list[CollocationSpec] = field(default_factory=list)
    pad_word: str | None = None

    def __post_init__(self) -> None:
        lo, hi = self.doc_length
        if not (1 <= lo <= hi):
            raise SynthError(f"bad document length range: {self.doc_length}")
        if self.n_documents < 1:
            raise SynthError(f"need at least one document: {self.n_documents}")
        if self.n_tokens < 1:
            raise SynthError(f"n_tokens must be >= 1: {self.n_tokens}")
        if not self.words:
            raise SynthError("spec has no words")
        names = [w.word for w in self.words]
        if len(set(names)) != len(names):
            raise SynthError("duplicate word in spec")
        if self.pad_word is not None and self.pad_word not in names:
            raise SynthError(f"pad word {self.pad_word!r} is not in the word list")


def _draw_count(rng: np.random.Generator, dist: RateDistribution, factor: float) -> int:
    scaled = ratemodel.scaled(dist, factor)
    if isinstance(scaled, ratemodel.PoissonParams):
        return int(rng.poisson(scaled.lam))
    if isinstance(scaled, ratemodel.NegBinParams):
        # draw the document's rate from the gamma mixture, then the count
        rate = rng.gamma(shape=scaled.alpha, scale=scaled.beta)
        return int(rng.poisson(rate))
    return scaled.value


def generate(spec: GenerativeSpec) -> list[Document]:
    """Produce the corpus a spec describes; deterministic given the seed."""
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.doc_length
    documents: list[Document] = []

    for _ in range(spec.n_documents):
        target = int(rng.integers(lo, hi + 1)) if hi > lo else lo
        factor = target / spec.n_tokens

        items: list[tuple[str, ...]] = []
        budget = 0
        for ws in spec.words:
            if ws.word == spec.pad_word:
                continue
            c = _draw_count(rng, ws.dist, factor)
            items.extend([(ws.word,)] * c)
            budget += c
        for cs in spec.collocations:
            c = _draw_count(rng, cs.dist, factor)
            items.extend([(cs.first, cs.second)] * c)
            budget += 2 * c

        if spec.pad_word is not None:
            pad_count = target - budget
            if pad_count < 0:
                raise SynthError(
                    f"drawn content ({budget} tokens) exceeds the target length "
                    f"{target}; lower the word rates or drop the pad word"
                )
            items.extend([(spec.pad_word,)] * pad_count)

        order = rng.permutation(len(items))
        tokens: list[str] = []
        for idx in order:
            tokens.extend(items[idx])
        documents.append(Document(tokens=tokens))

    return documents


# ---------------------------------------------------------------------------
# serialization

def _dist_to_dict(dist: RateDistribution) -> dict:
    if isinstance(dist, ratemodel.PoissonParams):
        return {"family": "poisson", "lam": dist.lam}
    if isinstance(dist, ratemodel.NegBinParams):
        return {"family": "negbin", "alpha": dist.alpha, "beta": dist.beta}
    return {"family": "point", "value": dist.value}


def _dist_from_dict(d: dict) -> RateDistribution:
    family = d.get("family")
    if family == "poisson":
        return ratemodel.PoissonParams(lam=d["lam"])
    if family == "negbin":
        return ratemodel.NegBinParams(alpha=d["alpha"], beta=d["beta"])
    if family == "point":
        return ratemodel.PointMassParams(value=d["value"])
    raise SynthError(f"unknown distribution family in spec: {family!r}")


def save_spec(spec: GenerativeSpec, path: str) -> None:
    payload = {
        "format": "burstlm-synth-v1",
        "n_tokens": spec.n_tokens,
        "n_documents": spec.n_documents,
        "doc_length": list(spec.doc_length),
        "seed": spec.seed,
        "pad_word": spec.pad_word,
        "words": [{"word": w.word, **_dist_to_dict(w.dist)} for w in spec.words],
        "collocations": [
            {"first": c.first, "second": c.second, **_dist_to_dict(c.dist)}
            for c in spec.collocations
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def load_spec(path: str) -> GenerativeSpec:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "burstlm-synth-v1":
        raise SynthError(f"unrecognized spec file: {path}")
    return GenerativeSpec(
        n_tokens=payload["n_tokens"],
        n_documents=payload["n_documents"],
        doc_length=tuple(payload["doc_length"]),
        seed=payload["seed"],
        words=[WordSpec(word=d["word"], dist=_dist_from_dict(d)) for d in payload["words"]],
        collocations=[
            CollocationSpec(first=d["first"], second=d["second"], dist=_dist_from_dict(d))
            for d in payload.get("collocations", [])
        ],
        pad_word=payload.get("pad_word"),
    )


# ---------------------------------------------------------------------------
# canned specs

def zipf_corpus_spec(
    vocab_size: int,
    n_tokens: int,
    n_documents: int,
    doc_length: tuple[int, int],
    seed: int,
    burstiness: float = 3.0,
    steady_fraction: float = 0.15,
    n_collocations: int = 0,
) -> GenerativeSpec:
    """Zipf-distributed vocabulary with bursty content words.

    Mean rates follow a Zipf curve normalized to sum to ``n_tokens``.  The
    top ``steady_fraction`` of ranks behave like function words (Poisson);
    the rest are gamma-mixed with scale ``burstiness``, so rare words occur
    in occasional clumps rather than uniformly.  Optional collocations pair
    up mid-rank words to create bigram structure.
    """
    if vocab_size < 2:
        raise SynthError(f"vocabulary too small: {vocab_size}")
    ranks = np.arange(1, vocab_size + 1, dtype=np.float64)
    weights = 1.0 / (ranks + 2.7)
    means = weights / weights.sum() * n_tokens

    n_steady = max(1, int(math.floor(steady_fraction * vocab_size)))
    words: list[WordSpec] = []
    width = len(str(vocab_size))
    for i, mu in enumerate(means):
        word = f"W{i + 1:0{width}d}"
        if i < n_steady:
            words.append(WordSpec(word=word, dist=ratemodel.PoissonParams(lam=float(mu))))
        else:
            beta = burstiness
            words.append(
                WordSpec(
                    word=word,
                    dist=ratemodel.NegBinParams(alpha=float(mu) / beta, beta=beta),
                )
            )

    collocations: list[CollocationSpec] = []
    for j in range(n_collocations):
        a = n_steady + 2 * j
        b = n_steady + 2 * j + 1
        if b >= vocab_size:
            break
        mu = float(means[a]) * 0.5
        collocations.append(
            CollocationSpec(
                first=words[a].word,
                second=words[b].word,
                dist=ratemodel.NegBinParams(alpha=mu / burstiness, beta=burstiness),
            )
        )

    return GenerativeSpec(
        n_tokens=n_tokens,
        n_documents=n_documents,
        doc_length=doc_length,
        seed=seed,
        words=words,
        collocations=collocations,
    )
