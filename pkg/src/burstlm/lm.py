"""Smoothed n-gram probabilities built on per-event occurrence profiles.

A model carries one occurrence distribution per vocabulary word and one per
observed word pair, all fit at a reference document length N.  Conditional
estimates from the profiles are discounted (absolute subtraction or
Good-Turing ratios) and combined with the unigram layer by interpolation or
back-off.  Every probability op accepts current observed counts, so the same
formulas serve both static queries and adaptive evaluation.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, OrderedDict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from . import ratemodel
from .corpus import CorpusCounts, Vocabulary, event_moments
from .ratemodel import RateDistribution, RateProfile, build_profile, mean_of
from .relfreq import Diagnostics, relative_frequency

logger = logging.getLogger(__name__)

# Leftover probability mass below this is treated as numerically exhausted:
# seen-mass totals clamp just under one, back-off denominators just above
# zero, both counted in the model diagnostics.
MASS_EPSILON = 1e-6
ALPHA_CAP = 1.0 - MASS_EPSILON

GOOD_TURING_CUTOFF = 5

# Bigram profiles are rebuilt on demand; this bounds the cache of tabulated
# pmfs (each is small, sized to its support, not to N).
PROFILE_CACHE_SIZE = 16384

SCHEMES = ("absolute", "good_turing")


class ModelFormatError(Exception):
    """Raised when a model file cannot be parsed."""


# ---------------------------------------------------------------------------
# discounting

@dataclass(frozen=True)
class AbsoluteDiscount:
    """Subtract a constant number of expected occurrences, floored at zero."""

    subtract: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.subtract and math.isfinite(self.subtract)):
            raise ValueError(f"discount constant must be nonnegative: {self.subtract}")


@dataclass(frozen=True)
class GoodTuringDiscount:
    """Multiply by a ratio chosen by the event's raw training count.

    ``ratios[r-1]`` applies to count r; counts above the cutoff (and unseen
    events, which have nothing to give up) keep their full estimate.
    """

    ratios: tuple[float, ...]

    @property
    def cutoff(self) -> int:
        return len(self.ratios)

    def ratio_for(self, raw_count: int) -> float:
        if 1 <= raw_count <= len(self.ratios):
            return self.ratios[raw_count - 1]
        return 1.0


DiscountConfig = AbsoluteDiscount | GoodTuringDiscount


def count_of_counts(raw_counts: Iterable[int]) -> Counter[int]:
    """n_r: how many event types occur exactly r times (zeros ignored)."""
    cc: Counter[int] = Counter()
    for c in raw_counts:
        if c > 0:
            cc[c] += 1
    return cc


def estimate_absolute_discount(cc: Mapping[int, int]) -> AbsoluteDiscount:
    """Discount constant n1 / (n1 + 2 n2) from singleton and doubleton types."""
    n1 = cc.get(1, 0)
    n2 = cc.get(2, 0)
    if n1 == 0 or n2 == 0:
        logger.warning(
            "cannot estimate absolute discount (n1=%d, n2=%d); using 0.5", n1, n2
        )
        return AbsoluteDiscount(subtract=0.5)
    return AbsoluteDiscount(subtract=n1 / (n1 + 2.0 * n2))


def estimate_good_turing(cc: Mapping[int, int], cutoff: int = GOOD_TURING_CUTOFF) -> GoodTuringDiscount:
    """Count-specific ratios d_r for r = 1..cutoff from the count-of-counts.

    d_r = ((r+1) n_{r+1} / (r n_r) - A) / (1 - A) with A = (cutoff+1)
    n_{cutoff+1} / n_1.  Ratios that come out unusable (missing n_r, or
    outside (0, 1]) fall back to 1, i.e. no discount, with a warning.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1: {cutoff}")
    n1 = cc.get(1, 0)
    if n1 == 0:
        logger.warning("cannot estimate count ratios (no singletons); using no discount")
        return GoodTuringDiscount(ratios=(1.0,) * cutoff)
    big = (cutoff + 1.0) * cc.get(cutoff + 1, 0) / n1
    ratios = []
    for r in range(1, cutoff + 1):
        n_r = cc.get(r, 0)
        n_r1 = cc.get(r + 1, 0)
        if n_r == 0 or big >= 1.0:
            d = 1.0
        else:
            turing = (r + 1.0) * n_r1 / (r * n_r)
            d = (turing - big) / (1.0 - big)
        if not (0.0 < d <= 1.0):
            logger.warning("count ratio for r=%d out of range (%.4g); using 1", r, d)
            d = 1.0
        ratios.append(d)
    return GoodTuringDiscount(ratios=tuple(ratios))


def discounted_frequency(
    f: float,
    raw_count: int,
    config: DiscountConfig,
    n_tokens: int,
) -> float:
    """Apply a discount to a relative-frequency estimate."""
    if isinstance(config, AbsoluteDiscount):
        return max(f - config.subtract / n_tokens, 0.0)
    return config.ratio_for(raw_count) * f


# ---------------------------------------------------------------------------
# model

@dataclass
class RateEntry:
    """Raw training count plus fitted occurrence distribution for one event."""

    raw_count: int
    dist: RateDistribution


class LanguageModel:
    """Unigram and bigram occurrence models sharing one reference length.

    Probability ops take the caller's current observed counts as mappings
    (word id -> count, pair -> count); omitting them queries the static
    zero-observation state.  Unigram profiles are tabulated eagerly; bigram
    profiles on demand behind an LRU cache, with their truncated means
    precomputed in bulk on first bigram use.
    """

    def __init__(
        self,
        vocabulary: Vocabulary,
        n_tokens: int,
        unigram_entries: Sequence[RateEntry],
        bigram_entries: Mapping[tuple[int, int], RateEntry],
        absolute: AbsoluteDiscount,
        good_turing: GoodTuringDiscount,
        scheme: str = "absolute",
        diagnostics: Diagnostics | None = None,
        _shared: dict | None = None,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown discount scheme: {scheme!r}")
        if len(unigram_entries) != len(vocabulary):
            raise ValueError("need exactly one unigram entry per vocabulary word")
        self.vocabulary = vocabulary
        self.n_tokens = n_tokens
        self.unigram_entries = list(unigram_entries)
        self.bigram_entries = dict(bigram_entries)
        self.absolute = absolute
        self.good_turing = good_turing
        self.scheme = scheme
        self.diagnostics = diagnostics if diagnostics is not None else Diagnostics()
        self.uniform_floor = 1.0 / len(vocabulary)

        # caches scheme-independent, shareable across scheme-switched copies
        shared = _shared or {}
        self.unigram_profiles: list[RateProfile] = shared.get("unigram_profiles") or [
            build_profile(e.dist, n_tokens, event=vocabulary[w])
            for w, e in enumerate(self.unigram_entries)
        ]
        self._bigram_means: dict[tuple[int, int], float] | None = shared.get("bigram_means")
        self._bigram_losses: dict[tuple[int, int], float] | None = shared.get("bigram_losses")
        self._entries_by_context: dict[int, list[int]] | None = shared.get("entries_by_context")
        self._profile_cache: OrderedDict[tuple[int, int], RateProfile] = shared.get(
            "profile_cache", OrderedDict()
        )
        # scheme-dependent derived state
        self._alpha0: dict[int, float] | None = None
        self._fhat0: np.ndarray | None = None

        self.unigram_raw = np.array([e.raw_count for e in self.unigram_entries], dtype=np.int64)
        self.f0 = np.array([p.mean / n_tokens for p in self.unigram_profiles])

    # -- derived tables ----------------------------------------------------

    @property
    def discount_config(self) -> DiscountConfig:
        return self.absolute if self.scheme == "absolute" else self.good_turing

    def discounted(self, f: float, raw_count: int) -> float:
        return discounted_frequency(f, raw_count, self.discount_config, self.n_tokens)

    @property
    def fhat0(self) -> np.ndarray:
        """Discounted zero-observation unigram frequencies, one per word."""
        if self._fhat0 is None:
            config = self.discount_config
            self._fhat0 = np.array(
                [
                    discounted_frequency(float(f), int(r), config, self.n_tokens)
                    for f, r in zip(self.f0, self.unigram_raw)
                ]
            )
        return self._fhat0

    @property
    def entries_by_context(self) -> dict[int, list[int]]:
        if self._entries_by_context is None:
            index: dict[int, list[int]] = {}
            for v, w in self.bigram_entries:
                index.setdefault(v, []).append(w)
            self._entries_by_context = index
        return self._entries_by_context

    def _ensure_bigram_tables(self) -> None:
        if self._bigram_means is not None:
            return
        means: dict[tuple[int, int], float] = {}
        losses: dict[tuple[int, int], float] = {}
        for pair, entry in self.bigram_entries.items():
            profile = build_profile(entry.dist, self.n_tokens, event=self._pair_label(pair))
            means[pair] = profile.mean
            losses[pair] = profile.truncation_loss
        self._bigram_means = means
        self._bigram_losses = losses

    def bigram_mean(self, pair: tuple[int, int]) -> float:
        self._ensure_bigram_tables()
        return self._bigram_means[pair]

    def bigram_truncation_loss(self, pair: tuple[int, int]) -> float:
        self._ensure_bigram_tables()
        return self._bigram_losses[pair]

    def unigram_profile(self, word_id: int) -> RateProfile:
        return self.unigram_profiles[word_id]

    def bigram_profile(self, pair: tuple[int, int]) -> RateProfile:
        cached = self._profile_cache.get(pair)
        if cached is not None and cached.n_tokens == self.n_tokens:
            self._profile_cache.move_to_end(pair)
            return cached
        profile = build_profile(
            self.bigram_entries[pair].dist, self.n_tokens, event=self._pair_label(pair)
        )
        self._profile_cache[pair] = profile
        if len(self._profile_cache) > PROFILE_CACHE_SIZE:
            self._profile_cache.popitem(last=False)
        return profile

    def alpha0(self) -> dict[int, float]:
        """Per-context sum of discounted pair frequencies at zero observations."""
        if self._alpha0 is None:
            self._ensure_bigram_tables()
            config = self.discount_config
            table: dict[int, float] = {}
            for (v, w), entry in self.bigram_entries.items():
                fhat = discounted_frequency(
                    self._bigram_means[(v, w)] / self.n_tokens,
                    entry.raw_count,
                    config,
                    self.n_tokens,
                )
                table[v] = table.get(v, 0.0) + fhat
            self._alpha0 = table
        return self._alpha0

    def _pair_label(self, pair: tuple[int, int]) -> str:
        return f"{self.vocabulary[pair[0]]} {self.vocabulary[pair[1]]}"

    def _shared_caches(self) -> dict:
        return {
            "unigram_profiles": self.unigram_profiles,
            "bigram_means": self._bigram_means,
            "bigram_losses": self._bigram_losses,
            "entries_by_context": self._entries_by_context,
            "profile_cache": self._profile_cache,
        }

    # -- reconfiguration ---------------------------------------------------

    def with_scheme(self, scheme: str) -> "LanguageModel":
        """Same fitted model under a different discount scheme."""
        if scheme == self.scheme:
            return self
        return LanguageModel(
            self.vocabulary,
            self.n_tokens,
            self.unigram_entries,
            self.bigram_entries,
            self.absolute,
            self.good_turing,
            scheme=scheme,
            diagnostics=self.diagnostics,
            _shared=self._shared_caches(),
        )

    def at_length(self, n_tokens: int) -> "LanguageModel":
        """Rescale every occurrence distribution to a new document length.

        Per-token rates are preserved (burstiness shapes unchanged); all
        profiles are rebuilt at the new length.
        """
        if n_tokens == self.n_tokens:
            return self
        if n_tokens < 1:
            raise ValueError(f"n_tokens must be >= 1: {n_tokens}")
        factor = n_tokens / self.n_tokens
        unigrams = [
            RateEntry(raw_count=e.raw_count, dist=ratemodel.scaled(e.dist, factor))
            for e in self.unigram_entries
        ]
        bigrams = {
            pair: RateEntry(raw_count=e.raw_count, dist=ratemodel.scaled(e.dist, factor))
            for pair, e in self.bigram_entries.items()
        }
        return LanguageModel(
            self.vocabulary,
            n_tokens,
            unigrams,
            bigrams,
            self.absolute,
            self.good_turing,
            scheme=self.scheme,
            diagnostics=self.diagnostics,
        )

    # -- probabilities -----------------------------------------------------

    def unigram_frequency(self, word_id: int, n: int = 0) -> float:
        """Relative-frequency estimate for a word observed n times."""
        return relative_frequency(self.unigram_profiles[word_id], n, self.diagnostics)

    def discounted_unigram_frequency(self, word_id: int, n: int = 0) -> float:
        return self.discounted(
            self.unigram_frequency(word_id, n), self.unigram_entries[word_id].raw_count
        )

    def bigram_frequency(self, v: int, w: int, n: int = 0) -> float:
        """Relative-frequency estimate for a pair observed n times.

        The pair must have a training entry; unseen pairs have no
        occurrence model and contribute only through the unigram layer.
        """
        if n == 0:
            return self.bigram_mean((v, w)) / self.n_tokens
        return relative_frequency(self.bigram_profile((v, w)), n, self.diagnostics)

    def discounted_bigram_frequency(self, v: int, w: int, n: int = 0) -> float:
        return self.discounted(
            self.bigram_frequency(v, w, n), self.bigram_entries[(v, w)].raw_count
        )

    def unigram_normalizers(self, unigram_counts: Mapping[int, int] | None) -> tuple[float, float]:
        """Vocabulary sums (plain, discounted) of unigram estimates."""
        if not unigram_counts:
            return float(self.f0.sum()), float(self.fhat0.sum())
        z = 0.0
        zd = 0.0
        for w in range(len(self.vocabulary)):
            f = self.unigram_frequency(w, unigram_counts.get(w, 0))
            z += f
            zd += self.discounted(f, self.unigram_entries[w].raw_count)
        return z, zd

    def unigram_term(self, fhat: float, z: float, zd: float) -> float:
        """Normalized discounted estimate plus the uniform leftover share.

        The discounted estimates are divided by the plain vocabulary sum, so
        they give up zd/z of the mass in total; the remainder is spread
        uniformly.  Summed over the vocabulary this is exactly one.
        """
        return fhat / z + (1.0 - zd / z) * self.uniform_floor

    def unigram_probability(self, word_id: int, unigram_counts: Mapping[int, int] | None = None) -> float:
        """Smoothed unigram probability given current observed counts."""
        z, zd = self.unigram_normalizers(unigram_counts)
        n = unigram_counts.get(word_id, 0) if unigram_counts else 0
        fhat = self.discounted_unigram_frequency(word_id, n)
        return self.unigram_term(fhat, z, zd)

    def clamp_alpha(self, alpha_raw: float) -> tuple[float, float]:
        """Cap the seen-bigram mass just below one.

        Returns (alpha_used, scale); the scale shrinks every seen-pair term
        proportionally so conditional distributions stay normalized even
        when the raw mass would leave less than MASS_EPSILON for smoothing.
        """
        if alpha_raw > ALPHA_CAP:
            self.diagnostics.bump("alpha_clamp")
            return ALPHA_CAP, ALPHA_CAP / alpha_raw
        return max(alpha_raw, 0.0), 1.0

    def nonzero_mass(self, v: int, bigram_counts: Mapping[tuple[int, int], int] | None = None) -> float:
        """Total discounted mass on pairs seen after context v (clamped)."""
        alpha_raw = self._alpha_raw(v, bigram_counts)
        alpha_used, _ = self.clamp_alpha(alpha_raw)
        return alpha_used

    def _alpha_raw(self, v: int, bigram_counts: Mapping[tuple[int, int], int] | None) -> float:
        if not bigram_counts:
            return self.alpha0().get(v, 0.0)
        total = 0.0
        for w in self.entries_by_context.get(v, ()):
            total += self.discounted_bigram_frequency(v, w, bigram_counts.get((v, w), 0))
        return total

    def interpolated_probability(
        self,
        v: int,
        w: int,
        unigram_counts: Mapping[int, int] | None = None,
        bigram_counts: Mapping[tuple[int, int], int] | None = None,
    ) -> float:
        """Discounted pair estimate plus the leftover mass times the unigram."""
        alpha_used, scale = self.clamp_alpha(self._alpha_raw(v, bigram_counts))
        if (v, w) in self.bigram_entries:
            n = bigram_counts.get((v, w), 0) if bigram_counts else 0
            fhat = self.discounted_bigram_frequency(v, w, n) * scale
        else:
            fhat = 0.0
        return fhat + (1.0 - alpha_used) * self.unigram_probability(w, unigram_counts)

    def backoff_probability(
        self,
        v: int,
        w: int,
        unigram_counts: Mapping[int, int] | None = None,
        bigram_counts: Mapping[tuple[int, int], int] | None = None,
    ) -> float:
        """Pair estimate for seen pairs; scaled unigram estimate otherwise.

        A seen pair whose discounted estimate has been floored to zero is
        routed to the back-off branch: it keeps probabilities positive and,
        since such pairs contribute nothing to the seen mass, the
        conditional distribution still sums to one.
        """
        z, zd = self.unigram_normalizers(unigram_counts)
        alpha_used, scale = self.clamp_alpha(self._alpha_raw(v, bigram_counts))

        if (v, w) in self.bigram_entries:
            n = bigram_counts.get((v, w), 0) if bigram_counts else 0
            fhat = self.discounted_bigram_frequency(v, w, n)
            if fhat > 0.0:
                return fhat * scale

        # unigram mass already claimed by the context's live seen pairs
        seen_mass = 0.0
        for w2 in self.entries_by_context.get(v, ()):
            n2 = bigram_counts.get((v, w2), 0) if bigram_counts else 0
            if self.discounted_bigram_frequency(v, w2, n2) > 0.0:
                fhat2 = self.discounted_unigram_frequency(w2, unigram_counts.get(w2, 0) if unigram_counts else 0)
                seen_mass += self.unigram_term(fhat2, z, zd)
        denom = 1.0 - seen_mass
        if denom <= MASS_EPSILON:
            self.diagnostics.bump("backoff_denominator_clamp")
            denom = MASS_EPSILON
        beta = (1.0 - alpha_used) / denom

        n_w = unigram_counts.get(w, 0) if unigram_counts else 0
        p_uni = self.unigram_term(self.discounted_unigram_frequency(w, n_w), z, zd)
        return min(beta * p_uni, 1.0)

    def probability(
        self,
        v: int | None,
        w: int,
        unigram_counts: Mapping[int, int] | None = None,
        bigram_counts: Mapping[tuple[int, int], int] | None = None,
        smoothing: str = "interpolation",
    ) -> float:
        """Conditional probability of w after v (v None means no context)."""
        if v is None:
            return self.unigram_probability(w, unigram_counts)
        if smoothing == "interpolation":
            return self.interpolated_probability(v, w, unigram_counts, bigram_counts)
        if smoothing == "backoff":
            return self.backoff_probability(v, w, unigram_counts, bigram_counts)
        raise ValueError(f"unknown smoothing: {smoothing!r}")


# ---------------------------------------------------------------------------
# fitting

def fit_model(
    counts: CorpusCounts,
    n_tokens: int = 1000,
    family: str = "auto",
    scheme: str = "absolute",
    cutoff: int = GOOD_TURING_CUTOFF,
) -> LanguageModel:
    """Fit occurrence distributions for every word and observed pair.

    Discount constants for both schemes are estimated from the bigram
    count-of-counts (pairs are where singletons live); a model without any
    bigrams falls back to the unigram counts.  Vocabulary words that never
    occur (an unused <UNK>, or supplied vocabulary entries absent from the
    data) still need a profile, so they get a nominal half-occurrence
    Poisson rate.
    """
    lengths = counts.doc_lengths
    T = counts.total_tokens
    V = len(counts.vocabulary)

    floor_lam = n_tokens * 0.5 / T
    unigram_entries: list[RateEntry] = []
    for w in range(V):
        raw = counts.unigram_totals.get(w, 0)
        if raw == 0:
            logger.info(
                "word %r has no occurrences; assigning nominal rate %.3g",
                counts.vocabulary[w],
                floor_lam,
            )
            unigram_entries.append(RateEntry(raw_count=0, dist=ratemodel.PoissonParams(floor_lam)))
            continue
        mean, variance = event_moments(counts.unigram_doc_counts(w), lengths, T, n_tokens)
        unigram_entries.append(
            RateEntry(raw_count=raw, dist=ratemodel.fit_rate(mean, variance, family))
        )

    bigram_entries: dict[tuple[int, int], RateEntry] = {}
    for pair, raw in counts.bigram_totals.items():
        mean, variance = event_moments(counts.bigram_doc_counts(pair), lengths, T, n_tokens)
        bigram_entries[pair] = RateEntry(
            raw_count=raw, dist=ratemodel.fit_rate(mean, variance, family)
        )

    cc_source = counts.bigram_totals if bigram_entries else counts.unigram_totals
    cc = count_of_counts(cc_source.values())
    absolute = estimate_absolute_discount(cc)
    good_turing = estimate_good_turing(cc, cutoff=cutoff)

    return LanguageModel(
        counts.vocabulary,
        n_tokens,
        unigram_entries,
        bigram_entries,
        absolute,
        good_turing,
        scheme=scheme,
    )


# ---------------------------------------------------------------------------
# serialization

_MODEL_MAGIC = "burstlm-model-v1"


def _format_dist(dist: RateDistribution) -> str:
    if isinstance(dist, ratemodel.PoissonParams):
        return f"poisson {dist.lam:.17g}"
    if isinstance(dist, ratemodel.NegBinParams):
        return f"negbin {dist.alpha:.17g} {dist.beta:.17g}"
    return f"point {dist.value}"


def _parse_dist(fields: list[str]) -> RateDistribution:
    family = fields[0]
    if family == "poisson":
        return ratemodel.PoissonParams(lam=float(fields[1]))
    if family == "negbin":
        return ratemodel.NegBinParams(alpha=float(fields[1]), beta=float(fields[2]))
    if family == "point":
        return ratemodel.PointMassParams(value=int(fields[1]))
    raise ModelFormatError(f"unknown distribution family: {family!r}")


def save_model(model: LanguageModel, path: str) -> None:
    """Write the model as a line-oriented text file, self-contained."""
    vocab = model.vocabulary
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_MODEL_MAGIC}\n")
        fh.write(f"ntokens {model.n_tokens}\n")
        fh.write(f"unk {vocab.unk_token}\n")
        fh.write(f"scheme {model.scheme}\n")
        fh.write(f"absolute {model.absolute.subtract:.17g}\n")
        ratios = " ".join(f"{d:.17g}" for d in model.good_turing.ratios)
        fh.write(f"good_turing {model.good_turing.cutoff} {ratios}\n")
        fh.write(f"floor {model.uniform_floor:.17g}\n")
        fh.write(f"unigrams {len(model.unigram_entries)}\n")
        for w, entry in enumerate(model.unigram_entries):
            fh.write(f"{vocab[w]} {entry.raw_count} {_format_dist(entry.dist)}\n")
        fh.write(f"bigrams {len(model.bigram_entries)}\n")
        for (v, w), entry in sorted(model.bigram_entries.items()):
            fh.write(f"{vocab[v]} {vocab[w]} {entry.raw_count} {_format_dist(entry.dist)}\n")
        fh.write("end\n")


def load_model(path: str) -> LanguageModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MODEL_MAGIC:
        raise ModelFormatError(f"not a model file: {path}")
    try:
        return _parse_model(lines)
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc


def _parse_model(lines: list[str]) -> LanguageModel:

    header: dict[str, list[str]] = {}
    i = 1
    while i < len(lines):
        fields = lines[i].split()
        if fields and fields[0] == "unigrams":
            break
        if len(fields) >= 2:
            header[fields[0]] = fields[1:]
        i += 1
    for key in ("ntokens", "unk", "scheme", "absolute", "good_turing", "floor"):
        if key not in header:
            raise ModelFormatError(f"model file missing header field {key!r}")

    n_tokens = int(header["ntokens"][0])
    unk_token = header["unk"][0]
    scheme = header["scheme"][0]
    absolute = AbsoluteDiscount(subtract=float(header["absolute"][0]))
    gt_fields = header["good_turing"]
    gt_cutoff = int(gt_fields[0])
    ratios = tuple(float(x) for x in gt_fields[1 : 1 + gt_cutoff])
    if len(ratios) != gt_cutoff:
        raise ModelFormatError("good_turing header has wrong number of ratios")
    good_turing = GoodTuringDiscount(ratios=ratios)

    fields = lines[i].split()
    if len(fields) != 2 or fields[0] != "unigrams":
        raise ModelFormatError("expected unigram section header")
    n_uni = int(fields[1])
    i += 1

    words: list[str] = []
    unigram_entries: list[RateEntry] = []
    for _ in range(n_uni):
        parts = lines[i].split()
        words.append(parts[0])
        unigram_entries.append(RateEntry(raw_count=int(parts[1]), dist=_parse_dist(parts[2:])))
        i += 1
    vocabulary = Vocabulary(words, unk_token=unk_token)
    if vocabulary.words != words:
        raise ModelFormatError("unk token missing from unigram section")

    fields = lines[i].split()
    if len(fields) != 2 or fields[0] != "bigrams":
        raise ModelFormatError("expected bigram section header")
    n_bi = int(fields[1])
    i += 1

    bigram_entries: dict[tuple[int, int], RateEntry] = {}
    for _ in range(n_bi):
        parts = lines[i].split()
        v, w = parts[0], parts[1]
        if v not in vocabulary or w not in vocabulary:
            raise ModelFormatError(f"bigram references unknown word: {v!r} {w!r}")
        pair = (vocabulary.id_of(v), vocabulary.id_of(w))
        bigram_entries[pair] = RateEntry(raw_count=int(parts[2]), dist=_parse_dist(parts[3:]))
        i += 1

    if i >= len(lines) or lines[i] != "end":
        raise ModelFormatError("model file truncated (missing end marker)")

    stored_floor = float(header["floor"][0])
    model = LanguageModel(
        vocabulary, n_tokens, unigram_entries, bigram_entries, absolute, good_turing, scheme=scheme
    )
    if not math.isclose(model.uniform_floor, stored_floor, rel_tol=1e-12):
        raise ModelFormatError(
            f"floor constant {stored_floor} inconsistent with vocabulary size {len(vocabulary)}"
        )
    return model


# ---------------------------------------------------------------------------
# summaries

def export_fit_csv(model: LanguageModel, path: str, include_bigrams: bool = True) -> int:
    """Write one row per fitted event: family, parameters, moments, lost mass.

    Columns: event,family,alpha,beta,lambda,mean,variance,truncation_loss.
    Parameter columns not applicable to a family are left empty.  Returns
    the number of rows written.
    """
    import csv as _csv

    def row(label: str, entry: RateEntry, loss: float) -> list[str]:
        dist = entry.dist
        alpha = beta = lam = ""
        if isinstance(dist, ratemodel.NegBinParams):
            family = "negbin"
            alpha = f"{dist.alpha:.17g}"
            beta = f"{dist.beta:.17g}"
        elif isinstance(dist, ratemodel.PoissonParams):
            family = "poisson"
            lam = f"{dist.lam:.17g}"
        else:
            family = "point"
            lam = str(dist.value)
        return [
            label,
            family,
            alpha,
            beta,
            lam,
            f"{mean_of(dist):.17g}",
            f"{ratemodel.variance_of(dist):.17g}",
            f"{loss:.17g}",
        ]

    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(
            ["event", "family", "alpha", "beta", "lambda", "mean", "variance", "truncation_loss"]
        )
        for w, entry in enumerate(model.unigram_entries):
            writer.writerow(row(model.vocabulary[w], entry, model.unigram_profiles[w].truncation_loss))
            rows += 1
        if include_bigrams and model.bigram_entries:
            model._ensure_bigram_tables()
            for pair in sorted(model.bigram_entries):
                writer.writerow(
                    row(
                        model._pair_label(pair),
                        model.bigram_entries[pair],
                        model.bigram_truncation_loss(pair),
                    )
                )
                rows += 1
    return rows


def export_rate_curves_csv(
    model: LanguageModel,
    events: Sequence[str],
    path: str,
    max_n: int | None = None,
) -> int:
    """Write relative-frequency curves f(event at count n) as event,n,f rows.

    Events are single words or "v w" pairs; n runs from 0 to ``max_n``
    (default: a short stretch past each event's support).
    """
    import csv as _csv

    from .corpus import tokenize

    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["event", "n", "f"])
        for label in events:
            parts = tokenize(label)
            if len(parts) == 1:
                wid = model.vocabulary.id_of(parts[0])
                profile = model.unigram_profile(wid)
                lookup = lambda n: model.unigram_frequency(wid, n)
                name = model.vocabulary[wid]
            elif len(parts) == 2:
                pair = (model.vocabulary.id_of(parts[0]), model.vocabulary.id_of(parts[1]))
                if pair not in model.bigram_entries:
                    raise KeyError(f"pair was never observed in training: {label!r}")
                profile = model.bigram_profile(pair)
                lookup = lambda n: model.bigram_frequency(pair[0], pair[1], n)
                name = model._pair_label(pair)
            else:
                raise ValueError(f"event must be one word or a word pair: {label!r}")
            top = max_n if max_n is not None else min(model.n_tokens, profile.support_end + 10)
            for n in range(top + 1):
                writer.writerow([name, n, f"{lookup(n):.17g}"])
                rows += 1
    return rows
