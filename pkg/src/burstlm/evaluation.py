"""Online perplexity evaluation with a sliding window of observed counts.

Tokens are scored strictly before being added to the window (predict, then
update), so every probability conditions only on the past.  The window holds
the last N tokens; its unigram and bigram counts feed the conditional
estimators, and all normalizer sums are maintained incrementally in O(1)
per token.
"""

from __future__ import annotations

import json
import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field

from .lm import MASS_EPSILON, LanguageModel
from .relfreq import Diagnostics, relative_frequency


@dataclass
class WindowDeltas:
    """Count changes from one window advance, in application order."""

    unigrams: list[tuple[int, int, int]] = field(default_factory=list)  # (word, old, new)
    bigrams: list[tuple[tuple[int, int], int, int]] = field(default_factory=list)


class SlidingWindow:
    """Last-``capacity`` tokens with incremental unigram and bigram counts.

    Bigram counts cover adjacent positions inside the buffer only.  Capacity
    zero is a valid always-empty window.
    """

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError(f"capacity must be >= 0: {capacity}")
        self.capacity = capacity
        self.buffer: deque[int] = deque()
        self.unigram_counts: dict[int, int] = {}
        self.bigram_counts: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self.buffer)

    def _bump_unigram(self, w: int, step: int, deltas: WindowDeltas) -> None:
        old = self.unigram_counts.get(w, 0)
        new = old + step
        if new:
            self.unigram_counts[w] = new
        else:
            self.unigram_counts.pop(w, None)
        deltas.unigrams.append((w, old, new))

    def _bump_bigram(self, pair: tuple[int, int], step: int, deltas: WindowDeltas) -> None:
        old = self.bigram_counts.get(pair, 0)
        new = old + step
        if new:
            self.bigram_counts[pair] = new
        else:
            self.bigram_counts.pop(pair, None)
        deltas.bigrams.append((pair, old, new))

    def advance(self, token_id: int) -> WindowDeltas:
        """Append a token, evicting the oldest first when full."""
        deltas = WindowDeltas()
        if self.capacity == 0:
            return deltas
        if len(self.buffer) == self.capacity:
            evicted = self.buffer.popleft()
            self._bump_unigram(evicted, -1, deltas)
            if self.buffer:
                self._bump_bigram((evicted, self.buffer[0]), -1, deltas)
        if self.buffer:
            self._bump_bigram((self.buffer[-1], token_id), +1, deltas)
        self.buffer.append(token_id)
        self._bump_unigram(token_id, +1, deltas)
        return deltas


class StreamState:
    """Incrementally maintained estimator state for one evaluation stream.

    Mirrors, in O(1) per token, what the model's brute-force ops would
    recompute from the window counts: per-word estimates and their
    vocabulary sums, plus per-context seen-pair mass.
    """

    def __init__(self, model: LanguageModel, capacity: int, order: int):
        self.model = model
        self.order = order
        self.window = SlidingWindow(capacity)
        self.f = model.f0.copy()
        self.fhat = model.fhat0.copy()
        self.z = float(model.f0.sum())
        self.zd = float(model.fhat0.sum())
        self._alpha_base = model.alpha0() if order >= 2 else {}
        self._alpha_over: dict[int, float] = {}
        self.prev: int | None = None

    def reset(self) -> None:
        self.window = SlidingWindow(self.window.capacity)
        self.f = self.model.f0.copy()
        self.fhat = self.model.fhat0.copy()
        self.z = float(self.model.f0.sum())
        self.zd = float(self.model.fhat0.sum())
        self._alpha_over.clear()
        self.prev = None

    def alpha_of(self, v: int) -> float:
        over = self._alpha_over.get(v)
        if over is not None:
            return over
        return self._alpha_base.get(v, 0.0)

    def unigram_probability(self, w: int) -> float:
        return self.model.unigram_term(float(self.fhat[w]), self.z, self.zd)

    def probability(self, w: int, smoothing: str) -> float:
        model = self.model
        v = self.prev
        if self.order == 1 or v is None:
            return self.unigram_probability(w)

        alpha_used, scale = model.clamp_alpha(self.alpha_of(v))
        pair = (v, w)
        fhat_big = 0.0
        if pair in model.bigram_entries:
            n = self.window.bigram_counts.get(pair, 0)
            fhat_big = model.discounted_bigram_frequency(v, w, n)

        if smoothing == "interpolation":
            return fhat_big * scale + (1.0 - alpha_used) * self.unigram_probability(w)

        if fhat_big > 0.0:
            return fhat_big * scale
        # mass already claimed by the context's live seen pairs
        seen_mass = 0.0
        for w2 in model.entries_by_context.get(v, ()):
            n2 = self.window.bigram_counts.get((v, w2), 0)
            if model.discounted_bigram_frequency(v, w2, n2) > 0.0:
                seen_mass += self.unigram_probability(w2)
        denom = 1.0 - seen_mass
        if denom <= MASS_EPSILON:
            model.diagnostics.bump("backoff_denominator_clamp")
            denom = MASS_EPSILON
        beta = (1.0 - alpha_used) / denom
        return min(beta * self.unigram_probability(w), 1.0)

    def advance(self, token_id: int) -> None:
        model = self.model
        deltas = self.window.advance(token_id)
        for w, _old, new in deltas.unigrams:
            f_new = relative_frequency(model.unigram_profiles[w], new, model.diagnostics)
            fhat_new = model.discounted(f_new, model.unigram_entries[w].raw_count)
            self.z += f_new - float(self.f[w])
            self.zd += fhat_new - float(self.fhat[w])
            self.f[w] = f_new
            self.fhat[w] = fhat_new
        if self.order >= 2:
            for pair, old, new in deltas.bigrams:
                entry = model.bigram_entries.get(pair)
                if entry is None:
                    continue
                v = pair[0]
                old_fhat = model.discounted(
                    model.bigram_frequency(pair[0], pair[1], old), entry.raw_count
                )
                new_fhat = model.discounted(
                    model.bigram_frequency(pair[0], pair[1], new), entry.raw_count
                )
                self._alpha_over[v] = self.alpha_of(v) + (new_fhat - old_fhat)
        self.prev = token_id


@dataclass
class SegmentScore:
    index: int
    token_count: int
    log_prob_sum: float

    @property
    def perplexity(self) -> float:
        if self.token_count == 0:
            return float("nan")
        return math.exp(-self.log_prob_sum / self.token_count)


@dataclass
class PerplexityReport:
    perplexity: float
    token_count: int
    log_prob_total: float
    oov_count: int
    oov_rate: float
    order: int
    mode: str
    window: int
    smoothing: str
    scheme: str
    reset_on_doc: bool
    segments: list[SegmentScore]
    diagnostics: dict[str, int]
    token_log_probs: list[float] | None = None
    token_ids: list[int] | None = None

    def to_dict(self) -> dict:
        return {
            "perplexity": self.perplexity,
            "token_count": self.token_count,
            "log_prob_total": self.log_prob_total,
            "oov_count": self.oov_count,
            "oov_rate": self.oov_rate,
            "order": self.order,
            "mode": self.mode,
            "window": self.window,
            "smoothing": self.smoothing,
            "scheme": self.scheme,
            "reset_on_doc": self.reset_on_doc,
            "segments": [
                {
                    "index": s.index,
                    "token_count": s.token_count,
                    "log_prob_sum": s.log_prob_sum,
                    "perplexity": s.perplexity,
                }
                for s in self.segments
            ],
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def evaluate(
    model: LanguageModel,
    segments: Sequence[Sequence[int]],
    order: int = 2,
    mode: str = "variable",
    window: int | None = None,
    smoothing: str = "interpolation",
    reset_on_doc: bool = False,
    trace: bool = False,
    oov_count: int | None = None,
) -> PerplexityReport:
    """Score a token stream online and report perplexity.

    ``segments`` is a list of documents as id sequences; by default they are
    evaluated as one continuous stream (the window carries across
    boundaries), with ``reset_on_doc`` clearing all adapted state at each
    boundary instead.  In "variable" mode the window size also becomes the
    reference document length, so the model is rescaled to it; "constant"
    mode keeps the window empty and scores with static probabilities.
    ``oov_count`` overrides the out-of-vocabulary tally when the caller
    tracked unknown words itself during encoding; by default occurrences of
    the <UNK> id are counted.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2: {order}")
    if mode not in ("variable", "constant"):
        raise ValueError(f"unknown mode: {mode!r}")
    if smoothing not in ("interpolation", "backoff"):
        raise ValueError(f"unknown smoothing: {smoothing!r}")

    if mode == "constant":
        capacity = 0
        effective_window = 0
    else:
        if window is None:
            window = model.n_tokens
        if window < 0:
            raise ValueError(f"window must be >= 0: {window}")
        capacity = window
        effective_window = window
        if window > 0:
            model = model.at_length(window)

    # fresh run, fresh numeric-event counters
    model.diagnostics = Diagnostics()

    vocab_size = len(model.vocabulary)
    unk_id = model.vocabulary.unk_id
    state = StreamState(model, capacity, order)

    total_logp = 0.0
    total_tokens = 0
    unk_seen = 0
    seg_scores: list[SegmentScore] = []
    trace_logps: list[float] | None = [] if trace else None
    trace_ids: list[int] | None = [] if trace else None

    for si, segment in enumerate(segments):
        if reset_on_doc and si > 0:
            state.reset()
        seg_logp = 0.0
        seg_tokens = 0
        for t in segment:
            if not 0 <= t < vocab_size:
                raise ValueError(f"token id out of range for the vocabulary: {t}")
            if t == unk_id:
                unk_seen += 1
            p = state.probability(t, smoothing)
            if not (0.0 < p <= 1.0):
                raise AssertionError(
                    f"probability out of range at token {total_tokens}: {p}"
                )
            logp = math.log(p)
            seg_logp += logp
            seg_tokens += 1
            if trace_logps is not None:
                trace_logps.append(logp)
                trace_ids.append(t)
            state.advance(t)
        seg_scores.append(SegmentScore(index=si, token_count=seg_tokens, log_prob_sum=seg_logp))
        total_logp += seg_logp
        total_tokens += seg_tokens

    if total_tokens == 0:
        raise ValueError("no tokens to evaluate")

    oov = oov_count if oov_count is not None else unk_seen
    return PerplexityReport(
        perplexity=math.exp(-total_logp / total_tokens),
        token_count=total_tokens,
        log_prob_total=total_logp,
        oov_count=oov,
        oov_rate=oov / total_tokens,
        order=order,
        mode=mode,
        window=effective_window,
        smoothing=smoothing,
        scheme=model.scheme,
        reset_on_doc=reset_on_doc,
        segments=seg_scores,
        diagnostics=model.diagnostics.as_dict(),
        token_log_probs=trace_logps,
        token_ids=trace_ids,
    )


@dataclass
class SweepPoint:
    window: int
    perplexity: float
    token_count: int


def sweep(
    model: LanguageModel,
    segments: Sequence[Sequence[int]],
    windows: Sequence[int],
    order: int = 1,
    smoothing: str = "interpolation",
    reset_on_doc: bool = False,
) -> list[SweepPoint]:
    """Evaluate the same stream at several window sizes (variable mode)."""
    points = []
    for w in windows:
        report = evaluate(
            model,
            segments,
            order=order,
            mode="variable",
            window=w,
            smoothing=smoothing,
            reset_on_doc=reset_on_doc,
        )
        points.append(SweepPoint(window=w, perplexity=report.perplexity, token_count=report.token_count))
    return points


def write_sweep_csv(points: Sequence[SweepPoint], path: str, baseline: float | None = None) -> None:
    """Write window,perplexity,token_count rows; optional constant-mode row."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "perplexity", "token_count"])
        for p in points:
            writer.writerow([p.window, f"{p.perplexity:.17g}", p.token_count])
        if baseline is not None:
            writer.writerow(["constant", f"{baseline:.17g}", points[0].token_count if points else 0])
