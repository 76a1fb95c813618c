"""Relative frequency estimates conditioned on observed occurrence counts.

Having seen an event n times so far in the current N-token stretch, its
estimated relative frequency is the expected total count given at-least-n
occurrences, divided by N.  With no observations this reduces to the prior
mean over N; with n = N it is exactly 1.  Across a vocabulary the estimates
need not sum to one, so a running normalizer tracks the vocabulary total.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping, Sequence

import numpy as np

from .ratemodel import RateProfile

# Tail mass at or below this is numerically exhausted: every remaining token
# would have to be this event, so the estimate clamps to 1.
TAIL_FLOOR = 1e-300


class Diagnostics:
    """Counter bag for numeric edge events worth surfacing in reports."""

    def __init__(self) -> None:
        self.counts: Counter[str] = Counter()

    def bump(self, key: str, n: int = 1) -> None:
        self.counts[key] += n

    def merge(self, other: "Diagnostics") -> None:
        self.counts.update(other.counts)

    def as_dict(self) -> dict[str, int]:
        return dict(sorted(self.counts.items()))

    def __bool__(self) -> bool:
        return bool(self.counts)


def relative_frequency(
    profile: RateProfile,
    n: int,
    diagnostics: Diagnostics | None = None,
) -> float:
    """Estimated relative frequency of an event observed n times.

    Equals E[X | X >= n] / N under the profile: the remaining mean count
    over the remaining conditional mass.  Monotone nondecreasing in n,
    anchored at mean/N for n = 0 and exactly 1 at n = N.  Once the tail has
    no representable mass left the estimate clamps to 1 (counted in
    ``diagnostics`` as "exhausted_tail").
    """
    N = profile.n_tokens
    if not 0 <= n <= N:
        raise ValueError(f"count must lie in 0..{N}: {n}")
    if n == N:
        return 1.0
    if n > profile.support_end:
        if diagnostics is not None:
            diagnostics.bump("exhausted_tail")
        return 1.0
    tail = float(profile.tail_mass[n])
    if tail <= TAIL_FLOOR:
        if diagnostics is not None:
            diagnostics.bump("exhausted_tail")
        return 1.0
    return float(profile.tail_first_moment[n]) / (N * tail)


def normalized_probability(
    profiles: Sequence[RateProfile],
    counts: Mapping[int, int],
    word_id: int,
    diagnostics: Diagnostics | None = None,
) -> float:
    """One word's share of the vocabulary-total relative frequency.

    Brute force: recomputes every word's estimate.  ``counts`` maps word id
    to its current observed count; missing ids count as zero.
    """
    total = 0.0
    for w, profile in enumerate(profiles):
        total += relative_frequency(profile, counts.get(w, 0), diagnostics)
    return relative_frequency(profiles[word_id], counts.get(word_id, 0), diagnostics) / total


class VocabularyNormalizer:
    """Running sum of relative-frequency estimates across the vocabulary.

    Holds one contribution per word; ``update`` adjusts a single word's
    contribution in O(1) when its count changes by one.  The observed counts
    themselves live with the caller; this class only mirrors the estimates.
    """

    def __init__(
        self,
        profiles: Sequence[RateProfile],
        counts: Mapping[int, int] | None = None,
        diagnostics: Diagnostics | None = None,
    ):
        self.profiles = list(profiles)
        self.diagnostics = diagnostics
        counts = counts or {}
        self._contrib = np.array(
            [
                relative_frequency(p, counts.get(w, 0), diagnostics)
                for w, p in enumerate(self.profiles)
            ],
            dtype=np.float64,
        )
        self._total = float(self._contrib.sum())

    @property
    def total(self) -> float:
        return self._total

    def contribution(self, word_id: int) -> float:
        return float(self._contrib[word_id])

    def probability(self, word_id: int) -> float:
        return float(self._contrib[word_id]) / self._total

    def update(self, word_id: int, old_n: int, new_n: int) -> None:
        """Replace one word's contribution after its count moves old_n -> new_n.

        Counts change one occurrence at a time; anything but a step of one
        (or a no-op) indicates the caller lost track and raises.
        """
        if new_n == old_n:
            return
        if abs(new_n - old_n) != 1:
            raise ValueError(
                f"count for word {word_id} must change by one step: {old_n} -> {new_n}"
            )
        new_f = relative_frequency(self.profiles[word_id], new_n, self.diagnostics)
        self._total += new_f - float(self._contrib[word_id])
        self._contrib[word_id] = new_f

    def recompute(self, counts: Mapping[int, int]) -> float:
        """Fresh brute-force total for the given counts; does not mutate state."""
        return float(
            sum(
                relative_frequency(p, counts.get(w, 0))
                for w, p in enumerate(self.profiles)
            )
        )
