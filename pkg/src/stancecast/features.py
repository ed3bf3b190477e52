"""Structural and textual feature sets per (user, period).

Six sets are produced: FS1 activity counts with reply quantiles, FS2 the
same interactions split by the stance of the counterpart, FS3 the stance
composition of the threads the user engaged in, FS0 a TF-IDF textual
baseline over the corpus top words, and the unions FS4 (FS1+FS2+FS3) and
FS5 (FS0+FS4). Every numeric vector ends with a 3-slot one-hot of the
user's current stance, shared once inside unions.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from math import log as ln
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import (
    SENTINEL_AUTHOR,
    Entry,
    ThreadForest,
    TimePartition,
    group_user_period,
)
from .stance import STANCE_INDEX, STANCE_ORDER, Stance, StanceAssignment
from .textprep import preprocess

log = logging.getLogger("stancecast.features")

SET_IDS = ("FS0", "FS1", "FS2", "FS3", "FS4", "FS5")

# Number of features in the symbolic description (the current stance is
# one categorical feature there but occupies three one-hot slots here).
SYMBOLIC_COUNTS = {"FS0": 101, "FS1": 8, "FS2": 19, "FS3": 16, "FS4": 41, "FS5": 141}

_QUANTILE_LEVELS = (0.0, 0.25, 0.50, 0.75, 1.0)


def numeric_dim(set_id: str, vocab_width: int = 100) -> int:
    base = {"FS1": 7, "FS2": 18, "FS3": 15, "FS0": vocab_width,
            "FS4": 40, "FS5": vocab_width + 40}
    return base[set_id] + 3


def quantiles5(values: Iterable[float]) -> tuple[float, float, float, float, float]:
    """(min, Q25, Q50, Q75, max) with linear interpolation at h = (n-1)q.

    An empty multiset collapses to all zeros.
    """
    data = sorted(float(v) for v in values)
    if not data:
        return (0.0, 0.0, 0.0, 0.0, 0.0)
    n = len(data)
    out = []
    for q in _QUANTILE_LEVELS:
        h = (n - 1) * q
        lo = int(h)
        hi = min(lo + 1, n - 1)
        out.append(data[lo] + (h - lo) * (data[hi] - data[lo]))
    return tuple(out)


@dataclass(frozen=True)
class FeatureVector:
    user: str
    period: int
    set_id: str
    values: tuple[float, ...]
    current_stance: Stance


@dataclass
class UserPeriodActivity:
    posts: list[str] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    threads: set[str] = field(default_factory=set)


@dataclass
class PeriodUserIndex:
    """Per-period activity lookup derived from forest plus partition."""

    activity: dict[int, dict[str, UserPeriodActivity]]
    period_of: dict[str, int]
    thread_period_entries: dict[tuple[str, int], list[str]]

    def users(self, period: int) -> list[str]:
        return sorted(self.activity.get(period, {}))

    def user_activity(self, user: str, period: int) -> UserPeriodActivity:
        try:
            return self.activity[period][user]
        except KeyError:
            raise ValueError(f"user {user!r} is not active in period {period}") from None


def build_period_user_index(forest: ThreadForest, partition: TimePartition) -> PeriodUserIndex:
    activity: dict[int, dict[str, UserPeriodActivity]] = {
        j: {} for j in range(partition.n_periods)
    }
    period_of: dict[str, int] = {}
    thread_entries: dict[tuple[str, int], list[str]] = {}
    ordered = sorted(forest.entry_index.values(), key=lambda e: (e.timestamp, e.id))
    for entry in ordered:
        period = partition.period_of(entry.timestamp)
        if period is None:
            continue
        period_of[entry.id] = period
        slot = activity[period].setdefault(entry.author, UserPeriodActivity())
        if entry.is_post:
            slot.posts.append(entry.id)
        else:
            slot.comments.append(entry.id)
        thread = forest.thread_of[entry.id]
        slot.threads.add(thread)
        thread_entries.setdefault((thread, period), []).append(entry.id)
    return PeriodUserIndex(activity=activity, period_of=period_of,
                           thread_period_entries=thread_entries)


def _stance_onehot(stance: Stance) -> tuple[float, float, float]:
    onehot = [0.0, 0.0, 0.0]
    onehot[STANCE_INDEX[stance]] = 1.0
    return tuple(onehot)


def _current_stance(user: str, period: int, stances: StanceAssignment) -> Stance:
    stance = stances.get(user, period)
    if stance is None:
        raise ValueError(f"no stance labeled for {user!r} in period {period}")
    return stance


def _is_auto_comment(forest: ThreadForest, entry: Entry) -> bool:
    # A reply whose immediate parent the same user wrote. Unknown parents
    # cannot be auto-comments.
    if entry.parent_id is None:
        return False
    parent = forest.entry_index.get(entry.parent_id)
    return parent is not None and parent.author == entry.author


def _own_entries(
    forest: ThreadForest, activity: UserPeriodActivity
) -> tuple[list[str], list[str]]:
    """(countable entries m_i, non-auto comments) for one user-period."""
    comments = [
        cid for cid in activity.comments
        if not _is_auto_comment(forest, forest.entry_index[cid])
    ]
    entries = sorted(
        activity.posts + comments,
        key=lambda eid: (forest.entry_index[eid].timestamp, eid),
    )
    return entries, comments


def _replies_in_period(
    forest: ThreadForest, entry_id: str, period: int, period_of: Mapping[str, int]
) -> list[str]:
    stack = list(forest.children[entry_id])
    found = []
    while stack:
        node = stack.pop()
        if period_of.get(node) == period:
            found.append(node)
        stack.extend(forest.children[node])
    return found


def compute_fs1(
    user: str,
    period: int,
    forest: ThreadForest,
    index: PeriodUserIndex,
    stances: StanceAssignment,
) -> FeatureVector:
    """Activity features: initiated posts, submitted comments, reply quantiles."""
    activity = index.user_activity(user, period)
    own, comments = _own_entries(forest, activity)
    initiated = len(activity.posts)
    submitted = len(comments)
    if initiated + submitted != len(own):
        raise AssertionError("entry tally does not decompose into posts plus comments")
    reply_counts = [
        len(_replies_in_period(forest, eid, period, index.period_of)) for eid in own
    ]
    values = (float(initiated), float(submitted), *quantiles5(reply_counts))
    stance = _current_stance(user, period, stances)
    return FeatureVector(user=user, period=period, set_id="FS1",
                         values=values + _stance_onehot(stance), current_stance=stance)


def _parent_stance(
    forest: ThreadForest,
    entry: Entry,
    period: int,
    index: PeriodUserIndex,
    stances: StanceAssignment,
) -> Stance:
    """Stance bucket of the entry the comment replies to.

    Preferred: the parent author's stance in the current period; else the
    stance they held in the parent's own period. Parents outside the
    corpus or outside the time range fall into the Neutral bucket so the
    per-stance comment counts always sum to the total.
    """
    parent = forest.entry_index.get(entry.parent_id) if entry.parent_id else None
    if parent is None:
        return Stance.NEUTRAL
    stance = stances.get(parent.author, period)
    if stance is not None:
        return stance
    parent_period = index.period_of.get(parent.id)
    if parent_period is not None:
        stance = stances.get(parent.author, parent_period)
        if stance is not None:
            return stance
    return Stance.NEUTRAL


def compute_fs2(
    user: str,
    period: int,
    forest: ThreadForest,
    index: PeriodUserIndex,
    stances: StanceAssignment,
) -> FeatureVector:
    """Interaction features split by the stance of the counterpart."""
    activity = index.user_activity(user, period)
    own, comments = _own_entries(forest, activity)

    sent = {s: 0 for s in STANCE_ORDER}
    for cid in comments:
        bucket = _parent_stance(forest, forest.entry_index[cid], period, index, stances)
        sent[bucket] += 1
    if sum(sent.values()) != len(comments):
        raise AssertionError("per-stance comment counts do not sum to the total")

    received: dict[Stance, list[int]] = {s: [] for s in STANCE_ORDER}
    for eid in own:
        per_stance = {s: 0 for s in STANCE_ORDER}
        replies = _replies_in_period(forest, eid, period, index.period_of)
        for rid in replies:
            author = forest.entry_index[rid].author
            stance = stances.get(author, period)
            if stance is None:
                raise ValueError(
                    f"no stance labeled for {author!r} in period {period}; "
                    "labeling must precede feature extraction"
                )
            per_stance[stance] += 1
        if sum(per_stance.values()) != len(replies):
            raise AssertionError("per-stance reply counts do not sum to the total")
        for s in STANCE_ORDER:
            received[s].append(per_stance[s])

    values: list[float] = [float(sent[s]) for s in STANCE_ORDER]
    for s in STANCE_ORDER:
        values.extend(quantiles5(received[s]))
    stance = _current_stance(user, period, stances)
    return FeatureVector(user=user, period=period, set_id="FS2",
                         values=tuple(values) + _stance_onehot(stance),
                         current_stance=stance)


def compute_fs3(
    user: str,
    period: int,
    forest: ThreadForest,
    index: PeriodUserIndex,
    stances: StanceAssignment,
) -> FeatureVector:
    """Stance composition of the threads the user engaged in."""
    activity = index.user_activity(user, period)
    per_thread: dict[Stance, list[int]] = {s: [] for s in STANCE_ORDER}
    for thread in sorted(activity.threads):
        counts = {s: 0 for s in STANCE_ORDER}
        for eid in index.thread_period_entries.get((thread, period), ()):
            author = forest.entry_index[eid].author
            stance = stances.get(author, period)
            if stance is None:
                raise ValueError(
                    f"no stance labeled for {author!r} in period {period}; "
                    "labeling must precede feature extraction"
                )
            counts[stance] += 1
        for s in STANCE_ORDER:
            per_thread[s].append(counts[s])
    values: list[float] = []
    for s in STANCE_ORDER:
        values.extend(quantiles5(per_thread[s]))
    stance = _current_stance(user, period, stances)
    return FeatureVector(user=user, period=period, set_id="FS3",
                         values=tuple(values) + _stance_onehot(stance),
                         current_stance=stance)


def build_vocab_top_words(entries: Iterable[Entry], limit: int = 100) -> list[str]:
    """Most frequent preprocessed tokens over all given entries.

    Ties break lexicographically. With fewer than `limit` distinct tokens
    the full list comes back and the caller pads the missing columns.
    """
    counts: Counter[str] = Counter()
    for entry in entries:
        counts.update(preprocess(entry.content))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    vocab = [token for token, _ in ranked[:limit]]
    if len(vocab) < limit:
        log.warning("vocabulary has only %d distinct tokens (wanted %d); "
                    "missing columns stay zero", len(vocab), limit)
    return vocab


def build_document_index(
    entries: Iterable[Entry], partition: TimePartition
) -> dict[tuple[str, int], Counter]:
    """Preprocessed token counts of each (user, period) document.

    Documents exist for every non-sentinel user active in a period; they
    are both the TF source and the IDF document universe.
    """
    documents: dict[tuple[str, int], Counter] = {}
    for (user, period), group in group_user_period(entries, partition).items():
        if user == SENTINEL_AUTHOR:
            continue
        tokens = preprocess(" ".join(e.content for e in group))
        documents[(user, period)] = Counter(tokens)
    return documents


def build_idf(documents: Mapping[tuple[str, int], Counter], vocab: Sequence[str]) -> list[float]:
    """Smoothed inverse document frequency: ln((1+D)/(1+df)) + 1."""
    total = len(documents)
    df = {word: 0 for word in vocab}
    for counter in documents.values():
        for word in vocab:
            if counter.get(word):
                df[word] += 1
    return [ln((1 + total) / (1 + df[word])) + 1.0 for word in vocab]


def compute_fs0(
    user: str,
    period: int,
    vocab: Sequence[str],
    idf: Sequence[float],
    documents: Mapping[tuple[str, int], Counter],
    stances: StanceAssignment,
    width: int = 100,
) -> FeatureVector:
    """TF-IDF of the top corpus words over the user's period document."""
    counter = documents.get((user, period), Counter())
    values = [counter.get(word, 0) * idf[i] for i, word in enumerate(vocab)]
    values.extend(0.0 for _ in range(width - len(vocab)))
    stance = _current_stance(user, period, stances)
    return FeatureVector(user=user, period=period, set_id="FS0",
                         values=tuple(float(v) for v in values) + _stance_onehot(stance),
                         current_stance=stance)


_UNION_PARTS = {"FS4": ("FS1", "FS2", "FS3"), "FS5": ("FS0", "FS1", "FS2", "FS3")}


def assemble_union(vectors: Sequence[FeatureVector], set_id: str) -> FeatureVector:
    """Concatenate constituent numeric blocks, sharing the stance one-hot once."""
    if set_id not in _UNION_PARTS:
        raise ValueError(f"not a union set: {set_id!r}")
    by_set = {v.set_id: v for v in vectors}
    missing = [part for part in _UNION_PARTS[set_id] if part not in by_set]
    if missing:
        raise ValueError(f"{set_id} needs constituent sets {missing}")
    parts = [by_set[part] for part in _UNION_PARTS[set_id]]
    first = parts[0]
    for other in parts[1:]:
        if (other.user, other.period) != (first.user, first.period):
            raise ValueError("union constituents must describe the same user and period")
        if other.current_stance != first.current_stance:
            raise ValueError("union constituents disagree on the current stance")
    numeric: list[float] = []
    for part in parts:
        numeric.extend(part.values[:-3])
    return FeatureVector(user=first.user, period=first.period, set_id=set_id,
                         values=tuple(numeric) + _stance_onehot(first.current_stance),
                         current_stance=first.current_stance)


def extract_all(
    forest: ThreadForest,
    partition: TimePartition,
    stances: StanceAssignment,
    sets: Sequence[str] = SET_IDS,
    vocab_width: int = 100,
    vocab: Optional[list[str]] = None,
) -> dict[str, list[FeatureVector]]:
    """Compute the requested feature sets for every active (user, period).

    The sentinel user contributes to everyone else's counts but gets no
    vectors of its own. Output lists are ordered by (period, user). A
    precomputed top-word `vocab` skips the corpus scan for FS0/FS5.
    """
    unknown = [s for s in sets if s not in SET_IDS]
    if unknown:
        raise ValueError(f"unknown feature sets: {unknown}")
    index = build_period_user_index(forest, partition)
    needed = set(sets)
    if "FS4" in needed:
        needed.update(("FS1", "FS2", "FS3"))
    if "FS5" in needed:
        needed.update(("FS0", "FS1", "FS2", "FS3"))

    entries = list(forest.entry_index.values())
    idf: list[float] = []
    documents: dict[tuple[str, int], Counter] = {}
    if "FS0" in needed:
        if vocab is None:
            in_range = [e for e in entries
                        if partition.period_of(e.timestamp) is not None]
            vocab = build_vocab_top_words(in_range, limit=vocab_width)
        documents = build_document_index(entries, partition)
        idf = build_idf(documents, vocab)
    else:
        vocab = vocab or []

    out: dict[str, list[FeatureVector]] = {set_id: [] for set_id in sets}
    for period in range(partition.n_periods):
        for user in index.users(period):
            if user == SENTINEL_AUTHOR:
                continue
            computed: dict[str, FeatureVector] = {}
            if "FS1" in needed:
                computed["FS1"] = compute_fs1(user, period, forest, index, stances)
            if "FS2" in needed:
                computed["FS2"] = compute_fs2(user, period, forest, index, stances)
            if "FS3" in needed:
                computed["FS3"] = compute_fs3(user, period, forest, index, stances)
            if "FS0" in needed:
                computed["FS0"] = compute_fs0(user, period, vocab, idf, documents,
                                              stances, width=vocab_width)
            if "FS4" in needed:
                computed["FS4"] = assemble_union(
                    [computed["FS1"], computed["FS2"], computed["FS3"]], "FS4")
            if "FS5" in needed:
                computed["FS5"] = assemble_union(
                    [computed["FS0"], computed["FS1"], computed["FS2"], computed["FS3"]],
                    "FS5")
            for set_id in sets:
                out[set_id].append(computed[set_id])
    return out


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _stance_block_names(prefix: str) -> list[str]:
    names = []
    for s in STANCE_ORDER:
        names.extend(f"{prefix}^{{{s.value}{q}}}" for q in range(1, 6))
    return names


def schema_columns(set_id: str, vocab: Optional[Sequence[str]] = None,
                   vocab_width: int = 100) -> list[str]:
    """Column names per feature set, in the numeric slot order."""
    onehot = [f"c_t={s.value}" for s in STANCE_ORDER]
    fs1 = ["ID_t", "CS_t"] + [f"R_t^{q}" for q in range(1, 6)]
    fs2 = [f"CS_t^{s.value}" for s in STANCE_ORDER] + _stance_block_names("R_t")
    fs3 = _stance_block_names("UP_t")
    if set_id == "FS1":
        return fs1 + onehot
    if set_id == "FS2":
        return fs2 + onehot
    if set_id == "FS3":
        return fs3 + onehot
    if set_id == "FS0":
        words = list(vocab or [])
        words += [f"pad{i}" for i in range(vocab_width - len(words))]
        return [f"tfidf:{w}" for w in words] + onehot
    if set_id == "FS4":
        return fs1 + fs2 + fs3 + onehot
    if set_id == "FS5":
        return schema_columns("FS0", vocab, vocab_width)[:-3] + fs1 + fs2 + fs3 + onehot
    raise ValueError(f"unknown feature set {set_id!r}")


def feature_table_tsv(vectors: Sequence[FeatureVector]) -> str:
    """Render one feature set as a TSV with a (user, period, set_id, f_*) header."""
    if not vectors:
        return "user\tperiod\tset_id\n"
    width = len(vectors[0].values)
    header = ["user", "period", "set_id"] + [f"f_{i}" for i in range(width)]
    lines = ["\t".join(header)]
    for v in vectors:
        if len(v.values) != width:
            raise ValueError("mixed dimensions inside one feature table")
        row = [v.user, str(v.period), v.set_id]
        # repr is the shortest exact round-trip form of a float
        row.extend(repr(x) for x in v.values)
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def feature_table_from_tsv(text: str) -> list[FeatureVector]:
    rows = [r for r in text.splitlines() if r.strip()]
    vectors = []
    for row in rows[1:]:
        cells = row.split("\t")
        values = tuple(float(c) for c in cells[3:])
        onehot = values[-3:]
        stance = STANCE_ORDER[max(range(3), key=lambda i: onehot[i])]
        vectors.append(FeatureVector(user=cells[0], period=int(cells[1]),
                                     set_id=cells[2], values=values,
                                     current_stance=stance))
    return vectors
