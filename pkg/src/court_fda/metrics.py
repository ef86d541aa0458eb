"""Partition agreement and cluster cohesion measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from court_fda.ingest import POSITION_ORDER


@dataclass(frozen=True)
class Partition:
    """Integer category labels with optional display names.

    Labels are non-negative; the category count is max(label) + 1 unless
    explicit names fix it (allowing empty trailing categories).
    """

    labels: np.ndarray
    label_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or len(labels) == 0:
            raise ValueError("labels must be a non-empty 1-D integer array")
        if labels.min() < 0:
            raise ValueError("labels must be non-negative")
        if self.label_names is not None and labels.max() >= len(self.label_names):
            raise ValueError("label exceeds the named category count")

    @property
    def n_categories(self) -> int:
        if self.label_names is not None:
            return len(self.label_names)
        return int(self.labels.max()) + 1


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(np.asarray(p, dtype=int))


def confusion_matrix(a, b) -> np.ndarray:
    """Count matrix: entry (i, j) counts points labeled i in a and j in b."""
    pa, pb = _as_partition(a), _as_partition(b)
    if len(pa.labels) != len(pb.labels):
        raise ValueError(f"partition lengths differ: {len(pa.labels)} vs {len(pb.labels)}")
    out = np.zeros((pa.n_categories, pb.n_categories), dtype=int)
    np.add.at(out, (pa.labels, pb.labels), 1)
    return out


def _comb2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected pair-counting agreement between two partitions.

    When the correction denominator vanishes (both partitions are
    all-singletons or single-cluster), returns 1.0 if the partitions are
    identical as set partitions and 0.0 otherwise.
    """
    cm = confusion_matrix(a, b).astype(float)
    n = cm.sum()
    if n < 2:
        raise ValueError("adjusted Rand index needs at least 2 points")
    sum_cells = _comb2(cm).sum()
    sum_rows = _comb2(cm.sum(axis=1)).sum()
    sum_cols = _comb2(cm.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / _comb2(np.array(n))
    denom = 0.5 * (sum_rows + sum_cols) - expected
    if denom == 0.0:
        nz = cm > 0
        same = bool(np.all(nz.sum(axis=1) <= 1)) and bool(np.all(nz.sum(axis=0) <= 1))
        return 1.0 if same else 0.0
    return float((sum_cells - expected) / denom)


def silhouette(dist: np.ndarray, labels) -> tuple[np.ndarray, float]:
    """Per-point silhouette values and their unweighted mean.

    a(i) is the mean distance to the rest of i's cluster, b(i) the
    smallest mean distance to any other cluster, and
    s(i) = (b - a) / max(a, b). Members of singleton clusters score 0,
    as do points whose a and b both vanish.
    """
    p = _as_partition(labels)
    d = np.asarray(dist, dtype=float)
    n = len(p.labels)
    if d.shape != (n, n):
        raise ValueError(f"distance matrix shape {d.shape} does not match {n} labels")
    present = np.unique(p.labels)
    if len(present) < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    members = {c: np.nonzero(p.labels == c)[0] for c in present}
    s = np.zeros(n)
    for i in range(n):
        own = members[p.labels[i]]
        if len(own) == 1:
            continue
        a = d[i, own].sum() / (len(own) - 1)
        b = min(d[i, members[c]].mean() for c in present if c != p.labels[i])
        top = max(a, b)
        s[i] = 0.0 if top == 0.0 else (b - a) / top
    return s, float(s.mean())


def per_cluster_silhouette(values: np.ndarray, labels) -> dict[int, float]:
    """Mean silhouette per cluster, keyed by cluster label."""
    p = _as_partition(labels)
    return {int(c): float(values[p.labels == c].mean()) for c in np.unique(p.labels)}


def positions_partition(records: Sequence) -> Partition:
    """Partition of player records by aggregated position, in canonical order."""
    index = {pos: i for i, pos in enumerate(POSITION_ORDER)}
    labels = np.array([index[r.position] for r in records], dtype=int)
    return Partition(labels, tuple(pos.value for pos in POSITION_ORDER))
