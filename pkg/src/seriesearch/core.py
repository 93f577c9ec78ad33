"""Series containers, Euclidean distance, Z-normalization, and the
brute-force k-NN oracle.

Series values are stored in single precision; every distance is
accumulated in double precision. All functions are pure and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Population std below this is treated as a constant series.
_CONST_STD = 1e-12

# Returned by squared_distance_early_abandon when the running sum exceeds
# the threshold before the scan completes.
ABANDONED = object()


@dataclass(frozen=True)
class Dataset:
    """A collection of equal-length series addressed by dense ids 0..N-1.

    ``values`` is an (N, n) float32 array; row i is the series with id i.
    """

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("dataset must be a non-empty 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def nbytes(self) -> int:
        return self.values.nbytes

    def series(self, i: int) -> np.ndarray:
        """Values of the series with id ``i`` (a view, do not mutate)."""
        return self.values[i]

    def normalize(self) -> "Dataset":
        """Z-normalize every series (constant rows become all zeros)."""
        if self.normalized:
            return self
        return Dataset(z_normalize_rows(self.values), normalized=True)


@dataclass(frozen=True)
class KnnResult:
    """Ranked k-NN answer: (id, distance) pairs sorted by distance, ties
    broken by ascending id.

    ``padded`` is set when fewer than k series exist in the collection.
    """

    neighbors: tuple[tuple[int, float], ...]
    k: int
    padded: bool = False

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.neighbors)

    @property
    def distances(self) -> tuple[float, ...]:
        return tuple(d for _, d in self.neighbors)


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two equal-length series."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.sqrt(np.dot(diff, diff)))


def squared_distance_early_abandon(a: np.ndarray, b: np.ndarray, threshold: float):
    """Squared Euclidean distance, or ABANDONED once it exceeds ``threshold``.

    Returns the exact squared distance whenever it is <= threshold. The
    scan proceeds in small blocks so a faraway candidate is rejected
    after touching only a prefix of its values.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    total = 0.0
    block = 8
    for start in range(0, diff.size, block):
        seg = diff[start : start + block]
        total += float(np.dot(seg, seg))
        if total > threshold:
            return ABANDONED
    return total


def z_normalize(s: np.ndarray) -> np.ndarray:
    """Z-normalize one series to mean 0, population std 1 (float32).

    A constant series (population std < 1e-12) maps to all zeros so bulk
    pipelines never abort on degenerate input.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("expected a non-empty 1-D series")
    mean = s.mean()
    std = s.std()
    if std < _CONST_STD:
        return np.zeros(s.size, dtype=np.float32)
    return ((s - mean) / std).astype(np.float32)


def z_normalize_rows(values: np.ndarray) -> np.ndarray:
    """Row-wise z_normalize for an (N, n) array."""
    v = np.asarray(values, dtype=np.float64)
    mean = v.mean(axis=1, keepdims=True)
    std = v.std(axis=1, keepdims=True)
    constant = std[:, 0] < _CONST_STD
    std[constant] = 1.0
    out = (v - mean) / std
    out[constant] = 0.0
    return out.astype(np.float32)


def distances_to_all(values: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Euclidean distances from ``query`` to every row of ``values`` (float64)."""
    diff = values.astype(np.float64) - np.asarray(query, dtype=np.float64)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def knn_bruteforce(dataset: Dataset, query: np.ndarray, k: int) -> KnnResult:
    """Exact k-NN by scanning the whole dataset; the ground-truth oracle.

    Ties are broken by ascending id so results are deterministic and
    comparable across methods.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query)
    if query.shape != (dataset.length,):
        raise ValueError("query length does not match dataset")
    dists = distances_to_all(dataset.values, query)
    order = np.lexsort((np.arange(dataset.count), dists))
    top = order[: min(k, dataset.count)]
    neighbors = tuple((int(i), float(dists[i])) for i in top)
    return KnnResult(neighbors=neighbors, k=k, padded=k > dataset.count)
