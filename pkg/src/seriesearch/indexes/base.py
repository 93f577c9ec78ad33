"""Shared index machinery: build parameters, per-query counters, and the
leaf-grouped raw-series store."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset


@dataclass(frozen=True)
class IndexParams:
    """Build-time knobs shared by all index kinds.

    Defaults are desk-scale analogs of the usual disk-resident settings:
    100-series leaves, 16 summary segments, 16 quantized coefficients.
    """

    leaf_capacity: int = 100
    segments: int = 16
    base_cardinality: int = 2
    coefficients: int = 16
    total_bits: int = 64
    buffer_bytes: int = 4 * 1024 * 1024
    normalize: bool = True

    def __post_init__(self):
        if self.leaf_capacity < 1:
            raise ValueError("leaf capacity must be >= 1")
        if self.base_cardinality < 2 or self.base_cardinality & (self.base_cardinality - 1):
            raise ValueError("base cardinality must be a power of two >= 2")

    def to_dict(self) -> dict:
        return {
            "leaf_capacity": self.leaf_capacity,
            "segments": self.segments,
            "base_cardinality": self.base_cardinality,
            "coefficients": self.coefficients,
            "total_bits": self.total_bits,
            "buffer_bytes": self.buffer_bytes,
            "normalize": self.normalize,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IndexParams":
        return cls(**d)


@dataclass
class QueryStats:
    """Implementation-independent work counters for a single query.

    All counters only grow while the query runs. ``random_seeks`` counts
    raw reads that do not continue from the previous read position, which
    is the disk-seek analog at desk scale.
    """

    raw_series_compared: int = 0
    leaves_visited: int = 0
    bytes_read: int = 0
    random_seeks: int = 0
    lb_computations: int = 0
    _cursor: int | None = field(default=None, repr=False, compare=False)

    def record_read(self, offset_bytes: int, size_bytes: int) -> None:
        if self._cursor != offset_bytes:
            self.random_seeks += 1
        self.bytes_read += size_bytes
        self._cursor = offset_bytes + size_bytes

    def as_dict(self) -> dict:
        return {
            "raw_series_compared": self.raw_series_compared,
            "leaves_visited": self.leaves_visited,
            "bytes_read": self.bytes_read,
            "random_seeks": self.random_seeks,
            "lb_computations": self.lb_computations,
        }


class SeriesStore:
    """Raw float32 series grouped into contiguous blocks (one per leaf).

    ``block(b)`` returns the ids and values of block b; offsets are in
    series units so byte accounting is exact and stable across runs.
    """

    def __init__(self, values: np.ndarray, ids: np.ndarray, offsets: list[int]):
        self.values = values
        self.ids = ids
        self.offsets = offsets

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def count(self) -> int:
        return self.values.shape[0]

    def block(self, b: int) -> tuple[np.ndarray, np.ndarray, int]:
        """(ids, values, offset_in_series) of block ``b``."""
        start = self.offsets[b]
        end = self.offsets[b + 1] if b + 1 < len(self.offsets) else self.count
        return self.ids[start:end], self.values[start:end], start

    def row_for_id(self, series_id: int) -> np.ndarray:
        pos = self._pos_of_id()[series_id]
        return self.values[pos]

    def _pos_of_id(self) -> np.ndarray:
        cached = getattr(self, "_id_to_pos", None)
        if cached is None:
            cached = np.empty(self.count, dtype=np.int64)
            cached[self.ids] = np.arange(self.count)
            self._id_to_pos = cached
        return cached


class StoreBuilder:
    """Assembles a SeriesStore block by block through a byte-budgeted
    staging buffer, so large builds move data in bounded chunks."""

    def __init__(self, dataset: Dataset, buffer_bytes: int):
        self._dataset = dataset
        self._budget = max(int(buffer_bytes), dataset.length * 4)
        self._values = np.empty_like(dataset.values)
        self._ids = np.empty(dataset.count, dtype=np.int64)
        self._offsets: list[int] = []
        self._written = 0
        self._staged: list[np.ndarray] = []
        self._staged_bytes = 0
        self._staged_rows = 0

    def add_block(self, series_ids) -> tuple[int, int]:
        """Append one leaf's series; returns (block_index, offset)."""
        ids = np.asarray(list(series_ids), dtype=np.int64)
        offset = self._written + self._staged_rows
        self._offsets.append(offset)
        self._staged.append(ids)
        self._staged_rows += ids.size
        self._staged_bytes += int(ids.size) * self._dataset.length * 4
        if self._staged_bytes >= self._budget:
            self._flush()
        return len(self._offsets) - 1, offset

    def _flush(self) -> None:
        for ids in self._staged:
            end = self._written + ids.size
            self._values[self._written : end] = self._dataset.values[ids]
            self._ids[self._written : end] = ids
            self._written = end
        self._staged = []
        self._staged_bytes = 0
        self._staged_rows = 0

    def finish(self) -> SeriesStore:
        self._flush()
        if self._written != self._dataset.count:
            raise ValueError("store is missing series: leaves do not cover the dataset")
        return SeriesStore(self._values, self._ids, self._offsets)
