"""Tree index over variable-cardinality SAX words.

Series enter the tree under their word at the base cardinality; a full
leaf splits by promoting one segment's cardinality by one bit, sending
each member to the child matching its next symbol bit. Leaves whose
members share one word even at the maximum cardinality are allowed to
overflow (flagged) instead of failing the build.
"""

from __future__ import annotations

import numpy as np

from ..core import Dataset, z_normalize
from ..summarize import (
    gaussian_breakpoints,
    mindist_paa_regions,
    paa,
    paa_rows,
    sax_symbols_rows,
)
from .base import IndexParams, SeriesStore, StoreBuilder

MAX_CARDINALITY = 256
_MAX_BITS = 8


class IsaxNode:
    __slots__ = (
        "symbols", "bits", "split_segment", "children", "ids",
        "overflow", "node_id", "block", "offset", "_lo", "_hi",
    )

    def __init__(self, symbols: tuple[int, ...], bits: tuple[int, ...]):
        self.symbols = symbols
        self.bits = bits
        self.split_segment: int | None = None
        self.children: dict[int, IsaxNode] = {}
        self.ids: list[int] = []
        self.overflow = False
        self.node_id = -1
        self.block = -1
        self.offset = -1
        self._lo: np.ndarray | None = None
        self._hi: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.split_segment is None

    def region_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self._lo is None:
            w = len(self.symbols)
            lo = np.empty(w)
            hi = np.empty(w)
            for i, (s, b) in enumerate(zip(self.symbols, self.bits)):
                lo[i], hi[i] = gaussian_breakpoints(1 << b).region(s)
            self._lo, self._hi = lo, hi
        return self._lo, self._hi

    def min_dist(self, ctx: "IsaxQueryContext") -> float:
        lo, hi = self.region_bounds()
        return mindist_paa_regions(ctx.paa, lo, hi, ctx.length)

    def child_list(self) -> list["IsaxNode"]:
        return [self.children[b] for b in (0, 1) if b in self.children]


class IsaxQueryContext:
    """Per-query scratch: the (optionally normalized) query and its PAA."""

    def __init__(self, index: "IsaxIndex", query: np.ndarray):
        q = np.asarray(query, dtype=np.float32)
        if q.shape != (index.length,):
            raise ValueError("query length does not match the index")
        if index.normalized:
            q = z_normalize(q)
        self.query = q
        self.paa = paa(q, index.params.segments)
        self.length = index.length


class IsaxIndex:
    kind = "isax"

    def __init__(self, params: IndexParams, length: int, normalized: bool,
                 roots: dict[tuple[int, ...], IsaxNode], store: SeriesStore,
                 dataset_digest: str):
        self.params = params
        self.length = length
        self.normalized = normalized
        self.roots = roots
        self.store = store
        self.dataset_digest = dataset_digest
        self._root_list = [roots[k] for k in sorted(roots)]
        self._assign_ids()

    # -- query surface ------------------------------------------------

    @property
    def count(self) -> int:
        return self.store.count

    def query_context(self, query: np.ndarray) -> IsaxQueryContext:
        return IsaxQueryContext(self, query)

    def root_entries(self, ctx: IsaxQueryContext) -> list[tuple[float, IsaxNode]]:
        """Lower bounds of all materialized root children, batch-computed."""
        if not self._root_list:
            return []
        lo = np.stack([node.region_bounds()[0] for node in self._root_list])
        hi = np.stack([node.region_bounds()[1] for node in self._root_list])
        gaps = np.maximum(0.0, np.maximum(ctx.paa - hi, lo - ctx.paa))
        w = self.params.segments
        bounds = np.sqrt((self.length / w) * np.einsum("ij,ij->i", gaps, gaps))
        return [(float(b), node) for b, node in zip(bounds, self._root_list)]

    def leaf_block(self, node: IsaxNode) -> tuple[np.ndarray, np.ndarray, int]:
        return self.store.block(node.block)

    def leaves(self) -> list[IsaxNode]:
        out = []
        stack = list(reversed(self._root_list))
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(reversed(node.child_list()))
        return out

    @property
    def leaf_count(self) -> int:
        return len(self.leaves())

    def summary_bytes(self) -> int:
        """Rough in-memory footprint of words and node metadata."""
        n_nodes = sum(1 for _ in self._walk())
        return n_nodes * (2 * self.params.segments + 16)

    def _walk(self):
        stack = list(self._root_list)
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.child_list())

    def _assign_ids(self) -> None:
        i = 0
        stack = list(reversed(self._root_list))
        while stack:
            node = stack.pop()
            node.node_id = i
            i += 1
            stack.extend(reversed(node.child_list()))


def _full_symbols(dataset: Dataset, params: IndexParams) -> np.ndarray:
    means = paa_rows(dataset.values, params.segments)
    return sax_symbols_rows(means, _MAX_BITS)


def _symbols_at(full_row: np.ndarray, bits: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(int(s) >> (_MAX_BITS - b) for s, b in zip(full_row, bits))


def _next_bit(full_row: np.ndarray, segment: int, bits: int) -> int:
    return (int(full_row[segment]) >> (_MAX_BITS - bits - 1)) & 1


def _choose_split(node: IsaxNode, full: np.ndarray) -> int | None:
    """Segment to promote, or None when members share one max-cardinality
    word. Prefers the most balanced split; if nothing separates at one
    extra bit, picks the segment that diverges after the fewest
    promotions so single-child hops stay bounded.
    """
    members = np.asarray(node.ids, dtype=np.int64)
    count = members.size
    best_seg, best_balance = None, None
    for seg in range(len(node.bits)):
        b = node.bits[seg]
        if b >= _MAX_BITS:
            continue
        bit_vals = (full[members, seg] >> (_MAX_BITS - b - 1)) & 1
        ones = int(bit_vals.sum())
        balance = abs(count - 2 * ones)
        if best_balance is None or balance < best_balance:
            best_seg, best_balance = seg, balance
    if best_seg is None:
        return None
    if best_balance < count:
        return best_seg
    # No single promotion separates the members; find the segment whose
    # symbols diverge at the shallowest depth, if any.
    best_depth = None
    deep_seg = None
    for seg in range(len(node.bits)):
        syms = full[members, seg]
        for depth in range(node.bits[seg] + 1, _MAX_BITS + 1):
            shifted = syms >> (_MAX_BITS - depth)
            if not np.all(shifted == shifted[0]):
                if best_depth is None or depth - node.bits[seg] < best_depth:
                    best_depth = depth - node.bits[seg]
                    deep_seg = seg
                break
    return deep_seg


def build_isax(dataset: Dataset, params: IndexParams = IndexParams()) -> IsaxIndex:
    """Build the SAX-word tree by inserting series in id order.

    Deterministic for a fixed dataset and parameters.
    """
    data = dataset.normalize() if params.normalize else dataset
    full = _full_symbols(data, params)
    base_bits = tuple([params.base_cardinality.bit_length() - 1] * params.segments)

    roots: dict[tuple[int, ...], IsaxNode] = {}

    def descend(series_id: int) -> None:
        key = _symbols_at(full[series_id], base_bits)
        node = roots.get(key)
        if node is None:
            node = IsaxNode(key, base_bits)
            roots[key] = node
        while not node.is_leaf:
            seg = node.split_segment
            bit = _next_bit(full[series_id], seg, node.bits[seg])
            child = node.children.get(bit)
            if child is None:
                bits = list(node.bits)
                bits[seg] += 1
                syms = list(node.symbols)
                syms[seg] = (syms[seg] << 1) | bit
                child = IsaxNode(tuple(syms), tuple(bits))
                node.children[bit] = child
            node = child
        node.ids.append(series_id)
        while len(node.ids) > params.leaf_capacity:
            seg = _choose_split(node, full)
            if seg is None:
                # members share one word even at max cardinality
                node.overflow = True
                break
            node.overflow = False
            node.split_segment = seg
            members = node.ids
            node.ids = []
            nxt = None
            for sid in members:
                bit = _next_bit(full[sid], seg, node.bits[seg])
                child = node.children.get(bit)
                if child is None:
                    bits = list(node.bits)
                    bits[seg] += 1
                    syms = list(node.symbols)
                    syms[seg] = (syms[seg] << 1) | bit
                    child = IsaxNode(tuple(syms), tuple(bits))
                    node.children[bit] = child
                child.ids.append(sid)
            # continue splitting whichever child is itself too large
            for child in node.child_list():
                if len(child.ids) > params.leaf_capacity:
                    nxt = child
            if nxt is None:
                break
            node = nxt

    for sid in range(data.count):
        descend(sid)

    builder = StoreBuilder(data, params.buffer_bytes)
    ordered_roots = [roots[k] for k in sorted(roots)]
    stack = list(reversed(ordered_roots))
    while stack:
        node = stack.pop()
        if node.is_leaf:
            node.block, node.offset = builder.add_block(node.ids)
        else:
            stack.extend(reversed(node.child_list()))
    store = builder.finish()

    from .storage import dataset_digest

    return IsaxIndex(params, data.length, params.normalize, roots, store,
                     dataset_digest(data))
