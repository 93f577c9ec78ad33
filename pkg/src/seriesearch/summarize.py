"""Dimensionality-reduction summaries and their lower-bounding distances.

Four families are provided:

* PAA: per-segment means over an equal-width split.
* SAX words: PAA quantized against standard-normal breakpoints, with a
  per-segment cardinality so words can be compared after dropping low
  bits (the property that makes them indexable).
* Per-segment (mean, population std) summaries and the box bound used by
  the adaptive-segmentation tree.
* Orthonormal real DFT coefficients plus a scalar-quantization grid for
  the approximation-file index.

Every ``*_lb``/``mindist`` function returns a value guaranteed to be <=
the true Euclidean distance between the query and any series matching
the summary; this is what makes pruning safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri


# ---------------------------------------------------------------------------
# PAA

def segment_ends(n: int, w: int) -> np.ndarray:
    """End indices of an equal-width split of [0, n) into w segments.

    When w does not divide n the leading segments get one extra element,
    so the split is deterministic.
    """
    if not 1 <= w <= n:
        raise ValueError(f"need 1 <= w <= n, got w={w}, n={n}")
    base, extra = divmod(n, w)
    lengths = np.full(w, base, dtype=np.int64)
    lengths[:extra] += 1
    return np.cumsum(lengths)


def paa(s: np.ndarray, w: int) -> np.ndarray:
    """Piecewise aggregate approximation: w segment means."""
    s = np.asarray(s, dtype=np.float64)
    ends = segment_ends(s.size, w)
    starts = np.concatenate(([0], ends[:-1]))
    sums = np.add.reduceat(s, starts)
    return sums / (ends - starts)


def paa_rows(values: np.ndarray, w: int) -> np.ndarray:
    """PAA of every row of an (N, n) array, as an (N, w) array."""
    v = np.asarray(values, dtype=np.float64)
    ends = segment_ends(v.shape[1], w)
    starts = np.concatenate(([0], ends[:-1]))
    sums = np.add.reduceat(v, starts, axis=1)
    return sums / (ends - starts)


# ---------------------------------------------------------------------------
# SAX

@dataclass(frozen=True)
class Breakpoints:
    """Standard-normal quantile cuts for an alphabet of ``a`` symbols."""

    a: int
    cuts: np.ndarray

    def region(self, symbol: int) -> tuple[float, float]:
        """[low, high] bounds of a symbol's region (infinite at the ends)."""
        lo = -np.inf if symbol == 0 else float(self.cuts[symbol - 1])
        hi = np.inf if symbol == self.a - 1 else float(self.cuts[symbol])
        return lo, hi


@lru_cache(maxsize=32)
def gaussian_breakpoints(a: int) -> Breakpoints:
    """Breakpoints at the 1/a .. (a-1)/a quantiles of N(0, 1).

    ``a`` must be a power of two so symbols can be promoted one bit at a
    time.
    """
    if a < 2 or a & (a - 1) != 0:
        raise ValueError(f"alphabet size must be a power of two >= 2, got {a}")
    cuts = ndtri(np.arange(1, a) / a)
    cuts.setflags(write=False)
    return Breakpoints(a=a, cuts=cuts)


@dataclass(frozen=True)
class SaxWord:
    """A SAX word with a per-segment cardinality.

    ``symbols[i]`` is the region index of segment i at cardinality
    ``2**bits[i]``. Dropping low-order bits aligns a word down to a
    coarser cardinality.
    """

    symbols: tuple[int, ...]
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.symbols) != len(self.bits):
            raise ValueError("symbols and bits must have equal length")
        for s, b in zip(self.symbols, self.bits):
            if b < 1 or not 0 <= s < (1 << b):
                raise ValueError(f"symbol {s} out of range for {b} bits")

    @property
    def w(self) -> int:
        return len(self.symbols)

    def align_to(self, bits: tuple[int, ...]) -> "SaxWord":
        """Drop low-order bits to express this word at coarser cardinalities."""
        symbols = []
        for s, have, want in zip(self.symbols, self.bits, bits):
            if want > have:
                raise ValueError("cannot promote a word to a finer cardinality")
            symbols.append(s >> (have - want))
        return SaxWord(symbols=tuple(symbols), bits=tuple(bits))


def sax_from_paa(means: np.ndarray, bits) -> SaxWord:
    """Quantize PAA means into a SAX word at the given per-segment bits.

    Regions are left-closed above each cut: a mean equal to a cut maps to
    the upper region.
    """
    means = np.asarray(means, dtype=np.float64)
    bits = tuple(int(b) for b in bits)
    if len(bits) != means.size:
        raise ValueError("one bit width per segment required")
    symbols = []
    for m, b in zip(means, bits):
        cuts = gaussian_breakpoints(1 << b).cuts
        symbols.append(int(np.searchsorted(cuts, m, side="right")))
    return SaxWord(symbols=tuple(symbols), bits=bits)


def sax_symbols_rows(means_rows: np.ndarray, bits_per_segment: int) -> np.ndarray:
    """Symbols of every row of an (N, w) PAA array at one shared cardinality."""
    cuts = gaussian_breakpoints(1 << bits_per_segment).cuts
    return np.searchsorted(cuts, means_rows, side="right").astype(np.int64)


def sax_region_bounds(word: SaxWord) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment [low, high] region bounds of a word, as two arrays."""
    lo = np.empty(word.w)
    hi = np.empty(word.w)
    for i, (s, b) in enumerate(zip(word.symbols, word.bits)):
        lo[i], hi[i] = gaussian_breakpoints(1 << b).region(s)
    return lo, hi


def mindist_paa_isax(query_means: np.ndarray, word: SaxWord, n: int) -> float:
    """Lower bound on the distance from a query to any normalized series
    whose SAX word equals ``word``.

    Computes sqrt((n/w) * sum of squared gaps) where each gap is the
    distance from the query's segment mean to the symbol's region.
    """
    query_means = np.asarray(query_means, dtype=np.float64)
    if query_means.size != word.w:
        raise ValueError("query PAA width does not match the word")
    lo, hi = sax_region_bounds(word)
    return mindist_paa_regions(query_means, lo, hi, n)


def mindist_paa_regions(query_means: np.ndarray, lo: np.ndarray, hi: np.ndarray, n: int) -> float:
    """mindist_paa_isax against precomputed region bounds."""
    gaps = np.maximum(0.0, np.maximum(query_means - hi, lo - query_means))
    w = query_means.shape[-1]
    return float(np.sqrt((n / w) * np.dot(gaps, gaps)))


# ---------------------------------------------------------------------------
# Per-segment (mean, std) summaries

@dataclass(frozen=True)
class SegmentStats:
    """Per-segment mean and population std over a fixed segmentation.

    ``ends`` are segment end indices; the last one equals the series
    length.
    """

    ends: tuple[int, ...]
    means: np.ndarray
    stds: np.ndarray


def eapca(s: np.ndarray, ends) -> SegmentStats:
    """Mean and population std of each segment of ``s``."""
    s = np.asarray(s, dtype=np.float64)
    ends = tuple(int(e) for e in ends)
    means, stds = segment_stats_rows(s[None, :], ends)
    return SegmentStats(ends=ends, means=means[0], stds=stds[0])


def segment_stats_rows(values: np.ndarray, ends) -> tuple[np.ndarray, np.ndarray]:
    """Segment means and population stds for every row of an (N, n) array."""
    v = np.asarray(values, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.int64)
    starts = np.concatenate(([0], ends[:-1]))
    lengths = ends - starts
    if np.any(lengths < 1) or ends[-1] != v.shape[1]:
        raise ValueError("segment ends must partition [0, n) with no empty segment")
    sums = np.add.reduceat(v, starts, axis=1)
    sqsums = np.add.reduceat(v * v, starts, axis=1)
    means = sums / lengths
    var = np.maximum(sqsums / lengths - means * means, 0.0)
    return means, np.sqrt(var)


@dataclass(frozen=True)
class StatsBox:
    """Componentwise bounds on segment stats over a group of series.

    The box is what a tree node stores: per segment the min/max of the
    member means and the min/max of the member stds.
    """

    ends: tuple[int, ...]
    min_mean: np.ndarray
    max_mean: np.ndarray
    min_std: np.ndarray
    max_std: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        ends = np.asarray(self.ends, dtype=np.int64)
        return np.diff(np.concatenate(([0], ends)))

    def contains(self, stats: SegmentStats, slack: float = 1e-9) -> bool:
        return bool(
            np.all(stats.means >= self.min_mean - slack)
            and np.all(stats.means <= self.max_mean + slack)
            and np.all(stats.stds >= self.min_std - slack)
            and np.all(stats.stds <= self.max_std + slack)
        )

    def weighted_sq_diagonal(self) -> float:
        """Sum of segment-length-weighted squared box extents.

        This is the squared diameter of the box in the same metric the
        node lower bound uses, so smaller is tighter.
        """
        dm = self.max_mean - self.min_mean
        ds = self.max_std - self.min_std
        return float(np.dot(self.lengths, dm * dm + ds * ds))


def stats_box(ends, means_rows: np.ndarray, stds_rows: np.ndarray) -> StatsBox:
    """Bounding box of a group of per-segment stats."""
    return StatsBox(
        ends=tuple(int(e) for e in ends),
        min_mean=means_rows.min(axis=0),
        max_mean=means_rows.max(axis=0),
        min_std=stds_rows.min(axis=0),
        max_std=stds_rows.max(axis=0),
    )


def eapca_node_lb(query_stats: SegmentStats, box: StatsBox) -> float:
    """Lower bound on the distance from the query to every series whose
    segment stats lie inside ``box``.

    Per segment of length L the true squared distance is at least
    L * ((mean gap)^2 + (std gap)^2); gaps are distances from the query
    stat to the box interval (zero inside). The mean term follows from
    decomposing around segment means and the std term from the
    Cauchy-Schwarz inequality on the centered segments.
    """
    if query_stats.ends != box.ends:
        raise ValueError("query stats were computed on a different segmentation")
    dmu = np.maximum(
        0.0, np.maximum(query_stats.means - box.max_mean, box.min_mean - query_stats.means)
    )
    dsd = np.maximum(
        0.0, np.maximum(query_stats.stds - box.max_std, box.min_std - query_stats.stds)
    )
    return float(np.sqrt(np.dot(box.lengths, dmu * dmu + dsd * dsd)))


# ---------------------------------------------------------------------------
# Orthonormal real DFT

def dft(s: np.ndarray, l: int) -> np.ndarray:
    """First ``l`` coefficients of ``s`` in an orthonormal real DFT basis.

    Basis order: DC, then cosine/sine pairs by increasing frequency (and
    the lone alternating component for even lengths). Orthonormality
    gives Parseval equality at l = n, so truncation lower-bounds the
    Euclidean distance.
    """
    s = np.asarray(s, dtype=np.float64)
    n = s.size
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    return dft_rows(s[None, :], l)[0]


def dft_rows(values: np.ndarray, l: int) -> np.ndarray:
    """Orthonormal DFT coefficients of every row, as an (N, l) array."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[1]
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    spec = np.fft.rfft(v, axis=1)
    out = np.empty((v.shape[0], n))
    out[:, 0] = spec[:, 0].real / np.sqrt(n)
    scale = np.sqrt(2.0 / n)
    half = n // 2
    for j in range(1, half + (n % 2)):
        out[:, 2 * j - 1] = scale * spec[:, j].real
        out[:, 2 * j] = -scale * spec[:, j].imag
    if n % 2 == 0 and n > 1:
        out[:, n - 1] = spec[:, half].real / np.sqrt(n)
    return out[:, :l]


# ---------------------------------------------------------------------------
# Scalar quantization grid for DFT coefficients

_TINY_SPREAD = 1e-6


@dataclass(frozen=True)
class VaGrid:
    """Per-dimension scalar quantizer: bit widths and interior cut points.

    Dimension d has 2**bits[d] cells separated by ``cuts[d]`` (strictly
    increasing); the outermost bounds are -inf/+inf.
    """

    bits: tuple[int, ...]
    cuts: tuple[np.ndarray, ...]

    @property
    def dims(self) -> int:
        return len(self.bits)

    def cell_of(self, coeffs: np.ndarray) -> np.ndarray:
        """Cell indices of one coefficient vector."""
        return self.cells_of(np.asarray(coeffs)[None, :])[0]

    def cells_of(self, coeff_rows: np.ndarray) -> np.ndarray:
        """Cell indices of every row of an (N, l) coefficient array."""
        coeff_rows = np.asarray(coeff_rows, dtype=np.float64)
        if coeff_rows.shape[1] != self.dims:
            raise ValueError("dimension mismatch with grid")
        out = np.empty(coeff_rows.shape, dtype=np.int64)
        for d in range(self.dims):
            out[:, d] = np.searchsorted(self.cuts[d], coeff_rows[:, d], side="right")
        return out

    def cell_bounds(self, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """[low, high] interval per dimension for an (N, l) cell array."""
        cells = np.asarray(cells, dtype=np.int64)
        lo = np.empty(cells.shape)
        hi = np.empty(cells.shape)
        for d in range(self.dims):
            padded = np.concatenate(([-np.inf], self.cuts[d], [np.inf]))
            lo[:, d] = padded[cells[:, d]]
            hi[:, d] = padded[cells[:, d] + 1]
        return lo, hi


def _allocate_bits(variances: np.ndarray, total_bits: int) -> np.ndarray:
    """Greedy bit allocation: floor of 1 bit each, then hand out the rest
    one bit at a time to the dimension with the largest remaining
    variance-per-cell, which realizes a log-variance-proportional split.
    """
    dims = variances.size
    if total_bits < dims:
        raise ValueError(f"need at least one bit per dimension ({dims}), got {total_bits}")
    bits = np.ones(dims, dtype=np.int64)
    gain = variances / 4.0
    for _ in range(total_bits - dims):
        d = int(np.argmax(gain))
        if gain[d] <= 0.0:
            break
        bits[d] += 1
        gain[d] = variances[d] / float(4 ** (bits[d] + 1))
    return bits


def build_va_grid(coeff_rows: np.ndarray, total_bits: int) -> VaGrid:
    """Build a scalar-quantization grid from sample coefficient vectors.

    Bits go preferentially to high-variance dimensions; interior cuts sit
    at equi-depth quantiles of the sample. A zero-variance dimension
    keeps 1 bit with cuts in a tiny band around the constant.
    """
    coeff_rows = np.asarray(coeff_rows, dtype=np.float64)
    if coeff_rows.ndim != 2 or coeff_rows.shape[0] < 2:
        raise ValueError("need at least 2 sample summaries")
    variances = coeff_rows.var(axis=0)
    bits = _allocate_bits(variances, total_bits)
    cuts = []
    for d in range(coeff_rows.shape[1]):
        ncells = 1 << int(bits[d])
        col = coeff_rows[:, d]
        lo, hi = float(col.min()), float(col.max())
        if hi - lo < 1e-12:
            c = np.linspace(lo - _TINY_SPREAD, lo + _TINY_SPREAD, ncells - 1)
        else:
            q = np.arange(1, ncells) / ncells
            c = np.quantile(col, q)
            # enforce strict monotonicity on heavily tied samples
            step = max(1e-12, 1e-9 * (hi - lo))
            for i in range(1, c.size):
                if c[i] <= c[i - 1]:
                    c[i] = c[i - 1] + step
        arr = np.asarray(c, dtype=np.float64)
        arr.setflags(write=False)
        cuts.append(arr)
    return VaGrid(bits=tuple(int(b) for b in bits), cuts=tuple(cuts))


def va_cell_lb(query_coeffs: np.ndarray, cell: np.ndarray, grid: VaGrid) -> float:
    """Lower bound on the distance from a query to any series whose
    coefficients quantize to ``cell``.

    Per dimension the gap is the distance from the query coefficient to
    the cell interval; with the orthonormal transform the coefficient
    -space distance already lower-bounds the raw distance.
    """
    query_coeffs = np.asarray(query_coeffs, dtype=np.float64)
    lo, hi = grid.cell_bounds(np.asarray(cell, dtype=np.int64)[None, :])
    return float(va_cell_lb_rows(query_coeffs, lo, hi)[0])


def va_cell_lb_rows(query_coeffs: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """va_cell_lb against precomputed (N, l) interval bounds."""
    gaps = np.maximum(0.0, np.maximum(query_coeffs - hi, lo - query_coeffs))
    return np.sqrt(np.einsum("ij,ij->i", gaps, gaps))
