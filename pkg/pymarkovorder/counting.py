"""Sliding-window string counts, empirical entropies and maximum likelihood.

Window conventions: ``N_m(a_1^d)`` counts the occurrences of ``a_1^d`` among
the ``m - d + 1`` length-``d`` windows of ``x_1^m``. Conditional quantities of
order ``k`` use ``N_n`` for the ``(k+1)``-strings and ``N_{n-1}`` for their
``k``-contexts, and ``N_{n-1}(a_1^k) = sum_a N_n(a_1^k a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.special as sps

from pymarkovorder.core import Alphabet, Sample, check_code_depth
from pymarkovorder.exceptions import EmptyWindowError, InputRangeError

if TYPE_CHECKING:
    IntArray = npt.NDArray[np.int64]

FloatArray = npt.NDArray[np.float64]
LN2 = math.log(2.0)

__all__ = [
    "CountTable",
    "SampleCounts",
    "ConditionalCounts",
    "count_table",
    "empirical_prob",
    "empirical_cond_prob",
    "empirical_entropy",
    "empirical_cond_entropy",
    "log_ml",
    "log_ml_profile",
    "block_entropy_profile",
]


@dataclass(frozen=True, eq=False)
class CountTable:
    """Occurrence counts ``N_m(a_1^d)`` of the depth-``d`` strings of ``x_1^m``.

    Strings with zero count are absent. ``codes`` are sorted base-``|A|``
    string codes and ``values`` the matching counts.
    """

    alphabet: Alphabet
    depth: int
    window_len: int
    codes: IntArray = field(repr=False)
    values: IntArray = field(repr=False)

    @property
    def total(self) -> int:
        """Sum of all counts, ``m - d + 1``."""
        return int(self.values.sum())

    def as_dict(self) -> dict[str, int]:
        """Counts keyed by the text form of the strings."""
        return {
            self.alphabet.decode(int(c), self.depth): int(v)
            for c, v in zip(self.codes, self.values)
        }

    def __getitem__(self, key: str) -> int:
        if len(key) != self.depth:
            raise EmptyWindowError(len(key), self.depth)
        code = self.alphabet.code(key)
        i = int(np.searchsorted(self.codes, code))
        if i < self.codes.size and self.codes[i] == code:
            return int(self.values[i])
        return 0


class ConditionalCounts(NamedTuple):
    """Counts behind the order-``k`` empirical conditional law.

    Attributes
    ----------
    joint_codes : numpy.ndarray
        Sorted codes of the ``(k+1)``-strings present in ``x_1^n``.
    joint_counts : numpy.ndarray
        ``N_n(a_1^{k+1})`` for each joint code.
    context_counts : numpy.ndarray
        ``N_{n-1}(a_1^k)`` of the context of each joint code (``n`` when ``k = 0``).
    """

    joint_codes: IntArray
    joint_counts: IntArray
    context_counts: IntArray


class SampleCounts:
    """Cache of rolling string codes of one sample for every depth.

    Codes of depth ``d + 1`` are built from those of depth ``d`` in one pass,
    ``code_{d+1}[i] = |A| * code_d[i] + x[i + d]``, so evaluating all
    candidate orders costs ``O(n * k_max)``.

    Parameters
    ----------
    sample : Sample
        The sample to count.
    """

    def __init__(self, sample: Sample) -> None:
        self.sample = sample
        self.size = sample.alphabet.size
        self._codes: dict[int, IntArray] = {1: sample.data}
        self._conditional: dict[int, ConditionalCounts] = {}

    def codes(self, depth: int) -> IntArray:
        """Codes of the ``n - depth + 1`` windows of length ``depth`` in time order."""
        if depth < 1 or depth > self.sample.n:
            raise EmptyWindowError(depth, self.sample.n)
        check_code_depth(depth, self.size)
        top = max(d for d in self._codes if d <= depth)
        x = self.sample.data
        codes = self._codes[top]
        for d in range(top, depth):
            codes = codes[:-1] * self.size + x[d:]
            self._codes[d + 1] = codes
        return self._codes[depth]

    def table(self, depth: int, window_len: int | None = None) -> CountTable:
        """Count table of the depth-``depth`` strings of ``x_1^m``."""
        m = self.sample.n if window_len is None else window_len
        if not 1 <= m <= self.sample.n:
            raise InputRangeError("window_len", f"1 <= m <= n = {self.sample.n}", m)
        if not 1 <= depth <= m:
            raise EmptyWindowError(depth, m)
        codes = self.codes(depth)[: m - depth + 1]
        uniq, counts = np.unique(codes, return_counts=True)
        return CountTable(self.sample.alphabet, depth, m, uniq, counts.astype("i8"))

    def conditional(self, k: int) -> ConditionalCounts:
        """Joint and context counts of the order-``k`` conditional law."""
        n = self.sample.n
        if not 0 <= k <= n - 1:
            raise InputRangeError("k", f"0 <= k <= n - 1 = {n - 1}", k)
        if k in self._conditional:
            return self._conditional[k]
        check_code_depth(k + 1, self.size, order=k)
        joint, counts = np.unique(self.codes(k + 1), return_counts=True)
        _, inverse = np.unique(joint // self.size, return_inverse=True)
        totals = np.bincount(inverse, weights=counts).astype("i8")
        result = ConditionalCounts(joint, counts.astype("i8"), totals[inverse])
        self._conditional[k] = result
        return result

    def log_ml(self, k: int) -> float:
        """``log2 ML_k`` of the sample."""
        cc = self.conditional(k)
        n_log_n = sps.xlogy(cc.joint_counts, cc.joint_counts).sum()
        ctx_log = sps.xlogy(cc.joint_counts, cc.context_counts).sum()
        value = float((n_log_n - ctx_log) / LN2)
        return min(value, 0.0)

    def windows_distinct(self, depth: int) -> bool:
        """Whether every depth-``depth`` string occurs at most once in the sample."""
        if depth < 1:
            return False
        codes = self.codes(depth)
        return bool(np.unique(codes).size == codes.size)


def _counts(sample: Sample | SampleCounts) -> SampleCounts:
    return sample if isinstance(sample, SampleCounts) else SampleCounts(sample)


def count_table(sample: Sample, depth: int, window_len: int | None = None) -> CountTable:
    """Count the depth-``depth`` strings of ``x_1^m``.

    Parameters
    ----------
    sample : Sample
        The sample.
    depth : int
        String length ``d >= 1``.
    window_len : int, optional
        Window length ``m`` with ``d <= m <= n``, defaults to ``n``.

    Returns
    -------
    CountTable
        Counts of the strings present in the window.

    Examples
    --------
    >>> count_table(Sample.from_string("aaaa", 11), 2).as_dict()
    {'aa': 3}
    """
    return _counts(sample).table(depth, window_len)


def empirical_prob(sample: Sample, k: int) -> dict[str, float]:
    """Empirical probabilities ``N_n(a_1^k) / (n - k + 1)`` of the ``k``-strings."""
    table = count_table(sample, k)
    return {s: c / table.total for s, c in table.as_dict().items()}


def empirical_cond_prob(sample: Sample, k: int) -> dict[tuple[str, str], float]:
    """Empirical conditional probabilities keyed by ``(context, symbol)``.

    Contexts never followed by a symbol in the sample are absent. For
    ``k = 0`` the context is the empty string and the values are the
    empirical symbol frequencies.
    """
    sc = _counts(sample)
    cc = sc.conditional(k)
    alphabet = sample.alphabet
    size = alphabet.size
    out: dict[tuple[str, str], float] = {}
    for code, count, total in zip(cc.joint_codes, cc.joint_counts, cc.context_counts):
        ctx, sym = divmod(int(code), size)
        out[(alphabet.decode(ctx, k), alphabet.symbols[sym])] = int(count) / int(total)
    return out


def empirical_entropy(sample: Sample | SampleCounts, k: int) -> float:
    """The ``k``-order empirical entropy ``H_k`` in bits, ``1 <= k <= n``."""
    sc = _counts(sample)
    counts = sc.table(k).values.astype("f8")
    p = counts / counts.sum()
    return max(float(-sps.xlogy(p, p).sum() / LN2), 0.0)


def empirical_cond_entropy(sample: Sample | SampleCounts, k: int) -> float:
    """The ``k``-order empirical conditional entropy ``h_k`` in bits, ``0 <= k <= n - 1``.

    The ``(k+1)``-string frequencies use the divisor ``n - k`` so that
    ``log2 ML_k = -(n - k) h_k`` holds exactly.
    """
    sc = _counts(sample)
    return -sc.log_ml(k) / (sc.sample.n - k)


def log_ml(sample: Sample | SampleCounts, k: int) -> float:
    """``log2`` of the order-``k`` maximum likelihood of the sample.

    Examples
    --------
    >>> log_ml(Sample.from_string("0100"), 1)
    -2.0
    """
    return _counts(sample).log_ml(k)


def log_ml_profile(sample: Sample | SampleCounts, k_max: int) -> FloatArray:
    """``log2 ML_k`` for ``k = 0..k_max``."""
    sc = _counts(sample)
    return np.array([sc.log_ml(k) for k in range(k_max + 1)], dtype="f8")


def block_entropy_profile(sample: Sample | SampleCounts, k_max: int) -> FloatArray:
    """Empirical entropies ``H_k`` for ``k = 1..k_max`` (index ``k - 1``)."""
    sc = _counts(sample)
    return np.array([empirical_entropy(sc, k) for k in range(1, k_max + 1)], dtype="f8")
