"""Information criteria (PML, NML and KT) and the arg-min order estimator."""
from __future__ import annotations

import functools
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Literal, Union

import numpy as np
import pandas as pd
import scipy.special as sps

from pymarkovorder.core import Alphabet, PenaltySpec, Sample, check_code_depth, max_code_depth
from pymarkovorder.counting import SampleCounts
from pymarkovorder.exceptions import CapacityError, InputRangeError, InputValueError

if TYPE_CHECKING:
    import numpy.typing as npt

    IntArray = npt.NDArray[np.int64]
    CriterionKind = Literal["pml", "nml", "kt"]

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9
NML_BUDGET = 2**22
NML_CHUNK = 2**16
EXACT_MULTINOMIAL_MAX = 1024
LN2 = math.log(2.0)

__all__ = [
    "Criterion",
    "OrderEstimate",
    "pml_score",
    "kt_log_prob",
    "kt_log_prob_closed_form",
    "kt_prob_exact",
    "kt_score",
    "kt_ml_gap",
    "nml_log_normalizer",
    "nml_score",
    "estimate_order",
]


@dataclass(frozen=True)
class Criterion:
    """An information criterion selecting a Markov order.

    Parameters
    ----------
    kind : {"pml", "nml", "kt"}
        Criterion family.
    penalty : PenaltySpec, optional
        Penalty of the PML criterion, defaults to BIC.
    budget : int, optional
        Enumeration budget of the NML normalizer, defaults to ``2**22``.

    Examples
    --------
    >>> Criterion.parse("pml:power:0.6").label
    'pml:power:0.6'
    >>> Criterion.parse("bic").penalty.variant
    'bic'
    """

    kind: CriterionKind
    penalty: PenaltySpec = field(default_factory=PenaltySpec.bic)
    budget: int = NML_BUDGET

    def __post_init__(self) -> None:
        if self.kind not in ("pml", "nml", "kt"):
            raise InputValueError("criterion", ("pml", "nml", "kt"), self.kind)

    @classmethod
    def parse(cls, text: str, budget: int = NML_BUDGET) -> Criterion:
        """Parse ``pml[:<penalty>]``, ``nml``, ``kt`` or a bare penalty such as ``bic``."""
        name, _, rest = text.strip().lower().partition(":")
        if name in ("nml", "kt"):
            return cls(name, budget=budget)  # pyright: ignore[reportArgumentType]
        if name == "pml":
            return cls("pml", PenaltySpec.parse(rest or "bic"), budget)
        return cls("pml", PenaltySpec.parse(text), budget)

    @property
    def label(self) -> str:
        """Text form accepted by :meth:`parse`."""
        return f"pml:{self.penalty.label}" if self.kind == "pml" else self.kind

    def score(self, sample: Sample | SampleCounts, k: int) -> float:
        """Criterion value at order ``k`` in bits."""
        if self.kind == "pml":
            return pml_score(sample, k, self.penalty)
        if self.kind == "kt":
            return kt_score(sample, k)
        return nml_score(sample, k, self.budget)


@dataclass(frozen=True)
class OrderEstimate:
    """Outcome of an order estimation.

    Attributes
    ----------
    chosen_k : int
        The smallest minimizer of the scores.
    scores : tuple of (int, float)
        Criterion value for every evaluated order, in increasing order.
    bound_used : int
        The cap ``r`` on the candidate orders.
    criterion : Criterion
        The criterion that was minimized.
    pruned_at : int or None
        Largest evaluated order when a pruned scan stopped before
        ``bound_used`` because no larger order could win.
    """

    chosen_k: int
    scores: tuple[tuple[int, float], ...]
    bound_used: int
    criterion: Criterion
    pruned_at: int | None = None

    @property
    def score_min(self) -> float:
        return dict(self.scores)[self.chosen_k]

    def to_frame(self) -> pd.DataFrame:
        """Score trace with columns ``k`` and ``score``."""
        return pd.DataFrame(list(self.scores), columns=["k", "score"])


def _counts(sample: Sample | SampleCounts) -> SampleCounts:
    return sample if isinstance(sample, SampleCounts) else SampleCounts(sample)


def pml_score(sample: Sample | SampleCounts, k: int, pen: PenaltySpec) -> float:
    """Penalized maximum likelihood ``(n - k) h_k + (|A| - 1) |A|**k pen(n)``.

    Examples
    --------
    >>> round(pml_score(Sample.from_string("0100"), 0, PenaltySpec.bic()), 6)
    4.245112
    >>> pml_score(Sample.from_string("0100"), 1, PenaltySpec.bic())
    4.0
    """
    sc = _counts(sample)
    size = sc.size
    check_code_depth(k + 1, size, order=k)
    return -sc.log_ml(k) + (size - 1) * float(size) ** k * pen(sc.sample.n)


def _prior_counts(codes: IntArray) -> IntArray:
    """Number of earlier positions holding the same code, for each position."""
    order = np.argsort(codes, kind="stable")
    ordered = codes[order]
    idx = np.arange(codes.size)
    first = np.ones(codes.size, dtype=bool)
    first[1:] = ordered[1:] != ordered[:-1]
    start = np.maximum.accumulate(np.where(first, idx, 0))
    out = np.empty_like(idx)
    out[order] = idx - start
    return out


def kt_log_prob(sample: Sample | SampleCounts, k: int) -> float:
    """``log2`` of the order-``k`` Krichevsky-Trofimov probability.

    The probability is accumulated as the product of the add-1/2 sequential
    predictions over positions ``k+1..n`` with counts taken over the
    preceding positions, times ``|A|**-k`` for the first ``k`` symbols.

    Examples
    --------
    >>> kt_log_prob(Sample.from_string("0", 2), 0)
    -1.0
    >>> kt_log_prob(Sample.from_string("00"), 1)
    -2.0
    """
    sc = _counts(sample)
    n, size = sc.sample.n, sc.size
    if not 0 <= k <= n - 1:
        raise InputRangeError("k", f"0 <= k <= n - 1 = {n - 1}", k)
    check_code_depth(k + 1, size, order=k)
    joint = sc.codes(k + 1)
    contexts = joint // size if k > 0 else np.zeros_like(joint)
    num = np.log2(_prior_counts(joint) + 0.5)
    den = np.log2(_prior_counts(contexts) + 0.5 * size)
    return -k * math.log2(size) + math.fsum(num) - math.fsum(den)


def kt_log_prob_closed_form(sample: Sample | SampleCounts, k: int) -> float:
    """``log2`` of the KT probability from the log-gamma form of the product."""
    sc = _counts(sample)
    size = sc.size
    cc = sc.conditional(k)
    ctx_codes = cc.joint_codes // size
    _, first = np.unique(ctx_codes, return_index=True)
    ctx_totals = cc.context_counts[first].astype("f8")
    half = 0.5 * size
    joint_term = (sps.gammaln(cc.joint_counts + 0.5) - sps.gammaln(0.5)).sum()
    ctx_term = (sps.gammaln(ctx_totals + half) - sps.gammaln(half)).sum()
    return -k * math.log2(size) + float(joint_term - ctx_term) / LN2


def kt_prob_exact(sample: Sample, k: int) -> Fraction:
    """Exact rational KT probability, counting directly on the symbol tuples."""
    x = [int(s) for s in sample.data]
    n, size = len(x), sample.alphabet.size
    if not 0 <= k <= n - 1:
        raise InputRangeError("k", f"0 <= k <= n - 1 = {n - 1}", k)
    joint = Counter(tuple(x[i - k : i + 1]) for i in range(k, n))
    context: Counter[tuple[int, ...]] = Counter()
    for key, count in joint.items():
        context[key[:-1]] += count
    prob = Fraction(1, size**k)
    half = Fraction(1, 2)
    for count in joint.values():
        for j in range(count):
            prob *= j + half
    for count in context.values():
        for j in range(count):
            prob /= j + Fraction(size, 2)
    return prob


def kt_score(sample: Sample | SampleCounts, k: int) -> float:
    """KT criterion ``-log2 P_KT,k``."""
    return -kt_log_prob(sample, k)


def kt_ml_gap(sample: Sample | SampleCounts, k: int) -> float:
    """``log2 ML_k - log2 P_KT,k``, nonnegative for every sample."""
    sc = _counts(sample)
    return sc.log_ml(k) - kt_log_prob(sc, k)


def _compositions(n: int, parts: int) -> IntArray:
    """All compositions of ``n`` into ``parts`` nonnegative integers."""
    cuts = np.array(list(itertools.combinations(range(n + parts - 1), parts - 1)), dtype="i8")
    cuts = cuts.reshape(-1, parts - 1)
    bounds = np.hstack(
        [np.full((cuts.shape[0], 1), -1), cuts, np.full((cuts.shape[0], 1), n + parts - 1)]
    )
    return np.diff(bounds, axis=1) - 1


def _log2_multinomial(n: int, comp: IntArray) -> npt.NDArray[np.float64]:
    if n <= EXACT_MULTINOMIAL_MAX:
        out = []
        for row in comp:
            value, left = 1, n
            for part in row:
                value *= math.comb(left, int(part))
                left -= int(part)
            out.append(math.log2(value))
        return np.array(out, dtype="f8")
    return (sps.gammaln(n + 1) - sps.gammaln(comp + 1).sum(axis=1)) / LN2


def _log2_normalizer_iid(size: int, n: int, budget: int) -> float:
    count = math.comb(n + size - 1, size - 1)
    if count > budget:
        raise CapacityError("NML normalizer of order 0", count, budget, "the KT criterion")
    comp = _compositions(n, size)
    ml = (sps.xlogy(comp, comp / n).sum(axis=1)) / LN2
    terms = _log2_multinomial(n, comp) + ml
    return float(sps.logsumexp(terms * LN2) / LN2)


def _log2_ml_rows(digits: IntArray, size: int, k: int) -> npt.NDArray[np.float64]:
    """``log2 ML_k`` of every row of a matrix of symbol sequences."""
    rows, n = digits.shape
    joint = np.zeros((rows, n - k), dtype="i8")
    for j in range(k + 1):
        joint = joint * size + digits[:, j : n - k + j]
    stride = size ** (k + 1)
    keys = (np.arange(rows, dtype="i8")[:, None] * stride + joint).ravel()
    uniq, counts = np.unique(keys, return_counts=True)
    _, inverse = np.unique(uniq // size, return_inverse=True)
    totals = np.bincount(inverse, weights=counts)[inverse]
    terms = sps.xlogy(counts, counts / totals)
    return np.bincount(uniq // stride, weights=terms, minlength=rows) / LN2


def _log2_normalizer_enum(size: int, n: int, k: int, budget: int) -> float:
    total = size**n
    if total > budget:
        raise CapacityError(f"NML normalizer of order {k}", total, budget, "the KT criterion")
    powers = size ** np.arange(n - 1, -1, -1, dtype="i8")
    parts = []
    for start in range(0, total, NML_CHUNK):
        codes = np.arange(start, min(start + NML_CHUNK, total), dtype="i8")
        digits = (codes[:, None] // powers) % size
        parts.append(sps.logsumexp(_log2_ml_rows(digits, size, k) * LN2))
    return float(sps.logsumexp(parts) / LN2)


@functools.lru_cache(maxsize=256)
def _nml_log_normalizer(size: int, n: int, k: int, budget: int) -> float:
    if k == n - 1:
        return n * math.log2(size)
    if k == 0:
        return _log2_normalizer_iid(size, n, budget)
    return _log2_normalizer_enum(size, n, k, budget)


def nml_log_normalizer(
    alphabet: Alphabet | int, n: int, k: int, budget: int = NML_BUDGET
) -> float:
    """``log2`` of the NML normalizer, the sum of ``ML_k`` over all ``|A|**n`` sequences.

    Parameters
    ----------
    alphabet : Alphabet or int
        The alphabet or its size.
    n : int
        Sequence length.
    k : int
        Markov order, ``0 <= k <= n - 1``.
    budget : int, optional
        Largest number of terms to sum, defaults to ``2**22``. Order 0 sums
        over symbol compositions and other orders over all sequences.

    Returns
    -------
    float
        ``log2`` of the normalizer.

    Examples
    --------
    >>> nml_log_normalizer(2, 1, 0)
    1.0
    >>> round(2 ** nml_log_normalizer(2, 2, 0), 10)
    2.5
    """
    size = alphabet.size if isinstance(alphabet, Alphabet) else int(alphabet)
    if n < 1:
        raise InputRangeError("n", ">= 1", n)
    if not 0 <= k <= n - 1:
        raise InputRangeError("k", f"0 <= k <= n - 1 = {n - 1}", k)
    return _nml_log_normalizer(size, n, k, budget)


def nml_score(sample: Sample | SampleCounts, k: int, budget: int = NML_BUDGET) -> float:
    """NML criterion ``-log2 ML_k + log2 normalizer``.

    Examples
    --------
    >>> round(nml_score(Sample.from_string("01"), 0), 6)
    3.321928
    """
    sc = _counts(sample)
    return -sc.log_ml(k) + nml_log_normalizer(sc.size, sc.sample.n, k, budget)


def _distinct_score(crit: Criterion, sc: SampleCounts, k: int) -> float:
    """Score at an order whose contexts each occur once, so ``log2 ML_k = 0``."""
    size, n = sc.size, sc.sample.n
    if crit.kind == "pml":
        return (size - 1) * float(size) ** k * crit.penalty(n)
    if crit.kind == "kt":
        # every prediction is 1/|A|, as are the first k symbols
        return n * math.log2(size)
    return nml_score(sc, k, crit.budget)


def estimate_order(
    sample: Sample,
    criterion: Union[Criterion, str],
    max_order: int | None = None,
    prune: bool = False,
) -> OrderEstimate:
    """Estimate the Markov order as the smallest minimizer of a criterion.

    Every order ``0..r`` is scored and two scores within ``1e-9`` bits are
    tied, so the smaller order wins. Once every length-``k`` string occurs
    at most once, each larger order has ``log2 ML = 0`` and its PML and KT
    scores follow in closed form.

    With ``prune=True`` the scan stops as soon as no larger order can win:
    at that first all-distinct order, and for PML once the penalty alone
    exceeds the best score. The chosen order is the same, the trace is
    shorter.

    Parameters
    ----------
    sample : Sample
        The sample.
    criterion : Criterion or str
        The criterion, or its text form such as ``"pml:bic"``, ``"nml"`` or ``"kt"``.
    max_order : int, optional
        The bound ``r`` with ``0 <= r <= n - 1``. Defaults to ``n - 1``
        capped at the largest order whose strings can be coded.
    prune : bool, optional
        Stop the scan once no larger order can win, defaults to ``False``.

    Returns
    -------
    OrderEstimate
        The chosen order with the score trace.

    Examples
    --------
    >>> est = estimate_order(Sample.from_string("0101010101"), "pml:bic", 4)
    >>> est.chosen_k, len(est.scores)
    (1, 5)
    """
    crit = Criterion.parse(criterion) if isinstance(criterion, str) else criterion
    n = sample.n
    size = sample.alphabet.size
    if max_order is None:
        r = min(n - 1, max_code_depth(size) - 1)
    else:
        r = int(max_order)
        if not 0 <= r <= n - 1:
            raise InputRangeError("max_order", f"0 <= r <= n - 1 = {n - 1}", r)

    sc = SampleCounts(sample)
    scores: list[tuple[int, float]] = []
    best_k, best = 0, math.inf
    pruned_at = distinct_at = None
    for k in range(r + 1):
        value = crit.score(sc, k) if distinct_at is None else _distinct_score(crit, sc, k)
        scores.append((k, value))
        if value < best - TIE_TOLERANCE:
            best_k, best = k, value
        if k == r:
            break
        if distinct_at is None and sc.windows_distinct(k):
            distinct_at = k
            if prune:
                pruned_at = k
                break
        if prune and crit.kind == "pml":
            next_pen = (size - 1) * float(size) ** (k + 1) * crit.penalty(n)
            if next_pen > best + TIE_TOLERANCE:
                pruned_at = k
                break
    logger.debug(
        "%s on n=%d: chose k=%d over %d orders (bound %d)", crit.label, n, best_k, len(scores), r
    )
    return OrderEstimate(best_k, tuple(scores), r, crit, pruned_at)
