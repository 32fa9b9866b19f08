"""Per-letter Hamming distance, the d-bar distance of block laws and the empirical Markov estimator."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from pymarkovorder.core import Alphabet, Sample, SeedSpec, check_code_depth
from pymarkovorder.counting import SampleCounts
from pymarkovorder.exceptions import (
    CapacityError,
    ConvergenceError,
    InputRangeError,
    InputValueError,
)
from pymarkovorder.processes import GeometricBinaryGModel, MarkovChainModel, ProcessModel

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]
    IntArray = npt.NDArray[np.int64]

logger = logging.getLogger(__name__)

DBAR_BUDGET = 2**24
BLOCK_BUDGET = 2**20
PROB_TOLERANCE = 1e-12
CERTIFICATE_TOLERANCE = 1e-9

__all__ = [
    "BlockDistribution",
    "CouplingPlan",
    "hamming_per_letter",
    "dbar_exact",
    "maximal_coupling",
    "dbar_upper_greedy",
    "empirical_markov_estimator",
    "block_distribution",
]


def hamming_per_letter(x: Union[str, Sequence[int]], y: Union[str, Sequence[int]]) -> float:
    """Fraction of positions where two equal-length strings differ.

    Examples
    --------
    >>> round(hamming_per_letter("000", "011"), 6)
    0.666667
    """
    if len(x) != len(y):
        raise InputValueError("string lengths", [len(x)], len(y))
    if len(x) == 0:
        raise InputRangeError("string length", ">= 1", 0)
    return sum(a != b for a, b in zip(x, y)) / len(x)


@dataclass(frozen=True, eq=False)
class BlockDistribution:
    """A law on the length-``length`` strings, stored on its support.

    Parameters
    ----------
    alphabet : Alphabet
        The alphabet.
    length : int
        Block length.
    codes : array_like of int
        Base-``|A|`` codes of the strings with positive mass.
    probs : array_like of float
        Their probabilities, summing to 1 within ``1e-12``.
    truncation_error : float, optional
        Bound on the total variation error of the conditional laws behind
        an approximate block law, 0 for exact ones.
    """

    alphabet: Alphabet
    length: int
    codes: IntArray = field(repr=False)
    probs: FloatArray = field(repr=False)
    truncation_error: float = 0.0

    def __post_init__(self) -> None:
        codes = np.asarray(self.codes, dtype="i8").ravel()
        probs = np.asarray(self.probs, dtype="f8").ravel()
        if codes.shape != probs.shape:
            raise InputValueError("codes and probs sizes", [codes.size], probs.size)
        if (probs < 0).any():
            raise InputRangeError("probabilities", ">= 0", float(probs.min()))
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InputRangeError("sum of probabilities", "1 within 1e-12", total)
        keep = probs > 0
        order = np.argsort(codes[keep])
        object.__setattr__(self, "codes", codes[keep][order])
        object.__setattr__(self, "probs", probs[keep][order])

    @classmethod
    def from_mapping(cls, probs: dict[str, float], alphabet: Alphabet | int = 2) -> BlockDistribution:
        """Build from a mapping of strings such as ``{"00": 0.5, "11": 0.5}``.

        Examples
        --------
        >>> BlockDistribution.from_mapping({"01": 0.25, "10": 0.75}).as_dict()
        {'01': 0.25, '10': 0.75}
        """
        alpha = alphabet if isinstance(alphabet, Alphabet) else Alphabet(alphabet)
        lengths = {len(s) for s in probs}
        if len(lengths) != 1:
            raise InputValueError("string lengths", ["a single length"], str(sorted(lengths)))
        codes = [alpha.code(s) for s in probs]
        return cls(alpha, lengths.pop(), np.array(codes), np.array(list(probs.values())))

    @classmethod
    def point_mass(cls, text: str, alphabet: Alphabet | int = 2) -> BlockDistribution:
        return cls.from_mapping({text: 1.0}, alphabet)

    @classmethod
    def from_dense(cls, alphabet: Alphabet, length: int, probs: FloatArray, truncation_error: float = 0.0) -> BlockDistribution:
        """Build from a dense vector indexed by string code."""
        probs = np.asarray(probs, dtype="f8")
        codes = np.flatnonzero(probs > 0)
        mass = probs[codes]
        return cls(alphabet, length, codes, mass / mass.sum(), truncation_error)

    def digits(self) -> IntArray:
        """Symbols of the support strings, one row per string."""
        powers = self.alphabet.size ** np.arange(self.length - 1, -1, -1, dtype="i8")
        return (self.codes[:, None] // powers) % self.alphabet.size

    def as_dict(self) -> dict[str, float]:
        return {self.alphabet.decode(int(c), self.length): float(p) for c, p in zip(self.codes, self.probs)}


@dataclass(frozen=True)
class CouplingPlan:
    """A joint law of two block laws with its expected per-letter Hamming cost.

    ``rows`` and ``cols`` are string codes of the two sides and ``mass`` the
    joint probability of each pair. ``certificate`` holds the primal, dual
    and complementary slackness residuals of the optimality check.
    """

    alphabet: Alphabet
    length: int
    rows: IntArray = field(repr=False)
    cols: IntArray = field(repr=False)
    mass: FloatArray = field(repr=False)
    cost: float
    certificate: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict[tuple[str, str], float]:
        dec = self.alphabet.decode
        return {
            (dec(int(r), self.length), dec(int(c), self.length)): float(m)
            for r, c, m in zip(self.rows, self.cols, self.mass)
        }

    @property
    def size(self) -> int:
        return int(self.mass.size)


def _check_pair(p: BlockDistribution, q: BlockDistribution) -> None:
    if p.alphabet != q.alphabet:
        raise InputValueError("alphabet size", [p.alphabet.size], q.alphabet.size)
    if p.length != q.length:
        raise InputValueError("block length", [p.length], q.length)


def dbar_exact(
    p: BlockDistribution, q: BlockDistribution, budget: int = DBAR_BUDGET
) -> tuple[float, CouplingPlan]:
    """Exact d-bar distance of two block laws by solving the transportation problem.

    The problem is solved with the HiGHS solver of :func:`scipy.optimize.linprog`
    on the product of the two supports, and the solution is certified from
    the equality duals: reduced costs must be nonnegative and orthogonal to
    the plan within ``1e-9``.

    Parameters
    ----------
    p, q : BlockDistribution
        Block laws of the same length over the same alphabet.
    budget : int, optional
        Largest number of support pairs, defaults to ``2**24``.

    Returns
    -------
    tuple of (float, CouplingPlan)
        The distance and an optimal coupling.

    Examples
    --------
    >>> p = BlockDistribution.point_mass("000")
    >>> q = BlockDistribution.point_mass("011")
    >>> round(dbar_exact(p, q)[0], 6)
    0.666667
    """
    _check_pair(p, q)
    if np.array_equal(p.codes, q.codes) and np.array_equal(p.probs, q.probs):
        zeros = {"primal": 0.0, "dual": 0.0, "slackness": 0.0}
        return 0.0, CouplingPlan(p.alphabet, p.length, p.codes, q.codes, p.probs, 0.0, zeros)
    m, k = p.codes.size, q.codes.size
    if m * k > budget:
        raise CapacityError("Exact d-bar", m * k, budget, "dbar_upper_greedy")

    dp, dq = p.digits(), q.digits()
    cost = np.zeros((m, k))
    for j in range(p.length):
        cost += dp[:, j, None] != dq[None, :, j]
    cost /= p.length

    if m == 1 or k == 1:
        # a point mass on either side admits only the product coupling
        plan = p.probs[:, None] * q.probs[None, :]
        value = float(min((plan * cost).sum(), 1.0))
        rows, cols = np.nonzero(plan > 0)
        zeros = {"primal": 0.0, "dual": 0.0, "slackness": 0.0}
        return value, CouplingPlan(
            p.alphabet, p.length, p.codes[rows], q.codes[cols], plan[rows, cols], value, zeros
        )

    # row sums for every x, column sums for all but the last y
    var = np.arange(m * k)
    a_rows = sp.csr_matrix((np.ones(m * k), (var // k, var)), shape=(m, m * k))
    a_cols = sp.csr_matrix((np.ones(m * k), (var % k, var)), shape=(k, m * k))[: k - 1]
    a_eq = sp.vstack([a_rows, a_cols], format="csr")
    b_eq = np.concatenate([p.probs, q.probs[: k - 1]])
    res = sopt.linprog(
        cost.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise ConvergenceError(f"Transportation problem ({res.message})", int(res.nit), math.inf)

    x = np.maximum(res.x, 0.0)
    duals = np.concatenate([res.eqlin.marginals, np.zeros(1)])
    reduced = cost - duals[:m, None] - duals[None, m:]
    plan = x.reshape(m, k)
    certificate = {
        "primal": float(
            max(np.abs(plan.sum(axis=1) - p.probs).max(), np.abs(plan.sum(axis=0) - q.probs).max())
        ),
        "dual": float(max(0.0, -reduced.min())),
        "slackness": float(np.abs(plan * reduced).sum()),
    }
    if max(certificate.values()) > CERTIFICATE_TOLERANCE:
        raise ConvergenceError("Transportation certificate", int(res.nit), max(certificate.values()))

    value = float(min(max((plan * cost).sum(), 0.0), 1.0))
    rows, cols = np.nonzero(plan > 0)
    coupling = CouplingPlan(
        p.alphabet, p.length, p.codes[rows], q.codes[cols], plan[rows, cols], value, certificate
    )
    logger.debug("Exact d-bar on %d x %d support: %.6g", m, k, value)
    return value, coupling


def maximal_coupling(p: npt.ArrayLike, q: npt.ArrayLike, u: float) -> tuple[int, int]:
    """Draw a pair from the maximal coupling of two laws using one uniform ``u``.

    With probability ``sum(min(p, q))`` both sides take the same symbol,
    otherwise each side draws from its own excess over the overlap.
    """
    p = np.asarray(p, dtype="f8")
    q = np.asarray(q, dtype="f8")
    overlap = np.minimum(p, q)
    w = float(overlap.sum())
    last = p.size - 1
    if u < w:
        a = min(int(np.searchsorted(np.cumsum(overlap), u, side="right")), last)
        return a, a
    v = (u - w) / (1.0 - w)
    a = min(int(np.searchsorted(np.cumsum(p - overlap) / (1.0 - w), v, side="right")), last)
    b = min(int(np.searchsorted(np.cumsum(q - overlap) / (1.0 - w), v, side="right")), last)
    return a, b


def dbar_upper_greedy(
    model_p: ProcessModel,
    model_q: ProcessModel,
    n: int,
    trials: int = 100,
    seed: SeedSpec | int = 0,
    burn_in: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the cost of a sequential maximal coupling.

    At every step the two next-symbol laws are coupled maximally with a
    shared uniform. Any coupling costs at least the d-bar distance, so the
    mean is an upper-bound estimate up to its standard error.

    Returns
    -------
    tuple of (float, float)
        Mean per-letter Hamming distance and its standard error.
    """
    if model_p.alphabet != model_q.alphabet:
        raise InputValueError("alphabet size", [model_p.size], model_q.size)
    if n < 1 or trials < 1:
        raise InputRangeError("n and trials", ">= 1", min(n, trials))
    spec = seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))
    costs = np.empty(trials)
    for t in range(trials):
        state_p, state_q = (
            model_p.initial_state(spec.rng(t, "burn-in"), burn_in),
            model_q.initial_state(spec.rng(t, "burn-in"), burn_in),
        )
        rng = spec.rng(t, "coupling")
        mismatches = 0
        for u in rng.random(n).tolist():
            a, b = maximal_coupling(model_p.law(state_p), model_q.law(state_q), u)
            mismatches += a != b
            state_p, state_q = model_p.advance(state_p, a), model_q.advance(state_q, b)
        costs[t] = mismatches / n
    se = float(costs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(costs.mean()), se


def empirical_markov_estimator(sample: Sample, k: int) -> MarkovChainModel:
    """Stationary order-``k`` chain with the empirical conditional laws of the sample.

    Contexts never seen in the sample get the uniform row. The initial
    law is the stationary law found by :func:`markov_stationary`.
    """
    size = sample.alphabet.size
    check_code_depth(k + 1, size, order=k)
    if size**k > BLOCK_BUDGET:
        raise InputRangeError("|A|**k", f"<= {BLOCK_BUDGET}", size**k)
    cc = SampleCounts(sample).conditional(k)
    q = np.full((size**k, size), 1.0 / size)
    ctx, sym = np.divmod(cc.joint_codes, size)
    q[ctx] = 0.0
    q[ctx, sym] = cc.joint_counts / cc.context_counts
    return MarkovChainModel(q, name=f"empirical[{k}]")


def block_distribution(
    model: ProcessModel, n: int, budget: int = BLOCK_BUDGET, depth: int | None = None
) -> BlockDistribution:
    """Stationary law of ``n``-blocks of a model.

    Markov chains give the exact law. The g-model uses its order-``depth``
    truncation (defaults to ``n + 4``) and reports the truncation error bound.
    """
    if n < 1:
        raise InputRangeError("n", ">= 1", n)
    if model.size**n > budget:
        raise CapacityError("Block law", model.size**n, budget)
    if isinstance(model, MarkovChainModel):
        return BlockDistribution.from_dense(model.alphabet, n, model.block_probs(n))
    if isinstance(model, GeometricBinaryGModel):
        d = n + 4 if depth is None else depth
        chain, err = model.as_markov(d)
        return BlockDistribution.from_dense(model.alphabet, n, chain.block_probs(n), err)
    raise InputValueError("model", ["MarkovChainModel", "GeometricBinaryGModel"], type(model).__name__)
