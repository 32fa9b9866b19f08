"""Generative process models with their memory-decay and non-nullness constants."""
from __future__ import annotations

import abc
import bisect
import functools
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Sequence, Union

import numpy as np
import scipy.special as sps

from pymarkovorder._utils import load_toml
from pymarkovorder.core import Alphabet, Sample, SeedSpec, entropy_bits
from pymarkovorder.exceptions import (
    ConvergenceError,
    InputRangeError,
    InputValueError,
    NonNullWarning,
)

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]
    SeedLike = Union[SeedSpec, int, np.random.Generator]

logger = logging.getLogger(__name__)

ROW_TOLERANCE = 1e-12
STATIONARY_MAX_ITER = 10**6
STATIONARY_TOLERANCE = 1e-12
BLOCK_BUDGET = 2**24
MC_PATH_LEN = 2**18
MC_BATCHES = 20
LN2 = math.log(2.0)

__all__ = [
    "ProcessModel",
    "ProcessQuantities",
    "MarkovChainModel",
    "GeometricBinaryGModel",
    "iid_model",
    "markov_stationary",
    "markov_zoo",
    "model_from_config",
    "load_model",
    "as_rng",
    "sample_path",
    "true_entropies",
    "continuity_rates",
    "nonnullness_constants",
]


def as_rng(seed: SeedLike) -> np.random.Generator:
    """Random generator from a :class:`SeedSpec`, an integer seed or a generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.rng()
    return SeedSpec(int(seed)).rng()


@dataclass(frozen=True)
class ProcessQuantities:
    """Memory-decay and non-nullness quantities of a process.

    Attributes
    ----------
    h : numpy.ndarray
        Conditional entropies ``h_0..h_kmax`` in bits.
    gamma_upper : numpy.ndarray
        Upper continuity rates ``gamma(0..kmax)`` or certified upper bounds.
    gamma_lower : numpy.ndarray or None
        Lower continuity rates, when available.
    alpha_k : numpy.ndarray
        ``alpha_0..alpha_kmax``.
    alpha0, alpha, p_inf : float
        Weak non-nullness, alpha-summability and non-nullness constants.
    h_se : numpy.ndarray or None
        Standard errors of ``h`` when it is a Monte Carlo estimate.
    provenance : dict
        ``exact``, ``bound`` or ``monte-carlo`` for each field.
    """

    h: FloatArray
    gamma_upper: FloatArray
    gamma_lower: FloatArray | None
    alpha_k: FloatArray
    alpha0: float
    alpha: float
    p_inf: float
    h_se: FloatArray | None = None
    provenance: dict[str, str] = field(default_factory=dict)


class ProcessModel(abc.ABC):
    """A stationary process over a finite alphabet.

    Besides sampling, a model exposes its one-step conditional law through a
    state machine (:meth:`initial_state`, :meth:`law`, :meth:`advance`),
    which is what sequential couplings need.
    """

    alphabet: Alphabet
    name: str

    @property
    def size(self) -> int:
        return self.alphabet.size

    @abc.abstractmethod
    def sample_path(self, n: int, seed: SeedLike, burn_in: int | None = None) -> Sample:
        """Draw ``x_1^n`` from the process."""

    @abc.abstractmethod
    def initial_state(self, rng: np.random.Generator, burn_in: int | None = None) -> Any:
        """State of the process before the first emitted symbol."""

    @abc.abstractmethod
    def law(self, state: Any) -> FloatArray:
        """Distribution of the next symbol given the state."""

    @abc.abstractmethod
    def advance(self, state: Any, symbol: int) -> Any:
        """State after emitting ``symbol``."""

    @abc.abstractmethod
    def gamma_upper(self, k: int) -> float:
        """Upper continuity rate at ``k`` or a certified bound on it."""

    @abc.abstractmethod
    def quantities(self, k_max: int) -> ProcessQuantities:
        """Conditional entropies and constants up to order ``k_max``."""

    def conditional_law(self, past: Sequence[int]) -> FloatArray:
        """Law of the next symbol after ``past`` (most recent symbol last)."""
        state = self.initial_state(np.random.default_rng(0), burn_in=0)
        for s in past:
            state = self.advance(state, int(s))
        return self.law(state)


def _next_states(n_states: int, size: int) -> npt.NDArray[np.int64]:
    return (np.arange(n_states, dtype="i8")[:, None] * size + np.arange(size)) % n_states


def markov_stationary(transition: npt.ArrayLike, size: int | None = None) -> FloatArray:
    """Stationary law over the ``|A|**k0`` contexts of an order-``k0`` chain.

    The law is found by power iteration of the lazy chain ``(I + T) / 2``
    started from the uniform law, which converges for periodic chains too
    and picks one stationary law deterministically for reducible ones.

    Parameters
    ----------
    transition : array_like
        Matrix of shape ``(|A|**k0, |A|)``; row ``c`` is the law of the next
        symbol after the context with code ``c``.
    size : int, optional
        Alphabet size, defaults to the number of columns.

    Returns
    -------
    numpy.ndarray
        Stationary law indexed by context code.

    Examples
    --------
    >>> markov_stationary([[0.7, 0.3], [0.2, 0.8]]).round(9).tolist()
    [0.4, 0.6]
    """
    q = np.asarray(transition, dtype="f8")
    size = q.shape[1] if size is None else size
    n_states = q.shape[0]
    if n_states == 1:
        return np.ones(1)
    targets = _next_states(n_states, size).ravel()
    pi = np.full(n_states, 1.0 / n_states)
    residual = math.inf
    for it in range(1, STATIONARY_MAX_ITER + 1):
        moved = np.bincount(targets, weights=(pi[:, None] * q).ravel(), minlength=n_states)
        residual = float(np.abs(moved - pi).sum())
        if residual <= STATIONARY_TOLERANCE:
            logger.debug("Stationary law of %d states after %d iterations", n_states, it)
            return moved / moved.sum()
        pi = 0.5 * (pi + moved)
    raise ConvergenceError("Stationary power iteration", STATIONARY_MAX_ITER, residual)


class MarkovChainModel(ProcessModel):
    """A stationary Markov chain of order ``k0`` (``k0 = 0`` is i.i.d.).

    Parameters
    ----------
    transition : array_like
        Matrix of shape ``(|A|**k0, |A|)`` of the conditional laws
        ``Q(a | a_1^k0)``, rows indexed by the base-``|A|`` context code.
    name : str, optional
        A label for reports.
    """

    def __init__(self, transition: npt.ArrayLike, name: str | None = None) -> None:
        q = np.array(transition, dtype="f8")
        if q.ndim == 1:
            q = q[None, :]
        if q.ndim != 2:
            raise InputValueError("transition shape", ["(|A|**k0, |A|)"], str(q.shape))
        size = q.shape[1]
        self.alphabet = Alphabet(size)
        order = round(math.log(q.shape[0], size)) if q.shape[0] > 1 else 0
        if size**order != q.shape[0]:
            raise InputValueError("transition rows", [f"|A|**k0 for |A| = {size}"], q.shape[0])
        if (q < 0).any():
            raise InputRangeError("transition probabilities", ">= 0", float(q.min()))
        row_err = float(np.abs(q.sum(axis=1) - 1.0).max())
        if row_err > ROW_TOLERANCE:
            raise InputRangeError("transition row sums", "1 within 1e-12", 1.0 + row_err)
        q.flags.writeable = False
        self.transition = q
        self.order = order
        self.name = name or f"markov{order}"
        self.n_states = q.shape[0]
        self._cum = np.cumsum(q, axis=1).tolist()
        self._short: dict[int, FloatArray] = {}

    def __repr__(self) -> str:
        return f"MarkovChainModel(name={self.name!r}, |A|={self.size}, order={self.order})"

    @functools.cached_property
    def stationary(self) -> FloatArray:
        """Stationary law over the ``|A|**k0`` contexts."""
        return markov_stationary(self.transition, self.size)

    @property
    def support(self) -> npt.NDArray[np.bool_]:
        """Contexts with positive stationary mass."""
        return self.stationary > 0.0

    def block_probs(self, length: int) -> FloatArray:
        """Stationary law of ``length``-blocks indexed by string code."""
        if length < 0:
            raise InputRangeError("length", ">= 0", length)
        if self.size**length > BLOCK_BUDGET:
            raise InputRangeError("|A|**length", f"<= {BLOCK_BUDGET}", self.size**length)
        pi = self.stationary
        k0 = self.order
        if length <= k0:
            return pi.reshape(self.size**length, -1).sum(axis=1)
        probs = pi
        for d in range(k0, length):
            rows = self.transition[np.arange(self.size**d) % self.n_states]
            probs = (probs[:, None] * rows).ravel()
        return probs

    def block_entropy(self, length: int) -> float:
        """``H_length`` in bits."""
        if length == 0:
            return 0.0
        return entropy_bits(self.block_probs(length))

    @property
    def entropy_rate(self) -> float:
        """``h_k0 = sum_c pi(c) H(Q(. | c))``."""
        row_h = -sps.xlogy(self.transition, self.transition).sum(axis=1) / LN2
        return float(self.stationary @ row_h)

    def cond_entropy(self, k: int) -> float:
        """Exact ``h_k``."""
        if k >= self.order:
            return self.entropy_rate
        return self.block_entropy(k + 1) - self.block_entropy(k)

    def true_entropies(self, k_max: int) -> FloatArray:
        """Exact ``h_0..h_kmax``, made nonincreasing against rounding."""
        h = np.array([self.cond_entropy(k) for k in range(k_max + 1)], dtype="f8")
        return np.minimum.accumulate(np.clip(h, 0.0, math.log2(self.size)))

    def short_conditional(self, k: int) -> FloatArray:
        """``P(a | a_1^k)`` for ``k < k0`` from the stationary ``(k+1)``-block law.

        Rows of contexts with zero mass are uniform.
        """
        if k not in self._short:
            joint = self.block_probs(k + 1).reshape(self.size**k, self.size)
            mass = joint.sum(axis=1, keepdims=True)
            with np.errstate(invalid="ignore", divide="ignore"):
                self._short[k] = np.where(mass > 0, joint / mass, 1.0 / self.size)
        return self._short[k]

    def _suffix_rows(self, k: int) -> FloatArray:
        """``P(a | last k symbols of c)`` for every ``k0``-context ``c``."""
        return self.short_conditional(k)[np.arange(self.n_states) % self.size**k]

    def continuity_rates(self, k: int) -> tuple[float, float]:
        """Exact ``(gamma_upper(k), gamma_lower(k))`` over contexts in the support."""
        if k >= self.order:
            return 0.0, 0.0
        diff = np.abs(self._suffix_rows(k) - self.transition).sum(axis=1)[self.support]
        return float(diff.max()), float(diff.min())

    def gamma_upper(self, k: int) -> float:
        return self.continuity_rates(k)[0]

    def alpha_k(self, k: int) -> float:
        """``min_y sum_a min_{c ends with y} Q(a | c)`` over contexts in the support."""
        if k >= self.order:
            return 1.0
        groups = np.arange(self.n_states) % self.size**k
        best = np.full((self.size**k, self.size), np.inf)
        q = np.where(self.support[:, None], self.transition, np.inf)
        np.minimum.at(best, groups, q)
        sums = best.sum(axis=1)
        return float(sums[np.isfinite(sums)].min())

    @property
    def p_inf(self) -> float:
        """Smallest transition probability over contexts in the support."""
        value = float(self.transition[self.support].min())
        if value <= 0.0:
            warnings.warn(
                f"{self.name} has a zero transition probability and is not non-null.",
                NonNullWarning,
                stacklevel=2,
            )
        return value

    def quantities(self, k_max: int) -> ProcessQuantities:
        rates = [self.continuity_rates(k) for k in range(k_max + 1)]
        alpha_k = np.array([self.alpha_k(k) for k in range(k_max + 1)], dtype="f8")
        alpha = float(sum(1.0 - self.alpha_k(k) for k in range(self.order)))
        exact = "exact"
        return ProcessQuantities(
            h=self.true_entropies(k_max),
            gamma_upper=np.array([r[0] for r in rates], dtype="f8"),
            gamma_lower=np.array([r[1] for r in rates], dtype="f8"),
            alpha_k=alpha_k,
            alpha0=self.alpha_k(0),
            alpha=alpha,
            p_inf=self.p_inf,
            provenance=dict.fromkeys(
                ("h", "gamma_upper", "gamma_lower", "alpha_k", "alpha0", "alpha", "p_inf"), exact
            ),
        )

    def sample_path(self, n: int, seed: SeedLike, burn_in: int | None = None) -> Sample:
        """Draw ``x_1^n``; the first ``k0`` symbols come from the stationary law.

        ``burn_in`` is ignored since the chain starts stationary.
        """
        if n < 1:
            raise InputRangeError("n", ">= 1", n)
        rng = as_rng(seed)
        size, k0 = self.size, self.order
        if k0 == 0:
            data = rng.choice(size, size=n, p=self.transition[0])
            return Sample(self.alphabet, data)
        start = int(rng.choice(self.n_states, p=self.stationary))
        head = [(start // size ** (k0 - 1 - i)) % size for i in range(k0)]
        out = head[:n]
        state = start
        cum = self._cum
        for u in rng.random(max(n - k0, 0)).tolist():
            a = min(bisect.bisect_right(cum[state], u), size - 1)
            out.append(a)
            state = (state * size + a) % self.n_states
        return Sample(self.alphabet, np.asarray(out, dtype="i8"))

    def initial_state(self, rng: np.random.Generator, burn_in: int | None = None) -> tuple[int, ...]:
        return ()

    def law(self, state: tuple[int, ...]) -> FloatArray:
        k = len(state)
        code = 0
        for s in state:
            code = code * self.size + s
        if k >= self.order:
            return self.transition[code % self.n_states]
        return self.short_conditional(k)[code]

    def advance(self, state: tuple[int, ...], symbol: int) -> tuple[int, ...]:
        if self.order == 0:
            return ()
        return (*state, symbol)[-self.order :]

    def to_config(self) -> dict[str, Any]:
        """Model config accepted by :func:`model_from_config`."""
        return {
            "type": "markov",
            "name": self.name,
            "alphabet_size": self.size,
            "order": self.order,
            "transition": self.transition.tolist(),
        }


def iid_model(probs: Sequence[float], name: str | None = None) -> MarkovChainModel:
    """An i.i.d. process, the order-0 Markov chain with law ``probs``."""
    return MarkovChainModel(np.asarray(probs, dtype="f8")[None, :], name=name or "iid")


class GeometricBinaryGModel(ProcessModel):
    """Binary process with ``P(1 | past) = theta0 + c * sum_{j>=1} rho**j * x_{-j}``.

    The continuity rate decays geometrically, ``gamma(k) <= 2 c rho**(k+1) / (1 - rho)``,
    and the process is non-null with ``p_inf = min(theta0, 1 - theta0 - c rho / (1 - rho))``.

    Parameters
    ----------
    theta0 : float
        Base level in ``(0, 1)``.
    c : float
        Coefficient scale, ``c > 0``.
    rho : float
        Coefficient decay in ``(0, 1)``.
    name : str, optional
        A label for reports.
    """

    def __init__(self, theta0: float, c: float, rho: float, name: str | None = None) -> None:
        if not 0.0 < theta0 < 1.0:
            raise InputRangeError("theta0", "0 < theta0 < 1", theta0)
        if c <= 0.0:
            raise InputRangeError("c", "c > 0", c)
        if not 0.0 < rho < 1.0:
            raise InputRangeError("rho", "0 < rho < 1", rho)
        if theta0 + c * rho / (1.0 - rho) >= 1.0:
            raise InputRangeError(
                "theta0 + c * rho / (1 - rho)", "< 1", theta0 + c * rho / (1.0 - rho)
            )
        self.alphabet = Alphabet(2)
        self.theta0 = float(theta0)
        self.c = float(c)
        self.rho = float(rho)
        self.name = name or f"gmodel(theta0={theta0:g},c={c:g},rho={rho:g})"

    def __repr__(self) -> str:
        return f"GeometricBinaryGModel(theta0={self.theta0}, c={self.c}, rho={self.rho})"

    @property
    def tail(self) -> float:
        """``c * rho / (1 - rho)``, the largest possible memory contribution."""
        return self.c * self.rho / (1.0 - self.rho)

    @property
    def p_inf(self) -> float:
        return min(self.theta0, 1.0 - self.theta0 - self.tail)

    def gamma_upper(self, k: int) -> float:
        """Certified bound ``2 c rho**(k+1) / (1 - rho)``.

        Examples
        --------
        >>> round(GeometricBinaryGModel(0.3, 0.2, 0.5).gamma_upper(3), 12)
        0.05
        """
        return 2.0 * self.c * self.rho ** (k + 1) / (1.0 - self.rho)

    def alpha_k(self, k: int) -> float:
        """Exact ``alpha_k = 1 - c rho**(k+1) / (1 - rho)``."""
        return 1.0 - self.c * self.rho ** (k + 1) / (1.0 - self.rho)

    @property
    def alpha(self) -> float:
        """Exact ``sum_k (1 - alpha_k) = c rho / (1 - rho)**2``."""
        return self.c * self.rho / (1.0 - self.rho) ** 2

    def default_burn_in(self, k_max: int = 0) -> int:
        return 64 * k_max + 4096

    def _run(self, rng: np.random.Generator, steps: int, s: float) -> tuple[list[int], list[float], float]:
        """Run the exact recursion ``S_{t+1} = rho (S_t + x_t)`` for ``steps`` symbols."""
        theta0, c, rho = self.theta0, self.c, self.rho
        xs: list[int] = []
        qs: list[float] = []
        for u in rng.random(steps).tolist():
            q = theta0 + c * s
            x = 1 if u < q else 0
            xs.append(x)
            qs.append(q)
            s = rho * (s + x)
        return xs, qs, s

    def initial_state(self, rng: np.random.Generator, burn_in: int | None = None) -> float:
        steps = self.default_burn_in() if burn_in is None else burn_in
        return self._run(rng, steps, 0.0)[2]

    def law(self, state: float) -> FloatArray:
        q = self.theta0 + self.c * state
        return np.array([1.0 - q, q])

    def advance(self, state: float, symbol: int) -> float:
        return self.rho * (state + symbol)

    def sample_path(self, n: int, seed: SeedLike, burn_in: int | None = None) -> Sample:
        """Draw ``x_1^n`` after ``burn_in`` steps started from the all-zero past."""
        if n < 1:
            raise InputRangeError("n", ">= 1", n)
        if burn_in is not None and burn_in < 0:
            raise InputRangeError("burn_in", ">= 0", burn_in)
        rng = as_rng(seed)
        s = self.initial_state(rng, burn_in)
        xs, _, _ = self._run(rng, n, s)
        return Sample(self.alphabet, np.asarray(xs, dtype="i8"))

    def as_markov(self, depth: int) -> tuple[MarkovChainModel, float]:
        """Order-``depth`` chain with the past beyond ``depth`` set to zero.

        Returns the chain and the bound ``gamma_upper(depth)`` on the total
        variation error of its conditional laws.
        """
        if depth < 0 or 2**depth > BLOCK_BUDGET:
            raise InputRangeError("depth", f"0 <= depth <= {int(math.log2(BLOCK_BUDGET))}", depth)
        codes = np.arange(2**depth, dtype="i8")
        # bit j of the code (from the least significant) is x_{-(j+1)}
        bits = (codes[:, None] >> np.arange(depth)) & 1
        q1 = self.theta0 + self.c * (bits * self.rho ** np.arange(1, depth + 1)).sum(axis=1)
        chain = MarkovChainModel(np.column_stack([1.0 - q1, q1]), name=f"{self.name}|{depth}")
        return chain, self.gamma_upper(depth)

    def monte_carlo(
        self,
        k_max: int,
        path_len: int = MC_PATH_LEN,
        seed: SeedLike = 0,
        batches: int = MC_BATCHES,
    ) -> dict[str, FloatArray]:
        """Rao-Blackwellized Monte Carlo estimates of ``h_k``, ``gamma(k)`` and its lower rate.

        On one stationary path the exact ``q_t = P(1 | past)`` is known, so
        ``P(1 | x_{-k}^{-1})`` is estimated by averaging ``q_t`` per context
        and ``h_k`` by the context-weighted binary entropy of these means.
        Standard errors of ``h_k`` come from ``batches`` batch means.
        """
        rng = as_rng(seed)
        s = self.initial_state(rng, self.default_burn_in(k_max))
        xs, qs, _ = self._run(rng, path_len + k_max, s)
        x = np.asarray(xs, dtype="i8")
        q = np.asarray(qs, dtype="f8")[k_max:]
        batch_id = np.arange(path_len) * batches // path_len

        h = np.zeros(k_max + 1)
        h_se = np.zeros(k_max + 1)
        g_hi = np.zeros(k_max + 1)
        g_lo = np.zeros(k_max + 1)
        ctx = np.zeros(path_len, dtype="i8")
        for k in range(k_max + 1):
            if k > 0:
                ctx = ctx * 2 + x[k_max - k : k_max - k + path_len]
            n_ctx = 2**k
            _, inv = np.unique(ctx, return_inverse=True)
            mean = np.bincount(inv, weights=q) / np.bincount(inv)
            dev = 2.0 * np.abs(mean[inv] - q)
            g_hi[k], g_lo[k] = dev.max(), dev.min()
            h[k] = _weighted_h2(inv, q, mean.size)
            per_batch = [_batch_h2(ctx[batch_id == b], q[batch_id == b]) for b in range(batches)]
            h_se[k] = float(np.std(per_batch, ddof=1) / math.sqrt(batches))
            logger.debug("Monte Carlo h_%d = %.6f (%d of %d contexts seen)", k, h[k], mean.size, n_ctx)
        return {
            "h": np.minimum.accumulate(h),
            "h_se": h_se,
            "gamma_upper": np.maximum(g_hi, 0.0),
            "gamma_lower": g_lo,
        }

    def quantities(
        self, k_max: int, path_len: int = MC_PATH_LEN, seed: SeedLike = 0
    ) -> ProcessQuantities:
        mc = self.monte_carlo(k_max, path_len, seed)
        return ProcessQuantities(
            h=mc["h"],
            h_se=mc["h_se"],
            gamma_upper=np.array([self.gamma_upper(k) for k in range(k_max + 1)]),
            gamma_lower=mc["gamma_lower"],
            alpha_k=np.array([self.alpha_k(k) for k in range(k_max + 1)]),
            alpha0=self.alpha_k(0),
            alpha=self.alpha,
            p_inf=self.p_inf,
            provenance={
                "h": "monte-carlo",
                "gamma_upper": "bound",
                "gamma_lower": "monte-carlo",
                "alpha_k": "exact",
                "alpha0": "exact",
                "alpha": "exact",
                "p_inf": "exact",
            },
        )

    def to_config(self) -> dict[str, Any]:
        return {"type": "gmodel", "name": self.name, "theta0": self.theta0, "c": self.c, "rho": self.rho}


def _binary_entropy(p: FloatArray) -> FloatArray:
    return -(sps.xlogy(p, p) + sps.xlogy(1.0 - p, 1.0 - p)) / LN2


def _weighted_h2(inv: npt.NDArray[np.int64], q: FloatArray, n_ctx: int) -> float:
    counts = np.bincount(inv, minlength=n_ctx)
    mean = np.bincount(inv, weights=q, minlength=n_ctx) / np.maximum(counts, 1)
    return float((counts * _binary_entropy(mean)).sum() / counts.sum())


def _batch_h2(ctx: npt.NDArray[np.int64], q: FloatArray) -> float:
    uniq, inv = np.unique(ctx, return_inverse=True)
    return _weighted_h2(inv, q, uniq.size)


def sample_path(model: ProcessModel, n: int, seed: SeedLike, burn_in: int | None = None) -> Sample:
    """Draw ``x_1^n`` from ``model``; equal seeds give identical paths."""
    return model.sample_path(n, seed, burn_in)


def true_entropies(model: ProcessModel, k_max: int) -> FloatArray:
    """Conditional entropies ``h_0..h_kmax``, exact for Markov chains and Monte Carlo otherwise."""
    if isinstance(model, MarkovChainModel):
        return model.true_entropies(k_max)
    return model.quantities(k_max).h


def continuity_rates(model: ProcessModel, k_max: int) -> tuple[FloatArray, FloatArray | None]:
    """Upper and lower continuity rates for ``k = 0..k_max``.

    Markov chains give exact rates. The g-model gives its certified upper
    bound and a Monte Carlo lower rate.
    """
    if isinstance(model, MarkovChainModel):
        rates = np.array([model.continuity_rates(k) for k in range(k_max + 1)], dtype="f8")
        return rates[:, 0], rates[:, 1]
    if isinstance(model, GeometricBinaryGModel):
        upper = np.array([model.gamma_upper(k) for k in range(k_max + 1)])
        return upper, model.monte_carlo(k_max)["gamma_lower"]
    return np.array([model.gamma_upper(k) for k in range(k_max + 1)]), None


def nonnullness_constants(model: ProcessModel) -> tuple[float, float, float]:
    """``(alpha0, alpha, p_inf)`` of a Markov chain or a g-model."""
    if isinstance(model, GeometricBinaryGModel):
        return model.alpha_k(0), model.alpha, model.p_inf
    if isinstance(model, MarkovChainModel):
        alpha = float(sum(1.0 - model.alpha_k(k) for k in range(model.order)))
        return model.alpha_k(0), alpha, model.p_inf
    q = model.quantities(0)
    return q.alpha0, q.alpha, q.p_inf


def markov_zoo() -> dict[str, MarkovChainModel]:
    """Binary and ternary Markov chains of orders 0 to 3 used as ground truth.

    The order-3 chain has ``P(1 | a b c) = 0.1 + 0.55 a + 0.15 b + 0.1 c``
    with ``a`` the oldest symbol.
    """
    p1_order2 = np.array([0.1, 0.6, 0.5, 0.85])
    abc = (np.arange(8)[:, None] >> np.array([2, 1, 0])) & 1
    p1_order3 = 0.1 + abc @ np.array([0.55, 0.15, 0.1])
    models = [
        iid_model([0.5, 0.5], "iid-uniform"),
        iid_model([0.3, 0.7], "iid-biased"),
        MarkovChainModel([[0.7, 0.3], [0.2, 0.8]], "markov1"),
        MarkovChainModel(np.column_stack([1.0 - p1_order2, p1_order2]), "markov2"),
        MarkovChainModel(np.column_stack([1.0 - p1_order3, p1_order3]), "markov3"),
        MarkovChainModel([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]], "ternary1"),
    ]
    return {m.name: m for m in models}


def model_from_config(config: dict[str, Any]) -> ProcessModel:
    """Build a model from a config mapping.

    Keys are ``type`` (``markov``, ``iid`` or ``gmodel``), ``alphabet_size``,
    ``order`` and ``transition`` (nested rows or a row-major flat list) for
    ``markov``, ``probs`` for ``iid``, ``theta0``, ``c`` and ``rho`` for
    ``gmodel``, an optional ``name``, or ``zoo`` naming a model of
    :func:`markov_zoo`.
    """
    if "zoo" in config:
        zoo = markov_zoo()
        if config["zoo"] not in zoo:
            raise InputValueError("zoo", list(zoo), config["zoo"])
        return zoo[config["zoo"]]
    kind = config.get("type")
    name = config.get("name")
    try:
        if kind == "gmodel":
            return GeometricBinaryGModel(config["theta0"], config["c"], config["rho"], name)
        if kind == "iid":
            return iid_model(config["probs"], name)
        if kind == "markov":
            q = np.asarray(config["transition"], dtype="f8")
            if q.ndim == 1:
                size = int(config["alphabet_size"])
                q = q.reshape(size ** int(config.get("order", 1)), size)
            model = MarkovChainModel(q, name)
            if "order" in config and int(config["order"]) != model.order:
                raise InputValueError("order", [model.order], config["order"])
            return model
    except KeyError as ex:
        raise InputValueError(f"{kind} model key", ["see model_from_config"], str(ex)) from ex
    raise InputValueError("type", ("markov", "iid", "gmodel"), kind)


def load_model(path: str | Path) -> ProcessModel:
    """Load a model from a TOML file, either at the top level or under ``[model]``."""
    config = load_toml(path)
    return model_from_config(config.get("model", config))
