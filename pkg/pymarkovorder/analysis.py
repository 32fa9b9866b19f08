"""Oracle order estimation, the K_n threshold and evaluators of the explicit probability bounds.

Logarithms are to the base 2 and ``exp`` is the natural exponential, as in
the displayed bounds. Every evaluator checks the hypothesis ranges of its
bound, refuses inputs outside them, and clamps probabilities to ``[0, 1]``.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, Literal, NamedTuple, Sequence, Union

import numpy as np
import pandas as pd

from pymarkovorder.core import PenaltySpec, Sample, entropy_bits
from pymarkovorder.criteria import TIE_TOLERANCE, kt_ml_gap
from pymarkovorder.exceptions import (
    InputRangeError,
    InputValueError,
    InsufficientEntropiesError,
    MissingConstantError,
)

if TYPE_CHECKING:
    import numpy.typing as npt

    GammaLike = Union[Sequence[float], Callable[[int], float], "npt.NDArray[np.float64]"]
    UndershootKind = Literal["pml", "nml", "kt"]

logger = logging.getLogger(__name__)

E_POW = math.e ** (1.0 / math.e)
LOG2_E = math.log2(math.e)
PRODUCT_CUTOFF = 2.0**-60
PRODUCT_MAX_TERMS = 10**6
STABILITY_SIGMAS = 3.0
BOUND_NAMES = ("overshoot", "entropy-deviation", "undershoot", "undershoot-gap", "dbar")
BOUND_CODES = {
    "t2": "overshoot",
    "t6": "entropy-deviation",
    "t8": "undershoot",
    "t10": "dbar",
    "prop1": "undershoot-gap",
}

__all__ = [
    "BoundInputs",
    "OracleOrder",
    "UndershootBound",
    "EntropyDeviationBound",
    "DbarBound",
    "oracle_pml_order",
    "k_threshold",
    "bound_overshoot",
    "nonnull_lambdas",
    "undershoot_order_threshold",
    "bound_undershoot_threshold",
    "bound_bounded_undershoot",
    "bound_entropy_deviation",
    "beta_constants",
    "bound_dbar",
    "entropy_tv_bound",
    "fit_kt_constant",
    "bound_grid",
]

CONSTANT_NAMES = (
    "alpha0",
    "alpha",
    "p_inf",
    "delta1",
    "zeta1",
    "delta2",
    "zeta2",
    "theta1",
    "theta2",
    "k_theta",
    "lambda1",
    "lambda2",
    "beta1",
    "beta2",
    "c_kt",
)
RATE_NAMES = ("eps", "eta", "mu", "kappa", "xi")


@dataclass(frozen=True)
class BoundInputs:
    """Sample size, penalty, process constants and rate parameters of a bound.

    Every constant is optional; evaluators list the ones they need through
    :class:`~pymarkovorder.exceptions.MissingConstantError`. ``provenance``
    maps constant names to ``exact``, ``bound``, ``monte-carlo`` or
    ``user`` and is carried into reports.
    """

    n: int
    alphabet_size: int = 2
    pen: PenaltySpec | None = None
    alpha0: float | None = None
    alpha: float | None = None
    p_inf: float | None = None
    delta1: float | None = None
    zeta1: float | None = None
    delta2: float | None = None
    zeta2: float | None = None
    theta1: float | None = None
    theta2: float | None = None
    k_theta: int | None = None
    lambda1: float | None = None
    lambda2: float | None = None
    beta1: float | None = None
    beta2: float | None = None
    c_kt: float | None = None
    eps: float | None = None
    eta: float | None = None
    mu: float | None = None
    kappa: float | None = None
    xi: float | None = None
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InputRangeError("n", ">= 2", self.n)
        if self.alphabet_size < 2:
            raise InputRangeError("alphabet size", ">= 2", self.alphabet_size)

    @classmethod
    def from_mapping(cls, params: dict[str, Any]) -> BoundInputs:
        """Build from a flat mapping such as a ``[constants]`` TOML table."""
        valid = {f.name for f in dataclasses.fields(cls)}
        unknown = set(params) - valid
        if unknown:
            raise InputValueError("bound parameter", sorted(valid), ", ".join(sorted(unknown)))
        kwargs = dict(params)
        if isinstance(kwargs.get("pen"), str):
            kwargs["pen"] = PenaltySpec.parse(kwargs["pen"])
        kwargs.setdefault("n", 2)
        provenance = dict(kwargs.pop("provenance", {}))
        for name in (*CONSTANT_NAMES, *RATE_NAMES):
            if name in kwargs:
                provenance.setdefault(name, "user")
        return cls(**kwargs, provenance=provenance)

    def with_n(self, n: int) -> BoundInputs:
        return dataclasses.replace(self, n=n)

    def require(self, *names: str, bound: str | None = None) -> tuple[Any, ...]:
        """Values of ``names``, refusing with the list of missing ones."""
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise MissingConstantError(missing, bound)
        return tuple(getattr(self, name) for name in names)


class OracleOrder(NamedTuple):
    """Oracle PML order and whether it survives a ``3 sigma`` change of ``h``."""

    order: int
    stable: bool
    scores: tuple[float, ...]


class UndershootBound(NamedTuple):
    """Order threshold ``k_n``, its probability bound and the size condition."""

    k_n: float
    probability: float
    n0: float
    n_sufficient: bool


class EntropyDeviationBound(NamedTuple):
    """Deviation threshold, largest order covered and the two bounds."""

    threshold: float
    max_order: int
    block_bound: float
    conditional_bound: float


class DbarBound(NamedTuple):
    """Distance threshold and the probability terms of the process estimation bound."""

    g_n: float
    threshold: float
    k_n: int
    terms: tuple[float, float, float]
    probability: float


def _clamp(p: float) -> float:
    if math.isnan(p):
        return 1.0
    return min(max(p, 0.0), 1.0)


def _exp(x: float) -> float:
    return math.exp(min(x, 700.0))


def _gamma_fn(gamma: GammaLike) -> Callable[[int], float]:
    """Callable continuity rate; a sequence is extended by its last value."""
    if callable(gamma):
        return gamma
    values = [float(g) for g in gamma]
    if not values:
        raise InputRangeError("gamma", "a non-empty sequence")

    def rate(k: int) -> float:
        return values[min(k, len(values) - 1)]

    return rate


def oracle_pml_order(
    h: Sequence[float],
    n: int,
    pen: PenaltySpec,
    alphabet_size: int = 2,
    h_se: Sequence[float] | None = None,
) -> OracleOrder:
    """Smallest minimizer of ``(n - k) h_k + (|A| - 1) |A|**k pen(n)`` over ``0 <= k < n``.

    Orders beyond the supplied ``h`` are ruled out when their penalty alone
    reaches the best score; otherwise more entropies are requested.

    Parameters
    ----------
    h : sequence of float
        Conditional entropies ``h_0, h_1, ...`` in bits, nonincreasing.
    n : int
        Sample size.
    pen : PenaltySpec
        The penalty.
    alphabet_size : int, optional
        Alphabet size, defaults to 2.
    h_se : sequence of float, optional
        Standard errors of ``h``. When given, ``stable`` tells whether the
        order is the same for every ``h`` within three standard errors.

    Returns
    -------
    OracleOrder
        The order, its stability and the scores of the supplied orders.

    Examples
    --------
    >>> oracle_pml_order([1.0] * 8, 2**10, PenaltySpec.bic()).order
    0
    """
    h_arr = np.asarray(h, dtype="f8")
    se = np.zeros_like(h_arr) if h_se is None else np.asarray(h_se, dtype="f8")
    if h_arr.size < 1:
        raise InsufficientEntropiesError(0, 1)
    if (np.diff(h_arr) > TIE_TOLERANCE + STABILITY_SIGMAS * (se[1:] + se[:-1])).any():
        raise InputRangeError("h", "a nonincreasing sequence")
    size = alphabet_size
    pen_n = pen(n)
    count = min(h_arr.size, n)
    ks = np.arange(count)
    penalty = (size - 1) * np.power(float(size), ks) * pen_n
    scores = (n - ks) * h_arr[:count] + penalty

    best_k, best = 0, math.inf
    for k, value in enumerate(scores):
        if value < best - TIE_TOLERANCE:
            best_k, best = k, float(value)
    if count < n and (size - 1) * float(size) ** count * pen_n < best - TIE_TOLERANCE:
        required = count
        while required < n and (size - 1) * float(size) ** required * pen_n < best - TIE_TOLERANCE:
            required += 1
        raise InsufficientEntropiesError(count, required)

    stable = True
    if h_se is not None:
        lo = (n - ks) * (h_arr[:count] - STABILITY_SIGMAS * se[:count]) + penalty
        hi_best = (n - best_k) * (h_arr[best_k] + STABILITY_SIGMAS * se[best_k]) + penalty[best_k]
        stable = bool(
            all(lo[k] > hi_best + TIE_TOLERANCE for k in range(best_k))
            and all(lo[k] >= hi_best - TIE_TOLERANCE for k in range(best_k + 1, count))
        )
    return OracleOrder(best_k, stable, tuple(float(s) for s in scores))


def k_threshold(r_n: float, gamma_upper: GammaLike, f_n: float) -> int:
    """``min{floor(r_n), k >= 0 : gamma(k) < f_n}``.

    Examples
    --------
    >>> k_threshold(100, lambda k: 2.0**-k, 0.1)
    4
    >>> k_threshold(5, lambda k: 2.0**-k, 1e-9)
    5
    """
    if f_n <= 0:
        raise InputRangeError("f(n)", "> 0", f_n)
    cap = math.floor(r_n)
    if cap < 0:
        raise InputRangeError("r_n", ">= 0", r_n)
    rate = _gamma_fn(gamma_upper)
    for k in range(cap):
        if rate(k) < f_n:
            return k
    return cap


def bound_overshoot(n: int, k: float, lambda1: float, lambda2: float) -> float:
    """Bound ``min(1, 2**(lambda1 + 2 log n - lambda2 k))`` on overshooting order ``k``.

    Examples
    --------
    >>> bound_overshoot(4, 10, 0.0, 1.0)
    0.015625
    """
    if lambda2 <= 0:
        raise InputRangeError("lambda2", "> 0", lambda2)
    if n < 1:
        raise InputRangeError("n", ">= 1", n)
    return _clamp(2.0 ** min(lambda1 + 2.0 * math.log2(n) - lambda2 * k, 1.0))


def nonnull_lambdas(p_inf: float) -> tuple[float, float]:
    """``(lambda1, lambda2) = (0, |log(1 - p_inf)|)`` of non-null processes.

    Examples
    --------
    >>> nonnull_lambdas(0.5)
    (0.0, 1.0)
    """
    if not 0.0 < p_inf < 1.0:
        raise InputRangeError("p_inf", "0 < p_inf < 1", p_inf)
    return 0.0, abs(math.log2(1.0 - p_inf))


def _deviation_rhs(n: float, eps: float, alpha0: float, alpha: float, scale: float, denom: float) -> float:
    """``scale e**(1/e) exp(-7 alpha0 eps**3 / (denom e (alpha + alpha0)) n**(eps/2) / log n + eps/4 log n)``."""
    log_n = math.log2(n)
    rate = 7.0 * alpha0 * eps**3 / (denom * math.e * (alpha + alpha0))
    return _clamp(scale * E_POW * _exp(-rate * n ** (eps / 2.0) / log_n + eps / 4.0 * log_n))


def undershoot_order_threshold(
    kind: UndershootKind,
    n: float,
    eps: float,
    zeta2: float,
    delta2: float,
    pen: PenaltySpec | None = None,
    alphabet_size: int = 2,
) -> float:
    """Order ``k_n`` below which the estimator falls with small probability, for exponential rates.

    ``k_n = (2 log delta2 - 3 + (1/2 - eps) log n - log max(1, (|A| - 1) pen(n) / sqrt(n))) / (2 zeta2)``
    for PML; the last logarithm is absent for NML and KT.

    Examples
    --------
    >>> undershoot_order_threshold("kt", 2**16, 0.25, 1.0, 1.0)
    0.5
    """
    if kind not in ("pml", "nml", "kt"):
        raise InputValueError("criterion", ("pml", "nml", "kt"), kind)
    value = 2.0 * math.log2(delta2) - 3.0 + (0.5 - eps) * math.log2(n)
    if kind == "pml":
        if pen is None:
            raise MissingConstantError(["pen"], "the PML undershoot order")
        value -= math.log2(max(1.0, (alphabet_size - 1) * pen(n) / math.sqrt(n)))
    return value / (2.0 * zeta2)


def _kt_size_condition(size: int, c_kt: float) -> float:
    return max(math.sqrt(24.0) * LOG2_E**2 * (size - 1) ** 2, 2.0 * c_kt)


def bound_undershoot_threshold(
    kind: UndershootKind,
    inputs: BoundInputs,
    variant: Literal["exponential", "entropy-gap"] = "exponential",
    h: Sequence[float] | None = None,
    entropy_rate: float | None = None,
) -> UndershootBound:
    """Order threshold ``k_n`` and the probability bound on underestimating it.

    Parameters
    ----------
    kind : {"pml", "nml", "kt"}
        The criterion.
    inputs : BoundInputs
        ``n``, ``eps``, ``alpha0``, ``alpha`` and, depending on the variant,
        ``delta1``, ``zeta1``, ``delta2``, ``zeta2``, ``pen`` and ``c_kt``.
    variant : {"exponential", "entropy-gap"}, optional
        ``exponential`` uses continuity rates within
        ``delta2 2**(-zeta2 k) <= gamma(k) <= delta1 2**(-zeta1 k)`` and
        requires ``6 log|A| / zeta1 <= eps < 1/2``. ``entropy-gap`` uses
        ``h_k - H <= delta1 2**(-zeta1 k)``, requires
        ``4 log|A| / zeta1 <= eps < 1/2`` and computes ``k_n`` from ``h``
        and ``entropy_rate``.
    h : sequence of float, optional
        Conditional entropies for the ``entropy-gap`` variant.
    entropy_rate : float, optional
        Entropy rate for the ``entropy-gap`` variant.

    Returns
    -------
    UndershootBound
        ``k_n``, the probability bound, the smallest ``n`` the bound is
        stated for and whether ``inputs.n`` reaches it.
    """
    if kind not in ("pml", "nml", "kt"):
        raise InputValueError("criterion", ("pml", "nml", "kt"), kind)
    name = f"the {variant} undershoot bound"
    n, size = inputs.n, inputs.alphabet_size
    eps, alpha0, alpha, delta1, zeta1 = inputs.require(
        "eps", "alpha0", "alpha", "delta1", "zeta1", bound=name
    )
    pen = inputs.require("pen", bound=name)[0] if kind == "pml" else None
    c_kt = inputs.require("c_kt", bound=name)[0] if kind != "pml" else 0.0
    log_a = math.log2(size)

    if variant == "exponential":
        delta2, zeta2 = inputs.require("delta2", "zeta2", bound=name)
        if not 6.0 * log_a / zeta1 <= eps < 0.5:
            raise InputRangeError("eps", f"6 log|A| / zeta1 = {6.0 * log_a / zeta1:.4g} <= eps < 1/2", eps)
        if zeta2 < zeta1:
            raise InputRangeError("zeta2", f"zeta2 >= zeta1 = {zeta1}", zeta2)
        k_n = undershoot_order_threshold(kind, n, eps, zeta2, delta2, pen, size)
        if kind == "pml":
            n0 = 36.0 * delta1 ** (4.0 / 3.0) * 2.0 ** (4.0 * zeta1 / 3.0) * log_a**2 / LOG2_E**2
        else:
            rate_term = 6.0 * delta1 ** (2.0 / 3.0) * 2.0 ** (2.0 * zeta1 / 3.0) * log_a / LOG2_E
            n0 = max(_kt_size_condition(size, c_kt), rate_term) ** 2
    elif variant == "entropy-gap":
        if not 4.0 * log_a / zeta1 <= eps < 0.5:
            raise InputRangeError("eps", f"4 log|A| / zeta1 = {4.0 * log_a / zeta1:.4g} <= eps < 1/2", eps)
        if h is None or entropy_rate is None:
            raise MissingConstantError(["h", "entropy_rate"], name)
        if kind == "pml":
            assert pen is not None
            gap = 4.0 * max(math.sqrt(n), (size - 1) * pen(n)) / n ** (1.0 - eps)
            n0 = (delta1 * 2.0**zeta1) ** 2
        else:
            gap = 4.0 / n ** (0.5 - eps)
            n0 = max(_kt_size_condition(size, c_kt), delta1 * 2.0**zeta1) ** 2
        below = [k for k, hk in enumerate(h) if hk - entropy_rate < gap]
        if not below:
            raise InsufficientEntropiesError(len(h), len(h) + 1)
        k_n = float(below[0])
    else:
        raise InputValueError("variant", ("exponential", "entropy-gap"), variant)

    probability = _deviation_rhs(n, eps, alpha0, alpha, 12.0, 256.0)
    return UndershootBound(k_n, probability, n0, n >= n0)


def bound_bounded_undershoot(
    kind: UndershootKind, inputs: BoundInputs, gamma_upper: GammaLike
) -> UndershootBound:
    """Order threshold and probability bound for the estimator bounded by ``eta log n``.

    Needs ``eta``, ``theta1``, ``theta2``, ``k_theta``, ``p_inf``, ``alpha0``,
    ``alpha`` and, for PML, ``pen``; NML and KT also need ``c_kt``. The
    bound is stated for ``k_n >= k_theta``, reported as ``n_sufficient``
    together with the size condition of NML and KT.
    """
    name = "the bounded undershoot bound"
    n, size = inputs.n, inputs.alphabet_size
    eta, theta1, theta2, k_theta, p_inf, alpha0, alpha = inputs.require(
        "eta", "theta1", "theta2", "k_theta", "p_inf", "alpha0", "alpha", bound=name
    )
    log_n, log_a = math.log2(n), math.log2(size)
    expo = eta * math.log2(size**4 / p_inf)
    if kind == "pml":
        (pen,) = inputs.require("pen", bound=name)
        level = 6.0 * max(math.sqrt(n), (size - 1) * pen(n)) / (p_inf * n ** (1.0 - expo))
        n0 = 0.0
    else:
        (c_kt,) = inputs.require("c_kt", bound=name)
        level = 6.0 / (p_inf * n ** (0.5 - expo))
        n0 = _kt_size_condition(size, c_kt) ** 2
    k_n = k_threshold(eta / theta2 * log_n, gamma_upper, level ** (1.0 / (2.0 * theta1)))
    rate = 7.0 * alpha0 * log_a**3 * eta**3 / (4.0 * math.e * (alpha + alpha0))
    probability = _clamp(
        12.0 * E_POW * _exp(-rate * n ** (2.0 * eta * log_a) / log_n + eta * log_a * log_n)
    )
    return UndershootBound(float(k_n), probability, n0, k_n >= k_theta and n >= n0)


def bound_entropy_deviation(
    n: int, eps: float, alpha0: float, alpha: float, alphabet_size: int = 2
) -> EntropyDeviationBound:
    """Bounds on the largest deviation of the empirical entropies from the true ones.

    The deviation threshold is ``n**-(1/2 - eps)`` over orders
    ``k <= eps log n / (4 log|A|)``. ``block_bound`` covers the block
    entropies ``H_k`` (``k >= 1``) and ``conditional_bound`` the conditional
    entropies ``h_k`` (``k >= 0``).

    Examples
    --------
    >>> b = bound_entropy_deviation(2**16, 0.25, 1.0, 0.0)
    >>> b.max_order, b.threshold
    (1, 0.0625)
    """
    if not 0.0 < eps < 0.5:
        raise InputRangeError("eps", "0 < eps < 1/2", eps)
    if n < 2:
        raise InputRangeError("n", ">= 2", n)
    if alpha0 <= 0:
        raise InputRangeError("alpha0", "> 0", alpha0)
    max_order = math.floor(eps * math.log2(n) / (4.0 * math.log2(alphabet_size)) + 1e-12)
    return EntropyDeviationBound(
        threshold=float(n) ** -(0.5 - eps),
        max_order=max_order,
        block_bound=_deviation_rhs(n, eps, alpha0, alpha, 6.0, 32.0),
        conditional_bound=_deviation_rhs(n, eps, alpha0, alpha, 12.0, 256.0),
    )


def beta_constants(gamma_upper: GammaLike, alphabet_size: int = 2) -> tuple[float, float]:
    """Constants ``beta1`` and ``beta2`` of the process estimation bound.

    ``beta1 = 1 / prod_{j>=1} (1 - 2 gamma(j))`` and ``beta2`` is the
    supremum over ``k >= 1`` of
    ``2 |A| (1 - (1 - 2 |A| gamma(k))**k) / (k gamma(k) prod_{j>=1} (1 - 2 |A| gamma(j))**2)``.
    Products stop once the factor is within ``2**-60`` of 1. The ratio in
    ``beta2`` never exceeds its ``gamma(k) -> 0`` limit ``2 |A|``, so the
    supremum is ``4 |A|**2 / prod**2`` whenever ``gamma`` vanishes.

    Examples
    --------
    >>> beta_constants([0.0])
    (1.0, 16.0)
    """
    size = alphabet_size
    rate = _gamma_fn(gamma_upper)
    log_p1 = 0.0
    log_p2 = 0.0
    sup_ratio = 0.0
    j = 1
    while True:
        g = rate(j)
        if 2.0 * size * g >= 1.0:
            raise InputRangeError(f"2 |A| gamma({j})", "< 1", 2.0 * size * g)
        if g > 0:
            ratio = (1.0 - (1.0 - 2.0 * size * g) ** j) / (j * g)
            sup_ratio = max(sup_ratio, ratio)
        log_p1 += math.log1p(-2.0 * g)
        log_p2 += math.log1p(-2.0 * size * g)
        if 2.0 * size * g < PRODUCT_CUTOFF:
            break
        j += 1
        if j > PRODUCT_MAX_TERMS:
            raise InputRangeError("gamma", f"below {PRODUCT_CUTOFF:.3g} within {PRODUCT_MAX_TERMS} terms")
    # gamma tends to 0, so the ratio approaches its supremum 2 |A|
    sup_ratio = max(sup_ratio, 2.0 * size)
    beta1 = math.exp(-log_p1)
    beta2 = 2.0 * size * sup_ratio * math.exp(-2.0 * log_p2)
    return beta1, beta2


def bound_dbar(
    inputs: BoundInputs, gamma_upper: GammaLike, h_n: int = 0, c: float = 1.0
) -> DbarBound:
    """Distance threshold and probability bound for the empirical Markov estimator.

    The order is estimated by PML bounded by ``eta log n``. With
    ``K = K_n + h_n`` where ``K_n = K_n(eta log n, gamma, c pen(n) / n)``,
    the threshold is ``beta2 / p_inf**2 g_n + n**-(1/2 - mu)`` and the
    probability bound is the sum of three terms: the transition estimation
    term, the order undershoot term and the order overshoot term.

    Parameters
    ----------
    inputs : BoundInputs
        Needs ``pen``, ``p_inf``, ``alpha0``, ``alpha``, ``theta1``,
        ``theta2``, ``k_theta``, ``eta``, ``mu`` and ``c_kt``; ``beta1`` and
        ``beta2`` are computed from ``gamma_upper`` when absent.
    gamma_upper : sequence of float or callable
        Upper continuity rate, nonincreasing.
    h_n : int, optional
        The free order offset, defaults to 0.
    c : float, optional
        The free constant of ``K_n``, defaults to 1.

    Returns
    -------
    DbarBound
        ``g_n``, the threshold, ``K_n``, the three terms and their clamped sum.
    """
    name = "the d-bar bound"
    n, size = inputs.n, inputs.alphabet_size
    pen, p_inf, alpha0, alpha, theta1, theta2, k_theta, eta, mu, c_kt = inputs.require(
        "pen", "p_inf", "alpha0", "alpha", "theta1", "theta2", "k_theta", "eta", "mu", "c_kt",
        bound=name,
    )
    if not 0.0 < p_inf < 1.0:
        raise InputRangeError("p_inf", "0 < p_inf < 1", p_inf)
    rate = _gamma_fn(gamma_upper)
    beta1, beta2 = inputs.beta1, inputs.beta2
    if beta1 is None or beta2 is None:
        b1, b2 = beta_constants(rate, size)
        beta1 = b1 if beta1 is None else beta1
        beta2 = b2 if beta2 is None else beta2

    log_n, log_a = math.log2(n), math.log2(size)
    pen_n = pen(n)
    expo = eta * math.log2(size**4 / p_inf)
    bias_order = math.floor(eta / theta2 * log_n)

    level = 6.0 * max(math.sqrt(n), (size - 1) * pen_n) / (p_inf * n ** (1.0 - expo))
    cond_k = k_threshold(eta / theta2 * log_n, rate, level ** (1.0 / (2.0 * theta1)))
    if cond_k < k_theta:
        raise InputRangeError("the order threshold of the restricted continuity rate", f">= k_theta = {k_theta}", cond_k)

    variance = (6.0 * max(1.0, (size - 1) * pen_n / math.sqrt(n)) / (p_inf * n ** (0.5 - expo))) ** (
        1.0 / (2.0 * theta1)
    )
    g_n = max(rate(bias_order), variance)
    threshold = beta2 / p_inf**2 * g_n + float(n) ** -(0.5 - mu)

    k_n = k_threshold(eta * log_n, rate, c * pen_n / n)
    big_k = k_n + h_n
    log_p = abs(math.log2(p_inf))
    est_rate = p_inf**2 / (16.0 * math.e * size**3 * (alpha + p_inf) * (beta1 + 1.0) ** 2)
    bracket = 4.0 ** (mu * log_n) - big_k * log_p * (beta1 + 1.0) ** 2 / 2.0
    term1 = 2.0 * E_POW * float(size) ** (big_k + 2) * _exp(
        -est_rate * (n - big_k) / ((1.0 + big_k) * n) * 4.0 ** (-big_k * log_p) * bracket
    )
    under_rate = 7.0 * alpha0 * log_a**3 * eta**3 / (4.0 * math.e * (alpha + alpha0))
    term2 = 12.0 * E_POW * _exp(-under_rate * n ** (2.0 * eta * log_a) / log_n + eta * log_a * log_n)
    over_bracket = 1.0 - 1.0 / size ** (1 + h_n) - (log_n - big_k * log_a) / (2.0 * pen_n)
    term3 = _exp(
        -(size - 1) * float(size) ** (big_k + 1) * pen_n * over_bracket
        + c * pen_n / (p_inf / LOG2_E)
        + float(size) ** (big_k + 1) * c_kt
        + math.log2(eta * log_n)
    )
    terms = (_clamp(term1), _clamp(term2), _clamp(term3))
    return DbarBound(g_n, threshold, k_n, terms, _clamp(term1 + term2 + term3))


def entropy_tv_bound(p1: npt.ArrayLike, p2: npt.ArrayLike, k: int, alphabet_size: int = 2) -> tuple[float, float]:
    """Entropy difference of two laws on ``A**k`` and its bound from their total variation.

    With ``d = sum |p1 - p2|`` and ``d <= 1/e`` the bound is
    ``d (k log|A| - log d)`` bits, both sides measured in bits. The form
    with an extra ``1 / log2(e)`` factor mixes nats and bits and does not
    hold: for ``p1 = (1, 0)`` and ``p2 = (0.9, 0.1)`` the entropy gap is
    0.469 bits while that form gives 0.461.

    Returns
    -------
    tuple of (float, float)
        ``|H(p1) - H(p2)|`` and the bound.
    """
    a = np.asarray(p1, dtype="f8")
    b = np.asarray(p2, dtype="f8")
    if a.shape != b.shape or a.size != alphabet_size**k:
        raise InputValueError("law size", [alphabet_size**k], max(a.size, b.size))
    d = float(np.abs(a - b).sum())
    if d > 1.0 / math.e:
        raise InputRangeError("total variation", "d <= 1/e", d)
    diff = abs(entropy_bits(a) - entropy_bits(b))
    bound = 0.0 if d == 0 else d * (k * math.log2(alphabet_size) - math.log2(d))
    return diff, bound


def fit_kt_constant(samples: Sequence[Sample], orders: Sequence[int]) -> float:
    """Smallest ``C`` with ``log ML_k - log P_KT,k <= C |A|**k + (|A| - 1)/2 |A|**k log(n / |A|**k)`` on the data."""
    best = -math.inf
    for sample in samples:
        size, n = sample.alphabet.size, sample.n
        for k in orders:
            if k >= n:
                continue
            width = float(size) ** k
            slack = (size - 1) / 2.0 * width * math.log2(n / width)
            best = max(best, (kt_ml_gap(sample, k) - slack) / width)
    if best == -math.inf:
        raise InputRangeError("orders", "at least one order below the sample size")
    return best


def _grid_gamma(params: dict[str, Any]) -> GammaLike:
    if "gamma" in params:
        return list(params["gamma"])
    if "delta1" in params and "zeta1" in params:
        delta1, zeta1 = float(params["delta1"]), float(params["zeta1"])
        return lambda k: delta1 * 2.0 ** (-zeta1 * k)
    raise MissingConstantError(["gamma or (delta1, zeta1)"], "the continuity rate")


def bound_grid(name: str, params: dict[str, Any], grid: Sequence[int]) -> pd.DataFrame:
    """Evaluate a bound over a grid of sample sizes.

    Parameters
    ----------
    name : {"overshoot", "entropy-deviation", "undershoot", "undershoot-gap", "dbar"}
        ``overshoot`` (threshold ``k`` or ``ceil(k_coef log n)``),
        ``entropy-deviation``, ``undershoot`` with exponential continuity
        rate, ``undershoot-gap`` with decaying entropy gap and ``dbar``
        for the estimated Markov chain. The short codes ``t2``, ``t6``,
        ``t8``, ``t10`` and ``prop1`` of :data:`BOUND_CODES` are accepted too.
    params : dict
        Bound parameters; ``criterion`` selects ``pml``, ``nml`` or ``kt``
        for the undershoot bounds, ``gamma`` or ``delta1``/``zeta1`` give
        the continuity rate and ``h``/``entropy_rate`` the entropies.
    grid : sequence of int
        Sample sizes.

    Returns
    -------
    pandas.DataFrame
        Columns ``n``, ``threshold``, ``bound`` and ``note``; refused grid
        points have empty values and the refusal message as note.
    """
    name = BOUND_CODES.get(name, name)
    if name not in BOUND_NAMES:
        raise InputValueError("bound", [*BOUND_NAMES, *BOUND_CODES], name)
    params = dict(params)
    kind = params.pop("criterion", "pml")
    k_fixed = params.pop("k", None)
    k_coef = params.pop("k_coef", None)
    h = params.pop("h", None)
    entropy_rate = params.pop("entropy_rate", None)
    gamma = params.pop("gamma", None)
    h_n = int(params.pop("h_n", 0))
    c = float(params.pop("c", 1.0))
    rows = []
    for n in grid:
        threshold, bound, note = math.nan, math.nan, ""
        try:
            inputs = BoundInputs.from_mapping({**params, "n": int(n)})
            if name == "overshoot":
                if inputs.lambda2 is None and inputs.p_inf is not None:
                    lambda1, lambda2 = nonnull_lambdas(inputs.p_inf)
                else:
                    lambda1, lambda2 = inputs.require("lambda1", "lambda2", bound="the overshoot bound")
                if k_fixed is not None:
                    threshold = float(k_fixed)
                elif k_coef is not None:
                    threshold = float(math.ceil(float(k_coef) * math.log2(n)))
                else:
                    raise MissingConstantError(["k or k_coef"], "the overshoot bound")
                bound = bound_overshoot(int(n), threshold, lambda1, lambda2)
            elif name == "entropy-deviation":
                eps, alpha0, alpha = inputs.require("eps", "alpha0", "alpha", bound="the entropy deviation bound")
                dev = bound_entropy_deviation(int(n), eps, alpha0, alpha, inputs.alphabet_size)
                threshold, bound = dev.threshold, dev.block_bound
            elif name in ("undershoot", "undershoot-gap"):
                variant = "exponential" if name == "undershoot" else "entropy-gap"
                res = bound_undershoot_threshold(kind, inputs, variant, h, entropy_rate)
                threshold, bound = res.k_n, res.probability
                if not res.n_sufficient:
                    note = f"n below {res.n0:.4g}"
            else:
                rate = gamma if gamma is not None else _grid_gamma(params)
                res = bound_dbar(inputs, rate, h_n, c)
                threshold, bound = res.threshold, res.probability
        except (InputRangeError, MissingConstantError, InsufficientEntropiesError) as ex:
            note = str(ex)
            logger.info("Bound %s refused at n=%d: %s", name, n, ex)
        rows.append({"n": int(n), "threshold": threshold, "bound": bound, "note": note})
    return pd.DataFrame(rows, columns=["n", "threshold", "bound", "note"])
