"""Shared domain types and numeric conventions.

All entropies, criteria and code lengths are in bits. Symbols are dense integer
indices ``0..|A|-1`` and a string ``a_1^d`` is keyed by its base-``|A|`` code
``sum(a_i * |A|**(d - i))``, so that numeric order of codes is the
lexicographic order of strings.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Union

import numpy as np
import numpy.typing as npt
import scipy.special as sps

from pymarkovorder.exceptions import (
    InputRangeError,
    InputTypeError,
    InputValueError,
    OrderOverflowError,
    SymbolRangeError,
)

if TYPE_CHECKING:
    IntArray = npt.NDArray[np.int64]

FloatArray = npt.NDArray[np.float64]
LogProb = float
SYMBOLS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_CODE_BITS = 62
PenaltyVariant = Literal["bic", "aic", "power", "const"]

__all__ = [
    "Alphabet",
    "Sample",
    "PenaltySpec",
    "SeedSpec",
    "LogProb",
    "xlog2x",
    "entropy_bits",
    "max_code_depth",
    "check_code_depth",
]


def xlog2x(p: float) -> float:
    """Compute ``p * log2(p)`` with the ``0 * log 0 = 0`` convention.

    Parameters
    ----------
    p : float
        A probability in ``[0, 1]``.

    Returns
    -------
    float
        ``p * log2(p)``.

    Examples
    --------
    >>> xlog2x(0.5)
    -0.5
    >>> xlog2x(0.0)
    0.0
    """
    if not 0.0 <= p <= 1.0:
        raise InputRangeError("p", "0 <= p <= 1", p)
    if p == 0.0:
        return 0.0
    return p * math.log2(p)


def entropy_bits(probs: npt.ArrayLike) -> float:
    """Shannon entropy in bits of a probability vector (zeros are skipped)."""
    p = np.asarray(probs, dtype="f8")
    return float(-sps.xlogy(p, p).sum() / math.log(2.0))


def max_code_depth(alphabet_size: int) -> int:
    """Largest string length whose base-``|A|`` code fits in a signed 64-bit integer."""
    return int(MAX_CODE_BITS // math.log2(alphabet_size))


def check_code_depth(depth: int, alphabet_size: int, order: int | None = None) -> None:
    """Raise :class:`OrderOverflowError` if strings of ``depth`` cannot be coded."""
    dmax = max_code_depth(alphabet_size)
    if depth > dmax:
        if order is None:
            raise OrderOverflowError(depth, dmax)
        raise OrderOverflowError(order, dmax - (depth - order))


@dataclass(frozen=True)
class Alphabet:
    """A finite alphabet of ``size`` symbols indexed ``0..size-1``."""

    size: int

    def __post_init__(self) -> None:
        if not isinstance(self.size, (int, np.integer)):
            raise InputTypeError("size", "int")
        if self.size < 2:
            raise InputRangeError("alphabet size", ">= 2", self.size)
        if self.size > len(SYMBOLS):
            raise InputRangeError("alphabet size", f"<= {len(SYMBOLS)}", self.size)

    @property
    def symbols(self) -> str:
        """Characters used for the symbols in text form."""
        return SYMBOLS[: self.size]

    def encode(self, text: str) -> IntArray:
        """Map a string of symbol characters to indices."""
        lookup = {ch: i for i, ch in enumerate(SYMBOLS)}
        try:
            data = np.fromiter((lookup[ch] for ch in text), dtype="i8", count=len(text))
        except KeyError as ex:
            raise InputValueError("symbol", list(self.symbols), str(ex.args[0])) from ex
        return data

    def decode(self, code: int, depth: int) -> str:
        """Text form of the depth-``depth`` string with base-``|A|`` code ``code``."""
        chars = []
        for _ in range(depth):
            code, r = divmod(code, self.size)
            chars.append(SYMBOLS[r])
        return "".join(reversed(chars))

    def code(self, text: str) -> int:
        """Base-``|A|`` code of a string given in text form."""
        value = 0
        for s in self.encode(text):
            value = value * self.size + int(s)
        return value


@dataclass(frozen=True, eq=False)
class Sample:
    """An observed realization ``x_1^n`` over a finite alphabet.

    Parameters
    ----------
    alphabet : Alphabet
        The alphabet of the sample.
    data : array_like of int
        Symbol indices; stored as a read-only ``int64`` array.
    """

    alphabet: Alphabet
    data: IntArray = field(repr=False)

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype="i8").ravel()
        if data.size < 1:
            raise InputRangeError("sample length", ">= 1", 0)
        lo, hi = int(data.min()), int(data.max())
        if lo < 0:
            raise SymbolRangeError(self.alphabet.size, lo)
        if hi >= self.alphabet.size:
            raise SymbolRangeError(self.alphabet.size, hi)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_string(cls, text: str, alphabet_size: int | None = None) -> Sample:
        """Create a sample from text such as ``"0100"``.

        When ``alphabet_size`` is not given it is the smallest valid size
        covering the symbols present (at least 2).

        Examples
        --------
        >>> Sample.from_string("0100").n
        4
        """
        raw = Alphabet(len(SYMBOLS)).encode(text.strip())
        size = alphabet_size or max(2, int(raw.max()) + 1 if raw.size else 2)
        return cls(Alphabet(size), raw)

    @property
    def n(self) -> int:
        """Sample length."""
        return int(self.data.size)

    def to_string(self) -> str:
        """Text form of the sample."""
        return "".join(SYMBOLS[s] for s in self.data)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        head = self.to_string()[:16]
        return f"Sample(|A|={self.alphabet.size}, n={self.n}, data='{head}{'...' if self.n > 16 else ''}')"


@dataclass(frozen=True)
class PenaltySpec:
    """Nondecreasing penalty function ``pen(n)`` of the PML criterion.

    Parameters
    ----------
    variant : {"bic", "aic", "power", "const"}
        ``bic``: ``0.5 * log2(n)``; ``aic``: ``1``; ``power``: ``n**kappa``
        with ``0 < kappa < 1``; ``const``: a constant ``c >= 0``.
    param : float, optional
        ``kappa`` for ``power`` and ``c`` for ``const``.

    Examples
    --------
    >>> PenaltySpec.parse("bic")(16)
    2.0
    >>> PenaltySpec.parse("power:0.5")(16)
    4.0
    """

    variant: PenaltyVariant
    param: float = 0.0

    def __post_init__(self) -> None:
        valid = ("bic", "aic", "power", "const")
        if self.variant not in valid:
            raise InputValueError("penalty", valid, self.variant)
        if self.variant == "power" and not 0.0 < self.param < 1.0:
            raise InputRangeError("kappa", "0 < kappa < 1", self.param)
        if self.variant == "const" and self.param < 0.0:
            raise InputRangeError("c", "c >= 0", self.param)

    @classmethod
    def bic(cls) -> PenaltySpec:
        return cls("bic")

    @classmethod
    def aic(cls) -> PenaltySpec:
        return cls("aic")

    @classmethod
    def power(cls, kappa: float) -> PenaltySpec:
        return cls("power", kappa)

    @classmethod
    def constant(cls, c: float) -> PenaltySpec:
        return cls("const", c)

    @classmethod
    def parse(cls, text: str) -> PenaltySpec:
        """Parse ``bic``, ``aic``, ``power:<kappa>`` or ``const:<c>``."""
        name, _, value = text.strip().lower().partition(":")
        if name in ("bic", "aic"):
            return cls(name)  # pyright: ignore[reportArgumentType]
        if name in ("power", "const") and value:
            try:
                param = float(value)
            except ValueError as ex:
                raise InputValueError("penalty", ["bic", "aic", "power:<kappa>", "const:<c>"], text) from ex
            return cls(name, param)  # pyright: ignore[reportArgumentType]
        raise InputValueError("penalty", ["bic", "aic", "power:<kappa>", "const:<c>"], text)

    def __call__(self, n: float) -> float:
        if n < 1:
            raise InputRangeError("n", ">= 1", n)
        if self.variant == "bic":
            return 0.5 * math.log2(n)
        if self.variant == "aic":
            return 1.0
        if self.variant == "power":
            return float(n) ** self.param
        return self.param

    @property
    def label(self) -> str:
        """Text form accepted by :meth:`parse`."""
        if self.variant in ("bic", "aic"):
            return self.variant
        return f"{self.variant}:{self.param:g}"


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic seeding contract.

    The generator for the key tuple ``(k_1, ..., k_m)`` is
    ``numpy.random.default_rng(SeedSequence(master_seed, spawn_key=(k_1, ..., k_m)))``.
    String keys are mapped to integers through CRC-32 so that they are stable
    across interpreter runs.

    Parameters
    ----------
    master_seed : int
        A 64-bit integer.
    """

    master_seed: int

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < 2**64:
            raise InputRangeError("master_seed", "0 <= seed < 2**64", self.master_seed)

    @staticmethod
    def key(value: Union[int, str]) -> int:
        """Stable non-negative integer form of a seed key."""
        if isinstance(value, str):
            return zlib.crc32(value.encode("utf-8"))
        return int(value)

    def sequence(self, *keys: Union[int, str]) -> np.random.SeedSequence:
        """Seed sequence for the key tuple."""
        return np.random.SeedSequence(
            int(self.master_seed), spawn_key=tuple(self.key(k) for k in keys)
        )

    def rng(self, *keys: Union[int, str]) -> np.random.Generator:
        """Random generator for the key tuple (trial ``t`` uses ``rng(t)``)."""
        return np.random.default_rng(self.sequence(*keys))
