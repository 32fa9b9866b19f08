"""Some utilities for sample files, TOML configs and parameter grids."""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
import ujson as json

from pymarkovorder.core import Alphabet, Sample
from pymarkovorder.exceptions import InputRangeError, InputValueError, SymbolRangeError

try:
    import tomllib as tomli
except ImportError:
    import tomli

if TYPE_CHECKING:
    SampleFormat = Literal["auto", "text", "binary"]

__all__ = [
    "read_sample",
    "write_sample",
    "load_toml",
    "parse_size",
    "parse_grid",
    "config_hash",
]

BINARY_SUFFIXES = (".bin", ".dat")
_HEADER = struct.Struct("<QQ")


def _is_binary(path: Path, fmt: SampleFormat) -> bool:
    if fmt not in ("auto", "text", "binary"):
        raise InputValueError("format", ("auto", "text", "binary"), fmt)
    if fmt == "auto":
        return path.suffix.lower() in BINARY_SUFFIXES
    return fmt == "binary"


def read_sample(
    path: str | Path, alphabet_size: int | None = None, fmt: SampleFormat = "auto"
) -> Sample:
    """Read a sample from a text or a binary file.

    Parameters
    ----------
    path : str or pathlib.Path
        Path to the sample file.
    alphabet_size : int, optional
        Alphabet size of text files. Defaults to the smallest size covering
        the symbols present. Binary files carry their own alphabet size and
        this argument is then only checked against it.
    fmt : {"auto", "text", "binary"}, optional
        File format, by default ``auto`` which picks binary for the
        ``.bin`` and ``.dat`` suffixes.

    Returns
    -------
    Sample
        The validated sample.
    """
    path = Path(path)
    if not _is_binary(path, fmt):
        text = path.read_text(encoding="utf-8")
        return Sample.from_string("".join(text.split()), alphabet_size)

    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise InputRangeError("binary sample size", f">= {_HEADER.size} bytes", len(raw))
    size, n = _HEADER.unpack_from(raw)
    if alphabet_size is not None and alphabet_size != size:
        raise InputValueError("alphabet_size", [size], alphabet_size)
    body = np.frombuffer(raw, dtype="u1", offset=_HEADER.size)
    if body.size != n:
        raise InputRangeError("binary sample length", f"{n} (from header)", body.size)
    if body.size and int(body.max()) >= size:
        raise SymbolRangeError(size, int(body.max()))
    return Sample(Alphabet(int(size)), body.astype("i8"))


def write_sample(sample: Sample, path: str | Path, fmt: SampleFormat = "auto") -> Path:
    """Write a sample as one text line or in the binary format and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if _is_binary(path, fmt):
        header = _HEADER.pack(sample.alphabet.size, sample.n)
        path.write_bytes(header + sample.data.astype("u1").tobytes())
    else:
        path.write_text(sample.to_string() + "\n", encoding="utf-8")
    return path


def load_toml(path: str | Path) -> dict[str, Any]:
    """Load a TOML file into a dictionary."""
    with Path(path).open("rb") as f:
        return tomli.load(f)


def parse_size(value: str | float) -> int:
    """Parse an integer that may be written as a power such as ``2^10``.

    Examples
    --------
    >>> parse_size("2^10")
    1024
    >>> parse_size("4096")
    4096
    """
    if isinstance(value, (int, float, np.integer)):
        return int(value)
    text = value.strip().replace("**", "^")
    try:
        if "^" in text:
            base, _, exp = text.partition("^")
            return int(round(float(base) ** float(exp)))
        return int(float(text))
    except ValueError as ex:
        raise InputValueError("size", ["<int>", "<base>^<exp>"], value) from ex


def parse_grid(value: str | list[Any]) -> list[int]:
    """Parse a sample size grid.

    A grid is either a list of sizes or ``[n=]start:stop:log-step``, which
    gives ``start * 2**(j * log_step)`` for ``j = 0, 1, ...`` up to ``stop``.

    Examples
    --------
    >>> parse_grid("2^8:2^12:2")
    [256, 1024, 4096]
    >>> parse_grid("n=16:64:1")
    [16, 32, 64]
    >>> parse_grid([16, "2^5"])
    [16, 32]
    """
    if isinstance(value, list):
        grid = [parse_size(v) for v in value]
    else:
        text = value.strip()
        parts = text[2:].split(":") if text.startswith("n=") else text.split(":")
        if len(parts) != 3:
            raise InputValueError("grid", ["<start>:<stop>:<log-step>"], value)
        start, stop = parse_size(parts[0]), parse_size(parts[1])
        step = float(parts[2])
        if step <= 0 or start < 1:
            raise InputRangeError("grid", "start >= 1 and log-step > 0", value)
        lo = np.log2(start)
        count = int(np.floor((np.log2(stop) - lo) / step + 1e-9)) + 1
        grid = [int(round(2.0 ** (lo + j * step))) for j in range(max(count, 0))]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputRangeError("grid", "a non-empty strictly increasing sequence", str(grid))
    return grid


def config_hash(config: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration."""
    text = json.dumps(config, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
