"""Customized PyMarkovOrder exceptions."""
from __future__ import annotations

from typing import Generator, Sequence


class InputTypeError(TypeError):
    """Exception raised when a function argument type is invalid.

    Parameters
    ----------
    arg : str
        Name of the function argument
    valid_type : str
        The valid type of the argument
    example : str, optional
        An example of a valid form of the argument, defaults to None.
    """

    def __init__(self, arg: str, valid_type: str, example: str | None = None) -> None:
        self.message = f"The {arg} argument should be of type {valid_type}"
        if example is not None:
            self.message += f":\n{example}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InputValueError(ValueError):
    """Exception raised for invalid input.

    Parameters
    ----------
    inp : str
        Name of the input parameter
    valid_inputs : tuple
        List of valid inputs
    given : str, optional
        The given input, defaults to None.
    """

    def __init__(
        self,
        inp: str,
        valid_inputs: Sequence[str | int] | Generator[str | int, None, None],
        given: str | int | None = None,
    ) -> None:
        if given is None:
            self.message = f"Given {inp} is invalid. Valid options are:\n"
        else:
            self.message = f"Given {inp} ({given}) is invalid. Valid options are:\n"
        self.message += "\n".join(str(i) for i in valid_inputs)
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InputRangeError(ValueError):
    """Exception raised when a function argument is not in the valid range.

    Parameters
    ----------
    variable : str
        Variable with invalid value
    valid_range : str
        Valid range, usually the violated inequality.
    given : float or int, optional
        The given value, defaults to None.
    """

    def __init__(self, variable: str, valid_range: str, given: float | None = None) -> None:
        self.message = f"Valid range for {variable} is {valid_range}"
        if given is not None:
            self.message += f" (got {given})"
        self.message += "."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class EmptyWindowError(InputRangeError):
    """Exception raised when a string depth exceeds the counting window.

    Parameters
    ----------
    depth : int
        Requested string length.
    window_len : int
        Length of the counting window.
    """

    def __init__(self, depth: int, window_len: int) -> None:
        super().__init__("depth", f"1 <= depth <= window_len = {window_len}", depth)


class SymbolRangeError(InputRangeError):
    """Exception raised when a sample holds symbols outside of its alphabet.

    Parameters
    ----------
    alphabet_size : int
        Size of the alphabet.
    given : int
        The offending symbol index.
    """

    def __init__(self, alphabet_size: int, given: int) -> None:
        super().__init__("symbol indices", f"0 <= symbol < {alphabet_size}", given)


class OrderOverflowError(OverflowError):
    """Exception raised when ``|A|**k`` does not fit in a machine integer.

    Parameters
    ----------
    order : int
        The requested order.
    max_order : int
        The largest order that can be represented.
    """

    def __init__(self, order: int, max_order: int) -> None:
        self.message = (
            f"Order {order} overflows the string code range; "
            f"the largest representable order is {max_order}."
        )
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class CapacityError(Exception):
    """Exception raised when an exhaustive computation exceeds its budget.

    Parameters
    ----------
    what : str
        The computation that was refused.
    size : int
        Size of the requested enumeration.
    budget : int
        The enumeration budget.
    alternative : str, optional
        What to use instead, defaults to None.
    """

    def __init__(self, what: str, size: int, budget: int, alternative: str | None = None) -> None:
        self.message = f"{what} requires {size} terms which exceeds the budget of {budget}."
        if alternative is not None:
            self.message += f" Use {alternative} instead."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class ConvergenceError(Exception):
    """Exception raised when an iterative solver does not converge.

    Parameters
    ----------
    what : str
        Name of the iteration.
    iterations : int
        Number of iterations carried out.
    residual : float
        Residual at the last iteration.
    """

    def __init__(self, what: str, iterations: int, residual: float) -> None:
        self.residual = residual
        self.message = f"{what} did not converge after {iterations} iterations (residual {residual:.3e})."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class MissingConstantError(Exception):
    """Exception raised when process constants required by a bound are missing.

    Parameters
    ----------
    missing : list
        Names of the missing constants.
    bound : str, optional
        Name of the bound being evaluated, defaults to None.
    """

    def __init__(self, missing: list[str], bound: str | None = None) -> None:
        target = f" by {bound}" if bound else ""
        self.message = f"The following constants are required{target}:\n" + ", ".join(missing)
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InsufficientEntropiesError(InputRangeError):
    """Exception raised when an oracle order cannot be certified from the given entropies.

    Parameters
    ----------
    given : int
        Number of conditional entropies supplied.
    required : int
        Number of conditional entropies needed.
    """

    def __init__(self, given: int, required: int) -> None:
        super().__init__("len(h)", f">= {required} to certify the minimum", given)


class NonNullWarning(UserWarning):
    """Warning issued when a process model is not non-null."""
