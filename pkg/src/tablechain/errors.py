"""Exception types shared across the package."""

from __future__ import annotations


class TableChainError(Exception):
    """Base class for all errors raised by this package."""


class RaggedRow(TableChainError):
    def __init__(self, line_no: int, expected: int, got: int):
        self.line_no = line_no
        self.expected = expected
        self.got = got
        super().__init__(f"line {line_no}: expected {expected} fields, got {got}")


class Utf8Error(TableChainError):
    def __init__(self, offset: int):
        self.offset = offset
        super().__init__(f"invalid UTF-8 at byte offset {offset}")


class UnknownColumn(TableChainError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown column: {name!r}")


class BadPermutation(TableChainError):
    def __init__(self, kind: str, expected_len: int, got_len: int):
        self.kind = kind
        self.expected_len = expected_len
        self.got_len = got_len
        super().__init__(
            f"bad {kind} permutation: expected length {expected_len}, got {got_len}"
        )


class ParseError(TableChainError):
    def __init__(self, line: int, col: int, expected: str, found: str):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}, col {col}: expected {expected}, found {found}")


class EvalTypeError(TableChainError):
    """Operator applied to operands of incompatible types."""

    def __init__(self, op: str, lhs_type: str, rhs_type: str):
        self.op = op
        self.lhs_type = lhs_type
        self.rhs_type = rhs_type
        super().__init__(f"cannot apply {op!r} to {lhs_type} and {rhs_type}")


class AmbiguousColumn(TableChainError):
    def __init__(self, name: str, candidates: list[str]):
        self.name = name
        self.candidates = sorted(candidates)
        super().__init__(
            f"column {name!r} is ambiguous; candidates: {', '.join(self.candidates)}"
        )


class ExecError(TableChainError):
    def __init__(self, command_index: int, cause: Exception):
        self.command_index = command_index
        self.cause = cause
        super().__init__(f"command {command_index}: {cause}")


class EmptySchema(TableChainError):
    pass


class ShapeMismatch(TableChainError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected shape {expected}, got {got}")


class TooFewColumns(TableChainError):
    def __init__(self, n_cols: int, minimum: int):
        self.n_cols = n_cols
        self.minimum = minimum
        super().__init__(f"table has {n_cols} columns, need at least {minimum}")


class NonFiniteLoss(TableChainError):
    def __init__(self, step: int, detail: str = ""):
        self.step = step
        self.detail = detail
        super().__init__(f"non-finite loss at step {step}" + (f": {detail}" if detail else ""))
