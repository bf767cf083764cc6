"""Exception types mapped onto distinct CLI exit codes."""

from __future__ import annotations


class MedlexError(Exception):
    """Base class for all toolkit errors."""


class ParseError(MedlexError):
    """Malformed or missing input; names the file and line when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: " if line is None else f"{path}:{line}: "
        super().__init__(where + message)


class LintError(MedlexError):
    """Configuration table failed a lint check."""


class MergeConflictError(MedlexError):
    """Resources with equal trust rank disagree on a term's category."""

    def __init__(self, conflicts: list[tuple[str, str, str, str, str]]):
        self.conflicts = conflicts
        lines = [
            f"  {term!r}: {src_a}={cat_a} vs {src_b}={cat_b}"
            for term, src_a, cat_a, src_b, cat_b in conflicts
        ]
        super().__init__(
            "equal trust rank with disagreeing categories; assign explicit ranks:\n"
            + "\n".join(lines)
        )


class GoldCoverageError(MedlexError):
    """A gold term has no prediction to score against."""

    def __init__(self, term: str):
        self.term = term
        super().__init__(f"gold term not present in predictions: {term!r}")
