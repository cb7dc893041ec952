"""Exception types shared across the package."""


class WqisaError(Exception):
    """Base class for library errors."""


class DomainError(WqisaError):
    """A point, knot or interval lies outside the admissible domain."""


class EmptySupportError(WqisaError):
    """No cloud point received positive weight for one or more coefficients.

    Attributes:
        cells: list of (multi_index, site) pairs, where site is the knot
            average whose weight window captured no points. multi_index is
            None when the failure happened outside a grid fit.
    """

    def __init__(self, cells):
        self.cells = list(cells)
        shown = ", ".join(
            f"{'?' if idx is None else idx} at {tuple(float(v) for v in site)}"
            for idx, site in self.cells[:5]
        )
        more = "" if len(self.cells) <= 5 else f" (+{len(self.cells) - 5} more)"
        super().__init__(
            f"empty weight support for {len(self.cells)} coefficient(s): {shown}{more}"
        )


class ParseError(WqisaError):
    """Malformed input data; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")
