"""Errors raised when a request exceeds an exact-computation budget."""


class StateSpaceError(ValueError):
    """Exhaustive enumeration was refused because the state space is too large."""


class PathCountExceeded(RuntimeError):
    """Path enumeration stopped after finding more paths than the cap allows."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(
            f"path enumeration exceeded cap: found {count} paths (cap {cap})"
        )


class SubsetCapExceeded(RuntimeError):
    """An inclusion-exclusion sum was refused because 2**P subsets is too many."""

    def __init__(self, paths: int, subsets_needed: int, cap: int,
                 at_least: bool = False):
        self.paths = paths
        self.subsets_needed = subsets_needed
        self.cap = cap
        self.at_least = at_least
        qual = "at least " if at_least else ""
        super().__init__(
            f"subset sum refused: P={qual}{paths} paths needs {qual}"
            f"{subsets_needed} subset terms, cap is {cap}"
        )
