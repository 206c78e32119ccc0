"""Exception types shared across the package."""


class CrmError(Exception):
    """Base class for data/convergence errors (CLI exit code 1)."""


class DivergenceError(CrmError):
    """A quadrature or iterative scheme failed to converge."""


class UnboundedError(CrmError):
    """Optimization detected an unbounded objective (No Good Deals violated)."""


class InfeasibleError(CrmError):
    """A requested construction has no feasible solution."""


class DataError(CrmError):
    """Malformed input data (parse errors, shape mismatches)."""
