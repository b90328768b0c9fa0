"""Exception hierarchy shared by the solvers, the optimizer and the CLI.

Each class carries a short ``category`` string that the command line
front-end reports in its machine-readable error line.
"""


class UMLMError(Exception):
    category = "error"


class SolverError(UMLMError):
    category = "solver"


class SingularJacobian(SolverError):
    """Jacobian or linear system too ill-conditioned to solve."""

    category = "singular_jacobian"


class NoConvergence(SolverError):
    category = "no_convergence"


class DomainError(SolverError):
    """Argument outside the domain of an inverse trigonometric map."""

    category = "domain"


class AssemblyError(SolverError):
    """A closed loop has no real solution for the given link lengths."""

    category = "assembly"


class OverconstrainedPin(SolverError):
    category = "overconstrained_pin"


class DivisionDomain(SolverError):
    category = "division_domain"


class OutOfReach(SolverError):
    category = "out_of_reach"


class ConfigError(UMLMError):
    category = "config"


class ParseError(ConfigError):
    category = "parse"


class ValidationError(ConfigError):
    category = "validation"
