"""Error hierarchy shared by the toolkit and mapped to CLI exit codes"""


class LorentzError(ValueError):
    """Base class for every failure raised by the toolkit"""

    kind = "error"

    def details(self) -> dict:
        return {}


class ConfigError(LorentzError):
    kind = "config"


class UsageError(LorentzError):
    """Invalid arguments to an operation (non-positive radii, epsilon, M, ...)"""

    kind = "usage"


class ExpressionSyntaxError(LorentzError):
    """Malformed expression text; position is a 0-based character offset"""

    kind = "syntax"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position

    def details(self) -> dict:
        return {"position": self.position}


class ExpressionArityError(LorentzError):
    kind = "arity"


class ExpressionDomainError(LorentzError):
    """Expression undefined (or not twice differentiable) at a point"""

    kind = "domain"

    def __init__(self, message: str, subterm: str, point=None):
        where = f" at {list(point)}" if point is not None else ""
        super().__init__(f"{message} in '{subterm}'{where}")
        self.subterm = subterm
        self.point = None if point is None else [float(x) for x in point]

    def details(self) -> dict:
        return {"subterm": self.subterm, "point": self.point}


class CausalTypeError(LorentzError):
    """A fixed causal type was required but the point is light-like or of the other type"""

    kind = "causal"

    def __init__(self, message: str, point=None, causal=None):
        super().__init__(message)
        self.point = None if point is None else [float(x) for x in point]
        self.causal = causal

    def details(self) -> dict:
        return {"point": self.point, "causal": None if self.causal is None else self.causal.value}


class UndefinedQuantityError(CausalTypeError):
    kind = "undefined"


class HypothesisError(LorentzError):
    """An estimate's hypothesis does not hold at a sample node"""

    kind = "hypothesis"

    def __init__(self, message: str, node=None, detail: dict | None = None):
        super().__init__(message)
        self.node = None if node is None else [float(x) for x in node]
        self.detail = detail or {}

    def details(self) -> dict:
        return {"node": self.node, **self.detail}


class CatalogError(LorentzError):
    kind = "catalog"


class QuadratureError(LorentzError):
    kind = "quadrature"


class SolverError(LorentzError):
    kind = "solver"


class CausalBreakdownError(SolverError):
    """Iterate left the space-like guard at a grid node"""

    kind = "causal-breakdown"

    def __init__(self, message: str, node):
        super().__init__(message)
        self.node = [float(x) for x in node]

    def details(self) -> dict:
        return {"node": self.node}


class NonConvergenceError(SolverError):
    kind = "non-convergence"

    def __init__(self, message: str, history: list[float], solution=None):
        super().__init__(message)
        self.history = [float(r) for r in history]
        # last iterate, kept for inspection
        self.solution = solution

    def details(self) -> dict:
        return {"residual_history": self.history}
