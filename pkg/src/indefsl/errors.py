"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class IndefSLError(Exception):
    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ParseError(IndefSLError):
    code = "parse_error"


class SignPatternViolation(IndefSLError):
    code = "sign_pattern_violation"


class NonpositiveP(IndefSLError):
    code = "nonpositive_p"


class SymmetryDeclaredButViolated(IndefSLError):
    code = "symmetry_declared_but_violated"


class StepUnderflow(IndefSLError):
    code = "step_underflow"


class NonfiniteState(IndefSLError):
    code = "nonfinite_state"


class NoConvergence(IndefSLError):
    code = "no_convergence"

    def __init__(self, message, last_value=None, X=None):
        super().__init__(message)
        self.last_value = last_value
        self.X = X


class EssentialSpectrumProximity(IndefSLError):
    code = "essential_spectrum_proximity"


class BisectionStall(IndefSLError):
    code = "bisection_stall"


class AlternationViolation(IndefSLError):
    code = "alternation_violation"


class InterleavingViolation(IndefSLError):
    code = "interleaving_violation"


class NonPositiveDefiniteT(IndefSLError):
    code = "nonpositive_definite_T"


class FactorizationFailure(IndefSLError):
    code = "factorization_failure"
