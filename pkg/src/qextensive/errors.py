"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` so the CLI can emit a
structured record without string matching.
"""

from __future__ import annotations


class GameError(Exception):
    code = "GameError"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def record(self) -> dict:
        rec = {"error": self.code, "message": self.message}
        rec.update({k: v for k, v in self.details.items() if v is not None})
        return rec


# qstate
class LengthMismatch(GameError, ValueError):
    code = "LengthMismatch"


class NotNormalizable(GameError, ValueError):
    code = "NotNormalizable"


class NonQubitLayout(GameError, ValueError):
    code = "NonQubitLayout"


class GammaOutOfRange(GameError, ValueError):
    code = "GammaOutOfRange"


class DimensionMismatch(GameError, ValueError):
    code = "DimensionMismatch"


class QuditIndexOutOfRange(GameError, IndexError):
    code = "QuditIndexOutOfRange"


class RepeatedQudit(GameError, ValueError):
    code = "RepeatedQudit"


class ShiftOutOfRange(GameError, ValueError):
    code = "ShiftOutOfRange"


class NotUnitary(GameError, ValueError):
    code = "NotUnitary"


# classical / quantum games
class InvalidGame(GameError, ValueError):
    code = "InvalidGame"


class StrategyFormMismatch(GameError, ValueError):
    code = "StrategyFormMismatch"


class ExplosionGuard(GameError, RuntimeError):
    code = "ExplosionGuard"


class NotABijection(GameError, ValueError):
    code = "NotABijection"


class TerminalClass(GameError, ValueError):
    code = "TerminalClass"


class NotTerminal(GameError, ValueError):
    code = "NotTerminal"


class IncompleteProfile(GameError, ValueError):
    code = "IncompleteProfile"


class ChanceNotSupported(GameError, ValueError):
    code = "ChanceNotSupported"


class NotARealization(GameError, ValueError):
    code = "NotARealization"


# eisert
class ParamOutOfRange(GameError, ValueError):
    code = "ParamOutOfRange"


# game files
class GameSyntaxError(GameError):
    code = "SyntaxError"


class GameReferenceError(GameError):
    code = "ReferenceError"


class SchemaError(GameError):
    code = "SchemaError"
