"""Exception hierarchy shared by every protocol component."""


class ZkamsError(Exception):
    """Base class for all protocol errors."""


class InvalidParams(ZkamsError):
    pass


class ParamMismatch(ZkamsError):
    pass


class DivisionByZero(ZkamsError, ZeroDivisionError):
    pass


class NotSatisfied(ZkamsError):
    pass


class InconsistentCredential(ZkamsError):
    pass


# mkhe
class DepthExceeded(ZkamsError):
    pass


class NoiseBudgetExceeded(ZkamsError):
    pass


class NotAParticipant(ZkamsError):
    pass


class IncompleteShares(ZkamsError):
    pass


class ShareBindingError(ZkamsError):
    pass


class LinearizationRequired(ZkamsError):
    """Raised when a ciphertext still carries cross-party key products."""


# pipeline
class IncompleteContribution(ZkamsError):
    pass


# store
class IntegrityError(ZkamsError):
    pass


class StaleUpdate(ZkamsError):
    pass


class Unauthorized(ZkamsError):
    pass


# mlsags
class SignerNotInRing(ZkamsError):
    pass


class DuplicateRingKey(ZkamsError):
    pass


# ledger
class InvalidBatchSize(ZkamsError):
    pass


# pbs
class ProofRefused(ZkamsError):
    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"{clause}: {detail}" if detail else clause)


class CtxBindingError(ZkamsError):
    pass
