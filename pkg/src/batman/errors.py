"""Exception hierarchy shared by all modules."""


class BatmanError(Exception):
    """Base class for every domain error raised by this package."""


# --- contract rule violations ------------------------------------------------

class ContractError(BatmanError):
    """A contract operation was rejected by the contract's own rules."""


class UnknownIdentity(ContractError):
    pass


class DuplicateIdentity(ContractError):
    pass


class DuplicateHostname(ContractError):
    pass


class InvalidHostname(ContractError):
    pass


class InvalidKeySet(ContractError):
    """Registration does not carry exactly one key per role."""


class PowInvalid(ContractError):
    pass


class KeyLifetimeExceeded(ContractError):
    pass


class BadWindow(ContractError):
    pass


class MasterRevoked(ContractError):
    pass


class AlreadyRevoked(ContractError):
    pass


class KeyNotActive(ContractError):
    pass


class SelfEndorsement(ContractError):
    pass


class SignerKeyInvalid(ContractError):
    pass


class DuplicateEndorsement(ContractError):
    pass


class NodeMismatch(ContractError):
    pass


class NonMonotoneTick(ContractError):
    pass


class Unauthorized(ContractError):
    """Transaction author is not allowed to act on the target identity."""


# --- estimates ---------------------------------------------------------------

class EstimateUnavailable(BatmanError):
    """An estimator has no samples to work from."""


class NoData(EstimateUnavailable):
    pass


class EmptyWindow(EstimateUnavailable):
    pass


# --- ledger ------------------------------------------------------------------

class LedgerError(BatmanError):
    pass


class SeqMismatch(LedgerError):
    pass


class EmptyBlock(LedgerError):
    pass


class LedgerFormatError(LedgerError):
    """Bytes or text that do not decode to a canonical ledger object."""


class ContractRejection(LedgerError):
    """Wraps the :class:`ContractError` that made a transaction invalid."""

    def __init__(self, reason: ContractError):
        super().__init__(f"{type(reason).__name__}: {reason}")
        self.reason = reason


# --- proof of work -----------------------------------------------------------

class Exhausted(BatmanError):
    """No admissible nonce found within the iteration budget."""
