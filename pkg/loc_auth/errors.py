""" Exceptions raised by loc_auth. """


class LocAuthError(Exception):
    pass


class AbeError(LocAuthError):
    pass


class PolicySyntaxError(AbeError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


class PolicyNotSatisfied(AbeError):
    pass


class IntegrityFailure(AbeError):
    pass


class UnsupportedSecurityLevel(AbeError):
    pass


class InvalidGroupElement(AbeError):
    pass


class TokenError(LocAuthError):
    pass


class ClockError(LocAuthError):
    pass


class ProtocolError(LocAuthError):
    pass


class MalformedMessage(ProtocolError):
    pass


class DuplicateUser(ProtocolError):
    pass


class UnknownBeacon(ProtocolError):
    pass


class InvalidUsername(ProtocolError):
    pass


class TravelRejected(LocAuthError):
    def __init__(self, reason) -> None:
        super().__init__(f"travel rejected: {reason.value}")
        self.reason = reason


class ScenarioError(LocAuthError):
    pass


class KeystoreError(LocAuthError):
    pass


class KeystoreExists(KeystoreError):
    pass
