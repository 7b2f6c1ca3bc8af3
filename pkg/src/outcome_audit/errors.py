"""Exception hierarchy shared across the package."""

from __future__ import annotations


class OutcomeAuditError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDistribution(OutcomeAuditError, ValueError):
    pass


class InvalidPolicy(OutcomeAuditError, ValueError):
    pass


class ZeroMassAboveThreshold(OutcomeAuditError, ValueError):
    pass


class IncompatibleSupports(OutcomeAuditError, ValueError):
    pass


class DegenerateTilt(OutcomeAuditError, ValueError):
    pass


class MissingRiskScores(OutcomeAuditError, ValueError):
    pass


class EmptyGroup(OutcomeAuditError, ValueError):
    pass


class InsufficientPositives(OutcomeAuditError, ValueError):
    pass


class UnavailableSE(OutcomeAuditError, ValueError):
    pass


class ZeroSE(OutcomeAuditError, ValueError):
    pass


class ZeroDecisionMass(OutcomeAuditError, ValueError):
    pass


class AssumptionViolation(OutcomeAuditError, ValueError):
    """A discrete instance breaks non-emptiness or non-zero decision mass."""


class NotFound(OutcomeAuditError, LookupError):
    pass


class InsufficientBins(OutcomeAuditError, ValueError):
    pass


class SchemaError(OutcomeAuditError, ValueError):
    pass


class InputError(OutcomeAuditError, ValueError):
    pass


class EmptyAfterFilter(OutcomeAuditError, ValueError):
    pass
