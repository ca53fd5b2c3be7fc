"""Errors raised by the credibility toolkit."""

from __future__ import annotations


class CredibilityError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CredibilityError):
    """Invalid parameters, thresholds or label sets."""


class InputError(CredibilityError):
    """An input file is missing, unreadable or malformed beyond recovery."""


class IncompatibleNetworkError(CredibilityError):
    """An algorithm cannot run on the data it was given."""


class EvaluationError(CredibilityError):
    """A metric or split is undefined for the given labels."""


class LabelLeakageError(EvaluationError):
    """A held-out account leaked into the training labels."""


def fmt_error(err: BaseException) -> str:
    """Format an exception with its type name, useful when str(err) is empty."""
    msg = str(err)
    name = type(err).__name__
    return f"{name}: {msg}" if msg else name
