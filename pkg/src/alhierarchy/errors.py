"""Exception hierarchy and serializable error payloads."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Literal

from pydantic import BaseModel

if TYPE_CHECKING:
    from .lattice import SequencePair


class ErrorPayload(BaseModel):
    """Standard error payload written next to the artifacts of an aborted run."""

    type: Literal["error"] = "error"
    reason: str
    message: str
    details: Any | None = None

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-serializable representation."""

        return self.model_dump(exclude_none=True)

    def as_json(self) -> str:
        """Return the payload encoded as JSON."""

        return self.model_dump_json(exclude_none=True, indent=2)


class ALError(Exception):
    """Base class for every failure raised by the package."""

    reason: str = "al_error"
    exit_code: int = 1

    def __init__(self, message: str, *, details: Any | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_payload(self) -> ErrorPayload:
        return ErrorPayload(reason=self.reason, message=self.message, details=self.details)


class ConfigError(ALError):
    reason = "invalid_config"


class DimensionError(ALError):
    reason = "dimension_mismatch"


class ProfileError(ALError):
    reason = "invalid_profile"


class UnsupportedFlowError(ALError):
    reason = "unsupported_flow"


class InvalidScaleError(ALError):
    reason = "invalid_scale"


class InvalidParameterError(ALError):
    reason = "invalid_parameter"


class InsufficientWindowError(ALError):
    reason = "insufficient_window"


class InsufficientOrderError(ALError):
    reason = "insufficient_order"


class NumericalError(ALError):
    """Failures of the numerical machinery rather than of the input."""

    reason = "numerical_error"
    exit_code = 2


class NearSingularTransferError(NumericalError):
    reason = "near_singular_transfer"


class SingularOperatorError(NumericalError):
    reason = "singular_operator"


class BlowupError(NumericalError):
    """The sup norm left the bounded class; carries the last finite state."""

    reason = "blowup"

    def __init__(
        self,
        message: str,
        *,
        time: float,
        last_state: SequencePair | None = None,
        details: Any | None = None,
    ) -> None:
        super().__init__(message, details=details)
        self.time = time
        self.last_state = last_state

    def to_payload(self) -> ErrorPayload:
        details: dict[str, Any] = {"time": self.time}
        if self.last_state is not None:
            details["last_sup_norm"] = self.last_state.sup_bound
        if isinstance(self.details, dict):
            details.update(self.details)
        return ErrorPayload(reason=self.reason, message=self.message, details=details)


__all__ = [
    "ALError",
    "BlowupError",
    "ConfigError",
    "DimensionError",
    "ErrorPayload",
    "InsufficientOrderError",
    "InsufficientWindowError",
    "InvalidParameterError",
    "InvalidScaleError",
    "NearSingularTransferError",
    "NumericalError",
    "ProfileError",
    "SingularOperatorError",
    "UnsupportedFlowError",
]
