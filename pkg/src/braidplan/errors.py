"""Shared exception types."""

from __future__ import annotations


class InputError(ValueError):
    """Malformed or inconsistent caller input (bad indices, schemas, states)."""


class ConfigurationError(InputError):
    """A configuration value violates a documented constraint."""


class DegenerateInputError(InputError):
    """Geometry too degenerate to order crossings even after perturbation."""


class EntanglementAlarm(RuntimeError):
    """An executed trajectory set produced a forbidden braid pattern.

    Raised when folding executed crossings into carried-over braid state;
    carries enough context to identify the offending cable interaction.
    """

    def __init__(self, ids: tuple[int, ...], axis_angle: float, time: float, word: str):
        self.ids = ids
        self.axis_angle = axis_angle
        self.time = time
        self.word = word
        super().__init__(
            f"entangling braid {word!r} for robots {ids} "
            f"on projection angle {axis_angle:.6g} at t={time:.6g}"
        )
