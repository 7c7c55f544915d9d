"""Exceptions and the unbounded-result signal shared by every module."""

from __future__ import annotations

import enum


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class SolverError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""


class Unbounded(enum.Enum):
    """Distinguished result for rates or divergences that are infinite.

    Members deliberately do not support arithmetic, so an infinite rate can
    never be silently summed or averaged with finite ones.
    """

    NEG = -1
    POS = 1

    def __float__(self) -> float:
        return float("inf") * self.value

    def __str__(self) -> str:
        return "-inf" if self is Unbounded.NEG else "+inf"


def is_unbounded(value) -> bool:
    return isinstance(value, Unbounded)
