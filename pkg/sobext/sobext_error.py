from __future__ import annotations

from typing import Any, Dict, Optional, Tuple

CellId = Tuple[int, int]


class SobextError(Exception):
    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(self.message)


class ConfigError(SobextError):
    pass


class ConstructionError(SobextError):
    """Raised when a construction step cannot be completed.

    :param cell: optional ``(level, index)`` of the dyadic cell being built
    """

    def __init__(self, message: str, cell: Optional[CellId] = None) -> None:
        self.cell = cell
        if cell is not None:
            message = f"cell {cell}: {message}"
        super().__init__(message)

    def with_cell(self, cell: CellId) -> ConstructionError:
        if self.cell is not None:
            return self
        return ConstructionError(self.message, cell)


class InvariantViolation(SobextError):
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        self.details = details or {}
        super().__init__(message)
