"""
Error hierarchy shared by every chipvec service.

All domain failures derive from ChipVecError so the CLI can map them to
exit code 1 in one place.
"""
from typing import Optional


class ChipVecError(Exception):
    """Base class for all domain errors"""


# Geometry
class GeometryError(ChipVecError):
    pass


class EmptyPinSet(GeometryError):
    pass


class OutOfGrid(GeometryError):
    pass


# Design database
class DesignError(ChipVecError):
    pass


class ParseError(DesignError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class DuplicateName(ParseError):
    pass


class UnknownMaster(ParseError):
    pass


class RouteGeometryError(ParseError, GeometryError):
    """Non-rectilinear routing read from a DEF file"""


class CapacityError(DesignError):
    pass


class TechError(DesignError):
    pass


class ConnectivityError(DesignError):
    def __init__(self, net: str, unreached: list):
        self.net = net
        self.unreached = list(unreached)
        super().__init__(f"net {net}: routing does not reach {', '.join(self.unreached)}")


class ValidationFailure(DesignError):
    def __init__(self, violations: list):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations[:5]))


# Workspace and bundle storage
class StoreError(ChipVecError):
    pass


class ConfigError(StoreError):
    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"invalid config field '{field}'" + (f": {message}" if message else ""))


class WorkspaceError(StoreError):
    pass


class NotABundle(StoreError):
    pass


class CorruptBundle(StoreError):
    def __init__(self, file: str, message: str = "content hash mismatch"):
        self.file = file
        super().__init__(f"{file}: {message}")


class IncompleteBundle(StoreError):
    pass


class ShapeError(StoreError):
    pass


# Dataset engines
class DatasetError(ChipVecError):
    pass


class EmptyDataset(DatasetError):
    pass


class GridTooSmall(DatasetError):
    pass


class SampleSkipped(DatasetError):
    pass


# Insight
class InsightError(ChipVecError):
    pass


class ConstantColumn(InsightError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"column '{name}' is constant")


class InvalidMap(InsightError):
    pass


# Fidelity
class FidelityError(ChipVecError):
    pass


class IncomparableDesigns(FidelityError):
    pass


# Design space exploration
class DseError(ChipVecError):
    pass


class InvalidObjective(DseError):
    pass


class RefError(DseError):
    pass
