"""Shared error base class.

Every failure surfaced by this package carries a stable machine-readable
``code`` (e.g. "WrongWidth", "DuplicateKey") alongside the human message,
so the CLI and HTTP service can report errors uniformly.
"""

from __future__ import annotations


class CodedError(Exception):
    """Error with a stable symbolic code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class GeoKeyError(CodedError):
    """Invalid geographic identifier (NonDigit, WrongWidth, NotHierarchical, NotAncestor)."""


class BoundaryError(CodedError):
    """Boundary file rejected (MalformedJson, BadFileCode, DuplicateKey, ...)."""


class SpatialError(CodedError):
    """Spatial index or crosswalk misuse (EmptySet, LevelMismatch)."""


class CatalogError(CodedError):
    """Catalog store contract violation (DuplicateId, UnknownDataset, DuplicateCell, ...)."""


class IngestError(CodedError):
    """Dataset ingest failure (MissingGeoColumn, HeaderlessCsv, AllRowsInvalid, NonEmptyRegistry)."""


class CohortError(CodedError):
    """Cohort file rejected (NoKeyColumns, AmbiguousKeys, MultipleCsvInZip, EmptyFile)."""


class LinkageError(CodedError):
    """Linkage request rejected before row processing (UnknownDatasetYear, MissingCrosswalk, MissingIndex, UnlinkableScale)."""
