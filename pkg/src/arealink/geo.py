"""Geographic identifier types and hierarchy rules.

Census codes are positional digit strings: an 11-digit tract code is
2 digits of state + 3 of county + 6 of tract, and a block group appends
one more digit. ZCTA and CBSA codes are 5 digits but live in their own
namespaces -- a ZCTA "12086" is not the county "12086". Codes are kept
as strings everywhere; turning "01001" into the integer 1001 silently
destroys the key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import GeoKeyError


class GeoLevel(Enum):
    STATE = "state"
    COUNTY = "county"
    TRACT = "tract"
    BLOCK_GROUP = "block_group"
    ZCTA = "zcta"
    CBSA = "cbsa"

    @property
    def width(self) -> int:
        return _WIDTHS[self]

    @property
    def hierarchical(self) -> bool:
        """True for levels that nest by code prefix (state/county/tract/block group)."""
        return self in _HIERARCHY

    def __str__(self) -> str:
        return self.value


_WIDTHS = {
    GeoLevel.STATE: 2,
    GeoLevel.COUNTY: 5,
    GeoLevel.TRACT: 11,
    GeoLevel.BLOCK_GROUP: 12,
    GeoLevel.ZCTA: 5,
    GeoLevel.CBSA: 5,
}

# Prefix hierarchy, shallowest first.
_HIERARCHY = (GeoLevel.STATE, GeoLevel.COUNTY, GeoLevel.TRACT, GeoLevel.BLOCK_GROUP)

_LEVELS_BY_NAME = {level.value: level for level in GeoLevel}


def level_from_name(name: str) -> GeoLevel:
    """Look up a level by its lowercase name ("tract", "zcta", ...)."""
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    if key not in _LEVELS_BY_NAME:
        raise GeoKeyError("UnknownLevel", f"unknown geographic level {name!r}")
    return _LEVELS_BY_NAME[key]


@dataclass(frozen=True)
class GeoKey:
    """A geographic identifier: level plus exact-width digit code."""

    level: GeoLevel
    code: str

    def __post_init__(self):
        if not self.code.isascii() or not self.code.isdigit():
            raise GeoKeyError("NonDigit", f"code {self.code!r} contains non-digit characters")
        if len(self.code) != self.level.width:
            raise GeoKeyError(
                "WrongWidth",
                f"{self.level} code must be {self.level.width} digits, got {self.code!r}",
            )

    def __str__(self) -> str:
        return f"{self.level}:{self.code}"


@dataclass(frozen=True)
class LonLat:
    """WGS84 coordinate in decimal degrees, lon in [-180, 180], lat in [-90, 90]."""

    lon: float
    lat: float

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise ValueError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of [-90, 90]")


def clean_code(text: str) -> str:
    """Normalization applied before code parsing: trim whitespace and one
    layer of symmetric surrounding quotes."""
    cleaned = text.strip()
    if len(cleaned) >= 2 and cleaned[0] == cleaned[-1] and cleaned[0] in ("'", '"'):
        cleaned = cleaned[1:-1].strip()
    return cleaned


def parse_geo_key(text: str, level: GeoLevel, lenient: bool = False) -> GeoKey:
    """Parse a digit string into a GeoKey at the given level.

    Strict mode accepts only exact-width digit strings. Lenient mode
    additionally repairs a single lost leading zero (spreadsheet
    round-trips routinely strip one from "01001"); anything shorter
    still fails, because multi-digit padding would mask corrupt data.
    Surrounding whitespace and one layer of quotes are tolerated.
    """
    cleaned = clean_code(text)
    if not cleaned:
        raise GeoKeyError("WrongWidth", "empty geographic code")
    if not (cleaned.isascii() and cleaned.isdigit()):
        raise GeoKeyError("NonDigit", f"code {cleaned!r} contains non-digit characters")
    if len(cleaned) == level.width - 1 and lenient:
        cleaned = "0" + cleaned
    if len(cleaned) != level.width:
        raise GeoKeyError(
            "WrongWidth",
            f"{level} code must be {level.width} digits, got {len(cleaned)} ({cleaned!r})",
        )
    return GeoKey(level, cleaned)


def parent(key: GeoKey, target: GeoLevel) -> GeoKey:
    """Truncate a hierarchical key to an ancestor level.

    parent(k, k.level) is k. ZCTA and CBSA codes do not nest and are
    rejected, as is any target below the key's own level.
    """
    if not key.level.hierarchical:
        raise GeoKeyError("NotHierarchical", f"{key.level} keys have no positional hierarchy")
    if not target.hierarchical:
        raise GeoKeyError("NotHierarchical", f"{target} is not a hierarchical level")
    if _HIERARCHY.index(target) > _HIERARCHY.index(key.level):
        raise GeoKeyError("NotAncestor", f"{target} is below {key.level}")
    return GeoKey(target, key.code[: target.width])
