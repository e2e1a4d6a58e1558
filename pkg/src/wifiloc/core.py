"""Shared domain types for the fingerprinting pipeline.

All types are immutable value objects; they validate their invariants at
construction time and can be shared freely across threads.

Conventions:
    - Positions are meters in the map frame, timestamps are float seconds
      (epoch or run-relative) with microsecond-or-better resolution.
    - RSSI is stored as signed dBm (negative or zero for real signals).
    - Access points are identified by their MAC address, normalized to the
      lowercase colon-separated form "aa:bb:cc:00:11:22".
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

_AP_ID_RE = re.compile(r"^([0-9a-f]{2}:){5}[0-9a-f]{2}$")

_TWO_PI = 2.0 * math.pi


def parse_ap_id(text: str) -> str:
    """Validate a MAC-address access-point identifier and normalize it.

    Accepts upper- or lowercase hex; returns the canonical lowercase
    colon-separated form. Parsing an already-canonical id is the identity.

    Raises:
        ValueError: if `text` is not six colon-separated hex octets.
    """
    normalized = text.lower()
    if not _AP_ID_RE.match(normalized):
        raise ValueError(f"invalid access point id: {text!r}")
    return normalized


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    wrapped = (theta + math.pi) % _TWO_PI - math.pi
    # The modulo can land exactly on pi for inputs just below a period edge.
    if wrapped >= math.pi:
        wrapped = -math.pi
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    """Robot pose in the map frame: x, y in meters, heading in radians.

    The heading is wrapped into [-pi, pi) at construction.
    """

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "heading"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Pose2D.{name} must be finite")
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class OdometrySample:
    """A timestamped pose; within a trajectory timestamps strictly increase."""

    t: float
    pose: Pose2D

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError("OdometrySample.t must be finite")


@dataclass(frozen=True)
class WifiScan:
    """One WiFi scan: timestamp plus a map from AP id to RSSI in dBm.

    A recorded scan always has at least one reading; absent APs are simply
    not present in the mapping.
    """

    t: float
    readings: Mapping[str, float]

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError("WifiScan.t must be finite")
        if not self.readings:
            raise ValueError("WifiScan.readings must be non-empty")
        for ap, rssi in self.readings.items():
            parse_ap_id(ap)
            if not math.isfinite(rssi):
                raise ValueError(f"RSSI for {ap} must be finite, got {rssi!r}")
        object.__setattr__(self, "readings", dict(self.readings))


@dataclass(frozen=True)
class FingerprintRow:
    """One dataset row: timestamp, position, and one RSSI slot per AP column.

    A slot is None where the AP was not observed at this location.
    """

    t: float
    x: float
    y: float
    rssi: tuple[float | None, ...]

    def __post_init__(self) -> None:
        for name in ("t", "x", "y"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"FingerprintRow.{name} must be finite")
        object.__setattr__(self, "rssi", tuple(self.rssi))
        for v in self.rssi:
            if v is not None and not math.isfinite(v):
                raise ValueError("FingerprintRow RSSI values must be finite or None")


@dataclass(frozen=True)
class FingerprintDataset:
    """Aligned fingerprint rows plus the canonical AP column order.

    The column order is the one used for CSV export and for the model's
    input layout. Row timestamps are non-decreasing.
    """

    ap_columns: tuple[str, ...]
    rows: tuple[FingerprintRow, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ap_columns", tuple(self.ap_columns))
        object.__setattr__(self, "rows", tuple(self.rows))
        seen: set[str] = set()
        for ap in self.ap_columns:
            parse_ap_id(ap)
            if ap in seen:
                raise ValueError(f"duplicate AP column: {ap}")
            seen.add(ap)
        width = len(self.ap_columns)
        prev_t = -math.inf
        for i, row in enumerate(self.rows):
            if len(row.rssi) != width:
                raise ValueError(
                    f"row {i} has {len(row.rssi)} RSSI slots, expected {width}"
                )
            if row.t < prev_t:
                raise ValueError(f"row {i} breaks timestamp ordering")
            prev_t = row.t

    def __len__(self) -> int:
        return len(self.rows)


def canonical_ap_order(ids: Iterable[str]) -> list[str]:
    """Return the canonical (lexicographic) column order for a set of AP ids.

    Deterministic and permutation-invariant; duplicates collapse.

    Raises:
        ValueError: "no access points" for an empty input.
    """
    unique = {parse_ap_id(ap) for ap in ids}
    if not unique:
        raise ValueError("no access points")
    return sorted(unique)
