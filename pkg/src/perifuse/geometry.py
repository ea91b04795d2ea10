"""Deterministic crop-region arithmetic for periocular and face inputs."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

# square periocular crop side, in multiples of the sclera radius
SCLERA_SIDE_FACTOR = 7.6

# face-frontality rule: both landmark offsets stay within this fraction of
# the inter-eye distance, and the inter-eye distance has a pixel floor
DEFAULT_FRONTAL_RATIO = 0.4
DEFAULT_MIN_INTER_EYE = 50.0


@dataclass(frozen=True, slots=True)
class CropBox:
    """Axis-aligned square crop, described by its center and side length."""

    center_x: float
    center_y: float
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise DomainError(f"crop side must be positive, got {self.side}")


def sclera_crop_box(center_x: float, center_y: float, sclera_radius: float) -> CropBox:
    """Square periocular crop centered on the eye, sized from the sclera radius."""
    if not sclera_radius > 0:
        raise DomainError(f"sclera radius must be positive, got {sclera_radius}")
    return CropBox(float(center_x), float(center_y), SCLERA_SIDE_FACTOR * float(sclera_radius))


def face_crop_valid(
    inter_eye_px: float,
    eye_midpoint_offset_px: float,
    nose_offset_px: float,
    min_inter_eye: float = DEFAULT_MIN_INTER_EYE,
    frontal_ratio: float = DEFAULT_FRONTAL_RATIO,
) -> bool:
    """Whether a detected face passes the frontality and size gates.

    Both offsets are distances from the face-box center, measured in pixels,
    and must be non-negative.
    """
    if not inter_eye_px > 0:
        raise DomainError(f"inter-eye distance must be positive, got {inter_eye_px}")
    if eye_midpoint_offset_px < 0 or nose_offset_px < 0:
        raise DomainError("landmark offsets must be non-negative")
    if not min_inter_eye > 0:
        raise DomainError("minimum inter-eye distance must be positive")
    if not frontal_ratio > 0:
        raise DomainError("frontal ratio must be positive")
    limit = frontal_ratio * inter_eye_px
    return (
        inter_eye_px >= min_inter_eye
        and eye_midpoint_offset_px <= limit
        and nose_offset_px <= limit
    )
