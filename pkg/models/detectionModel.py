from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .imageModel import BBox


class Kind(str, Enum):
    FACE = "face"
    BACK_OF_HEAD = "back_of_head"


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    def mirrored(self):
        return Direction.RIGHT if self is Direction.LEFT else Direction.LEFT


@dataclass(frozen=True)
class PatchCounts:
    """Foreground pixels in the upper/lower, left/right quarters of a face."""
    ul: int
    ur: int
    ll: int
    lr: int

    def __post_init__(self):
        for name in ("ul", "ur", "ll", "lr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self):
        return self.ul + self.ur + self.ll + self.lr

    def mirrored(self):
        return PatchCounts(ul=self.ur, ur=self.ul, ll=self.lr, lr=self.ll)

    def to_dict(self):
        return {"ul": self.ul, "ur": self.ur, "ll": self.ll, "lr": self.lr}


@dataclass(frozen=True)
class Votes:
    upper: Direction
    lower: Direction
    whole: Direction

    def to_dict(self):
        return {"upper": self.upper.value, "lower": self.lower.value, "whole": self.whole.value}


@dataclass(frozen=True)
class Detection:
    kind: Kind
    box: BBox
    centroid: tuple
    score: float
    direction: Optional[Direction] = None
    votes: Optional[Votes] = None
    patch_counts: Optional[PatchCounts] = None

    def __post_init__(self):
        x, y = self.centroid
        if not self.box.contains(x, y):
            raise ValueError(f"centroid {self.centroid} lies outside box {self.box.to_list()}")

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "box": self.box.to_list(),
            "centroid": [round(float(c), 3) for c in self.centroid],
            "direction": self.direction.value if self.direction else None,
            "votes": self.votes.to_dict() if self.votes else None,
            "patch_counts": self.patch_counts.to_dict() if self.patch_counts else None,
            "score": round(float(self.score), 6),
        }


@dataclass(frozen=True)
class Abstention:
    stage: str
    reason: str

    def to_dict(self):
        return {"stage": self.stage, "reason": self.reason}


@dataclass
class FrameReport:
    frame: str
    detections: list = field(default_factory=list)
    abstentions: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def abstained(self):
        """True when the whole frame was rejected before any stage ran."""
        return any(a.stage == "frame" for a in self.abstentions)

    def to_dict(self):
        # timings stay out so that reports are reproducible byte for byte
        return {
            "frame": self.frame,
            "detections": [d.to_dict() for d in self.detections],
            "abstentions": [a.to_dict() for a in self.abstentions],
        }
