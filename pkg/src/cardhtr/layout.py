"""Picking the index-word box from a card's detected boxes, and IoU scoring."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence


@dataclass(frozen=True, order=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0 or self.x < 0 or self.y < 0:
            raise ValueError(f"invalid box {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_dict(self) -> dict:
        return asdict(self)


def iou(a: BBox, b: BBox) -> float:
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def mean_iou(pred: Sequence[BBox], gold: Sequence[BBox]) -> float:
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predicted vs {len(gold)} gold boxes")
    if not pred:
        raise ValueError("need at least one box pair")
    return sum(iou(p, g) for p, g in zip(pred, gold)) / len(pred)


def select_index_box(
    boxes: Iterable[BBox], strip_height: float = 300, row_tolerance: float = 20
) -> BBox | None:
    """Leftmost box of the topmost text row inside the header strip.

    A box is in the strip when its top edge is above ``strip_height``; boxes
    whose top edges lie within ``row_tolerance`` of the highest one form the
    first row.
    """
    candidates = [b for b in boxes if b.y < strip_height]
    if not candidates:
        return None
    top = min(b.y for b in candidates)
    row = [b for b in candidates if b.y - top <= row_tolerance]
    # Full-tuple ordering keeps the choice independent of input order.
    return min(row, key=lambda b: (b.x, b.y, b.w, b.h))


def load_card_boxes(path: str | Path) -> list[tuple[str, list[BBox]]]:
    cards = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            boxes = [BBox(float(b["x"]), float(b["y"]), float(b["w"]), float(b["h"])) for b in rec["boxes"]]
            cards.append((str(rec["card_id"]), boxes))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad card record ({exc})") from None
    return cards
