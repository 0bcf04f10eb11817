"""Reproducible Gaussian mixture fixtures."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from .dataset import DataError, Dataset


@dataclass(frozen=True)
class Component:
    mean: Tuple[float, ...]
    scale: float
    count: int


# five isotropic 2-D components with differing spreads
FIVE_BLOBS = (
    Component((0.0, 0.0), 1.0, 200),
    Component((5.0, 0.5), 0.6, 200),
    Component((0.5, 6.0), 1.4, 200),
    Component((5.5, 5.5), 0.8, 200),
    Component((-4.5, 3.5), 0.5, 200),
)

PRESETS = {"five-blobs": FIVE_BLOBS}


def parse_components(spec: Union[str, Sequence[dict]]) -> List[Component]:
    """Components from a JSON list of ``{"mean": [...], "scale": s, "count": c}``.

    ``spec`` may be a preset name, a JSON string, or an already-decoded list.
    """
    if isinstance(spec, str):
        if spec in PRESETS:
            return list(PRESETS[spec])
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as err:
            raise DataError(f"unknown preset or invalid JSON: {spec!r}") from err
    comps = []
    for i, item in enumerate(spec):
        try:
            comps.append(Component(tuple(float(v) for v in item["mean"]), float(item["scale"]), int(item["count"])))
        except (KeyError, TypeError, ValueError) as err:
            raise DataError(f"component {i}: {err}") from err
    validate(comps)
    return comps


def validate(components: Sequence[Component]):
    if not components:
        raise DataError("need at least one component")
    dim = len(components[0].mean)
    if dim < 1:
        raise DataError("component means must have at least one coordinate")
    for i, c in enumerate(components):
        if len(c.mean) != dim:
            raise DataError(f"component {i} has dimension {len(c.mean)}, expected {dim}")
        if not c.scale > 0:
            raise DataError(f"component {i} has non-positive scale {c.scale}")
        if c.count < 1:
            raise DataError(f"component {i} has count {c.count}")
    if sum(c.count for c in components) < 2:
        raise DataError("mixture must contain at least 2 points")


def sample(components: Sequence[Component] = FIVE_BLOBS, seed: int = 0) -> Dataset:
    """Draw each component's points in order with numpy's PCG64 generator."""
    validate(components)
    rng = np.random.Generator(np.random.PCG64(seed))
    parts, labels = [], []
    for label, c in enumerate(components):
        parts.append(np.asarray(c.mean) + c.scale * rng.standard_normal((c.count, len(c.mean))))
        labels.append(np.full(c.count, label))
    return Dataset(np.vstack(parts), np.concatenate(labels))


def to_csv(data: Dataset) -> str:
    """CSV text with one row per point and the label in the last column."""
    buf = io.StringIO()
    for i in range(data.n):
        row = [repr(float(v)) for v in data.points[i]]
        if data.labels is not None:
            row.append(str(int(data.labels[i])))
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_csv(data: Dataset, path: Union[str, Path]):
    Path(path).write_text(to_csv(data))
