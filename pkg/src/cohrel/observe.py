"""Turn component lifetimes into censored component observations.

An observation is an interval ``(lower, upper)``: ``lower == upper`` is an
exact failure, ``(0, t)`` left-censoring, ``(t, inf)`` right-censoring and
``0 < lower < upper < inf`` interval-censoring.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .structure import StructureExpr, system_lifetime, system_lifetimes


class Observation(NamedTuple):
    lower: float
    upper: float

    @property
    def kind(self) -> str:
        return classify(self.lower, self.upper)


def classify(lower: float, upper: float) -> str:
    if lower == upper:
        return "exact"
    if math.isinf(upper):
        return "right"
    if lower == 0:
        return "left"
    return "interval"


def _check_obs(lower, upper):
    if not (lower >= 0 and upper > 0 and lower <= upper and math.isfinite(lower)):
        raise ValueError(f"invalid observation ({lower}, {upper})")


@dataclass
class ComponentDataset:
    """All observations of one component across system units."""

    component: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if len(self.lower) == 0:
            raise ValueError(f"component {self.component} has no observations")
        lo, up = self.lower, self.upper
        bad = ~((lo >= 0) & (up > 0) & (lo <= up) & np.isfinite(lo))
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(f"invalid observation ({lo[i]}, {up[i]}) in row {i}")

    @classmethod
    def from_observations(cls, component: int, obs: Iterable[Observation]):
        obs = list(obs)
        return cls(component, [o.lower for o in obs], [o.upper for o in obs])

    def __len__(self):
        return len(self.lower)

    def __iter__(self):
        return (Observation(float(lo), float(up)) for lo, up in zip(self.lower, self.upper))

    def kinds(self) -> np.ndarray:
        lo, up = self.lower, self.upper
        return np.select([lo == up, np.isinf(up), lo == 0],
                         ["exact", "right", "left"], default="interval")

    def concat(self, other: "ComponentDataset") -> "ComponentDataset":
        return ComponentDataset(self.component, np.concatenate([self.lower, other.lower]),
                                np.concatenate([self.upper, other.upper]))


def observe_unit(expr: StructureExpr, lifetimes: Sequence[float]) -> list[Observation]:
    """Observations of every component of one unit at its system failure."""
    x = np.asarray(lifetimes, dtype=float)
    t = system_lifetime(expr, x)
    out = []
    for xj in x:
        if xj == t:
            out.append(Observation(t, t))
        elif xj < t:
            out.append(Observation(0.0, t))
        else:
            out.append(Observation(t, math.inf))
    return out


def observe_units(expr: StructureExpr, lifetimes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``observe_unit`` for an (n_units, m) lifetime array.

    Returns ``(lower, upper, system_times)`` with lower/upper of shape (n, m).
    """
    x = np.asarray(lifetimes, dtype=float)
    t = system_lifetimes(expr, x)[:, None]
    lower = np.where(x > t, t, np.where(x == t, t, 0.0))
    upper = np.where(x > t, np.inf, t)
    lower = np.broadcast_to(lower, x.shape).copy()
    upper = np.broadcast_to(upper, x.shape).copy()
    return lower, upper, t[:, 0]


def datasets_from_arrays(lower: np.ndarray, upper: np.ndarray) -> list[ComponentDataset]:
    return [ComponentDataset(j + 1, lower[:, j], upper[:, j]) for j in range(lower.shape[1])]


def interval_coarsen(exact_age: float, width: float) -> Observation:
    """Interval ``[k w, (k+1) w)`` containing ``exact_age``."""
    if not width > 0:
        raise ValueError("width must be positive")
    lo = math.floor(exact_age / width) * width
    return Observation(lo, lo + width)


@dataclass(frozen=True)
class CensoringRow:
    component: int
    n: int
    left: float
    right: float
    interval: float
    total: float

    def as_dict(self):
        return {"component": self.component, "n": self.n, "left": self.left,
                "right": self.right, "interval": self.interval, "total": self.total}


def censoring_table(datasets: Sequence[ComponentDataset]) -> list[CensoringRow]:
    """Percentages of left-, right- and interval-censored rows per component."""
    if not datasets:
        raise ValueError("censoring_table needs at least one dataset")
    rows = []
    for ds in datasets:
        k = ds.kinds()
        n = len(k)
        left = 100.0 * np.count_nonzero(k == "left") / n
        right = 100.0 * np.count_nonzero(k == "right") / n
        interval = 100.0 * np.count_nonzero(k == "interval") / n
        rows.append(CensoringRow(ds.component, n, left, right, interval,
                                 left + right + interval))
    return rows


# ---------------------------------------------------------------------------
# CSV interchange: unit,component,lower,upper

def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else format(x, ".17g")


def _parse_bound(text: str, column: str, allow_inf: bool) -> float:
    text = text.strip()
    if text == "inf":
        if not allow_inf:
            raise ValueError(f"'inf' is only allowed in the upper column, got it in {column}")
        return math.inf
    value = float(text)  # raises ValueError on junk
    if not math.isfinite(value):
        raise ValueError(f"non-numeric token {text!r} in column {column}")
    return value


def write_observations(path, lower: np.ndarray, upper: np.ndarray, components=None) -> None:
    """Write an (n_units, m) pair of bound arrays as observation CSV."""
    lower = np.atleast_2d(lower)
    upper = np.atleast_2d(upper)
    components = components or list(range(1, lower.shape[1] + 1))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "component", "lower", "upper"])
        for i in range(lower.shape[0]):
            for j, comp in enumerate(components):
                w.writerow([i + 1, comp, _fmt(lower[i, j]), _fmt(upper[i, j])])


def read_observations(path) -> dict[int, ComponentDataset]:
    """Parse observation CSV into datasets keyed by component id."""
    rows: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
                "unit", "component", "lower", "upper"]:
            raise ValueError(f"{path}: expected header unit,component,lower,upper")
        for line_no, rec in enumerate(reader, start=2):
            try:
                unit = int(rec["unit"])
                comp = int(rec["component"])
                lo = _parse_bound(rec["lower"], "lower", allow_inf=False)
                up = _parse_bound(rec["upper"], "upper", allow_inf=True)
                _check_obs(lo, up)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
            rows.setdefault(comp, []).append((unit, lo, up))
    if not rows:
        raise ValueError(f"{path}: no observations")
    out = {}
    for comp, recs in sorted(rows.items()):
        recs.sort()
        out[comp] = ComponentDataset(comp, [r[1] for r in recs], [r[2] for r in recs])
    return out


def write_dataset(path, ds: ComponentDataset) -> None:
    write_observations(Path(path), ds.lower[:, None], ds.upper[:, None], [ds.component])
