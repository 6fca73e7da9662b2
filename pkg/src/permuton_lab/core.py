"""Planar point sets, the strict product order and induced permutations."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

from .errors import DuplicateCoordinate


class Point(NamedTuple):
    x: float
    y: float


def increasing_pair(p: Point, q: Point) -> bool:
    """True iff ``p`` precedes ``q`` strictly in both coordinates."""
    return p[0] < q[0] and p[1] < q[1]


def l1_dist(p: Point, q: Point) -> float:
    return abs(p[0] - q[0]) + abs(p[1] - q[1])


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


class PointSet:
    """An immutable collection of points in the unit square.

    Coordinates are held column-wise in two float64 arrays. Distinctness of
    coordinates is not checked at construction (samplers guarantee it); use
    :meth:`has_distinct_coordinates` or :func:`perm_of_points`, which raises.
    """

    __slots__ = ("_xs", "_ys")

    def __init__(self, xs, ys):
        xs = _frozen(xs)
        ys = _frozen(ys)
        if xs.shape != ys.shape:
            raise ValueError("xs and ys must have the same length")
        if xs.size and (
            xs.min() < 0.0 or xs.max() > 1.0 or ys.min() < 0.0 or ys.max() > 1.0
        ):
            raise ValueError("points must lie in the unit square")
        if np.isnan(xs).any() or np.isnan(ys).any():
            raise ValueError("NaN coordinate")
        self._xs = xs
        self._ys = ys

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "PointSet":
        pts = list(points)
        if not pts:
            return cls([], [])
        xs, ys = zip(*pts)
        return cls(xs, ys)

    @property
    def xs(self) -> np.ndarray:
        return self._xs

    @property
    def ys(self) -> np.ndarray:
        return self._ys

    @property
    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in zip(self._xs, self._ys)]

    def __len__(self) -> int:
        return int(self._xs.size)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return Point(float(self._xs[i]), float(self._ys[i]))
        return PointSet(self._xs[i], self._ys[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return np.array_equal(self._xs, other._xs) and np.array_equal(self._ys, other._ys)

    def __repr__(self) -> str:
        return f"PointSet(N={len(self)})"

    def has_distinct_coordinates(self) -> bool:
        return _all_distinct(self._xs) and _all_distinct(self._ys)

    def to_csv(self, fh: TextIO, extra: dict[str, np.ndarray] | None = None) -> None:
        write_pointset_csv(self, fh, extra)

    @classmethod
    def from_csv(cls, fh: TextIO) -> "PointSet":
        return read_pointset_csv(fh)


@dataclass(frozen=True, eq=False)
class Permutation:
    """One-line notation ``image[i] = sigma(i + 1)`` with values in 1..N."""

    image: np.ndarray

    def __post_init__(self):
        img = np.array(self.image, dtype=np.int64, copy=True).reshape(-1)
        n = img.size
        if n and (img.min() != 1 or img.max() != n or np.unique(img).size != n):
            raise ValueError("image is not a bijection of {1, ..., N}")
        img.flags.writeable = False
        object.__setattr__(self, "image", img)

    def __len__(self) -> int:
        return int(self.image.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.image, other.image)

    def __hash__(self) -> int:
        return hash(self.image.tobytes())

    def __repr__(self) -> str:
        if len(self) <= 20:
            return f"Permutation({tuple(int(v) for v in self.image)})"
        return f"Permutation(N={len(self)})"

    def reversed(self) -> "Permutation":
        return Permutation(self.image[::-1])

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(1, n + 1))


def _all_distinct(a: np.ndarray) -> bool:
    if a.size < 2:
        return True
    s = np.sort(a)
    return bool(np.all(s[1:] != s[:-1]))


def perm_of_points(ps: PointSet) -> Permutation:
    """Permutation sending the rank of each point's x to the rank of its y.

    Raises :class:`DuplicateCoordinate` on any shared x or y value instead of
    breaking ties, so that sampler bugs surface.
    """
    xs, ys = ps.xs, ps.ys
    n = xs.size
    order = np.argsort(xs, kind="stable")
    sx = xs[order]
    if n > 1 and np.any(sx[1:] == sx[:-1]):
        raise DuplicateCoordinate("two points share an x-coordinate")
    y_in_x_order = ys[order]
    yorder = np.argsort(y_in_x_order, kind="stable")
    sy = y_in_x_order[yorder]
    if n > 1 and np.any(sy[1:] == sy[:-1]):
        raise DuplicateCoordinate("two points share a y-coordinate")
    image = np.empty(n, dtype=np.int64)
    image[yorder] = np.arange(1, n + 1)
    return Permutation(image)


def write_pointset_csv(
    ps: PointSet, fh: TextIO, extra: dict[str, np.ndarray] | None = None
) -> None:
    extra = extra or {}
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["x", "y", *extra])
    cols = [ps.xs, ps.ys, *extra.values()]
    for row in zip(*cols):
        writer.writerow([_f17(row[0]), _f17(row[1]), *(_cell(v) for v in row[2:])])


def _f17(v) -> str:
    return format(float(v), ".17g")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _f17(v)
    return str(v)


def read_pointset_csv(fh: TextIO) -> PointSet:
    reader = csv.reader(fh)
    header = next(reader)
    if header[:2] != ["x", "y"]:
        raise ValueError(f"expected header starting with x,y; got {header}")
    xs, ys = [], []
    for row in reader:
        if not row:
            continue
        xs.append(float(row[0]))
        ys.append(float(row[1]))
    return PointSet(xs, ys)


def pointset_to_csv_string(ps: PointSet) -> str:
    buf = io.StringIO()
    write_pointset_csv(ps, buf)
    return buf.getvalue()
