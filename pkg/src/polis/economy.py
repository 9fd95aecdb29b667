"""Static description of a spatial multi-market economy.

Firms and markets sit on integer tiles of a square grid. Each market has a
linear inverse demand curve, firms pay a transport cost proportional to the
Euclidean distance to the market they sell in, and a government may pay (or
levy) a price-proportional rate plus a fixed amount per unit sold in each
market.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from polis.errors import InvalidConfiguration

__all__ = [
    "GridPoint",
    "EconomyMap",
    "MarketParams",
    "TaxPolicy",
    "generate_map",
    "distance",
    "market_price",
    "profit",
]


class GridPoint(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class EconomyMap:
    """Firm and market locations on a ``grid_size`` x ``grid_size`` grid."""

    firms: tuple[GridPoint, ...]
    markets: tuple[GridPoint, ...]
    grid_size: int = 100

    def __post_init__(self):
        object.__setattr__(self, "firms", tuple(GridPoint(int(x), int(y)) for x, y in self.firms))
        object.__setattr__(self, "markets", tuple(GridPoint(int(x), int(y)) for x, y in self.markets))
        if self.grid_size < 1:
            raise InvalidConfiguration(f"grid_size must be >= 1, got {self.grid_size}")
        if not self.firms or not self.markets:
            raise InvalidConfiguration("an economy needs at least one firm and one market")
        for p in self.firms + self.markets:
            if not (0 <= p.x < self.grid_size and 0 <= p.y < self.grid_size):
                raise InvalidConfiguration(f"point {tuple(p)} lies outside the {self.grid_size}x{self.grid_size} grid")

    @property
    def n_firms(self) -> int:
        return len(self.firms)

    @property
    def n_markets(self) -> int:
        return len(self.markets)

    @cached_property
    def distances(self) -> np.ndarray:
        """(n_firms, n_markets) matrix of firm-to-market Euclidean distances."""
        f = np.asarray(self.firms, dtype=float)
        m = np.asarray(self.markets, dtype=float)
        return np.hypot(f[:, None, 0] - m[None, :, 0], f[:, None, 1] - m[None, :, 1])

    def to_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "firms": [[p.x, p.y] for p in self.firms],
            "markets": [[p.x, p.y] for p in self.markets],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EconomyMap":
        try:
            return cls(
                firms=tuple(GridPoint(*p) for p in data["firms"]),
                markets=tuple(GridPoint(*p) for p in data["markets"]),
                grid_size=int(data["grid_size"]),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidConfiguration(f"malformed economy map: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EconomyMap":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EconomyMap":
        return cls.from_json(Path(path).read_text())


def _per_market(value: float | Sequence[float], n_markets: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n_markets, float(arr))
    if arr.shape != (n_markets,):
        raise InvalidConfiguration(f"{name} has {arr.size} entries, expected {n_markets}")
    return arr


@dataclass(frozen=True)
class MarketParams:
    """Linear demand ``p = intercept - slope * Q`` and transport cost per tile.

    ``intercept`` and ``slope`` are either one value shared by every market
    or one value per market.
    """

    intercept: float | tuple[float, ...] = 200.0
    slope: float | tuple[float, ...] = 3.0
    transport_rate: float = 1.0

    def __post_init__(self):
        for name in ("intercept", "slope"):
            value = getattr(self, name)
            if not np.isscalar(value):
                object.__setattr__(self, name, tuple(float(v) for v in value))
        if np.any(np.asarray(self.slope) <= 0):
            raise InvalidConfiguration("demand slope must be positive")
        if self.transport_rate < 0:
            raise InvalidConfiguration("transport_rate must be non-negative")

    def intercepts(self, n_markets: int) -> np.ndarray:
        return _per_market(self.intercept, n_markets, "intercept")

    def slopes(self, n_markets: int) -> np.ndarray:
        return _per_market(self.slope, n_markets, "slope")


@dataclass(frozen=True)
class TaxPolicy:
    """Per-market price-proportional ``rate`` and ``fixed`` payment.

    Positive values are payments to firms, negative values are taxes.
    """

    rate: tuple[float, ...]
    fixed: tuple[float, ...] = field(default=())

    def __post_init__(self):
        rate = tuple(float(v) for v in self.rate)
        fixed = tuple(float(v) for v in self.fixed) if self.fixed else (0.0,) * len(rate)
        if len(rate) != len(fixed):
            raise InvalidConfiguration("rate and fixed must have one entry per market")
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "fixed", fixed)

    @classmethod
    def zeros(cls, n_markets: int) -> "TaxPolicy":
        return cls((0.0,) * n_markets, (0.0,) * n_markets)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "TaxPolicy":
        """Inverse of :meth:`as_vector` (rates first, then fixed amounts)."""
        vec = list(vec)
        m = len(vec) // 2
        return cls(tuple(vec[:m]), tuple(vec[m:]))

    @property
    def n_markets(self) -> int:
        return len(self.rate)

    def as_vector(self) -> np.ndarray:
        return np.array(self.rate + self.fixed)

    def within(self, rate_bounds=(-0.25, 0.25), fixed_bounds=(-50.0, 50.0)) -> bool:
        return all(rate_bounds[0] <= r <= rate_bounds[1] for r in self.rate) and all(
            fixed_bounds[0] <= a <= fixed_bounds[1] for a in self.fixed
        )

    def to_dict(self) -> dict:
        return {"rate": list(self.rate), "fixed": list(self.fixed)}

    @classmethod
    def from_dict(cls, data: dict) -> "TaxPolicy":
        try:
            return cls(tuple(data["rate"]), tuple(data.get("fixed", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfiguration(f"malformed tax policy: {exc}") from exc


def generate_map(seed, n_firms: int = 100, n_markets: int = 5, grid_size: int = 100) -> EconomyMap:
    """Place firms, then markets, uniformly at random on integer tiles.

    Points are drawn independently, so two points may share a tile. The map
    is a pure function of its arguments.
    """
    if n_firms < 1 or n_markets < 1 or grid_size < 1:
        raise InvalidConfiguration("n_firms, n_markets and grid_size must all be >= 1")
    rng = np.random.default_rng(seed)
    firms = rng.integers(0, grid_size, size=(n_firms, 2))
    markets = rng.integers(0, grid_size, size=(n_markets, 2))
    return EconomyMap(
        firms=tuple(GridPoint(int(x), int(y)) for x, y in firms),
        markets=tuple(GridPoint(int(x), int(y)) for x, y in markets),
        grid_size=grid_size,
    )


def distance(a: GridPoint, b: GridPoint) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def market_price(params: MarketParams, market_index, total_quantity):
    """Inverse demand of one market. Prices are not floored at zero."""
    a = np.asarray(params.intercept, dtype=float)
    b = np.asarray(params.slope, dtype=float)
    if a.ndim:
        a = a[market_index]
    if b.ndim:
        b = b[market_index]
    return a - b * total_quantity


def profit(params: MarketParams, policy: TaxPolicy, market_index, price, dist):
    """Taxed per-unit profit ``(1 + rate_j) * price + fixed_j - c * dist``.

    Works elementwise on arrays of market indices, prices and distances.
    """
    rate = np.asarray(policy.rate)[market_index]
    fixed = np.asarray(policy.fixed)[market_index]
    return (1.0 + rate) * price + fixed - params.transport_rate * dist
