"""Price loading, log returns, and the history/investment split."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed price or return data; the message carries the location."""


@dataclass(frozen=True)
class PriceSeries:
    """Prices laid out assets x observations, all strictly positive."""

    asset_ids: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        ids = tuple(str(a) for a in self.asset_ids)
        prices = np.array(self.prices, dtype=float, ndmin=2)
        object.__setattr__(self, "asset_ids", ids)
        object.__setattr__(self, "prices", prices)
        if len(set(ids)) != len(ids):
            dupes = sorted({a for a in ids if ids.count(a) > 1})
            raise DataError(f"duplicate asset ids: {dupes}")
        if prices.shape[0] != len(ids):
            raise DataError(f"{len(ids)} asset ids but {prices.shape[0]} price rows")
        bad = np.argwhere(~(np.isfinite(prices) & (prices > 0)))
        if bad.size:
            i, t = bad[0]
            raise DataError(f"price for asset {ids[i]!r} at observation {t} is {prices[i, t]!r}; must be > 0")
        prices.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return self.prices.shape[0]

    @property
    def n_observations(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True)
class ReturnMatrix:
    """Log returns laid out assets x trials."""

    asset_ids: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        ids = tuple(str(a) for a in self.asset_ids)
        returns = np.array(self.returns, dtype=float, ndmin=2)
        object.__setattr__(self, "asset_ids", ids)
        object.__setattr__(self, "returns", returns)
        if returns.shape[0] != len(ids):
            raise DataError(f"{len(ids)} asset ids but {returns.shape[0]} return rows")
        bad = np.argwhere(~np.isfinite(returns))
        if bad.size:
            i, t = bad[0]
            raise DataError(f"non-finite return for asset {ids[i]!r} at trial {t}")
        returns.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_trials(self) -> int:
        return self.returns.shape[1]

    def select(self, ids) -> "ReturnMatrix":
        """Sub-matrix restricted to ``ids`` in the given order."""
        index = {a: i for i, a in enumerate(self.asset_ids)}
        try:
            rows = [index[a] for a in ids]
        except KeyError as exc:
            raise DataError(f"unknown asset id {exc.args[0]!r}") from None
        return ReturnMatrix(tuple(ids), self.returns[rows])


def load_prices(path, delimiter: str = ",") -> PriceSeries:
    """Read a CSV with one header row of asset ids and one row of prices per timestep."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"price file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise DataError(f"{path}: blank asset id in header")
    if len(rows) < 2:
        raise DataError(f"{path}: no price rows after header")
    width = len(header)
    values = np.empty((len(rows) - 1, width))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataError(f"{path}: line {r} has {len(row)} fields, header has {width}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: line {r}, column {c + 1} ({header[c]}): "
                                f"non-numeric value {cell!r}") from None
            if not (math.isfinite(v) and v > 0):
                raise DataError(f"{path}: line {r}, column {c + 1} ({header[c]}): "
                                f"price {cell!r} is not strictly positive")
            values[r - 2, c] = v
    return PriceSeries(tuple(header), values.T)


def write_prices(series: PriceSeries, path) -> Path:
    """Write ``series`` in the layout ``load_prices`` reads (full float precision)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(series.asset_ids)
        for row in series.prices.T:
            writer.writerow([repr(float(v)) for v in row])
    return path


def to_log_returns(series: PriceSeries) -> ReturnMatrix:
    p = series.prices
    with np.errstate(all="ignore"):
        r = np.log(p[:, 1:] / p[:, :-1])
    return ReturnMatrix(series.asset_ids, r)


def prices_from_returns(returns: ReturnMatrix, initial) -> PriceSeries:
    """Inverse of ``to_log_returns``: cumulative exponentiation from ``initial``."""
    initial = np.asarray(initial, dtype=float).reshape(-1, 1)
    growth = np.exp(np.cumsum(returns.returns, axis=1))
    return PriceSeries(returns.asset_ids, np.hstack([initial, initial * growth]))


def split_history(returns: ReturnMatrix, delta: int) -> tuple[ReturnMatrix, ReturnMatrix]:
    """Leading ``delta`` trials as history, the rest as the investment window."""
    if delta < 1 or delta >= returns.n_trials:
        raise DataError(f"history length {delta} must be in [1, {returns.n_trials - 1}] "
                        f"for {returns.n_trials} trials")
    r = returns.returns
    return (ReturnMatrix(returns.asset_ids, r[:, :delta]),
            ReturnMatrix(returns.asset_ids, r[:, delta:]))
