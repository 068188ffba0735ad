"""Price/return panels and the wide CSV format they travel in.

The wide format has a ``date`` column followed by one column per asset::

    date,AAA,BBB,CCC
    2001-01-02,10.5,33.1,7.25
    2001-01-03,10.7,32.9,7.30

Rows with any empty cell are dropped as a whole (observations must stay
synchronous across assets); the number of dropped rows is kept on the panel.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .exceptions import DataError

MISSING_TOKENS = frozenset({"", "na", "nan", "null"})
CONSTANT_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _label_key(label: str):
    try:
        return (0, float(label), "")
    except ValueError:
        return (1, 0.0, label)


def _check_assets(assets: Sequence[str]) -> tuple[str, ...]:
    assets = tuple(str(a) for a in assets)
    seen = set()
    for a in assets:
        if not a.strip():
            raise DataError("malformed header: empty asset identifier")
        if a in seen:
            raise DataError(f"duplicate asset identifier {a!r}")
        seen.add(a)
    return assets


def _check_timestamps(timestamps: Sequence[str]) -> tuple[str, ...]:
    timestamps = tuple(str(t) for t in timestamps)
    keys = [_label_key(t) for t in timestamps]
    for i in range(1, len(keys)):
        if not keys[i - 1] < keys[i]:
            raise DataError(
                f"timestamps must be strictly increasing: {timestamps[i - 1]!r} "
                f"then {timestamps[i]!r}"
            )
    return timestamps


@dataclass(frozen=True)
class PricePanel:
    """T x N matrix of strictly positive prices."""

    assets: tuple[str, ...]
    timestamps: tuple[str, ...]
    prices: np.ndarray
    dropped_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "assets", _check_assets(self.assets))
        object.__setattr__(self, "timestamps", _check_timestamps(self.timestamps))
        prices = _frozen(self.prices)
        if prices.ndim != 2 or prices.shape != (len(self.timestamps), len(self.assets)):
            raise DataError(
                f"prices shape {prices.shape} does not match "
                f"{len(self.timestamps)} timestamps x {len(self.assets)} assets"
            )
        if prices.shape[0] < 2:
            raise DataError(f"need at least 2 usable rows, got {prices.shape[0]}")
        if not np.all(np.isfinite(prices)):
            raise DataError("prices contain non-finite values")
        bad = np.argwhere(prices <= 0)
        if bad.size:
            t, j = bad[0]
            raise DataError(
                f"non-positive price {prices[t, j]!r} at row {self.timestamps[t]!r}, "
                f"asset {self.assets[j]!r}"
            )
        object.__setattr__(self, "prices", prices)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_obs(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class ReturnPanel:
    """T' x N matrix of log-returns.

    ``timestamps`` labels each return row (the later of the two prices it was
    differenced from) and may be empty when the panel was built in memory.
    """

    assets: tuple[str, ...]
    returns: np.ndarray
    timestamps: tuple[str, ...] = field(default=())
    dropped_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "assets", _check_assets(self.assets))
        returns = _frozen(self.returns)
        if returns.ndim != 2 or returns.shape[1] != len(self.assets):
            raise DataError(
                f"returns shape {returns.shape} does not match {len(self.assets)} assets"
            )
        if returns.shape[0] < 2:
            raise DataError(f"need at least 2 return observations, got {returns.shape[0]}")
        if self.timestamps:
            ts = _check_timestamps(self.timestamps)
            if len(ts) != returns.shape[0]:
                raise DataError("timestamps and return rows differ in length")
            object.__setattr__(self, "timestamps", ts)
        else:
            object.__setattr__(self, "timestamps", ())
        finite = np.all(np.isfinite(returns), axis=0)
        if not finite.all():
            raise DataError(f"non-finite returns for asset {self.assets[int(np.argmin(finite))]!r}")
        # relative tolerance so log-differenced exponentials count as constant
        constant = np.ptp(returns, axis=0) <= CONSTANT_RTOL * np.max(np.abs(returns), axis=0)
        if constant.any():
            raise DataError(f"constant returns for asset {self.assets[int(np.argmax(constant))]!r}")
        object.__setattr__(self, "returns", returns)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_obs(self) -> int:
        return self.returns.shape[0]

    def row_labels(self) -> tuple[str, ...]:
        return self.timestamps or tuple(str(t) for t in range(self.n_obs))

    @classmethod
    def from_array(cls, returns, assets: Iterable[str] | None = None) -> "ReturnPanel":
        returns = np.asarray(returns, dtype=float)
        if assets is None:
            assets = [f"A{j}" for j in range(returns.shape[1])]
        return cls(tuple(assets), returns)


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline=""), False
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _read_wide(source, positive: bool):
    handle, owned = _open_text(source)
    try:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("malformed header: empty input") from None
        header = [h.strip() for h in header]
        if header and header[0].startswith("﻿"):
            header[0] = header[0][1:]
        if len(header) < 2 or header[0] != "date":
            raise DataError("malformed header: expected 'date' followed by asset identifiers")
        assets = _check_assets(header[1:])
        timestamps, rows, dropped = [], [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
            cells = [c.strip() for c in row[1:]]
            if any(c.lower() in MISSING_TOKENS for c in cells):
                dropped += 1
                continue
            values = []
            for asset, c in zip(assets, cells):
                try:
                    v = float(c)
                except ValueError:
                    raise DataError(
                        f"line {lineno} ({row[0]}): non-numeric cell {c!r} for asset {asset!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"line {lineno} ({row[0]}): non-finite cell for asset {asset!r}")
                if positive and v <= 0:
                    raise DataError(
                        f"line {lineno} ({row[0]}): non-positive price {c} for asset {asset!r}"
                    )
                values.append(v)
            timestamps.append(row[0].strip())
            rows.append(values)
    finally:
        if owned:
            handle.close()
    if len(rows) < 2:
        raise DataError(f"fewer than 2 usable rows ({len(rows)} after dropping {dropped})")
    return assets, timestamps, np.array(rows, dtype=float), dropped


def load_prices(source) -> PricePanel:
    """Read a wide price CSV from a path, bytes, or text/binary stream."""
    assets, timestamps, prices, dropped = _read_wide(source, positive=True)
    return PricePanel(assets, tuple(timestamps), prices, dropped)


def load_returns(source) -> ReturnPanel:
    """Read returns stored in the wide CSV format, without log-differencing."""
    assets, timestamps, returns, dropped = _read_wide(source, positive=False)
    return ReturnPanel(assets, returns, tuple(timestamps), dropped)


def log_diff(prices) -> np.ndarray:
    """``out[t] = ln(prices[t + 1]) - ln(prices[t])`` along the first axis, unvalidated."""
    return np.diff(np.log(np.asarray(prices, dtype=float)), axis=0)


def to_log_returns(p: PricePanel) -> ReturnPanel:
    return ReturnPanel(p.assets, log_diff(p.prices), p.timestamps[1:], p.dropped_rows)


def write_wide_csv(path, assets: Sequence[str], labels: Sequence[str], values: np.ndarray) -> None:
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *assets])
        for label, row in zip(labels, values):
            w.writerow([label, *(repr(float(v)) for v in row)])


def write_returns_csv(path, panel: ReturnPanel) -> None:
    write_wide_csv(path, panel.assets, panel.row_labels(), panel.returns)
