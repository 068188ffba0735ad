"""Seeded synthetic markets from a linear factor model with group structure.

Each asset belongs to one group and loads strongly on that group's factor
and weakly on the others::

    R_j(t) = sum_k beta_jk F_k(t) + sigma * eta_j(t)

with ``F`` and ``eta`` i.i.d. standard normal.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DataError
from .market_data import ReturnPanel


@dataclass(frozen=True)
class MarketSpec:
    n_assets: int = 50
    n_obs: int = 2000
    n_factors: int = 5
    dominant_beta: tuple[float, float] = (0.5, 1.5)
    off_beta: tuple[float, float] = (0.0, 0.2)
    sigma: float = 0.8
    seed: int = 42
    groups: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.n_factors < 1:
            raise DataError("n_factors must be at least 1")
        if self.n_obs < 2:
            raise DataError("n_obs must be at least 2")
        if not self.sigma > 0:
            raise DataError("idiosyncratic sigma must be positive")
        dom, off = tuple(map(float, self.dominant_beta)), tuple(map(float, self.off_beta))
        if dom[0] > dom[1] or off[0] > off[1]:
            raise DataError("beta ranges must be (low, high) with low <= high")
        if self.n_factors > 1 and not dom[0] > off[1]:
            raise DataError("dominant beta range must lie strictly above the off-group range")
        groups = tuple(int(g) for g in self.groups) or tuple(
            j * self.n_factors // self.n_assets for j in range(self.n_assets)
        )
        if len(groups) != self.n_assets:
            raise DataError(f"group assignment has {len(groups)} entries for {self.n_assets} assets")
        sizes = np.bincount(groups, minlength=self.n_factors)
        if min(groups) < 0 or len(sizes) != self.n_factors or sizes.min() < 2:
            raise DataError("every factor needs at least 2 assets assigned to it")
        object.__setattr__(self, "dominant_beta", dom)
        object.__setattr__(self, "off_beta", off)
        object.__setattr__(self, "groups", groups)

    @property
    def assets(self) -> tuple[str, ...]:
        width = len(str(self.n_assets - 1))
        return tuple(f"S{j:0{width}d}" for j in range(self.n_assets))


@dataclass(frozen=True)
class GroundTruth:
    betas: np.ndarray
    factors: np.ndarray
    groups: tuple[int, ...]

    def to_json(self, spec: MarketSpec) -> dict:
        return {
            "spec": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()},
            "assets": list(spec.assets),
            "groups": list(self.groups),
            "betas": {a: [float(b) for b in row] for a, row in zip(spec.assets, self.betas)},
            "factors": [[float(v) for v in row] for row in self.factors],
        }


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def generate(spec: MarketSpec) -> tuple[ReturnPanel, GroundTruth]:
    t, n, k = spec.n_obs, spec.n_assets, spec.n_factors
    factors = _stream(spec.seed, 1).standard_normal((t, k))
    betas = np.empty((n, k))
    returns = np.empty((t, n))
    for j, g in enumerate(spec.groups):
        rng = _stream(spec.seed, 0, j)
        betas[j] = rng.uniform(*spec.off_beta, size=k)
        betas[j, g] = rng.uniform(*spec.dominant_beta)
        returns[:, j] = factors @ betas[j] + spec.sigma * rng.standard_normal(t)
    timestamps = tuple(str(i) for i in range(1, t + 1))
    panel = ReturnPanel(spec.assets, returns, timestamps)
    return panel, GroundTruth(betas, factors, spec.groups)


_INT_KEYS = {"n_assets", "n_obs", "n_factors", "seed"}
_PAIR_KEYS = {"dominant_beta", "off_beta"}


def parse_spec(text: str, **overrides) -> MarketSpec:
    """Parse ``key = value`` lines (``#`` comments allowed) into a MarketSpec.

    Pairs and group lists are comma separated, e.g. ``dominant_beta = 0.8, 1.2``.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"spec line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _INT_KEYS | _PAIR_KEYS | {"sigma", "groups"}:
            raise DataError(f"spec line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _PAIR_KEYS:
                lo, hi = (float(v) for v in value.split(","))
                values[key] = (lo, hi)
            elif key == "sigma":
                values[key] = float(value)
            elif key == "groups":
                values[key] = tuple(int(v) for v in value.split(","))
        except ValueError:
            raise DataError(f"spec line {lineno}: bad value for {key!r}: {value!r}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return MarketSpec(**values)


def load_spec(path, **overrides) -> MarketSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), **overrides)


def write_ground_truth(path, spec: MarketSpec, truth: GroundTruth) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth.to_json(spec), fh, indent=1)
        fh.write("\n")
