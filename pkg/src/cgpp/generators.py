"""Seeded instance generators.

Every distribution is reduced to an exact probability mass function over
integer sizes (continuous laws are rounded to the nearest integer and
clamped to ``[lo, hi]``) and sampled by inverse CDF from a PCG64 stream of
53-bit doubles.  Any language with PCG64 and the same pmf arithmetic
reproduces the instances.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from scipy import stats

from .model import Instance


class SpecError(ValueError):
    pass


KINDS = ("uniform", "normal", "binomial", "poisson", "weibull", "categorical", "mixture", "periodic")


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    parts: tuple["DistributionSpec", ...] = ()
    weights: tuple[float, ...] = ()
    section_size: int = 0
    name: str = ""
    placeholder: bool = False

    def support(self) -> np.ndarray:
        """Every size this spec can emit (positive probability)."""
        if self.kind == "periodic":
            return np.unique(np.concatenate([p.support() for p in self.parts]))
        sizes, probs = self.pmf()
        return sizes[probs > 0]

    def pmf(self) -> tuple[np.ndarray, np.ndarray]:
        """Sizes and probabilities for a stationary spec."""
        return _pmf(self)


def _check_range(lo, hi):
    if not (isinstance(lo, (int, np.integer)) and isinstance(hi, (int, np.integer))):
        raise SpecError("lo and hi must be integers")
    if lo < 1 or hi < lo:
        raise SpecError(f"invalid size range [{lo}, {hi}]")


def _rounded(cdf, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """pmf of round(X) clamped to [lo, hi] for a continuous X with the given cdf."""
    sizes = np.arange(lo, hi + 1)
    edges = cdf(np.arange(lo, hi) + 0.5)
    cum = np.concatenate([[0.0], edges, [1.0]])
    return sizes, np.diff(cum)


def _clamped(pmf_fn, cdf_fn, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """pmf of an integer X clamped to [lo, hi]."""
    sizes = np.arange(lo, hi + 1)
    probs = pmf_fn(sizes).astype(float)
    probs[0] = cdf_fn(lo)
    probs[-1] = 1.0 - cdf_fn(hi - 1) if hi > lo else 1.0
    return sizes, probs


def _pmf(spec: DistributionSpec) -> tuple[np.ndarray, np.ndarray]:
    k, p = spec.kind, spec.params
    if k == "uniform":
        lo, hi = p["lo"], p["hi"]
        _check_range(lo, hi)
        sizes = np.arange(lo, hi + 1)
        return sizes, np.full(len(sizes), 1.0 / len(sizes))
    if k == "normal":
        lo, hi = p["lo"], p["hi"]
        _check_range(lo, hi)
        mu, sigma = float(p["mu"]), float(p["sigma"])
        if sigma <= 0:
            raise SpecError("sigma must be positive")
        return _rounded(lambda x: stats.norm.cdf(x, mu, sigma), lo, hi)
    if k == "weibull":
        lo, hi = p["lo"], p["hi"]
        _check_range(lo, hi)
        shape, scale = float(p["shape"]), float(p["scale"])
        if shape <= 0 or scale <= 0:
            raise SpecError("weibull shape and scale must be positive")
        return _rounded(lambda x: stats.weibull_min.cdf(x, shape, scale=scale), lo, hi)
    if k == "binomial":
        n, prob, offset = int(p["n"]), float(p["p"]), int(p.get("offset", 1))
        if not 0 <= prob <= 1 or n < 0:
            raise SpecError("binomial needs n >= 0 and p in [0, 1]")
        lo, hi = p.get("lo", offset), p.get("hi", offset + n)
        _check_range(lo, hi)
        return _clamped(lambda s: stats.binom.pmf(s - offset, n, prob),
                        lambda s: stats.binom.cdf(s - offset, n, prob), lo, hi)
    if k == "poisson":
        lam = float(p["lam"])
        lo, hi = p["lo"], p["hi"]
        _check_range(lo, hi)
        if lam <= 0:
            raise SpecError("poisson rate must be positive")
        return _clamped(lambda s: stats.poisson.pmf(s, lam), lambda s: stats.poisson.cdf(s, lam), lo, hi)
    if k == "categorical":
        table = {int(s): float(w) for s, w in p["probs"].items()}
        if not table or min(table) < 1 or any(w < 0 for w in table.values()) or sum(table.values()) <= 0:
            raise SpecError("categorical needs positive sizes and non-negative weights")
        sizes = np.array(sorted(table))
        probs = np.array([table[s] for s in sizes])
        return sizes, probs / probs.sum()
    if k == "mixture":
        if len(spec.parts) != len(spec.weights) or not spec.parts:
            raise SpecError("mixture needs one weight per part")
        w = np.asarray(spec.weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise SpecError("mixture weights must be non-negative")
        w = w / w.sum()
        acc: dict[int, float] = {}
        for wi, part in zip(w, spec.parts):
            for s, pr in zip(*part.pmf()):
                acc[int(s)] = acc.get(int(s), 0.0) + wi * pr
        sizes = np.array(sorted(acc))
        return sizes, np.array([acc[s] for s in sizes])
    if k == "periodic":
        raise SpecError("a periodic spec has no single pmf; use its parts")
    raise SpecError(f"unknown distribution kind {k!r}")


def type_pmf(spec: DistributionSpec, instance: Instance, regime: int = 0) -> np.ndarray:
    """Probabilities over ``instance``'s type table (periodic: the given regime)."""
    if spec.kind == "periodic":
        spec = spec.parts[regime % len(spec.parts)]
    sizes, probs = spec.pmf()
    lookup = {int(s): pr for s, pr in zip(sizes, probs)}
    return np.array([lookup.get(int(s), 0.0) for s in instance.sizes])


def _inverse_cdf_draw(sizes: np.ndarray, probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, u, side="right")
    return sizes[np.minimum(idx, len(sizes) - 1)]


def sample_instance(spec: DistributionSpec, bin_capacity: int, n_items: int, seed: int, name: str = "") -> Instance:
    """Draw ``n_items`` sizes; the type table is the spec's whole support, largest first."""
    if n_items < 0:
        raise SpecError("n_items must be non-negative")
    support = spec.support()
    if len(support) == 0:
        raise SpecError("spec has empty support")
    if support.min() < 1 or support.max() >= bin_capacity:
        raise SpecError(f"sizes must lie in [1, {bin_capacity - 1}], spec emits [{support.min()}, {support.max()}]")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(n_items)
    if spec.kind == "periodic":
        if spec.section_size < 1:
            raise SpecError("periodic spec needs section_size >= 1")
        out = np.empty(n_items, dtype=np.int64)
        for start in range(0, n_items, spec.section_size):
            part = spec.parts[(start // spec.section_size) % len(spec.parts)]
            stop = min(start + spec.section_size, n_items)
            out[start:stop] = _inverse_cdf_draw(*part.pmf(), u[start:stop])
        drawn = out
    else:
        drawn = _inverse_cdf_draw(*spec.pmf(), u)
    table = np.sort(support)[::-1]
    index = {int(s): t for t, s in enumerate(table)}
    seq = np.array([index[int(s)] for s in drawn], dtype=np.int64)
    return Instance(bin_capacity, table, seq, name=name or spec.name)


# -- spec (de)serialisation -------------------------------------------------------

def spec_from_dict(d: dict, name: str = "") -> DistributionSpec:
    if "kind" not in d:
        raise SpecError("spec needs a 'kind'")
    kind = d["kind"]
    if kind not in KINDS:
        raise SpecError(f"unknown distribution kind {kind!r}")
    name = d.get("name", name)
    placeholder = bool(d.get("placeholder", False))
    if kind in ("mixture", "periodic"):
        parts = tuple(spec_from_dict(x) for x in d.get("parts", []))
        if not parts:
            raise SpecError(f"{kind} spec needs parts")
        weights = tuple(float(w) for w in d.get("weights", [1.0] * len(parts)))
        return DistributionSpec(kind, {}, parts, weights, int(d.get("section_size", 0)), name, placeholder)
    params = {k: v for k, v in d.items() if k not in ("kind", "name", "placeholder", "provenance", "bin_capacity")}
    spec = DistributionSpec(kind, params, name=name, placeholder=placeholder)
    spec.pmf()  # validate eagerly
    return spec


def load_spec(path: str | Path) -> tuple[DistributionSpec, int | None]:
    """Spec from a YAML file; also returns its ``bin_capacity`` if declared."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        d = yaml.safe_load(fh)
    if not isinstance(d, dict):
        raise SpecError(f"{path}: expected a mapping")
    spec = spec_from_dict(d, name=d.get("name", path.stem))
    return spec, d.get("bin_capacity")


def preset_names() -> list[str]:
    root = resources.files("cgpp") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> tuple[DistributionSpec, int]:
    root = resources.files("cgpp") / "presets"
    res = root / f"{name}.yaml"
    if not res.is_file():
        raise SpecError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    d = yaml.safe_load(res.read_text(encoding="utf-8"))
    spec = spec_from_dict(d, name=name)
    if spec.placeholder:
        warnings.warn(f"preset {name} carries placeholder parameters: {d.get('provenance', '')}", stacklevel=2)
    return spec, int(d.get("bin_capacity", 100))


def n_regimes(spec: DistributionSpec, n_items: int) -> int:
    if spec.kind != "periodic":
        return 1
    return math.ceil(n_items / spec.section_size) if n_items else 0
