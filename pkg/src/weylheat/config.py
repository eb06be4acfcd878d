"""Problem configuration: TOML for people, JSON for machines.

Matrices are row-major nested lists.  A single-operator problem may give
``g`` and ``R``; these fill both the ``+`` and ``-`` slots unless the signed
keys are present.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from .curvature import as_curvature, as_metric
from .errors import ValidationError

BUNDLED = ("landau2d.toml", "product2d.toml", "commutative1d.toml")
DEFAULT_CONFIG = "product2d.toml"


@dataclass(frozen=True)
class ProblemConfig:
    n: int
    g_plus: np.ndarray
    g_minus: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    t: tuple[float, ...]
    s: tuple[float, ...]
    eval_points: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]
    tolerances: dict[str, float] = field(default_factory=dict)
    precision: str | None = None
    weyl_degree: int = 4
    points_per_axis: int = 200
    small_field_t: float = 0.3
    name: str = "config"

    def tolerance(self, check: str, default: float) -> float:
        """Override lookup: exact check name, then its suite prefix, then ``all``."""
        for key in (check, check.split(".")[0], "all"):
            if key in self.tolerances:
                return self.tolerances[key]
        return default

    @property
    def equal_operators(self) -> bool:
        return bool(np.array_equal(self.g_plus, self.g_minus) and np.array_equal(self.R_plus, self.R_minus))


def _grid(raw, key: str) -> tuple[float, ...]:
    vals = raw if isinstance(raw, (list, tuple)) else [raw]
    try:
        out = tuple(float(v) for v in vals)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} must be a number or a list of numbers, got {raw!r}") from None
    if not out:
        raise ValidationError(f"{key} grid is empty")
    bad = [v for v in out if not v > 0]
    if bad:
        raise ValidationError(f"{key} values must be positive, got {bad}")
    return out


def _points(raw, n: int) -> tuple:
    if raw is None:
        return ((tuple([0.0] * n), tuple([0.0] * n)),)
    pts = []
    for i, pair in enumerate(raw):
        try:
            x, y = pair
            x, y = tuple(float(v) for v in x), tuple(float(v) for v in y)
        except (TypeError, ValueError):
            raise ValidationError(f"eval_points[{i}] must be a pair of {n}-vectors, got {pair!r}") from None
        if len(x) != n or len(y) != n:
            raise ValidationError(f"eval_points[{i}] has wrong dimension (expected {n})")
        pts.append((x, y))
    if not pts:
        raise ValidationError("eval_points is empty")
    return tuple(pts)


def from_dict(d: dict[str, Any], name: str = "config") -> ProblemConfig:
    known = {"n", "g", "R", "g_plus", "g_minus", "R_plus", "R_minus", "t", "s", "eval_points",
             "tolerances", "precision", "weyl_degree", "points_per_axis", "small_field_t", "name"}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    g_plus = d.get("g_plus", d.get("g"))
    R_plus = d.get("R_plus", d.get("R"))
    if g_plus is None or R_plus is None:
        raise ValidationError("config needs g (or g_plus) and R (or R_plus)")
    g_plus = as_metric(g_plus, name="g_plus")
    R_plus = as_curvature(R_plus, name="R_plus")
    g_minus = as_metric(d.get("g_minus", g_plus), name="g_minus")
    R_minus = as_curvature(d.get("R_minus", R_plus), name="R_minus")
    n = int(d.get("n", g_plus.shape[0]))
    for key, M in (("g_plus", g_plus), ("g_minus", g_minus), ("R_plus", R_plus), ("R_minus", R_minus)):
        if M.shape != (n, n):
            raise ValidationError(f"{key} has shape {M.shape}, expected {(n, n)}")
    t = _grid(d.get("t", 1.0), "t")
    s = _grid(d.get("s", t), "s")
    tols = d.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ValidationError("tolerances must be a table of name = value")
    try:
        tols = {str(k): float(v) for k, v in tols.items()}
    except (TypeError, ValueError):
        raise ValidationError(f"tolerance values must be numbers: {tols!r}") from None
    precision = d.get("precision")
    if precision not in (None, "double", "exact"):
        raise ValidationError(f"precision must be 'double' or 'exact', got {precision!r}")
    return ProblemConfig(
        n=n, g_plus=g_plus, g_minus=g_minus, R_plus=R_plus, R_minus=R_minus, t=t, s=s,
        eval_points=_points(d.get("eval_points"), n), tolerances=tols, precision=precision,
        weyl_degree=int(d.get("weyl_degree", 4)), points_per_axis=int(d.get("points_per_axis", 200)),
        small_field_t=float(d.get("small_field_t", 0.3)), name=str(d.get("name", name)))


def bundled_path(name: str):
    return resources.files("weylheat").joinpath("configs", name)


def load_config(path: str | Path | None = None) -> ProblemConfig:
    """Load a TOML or JSON file; a bare bundled file name (e.g. ``landau2d.toml``) also works."""
    if path is None:
        path = DEFAULT_CONFIG
    p = Path(path)
    if p.exists():
        text, name = p.read_text(), p.name
    elif p.name in BUNDLED or f"{p.name}.toml" in BUNDLED:
        fname = p.name if p.name in BUNDLED else f"{p.name}.toml"
        text, name = bundled_path(fname).read_text(), fname
    else:
        raise ValidationError(f"config file not found: {path}")
    try:
        if name.endswith(".json"):
            raw = json.loads(text)
        else:
            raw = tomli.loads(text)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as exc:
        raise ValidationError(f"cannot parse {name}: {exc}") from None
    return from_dict(raw, name=Path(name).stem)
