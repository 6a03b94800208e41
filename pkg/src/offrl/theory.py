"""Closed-form suboptimality bounds, empirical rate fits and the pessimism audit.

Hidden constants in the bounds are taken to be 1, so the values are only
meaningful for rate and ordering comparisons.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .mdp import InvalidInputError

BOUND_IDS = ("bound:bc", "bound:lcb", "bound:noisy", "bound:lower", "bound:kstep")


def default_iota(s_size: int, h: float, n: int) -> float:
    """ln(|S| H N), one concrete choice of the polylog factor."""
    return math.log(s_size * h * n)


@dataclass(frozen=True)
class BoundInputs:
    c_star: float
    h: float
    s_size: int
    n: int
    iota: float | None = None     # None -> default_iota
    b: float | None = None
    k: int | None = None
    eta: float | None = None
    log_z_mean: float | None = None

    def __post_init__(self):
        if not self.c_star >= 1.0:
            raise InvalidInputError(f"c_star must be >= 1, got {self.c_star}")
        if not self.h > 1.0:
            raise InvalidInputError(f"h must exceed 1, got {self.h}")
        if self.s_size < 1 or self.n < 1:
            raise InvalidInputError("s_size and n must be positive")
        if self.iota is not None and not self.iota > 0:
            raise InvalidInputError("iota must be positive")
        if self.b is not None and not 0.0 < self.b < 1.0:
            raise InvalidInputError("b must lie in (0, 1)")
        if self.k is not None and self.k < 1:
            raise InvalidInputError("k must be at least 1")
        if self.eta is not None and not self.eta > 0:
            raise InvalidInputError("eta must be positive")

    @property
    def i(self) -> float:
        return default_iota(self.s_size, self.h, self.n) if self.iota is None else float(self.iota)

    @classmethod
    def from_dict(cls, doc: dict) -> "BoundInputs":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise InvalidInputError(f"unknown bound inputs {sorted(extra)}")
        missing = {"c_star", "h", "s_size", "n"} - set(doc)
        if missing:
            raise InvalidInputError(f"missing bound inputs {sorted(missing)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


def _need(inputs: BoundInputs, *names: str) -> None:
    missing = [n for n in names if getattr(inputs, n) is None]
    if missing:
        raise InvalidInputError(f"bound needs {', '.join(missing)}")


def bc_bound(x: BoundInputs) -> float:
    """(C* - 1) H / 2 + |S| H iota / N."""
    return (x.c_star - 1.0) * x.h / 2.0 + x.s_size * x.h * x.i / x.n


def lcb_bound(x: BoundInputs) -> float:
    """sqrt(C* |S| H iota / N) + C* |S| H iota / N."""
    t = x.c_star * x.s_size * x.h * x.i / x.n
    return math.sqrt(t) + t


def noisy_lcb_bound(x: BoundInputs) -> float:
    """sqrt(H iota / (b N)) + H iota / (b N) + sqrt(b iota) + C* |S| iota / N."""
    _need(x, "b")
    t = x.h * x.i / (x.b * x.n)
    return math.sqrt(t) + t + math.sqrt(x.b * x.i) + x.c_star * x.s_size * x.i / x.n


def noisy_b_choice(h: float, n: int) -> float:
    """The coverage level b = sqrt(H) / N that balances the noisy-data bound."""
    return math.sqrt(h) / n


def lower_bound_c1(x: BoundInputs) -> float:
    """|S| H / N."""
    return x.s_size * x.h / x.n


def kstep_gain_lower_bound(x: BoundInputs) -> float:
    """(k / (H eta)) * mean log Z - sqrt(C* H iota / N)."""
    _need(x, "k", "eta", "log_z_mean")
    return x.k / (x.h * x.eta) * x.log_z_mean - math.sqrt(x.c_star * x.h * x.i / x.n)


BOUNDS = {
    "bound:bc": bc_bound,
    "bound:lcb": lcb_bound,
    "bound:noisy": noisy_lcb_bound,
    "bound:lower": lower_bound_c1,
    "bound:kstep": kstep_gain_lower_bound,
}


def evaluate_bounds(x: BoundInputs) -> dict[str, float]:
    """Every bound whose inputs are present."""
    out = {}
    for name, fn in BOUNDS.items():
        try:
            out[name] = fn(x)
        except InvalidInputError:
            continue
    return out


def scaling_exponent(points) -> tuple[float, float]:
    """Least-squares slope of log y on log x, with r^2."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InvalidInputError("need at least 3 (x, y) points")
    if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
        raise InvalidInputError("scaling fit needs positive finite values")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise InvalidInputError("x values must not all be equal")
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return float(slope), r2


def pessimism_audit(records, atol: float = 1e-9) -> float:
    """Fraction of (v_hat, v_true) records where some state has v_hat > v_true + atol."""
    records = list(records)
    if not records:
        raise InvalidInputError("no records to audit")
    bad = 0
    for v_hat, v_true in records:
        v_hat, v_true = np.asarray(v_hat, float), np.asarray(v_true, float)
        if v_hat.shape != v_true.shape:
            raise InvalidInputError("v_hat and v_true shapes differ")
        bad += bool(np.any(v_hat > v_true + atol))
    return bad / len(records)
