"""Renyi-divergence accountant for the subsampled Gaussian mechanism.

Each step costs at most ``7 q^2 eta / var_k`` at order ``eta`` (``q = B/n``,
``var_k`` the step's noise variance), valid only for
``eta <= (var_k / 2) ln(n / B)`` and ``q < 1/10``. Costs add over steps, and a
composed total converts to ``(eps, delta)`` through
``eps = min_eta total(eta) + ln(1/delta) / (eta - 1)``.

Only the sum of step weights is stored (1 per static step, ``k`` per dynamic
step), so totals are exact multiples of the single-step cost.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    ConfigurationError,
    InadmissibleOrderError,
    InfeasibleError,
    NoValidOrderError,
    UsageError,
)

MAX_SAMPLING_RATIO = 0.1
DEFAULT_ORDERS = np.arange(2, 2001, dtype=np.int64)
DEFAULT_C1_CEILING = 314.0
LEDGER_HEADER = "# d2p2-ledger v1"


@dataclass(frozen=True)
class MechanismParams:
    n: int
    B: int
    sigma_eps: float
    schedule_mode: str = "static"
    delta: float = 1e-5

    def __post_init__(self):
        if self.n < 1 or self.B < 1 or self.B > self.n:
            raise ConfigurationError(f"need 1 <= B <= n, got B={self.B}, n={self.n}")
        if not self.B / self.n < MAX_SAMPLING_RATIO:
            raise ConfigurationError(
                f"sampling ratio B/n = {self.B / self.n:.4g} must be < {MAX_SAMPLING_RATIO}"
            )
        if self.schedule_mode not in ("static", "dynamic"):
            raise ConfigurationError(f"unknown schedule mode {self.schedule_mode!r}")
        if not self.sigma_eps >= 0:
            raise ConfigurationError("sigma_eps must be >= 0")
        if not 0 < self.delta < 1:
            raise ConfigurationError("delta must lie in (0, 1)")

    @property
    def q(self) -> float:
        return self.B / self.n

    def step_weight(self, k: int) -> int:
        return k if self.schedule_mode == "dynamic" else 1

    def step_variance(self, k: int) -> float:
        v = self.sigma_eps * self.sigma_eps
        return v / k if self.schedule_mode == "dynamic" else v

    def order_cap(self, k: int) -> float:
        """Largest admissible order at step ``k``."""
        return self.step_variance(k) / 2.0 * math.log(self.n / self.B)


def _base_cost(params: MechanismParams, eta):
    """Single static step cost ``7 q^2 eta / sigma^2``."""
    q = params.q
    var = params.sigma_eps * params.sigma_eps
    if var == 0:
        return np.full(np.shape(eta), np.inf) if np.ndim(eta) else math.inf
    return 7.0 * q * q * eta / var


def per_step_renyi(params: MechanismParams, k: int, eta: int) -> float:
    if k < 1:
        raise ConfigurationError("step index starts at 1")
    if eta < 2:
        raise ConfigurationError("orders start at 2")
    cap = params.order_cap(k)
    if eta > cap:
        raise InadmissibleOrderError(f"order {eta} exceeds cap {cap:.4g} at step {k}")
    return _base_cost(params, float(eta)) * params.step_weight(k)


@dataclass
class PrivacyLedger:
    params: MechanismParams
    eta_grid: np.ndarray = field(default_factory=lambda: DEFAULT_ORDERS.copy())
    steps_done: int = 0
    weight: int = 0
    valid_eta_cap: float = math.inf

    def __post_init__(self):
        grid = np.asarray(self.eta_grid, dtype=np.int64)
        if grid.ndim != 1 or grid.size == 0 or grid.min() < 2 or np.any(np.diff(grid) <= 0):
            raise ConfigurationError("order grid must be ascending integers >= 2")
        self.eta_grid = grid

    @property
    def renyi_totals(self) -> np.ndarray:
        if self.weight == 0:
            return np.zeros(self.eta_grid.shape)
        return _base_cost(self.params, self.eta_grid.astype(np.float64)) * self.weight

    @property
    def admissible(self) -> np.ndarray:
        return self.eta_grid <= self.valid_eta_cap

    @classmethod
    def after(cls, params: MechanismParams, K: int, eta_grid=None) -> "PrivacyLedger":
        """Ledger state after ``K`` sequential steps, in closed form."""
        if K < 0:
            raise ConfigurationError("K must be >= 0")
        kw = {} if eta_grid is None else {"eta_grid": eta_grid}
        led = cls(params, **kw)
        if K:
            led.steps_done = K
            led.weight = K * (K + 1) // 2 if params.schedule_mode == "dynamic" else K
            led.valid_eta_cap = params.order_cap(K)
        return led

    def to_text(self) -> str:
        p = self.params
        lines = [
            LEDGER_HEADER,
            f"n = {p.n}",
            f"batch_size = {p.B}",
            f"sigma_eps = {p.sigma_eps!r}",
            f"schedule = {p.schedule_mode}",
            f"delta = {p.delta!r}",
            f"steps = {self.steps_done}",
            f"weight = {self.weight}",
            f"cap = {self.valid_eta_cap!r}",
            "orders = " + ",".join(str(int(e)) for e in self.eta_grid),
            "totals = " + ",".join(repr(float(t)) for t in self.renyi_totals),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PrivacyLedger":
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigurationError(f"bad ledger line {line!r}")
            kv[key.strip()] = val.strip()
        try:
            params = MechanismParams(
                int(kv["n"]), int(kv["batch_size"]), float(kv["sigma_eps"]),
                kv["schedule"], float(kv["delta"]),
            )
            led = cls(params, np.array([int(e) for e in kv["orders"].split(",")]))
            led.steps_done = int(kv["steps"])
            led.weight = int(kv["weight"])
            led.valid_eta_cap = float(kv["cap"])
        except KeyError as exc:
            raise ConfigurationError(f"ledger snapshot missing key {exc}") from None
        if "totals" in kv:
            stored = np.array([float(t) for t in kv["totals"].split(",")])
            if not np.array_equal(stored, led.renyi_totals):
                raise ConfigurationError("ledger totals do not match its step record")
        return led


def accumulate_step(ledger: PrivacyLedger, params: MechanismParams, k: int) -> PrivacyLedger:
    """Add step ``k``'s cost to ``ledger`` in place and return it."""
    if k != ledger.steps_done + 1:
        raise UsageError(f"expected step {ledger.steps_done + 1}, got {k}")
    if params != ledger.params:
        raise ConfigurationError("mechanism parameters changed mid-run")
    ledger.weight += params.step_weight(k)
    ledger.valid_eta_cap = min(ledger.valid_eta_cap, params.order_cap(k))
    ledger.steps_done = k
    return ledger


def epsilon_and_order(ledger: PrivacyLedger, delta: float | None = None) -> tuple[float, int]:
    """Smallest certified epsilon and the order attaining it."""
    delta = ledger.params.delta if delta is None else delta
    if not 0 < delta < 1:
        raise ConfigurationError("delta must lie in (0, 1)")
    mask = ledger.admissible
    if not mask.any():
        raise NoValidOrderError(
            f"no admissible Renyi order after {ledger.steps_done} steps "
            f"(cap {ledger.valid_eta_cap:.4g})"
        )
    eta = ledger.eta_grid[mask]
    eps = ledger.renyi_totals[mask] + math.log(1.0 / delta) / (eta - 1.0)
    i = int(np.argmin(eps))
    return float(eps[i]), int(eta[i])


def epsilon_at_delta(ledger: PrivacyLedger, delta: float | None = None) -> float:
    return epsilon_and_order(ledger, delta)[0]


def epsilon_or_inf(params: MechanismParams, K: int, delta: float | None = None,
                   eta_grid=None) -> float:
    """Epsilon after ``K`` steps, with ``inf`` standing for "no valid order"."""
    try:
        return epsilon_at_delta(PrivacyLedger.after(params, K, eta_grid), delta)
    except NoValidOrderError:
        return math.inf


class C1Check(NamedTuple):
    within: bool
    implied_c1: float


def c1_feasibility(n: int, B: int, K: int, eps: float,
                   ceiling: float = DEFAULT_C1_CEILING) -> C1Check:
    """Implied constant ``eps n^2 / (B^2 K)`` of the bound ``eps <= C1 B^2 K / n^2``."""
    implied = eps * n * n / (B * B * K)
    return C1Check(implied <= ceiling, implied)


def required_sigma(n: int, B: int, K: int, eps_target: float, delta: float,
                   schedule_mode: str = "dynamic", eta_grid=None,
                   c1_ceiling: float = DEFAULT_C1_CEILING, rtol: float = 1e-6) -> float:
    """Smallest sigma_eps (to ``rtol``) whose ``K``-step epsilon is at most ``eps_target``."""
    if not eps_target > 0:
        raise ConfigurationError("eps_target must be > 0")
    if K < 1:
        raise ConfigurationError("K must be >= 1")
    if not c1_feasibility(n, B, K, eps_target, c1_ceiling).within:
        warnings.warn(
            f"eps_target {eps_target} exceeds C1*B^2*K/n^2 with C1={c1_ceiling}",
            stacklevel=2,
        )
    grid = DEFAULT_ORDERS if eta_grid is None else np.asarray(eta_grid)
    floor = math.log(1.0 / delta) / (float(grid.max()) - 1.0)
    if eps_target <= floor:
        raise InfeasibleError(
            f"eps_target {eps_target} is below the grid floor {floor:.4g}; no sigma suffices"
        )

    def eps(sigma):
        return epsilon_or_inf(MechanismParams(n, B, sigma, schedule_mode, delta), K, delta, grid)

    hi = 1.0
    while eps(hi) > eps_target:
        hi *= 2.0
        if hi > 1e12:
            raise InfeasibleError(f"eps_target {eps_target} unreachable")
    lo = hi / 2.0
    while eps(lo) <= eps_target:
        hi, lo = lo, lo / 2.0
        if lo < 1e-12:
            return hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if eps(mid) <= eps_target:
            hi = mid
        else:
            lo = mid
    return hi
