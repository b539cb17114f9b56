"""Scenario configuration, validation, and random sampling.

A scenario bundles everything that defines one OFDM sensing+communication
link: grid sizes (N subcarriers, M symbols), K targets with Gaussian priors
over (Re alpha, Im alpha, tau), noise variances, power budget/cap, and the
communication channel gains. Sampling of target parameters and transmit
symbols is driven by counter-based substreams so results never depend on
evaluation order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


class ScenarioError(ValueError):
    """Raised for malformed or infeasible scenario documents."""


# ---------------------------------------------------------------------------
# Reproducible RNG streams
# ---------------------------------------------------------------------------

def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    digest = hashlib.blake2s(str(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SeededStream:
    """Counter-based random stream addressed by a (seed, path) pair.

    ``child(*keys)`` derives an independent substream; generators built from
    distinct paths are statistically independent and do not share state, so
    drawing sample i never depends on whether samples 0..i-1 were drawn.
    """

    seed: int
    path: tuple = ()

    def child(self, *keys) -> "SeededStream":
        return SeededStream(self.seed, self.path + tuple(_key_to_int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([int(self.seed)] + [k for k in self.path])
        return np.random.Generator(np.random.Philox(seq))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TargetPrior:
    """Independent Gaussian prior over one target's (Re alpha, Im alpha, tau).

    ``mean`` is a length-3 vector (alpha unitless, tau in seconds) and
    ``covariance`` a symmetric positive-definite 3x3 matrix.
    """

    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.shape != (3,):
            raise ScenarioError(f"prior mean must have 3 entries, got shape {mean.shape}")
        if cov.shape != (3, 3):
            raise ScenarioError(f"prior covariance must be 3x3, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, abs(cov).max())):
            raise ScenarioError("prior covariance not symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ScenarioError("prior covariance not positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def rcs_mean(self) -> complex:
        return complex(self.mean[0], self.mean[1])

    @property
    def rcs_second_moment(self) -> float:
        """E[|alpha|^2] = |E alpha|^2 + Var(Re alpha) + Var(Im alpha)."""
        return float(self.mean[0] ** 2 + self.mean[1] ** 2
                     + self.covariance[0, 0] + self.covariance[1, 1])

    @property
    def zero_mean_rcs(self) -> bool:
        return self.mean[0] == 0.0 and self.mean[1] == 0.0


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Full system description for one sensing+communication scenario."""

    n_subcarriers: int
    n_symbols: int
    subcarrier_spacing_hz: float
    radar_noise_var: float
    comm_noise_var: float
    total_power: float
    priors: tuple
    per_entry_power_cap: float | None = None
    comm_channel: np.ndarray | None = None
    description: str = ""

    def __post_init__(self):
        for name in ("n_subcarriers", "n_symbols"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ScenarioError(f"{name} must be a positive integer, got {v!r}")
        for name in ("subcarrier_spacing_hz", "radar_noise_var", "comm_noise_var",
                     "total_power"):
            v = float(getattr(self, name))
            if not v > 0.0 or not np.isfinite(v):
                raise ScenarioError(f"{name} must be strictly positive, got {v!r}")
            object.__setattr__(self, name, v)
        if len(self.priors) < 1:
            raise ScenarioError("at least one target prior is required")
        object.__setattr__(self, "priors", tuple(self.priors))

        cap = self.per_entry_power_cap
        if cap is None:
            # headroom 4x above uniform so the cap binds only near the
            # sensing-optimal extreme
            cap = 4.0 * self.total_power / (self.n_subcarriers * self.n_symbols)
        cap = float(cap)
        if not cap > 0.0:
            raise ScenarioError(f"per_entry_power_cap must be strictly positive, got {cap!r}")
        if cap * self.n_subcarriers * self.n_symbols < self.total_power:
            raise ScenarioError(
                "infeasible power budget: total_power exceeds "
                "per_entry_power_cap * n_subcarriers * n_symbols")
        object.__setattr__(self, "per_entry_power_cap", cap)

        h = self.comm_channel
        if h is None:
            h = np.ones(self.n_subcarriers, dtype=complex)
        h = np.asarray(h, dtype=complex)
        if h.shape != (self.n_subcarriers,):
            raise ScenarioError(
                f"comm_channel must have length n_subcarriers={self.n_subcarriers}, "
                f"got shape {h.shape}")
        object.__setattr__(self, "comm_channel", h)

    @property
    def n_targets(self) -> int:
        return len(self.priors)

    @property
    def omega0(self) -> float:
        """Angular subcarrier spacing, 2*pi*f0."""
        return 2.0 * np.pi * self.subcarrier_spacing_hz


@dataclass(frozen=True, eq=False)
class TargetDraw:
    """One joint realization of all K targets: complex RCS and delay each."""

    rcs: np.ndarray     # (K,) complex
    delays: np.ndarray  # (K,) seconds

    def __post_init__(self):
        rcs = np.asarray(self.rcs, dtype=complex)
        delays = np.asarray(self.delays, dtype=float)
        if rcs.shape != delays.shape or rcs.ndim != 1:
            raise ScenarioError("rcs and delays must be 1-d arrays of equal length")
        if not np.all(np.isfinite(delays)):
            raise ScenarioError("delays must be finite")
        object.__setattr__(self, "rcs", rcs)
        object.__setattr__(self, "delays", delays)

    @property
    def n_targets(self) -> int:
        return self.rcs.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """Stacked parameter vector [Re a_1, Im a_1, tau_1, ...] of length 3K."""
        out = np.empty(3 * self.n_targets)
        out[0::3] = self.rcs.real
        out[1::3] = self.rcs.imag
        out[2::3] = self.delays
        return out


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-subcarrier/per-symbol transmit powers, an N x M matrix P_nm >= 0."""

    powers: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float)
        if p.ndim != 2:
            raise ScenarioError("powers must be an N x M matrix")
        if np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise ScenarioError("powers must be finite and nonnegative")
        object.__setattr__(self, "powers", p)

    @property
    def vector(self) -> np.ndarray:
        """Flattened [p_1; ...; p_M] with p_m the per-symbol N-vector."""
        return self.powers.ravel(order="F")

    @property
    def total(self) -> float:
        return float(self.powers.sum())

    @classmethod
    def from_vector(cls, v, n: int, m: int) -> "PowerAllocation":
        return cls(np.asarray(v, dtype=float).reshape((n, m), order="F"))

    @classmethod
    def uniform(cls, cfg: ScenarioConfig, level: float | None = None) -> "PowerAllocation":
        if level is None:
            level = cfg.total_power / (cfg.n_subcarriers * cfg.n_symbols)
        return cls(np.full((cfg.n_subcarriers, cfg.n_symbols), float(level)))

    def feasible(self, cfg: ScenarioConfig, tol: float = 1e-12) -> bool:
        slack = tol * cfg.total_power
        return bool(np.all(self.powers >= -slack)
                    and np.all(self.powers <= cfg.per_entry_power_cap + slack)
                    and self.total <= cfg.total_power + slack)


@dataclass(frozen=True, eq=False)
class SymbolMatrix:
    """One N x M frequency-domain symbol realization; power is |x_nm|^2."""

    symbols: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.symbols, dtype=complex)
        if x.ndim != 2:
            raise ScenarioError("symbols must be an N x M matrix")
        object.__setattr__(self, "symbols", x)

    @property
    def powers(self) -> np.ndarray:
        return np.abs(self.symbols) ** 2


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_REQUIRED_KEYS = ("n_subcarriers", "n_symbols", "subcarrier_spacing_hz",
                  "radar_noise_var", "comm_noise_var", "total_power", "targets")
_OPTIONAL_KEYS = ("per_entry_power_cap", "comm_channel", "description")


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario document.

    Required keys: n_subcarriers, n_symbols, subcarrier_spacing_hz,
    radar_noise_var, comm_noise_var, total_power, targets (list of
    {mean: [3], cov: [3][3]}). Optional: per_entry_power_cap (default
    4*total_power/(N*M)), comm_channel (list of [re, im] pairs, default
    flat unit gains), description.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in doc]
    if missing:
        raise ScenarioError(f"missing required field(s): {', '.join(missing)}")
    unknown = [k for k in doc if k not in _REQUIRED_KEYS + _OPTIONAL_KEYS]
    if unknown:
        raise ScenarioError(f"unknown field(s): {', '.join(sorted(unknown))}")

    targets = doc["targets"]
    if not isinstance(targets, list) or not targets:
        raise ScenarioError("targets must be a nonempty list")
    priors = []
    for i, entry in enumerate(targets):
        if not isinstance(entry, dict) or "mean" not in entry or "cov" not in entry:
            raise ScenarioError(f"targets[{i}] must be an object with 'mean' and 'cov'")
        priors.append(TargetPrior(np.asarray(entry["mean"], dtype=float),
                                  np.asarray(entry["cov"], dtype=float)))

    comm = doc.get("comm_channel")
    if comm is not None:
        try:
            comm = np.array([complex(re, im) for re, im in comm])
        except (TypeError, ValueError):
            raise ScenarioError("comm_channel entries must be [re, im] pairs") from None

    return ScenarioConfig(
        n_subcarriers=int(doc["n_subcarriers"]),
        n_symbols=int(doc["n_symbols"]),
        subcarrier_spacing_hz=doc["subcarrier_spacing_hz"],
        radar_noise_var=doc["radar_noise_var"],
        comm_noise_var=doc["comm_noise_var"],
        total_power=doc["total_power"],
        priors=tuple(priors),
        per_entry_power_cap=doc.get("per_entry_power_cap"),
        comm_channel=comm,
        description=doc.get("description", ""),
    )


def scenario_to_json(cfg: ScenarioConfig) -> str:
    """Serialize a config so that ``load_scenario`` reproduces it exactly."""
    doc = {
        "n_subcarriers": cfg.n_subcarriers,
        "n_symbols": cfg.n_symbols,
        "subcarrier_spacing_hz": cfg.subcarrier_spacing_hz,
        "radar_noise_var": cfg.radar_noise_var,
        "comm_noise_var": cfg.comm_noise_var,
        "total_power": cfg.total_power,
        "per_entry_power_cap": cfg.per_entry_power_cap,
        "comm_channel": [[h.real, h.imag] for h in cfg.comm_channel],
        "targets": [{"mean": prior.mean.tolist(), "cov": prior.covariance.tolist()}
                    for prior in cfg.priors],
    }
    if cfg.description:
        doc["description"] = cfg.description
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_targets(priors, count: int, rng_stream: SeededStream) -> list:
    """Draw ``count`` i.i.d. joint target realizations from the priors.

    Per draw and target, theta_k ~ N(mean_k, cov_k); targets are independent.
    Draw i uses substream ("targets", i), so results are identical for the
    same seed no matter how many draws are requested or in what order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    draws = []
    for i in range(count):
        gen = rng_stream.child("targets", i).generator()
        rcs = np.empty(len(priors), dtype=complex)
        delays = np.empty(len(priors))
        for k, prior in enumerate(priors):
            theta = prior.mean + prior._chol @ gen.standard_normal(3)
            rcs[k] = complex(theta[0], theta[1])
            delays[k] = theta[2]
        draws.append(TargetDraw(rcs=rcs, delays=delays))
    return draws


def sample_symbols(p: PowerAllocation, count: int, rng_stream: SeededStream) -> list:
    """Draw ``count`` symbol matrices with x_nm ~ CN(0, P_nm).

    Real and imaginary parts are independent N(0, P_nm/2). Draw i uses
    substream ("symbols", i).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    scale = np.sqrt(p.powers / 2.0)
    out = []
    for i in range(count):
        gen = rng_stream.child("symbols", i).generator()
        z = gen.standard_normal(p.powers.shape) + 1j * gen.standard_normal(p.powers.shape)
        out.append(SymbolMatrix(scale * z))
    return out
