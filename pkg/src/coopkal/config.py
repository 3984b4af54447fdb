"""Experiment configuration: a frozen dataclass plus a strict TOML loader.

Config files carry exactly the dataclass's field names; unknown keys are
rejected rather than ignored so a typo cannot silently fall back to a
default. Defaults reproduce the synthetic benchmark protocol.
"""

import hashlib
import json
from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

__all__ = ["ExperimentConfig", "load_config"]


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one experiment run.

    Attributes
    ----------
    n_a, n_b : int
        Node counts of the two subgraphs.
    k : int
        k-NN graph construction parameter.
    period : int
        Cycle length P for synthetic data; for CSV data the upper bound
        handed to the period detector.
    t_train, t_test : int
        Lengths of the training and test partitions.
    sigma_w : list of float
        Observation noise levels; one full run per level.
    sigma_v : float
        Process noise level of the filter's prediction.
    delta : float
        Initial error covariance scale.
    eta : float
        Control gain pulling the prediction toward the slot mean.
    zeta : float
        Tikhonov smoothing weight.
    d_a, d_b : int
        Unobserved node counts per subgraph.
    seeds : list of int
        Monte-Carlo seeds; one independent trial per seed.
    transport_mode : str
        "sqrt" or "linear" spectral transport.
    kernel_orders : tuple of int
        Rational kernel orders (Qn, Qd) for the PSD transfer.
    dataset : str
        "synthetic" (generated) or "csv" (ingested signal files).
    resample_masks : bool
        Redraw the unobserved node sets at every instant instead of once
        per run.
    """

    n_a: int = 90
    n_b: int = 45
    k: int = 5
    period: int = 8
    t_train: int = 200
    t_test: int = 40
    sigma_w: list = field(default_factory=lambda: [0.05, 0.10, 0.15])
    sigma_v: float = 0.0
    delta: float = 1.0
    eta: float = 0.05
    zeta: float = 0.05
    d_a: int = 5
    d_b: int = 2
    seeds: list = field(default_factory=lambda: list(range(10)))
    transport_mode: str = "sqrt"
    kernel_orders: tuple = (3, 3)
    dataset: str = "synthetic"
    resample_masks: bool = False

    def __post_init__(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        for name in ("n_a", "n_b", "k", "period", "t_train", "t_test", "d_a", "d_b"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool), f"{name} must be an integer")
        need(self.n_a > 0 and self.n_b > 0, "node counts must be positive")
        need(self.k >= 1, "k must be at least 1")
        need(self.k < min(self.n_a, self.n_b), "k must be below both node counts")
        need(self.period >= 2, "period must be at least 2")
        need(self.t_train >= self.period, "t_train must cover at least one cycle")
        if self.dataset == "synthetic":
            need(self.t_train % self.period == 0,
                 "t_train must be divisible by period for synthetic data")
        need(self.t_test >= 1, "t_test must be positive")
        need(isinstance(self.sigma_w, list) and len(self.sigma_w) > 0,
             "sigma_w must be a nonempty list")
        sw = [float(v) for v in self.sigma_w]
        need(all(v >= 0 for v in sw), "sigma_w entries must be nonnegative")
        object.__setattr__(self, "sigma_w", sw)
        need(float(self.sigma_v) >= 0, "sigma_v must be nonnegative")
        object.__setattr__(self, "sigma_v", float(self.sigma_v))
        need(float(self.delta) > 0, "delta must be strictly positive")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "eta", float(self.eta))
        need(float(self.zeta) >= 0, "zeta must be nonnegative")
        object.__setattr__(self, "zeta", float(self.zeta))
        need(0 <= self.d_a < self.n_a, "d_a must satisfy 0 <= d_a < n_a")
        need(0 <= self.d_b < self.n_b, "d_b must satisfy 0 <= d_b < n_b")
        need(isinstance(self.seeds, list) and len(self.seeds) > 0,
             "seeds must be a nonempty list")
        need(all(isinstance(s, int) and not isinstance(s, bool) and s >= 0
                 for s in self.seeds), "seeds must be nonnegative integers")
        need(len(set(self.seeds)) == len(self.seeds), "seeds must be distinct")
        need(self.transport_mode in ("sqrt", "linear"),
             f"unknown transport_mode {self.transport_mode!r}")
        ko = self.kernel_orders
        need(isinstance(ko, (tuple, list)) and len(ko) == 2
             and all(isinstance(o, int) and not isinstance(o, bool) and o >= 0 for o in ko),
             "kernel_orders must be a pair of nonnegative integers")
        object.__setattr__(self, "kernel_orders", (int(ko[0]), int(ko[1])))
        need(self.dataset in ("synthetic", "csv"),
             f"dataset must be 'synthetic' or 'csv', got {self.dataset!r}")
        need(isinstance(self.resample_masks, bool), "resample_masks must be a boolean")

    def to_dict(self):
        """Plain-type dict in field order, suitable for JSON and hashing."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def digest(self):
        """Stable short hash of the configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        if "kernel_orders" in d and isinstance(d["kernel_orders"], list):
            d["kernel_orders"] = tuple(d["kernel_orders"])
        return ExperimentConfig(**d)


def load_config(path):
    """Load an :class:`ExperimentConfig` from a TOML file.

    Raises
    ------
    ConfigError
        On unreadable files, TOML syntax errors, unknown keys, or any
        field failing validation.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "kernel_orders" in raw and isinstance(raw["kernel_orders"], list):
        raw["kernel_orders"] = tuple(raw["kernel_orders"])
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad config value types: {exc}") from exc
