"""Simulation configuration: defaults, JSON loading, validation, hashing."""

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    """Raised on unparseable files or invariant-violating field values."""


@dataclass
class SimConfig:
    # network geometry
    L: int = 64                 # access points
    K: int = 40                 # user terminals
    N: int = 2                  # antennas per AP (half-wavelength ULA)
    area_side: float = 1000.0   # m, square deployment region

    # frame structure
    tau: int = 10               # pilot symbols per coherence block
    tau_c: int = 200            # coherence block length in symbols

    # radio parameters
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 5.0
    sigma2_dbm: float | None = None  # derived from bandwidth + noise figure unless set
    p_max_mw: float = 100.0          # per-UE transmit power budget

    # converter resolutions; None means ideal (zero distortion)
    b_da: int | None = 4
    b_ad: int | None = 4

    # channel statistics
    asd_deg: float = 15.0       # angular standard deviation of local scattering
    fading: str = "rician"      # "rician" or "rayleigh"

    # scheduler (cluster formation / pilot assignment / power control)
    eta_db: float = -20.0       # secondary-AP admission threshold
    nu: float = 0.8             # fractional power-control exponent in [0, 1]
    d_bar: float | None = None  # candidate-AP radius; None = area diagonal
    iterations: int = 2         # refinement passes of the joint algorithm

    # evaluation
    scheme: str = "distributed"   # "distributed" or "centralized"
    detector: str = "mrc"         # mrc | lmmse | lpmmse | lpmmse-full | mmse | pmmse | pmmse-full
    weighting: str = "lsfd"       # lsfd | plsfd | l2 (distributed second stage)
    trials: int = 1000            # Monte Carlo realizations
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("L", "K", "N", "tau", "tau_c", "trials", "iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.area_side <= 0:
            raise ConfigError("area_side must be positive")
        if not self.tau < self.tau_c:
            raise ConfigError(f"tau ({self.tau}) must be < tau_c ({self.tau_c})")
        if self.p_max_mw <= 0:
            raise ConfigError("p_max_mw must be positive")
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigError(f"nu must lie in [0, 1], got {self.nu}")
        for name in ("b_da", "b_ad"):
            b = getattr(self, name)
            if b is not None and b < 1:
                raise ConfigError(f"{name} must be >= 1 or null (ideal), got {b}")
        if self.fading not in ("rician", "rayleigh"):
            raise ConfigError(f"fading must be rician|rayleigh, got {self.fading!r}")
        if self.scheme not in ("distributed", "centralized"):
            raise ConfigError(f"scheme must be distributed|centralized, got {self.scheme!r}")
        if self.sigma2_dbm is not None and not math.isfinite(self.sigma2_dbm):
            raise ConfigError("sigma2_dbm must be finite")

    @property
    def sigma2_mw(self):
        """Noise power in mW: -174 dBm/Hz + 10 log10(B) + noise figure unless overridden."""
        dbm = self.sigma2_dbm
        if dbm is None:
            dbm = -174.0 + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db
        return 10.0 ** (dbm / 10.0)

    @property
    def asd_rad(self):
        return math.radians(self.asd_deg)

    @property
    def prelog(self):
        return 1.0 - self.tau / self.tau_c

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)

    def to_dict(self):
        return dataclasses.asdict(self)


def load_config(path):
    """Read a JSON config; empty file gives full defaults, unknown keys error."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    return SimConfig(**data)


def config_hash(cfg):
    """Short stable digest of the full configuration, for result provenance."""
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
