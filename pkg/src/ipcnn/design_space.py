"""Closed-form scale, speed, and power/energy models.

The splitting scale is set by how many detector branches the capped
waveguide power can feed at the target SNR after insertion loss; speed
follows from the achievable scale and the modulation rate (longer delay
lines at lower rates add loss and eat into the scale); the power budget
books lasers, E/O modulation, weighting elements, TIAs, and ADCs per
architecture.  Everything here is a pure function over an immutable
config.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleDesignError, InvalidSpecError
from .optics import DEFAULT_GROUP_VELOCITY

ARCHITECTURES = ("IPCNN", "DEAP", "BW", "Coherent")

# Comparison architectures carry no delay lines; their end-to-end insertion
# loss is taken 4 dB below the delay-buffered chain.
COMPARATIVE_LOSS_ADVANTAGE_DB = 4.0

# Tolerance for "exact integer" scale counts: a branch count that misses an
# integer by float noise only still counts as feasible.
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class HardwareConfig:
    """Physical parameter set; defaults are the evaluated operating point."""

    c_in: int = 64
    c_out: int = 32
    q: int = 9
    f_m: float = 5e9                      # Hz
    neop: float = 6.3e-6                  # W, aggregate at the detector
    snr_target: float = 10.0              # linear power ratio
    power_cap: float = 0.1                # W (20 dBm) at the shared waveguide
    loss_wdm_to_pd_db: float = 6.4        # splitting network + MRRs + drops
    loss_modulator_db: float = 4.0
    loss_input_port_db: float = 2.0
    loss_wdm_stage_db: float = 1.0        # reconstructed combiner-stage loss
    loss_delay_per_meter_db: float = 0.5  # dB/m of delay-line waveguide
    group_velocity: float = DEFAULT_GROUP_VELOCITY
    p_mrr: float = 19.5e-3                # W per thermally tuned MRR
    p_tia: float = 2.2e-3                 # W per TIA
    p_mod: float = 90e-3                  # W per high-speed E/O modulator
    e_adc: float = 1e-12                  # J per ADC sample
    wall_plug_efficiency: float = 0.05

    def __post_init__(self):
        if min(self.c_in, self.c_out, self.q) < 1:
            raise InvalidSpecError("channel/tap counts must be >= 1")
        if self.f_m <= 0 or self.neop <= 0 or self.power_cap <= 0:
            raise InvalidSpecError("f_m, neop and power_cap must be positive")
        if self.snr_target < 1:
            raise InvalidSpecError(f"snr_target must be >= 1, got {self.snr_target}")
        if not 0 < self.wall_plug_efficiency <= 1:
            raise InvalidSpecError("wall-plug efficiency must be in (0, 1]")
        for name in ("loss_wdm_to_pd_db", "loss_modulator_db",
                     "loss_input_port_db", "loss_wdm_stage_db",
                     "loss_delay_per_meter_db"):
            if getattr(self, name) < 0:
                raise InvalidSpecError(f"{name} must be >= 0")
        if min(self.p_mrr, self.p_tia, self.p_mod, self.e_adc) < 0:
            raise InvalidSpecError("per-device powers must be >= 0")

    @property
    def total_insertion_loss_db(self) -> float:
        """Laser-to-photodetector chain, excluding delay-line loss."""
        return (self.loss_input_port_db + self.loss_modulator_db
                + self.loss_wdm_stage_db + self.loss_wdm_to_pd_db)

    @property
    def mac_rate(self) -> float:
        """Nominal MAC/s at full scale."""
        return self.c_in * self.c_out * self.q * self.f_m


@dataclass(frozen=True)
class ScaleResult:
    scale: int
    feasible: bool
    limiting_factor: str   # "power_cap" | "loss" | "neop" | "none"


def max_scale(
    power_cap: float,
    insertion_loss_db: float,
    neop: float,
    snr_target: float,
    requested: int | None = None,
) -> ScaleResult:
    """Detector branches supportable at the SNR target.

    Each branch needs snr_target * neop of optical power, delivered from
    the capped waveguide through the insertion loss.
    """
    if power_cap <= 0 or neop <= 0 or snr_target <= 0:
        raise InvalidSpecError("power_cap, neop and snr_target must be positive")
    if insertion_loss_db < 0:
        raise InvalidSpecError("insertion loss must be >= 0 dB")
    per_branch = snr_target * neop
    delivered = power_cap * 10 ** (-insertion_loss_db / 10)
    scale = int(np.floor(delivered / per_branch + _FLOOR_EPS))
    feasible = requested is None or scale >= requested
    if feasible:
        limiting = "none"
    else:
        # if removing the loss would make the point feasible, loss is the
        # binding constraint; otherwise the cap/NEOP ratio itself is short
        lossless = int(np.floor(power_cap / per_branch + _FLOOR_EPS))
        if lossless >= (requested or 0):
            limiting = "loss"
        elif neop * snr_target > power_cap:
            limiting = "neop"
        else:
            limiting = "power_cap"
    return ScaleResult(scale=scale, feasible=feasible, limiting_factor=limiting)


@dataclass(frozen=True)
class SpeedResult:
    macs_per_second: float
    lossless_macs_per_second: float
    scale: int
    effective_c_out: int
    delay_loss_db: float


def delay_line_loss_db(config: HardwareConfig, image_width: int,
                       sigma: int) -> float:
    """Loss of the longest delay line: D_max cycles at f_m, in meters."""
    d_max = (sigma - 1) * (image_width + 1)
    length = d_max * config.group_velocity / config.f_m
    return config.loss_delay_per_meter_db * length


def speed(config: HardwareConfig, image_width: int, sigma: int) -> SpeedResult:
    """Achievable MAC/s once delay-line loss is folded into the scale limit."""
    if sigma * sigma != config.q:
        raise InvalidSpecError(
            f"sigma {sigma} inconsistent with q = {config.q}"
        )
    delay_loss = delay_line_loss_db(config, image_width, sigma)
    base = config.loss_wdm_to_pd_db

    def rate(total_loss_db: float) -> tuple[float, ScaleResult]:
        result = max_scale(config.power_cap, total_loss_db, config.neop,
                           config.snr_target)
        c_out_eff = min(config.c_out, result.scale // config.q)
        if c_out_eff < 1:
            raise InfeasibleDesignError(
                f"scale {result.scale} cannot support a single output "
                f"channel of q = {config.q}"
            )
        return config.c_in * c_out_eff * config.q * config.f_m, result

    macs, scale_result = rate(base + delay_loss)
    lossless, _ = rate(base)
    return SpeedResult(
        macs_per_second=macs,
        lossless_macs_per_second=lossless,
        scale=scale_result.scale,
        effective_c_out=int(macs / (config.c_in * config.q * config.f_m)),
        delay_loss_db=delay_loss,
    )


@dataclass(frozen=True)
class PowerBudget:
    architecture: str
    lasers: float
    eo_modulation: float
    weighting: float
    tia: float
    adc: float

    @property
    def total(self) -> float:
        return self.lasers + self.eo_modulation + self.weighting + self.tia + self.adc

    @property
    def total_without_weighting(self) -> float:
        return self.total - self.weighting

    def ratios(self) -> dict[str, float]:
        t = self.total
        return {
            "lasers": self.lasers / t,
            "eo_modulation": self.eo_modulation / t,
            "weighting": self.weighting / t,
            "tia": self.tia / t,
            "adc": self.adc / t,
        }

    def ratios_without_weighting(self) -> dict[str, float]:
        t = self.total_without_weighting
        return {
            "lasers": self.lasers / t,
            "eo_modulation": self.eo_modulation / t,
            "tia": self.tia / t,
            "adc": self.adc / t,
        }


def _laser_power(config: HardwareConfig, branches: int,
                 chain_loss_db: float) -> float:
    """Wall-plug laser power to give every branch snr*neop after the chain."""
    optical = (branches * config.snr_target * config.neop
               * 10 ** (chain_loss_db / 10))
    return optical / config.wall_plug_efficiency


def energy_budget_ipcnn(config: HardwareConfig) -> PowerBudget:
    return PowerBudget(
        architecture="IPCNN",
        lasers=_laser_power(config, config.c_out * config.q,
                            config.total_insertion_loss_db),
        eo_modulation=config.c_in * config.p_mod,
        weighting=config.c_in * config.c_out * config.q * config.p_mrr,
        tia=config.c_out * config.q * config.p_tia,
        adc=config.c_out * config.f_m * config.e_adc,
    )


def energy_budget_comparative(architecture: str,
                              config: HardwareConfig) -> PowerBudget:
    """Budgets for the delay-line-free comparison architectures.

    Device counts: DEAP drives C_I*Q MRR-type input modulators and C_I*Q
    weighting MRRs with Q detector branches; BW drives C_I MZMs and
    C_I*C_O weighting MRRs with C_O branches; Coherent drives C_I*Q MZMs
    and C_I*C_O*Q phase shifters with C_O*Q branches.
    """
    chain = config.total_insertion_loss_db - COMPARATIVE_LOSS_ADVANTAGE_DB
    if chain < 0:
        raise InvalidSpecError(
            "comparative chain loss went negative; lower the 4 dB advantage"
        )
    if architecture == "IPCNN":
        return energy_budget_ipcnn(config)
    if architecture == "DEAP":
        return PowerBudget(
            architecture="DEAP",
            lasers=_laser_power(config, config.q, chain),
            eo_modulation=config.c_in * config.q * config.p_mrr,
            weighting=config.c_in * config.q * config.p_mrr,
            tia=config.q * config.p_tia,
            adc=1 * config.f_m * config.e_adc,
        )
    if architecture == "BW":
        return PowerBudget(
            architecture="BW",
            lasers=_laser_power(config, config.c_out, chain),
            eo_modulation=config.c_in * config.p_mod,
            weighting=config.c_in * config.c_out * config.p_mrr,
            tia=config.c_out * config.p_tia,
            adc=config.c_out * config.f_m * config.e_adc,
        )
    if architecture == "Coherent":
        return PowerBudget(
            architecture="Coherent",
            lasers=_laser_power(config, config.c_out * config.q, chain),
            eo_modulation=config.c_in * config.q * config.p_mod,
            weighting=config.c_in * config.c_out * config.q * config.p_mrr,
            tia=config.c_out * config.p_tia,
            adc=config.c_out * config.f_m * config.e_adc,
        )
    raise InvalidSpecError(
        f"unknown architecture {architecture!r}; expected one of {ARCHITECTURES}"
    )


def architecture_mac_rate(architecture: str, config: HardwareConfig) -> float:
    """MACs per second each architecture completes at the same f_m.

    IPCNN and the coherent mesh finish all C_I*C_O*Q products every cycle;
    DEAP evaluates one output channel (C_I*Q) per cycle; broadcast-and-
    weight evaluates one kernel tap position (C_I*C_O) per cycle.
    """
    if architecture in ("IPCNN", "Coherent"):
        return config.c_in * config.c_out * config.q * config.f_m
    if architecture == "DEAP":
        return config.c_in * config.q * config.f_m
    if architecture == "BW":
        return config.c_in * config.c_out * config.f_m
    raise InvalidSpecError(
        f"unknown architecture {architecture!r}; expected one of {ARCHITECTURES}"
    )


def efficiency(budget: PowerBudget, macs_per_second: float,
               weighting: str = "thermal") -> float:
    """Energy per MAC in pJ; capacitive weighting holds state at ~zero power."""
    if macs_per_second <= 0:
        raise InvalidSpecError("speed must be positive")
    if weighting == "thermal":
        total = budget.total
    elif weighting == "capacitive":
        total = budget.total_without_weighting
    else:
        raise InvalidSpecError(
            f"weighting mode {weighting!r} not in ('thermal', 'capacitive')"
        )
    return total / macs_per_second * 1e12


def scale_grid(
    neop_values: list[float],
    loss_values_db: list[float],
    power_cap: float,
    snr_target: float,
    requested: int | None = None,
) -> list[dict]:
    """Max-scale over a (NEOP, loss) grid; infeasible cells are flagged."""
    rows = []
    for neop in neop_values:
        for loss in loss_values_db:
            result = max_scale(power_cap, loss, neop, snr_target,
                               requested=requested)
            rows.append({
                "neop_w": neop,
                "insertion_loss_db": loss,
                "scale": result.scale,
                "feasible": result.feasible,
                "limiting_factor": result.limiting_factor,
            })
    return rows


def speed_curve(
    config: HardwareConfig,
    f_m_values: list[float],
    loss_per_meter_levels: list[float],
    image_width: int,
    sigma: int,
) -> list[dict]:
    """Speed vs modulation rate per delay-line loss level."""
    rows = []
    for loss_pm in loss_per_meter_levels:
        for f_m in f_m_values:
            cfg = replace(config, f_m=f_m, loss_delay_per_meter_db=loss_pm)
            try:
                result = speed(cfg, image_width, sigma)
                rows.append({
                    "loss_per_meter_db": loss_pm,
                    "f_m_hz": f_m,
                    "macs_per_second": result.macs_per_second,
                    "lossless_macs_per_second": result.lossless_macs_per_second,
                    "feasible": True,
                })
            except InfeasibleDesignError:
                rows.append({
                    "loss_per_meter_db": loss_pm,
                    "f_m_hz": f_m,
                    "macs_per_second": 0.0,
                    "lossless_macs_per_second": 0.0,
                    "feasible": False,
                })
    return rows
