"""Experiment configuration: one JSON document describes a whole run."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .bmdsp.loop import LoopConfig
from .bmdsp.pipeline import FrameSpec, RxOptions
from .channel import ChannelConfig, UplinkScene, assemble_uplink
from .errors import ConfigurationError
from .metrics import FEC_LIMIT
from .preambles import FrameLayout, build_frame, build_preamble_b, random_payload, shape_frame
from .sigcore import DspParams

SWEEP_VARIABLES = ("snr_db", "delta_f", "tau", "lb")


class LayoutConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_pre_a: int = Field(128, gt=0)
    lb: int = Field(64, ge=8)
    pilot_block: int = Field(32, ge=2)
    n_payload: int = Field(32400, gt=0)

    @field_validator("n_pre_a", "lb")
    @classmethod
    def _multiple_of_four(cls, v: int) -> int:
        if v % 4:
            raise ValueError("must be a multiple of 4")
        return v

    def layout(self) -> FrameLayout:
        return FrameLayout(self.n_pre_a, self.lb, self.pilot_block, self.n_payload)


class ExperimentConfig(BaseModel):
    """A transmit-impair-receive experiment.

    ``sweep`` maps exactly one of ``snr_db``, ``delta_f``, ``tau`` or ``lb``
    to the list of values to visit; it is only read by the sweep command.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "default"
    seed: int = Field(1, ge=0)
    n_seeds: int = Field(20, ge=1)
    ber_threshold: float = Field(FEC_LIMIT, gt=0, le=1)
    params: DspParams = DspParams()
    layout: LayoutConfig = LayoutConfig()
    bursts: list[ChannelConfig] = Field(default_factory=lambda: [ChannelConfig(snr_db=18.0)], min_length=1)
    loop: LoopConfig = LoopConfig()
    rx: RxOptions = RxOptions()
    sweep: dict[str, list[float]] | None = None
    workers: int | None = Field(None, ge=1)

    @field_validator("sweep")
    @classmethod
    def _one_variable(cls, v):
        if v is None:
            return v
        if len(v) != 1:
            raise ValueError(f"exactly one ranged variable is allowed, got {sorted(v)}")
        name, values = next(iter(v.items()))
        if name not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {name!r}; choose from {SWEEP_VARIABLES}")
        if not values:
            raise ValueError("sweep range is empty")
        return v

    @property
    def sweep_variable(self) -> tuple[str, list[float]]:
        if self.sweep is None:
            raise ConfigurationError("configuration has no sweep section")
        return next(iter(self.sweep.items()))

    def frame_spec(self) -> FrameSpec:
        lay = self.layout.layout()
        return FrameSpec(layout=lay, pre_b=build_preamble_b(lb=lay.lb))

    def with_loop_delay(self, on: bool) -> "ExperimentConfig":
        if on:
            return self
        return self.model_copy(update={"loop": self.loop.model_copy(update={"tr_delay_beats": 0, "eq_delay_beats": 0})})


def load_config(source) -> ExperimentConfig:
    """Parse a config from a path, a JSON string or a dict; errors become ConfigurationError."""
    try:
        if isinstance(source, dict):
            data = source
        elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        else:
            data = json.loads(source)
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read configuration: {exc}") from exc


def bundled_config(name: str) -> ExperimentConfig:
    """Load one of the configs shipped in ``cobmdsp/configs``."""
    fname = name if name.endswith(".json") else f"{name}.json"
    path = resources.files("cobmdsp") / "configs" / fname
    if not path.is_file():
        raise ConfigurationError(f"no bundled config named {name!r}")
    return load_config(path.read_text(encoding="utf-8"))


def dump_config(cfg: ExperimentConfig) -> str:
    # json (not pydantic) so that an infinite SNR is written as Infinity and reads back
    return json.dumps(cfg.model_dump(mode="python"), indent=2)


def build_scene(cfg: ExperimentConfig, seed: int | None = None, n_bursts: int | None = None):
    """Transmit random payloads through the configured channels.

    Returns the scene, the per-burst payload bits and the receiver's frame knowledge.
    """
    seed = cfg.seed if seed is None else seed
    frame = cfg.frame_spec()
    rng = np.random.default_rng(seed)
    channels = cfg.bursts[:n_bursts] if n_bursts else cfg.bursts
    bits, bursts = [], []
    for _ in channels:
        b = random_payload(frame.layout, rng)
        fr = build_frame(b, pre_b=frame.pre_b, pilots=frame.pilots, layout=frame.layout)
        bits.append(b)
        bursts.append(shape_frame(fr, cfg.params))
    scene: UplinkScene = assemble_uplink(bursts, list(channels), rs=cfg.params.rs, seed=seed)
    return scene, bits, frame
