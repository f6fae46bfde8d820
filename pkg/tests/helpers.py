"""Scene builders shared by the stage tests and the acceptance suite."""

import numpy as np

from cobmdsp.bmdsp.detect import detect_frame
from cobmdsp.bmdsp.pipeline import acquire
from cobmdsp.channel import ChannelConfig
from cobmdsp.config import ExperimentConfig, build_scene

SHORT = {"n_payload": 3100}  # 100 pilot blocks: enough for every preamble-driven stage


def short_config(layout=None, rx=None, loop=None, **channel) -> ExperimentConfig:
    kw = {"layout": {**SHORT, **(layout or {})}, "bursts": [ChannelConfig(**channel)]}
    if rx:
        kw["rx"] = rx
    if loop:
        kw["loop"] = loop
    return ExperimentConfig(**kw)


def front_end(cfg: ExperimentConfig, seed: int):
    scene, bits, frame = build_scene(cfg, seed)
    det = detect_frame(scene.stream, cfg.params)
    return scene, det, acquire(scene.stream, det, cfg.params, frame.layout, cfg.rx), frame


def wrap_symbols(x):
    return (np.asarray(x) + 0.5) % 1.0 - 0.5
