"""Burst-mode receiver stages."""

from .chanest import ChanEstimate, mmse_estimate, mmse_uniqueness_check, zf_estimate
from .detect import Detection, detect_frame
from .foe import fine_foe
from .loop import LoopConfig
from .pipeline import FrameSpec, RxOptions, RxReport, receive_burst, run_pipeline
from .sop import SopEstimate, estimate_sop, recover_sop
from .spo import estimate_spo
from .sync import SyncResult, frame_sync
from .timing import godard_ted, timing_recover

__all__ = [
    "ChanEstimate",
    "Detection",
    "FrameSpec",
    "LoopConfig",
    "RxOptions",
    "RxReport",
    "SopEstimate",
    "SyncResult",
    "detect_frame",
    "estimate_sop",
    "estimate_spo",
    "fine_foe",
    "frame_sync",
    "godard_ted",
    "mmse_estimate",
    "mmse_uniqueness_check",
    "receive_burst",
    "recover_sop",
    "run_pipeline",
    "timing_recover",
    "zf_estimate",
]
