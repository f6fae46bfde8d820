from pydantic import BaseModel, ConfigDict, Field


class LoopConfig(BaseModel):
    """Feedback-loop timing model: updates land a fixed number of beats late."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beat_symbols: int = Field(100, gt=0)
    tr_delay_beats: int = Field(20, ge=0)
    eq_delay_beats: int = Field(60, ge=0)
    tr_kp: float = Field(2e-2, gt=0)
    tr_ki: float = Field(1e-5, gt=0)
    ddlms_mu: float = Field(2e-4, gt=0)
    tr_enabled: bool = True
    eq_enabled: bool = True
