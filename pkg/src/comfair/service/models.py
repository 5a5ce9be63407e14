"""Pydantic request/response models for the pipeline service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class SynthSection(BaseModel):
    block_sizes: list[int]
    p_in: float = Field(ge=0.0, le=1.0)
    p_out: float = Field(ge=0.0, le=1.0)
    sens_alignment: float = Field(default=1.0, ge=0.5, le=1.0)
    label_homophily: float | list[float] = 0.5
    feature_dim: int = Field(default=8, ge=1)
    feature_signal: float = Field(default=1.0, ge=0.0)
    label_balance: float = Field(default=0.5, ge=0.0, le=1.0)


class SplitSection(BaseModel):
    fractions: tuple[float, float, float] = (0.5, 0.25, 0.25)
    stratify: bool = True


class EmbedSection(BaseModel):
    walks_per_node: int = Field(default=10, ge=1)
    walk_length: int = Field(default=40, ge=1)
    p: float = Field(default=1.0, gt=0.0)
    q: float = Field(default=1.0, gt=0.0)
    dim: int = Field(default=64, ge=1)
    window: int = Field(default=5, ge=1)
    negatives: int = Field(default=5, ge=1)
    epochs: int = Field(default=5, ge=1)
    lr: float = Field(default=0.025, gt=0.0)


class ClusterSection(BaseModel):
    k: int = Field(default=5, ge=1)
    max_iter: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-6, ge=0.0)


class CoresetSection(BaseModel):
    k_total: int = Field(default=30, ge=1)
    strategy: str = "extremal"
    per_community: Optional[int] = None


class TrainSection(BaseModel):
    epochs: int = Field(default=400, ge=1)
    lr: float = Field(default=0.01, gt=0.0)
    lam: float = Field(default=1.0, ge=0.0, alias="lambda")
    weight_decay: float = Field(default=5e-4, ge=0.0)
    d1: int = Field(default=64, ge=1)
    d2: int = Field(default=64, ge=1)

    model_config = {"populate_by_name": True}


class AuditSection(BaseModel):
    margin: float = 0.0
    predictions: Optional[str] = None
    model: Optional[str] = None


class SweepSection(BaseModel):
    k_total: list[int] = [10, 20, 30, 50]
    lam: list[float] = Field(default=[1.0], alias="lambda")

    model_config = {"populate_by_name": True}


class PipelineConfig(BaseModel):
    """Full pipeline configuration; sections are optional and defaulted."""

    seed: int = 0
    out: str = "."
    graph: Optional[str] = None
    synth: Optional[SynthSection] = None
    split: SplitSection = SplitSection()
    embed: EmbedSection = EmbedSection()
    cluster: ClusterSection = ClusterSection()
    coreset: CoresetSection = CoresetSection()
    train: TrainSection = TrainSection()
    audit: AuditSection = AuditSection()
    sweep: SweepSection = SweepSection()

    def to_stage_dict(self) -> dict:
        """Plain dict in the shape the pipeline runners consume."""
        d = self.model_dump(by_alias=True, exclude_none=True)
        return d


class StageRequest(BaseModel):
    config: PipelineConfig


class StageSummary(BaseModel):
    stage: str
    artifacts: dict[str, str]
    scalars: dict


class ErrorBody(BaseModel):
    type: str
    message: str
