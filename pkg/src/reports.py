"""
Run Reports
===========

Pydantic models for everything the laboratory writes as JSON (solve
summaries, Cauchy tables, probe verdicts, run manifests) plus the CSV
writer shared by every subcommand.

CSV floats are written with 17 significant digits so a rerun with the same
config and seed reproduces the files byte for byte.
"""

import csv
import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, Field


class SolveSummary(BaseModel):
    """JSON face of a SolveReport."""
    operator: str
    grid: Dict[str, int]
    residual_sup: float
    newton_iters: List[int] = Field(default_factory=list)
    t_path: List[float] = Field(default_factory=list)
    admissibility_margin: float
    continuation_steps: int = 0
    wall_ms: float = 0.0
    epsilon: Optional[float] = None
    sandwich: Optional[Dict[str, Any]] = None


class CauchyRow(BaseModel):
    eps: float
    sup_diff_to_prev: Optional[float] = None
    admissibility_margin: float
    residual_sup: float
    sup_dev_reference: Optional[float] = None


class CauchyTable(BaseModel):
    """Successive sup-norm differences of the ε-solutions."""
    rows: List[CauchyRow] = Field(default_factory=list)

    @property
    def diffs(self) -> List[float]:
        return [row.sup_diff_to_prev for row in self.rows if row.sup_diff_to_prev is not None]

    @property
    def monotone(self) -> bool:
        """Strictly shrinking successive differences."""
        diffs = self.diffs
        return all(later < earlier for earlier, later in zip(diffs, diffs[1:]))


class LadderRow(BaseModel):
    resolution: int
    ratio_boundary: float
    ratio_global: float
    margin_min: float
    residual_sup: float


class ProbeVerdict(BaseModel):
    """Plateau verdict of one problem family across a grid ladder."""
    family: str
    ladder: List[int]
    rows: List[LadderRow] = Field(default_factory=list)
    bounded_boundary: bool
    bounded_global: bool

    @property
    def bounded(self) -> bool:
        return self.bounded_boundary and self.bounded_global


class ConvergenceRow(BaseModel):
    resolution: int
    mesh_width: float
    error: float
    order: Optional[float] = None
    residual_sup: float


class ConvergenceStudy(BaseModel):
    """sup|u_h − u*| against a continuous solution across a grid ladder."""
    family: str
    ladder: List[int]
    rows: List[ConvergenceRow] = Field(default_factory=list)

    @property
    def orders(self) -> List[float]:
        return [row.order for row in self.rows if row.order is not None]

    @property
    def min_order(self) -> Optional[float]:
        return min(self.orders) if self.orders else None


class GuanProbeResult(BaseModel):
    operator: str
    beta: float
    samples: int
    qualifying: int
    epsilon_hat: Optional[float] = None
    inconclusive: bool = False


class SubsolutionSummary(BaseModel):
    operator: str
    grid: Dict[str, int]
    t_star: float
    margin: float
    normal_derivative_max: float
    strips: List[Dict[str, Any]] = Field(default_factory=list)


class ComparisonSummary(BaseModel):
    """sup_M|u¹ − u²| against sup_∂M|φ¹ − φ²|."""
    first: str
    second: str
    sup_diff: float
    sup_boundary_diff: float
    tolerance: float

    @property
    def excess(self) -> float:
        return self.sup_diff - self.sup_boundary_diff

    @property
    def ok(self) -> bool:
        return self.excess <= self.tolerance


class RunManifest(BaseModel):
    """Enough to rerun a subcommand: config hash, seed, tolerances, versions."""
    subcommand: str
    config_hash: str
    seed: int
    versions: Dict[str, str] = Field(default_factory=dict)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    exit_code: int = 0
    error: Optional[str] = None
    wall_ms: float = 0.0
    started_at: str = Field(default_factory=lambda: datetime.now().isoformat())


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "nan" if math.isnan(value) else "%.17g" % value
    return str(value)


def write_rows_csv(path: Union[str, Path], rows: Sequence[Dict[str, Any]],
                   columns: Optional[Sequence[str]] = None) -> Path:
    """Write dict rows as CSV with a header; floats at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row.get(column)) for column in columns])
    return path


def write_model_json(path: Union[str, Path], model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2))
    return path


def dumps_sorted(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True)
