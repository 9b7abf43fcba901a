"""
Run Configuration
=================

Plain-text configuration shared by every CLI subcommand:

    # comments start with '#'
    [operator]
    family = sigma_k_root
    n = 2
    k = 2

    [grid]
    p = 1
    s_res = 16

    [chi]
    matrix = 1 0; 0 1

    [psi]
    expr = 1 + 0.1*cos(2*pi*x1)

Each section is a pydantic model with ``extra="forbid"``; the parser keeps
the line number of every key so validation failures point at the offending
line. ``to_text`` writes every field back with ``repr`` floats, so
parse -> serialize -> parse is the identity.
"""

import hashlib
import json
import logging
import re
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, model_validator

from .dirichlet import DirichletProblem, SolverSettings
from .errors import ConfigError, DomainError, LabError
from .expressions import compile_expression
from .prodgrid import BoundaryField, HermitianField, ProductGrid, ScalarField, build_grid
from .symcone import OperatorFamily, OperatorSpec

logger = logging.getLogger(__name__)

SECTION_HEADER = re.compile(r"^\[([A-Za-z_]+)\]$")
KEY_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


FloatList = Annotated[List[float], BeforeValidator(_split_list)]
IntList = Annotated[List[int], BeforeValidator(_split_list)]


# ============================================================================
# SECTIONS
# ============================================================================

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OperatorSection(_Section):
    family: OperatorFamily
    n: int
    k: Optional[int] = None
    l: Optional[int] = None

    @model_validator(mode="after")
    def _check_operator(self) -> "OperatorSection":
        # DomainError is a ValueError, so pydantic reports it as a validation error
        self.spec()
        return self

    def spec(self) -> OperatorSpec:
        return OperatorSpec(self.family, self.n, self.k, self.l)


class GridSection(_Section):
    p: int = 1
    torus_res: int = 8
    s_res: int = 8
    theta_res: int = 8


class MatrixSection(_Section):
    """Constant Hermitian matrix; rows separated by ';', entries by spaces (``1+2j`` allowed)."""
    matrix: Optional[str] = None


class ExpressionSection(_Section):
    expr: str = "0"


class BoundarySection(_Section):
    """φ either as one expression or as separate expressions for s=0 and s=1."""
    expr: Optional[str] = None
    lower: Optional[str] = None
    upper: Optional[str] = None

    @model_validator(mode="after")
    def _check_form(self) -> "BoundarySection":
        if self.expr is not None and (self.lower is not None or self.upper is not None):
            raise ValueError("give either expr or lower/upper, not both")
        return self


class SolverSection(_Section):
    tol_newton: float = 1e-9
    max_newton_iters: int = 200
    armijo_c: float = 1e-4
    min_step: float = 2.0 ** -30
    path_initial_step: float = 0.25
    path_grow: float = 1.5
    path_min_step: float = 1e-4
    subsolution_t_max: float = 2.0 ** 20
    margin_target: float = 0.1
    eps_schedule: FloatList = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])


class RunSection(_Section):
    seed: int = 0
    samples: int = 10000


class ArrowSection(_Section):
    n_min: int = 2
    n_max: int = 8
    instances: int = 100000
    epsilons: FloatList = Field(default_factory=lambda: [0.1, 0.5, 1.0, 3.0])
    corner_factors: FloatList = Field(default_factory=lambda: [1.0, 10.0])
    closed_form_instances: int = 10000
    deflation_instances: int = 1000

    @model_validator(mode="after")
    def _check_factors(self) -> "ArrowSection":
        if any(f < 1.0 for f in self.corner_factors):
            raise ValueError(f"corner factors must be >= 1, got {self.corner_factors}")
        return self


class ProbeSection(_Section):
    family: str = "manufactured"
    ladder: IntList = Field(default_factory=lambda: [16, 32, 64])
    refine_all: bool = False
    amplitude: float = 0.1
    geodesic_c: float = 1.0
    betas: FloatList = Field(default_factory=lambda: [0.1, 0.5])

    @model_validator(mode="after")
    def _check_family(self) -> "ProbeSection":
        if self.family not in ("manufactured", "geodesic"):
            raise ValueError(f"probe family must be manufactured or geodesic, got {self.family!r}")
        return self


SECTIONS: Dict[str, type] = {
    "operator": OperatorSection,
    "grid": GridSection,
    "chi": MatrixSection,
    "omega": MatrixSection,
    "psi": ExpressionSection,
    "phi": BoundarySection,
    "solver": SolverSection,
    "run": RunSection,
    "arrow": ArrowSection,
    "probe": ProbeSection,
}


# ============================================================================
# PARSING
# ============================================================================

class _ParsedText:
    """Raw section dictionaries plus where each header and key sits."""

    def __init__(self):
        self.values: Dict[str, Dict[str, str]] = {}
        self.section_lines: Dict[str, int] = {}
        self.key_lines: Dict[Tuple[str, str], int] = {}

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        if key is not None and (section, key) in self.key_lines:
            return self.key_lines[(section, key)]
        return self.section_lines.get(section)


def _scan(text: str) -> _ParsedText:
    parsed = _ParsedText()
    section: Optional[str] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = SECTION_HEADER.match(line)
        if header:
            section = header.group(1)
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", number)
            if section in parsed.values:
                raise ConfigError(f"duplicate section [{section}]", number)
            parsed.values[section] = {}
            parsed.section_lines[section] = number
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not KEY_NAME.match(key) or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
        if section is None:
            raise ConfigError(f"key {key!r} appears before any [section]", number)
        if key in parsed.values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", number)
        parsed.values[section][key] = value
        parsed.key_lines[(section, key)] = number
    return parsed


def _validation_message(error: ValidationError) -> Tuple[Optional[str], str]:
    first = error.errors()[0]
    key = str(first["loc"][0]) if first["loc"] else None
    return key, first["msg"]


def parse_matrix(text: str, n: int) -> NDArray:
    """'a b; c d' -> n×n complex array, checked Hermitian."""
    rows = [row.split() for row in text.split(";")]
    try:
        matrix = np.array([[complex(entry) for entry in row] for row in rows])
    except ValueError as e:
        raise DomainError(f"bad matrix entry in {text!r}") from e
    if matrix.shape != (n, n):
        raise DomainError(f"matrix {text!r} is not {n}x{n}")
    if not np.allclose(matrix, matrix.conj().T, rtol=0.0, atol=1e-12):
        raise DomainError(f"matrix {text!r} is not Hermitian")
    return matrix


# ============================================================================
# RUN CONFIG
# ============================================================================

class RunConfig(BaseModel):
    """A complete, validated run configuration."""

    model_config = ConfigDict(extra="forbid")

    operator: OperatorSection
    grid: GridSection = Field(default_factory=GridSection)
    chi: MatrixSection = Field(default_factory=MatrixSection)
    omega: MatrixSection = Field(default_factory=MatrixSection)
    psi: ExpressionSection = Field(default_factory=ExpressionSection)
    phi: BoundarySection = Field(default_factory=BoundarySection)
    solver: SolverSection = Field(default_factory=SolverSection)
    run: RunSection = Field(default_factory=RunSection)
    arrow: ArrowSection = Field(default_factory=ArrowSection)
    probe: ProbeSection = Field(default_factory=ProbeSection)

    # ------------------------------------------------------------------
    # builders
    # ------------------------------------------------------------------

    def build_operator(self) -> OperatorSpec:
        return self.operator.spec()

    def build_grid(self) -> ProductGrid:
        return build_grid(self.grid.p, self.grid.torus_res, self.grid.s_res, self.grid.theta_res)

    def build_matrix(self, name: str) -> HermitianField:
        section: MatrixSection = getattr(self, name)
        n = self.operator.n
        if section.matrix is None:
            return HermitianField.identity(n)
        return HermitianField.constant(parse_matrix(section.matrix, n))

    def build_psi(self, grid: ProductGrid) -> ScalarField:
        return ScalarField.from_expression(grid, self.psi.expr)

    def build_phi(self, grid: ProductGrid) -> BoundaryField:
        if self.phi.lower is None and self.phi.upper is None:
            return ScalarField.from_expression(grid, self.phi.expr or "0").boundary()
        lower = ScalarField.from_expression(grid, self.phi.lower or "0").boundary()
        upper = ScalarField.from_expression(grid, self.phi.upper or "0").boundary()
        return BoundaryField(grid, np.stack([lower.lower, upper.upper]))

    def build_problem(self, grid: Optional[ProductGrid] = None) -> DirichletProblem:
        grid = self.build_grid() if grid is None else grid
        return DirichletProblem(
            op=self.build_operator(),
            grid=grid,
            chi=self.build_matrix("chi"),
            omega=self.build_matrix("omega"),
            psi=self.build_psi(grid),
            phi=self.build_phi(grid),
        )

    def solver_settings(self) -> SolverSettings:
        s = self.solver
        return SolverSettings(
            tol_newton=s.tol_newton,
            max_newton_iters=s.max_newton_iters,
            armijo_c=s.armijo_c,
            min_step=s.min_step,
            path_initial_step=s.path_initial_step,
            path_grow=s.path_grow,
            path_min_step=s.path_min_step,
            subsolution_t_max=s.subsolution_t_max,
        )

    def with_seed(self, seed: int) -> "RunConfig":
        return self.model_copy(update={"run": self.run.model_copy(update={"seed": seed})})

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)

    def to_text(self) -> str:
        blocks = []
        for name in SECTIONS:
            section = getattr(self, name)
            lines = [f"[{name}]"]
            for key, value in section.model_dump(exclude_none=True).items():
                lines.append(f"{key} = {_format_value(value)}")
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def save(self, filepath: Union[str, Path]) -> Path:
        path = Path(filepath)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text())
        return path

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        try:
            config = cls.model_validate(data)
        except ValidationError as e:
            loc = ".".join(str(part) for part in e.errors()[0]["loc"])
            raise ConfigError(f"{loc}: {e.errors()[0]['msg']}") from e
        config._check_consistency(None)
        return config

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parsed = _scan(text)
        if "operator" not in parsed.values:
            raise ConfigError("missing required section [operator]", 1 if not text.strip() else None)
        sections: Dict[str, BaseModel] = {}
        for name, raw in parsed.values.items():
            try:
                sections[name] = SECTIONS[name].model_validate(raw)
            except ValidationError as e:
                key, message = _validation_message(e)
                raise ConfigError(f"[{name}] {key + ': ' if key else ''}{message}",
                                  parsed.line_of(name, key)) from e
        config = cls(**sections)
        config._check_consistency(parsed)
        return config

    @classmethod
    def load(cls, filepath: Union[str, Path]) -> "RunConfig":
        try:
            text = Path(filepath).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {filepath}: {e}") from e
        return cls.from_text(text)

    # ------------------------------------------------------------------
    # cross-section checks
    # ------------------------------------------------------------------

    def _check_consistency(self, parsed: Optional[_ParsedText]):
        def where(section: str, key: Optional[str] = None) -> Optional[int]:
            return parsed.line_of(section, key) if parsed is not None else None

        if self.operator.n != self.grid.p + 1:
            raise ConfigError(f"operator n={self.operator.n} does not match grid p={self.grid.p} "
                              f"(n must be p + 1)", where("grid", "p") or where("operator", "n"))
        try:
            grid = self.build_grid()
        except LabError as e:
            raise ConfigError(str(e), where("grid")) from e
        for name in ("chi", "omega"):
            try:
                self.build_matrix(name)
            except LabError as e:
                raise ConfigError(str(e), where(name, "matrix")) from e
        expressions = [("psi", "expr", self.psi.expr), ("phi", "expr", self.phi.expr),
                       ("phi", "lower", self.phi.lower), ("phi", "upper", self.phi.upper)]
        for section, key, expr in expressions:
            if expr is None:
                continue
            try:
                compile_expression(expr, grid.axis_names)
            except DomainError as e:
                raise ConfigError(str(e), where(section, key)) from e
        if list(self.probe.ladder) != sorted(set(self.probe.ladder)):
            raise ConfigError("probe ladder must be strictly increasing", where("probe", "ladder"))
        schedule = list(self.solver.eps_schedule)
        if any(later >= earlier for earlier, later in zip(schedule, schedule[1:])) \
                or any(eps <= 0 for eps in schedule):
            raise ConfigError("eps_schedule must be positive and strictly decreasing",
                              where("solver", "eps_schedule"))
        logger.debug(f"CONFIG: {self.build_operator().label} on grid {grid.shape}")


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(item) for item in value)
    if isinstance(value, OperatorFamily):
        return value.value
    return str(value)


def config_parse(text: str) -> RunConfig:
    return RunConfig.from_text(text)
