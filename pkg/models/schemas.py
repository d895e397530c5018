"""
Pydantic Models for Configuration, Foundation Data Records and Results
"""
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

import constants


# Configuration
class ClassRule(BaseModel):
    pattern: str = Field(..., min_length=1)
    tag: Literal["clock", "logic", "macro", "iopad"]


class SyntheticParams(BaseModel):
    name: str = "synth"
    seed: int = 0
    n_instances: int = Field(1000, ge=1)
    n_nets: int = Field(900, ge=0)  # signal nets; the clock tree adds its own nets on top
    n_inputs: int = Field(8, ge=1)
    n_macros: int = Field(0, ge=0)
    n_routing_layers: int = Field(6, ge=2, le=12)
    utilization: float = Field(0.6, gt=0.0, le=1.0)
    core_width: Optional[int] = Field(None, gt=0)
    core_height: Optional[int] = Field(None, gt=0)
    profile: Literal["uniform", "hotspots"] = "hotspots"
    n_hotspots: int = Field(3, ge=0)
    sequential_fraction: float = Field(0.15, ge=0.0, lt=1.0)
    locality: int = Field(64, ge=1)
    pin_distribution: Dict[int, float] = Field(
        default_factory=lambda: dict(constants.SYNTH_DEFAULT_PIN_DISTRIBUTION)
    )

    @field_validator("pin_distribution")
    @classmethod
    def check_distribution(cls, v: Dict[int, float]) -> Dict[int, float]:
        if not v:
            raise ValueError("pin distribution must not be empty")
        if any(k < 2 for k in v):
            raise ValueError("pin counts must be >= 2")
        if any(w < 0 for w in v.values()) or sum(v.values()) <= 0:
            raise ValueError("pin distribution weights must be non-negative with a positive sum")
        return dict(sorted(v.items()))


class DatasetConfig(BaseModel):
    window: int = Field(constants.DEFAULT_WINDOW, ge=1)
    stride: int = Field(constants.DEFAULT_STRIDE, ge=1)
    mask_size: int = Field(constants.DEFAULT_MASK_SIZE, ge=2)
    mask_margin: int = Field(constants.DEFAULT_MASK_MARGIN, ge=0)
    mask_min_region: int = Field(constants.DEFAULT_MASK_MIN_REGION, ge=1)
    mask_max_region: int = Field(constants.DEFAULT_MASK_MAX_REGION, ge=1)
    mask_threshold: float = Field(constants.DEFAULT_MASK_THRESHOLD, ge=0.0, le=1.0)
    mask_max_samples: int = Field(constants.DEFAULT_MASK_MAX_SAMPLES, ge=1)
    sequence_len: int = Field(constants.DEFAULT_SEQUENCE_LEN, ge=1)
    robust_scaling: bool = False
    split_fractions: Tuple[float, float, float] = constants.DEFAULT_SPLIT_FRACTIONS
    strata: int = Field(constants.DEFAULT_STRATA, ge=1)
    seed: int = 0


class DseConfig(BaseModel):
    gamma: float = Field(constants.DEFAULT_GAMMA, gt=0.0, le=1.0)
    n_candidates: int = Field(constants.DEFAULT_N_CANDIDATES, ge=1)
    n_startup: int = Field(constants.DEFAULT_N_STARTUP, ge=0)
    budget: int = Field(constants.DEFAULT_DSE_BUDGET, ge=0)


class WorkspaceConfig(BaseModel):
    schema_version: str = constants.SCHEMA_VERSION
    def_file: str = f"result/{constants.DEFAULT_DESIGN_FILE}"
    lef_file: str = f"result/{constants.DEFAULT_LEF_FILE}"
    tech_sidecar: Optional[str] = f"result/{constants.DEFAULT_TECH_FILE}"
    patch_multiple: int = Field(constants.DEFAULT_PATCH_MULTIPLE, ge=1)
    reference_layer: int = Field(1, ge=1)
    max_paths: int = Field(constants.DEFAULT_MAX_PATHS, ge=0)
    max_stages: int = Field(constants.DEFAULT_MAX_STAGES, ge=1)
    max_expansions: int = Field(constants.DEFAULT_MAX_EXPANSIONS, ge=1)
    clock_period: float = Field(constants.DEFAULT_CLOCK_PERIOD, gt=0.0)
    activity: float = Field(constants.DEFAULT_ACTIVITY, ge=0.0)
    vdd: float = Field(constants.DEFAULT_VDD, gt=0.0)
    frequency: Optional[float] = Field(None, gt=0.0)
    port_drive_resistance: float = Field(constants.DEFAULT_PORT_DRIVE_RESISTANCE, ge=0.0)
    l_ness_max_bends: int = Field(1, ge=0)
    threads: int = Field(constants.DEFAULT_THREADS, ge=1)
    class_rules: List[ClassRule] = Field(
        default_factory=lambda: [ClassRule(pattern=p, tag=t) for p, t in constants.DEFAULT_CLASS_RULES]
    )
    synthetic: Optional[SyntheticParams] = None
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    dse: DseConfig = Field(default_factory=DseConfig)

    @property
    def effective_frequency(self) -> float:
        return self.frequency if self.frequency is not None else 1.0 / self.clock_period


# Technology sidecar
class LayerElectricals(BaseModel):
    name: str
    unit_r: float = Field(..., ge=0.0)  # ohm per DBU
    unit_c: float = Field(..., ge=0.0)  # farad per DBU


class MasterElectricals(BaseModel):
    name: str
    pin_cap: float = Field(0.0, ge=0.0)
    drive_resistance: float = Field(0.0, ge=0.0)
    intrinsic_delay: float = Field(0.0, ge=0.0)
    is_sequential: bool = False


class TechSidecar(BaseModel):
    dbu_per_micron: int = Field(constants.DEFAULT_DBU_PER_MICRON, gt=0)
    layers: List[LayerElectricals] = Field(default_factory=list)
    masters: List[MasterElectricals] = Field(default_factory=list)


# Foundation records
class PinRecord(BaseModel):
    owner: str
    pin: str
    x: int
    y: int
    direction: Literal["driver", "load"]


class LoadTiming(BaseModel):
    pin: str
    elmore: float
    slew: float
    resistance: float


class NetFeatures(BaseModel):
    fanout: int
    aspect_ratio: float
    hpwl: int
    rsmt: int
    l_ness: float
    rwl: int
    via_count: int
    layer_wirelength: Dict[int, int] = Field(default_factory=dict)


class NetElectricals(BaseModel):
    resistance: float
    capacitance: float
    wire_capacitance: float
    loads: List[LoadTiming] = Field(default_factory=list)
    power: float


class SubnetRecord(BaseModel):
    load: str
    nodes: List[Tuple[int, int, int]]  # (x, y, layer)


class NetVec(BaseModel):
    id: int
    name: str
    pins: List[PinRecord]
    bbox: Tuple[int, int, int, int]
    features: NetFeatures
    electricals: Optional[NetElectricals] = None
    wires: List[Tuple[int, int, int, int, int]] = Field(default_factory=list)
    vias: List[Tuple[int, int, int, int]] = Field(default_factory=list)
    subnets: List[SubnetRecord] = Field(default_factory=list)


class GraphNode(BaseModel):
    id: int
    name: str
    cls: Literal["clock", "logic", "macro", "iopad", "port"]
    master: Optional[str] = None
    x: int
    y: int
    orient: str = "N"
    direction: Optional[str] = None  # ports only


class GraphEdge(BaseModel):
    src: int
    dst: int
    net: str
    src_pin: str
    dst_pin: str


class GraphVec(BaseModel):
    nodes: List[GraphNode] = Field(default_factory=list)
    edges: List[GraphEdge] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_ids(self) -> "GraphVec":
        n = len(self.nodes)
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError(f"node ids must be dense, found {node.id} at position {i}")
        for e in self.edges:
            if not (0 <= e.src < n and 0 <= e.dst < n):
                raise ValueError(f"edge {e.src}->{e.dst} references a missing node")
            if e.src == e.dst:
                raise ValueError(f"self-loop on node {e.src}")
        return self


class RoutePoint(BaseModel):
    x: int
    y: int
    kind: Literal["steiner", "cell_pin"] = "steiner"


class PathStage(BaseModel):
    name: str
    kind: Literal["cell_pin", "steiner"] = "cell_pin"
    net: str
    x: int
    y: int
    capacitance: float
    slew: float
    resistance: float
    cell_delay: float
    wire_delay: float
    incr_delay: float
    route: List[RoutePoint] = Field(default_factory=list)


class PathVec(BaseModel):
    id: int
    startpoint: str
    endpoint: str
    stages: List[PathStage]
    delay: float
    slack: float
    stage_count: int


class PatchFragment(BaseModel):
    net: str
    wire: Tuple[int, int, int, int, int]


class PatchVec(BaseModel):
    id: int
    ix: int
    iy: int
    bbox: Tuple[int, int, int, int]
    cell_density: float
    pin_density: float
    net_density: float
    rudy: float
    wire_density: Dict[int, float] = Field(default_factory=dict)
    congestion: Dict[int, float] = Field(default_factory=dict)
    congestion_total: float = 0.0
    wirelength: Dict[int, int] = Field(default_factory=dict)
    via_count: int = 0
    power: float = 0.0
    timing: Optional[float] = None
    fragments: List[PatchFragment] = Field(default_factory=list)


class GridSpec(BaseModel):
    origin_x: int
    origin_y: int
    cell_w: int
    cell_h: int
    nx: int
    ny: int
    width: int
    height: int
    partial_x: bool = False
    partial_y: bool = False
    patch_multiple: int = constants.DEFAULT_PATCH_MULTIPLE
    reference_layer: int = 1


class DesignCounts(BaseModel):
    cells: int
    nets: int
    wires: int
    vias: int
    pins: int
    ports: int
    wired_nets: int


class DesignMetrics(BaseModel):
    total_rwl: int
    total_hpwl: int
    max_congestion: Optional[float] = None
    wns: Optional[float] = None
    tns: float = 0.0
    violating_paths: int = 0
    total_power: float = 0.0
    path_count: int = 0


class DesignVec(BaseModel):
    name: str
    dbu_per_micron: int
    die: Tuple[int, int, int, int]
    core: Tuple[int, int, int, int]
    clock_period: float
    counts: DesignCounts
    core_usage: float
    class_shares: Dict[str, float]
    layer_wirelength: Dict[int, int]
    pin_histogram: Dict[int, int]
    metrics: DesignMetrics


class LevelEntry(BaseModel):
    count: int
    files: Dict[str, str] = Field(default_factory=dict)  # relative path -> FNV-1a 64 hex


class BundleManifest(BaseModel):
    schema_version: str = constants.SCHEMA_VERSION
    design: str
    levels: Dict[str, LevelEntry] = Field(default_factory=dict)


class FoundationBundle(BaseModel):
    design: Optional[DesignVec] = None
    nets: Optional[List[NetVec]] = None
    graph: Optional[GraphVec] = None
    paths: Optional[List[PathVec]] = None
    grid: Optional[GridSpec] = None
    patches: Optional[List[PatchVec]] = None

    @property
    def name(self) -> str:
        return self.design.name if self.design else ""


# Fidelity
class FidelityMetrics(BaseModel):
    rwl: int
    wns: Optional[float]
    tns: float
    violating_paths: int
    power: float


class FidelityReport(BaseModel):
    design: str
    coarsen: int = 1
    wirelength_ratio: Optional[float]
    wns_ratio: Optional[float]
    wns_diff: Optional[float] = None
    tns_ratio: Optional[float]
    tns_diff: Optional[float] = None
    violating_paths: Tuple[int, int]
    power_ratio: Optional[float]
    density_correlation: Optional[float]
    original: FidelityMetrics
    reconstructed: FidelityMetrics
    passed: Dict[str, Optional[bool]] = Field(default_factory=dict)
    diagnostics: List[str] = Field(default_factory=list)


# Insight
class StatSummary(BaseModel):
    designs: List[str]
    net_count: int
    pin_histogram: Dict[int, int]
    two_three_pin_share: float
    class_shares: Dict[str, float]
    layer_shares: Dict[int, float]
    core_usage: float
    path_delay_quartiles: Optional[Tuple[float, float, float, float, float]] = None
    path_stage_quartiles: Optional[Tuple[float, float, float, float, float]] = None


class CorrMatrix(BaseModel):
    labels: List[str]
    matrix: List[List[float]]


# Design space exploration
class ContinuousDim(BaseModel):
    kind: Literal["continuous"] = "continuous"
    name: str
    low: float
    high: float
    default: Optional[float] = None

    @model_validator(mode="after")
    def check_bounds(self) -> "ContinuousDim":
        if not self.low < self.high:
            raise ValueError(f"dimension {self.name}: low must be < high")
        return self


class CategoricalDim(BaseModel):
    kind: Literal["categorical"] = "categorical"
    name: str
    choices: List[Union[str, int, float]] = Field(..., min_length=1)
    default: Optional[Union[str, int, float]] = None


Dimension = Annotated[Union[ContinuousDim, CategoricalDim], Field(discriminator="kind")]


class ParamSpace(BaseModel):
    dimensions: List[Dimension] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_names(self) -> "ParamSpace":
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")
        return self

    def contains(self, params: Dict[str, Any]) -> bool:
        for dim in self.dimensions:
            if dim.name not in params:
                return False
            v = params[dim.name]
            if isinstance(dim, ContinuousDim):
                if not (dim.low <= v <= dim.high):
                    return False
            elif v not in dim.choices:
                return False
        return True


class TrialRecord(BaseModel):
    number: int
    params: Dict[str, Any]
    objectives: Optional[List[float]] = None
    state: Literal["complete", "failed"] = "complete"
    rank: Optional[int] = None
    error: Optional[str] = None


class ParetoFront(BaseModel):
    trials: List[TrialRecord] = Field(default_factory=list)


# Datasets
class DatasetManifest(BaseModel):
    task: str
    designs: List[str]
    seed: int
    shapes: Dict[str, List[int]] = Field(default_factory=dict)
    columns: Dict[str, List[str]] = Field(default_factory=dict)
    normalization: Dict[str, Dict[str, List[float]]] = Field(default_factory=dict)
    split: Dict[str, List[str]] = Field(default_factory=dict)
    counts: Dict[str, int] = Field(default_factory=dict)
    diagnostics: List[str] = Field(default_factory=list)


class OperationResult(BaseModel):
    success: bool
    message: str
    data: Optional[Dict[str, Any]] = None
    errors: Optional[List[str]] = None
