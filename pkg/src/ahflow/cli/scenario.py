"""Scenario files: JSON documents checked against an Avro record schema."""
import dataclasses
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import fastavro
from fastavro.validation import ValidationError, validate

from ..errors import ChartError, ScenarioError
from ..geometry.charts import RadialChart
from ..geometry.models import kappa_matrix, random_kappa, rotational_parts

logger = logging.getLogger(__name__)

TASKS = (
    "verify-expansions",
    "verify-deturck",
    "kappa-ode",
    "geon-mass",
    "ch-mass",
    "flow-pde",
    "scaling-study",
    "convergence-study",
)

GRID_TASKS = ("flow-pde", "convergence-study")

SCENARIO_SCHEMA = {
    "type": "record",
    "name": "Scenario",
    "namespace": "ahflow",
    "doc": "One verification or evolution run.",
    "fields": [
        {"name": "name", "type": "string"},
        {"name": "task", "type": {"type": "enum", "name": "Task", "symbols": [t.replace("-", "_") for t in TASKS]}},
        {"name": "n", "type": "int", "default": 3},
        {"name": "k", "type": "int", "default": 0},
        {"name": "orders", "type": {"type": "array", "items": "int"}, "default": [], "doc": "m values; empty is 1..n"},
        {"name": "m", "type": ["null", "int"], "default": None, "doc": "expansion order of kappa-ode data"},
        {"name": "moduli", "type": {"type": "array", "items": "string"}, "default": []},
        {
            "name": "kappa",
            "type": ["null", {"type": "array", "items": {"type": "array", "items": "string"}}],
            "default": None,
            "doc": "rational entries such as \"-1/3\"; null draws seeded random tensors",
        },
        {"name": "seed", "type": "long", "default": 0},
        {"name": "samples", "type": "int", "default": 1, "doc": "number of seeded tensors"},
        {
            "name": "initial",
            "type": {"type": "enum", "name": "InitialData", "symbols": ["geon", "hyperbolic", "perturbed"]},
            "default": "geon",
        },
        {"name": "points", "type": "int", "default": 400},
        {"name": "x_max", "type": "double", "default": 1.0},
        {"name": "duration", "type": "double", "default": 0.5},
        {"name": "cadence", "type": "int", "default": 10},
        {"name": "dt", "type": ["null", "double"], "default": None, "doc": "null uses the stable step"},
        {
            "name": "method",
            "type": {"type": "enum", "name": "Method", "symbols": ["rk4", "exact_exponential"]},
            "default": "rk4",
        },
        {"name": "ell", "type": "double", "default": 1.0},
        {"name": "ells", "type": {"type": "array", "items": "double"}, "default": [1.0, 2.0, 4.0, 8.0]},
        {"name": "times", "type": {"type": "array", "items": "double"}, "default": [0.25]},
        {
            "name": "backend",
            "type": {"type": "enum", "name": "Backend", "symbols": ["ode", "pde"]},
            "default": "ode",
        },
        {"name": "radii", "type": {"type": "array", "items": "double"}, "default": []},
        {"name": "levels", "type": "int", "default": 3},
        {"name": "residual_time", "type": "double", "default": 0.05},
        {"name": "output_dir", "type": "string", "default": "out"},
    ],
}

PARSED_SCHEMA = fastavro.parse_schema(SCENARIO_SCHEMA)
FIELD_NAMES = tuple(field["name"] for field in SCENARIO_SCHEMA["fields"])
ENUM_FIELDS = ("task", "method")


@dataclasses.dataclass(frozen=True)
class Scenario:
    name: str
    task: str
    n: int = 3
    k: int = 0
    orders: Tuple[int, ...] = ()
    m: Optional[int] = None
    moduli: Tuple[str, ...] = ()
    kappa: Optional[Tuple[Tuple[str, ...], ...]] = None
    seed: int = 0
    samples: int = 1
    initial: str = "geon"
    points: int = 400
    x_max: float = 1.0
    duration: float = 0.5
    cadence: int = 10
    dt: Optional[float] = None
    method: str = "rk4"
    ell: float = 1.0
    ells: Tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    times: Tuple[float, ...] = (0.25,)
    backend: str = "ode"
    radii: Tuple[float, ...] = ()
    levels: int = 3
    residual_time: float = 0.05
    output_dir: str = "out"

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)

    @property
    def expansion_orders(self):
        return self.orders or tuple(range(1, self.n + 1))

    @property
    def order(self):
        return self.n if self.m is None else self.m

    @property
    def is_grid_based(self):
        return self.task in GRID_TASKS

    def chart(self):
        return RadialChart(self.n, self.k, self.moduli)

    def kappas(self):
        """The given tensor, or ``samples`` seeded random ones (rotational when ``k = 1``)."""
        if self.kappa is not None:
            return [kappa_matrix(self.kappa, self.n)]
        tensors = []
        for index in range(self.samples):
            tensor = random_kappa(self.n, self.seed + index)
            if self.k == 1:
                psi, phi = tensor[0][0], tensor[1][1]
                zero = Fraction(0)
                tensor = tuple(
                    tuple((psi if i == 0 else phi) if i == j else zero for j in range(self.n)) for i in range(self.n)
                )
            tensors.append(tensor)
        return tensors

    def to_record(self) -> Dict[str, Any]:
        record = dataclasses.asdict(self)
        for key, value in record.items():
            if isinstance(value, tuple):
                record[key] = [list(v) if isinstance(v, tuple) else v for v in value]
        return record


def _with_defaults(document):
    record = {}
    for field in SCENARIO_SCHEMA["fields"]:
        name = field["name"]
        if name in document:
            record[name] = document[name]
        elif "default" in field:
            record[name] = field["default"]
    for name in ENUM_FIELDS:
        if isinstance(record.get(name), str):
            record[name] = record[name].replace("-", "_")
    return record


def _check_physics(scenario):
    n = scenario.n
    if n < 3:
        raise ScenarioError(f"n must be at least 3, got {n}")
    if scenario.k not in (0, 1):
        raise ScenarioError(f"k must be 0 or 1, got {scenario.k}")
    if scenario.k == 1 and scenario.task not in ("verify-expansions", "ch-mass"):
        raise ScenarioError(f"task {scenario.task} supports only flat torus boundaries (k=0)")
    if any(not 1 <= m <= n for m in scenario.orders) or (scenario.m is not None and not 1 <= scenario.m <= n):
        raise ScenarioError(f"expansion orders must lie in 1..{n}")
    if scenario.moduli and len(scenario.moduli) != n - 2:
        raise ScenarioError(f"a {n}-dimensional torus needs {n - 2} moduli, got {len(scenario.moduli)}")
    if scenario.kappa is not None and len(scenario.kappa) != n:
        raise ScenarioError(f"kappa must be {n}x{n}")
    for name in ("points", "cadence", "samples", "levels"):
        if getattr(scenario, name) < 1:
            raise ScenarioError(f"{name} must be positive")
    for name in ("x_max", "ell"):
        if getattr(scenario, name) <= 0:
            raise ScenarioError(f"{name} must be positive")
    if scenario.duration < 0 or any(t < 0 for t in scenario.times) or scenario.residual_time < 0:
        raise ScenarioError("times must be non-negative")
    if scenario.dt is not None and scenario.dt <= 0:
        raise ScenarioError("dt must be positive when given")
    if any(ell <= 0 for ell in scenario.ells):
        raise ScenarioError("curvature radii must be positive")
    if scenario.radii and any(b <= a for a, b in zip(scenario.radii, scenario.radii[1:])):
        raise ScenarioError("radii must be strictly increasing")
    if scenario.task == "convergence-study" and scenario.levels < 2:
        raise ScenarioError("a convergence study needs at least two levels")


def scenario_from_document(document: Dict[str, Any]) -> Scenario:
    """Validate a decoded JSON document and build a :class:`Scenario`."""
    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = sorted(set(document) - set(FIELD_NAMES))
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {', '.join(unknown)}")
    record = _with_defaults(document)
    try:
        validate(record, PARSED_SCHEMA, raise_errors=True)
    except ValidationError as e:
        raise ScenarioError(f"scenario does not match the schema: {e}") from e
    values = dict(record)
    for name in ENUM_FIELDS:
        values[name] = values[name].replace("_", "-")
    for name in ("orders", "moduli", "ells", "times", "radii"):
        values[name] = tuple(values[name])
    if values["kappa"] is not None:
        values["kappa"] = tuple(tuple(row) for row in values["kappa"])
    scenario = Scenario(**values)
    _check_physics(scenario)
    try:
        if scenario.kappa is not None:
            kappa = kappa_matrix(scenario.kappa, scenario.n)
            if scenario.k == 1:
                rotational_parts(kappa)
    except (ValueError, ZeroDivisionError) as e:
        raise ScenarioError(f"invalid kappa: {e}") from e
    try:
        scenario.chart()
    except ChartError as e:
        raise ScenarioError(f"invalid boundary: {e}") from e
    logger.debug("scenario %s: task %s, n=%d", scenario.name, scenario.task, scenario.n)
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario {path} is not valid JSON: {e}") from e
    return scenario_from_document(document)


def schema_json():
    return json.dumps(SCENARIO_SCHEMA, indent=2, sort_keys=True)
