"""Experiment configuration: a versioned JSON schema and the shipped presets.

Seed splitting
--------------
Everything random in an experiment derives from the integer ``seed``:

* setup draws (ground truth, regressor covariances, noise variances, SNRs)
  use ``SeedSequence(seed, spawn_key=(0,))``;
* Monte-Carlo trial ``t`` uses ``SeedSequence(seed, spawn_key=(1, t))``
  (see :func:`difflms.estimators.trial_seed`).

``SeedSequence`` hashes entropy and spawn key together, so trial streams
do not depend on how many trials run or on which worker runs them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from ..errors import DomainError
from ..estimators import ALGORITHMS
from ..network import RULES

SCHEMA_VERSION = 1
SCENARIOS = ("line-1d", "poisson-2d", "custom")
TOPOLOGIES = ("line", "grid", "complete")
POISSON_INPUTS = ("two-bump", "polynomial")


class ConfigError(DomainError):
    """A configuration violates the schema; raised before any computation."""


@dataclass(frozen=True)
class PoissonSettings:
    """Settings of the 2D Poisson input-estimation scenario.

    ``input="two-bump"`` uses the two-bump surface; ``"polynomial"`` uses a
    low-degree surface that the tensor basis spans exactly (set
    ``noiseless`` to check exact recovery).  The per-node steady-state MSD
    map averages the last ``window`` iterations over ``trials`` runs.
    """

    n_interior: int = 11
    basis: tuple = (4, 4)
    snr_db: tuple = (20.0, 30.0)
    mu: float = 0.01
    iterations: int = 3000
    trials: int = 10
    window: int = 500
    input: str = "two-bump"
    polynomial: tuple = ((1.0, 0.5, -0.25), (0.75, -0.5, 0.0), (-0.25, 0.0, 0.5))
    noiseless: bool = False
    omega: float = 0.9
    tol: float = 1e-8
    max_iter: int = 200_000

    def validate(self):
        if self.n_interior < 1:
            raise ConfigError("poisson.n_interior must be positive")
        if len(self.basis) != 2 or min(self.basis) < 1:
            raise ConfigError("poisson.basis must be two positive counts")
        if len(self.snr_db) != 2 or self.snr_db[0] > self.snr_db[1]:
            raise ConfigError("poisson.snr_db must be an increasing pair")
        if self.input not in POISSON_INPUTS:
            raise ConfigError(f"poisson.input must be one of {POISSON_INPUTS}")
        if self.iterations < 1 or self.trials < 1:
            raise ConfigError("poisson.iterations and poisson.trials must be >= 1")
        if not 1 <= self.window <= self.iterations:
            raise ConfigError("poisson.window must lie in [1, iterations]")
        if not self.mu > 0:
            raise ConfigError("poisson.mu must be positive")
        if not 0 < self.omega <= 1:
            raise ConfigError("poisson.omega must lie in (0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    Combination rules name entries of :data:`difflms.network.RULES`; the
    matrices they produce are left-stochastic and ``c`` is transposed to
    the right-stochastic orientation.  ``matrices`` (keys ``A1``, ``A2``,
    ``C``) overrides the rules with explicit matrices.  ``covariances`` is
    either one ``M x M`` matrix shared by all nodes or one per node; when
    absent, ``R_{u,k} = Tr/M I`` with ``Tr ~ U(trace_range)``.  ``mu`` may be
    a number, one number per node, or ``None`` for ``0.1`` times the
    smallest mean-stability bound.  The centralized filter sums ``N``
    gradients per iteration, so its step defaults to ``mean(mu) / N``, which
    makes its steady state comparable with the distributed filters.
    """

    name: str = "custom"
    scenario: str = "line-1d"
    n_nodes: int = 4
    n_params: int = 2
    n_basis: int = 5
    length: float = 1.0
    topology: str = "line"
    grid: tuple | None = None
    a1: str = "identity"
    a2: str = "uniform"
    c: str = "metropolis"
    matrices: dict | None = None
    mu: float | list | None = 0.01
    mu_centralized: float | None = None
    trace_range: tuple = (1.0, 5.0)
    noise_range: tuple = (0.05, 0.1)
    covariances: list | None = None
    noise_vars: list | None = None
    truth: list | None = None
    truth_scale: float = 1.0
    algorithms: tuple = ("diffusion",)
    trials: int = 300
    horizon: int = 1000
    seed: int = 2013
    steady_window: int = 200
    tolerance_db: float = 1.0
    workers: int = 1
    out_dir: str = "out"
    poisson: PoissonSettings = field(default_factory=PoissonSettings)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if isinstance(self.poisson, dict):
            object.__setattr__(self, "poisson", _poisson_from_dict(self.poisson))
        for name in ("grid", "trace_range", "noise_range", "algorithms"):
            val = getattr(self, name)
            if isinstance(val, list):
                object.__setattr__(self, name, tuple(val))
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; "
                              f"this build reads version {SCHEMA_VERSION}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        for key in ("a1", "a2", "c"):
            if getattr(self, key) not in RULES:
                raise ConfigError(f"{key}: unknown combination rule {getattr(self, key)!r}; "
                                  f"known: {sorted(RULES)}")
        if self.matrices is not None:
            extra = set(self.matrices) - {"A1", "A2", "C"}
            if extra:
                raise ConfigError(f"matrices: unknown keys {sorted(extra)}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not 1 <= self.steady_window <= self.horizon:
            raise ConfigError("steady_window must lie in [1, horizon]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if min(self.n_nodes, self.n_params, self.n_basis) < 1:
            raise ConfigError("n_nodes, n_params and n_basis must be >= 1")
        if self.length <= 0:
            raise ConfigError("length must be positive")
        if self.topology == "grid":
            if self.grid is None or len(self.grid) != 2 or self.grid[0] * self.grid[1] != self.n_nodes:
                raise ConfigError("grid topology needs grid=[nx, ny] with nx*ny == n_nodes")
        for name in ("trace_range", "noise_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ConfigError(f"{name} must be a nonnegative increasing pair")
        if self.mu_centralized is not None and self.mu_centralized < 0:
            raise ConfigError("mu_centralized must be nonnegative")
        if self.tolerance_db <= 0:
            raise ConfigError("tolerance_db must be positive")
        if self.scenario == "poisson-2d":
            self.poisson.validate()

    # ---------------------------------------------------------------- I/O

    def to_dict(self) -> dict:
        d = asdict(self)
        d["poisson"] = asdict(self.poisson)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        data = dict(data)
        data.setdefault("schema_version", SCHEMA_VERSION)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")
        return path

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Copy with the non-``None`` keyword values replaced."""
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def build(self):
        from .scenario import build_scenario

        return build_scenario(self)


def _poisson_from_dict(data: dict) -> PoissonSettings:
    known = {f.name for f in fields(PoissonSettings)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown poisson keys: {sorted(unknown)}")
    data = {k: tuple(tuple(x) if isinstance(x, list) else x for x in v) if isinstance(v, list) else v
            for k, v in data.items()}
    return PoissonSettings(**data)


def preset_names() -> list[str]:
    files = resources.files(__package__).joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))


def load_preset(name: str) -> ExperimentConfig:
    res = resources.files(__package__).joinpath("presets", f"{name}.json")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    return ExperimentConfig.from_dict(json.loads(res.read_text()))
