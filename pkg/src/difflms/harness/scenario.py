"""Turn an :class:`ExperimentConfig` into concrete model objects."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import theory
from ..basis import sample_basis
from ..errors import DomainError
from ..network import (CombinationPolicy, NetworkGraph, combination_matrix, complete_topology,
                       grid_topology, line_topology)
from ..pde_model import GroundTruthModel, RegressorSpec, SpatialDomain, random_ground_truth
from .config import ConfigError, ExperimentConfig


def setup_rng(seed: int) -> np.random.Generator:
    """Generator for setup draws (truth, covariances, noise levels)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0,)))


def make_graph(cfg: ExperimentConfig) -> NetworkGraph:
    if cfg.topology == "line":
        return line_topology(cfg.n_nodes)
    if cfg.topology == "grid":
        return grid_topology(*cfg.grid)
    return complete_topology(cfg.n_nodes)


def make_policy(cfg: ExperimentConfig, graph: NetworkGraph) -> CombinationPolicy:
    mats = dict(cfg.matrices or {})
    A1 = np.asarray(mats["A1"], float) if "A1" in mats else combination_matrix(graph, cfg.a1)
    A2 = np.asarray(mats["A2"], float) if "A2" in mats else combination_matrix(graph, cfg.a2)
    C = np.asarray(mats["C"], float) if "C" in mats else combination_matrix(graph, cfg.c, "right")
    # explicit matrices define their own support
    check_graph = None if mats else graph
    try:
        return CombinationPolicy(A1, A2, C, graph=check_graph)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _covariances(cfg, rng):
    n, m = cfg.n_nodes, cfg.n_params
    traces = rng.uniform(*cfg.trace_range, size=n)
    noise = rng.uniform(*cfg.noise_range, size=n)
    if cfg.covariances is None:
        R = traces[:, None, None] / m * np.eye(m)[None]
    else:
        R = np.asarray(cfg.covariances, dtype=float)
        if R.shape == (m, m):
            R = np.broadcast_to(R, (n, m, m)).copy()
        if R.shape != (n, m, m):
            raise ConfigError(f"covariances must be {m}x{m} or {n}x{m}x{m}")
    if cfg.noise_vars is not None:
        noise = np.broadcast_to(np.asarray(cfg.noise_vars, dtype=float), (n,)).copy()
    return R, noise


@dataclass
class Scenario:
    """Everything a line-1d or custom experiment needs."""

    config: ExperimentConfig
    positions: np.ndarray
    basis: object
    graph: NetworkGraph
    policy: CombinationPolicy
    truth: GroundTruthModel
    covariances: np.ndarray
    noise_vars: np.ndarray
    mu: np.ndarray
    mu_centralized: float
    _theory: dict = field(default_factory=dict, repr=False)

    @property
    def blocks(self) -> np.ndarray:
        return self.basis.blocks

    @property
    def horizon(self) -> int:
        return self.config.horizon

    @property
    def algorithms(self) -> tuple:
        return self.config.algorithms

    @property
    def w_init(self):
        return None

    @property
    def regressors(self) -> RegressorSpec:
        """Sampling model; fails for singular covariances, which only the
        theory accepts."""
        try:
            return RegressorSpec(self.covariances, self.noise_vars)
        except DomainError as exc:
            raise ConfigError(f"{self.config.name}: cannot simulate, {exc}") from None

    def mu_for(self, algorithm: str):
        return self.mu_centralized if algorithm == "centralized" else self.mu

    def policy_for(self, algorithm: str):
        if algorithm == "noncooperative":
            return CombinationPolicy.identity(self.graph.n_nodes)
        if algorithm == "atc":
            return CombinationPolicy.atc(self.policy.A2)
        return self.policy

    def theory(self, algorithm: str = "diffusion") -> theory.TheoryArtifacts:
        if algorithm not in self._theory:
            if algorithm == "centralized":
                art = theory.assemble_centralized(self.blocks, self.covariances, self.noise_vars,
                                                  self.mu_centralized, self.truth.w)
            else:
                art = theory.assemble(self.blocks, self.covariances, self.noise_vars,
                                      self.policy_for(algorithm), self.mu, self.truth.w)
            self._theory[algorithm] = art
        return self._theory[algorithm]


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    if cfg.scenario == "poisson-2d":
        raise ConfigError("poisson-2d configurations run through poisson_demo")
    rng = setup_rng(cfg.seed)
    domain = SpatialDomain(cfg.length, cfg.n_nodes)
    basis = sample_basis(domain, cfg.n_basis, n_params=cfg.n_params)
    graph = make_graph(cfg)
    if graph.n_nodes != cfg.n_nodes:
        raise ConfigError("topology size does not match n_nodes")
    policy = make_policy(cfg, graph)
    if policy.n_nodes != cfg.n_nodes:
        raise ConfigError("combination matrices do not match n_nodes")
    if cfg.truth is None:
        truth = random_ground_truth(basis, cfg.n_params, rng, cfg.truth_scale)
    else:
        w = np.asarray(cfg.truth, dtype=float)
        if w.size != cfg.n_params * cfg.n_basis:
            raise ConfigError(f"truth must have {cfg.n_params * cfg.n_basis} entries")
        truth = GroundTruthModel.from_vector(w, basis.blocks)
    R, noise = _covariances(cfg, rng)

    zero = theory.assemble(basis.blocks, R, noise, policy, 0.0, truth.w)
    bounds = theory.step_size_bound(zero)
    if cfg.mu is None:
        mu = np.full(cfg.n_nodes, 0.1 * float(bounds.min()))
    else:
        mu = np.broadcast_to(np.asarray(cfg.mu, dtype=float), (cfg.n_nodes,)).copy()
    mu_c = float(mu.mean()) / cfg.n_nodes if cfg.mu_centralized is None else float(cfg.mu_centralized)
    if np.any(mu < 0):
        raise ConfigError("step sizes must be nonnegative")
    return Scenario(cfg, domain.positions, basis, graph, policy, truth, R, noise, mu, mu_c)
