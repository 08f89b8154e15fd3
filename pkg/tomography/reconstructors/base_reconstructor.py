import time
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional

import numpy as np

from tomography.fem.assembly import SobolevMetric, StiffnessSystem, assemble
from tomography.fem.field import Field
from tomography.fem.solver import BoundaryData, DualVector, discrepancy, sobolev_gradient, solve_patterns
from tomography.mesh.disk_mesh import Mesh
from tomography.mesh.refinement import refine_where
from tomography.models import CauchyDataSet, IterationRecord, ReconConfig, ReconMethod, ReconStatus
from tomography.simulation.simulator import discretize
from tomography.utils.errors import NumericalError
from tomography.utils.logger import log

DEGENERATE_CURVATURE = 1e-14


def project_A0(zeta: Field, sigma0: Field, c: float) -> Field:
    """Truncate sigma0 + zeta into [c, 1/c] at every node and subtract sigma0 again."""
    return Field(zeta.mesh, np.clip(sigma0.values + zeta.values, c, 1.0 / c) - sigma0.values)


@dataclass
class IterationState:
    """Accepted iterate, the previous one and their Sobolev gradients, plus the recent objective values."""

    delta_gamma: np.ndarray
    gradient: np.ndarray
    psi_history: Deque[float]
    previous: Optional[np.ndarray] = None
    previous_gradient: Optional[np.ndarray] = None
    step: float = 1.0
    iteration: int = 0

    def accept(self, delta_gamma: np.ndarray, gradient: np.ndarray, psi: float):
        self.previous, self.previous_gradient = self.delta_gamma, self.gradient
        self.delta_gamma, self.gradient = delta_gamma, gradient
        self.psi_history.append(psi)


def bb_step(state: IterationState, metric: SobolevMetric, s_min: float, s_max: float) -> float:
    """
    Barzilai-Borwein step ||dx||^2 / <dx, dg> in the H1 inner product, clamped to [s_min, s_max].
    A vanishing denominator gives s_max; without a previous iterate the step is s_min.
    """
    if state.previous is None:
        return s_min
    dx = state.delta_gamma - state.previous
    dg = state.gradient - state.previous_gradient
    numerator = metric.norm_sq(dx)
    denominator = metric.inner(dx, dg)
    if abs(denominator) < DEGENERATE_CURVATURE * numerator or denominator == 0.0:
        return s_max
    return float(np.clip(numerator / denominator, s_min, s_max))


def weak_monotonicity_ok(psi_new: float, history, step: float, step_h1_sq: float, tau: float) -> bool:
    """psi_new <= max(history) - tau / (2 step) * ||delta_gamma_new - delta_gamma||_H1^2"""
    return psi_new <= max(history) - tau / (2.0 * step) * step_h1_sq


@dataclass
class Evaluation:
    psi: float
    discrepancy: float
    penalty: float
    system: StiffnessSystem
    potentials: np.ndarray


@dataclass
class ReconResult:
    mesh: Mesh
    delta_gamma: Field
    sigma0: Field
    status: ReconStatus
    records: List[IterationRecord] = field(default_factory=list)
    refinements: int = 0
    runtime_seconds: float = 0.0

    @property
    def sigma(self) -> Field:
        return self.sigma0 + self.delta_gamma

    @property
    def iterations(self) -> int:
        return len(self.records)


class BaseReconstructor(ABC):
    """
    Projected Sobolev-gradient descent with Barzilai-Borwein steps and a nonmonotone line search.

    Subclasses choose the penalty and how a trial point is formed from the gradient step.
    """

    method: ReconMethod

    def __init__(self, method: ReconMethod, dataset: CauchyDataSet, mesh: Mesh, sigma0: Field, config: ReconConfig):
        if sigma0.mesh is not mesh:
            raise ValueError("Background conductivity lives on a different mesh")
        if sigma0.values.min() < config.c or sigma0.values.max() > 1.0 / config.c:
            raise ValueError("Background conductivity violates the admissibility bounds")
        self.requested_method = method
        self.dataset = dataset
        self.config = config
        self.initial_mesh = mesh
        self.initial_sigma0 = sigma0

    def match(self) -> bool:
        return self.requested_method == self.method

    @abstractmethod
    def prepare(self):
        """Precompute mesh-dependent quantities after the mesh changes."""
        pass

    @abstractmethod
    def penalty(self, delta_gamma: np.ndarray) -> float:
        pass

    @abstractmethod
    def smooth_dual(self, delta_gamma: np.ndarray, evaluation: Evaluation) -> DualVector:
        """Derivative of the part of the objective that the gradient step handles."""
        pass

    @abstractmethod
    def trial_point(self, delta_gamma: np.ndarray, gradient: np.ndarray, step: float) -> np.ndarray:
        pass

    def bind(self, mesh: Mesh, sigma0: Field):
        self.mesh = mesh
        self.sigma0 = sigma0
        self.data: BoundaryData = discretize(self.dataset, mesh)
        self.metric = SobolevMetric(mesh)
        self.prepare()

    def evaluate(self, delta_gamma: np.ndarray) -> Evaluation:
        gamma = Field(self.mesh, self.sigma0.values + delta_gamma)
        system = assemble(self.mesh, gamma, self.data.arc, c=self.config.c)
        potentials = solve_patterns(system, self.data.loads)
        fit = discrepancy(system, self.data, potentials)
        penalty = self.penalty(delta_gamma)
        return Evaluation(fit + penalty, fit, penalty, system, potentials)

    def gradient(self, delta_gamma: np.ndarray, evaluation: Evaluation) -> np.ndarray:
        return sobolev_gradient(self.metric, self.smooth_dual(delta_gamma, evaluation)).values

    def project(self, zeta: np.ndarray) -> np.ndarray:
        return project_A0(Field(self.mesh, zeta), self.sigma0, self.config.c).values

    def start(self, delta_gamma: np.ndarray) -> IterationState:
        evaluation = self.evaluate(delta_gamma)
        self.check_finite(evaluation.psi, [])
        history = deque([evaluation.psi], maxlen=self.config.memory)
        return IterationState(delta_gamma, self.gradient(delta_gamma, evaluation), history)

    def check_finite(self, psi: float, records: List[IterationRecord]):
        if not np.isfinite(psi):
            log.error("Objective became non-finite after %d iterations", len(records))
            raise NumericalError("Objective value is not finite", records)

    def refine(self, state: IterationState) -> IterationState:
        schedule = self.config.refinement
        indicator = np.linalg.norm(Field(self.mesh, state.delta_gamma).gradients(), axis=1)
        mesh, transfer = refine_where(self.mesh, indicator, schedule.fraction)
        sigma0 = Field(mesh, transfer @ self.sigma0.values)
        delta_gamma = transfer @ state.delta_gamma
        delta_gamma[mesh.boundary_nodes] = 0.0
        self.bind(mesh, sigma0)
        log.info("Refined reconstruction mesh to %d nodes", mesh.num_nodes)
        return self.start(self.project(delta_gamma))

    def reconstruct(self) -> ReconResult:
        """
        Run the descent from delta_gamma = 0 until the step size falls below s_stop, the iterate
        stops moving, or max_iters iterations have been accepted.

        A refinement round whose first line search fails is undone: the run continues from the
        state before the round on the previous mesh and refines no further.
        """
        config = self.config
        schedule = config.refinement
        started = time.time()
        self.bind(self.initial_mesh, self.initial_sigma0)
        state = self.start(np.zeros(self.mesh.num_nodes))
        records: List[IterationRecord] = []
        status = ReconStatus.max_iters
        refinements = 0
        refining = schedule.enabled
        before_round: Optional[tuple] = None

        iteration = 1
        while iteration <= config.max_iters:
            step = bb_step(state, self.metric, config.s_min, config.s_max)
            backtracks = 0
            accepted = None
            while step >= config.s_stop:
                trial = self.trial_point(state.delta_gamma, state.gradient, step)
                step_h1_sq = self.metric.norm_sq(trial - state.delta_gamma)
                evaluation = self.evaluate(trial)
                self.check_finite(evaluation.psi, records)
                if weak_monotonicity_ok(evaluation.psi, state.psi_history, step, step_h1_sq, config.tau):
                    accepted = trial
                    break
                step /= 2.0
                backtracks += 1

            if accepted is None:
                if before_round is not None:
                    state, mesh, sigma0 = before_round
                    log.warning(
                        "Line search failed after refining to %d nodes; continuing on %d nodes",
                        self.mesh.num_nodes,
                        mesh.num_nodes,
                    )
                    self.bind(mesh, sigma0)
                    before_round = None
                    refinements -= 1
                    refining = False
                    continue
                status = ReconStatus.converged
                break

            before_round = None
            history_max = max(state.psi_history)
            stationary = np.array_equal(accepted, state.delta_gamma)
            state.accept(accepted, self.gradient(accepted, evaluation), evaluation.psi)
            state.step, state.iteration = step, iteration
            records.append(
                IterationRecord(
                    iteration=iteration,
                    psi=evaluation.psi,
                    discrepancy=evaluation.discrepancy,
                    penalty=evaluation.penalty,
                    step=step,
                    backtracks=backtracks,
                    nnz=int(np.count_nonzero(accepted)),
                    nodes=self.mesh.num_nodes,
                    step_h1_sq=step_h1_sq,
                    history_max=history_max,
                )
            )
            log.debug(
                "Iteration %d: psi=%.6e step=%.3g backtracks=%d nnz=%d",
                iteration,
                evaluation.psi,
                step,
                backtracks,
                records[-1].nnz,
            )
            if stationary:
                status = ReconStatus.stationary
                break

            due = iteration % schedule.every == 0 and iteration < config.max_iters
            if refining and refinements < schedule.max_rounds and due:
                before_round = (state, self.mesh, self.sigma0)
                state = self.refine(state)
                refinements += 1
            iteration += 1

        runtime = time.time() - started
        log.info("%s reconstruction finished: %s after %d iterations", self.method.value, status.value, len(records))
        return ReconResult(
            mesh=self.mesh,
            delta_gamma=Field(self.mesh, state.delta_gamma),
            sigma0=self.sigma0,
            status=status,
            records=records,
            refinements=refinements,
            runtime_seconds=runtime,
        )
