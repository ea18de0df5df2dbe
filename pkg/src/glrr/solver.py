"""Nuclear-norm-regularized self-expression solver.

Minimizes

    sum_i w_i B_i w_i^T  +  lambda * ||W||_*
    subject to  sum_j W[i, j] = 1  for every row i,

where B_i are the Gram-tensor slices. The constraint is handled by an
augmented Lagrangian with per-row multipliers y_i and an adaptive
penalty beta; each iteration linearizes the smooth part around the
current iterate and applies singular value thresholding (the proximal
map of the nuclear norm) to the resulting gradient step:

    W  <-  svt( W - grad_F / (eta * beta),  lambda / (eta * beta) )
    y  <-  y + beta * (row sums of W - 1)
    beta <- min(beta_max, rho * beta),  rho = rho0 once the scaled
            iterate change beta * |dW|_F falls below eps1, else 1.

The smooth part carries a 1/2 factor on the quadratic term, so its row
gradient is exactly w_i B_i. Iteration stops when both
beta * |dW|_F <= eps1 and |W 1 - 1|_2 <= eps2 hold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalFailure, ShapeError, ValidationError
from .gram import GramTensor, eta_b

logger = logging.getLogger(__name__)

__all__ = [
    "CoefficientMatrix",
    "SolverConfig",
    "SolverState",
    "IterationRecord",
    "objective",
    "gradient_f",
    "svt",
    "step",
    "solve",
    "write_history_csv",
]


@dataclass(frozen=True)
class CoefficientMatrix:
    """Learned N x N self-expression weights, one row per point."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.matrix, dtype=float))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"coefficient matrix must be square, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def n_points(self) -> int:
        return self.matrix.shape[0]

    def row_sum_residual(self) -> float:
        """Max row-sum deviation from 1; small at convergence."""
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1.0)))


@dataclass(frozen=True)
class SolverConfig:
    """Iteration parameters. Defaults follow the standard profile:
    rho0=1.9, beta ramping from 0.1 to at most 1e6, both tolerances
    1e-4. ``max_iters`` is a library safeguard against unbounded loops.
    """

    lam: float
    rho0: float = 1.9
    beta0: float = 0.1
    beta_max: float = 1e6
    eps1: float = 1e-4
    eps2: float = 1e-4
    max_iters: int = 500

    def __post_init__(self):
        # lam = 0 is admitted: it turns the solve into the pure
        # feasibility problem used by the diagnostics.
        if self.lam < 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")
        if self.rho0 < 1.0:
            raise ValidationError(f"rho0 must be >= 1, got {self.rho0}")
        if not 0 < self.beta0 < self.beta_max:
            raise ValidationError(
                f"need 0 < beta0 < beta_max, got beta0={self.beta0}, "
                f"beta_max={self.beta_max}"
            )
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValidationError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    constraint_residual: float
    delta_w: float
    beta: float


@dataclass(frozen=True)
class SolverState:
    """Iterate snapshot: weights, multipliers, penalty, and history."""

    W: np.ndarray
    y: np.ndarray
    beta: float
    iteration: int
    history: tuple[IterationRecord, ...] = field(default_factory=tuple)
    converged: bool = False
    warning: str | None = None

    @classmethod
    def initial(cls, n: int, beta0: float) -> "SolverState":
        return cls(W=np.zeros((n, n)), y=np.zeros(n), beta=beta0, iteration=0)


def _quadratic_term(w: np.ndarray, tensor: GramTensor) -> float:
    """sum_i w_i B_i w_i^T."""
    return float(np.einsum("ij,ijk,ik->", w, tensor.slices, w))


def objective(w: np.ndarray, tensor: GramTensor, lam: float) -> float:
    """Model objective: quadratic self-expression cost plus
    ``lam`` times the nuclear norm of W."""
    w = np.asarray(w, dtype=float)
    if w.shape != (tensor.n_points, tensor.n_points):
        raise ShapeError(
            f"W has shape {w.shape}, expected "
            f"({tensor.n_points}, {tensor.n_points})"
        )
    nuclear = float(np.sum(np.linalg.svd(w, compute_uv=False)))
    return _quadratic_term(w, tensor) + lam * nuclear


def gradient_f(
    w: np.ndarray, tensor: GramTensor, y: np.ndarray, beta: float
) -> np.ndarray:
    """Gradient of the smooth augmented-Lagrangian part at W.

    Row i is  w_i B_i + y_i 1 + beta (sum_j W[i,j] - 1) 1  with 1 the
    all-ones row vector (the quadratic term enters with a 1/2 factor,
    so its gradient contribution is exactly w_i B_i).
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    n = tensor.n_points
    if w.shape != (n, n) or y.shape != (n,):
        raise ShapeError(
            f"shapes W{w.shape}, y{y.shape} do not match tensor size {n}"
        )
    rows = np.einsum("ij,ijk->ik", w, tensor.slices)
    residual = w.sum(axis=1) - 1.0
    return rows + (y + beta * residual)[:, None]


def _svt_spectrum(m: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as err:
        raise NumericalFailure(f"SVD did not converge: {err}") from err
    shrunk = np.maximum(s - tau, 0.0)
    return (u * shrunk) @ vt, shrunk


def svt(m: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: U max(S - tau, 0) V^T.

    The closed-form minimizer of  tau ||Z||_* + 1/2 ||Z - M||_F^2.
    """
    if tau < 0:
        raise ValidationError(f"threshold must be >= 0, got {tau}")
    m = np.asarray(m, dtype=float)
    result, _ = _svt_spectrum(m, tau)
    return result


def step(
    state: SolverState,
    tensor: GramTensor,
    eta: float,
    config: SolverConfig,
) -> SolverState:
    """One linearized proximal iteration plus multiplier/penalty update.

    Updates W by a thresholded gradient step, then y from the fresh
    row sums, then beta. Appends an IterationRecord carrying the model
    objective, the l2 constraint residual |W 1 - 1|, the iterate change
    |dW|_F, and the beta that produced the step. ``converged`` is set
    when both stopping conditions hold for this iteration.
    """
    beta = state.beta
    scale = eta * beta
    grad = gradient_f(state.W, tensor, state.y, beta)
    w_next, spectrum = _svt_spectrum(state.W - grad / scale, config.lam / scale)
    row_residual = w_next.sum(axis=1) - 1.0
    y_next = state.y + beta * row_residual
    delta_w = float(np.linalg.norm(w_next - state.W))
    slow = beta * delta_w <= config.eps1
    beta_next = min(config.beta_max, (config.rho0 if slow else 1.0) * beta)
    constraint = float(np.linalg.norm(row_residual))
    record = IterationRecord(
        iteration=state.iteration + 1,
        objective=_quadratic_term(w_next, tensor) + config.lam * float(spectrum.sum()),
        constraint_residual=constraint,
        delta_w=delta_w,
        beta=beta,
    )
    return SolverState(
        W=w_next,
        y=y_next,
        beta=beta_next,
        iteration=state.iteration + 1,
        history=state.history + (record,),
        converged=slow and constraint <= config.eps2,
    )


def solve(
    tensor: GramTensor, config: SolverConfig
) -> tuple[CoefficientMatrix, SolverState]:
    """Run the iteration from W = 0, y = 0 until both stopping
    conditions hold or ``max_iters`` is reached.

    On a normal stop the final iterate is returned. If the cap is hit
    first, the best iterate seen so far (smallest worst-case ratio of
    the two stopping quantities to their tolerances) is returned with a
    warning set on the state instead of raising.
    """
    eta = eta_b(tensor)
    state = SolverState.initial(tensor.n_points, config.beta0)
    best_w = state.W
    best_score = np.inf
    for _ in range(config.max_iters):
        state = step(state, tensor, eta, config)
        rec = state.history[-1]
        score = max(
            rec.beta * rec.delta_w / config.eps1,
            rec.constraint_residual / config.eps2,
        )
        if score < best_score:
            best_score = score
            best_w = state.W
        if state.converged:
            break
    if not state.converged:
        state = replace(
            state,
            W=best_w,
            warning=(
                f"stopping conditions not met within {config.max_iters} "
                f"iterations; returning best iterate (score {best_score:.3g})"
            ),
        )
    _monitor_constraint(state.history, config.eps2)
    return CoefficientMatrix(state.W), state


def _monitor_constraint(
    history: tuple[IterationRecord, ...], eps2: float
) -> None:
    """Log a warning if the constraint residual climbs back above
    10 * eps2 after its first dip below eps2.

    This is diagnostic only: an oscillating residual usually means beta
    is growing too aggressively for the problem at hand.
    """
    crossed = False
    for rec in history:
        if not crossed:
            crossed = rec.constraint_residual <= eps2
        elif rec.constraint_residual > 10.0 * eps2:
            logger.warning(
                "constraint residual rose to %.3g (> 10 * eps2) at "
                "iteration %d after first dropping below %.3g",
                rec.constraint_residual,
                rec.iteration,
                eps2,
            )
            return


def write_history_csv(history: tuple[IterationRecord, ...], path) -> None:
    """Dump per-iteration records as CSV with columns
    iter, objective, constraint_residual, delta_w, beta."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,objective,constraint_residual,delta_w,beta\n")
        for rec in history:
            fh.write(
                f"{rec.iteration},{rec.objective:.17g},"
                f"{rec.constraint_residual:.17g},{rec.delta_w:.17g},"
                f"{rec.beta:.17g}\n"
            )
