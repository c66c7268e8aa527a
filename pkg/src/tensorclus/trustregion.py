"""Riemannian trust-region solver with a truncated-CG subproblem solver.

The solver is generic over a manifold object providing ``inner``,
``norm``, ``retract``, ``zero_vector``, ``egrad_to_rgrad`` and
``ehess_to_rhess``, and a problem object providing ``value(U)``,
``euclidean_gradient(U)`` and ``euclidean_gradient_derivative(U, xi)``;
Euclidean derivatives are converted to Riemannian ones through the
manifold.

Each outer iteration approximately minimizes the quadratic model

    m(xi) = F(U) + <grad, xi> + 1/2 <Hess[xi], xi>

inside a metric ball of radius Delta (Steihaug-Toint truncated CG),
retracts the step, and accepts or rejects it from the ratio of actual to
predicted reduction. Accepted iterates never increase the objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, NumericalError

__all__ = [
    "TrustRegionConfig",
    "IterationRecord",
    "SolveStats",
    "TcgResult",
    "truncated_cg",
    "solve",
]

# Truncated-CG stop reasons
NEGATIVE_CURVATURE = "negative curvature"
BOUNDARY = "trust-region boundary"
TOLERANCE = "inner tolerance"
MAX_INNER = "inner iteration cap"
MODEL_NONDECREASE = "model stopped decreasing"


@dataclass
class TrustRegionConfig:
    """Solver parameters.

    ``delta_bar``/``delta0`` default to sqrt(M*K) and delta_bar/8 for an
    M x K iterate when left ``None``.
    """

    delta_bar: float | None = None
    delta0: float | None = None
    rho_prime: float = 0.1
    max_outer: int = 1000
    max_inner: int = 30
    grad_tol: float = 1e-6
    theta: float = 1.0
    kappa: float = 0.1

    def validate(self):
        if self.delta_bar is not None and self.delta_bar <= 0:
            raise ConfigError("delta_bar must be positive")
        if self.delta0 is not None:
            if self.delta0 <= 0:
                raise ConfigError("delta0 must be positive")
            if self.delta_bar is not None and self.delta0 > self.delta_bar:
                raise ConfigError("delta0 cannot exceed delta_bar")
        if not 0.0 < self.rho_prime < 0.25:
            raise ConfigError("rho_prime must lie in (0, 1/4)")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("iteration caps must be at least 1")
        if self.grad_tol <= 0:
            raise ConfigError("grad_tol must be positive")


@dataclass
class IterationRecord:
    iteration: int
    cost: float
    grad_norm: float
    delta: float
    rho: float
    inner_iterations: int
    accepted: bool
    tcg_reason: str


@dataclass
class SolveStats:
    iterations: int = 0
    inner_iterations: int = 0
    cost_trace: list = field(default_factory=list)
    grad_norm_trace: list = field(default_factory=list)
    reason: str = ""
    records: list = field(default_factory=list)


@dataclass
class TcgResult:
    step: np.ndarray
    hess_step: np.ndarray
    reason: str
    iterations: int


def truncated_cg(manifold, U, grad, hess_operator, delta,
                 theta=1.0, kappa=0.1, max_inner=30) -> TcgResult:
    """Steihaug-Toint truncated CG on the trust-region subproblem.

    Runs CG on the quadratic model from the zero tangent vector, stopping
    at negative curvature or the boundary (where it returns the point on
    the sphere of radius ``delta`` along the last direction), at the
    residual tolerance ``|r| <= |r0| * min(|r0|^theta, kappa)``, or at the
    iteration cap. The returned step never does worse than the Cauchy
    point on the model.
    """
    eta = manifold.zero_vector(U)
    Heta = manifold.zero_vector(U)
    r = grad
    r_r = manifold.inner(U, r, r)
    norm_r0 = math.sqrt(r_r)
    if norm_r0 == 0.0:
        return TcgResult(eta, Heta, TOLERANCE, 0)

    d = -r
    e_Pe = 0.0           # |eta|^2
    e_Pd = 0.0           # <eta, d>
    d_Pd = r_r           # |d|^2
    model_value = 0.0
    reason = MAX_INNER
    iterations = 0

    for _ in range(max_inner):
        iterations += 1
        Hd = hess_operator(d)
        if not np.all(np.isfinite(Hd)):
            raise NumericalError("Hessian operator returned non-finite values")
        d_Hd = manifold.inner(U, d, Hd)
        alpha = r_r / d_Hd if d_Hd != 0.0 else np.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd

        if d_Hd <= 0.0 or e_Pe_new >= delta * delta:
            # follow d to the boundary of the trust region
            tau = (-e_Pd + math.sqrt(e_Pd * e_Pd + d_Pd * (delta * delta - e_Pe))) / d_Pd
            eta = eta + tau * d
            Heta = Heta + tau * Hd
            reason = NEGATIVE_CURVATURE if d_Hd <= 0.0 else BOUNDARY
            break

        new_eta = eta + alpha * d
        new_Heta = Heta + alpha * Hd
        new_model = (manifold.inner(U, new_eta, grad)
                     + 0.5 * manifold.inner(U, new_eta, new_Heta))
        if new_model >= model_value:
            # numerical safeguard; cannot occur with an exact linear Hessian
            reason = MODEL_NONDECREASE
            break
        eta, Heta, model_value = new_eta, new_Heta, new_model
        e_Pe = e_Pe_new

        r = r + alpha * Hd
        r_r_new = manifold.inner(U, r, r)
        if math.sqrt(r_r_new) <= norm_r0 * min(norm_r0 ** theta, kappa):
            reason = TOLERANCE
            break
        beta = r_r_new / r_r
        r_r = r_r_new
        d = -r + beta * d
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = r_r + beta * beta * d_Pd

    return TcgResult(eta, Heta, reason, iterations)


def solve(problem, manifold, U0, config: TrustRegionConfig | None = None):
    """Minimize ``problem`` over ``manifold`` starting from ``U0``.

    Returns ``(U, SolveStats)`` where ``U`` has Riemannian gradient norm
    at most ``config.grad_tol`` or is the iterate after ``max_outer``
    outer iterations.
    """
    cfg = config or TrustRegionConfig()
    cfg.validate()
    U = np.asarray(U0, dtype=np.float64)
    delta_bar = cfg.delta_bar if cfg.delta_bar is not None else math.sqrt(U.size)
    delta = cfg.delta0 if cfg.delta0 is not None else delta_bar / 8.0
    if delta > delta_bar:
        raise ConfigError("delta0 cannot exceed delta_bar")

    def eval_cost(V):
        f = problem.value(V)
        if not np.isfinite(f):
            raise NumericalError("objective returned a non-finite value")
        return f

    def eval_grad(V):
        G = problem.euclidean_gradient(V)
        if not np.all(np.isfinite(G)):
            raise NumericalError("gradient returned non-finite values")
        return G

    stats = SolveStats()
    f = eval_cost(U)
    Geuc = eval_grad(U)
    grad = manifold.egrad_to_rgrad(U, Geuc)
    grad_norm = manifold.norm(U, grad)
    stats.cost_trace.append(f)
    stats.grad_norm_trace.append(grad_norm)

    if grad_norm <= cfg.grad_tol:
        stats.reason = "gradient norm below tolerance"
        return U, stats

    for k in range(1, cfg.max_outer + 1):
        def hess_operator(xi, _U=U, _G=Geuc):
            DG = problem.euclidean_gradient_derivative(_U, xi)
            return manifold.ehess_to_rhess(_U, _G, DG, xi)

        tcg = truncated_cg(manifold, U, grad, hess_operator, delta,
                           theta=cfg.theta, kappa=cfg.kappa,
                           max_inner=cfg.max_inner)
        stats.inner_iterations += tcg.iterations

        U_prop = manifold.retract(U, tcg.step)
        f_prop = eval_cost(U_prop)
        predicted = -(manifold.inner(U, grad, tcg.step)
                      + 0.5 * manifold.inner(U, tcg.step, tcg.hess_step))
        actual = f - f_prop

        # Reject outright when the model reduction is in the numerical
        # noise of F; dividing by it would make rho meaningless.
        guard = 1e-15 * abs(f)
        if predicted > guard:
            rho = actual / predicted
        else:
            rho = -np.inf

        if rho < 0.25:
            delta = delta / 4.0
        elif rho > 0.75 and tcg.reason in (NEGATIVE_CURVATURE, BOUNDARY):
            delta = min(2.0 * delta, delta_bar)

        accepted = rho > cfg.rho_prime
        if accepted:
            U = U_prop
            f = f_prop
            Geuc = eval_grad(U)
            grad = manifold.egrad_to_rgrad(U, Geuc)
            grad_norm = manifold.norm(U, grad)

        stats.iterations = k
        stats.cost_trace.append(f)
        stats.grad_norm_trace.append(grad_norm)
        stats.records.append(IterationRecord(
            iteration=k, cost=f, grad_norm=grad_norm, delta=delta,
            rho=float(rho), inner_iterations=tcg.iterations,
            accepted=accepted, tcg_reason=tcg.reason,
        ))

        if grad_norm <= cfg.grad_tol:
            stats.reason = "gradient norm below tolerance"
            return U, stats

    stats.reason = "outer iteration cap"
    return U, stats
