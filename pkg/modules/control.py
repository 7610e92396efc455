"""
control.py - Leyes de control y de adaptación

Funciones puras por paso. El estado interno (filtros, acumuladores,
cinemática sombra) lo integra el lazo cerrado dueño de cada agente.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import SimulationAbort
from .interfaces import ILagrangianModel
from .models import E3, d_matrix, kinematic_regressor, skew
from .refdyn import NeighborSample
from .utils import as_spd_matrix, positive

BASELINE_CLAMP = 1e6
SIGMA_FLOOR_RATIO = 0.1


# =============================================================================
# ESTADOS
# =============================================================================

@dataclass
class AdaptiveState:
    """Estimaciones adaptativas de un agente y sus ganancias."""
    theta_hat: np.ndarray
    Gamma: np.ndarray
    kin_hat: Optional[np.ndarray] = None
    Lambda: Optional[np.ndarray] = None
    m_hat: Optional[float] = None
    gamma_star: Optional[float] = None

    def __post_init__(self):
        self.theta_hat = np.asarray(self.theta_hat, dtype=float)
        self.Gamma = as_spd_matrix(self.Gamma, self.theta_hat.shape[0], "Gamma")
        if self.kin_hat is not None:
            self.kin_hat = np.asarray(self.kin_hat, dtype=float)
            self.Lambda = as_spd_matrix(self.Lambda if self.Lambda is not None else 1.0,
                                        self.kin_hat.shape[0], "Lambda")
        if self.m_hat is not None:
            self.gamma_star = positive(self.gamma_star if self.gamma_star is not None else 1.0, "gamma_star")


@dataclass
class FilterState:
    """Filtro pasivo: y, estado auxiliar η y ganancias."""
    y: np.ndarray
    eta: np.ndarray
    lambda_f: np.ndarray
    K: Optional[np.ndarray] = None

    def __post_init__(self):
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        dim = self.y.shape[0]
        self.lambda_f = as_spd_matrix(self.lambda_f, dim, "lambda_f")
        self.K = as_spd_matrix(1.0 if self.K is None else self.K, dim, "K")


@dataclass
class TpvControllerState:
    sigma: float
    k: float
    alpha_star: float
    sigma_min: float
    m_hat: Optional[float] = None
    accumulator: float = 0.0

    def __post_init__(self):
        positive(self.alpha_star, "alpha_star")
        positive(self.sigma_min, "sigma_min")


def sigma_floor(mass: float, gravity: float, ratio: float = SIGMA_FLOOR_RATIO) -> float:
    """σ_min = ratio · m · g."""
    return ratio * mass * gravity


# =============================================================================
# LAGRANGIANOS
# =============================================================================

def slotine_li_torque(model: ILagrangianModel, q, dq, z, dz, a: AdaptiveState,
                      K: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """τ = -K s + Y(q, q', z, z') ϑ̂ ;  ϑ̂' = -Γ Yᵀ s  con s = q' - z."""
    s = np.asarray(dq) - np.asarray(z)
    Y = model.regressor(q, dq, z, dz)
    tau = -K @ s + Y @ a.theta_hat
    dtheta = -a.Gamma @ Y.T @ s
    return tau, dtheta


tracking_adaptive_torque = slotine_li_torque


def baseline_reference(q, dq, neighbors: Sequence[NeighborSample],
                       rates: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Referencia de velocidad del backstepping y su derivada analítica
    entre conmutaciones:
        q'_r  = -Σ w (q_i - q_j(t-T))
        q''_r = -Σ w (q'_i - (1 - T') q'_j(t-T))
    """
    dq_r = np.zeros_like(np.asarray(q, dtype=float))
    ddq_r = np.zeros_like(dq_r)
    for nb, rate in zip(neighbors, rates):
        dq_r -= nb.w * (q - nb.q)
        ddq_r -= nb.w * (dq - (1.0 - rate) * nb.dq)
    return dq_r, ddq_r


def backstepping_baseline_torque(model: ILagrangianModel, q, dq, neighbors: Sequence[NeighborSample],
                                 rates: Sequence[float], a: AdaptiveState, K: np.ndarray,
                                 impulse: Optional[np.ndarray] = None,
                                 clamp: float = BASELINE_CLAMP) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Baseline de backstepping. `impulse` es Δq'_r / h en los pasos que
    contienen un salto de topología o de retardo.

    Devuelve (τ, ϑ̂', |q''_r| sin recortar).
    """
    dq_r, ddq_r = baseline_reference(q, dq, neighbors, rates)
    if impulse is not None:
        ddq_r = ddq_r + impulse
    raw = float(np.max(np.abs(ddq_r))) if ddq_r.size else 0.0
    ddq_r = np.clip(ddq_r, -clamp, clamp)
    tau, dtheta = slotine_li_torque(model, q, dq, dq_r, ddq_r, a, K)
    return tau, dtheta, raw


# =============================================================================
# MASA PUNTUAL
# =============================================================================

def pointmass_filter_output(x, int_z, eta, lambda_f: float):
    """y = λ_f (χ - η) con χ = x - ∫z; no lee la velocidad."""
    return lambda_f * (np.asarray(x) - np.asarray(int_z) - np.asarray(eta))


def pointmass_control(x, z, dz, int_z, eta, m_hat: float, k: float,
                      lambda_f: float) -> Tuple[np.ndarray, dict]:
    """
    u = m̂ z' - k y.

    Devuelve u y las derivadas de los estados internos del filtro
    (∫z y η). La derivada de m̂ vive en el acumulador por partes.
    """
    y = pointmass_filter_output(x, int_z, eta, lambda_f)
    u = m_hat * np.asarray(dz) - k * y
    return u, {"int_z": np.asarray(z, dtype=float), "eta": y, "y": y}


def pointmass_mass_estimate(m_hat0: float, gamma_star: float, x, z, dz,
                            x0, z0, dz0, integral: float) -> float:
    """
    m̂ = m̂(0) - γ* [z' x - ½ z²]_0^t + γ* ∫ x z'' dt.

    Es la forma cerrada de m̂' = -γ* z' (x' - z) integrada por partes.
    """
    boundary = float(np.dot(dz, x) - 0.5 * np.dot(z, z)) - float(np.dot(dz0, x0) - 0.5 * np.dot(z0, z0))
    return m_hat0 - gamma_star * boundary + gamma_star * integral


def pointmass_accumulator_rate(x, ddz) -> float:
    return float(np.dot(x, ddz))


# =============================================================================
# TPV
# =============================================================================

def tpv_fbl_extract(u, R: np.ndarray, sigma: float, c: float, sigma_min: float = 0.0,
                    t: float = 0.0, agent: int = -1) -> Tuple[float, np.ndarray]:
    """
    Invierte u = -R [σ ω², -σ ω¹, σ' + c σ]ᵀ.

    Devuelve (σ', ω) con ω³ = 0.
    """
    if sigma < sigma_min:
        raise SimulationAbort("thrust-floor", f"sigma={sigma:.6g} < sigma_min={sigma_min:.6g}",
                              t=t, agent=agent, value=sigma)
    v = -R.T @ np.asarray(u, dtype=float)
    omega = np.array([-v[1] / sigma, v[0] / sigma, 0.0])
    dsigma = v[2] - c * sigma
    return float(dsigma), omega


def tpv_fbl_assemble(R: np.ndarray, sigma: float, dsigma: float, omega, c: float) -> np.ndarray:
    return -R @ np.array([sigma * omega[1], -sigma * omega[0], dsigma + c * sigma])


def tpv_continuous_command(x, dx, neighbors: Sequence[NeighborSample], mass: float,
                           alpha: float, beta: float, gravity: float) -> Tuple[np.ndarray, float]:
    """
    u = m ψ - c m g e3 con c = α + β + Σw y
    ψ = -αβ x' - Σ w [(α+β) x' + αβ x - αβ x_j(t-T)].

    Devuelve (u, c); c es la constante de linealización del paso.
    """
    ab = alpha * beta
    psi = -ab * np.asarray(dx, dtype=float)
    wsum = 0.0
    for nb in neighbors:
        psi = psi - nb.w * ((alpha + beta) * dx + ab * x - ab * nb.q)
        wsum += nb.w
    c = alpha + beta + wsum
    return mass * psi - c * mass * gravity * E3, c


def tpv_differentiable_command(ddz, dz, s_star, mass: float, k: float, alpha_star: float,
                               gravity: float) -> np.ndarray:
    """u* = m (z'' + α* z') - k s* - α* m g e3."""
    return mass * (np.asarray(ddz) + alpha_star * np.asarray(dz)) - k * np.asarray(s_star) \
        - alpha_star * mass * gravity * E3


def tpv_regressor(ddz, dz, alpha_star: float, gravity: float) -> np.ndarray:
    """φ = z'' + α* z' - α* g e3."""
    return np.asarray(ddz) + alpha_star * np.asarray(dz) - alpha_star * gravity * E3


def tpv_adaptive_command(ddz, dz, ds_star, m_hat: float, gamma_star: float, alpha_star: float,
                         gravity: float) -> Tuple[np.ndarray, float]:
    """
    u* = m̂ φ ;  m̂' = -γ* φᵀ s*'.

    La derivada se devuelve para el oráculo directo; el lazo usa el
    acumulador por partes y nunca lee aceleraciones.
    """
    phi = tpv_regressor(ddz, dz, alpha_star, gravity)
    dm = 0.0 if ds_star is None else -gamma_star * float(phi @ np.asarray(ds_star))
    return m_hat * phi, dm


def tpv_accumulator_rate(dddz, ddz, dz, dx, alpha_star: float, gravity: float) -> float:
    """I' = φᵀ z' + φ'ᵀ x' con φ' = z''' + α* z''."""
    phi = tpv_regressor(ddz, dz, alpha_star, gravity)
    dphi = np.asarray(dddz) + alpha_star * np.asarray(ddz)
    return float(phi @ np.asarray(dz) + dphi @ np.asarray(dx))


def tpv_mass_estimate(m_hat0: float, gamma_star: float, phi, dx, phi0, dx0, integral: float) -> float:
    """m̂ = m̂(0) - γ* [φᵀ x']_0^t + γ* I."""
    boundary = float(np.dot(phi, dx)) - float(np.dot(phi0, dx0))
    return m_hat0 - gamma_star * boundary + gamma_star * integral


# =============================================================================
# ESPACIO DE TAREA
# =============================================================================

def taskspace_adaptation(q, dq, dx_err, a: AdaptiveState, Kstar: np.ndarray) -> np.ndarray:
    """θ̂' = Λ Z(q, q')ᵀ K* Δx."""
    Z = kinematic_regressor(q, dq)
    return a.Lambda @ Z.T @ Kstar @ dx_err


def taskspace_control(model: ILagrangianModel, q, dq, z, dz, dx_err, J_hat: np.ndarray,
                      a: AdaptiveState, K: np.ndarray, Kstar: np.ndarray,
                      kappa: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    τ = -K s - κ Ĵᵀ K* Δx + Y ϑ̂ ;  ϑ̂' = -Γ Yᵀ s ;  θ̂' = Λ Zᵀ K* Δx.
    """
    tau, dtheta = slotine_li_torque(model, q, dq, z, dz, a, K)
    tau = tau - kappa * J_hat.T @ Kstar @ dx_err
    dkin = taskspace_adaptation(q, dq, dx_err, a, Kstar)
    return tau, dtheta, dkin


# =============================================================================
# NAVE ESPACIAL
# =============================================================================

def spacecraft_filter_rate(dq_star, y, K: np.ndarray, Lambda_f: np.ndarray) -> np.ndarray:
    """y' = K Δq* - Λ_f y (nivel de posición)."""
    return K @ np.asarray(dq_star) - Lambda_f @ np.asarray(y)


def spacecraft_control(z, dz, h, dq_star, y, inertia: np.ndarray, K: np.ndarray,
                       Lambda_f: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    τ = M z' - S(h) z - D(Δq*)ᵀ K y' sin leer ω.

    Devuelve (τ, y'); la cinemática sombra la integra el lazo.
    """
    dy = spacecraft_filter_rate(dq_star, y, K, Lambda_f)
    tau = inertia @ np.asarray(dz) - skew(h) @ np.asarray(z) - d_matrix(dq_star).T @ K @ dy
    return tau, dy
