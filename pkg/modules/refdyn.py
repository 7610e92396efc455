"""
refdyn.py - Dinámicas de referencia (forwardstepping)

Cada generador devuelve la derivada más alta de z a partir de la pila
(z, z', ..., d^(l-1)z), las mediciones propias y los datos (retardados)
de los vecinos. Nunca diferencia señales: la pila se integra junto con
la planta.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, SimulationAbort
from .models import jacobian_rate, skew
from .utils import sgn

CONSENSUS_VARIANTS = {
    # nombre: (orden, usa aceleración propia, admite conmutación)
    "first-order": (1, False, True),
    "second-order-fixed": (2, True, False),
    "second-order-fixed-position": (2, True, False),
    "second-order-switching": (2, False, True),
    "high-order-relative-velocity": (None, False, True),
    "high-order-position": (None, False, True),
}

TRACKING_VARIANTS = {
    # nombre: (orden de la pila expuesta, comparte aceleraciones)
    "order2-sign": (1, False),
    "order3-accel-sharing": (2, True),
    "order3-integral": (1, False),
}


# =============================================================================
# TIPOS
# =============================================================================

@dataclass(frozen=True)
class HurwitzPoly:
    """Raíces κ_r > 0 (ascendentes) y coeficientes α_0..α_{l-1} de Π(θ + κ_r)."""
    roots: Tuple[float, ...]
    coeffs: Tuple[float, ...]

    @property
    def order(self) -> int:
        return len(self.roots)

    @property
    def kappa0(self) -> float:
        return self.roots[0]

    def companion(self) -> np.ndarray:
        """Matriz compañera; sus autovalores son -κ_r."""
        l = self.order
        C = np.zeros((l, l))
        C[:-1, 1:] = np.eye(l - 1)
        C[-1, :] = -np.asarray(self.coeffs)
        return C


def hurwitz_from_roots(roots: Sequence[float]) -> HurwitzPoly:
    roots = tuple(sorted(float(r) for r in roots))
    if not roots:
        raise ConfigurationError("se necesita al menos una raiz")
    if any(not r > 0.0 for r in roots):
        raise ConfigurationError(f"roots must be strictly positive (got {list(roots)})")
    poly = np.poly(-np.asarray(roots))  # [1, α_{l-1}, ..., α_0]
    coeffs = tuple(float(c) for c in poly[::-1][:-1])
    return HurwitzPoly(roots=roots, coeffs=coeffs)


class NeighborSample(NamedTuple):
    """Datos de un vecino j ponderados por w_ij (retardados en consenso)."""
    w: float
    q: np.ndarray
    dq: Optional[np.ndarray] = None
    ddq: Optional[np.ndarray] = None
    dz: Optional[np.ndarray] = None


@dataclass
class RefDynState:
    order: int
    stack: np.ndarray

    def __post_init__(self):
        self.stack = np.atleast_2d(np.asarray(self.stack, dtype=float))
        if self.stack.shape[0] != self.order:
            raise ConfigurationError(f"la pila debe tener {self.order} filas")


@dataclass(frozen=True)
class LeaderProfile:
    """q_0(t) = offset + A sin(ω t + φ) por articulación."""
    amplitude: Tuple[float, ...]
    frequency: Tuple[float, ...]
    phase: Tuple[float, ...]
    offset: Tuple[float, ...]

    @classmethod
    def from_dict(cls, data: dict, dof: int) -> "LeaderProfile":
        def vec(key, default):
            v = data.get(key, default)
            v = [float(v)] * dof if np.isscalar(v) else [float(c) for c in v]
            if len(v) != dof:
                raise ConfigurationError(f"leader.{key}: se esperaban {dof} valores")
            return tuple(v)
        return cls(vec("amplitude", 0.5), vec("frequency", 1.0), vec("phase", 0.0), vec("offset", 0.0))

    def derivative(self, t: float, k: int) -> np.ndarray:
        A = np.asarray(self.amplitude)
        w = np.asarray(self.frequency)
        arg = w * t + np.asarray(self.phase) + k * np.pi / 2.0
        out = A * w ** k * np.sin(arg)
        if k == 0:
            out = out + np.asarray(self.offset)
        return out

    def signals(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.derivative(t, k) for k in range(4))

    def sup_combination(self, coeffs: Sequence[float]) -> float:
        """sup_t |Σ_k c_k d^k q_0/dt^k|_∞ por fasores (el offset no entra si c_0 = 0)."""
        best = 0.0
        for A, w in zip(self.amplitude, self.frequency):
            phasor = sum(c * (1j * w) ** k for k, c in enumerate(coeffs))
            best = max(best, abs(A) * abs(phasor))
        return float(best)


@dataclass(frozen=True)
class TrackingAux:
    alpha: float
    beta: float
    gamma: float
    bound: float

    def __post_init__(self):
        if not self.gamma > self.bound:
            raise ConfigurationError(
                f"gamma must exceed sup|xi0_dot| = {self.bound:.6g} (got {self.gamma:.6g})")


def leader_bound(variant: str, leader: LeaderProfile, alpha: float, beta: float) -> float:
    """Cota analítica de la señal que γ debe dominar según la variante."""
    if variant == "order2-sign":
        # ξ0' = q0'' + α q0'
        return leader.sup_combination([0.0, alpha, 1.0])
    # ξ0*' = q0''' + β q0'' + α q0'
    return leader.sup_combination([0.0, alpha, beta, 1.0])


# =============================================================================
# CONSENSO
# =============================================================================

def consensus_order(variant: str, poly: HurwitzPoly) -> int:
    if variant not in CONSENSUS_VARIANTS:
        raise ConfigurationError(f"variante desconocida '{variant}'")
    order = CONSENSUS_VARIANTS[variant][0]
    if order is None:
        if poly.order < 2:
            raise ConfigurationError(f"{variant} requiere al menos dos raices")
        return poly.order
    if poly.order != order:
        raise ConfigurationError(f"{variant} requiere {order} raiz(es), hay {poly.order}")
    return order


def consensus_ref_deriv(variant: str, stack: np.ndarray, q: np.ndarray, dq: np.ndarray,
                        neighbors: Sequence[NeighborSample], poly: HurwitzPoly,
                        ddq: Optional[np.ndarray] = None) -> np.ndarray:
    """
    d^l z / dt^l de la variante seleccionada.

    stack: filas z, z', ..., d^(l-1)z. neighbors: (w_ij, q_j, q_j') en
    t - T_ij. ddq solo lo consumen las variantes de topología fija.
    """
    stack = np.atleast_2d(stack)
    if variant == "first-order":
        a = poly.roots[0]
        xi = dq + a * q
        acc = np.zeros_like(q)
        for nb in neighbors:
            acc += nb.w * (xi - (nb.dq + a * nb.q))
        return -a * dq - acc

    if variant in ("second-order-fixed", "second-order-fixed-position", "second-order-switching"):
        a, b = poly.roots[0], poly.roots[1]
        xi = dq + a * q
        acc = np.zeros_like(q)
        if variant == "second-order-switching":
            dz = stack[1]
            for nb in neighbors:
                acc += nb.w * (dz + a * dq + b * xi - b * (nb.dq + a * nb.q))
            return -(a + b) * dz - a * b * dq - acc
        if ddq is None:
            raise ConfigurationError(f"{variant} consume la aceleracion propia")
        if variant == "second-order-fixed":
            dxi = ddq + a * dq
            for nb in neighbors:
                acc += nb.w * (dxi + b * xi - b * (nb.dq + a * nb.q))
        else:
            for nb in neighbors:
                acc += nb.w * (ddq + (a + b) * dq + a * b * q - a * b * nb.q)
        return -(a + b) * ddq - a * b * dq - acc

    if variant in ("high-order-relative-velocity", "high-order-position"):
        l = poly.order
        al = poly.coeffs
        # parte propia: -Σ_{r>=1} α_r d^r z - α_0 q'
        own = -al[0] * dq
        for r in range(1, l):
            own = own - al[r] * stack[r]
        # corchete: d^{l-1} z + Σ_{r=2}^{l-1} α_r d^{r-1} z + α_1 q' + α_0 q
        bracket = stack[l - 1] + al[1] * dq + al[0] * q
        for r in range(2, l):
            bracket = bracket + al[r] * stack[r - 1]
        acc = np.zeros_like(q)
        for nb in neighbors:
            term = bracket - al[0] * nb.q
            if variant == "high-order-relative-velocity":
                term = term - (al[0] / poly.kappa0) * nb.dq
            acc += nb.w * term
        return own - acc

    raise ConfigurationError(f"variante desconocida '{variant}'")


def consensus_ref_deriv_manip(stack: np.ndarray, q: np.ndarray, dq: np.ndarray,
                              neighbors: Sequence[NeighborSample], poly: HurwitzPoly,
                              ddq: np.ndarray, lambda_m: float, s: np.ndarray) -> np.ndarray:
    """Variante fija de segundo orden más λ_M (q' - z)."""
    base = consensus_ref_deriv("second-order-fixed", stack, q, dq, neighbors, poly, ddq=ddq)
    if lambda_m == 0.0:
        return base
    return base + lambda_m * s


# =============================================================================
# TPV
# =============================================================================

def tpv_ref_deriv(stack: np.ndarray, x: np.ndarray, dx: np.ndarray,
                  neighbors: Sequence[NeighborSample], alpha: float, beta: float, gamma: float) -> np.ndarray:
    """z''' del generador de cuarto orden; los vecinos solo aportan posición retardada."""
    z, dz, ddz = stack[0], stack[1], stack[2]
    c1 = alpha + beta + gamma
    c2 = alpha * beta + alpha * gamma + beta * gamma
    c3 = alpha * beta * gamma
    acc = np.zeros_like(x)
    bracket = ddz + c1 * dz + c2 * dx + c3 * x
    for nb in neighbors:
        acc += nb.w * (bracket - c3 * nb.q)
    return -c1 * ddz - c2 * dz - c3 * dx - acc


# =============================================================================
# ESPACIO DE TAREA
# =============================================================================

def taskspace_ref_deriv(z: np.ndarray, q: np.ndarray, dq: np.ndarray, dx_err: np.ndarray,
                        theta_hat: np.ndarray, dtheta_hat: np.ndarray,
                        J_hat: np.ndarray, dxd: np.ndarray, ddxd: np.ndarray,
                        alpha: float, Kstar: np.ndarray, cond_cap: float = 1e6,
                        t: float = 0.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Devuelve (z', z_r, z_r') con
        z_r = Ĵ⁻¹ x_d',  z_r' = Ĵ⁻¹ (x_d'' - Ĵ' z_r),
        z' = z_r' - α (z - z_r) - Ĵᵀ K* Δx.
    """
    cond = np.linalg.cond(J_hat)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SimulationAbort("singularity", f"cond(J_hat) = {cond:.3g} > {cond_cap:.3g}",
                              t=t, agent=0, value=cond)
    z_r = np.linalg.solve(J_hat, dxd)
    dJ = jacobian_rate(q, dq, theta_hat, dtheta_hat)
    dz_r = np.linalg.solve(J_hat, ddxd - dJ @ z_r)
    dz = dz_r - alpha * (z - z_r) - J_hat.T @ Kstar @ dx_err
    return dz, z_r, dz_r


# =============================================================================
# ACTITUD
# =============================================================================

def spacecraft_ref_deriv(z: np.ndarray, R: np.ndarray, w_dI: np.ndarray, dw_dI: np.ndarray,
                         dq_v: np.ndarray, alpha1: float, alpha2: float) -> np.ndarray:
    """z' = Rᵀω̇_d^I - S(z)Rᵀω_d^I - α2 (z - ω_d) - α1 Δq_v."""
    w_d = R.T @ w_dI
    return R.T @ dw_dI - skew(z) @ w_d - alpha2 * (z - w_d) - alpha1 * dq_v


# =============================================================================
# SEGUIMIENTO DISTRIBUIDO
# =============================================================================

def tracking_ref_deriv(variant: str, q: np.ndarray, dq: np.ndarray,
                       neighbors: Sequence[NeighborSample], aux: TrackingAux,
                       ddq: Optional[np.ndarray] = None,
                       integrals: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                       c_star: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Derivada más alta de z para el seguimiento con líder (vértice 0).
    Los vecinos llegan sin retardo; el líder es un vecino más con w_i0.

    - order2-sign:          z'  = -α q' - Σw(ξ_i - ξ_j) - γ sgn[Σw(ξ_i - ξ_j)]
    - order3-accel-sharing: z'' = -β q'' - α q' - Σw(ξ*_i - ξ*_j) - γ sgn[...]
    - order3-integral:      z'  = -β q' - α q - Σw(q_i' - q_j') - Σw I1 - γ I2 + c**
    """
    a, b, g = aux.alpha, aux.beta, aux.gamma
    if variant == "order2-sign":
        xi = dq + a * q
        e = np.zeros_like(q)
        for nb in neighbors:
            e += nb.w * (xi - (nb.dq + a * nb.q))
        return -a * dq - e - g * sgn(e)
    if variant == "order3-accel-sharing":
        if ddq is None:
            raise ConfigurationError("order3-accel-sharing consume aceleraciones")
        xi = ddq + b * dq + a * q
        e = np.zeros_like(q)
        for nb in neighbors:
            e += nb.w * (xi - (nb.ddq + b * nb.dq + a * nb.q))
        return -b * ddq - a * dq - e - g * sgn(e)
    if variant == "order3-integral":
        i1, i2 = integrals if integrals is not None else (np.zeros_like(q), np.zeros_like(q))
        rel = np.zeros_like(q)
        for nb in neighbors:
            rel += nb.w * (dq - nb.dq)
        out = -b * dq - a * q - rel - i1 - g * i2
        if c_star is not None:
            out = out + c_star
        return out
    raise ConfigurationError(f"variante de seguimiento desconocida '{variant}'")


def tracking_integral_rates(q: np.ndarray, dq: np.ndarray, dz: np.ndarray,
                            neighbors: Sequence[NeighborSample],
                            aux: TrackingAux) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrandos de la variante sin aceleración:
        I1' = Σw(β q_i' + α q_i - β q_j' - α q_j)
        I2' = sgn[Σw(ξ**_i - ξ**_j)],  ξ** = z' + β q' + α q
    I1 ya incluye los pesos, de modo que entra restando directamente.
    """
    a, b = aux.alpha, aux.beta
    own = b * dq + a * q
    xi2 = dz + own
    i1 = np.zeros_like(q)
    e = np.zeros_like(q)
    for nb in neighbors:
        other = b * nb.dq + a * nb.q
        i1 += nb.w * (own - other)
        e += nb.w * (xi2 - (nb.dz + other))
    return i1, sgn(e)


# =============================================================================
# MASA PUNTUAL
# =============================================================================

def pointmass_ref_deriv(stack: np.ndarray, x, xd, dxd, ddxd, dddxd, alphas: Sequence[float]) -> np.ndarray:
    """z'' = x_d''' - α2 (z' - x_d'') - α1 (z - x_d') - α0 (x - x_d)."""
    z, dz = stack[0], stack[1]
    a0, a1, a2 = alphas
    return dddxd - a2 * (dz - ddxd) - a1 * (z - dxd) - a0 * (x - xd)
