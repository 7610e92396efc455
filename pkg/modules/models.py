"""
models.py - Plantas y utilidades de actitud

Contenido:
- Utilidades SO(3): skew / unskew, ortonormalización, parámetros de Euler
- Plantas Lagrangianas: brazo plano de dos eslabones y masa puntual
- Cinemática del brazo (posición del efector, Jacobiano, regresor Z)
- Vehículo propulsado por empuje (TPV)
- Nave espacial con ruedas de reacción
- Perfiles de actitud deseada (senoidales en uno o dos ejes)

Convención: e3 = [0, 0, 1] y la gravedad actúa como +g·e3 (eje z hacia abajo).
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import polar

from .errors import ConfigurationError, ModelError
from .interfaces import ILagrangianModel

E3 = np.array([0.0, 0.0, 1.0])


# =============================================================================
# SO(3)
# =============================================================================

def skew(b: Sequence[float]) -> np.ndarray:
    """S(b) con S(b) c = b × c."""
    b1, b2, b3 = np.asarray(b, dtype=float)
    return np.array([[0.0, -b3, b2],
                     [b3, 0.0, -b1],
                     [-b2, b1, 0.0]])


def unskew(S: np.ndarray) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Proyección polar sobre SO(3)."""
    U, _ = polar(R)
    return U


# =============================================================================
# PARÁMETROS DE EULER
# =============================================================================

@dataclass(frozen=True)
class EulerParam:
    """Cuaternión unitario (q_v, q_o), parte vectorial primero."""
    q_v: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    q_o: float = 1.0

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "EulerParam":
        a = np.asarray(a, dtype=float)
        return cls(q_v=tuple(a[:3].tolist()), q_o=float(a[3]))

    @classmethod
    def identity(cls) -> "EulerParam":
        return cls()

    @property
    def array(self) -> np.ndarray:
        return np.array([*self.q_v, self.q_o])

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def rotation(self) -> np.ndarray:
        return rotation_from_quat(self.array)


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q)


def quat_multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Producto de Hamilton p ⊗ q, con formato [v, o]."""
    pv, po = p[:3], p[3]
    qv, qo = q[:3], q[3]
    return np.concatenate([po * qv + qo * pv + np.cross(pv, qv), [po * qo - pv @ qv]])


def rotation_from_quat(q: np.ndarray) -> np.ndarray:
    """R (cuerpo -> inercial) = (q_o² - q_vᵀq_v) I + 2 q_v q_vᵀ + 2 q_o S(q_v)."""
    qv, qo = q[:3], q[3]
    return (qo * qo - qv @ qv) * np.eye(3) + 2.0 * np.outer(qv, qv) + 2.0 * qo * skew(qv)


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    return np.concatenate([np.sin(angle / 2.0) * n, [np.cos(angle / 2.0)]])


def _euler_error_array(q: np.ndarray, qz: np.ndarray) -> np.ndarray:
    qv, qo = q[:3], q[3]
    qzv, qzo = qz[:3], qz[3]
    dv = qzo * qv - qo * qzv + np.cross(qv, qzv)
    do = qo * qzo + qv @ qzv
    return np.concatenate([dv, [do]])


def euler_error(q: EulerParam, q_z: EulerParam) -> EulerParam:
    """Δq* = q_z⁻¹ ⊗ q."""
    return EulerParam.from_array(_euler_error_array(q.array, q_z.array))


def d_matrix(dq) -> np.ndarray:
    """D(Δq*) = ½ [Δq_o I + S(Δq_v); -Δq_vᵀ], 4×3."""
    a = dq.array if isinstance(dq, EulerParam) else np.asarray(dq, dtype=float)
    dv, do = a[:3], a[3]
    return 0.5 * np.vstack([do * np.eye(3) + skew(dv), -dv[None, :]])


def quat_kinematics(q: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """q' con ω en el marco del cuerpo."""
    return d_matrix(q) @ omega


def quat_kinematics_inertial(q: np.ndarray, w_inertial: np.ndarray) -> np.ndarray:
    """q' con la velocidad angular expresada en el marco inercial."""
    qv, qo = q[:3], q[3]
    dv = 0.5 * (qo * np.eye(3) - skew(qv)) @ w_inertial
    do = -0.5 * qv @ w_inertial
    return np.concatenate([dv, [do]])


# =============================================================================
# PLANTAS LAGRANGIANAS
# =============================================================================

@dataclass(frozen=True)
class TwoLinkArm(ILagrangianModel):
    """
    Brazo plano vertical de dos eslabones rotacionales.

    Parametrización mínima (5 parámetros):
        p1 = m1 lc1² + m2 (l1² + lc2²) + I1 + I2
        p2 = m2 l1 lc2
        p3 = m2 lc2² + I2
        p4 = (m1 lc1 + m2 l1) g
        p5 = m2 lc2 g
    Ángulos medidos desde la horizontal.
    """
    m1: float = 1.0
    m2: float = 0.8
    l1: float = 0.5
    l2: float = 0.4
    lc1: float = None
    lc2: float = None
    I1: float = None
    I2: float = None
    g0: float = 9.81

    def __post_init__(self):
        if self.lc1 is None:
            object.__setattr__(self, "lc1", self.l1 / 2.0)
        if self.lc2 is None:
            object.__setattr__(self, "lc2", self.l2 / 2.0)
        if self.I1 is None:
            object.__setattr__(self, "I1", self.m1 * self.l1 ** 2 / 12.0)
        if self.I2 is None:
            object.__setattr__(self, "I2", self.m2 * self.l2 ** 2 / 12.0)
        for name in ("m1", "m2", "l1", "l2", "lc1", "lc2", "I1", "I2"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(f"parametro fisico {name} debe ser positivo")
        if self.g0 < 0.0:
            raise ConfigurationError("la gravedad no puede ser negativa")
        object.__setattr__(self, "_params", np.array([
            self.m1 * self.lc1 ** 2 + self.m2 * (self.l1 ** 2 + self.lc2 ** 2) + self.I1 + self.I2,
            self.m2 * self.l1 * self.lc2,
            self.m2 * self.lc2 ** 2 + self.I2,
            (self.m1 * self.lc1 + self.m2 * self.l1) * self.g0,
            self.m2 * self.lc2 * self.g0,
        ]))

    @property
    def dof(self) -> int:
        return 2

    @property
    def params(self) -> np.ndarray:
        return self._params.copy()

    @property
    def kinematic_params(self) -> np.ndarray:
        return np.array([self.l1, self.l2])

    def inertia(self, q):
        p1, p2, p3, _, _ = self._params
        c2 = np.cos(q[1])
        return np.array([[p1 + 2.0 * p2 * c2, p3 + p2 * c2],
                         [p3 + p2 * c2, p3]])

    def coriolis(self, q, dq):
        p2 = self._params[1]
        hh = -p2 * np.sin(q[1])
        return np.array([[hh * dq[1], hh * (dq[0] + dq[1])],
                         [-hh * dq[0], 0.0]])

    def gravity(self, q):
        _, _, _, p4, p5 = self._params
        c12 = np.cos(q[0] + q[1])
        return np.array([p4 * np.cos(q[0]) + p5 * c12, p5 * c12])

    def regressor(self, q, dq, zeta, dzeta):
        c1, c2 = np.cos(q[0]), np.cos(q[1])
        s2 = np.sin(q[1])
        c12 = np.cos(q[0] + q[1])
        y12 = (2.0 * c2 * dzeta[0] + c2 * dzeta[1]
               - s2 * dq[1] * zeta[0] - s2 * (dq[0] + dq[1]) * zeta[1])
        y22 = c2 * dzeta[0] + s2 * dq[0] * zeta[0]
        return np.array([[dzeta[0], y12, dzeta[1], c1, c12],
                         [0.0, y22, dzeta[0] + dzeta[1], 0.0, c12]])


@dataclass(frozen=True)
class PointMass(ILagrangianModel):
    """m x'' = u; M = m I, C = 0, g = 0, theta = [m]."""
    mass: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ConfigurationError("la masa debe ser positiva")

    @property
    def dof(self) -> int:
        return self.dim

    @property
    def params(self) -> np.ndarray:
        return np.array([self.mass])

    def inertia(self, q):
        return self.mass * np.eye(self.dim)

    def coriolis(self, q, dq):
        return np.zeros((self.dim, self.dim))

    def gravity(self, q):
        return np.zeros(self.dim)

    def regressor(self, q, dq, zeta, dzeta):
        return np.asarray(dzeta, dtype=float).reshape(self.dim, 1)


def lagrangian_accel(model: ILagrangianModel, q, dq, tau) -> np.ndarray:
    """q'' = M(q)⁻¹ (tau - C q' - g)."""
    M = model.inertia(q)
    rhs = np.asarray(tau, dtype=float) - model.coriolis(q, dq) @ dq - model.gravity(q)
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as e:
        raise ModelError(f"M(q) singular en q={np.asarray(q).tolist()}: {e}")


def regressor(model: ILagrangianModel, q, dq, zeta, dzeta) -> np.ndarray:
    return model.regressor(q, dq, zeta, dzeta)


PLANT_TYPES = ("two-link-arm", "point-mass")


def plant_from_dict(data: dict) -> ILagrangianModel:
    """Construye la planta Lagrangiana declarada en el bloque `plant`."""
    data = dict(data)
    kind = data.pop("type", "two-link-arm")
    try:
        if kind == "two-link-arm":
            return TwoLinkArm(**data)
        if kind == "point-mass":
            return PointMass(mass=float(data.get("mass", 1.0)), dim=int(data.get("dim", 1)))
    except TypeError as e:
        raise ConfigurationError(f"plant: {e}")
    raise ConfigurationError(f"tipo de planta desconocido '{kind}', use {PLANT_TYPES}")


# =============================================================================
# CINEMÁTICA DEL BRAZO
# =============================================================================

def _kin_basis(q) -> Tuple[np.ndarray, np.ndarray]:
    """Matrices A1, A2 con J(q; θ) = θ1 A1 + θ2 A2."""
    s1, c1 = np.sin(q[0]), np.cos(q[0])
    s12, c12 = np.sin(q[0] + q[1]), np.cos(q[0] + q[1])
    A1 = np.array([[-s1, 0.0], [c1, 0.0]])
    A2 = np.array([[-s12, -s12], [c12, c12]])
    return A1, A2


def forward_kinematics(arm: TwoLinkArm, q, theta=None) -> np.ndarray:
    l1, l2 = arm.kinematic_params if theta is None else theta
    return np.array([l1 * np.cos(q[0]) + l2 * np.cos(q[0] + q[1]),
                     l1 * np.sin(q[0]) + l2 * np.sin(q[0] + q[1])])


def jacobian(arm: TwoLinkArm, q, theta=None) -> np.ndarray:
    th = arm.kinematic_params if theta is None else np.asarray(theta, dtype=float)
    A1, A2 = _kin_basis(q)
    return th[0] * A1 + th[1] * A2


def jacobian_rate(q, dq, theta, dtheta) -> np.ndarray:
    """d/dt J(q; θ̂) con q y θ̂ variando."""
    A1, A2 = _kin_basis(q)
    c1, s1 = np.cos(q[0]), np.sin(q[0])
    c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
    dA1 = dq[0] * np.array([[-c1, 0.0], [-s1, 0.0]])
    dA2 = (dq[0] + dq[1]) * np.array([[-c12, -c12], [-s12, -s12]])
    return dtheta[0] * A1 + dtheta[1] * A2 + theta[0] * dA1 + theta[1] * dA2


def kinematic_regressor(q, xi) -> np.ndarray:
    """Z(q, ξ) con J(q) ξ = Z(q, ξ) θ."""
    A1, A2 = _kin_basis(q)
    return np.column_stack([A1 @ xi, A2 @ xi])


# =============================================================================
# VEHÍCULO PROPULSADO POR EMPUJE
# =============================================================================

@dataclass
class TpvState:
    x: np.ndarray
    v: np.ndarray
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    sigma: float = 0.0
    mass: float = 1.0
    gravity: float = 9.81


def tpv_accel(R: np.ndarray, sigma: float, mass: float, gravity: float) -> np.ndarray:
    return -sigma * (R @ E3) / mass + gravity * E3


def tpv_derivative(state: TpvState, sigma: float, omega) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x', v', R') con v' = -σ R e3 / m + g e3 y R' = R S(ω)."""
    dv = tpv_accel(state.R, sigma, state.mass, state.gravity)
    dR = state.R @ skew(omega)
    return np.array(state.v, dtype=float), dv, dR


# =============================================================================
# NAVE ESPACIAL
# =============================================================================

@dataclass
class SpacecraftState:
    attitude: np.ndarray
    omega: np.ndarray
    inertia: np.ndarray
    h_I: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.inertia, dtype=float)
        if not np.allclose(M, M.T) or np.min(np.linalg.eigvalsh(M)) <= 0.0:
            raise ConfigurationError("la inercia debe ser simetrica definida positiva")

    @property
    def R(self) -> np.ndarray:
        return rotation_from_quat(self.attitude)

    @property
    def h(self) -> np.ndarray:
        """Momento total en el marco del cuerpo, h = Rᵀ h_I."""
        return self.R.T @ self.h_I


def spacecraft_derivative(state: SpacecraftState, tau) -> Tuple[np.ndarray, np.ndarray]:
    """(q', ω') con M ω' = S(h) ω + τ."""
    h = state.h
    domega = np.linalg.solve(state.inertia, skew(h) @ state.omega + np.asarray(tau, dtype=float))
    return quat_kinematics(state.attitude, state.omega), domega


@dataclass(frozen=True)
class AttitudeProfile:
    """
    R_d(t) = Π_k Rot(axis_k, A_k sin(2π t / P_k + φ_k)) sobre una actitud base.
    Con amplitud cero en todos los ejes la actitud deseada es constante.
    """
    axes: Tuple[Tuple[float, float, float], ...] = ((0.0, 0.0, 1.0),)
    amplitudes: Tuple[float, ...] = (0.0,)
    periods: Tuple[float, ...] = (10.0,)
    phases: Tuple[float, ...] = (0.0,)
    base: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        k = len(self.axes)
        if not (len(self.amplitudes) == len(self.periods) == len(self.phases) == k) or k not in (1, 2):
            raise ConfigurationError("perfil de actitud: uno o dos ejes con amplitud, periodo y fase")
        if any(p <= 0.0 for p in self.periods):
            raise ConfigurationError("perfil de actitud: periodos positivos")

    @classmethod
    def from_dict(cls, data: dict) -> "AttitudeProfile":
        axes = data.get("axes", [[0.0, 0.0, 1.0]])
        k = len(axes)
        return cls(
            axes=tuple(tuple(float(c) for c in a) for a in axes),
            amplitudes=tuple(float(a) for a in data.get("amplitudes", [0.0] * k)),
            periods=tuple(float(p) for p in data.get("periods", [10.0] * k)),
            phases=tuple(float(p) for p in data.get("phases", [0.0] * k)),
            base=tuple(float(c) for c in data.get("base", [0.0, 0.0, 0.0, 1.0])),
        )

    def angles(self, t: float) -> List[Tuple[np.ndarray, float, float, float]]:
        out = []
        for axis, A, P, phi in zip(self.axes, self.amplitudes, self.periods, self.phases):
            w = 2.0 * np.pi / P
            n = np.asarray(axis, dtype=float)
            n = n / np.linalg.norm(n)
            arg = w * t + phi
            out.append((n, A * np.sin(arg), A * w * np.cos(arg), -A * w * w * np.sin(arg)))
        return out


def desired_attitude_quat(profile: AttitudeProfile, t: float) -> np.ndarray:
    q = np.asarray(profile.base, dtype=float)
    for n, ang, _, _ in profile.angles(t):
        q = quat_multiply(q, quat_from_axis_angle(n, ang))
    return quat_normalize(q)


def desired_attitude_profile(profile: AttitudeProfile, t: float):
    """
    Devuelve ((R_d, R_d', R_d''), (ω_d^I, ω_d^I')) con S(ω_d^I) = R_d' R_dᵀ.

    La velocidad inercial de una composición R_d = R_0 R_1 R_2 se acumula
    girando cada eje por las rotaciones previas.
    """
    R_prev = rotation_from_quat(np.asarray(profile.base, dtype=float))
    w = np.zeros(3)
    dw = np.zeros(3)
    for n, ang, rate, acc in profile.angles(t):
        axis_I = R_prev @ n
        # el eje inercial gira con la velocidad acumulada de las rotaciones previas
        daxis_I = np.cross(w, axis_I)
        dw = dw + acc * axis_I + rate * daxis_I
        w = w + rate * axis_I
        R_prev = R_prev @ rotation_from_quat(quat_from_axis_angle(n, ang))
    R_d = R_prev
    dR_d = skew(w) @ R_d
    ddR_d = (skew(dw) + skew(w) @ skew(w)) @ R_d
    return (R_d, dR_d, ddR_d), (w, dw)
