"""
closed_loops.py - Lazos cerrados integrables por escenario

Cada clase ensambla planta + dinámica de referencia + controlador para un
tipo de escenario y expone el contrato IClosedLoop. El estado es un
diccionario de arreglos con el agente en el primer eje.

Reglas de evaluación por etapa de Runge-Kutta:
- etapas en t_n y t_n + h/2: grafo y retardos continuos por la derecha
- etapa en t_n + h (stage_end): límites por la izquierda, porque los
  instantes de conmutación y de salto caen sobre la grilla
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .control import (AdaptiveState, BASELINE_CLAMP, FilterState, TpvControllerState,
                      backstepping_baseline_torque, baseline_reference,
                      pointmass_accumulator_rate, pointmass_control, pointmass_mass_estimate,
                      sigma_floor, slotine_li_torque, spacecraft_control, taskspace_adaptation,
                      taskspace_control, tpv_accumulator_rate, tpv_adaptive_command,
                      tpv_continuous_command, tpv_differentiable_command, tpv_fbl_extract,
                      tpv_mass_estimate, tpv_regressor, tracking_adaptive_torque)
from .delay import DelayProfile, HistoryBuffer, delay_at, delay_rate, record, sample_delayed
from .errors import ConfigurationError, GraphError
from .graph import DirectedGraph, SwitchingSchedule, graph_at, has_rooted_spanning_tree
from .interfaces import IClosedLoop
from .models import (AttitudeProfile, EulerParam, SpacecraftState, TwoLinkArm, desired_attitude_profile,
                     desired_attitude_quat, euler_error, forward_kinematics, jacobian, lagrangian_accel,
                     orthonormalize, plant_from_dict, quat_kinematics_inertial, quat_normalize,
                     rotation_from_quat, skew, spacecraft_derivative, tpv_accel)
from .refdyn import (CONSENSUS_VARIANTS, TRACKING_VARIANTS, LeaderProfile, NeighborSample, RefDynState,
                     TrackingAux, consensus_order, consensus_ref_deriv, consensus_ref_deriv_manip,
                     hurwitz_from_roots, leader_bound, pointmass_ref_deriv, spacecraft_ref_deriv,
                     taskspace_ref_deriv, tpv_ref_deriv, tracking_integral_rates, tracking_ref_deriv)
from .utils import RunLogger, as_spd_matrix, positive
from .wiring import SignalBus, verify_order

logger = logging.getLogger(__name__)

State = Dict[str, np.ndarray]

TPV_CONTROLLERS = ("continuous", "differentiable", "adaptive")


def schedule_from_dict(data: dict) -> SwitchingSchedule:
    """Calendario desde el bloque `graph` ya resuelto."""
    graphs = tuple(DirectedGraph(np.asarray(w, dtype=float)) for w in data["graphs"])
    return SwitchingSchedule(
        graphs=graphs,
        switch_times=tuple(data.get("switch_times", [0.0])),
        active_index=tuple(data.get("active_index", [0])),
        dwell=float(data.get("dwell", 1.0)),
    )


def _initial_array(value, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.asarray(value if value is not None else np.zeros(shape), dtype=float)
    if arr.ndim == 0:
        arr = np.full(shape, float(arr))
    if arr.shape != shape:
        raise ConfigurationError(f"{name}: forma {arr.shape}, se esperaba {shape}")
    return arr.copy()


# =============================================================================
# BASES
# =============================================================================

class _LoopBase(IClosedLoop):
    """Contexto de grilla y canales comunes."""

    metric_family = "consensus"
    position_channel = "q"
    velocity_channel = "dq"
    reference_channels: Tuple[str, str] = ("", "")
    dual_pairs: Tuple[Tuple[str, str], ...] = ()

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        self.data = data
        integ = data["integration"]
        self.h = positive(integ["h"], "integration.h")
        self.t_end = float(integ["t_end"])
        self.run_logger = run_logger or RunLogger(data.get("name", self.kind))
        self._t_step = 0.0

    def begin_step(self, t: float, x: State, h: float) -> None:
        self._t_step = t

    def derivative(self, t: float, x: State, stage_end: bool = False) -> State:
        return self._evaluate(t, x, stage_end)[0]

    def post_step(self, t: float, x: State) -> State:
        return x

    def outputs(self, t: float, x: State) -> Dict[str, np.ndarray]:
        _, extras = self._evaluate(t, x, False)
        return self._channels(t, x, extras)

    def extra_metrics(self) -> Dict[str, float]:
        return {}

    def _evaluate(self, t: float, x: State, stage_end: bool) -> Tuple[State, dict]:
        raise NotImplementedError

    def _channels(self, t: float, x: State, extras: dict) -> Dict[str, np.ndarray]:
        raise NotImplementedError


class _NetworkLoop(_LoopBase):
    """Agentes sobre un calendario de grafos con retardos por arista."""

    graph_offset = 0

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        self.n = int(data["agents"]["n"])
        if self.n < 1:
            raise ConfigurationError("agents.n debe ser >= 1")
        self.schedule = schedule_from_dict(data["graph"])
        if self.schedule.n != self.n + self.graph_offset:
            expected = self.n + self.graph_offset
            raise GraphError(f"el grafo tiene {self.schedule.n} vertices, se esperaban {expected}")
        delay = data.get("delay", {})
        self._default_delay = DelayProfile.from_dict(delay.get("default", {}))
        self._edge_delay: Dict[Tuple[int, int], DelayProfile] = {}
        for e in delay.get("edges", []):
            self._edge_delay[(int(e["i"]), int(e["j"]))] = DelayProfile.from_dict(e["profile"])
        bound = max([self._default_delay.bound] + [p.bound for p in self._edge_delay.values()])
        self.delay_horizon = bound + 4.0 * self.h
        self.histories: List[HistoryBuffer] = []
        logger.debug(f"[SIM] {self.kind}: n={self.n}, conmuta={self.schedule.is_switching}, T_max={bound:.6g}")

    def delay_profile(self, i: int, j: int) -> DelayProfile:
        return self._edge_delay.get((i, j), self._default_delay)

    def delay_jump_instants(self) -> List[float]:
        profiles = [self._default_delay] + list(self._edge_delay.values())
        return sorted({t for p in profiles for t in p.jump_times})

    def switch_instants(self) -> List[float]:
        return self.schedule.switch_instants()

    def _start_histories(self, signals: Sequence[np.ndarray]) -> None:
        self.histories = [record(HistoryBuffer(s, self.delay_horizon), 0.0, s) for s in signals]

    def _record_histories(self, t: float, signals: Sequence[np.ndarray]) -> None:
        for buf, s in zip(self.histories, signals):
            record(buf, t, s)

    def neighbor_samples(self, i: int, t: float, stage_end: bool, signals: Sequence[np.ndarray],
                         split: int) -> Tuple[List[int], List[NeighborSample]]:
        """Vecinos de i con sus señales en t - T_ij(t)."""
        g = graph_at(self.schedule, t, left_limit=stage_end)
        ids = g.neighbors(i)
        out = []
        for j in ids:
            T = delay_at(self.delay_profile(i, j), t, left_limit=stage_end)
            v = sample_delayed(self.histories[j], t, T, current=signals[j])
            out.append(NeighborSample(float(g.weights[i, j]), v[:split], v[split:]))
        return ids, out


class _LagrangianNetworkLoop(_NetworkLoop):
    """Agentes Lagrangianos con la estructura adaptativa común."""

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        self.model = plant_from_dict(data.get("plant", {}))
        self.m = self.model.dof
        self.theta_true = self.model.params
        ctrl = data.get("control", {})
        self.K = as_spd_matrix(ctrl.get("K", 5.0), self.m, "control.K")
        scale = float(ctrl.get("theta_hat_scale", 1.0))
        self.adaptive = [AdaptiveState(scale * self.theta_true, ctrl.get("Gamma", 5.0)) for _ in range(self.n)]
        self._gamma_inv = np.linalg.inv(self.adaptive[0].Gamma)

    def _initial_plant(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        ic = self.data["agents"].get("initial", {})
        q0 = _initial_array(ic.get("q"), (self.n, self.m), "agents.initial.q")
        dq0 = _initial_array(ic.get("dq"), (self.n, self.m), "agents.initial.dq")
        th0 = np.array([a.theta_hat for a in self.adaptive])
        return q0, dq0, th0

    def _adaptive_lyapunov(self, q: np.ndarray, s: np.ndarray, th: np.ndarray) -> np.ndarray:
        """V_i = ½ sᵀ M s + ½ Δϑᵀ Γ⁻¹ Δϑ con ϑ verdadero (privilegio de simulación)."""
        V = np.zeros(q.shape[0])
        for i in range(q.shape[0]):
            d_theta = th[i] - self.theta_true
            V[i] = 0.5 * s[i] @ self.model.inertia(q[i]) @ s[i] + 0.5 * d_theta @ self._gamma_inv @ d_theta
        return V


# =============================================================================
# CONSENSO LAGRANGIANO
# =============================================================================

class ConsensusLagrangianLoop(_LagrangianNetworkLoop):
    """n sistemas Lagrangianos, torque adaptativo y generador de consenso."""

    kind = "consensus-lagrangian"

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        ref = data["refdyn"]
        self.variant = ref["variant"]
        self.hurwitz = hurwitz_from_roots(ref["roots"])
        self.order = consensus_order(self.variant, self.hurwitz)
        self.lambda_m = float(ref.get("lambda_m", 0.0))
        if self.lambda_m < 0.0:
            raise ConfigurationError("refdyn.lambda_m no puede ser negativo")
        if self.lambda_m and self.variant != "second-order-fixed":
            raise ConfigurationError("refdyn.lambda_m solo aplica a la variante second-order-fixed")
        if not CONSENSUS_VARIANTS[self.variant][2] and self.schedule.is_switching:
            raise ConfigurationError(
                f"variant {self.variant} requires a fixed topology but the graph schedule switches")
        self.bus = SignalBus("slotine-li")
        verify_order(2, self.order + 1, self.variant)

    def initial_state(self) -> State:
        q0, dq0, th0 = self._initial_plant()
        # pila por agente: z(0) = q'(0), derivadas superiores nulas
        higher = np.zeros((self.order - 1, self.m))
        stack = np.stack([RefDynState(self.order, np.vstack([dq0[i], higher])).stack for i in range(self.n)])
        self._start_histories([np.concatenate([q0[j], dq0[j]]) for j in range(self.n)])
        return {"q": q0, "dq": dq0, "z": stack, "theta_hat": th0}

    def _evaluate(self, t, x, stage_end):
        q, dq, Z, th = x["q"], x["dq"], x["z"], x["theta_hat"]
        signals = [np.concatenate([q[j], dq[j]]) for j in range(self.n)]
        d = {k: np.zeros_like(v) for k, v in x.items()}
        tau_all = np.zeros_like(q)
        for i in range(self.n):
            _, nbs = self.neighbor_samples(i, t, stage_end, signals, self.m)
            stack = Z[i]
            z = stack[0]
            if self.order == 1:
                dz = consensus_ref_deriv(self.variant, stack, q[i], dq[i], nbs, self.hurwitz)
            else:
                dz = stack[1]
            a = self.adaptive[i]
            a.theta_hat = th[i]
            bus = self.bus.publish(q=q[i], dq=dq[i], z=z, dz=dz, theta_hat=th[i])
            tau, dth = slotine_li_torque(self.model, bus["q"], bus["dq"], bus["z"], bus["dz"], a, self.K)
            ddq = lagrangian_accel(self.model, q[i], dq[i], tau)
            if self.order == 1:
                d["z"][i] = dz[None, :]
            else:
                if self.lambda_m:
                    top = consensus_ref_deriv_manip(stack, q[i], dq[i], nbs, self.hurwitz, ddq,
                                                    self.lambda_m, dq[i] - z)
                else:
                    top = consensus_ref_deriv(self.variant, stack, q[i], dq[i], nbs, self.hurwitz, ddq=ddq)
                d["z"][i] = np.vstack([stack[1:], top[None, :]])
            d["q"][i] = dq[i]
            d["dq"][i] = ddq
            d["theta_hat"][i] = dth
            tau_all[i] = tau
        return d, {"tau": tau_all}

    def post_step(self, t, x):
        self._record_histories(t, [np.concatenate([x["q"][j], x["dq"][j]]) for j in range(self.n)])
        return x

    def lyapunov(self, t, x):
        return self._adaptive_lyapunov(x["q"], x["dq"] - x["z"][:, 0, :], x["theta_hat"])

    def _channels(self, t, x, extras):
        z = x["z"][:, 0, :]
        return {"q": x["q"], "dq": x["dq"], "z": z, "s": x["dq"] - z,
                "tau": extras["tau"], "theta_hat": x["theta_hat"]}


# =============================================================================
# BASELINE DE BACKSTEPPING
# =============================================================================

class BaselineComparisonLoop(_LagrangianNetworkLoop):
    """Backstepping con derivada analítica de la referencia; falla al conmutar."""

    kind = "baseline-comparison"

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        self.clamp = positive(data.get("control", {}).get("clamp", BASELINE_CLAMP), "control.clamp")
        self._jumps = sorted(set(self.schedule.switch_instants()) | set(self.delay_jump_instants()))
        self._impulse = np.zeros((self.n, self.m))
        self.peak_raw = 0.0
        self.bus = SignalBus("baseline")

    def initial_state(self) -> State:
        q0, dq0, th0 = self._initial_plant()
        self._start_histories([np.concatenate([q0[j], dq0[j]]) for j in range(self.n)])
        return {"q": q0, "dq": dq0, "theta_hat": th0}

    def _rates(self, i: int, ids: Sequence[int], t: float) -> List[float]:
        return [delay_rate(self.delay_profile(i, j), t) for j in ids]

    def begin_step(self, t, x, h):
        super().begin_step(t, x, h)
        self._impulse[:] = 0.0
        if not any(abs(t - tj) < 0.5 * h for tj in self._jumps):
            return
        q, dq = x["q"], x["dq"]
        signals = [np.concatenate([q[j], dq[j]]) for j in range(self.n)]
        for i in range(self.n):
            ids_r, right = self.neighbor_samples(i, t, False, signals, self.m)
            ids_l, left = self.neighbor_samples(i, t, True, signals, self.m)
            dq_r_right, _ = baseline_reference(q[i], dq[i], right, self._rates(i, ids_r, t))
            dq_r_left, _ = baseline_reference(q[i], dq[i], left, self._rates(i, ids_l, t))
            self._impulse[i] = (dq_r_right - dq_r_left) / h
            raw = float(np.max(np.abs(self._impulse[i])))
            if raw > 0.0:
                clamped = " (recortado)" if raw > self.clamp else ""
                self.run_logger.log(t, "baseline-discontinuity", f"|q_r''| = {raw:.6g}{clamped}",
                                    agent=i, value=raw, level=logging.WARNING)

    def _evaluate(self, t, x, stage_end):
        q, dq, th = x["q"], x["dq"], x["theta_hat"]
        signals = [np.concatenate([q[j], dq[j]]) for j in range(self.n)]
        d = {k: np.zeros_like(v) for k, v in x.items()}
        tau_all = np.zeros_like(q)
        for i in range(self.n):
            ids, nbs = self.neighbor_samples(i, t, stage_end, signals, self.m)
            a = self.adaptive[i]
            a.theta_hat = th[i]
            bus = self.bus.publish(q=q[i], dq=dq[i], theta_hat=th[i], neighbors=nbs,
                                   delay_rate=self._rates(i, ids, t), impulse=self._impulse[i])
            tau, dth, raw = backstepping_baseline_torque(
                self.model, bus["q"], bus["dq"], bus["neighbors"], bus["delay_rate"], a, self.K,
                impulse=bus["impulse"], clamp=self.clamp)
            self.peak_raw = max(self.peak_raw, raw)
            d["q"][i] = dq[i]
            d["dq"][i] = lagrangian_accel(self.model, q[i], dq[i], tau)
            d["theta_hat"][i] = dth
            tau_all[i] = tau
        return d, {"tau": tau_all}

    def post_step(self, t, x):
        self._record_histories(t, [np.concatenate([x["q"][j], x["dq"][j]]) for j in range(self.n)])
        return x

    def extra_metrics(self):
        return {"baseline_qddr_peak": self.peak_raw}

    def _channels(self, t, x, extras):
        return {"q": x["q"], "dq": x["dq"], "tau": extras["tau"], "theta_hat": x["theta_hat"]}


# =============================================================================
# TPV
# =============================================================================

class ConsensusTpvLoop(_NetworkLoop):
    """Consenso de vehículos propulsados por empuje con linealización dinámica."""

    kind = "consensus-tpv"
    position_channel = "x"
    velocity_channel = "v"

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        plant = data.get("plant", {})
        self.gravity = float(plant.get("gravity", 9.81))
        masses = plant.get("masses") or [plant.get("mass", 1.0)] * self.n
        if len(masses) != self.n:
            raise ConfigurationError(f"plant.masses: se esperaban {self.n} valores")
        self.masses = np.array([positive(m, "plant.mass") for m in masses])
        ctrl = data.get("control", {})
        self.controller = ctrl.get("controller", "differentiable")
        if self.controller not in TPV_CONTROLLERS:
            raise ConfigurationError(f"control.controller desconocido '{self.controller}', use {TPV_CONTROLLERS}")
        ref = data.get("refdyn", {})
        self.alpha = positive(ref.get("alpha", 1.0), "refdyn.alpha")
        self.beta = positive(ref.get("beta", 2.0), "refdyn.beta")
        self.gamma = positive(ref.get("gamma", 3.0), "refdyn.gamma")
        self.k = positive(ctrl.get("k", 4.0), "control.k")
        self.alpha_star = positive(ctrl.get("alpha_star", 4.0), "control.alpha_star")
        self.gamma_star = positive(ctrl.get("gamma_star", 1.0), "control.gamma_star")
        self.m_hat0 = positive(ctrl.get("mass_hat_scale", 1.0), "control.mass_hat_scale") * self.masses
        ratio = positive(ctrl.get("sigma_min_ratio", 0.1), "control.sigma_min_ratio")
        self.controllers = [TpvControllerState(sigma=m * self.gravity, k=self.k, alpha_star=self.alpha_star,
                                               sigma_min=sigma_floor(m, self.gravity, ratio), m_hat=mh)
                            for m, mh in zip(self.masses, self.m_hat0)]
        self.sigma_min = np.array([c.sigma_min for c in self.controllers])
        self.dual = bool(ctrl.get("dual_check", False)) and self.controller == "adaptive"
        self.bus = SignalBus(f"tpv-{self.controller}")
        if self.controller == "adaptive":
            verify_order(4, 4, "tpv adaptive")
        elif self.controller == "differentiable":
            verify_order(3, 4, "tpv differentiable")

    def initial_state(self) -> State:
        ic = self.data["agents"].get("initial", {})
        x0 = _initial_array(ic.get("x"), (self.n, 3), "agents.initial.x")
        v0 = _initial_array(ic.get("v"), (self.n, 3), "agents.initial.v")
        # vuelo estacionario: σ = m g y R = I, de modo que x''(0) = 0
        state = {"x": x0, "v": v0, "R": np.tile(np.eye(3), (self.n, 1, 1)),
                 "sigma": self.masses * self.gravity}
        if self.controller != "continuous":
            stack = np.zeros((self.n, 3, 3))
            stack[:, 0, :] = v0
            state["z"] = stack
        if self.controller == "adaptive":
            state["acc"] = np.zeros(self.n)
            self._v0 = v0.copy()
            self._phi0 = [tpv_regressor(np.zeros(3), np.zeros(3), self.alpha_star, self.gravity)
                          for _ in range(self.n)]
        if self.dual:
            state["m_hat_direct"] = self.m_hat0.copy()
        self._start_histories([np.concatenate([x0[j], v0[j]]) for j in range(self.n)])
        return state

    def _mass_estimate(self, i: int, stack: np.ndarray, v: np.ndarray, acc: float) -> float:
        phi = tpv_regressor(stack[2], stack[1], self.alpha_star, self.gravity)
        return tpv_mass_estimate(self.m_hat0[i], self.gamma_star, phi, v, self._phi0[i], self._v0[i], acc)

    def _evaluate(self, t, x, stage_end):
        X, V, Rs, sig = x["x"], x["v"], x["R"], x["sigma"]
        signals = [np.concatenate([X[j], V[j]]) for j in range(self.n)]
        d = {k: np.zeros_like(v) for k, v in x.items()}
        u_all = np.zeros_like(X)
        m_hat_all = self.masses.copy()
        g = self.gravity
        for i in range(self.n):
            _, nbs = self.neighbor_samples(i, t, stage_end, signals, 3)
            m = self.masses[i]
            R = Rs[i]
            if self.controller == "continuous":
                bus = self.bus.publish(x=X[i], v=V[i], R=R, sigma=sig[i], neighbors=nbs)
                u, c = tpv_continuous_command(bus["x"], bus["v"], bus["neighbors"], m, self.alpha, self.beta, g)
            else:
                stack = x["z"][i]
                dddz = tpv_ref_deriv(stack, X[i], V[i], nbs, self.alpha, self.beta, self.gamma)
                d["z"][i] = np.vstack([stack[1:], dddz[None, :]])
                bus = self.bus.publish(x=X[i], v=V[i], R=R, sigma=sig[i], z=stack[0], dz=stack[1], ddz=stack[2])
                if self.controller == "differentiable":
                    u = tpv_differentiable_command(bus["ddz"], bus["dz"], bus["v"] - bus["z"],
                                                   m, self.k, self.alpha_star, g)
                else:
                    m_hat = self._mass_estimate(i, stack, V[i], x["acc"][i])
                    bus.publish(m_hat=m_hat)
                    u, _ = tpv_adaptive_command(bus["ddz"], bus["dz"], None, bus["m_hat"],
                                                self.gamma_star, self.alpha_star, g)
                    d["acc"][i] = tpv_accumulator_rate(dddz, stack[2], stack[1], bus["v"], self.alpha_star, g)
                    m_hat_all[i] = m_hat
                    if self.dual:
                        # oráculo directo con la aceleración verdadera
                        s_dot = tpv_accel(R, sig[i], m, g) - stack[1]
                        _, d["m_hat_direct"][i] = tpv_adaptive_command(stack[2], stack[1], s_dot, m_hat,
                                                                       self.gamma_star, self.alpha_star, g)
                c = self.alpha_star
            dsigma, omega = tpv_fbl_extract(u, R, sig[i], c, self.sigma_min[i], t=t, agent=i)
            d["x"][i] = V[i]
            d["v"][i] = tpv_accel(R, sig[i], m, g)
            d["R"][i] = R @ skew(omega)
            d["sigma"][i] = dsigma
            u_all[i] = u
        return d, {"u": u_all, "m_hat": m_hat_all}

    def post_step(self, t, x):
        x["R"] = np.array([orthonormalize(R) for R in x["R"]])
        self._record_histories(t, [np.concatenate([x["x"][j], x["v"][j]]) for j in range(self.n)])
        return x

    def lyapunov(self, t, x):
        if self.controller == "continuous":
            return None
        V = np.zeros(self.n)
        for i in range(self.n):
            stack = x["z"][i]
            m = self.masses[i]
            s = x["v"][i] - stack[0]
            ds = tpv_accel(x["R"][i], x["sigma"][i], m, self.gravity) - stack[1]
            V[i] = 0.5 * m * ds @ ds
            if self.controller == "differentiable":
                V[i] += 0.5 * self.k * s @ s
            else:
                dm = self._mass_estimate(i, stack, x["v"][i], x["acc"][i]) - m
                V[i] += dm * dm / (2.0 * self.gamma_star)
        return V

    def _channels(self, t, x, extras):
        out = {"x": x["x"], "v": x["v"], "sigma": x["sigma"], "u": extras["u"]}
        if self.controller == "adaptive":
            out["m_hat"] = extras["m_hat"]
        if self.dual:
            out["m_hat_direct"] = x["m_hat_direct"]
        return out

    @property
    def dual_pairs(self):
        return (("m_hat", "m_hat_direct"),) if self.dual else ()


# =============================================================================
# MASA PUNTUAL
# =============================================================================

class PointMassTrackingLoop(_LoopBase):
    """Seguimiento de x_d = A sin(ω t) por realimentación de posición."""

    kind = "pointmass-tracking"
    metric_family = "tracking"
    position_channel = "x"
    velocity_channel = "v"
    reference_channels = ("x_d", "v_d")

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        self.mass = positive(data.get("plant", {}).get("mass", 1.0), "plant.mass")
        ref = data.get("reference", {})
        self.amplitude = float(ref.get("amplitude", 1.0))
        self.frequency = float(ref.get("frequency", 1.0))
        self.hurwitz = hurwitz_from_roots(data.get("refdyn", {}).get("roots", [1.0, 2.0, 3.0]))
        if self.hurwitz.order != 3:
            raise ConfigurationError("pointmass-tracking requiere tres raices")
        ctrl = data.get("control", {})
        self.filter = FilterState(y=np.zeros(1), eta=np.zeros(1), lambda_f=ctrl.get("lambda_f", 5.0),
                                  K=ctrl.get("k", 2.0))
        self.k = float(self.filter.K[0, 0])
        self.lambda_f = float(self.filter.lambda_f[0, 0])
        self.gamma_star = positive(ctrl.get("gamma_star", 1.0), "control.gamma_star")
        self.m_hat0 = float(ctrl.get("m_hat0", 0.5 * self.mass))
        self.dual = bool(ctrl.get("dual_check", True))
        self.bus = SignalBus("pointmass")

    @property
    def dual_pairs(self):
        return (("y", "y_direct"), ("m_hat", "m_hat_direct")) if self.dual else ()

    def reference(self, t: float) -> List[np.ndarray]:
        A, w = self.amplitude, self.frequency
        return [np.array([A * w ** k * np.sin(w * t + k * np.pi / 2.0)]) for k in range(4)]

    def initial_state(self) -> State:
        ic = self.data.get("initial", {})
        x0 = np.array([float(ic.get("x", 0.0))])
        v0 = np.array([float(ic.get("v", 0.0))])
        stack = np.zeros((2, 1))
        stack[0] = v0
        self._x0, self._z0, self._dz0 = x0.copy(), stack[0].copy(), stack[1].copy()
        state = {"x": x0, "v": v0, "z": stack, "int_z": np.zeros(1), "eta": x0.copy(), "acc": np.zeros(1)}
        if self.dual:
            state["y_direct"] = np.zeros(1)
            state["m_hat_direct"] = np.array([self.m_hat0])
        return state

    def _evaluate(self, t, x, stage_end):
        xd, dxd, ddxd, dddxd = self.reference(t)
        stack = x["z"]
        z, dz = stack[0], stack[1]
        ddz = pointmass_ref_deriv(stack, x["x"], xd, dxd, ddxd, dddxd, self.hurwitz.coeffs)
        m_hat = pointmass_mass_estimate(self.m_hat0, self.gamma_star, x["x"], z, dz,
                                        self._x0, self._z0, self._dz0, float(x["acc"][0]))
        bus = self.bus.publish(x=x["x"], z=z, dz=dz, int_z=x["int_z"], eta=x["eta"], m_hat=m_hat)
        u, fd = pointmass_control(bus["x"], bus["z"], bus["dz"], bus["int_z"], bus["eta"],
                                  bus["m_hat"], self.k, self.lambda_f)
        d = {
            "x": x["v"].copy(),
            "v": u / self.mass,
            "z": np.vstack([dz[None, :], ddz[None, :]]),
            "int_z": fd["int_z"],
            "eta": fd["eta"],
            "acc": np.array([pointmass_accumulator_rate(x["x"], ddz)]),
        }
        if self.dual:
            # oráculos que sí leen la velocidad verdadera
            d["y_direct"] = self.lambda_f * (x["v"] - z - x["y_direct"])
            d["m_hat_direct"] = -self.gamma_star * dz * (x["v"] - z)
        return d, {"u": u, "y": fd["y"], "m_hat": np.array([m_hat]), "x_d": xd, "v_d": dxd}

    def _channels(self, t, x, extras):
        out = {"x": x["x"], "x_d": extras["x_d"], "v": x["v"], "v_d": extras["v_d"],
               "u": extras["u"], "y": extras["y"], "m_hat": extras["m_hat"]}
        if self.dual:
            out["y_direct"] = x["y_direct"]
            out["m_hat_direct"] = x["m_hat_direct"]
        return out


# =============================================================================
# ESPACIO DE TAREA
# =============================================================================

class TaskSpaceTrackingLoop(_LoopBase):
    """Brazo con cinemática incierta siguiendo un círculo en el plano."""

    kind = "taskspace-tracking"
    metric_family = "tracking"
    position_channel = "x"
    velocity_channel = "x_dot"
    reference_channels = ("x_d", "x_dot_d")

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        self.model = plant_from_dict(data.get("plant", {}))
        if not isinstance(self.model, TwoLinkArm):
            raise ConfigurationError("taskspace-tracking requiere plant.type = two-link-arm")
        ref = data.get("reference", {})
        self.center = np.asarray(ref.get("center", [0.45, 0.35]), dtype=float)
        self.radius = float(ref.get("radius", 0.1))
        self.omega_ref = 2.0 * np.pi / positive(ref.get("period", 5.0), "reference.period")
        self.alpha = positive(data.get("refdyn", {}).get("alpha", 5.0), "refdyn.alpha")
        ctrl = data.get("control", {})
        self.K = as_spd_matrix(ctrl.get("K", 10.0), 2, "control.K")
        self.Kstar = as_spd_matrix(ctrl.get("Kstar", 50.0), 2, "control.Kstar")
        self.kappa = positive(ctrl.get("kappa", 1.0), "control.kappa")
        self.cond_cap = positive(ctrl.get("cond_cap", 1e6), "control.cond_cap")
        self.theta_true = self.model.params
        self.kin_true = self.model.kinematic_params
        self.adaptive = AdaptiveState(
            float(ctrl.get("theta_hat_scale", 1.0)) * self.theta_true, ctrl.get("Gamma", 1.0),
            kin_hat=float(ctrl.get("kin_hat_scale", 1.0)) * self.kin_true, Lambda=ctrl.get("Lambda", 1.0))
        self._gamma_inv = np.linalg.inv(self.adaptive.Gamma)
        self._lambda_inv = np.linalg.inv(self.adaptive.Lambda)
        self.bus = SignalBus("taskspace")

    def reference(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        w, r = self.omega_ref, self.radius
        c, s = np.cos(w * t), np.sin(w * t)
        return (self.center + r * np.array([c, s]),
                r * w * np.array([-s, c]),
                -r * w * w * np.array([c, s]))

    def initial_state(self) -> State:
        ic = self.data.get("initial", {})
        q0 = _initial_array(ic.get("q", [0.3, 1.2]), (2,), "initial.q")
        dq0 = _initial_array(ic.get("dq"), (2,), "initial.dq")
        return {"q": q0, "dq": dq0, "z": dq0.copy(),
                "theta_hat": self.adaptive.theta_hat.copy(), "kin_hat": self.adaptive.kin_hat.copy()}

    def _evaluate(self, t, x, stage_end):
        xd, dxd, ddxd = self.reference(t)
        bus = self.bus.publish(q=x["q"], dq=x["dq"], x=forward_kinematics(self.model, x["q"]),
                               z=x["z"], theta_hat=x["theta_hat"], kin_hat=x["kin_hat"])
        q, dq, z, kin = bus["q"], bus["dq"], bus["z"], bus["kin_hat"]
        dx_err = bus["x"] - xd
        a = self.adaptive
        a.theta_hat = bus["theta_hat"]
        a.kin_hat = kin
        J_hat = jacobian(self.model, q, kin)
        dkin = taskspace_adaptation(q, dq, dx_err, a, self.Kstar)
        dz, z_r, _ = taskspace_ref_deriv(z, q, dq, dx_err, kin, dkin, J_hat, dxd, ddxd,
                                         self.alpha, self.Kstar, self.cond_cap, t)
        tau, dth, dkin = taskspace_control(self.model, q, dq, z, dz, dx_err, J_hat, a,
                                           self.K, self.Kstar, self.kappa)
        d = {"q": x["dq"].copy(), "dq": lagrangian_accel(self.model, x["q"], x["dq"], tau),
             "z": dz, "theta_hat": dth, "kin_hat": dkin}
        # velocidad de tarea verdadera: solo para métricas
        x_dot = jacobian(self.model, x["q"]) @ x["dq"]
        return d, {"tau": tau, "z_r": z_r, "x": xd + dx_err, "dx_err": dx_err,
                   "x_d": xd, "x_dot_d": dxd, "x_dot": x_dot}

    def lyapunov(self, t, x):
        _, e = self._evaluate(t, x, False)
        s = x["dq"] - x["z"]
        dz = x["z"] - e["z_r"]
        dk = x["kin_hat"] - self.kin_true
        dth = x["theta_hat"] - self.theta_true
        V = 0.5 * self.kappa * (dz @ dz + e["dx_err"] @ self.Kstar @ e["dx_err"] + dk @ self._lambda_inv @ dk)
        V += 0.5 * s @ self.model.inertia(x["q"]) @ s + 0.5 * dth @ self._gamma_inv @ dth
        return np.array([V])

    def _channels(self, t, x, extras):
        return {"q": x["q"], "dq": x["dq"], "x": extras["x"], "x_d": extras["x_d"],
                "x_dot": extras["x_dot"], "x_dot_d": extras["x_dot_d"], "tau": extras["tau"],
                "theta_hat": x["theta_hat"], "kin_hat": x["kin_hat"]}


# =============================================================================
# NAVE ESPACIAL
# =============================================================================

class SpacecraftTrackingLoop(_LoopBase):
    """Seguimiento de actitud sin medir la velocidad angular."""

    kind = "spacecraft-tracking"
    metric_family = "attitude"
    position_channel = "dq_v"
    velocity_channel = "omega_err"

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        plant = data.get("plant", {})
        self.inertia = as_spd_matrix(plant.get("inertia", [1.0, 1.5, 2.0]), 3, "plant.inertia")
        self.h_I = np.asarray(plant.get("h_I", [0.0, 0.0, 0.0]), dtype=float)
        self.profile = AttitudeProfile.from_dict(data.get("reference", {}))
        ref = data.get("refdyn", {})
        self.alpha1 = positive(ref.get("alpha1", 2.0), "refdyn.alpha1")
        self.alpha2 = positive(ref.get("alpha2", 4.0), "refdyn.alpha2")
        ctrl = data.get("control", {})
        self.filter = FilterState(y=np.zeros(4), eta=np.zeros(4), lambda_f=ctrl.get("Lambda_f", 5.0),
                                  K=ctrl.get("K", 10.0))
        self.K, self.Lambda_f = self.filter.K, self.filter.lambda_f
        self.bus = SignalBus("spacecraft")

    def initial_state(self) -> State:
        ic = self.data.get("initial", {})
        q0 = quat_normalize(_initial_array(ic.get("attitude", [0.0, 0.0, 0.0, 1.0]), (4,), "initial.attitude"))
        w0 = _initial_array(ic.get("omega"), (3,), "initial.omega")
        z0 = _initial_array(ic.get("z"), (3,), "initial.z")
        # y(0) en su valor estacionario para Δq* = identidad, así y'(0) = 0
        y0 = np.linalg.solve(self.Lambda_f, self.K @ EulerParam.identity().array)
        return {"q": q0, "omega": w0, "z": z0, "q_z": q0.copy(), "y": y0}

    def _desired(self, t: float):
        (_, _, _), (w_I, dw_I) = desired_attitude_profile(self.profile, t)
        return desired_attitude_quat(self.profile, t), w_I, dw_I

    def _evaluate(self, t, x, stage_end):
        q_d, w_I, dw_I = self._desired(t)
        q = x["q"]
        R = rotation_from_quat(q)
        bus = self.bus.publish(q=q, z=x["z"], q_z=x["q_z"], y=x["y"], h=R.T @ self.h_I)
        q_b, z, q_z = bus["q"], bus["z"], bus["q_z"]
        R_b = rotation_from_quat(q_b)
        dq_v = euler_error(EulerParam.from_array(q_b), EulerParam.from_array(q_d)).array[:3]
        dz = spacecraft_ref_deriv(z, R_b, w_I, dw_I, dq_v, self.alpha1, self.alpha2)
        dq_star = euler_error(EulerParam.from_array(q_b), EulerParam.from_array(q_z)).array
        tau, dy = spacecraft_control(z, dz, bus["h"], dq_star, bus["y"], self.inertia, self.K, self.Lambda_f)
        dq_z = quat_kinematics_inertial(q_z, R_b @ z)
        dq, domega = spacecraft_derivative(SpacecraftState(q, x["omega"], self.inertia, self.h_I), tau)
        d = {"q": dq, "omega": domega, "z": dz, "q_z": dq_z, "y": dy}
        return d, {"tau": tau, "dy": dy, "dq_v": dq_v, "q_d": q_d, "omega_err": x["omega"] - R.T @ w_I}

    def post_step(self, t, x):
        x["q"] = quat_normalize(x["q"])
        x["q_z"] = quat_normalize(x["q_z"])
        return x

    def lyapunov(self, t, x):
        _, e = self._evaluate(t, x, False)
        s = x["omega"] - x["z"]
        return np.array([0.5 * s @ self.inertia @ s + 0.5 * e["dy"] @ e["dy"]])

    def _channels(self, t, x, extras):
        return {"q": x["q"], "q_d": extras["q_d"], "omega": x["omega"], "dq_v": extras["dq_v"],
                "omega_err": extras["omega_err"], "tau": extras["tau"],
                "q_norm": np.array([np.linalg.norm(x["q"])])}


# =============================================================================
# SEGUIMIENTO DISTRIBUIDO
# =============================================================================

class DistributedTrackingLoop(_LagrangianNetworkLoop):
    """n seguidores Lagrangianos y un líder virtual en el vértice 0."""

    kind = "distributed-tracking"
    graph_offset = 1
    metric_family = "tracking"
    reference_channels = ("q0", "dq0")

    def __init__(self, data: dict, run_logger: Optional[RunLogger] = None):
        super().__init__(data, run_logger)
        for k in self.schedule.active_index:
            g = self.schedule.graphs[k]
            if np.any(g.weights[0] != 0.0):
                raise GraphError("el lider (vertice 0) no recibe informacion: fila 0 debe ser nula")
            if not has_rooted_spanning_tree(g, 0):
                raise GraphError("cada grafo activo debe contener un arbol con raiz en el lider")
        ref = data["refdyn"]
        self.variant = ref.get("variant", "order2-sign")
        if self.variant not in TRACKING_VARIANTS:
            raise ConfigurationError(f"variante de seguimiento desconocida '{self.variant}'")
        self.leader = LeaderProfile.from_dict(data.get("leader", {}), self.m)
        alpha = positive(ref.get("alpha", 1.0), "refdyn.alpha")
        beta = positive(ref.get("beta", 2.0), "refdyn.beta")
        bound = leader_bound(self.variant, self.leader, alpha, beta)
        self.aux = TrackingAux(alpha, beta, float(ref["gamma"]), bound)
        self.stack_order = TRACKING_VARIANTS[self.variant][0]
        self.z_dot_init = ref.get("z_dot_init")
        self.c_star = np.zeros((self.n, self.m))
        self.bus = SignalBus("slotine-li")
        verify_order(2, self.stack_order + 1, self.variant)

    def _samples(self, i: int, g: DirectedGraph, leader, q, dq, ddq=None, dz=None) -> List[NeighborSample]:
        q0, dq0, ddq0, _ = leader
        out = []
        for j in g.neighbors(i + 1):
            w = float(g.weights[i + 1, j])
            if j == 0:
                # para el líder ξ** = ξ*, es decir z0' = q0''
                out.append(NeighborSample(w, q0, dq0, ddq0, ddq0))
            else:
                k = j - 1
                out.append(NeighborSample(w, q[k], dq[k],
                                          None if ddq is None else ddq[k],
                                          None if dz is None else dz[k]))
        return out

    def initial_state(self) -> State:
        q0, dq0, th0 = self._initial_plant()
        stack = np.zeros((self.n, self.stack_order, self.m))
        stack[:, 0, :] = dq0
        state = {"q": q0, "dq": dq0, "z": stack, "theta_hat": th0}
        if self.variant == "order3-integral":
            state["I1"] = np.zeros((self.n, self.m))
            state["I2"] = np.zeros((self.n, self.m))
            if self.z_dot_init is not None:
                target = _initial_array(self.z_dot_init, (self.n, self.m), "refdyn.z_dot_init")
                g = graph_at(self.schedule, 0.0)
                leader = self.leader.signals(0.0)
                for i in range(self.n):
                    nbs = self._samples(i, g, leader, q0, dq0)
                    rhs0 = tracking_ref_deriv(self.variant, q0[i], dq0[i], nbs, self.aux)
                    self.c_star[i] = target[i] - rhs0
        return state

    def _evaluate(self, t, x, stage_end):
        q, dq, Z, th = x["q"], x["dq"], x["z"], x["theta_hat"]
        g = graph_at(self.schedule, t, left_limit=stage_end)
        leader = self.leader.signals(t)
        d = {k: np.zeros_like(v) for k, v in x.items()}
        dz_all = np.zeros_like(q)
        # z' de todos los agentes antes de las aceleraciones
        for i in range(self.n):
            if self.variant == "order3-accel-sharing":
                dz_all[i] = Z[i][1]
            else:
                integrals = (x["I1"][i], x["I2"][i]) if self.variant == "order3-integral" else None
                dz_all[i] = tracking_ref_deriv(self.variant, q[i], dq[i], self._samples(i, g, leader, q, dq),
                                               self.aux, integrals=integrals, c_star=self.c_star[i])
        tau_all = np.zeros_like(q)
        ddq = np.zeros_like(q)
        for i in range(self.n):
            a = self.adaptive[i]
            a.theta_hat = th[i]
            bus = self.bus.publish(q=q[i], dq=dq[i], z=Z[i][0], dz=dz_all[i], theta_hat=th[i])
            tau_all[i], d["theta_hat"][i] = tracking_adaptive_torque(
                self.model, bus["q"], bus["dq"], bus["z"], bus["dz"], a, self.K)
            ddq[i] = lagrangian_accel(self.model, q[i], dq[i], tau_all[i])
        for i in range(self.n):
            if self.variant == "order3-accel-sharing":
                nbs = self._samples(i, g, leader, q, dq, ddq=ddq)
                top = tracking_ref_deriv(self.variant, q[i], dq[i], nbs, self.aux, ddq=ddq[i])
                d["z"][i] = np.vstack([dz_all[i][None, :], top[None, :]])
            else:
                d["z"][i] = dz_all[i][None, :]
                if self.variant == "order3-integral":
                    nbs = self._samples(i, g, leader, q, dq, dz=dz_all)
                    d["I1"][i], d["I2"][i] = tracking_integral_rates(q[i], dq[i], dz_all[i], nbs, self.aux)
        d["q"] = dq.copy()
        d["dq"] = ddq
        return d, {"tau": tau_all, "q0": leader[0], "dq0": leader[1]}

    def lyapunov(self, t, x):
        return self._adaptive_lyapunov(x["q"], x["dq"] - x["z"][:, 0, :], x["theta_hat"])

    def _channels(self, t, x, extras):
        return {"q": x["q"], "dq": x["dq"], "q0": extras["q0"], "dq0": extras["dq0"],
                "tau": extras["tau"], "z": x["z"][:, 0, :], "theta_hat": x["theta_hat"]}
