"""Deterministic fixed-step closed-loop simulator.

N constant-speed unicycle agents track one shared reference attitude.
Per step: (1) snapshot the swarm, (2) refresh stats and the reference
(source-seeking recomputes the target heading from the snapshot),
(3) evaluate every control from the snapshot, (4) apply all agent steps.
The attitude update is the exact exponential of the commanded rate;
position uses the body x-axis at the half step, so each agent moves
exactly speed*dt per step.

Reference-rate conventions (`rate_frame`):
  "literal": the total reference rate R_d^T w_known + w_unknown is an
             earth-fixed angular velocity (the convention as usually
             written, even though the R_d^T factor mixes frames).
  "body":    w_known and w_unknown are body-frame rates of the reference.
Both are supported because published descriptions of this rate law are
ambiguous; logs record the realized unknown-rate magnitude either way.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as _k
from .attitude import ControllerConfig
from .deployment import (
    DeploymentStats,
    ascending_direction,
    deployment_stats,
    heading_field,
    plan_gains,
)
from .errors import (
    AntipodalHeading,
    DegenerateDeployment,
    DegenerateDirection,
    NearPiSingularity,
)
from .fields import FieldSpec, field_eval
from .so3 import _arr3, _mat3, is_rotation

TRAJECTORY_MODES = ("constant", "prescribed", "source-seeking")
RATE_FRAMES = ("literal", "body")

_MODE_CODE = {
    "constant": _k.TRAJ_CONSTANT,
    "prescribed": _k.TRAJ_PRESCRIBED,
    "source-seeking": _k.TRAJ_SOURCE,
}
_FRAME_CODE = {"literal": _k.RATE_LITERAL, "body": _k.RATE_BODY}


@dataclass(frozen=True)
class RobotState:
    """Position and attitude of one unicycle agent."""

    p: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _arr3(self.p))
        r = _mat3(self.r)
        if not is_rotation(r, tol=1e-6):
            raise ValueError("attitude is not a rotation matrix")
        object.__setattr__(self, "r", r)

    @property
    def heading(self) -> np.ndarray:
        return self.r[:, 0].copy()


@dataclass(frozen=True)
class DesiredAttitudeTrajectory:
    """Shared reference attitude plus its rate decomposition.

    omega_unknown is hidden from controllers; for source-seeking it holds
    the realized heading-correction rate of the last advance. `held` marks
    steps where a vanishing ascending estimate froze the target heading.
    """

    mode: str
    r_d: np.ndarray
    omega_known: np.ndarray
    omega_unknown: np.ndarray
    omega_max_declared: float = 0.0
    held: bool = False

    def __post_init__(self):
        if self.mode not in TRAJECTORY_MODES:
            raise ValueError(f"unknown trajectory mode {self.mode!r}")
        r = _mat3(self.r_d)
        if not is_rotation(r, tol=1e-6):
            raise ValueError("r_d is not a rotation matrix")
        object.__setattr__(self, "r_d", r)
        object.__setattr__(self, "omega_known", _arr3(self.omega_known))
        object.__setattr__(self, "omega_unknown", _arr3(self.omega_unknown))
        if self.omega_max_declared < 0:
            raise ValueError("omega_max_declared must be >= 0")


@dataclass(frozen=True)
class PlacementSpec:
    """Initial positions: explicit list or a seeded uniform ball."""

    kind: str = "ball"
    positions: np.ndarray = None  # type: ignore[assignment]
    center: np.ndarray = (0.0, 0.0, 0.0)  # type: ignore[assignment]
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("explicit", "ball"):
            raise ValueError(f"unknown placement kind {self.kind!r}")
        object.__setattr__(self, "center", _arr3(self.center))
        if self.kind == "explicit":
            pos = np.ascontiguousarray(self.positions, dtype=np.float64)
            if pos.ndim != 2 or pos.shape[1] != 3:
                raise ValueError("explicit placement needs an (N, 3) position list")
            object.__setattr__(self, "positions", pos)
        elif self.radius <= 0:
            raise ValueError("ball placement needs a positive radius")


@dataclass(frozen=True)
class AttitudeInitSpec:
    """Initial attitudes: aligned with the reference, a seeded geodesic
    ball around it (axis uniform on the sphere, angle uniform in
    [0, radius]), or explicit matrices."""

    kind: str = "aligned"
    radius: float = 0.0
    matrices: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in ("aligned", "ball", "explicit"):
            raise ValueError(f"unknown attitude init kind {self.kind!r}")
        if self.kind == "ball" and not (0 < self.radius < np.pi):
            raise ValueError("attitude ball radius must be in (0, pi)")
        if self.kind == "explicit":
            mats = np.ascontiguousarray(self.matrices, dtype=np.float64)
            if mats.ndim != 3 or mats.shape[1:] != (3, 3):
                raise ValueError("explicit attitudes need an (N, 3, 3) array")
            object.__setattr__(self, "matrices", mats)


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs; identical configs give identical logs."""

    n_agents: int
    speed: float
    dt: float
    t_end: float
    seed: int
    controller: ControllerConfig
    trajectory: DesiredAttitudeTrajectory
    placement: PlacementSpec
    attitudes: AttitudeInitSpec = AttitudeInitSpec()
    field: FieldSpec = None  # type: ignore[assignment]
    gain_mode: str = "manual"
    rate_frame: str = "literal"
    project_every: int = 1000
    name: str = ""

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be >= dt")
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        if self.gain_mode not in ("manual", "planned"):
            raise ValueError(f"unknown gain mode {self.gain_mode!r}")
        if self.gain_mode == "manual" and self.controller.k_w is None:
            raise ValueError("manual gain mode requires controller.k_w")
        if self.rate_frame not in RATE_FRAMES:
            raise ValueError(f"unknown rate frame {self.rate_frame!r}")
        if self.trajectory.mode == "source-seeking" and self.field is None:
            raise ValueError("source-seeking mode requires a field")
        if (
            self.placement.kind == "explicit"
            and self.placement.positions.shape[0] != self.n_agents
        ):
            raise ValueError("explicit placement size does not match n_agents")
        if (
            self.attitudes.kind == "explicit"
            and self.attitudes.matrices.shape[0] != self.n_agents
        ):
            raise ValueError("explicit attitude count does not match n_agents")


@dataclass(frozen=True)
class StepRecord:
    """One logged step: shared diagnostics plus per-agent pose and errors."""

    t: float
    p: np.ndarray
    r: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    lambda_min: float
    sigma_centroid: float
    dist_to_source: float
    max_pair_disp: float
    unknown_rate: float
    held: bool
    rate_violation: bool


class SimLog:
    """Column-major run log; indexable as a sequence of StepRecord."""

    def __init__(self, config, gains, k_w, arrays, aborted=False, abort_reason=""):
        self.config = config
        self.gains = gains
        self.k_w = float(k_w)
        self.aborted = aborted
        self.abort_reason = abort_reason
        (
            self.t,
            self.p,
            self.r,
            self.r_d,
            self.mu,
            self.delta,
            self.lambda_min,
            self.sigma_centroid,
            self.dist_to_source,
            self.max_pair_disp,
            self.unknown_rate,
            self.hold_flag,
            self.rate_violation,
        ) = arrays

    def __len__(self) -> int:
        return self.t.shape[0]

    def __getitem__(self, k: int) -> StepRecord:
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        return StepRecord(
            t=float(self.t[k]),
            p=self.p[k],
            r=self.r[k],
            mu=self.mu[k],
            delta=self.delta[k],
            lambda_min=float(self.lambda_min[k]),
            sigma_centroid=float(self.sigma_centroid[k]),
            dist_to_source=float(self.dist_to_source[k]),
            max_pair_disp=float(self.max_pair_disp[k]),
            unknown_rate=float(self.unknown_rate[k]),
            held=bool(self.hold_flag[k]),
            rate_violation=bool(self.rate_violation[k]),
        )

    def records(self) -> list:
        return [self[k] for k in range(len(self))]


def step_agent(state: RobotState, omega, s: float, dt: float) -> RobotState:
    """Advance one agent by dt under skew rate omega at forward speed s."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    w = _k.vee(_mat3(omega))
    p_new, r_new = _k.step_pose(state.p, state.r, w, s, dt)
    return RobotState(p=p_new, r=r_new)


def complete_frame(x_d, prev) -> np.ndarray:
    """Rotation with first column x_d, continuous with `prev`.

    Applies the minimal rotation (about the mutual normal) taking prev's
    first column onto x_d; raises AntipodalHeading when they are opposite
    and the minimal rotation is undefined.
    """
    x_d = _arr3(x_d)
    if abs(np.linalg.norm(x_d) - 1.0) > 1e-6:
        raise ValueError("x_d must be a unit vector")
    prev = _mat3(prev)
    q, status = _k.min_rotation_between(np.ascontiguousarray(prev[:, 0]), x_d)
    if status != _k.OK:
        raise AntipodalHeading()
    return _k.mat3_mul(q, prev)


def reference_body_rates(traj: DesiredAttitudeTrajectory, rate_frame: str):
    """Body-frame (known, unknown) rate vectors under the chosen convention."""
    wk, wu = _k.reference_body_rates(
        traj.r_d, traj.omega_known, traj.omega_unknown, _FRAME_CODE[rate_frame]
    )
    if traj.mode == "constant":
        wk, wu = np.zeros(3), np.zeros(3)
    return wk, wu


def advance_desired(
    traj: DesiredAttitudeTrajectory,
    dt: float,
    rate_frame: str = "literal",
    positions=None,
    field: FieldSpec = None,
) -> DesiredAttitudeTrajectory:
    """One reference update, mirroring the simulator's in-loop rule.

    prescribed: compose by the exponential of the total rate over dt.
    source-seeking: apply the designed known spin, then the minimal
    rotation placing the first column on the fresh target heading computed
    from `positions` and `field`; the realized correction rate is reported
    in omega_unknown. A vanishing estimate holds the previous heading and
    sets `held`.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if traj.mode == "constant":
        return replace(traj, held=False)
    wk, wu = reference_body_rates(traj, rate_frame)
    if traj.mode == "prescribed":
        r_new = _k.mat3_mul(traj.r_d, _k.rot_exp(dt * (wk + wu)))
        return replace(traj, r_d=r_new, held=False)

    if positions is None or field is None:
        raise ValueError("source-seeking advance needs positions and a field")
    stats = deployment_stats(positions)
    sigma = np.array([field_eval(field, p) for p in np.asarray(positions)])
    r_spun = _k.mat3_mul(traj.r_d, _k.rot_exp(dt * wk))
    held = False
    try:
        ell = ascending_direction(sigma, stats)
        md = heading_field(ell, eps_norm=1e-9 * (1.0 + float(np.max(np.abs(sigma)))))
    except DegenerateDirection:
        held = True
        md = traj.r_d[:, 0].copy()
    try:
        r_new = complete_frame(md, r_spun)
    except AntipodalHeading:
        held = True
        r_new = r_spun
    corr = np.ascontiguousarray(r_spun.T) @ r_new
    _, th_c, _ = _k.rot_log(np.ascontiguousarray(corr))
    wu_real = np.zeros(3)
    if th_c > 0:
        tau_c, _, _ = _k.rot_log(np.ascontiguousarray(corr))
        wu_real = tau_c / dt
    return replace(traj, r_d=r_new, omega_unknown=wu_real, held=held)


def _initial_conditions(config: SimConfig):
    """Seeded initial poses; the RNG is used here and nowhere else."""
    rng = np.random.default_rng(config.seed)
    n = config.n_agents
    if config.placement.kind == "explicit":
        p = config.placement.positions + config.placement.center
    else:
        u = rng.normal(size=(n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        rad = config.placement.radius * rng.uniform(size=(n, 1)) ** (1.0 / 3.0)
        p = config.placement.center + u * rad
    r0 = config.trajectory.r_d
    if config.attitudes.kind == "aligned":
        r = np.broadcast_to(r0, (n, 3, 3)).copy()
    elif config.attitudes.kind == "explicit":
        r = config.attitudes.matrices.copy()
        for i in range(n):
            if not is_rotation(r[i], tol=1e-6):
                raise ValueError(f"explicit attitude {i} is not a rotation")
    else:
        r = np.empty((n, 3, 3))
        for i in range(n):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(0.0, config.attitudes.radius)
            r[i] = r0 @ _k.rot_exp(axis * angle)
    return np.ascontiguousarray(p), np.ascontiguousarray(r)


def resolve_gains(config: SimConfig, stats0: DeploymentStats):
    """(k_w, GainPlan or None) for this run under its gain mode."""
    traj = config.trajectory
    if config.gain_mode == "planned":
        plan = plan_gains(
            traj.omega_max_declared, config.controller.mu_star, config.speed, stats0
        )
        if not plan.k_w > 0:
            raise DegenerateDeployment("planned gain came out non-positive")
        return plan.k_w, plan
    return config.controller.k_w, None


def run(config: SimConfig) -> SimLog:
    """Execute the closed loop; deterministic for a fixed config.

    Raises NearPiSingularity (with .partial_log holding the records up to
    the offending step) if any agent's error hits the log singularity, and
    DegenerateDeployment at planning time under gain_mode="planned".
    """
    p, r = _initial_conditions(config)
    stats0 = deployment_stats(p)
    if config.gain_mode == "planned" and stats0.lambda_min <= 0.0:
        raise DegenerateDeployment(
            "planned gains need a non-degenerate initial deployment"
        )
    k_w, plan = resolve_gains(config, stats0)

    n_steps = int(round(config.t_end / config.dt))
    n = config.n_agents
    if config.field is not None:
        f_kind, f_sources, f_amps, f_mats, f_main = config.field.kernel_params()
    else:
        f_kind = _k.FIELD_NONE
        f_sources = np.zeros((1, 3))
        f_amps = np.zeros(1)
        f_mats = np.zeros((1, 3, 3))
        f_main = np.zeros(3)

    m = n_steps + 1
    arrays = (
        np.zeros(m),
        np.zeros((m, n, 3)),
        np.zeros((m, n, 3, 3)),
        np.zeros((m, 3, 3)),
        np.zeros((m, n)),
        np.zeros((m, n)),
        np.zeros(m),
        np.zeros(m),
        np.zeros(m),
        np.zeros(m),
        np.zeros(m),
        np.zeros(m, dtype=np.int8),
        np.zeros(m, dtype=np.int8),
    )
    (
        out_t,
        out_p,
        out_r,
        out_rd,
        out_mu,
        out_delta,
        out_lam,
        out_sigma,
        out_dist,
        out_maxdisp,
        out_wu,
        out_hold,
        out_vio,
    ) = arrays

    status, step, agent = _k.sim_loop(
        p,
        r,
        config.trajectory.r_d,
        _MODE_CODE[config.trajectory.mode],
        _FRAME_CODE[config.rate_frame],
        config.trajectory.omega_known,
        config.trajectory.omega_unknown,
        float(config.trajectory.omega_max_declared),
        f_kind,
        f_sources,
        f_amps,
        f_mats,
        f_main,
        float(k_w),
        float(config.speed),
        float(config.dt),
        n_steps,
        int(config.project_every),
        out_t,
        out_p,
        out_r,
        out_rd,
        out_mu,
        out_delta,
        out_lam,
        out_sigma,
        out_dist,
        out_maxdisp,
        out_wu,
        out_hold,
        out_vio,
    )
    if status == _k.ERR_NEAR_PI:
        partial = SimLog(
            config,
            plan,
            k_w,
            tuple(a[:step] for a in arrays),
            aborted=True,
            abort_reason=f"attitude error of agent {agent} reached the "
            f"log singularity at step {step}",
        )
        raise NearPiSingularity(partial.abort_reason, partial_log=partial)
    return SimLog(config, plan, k_w, arrays)
