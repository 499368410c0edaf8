"""Receding-horizon chase simulation.

A scenario scripts the true target and obstacle motion; the loop synthesizes
noisy target observations on a fixed period, replans whenever a trigger fires
(no plan yet, prediction drifted past a threshold, the current plan is no
longer certifiably feasible against the known obstacles, or its horizon ran
out), and plays the selected primitive back kinematically. Obstacles can be
hidden behind a sensing radius and only enter planning once seen.

Metrics are judged against the truth, not against what the planner believed:
safety and visibility ratios come from the executed chaser states, the true
target, and the true obstacle motion sampled on the simulation grid.

When no candidate can be certified the chaser brakes smoothly to a stop along
its own state, holds position, and retries planning every step; every replan,
fallback, and sensing transition lands in the event log.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .chasing import (
    ChaserConfig,
    ChasePlan,
    InitialState,
    chasing_feasible,
    plan,
    segment_clearance,
)
from .errors import (
    NoFeasibleCandidate,
    NoFeasiblePrediction,
    ScenarioInvalid,
)
from .prediction import PredictionCandidate, PredictorConfig, predict
from .world import EllipsoidObstacle, TargetObservation, Trajectory3, mahalanobis_sq

log = logging.getLogger(__name__)

DEFAULT_DT_SIM = 0.02
DEFAULT_OBS_PERIOD = 0.1
DEFAULT_PRED_ERR_THRESHOLD = 0.3   # meters between prediction and newest fix
STOP_DURATION = 1.0                # seconds the fallback takes to brake

REPLAN_CAUSES = ("init", "prediction_error", "infeasible", "horizon", "fallback_recovery")


def _default_obs_covariance() -> np.ndarray:
    return 0.0025 * np.eye(3)      # 5 cm standard deviation per axis


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything one closed-loop run needs: the scripted world, the sensing
    model, the chaser's start, and the planner configurations.

    The target script and every obstacle center must be defined on
    [0, duration]; planning near the end extrapolates them past the scripted
    window, which is the natural continuation of a polynomial script.
    """

    name: str
    duration: float
    target: Trajectory3
    obstacles: tuple[EllipsoidObstacle, ...]
    chaser_init: InitialState
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    chaser: ChaserConfig = field(default_factory=ChaserConfig)
    obs_period: float = DEFAULT_OBS_PERIOD
    obs_covariance: np.ndarray = field(default_factory=_default_obs_covariance)
    sensing_radius: float | None = None
    dt_sim: float = DEFAULT_DT_SIM
    pred_err_threshold: float = DEFAULT_PRED_ERR_THRESHOLD
    # sim steps between re-certifications of the active plan; newly sensed
    # obstacles force an immediate one
    feasibility_check_every: int = 5

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(
            self, "obs_covariance", np.asarray(self.obs_covariance, dtype=float)
        )
        if self.duration <= 0:
            raise ScenarioInvalid("duration must be positive")
        if self.dt_sim <= 0:
            raise ScenarioInvalid("dt_sim must be positive")
        if self.obs_period < self.dt_sim:
            raise ScenarioInvalid("obs_period must be at least dt_sim")
        steps = self.obs_period / self.dt_sim
        if abs(steps - round(steps)) > 1e-9:
            raise ScenarioInvalid("obs_period must be a multiple of dt_sim")
        if self.pred_err_threshold <= 0:
            raise ScenarioInvalid("pred_err_threshold must be positive")
        if self.feasibility_check_every < 1:
            raise ScenarioInvalid("feasibility_check_every must be >= 1")
        if self.sensing_radius is not None and self.sensing_radius <= 0:
            raise ScenarioInvalid("sensing_radius must be positive when given")
        if self.target.horizon < self.duration - 1e-9:
            raise ScenarioInvalid("target script must cover [0, duration]")
        if abs(self.predictor.horizon - self.chaser.horizon) > 1e-9:
            raise ScenarioInvalid(
                "prediction and chasing must share one planning horizon"
            )
        if self.predictor.degree > self.chaser.degree:
            raise ScenarioInvalid("prediction degree exceeds the chaser degree")
        labels = [ob.label for ob in self.obstacles]
        if len(set(labels)) != len(labels):
            raise ScenarioInvalid("obstacle labels must be unique")
        for ob in self.obstacles:
            if ob.center.horizon < self.duration - 1e-9:
                raise ScenarioInvalid(
                    f"obstacle {ob.label!r} script must cover [0, duration]"
                )
            if ob.center.degree > self.chaser.degree:
                raise ScenarioInvalid(
                    f"obstacle {ob.label!r} degree exceeds the chaser degree"
                )
        cov = self.obs_covariance
        if cov.shape != (3, 3) or not np.allclose(cov, cov.T, atol=1e-12):
            raise ScenarioInvalid("observation covariance must be symmetric 3x3")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ScenarioInvalid(
                "observation covariance must be positive definite"
            ) from None

    @property
    def all_sensed(self) -> bool:
        return self.sensing_radius is None or math.isinf(self.sensing_radius)


@dataclass(frozen=True, eq=False)
class Timeline:
    """Executed run sampled on the simulation grid.

    ``chaser_clearance`` holds the squared Mahalanobis distance of the chaser
    to each true obstacle, ``visibility_clearance`` the exact squared segment
    clearance between chaser and true target; columns follow
    ``obstacle_labels``.
    """

    times: np.ndarray              # (n,)
    chaser_pos: np.ndarray         # (n, 3)
    chaser_vel: np.ndarray
    chaser_acc: np.ndarray
    target_pos: np.ndarray
    chaser_clearance: np.ndarray   # (n, n_obstacles)
    visibility_clearance: np.ndarray
    yaw: np.ndarray                # (n,) radians, aimed at the prediction
    obstacle_labels: tuple[str, ...]

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True, eq=False)
class SimEvent:
    time: float
    kind: str        # "replan" | "fallback" | "sense"
    cause: str       # replan trigger, "" for sense events
    detail: str = ""


@dataclass(frozen=True, eq=False)
class ReplanRecord:
    """One successful replan with its instrumentation."""

    time: float
    cause: str
    predict_ms: float
    plan_ms: float
    plan_index: int
    plan_cost: float
    handover_jump: float     # meters between old and new plan at the switch
    n_known_obstacles: int

    @property
    def total_ms(self) -> float:
        return self.predict_ms + self.plan_ms


@dataclass(frozen=True)
class SimMetrics:
    """Run scores measured against the true world on the simulation grid.

    The ratios count grid points where every obstacle keeps squared clearance
    above 1; replan timing summarizes the wall-clock instrumentation and is
    the only non-deterministic part.
    """

    safe_ratio: float
    visible_ratio: float
    accel_cost: float
    distance_tracking_ratio: float   # mean chaser-target distance / l_des
    path_length_ratio: float         # chaser path length / target path length
    replan_count: int
    replan_ms_mean: float
    replan_ms_median: float
    replan_ms_max: float


@dataclass(frozen=True, eq=False)
class SimReport:
    scenario_name: str
    timeline: Timeline
    events: tuple[SimEvent, ...]
    replans: tuple[ReplanRecord, ...]
    metrics: SimMetrics
    final_mode: str                  # "plan" or "fallback"
    candidates_per_replan: int


# ------------------------------------------------------------- chaser sources


@dataclass(frozen=True, eq=False)
class _ActivePlan:
    epoch: float
    plan: ChasePlan
    prediction: PredictionCandidate
    derivs: tuple


@dataclass(frozen=True, eq=False)
class _Fallback:
    epoch: float
    stop: Trajectory3
    derivs: tuple
    hold_position: np.ndarray


def _derivatives4(tr: Trajectory3) -> tuple:
    return (tr, tr.derivative(1), tr.derivative(2), tr.derivative(3))


def _stop_trajectory(state: InitialState, duration: float) -> Trajectory3:
    """Quintic braking arc: current position, velocity, acceleration, and
    jerk at time 0, zero velocity and acceleration at ``duration``."""
    V = np.zeros((6, 6))
    for k in range(4):
        V[k, k] = math.factorial(k)
    for row, k in enumerate((1, 2), start=4):
        for j in range(k, 6):
            V[row, j] = math.perm(j, k) * duration ** (j - k)
    C = np.linalg.solve(V, np.vstack([state.stack(), np.zeros((2, 3))]))
    return Trajectory3.from_coeffs(C.T, duration)


def _state_of(source, t: float) -> InitialState:
    """Chaser state at absolute time t under the active plan or fallback."""
    rel = t - source.epoch
    if isinstance(source, _ActivePlan):
        rel = min(max(rel, 0.0), source.plan.trajectory.horizon)
        p, v, a, j = (d.at(rel) for d in source.derivs)
        return InitialState(p, v, a, j)
    if rel >= STOP_DURATION:
        z = np.zeros(3)
        return InitialState(source.hold_position, z, z, z)
    p, v, a, j = (d.at(rel) for d in source.derivs)
    return InitialState(p, v, a, j)


def _plan_feasible_now(source: _ActivePlan, t: float, scenario: Scenario, known) -> bool:
    """Re-certify the remaining window of the active plan against every
    currently known obstacle, target clearance included."""
    horizon = scenario.chaser.horizon
    elapsed = t - source.epoch
    remaining = horizon - elapsed
    if remaining <= 1e-9:
        return True                  # the horizon trigger handles this step
    chaser_rem = source.plan.trajectory.shift(elapsed, remaining)
    pred_rem = source.prediction.trajectory.shift(elapsed, remaining)
    obstacles_rem = [
        ob.rebase(t, remaining)
        for j, ob in enumerate(scenario.obstacles)
        if known[j]
    ]
    return chasing_feasible(chaser_rem, pred_rem, obstacles_rem, remaining)


# --------------------------------------------------------------------- metrics


def compute_metrics(timeline: Timeline, scenario: Scenario, replan_ms=()) -> SimMetrics:
    """Score a completed timeline against the true world.

    Ratios and costs come solely from the recorded grid samples so that an
    independent re-scan of the timeline reproduces them; replan timing
    statistics summarize the instrumentation passed in.
    """
    tl = timeline
    safe = (tl.chaser_clearance > 1.0).all(axis=1)
    visible = (tl.visibility_clearance > 1.0).all(axis=1)
    accel = np.einsum("na,na->n", tl.chaser_acc, tl.chaser_acc)
    offsets = np.linalg.norm(tl.chaser_pos - tl.target_pos, axis=1)
    chaser_len = float(np.linalg.norm(np.diff(tl.chaser_pos, axis=0), axis=1).sum())
    target_len = float(np.linalg.norm(np.diff(tl.target_pos, axis=0), axis=1).sum())
    ms = np.asarray(replan_ms, dtype=float)
    return SimMetrics(
        safe_ratio=float(safe.mean()),
        visible_ratio=float(visible.mean()),
        accel_cost=float(np.trapezoid(accel, tl.times)),
        distance_tracking_ratio=float(offsets.mean() / scenario.chaser.l_des),
        path_length_ratio=chaser_len / target_len if target_len > 1e-9 else math.inf,
        replan_count=int(ms.size),
        replan_ms_mean=float(ms.mean()) if ms.size else 0.0,
        replan_ms_median=float(np.median(ms)) if ms.size else 0.0,
        replan_ms_max=float(ms.max()) if ms.size else 0.0,
    )


# ------------------------------------------------------------------- the loop


def run(scenario: Scenario, seed: int = 0) -> SimReport:
    """Execute one closed-loop run; deterministic for a fixed seed.

    The seed drives observation noise only. Observations made at step k are
    available from step k+1 on, so every replan sees strictly-past fixes; the
    first prediction is fed by fixes synthesized just before t=0.
    """
    sc = scenario
    rng = np.random.default_rng(seed)
    noise_chol = np.linalg.cholesky(sc.obs_covariance)
    horizon = sc.chaser.horizon
    n_steps = int(math.floor(sc.duration / sc.dt_sim + 1e-9))
    obs_every = int(round(sc.obs_period / sc.dt_sim))
    n_obs = sc.predictor.n_obs
    n_obst = len(sc.obstacles)

    def observe(t: float):
        return sc.target.at(t) + noise_chol @ rng.standard_normal(3)

    # pre-run fixes so the very first prediction has a full history
    pre_times = [-(n_obs - i) * sc.obs_period for i in range(n_obs)]
    observations = [(pt, observe(pt)) for pt in pre_times]

    known = np.full(n_obst, sc.all_sensed, dtype=bool)

    n_rows = n_steps + 1
    times = np.empty(n_rows)
    chaser_pos = np.empty((n_rows, 3))
    chaser_vel = np.empty((n_rows, 3))
    chaser_acc = np.empty((n_rows, 3))
    target_pos = np.empty((n_rows, 3))
    chaser_clear = np.empty((n_rows, n_obst))
    vis_clear = np.empty((n_rows, n_obst))
    yaw = np.empty(n_rows)

    events: list[SimEvent] = []
    replans: list[ReplanRecord] = []
    source = None
    last_obs_checked = observations[-1][0]
    prev_yaw = 0.0

    for k in range(n_rows):
        t = k * sc.dt_sim
        state = sc.chaser_init if source is None else _state_of(source, t)

        # sensing: an obstacle inside the radius becomes and stays known
        fresh_obstacle = False
        if not known.all():
            for j, ob in enumerate(sc.obstacles):
                if known[j]:
                    continue
                gap = np.linalg.norm(ob.center.at(t) - state.position)
                if gap <= sc.sensing_radius:
                    known[j] = True
                    fresh_obstacle = True
                    events.append(SimEvent(t, "sense", "", ob.label))

        # replan triggers, most urgent first
        cause = None
        if source is None:
            cause = "init"
        elif isinstance(source, _Fallback):
            cause = "fallback_recovery"
        else:
            elapsed = t - source.epoch
            newest_t, newest_fix = observations[-1]
            if newest_t > last_obs_checked + 1e-12:
                last_obs_checked = newest_t
                predicted = source.prediction.trajectory.at(newest_t - source.epoch)
                if np.linalg.norm(predicted - newest_fix) > sc.pred_err_threshold:
                    cause = "prediction_error"
            if (
                cause is None
                and elapsed < horizon - 1e-9
                and known.any()
                and (fresh_obstacle or k % sc.feasibility_check_every == 0)
                and not _plan_feasible_now(source, t, sc, known)
            ):
                cause = "infeasible"
            if cause is None and elapsed >= horizon - 1e-9:
                cause = "horizon"

        if cause is not None:
            rel_obs = [
                TargetObservation(ot - t, fix, sc.obs_covariance)
                for ot, fix in observations[-n_obs:]
            ]
            active = [
                ob.rebase(t, horizon)
                for j, ob in enumerate(sc.obstacles)
                if known[j]
            ]
            t0 = time.perf_counter()
            try:
                prediction = predict(rel_obs, active, sc.predictor)
                t1 = time.perf_counter()
                chase_plan = plan(prediction, active, state, sc.chaser)
                t2 = time.perf_counter()
            except (NoFeasiblePrediction, NoFeasibleCandidate) as exc:
                if not isinstance(source, _Fallback):
                    stop = _stop_trajectory(state, STOP_DURATION)
                    source = _Fallback(
                        t, stop, _derivatives4(stop), stop.at(STOP_DURATION)
                    )
                    events.append(SimEvent(t, "fallback", cause, type(exc).__name__))
                    log.info("fallback engaged at t=%.2f: %s", t, exc)
                # an active fallback keeps braking and retries next step
            else:
                jump = float(
                    np.linalg.norm(chase_plan.trajectory.at(0.0) - state.position)
                )
                source = _ActivePlan(
                    t, chase_plan, prediction, _derivatives4(chase_plan.trajectory)
                )
                replans.append(
                    ReplanRecord(
                        time=t,
                        cause=cause,
                        predict_ms=(t1 - t0) * 1e3,
                        plan_ms=(t2 - t1) * 1e3,
                        plan_index=chase_plan.index,
                        plan_cost=chase_plan.cost.total,
                        handover_jump=jump,
                        n_known_obstacles=len(active),
                    )
                )
                events.append(SimEvent(t, "replan", cause, f"index {chase_plan.index}"))
                state = _state_of(source, t)

        # record the executed sample against the true world
        times[k] = t
        chaser_pos[k] = state.position
        chaser_vel[k] = state.velocity
        chaser_acc[k] = state.acceleration
        true_target = sc.target.at(t)
        target_pos[k] = true_target
        for j, ob in enumerate(sc.obstacles):
            center = ob.center.at(t)
            chaser_clear[k, j] = mahalanobis_sq(state.position, center, ob.shape)
            vis_clear[k, j] = segment_clearance(
                state.position, true_target, center, ob.shape
            )
        if isinstance(source, _ActivePlan):
            aim = source.prediction.trajectory.at(t - source.epoch)
        else:
            aim = observations[-1][1]
        dx, dy = aim[0] - state.position[0], aim[1] - state.position[1]
        if dx * dx + dy * dy < 1e-12:
            yaw[k] = prev_yaw
        else:
            yaw[k] = math.atan2(dy, dx)
        prev_yaw = yaw[k]

        # a fix taken now is visible from the next step on
        if k % obs_every == 0:
            observations.append((t, observe(t)))
            del observations[:-max(n_obs, 1)]

    timeline = Timeline(
        times=times,
        chaser_pos=chaser_pos,
        chaser_vel=chaser_vel,
        chaser_acc=chaser_acc,
        target_pos=target_pos,
        chaser_clearance=chaser_clear,
        visibility_clearance=vis_clear,
        yaw=yaw,
        obstacle_labels=tuple(ob.label for ob in sc.obstacles),
    )
    metrics = compute_metrics(timeline, sc, [r.total_ms for r in replans])
    return SimReport(
        scenario_name=sc.name,
        timeline=timeline,
        events=tuple(events),
        replans=tuple(replans),
        metrics=metrics,
        final_mode="fallback" if isinstance(source, _Fallback) else "plan",
        candidates_per_replan=(
            sc.predictor.n_contour**n_obs + sc.chaser.n_skeletons**sc.chaser.n_steps
        ),
    )
