"""Scenario files: strict JSON loading and round-trip saving.

The schema mirrors the Scenario dataclass. Motion scripts come either as
``waypoints`` rows ``[t, x, y, z]`` that are least-squares fitted to a
polynomial at load, as raw ascending ``coeffs`` (one row per axis), or, for
obstacle centers, as a ``static`` point. Validation is strict: unknown keys
are rejected, matrices are checked for symmetric positive definiteness at
load, and every complaint names the offending key path, e.g.
``obstacles[0].shape``.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .chasing import ChaserConfig, InitialState
from .errors import NonSPDShape, ScenarioInvalid
from .prediction import PredictorConfig
from .simulation import Scenario
from .world import EllipsoidObstacle, Trajectory3, fit_trajectory

_CHASER_KEYS = {f.name for f in dataclasses.fields(ChaserConfig)} | {"init"}
_PREDICTOR_KEYS = {f.name for f in dataclasses.fields(PredictorConfig)}
_TOP_KEYS = {
    "name",
    "duration",
    "target",
    "obstacles",
    "observation",
    "sensing_radius",
    "chaser",
    "predictor",
    "dt_sim",
    "pred_err_threshold",
    "feasibility_check_every",
}
_INIT_KEYS = ("position", "velocity", "acceleration", "jerk")

DEFAULT_TARGET_FIT_DEGREE = 3
DEFAULT_OBSTACLE_FIT_DEGREE = 1


def _fail(path: str, message: str):
    raise ScenarioInvalid(f"{path}: {message}")


def _check_keys(obj, allowed, path: str, required=()):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    for key in obj:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else str(key), "unknown key")
    for key in required:
        if key not in obj:
            _fail(path, f"missing required key {key!r}")


def _number(value, path: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "expected a number")
    return float(value)


def _vector3(value, path: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(path, "expected a list of 3 numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix3(value, path: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(path, "expected a 3x3 matrix as 3 rows of 3 numbers")
    return np.stack([_vector3(row, f"{path}[{i}]") for i, row in enumerate(value)])


def _waypoints(value, path: str):
    if not isinstance(value, (list, tuple)) or not value:
        _fail(path, "expected a non-empty list of [t, x, y, z] rows")
    times, points = [], []
    for i, row in enumerate(value):
        if not isinstance(row, (list, tuple)) or len(row) != 4:
            _fail(f"{path}[{i}]", "expected a [t, x, y, z] row")
        times.append(_number(row[0], f"{path}[{i}][0]"))
        points.append([_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row[1:], 1)])
    return np.asarray(times), np.asarray(points)


def _script(obj, path: str, horizon: float, default_degree: int,
            allow_static: bool) -> Trajectory3:
    """Parse one motion script: coeffs, fitted waypoints, or a static point."""
    allowed = {"waypoints", "degree", "coeffs"} | ({"static"} if allow_static else set())
    _check_keys(obj, allowed, path)
    forms = [k for k in ("coeffs", "waypoints", "static") if k in obj]
    if len(forms) != 1:
        choices = "'coeffs', 'waypoints', or 'static'" if allow_static else "'coeffs' or 'waypoints'"
        _fail(path, f"expected exactly one of {choices}")
    if "degree" in obj and forms[0] != "waypoints":
        _fail(f"{path}.degree", "only meaningful with waypoints")
    if forms[0] == "static":
        return Trajectory3.constant(_vector3(obj["static"], f"{path}.static"), horizon)
    if forms[0] == "coeffs":
        rows = obj["coeffs"]
        if not isinstance(rows, (list, tuple)) or len(rows) != 3:
            _fail(f"{path}.coeffs", "expected 3 rows of ascending coefficients")
        width = 0
        C = []
        for i, row in enumerate(rows):
            if not isinstance(row, (list, tuple)) or not row:
                _fail(f"{path}.coeffs[{i}]", "expected a non-empty number list")
            C.append([_number(v, f"{path}.coeffs[{i}][{j}]") for j, v in enumerate(row)])
            width = max(width, len(row))
        M = np.zeros((3, width))
        for i, row in enumerate(C):
            M[i, : len(row)] = row
        return Trajectory3.from_coeffs(M, horizon)
    times, points = _waypoints(obj["waypoints"], f"{path}.waypoints")
    degree = obj.get("degree", default_degree)
    if isinstance(degree, bool) or not isinstance(degree, int) or degree < 0:
        _fail(f"{path}.degree", "expected a non-negative integer")
    try:
        return fit_trajectory(times, points, degree, horizon)
    except ValueError as exc:
        _fail(f"{path}.waypoints", str(exc))


def _obstacle(obj, index: int, horizon: float) -> EllipsoidObstacle:
    path = f"obstacles[{index}]"
    _check_keys(obj, {"label", "shape", "center"}, path, required=("shape", "center"))
    label = obj.get("label", f"obstacle{index}")
    if not isinstance(label, str) or not label:
        _fail(f"{path}.label", "expected a non-empty string")
    shape = _matrix3(obj["shape"], f"{path}.shape")
    center = _script(
        obj["center"], f"{path}.center", horizon,
        DEFAULT_OBSTACLE_FIT_DEGREE, allow_static=True,
    )
    try:
        return EllipsoidObstacle(shape, center, label)
    except NonSPDShape as exc:
        _fail(f"{path}.shape", str(exc))


def _predictor(obj, path: str) -> PredictorConfig:
    _check_keys(obj, _PREDICTOR_KEYS, path)
    try:
        return PredictorConfig(**obj)
    except (TypeError, ValueError) as exc:
        _fail(path, str(exc))


def _chaser(obj, path: str) -> tuple[ChaserConfig, InitialState]:
    _check_keys(obj, _CHASER_KEYS, path, required=("init",))
    init_obj = obj["init"]
    _check_keys(init_obj, set(_INIT_KEYS), f"{path}.init", required=_INIT_KEYS)
    init = InitialState(
        *(_vector3(init_obj[k], f"{path}.init.{k}") for k in _INIT_KEYS)
    )
    cfg = {k: v for k, v in obj.items() if k != "init"}
    if "radii" in cfg:
        if not isinstance(cfg["radii"], (list, tuple)) or not cfg["radii"]:
            _fail(f"{path}.radii", "expected a non-empty number list")
        cfg["radii"] = tuple(
            _number(v, f"{path}.radii[{i}]") for i, v in enumerate(cfg["radii"])
        )
    if "derivative_weights" in cfg:
        dw = cfg["derivative_weights"]
        if not isinstance(dw, dict):
            _fail(f"{path}.derivative_weights", "expected an object of order: weight")
        try:
            cfg["derivative_weights"] = {int(k): float(v) for k, v in dw.items()}
        except (TypeError, ValueError):
            _fail(f"{path}.derivative_weights", "keys must be integer derivative orders")
    try:
        return ChaserConfig(**cfg), init
    except (TypeError, ValueError) as exc:
        _fail(path, str(exc))


def scenario_from_dict(data, default_name: str = "scenario") -> Scenario:
    """Build and validate a Scenario from parsed JSON data."""
    _check_keys(data, _TOP_KEYS, "", required=("duration", "target", "chaser"))
    name = data.get("name", default_name)
    if not isinstance(name, str) or not name:
        _fail("name", "expected a non-empty string")
    duration = _number(data["duration"], "duration")
    if duration <= 0:
        _fail("duration", "must be positive")

    target = _script(
        data["target"], "target", duration, DEFAULT_TARGET_FIT_DEGREE, allow_static=False
    )
    raw_obstacles = data.get("obstacles", [])
    if not isinstance(raw_obstacles, (list, tuple)):
        _fail("obstacles", "expected a list")
    obstacles = tuple(
        _obstacle(ob, i, duration) for i, ob in enumerate(raw_obstacles)
    )

    obs_period = 0.1
    covariance = None
    if "observation" in data:
        _check_keys(data["observation"], {"period", "covariance"}, "observation")
        if "period" in data["observation"]:
            obs_period = _number(data["observation"]["period"], "observation.period")
        if "covariance" in data["observation"]:
            covariance = _matrix3(
                data["observation"]["covariance"], "observation.covariance"
            )
            if not np.allclose(covariance, covariance.T, atol=1e-12):
                _fail("observation.covariance", "matrix is not symmetric")
            try:
                np.linalg.cholesky(covariance)
            except np.linalg.LinAlgError:
                _fail("observation.covariance", "matrix is not positive definite")

    chaser_cfg, init = _chaser(data["chaser"], "chaser")
    predictor_cfg = _predictor(data.get("predictor", {}), "predictor")

    sensing = data.get("sensing_radius")
    if sensing is not None:
        sensing = _number(sensing, "sensing_radius")

    kwargs = dict(
        name=name,
        duration=duration,
        target=target,
        obstacles=obstacles,
        chaser_init=init,
        predictor=predictor_cfg,
        chaser=chaser_cfg,
        obs_period=obs_period,
        sensing_radius=sensing,
    )
    if covariance is not None:
        kwargs["obs_covariance"] = covariance
    if "dt_sim" in data:
        kwargs["dt_sim"] = _number(data["dt_sim"], "dt_sim")
    if "pred_err_threshold" in data:
        kwargs["pred_err_threshold"] = _number(
            data["pred_err_threshold"], "pred_err_threshold"
        )
    if "feasibility_check_every" in data:
        every = data["feasibility_check_every"]
        if isinstance(every, bool) or not isinstance(every, int):
            _fail("feasibility_check_every", "expected an integer")
        kwargs["feasibility_check_every"] = every
    return Scenario(**kwargs)


def load_scenario(path) -> Scenario:
    """Parse one scenario file; errors carry the file, line, or key path."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioInvalid(f"{p}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(
            f"{p}: line {exc.lineno}: invalid JSON: {exc.msg}"
        ) from None
    return scenario_from_dict(data, default_name=p.stem)


def _script_dict(tr: Trajectory3) -> dict:
    return {"coeffs": [p.coeffs.tolist() for p in tr.axes]}


def scenario_to_dict(sc: Scenario) -> dict:
    """JSON-ready dict; loading it back yields an equivalent Scenario."""
    chaser = dataclasses.asdict(sc.chaser)
    chaser["radii"] = list(chaser["radii"])
    chaser["init"] = {
        "position": sc.chaser_init.position.tolist(),
        "velocity": sc.chaser_init.velocity.tolist(),
        "acceleration": sc.chaser_init.acceleration.tolist(),
        "jerk": sc.chaser_init.jerk.tolist(),
    }
    out = {
        "name": sc.name,
        "duration": sc.duration,
        "target": _script_dict(sc.target),
        "obstacles": [
            {
                "label": ob.label,
                "shape": ob.shape.tolist(),
                "center": _script_dict(ob.center),
            }
            for ob in sc.obstacles
        ],
        "observation": {
            "period": sc.obs_period,
            "covariance": sc.obs_covariance.tolist(),
        },
        "chaser": chaser,
        "predictor": dataclasses.asdict(sc.predictor),
        "dt_sim": sc.dt_sim,
        "pred_err_threshold": sc.pred_err_threshold,
        "feasibility_check_every": sc.feasibility_check_every,
    }
    if sc.sensing_radius is not None:
        out["sensing_radius"] = sc.sensing_radius
    return out


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
