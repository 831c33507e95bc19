"""A small 2D differential-drive navigation task.

A round robot drives around a 1 m x 1 m room containing one pillar. It sees
the world either through 8 proximity rays or through a 32-pixel depth strip
covering its forward field of view. Actions nudge the wheel speeds:

    0  keep both wheel speeds
    1  left wheel faster      (turns right)
    2  right wheel faster     (turns left)
    3  both wheels faster     (+1 reward)
    4  both wheels slower

Any step ending with a proximity ray shorter than 10 cm costs -1. Rewards
add, so driving forward into a wall is worth 0. Collisions slide the robot
along the obstacle surface; episodes only end at the step cap.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .errors import ContractViolation

N_ACTIONS = 5
STAY, LEFT_UP, RIGHT_UP, FORWARD, BRAKE = range(N_ACTIONS)

# Degrees, counter-clockwise from the heading: front-right round to front-left.
SENSOR_ANGLES = (-15.0, -45.0, -90.0, -150.0, 150.0, 90.0, 45.0, 15.0)


@dataclass(frozen=True)
class SceneGeometry:
    room_size: float = 1.0
    pillar_x: float = 0.65
    pillar_y: float = 0.65
    pillar_radius: float = 0.08
    robot_radius: float = 0.037
    wheel_base: float = 0.03
    accel: float = 0.02
    max_wheel_speed: float = 0.10
    dt: float = 0.05
    sensor_range: float = 0.30
    penalty_distance: float = 0.10
    camera_rays: int = 32
    camera_fov: float = 60.0
    camera_range: float = 1.5
    spawn_clearance: float = 0.10
    episode_cap: int = 500

    def __post_init__(self):
        L, px, py, pr = self.room_size, self.pillar_x, self.pillar_y, self.pillar_radius
        if not (pr < px < L - pr and pr < py < L - pr):
            raise ContractViolation("pillar must lie strictly inside the room")
        margin = self.robot_radius + self.spawn_clearance
        if 2 * margin >= L:
            raise ContractViolation("spawn margin leaves no room to spawn")
        positive = ("room_size", "robot_radius", "wheel_base", "accel", "max_wheel_speed", "dt",
                    "sensor_range", "camera_range", "camera_fov")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")
        if self.camera_rays < 1 or self.episode_cap < 0:
            raise ContractViolation("camera_rays must be >= 1 and episode_cap >= 0")

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: type(f.default) for f in fields(cls)}


@dataclass
class WorldState:
    x: float
    y: float
    heading: float
    v_left: float = 0.0
    v_right: float = 0.0
    steps: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)


@dataclass(frozen=True)
class ObservationPair:
    sensor_obs: np.ndarray
    camera_obs: np.ndarray


def ray_distances(x: float, y: float, angles, geometry: SceneGeometry) -> np.ndarray:
    """Distance from the robot's surface to the first obstacle along each ray.

    ``angles`` are absolute (world-frame) directions. Uncapped.
    """
    angles = np.asarray(angles, dtype=np.float64)
    dx, dy = np.cos(angles), np.sin(angles)
    L = geometry.room_size
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(dx > 0, (L - x) / dx, np.where(dx < 0, -x / dx, np.inf))
        ty = np.where(dy > 0, (L - y) / dy, np.where(dy < 0, -y / dy, np.inf))
    t = np.minimum(tx, ty)
    fx, fy = x - geometry.pillar_x, y - geometry.pillar_y
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - geometry.pillar_radius ** 2
    disc = b * b - c
    hit = (disc >= 0) & (b < 0) & (c >= -1e-12)  # tolerate contact after collision clamping
    t_pillar = np.where(hit, np.maximum(-b - np.sqrt(np.where(hit, disc, 0.0)), 0.0), np.inf)
    t = np.minimum(t, t_pillar)
    return np.maximum(t - geometry.robot_radius, 0.0)


def raycast(world: WorldState, geometry: SceneGeometry, angle: float, cap: bool = True) -> float:
    """Surface distance along ``heading + angle`` (radians), capped at sensor range."""
    d = float(ray_distances(world.x, world.y, [world.heading + angle], geometry)[0])
    return min(d, geometry.sensor_range) if cap else d


def sensor_distances(world: WorldState, geometry: SceneGeometry) -> np.ndarray:
    """Raw (uncapped) distances of the 8 proximity rays."""
    return ray_distances(world.x, world.y, world.heading + np.radians(SENSOR_ANGLES), geometry)


def camera_angles(geometry: SceneGeometry) -> np.ndarray:
    """Pixel directions relative to the heading, left edge first."""
    half = math.radians(geometry.camera_fov) / 2
    if geometry.camera_rays == 1:
        return np.zeros(1)
    return np.linspace(half, -half, geometry.camera_rays)


def render_camera(world: WorldState, geometry: SceneGeometry) -> np.ndarray:
    d = ray_distances(world.x, world.y, world.heading + camera_angles(geometry), geometry)
    return np.clip(1.0 - d / geometry.camera_range, 0.0, 1.0)


def observe(world: WorldState, geometry: SceneGeometry) -> ObservationPair:
    raw = sensor_distances(world, geometry)
    return ObservationPair(np.minimum(raw, geometry.sensor_range) / geometry.sensor_range,
                           render_camera(world, geometry))


def clearance(x: float, y: float, geometry: SceneGeometry) -> float:
    """Exact surface-to-surface gap between the robot and the nearest obstacle."""
    r = geometry.robot_radius
    walls = min(x, y, geometry.room_size - x, geometry.room_size - y) - r
    pillar = math.hypot(x - geometry.pillar_x, y - geometry.pillar_y) - geometry.pillar_radius - r
    return min(walls, pillar)


def resolve_collisions(x: float, y: float, geometry: SceneGeometry) -> tuple[float, float]:
    r, L = geometry.robot_radius, geometry.room_size
    x = min(max(x, r), L - r)
    y = min(max(y, r), L - r)
    fx, fy = x - geometry.pillar_x, y - geometry.pillar_y
    dist = math.hypot(fx, fy)
    reach = geometry.pillar_radius + r
    if dist < reach:
        if dist == 0.0:
            fx, fy, dist = 1.0, 0.0, 1.0
        x = geometry.pillar_x + fx / dist * reach
        y = geometry.pillar_y + fy / dist * reach
    return x, y


def integrate(world: WorldState, geometry: SceneGeometry) -> None:
    """Advance the pose by one control period of exact arc motion."""
    v = 0.5 * (world.v_left + world.v_right)
    w = (world.v_right - world.v_left) / geometry.wheel_base
    dt, th = geometry.dt, world.heading
    if abs(w) < 1e-12:
        x = world.x + v * dt * math.cos(th)
        y = world.y + v * dt * math.sin(th)
    else:
        x = world.x + v / w * (math.sin(th + w * dt) - math.sin(th))
        y = world.y - v / w * (math.cos(th + w * dt) - math.cos(th))
    world.heading = (th + w * dt) % (2 * math.pi)
    world.x, world.y = resolve_collisions(x, y, geometry)


def apply_action(world: WorldState, action: int, geometry: SceneGeometry) -> None:
    d, vmax = geometry.accel, geometry.max_wheel_speed
    vl, vr = world.v_left, world.v_right
    if action == LEFT_UP:
        vl += d
    elif action == RIGHT_UP:
        vr += d
    elif action == FORWARD:
        vl, vr = vl + d, vr + d
    elif action == BRAKE:
        vl, vr = vl - d, vr - d
    # Round away float drift so the speeds land exactly on the clamp.
    world.v_left = min(max(round(vl, 12), -vmax), vmax)
    world.v_right = min(max(round(vr, 12), -vmax), vmax)


def reward_for(action: int, min_distance: float, geometry: SceneGeometry) -> float:
    return (1.0 if action == FORWARD else 0.0) - (1.0 if min_distance < geometry.penalty_distance else 0.0)


class NavSim:
    """The robot world. ``reset`` then ``step`` until ``done``."""

    n_actions = N_ACTIONS

    def __init__(self, geometry: Optional[SceneGeometry] = None, record_trajectory: bool = False):
        self.geometry = geometry or SceneGeometry()
        self.world: Optional[WorldState] = None
        self.done = False
        self.record_trajectory = record_trajectory
        self.trajectory: list[tuple] = []

    def spawn(self, rng: np.random.Generator) -> WorldState:
        g = self.geometry
        lo = g.robot_radius + g.spawn_clearance
        hi = g.room_size - lo
        while True:
            x, y = rng.uniform(lo, hi, size=2)
            if clearance(x, y, g) >= g.spawn_clearance:
                return WorldState(float(x), float(y), float(rng.uniform(0.0, 2 * math.pi)), rng=rng)

    def reset(self, seed=None) -> ObservationPair:
        rng = self.world.rng if (seed is None and self.world is not None) else np.random.default_rng(seed)
        self.world = self.spawn(rng)
        self.done = self.geometry.episode_cap == 0
        self.trajectory = []
        return observe(self.world, self.geometry)

    def place(self, x: float, y: float, heading: float, v_left: float = 0.0, v_right: float = 0.0) -> ObservationPair:
        """Put the robot at an exact pose (tests and demonstrations)."""
        rng = self.world.rng if self.world is not None else np.random.default_rng()
        self.world = WorldState(x, y, heading, v_left, v_right, 0, rng)
        self.done = False
        return observe(self.world, self.geometry)

    def observe(self) -> ObservationPair:
        return observe(self.world, self.geometry)

    def step(self, action: int) -> tuple[ObservationPair, float, bool]:
        if self.world is None:
            raise ContractViolation("step() called before reset()")
        if self.done:
            raise ContractViolation("episode is over; call reset()")
        if not 0 <= action < N_ACTIONS:
            raise ContractViolation(f"action must be in [0, {N_ACTIONS}), got {action}")
        g, w = self.geometry, self.world
        apply_action(w, action, g)
        integrate(w, g)
        w.steps += 1
        raw = sensor_distances(w, g)
        reward = reward_for(action, float(raw.min()), g)
        self.done = w.steps >= g.episode_cap
        if self.record_trajectory:
            self.trajectory.append((w.steps, w.x, w.y, w.heading, action, reward))
        obs = ObservationPair(np.minimum(raw, g.sensor_range) / g.sensor_range, render_camera(w, g))
        return obs, reward, self.done

    def dump_trajectory(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "x", "y", "heading", "action", "reward"])
            writer.writerows(self.trajectory)


class NavTask:
    """Adapts :class:`NavSim` to the ``(primary, advisor)`` environment contract.

    The advisor side always gets the proximity readings; the learner sees
    either the same readings (``"sensors"``) or the depth strip (``"camera"``).
    """

    done_is_terminal = False  # the only ending is the time limit

    def __init__(self, primary: str = "sensors", geometry: Optional[SceneGeometry] = None,
                 episode_cap: Optional[int] = None):
        if primary not in ("sensors", "camera"):
            raise ContractViolation(f"primary must be 'sensors' or 'camera', got {primary!r}")
        geometry = geometry or SceneGeometry()
        if episode_cap is not None:
            geometry = replace(geometry, episode_cap=episode_cap)
        self.sim = NavSim(geometry)
        self.primary = primary
        self.n_actions = N_ACTIONS
        self.advisor_width = len(SENSOR_ANGLES)
        self.primary_width = self.advisor_width if primary == "sensors" else geometry.camera_rays

    def _split(self, obs: ObservationPair):
        main = obs.sensor_obs if self.primary == "sensors" else obs.camera_obs
        return main, obs.sensor_obs

    def reset(self, seed=None):
        return self._split(self.sim.reset(seed))

    def step(self, action: int):
        obs, reward, done = self.sim.step(action)
        return self._split(obs), reward, done


FRONT_LEFT = [i for i, a in enumerate(SENSOR_ANGLES) if 0 < a < 60]
FRONT_RIGHT = [i for i, a in enumerate(SENSOR_ANGLES) if -60 < a < 0]


def scripted_expert(sensor_obs, wheels: Optional[tuple[float, float]] = (0.0, 0.0),
                    geometry: Optional[SceneGeometry] = None,
                    clear: float = 0.15, release: float = 0.20) -> int:
    """Reactive reference controller on the normalized proximity readings.

    Drives forward while every front ray reads more than ``clear`` metres.
    Otherwise it turns away from the closer side (ties turn right, i.e.
    action 1) by pivoting: the outer wheel goes to full speed and the inner
    wheel is braked to a stop. Once a turn has started it keeps its direction
    until the front opens beyond ``release`` metres.

    ``wheels`` are the current (left, right) speeds. The controller can track
    them itself since only its own actions change them.
    """
    g = geometry or SceneGeometry()
    d = np.asarray(sensor_obs, dtype=np.float64) * g.sensor_range
    if len(d) != len(SENSOR_ANGLES):
        raise ContractViolation(f"expected {len(SENSOR_ANGLES)} readings, got {len(d)}")
    left, right = d[FRONT_LEFT].min(), d[FRONT_RIGHT].min()
    vl, vr = wheels
    eps, top = 1e-9, g.max_wheel_speed - 1e-9
    turning = abs(vl - vr) > eps
    if min(left, right) > (release if turning else clear):
        return FORWARD
    if turning:
        right_turn = vl > vr
    else:
        right_turn = left <= right
    outer, inner = (vl, vr) if right_turn else (vr, vl)
    speed_up = LEFT_UP if right_turn else RIGHT_UP
    if inner <= eps:
        return STAY if outer >= top else speed_up
    return speed_up if outer < top else BRAKE
