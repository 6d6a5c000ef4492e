"""Problem instances: users, geometry, spectrum/power budgets, UAV kinematics.

A :class:`Scenario` is the immutable single source of every symbol the
optimization modules share.  All quantities are SI: W, Hz, m, s, and linear
power ratios (no dB anywhere past the config parser).

Config schema (YAML, see :func:`load_scenario`)::

    num_users: 6              # required unless `users` given
    group_size: 2             # users per NOMA group (L)
    horizon_s: 50.0           # flight period T
    num_slots: 20             # trajectory discretization N
    total_bandwidth_hz: 2.0e6
    altitude_m: 100.0
    ref_gain: 1.0e-5          # channel power gain at 1 m, linear
    noise_density_w_per_hz: 1.0e-14
    dl_power_budget_w: 0.19952623149688797
    ul_power_budget_w: 1.0
    max_speed_mps: 50.0
    max_propulsion_power_w: 1000.0
    hover_power_w: 100.0      # propulsion model constant term
    propulsion_speed_coeff: 0.009   # cubic speed coefficient, W s^3/m^3
    sic_residual: 0.0         # fraction of cancelled power leaking through SIC
    mrr: 0.5                  # default per-user minimum-rate ratio (alpha)
    power_split: [0.2, 0.8]   # NOMA intra-group power ratios, strong -> weak
    convergence_eps: 1.0e-3   # relative stop threshold for the outer loop
    max_iters: 20
    grouping: interleave      # or by_id
    area_m: 1500.0            # side of the square users are dropped in
    users:                    # optional explicit user list
      - {id: 0, position: [100.0, 200.0], mrr: 0.5}

When ``users`` is omitted, positions are drawn uniformly in the
``area_m`` x ``area_m`` square from the run seed, which is the only
randomness in the whole pipeline.
"""
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import BadCardinality, ConfigError, InfeasiblePropulsion

FEAS_TOL = 1e-6  # meters of slack tolerated when validating trajectories


def _frozen(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UserSpec:
    """One ground user: position (m), minimum-rate ratio, group index."""

    id: int
    position: np.ndarray
    mrr: float
    group: int = -1

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen(self.position))
        if not np.all(np.isfinite(self.position)) or self.position.shape != (2,):
            raise ConfigError("position", "must be a finite 2-D coordinate")
        if not 0.0 <= self.mrr <= 1.0:
            raise ConfigError("mrr", f"must lie in [0, 1], got {self.mrr}")


@dataclass(frozen=True)
class Trajectory:
    """Cyclic discretized UAV path: N planar waypoints, closure implicit.

    The flight revisits ``points[0]`` after ``points[N-1]``, so per-slot
    displacement limits apply to consecutive pairs including the wrap.
    """

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(self.points))
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("trajectory must be an (N, 2) array")

    @property
    def num_slots(self):
        return self.points.shape[0]

    def displacements(self):
        """Per-slot displacement vectors, wrap segment included. Shape (N, 2)."""
        return np.roll(self.points, -1, axis=0) - self.points

    def speeds(self, horizon_s):
        """Per-slot speeds in m/s for a flight of duration ``horizon_s``."""
        dt = horizon_s / self.num_slots
        return np.linalg.norm(self.displacements(), axis=1) / dt

    def validate(self, scenario, tol=FEAS_TOL):
        """Raise ValueError if a displacement exceeds the per-slot cap."""
        cap = scenario.slot_displacement_cap()
        d = np.linalg.norm(self.displacements(), axis=1)
        worst = float(d.max(initial=0.0))
        if worst > cap + tol:
            raise ValueError(
                f"slot displacement {worst:.3f} m exceeds cap {cap:.3f} m"
            )


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance shared by every optimization module."""

    users: tuple
    num_groups: int
    group_size: int
    horizon: float
    num_slots: int
    total_bandwidth: float
    altitude: float
    ref_gain: float
    noise_density: float
    dl_power_budget: float
    ul_power_budget: float
    max_speed: float
    max_propulsion_power: float
    hover_power: float
    propulsion_speed_coeff: float
    sic_residual: float
    power_split: np.ndarray  # theta per user, groups each sum to 1
    convergence_eps: float
    max_iters: int
    area_side: float = 1500.0
    groups: tuple = field(default=())  # per-group tuples of user indices

    def __post_init__(self):
        k = len(self.users)
        if k != self.num_groups * self.group_size:
            raise BadCardinality(
                f"{k} users cannot form {self.num_groups} groups of {self.group_size}"
            )
        ids = [u.id for u in self.users]
        if len(set(ids)) != k:
            raise ConfigError("users", "user ids must be unique")
        for name in ("total_bandwidth", "ref_gain", "noise_density",
                     "dl_power_budget", "ul_power_budget", "max_speed",
                     "horizon", "altitude"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be strictly positive")
        if self.num_slots < 2:
            raise ConfigError("num_slots", "need at least 2 slots")
        if not 0.0 <= self.sic_residual <= 1.0:
            raise ConfigError("sic_residual", "must lie in [0, 1]")
        object.__setattr__(self, "power_split", _frozen(self.power_split))
        if self.power_split.shape != (k,) or np.any(self.power_split < 0):
            raise ConfigError("power_split", "need one nonnegative ratio per user")
        if not self.groups:
            raise ConfigError("groups", "scenario must carry a group partition")
        seen = sorted(i for g in self.groups for i in g)
        if seen != list(range(k)):
            raise ConfigError("groups", "groups must partition the users")
        for g in self.groups:
            s = float(self.power_split[list(g)].sum())
            if abs(s - 1.0) > 1e-12:
                raise ConfigError("power_split", f"group ratios sum to {s}, not 1")

    # -- basic views -------------------------------------------------------

    @property
    def num_users(self):
        return len(self.users)

    @property
    def positions(self):
        return np.array([u.position for u in self.users])

    @property
    def mrr(self):
        return np.array([u.mrr for u in self.users])

    @property
    def group_of_user(self):
        g = np.empty(self.num_users, dtype=int)
        for m, members in enumerate(self.groups):
            g[list(members)] = m
        return g

    def slot_duration(self):
        return self.horizon / self.num_slots

    def slot_displacement_cap(self):
        """Largest per-slot move allowed by both speed and propulsion caps."""
        return self.max_feasible_speed() * self.slot_duration()

    # -- channel and propulsion models ------------------------------------

    def channel_gains(self, trajectory):
        """Linear power gain between every user and the UAV, shape (K, N).

        Pure line-of-sight: reference gain over squared 3-D distance.
        """
        d2 = ((trajectory.points[None, :, :] - self.positions[:, None, :]) ** 2).sum(axis=2)
        return self.ref_gain / (self.altitude**2 + d2)

    def channel_gain(self, trajectory, k, n):
        """Scalar gain for user ``k`` at slot ``n``."""
        d2 = float(((trajectory.points[n] - self.users[k].position) ** 2).sum())
        return self.ref_gain / (self.altitude**2 + d2)

    def propulsion_power(self, speed):
        """Propulsion draw in W: hover term plus a cubic-in-speed term.

        Any convex nondecreasing surrogate works for the speed-cap reduction;
        this one keeps the inverse closed-form.
        """
        s = np.asarray(speed, dtype=float)
        return self.hover_power + self.propulsion_speed_coeff * s**3

    def max_feasible_speed(self):
        """Speed cap combining the kinematic limit and the propulsion budget."""
        margin = self.max_propulsion_power - self.hover_power
        if margin <= 0:
            raise InfeasiblePropulsion(
                f"propulsion budget {self.max_propulsion_power} W does not "
                f"cover hover power {self.hover_power} W"
            )
        if self.propulsion_speed_coeff <= 0:
            return self.max_speed
        return min(self.max_speed, (margin / self.propulsion_speed_coeff) ** (1.0 / 3.0))


# ---------------------------------------------------------------------------
# construction helpers


def initial_trajectory(positions, horizon, num_slots, speed_cap):
    """Warm-start path: a circle about the user centroid.

    Radius is the smallest of the RMS user spread and the radius a cyclic
    flight can sweep at ``speed_cap``, so the per-slot displacement cap holds
    by construction (chord < arc).
    """
    positions = np.asarray(positions, dtype=float)
    centroid = positions.mean(axis=0)
    r_geo = float(np.sqrt(((positions - centroid) ** 2).sum(axis=1).mean()))
    r_kin = speed_cap * horizon / (2.0 * np.pi)
    radius = min(r_geo, r_kin)
    ang = 2.0 * np.pi * np.arange(num_slots) / num_slots
    pts = centroid[None, :] + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return Trajectory(pts)


def group_users(mean_gains, num_groups, group_size, mode="interleave"):
    """Deterministic partition of users into ``num_groups`` groups.

    ``interleave`` pairs strong with weak: users are ranked by decreasing
    ``mean_gains`` and dealt boustrophedon, so group i takes ranks
    i, 2M-1-i, 2M+i, ...  ``by_id`` slices consecutive ids instead (useful
    for hand-built cases).  Ties in gain break by user index, so the result
    is a pure function of its inputs.
    """
    k = len(mean_gains)
    if k != num_groups * group_size:
        raise BadCardinality(f"{k} users != {num_groups} x {group_size}")
    if mode == "by_id":
        return tuple(
            tuple(range(m * group_size, (m + 1) * group_size))
            for m in range(num_groups)
        )
    if mode != "interleave":
        raise ConfigError("grouping", f"unknown mode '{mode}'")
    order = sorted(range(k), key=lambda i: (-mean_gains[i], i))
    groups = [[] for _ in range(num_groups)]
    for rank, user in enumerate(order):
        block, pos = divmod(rank, num_groups)
        gi = pos if block % 2 == 0 else num_groups - 1 - pos
        groups[gi].append(user)
    return tuple(tuple(sorted(g)) for g in groups)


_DEFAULTS = {
    "num_users": 6,
    "group_size": 2,
    "horizon_s": 50.0,
    "num_slots": 20,
    "total_bandwidth_hz": 2.0e6,
    "altitude_m": 100.0,
    "ref_gain": 1.0e-5,
    "noise_density_w_per_hz": 1.0e-14,
    "dl_power_budget_w": 10 ** (23 / 10) / 1000.0,  # 23 dBm
    "ul_power_budget_w": 10 ** (30 / 10) / 1000.0,  # 30 dBm
    "max_speed_mps": 50.0,
    "max_propulsion_power_w": 1000.0,
    "hover_power_w": 100.0,
    "propulsion_speed_coeff": 0.009,
    "sic_residual": 0.0,
    "mrr": 0.5,
    "power_split": [0.2, 0.8],
    "convergence_eps": 1.0e-3,
    "max_iters": 20,
    "grouping": "interleave",
    "area_m": 1500.0,
}

_NUMERIC_BOUNDS = {
    # field: (min, max, strict_min)
    "num_users": (1, None, False),
    "group_size": (1, None, False),
    "horizon_s": (0.0, None, True),
    "num_slots": (2, None, False),
    "total_bandwidth_hz": (0.0, None, True),
    "altitude_m": (0.0, None, True),
    "ref_gain": (0.0, None, True),
    "noise_density_w_per_hz": (0.0, None, True),
    "dl_power_budget_w": (0.0, None, True),
    "ul_power_budget_w": (0.0, None, True),
    "max_speed_mps": (0.0, None, True),
    "max_propulsion_power_w": (0.0, None, True),
    "hover_power_w": (0.0, None, False),
    "propulsion_speed_coeff": (0.0, None, False),
    "sic_residual": (0.0, 1.0, False),
    "mrr": (0.0, 1.0, False),
    "convergence_eps": (0.0, None, True),
    "max_iters": (1, None, False),
    "area_m": (0.0, None, True),
}


def _check_bounds(cfg):
    for name, (lo, hi, strict) in _NUMERIC_BOUNDS.items():
        v = cfg[name]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(name, f"expected a number, got {v!r}")
        if strict and v <= lo:
            raise ConfigError(name, f"must be > {lo}, got {v}")
        if not strict and v < lo:
            raise ConfigError(name, f"must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            raise ConfigError(name, f"must be <= {hi}, got {v}")


def build_scenario(config=None, seed=0):
    """Construct a Scenario from a config mapping (missing keys defaulted).

    Drops users uniformly in the configured square when the config carries
    no explicit user list; ``seed`` feeds that draw and nothing else.
    """
    cfg = dict(_DEFAULTS)
    cfg.update(config or {})
    unknown = set(cfg) - set(_DEFAULTS) - {"users"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config field")
    _check_bounds(cfg)

    raw_users = cfg.get("users")
    if raw_users:
        users = []
        for i, entry in enumerate(raw_users):
            try:
                users.append(
                    UserSpec(
                        id=int(entry.get("id", i)),
                        position=np.asarray(entry["position"], dtype=float),
                        mrr=float(entry.get("mrr", cfg["mrr"])),
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"users[{i}].{exc.args[0]}", "missing") from None
        k = len(users)
    else:
        k = int(cfg["num_users"])
        rng = np.random.default_rng(seed)
        pos = rng.uniform(0.0, cfg["area_m"], size=(k, 2))
        users = [UserSpec(id=i, position=pos[i], mrr=float(cfg["mrr"])) for i in range(k)]

    group_size = int(cfg["group_size"])
    if k % group_size:
        raise BadCardinality(f"{k} users not divisible into groups of {group_size}")
    num_groups = k // group_size

    split = np.asarray(cfg["power_split"], dtype=float)
    if split.shape != (group_size,):
        raise ConfigError("power_split", f"need {group_size} ratios, got {split.shape}")
    if abs(split.sum() - 1.0) > 1e-12 or np.any(split < 0):
        raise ConfigError("power_split", "ratios must be nonnegative and sum to 1")

    # Grouping and theta assignment rank users by time-averaged gain under
    # the warm-start trajectory, which only depends on geometry.
    speed_cap = min(
        cfg["max_speed_mps"],
        ((cfg["max_propulsion_power_w"] - cfg["hover_power_w"])
         / cfg["propulsion_speed_coeff"]) ** (1.0 / 3.0)
        if cfg["propulsion_speed_coeff"] > 0
        and cfg["max_propulsion_power_w"] > cfg["hover_power_w"]
        else cfg["max_speed_mps"],
    )
    positions = np.array([u.position for u in users])
    traj0 = initial_trajectory(positions, cfg["horizon_s"], int(cfg["num_slots"]), speed_cap)
    d2 = ((traj0.points[None, :, :] - positions[:, None, :]) ** 2).sum(axis=2)
    mean_gains = (cfg["ref_gain"] / (cfg["altitude_m"] ** 2 + d2)).mean(axis=1)
    groups = group_users(mean_gains, num_groups, group_size, mode=cfg["grouping"])

    theta = np.empty(k)
    for members in groups:
        by_strength = sorted(members, key=lambda i: (-mean_gains[i], i))
        for rank, user in enumerate(by_strength):
            theta[user] = split[rank]

    grouped_users = tuple(
        UserSpec(id=u.id, position=u.position, mrr=u.mrr, group=int(g))
        for u, g in zip(users, _group_index(groups, k))
    )
    return Scenario(
        users=grouped_users,
        num_groups=num_groups,
        group_size=group_size,
        horizon=float(cfg["horizon_s"]),
        num_slots=int(cfg["num_slots"]),
        total_bandwidth=float(cfg["total_bandwidth_hz"]),
        altitude=float(cfg["altitude_m"]),
        ref_gain=float(cfg["ref_gain"]),
        noise_density=float(cfg["noise_density_w_per_hz"]),
        dl_power_budget=float(cfg["dl_power_budget_w"]),
        ul_power_budget=float(cfg["ul_power_budget_w"]),
        max_speed=float(cfg["max_speed_mps"]),
        max_propulsion_power=float(cfg["max_propulsion_power_w"]),
        hover_power=float(cfg["hover_power_w"]),
        propulsion_speed_coeff=float(cfg["propulsion_speed_coeff"]),
        sic_residual=float(cfg["sic_residual"]),
        power_split=theta,
        convergence_eps=float(cfg["convergence_eps"]),
        max_iters=int(cfg["max_iters"]),
        area_side=float(cfg["area_m"]),
        groups=groups,
    )


def _group_index(groups, k):
    g = np.empty(k, dtype=int)
    for m, members in enumerate(groups):
        g[list(members)] = m
    return g


def load_scenario(path, seed=0):
    """Read a YAML config file and build the Scenario it describes."""
    with open(path) as fh:
        try:
            cfg = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"YAML parse error: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("<file>", "top level must be a mapping")
    return build_scenario(cfg, seed=seed)


def default_scenario(seed=0, **overrides):
    """Scenario with the stock parameter profile (see module docstring)."""
    return build_scenario(overrides, seed=seed)


def scenario_initial_trajectory(scenario):
    """Warm-start circle for a built scenario."""
    return initial_trajectory(
        scenario.positions,
        scenario.horizon,
        scenario.num_slots,
        scenario.max_feasible_speed(),
    )
