"""Three-tank process simulator and synthetic benchmark generators.

The plant is three unit-cross-section tanks in a row: a pump q1 feeds tank 1,
valve kv1 connects tanks 1-2, kv2 connects 2-3, kv3 drains tank 3, and a
second pump q3 feeds tank 3 directly (unused by the stock operating modes).
Inter-tank flow follows Torricelli's law, kv * sqrt(|dh|), signed towards the
lower level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries

ACTUATORS = ("q1", "q3", "kv1", "kv2", "kv3")
LEVEL_CHANNELS = ("h1", "h2", "h3")

# Stock operating modes: actuation vector per named state. 1 means full
# pumping power / fully open valve.
DEFAULT_STATES: dict[str, dict[str, float]] = {
    "Q1": {"q1": 0.1, "q3": 0.0, "kv1": 0.0, "kv2": 0.0, "kv3": 0.0},
    "V12": {"q1": 0.0, "q3": 0.0, "kv1": 0.1, "kv2": 0.0, "kv3": 0.0},
    "V23": {"q1": 0.0, "q3": 0.0, "kv1": 0.0, "kv2": 0.1, "kv3": 0.0},
    "V3": {"q1": 0.0, "q3": 0.0, "kv1": 0.0, "kv2": 0.0, "kv3": 0.1},
    "V12_faulty": {"q1": 0.0, "q3": 0.0, "kv1": 0.01, "kv2": 0.0, "kv3": 0.0},
    "V23_faulty": {"q1": 0.0, "q3": 0.0, "kv1": 0.0, "kv2": 0.0, "kv3": 0.0},
    "V3_faulty": {"q1": 0.0, "q3": 0.0, "kv1": 0.0, "kv2": 0.0, "kv3": 0.05},
    "Q1_faulty": {"q1": 1.0, "q3": 0.0, "kv1": 0.0, "kv2": 0.0, "kv3": 0.0},
}

# One cycle of normal operation.
NORMAL_CYCLE = ("Q1", "V12", "V23", "Q1", "V12", "V23", "V3")

FAULT_STATES = {
    "q1": "Q1_faulty",
    "v12": "V12_faulty",
    "v23": "V23_faulty",
    "v3": "V3_faulty",
}

# Component blamed by each fault scenario (the actuator whose behavior the
# faulty state corrupts).
FAULT_COMPONENTS = {"q1": "q1", "v12": "kv1", "v23": "kv2", "v3": "kv3"}

# Actuators that are active (non-zero command) in each stock state; used for
# reconstructing health knowledge from phase labels.
def active_components(state: str, states: dict[str, dict[str, float]] | None = None) -> frozenset[str]:
    table = DEFAULT_STATES if states is None else states
    if state not in table:
        raise ScenarioError(f"unknown state {state!r}")
    return frozenset(a for a in ACTUATORS if table[state].get(a, 0.0) > 0)


class ScenarioError(ValueError):
    """Raised for invalid scenario definitions."""


@dataclass(frozen=True)
class TankScenario:
    """Scriptable simulation: a state table, a schedule over it, and noise.

    noise_sigma is expressed as a multiple of the per-channel standard
    deviation of the clean level signal (0.1 means noise std is 10% of the
    signal's own std).
    """

    schedule: tuple[str, ...]
    states: dict[str, dict[str, float]] = field(default_factory=lambda: dict(DEFAULT_STATES))
    samples_per_state: int = 50
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if not self.schedule:
            raise ScenarioError("schedule must be non-empty")
        for name in self.schedule:
            if name not in self.states:
                raise ScenarioError(f"unknown state {name!r} in schedule")
        for name, act in self.states.items():
            for a, v in act.items():
                if a not in ACTUATORS:
                    raise ScenarioError(f"state {name!r}: unknown actuator {a!r}")
                if not (0.0 <= v <= 1.0):
                    raise ScenarioError(f"state {name!r}: actuation {a}={v} outside [0, 1]")
        if self.samples_per_state < 1:
            raise ScenarioError("samples_per_state must be >= 1")
        if self.noise_sigma < 0:
            raise ScenarioError("noise_sigma must be >= 0")

    def phase_labels(self) -> list[str]:
        """State name of every recorded sample, in order."""
        labels = []
        for name in self.schedule:
            labels.extend([name] * self.samples_per_state)
        return labels

    def to_dict(self) -> dict:
        return {
            "states": {k: dict(v) for k, v in self.states.items()},
            "schedule": list(self.schedule),
            "samples_per_state": self.samples_per_state,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TankScenario":
        states = d.get("states") or dict(DEFAULT_STATES)
        return cls(
            schedule=tuple(d["schedule"]),
            states={k: dict(v) for k, v in states.items()},
            samples_per_state=int(d.get("samples_per_state", 50)),
            noise_sigma=float(d.get("noise_sigma", 0.0)),
            seed=int(d.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, path) -> "TankScenario":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def normal_sequence(cycles: int) -> tuple[str, ...]:
    """`cycles` repetitions of the 7-state normal operating cycle."""
    if cycles < 1:
        raise ScenarioError("cycles must be >= 1")
    return NORMAL_CYCLE * cycles


def anomaly_sequence(fault: str, anomalous_cycles: int) -> tuple[str, ...]:
    """4 normal cycles, then faulty cycles, then 4 normal cycles.

    In the faulty cycles every occurrence of the target state is replaced by
    its faulty variant (Q1 and V12 appear twice per cycle; both are
    replaced).
    """
    if fault not in FAULT_STATES:
        raise ScenarioError(
            f"unknown fault {fault!r}; expected one of {sorted(FAULT_STATES)}"
        )
    if anomalous_cycles not in (1, 3):
        raise ScenarioError("anomalous_cycles must be 1 or 3")
    normal_state = FAULT_STATES[fault].replace("_faulty", "")
    faulty_cycle = tuple(
        FAULT_STATES[fault] if s == normal_state else s for s in NORMAL_CYCLE
    )
    return normal_sequence(4) + faulty_cycle * anomalous_cycles + normal_sequence(4)


def anomaly_window(anomalous_cycles: int, samples_per_state: int = 50) -> tuple[int, int]:
    """Row span [start, stop) of the anomalous cycles in an anomaly run."""
    per_cycle = len(NORMAL_CYCLE) * samples_per_state
    start = 4 * per_cycle
    return start, start + anomalous_cycles * per_cycle


# Integration constants: pump gain, valve gain, Euler substep and substeps
# per recorded sample.
C_Q = 1.0
C_V = 1.0
DT = 0.1
SUBSTEPS = 10


def _step(levels: np.ndarray, act: dict[str, float]) -> tuple[np.ndarray, float, float]:
    """One Euler substep. Returns (new levels, inflow volume, outflow volume).

    Outgoing flows are capped by the volume available in their source tank
    so levels stay non-negative and mass is conserved exactly; a plain
    clamp-to-zero after the step would create phantom volume near empty
    tanks and break the mass balance.
    """
    h1, h2, h3 = levels
    in1 = DT * C_Q * act["q1"]
    in3 = DT * C_Q * act["q3"]
    # Signed transfer volumes for this substep (positive = downstream).
    t12 = DT * C_V * act["kv1"] * np.sign(h1 - h2) * np.sqrt(abs(h1 - h2))
    t23 = DT * C_V * act["kv2"] * np.sign(h2 - h3) * np.sqrt(abs(h2 - h3))
    out3 = DT * C_V * act["kv3"] * np.sqrt(max(h3, 0.0))

    o1 = max(t12, 0.0)
    o2 = max(-t12, 0.0) + max(t23, 0.0)
    o3 = max(-t23, 0.0) + out3
    s1 = 1.0 if o1 <= h1 else h1 / o1
    s2 = 1.0 if o2 <= h2 else h2 / o2
    s3 = 1.0 if o3 <= h3 else h3 / o3
    t12 *= s1 if t12 > 0 else s2
    t23 *= s2 if t23 > 0 else s3
    out3 *= s3

    new = np.array(
        [
            h1 + in1 - t12,
            h2 + t12 - t23,
            h3 + t23 + in3 - out3,
        ]
    )
    np.maximum(new, 0.0, out=new)
    return new, in1 + in3, out3


def simulate(scenario: TankScenario, initial_levels=(0.0, 0.0, 0.0)) -> TimeSeries:
    """Run the scenario and return noisy levels plus clean actuation channels.

    Channels: h1, h2, h3 (observed levels, Gaussian noise per noise_sigma)
    followed by q1, q3, kv1, kv2, kv3 (commanded actuation, noise-free).
    Simulation state carries over across schedule entries; there is no reset
    between states. Deterministic for a fixed seed.
    """
    levels = np.asarray(initial_levels, dtype=np.float64).copy()
    n = len(scenario.schedule) * scenario.samples_per_state
    clean = np.empty((n, 3))
    acts = np.empty((n, len(ACTUATORS)))
    row = 0
    for name in scenario.schedule:
        act = {a: float(scenario.states[name].get(a, 0.0)) for a in ACTUATORS}
        act_vec = np.array([act[a] for a in ACTUATORS])
        for _ in range(scenario.samples_per_state):
            for _ in range(SUBSTEPS):
                levels, _, _ = _step(levels, act)
            clean[row] = levels
            acts[row] = act_vec
            row += 1

    observed = clean
    if scenario.noise_sigma > 0:
        rng = np.random.default_rng(scenario.seed)
        scale = clean.std(axis=0, ddof=1) if n > 1 else np.zeros(3)
        observed = clean + rng.standard_normal(clean.shape) * (scenario.noise_sigma * scale)
        np.maximum(observed, 0.0, out=observed)

    values = np.hstack([observed, acts])
    return TimeSeries(
        np.arange(n, dtype=np.int64), LEVEL_CHANNELS + ACTUATORS, values
    )


def mass_balance_error(scenario: TankScenario, initial_levels=(0.0, 0.0, 0.0)) -> float:
    """|inflow - outflow - storage change| for the noise-free simulation."""
    levels = np.asarray(initial_levels, dtype=np.float64).copy()
    start_volume = levels.sum()
    inflow = outflow = 0.0
    for name in scenario.schedule:
        act = {a: float(scenario.states[name].get(a, 0.0)) for a in ACTUATORS}
        for _ in range(scenario.samples_per_state * SUBSTEPS):
            levels, di, do = _step(levels, act)
            inflow += di
            outflow += do
    return abs(inflow - outflow - (levels.sum() - start_volume))


# Synthetic 2-D benchmark datasets. The generated TimeSeries carries the
# ground-truth generator label in a third channel ("label") used only for
# evaluation, never for training.

PROPERTY1_MEANS = np.array([[-4.0, -4.0], [0.0, 4.0], [4.0, -2.0]])
PROPERTY1_SIGMA = 0.5

PROPERTY2_A = 4.0
PROPERTY2_B = 2.0
PROPERTY2_THETA_MODES = (0.0, np.pi)
PROPERTY2_THETA_SIGMA = 0.5
PROPERTY2_NOISE = 0.1


def generate_property1(n_samples: int, seed: int = 0, sigma: float = PROPERTY1_SIGMA) -> TimeSeries:
    """Equal-weight mixture of three spherical Gaussians in 2-D."""
    if n_samples < 3:
        raise ScenarioError("n_samples must be >= 3")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=n_samples)
    points = PROPERTY1_MEANS[labels] + rng.standard_normal((n_samples, 2)) * sigma
    values = np.column_stack([points, labels.astype(np.float64)])
    return TimeSeries(np.arange(n_samples, dtype=np.int64), ("x1", "x2", "label"), values)


def generate_property2(
    n_samples: int, seed: int = 0, noise: float = PROPERTY2_NOISE
) -> TimeSeries:
    """Two angular modes on an ellipse, plus isotropic Gaussian noise."""
    if n_samples < 2:
        raise ScenarioError("n_samples must be >= 2")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n_samples)
    centers = np.array(PROPERTY2_THETA_MODES)
    theta = centers[labels] + rng.standard_normal(n_samples) * PROPERTY2_THETA_SIGMA
    points = np.column_stack([PROPERTY2_A * np.cos(theta), PROPERTY2_B * np.sin(theta)])
    points += rng.standard_normal((n_samples, 2)) * noise
    values = np.column_stack([points, labels.astype(np.float64)])
    return TimeSeries(np.arange(n_samples, dtype=np.int64), ("x1", "x2", "label"), values)


def ellipse_distance(point, a: float = PROPERTY2_A, b: float = PROPERTY2_B) -> float:
    """Euclidean distance from a 2-D point to the ellipse (x/a)^2+(y/b)^2=1.

    Dense parametric scan refined by golden-section search; accurate to well
    below the tolerances it is checked against.
    """
    x, y = float(point[0]), float(point[1])
    theta = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)

    def dist(t):
        return np.hypot(a * np.cos(t) - x, b * np.sin(t) - y)

    i = int(np.argmin(dist(theta)))
    lo, hi = theta[i] - 2 * np.pi / 720, theta[i] + 2 * np.pi / 720
    phi = (np.sqrt(5.0) - 1) / 2
    for _ in range(60):
        m1 = hi - phi * (hi - lo)
        m2 = lo + phi * (hi - lo)
        if dist(m1) < dist(m2):
            hi = m2
        else:
            lo = m1
    return float(dist(0.5 * (lo + hi)))
