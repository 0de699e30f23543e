"""Solar-powered UAV wireless-coverage CMDP.

State: (battery level, altitude level).  Actions: vertical speed x
transmit power x antenna beamwidth.  Reward is the edge-user coverage
probability; cost is the expected battery decrease per slot (Wh).
Battery dynamics follow the finite M/D/1 queue embedded at energy-unit
departures: each step removes d units deterministically and admits a
Poisson number of harvested units; arrivals that see a full battery are
rejected.

Encodings: state = battery_level * n_altitude + altitude_index; action =
(vz_index * 2 + ptx_index) * 2 + beam_index over the ordered action sets.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.special import erfc

from .core import Cmdp

POISSON_TAIL = 1e-13  # per-row truncation of the arrival distribution


@dataclass(frozen=True)
class UavConfig:
    """Benchmark parameters; defaults give the 3025-state instance."""

    n_altitude: int = 121          # N_z
    n_battery: int = 25            # N_b
    path_loss_exponent: float = 2.5
    harvest_efficiency: float = 0.4
    battery_capacity_wh: float = 100.0
    required_increase_wh: float = 1.67
    slot_seconds: float = 10.0
    panel_area_m2: float = 1.0
    carrier_hz: float = 2e9
    solar_intensity: float = 1367.0
    off_lobe_gain: float = 0.0
    uav_weight: float = 39.2       # kg*m/s^2
    noise_floor_dbm: float = -100.0
    air_density: float = 1.225
    rotor_area_m2: float = 0.18
    static_power_w: float = 5.0
    snr_threshold: float = 5.0     # linear ratio
    cell_radius_m: float = 250.0
    cloud_absorption: float = 0.01  # per meter
    k1: float = 10.39
    k2: float = 0.05
    z_high_m: float = 1300.0
    z_low_m: float = 700.0
    dz_min_m: float = -40.0
    dz_max_m: float = 40.0
    z_min_m: float = 500.0
    z_max_m: float = 1500.0
    g1: float = 29.06
    g2: float = 0.03
    mu_los_db: float = 1.0
    mu_nlos_db: float = 20.0
    zeta_hat: float = 0.6
    eta: float = 0.11
    gamma: float = 0.99
    vz_actions: tuple = (-4.0, 0.0, 4.0)
    ptx_actions_dbm: tuple = (34.0, 38.0)
    beam_actions_deg: tuple = (28.0, 56.0)

    def check(self):
        if not (self.z_min_m < self.z_low_m < self.z_high_m < self.z_max_m):
            raise ValueError("need z_min < z_low < z_high < z_max")
        if self.n_altitude < 2 or self.n_battery < 2:
            raise ValueError("need at least two altitude and battery levels")
        for name in ("path_loss_exponent", "harvest_efficiency",
                     "battery_capacity_wh", "slot_seconds", "panel_area_m2",
                     "carrier_hz", "solar_intensity", "uav_weight",
                     "air_density", "rotor_area_m2", "snr_threshold",
                     "cell_radius_m"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must be in (0, 1)")

    @property
    def altitude_step_m(self):
        # Inclusive lattice from z_min to z_max.
        return (self.z_max_m - self.z_min_m) / (self.n_altitude - 1)

    @property
    def energy_unit_j(self):
        # One battery level in Joules.
        return self.battery_capacity_wh * 3600.0 / self.n_battery

    @property
    def energy_unit_wh(self):
        return self.battery_capacity_wh / self.n_battery

    def altitudes(self):
        return self.z_min_m + self.altitude_step_m * np.arange(self.n_altitude)

    def actions(self):
        """Ordered (vz, ptx_dbm, beam_deg) tuples matching action indices."""
        return [(vz, ptx, beam)
                for vz in self.vz_actions
                for ptx in self.ptx_actions_dbm
                for beam in self.beam_actions_deg]


def _q_function(x):
    """Standard normal tail probability."""
    return 0.5 * erfc(x / math.sqrt(2.0))


def antenna_gain_db(theta_b_deg):
    """Main-lobe antenna gain 10 log10(29000 / theta_b^2), theta in degrees."""
    if theta_b_deg <= 0.0:
        raise ValueError("beamwidth must be positive")
    return 10.0 * math.log10(29000.0 / theta_b_deg ** 2)


def p_los(z_m, cell_radius_m, zeta_hat, eta):
    """Line-of-sight probability zeta * (elevation_deg - 15)^eta for the
    edge user, clamped to [0, 1]."""
    psi_deg = math.degrees(math.atan2(z_m, cell_radius_m))
    base = psi_deg - 15.0
    if base <= 0.0:
        return 0.0
    return min(1.0, zeta_hat * base ** eta)


def coverage_probability(z_m, theta_b_deg, p_tx_dbm, config):
    """Probability the edge-user SNR exceeds the threshold, mixing the
    LoS and NLoS lognormal-shadowing branches."""
    psi_deg = math.degrees(math.atan2(z_m, config.cell_radius_m))
    plos = p_los(z_m, config.cell_radius_m, config.zeta_hat, config.eta)
    sigma_los = config.k1 * math.exp(-config.k2 * psi_deg)
    sigma_nlos = config.g1 * math.exp(-config.g2 * psi_deg)
    gain_db = antenna_gain_db(theta_b_deg)
    dist = math.hypot(config.cell_radius_m, z_m)
    loss_db = 10.0 * config.path_loss_exponent * math.log10(
        4.0 * math.pi * config.carrier_hz * dist / SPEED_OF_LIGHT)
    noise_mw = 10.0 ** (config.noise_floor_dbm / 10.0)
    p_min_dbm = 10.0 * math.log10(noise_mw * config.snr_threshold)
    common = -p_tx_dbm - gain_db + loss_db + p_min_dbm
    return (plos * _q_function((common + config.mu_los_db) / sigma_los)
            + (1.0 - plos) * _q_function((common + config.mu_nlos_db) / sigma_nlos))


def solar_energy(z_t_m, z_next_m, config):
    """Energy harvested over one slot, attenuated by the cloud layer
    between z_low and z_high according to the mean altitude of the slot."""
    clear = (config.harvest_efficiency * config.panel_area_m2
             * config.solar_intensity * config.slot_seconds)
    z_bar = 0.5 * (z_t_m + z_next_m)
    if z_bar >= config.z_high_m:
        return clear
    if z_bar >= config.z_low_m:
        return clear * math.exp(-config.cloud_absorption * (config.z_high_m - z_bar))
    return clear * math.exp(-config.cloud_absorption * (config.z_high_m - config.z_low_m))


def uav_energy(v_z_mps, p_tx_dbm, config):
    """Energy consumed over one slot: induced hover power, climb power,
    static electronics, and transmit power.  Floored at the static power
    so descent can never yield negative consumption."""
    hover_v = math.sqrt(config.uav_weight / (2.0 * config.air_density * config.rotor_area_m2))
    induced_w = (config.uav_weight ** 2
                 / (math.sqrt(2.0) * config.air_density * config.rotor_area_m2)
                 / (math.sqrt(2.0) * hover_v))
    ptx_w = 10.0 ** (p_tx_dbm / 10.0) / 1000.0
    total_w = induced_w + config.uav_weight * v_z_mps + config.static_power_w + ptx_w
    return max(config.static_power_w, total_w) * config.slot_seconds


def battery_transition_row(b_level, e_solar_j, e_uav_j, config):
    """Distribution over next battery levels for one slot.

    d = max(1, round(E_uav / e_u)) energy units depart deterministically;
    arrivals are Poisson with mean (E_solar / E_uav) * d.  Mass is clamped
    into [0, n_battery - 1]; the upper tail accumulates at the last level
    reached, so the row sums to exactly 1.
    """
    n_b = config.n_battery
    if not (0 <= b_level < n_b):
        raise ValueError(f"battery level {b_level} out of range")
    departures = max(1, round(e_uav_j / config.energy_unit_j))
    lam = (e_solar_j / e_uav_j) * departures
    base = b_level - departures
    probs = {}
    pmf = math.exp(-lam)
    cdf = 0.0
    k = 0
    while True:
        level = min(max(base + k, 0), n_b - 1)
        if level == n_b - 1 or (cdf + pmf >= 1.0 - POISSON_TAIL and k > lam):
            probs[level] = probs.get(level, 0.0) + (1.0 - cdf)
            break
        probs[level] = probs.get(level, 0.0) + pmf
        cdf += pmf
        k += 1
        pmf *= lam / k
    row = np.zeros(n_b)
    for level, p in probs.items():
        row[level] = p
    return row


@dataclass
class UavModel:
    """Built UAV instance: CMDP plus the grids used to construct it."""

    config: UavConfig
    cmdp: Cmdp
    altitudes: np.ndarray
    actions: list
    initial_state: int

    def state_index(self, b_level, z_index):
        return b_level * self.config.n_altitude + z_index

    def state_parts(self, state):
        return divmod(state, self.config.n_altitude)

    def battery_level(self, state):
        return state // self.config.n_altitude

    # Rollout success: the battery never empties.
    def battery_never_empty(self, path):
        return all(self.battery_level(s) > 0 for s in path)


def build_uav_cmdp(config):
    """Assemble the CMDP; returns the Cmdp only.  Use
    :func:`build_uav_model` when grid metadata is needed."""
    return build_uav_model(config).cmdp


def build_uav_model(config):
    config.check()
    n_z = config.n_altitude
    n_b = config.n_battery
    altitudes = config.altitudes()
    actions = config.actions()
    n_actions = len(actions)
    n_states = n_b * n_z
    step = config.altitude_step_m
    dt = config.slot_seconds
    e_u_wh = config.energy_unit_wh

    # The edge user must sit inside the (widened) main lobe at every
    # altitude, otherwise the zero off-lobe gain would apply.
    for beam in config.beam_actions_deg:
        worst = math.degrees(math.atan2(config.cell_radius_m, config.z_min_m))
        if worst > beam:
            raise ValueError(
                f"edge user outside the main lobe: elevation offset {worst:.1f} deg "
                f"exceeds beamwidth {beam:g} deg")

    # Per (altitude, action): next altitude (snapped to the lattice),
    # energies, reward, cost, and the battery row.
    z_next_idx = np.empty((n_z, n_actions), dtype=np.int64)
    rewards_za = np.empty((n_z, n_actions))
    costs_za = np.empty((n_z, n_actions))
    battery_rows = {}
    row_for = np.empty((n_z, n_actions), dtype=object)
    for zi, z in enumerate(altitudes):
        for ai, (vz, ptx, beam) in enumerate(actions):
            target = z + vz * dt
            nzi = int(round((target - config.z_min_m) / step))
            nzi = min(max(nzi, 0), n_z - 1)
            z_next_idx[zi, ai] = nzi
            z_next = altitudes[nzi]
            v_eff = (z_next - z) / dt
            e_solar = solar_energy(z, z_next, config)
            e_uav = uav_energy(v_eff, ptx, config)
            key = (round(e_solar, 9), round(e_uav, 9))
            if key not in battery_rows:
                battery_rows[key] = np.vstack([
                    battery_transition_row(b, e_solar, e_uav, config)
                    for b in range(n_b)])
            row_for[zi, ai] = battery_rows[key]
            rewards_za[zi, ai] = coverage_probability(z, beam, ptx, config)
            # Cost is the slot's net energy balance (consumed minus
            # harvested) in Wh.  The battery-level saturation at
            # full/empty affects transitions only; charging the
            # unsaturated balance keeps the constraint meaningful from a
            # full-battery start, where the expected saturated level
            # change can never be negative.
            costs_za[zi, ai] = (e_uav - e_solar) / 3600.0

    rewards = np.zeros((n_states, n_actions))
    costs = np.zeros((n_states, n_actions))
    rows, cols, vals = [], [], []
    for b in range(n_b):
        for zi in range(n_z):
            state = b * n_z + zi
            for ai in range(n_actions):
                batt = row_for[zi, ai][b]
                nzi = z_next_idx[zi, ai]
                support = np.flatnonzero(batt)
                r = state * n_actions + ai
                rows.extend([r] * support.size)
                cols.extend(int(bp) * n_z + nzi for bp in support)
                vals.extend(batt[support])
                rewards[state, ai] = rewards_za[zi, ai]
                costs[state, ai] = costs_za[zi, ai]

    transitions = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n_states * n_actions, n_states))
    beta = np.zeros(n_states)
    initial_state = (n_b - 1) * n_z  # full battery at the lowest altitude
    beta[initial_state] = 1.0
    cmdp = Cmdp(n_states, n_actions, transitions, rewards, costs, beta,
                config.gamma, -config.required_increase_wh)
    return UavModel(config=config, cmdp=cmdp, altitudes=altitudes,
                    actions=actions, initial_state=initial_state)
