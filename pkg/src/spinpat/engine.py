"""Time-domain co-simulation of ASL netlists.

Each channel network is reduced once to its interface ports (exact Schur
complement of the finite-difference grid).  Every time step the port
systems of the supplied networks are re-solved for the current
magnetisations, the absorbed spin currents are handed to the LLG kernel,
and the magnets advance by one Heun step.

Only the receiving magnet of a network feels its torque.  Supplied magnets
are treated as ideal sources: in ASL the supply makes transmission
directional, so the back-action on the inputs is left out.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from ._accel import get_backend
from .magnetics import (MagnetGeometry, PhysicalConstants, ThermalEnvironment, critical_spin_current,
                        detect_switching_times,
                        kernel_coefficients, out_of_plane_scale, sample_initial_state, thermal_field_sigma, tilted)
from .netlist import Netlist
from .transport import build_network, port_models, solve_network, solve_steady_state

NO_SWITCH = "no-switch"
UNDECIDED = None

_NOISE_CHUNK = 8192


class ScheduleError(ValueError):
    pass


class CalibrationRequiredError(LookupError):
    pass


# ---------------------------------------------------------------------------
# Supply schedules
# ---------------------------------------------------------------------------

@dataclass
class SupplySchedule:
    """Piecewise-constant supply voltage per magnet.

    ``changes`` is a list of ``(t, {magnet: V})``; each map is the complete
    set of non-zero voltages from ``t`` until the next change.
    """
    changes: list = field(default_factory=list)
    cap: float = 20e-3

    def __post_init__(self):
        last = -math.inf
        for t, volts in self.changes:
            if t < last:
                raise ScheduleError("schedule times must be non-decreasing")
            last = t
            for mid, v in volts.items():
                if not math.isfinite(v) or abs(v) > self.cap * (1 + 1e-12):
                    raise ScheduleError(f"supply on '{mid}' ({v:g} V) exceeds the {self.cap:g} V cap")

    @classmethod
    def off(cls) -> "SupplySchedule":
        return cls([(0.0, {})])

    @classmethod
    def constant(cls, voltages: dict, cap: float = 20e-3) -> "SupplySchedule":
        return cls([(0.0, dict(voltages))], cap)

    @classmethod
    def staged(cls, netlist: Netlist, V: float, phases: list | None = None,
               cap: float = 20e-3) -> "SupplySchedule":
        """Supply every magnet with ``polarity * V`` during its stage's phase.

        ``phases[k] = (t_on, t_off)`` for stage ``k``; ``t_off = None`` keeps
        the stage on.  Without ``phases`` all stages are on from t = 0.
        """
        windows = []
        for s in netlist.supplies:
            if phases is None:
                on, off = 0.0, None
            else:
                if s.stage >= len(phases):
                    raise ScheduleError(f"no phase defined for stage {s.stage}")
                on, off = phases[s.stage]
            windows.append((s.magnet, s.polarity * V, on, off))
        times = sorted({0.0} | {w[2] for w in windows} | {w[3] for w in windows if w[3] is not None})
        changes = []
        for t in times:
            volts = {m: v for m, v, on, off in windows if on <= t and (off is None or t < off)}
            changes.append((t, volts))
        return cls(changes, cap)

    def voltages_at(self, t: float) -> dict:
        cur = {}
        for tc, volts in self.changes:
            if tc <= t:
                cur = volts
            else:
                break
        return cur

    def breakpoints(self) -> list[float]:
        return [t for t, _ in self.changes]

    def peak_voltages(self) -> dict:
        """Voltage each magnet is supplied with when on (largest magnitude)."""
        out = {}
        for _, volts in self.changes:
            for m, v in volts.items():
                if abs(v) > abs(out.get(m, 0.0)):
                    out[m] = v
        return out


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

@dataclass
class CompiledCircuit:
    netlist: Netlist
    ids: list
    index: dict
    geometries: list
    hk: np.ndarray
    hd: np.ndarray
    al: np.ndarray
    gam: np.ndarray
    iq: np.ndarray
    nports: np.ndarray
    pmag: np.ndarray
    pdrive: np.ndarray
    pw: np.ndarray
    ystat: np.ndarray
    recv: np.ndarray
    g: np.ndarray
    acinv: np.ndarray
    drivers: list          # magnet indices supplying each network
    receivers: list        # magnet id receiving from each network
    params: object
    constants: PhysicalConstants


def _geometry(params, m) -> MagnetGeometry:
    if m.geometry:
        return MagnetGeometry(m.geometry["Lx"], m.geometry["Ly"], m.geometry["Lz"])
    return params.geometry()


def compile_circuit(netlist: Netlist, params=None) -> CompiledCircuit:
    """Reduce a netlist to the flat arrays consumed by the kernels."""
    if params is None:
        from .config import default_params

        params = default_params()
    consts = PhysicalConstants.from_params(params)
    material = params.material()
    tnet = build_network(netlist, params=params)
    models = port_models(tnet)
    ids = netlist.magnet_ids
    index = {m: k for k, m in enumerate(ids)}
    geoms = [_geometry(params, m) for m in netlist.magnets]
    coef = np.array([kernel_coefficients(material, g, consts) for g in geoms])
    K = max(len(pm.magnets) for pm in models)
    n = len(models)
    pmag = -np.ones((n, K), dtype=np.int64)
    pdrive = np.zeros((n, K), dtype=np.int64)
    pw = np.zeros((n, K))
    ystat = np.zeros((n, 4 * K, 4 * K))
    recv = np.zeros(n, dtype=np.int64)
    nports = np.zeros(n, dtype=np.int64)
    drivers, receivers = [], []
    g = params.interface().as_array()
    for k, pm in enumerate(models):
        kk = len(pm.magnets)
        nports[k] = kk
        pmag[k, :kk] = [index[m] for m in pm.magnets]
        pdrive[k, :kk] = pm.drive
        pw[k, :kk] = pm.weights
        ystat[k] = pm.ystat(K)
        recv[k] = pm.receiver
        drivers.append([index[m] for m, d in zip(pm.magnets, pm.drive) if d])
        receivers.append(pm.magnets[pm.receiver])
    return CompiledCircuit(netlist, ids, index, geoms, coef[:, 0].copy(), coef[:, 1].copy(),
                           coef[:, 2].copy(), coef[:, 3].copy(), coef[:, 4].copy(), nports, pmag,
                           pdrive, pw, ystat, recv, g, kernels.charge_inverse(ystat, nports, pw, recv, g),
                           drivers, receivers, params, consts)


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

@dataclass
class SimulationTrace:
    times: np.ndarray          # (n_samples,)
    ids: list
    data: np.ndarray           # (n_samples, n_rec, 3)
    dt: float                  # sample period
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._col = {m: k for k, m in enumerate(self.ids)}

    def _k(self, magnet_id):
        try:
            return self._col[magnet_id]
        except KeyError:
            raise KeyError(f"magnet '{magnet_id}' is not in the trace") from None

    def m(self, magnet_id) -> np.ndarray:
        return self.data[:, self._k(magnet_id), :]

    def component(self, magnet_id, axis: int) -> np.ndarray:
        return self.data[:, self._k(magnet_id), axis]

    def final(self, magnet_id) -> np.ndarray:
        return self.data[-1, self._k(magnet_id)]

    def switching_time(self, magnet_id, t_start: float = 0.0, t_stop: float | None = None) -> float | None:
        """Switching time measured from ``t_start`` (None if it never switches)."""
        sel = self.times >= t_start - 1e-15
        if t_stop is not None:
            sel &= self.times <= t_stop + 1e-15
        t = detect_switching_times(self.times[sel], self.component(magnet_id, 0)[sel])
        return None if t is None else t - t_start

    def switching_events(self) -> dict:
        return {m: self.switching_time(m) for m in self.ids}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s"] + [f"{m}_{c}" for m in self.ids for c in ("mx", "my", "mz")])
        flat = self.data.reshape(len(self.times), -1)
        for t, row in zip(self.times, flat):
            w.writerow([f"{t:.6e}"] + [f"{v:.9f}" for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "SimulationTrace":
        with open(path) as fh:
            rows = list(csv.reader(fh))
        head = rows[0][1:]
        ids = [h[:-3] for h in head[::3]]
        arr = np.array(rows[1:], dtype=float)
        times = arr[:, 0]
        data = arr[:, 1:].reshape(len(times), len(ids), 3)
        dt = times[1] - times[0] if len(times) > 1 else 0.0
        return cls(times, ids, data, dt)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

_GOLDEN = math.pi * (3.0 - math.sqrt(5.0))


def _initial(value, geom_eb, env, params, rng, tilt, k, squash=1.0):
    if np.ndim(value) == 1 and np.size(value) == 3:
        v = np.asarray(value, dtype=float)
        return v / np.linalg.norm(v)
    v = int(value)
    sign = 1 if v in (1,) else -1 if v in (0, -1) else None
    if sign is None:
        raise ValueError(f"initial state must be a bit, +-1 or a 3-vector, got {value!r}")
    # noise-free runs: fixed tilt, azimuth spread over magnets so that no two
    # magnets start exactly (anti)parallel
    phi = math.pi / 4 + k * _GOLDEN
    if tilt is not None:
        return tilted(sign, float(tilt), phi, squash)
    kB = params["constants.kB"]
    if env.T > 0:
        return sample_initial_state(sign, math.sqrt(kB * env.T / geom_eb), rng, squash)
    return tilted(sign, math.sqrt(kB * params["thermal.T_nominal"] / geom_eb), phi, squash)


def simulate(netlist: Netlist | CompiledCircuit, schedule: SupplySchedule, initial_states: dict,
             env: ThermalEnvironment | None = None, dt: float | None = None, t_end: float = 1e-9,
             *, params=None, record=None, sample_every: int | None = None,
             tilt: float | None = None) -> SimulationTrace:
    """Co-simulate transport and magnetisation dynamics.

    Parameters
    ----------
    initial_states : dict
        Magnet id -> bit (0/1), sign (-1/+1) or explicit 3-vector.  Bits
        and signs start tilted from the easy axis: thermally sampled when
        ``env.T > 0``, otherwise by the nominal thermal angle with the
        azimuth advanced by the golden angle from magnet to magnet (``tilt``
        overrides the angle; ``tilt=0`` starts exactly on the axis).
        Explicit vectors are used as given.
    env : ThermalEnvironment, optional
        Temperature and seed; defaults to the parameter file at seed 0.
    record : list of str, optional
        Magnets to record (default: all).
    """
    cc = netlist if isinstance(netlist, CompiledCircuit) else compile_circuit(netlist, params)
    params = cc.params
    dt = params["simulation.dt"] if dt is None else dt
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    se = int(params["simulation.sample_every"]) if sample_every is None else int(sample_every)
    env = params.thermal(seed=0) if env is None else env
    missing = [m for m in cc.ids if m not in initial_states]
    if missing:
        raise KeyError(f"no initial state for magnets {missing}")
    unknown = set(initial_states) - set(cc.ids)
    if unknown:
        raise KeyError(f"initial states given for unknown magnets {sorted(unknown)}")

    rng = np.random.default_rng(np.random.SeedSequence(int(env.seed)))
    material = params.material()
    m = np.array([_initial(initial_states[mid], material.Ku * g.volume, env, params, rng, tilt, k,
                           out_of_plane_scale(material, g, cc.constants))
                  for k, (mid, g) in enumerate(zip(cc.ids, cc.geometries))])
    n_mag = len(cc.ids)
    th_sigma = np.array([thermal_field_sigma(material, g, env.T, dt, cc.constants) for g in cc.geometries])
    noisy = env.T > 0

    rec_ids = list(cc.ids) if record is None else list(record)
    rec_idx = np.array([cc.index[r] for r in rec_ids], dtype=np.int64)
    n_steps = int(round(t_end / dt))
    out = np.empty((n_steps // se + 1, len(rec_idx), 3))
    out[0] = m[rec_idx]

    bps = sorted({min(n_steps, max(0, int(round(t / dt)))) for t in schedule.breakpoints()} | {0, n_steps})
    t0 = time.perf_counter()
    empty_noise = np.zeros((0, n_mag, 3))
    for s0, s1 in zip(bps[:-1], bps[1:]):
        volts_map = schedule.voltages_at(s0 * dt + 0.5 * dt)
        volts = np.zeros(n_mag)
        for mid, v in volts_map.items():
            volts[cc.index[mid]] = v
        active = np.array([k for k, drv in enumerate(cc.drivers) if np.any(volts[drv] != 0.0)],
                          dtype=np.int64)
        s = s0
        while s < s1:
            n = min(_NOISE_CHUNK, s1 - s)
            noise = rng.standard_normal((n, n_mag, 3)) if noisy else empty_noise
            kernels.run_chunk(m, noise, th_sigma, dt, cc.hk, cc.hd, cc.al, cc.gam, cc.iq,
                              volts, active, cc.nports, cc.pmag, cc.pdrive, cc.pw, cc.ystat, cc.recv,
                              cc.g, cc.acinv, n, s, se, rec_idx, out)
            s += n
    wall = time.perf_counter() - t0
    times = np.arange(out.shape[0]) * dt * se
    meta = {"seed": int(env.seed), "T": env.T, "dt": dt, "steps": n_steps, "backend": get_backend(),
            "wall_time_s": wall}
    return SimulationTrace(times, rec_ids, out, dt * se, meta)


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------

def steady_logic_value(trace: SimulationTrace, magnet_id: str, window: float | None = None):
    """1 if mean m_x over the final ``window`` is >= 0.9, 0 if <= -0.9, else None."""
    mx = trace.component(magnet_id, 0)
    if window is None or window <= 0:
        n = 1
    else:
        n = max(1, int(round(window / trace.dt)))
        if n > len(mx):
            raise ValueError("window longer than the trace")
    mean = float(np.mean(mx[-n:]))
    if mean >= 0.9:
        return 1
    if mean <= -0.9:
        return 0
    return UNDECIDED


@dataclass
class CalibrationTable:
    """Median switching delay per aligned-input count for one gate setting."""
    fan_in: int
    V: float
    T: float
    medians: dict            # aligned count -> median delay (s)
    window: float = 2e-9

    def classify(self, delay: float | None):
        if delay is None or delay > self.window:
            return NO_SWITCH
        return min(self.medians, key=lambda c: (abs(self.medians[c] - delay), -c))


def calibration_key(fan_in: int, V: float, T: float) -> str:
    return f"fanin={fan_in},V={abs(V) * 1e3:g}mV,T={T:g}K"


def load_calibration(fan_in: int, V: float, T: float, path=None) -> CalibrationTable:
    """Stored delay-class table for a gate setting (bundled file by default)."""
    if path is None:
        text = resources.files("spinpat").joinpath("data").joinpath("calibration.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    key = calibration_key(fan_in, V, T)
    entry = doc.get("delay_classes", {}).get(key)
    if entry is None:
        raise CalibrationRequiredError(f"no delay calibration for {key}; run `spinpat calibrate-tau0`")
    return CalibrationTable(fan_in, V, T, {int(k): v for k, v in entry["medians"].items()},
                            entry.get("window", 2e-9))


def classify_majority_strength(trace: SimulationTrace, output_id: str, calibration: CalibrationTable | None,
                               t_start: float = 0.0):
    """Aligned-input count whose calibrated median delay is nearest the measured one."""
    if calibration is None or not calibration.medians:
        raise CalibrationRequiredError("classification needs a calibration table")
    delay = trace.switching_time(output_id, t_start, t_start + calibration.window)
    return calibration.classify(delay)


@dataclass
class PowerReport:
    total: float
    per_gate: dict      # receiving magnet -> W


def measure_power(netlist: Netlist, schedule: SupplySchedule | dict | None = None, params=None,
                  states: dict | None = None) -> PowerReport:
    """DC power ``sum V I`` drawn by the supplies with every scheduled supply on.

    ``states`` maps magnet ids to bits or vectors (default: all +x).
    """
    if params is None:
        from .config import default_params

        params = default_params()
    if schedule is None:
        volts = SupplySchedule.staged(netlist, params["supply.V"]).peak_voltages()
    elif isinstance(schedule, SupplySchedule):
        volts = schedule.peak_voltages()
    else:
        volts = dict(schedule)
    mags = {}
    for mid in netlist.magnet_ids:
        v = (states or {}).get(mid, 1)
        mags[mid] = np.asarray(v, float) if np.ndim(v) else np.array([1.0 if v > 0 else -1.0, 0, 0])
    tnet = build_network(netlist, params=params)
    sol = solve_network(tnet, mags, volts)
    per_gate = {}
    for comp in tnet.components:
        members = set(comp.tolist())
        p = 0.0
        recv = None
        for a, cur in zip(tnet.attachments, sol.attachment_currents):
            if a.node not in members:
                continue
            if a.mode == "receive":
                recv = a.magnet
            else:
                p += volts.get(a.magnet, 0.0) * cur.charge
        per_gate[recv] = p
    return PowerReport(float(sum(per_gate.values())), per_gate)


def estimate_area(netlist: Netlist, params=None) -> float:
    """Footprint sum (m^2): magnets ``Lx Ly`` plus channels ``L W``."""
    if not netlist.magnets and not netlist.channels:
        return 0.0
    if params is None:
        from .config import default_params

        params = default_params()
    a = sum(_geometry(params, m).footprint for m in netlist.magnets)
    return a + sum(c.length * c.width for c in netlist.channels)


def overdrive(netlist: Netlist, states: dict, output_id: str, schedule: SupplySchedule | dict | None = None,
              params=None) -> float:
    """Overdrive ``chi`` of ``output_id``: absorbed spin current over the critical one.

    The absorbed current is evaluated with the output held along +y, i.e.
    fully transverse to the easy axis, and the inputs at their easy-axis
    states from ``states``.
    """
    if params is None:
        from .config import default_params

        params = default_params()
    if schedule is None:
        volts = SupplySchedule.staged(netlist, params["supply.V"]).peak_voltages()
    elif isinstance(schedule, SupplySchedule):
        volts = schedule.peak_voltages()
    else:
        volts = dict(schedule)
    mags = {}
    for mid in netlist.magnet_ids:
        v = states.get(mid, 1)
        mags[mid] = np.asarray(v, float) if np.ndim(v) else np.array([1.0 if v > 0 else -1.0, 0, 0])
    m_out = np.array([0.0, 1.0, 0.0])
    mags[output_id] = m_out
    cur = solve_steady_state(build_network(netlist, params=params), mags, volts)[output_id]
    s = np.asarray(cur.spin, float)
    perp = s - np.dot(s, m_out) * m_out
    consts = PhysicalConstants.from_params(params)
    ic = critical_spin_current(params.material(), _geometry(params, netlist.magnet(output_id)), consts)
    return float(np.linalg.norm(perp) / ic)
