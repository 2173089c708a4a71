"""Registered experiments.

Each experiment takes a parameter set and a master seed and returns an
:class:`ExperimentResult`: named pass/fail checks, a JSON-able summary,
plot-ready tables and a few representative traces.  Nothing in a result
depends on wall-clock time, so re-running with the same seed reproduces the
written files byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ._accel import thread_cap
from .detector import (DetectorConfig, build_pixel_comparator_first, build_pixel_comparator_standard,
                       build_smart_detector_cell, detect, expected_pixels, initial_states, learn, learn_array, phase_plan,
                       tile_detectors)
from .engine import (CalibrationTable, SupplySchedule, calibration_key, compile_circuit, estimate_area,
                     measure_power, overdrive, simulate, steady_logic_value)
from .imageio import read_image
from .magnetics import analytic_switching_delay, thermal_cone_angle
from .netlist import build_majority_gate, build_xnor_cell
from .recognition import logic_oracle_detect, mean_image, prop1_check

FIXTURES = "fixtures"


@dataclass
class ExperimentResult:
    name: str
    checks: dict = field(default_factory=dict)        # check name -> bool
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)        # file name -> (header, rows)
    traces: dict = field(default_factory=dict)        # file name -> SimulationTrace
    files: dict = field(default_factory=dict)         # file name -> text

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def report(self) -> dict:
        return {"experiment": self.name, "passed": self.passed,
                "checks": {k: bool(v) for k, v in self.checks.items()}, "summary": _clean(self.summary)}

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [_atomic_write(out / "report.json", json.dumps(self.report(), indent=2, sort_keys=True) + "\n")]
        for name, (header, rows) in self.tables.items():
            written.append(_atomic_write(out / name, _csv_text(header, rows)))
        if self.traces:
            (out / "traces").mkdir(exist_ok=True)
            for name, tr in self.traces.items():
                written.append(_atomic_write(out / "traces" / name, tr.to_csv()))
        for name, text in self.files.items():
            written.append(_atomic_write(out / name, text))
        return written


def _atomic_write(path: Path, text: str) -> Path:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6e}"
    return v


def _clean(obj):
    # JSON-safe copy: numpy scalars to Python, non-finite floats to None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def derive_seed(master: int, *keys) -> int:
    """Independent 32-bit seed for run ``keys`` under ``master``."""
    words = [int(master)] + [int(k) if isinstance(k, (int, np.integer)) else _hash(k) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def _hash(s: str) -> int:
    h = 2166136261
    for ch in str(s).encode():
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


def fixture_path(name: str):
    return resources.files("spinpat").joinpath("data").joinpath(FIXTURES).joinpath(name)


def load_fixture(name: str) -> np.ndarray:
    with resources.as_file(fixture_path(name)) as p:
        return read_image(p)


def _map(fn, jobs, workers=None):
    workers = thread_cap() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _median(xs):
    xs = [x for x in xs if x is not None and math.isfinite(x)]
    return float(np.median(xs)) if xs else None


def _delays_inf(xs):
    return np.array([math.inf if x is None else x for x in xs])


# ---------------------------------------------------------------------------
# Majority gate runs
# ---------------------------------------------------------------------------

def majority_states(fan_in: int, aligned: int, out_init: int = 0) -> dict:
    """``aligned`` inputs at the opposite of ``out_init``, the rest equal to it."""
    hi = 1 - out_init
    st = {f"in{k + 1}": (hi if k < aligned else out_init) for k in range(fan_in)}
    st["out"] = out_init
    return st


def _majority_job(args):
    fan_in, aligned, V, T, seed, t_end, params, keep = args
    net = build_majority_gate(fan_in, params, polarity=-1 if V < 0 else 1)
    tr = simulate(net, SupplySchedule.staged(net, abs(V)), majority_states(fan_in, aligned),
                  params.thermal(seed=seed, T=T), t_end=t_end, params=params)
    return tr.switching_time("out"), (tr if keep else None)


def majority_delays(fan_in: int, aligned: int, V: float, T: float, seeds, params, t_end: float = 4e-9,
                    keep_first: bool = False):
    """Switching delays of the output over ``seeds`` (None where it never switches)."""
    jobs = [(fan_in, aligned, V, T, s, t_end, params, keep_first and k == 0) for k, s in enumerate(seeds)]
    res = _map(_majority_job, jobs)
    return [r[0] for r in res], (res[0][1] if res else None)


def _quartiles(d):
    a = _delays_inf(d)
    q1, q2, q3 = np.percentile(a, [25, 50, 75]) if a.size else (math.nan,) * 3
    return float(q1), float(q2), float(q3)


def steady_majority_check(fan_in: int, params, t_end: float = 4e-9) -> tuple[int, int, list]:
    """Noise-free steady output for every input pattern and both supply signs.

    The output starts opposite to the expected value, so every case must switch.
    Returns (agreeing cases, total cases, rows).
    """
    rows, ok, total = [], 0, 0
    for polarity in (-1, 1):
        net = build_majority_gate(fan_in, params, polarity=polarity)
        cc = compile_circuit(net, params)
        for pattern in range(2 ** fan_in):
            bits = [(pattern >> k) & 1 for k in range(fan_in)]
            maj = int(2 * sum(bits) > fan_in)
            want = maj if polarity < 0 else 1 - maj
            st = {f"in{k + 1}": b for k, b in enumerate(bits)}
            st["out"] = 1 - want
            tr = simulate(cc, SupplySchedule.staged(net, params["supply.V"]), st, params.thermal(T=0.0),
                          t_end=t_end)
            got = steady_logic_value(tr, "out", params["simulation.settle_window"])
            total += 1
            ok += int(got == want)
            rows.append((fan_in, polarity, "".join(map(str, bits)), want, "" if got is None else got))
    return ok, total, rows


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def fanin_study(params, seed: int = 0, runs: int = 30, **_) -> ExperimentResult:
    """Delay versus number of aligned inputs for fan-in 3 and 5 at -V, T = 300 K."""
    res = ExperimentResult("fanin-study")
    V = -params["supply.V"]
    T = params["thermal.T"]
    rows, summary = [], {}
    for fan_in in (3, 5):
        for aligned in range(fan_in, fan_in // 2, -1):
            seeds = [derive_seed(seed, "fanin", fan_in, aligned, k) for k in range(runs)]
            d, tr = majority_delays(fan_in, aligned, V, T, seeds, params, keep_first=True)
            q1, q2, q3 = _quartiles(d)
            summary[f"fanin{fan_in}_aligned{aligned}"] = {"median_s": q2, "q1_s": q1, "q3_s": q3,
                                                          "no_switch": sum(x is None for x in d)}
            rows.extend((fan_in, aligned, k, x) for k, x in enumerate(d))
            res.traces[f"fanin{fan_in}_aligned{aligned}.csv"] = tr
    s5 = [summary[f"fanin5_aligned{k}"] for k in (5, 4, 3)]
    res.checks["fanin5_median_order"] = s5[0]["median_s"] < s5[1]["median_s"] < s5[2]["median_s"]
    res.checks["fanin5_iqr_5_vs_3_disjoint"] = s5[0]["q3_s"] < s5[2]["q1_s"]
    s3 = [summary[f"fanin3_aligned{k}"] for k in (3, 2)]
    res.checks["fanin3_median_order"] = s3[0]["median_s"] < s3[1]["median_s"]
    oracle_rows = []
    for fan_in in (3, 5):
        ok, total, r = steady_majority_check(fan_in, params)
        summary[f"steady_oracle_fanin{fan_in}"] = {"agree": ok, "total": total}
        res.checks[f"steady_oracle_fanin{fan_in}"] = ok == total
        oracle_rows.extend(r)
    summary["V"] = V
    summary["T"] = T
    summary["runs"] = runs
    res.summary = summary
    res.tables["delays.csv"] = (["fan_in", "aligned", "run", "delay_s"], rows)
    res.tables["steady_oracle.csv"] = (["fan_in", "polarity", "inputs", "expected", "steady"], oracle_rows)
    return res


def fit_inverse_overdrive(chi, tau) -> tuple[float, float]:
    """Least-squares ``tau = a / (chi - 1)`` through the origin; returns (a, R^2)."""
    x = 1.0 / (np.asarray(chi, float) - 1.0)
    y = np.asarray(tau, float)
    a = float(np.dot(x, y) / np.dot(x, x))
    ss_res = float(np.sum((y - a * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return a, (1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0)


def voltage_sweep(params, seed: int = 0, runs: int = 30, voltages=(5e-3, 10e-3, 15e-3, 20e-3),
                  **_) -> ExperimentResult:
    """Median delay of an all-aligned 3-input majority over supply magnitude."""
    res = ExperimentResult("voltage-sweep")
    T = params["thermal.T"]
    net = build_majority_gate(3, params)
    st = majority_states(3, 3)
    rows, meds, chis = [], [], []
    for V in voltages:
        seeds = [derive_seed(seed, "sweep", round(V * 1e6), k) for k in range(runs)]
        d, _ = majority_delays(3, 3, -V, T, seeds, params)
        chi = overdrive(net, st, "out", {f"in{k + 1}": -V for k in range(3)}, params)
        med = _median(d)
        meds.append(med)
        chis.append(chi)
        rows.append((V, chi, med, sum(x is None for x in d)))
    a, r2 = fit_inverse_overdrive(chis, meds)
    theta0 = thermal_cone_angle(params.thermal(T=params["thermal.T_nominal"]))
    res.checks["median_strictly_decreasing"] = all(b < a_ for a_, b in zip(meds, meds[1:]))
    res.checks["inverse_overdrive_r2"] = r2 >= 0.9
    res.summary = {"voltages_V": list(voltages), "chi": chis, "median_delay_s": meds, "fit_a_s": a,
                   "r2": r2, "tau0_from_fit_s": a / math.log(math.pi / theta0), "runs": runs, "T": T}
    res.tables["delays.csv"] = (["V", "chi", "median_delay_s", "no_switch"], rows)
    return res


def xnor_table(params, seed: int = 0, **_) -> ExperimentResult:
    """Noise-free XNOR outputs for all inputs and both output initial states."""
    res = ExperimentResult("xnor-table")
    net = build_xnor_cell(params)
    cc = compile_circuit(net, params)
    t_end = params["detector.xnor_phase"]
    rows, ok = [], 0
    for a in (0, 1):
        for b in (0, 1):
            for init in (0, 1):
                st = {"A": a, "B": b, "C": 0, "carry": 0, "out": init}
                tr = simulate(cc, SupplySchedule.staged(net, params["supply.V"]), st, params.thermal(T=0.0),
                              t_end=t_end)
                got = steady_logic_value(tr, "out", params["simulation.settle_window"])
                want = int(a == b)
                ok += int(got == want)
                rows.append((a, b, init, want, "" if got is None else got, tr.switching_time("out")))
                res.traces[f"xnor_A{a}_B{b}_init{init}.csv"] = tr
    res.checks["truth_table"] = ok == 8
    res.summary = {"agree": ok, "total": 8}
    res.tables["xnor_table.csv"] = (["A", "B", "out_init", "expected", "steady", "switch_time_s"], rows)
    return res


def _detect_job(args):
    array, image, params, seed, T = args
    return detect(array, image, params, seed=seed, T=T, workers=1)


def compare3x3(params, seed: int = 0, runs: int = 20, train=None, input=None, **_) -> ExperimentResult:
    """One stored 3x3 pattern against an input that differs at P21 and P22.

    ``train`` (one path) and ``input`` replace the bundled images.
    """
    res = ExperimentResult("compare3x3")
    pattern = read_image(train[0]) if train else load_fixture("cell3x3_pattern.txt")
    image = read_image(input) if input else load_fixture("cell3x3_input.txt")
    cfg = DetectorConfig.from_params(params, P=1, row_polarity=1, row_init=1, xnor_init=1)
    cell = learn(build_smart_detector_cell(cfg, params), [pattern])
    T = params["thermal.T"]
    seeds = [derive_seed(seed, "compare3x3", k) for k in range(runs)]
    reports = _map(_detect_job, [(cell, image, params, s, T) for s in seeds])
    rows, good, decisions = [], 0, []
    for k, rep in enumerate(reports):
        byc = rep.by_cluster()
        sw = [byc[f"C{r}1"].delay_s is not None for r in (1, 2, 3)]
        good += int(sw == [True, False, True])
        decisions.append(rep.decision_time_s)
        for c in rep.clusters:
            rows.append((k, c.cluster, c.match_count, c.delay_s, c.cls, c.expected_class))
    frac = good / runs
    med = _median(decisions)
    net = build_majority_gate(3, params)
    chi = overdrive(net, majority_states(3, 3), "out", None, params)
    tau_analytic = analytic_switching_delay(params.switching(chi))
    res.checks["rows_1_3_switch_row_2_holds"] = frac >= 0.95
    res.checks["decision_time_in_range"] = med is not None and 0.2e-9 <= med <= 1.2e-9
    res.summary = {"fraction_correct": frac, "runs": runs, "median_decision_time_s": med,
                   "decision_times_s": decisions, "chi_row_gate_3_aligned": chi,
                   "analytic_delay_s": tau_analytic, "tau0_s": params["switching.tau0"],
                   "power_w": reports[0].power_w, "area_m2": reports[0].area_m2}
    res.tables["delays.csv"] = (["run", "cluster", "match_count", "delay_s", "class", "expected_class"], rows)
    res.files["detection_report.json"] = reports[0].to_json() + "\n"
    # representative waveforms: comparators, pixels and row gates of the first run
    phases, _ = phase_plan(cell.netlist, cfg.stage_durations)
    tr = simulate(cell.netlist, SupplySchedule.staged(cell.netlist, cfg.V, phases), initial_states(cell, image),
                  params.thermal(seed=derive_seed(seed, "compare3x3", 0, 0), T=T),
                  t_end=phases[-1][1], params=params,
                  record=[cell.pixels[(1, 0)], cell.pixels[(1, 1)], cell.pixels[(0, 0)]] + cell.rows)
    res.traces["compare3x3_waveforms.csv"] = tr
    return res


def train_detect9x9(params, seed: int = 0, runs: int = 20, train=None, input=None, **_) -> ExperimentResult:
    """Three 9x9 training images, one 9x9 input, nine parallel 3x3 cells.

    The cluster checks refer to the bundled images; ``train``/``input`` paths
    replace them.
    """
    res = ExperimentResult("train-detect9x9")
    training = [read_image(p) for p in train] if train else [load_fixture(f"spin_user{k}.txt") for k in (1, 2, 3)]
    image = read_image(input) if input else load_fixture("swim_input.txt")
    mean = mean_image(training)
    strays = {"P26": (1, 5), "P49": (3, 8)}
    corrected = all(sum(int(t[rc]) != int(mean[rc]) for t in training) == 1 for rc in strays.values())
    res.checks["mean_image_corrects_strays"] = corrected
    cfg = DetectorConfig.from_params(params, P=3, m=9, n=9, row_polarity=-1, row_init=0)
    array = learn_array(tile_detectors(9, 9, config=cfg, params=params), training)
    T = params["thermal.T"]
    seeds = [derive_seed(seed, "train-detect9x9", k) for k in range(runs)]
    reports = [detect(array, image, params, seed=s, T=T) for s in seeds]
    perfect, onemiss, mismatch = ("C11", "C22", "C41"), ("C52", "C42", "C32"), ("C43", "C72")
    d_perfect, d_one, holds, decisions, rows, agree, total = [], [], 0, [], [], 0, 0
    want_pix = expected_pixels(training, image)
    pix_ok = 0
    for k, rep in enumerate(reports):
        byc = rep.by_cluster()
        d_perfect += [byc[c].delay_s for c in perfect]
        d_one += [byc[c].delay_s for c in onemiss]
        holds += int(all(byc[c].delay_s is None for c in mismatch))
        decisions.append(rep.decision_time_s)
        for c in rep.clusters:
            rows.append((k, c.cluster, c.match_count, c.delay_s, c.cls, c.expected_class))
            total += 1
            agree += int(c.cls == c.expected_class)
        pix_ok += int(all(rep.pixels[rc] == want_pix[rc] for rc in rep.pixels))
    m_perfect = float(np.median(_delays_inf(d_perfect)))
    m_one = float(np.median(_delays_inf(d_one)))
    med_dec = _median(decisions)
    res.checks["perfect_faster_than_one_mismatch"] = m_perfect < m_one
    res.checks["mismatch_clusters_hold"] = holds == runs
    res.checks["decision_time_in_range"] = med_dec is not None and 0.3e-9 <= med_dec <= 2e-9
    oracle = logic_oracle_detect(training, image)
    res.summary = {
        "runs": runs, "median_delay_perfect_s": m_perfect, "median_delay_one_mismatch_s": m_one,
        "mismatch_hold_fraction": holds / runs, "median_decision_time_s": med_dec,
        "decision_times_s": decisions, "class_agreement": agree / total, "pixel_runs_all_correct": pix_ok,
        "match_counts": {str(c): v["match_count"] for c, v in sorted(oracle.items())},
        "power_w": reports[0].power_w, "area_m2": reports[0].area_m2,
    }
    res.tables["delays.csv"] = (["run", "cluster", "match_count", "delay_s", "class", "expected_class"], rows)
    res.files["detection_report.json"] = reports[0].to_json() + "\n"
    res.files["mean_image.txt"] = "\n".join("".join(map(str, r)) for r in mean) + "\n"
    return res


def prop1(params=None, seed: int = 0, max_p: int = 7, **_) -> ExperimentResult:
    """Exhaustive check that comparing with the mean equals voting over comparisons."""
    res = ExperimentResult("prop1")
    rows, ok = [], True
    t0 = time.perf_counter()
    for P in range(1, max_p + 1, 2):
        good = prop1_check(P)
        ok &= good
        rows.append((P, 2 ** (P + 1), int(good)))
    elapsed = time.perf_counter() - t0
    res.checks["all_equal"] = ok
    res.checks["under_one_second"] = elapsed < 1.0
    res.summary = {"max_p": max_p, "all_equal": ok}
    res.tables["prop1.csv"] = (["P", "cases", "holds"], rows)
    return res


def calibrate_tau0(params, seed: int = 0, runs: int = 30, **_) -> ExperimentResult:
    """Fit tau0 to the simulated 3-input delay and tabulate delay classes.

    Writes ``calibration.json`` with median delays per aligned count for
    fan-in 3 and 5 at the default supply, at the configured temperature and
    noise-free.
    """
    res = ExperimentResult("calibrate-tau0")
    V = params["supply.V"]
    doc = {"delay_classes": {}}
    rows = []
    for T in (params["thermal.T"], 0.0):
        for fan_in in (3, 5):
            medians = {}
            for aligned in range(fan_in, fan_in // 2, -1):
                n = runs if T > 0 else 1
                seeds = [derive_seed(seed, "calib", fan_in, aligned, k) for k in range(n)]
                d, _ = majority_delays(fan_in, aligned, -V, T, seeds, params)
                medians[aligned] = _median(d)
                rows.append((T, fan_in, aligned, medians[aligned]))
            doc["delay_classes"][calibration_key(fan_in, V, T)] = {
                "medians": {str(k): v for k, v in medians.items()},
                "window": params["detector.decision_window"]}
    key = calibration_key(3, V, params["thermal.T"])
    d3 = doc["delay_classes"][key]["medians"]["3"]
    chi = overdrive(build_majority_gate(3, params), majority_states(3, 3), "out",
                    {f"in{k + 1}": -V for k in range(3)}, params)
    theta0 = thermal_cone_angle(params.thermal(T=params["thermal.T_nominal"]))
    tau0 = d3 * (chi - 1.0) / math.log(math.pi / theta0)
    doc["tau0_s"] = tau0
    doc["fit"] = {"median_delay_s": d3, "chi": chi, "theta0": theta0, "V": V}
    res.checks["delay_under_0p6ns"] = d3 is not None and d3 < 0.6e-9
    res.summary = {"tau0_s": tau0, "median_delay_fanin3_s": d3, "chi": chi, "theta0": theta0, "runs": runs}
    res.tables["delay_classes.csv"] = (["T", "fan_in", "aligned", "median_delay_s"], rows)
    res.files["calibration.json"] = json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"
    return res


def architecture_equivalence(params, P: int = 3) -> tuple[int, int, list]:
    """Steady Pixel of both pixel comparators for every (Q, training bits), noise off."""
    std = build_pixel_comparator_standard(P, params)
    cf = build_pixel_comparator_first(P, params)
    d = params.section("detector")
    durations_std = {0: d["pixel_phase"], 1: d["xnor_phase"]}
    durations_cf = {0: d["xnor_phase"], 1: d["pixel_phase"]}
    rows, ok, total = [], 0, 0
    for code in range(2 ** (P + 1)):
        bits = [(code >> k) & 1 for k in range(P + 1)]
        q, ys = bits[0], bits[1:]
        vals = []
        for net, dur in ((std, durations_std), (cf, durations_cf)):
            st = {mid: 0 for mid in net.magnet_ids}
            st["Q"] = q
            for k, y in enumerate(ys):
                st[f"T{k + 1}"] = y
            phases, _ = phase_plan(net, dur)
            tr = simulate(net, SupplySchedule.staged(net, params["supply.V"], phases), st,
                          params.thermal(T=0.0), t_end=phases[-1][1], params=params,
                          record=[net.pins["Pixel"]])
            vals.append(steady_logic_value(tr, net.pins["Pixel"], params["simulation.settle_window"]))
        want = int(q == int(2 * sum(ys) > P))
        total += 1
        ok += int(vals[0] == vals[1] == want)
        rows.append((q, "".join(map(str, ys)), want, vals[0], vals[1]))
    return ok, total, rows


def power_area_summary(params) -> dict:
    """DC power (W) and footprint (m^2) of the reference structures.

    The cell is the one-image 3x3 cell (nine comparators, three row gates and
    the cell gate); the full array is nine such cells.
    """
    xnor = build_xnor_cell(params)
    maj = build_majority_gate(3, params)
    cell = build_smart_detector_cell(DetectorConfig(P=1), params).netlist
    out = {}
    for name, net in (("xnor", xnor), ("majority", maj), ("cell", cell)):
        out[name] = {"power_w": measure_power(net, None, params).total, "area_m2": estimate_area(net, params)}
    out["full9x9"] = {"power_w": 9 * out["cell"]["power_w"], "area_m2": 9 * out["cell"]["area_m2"]}
    cell3 = build_smart_detector_cell(DetectorConfig(P=3), params).netlist
    out["cell_P3"] = {"power_w": measure_power(cell3, None, params).total,
                      "area_m2": estimate_area(cell3, params)}
    return out


EXPERIMENTS = {
    "fanin-study": fanin_study,
    "voltage-sweep": voltage_sweep,
    "xnor-table": xnor_table,
    "compare3x3": compare3x3,
    "train-detect9x9": train_detect9x9,
    "prop1": prop1,
    "calibrate-tau0": calibrate_tau0,
}


def run_experiment(name: str, params, seed: int = 0, **options) -> ExperimentResult:
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise KeyError(f"unknown experiment '{name}'; choose from {', '.join(EXPERIMENTS)}") from None
    return fn(params, seed=seed, **options)


def default_calibration(params) -> CalibrationTable | None:
    from .engine import load_calibration

    try:
        return load_calibration(3, params["supply.V"], params["thermal.T"])
    except LookupError:
        return None
