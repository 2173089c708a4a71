"""The twelve acceptance criteria at their stated tolerances.

Each test prints one ``[criterion N] PASS|FAIL ...`` line straight to the
terminal.  Run standalone with ``python tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from spinpat.config import default_params
from spinpat.experiments import (architecture_equivalence, compare3x3, derive_seed, majority_delays,
                                 power_area_summary, run_experiment, steady_majority_check, train_detect9x9,
                                 voltage_sweep, xnor_table)
from spinpat.magnetics import sample_cone_angles, thermal_cone_angle
from spinpat.netlist import Netlist
from spinpat.transport import build_network, solve_network, solve_steady_state, spin_diffusion_length, \
    two_magnet_link_exact

UW, UM2 = 1e-6, 1e-12


def c1(params):
    t0 = time.perf_counter()
    from spinpat.recognition import prop1_check

    ok = all(prop1_check(P) for P in (1, 3, 5, 7))
    el = time.perf_counter() - t0
    return ok and el < 1.0, f"P in 1,3,5,7 all equal={ok}, {el * 1e3:.1f} ms"


def c2(params):
    t0 = time.perf_counter()
    res = [steady_majority_check(n, params) for n in (3, 5)]
    el = time.perf_counter() - t0
    ok = all(a == b for a, b, _ in res) and el < 300
    return ok, ", ".join(f"fan-in {n}: {a}/{b}" for n, (a, b, _) in zip((3, 5), res)) + f", {el:.0f} s"


def c3(params):
    r = xnor_table(params)
    return r.passed, f"{r.summary['agree']}/{r.summary['total']} cases"


def c4(params):
    ok, total, _ = architecture_equivalence(params, P=3)
    return ok == total, f"{ok}/{total} (Q, y1..y3) assignments"


def c5(params):
    t0 = time.perf_counter()
    V, T = -params["supply.V"], params["thermal.T"]
    q = {}
    for k in (5, 4, 3):
        seeds = [derive_seed(0, "fanin", 5, k, i) for i in range(30)]
        d, _ = majority_delays(5, k, V, T, seeds, params)
        a = np.array([math.inf if x is None else x for x in d])
        q[k] = np.percentile(a, [25, 50, 75])
    el = time.perf_counter() - t0
    ok = q[5][1] < q[4][1] < q[3][1] and q[5][2] < q[3][0] and el < 900
    med = " < ".join(f"{q[k][1] * 1e9:.2f}" for k in (5, 4, 3))
    return ok, (f"medians 5/4/3-aligned {med} ns, IQR5 [{q[5][0] * 1e9:.2f}, {q[5][2] * 1e9:.2f}] vs "
                f"IQR3 [{q[3][0] * 1e9:.2f}, {q[3][2] * 1e9:.2f}] ns, {el:.0f} s")


def c6(params):
    r = voltage_sweep(params, runs=30)
    med = ", ".join(f"{m * 1e12:.0f}" for m in r.summary["median_delay_s"])
    return r.passed, f"medians [{med}] ps at 5/10/15/20 mV, R^2 = {r.summary['r2']:.3f}"


def c7(params):
    r = compare3x3(params, runs=20)
    s = r.summary
    return r.passed, (f"{s['fraction_correct'] * 100:.0f}% runs rows 1,3 switch / row 2 holds, "
                      f"median decision {s['median_decision_time_s'] * 1e9:.3f} ns")


def c8(params):
    r = train_detect9x9(params, runs=20)
    s = r.summary
    return r.passed, (f"strays fixed={r.checks['mean_image_corrects_strays']}, "
                      f"median perfect {s['median_delay_perfect_s'] * 1e9:.2f} ns < one-mismatch "
                      f"{s['median_delay_one_mismatch_s'] * 1e9:.2f} ns, C43/C72 hold "
                      f"{s['mismatch_hold_fraction'] * 100:.0f}%, decision {s['median_decision_time_s'] * 1e9:.2f} ns")


def c9(params):
    theta0 = thermal_cone_angle(params.thermal())
    th = sample_cone_angles(theta0, 10_000, np.random.default_rng(derive_seed(0, "cone")))
    rms = float(np.sqrt(np.mean(th ** 2)))
    err = abs(rms / theta0 - 1)
    return err <= 0.10, f"RMS {rms:.4f} rad vs {theta0:.4f} rad ({err * 100:.1f}%)"


def _link(L):
    net = Netlist("link")
    net.add_magnet("s", "input")
    net.add_magnet("d", "output")
    net.add_channel("c", "a", "b", L, 50e-9, 100e-9)
    net.attach("s", "a", "drive")
    net.attach("d", "b", "receive")
    net.set_supply("s", -1)
    return net


def _random_net(rng):
    net = Netlist("rand")
    net.add_magnet("r", "output")
    hubs = int(rng.integers(1, 5))
    for h in range(1, hubs):
        net.add_channel(f"h{h}", f"hub{int(rng.integers(0, h))}", f"hub{h}", rng.uniform(50e-9, 400e-9),
                        50e-9, 100e-9)
    net.add_channel("g", "hub0", "gnd", rng.uniform(20e-9, 300e-9), 50e-9, 100e-9)
    net.attach("r", "gnd", "receive")
    volts = {}
    for k in range(int(rng.integers(1, 6))):
        mid = net.add_magnet(f"d{k}", "input")
        net.add_channel(f"c{k}", f"n{k}", f"hub{int(rng.integers(0, hubs))}", rng.uniform(50e-9, 400e-9),
                        50e-9, 100e-9)
        net.attach(mid, f"n{k}", "drive", float(rng.choice([1.0, 2.0])))
        net.set_supply(mid, -1)
        volts[mid] = rng.uniform(-20e-3, 20e-3)
    states = {}
    for mid in net.magnet_ids:
        v = rng.normal(size=3)
        states[mid] = v / np.linalg.norm(v)
    return net, states, volts


def c10(params):
    ch, iface = params.channel(), params.interface()
    lam = spin_diffusion_length(ch)
    ok_lam = abs(lam - 391.3e-9) <= 1e-9
    rng = np.random.default_rng(derive_seed(0, "networks"))
    worst = 0.0
    for _ in range(100):
        net, states, volts = _random_net(rng)
        sol = solve_network(build_network(net, dx=10e-9, params=params), states, volts)
        scale = sol.supply_current()
        bal = abs(sum(c.charge for c in sol.attachment_currents) - sol.ground_currents().sum())
        worst = max(worst, np.max(np.abs(sol.node_residual())) / scale, bal / scale)
    X, Y = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    dev = 0.0
    for L in (100e-9, 212.5e-9, 400e-9, 800e-9):
        fd = solve_steady_state(build_network(_link(L), dx=2.5e-9, channel=ch, iface=iface),
                                {"s": X, "d": Y}, {"s": -5e-3})["d"].spin[0]
        ex = two_magnet_link_exact(ch, iface, X, Y, -5e-3, L).spin[0]
        dev = max(dev, abs(fd / ex - 1))
    ok = ok_lam and worst <= 1e-9 and dev <= 0.05
    return ok, (f"lambda_s {lam * 1e9:.2f} nm, worst charge imbalance {worst:.1e}, "
                f"two-magnet deviation {dev * 100:.3f}%")


def c11(params):
    s = power_area_summary(params)
    ref_p = {"xnor": 11 * UW, "majority": 3.75 * UW, "cell": 115 * UW, "full9x9": 990 * UW}
    ref_a = {"xnor": 0.3 * UM2, "majority": 0.2 * UM2, "cell": 0.5 * UM2}
    p_ok = {k: 0.1 <= s[k]["power_w"] / v <= 10 for k, v in ref_p.items()}
    a_ok = {k: s[k]["area_m2"] < v for k, v in ref_a.items()}
    parts = [f"{k} {s[k]['power_w'] / UW:.1f} uW ({'ok' if p_ok[k] else 'out'})" for k in ref_p]
    parts += [f"{k} {s[k]['area_m2'] / UM2:.3f} um2 ({'ok' if a_ok[k] else 'over bound'})" for k in ref_a]
    return all(p_ok.values()) and all(a_ok.values()), "; ".join(parts)


def _tree_bytes(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def c12(params, tmp):
    from pathlib import Path

    tmp = Path(tmp)
    cases = [("xnor-table", {}), ("prop1", {}), ("compare3x3", {"runs": 2}), ("voltage-sweep", {"runs": 2}),
             ("fanin-study", {"runs": 3})]
    same = []
    for name, opts in cases:
        outs = []
        for rep in ("a", "b"):
            d = tmp / name / rep
            run_experiment(name, params, seed=11, **opts).write(d)
            outs.append(_tree_bytes(d))
        same.append(outs[0] == outs[1] and bool(outs[0]))
    return all(same), ", ".join(f"{n}={'identical' if s else 'DIFFERENT'}" for (n, _), s in zip(cases, same))


CRITERIA = {1: c1, 2: c2, 3: c3, 4: c4, 5: c5, 6: c6, 7: c7, 8: c8, 9: c9, 10: c10, 11: c11, 12: c12}


def _line(n, ok, detail):
    return f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.fixture(scope="module")
def params():
    return default_params()


@pytest.mark.slow
@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, params, capsys, tmp_path):
    fn = CRITERIA[n]
    ok, detail = fn(params, tmp_path) if n == 12 else fn(params)
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import sys
    import tempfile

    p = default_params()
    bad = 0
    for n, fn in CRITERIA.items():
        with tempfile.TemporaryDirectory() as d:
            ok, detail = fn(p, d) if n == 12 else fn(p)
        bad += not ok
        print(_line(n, ok, detail), flush=True)
    sys.exit(1 if bad else 0)
