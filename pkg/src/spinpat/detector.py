"""Recognition architectures built from majority gates and XNOR cells.

Stages and the default sign bookkeeping:

=====  ==========================  ========  =====================================
stage  gate                        supply    output
=====  ==========================  ========  =====================================
0      XNOR(train_k, Q)            +V        1 where the training pixel matches Q
1      pixel majority over k       -V        majority of the matches (the Pixel)
2      row gate over 3 Pixels      config    switches away from its initial state
                                             on a majority of matching pixels
3      cell gate over 3 rows       config    +x when at least two rows match
=====  ==========================  ========  =====================================

Each stage is supplied in its own time window (see :func:`phase_plan`).
Row and cell gates share ``row_polarity``; rows start at ``row_init``.
``(-1, 0)`` gives majority from -x, ``(+1, 1)`` complementary majority from
+x, and both make a matching row flip its gate.  The cell gate always starts
at -x: under complementary supply a matching row reads 0, and the negation
in the cell gate turns two such rows back into +x.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._accel import thread_cap
from .engine import (NO_SWITCH, CalibrationTable, SimulationTrace, SupplySchedule, compile_circuit, estimate_area,
                     load_calibration, measure_power, simulate, steady_logic_value)
from .netlist import FanInError, Netlist, NetlistError, build_majority_gate, build_xnor_cell
from .recognition import (ClusterIndex, DimensionError, InvalidTrainingSetError, as_image,
                          logic_oracle_detect, match_class)

XNOR_STAGE, PIXEL_STAGE, ROW_STAGE, CELL_STAGE = 0, 1, 2, 3


class DetectorStateError(RuntimeError):
    """Detection requested on a cell that holds no training data."""


@dataclass(frozen=True)
class DetectorConfig:
    """Detector geometry, training count and supply conventions."""

    m: int = 3
    n: int = 3
    P: int = 1
    cell_m: int = 3
    cell_n: int = 3
    fan_in_cap: int = 5
    V: float = 5e-3
    row_polarity: int = -1
    row_init: int = 0
    xnor_init: int = 0
    xnor_phase: float = 5e-9
    pixel_phase: float = 4e-9
    decision_window: float = 2e-9
    cell_phase: float = 4e-9
    with_cell_gate: bool = True

    def __post_init__(self):
        if self.P < 1 or self.P % 2 == 0:
            raise InvalidTrainingSetError(f"the number of training images must be odd, got {self.P}")
        if self.P > self.fan_in_cap:
            raise FanInError(f"P = {self.P} exceeds the fan-in cap of {self.fan_in_cap}")
        if (self.cell_m, self.cell_n) != (3, 3):
            raise NetlistError(f"unsupported cell size {self.cell_m}x{self.cell_n}: only 3x3 cells")
        if self.m % self.cell_m or self.n % self.cell_n:
            raise DimensionError(f"cell {self.cell_m}x{self.cell_n} does not tile a {self.m}x{self.n} image")
        if self.row_polarity not in (-1, 1) or self.row_init not in (0, 1) or self.xnor_init not in (0, 1):
            raise ValueError("row_polarity must be +-1; row_init and xnor_init 0 or 1")

    @classmethod
    def from_params(cls, params, **kw) -> "DetectorConfig":
        d = params.section("detector")
        base = dict(fan_in_cap=int(d["fan_in_cap"]), V=params["supply.V"], xnor_phase=d["xnor_phase"],
                    pixel_phase=d["pixel_phase"], decision_window=d["decision_window"],
                    cell_phase=d["cell_phase"])
        base.update(kw)
        return cls(**base)

    @property
    def stage_durations(self) -> dict:
        return {XNOR_STAGE: self.xnor_phase, PIXEL_STAGE: self.pixel_phase,
                ROW_STAGE: self.decision_window, CELL_STAGE: self.cell_phase}


# ---------------------------------------------------------------------------
# Netlist builders
# ---------------------------------------------------------------------------

def phase_plan(netlist: Netlist, durations: dict) -> tuple[list, dict]:
    """Back-to-back supply windows for the stages present in ``netlist``.

    Returns ``(phases, starts)``: ``phases[k] = (t_on, t_off)`` as consumed by
    :meth:`SupplySchedule.staged`, and the start time of every present stage.
    """
    present = sorted({s.stage for s in netlist.supplies})
    phases, starts, t = [], {}, 0.0
    for k in range(present[-1] + 1 if present else 0):
        if k in present:
            starts[k] = t
            phases.append((t, t + durations[k]))
            t += durations[k]
        else:
            phases.append((t, t))
    return phases, starts


def _xnor_into(net: Netlist, prefix: str, train_id: str, q_id: str, params, stage: int) -> str:
    """Add one XNOR comparing ``train_id`` with ``q_id``; returns its output id."""
    sub = build_xnor_cell(params, polarity=1, stage=stage)
    bind = {}
    for pin, mid in (("A", train_id), ("B", q_id)):
        if mid in net.magnet_ids:
            bind[pin] = mid
    ids = net.include(sub, prefix, bind)
    for pin, mid in (("A", train_id), ("B", q_id)):
        if pin not in bind and ids[pin] != mid:
            raise NetlistError(f"expected magnet '{mid}' for XNOR pin {pin}")
    for pin in ("carry", "out"):
        net.set_role(ids[pin], "internal")
    return ids["out"]


def _majority_into(net: Netlist, prefix: str, inputs: list, out_id: str, params, *, polarity: int,
                   stage: int, fan_in_cap: int) -> str:
    sub = build_majority_gate(len(inputs), params, fan_in_cap=fan_in_cap, polarity=polarity, stage=stage)
    bind = {f"in{k + 1}": mid for k, mid in enumerate(inputs)}
    if out_id in net.magnet_ids:
        bind["out"] = out_id
    ids = net.include(sub, prefix, bind)
    if "out" not in bind:
        # rename the freshly added output to the requested id
        net.magnet(ids["out"]).id = out_id
        for i in net.interfaces:
            if i.magnet == ids["out"]:
                i.magnet = out_id
    net.set_role(out_id, "internal")
    return out_id


def _xnor_out(prefix: str, k: int) -> str:
    return f"{prefix}x{k + 1}.out"


def _pixel_ids(prefix: str, P: int) -> dict:
    return {"train": [f"{prefix}T{k + 1}" for k in range(P)], "Q": f"{prefix}Q", "pixel": f"{prefix}pix"}


def build_pixel_comparator_first(P: int, params=None, *, fan_in_cap: int = 5, prefix: str = "",
                                 net: Netlist | None = None) -> Netlist:
    """P XNORs (training pixel vs. the shared input pixel ``Q``) feeding a P-input majority.

    Pins: ``T1..TP`` (training), ``Q`` (input), ``Pixel`` (1 when most
    training pixels equal Q).  For P = 1 the XNOR output is the Pixel.
    """
    if P < 1 or P % 2 == 0:
        raise FanInError(f"invalid training count {P}: must be odd")
    if P > fan_in_cap:
        raise FanInError(f"P = {P} exceeds the fan-in cap of {fan_in_cap}")
    own = net is None
    net = Netlist(name=f"pixel_cf{P}") if own else net
    ids = _pixel_ids(prefix, P)
    net.add_magnet(ids["Q"], "input")
    for t in ids["train"]:
        net.add_magnet(t, "input")
    outs = [_xnor_into(net, f"{prefix}x{k + 1}.", t, ids["Q"], params, XNOR_STAGE)
            for k, t in enumerate(ids["train"])]
    if P == 1:
        pix = outs[0]
    else:
        pix = _majority_into(net, f"{prefix}mj.", outs, ids["pixel"], params, polarity=-1,
                             stage=PIXEL_STAGE, fan_in_cap=fan_in_cap)
    if own:
        net.set_role(pix, "output")
        net.pins.update({f"T{k + 1}": t for k, t in enumerate(ids["train"])})
        net.pins.update({"Q": ids["Q"], "Pixel": pix})
        net.validate()
    return net if own else pix


def build_pixel_comparator_standard(P: int, params=None, *, fan_in_cap: int = 5) -> Netlist:
    """P-input majority (the mean pixel) feeding one XNOR against ``Q``.

    Stage 0 is the majority, stage 1 the XNOR.  Pins as in
    :func:`build_pixel_comparator_first`, plus ``Mean``.
    """
    if P < 1 or P % 2 == 0:
        raise FanInError(f"invalid training count {P}: must be odd")
    if P > fan_in_cap:
        raise FanInError(f"P = {P} exceeds the fan-in cap of {fan_in_cap}")
    net = Netlist(name=f"pixel_std{P}")
    ids = _pixel_ids("", P)
    net.add_magnet("Q", "input")
    for t in ids["train"]:
        net.add_magnet(t, "input")
    if P == 1:
        mean = ids["train"][0]
    else:
        mean = _majority_into(net, "mj.", ids["train"], "mean", params, polarity=-1, stage=0,
                              fan_in_cap=fan_in_cap)
    pix = _xnor_into(net, "x.", mean, "Q", params, 1)
    net.set_role(pix, "output")
    net.pins.update({f"T{k + 1}": t for k, t in enumerate(ids["train"])})
    net.pins.update({"Q": "Q", "Pixel": pix, "Mean": mean})
    net.validate()
    return net


@dataclass
class SmartDetectorCell:
    """A 3x3 detector cell: netlist plus the magnet ids of its parts.

    ``stored`` holds the training magnet states once :func:`learn` has run.
    """
    netlist: Netlist
    config: DetectorConfig
    train: dict          # (r, c) -> [training magnet ids]
    comparators: dict    # (r, c) -> [XNOR output ids]
    inputs: dict         # (r, c) -> Q magnet id
    pixels: dict         # (r, c) -> Pixel magnet id
    rows: list           # row gate outputs, top to bottom
    cell: str | None     # cell gate output
    stored: dict | None = None

    @property
    def learned(self) -> bool:
        return self.stored is not None


def build_smart_detector_cell(config: DetectorConfig | None = None, params=None) -> SmartDetectorCell:
    """Nine comparator-first pixel units, three row gates and an optional cell gate."""
    config = config or DetectorConfig()
    if (config.cell_m, config.cell_n) != (3, 3):
        raise NetlistError("only 3x3 cells are supported")
    net = Netlist(name=f"cell_P{config.P}")
    train, comps, inputs, pixels = {}, {}, {}, {}
    for r in range(3):
        for c in range(3):
            pre = f"p{r + 1}{c + 1}."
            pixels[(r, c)] = build_pixel_comparator_first(config.P, params, fan_in_cap=config.fan_in_cap,
                                                          prefix=pre, net=net)
            ids = _pixel_ids(pre, config.P)
            train[(r, c)] = ids["train"]
            comps[(r, c)] = [_xnor_out(pre, k) for k in range(config.P)]
            inputs[(r, c)] = ids["Q"]
    rows = []
    for r in range(3):
        rid = f"row{r + 1}"
        _majority_into(net, f"r{r + 1}.", [pixels[(r, c)] for c in range(3)], rid, params,
                       polarity=config.row_polarity, stage=ROW_STAGE, fan_in_cap=config.fan_in_cap)
        rows.append(rid)
    cell = None
    if config.with_cell_gate:
        cell = _majority_into(net, "c.", rows, "cell", params, polarity=config.row_polarity,
                              stage=CELL_STAGE, fan_in_cap=config.fan_in_cap)
        net.set_role(cell, "output")
    else:
        for rid in rows:
            net.set_role(rid, "output")
    for (r, c), ts in train.items():
        for k, t in enumerate(ts):
            net.pins[f"T{k + 1}_{r + 1}{c + 1}"] = t
        net.pins[f"Q{r + 1}{c + 1}"] = inputs[(r, c)]
        net.pins[f"Pixel{r + 1}{c + 1}"] = pixels[(r, c)]
    for r, rid in enumerate(rows):
        net.pins[f"Row{r + 1}"] = rid
    if cell:
        net.pins["Cell"] = cell
    net.validate()
    return SmartDetectorCell(net, config, train, comps, inputs, pixels, rows, cell)


def learn(cell: SmartDetectorCell, training) -> SmartDetectorCell:
    """Store the training images (3x3 each) in the cell's training magnets."""
    imgs = [as_image(t) for t in training]
    if len(imgs) != cell.config.P:
        raise InvalidTrainingSetError(f"cell holds {cell.config.P} training images, got {len(imgs)}")
    for t in imgs:
        if t.shape != (3, 3):
            raise DimensionError(f"cell training images must be 3x3, got {t.shape}")
    stored = {}
    for (r, c), ids in cell.train.items():
        for k, mid in enumerate(ids):
            stored[mid] = int(imgs[k][r, c])
    return replace(cell, stored=stored)


def read_training(cell: SmartDetectorCell) -> list:
    """Training images reconstructed from the stored magnet states."""
    if not cell.learned:
        raise DetectorStateError("cell has not been trained")
    out = [np.zeros((3, 3), dtype=np.uint8) for _ in range(cell.config.P)]
    for (r, c), ids in cell.train.items():
        for k, mid in enumerate(ids):
            out[k][r, c] = cell.stored[mid]
    return out


def initial_states(cell: SmartDetectorCell, image) -> dict:
    """Every magnet's starting bit for a detection run on a 3x3 ``image``."""
    if not cell.learned:
        raise DetectorStateError("detect called before learn")
    img = as_image(image)
    if img.shape != (3, 3):
        raise DimensionError(f"cell input must be 3x3, got {img.shape}")
    init = {mid: 0 for mid in cell.netlist.magnet_ids}
    init.update(cell.stored)
    for (r, c), q in cell.inputs.items():
        init[q] = int(img[r, c])
    for outs in cell.comparators.values():
        for mid in outs:
            init[mid] = cell.config.xnor_init
    for rid in cell.rows:
        init[rid] = cell.config.row_init
    if cell.cell:
        init[cell.cell] = 0
    return init


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

@dataclass
class ClusterRecord:
    cluster: str
    delay_s: float | None
    cls: str
    expected_class: str
    match_count: int
    row_value: int | None = None

    def to_dict(self) -> dict:
        return {"cluster": self.cluster, "delay_s": self.delay_s, "class": self.cls,
                "expected_class": self.expected_class}


@dataclass
class DetectionReport:
    """Per-cluster delays and classes plus cell verdicts, power and area.

    ``decision_time_s`` is the latest row-gate switching time within the
    decision window, measured from the start of the row phase.
    """
    clusters: list
    cells: list = field(default_factory=list)
    decision_time_s: float | None = None
    power_w: float | None = None
    area_m2: float | None = None
    pixels: dict = field(default_factory=dict)

    def by_cluster(self) -> dict:
        return {c.cluster: c for c in self.clusters}

    def to_dict(self) -> dict:
        return {
            "clusters": [c.to_dict() for c in self.clusters],
            "cells": self.cells,
            "decision_time_s": self.decision_time_s,
            "power_w": self.power_w,
            "area_m2": self.area_m2,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _row_class(delay, calibration: CalibrationTable | None, count: int) -> str:
    if delay is None:
        return NO_SWITCH
    if calibration is None:
        return match_class(count)
    got = calibration.classify(delay)
    return got if got == NO_SWITCH else f"match-{got}"


def _cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _run_cell(args):
    cell, image, seed, T, params, calibration, record_all = args
    cfg = cell.config
    init = initial_states(cell, image)
    phases, starts = phase_plan(cell.netlist, cfg.stage_durations)
    schedule = SupplySchedule.staged(cell.netlist, cfg.V, phases)
    t_end = phases[-1][1]
    record = None if record_all else (list(cell.pixels.values()) + cell.rows + ([cell.cell] if cell.cell else []))
    tr = simulate(cell.netlist, schedule, init, params.thermal(seed=seed, T=T), t_end=t_end,
                  params=params, record=record)
    t_row = starts[ROW_STAGE]
    t_row_end = t_row + cfg.decision_window
    settle = params["simulation.settle_window"]
    at_row_end = _slice(tr, t_row_end)
    rows = [(tr.switching_time(rid, t_row, t_row_end), steady_logic_value(at_row_end, rid, settle))
            for rid in cell.rows]
    before_rows = _slice(tr, t_row)
    pix = {rc: steady_logic_value(before_rows, mid, settle) for rc, mid in cell.pixels.items()}
    cell_val = steady_logic_value(tr, cell.cell, settle) if cell.cell else None
    cell_delay = tr.switching_time(cell.cell, starts[CELL_STAGE]) if cell.cell else None
    return rows, pix, cell_val, cell_delay, (tr if record_all else None)


def _slice(tr, t_stop):
    """Trace truncated at ``t_stop``."""
    sel = tr.times <= t_stop + 1e-15
    return SimulationTrace(tr.times[sel], tr.ids, tr.data[sel], tr.dt, tr.meta)


@dataclass
class DetectorArray:
    """Cells tiling an image plus the map from (cell, local row) to cluster."""
    config: DetectorConfig
    cells: list
    cluster_map: dict     # (cell index, local row) -> ClusterIndex
    origins: list         # cell index -> (row0, col0) in the image


def tile_detectors(m: int, n: int, cell_m: int = 3, cell_n: int = 3,
                   config: DetectorConfig | None = None, params=None) -> DetectorArray:
    """Independent cells covering an ``m x n`` image, row-major."""
    if (cell_m, cell_n) != (3, 3):
        raise NetlistError(f"unsupported cell size {cell_m}x{cell_n}: only 3x3 cells")
    if m % cell_m or n % cell_n or m < 1 or n < 1:
        raise DimensionError(f"{cell_m}x{cell_n} cells do not tile a {m}x{n} image")
    config = replace(config, m=m, n=n) if config else DetectorConfig(m=m, n=n)
    template = build_smart_detector_cell(config, params)
    cells, cmap, origins = [], {}, []
    for bi in range(m // cell_m):
        for bj in range(n // cell_n):
            k = len(cells)
            cells.append(replace(template, netlist=Netlist.from_dict(template.netlist.to_dict())))
            origins.append((bi * cell_m, bj * cell_n))
            for r in range(cell_m):
                cmap[(k, r)] = ClusterIndex(bi * cell_m + r + 1, bj + 1)
    return DetectorArray(config, cells, cmap, origins)


def learn_array(array: DetectorArray, training) -> DetectorArray:
    imgs = [as_image(t) for t in training]
    for t in imgs:
        if t.shape != (array.config.m, array.config.n):
            raise DimensionError(f"training image shape {t.shape} does not match "
                                 f"{array.config.m}x{array.config.n}")
    cells = [learn(c, [t[r0:r0 + 3, c0:c0 + 3] for t in imgs])
             for c, (r0, c0) in zip(array.cells, array.origins)]
    return replace(array, cells=cells)


def detect(array: DetectorArray | SmartDetectorCell, image, params=None, seed: int = 0,
           T: float | None = None, calibration: CalibrationTable | None | str = "auto",
           workers: int | None = None, order=None) -> DetectionReport:
    """Simulate every cell on its sub-image and classify every row cluster.

    Parameters
    ----------
    calibration : CalibrationTable, None or "auto"
        Delay classes for the fan-in 3 row gates.  ``"auto"`` loads the bundled
        table for (3, V, T) when one exists; ``None`` labels switching rows by
        their expected match count only.
    workers : int, optional
        Process count for independent cells (default: ``SPINPAT_THREADS``).
    order : sequence of int, optional
        Order in which cells are dispatched; results do not depend on it.
    """
    if params is None:
        from .config import default_params

        params = default_params()
    if isinstance(array, SmartDetectorCell):
        array = DetectorArray(array.config, [array], {(0, r): ClusterIndex(r + 1, 1) for r in range(3)},
                              [(0, 0)])
    cfg = array.config
    img = as_image(image)
    if img.shape != (cfg.m, cfg.n):
        raise DimensionError(f"input image shape {img.shape} does not match {cfg.m}x{cfg.n}")
    for c in array.cells:
        if not c.learned:
            raise DetectorStateError("detect called before learn")
    T = params["thermal.T"] if T is None else T
    if calibration == "auto":
        try:
            calibration = load_calibration(3, cfg.V, T)
        except LookupError:
            calibration = None

    training = [np.zeros((cfg.m, cfg.n), dtype=np.uint8) for _ in range(cfg.P)]
    for c, (r0, c0) in zip(array.cells, array.origins):
        for k, t in enumerate(read_training(c)):
            training[k][r0:r0 + 3, c0:c0 + 3] = t
    oracle = logic_oracle_detect(training, img)

    idx = list(range(len(array.cells))) if order is None else list(order)
    if sorted(idx) != list(range(len(array.cells))):
        raise ValueError("order must be a permutation of the cell indices")
    jobs = [(array.cells[k], img[r0:r0 + 3, c0:c0 + 3], _cell_seed(seed, k), T, params, calibration, False)
            for k, (r0, c0) in ((k, array.origins[k]) for k in idx)]
    workers = thread_cap() if workers is None else max(1, int(workers))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            results = list(ex.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    by_cell = dict(zip(idx, results))

    clusters, cells, pixels = [], [], {}
    for k in range(len(array.cells)):
        rows, pix, cell_val, cell_delay, _ = by_cell[k]
        r0, c0 = array.origins[k]
        for (r, c), v in pix.items():
            pixels[(r0 + r, c0 + c)] = v
        for r, (delay, val) in enumerate(rows):
            ci = array.cluster_map[(k, r)]
            want = oracle[ci]["match_count"]
            clusters.append(ClusterRecord(str(ci), delay, _row_class(delay, calibration, want),
                                          match_class(want), want, val))
        if array.cells[k].cell:
            cells.append({"cell": k, "similar": None if cell_val is None else bool(cell_val),
                          "delay_s": cell_delay})
    clusters.sort(key=lambda c: ClusterIndex.parse(c.cluster))
    delays = [c.delay_s for c in clusters if c.delay_s is not None]
    dec = max(delays) if delays else None
    power = sum(measure_power(c.netlist, None, params).total for c in array.cells[:1]) * len(array.cells)
    area = estimate_area(array.cells[0].netlist, params) * len(array.cells)
    return DetectionReport(clusters, cells, dec, power, area, pixels)


def expected_pixels(training, image) -> np.ndarray:
    """Pixel magnet values the golden model predicts (1 = majority match)."""
    from .recognition import mean_image, xnor_image

    return xnor_image(mean_image(training), image)


def cluster_table(report: DetectionReport) -> list:
    """Rows for a delay table: cluster, match count, delay (s or empty), class, expected."""
    return [(c.cluster, c.match_count, "" if c.delay_s is None else f"{c.delay_s:.6e}", c.cls,
             c.expected_class) for c in report.clusters]

