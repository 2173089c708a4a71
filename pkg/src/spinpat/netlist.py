"""Circuit netlists: magnets, channels, interfaces and supplies.

A netlist is a set of magnets plus one or more *channel networks*.  Each
connected group of channels is an isolated metallic network: the magnets
attached with ``mode="drive"`` inject current from their supply, and exactly
one magnet attached with ``mode="receive"`` absorbs the spin accumulation
(its stack is the network's ground).  A magnet may drive several networks
but receives from at most one.

The JSON form has the sections ``magnets``, ``channels``, ``interfaces``,
``supplies`` and ``pins``; all lengths are in metres.

============  =====================================================
section       fields
============  =====================================================
magnets       id, role (input/internal/output/bias), geometry|null
channels      id, a, b (node names), length, width, thickness
interfaces    magnet, node, mode (drive/receive), weight
supplies      magnet, polarity (+1/-1), stage (int, phase index)
pins          {pin name: magnet id}
============  =====================================================
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

ROLES = ("input", "internal", "output", "bias")


class NetlistError(ValueError):
    pass


class TopologyError(NetlistError):
    """Netlist graph is disconnected, ungrounded or otherwise unsolvable."""


class FanInError(NetlistError):
    pass


@dataclass
class Magnet:
    id: str
    role: str = "internal"
    geometry: dict | None = None   # {"Lx", "Ly", "Lz"} in m; None -> parameter file


@dataclass
class Channel:
    id: str
    a: str
    b: str
    length: float
    width: float
    thickness: float


@dataclass
class Interface:
    magnet: str
    node: str
    mode: str = "drive"
    weight: float = 1.0


@dataclass
class Supply:
    magnet: str
    polarity: int = -1
    stage: int = 0


@dataclass
class Netlist:
    name: str = "circuit"
    magnets: list[Magnet] = field(default_factory=list)
    channels: list[Channel] = field(default_factory=list)
    interfaces: list[Interface] = field(default_factory=list)
    supplies: list[Supply] = field(default_factory=list)
    pins: dict[str, str] = field(default_factory=dict)

    # -- lookups -----------------------------------------------------------
    @property
    def magnet_ids(self) -> list[str]:
        return [m.id for m in self.magnets]

    def magnet(self, mid: str) -> Magnet:
        for m in self.magnets:
            if m.id == mid:
                return m
        raise KeyError(mid)

    def supply(self, mid: str) -> Supply | None:
        for s in self.supplies:
            if s.magnet == mid:
                return s
        return None

    def pin(self, name: str) -> str:
        return self.pins[name]

    # -- construction --------------------------------------------------------
    def add_magnet(self, mid, role="internal", geometry=None) -> str:
        self.magnets.append(Magnet(mid, role, geometry))
        return mid

    def add_channel(self, cid, a, b, length, width, thickness) -> None:
        self.channels.append(Channel(cid, a, b, float(length), float(width), float(thickness)))

    def attach(self, magnet, node, mode="drive", weight=1.0) -> None:
        self.interfaces.append(Interface(magnet, node, mode, float(weight)))

    def set_supply(self, magnet, polarity, stage=0) -> None:
        existing = self.supply(magnet)
        if existing is not None:
            if existing.polarity != polarity or existing.stage != stage:
                raise NetlistError(f"conflicting supply for magnet '{magnet}'")
            return
        self.supplies.append(Supply(magnet, int(polarity), int(stage)))

    def include(self, other: "Netlist", prefix: str, bind: dict[str, str] | None = None) -> dict[str, str]:
        """Copy ``other`` into this netlist under ``prefix``.

        ``bind`` maps magnet ids of ``other`` to magnets that already exist
        here (shared boundary magnets).  Returns the id mapping.
        """
        bind = dict(bind or {})
        ids = {}
        for m in other.magnets:
            if m.id in bind:
                ids[m.id] = bind[m.id]
            else:
                ids[m.id] = self.add_magnet(f"{prefix}{m.id}", m.role, m.geometry)
        for c in other.channels:
            self.add_channel(f"{prefix}{c.id}", f"{prefix}{c.a}", f"{prefix}{c.b}",
                             c.length, c.width, c.thickness)
        for i in other.interfaces:
            self.attach(ids[i.magnet], f"{prefix}{i.node}", i.mode, i.weight)
        for s in other.supplies:
            self.set_supply(ids[s.magnet], s.polarity, s.stage)
        return ids

    def set_role(self, mid: str, role: str) -> None:
        self.magnet(mid).role = role

    # -- structure -------------------------------------------------------------
    def components(self) -> list[set[str]]:
        """Node sets of the isolated channel networks."""
        adj = defaultdict(set)
        for c in self.channels:
            adj[c.a].add(c.b)
            adj[c.b].add(c.a)
        for i in self.interfaces:
            adj[i.node]
        seen, comps = set(), []
        for start in sorted(adj):
            if start in seen:
                continue
            comp, stack = set(), [start]
            while stack:
                n = stack.pop()
                if n in comp:
                    continue
                comp.add(n)
                stack.extend(adj[n] - comp)
            seen |= comp
            comps.append(comp)
        return comps

    def gates(self) -> list[dict]:
        """One record per channel network: drivers, receiver, nodes."""
        out = []
        for comp in self.components():
            ifs = [i for i in self.interfaces if i.node in comp]
            out.append({
                "nodes": comp,
                "drivers": [i.magnet for i in ifs if i.mode == "drive"],
                "receivers": [i.magnet for i in ifs if i.mode == "receive"],
                "interfaces": ifs,
                "channels": [c for c in self.channels if c.a in comp],
            })
        return out

    def validate(self) -> None:
        ids = self.magnet_ids
        if len(set(ids)) != len(ids):
            raise NetlistError("duplicate magnet ids")
        cids = [c.id for c in self.channels]
        if len(set(cids)) != len(cids):
            raise NetlistError("duplicate channel ids")
        known = set(ids)
        for m in self.magnets:
            if m.role not in ROLES:
                raise NetlistError(f"magnet '{m.id}': unknown role '{m.role}'")
        for c in self.channels:
            if c.length <= 0 or c.width <= 0 or c.thickness <= 0:
                raise NetlistError(f"channel '{c.id}': dimensions must be positive")
        nodes = {c.a for c in self.channels} | {c.b for c in self.channels}
        seen_nodes = set()
        for i in self.interfaces:
            if i.magnet not in known:
                raise NetlistError(f"interface references unknown magnet '{i.magnet}'")
            if i.mode not in ("drive", "receive"):
                raise NetlistError(f"interface on '{i.magnet}': bad mode '{i.mode}'")
            if i.node not in nodes:
                raise TopologyError(f"interface node '{i.node}' is not on any channel")
            if i.node in seen_nodes:
                raise TopologyError(f"node '{i.node}' carries more than one interface")
            if i.weight <= 0:
                raise NetlistError(f"interface on '{i.magnet}': weight must be positive")
            seen_nodes.add(i.node)
        for s in self.supplies:
            if s.magnet not in known:
                raise NetlistError(f"supply references unknown magnet '{s.magnet}'")
            if s.polarity not in (-1, 1):
                raise NetlistError(f"supply on '{s.magnet}': polarity must be +1 or -1")
        received = defaultdict(int)
        for g in self.gates():
            if len(g["receivers"]) != 1:
                raise TopologyError(
                    f"channel network {sorted(g['nodes'])[:2]}... needs exactly one receiving "
                    f"magnet as ground reference, found {len(g['receivers'])}")
            per_magnet = defaultdict(int)
            for i in g["interfaces"]:
                per_magnet[i.magnet] += 1
            if any(v > 1 for v in per_magnet.values()):
                raise TopologyError("a magnet attaches to one channel network more than once")
            if not g["drivers"]:
                raise TopologyError(f"channel network of '{g['receivers'][0]}' has no supplied magnet")
            received[g["receivers"][0]] += 1
            for d in g["drivers"]:
                if self.supply(d) is None:
                    raise TopologyError(f"driving magnet '{d}' has no supply")
        if any(v > 1 for v in received.values()):
            raise TopologyError("a magnet receives from more than one channel network")
        for m in self.magnets:
            if m.role == "input" and received.get(m.id):
                raise NetlistError(f"input magnet '{m.id}' cannot receive spin current")
        # every output must be reachable from an input
        fwd = defaultdict(set)
        for g in self.gates():
            for d in g["drivers"]:
                fwd[d].add(g["receivers"][0])
        reach, stack = set(), [m.id for m in self.magnets if m.role in ("input", "bias")]
        while stack:
            n = stack.pop()
            if n in reach:
                continue
            reach.add(n)
            stack.extend(fwd[n])
        for m in self.magnets:
            if m.role == "output" and m.id not in reach:
                raise TopologyError(f"output magnet '{m.id}' is not reachable from any input")
        for pin, mid in self.pins.items():
            if mid not in known:
                raise NetlistError(f"pin '{pin}' references unknown magnet '{mid}'")

    # -- serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "magnets": [asdict(m) for m in self.magnets],
            "channels": [asdict(c) for c in self.channels],
            "interfaces": [asdict(i) for i in self.interfaces],
            "supplies": [asdict(s) for s in self.supplies],
            "pins": dict(self.pins),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Netlist":
        try:
            return cls(
                name=d.get("name", "circuit"),
                magnets=[Magnet(**m) for m in d["magnets"]],
                channels=[Channel(**c) for c in d["channels"]],
                interfaces=[Interface(**i) for i in d["interfaces"]],
                supplies=[Supply(**s) for s in d["supplies"]],
                pins=dict(d.get("pins", {})),
            )
        except (KeyError, TypeError) as exc:
            raise NetlistError(f"malformed netlist document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Netlist":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Netlist":
        return cls.from_json(Path(path).read_text())


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------

def _dims(params):
    if params is None:
        from .config import default_params

        params = default_params()
    s = params.section("channel")
    return s["L_int"], s["W_int"], s["H_int"], params


def build_majority_gate(n_inputs: int, params=None, *, fan_in_cap: int | None = None,
                        transient: bool = True, polarity: int = -1, stage: int = 0) -> Netlist:
    """Star majority gate: ``n_inputs`` magnets each joined to the output by one channel.

    Pins are ``in1..inN`` and ``out``.
    """
    L, W, H, params = _dims(params)
    if fan_in_cap is None:
        fan_in_cap = int(params["detector.fan_in_cap"])
    if n_inputs < 1 or n_inputs % 2 == 0:
        raise FanInError(f"invalid fan-in {n_inputs}: must be odd and positive")
    if transient and n_inputs > fan_in_cap:
        raise FanInError(f"fan-in {n_inputs} exceeds the cap of {fan_in_cap} for transient readout")
    net = Netlist(name=f"maj{n_inputs}")
    net.add_magnet("out", "output")
    net.attach("out", "hub", "receive")
    for k in range(1, n_inputs + 1):
        mid = net.add_magnet(f"in{k}", "input")
        net.add_channel(f"ch{k}", f"n{k}", "hub", L, W, H)
        net.attach(mid, f"n{k}", "drive")
        net.set_supply(mid, polarity, stage)
        net.pins[mid] = mid
    net.pins["out"] = "out"
    return net


def build_xnor_cell(params=None, *, polarity: int = 1, stage: int = 0) -> Netlist:
    """Five-magnet XNOR built from an all-spin full adder with the carry-in tied to 0.

    Magnets and pins:

    - ``A``, ``B``: operand magnets (``A`` stores the training bit, ``B`` the input pixel)
    - ``C``: carry-in, a bias magnet holding logic 0
    - ``carry``: receives ``A, B, C``; under positive supply it settles to NOT maj(A, B, C)
    - ``out``: receives ``A, B, C`` plus ``carry`` with double weight; under positive
      supply it settles to NOT maj(A, B, C, ~Cout, ~Cout) = NOT sum = XNOR(A, B)

    The doubled carry contribution is two parallel channels into the output hub.
    """
    L, W, H, params = _dims(params)
    net = Netlist(name="xnor")
    for mid, role in (("A", "input"), ("B", "input"), ("C", "bias"), ("carry", "internal"),
                      ("out", "output")):
        net.add_magnet(mid, role)
    for mid in ("A", "B", "C", "carry"):
        net.set_supply(mid, polarity, stage)
    # carry network
    net.attach("carry", "cy.hub", "receive")
    for mid in ("A", "B", "C"):
        net.add_channel(f"cy.{mid}", f"cy.{mid}", "cy.hub", L, W, H)
        net.attach(mid, f"cy.{mid}", "drive")
    # sum network
    net.attach("out", "sm.hub", "receive")
    for mid in ("A", "B", "C"):
        net.add_channel(f"sm.{mid}", f"sm.{mid}", "sm.hub", L, W, H)
        net.attach(mid, f"sm.{mid}", "drive")
    net.add_channel("sm.carry1", "sm.carry", "sm.hub", L, W, H)
    net.add_channel("sm.carry2", "sm.carry", "sm.hub", L, W, H)
    net.attach("carry", "sm.carry", "drive", weight=2.0)
    net.pins.update({"A": "A", "B": "B", "C": "C", "carry": "carry", "out": "out"})
    return net
