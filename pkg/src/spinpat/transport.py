"""Quasi-static charge and spin transport in metallic channel networks.

Every node carries four potentials ``(V, mu_x, mu_y, mu_z)``: the charge
electrochemical potential and the spin accumulation, both in volts.  In the
non-magnetic channel charge and spin decouple; each finite-difference
segment of length ``h`` contributes a series conductance ``sigma A / h`` to
all four components and a spin-only shunt ``sigma A h / (2 lambda^2)`` to
each of its end nodes, which discretises

    d^2 mu / dx^2 = mu / lambda^2,     lambda = sqrt(D tau_s).

A magnet couples to its node through the 4x4 interface conductance

    [[G,      -dG m^T                                  ],
     [-dG m,  G m m^T + ReG (1 - m m^T) + ImG [m x]    ]]

with ``G = G_up + G_down`` and ``dG = G_up - G_down``.  A supplied magnet
is a reservoir at ``(V_supply, 0)`` and the receiving magnet a reservoir at
``(0, 0)``.  The ground terminal of a network sits at the receiver's node:
the supply current leaves through it, so charge current passes through the
supplied magnets only and the receiver sees pure spin diffusion.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import integrate

from .netlist import Netlist, TopologyError


class InvalidParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelParams:
    length: float
    width: float
    thickness: float
    area: float
    dx: float
    sigma: float
    D: float
    mobility: float
    tau_s: float

    def __post_init__(self):
        if self.dx <= 0:
            raise InvalidParameterError("grid spacing must be positive")
        if min(self.sigma, self.D, self.area, self.length) <= 0:
            raise InvalidParameterError("sigma, D, area and length must be positive")
        if self.tau_s < 0:
            raise InvalidParameterError("tau_s must be non-negative")

    @property
    def aspect_ratio(self) -> float:
        return self.thickness / self.width


@dataclass(frozen=True)
class InterfaceParams:
    G_up: float
    G_down: float
    ReG: float
    ImG: float = 0.0

    def __post_init__(self):
        if not self.G_up > self.G_down > 0:
            raise InvalidParameterError("need G_up > G_down > 0")

    @property
    def gsum(self) -> float:
        return self.G_up + self.G_down

    @property
    def gdiff(self) -> float:
        return self.G_up - self.G_down

    @property
    def polarization(self) -> float:
        return self.gdiff / self.gsum

    def as_array(self) -> np.ndarray:
        return np.array([self.gsum, self.gdiff, self.ReG, self.ImG])

    def matrix(self, m, weight: float = 1.0) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        G = np.zeros((4, 4))
        G[0, 0] = self.gsum
        G[0, 1:] = G[1:, 0] = -self.gdiff * m
        P = np.outer(m, m)
        cx = np.array([[0.0, -m[2], m[1]], [m[2], 0.0, -m[0]], [-m[1], m[0], 0.0]])
        G[1:, 1:] = self.gsum * P + self.ReG * (np.eye(3) - P) + self.ImG * cx
        return weight * G


@dataclass(frozen=True)
class SizeEffectParams:
    p: float
    R: float
    grain_size: float
    mean_free_path: float = 39e-9

    def __post_init__(self):
        if not (0 <= self.p <= 1 and 0 <= self.R < 1):
            raise InvalidParameterError("specularity must lie in [0, 1] and reflectivity in [0, 1)")
        if self.grain_size <= 0 or self.mean_free_path <= 0:
            raise InvalidParameterError("grain size and mean free path must be positive")


@dataclass(frozen=True)
class SpinCurrent:
    charge: float
    spin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "spin", np.asarray(self.spin, dtype=float).reshape(3))
        if not (math.isfinite(self.charge) and np.all(np.isfinite(self.spin))):
            raise ValueError("non-finite current")

    def longitudinal(self, m) -> float:
        return float(np.dot(self.spin, m))

    def transverse(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return self.spin - np.dot(self.spin, m) * m

    def __add__(self, other: "SpinCurrent") -> "SpinCurrent":
        return SpinCurrent(self.charge + other.charge, self.spin + other.spin)

    def __neg__(self) -> "SpinCurrent":
        return SpinCurrent(-self.charge, -self.spin)

    @classmethod
    def zero(cls) -> "SpinCurrent":
        return cls(0.0, np.zeros(3))


def spin_diffusion_length(channel: ChannelParams | None = None, *, D: float | None = None,
                          tau_s: float | None = None) -> float:
    """``sqrt(D tau_s)``; pass a :class:`ChannelParams` or ``D`` and ``tau_s``."""
    if channel is not None:
        D, tau_s = channel.D, channel.tau_s
    if D is None or tau_s is None:
        raise InvalidParameterError("need a channel or both D and tau_s")
    if D < 0 or tau_s < 0:
        raise InvalidParameterError("D and tau_s must be non-negative")
    return math.sqrt(D * tau_s)


def interface_currents(m, node_spin_accumulation, applied_voltage: float, iface: InterfaceParams,
                       node_potential: float = 0.0, weight: float = 1.0) -> SpinCurrent:
    """Current flowing from a magnet's reservoir into its channel node.

    The magnet reservoir sits at ``(applied_voltage, 0)``; the node at
    ``(node_potential, node_spin_accumulation)``.  The part of the returned
    spin current transverse to ``m`` is (minus) what the magnet absorbs.
    """
    drop = np.concatenate(([applied_voltage - node_potential], -np.asarray(node_spin_accumulation, float)))
    I = iface.matrix(m, weight) @ drop
    return SpinCurrent(float(I[0]), I[1:])


# ---------------------------------------------------------------------------
# Size effects
# ---------------------------------------------------------------------------

def mayadas_shatzkes(alpha: float) -> float:
    """Grain-boundary conductivity ratio for ``alpha = (l / d) R / (1 - R)``."""
    if alpha <= 0:
        return 1.0
    if alpha > 1e3:
        # series expansion avoids cancellation: 3 * sum_k (-1)^k / ((k + 4) alpha^(k+1))
        return 3.0 * sum((-1) ** k / ((k + 4) * alpha ** (k + 1)) for k in range(12))
    # log1p(1/a) written as log1p(a) - log(a) so tiny alpha cannot overflow
    return 1.0 - 1.5 * alpha + 3 * alpha ** 2 - 3 * alpha ** 3 * (math.log1p(alpha) - math.log(alpha))


def fuchs_sondheimer(thickness: float, mean_free_path: float, p: float) -> float:
    """Surface-scattering conductivity ratio of a film of the given thickness."""
    k = thickness / mean_free_path
    if p >= 1.0 or math.isinf(k):
        return 1.0

    def f(u):
        e = math.exp(-k * u)
        return (1.0 / u ** 3 - 1.0 / u ** 5) * (1.0 - e) / (1.0 - p * e)

    val, _ = integrate.quad(f, 1.0, math.inf, limit=200)
    return 1.0 - 1.5 / k * (1.0 - p) * val


def effective_conductivity(size: SizeEffectParams, channel: ChannelParams, bulk_sigma: float) -> float:
    """Bulk conductivity reduced by sidewall, top/bottom and grain-boundary scattering.

    Surface terms (width and thickness) and the grain term are combined by
    Matthiessen's rule on the excess resistivities.
    """
    lam = size.mean_free_path
    a = lam / size.grain_size * size.R / (1.0 - size.R)
    ratios = [mayadas_shatzkes(a), fuchs_sondheimer(channel.width, lam, size.p),
              fuchs_sondheimer(channel.thickness, lam, size.p)]
    rho = 1.0 + sum(1.0 / r - 1.0 for r in ratios)
    return bulk_sigma / rho


# ---------------------------------------------------------------------------
# Finite-difference networks
# ---------------------------------------------------------------------------

@dataclass
class Attachment:
    magnet: str
    node: int
    mode: str
    weight: float


@dataclass
class TransportNetwork:
    nodes: list[str]
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_g: np.ndarray
    shunt: np.ndarray
    attachments: list[Attachment]
    components: list[np.ndarray]
    iface: InterfaceParams
    segments: dict = field(default_factory=dict)   # channel id -> segment count

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def index(self, name: str) -> int:
        return self.nodes.index(name)

    def laplacian(self) -> sp.csr_matrix:
        n = self.n_nodes
        i, j, g = self.edge_i, self.edge_j, self.edge_g
        rows = np.concatenate([i, j, i, j])
        cols = np.concatenate([i, j, j, i])
        vals = np.concatenate([g, g, -g, -g])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def ground_nodes(self) -> list[int]:
        return [a.node for a in self.attachments if a.mode == "receive"]

    def component_of(self, node: int) -> int:
        for k, c in enumerate(self.components):
            if node in c:
                return k
        raise KeyError(node)


def build_network(netlist: Netlist, dx: float | None = None, channel: ChannelParams | None = None,
                  iface: InterfaceParams | None = None, params=None) -> TransportNetwork:
    """Discretise every channel of ``netlist`` into ``ceil(L / dx)`` segments.

    Material values (sigma, lambda) come from ``channel``; lengths and
    cross-sections from the netlist.  Raises :class:`TopologyError` for
    networks without a ground (receiving magnet) or without a supply.
    """
    if channel is None or iface is None:
        if params is None:
            from .config import default_params

            params = default_params()
        channel = channel or params.channel()
        iface = iface or params.interface()
    dx = channel.dx if dx is None else dx
    if dx <= 0:
        raise InvalidParameterError("grid spacing must be positive")
    netlist.validate()
    if channel.tau_s <= 0:
        raise InvalidParameterError("spin relaxation time must be positive for a network solve")
    lam = spin_diffusion_length(channel)

    names: list[str] = []
    idx: dict[str, int] = {}

    def node(name):
        if name not in idx:
            idx[name] = len(names)
            names.append(name)
        return idx[name]

    ei, ej, eg = [], [], []
    shunt: dict[int, float] = {}
    segments = {}
    for c in netlist.channels:
        nseg = math.ceil(c.length / dx - 1e-9)
        if dx > c.length:
            warnings.warn(f"channel '{c.id}': dx = {dx:g} m exceeds length {c.length:g} m; "
                          "using a single segment", RuntimeWarning, stacklevel=2)
            nseg = 1
        segments[c.id] = nseg
        h = c.length / nseg
        area = c.width * c.thickness
        chain = [node(c.a)] + [node(f"{c.id}#{k}") for k in range(1, nseg)] + [node(c.b)]
        gs = channel.sigma * area / h
        gsh = channel.sigma * area * h / (2.0 * lam * lam)
        for a, b in zip(chain[:-1], chain[1:]):
            ei.append(a)
            ej.append(b)
            eg.append(gs)
            shunt[a] = shunt.get(a, 0.0) + gsh
            shunt[b] = shunt.get(b, 0.0) + gsh
    sh = np.zeros(len(names))
    for k, v in shunt.items():
        sh[k] = v
    atts = [Attachment(i.magnet, idx[i.node], i.mode, i.weight) for i in netlist.interfaces]

    # connected components on the discretised graph
    graph = sp.coo_matrix((np.ones(len(ei)), (ei, ej)), shape=(len(names), len(names)))
    ncomp, labels = sp.csgraph.connected_components(graph, directed=False)
    comps = [np.nonzero(labels == k)[0] for k in range(ncomp)]
    for comp in comps:
        cs = set(comp.tolist())
        recv = [a for a in atts if a.node in cs and a.mode == "receive"]
        drv = [a for a in atts if a.node in cs and a.mode == "drive"]
        if len(recv) != 1:
            raise TopologyError("each channel network needs exactly one ground (receiving magnet)")
        if not drv:
            raise TopologyError("disconnected supply path: channel network without a supplied magnet")
    return TransportNetwork(names, np.array(ei, dtype=np.int64), np.array(ej, dtype=np.int64),
                            np.array(eg), sh, atts, comps, iface, segments)


@dataclass
class TransportSolution:
    potentials: np.ndarray                 # (n_nodes, 4)
    attachment_currents: list[SpinCurrent]  # magnet reservoir -> node, per attachment
    network: TransportNetwork

    def node_residual(self) -> np.ndarray:
        """Net charge current into every node (should vanish)."""
        net = self.network
        V = self.potentials[:, 0]
        res = -(net.laplacian() @ V)
        for a, cur in zip(net.attachments, self.attachment_currents):
            res[a.node] += cur.charge
        res[net.ground_nodes()] = 0.0
        return res

    def ground_currents(self) -> np.ndarray:
        """Current leaving through each ground terminal."""
        net = self.network
        V = self.potentials[:, 0]
        res = -(net.laplacian() @ V)
        for a, cur in zip(net.attachments, self.attachment_currents):
            res[a.node] += cur.charge
        return res[net.ground_nodes()]

    def supply_current(self) -> float:
        return sum(abs(c.charge) for a, c in zip(self.network.attachments, self.attachment_currents)
                   if a.mode == "drive")


def solve_network(network: TransportNetwork, magnet_states: dict, supply_voltages: dict) -> TransportSolution:
    """Solve all four potentials on every node for fixed magnetisations."""
    n = network.n_nodes
    Lap = network.laplacian()
    A = (sp.kron(Lap, sp.diags([1.0, 0.0, 0.0, 0.0]))
         + sp.kron(Lap + sp.diags(network.shunt), sp.diags([0.0, 1.0, 1.0, 1.0])))
    b = np.zeros(4 * n)
    rows, cols, vals, res_v = [], [], [], []
    blk = np.arange(4)
    for a in network.attachments:
        m = np.asarray(magnet_states[a.magnet], dtype=float)
        G = network.iface.matrix(m, a.weight)
        o = 4 * a.node
        rows.append(np.repeat(o + blk, 4))
        cols.append(np.tile(o + blk, 4))
        vals.append(G.ravel())
        V = float(supply_voltages.get(a.magnet, 0.0)) if a.mode == "drive" else 0.0
        if not math.isfinite(V):
            raise InvalidParameterError(f"non-finite supply on '{a.magnet}'")
        b[o:o + 4] += G[:, 0] * V
        res_v.append(V)
    if rows:
        A = A + sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=A.shape)
    # ground terminals: pin the charge potential of each receiver node
    pin = np.zeros(4 * n)
    for k in network.ground_nodes():
        pin[4 * k] = 1.0
    keep = sp.diags(1.0 - pin)
    A = (keep @ A + sp.diags(pin)).tocsr()
    b = b * (1.0 - pin)
    A = A.tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(A, b)
        except (spla.MatrixRankWarning, RuntimeError) as exc:
            raise TopologyError(f"singular transport system (missing ground?): {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise TopologyError("singular transport system (missing ground?)")
    X = x.reshape(n, 4)
    cur = []
    for a, V in zip(network.attachments, res_v):
        m = magnet_states[a.magnet]
        cur.append(interface_currents(m, X[a.node, 1:], V, network.iface, X[a.node, 0], a.weight))
    return TransportSolution(X, cur, network)


def solve_steady_state(network: TransportNetwork, magnet_states: dict, supply_voltages: dict) -> dict:
    """Spin current flowing from the channels into each attached magnet.

    Returns ``{magnet_id: SpinCurrent}``.  For a receiving magnet the part
    transverse to its magnetisation is the torque-carrying current.
    """
    sol = solve_network(network, magnet_states, supply_voltages)
    out: dict[str, SpinCurrent] = {}
    for a, c in zip(network.attachments, sol.attachment_currents):
        out[a.magnet] = out.get(a.magnet, SpinCurrent.zero()) + (-c)
    return out


# ---------------------------------------------------------------------------
# Port reduction
# ---------------------------------------------------------------------------

@dataclass
class PortModel:
    """Channel network of one gate reduced onto its interface nodes."""
    magnets: list[str]
    weights: np.ndarray
    drive: np.ndarray      # bool per port
    receiver: int          # port index of the ground magnet
    Yc: np.ndarray         # charge admittance (k, k)
    Ys: np.ndarray         # spin admittance, same for each component (k, k)

    def ystat(self, size: int | None = None) -> np.ndarray:
        """4k x 4k block admittance, padded with identity up to ``size`` ports."""
        k = len(self.magnets)
        size = k if size is None else size
        Y = np.eye(4 * size)
        Y[:4 * k, :4 * k] = 0.0
        Y[0:4 * k:4, 0:4 * k:4] = self.Yc
        for s in range(1, 4):
            Y[s:4 * k:4, s:4 * k:4] = self.Ys
        return Y


def _schur(M: np.ndarray, keep: np.ndarray) -> np.ndarray:
    drop = np.setdiff1d(np.arange(M.shape[0]), keep)
    if drop.size == 0:
        return M[np.ix_(keep, keep)]
    Mii = M[np.ix_(drop, drop)]
    return M[np.ix_(keep, keep)] - M[np.ix_(keep, drop)] @ np.linalg.solve(Mii, M[np.ix_(drop, keep)])


def port_models(network: TransportNetwork) -> list[PortModel]:
    """Exact Schur reduction of every channel network onto its attachment nodes."""
    Lap = network.laplacian().tocsr()
    out = []
    for comp in network.components:
        members = set(comp.tolist())
        atts = [a for a in network.attachments if a.node in members]
        local = {g: k for k, g in enumerate(comp)}
        sub = Lap[comp][:, comp].toarray()
        keep = np.array([local[a.node] for a in atts])
        Yc = _schur(sub, keep)
        Ys = _schur(sub + np.diag(network.shunt[comp]), keep)
        recv = [k for k, a in enumerate(atts) if a.mode == "receive"][0]
        out.append(PortModel([a.magnet for a in atts], np.array([a.weight for a in atts]),
                             np.array([a.mode == "drive" for a in atts]), recv, Yc, Ys))
    return out


def channel_two_port(channel: ChannelParams, length: float | None = None, area: float | None = None):
    """Closed-form (charge, spin) admittance matrices of a uniform channel."""
    L = channel.length if length is None else length
    A = channel.area if area is None else area
    lam = spin_diffusion_length(channel)
    gc = channel.sigma * A / L
    Yc = gc * np.array([[1.0, -1.0], [-1.0, 1.0]])
    x = L / lam
    g = channel.sigma * A / lam
    Ys = g * np.array([[1 / math.tanh(x), -1 / math.sinh(x)], [-1 / math.sinh(x), 1 / math.tanh(x)]])
    return Yc, Ys


def two_magnet_link_exact(channel: ChannelParams, iface: InterfaceParams, m_src, m_dst, V: float,
                          length: float | None = None) -> SpinCurrent:
    """Spin current absorbed by the receiving magnet of a two-magnet link, closed form."""
    Yc, Ys = channel_two_port(channel, length)
    Y = np.zeros((8, 8))
    Y[0::4, 0::4] = Yc
    for s in range(1, 4):
        Y[s::4, s::4] = Ys
    Gs, Gd = iface.matrix(m_src), iface.matrix(m_dst)
    Y[:4, :4] += Gs
    Y[4:, 4:] += Gd
    b = np.zeros(8)
    b[:4] = Gs[:, 0] * V
    Y[4, :] = 0.0   # ground terminal at the receiving node
    Y[4, 4] = 1.0
    x = np.linalg.solve(Y, b)
    I = Gd @ x[4:]
    return SpinCurrent(float(I[0]), I[1:])
