"""Scenario files (TOML).

Nodes are numbered from 1 in scenario files, as in the usual drawings of the
example networks; the library itself is 0-based.  Example::

    name = "triangle"

    [network]
    nodes = 3
    edges = [[2, 1], [3, 2], [1, 3]]     # (tail, head)
    capacities = [inf, inf, 4.0]

    [[costs]]                            # one table per edge, in edge order
    kind = "quadratic"
    q = 0.2
    r = 2.0

    [[costs]]
    kind = "logcos"
    c = 0.1                              # capacity taken from the edge

    [exo]
    amplitudes = [2.0, 4.0, 4.0]
    frequencies = [2.0, 4.0, 8.0]
    phases = [0.0, 2.0, 3.14]
    mixing = "incidence"                 # or an n-row matrix
    [[exo.resets]]
    time = 3.0
    phases = [4.0, 6.0, 2.0]

    [controller]
    kind = "feedback"                    # or "feedforward"
    gain = 10.0
    init = "zeros"                       # or "optimal"
    mean_pin = 0.0

    [sim]
    x0 = [1.0, 2.0, 3.0]
    t_end = 10.0
    dt = 1e-3
    record_every = 1e-2

    [outputs]
    dir = "out"
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .control import ControllerConfig
from .costs import CostVector, cost_from_spec
from .exosystem import HarmonicExo, Reset
from .network import Network, NetworkError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ScenarioError(ValueError):
    """Parse or validation failure; ``diagnostics`` is a list of ``(path, message)``."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.diagnostics))


@dataclass
class ControllerSettings:
    kind: str = "feedback"
    gain: float = 10.0
    init: str = "zeros"
    mean_pin: float = 0.0

    @property
    def config(self) -> ControllerConfig:
        return ControllerConfig(gain=self.gain, mean_pin=self.mean_pin)


@dataclass
class SimSettings:
    x0: np.ndarray
    t_end: float = 10.0
    dt: float = 1e-3
    record_every: float = 1e-2


@dataclass
class Scenario:
    name: str
    network: Network
    costs: CostVector
    exo: HarmonicExo
    controller: ControllerSettings
    sim: SimSettings
    outputs: dict = field(default_factory=dict)


def bundled_names() -> list[str]:
    root = resources.files("flowpricing") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def locate(name_or_path: str) -> tuple[str, str]:
    """Return ``(text, label)`` for a file path or a bundled scenario name."""
    path = Path(name_or_path)
    if path.is_file():
        return path.read_text(), str(path)
    bundled = resources.files("flowpricing") / "scenarios" / f"{name_or_path}.toml"
    if bundled.is_file():
        return bundled.read_text(), f"<bundled:{name_or_path}>"
    raise FileNotFoundError(f"no scenario file or bundled scenario named {name_or_path!r}")


def load_scenario(name_or_path: str) -> Scenario:
    text, _ = locate(name_or_path)
    default_name = Path(name_or_path).stem
    return parse_scenario(text, default_name=default_name)


def _floats(value, path, diags, length=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        diags.append((path, f"expected a list of numbers, got {value!r}"))
        return None
    if arr.ndim != 1 or (length is not None and len(arr) != length):
        want = f"length {length}" if length is not None else "a flat list"
        diags.append((path, f"expected {want}, got shape {arr.shape}"))
        return None
    return arr


def _number(table, key, path, diags, default=None, positive=False):
    if key not in table:
        if default is None:
            diags.append((f"{path}.{key}", "missing required value"))
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        diags.append((f"{path}.{key}", f"expected a number, got {val!r}"))
        return default
    if positive and not val > 0:
        diags.append((f"{path}.{key}", f"must be positive, got {val}"))
        return default
    return float(val)


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([("<toml>", str(exc))]) from None
    diags: list[tuple[str, str]] = []

    net_t = data.get("network")
    if not isinstance(net_t, dict):
        raise ScenarioError([("network", "missing [network] table")])
    n = net_t.get("nodes")
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ScenarioError([("network.nodes", f"expected an integer >= 2, got {n!r}")])
    raw_edges = net_t.get("edges", [])
    if not isinstance(raw_edges, list) or len(raw_edges) == 0:
        raise ScenarioError([("network.edges", "at least one edge is required (m >= 1)")])
    edges = []
    for k, e in enumerate(raw_edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)):
            diags.append((f"network.edges[{k}]", f"expected [tail, head] node numbers, got {e!r}"))
            continue
        a, b = e
        if not (1 <= a <= n and 1 <= b <= n):
            diags.append((f"network.edges[{k}]", f"node out of range 1..{n}: {e}"))
            continue
        edges.append((a - 1, b - 1))
    m = len(raw_edges)
    caps = net_t.get("capacities", [math.inf] * m)
    caps_arr = _floats(caps, "network.capacities", diags, length=m)
    if diags:
        raise ScenarioError(diags)
    try:
        network = Network(n, tuple(edges), tuple(caps_arr))
    except NetworkError as exc:
        raise ScenarioError([("network", str(exc))]) from None

    cost_specs = data.get("costs", [])
    if not isinstance(cost_specs, list) or len(cost_specs) != m:
        diags.append(("costs", f"expected {m} [[costs]] entries (one per edge), got {len(cost_specs) if isinstance(cost_specs, list) else cost_specs!r}"))
        costs = None
    else:
        built = []
        for k, spec in enumerate(cost_specs):
            try:
                built.append(cost_from_spec(spec, network.capacities[k]))
            except (KeyError, ValueError, TypeError) as exc:
                diags.append((f"costs[{k}]", str(exc) if not isinstance(exc, KeyError) else f"missing parameter {exc}"))
        costs = CostVector(built) if len(built) == m else None

    exo = _parse_exo(data.get("exo", {}), network, diags)

    ctl_t = data.get("controller", {})
    controller = ControllerSettings(
        kind=ctl_t.get("kind", "feedback"),
        gain=_number(ctl_t, "gain", "controller", diags, default=10.0, positive=True),
        init=ctl_t.get("init", "zeros"),
        mean_pin=_number(ctl_t, "mean_pin", "controller", diags, default=0.0),
    )
    if controller.kind not in ("feedback", "feedforward"):
        diags.append(("controller.kind", f"expected 'feedback' or 'feedforward', got {controller.kind!r}"))
    if controller.init not in ("zeros", "optimal"):
        diags.append(("controller.init", f"expected 'zeros' or 'optimal', got {controller.init!r}"))

    sim_t = data.get("sim", {})
    x0 = _floats(sim_t.get("x0", [0.0] * n), "sim.x0", diags, length=n)
    sim = SimSettings(
        x0=x0,
        t_end=_number(sim_t, "t_end", "sim", diags, default=10.0, positive=True),
        dt=_number(sim_t, "dt", "sim", diags, default=1e-3, positive=True),
        record_every=_number(sim_t, "record_every", "sim", diags, default=1e-2, positive=True),
    )
    if diags:
        raise ScenarioError(diags)
    return Scenario(
        name=str(data.get("name", default_name)),
        network=network,
        costs=costs,
        exo=exo,
        controller=controller,
        sim=sim,
        outputs=dict(data.get("outputs", {})),
    )


def _parse_exo(exo_t, network: Network, diags):
    n = network.node_count
    if not exo_t:
        return HarmonicExo(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros((n, 0)))
    amps = _floats(exo_t.get("amplitudes", []), "exo.amplitudes", diags)
    if amps is None:
        return None
    c = len(amps)
    freqs = _floats(exo_t.get("frequencies", [0.0] * c), "exo.frequencies", diags, length=c)
    phases = _floats(exo_t.get("phases", [0.0] * c), "exo.phases", diags, length=c)
    mixing = exo_t.get("mixing", "incidence")
    if mixing == "incidence":
        if c != network.edge_count:
            diags.append(("exo.mixing", f"incidence mixing needs one channel per edge ({network.edge_count}), got {c}"))
            return None
        M = np.array(network.incidence)
    else:
        try:
            M = np.asarray(mixing, dtype=float)
        except (TypeError, ValueError):
            diags.append(("exo.mixing", f"expected 'incidence' or a numeric matrix, got {mixing!r}"))
            return None
        if M.shape != (n, c):
            diags.append(("exo.mixing", f"expected a {n}x{c} matrix, got shape {M.shape}"))
            return None
        sums = M.sum(axis=0)
        if np.any(np.abs(sums) > 1e-12):
            diags.append(("exo.mixing", f"columns must sum to zero so supply and demand balance; column sums {sums.tolist()}"))
            return None
    resets = []
    for j, r in enumerate(exo_t.get("resets", [])):
        t = _number(r, "time", f"exo.resets[{j}]", diags)
        ph = _floats(r.get("phases"), f"exo.resets[{j}].phases", diags, length=c)
        if t is not None and ph is not None:
            resets.append(Reset(t, tuple(ph)))
    if any(b.time < a.time for a, b in zip(resets, resets[1:])):
        diags.append(("exo.resets", "resets must be sorted by time"))
    if freqs is None or phases is None or diags:
        return None
    return HarmonicExo(amps, freqs, phases, M, tuple(resets))
