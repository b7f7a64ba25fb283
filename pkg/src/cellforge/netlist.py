"""Transistor netlists: SPICE-subset and canonical text parsers, net terminals."""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple


class NetlistError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Kind(str, Enum):
    PMOS = "pmos"
    NMOS = "nmos"


ROLES = ("gate", "source", "drain")
POWER_NAMES = frozenset({"VDD", "VSS", "VCC", "GND", "VPWR", "VGND"})
GROUND_NAMES = frozenset({"VSS", "GND", "VGND"})
PIN_DIRECTIONS = ("in", "out", "inout")


@dataclass(frozen=True)
class Transistor:
    id: str
    kind: Kind
    gate_net: str
    source_net: str
    drain_net: str
    width_units: int = 1

    def net_of(self, role: str) -> str:
        return {"gate": self.gate_net, "source": self.source_net, "drain": self.drain_net}[role]

    def signature(self) -> tuple[str, str, str, str]:
        return (self.kind.value, self.gate_net, self.source_net, self.drain_net)


class Terminal(NamedTuple):
    """A device terminal (``role`` in gate/source/drain) or an external pin."""

    role: str
    owner: str  # device id, or net name for role == "pin"

    def __str__(self) -> str:
        return f"pin:{self.owner}" if self.role == "pin" else f"{self.owner}.{self.role}"


@dataclass(frozen=True)
class Netlist:
    name: str
    transistors: tuple[Transistor, ...]
    nets: frozenset[str]
    pins: dict[str, str] = field(default_factory=dict)  # net -> direction
    power_nets: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for t in self.transistors:
            for role in ROLES:
                net = t.net_of(role)
                if net not in self.nets and net not in self.power_nets:
                    raise NetlistError(f"device {t.id} references undefined net {net!r}")
            if t.width_units < 1:
                raise NetlistError(f"device {t.id} has zero width")
        if set(self.pins) - set(self.nets):
            raise NetlistError(f"pins {sorted(set(self.pins) - set(self.nets))} are not signal nets")
        if self.nets & self.power_nets:
            raise NetlistError("power nets may not appear among signal nets")
        ids = [t.id for t in self.transistors]
        if len(set(ids)) != len(ids):
            raise NetlistError("duplicate device id")

    @property
    def device(self) -> dict[str, Transistor]:
        return {t.id: t for t in self.transistors}

    def devices_of(self, kind: Kind) -> list[Transistor]:
        return [t for t in self.transistors if t.kind is kind]

    def net_count(self, include_power: bool = False) -> int:
        return len(self.nets) + (len(self.power_nets) if include_power else 0)

    def width_sum(self, kind: Kind) -> int:
        return sum(t.width_units for t in self.transistors if t.kind is kind)

    def terminals_of(self, net: str) -> list[Terminal]:
        terms = [Terminal(role, t.id) for t in self.transistors for role in ROLES
                 if t.net_of(role) == net]
        if net in self.pins:
            terms.append(Terminal("pin", net))
        return terms


@dataclass(frozen=True)
class NetTerminals:
    net: str
    source: Terminal
    sinks: tuple[Terminal, ...]

    @property
    def all(self) -> tuple[Terminal, ...]:
        return (self.source, *self.sinks)


_ROLE_ORDER = {"gate": 0, "source": 1, "drain": 2, "pin": 3}


def derive_terminals(netlist: Netlist) -> dict[str, NetTerminals]:
    """Designate one source terminal per signal net; the rest become sinks.

    The source is the smallest (device id, role) among source/drain terminals.
    A net with no diffusion terminal (a cell input) takes its smallest gate
    terminal, so every source sits on a placed device whenever one exists.
    """
    out: dict[str, NetTerminals] = {}
    for net in sorted(netlist.nets):
        terms = netlist.terminals_of(net)
        if not terms:
            raise NetlistError(f"net {net!r} has no terminals")
        key = lambda t: (t.owner, _ROLE_ORDER[t.role])  # noqa: E731
        driving = sorted((t for t in terms if t.role in ("source", "drain")), key=key)
        if driving:
            source = driving[0]
        else:
            devices = [t for t in terms if t.role != "pin"]
            source = min(devices or terms, key=key)
        sinks = tuple(sorted((t for t in terms if t != source),
                             key=lambda t: (_ROLE_ORDER[t.role] == 3, t.owner, _ROLE_ORDER[t.role])))
        out[net] = NetTerminals(net, source, sinks)
    return out


def fold(netlist: Netlist) -> Netlist:
    """Split every device wider than one unit into parallel single-unit fingers."""
    devices: list[Transistor] = []
    for t in netlist.transistors:
        if t.width_units == 1:
            devices.append(t)
            continue
        for i in range(t.width_units):
            devices.append(Transistor(f"{t.id}_f{i}", t.kind, t.gate_net, t.source_net,
                                      t.drain_net, 1))
    return Netlist(netlist.name, tuple(devices), netlist.nets, dict(netlist.pins),
                   netlist.power_nets)


# -- parsing -----------------------------------------------------------------

_PARAM = re.compile(r"^(\w+)\s*=\s*(\S+)$")


def _kind(token: str, line: int) -> Kind:
    low = token.lower()
    if "pmos" in low or low.startswith("p"):
        return Kind.PMOS
    if "nmos" in low or low.startswith("n"):
        return Kind.NMOS
    raise NetlistError(f"unknown device model {token!r}", line)


def _width(params: dict[str, str], units_per_fin: int, line: int) -> int:
    raw = params.get("nfin", params.get("w", "1"))
    try:
        value = float(raw)
    except ValueError as exc:
        raise NetlistError(f"bad width {raw!r}", line) from exc
    if value <= 0:
        raise NetlistError("zero-width device", line)
    units = value / units_per_fin
    if units != int(units):
        raise NetlistError(f"width {raw} is not a multiple of {units_per_fin} fin(s)", line)
    return int(units)


def _logical_lines(text: str) -> list[tuple[int, str]]:
    lines: list[tuple[int, str]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("+") and lines:
            prev_no, prev = lines[-1]
            lines[-1] = (prev_no, prev + " " + stripped[1:].strip())
        else:
            lines.append((number, stripped))
    return lines


def _parse_spice(text: str, units_per_fin: int, cell: str | None) -> Netlist:
    name = None
    ports: list[str] = []
    pininfo: dict[str, str] | None = None
    devices: list[Transistor] = []
    done = False
    inside = False
    for no, line in _logical_lines(text):
        if not line:
            continue
        low = line.lower()
        if low.startswith("*.pininfo"):
            pininfo = pininfo or {}
            for item in line.split()[1:]:
                if ":" not in item:
                    raise NetlistError(f"malformed PININFO entry {item!r}", no)
                pin, code = item.rsplit(":", 1)
                pininfo[pin] = code.upper()
            continue
        if line.startswith("*") or done:
            continue
        if low.startswith(".subckt"):
            parts = line.split()
            if len(parts) < 2:
                raise NetlistError(".SUBCKT needs a name", no)
            if cell is not None and parts[1] != cell:
                inside = False
                continue
            if name is not None:
                raise NetlistError("nested or repeated .SUBCKT", no)
            name, ports, inside = parts[1], parts[2:], True
            continue
        if low.startswith(".ends"):
            if inside:
                done = True
            inside = False
            continue
        if not inside:
            continue
        if low.startswith("m"):
            parts = line.split()
            if len(parts) < 6:
                raise NetlistError("M-card needs: name drain gate source bulk model", no)
            dev, drain, gate, source, _bulk, model = parts[:6]
            params = {}
            for tok in parts[6:]:
                m = _PARAM.match(tok)
                if not m:
                    raise NetlistError(f"unrecognised token {tok!r}", no)
                params[m.group(1).lower()] = m.group(2)
            devices.append(Transistor(dev, _kind(model, no), gate, source, drain,
                                      _width(params, units_per_fin, no)))
            continue
        if low.startswith("x"):
            raise NetlistError("hierarchical instances are not supported", no)
        if low.startswith("."):
            continue
        raise NetlistError(f"unexpected statement {line.split()[0]!r}", no)
    if name is None:
        raise NetlistError("no .SUBCKT found")
    if inside and not done:
        raise NetlistError(f"missing .ENDS for {name}")
    return _assemble(name, ports, pininfo, devices)


def _assemble(name: str, ports: list[str], pininfo: dict[str, str] | None,
              devices: list[Transistor]) -> Netlist:
    power: set[str] = set()
    pins: dict[str, str] = {}
    codes = {"I": "in", "O": "out", "B": "inout", "IO": "inout"}
    for port in ports:
        code = None if pininfo is None else pininfo.get(port)
        if pininfo is not None and code is None:
            raise NetlistError(f"missing pin declaration for port {port!r}")
        if code in ("P", "G") or (code is None and port.upper() in POWER_NAMES):
            power.add(port)
        elif code is None:
            pins[port] = "inout"
        elif code in codes:
            pins[port] = codes[code]
        else:
            raise NetlistError(f"unknown pin direction {code!r} for {port!r}")
    if pininfo is not None:
        extra = set(pininfo) - set(ports)
        if extra:
            raise NetlistError(f"PININFO names non-port nets {sorted(extra)}")
    used = {t.net_of(r) for t in devices for r in ROLES}
    for net in used:
        if net.upper() in POWER_NAMES and net not in pins:
            power.add(net)
    undefined = {p for p in pins if p not in used}
    if undefined:
        raise NetlistError(f"pins {sorted(undefined)} connect to no device")
    nets = frozenset(used - power)
    return Netlist(name, tuple(devices), nets, pins, frozenset(power))


def _parse_text(text: str, units_per_fin: int) -> Netlist:
    name = None
    pins: dict[str, str] = {}
    power: set[str] = set()
    nets: set[str] = set()
    devices: list[Transistor] = []
    for no, line in _logical_lines(text):
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        head = parts[0]
        if head == "cell":
            name = parts[1]
        elif head == "pin":
            if len(parts) != 3 or parts[2] not in PIN_DIRECTIONS:
                raise NetlistError("expected: pin <net> <in|out|inout>", no)
            pins[parts[1]] = parts[2]
        elif head == "power":
            power.update(parts[1:])
        elif head == "net":
            nets.update(parts[1:])
        elif head == "fet":
            if len(parts) < 3:
                raise NetlistError("expected: fet <id> <pmos|nmos> gate=.. source=.. drain=..", no)
            params = {}
            for tok in parts[3:]:
                m = _PARAM.match(tok)
                if not m:
                    raise NetlistError(f"unrecognised token {tok!r}", no)
                params[m.group(1)] = m.group(2)
            try:
                width = int(params.get("width", "1"))
                devices.append(Transistor(parts[1], Kind(parts[2]), params["gate"],
                                          params["source"], params["drain"], width))
            except KeyError as exc:
                raise NetlistError(f"missing terminal {exc.args[0]}", no) from exc
            except ValueError as exc:
                raise NetlistError(str(exc), no) from exc
            if width < 1:
                raise NetlistError("zero-width device", no)
        else:
            raise NetlistError(f"unexpected statement {head!r}", no)
    if name is None:
        raise NetlistError("missing 'cell' line")
    for t in devices:
        for role in ROLES:
            net = t.net_of(role)
            if net not in nets and net not in power:
                raise NetlistError(f"device {t.id} references undefined net {net!r}")
    for p in pins:
        if p not in nets:
            raise NetlistError(f"pin {p!r} is not a declared net")
    return Netlist(name, tuple(devices), frozenset(nets), pins, frozenset(power))


def parse_netlist(text: str, units_per_fin: int = 1, cell: str | None = None) -> Netlist:
    """Parse a SPICE ``.SUBCKT`` (M-cards only) or the canonical text format."""
    for _, line in _logical_lines(text):
        if not line or line.startswith("#") or (line.startswith("*") and
                                               not line.lower().startswith("*.pininfo")):
            continue
        if line.split()[0] == "cell":
            return _parse_text(text, units_per_fin)
        break
    return _parse_spice(text, units_per_fin, cell)


def load_netlist(path: str | Path, units_per_fin: int = 1) -> Netlist:
    return parse_netlist(Path(path).read_text(), units_per_fin)


def dump_netlist(netlist: Netlist) -> str:
    """Canonical text dump, one device per line; ``parse_netlist`` reads it back."""
    lines = [f"cell {netlist.name}"]
    lines += [f"pin {p} {d}" for p, d in sorted(netlist.pins.items())]
    if netlist.power_nets:
        lines.append("power " + " ".join(sorted(netlist.power_nets)))
    lines.append("net " + " ".join(sorted(netlist.nets)))
    for t in netlist.transistors:
        lines.append(f"fet {t.id} {t.kind.value} gate={t.gate_net} source={t.source_net} "
                     f"drain={t.drain_net} width={t.width_units}")
    return "\n".join(lines) + "\n"


def identical_groups(devices: Iterable[Transistor]) -> list[list[Transistor]]:
    """Devices sharing kind, gate, source and drain nets, in canonical id order."""
    groups: dict[tuple, list[Transistor]] = defaultdict(list)
    for t in devices:
        groups[t.signature()].append(t)
    return [sorted(g, key=lambda t: t.id) for _, g in sorted(groups.items()) if len(g) > 1]


def bundled_cell(name: str) -> Netlist:
    from importlib import resources

    text = resources.files("cellforge.data").joinpath("cells", f"{name}.sp").read_text()
    return parse_netlist(text)


def bundled_cell_names() -> list[str]:
    from importlib import resources

    root = resources.files("cellforge.data").joinpath("cells")
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".sp"))
