"""Scenario files: loading, validation, defaulting, and the normalized echo.

A scenario is a YAML document describing entities (subscribers, devices,
cells, mobility functions, a home network, attackers), per-link received
powers, margins, mode flags, and scheduled stimuli.  Validation reports every
violated rule with the key path that caused it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .key_hierarchy import KEY_LEN, Supi

VALID_MODES = ("baseline", "tss")
VALID_ATTACK_MODES = ("ssb_spoof", "sqn_linkability", "fake_bs_handover")
VALID_STIMULI = ("set_link", "page", "reregister")
OVERLAYABLE_FIELDS = ("sfn", "cell_barred", "coreset0_locator")


class ScenarioError(Exception):
    """Raised when a scenario fails validation; carries one message per fault."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass
class SimConfig:
    """Run-wide knobs, all defaulted; every field is a scenario key."""

    max_ticks: int = 200
    mode: str = "baseline"
    sn_name: str = "testnet"
    concealment: bool = True
    capture_margin_db: float = 3.0
    trigger_margin_db: float = 3.0
    reselect_margin_db: float = 3.0
    noise_floor_dbm: float = -110.0
    latency: int = 1
    preamble_pool_size: int = 8
    ra_occasion_period: int = 2
    ra_max_attempts: int = 4
    rar_timeout: int = 3
    cr_timeout: int = 4
    secure_ack_timeout: int = 6
    measurement_period: int = 8
    drx_cycle: int = 32
    sqn_window: int = 1 << 28
    registration_backoff: int = 32
    rrc_release_after: int | None = None
    periodic_registration: int | None = None
    tss_tag_bits: int = 64
    tss_slot_length: int = 16
    tss_secret_hex: str | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in sorted(self.__dataclass_fields__)}


@dataclass
class SubscriberSpec:
    supi: str                 # "<plmn>-<msin>"
    k_hex: str | None = None  # derived from the identity when omitted
    initial_sqn: int = 1

    def root_key(self) -> bytes:
        if self.k_hex is not None:
            return bytes.fromhex(self.k_hex)
        return hashlib.sha256(f"subscriber-key:{self.supi}".encode()).digest()

    def parsed(self) -> Supi:
        return Supi.parse(self.supi)


@dataclass
class GnbSpec:
    id: str
    pci: int
    freq: int
    plmn: str
    tac: int
    amf: str
    amf_list: list[str] = field(default_factory=list)   # reachable beyond the default
    ncl: list[int] = field(default_factory=list)
    cell_id: str | None = None
    overload: bool = False

    def resolved_cell_id(self) -> str:
        return self.cell_id or self.id

    def reachable_amfs(self) -> list[str]:
        return [self.amf] + [a for a in self.amf_list if a != self.amf]


@dataclass
class UeSpec:
    id: str
    supi: str
    hplmn: str
    preferred_plmns: list[str] = field(default_factory=list)
    forbidden_plmns: list[str] = field(default_factory=list)
    start_tick: int = 0
    k_override_hex: str | None = None   # wrong-key experiments


@dataclass
class AmfSpec:
    id: str


@dataclass
class AttackerSpec:
    id: str
    mode: str
    target_pci: int | None = None
    source_pci: int | None = None
    overlay: dict = field(default_factory=dict)
    dos_or_mim: str = "dos"
    start_tick: int = 0
    probes: list[str] = field(default_factory=list)
    replay_delay: int | None = None     # defaults to two tag slots
    tag_mode: str = "replay"            # "replay" | "guess"
    fake_plmn: str | None = None        # degenerate full-frame fake cell
    fake_tac: int | None = None


@dataclass
class Scenario:
    name: str
    cfg: SimConfig
    subscribers: list[SubscriberSpec]
    gnbs: list[GnbSpec]
    ues: list[UeSpec]
    amfs: list[AmfSpec]
    attackers: list[AttackerSpec]
    links: list[tuple[str, str, float]]       # directional, already expanded
    stimuli: list[dict]

    # -- validation ---------------------------------------------------------

    def validate(self) -> list[str]:
        errors: list[str] = []
        ids: dict[str, str] = {}

        def claim(entity_id: str, path: str) -> None:
            if entity_id in ids:
                errors.append(f"{path}: id {entity_id!r} already used by {ids[entity_id]}")
            else:
                ids[entity_id] = path

        if self.cfg.mode not in VALID_MODES:
            errors.append(f"mode: {self.cfg.mode!r} not one of {list(VALID_MODES)}")
        if self.cfg.max_ticks < 1:
            errors.append("max_ticks: must be positive")
        if not self.amfs:
            errors.append("amfs: at least one mobility function is required")

        supis = set()
        for i, sub in enumerate(self.subscribers):
            path = f"subscribers[{i}]"
            try:
                sub.parsed()
            except ValueError as exc:
                errors.append(f"{path}.supi: {exc}")
            if sub.supi in supis:
                errors.append(f"{path}.supi: duplicate {sub.supi!r}")
            supis.add(sub.supi)
            if sub.k_hex is not None and len(bytes.fromhex(sub.k_hex)) != KEY_LEN:
                errors.append(f"{path}.k: root key must be {KEY_LEN} bytes")

        for i, amf in enumerate(self.amfs):
            claim(amf.id, f"amfs[{i}]")

        seen_pci: dict[int, str] = {}
        gnb_pcis = set()
        plmns = set()
        for i, gnb in enumerate(self.gnbs):
            path = f"gnbs[{i}]"
            claim(gnb.id, path)
            if not 0 <= gnb.pci <= 1007:
                errors.append(f"{path}.pci: {gnb.pci} out of range 0..1007")
            if gnb.pci in seen_pci:
                errors.append(f"{path}.pci: duplicate physical cell id {gnb.pci}, "
                              f"also used by {seen_pci[gnb.pci]}")
            seen_pci[gnb.pci] = gnb.id
            gnb_pcis.add(gnb.pci)
            plmns.add(gnb.plmn)
            amf_ids = {a.id for a in self.amfs}
            if gnb.amf not in amf_ids:
                errors.append(f"{path}.amf: unknown mobility function {gnb.amf!r}")
            for j, extra in enumerate(gnb.amf_list):
                if extra not in amf_ids:
                    errors.append(f"{path}.amf_list[{j}]: unknown mobility "
                                  f"function {extra!r}")
        for i, gnb in enumerate(self.gnbs):
            for j, pci in enumerate(gnb.ncl):
                if pci not in gnb_pcis:
                    errors.append(f"gnbs[{i}].ncl[{j}]: neighbor cell id {pci} "
                                  "does not belong to any configured cell")

        ue_ids = set()
        for i, ue in enumerate(self.ues):
            path = f"ues[{i}]"
            claim(ue.id, path)
            ue_ids.add(ue.id)
            if ue.supi not in supis:
                errors.append(f"{path}.supi: no subscriber {ue.supi!r}")
            allowed = {ue.hplmn, *ue.preferred_plmns}
            if self.gnbs and not (allowed & plmns):
                errors.append(f"{path}: neither home nor preferred networks are "
                              f"served by any configured cell")
            if ue.hplmn in ue.forbidden_plmns:
                errors.append(f"{path}: home network listed as forbidden")

        for i, atk in enumerate(self.attackers):
            path = f"attackers[{i}]"
            claim(atk.id, path)
            if atk.mode not in VALID_ATTACK_MODES:
                errors.append(f"{path}.mode: {atk.mode!r} not one of "
                              f"{list(VALID_ATTACK_MODES)}")
            if atk.mode in ("ssb_spoof", "fake_bs_handover"):
                if atk.target_pci is None:
                    errors.append(f"{path}.target_pci: required for mode {atk.mode}")
                elif atk.target_pci not in gnb_pcis and atk.fake_plmn is None:
                    errors.append(f"{path}.target_pci: {atk.target_pci} does not "
                                  "match any configured cell")
            if atk.mode == "ssb_spoof":
                for name in atk.overlay:
                    if name not in OVERLAYABLE_FIELDS:
                        errors.append(f"{path}.overlay.{name}: not an overlayable field")
                if not atk.overlay and atk.fake_plmn is None:
                    errors.append(f"{path}.overlay: must name at least one field")
            if atk.mode == "sqn_linkability":
                for j, probe in enumerate(atk.probes):
                    if probe not in ue_ids:
                        errors.append(f"{path}.probes[{j}]: unknown device {probe!r}")
                if not atk.probes:
                    errors.append(f"{path}.probes: at least one probe target required")
            if atk.dos_or_mim not in ("dos", "mim"):
                errors.append(f"{path}.dos_or_mim: {atk.dos_or_mim!r} invalid")

        for i, (tx, rx, power) in enumerate(self.links):
            path = f"links[{i}]"
            for end, role in ((tx, "tx"), (rx, "rx")):
                if end not in ids:
                    errors.append(f"{path}.{role}: unknown entity {end!r}")
            if not isinstance(power, (int, float)):
                errors.append(f"{path}.power: not a number")

        for i, stim in enumerate(self.stimuli):
            path = f"stimuli[{i}]"
            kind = stim.get("kind")
            if kind not in VALID_STIMULI:
                errors.append(f"{path}.kind: {kind!r} not one of {list(VALID_STIMULI)}")
                continue
            tick = stim.get("tick")
            if not isinstance(tick, int) or tick < 0 or tick >= self.cfg.max_ticks:
                errors.append(f"{path}.tick: must be an integer in [0, max_ticks)")
            if kind in ("page", "reregister") and stim.get("ue") not in ue_ids:
                errors.append(f"{path}.ue: unknown device {stim.get('ue')!r}")
            if kind == "set_link":
                for role in ("tx", "rx"):
                    if stim.get(role) not in ids:
                        errors.append(f"{path}.{role}: unknown entity {stim.get(role)!r}")
                if not isinstance(stim.get("power_dbm"), (int, float)):
                    errors.append(f"{path}.power_dbm: not a number")

        return errors

    # -- normalization --------------------------------------------------------

    def normalized(self) -> dict:
        """Defaults filled in, suitable for echoing next to run outputs."""
        return {
            "name": self.name,
            "config": self.cfg.to_dict(),
            "subscribers": [
                {"supi": s.supi, "k": s.root_key().hex(), "initial_sqn": s.initial_sqn}
                for s in self.subscribers],
            "amfs": [{"id": a.id} for a in self.amfs],
            "gnbs": [
                {"id": g.id, "pci": g.pci, "freq": g.freq, "plmn": g.plmn,
                 "tac": g.tac, "amf": g.amf, "amf_list": list(g.amf_list),
                 "ncl": list(g.ncl), "cell_id": g.resolved_cell_id(),
                 "overload": g.overload}
                for g in self.gnbs],
            "ues": [
                {"id": u.id, "supi": u.supi, "hplmn": u.hplmn,
                 "preferred_plmns": list(u.preferred_plmns),
                 "forbidden_plmns": list(u.forbidden_plmns),
                 "start_tick": u.start_tick,
                 "k_override": u.k_override_hex}
                for u in self.ues],
            "attackers": [
                {"id": a.id, "mode": a.mode, "target_pci": a.target_pci,
                 "source_pci": a.source_pci, "overlay": dict(a.overlay),
                 "dos_or_mim": a.dos_or_mim, "start_tick": a.start_tick,
                 "probes": list(a.probes), "replay_delay": a.replay_delay,
                 "tag_mode": a.tag_mode, "fake_plmn": a.fake_plmn,
                 "fake_tac": a.fake_tac}
                for a in self.attackers],
            "links": [[tx, rx, power] for tx, rx, power in self.links],
            "stimuli": [dict(s) for s in self.stimuli],
        }

    def normalized_yaml(self) -> str:
        return yaml.safe_dump(self.normalized(), sort_keys=True)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _as_links(raw: list) -> list[tuple[str, str, float]]:
    """Expand the links section; bare triples are installed symmetrically."""
    links: list[tuple[str, str, float]] = []
    for entry in raw or []:
        if isinstance(entry, dict):
            links.append((str(entry.get("tx")), str(entry.get("rx")),
                          float(entry.get("power_dbm", 0.0))))
        else:
            a, b, power = entry
            links.append((str(a), str(b), float(power)))
            links.append((str(b), str(a), float(power)))
    return links


def parse_scenario(doc: dict, name: str) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario: document must be a mapping"])

    cfg_keys = {f for f in SimConfig.__dataclass_fields__}
    cfg_kwargs = {}
    raw_cfg = doc.get("config", {}) or {}
    unknown = sorted(set(raw_cfg) - cfg_keys)
    if unknown:
        raise ScenarioError([f"config.{key}: unknown key" for key in unknown])
    cfg_kwargs.update(raw_cfg)
    if "mode" in doc:
        cfg_kwargs["mode"] = doc["mode"]
    cfg = SimConfig(**cfg_kwargs)

    subscribers = [SubscriberSpec(supi=str(s["supi"]), k_hex=s.get("k"),
                                  initial_sqn=int(s.get("initial_sqn", 1)))
                   for s in doc.get("subscribers", []) or []]
    amfs = [AmfSpec(id=str(a["id"])) for a in doc.get("amfs", []) or []]
    gnbs = [GnbSpec(id=str(g["id"]), pci=int(g["pci"]), freq=int(g.get("freq", 3500)),
                    plmn=str(g["plmn"]), tac=int(g.get("tac", 1)),
                    amf=str(g.get("amf", amfs[0].id if amfs else "")),
                    amf_list=[str(a) for a in g.get("amf_list", []) or []],
                    ncl=[int(p) for p in g.get("ncl", []) or []],
                    cell_id=g.get("cell_id"),
                    overload=bool(g.get("overload", False)))
            for g in doc.get("gnbs", []) or []]
    ues = [UeSpec(id=str(u["id"]), supi=str(u["supi"]), hplmn=str(u["hplmn"]),
                  preferred_plmns=[str(p) for p in u.get("preferred_plmns", []) or []],
                  forbidden_plmns=[str(p) for p in u.get("forbidden_plmns", []) or []],
                  start_tick=int(u.get("start_tick", 0)),
                  k_override_hex=u.get("k_override"))
           for u in doc.get("ues", []) or []]
    attackers = [AttackerSpec(
        id=str(a["id"]), mode=str(a.get("mode", "")),
        target_pci=None if a.get("target_pci") is None else int(a["target_pci"]),
        source_pci=None if a.get("source_pci") is None else int(a["source_pci"]),
        overlay=dict(a.get("overlay", {}) or {}),
        dos_or_mim=str(a.get("dos_or_mim", "dos")),
        start_tick=int(a.get("start_tick", 0)),
        probes=[str(p) for p in a.get("probes", []) or []],
        replay_delay=None if a.get("replay_delay") is None else int(a["replay_delay"]),
        tag_mode=str(a.get("tag_mode", "replay")),
        fake_plmn=a.get("fake_plmn"),
        fake_tac=None if a.get("fake_tac") is None else int(a["fake_tac"]))
        for a in doc.get("attackers", []) or []]

    stimuli = [dict(s) for s in doc.get("stimuli", []) or []]

    return Scenario(name=name, cfg=cfg, subscribers=subscribers, gnbs=gnbs,
                    ues=ues, amfs=amfs, attackers=attackers,
                    links=_as_links(doc.get("links")), stimuli=stimuli)


def load_scenario(path: str | Path) -> Scenario:
    """Parse and fully validate a scenario file; raises ScenarioError on faults."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError([f"scenario: not parseable YAML ({exc})"]) from exc
    scenario = parse_scenario(doc, name=path.stem)
    errors = scenario.validate()
    if errors:
        raise ScenarioError(errors)
    return scenario
