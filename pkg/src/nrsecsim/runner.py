"""Scenario assembly and execution."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .adversary import AttackMode, Attacker
from .engine import Directory, Engine, TraceRecord, serialize_trace
from .key_hierarchy import HomeKeyPair
from .metrics import MetricsSummary, summarize
from .mitigation import TssConfig
from .network import Amf, Gnb, HomeNetwork
from .radio import RadioEnvironment
from .scenario import Scenario
from .ue import Ue, UsimProfile

HOME_ID = "home"


@dataclass
class RunResult:
    scenario_name: str
    seed: int
    mode: str
    trace: list[TraceRecord]
    summary: MetricsSummary
    engine: Engine

    def trace_text(self) -> str:
        return serialize_trace(self.trace)


def _tss_config(scenario: Scenario, cfg, seed: int) -> TssConfig | None:
    if cfg.mode != "tss":
        return None
    if cfg.tss_secret_hex is not None:
        secret = bytes.fromhex(cfg.tss_secret_hex)
    else:
        secret = hashlib.sha256(
            f"tss-secret:{scenario.name}:{seed}".encode()).digest()
    return TssConfig(network_secret=secret, tag_bits=cfg.tss_tag_bits,
                     slot_length=cfg.tss_slot_length)


def build_engine(scenario: Scenario, seed: int,
                 mode_override: str | None = None) -> Engine:
    cfg = scenario.cfg
    if mode_override is not None and mode_override != cfg.mode:
        cfg = dataclasses.replace(cfg, mode=mode_override)

    env = RadioEnvironment(links={(tx, rx): p for tx, rx, p in scenario.links},
                           capture_margin_db=cfg.capture_margin_db,
                           noise_floor_dbm=cfg.noise_floor_dbm)
    tss_cfg = _tss_config(scenario, cfg, seed)

    gnb_info = {g.id: {"pci": g.pci, "cell_id": g.resolved_cell_id(),
                       "freq": g.freq, "tac": g.tac, "amf": g.amf}
                for g in scenario.gnbs}
    directory = Directory(gnb_by_pci={g.pci: g.id for g in scenario.gnbs},
                          gnb_info=gnb_info,
                          amf_ids=tuple(a.id for a in scenario.amfs),
                          home_id=HOME_ID, sn_name=cfg.sn_name)

    engine = Engine(env=env, config=cfg, directory=directory, seed=seed,
                    tss_cfg=tss_cfg)

    keypair = HomeKeyPair.from_private(
        hashlib.sha256(f"home-private:{scenario.name}".encode()).digest())
    subscribers = {s.supi: {"k": s.root_key(), "sqn_hn": s.initial_sqn}
                   for s in scenario.subscribers}
    engine.add_entity(HomeNetwork(HOME_ID, cfg, keypair, subscribers))

    for amf in scenario.amfs:
        engine.add_entity(Amf(amf.id, cfg))
    for gnb in scenario.gnbs:
        engine.add_entity(Gnb(gnb.id, cfg, pci=gnb.pci, freq=gnb.freq,
                              plmn=gnb.plmn, tac=gnb.tac,
                              cell_id=gnb.resolved_cell_id(), ncl=gnb.ncl,
                              amf_id=gnb.amf, overload=gnb.overload,
                              tss_cfg=tss_cfg,
                              reachable_amfs=gnb.reachable_amfs()))

    sub_by_supi = {s.supi: s for s in scenario.subscribers}
    for ue in scenario.ues:
        sub = sub_by_supi[ue.supi]
        k = (bytes.fromhex(ue.k_override_hex) if ue.k_override_hex
             else sub.root_key())
        profile = UsimProfile(supi=sub.parsed(), k=k, hplmn=ue.hplmn,
                              preferred_plmns=list(ue.preferred_plmns),
                              forbidden_plmns=set(ue.forbidden_plmns),
                              sqn_ue=sub.initial_sqn)
        engine.add_entity(Ue(ue.id, profile, cfg, keypair.public,
                             start_tick=ue.start_tick))

    for atk in scenario.attackers:
        replay_delay = (atk.replay_delay if atk.replay_delay is not None
                        else 2 * cfg.tss_slot_length)
        engine.add_entity(Attacker(
            atk.id, mode=AttackMode(atk.mode), target_pci=atk.target_pci,
            overlay=atk.overlay, dos_or_mim=atk.dos_or_mim,
            start_tick=atk.start_tick, probes=atk.probes,
            replay_delay=replay_delay, tag_mode=atk.tag_mode,
            slot_length=cfg.tss_slot_length, fake_plmn=atk.fake_plmn,
            fake_tac=atk.fake_tac, source_pci=atk.source_pci,
            rng=engine.rng_for(atk.id)))

    for stim in scenario.stimuli:
        engine.add_stimulus(int(stim["tick"]), stim)

    engine.record("engine", "run_header", {
        "scenario": scenario.name, "seed": seed, "mode": cfg.mode,
        "max_ticks": cfg.max_ticks,
        "subscribers": sorted(s.supi for s in scenario.subscribers),
        "attackers": sorted(a.id for a in scenario.attackers)})
    return engine


def run_scenario(scenario: Scenario, seed: int,
                 mode_override: str | None = None) -> RunResult:
    engine = build_engine(scenario, seed, mode_override)
    trace = engine.run(engine.config.max_ticks)
    return RunResult(scenario_name=scenario.name, seed=seed,
                     mode=engine.config.mode, trace=trace,
                     summary=summarize(trace), engine=engine)
