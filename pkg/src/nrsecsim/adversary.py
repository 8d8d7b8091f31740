"""Attacker agents.

Three scripted attack behaviours share one agent: broadcast-overlay spoofing
of system information, replay of captured authentication challenges to link
a subscriber across registrations, and a fake base station that replays a
victim cell's sync signals to hijack the handover decision, then either
denies service or (given mirrored network traffic) sits in the middle.

The agent is an ordinary entity in the event loop.  It owns no root key, no
home key, and no network tag secret; everything it knows arrives through
radio links strong enough for it to hear.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum

from .engine import Ctx, Entity
from .messages import MsgKind, WireMessage
from .mitigation import TssTag
from .radio import Mib, RaConfig, Sib1, SsbFrame


class AttackMode(Enum):
    SSB_SPOOF = "ssb_spoof"
    SQN_LINKABILITY = "sqn_linkability"
    FAKE_BS_HANDOVER = "fake_bs_handover"


@dataclass
class CapturedChallenge:
    rand_hex: str
    autn: dict
    captured_at: int
    target_hint: str          # device the challenge was observed going to
    accepted: bool = False    # a matching response was later overheard


@dataclass
class ReconCell:
    pci: int
    mib: Mib
    sib1: Sib1 | None
    power_dbm: float
    seen_at: int


@dataclass
class ReconMap:
    """Everything the attacker has learned by listening."""

    cells: dict[int, ReconCell] = field(default_factory=dict)
    captured_challenges: list[CapturedChallenge] = field(default_factory=list)
    overheard_cleartext: int = 0


class Attacker(Entity):
    hostile = True

    def __init__(self, entity_id: str, mode: AttackMode, target_pci: int | None,
                 overlay: dict | None = None, dos_or_mim: str = "dos",
                 start_tick: int = 0, probes: list[str] | None = None,
                 replay_delay: int = 32, tag_mode: str = "replay",
                 slot_length: int = 16, fake_plmn: str | None = None,
                 fake_tac: int | None = None, source_pci: int | None = None,
                 rng: random.Random | None = None):
        super().__init__(entity_id)
        self.mode = mode
        self.target_pci = target_pci
        self.source_pci = source_pci
        self.overlay = dict(overlay or {})
        self.dos_or_mim = dos_or_mim
        self.start_tick = start_tick
        self.replay_delay = replay_delay
        self.tag_mode = tag_mode
        self.slot_length = slot_length
        self.fake_plmn = fake_plmn
        self.fake_tac = fake_tac
        self.rng = rng or random.Random(0)

        self.recon = ReconMap()
        self._tag_history: dict[int, TssTag] = {}   # tick heard -> tag
        self._probe_queue = [{"target": t, "state": "pending"} for t in probes or []]
        self._rnti = 0x9000
        self._mirrored_k_star: bytes | None = None
        self._mim_sessions: list[str] = []

    @property
    def wants_network_mirror(self) -> bool:
        return (self.mode is AttackMode.FAKE_BS_HANDOVER
                and self.dos_or_mim == "mim")

    def _active(self, tick: int) -> bool:
        return tick >= self.start_tick

    def on_start(self, ctx: Ctx) -> None:
        ctx.record("attack_config", {
            "mode": self.mode.value, "target_pci": self.target_pci,
            "source_pci": self.source_pci, "dos_or_mim": self.dos_or_mim,
            "start_tick": self.start_tick,
            "overlay": dict(sorted(self.overlay.items())),
            "probes": [p["target"] for p in self._probe_queue],
            "tag_mode": self.tag_mode})

    # -- reconnaissance -------------------------------------------------------

    def on_radio(self, frames, ctx: Ctx) -> None:
        for frame in frames:
            if frame.origin == self.entity_id or frame.is_overlay:
                continue
            power = ctx.env.power(frame.origin, self.entity_id)
            if power is None or power < ctx.env.noise_floor_dbm:
                continue
            if frame.mib is not None:
                known = self.recon.cells.get(frame.pci)
                if known is None or power >= known.power_dbm:
                    self.recon.cells[frame.pci] = ReconCell(
                        pci=frame.pci, mib=frame.mib, sib1=frame.sib1,
                        power_dbm=power, seen_at=ctx.now)
            if frame.pci == self.target_pci and frame.tss_tag is not None:
                self._tag_history[ctx.now] = frame.tss_tag

    def observe_air(self, msg: WireMessage, physical_src: str, ctx: Ctx) -> None:
        if not msg.protected:
            self.recon.overheard_cleartext += 1
        if msg.kind is MsgKind.AUTHENTICATION_REQUEST and not msg.protected:
            if physical_src == self.entity_id:
                return
            self.recon.captured_challenges.append(CapturedChallenge(
                rand_hex=msg.body["rand"], autn=dict(msg.body["autn"]),
                captured_at=ctx.now, target_hint=msg.dst))
            ctx.record("challenge_captured", {"target_hint": msg.dst})
            return
        if msg.kind is MsgKind.AUTHENTICATION_RESPONSE:
            for challenge in self.recon.captured_challenges:
                if challenge.target_hint == physical_src:
                    challenge.accepted = True
            return
        if msg.kind is MsgKind.HANDOVER_REQUEST and self.wants_network_mirror:
            if msg.body.get("target_pci") == self.target_pci:
                self._mirrored_k_star = bytes.fromhex(msg.body["k_gnb_star"])
                ctx.record("handover_request_mirrored", {})
            return
        if self.mode is AttackMode.SQN_LINKABILITY and self._active(ctx.now):
            self._linkability_step(msg, physical_src, ctx)

    # -- broadcast-side attacks --------------------------------------------------

    def broadcast(self, tick: int) -> list[SsbFrame]:
        if not self._active(tick) or self.target_pci is None:
            return []
        if self.mode is AttackMode.SSB_SPOOF:
            return self._spoof_frames()
        if self.mode is AttackMode.FAKE_BS_HANDOVER:
            return [SsbFrame(pci=self.target_pci, origin=self.entity_id,
                             mib=None, tss_tag=self._replayed_tag(tick))]
        return []

    def _spoof_frames(self) -> list[SsbFrame]:
        known = self.recon.cells.get(self.target_pci)
        if known is not None and self.overlay:
            spoofed = Mib(**{**known.mib.to_json(), **self.overlay})
            return [SsbFrame(pci=self.target_pci, origin=self.entity_id,
                             mib=spoofed, is_overlay=True,
                             overlay_fields=frozenset(self.overlay))]
        if self.fake_plmn is not None:
            # no genuine cell to piggyback on: stand up a whole fake cell
            sib1 = Sib1(plmn=self.fake_plmn, tac=self.fake_tac or 0,
                        cell_id=f"{self.entity_id}-cell", freq=3500,
                        ra=RaConfig())
            return [SsbFrame(pci=self.target_pci, origin=self.entity_id,
                             mib=Mib(**{"cell_barred": False, **self.overlay}),
                             sib1=sib1)]
        return []

    def _replayed_tag(self, tick: int) -> TssTag | None:
        if self.tag_mode == "guess":
            # no secret, so the best available move is a uniform random value
            return TssTag(pci=self.target_pci, slot=tick // self.slot_length,
                          tag=self.rng.randbytes(8))
        cutoff = tick - self.replay_delay
        usable = [t for t in self._tag_history if t <= cutoff]
        if not usable:
            return None
        return self._tag_history[max(usable)]

    def on_run_end(self, ctx: Ctx) -> None:
        ctx.record("attacker_summary", {
            "cells_mapped": sorted(self.recon.cells),
            "challenges_captured": len(self.recon.captured_challenges),
            "cleartext_overheard": self.recon.overheard_cleartext,
            "mim_sessions": list(self._mim_sessions)})

    # -- fake base station: answering the victim's access attempts -----------------

    def on_message(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.mode is not AttackMode.FAKE_BS_HANDOVER or not self._active(ctx.now):
            return
        sender = msg.meta.get("via")
        if msg.kind is MsgKind.RA_PREAMBLE:
            # mimic a live cell: acknowledge access, then stall it
            self._rnti += 1
            ctx.record("fake_rar_sent", {"ue_ref": sender})
            ctx.send(WireMessage(kind=MsgKind.RA_RESPONSE, src=self.entity_id,
                                 dst=sender,
                                 body={"preamble": msg.body["preamble"],
                                       "occasion": msg.body["occasion"],
                                       "tc_rnti": self._rnti}))
            return
        if msg.kind is MsgKind.RRC_RECONFIGURATION_COMPLETE:
            if self.dos_or_mim == "mim" and self._mirrored_k_star is not None:
                key_check = hashlib.sha256(self._mirrored_k_star).hexdigest()[:16]
                if msg.body.get("key_check") == key_check:
                    self._mim_sessions.append(sender)
                    ctx.record("mim_established", {"ue_ref": sender})
                    ctx.send(WireMessage(kind=MsgKind.HANDOVER_COMPLETE_ACK,
                                         src=self.entity_id, dst=sender,
                                         protected=True,
                                         body={"key_check": key_check,
                                               "c_rnti": self._rnti}))
                    ctx.send(WireMessage(kind=MsgKind.RELAY_DATA,
                                         src=self.entity_id, dst=sender,
                                         body={"payload": "00" * 8}))
            # denial variant: stay silent and let the procedure time out

    # -- linkability probing ---------------------------------------------------------

    def _usable_challenge(self) -> CapturedChallenge | None:
        for challenge in self.recon.captured_challenges:
            if challenge.accepted:
                return challenge
        return None

    def _linkability_step(self, msg: WireMessage, physical_src: str, ctx: Ctx) -> None:
        if msg.kind is MsgKind.RRC_SETUP_COMPLETE:
            challenge = self._usable_challenge()
            if challenge is None:
                return
            for probe in self._probe_queue:
                if probe["state"] == "pending" and probe["target"] == physical_src:
                    probe["state"] = "awaiting_reply"
                    probe["challenge"] = challenge
                    ctx.record("probe_injected", {"target": physical_src})
                    ctx.send(WireMessage(kind=MsgKind.AUTHENTICATION_REQUEST,
                                         src=f"cell:{msg.dst_pci}",
                                         dst=physical_src,
                                         body={"rand": challenge.rand_hex,
                                               "autn": dict(challenge.autn)}))
                    return
            return
        if msg.kind is MsgKind.AUTHENTICATION_FAILURE:
            for probe in self._probe_queue:
                if (probe["state"] == "awaiting_reply"
                        and probe["target"] == physical_src):
                    reason = msg.body.get("reason")
                    classification = ("victim" if reason == "sync_failure"
                                      else "not_victim")
                    probe["state"] = "done"
                    ground_truth = probe["challenge"].target_hint == physical_src
                    ctx.record("linkability_probe", {
                        "target": physical_src,
                        "observed_failure": reason,
                        "classification": classification,
                        "ground_truth_victim": ground_truth,
                        "correct": (classification == "victim") == ground_truth})
                    return
