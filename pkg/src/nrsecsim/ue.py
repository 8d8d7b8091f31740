"""Device-side state machine.

Covers power-up scan and network selection, camping and paging, random
access with contention, registration, the responder role of the
challenge-response authentication, connected-mode measurements, and handover
execution.  Each device is a single-threaded entity driven entirely by the
event engine.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum

from . import key_hierarchy as kh
from .engine import Ctx, Entity
from .messages import Channel, MsgKind, WireMessage
from .radio import (CellMeasurement, DecodedCell, deliver_ssb,
                    evaluate_report_trigger, measure_cells, observed_tags)


class UeMode(str, Enum):
    OFF = "off"
    SCANNING = "scanning"
    CAMPED = "camped"
    CONNECTING = "connecting"
    CONNECTED = "connected"
    HANDOVER = "handover"
    BARRED = "barred"


ALLOWED_TRANSITIONS: dict[UeMode, set[UeMode]] = {
    UeMode.OFF: {UeMode.SCANNING},
    UeMode.SCANNING: {UeMode.CAMPED},
    UeMode.CAMPED: {UeMode.CONNECTING, UeMode.SCANNING, UeMode.BARRED},
    UeMode.CONNECTING: {UeMode.CONNECTED, UeMode.CAMPED, UeMode.SCANNING},
    UeMode.CONNECTED: {UeMode.HANDOVER, UeMode.CAMPED, UeMode.SCANNING},
    UeMode.HANDOVER: {UeMode.CONNECTED, UeMode.SCANNING},
    UeMode.BARRED: {UeMode.SCANNING},
}


@dataclass
class UsimProfile:
    """Subscription data held on the device's secure element."""

    supi: kh.Supi
    k: bytes
    hplmn: str
    preferred_plmns: list[str] = field(default_factory=list)
    forbidden_plmns: set[str] = field(default_factory=set)
    sqn_ue: int = 0

    def __post_init__(self) -> None:
        if self.hplmn in self.forbidden_plmns:
            raise ValueError("home network must not be forbidden")


def select_cell(profile: UsimProfile,
                candidates: list[DecodedCell]) -> DecodedCell | None:
    """Pick the cell to camp on, or None when nothing is usable.

    Home-network cells outrank preferred ones regardless of strength; within
    the same rank the strongest wins.  Barred and forbidden cells never
    qualify, whatever their power.
    """
    ranked = []
    for cell in candidates:
        if cell.sib1 is None or cell.mib.cell_barred:
            continue
        plmn = cell.sib1.plmn
        if plmn in profile.forbidden_plmns:
            continue
        if plmn == profile.hplmn:
            rank = 0
        elif plmn in profile.preferred_plmns:
            rank = 1 + profile.preferred_plmns.index(plmn)
        else:
            continue
        ranked.append((rank, -cell.power_dbm, cell.pci, cell))
    if not ranked:
        return None
    ranked.sort(key=lambda item: item[:3])
    return ranked[0][3]


def tracking_area_changed(tal: list[int], sib1) -> bool:
    """A registration update is due whenever the broadcast area code is not
    already in the device's tracking-area list (vacuously true when empty)."""
    return sib1.tac not in tal


def paging_offset(paging_id: str, drx_cycle: int) -> int:
    digest = hashlib.sha256(paging_id.encode()).digest()
    return int.from_bytes(digest[:4], "big") % drx_cycle


def build_registration_request(profile: UsimProfile, ctx: kh.SecurityContext | None,
                               prev_amf: str | None, temp_id: str | None,
                               concealment: bool, home_public: bytes,
                               rng: random.Random) -> tuple[dict, dict, bool]:
    """Assemble (clear_header, body, protected) for a registration request.

    The permanent identity always travels concealed when concealment is on;
    the key-set identifier and previous-network pointer stay cleartext even
    when a valid context protects the rest.
    """
    if ctx is None:
        ksi = kh.KSI_NO_CONTEXT
        protected = False
    else:
        ksi = ctx.ksi
        protected = True
    header = {"ksi": ksi, "prev_amf": prev_amf, "temp_id": temp_id if ctx else None}
    if concealment:
        suci = kh.conceal_supi(profile.supi, home_public, rng)
        body = {"suci": suci.ciphertext.hex(), "suci_key_id": suci.home_key_id}
    else:
        body = {"supi": profile.supi.text()}
    return header, body, protected


class Ue(Entity):
    """One device: a mode machine plus an in-flight procedure at most."""

    def __init__(self, entity_id: str, profile: UsimProfile, cfg,
                 home_public: bytes, start_tick: int = 0):
        super().__init__(entity_id)
        self.profile = profile
        self.cfg = cfg
        self.home_public = home_public
        self.start_tick = start_tick

        self.mode = UeMode.OFF
        self.serving_pci: int | None = None
        self.serving_cell: DecodedCell | None = None
        self.c_rnti: int | None = None
        self.tal: list[int] = []
        self.ctx: kh.SecurityContext | None = None
        self.as_keys: kh.AsKeys | None = None
        self.temp_id: str | None = None
        self.prev_amf: str | None = None

        self._ra: dict | None = None
        self._ra_epoch = 0
        self._proc: dict | None = None
        self._auth_keys: dict | None = None
        self._reg_backoff_until = 0
        self._last_registration = -(10 ** 9)
        self._last_report_pci: int | None = None

    # -- bookkeeping ----------------------------------------------------------

    def _set_mode(self, new: UeMode, ctx: Ctx, **extra) -> None:
        if new == self.mode:
            return
        if new not in ALLOWED_TRANSITIONS[self.mode]:
            raise AssertionError(f"illegal transition {self.mode.value} -> {new.value}")
        old = self.mode
        self.mode = new
        captured = (self.serving_pci is not None
                    and ctx.hostile_dominates(self.serving_pci))
        ctx.record("state", {"from": old.value, "to": new.value,
                             "pci": self.serving_pci, "captured": captured, **extra})

    def _detach(self, ctx: Ctx, reason: str) -> None:
        self.c_rnti = None
        self.as_keys = None
        self.serving_pci = None
        self.serving_cell = None
        self._ra = None
        self._proc = None
        self._last_report_pci = None
        self._set_mode(UeMode.SCANNING, ctx, reason=reason)

    # -- radio phase ------------------------------------------------------------

    def on_radio(self, frames, ctx: Ctx) -> None:
        if ctx.now < self.start_tick:
            return
        if self.mode is UeMode.OFF:
            self._set_mode(UeMode.SCANNING, ctx)

        decoded = {c.pci: c for c in deliver_ssb(ctx.env, frames, self.entity_id)}

        if self.mode is UeMode.BARRED:
            self.serving_pci = None
            self.serving_cell = None
            self._set_mode(UeMode.SCANNING, ctx)
            return

        if self.mode is UeMode.SCANNING:
            choice = select_cell(self.profile, list(decoded.values()))
            if choice is not None:
                self._camp_on(choice, ctx)
            return

        if self.mode is UeMode.CAMPED:
            self._camped_step(decoded, ctx)
            return

        if self.mode is UeMode.CONNECTED:
            self._connected_step(decoded, frames, ctx)

    def _camp_on(self, cell: DecodedCell, ctx: Ctx) -> None:
        recamp = self.mode is UeMode.CAMPED
        self.serving_pci = cell.pci
        self.serving_cell = cell
        if recamp:
            ctx.record("serving_changed", {"pci": cell.pci,
                                           "captured": ctx.hostile_dominates(cell.pci)})
        else:
            self._set_mode(UeMode.CAMPED, ctx)
        self._maybe_register(ctx)

    def _camped_step(self, decoded: dict[int, DecodedCell], ctx: Ctx) -> None:
        current = decoded.get(self.serving_pci)
        if current is None:
            self._detach(ctx, reason="serving_lost")
            return
        self.serving_cell = current
        if current.mib.cell_barred:
            self._set_mode(UeMode.BARRED, ctx)
            return
        if self._proc is None:
            better = select_cell(self.profile, list(decoded.values()))
            if (better is not None and better.pci != self.serving_pci
                    and better.power_dbm >= current.power_dbm + self.cfg.reselect_margin_db):
                self._camp_on(better, ctx)
                return
        self._maybe_register(ctx)

    def _maybe_register(self, ctx: Ctx) -> None:
        if self.mode is not UeMode.CAMPED or self._proc is not None:
            return
        if ctx.now < self._reg_backoff_until:
            return
        due = tracking_area_changed(self.tal, self.serving_cell.sib1)
        period = self.cfg.periodic_registration
        if period is not None and ctx.now - self._last_registration >= period:
            due = True
        if due:
            self._start_registration(ctx)

    def _connected_step(self, decoded, frames, ctx: Ctx) -> None:
        if self.serving_pci in decoded:
            self.serving_cell = decoded[self.serving_pci]
        measurements = measure_cells(ctx.env, frames, self.entity_id, ctx.now)
        by_pci = {m.pci: m for m in measurements}
        if self.serving_pci not in by_pci:
            self._detach(ctx, reason="radio_link_failure")
            return
        if ctx.now % self.cfg.measurement_period != 0:
            return
        serving = by_pci[self.serving_pci]
        neighbors = [m for m in measurements if m.pci != self.serving_pci]
        target = evaluate_report_trigger(serving, neighbors, self.cfg.trigger_margin_db)
        if target is None or target == self._last_report_pci:
            return
        self._last_report_pci = target
        tags = observed_tags(ctx.env, frames, self.entity_id)
        target_m = by_pci[target]
        body = {
            "serving_pci": serving.pci,
            "serving_power_dbm": serving.power_dbm,
            "target_pci": target,
            "target_power_dbm": target_m.power_dbm,
            "tags": {str(pci): tag.to_json() for pci, tag in sorted(tags.items())},
        }
        ctx.record("report_triggered", {"serving_pci": serving.pci,
                                        "target_pci": target,
                                        "target_power_dbm": target_m.power_dbm})
        ctx.send(WireMessage(kind=MsgKind.MEASUREMENT_REPORT, src=self.entity_id,
                             dst_pci=self.serving_pci, protected=True, body=body))

    # -- registration -----------------------------------------------------------

    def _start_registration(self, ctx: Ctx) -> None:
        self._last_registration = ctx.now
        self._proc = {"name": "registration"}
        ctx.record("registration_started",
                   {"pci": self.serving_pci,
                    "ksi": self.ctx.ksi if self.ctx else kh.KSI_NO_CONTEXT})
        self._set_mode(UeMode.CONNECTING, ctx)
        self._start_ra(ctx, self.serving_pci, cause="registration")

    def _registration_failed(self, ctx: Ctx, reason: str) -> None:
        ctx.record("registration_aborted", {"reason": reason})
        self._reg_backoff_until = ctx.now + self.cfg.registration_backoff
        self._proc = None
        self._auth_keys = None
        if self.mode in (UeMode.CONNECTING, UeMode.CONNECTED):
            self._set_mode(UeMode.CAMPED, ctx)

    # -- random access ------------------------------------------------------------

    def _pool_size(self) -> int:
        if self.serving_cell is not None and self.serving_cell.sib1 is not None:
            return self.serving_cell.sib1.ra.preamble_pool_size
        return self.cfg.preamble_pool_size

    def _max_attempts(self) -> int:
        if self.serving_cell is not None and self.serving_cell.sib1 is not None:
            return self.serving_cell.sib1.ra.max_attempts
        return self.cfg.ra_max_attempts

    def _start_ra(self, ctx: Ctx, target_pci: int, cause: str,
                  reserved: int | None = None) -> None:
        self._ra_epoch += 1
        self._ra = {"target_pci": target_pci, "cause": cause, "attempts": 0,
                    "reserved": reserved, "stage": "wait_occasion",
                    "epoch": self._ra_epoch}
        self._schedule_preamble(ctx)

    def _schedule_preamble(self, ctx: Ctx) -> None:
        period = self.cfg.ra_occasion_period
        next_occasion = ((ctx.now // period) + 1) * period
        ctx.set_timer(next_occasion - ctx.now, "ra_tx", {"epoch": self._ra_epoch})

    def _ra_alive(self, data: dict, *stages: str) -> bool:
        return (self._ra is not None and data.get("epoch") == self._ra["epoch"]
                and self._ra["stage"] in stages)

    def _ra_retry(self, ctx: Ctx) -> None:
        if self._ra["attempts"] >= self._max_attempts():
            self._ra_failed(ctx)
            return
        self._ra["stage"] = "wait_occasion"
        self._schedule_preamble(ctx)

    def _ra_failed(self, ctx: Ctx) -> None:
        ra = self._ra
        self._ra = None
        ctx.record("ra_result", {"outcome": "failure", "cause": ra["cause"],
                                 "target_pci": ra["target_pci"],
                                 "attempts": ra["attempts"]})
        if ra["cause"] == "handover":
            ctx.record("handover_failed", {"reason": "ra_failure",
                                           "target_pci": ra["target_pci"]})
            self._detach(ctx, reason="handover_failure")
        elif ra["cause"] == "registration":
            self._registration_failed(ctx, reason="ra_failure")
        else:
            self._proc = None
            if self.mode is UeMode.CONNECTING:
                self._set_mode(UeMode.CAMPED, ctx)

    def on_timer(self, token: str, data: dict, ctx: Ctx) -> None:
        if token == "ra_tx" and self._ra_alive(data, "wait_occasion"):
            ra = self._ra
            if ra["attempts"] >= self._max_attempts():
                self._ra_failed(ctx)
                return
            ra["attempts"] += 1
            ra["preamble"] = (ra["reserved"] if ra["reserved"] is not None
                              else ctx.rng.randrange(self._pool_size()))
            ra["occasion"] = ctx.now
            ra["stage"] = "wait_rar"
            ctx.record("ra_attempt", {"attempt": ra["attempts"],
                                      "target_pci": ra["target_pci"],
                                      "preamble": ra["preamble"]})
            ctx.send(WireMessage(kind=MsgKind.RA_PREAMBLE, src=self.entity_id,
                                 dst_pci=ra["target_pci"],
                                 body={"preamble": ra["preamble"],
                                       "occasion": ctx.now}))
            ctx.set_timer(self.cfg.rar_timeout, "rar_to",
                          {"epoch": ra["epoch"], "attempt": ra["attempts"]})
        elif token == "rar_to" and self._ra_alive(data, "wait_rar"):
            if data.get("attempt") == self._ra["attempts"]:
                self._ra_retry(ctx)
        elif token == "cr_to" and self._ra_alive(data, "wait_cr"):
            if data.get("attempt") == self._ra["attempts"]:
                self._ra_retry(ctx)
        elif token == "secure_ack_to":
            if (self._proc is not None and self._proc["name"] == "handover"
                    and data.get("epoch") == self._proc.get("epoch")):
                ctx.record("handover_failed", {"reason": "no_secured_ack",
                                               "target_pci": self._proc["target_pci"]})
                self._detach(ctx, reason="handover_failure")

    # -- message handling ----------------------------------------------------------

    def on_message(self, msg: WireMessage, ctx: Ctx) -> None:
        handler = {
            MsgKind.RA_RESPONSE: self._on_rar,
            MsgKind.RRC_SETUP: self._on_rrc_setup,
            MsgKind.RRC_REJECT: self._on_rrc_reject,
            MsgKind.AUTHENTICATION_REQUEST: self._on_challenge,
            MsgKind.SECURITY_MODE_COMMAND: self._on_security_mode,
            MsgKind.REGISTRATION_ACCEPT: self._on_registration_accept,
            MsgKind.REGISTRATION_REJECT: self._on_registration_reject,
            MsgKind.RRC_RECONFIGURATION: self._on_reconfiguration,
            MsgKind.HANDOVER_COMPLETE_ACK: self._on_handover_ack,
            MsgKind.RRC_RELEASE: self._on_rrc_release,
            MsgKind.PAGE: self._on_page,
        }.get(msg.kind)
        if handler is None:
            ctx.record("ignored_message", {"kind": msg.kind.value, "reason": "unhandled"})
            return
        handler(msg, ctx)

    def _on_rar(self, msg: WireMessage, ctx: Ctx) -> None:
        if not (self._ra and self._ra["stage"] == "wait_rar"
                and msg.body.get("preamble") == self._ra["preamble"]
                and msg.body.get("occasion") == self._ra["occasion"]):
            return
        ra = self._ra
        ra["tc_rnti"] = msg.body["tc_rnti"]
        if ra["reserved"] is not None:
            # contention-free access: straight to the handover completion
            ra["stage"] = "done"
            self._ra = None
            self._send_handover_complete(ctx)
            return
        ra["msg3_id"] = f"{ctx.rng.getrandbits(40):010x}"
        ra["stage"] = "wait_cr"
        ctx.send(WireMessage(kind=MsgKind.RRC_SETUP_REQUEST, src=self.entity_id,
                             dst_pci=ra["target_pci"],
                             body={"tc_rnti": ra["tc_rnti"],
                                   "msg3_id": ra["msg3_id"],
                                   "cause": ra["cause"]}))
        ctx.set_timer(self.cfg.cr_timeout, "cr_to",
                      {"epoch": ra["epoch"], "attempt": ra["attempts"]})

    def _on_rrc_setup(self, msg: WireMessage, ctx: Ctx) -> None:
        if not (self._ra and self._ra["stage"] == "wait_cr"):
            return
        if msg.body.get("msg3_id") != self._ra["msg3_id"]:
            # contention lost: someone else's identifier came back
            ctx.record("contention_lost", {"tc_rnti": self._ra.get("tc_rnti")})
            self._ra_retry(ctx)
            return
        ra = self._ra
        self._ra = None
        ctx.record("ra_result", {"outcome": "connected", "cause": ra["cause"],
                                 "target_pci": ra["target_pci"],
                                 "attempts": ra["attempts"]})
        crnti = msg.body["c_rnti"]
        if self._proc and self._proc["name"] == "registration":
            self._proc["crnti"] = crnti
            header, body, protected = build_registration_request(
                self.profile, self.ctx, self.prev_amf, self.temp_id,
                self.cfg.concealment, self.home_public, ctx.rng)
            header["cause"] = "registration"
            ctx.send(WireMessage(kind=MsgKind.RRC_SETUP_COMPLETE, src=self.entity_id,
                                 dst_pci=self.serving_pci, protected=protected,
                                 clear_header=header, body=body))
        elif self._proc and self._proc["name"] == "page_response":
            ctx.record("page_responded", {"pci": self.serving_pci})
            ctx.send(WireMessage(kind=MsgKind.RRC_SETUP_COMPLETE, src=self.entity_id,
                                 dst_pci=self.serving_pci,
                                 clear_header={"cause": "page_response"},
                                 body={}))
            self._proc = None
            self._set_mode(UeMode.CAMPED, ctx)

    def _on_rrc_reject(self, msg: WireMessage, ctx: Ctx) -> None:
        if self._ra and self._ra["stage"] in ("wait_cr", "wait_rar"):
            ra = self._ra
            self._ra = None
            ctx.record("ra_result", {"outcome": "rejected", "cause": ra["cause"],
                                     "target_pci": ra["target_pci"],
                                     "attempts": ra["attempts"]})
            if ra["cause"] == "registration":
                self._registration_failed(ctx, reason="rrc_reject")
            else:
                self._proc = None
                if self.mode not in (UeMode.CAMPED, UeMode.SCANNING):
                    self._set_mode(UeMode.CAMPED, ctx)

    def _on_challenge(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.mode is not UeMode.CONNECTING:
            ctx.record("ignored_message", {"kind": msg.kind.value,
                                           "reason": "no_signalling_connection"})
            return
        rand = bytes.fromhex(msg.body["rand"])
        autn = kh.Autn.from_json(msg.body["autn"])
        result = kh.verify_autn(self.profile.k, self.profile.sqn_ue, rand, autn,
                                window=self.cfg.sqn_window)
        ctx.record("ue_challenge_result", {"outcome": result.outcome.value})
        if result.outcome is not kh.AuthOutcome.OK:
            ctx.send(WireMessage(kind=MsgKind.AUTHENTICATION_FAILURE,
                                 src=self.entity_id, dst_pci=self.serving_pci,
                                 body={"reason": result.outcome.value}))
            self._registration_failed(ctx, reason=result.outcome.value)
            return
        self.profile.sqn_ue = result.sqn
        res_star = kh.compute_res_star(result.res, result.ck, result.ik,
                                       self.cfg.sn_name)
        k_ausf = kh.derive_k_ausf(self.profile.k, rand, self.cfg.sn_name)
        k_seaf, k_amf = kh.derive_serving_keys(k_ausf, self.cfg.sn_name,
                                               self.profile.supi)
        self._auth_keys = {"k_ausf": k_ausf, "k_seaf": k_seaf, "k_amf": k_amf}
        ctx.send(WireMessage(kind=MsgKind.AUTHENTICATION_RESPONSE,
                             src=self.entity_id, dst_pci=self.serving_pci,
                             body={"res_star": res_star.hex()}))

    def _on_security_mode(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.mode is not UeMode.CONNECTING or self._auth_keys is None:
            ctx.record("ignored_message", {"kind": msg.kind.value,
                                           "reason": "no_fresh_keys"})
            return
        keys = self._auth_keys
        self.ctx = kh.build_security_context(
            ksi=int(msg.body["ksi"]), k_amf=keys["k_amf"], k_seaf=keys["k_seaf"],
            sqn=self.profile.sqn_ue, nhcc=0)
        self._auth_keys = None
        ctx.record("security_context_stored", {"ksi": self.ctx.ksi})
        ctx.send(WireMessage(kind=MsgKind.SECURITY_MODE_COMPLETE, src=self.entity_id,
                             dst_pci=self.serving_pci, protected=True, body={}))

    def _on_registration_accept(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.mode is not UeMode.CONNECTING or self.ctx is None:
            ctx.record("ignored_message", {"kind": msg.kind.value,
                                           "reason": "not_registering"})
            return
        self.tal = [int(t) for t in msg.body["tal"]]
        self.temp_id = msg.body["paging_id"]
        self.prev_amf = msg.body["amf_id"]
        cell = self.serving_cell
        self.as_keys = kh.derive_k_gnb(self.ctx.k_amf, cell.sib1.cell_id,
                                       cell.sib1.freq)
        self.c_rnti = self._proc.get("crnti") if self._proc else None
        self._proc = None
        self._set_mode(UeMode.CONNECTED, ctx)
        ctx.record("registration_complete",
                   {"pci": self.serving_pci, "ksi": self.ctx.ksi,
                    "tal": list(self.tal)})

    def _on_registration_reject(self, msg: WireMessage, ctx: Ctx) -> None:
        if self._proc and self._proc["name"] == "registration":
            self._registration_failed(ctx, reason=msg.body.get("reason", "rejected"))

    # -- handover ----------------------------------------------------------------

    def _on_reconfiguration(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.mode is not UeMode.CONNECTED or not msg.protected:
            ctx.record("ignored_message", {"kind": msg.kind.value,
                                           "reason": "not_connected_or_unprotected"})
            return
        target_pci = int(msg.body["target_pci"])
        target_cell_id = msg.body["target_cell_id"]
        k_star = kh.derive_k_gnb_star(self.as_keys.k_gnb, target_cell_id,
                                      self.ctx.nhcc)
        self._ra_epoch += 1
        self._proc = {"name": "handover", "target_pci": target_pci,
                      "target_cell_id": target_cell_id,
                      "target_freq": int(msg.body["target_freq"]),
                      "k_star": k_star, "epoch": self._ra_epoch}
        self._set_mode(UeMode.HANDOVER, ctx)
        ctx.record("handover_started", {"target_pci": target_pci,
                                        "nhcc": self.ctx.nhcc})
        self._start_ra(ctx, target_pci, cause="handover",
                       reserved=msg.body.get("reserved_preamble"))
        self._proc["epoch"] = self._ra_epoch

    def _send_handover_complete(self, ctx: Ctx) -> None:
        proc = self._proc
        key_check = hashlib.sha256(proc["k_star"]).hexdigest()[:16]
        ctx.send(WireMessage(kind=MsgKind.RRC_RECONFIGURATION_COMPLETE,
                             src=self.entity_id, dst_pci=proc["target_pci"],
                             protected=True, body={"key_check": key_check}))
        ctx.set_timer(self.cfg.secure_ack_timeout, "secure_ack_to",
                      {"epoch": proc["epoch"]})

    def _on_handover_ack(self, msg: WireMessage, ctx: Ctx) -> None:
        proc = self._proc
        if not (proc and proc["name"] == "handover" and msg.protected):
            return
        expected = hashlib.sha256(proc["k_star"]).hexdigest()[:16]
        if msg.body.get("key_check") != expected:
            ctx.record("handover_failed", {"reason": "key_mismatch",
                                           "target_pci": proc["target_pci"]})
            self._detach(ctx, reason="handover_failure")
            return
        self.ctx.nhcc += 1
        self.as_keys = kh.as_keys_for(proc["k_star"])
        self.serving_pci = proc["target_pci"]
        self.serving_cell = None   # refreshed on the next radio step
        self.c_rnti = msg.body.get("c_rnti")
        self._proc = None
        self._last_report_pci = None
        self._set_mode(UeMode.CONNECTED, ctx)
        ctx.record("handover_complete_ue", {"pci": self.serving_pci,
                                            "nhcc": self.ctx.nhcc})

    # -- idle-mode signalling -------------------------------------------------------

    def _on_rrc_release(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.mode in (UeMode.CONNECTED, UeMode.CONNECTING):
            self.c_rnti = None
            self.as_keys = None
            self._proc = None
            self._set_mode(UeMode.CAMPED, ctx)

    def _on_page(self, msg: WireMessage, ctx: Ctx) -> None:
        if msg.body.get("paging_id") != self.temp_id:
            ctx.record("ignored_page", {"reason": "not_addressed_to_me"})
            return
        ctx.record("page_delivered", {"page_seq": msg.body.get("page_seq"),
                                      "pci": self.serving_pci})
        if self.mode is UeMode.CAMPED and self._proc is None:
            self._proc = {"name": "page_response"}
            self._set_mode(UeMode.CONNECTING, ctx)
            self._start_ra(ctx, self.serving_pci, cause="page_response")
        elif self.mode is UeMode.CONNECTED:
            ctx.record("page_responded", {"pci": self.serving_pci})

    def on_stimulus(self, kind: str, params: dict, ctx: Ctx) -> None:
        if kind == "reregister" and params.get("ue") == self.entity_id:
            if self.mode is UeMode.CAMPED and self._proc is None:
                self._reg_backoff_until = 0
                self._start_registration(ctx)
