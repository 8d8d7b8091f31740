"""Network-side entities: cells, mobility functions, and the home network.

The cell handles random access with contention resolution, forwards
signalling, decides handovers from measurement reports, and moves key
material to handover targets.  The mobility function orchestrates
registration and authentication and owns the serving-side security contexts.
The home network holds root keys, deconceals identities, and issues
challenge vectors.
"""

from __future__ import annotations

import hashlib
import itertools

from . import key_hierarchy as kh
from .engine import Ctx, Entity
from .messages import Channel, MsgKind, WireMessage
from .mitigation import TagVerdict, TssTag, generate_tss, network_verify_report, slot_index
from .radio import Mib, RaConfig, Sib1, SsbFrame
from .ue import paging_offset

RESERVED_PREAMBLE_BASE = 1000   # indices above any contention pool

NAS_UPLINK_KINDS = (MsgKind.AUTHENTICATION_RESPONSE,
                    MsgKind.AUTHENTICATION_FAILURE,
                    MsgKind.SECURITY_MODE_COMPLETE)


class Gnb(Entity):
    """One base station: broadcaster, access handler, handover endpoint."""

    def __init__(self, entity_id: str, cfg, pci: int, freq: int, plmn: str,
                 tac: int, cell_id: str, ncl: list[int], amf_id: str,
                 overload: bool = False, tss_cfg=None,
                 reachable_amfs: list[str] | None = None):
        super().__init__(entity_id)
        self.cfg = cfg
        self.tss_cfg = tss_cfg
        self.pci = pci
        self.freq = freq
        self.cell_id = cell_id
        self.amf_id = amf_id
        self.reachable_amfs = list(reachable_amfs or [amf_id])
        self.ncl = list(ncl)
        self.overload = overload
        self.sib1 = Sib1(plmn=plmn, tac=tac, cell_id=cell_id, freq=freq,
                         ra=RaConfig(preamble_pool_size=cfg.preamble_pool_size,
                                     occasion_period=cfg.ra_occasion_period,
                                     max_attempts=cfg.ra_max_attempts),
                         tss_announce=cfg.mode == "tss")
        self.sessions: dict[str, dict] = {}           # ue_ref -> session
        self._transactions: dict[tuple, dict] = {}    # (occasion, preamble)
        self._by_tc_rnti: dict[int, dict] = {}
        self._pending_ho: dict[str, dict] = {}        # arriving ue_ref -> prep
        self._expected_preambles: dict[int, dict] = {}
        self._rnti = itertools.count(0x4601)
        self._reserved = itertools.count(RESERVED_PREAMBLE_BASE)

    # -- broadcast ---------------------------------------------------------

    def broadcast(self, tick: int) -> list[SsbFrame]:
        tag = None
        if self.tss_cfg is not None and self.tss_cfg.enabled:
            tag = generate_tss(self.tss_cfg, self.pci, slot_index(self.tss_cfg, tick))
        return [SsbFrame(pci=self.pci, origin=self.entity_id,
                         mib=Mib(sfn=tick % 1024), sib1=self.sib1, tss_tag=tag)]

    # -- message dispatch ----------------------------------------------------

    def on_message(self, msg: WireMessage, ctx: Ctx) -> None:
        if msg.kind is MsgKind.RA_PREAMBLE:
            self._on_preamble(msg, ctx)
        elif msg.kind is MsgKind.RRC_SETUP_REQUEST:
            self._on_msg3(msg, ctx)
        elif msg.kind is MsgKind.RRC_SETUP_COMPLETE:
            self._on_setup_complete(msg, ctx)
        elif msg.kind in NAS_UPLINK_KINDS:
            self._forward_nas(msg, ctx)
        elif msg.kind is MsgKind.NAS_DOWNLINK:
            self._on_nas_downlink(msg, ctx)
        elif msg.kind is MsgKind.INITIAL_CONTEXT_SETUP:
            self._on_context_setup(msg, ctx)
        elif msg.kind is MsgKind.MEASUREMENT_REPORT:
            self._on_measurement_report(msg, ctx)
        elif msg.kind is MsgKind.HANDOVER_REQUEST:
            self._on_handover_request(msg, ctx)
        elif msg.kind is MsgKind.HANDOVER_REQUEST_ACK:
            self._on_handover_ack(msg, ctx)
        elif msg.kind is MsgKind.HANDOVER_REJECT:
            self._on_handover_reject(msg, ctx)
        elif msg.kind is MsgKind.RRC_RECONFIGURATION_COMPLETE:
            self._on_reconfiguration_complete(msg, ctx)
        elif msg.kind is MsgKind.UE_CONTEXT_RELEASE:
            self._on_context_release(msg, ctx)
        elif msg.kind is MsgKind.PAGE_COMMAND:
            self._on_page_command(msg, ctx)
        else:
            ctx.record("ignored_message", {"kind": msg.kind.value})

    # -- random access --------------------------------------------------------

    def _on_preamble(self, msg: WireMessage, ctx: Ctx) -> None:
        sender = msg.meta["via"]
        preamble = int(msg.body["preamble"])
        occasion = int(msg.body["occasion"])
        if preamble >= RESERVED_PREAMBLE_BASE:
            prep = self._expected_preambles.get(preamble)
            if prep is None:
                return
            prep["ue_ref"] = sender
            self._pending_ho[sender] = prep
            tc_rnti = next(self._rnti) & 0xFFFF
            prep["c_rnti"] = tc_rnti
            ctx.send(WireMessage(kind=MsgKind.RA_RESPONSE, src=self.entity_id,
                                 dst=sender,
                                 body={"preamble": preamble, "occasion": occasion,
                                       "tc_rnti": tc_rnti}))
            return
        key = (occasion, preamble)
        trans = self._transactions.get(key)
        if trans is None:
            trans = {"tc_rnti": next(self._rnti) & 0xFFFF, "senders": [],
                     "winner": None}
            self._transactions[key] = trans
            self._by_tc_rnti[trans["tc_rnti"]] = trans
        if sender not in trans["senders"]:
            trans["senders"].append(sender)
        ctx.send(WireMessage(kind=MsgKind.RA_RESPONSE, src=self.entity_id,
                             dst=sender,
                             body={"preamble": preamble, "occasion": occasion,
                                   "tc_rnti": trans["tc_rnti"]}))

    def _on_msg3(self, msg: WireMessage, ctx: Ctx) -> None:
        sender = msg.meta["via"]
        if self.overload:
            ctx.record("rrc_reject", {"reason": "overload"})
            ctx.send(WireMessage(kind=MsgKind.RRC_REJECT, src=self.entity_id,
                                 dst=sender, body={"reason": "overload"}))
            return
        trans = self._by_tc_rnti.get(int(msg.body["tc_rnti"]))
        if trans is None:
            return
        if trans["winner"] is None:
            trans["winner"] = {"msg3_id": msg.body["msg3_id"], "ue_ref": sender}
            self.sessions[sender] = {"c_rnti": trans["tc_rnti"], "secured": False,
                                     "as_keys": None, "nhcc": None,
                                     "amf": self.amf_id, "ho_pending": None}
            # every contender hears the resolution; losers see a foreign id
            for contender in trans["senders"]:
                ctx.send(WireMessage(kind=MsgKind.RRC_SETUP, src=self.entity_id,
                                     dst=contender,
                                     body={"msg3_id": trans["winner"]["msg3_id"],
                                           "c_rnti": trans["tc_rnti"]}))

    def _on_setup_complete(self, msg: WireMessage, ctx: Ctx) -> None:
        sender = msg.meta["via"]
        cause = msg.clear_header.get("cause")
        if cause == "page_response":
            ctx.record("page_response_received", {"ue_ref": sender})
            ctx.send(WireMessage(kind=MsgKind.RRC_RELEASE, src=self.entity_id,
                                 dst=sender, body={}))
            self.sessions.pop(sender, None)
            return
        session = self.sessions.get(sender)
        if session is None:
            return
        # previous anchor is used only when this cell actually connects to it
        prev_amf = msg.clear_header.get("prev_amf")
        amf_id = prev_amf if prev_amf in self.reachable_amfs else self.amf_id
        session["amf"] = amf_id
        ctx.send(WireMessage(kind=MsgKind.INITIAL_UE_MESSAGE, src=self.entity_id,
                             dst=amf_id, channel=Channel.NET, protected=True,
                             body={"ue_ref": sender, "gnb_id": self.entity_id,
                                   "cell_id": self.cell_id, "pci": self.pci,
                                   "freq": self.freq, "tac": self.sib1.tac,
                                   "registration": {
                                       "header": dict(msg.clear_header),
                                       "body": dict(msg.body),
                                       "protected": msg.protected}}))

    # -- NAS relay ---------------------------------------------------------------

    def _forward_nas(self, msg: WireMessage, ctx: Ctx) -> None:
        sender = msg.meta["via"]
        session = self.sessions.get(sender)
        if session is None:
            ctx.record("ignored_message", {"kind": msg.kind.value,
                                           "reason": "no_session"})
            return
        ctx.send(WireMessage(kind=MsgKind.NAS_UPLINK, src=self.entity_id,
                             dst=session["amf"], channel=Channel.NET, protected=True,
                             body={"ue_ref": sender, "inner_kind": msg.kind.value,
                                   "inner_body": dict(msg.body)}))

    def _on_nas_downlink(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        inner_kind = MsgKind(msg.body["inner_kind"])
        ctx.send(WireMessage(kind=inner_kind, src=self.entity_id, dst=ue_ref,
                             protected=bool(msg.body.get("inner_protected", False)),
                             body=dict(msg.body["inner_body"])))
        if (inner_kind is MsgKind.REGISTRATION_ACCEPT
                and self.cfg.rrc_release_after is not None):
            ctx.set_timer(self.cfg.rrc_release_after, "rrc_release",
                          {"ue_ref": ue_ref})

    def _on_context_setup(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        session = self.sessions.get(ue_ref)
        if session is None:
            return
        session["as_keys"] = kh.as_keys_for(bytes.fromhex(msg.body["k_gnb"]))
        session["nhcc"] = int(msg.body["nhcc"])
        session["secured"] = True
        ctx.record("as_security_activated",
                   {"ue_ref": ue_ref,
                    "k_gnb_digest": hashlib.sha256(
                        session["as_keys"].k_gnb).hexdigest()[:12]})

    def on_timer(self, token: str, data: dict, ctx: Ctx) -> None:
        if token == "rrc_release":
            ue_ref = data["ue_ref"]
            if ue_ref in self.sessions:
                self.sessions.pop(ue_ref)
                ctx.send(WireMessage(kind=MsgKind.RRC_RELEASE, src=self.entity_id,
                                     dst=ue_ref, body={}))
        elif token == "page_tx":
            ctx.send(WireMessage(kind=MsgKind.PAGE, src=self.entity_id,
                                 dst=data["ue_ref"],
                                 body={"paging_id": data["paging_id"],
                                       "page_seq": data["page_seq"]}))

    # -- handover decision and execution ----------------------------------------

    def _on_measurement_report(self, msg: WireMessage, ctx: Ctx) -> None:
        sender = msg.meta["via"]
        session = self.sessions.get(sender)
        if session is None or not session["secured"] or not msg.protected:
            ctx.record("ignored_message", {"kind": msg.kind.value,
                                           "reason": "unprotected_or_unknown"})
            return
        if session["ho_pending"] is not None:
            return
        target_pci = int(msg.body["target_pci"])
        if self.cfg.mode == "tss":
            raw = msg.body.get("tags", {}).get(str(target_pci))
            tag = TssTag.from_json(raw) if raw else None
            verdict = network_verify_report(self.tss_cfg, target_pci, tag, ctx.now)
            if verdict is not TagVerdict.ACCEPT:
                ctx.record("handover_rejected", {"reason": verdict.value,
                                                 "target_pci": target_pci,
                                                 "ue_ref": sender})
                return
        if target_pci not in self.ncl:
            ctx.record("handover_rejected", {"reason": "not_in_ncl",
                                             "target_pci": target_pci,
                                             "ue_ref": sender})
            return
        target_gnb = ctx.directory.gnb_by_pci.get(target_pci)
        if target_gnb is None:
            ctx.record("handover_rejected", {"reason": "unroutable",
                                             "target_pci": target_pci,
                                             "ue_ref": sender})
            return
        target_cell_id = ctx.directory.gnb_info[target_gnb]["cell_id"]
        k_star = kh.derive_k_gnb_star(session["as_keys"].k_gnb, target_cell_id,
                                      session["nhcc"])
        session["ho_pending"] = {"target_pci": target_pci,
                                 "target_gnb": target_gnb, "k_star": k_star}
        ctx.record("handover_planned", {"ue_ref": sender, "target_pci": target_pci})
        ctx.send(WireMessage(kind=MsgKind.HANDOVER_REQUEST, src=self.entity_id,
                             dst=target_gnb, channel=Channel.NET, protected=True,
                             body={"ue_ref": sender,
                                   "k_gnb_star": k_star.hex(),
                                   "nhcc_next": session["nhcc"] + 1,
                                   "amf": session["amf"],
                                   "source_gnb": self.entity_id,
                                   "target_pci": target_pci}))

    def _on_handover_request(self, msg: WireMessage, ctx: Ctx) -> None:
        if self.overload:
            ctx.send(WireMessage(kind=MsgKind.HANDOVER_REJECT, src=self.entity_id,
                                 dst=msg.body["source_gnb"], channel=Channel.NET,
                                 protected=True,
                                 body={"ue_ref": msg.body["ue_ref"],
                                       "reason": "overload"}))
            return
        reserved = next(self._reserved)
        prep = {"k_star": bytes.fromhex(msg.body["k_gnb_star"]),
                "nhcc": int(msg.body["nhcc_next"]),
                "amf": msg.body["amf"],
                "source_gnb": msg.body["source_gnb"],
                "expected_ue": msg.body["ue_ref"]}
        self._expected_preambles[reserved] = prep
        ctx.record("handover_prepared", {"ue_ref": msg.body["ue_ref"],
                                         "reserved_preamble": reserved})
        ctx.send(WireMessage(kind=MsgKind.HANDOVER_REQUEST_ACK, src=self.entity_id,
                             dst=msg.body["source_gnb"], channel=Channel.NET,
                             protected=True,
                             body={"ue_ref": msg.body["ue_ref"],
                                   "reserved_preamble": reserved}))

    def _on_handover_ack(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        session = self.sessions.get(ue_ref)
        if session is None or session["ho_pending"] is None:
            return
        pending = session["ho_pending"]
        target_info = ctx.directory.gnb_info[pending["target_gnb"]]
        ctx.record("handover_initiated", {"ue_ref": ue_ref,
                                          "target_pci": pending["target_pci"]})
        ctx.send(WireMessage(kind=MsgKind.RRC_RECONFIGURATION, src=self.entity_id,
                             dst=ue_ref, protected=True,
                             body={"target_pci": pending["target_pci"],
                                   "target_cell_id": target_info["cell_id"],
                                   "target_freq": target_info["freq"],
                                   "reserved_preamble": msg.body["reserved_preamble"]}))

    def _on_handover_reject(self, msg: WireMessage, ctx: Ctx) -> None:
        session = self.sessions.get(msg.body["ue_ref"])
        if session is not None:
            session["ho_pending"] = None
        ctx.record("handover_rejected", {"reason": "target_reject",
                                         "ue_ref": msg.body["ue_ref"]})

    def _on_reconfiguration_complete(self, msg: WireMessage, ctx: Ctx) -> None:
        sender = msg.meta["via"]
        prep = self._pending_ho.get(sender)
        if prep is None or not msg.protected:
            return
        expected = hashlib.sha256(prep["k_star"]).hexdigest()[:16]
        if msg.body.get("key_check") != expected:
            ctx.record("handover_failed", {"reason": "key_mismatch",
                                           "ue_ref": sender})
            return
        del self._pending_ho[sender]
        self.sessions[sender] = {"c_rnti": prep["c_rnti"], "secured": True,
                                 "as_keys": kh.as_keys_for(prep["k_star"]),
                                 "nhcc": prep["nhcc"], "amf": prep["amf"],
                                 "ho_pending": None}
        ctx.record("handover_complete", {"ue_ref": sender, "pci": self.pci,
                                         "key_match": True})
        ctx.send(WireMessage(kind=MsgKind.HANDOVER_COMPLETE_ACK, src=self.entity_id,
                             dst=sender, protected=True,
                             body={"key_check": expected,
                                   "c_rnti": prep["c_rnti"]}))
        ctx.send(WireMessage(kind=MsgKind.PATH_SWITCH, src=self.entity_id,
                             dst=prep["amf"], channel=Channel.NET, protected=True,
                             body={"ue_ref": sender, "gnb_id": self.entity_id,
                                   "cell_id": self.cell_id, "pci": self.pci,
                                   "freq": self.freq, "tac": self.sib1.tac}))
        ctx.send(WireMessage(kind=MsgKind.UE_CONTEXT_RELEASE, src=self.entity_id,
                             dst=prep["source_gnb"], channel=Channel.NET,
                             protected=True, body={"ue_ref": sender}))

    def _on_context_release(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        session = self.sessions.pop(ue_ref, None)
        if session is not None:
            # local chaining record advances once the handover is confirmed done
            nhcc_after = (session["nhcc"] or 0) + 1
            ctx.record("source_released", {"ue_ref": ue_ref,
                                           "nhcc_after": nhcc_after})

    def _on_page_command(self, msg: WireMessage, ctx: Ctx) -> None:
        offset = paging_offset(msg.body["paging_id"], self.cfg.drx_cycle)
        base = ctx.now + 1
        delay = (offset - base) % self.cfg.drx_cycle + (base - ctx.now)
        ctx.set_timer(delay, "page_tx",
                      {"ue_ref": msg.body["ue_ref"],
                       "paging_id": msg.body["paging_id"],
                       "page_seq": msg.body["page_seq"]})


class Amf(Entity):
    """Serving-side mobility/security anchor for a set of cells."""

    def __init__(self, entity_id: str, cfg):
        super().__init__(entity_id)
        self.cfg = cfg
        self.contexts: dict[str, dict] = {}     # supi text -> entry
        self.temp_index: dict[str, str] = {}    # paging id -> supi text
        self._pending: dict[str, dict] = {}     # ue_ref -> in-flight registration
        self._ksi_next: dict[str, int] = {}
        self._page_seq = itertools.count(1)

    # -- registration entry point ---------------------------------------------

    def on_message(self, msg: WireMessage, ctx: Ctx) -> None:
        if msg.kind is MsgKind.INITIAL_UE_MESSAGE:
            self._on_initial_ue_message(msg, ctx)
        elif msg.kind is MsgKind.AUTH_RESPONSE:
            self._on_auth_response(msg, ctx)
        elif msg.kind is MsgKind.NAS_UPLINK:
            self._on_nas_uplink(msg, ctx)
        elif msg.kind is MsgKind.AUTH_CONFIRM_ACK:
            self._on_confirm_ack(msg, ctx)
        elif msg.kind is MsgKind.UE_CONTEXT_TRANSFER_REQ:
            self._on_transfer_request(msg, ctx)
        elif msg.kind is MsgKind.UE_CONTEXT_TRANSFER_RESP:
            self._on_transfer_response(msg, ctx)
        elif msg.kind is MsgKind.PATH_SWITCH:
            self._on_path_switch(msg, ctx)
        else:
            ctx.record("ignored_message", {"kind": msg.kind.value})

    def _on_initial_ue_message(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        reg = msg.body["registration"]
        header = reg["header"]
        pending = {"ue_ref": ue_ref, "gnb_id": msg.body["gnb_id"],
                   "cell_id": msg.body["cell_id"], "pci": msg.body["pci"],
                   "freq": msg.body["freq"], "tac": msg.body["tac"],
                   "registration": reg}
        self._pending[ue_ref] = pending
        ksi = int(header.get("ksi", kh.KSI_NO_CONTEXT))
        temp_id = header.get("temp_id")
        prev_amf = header.get("prev_amf")
        if ksi != kh.KSI_NO_CONTEXT and temp_id:
            supi = self.temp_index.get(temp_id)
            if supi is not None and self.contexts[supi]["ctx"].ksi == ksi:
                ctx.record("context_reused", {"ue_ref": ue_ref})
                self._accept(ctx, ue_ref, supi, reused=True)
                return
            if (supi is None and prev_amf and prev_amf != self.entity_id
                    and prev_amf in ctx.directory.amf_ids):
                pending["awaiting_transfer"] = True
                ctx.send(WireMessage(kind=MsgKind.UE_CONTEXT_TRANSFER_REQ,
                                     src=self.entity_id, dst=prev_amf,
                                     channel=Channel.NET, protected=True,
                                     body={"ue_ref": ue_ref, "temp_id": temp_id,
                                           "ksi": ksi}))
                return
        self._start_authentication(ctx, ue_ref)

    def _start_authentication(self, ctx: Ctx, ue_ref: str) -> None:
        pending = self._pending[ue_ref]
        reg_body = pending["registration"]["body"]
        identity = ({"suci": reg_body["suci"], "suci_key_id": reg_body.get("suci_key_id", 0)}
                    if "suci" in reg_body else {"supi": reg_body["supi"]})
        pending["stage"] = "auth"
        ctx.record("authentication_started", {"ue_ref": ue_ref})
        ctx.send(WireMessage(kind=MsgKind.AUTH_REQUEST, src=self.entity_id,
                             dst=ctx.directory.home_id, channel=Channel.NET,
                             protected=True,
                             body={"ue_ref": ue_ref,
                                   "sn_name": self.cfg.sn_name, **identity}))

    def _nas_downlink(self, ctx: Ctx, pending: dict, kind: MsgKind, body: dict,
                      protected: bool) -> None:
        ctx.send(WireMessage(kind=MsgKind.NAS_DOWNLINK, src=self.entity_id,
                             dst=pending["gnb_id"], channel=Channel.NET,
                             protected=True,
                             body={"ue_ref": pending["ue_ref"],
                                   "inner_kind": kind.value,
                                   "inner_protected": protected,
                                   "inner_body": body}))

    def _on_auth_response(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        pending = self._pending.get(ue_ref)
        if pending is None:
            return
        if not msg.body.get("ok", False):
            reason = msg.body.get("reason", "home_error")
            ctx.record("auth_outcome", {"result": reason, "ue_ref": ue_ref})
            self._reject(ctx, pending, reason)
            return
        pending["rand"] = msg.body["rand"]
        pending["hxres_star"] = bytes.fromhex(msg.body["hxres_star"])
        pending["k_seaf"] = bytes.fromhex(msg.body["k_seaf"])
        self._nas_downlink(ctx, pending, MsgKind.AUTHENTICATION_REQUEST,
                           {"rand": msg.body["rand"], "autn": msg.body["autn"]},
                           protected=False)

    def _on_nas_uplink(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        inner_kind = MsgKind(msg.body["inner_kind"])
        inner = msg.body["inner_body"]
        pending = self._pending.get(ue_ref)
        if inner_kind is MsgKind.AUTHENTICATION_FAILURE:
            if pending is None or "rand" not in pending:
                ctx.record("unsolicited_auth_failure",
                           {"ue_ref": ue_ref, "reason": inner.get("reason")})
                return
            # device-side refusal, reason preserved end to end
            ctx.record("auth_outcome", {"result": inner["reason"], "ue_ref": ue_ref})
            self._pending.pop(ue_ref, None)
            return
        if pending is None:
            ctx.record("ignored_message", {"kind": inner_kind.value,
                                           "reason": "no_pending_registration"})
            return
        if inner_kind is MsgKind.AUTHENTICATION_RESPONSE:
            res_star = bytes.fromhex(inner["res_star"])
            hres = kh.hash_response(res_star, bytes.fromhex(pending["rand"]))
            if hres != pending["hxres_star"]:
                ctx.record("auth_outcome", {"result": "hres_mismatch",
                                            "ue_ref": ue_ref})
                self._reject(ctx, pending, "hres_mismatch")
                return
            ctx.record("hres_check", {"ue_ref": ue_ref, "result": "match"})
            ctx.send(WireMessage(kind=MsgKind.AUTH_CONFIRM, src=self.entity_id,
                                 dst=ctx.directory.home_id, channel=Channel.NET,
                                 protected=True,
                                 body={"ue_ref": ue_ref,
                                       "res_star": inner["res_star"]}))
        elif inner_kind is MsgKind.SECURITY_MODE_COMPLETE:
            supi = pending.get("supi")
            if supi is None:
                return
            self._accept(ctx, ue_ref, supi, reused=False)

    def _on_confirm_ack(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        pending = self._pending.get(ue_ref)
        if pending is None:
            return
        if not msg.body.get("ok", False):
            ctx.record("auth_outcome", {"result": msg.body.get("reason",
                                                               "res_star_mismatch"),
                                        "ue_ref": ue_ref})
            self._reject(ctx, pending, "res_star_mismatch")
            return
        supi_text = msg.body["supi"]
        supi = kh.Supi.parse(supi_text)
        k_amf = kh.derive_k_amf(pending["k_seaf"], supi)
        ksi = self._ksi_next.get(supi_text, 0)
        self._ksi_next[supi_text] = (ksi + 1) % kh.KSI_NO_CONTEXT
        context = kh.build_security_context(ksi=ksi, k_amf=k_amf,
                                            k_seaf=pending["k_seaf"])
        paging_id = f"{ctx.rng.getrandbits(64):016x}"
        self.contexts[supi_text] = {"ctx": context, "paging_id": paging_id,
                                    "ue_ref": ue_ref,
                                    "gnb_id": pending["gnb_id"],
                                    "cell_id": pending["cell_id"],
                                    "freq": pending["freq"],
                                    "tac": pending["tac"], "tal": [pending["tac"]]}
        self.temp_index[paging_id] = supi_text
        pending["supi"] = supi_text
        ctx.record("auth_outcome", {"result": "ok", "ue_ref": ue_ref,
                                    "supi": supi_text})
        self._nas_downlink(ctx, pending, MsgKind.SECURITY_MODE_COMMAND,
                           {"ksi": ksi}, protected=True)

    def _accept(self, ctx: Ctx, ue_ref: str, supi: str, reused: bool) -> None:
        pending = self._pending.pop(ue_ref)
        entry = self.contexts[supi]
        entry.update({"ue_ref": ue_ref, "gnb_id": pending["gnb_id"],
                      "cell_id": pending["cell_id"], "freq": pending["freq"],
                      "tac": pending["tac"]})
        if pending["tac"] not in entry["tal"]:
            entry["tal"] = sorted(set(entry["tal"]) | {pending["tac"]})
        as_root = kh.derive_k_gnb(entry["ctx"].k_amf, pending["cell_id"],
                                  pending["freq"])
        ctx.send(WireMessage(kind=MsgKind.INITIAL_CONTEXT_SETUP,
                             src=self.entity_id, dst=pending["gnb_id"],
                             channel=Channel.NET, protected=True,
                             body={"ue_ref": ue_ref,
                                   "k_gnb": as_root.k_gnb.hex(),
                                   "nhcc": entry["ctx"].nhcc}))
        self._nas_downlink(ctx, pending, MsgKind.REGISTRATION_ACCEPT,
                           {"tal": entry["tal"], "paging_id": entry["paging_id"],
                            "amf_id": self.entity_id},
                           protected=True)
        ctx.record("registration_accepted", {"ue_ref": ue_ref, "supi": supi,
                                             "reused_context": reused})

    def _reject(self, ctx: Ctx, pending: dict, reason: str) -> None:
        self._nas_downlink(ctx, pending, MsgKind.REGISTRATION_REJECT,
                           {"reason": reason}, protected=False)
        self._pending.pop(pending["ue_ref"], None)

    # -- context transfer -------------------------------------------------------

    def _on_transfer_request(self, msg: WireMessage, ctx: Ctx) -> None:
        temp_id = msg.body["temp_id"]
        supi = self.temp_index.get(temp_id)
        ok = supi is not None and self.contexts[supi]["ctx"].ksi == int(msg.body["ksi"])
        body = {"ue_ref": msg.body["ue_ref"], "ok": ok}
        if ok:
            entry = self.contexts[supi]
            body.update({"supi": supi, "context": entry["ctx"].to_json(),
                         "paging_id": entry["paging_id"]})
            ctx.record("context_transfer_out", {"supi": supi, "to": msg.src})
        ctx.send(WireMessage(kind=MsgKind.UE_CONTEXT_TRANSFER_RESP,
                             src=self.entity_id, dst=msg.src, channel=Channel.NET,
                             protected=True, body=body))

    def _on_transfer_response(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        pending = self._pending.get(ue_ref)
        if pending is None:
            return
        pending.pop("awaiting_transfer", None)
        if not msg.body.get("ok", False):
            ctx.record("context_transfer_failed", {"ue_ref": ue_ref})
            self._start_authentication(ctx, ue_ref)
            return
        supi = msg.body["supi"]
        self.contexts[supi] = {"ctx": kh.SecurityContext.from_json(msg.body["context"]),
                               "paging_id": msg.body["paging_id"],
                               "ue_ref": ue_ref, "gnb_id": pending["gnb_id"],
                               "cell_id": pending["cell_id"],
                               "freq": pending["freq"], "tac": pending["tac"],
                               "tal": [pending["tac"]]}
        self.temp_index[msg.body["paging_id"]] = supi
        ctx.record("context_transfer_in", {"supi": supi, "from": msg.src})
        self._accept(ctx, ue_ref, supi, reused=True)

    # -- mobility ---------------------------------------------------------------

    def _on_path_switch(self, msg: WireMessage, ctx: Ctx) -> None:
        ue_ref = msg.body["ue_ref"]
        for supi, entry in self.contexts.items():
            if entry["ue_ref"] == ue_ref:
                entry["ctx"].nhcc += 1
                entry.update({"gnb_id": msg.body["gnb_id"],
                              "cell_id": msg.body["cell_id"],
                              "tac": msg.body["tac"], "freq": msg.body["freq"]})
                ctx.record("path_switch", {"supi": supi,
                                           "nhcc": entry["ctx"].nhcc,
                                           "gnb_id": msg.body["gnb_id"]})
                return

    def on_stimulus(self, kind: str, params: dict, ctx: Ctx) -> None:
        if kind != "page":
            return
        ue_ref = params["ue"]
        for supi, entry in self.contexts.items():
            if entry["ue_ref"] == ue_ref:
                page_seq = f"{self.entity_id}:{next(self._page_seq)}"
                ctx.record("page_sent", {"page_seq": page_seq, "ue": ue_ref})
                for gnb_id, info in sorted(ctx.directory.gnb_info.items()):
                    if info["amf"] == self.entity_id and info["tac"] in entry["tal"]:
                        ctx.send(WireMessage(kind=MsgKind.PAGE_COMMAND,
                                             src=self.entity_id, dst=gnb_id,
                                             channel=Channel.NET, protected=True,
                                             body={"ue_ref": ue_ref,
                                                   "paging_id": entry["paging_id"],
                                                   "page_seq": page_seq}))
                return


class HomeNetwork(Entity):
    """Credential store, identity deconcealment, and challenge generation."""

    def __init__(self, entity_id: str, cfg, keypair: kh.HomeKeyPair,
                 subscribers: dict[str, dict]):
        super().__init__(entity_id)
        self.cfg = cfg
        self.keypair = keypair
        self.arpf = subscribers            # supi text -> {"k": bytes, "sqn_hn": int}
        self._pending: dict[tuple, dict] = {}

    def on_message(self, msg: WireMessage, ctx: Ctx) -> None:
        if msg.kind is MsgKind.AUTH_REQUEST:
            self._on_auth_request(msg, ctx)
        elif msg.kind is MsgKind.AUTH_CONFIRM:
            self._on_confirm(msg, ctx)
        else:
            ctx.record("ignored_message", {"kind": msg.kind.value})

    def _fail(self, ctx: Ctx, msg: WireMessage, reason: str) -> None:
        ctx.record("home_auth_failed", {"reason": reason})
        ctx.send(WireMessage(kind=MsgKind.AUTH_RESPONSE, src=self.entity_id,
                             dst=msg.src, channel=Channel.NET, protected=True,
                             body={"ue_ref": msg.body["ue_ref"], "ok": False,
                                   "reason": reason}))

    def _on_auth_request(self, msg: WireMessage, ctx: Ctx) -> None:
        if "suci" in msg.body:
            suci = kh.Suci(ciphertext=bytes.fromhex(msg.body["suci"]),
                           home_key_id=int(msg.body.get("suci_key_id", 0)))
            try:
                supi = kh.deconceal_suci(suci, self.keypair)
            except kh.DeconcealFailure:
                self._fail(ctx, msg, "deconceal_failure")
                return
        else:
            supi = kh.Supi.parse(msg.body["supi"])
        supi_text = supi.text()
        record = self.arpf.get(supi_text)
        if record is None:
            self._fail(ctx, msg, "unknown_subscriber")
            return
        try:
            next_sqn = record["sqn_hn"] + 1
            rand = ctx.rng.randbytes(kh.RAND_LEN)
            vector = kh.generate_auth_vector(record["k"], next_sqn, rand,
                                             msg.body["sn_name"])
        except kh.SqnExhausted:
            self._fail(ctx, msg, "counter_exhausted")
            return
        record["sqn_hn"] = next_sqn
        hxres_star = kh.hash_response(vector.xres_star, rand)
        k_seaf = kh.derive_k_seaf(vector.k_ausf, msg.body["sn_name"])
        self._pending[(msg.src, msg.body["ue_ref"])] = {
            "xres_star": vector.xres_star, "supi": supi_text}
        ctx.record("vector_generated", {"supi": supi_text, "sqn_hn": next_sqn})
        ctx.send(WireMessage(kind=MsgKind.AUTH_RESPONSE, src=self.entity_id,
                             dst=msg.src, channel=Channel.NET, protected=True,
                             body={"ue_ref": msg.body["ue_ref"], "ok": True,
                                   "rand": rand.hex(),
                                   "autn": vector.autn.to_json(),
                                   "hxres_star": hxres_star.hex(),
                                   "k_seaf": k_seaf.hex()}))

    def _on_confirm(self, msg: WireMessage, ctx: Ctx) -> None:
        key = (msg.src, msg.body["ue_ref"])
        pending = self._pending.pop(key, None)
        if pending is None:
            return
        res_star = bytes.fromhex(msg.body["res_star"])
        if res_star != pending["xres_star"]:
            ctx.record("home_auth_failed", {"reason": "res_star_mismatch",
                                            "supi": pending["supi"]})
            ctx.send(WireMessage(kind=MsgKind.AUTH_CONFIRM_ACK, src=self.entity_id,
                                 dst=msg.src, channel=Channel.NET, protected=True,
                                 body={"ue_ref": msg.body["ue_ref"], "ok": False,
                                       "reason": "res_star_mismatch"}))
            return
        # subscriber database learns of the success; no payload is defined for it
        ctx.record("udm_notified", {"supi": pending["supi"]})
        ctx.send(WireMessage(kind=MsgKind.AUTH_CONFIRM_ACK, src=self.entity_id,
                             dst=msg.src, channel=Channel.NET, protected=True,
                             body={"ue_ref": msg.body["ue_ref"], "ok": True,
                                   "supi": pending["supi"]}))
