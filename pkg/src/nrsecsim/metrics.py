"""Trace summarization.

The summary is recomputed purely from trace records, so persisting a trace
and summarizing it again always reproduces the original numbers.  Attack
outcome records are assembled here from ground-truth trace records rather
than from anything the attacker itself could see.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .engine import TraceRecord

TSS_REJECT_REASONS = ("stale", "wrong_tag", "missing")


@dataclass
class MetricsSummary:
    registrations: dict = field(default_factory=dict)
    auth_outcomes: dict = field(default_factory=dict)
    handovers: dict = field(default_factory=dict)
    paging: dict = field(default_factory=dict)
    messages: dict = field(default_factory=dict)
    attacks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"registrations": self.registrations,
                "auth_outcomes": self.auth_outcomes,
                "handovers": self.handovers,
                "paging": self.paging,
                "messages": self.messages,
                "attacks": self.attacks}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _captured_intervals(trace: list[TraceRecord], end_tick: int) -> dict[str, int]:
    """Per entity, how many ticks it spent locked to an attacker transmitter."""
    captured_since: dict[str, int] = {}
    totals: Counter = Counter()
    for rec in trace:
        captured = rec.detail.get("captured")
        if captured is None or rec.kind not in ("state", "serving_changed"):
            continue
        entity = rec.entity
        if captured and entity not in captured_since:
            captured_since[entity] = rec.tick
        elif not captured and entity in captured_since:
            totals[entity] += rec.tick - captured_since.pop(entity)
    for entity, since in captured_since.items():
        totals[entity] += end_tick - since
    return dict(totals)


def summarize(trace: list[TraceRecord]) -> MetricsSummary:
    kinds = Counter(rec.kind for rec in trace)
    end_tick = 0
    for rec in trace:
        if rec.kind == "run_end":
            end_tick = rec.detail["ticks"]

    auth = Counter(rec.detail["result"] for rec in trace if rec.kind == "auth_outcome")

    reject_reasons = Counter(rec.detail["reason"] for rec in trace
                             if rec.kind == "handover_rejected")
    handovers = {
        "planned": kinds["handover_planned"],
        "initiated": kinds["handover_initiated"],
        "completed": kinds["handover_complete"],
        "completed_ue": kinds["handover_complete_ue"],
        "failed": kinds["handover_failed"],
        "rejected": dict(sorted(reject_reasons.items())),
    }

    sent_pages = {rec.detail["page_seq"]: rec.tick for rec in trace
                  if rec.kind == "page_sent"}
    delivered_pages = {rec.detail.get("page_seq") for rec in trace
                       if rec.kind == "page_delivered"}
    missed = sorted(seq for seq in sent_pages if seq not in delivered_pages)
    paging = {
        "sent": len(sent_pages),
        "delivered": len(set(sent_pages) & delivered_pages),
        "missed": len(missed),
        "responded": kinds["page_responded"],
    }

    disposed = Counter(rec.detail["status"] for rec in trace
                       if rec.kind == "wire_disposed")
    messages = {
        "sent": kinds["wire_sent"],
        "delivered": disposed["delivered"],
        "dropped_power": disposed["dropped_power"],
        "expired": disposed["expired"],
    }

    summary = MetricsSummary(
        registrations={"attempted": kinds["registration_started"],
                       "succeeded": kinds["registration_complete"]},
        auth_outcomes=dict(sorted(auth.items())),
        handovers=handovers,
        paging=paging,
        messages=messages,
        attacks=_attack_outcomes(trace, sent_pages, delivered_pages, end_tick))
    return summary


def _attack_outcomes(trace: list[TraceRecord], sent_pages: dict,
                     delivered_pages: set, end_tick: int) -> list[dict]:
    captured = _captured_intervals(trace, end_tick)
    outcomes = []
    for rec in trace:
        if rec.kind != "attack_config":
            continue
        cfg = rec.detail
        attacker = rec.entity
        start = cfg["start_tick"]
        target = cfg["target_pci"]
        outcome = {"attacker": attacker, "mode": cfg["mode"],
                   "target_pci": target, "start_tick": start,
                   "dos_or_mim": cfg["dos_or_mim"]}
        if cfg["mode"] == "fake_bs_handover":
            outcome.update({
                "report_triggered": any(
                    r.kind == "report_triggered" and r.tick >= start
                    and r.detail["target_pci"] == target for r in trace),
                "handover_initiated": any(
                    r.kind == "handover_initiated" and r.tick >= start
                    and r.detail["target_pci"] == target for r in trace),
                "handover_completed_onto_attacker": any(
                    r.kind == "mim_established" for r in trace
                    if r.entity == attacker),
                "ue_captured_duration": sum(captured.values()),
                "pages_missed": sum(
                    1 for seq, tick in sent_pages.items()
                    if tick >= start and seq not in delivered_pages),
                "tss_rejections": sum(
                    1 for r in trace if r.kind == "handover_rejected"
                    and r.detail["reason"] in TSS_REJECT_REASONS),
            })
        elif cfg["mode"] == "ssb_spoof":
            camp_events = [
                r for r in trace
                if r.kind in ("state", "serving_changed") and r.tick >= start
                and r.detail.get("pci") == target
                and (r.detail.get("to") == "camped" or r.kind == "serving_changed")]
            outcome.update({"overlay": cfg.get("overlay", {}),
                            "victims_camped_on_target": len(camp_events)})
        elif cfg["mode"] == "sqn_linkability":
            probes = [dict(r.detail) for r in trace
                      if r.kind == "linkability_probe" and r.entity == attacker]
            outcome.update({"probes": probes,
                            "all_correct": all(p["correct"] for p in probes)
                            if probes else False})
        outcomes.append(outcome)
    return outcomes


def scan_cleartext(trace: list[TraceRecord], patterns: list[str]) -> int:
    """Count occurrences of byte patterns inside cleartext-flagged records."""
    hits = 0
    for rec in trace:
        if not rec.cleartext:
            continue
        blob = json.dumps(rec.detail, sort_keys=True)
        for pattern in patterns:
            hits += blob.count(pattern)
    return hits
