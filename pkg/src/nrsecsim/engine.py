"""Deterministic discrete-event engine.

Time is an integer tick.  Each tick runs three phases: scheduled environment
stimuli, the broadcast/radio phase (transmitters emit frames, receivers take
one radio step), then delivery of every queued message and timer due at that
tick in strict (tick, sequence) order.  All randomness comes from per-entity
substreams of one run seed, so a run is a pure function of (scenario, seed)
and adding an entity never perturbs another entity's draws.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import random
from dataclasses import dataclass, field

from .messages import Channel, MsgKind, WireMessage
from .radio import RadioEnvironment, SsbFrame, dominant_origin


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    seq: int
    entity: str
    kind: str
    cleartext: bool
    detail: dict

    def to_json(self) -> dict:
        return {"tick": self.tick, "seq": self.seq, "entity": self.entity,
                "kind": self.kind, "cleartext": self.cleartext,
                "detail": self.detail}

    def to_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def serialize_trace(trace: list[TraceRecord]) -> str:
    return "\n".join(rec.to_line() for rec in trace) + "\n"


@dataclass(order=True)
class _Event:
    time: int
    seq: int
    target: str = field(compare=False)
    msg: WireMessage | None = field(compare=False, default=None)
    token: str | None = field(compare=False, default=None)
    data: dict | None = field(compare=False, default=None)
    physical_src: str | None = field(compare=False, default=None)
    msg_id: int = field(compare=False, default=-1)


class Entity:
    """Base class for everything that lives inside a simulation run.

    Subclasses override the hooks they need.  ``hostile`` marks attacker
    agents: the engine offers them cleartext observations of over-the-air
    traffic their links allow them to hear, and never anything else.
    """

    hostile = False

    def __init__(self, entity_id: str):
        self.entity_id = entity_id

    def on_start(self, ctx: "Ctx") -> None:
        pass

    def broadcast(self, tick: int) -> list[SsbFrame]:
        return []

    def on_radio(self, frames: list[SsbFrame], ctx: "Ctx") -> None:
        pass

    def on_message(self, msg: WireMessage, ctx: "Ctx") -> None:
        pass

    def on_timer(self, token: str, data: dict, ctx: "Ctx") -> None:
        pass

    def on_stimulus(self, kind: str, params: dict, ctx: "Ctx") -> None:
        pass

    def observe_air(self, msg: WireMessage, physical_src: str, ctx: "Ctx") -> None:
        pass

    def on_run_end(self, ctx: "Ctx") -> None:
        pass


@dataclass(frozen=True)
class Directory:
    """Read-only wiring of the scenario, for legitimate entities."""

    gnb_by_pci: dict
    gnb_info: dict          # entity id -> {"pci", "cell_id", "freq", "tac", "amf"}
    amf_ids: tuple
    home_id: str
    sn_name: str


class Ctx:
    """Per-entity handle onto the engine."""

    def __init__(self, engine: "Engine", entity_id: str):
        self._engine = engine
        self.entity_id = entity_id

    @property
    def now(self) -> int:
        return self._engine.tick

    @property
    def rng(self) -> random.Random:
        return self._engine.rng_for(self.entity_id)

    @property
    def env(self) -> RadioEnvironment:
        return self._engine.env

    @property
    def frames_now(self) -> list[SsbFrame]:
        return self._engine.frames_now

    @property
    def directory(self) -> Directory:
        return self._engine.directory

    @property
    def config(self):
        return self._engine.config

    @property
    def tss_cfg(self):
        return self._engine.tss_cfg

    def send(self, msg: WireMessage, latency: int | None = None) -> None:
        self._engine.send(self.entity_id, msg, latency)

    def set_timer(self, delay: int, token: str, data: dict | None = None) -> None:
        self._engine.set_timer(self.entity_id, delay, token, data or {})

    def record(self, kind: str, detail: dict, cleartext: bool = False) -> None:
        self._engine.record(self.entity_id, kind, detail, cleartext)

    def hostile_dominates(self, pci: int) -> bool:
        """Ground-truth check: is the strongest transmitter of this cell id,
        as heard by this entity, an attacker?  Used only for trace annotation."""
        origin = dominant_origin(self._engine.env, self._engine.frames_now,
                                 pci, self.entity_id)
        return origin is not None and self._engine.is_hostile(origin)


class Engine:
    """Event loop shared by every scenario run."""

    def __init__(self, env: RadioEnvironment, config, directory: Directory,
                 seed: int, tss_cfg=None, min_latency: int = 1):
        self.env = env
        self.config = config
        self.directory = directory
        self.seed = seed
        self.tss_cfg = tss_cfg
        self.min_latency = min_latency
        self.tick = 0
        self.frames_now: list[SsbFrame] = []
        self.trace: list[TraceRecord] = []
        self.entities: dict[str, Entity] = {}
        self._queue: list[_Event] = []
        self._seq = itertools.count()
        self._msg_ids = itertools.count()
        self._rngs: dict[str, random.Random] = {}
        self._stimuli: dict[int, list[dict]] = {}

    # -- wiring -------------------------------------------------------------

    def add_entity(self, entity: Entity) -> None:
        if entity.entity_id in self.entities:
            raise ValueError(f"duplicate entity id {entity.entity_id}")
        self.entities[entity.entity_id] = entity

    def add_stimulus(self, tick: int, stimulus: dict) -> None:
        self._stimuli.setdefault(tick, []).append(stimulus)

    def ctx_for(self, entity_id: str) -> Ctx:
        return Ctx(self, entity_id)

    def rng_for(self, entity_id: str) -> random.Random:
        if entity_id not in self._rngs:
            digest = hashlib.sha256(f"{self.seed}/{entity_id}".encode()).digest()
            self._rngs[entity_id] = random.Random(int.from_bytes(digest[:8], "big"))
        return self._rngs[entity_id]

    def is_hostile(self, entity_id: str) -> bool:
        entity = self.entities.get(entity_id)
        return entity is not None and entity.hostile

    # -- trace --------------------------------------------------------------

    def record(self, entity_id: str, kind: str, detail: dict,
               cleartext: bool = False) -> None:
        self.trace.append(TraceRecord(tick=self.tick, seq=next(self._seq),
                                      entity=entity_id, kind=kind,
                                      cleartext=cleartext, detail=detail))

    # -- messaging ----------------------------------------------------------

    def send(self, sender_id: str, msg: WireMessage, latency: int | None = None) -> None:
        if latency is None:
            latency = self.config.latency
        if latency < self.min_latency:
            raise ValueError(f"latency {latency} below configured minimum")
        msg_id = next(self._msg_ids)
        detail = {
            "msg_id": msg_id,
            "kind": msg.kind.value,
            "claimed_src": msg.src,
            "to": msg.dst if msg.dst is not None else f"pci:{msg.dst_pci}",
            "channel": msg.channel.value,
            "protected": msg.protected,
            "payload": msg.trace_payload(),
        }
        # every over-the-air record exposes exactly what an eavesdropper gets
        self.record(sender_id, "wire_sent", detail,
                    cleartext=msg.channel is Channel.AIR)
        event = _Event(time=self.tick + latency, seq=next(self._seq),
                       target="", msg=msg, physical_src=sender_id, msg_id=msg_id)
        heapq.heappush(self._queue, event)

    def set_timer(self, entity_id: str, delay: int, token: str, data: dict) -> None:
        if delay < 1:
            raise ValueError("timers must fire at least one tick later")
        event = _Event(time=self.tick + delay, seq=next(self._seq),
                       target=entity_id, token=token, data=data)
        heapq.heappush(self._queue, event)

    # -- delivery -----------------------------------------------------------

    def _dispose(self, event: _Event, status: str, dst: str | None) -> None:
        self.record("engine", "wire_disposed",
                    {"msg_id": event.msg_id, "status": status,
                     "kind": event.msg.kind.value,
                     "dst": dst if dst is not None else "-"})

    def _offer_observation(self, msg: WireMessage, physical_src: str) -> None:
        if msg.channel is not Channel.AIR:
            return
        for entity_id in sorted(self.entities):
            entity = self.entities[entity_id]
            if not entity.hostile or entity_id == physical_src:
                continue
            if self.env.audible(physical_src, entity_id):
                entity.observe_air(msg, physical_src, self.ctx_for(entity_id))

    def _mirror_to_hostiles(self, msg: WireMessage) -> None:
        """Network-side mirroring hook for the man-in-the-middle variant."""
        if msg.kind is not MsgKind.HANDOVER_REQUEST:
            return
        for entity_id in sorted(self.entities):
            entity = self.entities[entity_id]
            if entity.hostile and getattr(entity, "wants_network_mirror", False):
                entity.observe_air(msg, msg.src, self.ctx_for(entity_id))

    def _deliver(self, event: _Event) -> None:
        msg = event.msg
        physical_src = event.physical_src
        if msg.channel is Channel.NET:
            self._mirror_to_hostiles(msg)
            target = self.entities.get(msg.dst)
            if target is None:
                self._dispose(event, "expired", msg.dst)
                return
            self._dispose(event, "delivered", msg.dst)
            target.on_message(msg, self.ctx_for(msg.dst))
            return

        # over the air: anyone hostile within earshot of the sender hears it
        self._offer_observation(msg, physical_src)

        if msg.dst_pci is not None:
            receiver_id = dominant_origin(self.env, self.frames_now,
                                          msg.dst_pci, physical_src)
            if receiver_id is None:
                self._dispose(event, "dropped_power", None)
                return
        else:
            receiver_id = msg.dst
        if receiver_id not in self.entities:
            self._dispose(event, "expired", receiver_id)
            return
        if not self.env.audible(physical_src, receiver_id):
            self._dispose(event, "dropped_power", receiver_id)
            return

        if msg.kind is MsgKind.PAGE and not self._page_reachable(msg, receiver_id):
            self._dispose(event, "expired", receiver_id)
            self.record("engine", "page_missed",
                        {"paging_id": msg.body.get("paging_id"), "ue": receiver_id,
                         "page_seq": msg.body.get("page_seq")})
            return

        self._dispose(event, "delivered", receiver_id)
        delivered = WireMessage(kind=msg.kind, src=msg.src, dst=msg.dst,
                                dst_pci=msg.dst_pci, channel=msg.channel,
                                protected=msg.protected,
                                clear_header=msg.clear_header, body=msg.body,
                                meta={**msg.meta, "via": physical_src})
        self.entities[receiver_id].on_message(delivered, self.ctx_for(receiver_id))

    def _page_reachable(self, msg: WireMessage, ue_id: str) -> bool:
        """A page lands only if the device is actually locked to the paging cell."""
        ue = self.entities.get(ue_id)
        mode = getattr(ue, "mode", None)
        serving_pci = getattr(ue, "serving_pci", None)
        if mode is None or serving_pci is None:
            return False
        if getattr(mode, "value", mode) not in ("camped", "connected"):
            return False
        sender_info = self.directory.gnb_info.get(msg.src)
        if sender_info is None or sender_info["pci"] != serving_pci:
            return False
        return dominant_origin(self.env, self.frames_now, serving_pci, ue_id) == msg.src

    # -- main loop ----------------------------------------------------------

    def run(self, max_ticks: int) -> list[TraceRecord]:
        ordered = sorted(self.entities)
        for entity_id in ordered:
            self.entities[entity_id].on_start(self.ctx_for(entity_id))

        receivers = [eid for eid in ordered
                     if type(self.entities[eid]).on_radio is not Entity.on_radio]

        for tick in range(max_ticks):
            self.tick = tick
            for stimulus in self._stimuli.get(tick, ()):
                self._apply_stimulus(stimulus)

            frames: list[SsbFrame] = []
            for entity_id in ordered:
                frames.extend(self.entities[entity_id].broadcast(tick))
            self.frames_now = frames
            if frames:
                self.record("radio", "ssb", {
                    "frames": [[f.origin, f.pci,
                                "overlay" if f.is_overlay
                                else ("sync" if f.mib is None else "full")]
                               for f in frames]}, cleartext=True)

            for entity_id in receivers:
                self.entities[entity_id].on_radio(frames, self.ctx_for(entity_id))

            while self._queue and self._queue[0].time == tick:
                event = heapq.heappop(self._queue)
                if event.msg is not None:
                    self._deliver(event)
                else:
                    target = self.entities.get(event.target)
                    if target is not None:
                        target.on_timer(event.token, event.data,
                                        self.ctx_for(event.target))
            if self._queue and self._queue[0].time < tick:
                raise AssertionError("event scheduled in the past")

        self.tick = max_ticks
        for entity_id in ordered:
            self.entities[entity_id].on_run_end(self.ctx_for(entity_id))
        self.record("engine", "run_end", {"ticks": max_ticks})
        return self.trace

    def _apply_stimulus(self, stimulus: dict) -> None:
        kind = stimulus["kind"]
        params = {k: v for k, v in stimulus.items() if k not in ("kind", "tick")}
        if kind == "set_link":
            self.env.set_link(params["tx"], params["rx"], float(params["power_dbm"]))
            self.record("engine", "env_change", {"kind": "set_link", **params})
            return
        self.record("engine", "stimulus", {"kind": kind, **params})
        for entity_id in sorted(self.entities):
            self.entities[entity_id].on_stimulus(kind, params,
                                                 self.ctx_for(entity_id))
