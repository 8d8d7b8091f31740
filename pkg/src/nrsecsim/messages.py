"""Wire messages: every over-the-air and network-side exchange as one tagged type.

A message carries an explicit protected/cleartext marking.  The clear header
holds the few fields that stay visible even on protected messages; the body
of a protected message shows up in traces only as a digest.  Body values are
JSON-serializable (byte strings as hex) so traces stay line-diffable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum


class Channel(str, Enum):
    AIR = "air"
    NET = "net"


class MsgKind(str, Enum):
    # random access / RRC
    RA_PREAMBLE = "ra_preamble"
    RA_RESPONSE = "ra_response"
    RRC_SETUP_REQUEST = "rrc_setup_request"
    RRC_SETUP = "rrc_setup"
    RRC_REJECT = "rrc_reject"
    RRC_SETUP_COMPLETE = "rrc_setup_complete"
    RRC_RELEASE = "rrc_release"
    # registration / authentication
    INITIAL_UE_MESSAGE = "initial_ue_message"
    AUTH_REQUEST = "auth_request"                  # serving -> home
    AUTH_RESPONSE = "auth_response"                # home -> serving
    AUTHENTICATION_REQUEST = "authentication_request"    # network -> device
    AUTHENTICATION_RESPONSE = "authentication_response"  # device -> network
    AUTHENTICATION_FAILURE = "authentication_failure"
    AUTH_CONFIRM = "auth_confirm"                  # serving -> home
    AUTH_CONFIRM_ACK = "auth_confirm_ack"
    SECURITY_MODE_COMMAND = "security_mode_command"
    SECURITY_MODE_COMPLETE = "security_mode_complete"
    REGISTRATION_ACCEPT = "registration_accept"
    REGISTRATION_REJECT = "registration_reject"
    NAS_DOWNLINK = "nas_downlink"                  # AMF -> gNB wrapper
    NAS_UPLINK = "nas_uplink"                      # gNB -> AMF wrapper
    INITIAL_CONTEXT_SETUP = "initial_context_setup"
    UE_CONTEXT_TRANSFER_REQ = "ue_context_transfer_req"
    UE_CONTEXT_TRANSFER_RESP = "ue_context_transfer_resp"
    # mobility
    MEASUREMENT_REPORT = "measurement_report"
    HANDOVER_REQUEST = "handover_request"
    HANDOVER_REQUEST_ACK = "handover_request_ack"
    HANDOVER_REJECT = "handover_reject"
    RRC_RECONFIGURATION = "rrc_reconfiguration"
    RRC_RECONFIGURATION_COMPLETE = "rrc_reconfiguration_complete"
    HANDOVER_COMPLETE_ACK = "handover_complete_ack"
    PATH_SWITCH = "path_switch"
    UE_CONTEXT_RELEASE = "ue_context_release"
    # paging
    PAGE_COMMAND = "page_command"                  # AMF -> gNB
    PAGE = "page"                                  # gNB -> device
    # opaque relay payloads emitted by the man-in-the-middle stub
    RELAY_DATA = "relay_data"


@dataclass(frozen=True)
class WireMessage:
    """One message on the air or on a network-side interface.

    ``dst`` addresses an entity directly (downlink, network side).  Uplink
    radio messages instead set ``dst_pci``: the engine hands them to whichever
    transmitter currently dominates that cell id at the sender, which is how
    an attacker capturing a cell also captures its uplink.  ``src`` is the
    *claimed* sender; nothing over the air authenticates it.
    """

    kind: MsgKind
    src: str
    dst: str | None = None
    dst_pci: int | None = None
    channel: Channel = Channel.AIR
    protected: bool = False
    clear_header: dict = field(default_factory=dict)
    body: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)   # engine-level, never serialized

    def body_digest(self) -> str:
        canonical = json.dumps(self.body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def trace_payload(self) -> dict:
        """What a trace record may show: full body when cleartext, digest otherwise."""
        if self.protected:
            return {"header": dict(self.clear_header),
                    "body_digest": self.body_digest()}
        return {"header": dict(self.clear_header), "body": dict(self.body)}
