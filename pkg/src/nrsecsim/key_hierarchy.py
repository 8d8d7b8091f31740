"""Cryptographic core: subscriber authentication and the derived key chain.

Implements challenge-vector generation and verification, the key chain

    K -> (RES, CK, IK) -> K_AUSF -> K_SEAF -> K_AMF -> {NAS keys, K_gNB}
                                                        K_gNB -> K_gNB*

subscriber-identity concealment, and the sequence-number rules that provide
replay protection.

Every derivation is one keyed PRF (HMAC-SHA256) with a per-step
domain-separation label.  The message layout of a PRF call is

    label || 0x00 || len(p0) || p0 || len(p1) || p1 || ...

with each part length encoded as a 2-byte big-endian integer, and the output
truncated from the left to the documented width.  The byte layout is frozen:
the test suite cross-checks it against an independently written oracle.
"""

from __future__ import annotations

import hashlib
import hmac
import random
import struct
from dataclasses import dataclass
from enum import Enum

KEY_LEN = 32          # root and intermediate keys
SESSION_KEY_LEN = 16  # cipher/integrity session keys
RAND_LEN = 16
RES_LEN = 16
MAC_LEN = 8
SQN_LEN = 6
SQN_MAX = (1 << 48) - 1
AMF_FIELD_DEFAULT = 0x8000
KSI_NO_CONTEXT = 0b1111          # reserved: "no valid security context"
DEFAULT_SQN_WINDOW = 1 << 28     # acceptance window for the deconcealed counter

SUCI_EPH_LEN = 16
SUCI_TAG_LEN = 8


class KeyChainError(Exception):
    """Base error for the cryptographic core."""


class SqnExhausted(KeyChainError):
    """The home-network sequence counter reached its 48-bit maximum."""


class DeconcealFailure(KeyChainError):
    """Concealed identity could not be recovered (bad key pair or tampering)."""


def prf(key: bytes, label: str, *parts: bytes) -> bytes:
    """Keyed PRF with domain separation; returns the full 32-byte output."""
    msg = label.encode("ascii") + b"\x00"
    for part in parts:
        msg += struct.pack(">H", len(part)) + part
    return hmac.new(key, msg, hashlib.sha256).digest()


def sqn_to_bytes(sqn: int) -> bytes:
    if not 0 <= sqn <= SQN_MAX:
        raise ValueError(f"sequence number out of 48-bit range: {sqn}")
    return sqn.to_bytes(SQN_LEN, "big")


def sqn_from_bytes(raw: bytes) -> int:
    return int.from_bytes(raw, "big")


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Supi:
    """Permanent subscriber identity: operator network id plus subscriber digits."""

    plmn: str
    msin: str

    def text(self) -> str:
        return f"{self.plmn}-{self.msin}"

    def encode(self) -> bytes:
        return self.text().encode("ascii")

    @classmethod
    def parse(cls, text: str) -> "Supi":
        plmn, sep, msin = text.partition("-")
        if not sep or not plmn or not msin:
            raise ValueError(f"malformed subscriber identity: {text!r}")
        return cls(plmn=plmn, msin=msin)


@dataclass(frozen=True)
class Suci:
    """Concealed subscriber identity as sent over the air."""

    ciphertext: bytes
    home_key_id: int = 0


@dataclass(frozen=True)
class HomeKeyPair:
    """Asymmetric pair for identity concealment (deterministic test double).

    The public half is a one-way function of the private half; concealment
    binds an 8-byte tag to the public key so that a mismatched pair or a
    tampered ciphertext is always detected.
    """

    private: bytes
    public: bytes

    @classmethod
    def from_private(cls, private: bytes) -> "HomeKeyPair":
        return cls(private=private, public=prf(private, "suci-public"))

    @classmethod
    def generate(cls, rng: random.Random) -> "HomeKeyPair":
        return cls.from_private(rng.randbytes(KEY_LEN))


def conceal_supi(supi: Supi, home_public_key: bytes, rng: random.Random,
                 home_key_id: int = 0) -> Suci:
    """Conceal a permanent identity under the home public key.

    Fresh ephemeral randomness is drawn from ``rng``, so repeated calls on
    the same identity yield distinct ciphertexts.
    """
    plaintext = supi.encode()
    if len(plaintext) > KEY_LEN:
        raise ValueError("subscriber identity too long to conceal")
    eph = rng.randbytes(SUCI_EPH_LEN)
    mask = prf(home_public_key, "suci-mask", eph)[: len(plaintext)]
    body = _xor(plaintext, mask)
    tag = prf(home_public_key, "suci-tag", eph, body)[:SUCI_TAG_LEN]
    return Suci(ciphertext=eph + body + tag, home_key_id=home_key_id)


def deconceal_suci(suci: Suci, keypair: HomeKeyPair) -> Supi:
    """Recover the permanent identity; raises DeconcealFailure on any mismatch."""
    raw = suci.ciphertext
    if len(raw) < SUCI_EPH_LEN + SUCI_TAG_LEN + 1:
        raise DeconcealFailure("ciphertext too short")
    eph = raw[:SUCI_EPH_LEN]
    body = raw[SUCI_EPH_LEN:-SUCI_TAG_LEN]
    tag = raw[-SUCI_TAG_LEN:]
    expected = prf(keypair.public, "suci-tag", eph, body)[:SUCI_TAG_LEN]
    if not hmac.compare_digest(tag, expected):
        raise DeconcealFailure("concealment tag mismatch")
    mask = prf(keypair.public, "suci-mask", eph)[: len(body)]
    try:
        return Supi.parse(_xor(body, mask).decode("ascii"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise DeconcealFailure(f"recovered identity malformed: {exc}") from exc


# ---------------------------------------------------------------------------
# Authentication challenge
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Autn:
    """Network authentication token: concealed counter, management field, MAC."""

    concealed_sqn: bytes  # 6 bytes
    amf_field: int        # 16-bit, carried opaquely
    mac: bytes            # 8 bytes

    def to_json(self) -> dict:
        return {
            "concealed_sqn": self.concealed_sqn.hex(),
            "amf_field": self.amf_field,
            "mac": self.mac.hex(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Autn":
        return cls(
            concealed_sqn=bytes.fromhex(data["concealed_sqn"]),
            amf_field=int(data["amf_field"]),
            mac=bytes.fromhex(data["mac"]),
        )


@dataclass(frozen=True)
class AuthVector:
    """Home-network challenge: nonce, token, expected response, anchor key."""

    rand: bytes
    autn: Autn
    xres_star: bytes
    k_ausf: bytes


class AuthOutcome(Enum):
    OK = "ok"
    MAC_FAILURE = "mac_failure"
    SYNC_FAILURE = "sync_failure"


@dataclass(frozen=True)
class AuthResult:
    """Outcome of verifying a challenge token on the subscriber side.

    ``res``/``ck``/``ik``/``sqn`` are populated only when the outcome is OK;
    ``sqn`` is the deconcealed counter the caller must adopt.
    """

    outcome: AuthOutcome
    res: bytes | None = None
    ck: bytes | None = None
    ik: bytes | None = None
    sqn: int | None = None


def _challenge_material(k: bytes, rand: bytes) -> tuple[bytes, bytes, bytes, bytes]:
    """Per-challenge values derived from the root key and the nonce."""
    res = prf(k, "challenge-res", rand)[:RES_LEN]
    ck = prf(k, "cipher-key", rand)[:SESSION_KEY_LEN]
    ik = prf(k, "integrity-key", rand)[:SESSION_KEY_LEN]
    ak = prf(k, "sqn-mask", rand)[:SQN_LEN]
    return res, ck, ik, ak


def generate_auth_vector(k: bytes, sqn_hn: int, rand: bytes, sn_name: str,
                         amf_field: int = AMF_FIELD_DEFAULT) -> AuthVector:
    """Build the four-element challenge vector for one authentication run.

    ``rand`` is injected by the caller so runs are reproducible.  The value
    ``sqn_hn`` is embedded verbatim; callers advance their counter before
    generating.  Raises SqnExhausted once the counter cannot advance again.
    """
    if len(k) != KEY_LEN:
        raise ValueError("root key must be 32 bytes")
    if len(rand) != RAND_LEN:
        raise ValueError("challenge nonce must be 16 bytes")
    if sqn_hn >= SQN_MAX:
        raise SqnExhausted(f"sequence counter exhausted at {sqn_hn}")
    sqn_bytes = sqn_to_bytes(sqn_hn)
    amf_bytes = struct.pack(">H", amf_field)
    mac = prf(k, "autn-mac", sqn_bytes, rand, amf_bytes)[:MAC_LEN]
    res, ck, ik, ak = _challenge_material(k, rand)
    autn = Autn(concealed_sqn=_xor(sqn_bytes, ak), amf_field=amf_field, mac=mac)
    xres_star = compute_res_star(res, ck, ik, sn_name)
    k_ausf = derive_k_ausf(k, rand, sn_name)
    return AuthVector(rand=rand, autn=autn, xres_star=xres_star, k_ausf=k_ausf)


def verify_autn(k: bytes, sqn_ue: int, rand: bytes, autn: Autn,
                window: int = DEFAULT_SQN_WINDOW) -> AuthResult:
    """Check a received challenge token against the subscriber's root key.

    Exactly one of three outcomes:
      OK           - MAC valid and deconcealed counter inside (sqn_ue, sqn_ue+window]
      MAC_FAILURE  - token not produced under this root key
      SYNC_FAILURE - MAC valid but the counter is stale or too far ahead
    """
    res, ck, ik, ak = _challenge_material(k, rand)
    sqn_bytes = _xor(autn.concealed_sqn, ak)
    amf_bytes = struct.pack(">H", autn.amf_field)
    expected_mac = prf(k, "autn-mac", sqn_bytes, rand, amf_bytes)[:MAC_LEN]
    if not hmac.compare_digest(expected_mac, autn.mac):
        return AuthResult(outcome=AuthOutcome.MAC_FAILURE)
    sqn = sqn_from_bytes(sqn_bytes)
    if not (sqn_ue < sqn <= sqn_ue + window):
        return AuthResult(outcome=AuthOutcome.SYNC_FAILURE)
    return AuthResult(outcome=AuthOutcome.OK, res=res, ck=ck, ik=ik, sqn=sqn)


def compute_res_star(res: bytes, ck: bytes, ik: bytes, sn_name: str) -> bytes:
    """Serving-network-bound authentication response."""
    return prf(ck + ik, "res-star", sn_name.encode("ascii"), res)[:RES_LEN]


def hash_response(value: bytes, rand: bytes) -> bytes:
    """Hashed response form used by the serving network to pre-check a reply."""
    return prf(rand, "hashed-response", value)[:RES_LEN]


# ---------------------------------------------------------------------------
# Key chain
# ---------------------------------------------------------------------------

def derive_k_ausf(k: bytes, rand: bytes, sn_name: str) -> bytes:
    """Home-network anchor key, bound to the nonce and the serving network."""
    return prf(k, "anchor-home", rand, sn_name.encode("ascii"))


def derive_k_seaf(k_ausf: bytes, sn_name: str) -> bytes:
    """Serving-network anchor key."""
    return prf(k_ausf, "anchor-serving", sn_name.encode("ascii"))


def derive_k_amf(k_seaf: bytes, supi: Supi) -> bytes:
    """Mobility-function key, bound to the permanent subscriber identity."""
    return prf(k_seaf, "amf-anchor", supi.encode())


def derive_serving_keys(k_ausf: bytes, sn_name: str, supi: Supi) -> tuple[bytes, bytes]:
    """Chain from the home anchor down to the mobility-function key."""
    k_seaf = derive_k_seaf(k_ausf, sn_name)
    return k_seaf, derive_k_amf(k_seaf, supi)


def derive_nas_keys(k_amf: bytes) -> tuple[bytes, bytes]:
    """(cipher, integrity) pair protecting signalling above the radio layer."""
    cipher = prf(k_amf, "nas-cipher")[:SESSION_KEY_LEN]
    integrity = prf(k_amf, "nas-integrity")[:SESSION_KEY_LEN]
    return cipher, integrity


@dataclass(frozen=True)
class AsKeys:
    """Radio-layer key set rooted at one cell key."""

    k_gnb: bytes
    cipher_key: bytes
    integrity_key: bytes


def as_keys_for(k_gnb: bytes) -> AsKeys:
    return AsKeys(
        k_gnb=k_gnb,
        cipher_key=prf(k_gnb, "as-cipher")[:SESSION_KEY_LEN],
        integrity_key=prf(k_gnb, "as-integrity")[:SESSION_KEY_LEN],
    )


def derive_k_gnb(k_amf: bytes, gnb_id: str, freq: int) -> AsKeys:
    """Cell key bound to the base-station identity and bearer frequency."""
    k_gnb = prf(k_amf, "as-root", gnb_id.encode("ascii"), struct.pack(">I", freq))
    return as_keys_for(k_gnb)


def derive_k_gnb_star(k_gnb: bytes, target_gnb_id: str, nhcc: int) -> bytes:
    """Chained cell key for a handover target.

    The chaining counter enters the derivation, so repeated handovers through
    the same cell still yield fresh keys.
    """
    if nhcc < 0:
        raise ValueError("chaining counter must be non-negative")
    return prf(k_gnb, "as-chain", target_gnb_id.encode("ascii"),
               struct.pack(">I", nhcc))


# ---------------------------------------------------------------------------
# Security context
# ---------------------------------------------------------------------------

@dataclass
class SecurityContext:
    """Per-subscriber key set shared between subscriber and serving network.

    ``sqn`` mirrors whichever counter the holding side owns (subscriber-side
    counter on the device, home counter at the credential store); serving-side
    copies keep it at 0.  ``nhcc`` advances by exactly one per completed
    handover.
    """

    ksi: int
    k_amf: bytes
    k_seaf: bytes
    nas_cipher_key: bytes
    nas_integrity_key: bytes
    sqn: int = 0
    nhcc: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.ksi < KSI_NO_CONTEXT:
            raise ValueError(
                f"key-set identifier {self.ksi} invalid for a populated context")

    def to_json(self) -> dict:
        return {
            "ksi": self.ksi,
            "k_amf": self.k_amf.hex(),
            "k_seaf": self.k_seaf.hex(),
            "nas_cipher_key": self.nas_cipher_key.hex(),
            "nas_integrity_key": self.nas_integrity_key.hex(),
            "sqn": self.sqn,
            "nhcc": self.nhcc,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SecurityContext":
        return cls(
            ksi=int(data["ksi"]),
            k_amf=bytes.fromhex(data["k_amf"]),
            k_seaf=bytes.fromhex(data["k_seaf"]),
            nas_cipher_key=bytes.fromhex(data["nas_cipher_key"]),
            nas_integrity_key=bytes.fromhex(data["nas_integrity_key"]),
            sqn=int(data["sqn"]),
            nhcc=int(data["nhcc"]),
        )


def build_security_context(ksi: int, k_amf: bytes, k_seaf: bytes,
                           sqn: int = 0, nhcc: int = 0) -> SecurityContext:
    cipher, integrity = derive_nas_keys(k_amf)
    return SecurityContext(ksi=ksi, k_amf=k_amf, k_seaf=k_seaf,
                           nas_cipher_key=cipher, nas_integrity_key=integrity,
                           sqn=sqn, nhcc=nhcc)
