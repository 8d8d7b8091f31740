"""Independent oracle for the cryptographic core.

Recomputes every derivation from scratch using only hmac/hashlib/struct, with
its own copies of the byte-layout rules, and never imports the package under
test.  Used to cross-check the vector dumps bit for bit and to freeze
expected values into the unit tests.

Layout being checked (kept deliberately duplicated here):
  step(key, label, parts) = HMAC-SHA256(key, label || 0x00 || join(len16(p) || p))
where len16 is a 2-byte big-endian length, outputs truncated from the left.
"""

from __future__ import annotations

import hashlib
import hmac
import struct


def step(key: bytes, label: str, *parts: bytes) -> bytes:
    message = label.encode("ascii") + b"\x00"
    for part in parts:
        message += struct.pack(">H", len(part)) + part
    return hmac.new(key, message, hashlib.sha256).digest()


def xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


# -- challenge-side recomputation --------------------------------------------

def challenge_parts(k: bytes, rand: bytes) -> dict:
    return {
        "res": step(k, "challenge-res", rand)[:16],
        "ck": step(k, "cipher-key", rand)[:16],
        "ik": step(k, "integrity-key", rand)[:16],
        "ak": step(k, "sqn-mask", rand)[:6],
    }


def auth_vector(k: bytes, sqn: int, rand: bytes, sn_name: str,
                amf_field: int = 0x8000) -> dict:
    sqn_bytes = sqn.to_bytes(6, "big")
    amf_bytes = struct.pack(">H", amf_field)
    parts = challenge_parts(k, rand)
    mac = step(k, "autn-mac", sqn_bytes, rand, amf_bytes)[:8]
    res_star = res_star_of(parts["res"], parts["ck"], parts["ik"], sn_name)
    return {
        "concealed_sqn": xor(sqn_bytes, parts["ak"]),
        "mac": mac,
        "xres_star": res_star,
        "k_ausf": step(k, "anchor-home", rand, sn_name.encode("ascii")),
    }


def verify(k: bytes, sqn_ue: int, rand: bytes, concealed_sqn: bytes,
           amf_field: int, mac: bytes, window: int = 1 << 28) -> dict:
    parts = challenge_parts(k, rand)
    sqn_bytes = xor(concealed_sqn, parts["ak"])
    expected = step(k, "autn-mac", sqn_bytes, rand,
                    struct.pack(">H", amf_field))[:8]
    if expected != mac:
        return {"outcome": "mac_failure"}
    sqn = int.from_bytes(sqn_bytes, "big")
    if not (sqn_ue < sqn <= sqn_ue + window):
        return {"outcome": "sync_failure"}
    return {"outcome": "ok", "res": parts["res"], "ck": parts["ck"],
            "ik": parts["ik"], "sqn": sqn}


def res_star_of(res: bytes, ck: bytes, ik: bytes, sn_name: str) -> bytes:
    return step(ck + ik, "res-star", sn_name.encode("ascii"), res)[:16]


def hashed_response(value: bytes, rand: bytes) -> bytes:
    return step(rand, "hashed-response", value)[:16]


# -- key chain ----------------------------------------------------------------

def serving_keys(k_ausf: bytes, sn_name: str, supi_text: str) -> tuple[bytes, bytes]:
    k_seaf = step(k_ausf, "anchor-serving", sn_name.encode("ascii"))
    k_amf = step(k_seaf, "amf-anchor", supi_text.encode("ascii"))
    return k_seaf, k_amf


def nas_keys(k_amf: bytes) -> tuple[bytes, bytes]:
    return (step(k_amf, "nas-cipher")[:16], step(k_amf, "nas-integrity")[:16])


def cell_keys(k_amf: bytes, gnb_id: str, freq: int) -> dict:
    k_gnb = step(k_amf, "as-root", gnb_id.encode("ascii"), struct.pack(">I", freq))
    return {"k_gnb": k_gnb, "cipher": step(k_gnb, "as-cipher")[:16],
            "integrity": step(k_gnb, "as-integrity")[:16]}


def chained_cell_key(k_gnb: bytes, target_gnb_id: str, nhcc: int) -> bytes:
    return step(k_gnb, "as-chain", target_gnb_id.encode("ascii"),
                struct.pack(">I", nhcc))


# -- identity concealment --------------------------------------------------------

def conceal(private: bytes, supi_text: str, eph: bytes) -> dict:
    public = step(private, "suci-public")
    plaintext = supi_text.encode("ascii")
    mask = step(public, "suci-mask", eph)[: len(plaintext)]
    body = xor(plaintext, mask)
    tag = step(public, "suci-tag", eph, body)[:8]
    return {"public": public, "ciphertext": eph + body + tag}


def deconceal(private: bytes, ciphertext: bytes) -> str | None:
    public = step(private, "suci-public")
    eph, body, tag = ciphertext[:16], ciphertext[16:-8], ciphertext[-8:]
    if step(public, "suci-tag", eph, body)[:8] != tag:
        return None
    mask = step(public, "suci-mask", eph)[: len(body)]
    return xor(body, mask).decode("ascii")


# -- sync-signal auth tags ---------------------------------------------------------

def sync_tag(secret: bytes, pci: int, slot: int, tag_bits: int = 64) -> bytes:
    return step(secret, "sync-auth-tag", struct.pack(">I", pci),
                struct.pack(">Q", slot))[: tag_bits // 8]


# -- vector-record checking ---------------------------------------------------------

def recompute_record(record: dict) -> dict:
    """Recompute the outputs of one dumped vector record from its inputs."""
    op = record["op"]
    inp = record["inputs"]

    if op == "generate_auth_vector":
        out = auth_vector(bytes.fromhex(inp["k"]), inp["sqn_hn"],
                          bytes.fromhex(inp["rand"]), inp["sn_name"],
                          inp["amf_field"])
        return {"concealed_sqn": out["concealed_sqn"].hex(),
                "mac": out["mac"].hex(),
                "xres_star": out["xres_star"].hex(),
                "k_ausf": out["k_ausf"].hex()}

    if op.startswith("verify_autn"):
        out = verify(bytes.fromhex(inp["k"]), inp["sqn_ue"],
                     bytes.fromhex(inp["rand"]),
                     bytes.fromhex(inp["concealed_sqn"]), inp["amf_field"],
                     bytes.fromhex(inp["mac"]))
        result = {"outcome": out["outcome"]}
        if out["outcome"] == "ok":
            result.update({"res": out["res"].hex(), "ck": out["ck"].hex(),
                           "ik": out["ik"].hex(), "sqn": out["sqn"]})
        return result

    if op == "compute_res_star":
        return {"res_star": res_star_of(bytes.fromhex(inp["res"]),
                                        bytes.fromhex(inp["ck"]),
                                        bytes.fromhex(inp["ik"]),
                                        inp["sn_name"]).hex()}

    if op == "hash_response":
        return {"hashed": hashed_response(bytes.fromhex(inp["value"]),
                                          bytes.fromhex(inp["rand"])).hex()}

    if op == "derive_serving_keys":
        k_seaf, k_amf = serving_keys(bytes.fromhex(inp["k_ausf"]),
                                     inp["sn_name"], inp["supi"])
        return {"k_seaf": k_seaf.hex(), "k_amf": k_amf.hex()}

    if op == "derive_nas_keys":
        cipher, integrity = nas_keys(bytes.fromhex(inp["k_amf"]))
        return {"cipher": cipher.hex(), "integrity": integrity.hex()}

    if op == "derive_k_gnb":
        out = cell_keys(bytes.fromhex(inp["k_amf"]), inp["gnb_id"], inp["freq"])
        return {k: v.hex() for k, v in out.items()}

    if op == "derive_k_gnb_star":
        return {"k_gnb_star": chained_cell_key(bytes.fromhex(inp["k_gnb"]),
                                               inp["target_gnb_id"],
                                               inp["nhcc"]).hex()}

    if op == "suci_roundtrip":
        out = conceal(bytes.fromhex(inp["private"]), inp["supi"],
                      bytes.fromhex(inp["eph"]))
        recovered = deconceal(bytes.fromhex(inp["private"]), out["ciphertext"])
        return {"public": out["public"].hex(),
                "ciphertext": out["ciphertext"].hex(),
                "recovered": recovered}

    raise ValueError(f"oracle has no rule for op {op!r}")


def count_mismatches(records: list[dict]) -> list[int]:
    """Record numbers whose dumped outputs disagree with the recomputation."""
    bad = []
    for record in records:
        if recompute_record(record) != record["outputs"]:
            bad.append(record["n"])
    return bad
