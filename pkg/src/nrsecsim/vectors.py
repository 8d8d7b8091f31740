"""Deterministic test-vector emitter for the cryptographic core.

Given a seed, emits line-delimited (inputs, outputs) records covering every
operation in the key chain.  An independently written oracle recomputes the
outputs from the inputs and compares byte for byte; the dump is also useful
as frozen regression data.
"""

from __future__ import annotations

import json
import random

from . import key_hierarchy as kh

OPS = ("generate_auth_vector", "verify_autn_ok", "verify_autn_bad_mac",
       "verify_autn_stale", "compute_res_star", "hash_response",
       "derive_serving_keys", "derive_nas_keys", "derive_k_gnb",
       "derive_k_gnb_star", "suci_roundtrip")

SN_NAMES = ("testnet", "corenet-a", "corenet-b", "roaming-x")


class _FixedEph(random.Random):
    """Hands out one predetermined ephemeral value, for reproducible records."""

    def __init__(self, eph: bytes):
        super().__init__(0)
        self._eph = eph

    def randbytes(self, n: int) -> bytes:
        assert n == len(self._eph)
        return self._eph


def _vector_record(n: int, op: str, rng: random.Random) -> dict:
    k = rng.randbytes(kh.KEY_LEN)
    rand = rng.randbytes(kh.RAND_LEN)
    sn_name = SN_NAMES[rng.randrange(len(SN_NAMES))]

    if op == "generate_auth_vector":
        sqn = rng.randrange(1, 1 << 40)
        amf_field = rng.randrange(1 << 16)
        av = kh.generate_auth_vector(k, sqn, rand, sn_name, amf_field)
        return {"n": n, "op": op,
                "inputs": {"k": k.hex(), "sqn_hn": sqn, "rand": rand.hex(),
                           "sn_name": sn_name, "amf_field": amf_field},
                "outputs": {"concealed_sqn": av.autn.concealed_sqn.hex(),
                            "mac": av.autn.mac.hex(),
                            "xres_star": av.xres_star.hex(),
                            "k_ausf": av.k_ausf.hex()}}

    if op.startswith("verify_autn"):
        sqn_ue = rng.randrange(1, 1 << 32)
        if op == "verify_autn_ok":
            embedded = sqn_ue + rng.randrange(1, 1 << 16)
        elif op == "verify_autn_stale":
            embedded = rng.randrange(1, sqn_ue + 1)   # never ahead of the device
        else:
            embedded = sqn_ue + 1
        av = kh.generate_auth_vector(k, embedded, rand, sn_name)
        autn = av.autn
        if op == "verify_autn_bad_mac":
            mac = bytearray(autn.mac)
            mac[rng.randrange(len(mac))] ^= 1 + rng.randrange(255)
            autn = kh.Autn(concealed_sqn=autn.concealed_sqn,
                           amf_field=autn.amf_field, mac=bytes(mac))
        result = kh.verify_autn(k, sqn_ue, rand, autn)
        outputs = {"outcome": result.outcome.value}
        if result.outcome is kh.AuthOutcome.OK:
            outputs.update({"res": result.res.hex(), "ck": result.ck.hex(),
                            "ik": result.ik.hex(), "sqn": result.sqn})
        return {"n": n, "op": op,
                "inputs": {"k": k.hex(), "sqn_ue": sqn_ue, "rand": rand.hex(),
                           "concealed_sqn": autn.concealed_sqn.hex(),
                           "amf_field": autn.amf_field, "mac": autn.mac.hex()},
                "outputs": outputs}

    if op == "compute_res_star":
        res = rng.randbytes(kh.RES_LEN)
        ck = rng.randbytes(kh.SESSION_KEY_LEN)
        ik = rng.randbytes(kh.SESSION_KEY_LEN)
        return {"n": n, "op": op,
                "inputs": {"res": res.hex(), "ck": ck.hex(), "ik": ik.hex(),
                           "sn_name": sn_name},
                "outputs": {"res_star": kh.compute_res_star(res, ck, ik,
                                                            sn_name).hex()}}

    if op == "hash_response":
        value = rng.randbytes(kh.RES_LEN)
        return {"n": n, "op": op,
                "inputs": {"value": value.hex(), "rand": rand.hex()},
                "outputs": {"hashed": kh.hash_response(value, rand).hex()}}

    if op == "derive_serving_keys":
        k_ausf = rng.randbytes(kh.KEY_LEN)
        supi = kh.Supi(plmn=f"{rng.randrange(10**5):05d}",
                       msin=f"{rng.randrange(10**10):010d}")
        k_seaf, k_amf = kh.derive_serving_keys(k_ausf, sn_name, supi)
        return {"n": n, "op": op,
                "inputs": {"k_ausf": k_ausf.hex(), "sn_name": sn_name,
                           "supi": supi.text()},
                "outputs": {"k_seaf": k_seaf.hex(), "k_amf": k_amf.hex()}}

    if op == "derive_nas_keys":
        k_amf = rng.randbytes(kh.KEY_LEN)
        cipher, integrity = kh.derive_nas_keys(k_amf)
        return {"n": n, "op": op, "inputs": {"k_amf": k_amf.hex()},
                "outputs": {"cipher": cipher.hex(), "integrity": integrity.hex()}}

    if op == "derive_k_gnb":
        k_amf = rng.randbytes(kh.KEY_LEN)
        gnb_id = f"gnb-{rng.randrange(10**6)}"
        freq = rng.randrange(1, 1 << 24)
        keys = kh.derive_k_gnb(k_amf, gnb_id, freq)
        return {"n": n, "op": op,
                "inputs": {"k_amf": k_amf.hex(), "gnb_id": gnb_id, "freq": freq},
                "outputs": {"k_gnb": keys.k_gnb.hex(),
                            "cipher": keys.cipher_key.hex(),
                            "integrity": keys.integrity_key.hex()}}

    if op == "derive_k_gnb_star":
        k_gnb = rng.randbytes(kh.KEY_LEN)
        target = f"gnb-{rng.randrange(10**6)}"
        nhcc = rng.randrange(0, 64)
        return {"n": n, "op": op,
                "inputs": {"k_gnb": k_gnb.hex(), "target_gnb_id": target,
                           "nhcc": nhcc},
                "outputs": {"k_gnb_star": kh.derive_k_gnb_star(k_gnb, target,
                                                               nhcc).hex()}}

    if op == "suci_roundtrip":
        keypair = kh.HomeKeyPair.from_private(rng.randbytes(kh.KEY_LEN))
        supi = kh.Supi(plmn=f"{rng.randrange(10**5):05d}",
                       msin=f"{rng.randrange(10**10):010d}")
        eph = rng.randbytes(kh.SUCI_EPH_LEN)
        suci = kh.conceal_supi(supi, keypair.public, _FixedEph(eph))
        recovered = kh.deconceal_suci(suci, keypair)
        return {"n": n, "op": op,
                "inputs": {"private": keypair.private.hex(),
                           "supi": supi.text(), "eph": eph.hex()},
                "outputs": {"public": keypair.public.hex(),
                            "ciphertext": suci.ciphertext.hex(),
                            "recovered": recovered.text()}}

    raise ValueError(f"unknown op {op}")


def generate_vectors(seed: int, count: int = 1000) -> list[dict]:
    rng = random.Random(seed)
    return [_vector_record(i, OPS[i % len(OPS)], rng) for i in range(count)]


def dump_vectors(seed: int, count: int = 1000) -> str:
    lines = [json.dumps(rec, sort_keys=True, separators=(",", ":"))
             for rec in generate_vectors(seed, count)]
    return "\n".join(lines) + "\n"
