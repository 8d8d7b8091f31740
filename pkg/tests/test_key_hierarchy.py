"""Cryptographic core: frozen oracle vectors plus behavioural properties.

Byte-level expected values below were computed with tests/oracle.py, which
reimplements every derivation independently of the package.
"""

import random

import pytest

from nrsecsim import key_hierarchy as kh

K = bytes(range(32))
RAND = bytes.fromhex("a0a1a2a3a4a5a6a7a8a9aaabacadaeaf")
SN = "testnet"
SUPI = kh.Supi(plmn="00101", msin="0123456789")

# frozen by the oracle script (K, SQN=7, RAND, "testnet")
CONCEALED_SQN = "5f36d642bbc6"
MAC = "67fe38084f18ad41"
XRES_STAR = "c35cd49acf04d77ed032075946254337"
K_AUSF = "b55cda78e78216d4c1ca97f6f7de587a66b26ddca03ce3c433072c15ba39840f"
RES = "f1732b4a3535ec7e5bfb832d23a3e73c"
CK = "6a8ebaf78c5adc755222b892b20bed38"
IK = "92860c1a01c80a4cb7e48a0046c9122f"
HASHED = "9957561e6fd0905a3e35e889d670e563"
K_SEAF = "ca070822f1cdbce0c84657b5380208836971a77f17f886a121e7de95be82f8a5"
K_AMF = "3f55ae8a29b720c196485ff0f8cae7c8192bb6d30106aa10e84386f362316e85"
K_GNB = "2bea7d9fd23afb4861cb00749178cb6b82102919d6e6d8ab1319951d4093a414"
K_STAR_0 = "d040e3f2d834d5ef845c93f248a530dc9d074488eac6b2dbdb0a134c75854058"
K_STAR_1 = "a75ed130fc1cec30a6930206149f94c44654d1b1ec87add2fa33ac23114b1f66"
NAS_CIPHER = "8c41290706661c15faf569cf0f4b57e2"
NAS_INTEGRITY = "fa45abab89f092a9ae1b0454b67547d4"
SUCI_PUBLIC = "88c1e3fe707cfbc3c7b2568f2d92f00ea4587d9e2373358b7e4fc4d5361060bd"
SUCI_CT = ("00000000000000000000000000000000"
           "e248cd1e419649d0416cda60587bbf1585a560b4c7cabb5a")


class TestAuthVectorGeneration:
    def test_frozen_bytes(self):
        av = kh.generate_auth_vector(K, 7, RAND, SN)
        assert av.autn.concealed_sqn.hex() == CONCEALED_SQN
        assert av.autn.mac.hex() == MAC
        assert av.xres_star.hex() == XRES_STAR
        assert av.k_ausf.hex() == K_AUSF

    def test_regeneration_is_bit_identical(self):
        first = kh.generate_auth_vector(K, 7, RAND, SN)
        second = kh.generate_auth_vector(K, 7, RAND, SN)
        assert first == second

    def test_round_trip_deconceals_to_same_counter(self):
        av = kh.generate_auth_vector(bytes(32), 1, bytes(16), SN)
        result = kh.verify_autn(bytes(32), 0, bytes(16), av.autn)
        assert result.outcome is kh.AuthOutcome.OK
        assert result.sqn == 1

    def test_counter_exhaustion(self):
        with pytest.raises(kh.SqnExhausted):
            kh.generate_auth_vector(K, kh.SQN_MAX, RAND, SN)

    def test_input_length_checks(self):
        with pytest.raises(ValueError):
            kh.generate_auth_vector(b"short", 1, RAND, SN)
        with pytest.raises(ValueError):
            kh.generate_auth_vector(K, 1, b"short", SN)


class TestVerify:
    def test_accepts_next_counter_with_oracle_material(self):
        av = kh.generate_auth_vector(K, 7, RAND, SN)
        result = kh.verify_autn(K, 6, RAND, av.autn)
        assert result.outcome is kh.AuthOutcome.OK
        assert result.sqn == 7
        assert result.res.hex() == RES
        assert result.ck.hex() == CK
        assert result.ik.hex() == IK

    def test_wrong_key_is_mac_failure(self):
        av = kh.generate_auth_vector(K, 7, RAND, SN)
        wrong = bytes(32)
        result = kh.verify_autn(wrong, 6, RAND, av.autn)
        assert result.outcome is kh.AuthOutcome.MAC_FAILURE

    def test_tampered_token_is_mac_failure(self):
        av = kh.generate_auth_vector(K, 7, RAND, SN)
        mac = bytearray(av.autn.mac)
        mac[0] ^= 0x01
        tampered = kh.Autn(av.autn.concealed_sqn, av.autn.amf_field, bytes(mac))
        assert kh.verify_autn(K, 6, RAND, tampered).outcome \
            is kh.AuthOutcome.MAC_FAILURE

    def test_replay_is_sync_failure(self):
        av = kh.generate_auth_vector(K, 7, RAND, SN)
        assert kh.verify_autn(K, 6, RAND, av.autn).outcome is kh.AuthOutcome.OK
        # the same token again, after the counter advanced past it
        assert kh.verify_autn(K, 7, RAND, av.autn).outcome \
            is kh.AuthOutcome.SYNC_FAILURE

    def test_counter_beyond_window_is_sync_failure(self):
        far = 10 + kh.DEFAULT_SQN_WINDOW + 1
        av = kh.generate_auth_vector(K, far, RAND, SN)
        assert kh.verify_autn(K, 10, RAND, av.autn).outcome \
            is kh.AuthOutcome.SYNC_FAILURE

    def test_outcome_trichotomy(self):
        rng = random.Random(0x7c1)
        seen = set()
        for _ in range(300):
            k = rng.randbytes(32)
            rand = rng.randbytes(16)
            sqn = rng.randrange(1, 1 << 20)
            av = kh.generate_auth_vector(k, sqn, rand, SN)
            case = rng.randrange(3)
            if case == 0:
                result = kh.verify_autn(k, sqn - 1, rand, av.autn)
                assert result.outcome is kh.AuthOutcome.OK
            elif case == 1:
                result = kh.verify_autn(rng.randbytes(32), sqn - 1, rand, av.autn)
                assert result.outcome is kh.AuthOutcome.MAC_FAILURE
            else:
                result = kh.verify_autn(k, sqn + rng.randrange(0, 5), rand, av.autn)
                assert result.outcome is kh.AuthOutcome.SYNC_FAILURE
            seen.add(result.outcome)
            if result.outcome is not kh.AuthOutcome.OK:
                assert result.res is None and result.sqn is None
        assert seen == set(kh.AuthOutcome)


class TestLockstep:
    def test_counters_advance_together_over_many_runs(self):
        start = 5
        sqn_hn = sqn_ue = start
        runs = 20
        rng = random.Random(11)
        for _ in range(runs):
            sqn_hn += 1
            av = kh.generate_auth_vector(K, sqn_hn, rng.randbytes(16), SN)
            result = kh.verify_autn(K, sqn_ue, av.rand, av.autn)
            assert result.outcome is kh.AuthOutcome.OK
            sqn_ue = result.sqn
        assert sqn_hn == sqn_ue == start + runs


class TestResponses:
    def test_res_star_symmetry(self):
        av = kh.generate_auth_vector(K, 7, RAND, SN)
        result = kh.verify_autn(K, 6, RAND, av.autn)
        assert kh.compute_res_star(result.res, result.ck, result.ik, SN) \
            == av.xres_star

    def test_res_star_binds_serving_network(self):
        av = kh.generate_auth_vector(K, 7, RAND, "netA")
        result = kh.verify_autn(K, 6, RAND, av.autn)
        assert kh.compute_res_star(result.res, result.ck, result.ik, "netB") \
            != av.xres_star

    def test_hash_response_frozen(self):
        assert kh.hash_response(bytes.fromhex(XRES_STAR), RAND).hex() == HASHED

    def test_hash_response_equality_rule(self):
        value = bytes.fromhex(XRES_STAR)
        assert kh.hash_response(value, RAND) == kh.hash_response(value, RAND)
        flipped = bytes([value[0] ^ 1]) + value[1:]
        assert kh.hash_response(flipped, RAND) != kh.hash_response(value, RAND)


class TestKeyChain:
    def test_serving_keys_frozen(self):
        k_seaf, k_amf = kh.derive_serving_keys(bytes.fromhex(K_AUSF), SN, SUPI)
        assert k_seaf.hex() == K_SEAF
        assert k_amf.hex() == K_AMF

    def test_nas_keys_frozen(self):
        cipher, integrity = kh.derive_nas_keys(bytes.fromhex(K_AMF))
        assert cipher.hex() == NAS_CIPHER
        assert integrity.hex() == NAS_INTEGRITY

    def test_subscriber_identity_separates_keys(self):
        other = kh.Supi(plmn="00101", msin="0123456780")
        _, k_amf_a = kh.derive_serving_keys(bytes.fromhex(K_AUSF), SN, SUPI)
        _, k_amf_b = kh.derive_serving_keys(bytes.fromhex(K_AUSF), SN, other)
        assert k_amf_a != k_amf_b

    def test_cell_key_frozen_and_bound_to_inputs(self):
        keys = kh.derive_k_gnb(bytes.fromhex(K_AMF), "gnb-alpha", 3500)
        assert keys.k_gnb.hex() == K_GNB
        assert kh.derive_k_gnb(bytes.fromhex(K_AMF), "gnb-beta", 3500).k_gnb \
            != keys.k_gnb
        assert kh.derive_k_gnb(bytes.fromhex(K_AMF), "gnb-alpha", 3501).k_gnb \
            != keys.k_gnb

    def test_chained_key_frozen_and_counter_sensitive(self):
        k_gnb = bytes.fromhex(K_GNB)
        assert kh.derive_k_gnb_star(k_gnb, "gnb-beta", 0).hex() == K_STAR_0
        assert kh.derive_k_gnb_star(k_gnb, "gnb-beta", 1).hex() == K_STAR_1

    def test_chain_back_and_forth_stays_fresh(self):
        # bouncing between two cells: the counter input forces fresh keys
        k = bytes.fromhex(K_GNB)
        cells = ["gnb-a", "gnb-b"]
        seen = {k}
        for nhcc in range(6):
            k = kh.derive_k_gnb_star(k, cells[nhcc % 2], nhcc)
            assert k not in seen
            seen.add(k)

    def test_sixty_four_hop_chain_all_distinct(self):
        k = bytes.fromhex(K_GNB)
        keys = [k]
        for nhcc in range(64):
            k = kh.derive_k_gnb_star(k, f"gnb-{nhcc % 3}", nhcc)
            keys.append(k)
        assert len(set(keys)) == len(keys)


class TestIdentityConcealment:
    def test_frozen_ciphertext_with_fixed_ephemeral(self):
        keypair = kh.HomeKeyPair.from_private(bytes(range(32)))
        assert keypair.public.hex() == SUCI_PUBLIC

        class ZeroRng(random.Random):
            def randbytes(self, n):
                return bytes(n)

        suci = kh.conceal_supi(SUPI, keypair.public, ZeroRng())
        assert suci.ciphertext.hex() == SUCI_CT
        assert kh.deconceal_suci(suci, keypair) == SUPI

    def test_round_trip_with_fresh_randomness(self):
        rng = random.Random(3)
        keypair = kh.HomeKeyPair.generate(rng)
        first = kh.conceal_supi(SUPI, keypair.public, rng)
        second = kh.conceal_supi(SUPI, keypair.public, rng)
        assert first.ciphertext != second.ciphertext
        assert kh.deconceal_suci(first, keypair) == SUPI
        assert kh.deconceal_suci(second, keypair) == SUPI

    def test_tampered_ciphertext_fails(self):
        rng = random.Random(4)
        keypair = kh.HomeKeyPair.generate(rng)
        suci = kh.conceal_supi(SUPI, keypair.public, rng)
        for i in range(len(suci.ciphertext)):
            corrupted = bytearray(suci.ciphertext)
            corrupted[i] ^= 0xFF
            with pytest.raises(kh.DeconcealFailure):
                kh.deconceal_suci(kh.Suci(bytes(corrupted)), keypair)

    def test_mismatched_keypair_fails(self):
        rng = random.Random(5)
        keypair = kh.HomeKeyPair.generate(rng)
        other = kh.HomeKeyPair.generate(rng)
        suci = kh.conceal_supi(SUPI, keypair.public, rng)
        with pytest.raises(kh.DeconcealFailure):
            kh.deconceal_suci(suci, other)


class TestSecurityContext:
    def test_reserved_identifier_rejected(self):
        with pytest.raises(ValueError):
            kh.build_security_context(ksi=kh.KSI_NO_CONTEXT, k_amf=bytes(32),
                                      k_seaf=bytes(32))

    def test_json_round_trip(self):
        context = kh.build_security_context(ksi=3, k_amf=bytes(range(32)),
                                            k_seaf=bytes(32), sqn=9, nhcc=2)
        assert kh.SecurityContext.from_json(context.to_json()) == context
