"""Sync-signal authentication tags: generation, verification, soundness.

The frozen tag bytes come from tests/oracle.py.
"""

import random

import pytest

from nrsecsim.mitigation import (TagVerdict, TssConfig, TssTag, generate_tss,
                                 network_verify_report, slot_index)

CFG = TssConfig(network_secret=bytes(32), tag_bits=64, slot_length=16)

TAG_S0 = "c2c30301716d5805"   # oracle: secret=0^32, pci=101, slot=0
TAG_S1 = "f04ac0836be42407"


def test_frozen_tag_bytes():
    assert generate_tss(CFG, 101, 0).tag.hex() == TAG_S0
    assert generate_tss(CFG, 101, 1).tag.hex() == TAG_S1


def test_same_inputs_same_tag():
    assert generate_tss(CFG, 101, 5) == generate_tss(CFG, 101, 5)


def test_adjacent_slots_differ():
    for slot in range(50):
        assert generate_tss(CFG, 101, slot).tag != generate_tss(CFG, 101, slot + 1).tag


def test_cells_get_distinct_tags():
    assert generate_tss(CFG, 101, 3).tag != generate_tss(CFG, 102, 3).tag


def test_tag_width_follows_config():
    narrow = TssConfig(network_secret=bytes(32), tag_bits=16)
    assert len(generate_tss(narrow, 101, 0).tag) == 2


def test_config_bounds():
    with pytest.raises(ValueError):
        TssConfig(network_secret=bytes(32), tag_bits=8)
    with pytest.raises(ValueError):
        TssConfig(network_secret=bytes(32), tag_bits=20)
    with pytest.raises(ValueError):
        TssConfig(network_secret=bytes(32), slot_length=0)


class TestVerification:
    def test_current_slot_accepted(self):
        now = 40
        tag = generate_tss(CFG, 101, slot_index(CFG, now))
        assert network_verify_report(CFG, 101, tag, now) is TagVerdict.ACCEPT

    def test_previous_slot_accepted_grace(self):
        now = 40   # slot 2
        tag = generate_tss(CFG, 101, 1)
        assert network_verify_report(CFG, 101, tag, now) is TagVerdict.ACCEPT

    def test_older_slot_is_stale(self):
        now = 40
        tag = generate_tss(CFG, 101, 0)
        assert network_verify_report(CFG, 101, tag, now) is TagVerdict.STALE

    def test_wrong_value_rejected(self):
        now = 40
        tag = TssTag(pci=101, slot=slot_index(CFG, now), tag=bytes(8))
        assert network_verify_report(CFG, 101, tag, now) is TagVerdict.WRONG_TAG

    def test_tag_for_other_cell_rejected(self):
        now = 40
        tag = generate_tss(CFG, 102, slot_index(CFG, now))
        assert network_verify_report(CFG, 101, tag, now) is TagVerdict.WRONG_TAG

    def test_missing_tag_rejected(self):
        assert network_verify_report(CFG, 101, None, 40) is TagVerdict.MISSING

    def test_report_latency_within_one_slot_never_blocks(self):
        # tag observed at tick t, verified at t+d for any d below one slot
        for t in range(0, 200, 7):
            tag = generate_tss(CFG, 101, slot_index(CFG, t))
            for delay in range(CFG.slot_length):
                assert network_verify_report(CFG, 101, tag, t + delay) \
                    is TagVerdict.ACCEPT

    def test_replay_across_two_slots_always_stale(self):
        for t in range(0, 200, 7):
            tag = generate_tss(CFG, 101, slot_index(CFG, t))
            later = t + 2 * CFG.slot_length
            assert network_verify_report(CFG, 101, tag, later) is TagVerdict.STALE


def test_forged_tag_monte_carlo_zero_accepts():
    """10,000 uniform guesses against a 64-bit tag: none may verify."""
    rng = random.Random(0xACCE55)
    secret = rng.randbytes(32)
    cfg = TssConfig(network_secret=secret, tag_bits=64, slot_length=16)
    now = 4096
    current = slot_index(cfg, now)
    accepts = 0
    for _ in range(10_000):
        guess = TssTag(pci=101, slot=current, tag=rng.randbytes(8))
        if network_verify_report(cfg, 101, guess, now) is TagVerdict.ACCEPT:
            accepts += 1
    assert accepts == 0
