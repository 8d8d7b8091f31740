"""Broadcast medium: capture rule, measurements, trigger evaluation."""

import pytest

from nrsecsim.radio import (CellMeasurement, Mib, RadioEnvironment, Sib1,
                            SsbFrame, deliver_ssb, dominant_origin,
                            evaluate_report_trigger, measure_cells)


def env(**links):
    parsed = {tuple(key.split("__")): value for key, value in links.items()}
    return RadioEnvironment(links=parsed)


def genuine(pci=101, origin="gnb1", barred=False, sib1=None):
    return SsbFrame(pci=pci, origin=origin, mib=Mib(cell_barred=barred),
                    sib1=sib1)


def overlay(pci=101, origin="atk1", **fields):
    base = Mib(**fields)
    return SsbFrame(pci=pci, origin=origin, mib=base, is_overlay=True,
                    overlay_fields=frozenset(fields))


class TestDecode:
    def test_no_overlay_decodes_genuine(self):
        radio = env(gnb1__ue1=-80.0)
        cells = deliver_ssb(radio, [genuine()], "ue1")
        assert len(cells) == 1
        assert cells[0].mib == Mib()

    def test_overlay_at_margin_replaces_named_field_only(self):
        radio = env(gnb1__ue1=-80.0, atk1__ue1=-77.0)
        frames = [genuine(), overlay(cell_barred=True)]
        cells = deliver_ssb(radio, frames, "ue1")
        assert cells[0].mib.cell_barred is True
        assert cells[0].mib.sfn == Mib().sfn
        assert cells[0].mib.coreset0_locator == Mib().coreset0_locator

    def test_overlay_just_below_margin_is_ignored(self):
        radio = env(gnb1__ue1=-80.0, atk1__ue1=-77.1)
        cells = deliver_ssb(radio, [genuine(), overlay(cell_barred=True)], "ue1")
        assert cells[0].mib.cell_barred is False

    def test_below_noise_floor_dropped(self):
        radio = env(gnb1__ue1=-120.0)
        assert deliver_ssb(radio, [genuine()], "ue1") == []

    def test_unlinked_transmitter_inaudible(self):
        radio = env(gnb1__ue1=-80.0)
        cells = deliver_ssb(radio, [genuine(), genuine(pci=102, origin="gnb2")],
                            "ue1")
        assert [c.pci for c in cells] == [101]

    def test_sync_only_frame_not_decodable_alone(self):
        radio = env(atk1__ue1=-60.0)
        replay = SsbFrame(pci=102, origin="atk1", mib=None)
        assert deliver_ssb(radio, [replay], "ue1") == []

    def test_decode_is_deterministic(self):
        radio = env(gnb1__ue1=-80.0, atk1__ue1=-75.0)
        frames = [genuine(), overlay(cell_barred=True)]
        assert deliver_ssb(radio, frames, "ue1") == deliver_ssb(radio, frames, "ue1")

    def test_without_attacker_decode_matches_transmission(self):
        sib1 = Sib1(plmn="00101", tac=7, cell_id="gnb1", freq=3500)
        radio = env(gnb1__ue1=-80.0, gnb2__ue1=-90.0)
        frames = [genuine(sib1=sib1), genuine(pci=102, origin="gnb2")]
        cells = {c.pci: c for c in deliver_ssb(radio, frames, "ue1")}
        assert cells[101].mib == frames[0].mib
        assert cells[101].sib1 == sib1
        assert cells[102].mib == frames[1].mib


class TestMeasurement:
    def test_single_cell(self):
        radio = env(gnb1__ue1=-80.0)
        assert measure_cells(radio, [genuine()], "ue1", now=5) == [
            CellMeasurement(pci=101, power_dbm=-80.0, measured_at=5)]

    def test_replayed_sync_raises_the_measurement(self):
        radio = env(gnb1__ue1=-90.0, atk1__ue1=-60.0)
        replay = SsbFrame(pci=101, origin="atk1", mib=None)
        measurements = measure_cells(radio, [genuine(), replay], "ue1", now=0)
        assert measurements == [CellMeasurement(101, -60.0, 0)]

    def test_overlay_has_no_sync_and_is_never_measured(self):
        radio = env(atk1__ue1=-50.0, gnb1__ue1=-90.0)
        measurements = measure_cells(radio, [genuine(), overlay(cell_barred=True)],
                                     "ue1", now=0)
        assert measurements == [CellMeasurement(101, -90.0, 0)]

    def test_below_noise_floor_absent(self):
        radio = env(gnb1__ue1=-80.0, gnb2__ue1=-115.0)
        frames = [genuine(), genuine(pci=102, origin="gnb2")]
        assert [m.pci for m in measure_cells(radio, frames, "ue1", 0)] == [101]

    def test_power_never_exceeds_configured_links(self):
        radio = env(gnb1__ue1=-80.0, atk1__ue1=-60.0)
        frames = [genuine(), SsbFrame(pci=101, origin="atk1", mib=None)]
        top = max(radio.links.values())
        for m in measure_cells(radio, frames, "ue1", 0):
            assert m.power_dbm <= top

    def test_dominant_origin_follows_strongest_sync(self):
        radio = env(gnb1__ue1=-90.0, atk1__ue1=-60.0)
        frames = [genuine(), SsbFrame(pci=101, origin="atk1", mib=None)]
        assert dominant_origin(radio, frames, 101, "ue1") == "atk1"
        assert dominant_origin(radio, frames, 999, "ue1") is None


class TestReportTrigger:
    serving = CellMeasurement(pci=101, power_dbm=-80.0, measured_at=0)

    def neighbor(self, pci, power):
        return CellMeasurement(pci=pci, power_dbm=power, measured_at=0)

    def test_equal_neighbor_does_not_trigger(self):
        assert evaluate_report_trigger(self.serving,
                                       [self.neighbor(102, -80.0)], 3.0) is None

    def test_boundary_is_inclusive(self):
        assert evaluate_report_trigger(self.serving,
                                       [self.neighbor(102, -77.0)], 3.0) == 102

    def test_strongest_wins_and_ties_go_low(self):
        neighbors = [self.neighbor(105, -70.0), self.neighbor(102, -60.0),
                     self.neighbor(103, -60.0)]
        assert evaluate_report_trigger(self.serving, neighbors, 3.0) == 102

    def test_spoofed_high_power_triggers(self):
        assert evaluate_report_trigger(self.serving,
                                       [self.neighbor(102, -60.0)], 3.0) == 102

    def test_margin_must_be_positive(self):
        with pytest.raises(ValueError):
            evaluate_report_trigger(self.serving, [], 0.0)


class TestFrameInvariants:
    def test_overlay_must_name_fields(self):
        with pytest.raises(ValueError):
            SsbFrame(pci=1, origin="x", mib=Mib(), is_overlay=True)

    def test_genuine_must_not_name_fields(self):
        with pytest.raises(ValueError):
            SsbFrame(pci=1, origin="x", mib=Mib(),
                     overlay_fields=frozenset({"sfn"}))

    def test_bounds(self):
        with pytest.raises(ValueError):
            SsbFrame(pci=2000, origin="x", mib=Mib())
        with pytest.raises(ValueError):
            SsbFrame(pci=1, origin="x", mib=Mib(), beam_index=64)
