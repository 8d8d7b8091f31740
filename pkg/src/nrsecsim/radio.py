"""Abstracted broadcast medium.

Received powers are declared per (transmitter, receiver) link; there is no
path-loss model.  Decoding follows a capture rule: an overlay transmission
replaces the fields it names in a genuine broadcast only when it is received
at least ``capture_margin_db`` above the genuine frame.  Signal measurements
come from the sync-signal part of a frame and are therefore blind to who
actually transmitted it, which is exactly the weakness the attacker agents
exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .mitigation import TssTag

MAX_BEAMS = 64

MIB_FIELDS = ("sfn", "cell_barred", "coreset0_locator")


@dataclass(frozen=True)
class Mib:
    """Essential cell configuration broadcast in every frame."""

    sfn: int = 0
    cell_barred: bool = False
    coreset0_locator: str = "c0"

    def to_json(self) -> dict:
        return {"sfn": self.sfn, "cell_barred": self.cell_barred,
                "coreset0_locator": self.coreset0_locator}


@dataclass(frozen=True)
class RaConfig:
    """Random-access parameters advertised by a cell."""

    preamble_pool_size: int = 8
    occasion_period: int = 2   # ticks between access occasions
    max_attempts: int = 4

    def __post_init__(self) -> None:
        if self.preamble_pool_size < 1:
            raise ValueError("preamble pool must hold at least one preamble")


@dataclass(frozen=True)
class Sib1:
    """Remaining system information needed to use a cell."""

    plmn: str
    tac: int
    cell_id: str
    freq: int
    ra: RaConfig = field(default_factory=RaConfig)
    tss_announce: bool = False


@dataclass(frozen=True)
class SsbFrame:
    """One broadcast unit.

    A genuine frame carries sync signals plus ``mib``/``sib1``.  A sync-only
    replay carries ``mib=None``: it is measurable but not decodable.  An
    overlay frame carries replacement values for just the named MIB fields
    and has no sync-signal component of its own.
    """

    pci: int
    origin: str
    mib: Mib | None = None
    sib1: Sib1 | None = None
    beam_index: int = 0
    is_overlay: bool = False
    overlay_fields: frozenset[str] = frozenset()
    tss_tag: TssTag | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.pci <= 1007:
            raise ValueError(f"physical cell id out of range: {self.pci}")
        if not 0 <= self.beam_index < MAX_BEAMS:
            raise ValueError(f"beam index out of range: {self.beam_index}")
        if self.is_overlay:
            if not self.overlay_fields:
                raise ValueError("overlay frame must name the fields it changes")
            if self.mib is None:
                raise ValueError("overlay frame must carry replacement values")
            unknown = set(self.overlay_fields) - set(MIB_FIELDS)
            if unknown:
                raise ValueError(f"unknown overlay fields: {sorted(unknown)}")
        elif self.overlay_fields:
            raise ValueError("non-overlay frame must not name overlay fields")

    @property
    def has_sync(self) -> bool:
        """Overlays retransmit only changed payload bits, never sync signals."""
        return not self.is_overlay


@dataclass
class RadioEnvironment:
    """Per-link received powers plus the decode thresholds."""

    links: dict[tuple[str, str], float] = field(default_factory=dict)
    capture_margin_db: float = 3.0
    noise_floor_dbm: float = -110.0

    def __post_init__(self) -> None:
        if self.capture_margin_db <= 0:
            raise ValueError("capture margin must be positive")

    def power(self, tx: str, rx: str) -> float | None:
        return self.links.get((tx, rx))

    def audible(self, tx: str, rx: str) -> bool:
        p = self.power(tx, rx)
        return p is not None and p >= self.noise_floor_dbm

    def set_link(self, tx: str, rx: str, power_dbm: float) -> None:
        self.links[(tx, rx)] = power_dbm


@dataclass(frozen=True)
class DecodedCell:
    """What one receiver decodes for one physical cell id in one tick."""

    pci: int
    mib: Mib
    sib1: Sib1 | None
    power_dbm: float        # strongest sync-bearing frame for this pci
    dominant_origin: str    # who transmitted that strongest frame


@dataclass(frozen=True)
class CellMeasurement:
    pci: int
    power_dbm: float
    measured_at: int


def _audible_frames(env: RadioEnvironment, frames: list[SsbFrame],
                    rx: str) -> list[tuple[SsbFrame, float]]:
    out = []
    for f in frames:
        p = env.power(f.origin, rx)
        if p is not None and p >= env.noise_floor_dbm:
            out.append((f, p))
    return out


def deliver_ssb(env: RadioEnvironment, frames: list[SsbFrame],
                rx: str) -> list[DecodedCell]:
    """Decode the broadcast mix as seen by one receiver.

    Per cell id the decoded MIB is the genuine one unless an overlay for that
    cell is received at ``capture_margin_db`` or more above it, in which case
    exactly the overlay's named fields are replaced.  Frames below the noise
    floor never contribute.  Cells with no decodable frame are omitted.
    """
    audible = _audible_frames(env, frames, rx)
    by_pci: dict[int, list[tuple[SsbFrame, float]]] = {}
    for f, p in audible:
        by_pci.setdefault(f.pci, []).append((f, p))

    decoded: list[DecodedCell] = []
    for pci in sorted(by_pci):
        group = by_pci[pci]
        bases = [(f, p) for f, p in group if not f.is_overlay and f.mib is not None]
        overlays = [(f, p) for f, p in group if f.is_overlay]
        if not bases:
            continue
        base, base_p = max(bases, key=lambda fp: (fp[1], fp[0].origin))
        mib = base.mib
        if overlays:
            ov, ov_p = max(overlays, key=lambda fp: (fp[1], fp[0].origin))
            if ov_p >= base_p + env.capture_margin_db:
                mib = replace(mib, **{name: getattr(ov.mib, name)
                                      for name in sorted(ov.overlay_fields)})
        sync = [(f, p) for f, p in group if f.has_sync]
        strongest, strongest_p = max(sync, key=lambda fp: (fp[1], fp[0].origin))
        decoded.append(DecodedCell(pci=pci, mib=mib, sib1=base.sib1,
                                   power_dbm=strongest_p,
                                   dominant_origin=strongest.origin))
    return decoded


def measure_cells(env: RadioEnvironment, frames: list[SsbFrame],
                  rx: str, now: int) -> list[CellMeasurement]:
    """One measurement per audible cell id, from sync-bearing frames only.

    The reported power is the maximum over frames carrying that cell's sync
    signals; a replayed frame is indistinguishable from the real one here.
    """
    best: dict[int, float] = {}
    for f, p in _audible_frames(env, frames, rx):
        if not f.has_sync:
            continue
        if f.pci not in best or p > best[f.pci]:
            best[f.pci] = p
    return [CellMeasurement(pci=pci, power_dbm=best[pci], measured_at=now)
            for pci in sorted(best)]


def observed_tags(env: RadioEnvironment, frames: list[SsbFrame],
                  rx: str) -> dict[int, TssTag]:
    """Per cell id, the auth tag riding on the strongest tag-bearing frame."""
    best: dict[int, tuple[float, str, TssTag]] = {}
    for f, p in _audible_frames(env, frames, rx):
        if f.tss_tag is None or not f.has_sync:
            continue
        key = (p, f.origin, f.tss_tag)
        if f.pci not in best or key[:2] > best[f.pci][:2]:
            best[f.pci] = key
    return {pci: entry[2] for pci, entry in best.items()}


def dominant_origin(env: RadioEnvironment, frames: list[SsbFrame],
                    pci: int, rx: str) -> str | None:
    """Which transmitter the receiver is actually locked to for a cell id."""
    sync = [(f, p) for f, p in _audible_frames(env, frames, rx)
            if f.pci == pci and f.has_sync]
    if not sync:
        return None
    f, _ = max(sync, key=lambda fp: (fp[1], fp[0].origin))
    return f.origin


def evaluate_report_trigger(serving: CellMeasurement,
                            neighbors: list[CellMeasurement],
                            margin_db: float) -> int | None:
    """Strongest neighbor at least ``margin_db`` above serving, if any.

    The boundary is inclusive; ties between equally strong neighbors go to
    the lowest cell id.
    """
    if margin_db <= 0:
        raise ValueError("trigger margin must be positive")
    eligible = [m for m in neighbors
                if m.pci != serving.pci
                and m.power_dbm >= serving.power_dbm + margin_db]
    if not eligible:
        return None
    eligible.sort(key=lambda m: (-m.power_dbm, m.pci))
    return eligible[0].pci
