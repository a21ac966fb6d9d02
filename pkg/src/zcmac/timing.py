"""Slot durations for 802.11b DSSS (long preamble) and the derived ZC timings.

Durations are floats in microseconds for the analytical code.  The simulators
work in integer nanoseconds so that cycle lengths add up exactly; use the
``*_ns`` helpers there.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def to_ns(us: float) -> int:
    return int(round(us * 1000.0))


@dataclass(frozen=True)
class PhyParameters:
    """802.11b constituents used to compose transmission and collision slots."""

    slot_us: float = 20.0
    sifs_us: float = 10.0
    difs_us: float = 50.0
    data_rate_mbps: float = 11.0
    phy_rate_mbps: float = 1.0
    # ACKs go out at the highest basic rate not above the data rate (2 Mb/s).
    ack_rate_mbps: float = 2.0
    preamble_bytes: int = 18
    plcp_bytes: int = 6
    ack_bytes: int = 14
    gap_us: float = 0.0

    def __post_init__(self):
        for name in ("slot_us", "sifs_us", "difs_us", "gap_us"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("data_rate_mbps", "phy_rate_mbps", "ack_rate_mbps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("preamble_bytes", "plcp_bytes", "ack_bytes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def preamble_us(self) -> float:
        return self.preamble_bytes * 8 / self.phy_rate_mbps

    @property
    def plcp_header_us(self) -> float:
        return self.plcp_bytes * 8 / self.phy_rate_mbps

    @property
    def ack_us(self) -> float:
        return self.ack_bytes * 8 / self.ack_rate_mbps

    @property
    def eifs_us(self) -> float:
        # SIFS + DIFS + a whole ACK frame at the lowest PHY rate.
        ack_frame = self.preamble_us + self.plcp_header_us + self.ack_bytes * 8 / self.phy_rate_mbps
        return self.sifs_us + self.difs_us + ack_frame

    def mpdu_us(self, mpdu_bytes: int) -> float:
        return mpdu_bytes * 8 / self.data_rate_mbps

    def success_us(self, mpdu_bytes: int) -> float:
        """Data frame, SIFS and ACK, each frame carrying its own PHY header."""
        return (2 * (self.preamble_us + self.plcp_header_us) + self.mpdu_us(mpdu_bytes)
                + self.sifs_us + self.ack_us)

    def collision_us(self, mpdu_bytes: int) -> float:
        return self.preamble_us + self.plcp_header_us + self.mpdu_us(mpdu_bytes) + self.eifs_us

    def broadcast_us(self, mpdu_bytes: int) -> float:
        # beacons are not acknowledged
        return self.preamble_us + self.plcp_header_us + self.mpdu_us(mpdu_bytes)

    def success_ns(self, mpdu_bytes: int) -> int:
        return to_ns(self.success_us(mpdu_bytes))

    def collision_ns(self, mpdu_bytes: int) -> int:
        return to_ns(self.collision_us(mpdu_bytes))

    def broadcast_ns(self, mpdu_bytes: int) -> int:
        return to_ns(self.broadcast_us(mpdu_bytes))

    def timing(self, mpdu_bytes: int = 2346) -> "TimingParameters":
        return TimingParameters.from_phy(self, mpdu_bytes)


@dataclass(frozen=True)
class TimingParameters:
    """Durations (µs) of a good slot, a collided slot, an idle mini-slot and the inter-slot gap.

    ``phy`` and ``mpdu_bytes`` are set when the values were composed from
    802.11 constituents; they are ``None`` for hand-specified timings.
    """

    t_g: float
    t_b: float
    t_v: float
    t_s: float = 0.0
    phy: PhyParameters | None = field(default=None, compare=False)
    mpdu_bytes: int | None = None

    def __post_init__(self):
        for name in ("t_g", "t_b", "t_v", "t_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.t_v < self.t_s:
            raise ValueError("t_v must be >= t_s")

    @classmethod
    def from_phy(cls, phy: PhyParameters | None = None, mpdu_bytes: int = 2346) -> "TimingParameters":
        phy = phy or PhyParameters()
        return cls(
            t_g=phy.success_us(mpdu_bytes),
            t_b=phy.collision_us(mpdu_bytes),
            t_v=phy.slot_us,
            t_s=phy.gap_us,
            phy=phy,
            mpdu_bytes=mpdu_bytes,
        )

    def as_dict(self) -> dict:
        return {"t_g": self.t_g, "t_b": self.t_b, "t_v": self.t_v, "t_s": self.t_s}


# Values quoted for 802.11b long preamble with 2346-byte frames.
QUOTED_TIMING = TimingParameters(t_g=2150.0, t_b=2266.0, t_v=20.0, t_s=0.0)
