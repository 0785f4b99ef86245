"""Per-node resources: energy ledger, message buffer, encounter tracker, and the message record."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum


class Activity(str, Enum):
    SCAN = "SCAN"
    TX = "TX"
    RX = "RX"


@dataclass
class EnergyLedger:
    initial: float
    current: float
    last_recharge_s: float = 0.0
    # running totals so the ledger can be audited after a run
    drained: float = 0.0
    recharged: float = 0.0

    @classmethod
    def full(cls, initial: float) -> "EnergyLedger":
        return cls(initial=initial, current=initial)

    @property
    def depleted(self) -> bool:
        return self.current <= 0.0


def residual_energy_fraction(e: EnergyLedger) -> float:
    return e.current / e.initial


def drain_energy(e: EnergyLedger, rate_per_s: float, dt: float) -> float:
    """Drain ``rate_per_s * dt`` (floored at zero). Returns the amount actually removed."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    amount = min(e.current, rate_per_s * dt)
    e.current -= amount
    e.drained += amount
    return amount


def drain_rate(activity: Activity, scan: float, tx: float, rx: float) -> float:
    return {Activity.SCAN: scan, Activity.TX: tx, Activity.RX: rx}[activity]


def recharge(e: EnergyLedger, now_s: float, interval_s: float) -> bool:
    """Full recharge once ``interval_s`` has elapsed since the last one."""
    if now_s - e.last_recharge_s >= interval_s:
        e.recharged += e.initial - e.current
        e.current = e.initial
        e.last_recharge_s = now_s
        return True
    return False


class EncounterTracker:
    """EWMA of per-window contact counts.

    ``record_encounter`` is called once per contact start; re-detections of an
    ongoing contact must not reach it (the engine only reports contact edges).
    """

    __slots__ = ("history", "current_window", "window_started_s")

    def __init__(self, history: float = 0.0, current_window: int = 0, window_started_s: float = 0.0):
        self.history = history
        self.current_window = current_window
        self.window_started_s = window_started_s

    def record_encounter(self, count: int = 1) -> None:
        self.current_window += count

    def roll_window(self, lam: float, now_s: float | None = None) -> None:
        self.history = lam * self.current_window + (1.0 - lam) * self.history
        self.current_window = 0
        if now_s is not None:
            self.window_started_s = now_s


@dataclass
class Message:
    id: int
    src: int
    dst: int
    size_bytes: int
    created_s: float
    ttl_s: float = 300.0
    hops: int = 0
    visited_clusters: list[int] = field(default_factory=list)
    delivered_s: float | None = None
    # last known destination position, piggybacked along the path
    dst_hint: tuple[float, float] | None = None
    dst_hint_s: float = -1.0

    def expired(self, now_s: float) -> bool:
        return now_s - self.created_s > self.ttl_s + 1e-9

    def copy(self) -> "Message":
        return Message(
            self.id, self.src, self.dst, self.size_bytes, self.created_s, self.ttl_s,
            self.hops, list(self.visited_clusters), self.delivered_s, self.dst_hint, self.dst_hint_s,
        )


class MessageBuffer:
    """FIFO message store with a byte budget.

    ``count_capacity`` is the message-count form of the capacity used for the
    occupancy feature fed to the learner.
    """

    def __init__(self, capacity_bytes: float, mean_message_bytes: float = 500e3):
        self.capacity_bytes = float(capacity_bytes)
        self.used_bytes = 0
        self.slots: OrderedDict[int, Message] = OrderedDict()
        self.count_capacity = max(1, int(capacity_bytes // mean_message_bytes))
        self.rejected = 0
        self.version = 0  # bumped on every insertion
        self._next_expiry = float("inf")  # lower bound on the earliest expiry time

    def __len__(self) -> int:
        return len(self.slots)

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self.slots

    def __iter__(self):
        return iter(list(self.slots.values()))

    @property
    def occupancy(self) -> float:
        return min(1.0, len(self.slots) / self.count_capacity)

    def fits(self, size_bytes: int) -> bool:
        return self.used_bytes + size_bytes <= self.capacity_bytes

    def enqueue(self, m: Message) -> bool:
        if m.id in self.slots:
            return False
        if not self.fits(m.size_bytes):
            self.rejected += 1
            return False
        self.slots[m.id] = m
        self.used_bytes += m.size_bytes
        self.version += 1
        self._next_expiry = min(self._next_expiry, m.created_s + m.ttl_s)
        return True

    def remove(self, msg_id: int) -> Message:
        m = self.slots.pop(msg_id)
        self.used_bytes -= m.size_bytes
        return m

    def expire_ttl(self, now_s: float) -> list[Message]:
        if now_s - self._next_expiry <= 1e-9:
            return []
        gone = [m for m in self.slots.values() if m.expired(now_s)]
        for m in gone:
            self.remove(m.id)
        self._next_expiry = min((m.created_s + m.ttl_s for m in self.slots.values()), default=float("inf"))
        return gone

    def clear(self) -> list[Message]:
        gone = list(self.slots.values())
        self.slots.clear()
        self.used_bytes = 0
        self._next_expiry = float("inf")
        return gone


def enqueue_message(b: MessageBuffer, m: Message) -> bool:
    return b.enqueue(m)


def expire_ttl(b: MessageBuffer, now_s: float) -> list[Message]:
    return b.expire_ttl(now_s)
