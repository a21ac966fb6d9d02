"""Per-station ZC state machine.

A station counts virtual slots modulo ``N`` from the end of its initial scan,
remembers which of them are taken, and transmits only in its own slot or in
the single slot it is currently trying.  The functions here mutate and return
a :class:`StationState`; the vectorised engine in :mod:`zcmac.engine` applies
exactly the same rules to all stations at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# slot_view codes
UNRESERVED = 0
RESERVED = 1   # reserved by some other station
MINE = 2

DEFAULT_RECYCLE_ROUNDS = 10


class SlotKind(enum.IntEnum):
    EMPTY = 0       # idle mini-slot
    BUSY = 1        # transmission followed by an ACK
    COLLISION = 2   # energy on the medium, no ACK


class Outcome(enum.Enum):
    SUCCESS = "success"
    COLLISION = "collision"


class ReselectionMode(str, enum.Enum):
    IMMEDIATE = "immediate"
    CYCLE_END = "cycle-end"


class Role(str, enum.Enum):
    ORDINARY = "ordinary"
    ACCESS_POINT = "access-point"


class NoEligibleSlotError(LookupError):
    pass


@dataclass(frozen=True)
class SlotObservation:
    slot_index: int
    kind: SlotKind
    own_outcome: Outcome | None = None

    def __post_init__(self):
        if self.own_outcome is Outcome.SUCCESS and self.kind is not SlotKind.BUSY:
            raise ValueError("a successful own transmission is observed as BUSY")
        if self.own_outcome is Outcome.COLLISION and self.kind is not SlotKind.COLLISION:
            raise ValueError("a collided own transmission is observed as COLLISION")


@dataclass
class StationState:
    station_id: int
    n_slots: int
    recycle_threshold: int = DEFAULT_RECYCLE_ROUNDS
    reselection_mode: ReselectionMode = ReselectionMode.IMMEDIATE
    role: Role = Role.ORDINARY
    slot_quota: int = 1
    use_anchor: bool = False
    slot_view: np.ndarray = field(default=None, repr=False)
    idle_age: np.ndarray = field(default=None, repr=False)
    owned_slots: set[int] = field(default_factory=set)
    anchor_slot: int | None = None
    scan_remaining: int = 0
    position: int = 0
    trial_slots: set[int] = field(default_factory=set)
    armed_slots: set[int] = field(default_factory=set)
    last_collided: int | None = None
    needs_pick: bool = False

    def __post_init__(self):
        if self.n_slots < 1:
            raise ValueError("n_slots must be >= 1")
        if self.recycle_threshold < 1:
            raise ValueError("recycle_threshold must be >= 1 round")
        if self.slot_quota < 1:
            raise ValueError("slot_quota must be >= 1")
        if self.role is Role.ORDINARY and (self.slot_quota != 1 or self.use_anchor):
            raise ValueError("only an access point may hold several slots or an anchor")
        self.reselection_mode = ReselectionMode(self.reselection_mode)
        if self.slot_view is None:
            self.slot_view = np.zeros(self.n_slots, dtype=np.int8)
        if self.idle_age is None:
            self.idle_age = np.zeros(self.n_slots, dtype=np.int32)

    @property
    def anchor_pending(self) -> bool:
        return self.use_anchor and self.anchor_slot is None

    @property
    def deficit(self) -> int:
        """Data slots still wanted beyond those owned or being tried."""
        return self.slot_quota - len(self.owned_slots) - len(self.trial_slots)

    @property
    def settled(self) -> bool:
        """Holds its full quota (and anchor) with nothing left to try."""
        return (self.scan_remaining == 0 and not self.anchor_pending and not self.trial_slots
                and len(self.owned_slots) == self.slot_quota)


def on_arrival(state: StationState) -> StationState:
    """Forget everything and listen for one full round before accessing."""
    state.slot_view[:] = UNRESERVED
    state.idle_age[:] = 0
    state.owned_slots.clear()
    state.anchor_slot = None
    state.trial_slots.clear()
    state.armed_slots.clear()
    state.last_collided = None
    state.needs_pick = False
    state.position = 0
    state.scan_remaining = state.n_slots
    return state


def _drop_trial(state: StationState, s: int) -> None:
    state.trial_slots.discard(s)
    state.armed_slots.discard(s)


def _release(state: StationState, s: int) -> None:
    state.owned_slots.discard(s)
    state.slot_view[s] = UNRESERVED
    state.needs_pick = True


def on_slot_observed(state: StationState, obs: SlotObservation) -> StationState:
    s = obs.slot_index
    if s != state.position:
        raise ValueError(f"observation for slot {s} but station is at {state.position}")
    view, age = state.slot_view, state.idle_age

    if obs.own_outcome is not None:
        age[s] = 0
        if s == state.anchor_slot:
            pass  # beacons are not acknowledged; the anchor is kept regardless
        elif obs.own_outcome is Outcome.SUCCESS:
            view[s] = MINE
            state.owned_slots.add(s)
            _drop_trial(state, s)
            if state.deficit > 0:
                state.needs_pick = True
        else:
            _drop_trial(state, s)
            state.last_collided = s
            _release(state, s)
    elif obs.kind is SlotKind.EMPTY:
        age[s] += 1
        if age[s] >= state.recycle_threshold and view[s] != UNRESERVED and s != state.anchor_slot:
            if view[s] == MINE:
                _release(state, s)
            view[s] = UNRESERVED
    elif obs.kind is SlotKind.BUSY:
        age[s] = 0
        if view[s] == UNRESERVED:
            view[s] = RESERVED
        if s in state.trial_slots:
            _drop_trial(state, s)
            state.needs_pick = True
    else:
        age[s] = 0
        if view[s] == RESERVED:
            view[s] = UNRESERVED

    state.position = (s + 1) % state.n_slots
    if state.position == 0:
        state.armed_slots = set(state.trial_slots)
    if state.scan_remaining:
        state.scan_remaining -= 1
        if state.scan_remaining == 0:
            state.needs_pick = True
    return state


def round_ended(state: StationState) -> bool:
    return state.position == 0


def wants_pick(state: StationState, queue_nonempty: bool, round_end: bool) -> bool:
    if state.scan_remaining:
        return False
    if state.anchor_pending:
        return True
    if not (state.needs_pick and queue_nonempty and state.deficit > 0):
        return False
    return state.reselection_mode is ReselectionMode.IMMEDIATE or round_end


def select_slot(state: StationState, rng: np.random.Generator) -> int:
    """Uniform over slots believed unreserved (and not already being tried).

    With none left, a station that has collided before falls back on its last
    colliding slot.
    """
    free = state.slot_view == UNRESERVED
    if state.trial_slots:
        free[list(state.trial_slots)] = False
    candidates = np.flatnonzero(free)
    if candidates.size:
        return int(candidates[rng.integers(candidates.size)])
    lc = state.last_collided
    if lc is not None and lc not in state.trial_slots and state.slot_view[lc] != MINE:
        return lc
    raise NoEligibleSlotError(f"station {state.station_id}: every slot is reserved")


def pick(state: StationState, rng: np.random.Generator) -> list[int]:
    """Choose the anchor if it is still missing, otherwise one trial slot per missing data slot.

    A slot drawn mid-round is first tried in the next round, so a success
    observed there in the meantime can still veto it.  Returns the chosen
    slots (empty when nothing is eligible).
    """
    if state.anchor_pending:
        try:
            s = select_slot(state, rng)
        except NoEligibleSlotError:
            return []
        state.anchor_slot = s
        state.slot_view[s] = MINE
        state.idle_age[s] = 0
        state.needs_pick = state.deficit > 0
        return [s]
    chosen = []
    for _ in range(state.deficit):
        try:
            s = select_slot(state, rng)
        except NoEligibleSlotError:
            break
        chosen.append(s)
        state.trial_slots.add(s)
        if state.position == 0:
            state.armed_slots.add(s)
    if chosen:
        state.needs_pick = False
    return chosen


def should_transmit(state: StationState, slot: int, queue_nonempty: bool) -> bool:
    if state.scan_remaining:
        return False
    if slot == state.anchor_slot:
        return True
    if not queue_nonempty:
        return False
    return state.slot_view[slot] == MINE or slot in state.armed_slots
