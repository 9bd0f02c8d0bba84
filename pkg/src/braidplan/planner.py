"""Best-first search over the permutation grid.

Robots are abstracted to their rank orders along two perpendicular
projection axes, so a team configuration is a pair of permutations and a
move swaps two adjacently ranked robots on one axis.  Every move induces
one crossing letter per projection axis braid.  A search node therefore
carries, besides the two permutations, the braid state of every robot
pair and triplet on both axes; a move whose letter drives any of those
braids into an entangling pattern is silently discarded, so any returned
path is entanglement-free by construction.

The two grid axes default to projection angles (pi/2, 0): the axis-1 rank
of a robot determines its x cell (descending, so that the projected
coordinate u = -x ascends with rank) and the axis-2 rank its y cell
(ascending).  Crossing signs follow the geometry convention, +1 when the
left robot is nearer the viewer: on axis 1 depth is y, so the left robot
passes in front exactly when its axis-2 rank is larger; on axis 2 depth
is x, so in front means a *smaller* axis-1 rank.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from heapq import heappush, heappop
from typing import Iterator

from .braid import (
    BraidLetter,
    BraidWord,
    PairBraidState,
    TripletBraidState,
    identity_pair,
    identity_triplet,
    pair_state,
    triplet_state_from_word,
    update_pair,
    update_triplet,
)
from .errors import InputError

__all__ = [
    "AXIS_ANGLES",
    "PermutationState",
    "SwapAction",
    "BraidTable",
    "GridNode",
    "PlanResult",
    "SearchTrace",
    "action_space",
    "braid_letter_for_action",
    "expand",
    "heuristic",
    "pair_slot",
    "triplet_slot",
    "plan",
]

# Projection angles of grid axes 1 and 2.  See the module docstring; the
# workspace theta mapping and the verifier rely on these exact values.
AXIS_ANGLES: tuple[float, float] = (math.pi / 2, 0.0)

DEFAULT_BIAS = 1.5
DEFAULT_MAX_EXPANSIONS = 2_000_000


@dataclass(frozen=True)
class PermutationState:
    """Ranks of each robot on the two grid axes; both are bijections.

    ``pi1[r - 1]`` is robot r's rank on axis 1 (ranks are 1-based).
    """

    pi1: tuple[int, ...]
    pi2: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.pi1)
        if len(self.pi2) != n:
            raise InputError("rank vectors must have equal length")
        full = set(range(1, n + 1))
        if set(self.pi1) != full or set(self.pi2) != full:
            raise InputError("each rank vector must be a permutation of 1..n")

    @property
    def n(self) -> int:
        return len(self.pi1)

    @classmethod
    def identity(cls, n: int) -> "PermutationState":
        ranks = tuple(range(1, n + 1))
        return cls(ranks, ranks)

    def ranks(self, axis: int) -> tuple[int, ...]:
        if axis == 1:
            return self.pi1
        if axis == 2:
            return self.pi2
        raise InputError(f"axis must be 1 or 2, got {axis}")


@dataclass(frozen=True)
class SwapAction:
    """Swap the adjacently ranked robots i and j on one axis.

    Robot i holds the lower of the two ranks before the swap.
    """

    axis: int
    i: int
    j: int

    def __post_init__(self) -> None:
        if self.axis not in (1, 2):
            raise InputError(f"axis must be 1 or 2, got {self.axis}")
        if self.i == self.j:
            raise InputError("a swap needs two distinct robots")


def action_space(perms: PermutationState) -> list[SwapAction]:
    """The 2(n-1) adjacent-rank swaps available from a configuration."""
    actions = []
    for axis in (1, 2):
        ranks = perms.ranks(axis)
        inv = [0] * (perms.n + 1)
        for robot0, r in enumerate(ranks):
            inv[r] = robot0 + 1
        for k in range(1, perms.n):
            actions.append(SwapAction(axis, inv[k], inv[k + 1]))
    return actions


def _swap_sign(axis: int, perms: PermutationState, i: int, j: int) -> int:
    # Depth on axis 1 ascends with the axis-2 rank; on axis 2 it descends
    # with the axis-1 rank (d1 = y, d2 = x under the theta mapping).
    if axis == 1:
        return 1 if perms.pi2[i - 1] > perms.pi2[j - 1] else -1
    return 1 if perms.pi1[i - 1] < perms.pi1[j - 1] else -1


def braid_letter_for_action(
    action: SwapAction, perms: PermutationState, subset: tuple[int, ...]
) -> BraidLetter:
    """The crossing letter an action appends to a pair or triplet braid.

    ``subset`` must contain both swapped robots; the generator index is the
    pre-swap rank of the lower robot counted within the subset.
    """
    ranks = perms.ranks(action.axis)
    ri, rj = ranks[action.i - 1], ranks[action.j - 1]
    if rj != ri + 1:
        raise InputError(f"robots {action.i},{action.j} are not rank-adjacent on axis {action.axis}")
    members = set(subset)
    if len(subset) not in (2, 3) or len(members) != len(subset):
        raise InputError("subset must be 2 or 3 distinct robot ids")
    if action.i not in members or action.j not in members:
        raise InputError("subset must contain both swapped robots")
    index = sum(1 for s in subset if ranks[s - 1] <= ri)
    return BraidLetter(index, _swap_sign(action.axis, perms, action.i, action.j))


def heuristic(perms: PermutationState, target: PermutationState, bias: float = DEFAULT_BIAS) -> float:
    """Biased half-Manhattan rank distance; admissible at bias 1."""
    total = 0
    for a, b in zip(perms.pi1, target.pi1):
        total += abs(a - b)
    for a, b in zip(perms.pi2, target.pi2):
        total += abs(a - b)
    return bias * total / 2.0


# ---------------------------------------------------------------------------
# The per-team braid table: one pair state and one triplet state per axis.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _pair_ord(n: int) -> dict[tuple[int, int], int]:
    return {p: o for o, p in enumerate(itertools.combinations(range(1, n + 1), 2))}


@lru_cache(maxsize=None)
def _trip_ord(n: int) -> dict[tuple[int, int, int], int]:
    return {t: o for o, t in enumerate(itertools.combinations(range(1, n + 1), 3))}


def pair_slot(n: int, i: int, j: int, axis: int) -> int:
    """Flat index of pair (i, j) on the given 1-based axis."""
    return (axis - 1) * len(_pair_ord(n)) + _pair_ord(n)[(i, j)]


def triplet_slot(n: int, i: int, j: int, k: int, axis: int) -> int:
    return (axis - 1) * len(_trip_ord(n)) + _trip_ord(n)[(i, j, k)]


class BraidTable:
    """Braid state of every robot pair and triplet on every tracked axis.

    Immutable; planner nodes share unchanged entries structurally.  Pairs
    and triplets are stored axis-major in combination order.
    """

    __slots__ = ("n", "axes_count", "pairs", "triplets", "_hash")

    def __init__(
        self,
        n: int,
        axes_count: int,
        pairs: tuple[PairBraidState, ...],
        triplets: tuple[TripletBraidState, ...],
    ):
        if len(pairs) != axes_count * len(_pair_ord(n)):
            raise InputError("pair tuple has the wrong length for this team size")
        if len(triplets) != axes_count * len(_trip_ord(n)):
            raise InputError("triplet tuple has the wrong length for this team size")
        self.n = n
        self.axes_count = axes_count
        self.pairs = pairs
        self.triplets = triplets
        self._hash = hash((n, axes_count, pairs, triplets))

    @classmethod
    def identity(cls, n: int, axes_count: int = 2) -> "BraidTable":
        return cls(
            n,
            axes_count,
            (identity_pair(),) * (axes_count * len(_pair_ord(n))),
            (identity_triplet(),) * (axes_count * len(_trip_ord(n))),
        )

    def pair_state(self, i: int, j: int, axis: int) -> PairBraidState:
        return self.pairs[pair_slot(self.n, i, j, axis)]

    def triplet_state(self, i: int, j: int, k: int, axis: int) -> TripletBraidState:
        return self.triplets[triplet_slot(self.n, i, j, k, axis)]

    @property
    def is_clean(self) -> bool:
        return not (
            any(p.violated for p in self.pairs) or any(t.violated for t in self.triplets)
        )

    @property
    def fingerprint(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BraidTable):
            return NotImplemented
        return (
            self.n == other.n
            and self.axes_count == other.axes_count
            and self.pairs == other.pairs
            and self.triplets == other.triplets
        )

    def __hash__(self) -> int:
        return self._hash

    def iter_pairs(self) -> Iterator[tuple[tuple[int, int], int, PairBraidState]]:
        """Yields ((i, j), axis, state) over all slots."""
        per_axis = len(_pair_ord(n := self.n))
        for (ids, o) in _pair_ord(n).items():
            for axis in range(1, self.axes_count + 1):
                yield ids, axis, self.pairs[(axis - 1) * per_axis + o]

    def iter_triplets(self) -> Iterator[tuple[tuple[int, int, int], int, TripletBraidState]]:
        per_axis = len(_trip_ord(n := self.n))
        for (ids, o) in _trip_ord(n).items():
            for axis in range(1, self.axes_count + 1):
                yield ids, axis, self.triplets[(axis - 1) * per_axis + o]

    def to_serializable(self) -> dict:
        pairs = [
            {"ids": list(ids), "axis": axis, "word": _pair_word_text(st), "violated": st.violated}
            for ids, axis, st in self.iter_pairs()
        ]
        trips = [
            {"ids": list(ids), "axis": axis, "word": st.word.to_text(), "violated": st.violated}
            for ids, axis, st in self.iter_triplets()
        ]
        return {"n": self.n, "axes": self.axes_count, "pairs": pairs, "triplets": trips}

    @classmethod
    def from_serializable(cls, data: dict) -> "BraidTable":
        n, axes_count = int(data["n"]), int(data["axes"])
        pairs = [identity_pair()] * (axes_count * len(_pair_ord(n)))
        trips = [identity_triplet()] * (axes_count * len(_trip_ord(n)))
        for entry in data["pairs"]:
            i, j = entry["ids"]
            word = BraidWord.from_text(entry["word"], 2)
            total = sum(l.sign for l in word.letters)
            pairs[pair_slot(n, i, j, entry["axis"])] = pair_state(
                total, bool(entry.get("violated", abs(total) >= 2))
            )
        for entry in data["triplets"]:
            i, j, k = entry["ids"]
            word = BraidWord.from_text(entry["word"], 3)
            trips[triplet_slot(n, i, j, k, entry["axis"])] = triplet_state_from_word(
                word, bool(entry.get("violated", False))
            )
        return cls(n, axes_count, tuple(pairs), tuple(trips))


def _pair_word_text(state: PairBraidState) -> str:
    if state.exponent_sum == 0:
        return "e"
    letter = "s1" if state.exponent_sum > 0 else "S1"
    return " ".join([letter] * abs(state.exponent_sum))


# ---------------------------------------------------------------------------
# Search nodes and expansion.
# ---------------------------------------------------------------------------

_LETTERS = {
    (1, 1): BraidLetter(1, 1),
    (1, -1): BraidLetter(1, -1),
    (2, 1): BraidLetter(2, 1),
    (2, -1): BraidLetter(2, -1),
}

# Swap-axis pair transitions by (exponent sum, crossing sign).  States with
# |sum| = 2 are violated and never stored in a live node, so three sums cover
# every reachable input.
_PAIR_STEP = {
    (s, sg): update_pair(pair_state(s), _LETTERS[(1, sg)])
    for s in (-1, 0, 1)
    for sg in (-1, 1)
}

# Fingerprint marks: every (slot, state) pair maps to a 64-bit mark and a
# node's fingerprint is the XOR over its table, updated incrementally when a
# slot changes.  Marks depend on state *value* hashes, never identity, so
# equal tables always collide into the same hash bucket; unequal tables that
# collide anyway are separated by full equality checks.
_MARK_MASK = (1 << 64) - 1


@lru_cache(maxsize=None)
def _slot_salts(kind: int, count: int) -> tuple[int, ...]:
    rng = random.Random(0x51AB ^ kind)
    return tuple(rng.getrandbits(64) | 1 for _ in range(count))


# ---------------------------------------------------------------------------
# Pair-automaton lower bound used by the search.
#
# Each swap action changes the relative order of exactly one robot pair,
# and the sign of a pair's crossing depends only on that pair's own
# relative orders: an axis-1 crossing appends sign -o1*o2 and flips o1,
# an axis-2 crossing appends +o1*o2 and flips o2 (o_k = +1 when the
# lower-id robot ranks first on axis k).  With prefix sums capped at
# |s| <= 1, each pair therefore walks a 36-state automaton independently
# of the rest of the team, and the sum of per-pair shortest automaton
# walks is an admissible, consistent lower bound on remaining actions.
# Unlike the rank-Manhattan bound it sees the braid constraints, which
# keeps the search from flooding plateaus that carried-over cable states
# have made expensive, and an unreachable pair target (_INF) proves the
# whole query infeasible.
# ---------------------------------------------------------------------------

_INF = 1 << 30


def _build_pair_automaton() -> dict[tuple[int, int, int, int, int, int], int]:
    states = [
        (o1, o2, s1, s2)
        for o1 in (-1, 1)
        for o2 in (-1, 1)
        for s1 in (-1, 0, 1)
        for s2 in (-1, 0, 1)
    ]

    def moves(st: tuple[int, int, int, int]) -> list[tuple[int, int, int, int]]:
        o1, o2, s1, s2 = st
        out = []
        sg = -o1 * o2
        if abs(s1 + sg) <= 1:
            out.append((-o1, o2, s1 + sg, s2))
        sg = o1 * o2
        if abs(s2 + sg) <= 1:
            out.append((o1, -o2, s1, s2 + sg))
        return out

    dist: dict[tuple[int, int, int, int, int, int], int] = {}
    for src in states:
        seen = {src: 0}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for nxt in moves(cur):
                if nxt not in seen:
                    seen[nxt] = seen[cur] + 1
                    queue.append(nxt)
        for t1 in (-1, 1):
            for t2 in (-1, 1):
                dist[src + (t1, t2)] = min(
                    (d for st, d in seen.items() if st[0] == t1 and st[1] == t2),
                    default=_INF,
                )
    return dist


_PAIR_DIST = _build_pair_automaton()


class GridNode:
    """One search node: a configuration with its accumulated braid state.

    ``hsum`` is the pair-automaton lower bound on remaining actions (see
    ``_build_pair_automaton``), maintained incrementally: each action
    changes exactly one pair's term.  Nodes are their own closed-list keys:
    they hash to a precomputed fingerprint of the permutations and braid
    table, and equality compares the full tuples, so fingerprint collisions
    can never merge distinct states.
    """

    __slots__ = (
        "pi1", "pi2", "pairs", "trips", "fp", "g", "hsum",
        "parent", "action", "seq", "_kh",
    )

    def __init__(self, pi1, pi2, pairs, trips, fp, g, hsum, parent, action):
        self.pi1 = pi1
        self.pi2 = pi2
        self.pairs = pairs
        self.trips = trips
        self.fp = fp
        self.g = g
        self.hsum = hsum
        self.parent = parent
        self.action = action
        self.seq = 0
        self._kh = hash((pi1, pi2, fp))

    def __hash__(self) -> int:
        return self._kh

    def __eq__(self, other: object) -> bool:
        if type(other) is not GridNode:
            return NotImplemented
        return (
            self.pi1 == other.pi1
            and self.pi2 == other.pi2
            and self.pairs == other.pairs
            and self.trips == other.trips
        )

    @property
    def perms(self) -> PermutationState:
        return PermutationState(self.pi1, self.pi2)

    @property
    def braids(self) -> BraidTable:
        return BraidTable(len(self.pi1), 2, self.pairs, self.trips)

    @classmethod
    def root(
        cls,
        perms: PermutationState,
        braids: BraidTable,
        target: PermutationState,
        check_braids: bool = True,
    ) -> "GridNode":
        if braids.n != perms.n or braids.axes_count != 2:
            raise InputError("braid table does not match the team or the two grid axes")
        if not braids.is_clean:
            raise InputError("initial braid table already holds a violated state")
        psalts = _slot_salts(0, len(braids.pairs))
        tsalts = _slot_salts(1, len(braids.triplets))
        fp = 0
        for slot, st in enumerate(braids.pairs):
            fp ^= (psalts[slot] * (hash(st) | 1)) & _MARK_MASK
        for slot, st in enumerate(braids.triplets):
            fp ^= (tsalts[slot] * (st._hash | 1)) & _MARK_MASK
        n = perms.n
        pord = _pair_ord(n)
        n_pairs = len(pord)
        hsum = 0
        for (a, b), o in pord.items():
            o1 = 1 if perms.pi1[a - 1] < perms.pi1[b - 1] else -1
            o2 = 1 if perms.pi2[a - 1] < perms.pi2[b - 1] else -1
            t1 = 1 if target.pi1[a - 1] < target.pi1[b - 1] else -1
            t2 = 1 if target.pi2[a - 1] < target.pi2[b - 1] else -1
            if check_braids:
                s1 = braids.pairs[o].exponent_sum
                s2 = braids.pairs[n_pairs + o].exponent_sum
                hsum += _PAIR_DIST[(o1, o2, s1, s2, t1, t2)]
            else:
                hsum += (o1 != t1) + (o2 != t2)
        return cls(perms.pi1, perms.pi2, braids.pairs, braids.triplets, fp, 0, hsum, None, None)


def expand(node: GridNode, target: PermutationState, check_braids: bool = True) -> list[GridNode]:
    """Children of a node, silently dropping braid-violating moves.

    Every child's braid table shares all entries with its parent except the
    one pair and the n-2 triplet states touched on the swap axis.
    """
    return _expand(node, target, check_braids, False)[0]


def _expand(
    node: GridNode, target: PermutationState, check_braids: bool, prune: bool
) -> tuple[list[GridNode], int]:
    """Expansion core; returns (children, braid-rejected action count).

    With ``prune`` set, two kinds of provably redundant successors are
    skipped.  Swaps of disjoint robot pairs commute exactly: neither changes
    the other's rank adjacency, crossing letters, or touched braid slots, so
    both orders reach the identical state and only the canonically ordered
    one is generated.  A swap that exactly undoes the arriving action is
    skipped too: its letters cancel under free reduction, so it recreates
    the already-closed parent state.
    """
    n = len(node.pi1)
    n_pairs = len(_pair_ord(n))
    n_trips = len(_trip_ord(n))
    pord = _pair_ord(n)
    tord = _trip_ord(n)
    t1, t2 = target.pi1, target.pi2
    node_pairs, node_trips = node.pairs, node.trips
    psalts = _slot_salts(0, len(node_pairs))
    tsalts = _slot_salts(1, len(node_trips))
    children: list[GridNode] = []
    braid_rejected = 0

    pa = node.action if prune else None
    if pa is not None:
        pa_a, pa_b = (pa.i, pa.j) if pa.i < pa.j else (pa.j, pa.i)
        pa_key = (pa.axis, pa_a, pa_b)

    for axis in (1, 2):
        ranks = node.pi1 if axis == 1 else node.pi2
        other = node.pi2 if axis == 1 else node.pi1
        inv = [0] * (n + 1)
        for robot0, r in enumerate(ranks):
            inv[r] = robot0 + 1
        base = (axis - 1) * n_pairs
        tbase = (axis - 1) * n_trips
        for k in range(1, n):
            i, j = inv[k], inv[k + 1]
            if axis == 1:
                sign = 1 if other[i - 1] > other[j - 1] else -1
            else:
                sign = 1 if other[i - 1] < other[j - 1] else -1

            a, b = (i, j) if i < j else (j, i)
            if pa is not None:
                if a == pa_a and b == pa_b:
                    if axis == pa.axis:
                        continue
                elif a != pa_a and a != pa_b and b != pa_a and b != pa_b:
                    if (axis, a, b) < pa_key:
                        continue
            po = pord[(a, b)]
            o1 = 1 if node.pi1[a - 1] < node.pi1[b - 1] else -1
            o2 = 1 if node.pi2[a - 1] < node.pi2[b - 1] else -1
            to1 = 1 if t1[a - 1] < t1[b - 1] else -1
            to2 = 1 if t2[a - 1] < t2[b - 1] else -1

            fp = node.fp
            if check_braids:
                pslot = base + po
                pstate = node_pairs[pslot]
                new_pair, ok = _PAIR_STEP[(pstate.exponent_sum, sign)]
                if not ok:
                    braid_rejected += 1
                    continue
                s1 = node_pairs[po].exponent_sum
                s2 = node_pairs[n_pairs + po].exponent_sum
                before = _PAIR_DIST[(o1, o2, s1, s2, to1, to2)]
                if axis == 1:
                    after = _PAIR_DIST[(-o1, o2, new_pair.exponent_sum, s2, to1, to2)]
                else:
                    after = _PAIR_DIST[(o1, -o2, s1, new_pair.exponent_sum, to1, to2)]
                if after >= _INF:
                    # This pair could never reach its target orders again.
                    braid_rejected += 1
                    continue
                trip_changes: list[tuple[int, TripletBraidState]] = []
                valid = True
                for t in range(1, n + 1):
                    if t == i or t == j:
                        continue
                    ids = (t, a, b) if t < a else (a, t, b) if t < b else (a, b, t)
                    slot = tbase + tord[ids]
                    st = node_trips[slot]
                    ls = (2 if ranks[t - 1] < k else 1, sign)
                    hit = st._trans.get(ls)
                    if hit is None:
                        hit = update_triplet(st, _LETTERS[ls])
                    new_trip, ok = hit
                    if not ok:
                        valid = False
                        break
                    trip_changes.append((slot, new_trip))
                if not valid:
                    braid_rejected += 1
                    continue
                pairs = list(node_pairs)
                pairs[pslot] = new_pair
                fp ^= (psalts[pslot] * (hash(pstate) | 1)) & _MARK_MASK
                fp ^= (psalts[pslot] * (hash(new_pair) | 1)) & _MARK_MASK
                trips = list(node_trips)
                for slot, st in trip_changes:
                    fp ^= (tsalts[slot] * (trips[slot]._hash | 1)) & _MARK_MASK
                    fp ^= (tsalts[slot] * (st._hash | 1)) & _MARK_MASK
                    trips[slot] = st
                pairs_t, trips_t = tuple(pairs), tuple(trips)
            else:
                before = (o1 != to1) + (o2 != to2)
                if axis == 1:
                    after = (-o1 != to1) + (o2 != to2)
                else:
                    after = (o1 != to1) + (-o2 != to2)
                pairs_t, trips_t = node.pairs, node.trips

            new_ranks = list(ranks)
            new_ranks[i - 1], new_ranks[j - 1] = k + 1, k
            new_ranks = tuple(new_ranks)
            pi1, pi2 = (new_ranks, node.pi2) if axis == 1 else (node.pi1, new_ranks)
            children.append(
                GridNode(
                    pi1, pi2, pairs_t, trips_t, fp,
                    node.g + 1, node.hsum - before + after, node, SwapAction(axis, i, j),
                )
            )
    return children, braid_rejected


def _transport_penalty(node: GridNode, target: PermutationState) -> int:
    """Rank transport needed before blocked-but-required crossings can happen.

    Two blockage patterns hide from the per-pair automaton bound, and both
    stall the search on a plateau because the detour that fixes them raises
    the bound before the required crossing can lower it.  First, a crossing
    whose geometric sign would push the pair's own exponent sum out of
    bounds: the route must first flip the pair's order on the other axis,
    and making the pair adjacent over there costs twice its rank gap in
    crossings of otherwise-ordered pairs.  Second, a crossing forbidden by
    a triplet constraint while a third robot sits on one side of the pair:
    that robot must travel to the allowed side first (or, when both sides
    are forbidden, the triplet word itself must change, priced at a large
    constant).  Summing the corresponding rank distances gives those
    detours a downhill gradient.  Guidance only, not a lower bound; used
    solely when braid checks are on.
    """
    n = len(node.pi1)
    pord = _pair_ord(n)
    tord = _trip_ord(n)
    n_pairs = len(pord)
    n_trips = len(tord)
    pi1, pi2 = node.pi1, node.pi2
    tg1, tg2 = target.pi1, target.pi2
    pairs = node.pairs
    trips = node.trips
    pen = 0
    for (a, b), po in pord.items():
        o1 = 1 if pi1[a - 1] < pi1[b - 1] else -1
        o2 = 1 if pi2[a - 1] < pi2[b - 1] else -1
        d1 = o1 != (1 if tg1[a - 1] < tg1[b - 1] else -1)
        d2 = o2 != (1 if tg2[a - 1] < tg2[b - 1] else -1)
        if not (d1 or d2):
            continue
        s1 = pairs[po].exponent_sum
        s2 = pairs[n_pairs + po].exponent_sum
        to1 = -o1 if d1 else o1
        to2 = -o2 if d2 else o2
        if _PAIR_DIST[(o1, o2, s1, s2, to1, to2)] > d1 + d2:
            # The shortest route includes auxiliary crossings on an axis
            # that is already ordered, so the pair must become adjacent
            # there first and separate again afterwards.
            if d1 and not d2:
                gap = abs(pi2[a - 1] - pi2[b - 1]) - 1
            elif d2 and not d1:
                gap = abs(pi1[a - 1] - pi1[b - 1]) - 1
            else:
                gap = min(abs(pi1[a - 1] - pi1[b - 1]),
                          abs(pi2[a - 1] - pi2[b - 1])) - 1
            pen += 2 * gap
        for axis in (1, 2):
            if axis == 1:
                if not d1:
                    continue
                sign = -o1 * o2
                if abs(s1 + sign) > 1:
                    # The direct sign is unusable; the route flips the
                    # other axis first and crosses with the sign negated.
                    sign = -sign
                ranks = pi1
                tbase = 0
            else:
                if not d2:
                    continue
                sign = o1 * o2
                if abs(s2 + sign) > 1:
                    sign = -sign
                ranks = pi2
                tbase = n_trips
            ls1 = (1, sign)
            ls2 = (2, sign)
            ra, rb = ranks[a - 1], ranks[b - 1]
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            for t in range(1, n + 1):
                if t == a or t == b:
                    continue
                ids = (t, a, b) if t < a else (a, t, b) if t < b else (a, b, t)
                st = trips[tbase + tord[ids]]
                hit = st._trans.get(ls1)
                if hit is None:
                    hit = update_triplet(st, _LETTERS[ls1])
                ok_above = hit[1]
                hit = st._trans.get(ls2)
                if hit is None:
                    hit = update_triplet(st, _LETTERS[ls2])
                ok_below = hit[1]
                if ok_above and ok_below:
                    continue
                if not ok_above and not ok_below:
                    pen += 2 * n
                elif ok_below:
                    rt = ranks[t - 1]
                    if rt > lo:
                        pen += rt - lo
                else:
                    rt = ranks[t - 1]
                    if rt < hi:
                        pen += hi - rt
    return pen


@dataclass(frozen=True)
class SearchTrace:
    expanded: int
    generated: int
    rejected_by_braid: int
    peak_open: int
    reason: str  # "goal", "exhausted", or "max_expansions"


@dataclass(frozen=True)
class PlanResult:
    path: tuple[PermutationState, ...]
    final_braids: BraidTable | None
    trace: SearchTrace


# A direct search that makes no heuristic progress for this many expansions
# is considered stuck against carried cable tangle and falls back to the
# unwind stage.  Only active when the budget leaves room to recover.
_STALL_LIMIT = 20_000
_UNWIND_BUDGET = 30_000
_UNWIND_PATIENCE = 3_000


def _tangle(node: GridNode) -> int:
    """Letters still recorded across the node's braid table."""
    total = 0
    for st in node.trips:
        total += len(st.letters)
    for st in node.pairs:
        total += abs(st.exponent_sum)
    return total


def _search(
    root: GridNode,
    target: PermutationState,
    check_braids: bool,
    bias: float,
    budget: int,
    stall_limit: int | None,
) -> tuple[GridNode | None, int, int, int, int, str]:
    """One best-first stage ordered by g + h.

    Returns (goal node or None, expanded, generated, rejected, peak open
    size, reason).  Reason "stalled" is only produced with a stall limit:
    no new global best of (h, hsum) for that many expansions.
    """
    h0 = root.hsum * bias
    if check_braids:
        h0 = (root.hsum + _transport_penalty(root, target)) * bias
    heap: list[tuple[float, float, int, GridNode]] = [(root.g + h0, h0, 0, root)]
    g_best = {root: root.g}
    closed: set[GridNode] = set()
    seq = 0
    expanded = generated = rejected = 0
    peak_open = 1
    best_key = (h0, root.hsum)
    since_improve = 0

    while heap:
        _, _, _, node = heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        expanded += 1
        if node.pi1 == target.pi1 and node.pi2 == target.pi2:
            return node, expanded, generated, rejected, peak_open, "goal"
        if expanded >= budget:
            return None, expanded, generated, rejected, peak_open, "max_expansions"
        if stall_limit is not None and since_improve >= stall_limit:
            return None, expanded, generated, rejected, peak_open, "stalled"
        since_improve += 1
        # A later stage's root arrives with an action taken in the previous
        # stage; the commuting-order pruning must not refer to it because
        # this stage cannot reach the states behind that boundary.
        prune = node is not root or node.parent is None
        children, braid_rejected = _expand(node, target, check_braids, prune)
        rejected += braid_rejected
        generated += len(children)
        for child in children:
            if child in closed:
                continue
            old = g_best.get(child)
            if old is not None and old <= child.g:
                continue
            g_best[child] = child.g
            seq += 1
            child.seq = seq
            if check_braids:
                h = (child.hsum + _transport_penalty(child, target)) * bias
            else:
                h = child.hsum * bias
            if stall_limit is not None:
                key = (h, child.hsum)
                if key < best_key:
                    best_key = key
                    since_improve = 0
            # ties on f then h pop newest first, diving across plateaus
            heappush(heap, (child.g + h, h, -seq, child))
        if len(heap) > peak_open:
            peak_open = len(heap)

    return None, expanded, generated, rejected, peak_open, "exhausted"


def _unwind(
    root: GridNode, target: PermutationState, budget: int, patience: int
) -> tuple[GridNode, int, int, int, int]:
    """Best-first descent on recorded letters; returns the least tangled node.

    Carried braid words accumulated over earlier episodes can make the
    direct sort intractable; retracing crossings so the words cancel is
    cheap because every recorded letter keeps its undo move available.
    The walk stops at zero letters, on a stretch of `patience` expansions
    without improvement, or at the budget.
    """
    seq = 0
    best = root
    best_t = _tangle(root)
    heap = [(best_t, root.g, 0, root)]
    closed: set[GridNode] = set()
    expanded = generated = rejected = 0
    peak_open = 1
    since = 0

    while heap and expanded < budget and since < patience and best_t > 0:
        tangle, _, _, node = heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        expanded += 1
        since += 1
        if tangle < best_t:
            best_t = tangle
            best = node
            since = 0
        prune = node is not root or node.parent is None
        children, braid_rejected = _expand(node, target, True, prune)
        rejected += braid_rejected
        generated += len(children)
        for child in children:
            if child in closed:
                continue
            seq += 1
            heappush(heap, (_tangle(child), child.g, -seq, child))
        if len(heap) > peak_open:
            peak_open = len(heap)

    return best, expanded, generated, rejected, peak_open


def plan(
    start: PermutationState,
    target: PermutationState,
    braids: BraidTable | None = None,
    *,
    bias: float = DEFAULT_BIAS,
    max_expansions: int = DEFAULT_MAX_EXPANSIONS,
    check_braids: bool = True,
) -> PlanResult:
    """Search for an entanglement-free swap sequence from start to target.

    Returns the permutation path (empty when no safe path exists within the
    expansion budget), the braid table predicted at the goal, and search
    statistics.  Ties on f are broken by lower h, then newest node first,
    so results are deterministic.

    A direct search that stops making heuristic progress against heavily
    tangled carried-over braids falls back to unwinding the recorded words
    toward identity and sorting from the untangled state; the returned path
    covers both stages.  The fallback never runs with braid checks off.
    """
    if start.n != target.n:
        raise InputError("start and target describe different team sizes")
    if braids is None:
        braids = BraidTable.identity(start.n)
    root = GridNode.root(start, braids, target, check_braids)
    if root.hsum >= _INF:
        # Some pair's carried-over cable state makes its target order
        # provably unreachable; no amount of search can help.
        return PlanResult((), None, SearchTrace(0, 0, 0, 0, "exhausted"))

    stall = _STALL_LIMIT if check_braids and max_expansions > _STALL_LIMIT else None
    node, expanded, generated, rejected, peak_open, reason = _search(
        root, target, check_braids, bias, max_expansions, stall
    )

    if node is None and reason == "stalled":
        reason = "max_expansions"
        unwound, e2, g2, r2, p2 = _unwind(
            root, target, min(_UNWIND_BUDGET, max_expansions - expanded), _UNWIND_PATIENCE
        )
        expanded += e2
        generated += g2
        rejected += r2
        peak_open = max(peak_open, p2)
        if expanded < max_expansions:
            node, e3, g3, r3, p3, reason = _search(
                unwound, target, True, bias, max_expansions - expanded, None
            )
            expanded += e3
            generated += g3
            rejected += r3
            peak_open = max(peak_open, p3)

    if node is not None:
        path = []
        cur = node
        while cur is not None:
            path.append(PermutationState(cur.pi1, cur.pi2))
            cur = cur.parent
        path.reverse()
        return PlanResult(
            tuple(path),
            BraidTable(start.n, 2, node.pairs, node.trips),
            SearchTrace(expanded, generated, rejected, peak_open, "goal"),
        )
    return PlanResult((), None, SearchTrace(expanded, generated, rejected, peak_open, reason))
