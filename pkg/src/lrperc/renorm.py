"""Dynamic multi-scale blocking of a configuration on [-L, L].

Level 0 blocks are the unit intervals [i, i+1]; a level-k block is a run of
consecutive level-(k-1) blocks. Blocks are tagged Good / Hopeful / Bad by the
number of defected children, boundaries are adjusted so that a lone defect never
sits close to a block end, and Hopeful blocks are repaired by a single open edge
jumping over the defect. Every Good block carries a pedestal: the vertex list of
an oriented open path through it.
"""
from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .config import Configuration
from .errors import AdjustmentDidNotConverge, DomainError, InvalidTiling
from .oriented import is_open_oriented_path
from .params import ScaleParams

GOOD, HOPEFUL, BAD = "G", "H", "B"


@dataclass(frozen=True)
class Pedestal:
    vertices: tuple
    # (level, x, y) for every non nearest-neighbour step of the path
    bridges: tuple = ()

    @property
    def witness_edges(self) -> list[tuple[int, int]]:
        v = self.vertices
        return list(zip(v[:-1], v[1:]))

    def __len__(self):
        return len(self.vertices)


@dataclass
class Block:
    level: int
    start: int
    end: int
    tag: str
    final: str
    children: tuple | None = None
    defects: tuple = ()
    pedestal: Pedestal | None = None
    defected_part: tuple | None = None
    bridge: tuple | None = None
    extremal: str | None = None
    forced: str | None = None

    @property
    def interval(self) -> tuple:
        return (self.start, self.end)

    @property
    def length(self) -> int:
        return self.end - self.start

    @property
    def good(self) -> bool:
        return self.final == GOOD

    def to_dict(self) -> dict:
        return {
            "interval": [self.start, self.end],
            "tag": self.tag,
            "state": self.final,
            "children": list(self.children) if self.children else None,
            "defects": list(self.defects),
            "pedestal": list(self.pedestal.vertices) if self.pedestal else None,
            "bridges": [list(b) for b in self.pedestal.bridges] if self.pedestal else None,
            "defected_part": list(self.defected_part) if self.defected_part else None,
            "extremal": self.extremal,
            "forced": self.forced,
        }


def concat_pedestals(blocks) -> Pedestal | None:
    """Join the pedestals of consecutive Good blocks; None if any block has none."""
    verts: list[int] = []
    bridges: list = []
    for blk in blocks:
        ped = blk.pedestal
        if ped is None:
            return None
        v = ped.vertices
        if verts and verts[-1] == v[0]:
            verts.extend(v[1:])
        else:
            verts.extend(v)
        bridges.extend(ped.bridges)
    if not verts:
        return None
    return Pedestal(tuple(verts), tuple(bridges))


def _extremal(j: int, n: int) -> str | None:
    if n == 1:
        return "both"
    if j == 0:
        return "left"
    if j == n - 1:
        return "right"
    return None


def classify_level0(config: Configuration) -> list[Block]:
    L = config.L
    out = []
    n = 2 * L
    for idx, is_open in enumerate(config.nn_open.tolist()):
        i = idx - L
        if is_open:
            out.append(Block(0, i, i + 1, GOOD, GOOD, pedestal=Pedestal((i, i + 1)),
                             extremal=_extremal(idx, n)))
        else:
            out.append(Block(0, i, i + 1, BAD, BAD, extremal=_extremal(idx, n)))
    return out


def check_tiling(blocks: list[Block], L: int) -> None:
    if not blocks or blocks[0].start != -L or blocks[-1].end != L:
        raise InvalidTiling(f"blocks do not cover [-{L}, {L}]")
    for a, b in zip(blocks, blocks[1:]):
        if a.end != b.start:
            raise InvalidTiling(f"blocks {a.interval} and {b.interval} do not share an endpoint")
    for b in blocks:
        if b.end <= b.start:
            raise InvalidTiling(f"block {b.interval} is empty")


def neighbour_window(k: int, scales: ScaleParams) -> int:
    """Largest gap at which a neighbour's defect forces a merge instead of a shift."""
    m = scales.bridge_cap(k)
    return 2 * m - 1 if k == 1 else 3 * m


class _Level:
    """Working state of the adjustment at one level.

    The partition is held as cut points: cut c separates child c-1 from child c.
    Adjustments run in synchronous rounds. Every eligible interval decides its
    action from the partition as it stood at the start of the round; actions are
    edits of distinct cuts plus marks on defect children, so the order in which a
    round's actions are applied does not affect the result.
    """

    def __init__(self, config, prev, k, scales):
        self.config = config
        self.prev = prev
        self.k = k
        self.L = config.L
        self.m = scales.bridge_cap(k)
        self.window = neighbour_window(k, scales)
        self.starts = [b.start for b in prev]
        self.ends = [b.end for b in prev]
        self.bad = [i for i, b in enumerate(prev) if b.final == BAD]
        lk = scales.scales[k]
        n = self.L // lk
        hat = [-1] + [self.first_containing(i * lk) for i in range(-n + 1, n + 1)]
        self.cuts = sorted({h + 1 for h in hat})
        # defect child -> "merge" | "edge_left" | "edge_right"
        self.marks: dict[int, str] = {}
        self.log: list[dict] = []

    def first_containing(self, z: int) -> int:
        """Smallest child index whose closed interval holds z."""
        return bisect_left(self.ends, z)

    def last_starting_at_or_before(self, z: int) -> int:
        return bisect_right(self.starts, z) - 1

    @property
    def ivs(self) -> list[list]:
        """Current intervals as [s0, s1, forced]."""
        out = []
        for a, b in zip(self.cuts, self.cuts[1:]):
            ds = self.defects((a, b - 1))
            tags = {self.marks.get(c) for c in ds} - {None}
            forced = "merge" if "merge" in tags else (tags.pop() if tags else None)
            out.append([a, b - 1, forced])
        return out

    def defects(self, iv) -> list[int]:
        lo = bisect_left(self.bad, iv[0])
        hi = bisect_right(self.bad, iv[1])
        return self.bad[lo:hi]

    def span(self, iv) -> tuple[int, int]:
        return self.starts[iv[0]], self.ends[iv[1]]

    def trigger(self, iv) -> tuple[bool, bool] | None:
        if iv[2] is not None:
            return None
        ds = self.defects(iv)
        if len(ds) != 1:
            return None
        c = ds[0]
        a, b = self.span(iv)
        left = self.starts[c] - a < self.m
        right = b - self.ends[c] < self.m
        return (left, right) if (left or right) else None

    def _blocks_shift(self, nb, shared: int, side: str, moved: range) -> bool:
        """Neighbour defect within the window of the shared endpoint, or inside the moved part."""
        for c in self.defects(nb):
            g = shared - self.ends[c] if side == "left" else self.starts[c] - shared
            if 0 <= g <= self.window or c in moved:
                return True
        return False

    def _shift_target(self, nb, shared: int, side: str) -> int:
        """New position of the shared cut after moving it m away from the defect."""
        if side == "left":
            t = max(shared - self.m, -self.L)
            return max(self.last_starting_at_or_before(t), nb[0])
        t = min(shared + self.m, self.L)
        return min(self.first_containing(t), nb[1]) + 1

    def decide(self, ivs, i) -> dict:
        iv = ivs[i]
        left, right = self.trigger(iv)
        c = self.defects(iv)[0]
        first, last = i == 0, i == len(ivs) - 1
        act = {"interval": list(self.span(iv)), "delete": [], "move": [], "marks": {}}
        if (left and first) or (right and last):
            side = "left" if left and first else "right"
            act.update(action="edge", side=side)
            act["marks"][c] = "edge_" + side
            return act
        merges, shifts = [], []
        for side, hit in (("left", left), ("right", right)):
            if not hit:
                continue
            j = i - 1 if side == "left" else i + 1
            nb = ivs[j]
            cut = iv[0] if side == "left" else iv[1] + 1
            shared = self.starts[iv[0]] if side == "left" else self.ends[iv[1]]
            new = self._shift_target(nb, shared, side)
            moved = range(new, cut) if side == "left" else range(cut, new)
            if self._blocks_shift(nb, shared, side, moved):
                merges.append((side, j, cut))
            else:
                shifts.append((side, cut, new))
        if merges:
            act.update(action="merge", sides=[s for s, _, _ in merges])
            act["pairs"] = [(min(i, j), max(i, j)) for _, j, _ in merges]
        else:
            act.update(action="shift", sides=[s for s, _, _ in shifts])
            act["move"] = [(cut, new) for _, cut, new in shifts]
        return act

    def resolve_merges(self, ivs, acts) -> None:
        """Turn the round's merge requests into cut deletions and Bad marks.

        Runs of intervals linked by merge requests are cut into pairs from the left
        (an odd leftover stays alone); every defect in a run is marked Bad. A request
        against an interval that is already a merged block only marks the requester.
        """
        linked = set()
        for act in acts:
            for a, b in act.get("pairs", ()):
                if ivs[a][2] == "merge" or ivs[b][2] == "merge":
                    own = b if ivs[a][2] == "merge" else a
                    for d in self.defects(ivs[own]):
                        act["marks"][d] = "merge"
                else:
                    linked.add(a)
        if not linked or not acts:
            return
        sink = acts[0]
        for a in sorted(linked):
            if a - 1 in linked:
                continue
            b = a
            while b in linked:
                b += 1
            for j in range(a, b + 1):
                for d in self.defects(ivs[j]):
                    sink["marks"][d] = "merge"
            for j in range(a, b, 2):
                if j + 1 <= b:
                    sink["delete"].append(ivs[j + 1][0])

    def apply(self, acts) -> None:
        deleted = set()
        moved = {}
        for act in acts:
            deleted.update(act["delete"])
            moved.update(act["move"])
            for c, tag in act["marks"].items():
                if self.marks.get(c) != "merge":
                    self.marks[c] = tag
        out: list[int] = []
        for cut in self.cuts:
            if cut in deleted:
                continue
            cut = moved.get(cut, cut)
            # a neighbour consumed from both sides: the two cuts meet halfway
            if out and cut < out[-1]:
                out[-1] = (out[-1] + cut) // 2
            elif not out or cut > out[-1]:
                out.append(cut)
        self.cuts = out

    def adjust(self, order=None) -> None:
        cap = 4 * (len(self.cuts) + 5)
        for _ in range(cap):
            ivs = self.ivs
            elig = [i for i, iv in enumerate(ivs) if self.trigger(iv)]
            if not elig:
                return
            acts = [self.decide(ivs, i) for i in elig]
            self.resolve_merges(ivs, acts)
            self.log.extend({k: v for k, v in a.items() if k not in ("delete", "move", "marks", "pairs")}
                            for a in acts)
            if order is not None:
                acts = list(acts)
                order.shuffle(acts)
            self.apply(acts)
        raise AdjustmentDidNotConverge(f"level {self.k}: no fixpoint after {cap} rounds")

    def concat(self, lo: int, hi: int) -> Pedestal | None:
        return concat_pedestals(self.prev[lo:hi + 1])

    def find_bridge(self, left: Pedestal, right: Pedestal, a: int, a2: int):
        """Open {x, y}, x in left, y in right, y - x <= m; shortest first, then leftmost x."""
        m = self.m
        right_set = set(right.vertices)
        nbrs = self.config.right_neighbours
        best = None
        lo = bisect_left(left.vertices, a2 - m)
        for x in left.vertices[lo:]:
            if x > a:
                break
            cands = []
            if x + 1 in right_set and self.config.is_open(x, x + 1):
                cands.append(x + 1)
            ys = nbrs.get(x, ())
            for y in ys[bisect_left(ys, a2):]:
                if y - x > m:
                    break
                if y in right_set:
                    cands.append(y)
                    break
            for y in cands:
                key = (y - x, x)
                if best is None or key < best[0]:
                    best = (key, x, y)
        return None if best is None else (best[1], best[2])

    def finish(self) -> list[Block]:
        L, k, m = self.L, self.k, self.m
        out = []
        n = len(self.ivs)
        for j, (s0, s1, forced) in enumerate(self.ivs):
            a, b = self.span((s0, s1))
            ds = tuple(self.defects((s0, s1)))
            blk = Block(k, a, b, BAD, BAD, children=(s0, s1), defects=ds,
                        extremal=_extremal(j, n), forced=forced)
            if forced == "merge":
                pass
            elif forced in ("edge_left", "edge_right"):
                blk.tag = GOOD
                c = ds[0]
                if forced == "edge_left":
                    ped = self.concat(c + 1, s1) if c < s1 else None
                    ok = ped is not None and ped.vertices[0] <= -L + m
                else:
                    ped = self.concat(s0, c - 1) if c > s0 else None
                    ok = ped is not None and ped.vertices[-1] >= L - m
                if ok:
                    blk.final, blk.pedestal = GOOD, ped
            elif not ds:
                blk.tag = GOOD
                ped = self.concat(s0, s1)
                if ped is not None:
                    blk.final, blk.pedestal = GOOD, ped
            elif len(ds) == 1:
                blk.tag = HOPEFUL
                c = ds[0]
                left = self.concat(s0, c - 1) if c > s0 else None
                right = self.concat(c + 1, s1) if c < s1 else None
                if left is not None and right is not None:
                    hit = self.find_bridge(left, right, self.starts[c], self.ends[c])
                    if hit is not None:
                        x, y = hit
                        verts = tuple(v for v in left.vertices if v <= x) + tuple(
                            v for v in right.vertices if v >= y)
                        bridges = tuple(q for q in left.bridges if q[2] <= x) + tuple(
                            q for q in right.bridges if q[1] >= y) + ((k, x, y),)
                        blk.final = GOOD
                        blk.pedestal = Pedestal(verts, bridges)
                        blk.bridge = (x, y)
                        blk.defected_part = (x + 1, y - 1)
            out.append(blk)
        return out


def build_level(config: Configuration, prev: list[Block], k: int, scales: ScaleParams,
                order=None) -> tuple[list[Block], list[dict]]:
    """Build level-k blocks from the level-(k-1) tiling.

    ``order`` (anything with a ``shuffle`` method) permutes the order in which each
    round's actions are applied; rounds are synchronous, so the result is the same.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    check_tiling(prev, config.L)
    if any(b.level != k - 1 for b in prev):
        raise InvalidTiling(f"expected level {k - 1} blocks")
    lv = _Level(config, prev, k, scales)
    lv.adjust(order)
    return lv.finish(), lv.log


@dataclass
class Itinerary:
    L: int
    scales: ScaleParams
    levels: list = field(default_factory=list)
    logs: list = field(default_factory=list)

    @property
    def top(self) -> list[Block]:
        return self.levels[-1]

    def top_all_good(self) -> bool:
        return all(b.good for b in self.top)

    def partition(self, k: int) -> list[tuple]:
        return [(b.start, b.end, b.final) for b in self.levels[k]]

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "scales": list(self.scales.scales),
            "params": self.scales.echo(),
            "levels": [
                {"level": k, "bridge_cap": self.scales.bridge_cap(k) if k else 1,
                 "blocks": [b.to_dict() for b in blocks],
                 "adjustments": self.logs[k] if k else []}
                for k, blocks in enumerate(self.levels)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def run_renormalization(config: Configuration, scales: ScaleParams, order=None,
                        max_level: int | None = None) -> Itinerary:
    """Levels 0..M (or 0..max_level) of the block hierarchy for one configuration."""
    if config.L != scales.L:
        raise DomainError(f"configuration has L={config.L} but the ladder ends at {scales.L}")
    top = scales.M if max_level is None else max_level
    if not 0 <= top <= scales.M:
        raise DomainError(f"max_level must lie in [0, {scales.M}]")
    it = Itinerary(config.L, scales, [classify_level0(config)], [[]])
    for k in range(1, top + 1):
        blocks, log = build_level(config, it.levels[-1], k, scales, order)
        it.levels.append(blocks)
        it.logs.append(log)
    return it


def bridge_candidates(itinerary: Itinerary, k: int, block: Block) -> list[tuple[int, int]]:
    """Every pair (x, y) that would repair a Hopeful level-k block.

    x runs over the pedestal left of the defect, y over the pedestal right of it,
    with y - x at most the level's bridge cap. Empty if either side has no pedestal.
    """
    if block.tag != HOPEFUL:
        raise DomainError("bridge candidates exist only for Hopeful blocks")
    prev = itinerary.levels[k - 1]
    s0, s1 = block.children
    c = block.defects[0]
    left = concat_pedestals(prev[s0:c]) if c > s0 else None
    right = concat_pedestals(prev[c + 1:s1 + 1]) if c < s1 else None
    if left is None or right is None:
        return []
    m = itinerary.scales.bridge_cap(k)
    a, a2 = prev[c].start, prev[c].end
    right_v = [y for y in right.vertices if y <= a + m]
    return [(x, y) for x in left.vertices if x >= a2 - m for y in right_v if y - x <= m]


def origin_index(blocks: list[Block]) -> int:
    """min{j : 0 in blocks[j]}."""
    return bisect_left([b.end for b in blocks], 0)


def check_origin_shielding(itinerary: Itinerary, scales: ScaleParams) -> bool:
    """Every (k-1)-block within floor(floor(l_k^r)/l_{k-1}) places of the origin's is Good, all k."""
    for k in range(1, scales.M + 1):
        prev = itinerary.levels[k - 1]
        j0 = origin_index(prev)
        w = scales.bridge_cap(k) // scales.scales[k - 1]
        for j in range(max(0, j0 - w), min(len(prev) - 1, j0 + w) + 1):
            if not prev[j].good:
                return False
    return True


@dataclass
class DensityReport:
    checked: int = 0
    violations: list = field(default_factory=list)
    min_window_density: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def pedestal_density_check(itinerary: Itinerary, scales: ScaleParams) -> DensityReport:
    """|pedestal| >= |union of Good children's pedestals| - l_k^r on every Good block.

    Also records the smallest pedestal density in the bridge-cap windows beside each
    repaired defect.
    """
    rep = DensityReport()
    for k in range(1, len(itinerary.levels)):
        prev = itinerary.levels[k - 1]
        slack = float(scales.scales[k]) ** scales.ratio
        m = scales.bridge_cap(k)
        for blk in itinerary.levels[k]:
            if not blk.good:
                continue
            s0, s1 = blk.children
            union = set()
            for c in range(s0, s1 + 1):
                if prev[c].good:
                    union.update(prev[c].pedestal.vertices)
            rep.checked += 1
            size = len(blk.pedestal)
            if size < len(union) - slack:
                rep.violations.append({"level": k, "interval": blk.interval,
                                       "pedestal": size, "children": len(union)})
            if blk.bridge is not None:
                c = blk.defects[0]
                a, a2 = prev[c].start, prev[c].end
                vs = set(blk.pedestal.vertices)
                for lo, hi in ((a - m, a), (a2, a2 + m)):
                    dens = sum(1 for v in range(lo, hi + 1) if v in vs) / (m + 1)
                    if rep.min_window_density is None or dens < rep.min_window_density:
                        rep.min_window_density = dens
    return rep


def validate_pedestals(itinerary: Itinerary, config: Configuration) -> list[str]:
    """Re-check every Good block's pedestal against the configuration.

    The path must be open and oriented, every non-unit step must be a recorded bridge
    no longer than its level's cap, and the endpoints must sit where the block type
    requires.
    """
    scales = itinerary.scales
    L = itinerary.L
    problems = []
    for k, blocks in enumerate(itinerary.levels):
        m = scales.bridge_cap(k) if k else 1
        for blk in blocks:
            if not blk.good:
                continue
            where = f"level {k} block {blk.interval}"
            ped = blk.pedestal
            if ped is None or not ped.vertices:
                problems.append(f"{where}: Good without pedestal")
                continue
            v = ped.vertices
            if not is_open_oriented_path(config, v):
                problems.append(f"{where}: pedestal is not an open oriented path")
            caps = {}
            for lv, x, y in ped.bridges:
                caps[(x, y)] = lv
            for x, y in zip(v, v[1:]):
                if y - x == 1:
                    continue
                lv = caps.get((x, y))
                if lv is None or lv > k or y - x > scales.bridge_cap(lv):
                    problems.append(f"{where}: step {x}->{y} is not an admissible bridge")
            if v[0] < blk.start or v[-1] > blk.end:
                problems.append(f"{where}: pedestal leaves the block")
            ext = blk.extremal
            if ext in ("left", "both"):
                if v[0] > -L + m:
                    problems.append(f"{where}: left pedestal starts at {v[0]}")
            elif v[0] != blk.start:
                problems.append(f"{where}: pedestal does not start at the block start")
            if ext in ("right", "both"):
                if v[-1] < L - m:
                    problems.append(f"{where}: right pedestal ends at {v[-1]}")
            elif v[-1] != blk.end:
                problems.append(f"{where}: pedestal does not end at the block end")
    return problems


def vno_violations(itinerary: Itinerary, scales: ScaleParams) -> list[tuple]:
    """Blocks violating l_k - (2 m_k + 6 l_{k-1}) < |I| <= 3 l_k + 6 l_{k-1}."""
    out = []
    for k in range(1, len(itinerary.levels)):
        lk, lp, m = scales.scales[k], scales.scales[k - 1], scales.bridge_cap(k)
        for blk in itinerary.levels[k]:
            if not (lk - (2 * m + 6 * lp) < blk.length <= 3 * lk + 6 * lp):
                out.append((k, blk.interval))
    return out
