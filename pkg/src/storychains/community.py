"""Map-equation community detection on the similarity network.

Node visit rates come from a teleporting random walk. Teleportation steps are
not encoded: a module's enter and exit flows count only flow moving along
links, so articles without related links cost nothing as singletons.

The search is Louvain-style (greedy node moves, then aggregation of modules
into super-nodes), refined by re-applying single-node moves to the leaves.
A hierarchy is built by compressing the module network into super-modules and
by re-running the search inside each module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .simnet import SimilarityNetwork

MIN_IMPROVEMENT = 1e-10
DEFAULT_TELEPORT = 0.15
DEFAULT_SEED = 42


def plogp(x: float) -> float:
    return x * np.log2(x) if x > 0 else 0.0


def _plogp_arr(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


@dataclass(frozen=True)
class VisitRates:
    """Stationary visit rates and link flows of the teleporting walk.

    ``link_flow[k]`` is the flow moving along ``link_src[k] -> link_dst[k]``.
    """

    nodes: tuple[str, ...]
    rates: np.ndarray
    link_src: np.ndarray
    link_dst: np.ndarray
    link_flow: np.ndarray
    iterations: int = 0

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.nodes, self.rates.tolist()))


def _links(network: SimilarityNetwork) -> tuple[dict[str, int], np.ndarray, np.ndarray, np.ndarray]:
    pos = {v: i for i, v in enumerate(network.nodes)}
    acc: dict[tuple[int, int], float] = {}
    for e in network.edges:
        u, v = pos[e.source], pos[e.target]
        if u == v or e.ensemble <= 0:
            continue
        acc[(u, v)] = acc.get((u, v), 0.0) + e.ensemble
    keys = sorted(acc)
    src = np.array([k[0] for k in keys], dtype=np.int64)
    dst = np.array([k[1] for k in keys], dtype=np.int64)
    w = np.array([acc[k] for k in keys], dtype=np.float64)
    return pos, src, dst, w


def visit_rates(network: SimilarityNetwork, teleport: float = DEFAULT_TELEPORT,
                tol: float = 1e-12, max_iter: int = 1000) -> VisitRates:
    """Power iteration on the weight-normalised walk with uniform teleportation.

    Dangling nodes always teleport.
    """
    n = len(network.nodes)
    if n == 0:
        raise ValueError("network has no nodes")
    if not 0 < teleport < 1:
        raise ValueError(f"teleport probability must lie in (0, 1), got {teleport}")
    _, src, dst, w = _links(network)
    out_w = np.bincount(src, weights=w, minlength=n)
    trans = w / out_w[src] if len(w) else w
    # column-stochastic transposed transition matrix restricted to non-dangling nodes
    step = sp.csr_matrix((trans, (dst, src)), shape=(n, n))
    dangling = out_w == 0

    p = np.full(n, 1.0 / n)
    it = 0
    for it in range(1, max_iter + 1):
        jump = teleport * p[~dangling].sum() + p[dangling].sum()
        nxt = (1.0 - teleport) * (step @ p) + jump / n
        nxt /= nxt.sum()
        resid = np.abs(nxt - p).sum()
        p = nxt
        if resid < tol:
            break
    flow = (1.0 - teleport) * p[src] * trans if len(w) else w
    return VisitRates(tuple(network.nodes), p, src, dst, flow, it)


def _membership(nodes: Sequence[str], partition) -> np.ndarray:
    """Accept a node->label mapping or a sequence of labels aligned with ``nodes``."""
    labels = [partition[v] for v in nodes] if isinstance(partition, Mapping) else list(partition)
    if len(labels) != len(nodes):
        raise ValueError("partition does not cover every node")
    canon: dict = {}
    return np.array([canon.setdefault(lab, len(canon)) for lab in labels], dtype=np.int64)


def _codelength(node_flow: np.ndarray, src: np.ndarray, dst: np.ndarray, flow: np.ndarray,
                member: np.ndarray, node_term: float | None = None) -> float:
    k = int(member.max()) + 1 if len(member) else 0
    cross = member[src] != member[dst]
    exit_ = np.bincount(member[src[cross]], weights=flow[cross], minlength=k)
    enter = np.bincount(member[dst[cross]], weights=flow[cross], minlength=k)
    mflow = np.bincount(member, weights=node_flow, minlength=k)
    if node_term is None:
        node_term = float(_plogp_arr(node_flow).sum())
    return float(
        plogp(enter.sum()) - _plogp_arr(enter).sum() - _plogp_arr(exit_).sum()
        + _plogp_arr(exit_ + mflow).sum() - node_term
    )


def map_equation(network: SimilarityNetwork, partition, rates: VisitRates | None = None) -> float:
    """Two-level description length, in bits, of the walk under ``partition``."""
    rates = rates or visit_rates(network)
    member = _membership(network.nodes, partition)
    return _codelength(rates.rates, rates.link_src, rates.link_dst, rates.link_flow, member)


class _Level:
    """Graph at one aggregation level together with the module bookkeeping."""

    def __init__(self, node_flow: np.ndarray, src: np.ndarray, dst: np.ndarray, flow: np.ndarray):
        n = len(node_flow)
        self.n = n
        self.node_flow = node_flow
        self.out: list[dict[int, float]] = [dict() for _ in range(n)]
        self.inn: list[dict[int, float]] = [dict() for _ in range(n)]
        for u, v, f in zip(src.tolist(), dst.tolist(), flow.tolist()):
            if u == v:
                continue
            self.out[u][v] = self.out[u].get(v, 0.0) + f
            self.inn[v][u] = self.inn[v].get(u, 0.0) + f
        self.out_total = np.array([sum(d.values()) for d in self.out])
        self.in_total = np.array([sum(d.values()) for d in self.inn])

    def reset(self, member: np.ndarray) -> None:
        self.member = member.copy()
        k = self.n
        self.mod_flow = np.zeros(k)
        self.mod_exit = np.zeros(k)
        self.mod_enter = np.zeros(k)
        self.mod_size = np.zeros(k, dtype=np.int64)
        for v in range(self.n):
            m = member[v]
            self.mod_flow[m] += self.node_flow[v]
            self.mod_size[m] += 1
            for u, f in self.out[v].items():
                if member[u] != m:
                    self.mod_exit[m] += f
                    self.mod_enter[member[u]] += f
        self.sum_enter = float(self.mod_enter.sum())
        self.sum_plogp_enter = float(_plogp_arr(self.mod_enter).sum())
        self.sum_plogp_exit = float(_plogp_arr(self.mod_exit).sum())
        self.sum_plogp_exit_flow = float(_plogp_arr(self.mod_exit + self.mod_flow).sum())
        self.empty = [m for m in range(k - 1, -1, -1) if self.mod_size[m] == 0]

    def codelength(self, node_term: float) -> float:
        return (plogp(self.sum_enter) - self.sum_plogp_enter - self.sum_plogp_exit
                + self.sum_plogp_exit_flow - node_term)

    def _delta(self, v: int, old: int, new: int, out_old: float, in_old: float,
               out_new: float, in_new: float) -> tuple[float, tuple[float, ...]]:
        p = self.node_flow[v]
        ot, it = self.out_total[v], self.in_total[v]
        ex_o = self.mod_exit[old] - (ot - out_old) + in_old
        en_o = self.mod_enter[old] - (it - in_old) + out_old
        fl_o = self.mod_flow[old] - p
        ex_n = self.mod_exit[new] + (ot - out_new) - in_new
        en_n = self.mod_enter[new] + (it - in_new) - out_new
        fl_n = self.mod_flow[new] + p
        ex_o, en_o, fl_o = max(ex_o, 0.0), max(en_o, 0.0), max(fl_o, 0.0)
        sum_enter = self.sum_enter - self.mod_enter[old] - self.mod_enter[new] + en_o + en_n
        d = (plogp(sum_enter) - plogp(self.sum_enter)
             - (plogp(en_o) + plogp(en_n) - plogp(self.mod_enter[old]) - plogp(self.mod_enter[new]))
             - (plogp(ex_o) + plogp(ex_n) - plogp(self.mod_exit[old]) - plogp(self.mod_exit[new]))
             + (plogp(ex_o + fl_o) + plogp(ex_n + fl_n)
                - plogp(self.mod_exit[old] + self.mod_flow[old])
                - plogp(self.mod_exit[new] + self.mod_flow[new])))
        return d, (ex_o, en_o, fl_o, ex_n, en_n, fl_n, sum_enter)

    def _apply(self, v: int, old: int, new: int, vals: tuple[float, ...]) -> None:
        ex_o, en_o, fl_o, ex_n, en_n, fl_n, sum_enter = vals
        self.sum_plogp_enter += plogp(en_o) + plogp(en_n) - plogp(self.mod_enter[old]) - plogp(self.mod_enter[new])
        self.sum_plogp_exit += plogp(ex_o) + plogp(ex_n) - plogp(self.mod_exit[old]) - plogp(self.mod_exit[new])
        self.sum_plogp_exit_flow += (plogp(ex_o + fl_o) + plogp(ex_n + fl_n)
                                     - plogp(self.mod_exit[old] + self.mod_flow[old])
                                     - plogp(self.mod_exit[new] + self.mod_flow[new]))
        self.mod_exit[old], self.mod_enter[old], self.mod_flow[old] = ex_o, en_o, fl_o
        self.mod_exit[new], self.mod_enter[new], self.mod_flow[new] = ex_n, en_n, fl_n
        self.sum_enter = sum_enter
        self.mod_size[old] -= 1
        self.mod_size[new] += 1
        if self.mod_size[old] == 0:
            self.empty.append(old)
        if self.empty and self.empty[-1] == new:
            self.empty.pop()
        elif new in self.empty:
            self.empty.remove(new)
        self.member[v] = new

    def move_nodes(self, rng: np.random.Generator, max_sweeps: int = 200) -> int:
        """Greedy single-node moves until a full sweep changes nothing; returns moves made."""
        moves = 0
        for _ in range(max_sweeps):
            moved = 0
            for v in rng.permutation(self.n).tolist():
                old = int(self.member[v])
                links: dict[int, list[float]] = {}
                for u, f in self.out[v].items():
                    links.setdefault(int(self.member[u]), [0.0, 0.0])[0] += f
                for u, f in self.inn[v].items():
                    links.setdefault(int(self.member[u]), [0.0, 0.0])[1] += f
                out_old, in_old = links.pop(old, (0.0, 0.0))
                best, best_mod, best_vals = -MIN_IMPROVEMENT, -1, None
                candidates = sorted(links.items())
                if self.mod_size[old] > 1 and self.empty:
                    candidates.append((self.empty[-1], [0.0, 0.0]))
                for m, (o, i) in candidates:
                    d, vals = self._delta(v, old, m, out_old, in_old, o, i)
                    if d < best:
                        best, best_mod, best_vals = d, m, vals
                if best_mod >= 0:
                    self._apply(v, old, best_mod, best_vals)
                    moved += 1
            moves += moved
            if not moved:
                break
        return moves


def _canonical(member: np.ndarray) -> np.ndarray:
    """Relabel modules 0..k-1 by size descending, then smallest member position."""
    labels, inverse, counts = np.unique(member, return_inverse=True, return_counts=True)
    first = np.full(len(labels), len(member))
    np.minimum.at(first, inverse, np.arange(len(member)))
    order = sorted(range(len(labels)), key=lambda m: (-counts[m], first[m]))
    rank = np.empty(len(labels), dtype=np.int64)
    rank[order] = np.arange(len(labels))
    return rank[inverse]


def _aggregate(member: np.ndarray, node_flow: np.ndarray, src: np.ndarray, dst: np.ndarray,
               flow: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    _, dense = np.unique(member, return_inverse=True)
    k = int(dense.max()) + 1
    agg_flow = np.bincount(dense, weights=node_flow, minlength=k)
    ms, md = dense[src], dense[dst]
    cross = ms != md
    m = sp.coo_matrix((flow[cross], (ms[cross], md[cross])), shape=(k, k)).tocsr()
    m.sum_duplicates()
    coo = m.tocoo()
    return dense, agg_flow, coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data


def _optimize(node_flow: np.ndarray, src: np.ndarray, dst: np.ndarray, flow: np.ndarray,
              seed: int, node_term: float | None = None) -> tuple[np.ndarray, float]:
    """Louvain-style search plus leaf fine-tuning; returns (membership, codelength)."""
    n = len(node_flow)
    if node_term is None:
        node_term = float(_plogp_arr(node_flow).sum())
    rng = np.random.default_rng(seed)
    leaf = _Level(node_flow, src, dst, flow)
    member = np.arange(n)
    best_len = np.inf

    while True:
        # coarse phase: repeated move + aggregate starting from the current leaf partition
        dense, a_flow, a_src, a_dst, a_fl = _aggregate(member, node_flow, src, dst, flow)
        while True:
            level = _Level(a_flow, a_src, a_dst, a_fl)
            level.reset(np.arange(level.n))
            if level.move_nodes(rng) == 0:
                break
            dense = level.member[dense]
            dense, a_flow, a_src, a_dst, a_fl = _aggregate(dense, node_flow, src, dst, flow)
        member = dense
        # fine phase: single leaves may move between the found modules
        leaf.reset(member)
        leaf.move_nodes(rng)
        member = leaf.member.copy()
        length = leaf.codelength(node_term)
        if length < best_len - MIN_IMPROVEMENT:
            best_len, best_member = length, member.copy()
        else:
            break

    one = np.zeros(n, dtype=np.int64)
    one_len = _codelength(node_flow, src, dst, flow, one, node_term)
    if one_len < best_len - MIN_IMPROVEMENT:
        best_member, best_len = one, one_len
    best_member = _canonical(best_member)
    return best_member, _codelength(node_flow, src, dst, flow, best_member, node_term)


def optimize_partition(network: SimilarityNetwork, rates: VisitRates | None = None,
                       seed: int = DEFAULT_SEED) -> dict[str, int]:
    """Flat partition minimising the two-level map equation; labels are 0-based module ranks."""
    rates = rates or visit_rates(network)
    member, _ = _optimize(rates.rates, rates.link_src, rates.link_dst, rates.link_flow, seed)
    return dict(zip(network.nodes, member.tolist()))


@dataclass
class Module:
    """Tree node: either holds sub-modules or, at the bottom, article ids."""

    children: list["Module"] = field(default_factory=list)
    articles: list[str] = field(default_factory=list)
    codelength: float = 0.0
    flow: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def members(self) -> list[str]:
        if self.is_leaf:
            return list(self.articles)
        out: list[str] = []
        for c in self.children:
            out.extend(c.members())
        return out

    @property
    def size(self) -> int:
        return len(self.articles) if self.is_leaf else sum(c.size for c in self.children)

    def depth(self) -> int:
        return 1 if self.is_leaf else 1 + max(c.depth() for c in self.children)

    def sort_key(self) -> tuple[int, str]:
        return (-self.size, min(self.members()))


@dataclass
class ClusterTree:
    root: Module
    codelength: float

    @property
    def top_modules(self) -> list[Module]:
        return self.root.children

    def leaf_modules(self) -> list[Module]:
        out: list[Module] = []

        def walk(m: Module) -> None:
            if m.is_leaf:
                out.append(m)
            else:
                for c in m.children:
                    walk(c)

        for m in self.root.children:
            walk(m)
        return out

    def clusters(self, level: str = "top") -> list[list[str]]:
        """Article groups at the top level or at the finest (leaf-module) level."""
        if level == "top":
            mods = self.top_modules
        elif level in ("leaf", "leaf-modules"):
            mods = self.leaf_modules()
        else:
            raise ValueError(f"unknown level {level!r}")
        return [m.members() for m in mods]

    @property
    def depth(self) -> int:
        return self.root.depth() - 1

    def paths(self) -> list[tuple[tuple[int, ...], str]]:
        out: list[tuple[tuple[int, ...], str]] = []

        def walk(m: Module, path: tuple[int, ...]) -> None:
            if m.is_leaf:
                out.extend((path, a) for a in m.articles)
            else:
                for i, c in enumerate(m.children, start=1):
                    walk(c, path + (i,))

        for i, m in enumerate(self.root.children, start=1):
            walk(m, (i,))
        return out

    def to_text(self) -> str:
        return "".join(f"{':'.join(map(str, p))} {a}\n" for p, a in self.paths())

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    def summary(self) -> dict[str, float | int]:
        return {
            "modules": len(self.top_modules),
            "leaf_modules": len(self.leaf_modules()),
            "non_singleton_modules": sum(1 for m in self.top_modules if m.size > 1),
            "codelength": self.codelength,
            "depth": self.depth,
        }


def read_tree(path: str | Path) -> ClusterTree:
    """Rebuild a tree (structure only, no codelengths) from its text form."""
    root = Module()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            path_s, art = line.split(" ", 1)
            steps = [int(s) for s in path_s.split(":")]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed tree line {line!r}") from None
        node = root
        for s in steps:
            while len(node.children) < s:
                node.children.append(Module())
            node = node.children[s - 1]
        node.articles.append(art)
    return ClusterTree(root, float("nan"))


def _score_tree(root: Module, rates: VisitRates) -> float:
    """Fill in per-module codebook costs; return the total multilevel description length."""
    pos = {v: i for i, v in enumerate(rates.nodes)}
    modules: list[Module] = []
    paths: dict[int, list[int]] = {}

    def index(m: Module, anc: list[int]) -> None:
        modules.append(m)
        here = anc + [len(modules) - 1]
        if m.is_leaf:
            for a in m.articles:
                paths[pos[a]] = here
        for c in m.children:
            index(c, here)

    for top in root.children:
        index(top, [])
    n_mod = len(modules)
    where = {id(m): i for i, m in enumerate(modules)}
    depth = max((len(p) for p in paths.values()), default=0)
    src, dst, flow = rates.link_src, rates.link_dst, rates.link_flow
    enter = np.zeros(n_mod)
    exit_ = np.zeros(n_mod)
    mflow = np.zeros(n_mod)
    for k in range(depth):
        label = np.full(len(rates.nodes), -1, dtype=np.int64)
        for node, p in paths.items():
            if k < len(p):
                label[node] = p[k]
        ls, ld = label[src], label[dst]
        out = (ls >= 0) & (ls != ld)
        inn = (ld >= 0) & (ls != ld)
        exit_ += np.bincount(ls[out], weights=flow[out], minlength=n_mod)
        enter += np.bincount(ld[inn], weights=flow[inn], minlength=n_mod)
        has = label >= 0
        mflow += np.bincount(label[has], weights=rates.rates[has], minlength=n_mod)

    total = 0.0
    for i, m in enumerate(modules):
        m.flow = float(mflow[i])
        if m.is_leaf:
            ps = rates.rates[[pos[a] for a in m.articles]]
            parts = ps
        else:
            parts = np.array([enter[where[id(c)]] for c in m.children])
        m.codelength = float(plogp(exit_[i] + parts.sum()) - plogp(exit_[i]) - _plogp_arr(parts).sum())
        total += m.codelength
    tops = np.array([enter[where[id(c)]] for c in root.children])
    root.codelength = float(plogp(tops.sum()) - _plogp_arr(tops).sum())
    return total + root.codelength


def _subnetwork(network: SimilarityNetwork, members: Sequence[str]) -> SimilarityNetwork:
    keep = set(members)
    edges = tuple(e for e in network.edges if e.source in keep and e.target in keep)
    return SimilarityNetwork(tuple(members), edges)


def _split(sub: SimilarityNetwork, teleport: float, seed: int) -> Module:
    """Leaf module for ``sub``'s nodes, re-partitioned while that shortens its own description."""
    mod = Module(articles=sorted(sub.nodes))
    if len(sub.nodes) < 3 or not sub.edges:
        return mod
    rates = visit_rates(sub, teleport)
    member, length = _optimize(rates.rates, rates.link_src, rates.link_dst, rates.link_flow, seed)
    k = int(member.max()) + 1
    if k < 2:
        return mod
    one = float(-_plogp_arr(rates.rates).sum())
    if not length < one - MIN_IMPROVEMENT:
        return mod
    groups = [[sub.nodes[i] for i in np.flatnonzero(member == m)] for m in range(k)]
    return Module(children=[_split(_subnetwork(sub, g), teleport, seed) for g in groups])


def _incident_links(member: np.ndarray, rates: VisitRates, k: int) -> list[np.ndarray]:
    """Indices of the links touching each module (either endpoint inside)."""
    ms, md = member[rates.link_src], member[rates.link_dst]
    links = np.arange(len(ms))
    cross = ms != md
    owner = np.concatenate([ms, md[cross]])
    which = np.concatenate([links, links[cross]])
    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(k + 1))
    return [np.sort(which[order[bounds[m]:bounds[m + 1]]]) for m in range(k)]


def _local_rates(rates: VisitRates, inside: Sequence[int], links: np.ndarray) -> VisitRates:
    """Global flows restricted to one module's nodes and the links touching them."""
    src, dst = rates.link_src[links], rates.link_dst[links]
    outside = sorted(set(src.tolist()) | set(dst.tolist()) - set(inside))
    order = list(inside) + outside
    local = {g: i for i, g in enumerate(order)}
    remap = np.vectorize(local.__getitem__, otypes=[np.int64])
    return VisitRates(
        tuple(rates.nodes[i] for i in order),
        rates.rates[order],
        remap(src) if len(src) else src,
        remap(dst) if len(dst) else dst,
        rates.link_flow[links],
    )


def _flatten(m: Module) -> Module:
    """Keep only the first level of sub-modules below ``m``."""
    return Module(children=[Module(articles=sorted(c.members())) for c in m.children])


def _accept(proposal: Module, inside: Sequence[int], links: np.ndarray, rates: VisitRates) -> Module:
    """Keep the sub-module structure proposed for one module only where it shortens the global code.

    Proposals come from the module's own subnetwork, whose re-computed rates
    ignore the flow leaving the module; the candidates are therefore
    re-scored against the global flows before one is kept.
    """
    leaf = Module(articles=sorted(proposal.members()))
    if proposal.is_leaf:
        return leaf
    local = _local_rates(rates, inside, links)
    best, best_len = leaf, _score_tree(Module(children=[leaf]), local)
    candidates = [_flatten(proposal)]
    if proposal.depth() > 2:
        candidates.append(proposal)
    for cand in candidates:
        length = _score_tree(Module(children=[cand]), local)
        if length < best_len - MIN_IMPROVEMENT:
            best, best_len = cand, length
    return best


def _super_levels(groups: list[list[int]], rates: VisitRates, seed: int) -> list[list[list[int]]]:
    """Repeatedly compress the module network into super-modules.

    Each pass partitions modules (weighted by their entry flow) with the same
    search and keeps the result only if it shortens the index codebook.
    Returns the accepted groupings, coarsest last.
    """
    n = len(rates.nodes)
    levels: list[list[list[int]]] = []
    member = np.empty(n, dtype=np.int64)
    for m, g in enumerate(groups):
        member[g] = m
    while True:
        k = int(member.max()) + 1
        if k < 3:
            break
        s, d, f = rates.link_src, rates.link_dst, rates.link_flow
        ms, md = member[s], member[d]
        cross = ms != md
        enter = np.bincount(md[cross], weights=f[cross], minlength=k)
        if not enter.any():
            break
        agg = sp.coo_matrix((f[cross], (ms[cross], md[cross])), shape=(k, k)).tocsr()
        agg.sum_duplicates()
        coo = agg.tocoo()
        a_src, a_dst = coo.row.astype(np.int64), coo.col.astype(np.int64)
        sup, length = _optimize(enter, a_src, a_dst, coo.data, seed)
        one = _codelength(enter, a_src, a_dst, coo.data, np.zeros(k, dtype=np.int64))
        n_sup = int(sup.max()) + 1
        if not (1 < n_sup < k and length < one - MIN_IMPROVEMENT):
            break
        levels.append([np.flatnonzero(sup == j).tolist() for j in range(n_sup)])
        member = sup[member]
    return levels


def hierarchical_cluster(network: SimilarityNetwork, seed: int = DEFAULT_SEED,
                         teleport: float = DEFAULT_TELEPORT) -> ClusterTree:
    """Hierarchical partition: flat map-equation modules, super-modules above, sub-modules below."""
    if not network.nodes:
        return ClusterTree(Module(), 0.0)
    rates = visit_rates(network, teleport)
    member, _ = _optimize(rates.rates, rates.link_src, rates.link_dst, rates.link_flow, seed)
    k = int(member.max()) + 1
    groups = [np.flatnonzero(member == m).tolist() for m in range(k)]

    nodes = rates.nodes
    pos = {v: i for i, v in enumerate(nodes)}
    inner: list[list] = [[] for _ in range(k)]
    for e in network.edges:
        m = member[pos[e.source]]
        if m == member[pos[e.target]]:
            inner[m].append(e)
    incident = _incident_links(member, rates, k)
    mods: list[Module] = []
    for m, g in enumerate(groups):
        proposal = _split(SimilarityNetwork(tuple(nodes[i] for i in g), tuple(inner[m])), teleport, seed)
        mods.append(_accept(proposal, g, incident[m], rates))
    for level in _super_levels(groups, rates, seed):
        mods = [Module(children=[mods[i] for i in grp]) if len(grp) > 1 else mods[grp[0]]
                for grp in level]

    root = Module(children=mods)
    _sort(root)
    total = _score_tree(root, rates)
    return ClusterTree(root, total)


def _sort(m: Module) -> None:
    if m.is_leaf:
        m.articles.sort()
        return
    for c in m.children:
        _sort(c)
    m.children.sort(key=Module.sort_key)
