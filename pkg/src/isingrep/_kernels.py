"""Hot numeric kernels (numba @njit with pure-numpy fallback, see _jit).

All kernels take plain numpy arrays; the object layer converts between
bit-packed integer configurations and uint8 edge masks at the boundary.
"""

import numpy as np

from ._jit import jit

__all__ = [
    "uf_components",
    "sw_run",
    "sw_run_collect",
    "ueg_sample",
    "component_parity",
    "kappa_table",
    "rc_tree_walk",
    "window_cycle_span",
    "odd_walk_bfs",
]


@jit
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@jit
def uf_components(n_v, edge_a, edge_b, open_bits):
    """Union-find component labels (root vertex id) of the open subgraph."""
    parent = np.empty(n_v, np.int32)
    for v in range(n_v):
        parent[v] = v
    for e in range(edge_a.size):
        if open_bits[e]:
            ra = _find(parent, edge_a[e])
            rb = _find(parent, edge_b[e])
            if ra != rb:
                parent[ra] = rb
    labels = np.empty(n_v, np.int32)
    for v in range(n_v):
        labels[v] = _find(parent, v)
    return labels


@jit
def sw_run(n_v, edge_a, edge_b, bits, p, edge_unif, vert_unif, spin_code,
           forced_vertex, forced_spin, spins_out):
    """Swendsen-Wang sweeps for the q=2 random-cluster model, in place.

    One sweep = cluster the open edges, draw a uniform spin per cluster
    (from the per-vertex uniform of the cluster root, remapped through
    spin_code so coupled chains share randomness), then reopen each
    spin-agreeing edge with probability p.  ``forced_vertex >= 0`` pins its
    cluster spin to ``forced_spin`` (plus-boundary Ising sampling).  Runs
    ``edge_unif.shape[0]`` sweeps; ``bits`` and ``spins_out`` are mutated.
    """
    n_e = edge_a.size
    parent = np.empty(n_v, np.int32)
    minrep = np.empty(n_v, np.int32)
    for s in range(edge_unif.shape[0]):
        for v in range(n_v):
            parent[v] = v
            minrep[v] = -1
        for e in range(n_e):
            if bits[e]:
                ra = _find(parent, edge_a[e])
                rb = _find(parent, edge_b[e])
                if ra != rb:
                    parent[ra] = rb
        # canonical cluster key = minimal member, so coupled chains look up
        # the same uniform for structurally equal clusters
        for v in range(n_v):
            r = _find(parent, v)
            if minrep[r] < 0:
                minrep[r] = v
        forced_root = -1
        if forced_vertex >= 0:
            forced_root = _find(parent, forced_vertex)
        for v in range(n_v):
            r = _find(parent, v)
            if r == forced_root:
                spins_out[v] = forced_spin
            elif vert_unif[s, spin_code[minrep[r]]] < 0.5:
                spins_out[v] = 1
            else:
                spins_out[v] = 0
        for e in range(n_e):
            if spins_out[edge_a[e]] == spins_out[edge_b[e]] and edge_unif[s, e] < p:
                bits[e] = 1
            else:
                bits[e] = 0


@jit
def sw_run_collect(n_v, edge_a, edge_b, bits, p, edge_unif, vert_unif,
                   spin_code, thin, out, out_start):
    """Long Swendsen-Wang run collecting the bit-packed state every ``thin`` sweeps.

    Requires <= 63 edges.  Returns the number of samples written.
    """
    n_e = edge_a.size
    parent = np.empty(n_v, np.int32)
    minrep = np.empty(n_v, np.int32)
    spins = np.empty(n_v, np.uint8)
    written = 0
    for s in range(edge_unif.shape[0]):
        for v in range(n_v):
            parent[v] = v
            minrep[v] = -1
        for e in range(n_e):
            if bits[e]:
                ra = _find(parent, edge_a[e])
                rb = _find(parent, edge_b[e])
                if ra != rb:
                    parent[ra] = rb
        for v in range(n_v):
            r = _find(parent, v)
            if minrep[r] < 0:
                minrep[r] = v
        for v in range(n_v):
            r = _find(parent, v)
            if vert_unif[s, spin_code[minrep[r]]] < 0.5:
                spins[v] = 1
            else:
                spins[v] = 0
        for e in range(n_e):
            if spins[edge_a[e]] == spins[edge_b[e]] and edge_unif[s, e] < p:
                bits[e] = 1
            else:
                bits[e] = 0
        if (s + 1) % thin == 0:
            packed = np.uint64(0)
            for e in range(n_e):
                if bits[e]:
                    packed |= np.uint64(1) << np.uint64(e)
            out[out_start + written] = packed
            written += 1
    return written


@jit
def ueg_sample(n_v, indptr, adj_edge, adj_other, edge_a, edge_b,
               open_bits, coins, out):
    """Uniform even subgraph of the open subgraph, into ``out`` (zeroed).

    Builds the deterministic BFS forest (lowest vertex first, edges in
    index order), takes the chord coins as GF(2) coefficients, and fixes
    the forest edges by propagating degree parities leaf-to-root.  The
    chord-state -> even-subgraph map is a bijection, so iid fair coins on
    the chords give the uniform (Haar) measure.
    """
    visited = np.zeros(n_v, np.uint8)
    parent_edge = np.full(n_v, -1, np.int32)
    parent_vertex = np.full(n_v, -1, np.int32)
    order = np.empty(n_v, np.int32)
    is_tree = np.zeros(open_bits.size, np.uint8)
    pos = 0
    for start in range(n_v):
        if visited[start]:
            continue
        visited[start] = 1
        order[pos] = start
        qh = pos
        pos += 1
        while qh < pos:
            v = order[qh]
            qh += 1
            for idx in range(indptr[v], indptr[v + 1]):
                e = adj_edge[idx]
                if not open_bits[e]:
                    continue
                w = adj_other[idx]
                if not visited[w]:
                    visited[w] = 1
                    parent_edge[w] = e
                    parent_vertex[w] = v
                    is_tree[e] = 1
                    order[pos] = w
                    pos += 1
    charge = np.zeros(n_v, np.uint8)
    for e in range(open_bits.size):
        if open_bits[e] and not is_tree[e]:
            c = coins[e]
            out[e] = c
            if c:
                charge[edge_a[e]] ^= 1
                charge[edge_b[e]] ^= 1
    for i in range(n_v - 1, -1, -1):
        v = order[i]
        e = parent_edge[v]
        if e >= 0:
            bit = charge[v]
            out[e] = bit
            if bit:
                charge[parent_vertex[v]] ^= 1


@jit
def component_parity(n_v, indptr, adj_edge, adj_other, open_bits, cross,
                     labels, nt_flag):
    """Components of the open subgraph with their wrap-around parity span.

    labels[v] = BFS root of v's component.  nt_flag[root] = 1 iff some
    fundamental cycle of the component crosses the hyperplane an odd
    number of times (cross[e] = 1 for outgoing edges); such a cycle is a
    simple loop, so the flag marks exactly the non-trivial components.
    """
    for v in range(n_v):
        labels[v] = -1
        nt_flag[v] = 0
    pot = np.zeros(n_v, np.uint8)
    order = np.empty(n_v, np.int32)
    parent_edge = np.full(n_v, -1, np.int32)
    pos = 0
    for start in range(n_v):
        if labels[start] >= 0:
            continue
        labels[start] = start
        order[pos] = start
        qh = pos
        pos += 1
        while qh < pos:
            v = order[qh]
            qh += 1
            for idx in range(indptr[v], indptr[v + 1]):
                e = adj_edge[idx]
                if not open_bits[e]:
                    continue
                w = adj_other[idx]
                if labels[w] < 0:
                    labels[w] = start
                    pot[w] = pot[v] ^ cross[e]
                    parent_edge[w] = e
                    order[pos] = w
                    pos += 1
                elif e != parent_edge[w] and e != parent_edge[v]:
                    if pot[v] ^ pot[w] ^ cross[e]:
                        nt_flag[start] = 1


@jit
def kappa_table(n_v, edge_a, edge_b):
    """Component count (isolated vertices included) for every configuration."""
    n_e = edge_a.size
    out = np.empty(1 << n_e, np.int16)
    parent = np.empty(n_v, np.int32)
    for m in range(1 << n_e):
        for v in range(n_v):
            parent[v] = v
        k = n_v
        for e in range(n_e):
            if (m >> e) & 1:
                ra = _find(parent, edge_a[e])
                rb = _find(parent, edge_b[e])
                if ra != rb:
                    parent[ra] = rb
                    k -= 1
        out[m] = k
    return out


@jit
def rc_tree_walk(heap, n_e, uniforms, out):
    """Sequential conditional sampling down the prefix-mass heap.

    heap[(1<<j)-1 + q] holds the total weight of configurations extending
    prefix q on edges 0..j-1.  Edge j opens iff U_j <= (mass of prefix
    with edge j open) / (mass of prefix), which realizes the increasing
    coupling when the same uniforms drive two parameters.
    """
    for i in range(uniforms.shape[0]):
        q = 0
        for j in range(n_e):
            off_j = (1 << j) - 1
            off_j1 = (1 << (j + 1)) - 1
            t = heap[off_j1 + (q | (1 << j))] / heap[off_j + q]
            if uniforms[i, j] <= t:
                q |= 1 << j
        out[i] = q


@jit
def window_cycle_span(n_v, indptr, adj_edge, adj_other, edge_a, edge_b,
                      open_bits, win_of_edge, n_window, basis_out):
    """GF(2) span basis of the cycle space restricted to window coordinates.

    win_of_edge[e] is the window position of edge e (or -1).  Builds the
    deterministic BFS forest of the open subgraph with per-vertex masks of
    window forest edges on the root path; each open chord then contributes
    the restriction of its fundamental cycle.  basis_out[k] receives the
    basis vector whose lowest set bit is k; returns the rank.
    """
    for k in range(n_window):
        basis_out[k] = 0
    visited = np.zeros(n_v, np.uint8)
    order = np.empty(n_v, np.int32)
    pot = np.zeros(n_v, np.int64)
    is_tree = np.zeros(open_bits.size, np.uint8)
    pos = 0
    for start in range(n_v):
        if visited[start]:
            continue
        visited[start] = 1
        order[pos] = start
        qh = pos
        pos += 1
        while qh < pos:
            v = order[qh]
            qh += 1
            for idx in range(indptr[v], indptr[v + 1]):
                e = adj_edge[idx]
                if not open_bits[e]:
                    continue
                w = adj_other[idx]
                if not visited[w]:
                    visited[w] = 1
                    is_tree[e] = 1
                    mask = pot[v]
                    if win_of_edge[e] >= 0:
                        mask ^= np.int64(1) << np.int64(win_of_edge[e])
                    pot[w] = mask
                    order[pos] = w
                    pos += 1
    rank = 0
    for e in range(open_bits.size):
        if not open_bits[e] or is_tree[e]:
            continue
        m = pot[edge_a[e]] ^ pot[edge_b[e]]
        if win_of_edge[e] >= 0:
            m ^= np.int64(1) << np.int64(win_of_edge[e])
        while m != 0:
            k = 0
            while not (m >> np.int64(k)) & np.int64(1):
                k += 1
            if basis_out[k] == 0:
                basis_out[k] = m
                rank += 1
                break
            m ^= basis_out[k]
    return rank


@jit
def odd_walk_bfs(n_v, indptr, adj_edge, adj_other, open_bits, cross, start,
                 pred_edge, pred_state):
    """BFS in the parity double cover from (start, 0) towards (start, 1).

    States are 2*v + parity; traversing edge e flips the parity iff
    cross[e].  Fills predecessor arrays and returns 1 when (start, 1) is
    reached, i.e. when an odd-parity closed walk through start exists.
    """
    n_states = 2 * n_v
    for s in range(n_states):
        pred_edge[s] = -1
        pred_state[s] = -1
    queue = np.empty(n_states, np.int32)
    seen = np.zeros(n_states, np.uint8)
    s0 = 2 * start
    target = s0 + 1
    seen[s0] = 1
    queue[0] = s0
    qh, qt = 0, 1
    while qh < qt:
        s = queue[qh]
        qh += 1
        v = s >> 1
        par = s & 1
        for idx in range(indptr[v], indptr[v + 1]):
            e = adj_edge[idx]
            if not open_bits[e]:
                continue
            w = adj_other[idx]
            ns = 2 * w + (par ^ cross[e])
            if not seen[ns]:
                seen[ns] = 1
                pred_edge[ns] = e
                pred_state[ns] = s
                if ns == target:
                    return 1
                queue[qt] = ns
                qt += 1
    return 0
