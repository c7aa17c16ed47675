"""Compiled inner loops for the two-level map equation.

Flows are undirected random-walk flows: node flow p = strength / 2W and
link flow w / 2W in each direction. Self-loops never appear in the link
arrays; their flow is carried by the node flow only.
"""

import numpy as np
from numba import njit

TIE_EPS = 1e-14


@njit(cache=True, nogil=True)
def plogp(x):
    if x > 0.0:
        return x * np.log2(x)
    return 0.0


@njit(cache=True, nogil=True)
def modules_codelength(mod_flow, mod_exit, node_entropy):
    """Return (L, index_term, module_term). ``node_entropy`` is sum_a plogp(p_a)."""
    sum_q = 0.0
    s_q = 0.0
    s_qp = 0.0
    for i in range(len(mod_flow)):
        q = mod_exit[i]
        sum_q += q
        s_q += plogp(q)
        s_qp += plogp(q + mod_flow[i])
    index_term = plogp(sum_q) - s_q
    module_term = -s_q - node_entropy + s_qp
    return index_term + module_term, index_term, module_term


@njit(cache=True, nogil=True)
def delta_move(p, o, w_old, w_new, q_old, f_old, q_new, f_new, sum_q, old_empties):
    """Codelength change for moving a node (flow p, out-flow o) between modules.

    w_old / w_new: link flow from the node to the other members of the old
    module and to the members of the new module.
    """
    if old_empties:
        q_old2 = 0.0
        f_old2 = 0.0
    else:
        q_old2 = max(q_old - o + 2.0 * w_old, 0.0)
        f_old2 = f_old - p
    q_new2 = max(q_new + o - 2.0 * w_new, 0.0)
    f_new2 = f_new + p
    sum_q2 = sum_q - q_old - q_new + q_old2 + q_new2
    return (
        plogp(sum_q2)
        - plogp(sum_q)
        - 2.0 * (plogp(q_old2) + plogp(q_new2) - plogp(q_old) - plogp(q_new))
        + plogp(q_old2 + f_old2)
        + plogp(q_new2 + f_new2)
        - plogp(q_old + f_old)
        - plogp(q_new + f_new)
    )


@njit(cache=True, nogil=True)
def apply_move(node, old, new, p, o, w_old, w_new, mod_flow, mod_exit, mod_size, state):
    """Move ``node`` from ``old`` to ``new``; state[0] holds sum of exit flows."""
    q_old, q_new = mod_exit[old], mod_exit[new]
    if mod_size[old] == 1:
        q_old2 = 0.0
        f_old2 = 0.0
    else:
        q_old2 = max(q_old - o + 2.0 * w_old, 0.0)
        f_old2 = mod_flow[old] - p
    q_new2 = max(q_new + o - 2.0 * w_new, 0.0)
    state[0] += q_old2 + q_new2 - q_old - q_new
    mod_exit[old] = q_old2
    mod_exit[new] = q_new2
    mod_flow[old] = f_old2
    mod_flow[new] += p
    mod_size[old] -= 1
    mod_size[new] += 1


@njit(cache=True, nogil=True)
def init_modules(indptr, indices, flows, node_flow, labels, n_ids):
    mod_flow = np.zeros(n_ids)
    mod_exit = np.zeros(n_ids)
    mod_size = np.zeros(n_ids, dtype=np.int64)
    for a in range(len(labels)):
        m = labels[a]
        mod_flow[m] += node_flow[a]
        mod_size[m] += 1
        for k in range(indptr[a], indptr[a + 1]):
            if labels[indices[k]] != m:
                mod_exit[m] += flows[k]
    return mod_flow, mod_exit, mod_size


@njit(cache=True, nogil=True)
def sweep(indptr, indices, flows, node_flow, node_out, labels, mod_flow, mod_exit, mod_size,
          free_ids, n_free, state, order, scratch, marked, touched):
    """One pass over ``order``; each node takes its best strictly improving move.

    Candidates are the modules of its neighbours plus one empty module. Among
    equal codelength changes the lowest module id wins. ``free_ids[:n_free[0]]``
    is a stack of empty module ids. Returns the number of moves.
    """
    moves = 0
    for alpha in order:
        a = labels[alpha]
        p = node_flow[alpha]
        o = node_out[alpha]
        nt = 0
        for k in range(indptr[alpha], indptr[alpha + 1]):
            m = labels[indices[k]]
            if not marked[m]:
                marked[m] = True
                touched[nt] = m
                nt += 1
            scratch[m] += flows[k]
        w_a = scratch[a]
        old_empties = mod_size[a] == 1
        best_d = np.inf
        best_m = -1
        best_w = 0.0
        for t in range(nt):
            m = touched[t]
            if m == a:
                continue
            d = delta_move(p, o, w_a, scratch[m], mod_exit[a], mod_flow[a],
                           mod_exit[m], mod_flow[m], state[0], old_empties)
            if d < best_d - TIE_EPS or (abs(d - best_d) <= TIE_EPS and m < best_m):
                best_d = d
                best_m = m
                best_w = scratch[m]
        if not old_empties and n_free[0] > 0:
            m = free_ids[n_free[0] - 1]
            d = delta_move(p, o, w_a, 0.0, mod_exit[a], mod_flow[a], 0.0, 0.0, state[0], False)
            if d < best_d - TIE_EPS or (abs(d - best_d) <= TIE_EPS and m < best_m):
                best_d = d
                best_m = m
                best_w = 0.0
        for t in range(nt):
            scratch[touched[t]] = 0.0
            marked[touched[t]] = False
        if best_m >= 0 and best_d < -TIE_EPS:
            if mod_size[best_m] == 0:
                n_free[0] -= 1
            apply_move(alpha, a, best_m, p, o, w_a, best_w, mod_flow, mod_exit, mod_size, state)
            if mod_size[a] == 0:
                free_ids[n_free[0]] = a
                n_free[0] += 1
            labels[alpha] = best_m
            moves += 1
    return moves


@njit(cache=True, nogil=True)
def partition_codelength(n, src, dst, flow, node_flow, labels, node_entropy, mod_flow, mod_exit):
    for i in range(n):
        mod_flow[i] = 0.0
        mod_exit[i] = 0.0
    for a in range(n):
        mod_flow[labels[a]] += node_flow[a]
    for e in range(len(src)):
        mu = labels[src[e]]
        mv = labels[dst[e]]
        if mu != mv:
            mod_exit[mu] += flow[e]
            mod_exit[mv] += flow[e]
    L, _, _ = modules_codelength(mod_flow, mod_exit, node_entropy)
    return L


@njit(cache=True, nogil=True)
def enumerate_partitions(n, src, dst, flow, node_flow, node_entropy, tol):
    """Exhaustive search over set partitions in lexicographic restricted-growth order.

    Returns (best labels, best L, number of partitions visited). A later
    partition replaces the incumbent only if better by more than ``tol``.
    """
    a = np.zeros(n, dtype=np.int64)
    pmax = np.zeros(n, dtype=np.int64)  # pmax[i] = max(a[0..i])
    mod_flow = np.zeros(n)
    mod_exit = np.zeros(n)
    best = a.copy()
    best_L = partition_codelength(n, src, dst, flow, node_flow, a, node_entropy, mod_flow, mod_exit)
    count = 1
    while True:
        i = n - 1
        while i >= 1 and a[i] > pmax[i - 1]:
            i -= 1
        if i < 1:
            break
        a[i] += 1
        pmax[i] = max(pmax[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            pmax[j] = pmax[i]
        count += 1
        L = partition_codelength(n, src, dst, flow, node_flow, a, node_entropy, mod_flow, mod_exit)
        if L < best_L - tol:
            best_L = L
            best[:] = a
    return best, best_L, count
