"""Message-passing kernels.

Every kernel exists twice: ``*_nb`` is a plain loop compiled with numba and
``*_np`` is a vectorized numpy version.  The un-suffixed name dispatches to
the numba flavour unless numba is unavailable or disabled
(``NRLAB_DISABLE_NUMBA=1``).  Both flavours must return identical results;
the test suite checks that on random inputs.

Layout (see :class:`nrlab.ldpc.TannerGraph`): ``var_adj`` is (n, dv),
``check_edges`` is (m, dc) with variable-major edge ids ``v * dv + j``.
Symbols are uint8 with 2 meaning erased.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

ERASED = np.uint8(2)
LLR_CLAMP = 30.0


# ---------------------------------------------------------------------------
# one synchronous peeling round


@njit(cache=True)
def peel_round_nb(word, check_edges, dv):
    """Resolve every check that sees exactly one erasure; return #resolved."""
    m, dc = check_edges.shape
    out = word.copy()
    resolved = 0
    for c in range(m):
        cnt = 0
        acc = 0
        last = -1
        for j in range(dc):
            v = check_edges[c, j] // dv
            s = word[v]
            if s == 2:
                cnt += 1
                last = v
                if cnt > 1:
                    break
            else:
                acc ^= s
        if cnt == 1 and out[last] == 2:
            out[last] = acc
            resolved += 1
    word[:] = out
    return resolved


def peel_round_np(word, check_edges, dv):
    check_vars = check_edges // dv
    vals = word[check_vars]
    er = vals == ERASED
    cnt = er.sum(axis=1)
    par = np.bitwise_xor.reduce(np.where(er, 0, vals), axis=1)
    hit = np.flatnonzero(cnt == 1)
    if hit.size == 0:
        return 0
    pos = np.argmax(er[hit], axis=1)
    targets = check_vars[hit, pos]
    # a variable freed by several checks gets the first one's value (all agree without errors)
    targets, first = np.unique(targets, return_index=True)
    word[targets] = par[hit][first]
    return int(targets.size)


# ---------------------------------------------------------------------------
# generalized error/erasure decoder: one iteration of per-edge messages


@njit(cache=True)
def gen_iteration_nb(init, fixed, v2c, check_edges, dv, pi, tau):
    """Check update then variable update; returns (new v2c, c2v)."""
    m, dc = check_edges.shape
    E = v2c.shape[0]
    c2v = np.empty(E, dtype=np.uint8)
    for c in range(m):
        cnt = 0
        acc = 0
        for j in range(dc):
            s = v2c[check_edges[c, j]]
            if s == 2:
                cnt += 1
            else:
                acc ^= s
        for j in range(dc):
            e = check_edges[c, j]
            s = v2c[e]
            if s == 2:
                c2v[e] = acc if cnt == 1 else 2
            else:
                c2v[e] = (acc ^ s) if cnt == 0 else 2
    n = init.shape[0]
    out = np.empty(E, dtype=np.uint8)
    for v in range(n):
        n0 = 0
        n1 = 0
        base = v * dv
        for j in range(dv):
            s = c2v[base + j]
            if s == 0:
                n0 += 1
            elif s == 1:
                n1 += 1
        s0 = init[v]
        for j in range(dv):
            e = base + j
            k0 = n0 - (1 if c2v[e] == 0 else 0)
            k1 = n1 - (1 if c2v[e] == 1 else 0)
            out[e] = _var_rule(s0, fixed[v], k0, k1, pi, tau)
    return out, c2v


@njit(cache=True)
def _var_rule(s0, is_fixed, k0, k1, pi, tau):
    if is_fixed:
        return s0
    if s0 == 2:
        if k0 >= pi and k1 == 0:
            return 0
        if k1 >= pi and k0 == 0:
            return 1
        return 2
    if s0 == 0:
        return 1 if (k1 >= tau and k0 == 0) else 0
    return 0 if (k0 >= tau and k1 == 0) else 1


def _var_rule_np(s0, is_fixed, k0, k1, pi, tau):
    out = s0.copy()
    er = (s0 == ERASED) & ~is_fixed
    out[er & (k0 >= pi) & (k1 == 0)] = 0
    out[er & (k1 >= pi) & (k0 == 0)] = 1
    flip0 = (s0 == 0) & ~is_fixed & (k1 >= tau) & (k0 == 0)
    flip1 = (s0 == 1) & ~is_fixed & (k0 >= tau) & (k1 == 0)
    out[flip0] = 1
    out[flip1] = 0
    return out


def _check_update_np(v2c, check_edges):
    msgs = v2c[check_edges]
    er = msgs == ERASED
    cnt = er.sum(axis=1, keepdims=True)
    acc = np.bitwise_xor.reduce(np.where(er, 0, msgs), axis=1, keepdims=True)
    others_erased = cnt - er
    val = np.where(er, acc, acc ^ msgs)
    res = np.where(others_erased > 0, ERASED, val).astype(np.uint8)
    c2v = np.empty(v2c.shape[0], dtype=np.uint8)
    c2v[check_edges.reshape(-1)] = res.reshape(-1)
    return c2v


def gen_iteration_np(init, fixed, v2c, check_edges, dv, pi, tau):
    c2v = _check_update_np(v2c, check_edges)
    per_var = c2v.reshape(-1, dv)
    n0 = (per_var == 0).sum(axis=1, keepdims=True)
    n1 = (per_var == 1).sum(axis=1, keepdims=True)
    k0 = n0 - (per_var == 0)
    k1 = n1 - (per_var == 1)
    s0 = np.repeat(init, dv).reshape(-1, dv)
    fx = np.repeat(fixed, dv).reshape(-1, dv)
    out = _var_rule_np(s0, fx, k0, k1, pi, tau)
    return out.reshape(-1).astype(np.uint8), c2v


@njit(cache=True)
def gen_decide_nb(init, fixed, c2v, dv, pi, tau):
    n = init.shape[0]
    out = np.empty(n, dtype=np.uint8)
    for v in range(n):
        n0 = 0
        n1 = 0
        for j in range(dv):
            s = c2v[v * dv + j]
            if s == 0:
                n0 += 1
            elif s == 1:
                n1 += 1
        out[v] = _var_rule(init[v], fixed[v], n0, n1, pi, tau)
    return out


def gen_decide_np(init, fixed, c2v, dv, pi, tau):
    per_var = c2v.reshape(-1, dv)
    n0 = (per_var == 0).sum(axis=1)
    n1 = (per_var == 1).sum(axis=1)
    return _var_rule_np(init.copy(), fixed, n0, n1, pi, tau).astype(np.uint8)


# ---------------------------------------------------------------------------
# sum-product (tanh rule)


@njit(cache=True)
def bp_iteration_nb(llr, v2c, check_edges, dv, clamp):
    """One flooding iteration; returns (new v2c, total LLR per variable)."""
    m, dc = check_edges.shape
    E = v2c.shape[0]
    c2v = np.empty(E)
    tt = np.empty(dc)
    for c in range(m):
        # product of |tanh| over the check; near-zero factors counted apart
        # so the extrinsic product is a division
        prod = 1.0
        zeros = 0
        neg = 0
        for j in range(dc):
            t = np.tanh(0.5 * v2c[check_edges[c, j]])
            tt[j] = t
            a = abs(t)
            if a < 1e-300:
                zeros += 1
            else:
                prod *= a
            if t < 0:
                neg ^= 1
        for j in range(dc):
            a = abs(tt[j])
            if a < 1e-300:
                mag = prod if zeros == 1 else 0.0
            else:
                mag = 0.0 if zeros else prod / a
            if mag > 1.0 - 1e-15:
                mag = 1.0 - 1e-15
            sgn = neg ^ (1 if tt[j] < 0 else 0)
            val = 2.0 * np.arctanh(mag)
            if val > clamp:
                val = clamp
            c2v[check_edges[c, j]] = -val if sgn else val
    n = llr.shape[0]
    total = np.empty(n)
    out = np.empty(E)
    for v in range(n):
        s = llr[v]
        for j in range(dv):
            s += c2v[v * dv + j]
        total[v] = s
        for j in range(dv):
            x = s - c2v[v * dv + j]
            if x > clamp:
                x = clamp
            elif x < -clamp:
                x = -clamp
            out[v * dv + j] = x
    return out, total


def bp_iteration_np(llr, v2c, check_edges, dv, clamp):
    t = np.tanh(0.5 * v2c[check_edges])
    a = np.maximum(np.abs(t), 1e-300)
    la = np.log(a)
    logmag = la.sum(axis=1, keepdims=True)
    neg = (t < 0)
    parity = np.bitwise_xor.reduce(neg.astype(np.uint8), axis=1, keepdims=True)
    mag = np.minimum(np.exp(logmag - la), 1.0 - 1e-15)
    sgn = parity ^ neg.astype(np.uint8)
    val = np.minimum(2.0 * np.arctanh(mag), clamp)
    msgs = np.where(sgn == 1, -val, val)
    c2v = np.empty(v2c.shape[0])
    c2v[check_edges.reshape(-1)] = msgs.reshape(-1)
    per_var = c2v.reshape(-1, dv)
    total = llr + per_var.sum(axis=1)
    out = np.clip(total[:, None] - per_var, -clamp, clamp).reshape(-1)
    return out, total


# ---------------------------------------------------------------------------
# BEC flooding on erasure flags (message-level view of peeling)


@njit(cache=True)
def bec_flood_nb(active, v2c, check_edges, dv):
    """One flooding round on erasure flags.

    ``active`` marks bits still unknown at the node (channel erasures not yet
    recovered), ``v2c`` the erased variable-to-check messages.  Returns the
    new v2c flags and the per-node flag "every incoming check message erased".
    """
    m, dc = check_edges.shape
    E = v2c.shape[0]
    c2v = np.empty(E, dtype=np.bool_)
    for c in range(m):
        cnt = 0
        for j in range(dc):
            if v2c[check_edges[c, j]]:
                cnt += 1
        for j in range(dc):
            e = check_edges[c, j]
            c2v[e] = (cnt - (1 if v2c[e] else 0)) > 0
    n = active.shape[0]
    out = np.zeros(E, dtype=np.bool_)
    node = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if not active[v]:
            continue
        base = v * dv
        cnt = 0
        for j in range(dv):
            if c2v[base + j]:
                cnt += 1
        node[v] = cnt == dv
        for j in range(dv):
            out[base + j] = (cnt - (1 if c2v[base + j] else 0)) == dv - 1
    return out, node


def bec_flood_np(active, v2c, check_edges, dv):
    msgs = v2c[check_edges]
    cnt = msgs.sum(axis=1, keepdims=True)
    c2v = np.empty(v2c.shape[0], dtype=bool)
    c2v[check_edges.reshape(-1)] = ((cnt - msgs) > 0).reshape(-1)
    per_var = c2v.reshape(-1, dv)
    tot = per_var.sum(axis=1)
    out = active[:, None] & ((tot[:, None] - per_var) == dv - 1)
    return out.reshape(-1), active & (tot == dv)


# ---------------------------------------------------------------------------
# dispatch

if HAVE_NUMBA:
    peel_round = peel_round_nb
    gen_iteration = gen_iteration_nb
    gen_decide = gen_decide_nb
    bp_iteration = bp_iteration_nb
    bec_flood = bec_flood_nb
else:
    peel_round = peel_round_np
    gen_iteration = gen_iteration_np
    gen_decide = gen_decide_np
    bp_iteration = bp_iteration_np
    bec_flood = bec_flood_np
