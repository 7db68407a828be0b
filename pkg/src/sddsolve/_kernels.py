"""Compiled inner loops.

Everything here works on flat integer/float arrays so numba can compile
it; the public modules wrap these with validation and nicer types.
"""

import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# centroid decomposition of a tree
# ---------------------------------------------------------------------------

@njit(cache=True)
def centroid_tables(indptr, nbr, res, n, nlev):
    """Recursive centroid splitting of a tree given as symmetric CSR.

    For every level ``d`` and vertex ``x`` still present at that level,
    ``cent[d, x]`` is the centroid of the component holding ``x``,
    ``dist[d, x]`` the tree-path resistance from ``x`` to that centroid and
    ``par[d, x]`` the parent of ``x`` when the component is rooted at the
    centroid.  ``clevel[c]`` is the level at which ``c`` was chosen and
    ``cparent[c]`` the centroid that split off its component (-1 at the top).
    """
    cent = np.full((nlev, n), -1, np.int32)
    dist = np.zeros((nlev, n))
    par = np.full((nlev, n), -1, np.int32)
    clevel = np.full(n, -1, np.int32)
    cparent = np.full(n, -1, np.int32)
    removed = np.zeros(n, np.bool_)
    q = np.empty(n, np.int64)
    bpar = np.empty(n, np.int64)
    size = np.empty(n, np.int64)
    big = np.empty(n, np.int64)
    st_v = np.empty(n, np.int64)
    st_d = np.empty(n, np.int64)
    st_p = np.empty(n, np.int64)
    top = 0
    for s in range(n):
        if clevel[s] >= 0 or removed[s]:
            continue
        # each connected piece of a forest starts its own decomposition
        if s > 0 and cent[0, s] >= 0:
            continue
        st_v[top] = s
        st_d[top] = 0
        st_p[top] = -1
        top += 1
        while top > 0:
            top -= 1
            s0 = st_v[top]
            d = st_d[top]
            pc = st_p[top]
            # collect the component
            q[0] = s0
            bpar[s0] = -1
            k = 1
            i = 0
            while i < k:
                x = q[i]
                i += 1
                size[x] = 1
                big[x] = 0
                for a in range(indptr[x], indptr[x + 1]):
                    y = nbr[a]
                    if y != bpar[x] and not removed[y]:
                        bpar[y] = x
                        q[k] = y
                        k += 1
            for i in range(k - 1, 0, -1):
                x = q[i]
                p = bpar[x]
                size[p] += size[x]
                if size[x] > big[p]:
                    big[p] = size[x]
            c = -1
            best = k + 1
            for i in range(k):
                x = q[i]
                worst = max(big[x], k - size[x])
                if worst < best or (worst == best and x < c):
                    best = worst
                    c = x
            clevel[c] = d
            cparent[c] = pc
            # distances from the centroid
            q[0] = c
            cent[d, c] = c
            dist[d, c] = 0.0
            par[d, c] = -1
            k = 1
            i = 0
            while i < k:
                x = q[i]
                i += 1
                for a in range(indptr[x], indptr[x + 1]):
                    y = nbr[a]
                    if y != par[d, x] and not removed[y]:
                        par[d, y] = x
                        cent[d, y] = c
                        dist[d, y] = dist[d, x] + res[a]
                        q[k] = y
                        k += 1
            removed[c] = True
            for a in range(indptr[c + 1] - 1, indptr[c] - 1, -1):
                y = nbr[a]
                if not removed[y]:
                    st_v[top] = y
                    st_d[top] = d + 1
                    st_p[top] = c
                    top += 1
    return cent, dist, par, clevel, cparent


@njit(cache=True)
def separating_centroid(cent, dist, clevel, u, v):
    """Level, centroid and path resistance for each vertex pair ``(u[i], v[i])``."""
    m = len(u)
    lev = np.empty(m, np.int64)
    root = np.empty(m, np.int64)
    r = np.empty(m)
    for i in range(m):
        a = u[i]
        b = v[i]
        top = min(clevel[a], clevel[b])
        d = 0
        while d < top and cent[d + 1, a] == cent[d + 1, b]:
            d += 1
        lev[i] = d
        root[i] = cent[d, a]
        r[i] = dist[d, a] + dist[d, b]
    return lev, root, r


# ---------------------------------------------------------------------------
# tree decomposition
# ---------------------------------------------------------------------------

@njit(cache=True)
def decompose_pass(n, root, parent, cptr, child, vmass, t, total):
    """One post-order sweep forming the vertex sets.

    ``vmass[x]`` is the summed mass of edges incident to ``x`` (an edge
    counts at both ends).  Thresholds are compared after multiplying by
    ``t`` so integer masses are handled exactly: ``w >= phi`` becomes
    ``t*w >= 2*total``.

    Returns ``label`` (the set each vertex's pending group was closed into),
    ``extra`` (pairs ``(set, vertex)`` for vertices added on top of a
    closed group) and the number of sets.
    """
    two = 2 * total
    four = 4 * total
    label = np.full(n, -1, np.int64)
    extra_s = np.empty(n, np.int64)
    extra_v = np.empty(n, np.int64)
    nextra = 0
    h = 0
    nxt = np.full(n, -1, np.int64)
    # per-vertex running state: pending list and its mass
    head = np.full(n, -1, np.int64)
    tail = np.full(n, -1, np.int64)
    wsub = np.zeros(n, vmass.dtype)
    # returned values of each child
    rhead = np.full(n, -1, np.int64)
    rtail = np.full(n, -1, np.int64)
    rw = np.zeros(n, vmass.dtype)
    top = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int64)
    pos = np.empty(n, np.int64)
    sp = 0
    stack[0] = root
    pos[root] = cptr[root]
    sp = 1
    while sp > 0:
        v = stack[sp - 1]
        if pos[v] > cptr[v]:
            # fold in the child that just returned
            c = child[pos[v] - 1]
            wsub[v] += rw[c]
            if rhead[c] >= 0:
                if head[v] < 0:
                    head[v] = rhead[c]
                else:
                    nxt[tail[v]] = rhead[c]
                tail[v] = rtail[c]
            if t * wsub[v] >= two:
                x = head[v]
                while x >= 0:
                    label[x] = h
                    x = nxt[x]
                extra_s[nextra] = h
                extra_v[nextra] = v
                nextra += 1
                h += 1
                wsub[v] = 0
                head[v] = -1
                tail[v] = -1
        if pos[v] < cptr[v + 1]:
            c = child[pos[v]]
            pos[v] += 1
            pos[c] = cptr[c]
            stack[sp] = c
            sp += 1
            continue
        sp -= 1
        tot = wsub[v] + vmass[v]
        if two <= t * tot and t * tot <= four:
            x = head[v]
            while x >= 0:
                label[x] = h
                x = nxt[x]
            label[v] = h
            top[v] = True
            h += 1
            rw[v] = 0
            rhead[v] = -1
            rtail[v] = -1
        elif t * tot > four:
            if head[v] >= 0:
                # the pending groups hang off v; keep v as attachment point
                # so the set stays connected
                x = head[v]
                while x >= 0:
                    label[x] = h
                    x = nxt[x]
                extra_s[nextra] = h
                extra_v[nextra] = v
                nextra += 1
                h += 1
            label[v] = h
            h += 1
            rw[v] = 0
            rhead[v] = -1
            rtail[v] = -1
        else:
            rw[v] = tot
            if head[v] < 0:
                rhead[v] = v
            else:
                rhead[v] = head[v]
                nxt[tail[v]] = v
            rtail[v] = v
    if rhead[root] >= 0:
        target = h
        if rw[root] == 0 and h >= t:
            # a massless leftover would push the count past t; fold it into
            # a set touching it instead (sets attached at a leftover vertex,
            # or closed whole right below one)
            for k in range(nextra):
                if label[extra_v[k]] < 0:
                    target = extra_s[k]
                    break
            if target == h:
                for y in range(n):
                    if y != root and top[y] and label[parent[y]] < 0:
                        target = label[y]
                        break
        x = rhead[root]
        while x >= 0:
            label[x] = target
            x = nxt[x]
        if target == h:
            h += 1
    return label, extra_s[:nextra].copy(), extra_v[:nextra].copy(), h


# ---------------------------------------------------------------------------
# triangular solves for the partial Cholesky factor
# ---------------------------------------------------------------------------

@njit(cache=True)
def forward_sub(nelim, piv, lptr, lidx, lval, y):
    """In-place solve with the eliminated block of a column-stored factor.

    Column ``k`` (``k < nelim``) has diagonal ``piv[k]`` and off-diagonal
    entries ``lval`` at rows ``lidx`` (all > k).  Rows ``>= nelim`` form an
    identity block.
    """
    for k in range(nelim):
        yk = y[k] / piv[k]
        y[k] = yk
        for a in range(lptr[k], lptr[k + 1]):
            y[lidx[a]] -= lval[a] * yk


@njit(cache=True)
def backward_sub(nelim, piv, lptr, lidx, lval, y):
    """In-place solve with the transpose of the factor used in :func:`forward_sub`."""
    for k in range(nelim - 1, -1, -1):
        s = y[k]
        for a in range(lptr[k], lptr[k + 1]):
            s -= lval[a] * y[lidx[a]]
        y[k] = s / piv[k]


@njit(cache=True)
def accumulate_down(order, parent, step):
    """``out[x] = out[parent[x]] + step[x]`` evaluated root first."""
    out = np.zeros(len(order), step.dtype)
    for i in range(1, len(order)):
        x = order[i]
        out[x] = out[parent[x]] + step[x]
    return out
