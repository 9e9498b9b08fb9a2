"""Pure-Python branch-and-bound over base-entity assignments.

Flat-array twin of ``_kernel_c.pyx``; both expose ``search`` and ``bound``
with identical signatures and identical tie-breaking.

Encoding (all int arrays are CSR style, ``*_ptr`` has length n+1):
  fw          weight of base fact i
  fslot_*     base-entity index per entity slot of base fact i
  fcand_*     target facts sharing base fact i's signature
  tslot_*     target-entity index per entity slot of target fact j
  order       base entities in search order
  ecand_*     target entities base entity e may map to, in preference order
  fixed       -2 free, otherwise a pinned target entity (or -1 unmapped)
Assignment values: -2 unassigned, -1 unmapped, >= 0 target entity.
"""

EPS = 1e-12


def bound(fw, fslot_ptr, fslot_ent, fcand_ptr, fcand_tf, tslot_ptr, tslot_ent, assign, used):
    total = 0.0
    for i in range(len(fw)):
        s0, s1 = fslot_ptr[i], fslot_ptr[i + 1]
        dead = False
        for k in range(s0, s1):
            if assign[fslot_ent[k]] == -1:
                dead = True
                break
        if dead:
            continue
        for c in range(fcand_ptr[i], fcand_ptr[i + 1]):
            tf = fcand_tf[c]
            t0 = tslot_ptr[tf]
            ok = True
            for k in range(s1 - s0):
                a = assign[fslot_ent[s0 + k]]
                t = tslot_ent[t0 + k]
                if a >= 0:
                    if a != t:
                        ok = False
                        break
                elif used[t]:
                    ok = False
                    break
            if ok:
                total += fw[i]
                break
    return total


def search(n_te, fw, fslot_ptr, fslot_ent, fcand_ptr, fcand_tf, tslot_ptr, tslot_ent,
           order, ecand_ptr, ecand_t, fixed):
    """Return (assignment, best_score) maximizing the aligned base weight."""
    n_be = len(order)
    assign = [-2] * n_be
    used = [False] * max(n_te, 1)
    for e in range(n_be):
        if fixed[e] != -2:
            assign[e] = fixed[e]
            if fixed[e] >= 0:
                used[fixed[e]] = True
    best = [-1.0, None]
    args = (fw, fslot_ptr, fslot_ent, fcand_ptr, fcand_tf, tslot_ptr, tslot_ent)

    def dfs(depth):
        b = bound(*args, assign, used)
        if b <= best[0] + EPS:
            return
        if depth == n_be:
            best[0] = b
            best[1] = list(assign)
            return
        e = order[depth]
        if fixed[e] != -2:
            dfs(depth + 1)
            return
        for c in range(ecand_ptr[e], ecand_ptr[e + 1]):
            t = ecand_t[c]
            if used[t]:
                continue
            assign[e] = t
            used[t] = True
            dfs(depth + 1)
            used[t] = False
        assign[e] = -1
        dfs(depth + 1)
        assign[e] = -2

    dfs(0)
    return best[1], best[0]
