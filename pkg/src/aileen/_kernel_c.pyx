# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled branch-and-bound over base-entity assignments.

Same contract and tie-breaking as ``_kernel_py``; see that module for the
array encoding.
"""

from libc.stdlib cimport malloc, free

cdef double EPS = 1e-12


cdef struct Problem:
    int n_be
    int nb
    const double* fw
    const int* fslot_ptr
    const int* fslot_ent
    const int* fcand_ptr
    const int* fcand_tf
    const int* tslot_ptr
    const int* tslot_ent
    const int* order
    const int* ecand_ptr
    const int* ecand_t
    const int* fixed
    int* assign
    char* used
    int* best_assign
    double best


cdef double _bound(Problem* p) noexcept nogil:
    cdef double total = 0.0
    cdef int i, k, c, tf, t0, s0, s1, a, t
    cdef bint dead, ok
    for i in range(p.nb):
        s0 = p.fslot_ptr[i]
        s1 = p.fslot_ptr[i + 1]
        dead = False
        for k in range(s0, s1):
            if p.assign[p.fslot_ent[k]] == -1:
                dead = True
                break
        if dead:
            continue
        for c in range(p.fcand_ptr[i], p.fcand_ptr[i + 1]):
            tf = p.fcand_tf[c]
            t0 = p.tslot_ptr[tf]
            ok = True
            for k in range(s1 - s0):
                a = p.assign[p.fslot_ent[s0 + k]]
                t = p.tslot_ent[t0 + k]
                if a >= 0:
                    if a != t:
                        ok = False
                        break
                elif p.used[t]:
                    ok = False
                    break
            if ok:
                total += p.fw[i]
                break
    return total


cdef void _dfs(Problem* p, int depth) noexcept nogil:
    cdef double b = _bound(p)
    cdef int e, c, t, i
    if b <= p.best + EPS:
        return
    if depth == p.n_be:
        p.best = b
        for i in range(p.n_be):
            p.best_assign[i] = p.assign[i]
        return
    e = p.order[depth]
    if p.fixed[e] != -2:
        _dfs(p, depth + 1)
        return
    for c in range(p.ecand_ptr[e], p.ecand_ptr[e + 1]):
        t = p.ecand_t[c]
        if p.used[t]:
            continue
        p.assign[e] = t
        p.used[t] = 1
        _dfs(p, depth + 1)
        p.used[t] = 0
    p.assign[e] = -1
    _dfs(p, depth + 1)
    p.assign[e] = -2


cdef int* _ints(object seq, list keep) except NULL:
    cdef int n = len(seq)
    cdef int* buf = <int*> malloc(sizeof(int) * (n if n > 0 else 1))
    cdef int i
    if buf == NULL:
        raise MemoryError()
    keep.append(<size_t> buf)
    for i in range(n):
        buf[i] = seq[i]
    return buf


def bound(fw, fslot_ptr, fslot_ent, fcand_ptr, fcand_tf, tslot_ptr, tslot_ent, assign, used):
    cdef Problem p
    cdef list keep = []
    cdef int nb = len(fw), i
    cdef double* w = <double*> malloc(sizeof(double) * (nb if nb > 0 else 1))
    cdef double out
    try:
        for i in range(nb):
            w[i] = fw[i]
        p.nb = nb
        p.fw = w
        p.fslot_ptr = _ints(fslot_ptr, keep)
        p.fslot_ent = _ints(fslot_ent, keep)
        p.fcand_ptr = _ints(fcand_ptr, keep)
        p.fcand_tf = _ints(fcand_tf, keep)
        p.tslot_ptr = _ints(tslot_ptr, keep)
        p.tslot_ent = _ints(tslot_ent, keep)
        p.assign = _ints(assign, keep)
        p.used = <char*> malloc(max(len(used), 1))
        keep.append(<size_t> p.used)
        for i in range(len(used)):
            p.used[i] = 1 if used[i] else 0
        out = _bound(&p)
    finally:
        free(w)
        for ptr in keep:
            free(<void*> <size_t> ptr)
    return out


def search(int n_te, fw, fslot_ptr, fslot_ent, fcand_ptr, fcand_tf, tslot_ptr, tslot_ent,
           order, ecand_ptr, ecand_t, fixed):
    """Return (assignment, best_score) maximizing the aligned base weight."""
    cdef Problem p
    cdef list keep = []
    cdef int n_be = len(order), nb = len(fw), i
    cdef double* w = <double*> malloc(sizeof(double) * (nb if nb > 0 else 1))
    cdef list result
    try:
        for i in range(nb):
            w[i] = fw[i]
        p.n_be = n_be
        p.nb = nb
        p.fw = w
        p.fslot_ptr = _ints(fslot_ptr, keep)
        p.fslot_ent = _ints(fslot_ent, keep)
        p.fcand_ptr = _ints(fcand_ptr, keep)
        p.fcand_tf = _ints(fcand_tf, keep)
        p.tslot_ptr = _ints(tslot_ptr, keep)
        p.tslot_ent = _ints(tslot_ent, keep)
        p.order = _ints(order, keep)
        p.ecand_ptr = _ints(ecand_ptr, keep)
        p.ecand_t = _ints(ecand_t, keep)
        p.fixed = _ints(fixed, keep)
        p.assign = _ints([-2] * n_be, keep)
        p.best_assign = _ints([-2] * n_be, keep)
        p.used = <char*> malloc(n_te if n_te > 0 else 1)
        keep.append(<size_t> p.used)
        for i in range(n_te):
            p.used[i] = 0
        for i in range(n_be):
            if p.fixed[i] != -2:
                p.assign[i] = p.fixed[i]
                if p.fixed[i] >= 0:
                    p.used[p.fixed[i]] = 1
        p.best = -1.0
        with nogil:
            _dfs(&p, 0)
        result = [p.best_assign[i] for i in range(n_be)]
        return result, p.best
    finally:
        free(w)
        for ptr in keep:
            free(<void*> <size_t> ptr)
