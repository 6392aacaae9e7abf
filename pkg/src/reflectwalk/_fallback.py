"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Walk kernels vectorise over replicas rather than steps; the neighbour choice
``indices[indptr[v] + floor(u * deg(v))]`` is evaluated with the same float64
arithmetic as the compiled loop, so trajectories agree bit for bit.
"""
import numpy as np
from scipy import ndimage


def _step(indptr, indices, v, u):
    lo = indptr[v]
    deg = (indptr[v + 1] - lo).astype(np.float64)
    return indices[lo + (u * deg).astype(np.int64)]


def walk_path(indptr, indices, start, uniforms):
    uniforms = np.asarray(uniforms, dtype=np.float64)
    out = np.empty(uniforms.shape[0] + 1, dtype=np.int32)
    v = int(start)
    out[0] = v
    ip = indptr.tolist()
    ix = indices.tolist()
    for j, u in enumerate(uniforms.tolist()):
        lo = ip[v]
        v = ix[lo + int(u * float(ip[v + 1] - lo))]
        out[j + 1] = v
    return out


def walk_record(indptr, indices, starts, uniforms, record):
    starts = np.asarray(starts, dtype=np.int32)
    record = np.asarray(record, dtype=np.int64)
    R, M = record.shape
    out = np.empty((R, M), dtype=np.int32)
    if R == 0:
        return out
    v = starts.copy()
    rows = np.arange(R)
    nxt = np.zeros(R, dtype=np.int64)
    last = int(record[:, -1].max()) if M else 0
    # record columns are nondecreasing per row; advance all rows in lockstep
    for step in range(last + 1):
        while True:
            pending = nxt < M
            hit = pending.copy()
            hit[pending] = record[rows[pending], nxt[pending]] == step
            if not hit.any():
                break
            out[rows[hit], nxt[hit]] = v[hit]
            nxt[hit] += 1
        if step == last:
            break
        v = _step(indptr, indices, v, uniforms[:, step]).astype(np.int32)
    return out


def exit_walk(indptr, indices, starts, uniforms, inside):
    inside = np.asarray(inside, dtype=bool)
    R, n = uniforms.shape
    steps = np.full(R, -1, dtype=np.int64)
    pos = np.asarray(starts, dtype=np.int32).copy()
    active = np.arange(R)
    for j in range(n):
        if active.size == 0:
            break
        pos[active] = _step(indptr, indices, pos[active], uniforms[active, j])
        left = ~inside[pos[active]]
        steps[active[left]] = j + 1
        active = active[~left]
    return steps, pos


def flood_fill(mask, seeds):
    mask = np.asarray(mask, dtype=bool)
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    labels, _ = ndimage.label(mask, structure=structure)
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1, mask.ndim)
    keep = {int(labels[tuple(s)]) for s in seeds} - {0}
    if not keep:
        return np.zeros_like(mask)
    return np.isin(labels, sorted(keep))
