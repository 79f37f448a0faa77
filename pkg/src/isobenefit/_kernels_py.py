"""Pure-Python lattice kernels.

Same signatures and bit-identical results as the compiled ``_kernels``
extension; used when the extension is unavailable or when
``ISOBENEFIT_PURE_PYTHON=1`` is set.
"""
import heapq
import math

import numpy as np

_INF = math.inf


def _neighbours(height, width):
    """Precompute the 8-neighbourhood of every cell as (index, step kind)."""
    out = []
    for r in range(height):
        for c in range(width):
            nb = []
            for dr in (-1, 0, 1):
                rr = r + dr
                if rr < 0 or rr >= height:
                    continue
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    cc = c + dc
                    if cc < 0 or cc >= width:
                        continue
                    nb.append((rr * width + cc, dr != 0 and dc != 0))
            out.append(nb)
    return out


_NB_CACHE = {}


def relax_field(dist, height, width, cell_size, seeds):
    """Multi-source Dijkstra in place on a flat float64 array of meters.

    ``seeds`` are flat indices set to 0 and expanded. Cells are only
    updated where the new path is strictly shorter, so calling this on an
    existing field with extra seeds gives the field of the source union.
    """
    key = (height, width)
    nbs = _NB_CACHE.get(key)
    if nbs is None:
        nbs = _NB_CACHE[key] = _neighbours(height, width)
    ortho = float(cell_size)
    diag = float(cell_size) * math.sqrt(2.0)
    d = dist.tolist()
    heap = []
    for s in seeds:
        s = int(s)
        if d[s] > 0.0:
            d[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    pop = heapq.heappop
    push = heapq.heappush
    while heap:
        du, u = pop(heap)
        if du > d[u]:
            continue
        for v, is_diag in nbs[u]:
            nd = du + (diag if is_diag else ortho)
            if nd < d[v]:
                d[v] = nd
                push(heap, (nd, v))
    dist[:] = d


def label_regions(mask, height, width):
    """4-connected labelling of a flat uint8 mask.

    Labels are assigned in row-major order of each region's first cell;
    non-members get -1. Returns (labels, count).
    """
    m = mask.tolist()
    n = height * width
    labels = [-1] * n
    count = 0
    for start in range(n):
        if not m[start] or labels[start] != -1:
            continue
        labels[start] = count
        stack = [start]
        while stack:
            u = stack.pop()
            r, c = divmod(u, width)
            if r > 0:
                v = u - width
                if m[v] and labels[v] == -1:
                    labels[v] = count
                    stack.append(v)
            if r < height - 1:
                v = u + width
                if m[v] and labels[v] == -1:
                    labels[v] = count
                    stack.append(v)
            if c > 0:
                v = u - 1
                if m[v] and labels[v] == -1:
                    labels[v] = count
                    stack.append(v)
            if c < width - 1:
                v = u + 1
                if m[v] and labels[v] == -1:
                    labels[v] = count
                    stack.append(v)
        count += 1
    return np.asarray(labels, dtype=np.int32), count
