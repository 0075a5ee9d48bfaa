"""Median-split BVH over triangles, flattened to arrays for the kernels.

The build is deterministic: splits use a stable argsort of centroid
coordinates along the widest axis, so identical scenes always produce an
identical tree and identical traversal order.
"""

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4


@dataclass
class Bvh:
    node_min: np.ndarray    # (N, 3) f8
    node_max: np.ndarray    # (N, 3) f8
    node_left: np.ndarray   # (N,) i4: left child, or leaf start into perm order
    node_right: np.ndarray  # (N,) i4: right child (leaf: unused)
    node_count: np.ndarray  # (N,) i4: 0 for inner nodes, triangle count for leaves
    perm: np.ndarray        # (T,) i8 triangle permutation (leaves are contiguous)


def build_bvh(tri_verts: np.ndarray) -> Bvh:
    """Build over (T, 3, 3) world-space triangle vertices."""
    t = tri_verts.shape[0]
    lo_all = tri_verts.min(axis=1)
    hi_all = tri_verts.max(axis=1)
    centroids = tri_verts.mean(axis=1)
    perm = np.arange(t, dtype=np.int64)

    node_min, node_max, node_left, node_right, node_count = [], [], [], [], []

    def new_node():
        node_min.append(np.zeros(3))
        node_max.append(np.zeros(3))
        node_left.append(0)
        node_right.append(0)
        node_count.append(0)
        return len(node_min) - 1

    # explicit stack of (node_index, lo, hi) ranges over perm
    root = new_node()
    stack = [(root, 0, t)]
    while stack:
        idx, lo, hi = stack.pop()
        ids = perm[lo:hi]
        node_min[idx] = lo_all[ids].min(axis=0)
        node_max[idx] = hi_all[ids].max(axis=0)
        n = hi - lo
        if n <= LEAF_SIZE:
            node_left[idx] = lo
            node_count[idx] = n
            continue
        cent = centroids[ids]
        axis = int(np.argmax(cent.max(axis=0) - cent.min(axis=0)))
        order = np.argsort(cent[:, axis], kind="stable")
        perm[lo:hi] = ids[order]
        mid = lo + n // 2
        left = new_node()
        right = new_node()
        node_left[idx] = left
        node_right[idx] = right
        stack.append((right, mid, hi))
        stack.append((left, lo, mid))

    return Bvh(node_min=np.asarray(node_min), node_max=np.asarray(node_max),
               node_left=np.asarray(node_left, dtype=np.int32),
               node_right=np.asarray(node_right, dtype=np.int32),
               node_count=np.asarray(node_count, dtype=np.int32),
               perm=perm)
