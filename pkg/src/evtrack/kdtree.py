"""2-d k-d tree over track centroids: insert, exact nearest neighbor, rebuild.

The tree alternates split axes starting on X at the root; left subtrees hold
coordinates <= the node's on its axis, right subtrees hold strictly greater.
Nearest-neighbor ties are broken by the smallest id so queries are fully
deterministic. There is no delete: tracks are never removed, and position
updates go through rebuild() because in-place coordinate overwrites would
break the split ordering.
"""

from __future__ import annotations

from .errors import DuplicateId, EmptyTree


class KdNode:
    __slots__ = ("x", "y", "id", "axis", "left", "right")

    def __init__(self, x: float, y: float, id: int, axis: int):
        self.x = x
        self.y = y
        self.id = id
        self.axis = axis  # 0 = X, 1 = Y
        self.left = None
        self.right = None

    def coord(self, axis: int) -> float:
        return self.x if axis == 0 else self.y


class KdTree2:
    def __init__(self):
        self.root: KdNode | None = None
        self.count: int = 0
        self._ids: set[int] = set()

    def __len__(self) -> int:
        return self.count

    def insert(self, x: float, y: float, id: int) -> None:
        """Insert by alternating-axis descent (<= goes left, > goes right)."""
        if id in self._ids:
            raise DuplicateId(f"id {id} already present")
        if self.root is None:
            self.root = KdNode(x, y, id, 0)
        else:
            node = self.root
            while True:
                q = x if node.axis == 0 else y
                if q <= node.coord(node.axis):
                    if node.left is None:
                        node.left = KdNode(x, y, id, 1 - node.axis)
                        break
                    node = node.left
                else:
                    if node.right is None:
                        node.right = KdNode(x, y, id, 1 - node.axis)
                        break
                    node = node.right
        self._ids.add(id)
        self.count += 1

    def nearest(self, x: float, y: float, exclude=frozenset()):
        """Globally nearest node to (x, y); ties to the smallest id.

        Returns (id, (node_x, node_y), distance). Nodes whose id is in
        ``exclude`` are skipped as candidates but still traversed.
        """
        if self.root is None or self.count - len(exclude & self._ids) <= 0:
            raise EmptyTree("nearest() on empty tree")
        best = self._search(self.root, x, y, None, exclude)
        node, d2 = best
        return node.id, (node.x, node.y), d2 ** 0.5

    def _search(self, node, x, y, best, exclude):
        if node is None:
            return best
        dx = node.x - x
        dy = node.y - y
        d2 = dx * dx + dy * dy
        if node.id not in exclude:
            if best is None or d2 < best[1] or (d2 == best[1] and node.id < best[0].id):
                best = (node, d2)
        q = x if node.axis == 0 else y
        split = node.coord(node.axis)
        near, far = (node.left, node.right) if q <= split else (node.right, node.left)
        best = self._search(near, x, y, best, exclude)
        gap = q - split
        if best is None or gap * gap <= best[1]:
            best = self._search(far, x, y, best, exclude)
        return best

    def depth(self) -> int:
        def walk(node):
            if node is None:
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def nodes(self):
        """All (x, y, id) triples via preorder walk."""
        out = []

        def walk(node):
            if node is None:
                return
            out.append((node.x, node.y, node.id))
            walk(node.left)
            walk(node.right)

        walk(self.root)
        return out


def rebuild(points) -> KdTree2:
    """Balanced median-split construction; axis ties go to the left subtree.

    ``points`` is an iterable of (x, y, id). Depth is ceil(log2(n + 1)) + 1
    at most when axis coordinates are distinct.
    """
    pts = [(float(x), float(y), int(i)) for x, y, i in points]
    ids = [p[2] for p in pts]
    if len(set(ids)) != len(ids):
        raise DuplicateId("rebuild() with repeated ids")
    tree = KdTree2()
    tree.root = _build(pts, 0)
    tree.count = len(pts)
    tree._ids = set(ids)
    return tree


def _build(pts, axis):
    if not pts:
        return None
    pts = sorted(pts, key=lambda p: (p[axis], p[2]))
    mid = len(pts) // 2
    # push the pivot past equal axis values so the right side is strictly greater
    while mid + 1 < len(pts) and pts[mid + 1][axis] == pts[mid][axis]:
        mid += 1
    x, y, id_ = pts[mid]
    node = KdNode(x, y, id_, axis)
    node.left = _build(pts[:mid], 1 - axis)
    node.right = _build(pts[mid + 1:], 1 - axis)
    return node
