"""Node and map data model plus the per-node mathematics.

Each map node represents one cluster through four vectors of the input
dimensionality: a center ``c``, a relevance vector ``omega`` in (0, 1],
a moving average ``delta`` of the per-dimension distances |x - c|, and
its bias-corrected counterpart ``delta_hat``.  ``delta_hat`` doubles as a
per-dimension variance estimate; divided by ``omega`` it yields a relaxed
variance box around the center that acts as the node's local acceptance
threshold (its reject option).

Nodes compete through a radial-basis activation of the relevance-weighted
distance.  All operations here are either pure or mutate the single node
or map passed in; a map is confined to one thread while it is being
trained and is safe to share for read-only inference afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels

# Guard for activation denominators; fixed, never swept.
DEFAULT_EPS_ACT = 1e-7
# Floor applied to delta_hat when forming the relaxed variance, so that a
# dimension with zero observed spread keeps a non-empty acceptance interval.
DEFAULT_VAR_FLOOR = 1e-6
# Relevances are clamped to stay strictly positive even if a pathological
# slope parameter drives the logistic into exp overflow.
_OMEGA_TINY = 1e-300

_NO_CLASS = -1  # sentinel in the model's class-label mirror
_ROW_ZERO = np.zeros(1, dtype=np.int64)  # row index for single-node kernel calls


class Phase(Enum):
    """Training stage of a map; node insertion is legal only in ORGANIZATION."""

    ORGANIZATION = "organization"
    CONVERGENCE = "convergence"
    INFERENCE = "inference"


@dataclass
class Params:
    """Hyperparameters of the map.

    The first nine fields are the tunable parameters (swept over the
    ranges in :func:`altsom.harness.default_ranges`); the last two are
    fixed numeric guards.

    Attributes:
        lp: Lowest cluster percentage; a node must win at least
            lp * age_wins competitions per reset cycle to survive removal.
        beta: Exponential decay rate of the distance moving averages,
            in (0, 1).
        age_wins: Number of competitions between removal resets.
        e_b: Winner learning rate.
        e_n: Neighbor learning rate.
        s: Slope of the logistic that turns corrected distances into
            relevances.
        minwd: Relevance-dissimilarity threshold below which two
            class-compatible nodes are connected.
        epochs: Number of full passes over the training set during the
            organization phase.
        n_max: Maximum number of nodes the map may hold.
        eps_act: Small constant guarding the activation denominator.
        var_floor: Floor applied to delta_hat in the relaxed variance.
    """

    lp: float
    beta: float
    age_wins: int
    e_b: float
    e_n: float
    s: float
    minwd: float
    epochs: int
    n_max: int = 200
    eps_act: float = DEFAULT_EPS_ACT
    var_floor: float = DEFAULT_VAR_FLOOR

    def __post_init__(self):
        if not 0.0 < self.lp < 1.0:
            raise ValueError(f"lp must be in (0, 1), got {self.lp}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if int(self.age_wins) != self.age_wins or self.age_wins < 1:
            raise ValueError(f"age_wins must be a positive integer, got {self.age_wins}")
        self.age_wins = int(self.age_wins)
        for name in ("e_b", "e_n", "s"):
            value = getattr(self, name)
            if value <= 0.0:
                raise ValueError(f"{name} must be > 0, got {value}")
        # the learning rates feed center updates, whose contract is (0, 1]
        for name in ("e_b", "e_n"):
            if getattr(self, name) > 1.0:
                raise ValueError(f"{name} must be <= 1, got {getattr(self, name)}")
        if self.minwd < 0.0:
            raise ValueError(f"minwd must be >= 0, got {self.minwd}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be a positive integer, got {self.epochs}")
        self.epochs = int(self.epochs)
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be a positive integer, got {self.n_max}")
        self.n_max = int(self.n_max)
        if self.eps_act <= 0.0 or self.var_floor <= 0.0:
            raise ValueError("eps_act and var_floor must be > 0")


@dataclass
class Node:
    """One prototype of the map.

    ``c``, ``omega``, ``delta`` and ``delta_hat`` all have the input
    dimensionality.  ``t`` counts how many relevance updates the node has
    received; ``delta``/``delta_hat`` are zero exactly while t == 0.
    ``wins`` counts competition wins since the last removal reset and is
    fractional because newborn nodes start at lp * nwins.  A node with
    ``class_label`` None has not been claimed by any class yet.

    Inside a :class:`SomModel` the vectors are views into the model's
    storage matrices, so they must be written through slice assignment
    (``node.c[:] = ...``), never rebound; class changes on model-owned
    nodes go through :meth:`SomModel.set_class`.
    """

    id: int
    c: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    delta_hat: np.ndarray
    t: int = 0
    wins: float = 0.0
    class_label: int | None = None

    @classmethod
    def new_at(cls, node_id: int, x: np.ndarray, class_label: int | None = None,
               wins: float = 0.0) -> Node:
        """Create a fresh node centered at ``x`` with all-ones relevance."""
        x = np.asarray(x, dtype=np.float64)
        return cls(
            id=node_id,
            c=x.copy(),
            omega=np.ones_like(x),
            delta=np.zeros_like(x),
            delta_hat=np.zeros_like(x),
            t=0,
            wins=wins,
            class_label=class_label,
        )

    def duplicate(self, node_id: int, class_label: int | None, wins: float) -> Node:
        """Copy of this node with fresh identity, t = 0 and the given class."""
        return Node(
            id=node_id,
            c=np.array(self.c),
            omega=np.array(self.omega),
            delta=np.array(self.delta),
            delta_hat=np.array(self.delta_hat),
            t=0,
            wins=wins,
            class_label=class_label,
        )


class SomModel:
    """The full map: nodes, neighborhood graph and competition counter.

    Node vectors are stored as rows of preallocated (n_max, m) matrices so
    the winner search and joint winner/neighbor updates stay a handful of
    vectorized operations; the :class:`Node` objects expose row views.
    The node list is always ordered by ascending id, which makes
    ``argmax`` tie-breaking pick the lowest id for free.
    """

    def __init__(self, m: int, params: Params):
        if m < 1:
            raise ValueError(f"input dimensionality must be >= 1, got {m}")
        self.m = int(m)
        self.params = params
        self.nodes: list[Node] = []
        self._by_id: dict[int, Node] = {}
        self._row_by_id: dict[int, int] = {}
        self.nwins = 0
        self.phase = Phase.ORGANIZATION
        self.next_id = 0
        self.class_names: tuple[str, ...] | None = None
        cap = params.n_max
        self._centers = np.zeros((cap, self.m))
        self._omegas = np.ones((cap, self.m))
        self._deltas = np.zeros((cap, self.m))
        self._delta_hats = np.zeros((cap, self.m))
        self._labels = np.full(cap, _NO_CLASS, dtype=np.int64)
        self._adj = np.zeros((cap, cap), dtype=np.bool_)

    @classmethod
    def initial(cls, x0: np.ndarray, params: Params,
                class_label: int | None = None) -> SomModel:
        """Map holding a single node at the first input pattern."""
        x0 = np.asarray(x0, dtype=np.float64)
        model = cls(m=x0.shape[0], params=params)
        model.add_node(Node.new_at(model.next_id, x0, class_label=class_label))
        model.nwins = 1
        return model

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_by_id(self, node_id: int) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"no node with id {node_id}") from None

    def row_of(self, node_id: int) -> int:
        """Storage row of a node (node list position)."""
        try:
            return self._row_by_id[node_id]
        except KeyError:
            raise KeyError(f"no node with id {node_id}") from None

    def neighbors(self, node_id: int) -> list[int]:
        """Ids connected to ``node_id``, in ascending order."""
        row = self.row_of(node_id)
        peers = np.nonzero(self._adj[row, : self.n_nodes])[0]
        return [self.nodes[i].id for i in peers]

    @property
    def connections(self) -> dict[int, set[int]]:
        """The neighborhood graph as an id-keyed adjacency dict.

        Materialized from the internal adjacency matrix on access;
        assigning a dict of the same shape replaces the whole graph.
        """
        result: dict[int, set[int]] = {node.id: set() for node in self.nodes}
        n = self.n_nodes
        for row, col in zip(*np.nonzero(self._adj[:n, :n])):
            result[self.nodes[row].id].add(self.nodes[col].id)
        return result

    @connections.setter
    def connections(self, mapping: dict[int, set[int]]) -> None:
        n = self.n_nodes
        self._adj[:n, :n] = False
        for a, peers in mapping.items():
            for b in peers:
                self.connect(a, b)

    def connect(self, a: int, b: int) -> None:
        """Add the symmetric edge between two live nodes."""
        if a == b:
            raise ValueError(f"node {a} cannot be its own neighbor")
        row_a, row_b = self.row_of(a), self.row_of(b)
        self._adj[row_a, row_b] = True
        self._adj[row_b, row_a] = True

    def _bind_row(self, node: Node, row: int) -> None:
        self._centers[row] = node.c
        self._omegas[row] = node.omega
        self._deltas[row] = node.delta
        self._delta_hats[row] = node.delta_hat
        self._labels[row] = _NO_CLASS if node.class_label is None else node.class_label
        node.c = self._centers[row]
        node.omega = self._omegas[row]
        node.delta = self._deltas[row]
        node.delta_hat = self._delta_hats[row]

    def add_node(self, node: Node) -> Node:
        """Insert ``node``, rebinding its vectors to the storage matrices."""
        if self.n_nodes >= self.params.n_max:
            raise ValueError("map is full; node cap would be exceeded")
        if node.id in self._by_id:
            raise ValueError(f"duplicate node id {node.id}")
        row = self.n_nodes
        self._bind_row(node, row)
        self._adj[row, :] = False
        self._adj[:, row] = False
        self.nodes.append(node)
        self._by_id[node.id] = node
        self._row_by_id[node.id] = row
        self.next_id = max(self.next_id, node.id + 1)
        return node

    def remove_nodes(self, ids: set[int]) -> None:
        """Drop the given nodes, compact storage and prune their edges."""
        if not ids:
            return
        n_old = self.n_nodes
        survivors = [node for node in self.nodes if node.id not in ids]
        kept_rows = [self._row_by_id[node.id] for node in survivors]
        k = len(survivors)
        if k:
            self._adj[:k, :k] = self._adj[np.ix_(kept_rows, kept_rows)]
        self._adj[k:n_old, :n_old] = False
        self._adj[:n_old, k:n_old] = False
        # surviving rows only shift down, so copying in order never
        # clobbers a row that is still to be read
        for row, node in enumerate(survivors):
            self._bind_row(node, row)
        self.nodes = survivors
        self._row_by_id = {node.id: row for row, node in enumerate(survivors)}
        for node_id in ids:
            self._by_id.pop(node_id, None)

    def set_class(self, node_id: int, class_label: int | None) -> None:
        """Assign a node's class, keeping the label mirror in sync."""
        node = self.node_by_id(node_id)
        node.class_label = class_label
        self._labels[self.row_of(node_id)] = (
            _NO_CLASS if class_label is None else class_label)

    def activations(self, x: np.ndarray) -> np.ndarray:
        """Activation of every node for ``x``, in node-list order.

        Allocates its result, so a frozen model may serve concurrent
        inference calls.
        """
        n = self.n_nodes
        out = np.empty(n)
        _kernels.activations_into(self._centers, self._omegas, n,
                                  np.asarray(x, dtype=np.float64),
                                  self.params.eps_act, out)
        return out


def _check_dim(x: np.ndarray, node: Node) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != node.c.shape:
        raise ValueError(
            f"pattern has {x.shape[0] if x.ndim == 1 else x.shape} components, "
            f"node expects {node.c.shape[0]}"
        )
    return x


def weighted_distance(x: np.ndarray, node: Node) -> float:
    """Relevance-weighted Euclidean distance sqrt(sum_i omega_i (x_i - c_i)^2)."""
    x = _check_dim(x, node)
    diff = x - node.c
    return float(np.sqrt(np.dot(node.omega, diff * diff)))


def activation(x: np.ndarray, node: Node, params: Params) -> float:
    """Radial-basis activation in (0, 1); 1 is approached at zero distance.

    The receptive field scales with the relevance mass: the same distance
    activates a node with large total relevance more strongly.
    """
    x = _check_dim(x, node)
    omega_sum = float(node.omega.sum())
    return omega_sum / (omega_sum + weighted_distance(x, node) + params.eps_act)


def find_winner(model: SomModel, x: np.ndarray) -> int:
    """Id of the most activated node; exact ties go to the lowest id."""
    if model.n_nodes == 0:
        raise ValueError("cannot search an empty map")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.m,):
        raise ValueError(f"pattern has shape {x.shape}, expected ({model.m},)")
    return model.nodes[int(np.argmax(model.activations(x)))].id


def next_winner_from(model: SomModel, acts: np.ndarray, winner_row: int,
                     label: int) -> int | None:
    """Best class-compatible node id given precomputed activations.

    Considers nodes whose class is undefined or equals ``label``,
    excluding the row of the global winner; ties go to the lowest id.
    """
    n = model.n_nodes
    labels = model._labels[:n]
    mask = (labels == _NO_CLASS) | (labels == label)
    mask[winner_row] = False
    rows = np.nonzero(mask)[0]
    if rows.size == 0:
        return None
    return model.nodes[int(rows[np.argmax(acts[rows])])].id


def find_next_winner(model: SomModel, x: np.ndarray, label: int) -> int | None:
    """Best class-compatible alternative to the global winner.

    Returns the id of the highest-activated node whose class is undefined
    or equals ``label``, excluding the global winner itself; None when no
    such node exists.
    """
    if model.n_nodes == 0:
        raise ValueError("cannot search an empty map")
    acts = model.activations(np.asarray(x, dtype=np.float64))
    return next_winner_from(model, acts, int(np.argmax(acts)), label)


def update_relevances(node: Node, x: np.ndarray, params: Params) -> Node:
    """Advance the node's distance statistics and recompute its relevances.

    The fixed sequence is: bump t, fold |x - c| into the moving average
    delta, divide by (1 - beta^t) to remove the zero-initialization bias,
    then map the corrected distances through a logistic of slope s onto
    (0, 1] relevances.  Dimensions observed tighter than the node's mean
    come out near 1 (they define the node's subspace), looser ones near 0;
    when all corrected distances coincide every relevance is exactly 1.
    """
    x = _check_dim(x, node)
    node.t += 1
    _kernels.update_relevance_rows(
        node.c[None], node.omega[None], node.delta[None], node.delta_hat[None],
        _ROW_ZERO, np.array([float(node.t)]), x,
        params.beta, params.s, _OMEGA_TINY)
    return node


def update_node(node: Node, x: np.ndarray, lr: float, params: Params) -> Node:
    """Full node update: relevance statistics first, then the center step."""
    if not 0.0 < lr <= 1.0:
        raise ValueError(f"learning rate must be in (0, 1], got {lr}")
    update_relevances(node, x, params)
    _kernels.move_center_rows(node.c[None], _ROW_ZERO, x, np.array([lr]))
    return node


def _update_rows_toward(model: SomModel, rows: np.ndarray, x: np.ndarray,
                        lrs: np.ndarray) -> None:
    """Row-indexed form of :func:`update_nodes_toward` (no validation)."""
    ts = np.empty(len(rows))
    for k, row in enumerate(rows):
        node = model.nodes[row]
        node.t += 1
        ts[k] = node.t
    _kernels.update_relevance_rows(
        model._centers, model._omegas, model._deltas, model._delta_hats,
        rows, ts, x, model.params.beta, model.params.s, _OMEGA_TINY)
    _kernels.move_center_rows(model._centers, rows, x, lrs)


def update_nodes_toward(model: SomModel, node_ids: list[int], x: np.ndarray,
                        lrs: np.ndarray) -> None:
    """Apply :func:`update_node` to several nodes of a map in one pass.

    Identical to updating each node in sequence (the nodes are
    independent); running the rows through one kernel call keeps the
    per-presentation cost flat in the neighbor count.
    """
    lrs = np.asarray(lrs, dtype=np.float64)
    if lrs.size and not (0.0 < lrs.min() and lrs.max() <= 1.0):
        raise ValueError("learning rates must be in (0, 1]")
    rows = np.fromiter((model.row_of(i) for i in node_ids), dtype=np.int64,
                       count=len(node_ids))
    _update_rows_toward(model, rows, np.asarray(x, dtype=np.float64), lrs)


def relaxed_variance(node: Node, params: Params) -> np.ndarray:
    """Per-dimension acceptance half-widths max(delta_hat, var_floor) / omega.

    Low-relevance dimensions get widened intervals so that a pattern
    deviating only in dimensions the node does not care about is still
    accepted.  Callers handle t == 0 via the newborn rule in
    :func:`acceptance`.
    """
    return np.maximum(node.delta_hat, params.var_floor) / node.omega


def acceptance(x: np.ndarray, node: Node, params: Params) -> bool:
    """Whether ``x`` falls inside the node's receptive field.

    True iff every component lies strictly inside the open interval
    ]c_i - v_i, c_i + v_i[ with v the relaxed variance.  A node that has
    never been updated (t == 0) accepts unconditionally, so its first win
    initializes its receptive field instead of spawning a duplicate.
    """
    x = _check_dim(x, node)
    if node.t == 0:
        return True
    return bool(_kernels.accepts(node.c, node.omega, node.delta_hat, x,
                                 params.var_floor))


def relevance_dissimilarity(a: Node, b: Node) -> float:
    """Mean absolute relevance difference between two nodes."""
    return float(np.abs(a.omega - b.omega).mean())


def class_compatible(a: Node, b: Node) -> bool:
    """Nodes may be neighbors unless they carry two different classes."""
    return a.class_label is None or b.class_label is None or a.class_label == b.class_label


def _peer_mask(model: SomModel, row: int) -> np.ndarray:
    """Boolean mask over node rows: similar subspace and compatible class."""
    n = model.n_nodes
    mask = np.empty(n, dtype=np.bool_)
    _kernels.peer_mask_into(model._omegas, model._labels, n, row,
                            model.params.minwd, mask)
    return mask


def update_connections(model: SomModel, node_id: int) -> None:
    """Recompute the edges incident to one node.

    The node is connected to every other live node whose relevance
    dissimilarity is below minwd and whose class does not conflict; all
    its other edges are removed.  (With minwd = 0 the strict inequality
    leaves every node isolated.)
    """
    row = model.row_of(node_id)
    mask = _peer_mask(model, row)
    n = model.n_nodes
    model._adj[row, :n] = mask
    model._adj[:n, row] = mask


def rebuild_connections(model: SomModel) -> None:
    """Recompute the whole neighborhood graph (used after removals).

    The peer predicate is symmetric, so filling row by row keeps the
    adjacency matrix symmetric.
    """
    n = model.n_nodes
    for row in range(n):
        model._adj[row, :n] = _peer_mask(model, row)
