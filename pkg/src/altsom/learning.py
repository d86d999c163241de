"""Training state machine: per-pattern steps, phases, removal and inference.

Training walks the dataset in seeded random passes.  Each presented
pattern is routed to the supervised step when its label is visible and to
the unsupervised step otherwise; both start from the most activated node
and branch on its acceptance verdict and the map's remaining capacity.
Whenever the competition counter reaches age_wins, nodes that won too
rarely are removed and the counter resets.  After the organization passes
a short convergence stretch keeps updating and removing but inserts no
new nodes.
"""

from __future__ import annotations

import dataclasses
from enum import Enum

import numpy as np

from .core import (
    Node,
    Params,
    Phase,
    SomModel,
    _update_rows_toward,
    acceptance,
    find_winner,
    next_winner_from,
    rebuild_connections,
    update_connections,
    update_relevances,
)
from .datasets import Dataset

__all__ = [
    "Phase",
    "StepKind",
    "TrainStepOutcome",
    "unsupervised_step",
    "supervised_step",
    "removal_reset",
    "fit",
    "assign_cluster",
    "predict_class",
]


class StepKind(Enum):
    UPDATED_WINNER = "updated_winner"
    CREATED_NODE = "created_node"
    DUPLICATED_NODE = "duplicated_node"
    RELEVANCE_ONLY = "relevance_only"


@dataclasses.dataclass
class TrainStepOutcome:
    """Which branch a training step took, for observability and tests."""

    kind: StepKind
    winner_id: int
    created_id: int | None = None

    def __post_init__(self):
        created = self.kind in (StepKind.CREATED_NODE, StepKind.DUPLICATED_NODE)
        if created != (self.created_id is not None):
            raise ValueError("created_id must be present iff a node was created")


def _check_step_preconditions(model: SomModel) -> None:
    if model.n_nodes == 0:
        raise ValueError("cannot train an empty map")
    if model.phase is Phase.INFERENCE:
        raise ValueError("model is frozen for inference; training steps are not allowed")


def _may_insert(model: SomModel) -> bool:
    return model.phase is Phase.ORGANIZATION and model.n_nodes < model.params.n_max


def _update_winner_and_neighbors(model: SomModel, winner: Node, x: np.ndarray) -> None:
    params = model.params
    winner_row = model.row_of(winner.id)
    neighbor_rows = np.nonzero(model._adj[winner_row, : model.n_nodes])[0]
    rows = np.empty(len(neighbor_rows) + 1, dtype=np.int64)
    rows[0] = winner_row
    rows[1:] = neighbor_rows
    lrs = np.full(len(rows), params.e_n)
    lrs[0] = params.e_b
    _update_rows_toward(model, rows, x, lrs)


def _insert_node(model: SomModel, x: np.ndarray, class_label: int | None) -> Node:
    node = Node.new_at(
        model.next_id, x, class_label=class_label,
        wins=model.params.lp * model.nwins,
    )
    model.add_node(node)
    update_connections(model, node.id)
    return node


def unsupervised_step(model: SomModel, x: np.ndarray) -> TrainStepOutcome:
    """One competition for an unlabeled pattern.

    The winner is updated (with its neighbors) when it accepts the
    pattern and the map is below capacity.  On rejection a fresh node is
    created at the pattern if insertion is still legal; the winner's
    statistics are updated either way so it keeps learning about its
    region even when it does not move.
    """
    _check_step_preconditions(model)
    x = np.asarray(x, dtype=np.float64)
    params = model.params
    winner = model.nodes[int(np.argmax(model.activations(x)))]
    accepted = acceptance(x, winner, params)

    if accepted and model.n_nodes < params.n_max:
        _update_winner_and_neighbors(model, winner, x)
        winner.wins += 1
        return TrainStepOutcome(StepKind.UPDATED_WINNER, winner.id)

    if not accepted and _may_insert(model):
        created = _insert_node(model, x, class_label=None)
        update_relevances(winner, x, params)
        return TrainStepOutcome(StepKind.CREATED_NODE, winner.id, created.id)

    # Rejected with insertion unavailable, or accepted at capacity:
    # statistics only.
    update_relevances(winner, x, params)
    return TrainStepOutcome(StepKind.RELEVANCE_ONLY, winner.id)


def supervised_step(model: SomModel, x: np.ndarray, label: int) -> TrainStepOutcome:
    """One competition for a labeled pattern.

    When the winner's class matches (or is still undefined) this behaves
    like the unsupervised step except that the winner adopts the label
    and refreshes its connections.  On a class conflict the next-best
    class-compatible node takes over; if none exists the winner is
    duplicated into a node of the pattern's class.
    """
    _check_step_preconditions(model)
    x = np.asarray(x, dtype=np.float64)
    params = model.params
    acts = model.activations(x)
    winner_row = int(np.argmax(acts))
    winner = model.nodes[winner_row]

    if winner.class_label is None or winner.class_label == label:
        accepted = acceptance(x, winner, params)
        if not accepted and _may_insert(model):
            created = _insert_node(model, x, class_label=label)
            update_relevances(winner, x, params)
            return TrainStepOutcome(StepKind.CREATED_NODE, winner.id, created.id)
        if accepted:
            _update_winner_and_neighbors(model, winner, x)
            model.set_class(winner.id, label)
            update_connections(model, winner.id)
            winner.wins += 1
            return TrainStepOutcome(StepKind.UPDATED_WINNER, winner.id)
        update_relevances(winner, x, params)
        return TrainStepOutcome(StepKind.RELEVANCE_ONLY, winner.id)

    second_id = next_winner_from(model, acts, winner_row, label)
    if second_id is not None:
        second = model.node_by_id(second_id)
        if acceptance(x, second, params) and model.n_nodes < params.n_max:
            _update_winner_and_neighbors(model, second, x)
            model.set_class(second.id, label)
            update_connections(model, second.id)
            kind = StepKind.UPDATED_WINNER
        else:
            update_relevances(second, x, params)
            kind = StepKind.RELEVANCE_ONLY
        second.wins += 1
        return TrainStepOutcome(kind, second.id)

    if _may_insert(model):
        duplicate = winner.duplicate(
            model.next_id, class_label=label, wins=params.lp * model.nwins,
        )
        model.add_node(duplicate)
        update_connections(model, duplicate.id)
        return TrainStepOutcome(StepKind.DUPLICATED_NODE, winner.id, duplicate.id)

    update_relevances(winner, x, params)
    return TrainStepOutcome(StepKind.RELEVANCE_ONLY, winner.id)


def removal_reset(model: SomModel) -> None:
    """Remove rare winners, rebuild the graph and restart the win counters.

    Every node whose wins fall strictly below lp * age_wins is dropped,
    except that the highest-wins node (ties: lowest id) always survives
    so the map can never empty out.  Survivors restart at zero wins and
    the global competition counter resets.
    """
    params = model.params
    threshold = params.lp * params.age_wins
    best = max(model.nodes, key=lambda node: (node.wins, -node.id))
    doomed = {
        node.id for node in model.nodes
        if node.wins < threshold and node.id != best.id
    }
    model.remove_nodes(doomed)
    if doomed:
        rebuild_connections(model)
    for node in model.nodes:
        node.wins = 0.0
    model.nwins = 0


def _present(model: SomModel, x: np.ndarray, label: int | None) -> None:
    if label is not None:
        supervised_step(model, x, label)
    else:
        unsupervised_step(model, x)
    if model.nwins == model.params.age_wins:
        removal_reset(model)
    model.nwins += 1


def fit(data: Dataset, params: Params, seed: int) -> SomModel:
    """Train a map on ``data`` and freeze it for inference.

    The map starts as a single node on the first presented pattern
    (adopting its class when visible).  The organization phase makes
    ``params.epochs`` full passes in fresh seeded random orders, then the
    convergence phase runs min(age_wins, S) more presentations with
    insertion and duplication disabled before the model is frozen.
    The result is deterministic for fixed (data, params, seed).
    """
    if len(data) == 0:
        raise ValueError("cannot fit on an empty dataset")
    features = np.asarray(data.features, dtype=np.float64)
    if features.min() < 0.0 or features.max() > 1.0:
        raise ValueError("features must be rescaled to [0, 1] before fitting")
    n_rows = features.shape[0]
    rng = np.random.default_rng(seed)

    shown_labels = [
        int(label) if visible else None
        for label, visible in zip(data.labels, data.visible)
    ]

    first_order = rng.permutation(n_rows)
    first_row = int(first_order[0])
    model = SomModel.initial(features[first_row], params,
                             class_label=shown_labels[first_row])

    for epoch in range(params.epochs):
        order = first_order if epoch == 0 else rng.permutation(n_rows)
        for row in order:
            _present(model, features[row], shown_labels[row])

    model.phase = Phase.CONVERGENCE
    convergence_steps = min(params.age_wins, n_rows)
    for row in rng.permutation(n_rows)[:convergence_steps]:
        _present(model, features[row], shown_labels[row])

    model.phase = Phase.INFERENCE
    model.class_names = tuple(data.class_names)
    return model


def assign_cluster(model: SomModel, x: np.ndarray) -> int:
    """Cluster (node id) for a pattern; inference never rejects."""
    return find_winner(model, x)


def predict_class(model: SomModel, x: np.ndarray) -> int | None:
    """Predicted class for a pattern.

    The winner's class when it has one; otherwise the class of the most
    activated node that has any; None when the whole map is unlabeled.
    """
    winner = model.node_by_id(find_winner(model, x))
    if winner.class_label is not None:
        return winner.class_label
    acts = model.activations(np.asarray(x, dtype=np.float64))
    for row in np.argsort(-acts, kind="stable"):
        label = model.nodes[int(row)].class_label
        if label is not None:
            return label
    return None
