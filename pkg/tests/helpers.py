"""Shared builders for the test suite."""

from __future__ import annotations

import dataclasses

import numpy as np

from altsom import (
    Dataset,
    Node,
    Params,
    Phase,
    SomModel,
    StepKind,
    supervised_step,
    unsupervised_step,
)


def make_params(**overrides) -> Params:
    """Small, removal-friendly defaults for unit tests."""
    values = dict(
        lp=0.001,
        beta=0.9,
        age_wins=100,
        e_b=0.1,
        e_n=0.01,
        s=0.1,
        minwd=0.25,
        epochs=2,
        n_max=200,
    )
    values.update(overrides)
    return Params(**values)


def make_node(node_id: int, c, omega=None, delta=None, delta_hat=None,
              t: int = 0, wins: float = 0.0, class_label=None) -> Node:
    """Node with directly controlled statistics (for hand-value tests)."""
    c = np.asarray(c, dtype=np.float64)
    node = Node.new_at(node_id, c, class_label=class_label, wins=wins)
    node.t = t
    if omega is not None:
        node.omega[:] = omega
    if delta is not None:
        node.delta[:] = delta
    if delta_hat is not None:
        node.delta_hat[:] = delta_hat
    return node


def make_model(params: Params, nodes: list[Node]) -> SomModel:
    model = SomModel(m=nodes[0].c.shape[0], params=params)
    for node in nodes:
        model.add_node(node)
    model.nwins = 1
    return model


def tight_node(node_id: int, c, class_label=None, wins: float = 0.0) -> Node:
    """Node whose receptive field is a tiny box around its center.

    t >= 1 with near-zero observed distances, so only patterns within
    var_floor of the center are accepted.
    """
    return make_node(node_id, c, t=5, wins=wins, class_label=class_label,
                     delta=np.zeros(len(c)), delta_hat=np.zeros(len(c)))


def wide_node(node_id: int, c, class_label=None, wins: float = 0.0,
              width: float = 10.0) -> Node:
    """Node accepting everything in the unit cube."""
    m = len(c)
    return make_node(node_id, c, t=5, wins=wins, class_label=class_label,
                     delta=np.full(m, width), delta_hat=np.full(m, width))


def blob_dataset(seed: int = 0, n_per: int = 30, centers=((0.2, 0.2), (0.8, 0.8)),
                 spread: float = 0.03, visible: bool = True) -> Dataset:
    """Well-separated Gaussian blobs in the unit square."""
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for k, center in enumerate(centers):
        rows.append(rng.normal(center, spread, size=(n_per, len(center))))
        labels += [k] * n_per
    features = np.clip(np.vstack(rows), 0.0, 1.0)
    names = tuple(f"c{k}" for k in range(len(centers)))
    return Dataset(features, np.array(labels), np.full(len(labels), visible), names)


def three_cluster_dataset(seed: int = 7, n_per: int = 100) -> Dataset:
    """Three well-separated Gaussians in 5 dims, 2 of them pure noise."""
    rng = np.random.default_rng(seed)
    centers = np.array([
        [0.15, 0.15, 0.15],
        [0.50, 0.85, 0.50],
        [0.85, 0.25, 0.85],
    ])
    rows, labels = [], []
    for k, center in enumerate(centers):
        informative = rng.normal(center, 0.04, size=(n_per, 3))
        noise = rng.uniform(0.0, 1.0, size=(n_per, 2))
        rows.append(np.hstack([informative, noise]))
        labels += [k] * n_per
    features = np.clip(np.vstack(rows), 0.0, 1.0)
    return Dataset(features, np.array(labels), np.ones(len(labels), dtype=bool),
                   ("a", "b", "c"))


@dataclasses.dataclass
class BranchCase:
    """One (mode, acceptance, capacity, label-relation) combination."""

    name: str
    mode: str  # "unsupervised" | "supervised"
    expected_kind: StepKind
    build: callable  # () -> (model, x, label | None)
    check: callable  # (model, outcome, before) -> None


def _snapshot(model: SomModel) -> dict:
    return {
        node.id: dict(c=node.c.copy(), t=node.t, wins=node.wins,
                      class_label=node.class_label)
        for node in model.nodes
    }


def run_branch_case(case: BranchCase) -> None:
    model, x, label = case.build()
    before = _snapshot(model)
    if case.mode == "supervised":
        outcome = supervised_step(model, x, label)
    else:
        outcome = unsupervised_step(model, x)
    assert outcome.kind is case.expected_kind, (
        f"{case.name}: expected {case.expected_kind}, got {outcome.kind}")
    case.check(model, outcome, before)


def branch_cases() -> list[BranchCase]:
    """Every branch of the two training modes, with its state deltas."""
    params = make_params(n_max=3)
    far = np.array([0.9, 0.9])
    near = np.array([0.41, 0.4])

    cases = []

    # --- unsupervised ------------------------------------------------
    def u_accept_room():
        model = make_model(params, [wide_node(0, [0.4, 0.4]), tight_node(1, [0.0, 0.0])])
        return model, near, None

    def check_u_accept_room(model, outcome, before):
        assert outcome.winner_id == 0 and outcome.created_id is None
        node = model.node_by_id(0)
        assert node.wins == before[0]["wins"] + 1
        assert node.t == before[0]["t"] + 1
        assert not np.allclose(node.c, before[0]["c"])  # moved toward x
        assert model.n_nodes == 2

    cases.append(BranchCase("unsup accept below cap", "unsupervised",
                            StepKind.UPDATED_WINNER, u_accept_room,
                            check_u_accept_room))

    def u_reject_room():
        model = make_model(params, [tight_node(0, [0.4, 0.4])])
        return model, far, None

    def check_u_reject_room(model, outcome, before):
        assert outcome.winner_id == 0 and outcome.created_id == 1
        created = model.node_by_id(1)
        assert np.array_equal(created.c, far)
        assert created.t == 0 and created.class_label is None
        assert created.wins == params.lp * 1  # nwins was 1 at creation
        winner = model.node_by_id(0)
        assert winner.t == before[0]["t"] + 1  # relevances refreshed
        assert np.array_equal(winner.c, before[0]["c"])  # center untouched
        assert winner.wins == before[0]["wins"]

    cases.append(BranchCase("unsup reject below cap", "unsupervised",
                            StepKind.CREATED_NODE, u_reject_room,
                            check_u_reject_room))

    def u_reject_full():
        nodes = [tight_node(i, [0.1 * i, 0.1 * i]) for i in range(3)]
        return make_model(params, nodes), far, None

    def check_relevance_only(winner_id):
        def check(model, outcome, before):
            assert outcome.winner_id == winner_id and outcome.created_id is None
            assert model.n_nodes == len(before)
            node = model.node_by_id(winner_id)
            assert node.t == before[winner_id]["t"] + 1
            assert np.array_equal(node.c, before[winner_id]["c"])
            assert node.wins == before[winner_id]["wins"]
        return check

    cases.append(BranchCase("unsup reject at cap", "unsupervised",
                            StepKind.RELEVANCE_ONLY, u_reject_full,
                            check_relevance_only(2)))

    def u_accept_full():
        nodes = [wide_node(0, [0.4, 0.4]),
                 tight_node(1, [0.0, 0.0]), tight_node(2, [0.05, 0.0])]
        return make_model(params, nodes), near, None

    cases.append(BranchCase("unsup accept at cap", "unsupervised",
                            StepKind.RELEVANCE_ONLY, u_accept_full,
                            check_relevance_only(0)))

    def u_reject_convergence():
        model = make_model(params, [tight_node(0, [0.4, 0.4])])
        model.phase = Phase.CONVERGENCE
        return model, far, None

    cases.append(BranchCase("unsup reject in convergence", "unsupervised",
                            StepKind.RELEVANCE_ONLY, u_reject_convergence,
                            check_relevance_only(0)))

    # --- supervised, winner class compatible -------------------------
    def s_adopt():
        model = make_model(params, [wide_node(0, [0.4, 0.4])])
        return model, near, 1

    def check_s_adopt(model, outcome, before):
        node = model.node_by_id(0)
        assert outcome.winner_id == 0
        assert node.class_label == 1
        assert node.wins == before[0]["wins"] + 1
        assert not np.allclose(node.c, before[0]["c"])

    cases.append(BranchCase("sup noClass accept", "supervised",
                            StepKind.UPDATED_WINNER, s_adopt, check_s_adopt))

    def s_same_accept_full():
        nodes = [wide_node(0, [0.4, 0.4], class_label=1),
                 tight_node(1, [0.0, 0.0]), tight_node(2, [0.0, 0.05])]
        return make_model(params, nodes), near, 1

    def check_s_same_accept_full(model, outcome, before):
        # The matching-class update branch carries no capacity gate.
        node = model.node_by_id(0)
        assert node.wins == before[0]["wins"] + 1
        assert model.n_nodes == 3

    cases.append(BranchCase("sup same-class accept at cap", "supervised",
                            StepKind.UPDATED_WINNER, s_same_accept_full,
                            check_s_same_accept_full))

    def s_same_reject_room():
        model = make_model(params, [tight_node(0, [0.4, 0.4], class_label=1)])
        return model, far, 1

    def check_s_same_reject_room(model, outcome, before):
        created = model.node_by_id(outcome.created_id)
        assert created.class_label == 1
        assert np.array_equal(created.c, far)
        winner = model.node_by_id(0)
        assert winner.t == before[0]["t"] + 1
        assert np.array_equal(winner.c, before[0]["c"])

    cases.append(BranchCase("sup same-class reject below cap", "supervised",
                            StepKind.CREATED_NODE, s_same_reject_room,
                            check_s_same_reject_room))

    def s_same_reject_full():
        nodes = [tight_node(0, [0.4, 0.4], class_label=1),
                 tight_node(1, [0.0, 0.0], class_label=1),
                 tight_node(2, [0.0, 0.05], class_label=1)]
        return make_model(params, nodes), far, 1

    cases.append(BranchCase("sup same-class reject at cap", "supervised",
                            StepKind.RELEVANCE_ONLY, s_same_reject_full,
                            check_relevance_only(0)))

    def s_same_reject_convergence():
        model = make_model(params, [tight_node(0, [0.4, 0.4], class_label=1)])
        model.phase = Phase.CONVERGENCE
        return model, far, 1

    cases.append(BranchCase("sup same-class reject in convergence", "supervised",
                            StepKind.RELEVANCE_ONLY, s_same_reject_convergence,
                            check_relevance_only(0)))

    # --- supervised, winner class conflicts --------------------------
    def s_second_accept():
        nodes = [wide_node(0, [0.4, 0.4], class_label=0),
                 wide_node(1, [0.5, 0.5])]
        return make_model(params, nodes), near, 1

    def check_s_second_accept(model, outcome, before):
        assert outcome.winner_id == 1
        second = model.node_by_id(1)
        assert second.class_label == 1
        assert second.wins == before[1]["wins"] + 1
        assert not np.allclose(second.c, before[1]["c"])
        # first winner untouched
        assert model.node_by_id(0).t == before[0]["t"]

    cases.append(BranchCase("sup conflict second accepts", "supervised",
                            StepKind.UPDATED_WINNER, s_second_accept,
                            check_s_second_accept))

    def s_second_reject():
        nodes = [wide_node(0, [0.4, 0.4], class_label=0),
                 tight_node(1, [0.5, 0.5], class_label=1)]
        return make_model(params, nodes), near, 1

    def check_s_second_reject(model, outcome, before):
        assert outcome.winner_id == 1
        second = model.node_by_id(1)
        assert second.t == before[1]["t"] + 1
        assert np.array_equal(second.c, before[1]["c"])
        assert second.wins == before[1]["wins"] + 1  # wins bump regardless

    cases.append(BranchCase("sup conflict second rejects", "supervised",
                            StepKind.RELEVANCE_ONLY, s_second_reject,
                            check_s_second_reject))

    def s_second_accept_full():
        nodes = [wide_node(0, [0.4, 0.4], class_label=0),
                 wide_node(1, [0.5, 0.5], class_label=1),
                 tight_node(2, [0.9, 0.9], class_label=0)]
        return make_model(params, nodes), near, 1

    def check_s_second_accept_full(model, outcome, before):
        assert outcome.winner_id == 1
        second = model.node_by_id(1)
        assert second.t == before[1]["t"] + 1
        assert np.array_equal(second.c, before[1]["c"])  # accepted but map full
        assert second.wins == before[1]["wins"] + 1

    cases.append(BranchCase("sup conflict second accepts at cap", "supervised",
                            StepKind.RELEVANCE_ONLY, s_second_accept_full,
                            check_s_second_accept_full))

    def s_duplicate():
        model = make_model(params, [wide_node(0, [0.4, 0.4], class_label=0)])
        return model, near, 1

    def check_s_duplicate(model, outcome, before):
        assert outcome.winner_id == 0
        dup = model.node_by_id(outcome.created_id)
        src = model.node_by_id(0)
        assert dup.class_label == 1 and dup.t == 0
        assert np.array_equal(dup.c, src.c)
        assert np.array_equal(dup.omega, src.omega)
        assert np.array_equal(dup.delta, src.delta)
        assert np.array_equal(dup.delta_hat, src.delta_hat)
        assert dup.wins == params.lp * 1
        assert src.t == before[0]["t"]  # source untouched by duplication

    cases.append(BranchCase("sup conflict duplicate", "supervised",
                            StepKind.DUPLICATED_NODE, s_duplicate,
                            check_s_duplicate))

    def s_conflict_full():
        nodes = [wide_node(0, [0.4, 0.4], class_label=0),
                 tight_node(1, [0.0, 0.0], class_label=0),
                 tight_node(2, [0.05, 0.0], class_label=0)]
        return make_model(params, nodes), near, 1

    cases.append(BranchCase("sup conflict no second at cap", "supervised",
                            StepKind.RELEVANCE_ONLY, s_conflict_full,
                            check_relevance_only(0)))

    def s_conflict_convergence():
        model = make_model(params, [wide_node(0, [0.4, 0.4], class_label=0)])
        model.phase = Phase.CONVERGENCE
        return model, near, 1

    cases.append(BranchCase("sup conflict no duplication in convergence",
                            "supervised", StepKind.RELEVANCE_ONLY,
                            s_conflict_convergence, check_relevance_only(0)))

    return cases
