"""Deterministic causal maps on tree-ordered sets and their pullbacks.

A causal map ``phi: Omega_s -> Omega_t`` acts on observables in the
opposite direction: an observable over ``Omega_t`` pulled back along
``phi`` is the observable over ``Omega_s`` whose probabilities at ``w``
are those of the original at ``phi(w)``.  Pulling every node observable
of a tree back to the root and taking their product gives the single
root-level observable that describes all measurements at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterator, Mapping

import numpy as np

from mtreg.errors import ConstructionError, PathError, StructureError
from mtreg.observable import (
    Observable,
    ObservableKind,
    Rectangle,
    State,
    StateSpace,
    product_observable,
)

Node = Hashable


@dataclass(frozen=True, eq=False)
class CausalMap:
    """A deterministic map between state spaces.

    ``func`` takes and returns raw coordinate arrays.  It is trusted to land
    in ``target``; ``spot_check`` samples the source to catch obvious
    violations.
    """

    source: StateSpace
    target: StateSpace
    func: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    @classmethod
    def identity(cls, space: StateSpace) -> CausalMap:
        return cls(space, space, lambda w: w, "id")

    def __call__(self, state: State) -> State:
        if state.space != self.source:
            raise ConstructionError(f"{self.label or 'map'}: state is not in the source space")
        return self.target.state(self.func(state.as_array()))

    def then(self, after: CausalMap) -> CausalMap:
        """``after`` composed with ``self`` (apply self first)."""
        if after.source != self.target:
            raise ConstructionError(f"cannot compose {self.label!r} with {after.label!r}: spaces differ")
        first, second = self.func, after.func
        label = f"{after.label}.{self.label}" if self.label and after.label else ""
        return CausalMap(self.source, after.target, lambda w: second(first(w)), label)

    def spot_check(self, count: int = 32, seed: int = 0) -> None:
        """Raise ``StructureError`` if any sampled source state maps outside the target."""
        rng = np.random.default_rng(seed)
        for w in random_states(self.source, rng, count):
            image = np.asarray(self.func(w), dtype=float).reshape(-1)
            if not self.target.contains(image):
                raise StructureError(f"{self.label or 'causal map'} sends {w} outside its target: {image}")


def random_states(space: StateSpace, rng: np.random.Generator, count: int) -> Iterator[np.ndarray]:
    """Random coordinate vectors inside ``space`` (heavy use of finite bounds when present)."""
    for _ in range(count):
        w = []
        for (lo, hi), pos in zip(space.bounds, space.positivity_mask):
            if math.isfinite(lo) and math.isfinite(hi):
                v = rng.uniform(lo, hi)
            elif math.isfinite(lo):
                v = lo + rng.exponential(1.0)
            elif math.isfinite(hi):
                v = hi - rng.exponential(1.0)
            else:
                v = rng.normal(0.0, 3.0)
            if pos and v <= 0:
                v = abs(v) or 1.0
            w.append(v)
        yield np.asarray(w)


@dataclass(frozen=True)
class TreeOrderedSet:
    """Finite tree given by its root and parent map."""

    root: Node
    parent: Mapping[Node, Node]
    nodes: frozenset = field(init=False)

    def __post_init__(self) -> None:
        parent = dict(self.parent)
        object.__setattr__(self, "parent", parent)
        if self.root in parent:
            raise StructureError("the root has no parent")
        nodes = {self.root, *parent.keys(), *parent.values()}
        for t in parent.values():
            if t != self.root and t not in parent:
                raise StructureError(f"node {t!r} has no parent and is not the root")
        for t in parent:
            seen = {t}
            s = t
            while s != self.root:
                s = parent[s]
                if s in seen:
                    raise StructureError(f"parent map has a cycle through {t!r}")
                seen.add(s)
        object.__setattr__(self, "nodes", frozenset(nodes))

    @classmethod
    def parallel(cls, n: int) -> TreeOrderedSet:
        """Root 0 with leaves 1..n hanging directly off it."""
        return cls(0, {i: 0 for i in range(1, n + 1)})

    def children(self, node: Node) -> list[Node]:
        return sorted(t for t, s in self.parent.items() if s == node)

    def depth_first(self) -> list[Node]:
        """Pre-order from the root, children in ascending order."""
        order: list[Node] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            order.append(node)
            stack.extend(reversed(self.children(node)))
        return order

    def path(self, frm: Node, to: Node) -> list[Node]:
        """Nodes from ``frm`` down to ``to`` inclusive; ``frm`` must be an ancestor."""
        for node in (frm, to):
            if node not in self.nodes:
                raise PathError(f"unknown node {node!r}")
        chain = [to]
        while chain[-1] != frm:
            if chain[-1] == self.root:
                raise PathError(f"{frm!r} is not an ancestor of {to!r}")
            chain.append(self.parent[chain[-1]])
        return chain[::-1]

    def precedes(self, s: Node, t: Node) -> bool:
        """True when s <= t in the tree order."""
        try:
            self.path(s, t)
        except PathError:
            return False
        return True


@dataclass(frozen=True, eq=False)
class CausalSystem:
    tree: TreeOrderedSet
    space_at: Mapping[Node, StateSpace]
    edge_map: Mapping[Node, CausalMap]
    observable_at: Mapping[Node, Observable | None] = field(default_factory=dict)

    def __post_init__(self) -> None:
        tree = self.tree
        for node in tree.nodes:
            if node not in self.space_at:
                raise StructureError(f"no state space at node {node!r}")
        for node, s in tree.parent.items():
            edge = self.edge_map.get(node)
            if edge is None:
                raise StructureError(f"no causal map into node {node!r}")
            if edge.source != self.space_at[s] or edge.target != self.space_at[node]:
                raise StructureError(f"causal map into {node!r} does not match the node spaces")
        for node, obs in self.observable_at.items():
            if obs is None:
                continue
            if node not in tree.nodes:
                raise StructureError(f"observable attached to {node!r}, which is not reachable from the root")
            if obs.state_space != self.space_at[node]:
                raise StructureError(f"observable at {node!r} lives on the wrong state space")


def pullback(causal_map: CausalMap, obs: Observable) -> Observable:
    """Observable over ``causal_map.source`` reading ``obs`` at the mapped state."""
    if obs.state_space != causal_map.target:
        raise ConstructionError("observable is not defined on the causal map's target")
    f = causal_map.func

    log_density = None
    if obs.log_density_kernel is not None:
        inner_ld = obs.log_density_kernel

        def log_density(x: np.ndarray, w: np.ndarray) -> float:
            return inner_ld(x, f(w))

    def rect_prob(rect: Rectangle, w: np.ndarray) -> float:
        return obs.rect_prob(rect, f(w))

    sampler = None
    if obs.has_sampler:
        inner_sampler = obs.sampler_kernel

        def sampler(rng: np.random.Generator, w: np.ndarray, count: int) -> np.ndarray:
            return inner_sampler(rng, f(w), count)

    estimator = None
    if obs.event_estimator is not None:
        inner_est = obs.event_estimator

        def estimator(event, w):
            return inner_est(event, f(w))

    return Observable(
        value_dim=obs.value_dim,
        state_space=causal_map.source,
        kind=ObservableKind.PULLBACK,
        log_density_kernel=log_density,
        rect_prob_kernel=rect_prob if (obs.log_density_kernel or obs.rect_prob_kernel) else None,
        sampler_kernel=sampler,
        event_estimator=estimator,
        parts=(obs,),
        info={"map": causal_map},
    )


def compose_path(system: CausalSystem, frm: Node, to: Node) -> CausalMap:
    """Composite causal map along the tree path from ``frm`` to ``to``."""
    nodes = system.tree.path(frm, to)
    result = CausalMap.identity(system.space_at[frm])
    for node in nodes[1:]:
        result = result.then(system.edge_map[node])
    return result


def composite_observable(system: CausalSystem, root_state_space_check: bool = True) -> Observable:
    """Product of every node observable pulled back to the root.

    Value coordinates follow the depth-first node order; nodes without an
    observable contribute none.  With ``root_state_space_check`` every edge
    map is spot-checked for landing in its target space first.
    """
    tree = system.tree
    if root_state_space_check:
        for node in tree.parent:
            system.edge_map[node].spot_check()
    bearing = [t for t in tree.depth_first() if system.observable_at.get(t) is not None]
    if not bearing:
        raise StructureError("no node carries an observable")
    if bearing == [tree.root]:
        return system.observable_at[tree.root]
    pulled = [
        system.observable_at[t] if t == tree.root
        else pullback(compose_path(system, tree.root, t), system.observable_at[t])
        for t in bearing
    ]
    composite = product_observable(pulled, kind=ObservableKind.COMPOSITE)
    return composite
