"""Finite weighted groupoid data model.

Arrows are indexed 0..n-1 in lexicographic order of their constructor
labels, so every downstream trace is reproducible.  Multiplication is a
partial table; ``domain_mask`` marks which structurally composable pairs
are declared multipliable, which is what makes local (partially defined)
groupoids representable.  Cores and per-fiber normalized right-invariant
weights follow, each with exhaustive axiom validators that return concrete
witnesses on failure.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ActionError, CoreAxiomError, InvarianceError

FIBER_SUM_TOL = 1e-14


@dataclass(frozen=True)
class FiniteGroup:
    """Finite group given by its multiplication table (indices 0..n-1)."""

    element_labels: tuple
    table: np.ndarray       # table[a, b] = index of a*b
    identity: int

    @staticmethod
    def cyclic(n):
        labels = tuple(f"g{k}" for k in range(n))
        table = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
        return FiniteGroup(element_labels=labels, table=table, identity=0)

    @property
    def order(self):
        return len(self.element_labels)

    def inverse(self, a):
        return int(np.nonzero(self.table[a] == self.identity)[0][0])


@dataclass(frozen=True)
class FiniteGroupoid:
    """Finite local groupoid: arrows, structure maps, composability mask."""

    object_labels: tuple
    arrow_labels: tuple
    source: np.ndarray            # (n_arrows,) object index
    target: np.ndarray
    unit_arrows: np.ndarray       # (n_objects,) unit arrow at each object
    compose_table: dict           # (q, p) -> q.p for structurally known pairs
    invert_table: dict            # partial arrow -> arrow
    domain_mask: frozenset        # declared-multipliable subset of pairs

    @property
    def n_objects(self):
        return len(self.object_labels)

    @property
    def n_arrows(self):
        return len(self.arrow_labels)

    def is_multipliable(self, q, p):
        return (q, p) in self.domain_mask

    def compose(self, q, p):
        if (q, p) not in self.domain_mask:
            raise KeyError(f"pair ({q}, {p}) is not declared multipliable")
        return self.compose_table[(q, p)]

    def composable_pairs(self):
        """Structurally composable pairs (s(q) = t(p)) in index order."""
        by_target = self.arrows_by_target()
        for q in range(self.n_arrows):
            for p in by_target[self.source[q]]:
                yield q, p

    def arrows_by_source(self):
        out = [[] for _ in range(self.n_objects)]
        for a in range(self.n_arrows):
            out[self.source[a]].append(a)
        return out

    def arrows_by_target(self):
        out = [[] for _ in range(self.n_objects)]
        for a in range(self.n_arrows):
            out[self.target[a]].append(a)
        return out


@dataclass(frozen=True)
class Core:
    """Core of a groupoid: left-multipliable, fiber-transitive arrow subset."""

    parent: FiniteGroupoid
    arrow_subset: tuple
    s_fibers: dict               # object -> tuple of core arrows with that source
    s_proper: bool = True        # finite fibers, always proper in this model

    def fiber_at(self, obj):
        return self.s_fibers[obj]


@dataclass(frozen=True)
class HaarDensity:
    """Per-fiber normalized right-invariant weights on a core."""

    core: Core
    weights: dict                # core arrow -> weight

    def weight(self, arrow):
        return self.weights[arrow]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.passed != (len(self.violations) == 0):
            raise ValueError("passed flag must mirror the violation list")


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def build_action_groupoid(group, space, action):
    """Action groupoid of a finite group on a finite set.

    ``space`` is a sequence of object labels and ``action(g, x)`` maps a
    group element index and a space index to a space index.  Arrows are the
    pairs (g, x) with s = x and t = g.x, ordered g-major; the mask is full.
    """
    space = tuple(space)
    n_g, n_x = group.order, len(space)
    for x in range(n_x):
        if action(group.identity, x) != x:
            raise ActionError("identity does not act trivially", witness=x)
    for a in range(n_g):
        for b in range(n_g):
            for x in range(n_x):
                if action(a, action(b, x)) != action(int(group.table[a, b]), x):
                    raise ActionError(
                        "action is not compatible with the group law",
                        witness=(a, b, x),
                    )

    arrow_labels = tuple((group.element_labels[g], space[x])
                         for g in range(n_g) for x in range(n_x))
    idx = {(g, x): g * n_x + x for g in range(n_g) for x in range(n_x)}
    source = np.array([x for g in range(n_g) for x in range(n_x)])
    target = np.array([action(g, x) for g in range(n_g) for x in range(n_x)])
    unit_arrows = np.array([idx[(group.identity, x)] for x in range(n_x)])

    compose, invert = {}, {}
    for g in range(n_g):
        for x in range(n_x):
            a = idx[(g, x)]
            invert[a] = idx[(group.inverse(g), action(g, x))]
            for h in range(n_g):
                b = idx[(h, action(g, x))]
                compose[(b, a)] = idx[(int(group.table[h, g]), x)]

    return FiniteGroupoid(
        object_labels=space,
        arrow_labels=arrow_labels,
        source=source,
        target=target,
        unit_arrows=unit_arrows,
        compose_table=compose,
        invert_table=invert,
        domain_mask=frozenset(compose),
    )


def build_pair_groupoid(space):
    """Pair groupoid on a finite set: one arrow (j, i) from i to j."""
    space = tuple(space)
    n = len(space)
    if n < 1:
        raise ValueError("space must be nonempty")
    arrow_labels = tuple((space[j], space[i]) for j in range(n) for i in range(n))
    idx = lambda j, i: j * n + i
    source = np.array([i for j in range(n) for i in range(n)])
    target = np.array([j for j in range(n) for i in range(n)])
    unit_arrows = np.array([idx(i, i) for i in range(n)])
    compose = {
        (idx(k, j), idx(j, i)): idx(k, i)
        for k in range(n) for j in range(n) for i in range(n)
    }
    invert = {idx(j, i): idx(i, j) for j in range(n) for i in range(n)}
    return FiniteGroupoid(
        object_labels=space,
        arrow_labels=arrow_labels,
        source=source,
        target=target,
        unit_arrows=unit_arrows,
        compose_table=compose,
        invert_table=invert,
        domain_mask=frozenset(compose),
    )


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

def validate_groupoid(g):
    """Exhaustive structural check; violations are data, never exceptions.

    All checks are gated on definedness (pair in the mask), matching the
    conditional form of the local-groupoid axioms, so shrinking the mask
    never makes the validator reference an undefined product.
    """
    violations = []

    for (q, p) in g.domain_mask:
        if (q, p) not in g.compose_table:
            violations.append(("mask-composability", (q, p)))
            continue
        if g.source[q] != g.target[p]:
            violations.append(("source-target", (q, p)))
            continue
        m = g.compose_table[(q, p)]
        if g.source[m] != g.source[p] or g.target[m] != g.target[q]:
            violations.append(("source-target", (q, p, m)))

    for z in range(g.n_objects):
        u = g.unit_arrows[z]
        if g.source[u] != z or g.target[u] != z:
            violations.append(("unit", z))
    for p in range(g.n_arrows):
        ur = g.unit_arrows[g.source[p]]
        if g.is_multipliable(p, ur) and g.compose_table[(p, ur)] != p:
            violations.append(("unit", (p, ur)))
        ul = g.unit_arrows[g.target[p]]
        if g.is_multipliable(ul, p) and g.compose_table[(ul, p)] != p:
            violations.append(("unit", (ul, p)))

    for p, pinv in g.invert_table.items():
        if g.source[pinv] != g.target[p] or g.target[pinv] != g.source[p]:
            violations.append(("inverse", p))
            continue
        if g.is_multipliable(pinv, p) and \
                g.compose_table[(pinv, p)] != g.unit_arrows[g.source[p]]:
            violations.append(("inverse", (pinv, p)))
        if g.is_multipliable(p, pinv) and \
                g.compose_table[(p, pinv)] != g.unit_arrows[g.target[p]]:
            violations.append(("inverse", (p, pinv)))

    # local associativity: if (r,q), (q,p) and (rq, p) are all declared,
    # then (r, qp) must be declared and the two triple products must agree
    by_source = g.arrows_by_source()
    for (q, p) in g.domain_mask:
        if g.source[q] != g.target[p]:
            continue
        qp = g.compose_table[(q, p)]
        for r in by_source[int(g.target[q])]:
            if not g.is_multipliable(r, q):
                continue
            rq = g.compose_table[(r, q)]
            if not g.is_multipliable(rq, p):
                continue
            if not g.is_multipliable(r, qp):
                violations.append(("associativity", (r, q, p)))
                continue
            if g.compose_table[(rq, p)] != g.compose_table[(r, qp)]:
                violations.append(("associativity", (r, q, p)))

    return ValidationReport(passed=not violations, violations=tuple(violations))


def build_core(g, arrow_subset):
    """Validate the three core axioms and build the core.

    Axioms, with their witness-bearing error ids:
      * "Lie type": the source map restricted to the subset hits every object;
      * "fiber invertibility": right multiplication by each core arrow is a
        bijection between the source fibers at its target and at its source;
      * "no escape": every pair (k, p) with k in the subset and s(k) = t(p)
        is declared multipliable.
    """
    arrow_subset = tuple(sorted(set(arrow_subset)))
    if not arrow_subset:
        raise ValueError("arrow_subset must be nonempty")
    in_core = set(arrow_subset)

    fibers = {z: tuple(a for a in arrow_subset if g.source[a] == z)
              for z in range(g.n_objects)}
    for z in range(g.n_objects):
        if not fibers[z]:
            raise CoreAxiomError("Lie type", z)

    by_target = g.arrows_by_target()
    for k in arrow_subset:
        for p in by_target[int(g.source[k])]:
            if not g.is_multipliable(k, p):
                raise CoreAxiomError("no escape", (k, p))

    for k in arrow_subset:
        src_fiber = fibers[int(g.source[k])]
        tgt_fiber = fibers[int(g.target[k])]
        image = []
        for kp in tgt_fiber:
            if not g.is_multipliable(kp, k):
                raise CoreAxiomError("fiber invertibility", (kp, k))
            prod = g.compose_table[(kp, k)]
            if prod not in in_core:
                raise CoreAxiomError("fiber invertibility", (kp, k))
            image.append(prod)
        if len(set(image)) != len(tgt_fiber) or len(tgt_fiber) != len(src_fiber):
            raise CoreAxiomError("fiber invertibility", k)

    return Core(parent=g, arrow_subset=arrow_subset, s_fibers=fibers)


def attach_haar_density(core, weights="uniform"):
    """Normalize weights per fiber and verify right invariance entrywise.

    ``weights`` is "uniform" or a mapping core-arrow -> nonnegative weight.
    Right invariance: for every core arrow k and every k' in the fiber at
    t(k), the weight of k'.k equals the weight of k' to 1e-14.
    """
    g = core.parent
    if weights == "uniform":
        w = {}
        for z, fiber in core.s_fibers.items():
            for a in fiber:
                w[a] = 1.0 / len(fiber)
    else:
        w = {}
        for z, fiber in core.s_fibers.items():
            vals = np.array([float(weights[a]) for a in fiber])
            if np.any(vals < 0):
                raise ValueError(f"negative weight in fiber at object {z}")
            total = vals.sum()
            if total <= 0:
                raise ValueError(f"fiber at object {z} has zero total weight")
            for a, v in zip(fiber, vals / total):
                w[a] = v

    for z, fiber in core.s_fibers.items():
        total = float(np.sum([w[a] for a in fiber]))
        if abs(total - 1.0) > FIBER_SUM_TOL:
            raise InvarianceError(f"fiber sum at object {z} is {total!r}")
    for k in core.arrow_subset:
        for kp in core.fiber_at(int(g.target[k])):
            moved = g.compose_table[(kp, k)]
            if abs(w[moved] - w[kp]) > FIBER_SUM_TOL:
                raise InvarianceError(
                    f"weight not preserved by right translation: "
                    f"w({moved}) = {w[moved]!r} vs w({kp}) = {w[kp]!r}",
                    witness=(kp, k),
                )

    return HaarDensity(core=core, weights=w)
