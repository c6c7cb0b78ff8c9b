"""Defect measurement and Haar-averaged correction of almost-morphisms.

An almost-morphism assigns a group element to every arrow of a groupoid.
Its defect against a core K is the worst left-invariant distance of
psi(k, p) = phi(p)^-1 phi(k)^-1 phi(k p) from the identity over the pairs
(k, p) with k in K.  One correction step multiplies each value phi(p) by
the exponential of the fiber-weighted average of log psi(., p); iterating
contracts the defect quadratically, which is certified step by step against
the polynomial bound q and the two in-proof bounds.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DefectOverflow,
    DefectTooLarge,
    LogDomainError,
    NonContraction,
    NotComposable,
    RangeEscape,
)
from .groups import (
    GroupElement,
    _distances_to_identity,
    _exp_matrices,
    _log_coords_single,
)
from .sums import weighted_sum

Q_CERT_SLACK = 1e-12        # slack on the per-step quadratic certificate
CORRECTION_BOUND_SLACK = 1e-9   # slack on |A| <= (d/d') * defect


@dataclass(frozen=True)
class AlmostMorphism:
    """Arrow-indexed group values with a recomputed range certificate."""

    values: np.ndarray          # (n_arrows, n, n) complex
    target_group: str
    range_certificate: float

    def value(self, arrow):
        return GroupElement(matrix=self.values[arrow], group_id=self.target_group)

    @property
    def n_arrows(self):
        return self.values.shape[0]


def almost_morphism(values, target_group, alg):
    """Build an AlmostMorphism, recomputing the range certificate."""
    values = np.asarray(values, dtype=complex)
    cert = float(np.max(_distances_to_identity(alg, values)))
    return AlmostMorphism(values=values, target_group=target_group,
                          range_certificate=cert)


@dataclass(frozen=True)
class IterationTrace:
    """Per-step audit record of one rectification run.

    deltas has one more entry than the step lists: deltas[n] is the defect
    before step n and the final entry is the defect of the returned map.
    """

    deltas: tuple
    correction_norms: tuple
    step_moves: tuple
    q_bounds: tuple
    q_certified: tuple
    correction_bound_ok: tuple
    step_bound_ok: tuple
    constants_used: object
    terminated: str
    admissible_radius: float

    def __post_init__(self):
        n = len(self.correction_norms)
        if not (len(self.deltas) == n + 1 == len(self.step_moves) + 1
                == len(self.q_certified) + 1 == len(self.q_bounds) + 1):
            raise ValueError("inconsistent trace lengths")
        if any(d < 0 for d in self.deltas):
            raise ValueError("defects must be nonnegative")

    @property
    def iterations(self):
        return len(self.correction_norms)

    @property
    def total_displacement(self):
        """Cauchy certificate: total distance moved across all steps."""
        return float(np.sum(self.step_moves)) if self.step_moves else 0.0


def core_pairs(core):
    """Pairs (k, p, kp) with k in the core and s(k) = t(p), in index order."""
    g = core.parent
    by_target = g.arrows_by_target()
    out = []
    for k in core.arrow_subset:
        for p in by_target[int(g.source[k])]:
            out.append((k, p, g.compose_table[(k, p)]))
    return out


def defect_element(phi, core, k, p):
    """psi(k, p) = phi(p)^-1 phi(k)^-1 phi(k p) as a GroupElement."""
    g = core.parent
    if k not in set(core.arrow_subset):
        raise NotComposable(f"arrow {k} is not in the core")
    if g.source[k] != g.target[p] or not g.is_multipliable(k, p):
        raise NotComposable(f"pair ({k}, {p}) is not multipliable")
    kp = g.compose_table[(k, p)]
    m = phi.values[p].conj().T @ phi.values[k].conj().T @ phi.values[kp]
    return GroupElement(matrix=m, group_id=phi.target_group)


def _psi_stack(phi, pairs):
    """Batched psi over a pair list; inverses are conjugate transposes."""
    ks = np.array([k for k, _, _ in pairs])
    ps = np.array([p for _, p, _ in pairs])
    kps = np.array([kp for _, _, kp in pairs])
    a = phi.values[ps].conj().swapaxes(-1, -2)
    b = phi.values[ks].conj().swapaxes(-1, -2)
    return np.einsum("nij,njk,nkl->nil", a, b, phi.values[kps])


def defect(phi, core, alg, pairs=None):
    """Max distance of psi from the identity over the core pairs.

    Distances use the stable trace/skew closed form, so the defect is
    measurable up to the injectivity margin; beyond it the defect is
    reported as an overflow, not a number.
    """
    pairs = pairs if pairs is not None else core_pairs(core)
    psi = _psi_stack(phi, pairs)
    dists = _distances_to_identity(alg, psi)
    if not np.all(np.isfinite(dists)):
        raise DefectOverflow("non-finite defect distances")
    worst = float(np.max(dists))
    if worst > alg.injectivity_margin:
        raise DefectOverflow(
            f"defect {worst:.6g} beyond measurable range "
            f"(margin {alg.injectivity_margin:.6g})"
        )
    return worst


def average_correction(phi, core, density, alg, max_defect=None, pairs=None):
    """Fiber-averaged correction A(p) = exp(sum_k w_k log psi(k, p)).

    The integration fiber for an arrow p is the core source fiber over
    t(p); composability forces that choice.  Returns the stacked correction
    matrices and their distances to the identity (exact for the radial
    realization: |exp(w)| = |w|).
    """
    g = core.parent
    if max_defect is not None:
        current = defect(phi, core, alg, pairs=pairs)
        if current > max_defect:
            raise DefectTooLarge(current, max_defect)

    n_arrows = phi.n_arrows
    log_cache = {}
    avg_coords = np.empty((n_arrows, alg.dim))
    for p in range(n_arrows):
        fiber = core.fiber_at(int(g.target[p]))
        logs = []
        weights = []
        for k in fiber:
            kp = g.compose_table[(k, p)]
            key = (k, p)
            if key not in log_cache:
                psi = (phi.values[p].conj().T
                       @ phi.values[k].conj().T
                       @ phi.values[kp])
                coords = _log_coords_single(alg, psi)
                if alg.norm(coords) > alg.injectivity_margin:
                    raise LogDomainError(
                        f"log psi({k}, {p}) outside injectivity margin"
                    )
                log_cache[key] = coords
            logs.append(log_cache[key])
            weights.append(density.weight(k))
        avg_coords[p] = weighted_sum(np.array(weights), np.array(logs))
    corrections = _exp_matrices(alg, avg_coords)
    norms = alg.norm(avg_coords)
    return corrections, norms


def correct_once(phi, core, density, alg, sets=None, max_defect=None):
    """One correction step: phi_hat(p) = phi(p) . A(p).

    With ``sets`` given, raises RangeEscape when any corrected value leaves
    the ambient compact.
    """
    corrections, _ = average_correction(phi, core, density, alg,
                                        max_defect=max_defect)
    new_values = np.einsum("nij,njk->nik", phi.values, corrections)
    out = almost_morphism(new_values, phi.target_group, alg)
    if sets is not None and out.range_certificate > sets.K_radius + 1e-9:
        raise RangeEscape(
            "corrected map left the ambient compact",
            radius=out.range_certificate, limit=sets.K_radius,
        )
    return out


def q_bound(C, k):
    """Quadratic contraction polynomial q(C)."""
    if C < 0:
        raise ValueError("C must be nonnegative")
    return (2.0 * k.c * k.c_l * (k.d_prime * k.c_l + 2.0 * k.d_prime
                                 + k.c * k.c_l * C)
            / k.d_prime ** 2 * C * C)


def admissible_defect_radius(k):
    """Largest certified entry defect: min(1/c_l, 1/c_d, q(C) <= C/2 root).

    For abelian targets the quadratic coefficient vanishes and only the
    two reciprocal guards bind.
    """
    guards = []
    if k.c_l > 0:
        guards.append(1.0 / k.c_l)
    if k.c_d > 0:
        guards.append(1.0 / k.c_d)
    a2 = 2.0 * k.c * k.c_l * (k.d_prime * k.c_l + 2.0 * k.d_prime) / k.d_prime ** 2
    a3 = 2.0 * (k.c * k.c_l) ** 2 / k.d_prime ** 2
    # q(C) <= C/2  <=>  a2*C + a3*C^2 <= 1/2
    if a3 > 0:
        guards.append((-a2 + np.sqrt(a2 * a2 + 2.0 * a3)) / (2.0 * a3))
    elif a2 > 0:
        guards.append(0.5 / a2)
    return float(min(guards))


def iterate(phi0, core, density, alg, constants, sets=None, tol=1e-12,
            max_iter=50):
    """Run the correction iteration until the defect drops below tol.

    Certifies every step against q and the two in-proof bounds
    (|A| <= (d/d') * defect and step <= 1/c_d), and raises NonContraction
    only if the defect grows past the averaging precondition 1/c_l.
    """
    pairs = core_pairs(core)
    delta = defect(phi0, core, alg, pairs=pairs)
    admissible = admissible_defect_radius(constants)
    if delta > admissible:
        raise DefectTooLarge(delta, admissible)
    if sets is not None and phi0.range_certificate > sets.W_radius + 1e-9:
        raise RangeEscape(
            "initial map does not take values in W",
            radius=phi0.range_certificate, limit=sets.W_radius,
        )

    deltas = [delta]
    correction_norms, step_moves, q_bounds = [], [], []
    q_flags, corr_ok, step_ok = [], [], []
    phi = phi0
    n = 0
    while delta > tol and n < max_iter:
        corrections, a_norms = average_correction(
            phi, core, density, alg, max_defect=1.0 / constants.c_l
        )
        corr_norm = float(np.max(a_norms))
        new_values = np.einsum("nij,njk->nik", phi.values, corrections)
        phi_next = almost_morphism(new_values, phi.target_group, alg)
        if sets is not None and phi_next.range_certificate > sets.K_radius + 1e-9:
            raise RangeEscape(
                f"iterate {n + 1} left the ambient compact",
                radius=phi_next.range_certificate, limit=sets.K_radius,
            )
        # independent step measurement (must agree with corr_norm by left
        # invariance; both are recorded)
        step = float(np.max(_distances_to_identity(
            alg, np.einsum("nij,njk->nik",
                           phi.values.conj().swapaxes(-1, -2), phi_next.values)
        )))
        delta_next = defect(phi_next, core, alg, pairs=pairs)
        qb = q_bound(delta, constants)

        correction_norms.append(corr_norm)
        step_moves.append(step)
        q_bounds.append(qb)
        q_flags.append(delta_next <= qb + Q_CERT_SLACK)
        corr_ok.append(
            corr_norm <= (constants.d / constants.d_prime) * delta
            + CORRECTION_BOUND_SLACK
        )
        step_ok.append(step <= 1.0 / constants.c_d + Q_CERT_SLACK)

        deltas.append(delta_next)
        phi = phi_next
        n += 1
        if delta_next > 1.0 / constants.c_l:
            trace = IterationTrace(
                deltas=tuple(deltas),
                correction_norms=tuple(correction_norms),
                step_moves=tuple(step_moves),
                q_bounds=tuple(q_bounds),
                q_certified=tuple(q_flags),
                correction_bound_ok=tuple(corr_ok),
                step_bound_ok=tuple(step_ok),
                constants_used=constants,
                terminated="defect_grew",
                admissible_radius=admissible,
            )
            raise NonContraction(n, delta_next, trace=trace)
        delta = delta_next

    trace = IterationTrace(
        deltas=tuple(deltas),
        correction_norms=tuple(correction_norms),
        step_moves=tuple(step_moves),
        q_bounds=tuple(q_bounds),
        q_certified=tuple(q_flags),
        correction_bound_ok=tuple(corr_ok),
        step_bound_ok=tuple(step_ok),
        constants_used=constants,
        terminated="converged" if delta <= tol else "max_iter",
        admissible_radius=admissible,
    )
    return phi, trace


def verify_core_morphism(phi, core, alg, full=False):
    """Max morphism residual d(phi(kp), phi(k) phi(p)) over pair lists.

    With ``full`` the residual runs over every declared-multipliable pair of
    the parent groupoid (full morphism verification); otherwise only over
    the core pairs, which is what the averaging limit guarantees.
    """
    g = core.parent
    if full:
        pairs = [(q, p, g.compose_table[(q, p)])
                 for (q, p) in sorted(g.domain_mask)
                 if g.source[q] == g.target[p]]
    else:
        pairs = core_pairs(core)
    worst = 0.0
    for k, p, kp in pairs:
        lhs = phi.values[kp]
        rhs = phi.values[k] @ phi.values[p]
        dist = float(_distances_to_identity(alg, rhs.conj().T @ lhs))
        worst = max(worst, dist)
    return worst
