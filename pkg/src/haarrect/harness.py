"""Experiment orchestration: configs, morphism generation, runs, reports.

Configs are JSON; identical configs (seeds included) produce byte-identical
trace and report files.  Floats are serialized with shortest round-trip
repr, file writes are atomic (write-temp-then-rename), and reports carry a
digest of the canonical config.
"""

import hashlib
import json
import os
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    DefectOverflow,
    DefectTooLarge,
    HaarrectError,
    InvalidAlgebraVector,
    LogDomainError,
    NonContraction,
    NotComposable,
    RangeEscape,
)
from .groupoids import FiniteGroup, build_action_groupoid, build_pair_groupoid
from .groupoids import attach_haar_density, build_core, validate_groupoid
from .groups import AmbientSets, estimate_bch_constants, normalize_algebra_norm
from .groups import ALGEBRA_OF, _exp_matrices
from .rectifier import (
    admissible_defect_radius,
    almost_morphism,
    defect,
    iterate,
    verify_core_morphism,
)

EXIT_PASS = 0
EXIT_PRECONDITION = 2
EXIT_NON_CONTRACTION = 3
EXIT_NUMERIC_DOMAIN = 4

DEFAULT_OUT_ENV = "RECTIFY_OUT"


@dataclass(frozen=True)
class GroupSpec:
    tag: str = "SO3"
    raw_norm: str = "euclid"


@dataclass(frozen=True)
class GroupoidSpec:
    constructor: str = "pair"       # "pair" | "action"
    size: int = 3                   # pair groupoid point count
    group_order: int = 2            # action groupoid: cyclic group order
    space_size: int = 1             # action groupoid: cyclic space size


@dataclass(frozen=True)
class MorphismSpec:
    kind: str = "auto"              # "auto" | "coboundary" | "homomorphism" | "trivial"
    seed: int = 0
    scale: float = 0.25             # coboundary generator radius


@dataclass(frozen=True)
class PerturbationSpec:
    epsilon: float = 0.0
    seed: int = 0
    side: str = "right"             # "right" | "left"
    perturb_units: bool = True


@dataclass(frozen=True)
class ConstantsSpec:
    sample_count: int = 2000
    safety_factor: float = 1.25
    W_radius: float = 1.5
    K_radius: float = 2.5
    seed: int = 0


@dataclass(frozen=True)
class IterationSpec:
    tol: float = 1e-12
    max_iter: int = 50


@dataclass(frozen=True)
class OutputSpec:
    trace: str = "trace.csv"
    report: str = "report.json"


@dataclass(frozen=True)
class ExperimentConfig:
    group: GroupSpec = field(default_factory=GroupSpec)
    groupoid: GroupoidSpec = field(default_factory=GroupoidSpec)
    core: object = "full"           # "full" | {"arrows": [...]}
    density: object = "uniform"     # "uniform" | {"weights": {...}}
    morphism: MorphismSpec = field(default_factory=MorphismSpec)
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    constants: ConstantsSpec = field(default_factory=ConstantsSpec)
    iteration: IterationSpec = field(default_factory=IterationSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if self.perturbation.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        # ambient-ball invariants are re-validated by AmbientSets
        AmbientSets(self.constants.W_radius, self.constants.K_radius)

    @staticmethod
    def from_dict(data):
        def sub(cls, key):
            return cls(**data[key]) if key in data else cls()
        return ExperimentConfig(
            group=sub(GroupSpec, "group"),
            groupoid=sub(GroupoidSpec, "groupoid"),
            core=data.get("core", "full"),
            density=data.get("density", "uniform"),
            morphism=sub(MorphismSpec, "morphism"),
            perturbation=sub(PerturbationSpec, "perturbation"),
            constants=sub(ConstantsSpec, "constants"),
            iteration=sub(IterationSpec, "iteration"),
            output=sub(OutputSpec, "output"),
        )

    @staticmethod
    def from_json(path):
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(json.load(fh))

    def canonical_json(self):
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


@dataclass(frozen=True)
class RunReport:
    config_digest: str
    constants: dict
    admissible_radius: float
    initial_defect: float
    final_defect: float
    iterations: int
    all_q_certified: bool
    all_correction_bounds_ok: bool
    all_step_bounds_ok: bool
    residual_core: float
    residual_full: float
    total_displacement: float
    terminated: str
    passed: bool
    warnings: tuple = ()
    error: object = None

    def to_json(self):
        def clean(x):
            if isinstance(x, float) and not np.isfinite(x):
                return None
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x

        data = clean(asdict(self))
        data["warnings"] = list(self.warnings)
        return json.dumps(data, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# construction from configs
# ---------------------------------------------------------------------------

def build_groupoid(spec):
    if spec.constructor == "pair":
        return build_pair_groupoid(tuple(f"x{i}" for i in range(spec.size)))
    if spec.constructor == "action":
        n, m = spec.group_order, spec.space_size
        if n % m != 0:
            raise ValueError(
                f"cyclic({n}) does not act on {m} points by translation"
            )
        group = FiniteGroup.cyclic(n)
        space = tuple(f"x{i}" for i in range(m))
        return build_action_groupoid(group, space, lambda g, x: (x + g) % m)
    raise ValueError(f"unknown groupoid constructor {spec.constructor!r}")


def build_core_from_config(g, core_spec):
    if core_spec == "full":
        return build_core(g, tuple(range(g.n_arrows)))
    return build_core(g, tuple(core_spec["arrows"]))


def build_density_from_config(core, density_spec):
    if density_spec == "uniform":
        return attach_haar_density(core, "uniform")
    weights = {int(k): float(v) for k, v in density_spec["weights"].items()}
    return attach_haar_density(core, weights)


# ---------------------------------------------------------------------------
# exact morphisms and perturbations
# ---------------------------------------------------------------------------

def _cyclic_homomorphism_values(alg, order):
    """Group values of a generator for cyclic(order) -> target, or None.

    Values must stay inside the measurable range of the log, which rules
    out order-2 images in SU(2) (the only candidate is -identity, on the
    branch boundary).
    """
    tag = alg.group_id
    two_pi = 2 * np.pi
    if tag == "U1":
        return [np.array([[np.exp(2j * np.pi * k / order)]]) for k in range(order)]
    if tag == "SO2":
        return [
            _exp_matrices(alg, np.array([[two_pi * k / order]]))[0]
            for k in range(order)
        ]
    if tag == "SO3":
        return [
            _exp_matrices(alg, np.array([[0.0, 0.0, two_pi * k / order]]))[0]
            for k in range(order)
        ]
    if tag == "SU2":
        if order % 2 == 0:
            return None  # even-order images hit -I, outside the log margin
        return [
            _exp_matrices(alg, np.array([[0.0, 0.0, 2 * two_pi * k / order]]))[0]
            for k in range(order)
        ]
    raise ValueError(f"unknown group tag {tag!r}")


def generate_exact_morphism(g, spec, alg, morphism_spec):
    """Seeded exact morphism into the target group.

    Pair groupoids get a coboundary phi(j, i) = h_j h_i^-1 from seeded
    per-object elements; action groupoids get a homomorphism of the acting
    cyclic group composed with the arrow's group part, conjugated by a
    seeded element for variety.  When no usable homomorphism exists the
    trivial one is substituted with a warning.
    """
    rng = np.random.default_rng(morphism_spec.seed)
    warns = []
    if spec.constructor == "pair" or morphism_spec.kind == "coboundary":
        n_obj = g.n_objects
        coords = alg.sample_ball(rng, morphism_spec.scale, n_obj)
        h = _exp_matrices(alg, coords)
        values = np.array([
            h[g.target[a]] @ h[g.source[a]].conj().T for a in range(g.n_arrows)
        ])
        return almost_morphism(values, alg.group_id, alg), warns

    order = spec.group_order
    gen_values = None
    if morphism_spec.kind != "trivial":
        gen_values = _cyclic_homomorphism_values(alg, order)
    if gen_values is None:
        if morphism_spec.kind != "trivial":
            msg = (f"no usable homomorphism cyclic({order}) -> {alg.group_id}; "
                   f"substituting the trivial one")
            warnings.warn(msg)
            warns.append(msg)
        n = alg.matrix_dim
        gen_values = [np.eye(n, dtype=complex) for _ in range(order)]
    else:
        # conjugate by a seeded element: still a homomorphism, same range
        z = _exp_matrices(alg, alg.sample_ball(rng, 0.5, 1))[0]
        gen_values = [z @ v @ z.conj().T for v in gen_values]

    n_x = spec.space_size
    values = np.array([gen_values[a // n_x] for a in range(g.n_arrows)])
    return almost_morphism(values, alg.group_id, alg), warns


def perturb_morphism(phi, alg, pert, g=None, W_radius=None):
    """phi0(p) = phi(p) . exp(w_p) with w_p uniform in the epsilon ball.

    The left-multiplication variant is available through ``side``; unit
    arrows are optionally left unperturbed.  Identical seeds give identical
    outputs byte-for-byte.
    """
    rng = np.random.default_rng(pert.seed)
    w = alg.sample_ball(rng, pert.epsilon, phi.n_arrows)
    if not pert.perturb_units and g is not None:
        w[np.asarray(g.unit_arrows)] = 0.0
    noise = _exp_matrices(alg, w)
    if pert.side == "right":
        values = np.einsum("nij,njk->nik", phi.values, noise)
    elif pert.side == "left":
        values = np.einsum("nij,njk->nik", noise, phi.values)
    else:
        raise ValueError(f"unknown perturbation side {pert.side!r}")
    out = almost_morphism(values, phi.target_group, alg)
    if W_radius is not None and out.range_certificate > W_radius + 1e-9:
        raise RangeEscape("perturbed map does not take values in W",
                          radius=out.range_certificate, limit=W_radius)
    return out


# ---------------------------------------------------------------------------
# experiment runs
# ---------------------------------------------------------------------------

_ALG_CACHE = {}
_CONSTANTS_CACHE = {}


def algebra_for(group_spec):
    key = (group_spec.tag, group_spec.raw_norm)
    if key not in _ALG_CACHE:
        _ALG_CACHE[key] = normalize_algebra_norm(
            ALGEBRA_OF[group_spec.tag], group_spec.raw_norm
        )
    return _ALG_CACHE[key]


def constants_for(alg, cspec):
    """Estimate (and memoize) the constants for a constants spec."""
    key = (alg.algebra_id, alg.raw_norm, cspec.sample_count,
           cspec.safety_factor, cspec.W_radius, cspec.K_radius, cspec.seed)
    if key not in _CONSTANTS_CACHE:
        sets = AmbientSets(cspec.W_radius, cspec.K_radius)
        _CONSTANTS_CACHE[key] = estimate_bch_constants(
            alg, sets, sample_count=cspec.sample_count,
            safety_factor=cspec.safety_factor, seed=cspec.seed,
        )
    return _CONSTANTS_CACHE[key]


def _format_float(x):
    return repr(float(x))


def write_trace_csv(path, trace):
    """Trace table: one row per step plus a final defect-only row."""
    lines = ["n,delta,correction_norm,step_move,q_bound,q_certified"]
    for n in range(trace.iterations):
        lines.append(",".join([
            str(n),
            _format_float(trace.deltas[n]),
            _format_float(trace.correction_norms[n]),
            _format_float(trace.step_moves[n]),
            _format_float(trace.q_bounds[n]),
            "1" if trace.q_certified[n] else "0",
        ]))
    lines.append(",".join([
        str(trace.iterations),
        _format_float(trace.deltas[-1]),
        "", "", "", "",
    ]))
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def recompute_pass_from_trace(path, tol):
    """Pass flag recomputed from a persisted trace alone."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = fh.read().strip().splitlines()[1:]
    deltas, flags = [], []
    for row in rows:
        cells = row.split(",")
        deltas.append(float(cells[1]))
        if cells[5] != "":
            flags.append(cells[5] == "1")
    return deltas[-1] <= tol and all(flags)


def run_experiment(config, out_dir=None):
    """End-to-end run; returns (report, exit_code) and persists artifacts."""
    out_dir = out_dir or os.environ.get(DEFAULT_OUT_ENV, ".")
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, config.output.trace)
    report_path = os.path.join(out_dir, config.output.report)

    alg = algebra_for(config.group)
    sets = AmbientSets(config.constants.W_radius, config.constants.K_radius)
    constants = constants_for(alg, config.constants)
    admissible = admissible_defect_radius(constants)

    g = build_groupoid(config.groupoid)
    core = build_core_from_config(g, config.core)
    density = build_density_from_config(core, config.density)

    error = None
    exit_code = EXIT_PASS
    trace = None
    warns = []
    initial = final = float("nan")
    residual_core = residual_full = float("nan")
    iterations = 0
    terminated = "error"
    all_q = all_corr = all_step = False
    total_disp = float("nan")

    try:
        phi_exact, warns = generate_exact_morphism(
            g, config.groupoid, alg, config.morphism
        )
        phi0 = perturb_morphism(phi_exact, alg, config.perturbation,
                                g=g, W_radius=sets.W_radius)
        initial = defect(phi0, core, alg)
        limit, trace = iterate(
            phi0, core, density, alg, constants, sets=sets,
            tol=config.iteration.tol, max_iter=config.iteration.max_iter,
        )
        final = trace.deltas[-1]
        iterations = trace.iterations
        terminated = trace.terminated
        all_q = all(trace.q_certified)
        all_corr = all(trace.correction_bound_ok)
        all_step = all(trace.step_bound_ok)
        total_disp = trace.total_displacement
        residual_core = verify_core_morphism(limit, core, alg)
        residual_full = verify_core_morphism(limit, core, alg, full=True)
        write_trace_csv(trace_path, trace)
    except (DefectTooLarge, RangeEscape) as exc:
        error = f"{type(exc).__name__}: {exc}"
        exit_code = EXIT_PRECONDITION
    except NonContraction as exc:
        error = f"NonContraction: {exc}"
        exit_code = EXIT_NON_CONTRACTION
        if exc.trace is not None:
            write_trace_csv(trace_path, exc.trace)
    except (LogDomainError, DefectOverflow, InvalidAlgebraVector,
            NotComposable) as exc:
        error = f"{type(exc).__name__}: {exc}"
        exit_code = EXIT_NUMERIC_DOMAIN

    tol = config.iteration.tol
    residual_contract = (constants.d_prime / constants.d) * tol + 1e-15
    passed = (
        error is None
        and final <= tol
        and all_q
        and residual_core <= residual_contract
    )
    if error is None and not passed:
        exit_code = EXIT_NON_CONTRACTION

    report = RunReport(
        config_digest=config.digest(),
        constants=asdict(constants),
        admissible_radius=admissible,
        initial_defect=initial,
        final_defect=final,
        iterations=iterations,
        all_q_certified=all_q,
        all_correction_bounds_ok=all_corr,
        all_step_bounds_ok=all_step,
        residual_core=residual_core,
        residual_full=residual_full,
        total_displacement=total_disp,
        terminated=terminated,
        passed=bool(passed),
        warnings=tuple(warns),
        error=error,
    )
    _atomic_write(report_path, report.to_json() + "\n")
    return report, exit_code


def validate_config(config):
    """Dry-run validation of the groupoid, core and density axioms."""
    g = build_groupoid(config.groupoid)
    report = validate_groupoid(g)
    issues = [f"groupoid: {axiom} at {witness}"
              for axiom, witness in report.violations]
    try:
        core = build_core_from_config(g, config.core)
        try:
            build_density_from_config(core, config.density)
        except (HaarrectError, ValueError) as exc:
            issues.append(f"density: {exc}")
    except (HaarrectError, ValueError) as exc:
        issues.append(f"core: {exc}")
    return issues
