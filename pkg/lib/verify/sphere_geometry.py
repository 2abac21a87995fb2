"""
Sphere geometry properties of the radius-R projection and its tangent projector
"""

import numpy as np

from .. import rng as rng_streams
from ..geometry import MIN_ORDER, first_order_stability_check, project_batch, project_to_sphere, tangent_projector
from .base import CheckResult, PropertyCheck, SuiteDefinition, at_least, at_most

DIMENSIONS = (2, 8, 16)
N_POINTS = 1000
RADIUS = 4.0
TOLERANCE = 1e-12
JACOBIAN_TOLERANCE = 1e-6
REFEED_STEPS = 10_000
REFEED_TOLERANCE = 1e-9


def _points(seed: int, name: str, d: int) -> np.ndarray:
    rng = rng_streams.stream(seed, "verify", name, d)
    # spread the norms over several orders of magnitude
    return rng.standard_normal((N_POINTS, d)) * 10.0 ** rng.uniform(-3, 3, size=(N_POINTS, 1))


def check_norm(seed: int) -> CheckResult:
    worst = 0.0
    for d in DIMENSIONS:
        projected, _ = project_batch(_points(seed, "norm", d), RADIUS)
        worst = max(worst, float(np.max(np.abs(np.linalg.norm(projected, axis=1) - RADIUS))))
    return at_most(worst, TOLERANCE * RADIUS, "max | ||N_R(z)|| - R |")


def check_idempotent(seed: int) -> CheckResult:
    worst = 0.0
    for d in DIMENSIONS:
        once, _ = project_batch(_points(seed, "idempotent", d), RADIUS)
        twice, _ = project_batch(once, RADIUS)
        worst = max(worst, float(np.max(np.abs(twice - once))))
    return at_most(worst, TOLERANCE * RADIUS, "max |N_R(N_R(z)) - N_R(z)|")


def check_scale_invariant(seed: int) -> CheckResult:
    worst = 0.0
    for d in DIMENSIONS:
        z = _points(seed, "scale", d)
        c = rng_streams.stream(seed, "verify", "scale_factor", d).uniform(0.01, 100.0, size=(N_POINTS, 1))
        a, _ = project_batch(z, RADIUS)
        b, _ = project_batch(c * z, RADIUS)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return at_most(worst, TOLERANCE * RADIUS, "max |N_R(cz) - N_R(z)| for c > 0")


def check_projector_identities(seed: int) -> CheckResult:
    """P^2 = P, P^T = P and P z = 0 at on-sphere base points"""
    worst, worst_case = 0.0, ""
    for d in DIMENSIONS:
        projected, _ = project_batch(_points(seed, "projector", d), RADIUS)
        for base in projected:
            p = tangent_projector(project_to_sphere(base, RADIUS)).matrix()
            errors = {
                "idempotent": np.max(np.abs(p @ p - p)),
                "symmetric": np.max(np.abs(p - p.T)),
                "annihilates base": np.max(np.abs(p @ base)) / RADIUS,
            }
            for name, error in errors.items():
                if error > worst:
                    worst, worst_case = float(error), f"{name} (d={d})"
    return at_most(worst, TOLERANCE, f"worst identity: {worst_case}")


def check_jacobian(seed: int) -> CheckResult:
    """Central differences of N_R at on-sphere base points against P v"""
    h = 1e-6
    worst = 0.0
    for d in DIMENSIONS:
        rng = rng_streams.stream(seed, "verify", "jacobian", d)
        for _ in range(50):
            z, _ = project_batch(rng.standard_normal(d), RADIUS)
            v = rng.standard_normal(d)
            plus, _ = project_batch(z + h * v, RADIUS)
            minus, _ = project_batch(z - h * v, RADIUS)
            numeric = (plus - minus) / (2.0 * h)
            analytic = tangent_projector(project_to_sphere(z, RADIUS)).apply(v)
            worst = max(worst, float(np.max(np.abs(numeric - analytic))))
    return at_most(worst, JACOBIAN_TOLERANCE, "max |finite-difference Jacobian - P| at base points")


def well_conditioned_map(rng: np.random.Generator, d: int) -> np.ndarray:
    """Q diag(s) with Q a random orthogonal matrix and s ~ U(0.5, 2), so cond(A) <= 4"""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    return q * rng.uniform(0.5, 2.0, size=d)


def check_composed_refeeding(seed: int) -> CheckResult:
    """Iterate z <- N_R(A z) for a fixed random well-conditioned A; the norm never leaves R"""
    rng = rng_streams.stream(seed, "verify", "refeed")
    d = 16
    a = well_conditioned_map(rng, d)
    z, _ = project_batch(rng.standard_normal(d), RADIUS)
    worst = 0.0
    for _ in range(REFEED_STEPS):
        z, _ = project_batch(a @ z, RADIUS)
        worst = max(worst, abs(float(np.linalg.norm(z)) - RADIUS))
    return at_most(worst, REFEED_TOLERANCE, f"max norm deviation over {REFEED_STEPS} refeeding steps")


def check_stability_order(seed: int) -> CheckResult:
    worst = float("inf")
    for d in DIMENSIONS:
        rng = rng_streams.stream(seed, "verify", "stability", d)
        for _ in range(10):
            base = project_to_sphere(rng.standard_normal(d), RADIUS)
            report = first_order_stability_check(base, rng.standard_normal(d))
            worst = min(worst, report.order)
    return at_least(worst, MIN_ORDER, "smallest fitted order of the first-order residual")


SPHERE_GEOMETRY_SUITE = SuiteDefinition(
    name="sphere_geometry",
    description="Constant-norm projection, tangent projector and first-order stability",
    checks=[
        PropertyCheck("projection_has_norm_r", "Projected rows have norm R", check_norm),
        PropertyCheck("projection_idempotent", "Projecting twice equals projecting once", check_idempotent),
        PropertyCheck("projection_scale_invariant", "Positive rescaling does not change the projection", check_scale_invariant),
        PropertyCheck(
            "tangent_projector_identities",
            "The tangent projector is a symmetric idempotent that annihilates the base point",
            check_projector_identities,
        ),
        PropertyCheck(
            "jacobian_is_tangent_projector",
            "On the sphere the projection's Jacobian equals the tangent projector",
            check_jacobian,
        ),
        PropertyCheck(
            "composed_refeeding_keeps_norm",
            "Ten thousand steps of z <- N_R(A z) stay on the sphere",
            check_composed_refeeding,
        ),
        PropertyCheck(
            "first_order_stability",
            f"The linearization residual decays with order at least {MIN_ORDER}",
            check_stability_order,
        ),
    ],
)
