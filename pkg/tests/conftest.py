import pytest
from hypothesis import HealthCheck, settings

from sigcompose import SyntheticSpec, TreeParams, build_index, build_slice_plan
from sigcompose.evaluation import generate_synthetic

settings.register_profile(
    "sigcompose",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("sigcompose")


@pytest.fixture(scope="session")
def small_synthetic():
    """3 clusters x 6 funds x 24 months: cheap end-to-end fixture."""
    spec = SyntheticSpec(
        clusters=3, funds_per_cluster=6, months=24,
        factor_volatility=3.0, noise_volatility=1.0, seed=11,
    )
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def small_index(small_synthetic):
    plan = build_slice_plan(small_synthetic.month_range, 6)
    params = TreeParams(variability_threshold=5.0)
    return build_index(small_synthetic, plan, params)
