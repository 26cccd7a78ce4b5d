import numpy as np
import pytest

from mrlco.dag import GeneratorConfig, generate_dag
from mrlco.sim import SystemParams


@pytest.fixture
def params():
    return SystemParams(
        f_ue=1e9, f_host=4e10, user_count=4, r_ul=1e7, r_dl=1e7
    )


@pytest.fixture
def small_dags():
    cfg = GeneratorConfig(n=8, fat=0.6, density=0.6, ccr_range=(0.3, 0.5))
    rng = np.random.default_rng(1234)
    return [generate_dag(cfg, rng) for _ in range(12)]
