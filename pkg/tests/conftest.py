"""Test configuration and fixtures"""

import numpy as np
import pytest

from tests.fixtures.factories import make_bundle, make_config, make_scenario, make_spec


@pytest.fixture
def rng():
    """Seeded generator; tests must not depend on global random state"""
    return np.random.default_rng(1234)


@pytest.fixture
def spec():
    """Small universal scenario description"""
    return make_spec()


@pytest.fixture
def scenario():
    """Scenario drawn from the small universal description"""
    return make_scenario()


@pytest.fixture
def config():
    """Few-epoch training configuration"""
    return make_config()


@pytest.fixture
def bundle():
    """Narrow freshly initialized networks for the small scenario"""
    return make_bundle()
