import numpy as np
import pytest

from fedt.boosting import FedtParams, TrainingSet, train
from fedt.features import default_registry, extract_matrix
from fedt.signals import Label
from fedt.synthetic import GeneratorSpec, separable_windows


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def small_spec():
    return GeneratorSpec(n_falls=40, n_adls=3, adl_len=2500)


@pytest.fixture(scope="session")
def small_windows(small_spec):
    return separable_windows(small_spec)


@pytest.fixture(scope="session")
def small_features(small_windows, registry):
    return extract_matrix(small_windows, registry)


@pytest.fixture(scope="session")
def small_labels(small_windows):
    return np.asarray([1.0 if w.label is Label.FALL else 0.0 for w in small_windows])


@pytest.fixture(scope="session")
def small_training_set(small_features, small_labels, registry):
    return TrainingSet(small_features, small_labels, registry.fingerprint)


@pytest.fixture(scope="session")
def small_model(small_training_set):
    return train(small_training_set, FedtParams(n_rounds=8, max_depth=3))
