import numpy as np
import pytest

from wrapperfs.data import FeatureColumn, concat_columns


def numeric_dataset(X, y, name="synthetic", prefix="f"):
    X = np.asarray(X, dtype=float)
    cols = [FeatureColumn.numeric(f"{prefix}{j}", X[:, j]) for j in range(X.shape[1])]
    return concat_columns(cols, [str(v) for v in y], name=name)


def planted(seed, n=120, n_informative=3, n_redundant=3, n_noise=6):
    """Two-class data whose label depends on the informative columns only.

    Redundant columns are noisy linear mixes of the informative ones; noise
    columns are independent of everything.  Column order: informative,
    redundant, noise.
    """
    rng = np.random.default_rng(seed)
    inf = rng.standard_normal((n, n_informative))
    y = (inf.sum(axis=1) > 0).astype(int)
    mix = rng.standard_normal((n_informative, n_redundant))
    red = inf @ mix + 0.3 * rng.standard_normal((n, n_redundant))
    noise = rng.standard_normal((n, n_noise))
    return numeric_dataset(np.hstack([inf, red, noise]), y, name=f"planted{seed}")


@pytest.fixture
def label_copy_dataset():
    """Feature 0 equals the label, feature 1 is constant, feature 2 is noise."""
    rng = np.random.default_rng(3)
    y = np.repeat([0, 1, 2], 20)
    X = np.column_stack([y, np.full(60, 5.0), rng.standard_normal(60)])
    return numeric_dataset(X, y, name="labelcopy")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
