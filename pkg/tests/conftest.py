import numpy as np
import pytest


def rel_err(value, reference):
    return abs(value - reference) / abs(reference)


def l2_rel_err(values, reference, h):
    num = np.sqrt(np.sum((values - reference) ** 2) * h)
    den = np.sqrt(np.sum(reference**2) * h)
    return num / den


@pytest.fixture
def tmp_out(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out
