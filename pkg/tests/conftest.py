import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def brute_partial_trace(m, dA, dB, keep):
    """Index-loop partial trace, independent of any reshape trick."""
    if keep == "A":
        out = np.zeros((dA, dA), dtype=complex)
        for i in range(dA):
            for k in range(dA):
                for j in range(dB):
                    out[i, k] += m[i * dB + j, k * dB + j]
        return out
    out = np.zeros((dB, dB), dtype=complex)
    for j in range(dB):
        for l in range(dB):
            for i in range(dA):
                out[j, l] += m[i * dB + j, i * dB + l]
    return out


def brute_partial_transpose_B(m, dA, dB):
    out = np.zeros_like(m)
    for i in range(dA):
        for j in range(dB):
            for k in range(dA):
                for l in range(dB):
                    out[i * dB + j, k * dB + l] = m[i * dB + l, k * dB + j]
    return out


def werner(p):
    from operon.numerics import projector, singlet

    return p * projector(singlet()) + (1 - p) * np.eye(4) / 4
