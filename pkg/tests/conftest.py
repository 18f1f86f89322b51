import numpy as np
import pytest

from holoforge import ComplexField2D, ComplexVolume, ScanTrace


def make_field(rng, rows=60, cols=60, pitch_mm=5.0, f32_clean=False):
    data = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    if f32_clean:
        data = data.astype(np.complex64).astype(np.complex128)
    return ComplexField2D(data, pitch_mm)


def make_volume(rng, slices=3, rows=8, cols=8, pitch_mm=5.0, z0_mm=0.0,
                dz_mm=10.0, f32_clean=False):
    data = rng.normal(size=(slices, rows, cols)) + 1j * rng.normal(
        size=(slices, rows, cols)
    )
    if f32_clean:
        data = data.astype(np.complex64).astype(np.complex128)
    return ComplexVolume(data, pitch_mm, z0_mm, dz_mm if slices > 1 else 0.0)


def make_zigzag_trace(value_fn, rows=12, cols=12, pitch_mm=5.0, jitter_mm=0.0,
                      rng=None):
    """Serpentine scan over a rows x cols lattice, sampling value_fn(x, y).

    With jitter_mm > 0 positions wobble off the lattice, which is the
    realistic hand-scan case for the interpolation tests.
    """
    xs, ys, ts = [], [], []
    t = 0.0
    for r in range(rows):
        span = range(cols) if r % 2 == 0 else range(cols - 1, -1, -1)
        for c in span:
            x = c * pitch_mm
            y = r * pitch_mm
            if jitter_mm:
                x += rng.uniform(-jitter_mm, jitter_mm)
                y += rng.uniform(-jitter_mm, jitter_mm)
            xs.append(x)
            ys.append(y)
            ts.append(t)
            t += 100.0
    xs, ys = np.array(xs), np.array(ys)
    values = np.broadcast_to(
        np.asarray(value_fn(xs, ys), dtype=np.complex128), xs.shape
    )
    return ScanTrace(np.array(ts), xs, ys, np.abs(values), np.angle(values))


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
