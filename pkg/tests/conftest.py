import numpy as np
import pytest

from microreg import (FilamentSpec, Image, circular_crop, normalize, synth_filament,
                      to_polar)

# the worked transition-probability table used across sequencing tests
TABLE1 = np.array([
    [1.0, 0.8, 0.4, 0.6],
    [0.8, 1.0, 0.5, 0.7],
    [0.4, 0.5, 1.0, 0.6],
])
TABLE1 = np.vstack([TABLE1, [0.6, 0.7, 0.6, 1.0]])


def asym_scene(base_deg=0.0, noise_sigma=0.0, seed=0, size=256):
    """Filament composite without the 180-degree ambiguity of a lone filament.

    A centered filament plus an off-center blob (a zero-length filament rolled
    away from the center) gives the scene a unique orientation.
    """
    main = synth_filament(FilamentSpec(
        size=size, orientation_deg=base_deg, half_length=0.3 * size))
    blob = synth_filament(FilamentSpec(
        size=size, half_length=1.0, width_sigma=size / 50.0, amplitude=0.9))
    dx, dy = round(size * 0.07), round(size * 0.12)
    pixels = main.pixels + np.roll(np.roll(blob.pixels, dy, axis=0), dx, axis=1)
    if noise_sigma > 0:
        noise = synth_filament(FilamentSpec(
            size=size, amplitude=0.0, noise_sigma=noise_sigma, seed=seed))
        pixels = pixels + noise.pixels
    return Image(pixels)


def polar_pipeline(img, angular=720, radial=200):
    """Circular crop, normalize, and polar-resample an image around its center.

    max_radius stays 2 px inside the crop disc so the grid is fully valid.
    """
    cx = (img.width - 1) / 2.0
    cy = (img.height - 1) / 2.0
    radius = min(img.width, img.height) / 2.0 - 1.0
    cropped = circular_crop(img, cx, cy, radius)
    x0 = max(0, int(np.ceil(cx - radius)))
    y0 = max(0, int(np.ceil(cy - radius)))
    return to_polar(normalize(cropped), cx - x0, cy - y0, angular, radial,
                    max_radius=radius - 2.0)


@pytest.fixture
def table1():
    from microreg import ProbabilityTable
    return ProbabilityTable(TABLE1)
