"""
Procedural near-eye renderer.

Content (the mask) is controlled by the pose and the person's iris size and eye
side; appearance (intensities) by the person's style parameters. Both are pure
functions of their arguments, so a dataset rebuilt from the same seed is
byte-identical.
"""
import numpy as np

from src.apps.core.seeding import derive_rng
from src.apps.models.eye_model import (
    LEFT, RIGHT, POSE_RANGES, STYLE_RANGES, EyePose, PersonStyleParams,
)
from src.apps.utils.exceptions import OutOfRangeError

MIN_RENDER_SIZE = 32

# Eye aperture semi-axes as fractions of the image size
APERTURE_X = 0.42
APERTURE_Y = 0.30
# Eye-corner asymmetry; the sign flips with the eye side
CORNER_SKEW = 0.3
PUPIL_TO_IRIS = 0.45

PUPIL_LEVEL = -0.9
IRIS_CONTRAST = 0.9
IRIS_PATTERN_AMP = 0.04
IRIS_PATTERN_FREQ = 8
SKIN_GRADIENT = 0.15
BASE_NOISE_AMP = 0.02


def _uniform(rng, bounds):
    low, high = bounds
    return float(rng.uniform(low, high))


def sample_person(person_id, seed):
    """
    Style parameters of a person. Deterministic in (person_id, seed); even ids are left eyes.
    """
    rng = derive_rng(seed, person_id)
    return PersonStyleParams(
        base_brightness=_uniform(rng, STYLE_RANGES['base_brightness']),
        iris_shade=_uniform(rng, STYLE_RANGES['iris_shade']),
        sclera_texture_amp=_uniform(rng, STYLE_RANGES['sclera_texture_amp']),
        skin_tone=_uniform(rng, STYLE_RANGES['skin_tone']),
        iris_radius_ratio=_uniform(rng, STYLE_RANGES['iris_radius_ratio']),
        mode=LEFT if person_id % 2 == 0 else RIGHT,
    )


def sample_pose(rng):
    return EyePose(
        gaze_x=_uniform(rng, POSE_RANGES['gaze_x']),
        gaze_y=_uniform(rng, POSE_RANGES['gaze_y']),
        eyelid_openness=_uniform(rng, POSE_RANGES['eyelid_openness']),
    )


def _pixel_grid(h, w):
    # Pixel centres relative to the image centre. Exact in floating point, so a
    # horizontal flip maps xs to exactly -xs.
    ys = np.arange(h, dtype=np.float64) + 0.5 - h / 2.0
    xs = np.arange(w, dtype=np.float64) + 0.5 - w / 2.0
    return np.meshgrid(ys, xs, indexing='ij')


def render_mask(style, pose, h, w):
    """
    Class map: pupil disk inside iris disk, both clipped to the eyelid aperture, on skin.
    """
    if h < MIN_RENDER_SIZE or w < MIN_RENDER_SIZE:
        raise OutOfRangeError(f"Render size must be at least {MIN_RENDER_SIZE}x{MIN_RENDER_SIZE}, got {h}x{w}")
    yy, xx = _pixel_grid(h, w)

    skew = CORNER_SKEW if style.mode == LEFT else -CORNER_SKEW
    u = xx / (APERTURE_X * w)
    inside_u = np.abs(u) < 1.0
    half_height = APERTURE_Y * h * pose.eyelid_openness * np.sqrt(np.clip(1.0 - u * u, 0.0, None)) * (1.0 + skew * u)
    eye = inside_u & (np.abs(yy) < half_height)

    iris_radius = style.iris_radius_ratio * min(h, w) / 2.0
    pupil_radius = PUPIL_TO_IRIS * iris_radius
    dx = xx - pose.gaze_x * w
    dy = yy - pose.gaze_y * h
    dist2 = dx * dx + dy * dy

    mask = np.zeros((h, w), dtype=np.uint8)
    mask[eye] = 1
    mask[eye & (dist2 < iris_radius ** 2)] = 2
    mask[eye & (dist2 < pupil_radius ** 2)] = 3
    return mask


def render_eye(style, pose, h, w, noise_seed=0):
    """
    Returns (image, mask): float32 image in [-1, 1] and the pixel-aligned uint8 class map.
    """
    mask = render_mask(style, pose, h, w)
    yy, xx = _pixel_grid(h, w)
    noise = derive_rng(noise_seed).standard_normal((h, w))

    image = np.empty((h, w), dtype=np.float64)

    skin = (2.0 * style.skin_tone - 1.0) - SKIN_GRADIENT * (yy / h)
    image[:] = skin + BASE_NOISE_AMP * noise

    sclera = mask == 1
    image[sclera] = style.base_brightness + style.sclera_texture_amp * noise[sclera]

    iris = mask == 2
    angle = np.arctan2(yy - pose.gaze_y * h, xx - pose.gaze_x * w)
    pattern = IRIS_PATTERN_AMP * np.cos(IRIS_PATTERN_FREQ * angle)
    iris_level = IRIS_CONTRAST * (2.0 * style.iris_shade - 1.0)
    image[iris] = iris_level + pattern[iris] + BASE_NOISE_AMP * noise[iris]

    pupil = mask == 3
    image[pupil] = PUPIL_LEVEL + BASE_NOISE_AMP * noise[pupil]

    return np.clip(image, -1.0, 1.0).astype(np.float32), mask
