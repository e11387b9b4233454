from dataclasses import dataclass, asdict

LEFT = 'left'
RIGHT = 'right'

STYLE_RANGES = {
    'base_brightness': (0.2, 0.8),
    'iris_shade': (0.1, 0.9),
    'sclera_texture_amp': (0.0, 0.15),
    'skin_tone': (0.2, 0.9),
    'iris_radius_ratio': (0.35, 0.55),
}

POSE_RANGES = {
    'gaze_x': (-0.3, 0.3),
    'gaze_y': (-0.3, 0.3),
    'eyelid_openness': (0.3, 1.0),
}


@dataclass(frozen=True)
class PersonStyleParams:
    """
    Appearance of one synthetic person. `mode` is the eye side and fixes the corner geometry.
    """
    base_brightness: float
    iris_shade: float
    sclera_texture_amp: float
    skin_tone: float
    iris_radius_ratio: float
    mode: str

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EyePose:
    gaze_x: float
    gaze_y: float
    eyelid_openness: float

    def mirrored(self):
        return EyePose(-self.gaze_x, self.gaze_y, self.eyelid_openness)

    def to_dict(self):
        return asdict(self)
