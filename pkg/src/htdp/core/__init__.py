from htdp.core.data import Dataset, MomentProfile, SampleLoss
from htdp.core.domains import Ball, Box, Intersection, project, restrict
from htdp.core.losses import Glm, Linear, Logistic, PseudoHuber, Quadratic, Truncated, make_activation
from htdp.core.ops import clip, clip_two_threshold, clipped_mean

__all__ = [
    "Ball", "Box", "Intersection", "project", "restrict",
    "clip", "clip_two_threshold", "clipped_mean",
    "Dataset", "MomentProfile", "SampleLoss",
    "Linear", "Quadratic", "Glm", "Logistic", "PseudoHuber", "Truncated", "make_activation",
]
