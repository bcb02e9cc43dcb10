"""Desk-scale environments with exact or cheap oracles."""

from .blobs import BlobsEnv, blobs_classification_env
from .lqr import LQREnv, LQRSolution, lqr_env, lqr_optimal, simulate_optimal
from .normalizer import RunningNormalizer, normalize, update
from .pointmass import PointMassEnv, pointmass_env
from .rollout import EpisodeResult, rollout

ENVS = {"lqr": LQREnv, "pointmass": PointMassEnv, "blobs": BlobsEnv}


def make_env(config: dict):
    """Build an environment from ``{"id": ..., **params}``."""
    config = dict(config)
    env_id = config.pop("id", None)
    if env_id not in ENVS:
        raise ValueError(f"unknown environment id {env_id!r}; choose from {sorted(ENVS)}")
    return ENVS[env_id](**config)


__all__ = [
    "BlobsEnv", "LQREnv", "LQRSolution", "PointMassEnv", "RunningNormalizer", "EpisodeResult",
    "blobs_classification_env", "lqr_env", "lqr_optimal", "make_env", "normalize",
    "pointmass_env", "rollout", "simulate_optimal", "update",
]
