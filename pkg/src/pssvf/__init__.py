"""Policy evaluation networks with policy fingerprinting.

A critic ``V(theta)`` scores a policy from its parameters.  The fingerprint
critic feeds a policy's actions on a learned set of probing states to an
evaluator network, which makes the critic independent of the policy's
architecture.
"""

from .critics import FingerprintCritic, VanillaCritic, make_critic
from .envs import BlobsEnv, LQREnv, PointMassEnv, make_env
from .mlp import MlpSpec
from .policies import PolicyModel, init_policy, perturb
from .replay import ReplayBuffer
from .rng import Rng
from .training import ARS, PSSVF

__version__ = "0.1.0"

__all__ = [
    "ARS", "BlobsEnv", "FingerprintCritic", "LQREnv", "MlpSpec", "PSSVF", "PointMassEnv",
    "PolicyModel", "ReplayBuffer", "Rng", "VanillaCritic", "init_policy", "make_critic",
    "make_env", "perturb",
]
