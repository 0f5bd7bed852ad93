from . import dist, tensor
from .checkpoint import (PolicyCheckpoint, checkpoint_from_policy, load_checkpoint,
                         policy_from_checkpoint, save_checkpoint)
from .gpt import GPTPolicy, GPTPolicyConfig
from .layers import ObsNormalizer, ParamStore
from .mlp import MLPPolicy, MLPPolicyConfig
from .optim import Adam, cosine_anneal
from .rnn import LSTMPolicy, RNNPolicyConfig
from .tensor import Tensor, backward, no_grad, zero_grads

__all__ = [
    "Adam", "GPTPolicy", "GPTPolicyConfig", "LSTMPolicy", "MLPPolicy",
    "MLPPolicyConfig", "ObsNormalizer", "ParamStore", "PolicyCheckpoint",
    "RNNPolicyConfig", "Tensor", "backward", "checkpoint_from_policy",
    "cosine_anneal", "dist", "load_checkpoint", "no_grad",
    "policy_from_checkpoint", "save_checkpoint", "tensor", "zero_grads",
]
