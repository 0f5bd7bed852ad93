from .bc import BCConfig, bc_train, l1_loss
from .sft import ReplayError, ReplaySpec, sft
from .windows import WindowDataset, make_windows

__all__ = ["BCConfig", "ReplayError", "ReplaySpec", "WindowDataset",
           "bc_train", "l1_loss", "make_windows", "sft"]
