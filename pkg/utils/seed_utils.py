# utils/seed_utils.py
"""
可重現的亂數種子衍生工具。
多次重啟、k 值掃描、交叉驗證的每一折與森林中的每一棵樹，都是獨立的工作；
每個工作的種子都由「基礎種子 + 工作編號」經過 splitmix64 混合得到，
因此無論以幾個執行緒平行執行、執行順序如何，每個工作拿到的亂數序列都相同。
"""
import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(value: int) -> int:
    """splitmix64 的單步輸出函式，輸入與輸出都是 64 位元無號整數。"""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *parts: int) -> int:
    """
    mix(base, i)：將基礎種子依序與每個工作編號混合。

    Args:
        base_seed (int): 使用者指定的 64 位元種子。
        *parts (int): 工作編號，例如 (restart_index,) 或 (grid_index, fold_index)。
    Returns:
        int: 新的 64 位元種子。
    """
    h = splitmix64(int(base_seed) & _MASK64)
    for part in parts:
        h = splitmix64(h ^ (int(part) & _MASK64))
    return h


def rng_for(base_seed: int, *parts: int) -> np.random.Generator:
    # numpy 的 Generator 可直接接受 64 位元整數作為種子
    return np.random.default_rng(derive_seed(base_seed, *parts))
