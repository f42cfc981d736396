import numpy as np
import torch


def derive_seed(*keys: int) -> int:
    """64-bit seed derived from a tuple of non-negative keys, e.g. (seed, step) or (seed, chain index)."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1, dtype=np.uint64)[0])


def derive_generator(*keys: int) -> torch.Generator:
    return torch.Generator().manual_seed(derive_seed(*keys))


def chain_generators(seed: int, num_chains: int) -> list[torch.Generator]:
    """One independent random stream per sampling chain."""
    return [derive_generator(seed, chain) for chain in range(num_chains)]


def numpy_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(keys)))
