"""Counter-based random streams.

Every stream is a Philox generator keyed by ``SeedSequence(master,
spawn_key=keys)``.  Streams are addressed by integer tuples rather than drawn
sequentially, so the randomness a trial sees depends only on
``(master seed, its key)`` and never on scheduling or worker count.
"""
import numpy as np

# First element of every spawn key: separates shared objects from trials.
SHARED = 0
TRIAL = 1

# Second element for shared objects.
STREAM_DESIGN = 0
STREAM_SE = 1
STREAM_AUX = 2


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derived_seed(seed: int, *keys: int) -> int:
    """A 64-bit integer seed derived from ``(seed, keys)``; stable across runs."""
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_stream(master_seed: int, trial_id: int) -> np.random.Generator:
    return stream(master_seed, TRIAL, trial_id)


def trial_seed(master_seed: int, trial_id: int) -> int:
    return derived_seed(master_seed, TRIAL, trial_id)
