"""Deterministic per-task seeds, independent of scheduling order."""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, index: int) -> int:
    """``master XOR splitmix64(index)``, reduced to 64 bits."""
    return (int(master) & MASK64) ^ splitmix64(int(index))
