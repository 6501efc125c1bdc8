"""Small portable PRNGs: splitmix64 and xorshift64*.

Both are implemented on Python ints masked to 64 bits, so streams are
identical on every platform and interpreter.
"""

_MASK64 = (1 << 64) - 1
_XORSHIFT_STAR_MULT = 0x2545F4914F6CDD1D


class SplitMix64:
    """Sebastiano Vigna's splitmix64 generator."""

    def __init__(self, seed=0):
        self.state = int(seed) & _MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random_bytes(self, n):
        """``n`` bytes taken from consecutive outputs, little-endian."""
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "little")
        return bytes(out[:n])


class XorShift64Star:
    """xorshift64* stream seeded through splitmix64.

    ``random()`` maps the top 53 bits of each output onto [0, 1).
    """

    def __init__(self, seed=0):
        state = SplitMix64(seed).next_u64()
        # xorshift has an all-zero fixed point
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XORSHIFT_STAR_MULT) & _MASK64

    def random(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
