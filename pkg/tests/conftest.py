import json
import random

import pytest

from fairbits.bitstream import FixedBitSource
from fairbits.cli import main
from fairbits.randint import bits_needed


def reference_mt_outputs(seed, count):
    """CPython's C MT19937 loaded with the 2002 init_genrand state."""
    mt = [seed & 0xFFFFFFFF]
    for i in range(1, 624):
        mt.append((1812433253 * (mt[i - 1] ^ (mt[i - 1] >> 30)) + i) & 0xFFFFFFFF)
    rng = random.Random()
    rng.setstate((3, tuple(mt) + (624,), None))
    return [rng.getrandbits(32) for _ in range(count)]


def source_for_draws(draws, bounds):
    """Fixed source whose rejection draws against ``bounds`` return ``draws``.

    Each value is below its bound, so no draw is rejected.
    """
    bits = []
    for value, bound in zip(draws, bounds):
        b = bits_needed(bound)
        bits.extend((value >> (b - 1 - i)) & 1 for i in range(b))
    return FixedBitSource(bits)


@pytest.fixture
def run_cli(capsys):
    """Run the CLI; return (exit_code, stdout, stderr)."""
    def _run(*argv):
        code = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return _run


@pytest.fixture
def run_cli_json(run_cli):
    def _run(*argv):
        code, out, err = run_cli(*argv)
        assert code == 0, err
        return json.loads(out)
    return _run
