#!/usr/bin/env python3
"""
Script to synthesize a loop-delay log for trying out `htd delay`

Delays are a floor latency plus gamma-distributed jitter, which gives the
right-skewed shape of internet round trips between two laboratories.
"""

import os
import sys

import click
import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.delay import write_delay_log


def generate(n, floor_ms, jitter_ms, seed):
    rng = np.random.default_rng(seed)
    return floor_ms + rng.gamma(4.0, jitter_ms / 4.0, n)


@click.command()
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("-n", "count", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--floor", "floor_ms", type=float, default=12.18, show_default=True, help="Minimum latency in ms")
@click.option("--jitter", "jitter_ms", type=float, default=0.4, show_default=True, help="Mean jitter in ms")
@click.option("--seed", type=int, default=0, show_default=True)
def main(output, count, floor_ms, jitter_ms, seed):
    """Write COUNT synthetic delays to OUTPUT."""
    write_delay_log(generate(count, floor_ms, jitter_ms, seed), output)
    click.echo(f"wrote {count} delays to {output}")


if __name__ == "__main__":
    main()
