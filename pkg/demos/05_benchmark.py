# # Comparing query rules across seeds
#
# The same benchmark the ``pu-active bench`` command runs, on fewer seeds so
# it finishes in a few seconds. Gains are final F1 minus the F1 before any
# query, in points.

import sys
import tempfile

from pu_active import StrategyKind, bench_config, run_experiment, sign_test

seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 8
with tempfile.TemporaryDirectory() as out:
    summary = run_experiment(bench_config(seeds=seeds, output=out))

print(summary.table())

rand = summary.gains(StrategyKind.RANDOM)
for s in (StrategyKind.EXPECTED_MARGIN, StrategyKind.EXPECTED_ENTROPY):
    print(f"{s.value} beats random: p = {sign_test(summary.gains(s), rand):.3g}")

# With 30 seeds (``python 05_benchmark.py 30``) both PU rules clear p < 0.05.
