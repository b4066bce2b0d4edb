# # One active-learning run
#
# Split a synthetic dataset into labelled positives P, a pool U and a test
# set, tune the SVDD on P and U only, then let the expected-margin rule query
# 25 labels from a simulated oracle.

from pu_active import (
    GroundTruthOracle,
    LoopConfig,
    ModelParams,
    SplitSpec,
    StrategyKind,
    SyntheticSpec,
    generate_synthetic,
    protocol_split,
    run_loop,
    tune_hyperparameters,
)

ds = generate_synthetic(SyntheticSpec())
pool = protocol_split(ds, SplitSpec(pool_size=200, train_fraction_of_targets=0.5, seed=3))
print(f"P={len(pool.positives)} U={len(pool.unlabeled)} T={len(pool.test)}")

t = tune_hyperparameters(ds, pool, seed=3)
print(f"tuned gamma={t.gamma:.4f} C={t.C}")

hyper = ModelParams(gamma=t.gamma, C_pos=t.C, C_neg=t.C, h_pos=t.h_pos, h_all=t.h_all)
oracle = GroundTruthOracle(ds.truth)
trace = run_loop(ds, pool, LoopConfig(budget=25, strategy=StrategyKind.EXPECTED_MARGIN), oracle, hyper)

print(f"\nbaseline F1 {trace.baseline.f1:.3f}")
for r in trace:
    if r.round % 5 == 0:
        m = r.metrics
        print(f"round {r.round:2d}  P={r.n_positive} N={r.n_negative}  "
              f"precision {m.precision:.3f}  recall {m.recall:.3f}  F1 {m.f1:.3f}")

# Most queries come back negative: the rule asks about samples whose
# likelihood ratio is near 1/2, which here are mostly outliers.

answers = "".join("+" if r.oracle_answer > 0 else "-" for r in trace)
print("answers:", answers)
