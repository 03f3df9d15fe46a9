# %% [markdown]
# # Why the abstention must be randomized
#
# Two constant experts, one always saying 0 and one always saying 1.  The
# adversary waits for the learner's decision, answers a prediction with the
# opposite label and an abstention with the current leader's label.  Every
# deterministic learner then pays at least cT/2.

# %%
from abstention import demo_lower_bound

report = demo_lower_bound(c=0.3, T=10_000, runs=200)
print(report.summary())

# %% [markdown]
# Randomizing does not help against an adversary that sees the coin flip: it
# can answer the realized decision just as well.  The gap opens once the
# adversary only knows the learner's strategy (the policy), not its coins;
# then the randomized forecaster's regret is small, even negative: the labels
# keep both experts near T/2 mistakes while most abstentions cost only c.
