# %% [markdown]
# # From a hypothesis class to a finite set of experts
#
# For a class of Littlestone dimension L, run SOA and let each expert flip
# SOA's prediction on at most L chosen rounds.  Some expert then reproduces
# every hypothesis on every instance sequence, so abstaining exponential
# weights over this cover competes with the class itself.

# %%
from abstention import HypothesisClass, cover_run, expert_cover, ldim
from abstention.checks import all_sequences
from abstention.littlestone import cover_size_bound, soa_mistakes

for name, cls in (("thresholds on 8 points", HypothesisClass.thresholds(8)),
                  ("all functions on 3 points", HypothesisClass.all_functions(3))):
    print(f"{name}: {cls.size} hypotheses, Littlestone dimension {ldim(cls)}")

cls = HypothesisClass.all_functions(3)
cover = expert_cover(cls, 6)
seqs = all_sequences(3, 6)
print(f"cover for T=6: {len(cover)} experts (limit {cover_size_bound(6, 3)}),"
      f" covers all {len(seqs)} sequences: {all(cover.covers(xs) for xs in seqs)}")

# %% [markdown]
# SOA itself never errs more than L times on realizable data.  The abstaining
# forecaster over the cover pays a little more but stays within its bound.

# %%
cls = HypothesisClass.thresholds(8)
xs = [3, 5, 4, 0, 7, 4, 6, 2, 5, 4]
ys = cls.table[4, xs]
print(f"SOA mistakes on a threshold sequence: {soa_mistakes(cls, xs, ys)} (dimension {ldim(cls)})")
res = cover_run(cls, xs, ys, c=0.2)
print(f"abstaining forecaster over {res.cover_size} experts: regret {res.regret:.3f} <= bound {res.bound:.3f}")
