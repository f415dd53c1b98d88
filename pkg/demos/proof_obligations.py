"""
Re-checking the proof obligations by sampling
=============================================

Each event of each machine yields invariant-preservation (INV) obligations
and, for refined events, guard-strengthening (GS) obligations.  The checker
samples states that satisfy an obligation's hypothesis and evaluates the
conclusion in exact arithmetic.
"""

from simplex_rss import check_machines
from simplex_rss.po import summary_table

verdicts = check_machines(["M40", "M41"], budget=2000, seed=1)
print(summary_table(verdicts))

# %%
# Seeding a defect: the decision module looks only one cycle ahead.  The
# switching invariant of M41 breaks, and the counterexample is shrunk to a
# point on a guard boundary.
bad = check_machines(["M41"], budget=2000, seed=1, mutations=["dm-one-cycle-lookahead"])
for v in bad:
    if v.status == "FAIL":
        state, params = v.counterexample
        print("\n", v.po_id, "after", v.samples, "samples")
        print("  state :", {k: str(x) for k, x in sorted(state.items())})
        print("  params:", {k: str(x) for k, x in sorted(params.items())})
