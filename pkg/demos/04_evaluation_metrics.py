"""Acc@N and MRR@N from a hit profile.

A hit profile records, for each ground-truth pair, the rank at which the
relevant review appeared (absent = miss). Acc@N is the fraction hit
within the top N; MRR@N averages reciprocal ranks with misses as zero.

Run: python3 demos/04_evaluation_metrics.py
"""

from revrec import HitProfile
from revrec.metrics import report_from_profile

# 81 ground-truth pairs: 21 hit at rank 1, 11 more at rank 2, 6 more at
# rank 3, the rest missed.
hit_ranks = {}
idx = 0
for rank, count in ((1, 21), (2, 11), (3, 6)):
    for _ in range(count):
        hit_ranks[idx] = rank
        idx += 1

profile = HitProfile(length=81, hit_ranks=hit_ranks)
report = report_from_profile(profile, n_values=[1, 2, 3])
print(report.to_table())
print()
print(report.to_json())
