"""Frozen extended-precision reference values for estimator tests.

Generated by _make_estimator_reference.py (mpmath, 50 significant digits)
from the raw arrays in _tiny_instances.py.  Do not edit by hand.
"""

# Instance A: pooled least-squares coefficients (alpha_hat, beta_hat)
FIT_A_ALPHA = '0.471499999999999979627407498128'
FIT_A_BETA = '-0.352500000000000038302694349568'

# Instance B: sandwich variances (p = 1, reported as scalars)
SANDWICH_B_UNADJUSTED = '0.114822222222222240100924855815'
SANDWICH_B_ADJUSTED_SUMMED = '0.336592000000000063340147941441'
SANDWICH_B_ADJUSTED_AVERAGED = '2.21747200000000037537499035049'
SANDWICH_B_TRACE_INFLATION = True

# Instance C: end-to-end test statistic (N=12, T=12, p=q=3,
# hat-matrix adjusted, summed Gram)
STAT_C_BETA_HAT = ['-0.683819348515574844239574127237', '2.23816185129968357771375629082', '-0.802068853174380720362112923272']
STAT_C_SIGMA_DIAG = ['3.43313845727339441999201919644', '1.90760579888547868192822842892', '0.773666052696794874004706884574']
STAT_C_STATISTIC = '84.1233715680444720660866526027'
STAT_C_P_VALUE = '0.0013850540282889859112150525149'
