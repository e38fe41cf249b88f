"""Frozen oracle values for the distribution-kernel tests.

Generated by tests/_make_reference.py (quadrature + Monte Carlo
oracles, independent of the package implementation).  Regenerate with
`python tests/_make_reference.py` if the grids change.
"""

# x -> log Gamma(x), mpmath 120-digit
LN_GAMMA_TABLE = [
    (0.001, 6.907178885383853661684),
    (0.1, 2.252712651734205902006),
    (0.25, 1.288022524698077457371),
    (0.5, 0.5723649429247000870717),
    (1.0, 0.0),
    (1.5, -0.1207822376352452223455),
    (2.0, 0.0),
    (3.7, 1.4280723266653881292),
    (10.0, 12.80182748008146961121),
    (42.5, 115.9000704704145301234),
    (171.6, 709.6573587630563212999),
    (1000.0, 5905.220423209181211826),
    (100000.0, 1051287.708973656894901),
    (1000000.0, 12815504.56914761165998),
]

# (a, b, x) -> I_x(a, b), tanh-sinh quadrature at 120 digits
REG_INC_BETA_TABLE = [
    (2.5, 7.0, 0.2, 0.367496519904023069167),
    (0.5, 0.5, 0.5, 0.5),
    (1.5, 18.0, 0.1, 0.7212586045257461022404),
    (3.0, 3.0, 0.75, 0.896484375),
    (12.0, 2.5, 0.9, 0.7489178616723862426889),
    (0.7, 40.0, 0.02, 0.6981795401166702125138),
    (100.0, 100.0, 0.5, 0.5),
    (5.0, 1.0, 0.3, 0.00242999999999999955036),
]

# (x, d1, d2) -> P(F_{d1,d2} <= x), quadrature at 120 digits
F_CDF_TABLE = [
    (0.5, 1, 1, 0.3918265520306072701709),
    (2.0, 1, 8, 0.8049844718999242907073),
    (1.0, 1, 36, 0.6760149737348728052107),
    (3.5, 1, 100, 0.9357072669755579734364),
    (0.5, 2, 8, 0.3757049230300259106843),
    (1.0, 2, 36, 0.6221318610074550907859),
    (2.0, 2, 100, 0.8592873846667602857524),
    (3.5, 2, 1, 0.6464466094067262377996),
    (0.5, 3, 36, 0.3153504974879637765404),
    (1.0, 3, 36, 0.5960074293029398761218),
    (2.0, 3, 36, 0.8686285340034013884686),
    (2.866, 3, 36, 0.949985396909478844745),
    (0.5, 5, 10, 0.2299751193498983706963),
    (1.5, 5, 60, 0.7966228206951256804838),
    (2.5, 5, 200, 0.9680441155521081930998),
    (4.0, 5, 5, 0.9228113747577933035183),
    (0.8, 10, 20, 0.3693164421136802102952),
    (1.2, 10, 120, 0.7021890735600147235702),
    (2.2, 10, 6, 0.8265410757999278975991),
    (3.0, 10, 1000, 0.9990326008212887673527),
]

# (prob, d1, d2) -> x with P(F_{d1,d2} <= x) = prob, quadrature + bisection
F_QUANTILE_TABLE = [
    (0.95, 3, 36, 2.866265550940179450056),
    (0.99, 3, 36, 4.377095620801176640813),
    (0.95, 3, 103, 2.692841129380376507134),
    (0.8, 5, 60, 1.510774440204654643292),
    (0.5, 7, 7, 1.0),
]

# (x, d1, d2, lam) -> (MC estimate of P(F <= x), binomial SE); 10^7 draws
NCF_MC_SEED = 424242
NCF_MC_DRAWS = 10000000
NCF_CDF_MC_TABLE = [
    (1.0, 3, 36, 13.0, 0.0126646, 3.53612894375191e-05),
    (2.0, 3, 36, 13.0, 0.0735671, 8.255603054749544e-05),
    (2.866, 3, 36, 13.0, 0.1718026, 0.00011928389104704792),
    (5.0, 3, 36, 13.0, 0.4878784, 0.00015806741182591684),
    (0.5, 3, 36, 0.5, 0.2637344, 0.00013934796957854823),
    (1.0, 3, 36, 0.5, 0.5255351, 0.00015790755481229834),
    (2.0, 3, 36, 0.5, 0.8188093, 0.00012180337853832711),
    (3.5, 3, 36, 0.5, 0.9578294, 6.35548900523319e-05),
    (1.0, 3, 120, 25.0, 0.0001678, 4.095996132322393e-06),
    (2.5, 3, 120, 25.0, 0.0062906, 2.5002056618686392e-05),
    (4.0, 3, 120, 25.0, 0.0409223, 6.264795715959938e-05),
    (6.0, 3, 120, 25.0, 0.1712162, 0.00011912229550237856),
    (0.5, 1, 10, 5.0, 0.0615054, 7.597531557739e-05),
    (2.0, 1, 10, 5.0, 0.206588, 0.0001280271058237278),
    (6.0, 1, 10, 5.0, 0.5519328, 0.00015725869905482495),
    (12.0, 1, 10, 5.0, 0.8176632, 0.0001221024534420828),
    (2.0, 6, 60, 60.0, 3.4e-06, 5.830941982218653e-07),
    (3.5, 6, 60, 60.0, 0.000498, 7.055154115963732e-06),
    (5.0, 6, 60, 60.0, 0.0087897, 2.9516844638121465e-05),
    (8.0, 6, 60, 60.0, 0.1588217, 0.0001155843274882499),
]
