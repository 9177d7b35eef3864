"""The full analysis through the Python API on the synthetic cohort.

Run ``make_synthetic_cohort.py`` first, then ``python3 library_walkthrough.py``.
"""

import sys
import warnings

import numpy as np

from simplexreg import (
    AnalysisConfig, alr_basis, bootstrap_coefficients, design_matrix, diagnose,
    discriminant_axis, fit_dirichlet_regression, fit_logratio_regression,
    group_mean_summary, ingest_csv, manova_pillai, rank_alr_denominators,
    replace_zeros_knn, summated_logratio, weighted_lra,
)

path = sys.argv[1] if len(sys.argv) > 1 else "synthetic_cohort.csv"
PARTS = ["T.cells.CD8", "T.cells.CD4", "B.cells", "NK.cells", "Macrophage",
         "Dendritic.cells", "Mast.cells", "Neutrophils", "Eosinophils"]
cfg = AnalysisConfig(input=path, parts=PARTS, covariates=["race", "age"],
                     categorical={"race": "EA"}, id_column="sample", seed=1)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    ing = ingest_csv(path, cfg)
print("ingest:", ing.report["n"], "samples,", sum(ing.report["zero_counts"].values()), "zeros")

m = replace_zeros_knn(ing.composition, k=5).with_weights("average")
x, race = ing.design, ing.covariates["race"]

print("\nALR denominator ranking (weight, Procrustes correlation)")
ranking = rank_alr_denominators(m)
for row in ranking:
    print(f"  {row.part:16s} {row.weight:.3f}  {row.correlation:.3f}")
ref = ranking[0].part

lra = weighted_lra(m, 2)
print("\nLRA variance explained: %.1f%%, %.1f%%" % tuple(100 * lra.variance_explained[:2]))

disc = discriminant_axis(m, race, ("EA", "AA"))
order = np.argsort(disc.axis)
num, den = m.part_names[order[-1]], m.part_names[order[0]]
pair = group_mean_summary(summated_logratio(m, num, den), race, ("EA", "AA"), seed=1)
print(f"\n{num}/{den}: AA minus EA mean {pair.means[1] - pair.means[0]:+.3f}, p = {pair.p_value:.4f}")

basis = alr_basis(m.part_names, ref)
fit = fit_logratio_regression(m, basis, x)
boot = bootstrap_coefficients(m, basis, x, 2000, seed=1)
j = x.covariate_names.index("race[AA]")
print(f"\nALR regression on race and age, race effect (reference {ref})")
for i, name in enumerate(basis.coordinate_names):
    print(f"  {name:30s} x{np.exp(fit.coefficients[i, j]):.3f} "
          f"({np.exp(boot.coef_lower[i, j]):.3f}, {np.exp(boot.coef_upper[i, j]):.3f})")
for row in manova_pillai(m, basis, x):
    print(f"  MANOVA {row.term}: Pillai {row.pillai:.4f}, F {row.approx_f:.3f}, p {row.p_value:.4f}")

xr = design_matrix({"race": race}, categorical={"race": "EA"})
dfit = fit_dirichlet_regression(m, xr)
print("\nDirichlet regression, race coefficient")
for d, part in enumerate(m.part_names):
    star = "*" if dfit.wald_p[d, 1] < 0.05 else " "
    print(f"  {part:16s} {dfit.beta[d, 1]:+.4f} ({dfit.standard_errors[d, 1]:.4f}) "
          f"p={dfit.wald_p[d, 1]:.4f} {star}")

report = diagnose(dfit, m, xr)
print(f"\ndiagnostics: {len(report.flagged)} flags, max composite residual {report.composite_residuals.max():.1f}")
