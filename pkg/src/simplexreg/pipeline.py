"""Stage-by-stage analysis of a compositional data set.

Stages run in a fixed order. A stage that needs an earlier result
computes it on demand, but only the stages that were asked for write
tables and figures.
"""

import json
import logging
from pathlib import Path

import numpy as np

from simplexreg import dirichlet as dirich
from simplexreg.composition import replace_zeros_knn, subcomposition
from simplexreg.geometry import (
    discriminant_axis,
    group_mean_summary,
    rank_alr_denominators,
    summated_logratio,
    total_logratio_variance,
    weighted_lra,
)
from simplexreg.io import Table, ingest_csv, write_compositions_csv
from simplexreg.regression import (
    bootstrap_coefficients,
    design_matrix,
    fit_logratio_regression,
    manova_pillai,
)
from simplexreg.transforms import alr_basis

__all__ = ["STAGES", "SCHEMA_VERSION", "Pipeline", "StageFailure"]

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
STAGES = ("impute", "rank-alr", "lra", "slr", "regress", "manova", "dirichlet",
          "diagnose")


class StageFailure(Exception):
    """Wraps the error raised inside a stage, keeping the stage name."""

    def __init__(self, stage, error):
        super().__init__(f"stage {stage!r} failed: {error}")
        self.stage = stage
        self.error = error


def _ratio_label(num, den):
    return f"{'+'.join(num)}/{'+'.join(den)}"


class Pipeline:
    """Run analysis stages for one :class:`~simplexreg.io.AnalysisConfig`.

    Examples
    --------
    >>> report = Pipeline(config).run(["rank-alr", "regress"])  # doctest: +SKIP
    """

    def __init__(self, config):
        self.config = config
        self.out = Path(config.output_dir)
        self._cache = {}
        self.report = {
            "schema_version": SCHEMA_VERSION,
            "config": config.to_dict(),
            "status": "running",
            "stages": {},
        }

    # -- shared intermediate results -------------------------------------
    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def ingested(self):
        return self._get("ingested", lambda: ingest_csv(self.config.input, self.config))

    @property
    def composition(self):
        def build():
            m = replace_zeros_knn(self.ingested.composition, self.config.k)
            return m.with_weights(self.config.weights)
        return self._get("composition", build)

    @property
    def design(self):
        return self.ingested.design

    @property
    def groups(self):
        g = self.config.group
        if g is None:
            return None, None
        labels = self.ingested.covariates[g]
        ref = self.config.categorical.get(g)
        levels = sorted(set(labels.tolist()), key=str)
        if ref is not None and ref in levels:
            levels.remove(ref)
            levels.insert(0, ref)
        return labels, tuple(levels)

    @property
    def denominator(self):
        def build():
            if self.config.alr_denominator not in (None, "auto"):
                return self.config.alr_denominator
            return rank_alr_denominators(self.composition)[0].part
        return self._get("denominator", build)

    @property
    def discriminant(self):
        labels, order = self.groups
        return self._get("discriminant",
                         lambda: discriminant_axis(self.composition, labels, order))

    # -- driver -----------------------------------------------------------
    def run(self, stages=STAGES):
        """Run ``stages`` in pipeline order and return the report dict.

        Raises
        ------
        StageFailure
            Wrapping the first error. Tables from completed stages stay on
            disk, and ``report.json`` is written with status ``"failed"``.
        """
        unknown = set(stages) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown stages {sorted(unknown)}")
        self.out.mkdir(parents=True, exist_ok=True)
        try:
            self.report["ingest"] = self.ingested.report
        except Exception as exc:
            self._fail("ingest", exc)
        for stage in STAGES:
            if stage not in stages:
                continue
            logger.info("running stage %s", stage)
            try:
                section = getattr(self, "_stage_" + stage.replace("-", "_"))()
            except Exception as exc:
                self._fail(stage, exc)
            self.report["stages"][stage] = section
        self.report["status"] = "ok"
        self._write_report()
        return self.report

    def _fail(self, stage, exc):
        self.report["status"] = "failed"
        self.report["error"] = {"stage": stage, "type": type(exc).__name__,
                                "message": str(exc)}
        self._write_report()
        raise StageFailure(stage, exc) from exc

    def _write_report(self):
        if "json" not in self.config.formats:
            return
        path = self.out / "report.json"
        with path.open("w", encoding="utf-8") as fh:
            json.dump(self.report, fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")

    def _emit(self, tables, figures=()):
        section = {"tables": {}}
        for t in tables:
            section["tables"][t.name] = t.to_json()
            if "csv" in self.config.formats:
                t.write_csv(self.out)
        if "svg" in self.config.formats:
            from simplexreg import plots

            for name, draw in figures:
                plots.save_svg(draw, self.out / f"{name}.svg")
        return section

    # -- stages -------------------------------------------------------------
    def _stage_impute(self):
        m = self.composition
        write_compositions_csv(self.out / "imputed.csv", m, self.ingested.covariates,
                               id_column=self.config.id_column or "sample_id")
        before = self.ingested.composition
        table = Table("imputation_summary", ["part", "zeros_replaced", "weight"],
                      [[p, int(z), float(w)] for p, z, w in
                       zip(m.part_names, before.zero_counts(), m.weights)])
        section = self._emit([table])
        section["k"] = self.config.k
        return section

    def _stage_rank_alr(self):
        rows = rank_alr_denominators(self.composition)
        table = Table("table1_alr_ranking", ["part", "weight", "procrustes_correlation"],
                      [[r.part, r.weight, r.correlation] for r in rows])
        section = self._emit([table])
        section["total_logratio_variance"] = total_logratio_variance(self.composition)
        return section

    def _stage_lra(self):
        m = self.composition
        lra = weighted_lra(m, rank=min(2, m.n - 1, m.D - 1))
        labels, order = self.groups
        label_col = [str(g) for g in labels] if labels is not None else [""] * m.n
        dims = [f"dim{k + 1}" for k in range(lra.rank)]
        tables = [
            Table("lra_variance", ["dimension", "variance_explained"],
                  [[d, float(v)] for d, v in zip(dims, lra.variance_explained)]),
            Table("lra_row_scores", ["sample", "group", *dims],
                  [[s, g, *row] for s, g, row in
                   zip(m.sample_ids, label_col, lra.row_scores.tolist())]),
            Table("lra_column_loadings", ["part", *dims],
                  [[p, *row] for p, row in zip(m.part_names, lra.column_loadings.tolist())]),
        ]
        figures = [("figure2_lra", lambda fig: _plots().lra_biplot(fig, lra, m, label_col))]
        if labels is not None:
            disc = self.discriminant
            res = disc.residual_lra
            tables += [
                Table("discriminant_axis", ["part", "coefficient"],
                      [[p, float(a)] for p, a in zip(m.part_names, disc.axis)]),
                Table("discriminant_scores", ["sample", "group", "axis", "residual_dim1"],
                      [[s, g, float(a), float(r)] for s, g, a, r in
                       zip(m.sample_ids, label_col, disc.scores, res.row_scores[:, 0])]),
            ]
            figures.append(("figure2_discriminant",
                            lambda fig: _plots().discriminant_plot(fig, disc, m, label_col)))
        section = self._emit(tables, figures)
        section["total_variance"] = lra.total_variance
        return section

    def _slr_specs(self):
        cfg = self.config
        disc = self.discriminant
        names = self.composition.part_names
        order = np.argsort(disc.axis)
        specs = []
        if cfg.pairwise_ratio:
            specs.append(([cfg.pairwise_ratio[0]], [cfg.pairwise_ratio[1]]))
        else:
            specs.append(([names[order[-1]]], [names[order[0]]]))
        if cfg.slr_numerator and cfg.slr_denominator:
            specs.append((list(cfg.slr_numerator), list(cfg.slr_denominator)))
        elif len(names) >= 4:
            specs.append(([names[order[-1]], names[order[-2]]],
                          [names[order[0]], names[order[1]]]))
        return specs

    def _stage_slr(self):
        labels, order = self.groups
        if labels is None:
            raise ValueError("slr stage needs a two-level group covariate")
        m = self.composition
        rows, summaries = [], []
        for num, den in self._slr_specs():
            values = summated_logratio(m, num, den)
            s = group_mean_summary(values, labels, order, self.config.replicates or 10000,
                                   self.config.seed or 0, self.config.workers)
            label = _ratio_label(num, den)
            summaries.append((label, s))
            for g in range(2):
                rows.append([label, str(s.groups[g]), s.means[g], *s.ci50[g], *s.ci95[g],
                             s.p_value])
        table = Table("figure3_group_means",
                      ["ratio", "group", "mean", "ci50_lower", "ci50_upper", "ci95_lower",
                       "ci95_upper", "p_value"], rows)
        return self._emit([table], [("figure3_confidence",
                                     lambda fig: _plots().confidence_plot(fig, summaries))])

    def _regression_tables(self, m, x, prefix, covariates_only=None):
        basis = alr_basis(m.part_names, self.denominator
                          if self.denominator in m.part_names else m.part_names[-1])
        fit = fit_logratio_regression(m, basis, x)
        boot = None
        if self.config.replicates:
            boot = bootstrap_coefficients(m, basis, x, self.config.replicates,
                                          self.config.seed, workers=self.config.workers)
        cov_idx = [j for j, c in enumerate(x.covariate_names)
                   if j > 0 and (covariates_only is None or c in covariates_only)]
        coef_rows = []
        for i, coord in enumerate(basis.coordinate_names):
            for j in cov_idx:
                est = fit.coefficients[i, j]
                row = [coord, x.covariate_names[j], est, np.exp(est),
                       fit.standard_errors[i, j]]
                if boot is not None:
                    row += [np.exp(boot.coef_lower[i, j]), np.exp(boot.coef_upper[i, j]),
                            boot.coef_p[i, j]]
                coef_rows.append(row)
        phi_rows = []
        for j in cov_idx:
            for d, part in enumerate(m.part_names):
                phi = fit.log_contrast[j, d]
                row = [x.covariate_names[j], part, phi, np.exp(phi)]
                if boot is not None:
                    row += [np.exp(boot.phi_lower[j, d]), np.exp(boot.phi_upper[j, d]),
                            boot.phi_p[j, d]]
                phi_rows.append(row)
        extra = ["ci_lower", "ci_upper", "p_boot"] if boot is not None else []
        coef = Table(f"{prefix}_coefficients",
                     ["log_ratio", "covariate", "estimate", "multiplicative", "se", *extra],
                     coef_rows)
        contrast = Table(f"{prefix}_log_contrast",
                         ["covariate", "part", "phi", "multiplicative", *extra], phi_rows)
        return fit, boot, coef, contrast

    def _stage_regress(self):
        m, x = self.composition, self.design
        fit, boot, coef, contrast = self._regression_tables(m, x, "table2")
        contrast.name = "figure4_log_contrast"
        self._cache["regression_fit"] = fit
        tables = [coef, contrast]
        figures = [("figure4_log_contrast",
                    lambda fig: _plots().log_contrast_plot(fig, contrast))]
        if self.config.subcomposition:
            sub = subcomposition(m, self.config.subcomposition)
            g = self.config.group
            xs = design_matrix({g: self.ingested.covariates[g]},
                               categorical={g: self.config.categorical[g]})
            _, _, scoef, scontrast = self._regression_tables(sub, xs, "figure5_subcomposition")
            tables += [scoef, scontrast]
            figures.append(("figure5_subcomposition",
                            lambda fig: _plots().log_contrast_plot(fig, scontrast)))
        section = self._emit(tables, figures)
        section["alr_denominator"] = fit.basis.denominator
        if boot is not None:
            section["bootstrap"] = {"replicates": boot.replicates,
                                    "discarded": boot.discarded, "warning": boot.warning}
        return section

    def _stage_manova(self):
        m, x = self.composition, self.design
        rows = manova_pillai(m, alr_basis(m.part_names, self.denominator), x)
        table = Table("table3_manova", ["term", "pillai", "df1", "df2", "approx_f", "p_value"],
                      [[r.term, r.pillai, r.df1, r.df2, r.approx_f, r.p_value] for r in rows])
        return self._emit([table])

    @property
    def dirichlet_design(self):
        def build():
            cfg = self.config
            cov = {c: self.ingested.covariates[c] for c in cfg.dirichlet_covariates}
            cat = {c: r for c, r in cfg.categorical.items() if c in cov}
            return design_matrix(cov, categorical=cat)
        return self._get("dirichlet_design", build)

    @property
    def dirichlet_fit(self):
        return self._get("dirichlet_fit", lambda: dirich.fit_dirichlet_regression(
            self.composition, self.dirichlet_design))

    def _stage_dirichlet(self):
        fit, x = self.dirichlet_fit, self.dirichlet_design
        rows = []
        for d, part in enumerate(fit.part_names):
            for k, cov in enumerate(x.covariate_names):
                rows.append([part, cov, fit.beta[d, k], np.exp(fit.beta[d, k]),
                             fit.standard_errors[d, k], fit.wald_z[d, k], fit.wald_p[d, k]])
        table = Table("table4_dirichlet",
                      ["part", "covariate", "estimate", "exp_estimate", "se", "z", "p_value"],
                      rows)
        section = self._emit([table])
        section.update(log_likelihood=fit.log_likelihood, converged=fit.converged,
                       iterations=fit.iterations, gradient_norm=fit.gradient_norm)
        return section

    def _stage_diagnose(self):
        m, fit, x = self.composition, self.dirichlet_fit, self.dirichlet_design
        rep = dirich.diagnose(fit, m, x, self.config.composite_threshold)
        labels, _ = self.groups
        label_col = [str(g) for g in labels] if labels is not None else [""] * m.n
        parts = list(m.part_names)

        def wide(name, mat):
            return Table(name, ["sample", "group", *parts],
                         [[s, g, *row] for s, g, row in
                          zip(m.sample_ids, label_col, mat.tolist())])

        tables = [
            wide("dirichlet_standardized_residuals", rep.standardized_residuals),
            Table("figure6_composite_residuals", ["sample", "group", "composite"],
                  [[s, g, float(c)] for s, g, c in
                   zip(m.sample_ids, label_col, rep.composite_residuals)]),
            wide("figure5_local_influence", rep.local_influence),
            wide("dirichlet_score_residuals", rep.score_residuals),
        ]
        for k, cov in enumerate(x.covariate_names):
            if k == 0:
                continue
            safe = cov.replace("[", "_").replace("]", "")
            tables.append(wide(f"figure7_overdispersion_{safe}", rep.overdispersion[:, :, k]))
        tables.append(Table("diagnostic_flags", ["sample", "part", "reason", "value"],
                            [list(f) for f in rep.flagged]))
        figures = [
            ("figure5_local_influence",
             lambda fig: _plots().componentwise_plot(fig, m, rep.local_influence, label_col,
                                                     "local influence")),
            ("figure6_composite_residuals",
             lambda fig: _plots().composite_plot(fig, rep.composite_residuals, label_col)),
        ]
        if x.p > 1:
            figures.append(("figure7_overdispersion",
                            lambda fig: _plots().componentwise_plot(
                                fig, m, rep.overdispersion[:, :, 1], label_col,
                                "overdispersion", mark_max=True)))
        return self._emit(tables, figures)


def _plots():
    from simplexreg import plots

    return plots
