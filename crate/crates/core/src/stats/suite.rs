//! The panel model suite: productivity and visibility models, their
//! field-moderated variants, and predicted-value grids for plotting.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{within_demean, DesignMatrix, Effects, OutcomeKind, INTERCEPT};
use super::describe::{mean, sample_sd};
use super::regression::{ols, poisson_irls, IrlsOptions, RegressionResult};
use crate::error::{Error, Result};
use crate::panel::{PaperRow, PersonYearRow};

/// Name of the generated IDR × field-IDR regressor.
pub const INTERACTION: &str = "idr_x_field_idr";
const PERIOD_PREFIX: &str = "period_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelTable {
    PersonYear,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Count outcome, log link.
    Poisson,
    /// Continuous (already logged) outcome.
    Ols,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Person fixed effects.
    #[default]
    Fixed,
    Pooled,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub table: PanelTable,
    pub outcome: String,
    pub family: Family,
    #[serde(default)]
    pub estimator: Estimator,
    pub regressors: Vec<String>,
    /// Add the IDR × field-IDR product as a regressor.
    #[serde(default)]
    pub interaction: bool,
    #[serde(default = "yes")]
    pub period_dummies: bool,
}

fn default_grid_z() -> Vec<f64> {
    vec![-2.0, -1.0, 0.0, 1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub models: Vec<ModelSpec>,
    /// Standardised IDR values at which the prediction grid is evaluated.
    #[serde(default = "default_grid_z")]
    pub grid_z: Vec<f64>,
    /// Also report entity-clustered standard errors.
    #[serde(default)]
    pub cluster_se: bool,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for SuiteSpec {
    fn default() -> Self {
        let productivity = strings(&[
            "idr",
            "mean_authors",
            "mean_reach",
            "repeat_collab_share",
            "lag_cum_cites_log",
            "professional_age",
        ]);
        let visibility = strings(&["idr", "reach", "n_authors", "jif", "professional_age"]);
        let model = |name: &str, table, outcome: &str, family, regressors: &Vec<String>, interaction| ModelSpec {
            name: name.into(),
            table,
            outcome: outcome.into(),
            family,
            estimator: Estimator::Fixed,
            regressors: regressors.clone(),
            interaction,
            period_dummies: true,
        };
        Self {
            models: vec![
                model("productivity", PanelTable::PersonYear, "productivity", Family::Poisson, &productivity, false),
                model("productivity_x_field", PanelTable::PersonYear, "productivity", Family::Poisson, &productivity, true),
                model("visibility", PanelTable::Paper, "log_citations", Family::Ols, &visibility, false),
                model("visibility_x_field", PanelTable::Paper, "log_citations", Family::Ols, &visibility, true),
            ],
            grid_z: default_grid_z(),
            cluster_se: false,
        }
    }
}

/// Row access by column name for the model builder.
pub trait PanelRecord {
    fn entity(&self) -> &str;
    fn period(&self) -> &str;
    fn is_excluded(&self) -> bool;
    /// `Ok(None)` is a missing value; unknown columns are an error.
    fn value(&self, column: &str) -> Result<Option<f64>>;
}

fn unknown(column: &str, table: &str) -> Error {
    Error::Design(format!("unknown column `{column}` in the {table} panel"))
}

impl PanelRecord for PersonYearRow {
    fn entity(&self) -> &str {
        &self.person_id
    }
    fn period(&self) -> &str {
        &self.period
    }
    fn is_excluded(&self) -> bool {
        self.excluded != 0
    }
    fn value(&self, column: &str) -> Result<Option<f64>> {
        Ok(match column {
            "idr" | "mean_idr" => self.mean_idr,
            "field_idr" => self.field_idr,
            "year" => Some(self.year as f64),
            "productivity" => Some(self.productivity as f64),
            "weighted_productivity" => Some(self.weighted_productivity),
            "citations" => Some(self.citations as f64),
            "n_scored" => Some(self.n_scored as f64),
            "mean_authors" => Some(self.mean_authors),
            "mean_jif" => self.mean_jif,
            "repeat_collab_share" => Some(self.repeat_collab_share),
            "mean_reach" => Some(self.mean_reach),
            "lag_cum_pubs" => Some(self.lag_cum_pubs as f64),
            "lag_cum_cites_log" => Some(self.lag_cum_cites_log),
            "professional_age" => Some(self.professional_age as f64),
            "age_imputed" => Some(self.age_imputed as f64),
            _ => return Err(unknown(column, "person-year")),
        })
    }
}

impl PanelRecord for PaperRow {
    fn entity(&self) -> &str {
        &self.person_id
    }
    fn period(&self) -> &str {
        &self.period
    }
    fn is_excluded(&self) -> bool {
        self.excluded != 0
    }
    fn value(&self, column: &str) -> Result<Option<f64>> {
        Ok(match column {
            "idr" => self.idr,
            "field_idr" => self.field_idr,
            "year" => Some(self.year as f64),
            "citations" => Some(self.citations as f64),
            "log_citations" => Some(self.log_citations),
            "reach" => Some(self.reach as f64),
            "n_authors" => Some(self.n_authors as f64),
            "jif" => self.jif,
            "repeat_collab" => Some(self.repeat_collab as f64),
            "professional_age" => Some(self.professional_age as f64),
            _ => return Err(unknown(column, "paper")),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PanelTables<'a> {
    pub person_year: &'a [PersonYearRow],
    pub paper: &'a [PaperRow],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub model: String,
    /// `mean-sd`, `mean` or `mean+sd`.
    pub field_level: String,
    pub field_idr: f64,
    pub idr_z: f64,
    pub idr: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub name: String,
    pub family: Family,
    pub estimator: Estimator,
    pub result: RegressionResult<f64>,
    /// Rows flagged as excluded (zero or undefined IDR).
    pub n_excluded: usize,
    /// Rows dropped for a missing value in a used column.
    pub n_missing: usize,
    pub grid: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSuiteReport {
    pub fits: Vec<ModelFit>,
}

impl ModelSuiteReport {
    pub fn get(&self, name: &str) -> Option<&ModelFit> {
        self.fits.iter().find(|f| f.name == name)
    }
}

/// Rows that survive exclusion and listwise deletion, with their values.
struct Sample {
    entity: Vec<usize>,
    periods: Vec<String>,
    y: Vec<f64>,
    columns: Vec<Vec<f64>>,
    field_idr: Vec<f64>,
    n_excluded: usize,
    n_missing: usize,
}

fn collect_sample<R: PanelRecord>(rows: &[R], spec: &ModelSpec) -> Result<Sample> {
    let mut names = spec.regressors.clone();
    if spec.interaction {
        for need in ["idr", "field_idr"] {
            if !names.iter().any(|n| n == need) {
                names.push(need.to_owned());
            }
        }
    }
    let entity_ids: BTreeSet<&str> = rows.iter().map(|r| r.entity()).collect();
    let entity_index: BTreeMap<&str, usize> = entity_ids.into_iter().zip(0..).collect();

    let mut s = Sample {
        entity: vec![],
        periods: vec![],
        y: vec![],
        columns: vec![Vec::new(); names.len()],
        field_idr: vec![],
        n_excluded: 0,
        n_missing: 0,
    };
    'rows: for row in rows {
        if row.is_excluded() {
            s.n_excluded += 1;
            continue;
        }
        let Some(y) = row.value(&spec.outcome)? else {
            s.n_missing += 1;
            continue;
        };
        let mut vals = Vec::with_capacity(names.len());
        for name in &names {
            match row.value(name)? {
                Some(v) => vals.push(v),
                None => {
                    s.n_missing += 1;
                    continue 'rows;
                }
            }
        }
        s.entity.push(entity_index[row.entity()]);
        s.periods.push(row.period().to_owned());
        s.y.push(y);
        if spec.interaction {
            s.field_idr.push(row.value("field_idr")?.unwrap_or_default());
        }
        for (col, v) in s.columns.iter_mut().zip(vals) {
            col.push(v);
        }
    }
    // keep only the requested regressors; helper columns were for listwise deletion
    s.columns.truncate(spec.regressors.len());
    Ok(s)
}

/// Compact entity indices to `0..g` over the rows actually used.
fn compact(entity: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    for &e in entity {
        let next = map.len();
        map.entry(e).or_insert(next);
    }
    entity.iter().map(|e| map[e]).collect()
}

fn fit_rows<R: PanelRecord>(rows: &[R], spec: &ModelSpec, grid_z: &[f64]) -> Result<ModelFit> {
    let sample = collect_sample(rows, spec)?;
    let n = sample.y.len();
    let mut names = spec.regressors.clone();
    let mut columns = sample.columns.clone();
    let idr_col = spec
        .regressors
        .iter()
        .position(|r| r == "idr")
        .filter(|_| spec.interaction)
        .map(|i| sample.columns[i].clone());
    if spec.interaction {
        let idr = match &idr_col {
            Some(c) => c.clone(),
            None => {
                return Err(Error::Design(format!(
                    "model `{}` requests an interaction but has no `idr` regressor",
                    spec.name
                )))
            }
        };
        names.push(INTERACTION.to_owned());
        columns.push(idr.iter().zip(&sample.field_idr).map(|(a, b)| a * b).collect());
    }
    if spec.period_dummies {
        let levels: BTreeSet<&str> = sample.periods.iter().map(String::as_str).collect();
        for level in levels.into_iter().skip(1) {
            names.push(format!("{PERIOD_PREFIX}{level}"));
            columns.push(sample.periods.iter().map(|p| f64::from(u8::from(p == level))).collect());
        }
    }
    let raw_means: Vec<f64> = columns.iter().map(|c| mean(c).unwrap_or(0.0)).collect();

    let outcome = match spec.family {
        Family::Poisson => OutcomeKind::Count,
        Family::Ols => OutcomeKind::LogContinuous,
    };
    let entity = compact(&sample.entity);
    let design = DesignMatrix::new(names, columns, sample.y.clone(), entity, outcome)?;
    let opts = IrlsOptions::default();
    let mut result = match (spec.family, spec.estimator) {
        (Family::Ols, Estimator::Fixed) => {
            let dm = within_demean(&design);
            let mut r = ols(&dm.design)?;
            r.dropped = dm.dropped;
            r
        }
        (Family::Poisson, Estimator::Fixed) => {
            let mut d = design.clone().with_effects(Effects::EntityFixed);
            let dropped = d.drop_time_invariant();
            let mut r = poisson_irls(&d, opts)?;
            r.dropped = dropped;
            r
        }
        (Family::Ols, Estimator::Pooled) => ols(&design.clone().with_intercept())?,
        (Family::Poisson, Estimator::Pooled) => poisson_irls(&design.clone().with_intercept(), opts)?,
    };
    result.n_obs = n;

    let grid = if spec.interaction {
        prediction_grid(spec, &design, &result, &raw_means, &sample, grid_z)
    } else {
        Vec::new()
    };
    Ok(ModelFit {
        name: spec.name.clone(),
        family: spec.family,
        estimator: spec.estimator,
        result,
        n_excluded: sample.n_excluded,
        n_missing: sample.n_missing,
        grid,
    })
}

/// Predictions with every other regressor at its sample mean. Under fixed
/// effects the level is anchored so that predictions at the means reproduce
/// the average outcome (OLS) or the total count (Poisson).
fn prediction_grid(
    spec: &ModelSpec,
    design: &DesignMatrix<f64>,
    fit: &RegressionResult<f64>,
    raw_means: &[f64],
    sample: &Sample,
    grid_z: &[f64],
) -> Vec<GridPoint> {
    let coef = |name: &str| fit.coef(name).unwrap_or(0.0);
    let col_mean = |name: &str| {
        design
            .names
            .iter()
            .position(|n| n == name)
            .map_or(0.0, |i| raw_means[i])
    };
    let at_means: f64 = fit
        .terms
        .iter()
        .filter(|t| *t != INTERCEPT)
        .map(|t| coef(t) * col_mean(t))
        .sum();
    let level = match (spec.family, spec.estimator) {
        (_, Estimator::Pooled) => coef(INTERCEPT) + at_means,
        (Family::Ols, Estimator::Fixed) => mean(&design.y).unwrap_or(0.0),
        (Family::Poisson, Estimator::Fixed) => {
            let eta = design.x.mul_vec(
                &design
                    .names
                    .iter()
                    .map(|n| fit.coef(n).unwrap_or(0.0))
                    .collect::<Vec<_>>(),
            );
            let total: f64 = design.y.iter().sum();
            let denom: f64 = eta.iter().map(|e| e.exp()).sum();
            (total / denom).ln() + at_means
        }
    };

    // one field value per entity so large persons do not dominate the spread
    let mut per_entity = BTreeMap::new();
    for (&e, &f) in sample.entity.iter().zip(&sample.field_idr) {
        per_entity.entry(e).or_insert(f);
    }
    let fields: Vec<f64> = per_entity.into_values().collect();
    let (f_mean, f_sd) = (mean(&fields).unwrap_or(0.0), sample_sd(&fields).unwrap_or(0.0));
    let idr = design.column("idr").unwrap_or(&[]);
    let (i_mean, i_sd) = (mean(idr).unwrap_or(0.0), sample_sd(idr).unwrap_or(0.0));
    let int_mean = col_mean(INTERACTION);
    let (b_idr, b_int) = (coef("idr"), coef(INTERACTION));

    let mut grid = Vec::new();
    for (label, f) in [("mean-sd", f_mean - f_sd), ("mean", f_mean), ("mean+sd", f_mean + f_sd)] {
        for &z in grid_z {
            let x = i_mean + z * i_sd;
            let eta = level + b_idr * (x - i_mean) + b_int * (x * f - int_mean);
            grid.push(GridPoint {
                model: spec.name.clone(),
                field_level: label.to_owned(),
                field_idr: f,
                idr_z: z,
                idr: x,
                predicted: match spec.family {
                    Family::Poisson => eta.exp(),
                    Family::Ols => eta,
                },
            });
        }
    }
    grid
}

pub fn fit_model(spec: &ModelSpec, tables: PanelTables<'_>, grid_z: &[f64]) -> Result<ModelFit> {
    match spec.table {
        PanelTable::PersonYear => fit_rows(tables.person_year, spec, grid_z),
        PanelTable::Paper => fit_rows(tables.paper, spec, grid_z),
    }
}

/// Fit every model of the suite; independent models run in parallel and the
/// report keeps the specification order.
pub fn run_h_models(tables: PanelTables<'_>, suite: &SuiteSpec) -> Result<ModelSuiteReport> {
    let fits = suite
        .models
        .par_iter()
        .map(|m| fit_model(m, tables, &suite.grid_z))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSuiteReport { fits })
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

/// One row per coefficient: model, term, estimate, se_classical, se_hc1, p_hc1, n
/// (and se_cluster when requested).
pub fn write_models_csv<W: io::Write>(report: &ModelSuiteReport, cluster_se: bool, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["model", "term", "estimate", "se_classical", "se_hc1", "p_hc1", "n"];
    if cluster_se {
        header.push("se_cluster");
    }
    w.write_record(&header).map_err(csv_err)?;
    for fit in &report.fits {
        let r = &fit.result;
        let p = r.p_hc1();
        for i in 0..r.terms.len() {
            let mut rec = vec![
                fit.name.clone(),
                r.terms[i].clone(),
                r.coefficients[i].to_string(),
                r.se_classical[i].to_string(),
                r.se_hc1[i].to_string(),
                p[i].to_string(),
                r.n_obs.to_string(),
            ];
            if cluster_se {
                rec.push(r.se_cluster[i].to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

pub fn write_grid_csv<W: io::Write>(report: &ModelSuiteReport, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(["model", "field_level", "field_idr", "idr_z", "idr", "predicted"])
        .map_err(csv_err)?;
    for p in report.fits.iter().flat_map(|f| &f.grid) {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
