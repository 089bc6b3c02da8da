//! Regression design matrices and the within (entity-demeaning) transformation.

use std::collections::HashSet;

use super::linalg::ColMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Name of the explicit intercept column.
pub const INTERCEPT: &str = "const";

/// Demeaned columns whose largest magnitude falls below this fraction of the
/// original column scale are treated as time-invariant.
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    LogContinuous,
    Count,
}

/// How entity heterogeneity enters a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effects {
    /// No entity effects; an intercept column may be present.
    Pooled,
    /// Entity means already swept out (OLS after [`within_demean`]).
    Demeaned,
    /// Entity effects profiled out inside the likelihood (Poisson).
    EntityFixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T = f64> {
    pub names: Vec<String>,
    pub x: ColMatrix<T>,
    pub y: Vec<T>,
    /// Entity index per row, `0..n_entities`.
    pub entity: Vec<usize>,
    pub n_entities: usize,
    pub outcome: OutcomeKind,
    pub effects: Effects,
}

impl<T: Real> DesignMatrix<T> {
    /// Validate and assemble a design. `entity` may be empty for pooled data,
    /// in which case every row is its own entity for clustering purposes.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<T>>,
        y: Vec<T>,
        entity: Vec<usize>,
        outcome: OutcomeKind,
    ) -> Result<Self> {
        let n = y.len();
        if names.len() != columns.len() {
            return Err(Error::Design(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Design(format!("duplicate column `{name}`")));
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: col.len(),
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Design(format!("column `{name}` has non-finite entries")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Design("outcome has non-finite entries".into()));
        }
        if outcome == OutcomeKind::Count && y.iter().any(|&v| v < T::zero()) {
            return Err(Error::Design("count outcome has negative entries".into()));
        }
        let entity = if entity.is_empty() { (0..n).collect() } else { entity };
        if entity.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: entity.len(),
            });
        }
        let n_entities = entity.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            names,
            x: ColMatrix::from_columns(n, columns),
            y,
            entity,
            n_entities,
            outcome,
            effects: Effects::Pooled,
        })
    }

    /// Same design with an intercept column prepended.
    pub fn with_intercept(mut self) -> Self {
        self.names.insert(0, INTERCEPT.to_owned());
        self.x.cols.insert(0, vec![T::one(); self.n_obs()]);
        self
    }

    pub fn with_effects(mut self, effects: Effects) -> Self {
        self.effects = effects;
        self
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, name: &str) -> Option<&[T]> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(&self.x.cols[i])
    }

    pub fn has_intercept(&self) -> bool {
        self.names.iter().any(|n| n == INTERCEPT)
    }

    fn entity_means(&self, v: &[T]) -> Vec<T> {
        let mut sums = vec![T::zero(); self.n_entities];
        let mut counts = vec![0usize; self.n_entities];
        for (&e, &x) in self.entity.iter().zip(v) {
            sums[e] = sums[e] + x;
            counts[e] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { T::zero() } else { s / T::from_count(c) })
            .collect()
    }

    fn demean(&self, v: &[T]) -> Vec<T> {
        let means = self.entity_means(v);
        v.iter().zip(&self.entity).map(|(&x, &e)| x - means[e]).collect()
    }

    /// Drop columns that do not vary within any entity. Returns the names dropped.
    pub fn drop_time_invariant(&mut self) -> Vec<String> {
        let tol = T::lit(INVARIANCE_TOLERANCE);
        let invariant: Vec<bool> = self
            .x
            .cols
            .iter()
            .map(|col| {
                let scale = col.iter().fold(T::one(), |m, v| m.max(v.abs()));
                let spread = self.demean(col).iter().fold(T::zero(), |m, v| m.max(v.abs()));
                spread <= tol * scale
            })
            .collect();
        let mut dropped = Vec::new();
        let mut keep_names = Vec::new();
        let mut keep_cols = Vec::new();
        for ((name, col), inv) in self.names.drain(..).zip(self.x.cols.drain(..)).zip(invariant) {
            if inv {
                dropped.push(name);
            } else {
                keep_names.push(name);
                keep_cols.push(col);
            }
        }
        self.names = keep_names;
        self.x.cols = keep_cols;
        dropped
    }
}

/// Result of [`within_demean`].
#[derive(Debug, Clone)]
pub struct Demeaned<T = f64> {
    pub design: DesignMatrix<T>,
    /// Columns removed because they are constant within every entity.
    pub dropped: Vec<String>,
}

/// Subtract entity means from every regressor and the outcome. The intercept
/// and any time-invariant column are removed.
pub fn within_demean<T: Real>(design: &DesignMatrix<T>) -> Demeaned<T> {
    let mut d = design.clone();
    let dropped: Vec<String> = d
        .drop_time_invariant()
        .into_iter()
        .filter(|n| n != INTERCEPT)
        .collect();
    let cols = d.x.cols.iter().map(|c| d.demean(c)).collect();
    d.x.cols = cols;
    d.y = d.demean(&d.y);
    d.effects = Effects::Demeaned;
    Demeaned { design: d, dropped }
}
