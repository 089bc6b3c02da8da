use serde::Serialize;

use super::design::{DesignMatrix, Effects};
use super::linalg::{sandwich, ColMatrix, PivotedQr, RANK_TOLERANCE};
use super::special::t_two_tailed_p;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceInfo<T = f64> {
    pub iterations: usize,
    /// Max-norm of the last coefficient step.
    pub final_step: T,
    /// Log-likelihood after each accepted iteration.
    pub log_likelihood_path: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult<T = f64> {
    pub terms: Vec<String>,
    pub coefficients: Vec<T>,
    pub se_classical: Vec<T>,
    /// Heteroskedasticity-consistent, small-sample factor `n / (n - k)`.
    pub se_hc1: Vec<T>,
    /// Cluster-robust by entity.
    pub se_cluster: Vec<T>,
    pub n_obs: usize,
    pub n_entities: usize,
    /// Observations minus estimated coefficients and absorbed entity effects.
    pub df_resid: usize,
    pub log_likelihood: Option<T>,
    pub r_squared: Option<T>,
    pub convergence: Option<ConvergenceInfo<T>>,
    /// Columns removed before fitting (time-invariant under fixed effects).
    pub dropped: Vec<String>,
}

impl<T: Real> RegressionResult<T> {
    fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coef(&self, term: &str) -> Option<T> {
        self.index(term).map(|i| self.coefficients[i])
    }

    pub fn se_hc1_of(&self, term: &str) -> Option<T> {
        self.index(term).map(|i| self.se_hc1[i])
    }

    pub fn se_classical_of(&self, term: &str) -> Option<T> {
        self.index(term).map(|i| self.se_classical[i])
    }

    pub fn se_cluster_of(&self, term: &str) -> Option<T> {
        self.index(term).map(|i| self.se_cluster[i])
    }

    /// Two-tailed p-values of the HC1 t-ratios against t(df_resid).
    pub fn p_hc1(&self) -> Vec<T> {
        let df = T::from_count(self.df_resid.max(1));
        self.coefficients
            .iter()
            .zip(&self.se_hc1)
            .map(|(&b, &se)| if se > T::zero() { t_two_tailed_p(b / se, df) } else { T::nan() })
            .collect()
    }
}

fn factor<T: Real>(x: &ColMatrix<T>, names: &[String]) -> Result<PivotedQr<T>> {
    if x.ncols() == 0 {
        return Err(Error::Design("no regressors left to estimate".into()));
    }
    let qr = PivotedQr::new(x);
    match qr.rank(T::lit(RANK_TOLERANCE)) {
        (_, Some(bad)) => Err(Error::RankDeficient(names[bad].clone())),
        _ => Ok(qr),
    }
}

fn diag_sqrt<T: Real>(m: &[Vec<T>]) -> Vec<T> {
    (0..m.len()).map(|i| m[i][i].max(T::zero()).sqrt()).collect()
}

/// Robust standard errors from per-row score multipliers `u_i` (residual for
/// OLS, `y - mu` for Poisson): HC1 and entity-clustered.
fn robust_se<T: Real>(
    x: &ColMatrix<T>,
    bread: &[Vec<T>],
    u: &[T],
    entity: &[usize],
    n_entities: usize,
) -> (Vec<T>, Vec<T>) {
    let n = x.rows;
    let k = x.ncols();
    let mut meat = vec![vec![T::zero(); k]; k];
    for i in 0..n {
        let u2 = u[i] * u[i];
        for a in 0..k {
            let xa = x.cols[a][i] * u2;
            for b in a..k {
                meat[a][b] = meat[a][b] + xa * x.cols[b][i];
            }
        }
    }
    let mut cluster_scores = vec![vec![T::zero(); k]; n_entities];
    for i in 0..n {
        for a in 0..k {
            cluster_scores[entity[i]][a] = cluster_scores[entity[i]][a] + x.cols[a][i] * u[i];
        }
    }
    let mut cmeat = vec![vec![T::zero(); k]; k];
    for s in &cluster_scores {
        for a in 0..k {
            for b in a..k {
                cmeat[a][b] = cmeat[a][b] + s[a] * s[b];
            }
        }
    }
    for m in [&mut meat, &mut cmeat] {
        for a in 0..k {
            for b in 0..a {
                m[a][b] = m[b][a];
            }
        }
    }
    let nn = T::from_count(n);
    let kk = T::from_count(k);
    let hc1_scale = if n > k { nn / (nn - kk) } else { T::nan() };
    let g = T::from_count(n_entities);
    let cl_scale = if n_entities > 1 && n > k {
        g / (g - T::one()) * (nn - T::one()) / (nn - kk)
    } else {
        T::nan()
    };
    let hc1 = sandwich(bread, &meat);
    let cl = sandwich(bread, &cmeat);
    let hc1: Vec<T> = diag_sqrt(&hc1).into_iter().map(|v| v * hc1_scale.sqrt()).collect();
    let cl: Vec<T> = diag_sqrt(&cl).into_iter().map(|v| v * cl_scale.sqrt()).collect();
    (hc1, cl)
}

/// Least squares via pivoted QR. On a [`Effects::Demeaned`] design the
/// residual degrees of freedom also subtract the absorbed entity means.
pub fn ols<T: Real>(design: &DesignMatrix<T>) -> Result<RegressionResult<T>> {
    let n = design.n_obs();
    let k = design.n_cols();
    let absorbed = if design.effects == Effects::Demeaned {
        design.n_entities
    } else {
        0
    };
    if n <= k + absorbed {
        return Err(Error::Design(format!(
            "{n} observations cannot identify {k} coefficients and {absorbed} entity means"
        )));
    }
    let qr = factor(&design.x, &design.names)?;
    let beta = qr.solve(&design.y);
    let fitted = design.x.mul_vec(&beta);
    let resid: Vec<T> = design.y.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
    let rss: T = resid.iter().map(|&e| e * e).sum();
    let dof = T::from_count(n - k - absorbed);
    let sigma2 = rss / dof;
    let bread = qr.xtx_inverse();
    let se_classical = (0..k).map(|i| (sigma2 * bread[i][i]).max(T::zero()).sqrt()).collect();
    let (se_hc1, se_cluster) = robust_se(&design.x, &bread, &resid, &design.entity, design.n_entities);

    let centre = if design.has_intercept() {
        design.y.iter().copied().sum::<T>() / T::from_count(n)
    } else {
        T::zero()
    };
    let tss: T = design.y.iter().map(|&y| (y - centre) * (y - centre)).sum();
    let r_squared = (tss > T::zero()).then(|| T::one() - rss / tss);

    Ok(RegressionResult {
        terms: design.names.clone(),
        coefficients: beta,
        se_classical,
        se_hc1,
        se_cluster,
        n_obs: n,
        n_entities: design.n_entities,
        df_resid: n - k - absorbed,
        log_likelihood: None,
        r_squared,
        convergence: None,
        dropped: Vec::new(),
    })
}

/// Relative log-likelihood drop tolerated before a step is halved.
pub const LOGLIK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct IrlsOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-8,
        }
    }
}

/// Fitted means, entity-demeaned regressors (weights `mu`) and the linear
/// predictor at `beta`. With entity effects, each entity's effect is set to
/// its closed-form maximiser so that fitted means sum to the entity's total.
struct PoissonState<T> {
    mu: Vec<T>,
    x: ColMatrix<T>,
}

fn poisson_state<T: Real>(design: &DesignMatrix<T>, beta: &[T]) -> PoissonState<T> {
    let eta = design.x.mul_vec(beta);
    if design.effects != Effects::EntityFixed {
        return PoissonState {
            mu: eta.iter().map(|e| e.exp()).collect(),
            x: design.x.clone(),
        };
    }
    let g = design.n_entities;
    let mut max_eta = vec![T::neg_infinity(); g];
    for (&e, &v) in design.entity.iter().zip(&eta) {
        max_eta[e] = max_eta[e].max(v);
    }
    let mut denom = vec![T::zero(); g];
    let mut total = vec![T::zero(); g];
    for i in 0..design.n_obs() {
        let e = design.entity[i];
        denom[e] = denom[e] + (eta[i] - max_eta[e]).exp();
        total[e] = total[e] + design.y[i];
    }
    let mu: Vec<T> = (0..design.n_obs())
        .map(|i| {
            let e = design.entity[i];
            total[e] * (eta[i] - max_eta[e]).exp() / denom[e]
        })
        .collect();
    let mut cols = Vec::with_capacity(design.n_cols());
    for col in &design.x.cols {
        let mut wsum = vec![T::zero(); g];
        for i in 0..design.n_obs() {
            wsum[design.entity[i]] = wsum[design.entity[i]] + mu[i] * col[i];
        }
        cols.push(
            (0..design.n_obs())
                .map(|i| {
                    let e = design.entity[i];
                    if total[e] > T::zero() {
                        col[i] - wsum[e] / total[e]
                    } else {
                        T::zero()
                    }
                })
                .collect(),
        );
    }
    PoissonState {
        mu,
        x: ColMatrix::from_columns(design.n_obs(), cols),
    }
}

fn loglik_from_mu<T: Real>(y: &[T], mu: &[T]) -> T {
    y.iter()
        .zip(mu)
        .map(|(&y, &m)| {
            let base = -m - super::special::ln_gamma(y + T::one());
            if y > T::zero() {
                base + y * m.ln()
            } else {
                base
            }
        })
        .sum()
}

/// Poisson log-likelihood at `beta` (entity effects profiled out when present).
pub fn poisson_log_likelihood<T: Real>(design: &DesignMatrix<T>, beta: &[T]) -> T {
    let st = poisson_state(design, beta);
    loglik_from_mu(&design.y, &st.mu)
}

/// Gradient of [`poisson_log_likelihood`] with respect to `beta`.
pub fn poisson_score<T: Real>(design: &DesignMatrix<T>, beta: &[T]) -> Vec<T> {
    let st = poisson_state(design, beta);
    let r: Vec<T> = design.y.iter().zip(&st.mu).map(|(&y, &m)| y - m).collect();
    design.x.t_mul_vec(&r)
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Poisson regression with log link by iteratively reweighted least squares.
///
/// Converged when the max-norm of the coefficient step drops below
/// `opts.tol`. A step that lowers the log-likelihood is halved until it does
/// not. Entities whose outcomes are all zero carry no information under
/// [`Effects::EntityFixed`] and are ignored.
pub fn poisson_irls<T: Real>(design: &DesignMatrix<T>, opts: IrlsOptions) -> Result<RegressionResult<T>> {
    let n = design.n_obs();
    let k = design.n_cols();
    if k == 0 {
        return Err(Error::Design("no regressors left to estimate".into()));
    }
    if n <= k {
        return Err(Error::Design(format!("{n} observations cannot identify {k} coefficients")));
    }
    let ybar = design.y.iter().copied().sum::<T>() / T::from_count(n);
    if ybar <= T::zero() {
        let name = design.names.first().cloned().unwrap_or_default();
        return Err(Error::Separation(name));
    }

    let mut beta = vec![T::zero(); k];
    if design.effects != Effects::EntityFixed {
        if let Some(i) = design.names.iter().position(|n| n == super::design::INTERCEPT) {
            beta[i] = ybar.ln();
        }
    }
    let tol = T::lit(opts.tol);
    let mut st = poisson_state(design, &beta);
    let mut ll = loglik_from_mu(&design.y, &st.mu);
    let mut path = vec![ll];
    let mut steps: Vec<T> = Vec::new();

    for iter in 1..=opts.max_iter {
        // weighted least squares: sqrt(mu) * x against sqrt(mu) * (y - mu) / mu
        let sw: Vec<T> = st.mu.iter().map(|m| m.sqrt()).collect();
        let xw = st.x.scale_rows(&sw);
        let rw: Vec<T> = design
            .y
            .iter()
            .zip(&st.mu)
            .zip(&sw)
            .map(|((&y, &m), &s)| if m > T::zero() { (y - m) / s } else { T::zero() })
            .collect();
        let qr = factor(&xw, &design.names)?;
        let mut delta = qr.solve(&rw);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonConvergence {
                iterations: iter,
                last_step: f64::NAN,
            });
        }

        let mut candidate: Vec<T> = beta.iter().zip(&delta).map(|(&b, &d)| b + d).collect();
        let mut next = poisson_state(design, &candidate);
        let mut next_ll = loglik_from_mu(&design.y, &next.mu);
        let mut halvings = 0;
        // differences below the rounding level of `ll` are noise, not descent
        let slack = T::lit(LOGLIK_SLACK) * ll.abs().max(T::one());
        while !(next_ll >= ll - slack) && halvings < 30 {
            for d in delta.iter_mut() {
                *d = *d / T::lit(2.0);
            }
            candidate = beta.iter().zip(&delta).map(|(&b, &d)| b + d).collect();
            next = poisson_state(design, &candidate);
            next_ll = loglik_from_mu(&design.y, &next.mu);
            halvings += 1;
        }
        let step = max_abs(&delta);
        beta = candidate;
        st = next;
        ll = next_ll;
        path.push(ll);
        steps.push(step);

        if step < tol {
            return Ok(finish_poisson(design, beta, st, ll, iter, step, path));
        }
        if let Some(name) = diverging(design, &beta, &st.mu, &steps) {
            return Err(Error::Separation(name));
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_step: steps.last().map_or(f64::NAN, |s| s.to_f64_lossy()),
    })
}

/// A coefficient is diverging when steps have stopped shrinking for several
/// iterations while some zero-outcome fitted mean collapses toward zero.
fn diverging<T: Real>(design: &DesignMatrix<T>, beta: &[T], mu: &[T], steps: &[T]) -> Option<String> {
    const WINDOW: usize = 8;
    if steps.len() < WINDOW {
        return None;
    }
    let recent = &steps[steps.len() - WINDOW..];
    if recent.iter().any(|&s| s < T::lit(0.25)) {
        return None;
    }
    let collapsed = design
        .y
        .iter()
        .zip(mu)
        .any(|(&y, &m)| y == T::zero() && m > T::zero() && m < T::lit(1e-8));
    if !collapsed {
        return None;
    }
    let (i, _) = beta
        .iter()
        .enumerate()
        .fold((0, T::zero()), |(bi, bv), (i, &b)| if b.abs() > bv { (i, b.abs()) } else { (bi, bv) });
    Some(design.names[i].clone())
}

fn finish_poisson<T: Real>(
    design: &DesignMatrix<T>,
    beta: Vec<T>,
    st: PoissonState<T>,
    ll: T,
    iterations: usize,
    step: T,
    path: Vec<T>,
) -> RegressionResult<T> {
    let k = design.n_cols();
    let absorbed = if design.effects == Effects::EntityFixed {
        design.n_entities
    } else {
        0
    };
    let sw: Vec<T> = st.mu.iter().map(|m| m.sqrt()).collect();
    let qr = PivotedQr::new(&st.x.scale_rows(&sw));
    let bread = qr.xtx_inverse();
    let se_classical = (0..k).map(|i| bread[i][i].max(T::zero()).sqrt()).collect();
    let u: Vec<T> = design.y.iter().zip(&st.mu).map(|(&y, &m)| y - m).collect();
    let (se_hc1, se_cluster) = robust_se(&st.x, &bread, &u, &design.entity, design.n_entities);
    RegressionResult {
        terms: design.names.clone(),
        coefficients: beta,
        se_classical,
        se_hc1,
        se_cluster,
        n_obs: design.n_obs(),
        n_entities: design.n_entities,
        df_resid: design.n_obs().saturating_sub(k + absorbed),
        log_likelihood: Some(ll),
        r_squared: None,
        convergence: Some(ConvergenceInfo {
            iterations,
            final_step: step,
            log_likelihood_path: path,
        }),
        dropped: Vec::new(),
    }
}
