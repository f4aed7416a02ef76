use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
/// Bound on standardized coefficients, reached under separation.
pub const COEFFICIENT_CAP: f64 = 15.0;

/// Covariate matrix stored by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub rows: usize,
}

impl Design {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, rows: usize) -> Result<Design> {
        if names.len() != columns.len() {
            return Err(Error::Config("design needs one name per column".into()));
        }
        if let Some((name, _)) = names.iter().zip(&columns).find(|(_, c)| c.len() != rows) {
            return Err(Error::Config(format!("design column {name} has the wrong length")));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("design values must be finite".into()));
        }
        Ok(Design { names, columns, rows })
    }

    /// Design holding only the given columns.
    pub fn select(&self, cols: &[usize]) -> Design {
        Design {
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            rows: self.rows,
        }
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Design {
        Design {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            rows: rows.len(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    fn linear(&self, intercept: f64, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![intercept; self.rows];
        for (col, b) in self.columns.iter().zip(beta) {
            for (e, x) in eta.iter_mut().zip(col) {
                *e += b * x;
            }
        }
        eta
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of the labels under the linear predictor.
pub fn log_likelihood(design: &Design, y: &[bool], intercept: f64, beta: &[f64]) -> f64 {
    design
        .linear(intercept, beta)
        .iter()
        .zip(y)
        .map(|(&eta, &yi)| if yi { -softplus(-eta) } else { -softplus(eta) })
        .sum()
}

/// Gradient of [`log_likelihood`]: intercept first, then one entry per column.
pub fn gradient(design: &Design, y: &[bool], intercept: f64, beta: &[f64]) -> Vec<f64> {
    let resid: Vec<f64> = design
        .linear(intercept, beta)
        .iter()
        .zip(y)
        .map(|(&eta, &yi)| f64::from(u8::from(yi)) - sigmoid(eta))
        .collect();
    let mut g = vec![resid.iter().sum()];
    g.extend(design.columns.iter().map(|c| c.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>()));
    g
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting. `a` is
/// row-major and square.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[p * n + k].abs() < 1e-12 {
            return None;
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                a[i * n + c] -= f * a[k * n + c];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[k * n + c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k * n + k];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when a coefficient reached the cap.
    pub separated: bool,
}

/// Maximum-likelihood logistic regression by Newton's method with step
/// halving. Columns are used as given; see [`fit_propensity`] for the
/// standardized model.
pub fn fit_logistic(design: &Design, y: &[bool]) -> Result<LogisticFit> {
    if y.len() != design.rows {
        return Err(Error::Config("label count differs from design rows".into()));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Degenerate("all outcome labels are equal".into()));
    }
    let p = design.columns.len() + 1;
    let rate = positives as f64 / y.len() as f64;
    let mut theta = vec![0.0; p];
    theta[0] = logit(rate);
    let mut ll = log_likelihood(design, y, theta[0], &theta[1..]);
    let mut separated = false;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let g = gradient(design, y, theta[0], &theta[1..]);
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;
        let eta = design.linear(theta[0], &theta[1..]);
        let w: Vec<f64> = eta.iter().map(|&e| sigmoid(e) * (1.0 - sigmoid(e))).collect();
        let col = |j: usize| if j == 0 { None } else { Some(&design.columns[j - 1]) };
        let mut h = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v: f64 = match (col(i), col(j)) {
                    (None, None) => w.iter().sum(),
                    (None, Some(c)) | (Some(c), None) => c.iter().zip(&w).map(|(x, w)| x * w).sum(),
                    (Some(a), Some(b)) => a.iter().zip(b).zip(&w).map(|((x, z), w)| x * z * w).sum(),
                };
                h[i * p + j] = v;
                h[j * p + i] = v;
            }
        }
        let step = solve(h.clone(), g.clone()).or_else(|| {
            for i in 0..p {
                h[i * p + i] += 1e-8;
            }
            solve(h, g)
        });
        let Some(step) = step else { break };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&step)
                .enumerate()
                .map(|(i, (t, s))| {
                    let v = t + scale * s;
                    if i > 0 {
                        v.clamp(-COEFFICIENT_CAP, COEFFICIENT_CAP)
                    } else {
                        v
                    }
                })
                .collect();
            let cand_ll = log_likelihood(design, y, cand[0], &cand[1..]);
            if cand_ll >= ll {
                theta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if theta[1..].iter().any(|b| b.abs() >= COEFFICIENT_CAP) {
            separated = true;
            break;
        }
        if !accepted || step.iter().all(|s| (scale * s).abs() < 1e-15) {
            break;
        }
    }
    Ok(LogisticFit {
        intercept: theta[0],
        coefficients: theta[1..].to_vec(),
        log_likelihood: ll,
        iterations,
        converged,
        separated,
    })
}

/// Area under the ROC curve by the rank-sum statistic, counting ties as
/// one half. 0.5 when either class is empty.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * avg;
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return 0.5;
    }
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    pub covariates: Vec<String>,
    /// Intercept and coefficients on the standardized scale.
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
    /// Pooled out-of-fold AUC.
    pub cv_auc: f64,
    /// Requested covariates dropped for zero variance.
    pub dropped: Vec<String>,
}

impl PropensityModel {
    /// Coefficients on the original covariate scale.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.coefficients.iter().zip(&self.sds).map(|(b, s)| b / s).collect()
    }

    pub fn raw_intercept(&self) -> f64 {
        self.intercept
            - self
                .coefficients
                .iter()
                .zip(self.means.iter().zip(&self.sds))
                .map(|(b, (m, s))| b * m / s)
                .sum::<f64>()
    }

    /// Linear predictor for every row of a design containing the model's
    /// covariates by name.
    pub fn linear_predictor(&self, design: &Design) -> Result<Vec<f64>> {
        let mut eta = vec![self.intercept; design.rows];
        for (i, name) in self.covariates.iter().enumerate() {
            let col = design
                .column(name)
                .ok_or_else(|| Error::Config(format!("design lacks covariate {name}")))?;
            for (e, x) in eta.iter_mut().zip(col) {
                *e += self.coefficients[i] * (x - self.means[i]) / self.sds[i];
            }
        }
        Ok(eta)
    }

    pub fn scores(&self, design: &Design) -> Result<Vec<f64>> {
        Ok(self.linear_predictor(design)?.into_iter().map(sigmoid).collect())
    }
}

fn mean_sd(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Logistic propensity model on standardized covariates. Zero-variance
/// columns are dropped and listed in the model.
pub fn fit_standardized(design: &Design, y: &[bool]) -> Result<PropensityModel> {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    let (mut means, mut sds) = (Vec::new(), Vec::new());
    for (i, col) in design.columns.iter().enumerate() {
        let (m, s) = mean_sd(col);
        if s > 1e-12 {
            keep.push(i);
            means.push(m);
            sds.push(s);
        } else {
            dropped.push(design.names[i].clone());
        }
    }
    let mut z = design.select(&keep);
    for (col, (m, s)) in z.columns.iter_mut().zip(means.iter().zip(&sds)) {
        col.iter_mut().for_each(|x| *x = (*x - m) / s);
    }
    let fit = fit_logistic(&z, y)?;
    Ok(PropensityModel {
        covariates: z.names,
        intercept: fit.intercept,
        coefficients: fit.coefficients,
        means,
        sds,
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
        converged: fit.converged,
        separated: fit.separated,
        cv_auc: f64::NAN,
        dropped,
    })
}

/// Out-of-fold scores with rows assigned to fold `row % folds`. A training
/// fold without both classes predicts its constant rate.
pub fn cross_validated_scores(design: &Design, y: &[bool], folds: usize) -> Result<Vec<f64>> {
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    let mut out = vec![0.0; design.rows];
    for k in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..design.rows).partition(|r| r % folds == k);
        if test.is_empty() {
            continue;
        }
        let train_y: Vec<bool> = train.iter().map(|&r| y[r]).collect();
        let test_design = design.subset_rows(&test);
        match fit_standardized(&design.subset_rows(&train), &train_y) {
            Ok(model) => {
                for (&r, eta) in test.iter().zip(model.linear_predictor(&test_design)?) {
                    out[r] = eta;
                }
            }
            Err(Error::Degenerate(_)) => {
                let rate = train_y.iter().filter(|&&v| v).count() as f64 / train_y.len().max(1) as f64;
                test.iter().for_each(|&r| out[r] = rate);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Standardized logistic propensity model with its cross-validated AUC.
pub fn fit_propensity(design: &Design, y: &[bool], folds: usize) -> Result<PropensityModel> {
    let mut model = fit_standardized(design, y)?;
    model.cv_auc = auc(&cross_validated_scores(design, y, folds)?, y);
    Ok(model)
}
