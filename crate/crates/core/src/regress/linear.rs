//! Linear epsilon-insensitive regression fitted by full-batch subgradient descent.
//!
//! The objective is `lambda/2 * |w|^2 + mean(max(0, |y - b - w.x| - epsilon))`
//! with `lambda = 1 / (C * n)`, i.e. the usual SVR primal divided by `C * n`.
//! The bias is not penalized. Each epoch takes one subgradient step of size
//! `eta0 / (1 + decay * t)`, halved until the objective does not increase.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_design, RegressError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearParams {
    pub epsilon: f64,
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Inverse-time decay: step at epoch t is `learning_rate / (1 + decay * t)`.
    pub decay: f64,
    /// Center and scale each feature before fitting.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            c: 1.0,
            epochs: 200,
            learning_rate: 1.0,
            decay: 0.1,
            standardize: false,
            seed: 0,
        }
    }
}

impl LinearParams {
    pub fn validate(&self) -> Result<(), RegressError> {
        let bad = |m: &str| Err(RegressError::InvalidParam(m.to_string()));
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0");
        }
        if !(self.c > 0.0) {
            return bad("C must be > 0");
        }
        if !(self.learning_rate > 0.0) || !(self.decay >= 0.0) {
            return bad("learning rate must be > 0 and decay >= 0");
        }
        Ok(())
    }
}

/// Per-feature centering and scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    fn fit(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; d];
        for row in x {
            for j in 0..d {
                scale[j] += (row[j] - mean[j]).powi(2);
            }
        }
        // constant columns keep unit scale
        let scale = scale
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub bias: f64,
    /// In the space the model was fitted in (standardized if `scaler` is set).
    pub weights: Vec<f64>,
    pub scaler: Option<Scaler>,
    pub params: LinearParams,
    /// Objective before training and after each epoch.
    pub loss_history: Vec<f64>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `bias + w.x`, after scaling when the model was fitted on standardized input.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, RegressError> {
        if x.len() != self.dim() {
            return Err(RegressError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let dot = |row: &[f64]| {
            self.bias
                + row
                    .iter()
                    .zip(&self.weights)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        };
        Ok(match &self.scaler {
            Some(s) => dot(&s.apply(x)),
            None => dot(x),
        })
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    lambda: f64,
    epsilon: f64,
}

impl Problem<'_> {
    fn residual(&self, i: usize, w: &[f64], b: f64) -> f64 {
        self.y[i] - b - self.x[i].iter().zip(w).map(|(a, c)| a * c).sum::<f64>()
    }

    fn objective(&self, w: &[f64], b: f64) -> f64 {
        let n = self.y.len() as f64;
        let loss: f64 = (0..self.y.len())
            .map(|i| (self.residual(i, w, b).abs() - self.epsilon).max(0.0))
            .sum();
        loss / n + 0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn subgradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.y.len() as f64;
        let mut g = vec![0.0; w.len()];
        let mut gb = 0.0;
        for i in 0..self.y.len() {
            let r = self.residual(i, w, b);
            let s = if r > self.epsilon {
                -1.0
            } else if r < -self.epsilon {
                1.0
            } else {
                continue;
            };
            for (gj, xj) in g.iter_mut().zip(&self.x[i]) {
                *gj += s * xj;
            }
            gb += s;
        }
        for (gj, wj) in g.iter_mut().zip(w) {
            *gj = *gj / n + self.lambda * wj;
        }
        (g, gb / n)
    }
}

const MAX_HALVINGS: usize = 40;

fn fit(x: &[Vec<f64>], y: &[f64], params: &LinearParams) -> (Vec<f64>, f64, Vec<f64>) {
    let d = x[0].len();
    let p = Problem {
        x,
        y,
        lambda: 1.0 / (params.c * y.len() as f64),
        epsilon: params.epsilon,
    };
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut f = p.objective(&w, b);
    let mut history = Vec::with_capacity(params.epochs + 1);
    history.push(f);
    for t in 0..params.epochs {
        let (g, gb) = p.subgradient(&w, b);
        let mut eta = params.learning_rate / (1.0 + params.decay * t as f64);
        for _ in 0..MAX_HALVINGS {
            let w2: Vec<f64> = w.iter().zip(&g).map(|(a, c)| a - eta * c).collect();
            let b2 = b - eta * gb;
            let f2 = p.objective(&w2, b2);
            if f2 <= f {
                w = w2;
                b = b2;
                f = f2;
                break;
            }
            eta *= 0.5;
        }
        history.push(f);
    }
    (w, b, history)
}

/// Fits a linear model. Rows of `x` are feature vectors of equal length.
pub fn train_linear(
    x: &[Vec<f64>],
    y: &[f64],
    params: &LinearParams,
) -> Result<LinearModel, RegressError> {
    check_design(x, y)?;
    params.validate()?;
    let scaler = params.standardize.then(|| Scaler::fit(x));
    let scaled: Vec<Vec<f64>>;
    let xs = match &scaler {
        Some(s) => {
            scaled = x.iter().map(|r| s.apply(r)).collect();
            &scaled[..]
        }
        None => x,
    };
    let (weights, bias, loss_history) = fit(xs, y, params);
    Ok(LinearModel {
        bias,
        weights,
        scaler,
        params: *params,
        loss_history,
    })
}

/// Two-sided permutation p-value per weight: the share of `permutations`
/// refits on shuffled targets whose weight is at least as large in magnitude.
pub fn permutation_p_values(
    x: &[Vec<f64>],
    y: &[f64],
    params: &LinearParams,
    permutations: usize,
) -> Result<Vec<f64>, RegressError> {
    let observed = train_linear(x, y, params)?;
    let exceed = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(k as u64 + 1);
            let mut shuffled = y.to_vec();
            shuffled.shuffle(&mut rng);
            let m = train_linear(x, &shuffled, params)?;
            Ok(m.weights
                .iter()
                .zip(&observed.weights)
                .map(|(wp, wo)| u64::from(wp.abs() >= wo.abs()))
                .collect::<Vec<u64>>())
        })
        .collect::<Result<Vec<_>, RegressError>>()?;
    let d = observed.dim();
    Ok((0..d)
        .map(|j| {
            let count: u64 = exceed.iter().map(|e| e[j]).sum();
            (1 + count) as f64 / (1 + permutations) as f64
        })
        .collect())
}
