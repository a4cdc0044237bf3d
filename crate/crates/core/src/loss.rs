//! The three listwise surrogate losses with exact values, gradients,
//! Hessians (where they exist), and their analytic constants in the
//! l-infinity score-space geometry.
//!
//! With `P_j(v) = exp(v_j) / sum_i exp(v_i)`:
//!
//! ```text
//! listnet(s, y)  = -sum_j P_j(y) log P_j(s)
//! sdcg@1(s, y)   = D(1) sum_i G(y_i) softmax_i(s / sigma)
//! ranksvm(s, y)  = sum_{i,j} max(0, 1[y_i > y_j] (1 + s_j - s_i))
//! ```
//!
//! where `G(t) = 2^t - 1` and `D(i) = 1/log2(1+i)`. The key analytic facts:
//! the l1 norm of the ListNet gradient never exceeds 2 regardless of the
//! list length `m`, the same holds for SDCG@1 with bound
//! `2 D(1) G(y_max) / sigma`, while the RankSVM subgradient grows as m^2.

use crate::data::ClassSpec;
use crate::error::{Error, Result};
use crate::metrics::{discount, gain};

/// A loss kind together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurrogateLoss {
    /// Cross-entropy between the label softmax and the score softmax.
    ListNet,
    /// Softmax-smoothed DCG@1. `sigma` controls the smoothing; `y_max` is the
    /// largest relevance grade and only enters the analytic constants.
    SmoothDcg1 { sigma: f64, y_max: u32 },
    /// Pairwise hinge over all mis-ordered document pairs.
    RankSvm,
}

impl SurrogateLoss {
    pub fn smooth_dcg1(sigma: f64, y_max: u32) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParam(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self::SmoothDcg1 { sigma, y_max })
    }

    /// Convex in the score vector (and hence in `w` after composition with a
    /// linear scorer)?
    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::SmoothDcg1 { .. })
    }

    /// Twice differentiable everywhere?
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Self::RankSvm)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ListNet => "listnet",
            Self::SmoothDcg1 { .. } => "sdcg",
            Self::RankSvm => "ranksvm",
        }
    }

    /// Smoothness constant in the l-infinity geometry (the inf-to-1 operator
    /// norm bound on the score Hessian), where known. Only ListNet has one;
    /// SDCG@1 is twice differentiable but carries no derived constant.
    pub fn smoothness_inf(&self) -> Option<f64> {
        match self {
            Self::ListNet => Some(2.0),
            _ => None,
        }
    }
}

/// Analytic Lipschitz / smoothness / boundedness constants of a loss over a
/// given class. `lipschitz_inf` bounds the l1 norm of the score gradient
/// (the dual of l-infinity); `lipschitz_l2` is the l2-geometry constant the
/// baseline bound consumes. For RankSVM the reported `lipschitz_inf` is the
/// pairwise-count envelope `m(m-1)` and `lipschitz_inf_witness` is the value
/// `m^2/2` attained by the half-ones label family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    pub lipschitz_inf: f64,
    pub smoothness_inf: Option<f64>,
    pub uniform_bound: f64,
    pub lipschitz_l2: f64,
    pub lipschitz_inf_witness: Option<f64>,
}

fn validate_pair(s: &[f64], y: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Empty("score vector must have length >= 1".into()));
    }
    if s.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "scores have length {}, labels {}",
            s.len(),
            y.len()
        )));
    }
    if let Some(bad) = s.iter().chain(y.iter()).find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("loss input {bad}")));
    }
    Ok(())
}

/// `log(sum_j exp(v_j))`, computed with max subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Overflow-safe softmax.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn scaled(v: &[f64], sigma: f64) -> Vec<f64> {
    v.iter().map(|x| x / sigma).collect()
}

// --- raw kernels (inputs already validated) ---

fn listnet_value(s: &[f64], y: &[f64]) -> f64 {
    // -sum_j P_j(y) (s_j - lse(s)) = lse(s) - <P(y), s>
    let py = softmax(y);
    let lse = log_sum_exp(s);
    let inner: f64 = py.iter().zip(s).map(|(p, sj)| p * sj).sum();
    (lse - inner).max(0.0)
}

fn listnet_grad(s: &[f64], y: &[f64]) -> Vec<f64> {
    let ps = softmax(s);
    let py = softmax(y);
    ps.iter().zip(&py).map(|(a, b)| a - b).collect()
}

fn listnet_hessian(s: &[f64]) -> Vec<Vec<f64>> {
    let p = softmax(s);
    let m = p.len();
    let mut h = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in 0..m {
            h[j][k] = if j == k { p[j] - p[j] * p[j] } else { -p[j] * p[k] };
        }
    }
    h
}

fn sdcg_value(s: &[f64], y: &[f64], sigma: f64) -> f64 {
    let p = softmax(&scaled(s, sigma));
    discount(1) * y.iter().zip(&p).map(|(yi, pi)| gain(*yi) * pi).sum::<f64>()
}

fn sdcg_grad(s: &[f64], y: &[f64], sigma: f64) -> Vec<f64> {
    let p = softmax(&scaled(s, sigma));
    let gains: Vec<f64> = y.iter().map(|yi| gain(*yi)).collect();
    let mean_gain: f64 = gains.iter().zip(&p).map(|(g, pi)| g * pi).sum();
    let c = discount(1) / sigma;
    p.iter()
        .zip(&gains)
        .map(|(pi, gi)| c * pi * (gi - mean_gain))
        .collect()
}

fn sdcg_hessian(s: &[f64], y: &[f64], sigma: f64) -> Vec<Vec<f64>> {
    // Exact differentiation of the softmax mixture; not stated in closed form
    // anywhere, so the finite-difference tests are the reference for it.
    let p = softmax(&scaled(s, sigma));
    let gains: Vec<f64> = y.iter().map(|yi| gain(*yi)).collect();
    let mean_gain: f64 = gains.iter().zip(&p).map(|(g, pi)| g * pi).sum();
    let m = p.len();
    let c = discount(1) / (sigma * sigma);
    let mut h = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in 0..m {
            let delta = if j == k { 1.0 } else { 0.0 };
            h[j][k] = c
                * (p[j] * (delta - p[k]) * (gains[j] - mean_gain)
                    - p[j] * p[k] * (gains[k] - mean_gain));
        }
    }
    h
}

fn ranksvm_value(s: &[f64], y: &[f64]) -> f64 {
    let m = s.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if y[i] > y[j] {
                total += (1.0 + s[j] - s[i]).max(0.0);
            }
        }
    }
    total
}

fn ranksvm_subgrad(s: &[f64], y: &[f64]) -> Vec<f64> {
    // Hinge treated as active at the kink (margin exactly 0): the ">= 0"
    // convention yields a valid subgradient there.
    let m = s.len();
    let mut g = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            if y[i] > y[j] && 1.0 + s[j] - s[i] >= 0.0 {
                g[j] += 1.0;
                g[i] -= 1.0;
            }
        }
    }
    g
}

impl SurrogateLoss {
    /// Loss value; always nonnegative.
    pub fn value(&self, s: &[f64], y: &[f64]) -> Result<f64> {
        validate_pair(s, y)?;
        Ok(self.value_unchecked(s, y))
    }

    pub(crate) fn value_unchecked(&self, s: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::ListNet => listnet_value(s, y),
            Self::SmoothDcg1 { sigma, .. } => sdcg_value(s, y, *sigma),
            Self::RankSvm => ranksvm_value(s, y),
        }
    }

    /// Gradient with respect to the score vector (a subgradient for RankSVM).
    pub fn gradient(&self, s: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        validate_pair(s, y)?;
        Ok(self.gradient_unchecked(s, y))
    }

    pub(crate) fn gradient_unchecked(&self, s: &[f64], y: &[f64]) -> Vec<f64> {
        match self {
            Self::ListNet => listnet_grad(s, y),
            Self::SmoothDcg1 { sigma, .. } => sdcg_grad(s, y, *sigma),
            Self::RankSvm => ranksvm_subgrad(s, y),
        }
    }

    /// Hessian with respect to the score vector. RankSVM is not twice
    /// differentiable and reports an unsupported-operation error.
    pub fn hessian(&self, s: &[f64], y: &[f64]) -> Result<Vec<Vec<f64>>> {
        validate_pair(s, y)?;
        match self {
            Self::ListNet => Ok(listnet_hessian(s)),
            Self::SmoothDcg1 { sigma, .. } => Ok(sdcg_hessian(s, y, *sigma)),
            Self::RankSvm => Err(Error::Unsupported(
                "ranksvm is not twice differentiable".into(),
            )),
        }
    }

    /// Infimum of the loss over all score vectors for fixed labels.
    ///
    /// ListNet bottoms out at the entropy of the label softmax (attained at
    /// `s = y` up to a constant shift), SDCG@1 at the smallest gain, RankSVM
    /// at zero. Subtracting this floor makes "loss -> 0" meaningful for
    /// ListNet in the optimistic-rate experiments.
    pub fn min_value(&self, y: &[f64]) -> Result<f64> {
        if y.is_empty() {
            return Err(Error::Empty("label vector must have length >= 1".into()));
        }
        if let Some(bad) = y.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("label {bad}")));
        }
        Ok(match self {
            Self::ListNet => listnet_value(y, y),
            Self::SmoothDcg1 { .. } => {
                let min_y = y.iter().cloned().fold(f64::INFINITY, f64::min);
                discount(1) * gain(min_y)
            }
            Self::RankSvm => 0.0,
        })
    }

    /// Analytic constants over the given class at list length `m`.
    pub fn constants(&self, spec: &ClassSpec, m: usize) -> LossConstants {
        let wr = spec.weight_radius * spec.input_radius;
        let mf = m as f64;
        match self {
            Self::ListNet => LossConstants {
                lipschitz_inf: 2.0,
                smoothness_inf: self.smoothness_inf(),
                // log m + 2 max|s|: -log P_j(s) <= log m + 2||s||_inf and
                // ||s||_inf <= W R. The loss has no zero, so the usual
                // "2 G W R" recipe does not apply.
                uniform_bound: mf.ln() + 2.0 * wr,
                lipschitz_l2: 2.0,
                lipschitz_inf_witness: None,
            },
            Self::SmoothDcg1 { sigma, y_max } => {
                let top_gain = discount(1) * gain(*y_max as f64);
                LossConstants {
                    lipschitz_inf: 2.0 * top_gain / sigma,
                    smoothness_inf: None,
                    uniform_bound: top_gain,
                    lipschitz_l2: 2.0 * top_gain / sigma,
                    lipschitz_inf_witness: None,
                }
            }
            Self::RankSvm => LossConstants {
                // m(m-1)/2 ordered pairs at most, each contributing an
                // (e_j - e_i) of l1 norm 2.
                lipschitz_inf: mf * (mf - 1.0),
                smoothness_inf: None,
                // at most m^2/4 active pairs, each hinge at most 1 + 2 W R.
                uniform_bound: (mf * mf / 4.0) * (1.0 + 2.0 * wr),
                // per-coordinate count bound: |g_j| <= m - 1.
                lipschitz_l2: (mf - 1.0) * mf.sqrt(),
                lipschitz_inf_witness: Some(mf * mf / 2.0),
            },
        }
    }
}

/// Value-and-gradient interface for consumers that are generic over the loss
/// (trainer internals, finite differences, Rademacher estimation). Inputs are
/// assumed valid.
pub trait LossFn {
    fn loss(&self, s: &[f64], y: &[f64]) -> f64;
    fn grad(&self, s: &[f64], y: &[f64]) -> Vec<f64>;
}

impl LossFn for SurrogateLoss {
    fn loss(&self, s: &[f64], y: &[f64]) -> f64 {
        self.value_unchecked(s, y)
    }

    fn grad(&self, s: &[f64], y: &[f64]) -> Vec<f64> {
        self.gradient_unchecked(s, y)
    }
}
