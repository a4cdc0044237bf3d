//! Generalization-bound calculators.
//!
//! Each function evaluates one closed-form bound as a pure function of the
//! constants in `BoundInputs`, so measured generalization gaps can be laid
//! side by side with every bound that claims to cover them. Covering-number
//! formulas use base-2 logarithms exactly where the displays do; everything
//! else is in natural log. The key structural facts the tests pin down:
//!
//! * the l2-baseline ("Chapelle-Wu") complexity term grows exactly as
//!   sqrt(m);
//! * the OGD, RERM, and fast-rate bounds do not depend on m at all;
//! * the covering-number route grows only logarithmically in m;
//! * the l1 route grows only as sqrt(log d) in the dimension.

use crate::data::{ClassSpec, NormKind};
use crate::error::{Error, Result};

/// Constants a bound evaluation needs. `g_inf` is the score-space Lipschitz
/// constant w.r.t. the l-infinity norm, `g_l2` the one w.r.t. l2, `h_inf`
/// the l-infinity smoothness constant when the loss has one, `b` the uniform
/// bound on the loss over the class, and `l_star` an estimate of the optimal
/// expected loss for the optimistic-rate formulas.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub g_inf: f64,
    pub g_l2: f64,
    pub h_inf: Option<f64>,
    pub b: f64,
    pub spec: ClassSpec,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub delta: f64,
    pub l_star: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < 1 || self.d < 1 {
            return Err(Error::InvalidParam(format!(
                "m, n, d must be >= 1 (got {}, {}, {})",
                self.m, self.n, self.d
            )));
        }
        // delta = 1 is allowed so the confidence term can be switched off
        // (log 1 = 0); the scaling checks rely on it.
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if let Some(l) = self.l_star {
            if l < 0.0 {
                return Err(Error::InvalidParam(format!("l_star must be >= 0, got {l}")));
            }
        }
        Ok(())
    }

    fn require_l2(&self) -> Result<()> {
        if self.spec.norm_kind != NormKind::L2 {
            return Err(Error::Inapplicable("this bound is defined over the l2 class".into()));
        }
        Ok(())
    }

    fn require_l1(&self) -> Result<()> {
        if self.spec.norm_kind != NormKind::L1 {
            return Err(Error::Inapplicable("this bound is defined over the l1 class".into()));
        }
        Ok(())
    }

    fn wr(&self) -> f64 {
        self.spec.weight_radius * self.spec.input_radius
    }

    fn h_inf_required(&self) -> Result<f64> {
        self.h_inf.ok_or_else(|| {
            Error::InvalidParam("smoothness constant H required but absent".into())
        })
    }

    fn l_star_required(&self) -> Result<f64> {
        self.l_star.ok_or_else(|| {
            Error::InvalidParam("optimal-loss estimate L* required but absent".into())
        })
    }
}

/// The sqrt(m)-growing complexity term of the l2 baseline bound:
/// `3 G_l2 W2 R_X sqrt(m/n)`.
pub fn chapelle_complexity_term(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    inputs.require_l2()?;
    Ok(3.0 * inputs.g_l2 * inputs.wr() * (inputs.m as f64 / inputs.n as f64).sqrt())
}

/// Baseline uniform-convergence bound with explicit sqrt(m) dependence:
/// `3 G_l2 W2 R_X sqrt(m/n) + sqrt(8 log(1/delta) / n)`.
pub fn bound_chapelle(inputs: &BoundInputs) -> Result<f64> {
    let complexity = chapelle_complexity_term(inputs)?;
    let conf = (8.0 * (1.0 / inputs.delta).ln() / inputs.n as f64).sqrt();
    Ok(complexity + conf)
}

/// Expected excess risk of averaged online gradient descent:
/// `G_inf W2 R_X sqrt(2/n)`. No m dependence.
pub fn bound_ogd(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    inputs.require_l2()?;
    Ok(inputs.g_inf * inputs.wr() * (2.0 / inputs.n as f64).sqrt())
}

/// Expected excess risk of the regularized ERM with the closed-form lambda:
/// `2 G_inf R_X W2 (8/n + sqrt(2/n))`. No m dependence.
pub fn bound_rerm(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    inputs.require_l2()?;
    let nf = inputs.n as f64;
    Ok(2.0 * inputs.g_inf * inputs.wr() * (8.0 / nf + (2.0 / nf).sqrt()))
}

/// Which covering-number / Rademacher formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoveringVariant {
    L2,
    L1,
    /// Local class of predictors with empirical loss at most `r`.
    Local { r: f64 },
}

/// log2 covering number bounds for the loss class.
///
/// * l2: `ceil(G^2 W2^2 R^2 / eps^2) log2(2mn + 1)`
/// * l1: `ceil(288 G^2 W1^2 R^2 (2 + log d) / eps^2)
///        log2(2 ceil(8 G W1 R / eps) mn + 1)`
/// * local(r): `ceil(12 H W2^2 R^2 r / eps^2) log2(2mn + 1)`; r = 0 names
///   the empty-radius class and covers with a single point, so 0.
pub fn covering_bound(variant: CoveringVariant, inputs: &BoundInputs, epsilon: f64) -> Result<f64> {
    inputs.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParam(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mn = inputs.m as f64 * inputs.n as f64;
    match variant {
        CoveringVariant::L2 => {
            inputs.require_l2()?;
            let ratio = (inputs.g_inf * inputs.wr() / epsilon).powi(2);
            Ok(ratio.ceil() * (2.0 * mn + 1.0).log2())
        }
        CoveringVariant::L1 => {
            inputs.require_l1()?;
            let gwr = inputs.g_inf * inputs.wr();
            let cells = (288.0 * gwr * gwr * (2.0 + (inputs.d as f64).ln()) / (epsilon * epsilon))
                .ceil();
            let inner = (8.0 * gwr / epsilon).ceil();
            Ok(cells * (2.0 * inner * mn + 1.0).log2())
        }
        CoveringVariant::Local { r } => {
            inputs.require_l2()?;
            let h = inputs.h_inf_required()?;
            if r < 0.0 {
                return Err(Error::InvalidParam(format!("local radius must be >= 0, got {r}")));
            }
            if r == 0.0 {
                return Ok(0.0);
            }
            let wr = inputs.wr();
            let cells = (12.0 * h * wr * wr * r / (epsilon * epsilon)).ceil();
            Ok(cells * (2.0 * mn + 1.0).log2())
        }
    }
}

/// The constant `C = 5 sqrt(3) W2 R_X sqrt(H log2(3mn) / n)` of the local
/// (subroot) Rademacher corollary.
pub fn subroot_c(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    inputs.require_l2()?;
    let h = inputs.h_inf_required()?;
    let mn = inputs.m as f64 * inputs.n as f64;
    Ok(5.0 * 3.0_f64.sqrt() * inputs.wr() * (h * (3.0 * mn).log2() / inputs.n as f64).sqrt())
}

/// Local Rademacher closed form `4 sqrt(r) C log(3 sqrt(B) / C)` from its
/// raw constants. Errors when the log argument is not above 1.
pub fn rademacher_local_closed_form(c: f64, b: f64, r: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParam(format!("C must be > 0, got {c}")));
    }
    if r < 0.0 {
        return Err(Error::InvalidParam(format!("r must be >= 0, got {r}")));
    }
    let arg = 3.0 * b.sqrt() / c;
    if arg <= 1.0 {
        return Err(Error::InvalidParam(format!(
            "log argument 3 sqrt(B)/C = {arg} is <= 1: the uniform bound B is too small \
             relative to the complexity scale C for the closed form to apply"
        )));
    }
    Ok(4.0 * r.sqrt() * c * arg.ln())
}

/// Closed-form empirical Rademacher complexity bounds.
///
/// * l2: `10 G W2 R sqrt(log2(3mn)/n) log(6 B sqrt(n) / (5 G W2 R sqrt(log2(3mn))))`
/// * l1: `120 sqrt(2) G W1 R sqrt(log(d) log2(24 mn G W1 R) / n)` times the
///   squared log of `(B + 24 mn G W1 R) / (40 sqrt(2) G W1 R sqrt(log(d) log2(24 mn G W1 R)))`
/// * local(r): `4 sqrt(r) C log(3 sqrt(B)/C)` with C from [`subroot_c`]
pub fn rademacher_bound(variant: CoveringVariant, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let mn = inputs.m as f64 * inputs.n as f64;
    let nf = inputs.n as f64;
    match variant {
        CoveringVariant::L2 => {
            inputs.require_l2()?;
            let gwr = inputs.g_inf * inputs.wr();
            if gwr <= 0.0 {
                return Err(Error::InvalidParam("G W R must be positive".into()));
            }
            let l = (3.0 * mn).log2();
            let scale = 10.0 * gwr * (l / nf).sqrt();
            let arg = 6.0 * inputs.b * nf.sqrt() / (5.0 * gwr * l.sqrt());
            if arg <= 1.0 {
                return Err(Error::InvalidParam(format!(
                    "log argument {arg} <= 1: B too small relative to G W R sqrt(log2(3mn))"
                )));
            }
            Ok(scale * arg.ln())
        }
        CoveringVariant::L1 => {
            inputs.require_l1()?;
            if inputs.d < 2 {
                return Err(Error::InvalidParam(
                    "the l1 corollary needs d >= 2 (log d factor)".into(),
                ));
            }
            let gwr = inputs.g_inf * inputs.wr();
            if gwr <= 0.0 {
                return Err(Error::InvalidParam("G W R must be positive".into()));
            }
            let t = (24.0 * mn * gwr).log2();
            if t <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "log2(24 mn G W R) = {t} <= 0: scale too small"
                )));
            }
            let logd = (inputs.d as f64).ln();
            let root = (logd * t).sqrt();
            let scale = 120.0 * 2.0_f64.sqrt() * gwr * (logd * t / nf).sqrt();
            let arg = (inputs.b + 24.0 * mn * gwr) / (40.0 * 2.0_f64.sqrt() * gwr * root);
            if arg <= 1.0 {
                return Err(Error::InvalidParam(format!("log argument {arg} <= 1")));
            }
            let lg = arg.ln();
            Ok(scale * lg * lg)
        }
        CoveringVariant::Local { r } => {
            let c = subroot_c(inputs)?;
            rademacher_local_closed_form(c, inputs.b, r)
        }
    }
}

/// `4 alpha + 10 int_alpha^limit sqrt(log2 N2(eps) / n) d eps`, numerically.
///
/// `log_covering` must be nonnegative and nonincreasing. The quadrature is
/// adaptive Simpson with absolute tolerance 1e-8. A divergent integrand at 0
/// (anything decaying no faster than 1/eps, which includes every covering
/// bound in this crate) combined with `alpha = 0` is rejected with an error
/// instructing the caller to pick `alpha > 0`.
pub fn dudley_integral(
    log_covering: &dyn Fn(f64) -> f64,
    alpha: f64,
    upper_limit: f64,
    n: usize,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParam("n must be >= 1".into()));
    }
    if !(alpha >= 0.0) || !(upper_limit > alpha) {
        return Err(Error::InvalidParam(format!(
            "need 0 <= alpha < upper_limit, got alpha = {alpha}, upper = {upper_limit}"
        )));
    }
    let nf = n as f64;
    let integrand = move |eps: f64| (log_covering(eps).max(0.0) / nf).sqrt();
    if alpha == 0.0 {
        let at_zero = integrand(0.0);
        if !at_zero.is_finite() {
            return Err(Error::InvalidParam(
                "integrand is unbounded at 0; choose alpha > 0".into(),
            ));
        }
        // still guard against a blow-up strictly inside (0, upper)
        let probe = integrand(upper_limit * 1e-12);
        if !probe.is_finite() {
            return Err(Error::InvalidParam(
                "integrand is unbounded near 0; choose alpha > 0".into(),
            ));
        }
    }
    let integral = adaptive_simpson(&integrand, alpha, upper_limit, 1e-8);
    Ok(4.0 * alpha + 10.0 * integral)
}

/// Minimizes `4 alpha + 10 int_alpha^limit sqrt(log2 N2 / n)` over alpha.
///
/// The derivative in alpha is `4 - 10 g(alpha)` with `g` the nonincreasing
/// integrand, so the optimum is where `g` crosses 0.4 (clamped to the
/// endpoints). Returns `(alpha_star, value)`.
pub fn dudley_optimize_alpha(
    log_covering: &dyn Fn(f64) -> f64,
    upper_limit: f64,
    n: usize,
) -> Result<(f64, f64)> {
    if !(upper_limit > 0.0) {
        return Err(Error::InvalidParam("upper_limit must be > 0".into()));
    }
    let nf = n as f64;
    let g = |eps: f64| (log_covering(eps).max(0.0) / nf).sqrt();
    let lo = upper_limit * 1e-12;
    let alpha = if g(upper_limit) >= 0.4 {
        upper_limit
    } else if g(lo) <= 0.4 {
        lo
    } else {
        let (mut a, mut b) = (lo, upper_limit);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if g(mid) >= 0.4 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    if alpha >= upper_limit {
        return Ok((upper_limit, 4.0 * upper_limit));
    }
    let value = dudley_integral(log_covering, alpha, upper_limit, n)?;
    Ok((alpha, value))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, tol * 0.5, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, tol * 0.5, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(f, a, fa, b, fb, m, fm, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Which generalization-bound assembly to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenTheorem {
    LipschitzL2,
    LipschitzL1,
    Smooth,
}

/// `r0 = B (log(1/delta) + log log n) / n`; needs `n >= 2` to be finite.
pub fn smooth_r0(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.n < 2 {
        return Err(Error::InvalidParam("smooth chain needs n >= 2 (log log n)".into()));
    }
    let nf = inputs.n as f64;
    Ok(inputs.b * ((1.0 / inputs.delta).ln() + nf.ln().ln()) / nf)
}

/// The fixed point `r* = (4 C log(3 sqrt(B)/C))^2` of the subroot function
/// `psi(r) = 4 sqrt(r) C log(3 sqrt(B)/C)`.
pub fn fixed_point_r_star(c: f64, b: f64) -> Result<f64> {
    // psi(1) = 4 C log(3 sqrt(B)/C), and r* = psi(1)^2.
    let psi_at_one = rademacher_local_closed_form(c, b, 1.0)?;
    Ok(psi_at_one * psi_at_one)
}

/// Assembled generalization bounds.
///
/// * `LipschitzL2` / `LipschitzL1`: `2 R_hat + 3 B sqrt(log(1/delta)/(2n))`
///   with the matching Rademacher corollary (the explicit constants are this
///   crate's instantiation of the standard bounded-differences chain).
/// * `Smooth`: the local-Rademacher chain
///   `45 r* + sqrt(8 r* L) + sqrt(4 r0 L) + 20 r0` at `L = l_star`.
pub fn gen_bound(theorem: GenTheorem, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let nf = inputs.n as f64;
    let conf = 3.0 * inputs.b * ((1.0 / inputs.delta).ln() / (2.0 * nf)).sqrt();
    match theorem {
        GenTheorem::LipschitzL2 => {
            Ok(2.0 * rademacher_bound(CoveringVariant::L2, inputs)? + conf)
        }
        GenTheorem::LipschitzL1 => {
            Ok(2.0 * rademacher_bound(CoveringVariant::L1, inputs)? + conf)
        }
        GenTheorem::Smooth => {
            let l = inputs.l_star_required()?;
            let c = subroot_c(inputs)?;
            let r_star = fixed_point_r_star(c, inputs.b)?;
            let r0 = smooth_r0(inputs)?;
            Ok(45.0 * r_star
                + (8.0 * r_star * l).sqrt()
                + (4.0 * r0 * l).sqrt()
                + 20.0 * r0)
        }
    }
}

/// The ERM form of the smooth chain via Bernstein's inequality:
/// `sqrt(D0 L*) / 2 + 2 D0` with `D0 = 45 r* + 20 r0`.
pub fn gen_bound_smooth_erm(inputs: &BoundInputs) -> Result<f64> {
    let l = inputs.l_star_required()?;
    let c = subroot_c(inputs)?;
    let r_star = fixed_point_r_star(c, inputs.b)?;
    let r0 = smooth_r0(inputs)?;
    let d0 = 45.0 * r_star + 20.0 * r0;
    Ok((d0 * l).sqrt() / 2.0 + 2.0 * d0)
}

/// The headline display form `D0 = B log(1/delta) + W2^2 R^2 H` of the
/// smooth bound (reported for orientation only; the exact chain is
/// [`gen_bound`] with [`GenTheorem::Smooth`]).
pub fn smooth_d0_display(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    inputs.require_l2()?;
    let h = inputs.h_inf_required()?;
    let wr = inputs.wr();
    Ok(inputs.b * (1.0 / inputs.delta).ln() + wr * wr * h)
}

/// Optimistic-rate bound `L* + 2 sqrt(2 H_w W2^2 L* / n) + 8 H_w W2^2 / n`
/// with `H_w = H_phi R_X^2`. No m dependence.
pub fn fast_rate_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    inputs.require_l2()?;
    let h_phi = inputs.h_inf_required()?;
    let l = inputs.l_star_required()?;
    let h_w = h_phi * inputs.spec.input_radius * inputs.spec.input_radius;
    let x = h_w * inputs.spec.weight_radius * inputs.spec.weight_radius / inputs.n as f64;
    Ok(l + 2.0 * (2.0 * x * l).sqrt() + 8.0 * x)
}

/// Evaluated values of all applicable bounds for one configuration.
/// Entries are `None` where the bound does not apply (wrong norm kind,
/// missing constants, or a closed form outside its validity range).
#[derive(Debug, Clone, Default)]
pub struct BoundReport {
    pub chapelle_complexity: Option<f64>,
    pub chapelle_wu: Option<f64>,
    pub ogd_theorem2: Option<f64>,
    pub rerm_theorem3: Option<f64>,
    pub rademacher_l2: Option<f64>,
    pub gen_l2_theorem4: Option<f64>,
    pub rademacher_l1: Option<f64>,
    pub gen_l1_theorem6: Option<f64>,
    pub smooth_theorem7: Option<f64>,
    pub fast_rate: Option<f64>,
}

impl BoundReport {
    pub fn compute(inputs: &BoundInputs) -> Self {
        Self {
            chapelle_complexity: chapelle_complexity_term(inputs).ok(),
            chapelle_wu: bound_chapelle(inputs).ok(),
            ogd_theorem2: bound_ogd(inputs).ok(),
            rerm_theorem3: bound_rerm(inputs).ok(),
            rademacher_l2: rademacher_bound(CoveringVariant::L2, inputs).ok(),
            gen_l2_theorem4: gen_bound(GenTheorem::LipschitzL2, inputs).ok(),
            rademacher_l1: rademacher_bound(CoveringVariant::L1, inputs).ok(),
            gen_l1_theorem6: gen_bound(GenTheorem::LipschitzL1, inputs).ok(),
            smooth_theorem7: gen_bound(GenTheorem::Smooth, inputs).ok(),
            fast_rate: fast_rate_bound(inputs).ok(),
        }
    }

    pub const CSV_COLUMNS: [&'static str; 10] = [
        "chapelle_complexity",
        "chapelle_wu",
        "ogd_theorem2",
        "rerm_theorem3",
        "rademacher_l2",
        "gen_l2_theorem4",
        "rademacher_l1",
        "gen_l1_theorem6",
        "smooth_theorem7",
        "fast_rate",
    ];

    pub fn csv_values(&self) -> Vec<String> {
        [
            self.chapelle_complexity,
            self.chapelle_wu,
            self.ogd_theorem2,
            self.rerm_theorem3,
            self.rademacher_l2,
            self.gen_l2_theorem4,
            self.rademacher_l1,
            self.gen_l1_theorem6,
            self.smooth_theorem7,
            self.fast_rate,
        ]
        .iter()
        .map(|v| match v {
            Some(x) => format!("{x}"),
            None => "NA".to_string(),
        })
        .collect()
    }

    /// Finite and nonnegative wherever applicable.
    pub fn well_formed(&self) -> bool {
        [
            self.chapelle_complexity,
            self.chapelle_wu,
            self.ogd_theorem2,
            self.rerm_theorem3,
            self.rademacher_l2,
            self.gen_l2_theorem4,
            self.rademacher_l1,
            self.gen_l1_theorem6,
            self.smooth_theorem7,
            self.fast_rate,
        ]
        .iter()
        .flatten()
        .all(|x| x.is_finite() && *x >= 0.0)
    }
}
