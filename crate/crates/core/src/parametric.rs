//! Parametric survival baselines: exponential and log-normal heads on top of
//! a linear map or small ReLU network, trained on the survival CRPS
//!
//! ```text
//! CRPS(F, y, c) = ∫_0^y F(τ)² dτ + (1 - c) ∫_y^∞ (1 - F(τ))² dτ
//! ```
//!
//! The exponential head has a closed form; the log-normal head is integrated
//! with the trapezoidal rule on a fixed grid. Times are in hours throughout.

use alloc::vec::Vec;

use crate::curve::{BeyondSupport, SurvivalCurve, SurvivalFn};
use crate::data::SnapshotTable;
use crate::error::{Error, Result};
use crate::math::{self, exp, expm1, log, normal_cdf, normal_pdf, softplus, softplus_inv};
use crate::nn::Mlp;
use crate::optim::{Adam, EarlyStopping, StopDecision};
use crate::weighting::HorizonGrid;

const RATE_FLOOR: f64 = 1e-8;
const SIGMA_FLOOR: f64 = 1e-6;
/// Quadrature intervals per segment for reported CRPS values.
pub const DEFAULT_POINTS_PER_SEGMENT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HeadKind {
    Exponential,
    LogNormal,
}

impl HeadKind {
    pub fn n_outputs(self) -> usize {
        match self {
            HeadKind::Exponential => 1,
            HeadKind::LogNormal => 2,
        }
    }
}

/// `F(τ) = 1 - exp(-rate τ)`, rate per hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialHead {
    pub rate: f64,
}

/// `F(τ) = Φ((ln τ - mu) / sigma)`, τ in hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalHead {
    pub mu: f64,
    pub sigma: f64,
}

impl ExponentialHead {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain("rate", rate));
        }
        Ok(Self { rate })
    }
}

impl LogNormalHead {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::domain("mu", mu));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", sigma));
        }
        Ok(Self { mu, sigma })
    }

    fn z(&self, tau: f64) -> f64 {
        (log(tau) - self.mu) / self.sigma
    }

    /// Tail horizon `exp(mu + 8 sigma)` used for the truncated survival term.
    pub fn tail_horizon(&self) -> f64 {
        exp(self.mu + 8.0 * self.sigma)
    }

    /// `∫_T^∞ S(τ) dτ`, an upper bound on the truncated `∫_T^∞ S(τ)² dτ`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let (m, s) = (self.mu, self.sigma);
        let lt = log(t);
        let v = exp(m + 0.5 * s * s) * normal_cdf((m + s * s - lt) / s) - t * normal_cdf((m - lt) / s);
        v.max(0.0)
    }
}

impl SurvivalFn for ExponentialHead {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        if !(tau_hours >= 0.0) {
            return Err(Error::domain("tau_hours", tau_hours));
        }
        Ok(-expm1(-self.rate * tau_hours))
    }
}

impl SurvivalFn for LogNormalHead {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        if !(tau_hours >= 0.0) {
            return Err(Error::domain("tau_hours", tau_hours));
        }
        if tau_hours == 0.0 {
            return Ok(0.0);
        }
        Ok(normal_cdf(self.z(tau_hours)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    Exponential(ExponentialHead),
    LogNormal(LogNormalHead),
}

impl SurvivalFn for Head {
    fn cdf_at(&self, tau_hours: f64) -> Result<f64> {
        match self {
            Head::Exponential(h) => h.cdf_at(tau_hours),
            Head::LogNormal(h) => h.cdf_at(tau_hours),
        }
    }
}

fn check_observation(y: f64) -> Result<()> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::domain("y_hours", y));
    }
    Ok(())
}

/// `2x + 4 expm1(-x) - expm1(-2x)`, with a series near 0 where the terms cancel.
fn g_exp(x: f64) -> f64 {
    if x < 0.5 {
        // coefficients (4 (-1)^n - (-2)^n) / n!, n >= 3
        let mut sum = 0.0;
        let mut pow = x * x;
        let mut fact = 2.0;
        let mut neg1 = 1.0;
        let mut neg2 = 4.0;
        for n in 3..=24 {
            pow *= x;
            fact *= n as f64;
            neg1 = -neg1;
            neg2 *= -2.0;
            sum += (4.0 * neg1 - neg2) / fact * pow;
        }
        sum
    } else {
        2.0 * x + 4.0 * expm1(-x) - expm1(-2.0 * x)
    }
}

/// Closed-form survival CRPS of an exponential CDF:
/// `y + (4 e^{-λy} - c e^{-2λy} - 3) / (2λ)`.
pub fn crps_exponential(lambda: f64, y: f64, censored: bool) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain("lambda", lambda));
    }
    check_observation(y)?;
    let x = lambda * y;
    let tail = if censored { 0.0 } else { exp(-2.0 * x) };
    Ok((g_exp(x) + tail) / (2.0 * lambda))
}

/// `d CRPS / d λ` of [`crps_exponential`].
pub fn crps_exponential_grad(lambda: f64, y: f64, censored: bool) -> Result<f64> {
    let value = crps_exponential(lambda, y, censored)?;
    let x = lambda * y;
    let f = -expm1(-x);
    let tail = if censored { 0.0 } else { exp(-2.0 * x) };
    let dg = 2.0 * f * f - 2.0 * tail;
    Ok(y * dg / (2.0 * lambda) - value / lambda)
}

/// Trapezoidal grid: `[0, y]` is one segment; `[y, tail_horizon]` is cut into
/// doubling segments `[y 2^j, y 2^{j+1}]`. Each segment gets
/// `points_per_segment` equal intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidGrid {
    pub points_per_segment: usize,
    pub tail_horizon: f64,
}

impl TrapezoidGrid {
    fn validate(&self, y: f64, censored: bool) -> Result<()> {
        if self.points_per_segment == 0 {
            return Err(Error::InvalidConfig("points_per_segment must be positive".into()));
        }
        if !censored && !(self.tail_horizon.is_finite() && self.tail_horizon >= y) {
            return Err(Error::domain("tail_horizon", self.tail_horizon));
        }
        Ok(())
    }

    /// Calls `visit(τ, weight, in_tail)` for every quadrature node.
    fn for_each_node(&self, y: f64, censored: bool, mut visit: impl FnMut(f64, f64, bool)) {
        let n = self.points_per_segment;
        let segment = |a: f64, b: f64, tail: bool, visit: &mut dyn FnMut(f64, f64, bool)| {
            let h = (b - a) / n as f64;
            for j in 0..=n {
                let w = if j == 0 || j == n { 0.5 * h } else { h };
                let tau = if j == n { b } else { a + j as f64 * h };
                visit(tau, w, tail);
            }
        };
        segment(0.0, y, false, &mut visit);
        if censored {
            return;
        }
        let mut a = y;
        while a < self.tail_horizon {
            let b = (2.0 * a).min(self.tail_horizon);
            segment(a, b, true, &mut visit);
            a = b;
        }
    }
}

/// Survival CRPS by the trapezoidal rule, truncated at `grid.tail_horizon`.
pub fn crps_trapezoid(cdf: impl Fn(f64) -> f64, y: f64, censored: bool, grid: &TrapezoidGrid) -> Result<f64> {
    check_observation(y)?;
    grid.validate(y, censored)?;
    let mut sum = 0.0;
    grid.for_each_node(y, censored, |tau, w, tail| {
        let f = cdf(tau);
        sum += if tail { w * (1.0 - f) * (1.0 - f) } else { w * f * f };
    });
    Ok(sum)
}

/// A trapezoidal CRPS value together with a bound on the dropped tail mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedCrps {
    pub value: f64,
    pub tail_bound: f64,
}

/// Trapezoidal CRPS of an exponential CDF, tail cut at `y + 20 / λ`.
pub fn crps_exponential_trapezoid(lambda: f64, y: f64, censored: bool, points_per_segment: usize) -> Result<TruncatedCrps> {
    let head = ExponentialHead::new(lambda)?;
    let t = y + 20.0 / lambda;
    let grid = TrapezoidGrid {
        points_per_segment,
        tail_horizon: t,
    };
    let value = crps_trapezoid(|tau| -expm1(-head.rate * tau), y, censored, &grid)?;
    let tail_bound = if censored { 0.0 } else { exp(-2.0 * lambda * t) / (2.0 * lambda) };
    Ok(TruncatedCrps { value, tail_bound })
}

/// CRPS value and its gradient with respect to `(mu, sigma)` for a log-normal
/// head; the grid is held fixed when differentiating.
fn lognormal_crps_grad(head: &LogNormalHead, y: f64, censored: bool, points: usize) -> Result<(f64, f64, f64, f64)> {
    let t = head.tail_horizon().max(y);
    let grid = TrapezoidGrid {
        points_per_segment: points,
        tail_horizon: t,
    };
    check_observation(y)?;
    grid.validate(y, censored)?;
    let (mut v, mut dmu, mut dsigma) = (0.0, 0.0, 0.0);
    grid.for_each_node(y, censored, |tau, w, tail| {
        if tau <= 0.0 {
            // F(0) = 0 with zero derivative
            if tail {
                v += w;
            }
            return;
        }
        let z = head.z(tau);
        let (f, s) = (normal_cdf(z), normal_cdf(-z));
        let dfdmu = -normal_pdf(z) / head.sigma;
        let dfdsigma = dfdmu * z;
        // d(F²) = 2F dF ; d(S²) = -2S dF
        let k = if tail {
            v += w * s * s;
            -2.0 * w * s
        } else {
            v += w * f * f;
            2.0 * w * f
        };
        dmu += k * dfdmu;
        dsigma += k * dfdsigma;
    });
    let tail_bound = if censored { 0.0 } else { head.tail_bound(t) };
    Ok((v, tail_bound, dmu, dsigma))
}

/// Log-normal survival CRPS by the trapezoidal rule, tail cut at
/// `max(y, exp(mu + 8 sigma))`.
pub fn crps_lognormal(mu: f64, sigma: f64, y: f64, censored: bool, points_per_segment: usize) -> Result<TruncatedCrps> {
    let head = LogNormalHead::new(mu, sigma)?;
    if points_per_segment == 0 {
        return Err(Error::InvalidConfig("points_per_segment must be positive".into()));
    }
    let (value, tail_bound, _, _) = lognormal_crps_grad(&head, y, censored, points_per_segment)?;
    Ok(TruncatedCrps { value, tail_bound })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ParametricConfig {
    pub head: HeadKind,
    /// Hidden layer widths; empty gives a linear predictor.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
    /// Start the output bias at the marginal maximum-likelihood head.
    pub data_init: bool,
    /// Trapezoid intervals per segment during log-normal training.
    pub train_points_per_segment: usize,
}

impl Default for ParametricConfig {
    fn default() -> Self {
        Self {
            head: HeadKind::Exponential,
            hidden: Vec::new(),
            learning_rate: 0.01,
            l2: 0.0,
            max_epochs: 500,
            early_stop_patience: 10,
            seed: 0,
            data_init: true,
            train_points_per_segment: 16,
        }
    }
}

impl ParametricConfig {
    /// Two hidden layers of 50 units, learning rate 1e-4, weight penalty 0.01.
    pub fn large(head: HeadKind) -> Self {
        Self {
            head,
            hidden: alloc::vec![50, 50],
            learning_rate: 1e-4,
            l2: 0.01,
            max_epochs: 5000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("parametric: {what}")));
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be finite and nonnegative");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be positive");
        }
        if self.train_points_per_segment == 0 {
            return bad("train_points_per_segment must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricModel {
    head: HeadKind,
    net: Mlp,
    /// Epochs run and the epoch whose parameters were kept.
    pub epochs: usize,
    pub best_epoch: Option<usize>,
}

/// `λ = softplus(r) + 1e-8`.
pub fn rate_link(raw: f64) -> f64 {
    softplus(raw) + RATE_FLOOR
}

/// `σ = softplus(r) + 1e-6`.
pub fn sigma_link(raw: f64) -> f64 {
    softplus(raw) + SIGMA_FLOOR
}

fn head_from_raw(kind: HeadKind, raw: &[f64]) -> Head {
    match kind {
        HeadKind::Exponential => Head::Exponential(ExponentialHead { rate: rate_link(raw[0]) }),
        HeadKind::LogNormal => Head::LogNormal(LogNormalHead {
            mu: raw[0],
            sigma: sigma_link(raw[1]),
        }),
    }
}

impl ParametricModel {
    pub fn from_parts(head: HeadKind, net: Mlp) -> Result<Self> {
        if net.n_outputs() != head.n_outputs() {
            return Err(Error::DimensionMismatch {
                expected: head.n_outputs(),
                found: net.n_outputs(),
            });
        }
        Ok(Self {
            head,
            net,
            epochs: 0,
            best_epoch: None,
        })
    }

    pub fn head_kind(&self) -> HeadKind {
        self.head
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn n_features(&self) -> usize {
        self.net.n_inputs()
    }

    pub fn predict_head(&self, x: &[f64]) -> Result<Head> {
        let raw = self.net.predict(x)?;
        Ok(head_from_raw(self.head, &raw))
    }

    /// Mean survival CRPS over a snapshot table (log-normal with the default grid).
    pub fn mean_crps(&self, data: &SnapshotTable) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut total = 0.0;
        for i in 0..data.len() {
            let y = data.y_hours[i];
            let c = data.censored[i];
            total += match self.predict_head(data.x.row(i))? {
                Head::Exponential(h) => crps_exponential(h.rate, y, c)?,
                Head::LogNormal(h) => crps_lognormal(h.mu, h.sigma, y, c, DEFAULT_POINTS_PER_SEGMENT)?.value,
            };
        }
        Ok(total / data.len() as f64)
    }
}

/// Head CDF at the knots of `grid`.
pub fn predict_parametric_curve(model: &ParametricModel, x: &[f64], grid: &HorizonGrid) -> Result<SurvivalCurve> {
    let head = model.predict_head(x)?;
    let mut cdf = Vec::with_capacity(grid.len());
    let mut prev = 0.0f64;
    for &h in grid.horizons_hours() {
        // analytic CDFs are monotone; guard against rounding anyway
        prev = prev.max(head.cdf_at(h)?.clamp(0.0, 1.0));
        cdf.push(prev);
    }
    SurvivalCurve::new(grid.horizons_hours().to_vec(), cdf, BeyondSupport::Clamp)
}

/// Mean loss over `data` and, if `grads` is given, its gradient in network parameters.
fn loss_and_grad(
    net: &Mlp,
    kind: HeadKind,
    data: &SnapshotTable,
    points: usize,
    mut grads: Option<&mut [f64]>,
) -> Result<f64> {
    let n = data.len() as f64;
    let mut ws = net.workspace();
    let mut total = 0.0;
    for i in 0..data.len() {
        let y = data.y_hours[i];
        let c = data.censored[i];
        let raw = net.forward(data.x.row(i), &mut ws);
        let (loss, d_out) = match kind {
            HeadKind::Exponential => {
                let lambda = rate_link(raw[0]);
                let v = crps_exponential(lambda, y, c)?;
                let d = crps_exponential_grad(lambda, y, c)? * math::sigmoid(raw[0]);
                (v, [d, 0.0])
            }
            HeadKind::LogNormal => {
                let head = LogNormalHead {
                    mu: raw[0],
                    sigma: sigma_link(raw[1]),
                };
                let (v, _, dmu, dsigma) = lognormal_crps_grad(&head, y, c, points)?;
                (v, [dmu, dsigma * math::sigmoid(raw[1])])
            }
        };
        total += loss;
        if let Some(g) = grads.as_deref_mut() {
            let scaled = [d_out[0] / n, d_out[1] / n];
            net.backward(&mut ws, &scaled[..kind.n_outputs()], g);
        }
    }
    Ok(total / n)
}

fn initial_bias(kind: HeadKind, data: &SnapshotTable) -> Vec<f64> {
    match kind {
        HeadKind::Exponential => {
            let deaths = data.censored.iter().filter(|&&c| !c).count().max(1) as f64;
            let exposure: f64 = data.y_hours.iter().sum();
            alloc::vec![softplus_inv((deaths / exposure).max(2.0 * RATE_FLOOR))]
        }
        HeadKind::LogNormal => {
            let logs: Vec<f64> = data.y_hours.iter().map(|&y| log(y)).collect();
            let m = logs.iter().sum::<f64>() / logs.len() as f64;
            let var = logs.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / logs.len() as f64;
            let s = math::sqrt(var).max(0.1);
            alloc::vec![m, softplus_inv(s - SIGMA_FLOOR)]
        }
    }
}

/// Full-batch Adam on mean CRPS plus `l2 / 2 ||W||²`, early-stopping on the
/// validation CRPS (skipped when `valid` is empty).
pub fn train_parametric(train: &SnapshotTable, valid: &SnapshotTable, config: &ParametricConfig) -> Result<ParametricModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = train.n_features();
    if !valid.is_empty() && valid.n_features() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: valid.n_features(),
        });
    }
    let mut sizes = alloc::vec![d];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(config.head.n_outputs());
    let mut net = Mlp::seeded(&sizes, config.seed)?;
    if config.data_init {
        let off = net.output_bias_offset();
        for (j, b) in initial_bias(config.head, train).into_iter().enumerate() {
            net.params_mut()[off + j] = b;
        }
    }

    let points = config.train_points_per_segment;
    let mut opt = Adam::new(net.params().len(), config.learning_rate);
    let mut stopper = EarlyStopping::new(config.early_stop_patience);
    let mut grads = alloc::vec![0.0; net.params().len()];
    let mut best = net.clone();
    let mut epochs = 0;

    for epoch in 0..config.max_epochs {
        epochs = epoch + 1;
        grads.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = loss_and_grad(&net, config.head, train, points, Some(&mut grads))?;
        loss += net.l2_penalty(config.l2, &mut grads);
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        opt.step(net.params_mut(), &grads);

        if valid.is_empty() {
            continue;
        }
        let vloss = loss_and_grad(&net, config.head, valid, points, None)?;
        if !vloss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss: vloss });
        }
        match stopper.observe(vloss) {
            StopDecision::Improved => best = net.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    let best_epoch = if valid.is_empty() {
        best = net;
        None
    } else {
        stopper.best_epoch()
    };
    Ok(ParametricModel {
        head: config.head,
        net: best,
        epochs,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, an oracle independent of the trapezoid code.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    fn exp_oracle(lambda: f64, y: f64, c: bool) -> f64 {
        let head = |t: f64| (1.0 - (-lambda * t).exp()).powi(2);
        let tail = |t: f64| (-2.0 * lambda * t).exp();
        let mut v = simpson(&head, 0.0, y, 1e-12);
        if !c {
            // e^{-2λt} beyond y + 40/λ is below 1e-30
            v += simpson(&tail, y, y + 40.0 / lambda, 1e-12);
        }
        v
    }

    #[test]
    fn closed_form_reference_values() {
        assert!((crps_exponential(1.0, 1.0, false).unwrap() - 0.235_758_882_342_884_64).abs() < 1e-15);
        assert!((crps_exponential(1.0, 1.0, true).unwrap() - 0.168_091_240_724_578_3).abs() < 1e-15);
        assert!(crps_exponential(0.3, 1e-9, true).unwrap() < 1e-20);
        assert!(crps_exponential(0.0, 1.0, true).is_err());
        assert!(crps_exponential(1.0, 0.0, true).is_err());
    }

    #[test]
    fn series_branch_is_continuous() {
        for c in [false, true] {
            let below = crps_exponential(1.0, 0.5 - 1e-12, c).unwrap();
            let above = crps_exponential(1.0, 0.5 + 1e-12, c).unwrap();
            assert!((below - above).abs() < 1e-11);
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for &(l, y) in &[(1.0, 1.0), (0.01, 30.0), (0.2, 0.3), (1e-3, 400.0), (0.9, 120.0)] {
            for c in [false, true] {
                let a = crps_exponential(l, y, c).unwrap();
                let b = exp_oracle(l, y, c);
                assert!((a - b).abs() < 1e-7, "λ={l} y={y} c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trapezoid_matches_closed_form_and_converges() {
        for c in [false, true] {
            let exact = crps_exponential(1.0 / 24.0, 30.5, c).unwrap();
            let t = crps_exponential_trapezoid(1.0 / 24.0, 30.5, c, 1024).unwrap();
            assert!((t.value - exact).abs() < 1e-4);
            assert!(t.tail_bound < 1e-12);
            let e1 = (crps_exponential_trapezoid(1.0 / 24.0, 30.5, c, 32).unwrap().value - exact).abs();
            let e2 = (crps_exponential_trapezoid(1.0 / 24.0, 30.5, c, 64).unwrap().value - exact).abs();
            let ratio = e1 / e2;
            assert!((3.5..=4.5).contains(&ratio), "c={c}: ratio {ratio}");
        }
        let g = TrapezoidGrid {
            points_per_segment: 0,
            tail_horizon: 10.0,
        };
        assert!(crps_trapezoid(|_| 0.5, 1.0, false, &g).is_err());
    }

    #[test]
    fn lognormal_examples() {
        let head = LogNormalHead::new(0.0, 1.0).unwrap();
        assert!((head.cdf_at(1.0).unwrap() - 0.5).abs() < 1e-15);
        let oracle = simpson(&|t: f64| if t == 0.0 { 0.0 } else { head.cdf_at(t).unwrap().powi(2) }, 0.0, 1.0, 1e-12);
        let v = crps_lognormal(0.0, 1.0, 1.0, true, DEFAULT_POINTS_PER_SEGMENT).unwrap();
        assert!((v.value - oracle).abs() < 1e-4, "{} vs {oracle}", v.value);

        let (mu, s, y) = (3.0, 0.7, 15.5);
        let h = LogNormalHead::new(mu, s).unwrap();
        let f = |t: f64| if t == 0.0 { 0.0 } else { h.cdf_at(t).unwrap() };
        let oracle = simpson(&|t| f(t).powi(2), 0.0, y, 1e-12)
            + simpson(&|t| (1.0 - f(t)).powi(2), y, 2000.0, 1e-12)
            + simpson(&|t| (1.0 - f(t)).powi(2), 2000.0, 1e6, 1e-12);
        let v = crps_lognormal(mu, s, y, false, DEFAULT_POINTS_PER_SEGMENT).unwrap();
        assert!((v.value - oracle).abs() < 1e-4, "{} vs {oracle}", v.value);
        assert!(v.tail_bound < 1e-6);
    }

    #[test]
    fn lognormal_narrowing_sigma_tends_to_zero_at_median() {
        let y = 1.0f64.exp();
        let mut prev = f64::INFINITY;
        for s in [0.5, 0.1, 0.02, 0.004] {
            let v = crps_lognormal(1.0, s, y, true, DEFAULT_POINTS_PER_SEGMENT).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn lognormal_gradient_matches_finite_differences() {
        for c in [false, true] {
            let head = LogNormalHead { mu: 2.5, sigma: 0.8 };
            let (_, _, dmu, ds) = lognormal_crps_grad(&head, 9.5, c, 64).unwrap();
            let val = |mu: f64, s: f64| {
                // hold the grid fixed at the unperturbed tail horizon
                let g = TrapezoidGrid {
                    points_per_segment: 64,
                    tail_horizon: head.tail_horizon(),
                };
                let h = LogNormalHead { mu, sigma: s };
                crps_trapezoid(|t| h.cdf_at(t).unwrap(), 9.5, c, &g).unwrap()
            };
            let e = 1e-6;
            let fd_mu = (val(2.5 + e, 0.8) - val(2.5 - e, 0.8)) / (2.0 * e);
            let fd_s = (val(2.5, 0.8 + e) - val(2.5, 0.8 - e)) / (2.0 * e);
            assert!((fd_mu - dmu).abs() < 1e-5 * fd_mu.abs().max(1.0));
            assert!((fd_s - ds).abs() < 1e-5 * fd_s.abs().max(1.0));
        }
    }

    #[test]
    fn curve_examples() {
        let net = Mlp::from_params(&[1, 1], vec![0.0, softplus_inv(1.0 / 24.0 - RATE_FLOOR)]).unwrap();
        let model = ParametricModel::from_parts(HeadKind::Exponential, net).unwrap();
        let grid = HorizonGrid::custom(vec![24.0 * core::f64::consts::LN_2, 24.0]).unwrap();
        let curve = predict_parametric_curve(&model, &[3.0], &grid).unwrap();
        assert!((curve.cdf_values()[0] - 0.5).abs() < 1e-12);
        assert!((curve.cdf_values()[1] - 0.632_120_558_828_557_7).abs() < 1e-12);
        assert!(predict_parametric_curve(&model, &[3.0, 1.0], &grid).is_err());
    }

    #[test]
    fn recovers_a_constant_rate() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Exp};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let dist = Exp::new(1.0 / 24.0).unwrap();
        let n = 5000;
        let y: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let rows: Vec<[f64; 1]> = vec![[1.0]; n];
        let train = SnapshotTable::from_rows(&rows, &y, &vec![false; n]).unwrap();
        let cfg = ParametricConfig {
            data_init: false,
            learning_rate: 0.05,
            max_epochs: 1500,
            ..Default::default()
        };
        let model = train_parametric(&train, &SnapshotTable::empty(1), &cfg).unwrap();
        let Head::Exponential(h) = model.predict_head(&[1.0]).unwrap() else { panic!() };
        assert!((h.rate * 24.0 - 1.0).abs() < 0.1, "rate {}", h.rate);
        assert!(train_parametric(&SnapshotTable::empty(1), &SnapshotTable::empty(1), &cfg).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_agrees_with_oracle(lambda in 1e-3f64..1.0, y in 0.1f64..500.0, c in any::<bool>()) {
            let a = crps_exponential(lambda, y, c).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - exp_oracle(lambda, y, c)).abs() < 1e-6);
        }

        #[test]
        fn gradient_matches_finite_differences(lambda in 1e-3f64..1.0, y in 0.1f64..500.0, c in any::<bool>()) {
            let g = crps_exponential_grad(lambda, y, c).unwrap();
            let h = lambda * 1e-5;
            let fd = (crps_exponential(lambda + h, y, c).unwrap() - crps_exponential(lambda - h, y, c).unwrap()) / (2.0 * h);
            prop_assert!((g - fd).abs() <= 1e-5 * fd.abs().max(1e-8), "{} vs {}", g, fd);
        }

        #[test]
        fn censored_crps_grows_with_y(lambda in 1e-3f64..1.0, y in 0.1f64..500.0, dy in 0.0f64..100.0) {
            prop_assert!(crps_exponential(lambda, y + dy, true).unwrap() >= crps_exponential(lambda, y, true).unwrap());
        }

        #[test]
        fn links_are_positive(r in -1e3f64..1e3) {
            prop_assert!(rate_link(r) > 0.0);
            prop_assert!(sigma_link(r) > 0.0);
        }
    }
}
