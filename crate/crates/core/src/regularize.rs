//! Slit geometry and the ε-parametrized families that regularize the thin
//! barrier `δ₀(x)·h(y)` and the incoming packet.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Grid2D, RealField2D};
use crate::quad::GaussLegendre;

/// `∫_{-1}^{1} exp(−1/(1−s²)) ds`.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

/// Unnormalized compact bump `exp(−1/(1−s²))` on `|s| < 1`.
pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

pub fn bump_derivative(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let q = 1.0 - s * s;
        bump(s) * (-2.0 * s / (q * q))
    } else {
        0.0
    }
}

/// Supremum of `|bump'|` on the line.
pub fn bump_derivative_sup() -> f64 {
    static SUP: OnceLock<f64> = OnceLock::new();
    *SUP.get_or_init(|| {
        (1..20_000)
            .map(|i| bump_derivative(-1.0 + i as f64 * 1e-4).abs())
            .fold(0.0, f64::max)
            * 1.0001
    })
}

fn gl64() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(64))
}

/// Normalized primitive of the bump: 0 for `t ≤ −1`, 1 for `t ≥ 1`, and
/// `smooth_step(0) = 1/2`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else if t <= 0.0 {
        gl64().integrate(-1.0, t, bump) / BUMP_MASS
    } else {
        1.0 - gl64().integrate(t, 1.0, bump) / BUMP_MASS
    }
}

/// `S ⊆ ℝ` as an ordered union of disjoint open intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitConfig {
    intervals: Vec<(f64, f64)>,
}

impl SlitConfig {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Config(format!("slit interval ({a}, {b}) is empty")));
            }
        }
        for w in intervals.windows(2) {
            if !(w[0].1 < w[1].0) {
                return Err(Error::Config(format!(
                    "slit intervals ({}, {}) and ({}, {}) overlap or are unordered",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    /// The fully closed barrier.
    pub fn closed() -> Self {
        Self { intervals: vec![] }
    }

    /// `S = (−d, d)`.
    pub fn single_slit(d: f64) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::Config(format!(
                "slit half-width must be positive, got {d}"
            )));
        }
        Self::new(vec![(-d, d)])
    }

    /// `S = (−a−d, −a+d) ∪ (a−d, a+d)`.
    pub fn double_slit(a: f64, d: f64) -> Result<Self> {
        if !(d > 0.0 && a > d) {
            return Err(Error::Config(format!(
                "double slit needs 0 < d < a, got a = {a}, d = {d}"
            )));
        }
        Self::new(vec![(-a - d, -a + d), (a - d, a + d)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < y && y < b)
    }

    /// Distance from `y` to the nearest endpoint of `S`.
    pub fn distance_to_boundary(&self, y: f64) -> f64 {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [(y - a).abs(), (y - b).abs()])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_width(&self) -> Option<f64> {
        self.intervals
            .iter()
            .map(|&(a, b)| b - a)
            .min_by(f64::total_cmp)
    }

    /// The sub-configuration made of one interval.
    pub fn component(&self, i: usize) -> Option<Self> {
        self.intervals.get(i).map(|&iv| Self {
            intervals: vec![iv],
        })
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.intervals.len();
        (0..n).all(|i| {
            let (a, b) = self.intervals[i];
            let (c, d) = self.intervals[n - 1 - i];
            (a + d).abs() < 1e-12 && (b + c).abs() < 1e-12
        })
    }
}

/// `value(ε) = coeff·ε^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub const fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn at(&self, eps: f64) -> f64 {
        self.coeff * eps.powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    /// Indicator-function family: `δ^ε = χ(x/c)/(2c)`, `h = H(1 − 1_S)`,
    /// `ρ = √(ε/2)·χ(εy)`.
    Box,
    /// Smooth family built from the compact bump.
    Mollified,
}

/// Scaling laws for every ε-dependent ingredient.
#[derive(Debug, Clone, PartialEq)]
pub struct RegFamilySpec {
    pub kind: RegKind,
    /// `c_ε`, half-width of the support of `δ₀^ε`.
    pub delta_support: PowerLaw,
    /// `H_ε = ‖h_ε‖_∞`.
    pub barrier_height: PowerLaw,
    /// Half-width of the plateau outside which `h_ε` is cut off.
    pub plateau: PowerLaw,
    /// Width of the smooth plateau edge (mollified kind).
    pub plateau_edge: f64,
    /// Center `x_c` of `φ_ε`.
    pub packet_center: f64,
    /// Half-width of `supp φ_ε`.
    pub packet_width_x: PowerLaw,
    /// Half-width of `supp ρ_ε` (mollified kind).
    pub packet_width_y: PowerLaw,
}

impl RegFamilySpec {
    /// The explicit non-smooth family: `c_ε = ε`, `H_ε = 1/ε`.
    pub fn box_family() -> Self {
        Self {
            kind: RegKind::Box,
            delta_support: PowerLaw::new(1.0, 1.0),
            barrier_height: PowerLaw::new(1.0, -1.0),
            plateau: PowerLaw::new(1.0, -1.0),
            plateau_edge: 1.0,
            packet_center: -3.0,
            packet_width_x: PowerLaw::constant(1.0),
            packet_width_y: PowerLaw::constant(2.0),
        }
    }

    /// Smooth family with `c_ε = ε` and `H_ε = ε^{−α}`.
    pub fn mollified(alpha: f64) -> Self {
        Self {
            kind: RegKind::Mollified,
            barrier_height: PowerLaw::new(1.0, -alpha),
            ..Self::box_family()
        }
    }

    pub fn c_eps(&self, eps: f64) -> f64 {
        self.delta_support.at(eps)
    }

    pub fn h_max(&self, eps: f64) -> f64 {
        self.barrier_height.at(eps)
    }

    pub fn plateau_half_width(&self, eps: f64) -> f64 {
        self.plateau.at(eps)
    }

    /// `H_ε·√c_ε`, the quantity whose vanishing drives the local decay result.
    pub fn predictor(&self, eps: f64) -> f64 {
        self.h_max(eps) * self.c_eps(eps).sqrt()
    }

    /// Checks positivity and the limits `c_ε → 0`, `H_ε → ∞` along a schedule.
    pub fn check_schedule(&self, schedule: &[f64]) -> Result<()> {
        let mut problems = Vec::new();
        if schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            problems.push("ε values must be positive".to_string());
        }
        if schedule.windows(2).any(|w| !(w[1] < w[0])) {
            problems.push("ε schedule must be strictly decreasing".to_string());
        }
        if !(self.delta_support.coeff > 0.0 && self.delta_support.exponent > 0.0) {
            problems.push("c_ε must be positive and vanish as ε → 0".to_string());
        }
        if !(self.barrier_height.coeff > 0.0 && self.barrier_height.exponent < 0.0) {
            problems.push("H_ε must be positive and diverge as ε → 0".to_string());
        }
        if !(self.plateau.coeff > 0.0 && self.plateau.exponent <= 0.0) {
            problems.push("plateau half-width must be positive and non-shrinking".to_string());
        }
        if !(self.plateau_edge > 0.0) {
            problems.push("plateau edge width must be positive".to_string());
        }
        if !(self.packet_width_x.coeff > 0.0 && self.packet_width_y.coeff > 0.0) {
            problems.push("packet widths must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Whether `H_ε√c_ε` is strictly decreasing along the schedule.
    pub fn satisfies_decay_hypothesis(&self, schedule: &[f64]) -> bool {
        schedule.len() >= 2
            && schedule
                .windows(2)
                .all(|w| self.predictor(w[1]) < self.predictor(w[0]))
    }

    /// Half-width of the smooth slit-edge transition for an interval of
    /// width `width`.
    pub fn edge_half_width(&self, eps: f64, width: f64) -> f64 {
        eps * width / 4.0
    }
}

fn next_pow2_at_least(x: f64) -> usize {
    let n = x.ceil().max(8.0) as usize;
    n.next_power_of_two()
}

/// Cell-averaged indicator of `[lo, hi]`: 1 inside, 1/2 on an endpoint
/// that falls on a sample.
fn cell_indicator(v: f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if (v - lo).abs() <= tol || (v - hi).abs() <= tol {
        0.5
    } else if lo < v && v < hi {
        1.0
    } else {
        0.0
    }
}

/// `δ₀^ε` sampled on the x axis, with unit discrete mass.
pub fn sample_delta_eps(spec: &RegFamilySpec, eps: f64, grid: &Grid2D) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::Usage(format!("ε must be positive, got {eps}")));
    }
    let c = spec.c_eps(eps);
    let dx = grid.dx();
    if c < 2.0 * dx {
        return Err(Error::UnderResolved {
            what: format!("δ₀^ε support half-width {c:.3e} at ε = {eps:.3e} (dx = {dx:.3e})"),
            required_n: next_pow2_at_least(2.0 * grid.lx() / c),
        });
    }
    let tol = 1e-9 * dx;
    let mut samples: Vec<f64> = grid
        .xs()
        .into_iter()
        .map(|x| match spec.kind {
            RegKind::Box => cell_indicator(x, -c, c, tol),
            RegKind::Mollified => bump(x / c),
        })
        .collect();
    let mass = samples.iter().sum::<f64>() * dx;
    samples.iter_mut().for_each(|v| *v /= mass);
    Ok(samples)
}

fn check_slits(slits: &SlitConfig, eps: f64, grid: &Grid2D) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Usage(format!("ε must be positive, got {eps}")));
    }
    let dy = grid.dy();
    if let Some(w) = slits.min_width() {
        if w < 4.0 * dy {
            return Err(Error::UnderResolved {
                what: format!("slit of width {w:.3e} (dy = {dy:.3e})"),
                required_n: next_pow2_at_least(4.0 * grid.ly() / w),
            });
        }
    }
    Ok(())
}

/// Smoothed indicator `m_S(y) ∈ [0, 1]`.
fn smoothed_indicator(spec: &RegFamilySpec, slits: &SlitConfig, eps: f64, y: f64) -> f64 {
    slits
        .intervals()
        .iter()
        .map(|&(a, b)| {
            let w = spec.edge_half_width(eps, b - a);
            smooth_step((y - a) / w) - smooth_step((y - b) / w)
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn plateau_cutoff(spec: &RegFamilySpec, eps: f64, y: f64, tol: f64) -> f64 {
    let r = spec.plateau_half_width(eps);
    match spec.kind {
        RegKind::Box => cell_indicator(y, -r, r, tol),
        RegKind::Mollified => {
            let e = spec.plateau_edge;
            1.0 - smooth_step((y.abs() - r - 0.5 * e) / (0.5 * e))
        }
    }
}

/// Barrier profile `h_ε` sampled on the y axis.
pub fn sample_h_eps(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    eps: f64,
    grid: &Grid2D,
) -> Result<Vec<f64>> {
    check_slits(slits, eps, grid)?;
    let h = spec.h_max(eps);
    let tol = 1e-9 * grid.dy();
    Ok(grid
        .ys()
        .into_iter()
        .map(|y| {
            let open = match spec.kind {
                RegKind::Box => slits
                    .intervals()
                    .iter()
                    .map(|&(a, b)| cell_indicator(y, a, b, tol))
                    .sum::<f64>()
                    .min(1.0),
                RegKind::Mollified => smoothed_indicator(spec, slits, eps, y),
            };
            h * (1.0 - open) * plateau_cutoff(spec, eps, y, tol)
        })
        .collect())
}

/// `b_ε = 1 − h_ε/H_ε`, the regularized slit indicator.
pub fn sample_b_eps(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    eps: f64,
    grid: &Grid2D,
) -> Result<Vec<f64>> {
    let h = spec.h_max(eps);
    Ok(sample_h_eps(spec, slits, eps, grid)?
        .into_iter()
        .map(|v| 1.0 - v / h)
        .collect())
}

/// `max |b_ε − 1_S|` over samples farther than `margin` from `∂S` and inside
/// the plateau.
pub fn b_eps_sup_error(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    eps: f64,
    grid: &Grid2D,
    margin: f64,
) -> Result<f64> {
    let b = sample_b_eps(spec, slits, eps, grid)?;
    let r = spec.plateau_half_width(eps);
    Ok(grid
        .ys()
        .into_iter()
        .zip(b)
        .filter(|&(y, _)| slits.distance_to_boundary(y) > margin && y.abs() < r)
        .map(|(y, v)| (v - if slits.contains(y) { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max))
}

/// Smallest `c` with `h_ε(y) ≥ H_ε − c` at samples outside `S`, farther than
/// twice the edge width from `∂S` and inside the plateau.
pub fn barrier_droop(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    eps: f64,
    grid: &Grid2D,
) -> Result<f64> {
    let h = sample_h_eps(spec, slits, eps, grid)?;
    let hmax = spec.h_max(eps);
    let edge = slits
        .intervals()
        .iter()
        .map(|&(a, b)| spec.edge_half_width(eps, b - a))
        .fold(grid.dy(), f64::max);
    let r = spec.plateau_half_width(eps);
    Ok(grid
        .ys()
        .into_iter()
        .zip(h)
        .filter(|&(y, _)| {
            !slits.contains(y) && slits.distance_to_boundary(y) > 2.0 * edge && y.abs() <= r
        })
        .map(|(_, v)| hmax - v)
        .fold(0.0, f64::max))
}

/// `V_ε(x, y) = δ₀^ε(x)·h_ε(y)`.
pub fn sample_potential(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    eps: f64,
    grid: &Grid2D,
) -> Result<RealField2D> {
    let dx = sample_delta_eps(spec, eps, grid)?;
    let hy = sample_h_eps(spec, slits, eps, grid)?;
    RealField2D::tensor(grid, &dx, &hy)
}

/// Initial packet `g_ε = ρ_ε(y)·φ_ε(x)·e^{i p₀ x}`, normalized in L².
pub fn sample_initial(
    spec: &RegFamilySpec,
    eps: f64,
    p0: f64,
    grid: &Grid2D,
) -> Result<ComplexField2D> {
    if !(eps > 0.0) {
        return Err(Error::Usage(format!("ε must be positive, got {eps}")));
    }
    let xc = spec.packet_center;
    let wx = spec.packet_width_x.at(eps);
    let wy = match spec.kind {
        RegKind::Box => 1.0 / eps,
        RegKind::Mollified => spec.packet_width_y.at(eps),
    };
    let mut problems = Vec::new();
    if xc + wx > -1.0 + 1e-12 {
        problems.push(format!(
            "packet support reaches x = {:.4}, must stay in (−∞, −1]",
            xc + wx
        ));
    }
    let x_lo = grid.x_min() + 4.0 * grid.dx();
    let x_hi = grid.x_min() + grid.lx() - 4.0 * grid.dx();
    if xc - wx < x_lo || xc + wx > x_hi {
        problems.push(format!(
            "packet x-support [{:.4}, {:.4}] leaves the box interior [{x_lo:.4}, {x_hi:.4}]",
            xc - wx,
            xc + wx
        ));
    }
    let y_lo = grid.y_min() + 4.0 * grid.dy();
    let y_hi = grid.y_min() + grid.ly() - 4.0 * grid.dy();
    if -wy < y_lo || wy > y_hi {
        problems.push(format!(
            "packet y-support [{:.4}, {wy:.4}] leaves the box interior [{y_lo:.4}, {y_hi:.4}]",
            -wy
        ));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let tol = 1e-9 * grid.dy();
    let rho: Vec<f64> = grid
        .ys()
        .into_iter()
        .map(|y| match spec.kind {
            RegKind::Box => (eps / 2.0).sqrt() * cell_indicator(eps * y, -1.0, 1.0, eps * tol),
            RegKind::Mollified => bump(y / wy),
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for x in grid.xs() {
        let phi = Complex64::from_polar(bump((x - xc) / wx), p0 * x);
        values.extend(rho.iter().map(|&r| phi * r));
    }
    ComplexField2D::new(grid.clone(), values, crate::field::Representation::Position)?.normalized()
}

/// Least-squares power-law fit `value ≈ C·ε^{−N}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    /// Fitted growth exponent `N` (negative values mean decay).
    pub exponent: f64,
    pub log_prefactor: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
}

impl OrderEstimate {
    pub fn is_moderate(&self) -> bool {
        self.exponent.is_finite()
    }

    pub fn is_negligible_compatible(&self, q: f64) -> bool {
        self.exponent < -q
    }
}

/// Least-squares slope of `ln y` against `ln x`, with intercept and the
/// largest absolute residual.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

/// Fits the growth exponent of `value(ε)` as `ε → 0` from `(ε, value)` pairs.
pub fn estimate_asymptotic_order(samples: &[(f64, f64)]) -> Result<OrderEstimate> {
    if samples.len() < 4 {
        return Err(Error::Usage(format!(
            "order estimation needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|&(e, v)| !(e > 0.0) || !(v > 0.0) || !v.is_finite())
    {
        return Err(Error::Usage(
            "ε and values must be positive and finite".into(),
        ));
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Usage("ε must be strictly decreasing".into()));
    }
    let inv: Vec<f64> = samples.iter().map(|s| 1.0 / s.0).collect();
    let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (exponent, log_prefactor, max_residual) = log_log_fit(&inv, &vals);
    Ok(OrderEstimate {
        exponent,
        log_prefactor,
        max_residual,
    })
}

/// Default geometric schedule `ε_k = 2^{−k}` for `k` in `k_lo..=k_hi`.
pub fn dyadic_schedule(k_lo: i32, k_hi: i32) -> Vec<f64> {
    (k_lo..=k_hi).map(|k| 2f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(a + i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    fn xgrid(n: usize, l: f64) -> Grid2D {
        Grid2D::new(n, n, l, l, -l / 2.0, -l / 2.0).unwrap()
    }

    #[test]
    fn bump_mass_constant() {
        let m = simpson(-1.0, 1.0, 20_000, bump);
        assert!((m - BUMP_MASS).abs() < 1e-12);
    }

    #[test]
    fn smooth_step_against_simpson() {
        for t in [-0.9, -0.3, 0.0, 0.2, 0.77] {
            let oracle = simpson(-1.0, t, 20_000, bump) / BUMP_MASS;
            assert!((smooth_step(t) - oracle).abs() < 1e-11, "t = {t}");
        }
        assert_eq!(smooth_step(-1.5), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
    }

    #[test]
    fn box_delta_value() {
        let g = xgrid(256, 3.2);
        let d = sample_delta_eps(&RegFamilySpec::box_family(), 0.1, &g).unwrap();
        let mass: f64 = d.iter().sum::<f64>() * g.dx();
        assert!((mass - 1.0).abs() < 1e-12);
        for (x, v) in g.xs().into_iter().zip(&d) {
            if x.abs() < 0.1 - 1e-9 {
                assert!((v - 5.0).abs() < 1e-12, "x = {x}, v = {v}");
            } else if x.abs() > 0.1 + 1e-9 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn mollified_delta_peak() {
        let g = Grid2D::new(4096, 8, 4.0, 1.0, -2.0, 0.0).unwrap();
        let eps = 0.05;
        let d = sample_delta_eps(&RegFamilySpec::mollified(0.4), eps, &g).unwrap();
        let i0 = g.nearest_column(0.0).unwrap();
        let oracle = bump(0.0) / simpson(-eps, eps, 20_000, |x| bump(x / eps));
        assert!((d[i0] - oracle).abs() < 1e-8 * oracle);
    }

    #[test]
    fn under_resolved_delta_names_grid() {
        let g = xgrid(64, 4.0);
        match sample_delta_eps(&RegFamilySpec::box_family(), 0.05, &g) {
            Err(Error::UnderResolved { required_n, .. }) => {
                assert!(4.0 / required_n as f64 <= 0.025);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn box_barrier_values() {
        let g = xgrid(256, 16.0);
        let s = SlitConfig::single_slit(1.0).unwrap();
        let h = sample_h_eps(&RegFamilySpec::box_family(), &s, 0.25, &g).unwrap();
        let at = |y: f64| h[g.nearest_row(y).unwrap()];
        assert_eq!(at(0.0), 0.0);
        assert_eq!(at(2.0), 4.0);
    }

    #[test]
    fn mollified_barrier_midpoint() {
        let g = xgrid(512, 16.0);
        let s = SlitConfig::single_slit(1.0).unwrap();
        let spec = RegFamilySpec::mollified(0.4);
        let eps = 0.25;
        let h = sample_h_eps(&spec, &s, eps, &g).unwrap();
        let hm = spec.h_max(eps);
        let at = |y: f64| h[g.nearest_row(y).unwrap()];
        assert!((at(1.0) - hm / 2.0).abs() < 0.01 * hm);
        assert!(at(0.0) <= hm * 1e-6);
        let mx = h.iter().copied().fold(0.0, f64::max);
        assert!((mx - hm).abs() < 1e-10);
    }

    #[test]
    fn potential_tensor_value() {
        let g = xgrid(256, 16.0);
        let s = SlitConfig::single_slit(1.0).unwrap();
        let v = sample_potential(&RegFamilySpec::box_family(), &s, 0.25, &g).unwrap();
        let (i, j) = (g.nearest_column(0.0).unwrap(), g.nearest_row(2.0).unwrap());
        assert!((v.get(i, j) - 8.0).abs() < 1e-12);
        assert!(v.min() >= 0.0);
        assert!((v.max() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn initial_packet_rejects_forward_support() {
        let g = xgrid(128, 16.0);
        let mut spec = RegFamilySpec::mollified(0.4);
        spec.packet_center = -0.5;
        assert!(matches!(
            sample_initial(&spec, 0.25, 1.0, &g),
            Err(Error::Config(_))
        ));
        spec.packet_center = -7.5;
        assert!(matches!(
            sample_initial(&spec, 0.25, 1.0, &g),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn slit_config_validation() {
        assert!(SlitConfig::double_slit(0.5, 1.0).is_err());
        assert!(SlitConfig::new(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(SlitConfig::new(vec![(1.0, 1.0)]).is_err());
        let s = SlitConfig::double_slit(2.0, 0.5).unwrap();
        assert!(s.is_symmetric());
        assert!(s.contains(2.2) && !s.contains(0.0));
        assert!((s.distance_to_boundary(0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn exact_power_law_order() {
        let s: Vec<(f64, f64)> = dyadic_schedule(2, 8)
            .into_iter()
            .map(|e| (e, e.powi(-2)))
            .collect();
        let est = estimate_asymptotic_order(&s).unwrap();
        assert!((est.exponent - 2.0).abs() < 1e-12);
        assert!(est.max_residual < 1e-12);
        let c: Vec<(f64, f64)> = s.iter().map(|&(e, _)| (e, 3.0)).collect();
        assert!(estimate_asymptotic_order(&c).unwrap().exponent.abs() < 1e-12);
        assert!(estimate_asymptotic_order(&s[..3]).is_err());
        let bad = vec![(0.5, 1.0), (0.25, 0.0), (0.125, 1.0), (0.0625, 1.0)];
        assert!(matches!(
            estimate_asymptotic_order(&bad),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn hypothesis_flags() {
        let sched = dyadic_schedule(3, 8);
        assert!(RegFamilySpec::mollified(0.4).satisfies_decay_hypothesis(&sched));
        assert!(!RegFamilySpec::box_family().satisfies_decay_hypothesis(&sched));
    }
}
