//! Closed-form free-space objects: the fundamental solution
//! `E(t,x,y) = exp(i(x²+y²)/4t)/(4πit)`, the point-source wave, the
//! slit-filtered wave `w₁` and the screen intensity `|ℱ(φ₀ b₀)(y/2T)|²`.
//!
//! Fourier transforms follow `ℱf(ξ) = ∫ e^{−ixξ} f(x) dx`, so
//! `ℱ1_{[−d,d]}(ξ) = 2d·sinc(dξ)`.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Grid2D, Representation, C64};
use crate::propagate::TimeSlabSpectral;
use crate::quad::{simpson_weights, GaussLegendre};
use crate::regularize::{bump, RegFamilySpec, RegKind, SlitConfig};

/// Largest integrand phase change allowed between neighbouring samples.
pub const NYQUIST_PHASE: f64 = PI / 4.0;

/// Samples per Nyquist-limited cell used when the count is chosen automatically.
const OVERSAMPLE: usize = 16;
const MIN_SAMPLES: usize = 256;
const MAX_SAMPLES: usize = 1 << 24;

/// `sin z / z` with the removable singularity filled in.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Source at `(−x0, 0)` emitted at `t = 0`, slit plane at `x = 0` reached at
/// `t0`, screen at `x1` observed at `t0 + T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsScenario {
    pub x0: f64,
    pub t0: f64,
    pub big_t: f64,
    pub x1: f64,
    pub slits: SlitConfig,
}

impl PhysicsScenario {
    pub fn new(x0: f64, t0: f64, big_t: f64, x1: f64, slits: SlitConfig) -> Result<Self> {
        let mut problems = Vec::new();
        for (name, v) in [("x0", x0), ("t0", t0), ("T", big_t), ("x1", x1)] {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} = {v} must be positive"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        Ok(Self {
            x0,
            t0,
            big_t,
            x1,
            slits,
        })
    }

    /// `φ₀(s) = exp(i(t0+T)s²/(4 t0 T))`.
    pub fn screen_chirp(&self, s: f64) -> C64 {
        chirp(self.t0 + self.big_t, self.t0, s)
    }

    /// Largest phase of `φ₀` over `S`.
    pub fn chirp_phase_bound(&self) -> f64 {
        let smax = self
            .slits
            .intervals()
            .iter()
            .flat_map(|&(a, b)| [a.abs(), b.abs()])
            .fold(0.0, f64::max);
        (self.t0 + self.big_t) * smax * smax / (4.0 * self.t0 * self.big_t)
    }

    /// Fringe period `2πT/a` for a two-slit pattern with centers `±a`.
    pub fn fringe_spacing(&self) -> Option<f64> {
        match self.slits.intervals() {
            [(a0, b0), (a1, b1)] => {
                let sep = 0.5 * ((a1 + b1) - (a0 + b0));
                Some(4.0 * PI * self.big_t / sep)
            }
            _ => None,
        }
    }
}

/// `φ(t, t0, s) = exp(i t s² / (4 t0 (t − t0)))`.
pub fn chirp(t: f64, t0: f64, s: f64) -> C64 {
    C64::from_polar(1.0, t * s * s / (4.0 * t0 * (t - t0)))
}

/// `E(t, x, y) = exp(i(x²+y²)/4t)/(4πit)`.
pub fn fundamental_solution(t: f64, x: f64, y: f64) -> Result<C64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::Singular(format!(
            "fundamental solution at t = {t} is the initial delta"
        )));
    }
    Ok(C64::from_polar(1.0, (x * x + y * y) / (4.0 * t)) / C64::new(0.0, 4.0 * PI * t))
}

/// `w₀(t, x, y) = E(t, x + x0, y)`.
pub fn w0_point_source(sc: &PhysicsScenario, t: f64, x: f64, y: f64) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::Usage(format!(
            "point-source wave needs t > 0, got {t}"
        )));
    }
    fundamental_solution(t, x + sc.x0, y)
}

fn uniform_spacing(ys: &[f64]) -> Result<f64> {
    if ys.len() < 2 {
        return Ok(0.0);
    }
    let h = (ys[ys.len() - 1] - ys[0]) / (ys.len() - 1) as f64;
    let tol = 1e-9 * h.abs().max(1e-300);
    if !(h > 0.0)
        || ys
            .iter()
            .enumerate()
            .any(|(k, &y)| (y - ys[0] - k as f64 * h).abs() > tol)
    {
        return Err(Error::Usage(
            "y samples must be uniform and increasing".into(),
        ));
    }
    Ok(h)
}

/// `out_k = Σ_j f_j e^{−i (j h)(ω0 + k dω)}` for `k < n_out` by Bluestein's
/// chirp-z algorithm.
fn chirp_z(f: &[C64], h: f64, omega0: f64, d_omega: f64, n_out: usize) -> Vec<C64> {
    let m = f.len();
    let len = (m + n_out - 1).next_power_of_two();
    let beta = h * d_omega;
    let half_sq = |j: usize| -> f64 { 0.5 * beta * (j as f64) * (j as f64) };
    let mut a = vec![C64::new(0.0, 0.0); len];
    for (j, v) in f.iter().enumerate() {
        a[j] = v * C64::from_polar(1.0, -(j as f64) * h * omega0 - half_sq(j));
    }
    let mut b = vec![C64::new(0.0, 0.0); len];
    for (k, bk) in b.iter_mut().enumerate().take(n_out) {
        *bk = C64::from_polar(1.0, half_sq(k));
    }
    for j in 1..m {
        b[len - j] = C64::from_polar(1.0, half_sq(j));
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);
    let scale = 1.0 / len as f64;
    (0..n_out)
        .map(|k| a[k] * scale * C64::from_polar(1.0, -half_sq(k)))
        .collect()
}

/// `∫_a^b e^{−i s ω_k} chirp(s) ds` at `ω_k = ω0 + k dω`, using Simpson's
/// rule with `samples` nodes (odd) or an automatic count.
fn chirped_interval_transform(
    interval: (f64, f64),
    chirp_rate: f64,
    omega0: f64,
    d_omega: f64,
    n_out: usize,
    samples: Option<usize>,
) -> Result<Vec<C64>> {
    let (a, b) = interval;
    let omega_last = omega0 + d_omega * n_out.saturating_sub(1) as f64;
    // Phase of the integrand is chirp_rate·s² − ω s; its s-derivative is
    // extremal at the corners of [a, b] × [ω0, ω_last].
    let rate = [a, b]
        .iter()
        .flat_map(|&s| [omega0, omega_last].map(|w| (2.0 * chirp_rate * s - w).abs()))
        .fold(0.0, f64::max);
    let required = ((b - a) * rate / NYQUIST_PHASE).ceil() as usize + 1;
    let n = match samples {
        Some(n) if n < required => {
            return Err(Error::Resolution {
                what: format!(
                    "integrand phase changes by more than π/4 per sample on ({a}, {b}) with {n} samples"
                ),
                required_samples: required,
            })
        }
        Some(n) => n,
        None => (OVERSAMPLE * required).max(MIN_SAMPLES),
    };
    if n > MAX_SAMPLES {
        return Err(Error::Resolution {
            what: format!(
                "oscillatory integral on ({a}, {b}) needs more than {MAX_SAMPLES} samples"
            ),
            required_samples: n,
        });
    }
    let n = n | 1;
    let h = (b - a) / (n - 1) as f64;
    let w = simpson_weights(n, h);
    let f: Vec<C64> = (0..n)
        .map(|j| {
            let s = a + j as f64 * h;
            C64::from_polar(w[j], chirp_rate * s * s)
        })
        .collect();
    let core = chirp_z(&f, h, omega0, d_omega, n_out);
    Ok(core
        .into_iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(1.0, -a * (omega0 + k as f64 * d_omega)))
        .collect())
}

/// `ℱ(φ(t,t0,·) b₀)(ω_k)` on a uniform frequency set, summed over slits.
fn chirped_slit_transform(
    slits: &SlitConfig,
    chirp_rate: f64,
    omegas: &[f64],
    samples: Option<usize>,
) -> Result<Vec<C64>> {
    let d_omega = uniform_spacing(omegas)?;
    let mut out = vec![C64::new(0.0, 0.0); omegas.len()];
    if omegas.is_empty() {
        return Ok(out);
    }
    for &iv in slits.intervals() {
        let part =
            chirped_interval_transform(iv, chirp_rate, omegas[0], d_omega, omegas.len(), samples)?;
        out.iter_mut().zip(part).for_each(|(o, p)| *o += p);
    }
    Ok(out)
}

/// Slit-filtered wave `w₁(t, x, y)` for `t > t0` at uniformly spaced `ys`.
pub fn w1_closed_form(sc: &PhysicsScenario, t: f64, x: f64, ys: &[f64]) -> Result<Vec<C64>> {
    w1_closed_form_with(sc, t, x, ys, None)
}

/// [`w1_closed_form`] with an explicit per-interval sample count.
pub fn w1_closed_form_with(
    sc: &PhysicsScenario,
    t: f64,
    x: f64,
    ys: &[f64],
    samples: Option<usize>,
) -> Result<Vec<C64>> {
    if !(t > sc.t0) {
        return Err(Error::Usage(format!(
            "w₁ needs t > t0 = {}, got {t}",
            sc.t0
        )));
    }
    let tau = t - sc.t0;
    let rate = t / (4.0 * sc.t0 * tau);
    let omegas: Vec<f64> = ys.iter().map(|y| y / (2.0 * tau)).collect();
    let transform = chirped_slit_transform(&sc.slits, rate, &omegas, samples)?;
    let norm = -1.0 / (16.0 * PI * PI * tau * sc.t0);
    Ok(ys
        .iter()
        .zip(transform)
        .map(|(&y, f)| {
            let phase = 0.25 * ((x * x + y * y) / tau + sc.x0 * sc.x0 / sc.t0);
            C64::from_polar(norm, phase) * f
        })
        .collect())
}

/// `|ℱ(φ₀ b₀)(y/2T)|²`, equal to `16²π⁴T²t0²·|w₁(t0+T, x, y)|²`.
pub fn intensity_analytic(sc: &PhysicsScenario, ys: &[f64]) -> Result<Vec<f64>> {
    let t = sc.t0 + sc.big_t;
    let rate = t / (4.0 * sc.t0 * sc.big_t);
    let omegas: Vec<f64> = ys.iter().map(|y| y / (2.0 * sc.big_t)).collect();
    Ok(chirped_slit_transform(&sc.slits, rate, &omegas, None)?
        .into_iter()
        .map(|v| v.norm_sqr())
        .collect())
}

/// `1_S` with half weight on endpoints that fall on a sample.
pub fn slit_indicator(slits: &SlitConfig, y: f64, tol: f64) -> f64 {
    if slits.contains(y) {
        1.0
    } else if slits.distance_to_boundary(y) <= tol {
        0.5
    } else {
        0.0
    }
}

/// Discrete source realizing `δ_{t0}(t) δ₀(x) b₀(y) w₀(t0, 0, y)` on the
/// lattice `τ_k = k·spacing`, `k = 0..=n`. `t0` must be an interior node and
/// the grid must have a column on `x = 0`.
pub fn tilde_w1_source(
    sc: &PhysicsScenario,
    grid: &Grid2D,
    spacing: f64,
    n: usize,
) -> Result<TimeSlabSpectral> {
    if !(spacing > 0.0) {
        return Err(Error::Usage("time lattice spacing must be positive".into()));
    }
    let k0f = sc.t0 / spacing;
    let k0 = k0f.round() as usize;
    if (k0f - k0 as f64).abs() > 1e-9 || k0 == 0 || k0 >= n {
        return Err(Error::Usage(format!(
            "t0 = {} is not an interior node of the lattice k·{spacing}, k ≤ {n}",
            sc.t0
        )));
    }
    let ix = grid
        .nearest_column(0.0)
        .filter(|&i| grid.x(i).abs() <= 1e-9 * grid.dx())
        .ok_or_else(|| Error::Usage("grid has no column on x = 0".into()))?;
    let mut f = ComplexField2D::zeros(grid, Representation::Position);
    let weight = 1.0 / (spacing * grid.dx());
    let ny = grid.ny();
    let tol = 1e-9 * grid.dy();
    for iy in 0..ny {
        let y = grid.y(iy);
        let b0 = slit_indicator(&sc.slits, y, tol);
        if b0 > 0.0 {
            f.values_mut()[ix * ny + iy] = w0_point_source(sc, sc.t0, 0.0, y)? * (weight * b0);
        }
    }
    let mut slab = TimeSlabSpectral::zeros(grid, 0.0, spacing, n);
    *slab.snapshot_mut(k0) = f.into_spectral();
    Ok(slab)
}

/// Continuous transform `∫∫ e^{−i(xξ+yη)} f dx dy` on the grid lattice,
/// estimated from the unitary DFT of the samples.
pub fn continuous_spectrum(field: &ComplexField2D) -> Vec<C64> {
    let g = field.grid().clone();
    let spec = field.clone().into_spectral();
    let scale = g.cell_area() * (g.len() as f64).sqrt();
    let ny = g.ny();
    spec.values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (xi, eta) = (g.kx()[i / ny], g.ky()[i % ny]);
            v * C64::from_polar(scale, -(g.x_min() * xi + g.y_min() * eta))
        })
        .collect()
}

/// Closed-form spectra of the non-smooth family on a grid lattice, row-major.
#[derive(Debug, Clone)]
pub struct SincTransforms {
    /// `ĝ_ε(ξ, η) = √(2/ε) φ̂_ε(ξ − p0) sinc(η/ε)`.
    pub g_hat: Vec<C64>,
    /// `V̂_ε(ξ, η) = (1/ε) sinc(εξ) (2π δ(η) − 2d sinc(dη))`, with the delta
    /// realized on the `η = 0` row as `2π/dη`.
    pub v_hat: Vec<C64>,
}

/// `φ̂(ξ)` for the L²-normalized bump packet of `spec`.
fn packet_transform(spec: &RegFamilySpec, eps: f64, xi: f64) -> C64 {
    let gl = GaussLegendre::new(32);
    let w = spec.packet_width_x.at(eps);
    let norm = (w * gl.integrate(-1.0, 1.0, |s| bump(s).powi(2))).sqrt();
    let panels = ((w * xi).abs() / 2.0).ceil().max(1.0) as usize;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = -1.0 + 2.0 * p as f64 / panels as f64;
        let hi = lo + 2.0 / panels as f64;
        let re = gl.integrate(lo, hi, |s| bump(s) * (w * s * xi).cos());
        let im = gl.integrate(lo, hi, |s| -bump(s) * (w * s * xi).sin());
        acc += C64::new(re, im);
    }
    acc * C64::from_polar(w / norm, -spec.packet_center * xi)
}

pub fn sinc_transforms(
    spec: &RegFamilySpec,
    eps: f64,
    p0: f64,
    d: f64,
    grid: &Grid2D,
) -> Result<SincTransforms> {
    if spec.kind != RegKind::Box {
        return Err(Error::Usage(
            "closed-form spectra exist for the box family only".into(),
        ));
    }
    if !(eps > 0.0 && d > 0.0) {
        return Err(Error::Usage("ε and d must be positive".into()));
    }
    let d_eta = 2.0 * PI / grid.ly();
    let phi_hat: Vec<C64> = grid
        .kx()
        .iter()
        .map(|&xi| packet_transform(spec, eps, xi - p0))
        .collect();
    let mut g_hat = Vec::with_capacity(grid.len());
    let mut v_hat = Vec::with_capacity(grid.len());
    for (ix, &xi) in grid.kx().iter().enumerate() {
        for &eta in grid.ky() {
            g_hat.push(phi_hat[ix] * (2.0 / eps).sqrt() * sinc(eta / eps));
            let delta = if eta == 0.0 { 2.0 * PI / d_eta } else { 0.0 };
            v_hat.push(C64::new(
                sinc(eps * xi) / eps * (delta - 2.0 * d * sinc(d * eta)),
                0.0,
            ));
        }
    }
    Ok(SincTransforms { g_hat, v_hat })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(slits: SlitConfig) -> PhysicsScenario {
        PhysicsScenario::new(4.0, 1.0, 2.0, 4.0, slits).unwrap()
    }

    #[test]
    fn fundamental_solution_values() {
        let e = fundamental_solution(0.5, 0.0, 0.0).unwrap();
        let expect = C64::new(1.0, 0.0) / C64::new(0.0, 4.0 * PI * 0.5);
        assert!((e - expect).norm() < 1e-15);
        for (x, y) in [(1.0, 2.0), (-3.0, 0.5)] {
            let v = fundamental_solution(-0.7, x, y).unwrap();
            assert!((v.norm() - 1.0 / (4.0 * PI * 0.7)).abs() < 1e-15);
        }
        assert!(matches!(
            fundamental_solution(0.0, 1.0, 1.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn point_source_shift() {
        let sc = scenario(SlitConfig::single_slit(0.5).unwrap());
        let a = w0_point_source(&sc, 1.3, -4.0, 0.0).unwrap();
        assert!((a - fundamental_solution(1.3, 0.0, 0.0).unwrap()).norm() < 1e-15);
        let b = w0_point_source(&sc, 1.0, 0.0, 0.7).unwrap();
        assert!((b - fundamental_solution(1.0, 4.0, 0.7).unwrap()).norm() < 1e-15);
        assert!(w0_point_source(&sc, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn closed_slits_give_zero() {
        let sc = scenario(SlitConfig::closed());
        let ys: Vec<f64> = (0..11).map(|k| -5.0 + k as f64).collect();
        assert!(w1_closed_form(&sc, 2.0, 3.0, &ys)
            .unwrap()
            .iter()
            .all(|v| v.norm() == 0.0));
        assert!(intensity_analytic(&sc, &ys)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn chirp_z_matches_direct_sum() {
        let f: Vec<C64> = (0..37)
            .map(|j| C64::new((j as f64).sin(), 0.3 * j as f64))
            .collect();
        let (h, w0, dw) = (0.07, -3.0, 0.11);
        let fast = chirp_z(&f, h, w0, dw, 50);
        for (k, v) in fast.iter().enumerate() {
            let w = w0 + k as f64 * dw;
            let direct: C64 = f
                .iter()
                .enumerate()
                .map(|(j, fj)| fj * C64::from_polar(1.0, -(j as f64) * h * w))
                .sum();
            assert!((v - direct).norm() < 1e-11 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn explicit_undersampling_is_reported() {
        let sc = scenario(SlitConfig::single_slit(2.0).unwrap());
        let ys: Vec<f64> = (0..64).map(|k| -30.0 + k as f64).collect();
        match w1_closed_form_with(&sc, 3.0, 4.0, &ys, Some(5)) {
            Err(Error::Resolution {
                required_samples, ..
            }) => assert!(required_samples > 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sinc_removable_point() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-16);
        assert!(sinc(PI).abs() < 1e-16);
    }

    #[test]
    fn fringe_spacing_value() {
        let sc = scenario(SlitConfig::double_slit(2.5, 0.5).unwrap());
        assert!((sc.fringe_spacing().unwrap() - 2.0 * PI * 2.0 / 2.5).abs() < 1e-12);
        assert!(scenario(SlitConfig::single_slit(1.0).unwrap())
            .fringe_spacing()
            .is_none());
    }
}
