//! Time evolution for `∂_t u = iΔu − iVu`: exact free flight, split-step
//! evolution with a real potential, and the Duhamel operator
//! `ℱ(LF)(t, θ) = ∫₀ᵗ e^{−i(t−τ)|θ|²} F̂(τ, θ) dτ`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Direction, Grid2D, RealField2D, Representation, C64};

const NAN_CHECK_EVERY: usize = 100;

/// Largest admitted `dt·max V`.
pub const MAX_PHASE_PER_STEP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `e^{−iVdt/2} e^{iΔdt} e^{−iVdt/2}`.
    Strang,
    /// `e^{−iVdt} e^{iΔdt}`.
    Lie,
}

/// Real damping mask `exp(−strength·dt·r)` with a `sin²` ramp `r` over the
/// outer `width_cells` of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    pub strength: f64,
    pub width_cells: usize,
}

#[derive(Debug, Clone)]
pub struct EvolutionPlan {
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub potential: Option<RealField2D>,
    pub boundary_monitor_width: usize,
    pub absorb: Option<Absorber>,
    /// Record a spectral snapshot every `k` steps (including step 0).
    pub record_stride: Option<usize>,
    /// Steps between energy / boundary-mass trace samples; 0 disables traces.
    pub trace_stride: usize,
}

impl EvolutionPlan {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            scheme: Scheme::Strang,
            potential: None,
            boundary_monitor_width: 4,
            absorb: None,
            record_stride: None,
            trace_stride: 0,
        }
    }

    pub fn with_potential(mut self, v: RealField2D) -> Self {
        self.potential = Some(v);
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_absorber(mut self, absorb: Absorber) -> Self {
        self.absorb = Some(absorb);
        self
    }

    pub fn recording(mut self, stride: usize) -> Self {
        self.record_stride = Some(stride);
        self
    }

    pub fn with_traces(mut self, stride: usize) -> Self {
        self.trace_stride = stride;
        self
    }

    pub fn with_monitor_width(mut self, width: usize) -> Self {
        self.boundary_monitor_width = width;
        self
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn is_unitary(&self) -> bool {
        self.absorb.is_none()
    }

    fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Usage(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if let Some(v) = &self.potential {
            if v.grid() != grid {
                return Err(Error::Usage("potential sampled on a different grid".into()));
            }
            let vmax = v.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if self.dt * vmax >= MAX_PHASE_PER_STEP {
                return Err(Error::Usage(format!(
                    "dt·max|V| = {:.3} exceeds {MAX_PHASE_PER_STEP}; reduce dt below {:.3e}",
                    self.dt * vmax,
                    MAX_PHASE_PER_STEP / vmax
                )));
            }
        }
        if let Some(k) = self.record_stride {
            if k == 0 || !self.n_steps.is_multiple_of(k) {
                return Err(Error::Usage(format!(
                    "record stride {k} must divide n_steps = {}",
                    self.n_steps
                )));
            }
        }
        if self.boundary_monitor_width == 0 {
            return Err(Error::Usage(
                "boundary monitor width must be at least 1".into(),
            ));
        }
        if let Some(a) = self.absorb {
            if !(a.strength >= 0.0) || a.width_cells == 0 {
                return Err(Error::Usage(
                    "absorber needs strength ≥ 0 and width ≥ 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Spectral snapshots on a uniform time lattice `t_k = start + k·spacing`.
#[derive(Debug, Clone)]
pub struct TimeSlabSpectral {
    start: f64,
    spacing: f64,
    snapshots: Vec<ComplexField2D>,
}

impl TimeSlabSpectral {
    pub fn new(start: f64, spacing: f64, snapshots: Vec<ComplexField2D>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Usage("time slab needs at least one snapshot".into()));
        }
        if snapshots.len() > 1 && !(spacing > 0.0) {
            return Err(Error::Usage("time slab spacing must be positive".into()));
        }
        let grid = snapshots[0].grid().clone();
        if snapshots.iter().any(|s| s.grid() != &grid) {
            return Err(Error::Usage(
                "time slab snapshots on different grids".into(),
            ));
        }
        let snapshots = snapshots.into_iter().map(|s| s.into_spectral()).collect();
        Ok(Self {
            start,
            spacing,
            snapshots,
        })
    }

    /// Slab of zeros on `n + 1` nodes.
    pub fn zeros(grid: &Grid2D, start: f64, spacing: f64, n: usize) -> Self {
        Self {
            start,
            spacing,
            snapshots: vec![ComplexField2D::zeros(grid, Representation::Spectral); n + 1],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.spacing
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn snapshots(&self) -> &[ComplexField2D] {
        &self.snapshots
    }

    pub fn snapshot(&self, k: usize) -> &ComplexField2D {
        &self.snapshots[k]
    }

    pub fn snapshot_mut(&mut self, k: usize) -> &mut ComplexField2D {
        &mut self.snapshots[k]
    }

    pub fn last(&self) -> &ComplexField2D {
        self.snapshots.last().expect("non-empty")
    }

    pub fn same_lattice(&self, other: &TimeSlabSpectral) -> bool {
        let tol = 1e-9 * self.spacing.abs().max(1e-300);
        self.len() == other.len()
            && (self.start - other.start).abs() <= tol
            && (self.len() == 1 || (self.spacing - other.spacing).abs() <= tol)
            && self.grid() == other.grid()
    }

    fn check_lattice(&self, other: &TimeSlabSpectral) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::Usage("time slabs live on different lattices".into()))
        }
    }

    /// Pointwise `V·F(τ)` at every node.
    pub fn multiply_potential(&self, v: &RealField2D) -> Result<TimeSlabSpectral> {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| Ok(s.mul_real(v)?.into_spectral()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            start: self.start,
            spacing: self.spacing,
            snapshots,
        })
    }

    /// `self + a·other` node by node.
    pub fn axpy(&self, a: C64, other: &TimeSlabSpectral) -> Result<TimeSlabSpectral> {
        self.check_lattice(other)?;
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(s, o)| {
                let mut s = s.clone();
                s.axpy(a, o)?;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            start: self.start,
            spacing: self.spacing,
            snapshots,
        })
    }
}

/// Diagnostics gathered while stepping.
#[derive(Debug, Clone, Default)]
pub struct RunDiagnostics {
    pub dt: f64,
    pub n_steps: usize,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// `(t, ⟨u, Hu⟩)` samples.
    pub energy_trace: Vec<(f64, f64)>,
    /// `(t, boundary mass fraction)` samples.
    pub boundary_trace: Vec<(f64, f64)>,
    pub unitary: bool,
}

impl RunDiagnostics {
    pub fn relative_norm_drift(&self) -> f64 {
        (self.final_norm - self.initial_norm).abs() / self.initial_norm
    }

    pub fn relative_energy_drift(&self) -> f64 {
        match (self.energy_trace.first(), self.energy_trace.last()) {
            (Some(a), Some(_)) => {
                self.energy_trace
                    .iter()
                    .map(|e| (e.1 - a.1).abs())
                    .fold(0.0, f64::max)
                    / a.1.abs().max(f64::MIN_POSITIVE)
            }
            _ => 0.0,
        }
    }

    pub fn max_boundary_mass(&self) -> f64 {
        self.boundary_trace.iter().map(|b| b.1).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionOutput {
    pub field: ComplexField2D,
    pub slab: Option<TimeSlabSpectral>,
    pub diagnostics: RunDiagnostics,
}

/// `e^{−iτ|θ|²}` on the spectral lattice.
fn kinetic_phase(grid: &Grid2D, tau: f64) -> Vec<C64> {
    grid.k_squared()
        .into_par_iter()
        .map(|k2| C64::from_polar(1.0, -tau * k2))
        .collect()
}

fn mul_assign(a: &mut [C64], b: &[C64]) {
    a.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(x, y)| *x *= y);
}

fn mul_assign_real(a: &mut [C64], b: &[f64]) {
    a.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(x, y)| *x *= y);
}

/// Exact free flight `e^{itΔ}`, returned in the input representation.
pub fn free_propagate(field: &ComplexField2D, t: f64) -> ComplexField2D {
    let repr = field.representation();
    let mut spec = field.clone().into_spectral();
    let k = kinetic_phase(field.grid(), t);
    mul_assign(spec.values_mut(), &k);
    spec.into_representation(repr)
}

/// Fraction of `|u|²` in the outer frame of `width_cells` cells.
pub fn boundary_mass(field: &ComplexField2D, width_cells: usize) -> f64 {
    let f = field.clone().into_position();
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let w = width_cells.max(1);
    let mut frame = 0.0;
    let mut total = 0.0;
    for ix in 0..nx {
        let edge_x = ix < w || ix + w >= nx;
        for iy in 0..ny {
            let m = f.values()[ix * ny + iy].norm_sqr();
            total += m;
            if edge_x || iy < w || iy + w >= ny {
                frame += m;
            }
        }
    }
    if total > 0.0 {
        frame / total
    } else {
        0.0
    }
}

/// Mass of `field` inside the rectangle `[x_lo, x_hi] × [y_lo, y_hi]`.
pub fn window_mass(field: &ComplexField2D, x: (f64, f64), y: (f64, f64)) -> f64 {
    let f = field.clone().into_position();
    let g = f.grid();
    let ny = g.ny();
    let mut sum = 0.0;
    for ix in 0..g.nx() {
        let xv = g.x(ix);
        if xv < x.0 || xv > x.1 {
            continue;
        }
        for iy in 0..ny {
            let yv = g.y(iy);
            if yv >= y.0 && yv <= y.1 {
                sum += f.values()[ix * ny + iy].norm_sqr();
            }
        }
    }
    sum * g.cell_area()
}

/// `⟨u, (−Δ + V) u⟩` with the kinetic part taken spectrally.
pub fn energy(field: &ComplexField2D, potential: Option<&RealField2D>) -> f64 {
    let g = field.grid();
    let spec = field.clone().into_spectral();
    let kin: f64 = spec
        .values()
        .iter()
        .zip(g.k_squared())
        .map(|(v, k2)| k2 * v.norm_sqr())
        .sum();
    let pot: f64 = match potential {
        Some(v) => {
            let pos = field.clone().into_position();
            pos.values()
                .iter()
                .zip(v.values())
                .map(|(u, v)| v * u.norm_sqr())
                .sum()
        }
        None => 0.0,
    };
    (kin + pot) * g.cell_area()
}

fn absorber_mask(grid: &Grid2D, a: Absorber, dt: f64) -> Vec<f64> {
    let ramp = |i: usize, n: usize| -> f64 {
        let from_edge = i.min(n - 1 - i);
        if from_edge >= a.width_cells {
            0.0
        } else {
            let s = (a.width_cells - from_edge) as f64 / a.width_cells as f64;
            (0.5 * std::f64::consts::PI * s).sin().powi(2)
        }
    };
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = Vec::with_capacity(grid.len());
    for ix in 0..nx {
        let rx = ramp(ix, nx);
        for iy in 0..ny {
            let r = rx.max(ramp(iy, ny));
            out.push((-a.strength * dt * r).exp());
        }
    }
    out
}

fn has_non_finite(v: &[C64]) -> bool {
    v.par_iter()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
}

/// Evolves `g` under `plan`, optionally recording a spectral time slab.
pub fn evolve(g: &ComplexField2D, plan: &EvolutionPlan) -> Result<EvolutionOutput> {
    let grid = g.grid().clone();
    plan.validate(&grid)?;
    let dt = plan.dt;
    let kin = kinetic_phase(&grid, dt);
    let (half, full): (Option<Vec<C64>>, Option<Vec<C64>>) = match &plan.potential {
        Some(v) => (
            Some(
                v.values()
                    .iter()
                    .map(|&x| C64::from_polar(1.0, -0.5 * dt * x))
                    .collect(),
            ),
            Some(
                v.values()
                    .iter()
                    .map(|&x| C64::from_polar(1.0, -dt * x))
                    .collect(),
            ),
        ),
        None => (None, None),
    };
    let mask = plan.absorb.map(|a| absorber_mask(&grid, a, dt));

    let mut u = g.clone().into_position();
    let initial_norm = u.l2_norm();
    let mut diag = RunDiagnostics {
        dt,
        n_steps: plan.n_steps,
        initial_norm,
        unitary: plan.is_unitary(),
        ..Default::default()
    };
    let mut snaps = Vec::new();
    let record = |u: &ComplexField2D, snaps: &mut Vec<ComplexField2D>| {
        snaps.push(u.clone().into_spectral());
    };
    let trace = |step: usize, u: &ComplexField2D, diag: &mut RunDiagnostics| {
        let t = step as f64 * dt;
        diag.energy_trace
            .push((t, energy(u, plan.potential.as_ref())));
        diag.boundary_trace
            .push((t, boundary_mass(u, plan.boundary_monitor_width)));
    };
    if plan.record_stride.is_some() {
        record(&u, &mut snaps);
    }
    if plan.trace_stride > 0 {
        trace(0, &u, &mut diag);
    }

    for step in 1..=plan.n_steps {
        let vals = u.values_mut();
        match plan.scheme {
            Scheme::Strang => {
                if let Some(h) = &half {
                    mul_assign(vals, h);
                }
                grid.fft2(vals, Direction::Forward);
                mul_assign(vals, &kin);
                grid.fft2(vals, Direction::Inverse);
                if let Some(h) = &half {
                    mul_assign(vals, h);
                }
            }
            Scheme::Lie => {
                grid.fft2(vals, Direction::Forward);
                mul_assign(vals, &kin);
                grid.fft2(vals, Direction::Inverse);
                if let Some(f) = &full {
                    mul_assign(vals, f);
                }
            }
        }
        if let Some(m) = &mask {
            mul_assign_real(vals, m);
        }
        if (step % NAN_CHECK_EVERY == 0 || step == plan.n_steps) && has_non_finite(vals) {
            return Err(Error::Numerical {
                step,
                reason: "non-finite field values".into(),
            });
        }
        if let Some(k) = plan.record_stride {
            if step % k == 0 {
                record(&u, &mut snaps);
            }
        }
        if plan.trace_stride > 0 && (step % plan.trace_stride == 0 || step == plan.n_steps) {
            trace(step, &u, &mut diag);
        }
    }
    diag.final_norm = u.l2_norm();
    let slab = match plan.record_stride {
        Some(k) => Some(TimeSlabSpectral::new(0.0, k as f64 * dt, snaps)?),
        None => None,
    };
    Ok(EvolutionOutput {
        field: u,
        slab,
        diagnostics: diag,
    })
}

/// Free evolution of `g` sampled on `n + 1` nodes spaced `spacing` apart.
pub fn free_slab(g: &ComplexField2D, spacing: f64, n: usize) -> TimeSlabSpectral {
    let grid = g.grid();
    let step = kinetic_phase(grid, spacing);
    let mut cur = g.clone().into_spectral();
    let mut snaps = Vec::with_capacity(n + 1);
    snaps.push(cur.clone());
    for _ in 0..n {
        mul_assign(cur.values_mut(), &step);
        snaps.push(cur.clone());
    }
    TimeSlabSpectral {
        start: 0.0,
        spacing,
        snapshots: snaps,
    }
}

fn check_final_time(f: &TimeSlabSpectral, t: f64) -> Result<()> {
    if f.start().abs() > 1e-12 * f.spacing().max(1.0) {
        return Err(Error::Usage(format!(
            "Duhamel integral needs a slab starting at τ = 0, got {}",
            f.start()
        )));
    }
    let tol = 1e-9 * f.spacing().max(1e-12);
    if (f.final_time() - t).abs() > tol {
        return Err(Error::Usage(format!(
            "requested t = {t} but the slab ends at {}",
            f.final_time()
        )));
    }
    Ok(())
}

/// Trapezoid weight of node `k` on `n + 1` nodes.
fn trapezoid_weight(k: usize, n: usize, h: f64) -> f64 {
    if n == 0 {
        h
    } else if k == 0 || k == n {
        0.5 * h
    } else {
        h
    }
}

/// `L F` at the slab's final time `t`, spectral representation.
///
/// A single-node slab is treated as one quadrature node carrying weight
/// `spacing`.
pub fn duhamel_l(f: &TimeSlabSpectral, t: f64) -> Result<ComplexField2D> {
    check_final_time(f, t)?;
    let grid = f.grid();
    let n = f.len() - 1;
    let h = f.spacing();
    let step = kinetic_phase(grid, h);
    let mut acc = ComplexField2D::zeros(grid, Representation::Spectral);
    for (k, snap) in f.snapshots().iter().enumerate() {
        if k > 0 {
            mul_assign(acc.values_mut(), &step);
        }
        acc.axpy(C64::new(trapezoid_weight(k, n, h), 0.0), snap)?;
    }
    Ok(acc)
}

/// `L F` on every node of the slab: `A_0 = 0` and
/// `A_k = e^{−iΔ|θ|²}A_{k−1} + (Δ/2)(e^{−iΔ|θ|²}F_{k−1} + F_k)`.
pub fn duhamel_l_slab(f: &TimeSlabSpectral) -> Result<TimeSlabSpectral> {
    if f.start().abs() > 1e-12 * f.spacing().max(1.0) {
        return Err(Error::Usage(
            "Duhamel integral needs a slab starting at τ = 0".into(),
        ));
    }
    let grid = f.grid();
    let h = f.spacing();
    let step = kinetic_phase(grid, h);
    let half = Complex64::new(0.5 * h, 0.0);
    let mut out = Vec::with_capacity(f.len());
    let mut acc = ComplexField2D::zeros(grid, Representation::Spectral);
    out.push(acc.clone());
    for k in 1..f.len() {
        acc.axpy(half, f.snapshot(k - 1))?;
        mul_assign(acc.values_mut(), &step);
        acc.axpy(half, f.snapshot(k))?;
        out.push(acc.clone());
    }
    Ok(TimeSlabSpectral {
        start: f.start(),
        spacing: h,
        snapshots: out,
    })
}

/// Solution of `∂_t w = iΔw − iF`, `w(0) = f`, at time `t`:
/// `ŵ(t) = e^{−it|θ|²} f̂ − i (LF)(t)`. Spectral representation.
pub fn solve_with_source(
    f: &ComplexField2D,
    source: &TimeSlabSpectral,
    t: f64,
) -> Result<ComplexField2D> {
    if f.grid() != source.grid() {
        return Err(Error::Usage(
            "initial data and source on different grids".into(),
        ));
    }
    let lf = duhamel_l(source, t)?;
    let mut w = free_propagate(f, t).into_spectral();
    w.axpy(C64::new(0.0, -1.0), &lf)?;
    Ok(w)
}

/// [`solve_with_source`] evaluated on every node of the source lattice.
pub fn solve_with_source_slab(
    f: &ComplexField2D,
    source: &TimeSlabSpectral,
) -> Result<TimeSlabSpectral> {
    if f.grid() != source.grid() {
        return Err(Error::Usage(
            "initial data and source on different grids".into(),
        ));
    }
    let lf = duhamel_l_slab(source)?;
    let free = free_slab(f, source.spacing(), source.len() - 1);
    free.axpy(C64::new(0.0, -1.0), &lf)
}
