//! Iterated approximation `w_{n+1} = w_0 − iL(V w_n)`, whose iterates are
//! the partial sums `Σ_{k≤n} (−iLV)^k w_0`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, RealField2D, C64};
use crate::propagate::{
    duhamel_l, duhamel_l_slab, free_propagate, free_slab, EvolutionPlan, TimeSlabSpectral,
};

/// Consecutive residual increases that mark the run as divergent.
pub const DIVERGENCE_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornRecord {
    pub n: usize,
    pub residual: f64,
    pub wallclock_s: f64,
}

#[derive(Debug, Clone)]
pub struct BornState {
    n: usize,
    initial: ComplexField2D,
    w0: TimeSlabSpectral,
    wn: TimeSlabSpectral,
    reference: Option<ComplexField2D>,
    history: Vec<BornRecord>,
}

impl BornState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w0(&self) -> &TimeSlabSpectral {
        &self.w0
    }

    pub fn current(&self) -> &TimeSlabSpectral {
        &self.wn
    }

    pub fn history(&self) -> &[BornRecord] {
        &self.history
    }

    pub fn residual_history(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.residual).collect()
    }

    /// Attaches the reference solution at the final time used for residuals.
    pub fn with_reference(mut self, u_final: ComplexField2D) -> Result<Self> {
        if u_final.grid() != self.initial.grid() {
            return Err(Error::Usage("reference on a different grid".into()));
        }
        self.reference = Some(u_final.into_spectral());
        Ok(self)
    }

    /// True once the residual has grown on `DIVERGENCE_RUN` consecutive
    /// iterations.
    pub fn outside_contraction_regime(&self) -> bool {
        let r = self.residual_history();
        r.windows(DIVERGENCE_RUN + 1)
            .any(|w| w.windows(2).all(|p| p[1] > p[0]))
    }
}

/// Starts the iteration from the free evolution of `g` on the plan's
/// recording lattice (stride 1 if none is set).
pub fn born_init(g: &ComplexField2D, plan: &EvolutionPlan) -> Result<BornState> {
    if plan.potential.is_some() {
        return Err(Error::Usage(
            "the base slab is the free evolution; drop the potential".into(),
        ));
    }
    if !(plan.dt > 0.0) {
        return Err(Error::Usage("dt must be positive".into()));
    }
    let stride = plan.record_stride.unwrap_or(1);
    if stride == 0 || !plan.n_steps.is_multiple_of(stride) {
        return Err(Error::Usage(format!(
            "stride {stride} must divide n_steps = {}",
            plan.n_steps
        )));
    }
    let w0 = free_slab(g, stride as f64 * plan.dt, plan.n_steps / stride);
    Ok(BornState {
        n: 0,
        initial: g.clone(),
        wn: w0.clone(),
        w0,
        reference: None,
        history: Vec::new(),
    })
}

/// `−iL(V·F)` on the full lattice.
pub fn minus_i_lv(slab: &TimeSlabSpectral, v: &RealField2D) -> Result<TimeSlabSpectral> {
    let src = slab.multiply_potential(v)?;
    let mut out = duhamel_l_slab(&src)?;
    let mi = C64::new(0.0, -1.0);
    for k in 0..out.len() {
        out.snapshot_mut(k).scale(mi);
    }
    Ok(out)
}

/// One iteration of the scheme; appends a residual when a reference is set.
pub fn born_step(state: BornState, v: &RealField2D) -> Result<BornState> {
    if v.grid() != state.initial.grid() {
        return Err(Error::Usage("potential on a different grid".into()));
    }
    let start = Instant::now();
    let correction = minus_i_lv(&state.wn, v)?;
    let next = state.w0.axpy(C64::new(1.0, 0.0), &correction)?;
    let BornState {
        n,
        initial,
        w0,
        reference,
        mut history,
        ..
    } = state;
    if let Some(r) = &reference {
        let residual = next.last().sub(r)?.l2_norm() / r.l2_norm();
        history.push(BornRecord {
            n: n + 1,
            residual,
            wallclock_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(BornState {
        n: n + 1,
        initial,
        w0,
        wn: next,
        reference,
        history,
    })
}

/// Relative defect `‖u − (w_0 − iL(V u))‖/‖u‖` at the slab's final time,
/// where `w_0` is the free evolution of the slab's first node.
pub fn born_fixed_point_check(u_slab: &TimeSlabSpectral, v: &RealField2D) -> Result<f64> {
    if v.grid() != u_slab.grid() {
        return Err(Error::Usage("potential on a different grid".into()));
    }
    let t = u_slab.final_time();
    let src = u_slab.multiply_potential(v)?;
    let lvu = duhamel_l(&src, t)?;
    let mut rhs = free_propagate(u_slab.snapshot(0), t - u_slab.start()).into_spectral();
    rhs.axpy(C64::new(0.0, -1.0), &lvu)?;
    let u = u_slab.last();
    Ok(u.sub(&rhs)?.l2_norm() / u.l2_norm())
}
