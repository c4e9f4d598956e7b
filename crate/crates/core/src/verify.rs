//! Quantitative checks: the local decay of `V_ε u_ε − β_ε` in the sense of
//! distributions, the approximation of the screen pattern by the
//! slit-filtered free wave, and small helpers for profile comparison.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Grid2D, RealField2D, StripRegion, C64};
use crate::propagate::{evolve, free_propagate, Absorber, EvolutionPlan, RunDiagnostics};
use crate::reference::{fundamental_solution, intensity_analytic, PhysicsScenario};
use crate::regularize::{
    bump, bump_derivative_sup, log_log_fit, sample_h_eps, sample_initial, sample_potential,
    RegFamilySpec, SlitConfig,
};

/// Tensor bump `φ(x,y) = ψ((x−cx)/wx)·ψ((y−cy)/wy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub cx: f64,
    pub cy: f64,
    pub wx: f64,
    pub wy: f64,
}

impl TestFunction {
    pub fn new(cx: f64, cy: f64, wx: f64, wy: f64) -> Result<Self> {
        if !(wx > 0.0 && wy > 0.0) {
            return Err(Error::Usage("test function widths must be positive".into()));
        }
        Ok(Self { cx, cy, wx, wy })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        bump((x - self.cx) / self.wx) * bump((y - self.cy) / self.wy)
    }

    /// Half side `l_φ` of a centered square containing the support.
    pub fn l_phi(&self) -> f64 {
        (self.cx.abs() + self.wx).max(self.cy.abs() + self.wy)
    }

    pub fn sup(&self) -> f64 {
        bump(0.0) * bump(0.0)
    }

    pub fn sup_dx(&self) -> f64 {
        bump_derivative_sup() / self.wx * bump(0.0)
    }

    pub fn sup_dy(&self) -> f64 {
        bump_derivative_sup() / self.wy * bump(0.0)
    }

    /// Constant `C₁` of the strip bound
    /// `|⟨V_ε u − β_ε, φ⟩| ≤ C₁ √c_ε H_ε ‖u‖_{H¹(M_ε)}`.
    pub fn strip_bound_constant(&self) -> f64 {
        (12.0 * self.l_phi()).sqrt() * self.sup().max(self.sup_dx()).max(self.sup_dy())
    }

    /// Samples on the grid; the support must stay strictly inside the box.
    pub fn sample(&self, grid: &Grid2D) -> Result<RealField2D> {
        let inside_x = self.cx - self.wx > grid.x_min()
            && self.cx + self.wx < grid.x_min() + grid.lx() - grid.dx();
        let inside_y = self.cy - self.wy > grid.y_min()
            && self.cy + self.wy < grid.y_min() + grid.ly() - grid.dy();
        if !(inside_x && inside_y) {
            return Err(Error::Usage(format!(
                "test function {self:?} leaks out of the box"
            )));
        }
        Ok(RealField2D::from_fn(grid, |x, y| self.eval(x, y)))
    }
}

/// `Σ f·φ·dx·dy`.
pub fn pair_field(field: &ComplexField2D, phi: &TestFunction) -> Result<C64> {
    let p = phi.sample(field.grid())?;
    let f = field.clone().into_position();
    let s: C64 = f.values().iter().zip(p.values()).map(|(a, b)| a * b).sum();
    Ok(s * field.grid().cell_area())
}

/// `∫ h(y) u(0, y) φ(0, y) dy` by the rectangle rule on the grid rows.
pub fn beta_pairing(grid: &Grid2D, u_slice: &[C64], h: &[f64], phi: &TestFunction) -> Result<C64> {
    if u_slice.len() != grid.ny() || h.len() != grid.ny() {
        return Err(Error::Usage("slice lengths must equal ny".into()));
    }
    let s: C64 = grid
        .ys()
        .into_iter()
        .zip(u_slice)
        .zip(h)
        .map(|((y, u), hv)| u * (hv * phi.eval(0.0, y)))
        .sum();
    Ok(s * grid.dy())
}

fn zero_column(grid: &Grid2D) -> Result<usize> {
    grid.nearest_column(0.0)
        .ok_or_else(|| Error::Usage("the slit plane x = 0 is outside the box".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectRecord {
    pub eps: f64,
    /// `|⟨V_ε u, φ⟩ − ⟨β_ε, φ⟩|`.
    pub defect: f64,
    /// `C₁ √c_ε H_ε ‖u‖_{H¹(M_ε)}`.
    pub bound: f64,
    pub strip_h1: f64,
    pub predictor: f64,
}

/// Distributional defect of `V_ε u − β_ε` against `phi` for a given `u`.
pub fn betaprop_defect(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    eps: f64,
    u: &ComplexField2D,
    phi: &TestFunction,
) -> Result<DefectRecord> {
    let grid = u.grid();
    let v = sample_potential(spec, slits, eps, grid)?;
    let h = sample_h_eps(spec, slits, eps, grid)?;
    let pos = u.clone().into_position();
    let pair = pair_field(&pos.mul_real(&v)?, phi)?;
    let col = pos.column(zero_column(grid)?)?;
    let beta = beta_pairing(grid, col, &h, phi)?;
    let c = spec.c_eps(eps);
    let strip_h1 = pos.strip_h1_norm(&StripRegion::centered(c)?)?;
    let predictor = spec.predictor(eps);
    Ok(DefectRecord {
        eps,
        defect: (pair - beta).norm(),
        bound: phi.strip_bound_constant() * predictor * strip_h1,
        strip_h1,
        predictor,
    })
}

/// Parameters of the evolutions behind a decay study.
#[derive(Debug, Clone)]
pub struct DecaySetup {
    pub grid: Grid2D,
    pub spec: RegFamilySpec,
    pub slits: SlitConfig,
    pub p0: f64,
    pub t_end: f64,
    /// Upper bound on `dt·max V`.
    pub phase_budget: f64,
    /// Upper bound on `dt / c_ε²`.
    pub dt_per_c2: f64,
    pub dt_max: f64,
}

impl DecaySetup {
    /// Time step used at `eps`: `min(budget/max V, k·c_ε², dt_max)`, shrunk
    /// so that it divides `t_end`.
    pub fn time_step(&self, eps: f64, vmax: f64) -> (f64, usize) {
        let c = self.spec.c_eps(eps);
        let mut dt = self.dt_max.min(self.dt_per_c2 * c * c);
        if vmax > 0.0 {
            dt = dt.min(self.phase_budget / vmax);
        }
        let n = (self.t_end / dt).ceil().max(1.0) as usize;
        (self.t_end / n as f64, n)
    }
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub schedule: Vec<f64>,
    pub predictors: Vec<f64>,
    pub test_functions: Vec<TestFunction>,
    /// `records[j][k]`: test function `j`, schedule entry `k`.
    pub records: Vec<Vec<DefectRecord>>,
    pub slopes: Vec<f64>,
    pub steps: Vec<usize>,
    pub dts: Vec<f64>,
    pub hypothesis_satisfied: bool,
}

impl DecayReport {
    /// Largest `defect / bound` over all test functions and ε.
    pub fn max_bound_ratio(&self) -> f64 {
        self.records
            .iter()
            .flatten()
            .map(|r| r.defect / r.bound)
            .fold(0.0, f64::max)
    }

    /// Largest `defect / (√c_ε H_ε ‖u‖_{H¹(M_ε)})`, the constant absorbed
    /// into the strip bound.
    pub fn max_absorbed_constant(&self) -> f64 {
        self.records
            .iter()
            .flatten()
            .map(|r| r.defect / (r.predictor * r.strip_h1))
            .fold(0.0, f64::max)
    }
}

/// Least-squares slope of `log defect` against `log predictor`.
pub fn fit_decay_slope(predictors: &[f64], defects: &[f64]) -> Result<f64> {
    if predictors.len() != defects.len() || predictors.len() < 2 {
        return Err(Error::Usage(
            "decay fit needs matching series of length ≥ 2".into(),
        ));
    }
    if defects
        .iter()
        .chain(predictors)
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(Error::Usage(
            "degenerate decay fit: non-positive values".into(),
        ));
    }
    let spread = predictors.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        / predictors.iter().copied().fold(f64::INFINITY, f64::min);
    if spread <= 1.0 + 1e-12 {
        return Err(Error::Usage(
            "degenerate decay fit: constant predictor".into(),
        ));
    }
    Ok(log_log_fit(predictors, defects).0)
}

/// Evolves the regularized problem at every ε of `schedule` and evaluates
/// the defect against each test function.
pub fn decay_study(
    setup: &DecaySetup,
    schedule: &[f64],
    phis: &[TestFunction],
) -> Result<DecayReport> {
    if schedule.len() < 5 {
        return Err(Error::Usage(format!(
            "decay study needs at least 5 ε values, got {}",
            schedule.len()
        )));
    }
    if phis.is_empty() {
        return Err(Error::Usage(
            "decay study needs at least one test function".into(),
        ));
    }
    setup.spec.check_schedule(schedule)?;
    let per_eps: Vec<Result<(Vec<DefectRecord>, f64, usize)>> = schedule
        .par_iter()
        .map(|&eps| {
            let v = sample_potential(&setup.spec, &setup.slits, eps, &setup.grid)?;
            let g = sample_initial(&setup.spec, eps, setup.p0, &setup.grid)?;
            let (dt, n) = setup.time_step(eps, v.max());
            let out = evolve(&g, &EvolutionPlan::new(dt, n).with_potential(v))?;
            let recs = phis
                .iter()
                .map(|phi| betaprop_defect(&setup.spec, &setup.slits, eps, &out.field, phi))
                .collect::<Result<Vec<_>>>()?;
            Ok((recs, dt, n))
        })
        .collect();
    let mut by_eps = Vec::with_capacity(schedule.len());
    let mut dts = Vec::new();
    let mut steps = Vec::new();
    for r in per_eps {
        let (recs, dt, n) = r?;
        by_eps.push(recs);
        dts.push(dt);
        steps.push(n);
    }
    let predictors: Vec<f64> = schedule.iter().map(|&e| setup.spec.predictor(e)).collect();
    let records: Vec<Vec<DefectRecord>> = (0..phis.len())
        .map(|j| by_eps.iter().map(|row| row[j]).collect())
        .collect();
    let slopes = records
        .iter()
        .map(|rs| {
            let d: Vec<f64> = rs.iter().map(|r| r.defect).collect();
            fit_decay_slope(&predictors, &d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayReport {
        schedule: schedule.to_vec(),
        predictors,
        test_functions: phis.to_vec(),
        records,
        slopes,
        steps,
        dts,
        hypothesis_satisfied: setup.spec.satisfies_decay_hypothesis(schedule),
    })
}

/// Cosine similarity of the mean-removed profiles; `None` when either is
/// constant.
pub fn normalized_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (p, q) = (x - ma, y - mb);
        ab += p * q;
        aa += p * p;
        bb += q * q;
    }
    if aa == 0.0 || bb == 0.0 {
        None
    } else {
        Some(ab / (aa * bb).sqrt())
    }
}

/// L² distance between the profiles after scaling each to unit L² norm.
pub fn normalized_profile_distance(a: &[f64], b: &[f64], dy: f64) -> f64 {
    let na = (a.iter().map(|v| v * v).sum::<f64>() * dy).sqrt();
    let nb = (b.iter().map(|v| v * v).sum::<f64>() * dy).sqrt();
    let (sa, sb) = (
        if na > 0.0 { 1.0 / na } else { 0.0 },
        if nb > 0.0 { 1.0 / nb } else { 0.0 },
    );
    (a.iter()
        .zip(b)
        .map(|(x, y)| (x * sa - y * sb).powi(2))
        .sum::<f64>()
        * dy)
        .sqrt()
}

/// `|u(x1, y)|²` on the nearest grid column.
pub fn intensity_simulated(u: &ComplexField2D, x1: f64) -> Result<Vec<f64>> {
    let g = u.grid();
    let lo = g.x_min() + 4.0 * g.dx();
    let hi = g.x_min() + g.lx() - 4.0 * g.dx();
    if !(x1 >= lo && x1 <= hi) {
        return Err(Error::Usage(format!(
            "screen x1 = {x1} must lie in [{lo}, {hi}] (4-cell margin)"
        )));
    }
    let ix = g.nearest_column(x1).expect("inside box");
    let pos = u.clone().into_position();
    Ok(pos.column(ix)?.iter().map(|v| v.norm_sqr()).collect())
}

/// Abscissae of the strict local minima of `profile` whose value is below
/// `fraction` of the profile maximum.
pub fn local_minima(ys: &[f64], profile: &[f64], fraction: f64) -> Vec<f64> {
    let max = profile.iter().copied().fold(0.0, f64::max);
    (1..profile.len().saturating_sub(1))
        .filter(|&i| {
            profile[i] < profile[i - 1]
                && profile[i] <= profile[i + 1]
                && profile[i] < fraction * max
        })
        .map(|i| ys[i])
        .collect()
}

/// Mean spacing of the `per_side` minima on each side of `center`.
pub fn central_minima_spacing(minima: &[f64], center: f64, per_side: usize) -> Option<f64> {
    let mut left: Vec<f64> = minima.iter().copied().filter(|&y| y < center).collect();
    let mut right: Vec<f64> = minima.iter().copied().filter(|&y| y >= center).collect();
    left.sort_by(|a, b| b.total_cmp(a));
    right.sort_by(f64::total_cmp);
    if left.len() < per_side || right.len() < per_side || per_side == 0 {
        return None;
    }
    let lo = left[per_side - 1];
    let hi = right[per_side - 1];
    Some((hi - lo) / (2 * per_side - 1) as f64)
}

/// Setup of a full diffraction run: a packet launched from `x = −x0`
/// towards the barrier at `x = 0`, observed at `x1` at time `t0 + T`.
#[derive(Debug, Clone)]
pub struct DiffractionSetup {
    pub grid: Grid2D,
    pub spec: RegFamilySpec,
    pub eps: f64,
    pub p0: f64,
    pub scenario: PhysicsScenario,
    pub dt: f64,
    pub absorber: Option<Absorber>,
}

#[derive(Debug, Clone)]
pub struct ComparisonRecord {
    pub ys: Vec<f64>,
    pub simulated: Vec<f64>,
    pub analytic: Vec<f64>,
    /// `|w_ε(t1, x1, ·)|²` with `w_ε = u_ε − u_{0,ε}`.
    pub scattered: Vec<f64>,
    /// `|E(T, x1, ·) * (u_{0,ε}(t0, 0, ·) 1_S)|²`.
    pub filtered: Vec<f64>,
    /// Correlation of `simulated` with `analytic`.
    pub correlation: Option<f64>,
    pub distance: f64,
    /// Correlation of `scattered` with `filtered`.
    pub chain_correlation: Option<f64>,
    pub simulated_fringe_spacing: Option<f64>,
    pub predicted_fringe_spacing: Option<f64>,
    pub diagnostics: RunDiagnostics,
    pub steps: usize,
}

/// `(E(T, x1, ·) * f)(y)` for samples `f` on the grid rows.
fn transverse_free_convolution(grid: &Grid2D, t: f64, x1: f64, f: &[C64]) -> Result<Vec<C64>> {
    let ys = grid.ys();
    let dy = grid.dy();
    let kernel = |d: f64| fundamental_solution(t, x1, d);
    ys.par_iter()
        .map(|&y| {
            let mut acc = C64::new(0.0, 0.0);
            for (s, v) in ys.iter().zip(f) {
                if v.norm_sqr() > 0.0 {
                    acc += kernel(y - s)? * v;
                }
            }
            Ok(acc * dy)
        })
        .collect()
}

/// Runs the barrier and free evolutions and compares screen profiles with
/// the closed-form intensity and the slit-filtered approximation.
pub fn approx_chain_compare(setup: &DiffractionSetup) -> Result<ComparisonRecord> {
    let sc = &setup.scenario;
    let grid = &setup.grid;
    let t1 = sc.t0 + sc.big_t;
    let steps = (t1 / setup.dt).round() as usize;
    if ((steps as f64) * setup.dt - t1).abs() > 1e-9 * t1 {
        return Err(Error::Usage(format!(
            "dt = {} does not divide t0 + T = {t1}",
            setup.dt
        )));
    }
    let g = sample_initial(&setup.spec, setup.eps, setup.p0, grid)?;
    let v = sample_potential(&setup.spec, &sc.slits, setup.eps, grid)?;
    let mut plan = EvolutionPlan::new(setup.dt, steps)
        .with_potential(v)
        .with_traces(steps.div_ceil(20).max(1));
    if let Some(a) = setup.absorber {
        plan = plan.with_absorber(a);
    }
    let out = evolve(&g, &plan)?;
    let u0_t1 = free_propagate(&g, t1);
    let u0_t0 = free_propagate(&g, sc.t0).into_position();

    let ys = grid.ys();
    let simulated = intensity_simulated(&out.field, sc.x1)?;
    let analytic = intensity_analytic(sc, &ys)?;
    let scattered = intensity_simulated(&out.field.sub(&u0_t1.into_position())?, sc.x1)?;
    let col = u0_t0.column(zero_column(grid)?)?;
    let masked: Vec<C64> = ys
        .iter()
        .zip(col)
        .map(|(&y, &v)| {
            if sc.slits.contains(y) {
                v
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let filtered: Vec<f64> = transverse_free_convolution(grid, sc.big_t, sc.x1, &masked)?
        .into_iter()
        .map(|v| v.norm_sqr())
        .collect();

    let predicted = sc.fringe_spacing();
    let simulated_spacing = predicted.and_then(|_| {
        let minima = local_minima(&ys, &simulated, 0.5);
        central_minima_spacing(&minima, 0.0, 2)
    });
    Ok(ComparisonRecord {
        correlation: normalized_correlation(&simulated, &analytic),
        distance: normalized_profile_distance(&simulated, &analytic, grid.dy()),
        chain_correlation: normalized_correlation(&scattered, &filtered),
        simulated_fringe_spacing: simulated_spacing,
        predicted_fringe_spacing: predicted,
        ys,
        simulated,
        analytic,
        scattered,
        filtered,
        diagnostics: out.diagnostics,
        steps,
    })
}

/// `max |b_ε − 1_S|` away from `∂S` along a schedule.
pub fn b_convergence(
    spec: &RegFamilySpec,
    slits: &SlitConfig,
    schedule: &[f64],
    grid: &Grid2D,
    margin: f64,
) -> Result<Vec<f64>> {
    schedule
        .iter()
        .map(|&e| crate::regularize::b_eps_sup_error(spec, slits, e, grid, margin))
        .collect()
}
