//! Periodic computational grids, unitary 2D transforms and the quadrature
//! observables (norms, inner products, momenta) built on top of them.
//!
//! Samples are stored row-major with `x` as the slow index:
//! `values[ix * ny + iy]`, so a fixed-`x` column (a screen or the slit plane)
//! is a contiguous slice.
//!
//! The discrete transform is unitary, `F_k = N^{-1/2} Σ_j f_j e^{-2πi jk/N}`
//! per axis. Both representations therefore share the quadrature weight
//! `dx·dy` and Parseval holds without extra factors.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Rows handed to one rayon task by the row-wise transforms.
const ROW_BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Position,
    Spectral,
}

impl Representation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Representation::Position => 0,
            Representation::Spectral => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Representation::Position),
            1 => Some(Representation::Spectral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

struct Plans {
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
    y_fwd: Arc<dyn Fft<f64>>,
    y_inv: Arc<dyn Fft<f64>>,
}

/// Periodic box `[x_min, x_min + lx) × [y_min, y_min + ly)` with `nx × ny`
/// samples and the matching spectral lattice.
#[derive(Clone)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x_min: f64,
    y_min: f64,
    kx: Arc<[f64]>,
    ky: Arc<[f64]>,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("x_min", &self.x_min)
            .field("y_min", &self.y_min)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.lx.to_bits() == other.lx.to_bits()
            && self.ly.to_bits() == other.ly.to_bits()
            && self.x_min.to_bits() == other.x_min.to_bits()
            && self.y_min.to_bits() == other.y_min.to_bits()
    }
}

/// Signed wavenumbers in standard FFT order: `2π/L · (0, 1, …, N/2−1, −N/2, …, −1)`.
fn lattice(n: usize, l: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / l;
    (0..n)
        .map(|j| {
            let m = if j < n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            };
            base * m as f64
        })
        .collect()
}

impl Grid2D {
    /// Builds a grid; `nx`, `ny` must be powers of two and at least 8.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, x_min: f64, y_min: f64) -> Result<Self> {
        let mut problems = Vec::new();
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || !n.is_power_of_two() {
                problems.push(format!("{name} = {n} must be a power of two >= 8"));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                problems.push(format!("{name} = {l} must be positive"));
            }
        }
        if !(x_min.is_finite() && y_min.is_finite()) {
            problems.push("box origin must be finite".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            x_fwd: planner.plan_fft_forward(nx),
            x_inv: planner.plan_fft_inverse(nx),
            y_fwd: planner.plan_fft_forward(ny),
            y_inv: planner.plan_fft_inverse(ny),
        };
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            x_min,
            y_min,
            kx: lattice(nx, lx).into(),
            ky: lattice(ny, ly).into(),
            plans: Arc::new(plans),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    /// Spectral wavenumbers ξ along x, FFT order.
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    /// Spectral wavenumbers η along y, FFT order.
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Wavenumbers used for odd (first-order) derivatives: the unpaired
    /// Nyquist mode is dropped so that real fields have real derivatives.
    pub(crate) fn derivative_k(&self, axis: Axis) -> Vec<f64> {
        let (k, n) = match axis {
            Axis::X => (&self.kx, self.nx),
            Axis::Y => (&self.ky, self.ny),
        };
        let mut out = k.to_vec();
        out[n / 2] = 0.0;
        out
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// Column whose abscissa is closest to `x` (periodic images ignored).
    pub fn nearest_column(&self, x: f64) -> Option<usize> {
        let j = ((x - self.x_min) / self.dx()).round();
        if j < 0.0 || j >= self.nx as f64 {
            None
        } else {
            Some(j as usize)
        }
    }

    pub fn nearest_row(&self, y: f64) -> Option<usize> {
        let j = ((y - self.y_min) / self.dy()).round();
        if j < 0.0 || j >= self.ny as f64 {
            None
        } else {
            Some(j as usize)
        }
    }

    /// `|θ|²` on the spectral lattice, row-major.
    pub fn k_squared(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &kx in self.kx.iter() {
            for &ky in self.ky.iter() {
                out.push(kx * kx + ky * ky);
            }
        }
        out
    }

    fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self != other {
            Err(Error::Usage(format!(
                "grid mismatch: {self:?} vs {other:?}"
            )))
        } else {
            Ok(())
        }
    }

    /// In-place unitary 2D transform of row-major samples.
    pub(crate) fn fft2(&self, data: &mut [C64], direction: Direction) {
        assert_eq!(data.len(), self.len());
        let (fx, fy) = match direction {
            Direction::Forward => (&self.plans.x_fwd, &self.plans.y_fwd),
            Direction::Inverse => (&self.plans.x_inv, &self.plans.y_inv),
        };
        let (nx, ny) = (self.nx, self.ny);
        rows_fft(data, ny, fy);
        let mut t = vec![ZERO; data.len()];
        transpose(data, &mut t, nx, ny);
        rows_fft(&mut t, nx, fx);
        transpose(&t, data, ny, nx);
        let scale = 1.0 / (self.len() as f64).sqrt();
        data.par_chunks_mut(ny * ROW_BLOCK)
            .for_each(|c| c.iter_mut().for_each(|v| *v *= scale));
    }
}

fn rows_fft(data: &mut [C64], row_len: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(row_len * ROW_BLOCK).for_each_init(
        || vec![ZERO; scratch_len],
        |scratch, chunk| fft.process_with_scratch(chunk, scratch),
    );
}

/// `dst[c * rows + r] = src[r * cols + c]` for a `rows × cols` source.
fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, v) in out.iter_mut().enumerate() {
            *v = src[r * cols + c];
        }
    });
}

/// Real-valued samples on a grid (potentials, masks, test functions).
#[derive(Clone, Debug)]
pub struct RealField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl RealField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid2D, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx() {
            let x = grid.x(ix);
            for iy in 0..grid.ny() {
                values.push(f(x, grid.y(iy)));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Tensor product `a(x_j)·b(y_k)` of per-axis samples.
    pub fn tensor(grid: &Grid2D, along_x: &[f64], along_y: &[f64]) -> Result<Self> {
        if along_x.len() != grid.nx() || along_y.len() != grid.ny() {
            return Err(Error::Usage("factor lengths do not match grid".into()));
        }
        let mut values = Vec::with_capacity(grid.len());
        for &a in along_x {
            values.extend(along_y.iter().map(|&b| a * b));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `Σ v·dx·dy`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn to_complex(&self) -> ComplexField2D {
        ComplexField2D {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            repr: Representation::Position,
        }
    }
}

/// Complex samples of a wave function in position or spectral representation.
#[derive(Clone, Debug)]
pub struct ComplexField2D {
    grid: Grid2D,
    values: Vec<C64>,
    repr: Representation,
}

impl ComplexField2D {
    pub fn new(grid: Grid2D, values: Vec<C64>, repr: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values, repr })
    }

    pub fn zeros(grid: &Grid2D, repr: Representation) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![ZERO; grid.len()],
            repr,
        }
    }

    /// Position-representation samples of `f(x, y)`.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx() {
            let x = grid.x(ix);
            for iy in 0..grid.ny() {
                values.push(f(x, grid.y(iy)));
            }
        }
        Self {
            grid: grid.clone(),
            values,
            repr: Representation::Position,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn get(&self, ix: usize, iy: usize) -> C64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Unitary transform; `Forward` requires position samples, `Inverse`
    /// spectral ones.
    pub fn transform(mut self, direction: Direction) -> Result<Self> {
        let expected = match direction {
            Direction::Forward => Representation::Position,
            Direction::Inverse => Representation::Spectral,
        };
        if self.repr != expected {
            return Err(Error::Usage(format!(
                "{direction:?} transform needs a {expected:?} field, got {:?}",
                self.repr
            )));
        }
        self.grid.fft2(&mut self.values, direction);
        self.repr = match direction {
            Direction::Forward => Representation::Spectral,
            Direction::Inverse => Representation::Position,
        };
        Ok(self)
    }

    pub fn into_spectral(self) -> Self {
        match self.repr {
            Representation::Spectral => self,
            Representation::Position => self.transform(Direction::Forward).expect("checked"),
        }
    }

    pub fn into_position(self) -> Self {
        match self.repr {
            Representation::Position => self,
            Representation::Spectral => self.transform(Direction::Inverse).expect("checked"),
        }
    }

    pub fn into_representation(self, repr: Representation) -> Self {
        match repr {
            Representation::Position => self.into_position(),
            Representation::Spectral => self.into_spectral(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Discrete L² norm; identical in both representations up to roundoff.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Spectral H¹ norm with weights `1 + |θ|²`.
    pub fn h1_norm(&self) -> f64 {
        let spec = self.clone().into_spectral();
        let kx = self.grid.derivative_k(Axis::X);
        let ky = self.grid.derivative_k(Axis::Y);
        let ny = self.grid.ny();
        let sum: f64 = spec
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (a, b) = (kx[i / ny], ky[i % ny]);
                (1.0 + a * a + b * b) * v.norm_sqr()
            })
            .sum();
        (sum * self.grid.cell_area()).sqrt()
    }

    /// `⟨f, g⟩ = Σ conj(f)·g·dx·dy`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexField2D) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let sum: C64 = if self.repr == other.repr {
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.conj() * b)
                .sum()
        } else {
            let b = other.clone().into_representation(self.repr);
            self.values
                .iter()
                .zip(&b.values)
                .map(|(a, b)| a.conj() * b)
                .sum()
        };
        Ok(sum * self.grid.cell_area())
    }

    /// Spectral first derivative along `axis`, returned in position
    /// representation.
    pub fn derivative(&self, axis: Axis) -> ComplexField2D {
        let mut spec = self.clone().into_spectral();
        let k = self.grid.derivative_k(axis);
        let ny = self.grid.ny();
        spec.values.iter_mut().enumerate().for_each(|(i, v)| {
            let kk = match axis {
                Axis::X => k[i / ny],
                Axis::Y => k[i % ny],
            };
            *v *= C64::new(0.0, kk);
        });
        spec.into_position()
    }

    /// `Re⟨f, −i∂_axis f⟩` evaluated spectrally. The field must be a
    /// position-space sample normalized to one.
    pub fn momentum_expectation(&self, axis: Axis) -> Result<f64> {
        if self.repr != Representation::Position {
            return Err(Error::Usage(
                "momentum expectation needs a position-representation field".into(),
            ));
        }
        let norm = self.l2_norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Usage(format!(
                "momentum expectation needs a normalized field, got norm {norm}"
            )));
        }
        let spec = self.clone().into_spectral();
        let k = self.grid.derivative_k(axis);
        let ny = self.grid.ny();
        let sum: f64 = spec
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let kk = match axis {
                    Axis::X => k[i / ny],
                    Axis::Y => k[i % ny],
                };
                kk * v.norm_sqr()
            })
            .sum();
        Ok(sum * self.grid.cell_area())
    }

    /// H¹ norm restricted to the grid columns inside `region`, with the
    /// gradient taken spectrally on the whole box first.
    pub fn strip_h1_norm(&self, region: &StripRegion) -> Result<f64> {
        let cols = region.columns(&self.grid)?;
        let f = self.clone().into_position();
        let fx = self.derivative(Axis::X);
        let fy = self.derivative(Axis::Y);
        let ny = self.grid.ny();
        let mut sum = 0.0;
        for ix in cols {
            let r = ix * ny..(ix + 1) * ny;
            sum += f.values[r.clone()]
                .iter()
                .zip(&fx.values[r.clone()])
                .zip(&fy.values[r])
                .map(|((a, b), c)| a.norm_sqr() + b.norm_sqr() + c.norm_sqr())
                .sum::<f64>();
        }
        Ok((sum * self.grid.cell_area()).sqrt())
    }

    /// Samples of the column `ix` (all `y`), position representation only.
    pub fn column(&self, ix: usize) -> Result<&[C64]> {
        if self.repr != Representation::Position {
            return Err(Error::Usage(
                "column extraction needs position samples".into(),
            ));
        }
        let ny = self.grid.ny();
        Ok(&self.values[ix * ny..(ix + 1) * ny])
    }

    pub fn scale(&mut self, s: C64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a·other`, matching representations.
    pub fn axpy(&mut self, a: C64, other: &ComplexField2D) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.repr != other.repr {
            return Err(Error::Usage("representation mismatch in axpy".into()));
        }
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(s, o)| *s += a * o);
        Ok(())
    }

    pub fn sub(&self, other: &ComplexField2D) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn add(&self, other: &ComplexField2D) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    /// Pointwise product with a real field (position representation).
    pub fn mul_real(&self, v: &RealField2D) -> Result<Self> {
        self.grid.check_same(&v.grid)?;
        let mut out = self.clone().into_position();
        out.values
            .iter_mut()
            .zip(&v.values)
            .for_each(|(a, b)| *a *= *b);
        Ok(out)
    }

    /// Renormalizes to unit L² norm; fails on a zero field.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.l2_norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Usage("cannot normalize a zero field".into()));
        }
        self.scale(C64::new(1.0 / n, 0.0));
        Ok(self)
    }
}

/// Vertical strip `[x_lo, x_hi] × ℝ`, truncated to the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripRegion {
    x_lo: f64,
    x_hi: f64,
}

impl StripRegion {
    pub fn new(x_lo: f64, x_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi) {
            return Err(Error::Usage(format!(
                "strip needs x_lo < x_hi, got [{x_lo}, {x_hi}]"
            )));
        }
        Ok(Self { x_lo, x_hi })
    }

    /// Symmetric strip `[−c, c] × ℝ`.
    pub fn centered(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    /// Grid columns whose abscissa lies in the strip.
    pub fn columns(&self, grid: &Grid2D) -> Result<Vec<usize>> {
        let tol = 1e-9 * grid.dx();
        let cols: Vec<usize> = (0..grid.nx())
            .filter(|&ix| {
                let x = grid.x(ix);
                x >= self.x_lo - tol && x <= self.x_hi + tol
            })
            .collect();
        if cols.is_empty() {
            return Err(Error::Usage(format!(
                "strip [{}, {}] contains no grid column",
                self.x_lo, self.x_hi
            )));
        }
        Ok(cols)
    }
}
