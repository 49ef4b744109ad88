//! Periodic-grid scalar and vector fields with spectral derivatives,
//! convolutions and the norms used throughout the schemes.
//!
//! The spatial domain is a periodic cube of side `box_length` sampled on
//! `points_per_axis` cells per axis. Sobolev norms are defined through the
//! Fourier multiplier (1 + |k|²)^s; the classical derivative-sum form is kept
//! only as a cross-check in the test suite.

use crate::error::{Error, Result};
use crate::fft;
use ndarray::{Array3, Zip};
use num_complex::Complex64;

/// Uniform periodic cube. `dim` is fixed to 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    points_per_axis: usize,
    box_length: f64,
}

impl Grid {
    /// `points_per_axis` must be a power of two, at least 8.
    pub fn new(points_per_axis: usize, box_length: f64) -> Result<Grid> {
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box_length {box_length} must be positive and finite"
            )));
        }
        Ok(Grid {
            points_per_axis,
            box_length,
        })
    }

    pub const fn dim(&self) -> usize {
        3
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// spacing · points_per_axis = box_length by construction.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    pub fn cell_count(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    /// Quadrature weight of one cell, spacing³.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Unsigned coordinate of cell index `i`, in [0, box_length).
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed coordinate of cell index `i`, in [-box_length/2, box_length/2).
    pub fn signed_coord(&self, i: usize) -> f64 {
        let n = self.points_per_axis;
        if i < n / 2 {
            i as f64 * self.spacing()
        } else {
            (i as f64 - n as f64) * self.spacing()
        }
    }

    /// Integer frequency of spectral index `i`, in [-n/2, n/2).
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Physical wavenumber 2π·freq/box_length of spectral index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.freq(i) as f64 / self.box_length
    }

    /// Grid with the same spacing and `factor` times as many points per axis.
    pub fn padded(&self, factor: usize) -> Result<Grid> {
        Grid::new(
            self.points_per_axis * factor,
            self.box_length * factor as f64,
        )
    }
}

/// Norm selector: L^p norms by quadrature, H^s by Fourier multiplier,
/// H^{2,∞} as the max sup-norm over derivatives of order ≤ 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    L1,
    L2,
    LInf,
    H(u32),
    H2Inf,
}

/// Samples of a scalar function on a [`Grid`].
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Array3<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> ScalarField {
        let n = grid.points_per_axis();
        ScalarField {
            grid,
            values: Array3::zeros((n, n, n)),
        }
    }

    pub fn constant(grid: Grid, value: f64) -> ScalarField {
        let n = grid.points_per_axis();
        ScalarField {
            grid,
            values: Array3::from_elem((n, n, n), value),
        }
    }

    /// Sample `f(x, y, z)` at unsigned cell coordinates in [0, L)³.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> ScalarField {
        let n = grid.points_per_axis();
        let values = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            f(grid.coord(i), grid.coord(j), grid.coord(k))
        });
        ScalarField { grid, values }
    }

    /// Sample `f(x, y, z)` at signed cell coordinates in [-L/2, L/2)³.
    pub fn from_fn_signed(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> ScalarField {
        let n = grid.points_per_axis();
        let values = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            f(
                grid.signed_coord(i),
                grid.signed_coord(j),
                grid.signed_coord(k),
            )
        });
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Array3<f64>) -> Result<ScalarField> {
        let n = grid.points_per_axis();
        if values.shape() != [n, n, n] {
            return Err(Error::GridMismatch(format!(
                "value cube {:?} does not match grid {n}³",
                values.shape()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.sum() / self.values.len() as f64
    }

    pub(crate) fn spectrum(&self) -> Array3<Complex64> {
        fft::forward(&self.values)
    }

    pub(crate) fn from_spectrum(grid: Grid, spec: Array3<Complex64>) -> ScalarField {
        ScalarField {
            grid,
            values: fft::inverse_real(spec),
        }
    }

    fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Spectral partial derivative along `axis`; exact for band-limited data.
    /// The Nyquist mode is zeroed to keep derivatives of real fields real.
    pub fn derivative(&self, axis: usize) -> Result<ScalarField> {
        if axis >= self.grid.dim() {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.grid.dim(),
            });
        }
        let grid = self.grid;
        let n = grid.points_per_axis();
        let mut spec = self.spectrum();
        Zip::indexed(&mut spec).for_each(|(i, j, k), v| {
            let idx = [i, j, k][axis];
            let mult = if idx == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavenumber(idx))
            };
            *v *= mult;
        });
        Ok(ScalarField::from_spectrum(grid, spec))
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> ScalarField {
        let grid = self.grid;
        let mut spec = self.spectrum();
        Zip::indexed(&mut spec).for_each(|(i, j, k), v| {
            let k2 = grid.wavenumber(i).powi(2)
                + grid.wavenumber(j).powi(2)
                + grid.wavenumber(k).powi(2);
            *v *= -k2;
        });
        ScalarField::from_spectrum(grid, spec)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// H^s norm through the multiplier (1 + |k|²)^s on the spectrum.
    pub fn h_norm(&self, s: u32) -> f64 {
        let grid = self.grid;
        let spec = self.spectrum();
        let mut acc = 0.0;
        Zip::indexed(&spec).for_each(|(i, j, k), v| {
            let k2 = grid.wavenumber(i).powi(2)
                + grid.wavenumber(j).powi(2)
                + grid.wavenumber(k).powi(2);
            acc += (1.0 + k2).powi(s as i32) * v.norm_sqr();
        });
        // h³/n³ · Σ matches the quadrature L² when s = 0 (Parseval).
        (acc * self.grid.cell_volume() / self.grid.cell_count() as f64).sqrt()
    }

    pub fn h2_norm(&self) -> f64 {
        self.h_norm(2)
    }

    /// Max over all derivatives of order ≤ 2 of the sup-norm. One forward
    /// transform shared across the nine derivative multipliers.
    pub fn h2inf_norm(&self) -> f64 {
        let grid = self.grid;
        let n = grid.points_per_axis();
        let spec = self.spectrum();
        let ik: Vec<Complex64> = (0..n)
            .map(|i| {
                if i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.wavenumber(i))
                }
            })
            .collect();
        let mut worst = self.sup_norm();
        let mut apply = |f: &dyn Fn(usize, usize, usize) -> Complex64| {
            let mut d = spec.clone();
            Zip::indexed(&mut d).for_each(|(i, j, k), v| *v *= f(i, j, k));
            worst = worst.max(ScalarField::from_spectrum(grid, d).sup_norm());
        };
        for a in 0..3 {
            apply(&|i, j, k| ik[[i, j, k][a]]);
        }
        for a in 0..3 {
            for b in a..3 {
                apply(&|i, j, k| ik[[i, j, k][a]] * ik[[i, j, k][b]]);
            }
        }
        worst
    }

    pub fn norm(&self, space: Space) -> Result<f64> {
        match space {
            Space::L1 => Ok(self.l1_norm()),
            Space::L2 => Ok(self.l2_norm()),
            Space::LInf => Ok(self.sup_norm()),
            Space::H(s) => {
                if s > 4 {
                    return Err(Error::UnsupportedSobolevOrder(s));
                }
                Ok(self.h_norm(s))
            }
            Space::H2Inf => Ok(self.h2inf_norm()),
        }
    }

    /// Discrete convolution scaled by spacing³, approximating ∫ f(x−y)g(y) dy.
    ///
    /// `padded = false`: circular convolution on the periodic box.
    /// `padded = true`: both factors are re-centered at the origin (signed
    /// coordinates), embedded into a ×2 grid and convolved there, which
    /// emulates free-space convolution for data decaying away from the
    /// origin; the result is read back at the signed positions.
    pub fn convolve(&self, g: &ScalarField, padded: bool) -> Result<ScalarField> {
        self.check_same_grid(g)?;
        if !padded {
            let h3 = self.grid.cell_volume();
            let mut spec = self.spectrum();
            let gspec = g.spectrum();
            Zip::from(&mut spec).and(&gspec).for_each(|a, b| *a *= b * h3);
            return Ok(ScalarField::from_spectrum(self.grid, spec));
        }
        let big = self.grid.padded(2)?;
        let fa = embed_signed(self, big);
        let fb = embed_signed(g, big);
        let conv = fa.convolve(&fb, false)?;
        Ok(extract_signed(&conv, self.grid))
    }

    /// Fraction of the L² mass within `width` cells of any box face; the
    /// decay diagnostics of the free-space kernel path run on this.
    pub fn boundary_shell_l2_fraction(&self, width: usize) -> f64 {
        let n = self.grid.points_per_axis();
        let mut shell = 0.0;
        let mut total = 0.0;
        Zip::indexed(&self.values).for_each(|(i, j, k), v| {
            let v2 = v * v;
            total += v2;
            let near = [i, j, k]
                .iter()
                .any(|&t| t < width || t >= n.saturating_sub(width));
            if near {
                shell += v2;
            }
        });
        if total == 0.0 {
            0.0
        } else {
            (shell / total).sqrt()
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: &self.values * a,
        }
    }

    /// self + a·other, grids must agree.
    pub fn axpy(&self, a: f64, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid, "grid mismatch in field arithmetic");
        ScalarField {
            grid: self.grid,
            values: &self.values + &(&other.values * a),
        }
    }
}

/// Re-center a field at the origin (signed coordinates) inside a larger grid.
fn embed_signed(f: &ScalarField, big: Grid) -> ScalarField {
    let n = f.grid().points_per_axis();
    let m = big.points_per_axis();
    let mut out = ScalarField::zeros(big);
    let remap = |i: usize| -> usize {
        if i < n / 2 {
            i
        } else {
            i + m - n
        }
    };
    Zip::indexed(f.values()).for_each(|(i, j, k), &v| {
        out.values_mut()[[remap(i), remap(j), remap(k)]] = v;
    });
    out
}

/// Read back the signed positions of `small` from a larger field.
fn extract_signed(f: &ScalarField, small: Grid) -> ScalarField {
    let n = small.points_per_axis();
    let m = f.grid().points_per_axis();
    let remap = |i: usize| -> usize {
        if i < n / 2 {
            i
        } else {
            i + m - n
        }
    };
    let mut out = ScalarField::zeros(small);
    Zip::indexed(out.values_mut()).for_each(|(i, j, k), v| {
        *v = f.values()[[remap(i), remap(j), remap(k)]];
    });
    out
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                assert_eq!(self.grid, rhs.grid, "grid mismatch in field arithmetic");
                ScalarField {
                    grid: self.grid,
                    values: &self.values $op &rhs.values,
                }
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

/// Three scalar components on one grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid) -> VectorField {
        VectorField {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn new(components: [ScalarField; 3]) -> Result<VectorField> {
        let g = components[0].grid();
        for c in &components[1..] {
            if c.grid() != g {
                return Err(Error::GridMismatch(
                    "vector components on different grids".into(),
                ));
            }
        }
        Ok(VectorField { components })
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.components[i]
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            components: [
                f(&self.components[0]),
                f(&self.components[1]),
                f(&self.components[2]),
            ],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    /// Σ_j ∂v_j/∂x_j, spectrally.
    pub fn divergence(&self) -> ScalarField {
        let mut out = self.components[0].derivative(0).expect("axis in range");
        for j in 1..3 {
            out = &out + &self.components[j].derivative(j).expect("axis in range");
        }
        out
    }

    /// All nine partial derivatives; entry [i][j] is ∂v_i/∂x_j. One forward
    /// transform per component.
    pub fn jacobian(&self) -> [[ScalarField; 3]; 3] {
        let grid = self.grid();
        let n = grid.points_per_axis();
        let ik: Vec<Complex64> = (0..n)
            .map(|i| {
                if i == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.wavenumber(i))
                }
            })
            .collect();
        self.components.each_ref().map(|c| {
            let spec = c.spectrum();
            [0usize, 1, 2].map(|axis| {
                let mut d = spec.clone();
                Zip::indexed(&mut d).for_each(|(i, j, k), v| *v *= ik[[i, j, k][axis]]);
                ScalarField::from_spectrum(grid, d)
            })
        })
    }

    /// Spectral curl.
    pub fn curl(&self) -> VectorField {
        let d = |i: usize, j: usize| self.components[i].derivative(j).expect("axis in range");
        VectorField {
            components: [
                &d(2, 1) - &d(1, 2),
                &d(0, 2) - &d(2, 0),
                &d(1, 0) - &d(0, 1),
            ],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().map(|c| c.sup_norm()).fold(0.0, f64::max)
    }

    /// Max over components of the component H² norm.
    pub fn h2_norm_max(&self) -> f64 {
        self.components.iter().map(|c| c.h2_norm()).fold(0.0, f64::max)
    }

    pub fn h2inf_norm_max(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.h2inf_norm())
            .fold(0.0, f64::max)
    }

    /// √(Σ_i |v_i|²_{L²}).
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        self.map(|c| c.scaled(a))
    }
}

impl std::ops::Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField {
            components: [
                &self.components[0] + &rhs.components[0],
                &self.components[1] + &rhs.components[1],
                &self.components[2] + &rhs.components[2],
            ],
        }
    }
}

impl std::ops::Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField {
            components: [
                &self.components[0] - &rhs.components[0],
                &self.components[1] - &rhs.components[1],
                &self.components[2] - &rhs.components[2],
            ],
        }
    }
}
