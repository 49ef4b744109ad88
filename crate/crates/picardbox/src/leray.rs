//! Pressure elimination: the nonlinear source Σ_{j,k} (∂v_j/∂x_k)(∂v_k/∂x_j),
//! and the forcing -∇p obtained from it either by convolution with the split
//! Poisson-kernel gradient (free-space path, for decaying data) or by the
//! periodic spectral projector (trusted oracle path).
//!
//! Sign convention: both pressure-gradient paths return -∇p, the forcing as
//! it appears on the right side of the momentum equation, where p solves
//! -Δp = source.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::kernels::{build_kernel_split, CutoffSpec, KernelSplit};
use ndarray::{Array3, Zip};
use num_complex::Complex64;

/// Σ_{j,k} (∂f_j/∂x_k)(∂g_k/∂x_j), spectrally differentiated, pointwise
/// multiplied.
pub fn nonlinear_source(f: &VectorField, g: &VectorField) -> Result<ScalarField> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch("nonlinear_source arguments".into()));
    }
    let mut out = ScalarField::zeros(f.grid());
    for j in 0..3 {
        for k in 0..3 {
            let df = f.component(j).derivative(k)?;
            let dg = g.component(k).derivative(j)?;
            out = &out + &(&df * &dg);
        }
    }
    Ok(out)
}

/// Cross source Σ v_{k,j} r_{j,k} and pure control source Σ r_{k,j} r_{j,k}
/// of the controlled momentum equation.
pub fn mixed_sources(v: &VectorField, r: &VectorField) -> Result<(ScalarField, ScalarField)> {
    Ok((nonlinear_source(v, r)?, nonlinear_source(r, r)?))
}

/// Exact periodic solution path: -∂_i p with -Δp = source and mean(p) = 0,
/// through the multiplier -i·k_i/|k|² (Nyquist rows zeroed as in
/// differentiation).
pub fn pressure_gradient_spectral(source: &ScalarField) -> VectorField {
    let grid = source.grid();
    let n = grid.points_per_axis();
    let spec = source.spectrum();
    let mut comps = Vec::with_capacity(3);
    for axis in 0..3 {
        let mut cspec = spec.clone();
        Zip::indexed(&mut cspec).for_each(|(i, j, k), v| {
            let idx = [i, j, k][axis];
            let k2 = grid.wavenumber(i).powi(2)
                + grid.wavenumber(j).powi(2)
                + grid.wavenumber(k).powi(2);
            if k2 == 0.0 || idx == n / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, -grid.wavenumber(idx) / k2);
            }
        });
        comps.push(ScalarField::from_spectrum(grid, cspec));
    }
    VectorField::new([comps.remove(0), comps.remove(0), comps.remove(0)]).expect("same grid")
}

/// Boundary-decay diagnostic of the free-space path: fraction of the source
/// L² norm living within n/16 cells of the box faces. Warning-level, not
/// fatal.
#[derive(Debug, Clone, Copy)]
pub struct DecayCheck {
    pub shell_fraction: f64,
    pub threshold: f64,
}

impl DecayCheck {
    pub fn ok(&self) -> bool {
        self.shell_fraction <= self.threshold
    }
}

pub const DECAY_THRESHOLD: f64 = 1e-3;

fn decay_check(source: &ScalarField) -> DecayCheck {
    let width = (source.grid().points_per_axis() / 16).max(1);
    DecayCheck {
        shell_fraction: source.boundary_shell_l2_fraction(width),
        threshold: DECAY_THRESHOLD,
    }
}

/// Which pressure-gradient evaluation a scheme uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LerayPath {
    /// Periodic spectral projector (default for scheme runs).
    Spectral,
    /// Split-kernel convolution on a grid padded by the given factor
    /// (free-space emulation; requires decaying data).
    Kernel { padding: usize },
}

/// Split-kernel pressure gradient with the kernel spectra cached, so many
/// sources can be projected against one set of splits.
///
/// The kernel is sampled in signed coordinates on a grid enlarged by the
/// padding factor; the source is zero-embedded there and the result read
/// back from its block. Padding 1 is the bare circular convolution; from
/// padding 2 on, every displacement between source and evaluation cells
/// carries its true free-space kernel value, so the path computes the
/// exact discrete free-space convolution of data in the block.
pub struct KernelProjector {
    base: Grid,
    padding: usize,
    splits: [KernelSplit; 3],
    spectra: [Array3<Complex64>; 3],
}

impl KernelProjector {
    pub fn new(base: Grid, padding: usize, spec: &CutoffSpec) -> Result<KernelProjector> {
        if padding == 0 {
            return Err(Error::Config("padding factor must be >= 1".into()));
        }
        let sample_grid = if padding == 1 {
            base
        } else {
            base.padded(padding)?
        };
        let h3 = base.cell_volume();
        let mut splits = Vec::with_capacity(3);
        let mut spectra = Vec::with_capacity(3);
        for axis in 0..3 {
            let split = build_kernel_split(sample_grid, axis, spec)?;
            let mut s = split.total().spectrum();
            s.mapv_inplace(|v| v * h3);
            spectra.push(s);
            splits.push(split);
        }
        Ok(KernelProjector {
            base,
            padding,
            splits: splits.try_into().map_err(|_| Error::NonFinite("splits"))?,
            spectra: spectra.try_into().map_err(|_| Error::NonFinite("spectra"))?,
        })
    }

    pub fn splits(&self) -> &[KernelSplit; 3] {
        &self.splits
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    /// Grid the kernel is sampled on (the padded enlargement of the base).
    pub fn sample_grid(&self) -> Grid {
        self.splits[0].near.grid()
    }

    /// Zero-embed a base-grid field into the block of the sampling grid.
    pub fn embed(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.grid() != self.base {
            return Err(Error::GridMismatch("kernel projector embed".into()));
        }
        if self.padding == 1 {
            return Ok(f.clone());
        }
        let mut out = ScalarField::zeros(self.sample_grid());
        Zip::indexed(f.values()).for_each(|(i, j, k), &v| {
            out.values_mut()[[i, j, k]] = v;
        });
        Ok(out)
    }

    /// Read the block of a sampling-grid field back onto the base grid.
    pub fn restrict(&self, f: &ScalarField) -> ScalarField {
        if self.padding == 1 {
            return f.clone();
        }
        let mut out = ScalarField::zeros(self.base);
        Zip::indexed(out.values_mut()).for_each(|(i, j, k), v| {
            *v = f.values()[[i, j, k]];
        });
        out
    }

    /// Component i = (near_i + far_i) ∗ source, the free-space -∇p.
    pub fn pressure_gradient(&self, source: &ScalarField) -> Result<(VectorField, DecayCheck)> {
        if source.grid() != self.base {
            return Err(Error::GridMismatch("kernel projector source".into()));
        }
        let check = decay_check(source);
        let embedded = self.embed(source)?;
        let spec = embedded.spectrum();
        let mut comps = Vec::with_capacity(3);
        for axis in 0..3 {
            let mut prod = spec.clone();
            Zip::from(&mut prod)
                .and(&self.spectra[axis])
                .for_each(|a, b| *a *= b);
            let conv = ScalarField::from_spectrum(embedded.grid(), prod);
            comps.push(self.restrict(&conv));
        }
        let field = VectorField::new([comps.remove(0), comps.remove(0), comps.remove(0)])?;
        Ok((field, check))
    }
}

/// One-shot split-kernel pressure gradient against pre-built per-axis
/// splits: the free-space variant. The splits must share one sampling grid
/// whose spacing matches the source grid; a larger sampling grid zero-pads
/// the source, which emulates the free-space convolution of (genuinely
/// decaying) data — exactly, once the sampling grid doubles the source
/// grid.
pub fn pressure_gradient_kernel(
    source: &ScalarField,
    splits: &[KernelSplit; 3],
) -> Result<(VectorField, DecayCheck)> {
    let sample_grid = splits[0].near.grid();
    for (axis, s) in splits.iter().enumerate() {
        if s.near.grid() != sample_grid {
            return Err(Error::GridMismatch("kernel splits on different grids".into()));
        }
        if s.axis != axis {
            return Err(Error::GridMismatch(format!(
                "split at position {axis} is for axis {}",
                s.axis
            )));
        }
    }
    let base = source.grid();
    if (sample_grid.spacing() - base.spacing()).abs() > 1e-12 * base.spacing()
        || sample_grid.points_per_axis() % base.points_per_axis() != 0
    {
        return Err(Error::GridMismatch(
            "split sampling grid is not an integer padding of the source grid".into(),
        ));
    }
    let padding = sample_grid.points_per_axis() / base.points_per_axis();
    let check = decay_check(source);
    let h3 = base.cell_volume();
    let embedded = if padding == 1 {
        source.clone()
    } else {
        let mut out = ScalarField::zeros(sample_grid);
        Zip::indexed(source.values()).for_each(|(i, j, k), &v| {
            out.values_mut()[[i, j, k]] = v;
        });
        out
    };
    let spec = embedded.spectrum();
    let mut comps = Vec::with_capacity(3);
    for split in splits.iter() {
        let total = split.total();
        let kspec = total.spectrum();
        let mut prod = spec.clone();
        Zip::from(&mut prod).and(&kspec).for_each(|a, b| *a *= b * h3);
        let conv = ScalarField::from_spectrum(sample_grid, prod);
        if padding == 1 {
            comps.push(conv);
        } else {
            let mut out = ScalarField::zeros(base);
            Zip::indexed(out.values_mut()).for_each(|(i, j, k), v| {
                *v = conv.values()[[i, j, k]];
            });
            comps.push(out);
        }
    }
    let field = VectorField::new([comps.remove(0), comps.remove(0), comps.remove(0)])?;
    Ok((field, check))
}
