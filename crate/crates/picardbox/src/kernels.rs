//! The Poisson kernel of the Laplacian on ℝ³, its derivatives, smooth
//! cutoffs, and the near/far kernel split.
//!
//! With ω₃ = 4π the kernel and its first two derivatives are
//!
//! ```text
//! K(x)        = -1/(4π|x|)
//! ∂_i K(x)    =  x_i / (4π|x|³)
//! ∂_i∂_j K(x) =  (δ_ij|x|² - 3 x_i x_j) / (4π|x|⁵)
//! ```
//!
//! The gradient is locally integrable but not square integrable near 0, and
//! square integrable but not integrable at infinity; a cutoff φ_ε splits it
//! into a compactly supported L¹ part and an L² tail, which is what the
//! Young-inequality estimates of the pressure gradient run on.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField};
use ndarray::Zip;
use std::f64::consts::PI;

/// Derivative selector for [`poisson_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelDeriv {
    Value,
    Grad(usize),
    Hess(usize, usize),
}

/// Poisson kernel of the 3-D Laplacian and its derivatives up to order 2.
pub fn poisson_kernel(x: [f64; 3], deriv: KernelDeriv) -> Result<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if r2 == 0.0 {
        return Err(Error::KernelAtOrigin);
    }
    let r = r2.sqrt();
    let w = 4.0 * PI;
    Ok(match deriv {
        KernelDeriv::Value => -1.0 / (w * r),
        KernelDeriv::Grad(i) => {
            debug_assert!(i < 3);
            x[i] / (w * r.powi(3))
        }
        KernelDeriv::Hess(i, j) => {
            debug_assert!(i < 3 && j < 3);
            if i == j {
                (r2 - 3.0 * x[i] * x[i]) / (w * r.powi(5))
            } else {
                -3.0 * x[i] * x[j] / (w * r.powi(5))
            }
        }
    })
}

/// Cutoff shape for the kernel split.
///
/// `PaperAnnulus` is the printed exp(-1/(2ε²-|y|²)) annulus formula with
/// half-open branches; its value jumps from 1 to exp(-1/ε²) at |y| = ε.
/// `SmoothBump` (the default) is the standard C^∞ partition transitioning on
/// [ε, 2ε]. `Sharp` is the indicator of the ball of radius ε, the limit case
/// used for analytic norm checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffStyle {
    PaperAnnulus,
    SmoothBump,
    Sharp,
}

impl std::str::FromStr for CutoffStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<CutoffStyle> {
        match s {
            "paper_annulus" => Ok(CutoffStyle::PaperAnnulus),
            "smooth_bump" => Ok(CutoffStyle::SmoothBump),
            "sharp" => Ok(CutoffStyle::Sharp),
            other => Err(Error::Config(format!("unknown cutoff style `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub epsilon: f64,
    pub style: CutoffStyle,
}

impl CutoffSpec {
    pub fn new(epsilon: f64, style: CutoffStyle) -> CutoffSpec {
        CutoffSpec { epsilon, style }
    }

    /// Default ε = box_length/16 with the smooth bump.
    pub fn default_for(grid: Grid) -> CutoffSpec {
        CutoffSpec::new(grid.box_length() / 16.0, CutoffStyle::SmoothBump)
    }

    /// Radius outside which the near part vanishes: √2·ε for the annulus,
    /// 2ε for the smooth bump, ε for the sharp indicator.
    pub fn support_radius(&self) -> f64 {
        match self.style {
            CutoffStyle::PaperAnnulus => std::f64::consts::SQRT_2 * self.epsilon,
            CutoffStyle::SmoothBump => 2.0 * self.epsilon,
            CutoffStyle::Sharp => self.epsilon,
        }
    }
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Cutoff value at a point; radial, equal to 1 inside radius ε.
pub fn cutoff(y: [f64; 3], spec: &CutoffSpec) -> f64 {
    let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    cutoff_radial(r, spec)
}

pub fn cutoff_radial(r: f64, spec: &CutoffSpec) -> f64 {
    let eps = spec.epsilon;
    match spec.style {
        CutoffStyle::Sharp => {
            if r <= eps {
                1.0
            } else {
                0.0
            }
        }
        CutoffStyle::PaperAnnulus => {
            if r <= eps {
                1.0
            } else if r * r < 2.0 * eps * eps {
                (-1.0 / (2.0 * eps * eps - r * r)).exp()
            } else {
                0.0
            }
        }
        CutoffStyle::SmoothBump => {
            if r <= eps {
                1.0
            } else if r >= 2.0 * eps {
                0.0
            } else {
                let t = (r - eps) / eps;
                // s(t) = f(t)/(f(t)+f(1-t)) rises 0 → 1; we descend.
                let s = bump(t) / (bump(t) + bump(1.0 - t));
                1.0 - s
            }
        }
    }
}

/// Sampled near (φ_ε·∂K) and far ((1-φ_ε)·∂K) parts of one gradient
/// component of the Poisson kernel, on a grid in signed coordinates.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pub axis: usize,
    pub cutoff: CutoffSpec,
    pub near: ScalarField,
    pub far: ScalarField,
}

impl KernelSplit {
    /// near + far at every non-origin cell; the origin cell itself is zero
    /// (the kernel is odd, so its principal value over a symmetric cell
    /// vanishes).
    pub fn total(&self) -> ScalarField {
        &self.near + &self.far
    }
}

/// Sample both parts of ∂K/∂x_axis on `grid` (which may be a padded
/// enlargement of the working grid). Requires ε ≥ 4·spacing and
/// ε < box_length/4 of the working box.
pub fn build_kernel_split(grid: Grid, axis: usize, spec: &CutoffSpec) -> Result<KernelSplit> {
    if axis >= grid.dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: grid.dim(),
        });
    }
    let limit = 4.0 * grid.spacing();
    if spec.epsilon < limit {
        return Err(Error::CutoffUnderResolved {
            epsilon: spec.epsilon,
            limit,
        });
    }
    if spec.epsilon >= grid.box_length() / 4.0 {
        return Err(Error::CutoffTooWide {
            epsilon: spec.epsilon,
            limit: grid.box_length() / 4.0,
        });
    }
    let mut near = ScalarField::zeros(grid);
    let mut far = ScalarField::zeros(grid);
    Zip::indexed(near.values_mut())
        .and(far.values_mut())
        .par_for_each(|(i, j, k), nv, fv| {
            let x = [
                grid.signed_coord(i),
                grid.signed_coord(j),
                grid.signed_coord(k),
            ];
            if x[0] == 0.0 && x[1] == 0.0 && x[2] == 0.0 {
                return;
            }
            let kv = poisson_kernel(x, KernelDeriv::Grad(axis)).expect("non-origin");
            let phi = cutoff(x, spec);
            *nv = phi * kv;
            *fv = (1.0 - phi) * kv;
        });
    Ok(KernelSplit {
        axis,
        cutoff: *spec,
        near,
        far,
    })
}

/// Gaussian a priori majorant C·dt^{-(3+order)/2}·exp(-λ|x|²/(4·dt)) for a
/// parabolic fundamental solution (order 0) or its first derivatives
/// (order 1). `mu` is the local-singularity exponent of the sharpened bound
/// c/(dt^μ·|x|^{4-2μ}), kept with the majorant for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMajorant {
    pub scale: f64,
    pub lambda: f64,
    pub order: u8,
    pub mu: f64,
}

impl GaussianMajorant {
    pub fn new(scale: f64, lambda: f64, order: u8, mu: f64) -> Result<GaussianMajorant> {
        if !(scale > 0.0 && scale.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonFinite("gaussian majorant constants"));
        }
        Ok(GaussianMajorant {
            scale,
            lambda,
            order,
            mu,
        })
    }

    /// Analytic ∫₀^T of the majorant's ℝ³ L¹ norm in time:
    /// ∫ C·s^{-(3+order)/2}·(4πs/λ)^{3/2} ds.
    pub fn time_integrated_l1(&self, horizon: f64) -> f64 {
        let c = self.scale * (4.0 * PI / self.lambda).powf(1.5);
        match self.order {
            0 => c * horizon,
            _ => 2.0 * c * horizon.sqrt(),
        }
    }
}

pub fn gaussian_bound(dt: f64, x: [f64; 3], m: &GaussianMajorant) -> Result<f64> {
    if dt <= 0.0 {
        return Err(Error::NonPositiveTime(dt));
    }
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let power = (3.0 + m.order as f64) / 2.0;
    Ok(m.scale * dt.powf(-power) * (-m.lambda * r2 / (4.0 * dt)).exp())
}
