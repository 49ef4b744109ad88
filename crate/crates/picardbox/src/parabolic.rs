//! Discrete solution operator for the linearized equations of the schemes:
//!
//! ```text
//! ∂w/∂τ = ρν·Δw − ρ·Σ_j b_j ∂w/∂x_j + f,    τ ∈ [τ₀, τ₀+1],
//! ```
//!
//! stepped by an IMEX rule: diffusion through the exact Fourier multiplier,
//! advection and source explicit (left endpoint), first order in the substep
//! width. The drift `b` and the source may be frozen fields or per-substep
//! sequences, matching the freezing conventions of the Picard iterations.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::kernels::GaussianMajorant;
use ndarray::{Array3, Zip};
use num_complex::Complex64;

/// Drift field of one linear problem.
#[derive(Debug, Clone, Copy)]
pub enum Coefficient<'a> {
    /// One field for the whole step.
    Frozen(&'a VectorField),
    /// One field per substep, left endpoints; must hold at least `substeps`
    /// entries (a trajectory's `substeps + 1` samples work directly).
    PerSubstep(&'a [VectorField]),
}

impl<'a> Coefficient<'a> {
    fn at(&self, m: usize) -> &'a VectorField {
        match self {
            Coefficient::Frozen(b) => b,
            Coefficient::PerSubstep(bs) => &bs[m],
        }
    }

    fn sup_norm(&self, substeps: usize) -> f64 {
        match self {
            Coefficient::Frozen(b) => b.sup_norm(),
            Coefficient::PerSubstep(bs) => bs[..substeps]
                .iter()
                .map(|b| b.sup_norm())
                .fold(0.0, f64::max),
        }
    }

    fn grid(&self) -> Grid {
        match self {
            Coefficient::Frozen(b) => b.grid(),
            Coefficient::PerSubstep(bs) => bs[0].grid(),
        }
    }
}

/// Source term of one linear problem, evaluated at substep left endpoints.
#[derive(Debug, Clone, Copy)]
pub enum SourceTerm<'a> {
    None,
    Frozen(&'a ScalarField),
    PerSubstep(&'a [ScalarField]),
}

impl<'a> SourceTerm<'a> {
    fn at(&self, m: usize) -> Option<&'a ScalarField> {
        match self {
            SourceTerm::None => None,
            SourceTerm::Frozen(s) => Some(s),
            SourceTerm::PerSubstep(ss) => Some(&ss[m]),
        }
    }
}

/// One scalar advection-diffusion problem on the unit rescaled-time window.
pub struct AdvectionDiffusionProblem<'a> {
    pub rho: f64,
    pub nu: f64,
    pub coeff: Coefficient<'a>,
    pub source: SourceTerm<'a>,
    pub initial: &'a ScalarField,
    pub substeps: usize,
    /// Left endpoint of the rescaled-time window (τ₀ = l−1 in the schemes).
    pub tau0: f64,
}

/// Substep samples w(τ_m, ·), τ_m = τ₀ + m/M, samples[0] = initial.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau0: f64,
    pub samples: Vec<ScalarField>,
}

impl Trajectory {
    pub fn substeps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn end(&self) -> &ScalarField {
        self.samples.last().expect("non-empty")
    }
}

/// Three scalar trajectories on one grid and window.
#[derive(Debug, Clone)]
pub struct VectorTrajectory {
    pub tau0: f64,
    pub samples: Vec<VectorField>,
}

impl VectorTrajectory {
    /// Constant-in-τ trajectory, every sample a copy of `field`.
    pub fn constant(field: &VectorField, substeps: usize, tau0: f64) -> VectorTrajectory {
        VectorTrajectory {
            tau0,
            samples: vec![field.clone(); substeps + 1],
        }
    }

    pub fn from_components(parts: [Trajectory; 3]) -> Result<VectorTrajectory> {
        let tau0 = parts[0].tau0;
        let len = parts[0].samples.len();
        if parts.iter().any(|p| p.samples.len() != len) {
            return Err(Error::GridMismatch("trajectories of different length".into()));
        }
        let mut parts = parts.map(|p| p.samples.into_iter());
        let mut samples = Vec::with_capacity(len);
        for _ in 0..len {
            samples.push(VectorField::new([
                parts[0].next().expect("length checked"),
                parts[1].next().expect("length checked"),
                parts[2].next().expect("length checked"),
            ])?);
        }
        Ok(VectorTrajectory { tau0, samples })
    }

    pub fn substeps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn end(&self) -> &VectorField {
        self.samples.last().expect("non-empty")
    }

    /// sup over samples of the max-component H² and H^{2,∞} norms of
    /// (self − other).
    pub fn increment_norms(&self, other: &VectorTrajectory) -> (f64, f64) {
        assert_eq!(self.samples.len(), other.samples.len());
        let mut h2 = 0.0f64;
        let mut h2inf = 0.0f64;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            let d = a - b;
            h2 = h2.max(d.h2_norm_max());
            h2inf = h2inf.max(d.h2inf_norm_max());
        }
        (h2, h2inf)
    }

    /// sup over samples of the max-component sup-norm of (self − other).
    pub fn increment_sup(&self, other: &VectorTrajectory) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).sup_norm())
            .fold(0.0, f64::max)
    }
}

/// Exact heat semigroup: Fourier multiplier exp(−nu_eff·|k|²·t).
pub fn propagate_heat(f: &ScalarField, t: f64, nu_eff: f64) -> Result<ScalarField> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let grid = f.grid();
    let mut spec = f.spectrum();
    Zip::indexed(&mut spec).for_each(|(i, j, k), v| {
        let k2 = grid.wavenumber(i).powi(2)
            + grid.wavenumber(j).powi(2)
            + grid.wavenumber(k).powi(2);
        *v *= (-nu_eff * k2 * t).exp();
    });
    Ok(ScalarField::from_spectrum(grid, spec))
}

fn diffusion_multiplier(grid: Grid, nu_eff: f64, dt: f64) -> Array3<f64> {
    let n = grid.points_per_axis();
    Array3::from_shape_fn((n, n, n), |(i, j, k)| {
        let k2 = grid.wavenumber(i).powi(2)
            + grid.wavenumber(j).powi(2)
            + grid.wavenumber(k).powi(2);
        (-nu_eff * k2 * dt).exp()
    })
}

/// IMEX solve over the unit window; returns all substep samples.
pub fn solve(p: &AdvectionDiffusionProblem) -> Result<Trajectory> {
    let m = p.substeps;
    if m < 8 {
        return Err(Error::TooFewSubsteps(m));
    }
    let grid = p.initial.grid();
    if p.coeff.grid() != grid {
        return Err(Error::GridMismatch("coefficient grid".into()));
    }
    if !p.initial.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    let dtau = 1.0 / m as f64;
    let cfl = p.rho * p.coeff.sup_norm(m) * dtau / grid.spacing();
    if cfl > 0.5 {
        return Err(Error::CflViolation(cfl));
    }

    let n = grid.points_per_axis();
    let diffuse = diffusion_multiplier(grid, p.rho * p.nu, dtau);
    let wavenumbers: Vec<Complex64> = (0..n)
        .map(|i| {
            if i == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavenumber(i))
            }
        })
        .collect();

    let mut samples = Vec::with_capacity(m + 1);
    samples.push(p.initial.clone());
    let mut wspec = p.initial.spectrum();
    for step in 0..m {
        let b = p.coeff.at(step);
        // Advection term Σ b_j ∂_j w, products in physical space.
        let mut rhs = ScalarField::zeros(grid);
        for axis in 0..3 {
            let mut dspec = wspec.clone();
            Zip::indexed(&mut dspec).for_each(|(i, j, k), v| {
                *v *= wavenumbers[[i, j, k][axis]];
            });
            let dw = ScalarField::from_spectrum(grid, dspec);
            rhs = &rhs + &(&dw * b.component(axis));
        }
        rhs = rhs.scaled(-p.rho);
        if let Some(src) = p.source.at(step) {
            if src.grid() != grid {
                return Err(Error::GridMismatch("source grid".into()));
            }
            rhs = &rhs + src;
        }
        let rhs_spec = rhs.spectrum();
        Zip::from(&mut wspec)
            .and(&rhs_spec)
            .and(&diffuse)
            .for_each(|w, r, e| *w = (*w + dtau * r) * e);
        let sample = ScalarField::from_spectrum(grid, wspec.clone());
        if !sample.is_finite() {
            return Err(Error::BlowUp(format!("non-finite sample at substep {step}")));
        }
        samples.push(sample);
    }
    Ok(Trajectory {
        tau0: p.tau0,
        samples,
    })
}

/// Outcome of propagating grid impulses through [`solve`] and fitting the
/// Gaussian a priori bound to the resulting columns.
#[derive(Debug, Clone)]
pub struct MajorantReport {
    /// Smallest-scale order-0 majorant found over the sampled columns.
    pub fitted: GaussianMajorant,
    /// Scale of the order-1 majorant (first spatial derivatives of the
    /// columns) at the same decay rate.
    pub grad_scale: f64,
    /// ∫₀¹ of the order-1 majorant's L¹ norm (the constant the contraction
    /// estimates consume).
    pub time_integrated_l1: f64,
    /// max |column(x→y) − column(y→x)| over the sampled pairs.
    pub max_asymmetry: f64,
    /// Whether the caller's candidate majorant dominated every sampled value.
    pub candidate_dominates: bool,
}

/// Fit (C, λ) such that every sampled impulse-response value obeys
/// C·t^{-3/2}·exp(-λ|x−y|²/4t); report the order-1 analogue and the
/// self-adjointness defect. Sampling is restricted to |x−y| ≤ L/4 and to
/// times where the response is grid-resolved.
pub fn check_gaussian_majorant(
    p: &AdvectionDiffusionProblem,
    candidate: &GaussianMajorant,
) -> Result<MajorantReport> {
    let grid = p.initial.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let nu_eff = p.rho * p.nu;
    let center = [n / 2, n / 2, n / 2];

    let impulse_at = |c: [usize; 3]| {
        let mut f = ScalarField::zeros(grid);
        f.values_mut()[[c[0], c[1], c[2]]] = 1.0 / grid.cell_volume();
        f
    };

    let run = |c: [usize; 3]| -> Result<Trajectory> {
        let initial = impulse_at(c);
        solve(&AdvectionDiffusionProblem {
            rho: p.rho,
            nu: p.nu,
            coeff: p.coeff,
            source: SourceTerm::None,
            initial: &initial,
            substeps: p.substeps,
            tau0: 0.0,
        })
    };

    let traj = run(center)?;
    let m = p.substeps;
    let dtau = 1.0 / m as f64;
    // Resolvability: Gaussian width √(4·nu_eff·t) at least 2 cells.
    let t_min = h * h / nu_eff.max(1e-300);
    let mut sample_steps: Vec<usize> = (1..=m)
        .filter(|&s| s as f64 * dtau >= t_min)
        .collect();
    if sample_steps.is_empty() {
        sample_steps = (m / 2..=m).collect();
    }
    if sample_steps.len() > 8 {
        let stride = sample_steps.len() / 8;
        sample_steps = sample_steps.into_iter().step_by(stride.max(1)).collect();
    }

    let r_max = grid.box_length() / 4.0;
    let displacement = |i: usize, c: usize| -> f64 {
        let d = (i as isize - c as isize).rem_euclid(n as isize) as usize;
        grid.signed_coord(d)
    };

    // Collect (t, r², value, |grad| per axis max) samples inside the ball.
    let mut samples: Vec<(f64, f64, f64)> = Vec::new();
    let mut grad_samples: Vec<(f64, f64, f64)> = Vec::new();
    let mut dominated = true;
    for &s in &sample_steps {
        let t = s as f64 * dtau;
        let w = &traj.samples[s];
        let grads: Vec<ScalarField> = (0..3).map(|a| w.derivative(a).expect("axis")).collect();
        Zip::indexed(w.values()).for_each(|(i, j, k), &v| {
            let dx = displacement(i, center[0]);
            let dy = displacement(j, center[1]);
            let dz = displacement(k, center[2]);
            let r2 = dx * dx + dy * dy + dz * dz;
            if r2 <= r_max * r_max {
                samples.push((t, r2, v.abs()));
                let g = grads
                    .iter()
                    .map(|d| d.values()[[i, j, k]].abs())
                    .fold(0.0, f64::max);
                grad_samples.push((t, r2, g));
                if candidate.order == 0 {
                    let bound =
                        candidate.scale * t.powf(-1.5) * (-candidate.lambda * r2 / (4.0 * t)).exp();
                    if v.abs() > bound {
                        dominated = false;
                    }
                }
            }
        });
    }

    let scale_for = |lambda: f64, data: &[(f64, f64, f64)], power: f64| -> f64 {
        data.iter()
            .map(|&(t, r2, v)| v * t.powf(power) * (lambda * r2 / (4.0 * t)).exp())
            .fold(0.0, f64::max)
    };

    // Base scale at λ → 0, then the largest λ whose scale stays within 10%.
    let c_base = scale_for(0.0, &samples, 1.5);
    let lam_ref = 1.0 / nu_eff;
    let mut best_lambda = lam_ref * 0.05;
    for step in 1..=300 {
        let lam = lam_ref * 1.5 * step as f64 / 300.0;
        if scale_for(lam, &samples, 1.5) <= 1.1 * c_base {
            best_lambda = lam;
        }
    }
    let c_fit = scale_for(best_lambda, &samples, 1.5);
    let fitted = GaussianMajorant::new(c_fit.max(f64::MIN_POSITIVE), best_lambda, 0, 0.75)?;
    let grad_scale = scale_for(best_lambda, &grad_samples, 2.0).max(f64::MIN_POSITIVE);
    let order1 = GaussianMajorant::new(grad_scale, best_lambda, 1, 0.75)?;

    // Self-adjointness defect over a few displaced pairs.
    let offsets = [[n / 8, 0, 0], [0, n / 8, n / 16]];
    let mut max_asym = 0.0f64;
    for off in offsets {
        let other = [
            (center[0] + off[0]) % n,
            (center[1] + off[1]) % n,
            (center[2] + off[2]) % n,
        ];
        let back = run(other)?;
        for &s in &sample_steps {
            let fwd_val = traj.samples[s].values()[[other[0], other[1], other[2]]];
            let bwd_val = back.samples[s].values()[[center[0], center[1], center[2]]];
            max_asym = max_asym.max((fwd_val - bwd_val).abs());
        }
    }

    Ok(MajorantReport {
        fitted,
        grad_scale,
        time_integrated_l1: order1.time_integrated_l1(1.0),
        max_asymmetry: max_asym,
        candidate_dominates: dominated,
    })
}
