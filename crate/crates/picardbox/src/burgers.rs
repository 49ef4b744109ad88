//! Global scheme for the multivariate Burgers equation: macro steps on the
//! rescaled window τ ∈ [l−1, l] with step size ρ_l ~ 1/l, each solved by a
//! Picard iteration whose linear problems freeze the drift at the previous
//! iterate.
//!
//! The iteration solves the full update u^{k+1} with drift u^k and recovers
//! the increment by differencing; this has the same fixed point as the
//! increment equations and avoids transcribing them term by term.

use crate::diagnostics::{IncrementRecord, IterationReport, LedgerRow, NormLedger};
use crate::error::Result;
use crate::field::VectorField;
use crate::parabolic::{solve, AdvectionDiffusionProblem, Coefficient, SourceTerm, VectorTrajectory};
use std::time::Instant;

/// Fixed parameters of a Burgers run.
#[derive(Debug, Clone, Copy)]
pub struct BurgersConfig {
    pub nu: f64,
    /// Scale of the 1/l step-size law.
    pub c: f64,
    /// Inner-iteration stopping tolerance on sup_τ |δ|_{H²}.
    pub tol: f64,
    pub kmax: usize,
    pub substeps: usize,
}

impl Default for BurgersConfig {
    fn default() -> BurgersConfig {
        BurgersConfig {
            nu: 0.1,
            c: 0.1,
            tol: 1e-10,
            kmax: 30,
            substeps: 32,
        }
    }
}

/// State between macro steps: `l` is the index of the *next* step to run,
/// `u_end` the end state u(l−1, ·) of the previous one.
#[derive(Debug, Clone)]
pub struct BurgersState {
    pub l: usize,
    pub rho_l: f64,
    pub u_end: VectorField,
    pub physical_time: f64,
    pub ledger: NormLedger,
    pub initial_sup: f64,
    pub initial_h2: f64,
}

impl BurgersState {
    pub fn new(initial: VectorField, cfg: &BurgersConfig) -> BurgersState {
        let initial_sup = initial.sup_norm();
        let initial_h2 = initial.h2_norm_max();
        let rho_l = contraction_budget(cfg.c, 1, initial_sup).0;
        BurgersState {
            l: 1,
            rho_l,
            u_end: initial,
            physical_time: 0.0,
            ledger: NormLedger::new(),
            initial_sup,
            initial_h2,
        }
    }
}

/// ρ_l = c/l.
pub fn step_size(l: usize, c: f64) -> f64 {
    assert!(l >= 1 && c > 0.0);
    c / l as f64
}

/// Budgeted step size min(c/l, 0.5/(1 + sup|coeff|)); returns the budget and
/// both of its terms for logging.
pub fn contraction_budget(c: f64, l: usize, coeff_sup: f64) -> (f64, f64, f64) {
    let harmonic = step_size(l, c);
    let cap = 0.5 / (1.0 + coeff_sup);
    (harmonic.min(cap), harmonic, cap)
}

/// First Picard iterate of step `state.l`: drift frozen at u(l−1, ·), no
/// source, initial data u(l−1, ·).
pub fn first_iterate(state: &BurgersState, cfg: &BurgersConfig) -> Result<VectorTrajectory> {
    let tau0 = (state.l - 1) as f64;
    let mut parts = Vec::with_capacity(3);
    for i in 0..3 {
        parts.push(solve(&AdvectionDiffusionProblem {
            rho: state.rho_l,
            nu: cfg.nu,
            coeff: Coefficient::Frozen(&state.u_end),
            source: SourceTerm::None,
            initial: state.u_end.component(i),
            substeps: cfg.substeps,
            tau0,
        })?);
    }
    VectorTrajectory::from_components([parts.remove(0), parts.remove(0), parts.remove(0)])
}

/// One Picard update: solve the linear problems with the drift frozen per
/// substep at the previous iterate.
pub fn picard_step(
    state: &BurgersState,
    prev: &VectorTrajectory,
    cfg: &BurgersConfig,
) -> Result<VectorTrajectory> {
    let tau0 = (state.l - 1) as f64;
    let mut parts = Vec::with_capacity(3);
    for i in 0..3 {
        parts.push(solve(&AdvectionDiffusionProblem {
            rho: state.rho_l,
            nu: cfg.nu,
            coeff: Coefficient::PerSubstep(&prev.samples),
            source: SourceTerm::None,
            initial: state.u_end.component(i),
            substeps: cfg.substeps,
            tau0,
        })?);
    }
    VectorTrajectory::from_components([parts.remove(0), parts.remove(0), parts.remove(0)])
}

/// Run one macro step: iterate [`picard_step`] from [`first_iterate`] until
/// sup_τ |δ^k|_{H²} ≤ tol or kmax; non-convergence is flagged, not fatal.
pub fn run_time_step(
    mut state: BurgersState,
    cfg: &BurgersConfig,
) -> Result<(BurgersState, IterationReport)> {
    let start = Instant::now();
    state.rho_l = contraction_budget(cfg.c, state.l, state.u_end.sup_norm()).0;

    let base = VectorTrajectory::constant(&state.u_end, cfg.substeps, (state.l - 1) as f64);
    let mut prev = first_iterate(&state, cfg)?;
    let (d_h2, d_h2inf) = prev.increment_norms(&base);
    let mut report = IterationReport::default();
    report.increments.push(IncrementRecord {
        h2: d_h2,
        h2inf: d_h2inf,
        ratio_h2: None,
        ratio_h2inf: None,
        leray_l2: 0.0,
    });
    let mut last = (d_h2, d_h2inf);
    let mut k = 1usize;
    let mut converged = last.0 <= cfg.tol;
    while !converged && k < cfg.kmax {
        let next = picard_step(&state, &prev, cfg)?;
        let (h2, h2inf) = next.increment_norms(&prev);
        report.increments.push(IncrementRecord {
            h2,
            h2inf,
            ratio_h2: (last.0 > 0.0).then(|| h2 / last.0),
            ratio_h2inf: (last.1 > 0.0).then(|| h2inf / last.1),
            leray_l2: 0.0,
        });
        prev = next;
        last = (h2, h2inf);
        k += 1;
        converged = h2 <= cfg.tol;
    }
    report.k_final = k;
    report.converged = converged;

    state.physical_time += state.rho_l;
    state.u_end = prev.end().clone();
    let row = LedgerRow {
        l: state.l,
        rho_l: state.rho_l,
        k_iters: k,
        h2_norm: state.u_end.h2_norm_max(),
        h2inf_norm: state.u_end.h2inf_norm_max(),
        contraction_ratio_max: report.max_ratio_h2(),
        leray_l2: 0.0,
        div_max: state.u_end.divergence().sup_norm(),
        runtime_ms: start.elapsed().as_millis() as u64,
    };
    state.ledger.push(row)?;
    state.l += 1;
    Ok((state, report))
}

/// Chain `steps` macro steps from the given initial data.
pub fn run(
    initial: &VectorField,
    steps: usize,
    cfg: &BurgersConfig,
) -> Result<(BurgersState, Vec<IterationReport>)> {
    let mut state = BurgersState::new(initial.clone(), cfg);
    let mut reports = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, report) = run_time_step(state, cfg)?;
        state = next;
        reports.push(report);
    }
    Ok((state, reports))
}
