//! Controlled global scheme for the incompressible Navier-Stokes equation in
//! Leray projection form.
//!
//! Each macro step on τ ∈ [l−1, l] runs:
//!
//! 1. an uncontrolled first iterate v* with drift and Leray forcing frozen
//!    at the previous end state;
//! 2. the control update r^l(τ) = r^{l−1} − (v*(τ) − v^r(l−1)), after which
//!    the controlled first iterate v* + δr^l equals the previous end state
//!    at every substep — exact algebraic cancellation;
//! 3. controlled Picard iterations for v^{r,k+1}: drift v^{r,k} − r^l (the
//!    r-advection of the momentum equation absorbed into the drift), with
//!    the control sources and the three split-kernel/spectral Leray terms
//!    frozen at the previous iterate and substep.
//!
//! The physical velocity is recovered as v = v^r − r.

use crate::diagnostics::{IncrementRecord, IterationReport, LedgerRow, NormLedger};
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::kernels::{CutoffSpec, KernelSplit};
use crate::leray::{
    mixed_sources, nonlinear_source, pressure_gradient_spectral, KernelProjector, LerayPath,
};
use crate::parabolic::{
    check_gaussian_majorant, solve, AdvectionDiffusionProblem, Coefficient, SourceTerm,
    VectorTrajectory,
};
use std::cell::Cell;
use std::time::Instant;

/// Fixed parameters of a Navier-Stokes run.
#[derive(Debug, Clone, Copy)]
pub struct NsConfig {
    pub nu: f64,
    pub c: f64,
    pub tol: f64,
    pub kmax: usize,
    pub substeps: usize,
    pub leray: LerayPath,
}

impl Default for NsConfig {
    fn default() -> NsConfig {
        NsConfig {
            nu: 0.1,
            c: 0.05,
            tol: 1e-10,
            kmax: 30,
            substeps: 32,
            leray: LerayPath::Spectral,
        }
    }
}

/// Bounds the step-size formula consumes, floored at 1 after measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsRecord {
    /// Sup bound over derivatives ≤ 2 of the controlled velocity.
    pub c_l: f64,
    /// Same bound for the control field.
    pub c_r: f64,
    /// L¹ norm of the near kernel part.
    pub c_k: f64,
    /// H² norm of the far kernel part.
    pub c_k2: f64,
    /// Empirical H² product constant.
    pub c_s: f64,
    /// Time-integrated L¹ bound of the fitted order-1 Gaussian majorant.
    pub c_prime: f64,
}

impl ConstantsRecord {
    pub fn unit() -> ConstantsRecord {
        ConstantsRecord {
            c_l: 1.0,
            c_r: 1.0,
            c_k: 1.0,
            c_k2: 1.0,
            c_s: 1.0,
            c_prime: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("C_l", self.c_l),
            ("C_r", self.c_r),
            ("C_K", self.c_k),
            ("C_K2", self.c_k2),
            ("C_s", self.c_s),
            ("C_prime", self.c_prime),
        ] {
            if !(value >= 1.0) || !value.is_finite() {
                return Err(Error::ConstantBelowFloor { name, value });
            }
        }
        Ok(())
    }
}

/// Step sizes produced by the contraction budget formula.
#[derive(Debug, Clone, Copy)]
pub struct StepSizes {
    pub controlled: f64,
    pub uncontrolled: f64,
}

/// ρ_l = 1 / (2(n+1)² · 4n⁴ · (C_l + C_r) · C_K2² · C_s · C′), plus the
/// uncontrolled-scheme variant
/// 1 / (4(n+1)² C′ (2 C_s C_K C_l n² + 4 C_s C_K2 C_l n²)).
pub fn step_size_controlled(constants: &ConstantsRecord, n: usize) -> Result<StepSizes> {
    constants.validate()?;
    let nf = n as f64;
    let controlled = 1.0
        / (2.0
            * (nf + 1.0).powi(2)
            * 4.0
            * nf.powi(4)
            * (constants.c_l + constants.c_r)
            * constants.c_k2.powi(2)
            * constants.c_s
            * constants.c_prime);
    let uncontrolled = 1.0
        / (4.0
            * (nf + 1.0).powi(2)
            * constants.c_prime
            * (2.0 * constants.c_s * constants.c_k * constants.c_l * nf.powi(2)
                + 4.0 * constants.c_s * constants.c_k2 * constants.c_l * nf.powi(2)));
    Ok(StepSizes {
        controlled,
        uncontrolled,
    })
}

/// State between macro steps. `l` indexes the next step; `v_end` and `r_end`
/// are v^r(l−1, ·) and r(l−1, ·); `r_traj` holds r^l once the control update
/// of the running step has been made.
#[derive(Debug, Clone)]
pub struct NsState {
    pub l: usize,
    pub rho_l: f64,
    pub v_end: VectorField,
    pub r_end: VectorField,
    pub r_traj: Option<VectorTrajectory>,
    pub constants: ConstantsRecord,
    pub ledger: NormLedger,
    pub initial_sup: f64,
    pub initial_h2: f64,
    /// End-of-window τ-rate of the previous control trajectory, for the
    /// boundary-derivative mismatch diagnostic.
    r_rate_end: Option<VectorField>,
}

impl NsState {
    /// Start state with r⁰ ≡ 0, so v^r = v = h at t = 0.
    pub fn new(initial: VectorField, cfg: &NsConfig) -> NsState {
        let grid = initial.grid();
        let initial_sup = initial.sup_norm();
        let initial_h2 = initial.h2_norm_max();
        let rho = practical_budget(cfg.c, 1, initial_sup);
        NsState {
            l: 1,
            rho_l: rho,
            v_end: initial,
            r_end: VectorField::zeros(grid),
            r_traj: None,
            constants: ConstantsRecord::unit(),
            ledger: NormLedger::new(),
            initial_sup,
            initial_h2,
            r_rate_end: None,
        }
    }
}

/// min(c/l, 0.5/(1 + sup of the drift bound)) — the budget the runs use;
/// the formula of [`step_size_controlled`] is the lemma-verification object.
pub fn practical_budget(c: f64, l: usize, coeff_sup: f64) -> f64 {
    (c / l as f64).min(0.5 / (1.0 + coeff_sup))
}

/// v = v^r − r.
pub fn recover_velocity(state: &NsState) -> VectorField {
    &state.v_end - &state.r_end
}

/// Scheme context: configuration plus the kernel projector when the
/// split-kernel Leray path is selected.
pub struct NsScheme {
    cfg: NsConfig,
    projector: Option<KernelProjector>,
    worst_shell_fraction: Cell<f64>,
}

impl NsScheme {
    pub fn new(grid: Grid, cfg: NsConfig, cutoff: CutoffSpec) -> Result<NsScheme> {
        let projector = match cfg.leray {
            LerayPath::Spectral => None,
            LerayPath::Kernel { padding } => Some(KernelProjector::new(grid, padding, &cutoff)?),
        };
        Ok(NsScheme {
            cfg,
            projector,
            worst_shell_fraction: Cell::new(0.0),
        })
    }

    pub fn config(&self) -> &NsConfig {
        &self.cfg
    }

    pub fn projector(&self) -> Option<&KernelProjector> {
        self.projector.as_ref()
    }

    /// Worst boundary-shell fraction seen by the kernel path so far.
    pub fn worst_shell_fraction(&self) -> f64 {
        self.worst_shell_fraction.get()
    }

    fn pressure_gradient(&self, source: &ScalarField) -> Result<VectorField> {
        match &self.projector {
            None => Ok(pressure_gradient_spectral(source)),
            Some(proj) => {
                let (field, check) = proj.pressure_gradient(source)?;
                if check.shell_fraction > self.worst_shell_fraction.get() {
                    self.worst_shell_fraction.set(check.shell_fraction);
                }
                Ok(field)
            }
        }
    }

    /// Assembled Leray forcing -∇p of the controlled system at one time
    /// slice: PG(Σ v_{k,j}v_{j,k}) − 2·PG(Σ v_{k,j}r_{j,k}) − PG(Σ r_{k,j}r_{j,k}).
    pub fn leray_forcing(&self, v: &VectorField, r: &VectorField) -> Result<VectorField> {
        let nl = nonlinear_source(v, v)?;
        let (cross, pure) = mixed_sources(v, r)?;
        let a = self.pressure_gradient(&nl)?;
        let b = self.pressure_gradient(&cross)?;
        let c = self.pressure_gradient(&pure)?;
        Ok(&(&a - &b.scaled(2.0)) - &c)
    }
}

fn uncontrolled_first_with(
    state: &NsState,
    scheme: &NsScheme,
    substeps: usize,
) -> Result<VectorTrajectory> {
    let tau0 = (state.l - 1) as f64;
    let forcing = scheme
        .pressure_gradient(&nonlinear_source(&state.v_end, &state.v_end)?)?
        .scaled(state.rho_l);
    let mut parts = Vec::with_capacity(3);
    for i in 0..3 {
        parts.push(solve(&AdvectionDiffusionProblem {
            rho: state.rho_l,
            nu: scheme.cfg.nu,
            coeff: Coefficient::Frozen(&state.v_end),
            source: SourceTerm::Frozen(forcing.component(i)),
            initial: state.v_end.component(i),
            substeps,
            tau0,
        })?);
    }
    VectorTrajectory::from_components([parts.remove(0), parts.remove(0), parts.remove(0)])
}

/// Uncontrolled first iterate v*: drift and Leray forcing frozen at the
/// previous end state, constant in τ.
pub fn uncontrolled_first(state: &NsState, scheme: &NsScheme) -> Result<VectorTrajectory> {
    uncontrolled_first_with(state, scheme, scheme.cfg.substeps)
}

/// Control update: r^l(τ) = r^{l−1} − (v*(τ) − v^r(l−1, ·)).
pub fn control_update(mut state: NsState, vstar: &VectorTrajectory) -> NsState {
    let samples = vstar
        .samples
        .iter()
        .map(|v| &(&state.r_end - v) + &state.v_end)
        .collect();
    state.r_traj = Some(VectorTrajectory {
        tau0: vstar.tau0,
        samples,
    });
    state
}

/// Controlled first iterate v^{r,1,l} = v* + δr^l, evaluated literally so
/// the cancellation to the previous end state is a measured fact.
pub fn controlled_first(state: &NsState, vstar: &VectorTrajectory) -> VectorTrajectory {
    let r_traj = state.r_traj.as_ref().expect("control update done");
    let samples = vstar
        .samples
        .iter()
        .zip(&r_traj.samples)
        .map(|(v, r)| &(v + r) - &state.r_end)
        .collect();
    VectorTrajectory {
        tau0: vstar.tau0,
        samples,
    }
}

/// Control-field terms of the iterate sources that do not depend on the
/// running iterate, precomputed once per macro step: per substep,
/// ∂r/∂τ − ρνΔr + ρ(r·∇)r − ρ·PG(Σ r_{k,j}r_{j,k}), and the gradient of r.
struct ControlCache {
    base: Vec<VectorField>,
    r_grad: Vec<[[ScalarField; 3]; 3]>,
}

fn build_control_cache(state: &NsState, scheme: &NsScheme) -> Result<ControlCache> {
    let r_traj = state.r_traj.as_ref().expect("control update done");
    let m = r_traj.substeps();
    let rho = state.rho_l;
    let nu = scheme.cfg.nu;
    let mut base = Vec::with_capacity(m);
    let mut r_grad = Vec::with_capacity(m);
    for step in 0..m {
        let r = &r_traj.samples[step];
        let r_next = &r_traj.samples[step + 1];
        let grad = r.jacobian();
        let pure = nonlinear_source(r, r)?;
        let pg_pure = scheme.pressure_gradient(&pure)?;
        let mut comps = Vec::with_capacity(3);
        for i in 0..3 {
            // ∂r_i/∂τ by forward substep differencing.
            let mut s = (r_next.component(i) - r.component(i)).scaled(m as f64);
            s = s.axpy(-rho * nu, &r.component(i).laplacian());
            for j in 0..3 {
                s = &s + &(r.component(j) * &grad[i][j]).scaled(rho);
            }
            s = s.axpy(-rho, pg_pure.component(i));
            comps.push(s);
        }
        base.push(VectorField::new([
            comps.remove(0),
            comps.remove(0),
            comps.remove(0),
        ])?);
        r_grad.push(grad);
    }
    Ok(ControlCache { base, r_grad })
}

fn controlled_iterate_with(
    state: &NsState,
    prev: &VectorTrajectory,
    scheme: &NsScheme,
    cache: &ControlCache,
    substeps: usize,
) -> Result<VectorTrajectory> {
    let r_traj = state.r_traj.as_ref().expect("control update done");
    let rho = state.rho_l;
    let m = substeps;
    // Drift v^{r,k} − r^l absorbs the r-advection of the momentum equation.
    let coeff: Vec<VectorField> = (0..m)
        .map(|step| &prev.samples[step] - &r_traj.samples[step])
        .collect();
    // Iterate-dependent sources, frozen at the previous iterate per substep.
    let mut sources: [Vec<ScalarField>; 3] = [
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
    ];
    for step in 0..m {
        let v = &prev.samples[step];
        let r = &r_traj.samples[step];
        let nl = nonlinear_source(v, v)?;
        let cross = nonlinear_source(v, r)?;
        let pg_nl = scheme.pressure_gradient(&nl)?;
        let pg_cross = scheme.pressure_gradient(&cross)?;
        for i in 0..3 {
            let mut s = cache.base[step].component(i).clone();
            for j in 0..3 {
                s = &s + &(v.component(j) * &cache.r_grad[step][i][j]).scaled(rho);
            }
            s = s.axpy(rho, pg_nl.component(i));
            s = s.axpy(-2.0 * rho, pg_cross.component(i));
            if !s.is_finite() {
                return Err(Error::NonFinite("controlled iterate source"));
            }
            sources[i].push(s);
        }
    }
    let tau0 = (state.l - 1) as f64;
    let mut parts = Vec::with_capacity(3);
    for i in 0..3 {
        parts.push(solve(&AdvectionDiffusionProblem {
            rho,
            nu: scheme.cfg.nu,
            coeff: Coefficient::PerSubstep(&coeff),
            source: SourceTerm::PerSubstep(&sources[i]),
            initial: state.v_end.component(i),
            substeps: m,
            tau0,
        })?);
    }
    VectorTrajectory::from_components([parts.remove(0), parts.remove(0), parts.remove(0)])
}

/// One controlled Picard update v^{r,k} → v^{r,k+1}. `state.r_traj` must be
/// set by [`control_update`].
pub fn controlled_iterate(
    state: &NsState,
    prev: &VectorTrajectory,
    scheme: &NsScheme,
) -> Result<VectorTrajectory> {
    let cache = build_control_cache(state, scheme)?;
    controlled_iterate_with(state, prev, scheme, &cache, prev.substeps())
}

/// Per-macro-step report: the inner iteration records plus the control
/// diagnostics.
#[derive(Debug, Clone)]
pub struct NsStepReport {
    pub iterations: IterationReport,
    /// max over substeps of |v^{r,1,l}(τ) − v^r(l−1)|_{L∞}; zero up to
    /// roundoff by the control identity.
    pub control_identity_residual: f64,
    /// Jump of ∂r/∂τ across the step boundary (one-sided differences), 0.0
    /// at the first step.
    pub control_rate_mismatch: f64,
}

/// Run one macro step: first iterate, control update, controlled Picard
/// iteration to tolerance; advances `v_end`, `r_end` and the ledger.
/// `rho_override` forces a step size (the contraction studies use it);
/// otherwise the practical budget applies. Substeps grow as needed to keep
/// the explicit advection inside its CFL bound.
pub fn run_time_step(
    mut state: NsState,
    scheme: &NsScheme,
    rho_override: Option<f64>,
) -> Result<(NsState, NsStepReport)> {
    let start = Instant::now();
    let cfg = &scheme.cfg;
    let coeff_sup = state.v_end.sup_norm() + state.r_end.sup_norm();
    state.rho_l = match rho_override {
        Some(rho) => rho,
        None => practical_budget(cfg.c, state.l, coeff_sup),
    };
    let h = state.v_end.grid().spacing();
    let needed = (2.5 * state.rho_l * (1.0 + 2.0 * coeff_sup) / h).ceil() as usize;
    let substeps = cfg.substeps.max(needed.next_power_of_two()).max(8);
    let tau0 = (state.l - 1) as f64;

    let vstar = uncontrolled_first_with(&state, scheme, substeps)?;
    let mut state = control_update(state, &vstar);
    let first = controlled_first(&state, &vstar);
    let base = VectorTrajectory::constant(&state.v_end, substeps, tau0);
    let control_identity_residual = first.increment_sup(&base);

    let cache = build_control_cache(&state, scheme)?;
    let mut prev = base;
    let mut report = IterationReport::default();
    let mut last: Option<(f64, f64)> = None;
    let mut k = 1usize;
    let mut converged = false;
    while !converged && k < cfg.kmax {
        let next = controlled_iterate_with(&state, &prev, scheme, &cache, substeps)?;
        let (h2, h2inf) = next.increment_norms(&prev);
        report.increments.push(IncrementRecord {
            h2,
            h2inf,
            ratio_h2: last.map(|(p, _)| if p > 0.0 { h2 / p } else { 0.0 }),
            ratio_h2inf: last.map(|(_, p)| if p > 0.0 { h2inf / p } else { 0.0 }),
            leray_l2: 0.0,
        });
        prev = next;
        last = Some((h2, h2inf));
        k += 1;
        converged = h2 <= cfg.tol;
    }
    report.k_final = k;
    report.converged = converged;

    let r_traj = state.r_traj.clone().expect("set above");
    // Boundary τ-derivative mismatch of r against the previous window.
    let m = r_traj.substeps() as f64;
    let new_rate = (&r_traj.samples[1] - &r_traj.samples[0]).scaled(m);
    let control_rate_mismatch = state
        .r_rate_end
        .as_ref()
        .map(|old| (&new_rate - old).sup_norm())
        .unwrap_or(0.0);
    state.r_rate_end = Some(
        (&r_traj.samples[r_traj.substeps()] - &r_traj.samples[r_traj.substeps() - 1]).scaled(m),
    );

    state.v_end = prev.end().clone();
    state.r_end = r_traj.end().clone();
    let leray_l2 = scheme
        .leray_forcing(&state.v_end, &state.r_end)?
        .l2_norm();
    let recovered = recover_velocity(&state);
    let row = LedgerRow {
        l: state.l,
        rho_l: state.rho_l,
        k_iters: k,
        h2_norm: state.v_end.h2_norm_max(),
        h2inf_norm: state.v_end.h2inf_norm_max(),
        contraction_ratio_max: report.max_ratio_h2(),
        leray_l2,
        div_max: recovered.divergence().sup_norm(),
        runtime_ms: start.elapsed().as_millis() as u64,
    };
    state.ledger.push(row)?;
    state.l += 1;
    Ok((
        state,
        NsStepReport {
            iterations: report,
            control_identity_residual,
            control_rate_mismatch,
        },
    ))
}

/// Chain `steps` macro steps.
pub fn run(
    initial: &VectorField,
    steps: usize,
    scheme: &NsScheme,
) -> Result<(NsState, Vec<NsStepReport>)> {
    let mut state = NsState::new(initial.clone(), &scheme.cfg);
    let mut reports = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, report) = run_time_step(state, scheme, None)?;
        state = next;
        reports.push(report);
    }
    Ok((state, reports))
}

/// Measure the constants record on the current state: sup bounds of v^r and
/// r, the split norms, the shared product constant, and the fitted-majorant
/// time integral; every entry floored at 1.
pub fn estimate_constants(
    state: &NsState,
    splits: &[KernelSplit; 3],
    cfg: &NsConfig,
) -> Result<ConstantsRecord> {
    let c_l = state.v_end.h2inf_norm_max().max(1.0);
    let c_r = match &state.r_traj {
        Some(traj) => traj
            .samples
            .iter()
            .step_by((traj.substeps() / 4).max(1))
            .map(|r| r.h2inf_norm_max())
            .fold(state.r_end.h2inf_norm_max(), f64::max),
        None => state.r_end.h2inf_norm_max(),
    }
    .max(1.0);
    let c_k = splits
        .iter()
        .map(|s| s.near.l1_norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let c_k2 = splits
        .iter()
        .map(|s| s.far.h2_norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let c_s = crate::diagnostics::product_constant(state.v_end.grid(), 7, 20).max(1.0);
    let drift = &state.v_end - &state.r_end;
    let zero = ScalarField::zeros(state.v_end.grid());
    let problem = AdvectionDiffusionProblem {
        rho: state.rho_l,
        nu: cfg.nu,
        coeff: Coefficient::Frozen(&drift),
        source: SourceTerm::None,
        initial: &zero,
        substeps: cfg.substeps,
        tau0: 0.0,
    };
    let candidate = crate::kernels::GaussianMajorant::new(1.0, 1.0, 0, 0.75)?;
    let majorant = check_gaussian_majorant(&problem, &candidate)?;
    let c_prime = majorant.time_integrated_l1.max(1.0);
    Ok(ConstantsRecord {
        c_l,
        c_r,
        c_k,
        c_k2,
        c_s,
        c_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_kernel_split, CutoffStyle};
    use crate::oracles::beltrami;
    use crate::testutil::grid_2pi;
    use approx::assert_relative_eq;

    fn scheme(grid: Grid, cfg: NsConfig) -> NsScheme {
        NsScheme::new(grid, cfg, CutoffSpec::default_for(grid)).unwrap()
    }

    #[test]
    fn step_size_formula_worked_example() {
        let sizes = step_size_controlled(&ConstantsRecord::unit(), 3).unwrap();
        assert_relative_eq!(sizes.controlled, 1.0 / 20736.0, max_relative = 1e-12);
        assert_relative_eq!(sizes.controlled, 4.823e-5, max_relative = 1e-3);
        assert!(sizes.uncontrolled > 0.0);
    }

    #[test]
    fn step_size_halves_when_bounds_double() {
        let mut c = ConstantsRecord::unit();
        let base = step_size_controlled(&c, 3).unwrap().controlled;
        c.c_l = 2.0;
        c.c_r = 2.0;
        let doubled = step_size_controlled(&c, 3).unwrap().controlled;
        assert_relative_eq!(doubled, base / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn step_size_rejects_sub_unit_constants() {
        let mut c = ConstantsRecord::unit();
        c.c_s = 0.5;
        assert!(matches!(
            step_size_controlled(&c, 3),
            Err(Error::ConstantBelowFloor { name: "C_s", .. })
        ));
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = grid_2pi(16);
        let cfg = NsConfig::default();
        let sch = scheme(grid, cfg);
        let (state, reports) = run(&VectorField::zeros(grid), 1, &sch).unwrap();
        assert_eq!(state.v_end.sup_norm(), 0.0);
        assert_eq!(state.r_end.sup_norm(), 0.0);
        assert!(reports[0].control_identity_residual < 1e-15);
    }

    #[test]
    fn control_update_identities() {
        let grid = grid_2pi(16);
        let cfg = NsConfig::default();
        let sch = scheme(grid, cfg);
        let (v0, _) = beltrami(grid, 0.0, cfg.nu, (0.3, 0.2, 0.1));
        let mut state = NsState::new(v0, &cfg);
        state.rho_l = 0.05;
        let vstar = uncontrolled_first(&state, &sch).unwrap();
        // v* starts at v_end, so δr(l−1) = 0 and r_traj(l−1) = r_end.
        assert!((&vstar.samples[0] - &state.v_end).sup_norm() < 1e-15);
        let state = control_update(state, &vstar);
        let r_traj = state.r_traj.as_ref().unwrap();
        assert!((&r_traj.samples[0] - &state.r_end).sup_norm() < 1e-15);
        // Controlled first iterate cancels to v_end at every substep.
        let first = controlled_first(&state, &vstar);
        for s in &first.samples {
            assert!((s - &state.v_end).sup_norm() <= 1e-12);
        }
    }

    #[test]
    fn zero_control_with_constant_vstar_keeps_r_zero() {
        let grid = grid_2pi(16);
        let cfg = NsConfig::default();
        let state = NsState::new(VectorField::zeros(grid), &cfg);
        let vstar = VectorTrajectory::constant(&state.v_end, 8, 0.0);
        let state = control_update(state, &vstar);
        assert_eq!(state.r_traj.unwrap().end().sup_norm(), 0.0);
    }

    #[test]
    fn controlled_iterate_with_zero_control_is_uncontrolled_picard() {
        let grid = grid_2pi(16);
        let cfg = NsConfig {
            substeps: 8,
            ..Default::default()
        };
        let sch = scheme(grid, cfg);
        let (v0, _) = beltrami(grid, 0.0, cfg.nu, (0.3, 0.2, 0.1));
        let mut state = NsState::new(v0.clone(), &cfg);
        state.rho_l = 0.03;
        state.r_traj = Some(VectorTrajectory::constant(
            &VectorField::zeros(grid),
            cfg.substeps,
            0.0,
        ));
        let prev = VectorTrajectory::constant(&state.v_end, cfg.substeps, 0.0);
        let got = controlled_iterate(&state, &prev, &sch).unwrap();

        // Manual uncontrolled Picard step: drift prev, Leray source of prev.
        let mut manual_parts = Vec::new();
        for i in 0..3 {
            let mut srcs = Vec::new();
            for step in 0..cfg.substeps {
                let v = &prev.samples[step];
                let pg = pressure_gradient_spectral(&nonlinear_source(v, v).unwrap());
                srcs.push(pg.component(i).scaled(state.rho_l));
            }
            manual_parts.push(
                solve(&AdvectionDiffusionProblem {
                    rho: state.rho_l,
                    nu: cfg.nu,
                    coeff: Coefficient::PerSubstep(&prev.samples),
                    source: SourceTerm::PerSubstep(&srcs),
                    initial: state.v_end.component(i),
                    substeps: cfg.substeps,
                    tau0: 0.0,
                })
                .unwrap(),
            );
        }
        let manual = VectorTrajectory::from_components([
            manual_parts.remove(0),
            manual_parts.remove(0),
            manual_parts.remove(0),
        ])
        .unwrap();
        let diff = got.increment_sup(&manual);
        assert!(diff < 1e-10, "diff = {diff}");
    }

    #[test]
    fn shear_data_reduces_to_pure_advection_diffusion() {
        let grid = grid_2pi(16);
        let cfg = NsConfig {
            substeps: 16,
            ..Default::default()
        };
        let sch = scheme(grid, cfg);
        let shear = VectorField::new([
            ScalarField::from_fn(grid, |_, y, _| 0.3 * y.sin()),
            ScalarField::zeros(grid),
            ScalarField::zeros(grid),
        ])
        .unwrap();
        let mut state = NsState::new(shear.clone(), &cfg);
        state.rho_l = 0.05;
        let vstar = uncontrolled_first(&state, &sch).unwrap();
        for i in 0..3 {
            let plain = solve(&AdvectionDiffusionProblem {
                rho: state.rho_l,
                nu: cfg.nu,
                coeff: Coefficient::Frozen(&shear),
                source: SourceTerm::None,
                initial: shear.component(i),
                substeps: cfg.substeps,
                tau0: 0.0,
            })
            .unwrap();
            for (a, b) in vstar.samples.iter().zip(&plain.samples) {
                assert!((a.component(i) - b).sup_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn picard_fixed_point_is_stationary() {
        let grid = grid_2pi(16);
        let cfg = NsConfig {
            substeps: 8,
            tol: 1e-14,
            kmax: 40,
            ..Default::default()
        };
        let sch = scheme(grid, cfg);
        let (v0, _) = beltrami(grid, 0.0, cfg.nu, (0.2, 0.15, 0.1));
        let mut state = NsState::new(v0, &cfg);
        state.rho_l = 0.02;
        let vstar = uncontrolled_first(&state, &sch).unwrap();
        let state = control_update(state, &vstar);
        let mut prev = VectorTrajectory::constant(&state.v_end, cfg.substeps, 0.0);
        for _ in 0..30 {
            prev = controlled_iterate(&state, &prev, &sch).unwrap();
        }
        let next = controlled_iterate(&state, &prev, &sch).unwrap();
        let (h2, _) = next.increment_norms(&prev);
        assert!(h2 <= 1e-10, "residual {h2}");
    }

    #[test]
    fn one_macro_step_tracks_beltrami() {
        let grid = grid_2pi(32);
        let amps = (0.3, 0.25, 0.2);
        let cfg = NsConfig {
            nu: 0.1,
            c: 0.04,
            ..Default::default()
        };
        let sch = scheme(grid, cfg);
        let (v0, _) = beltrami(grid, 0.0, cfg.nu, amps);
        let (state, reports) = run(&v0, 1, &sch).unwrap();
        assert!(reports[0].iterations.converged);
        assert!(reports[0].control_identity_residual <= 1e-12);
        let (want, _) = beltrami(grid, state.rho_l, cfg.nu, amps);
        let v = recover_velocity(&state);
        let rel = (&v - &want).l2_norm() / want.l2_norm();
        assert!(rel <= 2e-3, "rel = {rel}");
        assert!(v.divergence().sup_norm() <= 1e-6);
    }

    #[test]
    fn recovered_velocity_telescopes_through_control() {
        let grid = grid_2pi(16);
        let cfg = NsConfig::default();
        let sch = scheme(grid, cfg);
        let (v0, _) = beltrami(grid, 0.0, cfg.nu, (0.2, 0.2, 0.2));
        let mut state = NsState::new(v0, &cfg);
        state.rho_l = 0.03;
        let before = recover_velocity(&state);
        let vstar = uncontrolled_first(&state, &sch).unwrap();
        let state = control_update(state, &vstar);
        // At τ = l−1 the controlled update leaves v^r − r unchanged.
        let r0 = &state.r_traj.as_ref().unwrap().samples[0];
        let after = &state.v_end - r0;
        assert!((&before - &after).sup_norm() < 1e-12);
    }

    #[test]
    fn growth_per_step_is_bounded() {
        let grid = grid_2pi(16);
        let cfg = NsConfig {
            c: 0.05,
            ..Default::default()
        };
        let sch = scheme(grid, cfg);
        let (v0, _) = beltrami(grid, 0.0, cfg.nu, (0.4, 0.3, 0.2));
        let (state, _) = run(&v0, 4, &sch).unwrap();
        let mut prev = state.initial_h2;
        for row in state.ledger.rows() {
            assert!(row.h2_norm <= prev + 1.0, "step {} grew too much", row.l);
            prev = row.h2_norm;
        }
    }

    #[test]
    fn estimate_constants_floor_on_zero_state() {
        let grid = grid_2pi(32);
        let cfg = NsConfig::default();
        let state = NsState::new(VectorField::zeros(grid), &cfg);
        let spec = CutoffSpec::new(grid.box_length() / 8.0, CutoffStyle::SmoothBump);
        let splits = [
            build_kernel_split(grid, 0, &spec).unwrap(),
            build_kernel_split(grid, 1, &spec).unwrap(),
            build_kernel_split(grid, 2, &spec).unwrap(),
        ];
        let c = estimate_constants(&state, &splits, &cfg).unwrap();
        assert_eq!(c.c_l, 1.0);
        assert_eq!(c.c_r, 1.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn estimate_constants_sharp_kernel_l1() {
        // Box of length 16 keeps R/2 above the unit floor of the record.
        let grid = Grid::new(64, 16.0).unwrap();
        let cfg = NsConfig::default();
        let state = NsState::new(VectorField::zeros(grid), &cfg);
        let r = grid.box_length() / 4.5;
        let spec = CutoffSpec::new(r, CutoffStyle::Sharp);
        let splits = [
            build_kernel_split(grid, 0, &spec).unwrap(),
            build_kernel_split(grid, 1, &spec).unwrap(),
            build_kernel_split(grid, 2, &spec).unwrap(),
        ];
        let c = estimate_constants(&state, &splits, &cfg).unwrap();
        // N = 64 carries the coarse-grid origin-cell deficit; the N = 128
        // acceptance check is the 5% one.
        assert_relative_eq!(c.c_k, r / 2.0, max_relative = 0.08);
    }
}
