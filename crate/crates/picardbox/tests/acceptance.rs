//! End-to-end verification suite. Every criterion prints one pass/fail line;
//! the test fails if any criterion fails. Criteria run in order inside one
//! test so the boundedness audit (criterion 10) can consume the sup-norm
//! ledgers of the scheme runs in criteria 4-8.

use picardbox::burgers::{self, BurgersConfig, BurgersState};
use picardbox::diagnostics::{growth_audit, verify_inequality_suite};
use picardbox::field::{Grid, ScalarField, Space, VectorField};
use picardbox::kernels::{build_kernel_split, CutoffSpec, CutoffStyle, GaussianMajorant};
use picardbox::leray::{nonlinear_source, pressure_gradient_spectral, KernelProjector, LerayPath};
use picardbox::navier_stokes::{
    self, estimate_constants, recover_velocity, step_size_controlled, NsConfig, NsScheme, NsState,
};
use picardbox::oracles::{beltrami, cole_hopf, compact_solenoidal, reference_projection_solver};
use picardbox::parabolic::{
    check_gaussian_majorant, AdvectionDiffusionProblem, Coefficient, SourceTerm,
};
use std::f64::consts::PI;
use std::time::Instant;

const TWO_PI: f64 = 2.0 * PI;

struct Outcome {
    name: String,
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(name: &str, pass: bool, detail: String) -> Outcome {
        Outcome {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Sup-norm audit data of one scheme run: (label, initial sup, per-step sup).
struct SupTrace {
    label: String,
    initial: f64,
    steps: Vec<f64>,
}

fn grid(n: usize) -> Grid {
    Grid::new(n, TWO_PI).expect("valid grid")
}

fn criterion_1() -> Outcome {
    let report = verify_inequality_suite(grid(32), 7, 100);
    let pass = report.violations == 0
        && report.young_l2_min_ratio >= 1.0
        && report.young_linf_min_ratio >= 1.0;
    Outcome::new(
        "1 young-inequality suite",
        pass,
        format!(
            "violations={} min_slack_l2={:.4} min_slack_linf={:.4}",
            report.violations, report.young_l2_min_ratio, report.young_linf_min_ratio
        ),
    )
}

fn criterion_2() -> Outcome {
    let base = grid(128);
    // Near part: sharp truncation, L¹ → R/2 on the working grid.
    let r_near = base.box_length() / 4.5;
    let near_split = build_kernel_split(base, 0, &CutoffSpec::new(r_near, CutoffStyle::Sharp))
        .expect("resolvable");
    let near_l1 = near_split.near.norm(Space::L1).expect("l1");
    let near_rel = (near_l1 - r_near / 2.0).abs() / (r_near / 2.0);
    drop(near_split);

    // Far part: Σ_i L²-norm² → 1/(4πR); the tail needs a padded sampling
    // grid (×4) to capture 1/(4πR) within tolerance.
    let padded = base.padded(4).expect("padded grid");
    let r_far = base.box_length() / 16.0;
    let mut far_sum = 0.0;
    for axis in 0..3 {
        let split = build_kernel_split(padded, axis, &CutoffSpec::new(r_far, CutoffStyle::Sharp))
            .expect("resolvable");
        far_sum += split.far.norm(Space::L2).expect("l2").powi(2);
    }
    let far_want = 1.0 / (4.0 * PI * r_far);
    let far_rel = (far_sum - far_want).abs() / far_want;
    let pass = near_rel <= 0.05 && far_rel <= 0.05;
    Outcome::new(
        "2 kernel-split norms",
        pass,
        format!(
            "near R/2 rel={near_rel:.4} (R={r_near:.3}), far 1/(4piR) rel={far_rel:.4} (R={r_far:.3})"
        ),
    )
}

fn criterion_3() -> Outcome {
    let base = grid(64);
    let spec = CutoffSpec::new(base.box_length() / 8.0, CutoffStyle::SmoothBump);
    let projectors: Vec<KernelProjector> = [1usize, 2, 4]
        .iter()
        .map(|&p| KernelProjector::new(base, p, &spec).expect("projector"))
        .collect();
    let fields = [
        (1.7, [0.0, 0.2, -0.15]),
        (1.9, [0.25, -0.1, 0.0]),
        (2.0, [0.0, 0.0, 0.2]),
        (2.2, [-0.2, 0.15, 0.1]),
        (2.4, [0.1, 0.0, -0.1]),
    ];
    let mut pass = true;
    let mut worst2 = 0.0f64;
    let mut detail = String::new();
    for (idx, (radius, offset)) in fields.iter().enumerate() {
        let v = compact_solenoidal(base, 1.0, *radius, *offset);
        let source = nonlinear_source(&v, &v).expect("source");
        let mut errs = Vec::new();
        for proj in &projectors {
            let (kern, check) = proj.pressure_gradient(&source).expect("kernel path");
            pass &= check.ok();
            let embedded = proj.embed(&source).expect("embed");
            let oracle = pressure_gradient_spectral(&embedded);
            let mut parts = Vec::new();
            for axis in 0..3 {
                parts.push(proj.restrict(oracle.component(axis)));
            }
            let oracle = VectorField::new([parts.remove(0), parts.remove(0), parts.remove(0)])
                .expect("grid");
            errs.push((&kern - &oracle).l2_norm() / oracle.l2_norm());
        }
        let monotone = errs[0] > errs[1] && errs[1] > errs[2];
        pass &= errs[1] <= 0.02 && monotone;
        worst2 = worst2.max(errs[1]);
        detail.push_str(&format!(
            "f{idx}: {:.4}/{:.4}/{:.4}{} ",
            errs[0],
            errs[1],
            errs[2],
            if monotone { "" } else { " NOT-MONOTONE" }
        ));
    }
    Outcome::new(
        "3 leray cross-validation",
        pass,
        format!("worst pad2 rel={worst2:.4}; per-field pad1/2/4: {detail}"),
    )
}

fn criterion_4() -> (Outcome, SupTrace) {
    let g = grid(64);
    let a = 0.1;
    let phi = ScalarField::from_fn(g, move |x, y, z| a * (x.sin() + y.sin() + z.sin()));
    let u0 = VectorField::new([
        phi.derivative(0).unwrap(),
        phi.derivative(1).unwrap(),
        phi.derivative(2).unwrap(),
    ])
    .unwrap();
    let cfg = BurgersConfig {
        nu: 0.1,
        c: 0.1,
        tol: 1e-10,
        kmax: 20,
        substeps: 32,
    };
    let mut state = BurgersState::new(u0.clone(), &cfg);
    let mut trace = SupTrace {
        label: "burgers cole-hopf".into(),
        initial: u0.sup_norm(),
        steps: Vec::new(),
    };
    let mut all_converged = true;
    let mut worst_ratio = 0.0f64;
    let mut rho_is_harmonic = true;
    for l in 1..=10 {
        let (next, report) = burgers::run_time_step(state, &cfg).expect("step");
        state = next;
        all_converged &= report.converged;
        worst_ratio = worst_ratio.max(report.max_ratio_h2());
        rho_is_harmonic &= (state.ledger.rows()[l - 1].rho_l - 0.1 / l as f64).abs() < 1e-15;
        trace.steps.push(state.u_end.sup_norm());
    }
    let exact = cole_hopf(&phi, cfg.nu, state.physical_time).expect("oracle");
    let err = (&state.u_end - &exact).sup_norm();
    let pass = err <= 5e-3 && all_converged && worst_ratio <= 0.5 + 1e-3 && rho_is_harmonic;
    (
        Outcome::new(
            "4 burgers vs cole-hopf",
            pass,
            format!(
                "sup err={err:.3e} at t={:.4}, converged={all_converged}, worst ratio={worst_ratio:.3e}"
            , state.physical_time),
        ),
        trace,
    )
}

fn criterion_5_6() -> (Outcome, Outcome, SupTrace) {
    let g = grid(32);
    let nu = 0.1;
    let amps = (0.3, 0.24, 0.18);
    let cfg = NsConfig {
        nu,
        c: 0.04,
        tol: 1e-10,
        kmax: 30,
        substeps: 32,
        leray: LerayPath::Spectral,
    };
    let scheme = NsScheme::new(g, cfg, CutoffSpec::new(g.box_length() / 8.0, CutoffStyle::SmoothBump))
        .expect("scheme");
    let (v0, _) = beltrami(g, 0.0, nu, amps);
    let state = NsState::new(v0.clone(), &cfg);
    let (state, report) = navier_stokes::run_time_step(state, &scheme, None).expect("step");
    let rho = state.rho_l;
    let recovered = recover_velocity(&state);
    let (exact, _) = beltrami(g, rho, nu, amps);
    let rel_exact = (&recovered - &exact).l2_norm() / exact.l2_norm();
    let reference = reference_projection_solver(&v0, nu, rho, 1e-3).expect("reference");
    let rel_ref = (&recovered - &reference).l2_norm() / reference.l2_norm();
    let pass5 = rho <= 0.05 && rel_exact <= 2e-3 && rel_ref <= 2e-3 && report.iterations.converged;
    let out5 = Outcome::new(
        "5 ns vs beltrami",
        pass5,
        format!("rho1={rho:.3} rel_exact={rel_exact:.3e} rel_reference={rel_ref:.3e}"),
    );

    // Criterion 6 on the same macro step plus an independent repeat on
    // random solenoidal data.
    let mut residuals = vec![report.control_identity_residual];
    let mut rng = picardbox::diagnostics::corpus_rng(11);
    let w0 = picardbox::diagnostics::random_solenoidal(g, &mut rng, 0.4);
    let (_, wreport) =
        navier_stokes::run_time_step(NsState::new(w0, &cfg), &scheme, None).expect("step");
    residuals.push(wreport.control_identity_residual);
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    let out6 = Outcome::new(
        "6 control identity",
        worst <= 1e-12,
        format!("max |v^r1 - v_end|_sup over substeps = {worst:.3e}"),
    );
    let trace = SupTrace {
        label: "ns beltrami one step".into(),
        initial: v0.sup_norm(),
        steps: vec![recovered.sup_norm()],
    };
    (out5, out6, trace)
}

fn contraction_corpus(g: Grid) -> Vec<(String, VectorField)> {
    let mut corpus = Vec::new();
    for (tag, amp) in [("beltrami a=0.15", 0.15), ("beltrami a=0.3", 0.3), ("beltrami a=0.6", 0.6)]
    {
        corpus.push((
            tag.to_string(),
            beltrami(g, 0.0, 0.1, (amp, 0.8 * amp, 0.6 * amp)).0,
        ));
    }
    for seed in [7u64, 8, 9] {
        let mut rng = picardbox::diagnostics::corpus_rng(seed);
        corpus.push((
            format!("solenoidal seed={seed}"),
            picardbox::diagnostics::random_solenoidal(g, &mut rng, 0.3),
        ));
    }
    corpus
}

fn criterion_7(traces: &mut Vec<SupTrace>) -> Outcome {
    let g = grid(32);
    let cfg = NsConfig {
        nu: 0.1,
        c: 0.05,
        tol: 1e-10,
        kmax: 30,
        substeps: 32,
        leray: LerayPath::Spectral,
    };
    let spec = CutoffSpec::new(g.box_length() / 8.0, CutoffStyle::SmoothBump);
    let scheme = NsScheme::new(g, cfg, spec).expect("scheme");
    let splits = [
        build_kernel_split(g, 0, &spec).expect("split"),
        build_kernel_split(g, 1, &spec).expect("split"),
        build_kernel_split(g, 2, &spec).expect("split"),
    ];
    let mut pass_budget = true;
    let mut any_violation_at_10x = false;
    let mut detail = String::new();
    for (tag, v0) in contraction_corpus(g) {
        let mut state = NsState::new(v0.clone(), &cfg);
        state.rho_l = navier_stokes::practical_budget(cfg.c, 1, v0.sup_norm());
        let constants = estimate_constants(&state, &splits, &cfg).expect("constants");
        let rho_star = step_size_controlled(&constants, 3).expect("formula").controlled;

        let (s1, r1) =
            navier_stokes::run_time_step(NsState::new(v0.clone(), &cfg), &scheme, Some(rho_star))
                .expect("step");
        let ratios = (r1.iterations.max_ratio_h2(), r1.iterations.max_ratio_h2inf());
        pass_budget &= ratios.0 <= 0.5 + 1e-3 && ratios.1 <= 0.5 + 1e-3;
        traces.push(SupTrace {
            label: format!("ns contraction {tag}"),
            initial: v0.sup_norm(),
            steps: vec![recover_velocity(&s1).sup_norm()],
        });

        let (_, r10) = navier_stokes::run_time_step(
            NsState::new(v0.clone(), &cfg),
            &scheme,
            Some(10.0 * rho_star),
        )
        .expect("step");
        let ratios10 = (
            r10.iterations.max_ratio_h2(),
            r10.iterations.max_ratio_h2inf(),
        );
        any_violation_at_10x |= ratios10.0 > 0.5 || ratios10.1 > 0.5;
        detail.push_str(&format!(
            "[{tag}: rho*={rho_star:.2e} r={:.1e}/{:.1e} r10={:.1e}/{:.1e}] ",
            ratios.0, ratios.1, ratios10.0, ratios10.1
        ));
    }
    let pass = pass_budget && any_violation_at_10x;
    Outcome::new(
        "7 controlled contraction",
        pass,
        format!(
            "budget ratios ok={pass_budget}, sensitivity at 10x tripped={any_violation_at_10x}; {detail}"
        ),
    )
}

fn criterion_8(traces: &mut Vec<SupTrace>) -> Outcome {
    let g = grid(32);
    let cfg = NsConfig {
        nu: 0.1,
        c: 0.05,
        tol: 1e-10,
        kmax: 30,
        substeps: 32,
        leray: LerayPath::Spectral,
    };
    let scheme = NsScheme::new(g, cfg, CutoffSpec::new(g.box_length() / 8.0, CutoffStyle::SmoothBump))
        .expect("scheme");
    let mut rng = picardbox::diagnostics::corpus_rng(7);
    let cases = vec![
        ("beltrami".to_string(), beltrami(g, 0.0, cfg.nu, (0.3, 0.24, 0.18)).0),
        (
            "random-solenoidal".to_string(),
            picardbox::diagnostics::random_solenoidal(g, &mut rng, 0.3),
        ),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (tag, v0) in cases {
        let h_norm = v0.h2_norm_max();
        let mut state = NsState::new(v0.clone(), &cfg);
        let mut trace = SupTrace {
            label: format!("ns growth {tag}"),
            initial: v0.sup_norm(),
            steps: Vec::new(),
        };
        let mut converged = true;
        for _ in 0..10 {
            let (next, report) = navier_stokes::run_time_step(state, &scheme, None).expect("step");
            state = next;
            converged &= report.iterations.converged;
            trace.steps.push(recover_velocity(&state).sup_norm());
        }
        let (c2_star, audit_pass) = growth_audit(&state.ledger, h_norm);
        let mut linear_ok = true;
        for row in state.ledger.rows() {
            linear_ok &= row.h2_norm <= h_norm + row.l as f64 * c2_star + 1e-9;
        }
        pass &= audit_pass && c2_star <= 1.0 && linear_ok && converged;
        detail.push_str(&format!("[{tag}: C2*={c2_star:.3e} audit={audit_pass}] "));
        traces.push(trace);
    }
    Outcome::new("8 linear growth ledger", pass, detail)
}

fn criterion_9() -> Outcome {
    let g = grid(32);
    let zero_b = VectorField::zeros(g);
    let init = ScalarField::zeros(g);
    let rho = 0.4;
    let nu = 0.5;
    let problem = AdvectionDiffusionProblem {
        rho,
        nu,
        coeff: Coefficient::Frozen(&zero_b),
        source: SourceTerm::None,
        initial: &init,
        substeps: 32,
        tau0: 0.0,
    };
    let candidate = GaussianMajorant::new(2.0, 1.0 / (rho * nu), 0, 0.75).expect("majorant");
    let free = check_gaussian_majorant(&problem, &candidate).expect("fit");
    let nu_eff = rho * nu;
    let c_want = (4.0 * PI * nu_eff).powf(-1.5);
    let c_rel = (free.fitted.scale - c_want).abs() / c_want;
    let lambda_rel = (free.fitted.lambda - 1.0 / nu_eff).abs() / (1.0 / nu_eff);

    let mut rng = picardbox::diagnostics::corpus_rng(5);
    let b = picardbox::diagnostics::random_solenoidal(g, &mut rng, 0.8);
    let drift_problem = AdvectionDiffusionProblem {
        rho,
        nu,
        coeff: Coefficient::Frozen(&b),
        source: SourceTerm::None,
        initial: &init,
        substeps: 32,
        tau0: 0.0,
    };
    let drift = check_gaussian_majorant(&drift_problem, &candidate).expect("fit");
    let finite = drift.fitted.scale.is_finite()
        && drift.fitted.scale > 0.0
        && drift.fitted.lambda > 0.0
        && drift.time_integrated_l1.is_finite()
        && drift.time_integrated_l1 > 0.0;
    let pass = c_rel <= 0.10 && lambda_rel <= 0.10 && finite;
    Outcome::new(
        "9 gaussian majorant",
        pass,
        format!(
            "heat fit: C rel={c_rel:.3e}, lambda rel={lambda_rel:.3e}; drift fit C={:.3e} lambda={:.3e} C'={:.3e}",
            drift.fitted.scale, drift.fitted.lambda, drift.time_integrated_l1
        ),
    )
}

fn criterion_10(traces: &[SupTrace]) -> Outcome {
    let mut pass = true;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut runs = 0usize;
    for t in traces {
        runs += 1;
        for (idx, s) in t.steps.iter().enumerate() {
            let excess = s - t.initial;
            worst_excess = worst_excess.max(excess);
            if *s > t.initial + 1e-6 {
                pass = false;
                eprintln!(
                    "criterion 10: run `{}` step {} sup {} exceeds initial {}",
                    t.label,
                    idx + 1,
                    s,
                    t.initial
                );
            }
        }
    }
    Outcome::new(
        "10 maximum principle",
        pass,
        format!("{runs} runs audited, worst sup excess = {worst_excess:.3e}"),
    )
}

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();
    let mut traces = Vec::new();
    let started = Instant::now();

    let mut run = |name: &str, outcome: Outcome| {
        println!(
            "criterion {:<28} {}  [{}] ({:.1}s elapsed)",
            outcome.name,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        let _ = name;
        outcomes.push(outcome);
    };

    run("1", criterion_1());
    run("2", criterion_2());
    run("3", criterion_3());
    let (o4, t4) = criterion_4();
    traces.push(t4);
    run("4", o4);
    let (o5, o6, t5) = criterion_5_6();
    traces.push(t5);
    run("5", o5);
    run("6", o6);
    run("7", criterion_7(&mut traces));
    run("8", criterion_8(&mut traces));
    run("9", criterion_9());
    run("10", criterion_10(&traces));

    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.name.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
