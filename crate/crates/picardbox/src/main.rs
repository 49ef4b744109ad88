//! Experiment runner. Every subcommand reads a `key = value` config file and
//! writes CSV/NSF1 outputs into an output directory.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure
//! (non-convergence, CFL violation, failed verification). Failures print a
//! one-line machine-parsable reason. Ledger CSVs are deterministic per
//! (config, seed) in every column except runtime_ms.

use clap::{Parser, Subcommand};
use picardbox::burgers::{self, BurgersState};
use picardbox::config::{Config, InitialKind};
use picardbox::diagnostics::verify_inequality_suite;
use picardbox::error::{Error, Result};
use picardbox::field::{Space, VectorField};
use picardbox::io;
use picardbox::kernels::{build_kernel_split, CutoffSpec, CutoffStyle};
use picardbox::navier_stokes::{
    self, estimate_constants, recover_velocity, step_size_controlled, NsScheme, NsState,
};
use picardbox::oracles::{beltrami, cole_hopf};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "picardbox",
    about = "Time-rescaled Picard schemes for Burgers and Navier-Stokes in a periodic box",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the global Burgers scheme for `steps` macro steps.
    RunBurgers {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's `steps`.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the controlled Navier-Stokes scheme for `steps` macro steps.
    RunNs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Check the split-kernel norms against their closed forms.
    VerifyKernels {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sampled Young/source inequality suite.
    VerifyInequalities {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Measure controlled-scheme contraction ratios on the standard corpus.
    VerifyContraction {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Multiplier on the budgeted step size (sensitivity studies).
        #[arg(long, default_value_t = 1.0)]
        rho_scale: f64,
    },
    /// Measure the constants record and the step size it implies.
    EstimateConstants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the configured oracle field as NSF1.
    DumpOracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Evaluation time of the oracle.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunBurgers { config, out, steps } => run_burgers(&config, &out, steps),
        Command::RunNs { config, out, steps } => run_ns(&config, &out, steps),
        Command::VerifyKernels { config, out } => verify_kernels(&config, &out),
        Command::VerifyInequalities {
            config,
            out,
            trials,
        } => verify_inequalities(&config, &out, trials),
        Command::VerifyContraction {
            config,
            out,
            rho_scale,
        } => verify_contraction(&config, &out, rho_scale),
        Command::EstimateConstants { config, out } => run_estimate_constants(&config, &out),
        Command::DumpOracle { config, out, time } => dump_oracle(&config, &out, time),
    }
}

fn run_burgers(config: &Path, out: &Path, steps: Option<usize>) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let bcfg = cfg.burgers();
    let steps = steps.unwrap_or(cfg.steps);
    let initial = cfg.initial_velocity(grid)?;
    let mut state = BurgersState::new(initial, &bcfg);
    let mut report = String::new();
    for _ in 0..steps {
        let (next, step_report) = burgers::run_time_step(state, &bcfg)?;
        state = next;
        let row = *state.ledger.rows().last().expect("row appended");
        let _ = writeln!(
            report,
            "l={} rho_l={:.6e} iters={} converged={} max_ratio={:.3e} h2={:.6e} sup={:.6e}",
            row.l,
            row.rho_l,
            row.k_iters,
            step_report.converged,
            row.contraction_ratio_max,
            row.h2_norm,
            state.u_end.sup_norm()
        );
        if !step_report.converged {
            state.ledger.write_csv(&out.join("ledger.csv"))?;
            std::fs::write(out.join("report.txt"), report)?;
            return Err(Error::BlowUp(format!(
                "picard non-convergence at l={}",
                row.l
            )));
        }
        if cfg.dump_fields {
            io::write_vector(&state.u_end, out, &format!("u_step{}", row.l))?;
        }
    }
    let _ = writeln!(
        report,
        "physical_time={:.6e} sup_initial={:.6e} sup_final={:.6e}",
        state.physical_time,
        state.initial_sup,
        state.u_end.sup_norm()
    );
    state.ledger.write_csv(&out.join("ledger.csv"))?;
    std::fs::write(out.join("report.txt"), report)?;
    Ok(())
}

fn run_ns(config: &Path, out: &Path, steps: Option<usize>) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let ncfg = cfg.ns();
    let steps = steps.unwrap_or(cfg.steps);
    let initial = cfg.initial_velocity(grid)?;
    let scheme = NsScheme::new(grid, ncfg, cfg.cutoff_spec(grid))?;
    let mut state = NsState::new(initial, &ncfg);
    let mut report = String::new();
    for _ in 0..steps {
        let (next, step_report) = navier_stokes::run_time_step(state, &scheme, None)?;
        state = next;
        let row = *state.ledger.rows().last().expect("row appended");
        let _ = writeln!(
            report,
            "l={} rho_l={:.6e} iters={} converged={} max_ratio_h2={:.3e} h2={:.6e} \
             r_h2={:.6e} leray_l2={:.6e} control_identity={:.3e} rate_jump={:.3e}",
            row.l,
            row.rho_l,
            row.k_iters,
            step_report.iterations.converged,
            row.contraction_ratio_max,
            row.h2_norm,
            state.r_end.h2_norm_max(),
            row.leray_l2,
            step_report.control_identity_residual,
            step_report.control_rate_mismatch,
        );
        if !step_report.iterations.converged {
            state.ledger.write_csv(&out.join("ledger.csv"))?;
            std::fs::write(out.join("report.txt"), report)?;
            return Err(Error::BlowUp(format!(
                "picard non-convergence at l={}",
                row.l
            )));
        }
        if cfg.dump_fields {
            let l = row.l;
            io::write_vector(&state.v_end, out, &format!("v_step{l}"))?;
            io::write_vector(&state.r_end, out, &format!("r_step{l}"))?;
            let gradp = scheme.leray_forcing(&state.v_end, &state.r_end)?;
            io::write_vector(&gradp, out, &format!("gradp_step{l}"))?;
        }
    }
    let recovered = recover_velocity(&state);
    let _ = writeln!(
        report,
        "recovered_sup={:.6e} recovered_div_max={:.3e} initial_sup={:.6e}",
        recovered.sup_norm(),
        recovered.divergence().sup_norm(),
        state.initial_sup
    );
    state.ledger.write_csv(&out.join("ledger.csv"))?;
    std::fs::write(out.join("report.txt"), report)?;
    Ok(())
}

fn verify_kernels(config: &Path, out: &Path) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let mut report = String::new();
    let mut ok = true;

    // Near part: sharp truncation at R = L/4, L¹ norm → R/2.
    let r_near = grid.box_length() / 4.0;
    let near_spec = CutoffSpec::new(r_near, CutoffStyle::Sharp);
    let split = build_kernel_split(grid, 0, &near_spec)?;
    let l1 = split.near.norm(Space::L1)?;
    let near_rel = (l1 - r_near / 2.0).abs() / (r_near / 2.0);
    ok &= near_rel <= 0.05;
    let _ = writeln!(
        report,
        "near_l1={l1:.6e} analytic={:.6e} rel_err={near_rel:.3e} pass={}",
        r_near / 2.0,
        near_rel <= 0.05
    );

    // Far part: sharp truncation at R = L/16 on a padded grid,
    // Σ_i L²-norm² → 1/(4πR).
    let padded = grid.padded(cfg.padding.max(2))?;
    let r_far = grid.box_length() / 16.0;
    let far_spec = CutoffSpec::new(r_far, CutoffStyle::Sharp);
    let mut far_sum = 0.0;
    for axis in 0..3 {
        let s = build_kernel_split(padded, axis, &far_spec)?;
        far_sum += s.far.norm(Space::L2)?.powi(2);
    }
    let far_want = 1.0 / (4.0 * std::f64::consts::PI * r_far);
    let far_rel = (far_sum - far_want).abs() / far_want;
    ok &= far_rel <= 0.05;
    let _ = writeln!(
        report,
        "far_l2_sq_sum={far_sum:.6e} analytic={far_want:.6e} rel_err={far_rel:.3e} pass={}",
        far_rel <= 0.05
    );

    // Split completeness with the configured smooth cutoff.
    let spec = cfg.cutoff_spec(grid);
    let smooth = build_kernel_split(grid, 1, &spec)?;
    if cfg.dump_fields {
        io::write_scalar(&smooth.near, &out.join("kernel_near.nsf1"))?;
        io::write_scalar(&smooth.far, &out.join("kernel_far.nsf1"))?;
    }
    let total = smooth.total();
    let mut worst = 0.0f64;
    let n = grid.points_per_axis();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if (i, j, k) == (0, 0, 0) {
                    continue;
                }
                let x = [
                    grid.signed_coord(i),
                    grid.signed_coord(j),
                    grid.signed_coord(k),
                ];
                let want =
                    picardbox::kernels::poisson_kernel(x, picardbox::kernels::KernelDeriv::Grad(1))?;
                worst = worst.max((total.values()[[i, j, k]] - want).abs());
            }
        }
    }
    ok &= worst <= 1e-12;
    let _ = writeln!(report, "split_completeness_max_err={worst:.3e} pass={}", worst <= 1e-12);

    std::fs::write(out.join("kernels.txt"), &report)?;
    print!("{report}");
    if ok {
        Ok(())
    } else {
        Err(Error::BlowUp("kernel norms outside tolerance".into()))
    }
}

fn verify_inequalities(config: &Path, out: &Path, trials: usize) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let report = verify_inequality_suite(grid, cfg.seed, trials);
    let mut csv = String::from(
        "trials,violations,young_l2_min_ratio,young_linf_min_ratio,source_bound_min_ratio,product_constant\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        report.trials,
        report.violations,
        report.young_l2_min_ratio,
        report.young_linf_min_ratio,
        report.source_bound_min_ratio,
        report.product_constant
    );
    std::fs::write(out.join("inequalities.csv"), csv)?;
    std::fs::write(out.join("inequalities.txt"), report.summary())?;
    println!("{}", report.summary());
    if report.violations == 0 {
        Ok(())
    } else {
        Err(Error::BlowUp(format!(
            "{} inequality violations",
            report.violations
        )))
    }
}

fn contraction_corpus(cfg: &Config, grid: picardbox::field::Grid) -> Vec<(String, VectorField)> {
    let a = cfg.initial_amplitude;
    let mut corpus = Vec::new();
    for (tag, amp) in [("beltrami_half", 0.5 * a), ("beltrami_1x", a), ("beltrami_2x", 2.0 * a)] {
        corpus.push((
            tag.to_string(),
            beltrami(grid, 0.0, cfg.nu, (amp, 0.8 * amp, 0.6 * amp)).0,
        ));
    }
    for offset in 0..3u64 {
        let mut rng = picardbox::diagnostics::corpus_rng(cfg.seed + offset);
        corpus.push((
            format!("solenoidal_seed{}", cfg.seed + offset),
            picardbox::diagnostics::random_solenoidal(grid, &mut rng, a),
        ));
    }
    corpus
}

fn verify_contraction(config: &Path, out: &Path, rho_scale: f64) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let ncfg = cfg.ns();
    let scheme = NsScheme::new(grid, ncfg, cfg.cutoff_spec(grid))?;
    let mut report = String::new();
    let mut worst = 0.0f64;
    let mut all_converged = true;
    for (tag, v0) in contraction_corpus(&cfg, grid) {
        let state = NsState::new(v0.clone(), &ncfg);
        let budget = navier_stokes::practical_budget(
            ncfg.c,
            1,
            v0.sup_norm(),
        );
        let rho = budget * rho_scale;
        let (_, step) = navier_stokes::run_time_step(state, &scheme, Some(rho))?;
        let r_h2 = step.iterations.max_ratio_h2();
        let r_inf = step.iterations.max_ratio_h2inf();
        worst = worst.max(r_h2).max(r_inf);
        all_converged &= step.iterations.converged;
        let _ = writeln!(
            report,
            "case={tag} rho={rho:.6e} budget={budget:.6e} max_ratio_h2={r_h2:.4} \
             max_ratio_h2inf={r_inf:.4} iters={} converged={}",
            step.iterations.k_final, step.iterations.converged
        );
    }
    let pass = worst <= 0.5 + 1e-3 && all_converged;
    let _ = writeln!(report, "worst_ratio={worst:.4} pass={pass}");
    std::fs::write(out.join("contraction.txt"), &report)?;
    print!("{report}");
    if pass {
        Ok(())
    } else {
        Err(Error::BlowUp(format!(
            "contraction ratio {worst:.4} exceeds 1/2"
        )))
    }
}

fn run_estimate_constants(config: &Path, out: &Path) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let ncfg = cfg.ns();
    let spec = cfg.cutoff_spec(grid);
    let sample_grid = if cfg.padding > 1 {
        grid.padded(cfg.padding)?
    } else {
        grid
    };
    let splits = [
        build_kernel_split(sample_grid, 0, &spec)?,
        build_kernel_split(sample_grid, 1, &spec)?,
        build_kernel_split(sample_grid, 2, &spec)?,
    ];
    let initial = cfg.initial_velocity(grid)?;
    let mut state = NsState::new(initial, &ncfg);
    state.rho_l = navier_stokes::practical_budget(ncfg.c, 1, state.v_end.sup_norm());
    let constants = estimate_constants(&state, &splits, &ncfg)?;
    let sizes = step_size_controlled(&constants, 3)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "C_l={} C_r={} C_K={} C_K2={} C_s={} C_prime={}",
        constants.c_l, constants.c_r, constants.c_k, constants.c_k2, constants.c_s, constants.c_prime
    );
    let _ = writeln!(
        text,
        "rho_controlled={:.6e} rho_uncontrolled={:.6e} practical_budget={:.6e}",
        sizes.controlled, sizes.uncontrolled, state.rho_l
    );
    let mut csv = String::from("c_l,c_r,c_k,c_k2,c_s,c_prime,rho_controlled,rho_uncontrolled\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        constants.c_l,
        constants.c_r,
        constants.c_k,
        constants.c_k2,
        constants.c_s,
        constants.c_prime,
        sizes.controlled,
        sizes.uncontrolled
    );
    std::fs::write(out.join("constants.csv"), csv)?;
    std::fs::write(out.join("constants.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn dump_oracle(config: &Path, out: &Path, time: f64) -> Result<()> {
    let cfg = Config::load(config)?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    match cfg.initial_kind {
        InitialKind::Beltrami => {
            let (v, p) = beltrami(grid, time, cfg.nu, cfg.beltrami_amps());
            io::write_vector(&v, out, "beltrami")?;
            io::write_scalar(&p, &out.join("beltrami_pressure.nsf1"))?;
        }
        InitialKind::ColeHopf => {
            let phi = cfg.cole_hopf_potential(grid);
            let u = cole_hopf(&phi, cfg.nu, time)?;
            io::write_vector(&u, out, "colehopf")?;
            io::write_scalar(&phi, &out.join("colehopf_potential.nsf1"))?;
        }
        InitialKind::RandomSolenoidal | InitialKind::Nsf1File => {
            let v = cfg.initial_velocity(grid)?;
            io::write_vector(&v, out, "initial")?;
        }
    }
    Ok(())
}
