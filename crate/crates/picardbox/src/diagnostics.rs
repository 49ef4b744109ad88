//! Norm ledgers, the sampled inequality suites, growth audits, and the
//! seeded random-field corpus shared by the property checks and the
//! constants estimation.
//!
//! The suites check universally-quantified inequalities by sampling; they
//! are falsification runs, not statistical tests. Fields are band-limited
//! (top third of modes zeroed) with Gaussian spectra under a fixed seed
//! protocol, so every reported slack is reproducible.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::leray::pressure_gradient_spectral;
use ndarray::Zip;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

/// One macro-step record. Norms are maxima over velocity components.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub l: usize,
    pub rho_l: f64,
    pub k_iters: usize,
    pub h2_norm: f64,
    pub h2inf_norm: f64,
    pub contraction_ratio_max: f64,
    pub leray_l2: f64,
    pub div_max: f64,
    pub runtime_ms: u64,
}

/// Rows with strictly increasing step index and nonnegative norms.
#[derive(Debug, Clone, Default)]
pub struct NormLedger {
    rows: Vec<LedgerRow>,
}

pub const LEDGER_HEADER: &str =
    "l,rho_l,k_iters,h2_norm,h2inf_norm,contraction_ratio_max,leray_l2,div_max,runtime_ms";

impl NormLedger {
    pub fn new() -> NormLedger {
        NormLedger::default()
    }

    pub fn push(&mut self, row: LedgerRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.l <= last.l {
                return Err(Error::Config(format!(
                    "ledger step index {} not increasing past {}",
                    row.l, last.l
                )));
            }
        }
        if [row.h2_norm, row.h2inf_norm, row.leray_l2, row.div_max]
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::NonFinite("ledger norms"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(LEDGER_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.l,
                r.rho_l,
                r.k_iters,
                r.h2_norm,
                r.h2inf_norm,
                r.contraction_ratio_max,
                r.leray_l2,
                r.div_max,
                r.runtime_ms
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// C₂* = max_l (h2(l) − h)/l, plus the check that per-step increments stay
/// below C₂* as well; order-insensitive after re-sorting by l.
pub fn growth_audit(ledger: &NormLedger, h_norm: f64) -> (f64, bool) {
    if ledger.is_empty() {
        return (f64::NAN, false);
    }
    let mut rows: Vec<&LedgerRow> = ledger.rows().iter().collect();
    rows.sort_by_key(|r| r.l);
    let mut c2_star = 0.0f64;
    for r in &rows {
        c2_star = c2_star.max((r.h2_norm - h_norm) / r.l as f64);
    }
    let mut prev = h_norm;
    let mut pass = c2_star.is_finite();
    for r in &rows {
        if r.h2_norm - prev > c2_star + 1e-6 {
            pass = false;
        }
        prev = r.h2_norm;
    }
    (c2_star, pass)
}

/// Deterministic generator for the corpus protocol.
pub fn corpus_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Band-limited random field: Gaussian spectral amplitudes with a smooth
/// radial falloff, top third of modes zeroed, normalized to the requested
/// sup-norm.
pub fn random_band_limited(grid: Grid, rng: &mut impl Rng, amplitude: f64) -> ScalarField {
    let n = grid.points_per_axis();
    let limit = (n as i64) / 3;
    // Spectral falloff scale fixed across resolutions so corpora sampled on
    // different grids see the same field statistics.
    let k0 = 1.2;
    let mut spec = ndarray::Array3::<Complex64>::zeros((n, n, n));
    Zip::indexed(&mut spec).for_each(|(i, j, k), v| {
        let (fi, fj, fk) = (grid.freq(i), grid.freq(j), grid.freq(k));
        if fi.abs() > limit || fj.abs() > limit || fk.abs() > limit {
            return;
        }
        let k2 = (fi * fi + fj * fj + fk * fk) as f64;
        let sigma = (-k2 / (2.0 * k0 * k0)).exp();
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        *v = Complex64::new(re * sigma, im * sigma);
    });
    // Hermitian part is taken implicitly: inverse-transform and keep the
    // real samples, then renormalize.
    let f = ScalarField::from_spectrum(grid, spec.mapv(|v| v * n.pow(3) as f64));
    let sup = f.sup_norm();
    if sup == 0.0 {
        f
    } else {
        f.scaled(amplitude / sup)
    }
}

/// Band-limited random vector field projected onto divergence-free fields,
/// normalized to the requested sup-norm.
pub fn random_solenoidal(grid: Grid, rng: &mut impl Rng, amplitude: f64) -> VectorField {
    let raw = VectorField::new([
        random_band_limited(grid, rng, 1.0),
        random_band_limited(grid, rng, 1.0),
        random_band_limited(grid, rng, 1.0),
    ])
    .expect("one grid");
    // Leray projection: v − ∇Δ⁻¹(div v), and pressure_gradient_spectral(s)
    // is exactly ∇Δ⁻¹s (spectrum −i·k_i·ŝ/|k|²).
    let div = raw.divergence();
    let correction = pressure_gradient_spectral(&div);
    let projected = &raw - &correction;
    let sup = projected.sup_norm();
    if sup == 0.0 {
        projected
    } else {
        projected.scaled(amplitude / sup)
    }
}

/// Empirical H² product constant: max over a fixed corpus of
/// |fg|_{H²} / (|f|_{H²}·|g|_{H²}). Shared verbatim by the inequality suite
/// and the scheme constants estimation.
pub fn product_constant(grid: Grid, seed: u64, trials: usize) -> f64 {
    let mut rng = corpus_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f = random_band_limited(grid, &mut rng, 1.0);
        let g = random_band_limited(grid, &mut rng, 1.0);
        let prod = &f * &g;
        let denom = f.h2_norm() * g.h2_norm();
        if denom > 0.0 {
            worst = worst.max(prod.h2_norm() / denom);
        }
    }
    worst
}

/// Worst observed ratios of the sampled inequality suite. A ratio is
/// bound/actual, so every value ≥ 1 means no violation; `violations` counts
/// samples where the inequality failed beyond the 1e-8 relative slack.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub trials: usize,
    pub violations: usize,
    /// min over samples of |f|_{L²}|g|_{L¹} / |f∗g|_{L²}  (Y2/Y3 form).
    pub young_l2_min_ratio: f64,
    /// min over samples of |f|_{L²}|g|_{L²} / |f∗g|_{L∞}  (Y4 form).
    pub young_linf_min_ratio: f64,
    /// min over samples of pointwise-bound slack for the quadratic source.
    pub source_bound_min_ratio: f64,
    /// Empirical H² product constant over the same corpus protocol.
    pub product_constant: f64,
}

impl InequalityReport {
    pub fn summary(&self) -> String {
        format!(
            "trials={} violations={} young_l2_min_ratio={:.6} young_linf_min_ratio={:.6} \
             source_bound_min_ratio={:.6} product_constant={:.6}",
            self.trials,
            self.violations,
            self.young_l2_min_ratio,
            self.young_linf_min_ratio,
            self.source_bound_min_ratio,
            self.product_constant
        )
    }
}

/// Run the Young and source-bound checks on `trials` seeded random pairs.
pub fn verify_inequality_suite(grid: Grid, seed: u64, trials: usize) -> InequalityReport {
    let slack = 1.0 + 1e-8;
    let mut rng = corpus_rng(seed);
    let mut violations = 0usize;
    let mut y2_min = f64::INFINITY;
    let mut y4_min = f64::INFINITY;
    let mut src_min = f64::INFINITY;
    for _ in 0..trials {
        let f = random_band_limited(grid, &mut rng, 1.0);
        let g = random_band_limited(grid, &mut rng, 1.0);
        let conv = f.convolve(&g, false).expect("same grid");
        let l2 = conv.l2_norm();
        let bound_l2 = f.l2_norm() * g.l1_norm();
        if l2 > 0.0 {
            y2_min = y2_min.min(bound_l2 / l2);
        }
        if l2 > bound_l2 * slack {
            violations += 1;
        }
        let linf = conv.sup_norm();
        let bound_linf = f.l2_norm() * g.l2_norm();
        if linf > 0.0 {
            y4_min = y4_min.min(bound_linf / linf);
        }
        if linf > bound_linf * slack {
            violations += 1;
        }

        // Pointwise |Σ ∂f ∂g| ≤ Σ ½(∂f² + ∂g²) for the quadratic source.
        let v = VectorField::new([
            random_band_limited(grid, &mut rng, 1.0),
            random_band_limited(grid, &mut rng, 1.0),
            random_band_limited(grid, &mut rng, 1.0),
        ])
        .expect("one grid");
        let source = crate::leray::nonlinear_source(&v, &v).expect("same grid");
        let mut bound = ScalarField::zeros(grid);
        for a in 0..3 {
            for b in 0..3 {
                let d = v.component(a).derivative(b).expect("axis");
                bound = &bound + &(&d * &d);
            }
        }
        let mut worst_here = f64::INFINITY;
        Zip::from(source.values())
            .and(bound.values())
            .for_each(|s, b| {
                if s.abs() > 0.0 {
                    worst_here = worst_here.min(b / s.abs());
                }
            });
        src_min = src_min.min(worst_here);
        if worst_here < 1.0 - 1e-8 {
            violations += 1;
        }
    }
    InequalityReport {
        trials,
        violations,
        young_l2_min_ratio: y2_min,
        young_linf_min_ratio: y4_min,
        source_bound_min_ratio: src_min,
        product_constant: product_constant(grid, seed, trials.min(20)),
    }
}

/// Per-iteration increment record of one macro step.
#[derive(Debug, Clone, Copy)]
pub struct IncrementRecord {
    /// sup_τ of the max-component H² norm of δ^k.
    pub h2: f64,
    /// sup_τ of the max-component H^{2,∞} norm of δ^k.
    pub h2inf: f64,
    pub ratio_h2: Option<f64>,
    pub ratio_h2inf: Option<f64>,
    /// L² norm of the assembled pressure-forcing at the step end (0 for the
    /// Burgers scheme).
    pub leray_l2: f64,
}

/// Inner-iteration report of one macro step.
#[derive(Debug, Clone, Default)]
pub struct IterationReport {
    pub increments: Vec<IncrementRecord>,
    pub k_final: usize,
    pub converged: bool,
}

impl IterationReport {
    pub fn max_ratio_h2(&self) -> f64 {
        self.increments
            .iter()
            .filter_map(|r| r.ratio_h2)
            .fold(0.0, f64::max)
    }

    pub fn max_ratio_h2inf(&self) -> f64 {
        self.increments
            .iter()
            .filter_map(|r| r.ratio_h2inf)
            .fold(0.0, f64::max)
    }
}
