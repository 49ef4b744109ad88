//! Independent exact and brute-force references.
//!
//! None of these reuse the scheme solve paths: Cole-Hopf runs on the exact
//! heat multiplier, the Beltrami family is closed-form, the reference
//! projection solver is a textbook dealiased RK4 pseudo-spectral integrator
//! with an integrating factor, and `direct_convolution` is the O(N⁶) sum.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::parabolic::propagate_heat;
use ndarray::{Array3, Zip};
use num_complex::Complex64;

/// Exact solution of the multivariate Burgers equation for gradient data
/// u(0) = ∇φ₀: with θ(t) the heat evolution of exp(−φ₀/(2ν)),
/// u = −2ν ∇log θ.
pub fn cole_hopf(phi0: &ScalarField, nu: f64, t: f64) -> Result<VectorField> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let grid = phi0.grid();
    let theta0 = ScalarField::from_values(grid, phi0.values().mapv(|p| (-p / (2.0 * nu)).exp()))?;
    if !theta0.is_finite() {
        return Err(Error::OracleBreakdown(
            "cole-hopf potential overflowed; amplitude too large for the viscosity".into(),
        ));
    }
    let theta = propagate_heat(&theta0, t, nu)?;
    let min_theta = theta
        .values()
        .iter()
        .fold(f64::INFINITY, |m, &v| if v.is_nan() { f64::NAN } else { m.min(v) });
    if !(min_theta > 0.0) {
        return Err(Error::OracleBreakdown(format!(
            "cole-hopf potential non-positive (min {min_theta}); amplitude too large for the grid"
        )));
    }
    let mut comps = Vec::with_capacity(3);
    for axis in 0..3 {
        let dtheta = theta.derivative(axis)?;
        let mut u = ScalarField::zeros(grid);
        Zip::from(u.values_mut())
            .and(dtheta.values())
            .and(theta.values())
            .for_each(|o, d, th| *o = -2.0 * nu * d / th);
        comps.push(u);
    }
    VectorField::new([comps.remove(0), comps.remove(0), comps.remove(0)])
}

/// Decaying Beltrami (ABC) solution of the incompressible Navier-Stokes
/// equation and its pressure p = −|v|²/2.
pub fn beltrami(grid: Grid, t: f64, nu: f64, amps: (f64, f64, f64)) -> (VectorField, ScalarField) {
    let (a, b, c) = amps;
    let decay = (-nu * t).exp();
    let v = VectorField::new([
        ScalarField::from_fn(grid, |_, y, z| decay * (a * z.sin() + c * y.cos())),
        ScalarField::from_fn(grid, |x, _, z| decay * (b * x.sin() + a * z.cos())),
        ScalarField::from_fn(grid, |x, y, _| decay * (c * y.sin() + b * x.cos())),
    ])
    .expect("one grid");
    let mut p = ScalarField::zeros(grid);
    for i in 0..3 {
        let vi = v.component(i);
        p = &p + &(vi * vi);
    }
    (v, p.scaled(-0.5))
}

/// Exactly divergence-free, compactly supported test field: the curl of a
/// bump-profile vector potential centered at the box midpoint plus `offset`.
/// Support radius `radius` must fit well inside the box.
pub fn compact_solenoidal(
    grid: Grid,
    amplitude: f64,
    radius: f64,
    offset: [f64; 3],
) -> VectorField {
    let l = grid.box_length();
    let center = [l / 2.0 + offset[0], l / 2.0 + offset[1], l / 2.0 + offset[2]];
    // Potential ψ = A·B(r), v = ∇B × A = B'(r)/r (x−c) × A with the
    // polynomial bump B(r) = (1−(r/R)²)⁶ inside the ball (C⁵ at the edge,
    // far better resolved on coarse grids than the exponential bump).
    let axis = [0.3, 1.0, -0.6];
    let profile_grad = |r: f64| -> f64 {
        if r >= radius {
            return 0.0;
        }
        let s = (r / radius).powi(2);
        6.0 * (1.0 - s).powi(5) * (-2.0 * r / (radius * radius))
    };
    let mut comps = [
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
    ];
    let n = grid.points_per_axis();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d = [
                    grid.coord(i) - center[0],
                    grid.coord(j) - center[1],
                    grid.coord(k) - center[2],
                ];
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                let g = profile_grad(r);
                if g == 0.0 {
                    continue;
                }
                let scale = amplitude * g / r;
                let cx = d[1] * axis[2] - d[2] * axis[1];
                let cy = d[2] * axis[0] - d[0] * axis[2];
                let cz = d[0] * axis[1] - d[1] * axis[0];
                comps[0].values_mut()[[i, j, k]] = scale * cx;
                comps[1].values_mut()[[i, j, k]] = scale * cy;
                comps[2].values_mut()[[i, j, k]] = scale * cz;
            }
        }
    }
    let [c0, c1, c2] = comps;
    VectorField::new([c0, c1, c2]).expect("one grid")
}

/// Standard pseudo-spectral incompressible Navier-Stokes integrator:
/// RK4 on the projected convective term, 2/3-rule dealiasing, exact
/// integrating factor for diffusion. Used only as a cross-check.
pub fn reference_projection_solver(
    v0: &VectorField,
    nu: f64,
    t_final: f64,
    dt: f64,
) -> Result<VectorField> {
    let grid = v0.grid();
    if v0.divergence().sup_norm() > 1e-8 * v0.sup_norm().max(1.0) {
        return Err(Error::OracleBreakdown(
            "reference solver requires divergence-free data".into(),
        ));
    }
    let n = grid.points_per_axis();
    let limit = (n as i64) / 3;
    let dealias = |spec: &mut [Array3<Complex64>; 3]| {
        for s in spec.iter_mut() {
            Zip::indexed(s).for_each(|(i, j, k), v| {
                if grid.freq(i).abs() > limit || grid.freq(j).abs() > limit || grid.freq(k).abs() > limit
                {
                    *v = Complex64::new(0.0, 0.0);
                }
            });
        }
    };

    let project = |spec: &mut [Array3<Complex64>; 3]| {
        let shape = spec[0].raw_dim();
        let mut div = Array3::<Complex64>::zeros(shape);
        for (axis, s) in spec.iter().enumerate() {
            Zip::indexed(&mut div).and(s).for_each(|(i, j, k), d, v| {
                let kk = grid.wavenumber([i, j, k][axis]);
                *d += Complex64::new(0.0, kk) * v;
            });
        }
        // v_i − k_i (k·v)/|k|² with d = i(k·v):  v_i += i·k_i·d/|k|².
        for (axis, s) in spec.iter_mut().enumerate() {
            Zip::indexed(s).and(&div).for_each(|(i, j, k), v, d| {
                let k2 = grid.wavenumber(i).powi(2)
                    + grid.wavenumber(j).powi(2)
                    + grid.wavenumber(k).powi(2);
                if k2 > 0.0 {
                    let kk = grid.wavenumber([i, j, k][axis]);
                    *v += Complex64::new(0.0, kk) * d / k2;
                }
            });
        }
    };

    // -P[(v·∇)v] in spectral space from spectral state.
    let rhs = |spec: &[Array3<Complex64>; 3]| -> [Array3<Complex64>; 3] {
        let mut spec_d = [spec[0].clone(), spec[1].clone(), spec[2].clone()];
        dealias(&mut spec_d);
        let v: Vec<ScalarField> = spec_d
            .iter()
            .map(|s| ScalarField::from_spectrum(grid, s.clone()))
            .collect();
        let mut out = Vec::with_capacity(3);
        for i in 0..3 {
            let mut adv = ScalarField::zeros(grid);
            for (j, vj) in v.iter().enumerate() {
                let mut d = spec_d[i].clone();
                Zip::indexed(&mut d).for_each(|(a, b, c), s| {
                    let idx = [a, b, c][j];
                    let mult = if idx == n / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, grid.wavenumber(idx))
                    };
                    *s *= mult;
                });
                let dvi = ScalarField::from_spectrum(grid, d);
                adv = &adv + &(vj * &dvi);
            }
            out.push(adv.scaled(-1.0).spectrum());
        }
        let mut out: [Array3<Complex64>; 3] = [
            out.remove(0),
            out.remove(0),
            out.remove(0),
        ];
        dealias(&mut out);
        project(&mut out);
        out
    };

    let half_factor = |t: f64| -> Array3<f64> {
        Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            let k2 = grid.wavenumber(i).powi(2)
                + grid.wavenumber(j).powi(2)
                + grid.wavenumber(k).powi(2);
            (-nu * k2 * t).exp()
        })
    };

    let mut spec: [Array3<Complex64>; 3] = [
        v0.component(0).spectrum(),
        v0.component(1).spectrum(),
        v0.component(2).spectrum(),
    ];
    project(&mut spec);

    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let e_half = half_factor(dt / 2.0);
    let e_full = half_factor(dt);
    let initial_l2 = v0.l2_norm();

    for _ in 0..steps {
        // Integrating-factor RK4 on ũ = E(−t)u.
        let k1 = rhs(&spec);
        let mut stage = spec.clone();
        for i in 0..3 {
            Zip::from(&mut stage[i])
                .and(&k1[i])
                .and(&e_half)
                .for_each(|s, k, e| *s = (*s + (dt / 2.0) * k) * e);
        }
        let k2 = rhs(&stage);
        let mut stage2 = spec.clone();
        for i in 0..3 {
            Zip::from(&mut stage2[i])
                .and(&k2[i])
                .and(&e_half)
                .for_each(|s, k, e| *s = *s * e + (dt / 2.0) * k);
        }
        let k3 = rhs(&stage2);
        let mut stage3 = spec.clone();
        for i in 0..3 {
            Zip::from(&mut stage3[i])
                .and(&k3[i])
                .and(&e_half)
                .and(&e_full)
                .for_each(|s, k, eh, ef| *s = *s * ef + dt * eh * k);
        }
        let k4 = rhs(&stage3);
        // u ← E_full (u + dt/6 k1) + dt/6 (2 E_half (k2+k3) + k4).
        for i in 0..3 {
            Zip::from(&mut spec[i])
                .and(&k1[i])
                .and(&e_full)
                .for_each(|s, a, e| *s = (*s + (dt / 6.0) * a) * e);
            Zip::from(&mut spec[i])
                .and(&k2[i])
                .and(&k3[i])
                .and(&e_half)
                .for_each(|s, b, c, e| *s += (dt / 3.0) * e * (b + c));
            Zip::from(&mut spec[i]).and(&k4[i]).for_each(|s, d| *s += (dt / 6.0) * d);
        }
        let snapshot = VectorField::new([
            ScalarField::from_spectrum(grid, spec[0].clone()),
            ScalarField::from_spectrum(grid, spec[1].clone()),
            ScalarField::from_spectrum(grid, spec[2].clone()),
        ])?;
        if !snapshot.is_finite() || snapshot.l2_norm() > 1e3 * initial_l2.max(1.0) {
            return Err(Error::BlowUp("reference solver norms escaped".into()));
        }
    }
    VectorField::new([
        ScalarField::from_spectrum(grid, spec[0].clone()),
        ScalarField::from_spectrum(grid, spec[1].clone()),
        ScalarField::from_spectrum(grid, spec[2].clone()),
    ])
}

/// Literal O(N⁶) periodic convolution sum, spacing³-weighted. N ≤ 16.
pub fn direct_convolution(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch("direct_convolution arguments".into()));
    }
    let n = f.grid().points_per_axis();
    if n > 16 {
        return Err(Error::InvalidGrid(format!(
            "direct_convolution is restricted to N <= 16, got {n}"
        )));
    }
    let h3 = f.grid().cell_volume();
    let mut out = ScalarField::zeros(f.grid());
    for ox in 0..n {
        for oy in 0..n {
            for oz in 0..n {
                let mut acc = 0.0;
                for jx in 0..n {
                    for jy in 0..n {
                        for jz in 0..n {
                            let fx = (ox + n - jx) % n;
                            let fy = (oy + n - jy) % n;
                            let fz = (oz + n - jz) % n;
                            acc += f.values()[[fx, fy, fz]] * g.values()[[jx, jy, jz]];
                        }
                    }
                }
                out.values_mut()[[ox, oy, oz]] = acc * h3;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leray::nonlinear_source;
    use crate::testutil::{grid_2pi, random_band_limited_with, rng};
    use approx::assert_relative_eq;

    #[test]
    fn cole_hopf_at_time_zero_is_the_gradient() {
        let grid = grid_2pi(32);
        let phi = ScalarField::from_fn(grid, |x, y, _| 0.05 * (x.sin() + (2.0 * y).cos()));
        let u = cole_hopf(&phi, 0.1, 0.0).unwrap();
        for axis in 0..3 {
            let want = phi.derivative(axis).unwrap();
            assert!((u.component(axis) - &want).sup_norm() < 1e-10);
        }
    }

    #[test]
    fn cole_hopf_small_amplitude_linearizes_to_heat_decay() {
        let grid = grid_2pi(32);
        let a = 0.01;
        let nu = 0.2;
        let t = 0.5;
        let phi = ScalarField::from_fn(grid, |x, _, _| a * x.cos());
        let u = cole_hopf(&phi, nu, t).unwrap();
        let lin = ScalarField::from_fn(grid, |x, _, _| -a * (-nu * t).exp() * x.sin());
        let err = (u.component(0) - &lin).sup_norm();
        assert!(err < 10.0 * a * a, "err = {err}");
    }

    #[test]
    fn cole_hopf_stays_a_gradient() {
        let grid = grid_2pi(32);
        let phi = ScalarField::from_fn(grid, |x, y, z| 0.05 * (x.sin() + y.sin() + (y + z).cos()));
        for t in [0.0, 0.3, 1.0] {
            let u = cole_hopf(&phi, 0.1, t).unwrap();
            assert!(u.curl().sup_norm() < 1e-8);
        }
    }

    #[test]
    fn cole_hopf_rejects_blowup_amplitude() {
        let grid = grid_2pi(16);
        let phi = ScalarField::from_fn(grid, |x, _, _| 2000.0 * x.sin());
        assert!(matches!(
            cole_hopf(&phi, 0.05, 0.1),
            Err(Error::OracleBreakdown(_))
        ));
    }

    #[test]
    fn beltrami_is_divergence_free_and_decays_in_l2() {
        let grid = grid_2pi(32);
        let (v0, _) = beltrami(grid, 0.0, 0.1, (1.0, 0.7, -0.4));
        assert!(v0.divergence().sup_norm() < 1e-12);
        let (vt, _) = beltrami(grid, 0.8, 0.1, (1.0, 0.7, -0.4));
        assert_relative_eq!(
            vt.l2_norm(),
            (-0.1f64 * 0.8).exp() * v0.l2_norm(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn beltrami_satisfies_navier_stokes_residual() {
        let grid = grid_2pi(32);
        let nu = 0.1;
        let t = 0.3;
        let dt = 1e-5;
        let (v, p) = beltrami(grid, t, nu, (0.5, 0.5, 0.5));
        let (vp, _) = beltrami(grid, t + dt, nu, (0.5, 0.5, 0.5));
        let (vm, _) = beltrami(grid, t - dt, nu, (0.5, 0.5, 0.5));
        for i in 0..3 {
            let dvdt = (vp.component(i) - vm.component(i)).scaled(1.0 / (2.0 * dt));
            let mut adv = ScalarField::zeros(grid);
            for j in 0..3 {
                adv = &adv + &(v.component(j) * &v.component(i).derivative(j).unwrap());
            }
            let visc = v.component(i).laplacian().scaled(nu);
            let press = p.derivative(i).unwrap();
            let resid = &(&dvdt - &visc) + &(&adv + &press);
            assert!(resid.sup_norm() < 1e-8, "component {i}: {}", resid.sup_norm());
        }
    }

    #[test]
    fn reference_solver_matches_beltrami() {
        let grid = grid_2pi(32);
        let nu = 0.1;
        let amps = (0.5, 0.4, 0.3);
        let (v0, _) = beltrami(grid, 0.0, nu, amps);
        let t = 0.2;
        let v = reference_projection_solver(&v0, nu, t, 1e-3).unwrap();
        let (want, _) = beltrami(grid, t, nu, amps);
        let rel = (&v - &want).l2_norm() / want.l2_norm();
        assert!(rel < 1e-6, "rel = {rel}");
    }

    #[test]
    fn reference_solver_zero_data() {
        let grid = grid_2pi(16);
        let v0 = VectorField::zeros(grid);
        let v = reference_projection_solver(&v0, 0.1, 0.1, 1e-2).unwrap();
        assert_eq!(v.sup_norm(), 0.0);
    }

    #[test]
    fn reference_solver_energy_is_monotone() {
        let grid = grid_2pi(32);
        let mut r = rng(12);
        let v0 = crate::testutil::random_solenoidal_with(grid, &mut r, 0.5);
        let dt = 2e-3;
        let mut prev = v0.l2_norm();
        let mut v = v0;
        for _ in 0..20 {
            v = reference_projection_solver(&v, 0.05, dt, dt).unwrap();
            let e = v.l2_norm();
            assert!(e <= prev + 1e-10 * prev.max(1.0), "energy rose: {prev} -> {e}");
            prev = e;
        }
    }

    #[test]
    fn compact_field_is_solenoidal_and_supported() {
        let grid = grid_2pi(32);
        let v = compact_solenoidal(grid, 1.0, 1.6, [0.2, -0.1, 0.0]);
        assert!(v.divergence().sup_norm() < 5e-3 * v.sup_norm());
        // Vanishes near the box faces.
        let shell = v.component(0).boundary_shell_l2_fraction(2)
            + v.component(1).boundary_shell_l2_fraction(2)
            + v.component(2).boundary_shell_l2_fraction(2);
        assert!(shell < 1e-10);
        // Its Leray source (spectrally differentiated, hence with global
        // ringing) still passes the kernel path's decay gate.
        let s = nonlinear_source(&v, &v).unwrap();
        assert!(s.boundary_shell_l2_fraction(2) < 1e-3);
    }

    #[test]
    fn direct_convolution_identity_and_commutativity() {
        let grid = grid_2pi(8);
        let mut r = rng(13);
        let f = random_band_limited_with(grid, &mut r, 1.0);
        let g = random_band_limited_with(grid, &mut r, 1.0);
        let mut imp = ScalarField::zeros(grid);
        imp.values_mut()[[0, 0, 0]] = 1.0 / grid.cell_volume();
        let conv = direct_convolution(&f, &imp).unwrap();
        assert!((&conv - &f).sup_norm() < 1e-10);
        let fg = direct_convolution(&f, &g).unwrap();
        let gf = direct_convolution(&g, &f).unwrap();
        assert!((&fg - &gf).sup_norm() < 1e-12);
    }

    #[test]
    fn direct_convolution_matches_fft_path() {
        let grid = grid_2pi(8);
        let mut r = rng(14);
        let f = random_band_limited_with(grid, &mut r, 1.0);
        let g = random_band_limited_with(grid, &mut r, 1.0);
        let slow = direct_convolution(&f, &g).unwrap();
        let fast = f.convolve(&g, false).unwrap();
        assert!((&slow - &fast).sup_norm() < 1e-10);
    }

    #[test]
    fn direct_convolution_rejects_large_grids() {
        let grid = grid_2pi(32);
        let f = ScalarField::zeros(grid);
        assert!(direct_convolution(&f, &f).is_err());
    }
}
