//! Three-dimensional complex FFT on top of `rustfft`, with a synchronized
//! plan cache shared across threads.

use ndarray::{Array3, Axis};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type PlanKey = (usize, bool);

static PLANS: Lazy<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            planner.plan_fft(len, dir)
        })
        .clone()
}

/// Transform along one axis of a cube, lanes batched across threads.
fn transform_axis(data: Array3<Complex64>, axis: usize, forward: bool) -> Array3<Complex64> {
    let n = data.len_of(Axis(axis));
    let fft = plan(n, forward);
    // Bring the target axis last so lanes are contiguous.
    let perm = match axis {
        0 => [1, 2, 0],
        1 => [0, 2, 1],
        _ => [0, 1, 2],
    };
    let mut work = data.permuted_axes(perm).as_standard_layout().into_owned();
    {
        let slice = work.as_slice_mut().expect("standard layout");
        slice.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, lane| fft.process_with_scratch(lane, scratch),
        );
    }
    let inv = match axis {
        0 => [2, 0, 1],
        1 => [0, 2, 1],
        _ => [0, 1, 2],
    };
    work.permuted_axes(inv).as_standard_layout().into_owned()
}

/// In-place-style 3D transform; unnormalized in both directions.
pub(crate) fn fft3(mut data: Array3<Complex64>, forward: bool) -> Array3<Complex64> {
    for axis in 0..3 {
        data = transform_axis(data, axis, forward);
    }
    data
}

/// Forward transform of a real cube.
pub(crate) fn forward(values: &Array3<f64>) -> Array3<Complex64> {
    let data = values.mapv(|v| Complex64::new(v, 0.0));
    fft3(data, true)
}

/// Inverse transform, normalized by 1/n³, real part taken.
pub(crate) fn inverse_real(spec: Array3<Complex64>) -> Array3<f64> {
    let n3 = spec.len() as f64;
    let out = fft3(spec, false);
    out.mapv(|v| v.re / n3)
}
