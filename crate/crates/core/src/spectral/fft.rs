//! Multi-dimensional complex FFT on the torus grid, built from rustfft line
//! transforms. Coefficients are normalized so that
//! `u(x) = Σ_k c_k e^{i k·x}`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::TorusGrid;
use crate::exec;

type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>;

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry((n, forward))
        .or_insert_with(|| {
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            planner.plan_fft(n, dir)
        })
        .clone()
}

/// Transforms contiguous lines of length `n` in place.
fn transform_lines(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let lines_per_chunk = (exec::CHUNK / n).max(1);
    exec::for_each_chunk_mut(data, lines_per_chunk * n, |_, chunk| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

fn transform_nd(grid: &TorusGrid, data: &mut Vec<Complex64>, forward: bool) {
    let n = grid.n();
    let d = grid.d();
    let total = grid.len();
    let fft = plan(n, forward);
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            transform_lines(data, n, &fft);
            continue;
        }
        let block = stride * n;
        // gather: line l = outer * stride + inner, element j
        let src: &[Complex64] = data;
        let mut lines = exec::map_indexed(total, |b| {
            let l = b / n;
            let j = b % n;
            let outer = l / stride;
            let inner = l % stride;
            src[outer * block + j * stride + inner]
        });
        transform_lines(&mut lines, n, &fft);
        let lines_ref = &lines;
        *data = exec::map_indexed(total, |idx| {
            let outer = idx / block;
            let rem = idx % block;
            let j = rem / stride;
            let inner = rem % stride;
            lines_ref[(outer * stride + inner) * n + j]
        });
    }
}

/// Normalized forward transform of real samples.
pub fn forward(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), grid.len());
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_nd(grid, &mut data, true);
    let scale = 1.0 / grid.len() as f64;
    exec::for_each_mut(&mut data, |_, c| *c *= scale);
    data
}

/// Inverse transform; the imaginary residue of a Hermitian spectrum is dropped.
pub fn inverse(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), grid.len());
    let mut data = coeffs.to_vec();
    transform_nd(grid, &mut data, false);
    data.into_iter().map(|c| c.re).collect()
}
