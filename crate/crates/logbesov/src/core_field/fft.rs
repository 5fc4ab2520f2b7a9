//! Multi-dimensional FFT over a cubic grid stored row-major.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized in-place transform of an `n`-dimensional array with `size` points per axis.
///
/// Forward uses `exp(-i k x)`, inverse uses `exp(+i k x)`; neither divides by the point count.
pub fn fft_nd(data: &mut [Complex64], n: usize, size: usize, inverse: bool) {
    let fft = plan(size, inverse);
    let total = data.len();
    debug_assert_eq!(total, size.pow(n as u32));
    for axis in 0..n {
        let stride = size.pow((n - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(size).for_each(|line| {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(line, &mut scratch);
            });
            continue;
        }
        let block = size * stride;
        for chunk in data.chunks_mut(block) {
            // Gather the `stride` interleaved lines into contiguous rows.
            let mut rows = vec![Complex64::default(); block];
            for (j, row) in rows.chunks_mut(size).enumerate() {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = chunk[i * stride + j];
                }
            }
            rows.par_chunks_mut(size).for_each(|line| {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(line, &mut scratch);
            });
            for (j, row) in rows.chunks(size).enumerate() {
                for (i, v) in row.iter().enumerate() {
                    chunk[i * stride + j] = *v;
                }
            }
        }
    }
}
