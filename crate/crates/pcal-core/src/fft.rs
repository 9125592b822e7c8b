use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Shared FFT plans keyed by (length, direction). rustfft plans are immutable
/// once built, so one cache serves the whole process.
fn plan(len: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (len, matches!(dir, FftDirection::Forward));
    let mut guard = cache.lock().unwrap();
    if let Some(f) = guard.get(&key) {
        return f.clone();
    }
    let f = FftPlanner::new().plan_fft(len, dir);
    guard.insert(key, f.clone());
    f
}

/// In-place FFT along every axis of a row-major hypercube with `n` points per
/// axis, `dims` axes. Unnormalized, standard index order.
pub fn fft_all_axes(buf: &mut [Complex64], n: usize, dims: usize, dir: FftDirection) {
    debug_assert_eq!(buf.len(), n.pow(dims as u32));
    let fft = plan(n, dir);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // Last axis is contiguous: rustfft processes the buffer in chunks of n.
    fft.process_with_scratch(buf, &mut scratch);
    // Remaining axes via blocked gather/scatter to stay cache-friendly.
    let total = buf.len();
    for axis in (0..dims.saturating_sub(1)).rev() {
        let stride = n.pow((dims - 1 - axis) as u32);
        let block = 32.min(stride);
        let mut lines = vec![Complex64::default(); block * n];
        // Lines along `axis` start at indices {outer*stride*n + inner} for
        // inner in 0..stride; group `block` adjacent inners per pass.
        let outer_count = total / (stride * n);
        for outer in 0..outer_count {
            let base = outer * stride * n;
            let mut inner = 0;
            while inner < stride {
                let b = block.min(stride - inner);
                for row in 0..n {
                    let src = base + row * stride + inner;
                    for c in 0..b {
                        lines[c * n + row] = buf[src + c];
                    }
                }
                for c in 0..b {
                    fft.process_with_scratch(&mut lines[c * n..(c + 1) * n], &mut scratch);
                }
                for row in 0..n {
                    let dst = base + row * stride + inner;
                    for c in 0..b {
                        buf[dst + c] = lines[c * n + row];
                    }
                }
                inner += b;
            }
        }
    }
}

/// FFT along every axis of a row-major hypercube with per-axis length `n`,
/// identical on all axes; variant used by padded product grids where `n` is
/// `3*2^m` rather than a power of two.
pub fn fft_cube(buf: &mut [Complex64], n: usize, dims: usize, dir: FftDirection) {
    fft_all_axes(buf, n, dims, dir)
}

/// Sign flip `(-1)^(i_0 + .. + i_{d-1})` applied in place. With centered
/// sample coordinates this converts between FFT index phases and the
/// `e^{i xi . x}` convention; the same mask works for both directions.
pub fn apply_center_phase(buf: &mut [Complex64], n: usize, dims: usize) {
    debug_assert_eq!(buf.len(), n.pow(dims as u32));
    match dims {
        1 => {
            for i in (1..n).step_by(2) {
                buf[i] = -buf[i];
            }
        }
        _ => {
            let row = n;
            let rows = buf.len() / row;
            for r in 0..rows {
                // Parity of the sum of leading axis indices: base-n digit sum of r.
                let mut rr = r;
                let mut p = 0usize;
                while rr > 0 {
                    p ^= (rr % n) & 1;
                    rr /= n;
                }
                let start = if p == 0 { 1 } else { 0 };
                let base = r * row;
                for i in (start..row).step_by(2) {
                    buf[base + i] = -buf[base + i];
                }
            }
        }
    }
}
