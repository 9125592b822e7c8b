/// Deterministic sum: fixed-size chunks, partials combined in index order.
/// Summation order is independent of thread count or iterator fusion, so
/// reports stay byte-identical across environments with the same input.
pub fn det_sum(values: &[f64]) -> f64 {
    const CHUNK: usize = 8192;
    if values.len() <= CHUNK {
        return values.iter().sum();
    }
    let mut total = 0.0;
    for chunk in values.chunks(CHUNK) {
        let mut part = 0.0;
        for v in chunk {
            part += v;
        }
        total += part;
    }
    total
}

pub fn det_sum_by<F: Fn(usize) -> f64>(len: usize, f: F) -> f64 {
    const CHUNK: usize = 8192;
    let mut total = 0.0;
    let mut start = 0;
    while start < len {
        let end = (start + CHUNK).min(len);
        let mut part = 0.0;
        for i in start..end {
            part += f(i);
        }
        total += part;
        start = end;
    }
    total
}

/// Row-major odometer over a hypercube, calling `f(flat, &idx)`.
pub fn for_each_index<F: FnMut(usize, &[usize])>(n: usize, dims: usize, mut f: F) {
    let total = n.pow(dims as u32);
    let mut idx = [0usize; 4];
    for flat in 0..total {
        f(flat, &idx[..dims]);
        for a in (0..dims).rev() {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Least-squares line fit through (x, y) pairs: returns (slope, intercept,
/// root-mean-square residual).
pub fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    let mut rss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let e = y - (slope * x + intercept);
        rss += e * e;
    }
    (slope, intercept, (rss / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_sum_matches_naive() {
        let v: Vec<f64> = (0..20000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((det_sum(&v) - naive).abs() < 1e-9);
    }

    #[test]
    fn line_fit_exact_on_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (a, b, r) = line_fit(&xs, &ys);
        assert!((a - 2.0).abs() < 1e-12);
        assert!((b - 1.0).abs() < 1e-12);
        assert!(r < 1e-12);
    }
}
