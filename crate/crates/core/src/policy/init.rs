use rand::Rng;
use rand_distr::StandardNormal;

/// Row-major `rows x cols` matrix with orthonormal rows (when `rows <= cols`)
/// or orthonormal columns, scaled by `gain`.
pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, gain: f64) -> Vec<f64> {
    let (n, m) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    // n vectors of length m, orthonormalized by modified Gram-Schmidt.
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    for i in 0..n {
        for j in 0..i {
            let proj: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
            let (head, tail) = v.split_at_mut(i);
            for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                *a -= proj * b;
            }
        }
        let norm = v[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in v[i].iter_mut() {
            *a /= norm;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows <= cols { v[r][c] } else { v[c][r] };
        }
    }
    out
}

pub fn fan_in_uniform<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64], fan_in: usize, gain: f64) {
    let bound = gain * (3.0 / fan_in as f64).sqrt();
    for w in out {
        *w = rng.gen_range(-bound..=bound);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (rows, cols) in [(4, 7), (7, 4), (5, 5)] {
            let w = orthogonal(&mut rng, rows, cols, 1.0);
            let (n, get): (usize, Box<dyn Fn(usize, usize) -> f64>) = if rows <= cols {
                (rows, Box::new(|i, k| w[i * cols + k]))
            } else {
                (cols, Box::new(|i, k| w[k * cols + i]))
            };
            let len = rows.max(cols);
            for i in 0..n {
                for j in 0..n {
                    let d: f64 = (0..len).map(|k| get(i, k) * get(j, k)).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((d - expected).abs() < 1e-12);
                }
            }
        }
    }
}
