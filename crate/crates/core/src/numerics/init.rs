use super::{Matrix, Scalar, SeededRng};

/// Variance of the Gaussian used for every non-square weight matrix.
pub const INIT_VARIANCE: f64 = 1e-4;

/// Random `n × n` orthogonal matrix.
///
/// Draws an N(0, 1) matrix and orthonormalizes its columns with modified
/// Gram–Schmidt (two passes). Gram–Schmidt yields the QR factor whose `R`
/// has a positive diagonal, so the result is unique given the draw.
pub fn orthogonal_init<S: Scalar>(n: usize, rng: &mut SeededRng) -> Matrix<S> {
    assert!(n >= 1, "orthogonal_init needs n >= 1");
    // Column-major scratch: cols[j] is column j.
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for i in 0..n {
        for col in cols.iter_mut() {
            col[i] = rng.standard_normal();
        }
    }
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[k];
                let v = &mut rest[0];
                let proj: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut q = Matrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            q[(i, j)] = S::of(v);
        }
    }
    q
}

/// `rows × cols` matrix of i.i.d. N(0, 1e-4) entries.
pub fn gaussian_init<S: Scalar>(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix<S> {
    gaussian_init_with(rows, cols, INIT_VARIANCE, rng)
}

pub fn gaussian_init_with<S: Scalar>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut SeededRng,
) -> Matrix<S> {
    assert!(rows >= 1 && cols >= 1, "gaussian_init needs nonempty shape");
    let std_dev = variance.sqrt();
    let data = (0..rows * cols)
        .map(|_| S::of(rng.normal(0.0, std_dev)))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_orthogonality_error<S: Scalar>(q: &Matrix<S>) -> f64 {
        let qtq = q.transpose().matmul(q).unwrap();
        let n = q.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((qtq[(i, j)].to_f64_lossless() - target).abs());
            }
        }
        worst
    }

    #[test]
    fn one_by_one_is_unit() {
        let q: Matrix<f64> = orthogonal_init(1, &mut SeededRng::new(5));
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_for_several_sizes() {
        for n in [1, 2, 4, 10, 100] {
            let q64: Matrix<f64> = orthogonal_init(n, &mut SeededRng::new(n as u64));
            assert!(max_orthogonality_error(&q64) < 1e-5, "f64 n={n}");
            let q32: Matrix<f32> = orthogonal_init(n, &mut SeededRng::new(n as u64));
            assert!(max_orthogonality_error(&q32) < 1e-5, "f32 n={n}");
        }
    }

    #[test]
    fn orthogonal_is_deterministic() {
        let a: Matrix<f32> = orthogonal_init(100, &mut SeededRng::new(42));
        let b: Matrix<f32> = orthogonal_init(100, &mut SeededRng::new(42));
        let bits = |m: &Matrix<f32>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn gaussian_moments() {
        let m: Matrix<f64> = gaussian_init(1000, 1000, &mut SeededRng::new(3));
        let n = (m.rows() * m.cols()) as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.001, "mean {mean}");
        assert!((var - 1e-4).abs() < 1e-5, "var {var}");
    }

    #[test]
    fn gaussian_is_deterministic() {
        let a: Matrix<f32> = gaussian_init(3, 4, &mut SeededRng::new(8));
        let b: Matrix<f32> = gaussian_init(3, 4, &mut SeededRng::new(8));
        assert_eq!(a, b);
    }
}
