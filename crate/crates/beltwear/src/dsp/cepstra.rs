//! Orthonormal DCT-II, used to turn log band energies into cepstra.

use crate::error::{Error, Result};

/// The first `n_coeffs` rows of the orthonormal DCT-II matrix of order `n`:
/// `D[c][b] = s_c * cos(pi * c * (2b + 1) / (2n))` with `s_0 = sqrt(1/n)`
/// and `s_c = sqrt(2/n)` otherwise. With `n_coeffs == n` the matrix is
/// orthogonal: `D * D^T = I`.
pub fn dct_ii_matrix(n_coeffs: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || n_coeffs == 0 {
        return Err(Error::Config("DCT dimensions must be positive".into()));
    }
    if n_coeffs > n {
        return Err(Error::Config(format!(
            "cannot keep {n_coeffs} cepstral coefficients from {n} bands"
        )));
    }
    let mut rows = Vec::with_capacity(n_coeffs);
    for c in 0..n_coeffs {
        let scale = if c == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        rows.push(
            (0..n)
                .map(|b| {
                    scale
                        * (std::f64::consts::PI * c as f64 * (2 * b + 1) as f64 / (2 * n) as f64)
                            .cos()
                })
                .collect(),
        );
    }
    Ok(rows)
}

/// Project each frame of log band energies onto the first `n_coeffs` DCT-II
/// basis vectors. Coefficient 0 (overall level) is kept.
pub fn cepstra(log_energies: &[Vec<f64>], n_coeffs: usize) -> Result<Vec<Vec<f64>>> {
    let n = match log_energies.first() {
        Some(row) => row.len(),
        None => return Ok(Vec::new()),
    };
    let basis = dct_ii_matrix(n_coeffs, n)?;
    Ok(log_energies
        .iter()
        .map(|frame| {
            basis
                .iter()
                .map(|row| row.iter().zip(frame).map(|(r, e)| r * e).sum())
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_offdiag_err(d: &[Vec<f64>]) -> f64 {
        let k = d.len();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let dot: f64 = d[i].iter().zip(&d[j]).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    #[test]
    fn full_square_matrix_is_orthogonal() {
        for n in [32usize, 64, 128] {
            let d = dct_ii_matrix(n, n).unwrap();
            let err = max_abs_offdiag_err(&d);
            assert!(err < 1e-9, "n={n}: max |D D^T - I| = {err}");
        }
    }

    #[test]
    fn truncated_rows_stay_orthonormal() {
        let d = dct_ii_matrix(40, 64).unwrap();
        assert_eq!(d.len(), 40);
        assert_eq!(d[0].len(), 64);
        assert!(max_abs_offdiag_err(&d) < 1e-9);
    }

    #[test]
    fn constant_input_excites_only_coefficient_zero() {
        let frames = vec![vec![3.5; 64]];
        let c = cepstra(&frames, 40).unwrap();
        // Row 0 is the constant sqrt(1/n), so c_0 = 3.5 * n * sqrt(1/n).
        let expected = 3.5 * (64f64).sqrt();
        assert!((c[0][0] - expected).abs() < 1e-9, "{}", c[0][0]);
        for (i, &v) in c[0].iter().enumerate().skip(1) {
            assert!(v.abs() < 1e-9, "coefficient {i} = {v}");
        }
    }

    #[test]
    fn transform_preserves_energy_when_square() {
        // Orthogonal transform: ||c|| == ||e|| for n_coeffs == n.
        let frame: Vec<f64> = (0..32).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let c = cepstra(&[frame.clone()], 32).unwrap();
        let e_norm: f64 = frame.iter().map(|v| v * v).sum();
        let c_norm: f64 = c[0].iter().map(|v| v * v).sum();
        assert!((e_norm - c_norm).abs() < 1e-9 * e_norm);
    }

    #[test]
    fn more_coefficients_than_bands_is_rejected() {
        assert!(dct_ii_matrix(65, 64).is_err());
        assert!(cepstra(&[vec![0.0; 32]], 40).is_err());
    }
}
