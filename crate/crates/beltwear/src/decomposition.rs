//! Principal component analysis for projecting feature vectors into a few
//! dimensions.
//!
//! The singular vectors come from one-sided Jacobi orthogonalization, run on
//! whichever orientation of the centered data matrix has fewer columns. Each
//! component's sign is fixed so its largest-magnitude entry is positive,
//! which makes the output deterministic.

use crate::error::{Error, Result};

/// A fitted projection: `components` holds `k` orthonormal rows of dimension
/// `d`, ordered by decreasing explained variance.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    /// Fraction of total variance along each component; zero for directions
    /// with no variance.
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn feature_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Project one vector onto the components.
    pub fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_dim() {
            return Err(Error::Mismatch(format!(
                "input has {} values, model expects {}",
                x.len(),
                self.feature_dim()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((ci, xi), mi)| ci * (xi - mi))
                    .sum()
            })
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_one(r)).collect()
    }
}

/// Fit a `k` component model to `rows`. `k` is capped at `min(n - 1, d)`:
/// centering removes one degree of freedom from `n` observations.
pub fn fit_pca(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::DegenerateData(
            "PCA needs at least two observations".into(),
        ));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::DegenerateData("PCA needs at least one feature".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Mismatch(format!(
                "row {i} has {} values, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!(
                "row {i} contains a non-finite value"
            )));
        }
    }
    let max_k = d.min(n - 1);
    if k == 0 || k > max_k {
        return Err(Error::Config(format!(
            "component count must be within 1..={max_k} for {n} rows of dimension {d}"
        )));
    }

    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();

    // Orthogonalize the thinner orientation. With feature columns the
    // accumulated rotations are the components; with observation columns the
    // orthogonalized columns themselves are.
    let (mut m, mut accum) = if d <= n {
        let mut m = Columns::zeros(n, d);
        for j in 0..d {
            for i in 0..n {
                m.data[j * n + i] = rows[i][j] - mean[j];
            }
        }
        (m, Some(Columns::identity(d)))
    } else {
        let mut m = Columns::zeros(d, n);
        for j in 0..n {
            for i in 0..d {
                m.data[j * d + i] = rows[j][i] - mean[i];
            }
        }
        (m, None)
    };
    jacobi_orthogonalize(&mut m, accum.as_mut());

    let sigmas: Vec<f64> = (0..m.cols).map(|j| norm(m.col(j))).collect();
    let total: f64 = sigmas.iter().map(|s| s * s).sum();
    let mut order: Vec<usize> = (0..m.cols).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]).then(a.cmp(&b)));
    let tol = sigmas[order[0]] * 1e-12;

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    let mut pending_fill = Vec::new();
    for (slot, &j) in order.iter().take(k).enumerate() {
        let live = sigmas[j] > tol && sigmas[j] > 0.0;
        ratios.push(if live { sigmas[j] * sigmas[j] / total } else { 0.0 });
        match &accum {
            Some(v) => components.push(v.col(j).to_vec()),
            None if live => {
                components.push(m.col(j).iter().map(|x| x / sigmas[j]).collect())
            }
            None => pending_fill.push(slot),
        }
    }
    // Null directions in the thin orientation leave no usable column; extend
    // the basis instead.
    for _ in pending_fill {
        let fill = complete_direction(&components, d);
        components.push(fill);
    }
    for c in components.iter_mut() {
        orient(c);
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio: ratios,
    })
}

/// Column-major matrix scratch for the Jacobi sweeps.
struct Columns {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Columns {
    fn zeros(rows: usize, cols: usize) -> Self {
        Columns {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Columns::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn col_pair_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(i < j);
        let (head, tail) = self.data.split_at_mut(j * self.rows);
        (
            &mut head[i * self.rows..(i + 1) * self.rows],
            &mut tail[..self.rows],
        )
    }
}

/// Rotate column pairs until every pair is orthogonal to relative precision.
/// Convergence is quadratic; the sweep cap is a safety net, not a tuning
/// knob.
fn jacobi_orthogonalize(m: &mut Columns, mut accum: Option<&mut Columns>) {
    const MAX_SWEEPS: usize = 64;
    const EPS: f64 = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..m.cols {
            for j in (i + 1)..m.cols {
                let (ci, cj) = m.col_pair_mut(i, j);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for (a, b) in ci.iter().zip(cj.iter()) {
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == 0.0 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                if s == 0.0 {
                    continue;
                }
                rotate(ci, cj, c, s);
                if let Some(v) = accum.as_deref_mut() {
                    let (vi, vj) = v.col_pair_mut(i, j);
                    rotate(vi, vj, c, s);
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
}

fn rotate(ci: &mut [f64], cj: &mut [f64], c: f64, s: f64) {
    for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unit vector orthogonal to `existing`, taken from the best-conditioned
/// standard basis vector. Two projection passes keep it orthogonal to
/// working precision.
fn complete_direction(existing: &[Vec<f64>], dim: usize) -> Vec<f64> {
    debug_assert!(existing.len() < dim);
    let mut best = vec![0.0; dim];
    let mut best_norm = -1.0;
    for axis in 0..dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        for _ in 0..2 {
            for u in existing {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
        }
        let n = norm(&v);
        if n > best_norm {
            best_norm = n;
            best = v;
        }
    }
    for x in best.iter_mut() {
        *x /= best_norm;
    }
    best
}

/// Flip so the largest-magnitude entry is positive; ties go to the lowest
/// index.
fn orient(component: &mut [f64]) {
    let mut at = 0;
    for (i, v) in component.iter().enumerate().skip(1) {
        if v.abs() > component[at].abs() {
            at = i;
        }
    }
    if component[at] < 0.0 {
        for v in component.iter_mut() {
            *v = -*v;
        }
    }
}
