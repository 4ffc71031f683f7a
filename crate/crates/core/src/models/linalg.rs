//! Small dense least squares through the normal equations.
//!
//! Columns are equilibrated to unit norm before forming `XᵀX`, the spectrum
//! of the scaled normal matrix is checked, and the Cholesky solution gets two
//! rounds of iterative refinement against the unscaled residual.

#![allow(clippy::needless_range_loop)]

/// Largest accepted condition number of the scaled normal matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RankDeficiency {
    /// Indices of the columns that take part in the near-null direction.
    pub columns: Vec<usize>,
    pub condition: f64,
}

pub fn least_squares<const P: usize>(rows: &[[f64; P]], y: &[f64]) -> Result<[f64; P], RankDeficiency> {
    debug_assert_eq!(rows.len(), y.len());
    let mut scale = [0.0; P];
    for row in rows {
        for j in 0..P {
            scale[j] += row[j] * row[j];
        }
    }
    let zero_cols: Vec<usize> = (0..P).filter(|&j| scale[j] == 0.0).collect();
    if !zero_cols.is_empty() {
        return Err(RankDeficiency { columns: zero_cols, condition: f64::INFINITY });
    }
    for s in scale.iter_mut() {
        *s = s.sqrt();
    }

    let mut normal = [[0.0; P]; P];
    for row in rows {
        for j in 0..P {
            let xj = row[j] / scale[j];
            for k in j..P {
                normal[j][k] += xj * row[k] / scale[k];
            }
        }
    }
    for j in 0..P {
        for k in 0..j {
            normal[j][k] = normal[k][j];
        }
    }

    let (values, vectors) = symmetric_eigen(normal);
    let (mut imin, mut imax) = (0, 0);
    for i in 1..P {
        if values[i] < values[imin] {
            imin = i;
        }
        if values[i] > values[imax] {
            imax = i;
        }
    }
    let condition = if values[imin] > 0.0 { values[imax] / values[imin] } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        let v: Vec<f64> = (0..P).map(|j| vectors[j][imin].abs()).collect();
        let vmax = v.iter().cloned().fold(0.0, f64::max);
        let columns = (0..P).filter(|&j| v[j] >= 0.1 * vmax).collect();
        return Err(RankDeficiency { columns, condition });
    }

    let chol = cholesky(&normal).ok_or(RankDeficiency { columns: (0..P).collect(), condition })?;
    let mut beta = [0.0; P];
    let mut residual = y.to_vec();
    for _ in 0..3 {
        let mut rhs = [0.0; P];
        for (row, r) in rows.iter().zip(&residual) {
            for j in 0..P {
                rhs[j] += row[j] / scale[j] * r;
            }
        }
        let z = cholesky_solve(&chol, rhs);
        for j in 0..P {
            beta[j] += z[j] / scale[j];
        }
        for (r, (row, yi)) in residual.iter_mut().zip(rows.iter().zip(y)) {
            *r = yi - row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>();
        }
    }
    Ok(beta)
}

fn cholesky<const P: usize>(a: &[[f64; P]; P]) -> Option<[[f64; P]; P]> {
    let mut l = [[0.0; P]; P];
    for i in 0..P {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve<const P: usize>(l: &[[f64; P]; P], b: [f64; P]) -> [f64; P] {
    let mut z = [0.0; P];
    for i in 0..P {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = [0.0; P];
    for i in (0..P).rev() {
        let s: f64 = ((i + 1)..P).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    x
}

/// Cyclic Jacobi eigen-decomposition. Returns eigenvalues and the matrix
/// whose columns are the matching eigenvectors.
fn symmetric_eigen<const P: usize>(mut a: [[f64; P]; P]) -> ([f64; P], [[f64; P]; P]) {
    let mut v = [[0.0; P]; P];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..P).flat_map(|i| (0..P).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..P {
            for q in (p + 1)..P {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..P {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..P {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut values = [0.0; P];
    for i in 0..P {
        values[i] = a[i][i];
    }
    (values, v)
}
