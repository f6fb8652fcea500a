//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of a working copy of `A` are rotated pairwise until mutually
//! orthogonal; the rotations accumulate into `V`, the column norms are the
//! singular values and the normalized columns form `U`. Quadratically
//! convergent and relatively accurate for tiny singular values, which the
//! rank decisions downstream depend on.

use crate::matrix::{Mat, Svd};

const MAX_SWEEPS: usize = 80;

pub(crate) fn jacobi_svd(a: &Mat, want_vectors: bool) -> Svd {
    let d = a.dim();
    // column-major working storage: cols[j][i] = A[i][j]
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = if want_vectors {
        (0..d).map(|j| unit(d, j)).collect()
    } else {
        Vec::new()
    };

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let (alpha, beta, gamma) = gram(&cols[p], &cols[q]);
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                if want_vectors {
                    rotate(&mut v, p, q, c, s);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    if !want_vectors {
        return Svd { u: Mat::zeros(d), sigma, v: Mat::zeros(d) };
    }

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let mut w: Vec<f64> = if norms[j] > 0.0 {
            cols[j].iter().map(|x| x / norms[j]).collect()
        } else {
            vec![0.0; d]
        };
        // small columns lose orthogonality to rounding; re-project them
        for _ in 0..2 {
            for prev in u_cols.iter().take(slot).filter(|c| c.iter().any(|&x| x != 0.0)) {
                let dot: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (wi, pi) in w.iter_mut().zip(prev) {
                    *wi -= dot * pi;
                }
            }
        }
        let n = norm(&w);
        if n > 0.5 {
            u_cols.push(w.into_iter().map(|x| x / n).collect());
        } else {
            u_cols.push(vec![0.0; d]);
            missing.push(slot);
        }
    }
    complete_orthonormal(&mut u_cols, &missing);
    let v_cols: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();

    Svd {
        u: Mat::from_columns(d, &u_cols).expect("square"),
        sigma,
        v: Mat::from_columns(d, &v_cols).expect("square"),
    }
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[j] = 1.0;
    e
}

fn gram(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut g = 0.0;
    for (p, q) in x.iter().zip(y) {
        a += p * p;
        b += q * q;
        g += p * q;
    }
    (a, b, g)
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow for large entries
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all others.
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let d = cols.len();
    let mut filled: Vec<usize> = (0..d).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &slot in missing {
        loop {
            let mut w = unit(d, candidate);
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let dot: f64 = w.iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                    for (wi, ci) in w.iter_mut().zip(&cols[j]) {
                        *wi -= dot * ci;
                    }
                }
            }
            let n = norm(&w);
            if n > 1e-6 {
                cols[slot] = w.into_iter().map(|x| x / n).collect();
                filled.push(slot);
                break;
            }
            assert!(candidate < d, "standard basis spans R^d");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_and_orders() {
        let a = Mat::from_rows(&[[4.0, 0.0, 1.0], [2.0, -3.0, 0.5], [0.0, 1.0, 1.0]]).unwrap();
        let svd = a.svd();
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(svd.reconstruct().dist(&a) <= 1e-12 * svd.sigma[0]);
        let utu = &svd.u.transpose() * &svd.u;
        let vtv = &svd.v.transpose() * &svd.v;
        assert!(utu.dist(&Mat::identity(3)) < 1e-12);
        assert!(vtv.dist(&Mat::identity(3)) < 1e-12);
    }

    #[test]
    fn rank_deficient_completes_u() {
        let a = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let svd = a.svd();
        assert!(svd.sigma[1] < 1e-15);
        let utu = &svd.u.transpose() * &svd.u;
        assert!(utu.dist(&Mat::identity(2)) < 1e-12);
        let z = Mat::zeros(3).svd();
        assert_eq!(z.sigma, vec![0.0; 3]);
        assert!((&z.u.transpose() * &z.u).dist(&Mat::identity(3)) < 1e-12);
    }
}
