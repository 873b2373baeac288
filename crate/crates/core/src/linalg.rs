//! Dense real-symmetric eigensolver (Householder tridiagonalization followed by
//! implicit-shift QL) and small determinant helpers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major square matrix view.
fn check_square(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::Invalid(format!(
            "matrix has {} entries, expected {}×{}",
            a.len(),
            n,
            n
        )));
    }
    Ok(())
}

fn check_symmetric(a: &[f64], n: usize) -> Result<()> {
    check_square(a, n)?;
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::Invalid(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Sorted eigenvalues of a real symmetric matrix.
pub fn eigenvalues_symmetric(a: &[f64], n: usize) -> Result<Vec<f64>> {
    check_symmetric(a, n)?;
    let mut w = a.to_vec();
    let (mut d, mut e) = tridiagonalize(&mut w, n, false);
    ql_implicit(&mut d, &mut e, None, n)?;
    d.sort_by(|x, y| x.total_cmp(y));
    Ok(d)
}

/// Sorted eigenvalues with eigenvectors; column j of the returned row-major
/// matrix belongs to eigenvalue j.
pub fn eigen_symmetric(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_symmetric(a, n)?;
    let mut z = a.to_vec();
    let (mut d, mut e) = tridiagonalize(&mut z, n, true);
    ql_implicit(&mut d, &mut e, Some(&mut z), n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + col] = z[r * n + src];
        }
    }
    Ok((vals, vecs))
}

/// Householder reduction to tridiagonal form. Returns (diagonal, subdiagonal)
/// with the subdiagonal stored in e[1..]. When `vectors` is set, `a` is
/// overwritten with the accumulated orthogonal transformation.
fn tridiagonalize(a: &mut [f64], n: usize, vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    if vectors {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    if n > 0 {
        d[0] = 0.0;
        e[0] = 0.0;
    }
    for i in 0..n {
        if vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let g: f64 = (0..i).map(|k| a[i * n + k] * a[k * n + j]).sum();
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        } else {
            d[i] = a[i * n + i];
        }
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence("QL iteration exceeded 60 sweeps".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Determinant of a row-major square matrix by LU.
pub fn det(a: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_row_slice(n, n, a).determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut s = Stream::new(seed, 0);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = s.normal();
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    #[test]
    fn small_cases() {
        assert_eq!(eigenvalues_symmetric(&[1.0, 0.0, 0.0, 1.0], 2).unwrap(), vec![1.0, 1.0]);
        let v = eigenvalues_symmetric(&[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        assert_eq!(eigenvalues_symmetric(&[3.5], 1).unwrap(), vec![3.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(eigenvalues_symmetric(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(eigenvalues_symmetric(&[1.0, 2.0, 3.0, 1.0], 2).is_err());
    }

    #[test]
    fn trace_and_frobenius_invariants() {
        for &n in &[5usize, 50, 200] {
            let a = random_symmetric(n, n as u64);
            let v = eigenvalues_symmetric(&a, n).unwrap();
            let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
            let fro: f64 = a.iter().map(|x| x * x).sum();
            let s: f64 = v.iter().sum();
            let s2: f64 = v.iter().map(|x| x * x).sum();
            assert!((s - tr).abs() <= 1e-10 * fro.sqrt() * n as f64, "n={n}");
            assert!((s2 - fro).abs() <= 1e-10 * fro, "n={n}");
            assert!(v.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigenvector_residuals() {
        let n = 60;
        let a = random_symmetric(n, 11);
        let (vals, vecs) = eigen_symmetric(&a, n).unwrap();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (j, lam) in vals.iter().enumerate() {
            let mut res = 0.0;
            for i in 0..n {
                let av: f64 = (0..n).map(|k| a[i * n + k] * vecs[k * n + j]).sum();
                res += (av - lam * vecs[i * n + j]).powi(2);
            }
            assert!(res.sqrt() <= 1e-10 * norm);
        }
        let plain = eigenvalues_symmetric(&a, n).unwrap();
        for (x, y) in plain.iter().zip(&vals) {
            assert!((x - y).abs() < 1e-11 * norm);
        }
    }

    #[test]
    fn determinant() {
        assert!((det(&[2.0, 1.0, 1.0, 3.0], 2) - 5.0).abs() < 1e-14);
        assert_eq!(det(&[], 0), 1.0);
    }
}
