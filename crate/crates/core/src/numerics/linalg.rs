//! Small dense linear algebra: LU solves and a Hessenberg plus shifted QR
//! eigen solver for matrices up to 10 x 10.

use crate::error::{Error, Result};
use serde::Serialize;

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..p).map(|j| (0..m).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn matvec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Frobenius norm.
pub fn mat_norm(a: &Matrix) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// LU factorisation with partial pivoting. Exactly zero pivots are replaced by
/// a tiny multiple of the matrix scale so that inverse iteration still works.
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    pub fn new(a: &Matrix) -> Lu {
        let n = a.len();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = mat_norm(a).max(f64::MIN_POSITIVE);
        let mut singular = false;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[i][k].abs().partial_cmp(&lu[j][k].abs()).unwrap()).unwrap();
            lu.swap(k, p);
            perm.swap(k, p);
            if lu[k][k].abs() <= 1e-300 + f64::EPSILON * 1e-3 * scale {
                lu[k][k] = f64::EPSILON * scale;
                singular = true;
            }
            for i in k + 1..n {
                let m = lu[i][k] / lu[k][k];
                lu[i][k] = m;
                for j in k + 1..n {
                    lu[i][j] -= m * lu[k][j];
                }
            }
        }
        Lu { lu, perm, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = Lu::new(a);
    if lu.is_singular() {
        return Err(Error::Numerical("singular linear system".into()));
    }
    Ok(lu.solve(b))
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.len();
    let lu = Lu::new(a);
    if lu.is_singular() {
        return Err(Error::Numerical("matrix is singular".into()));
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|j| lu.solve(&identity(n)[j])).collect();
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

/// Eigenvalues, sorted by real part, with unit eigenvectors for the real ones.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Eigenvalue>,
    pub vectors: Vec<Option<Vec<f64>>>,
}

/// Reduce to upper Hessenberg form by stabilised elementary similarity
/// transformations. Uses 1-based storage `h[1..=n][1..=n]`.
fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().skip(1).take(n) {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[i][j] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double shift QR on a 1-based upper Hessenberg matrix.
fn hqr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<Eigenvalue>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        let mut l: isize;
        loop {
            l = nn;
            while l >= 2 {
                let lu = l as usize;
                let mut s = a[lu - 1][lu - 1].abs() + a[lu][lu].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[lu][lu - 1].abs() + s == s {
                    a[lu][lu - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            x = a[nu][nu];
            if l == nn {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                y = a[nu - 1][nu - 1];
                w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(Error::Solver("QR iteration did not converge".into()));
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 1..=nu {
                            a[i][i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let lu = l as usize;
                    let mut m = nu - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s0;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == lu {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nu {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nu {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nu - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if lu != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nu - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in lu..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nu - 1 {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Eigenvalue { re: wr[i], im: wi[i] }).collect())
}

/// Eigenvector of `a` for the real eigenvalue `lambda` by inverse iteration.
fn inverse_iteration(a: &Matrix, lambda: f64, seed: usize) -> Vec<f64> {
    let n = a.len();
    let scale = mat_norm(a).max(1.0);
    let mut shifted = a.clone();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] -= lambda + 1e-13 * scale;
    }
    let lu = Lu::new(&shifted);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i + 3 * seed) % 7) as f64 + if i == seed % n { 5.0 } else { 0.0 }).collect();
    for _ in 0..4 {
        let mut x = lu.solve(&v);
        let nx = norm2(&x);
        if !(nx.is_finite() && nx > 0.0) {
            break;
        }
        x.iter_mut().for_each(|c| *c /= nx);
        v = x;
    }
    let big = v.iter().cloned().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    v
}

/// Eigenvalues and real eigenvectors of a small real matrix.
pub fn eig_small(a: &Matrix) -> Result<EigenPairs> {
    let n = a.len();
    if n == 0 || n > 10 || a.iter().any(|r| r.len() != n) {
        return Err(Error::Contract(format!("eig_small needs a square matrix of size 1..=10, got {n}")));
    }
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[i][j];
        }
    }
    hessenberg(&mut h, n);
    let mut values = hqr(&mut h, n)?;
    let scale = mat_norm(a).max(f64::MIN_POSITIVE);
    for v in values.iter_mut() {
        if v.im.abs() <= 1e-14 * scale {
            v.im = 0.0;
        }
    }
    values.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    let vectors = values
        .iter()
        .enumerate()
        .map(|(k, v)| if v.is_real() { Some(inverse_iteration(a, v.re, k)) } else { None })
        .collect();
    Ok(EigenPairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_residuals(a: &Matrix, e: &EigenPairs) {
        let an = mat_norm(a);
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            if let Some(v) = vec {
                let av = matvec(a, v);
                let res: Vec<f64> = av.iter().zip(v).map(|(x, y)| x - val.re * y).collect();
                assert!(norm2(&res) <= 1e-10 * an.max(1.0) * norm2(v), "residual {} for {}", norm2(&res), val.re);
            }
        }
    }

    #[test]
    fn identity_spectrum() {
        let a = identity(4);
        let e = eig_small(&a).unwrap();
        assert!(e.values.iter().all(|v| (v.re - 1.0).abs() < 1e-14 && v.im == 0.0));
        check_residuals(&a, &e);
    }

    #[test]
    fn diagonal_spectrum() {
        let a = vec![vec![-1.0, 0.0, 0.0], vec![0.0, 4.0, 0.0], vec![0.0, 0.0, 6.0]];
        let e = eig_small(&a).unwrap();
        let re: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        for (x, y) in re.iter().zip([-1.0, 4.0, 6.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        check_residuals(&a, &e);
    }

    #[test]
    fn companion_of_cubic() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = vec![vec![6.0, -11.0, 6.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let e = eig_small(&a).unwrap();
        for (v, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v.re - want).abs() < 1e-10, "{v:?}");
        }
        check_residuals(&a, &e);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let a = vec![vec![0.0, -1.0], vec![1.0, 0.0]];
        let e = eig_small(&a).unwrap();
        assert!(e.values.iter().all(|v| (v.im.abs() - 1.0).abs() < 1e-12 && v.re.abs() < 1e-12));
        assert!(e.vectors.iter().all(|v| v.is_none()));
    }

    #[test]
    fn inverse_round_trip() {
        let a = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.3, 0.1, 2.0]];
        let ai = inverse(&a).unwrap();
        let p = matmul(&a, &ai);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - want).abs() < 1e-14);
            }
        }
    }
}
