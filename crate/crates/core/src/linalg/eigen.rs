//! Eigenvalues of a general real matrix: balancing, reduction to upper
//! Hessenberg form by stabilized elimination, then the Francis double-shift QR
//! iteration. Only eigenvalues are produced.
//!
//! The routines work on a 1-based `(n + 1) x (n + 1)` scratch array so the
//! index arithmetic of the classical formulation carries over unchanged.

use num_complex::Complex;

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const RADIX: f64 = 2.0;
const MAX_ITS_PER_ROOT: usize = 60;

struct Work<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> Work<T> {
    fn new(m: &Matrix<T>) -> Self {
        let n = m.nrows();
        let mut a = vec![T::zero(); (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Self { n, a }
    }

    #[inline]
    fn g(&self, i: usize, j: usize) -> T {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn s(&mut self, i: usize, j: usize, v: T) {
        let n1 = self.n + 1;
        self.a[i * n1 + j] = v;
    }

    fn swap(&mut self, (i1, j1): (usize, usize), (i2, j2): (usize, usize)) {
        let n1 = self.n + 1;
        self.a.swap(i1 * n1 + j1, i2 * n1 + j2);
    }

    /// Similarity scaling by powers of the radix so that row and column norms
    /// are comparable.
    fn balance(&mut self) {
        let n = self.n;
        let radix = T::lit(RADIX);
        let sqrdx = radix * radix;
        let mut done = false;
        while !done {
            done = true;
            for i in 1..=n {
                let mut r = T::zero();
                let mut c = T::zero();
                for j in 1..=n {
                    if j != i {
                        c += self.g(j, i).abs();
                        r += self.g(i, j).abs();
                    }
                }
                if c != T::zero() && r != T::zero() {
                    let mut g = r / radix;
                    let mut f = T::one();
                    let s = c + r;
                    while c < g {
                        f *= radix;
                        c *= sqrdx;
                    }
                    g = r * radix;
                    while c > g {
                        f /= radix;
                        c /= sqrdx;
                    }
                    if (c + r) / f < T::lit(0.95) * s {
                        done = false;
                        let ginv = T::one() / f;
                        for j in 1..=n {
                            let v = self.g(i, j) * ginv;
                            self.s(i, j, v);
                        }
                        for j in 1..=n {
                            let v = self.g(j, i) * f;
                            self.s(j, i, v);
                        }
                    }
                }
            }
        }
    }

    /// Reduction to upper Hessenberg form by elimination with pivoting.
    fn hessenberg(&mut self) {
        let n = self.n;
        for m in 2..n {
            let mut x = T::zero();
            let mut i = m;
            for j in m..=n {
                if self.g(j, m - 1).abs() > x.abs() {
                    x = self.g(j, m - 1);
                    i = j;
                }
            }
            if i != m {
                for j in m - 1..=n {
                    self.swap((i, j), (m, j));
                }
                for j in 1..=n {
                    self.swap((j, i), (j, m));
                }
            }
            if x != T::zero() {
                for i in m + 1..=n {
                    let mut y = self.g(i, m - 1);
                    if y != T::zero() {
                        y /= x;
                        self.s(i, m - 1, y);
                        for j in m..=n {
                            let v = self.g(i, j) - y * self.g(m, j);
                            self.s(i, j, v);
                        }
                        for j in 1..=n {
                            let v = self.g(j, m) + y * self.g(j, i);
                            self.s(j, m, v);
                        }
                    }
                }
            }
        }
        // Multipliers left below the subdiagonal are not part of the result.
        for i in 1..=n {
            for j in 1..=n {
                if i > j + 1 {
                    self.s(i, j, T::zero());
                }
            }
        }
    }

    /// Shifted QR on the Hessenberg matrix; returns `(re, im)` pairs.
    fn hqr(&mut self) -> Result<Vec<(T, T)>> {
        let n = self.n;
        let mut wr = vec![T::zero(); n + 1];
        let mut wi = vec![T::zero(); n + 1];
        let mut anorm = T::zero();
        for i in 1..=n {
            for j in i.saturating_sub(1).max(1)..=n {
                anorm += self.g(i, j).abs();
            }
        }
        let mut nn = n;
        let mut t = T::zero();
        let (mut p, mut q, mut r);
        let (mut x, mut y, mut z, mut w);
        while nn >= 1 {
            let mut its = 0;
            loop {
                let mut l = nn;
                while l >= 2 {
                    let mut s = self.g(l - 1, l - 1).abs() + self.g(l, l).abs();
                    if s == T::zero() {
                        s = anorm;
                    }
                    if self.g(l, l - 1).abs() + s == s {
                        self.s(l, l - 1, T::zero());
                        break;
                    }
                    l -= 1;
                }
                x = self.g(nn, nn);
                if l == nn {
                    wr[nn] = x + t;
                    wi[nn] = T::zero();
                    nn -= 1;
                } else {
                    y = self.g(nn - 1, nn - 1);
                    w = self.g(nn, nn - 1) * self.g(nn - 1, nn);
                    if l == nn - 1 {
                        p = T::half() * (y - x);
                        q = p * p + w;
                        z = q.abs().sqrt();
                        x += t;
                        if q >= T::zero() {
                            z = p + z.copysign(p);
                            wr[nn - 1] = x + z;
                            wr[nn] = x + z;
                            if z != T::zero() {
                                wr[nn] = x - w / z;
                            }
                            wi[nn - 1] = T::zero();
                            wi[nn] = T::zero();
                        } else {
                            wr[nn - 1] = x + p;
                            wr[nn] = x + p;
                            wi[nn - 1] = -z;
                            wi[nn] = z;
                        }
                        nn -= 2;
                    } else {
                        if its == MAX_ITS_PER_ROOT {
                            return Err(Error::NonConvergence {
                                iterations: its,
                                residual: self.g(nn, nn - 1).abs().to_f64_lossy(),
                                last_iterate: Vec::new(),
                            });
                        }
                        if its > 0 && its % 10 == 0 {
                            // exceptional shift
                            t += x;
                            for i in 1..=nn {
                                let v = self.g(i, i) - x;
                                self.s(i, i, v);
                            }
                            let s = self.g(nn, nn - 1).abs() + self.g(nn - 1, nn - 2).abs();
                            x = T::lit(0.75) * s;
                            y = x;
                            w = T::lit(-0.4375) * s * s;
                        }
                        its += 1;
                        let mut m = nn - 2;
                        loop {
                            z = self.g(m, m);
                            let rr = x - z;
                            let ss = y - z;
                            p = (rr * ss - w) / self.g(m + 1, m) + self.g(m, m + 1);
                            q = self.g(m + 1, m + 1) - z - rr - ss;
                            r = self.g(m + 2, m + 1);
                            let s = p.abs() + q.abs() + r.abs();
                            p /= s;
                            q /= s;
                            r /= s;
                            if m == l {
                                break;
                            }
                            let u = self.g(m, m - 1).abs() * (q.abs() + r.abs());
                            let v = p.abs()
                                * (self.g(m - 1, m - 1).abs() + z.abs() + self.g(m + 1, m + 1).abs());
                            if u + v == v {
                                break;
                            }
                            m -= 1;
                        }
                        for i in m + 2..=nn {
                            self.s(i, i - 2, T::zero());
                            if i != m + 2 {
                                self.s(i, i - 3, T::zero());
                            }
                        }
                        let mut k = m;
                        while k + 1 <= nn {
                            if k != m {
                                p = self.g(k, k - 1);
                                q = self.g(k + 1, k - 1);
                                r = T::zero();
                                if k != nn - 1 {
                                    r = self.g(k + 2, k - 1);
                                }
                                x = p.abs() + q.abs() + r.abs();
                                if x != T::zero() {
                                    p /= x;
                                    q /= x;
                                    r /= x;
                                }
                            }
                            let s = (p * p + q * q + r * r).sqrt().copysign(p);
                            if s != T::zero() {
                                if k == m {
                                    if l != m {
                                        let v = -self.g(k, k - 1);
                                        self.s(k, k - 1, v);
                                    }
                                } else {
                                    self.s(k, k - 1, -s * x);
                                }
                                p += s;
                                x = p / s;
                                y = q / s;
                                z = r / s;
                                q /= p;
                                r /= p;
                                for j in k..=nn {
                                    p = self.g(k, j) + q * self.g(k + 1, j);
                                    if k != nn - 1 {
                                        p += r * self.g(k + 2, j);
                                        let v = self.g(k + 2, j) - p * z;
                                        self.s(k + 2, j, v);
                                    }
                                    let v = self.g(k + 1, j) - p * y;
                                    self.s(k + 1, j, v);
                                    let v = self.g(k, j) - p * x;
                                    self.s(k, j, v);
                                }
                                let mmin = nn.min(k + 3);
                                for i in l..=mmin {
                                    p = x * self.g(i, k) + y * self.g(i, k + 1);
                                    if k != nn - 1 {
                                        p += z * self.g(i, k + 2);
                                        let v = self.g(i, k + 2) - p * r;
                                        self.s(i, k + 2, v);
                                    }
                                    let v = self.g(i, k + 1) - p * q;
                                    self.s(i, k + 1, v);
                                    let v = self.g(i, k) - p;
                                    self.s(i, k, v);
                                }
                            }
                            k += 1;
                        }
                    }
                }
                if nn < 2 || l + 1 >= nn {
                    break;
                }
            }
        }
        Ok((1..=n).map(|i| (wr[i], wi[i])).collect())
    }
}

/// All eigenvalues of a square real matrix, in no particular order.
pub fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !a.all_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex::new(a[(0, 0)], T::zero())]),
        _ => {}
    }
    let mut w = Work::new(a);
    w.balance();
    w.hessenberg();
    Ok(w.hqr()?.into_iter().map(|(re, im)| Complex::new(re, im)).collect())
}

/// Spectral radius (largest eigenvalue modulus) of a square real matrix.
pub fn spectral_radius<T: Real>(a: &Matrix<T>) -> Result<T> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|z| z.re.hypot(z.im))
        .fold(T::zero(), T::max))
}
