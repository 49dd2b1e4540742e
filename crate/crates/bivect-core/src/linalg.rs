//! Dense square matrices over an arbitrary [`Scalar`].
//!
//! Sizes here are desk scale (chart transition data), so plain Gaussian
//! elimination with pivot selection by [`Scalar::pivot_mag`] covers both the
//! exact and the floating field.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Row-major square matrix. The empty 0x0 matrix is the identity of the
/// zero-dimensional space; its determinant is 1.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        for r in &rows {
            if r.len() != n {
                return Err(Error::shape("matrix rows must form a square"));
            }
        }
        Ok(Mat {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn zeros(n: usize) -> Self {
        Mat::from_fn(n, |_, _| S::zero())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.n != rhs.n {
            return Err(Error::shape("add: size mismatch"));
        }
        Ok(Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.n != rhs.n {
            return Err(Error::shape("sub: size mismatch"));
        }
        Ok(Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    pub fn scale(&self, t: &S) -> Self {
        Mat {
            n: self.n,
            data: self.data.iter().map(|a| a.mul(t)).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.n != rhs.n {
            return Err(Error::shape("mul: size mismatch"));
        }
        let n = self.n;
        Ok(Mat::from_fn(n, |i, k| {
            let mut acc = S::zero();
            for j in 0..n {
                acc = acc.add(&self.at(i, j).mul(rhs.at(j, k)));
            }
            acc
        }))
    }

    /// Kronecker product in row-major (left factor outer) basis order:
    /// entry ((i,k),(j,l)) = a[i][j] * b[k][l] with the left index major.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.n, rhs.n);
        Mat::from_fn(n * m, |r, c| {
            let (i, k) = (r / m, r % m);
            let (j, l) = (c / m, c % m);
            self.at(i, j).mul(rhs.at(k, l))
        })
    }

    pub fn block_diag(parts: &[Mat<S>]) -> Self {
        let total: usize = parts.iter().map(|p| p.n).sum();
        let mut out = Mat::zeros(total);
        let mut off = 0;
        for p in parts {
            for i in 0..p.n {
                for j in 0..p.n {
                    out.set(off + i, off + j, p.at(i, j).clone());
                }
            }
            off += p.n;
        }
        out
    }

    /// Determinant by Gaussian elimination; returns zero for singular input.
    pub fn det(&self) -> S {
        let n = self.n;
        if n == 0 {
            return S::one();
        }
        let mut a = self.data.clone();
        let mut det = S::one();
        let mut negate = false;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].pivot_mag();
            for r in col + 1..n {
                let m = a[r * n + col].pivot_mag();
                if m > best {
                    best = m;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return S::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                negate = !negate;
            }
            let p = a[col * n + col].clone();
            det = det.mul(&p);
            let pinv = p.inv().expect("nonzero pivot");
            for r in col + 1..n {
                let f = a[r * n + col].mul(&pinv);
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[r * n + j].sub(&f.mul(&a[col * n + j]));
                    a[r * n + j] = v;
                }
            }
        }
        if negate {
            det.neg()
        } else {
            det
        }
    }

    /// Inverse by Gauss-Jordan; errors on singular input.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = Mat::<S>::identity(n).data;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].pivot_mag();
            for r in col + 1..n {
                let m = a[r * n + col].pivot_mag();
                if m > best {
                    best = m;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return Err(Error::domain("singular matrix"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    b.swap(col * n + j, pivot * n + j);
                }
            }
            let pinv = a[col * n + col].inv()?;
            for j in 0..n {
                a[col * n + j] = a[col * n + j].mul(&pinv);
                b[col * n + j] = b[col * n + j].mul(&pinv);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] = a[r * n + j].sub(&f.mul(&a[col * n + j]));
                    b[r * n + j] = b[r * n + j].sub(&f.mul(&b[col * n + j]));
                }
            }
        }
        Ok(Mat { n, data: b })
    }

    pub fn is_invertible(&self, tolerance: f64) -> bool {
        let d = self.det();
        if S::EXACT {
            !d.is_zero()
        } else {
            d.dist(&S::zero()) > tolerance
        }
    }

    /// Max entrywise distance; the residual metric for matrix identities.
    pub fn dist(&self, rhs: &Self) -> f64 {
        if self.n != rhs.n {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Approx, Exact};

    fn m2(a: i64, b: i64, c: i64, d: i64) -> Mat<Exact> {
        Mat::from_rows(vec![
            vec![Exact::from_ints(a, 0), Exact::from_ints(b, 0)],
            vec![Exact::from_ints(c, 0), Exact::from_ints(d, 0)],
        ])
        .unwrap()
    }

    #[test]
    fn det_and_inverse_exact() {
        let m = m2(1, 2, 3, 4);
        assert_eq!(m.det(), Exact::from_ints(-2, 0));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Mat::identity(2));

        let singular = m2(1, 2, 2, 4);
        assert!(singular.det().is_zero());
        assert!(singular.inverse().is_err());
    }

    #[test]
    fn det_empty_is_one() {
        let e: Mat<Exact> = Mat::identity(0);
        assert_eq!(e.det(), Exact::from_ints(1, 0));
    }

    #[test]
    fn kron_layout() {
        // kron(A, B)[(i,k),(j,l)] = A[i][j]*B[k][l], left factor outer.
        let a = m2(1, 2, 3, 4);
        let b = m2(0, 5, 6, 7);
        let k = a.kron(&b);
        assert_eq!(k.size(), 4);
        assert_eq!(*k.at(0, 1), Exact::from_ints(5, 0)); // a00*b01
        assert_eq!(*k.at(0, 3), Exact::from_ints(10, 0)); // a01*b01
        assert_eq!(*k.at(2, 0), Exact::from_ints(0, 0)); // a10*b00
        assert_eq!(*k.at(3, 3), Exact::from_ints(28, 0)); // a11*b11
        // det(kron) = det(a)^m det(b)^n
        assert_eq!(k.det(), Exact::from_ints(((-2i64).pow(2)) * ((-30i64).pow(2)), 0));
    }

    #[test]
    fn block_diag_det() {
        let a = m2(1, 2, 3, 4);
        let b = m2(2, 0, 0, 2);
        let d = Mat::block_diag(&[a.clone(), Mat::identity(0), b.clone()]);
        assert_eq!(d.size(), 4);
        assert_eq!(d.det(), a.det().mul(&b.det()));
    }

    #[test]
    fn approx_pivoting() {
        let m = Mat::<Approx>::from_rows(vec![
            vec![Approx::new(1e-14, 0.0), Approx::new(1.0, 0.0)],
            vec![Approx::new(1.0, 0.0), Approx::new(1.0, 0.0)],
        ])
        .unwrap();
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).unwrap().dist(&Mat::identity(2)) < 1e-12);
    }
}
