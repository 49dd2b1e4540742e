//! The bipermutative categories of complex vector spaces and of graded
//! lines, together with the functors connecting them to permutations.
//!
//! Graded-line morphisms are pairs (degree, scale) with
//!   (n,a) ⊕ (m,b) = (n+m, ab)        (n,a) ⊗ (m,b) = (nm, a^m b^n),
//! and the non-trivial coherency twists
//!   sum twist:     (n+m, (-1)^(nm))
//!   product twist: (nm, (-1)^(n(n-1)m(m-1)/4)).
//! Taking determinants of vector-space morphisms lands in graded lines and
//! intertwines all of this structure; that compatibility is what forces the
//! twist signs above.

use crate::error::Error;
use crate::linalg::Mat;
use crate::perm::{Perm, Sign};
use crate::scalar::Scalar;
use crate::Result;

/// An automorphism of `C^n`: an invertible `n x n` matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct VMor<S: Scalar> {
    mat: Mat<S>,
}

impl<S: Scalar> VMor<S> {
    /// Wraps a matrix, rejecting singular input (zero determinant; in
    /// floating mode, exactly-zero determinant — residual thresholds are
    /// applied where a tolerance is in scope).
    pub fn new(mat: Mat<S>) -> Result<Self> {
        if mat.det().is_zero() {
            return Err(Error::domain("singular matrix is not a morphism"));
        }
        Ok(VMor { mat })
    }

    pub(crate) fn new_unchecked(mat: Mat<S>) -> Self {
        VMor { mat }
    }

    pub fn identity(dim: usize) -> Self {
        VMor {
            mat: Mat::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.size()
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat<S> {
        self.mat
    }

    pub fn direct_sum(&self, rhs: &Self) -> Self {
        VMor {
            mat: Mat::block_diag(&[self.mat.clone(), rhs.mat.clone()]),
        }
    }

    pub fn tensor(&self, rhs: &Self) -> Self {
        VMor {
            mat: self.mat.kron(&rhs.mat),
        }
    }

    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        Ok(VMor {
            mat: self.mat.mul(&rhs.mat)?,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(VMor {
            mat: self.mat.inverse()?,
        })
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        self.mat.dist(&rhs.mat)
    }
}

/// Permutation matrices: the canonical functor from permutations to
/// vector-space morphisms. Column `i` carries a one in row `p(i)`.
pub fn perm_to_matrix<S: Scalar>(p: &Perm) -> VMor<S> {
    let n = p.size();
    VMor {
        mat: Mat::from_fn(n, |r, c| {
            if r == p.apply(c) {
                S::one()
            } else {
                S::zero()
            }
        }),
    }
}

/// The determinant functor into graded lines: `f` maps to
/// `(dim f, det f)`.
pub fn det_line<S: Scalar>(f: &VMor<S>) -> Result<LineMor<S>> {
    let d = f.mat.det();
    if d.is_zero() {
        return Err(Error::domain("determinant functor on singular matrix"));
    }
    LineMor::new(f.dim() as i64, d)
}

/// The sign functor from permutations to (non-negatively graded) lines.
pub fn perm_to_line<S: Scalar>(p: &Perm) -> LineMor<S> {
    LineMor {
        degree: p.size() as i64,
        scale: sign_scalar::<S>(p.sign()),
    }
}

pub fn sign_scalar<S: Scalar>(s: Sign) -> S {
    S::from_int(s.as_i64())
}

/// A graded-line morphism: integer degree plus a nonzero scale.
#[derive(Clone, PartialEq, Debug)]
pub struct LineMor<S: Scalar> {
    degree: i64,
    scale: S,
}

impl<S: Scalar> LineMor<S> {
    pub fn new(degree: i64, scale: S) -> Result<Self> {
        if scale.is_zero() {
            return Err(Error::domain("line morphism scale must be nonzero"));
        }
        Ok(LineMor { degree, scale })
    }

    pub fn identity(degree: i64) -> Self {
        LineMor {
            degree,
            scale: S::one(),
        }
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn scale(&self) -> &S {
        &self.scale
    }

    /// `(n,a) ⊕ (m,b) = (n+m, ab)`.
    pub fn direct_sum(&self, rhs: &Self) -> Self {
        LineMor {
            degree: self.degree + rhs.degree,
            scale: self.scale.mul(&rhs.scale),
        }
    }

    /// `(n,a) ⊗ (m,b) = (nm, a^m b^n)`.
    pub fn tensor(&self, rhs: &Self) -> Result<Self> {
        Ok(LineMor {
            degree: self
                .degree
                .checked_mul(rhs.degree)
                .ok_or_else(|| Error::domain("degree overflow in tensor"))?,
            scale: self.scale.powi(rhs.degree)?.mul(&rhs.scale.powi(self.degree)?),
        })
    }

    /// Composition of automorphisms of the same object.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.degree != rhs.degree {
            return Err(Error::domain(format!(
                "compose: degree mismatch {} vs {}",
                self.degree, rhs.degree
            )));
        }
        Ok(LineMor {
            degree: self.degree,
            scale: self.scale.mul(&rhs.scale),
        })
    }

    /// The weakly strict inverse for ⊕: `(n,a)` maps to `(-n, 1/a)`.
    pub fn weak_inverse(&self) -> Self {
        LineMor {
            degree: -self.degree,
            scale: self.scale.inv().expect("scale is nonzero"),
        }
    }

    /// Inverse automorphism of the same object: `(n,a)` maps to `(n, 1/a)`.
    pub fn compose_inverse(&self) -> Self {
        LineMor {
            degree: self.degree,
            scale: self.scale.inv().expect("scale is nonzero"),
        }
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        if self.degree != rhs.degree {
            return f64::INFINITY;
        }
        self.scale.dist(&rhs.scale)
    }

    /// The ±1 scale of a coherency-type morphism, if it is one.
    pub fn sign_of_scale(&self) -> Result<Sign> {
        if self.scale == S::one() {
            Ok(Sign::Plus)
        } else if self.scale == S::from_int(-1) {
            Ok(Sign::Minus)
        } else {
            Err(Error::internal("scale is not a sign"))
        }
    }
}

/// Sum-coherency twist `(n+m, (-1)^(nm))`.
pub fn twist_sum_line<S: Scalar>(n: i64, m: i64) -> LineMor<S> {
    let parity = (n % 2 != 0) && (m % 2 != 0);
    LineMor {
        degree: n + m,
        scale: sign_scalar::<S>(Sign::from_parity(parity)),
    }
}

/// Product-coherency twist `(nm, (-1)^(n(n-1)m(m-1)/4))`; the exponent is
/// `[n(n-1)/2]·[m(m-1)/2]`, an integer for every `n, m`.
pub fn twist_tensor_line<S: Scalar>(n: i64, m: i64) -> LineMor<S> {
    let half = |k: i64| -> i128 {
        let k = k as i128;
        k * (k - 1) / 2
    };
    let parity = (half(n) % 2 != 0) && (half(m) % 2 != 0);
    LineMor {
        degree: n * m,
        scale: sign_scalar::<S>(Sign::from_parity(parity)),
    }
}

/// A morphism of the invertible-object subcategory: degree ±1.
#[derive(Clone, PartialEq, Debug)]
pub struct LineUnitMor<S: Scalar> {
    degree: i64,
    scale: S,
}

impl<S: Scalar> LineUnitMor<S> {
    pub fn new(degree: i64, scale: S) -> Result<Self> {
        if degree != 1 && degree != -1 {
            return Err(Error::domain("unit line degree must be +1 or -1"));
        }
        if scale.is_zero() {
            return Err(Error::domain("unit line scale must be nonzero"));
        }
        Ok(LineUnitMor { degree, scale })
    }

    pub fn from_line(x: &LineMor<S>) -> Result<Self> {
        LineUnitMor::new(x.degree, x.scale.clone())
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn scale(&self) -> &S {
        &self.scale
    }

    pub fn tensor(&self, rhs: &Self) -> Result<Self> {
        Ok(LineUnitMor {
            degree: self.degree * rhs.degree,
            scale: self.scale.powi(rhs.degree)?.mul(&rhs.scale.powi(self.degree)?),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.scale == S::one()
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        if self.degree != rhs.degree {
            return f64::INFINITY;
        }
        self.scale.dist(&rhs.scale)
    }
}

/// An element of C6*, i.e. a morphism of the one-object category of
/// positive units. Monoidal product and composition agree here.
#[derive(Clone, PartialEq, Debug)]
pub struct CStar<S: Scalar>(S);

impl<S: Scalar> CStar<S> {
    pub fn new(value: S) -> Result<Self> {
        if value.is_zero() {
            return Err(Error::domain("unit must be nonzero"));
        }
        Ok(CStar(value))
    }

    pub fn one() -> Self {
        CStar(S::one())
    }

    pub fn value(&self) -> &S {
        &self.0
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        CStar(self.0.mul(&rhs.0))
    }

    pub fn inv(&self) -> Self {
        CStar(self.0.inv().expect("unit is nonzero"))
    }

    /// Inclusion into the invertible-object subcategory as degree +1.
    pub fn include(&self) -> LineUnitMor<S> {
        LineUnitMor {
            degree: 1,
            scale: self.0.clone(),
        }
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        self.0.dist(&rhs.0)
    }
}

/// The strict monoidal projection from unit lines to units:
/// `(d, a)` maps to `a^d`. A retraction of [`CStar::include`].
pub fn project_unit<S: Scalar>(x: &LineUnitMor<S>) -> CStar<S> {
    CStar(x.scale.powi(x.degree).expect("unit scale is nonzero"))
}
