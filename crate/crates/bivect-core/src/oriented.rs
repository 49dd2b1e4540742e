//! Oriented matrix categories: weakly invertible morphism matrices
//! decorated with a sign, lifted associators, and the strict monoidal
//! determinant functors they enable.
//!
//! The lifted associator carries exactly the sign of its own line
//! determinant, so `det(base) ⊗ (1, sign)` kills it — that cancellation is
//! what makes [`oriented_det`] and the determinant-gerbe functor
//! [`gerbe_det`] strict monoidal. Everything here is restricted to weakly
//! invertible dimension matrices; tensoring with `(±1, 1)` only preserves
//! signs on that subcategory.

use crate::biperm::{CStar, LineMor, LineUnitMor, VMor};
use crate::error::Error;
use crate::linalg::Mat;
use crate::matrixcat::{
    assoc_sign, associator, line_det, require_weakly_invertible, v_det, DimMatrix, EntryMor,
    MorMatrix,
};
use crate::perm::Sign;
use crate::scalar::Scalar;
use crate::Result;

/// A morphism of the oriented category: a weakly invertible morphism
/// matrix together with a sign.
#[derive(Clone, PartialEq, Debug)]
pub struct OrientedMor<E> {
    base: MorMatrix<E>,
    sign: Sign,
}

impl<E: EntryMor> OrientedMor<E> {
    pub fn new(base: MorMatrix<E>, sign: Sign) -> Result<Self> {
        require_weakly_invertible(base.dims())?;
        Ok(OrientedMor { base, sign })
    }

    pub fn identity(dims: &DimMatrix) -> Result<Self> {
        OrientedMor::new(MorMatrix::identity(dims)?, Sign::Plus)
    }

    pub fn base(&self) -> &MorMatrix<E> {
        &self.base
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Composition: compose the bases, multiply the signs.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        Ok(OrientedMor {
            base: self.base.compose(&rhs.base)?,
            sign: self.sign.mul(rhs.sign),
        })
    }

    /// Monoidal product: multiply the bases, multiply the signs.
    pub fn product(&self, rhs: &Self) -> Result<Self> {
        OrientedMor::new(self.base.product(&rhs.base)?, self.sign.mul(rhs.sign))
    }

    /// Block sum: block-diagonal base, product of signs.
    pub fn block_sum(&self, rhs: &Self) -> Result<Self> {
        OrientedMor::new(self.base.block_sum(&rhs.base)?, self.sign.mul(rhs.sign))
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(OrientedMor {
            base: self.base.inverse()?,
            sign: self.sign,
        })
    }

    /// Forget the sign.
    pub fn forget(&self) -> &MorMatrix<E> {
        &self.base
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        if self.sign != rhs.sign {
            return f64::INFINITY;
        }
        self.base.dist(&rhs.base)
    }
}

/// The lifted associator `(ua, sign(ua))`.
pub fn oriented_associator<E: EntryMor>(
    a: &DimMatrix,
    b: &DimMatrix,
    c: &DimMatrix,
) -> Result<OrientedMor<E>> {
    let sign = assoc_sign(a, b, c)?;
    OrientedMor::new(associator(a, b, c)?, sign)
}

/// Oriented determinant over graded-line entries:
/// `(f, s) ↦ det(f) ⊗ (1, s)`, landing in unit lines.
pub fn oriented_line_det<S: Scalar>(x: &OrientedMor<LineMor<S>>) -> Result<LineUnitMor<S>> {
    let d = LineUnitMor::from_line(&line_det(x.base())?)?;
    d.tensor(&LineUnitMor::new(1, S::from_int(x.sign().as_i64()))?)
}

/// Oriented determinant over vector-space entries.
pub fn oriented_det<S: Scalar>(x: &OrientedMor<VMor<S>>) -> Result<LineUnitMor<S>> {
    let d = LineUnitMor::from_line(&v_det(x.base())?)?;
    d.tensor(&LineUnitMor::new(1, S::from_int(x.sign().as_i64()))?)
}

/// The determinant-gerbe functor: project the oriented determinant to
/// units. With `(d, a) = det(base)` and sign `s` this is the closed form
/// `a^d · s` (valid because `d = ±1`); the composite route through
/// [`oriented_det`] and the unit projection is checked in the tests.
pub fn gerbe_det<S: Scalar>(x: &OrientedMor<VMor<S>>) -> Result<CStar<S>> {
    let det = v_det(x.base())?;
    if det.degree() != 1 && det.degree() != -1 {
        return Err(Error::internal(
            "weakly invertible matrix with non-unit determinant degree",
        ));
    }
    let a = det.scale().powi(det.degree())?;
    let signed = if x.sign().is_minus() { a.neg() } else { a };
    CStar::new(signed)
}

/// Includes a unit into the oriented rank-`n` category: the value sits in
/// the top-left `1x1` entry, identities elsewhere, sign +1.
pub fn gerbe_include<S: Scalar>(a: &CStar<S>, n: usize) -> Result<OrientedMor<VMor<S>>> {
    if n == 0 {
        return Err(Error::domain("rank must be at least 1"));
    }
    let corner = MorMatrix::new(
        DimMatrix::identity(1)?,
        vec![VMor::new(Mat::from_rows(vec![vec![a.value().clone()]])?)?],
    )?;
    let corner = OrientedMor::new(corner, Sign::Plus)?;
    if n == 1 {
        return Ok(corner);
    }
    let pad = OrientedMor::identity(&DimMatrix::identity(n - 1)?)?;
    corner.block_sum(&pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    type E = Exact;

    fn dm(rows: Vec<Vec<i64>>) -> DimMatrix {
        DimMatrix::from_rows(rows).unwrap()
    }

    fn shear_triple() -> (DimMatrix, DimMatrix, DimMatrix) {
        (
            dm(vec![vec![1, 1], vec![0, 1]]),
            dm(vec![vec![0, 1], vec![1, 1]]),
            dm(vec![vec![1, 0], vec![1, 1]]),
        )
    }

    #[test]
    fn sign_group_behaviour() {
        let d = dm(vec![vec![1, 1], vec![0, 1]]);
        let id = MorMatrix::<LineMor<E>>::identity(&d).unwrap();
        let plus = OrientedMor::new(id.clone(), Sign::Plus).unwrap();
        let minus = OrientedMor::new(id, Sign::Minus).unwrap();
        assert_eq!(plus.compose(&plus).unwrap().sign(), Sign::Plus);
        assert_eq!(minus.compose(&minus).unwrap().sign(), Sign::Plus);
        assert_eq!(minus.compose(&plus).unwrap().sign(), Sign::Minus);
        let unit = OrientedMor::<LineMor<E>>::identity(&DimMatrix::identity(2).unwrap()).unwrap();
        assert_eq!(minus.product(&unit).unwrap().sign(), Sign::Minus);
    }

    #[test]
    fn rejects_non_weakly_invertible() {
        let bad = dm(vec![vec![2, 0], vec![0, 1]]);
        let id = MorMatrix::<LineMor<E>>::identity(&bad).unwrap();
        assert!(OrientedMor::new(id, Sign::Plus).is_err());
    }

    #[test]
    fn lifted_associator_and_oriented_det() {
        let (a, b, c) = shear_triple();
        let ua = oriented_associator::<LineMor<E>>(&a, &b, &c).unwrap();
        assert_eq!(ua.sign(), Sign::Minus);
        // (d,a)⊗(1,s) with d=-1, a=-1, s=-1 gives (-1, 1): the identity.
        let det = oriented_line_det(&ua).unwrap();
        assert_eq!(det.degree(), -1);
        assert!(det.is_identity());

        let uav = oriented_associator::<VMor<E>>(&a, &b, &c).unwrap();
        assert!(oriented_det(&uav).unwrap().is_identity());
        // and the gerbe functor sends it to 1
        assert_eq!(gerbe_det(&uav).unwrap(), CStar::one());
    }

    #[test]
    fn oriented_det_of_identity() {
        let (a, _, _) = shear_triple();
        let id = OrientedMor::<LineMor<E>>::identity(&a).unwrap();
        let d = oriented_line_det(&id).unwrap();
        assert_eq!(d.scale(), &E::from_int(1));
    }

    #[test]
    fn gerbe_det_closed_form() {
        // base determinant (-1, 2) with sign -1 gives 2^(-1)·(-1) = -1/2
        let f = VMor::new(
            Mat::from_rows(vec![
                vec![E::from_int(0), E::from_int(1)],
                vec![E::from_int(2), E::from_int(0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let dims = dm(vec![vec![2]]);
        let m = OrientedMor::new(
            MorMatrix::new(dims, vec![f]).unwrap(),
            Sign::Minus,
        );
        // dims [[2]] has determinant 2: not weakly invertible
        assert!(m.is_err());

        // realize determinant (-1, 2) honestly: on the antidiagonal object
        // the odd Leibniz term is inverted, so the 1x1 block holds 1/2
        let dims = dm(vec![vec![0, 1], vec![1, 0]]);
        let entries = vec![
            VMor::identity(0),
            VMor::new(Mat::from_rows(vec![vec![E::ratio(1, 2).unwrap()]]).unwrap()).unwrap(),
            VMor::identity(1),
            VMor::identity(0),
        ];
        let m = OrientedMor::new(MorMatrix::new(dims, entries).unwrap(), Sign::Minus).unwrap();
        let det = v_det(m.base()).unwrap();
        assert_eq!(det, LineMor::new(-1, E::from_int(2)).unwrap());
        assert_eq!(gerbe_det(&m).unwrap().value(), &E::ratio(-1, 2).unwrap());
        // closed form equals the composite p ∘ oriented determinant
        let via_projection = crate::biperm::project_unit(&oriented_det(&m).unwrap());
        assert_eq!(gerbe_det(&m).unwrap(), via_projection);
    }

    #[test]
    fn block_sum_and_inclusion() {
        let a = CStar::new(E::ratio(3, 7).unwrap()).unwrap();
        for n in 1..=4usize {
            let inc = gerbe_include(&a, n).unwrap();
            assert_eq!(inc.sign(), Sign::Plus);
            assert_eq!(gerbe_det(&inc).unwrap(), a);
        }
        let one = gerbe_include(&CStar::<E>::one(), 3).unwrap();
        assert_eq!(
            one,
            OrientedMor::identity(&DimMatrix::identity(3).unwrap()).unwrap()
        );
        // functoriality
        let b = CStar::new(E::from_int(5)).unwrap();
        let ab = gerbe_include(&a.mul(&b), 3).unwrap();
        let composed = gerbe_include(&a, 3)
            .unwrap()
            .compose(&gerbe_include(&b, 3).unwrap())
            .unwrap();
        assert_eq!(ab, composed);
    }

    #[test]
    fn det_multiplicative_over_block_sum() {
        let (a, b, c) = shear_triple();
        let x = oriented_associator::<LineMor<E>>(&a, &b, &c).unwrap();
        let y = OrientedMor::<LineMor<E>>::identity(&dm(vec![vec![1]])).unwrap();
        let sum = x.block_sum(&y).unwrap();
        let lhs = oriented_line_det(&sum).unwrap();
        let rhs = oriented_line_det(&x)
            .unwrap()
            .tensor(&oriented_line_det(&y).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }
}
