//! Monoidal categories of object/morphism matrices over a bipermutative
//! base, their associators, and the graded-line determinant functors.
//!
//! Objects are integer dimension matrices multiplying by the usual formula
//! (dimensions add under ⊕ and multiply under ⊗). A morphism matrix `F`
//! times `G` has entry `(i,k) = ⊕_j F_ij ⊗ G_jk` with `j` ascending and the
//! sum left-nested. The product is strictly associative on objects but not
//! on morphisms; the associator `(A·B)·C → A·(B·C)` permutes, in each
//! entry, the multi-index set
//!   {(l, p, α, β, γ) : α < A[i][p], β < B[p][l], γ < C[l][k]}
//! from its source lexicographic order `(l,p,α,β,γ)` to the target order
//! `(p,α,l,β,γ)`.
//!
//! The determinant over graded lines expands the Leibniz sum with the
//! weakly strict ⊕-inverse standing in for subtraction; it sends the matrix
//! product to the tensor product of lines, but is not monoidal: associators
//! of weakly invertible matrices can pick up a minus sign, and that sign is
//! the seed of everything in [`crate::oriented`] and [`crate::charted`].

use std::fmt;

use crate::biperm::{det_line, perm_to_matrix, sign_scalar, LineMor, VMor};
use crate::error::Error;
use crate::par;
use crate::perm::{Perm, Sign};
use crate::scalar::Scalar;
use crate::Result;

/// Determinant expansion enumerates all `n!` permutations; chart-transition
/// matrices are small by nature, so cap the size.
pub const MAX_RANK: usize = 8;

/// Square integer matrix of object dimensions/degrees.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DimMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl DimMatrix {
    pub fn new(n: usize, entries: Vec<i64>) -> Result<Self> {
        if n == 0 || n > MAX_RANK {
            return Err(Error::shape(format!("matrix rank must be in 1..={MAX_RANK}")));
        }
        if entries.len() != n * n {
            return Err(Error::shape("dimension matrix must be square"));
        }
        Ok(DimMatrix { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        for r in &rows {
            if r.len() != n {
                return Err(Error::shape("dimension matrix must be square"));
            }
        }
        DimMatrix::new(n, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        DimMatrix::new(
            n,
            (0..n * n)
                .map(|idx| if idx / n == idx % n { 1 } else { 0 })
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn is_nonneg(&self) -> bool {
        self.entries.iter().all(|&e| e >= 0)
    }

    /// Ordinary integer matrix product.
    pub fn product(&self, rhs: &DimMatrix) -> Result<DimMatrix> {
        if self.n != rhs.n {
            return Err(Error::shape("object product: size mismatch"));
        }
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let mut acc = 0i64;
                for j in 0..n {
                    let term = self
                        .get(i, j)
                        .checked_mul(rhs.get(j, k))
                        .ok_or_else(|| Error::domain("dimension overflow"))?;
                    acc = acc
                        .checked_add(term)
                        .ok_or_else(|| Error::domain("dimension overflow"))?;
                }
                entries.push(acc);
            }
        }
        DimMatrix::new(n, entries)
    }

    pub fn block_sum(&self, rhs: &DimMatrix) -> Result<DimMatrix> {
        let n = self.n + rhs.n;
        let mut entries = vec![0i64; n * n];
        for i in 0..self.n {
            for j in 0..self.n {
                entries[i * n + j] = self.get(i, j);
            }
        }
        for i in 0..rhs.n {
            for j in 0..rhs.n {
                entries[(self.n + i) * n + (self.n + j)] = rhs.get(i, j);
            }
        }
        DimMatrix::new(n, entries)
    }

    /// Integer determinant (Bareiss, fraction-free).
    pub fn det(&self) -> i64 {
        let n = self.n;
        let mut m: Vec<i128> = self.entries.iter().map(|&e| e as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n.saturating_sub(1) {
            if m[k * n + k] == 0 {
                let Some(swap) = (k + 1..n).find(|&r| m[r * n + k] != 0) else {
                    return 0;
                };
                for j in 0..n {
                    m.swap(k * n + j, swap * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
                }
                m[i * n + k] = 0;
            }
            prev = m[k * n + k];
        }
        (sign * m[n * n - 1]) as i64
    }
}

impl fmt::Display for DimMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

/// Certifies (non-)weak-invertibility: a matrix of objects is weakly
/// invertible exactly when its dimension determinant is ±1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakInvCert {
    pub dims: DimMatrix,
    pub detdim: i64,
}

impl WeakInvCert {
    pub fn new(dims: DimMatrix) -> Self {
        let detdim = dims.det();
        WeakInvCert { dims, detdim }
    }

    pub fn is_weakly_invertible(&self) -> bool {
        self.detdim == 1 || self.detdim == -1
    }
}

pub fn require_weakly_invertible(dims: &DimMatrix) -> Result<()> {
    let cert = WeakInvCert::new(dims.clone());
    if !cert.is_weakly_invertible() {
        return Err(Error::domain(format!(
            "matrix is not weakly invertible (dimension determinant {})",
            cert.detdim
        )));
    }
    Ok(())
}

/// Morphism entries of a matrix category: what the matrix machinery needs
/// from the base category.
pub trait EntryMor: Clone + PartialEq + fmt::Debug + Send + Sync {
    type Sc: Scalar;

    fn degree(&self) -> i64;
    fn identity_of(degree: i64) -> Result<Self>;
    fn direct_sum(&self, rhs: &Self) -> Self;
    fn tensor(&self, rhs: &Self) -> Result<Self>;
    fn compose(&self, rhs: &Self) -> Result<Self>;
    fn inverse(&self) -> Result<Self>;
    fn dist(&self, rhs: &Self) -> f64;
    /// Realize a permutation of a `degree`-dimensional object.
    fn from_perm(p: &Perm, degree: i64) -> Result<Self>;
}

impl<S: Scalar> EntryMor for VMor<S> {
    type Sc = S;

    fn degree(&self) -> i64 {
        self.dim() as i64
    }

    fn identity_of(degree: i64) -> Result<Self> {
        if degree < 0 {
            return Err(Error::domain("vector-space dimensions are non-negative"));
        }
        Ok(VMor::identity(degree as usize))
    }

    fn direct_sum(&self, rhs: &Self) -> Self {
        self.direct_sum(rhs)
    }

    fn tensor(&self, rhs: &Self) -> Result<Self> {
        Ok(self.tensor(rhs))
    }

    fn compose(&self, rhs: &Self) -> Result<Self> {
        self.compose(rhs)
    }

    fn inverse(&self) -> Result<Self> {
        self.inverse()
    }

    fn dist(&self, rhs: &Self) -> f64 {
        self.dist(rhs)
    }

    fn from_perm(p: &Perm, degree: i64) -> Result<Self> {
        if degree != p.size() as i64 {
            return Err(Error::shape("permutation size does not match dimension"));
        }
        Ok(perm_to_matrix(p))
    }
}

impl<S: Scalar> EntryMor for LineMor<S> {
    type Sc = S;

    fn degree(&self) -> i64 {
        self.degree()
    }

    fn identity_of(degree: i64) -> Result<Self> {
        Ok(LineMor::identity(degree))
    }

    fn direct_sum(&self, rhs: &Self) -> Self {
        self.direct_sum(rhs)
    }

    fn tensor(&self, rhs: &Self) -> Result<Self> {
        self.tensor(rhs)
    }

    fn compose(&self, rhs: &Self) -> Result<Self> {
        self.compose(rhs)
    }

    fn inverse(&self) -> Result<Self> {
        Ok(self.compose_inverse())
    }

    fn dist(&self, rhs: &Self) -> f64 {
        self.dist(rhs)
    }

    fn from_perm(p: &Perm, degree: i64) -> Result<Self> {
        if degree != p.size() as i64 {
            return Err(Error::shape("permutation size does not match degree"));
        }
        LineMor::new(degree, sign_scalar(p.sign()))
    }
}

/// A square matrix of base-category automorphisms; entry `(i,j)` is an
/// automorphism of the object recorded in `dims[i][j]`.
#[derive(Clone, PartialEq, Debug)]
pub struct MorMatrix<E> {
    dims: DimMatrix,
    entries: Vec<E>,
}

impl<E: EntryMor> MorMatrix<E> {
    pub fn new(dims: DimMatrix, entries: Vec<E>) -> Result<Self> {
        let n = dims.size();
        if entries.len() != n * n {
            return Err(Error::shape("morphism matrix must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                if entries[i * n + j].degree() != dims.get(i, j) {
                    return Err(Error::shape(format!(
                        "entry ({i},{j}) has degree {} but the object says {}",
                        entries[i * n + j].degree(),
                        dims.get(i, j)
                    )));
                }
            }
        }
        Ok(MorMatrix { dims, entries })
    }

    pub fn identity(dims: &DimMatrix) -> Result<Self> {
        let n = dims.size();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(E::identity_of(dims.get(i, j))?);
            }
        }
        Ok(MorMatrix {
            dims: dims.clone(),
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.dims.size()
    }

    pub fn dims(&self) -> &DimMatrix {
        &self.dims
    }

    pub fn entry(&self, i: usize, j: usize) -> &E {
        &self.entries[i * self.dims.size() + j]
    }

    pub fn map_entries<F: EntryMor>(&self, f: impl Fn(&E) -> Result<F>) -> Result<MorMatrix<F>> {
        let entries = self
            .entries
            .iter()
            .map(|e| f(e))
            .collect::<Result<Vec<_>>>()?;
        MorMatrix::new(self.dims.clone(), entries)
    }

    /// Monoidal product: entry `(i,k) = ⊕_j self_ij ⊗ rhs_jk`, `j`
    /// ascending, sum left-nested.
    pub fn product(&self, rhs: &Self) -> Result<Self> {
        let n = self.size();
        if n != rhs.size() {
            return Err(Error::shape("morphism product: size mismatch"));
        }
        let dims = self.dims.product(&rhs.dims)?;
        let entries = par::try_map_indexed(n * n, |idx| {
            let (i, k) = (idx / n, idx % n);
            let mut acc = E::identity_of(0)?;
            for j in 0..n {
                let term = self.entry(i, j).tensor(rhs.entry(j, k))?;
                acc = acc.direct_sum(&term);
            }
            Ok(acc)
        })?;
        MorMatrix::new(dims, entries)
    }

    /// Entrywise composition of automorphism matrices of the same object.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::shape("compose: object mismatch"));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.compose(b))
            .collect::<Result<Vec<_>>>()?;
        MorMatrix::new(self.dims.clone(), entries)
    }

    pub fn inverse(&self) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.inverse())
            .collect::<Result<Vec<_>>>()?;
        MorMatrix::new(self.dims.clone(), entries)
    }

    pub fn block_sum(&self, rhs: &Self) -> Result<Self> {
        let dims = self.dims.block_sum(&rhs.dims)?;
        let (n1, n) = (self.size(), dims.size());
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = if i < n1 && j < n1 {
                    self.entry(i, j).clone()
                } else if i >= n1 && j >= n1 {
                    rhs.entry(i - n1, j - n1).clone()
                } else {
                    E::identity_of(0)?
                };
                entries.push(e);
            }
        }
        MorMatrix::new(dims, entries)
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        if self.dims != rhs.dims {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }
}

/// The multi-index permutation of one associator entry, from the source
/// lexicographic order `(l,p,α,β,γ)` to the target order `(p,α,l,β,γ)`.
fn entry_assoc_perm(
    a: &DimMatrix,
    b: &DimMatrix,
    c: &DimMatrix,
    i: usize,
    k: usize,
) -> Result<Perm> {
    let n = a.size();
    let mut target_keys: Vec<(usize, usize, usize, usize, usize)> = Vec::new();
    for l in 0..n {
        for p in 0..n {
            let (da, db, dc) = (a.get(i, p), b.get(p, l), c.get(l, k));
            if da < 0 || db < 0 || dc < 0 {
                return Err(Error::domain(
                    "associator needs non-negative dimension matrices",
                ));
            }
            for al in 0..da as usize {
                for be in 0..db as usize {
                    for ga in 0..dc as usize {
                        target_keys.push((p, al, l, be, ga));
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..target_keys.len()).collect();
    order.sort_by_key(|&idx| target_keys[idx]);
    let mut images = vec![0usize; target_keys.len()];
    for (rank, &src) in order.iter().enumerate() {
        images[src] = rank;
    }
    Perm::from_images(images)
}

/// Coherency associator `(A·B)·C → A·(B·C)` of the matrix product,
/// realized in the base category named by `E`.
pub fn associator<E: EntryMor>(
    a: &DimMatrix,
    b: &DimMatrix,
    c: &DimMatrix,
) -> Result<MorMatrix<E>> {
    let n = a.size();
    if b.size() != n || c.size() != n {
        return Err(Error::shape("associator: size mismatch"));
    }
    let dims = a.product(b)?.product(c)?;
    let entries = par::try_map_indexed(n * n, |idx| {
        let (i, k) = (idx / n, idx % n);
        let p = entry_assoc_perm(a, b, c, i, k)?;
        E::from_perm(&p, dims.get(i, k))
    })?;
    MorMatrix::new(dims, entries)
}

/// The associator in the opposite direction `A·(B·C) → (A·B)·C`, as used
/// by the cover-diagram orientation of charted bundles.
pub fn associator_inv<E: EntryMor>(
    a: &DimMatrix,
    b: &DimMatrix,
    c: &DimMatrix,
) -> Result<MorMatrix<E>> {
    associator::<E>(a, b, c)?.inverse()
}

/// Canonical coherence morphism
/// `(F_0···F_{s-1}) · (F_s···F_{k-1}) → F_0···F_{k-1}`
/// (every product left-nested), built from associators. With these as
/// coherency maps, a chain of transition matrices always satisfies the
/// bundle cocycle square on the nose.
pub fn reassociator<E: EntryMor>(factors: &[DimMatrix], split: usize) -> Result<MorMatrix<E>> {
    let k = factors.len();
    if k < 2 || split == 0 || split >= k {
        return Err(Error::shape("reassociator needs factors on both sides"));
    }
    let left_product = |range: std::ops::Range<usize>| -> Result<DimMatrix> {
        let mut acc = factors[range.start].clone();
        for f in &factors[range.start + 1..range.end] {
            acc = acc.product(f)?;
        }
        Ok(acc)
    };
    if k - split == 1 {
        // (F_0···F_{s-1}) · F_s is already the left-nested total product
        return MorMatrix::identity(&left_product(0..k)?);
    }
    let left = left_product(0..split)?;
    let right_init = left_product(split..k - 1)?;
    let last = &factors[k - 1];
    // L·(R'·X) → (L·R')·X
    let step = associator_inv::<E>(&left, &right_init, last)?;
    // then reassociate L·R' and carry X along
    let rec = reassociator::<E>(&factors[..k - 1], split)?;
    let id_last = MorMatrix::<E>::identity(last)?;
    rec.product(&id_last)?.compose(&step)
}

fn for_each_permutation<F>(n: usize, mut f: F) -> Result<()>
where
    F: FnMut(&[usize], bool) -> Result<()>,
{
    // Heap's algorithm; each swap flips the parity.
    let mut items: Vec<usize> = (0..n).collect();
    let mut stack = vec![0usize; n];
    let mut odd = false;
    f(&items, odd)?;
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(stack[i], i);
            }
            odd = !odd;
            f(&items, odd)?;
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(())
}

/// Graded-line determinant of a morphism matrix: the Leibniz sum with the
/// weakly strict ⊕-inverse applied to odd-permutation terms. The degree of
/// the result is the integer determinant of the dimension matrix.
pub fn line_det<S: Scalar>(m: &MorMatrix<LineMor<S>>) -> Result<LineMor<S>> {
    let n = m.size();
    let mut acc: Option<LineMor<S>> = None;
    for_each_permutation(n, |perm, odd| {
        let mut term: Option<LineMor<S>> = None;
        for (row, &col) in perm.iter().enumerate() {
            let e = m.entry(row, col);
            term = Some(match term {
                None => e.clone(),
                Some(t) => t.tensor(e)?,
            });
        }
        let mut term = term.expect("rank >= 1");
        if odd {
            term = term.weak_inverse();
        }
        acc = Some(match acc.take() {
            None => term,
            Some(t) => t.direct_sum(&term),
        });
        Ok(())
    })?;
    Ok(acc.expect("rank >= 1"))
}

/// Determinant of a vector-space morphism matrix: the line determinant of
/// the entrywise determinant-functor image.
pub fn v_det<S: Scalar>(m: &MorMatrix<VMor<S>>) -> Result<LineMor<S>> {
    let lines = m.map_entries(det_line)?;
    line_det(&lines)
}

/// The sign of the associator of three weakly invertible dimension
/// matrices: the ±1 scale of the line determinant of the associator.
/// Computed here purely in integer arithmetic (entry permutation signs and
/// mod-2 Leibniz exponents); the scalar determinant route is kept as an
/// independent cross-check in the tests.
pub fn assoc_sign(a: &DimMatrix, b: &DimMatrix, c: &DimMatrix) -> Result<Sign> {
    require_weakly_invertible(a)?;
    require_weakly_invertible(b)?;
    require_weakly_invertible(c)?;
    let n = a.size();
    if b.size() != n || c.size() != n {
        return Err(Error::shape("associator sign: size mismatch"));
    }
    let dims = a.product(b)?.product(c)?;
    let signs = par::try_map_indexed(n * n, |idx| {
        let (i, k) = (idx / n, idx % n);
        Ok(entry_assoc_perm(a, b, c, i, k)?.sign())
    })?;
    let mut total = Sign::Plus;
    for_each_permutation(n, |perm, _odd| {
        for (row, &col) in perm.iter().enumerate() {
            if !signs[row * n + col].is_minus() {
                continue;
            }
            // exponent of this entry is the product of the other selected
            // degrees; only its parity matters, and inversion (odd
            // permutation terms) does not change a sign
            let odd_exponent = perm
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != row)
                .all(|(r, &cl)| dims.get(r, cl).rem_euclid(2) == 1);
            if odd_exponent {
                total = total.mul(Sign::Minus);
            }
        }
        Ok(())
    })?;
    Ok(total)
}

/// Result of checking that the associator sign is unchanged by monoidal
/// product with identity morphisms (on either side).
#[derive(Clone, Debug)]
pub struct StabilityCheck {
    pub base: Sign,
    pub right_product: Sign,
    pub left_product: Sign,
}

impl StabilityCheck {
    pub fn is_stable(&self) -> bool {
        self.base == self.right_product && self.base == self.left_product
    }
}

/// Verifies, for one instance, that `sign(ua_{A,B,C} · id_D)` and
/// `sign(id_D · ua_{A,B,C})` both equal `sign(ua_{A,B,C})`.
pub fn sign_stability_check<S: Scalar>(
    a: &DimMatrix,
    b: &DimMatrix,
    c: &DimMatrix,
    d: &DimMatrix,
) -> Result<StabilityCheck> {
    require_weakly_invertible(d)?;
    let base = assoc_sign(a, b, c)?;
    let ua: MorMatrix<LineMor<S>> = associator(a, b, c)?;
    let idd = MorMatrix::<LineMor<S>>::identity(d)?;
    let right_product = line_det(&ua.product(&idd)?)?.sign_of_scale()?;
    let left_product = line_det(&idd.product(&ua)?)?.sign_of_scale()?;
    Ok(StabilityCheck {
        base,
        right_product,
        left_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    type E = Exact;

    pub(crate) fn dm(rows: Vec<Vec<i64>>) -> DimMatrix {
        DimMatrix::from_rows(rows).unwrap()
    }

    /// The three shear/swap matrices whose associator carries a minus sign.
    pub(crate) fn shear_triple() -> (DimMatrix, DimMatrix, DimMatrix) {
        (
            dm(vec![vec![1, 1], vec![0, 1]]),
            dm(vec![vec![0, 1], vec![1, 1]]),
            dm(vec![vec![1, 0], vec![1, 1]]),
        )
    }

    #[test]
    fn object_products() {
        let (a, b, c) = shear_triple();
        let ab = a.product(&b).unwrap();
        assert_eq!(ab, dm(vec![vec![1, 2], vec![1, 1]]));
        let abc = ab.product(&c).unwrap();
        assert_eq!(abc, dm(vec![vec![3, 2], vec![2, 1]]));
        let id = DimMatrix::identity(2).unwrap();
        assert_eq!(a.product(&id).unwrap(), a);
        assert_eq!(abc.det(), -1);
    }

    #[test]
    fn det_multiplicative_over_product() {
        let (a, b, c) = shear_triple();
        let all = [a.clone(), b.clone(), c.clone(), dm(vec![vec![2, 1], vec![1, 1]])];
        for x in &all {
            for y in &all {
                assert_eq!(x.product(y).unwrap().det(), x.det() * y.det());
            }
        }
    }

    #[test]
    fn weak_invertibility_certificate() {
        let (a, _, _) = shear_triple();
        assert!(WeakInvCert::new(a).is_weakly_invertible());
        let bad = dm(vec![vec![2, 0], vec![0, 1]]);
        let cert = WeakInvCert::new(bad.clone());
        assert_eq!(cert.detdim, 2);
        assert!(!cert.is_weakly_invertible());
        assert!(require_weakly_invertible(&bad).is_err());
    }

    #[test]
    fn mor_product_basics() {
        let (a, b, _) = shear_triple();
        let ida = MorMatrix::<LineMor<E>>::identity(&a).unwrap();
        let idb = MorMatrix::<LineMor<E>>::identity(&b).unwrap();
        let prod = ida.product(&idb).unwrap();
        assert_eq!(prod, MorMatrix::identity(&a.product(&b).unwrap()).unwrap());

        // 1x1 case reduces to the line tensor
        let x = MorMatrix::new(
            dm(vec![vec![2]]),
            vec![LineMor::new(2, E::from_int(3)).unwrap()],
        )
        .unwrap();
        let y = MorMatrix::new(
            dm(vec![vec![3]]),
            vec![LineMor::new(3, E::from_int(2)).unwrap()],
        )
        .unwrap();
        let xy = x.product(&y).unwrap();
        assert_eq!(
            *xy.entry(0, 0),
            LineMor::new(6, E::from_int(108)).unwrap()
        );
    }

    #[test]
    fn associator_golden_example() {
        // identity in all entries except (0,0), which is the transposition
        // of the first two of three summands: sign -1.
        let (a, b, c) = shear_triple();
        let ua: MorMatrix<LineMor<E>> = associator(&a, &b, &c).unwrap();
        assert_eq!(*ua.dims(), dm(vec![vec![3, 2], vec![2, 1]]));
        assert_eq!(*ua.entry(0, 0), LineMor::new(3, E::from_int(-1)).unwrap());
        assert_eq!(*ua.entry(0, 1), LineMor::identity(2));
        assert_eq!(*ua.entry(1, 0), LineMor::identity(2));
        assert_eq!(*ua.entry(1, 1), LineMor::identity(1));

        let uav: MorMatrix<VMor<E>> = associator(&a, &b, &c).unwrap();
        let expected = VMor::new(
            crate::linalg::Mat::from_rows(vec![
                vec![E::from_int(0), E::from_int(1), E::from_int(0)],
                vec![E::from_int(1), E::from_int(0), E::from_int(0)],
                vec![E::from_int(0), E::from_int(0), E::from_int(1)],
            ])
            .unwrap(),
        )
        .unwrap();
        assert_eq!(uav.entry(0, 0), &expected);
    }

    #[test]
    fn associator_identity_slots() {
        let (a, b, c) = shear_triple();
        let id = DimMatrix::identity(2).unwrap();
        for (x, y, z) in [
            (id.clone(), b.clone(), c.clone()),
            (a.clone(), b.clone(), id.clone()),
        ] {
            let ua: MorMatrix<LineMor<E>> = associator(&x, &y, &z).unwrap();
            let expect = MorMatrix::identity(ua.dims()).unwrap();
            assert_eq!(ua, expect);
        }
    }

    #[test]
    fn line_det_golden() {
        let (a, b, c) = shear_triple();
        let ua: MorMatrix<LineMor<E>> = associator(&a, &b, &c).unwrap();
        let det = line_det(&ua).unwrap();
        assert_eq!(det, LineMor::new(-1, E::from_int(-1)).unwrap());
        assert_eq!(assoc_sign(&a, &b, &c).unwrap(), Sign::Minus);
    }

    #[test]
    fn line_det_identity_and_v_det() {
        let d = dm(vec![vec![2, 1], vec![1, 1]]);
        let id = MorMatrix::<LineMor<E>>::identity(&d).unwrap();
        assert_eq!(line_det(&id).unwrap(), LineMor::identity(d.det()));

        // 1x1 vector-space case: v_det([f]) = (dim f, det f)
        let f = VMor::new(
            crate::linalg::Mat::from_rows(vec![
                vec![E::from_int(1), E::from_int(2)],
                vec![E::from_int(0), E::from_int(3)],
            ])
            .unwrap(),
        )
        .unwrap();
        let m = MorMatrix::new(dm(vec![vec![2]]), vec![f]).unwrap();
        assert_eq!(v_det(&m).unwrap(), LineMor::new(2, E::from_int(3)).unwrap());
    }

    #[test]
    fn stabilized_variants_keep_the_sign() {
        let (a, b, c) = shear_triple();
        // block sum with identities on all three factors, ranks 3 and 4
        for pad in 1..=2usize {
            let id = DimMatrix::identity(pad).unwrap();
            let (x, y, z) = (
                a.block_sum(&id).unwrap(),
                b.block_sum(&id).unwrap(),
                c.block_sum(&id).unwrap(),
            );
            assert_eq!(assoc_sign(&x, &y, &z).unwrap(), Sign::Minus);
        }
        // middle factor block-summed with a swap so all object
        // determinants are +1
        let id2 = DimMatrix::identity(2).unwrap();
        let swap = dm(vec![vec![0, 1], vec![1, 0]]);
        let (x, y, z) = (
            a.block_sum(&id2).unwrap(),
            b.block_sum(&swap).unwrap(),
            c.block_sum(&id2).unwrap(),
        );
        assert_eq!(x.product(&y).unwrap().product(&z).unwrap().det(), 1);
        assert_eq!(assoc_sign(&x, &y, &z).unwrap(), Sign::Minus);
        // cross-check through the scalar determinant route
        let ua: MorMatrix<LineMor<E>> = associator(&x, &y, &z).unwrap();
        assert_eq!(line_det(&ua).unwrap().sign_of_scale().unwrap(), Sign::Minus);
    }

    #[test]
    fn sign_stability_examples() {
        let (a, b, c) = shear_triple();
        let id2 = DimMatrix::identity(2).unwrap();
        let check = sign_stability_check::<E>(&a, &b, &c, &id2).unwrap();
        assert!(check.is_stable());
        assert_eq!(check.base, Sign::Minus);

        let id = DimMatrix::identity(2).unwrap();
        let trivial = sign_stability_check::<E>(&id, &id, &id, &a).unwrap();
        assert!(trivial.is_stable());
        assert_eq!(trivial.base, Sign::Plus);
    }

    #[test]
    fn assoc_sign_rejects_non_invertible() {
        let (a, b, _) = shear_triple();
        let bad = dm(vec![vec![2, 0], vec![0, 1]]);
        assert!(assoc_sign(&a, &b, &bad).is_err());
    }
}
