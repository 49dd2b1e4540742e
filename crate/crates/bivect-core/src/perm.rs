//! The permutation category: one object per size, permutations as
//! morphisms, block sum and lexicographic tensor as the two products.
//!
//! Composition follows `(p ∘ q)(i) = p(q(i))`.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Multiplicative sign, the value group of all coherency bookkeeping.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_parity(odd: bool) -> Sign {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::input(format!("sign must be +1 or -1, got {v}"))),
        }
    }

    /// Parity of `(-1)^e`.
    pub fn pow(self, e: i64) -> Sign {
        if e.rem_euclid(2) == 0 {
            Sign::Plus
        } else {
            self
        }
    }
}

/// A permutation of `{0, .., n-1}` stored as its image list.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm {
            images: (0..n).collect(),
        }
    }

    /// The transposition of two elements.
    pub fn swap2() -> Perm {
        Perm { images: vec![1, 0] }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Perm> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || seen[v] {
                return Err(Error::input("image list is not a bijection"));
            }
            seen[v] = true;
        }
        Ok(Perm { images })
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `(self ∘ rhs)(i) = self(rhs(i))`.
    pub fn compose(&self, rhs: &Perm) -> Result<Perm> {
        if self.size() != rhs.size() {
            return Err(Error::shape("compose: size mismatch"));
        }
        Ok(Perm {
            images: rhs.images.iter().map(|&i| self.images[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.size()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v] = i;
        }
        Perm { images: inv }
    }

    /// Sign as parity of the inversion count.
    pub fn sign(&self) -> Sign {
        let mut inversions = 0usize;
        for i in 0..self.images.len() {
            for j in i + 1..self.images.len() {
                if self.images[i] > self.images[j] {
                    inversions += 1;
                }
            }
        }
        Sign::from_parity(inversions % 2 == 1)
    }

    /// Disjoint-union sum: acts as `self` on the first block and as `rhs`
    /// on the second.
    pub fn block_sum(&self, rhs: &Perm) -> Perm {
        let n = self.size();
        let mut images = self.images.clone();
        images.extend(rhs.images.iter().map(|&v| v + n));
        Perm { images }
    }

    /// Product of sets under lexicographic ranking: the pair `(i, j)` at
    /// rank `i*m + j` maps to `(self(i), rhs(j))`.
    pub fn tensor(&self, rhs: &Perm) -> Perm {
        let (n, m) = (self.size(), rhs.size());
        let mut images = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                images.push(self.images[i] * m + rhs.images[j]);
            }
        }
        Perm { images }
    }

    /// Coherency twist of the sum: the block shuffle identifying
    /// `n ⊕ m` with `m ⊕ n`.
    pub fn twist_sum(n: usize, m: usize) -> Perm {
        let mut images = Vec::with_capacity(n + m);
        for i in 0..n {
            images.push(m + i);
        }
        for j in 0..m {
            images.push(j);
        }
        Perm { images }
    }

    /// Coherency twist of the product: the lex-order transposition
    /// identifying `n ⊗ m` with `m ⊗ n`.
    pub fn twist_tensor(n: usize, m: usize) -> Perm {
        let mut images = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                images.push(j * n + i);
            }
        }
        Perm { images }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sum_example() {
        // id_2 ⊕ swap_2 sends (1,2,3,4) to (1,2,4,3) in one-based terms.
        let p = Perm::identity(2).block_sum(&Perm::swap2());
        assert_eq!(p.images(), &[0, 1, 3, 2]);
    }

    #[test]
    fn tensor_unit_and_example() {
        let p = Perm::swap2().tensor(&Perm::identity(1));
        assert_eq!(p, Perm::swap2());

        // Enumerating pairs (i,j) -> (p(i), q(j)) by lex rank gives the
        // order-reversing 4-permutation for swap ⊗ swap.
        let q = Perm::swap2().tensor(&Perm::swap2());
        assert_eq!(q.images(), &[3, 2, 1, 0]);
    }

    #[test]
    fn tensor_matches_pair_enumeration() {
        // Independent oracle: build the image list directly from pairs.
        let p = Perm::from_images(vec![2, 0, 1]).unwrap();
        let q = Perm::from_images(vec![1, 0]).unwrap();
        let t = p.tensor(&q);
        let (n, m) = (3, 2);
        for i in 0..n {
            for j in 0..m {
                assert_eq!(t.apply(i * m + j), p.apply(i) * m + q.apply(j));
            }
        }
    }

    #[test]
    fn twists() {
        assert_eq!(Perm::twist_sum(1, 1), Perm::swap2());
        assert_eq!(Perm::twist_sum(1, 1).sign(), Sign::Minus);
        assert_eq!(Perm::twist_sum(3, 0), Perm::identity(3));
        assert_eq!(Perm::twist_tensor(2, 2).sign(), Sign::Minus);
        // twist_sum(n,m) has nm inversions
        for n in 0..5usize {
            for m in 0..5usize {
                assert_eq!(
                    Perm::twist_sum(n, m).sign(),
                    Sign::from_parity((n * m) % 2 == 1)
                );
            }
        }
    }

    #[test]
    fn twist_inverse_pairing() {
        for n in 0..4usize {
            for m in 0..4usize {
                let fwd = Perm::twist_sum(n, m);
                let back = Perm::twist_sum(m, n);
                assert_eq!(back.compose(&fwd).unwrap(), Perm::identity(n + m));
                let fwd = Perm::twist_tensor(n, m);
                let back = Perm::twist_tensor(m, n);
                assert_eq!(back.compose(&fwd).unwrap(), Perm::identity(n * m));
            }
        }
    }

    #[test]
    fn composition_convention() {
        // (p ∘ q)(i) = p(q(i))
        let p = Perm::from_images(vec![1, 2, 0]).unwrap();
        let q = Perm::from_images(vec![0, 2, 1]).unwrap();
        let pq = p.compose(&q).unwrap();
        for i in 0..3 {
            assert_eq!(pq.apply(i), p.apply(q.apply(i)));
        }
        assert_eq!(p.compose(&p.inverse()).unwrap(), Perm::identity(3));
    }

    #[test]
    fn sign_is_multiplicative() {
        let p = Perm::from_images(vec![1, 2, 0, 3]).unwrap();
        let q = Perm::from_images(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(
            p.compose(&q).unwrap().sign(),
            p.sign().mul(q.sign())
        );
    }
}
