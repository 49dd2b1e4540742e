//! Charted 2-vector bundles over finite ordered covers.
//!
//! A bundle assigns a weakly invertible dimension matrix to every ordered
//! chart pair and, to every ordered triple, sampled invertible coherency
//! maps. Validity is the commuting square on every chart quadruple
//!
//! ```text
//!   φ^{abd} ∘ (id · φ^{bcd}) = φ^{acd} ∘ (φ^{abc} · id) ∘ ua
//! ```
//!
//! with `ua` the associator oriented `E^{ab}·(E^{bc}·E^{cd}) →
//! (E^{ab}·E^{bc})·E^{cd}`. The associator signs of the dimension matrices
//! form a ±1 Čech 3-cocycle on the nerve; a bundle is orientable exactly
//! when that class vanishes, and the GF(2) solver either produces a sign
//! lift of the coherency maps or an auditable certificate that none
//! exists. An oriented bundle maps onward to a charted gerbe (a C*-valued
//! 2-cocycle) through the determinant-gerbe functor.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::biperm::{CStar, VMor};
use crate::error::Error;
use crate::gf2;
use crate::matrixcat::{assoc_sign, associator_inv, DimMatrix, MorMatrix, WeakInvCert};
use crate::oriented::{gerbe_det, OrientedMor};
use crate::par;
use crate::perm::Sign;
use crate::scalar::Scalar;
use crate::Result;

pub type PointId = u64;
pub type Pair = (usize, usize);
pub type Triple = (usize, usize, usize);
pub type Quad = (usize, usize, usize, usize);

/// A finite ordered cover: ordered chart names plus its nerve, listed as
/// strictly increasing index tuples (pairs through quintuples) carrying
/// sample-point ids. A simplex's points must be contained in the point
/// list of each of its faces.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedCover {
    names: Vec<String>,
    simplices: BTreeMap<Vec<usize>, Vec<PointId>>,
}

impl OrderedCover {
    pub fn new(names: Vec<String>, simplices: BTreeMap<Vec<usize>, Vec<PointId>>) -> Result<Self> {
        let j = names.len();
        if j == 0 {
            return Err(Error::input("cover needs at least one chart"));
        }
        {
            let mut seen = BTreeSet::new();
            for n in &names {
                if !seen.insert(n) {
                    return Err(Error::input(format!("duplicate chart name {n:?}")));
                }
            }
        }
        for (tuple, points) in &simplices {
            if tuple.len() < 2 || tuple.len() > 5 {
                return Err(Error::input(
                    "simplices must have between 2 and 5 charts (pairs through quintuples)",
                ));
            }
            if tuple.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input(format!(
                    "simplex {tuple:?} is not strictly increasing"
                )));
            }
            if tuple.iter().any(|&c| c >= j) {
                return Err(Error::input(format!(
                    "simplex {tuple:?} references an unknown chart"
                )));
            }
            let mut point_set = BTreeSet::new();
            for p in points {
                if !point_set.insert(*p) {
                    return Err(Error::input(format!(
                        "simplex {tuple:?} lists point {p} twice"
                    )));
                }
            }
            if tuple.len() > 2 {
                for skip in 0..tuple.len() {
                    let face: Vec<usize> = tuple
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &c)| c)
                        .collect();
                    let Some(face_points) = simplices.get(&face) else {
                        return Err(Error::input(format!(
                            "simplex {tuple:?} is listed but its face {face:?} is not"
                        )));
                    };
                    let face_set: BTreeSet<_> = face_points.iter().collect();
                    if let Some(p) = points.iter().find(|p| !face_set.contains(p)) {
                        return Err(Error::input(format!(
                            "point {p} of simplex {tuple:?} is missing from face {face:?}"
                        )));
                    }
                }
            }
        }
        Ok(OrderedCover { names, simplices })
    }

    pub fn chart_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn simplices(&self) -> &BTreeMap<Vec<usize>, Vec<PointId>> {
        &self.simplices
    }

    pub fn points_of(&self, tuple: &[usize]) -> Option<&Vec<PointId>> {
        self.simplices.get(tuple)
    }

    pub fn tuples_of_len(&self, len: usize) -> impl Iterator<Item = (&Vec<usize>, &Vec<PointId>)> {
        self.simplices.iter().filter(move |(t, _)| t.len() == len)
    }

    pub fn pairs(&self) -> Vec<Pair> {
        self.tuples_of_len(2).map(|(t, _)| (t[0], t[1])).collect()
    }

    pub fn triples(&self) -> Vec<Triple> {
        self.tuples_of_len(3)
            .map(|(t, _)| (t[0], t[1], t[2]))
            .collect()
    }

    pub fn quadruples(&self) -> Vec<Quad> {
        self.tuples_of_len(4)
            .map(|(t, _)| (t[0], t[1], t[2], t[3]))
            .collect()
    }

    pub fn quintuples(&self) -> Vec<Vec<usize>> {
        self.tuples_of_len(5).map(|(t, _)| t.clone()).collect()
    }

    /// Restriction of all sample data to a subset of points. The nerve is
    /// unchanged; only point lists shrink.
    pub fn restrict_points(&self, keep: &BTreeSet<PointId>) -> OrderedCover {
        OrderedCover {
            names: self.names.clone(),
            simplices: self
                .simplices
                .iter()
                .map(|(t, pts)| {
                    (
                        t.clone(),
                        pts.iter().filter(|p| keep.contains(p)).copied().collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Čech cochain on the nerve with values in {±1}. A degree-`d` cochain
/// assigns a sign to every `(d+1)`-tuple simplex of the cover.
#[derive(Clone, Debug, PartialEq)]
pub struct SignCochain {
    degree: usize,
    values: BTreeMap<Vec<usize>, Sign>,
}

impl SignCochain {
    pub fn new(
        cover: &OrderedCover,
        degree: usize,
        values: BTreeMap<Vec<usize>, Sign>,
    ) -> Result<Self> {
        if !(1..=4).contains(&degree) {
            return Err(Error::input("cochain degree must be between 1 and 4"));
        }
        let expected: BTreeSet<Vec<usize>> = cover
            .tuples_of_len(degree + 1)
            .map(|(t, _)| t.clone())
            .collect();
        let got: BTreeSet<Vec<usize>> = values.keys().cloned().collect();
        if expected != got {
            return Err(Error::input(format!(
                "degree-{degree} cochain must be defined exactly on the cover's {}-tuples",
                degree + 1
            )));
        }
        Ok(SignCochain { degree, values })
    }

    pub fn constant(cover: &OrderedCover, degree: usize, sign: Sign) -> Result<Self> {
        let values = cover
            .tuples_of_len(degree + 1)
            .map(|(t, _)| (t.clone(), sign))
            .collect();
        SignCochain::new(cover, degree, values)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, Sign> {
        &self.values
    }

    pub fn value(&self, tuple: &[usize]) -> Option<Sign> {
        self.values.get(tuple).copied()
    }

    /// Čech coboundary: the value on a simplex is the product of the
    /// values on its faces (±1 exponents all coincide mod 2).
    pub fn coboundary(&self, cover: &OrderedCover) -> Result<SignCochain> {
        let degree = self.degree + 1;
        let mut values = BTreeMap::new();
        for (tuple, _) in cover.tuples_of_len(degree + 1) {
            let mut acc = Sign::Plus;
            for skip in 0..tuple.len() {
                let face: Vec<usize> = tuple
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &c)| c)
                    .collect();
                let v = self.value(&face).ok_or_else(|| {
                    Error::input(format!("cochain missing face {face:?} of {tuple:?}"))
                })?;
                acc = acc.mul(v);
            }
            values.insert(tuple.clone(), acc);
        }
        SignCochain::new(cover, degree, values)
    }

    pub fn is_trivial(&self) -> bool {
        self.values.values().all(|s| *s == Sign::Plus)
    }
}

/// A structural or cocycle violation found while validating a bundle.
#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingDims {
        pair: Pair,
    },
    BadDims {
        pair: Pair,
        detail: String,
    },
    NotWeaklyInvertible {
        pair: Pair,
        detdim: i64,
    },
    ObjectCondition {
        triple: Triple,
    },
    MissingPhi {
        triple: Triple,
    },
    MissingSample {
        triple: Triple,
        point: PointId,
    },
    WrongShape {
        triple: Triple,
        point: PointId,
        detail: String,
    },
    SingularEntry {
        triple: Triple,
        point: PointId,
        entry: (usize, usize),
    },
    CocycleResidual {
        quadruple: Quad,
        point: PointId,
        residual: f64,
    },
}

/// Outcome of [`ChartedBundle::validate`].
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub ok: bool,
    /// Largest cocycle residual seen (infinite on an exact-mode mismatch).
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

/// Charted 2-vector bundle: cover, rank, dimension matrices per pair and
/// sampled coherency maps per triple.
#[derive(Clone, Debug)]
pub struct ChartedBundle<S: Scalar> {
    cover: OrderedCover,
    rank: usize,
    dims: BTreeMap<Pair, DimMatrix>,
    phis: BTreeMap<Triple, BTreeMap<PointId, MorMatrix<VMor<S>>>>,
}

impl<S: Scalar> ChartedBundle<S> {
    pub fn new(
        cover: OrderedCover,
        rank: usize,
        dims: BTreeMap<Pair, DimMatrix>,
        phis: BTreeMap<Triple, BTreeMap<PointId, MorMatrix<VMor<S>>>>,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::input("bundle rank must be at least 1"));
        }
        for pair in cover.pairs() {
            if !dims.contains_key(&pair) {
                return Err(Error::input(format!(
                    "missing dimension matrix for pair {pair:?}"
                )));
            }
        }
        for pair in dims.keys() {
            if !cover.simplices.contains_key(&vec![pair.0, pair.1]) {
                return Err(Error::input(format!(
                    "dimension matrix for {pair:?} has no matching pair in the nerve"
                )));
            }
        }
        for triple in phis.keys() {
            if !cover
                .simplices
                .contains_key(&vec![triple.0, triple.1, triple.2])
            {
                return Err(Error::input(format!(
                    "coherency table for {triple:?} has no matching triple in the nerve"
                )));
            }
        }
        Ok(ChartedBundle {
            cover,
            rank,
            dims,
            phis,
        })
    }

    pub fn cover(&self) -> &OrderedCover {
        &self.cover
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pair_dims(&self, a: usize, b: usize) -> Option<&DimMatrix> {
        self.dims.get(&(a, b))
    }

    pub fn dims(&self) -> &BTreeMap<Pair, DimMatrix> {
        &self.dims
    }

    pub fn phis(&self) -> &BTreeMap<Triple, BTreeMap<PointId, MorMatrix<VMor<S>>>> {
        &self.phis
    }

    pub fn phi_at(&self, triple: Triple, point: PointId) -> Option<&MorMatrix<VMor<S>>> {
        self.phis.get(&triple)?.get(&point)
    }

    /// Restricts all sample data to a subset of points.
    pub fn restrict_points(&self, keep: &BTreeSet<PointId>) -> Result<ChartedBundle<S>> {
        let cover = self.cover.restrict_points(keep);
        let phis = self
            .phis
            .iter()
            .map(|(t, table)| {
                (
                    *t,
                    table
                        .iter()
                        .filter(|(p, _)| keep.contains(p))
                        .map(|(p, m)| (*p, m.clone()))
                        .collect(),
                )
            })
            .collect();
        ChartedBundle::new(cover, self.rank, self.dims.clone(), phis)
    }

    /// Checks the object condition, weak invertibility, sample coverage and
    /// the coherency square on every quadruple sample point.
    pub fn validate(&self, tolerance: f64) -> Result<ValidationReport> {
        let mut violations = Vec::new();

        for pair in self.cover.pairs() {
            let Some(d) = self.dims.get(&pair) else {
                violations.push(Violation::MissingDims { pair });
                continue;
            };
            if d.size() != self.rank {
                violations.push(Violation::BadDims {
                    pair,
                    detail: format!("expected rank {}, got {}", self.rank, d.size()),
                });
                continue;
            }
            if !d.is_nonneg() {
                violations.push(Violation::BadDims {
                    pair,
                    detail: "negative dimensions".into(),
                });
                continue;
            }
            let cert = WeakInvCert::new(d.clone());
            if !cert.is_weakly_invertible() {
                violations.push(Violation::NotWeaklyInvertible {
                    pair,
                    detdim: cert.detdim,
                });
            }
        }
        if !violations.is_empty() {
            return Ok(ValidationReport {
                ok: false,
                max_residual: 0.0,
                violations,
            });
        }

        for (a, b, c) in self.cover.triples() {
            let lhs = self.dims[&(a, b)].product(&self.dims[&(b, c)])?;
            if lhs != self.dims[&(a, c)] {
                violations.push(Violation::ObjectCondition { triple: (a, b, c) });
            }
        }

        for (tuple, points) in self.cover.tuples_of_len(3) {
            let triple = (tuple[0], tuple[1], tuple[2]);
            let Some(table) = self.phis.get(&triple) else {
                violations.push(Violation::MissingPhi { triple });
                continue;
            };
            let expect = &self.dims[&(triple.0, triple.2)];
            for &p in points {
                let Some(phi) = table.get(&p) else {
                    violations.push(Violation::MissingSample { triple, point: p });
                    continue;
                };
                if phi.dims() != expect {
                    violations.push(Violation::WrongShape {
                        triple,
                        point: p,
                        detail: format!("expected object {expect}, got {}", phi.dims()),
                    });
                    continue;
                }
                for i in 0..phi.size() {
                    for j in 0..phi.size() {
                        if !phi.entry(i, j).matrix().is_invertible(tolerance) {
                            violations.push(Violation::SingularEntry {
                                triple,
                                point: p,
                                entry: (i, j),
                            });
                        }
                    }
                }
            }
        }
        if !violations.is_empty() {
            return Ok(ValidationReport {
                ok: false,
                max_residual: 0.0,
                violations,
            });
        }

        // coherency square per quadruple sample point
        let mut tasks: Vec<(Quad, PointId)> = Vec::new();
        for (tuple, points) in self.cover.tuples_of_len(4) {
            let quad = (tuple[0], tuple[1], tuple[2], tuple[3]);
            for &p in points {
                tasks.push((quad, p));
            }
        }
        let residuals = par::try_map_indexed(tasks.len(), |idx| {
            let (quad, point) = tasks[idx];
            self.square_residual(quad, point)
        })?;

        let mut max_residual: f64 = 0.0;
        for ((quad, point), residual) in tasks.into_iter().zip(residuals) {
            max_residual = max_residual.max(residual);
            if residual > tolerance {
                violations.push(Violation::CocycleResidual {
                    quadruple: quad,
                    point,
                    residual,
                });
            }
        }

        Ok(ValidationReport {
            ok: violations.is_empty(),
            max_residual,
            violations,
        })
    }

    /// Residual of the coherency square on one quadruple at one point.
    fn square_residual(&self, (a, b, c, d): Quad, point: PointId) -> Result<f64> {
        let get = |triple: Triple| -> Result<&MorMatrix<VMor<S>>> {
            self.phi_at(triple, point).ok_or_else(|| {
                Error::input(format!("missing coherency sample {triple:?} at {point}"))
            })
        };
        let phi_abc = get((a, b, c))?;
        let phi_abd = get((a, b, d))?;
        let phi_acd = get((a, c, d))?;
        let phi_bcd = get((b, c, d))?;
        let id_ab = MorMatrix::<VMor<S>>::identity(&self.dims[&(a, b)])?;
        let id_cd = MorMatrix::<VMor<S>>::identity(&self.dims[&(c, d)])?;
        let ua = associator_inv::<VMor<S>>(
            &self.dims[&(a, b)],
            &self.dims[&(b, c)],
            &self.dims[&(c, d)],
        )?;
        let lhs = phi_abd.compose(&id_ab.product(phi_bcd)?)?;
        let rhs = phi_acd.compose(&phi_abc.product(&id_cd)?)?.compose(&ua)?;
        Ok(lhs.dist(&rhs))
    }

    /// The orientation obstruction: associator signs of consecutive
    /// transition dimensions, one per quadruple. Verifies the five-term
    /// identity on every quintuple of the nerve; a failure there cannot
    /// come from input data and is reported as an internal error.
    pub fn sign_cocycle(&self) -> Result<SignCochain> {
        let quads = self.cover.quadruples();
        let signs = par::try_map_indexed(quads.len(), |idx| {
            let (a, b, c, d) = quads[idx];
            assoc_sign(
                &self.dims[&(a, b)],
                &self.dims[&(b, c)],
                &self.dims[&(c, d)],
            )
        })?;
        let values: BTreeMap<Vec<usize>, Sign> = quads
            .iter()
            .zip(signs)
            .map(|(&(a, b, c, d), s)| (vec![a, b, c, d], s))
            .collect();
        let cocycle = SignCochain::new(&self.cover, 3, values)?;
        verify_five_term(&self.cover, &cocycle)?;
        Ok(cocycle)
    }

    /// Attempts to orient the bundle: solves for a sign lift of the
    /// coherency maps over GF(2) and re-validates the oriented cocycle
    /// diagram, or returns the obstruction certificate.
    pub fn orient_lift(&self, tolerance: f64) -> Result<OrientOutcome<S>> {
        let report = self.validate(tolerance)?;
        if !report.ok {
            return Err(Error::input(format!(
                "cannot orient an invalid bundle ({} violations)",
                report.violations.len()
            )));
        }
        let cocycle = self.sign_cocycle()?;
        match solve_orientation(&self.cover, &cocycle)? {
            Err(witness) => Ok(OrientOutcome::Obstructed(witness)),
            Ok(lift) => {
                let oriented = OrientedChartedBundle::new(self.clone(), lift)?;
                Ok(OrientOutcome::Oriented(oriented))
            }
        }
    }
}

/// Five-term product of a degree-3 cochain over one quintuple.
fn five_term_product(cocycle: &SignCochain, q: &[usize]) -> Result<Sign> {
    let mut acc = Sign::Plus;
    for skip in 0..5 {
        let face: Vec<usize> = q
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &c)| c)
            .collect();
        let v = cocycle
            .value(&face)
            .ok_or_else(|| Error::internal(format!("cocycle missing quadruple {face:?}")))?;
        acc = acc.mul(v);
    }
    Ok(acc)
}

fn verify_five_term(cover: &OrderedCover, cocycle: &SignCochain) -> Result<()> {
    for q in cover.quintuples() {
        if five_term_product(cocycle, &q)? != Sign::Plus {
            return Err(Error::internal(format!(
                "associator sign cocycle violates the five-term identity on {q:?}"
            )));
        }
    }
    Ok(())
}

/// Certificate of unorientability: a set of quadruples whose combined sign
/// equations cancel on the left while the right-hand sides multiply to -1.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ObstructionWitness {
    pub quadruples: Vec<Vec<usize>>,
}

pub enum OrientOutcome<S: Scalar> {
    Oriented(OrientedChartedBundle<S>),
    Obstructed(ObstructionWitness),
}

/// Solves the orientation system on the nerve: one GF(2) unknown per
/// triple, one equation per quadruple, right-hand side the obstruction
/// bit. Returns either a degree-2 sign lift or the witness.
pub fn solve_orientation(
    cover: &OrderedCover,
    cocycle: &SignCochain,
) -> Result<std::result::Result<SignCochain, ObstructionWitness>> {
    if cocycle.degree() != 3 {
        return Err(Error::input("orientation solve expects a degree-3 cochain"));
    }
    let triples: Vec<Triple> = cover.triples();
    let index_of: BTreeMap<Triple, usize> =
        triples.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let quads = cover.quadruples();
    let mut rows = Vec::with_capacity(quads.len());
    let mut rhs = Vec::with_capacity(quads.len());
    for &(a, b, c, d) in &quads {
        let faces = [(b, c, d), (a, c, d), (a, b, d), (a, b, c)];
        let mut cols = Vec::with_capacity(4);
        for f in faces {
            let Some(&i) = index_of.get(&f) else {
                return Err(Error::input(format!(
                    "quadruple ({a},{b},{c},{d}) has unlisted face {f:?}"
                )));
            };
            cols.push(i);
        }
        let bit = cocycle
            .value(&[a, b, c, d])
            .ok_or_else(|| Error::input("cocycle missing a quadruple of the nerve"))?
            .is_minus();
        rows.push(cols);
        rhs.push(bit);
    }
    match gf2::solve(&rows, &rhs, triples.len()) {
        gf2::Gf2Outcome::Solution(bits) => {
            let values: BTreeMap<Vec<usize>, Sign> = triples
                .iter()
                .zip(&bits)
                .map(|(&(a, b, c), &bit)| (vec![a, b, c], Sign::from_parity(bit)))
                .collect();
            Ok(Ok(SignCochain::new(cover, 2, values)?))
        }
        gf2::Gf2Outcome::Witness(witness_rows) => {
            if !gf2::verify_witness(&rows, &rhs, &witness_rows, triples.len()) {
                return Err(Error::internal("solver produced an invalid witness"));
            }
            Ok(Err(ObstructionWitness {
                quadruples: witness_rows
                    .into_iter()
                    .map(|i| {
                        let (a, b, c, d) = quads[i];
                        vec![a, b, c, d]
                    })
                    .collect(),
            }))
        }
    }
}

/// A charted bundle together with a sign lift of its coherency maps.
#[derive(Clone, Debug)]
pub struct OrientedChartedBundle<S: Scalar> {
    base: ChartedBundle<S>,
    lift: SignCochain,
}

impl<S: Scalar> OrientedChartedBundle<S> {
    /// Checks the oriented cocycle condition
    /// `lift(abd)·lift(bcd) = lift(acd)·lift(abc)·sign(ua^{abcd})`
    /// on every quadruple before accepting the lift.
    pub fn new(base: ChartedBundle<S>, lift: SignCochain) -> Result<Self> {
        if lift.degree() != 2 {
            return Err(Error::input("orientation lift must be a degree-2 cochain"));
        }
        for (a, b, c, d) in base.cover.quadruples() {
            let sgn = assoc_sign(
                &base.dims[&(a, b)],
                &base.dims[&(b, c)],
                &base.dims[&(c, d)],
            )?;
            let get = |t: [usize; 3]| {
                lift.value(&t)
                    .ok_or_else(|| Error::input(format!("lift missing triple {t:?}")))
            };
            let lhs = get([a, b, d])?.mul(get([b, c, d])?);
            let rhs = get([a, c, d])?.mul(get([a, b, c])?).mul(sgn);
            if lhs != rhs {
                return Err(Error::input(format!(
                    "sign lift violates the oriented cocycle condition on ({a},{b},{c},{d})"
                )));
            }
        }
        Ok(OrientedChartedBundle { base, lift })
    }

    pub fn base(&self) -> &ChartedBundle<S> {
        &self.base
    }

    pub fn lift(&self) -> &SignCochain {
        &self.lift
    }

    pub fn lift_at(&self, t: Triple) -> Sign {
        self.lift
            .value(&[t.0, t.1, t.2])
            .expect("lift covers all triples")
    }

    /// Extracts the determinant gerbe: the C*-valued 2-cocycle obtained by
    /// applying the determinant-gerbe functor to every lifted coherency
    /// sample. Validates the gerbe cocycle identity at every quadruple
    /// sample point.
    pub fn det_gerbe(&self, tolerance: f64) -> Result<ChartedGerbe<S>> {
        let mut tasks: Vec<(Triple, PointId)> = Vec::new();
        for (tuple, points) in self.base.cover.tuples_of_len(3) {
            let triple = (tuple[0], tuple[1], tuple[2]);
            for &p in points {
                tasks.push((triple, p));
            }
        }
        let computed = par::try_map_indexed(tasks.len(), |idx| {
            let (triple, point) = tasks[idx];
            let phi = self.base.phi_at(triple, point).ok_or_else(|| {
                Error::input(format!("missing coherency sample {triple:?} at {point}"))
            })?;
            let lifted = OrientedMor::new(phi.clone(), self.lift_at(triple))?;
            gerbe_det(&lifted)
        })?;
        let mut values: BTreeMap<Triple, BTreeMap<PointId, CStar<S>>> = BTreeMap::new();
        for ((triple, point), v) in tasks.into_iter().zip(computed) {
            values.entry(triple).or_default().insert(point, v);
        }
        let gerbe = ChartedGerbe {
            cover: self.base.cover.clone(),
            values,
        };
        let residual = gerbe.max_cocycle_residual()?;
        if residual > tolerance {
            return Err(Error::domain(format!(
                "determinant gerbe violates the cocycle identity (residual {residual:e})"
            )));
        }
        Ok(gerbe)
    }
}

/// A charted gerbe: nonzero scalars on triple samples satisfying the
/// multiplicative 2-cocycle identity on quadruples.
#[derive(Clone, Debug)]
pub struct ChartedGerbe<S: Scalar> {
    cover: OrderedCover,
    values: BTreeMap<Triple, BTreeMap<PointId, CStar<S>>>,
}

impl<S: Scalar> ChartedGerbe<S> {
    pub fn new(
        cover: OrderedCover,
        values: BTreeMap<Triple, BTreeMap<PointId, CStar<S>>>,
    ) -> Result<Self> {
        Ok(ChartedGerbe { cover, values })
    }

    pub fn cover(&self) -> &OrderedCover {
        &self.cover
    }

    pub fn values(&self) -> &BTreeMap<Triple, BTreeMap<PointId, CStar<S>>> {
        &self.values
    }

    pub fn value_at(&self, t: Triple, p: PointId) -> Option<&CStar<S>> {
        self.values.get(&t)?.get(&p)
    }

    /// Largest deviation of `c(bcd)·c(acd)^{-1}·c(abd)·c(abc)^{-1}` from 1
    /// over all quadruple sample points.
    pub fn max_cocycle_residual(&self) -> Result<f64> {
        let mut max: f64 = 0.0;
        for (tuple, points) in self.cover.tuples_of_len(4) {
            let (a, b, c, d) = (tuple[0], tuple[1], tuple[2], tuple[3]);
            for &p in points {
                let get = |t: Triple| {
                    self.value_at(t, p)
                        .ok_or_else(|| Error::input(format!("gerbe missing value for {t:?} at {p}")))
                };
                let prod = get((b, c, d))?
                    .mul(&get((a, c, d))?.inv())
                    .mul(get((a, b, d))?)
                    .mul(&get((a, b, c))?.inv());
                max = max.max(prod.value().dist(&S::one()));
            }
        }
        Ok(max)
    }
}
