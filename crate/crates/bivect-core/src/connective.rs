//! Sampled connective structures on charted 2-vector bundles.
//!
//! Connections live on a regular grid in a coordinate box: for a chart
//! pair `(α,β)` a [`ConnectionField`] stores, at every sampled point and
//! per coordinate direction, a matrix of square blocks shaped by the
//! bundle's dimension matrix (the connection 1-form of the matrix of
//! trivial bundles). Three products drive everything:
//!
//! * the induced product on `E^{αβ}·E^{βγ}`, blockwise
//!   `⊕_j (A_ij ⊗ I + I ⊗ B_jk)`;
//! * the gauge-twisted ∘-product, the pullback of the induced product
//!   along the inverse coherency map, `φ A φ^{-1} + φ d(φ^{-1})` with
//!   central finite differences (one-sided at the box boundary);
//! * pointwise convex combination, which distributes over ∘.
//!
//! [`build_connective`] runs the partition-of-unity existence
//! construction: chain weights `ψ_chain = ∏ ψψ·∏(1-ψ)` are evaluated in
//! exact rational arithmetic (so weight identities hold on the nose) and
//! the ∘-folds of seed connections along chains are averaged on the
//! shrunken cover. Parallel transport integrates `dP/dt = -A(ẋ)P`
//! blockwise with a second-order midpoint rule; the determinant-gerbe
//! functor applied to transports commutes with the extracted gerbe up to
//! the same order.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::BigRational;
use num::{ToPrimitive, Zero as _};

use crate::biperm::VMor;
use crate::charted::{ChartedBundle, OrientedChartedBundle, Pair, Triple};
use crate::error::Error;
use crate::linalg::Mat;
use crate::matrixcat::{DimMatrix, MorMatrix};
use crate::oriented::{gerbe_det, OrientedMor};
use crate::par;
use crate::perm::Sign;
use crate::scalar::{Approx, Scalar};
use crate::Result;

/// Regular lattice in a box of R^m; points are addressed by flat index
/// in row-major order (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        if shape.is_empty() || origin.len() != shape.len() {
            return Err(Error::input("grid origin and shape must agree and be non-empty"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::input("grid spacing must be positive"));
        }
        if shape.iter().any(|&n| n == 0) {
            return Err(Error::input("grid shape must be positive in every axis"));
        }
        Ok(Grid {
            origin,
            spacing,
            shape,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        let mut idx = vec![0; self.shape.len()];
        for axis in (0..self.shape.len()).rev() {
            idx[axis] = rest % self.shape[axis];
            rest /= self.shape[axis];
        }
        idx
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        let mut flat = 0;
        for (axis, &i) in multi.iter().enumerate() {
            flat = flat * self.shape[axis] + i;
        }
        flat
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.spacing)
            .collect()
    }

    pub fn neighbor(&self, flat: usize, axis: usize, step: i64) -> Option<usize> {
        let mut idx = self.multi(flat);
        let next = idx[axis] as i64 + step;
        if next < 0 || next >= self.shape[axis] as i64 {
            return None;
        }
        idx[axis] = next as usize;
        Some(self.flat(&idx))
    }
}

/// Sampled cover data: memberships, shrunken memberships and bump tables.
#[derive(Clone, Debug)]
pub struct SampledBase {
    grid: Grid,
    membership: Vec<BTreeSet<usize>>,
    shrunk: Vec<BTreeSet<usize>>,
    psi: Vec<Vec<f64>>,
}

impl SampledBase {
    /// Validates the bump-function invariants: ψ ∈ [0,1] everywhere,
    /// ψ = 1 on the shrunken set, ψ = 0 off the membership set, and the
    /// discretized shrinking condition (grid neighbors of shrunken points
    /// stay inside the membership set).
    pub fn new(
        grid: Grid,
        membership: Vec<BTreeSet<usize>>,
        shrunk: Vec<BTreeSet<usize>>,
        psi: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let j = membership.len();
        if shrunk.len() != j || psi.len() != j {
            return Err(Error::input(
                "membership, shrunken membership and psi must list the same charts",
            ));
        }
        let npts = grid.len();
        for (alpha, table) in psi.iter().enumerate() {
            if table.len() != npts {
                return Err(Error::input(format!(
                    "psi table of chart {alpha} must cover every grid point"
                )));
            }
            if table.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(Error::input(format!(
                    "psi of chart {alpha} must take values in [0,1]"
                )));
            }
        }
        for alpha in 0..j {
            if membership[alpha].iter().chain(&shrunk[alpha]).any(|&p| p >= npts) {
                return Err(Error::input(format!(
                    "chart {alpha} references a point outside the grid"
                )));
            }
            if !shrunk[alpha].is_subset(&membership[alpha]) {
                return Err(Error::input(format!(
                    "shrunken set of chart {alpha} is not inside its membership set"
                )));
            }
            for &p in &shrunk[alpha] {
                if psi[alpha][p] != 1.0 {
                    return Err(Error::input(format!(
                        "psi of chart {alpha} must be 1 on the shrunken set (point {p})"
                    )));
                }
                for axis in 0..grid.ambient_dim() {
                    for step in [-1i64, 1] {
                        if let Some(q) = grid.neighbor(p, axis, step) {
                            if !membership[alpha].contains(&q) {
                                return Err(Error::input(format!(
                                    "shrinking violated: neighbor {q} of shrunken point {p} leaves chart {alpha}"
                                )));
                            }
                        }
                    }
                }
            }
            for p in 0..npts {
                if psi[alpha][p] != 0.0 && !membership[alpha].contains(&p) {
                    return Err(Error::input(format!(
                        "psi of chart {alpha} must vanish off its membership set (point {p})"
                    )));
                }
            }
        }
        Ok(SampledBase {
            grid,
            membership,
            shrunk,
            psi,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn chart_count(&self) -> usize {
        self.membership.len()
    }

    pub fn membership(&self, alpha: usize) -> &BTreeSet<usize> {
        &self.membership[alpha]
    }

    pub fn shrunk(&self, alpha: usize) -> &BTreeSet<usize> {
        &self.shrunk[alpha]
    }

    pub fn psi(&self, alpha: usize, point: usize) -> f64 {
        self.psi[alpha][point]
    }

    pub fn membership_points(&self, charts: &[usize]) -> BTreeSet<usize> {
        intersect_sets(charts.iter().map(|&a| &self.membership[a]))
    }

    pub fn shrunk_points(&self, charts: &[usize]) -> BTreeSet<usize> {
        intersect_sets(charts.iter().map(|&a| &self.shrunk[a]))
    }

    /// All strictly increasing chains from `a` to `b` through the index
    /// interval (subsets of the charts strictly between them).
    pub fn chains_between(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        let between: Vec<usize> = (a + 1..b).collect();
        let mut chains = Vec::new();
        for mask in 0u64..(1 << between.len()) {
            let mut chain = vec![a];
            for (bit, &g) in between.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    chain.push(g);
                }
            }
            chain.push(b);
            chains.push(chain);
        }
        chains.sort();
        chains
    }

    /// Chain weight `∏_i ψ_{a_i} ψ_{a_{i+1}} ∏_{a_i<γ<a_{i+1}} (1-ψ_γ)`,
    /// evaluated in exact rational arithmetic so that the concatenation
    /// identity `ψ_{chain₁·chain₂} = ψ_{chain₁}·ψ_{chain₂}` holds on the
    /// nose.
    pub fn chain_weight(&self, chain: &[usize], point: usize) -> Result<BigRational> {
        if chain.len() < 2 || chain.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("chain must be strictly increasing"));
        }
        let exact = |x: f64| {
            BigRational::from_float(x)
                .ok_or_else(|| Error::internal("psi value is not finite"))
        };
        let one = BigRational::from_integer(1.into());
        let mut acc = one.clone();
        for w in chain.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut step = exact(self.psi[lo][point])? * exact(self.psi[hi][point])?;
            for gamma in lo + 1..hi {
                step *= &one - exact(self.psi[gamma][point])?;
            }
            acc *= step;
        }
        Ok(acc)
    }
}

fn intersect_sets<'a>(mut sets: impl Iterator<Item = &'a BTreeSet<usize>>) -> BTreeSet<usize> {
    let Some(first) = sets.next() else {
        return BTreeSet::new();
    };
    let mut acc = first.clone();
    for s in sets {
        acc = acc.intersection(s).copied().collect();
    }
    acc
}

/// A matrix of square complex blocks shaped by a dimension matrix; the
/// value of a connection form in one coordinate direction at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    dims: DimMatrix,
    blocks: Vec<Mat<Approx>>,
}

impl BlockMatrix {
    pub fn new(dims: DimMatrix, blocks: Vec<Mat<Approx>>) -> Result<Self> {
        let n = dims.size();
        if blocks.len() != n * n {
            return Err(Error::shape("block matrix must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                let d = dims.get(i, j);
                if d < 0 || blocks[i * n + j].size() != d as usize {
                    return Err(Error::shape(format!(
                        "block ({i},{j}) must be a {d}x{d} matrix"
                    )));
                }
            }
        }
        Ok(BlockMatrix { dims, blocks })
    }

    pub fn zeros(dims: &DimMatrix) -> Result<Self> {
        let n = dims.size();
        let mut blocks = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let d = dims.get(i, j);
                if d < 0 {
                    return Err(Error::shape("negative block dimension"));
                }
                blocks.push(Mat::zeros(d as usize));
            }
        }
        Ok(BlockMatrix {
            dims: dims.clone(),
            blocks,
        })
    }

    pub fn dims(&self) -> &DimMatrix {
        &self.dims
    }

    pub fn block(&self, i: usize, j: usize) -> &Mat<Approx> {
        &self.blocks[i * self.dims.size() + j]
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::shape("block add: object mismatch"));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&rhs.blocks)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockMatrix {
            dims: self.dims.clone(),
            blocks,
        })
    }

    pub fn scale(&self, t: f64) -> Self {
        let s = Approx::new(t, 0.0);
        BlockMatrix {
            dims: self.dims.clone(),
            blocks: self.blocks.iter().map(|b| b.scale(&s)).collect(),
        }
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        if self.dims != rhs.dims {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&rhs.blocks)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }
}

/// A sampled matrix-valued connection 1-form for one chart pair: per grid
/// point, one [`BlockMatrix`] per coordinate direction.
#[derive(Clone, Debug)]
pub struct ConnectionField {
    dims: DimMatrix,
    directions: usize,
    samples: BTreeMap<usize, Vec<BlockMatrix>>,
}

impl ConnectionField {
    pub fn new(
        dims: DimMatrix,
        directions: usize,
        samples: BTreeMap<usize, Vec<BlockMatrix>>,
    ) -> Result<Self> {
        for (point, per_dir) in &samples {
            if per_dir.len() != directions {
                return Err(Error::shape(format!(
                    "point {point} must carry one block matrix per direction"
                )));
            }
            for b in per_dir {
                if b.dims() != &dims {
                    return Err(Error::shape(format!(
                        "block structure at point {point} does not match the pair object"
                    )));
                }
            }
        }
        Ok(ConnectionField {
            dims,
            directions,
            samples,
        })
    }

    pub fn zero(dims: &DimMatrix, directions: usize, points: &BTreeSet<usize>) -> Result<Self> {
        let sample = vec![BlockMatrix::zeros(dims)?; directions];
        Ok(ConnectionField {
            dims: dims.clone(),
            directions,
            samples: points.iter().map(|&p| (p, sample.clone())).collect(),
        })
    }

    pub fn dims(&self) -> &DimMatrix {
        &self.dims
    }

    pub fn directions(&self) -> usize {
        self.directions
    }

    pub fn points(&self) -> BTreeSet<usize> {
        self.samples.keys().copied().collect()
    }

    pub fn samples(&self) -> &BTreeMap<usize, Vec<BlockMatrix>> {
        &self.samples
    }

    pub fn at(&self, point: usize) -> Option<&Vec<BlockMatrix>> {
        self.samples.get(&point)
    }

    pub fn restrict(&self, points: &BTreeSet<usize>) -> ConnectionField {
        ConnectionField {
            dims: self.dims.clone(),
            directions: self.directions,
            samples: self
                .samples
                .iter()
                .filter(|(p, _)| points.contains(p))
                .map(|(p, v)| (*p, v.clone()))
                .collect(),
        }
    }

    pub fn dist(&self, rhs: &Self) -> f64 {
        let mut max: f64 = 0.0;
        for (p, a) in &self.samples {
            let Some(b) = rhs.samples.get(p) else {
                return f64::INFINITY;
            };
            for (x, y) in a.iter().zip(b) {
                max = max.max(x.dist(y));
            }
        }
        max
    }
}

/// Induced-product value at one point: entry `(i,k)` is the block diagonal
/// over `j` of `A_ij ⊗ I + I ⊗ B_jk`.
pub fn induced_product_at(a: &BlockMatrix, b: &BlockMatrix) -> Result<BlockMatrix> {
    let n = a.dims().size();
    if b.dims().size() != n {
        return Err(Error::shape("induced product: size mismatch"));
    }
    let dims = a.dims().product(b.dims())?;
    let mut blocks = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let mut parts = Vec::with_capacity(n);
            for j in 0..n {
                let da = a.dims().get(i, j) as usize;
                let db = b.dims().get(j, k) as usize;
                let left = a.block(i, j).kron(&Mat::identity(db));
                let right = Mat::identity(da).kron(b.block(j, k));
                parts.push(left.add(&right)?);
            }
            blocks.push(Mat::block_diag(&parts));
        }
    }
    BlockMatrix::new(dims, blocks)
}

/// Induced product of two fields on the intersection of their domains.
pub fn induced_product(a: &ConnectionField, b: &ConnectionField) -> Result<ConnectionField> {
    if a.directions != b.directions {
        return Err(Error::shape("induced product: ambient dimension mismatch"));
    }
    let dims = a.dims.product(&b.dims)?;
    let points: BTreeSet<usize> = a.points().intersection(&b.points()).copied().collect();
    let mut samples = BTreeMap::new();
    for p in points {
        let (av, bv) = (&a.samples[&p], &b.samples[&p]);
        let per_dir = av
            .iter()
            .zip(bv)
            .map(|(x, y)| induced_product_at(x, y))
            .collect::<Result<Vec<_>>>()?;
        samples.insert(p, per_dir);
    }
    ConnectionField::new(dims, a.directions, samples)
}

/// Coherency-map samples for one triple, keyed by grid point.
pub type PhiTable = BTreeMap<usize, MorMatrix<VMor<Approx>>>;

/// Finite difference of the entrywise inverse of `phi` at `point` along
/// `axis`: central when both grid neighbors carry samples, one-sided when
/// only one does, an error when neither does.
fn phi_inv_derivative(
    phi_inv: &BTreeMap<usize, MorMatrix<VMor<Approx>>>,
    grid: &Grid,
    point: usize,
    axis: usize,
) -> Result<Vec<Mat<Approx>>> {
    let here = &phi_inv[&point];
    let plus = grid
        .neighbor(point, axis, 1)
        .and_then(|q| phi_inv.get(&q));
    let minus = grid
        .neighbor(point, axis, -1)
        .and_then(|q| phi_inv.get(&q));
    let h = grid.spacing();
    let n = here.size();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let d = match (plus, minus) {
                (Some(p), Some(m)) => p
                    .entry(i, k)
                    .matrix()
                    .sub(m.entry(i, k).matrix())?
                    .scale(&Approx::new(1.0 / (2.0 * h), 0.0)),
                (Some(p), None) => p
                    .entry(i, k)
                    .matrix()
                    .sub(here.entry(i, k).matrix())?
                    .scale(&Approx::new(1.0 / h, 0.0)),
                (None, Some(m)) => here
                    .entry(i, k)
                    .matrix()
                    .sub(m.entry(i, k).matrix())?
                    .scale(&Approx::new(1.0 / h, 0.0)),
                (None, None) => {
                    return Err(Error::input(format!(
                        "point {point} lacks difference neighbors along axis {axis}"
                    )))
                }
            };
            out.push(d);
        }
    }
    Ok(out)
}

/// The gauge-twisted ∘-product `((φ)^{-1})^*(A · B)`: per direction,
/// `φ (A·B) φ^{-1} + φ d(φ^{-1})`, applied entrywise to the blocks.
pub fn circ_product(
    a: &ConnectionField,
    b: &ConnectionField,
    phi: &PhiTable,
    grid: &Grid,
) -> Result<ConnectionField> {
    let raw = induced_product(a, b)?;
    let mut phi_inv: BTreeMap<usize, MorMatrix<VMor<Approx>>> = BTreeMap::new();
    for (&p, m) in phi {
        if m.dims() != raw.dims() {
            return Err(Error::shape(
                "coherency map does not match the product object",
            ));
        }
        phi_inv.insert(p, m.inverse()?);
    }
    let points: Vec<usize> = raw
        .points()
        .intersection(&phi.keys().copied().collect())
        .copied()
        .collect();
    let n = raw.dims().size();
    let tasks: Vec<usize> = points;
    let computed = par::try_map_indexed(tasks.len(), |idx| {
        let p = tasks[idx];
        let phi_p = &phi[&p];
        let inv_p = &phi_inv[&p];
        let mut per_dir = Vec::with_capacity(raw.directions);
        for axis in 0..raw.directions {
            let deriv = phi_inv_derivative(&phi_inv, grid, p, axis)?;
            let rawv = &raw.samples[&p][axis];
            let mut blocks = Vec::with_capacity(n * n);
            for i in 0..n {
                for k in 0..n {
                    let g = phi_p.entry(i, k).matrix();
                    let ginv = inv_p.entry(i, k).matrix();
                    let conj = g.mul(rawv.block(i, k))?.mul(ginv)?;
                    let shift = g.mul(&deriv[i * n + k])?;
                    blocks.push(conj.add(&shift)?);
                }
            }
            per_dir.push(BlockMatrix::new(raw.dims().clone(), blocks)?);
        }
        Ok((p, per_dir))
    })?;
    ConnectionField::new(
        raw.dims().clone(),
        raw.directions,
        computed.into_iter().collect(),
    )
}

/// Pointwise affine combination of fields on one pair; weights are
/// per-point, non-negative and must sum to 1 within 1e-12.
pub fn convex_combine(
    fields: &[&ConnectionField],
    weights: &[BTreeMap<usize, f64>],
) -> Result<ConnectionField> {
    if fields.is_empty() || fields.len() != weights.len() {
        return Err(Error::input("need one weight table per field"));
    }
    let dims = fields[0].dims().clone();
    let directions = fields[0].directions();
    let mut points = fields[0].points();
    for f in &fields[1..] {
        if f.dims() != &dims || f.directions() != directions {
            return Err(Error::shape("convex combination: field shape mismatch"));
        }
        points = points.intersection(&f.points()).copied().collect();
    }
    let mut samples = BTreeMap::new();
    for &p in &points {
        let mut total = 0.0;
        for w in weights {
            let v = *w.get(&p).ok_or_else(|| {
                Error::input(format!("weight table missing point {p}"))
            })?;
            if v < 0.0 {
                return Err(Error::input(format!("negative weight at point {p}")));
            }
            total += v;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "weights at point {p} sum to {total}, not 1"
            )));
        }
        let mut per_dir = vec![BlockMatrix::zeros(&dims)?; directions];
        for (f, w) in fields.iter().zip(weights) {
            let scale = w[&p];
            for (axis, acc) in per_dir.iter_mut().enumerate() {
                *acc = acc.add(&f.samples[&p][axis].scale(scale))?;
            }
        }
        samples.insert(p, per_dir);
    }
    ConnectionField::new(dims, directions, samples)
}

/// A connective structure: one connection field per nerve pair, satisfying
/// the ∘-cocycle condition on the shrunken triple overlaps.
#[derive(Clone, Debug)]
pub struct ConnectiveStructure {
    fields: BTreeMap<Pair, ConnectionField>,
}

impl ConnectiveStructure {
    pub fn new(fields: BTreeMap<Pair, ConnectionField>) -> Self {
        ConnectiveStructure { fields }
    }

    pub fn fields(&self) -> &BTreeMap<Pair, ConnectionField> {
        &self.fields
    }

    pub fn field(&self, pair: Pair) -> Option<&ConnectionField> {
        self.fields.get(&pair)
    }

    /// Convex blend `t·self + (1-t)·other` pairwise; the defining
    /// condition survives blending, which the caller re-checks through
    /// [`cocycle_residuals`].
    pub fn blend(&self, other: &ConnectiveStructure, t: f64) -> Result<ConnectiveStructure> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::input("blend parameter must lie in [0,1]"));
        }
        let mut fields = BTreeMap::new();
        for (pair, f) in &self.fields {
            let g = other
                .fields
                .get(pair)
                .ok_or_else(|| Error::input(format!("blend: missing pair {pair:?}")))?;
            let points: BTreeSet<usize> =
                f.points().intersection(&g.points()).copied().collect();
            let wf: BTreeMap<usize, f64> = points.iter().map(|&p| (p, t)).collect();
            let wg: BTreeMap<usize, f64> = points.iter().map(|&p| (p, 1.0 - t)).collect();
            fields.insert(*pair, convex_combine(&[f, g], &[wf, wg])?);
        }
        Ok(ConnectiveStructure::new(fields))
    }
}

fn phi_table_for(bundle: &ChartedBundle<Approx>, triple: Triple) -> Result<PhiTable> {
    let table = bundle
        .phis()
        .get(&triple)
        .ok_or_else(|| Error::input(format!("bundle has no coherency table for {triple:?}")))?;
    Ok(table
        .iter()
        .map(|(&p, m)| (p as usize, m.clone()))
        .collect())
}

/// ∘-fold of seed fields along a chain, left to right; step `i` twists by
/// the coherency map of `(chain[0], chain[i], chain[i+1])`.
pub fn chain_fold(
    bundle: &ChartedBundle<Approx>,
    seeds: &BTreeMap<Pair, ConnectionField>,
    chain: &[usize],
    grid: &Grid,
) -> Result<ConnectionField> {
    let seed = |pair: Pair| {
        seeds
            .get(&pair)
            .ok_or_else(|| Error::input(format!("missing seed connection for pair {pair:?}")))
    };
    let mut acc = seed((chain[0], chain[1]))?.clone();
    for i in 1..chain.len() - 1 {
        let next = seed((chain[i], chain[i + 1]))?;
        let phi = phi_table_for(bundle, (chain[0], chain[i], chain[i + 1]))?;
        acc = circ_product(&acc, next, &phi, grid)?;
    }
    Ok(acc)
}

/// The partition-of-unity existence construction: for every nerve pair,
/// the weighted average of chain ∘-folds of the seeds over the shrunken
/// pair overlap. Chains of weight zero are skipped (their folds may be
/// undefined); a zero weight denominator on the shrunken overlap signals
/// an invalid base and is an error.
pub fn build_connective(
    bundle: &ChartedBundle<Approx>,
    base: &SampledBase,
    seeds: &BTreeMap<Pair, ConnectionField>,
) -> Result<ConnectiveStructure> {
    if base.chart_count() != bundle.cover().chart_count() {
        return Err(Error::input(
            "sampled base and cover disagree on the number of charts",
        ));
    }
    let grid = base.grid();
    let mut fields = BTreeMap::new();
    for pair in bundle.cover().pairs() {
        let (a, b) = pair;
        let dims = bundle
            .pair_dims(a, b)
            .ok_or_else(|| Error::input(format!("missing dimensions for pair {pair:?}")))?;
        let target: BTreeSet<usize> = base
            .shrunk(a)
            .intersection(base.shrunk(b))
            .copied()
            .collect();
        let chains = base.chains_between(a, b);
        // weights first: folds are evaluated only where some weight needs them
        let mut weight_tables: Vec<BTreeMap<usize, BigRational>> = Vec::new();
        for chain in &chains {
            let mut table = BTreeMap::new();
            for &p in &target {
                let w = base.chain_weight(chain, p)?;
                if !w.is_zero() {
                    table.insert(p, w);
                }
            }
            weight_tables.push(table);
        }
        let folds: Vec<Option<ConnectionField>> = chains
            .iter()
            .zip(&weight_tables)
            .map(|(chain, table)| {
                if table.is_empty() {
                    Ok(None)
                } else {
                    chain_fold(bundle, seeds, chain, grid).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let mut samples = BTreeMap::new();
        for &p in &target {
            let mut denom = BigRational::zero();
            let mut numer: Option<Vec<BlockMatrix>> = None;
            for (table, fold) in weight_tables.iter().zip(&folds) {
                let Some(w) = table.get(&p) else { continue };
                let fold = fold.as_ref().expect("non-zero weight has a fold");
                let value = fold.at(p).ok_or_else(|| {
                    Error::internal(format!(
                        "chain fold undefined at point {p} despite non-zero weight"
                    ))
                })?;
                let wf = w.to_f64().ok_or_else(|| Error::internal("weight overflow"))?;
                denom += w;
                let scaled: Vec<BlockMatrix> = value.iter().map(|bm| bm.scale(wf)).collect();
                numer = Some(match numer.take() {
                    None => scaled,
                    Some(acc) => acc
                        .iter()
                        .zip(&scaled)
                        .map(|(x, y)| x.add(y))
                        .collect::<Result<Vec<_>>>()?,
                });
            }
            if denom.is_zero() {
                return Err(Error::domain(format!(
                    "zero weight denominator at shrunken overlap point {p} of pair {pair:?}"
                )));
            }
            let d = denom.to_f64().ok_or_else(|| Error::internal("weight overflow"))?;
            let value = numer
                .expect("non-zero denominator implies a numerator")
                .into_iter()
                .map(|bm| bm.scale(1.0 / d))
                .collect();
            samples.insert(p, value);
        }
        fields.insert(pair, ConnectionField::new(dims.clone(), grid.ambient_dim(), samples)?);
    }
    Ok(ConnectiveStructure::new(fields))
}

/// Largest deviation from `∇^{αβ} ∘ ∇^{βγ} = ∇^{αγ}` per nerve triple,
/// evaluated on the shrunken triple overlap.
pub fn cocycle_residuals(
    structure: &ConnectiveStructure,
    bundle: &ChartedBundle<Approx>,
    base: &SampledBase,
) -> Result<Vec<(Triple, f64)>> {
    let grid = base.grid();
    let mut out = Vec::new();
    for triple in bundle.cover().triples() {
        let (a, b, c) = triple;
        let points = base.shrunk_points(&[a, b, c]);
        if points.is_empty() {
            out.push((triple, 0.0));
            continue;
        }
        let f_ab = structure
            .field((a, b))
            .ok_or_else(|| Error::input(format!("structure missing pair ({a},{b})")))?;
        let f_bc = structure
            .field((b, c))
            .ok_or_else(|| Error::input(format!("structure missing pair ({b},{c})")))?;
        let f_ac = structure
            .field((a, c))
            .ok_or_else(|| Error::input(format!("structure missing pair ({a},{c})")))?;
        let phi = phi_table_for(bundle, triple)?;
        let lhs = circ_product(f_ab, f_bc, &phi, grid)?;
        let mut max: f64 = 0.0;
        for &p in &points {
            let l = lhs
                .at(p)
                .ok_or_else(|| Error::input(format!("∘-product undefined at point {p}")))?;
            let r = f_ac
                .at(p)
                .ok_or_else(|| Error::input(format!("∇ undefined at point {p}")))?;
            for (x, y) in l.iter().zip(r) {
                max = max.max(x.dist(y));
            }
        }
        out.push((triple, max));
    }
    Ok(out)
}

/// A transport path: charts it concerns, ordered grid points, substeps per
/// segment.
#[derive(Clone, Debug)]
pub struct PathSpec {
    pub charts: Vec<usize>,
    pub points: Vec<usize>,
    pub refine: usize,
}

impl PathSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::input("path needs at least one point"));
        }
        if self.refine == 0 {
            return Err(Error::input("path refinement must be at least 1"));
        }
        if self.charts.len() < 2 || self.charts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("path charts must be strictly increasing"));
        }
        for &p in &self.points {
            if p >= grid.len() {
                return Err(Error::input(format!("path point {p} is outside the grid")));
            }
        }
        for w in self.points.windows(2) {
            if w[0] == w[1] {
                return Err(Error::input("consecutive path points must differ"));
            }
        }
        Ok(())
    }
}

fn contract(blocks: &[BlockMatrix], delta: &[f64]) -> Result<BlockMatrix> {
    let mut acc = BlockMatrix::zeros(blocks[0].dims())?;
    for (bm, &d) in blocks.iter().zip(delta) {
        acc = acc.add(&bm.scale(d))?;
    }
    Ok(acc)
}

/// Parallel transport along a piecewise-linear grid path: solves
/// `dP/dt = -A(ẋ) P` blockwise with midpoint (second-order) steps,
/// interpolating the sampled form linearly along each segment. Returns the
/// endpoint automorphism.
pub fn parallel_transport(
    field: &ConnectionField,
    path: &PathSpec,
    grid: &Grid,
) -> Result<MorMatrix<VMor<Approx>>> {
    path.validate(grid)?;
    for &p in &path.points {
        if field.at(p).is_none() {
            return Err(Error::input(format!(
                "path leaves the connection domain at point {p}"
            )));
        }
    }
    let n = field.dims().size();
    let mut transported: Vec<Mat<Approx>> = {
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(Mat::identity(field.dims().get(i, j) as usize));
            }
        }
        v
    };
    for seg in path.points.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        let (cp, cq) = (grid.coords(p), grid.coords(q));
        let delta: Vec<f64> = cq.iter().zip(&cp).map(|(a, b)| a - b).collect();
        let a0 = contract(field.at(p).expect("checked"), &delta)?;
        let a1 = contract(field.at(q).expect("checked"), &delta)?;
        let lerp = |t: f64| -> Result<BlockMatrix> { a0.scale(1.0 - t).add(&a1.scale(t)) };
        let r = path.refine;
        let dt = 1.0 / r as f64;
        for s in 0..r {
            let t0 = s as f64 * dt;
            let am = lerp(t0 + 0.5 * dt)?;
            let a_start = lerp(t0)?;
            for i in 0..n {
                for j in 0..n {
                    let pij = &transported[i * n + j];
                    if pij.size() == 0 {
                        continue;
                    }
                    let k1 = a_start.block(i, j).mul(pij)?.scale(&Approx::new(-1.0, 0.0));
                    let half = pij.add(&k1.scale(&Approx::new(0.5 * dt, 0.0)))?;
                    let k2 = am.block(i, j).mul(&half)?.scale(&Approx::new(-1.0, 0.0));
                    transported[i * n + j] = pij.add(&k2.scale(&Approx::new(dt, 0.0)))?;
                }
            }
        }
    }
    let entries = transported
        .into_iter()
        .map(VMor::new)
        .collect::<Result<Vec<_>>>()?;
    MorMatrix::new(field.dims().clone(), entries)
}

/// Transport-compatibility report for one path through a triple overlap,
/// at the path's own refinement and at twice that refinement.
#[derive(Clone, Debug)]
pub struct TransportReport {
    pub triple: Triple,
    /// Residual of `P^{αγ} ∘ φ(start) = φ(end) ∘ (P^{αβ}·P^{βγ})`.
    pub square_residual: f64,
    /// Residual of the same square after the determinant-gerbe functor.
    pub gerbe_residual: f64,
    pub refined_square_residual: f64,
    pub refined_gerbe_residual: f64,
}

impl TransportReport {
    /// Ratio of coarse to refined residual; near 4 for a second-order
    /// integrator.
    pub fn convergence_ratio(&self) -> f64 {
        self.square_residual / self.refined_square_residual.max(f64::MIN_POSITIVE)
    }
}

/// Checks that parallel transport intertwines the coherency map and that
/// the determinant gerbe of the transports matches the extracted gerbe
/// values, at two refinements.
pub fn transport_square_check(
    oriented: &OrientedChartedBundle<Approx>,
    structure: &ConnectiveStructure,
    base: &SampledBase,
    path: &PathSpec,
) -> Result<TransportReport> {
    if path.charts.len() != 3 {
        return Err(Error::input("transport check needs a triple of charts"));
    }
    let triple = (path.charts[0], path.charts[1], path.charts[2]);
    let (a, b, c) = triple;
    let grid = base.grid();
    let bundle = oriented.base();
    let start = *path.points.first().expect("validated");
    let end = *path.points.last().expect("validated");
    let phi_start = bundle
        .phi_at(triple, start as u64)
        .ok_or_else(|| Error::input("coherency map not sampled at path start"))?;
    let phi_end = bundle
        .phi_at(triple, end as u64)
        .ok_or_else(|| Error::input("coherency map not sampled at path end"))?;
    let field = |pair: Pair| {
        structure
            .field(pair)
            .ok_or_else(|| Error::input(format!("structure missing pair {pair:?}")))
    };
    let lift = oriented.lift_at(triple);
    let run = |refine: usize| -> Result<(f64, f64)> {
        let refined = PathSpec {
            charts: path.charts.clone(),
            points: path.points.clone(),
            refine,
        };
        let p_ab = parallel_transport(field((a, b))?, &refined, grid)?;
        let p_bc = parallel_transport(field((b, c))?, &refined, grid)?;
        let p_ac = parallel_transport(field((a, c))?, &refined, grid)?;
        let lhs = p_ac.compose(phi_start)?;
        let rhs = phi_end.compose(&p_ab.product(&p_bc)?)?;
        let square = lhs.dist(&rhs);

        let g_ab = gerbe_det(&OrientedMor::new(p_ab, Sign::Plus)?)?;
        let g_bc = gerbe_det(&OrientedMor::new(p_bc, Sign::Plus)?)?;
        let g_ac = gerbe_det(&OrientedMor::new(p_ac, Sign::Plus)?)?;
        let c_start = gerbe_det(&OrientedMor::new(phi_start.clone(), lift)?)?;
        let c_end = gerbe_det(&OrientedMor::new(phi_end.clone(), lift)?)?;
        let glhs = g_ac.mul(&c_start);
        let grhs = c_end.mul(&g_ab).mul(&g_bc);
        Ok((square, glhs.value().dist(grhs.value())))
    };
    let (square_residual, gerbe_residual) = run(path.refine)?;
    let (refined_square_residual, refined_gerbe_residual) = run(path.refine * 2)?;
    Ok(TransportReport {
        triple,
        square_residual,
        gerbe_residual,
        refined_square_residual,
        refined_gerbe_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ap(x: f64) -> Approx {
        Approx::new(x, 0.0)
    }

    fn scalar_block(v: f64) -> BlockMatrix {
        BlockMatrix::new(
            DimMatrix::identity(1).unwrap(),
            vec![Mat::from_rows(vec![vec![ap(v)]]).unwrap()],
        )
        .unwrap()
    }

    fn line_grid(n: usize, h: f64) -> Grid {
        Grid::new(vec![0.0], h, vec![n]).unwrap()
    }

    fn scalar_field(points: &BTreeSet<usize>, f: impl Fn(usize) -> f64) -> ConnectionField {
        let dims = DimMatrix::identity(1).unwrap();
        let samples = points
            .iter()
            .map(|&p| (p, vec![scalar_block(f(p))]))
            .collect();
        ConnectionField::new(dims, 1, samples).unwrap()
    }

    fn scalar_phi(
        dims: &DimMatrix,
        points: &BTreeSet<usize>,
        f: impl Fn(usize) -> f64,
    ) -> PhiTable {
        points
            .iter()
            .map(|&p| {
                let m = MorMatrix::new(
                    dims.clone(),
                    vec![VMor::new(Mat::from_rows(vec![vec![ap(f(p))]]).unwrap()).unwrap()],
                )
                .unwrap();
                (p, m)
            })
            .collect()
    }

    #[test]
    fn grid_indexing_round_trip() {
        let g = Grid::new(vec![0.0, -1.0], 0.5, vec![3, 4]).unwrap();
        assert_eq!(g.len(), 12);
        for flat in 0..g.len() {
            assert_eq!(g.flat(&g.multi(flat)), flat);
        }
        assert_eq!(g.coords(g.flat(&[2, 1])), vec![1.0, -0.5]);
        assert_eq!(g.neighbor(g.flat(&[0, 0]), 0, -1), None);
        assert_eq!(
            g.neighbor(g.flat(&[1, 2]), 1, 1),
            Some(g.flat(&[1, 3]))
        );
    }

    fn interval_base(
        n: usize,
        h: f64,
        intervals: &[(usize, usize)],
        margin: usize,
    ) -> SampledBase {
        let grid = line_grid(n, h);
        let mut membership = Vec::new();
        let mut shrunk = Vec::new();
        let mut psi = Vec::new();
        for &(lo, hi) in intervals {
            let member: BTreeSet<usize> = (lo..=hi).collect();
            let shr: BTreeSet<usize> = (lo + margin..=hi - margin).collect();
            let mut table = vec![0.0; n];
            for p in lo..=hi {
                // piecewise-linear bump: 1 on the shrunken set, 0 outside
                let up = (p - lo) as f64 / margin as f64;
                let down = (hi - p) as f64 / margin as f64;
                table[p] = up.min(down).min(1.0);
            }
            membership.push(member);
            shrunk.push(shr);
            psi.push(table);
        }
        SampledBase::new(grid, membership, shrunk, psi).unwrap()
    }

    #[test]
    fn base_validation_rejects_bad_psi() {
        let grid = line_grid(4, 0.5);
        let member: BTreeSet<usize> = (0..4).collect();
        let shr: BTreeSet<usize> = [1, 2].into_iter().collect();
        // psi must be 1 on the shrunken set
        let bad = SampledBase::new(
            grid.clone(),
            vec![member.clone()],
            vec![shr.clone()],
            vec![vec![0.0, 0.5, 1.0, 0.0]],
        );
        assert!(bad.is_err());
        let ok = SampledBase::new(
            grid,
            vec![member],
            vec![shr],
            vec![vec![0.0, 1.0, 1.0, 0.0]],
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn chain_weights_examples() {
        let base = interval_base(21, 0.1, &[(0, 12), (4, 16), (8, 20)], 2);
        // adjacent chain: empty middle product
        for p in 0..21 {
            let w = base.chain_weight(&[0, 1], p).unwrap();
            let expect = BigRational::from_float(base.psi(0, p)).unwrap()
                * BigRational::from_float(base.psi(1, p)).unwrap();
            assert_eq!(w, expect);
        }
        // concatenation identity, exact
        for p in 0..21 {
            let w02 = base.chain_weight(&[0, 1, 2], p).unwrap();
            let w01 = base.chain_weight(&[0, 1], p).unwrap();
            let w12 = base.chain_weight(&[1, 2], p).unwrap();
            assert_eq!(w02, w01 * w12);
        }
        // where psi_1 = 0, only the skipping chain survives
        let p = 2; // inside U0 only
        assert!(base.chain_weight(&[0, 1, 2], p).unwrap().is_zero());
    }

    #[test]
    fn induced_product_rank_one_adds() {
        let pts: BTreeSet<usize> = (0..5).collect();
        let a = scalar_field(&pts, |p| p as f64);
        let b = scalar_field(&pts, |p| 10.0 * p as f64);
        let prod = induced_product(&a, &b).unwrap();
        for &p in &pts {
            let v = prod.at(p).unwrap()[0].block(0, 0).at(0, 0).re;
            assert!((v - 11.0 * p as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn induced_product_matches_dense_assembly() {
        // random-ish 2x2 dims; oracle assembles the full matrix by
        // enumerating the (j, u, v) basis directly
        let da = DimMatrix::from_rows(vec![vec![1, 2], vec![1, 1]]).unwrap();
        let db = DimMatrix::from_rows(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let val = |seed: usize, r: usize, c: usize| {
            ap(((seed * 31 + r * 7 + c * 3) % 11) as f64 / 3.0)
        };
        let mk = |dims: &DimMatrix, seed: usize| {
            let n = dims.size();
            let mut blocks = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let d = dims.get(i, j) as usize;
                    blocks.push(Mat::from_fn(d, |r, c| val(seed + i * 2 + j, r, c)));
                }
            }
            BlockMatrix::new(dims.clone(), blocks).unwrap()
        };
        let a = mk(&da, 1);
        let b = mk(&db, 100);
        let got = induced_product_at(&a, &b).unwrap();
        let dims = da.product(&db).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let size = dims.get(i, k) as usize;
                let mut dense = Mat::<Approx>::zeros(size);
                // basis of entry (i,k): (j, u, v) lex with u < da[i][j], v < db[j][k]
                let mut offset = 0;
                for j in 0..2 {
                    let (du, dv) = (da.get(i, j) as usize, db.get(j, k) as usize);
                    for u in 0..du {
                        for v in 0..dv {
                            for u2 in 0..du {
                                for v2 in 0..dv {
                                    let mut s = Approx::zero();
                                    if v == v2 {
                                        s = s.add(a.block(i, j).at(u, u2));
                                    }
                                    if u == u2 {
                                        s = s.add(b.block(j, k).at(v, v2));
                                    }
                                    dense.set(offset + u * dv + v, offset + u2 * dv + v2, s);
                                }
                            }
                        }
                    }
                    offset += du * dv;
                }
                assert!(got.block(i, k).dist(&dense) < 1e-14);
            }
        }
    }

    #[test]
    fn circ_with_identity_phi_is_induced_product() {
        let grid = line_grid(6, 0.1);
        let pts: BTreeSet<usize> = (0..6).collect();
        let a = scalar_field(&pts, |p| p as f64);
        let b = scalar_field(&pts, |p| 2.0 * p as f64);
        let dims = DimMatrix::identity(1).unwrap();
        let phi = scalar_phi(&dims, &pts, |_| 1.0);
        let circ = circ_product(&a, &b, &phi, &grid).unwrap();
        let plain = induced_product(&a, &b).unwrap();
        assert!(circ.dist(&plain) < 1e-14);
    }

    #[test]
    fn gauge_round_trip_is_second_order() {
        let run = |n: usize| -> f64 {
            let h = 1.0 / (n - 1) as f64;
            let grid = line_grid(n, h);
            let pts: BTreeSet<usize> = (0..n).collect();
            let a = scalar_field(&pts, |p| (p as f64 * h).sin());
            let zero = scalar_field(&pts, |_| 0.0);
            let dims = DimMatrix::identity(1).unwrap();
            let g = |p: usize| (0.7 * (p as f64 * h)).exp();
            let phi = scalar_phi(&dims, &pts, g);
            let phi_inv = scalar_phi(&dims, &pts, |p| 1.0 / g(p));
            // pull back by phi then by phi^{-1}
            let once = circ_product(&a, &zero, &phi_inv, &grid).unwrap();
            let back = circ_product(&once, &zero, &phi, &grid).unwrap();
            // compare on interior points (one-sided differences at the ends
            // are first order)
            let inner: BTreeSet<usize> = (1..n - 1).collect();
            back.restrict(&inner).dist(&a.restrict(&inner))
        };
        let coarse = run(11);
        let fine = run(21);
        assert!(coarse < 1e-2);
        let ratio = coarse / fine;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rank_one_gauge_shifts_by_log_derivative() {
        // a + b - g' for phi = e^{g}: pullback of the line-bundle sum
        let n = 41;
        let h = 1.0 / (n - 1) as f64;
        let grid = line_grid(n, h);
        let pts: BTreeSet<usize> = (0..n).collect();
        let a = scalar_field(&pts, |_| 0.3);
        let b = scalar_field(&pts, |_| -0.1);
        let dims = DimMatrix::identity(1).unwrap();
        let gfun = |x: f64| 0.5 * x * x;
        let phi = scalar_phi(&dims, &pts, |p| gfun(p as f64 * h).exp());
        let circ = circ_product(&a, &b, &phi, &grid).unwrap();
        for p in 1..n - 1 {
            let x = p as f64 * h;
            let got = circ.at(p).unwrap()[0].block(0, 0).at(0, 0).re;
            let expect = 0.3 - 0.1 - x; // g'(x) = x
            assert!((got - expect).abs() < 0.6 * h * h, "p={p}");
        }
    }

    #[test]
    fn convex_combination_identities() {
        let grid = line_grid(9, 0.125);
        let pts: BTreeSet<usize> = (0..9).collect();
        let w1: BTreeMap<usize, f64> = pts.iter().map(|&p| (p, (p as f64) / 10.0)).collect();
        let w2: BTreeMap<usize, f64> = pts.iter().map(|&p| (p, 1.0 - (p as f64) / 10.0)).collect();
        let f1 = scalar_field(&pts, |p| (p as f64).cos());
        let f2 = scalar_field(&pts, |p| 0.5 * p as f64);
        let g1 = scalar_field(&pts, |p| (p as f64) * 0.25);
        let g2 = scalar_field(&pts, |p| -(p as f64) * 0.125 + 1.0);
        let dims = DimMatrix::identity(1).unwrap();
        let phi = scalar_phi(&dims, &pts, |p| 1.0 + 0.1 * p as f64);

        // weights (1, 0) select the first field
        let all_one: BTreeMap<usize, f64> = pts.iter().map(|&p| (p, 1.0)).collect();
        let all_zero: BTreeMap<usize, f64> = pts.iter().map(|&p| (p, 0.0)).collect();
        let sel = convex_combine(&[&f1, &f2], &[all_one, all_zero]).unwrap();
        assert!(sel.dist(&f1) == 0.0);

        // matched-weight distribution over ∘
        let lhs = circ_product(
            &convex_combine(&[&f1, &f2], &[w1.clone(), w2.clone()]).unwrap(),
            &convex_combine(&[&g1, &g2], &[w1.clone(), w2.clone()]).unwrap(),
            &phi,
            &grid,
        )
        .unwrap();
        let c11 = circ_product(&f1, &g1, &phi, &grid).unwrap();
        let c22 = circ_product(&f2, &g2, &phi, &grid).unwrap();
        let rhs = convex_combine(&[&c11, &c22], &[w1.clone(), w2.clone()]).unwrap();
        assert!(lhs.dist(&rhs) < 1e-12);

        // four-term bilinear expansion with independent weight pairs
        let v1: BTreeMap<usize, f64> = pts.iter().map(|&p| (p, 0.3)).collect();
        let v2: BTreeMap<usize, f64> = pts.iter().map(|&p| (p, 0.7)).collect();
        let lhs = circ_product(
            &convex_combine(&[&f1, &f2], &[w1.clone(), w2.clone()]).unwrap(),
            &convex_combine(&[&g1, &g2], &[v1.clone(), v2.clone()]).unwrap(),
            &phi,
            &grid,
        )
        .unwrap();
        let c12 = circ_product(&f1, &g2, &phi, &grid).unwrap();
        let c21 = circ_product(&f2, &g1, &phi, &grid).unwrap();
        let mul = |a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>| -> BTreeMap<usize, f64> {
            a.iter().map(|(p, x)| (*p, x * b[p])).collect()
        };
        let rhs = convex_combine(
            &[&c11, &c12, &c21, &c22],
            &[mul(&w1, &v1), mul(&w1, &v2), mul(&w2, &v1), mul(&w2, &v2)],
        )
        .unwrap();
        assert!(lhs.dist(&rhs) < 1e-12);
    }

    #[test]
    fn transport_closed_forms() {
        let n = 21;
        let h = 1.0 / (n - 1) as f64;
        let grid = line_grid(n, h);
        let pts: BTreeSet<usize> = (0..n).collect();

        // zero connection transports to the identity
        let zero = scalar_field(&pts, |_| 0.0);
        let path = PathSpec {
            charts: vec![0, 1],
            points: (0..n).collect(),
            refine: 2,
        };
        let p = parallel_transport(&zero, &path, &grid).unwrap();
        assert!(p.entry(0, 0).matrix().dist(&Mat::identity(1)) < 1e-15);

        // constant scalar form a dx over length 1: e^{-a}
        let aval = 0.8;
        let field = scalar_field(&pts, |_| aval);
        let run = |refine: usize| {
            let path = PathSpec {
                charts: vec![0, 1],
                points: (0..n).collect(),
                refine,
            };
            let p = parallel_transport(&field, &path, &grid).unwrap();
            (p.entry(0, 0).matrix().at(0, 0).re - (-aval).exp()).abs()
        };
        let coarse = run(1);
        let fine = run(2);
        assert!(coarse < 1e-3);
        let ratio = coarse / fine;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");

        // concatenation: P(full) = P(second)·P(first) exactly
        let first = PathSpec {
            charts: vec![0, 1],
            points: (0..=10).collect(),
            refine: 3,
        };
        let second = PathSpec {
            charts: vec![0, 1],
            points: (10..n).collect(),
            refine: 3,
        };
        let full = PathSpec {
            charts: vec![0, 1],
            points: (0..n).collect(),
            refine: 3,
        };
        let pf = parallel_transport(&field, &first, &grid).unwrap();
        let ps = parallel_transport(&field, &second, &grid).unwrap();
        let pfull = parallel_transport(&field, &full, &grid).unwrap();
        let composed = ps.compose(&pf).unwrap();
        assert_eq!(
            pfull.entry(0, 0).matrix().at(0, 0),
            composed.entry(0, 0).matrix().at(0, 0)
        );
    }

    #[test]
    fn transport_gauge_covariance() {
        // transporting the pulled-back field equals conjugating the
        // transport by the gauge at the endpoints, to second order
        let run = |n: usize| -> f64 {
            let h = 1.0 / (n - 1) as f64;
            let grid = line_grid(n, h);
            let pts: BTreeSet<usize> = (0..n).collect();
            let field = scalar_field(&pts, |p| 0.4 + 0.2 * (p as f64 * h));
            let zero = scalar_field(&pts, |_| 0.0);
            let dims = DimMatrix::identity(1).unwrap();
            let g = |p: usize| 1.0 + 0.5 * (p as f64 * h);
            let phi = scalar_phi(&dims, &pts, g);
            let gauged = circ_product(&field, &zero, &phi, &grid).unwrap();
            let path = PathSpec {
                charts: vec![0, 1],
                points: (0..n).collect(),
                refine: 8,
            };
            let p_plain = parallel_transport(&field, &path, &grid).unwrap();
            let p_gauged = parallel_transport(&gauged, &path, &grid).unwrap();
            let expected =
                g(n - 1) * p_plain.entry(0, 0).matrix().at(0, 0).re * (1.0 / g(0));
            (p_gauged.entry(0, 0).matrix().at(0, 0).re - expected).abs()
        };
        let coarse = run(11);
        let fine = run(21);
        assert!(coarse < 1e-2);
        assert!(coarse / fine > 3.0 && coarse / fine < 5.0);
    }
}
