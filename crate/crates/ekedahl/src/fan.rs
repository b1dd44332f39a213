//! Polyhedral fans over an integer lattice.
//!
//! Fans are stored combinatorially: a list of primitive integer ray
//! generators together with the maximal cones as sorted ray-index sets.
//! All fans handled here are simplicial. The module provides the
//! cyclic-quotient cone construction, smoothness and completeness tests,
//! star fans, stellar subdivision, and resolution of singularities by
//! repeated subdivision at fundamental-parallelepiped points.

use crate::lattice::{
    hermite_form, integer_kernel, smith_form, solve, IntMatrix, IntVector, LatticeError,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum FanError {
    #[error("quotient type is not faithful: gcd(order, weights) != 1")]
    NonCoprimeType,
    #[error("cone {0:?} is not simplicial")]
    NotSimplicial(Vec<usize>),
    #[error("fan is not pure full-dimensional; completeness test refused")]
    NotPure,
    #[error("cone {0:?} does not belong to the fan")]
    ConeNotInFan(Vec<usize>),
    #[error("unknown ray index {0}")]
    UnknownRayIndex(usize),
    #[error("ray {0} lies outside the support of the fan")]
    RayOutsideSupport(String),
    #[error("ray {0} is not primitive")]
    NonPrimitiveRay(String),
    #[error("invalid fan: {0}")]
    InvalidFan(String),
    #[error("fan JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A cone of a fan, stored as the sorted set of its ray indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cone {
    ray_indices: Vec<usize>,
}

impl Cone {
    pub fn new(mut ray_indices: Vec<usize>) -> Self {
        ray_indices.sort_unstable();
        ray_indices.dedup();
        Cone { ray_indices }
    }

    pub fn empty() -> Self {
        Cone {
            ray_indices: Vec::new(),
        }
    }

    pub fn ray_indices(&self) -> &[usize] {
        &self.ray_indices
    }

    pub fn len(&self) -> usize {
        self.ray_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ray_indices.is_empty()
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.ray_indices.binary_search(&i).is_ok()
    }

    pub fn is_face_of(&self, other: &Cone) -> bool {
        self.ray_indices
            .iter()
            .all(|i| other.contains_index(*i))
    }
}

/// A simplicial fan: primitive rays plus maximal cones by ray index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    dim: usize,
    rays: Vec<IntVector>,
    maximal_cones: Vec<Cone>,
}

impl Fan {
    pub fn new(
        dim: usize,
        rays: Vec<IntVector>,
        maximal_cones: Vec<Cone>,
    ) -> Result<Self, FanError> {
        for r in &rays {
            if r.dim() != dim {
                return Err(FanError::InvalidFan(format!(
                    "ray {r} has dimension {} in a {dim}-dimensional fan",
                    r.dim()
                )));
            }
            if r.is_zero() || !r.content().is_one() {
                return Err(FanError::NonPrimitiveRay(r.to_string()));
            }
        }
        let mut seen = BTreeSet::new();
        for r in &rays {
            if !seen.insert(r.clone()) {
                return Err(FanError::InvalidFan(format!("duplicate ray {r}")));
            }
        }
        for c in &maximal_cones {
            for &i in c.ray_indices() {
                if i >= rays.len() {
                    return Err(FanError::UnknownRayIndex(i));
                }
            }
        }
        for (a, ca) in maximal_cones.iter().enumerate() {
            for (b, cb) in maximal_cones.iter().enumerate() {
                if a != b && ca.is_face_of(cb) {
                    return Err(FanError::InvalidFan(format!(
                        "maximal cone {:?} is contained in {:?}",
                        ca.ray_indices(),
                        cb.ray_indices()
                    )));
                }
            }
        }
        if maximal_cones.is_empty() {
            return Err(FanError::InvalidFan("fan has no cones".into()));
        }
        Ok(Fan {
            dim,
            rays,
            maximal_cones,
        })
    }

    /// The fan of a point: dimension zero, a single trivial cone.
    pub fn point() -> Self {
        Fan {
            dim: 0,
            rays: Vec::new(),
            maximal_cones: vec![Cone::empty()],
        }
    }

    /// The complete fan of projective space of the given dimension.
    pub fn projective_space(dim: usize) -> Self {
        assert!(dim >= 1);
        let mut rays: Vec<IntVector> = (0..dim)
            .map(|i| {
                IntVector::new(
                    (0..dim)
                        .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                        .collect(),
                )
            })
            .collect();
        rays.push(IntVector::new(vec![-BigInt::one(); dim]));
        let maximal_cones = (0..=dim)
            .map(|skip| Cone::new((0..=dim).filter(|&i| i != skip).collect()))
            .collect();
        Fan {
            dim,
            rays,
            maximal_cones,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[IntVector] {
        &self.rays
    }

    pub fn ray(&self, i: usize) -> &IntVector {
        &self.rays[i]
    }

    pub fn maximal_cones(&self) -> &[Cone] {
        &self.maximal_cones
    }

    /// Matrix whose columns are the rays of the cone.
    pub fn cone_matrix(&self, c: &Cone) -> IntMatrix {
        if c.is_empty() {
            return IntMatrix::zeros(self.dim, 0);
        }
        let cols: Vec<IntVector> = c
            .ray_indices()
            .iter()
            .map(|&i| self.rays[i].clone())
            .collect();
        IntMatrix::from_columns(&cols)
    }

    /// Whether the ray set is a face of some maximal cone. For simplicial
    /// fans this is exactly membership of the cone in the fan.
    pub fn has_cone(&self, c: &Cone) -> bool {
        self.maximal_cones.iter().any(|m| c.is_face_of(m))
    }

    /// Every face of every maximal cone, including the trivial cone.
    pub fn all_cones(&self) -> BTreeSet<Cone> {
        use itertools::Itertools;
        let mut out = BTreeSet::new();
        for m in &self.maximal_cones {
            for k in 0..=m.len() {
                for subset in m.ray_indices().iter().copied().combinations(k) {
                    out.insert(Cone::new(subset));
                }
            }
        }
        out
    }

    /// Counts of cones by dimension, `counts[d]` = number of d-dimensional
    /// cones. Valid for simplicial fans, where face dimension = ray count.
    pub fn cone_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.dim + 1];
        for c in self.all_cones() {
            counts[c.len()] += 1;
        }
        counts
    }

    pub fn to_json(&self) -> String {
        let json = FanJson::from(self);
        serde_json::to_string_pretty(&json).expect("fan serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Fan, FanError> {
        let json: FanJson =
            serde_json::from_str(text).map_err(|e| FanError::Json(e.to_string()))?;
        json.try_into()
    }
}

/// Interchange form of a fan: plain integers, 0-based ray indices.
#[derive(Debug, Serialize, Deserialize)]
pub struct FanJson {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub maximal_cones: Vec<Vec<usize>>,
}

impl From<&Fan> for FanJson {
    fn from(f: &Fan) -> Self {
        FanJson {
            dim: f.dim,
            rays: f
                .rays
                .iter()
                .map(|r| {
                    r.entries()
                        .iter()
                        .map(|e| i64::try_from(e).expect("ray entry exceeds i64; not representable in fan JSON"))
                        .collect()
                })
                .collect(),
            maximal_cones: f
                .maximal_cones
                .iter()
                .map(|c| c.ray_indices().to_vec())
                .collect(),
        }
    }
}

impl TryFrom<FanJson> for Fan {
    type Error = FanError;

    fn try_from(json: FanJson) -> Result<Fan, FanError> {
        let rays = json
            .rays
            .into_iter()
            .map(|r| IntVector::new(r.into_iter().map(BigInt::from).collect()))
            .collect();
        let cones = json.maximal_cones.into_iter().map(Cone::new).collect();
        Fan::new(json.dim, rays, cones)
    }
}

/// A cyclic quotient singularity type 1/n(a_1, ..., a_k).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicQuotientType {
    order: u64,
    weights: Vec<u64>,
}

impl CyclicQuotientType {
    pub fn new(order: u64, weights: Vec<u64>) -> Result<Self, FanError> {
        if order == 0 || weights.is_empty() {
            return Err(FanError::NonCoprimeType);
        }
        let weights: Vec<u64> = weights.into_iter().map(|w| w % order).collect();
        let mut g = order;
        for &w in &weights {
            g = g.gcd(&w);
        }
        if g != 1 {
            return Err(FanError::NonCoprimeType);
        }
        Ok(CyclicQuotientType { order, weights })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
}

impl std::fmt::Display for CyclicQuotientType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ws: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "1/{}({})", self.order, ws.join(","))
    }
}

impl std::str::FromStr for CyclicQuotientType {
    type Err = FanError;

    /// Parses the `1/n(a1,a2,...)` notation.
    fn from_str(s: &str) -> Result<Self, FanError> {
        let bad = || FanError::InvalidFan(format!("cannot parse quotient type {s:?}"));
        let rest = s.trim().strip_prefix("1/").ok_or_else(bad)?;
        let open = rest.find('(').ok_or_else(bad)?;
        let order: u64 = rest[..open].trim().parse().map_err(|_| bad())?;
        let inner = rest[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let weights: Vec<u64> = inner
            .split(',')
            .map(|w| w.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        CyclicQuotientType::new(order, weights)
    }
}

/// The affine fan of the quotient A^k / (Z/n) acting with the given
/// weights: a single simplicial cone, re-expressed in a basis of the
/// overlattice Z^k + Z (a_1, ..., a_k)/n.
pub fn quotient_cone(t: &CyclicQuotientType) -> Result<Fan, FanError> {
    let k = t.weights.len();
    let n = BigInt::from(t.order);
    // basis of n*N, where N = Z^k + Z w/n: row HNF of [n I; w]
    let mut stacked: Vec<Vec<BigInt>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { n.clone() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    stacked.push(t.weights.iter().map(|&w| BigInt::from(w)).collect());
    let (h, _) = hermite_form(&IntMatrix::from_rows(stacked));
    let basis_rows: Vec<Vec<BigInt>> = (0..k).map(|r| h.row(r).entries().to_vec()).collect();
    let b = IntMatrix::from_rows(basis_rows);
    // coordinates of e_i in the basis b/n: solve b^T x = n e_i
    let mut rhs = IntMatrix::zeros(k, k);
    for i in 0..k {
        rhs.set(i, i, n.clone());
    }
    let coords = solve(&b.transpose(), &rhs)
        .ok_or_else(|| FanError::InvalidFan("quotient lattice basis is degenerate".into()))?;
    let rays: Vec<IntVector> = (0..k).map(|i| coords.column(i).primitivized()).collect();
    Fan::new(k, rays, vec![Cone::new((0..k).collect())])
}

/// Lattice index of the sublattice spanned by the cone's rays inside the
/// saturation of their span (the multiplicity of the cone).
pub fn multiplicity(f: &Fan, c: &Cone) -> Result<BigInt, FanError> {
    if !is_simplicial(f, c) {
        return Err(FanError::NotSimplicial(c.ray_indices().to_vec()));
    }
    if c.is_empty() {
        return Ok(BigInt::one());
    }
    Ok(smith_form(&f.cone_matrix(c)).nonzero_product())
}

pub fn is_simplicial(f: &Fan, c: &Cone) -> bool {
    if c.is_empty() {
        return true;
    }
    f.cone_matrix(c).rank() == c.len()
}

/// A simplicial cone is smooth iff its rays extend to a lattice basis,
/// i.e. iff its Smith diagonal consists of ones.
pub fn is_smooth(f: &Fan, c: &Cone) -> Result<bool, FanError> {
    if !is_simplicial(f, c) {
        return Err(FanError::NotSimplicial(c.ray_indices().to_vec()));
    }
    if c.is_empty() {
        return Ok(true);
    }
    Ok(smith_form(&f.cone_matrix(c))
        .diagonal
        .iter()
        .all(|d| d.is_one()))
}

pub fn is_smooth_fan(f: &Fan) -> Result<bool, FanError> {
    for c in f.maximal_cones() {
        if !is_smooth(f, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Completeness by facet pairing: a pure full-dimensional simplicial fan
/// is complete iff every facet of every maximal cone is shared by exactly
/// two maximal cones. Inputs that are not pure full-dimensional are
/// rejected rather than guessed at.
pub fn is_complete(f: &Fan) -> Result<bool, FanError> {
    if f.maximal_cones().is_empty() {
        return Ok(false);
    }
    for c in f.maximal_cones() {
        if !is_simplicial(f, c) {
            return Err(FanError::NotSimplicial(c.ray_indices().to_vec()));
        }
        if c.len() != f.dim() {
            return Err(FanError::NotPure);
        }
    }
    if f.dim() == 0 {
        return Ok(true);
    }
    let mut facet_counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for c in f.maximal_cones() {
        for skip in c.ray_indices() {
            let facet: Vec<usize> = c
                .ray_indices()
                .iter()
                .copied()
                .filter(|i| i != skip)
                .collect();
            *facet_counts.entry(facet).or_insert(0) += 1;
        }
    }
    Ok(facet_counts.values().all(|&n| n == 2))
}

/// Solves `R lambda = x` over the rationals for the ray matrix of a
/// simplicial cone; `None` when `x` is outside the column span.
fn rational_coordinates(r: &IntMatrix, x: &IntVector) -> Option<Vec<BigRational>> {
    let rows = r.rows();
    let cols = r.cols();
    assert_eq!(rows, x.dim());
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| BigRational::from(r.at(i, j).clone()))
                .chain(std::iter::once(BigRational::from(x.entry(i).clone())))
                .collect()
        })
        .collect();
    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&i| !a[i][col].is_zero()) else {
            pivot_rows.push(usize::MAX);
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].clone();
        for j in col..=cols {
            a[row][j] = &a[row][j] / &inv;
        }
        for i in 0..rows {
            if i != row && !a[i][col].is_zero() {
                let factor = a[i][col].clone();
                for j in col..=cols {
                    let sub = &factor * &a[row][j];
                    a[i][j] = &a[i][j] - sub;
                }
            }
        }
        pivot_rows.push(row);
        row += 1;
    }
    // rows below the pivots must have zero right-hand side
    for i in row..rows {
        if !a[i][cols].is_zero() {
            return None;
        }
    }
    let mut lambda = vec![BigRational::zero(); cols];
    for (col, &pr) in pivot_rows.iter().enumerate() {
        if pr != usize::MAX {
            lambda[col] = a[pr][cols].clone();
        }
    }
    Some(lambda)
}

/// Barycentric coordinates of a point inside a simplicial cone; `None` if
/// the point is outside.
pub fn cone_coordinates(f: &Fan, c: &Cone, x: &IntVector) -> Option<Vec<BigRational>> {
    let coords = rational_coordinates(&f.cone_matrix(c), x)?;
    if coords.iter().all(|l| !l.is_negative()) {
        Some(coords)
    } else {
        None
    }
}

pub fn support_contains(f: &Fan, x: &IntVector) -> bool {
    f.maximal_cones()
        .iter()
        .any(|c| cone_coordinates(f, c, x).is_some())
}

/// Star fan of a cone plus the induced map from adjacent rays of the
/// original fan to rays of the star.
pub fn star_fan_with_map(
    f: &Fan,
    c: &Cone,
) -> Result<(Fan, BTreeMap<usize, usize>), FanError> {
    if !f.has_cone(c) || !is_simplicial(f, c) {
        return Err(FanError::ConeNotInFan(c.ray_indices().to_vec()));
    }
    if c.is_empty() {
        let map = (0..f.rays().len()).map(|i| (i, i)).collect();
        return Ok((f.clone(), map));
    }
    let k = c.len();
    let n = f.dim();
    if k == n {
        return Ok((Fan::point(), BTreeMap::new()));
    }
    // in coordinates z = left * x the saturated span of c is Z^k x 0, so the
    // projection onto the last n-k coordinates is the quotient map
    let snf = smith_form(&f.cone_matrix(c));
    let left = &snf.left_unimodular;
    let project = |v: &IntVector| -> IntVector {
        let z = left.mul_vector(v);
        IntVector::new(z.entries()[k..].to_vec())
    };
    let mut star_rays: Vec<IntVector> = Vec::new();
    let mut ray_map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut star_cones: BTreeSet<Cone> = BTreeSet::new();
    for m in f.maximal_cones() {
        if !c.is_face_of(m) {
            continue;
        }
        let mut image_indices = Vec::new();
        for &i in m.ray_indices() {
            if c.contains_index(i) {
                continue;
            }
            let idx = match ray_map.get(&i) {
                Some(&idx) => idx,
                None => {
                    let img = project(f.ray(i)).primitivized();
                    assert!(
                        !star_rays.contains(&img),
                        "distinct rays adjacent to a cone cannot collide in the star"
                    );
                    star_rays.push(img);
                    ray_map.insert(i, star_rays.len() - 1);
                    star_rays.len() - 1
                }
            };
            image_indices.push(idx);
        }
        star_cones.insert(Cone::new(image_indices));
    }
    let fan = Fan::new(n - k, star_rays, star_cones.into_iter().collect())?;
    Ok((fan, ray_map))
}

/// Fan of the orbit closure of a cone, in the quotient lattice.
pub fn star_fan(f: &Fan, c: &Cone) -> Result<Fan, FanError> {
    star_fan_with_map(f, c).map(|(fan, _)| fan)
}

/// Refines the fan by inserting a ray: every cone containing the ray is
/// replaced by the joins of the ray with its facets not containing it.
pub fn stellar_subdivision(f: &Fan, new_ray: &IntVector) -> Result<Fan, FanError> {
    if new_ray.is_zero() || !new_ray.content().is_one() {
        return Err(FanError::NonPrimitiveRay(new_ray.to_string()));
    }
    if f.rays().contains(new_ray) {
        return Ok(f.clone());
    }
    let mut containing: Vec<(usize, Vec<BigRational>)> = Vec::new();
    for (idx, c) in f.maximal_cones().iter().enumerate() {
        if !is_simplicial(f, c) {
            return Err(FanError::NotSimplicial(c.ray_indices().to_vec()));
        }
        if let Some(coords) = cone_coordinates(f, c, new_ray) {
            containing.push((idx, coords));
        }
    }
    if containing.is_empty() {
        return Err(FanError::RayOutsideSupport(new_ray.to_string()));
    }
    let mut rays = f.rays().to_vec();
    rays.push(new_ray.clone());
    let new_index = rays.len() - 1;
    let mut cones: Vec<Cone> = Vec::new();
    let split: BTreeMap<usize, &Vec<BigRational>> =
        containing.iter().map(|(i, l)| (*i, l)).collect();
    for (idx, c) in f.maximal_cones().iter().enumerate() {
        match split.get(&idx) {
            None => cones.push(c.clone()),
            Some(lambda) => {
                for (pos, &i) in c.ray_indices().iter().enumerate() {
                    if lambda[pos].is_zero() {
                        continue;
                    }
                    let mut indices: Vec<usize> = c
                        .ray_indices()
                        .iter()
                        .copied()
                        .filter(|&j| j != i)
                        .collect();
                    indices.push(new_index);
                    cones.push(Cone::new(indices));
                }
            }
        }
    }
    Fan::new(f.dim(), rays, cones)
}

/// Nonzero lattice points of the half-open fundamental parallelepiped of a
/// simplicial cone, each with its barycentric coordinates.
pub fn parallelepiped_points(
    f: &Fan,
    c: &Cone,
) -> Result<Vec<(IntVector, Vec<BigRational>)>, FanError> {
    if !is_simplicial(f, c) {
        return Err(FanError::NotSimplicial(c.ray_indices().to_vec()));
    }
    let k = c.len();
    let n = f.dim();
    if k == 0 {
        return Ok(Vec::new());
    }
    let r = f.cone_matrix(c);
    let snf = smith_form(&r);
    // b = first k columns of left^{-1}: a basis of the saturated span
    let left_inv = solve(&snf.left_unimodular, &IntMatrix::identity(n))
        .expect("unimodular matrices invert over the integers");
    let lr = snf.left_unimodular.mul(&r);
    let mut a = IntMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a.set(i, j, lr.at(i, j).clone());
        }
        for j in 0..k {
            debug_assert!(
                lr.rows() <= k || (k..lr.rows()).all(|rr| lr.at(rr, j).is_zero()),
                "rays must project into the saturated span"
            );
        }
    }
    // cosets of A Z^k in Z^k via the Smith form of A
    let snf_a = smith_form(&a);
    let orders: Vec<BigInt> = snf_a.diagonal.clone();
    debug_assert!(orders.iter().all(|d| !d.is_zero()));
    let la_inv = solve(&snf_a.left_unimodular, &IntMatrix::identity(k))
        .expect("unimodular matrices invert over the integers");
    let mut points = Vec::new();
    let mut counter = vec![BigInt::zero(); k];
    loop {
        // representative mu0 = la_inv * t, then reduce into the parallelepiped
        let t = IntVector::new(counter.clone());
        let mu0 = la_inv.mul_vector(&t);
        let lambda =
            rational_coordinates(&a, &mu0).expect("A is invertible over the rationals");
        let frac: Vec<BigRational> = lambda.iter().map(|l| l - l.floor()).collect();
        let mut mu = vec![BigInt::zero(); k];
        for (i, m) in mu.iter_mut().enumerate() {
            let mut acc = BigRational::zero();
            for j in 0..k {
                acc += BigRational::from(a.at(i, j).clone()) * &frac[j];
            }
            debug_assert!(acc.is_integer());
            *m = acc.to_integer();
        }
        let mut x = vec![BigInt::zero(); n];
        for (i, xi) in x.iter_mut().enumerate() {
            for (j, m) in mu.iter().enumerate() {
                *xi += left_inv.at(i, j) * m;
            }
        }
        let point = IntVector::new(x);
        if !point.is_zero() {
            points.push((point, frac));
        }
        // advance the mixed-radix counter over the coset representatives
        let mut pos = 0;
        loop {
            if pos == k {
                let mult = snf.nonzero_product();
                let expected = &mult - BigInt::one();
                assert_eq!(BigInt::from(points.len()), expected);
                points.sort_by(|a, b| a.0.cmp(&b.0));
                points.dedup_by(|a, b| a.0 == b.0);
                return Ok(points);
            }
            counter[pos] += 1;
            if counter[pos] < orders[pos] {
                break;
            }
            counter[pos] = BigInt::zero();
            pos += 1;
        }
    }
}

/// Record of a resolution run: the original fan, the smooth refinement,
/// which rays are exceptional, and how many exceptional rays lie over each
/// originally singular maximal cone.
#[derive(Debug, Clone)]
pub struct ResolutionRecord {
    pub original: Fan,
    pub resolved: Fan,
    pub exceptional_ray_indices: BTreeSet<usize>,
    pub per_singularity_divisor_counts: BTreeMap<usize, usize>,
}

impl ResolutionRecord {
    pub fn exceptional_count(&self) -> usize {
        self.exceptional_ray_indices.len()
    }

    pub fn to_json(&self) -> String {
        let json = ResolutionRecordJson {
            original: FanJson::from(&self.original),
            resolved: FanJson::from(&self.resolved),
            exceptional_rays: self.exceptional_ray_indices.iter().copied().collect(),
            per_singularity_divisor_counts: self
                .per_singularity_divisor_counts
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("record serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ResolutionRecord, FanError> {
        let json: ResolutionRecordJson =
            serde_json::from_str(text).map_err(|e| FanError::Json(e.to_string()))?;
        let original: Fan = json.original.try_into()?;
        let resolved: Fan = json.resolved.try_into()?;
        for &r in &json.exceptional_rays {
            if r >= resolved.rays().len() {
                return Err(FanError::UnknownRayIndex(r));
            }
        }
        let per_singularity = json
            .per_singularity_divisor_counts
            .iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|idx| (idx, *v))
                    .map_err(|e| FanError::Json(format!("bad singularity key {k:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(ResolutionRecord {
            original,
            resolved,
            exceptional_ray_indices: json.exceptional_rays.into_iter().collect(),
            per_singularity_divisor_counts: per_singularity,
        })
    }
}

/// Interchange form of a resolution record.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResolutionRecordJson {
    pub original: FanJson,
    pub resolved: FanJson,
    pub exceptional_rays: Vec<usize>,
    pub per_singularity_divisor_counts: BTreeMap<String, usize>,
}

/// Chooses the next subdivision ray of a non-smooth cone: a primitive
/// parallelepiped point of minimal barycentric coordinate sum, ties broken
/// lexicographically on coordinates.
fn subdivision_point(f: &Fan, c: &Cone) -> Result<IntVector, FanError> {
    let points = parallelepiped_points(f, c)?;
    let mut best: Option<(BigRational, IntVector)> = None;
    for (point, coords) in points {
        if !point.content().is_one() {
            continue;
        }
        let age: BigRational = coords.iter().sum();
        let better = match &best {
            None => true,
            Some((best_age, best_point)) => {
                age < *best_age || (age == *best_age && point < *best_point)
            }
        };
        if better {
            best = Some((age, point));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| {
        FanError::InvalidFan("non-smooth cone without primitive parallelepiped point".into())
    })
}

/// Resolves all singular cones of a simplicial fan by repeated stellar
/// subdivision. Terminates because every subdivision strictly decreases
/// the multiplicities of the cones it splits.
pub fn resolve_fan(f: &Fan) -> Result<ResolutionRecord, FanError> {
    for c in f.maximal_cones() {
        if !is_simplicial(f, c) {
            return Err(FanError::NotSimplicial(c.ray_indices().to_vec()));
        }
    }
    let singular_original: Vec<usize> = f
        .maximal_cones()
        .iter()
        .enumerate()
        .filter(|(_, c)| !is_smooth(f, c).unwrap_or(false))
        .map(|(i, _)| i)
        .collect();
    let mut resolved = f.clone();
    loop {
        let mut worklist: Vec<Cone> = resolved
            .maximal_cones()
            .iter()
            .filter(|c| !is_smooth(&resolved, c).unwrap_or(false))
            .cloned()
            .collect();
        if worklist.is_empty() {
            break;
        }
        worklist.sort_by(|a, b| a.ray_indices().cmp(b.ray_indices()));
        let target = &worklist[0];
        let point = subdivision_point(&resolved, target)?;
        resolved = stellar_subdivision(&resolved, &point)?;
    }
    let exceptional: BTreeSet<usize> = (f.rays().len()..resolved.rays().len()).collect();
    let mut per_singularity = BTreeMap::new();
    for &cone_idx in &singular_original {
        let cone = &f.maximal_cones()[cone_idx];
        let count = exceptional
            .iter()
            .filter(|&&r| cone_coordinates(f, cone, resolved.ray(r)).is_some())
            .count();
        per_singularity.insert(cone_idx, count);
    }
    Ok(ResolutionRecord {
        original: f.clone(),
        resolved,
        exceptional_ray_indices: exceptional,
        per_singularity_divisor_counts: per_singularity,
    })
}

/// Exact certificate that a resolution preserved the support: every new
/// ray lies in the original support, and every unpaired facet of the
/// refined fan lies on a boundary hyperplane of the original support.
pub fn support_preserved(record: &ResolutionRecord) -> Result<bool, FanError> {
    let original = &record.original;
    let resolved = &record.resolved;
    for r in resolved.rays() {
        if !support_contains(original, r) {
            return Ok(false);
        }
    }
    // boundary hyperplanes of the original support: normals of facets
    // belonging to exactly one original maximal cone
    let mut facet_counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for c in original.maximal_cones() {
        if c.len() != original.dim() {
            return Err(FanError::NotPure);
        }
        for skip in c.ray_indices() {
            let facet: Vec<usize> = c
                .ray_indices()
                .iter()
                .copied()
                .filter(|i| i != skip)
                .collect();
            *facet_counts.entry(facet).or_insert(0) += 1;
        }
    }
    let mut boundary_normals: Vec<IntVector> = Vec::new();
    for (facet, count) in &facet_counts {
        if *count != 1 {
            continue;
        }
        let rays: Vec<IntVector> = facet.iter().map(|&i| original.ray(i).clone()).collect();
        let m = if rays.is_empty() {
            IntMatrix::zeros(0, original.dim())
        } else {
            IntMatrix::from_columns(&rays).transpose()
        };
        let kernel = integer_kernel(&m);
        if kernel.cols() != 1 {
            return Err(FanError::InvalidFan(
                "boundary facet without a unique normal".into(),
            ));
        }
        boundary_normals.push(kernel.column(0));
    }
    let mut resolved_facets: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for c in resolved.maximal_cones() {
        for skip in c.ray_indices() {
            let facet: Vec<usize> = c
                .ray_indices()
                .iter()
                .copied()
                .filter(|i| i != skip)
                .collect();
            *resolved_facets.entry(facet).or_insert(0) += 1;
        }
    }
    for (facet, count) in &resolved_facets {
        match count {
            2 => {}
            1 => {
                let on_boundary = boundary_normals.iter().any(|normal| {
                    facet
                        .iter()
                        .all(|&i| resolved.ray(i).dot(normal).is_zero())
                });
                if !on_boundary {
                    return Ok(false);
                }
            }
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// The cone cut out by a set of rays of a smooth fan, if it belongs to the
/// fan: the toric divisors of those rays then intersect in its orbit
/// closure, and the intersection is empty otherwise.
pub fn divisor_intersection_cone(
    f: &Fan,
    ray_indices: &BTreeSet<usize>,
) -> Result<Option<Cone>, FanError> {
    for &i in ray_indices {
        if i >= f.rays().len() {
            return Err(FanError::UnknownRayIndex(i));
        }
    }
    let c = Cone::new(ray_indices.iter().copied().collect());
    if f.has_cone(&c) {
        Ok(Some(c))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quotient(order: u64, weights: &[u64]) -> Fan {
        quotient_cone(&CyclicQuotientType::new(order, weights.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn quotient_cone_1_5_1234_has_index_five() {
        let f = quotient(5, &[1, 2, 3, 4]);
        assert_eq!(f.dim(), 4);
        assert_eq!(f.maximal_cones().len(), 1);
        let snf = smith_form(&f.cone_matrix(&f.maximal_cones()[0]));
        let diag: Vec<i64> = snf
            .diagonal
            .iter()
            .map(|d| i64::try_from(d).unwrap())
            .collect();
        assert_eq!(diag, vec![1, 1, 1, 5]);
    }

    #[test]
    fn quotient_cone_trivial_group_is_smooth() {
        let f = quotient(1, &[0]);
        assert!(is_smooth(&f, &f.maximal_cones()[0]).unwrap());
    }

    #[test]
    fn quotient_cone_1_3_11_has_index_three() {
        let f = quotient(3, &[1, 1]);
        let c = &f.maximal_cones()[0];
        assert_eq!(multiplicity(&f, c).unwrap(), BigInt::from(3));
        assert!(!is_smooth(&f, c).unwrap());
    }

    #[test]
    fn quotient_cone_rejects_non_coprime() {
        assert!(CyclicQuotientType::new(4, vec![2, 2]).is_err());
    }

    #[test]
    fn orthant_is_smooth_and_skew_cone_is_not() {
        let orthant = Fan::new(
            2,
            vec![IntVector::from_i64(&[1, 0]), IntVector::from_i64(&[0, 1])],
            vec![Cone::new(vec![0, 1])],
        )
        .unwrap();
        assert!(is_smooth(&orthant, &orthant.maximal_cones()[0]).unwrap());

        let skew = Fan::new(
            2,
            vec![IntVector::from_i64(&[1, 0]), IntVector::from_i64(&[1, 2])],
            vec![Cone::new(vec![0, 1])],
        )
        .unwrap();
        assert!(!is_smooth(&skew, &skew.maximal_cones()[0]).unwrap());
        assert_eq!(
            multiplicity(&skew, &skew.maximal_cones()[0]).unwrap(),
            BigInt::from(2)
        );
    }

    #[test]
    fn projective_plane_is_complete_single_orthant_is_not() {
        assert!(is_complete(&Fan::projective_space(2)).unwrap());
        let orthant = Fan::new(
            2,
            vec![IntVector::from_i64(&[1, 0]), IntVector::from_i64(&[0, 1])],
            vec![Cone::new(vec![0, 1])],
        )
        .unwrap();
        assert!(!is_complete(&orthant).unwrap());
    }

    #[test]
    fn star_of_a_ray_of_p2_is_p1() {
        let p2 = Fan::projective_space(2);
        let star = star_fan(&p2, &Cone::new(vec![0])).unwrap();
        assert_eq!(star.dim(), 1);
        assert_eq!(star.maximal_cones().len(), 2);
        assert!(is_complete(&star).unwrap());
    }

    #[test]
    fn star_of_a_maximal_cone_is_a_point() {
        let p2 = Fan::projective_space(2);
        let star = star_fan(&p2, &Cone::new(vec![0, 1])).unwrap();
        assert_eq!(star.dim(), 0);
        assert!(is_complete(&star).unwrap());
    }

    #[test]
    fn star_rejects_foreign_cone() {
        let p2 = Fan::projective_space(2);
        assert!(star_fan(&p2, &Cone::new(vec![0, 1, 2])).is_err());
    }

    #[test]
    fn subdividing_orthant_at_diagonal_gives_two_smooth_cones() {
        let orthant = Fan::new(
            2,
            vec![IntVector::from_i64(&[1, 0]), IntVector::from_i64(&[0, 1])],
            vec![Cone::new(vec![0, 1])],
        )
        .unwrap();
        let sub = stellar_subdivision(&orthant, &IntVector::from_i64(&[1, 1])).unwrap();
        assert_eq!(sub.maximal_cones().len(), 2);
        for c in sub.maximal_cones() {
            assert!(is_smooth(&sub, c).unwrap());
        }
    }

    #[test]
    fn subdividing_at_existing_ray_is_identity() {
        let p2 = Fan::projective_space(2);
        let sub = stellar_subdivision(&p2, &IntVector::from_i64(&[1, 0])).unwrap();
        assert_eq!(sub, p2);
    }

    #[test]
    fn subdivision_rejects_outside_rays() {
        let orthant = Fan::new(
            2,
            vec![IntVector::from_i64(&[1, 0]), IntVector::from_i64(&[0, 1])],
            vec![Cone::new(vec![0, 1])],
        )
        .unwrap();
        assert!(matches!(
            stellar_subdivision(&orthant, &IntVector::from_i64(&[-1, 1])),
            Err(FanError::RayOutsideSupport(_))
        ));
        assert!(matches!(
            stellar_subdivision(&orthant, &IntVector::from_i64(&[2, 2])),
            Err(FanError::NonPrimitiveRay(_))
        ));
    }

    #[test]
    fn subdivision_preserves_support_on_random_points() {
        let f = quotient(5, &[1, 2, 3, 4]);
        let record = resolve_fan(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            // random nonnegative combination of the original rays
            let mut x = IntVector::zeros(4);
            for ray in f.rays() {
                let c = BigInt::from(rng.gen_range(0..7i64));
                x = x.add(&ray.scale(&c));
            }
            if x.is_zero() {
                continue;
            }
            assert!(support_contains(&record.resolved, &x));
        }
        // and points outside stay outside
        let outside = IntVector::from_i64(&[-1, 0, 0, 0]);
        if !support_contains(&f, &outside) {
            assert!(!support_contains(&record.resolved, &outside));
        }
    }

    #[test]
    fn resolving_a_smooth_fan_changes_nothing() {
        let p2 = Fan::projective_space(2);
        let record = resolve_fan(&p2).unwrap();
        assert_eq!(record.resolved, p2);
        assert!(record.exceptional_ray_indices.is_empty());
    }

    /// Independent Hirzebruch-Jung oracle: the minimal resolution of a
    /// 2-dim cyclic quotient 1/n(1, q) has as many exceptional curves as
    /// the expansion n/q = [[b1, ..., bl]] into a ceiling continued
    /// fraction is long. Sanity anchors: 1/2(1,1) -> [[2]], one (-2)
    /// curve; 1/3(1,1) -> [[3]], one (-3) curve; 1/n(1,n-1) -> a chain of
    /// n-1 (-2) curves.
    fn hirzebruch_jung_length(n: u64, q: u64) -> usize {
        let mut num = n as i64;
        let mut den = q as i64;
        let mut len = 0;
        while den > 0 {
            let b = (num + den - 1) / den; // ceiling
            len += 1;
            let next = b * den - num;
            num = den;
            den = next;
        }
        len
    }

    #[test]
    fn two_dimensional_resolutions_match_hirzebruch_jung() {
        for (n, q) in [(3u64, 1u64), (5, 1), (5, 2), (5, 3), (7, 3), (11, 4)] {
            let f = quotient(n, &[1, q]);
            let record = resolve_fan(&f).unwrap();
            for c in record.resolved.maximal_cones() {
                assert!(is_smooth(&record.resolved, c).unwrap());
            }
            assert_eq!(
                record.exceptional_count(),
                hirzebruch_jung_length(n, q),
                "type 1/{n}(1,{q})"
            );
            assert!(support_preserved(&record).unwrap());
        }
    }

    #[test]
    fn one_third_one_one_resolution() {
        let f = quotient(3, &[1, 1]);
        let record = resolve_fan(&f).unwrap();
        assert_eq!(
            record.exceptional_count(),
            hirzebruch_jung_length(3, 1),
            "1/3(1,1) is the cone over the rational normal curve of degree 3"
        );
        assert_eq!(record.per_singularity_divisor_counts.get(&0), Some(&1));
    }

    #[test]
    fn resolution_of_the_heisenberg_germ() {
        let f = quotient(5, &[1, 2, 3, 4]);
        let record = resolve_fan(&f).unwrap();
        for c in record.resolved.maximal_cones() {
            assert!(is_smooth(&record.resolved, c).unwrap());
        }
        assert!(record.resolved.rays().len() > 4);
        assert!(support_preserved(&record).unwrap());
    }

    #[test]
    fn divisor_intersections_in_p2() {
        let p2 = Fan::projective_space(2);
        let pair: BTreeSet<usize> = [0usize, 1].into_iter().collect();
        assert!(divisor_intersection_cone(&p2, &pair).unwrap().is_some());
        let p1 = Fan::projective_space(1);
        let opposite: BTreeSet<usize> = [0usize, 1].into_iter().collect();
        assert!(divisor_intersection_cone(&p1, &opposite).unwrap().is_none());
        let unknown: BTreeSet<usize> = [7usize].into_iter().collect();
        assert!(divisor_intersection_cone(&p2, &unknown).is_err());
    }

    #[test]
    fn fan_json_round_trip() {
        let p2 = Fan::projective_space(2);
        let text = p2.to_json();
        let back = Fan::from_json(&text).unwrap();
        assert_eq!(back, p2);
        assert!(Fan::from_json("{\"dim\": 2}").is_err());
    }

    #[test]
    fn parallelepiped_of_the_five_germ() {
        let f = quotient(5, &[1, 2, 3, 4]);
        let points = parallelepiped_points(&f, &f.maximal_cones()[0]).unwrap();
        assert_eq!(points.len(), 4);
        for (p, coords) in &points {
            assert!(p.content().is_one());
            let age: BigRational = coords.iter().sum();
            assert_eq!(age, BigRational::from(BigInt::from(2)));
        }
    }
}
