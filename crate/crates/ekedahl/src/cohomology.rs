//! Integral cohomology of smooth complete toric varieties and the integral
//! cohomology ring of `(Z/p)^2`.
//!
//! Cohomology bases come from a shelling of the fan in the sense of
//! Fulton's book: a generic one-parameter subgroup assigns to each maximal
//! cone a "new face", and the orbit closures of the new faces freely
//! generate the cohomology. Products reduce through transversality moves
//! and linear-equivalence rewriting, never through Groebner machinery.

use crate::fan::{self, Cone, Fan, FanError};
use crate::lattice::{
    prime_power_decomposition, solve, IntMatrix, IntVector, IntegerLinearMap, LatticeError,
};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum CohomologyError {
    #[error("fan is not smooth")]
    NotSmooth,
    #[error("fan is not complete")]
    NotComplete,
    #[error("no shelling found: {0}")]
    NoShelling(String),
    #[error("expected {expected} divisors for a fan of dimension {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("{0:?} is not a face of the source cone")]
    NotAFace(Vec<usize>),
    #[error(transparent)]
    Fan(#[from] FanError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("internal: {0}")]
    Internal(String),
}

/// A finitely generated abelian group: free rank plus torsion orders kept
/// as a sorted multiset of prime powers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AbGroup {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbGroup {
    pub fn free(rank: usize) -> Self {
        AbGroup {
            free_rank: rank,
            torsion: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::free(0)
    }

    /// Normalizes arbitrary torsion orders into prime powers.
    pub fn new(free_rank: usize, torsion_orders: &[BigInt]) -> Self {
        let mut torsion = Vec::new();
        for t in torsion_orders {
            assert!(
                !t.is_zero() && !t.is_negative(),
                "torsion orders are positive"
            );
            if t.is_one() {
                continue;
            }
            torsion.extend(prime_power_decomposition(t));
        }
        torsion.sort();
        AbGroup { free_rank, torsion }
    }

    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn direct_sum(&self, other: &AbGroup) -> AbGroup {
        let mut torsion = self.torsion.clone();
        torsion.extend(other.torsion.iter().cloned());
        torsion.sort();
        AbGroup {
            free_rank: self.free_rank + other.free_rank,
            torsion,
        }
    }

    pub fn repeated(&self, copies: usize) -> AbGroup {
        let mut out = AbGroup::zero();
        for _ in 0..copies {
            out = out.direct_sum(self);
        }
        out
    }
}

impl std::fmt::Display for AbGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        let mut counts: BTreeMap<&BigInt, usize> = BTreeMap::new();
        for t in &self.torsion {
            *counts.entry(t).or_insert(0) += 1;
        }
        for (t, c) in counts {
            if c == 1 {
                parts.push(format!("Z/{t}"));
            } else {
                parts.push(format!("(Z/{t})^{c}"));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// A graded abelian group with finitely many nonzero degrees.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GradedAbelianGroup {
    per_degree: BTreeMap<usize, AbGroup>,
}

impl GradedAbelianGroup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, degree: usize, group: AbGroup) {
        if group.is_zero() {
            self.per_degree.remove(&degree);
        } else {
            self.per_degree.insert(degree, group);
        }
    }

    pub fn degree(&self, d: usize) -> AbGroup {
        self.per_degree.get(&d).cloned().unwrap_or_default()
    }

    pub fn rank(&self, d: usize) -> usize {
        self.per_degree.get(&d).map_or(0, |g| g.free_rank)
    }

    pub fn degrees(&self) -> impl Iterator<Item = (&usize, &AbGroup)> {
        self.per_degree.iter()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.per_degree.keys().next_back().copied()
    }

    pub fn total_rank(&self) -> usize {
        self.per_degree.values().map(|g| g.free_rank).sum()
    }

    pub fn shifted(&self, by: usize) -> GradedAbelianGroup {
        let mut out = GradedAbelianGroup::new();
        for (d, g) in &self.per_degree {
            out.set(d + by, g.clone());
        }
        out
    }

    pub fn is_torsion_free(&self) -> bool {
        self.per_degree.values().all(|g| g.torsion.is_empty())
    }
}

fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut v: i64 = 1;
    for i in 0..k {
        v = v * (n - i) as i64 / (i + 1) as i64;
    }
    v
}

fn require_smooth_complete(f: &Fan) -> Result<(), CohomologyError> {
    if !fan::is_smooth_fan(f)? {
        return Err(CohomologyError::NotSmooth);
    }
    if !fan::is_complete(f)? {
        return Err(CohomologyError::NotComplete);
    }
    Ok(())
}

/// Betti numbers of the smooth complete toric variety of a fan, from the
/// cone counts: `b_{2k} = sum_i (-1)^{i-k} C(i,k) d_{n-i}`. Odd degrees
/// vanish and there is no torsion.
pub fn betti_numbers(f: &Fan) -> Result<GradedAbelianGroup, CohomologyError> {
    require_smooth_complete(f)?;
    let n = f.dim();
    let counts = f.cone_counts();
    let mut out = GradedAbelianGroup::new();
    for k in 0..=n {
        let mut beta: i64 = 0;
        for i in k..=n {
            let sign = if (i - k) % 2 == 0 { 1 } else { -1 };
            beta += sign * binom(i, k) * counts[n - i] as i64;
        }
        assert!(beta >= 0, "negative Betti number from cone counts");
        out.set(2 * k, AbGroup::free(beta as usize));
    }
    Ok(out)
}

/// A shelling of a complete smooth fan: the order of the maximal cones and
/// the "new face" each cone contributes.
#[derive(Debug, Clone)]
pub struct Shelling {
    /// Indices into `maximal_cones`, in shelling order.
    pub order: Vec<usize>,
    /// New face of each cone, aligned with `order`.
    pub new_faces: Vec<Cone>,
}

/// Whether a cone can be appended to the placed prefix of a shelling: it
/// must meet the union of the placed cones in a nonempty union of its own
/// facets.
fn extends_shelling(f: &Fan, placed: &[usize], candidate: usize) -> bool {
    let n = f.dim();
    let cone = &f.maximal_cones()[candidate];
    let mut shared: Vec<Vec<usize>> = Vec::new();
    for &cj in placed {
        let other = &f.maximal_cones()[cj];
        let common: Vec<usize> = cone
            .ray_indices()
            .iter()
            .copied()
            .filter(|i| other.contains_index(*i))
            .collect();
        shared.push(common);
    }
    let facets: Vec<&Vec<usize>> = shared.iter().filter(|s| s.len() + 1 == n).collect();
    if facets.is_empty() {
        return false;
    }
    shared.iter().all(|face| {
        facets
            .iter()
            .any(|facet| face.iter().all(|i| facet.contains(i)))
    })
}

/// Checks Fulton's shelling property: each cone past the first meets the
/// union of its predecessors in a nonempty union of its facets.
pub fn is_valid_shelling(f: &Fan, order: &[usize]) -> bool {
    if order.len() != f.maximal_cones().len() {
        return false;
    }
    order
        .iter()
        .enumerate()
        .skip(1)
        .all(|(pos, &ci)| extends_shelling(f, &order[..pos], ci))
}

fn bb_new_faces(f: &Fan, v: &IntVector) -> Result<Option<Vec<Cone>>, CohomologyError> {
    let n = f.dim();
    let mut faces = Vec::with_capacity(f.maximal_cones().len());
    for c in f.maximal_cones() {
        let r = f.cone_matrix(c);
        let r_inv = solve(&r, &IntMatrix::identity(n)).ok_or(CohomologyError::NotSmooth)?;
        // rows of r_inv form the dual basis of the cone's rays
        let mut negative = Vec::new();
        for (pos, &i) in c.ray_indices().iter().enumerate() {
            let pairing: BigInt = (0..n).map(|j| r_inv.at(pos, j) * v.entry(j)).sum();
            if pairing.is_zero() {
                return Ok(None); // not generic
            }
            if pairing.is_negative() {
                negative.push(i);
            }
        }
        faces.push(Cone::new(negative));
    }
    Ok(Some(faces))
}

/// Orders the maximal cones compatibly with the flow of the generic
/// vector: every shared facet is a "down" facet of exactly one of its two
/// cones, and each cone must appear after the neighbors across its down
/// facets. Kahn's algorithm with a shelling-validity filter; `None` on a
/// dead end (then another generic vector is tried).
fn flow_order(f: &Fan, faces: &[Cone]) -> Option<Vec<usize>> {
    let m = f.maximal_cones().len();
    let mut facet_sides: BTreeMap<Vec<usize>, Vec<(usize, bool)>> = BTreeMap::new();
    for (ci, cone) in f.maximal_cones().iter().enumerate() {
        for &dropped in cone.ray_indices() {
            let facet: Vec<usize> = cone
                .ray_indices()
                .iter()
                .copied()
                .filter(|&i| i != dropped)
                .collect();
            let is_down = faces[ci].contains_index(dropped);
            facet_sides.entry(facet).or_default().push((ci, is_down));
        }
    }
    let mut indegree = vec![0usize; m];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); m];
    for sides in facet_sides.values() {
        let [(c1, d1), (c2, d2)] = sides.as_slice() else {
            return None;
        };
        if d1 == d2 {
            return None; // flow direction inconsistent; vector unusable
        }
        let (up, down) = if *d1 { (*c2, *c1) } else { (*c1, *c2) };
        outgoing[up].push(down);
        indegree[down] += 1;
    }
    let mut available: BTreeSet<(Vec<usize>, usize)> = (0..m)
        .filter(|&i| indegree[i] == 0)
        .map(|i| (f.maximal_cones()[i].ray_indices().to_vec(), i))
        .collect();
    let mut order: Vec<usize> = Vec::with_capacity(m);
    while order.len() < m {
        let next = available
            .iter()
            .find(|(_, i)| order.is_empty() || extends_shelling(f, &order, *i))
            .cloned()?;
        available.remove(&next);
        let (_, ci) = next;
        order.push(ci);
        for &succ in &outgoing[ci] {
            indegree[succ] -= 1;
            if indegree[succ] == 0 {
                available.insert((f.maximal_cones()[succ].ray_indices().to_vec(), succ));
            }
        }
    }
    Some(order)
}

/// A shelling of the fan, built from a generic one-parameter subgroup and
/// verified combinatorially. The new faces index the cohomology basis.
pub fn shelling(f: &Fan) -> Result<Shelling, CohomologyError> {
    require_smooth_complete(f)?;
    let n = f.dim();
    if n == 0 {
        return Ok(Shelling {
            order: vec![0],
            new_faces: vec![Cone::empty()],
        });
    }
    let betti = betti_numbers(f)?;
    for t in [2i64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43] {
        let v = IntVector::new((0..n).map(|i| BigInt::from(t).pow(i as u32)).collect());
        let Some(faces) = bb_new_faces(f, &v)? else {
            continue;
        };
        let Some(order) = flow_order(f, &faces) else {
            continue;
        };
        // degree counts must reproduce the Betti numbers
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for face in &faces {
            *counts.entry(2 * face.len()).or_insert(0) += 1;
        }
        let ok =
            (0..=n).all(|k| betti.rank(2 * k) == counts.get(&(2 * k)).copied().unwrap_or(0));
        if !ok {
            continue;
        }
        let new_faces = order.iter().map(|&i| faces[i].clone()).collect();
        return Ok(Shelling { order, new_faces });
    }
    Err(CohomologyError::NoShelling(
        "no generic vector in the candidate family produced a shelling".into(),
    ))
}

/// Maximal cones of the fan in shelling order.
pub fn shelling_order(f: &Fan) -> Result<Vec<usize>, CohomologyError> {
    shelling(f).map(|s| s.order)
}

/// One basis element of the cohomology of a smooth complete toric variety:
/// the class of the orbit closure of `cone_rays`, contributed by the
/// shelling cone `source_cone`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisLabel {
    pub cone_rays: Vec<usize>,
    pub source_cone: Vec<usize>,
    /// 1-based position in the shelling.
    pub ordinal: usize,
}

impl BasisLabel {
    pub fn label(&self, decoration: &str) -> String {
        format!("tau_{}^({})", self.ordinal, decoration)
    }
}

/// Cohomology basis of a smooth complete toric variety, degree by degree.
#[derive(Debug, Clone, Default)]
pub struct CohomologyBasis {
    per_degree: BTreeMap<usize, Vec<BasisLabel>>,
}

impl CohomologyBasis {
    pub fn degree(&self, d: usize) -> &[BasisLabel] {
        self.per_degree.get(&d).map_or(&[], |v| v.as_slice())
    }

    pub fn degrees(&self) -> impl Iterator<Item = (&usize, &Vec<BasisLabel>)> {
        self.per_degree.iter()
    }

    pub fn total(&self) -> usize {
        self.per_degree.values().map(|v| v.len()).sum()
    }
}

/// Shelling basis: one orbit-closure class per maximal cone, in degree
/// twice the dimension of its new face.
pub fn cohomology_basis(f: &Fan) -> Result<CohomologyBasis, CohomologyError> {
    let shelling = shelling(f)?;
    let mut per_degree: BTreeMap<usize, Vec<BasisLabel>> = BTreeMap::new();
    for (pos, (&cone_idx, face)) in shelling.order.iter().zip(&shelling.new_faces).enumerate() {
        per_degree.entry(2 * face.len()).or_default().push(BasisLabel {
            cone_rays: face.ray_indices().to_vec(),
            source_cone: f.maximal_cones()[cone_idx].ray_indices().to_vec(),
            ordinal: pos + 1,
        });
    }
    Ok(CohomologyBasis { per_degree })
}

/// Degree of a product of toric divisors on a smooth complete fan,
/// computed by transversality moves and linear-equivalence rewriting.
///
/// The multiset must have exactly `dim` entries. Repeated rays are
/// rewritten through a character that pairs to -1 with the repeated ray
/// and to 0 with the other rays of the current cone; the lowest pending
/// ray index is always eliminated first.
pub fn intersection_number(f: &Fan, divisors: &[usize]) -> Result<BigInt, CohomologyError> {
    require_smooth_complete(f)?;
    let n = f.dim();
    if divisors.len() != n {
        return Err(CohomologyError::DegreeMismatch {
            expected: n,
            found: divisors.len(),
        });
    }
    for &d in divisors {
        if d >= f.rays().len() {
            return Err(FanError::UnknownRayIndex(d).into());
        }
    }
    let mut pending = divisors.to_vec();
    pending.sort_unstable();
    // terms: current orbit-closure cone -> integer coefficient
    let mut terms: BTreeMap<Vec<usize>, BigInt> = BTreeMap::new();
    terms.insert(Vec::new(), BigInt::one());
    for &ray in &pending {
        let mut next: BTreeMap<Vec<usize>, BigInt> = BTreeMap::new();
        for (cone_rays, coeff) in terms {
            let cone = Cone::new(cone_rays.clone());
            if !cone.contains_index(ray) {
                let extended = Cone::new(
                    cone_rays
                        .iter()
                        .copied()
                        .chain(std::iter::once(ray))
                        .collect(),
                );
                if f.has_cone(&extended) {
                    *next.entry(extended.ray_indices().to_vec()).or_default() += coeff;
                }
                continue;
            }
            // self-intersection: rewrite D_ray on V(cone) through div(chi^m)
            let rows: Vec<Vec<BigInt>> = cone_rays
                .iter()
                .map(|&i| f.ray(i).entries().to_vec())
                .collect();
            let a = IntMatrix::from_rows(rows);
            let mut b = IntMatrix::zeros(cone_rays.len(), 1);
            let pos = cone_rays.iter().position(|&i| i == ray).unwrap();
            b.set(pos, 0, -BigInt::one());
            let m = solve(&a, &b).ok_or_else(|| {
                CohomologyError::Internal("smooth cone admits no dual character".into())
            })?;
            let m_vec = m.column(0);
            for (rho, ray_vec) in f.rays().iter().enumerate() {
                if cone.contains_index(rho) {
                    continue;
                }
                let pairing = m_vec.dot(ray_vec);
                if pairing.is_zero() {
                    continue;
                }
                let extended = Cone::new(
                    cone_rays
                        .iter()
                        .copied()
                        .chain(std::iter::once(rho))
                        .collect(),
                );
                if f.has_cone(&extended) {
                    *next.entry(extended.ray_indices().to_vec()).or_default() +=
                        &coeff * pairing;
                }
            }
        }
        terms = next;
    }
    let mut total = BigInt::zero();
    for (cone_rays, coeff) in terms {
        debug_assert_eq!(cone_rays.len(), n);
        total += coeff;
    }
    Ok(total)
}

/// Degree of the product of two orbit-closure classes of complementary
/// dimension: the product of all their rays' divisors.
fn class_pairing(f: &Fan, a: &[usize], b: &[usize]) -> Result<BigInt, CohomologyError> {
    let mut divisors = a.to_vec();
    divisors.extend_from_slice(b);
    intersection_number(f, &divisors)
}

/// Matrix of the Gysin pushforward `H^d(V(source)) -> H^{d+2s}(V(target))`
/// along the inclusion of orbit closures, `s` the codimension difference,
/// in the shelling bases of the two star fans. Entries are found by
/// pairing with the complementary-degree basis of the target.
pub fn gysin_pushforward_matrix(
    f: &Fan,
    source: &Cone,
    target: &Cone,
    degree: usize,
) -> Result<IntegerLinearMap, CohomologyError> {
    if !target.is_face_of(source) {
        return Err(CohomologyError::NotAFace(target.ray_indices().to_vec()));
    }
    if !fan::is_smooth_fan(f)? {
        return Err(CohomologyError::NotSmooth);
    }
    let shift = 2 * (source.len() - target.len());
    let (target_star, target_map) = fan::star_fan_with_map(f, target)?;
    let (source_star, source_map) = fan::star_fan_with_map(f, source)?;
    let source_basis = cohomology_basis(&source_star)?;
    let target_basis = cohomology_basis(&target_star)?;
    let n_target = target_star.dim();
    let target_degree = degree + shift;
    let domain = source_basis.degree(degree);
    let domain_labels: Vec<String> = domain
        .iter()
        .map(|l| l.label(&decoration(source.ray_indices())))
        .collect();
    if target_degree % 2 != 0 || target_degree / 2 > n_target {
        let matrix = IntMatrix::zeros(0, domain.len());
        return Ok(IntegerLinearMap::new(matrix, domain_labels, Vec::new()));
    }
    let codomain = target_basis.degree(target_degree);
    let dual = target_basis.degree(2 * n_target - target_degree);
    if codomain.len() != dual.len() {
        return Err(CohomologyError::Internal(
            "Poincare-dual basis sizes disagree".into(),
        ));
    }
    // translate a source-star basis cone into rays of the target star
    let inverse_source: BTreeMap<usize, usize> =
        source_map.iter().map(|(&fr, &sr)| (sr, fr)).collect();
    let mut source_in_target: Vec<Vec<usize>> = Vec::with_capacity(domain.len());
    for label in domain {
        let mut f_rays: Vec<usize> = label
            .cone_rays
            .iter()
            .map(|sr| {
                inverse_source
                    .get(sr)
                    .copied()
                    .ok_or_else(|| CohomologyError::Internal("untracked star ray".into()))
            })
            .collect::<Result<_, _>>()?;
        f_rays.extend(source.ray_indices().iter().copied());
        let image: Vec<usize> = f_rays
            .iter()
            .filter(|i| !target.contains_index(**i))
            .map(|i| {
                target_map.get(i).copied().ok_or_else(|| {
                    CohomologyError::Internal("ray missing from target star".into())
                })
            })
            .collect::<Result<_, _>>()?;
        source_in_target.push(image);
    }
    let b = codomain.len();
    let mut pairing = IntMatrix::zeros(b, b);
    for (k, dual_label) in dual.iter().enumerate() {
        for (j, target_label) in codomain.iter().enumerate() {
            pairing.set(
                k,
                j,
                class_pairing(&target_star, &target_label.cone_rays, &dual_label.cone_rays)?,
            );
        }
    }
    let mut pushed = IntMatrix::zeros(b, domain.len());
    for (k, dual_label) in dual.iter().enumerate() {
        for (i, image) in source_in_target.iter().enumerate() {
            pushed.set(
                k,
                i,
                class_pairing(&target_star, image, &dual_label.cone_rays)?,
            );
        }
    }
    let matrix = if b == 0 {
        IntMatrix::zeros(0, domain.len())
    } else {
        solve(&pairing, &pushed).ok_or_else(|| {
            CohomologyError::Internal("intersection pairing is not unimodular".into())
        })?
    };
    Ok(IntegerLinearMap::new(
        matrix,
        domain_labels,
        codomain
            .iter()
            .map(|l| l.label(&decoration(target.ray_indices())))
            .collect(),
    ))
}

fn decoration(rays: &[usize]) -> String {
    rays.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Cohomology of the pair `(X, X \ V(c))`: the cohomology of the orbit
/// closure shifted up by twice the cone dimension (the Thom isomorphism).
pub fn supported_cohomology(f: &Fan, c: &Cone) -> Result<GradedAbelianGroup, CohomologyError> {
    let star = fan::star_fan(f, c)?;
    if !fan::is_complete(&star)? {
        return Err(CohomologyError::NotComplete);
    }
    Ok(betti_numbers(&star)?.shifted(2 * c.len()))
}

/// The integral cohomology ring of `(Z/p)^2` presented as
/// `Z[x1,x2,y]/(y^2, p x1, p x2, p y)` with `deg x_i = 2`, `deg y = 3`.
#[derive(Debug, Clone)]
pub struct GroupCohomologyRing {
    pub prime: u64,
    pub generator_degrees: [(char, usize); 3],
}

/// Monomial `x1^a x2^b y^eps` of the ring.
pub type RingMonomial = (usize, usize, bool);

impl GroupCohomologyRing {
    pub fn new(prime: u64) -> Self {
        GroupCohomologyRing {
            prime,
            generator_degrees: [('x', 2), ('x', 2), ('y', 3)],
        }
    }

    pub fn relations(&self) -> String {
        let p = self.prime;
        format!("(y^2, {p}*x1, {p}*x2, {p}*y)")
    }

    /// Nonunit monomials of the given positive degree, in a fixed order.
    pub fn monomials(&self, degree: usize) -> Vec<RingMonomial> {
        let mut out = Vec::new();
        for eps in [false, true] {
            let rest = match degree.checked_sub(if eps { 3 } else { 0 }) {
                Some(r) => r,
                None => continue,
            };
            if rest % 2 != 0 {
                continue;
            }
            let half = rest / 2;
            for b in 0..=half {
                let a = half - b;
                if a == 0 && b == 0 && !eps {
                    continue; // the unit is tracked separately in degree 0
                }
                out.push((a, b, eps));
            }
        }
        out
    }

    pub fn monomial_label(m: &RingMonomial) -> String {
        let (a, b, eps) = *m;
        let mut parts = Vec::new();
        if a > 0 {
            parts.push(if a == 1 { "x1".into() } else { format!("x1^{a}") });
        }
        if b > 0 {
            parts.push(if b == 1 { "x2".into() } else { format!("x2^{b}") });
        }
        if eps {
            parts.push("y".into());
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    /// The graded group in one degree: `Z` in degree 0, elementary abelian
    /// p-groups elsewhere.
    pub fn graded_piece(&self, degree: usize) -> AbGroup {
        if degree == 0 {
            return AbGroup::free(1);
        }
        let count = self.monomials(degree).len();
        AbGroup {
            free_rank: 0,
            torsion: vec![BigInt::from(self.prime); count],
        }
    }
}

/// The cohomology ring of `(Z/p)^2` together with its graded pieces up to
/// the requested degree.
pub fn group_cohomology(p: u64, max_degree: usize) -> (GroupCohomologyRing, GradedAbelianGroup) {
    let ring = GroupCohomologyRing::new(p);
    let mut graded = GradedAbelianGroup::new();
    for d in 0..=max_degree {
        graded.set(d, ring.graded_piece(d));
    }
    (ring, graded)
}

/// Matrix of multiplication by `y` from the monomial basis in
/// `source_degree` to the one in `source_degree + 3`. Monomials already
/// containing `y` map to zero; in degree 0 the unit maps onto `y`.
pub fn multiplication_by_y(p: u64, source_degree: usize) -> IntegerLinearMap {
    let ring = GroupCohomologyRing::new(p);
    let domain: Vec<RingMonomial> = if source_degree == 0 {
        vec![(0, 0, false)]
    } else {
        ring.monomials(source_degree)
    };
    let codomain = ring.monomials(source_degree + 3);
    let mut matrix = IntMatrix::zeros(codomain.len(), domain.len());
    for (j, &(a, b, eps)) in domain.iter().enumerate() {
        if eps {
            continue; // y^2 = 0
        }
        let image = (a, b, true);
        if let Some(i) = codomain.iter().position(|m| *m == image) {
            matrix.set(i, j, BigInt::one());
        }
    }
    IntegerLinearMap::new(
        matrix,
        domain.iter().map(GroupCohomologyRing::monomial_label).collect(),
        codomain
            .iter()
            .map(GroupCohomologyRing::monomial_label)
            .collect(),
    )
}
