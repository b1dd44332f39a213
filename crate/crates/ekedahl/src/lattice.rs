//! Exact integer linear algebra: Hermite and Smith normal forms, integer
//! kernels and linear solves over arbitrary-precision integers.
//!
//! Everything in this module is pure and allocation-based; intermediate
//! entries of a normal-form computation can exceed machine words even for
//! small inputs, so all arithmetic is done on `BigInt`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error("zero vector has no primitivity")]
    ZeroVector,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("csv parse error at line {line}, field {field}: {message}")]
    Csv {
        line: usize,
        field: usize,
        message: String,
    },
}

/// An integer vector of fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntVector {
    entries: Vec<BigInt>,
}

impl IntVector {
    pub fn new(entries: Vec<BigInt>) -> Self {
        assert!(!entries.is_empty(), "vectors have positive dimension");
        IntVector { entries }
    }

    pub fn from_i64(entries: &[i64]) -> Self {
        Self::new(entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![BigInt::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &BigInt {
        &self.entries[i]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn dot(&self, other: &IntVector) -> BigInt {
        assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn add(&self, other: &IntVector) -> IntVector {
        assert_eq!(self.dim(), other.dim());
        IntVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, c: &BigInt) -> IntVector {
        IntVector::new(self.entries.iter().map(|e| e * c).collect())
    }

    /// Gcd of the entries; zero for the zero vector.
    pub fn content(&self) -> BigInt {
        self.entries
            .iter()
            .fold(BigInt::zero(), |g, e| g.gcd(e))
    }

    /// Divides out the content, keeping the direction.
    pub fn primitivized(&self) -> IntVector {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            return self.clone();
        }
        IntVector::new(self.entries.iter().map(|e| e / &c).collect())
    }
}

impl fmt::Display for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// `true` iff the gcd of the entries is 1.
pub fn is_primitive(v: &IntVector) -> Result<bool, LatticeError> {
    if v.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    Ok(v.content().is_one())
}

/// A dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&e| BigInt::from(e)).collect())
                .collect(),
        )
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[IntVector]) -> Self {
        assert!(!cols.is_empty());
        let dim = cols[0].dim();
        let mut m = Self::zeros(dim, cols.len());
        for (j, v) in cols.iter().enumerate() {
            assert_eq!(v.dim(), dim);
            for i in 0..dim {
                m.set(i, j, v.entry(i).clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &BigInt {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> IntVector {
        IntVector::new(self.entries[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn column(&self, c: usize) -> IntVector {
        IntVector::new((0..self.rows).map(|r| self.at(r, c).clone()).collect())
    }

    pub fn columns(&self) -> Vec<IntVector> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.at(r, c).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let add = a * other.at(k, c);
                    let cur = out.at(r, c) + add;
                    out.set(r, c, cur);
                }
            }
        }
        out
    }

    pub fn mul_vector(&self, v: &IntVector) -> IntVector {
        assert_eq!(self.cols, v.dim());
        IntVector::new(
            (0..self.rows)
                .map(|r| {
                    (0..self.cols)
                        .map(|c| self.at(r, c) * v.entry(c))
                        .sum()
                })
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[a] += q * row[b]
    fn add_row_multiple(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let add = q * self.at(b, c);
            let v = self.at(a, c) + add;
            self.set(a, c, v);
        }
    }

    /// col[a] += q * col[b]
    fn add_col_multiple(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let add = q * self.at(r, b);
            let v = self.at(r, a) + add;
            self.set(r, a, v);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self.at(r, c);
            self.set(r, c, v);
        }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n)
            .map(|r| (0..n).map(|c| self.at(r, c).clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut denom = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                    a[i][j] = &num / &denom;
                }
                a[i][k] = BigInt::zero();
            }
            denom = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    /// Rank over the rationals (equivalently over Z after saturation).
    pub fn rank(&self) -> usize {
        let (h, _) = hermite_form(self);
        (0..h.rows)
            .filter(|&r| (0..h.cols).any(|c| !h.at(r, c).is_zero()))
            .count()
    }

    /// Plain CSV: one row per line, comma-separated integers, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols).map(|c| self.at(r, c).to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<IntMatrix, LatticeError> {
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (fld, field) in line.split(',').enumerate() {
                let v = field.trim().parse::<BigInt>().map_err(|e| LatticeError::Csv {
                    line: ln + 1,
                    field: fld + 1,
                    message: e.to_string(),
                })?;
                row.push(v);
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(LatticeError::Csv {
                        line: ln + 1,
                        field: 1,
                        message: format!(
                            "expected {} fields, found {}",
                            first.len(),
                            row.len()
                        ),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(LatticeError::Csv {
                line: 1,
                field: 1,
                message: "empty matrix".into(),
            });
        }
        Ok(IntMatrix::from_rows(rows))
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// An integer matrix together with basis labels on both sides.
///
/// Columns are indexed by the domain basis, rows by the codomain basis; the
/// matrix acts on column vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerLinearMap {
    pub matrix: IntMatrix,
    pub domain_labels: Vec<String>,
    pub codomain_labels: Vec<String>,
}

impl IntegerLinearMap {
    pub fn new(
        matrix: IntMatrix,
        domain_labels: Vec<String>,
        codomain_labels: Vec<String>,
    ) -> Self {
        assert_eq!(matrix.cols(), domain_labels.len());
        assert_eq!(matrix.rows(), codomain_labels.len());
        IntegerLinearMap {
            matrix,
            domain_labels,
            codomain_labels,
        }
    }

    /// CSV with a header line of domain labels; each following line is a
    /// codomain label followed by the matrix row.
    pub fn to_labeled_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.domain_labels.join(","));
        out.push('\n');
        for r in 0..self.matrix.rows() {
            let mut line = vec![self.codomain_labels[r].clone()];
            line.extend((0..self.matrix.cols()).map(|c| self.matrix.at(r, c).to_string()));
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Result of a Smith normal form computation: `left * m * right` is the
/// diagonal matrix described by `diagonal`, and both transforms have
/// determinant ±1.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub left_unimodular: IntMatrix,
    pub right_unimodular: IntMatrix,
}

impl SmithForm {
    /// Number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }

    /// Product of the nonzero diagonal entries (1 for the zero diagonal).
    pub fn nonzero_product(&self) -> BigInt {
        self.diagonal
            .iter()
            .filter(|d| !d.is_zero())
            .product()
    }
}

/// Row-style Hermite normal form.
///
/// Returns `(h, u)` with `u` unimodular and `u * m = h`; `h` is in row
/// echelon form with positive pivots and entries above each pivot reduced
/// into `[0, pivot)`.
pub fn hermite_form(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let mut pivot_row = 0;
    for col in 0..h.cols() {
        if pivot_row >= h.rows() {
            break;
        }
        loop {
            // smallest nonzero entry in this column at or below pivot_row
            let mut best: Option<usize> = None;
            for r in pivot_row..h.rows() {
                if h.at(r, col).is_zero() {
                    continue;
                }
                if best.is_none_or(|b| h.at(r, col).abs() < h.at(b, col).abs()) {
                    best = Some(r);
                }
            }
            let Some(b) = best else { break };
            h.swap_rows(pivot_row, b);
            u.swap_rows(pivot_row, b);
            let mut clean = true;
            for r in pivot_row + 1..h.rows() {
                if h.at(r, col).is_zero() {
                    continue;
                }
                let q = -(h.at(r, col) / h.at(pivot_row, col));
                h.add_row_multiple(r, pivot_row, &q);
                u.add_row_multiple(r, pivot_row, &q);
                if !h.at(r, col).is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if h.at(pivot_row, col).is_zero() {
            continue;
        }
        if h.at(pivot_row, col).is_negative() {
            h.negate_row(pivot_row);
            u.negate_row(pivot_row);
        }
        for r in 0..pivot_row {
            let q = -h.at(r, col).div_floor(h.at(pivot_row, col));
            h.add_row_multiple(r, pivot_row, &q);
            u.add_row_multiple(r, pivot_row, &q);
        }
        pivot_row += 1;
    }
    (h, u)
}

/// Smith normal form with both unimodular transforms.
pub fn smith_form(m: &IntMatrix) -> SmithForm {
    let mut a = m.clone();
    let mut left = IntMatrix::identity(m.rows());
    let mut right = IntMatrix::identity(m.cols());
    let bound = m.rows().min(m.cols());
    let mut t = 0;
    while t < bound {
        // locate the smallest nonzero entry of the trailing block
        let mut best: Option<(usize, usize)> = None;
        for r in t..a.rows() {
            for c in t..a.cols() {
                if a.at(r, c).is_zero() {
                    continue;
                }
                if best.is_none_or(|(br, bc)| a.at(r, c).abs() < a.at(br, bc).abs()) {
                    best = Some((r, c));
                }
            }
        }
        let Some((br, bc)) = best else { break };
        a.swap_rows(t, br);
        left.swap_rows(t, br);
        a.swap_cols(t, bc);
        right.swap_cols(t, bc);

        loop {
            let mut dirty = false;
            for r in t + 1..a.rows() {
                if a.at(r, t).is_zero() {
                    continue;
                }
                let q = -(a.at(r, t) / a.at(t, t));
                a.add_row_multiple(r, t, &q);
                left.add_row_multiple(r, t, &q);
                if !a.at(r, t).is_zero() {
                    // remainder is strictly smaller; promote it to the pivot
                    a.swap_rows(t, r);
                    left.swap_rows(t, r);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            for c in t + 1..a.cols() {
                if a.at(t, c).is_zero() {
                    continue;
                }
                let q = -(a.at(t, c) / a.at(t, t));
                a.add_col_multiple(c, t, &q);
                right.add_col_multiple(c, t, &q);
                if !a.at(t, c).is_zero() {
                    a.swap_cols(t, c);
                    right.swap_cols(t, c);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // enforce divisibility of the trailing block by the pivot
            let mut fixed = true;
            'scan: for r in t + 1..a.rows() {
                for c in t + 1..a.cols() {
                    if !(a.at(r, c) % a.at(t, t)).is_zero() {
                        a.add_row_multiple(t, r, &BigInt::one());
                        left.add_row_multiple(t, r, &BigInt::one());
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        if a.at(t, t).is_negative() {
            a.negate_row(t);
            left.negate_row(t);
        }
        t += 1;
    }
    let diagonal: Vec<BigInt> = (0..bound).map(|i| a.at(i, i).clone()).collect();
    SmithForm {
        diagonal,
        left_unimodular: left,
        right_unimodular: right,
    }
}

/// Basis of the integer kernel `{v : m v = 0}` as matrix columns.
///
/// The basis spans a saturated sublattice and is returned in Hermite-reduced
/// form, so the output is deterministic. A full-rank map yields a matrix
/// with zero columns (`cols x 0`).
pub fn integer_kernel(m: &IntMatrix) -> IntMatrix {
    let snf = smith_form(m);
    let bound = m.rows().min(m.cols());
    let mut cols: Vec<IntVector> = Vec::new();
    for j in 0..m.cols() {
        let zero_diag = j >= bound || snf.diagonal[j].is_zero();
        if zero_diag {
            cols.push(snf.right_unimodular.column(j));
        }
    }
    if cols.is_empty() {
        return IntMatrix::zeros(m.cols(), 0);
    }
    // canonical form: Hermite-reduce the basis viewed as rows
    let rows = IntMatrix::from_rows(cols.iter().map(|v| v.entries().to_vec()).collect());
    let (h, _) = hermite_form(&rows);
    let kept: Vec<Vec<BigInt>> = (0..h.rows())
        .filter(|&r| (0..h.cols()).any(|c| !h.at(r, c).is_zero()))
        .map(|r| h.row(r).entries().to_vec())
        .collect();
    IntMatrix::from_rows(kept).transpose()
}

/// One integer solution `x` of `a x = b`, if any, chosen deterministically
/// (free coordinates are zero in Hermite coordinates). `b` may have several
/// columns; they are solved jointly.
pub fn solve(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    assert_eq!(a.rows(), b.rows(), "a and b need matching row counts");
    // column-style HNF by transposition: a * u^T = h^T
    let (h, u) = hermite_form(&a.transpose());
    let hc = h.transpose();
    let ut = u.transpose();
    let n = a.cols();
    let mut y = IntMatrix::zeros(n, b.cols());
    for bc in 0..b.cols() {
        let mut residual: Vec<BigInt> = (0..b.rows()).map(|r| b.at(r, bc).clone()).collect();
        for j in 0..n {
            let pivot_row = (0..hc.rows()).find(|&r| !hc.at(r, j).is_zero());
            let Some(p) = pivot_row else { continue };
            let (q, rem) = residual[p].div_rem(hc.at(p, j));
            if !rem.is_zero() {
                return None;
            }
            for r in 0..hc.rows() {
                let sub = &q * hc.at(r, j);
                residual[r] = &residual[r] - sub;
            }
            y.set(j, bc, q);
        }
        if residual.iter().any(|v| !v.is_zero()) {
            return None;
        }
    }
    Some(ut.mul(&y))
}

/// Splits a positive integer into its prime-power factors, e.g. 12 -> [4, 3].
///
/// Torsion coefficients are kept in this canonical form throughout.
pub fn prime_power_decomposition(n: &BigInt) -> Vec<BigInt> {
    assert!(n > &BigInt::one(), "only proper torsion orders factor");
    let mut out = Vec::new();
    let mut rest = n.clone();
    let mut p = BigInt::from(2);
    while &p * &p <= rest {
        if (&rest % &p).is_zero() {
            let mut q = BigInt::one();
            while (&rest % &p).is_zero() {
                rest /= &p;
                q *= &p;
            }
            out.push(q);
        }
        p += 1;
    }
    if rest > BigInt::one() {
        out.push(rest);
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> IntMatrix {
        IntMatrix::from_rows(
            (0..rows)
                .map(|_| (0..cols).map(|_| big(rng.gen_range(-bound..=bound))).collect())
                .collect(),
        )
    }

    fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> IntMatrix {
        let mut m = IntMatrix::identity(n);
        for _ in 0..3 * n {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let q = big(rng.gen_range(-3..=3));
            m.add_row_multiple(a, b, &q);
        }
        m
    }

    /// gcd of all k x k minors, by brute force. The independent oracle for
    /// the Smith diagonal: the k-th determinantal divisor equals the product
    /// of the first k diagonal entries.
    fn determinantal_divisor(m: &IntMatrix, k: usize) -> BigInt {
        use itertools::Itertools;
        let mut g = BigInt::zero();
        for rows in (0..m.rows()).combinations(k) {
            for cols in (0..m.cols()).combinations(k) {
                let sub = IntMatrix::from_rows(
                    rows.iter()
                        .map(|&r| cols.iter().map(|&c| m.at(r, c).clone()).collect())
                        .collect(),
                );
                g = g.gcd(&sub.det());
            }
        }
        g
    }

    #[test]
    fn hermite_identity_is_fixed() {
        let id = IntMatrix::identity(3);
        let (h, u) = hermite_form(&id);
        assert_eq!(h, id);
        assert_eq!(u, id);
    }

    #[test]
    fn hermite_small_example() {
        let m = IntMatrix::from_i64_rows(&[&[2, 4], &[1, 1]]);
        let (h, u) = hermite_form(&m);
        assert_eq!(u.mul(&m), h);
        assert_eq!(h.at(0, 0), &big(1));
        assert_eq!(h.at(1, 1), &big(2));
        assert_eq!(h.at(1, 0), &big(0));
        assert_eq!(u.det().abs(), big(1));
    }

    #[test]
    fn hermite_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4, 4, 9);
            let (h, _) = hermite_form(&m);
            let (h2, _) = hermite_form(&h);
            assert_eq!(h, h2);
        }
    }

    #[test]
    fn hermite_preserves_row_space() {
        // mutual integer solvability: each row of m is an integer combination
        // of the rows of h and conversely
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 4, 4, 9);
            let (h, _) = hermite_form(&m);
            assert!(solve(&h.transpose(), &m.transpose()).is_some());
            assert!(solve(&m.transpose(), &h.transpose()).is_some());
        }
    }

    #[test]
    fn smith_of_diag_2_3() {
        let m = IntMatrix::from_i64_rows(&[&[2, 0], &[0, 3]]);
        let snf = smith_form(&m);
        assert_eq!(snf.diagonal, vec![big(1), big(6)]);
    }

    #[test]
    fn smith_of_zero_matrix() {
        let m = IntMatrix::zeros(3, 2);
        let snf = smith_form(&m);
        assert_eq!(snf.diagonal, vec![big(0), big(0)]);
    }

    #[test]
    fn smith_transforms_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 4, 4, 9);
            let snf = smith_form(&m);
            assert_eq!(snf.left_unimodular.det().abs(), big(1));
            assert_eq!(snf.right_unimodular.det().abs(), big(1));
            let d = snf.left_unimodular.mul(&m).mul(&snf.right_unimodular);
            for r in 0..4 {
                for c in 0..4 {
                    let expect = if r == c { snf.diagonal[r].clone() } else { big(0) };
                    assert_eq!(d.at(r, c), &expect);
                }
            }
            // divisibility chain
            for i in 1..4 {
                if !snf.diagonal[i].is_zero() {
                    assert!((snf.diagonal[i].clone() % &snf.diagonal[i - 1]).is_zero());
                }
            }
        }
    }

    #[test]
    fn smith_matches_determinantal_divisors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 4, 4, 9);
            let snf = smith_form(&m);
            let mut prod = big(1);
            for k in 1..=4 {
                prod = (0..k).map(|i| snf.diagonal[i].clone()).product();
                assert_eq!(determinantal_divisor(&m, k), prod, "k = {k} of\n{m}");
            }
            let _ = prod;
        }
    }

    #[test]
    fn smith_diagonal_is_a_unimodular_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4, 4, 9);
            let a = random_unimodular(&mut rng, 4);
            let b = random_unimodular(&mut rng, 4);
            let m2 = a.mul(&m).mul(&b);
            assert_eq!(smith_form(&m).diagonal, smith_form(&m2).diagonal);
        }
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        let k = integer_kernel(&IntMatrix::identity(3));
        assert_eq!(k.cols(), 0);
        assert_eq!(k.rows(), 3);
    }

    #[test]
    fn kernel_of_sum_map() {
        let m = IntMatrix::from_i64_rows(&[&[1, 1]]);
        let k = integer_kernel(&m);
        assert_eq!(k.cols(), 1);
        let v = k.column(0);
        let w = IntVector::from_i64(&[1, -1]);
        assert!(v == w || v == w.scale(&big(-1)));
    }

    #[test]
    fn kernel_annihilates_and_is_saturated() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 3, 5, 9);
            let k = integer_kernel(&m);
            assert!(m.mul(&k).is_zero());
            assert_eq!(k.cols(), 5 - m.rank());
            if k.cols() > 0 {
                assert_eq!(k.rank(), k.cols());
                // saturation: the Smith diagonal of the basis matrix is all ones
                let snf = smith_form(&k);
                assert!(snf.diagonal.iter().all(|d| d.is_one()));
            }
        }
    }

    #[test]
    fn kernel_is_deterministic() {
        let m = IntMatrix::from_i64_rows(&[&[2, -4, 6], &[1, -2, 3]]);
        assert_eq!(integer_kernel(&m), integer_kernel(&m));
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&IntVector::from_i64(&[1, 2, 3, 4])).unwrap());
        assert!(!is_primitive(&IntVector::from_i64(&[2, 4])).unwrap());
        assert!(!is_primitive(&IntVector::from_i64(&[0, 0, 5])).unwrap());
        assert!(is_primitive(&IntVector::from_i64(&[0, 0])).is_err());
    }

    #[test]
    fn solve_finds_integer_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..30 {
            let a = random_matrix(&mut rng, 3, 4, 5);
            let x = random_matrix(&mut rng, 4, 2, 5);
            let b = a.mul(&x);
            let got = solve(&a, &b).expect("constructed system is solvable");
            assert_eq!(a.mul(&got), b);
        }
    }

    #[test]
    fn solve_rejects_non_solvable() {
        let a = IntMatrix::from_i64_rows(&[&[2, 0], &[0, 2]]);
        let b = IntMatrix::from_i64_rows(&[&[1], &[0]]);
        assert!(solve(&a, &b).is_none());
    }

    #[test]
    fn csv_round_trip() {
        let m = IntMatrix::from_i64_rows(&[&[1, -2, 3], &[0, 5, -6]]);
        let text = m.to_csv();
        assert_eq!(IntMatrix::from_csv(&text).unwrap(), m);
    }

    #[test]
    fn csv_reports_position() {
        let err = IntMatrix::from_csv("1,2\n3,x\n").unwrap_err();
        match err {
            LatticeError::Csv { line, field, .. } => {
                assert_eq!((line, field), (2, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power_decomposition(&big(12)), vec![big(3), big(4)]);
        assert_eq!(prime_power_decomposition(&big(4)), vec![big(4)]);
        assert_eq!(prime_power_decomposition(&big(30)), vec![big(2), big(3), big(5)]);
    }
}
