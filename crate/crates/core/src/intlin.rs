//! Exact integer linear algebra.
//!
//! Dense `BigInt` matrices, Smith normal form with transforms, Hermite-form
//! lattices in `Z^n`, subquotients `top / bottom` with explicit coordinates,
//! finitely generated abelian groups in invariant-factor form and bounded
//! cochain complexes whose terms may carry torsion.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Int = BigInt;
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinAlgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn ints(v: &[i64]) -> Vec<Int> {
    v.iter().map(|&x| Int::from(x)).collect()
}

pub fn zero_vec(n: usize) -> Vec<Int> {
    vec![Int::zero(); n]
}

pub fn is_zero_vec(v: &[Int]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn unit_vec(n: usize, k: usize) -> Vec<Int> {
    let mut v = zero_vec(n);
    v[k] = Int::one();
    v
}

pub fn add_assign_vec(a: &mut [Int], b: &[Int]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

pub fn add_scaled(a: &mut [Int], c: &Int, b: &[Int]) {
    if c.is_zero() {
        return;
    }
    for (x, y) in a.iter_mut().zip(b) {
        if !y.is_zero() {
            *x += c * y;
        }
    }
}

pub fn scale_vec(c: &Int, v: &[Int]) -> Vec<Int> {
    v.iter().map(|x| c * x).collect()
}

pub fn neg_vec(v: &[Int]) -> Vec<Int> {
    v.iter().map(|x| -x).collect()
}

pub fn sub_vec(a: &[Int], b: &[Int]) -> Vec<Int> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Reduce each coordinate into `[0, o)` where `o` is the order of that
/// basis element; order 0 means free.
pub fn reduce_mod(v: &mut [Int], orders: &[Int]) {
    for (x, o) in v.iter_mut().zip(orders) {
        if !o.is_zero() {
            *x = x.mod_floor(o);
        }
    }
}

pub fn is_zero_mod(v: &[Int], orders: &[Int]) -> bool {
    v.iter()
        .zip(orders)
        .all(|(x, o)| if o.is_zero() { x.is_zero() } else { x.is_multiple_of(o) })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![Int::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Int::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.data[i * c + j] = Int::from(x);
            }
        }
        m
    }

    pub fn from_int_rows(rows: usize, cols: usize, data: Vec<Vec<Int>>) -> Self {
        assert_eq!(data.len(), rows);
        let mut flat = Vec::with_capacity(rows * cols);
        for row in data {
            assert_eq!(row.len(), cols, "ragged rows");
            flat.extend(row);
        }
        IntMatrix { rows, cols, data: flat }
    }

    /// Builds a `rows x cols.len()` matrix from column vectors.
    pub fn from_cols(rows: usize, cols: &[Vec<Int>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, x) in col.iter().enumerate() {
                m.data[i * m.cols + j] = x.clone();
            }
        }
        m
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[Int]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (k, d) in diag.iter().enumerate() {
            m.set(k, k, d.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Int) {
        self.data[i * self.cols + j] = v;
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Int {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> Vec<Int> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Int> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Int>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        m
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        m.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        let mut out = zero_vec(self.rows);
        for (k, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let a = self.get(i, k);
                if !a.is_zero() {
                    *o += a * x;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, c: &Int) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                m.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        m
    }

    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Copies `block` into position `(r0, c0)`, adding to existing entries.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &IntMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                let b = block.get(i, j);
                if !b.is_zero() {
                    *self.get_mut(r0 + i, c0 + j) += b;
                }
            }
        }
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> IntMatrix {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (a, i) in rows.clone().enumerate() {
            for (b, j) in cols.clone().enumerate() {
                m.set(a, b, self.get(i, j).clone());
            }
        }
        m
    }

    pub fn trace(&self) -> Result<Int, LinAlgError> {
        if self.rows != self.cols {
            return Err(LinAlgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok((0..self.rows).map(|i| self.get(i, i).clone()).sum())
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<Int, LinAlgError> {
        if self.rows != self.cols {
            return Err(LinAlgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Int::one());
        }
        let mut a = self.to_rows();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(k, i);
                        sign = -sign;
                    }
                    None => return Ok(Int::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * a[n - 1][n - 1].clone())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Result of [`smith_normal_form`]: `u * m * v = s` with `u`, `v` unimodular
/// and `s` diagonal with a divisibility chain `diag[0] | diag[1] | ...`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub v: IntMatrix,
    /// Nonzero diagonal entries, all positive.
    pub diag: Vec<Int>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.diag.len()
    }
}

struct SnfWork {
    a: Vec<Vec<Int>>,
    u: Vec<Vec<Int>>,
    u_inv: Vec<Vec<Int>>,
    v: Vec<Vec<Int>>,
}

impl SnfWork {
    // row_i += q * row_j
    fn row_addmul(&mut self, i: usize, j: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        let (ri, rj) = two_rows(&mut self.a, i, j);
        add_scaled(ri, q, rj);
        let (ri, rj) = two_rows(&mut self.u, i, j);
        add_scaled(ri, q, rj);
        // inverse: col_j -= q * col_i
        for row in self.u_inv.iter_mut() {
            if !row[i].is_zero() {
                let t = q * &row[i];
                row[j] -= t;
            }
        }
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        self.u.swap(i, j);
        for row in self.u_inv.iter_mut() {
            row.swap(i, j);
        }
    }

    fn row_neg(&mut self, i: usize) {
        for x in self.a[i].iter_mut() {
            *x = -std::mem::take(x);
        }
        for x in self.u[i].iter_mut() {
            *x = -std::mem::take(x);
        }
        for row in self.u_inv.iter_mut() {
            row[i] = -std::mem::take(&mut row[i]);
        }
    }

    // col_i += q * col_j
    fn col_addmul(&mut self, i: usize, j: usize, q: &Int) {
        if q.is_zero() {
            return;
        }
        for row in self.a.iter_mut() {
            if !row[j].is_zero() {
                let t = q * &row[j];
                row[i] += t;
            }
        }
        for row in self.v.iter_mut() {
            if !row[j].is_zero() {
                let t = q * &row[j];
                row[i] += t;
            }
        }
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for row in self.a.iter_mut() {
            row.swap(i, j);
        }
        for row in self.v.iter_mut() {
            row.swap(i, j);
        }
    }
}

fn two_rows<T>(m: &mut [Vec<T>], i: usize, j: usize) -> (&mut Vec<T>, &Vec<T>) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = m.split_at_mut(j);
        (&mut lo[i], &hi[0])
    } else {
        let (lo, hi) = m.split_at_mut(i);
        (&mut hi[0], &lo[j])
    }
}

fn to_nested(m: &IntMatrix) -> Vec<Vec<Int>> {
    m.to_rows()
}

fn from_nested(rows: usize, cols: usize, a: Vec<Vec<Int>>) -> IntMatrix {
    IntMatrix::from_int_rows(rows, cols, a)
}

/// Smith normal form by repeated pivoting on the entry of least absolute
/// value. Transforms are returned so that witnesses can be reconstructed.
pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (r, c) = m.shape();
    let mut w = SnfWork {
        a: to_nested(m),
        u: to_nested(&IntMatrix::identity(r)),
        u_inv: to_nested(&IntMatrix::identity(r)),
        v: to_nested(&IntMatrix::identity(c)),
    };
    let mut t = 0;
    while t < r.min(c) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let x = &w.a[i][j];
                if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < w.a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        w.row_swap(t, pi);
        w.col_swap(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..r {
                if !w.a[i][t].is_zero() {
                    let q = w.a[i][t].div_floor(&w.a[t][t]);
                    w.row_addmul(i, t, &-q);
                    if !w.a[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..c {
                if !w.a[t][j].is_zero() {
                    let q = w.a[t][j].div_floor(&w.a[t][t]);
                    w.col_addmul(j, t, &-q);
                    if !w.a[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                let mut best: Option<(bool, usize)> = None;
                let mut best_abs = w.a[t][t].abs();
                for i in t + 1..r {
                    let x = w.a[i][t].abs();
                    if !x.is_zero() && x < best_abs {
                        best_abs = x;
                        best = Some((true, i));
                    }
                }
                for j in t + 1..c {
                    let x = w.a[t][j].abs();
                    if !x.is_zero() && x < best_abs {
                        best_abs = x;
                        best = Some((false, j));
                    }
                }
                match best {
                    Some((true, i)) => w.row_swap(t, i),
                    Some((false, j)) => w.col_swap(t, j),
                    None => {}
                }
                continue;
            }
            let p = w.a[t][t].clone();
            let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !w.a[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => w.row_addmul(t, i, &Int::one()),
                None => break,
            }
        }
        if w.a[t][t].is_negative() {
            w.row_neg(t);
        }
        t += 1;
    }
    let diag = (0..t).map(|k| w.a[k][k].clone()).collect();
    SmithForm {
        s: from_nested(r, c, w.a),
        u: from_nested(r, r, w.u),
        u_inv: from_nested(r, r, w.u_inv),
        v: from_nested(c, c, w.v),
        diag,
    }
}

/// Solves `m * x = v` over `Z`. Returns `Ok(None)` when `v` is not in the
/// image lattice.
pub fn image_membership(m: &IntMatrix, v: &[Int]) -> Result<Option<Vec<Int>>, LinAlgError> {
    if v.len() != m.rows() {
        return Err(LinAlgError::DimensionMismatch { expected: m.rows(), found: v.len() });
    }
    let snf = smith_normal_form(m);
    let uv = snf.u.mul_vec(v);
    let mut y = zero_vec(m.cols());
    for (k, x) in uv.iter().enumerate() {
        if k < snf.rank() {
            let (q, rem) = x.div_rem(&snf.diag[k]);
            if !rem.is_zero() {
                return Ok(None);
            }
            y[k] = q;
        } else if !x.is_zero() {
            return Ok(None);
        }
    }
    Ok(Some(snf.v.mul_vec(&y)))
}

/// Canonical row-style Hermite normal form of the lattice spanned by `gens`:
/// rows in echelon form, positive pivots, entries above pivots reduced into
/// `[0, pivot)`. Zero rows are dropped.
pub fn hnf_rows(mut rows: Vec<Vec<Int>>, ncols: usize) -> Vec<Vec<Int>> {
    rows.retain(|r| !is_zero_vec(r));
    let mut r = 0;
    for col in 0..ncols {
        if r >= rows.len() {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in r..rows.len() {
                if !rows[i][col].is_zero()
                    && best.is_none_or(|b| rows[i][col].abs() < rows[b][col].abs())
                {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            rows.swap(r, b);
            let mut done = true;
            for i in r + 1..rows.len() {
                if !rows[i][col].is_zero() {
                    let q = rows[i][col].div_floor(&rows[r][col]);
                    let (ri, rr) = two_rows(&mut rows, i, r);
                    add_scaled(ri, &-q, rr);
                    if !rows[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if r >= rows.len() || rows[r][col].is_zero() {
            continue;
        }
        if rows[r][col].is_negative() {
            for x in rows[r].iter_mut() {
                *x = -std::mem::take(x);
            }
        }
        for i in 0..r {
            if !rows[i][col].is_zero() {
                let q = rows[i][col].div_floor(&rows[r][col]);
                let (ri, rr) = two_rows(&mut rows, i, r);
                add_scaled(ri, &-q, rr);
            }
        }
        r += 1;
    }
    rows.truncate(r);
    rows.retain(|row| !is_zero_vec(row));
    rows
}

/// A sublattice of `Z^dim`, stored by its canonical Hermite basis, so two
/// lattices are equal iff their bases are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    dim: usize,
    basis: Vec<Vec<Int>>,
}

impl Lattice {
    pub fn zero(dim: usize) -> Self {
        Lattice { dim, basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        Lattice { dim, basis: (0..dim).map(|k| unit_vec(dim, k)).collect() }
    }

    pub fn span<I: IntoIterator<Item = Vec<Int>>>(dim: usize, gens: I) -> Self {
        let rows: Vec<Vec<Int>> = gens.into_iter().collect();
        for r in &rows {
            assert_eq!(r.len(), dim, "generator of wrong length");
        }
        Lattice { dim, basis: hnf_rows(rows, dim) }
    }

    /// The relation lattice `⊕ o_k Z e_k` of a module with the given orders.
    pub fn relations(orders: &[Int]) -> Self {
        let n = orders.len();
        Lattice::span(
            n,
            orders.iter().enumerate().filter(|(_, o)| !o.is_zero()).map(|(k, o)| {
                let mut v = zero_vec(n);
                v[k] = o.clone();
                v
            }),
        )
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(dim: usize, axes: impl IntoIterator<Item = usize>) -> Self {
        Lattice::span(dim, axes.into_iter().map(|k| unit_vec(dim, k)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Int>] {
        &self.basis
    }

    /// Basis vectors as matrix columns (`dim x rank`).
    pub fn basis_matrix(&self) -> IntMatrix {
        IntMatrix::from_cols(self.dim, &self.basis)
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.dim, other.dim);
        Lattice::span(self.dim, self.basis.iter().chain(&other.basis).cloned())
    }

    /// Coefficients of `v` in the Hermite basis, if `v` lies in the lattice.
    pub fn coords(&self, v: &[Int]) -> Option<Vec<Int>> {
        assert_eq!(v.len(), self.dim);
        let mut rest = v.to_vec();
        let mut out = Vec::with_capacity(self.basis.len());
        for row in &self.basis {
            let p = row.iter().position(|x| !x.is_zero()).expect("zero basis row");
            if rest[..p].iter().any(|x| !x.is_zero()) {
                return None;
            }
            let (q, r) = rest[p].div_rem(&row[p]);
            if !r.is_zero() {
                return None;
            }
            add_scaled(&mut rest, &-&q, row);
            out.push(q);
        }
        if is_zero_vec(&rest) {
            Some(out)
        } else {
            None
        }
    }

    pub fn contains(&self, v: &[Int]) -> bool {
        self.coords(v).is_some()
    }

    pub fn is_subset_of(&self, other: &Lattice) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    /// `{x : m x ∈ target}`.
    pub fn preimage(m: &IntMatrix, target: &Lattice) -> Lattice {
        assert_eq!(m.rows(), target.dim);
        let n = m.cols();
        let t = target.basis_matrix().scaled(&int(-1));
        let big = m.hstack(&t);
        let snf = smith_normal_form(&big);
        let gens = (snf.rank()..big.cols()).map(|j| snf.v.col(j)[..n].to_vec());
        Lattice::span(n, gens)
    }

    pub fn intersect(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.dim, other.dim);
        let b = self.basis_matrix();
        let coeffs = Lattice::preimage(&b, other);
        Lattice::span(self.dim, coeffs.basis.iter().map(|c| b.mul_vec(c)))
    }

    pub fn image(m: &IntMatrix, src: &Lattice) -> Lattice {
        assert_eq!(m.cols(), src.dim);
        Lattice::span(m.rows(), src.basis.iter().map(|b| m.mul_vec(b)))
    }

    pub fn kernel(m: &IntMatrix) -> Lattice {
        Lattice::preimage(m, &Lattice::zero(m.rows()))
    }

    pub fn column_span(m: &IntMatrix) -> Lattice {
        Lattice::span(m.rows(), (0..m.cols()).map(|j| m.col(j)))
    }
}

/// Kernel basis of `m` as columns of the returned matrix.
pub fn kernel_basis(m: &IntMatrix) -> IntMatrix {
    Lattice::kernel(m).basis_matrix()
}

/// A finitely generated abelian group in invariant-factor form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FGAbGroup {
    pub free_rank: usize,
    /// Invariant factors `d_1 | d_2 | ...`, each at least 2.
    pub torsion: Vec<Int>,
}

impl FGAbGroup {
    pub fn zero() -> Self {
        FGAbGroup::default()
    }

    pub fn free(rank: usize) -> Self {
        FGAbGroup { free_rank: rank, torsion: Vec::new() }
    }

    /// The group `⊕ Z/o_k` (order 0 meaning `Z`) in canonical form.
    pub fn from_orders(orders: &[Int]) -> Self {
        let free_rank = orders.iter().filter(|o| o.is_zero()).count();
        let tors: Vec<Int> = orders.iter().filter(|o| !o.is_zero()).map(|o| o.abs()).collect();
        if tors.is_empty() {
            return FGAbGroup::free(free_rank);
        }
        let n = tors.len();
        let snf = smith_normal_form(&IntMatrix::diagonal(n, n, &tors));
        let torsion = snf.diag.into_iter().filter(|d| !d.is_one()).collect();
        FGAbGroup { free_rank, torsion }
    }

    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn direct_sum(&self, other: &FGAbGroup) -> FGAbGroup {
        let mut orders: Vec<Int> = self.torsion.iter().chain(&other.torsion).cloned().collect();
        orders.extend(std::iter::repeat_n(Int::zero(), self.free_rank + other.free_rank));
        FGAbGroup::from_orders(&orders)
    }

    pub fn sum_all<'a, I: IntoIterator<Item = &'a FGAbGroup>>(groups: I) -> FGAbGroup {
        groups.into_iter().fold(FGAbGroup::zero(), |acc, g| acc.direct_sum(g))
    }

    /// Whether `Hom(self, other) = 0`.
    pub fn hom_is_zero(&self, other: &FGAbGroup) -> bool {
        if other.is_zero() || self.is_zero() {
            return true;
        }
        if self.free_rank > 0 {
            return false;
        }
        self.torsion
            .iter()
            .all(|m| other.torsion.iter().all(|n| m.gcd(n).is_one()))
    }
}

impl fmt::Display for FGAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// The subquotient `top / bottom` of `Z^dim` (with `bottom ⊆ top`), with a
/// chosen basis of generators so that elements get integer coordinates.
#[derive(Clone, Debug)]
pub struct Subquotient {
    top: Lattice,
    bottom: Lattice,
    gens: Vec<Vec<Int>>,
    orders: Vec<Int>,
    // top-coordinates -> generator coordinates
    proj: IntMatrix,
}

impl Subquotient {
    pub fn new(top: Lattice, bottom: Lattice) -> Self {
        assert_eq!(top.dim(), bottom.dim());
        let k = top.rank();
        let rel_cols: Vec<Vec<Int>> = bottom
            .basis()
            .iter()
            .map(|b| top.coords(b).expect("bottom lattice not contained in top"))
            .collect();
        let rel = IntMatrix::from_cols(k, &rel_cols);
        let tm = top.basis_matrix();
        let (gen_cols, proj, orders) = match monomial_relations(&rel) {
            Some(ord) => {
                // already diagonal up to placement: keep the top basis
                let keep: Vec<usize> = (0..k).filter(|&i| !ord[i].is_one()).collect();
                let mut proj = IntMatrix::zeros(keep.len(), k);
                for (a, &i) in keep.iter().enumerate() {
                    proj.set(a, i, Int::one());
                }
                let gens = keep.iter().map(|&i| top.basis()[i].clone()).collect();
                (gens, proj, keep.iter().map(|&i| ord[i].clone()).collect())
            }
            None => {
                let snf = smith_normal_form(&rel);
                let g = tm.mul(&snf.u_inv);
                let mut gens = Vec::new();
                let mut orders = Vec::new();
                let mut keep = Vec::new();
                for i in 0..k {
                    let o = if i < snf.rank() { snf.diag[i].clone() } else { Int::zero() };
                    if o.is_one() {
                        continue;
                    }
                    gens.push(g.col(i));
                    orders.push(o);
                    keep.push(i);
                }
                let mut proj = IntMatrix::zeros(keep.len(), k);
                for (a, &i) in keep.iter().enumerate() {
                    for j in 0..k {
                        proj.set(a, j, snf.u.get(i, j).clone());
                    }
                }
                (gens, proj, orders)
            }
        };
        Subquotient { top, bottom, gens: gen_cols, orders, proj }
    }

    pub fn top(&self) -> &Lattice {
        &self.top
    }

    pub fn bottom(&self) -> &Lattice {
        &self.bottom
    }

    pub fn ngens(&self) -> usize {
        self.gens.len()
    }

    pub fn orders(&self) -> &[Int] {
        &self.orders
    }

    /// Ambient representative of generator `k`.
    pub fn generator(&self, k: usize) -> &[Int] {
        &self.gens[k]
    }

    pub fn group(&self) -> FGAbGroup {
        FGAbGroup::from_orders(&self.orders)
    }

    /// Coordinates (reduced) of an element of `top`; `None` if `v ∉ top`.
    pub fn coords(&self, v: &[Int]) -> Option<Vec<Int>> {
        let c = self.top.coords(v)?;
        let mut y = self.proj.mul_vec(&c);
        reduce_mod(&mut y, &self.orders);
        Some(y)
    }

    /// Ambient representative of a coordinate vector.
    pub fn lift(&self, coords: &[Int]) -> Vec<Int> {
        let mut v = zero_vec(self.top.dim());
        for (c, g) in coords.iter().zip(&self.gens) {
            add_scaled(&mut v, c, g);
        }
        v
    }

    pub fn is_zero_element(&self, v: &[Int]) -> bool {
        self.bottom.contains(v)
    }

    /// Matrix of the map induced by `m` from `self` to `target`, or `None`
    /// if `m` does not carry top into top and bottom into bottom.
    pub fn induced(&self, m: &IntMatrix, target: &Subquotient) -> Option<IntMatrix> {
        for b in self.bottom.basis() {
            if !target.bottom.contains(&m.mul_vec(b)) {
                return None;
            }
        }
        let mut cols = Vec::with_capacity(self.ngens());
        for g in &self.gens {
            cols.push(target.coords(&m.mul_vec(g))?);
        }
        Some(IntMatrix::from_cols(target.ngens(), &cols))
    }

    /// Free-part block of an induced matrix, as rationals.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.orders.len()).filter(|&i| self.orders[i].is_zero()).collect()
    }
}

// If every relation column is a multiple of a distinct unit vector, return
// the resulting per-coordinate orders (1 is never produced unless present).
fn monomial_relations(rel: &IntMatrix) -> Option<Vec<Int>> {
    let (k, m) = rel.shape();
    let mut ord = vec![Int::zero(); k];
    for j in 0..m {
        let nz: Vec<usize> = (0..k).filter(|&i| !rel.get(i, j).is_zero()).collect();
        if nz.len() != 1 || !ord[nz[0]].is_zero() {
            return None;
        }
        ord[nz[0]] = rel.get(nz[0], j).abs();
    }
    Some(ord)
}

/// A bounded cochain complex of finitely generated abelian groups, each term
/// presented as `⊕ Z/o_k` on a basis (order 0 = `Z`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FGAbComplex {
    lo: i32,
    orders: Vec<Vec<Int>>,
    // d[k] : degree lo+k -> lo+k+1
    d: Vec<IntMatrix>,
}

impl FGAbComplex {
    /// `orders[k]` describes degree `lo + k`; `d[k]` maps degree `lo + k` to
    /// `lo + k + 1` and must have `orders.len() - 1` entries (or fewer,
    /// padded with zero maps).
    pub fn new(lo: i32, orders: Vec<Vec<Int>>, mut d: Vec<IntMatrix>) -> Self {
        let n = orders.len();
        for k in d.len()..n.saturating_sub(1) {
            d.push(IntMatrix::zeros(orders[k + 1].len(), orders[k].len()));
        }
        d.truncate(n.saturating_sub(1));
        for (k, m) in d.iter().enumerate() {
            assert_eq!(m.shape(), (orders[k + 1].len(), orders[k].len()), "differential shape at degree {}", lo + k as i32);
        }
        FGAbComplex { lo, orders, d }
    }

    pub fn free(lo: i32, ranks: &[usize], d: Vec<IntMatrix>) -> Self {
        Self::new(lo, ranks.iter().map(|&r| zero_vec(r)).collect(), d)
    }

    pub fn zero() -> Self {
        FGAbComplex { lo: 0, orders: Vec::new(), d: Vec::new() }
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    /// Highest stored degree (`lo - 1` when empty).
    pub fn hi(&self) -> i32 {
        self.lo + self.orders.len() as i32 - 1
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i32> {
        self.lo..=self.hi()
    }

    pub fn rank(&self, deg: i32) -> usize {
        self.orders_at(deg).len()
    }

    pub fn orders_at(&self, deg: i32) -> &[Int] {
        let k = deg - self.lo;
        if k < 0 || k as usize >= self.orders.len() {
            &[]
        } else {
            &self.orders[k as usize]
        }
    }

    /// Differential from `deg` to `deg + 1` (a zero matrix outside the range).
    pub fn differential(&self, deg: i32) -> IntMatrix {
        let k = deg - self.lo;
        if k >= 0 && (k as usize) < self.d.len() {
            self.d[k as usize].clone()
        } else {
            IntMatrix::zeros(self.rank(deg + 1), self.rank(deg))
        }
    }

    pub fn differential_ref(&self, deg: i32) -> Option<&IntMatrix> {
        let k = deg - self.lo;
        if k >= 0 && (k as usize) < self.d.len() {
            Some(&self.d[k as usize])
        } else {
            None
        }
    }

    pub fn relations(&self, deg: i32) -> Lattice {
        Lattice::relations(self.orders_at(deg))
    }

    /// Structural check: `d` respects relations and `d∘d ≡ 0`.
    pub fn check(&self) -> Result<(), String> {
        for deg in self.degrees() {
            let d = self.differential(deg);
            let rel_next = self.relations(deg + 1);
            for b in self.relations(deg).basis() {
                if !rel_next.contains(&d.mul_vec(b)) {
                    return Err(format!("differential at degree {deg} does not respect relations"));
                }
            }
            let dd = self.differential(deg + 1).mul(&d);
            let rel2 = self.relations(deg + 2);
            for j in 0..dd.cols() {
                if !rel2.contains(&dd.col(j)) {
                    return Err(format!("d∘d ≠ 0 starting at degree {deg}"));
                }
            }
        }
        Ok(())
    }

    pub fn cycles(&self, deg: i32) -> Lattice {
        Lattice::preimage(&self.differential(deg), &self.relations(deg + 1))
    }

    pub fn boundaries(&self, deg: i32) -> Lattice {
        Lattice::column_span(&self.differential(deg - 1)).sum(&self.relations(deg))
    }

    pub fn cohomology_at(&self, deg: i32) -> Subquotient {
        Subquotient::new(self.cycles(deg), self.boundaries(deg))
    }

    pub fn cohomology_group(&self, deg: i32) -> FGAbGroup {
        self.cohomology_at(deg).group()
    }

    /// All nonzero cohomology groups, keyed by degree.
    pub fn cohomology(&self) -> BTreeMap<i32, FGAbGroup> {
        self.degrees()
            .map(|d| (d, self.cohomology_group(d)))
            .filter(|(_, g)| !g.is_zero())
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        self.degrees().all(|d| self.cohomology_group(d).is_zero())
    }

    /// Euler characteristic of the free ranks of the terms.
    pub fn euler_characteristic(&self) -> i64 {
        self.degrees()
            .map(|d| {
                let r = self.orders_at(d).iter().filter(|o| o.is_zero()).count() as i64;
                if d.rem_euclid(2) == 0 {
                    r
                } else {
                    -r
                }
            })
            .sum()
    }
}

/// Trace of a square rational matrix.
pub fn rational_trace(m: &[Vec<Rat>]) -> Result<Rat, LinAlgError> {
    let n = m.len();
    let mut t = Rat::zero();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(LinAlgError::NotSquare { rows: n, cols: row.len() });
        }
        t += &row[i];
    }
    Ok(t)
}

pub fn to_rational(m: &IntMatrix) -> Vec<Vec<Rat>> {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(Rat::from_integer).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn snf_small_cases() {
        let s = smith_normal_form(&m(&[&[0]]));
        assert_eq!(s.s, m(&[&[0]]));
        assert_eq!(s.u, IntMatrix::identity(1));
        assert_eq!(s.v, IntMatrix::identity(1));
        let s = smith_normal_form(&IntMatrix::identity(2));
        assert_eq!(s.s, IntMatrix::identity(2));
        let a = m(&[&[2, 4], &[6, 8]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.diag, ints(&[2, 4]));
        assert_eq!(s.u.mul(&a).mul(&s.v), s.s);
        assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(2));
    }

    #[test]
    fn membership_examples() {
        assert_eq!(image_membership(&m(&[&[2]]), &ints(&[4])).unwrap(), Some(ints(&[2])));
        assert_eq!(image_membership(&m(&[&[2]]), &ints(&[3])).unwrap(), None);
        assert_eq!(image_membership(&m(&[&[0]]), &ints(&[0])).unwrap(), Some(ints(&[0])));
        assert!(image_membership(&m(&[&[1, 2]]), &ints(&[1, 1])).is_err());
    }

    #[test]
    fn cohomology_examples() {
        let c = FGAbComplex::free(0, &[1, 1], vec![m(&[&[1]])]);
        assert!(c.is_exact());
        let c = FGAbComplex::free(0, &[2, 2], vec![m(&[&[2, 0], &[0, 3]])]);
        assert!(c.cohomology_group(0).is_zero());
        assert_eq!(c.cohomology_group(1), FGAbGroup { free_rank: 0, torsion: ints(&[6]) });
        let c = FGAbComplex::free(3, &[4], vec![]);
        assert_eq!(c.cohomology_group(3), FGAbGroup::free(4));
    }

    #[test]
    fn torsion_terms() {
        // Z/4 --x2--> Z/4 : H^0 = Z/2, H^1 = Z/2
        let c = FGAbComplex::new(0, vec![ints(&[4]), ints(&[4])], vec![m(&[&[2]])]);
        c.check().unwrap();
        assert_eq!(c.cohomology_group(0).torsion, ints(&[2]));
        assert_eq!(c.cohomology_group(1).torsion, ints(&[2]));
    }

    #[test]
    fn traces() {
        let id3 = to_rational(&IntMatrix::identity(3));
        assert_eq!(rational_trace(&id3).unwrap(), Rat::from_integer(int(3)));
        assert_eq!(rational_trace(&to_rational(&m(&[&[1, 2], &[3, 4]]))).unwrap(), Rat::from_integer(int(5)));
        assert!(rational_trace(&to_rational(&m(&[&[1, 2]]))).is_err());
    }

    #[test]
    fn lattice_ops() {
        let a = Lattice::span(2, vec![ints(&[2, 0]), ints(&[0, 3])]);
        let b = Lattice::span(2, vec![ints(&[3, 0]), ints(&[0, 2])]);
        let i = a.intersect(&b);
        assert_eq!(i, Lattice::span(2, vec![ints(&[6, 0]), ints(&[0, 6])]));
        assert_eq!(a.sum(&b), Lattice::full(2));
        let k = Lattice::kernel(&m(&[&[1, 1]]));
        assert_eq!(k.rank(), 1);
        assert!(k.contains(&ints(&[5, -5])));
    }

    #[test]
    fn determinant_bareiss() {
        assert_eq!(m(&[&[2, 4], &[6, 8]]).determinant().unwrap(), int(-8));
        assert_eq!(m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]).determinant().unwrap(), int(-1));
    }
}
