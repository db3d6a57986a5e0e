//! Finite DG categories: representation, validation and constructors.
//!
//! A hom module `C^i(X,Y)` is based; each basis element carries an order
//! (0 for a free generator), so subquotients such as the bottom degree of a
//! hom-truncated category are represented exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::intlin::{
    add_scaled, is_zero_mod, is_zero_vec, reduce_mod, unit_vec, zero_vec, Int, IntMatrix, Lattice,
    Subquotient,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructuralError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object index {0} out of range")]
    ObjectIndex(usize),
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    Shape { context: String, expected: (usize, usize), found: (usize, usize) },
    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    Length { context: String, expected: usize, found: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DgError {
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),
}

/// A based hom module: labels plus per-generator orders (0 = free).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomSpace {
    pub labels: Vec<String>,
    pub orders: Vec<Int>,
}

impl HomSpace {
    pub fn free<S: Into<String>>(labels: Vec<S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let orders = zero_vec(labels.len());
        HomSpace { labels, orders }
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn is_free(&self) -> bool {
        self.orders.iter().all(|o| o.is_zero())
    }
}

/// Structure constants for `C^b(Y,Z) x C^a(X,Y) -> C^{a+b}(X,Z)`; entry
/// `v * nu + u` lists the terms of `v∘u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompTable {
    pub nv: usize,
    pub nu: usize,
    pub entries: Vec<Vec<(usize, Int)>>,
}

impl CompTable {
    fn new(nv: usize, nu: usize) -> Self {
        CompTable { nv, nu, entries: vec![Vec::new(); nv * nu] }
    }

    pub fn get(&self, v: usize, u: usize) -> &[(usize, Int)] {
        &self.entries[v * self.nu + u]
    }
}

pub type HomKey = (usize, usize, i32);
pub type CompKey = (usize, usize, usize, i32, i32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DgCategory {
    objects: Vec<String>,
    homs: BTreeMap<HomKey, HomSpace>,
    diffs: BTreeMap<HomKey, IntMatrix>,
    comp: BTreeMap<CompKey, CompTable>,
    idents: Vec<Vec<Int>>,
}

/// An element `f ∈ C^degree(source, target)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HomElement {
    pub source: usize,
    pub target: usize,
    pub degree: i32,
    pub coeffs: Vec<Int>,
}

impl HomElement {
    pub fn is_zero(&self) -> bool {
        is_zero_vec(&self.coeffs)
    }
}

pub struct DgCategoryBuilder {
    cat: DgCategory,
}

impl DgCategoryBuilder {
    pub fn hom(&mut self, x: usize, y: usize, deg: i32, space: HomSpace) -> &mut Self {
        if space.rank() > 0 {
            self.cat.homs.insert((x, y, deg), space);
        }
        self
    }

    /// Differential `C^deg(x,y) -> C^{deg+1}(x,y)` as a matrix.
    pub fn differential(&mut self, x: usize, y: usize, deg: i32, m: IntMatrix) -> &mut Self {
        self.cat.diffs.insert((x, y, deg), m);
        self
    }

    /// Records `v∘u += c·w` for `u ∈ C^a(x,y)`, `v ∈ C^b(y,z)`.
    #[allow(clippy::too_many_arguments)]
    pub fn compose(
        &mut self,
        (x, y, z): (usize, usize, usize),
        (a, u): (i32, usize),
        (b, v): (i32, usize),
        w: usize,
        c: Int,
    ) -> &mut Self {
        let nu = self.cat.rank(x, y, a);
        let nv = self.cat.rank(y, z, b);
        let t = self.cat.comp.entry((x, y, z, a, b)).or_insert_with(|| CompTable::new(nv, nu));
        if v < t.nv && u < t.nu {
            let e = &mut t.entries[v * t.nu + u];
            match e.iter_mut().find(|(k, _)| *k == w) {
                Some((_, old)) => *old += c,
                None => e.push((w, c)),
            }
        } else {
            // recorded as out of range; caught by build()
            t.entries.push(vec![(usize::MAX, c)]);
        }
        self
    }

    pub fn identity(&mut self, x: usize, coeffs: Vec<Int>) -> &mut Self {
        self.cat.idents[x] = coeffs;
        self
    }

    pub fn build(mut self) -> Result<DgCategory, StructuralError> {
        let c = &mut self.cat;
        let n = c.objects.len();
        for &(x, y, _) in c.homs.keys() {
            if x >= n || y >= n {
                return Err(StructuralError::ObjectIndex(x.max(y)));
            }
        }
        for (&(x, y, d), m) in &c.diffs {
            let exp = (c.rank(x, y, d + 1), c.rank(x, y, d));
            if m.shape() != exp {
                return Err(StructuralError::Shape { context: format!("differential ({x},{y},{d})"), expected: exp, found: m.shape() });
            }
        }
        c.diffs.retain(|_, m| !m.is_zero());
        for (&(x, y, z, a, b), t) in &mut c.comp {
            let nu = c.homs.get(&(x, y, a)).map_or(0, |h| h.rank());
            let nv = c.homs.get(&(y, z, b)).map_or(0, |h| h.rank());
            let nw = c.homs.get(&(x, z, a + b)).map_or(0, |h| h.rank());
            if t.entries.len() != nu * nv || t.nu != nu || t.nv != nv {
                return Err(StructuralError::Invalid(format!("composition index out of range at ({x},{y},{z},{a},{b})")));
            }
            for e in &mut t.entries {
                if e.iter().any(|(w, _)| *w >= nw) {
                    return Err(StructuralError::Invalid(format!("composition result index out of range at ({x},{y},{z},{a},{b})")));
                }
                e.retain(|(_, k)| !k.is_zero());
                e.sort_by_key(|(w, _)| *w);
            }
        }
        c.comp.retain(|_, t| t.entries.iter().any(|e| !e.is_empty()));
        for x in 0..n {
            let r = c.rank(x, x, 0);
            if c.idents[x].is_empty() && r > 0 {
                c.idents[x] = zero_vec(r);
            }
            if c.idents[x].len() != r {
                return Err(StructuralError::Length { context: format!("identity of `{}`", c.objects[x]), expected: r, found: c.idents[x].len() });
            }
        }
        Ok(self.cat)
    }
}

impl DgCategory {
    pub fn builder<S: Into<String>>(objects: Vec<S>) -> DgCategoryBuilder {
        let objects: Vec<String> = objects.into_iter().map(Into::into).collect();
        let n = objects.len();
        DgCategoryBuilder {
            cat: DgCategory { objects, homs: BTreeMap::new(), diffs: BTreeMap::new(), comp: BTreeMap::new(), idents: vec![Vec::new(); n] },
        }
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn object_index(&self, name: &str) -> Result<usize, StructuralError> {
        self.objects.iter().position(|o| o == name).ok_or_else(|| StructuralError::UnknownObject(name.to_string()))
    }

    pub fn hom(&self, x: usize, y: usize, deg: i32) -> Option<&HomSpace> {
        self.homs.get(&(x, y, deg))
    }

    pub fn rank(&self, x: usize, y: usize, deg: i32) -> usize {
        self.hom(x, y, deg).map_or(0, |h| h.rank())
    }

    pub fn orders(&self, x: usize, y: usize, deg: i32) -> &[Int] {
        self.hom(x, y, deg).map_or(&[], |h| &h.orders)
    }

    pub fn homs(&self) -> impl Iterator<Item = (&HomKey, &HomSpace)> {
        self.homs.iter()
    }

    pub fn hom_degrees(&self, x: usize, y: usize) -> Vec<i32> {
        self.homs.range((x, y, i32::MIN)..=(x, y, i32::MAX)).map(|(k, _)| k.2).collect()
    }

    /// Smallest and largest degree of a nonzero hom module.
    pub fn degree_range(&self) -> Option<(i32, i32)> {
        let lo = self.homs.keys().map(|k| k.2).min()?;
        let hi = self.homs.keys().map(|k| k.2).max()?;
        Some((lo, hi))
    }

    pub fn differentials(&self) -> impl Iterator<Item = (&HomKey, &IntMatrix)> {
        self.diffs.iter()
    }

    pub fn compositions(&self) -> impl Iterator<Item = (&CompKey, &CompTable)> {
        self.comp.iter()
    }

    pub fn identity(&self, x: usize) -> &[Int] {
        &self.idents[x]
    }

    pub fn identity_element(&self, x: usize) -> HomElement {
        HomElement { source: x, target: x, degree: 0, coeffs: self.idents[x].clone() }
    }

    pub fn zero_element(&self, x: usize, y: usize, deg: i32) -> HomElement {
        HomElement { source: x, target: y, degree: deg, coeffs: zero_vec(self.rank(x, y, deg)) }
    }

    pub fn basis_element(&self, x: usize, y: usize, deg: i32, k: usize) -> HomElement {
        HomElement { source: x, target: y, degree: deg, coeffs: unit_vec(self.rank(x, y, deg), k) }
    }

    pub fn differential_matrix(&self, x: usize, y: usize, deg: i32) -> IntMatrix {
        self.diffs.get(&(x, y, deg)).cloned().unwrap_or_else(|| IntMatrix::zeros(self.rank(x, y, deg + 1), self.rank(x, y, deg)))
    }

    /// `δ` on a coefficient vector of `C^deg(x,y)`, reduced.
    pub fn delta(&self, x: usize, y: usize, deg: i32, v: &[Int]) -> Vec<Int> {
        let mut out = match self.diffs.get(&(x, y, deg)) {
            Some(m) => m.mul_vec(v),
            None => zero_vec(self.rank(x, y, deg + 1)),
        };
        reduce_mod(&mut out, self.orders(x, y, deg + 1));
        out
    }

    pub fn delta_el(&self, f: &HomElement) -> HomElement {
        HomElement { source: f.source, target: f.target, degree: f.degree + 1, coeffs: self.delta(f.source, f.target, f.degree, &f.coeffs) }
    }

    /// Accumulates `v∘u` (with `u ∈ C^a(x,y)`, `v ∈ C^b(y,z)`) times `scale`
    /// into `out ∈ C^{a+b}(x,z)`, unreduced.
    #[allow(clippy::too_many_arguments)]
    pub fn compose_into(&self, out: &mut [Int], scale: &Int, (x, y, z): (usize, usize, usize), b: i32, v: &[Int], a: i32, u: &[Int]) {
        let Some(t) = self.comp.get(&(x, y, z, a, b)) else { return };
        for (vi, vc) in v.iter().enumerate() {
            if vc.is_zero() {
                continue;
            }
            let sv = scale * vc;
            for (ui, uc) in u.iter().enumerate() {
                if uc.is_zero() {
                    continue;
                }
                let e = t.get(vi, ui);
                if e.is_empty() {
                    continue;
                }
                let s = &sv * uc;
                for (w, c) in e {
                    out[*w] += &s * c;
                }
            }
        }
    }

    pub fn compose(&self, (x, y, z): (usize, usize, usize), b: i32, v: &[Int], a: i32, u: &[Int]) -> Vec<Int> {
        let mut out = zero_vec(self.rank(x, z, a + b));
        self.compose_into(&mut out, &Int::one(), (x, y, z), b, v, a, u);
        reduce_mod(&mut out, self.orders(x, z, a + b));
        out
    }

    /// `v∘u`.
    pub fn compose_el(&self, v: &HomElement, u: &HomElement) -> HomElement {
        assert_eq!(u.target, v.source, "composition of non-composable elements");
        HomElement {
            source: u.source,
            target: v.target,
            degree: u.degree + v.degree,
            coeffs: self.compose((u.source, u.target, v.target), v.degree, &v.coeffs, u.degree, &u.coeffs),
        }
    }

    pub fn is_zero_mod(&self, x: usize, y: usize, deg: i32, v: &[Int]) -> bool {
        is_zero_mod(v, self.orders(x, y, deg))
    }

    pub fn is_torsion_free(&self) -> bool {
        self.homs.values().all(|h| h.is_free())
    }

    /// `C^i(X,Y) = 0` for all `i > 0`.
    pub fn is_negative(&self) -> bool {
        self.homs.keys().all(|k| k.2 <= 0)
    }

    /// The hom complex `C(x,y)` as an abelian-group complex.
    pub fn hom_complex(&self, x: usize, y: usize) -> crate::intlin::FGAbComplex {
        let degs = self.hom_degrees(x, y);
        let Some((&lo, &hi)) = degs.first().zip(degs.last()) else {
            return crate::intlin::FGAbComplex::zero();
        };
        let orders = (lo..=hi).map(|d| self.orders(x, y, d).to_vec()).collect();
        let d = (lo..hi).map(|d| self.differential_matrix(x, y, d)).collect();
        crate::intlin::FGAbComplex::new(lo, orders, d)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_dg(self)
    }
}

impl fmt::Display for DgCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DG category with {} objects", self.objects.len())?;
        for (&(x, y, d), h) in &self.homs {
            writeln!(f, "  C^{d}({}, {}) rank {}", self.objects[x], self.objects[y], h.rank())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Differential does not respect the torsion relations of a hom module.
    TorsionDifferential { hom: HomKey },
    /// Composition does not respect torsion relations.
    TorsionComposition { key: CompKey },
    DeltaSquared { hom: HomKey, basis: usize },
    UnitDifferential { object: usize },
    Leibniz { key: CompKey, v: usize, u: usize },
    Associativity { objects: (usize, usize, usize, usize), degrees: (i32, i32, i32), basis: (usize, usize, usize) },
    LeftUnit { hom: HomKey, basis: usize },
    RightUnit { hom: HomKey, basis: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TorsionDifferential { hom } => write!(f, "δ does not respect relations on {hom:?}"),
            Violation::TorsionComposition { key } => write!(f, "composition does not respect relations on {key:?}"),
            Violation::DeltaSquared { hom, basis } => write!(f, "δ² ≠ 0 on basis {basis} of {hom:?}"),
            Violation::UnitDifferential { object } => write!(f, "δ(id) ≠ 0 at object {object}"),
            Violation::Leibniz { key, v, u } => write!(f, "Leibniz fails for basis pair ({v},{u}) at {key:?}"),
            Violation::Associativity { objects, degrees, basis } => write!(f, "associativity fails at {objects:?} degrees {degrees:?} basis {basis:?}"),
            Violation::LeftUnit { hom, basis } => write!(f, "left unit law fails on basis {basis} of {hom:?}"),
            Violation::RightUnit { hom, basis } => write!(f, "right unit law fails on basis {basis} of {hom:?}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub checked: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every DG axiom instance on basis elements.
pub fn validate_dg(c: &DgCategory) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = c.num_objects();
    // relations and δ²
    for (&(x, y, d), h) in &c.homs {
        for (k, o) in h.orders.iter().enumerate() {
            rep.checked += 1;
            if !o.is_zero() {
                let mut v = zero_vec(h.rank());
                v[k] = o.clone();
                if !is_zero_vec(&c.delta(x, y, d, &v)) {
                    rep.violations.push(Violation::TorsionDifferential { hom: (x, y, d) });
                }
            }
        }
        for k in 0..h.rank() {
            rep.checked += 1;
            let dv = c.delta(x, y, d, &unit_vec(h.rank(), k));
            if !is_zero_vec(&c.delta(x, y, d + 1, &dv)) {
                rep.violations.push(Violation::DeltaSquared { hom: (x, y, d), basis: k });
            }
        }
    }
    for x in 0..n {
        rep.checked += 1;
        if !is_zero_vec(&c.delta(x, x, 0, c.identity(x))) {
            rep.violations.push(Violation::UnitDifferential { object: x });
        }
    }
    // units
    for (&(x, y, d), h) in &c.homs {
        for k in 0..h.rank() {
            rep.checked += 2;
            let e = unit_vec(h.rank(), k);
            let mut e_red = e.clone();
            reduce_mod(&mut e_red, &h.orders);
            if c.compose((x, y, y), 0, c.identity(y), d, &e) != e_red {
                rep.violations.push(Violation::LeftUnit { hom: (x, y, d), basis: k });
            }
            if c.compose((x, x, y), d, &e, 0, c.identity(x)) != e_red {
                rep.violations.push(Violation::RightUnit { hom: (x, y, d), basis: k });
            }
        }
    }
    // Leibniz and torsion compatibility on all composable basis pairs
    let keys: Vec<HomKey> = c.homs.keys().cloned().collect();
    for &(x, y, a) in &keys {
        for &(y2, z, b) in &keys {
            if y2 != y {
                continue;
            }
            let hu = &c.homs[&(x, y, a)];
            let hv = &c.homs[&(y, z, b)];
            for vi in 0..hv.rank() {
                for ui in 0..hu.rank() {
                    rep.checked += 1;
                    let v = unit_vec(hv.rank(), vi);
                    let u = unit_vec(hu.rank(), ui);
                    let vu = c.compose((x, y, z), b, &v, a, &u);
                    let lhs = c.delta(x, z, a + b, &vu);
                    let mut rhs = zero_vec(c.rank(x, z, a + b + 1));
                    let dv = c.delta(y, z, b, &v);
                    let du = c.delta(x, y, a, &u);
                    c.compose_into(&mut rhs, &Int::one(), (x, y, z), b + 1, &dv, a, &u);
                    let sign = if b.is_odd() { -Int::one() } else { Int::one() };
                    c.compose_into(&mut rhs, &sign, (x, y, z), b, &v, a + 1, &du);
                    reduce_mod(&mut rhs, c.orders(x, z, a + b + 1));
                    if lhs != rhs {
                        rep.violations.push(Violation::Leibniz { key: (x, y, z, a, b), v: vi, u: ui });
                    }
                    if !hv.orders[vi].is_zero() || !hu.orders[ui].is_zero() {
                        let ov = if hv.orders[vi].is_zero() { Int::one() } else { hv.orders[vi].clone() };
                        let ou = if hu.orders[ui].is_zero() { Int::one() } else { hu.orders[ui].clone() };
                        let probes = [(ov.clone(), Int::one()), (Int::one(), ou.clone())];
                        for (sv, su) in probes {
                            if sv.is_one() && su.is_one() {
                                continue;
                            }
                            let r = c.compose((x, y, z), b, &crate::intlin::scale_vec(&sv, &v), a, &crate::intlin::scale_vec(&su, &u));
                            if !is_zero_vec(&r) {
                                rep.violations.push(Violation::TorsionComposition { key: (x, y, z, a, b) });
                            }
                        }
                    }
                }
            }
        }
    }
    // associativity
    for &(x, y, a) in &keys {
        for &(y2, z, b) in &keys {
            if y2 != y || c.rank(x, z, a + b) == 0 && !c.comp.contains_key(&(x, y, z, a, b)) {
                continue;
            }
            for &(z2, w, e) in &keys {
                if z2 != z {
                    continue;
                }
                let (ru, rv, rw) = (c.rank(x, y, a), c.rank(y, z, b), c.rank(z, w, e));
                for ui in 0..ru {
                    let u = unit_vec(ru, ui);
                    for vi in 0..rv {
                        let v = unit_vec(rv, vi);
                        let vu = c.compose((x, y, z), b, &v, a, &u);
                        for wi in 0..rw {
                            rep.checked += 1;
                            let ww = unit_vec(rw, wi);
                            let left = c.compose((x, z, w), e, &ww, a + b, &vu);
                            let wv = c.compose((y, z, w), e, &ww, b, &v);
                            let right = c.compose((x, y, w), b + e, &wv, a, &u);
                            if left != right {
                                rep.violations.push(Violation::Associativity { objects: (x, y, z, w), degrees: (a, b, e), basis: (ui, vi, wi) });
                            }
                        }
                    }
                }
            }
        }
    }
    rep
}

fn combo_label(labels: &[String], v: &[Int]) -> String {
    let nz: Vec<(usize, &Int)> = v.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
    if nz.len() == 1 && nz[0].1.is_one() {
        return labels[nz[0].0].clone();
    }
    let mut s = String::new();
    for (i, c) in nz {
        let term = if c.is_one() {
            labels[i].clone()
        } else if *c == -Int::one() {
            format!("-{}", labels[i])
        } else {
            format!("{}*{}", c, labels[i])
        };
        if !s.is_empty() && !term.starts_with('-') {
            s.push('+');
        }
        s.push_str(&term);
    }
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

/// Ambient data for building a category whose hom modules are subquotients
/// of modules on which `δ`, composition and identities are already known.
pub(crate) struct SubquotientModel<'a> {
    pub objects: Vec<String>,
    /// `(x,y,d) -> (subquotient of Z^dim, ambient labels)`
    pub spaces: BTreeMap<HomKey, (Subquotient, Vec<String>)>,
    pub delta: Box<dyn Fn(HomKey, &[Int]) -> Vec<Int> + 'a>,
    /// `(x,y,z), b, v, a, u -> v∘u` in the ambient module of `(x,z,a+b)`
    #[allow(clippy::type_complexity)]
    pub compose: Box<dyn Fn((usize, usize, usize), i32, &[Int], i32, &[Int]) -> Vec<Int> + 'a>,
    pub identity: Box<dyn Fn(usize) -> Vec<Int> + 'a>,
}

pub(crate) fn build_from_subquotients(model: SubquotientModel<'_>) -> Result<DgCategory, StructuralError> {
    let spaces: BTreeMap<HomKey, (Subquotient, Vec<String>)> =
        model.spaces.into_iter().filter(|(_, (s, _))| s.ngens() > 0).collect();
    let mut b = DgCategory::builder(model.objects.clone());
    for (&(x, y, d), (sq, labels)) in &spaces {
        let labs = (0..sq.ngens()).map(|k| combo_label(labels, sq.generator(k))).collect();
        b.hom(x, y, d, HomSpace { labels: labs, orders: sq.orders().to_vec() });
    }
    for (&(x, y, d), (sq, _)) in &spaces {
        if let Some((tq, _)) = spaces.get(&(x, y, d + 1)) {
            let cols: Vec<Vec<Int>> = (0..sq.ngens())
                .map(|k| {
                    let img = (model.delta)((x, y, d), sq.generator(k));
                    tq.coords(&img).ok_or_else(|| StructuralError::Invalid(format!("δ leaves the subquotient at ({x},{y},{d})")))
                })
                .collect::<Result<_, _>>()?;
            b.differential(x, y, d, IntMatrix::from_cols(tq.ngens(), &cols));
        }
    }
    for (&(x, y, a), (su, _)) in &spaces {
        for (&(y2, z, bb), (sv, _)) in spaces.range((y, 0, i32::MIN)..) {
            if y2 != y {
                break;
            }
            let Some((sw, _)) = spaces.get(&(x, z, a + bb)) else { continue };
            for vi in 0..sv.ngens() {
                for ui in 0..su.ngens() {
                    let amb = (model.compose)((x, y, z), bb, sv.generator(vi), a, su.generator(ui));
                    let co = sw.coords(&amb).ok_or_else(|| StructuralError::Invalid(format!("composite leaves the subquotient at ({x},{y},{z},{a},{bb})")))?;
                    for (w, c) in co.into_iter().enumerate() {
                        if !c.is_zero() {
                            b.compose((x, y, z), (a, ui), (bb, vi), w, c);
                        }
                    }
                }
            }
        }
    }
    for x in 0..model.objects.len() {
        if let Some((sq, _)) = spaces.get(&(x, x, 0)) {
            let id = (model.identity)(x);
            let co = sq.coords(&id).ok_or_else(|| StructuralError::Invalid(format!("identity of object {x} leaves the subquotient")))?;
            b.identity(x, co);
        }
    }
    b.build()
}

fn full_sq(c: &DgCategory, k: HomKey) -> Subquotient {
    let o = c.orders(k.0, k.1, k.2);
    Subquotient::new(Lattice::full(o.len()), Lattice::relations(o))
}

fn ambient_model(c: &DgCategory, spaces: BTreeMap<HomKey, (Subquotient, Vec<String>)>) -> SubquotientModel<'_> {
    SubquotientModel {
        objects: c.objects.clone(),
        spaces,
        delta: Box::new(move |(x, y, d), v| {
            let mut out = c.differential_matrix(x, y, d).mul_vec(v);
            if out.is_empty() {
                out = zero_vec(c.rank(x, y, d + 1));
            }
            out
        }),
        compose: Box::new(move |xyz, b, v, a, u| {
            let mut out = zero_vec(c.rank(xyz.0, xyz.2, a + b));
            c.compose_into(&mut out, &Int::one(), xyz, b, v, a, u);
            out
        }),
        identity: Box::new(move |x| c.identity(x).to_vec()),
    }
}

/// A DG functor between two DG categories: object map plus, for every hom
/// module of the source, a matrix into the corresponding target module.
#[derive(Clone, Debug)]
pub struct DgFunctor {
    pub source: Arc<DgCategory>,
    pub target: Arc<DgCategory>,
    pub objects: Vec<usize>,
    pub maps: BTreeMap<HomKey, IntMatrix>,
}

impl DgFunctor {
    pub fn identity(c: Arc<DgCategory>) -> Self {
        let maps = c.homs.iter().map(|(&k, h)| (k, IntMatrix::identity(h.rank()))).collect();
        DgFunctor { objects: (0..c.num_objects()).collect(), source: c.clone(), target: c, maps }
    }

    pub fn apply(&self, x: usize, y: usize, deg: i32, v: &[Int]) -> Vec<Int> {
        let (fx, fy) = (self.objects[x], self.objects[y]);
        let mut out = match self.maps.get(&(x, y, deg)) {
            Some(m) => m.mul_vec(v),
            None => zero_vec(self.target.rank(fx, fy, deg)),
        };
        reduce_mod(&mut out, self.target.orders(fx, fy, deg));
        out
    }

    pub fn apply_el(&self, f: &HomElement) -> HomElement {
        HomElement {
            source: self.objects[f.source],
            target: self.objects[f.target],
            degree: f.degree,
            coeffs: self.apply(f.source, f.target, f.degree, &f.coeffs),
        }
    }

    /// Returns human-readable failures of the DG functor axioms.
    pub fn validate(&self) -> Vec<String> {
        let s = &self.source;
        let t = &self.target;
        let mut errs = Vec::new();
        for (&(x, y, d), h) in &s.homs {
            if let Some(m) = self.maps.get(&(x, y, d)) {
                let exp = (t.rank(self.objects[x], self.objects[y], d), h.rank());
                if m.shape() != exp {
                    errs.push(format!("map shape at ({x},{y},{d})"));
                    return errs;
                }
            }
            for k in 0..h.rank() {
                let e = unit_vec(h.rank(), k);
                let lhs = self.apply(x, y, d + 1, &s.delta(x, y, d, &e));
                let fe = self.apply(x, y, d, &e);
                let rhs = t.delta(self.objects[x], self.objects[y], d, &fe);
                if lhs != rhs {
                    errs.push(format!("F∘δ ≠ δ∘F on basis {k} of ({x},{y},{d})"));
                }
                if !h.orders[k].is_zero() {
                    let mut o = zero_vec(h.rank());
                    o[k] = h.orders[k].clone();
                    if !is_zero_vec(&self.apply(x, y, d, &o)) {
                        errs.push(format!("torsion not preserved on basis {k} of ({x},{y},{d})"));
                    }
                }
            }
        }
        for x in 0..s.num_objects() {
            let fid = self.apply(x, x, 0, s.identity(x));
            let mut tid = t.identity(self.objects[x]).to_vec();
            reduce_mod(&mut tid, t.orders(self.objects[x], self.objects[x], 0));
            if fid != tid {
                errs.push(format!("F(id) ≠ id at object {x}"));
            }
        }
        for &(x, y, z, a, b) in s.comp.keys() {
            let (ru, rv) = (s.rank(x, y, a), s.rank(y, z, b));
            for vi in 0..rv {
                for ui in 0..ru {
                    let v = unit_vec(rv, vi);
                    let u = unit_vec(ru, ui);
                    let lhs = self.apply(x, z, a + b, &s.compose((x, y, z), b, &v, a, &u));
                    let rhs = t.compose((self.objects[x], self.objects[y], self.objects[z]), b, &self.apply(y, z, b, &v), a, &self.apply(x, y, a, &u));
                    if lhs != rhs {
                        errs.push(format!("F(v∘u) ≠ F(v)∘F(u) at ({x},{y},{z},{a},{b}) basis ({vi},{ui})"));
                    }
                }
            }
        }
        // pairs whose composite vanishes in the source must vanish in the target too
        for (&(x, y, a), hu) in &s.homs {
            for (&(y2, z, b), hv) in s.homs.range((y, 0, i32::MIN)..) {
                if y2 != y {
                    break;
                }
                if s.comp.contains_key(&(x, y, z, a, b)) {
                    continue;
                }
                for vi in 0..hv.rank() {
                    for ui in 0..hu.rank() {
                        let fv = self.apply(y, z, b, &unit_vec(hv.rank(), vi));
                        let fu = self.apply(x, y, a, &unit_vec(hu.rank(), ui));
                        let r = t.compose((self.objects[x], self.objects[y], self.objects[z]), b, &fv, a, &fu);
                        if !is_zero_vec(&r) {
                            errs.push(format!("F(v)∘F(u) ≠ 0 = F(v∘u) at ({x},{y},{z},{a},{b})"));
                        }
                    }
                }
            }
        }
        errs
    }
}

/// A DG category concentrated in degree 0 with zero differential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveCategoryData {
    cat: DgCategory,
}

impl AdditiveCategoryData {
    pub fn new(cat: DgCategory) -> Result<Self, DgError> {
        if cat.homs.keys().any(|k| k.2 != 0) {
            return Err(DgError::Hypothesis("additive data must be concentrated in degree 0".into()));
        }
        if !cat.diffs.is_empty() {
            return Err(DgError::Hypothesis("additive data must have zero differential".into()));
        }
        Ok(AdditiveCategoryData { cat })
    }

    pub fn category(&self) -> &DgCategory {
        &self.cat
    }

    pub fn into_category(self) -> DgCategory {
        self.cat
    }

    /// The free additive category on an acyclic quiver: basis of `A(x,y)` is
    /// the set of paths from `x` to `y`.
    pub fn path_category<S: Into<String>>(objects: Vec<S>, arrows: &[(usize, usize)]) -> Result<Self, DgError> {
        let objects: Vec<String> = objects.into_iter().map(Into::into).collect();
        let n = objects.len();
        // paths[x][y] = list of arrow sequences (in order of traversal)
        let mut paths: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![Vec::new(); n]; n];
        for (x, row) in paths.iter_mut().enumerate() {
            row[x].push(Vec::new());
        }
        let mut frontier: Vec<(usize, Vec<usize>)> = (0..n).map(|x| (x, Vec::new())).collect();
        let mut start: Vec<usize> = (0..n).collect();
        let mut steps = 0;
        while !frontier.is_empty() {
            steps += 1;
            if steps > n + 1 {
                return Err(DgError::Hypothesis("quiver has a cycle".into()));
            }
            let mut next = Vec::new();
            let mut next_start = Vec::new();
            for ((end, p), s) in frontier.into_iter().zip(start) {
                for (k, &(a, b)) in arrows.iter().enumerate() {
                    if a == end {
                        let mut q = p.clone();
                        q.push(k);
                        paths[s][b].push(q.clone());
                        next.push((b, q));
                        next_start.push(s);
                    }
                }
            }
            frontier = next;
            start = next_start;
        }
        let label = |p: &Vec<usize>, x: usize| -> String {
            if p.is_empty() {
                format!("id_{}", objects[x])
            } else {
                p.iter().rev().map(|k| format!("a{k}")).collect::<Vec<_>>().join("*")
            }
        };
        let mut b = DgCategory::builder(objects.clone());
        for x in 0..n {
            for y in 0..n {
                if !paths[x][y].is_empty() {
                    b.hom(x, y, 0, HomSpace::free(paths[x][y].iter().map(|p| label(p, x)).collect()));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for (ui, u) in paths[x][y].iter().enumerate() {
                        for (vi, v) in paths[y][z].iter().enumerate() {
                            let mut w = u.clone();
                            w.extend(v.iter().cloned());
                            let wi = paths[x][z].iter().position(|p| *p == w).expect("path closure");
                            b.compose((x, y, z), (0, ui), (0, vi), wi, Int::one());
                        }
                    }
                }
            }
            let idx = paths[x][x].iter().position(|p| p.is_empty()).unwrap();
            b.identity(x, unit_vec(paths[x][x].len(), idx));
        }
        let cat = b.build().map_err(DgError::from)?;
        AdditiveCategoryData::new(cat)
    }
}

/// `S(A)`: `A` viewed as a DG category.
pub fn build_s(a: &AdditiveCategoryData) -> DgCategory {
    a.cat.clone()
}

/// A bounded complex over an additive category; each term is a formal
/// direct sum of objects, and `d[k]` maps term `k` to term `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AComplex {
    pub name: String,
    pub lo: i32,
    pub terms: Vec<Vec<usize>>,
    /// `d[k][(i, j)]`: component from summand `j` of term `k` to summand `i`
    /// of term `k+1`, as coefficients in `A(term_k[j], term_{k+1}[i])`.
    pub d: Vec<BTreeMap<(usize, usize), Vec<Int>>>,
}

impl AComplex {
    pub fn hi(&self) -> i32 {
        self.lo + self.terms.len() as i32 - 1
    }

    pub fn term(&self, deg: i32) -> &[usize] {
        let k = deg - self.lo;
        if k < 0 || k as usize >= self.terms.len() {
            &[]
        } else {
            &self.terms[k as usize]
        }
    }

    /// Component of the differential from `deg` (summand `j`) to `deg+1`
    /// (summand `i`).
    pub fn d_component(&self, deg: i32, i: usize, j: usize) -> Option<&Vec<Int>> {
        let k = deg - self.lo;
        if k < 0 || k as usize >= self.d.len() {
            return None;
        }
        self.d[k as usize].get(&(i, j))
    }

    pub fn singleton(name: &str, object: usize, deg: i32) -> Self {
        AComplex { name: name.into(), lo: deg, terms: vec![vec![object]], d: Vec::new() }
    }

    fn is_empty(&self) -> bool {
        self.terms.iter().all(|t| t.is_empty())
    }
}

/// `d∘d = 0` check for a complex over `A`.
pub fn check_acomplex(a: &AdditiveCategoryData, x: &AComplex) -> Result<(), DgError> {
    let c = &a.cat;
    for deg in x.lo..x.hi() - 1 {
        for (s, &ps) in x.term(deg).iter().enumerate() {
            for (t, &pt) in x.term(deg + 2).iter().enumerate() {
                let mut acc = zero_vec(c.rank(ps, pt, 0));
                for (m, &pm) in x.term(deg + 1).iter().enumerate() {
                    if let (Some(f), Some(g)) = (x.d_component(deg, m, s), x.d_component(deg + 1, t, m)) {
                        c.compose_into(&mut acc, &Int::one(), (ps, pm, pt), 0, g, 0, f);
                    }
                }
                reduce_mod(&mut acc, c.orders(ps, pt, 0));
                if !is_zero_vec(&acc) {
                    return Err(DgError::Hypothesis(format!("complex `{}` has d∘d ≠ 0 at degree {deg}", x.name)));
                }
            }
        }
    }
    Ok(())
}

/// Layout of `⊕_k ⊕_{i,j} A(P^k_j, Q^{k+n}_i)`: list of
/// `(k, j, i, offset, rank)` blocks.
pub(crate) fn bb_layout(c: &DgCategory, p: &AComplex, q: &AComplex, n: i32) -> (Vec<(i32, usize, usize, usize, usize)>, usize) {
    let mut blocks = Vec::new();
    let mut off = 0;
    for k in p.lo..=p.hi() {
        for (j, &pj) in p.term(k).iter().enumerate() {
            for (i, &qi) in q.term(k + n).iter().enumerate() {
                let r = c.rank(pj, qi, 0);
                if r > 0 {
                    blocks.push((k, j, i, off, r));
                    off += r;
                }
            }
        }
    }
    (blocks, off)
}

/// `B^b(A)` on a finite list of complexes: `δf = d_Q∘f − (−1)^n f∘d_P`.
pub fn build_bb(a: &AdditiveCategoryData, complexes: &[AComplex]) -> Result<DgCategory, DgError> {
    let c = &a.cat;
    if !c.is_torsion_free() {
        return Err(DgError::Hypothesis("B^b(A) requires torsion-free hom groups".into()));
    }
    for x in complexes {
        check_acomplex(a, x)?;
        if x.terms.len() != x.d.len() + 1 && !(x.d.is_empty() && x.terms.len() <= 1) && x.d.len() + 1 < x.terms.len() {
            return Err(DgError::Structural(StructuralError::Invalid(format!("complex `{}` has inconsistent differential count", x.name))));
        }
    }
    let names: Vec<String> = complexes.iter().map(|x| x.name.clone()).collect();
    let nobj = complexes.len();
    let mut layouts: BTreeMap<HomKey, (Vec<(i32, usize, usize, usize, usize)>, usize)> = BTreeMap::new();
    for (xi, p) in complexes.iter().enumerate() {
        for (yi, q) in complexes.iter().enumerate() {
            if p.is_empty() || q.is_empty() {
                continue;
            }
            for n in (q.lo - p.hi())..=(q.hi() - p.lo) {
                let (bl, r) = bb_layout(c, p, q, n);
                if r > 0 {
                    layouts.insert((xi, yi, n), (bl, r));
                }
            }
        }
    }
    let mut b = DgCategory::builder(names);
    for (&(x, y, n), (bl, _)) in &layouts {
        let p = &complexes[x];
        let q = &complexes[y];
        let mut labels = Vec::new();
        for &(k, j, i, _, r) in bl {
            let (pj, qi) = (p.term(k)[j], q.term(k + n)[i]);
            for l in 0..r {
                labels.push(format!("{}@{}[{}->{}]", c.hom(pj, qi, 0).unwrap().labels[l], k, j, i));
            }
        }
        b.hom(x, y, n, HomSpace::free(labels));
    }
    // element access: component (k, j, i) of a vector in layout
    let block_of = |key: &HomKey, k: i32, j: usize, i: usize| -> Option<(usize, usize)> {
        layouts.get(key)?.0.iter().find(|bl| bl.0 == k && bl.1 == j && bl.2 == i).map(|bl| (bl.3, bl.4))
    };
    for (&(x, y, n), (bl, r)) in &layouts {
        let p = &complexes[x];
        let q = &complexes[y];
        let tr = layouts.get(&(x, y, n + 1)).map_or(0, |l| l.1);
        if tr == 0 {
            continue;
        }
        let mut m = IntMatrix::zeros(tr, *r);
        let sign = if n.is_odd() { Int::one() } else { -Int::one() }; // −(−1)^n
        for &(k, j, i, off, rk) in bl {
            let (pj, qi) = (p.term(k)[j], q.term(k + n)[i]);
            for l in 0..rk {
                let f = unit_vec(rk, l);
                // d_Q ∘ f : from P^k_j to Q^{k+n+1}_{i2}
                for (i2, &qi2) in q.term(k + n + 1).iter().enumerate() {
                    if let Some(dq) = q.d_component(k + n, i2, i) {
                        let v = c.compose((pj, qi, qi2), 0, dq, 0, &f);
                        if let Some((o2, _)) = block_of(&(x, y, n + 1), k, j, i2) {
                            for (t, val) in v.iter().enumerate() {
                                *m.get_mut(o2 + t, off + l) += val;
                            }
                        }
                    }
                }
                // f ∘ d_P : from P^{k-1}_{j2} to Q^{k+n}_i
                for (j2, &pj2) in p.term(k - 1).iter().enumerate() {
                    if let Some(dp) = p.d_component(k - 1, j, j2) {
                        let v = c.compose((pj2, pj, qi), 0, &f, 0, dp);
                        if let Some((o2, _)) = block_of(&(x, y, n + 1), k - 1, j2, i) {
                            for (t, val) in v.iter().enumerate() {
                                *m.get_mut(o2 + t, off + l) += &sign * val;
                            }
                        }
                    }
                }
            }
        }
        b.differential(x, y, n, m);
    }
    for (&(x, y, a1), (bu, _)) in &layouts {
        for (&(y2, z, b1), (bv, _)) in layouts.range((y, 0, i32::MIN)..) {
            if y2 != y {
                break;
            }
            if !layouts.contains_key(&(x, z, a1 + b1)) {
                continue;
            }
            let (p, q, r) = (&complexes[x], &complexes[y], &complexes[z]);
            for &(k, j, i, ou, ru) in bu {
                for &(k2, j2, i2, ov, rv) in bv {
                    if k2 != k + a1 || j2 != i {
                        continue;
                    }
                    let (pj, qi, ri) = (p.term(k)[j], q.term(k + a1)[i], r.term(k + a1 + b1)[i2]);
                    let (ow, _) = block_of(&(x, z, a1 + b1), k, j, i2).expect("composite block");
                    for lu in 0..ru {
                        for lv in 0..rv {
                            let w = c.compose((pj, qi, ri), 0, &unit_vec(rv, lv), 0, &unit_vec(ru, lu));
                            for (t, val) in w.into_iter().enumerate() {
                                if !val.is_zero() {
                                    b.compose((x, y, z), (a1, ou + lu), (b1, ov + lv), ow + t, val);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for (x, p) in complexes.iter().enumerate() {
        if let Some((bl, r)) = layouts.get(&(x, x, 0)) {
            let mut id = zero_vec(*r);
            for &(k, j, i, off, _) in bl {
                if i == j {
                    let pj = p.term(k)[j];
                    for (t, v) in c.identity(pj).iter().enumerate() {
                        id[off + t] += v;
                    }
                }
            }
            b.identity(x, id);
        }
    }
    let _ = nobj;
    b.build().map_err(DgError::from)
}

/// `S_N(A)`: complexes supported in `[0, N]`.
pub fn build_sn(a: &AdditiveCategoryData, n: u32, complexes: &[AComplex]) -> Result<DgCategory, DgError> {
    for x in complexes {
        if !x.is_empty() && (x.lo < 0 || x.hi() > n as i32) {
            let nonempty: Vec<i32> = (x.lo..=x.hi()).filter(|&d| !x.term(d).is_empty()).collect();
            if nonempty.iter().any(|&d| d < 0 || d > n as i32) {
                return Err(DgError::Hypothesis(format!("complex `{}` is not supported in [0,{n}]", x.name)));
            }
        }
    }
    build_bb(a, complexes)
}

/// `H(C)`: degree-0 cohomology of the hom complexes with induced composition.
pub fn homotopy_category(c: &DgCategory) -> AdditiveCategoryData {
    let mut spaces = BTreeMap::new();
    let n = c.num_objects();
    for x in 0..n {
        for y in 0..n {
            let o = c.orders(x, y, 0);
            if o.is_empty() {
                continue;
            }
            let rel = Lattice::relations(o);
            let z = Lattice::preimage(&c.differential_matrix(x, y, 0), &Lattice::relations(c.orders(x, y, 1)));
            let bnd = Lattice::column_span(&c.differential_matrix(x, y, -1)).sum(&rel);
            let sq = Subquotient::new(z.sum(&rel), bnd);
            spaces.insert((x, y, 0), (sq, c.hom(x, y, 0).unwrap().labels.clone()));
        }
    }
    let mut model = ambient_model(c, spaces);
    model.delta = Box::new(|(_, _, _), _| Vec::new());
    let cat = build_from_subquotients(model).expect("homotopy category construction");
    AdditiveCategoryData { cat: strip_differential(cat) }
}

fn strip_differential(mut c: DgCategory) -> DgCategory {
    c.diffs.clear();
    c
}

/// Checks that the composition of `H(C)` does not depend on representatives:
/// perturbs each generator by boundaries and compares classes.
pub fn check_homotopy_composition(c: &DgCategory) -> Result<(), String> {
    let n = c.num_objects();
    let cls = |x: usize, y: usize| -> Subquotient {
        let rel = Lattice::relations(c.orders(x, y, 0));
        let z = Lattice::preimage(&c.differential_matrix(x, y, 0), &Lattice::relations(c.orders(x, y, 1)));
        Subquotient::new(z.sum(&rel), Lattice::column_span(&c.differential_matrix(x, y, -1)).sum(&rel))
    };
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let (su, sv, sw) = (cls(x, y), cls(y, z), cls(x, z));
                let bu = c.differential_matrix(x, y, -1);
                let bv = c.differential_matrix(y, z, -1);
                for ui in 0..su.ngens() {
                    for vi in 0..sv.ngens() {
                        let u = su.generator(ui).to_vec();
                        let v = sv.generator(vi).to_vec();
                        let base = sw.coords(&c.compose((x, y, z), 0, &v, 0, &u)).ok_or("composite not closed")?;
                        for j in 0..bu.cols() {
                            let mut u2 = u.clone();
                            add_assign(&mut u2, &bu.col(j));
                            if sw.coords(&c.compose((x, y, z), 0, &v, 0, &u2)).as_ref() != Some(&base) {
                                return Err(format!("class of composite changes under boundary perturbation at ({x},{y},{z})"));
                            }
                        }
                        for j in 0..bv.cols() {
                            let mut v2 = v.clone();
                            add_assign(&mut v2, &bv.col(j));
                            if sw.coords(&c.compose((x, y, z), 0, &v2, 0, &u)).as_ref() != Some(&base) {
                                return Err(format!("class of composite changes under boundary perturbation at ({x},{y},{z})"));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn add_assign(a: &mut [Int], b: &[Int]) {
    add_scaled(a, &Int::one(), b)
}

/// `C₋`: positive degrees removed, degree 0 replaced by the closed morphisms.
pub fn negative_part(c: &DgCategory) -> DgCategory {
    negative_part_with_inclusion(c).0
}

/// `C₋` together with the inclusion functor `C₋ → C`.
pub fn negative_part_with_inclusion(c: &DgCategory) -> (DgCategory, DgFunctor) {
    if c.is_negative() {
        let arc = Arc::new(c.clone());
        return (c.clone(), DgFunctor::identity(arc));
    }
    let mut spaces = BTreeMap::new();
    for (&(x, y, d), h) in &c.homs {
        if d > 0 {
            continue;
        }
        let sq = if d == 0 {
            let rel = Lattice::relations(&h.orders);
            let z = Lattice::preimage(&c.differential_matrix(x, y, 0), &Lattice::relations(c.orders(x, y, 1)));
            Subquotient::new(z.sum(&rel), rel)
        } else {
            full_sq(c, (x, y, d))
        };
        spaces.insert((x, y, d), (sq, h.labels.clone()));
    }
    let maps_src = spaces.clone();
    let neg = build_from_subquotients(ambient_model(c, spaces)).expect("negative part construction");
    let maps = maps_src
        .iter()
        .filter(|(_, (s, _))| s.ngens() > 0)
        .map(|(&k, (s, _))| {
            let cols: Vec<Vec<Int>> = (0..s.ngens()).map(|g| s.generator(g).to_vec()).collect();
            (k, IntMatrix::from_cols(c.rank(k.0, k.1, k.2), &cols))
        })
        .collect();
    let f = DgFunctor { source: Arc::new(neg.clone()), target: Arc::new(c.clone()), objects: (0..c.num_objects()).collect(), maps };
    (neg, f)
}

/// `C_N`: hom complexes canonically truncated to `[−N, 0]`, with the
/// quotient functor `C → C_N`.
pub fn truncate_homs(c: &DgCategory, n: u32) -> Result<(DgCategory, DgFunctor), DgError> {
    if !c.is_negative() {
        return Err(DgError::Hypothesis("truncate_homs requires a negative DG category".into()));
    }
    Ok(truncate_homs_unchecked(c, n))
}

pub(crate) fn truncate_homs_unchecked(c: &DgCategory, n: u32) -> (DgCategory, DgFunctor) {
    let bottom = -(n as i32);
    let mut spaces = BTreeMap::new();
    for (&(x, y, d), h) in &c.homs {
        if d < bottom || d > 0 {
            continue;
        }
        let sq = if d == bottom {
            let rel = Lattice::relations(&h.orders);
            let im = Lattice::column_span(&c.differential_matrix(x, y, d - 1));
            Subquotient::new(Lattice::full(h.rank()), im.sum(&rel))
        } else {
            full_sq(c, (x, y, d))
        };
        spaces.insert((x, y, d), (sq, h.labels.clone()));
    }
    let maps_src = spaces.clone();
    let cn = build_from_subquotients(ambient_model(c, spaces)).expect("hom truncation construction");
    let maps = maps_src
        .iter()
        .filter(|(_, (s, _))| s.ngens() > 0)
        .map(|(&k, (s, _))| {
            let r = c.rank(k.0, k.1, k.2);
            let cols: Vec<Vec<Int>> = (0..r).map(|j| s.coords(&unit_vec(r, j)).unwrap()).collect();
            (k, IntMatrix::from_cols(s.ngens(), &cols))
        })
        .collect();
    let f = DgFunctor { source: Arc::new(c.clone()), target: Arc::new(cn.clone()), objects: (0..c.num_objects()).collect(), maps };
    (cn, f)
}

/// The opposite category with the Koszul sign `f∘_op g = (−1)^{|f||g|} g∘f`.
pub fn opposite(c: &DgCategory) -> DgCategory {
    let mut b = DgCategory::builder(c.objects.clone());
    for (&(x, y, d), h) in &c.homs {
        b.hom(y, x, d, h.clone());
    }
    for (&(x, y, d), m) in &c.diffs {
        b.differential(y, x, d, m.clone());
    }
    // original: u ∈ C^a(x,y), v ∈ C^b(y,z), v∘u ∈ C^{a+b}(x,z).
    // In C^op, v ∈ C_op^b(z,y), u ∈ C_op^a(y,x), and u∘_op v = (−1)^{ab} v∘u.
    for (&(x, y, z, a, bb), t) in &c.comp {
        let s = if (a * bb).is_odd() { -Int::one() } else { Int::one() };
        for vi in 0..t.nv {
            for ui in 0..t.nu {
                for (w, coef) in t.get(vi, ui) {
                    b.compose((z, y, x), (bb, vi), (a, ui), *w, &s * coef);
                }
            }
        }
    }
    for x in 0..c.num_objects() {
        b.identity(x, c.identity(x).to_vec());
    }
    b.build().expect("opposite of a well-formed category")
}

/// Full DG subcategory on the given objects, with its inclusion functor.
pub fn full_subcategory(c: &DgCategory, objects: &[usize]) -> Result<(DgCategory, DgFunctor), StructuralError> {
    for &o in objects {
        if o >= c.num_objects() {
            return Err(StructuralError::ObjectIndex(o));
        }
    }
    let pos = |o: usize| objects.iter().position(|&p| p == o);
    let mut b = DgCategory::builder(objects.iter().map(|&o| c.objects[o].clone()).collect());
    for (&(x, y, d), h) in &c.homs {
        if let (Some(i), Some(j)) = (pos(x), pos(y)) {
            b.hom(i, j, d, h.clone());
        }
    }
    for (&(x, y, d), m) in &c.diffs {
        if let (Some(i), Some(j)) = (pos(x), pos(y)) {
            b.differential(i, j, d, m.clone());
        }
    }
    for (&(x, y, z, a, bb), t) in &c.comp {
        if let (Some(i), Some(j), Some(k)) = (pos(x), pos(y), pos(z)) {
            for vi in 0..t.nv {
                for ui in 0..t.nu {
                    for (w, coef) in t.get(vi, ui) {
                        b.compose((i, j, k), (a, ui), (bb, vi), *w, coef.clone());
                    }
                }
            }
        }
    }
    for (i, &o) in objects.iter().enumerate() {
        b.identity(i, c.identity(o).to_vec());
    }
    let sub = b.build()?;
    let maps = sub.homs.iter().map(|(&k, h)| (k, IntMatrix::identity(h.rank()))).collect();
    let f = DgFunctor { source: Arc::new(sub.clone()), target: Arc::new(c.clone()), objects: objects.to_vec(), maps };
    Ok((sub, f))
}

/// Objects of the closed-morphism category: `(X, Y, f)` with `f` closed of
/// degree 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedMorphismObject {
    pub source: usize,
    pub target: usize,
    pub f: Vec<Int>,
}

/// The category of closed morphisms over `C` together with the projections
/// `p₁, p₂` to `C`. Homs `(X,Y,f) → (X′,Y′,f′)` are pairs `(g,h)` with
/// `f′∘g = h∘f`.
pub fn closed_morphism_category(c: &DgCategory, objs: &[ClosedMorphismObject]) -> Result<(DgCategory, DgFunctor, DgFunctor), DgError> {
    if !c.is_torsion_free() {
        return Err(DgError::Hypothesis("closed-morphism category requires torsion-free homs".into()));
    }
    for (k, o) in objs.iter().enumerate() {
        if o.f.len() != c.rank(o.source, o.target, 0) {
            return Err(StructuralError::Length { context: format!("closed morphism object {k}"), expected: c.rank(o.source, o.target, 0), found: o.f.len() }.into());
        }
        if !is_zero_vec(&c.delta(o.source, o.target, 0, &o.f)) {
            return Err(DgError::Hypothesis(format!("object {k}: f is not closed")));
        }
    }
    let names: Vec<String> = objs.iter().map(|o| format!("({}->{})", c.objects[o.source], c.objects[o.target])).collect();
    let mut spaces = BTreeMap::new();
    let mut degs = std::collections::BTreeSet::new();
    for &(_, _, d) in c.homs.keys() {
        degs.insert(d);
    }
    for (i, oi) in objs.iter().enumerate() {
        for (j, oj) in objs.iter().enumerate() {
            for &d in &degs {
                let rg = c.rank(oi.source, oj.source, d);
                let rh = c.rank(oi.target, oj.target, d);
                if rg + rh == 0 {
                    continue;
                }
                // (g,h) ↦ f′∘g − h∘f ∈ C^d(X, Y′)
                let rt = c.rank(oi.source, oj.target, d);
                let mut m = IntMatrix::zeros(rt, rg + rh);
                for k in 0..rg {
                    let v = c.compose((oi.source, oj.source, oj.target), 0, &oj.f, d, &unit_vec(rg, k));
                    for (t, x) in v.into_iter().enumerate() {
                        m.set(t, k, x);
                    }
                }
                for k in 0..rh {
                    let v = c.compose((oi.source, oi.target, oj.target), d, &unit_vec(rh, k), 0, &oi.f);
                    for (t, x) in v.into_iter().enumerate() {
                        m.set(t, rg + k, -x);
                    }
                }
                let top = Lattice::kernel(&m);
                let mut labels: Vec<String> = c.hom(oi.source, oj.source, d).map_or(vec![], |h| h.labels.iter().map(|l| format!("({l},0)")).collect());
                labels.extend(c.hom(oi.target, oj.target, d).map_or(vec![], |h| h.labels.iter().map(|l| format!("(0,{l})")).collect::<Vec<_>>()));
                spaces.insert((i, j, d), (Subquotient::new(top, Lattice::zero(rg + rh)), labels));
            }
        }
    }
    let split = |i: usize, j: usize, d: i32, v: &[Int]| -> (Vec<Int>, Vec<Int>) {
        let rg = c.rank(objs[i].source, objs[j].source, d);
        (v[..rg].to_vec(), v[rg..].to_vec())
    };
    let model = SubquotientModel {
        objects: names,
        spaces: spaces.clone(),
        delta: Box::new(|(i, j, d), v| {
            let (g, h) = split(i, j, d, v);
            let mut out = c.delta(objs[i].source, objs[j].source, d, &g);
            out.extend(c.delta(objs[i].target, objs[j].target, d, &h));
            out
        }),
        compose: Box::new(|(i, j, k), b, v, a, u| {
            let (gu, hu) = split(i, j, a, u);
            let (gv, hv) = split(j, k, b, v);
            let mut out = c.compose((objs[i].source, objs[j].source, objs[k].source), b, &gv, a, &gu);
            out.extend(c.compose((objs[i].target, objs[j].target, objs[k].target), b, &hv, a, &hu));
            out
        }),
        identity: Box::new(|i| {
            let mut out = c.identity(objs[i].source).to_vec();
            out.extend(c.identity(objs[i].target).iter().cloned());
            out
        }),
    };
    let mc = build_from_subquotients(model)?;
    let mc_arc = Arc::new(mc.clone());
    let target = Arc::new(c.clone());
    let mut m1 = BTreeMap::new();
    let mut m2 = BTreeMap::new();
    for (&(i, j, d), (sq, _)) in &spaces {
        if sq.ngens() == 0 {
            continue;
        }
        let rg = c.rank(objs[i].source, objs[j].source, d);
        let rh = c.rank(objs[i].target, objs[j].target, d);
        let g1: Vec<Vec<Int>> = (0..sq.ngens()).map(|k| sq.generator(k)[..rg].to_vec()).collect();
        let g2: Vec<Vec<Int>> = (0..sq.ngens()).map(|k| sq.generator(k)[rg..].to_vec()).collect();
        m1.insert((i, j, d), IntMatrix::from_cols(rg, &g1));
        m2.insert((i, j, d), IntMatrix::from_cols(rh, &g2));
    }
    let p1 = DgFunctor { source: mc_arc.clone(), target: target.clone(), objects: objs.iter().map(|o| o.source).collect(), maps: m1 };
    let p2 = DgFunctor { source: mc_arc, target, objects: objs.iter().map(|o| o.target).collect(), maps: m2 };
    Ok((mc, p1, p2))
}

/// Adjoins objects `(j, p)` for closed degree-0 idempotents `p ∈ C⁰(j,j)`;
/// homs are the two-sided compressions `p′∘C(j,j′)∘p`.
pub fn karoubi_extend(c: &DgCategory, idempotents: &[(usize, Vec<Int>)]) -> Result<DgCategory, DgError> {
    if !c.is_torsion_free() {
        return Err(DgError::Hypothesis("karoubi_extend requires torsion-free homs".into()));
    }
    let n = c.num_objects();
    for (k, (j, p)) in idempotents.iter().enumerate() {
        if *j >= n {
            return Err(StructuralError::ObjectIndex(*j).into());
        }
        if p.len() != c.rank(*j, *j, 0) {
            return Err(StructuralError::Length { context: format!("idempotent {k}"), expected: c.rank(*j, *j, 0), found: p.len() }.into());
        }
        if !is_zero_vec(&c.delta(*j, *j, 0, p)) {
            return Err(DgError::Hypothesis(format!("idempotent {k} is not closed")));
        }
        if c.compose((*j, *j, *j), 0, p, 0, p) != *p {
            return Err(DgError::Hypothesis(format!("idempotent {k} does not satisfy p∘p = p")));
        }
    }
    // all objects: originals with p = id, then the new ones
    let mut base: Vec<(usize, Vec<Int>)> = (0..n).map(|x| (x, c.identity(x).to_vec())).collect();
    base.extend(idempotents.iter().cloned());
    let mut names = c.objects.clone();
    for (k, (j, _)) in idempotents.iter().enumerate() {
        names.push(format!("({},p{k})", c.objects[*j]));
    }
    let mut spaces = BTreeMap::new();
    for (i, (ji, pi)) in base.iter().enumerate() {
        for (k, (jk, pk)) in base.iter().enumerate() {
            for d in c.hom_degrees(*ji, *jk) {
                let r = c.rank(*ji, *jk, d);
                let imgs = (0..r).map(|t| {
                    let x = c.compose((*ji, *ji, *jk), d, &unit_vec(r, t), 0, pi);
                    c.compose((*ji, *jk, *jk), 0, pk, d, &x)
                });
                let top = Lattice::span(r, imgs);
                spaces.insert((i, k, d), (Subquotient::new(top, Lattice::zero(r)), c.hom(*ji, *jk, d).unwrap().labels.clone()));
            }
        }
    }
    let base2 = base.clone();
    let model = SubquotientModel {
        objects: names,
        spaces,
        delta: Box::new(move |(i, k, d), v| c.delta(base[i].0, base[k].0, d, v)),
        compose: Box::new(move |(i, k, l), b, v, a, u| c.compose((base2[i].0, base2[k].0, base2[l].0), b, v, a, u)),
        identity: Box::new(move |i| if i < n { c.identity(i).to_vec() } else { idempotents[i - n].1.clone() }),
    };
    Ok(build_from_subquotients(model)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlin::{int, ints};

    /// One object `e`, `C^0 = Z·id`, `C^{-1} = Z·u`, `δu = k·id`, `u∘u = 0`.
    pub(crate) fn delta_u(k: i64) -> DgCategory {
        let mut b = DgCategory::builder(vec!["e"]);
        b.hom(0, 0, 0, HomSpace::free(vec!["id"]));
        b.hom(0, 0, -1, HomSpace::free(vec!["u"]));
        b.differential(0, 0, -1, IntMatrix::from_rows(&[vec![k]]));
        b.compose((0, 0, 0), (0, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (-1, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (0, 0), (-1, 0), 0, int(1));
        b.identity(0, ints(&[1]));
        b.build().unwrap()
    }

    fn arrow_cat() -> AdditiveCategoryData {
        AdditiveCategoryData::path_category(vec!["X", "B", "Z"], &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn s_of_a_is_valid() {
        let a = arrow_cat();
        let c = build_s(&a);
        assert!(validate_dg(&c).is_valid());
        assert_eq!(c.rank(0, 2, 0), 1);
        assert!(c.is_negative());
    }

    #[test]
    fn unit_differential_violation() {
        let mut b = DgCategory::builder(vec!["e"]);
        b.hom(0, 0, 0, HomSpace::free(vec!["id"]));
        b.hom(0, 0, 1, HomSpace::free(vec!["t"]));
        b.differential(0, 0, 0, IntMatrix::from_rows(&[vec![1]]));
        b.compose((0, 0, 0), (0, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (1, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (0, 0), (1, 0), 0, int(1));
        b.identity(0, ints(&[1]));
        let c = b.build().unwrap();
        let r = validate_dg(&c);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::UnitDifferential { .. })));
    }

    #[test]
    fn delta_u_category() {
        for k in [1, 2] {
            let c = delta_u(k);
            assert!(validate_dg(&c).is_valid());
            assert!(validate_dg(&opposite(&c)).is_valid());
            let h = homotopy_category(&c);
            let g = crate::intlin::FGAbGroup::from_orders(h.category().orders(0, 0, 0));
            if k == 1 {
                assert!(g.is_zero());
            } else {
                assert_eq!(g.torsion, ints(&[2]));
            }
        }
    }

    #[test]
    fn truncation_of_delta_u() {
        let c = delta_u(2);
        let (c0, f) = truncate_homs(&c, 0).unwrap();
        assert!(validate_dg(&c0).is_valid());
        assert!(f.validate().is_empty());
        assert_eq!(c0.orders(0, 0, 0), &ints(&[2])[..]);
        let (c1, _) = truncate_homs(&c, 1).unwrap();
        assert_eq!(c1, c);
        let (c00, _) = truncate_homs(&c0, 0).unwrap();
        assert_eq!(c00, c0);
    }

    #[test]
    fn bb_two_term_example() {
        // X = (Z --2--> Z) in degrees -1,0, Y = Z in degree 0: H^0(Y,X) = Z/2
        let a = AdditiveCategoryData::path_category(vec!["z"], &[]).unwrap();
        let mut d = BTreeMap::new();
        d.insert((0, 0), ints(&[2]));
        let x = AComplex { name: "X".into(), lo: -1, terms: vec![vec![0], vec![0]], d: vec![d] };
        let y = AComplex::singleton("Y", 0, 0);
        let c = build_bb(&a, &[x, y]).unwrap();
        assert!(validate_dg(&c).is_valid());
        let h = homotopy_category(&c);
        let g = crate::intlin::FGAbGroup::from_orders(h.category().orders(1, 0, 0));
        assert_eq!(g.torsion, ints(&[2]));
        assert!(check_homotopy_composition(&c).is_ok());
        let neg = negative_part(&c);
        assert!(validate_dg(&neg).is_valid());
        assert!(neg.is_negative());
        assert!(!c.is_negative());
    }

    #[test]
    fn karoubi_diagonal() {
        // End(j) = Z e1 ⊕ Z e2 with orthogonal idempotents
        let mut b = DgCategory::builder(vec!["j"]);
        b.hom(0, 0, 0, HomSpace::free(vec!["e1", "e2"]));
        b.compose((0, 0, 0), (0, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (0, 1), (0, 1), 1, int(1));
        b.identity(0, ints(&[1, 1]));
        let c = b.build().unwrap();
        assert!(validate_dg(&c).is_valid());
        let k = karoubi_extend(&c, &[(0, ints(&[1, 0])), (0, ints(&[0, 0])), (0, ints(&[1, 1]))]).unwrap();
        assert!(validate_dg(&k).is_valid());
        assert_eq!(k.rank(1, 1, 0), 1);
        assert_eq!(k.rank(2, 2, 0), 0);
        assert_eq!(k.rank(3, 3, 0), 2);
        assert!(karoubi_extend(&c, &[(0, ints(&[2, 0]))]).is_err());
    }

    #[test]
    fn closed_morphisms_identity() {
        let a = arrow_cat();
        let c = build_s(&a);
        let objs = vec![ClosedMorphismObject { source: 0, target: 0, f: c.identity(0).to_vec() }, ClosedMorphismObject { source: 0, target: 1, f: ints(&[1]) }];
        let (mc, p1, p2) = closed_morphism_category(&c, &objs).unwrap();
        assert!(validate_dg(&mc).is_valid());
        assert!(p1.validate().is_empty());
        assert!(p2.validate().is_empty());
        assert_eq!(mc.rank(0, 0, 0), 1);
    }

    #[test]
    fn opposite_involution() {
        let c = delta_u(2);
        assert_eq!(opposite(&opposite(&c)), c);
    }
}
