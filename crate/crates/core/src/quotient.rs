//! Drinfeld quotient `C/B` of a bounded negative DG category by a full
//! subcategory, materialized on a degree window.
//!
//! A basis word from `X` to `Y` is `f_j ε f_{j−1} … ε f_0` through killed
//! objects `b_1, …, b_j`, with `f_m` a basis element of `C^{a_m}(o_m, o_{m+1})`
//! (`o_0 = X`, `o_{j+1} = Y`) and degree `Σ a_m − j`. The differential is the
//! Leibniz rule across the written word with `dε_b = id_b`: removing an `ε`
//! composes its two neighbours in `C`. Composition concatenates words and
//! composes the two touching factors.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::dgcat::{truncate_homs_unchecked, DgCategory, DgError, DgFunctor, HomKey, HomSpace, StructuralError};
use crate::intlin::{unit_vec, FGAbGroup, Int, IntMatrix};

/// Objects and factor degrees of a family of words; the basis of a shape is
/// the tensor product of the factor bases.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    /// `o_0, …, o_{j+1}`.
    pub objects: Vec<usize>,
    /// `a_0, …, a_j`.
    pub degrees: Vec<i32>,
}

impl Shape {
    pub fn length(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn degree(&self) -> i32 {
        self.degrees.iter().sum::<i32>() - self.length() as i32
    }

    fn ranks(&self, c: &DgCategory) -> Vec<usize> {
        (0..self.degrees.len()).map(|m| c.rank(self.objects[m], self.objects[m + 1], self.degrees[m])).collect()
    }
}

/// Word bases of every materialized hom space.
#[derive(Clone, Debug, Default)]
pub struct QuotientHomBasis {
    /// `(X, Y, n)` → shapes in basis order with their offsets and sizes.
    pub shapes: BTreeMap<HomKey, Vec<(Shape, usize, usize)>>,
}

impl QuotientHomBasis {
    pub fn word_count(&self, k: &HomKey) -> usize {
        self.shapes.get(k).map_or(0, |v| v.iter().map(|e| e.2).sum())
    }

    /// Total word count per degree.
    pub fn counts_by_degree(&self) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for k in self.shapes.keys() {
            *out.entry(k.2).or_insert(0) += self.word_count(k);
        }
        out
    }
}

/// `C/B` on the window `[lo, hi]` with the quotient functor `C → C/B`.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub category: DgCategory,
    pub functor: DgFunctor,
    pub killed: Vec<usize>,
    pub window: (i32, i32),
    /// Word bases in degrees `[lo, 0]`, before the bottom degree is divided
    /// by coboundaries.
    pub basis: QuotientHomBasis,
}

struct Words<'a> {
    c: &'a DgCategory,
    shapes: BTreeMap<HomKey, Vec<(Shape, usize, Vec<usize>)>>,
    index: HashMap<Shape, (HomKey, usize, Vec<usize>)>,
    ranks: BTreeMap<HomKey, usize>,
}

impl<'a> Words<'a> {
    fn enumerate(c: &'a DgCategory, killed: &[usize], bottom: i32) -> Self {
        let n = c.num_objects();
        let mut shapes: BTreeMap<HomKey, Vec<(Shape, usize, Vec<usize>)>> = BTreeMap::new();
        // depth-first over o_0, a_0, o_1, a_1, …
        let mut stack: Vec<Shape> = (0..n).map(|x| Shape { objects: vec![x], degrees: Vec::new() }).collect();
        while let Some(s) = stack.pop() {
            let last = *s.objects.last().unwrap();
            let j = s.degrees.len() as i32;
            let partial: i32 = s.degrees.iter().sum();
            for a in bottom..=0 {
                // remaining factors have degree ≤ 0; finishing now gives the largest degree
                if partial + a - j < bottom {
                    continue;
                }
                for y in 0..n {
                    if c.rank(last, y, a) == 0 {
                        continue;
                    }
                    let mut t = s.clone();
                    t.objects.push(y);
                    t.degrees.push(a);
                    shapes.entry((t.objects[0], y, t.degree())).or_default().push((t.clone(), 0, Vec::new()));
                    // continue through y with one more ε, if y is killed
                    if killed.contains(&y) && partial + a - (j + 1) >= bottom {
                        stack.push(t);
                    }
                }
            }
        }
        let mut index = HashMap::new();
        let mut ranks = BTreeMap::new();
        for (k, v) in shapes.iter_mut() {
            v.sort_by(|a, b| a.0.cmp(&b.0));
            let mut off = 0;
            for (s, o, r) in v.iter_mut() {
                *o = off;
                *r = s.ranks(c);
                off += r.iter().product::<usize>();
                index.insert(s.clone(), (*k, *o, r.clone()));
            }
            ranks.insert(*k, off);
        }
        Words { c, shapes, index, ranks }
    }

    fn rank(&self, k: &HomKey) -> usize {
        self.ranks.get(k).copied().unwrap_or(0)
    }

    /// Flat index of factor indices `ix` (`ix[0]` is the least significant).
    fn flat(ranks: &[usize], ix: &[usize]) -> usize {
        let mut out = 0;
        for m in (0..ranks.len()).rev() {
            out = out * ranks[m] + ix[m];
        }
        out
    }

    fn unflat(ranks: &[usize], mut k: usize) -> Vec<usize> {
        ranks
            .iter()
            .map(|&r| {
                let v = k % r;
                k /= r;
                v
            })
            .collect()
    }

    fn position(&self, s: &Shape, ix: &[usize]) -> Option<(HomKey, usize)> {
        let (k, off, ranks) = self.index.get(s)?;
        Some((*k, off + Self::flat(ranks, ix)))
    }

    fn label(&self, s: &Shape, ix: &[usize]) -> String {
        let mut parts = Vec::new();
        for m in (0..s.degrees.len()).rev() {
            let h = self.c.hom(s.objects[m], s.objects[m + 1], s.degrees[m]).unwrap();
            parts.push(h.labels[ix[m]].clone());
            if m > 0 {
                parts.push(format!("ε{}", self.c.objects()[s.objects[m]]));
            }
        }
        parts.join("·")
    }

    /// `d` of one basis word, as `(target index, coefficient)` pairs in degree `n + 1`.
    fn differential(&self, s: &Shape, ix: &[usize]) -> Vec<(usize, Int)> {
        let c = self.c;
        let j = s.length();
        let mut out = Vec::new();
        let sgn = |e: i32| if e.rem_euclid(2) == 0 { Int::one() } else { -Int::one() };
        for i in 0..=j {
            let (x, y, a) = (s.objects[i], s.objects[i + 1], s.degrees[i]);
            let v = c.delta(x, y, a, &unit_vec(c.rank(x, y, a), ix[i]));
            if v.iter().all(|t| t.is_zero()) {
                continue;
            }
            let e: i32 = s.degrees[i + 1..].iter().sum::<i32>() + (j - i) as i32;
            let mut t = s.clone();
            t.degrees[i] += 1;
            for (l, coef) in v.iter().enumerate() {
                if coef.is_zero() {
                    continue;
                }
                let mut ix2 = ix.to_vec();
                ix2[i] = l;
                if let Some((_, p)) = self.position(&t, &ix2) {
                    out.push((p, sgn(e) * coef));
                }
            }
        }
        for k in 1..=j {
            let (x, y, z) = (s.objects[k - 1], s.objects[k], s.objects[k + 1]);
            let (a0, a1) = (s.degrees[k - 1], s.degrees[k]);
            let v = c.compose((x, y, z), a1, &unit_vec(c.rank(y, z, a1), ix[k]), a0, &unit_vec(c.rank(x, y, a0), ix[k - 1]));
            if v.iter().all(|t| t.is_zero()) {
                continue;
            }
            let e: i32 = s.degrees[k..].iter().sum::<i32>() + (j - k) as i32;
            let mut objects = s.objects.clone();
            objects.remove(k);
            let mut degrees = s.degrees.clone();
            degrees[k - 1] = a0 + a1;
            degrees.remove(k);
            let t = Shape { objects, degrees };
            for (l, coef) in v.iter().enumerate() {
                if coef.is_zero() {
                    continue;
                }
                let mut ix2 = ix.to_vec();
                ix2[k - 1] = l;
                ix2.remove(k);
                if let Some((_, p)) = self.position(&t, &ix2) {
                    out.push((p, sgn(e) * coef));
                }
            }
        }
        out
    }

    /// `w2 ∘ w1` of two basis words.
    fn compose(&self, s1: &Shape, ix1: &[usize], s2: &Shape, ix2: &[usize]) -> Vec<(usize, Int)> {
        let c = self.c;
        let j1 = s1.length();
        let (x, y, z) = (s1.objects[j1], s2.objects[0], s2.objects[1]);
        let (a, b) = (s1.degrees[j1], s2.degrees[0]);
        let v = c.compose((x, y, z), b, &unit_vec(c.rank(y, z, b), ix2[0]), a, &unit_vec(c.rank(x, y, a), ix1[j1]));
        let mut objects = s1.objects[..=j1].to_vec();
        objects.extend_from_slice(&s2.objects[1..]);
        let mut degrees = s1.degrees[..j1].to_vec();
        degrees.push(a + b);
        degrees.extend_from_slice(&s2.degrees[1..]);
        let t = Shape { objects, degrees };
        let mut out = Vec::new();
        for (l, coef) in v.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let mut ix = ix1[..j1].to_vec();
            ix.push(l);
            ix.extend_from_slice(&ix2[1..]);
            if let Some((_, p)) = self.position(&t, &ix) {
                out.push((p, coef.clone()));
            }
        }
        out
    }

    fn basis(&self, k: &HomKey) -> Vec<(&Shape, Vec<usize>)> {
        let mut out = Vec::new();
        for (s, _, r) in self.shapes.get(k).map_or(&[][..], |v| &v[..]) {
            let total: usize = r.iter().product();
            for f in 0..total {
                out.push((s, Self::unflat(r, f)));
            }
        }
        out
    }
}

/// `C/B` materialized on the window `[lo, hi]`, `lo ≤ hi ≤ 0`. Degrees in
/// `(lo, 0]` are the word complexes; degree `lo` is divided by the
/// coboundaries from degree `lo − 1`, so `H^i` is exact for `lo ≤ i ≤ hi`.
pub fn dg_quotient(c: &DgCategory, killed: &[usize], window: (i32, i32)) -> Result<Quotient, DgError> {
    let (lo, hi) = window;
    if lo > hi || hi > 0 {
        return Err(DgError::Hypothesis(format!("window [{lo},{hi}] must satisfy lo ≤ hi ≤ 0")));
    }
    if !c.is_negative() {
        return Err(DgError::Hypothesis("dg_quotient requires a negative category".into()));
    }
    if !c.is_torsion_free() {
        return Err(DgError::Hypothesis("dg_quotient requires torsion-free hom groups".into()));
    }
    for &b in killed {
        if b >= c.num_objects() {
            return Err(StructuralError::ObjectIndex(b).into());
        }
    }
    let mut killed: Vec<usize> = killed.to_vec();
    killed.sort();
    killed.dedup();
    let bottom = lo - 1;
    let w = Words::enumerate(c, &killed, bottom);
    let mut b = DgCategory::builder(c.objects().to_vec());
    for (k, v) in &w.shapes {
        let mut labels = Vec::new();
        for (s, _, r) in v {
            let total: usize = r.iter().product();
            for f in 0..total {
                labels.push(w.label(s, &Words::unflat(r, f)));
            }
        }
        b.hom(k.0, k.1, k.2, HomSpace::free(labels));
    }
    for k in w.shapes.keys() {
        let tk = (k.0, k.1, k.2 + 1);
        let tr = w.rank(&tk);
        if tr == 0 {
            continue;
        }
        let basis = w.basis(k);
        let mut m = IntMatrix::zeros(tr, basis.len());
        for (col, (s, ix)) in basis.iter().enumerate() {
            for (row, coef) in w.differential(s, ix) {
                *m.get_mut(row, col) += coef;
            }
        }
        if !m.is_zero() {
            b.differential(k.0, k.1, k.2, m);
        }
    }
    let keys: Vec<HomKey> = w.shapes.keys().cloned().collect();
    for k1 in &keys {
        let b1 = w.basis(k1);
        for k2 in keys.iter().filter(|k2| k2.0 == k1.1) {
            if k1.2 + k2.2 < bottom {
                continue;
            }
            let b2 = w.basis(k2);
            for (u, (s1, ix1)) in b1.iter().enumerate() {
                for (v, (s2, ix2)) in b2.iter().enumerate() {
                    for (p, coef) in w.compose(s1, ix1, s2, ix2) {
                        b.compose((k1.0, k1.1, k2.1), (k1.2, u), (k2.2, v), p, coef);
                    }
                }
            }
        }
    }
    for x in 0..c.num_objects() {
        let s = Shape { objects: vec![x, x], degrees: vec![0] };
        let key = (x, x, 0);
        let mut id = vec![Int::zero(); w.rank(&key)];
        for (l, coef) in c.identity(x).iter().enumerate() {
            if !coef.is_zero() {
                if let Some((_, p)) = w.position(&s, &[l]) {
                    id[p] = coef.clone();
                }
            }
        }
        b.identity(x, id);
    }
    let window_cat = b.build()?;
    let (category, trunc) = truncate_homs_unchecked(&window_cat, (-lo) as u32);
    // C → C/B: a basis element of C is the length-0 word on it
    let mut maps = BTreeMap::new();
    for (&(x, y, d), h) in c.homs() {
        let Some(t) = trunc.maps.get(&(x, y, d)) else { continue };
        let s = Shape { objects: vec![x, y], degrees: vec![d] };
        let mut incl = IntMatrix::zeros(w.rank(&(x, y, d)), h.rank());
        for l in 0..h.rank() {
            if let Some((_, p)) = w.position(&s, &[l]) {
                *incl.get_mut(p, l) += Int::one();
            }
        }
        let m = t.mul(&incl);
        if !m.is_zero() {
            maps.insert((x, y, d), m);
        }
    }
    let functor = DgFunctor { source: Arc::new(c.clone()), target: Arc::new(category.clone()), objects: (0..c.num_objects()).collect(), maps };
    let shapes = w
        .shapes
        .iter()
        .filter(|(k, _)| k.2 >= lo)
        .map(|(&k, v)| (k, v.iter().map(|(s, o, r)| (s.clone(), *o, r.iter().product())).collect()))
        .collect();
    Ok(Quotient { category, functor, killed, window, basis: QuotientHomBasis { shapes } })
}

/// `H^i((C/B)(X, Y))`, refusing degrees outside the materialized window.
pub fn quotient_hom_h(q: &Quotient, x: usize, y: usize, i: i32) -> Result<FGAbGroup, DgError> {
    let (lo, hi) = q.window;
    if i < lo || i > hi {
        return Err(DgError::Hypothesis(format!("degree {i} lies outside the window [{lo},{hi}]")));
    }
    let n = q.category.num_objects();
    if x >= n || y >= n {
        return Err(StructuralError::ObjectIndex(x.max(y)).into());
    }
    let hc = q.category.hom_complex(x, y);
    if i < hc.lo() || i > hc.hi() {
        return Ok(FGAbGroup::zero());
    }
    Ok(hc.cohomology_group(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgcat::{build_s, truncate_homs, validate_dg, AdditiveCategoryData};
    use crate::gen;
    use crate::twisted::{is_zero_in_tr, TwistedComplex};

    fn arrow_s() -> DgCategory {
        build_s(&AdditiveCategoryData::path_category(vec!["X", "B", "Z"], &[(0, 1), (1, 2)]).unwrap())
    }

    #[test]
    fn empty_kill_is_truncation() {
        let c = gen::delta_u_category(2);
        let q = dg_quotient(&c, &[], (-3, 0)).unwrap();
        let (t, _) = truncate_homs(&c, 3).unwrap();
        assert_eq!(q.category, t);
        let c = arrow_s();
        let q = dg_quotient(&c, &[], (-2, 0)).unwrap();
        assert_eq!(q.category.homs().count(), c.homs().count());
    }

    #[test]
    fn through_b_composite_dies() {
        let c = arrow_s();
        let q = dg_quotient(&c, &[1], (-6, 0)).unwrap();
        assert!(validate_dg(&q.category).is_valid());
        assert!(q.category.is_negative());
        assert!(q.functor.validate().is_empty(), "{:?}", q.functor.validate());
        assert_eq!(q.category.rank(0, 2, 0), c.rank(0, 2, 0));
        assert!(quotient_hom_h(&q, 0, 2, 0).unwrap().is_zero());
        assert_eq!(quotient_hom_h(&q, 0, 0, 0).unwrap(), FGAbGroup::free(1));
        assert_eq!(quotient_hom_h(&q, 2, 2, 0).unwrap(), FGAbGroup::free(1));
        assert!(quotient_hom_h(&q, 1, 1, 0).unwrap().is_zero());
        assert!(quotient_hom_h(&q, 0, 2, 1).is_err());
        assert!(quotient_hom_h(&q, 0, 2, -7).is_err());
        assert!(is_zero_in_tr(&q.category, &TwistedComplex::singleton(1, 0)).is_some());
        assert!(is_zero_in_tr(&q.category, &TwistedComplex::singleton(0, 0)).is_none());
        assert!(q.basis.word_count(&(0, 2, -1)) > 0);
    }

    #[test]
    fn killed_delta_u_object() {
        let c = gen::delta_u_category(3);
        let q = dg_quotient(&c, &[0], (-6, 0)).unwrap();
        assert!(validate_dg(&q.category).is_valid());
        assert!(is_zero_in_tr(&q.category, &TwistedComplex::singleton(0, 2)).is_some());
        for i in -6..=0 {
            assert!(quotient_hom_h(&q, 0, 0, i).unwrap().is_zero(), "degree {i}");
        }
    }

    #[test]
    fn refusals() {
        let c = gen::delta_u_category(2);
        assert!(dg_quotient(&c, &[0], (0, 1)).is_err());
        assert!(dg_quotient(&c, &[0], (-1, -2)).is_err());
        assert!(dg_quotient(&c, &[5], (-2, 0)).is_err());
        let (t, _) = truncate_homs(&c, 0).unwrap();
        assert!(dg_quotient(&t, &[0], (-2, 0)).is_err());
    }
}
