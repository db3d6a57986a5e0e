//! Enhanceable realizations: DG functors from a DG category into complexes of
//! finitely generated abelian groups, their canonical truncations, the
//! filtered total complex of a twisted complex and its spectral sequence.
//!
//! Index dictionary. The engine filters the total complex by slot index
//! (`F^p`, decreasing) and stores `E_r^{p,q}` with `p` the slot index and
//! `q` the internal degree, so `d_r: E_r^{p,q} → E_r^{p+r,q−r+1}`. The weight
//! filtration `W_b` (termwise `τ_{≤b}`) is its décalage: `W_b H^s = F^{s−b} H^s`,
//! and the weight-indexed page `E_n` corresponds to the engine page `E_{n+1}`
//! at the same bidegree.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::dgcat::{bb_layout, opposite, truncate_homs, AComplex, AdditiveCategoryData, DgCategory, DgError, DgFunctor, HomKey, StructuralError};
use crate::intlin::{image_membership, rational_trace, to_rational, unit_vec, zero_vec, FGAbComplex, FGAbGroup, Int, IntMatrix, Lattice, Rat, Subquotient};
use crate::twisted::{check_structure, pretr_differential, pretr_of_functor, sign, HomBlocks, Slot, TwistedComplex, TwistedMorphism};

/// A homogeneous map of complexes of degree `degree`; `blocks[k]` maps source
/// degree `k` to target degree `k + degree`. Missing blocks are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMap {
    pub degree: i32,
    pub blocks: BTreeMap<i32, IntMatrix>,
}

impl GradedMap {
    pub fn zero(degree: i32) -> Self {
        GradedMap { degree, blocks: BTreeMap::new() }
    }

    pub fn identity(x: &FGAbComplex) -> Self {
        let blocks = x.degrees().filter(|&k| x.rank(k) > 0).map(|k| (k, IntMatrix::identity(x.rank(k)))).collect();
        GradedMap { degree: 0, blocks }
    }

    pub fn block(&self, k: i32, x: &FGAbComplex, y: &FGAbComplex) -> IntMatrix {
        self.blocks.get(&k).cloned().unwrap_or_else(|| IntMatrix::zeros(y.rank(k + self.degree), x.rank(k)))
    }

    /// `g∘f` for `f: x → y`, `g: y → z`.
    pub fn compose(g: &GradedMap, f: &GradedMap, z: &FGAbComplex) -> GradedMap {
        let mut blocks = BTreeMap::new();
        for (&k, fm) in &f.blocks {
            if let Some(gm) = g.blocks.get(&(k + f.degree)) {
                blocks.insert(k, gm.mul(fm));
            }
        }
        GradedMap { degree: f.degree + g.degree, blocks }.reduced(z)
    }

    pub fn add_scaled(&mut self, k: &Int, other: &GradedMap, x: &FGAbComplex, y: &FGAbComplex) {
        assert_eq!(self.degree, other.degree);
        for (&deg, m) in &other.blocks {
            let cur = self.block(deg, x, y);
            self.blocks.insert(deg, cur.add(&m.scaled(k)));
        }
    }

    /// Entries reduced modulo the target orders, zero blocks dropped.
    pub fn reduced(mut self, y: &FGAbComplex) -> GradedMap {
        let d = self.degree;
        self.blocks.retain(|&k, m| {
            let o = y.orders_at(k + d);
            if o.len() != m.rows() {
                return m.rows() > 0 && m.cols() > 0;
            }
            for i in 0..m.rows() {
                if !o[i].is_zero() {
                    for j in 0..m.cols() {
                        let v = m.get(i, j).mod_floor(&o[i]);
                        m.set(i, j, v);
                    }
                }
            }
            !m.is_zero()
        });
        self
    }

    /// `d_y∘f − (−1)^deg f∘d_x`.
    pub fn differential(&self, x: &FGAbComplex, y: &FGAbComplex) -> GradedMap {
        let l = self.degree;
        let mut blocks: BTreeMap<i32, IntMatrix> = BTreeMap::new();
        let s = -sign(l);
        for (&k, m) in &self.blocks {
            // d_y ∘ f : k → k+l+1
            let dm = y.differential(k + l).mul(m);
            add_block(&mut blocks, k, dm);
            // f ∘ d_x : k−1 → k+l
            let md = m.mul(&x.differential(k - 1)).scaled(&s);
            add_block(&mut blocks, k - 1, md);
        }
        GradedMap { degree: l + 1, blocks }.reduced(y)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|m| m.is_zero())
    }
}

fn add_block(blocks: &mut BTreeMap<i32, IntMatrix>, k: i32, m: IntMatrix) {
    if m.rows() == 0 || m.cols() == 0 {
        return;
    }
    match blocks.get_mut(&k) {
        Some(old) => *old = old.add(&m),
        None => {
            blocks.insert(k, m);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variance {
    Covariant,
    Contravariant,
}

/// A DG functor into complexes of f.g. abelian groups. Contravariant functors
/// are stored as covariant functors on the opposite category (`source`).
#[derive(Clone, Debug)]
pub struct DGFunctorData {
    pub source: Arc<DgCategory>,
    pub variance: Variance,
    pub objects: Vec<FGAbComplex>,
    /// `(x, y, d)` of `source` → image of each basis element.
    pub maps: BTreeMap<HomKey, Vec<GradedMap>>,
}

impl DGFunctorData {
    pub fn covariant(source: Arc<DgCategory>, objects: Vec<FGAbComplex>, maps: BTreeMap<HomKey, Vec<GradedMap>>) -> Self {
        DGFunctorData { source, variance: Variance::Covariant, objects, maps }
    }

    /// `maps` are keyed by homs `(x, y, d)` of `c`; each image goes
    /// `F(y) → F(x)`. Stored on `opposite(c)`.
    pub fn contravariant(c: &DgCategory, objects: Vec<FGAbComplex>, maps: BTreeMap<HomKey, Vec<GradedMap>>) -> Self {
        let maps = maps.into_iter().map(|((x, y, d), v)| ((y, x, d), v)).collect();
        DGFunctorData { source: Arc::new(opposite(c)), variance: Variance::Contravariant, objects, maps }
    }

    pub fn apply(&self, x: usize, y: usize, d: i32, v: &[Int]) -> GradedMap {
        let mut out = GradedMap::zero(d);
        if let Some(imgs) = self.maps.get(&(x, y, d)) {
            for (k, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    out.add_scaled(c, &imgs[k], &self.objects[x], &self.objects[y]);
                }
            }
        }
        out.reduced(&self.objects[y])
    }

    pub fn basis_image(&self, x: usize, y: usize, d: i32, k: usize) -> GradedMap {
        self.apply(x, y, d, &unit_vec(self.source.rank(x, y, d), k))
    }

    /// Brings a twisted complex over the declared source to the covariant
    /// source (the dual complex for contravariant functors).
    pub fn adjust_complex(&self, x: &TwistedComplex) -> TwistedComplex {
        match self.variance {
            Variance::Covariant => x.clone(),
            Variance::Contravariant => dual_twisted(x),
        }
    }

    pub fn adjust_morphism(&self, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> TwistedMorphism {
        match self.variance {
            Variance::Covariant => f.clone(),
            Variance::Contravariant => dual_morphism(x, y, f),
        }
    }

    /// Same functor with new object images and maps, keeping source/variance.
    fn with(&self, objects: Vec<FGAbComplex>, maps: BTreeMap<HomKey, Vec<GradedMap>>) -> Self {
        DGFunctorData { source: self.source.clone(), variance: self.variance, objects, maps }
    }
}

/// `ε(i,j) = −(−1)^{z(z−1)/2}`, `z = i − j`.
fn dual_arrow_sign(i: i32, j: i32) -> Int {
    let z = i - j;
    -sign((z * (z - 1) / 2).rem_euclid(2))
}

/// `ζ = (−1)^{i + l(i+j) + ij + i(i−1)/2 + j(j−1)/2}`.
fn dual_morphism_sign(i: i32, j: i32, l: i32) -> Int {
    let e = i + l * (i + j) + i * j + i * (i - 1) / 2 + j * (j - 1) / 2;
    sign(e.rem_euclid(2))
}

/// The dual twisted complex over the opposite category: slot indices negated,
/// arrows reversed with a sign.
pub fn dual_twisted(x: &TwistedComplex) -> TwistedComplex {
    let slots = x.slots.iter().map(|s| Slot { index: -s.index, object: s.object }).collect();
    let arrows = x
        .arrows
        .iter()
        .map(|(&(s, t), v)| {
            let e = dual_arrow_sign(x.slots[s].index, x.slots[t].index);
            ((t, s), v.iter().map(|a| a * &e).collect())
        })
        .collect();
    TwistedComplex { slots, arrows }
}

/// `f^op: y^∨ → x^∨` for `f: x → y`.
pub fn dual_morphism(x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> TwistedMorphism {
    let comps = f
        .comps
        .iter()
        .map(|(&(s, t), v)| {
            let z = dual_morphism_sign(x.slots[s].index, y.slots[t].index, f.degree);
            ((t, s), v.iter().map(|a| a * &z).collect())
        })
        .collect();
    TwistedMorphism { degree: f.degree, comps }
}

/// Structural check plus all DG-functor axioms; returns the list of violations.
pub fn validate_functor(f: &DGFunctorData) -> Result<Vec<String>, StructuralError> {
    let c = &f.source;
    if f.objects.len() != c.num_objects() {
        return Err(StructuralError::Length { context: "object images".into(), expected: c.num_objects(), found: f.objects.len() });
    }
    for (&(x, y, d), imgs) in &f.maps {
        if x >= c.num_objects() || y >= c.num_objects() {
            return Err(StructuralError::ObjectIndex(x.max(y)));
        }
        if imgs.len() != c.rank(x, y, d) {
            return Err(StructuralError::Length { context: format!("images of hom ({x},{y},{d})"), expected: c.rank(x, y, d), found: imgs.len() });
        }
        for g in imgs {
            if g.degree != d {
                return Err(StructuralError::Invalid(format!("image on hom ({x},{y},{d}) has degree {}", g.degree)));
            }
            for (&k, m) in &g.blocks {
                let exp = (f.objects[y].rank(k + d), f.objects[x].rank(k));
                if m.shape() != exp {
                    return Err(StructuralError::Shape { context: format!("image block at degree {k} of hom ({x},{y},{d})"), expected: exp, found: m.shape() });
                }
            }
        }
    }
    let mut errs = Vec::new();
    for (k, o) in f.objects.iter().enumerate() {
        if let Err(e) = o.check() {
            errs.push(format!("object image {k}: {e}"));
        }
    }
    for (&(x, y, d), h) in c.homs() {
        let (fx, fy) = (&f.objects[x], &f.objects[y]);
        for k in 0..h.rank() {
            let e = unit_vec(h.rank(), k);
            let img = f.apply(x, y, d, &e);
            let lhs = f.apply(x, y, d + 1, &c.delta(x, y, d, &e));
            let rhs = img.differential(fx, fy);
            if lhs != rhs {
                errs.push(format!("chain compatibility fails on basis {k} of ({x},{y},{d})"));
            }
            if !h.orders[k].is_zero() {
                let mut t = GradedMap::zero(d);
                t.add_scaled(&h.orders[k], &img, fx, fy);
                if !t.reduced(fy).is_zero() {
                    errs.push(format!("torsion basis {k} of ({x},{y},{d}) maps to a non-torsion map"));
                }
            }
        }
    }
    for x in 0..c.num_objects() {
        let id = f.apply(x, x, 0, c.identity(x));
        if id != GradedMap::identity(&f.objects[x]).reduced(&f.objects[x]) {
            errs.push(format!("F(id) ≠ id at object {x}"));
        }
    }
    let keys: Vec<HomKey> = c.homs().map(|(k, _)| *k).collect();
    for &(x, y, a) in &keys {
        for &(y2, z, b) in &keys {
            if y2 != y {
                continue;
            }
            let (ru, rv) = (c.rank(x, y, a), c.rank(y, z, b));
            for vi in 0..rv {
                for ui in 0..ru {
                    let u = unit_vec(ru, ui);
                    let v = unit_vec(rv, vi);
                    let lhs = f.apply(x, z, a + b, &c.compose((x, y, z), b, &v, a, &u));
                    let rhs = GradedMap::compose(&f.apply(y, z, b, &v), &f.apply(x, y, a, &u), &f.objects[z]);
                    if lhs != rhs {
                        errs.push(format!("F(v∘u) ≠ F(v)∘F(u) at ({x},{y},{z},{a},{b}) basis ({vi},{ui})"));
                    }
                }
            }
        }
    }
    Ok(errs)
}

/// Which canonical truncation to apply objectwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// `τ_{≤b}`
    Below(i32),
    /// `τ_{[a,b]} = τ_{≤b}/τ_{≤a−1}`
    Window(i32, i32),
    /// `X^a/dX^{a−1} → … → ker d^b`
    Canonical(i32, i32),
}

/// Per-degree `(top, bottom)` lattices of a truncation of `x`.
fn truncation_lattices(x: &FGAbComplex, t: Truncation) -> BTreeMap<i32, (Lattice, Lattice)> {
    let mut out = BTreeMap::new();
    if x.orders_at(x.lo()).is_empty() && x.hi() < x.lo() {
        return out;
    }
    for k in x.degrees() {
        let r = x.rank(k);
        if r == 0 {
            continue;
        }
        let rel = x.relations(k);
        let full = Lattice::full(r);
        let ker = x.cycles(k);
        let im = x.boundaries(k);
        let entry = match t {
            Truncation::Below(b) => match k.cmp(&b) {
                std::cmp::Ordering::Less => Some((full, rel)),
                std::cmp::Ordering::Equal => Some((ker, rel)),
                std::cmp::Ordering::Greater => None,
            },
            Truncation::Window(a, b) => {
                if k == a - 1 && a - 1 < b {
                    Some((full, ker))
                } else if k >= a && k < b {
                    Some((full, rel))
                } else if k == b {
                    Some((ker, if a - 1 == b { x.cycles(k) } else { rel }))
                } else {
                    None
                }
            }
            Truncation::Canonical(a, b) => {
                if k == a && a == b {
                    Some((ker, im))
                } else if k == a {
                    Some((full, im))
                } else if k > a && k < b {
                    Some((full, rel))
                } else if k == b {
                    Some((ker, rel))
                } else {
                    None
                }
            }
        };
        if let Some(e) = entry {
            out.insert(k, e);
        }
    }
    out
}

/// A truncated complex together with the subquotient presentation of each
/// degree (in the coordinates of the original complex).
#[derive(Clone, Debug)]
pub struct TruncatedComplex {
    pub complex: FGAbComplex,
    pub pieces: BTreeMap<i32, Subquotient>,
}

pub fn truncate_complex(x: &FGAbComplex, t: Truncation) -> TruncatedComplex {
    let lat = truncation_lattices(x, t);
    let pieces: BTreeMap<i32, Subquotient> = lat.into_iter().map(|(k, (top, bot))| (k, Subquotient::new(top, bot))).filter(|(_, s)| s.ngens() > 0).collect();
    let (Some(&lo), Some(&hi)) = (pieces.keys().next(), pieces.keys().next_back()) else {
        return TruncatedComplex { complex: FGAbComplex::zero(), pieces };
    };
    let empty = |k: i32| -> usize { pieces.get(&k).map_or(0, |s| s.ngens()) };
    let orders = (lo..=hi).map(|k| pieces.get(&k).map_or(Vec::new(), |s| s.orders().to_vec())).collect();
    let ds = (lo..hi)
        .map(|k| match (pieces.get(&k), pieces.get(&(k + 1))) {
            (Some(s), Some(t2)) => s.induced(&x.differential(k), t2).expect("truncation is a subquotient complex"),
            _ => IntMatrix::zeros(empty(k + 1), empty(k)),
        })
        .collect();
    TruncatedComplex { complex: FGAbComplex::new(lo, orders, ds), pieces }
}

/// Map induced on truncations by `g: x → y`; `None` if `g` does not respect
/// them.
pub fn truncate_map(g: &GradedMap, src: &TruncatedComplex, tgt: &TruncatedComplex) -> Option<GradedMap> {
    let mut blocks = BTreeMap::new();
    for (&k, s) in &src.pieces {
        let m = match g.blocks.get(&k) {
            Some(m) => m,
            None => continue,
        };
        if let Some(t) = tgt.pieces.get(&(k + g.degree)) {
            let ind = s.induced(m, t)?;
            if !ind.is_zero() {
                blocks.insert(k, ind);
            }
        }
    }
    Some(GradedMap { degree: g.degree, blocks }.reduced(&tgt.complex))
}

/// Objectwise truncation of a realization. Fails if some morphism image does
/// not preserve the truncation (possible only over non-negative sources).
pub fn truncate_functor(f: &DGFunctorData, t: Truncation) -> Result<(DGFunctorData, Vec<TruncatedComplex>), DgError> {
    let tr: Vec<TruncatedComplex> = f.objects.iter().map(|x| truncate_complex(x, t)).collect();
    let mut maps = BTreeMap::new();
    for (&(x, y, d), imgs) in &f.maps {
        let mut out = Vec::with_capacity(imgs.len());
        for g in imgs {
            out.push(truncate_map(g, &tr[x], &tr[y]).ok_or_else(|| DgError::Hypothesis(format!("morphism image on ({x},{y},{d}) does not preserve the truncation")))?);
        }
        maps.insert((x, y, d), out);
    }
    let objects = tr.iter().map(|t| t.complex.clone()).collect();
    Ok((f.with(objects, maps), tr))
}

/// `(τ_{≤b}F, τ_{[a,b]}F, canonical [a,b]-truncation of F)`.
pub fn truncation_functors(f: &DGFunctorData, a: i32, b: i32) -> Result<(DGFunctorData, DGFunctorData, DGFunctorData), DgError> {
    if a > b {
        return Err(DgError::Hypothesis(format!("truncation window [{a},{b}] is empty")));
    }
    if !f.source.is_negative() {
        return Err(DgError::Hypothesis("truncation functors require a negative source".into()));
    }
    let (le, _) = truncate_functor(f, Truncation::Below(b))?;
    let (win, _) = truncate_functor(f, Truncation::Window(a, b))?;
    let (can, _) = truncate_functor(f, Truncation::Canonical(a, b))?;
    Ok((le, win, can))
}

/// Layout of `T^n = ⊕_s F(P_s)^{n−i_s}`: blocks `(slot, offset, rank)`.
pub type TotalLayout = BTreeMap<i32, Vec<(usize, usize, usize)>>;

/// The total complex of a realization of a twisted complex, filtered by
/// slot index (`stupid`, decreasing) and by termwise `τ_{≤b}` (`weight`,
/// increasing). All lattices contain the relations.
#[derive(Clone, Debug)]
pub struct FilteredComplex {
    pub total: FGAbComplex,
    pub layout: TotalLayout,
    pub stupid: BTreeMap<i32, BTreeMap<i32, Lattice>>,
    pub weight: BTreeMap<i32, BTreeMap<i32, Lattice>>,
}

fn total_layout(objs: &[&FGAbComplex], x: &TwistedComplex) -> (TotalLayout, i32, i32) {
    let mut lo = i32::MAX;
    let mut hi = i32::MIN;
    for (s, sl) in x.slots.iter().enumerate() {
        let o = objs[s];
        for k in o.degrees() {
            if o.rank(k) > 0 {
                lo = lo.min(k + sl.index);
                hi = hi.max(k + sl.index);
            }
        }
    }
    let mut layout = TotalLayout::new();
    if lo > hi {
        return (layout, 0, -1);
    }
    for n in lo..=hi {
        let mut off = 0;
        let mut blocks = Vec::new();
        for (s, sl) in x.slots.iter().enumerate() {
            let r = objs[s].rank(n - sl.index);
            if r > 0 {
                blocks.push((s, off, r));
                off += r;
            }
        }
        layout.insert(n, blocks);
    }
    (layout, lo, hi)
}

fn layout_dim(layout: &TotalLayout, n: i32) -> usize {
    layout.get(&n).map_or(0, |b| b.iter().map(|x| x.2).sum())
}

/// Total complex of `F` on `x` (already over the covariant source).
pub fn totalize(f: &DGFunctorData, x: &TwistedComplex) -> Result<FilteredComplex, DgError> {
    check_structure(&f.source, x)?;
    let objs: Vec<&FGAbComplex> = x.slots.iter().map(|s| &f.objects[s.object]).collect();
    let (layout, lo, hi) = total_layout(&objs, x);
    if lo > hi {
        return Ok(FilteredComplex { total: FGAbComplex::zero(), layout, stupid: BTreeMap::new(), weight: BTreeMap::new() });
    }
    let arrows: Vec<((usize, usize), GradedMap)> = x
        .arrows
        .iter()
        .map(|(&(s, t), q)| ((s, t), f.apply(x.slots[s].object, x.slots[t].object, x.arrow_degree(s, t), q)))
        .collect();
    let mut orders = Vec::new();
    let mut ds = Vec::new();
    for n in lo..=hi {
        let mut o = Vec::new();
        for &(s, _, _) in &layout[&n] {
            o.extend(objs[s].orders_at(n - x.slots[s].index).iter().cloned());
        }
        orders.push(o);
        if n == hi {
            break;
        }
        let mut m = IntMatrix::zeros(layout_dim(&layout, n + 1), layout_dim(&layout, n));
        let find = |n2: i32, s: usize| layout[&n2].iter().find(|b| b.0 == s).map(|b| b.1);
        for &(s, off, _) in &layout[&n] {
            let k = n - x.slots[s].index;
            if let Some(off2) = find(n + 1, s) {
                m.add_block(off2, off, &objs[s].differential(k).scaled(&sign(x.slots[s].index)));
            }
        }
        for ((s, t), g) in &arrows {
            let k = n - x.slots[*s].index;
            if let (Some(off), Some(off2), Some(b)) = (find(n, *s), find(n + 1, *t), g.blocks.get(&k)) {
                m.add_block(off2, off, b);
            }
        }
        ds.push(m);
    }
    let total = FGAbComplex::new(lo, orders, ds);
    // filtrations
    let idx: Vec<i32> = x.indices().into_iter().collect();
    let mut stupid = BTreeMap::new();
    if let (Some(&pmin), Some(&pmax)) = (idx.first(), idx.last()) {
        for p in pmin..=pmax + 1 {
            let mut per_n = BTreeMap::new();
            for n in lo..=hi {
                per_n.insert(n, block_lattice(&total, &layout, x, n, |s, _| if x.slots[s].index >= p { BlockChoice::Full } else { BlockChoice::Rel }));
            }
            stupid.insert(p, per_n);
        }
    }
    let mut wlo = i32::MAX;
    let mut whi = i32::MIN;
    for o in &objs {
        if o.hi() >= o.lo() {
            wlo = wlo.min(o.lo());
            whi = whi.max(o.hi());
        }
    }
    let mut weight = BTreeMap::new();
    if wlo <= whi {
        for b in wlo - 1..=whi {
            let mut per_n = BTreeMap::new();
            for n in lo..=hi {
                per_n.insert(
                    n,
                    block_lattice(&total, &layout, x, n, |s, k| match k.cmp(&b) {
                        std::cmp::Ordering::Less => BlockChoice::Full,
                        std::cmp::Ordering::Equal => BlockChoice::Lat(objs[s].cycles(k)),
                        std::cmp::Ordering::Greater => BlockChoice::Rel,
                    }),
                );
            }
            weight.insert(b, per_n);
        }
    }
    Ok(FilteredComplex { total, layout: layout.clone(), stupid, weight })
}

enum BlockChoice {
    Full,
    Rel,
    Lat(Lattice),
}

fn block_lattice(total: &FGAbComplex, layout: &TotalLayout, x: &TwistedComplex, n: i32, choose: impl Fn(usize, i32) -> BlockChoice) -> Lattice {
    let dim = total.rank(n);
    let orders = total.orders_at(n);
    let mut gens = Vec::new();
    for &(s, off, r) in layout.get(&n).map_or(&[][..], |v| &v[..]) {
        let k = n - x.slots[s].index;
        match choose(s, k) {
            BlockChoice::Full => gens.extend((0..r).map(|j| unit_vec(dim, off + j))),
            BlockChoice::Rel => {}
            BlockChoice::Lat(l) => {
                for b in l.basis() {
                    let mut v = zero_vec(dim);
                    v[off..off + r].clone_from_slice(b);
                    gens.push(v);
                }
            }
        }
    }
    for (j, o) in orders.iter().enumerate() {
        if !o.is_zero() {
            let mut v = zero_vec(dim);
            v[j] = o.clone();
            gens.push(v);
        }
    }
    Lattice::span(dim, gens)
}

/// Total complex of `F` on a twisted complex over the declared source.
pub fn total_complex(f: &DGFunctorData, x: &TwistedComplex) -> Result<FilteredComplex, DgError> {
    if !f.source.is_negative() {
        return Err(DgError::Hypothesis("total_complex requires a negative source".into()));
    }
    totalize(f, &f.adjust_complex(x))
}

/// Chain map `T(x) → T(y)` induced by a closed degree-0 morphism `g`, given
/// over the covariant source.
pub fn total_map(f: &DGFunctorData, x: &TwistedComplex, y: &TwistedComplex, tx: &FilteredComplex, ty: &FilteredComplex, g: &TwistedMorphism) -> BTreeMap<i32, IntMatrix> {
    let mut out = BTreeMap::new();
    let (lo, hi) = (tx.total.lo().min(ty.total.lo()), tx.total.hi().max(ty.total.hi()));
    let comps: Vec<((usize, usize), GradedMap)> = g
        .comps
        .iter()
        .map(|(&(s, t), v)| ((s, t), f.apply(x.slots[s].object, y.slots[t].object, g.degree + x.slots[s].index - y.slots[t].index, v)))
        .collect();
    for n in lo..=hi {
        let mut m = IntMatrix::zeros(ty.total.rank(n), tx.total.rank(n));
        for ((s, t), gm) in &comps {
            let k = n - x.slots[*s].index;
            let src = tx.layout.get(&n).and_then(|b| b.iter().find(|e| e.0 == *s));
            let tgt = ty.layout.get(&n).and_then(|b| b.iter().find(|e| e.0 == *t));
            if let (Some(a), Some(b), Some(blk)) = (src, tgt, gm.blocks.get(&k)) {
                m.add_block(b.1, a.1, blk);
            }
        }
        out.insert(n, m);
    }
    out
}

/// One page of a spectral sequence; entries keyed by `(p, q)`.
#[derive(Clone, Debug)]
pub struct Page {
    pub r: usize,
    pub entries: BTreeMap<(i32, i32), Subquotient>,
    /// `d_r` out of `(p, q)`, in generator coordinates.
    pub differentials: BTreeMap<(i32, i32), IntMatrix>,
}

impl Page {
    pub fn group(&self, p: i32, q: i32) -> FGAbGroup {
        self.entries.get(&(p, q)).map_or_else(FGAbGroup::zero, |s| s.group())
    }

    /// Nonzero groups.
    pub fn groups(&self) -> BTreeMap<(i32, i32), FGAbGroup> {
        self.entries.iter().map(|(&k, s)| (k, s.group())).filter(|(_, g)| !g.is_zero()).collect()
    }

    pub fn differentials_vanish(&self) -> bool {
        self.differentials.values().all(|m| m.is_zero())
    }
}

/// Spectral sequence of a finite decreasing filtration of a complex.
#[derive(Clone, Debug)]
pub struct SpectralSequence {
    /// `pages[r − 1]` is `E_r`.
    pub pages: Vec<Page>,
    /// `E_∞^{p,q}` computed directly from the filtration of cohomology.
    pub limit: BTreeMap<(i32, i32), FGAbGroup>,
    pub abutment: BTreeMap<i32, FGAbGroup>,
    /// `F^p H^n / F^{p+1} H^n` keyed by `(p, n)`, computed inside `H^n`.
    pub graded: BTreeMap<(i32, i32), FGAbGroup>,
    pub p_range: (i32, i32),
}

fn level(total: &FGAbComplex, levels: &BTreeMap<i32, BTreeMap<i32, Lattice>>, p: i32, n: i32) -> Lattice {
    let (pmin, plast) = (*levels.keys().next().unwrap(), *levels.keys().next_back().unwrap());
    if p <= pmin {
        return Lattice::full(total.rank(n));
    }
    if p >= plast {
        return total.relations(n);
    }
    levels[&p].get(&n).cloned().unwrap_or_else(|| total.relations(n))
}

impl SpectralSequence {
    pub fn page(&self, r: usize) -> &Page {
        &self.pages[(r.max(1) - 1).min(self.pages.len() - 1)]
    }

    /// `levels[p][n]` for `p` in `[pmin, pmax + 1]`, with `levels[pmax+1] = 0`.
    pub fn from_filtration(total: &FGAbComplex, levels: &BTreeMap<i32, BTreeMap<i32, Lattice>>) -> Self {
        let empty = SpectralSequence { pages: vec![Page { r: 1, entries: BTreeMap::new(), differentials: BTreeMap::new() }], limit: BTreeMap::new(), abutment: BTreeMap::new(), graded: BTreeMap::new(), p_range: (0, -1) };
        if levels.is_empty() || total.hi() < total.lo() {
            return empty;
        }
        let pmin = *levels.keys().next().unwrap();
        let pmax = *levels.keys().next_back().unwrap() - 1;
        let w = (pmax - pmin).max(0) as usize;
        let (nlo, nhi) = (total.lo(), total.hi());
        let mut zcache: BTreeMap<(i32, i32, i32), Lattice> = BTreeMap::new();
        let mut z = |r: i32, p: i32, n: i32| -> Lattice {
            if let Some(l) = zcache.get(&(r, p, n)) {
                return l.clone();
            }
            let lp = level(total, levels, p, n);
            let l = if r <= 0 { lp } else { lp.intersect(&Lattice::preimage(&total.differential(n), &level(total, levels, p + r, n + 1))) };
            zcache.insert((r, p, n), l.clone());
            l
        };
        let mut pages = Vec::new();
        for r in 1..=(w + 2) as i32 {
            let mut entries = BTreeMap::new();
            for n in nlo..=nhi {
                for p in pmin..=pmax {
                    let top = z(r, p, n);
                    let mut bot = z(r - 1, p + 1, n).sum(&total.relations(n));
                    if n > nlo {
                        let src = z(r - 1, p - r + 1, n - 1);
                        bot = bot.sum(&Lattice::image(&total.differential(n - 1), &src));
                    }
                    let sq = Subquotient::new(top, bot);
                    if sq.ngens() > 0 {
                        entries.insert((p, n - p), sq);
                    }
                }
            }
            let mut differentials = BTreeMap::new();
            for (&(p, q), sq) in &entries {
                let n = p + q;
                if let Some(t) = entries.get(&(p + r, q - r + 1)) {
                    let m = sq.induced(&total.differential(n), t).expect("d_r is well defined");
                    differentials.insert((p, q), m);
                }
            }
            pages.push(Page { r: r as usize, entries, differentials });
        }
        let mut limit = BTreeMap::new();
        let mut abutment = BTreeMap::new();
        let mut graded = BTreeMap::new();
        for n in nlo..=nhi {
            let zc = total.cycles(n);
            let b = total.boundaries(n);
            let h = total.cohomology_at(n);
            let hg = h.group();
            if !hg.is_zero() {
                abutment.insert(n, hg);
            }
            let rel_h = Lattice::relations(h.orders());
            let fil = |p: i32| -> Lattice {
                let zp = zc.intersect(&level(total, levels, p, n));
                let gens: Vec<Vec<Int>> = zp.basis().iter().map(|v| h.coords(v).expect("cycle")).collect();
                Lattice::span(h.ngens(), gens).sum(&rel_h)
            };
            for p in pmin..=pmax {
                let zp = zc.intersect(&level(total, levels, p, n)).sum(&b);
                let zp1 = zc.intersect(&level(total, levels, p + 1, n)).sum(&b);
                let g = Subquotient::new(zp, zp1).group();
                if !g.is_zero() {
                    limit.insert((p, n - p), g);
                }
                let gg = Subquotient::new(fil(p), fil(p + 1)).group();
                if !gg.is_zero() {
                    graded.insert((p, n), gg);
                }
            }
        }
        SpectralSequence { pages, limit, abutment, graded, p_range: (pmin, pmax) }
    }

    /// Internal consistency: `E_{r+1} = H(E_r, d_r)`, the last page equals
    /// `E_∞`, and `⊕_p E_∞^{p,n−p} ≅ gr H^n` summand by summand.
    pub fn check(&self) -> Result<(), String> {
        for w in self.pages.windows(2) {
            let (e, e1) = (&w[0], &w[1]);
            let r = e.r as i32;
            let mut keys: Vec<(i32, i32)> = e.entries.keys().cloned().collect();
            keys.extend(e1.entries.keys().cloned());
            keys.sort();
            keys.dedup();
            for (p, q) in keys {
                let prev = (p - r, q + r - 1);
                let next = (p + r, q - r + 1);
                let ord = |k: &(i32, i32)| e.entries.get(k).map_or(Vec::new(), |s| s.orders().to_vec());
                let (o0, o1, o2) = (ord(&prev), ord(&(p, q)), ord(&next));
                let d0 = e.differentials.get(&prev).cloned().unwrap_or_else(|| IntMatrix::zeros(o1.len(), o0.len()));
                let d1 = e.differentials.get(&(p, q)).cloned().unwrap_or_else(|| IntMatrix::zeros(o2.len(), o1.len()));
                let cx = FGAbComplex::new(0, vec![o0, o1, o2], vec![d0, d1]);
                if cx.check().is_err() {
                    return Err(format!("d_{r}∘d_{r} ≠ 0 at ({p},{q})"));
                }
                let h = cx.cohomology_group(1);
                if h != e1.group(p, q) {
                    return Err(format!("E_{} ≠ H(E_{r}) at ({p},{q}): {} vs {}", r + 1, e1.group(p, q), h));
                }
            }
        }
        let last = self.pages.last().unwrap();
        if last.groups() != self.limit {
            return Err("last page differs from E_∞".into());
        }
        for (&(p, q), g) in &self.limit {
            if self.graded.get(&(p, p + q)) != Some(g) {
                return Err(format!("E_∞ differs from gr H at ({p},{q})"));
            }
        }
        if self.graded.len() != self.limit.len() {
            return Err("gr H has summands missing from E_∞".into());
        }
        Ok(())
    }

    /// Whether `d_r = 0` for every `r ≥ from`.
    pub fn degenerates_from(&self, from: usize) -> bool {
        self.pages.iter().filter(|p| p.r >= from).all(|p| p.differentials_vanish())
    }
}

/// Spectral sequence of the slot-index filtration of the total complex.
pub fn spectral_sequence(f: &DGFunctorData, x: &TwistedComplex) -> Result<SpectralSequence, DgError> {
    let fc = total_complex(f, x)?;
    Ok(SpectralSequence::from_filtration(&fc.total, &fc.stupid))
}

/// `W_b H^s` inside the generator coordinates of `H^s`.
fn weight_in_h(fc: &FilteredComplex, h: &Subquotient, s: i32, b: i32) -> Lattice {
    let rel_h = Lattice::relations(h.orders());
    let Some((&wmin, _)) = fc.weight.iter().next() else { return rel_h };
    let wmax = *fc.weight.keys().next_back().unwrap();
    let lat = if b < wmin {
        fc.total.relations(s)
    } else if b > wmax {
        Lattice::full(fc.total.rank(s))
    } else {
        fc.weight[&b].get(&s).cloned().unwrap_or_else(|| fc.total.relations(s))
    };
    let zc = fc.total.cycles(s).intersect(&lat);
    let gens: Vec<Vec<Int>> = zc.basis().iter().map(|v| h.coords(v).expect("cycle")).collect();
    Lattice::span(h.ngens(), gens).sum(&rel_h)
}

/// `W_hi H^s / W_lo H^s`.
pub fn weight_quotient(fc: &FilteredComplex, s: i32, hi: i32, lo: i32) -> FGAbGroup {
    let h = fc.total.cohomology_at(s);
    let top = weight_in_h(fc, &h, s, hi);
    let bot = weight_in_h(fc, &h, s, lo).intersect(&top);
    Subquotient::new(top, bot).group()
}

/// Nonzero `gr^W_b H^s`, keyed by `b`.
pub fn weight_graded(fc: &FilteredComplex, s: i32) -> BTreeMap<i32, FGAbGroup> {
    let mut out = BTreeMap::new();
    let Some((&wmin, _)) = fc.weight.iter().next() else { return out };
    let wmax = *fc.weight.keys().next_back().unwrap();
    for b in wmin..=wmax + 1 {
        let g = weight_quotient(fc, s, b, b - 1);
        if !g.is_zero() {
            out.insert(b, g);
        }
    }
    out
}

/// `E_1` and `E_2` groups computed from the weight complex `t₀(X)` and the
/// maps induced on `H^q(F(P))` by lifts of its differentials.
#[derive(Clone, Debug)]
pub struct E1FromT0 {
    pub e1: BTreeMap<(i32, i32), FGAbGroup>,
    pub e2: BTreeMap<(i32, i32), FGAbGroup>,
    /// Row `q`: the complex `p ↦ ⊕_{i_s = p} H^q(F(P_s))`.
    pub rows: BTreeMap<i32, FGAbComplex>,
}

pub fn e1_from_t0(f: &DGFunctorData, x: &TwistedComplex) -> Result<E1FromT0, DgError> {
    let c = &f.source;
    let y = f.adjust_complex(x);
    let (h, t0) = crate::twisted::weight_complex_t0(c, &y)?;
    let _ = h;
    let mut e1 = BTreeMap::new();
    let mut e2 = BTreeMap::new();
    let mut rows = BTreeMap::new();
    let Some((plo, phi)) = y.support() else {
        return Ok(E1FromT0 { e1, e2, rows });
    };
    let mut qs: Vec<i32> = Vec::new();
    for sl in &y.slots {
        qs.extend(f.objects[sl.object].degrees());
    }
    qs.sort();
    qs.dedup();
    for q in qs {
        // H^q(F(P)) for each term, per index
        let hq: Vec<Vec<Subquotient>> = (plo..=phi).map(|p| t0.term(p).iter().map(|&o| f.objects[o].cohomology_at(q)).collect()).collect();
        let orders: Vec<Vec<Int>> = hq.iter().map(|v| v.iter().flat_map(|s| s.orders().to_vec()).collect()).collect();
        let mut ds = Vec::new();
        for p in plo..phi {
            let k = (p - plo) as usize;
            let src = &hq[k];
            let tgt = &hq[k + 1];
            let rows_n: usize = tgt.iter().map(|s| s.ngens()).sum();
            let cols_n: usize = src.iter().map(|s| s.ngens()).sum();
            let mut m = IntMatrix::zeros(rows_n, cols_n);
            let mut coff = 0;
            for (j, sj) in src.iter().enumerate() {
                let mut roff = 0;
                for (i, si) in tgt.iter().enumerate() {
                    if let Some(cls) = t0.d_component(p, i, j) {
                        let (pj, pi) = (t0.term(p)[j], t0.term(p + 1)[i]);
                        let rep = crate::twisted::h0_subquotient(c, pj, pi).lift(cls);
                        let g = f.apply(pj, pi, 0, &rep);
                        let blk = g.block(q, &f.objects[pj], &f.objects[pi]);
                        let ind = sj.induced(&blk, si).ok_or_else(|| DgError::Hypothesis("arrow image is not a chain map".into()))?;
                        m.add_block(roff, coff, &ind);
                    }
                    roff += si.ngens();
                }
                coff += sj.ngens();
            }
            ds.push(m);
        }
        let cx = FGAbComplex::new(plo, orders, ds);
        for p in plo..=phi {
            let g1 = FGAbGroup::from_orders(cx.orders_at(p));
            if !g1.is_zero() {
                e1.insert((p, q), g1);
            }
            let g2 = cx.cohomology_group(p);
            if !g2.is_zero() {
                e2.insert((p, q), g2);
            }
        }
        rows.insert(q, cx);
    }
    Ok(E1FromT0 { e1, e2, rows })
}

/// The comparison `τ_{[a,b]}F → F_{[a,b]}` totalized on `X`.
#[derive(Clone, Debug)]
pub struct QuasiIsoWitness {
    pub objectwise: Vec<GradedMap>,
    pub source: FilteredComplex,
    pub target: FilteredComplex,
    pub map: BTreeMap<i32, IntMatrix>,
    pub cone: FGAbComplex,
    pub is_chain_map: bool,
    pub is_quasi_iso: bool,
}

/// Mapping cone of a chain map `m: A → B`: `Cone^n = A^{n+1} ⊕ B^n`.
pub fn mapping_cone(a: &FGAbComplex, b: &FGAbComplex, m: &BTreeMap<i32, IntMatrix>) -> FGAbComplex {
    let lo = (a.lo() - 1).min(b.lo());
    let hi = (a.hi() - 1).max(b.hi());
    if lo > hi {
        return FGAbComplex::zero();
    }
    let mut orders = Vec::new();
    let mut ds = Vec::new();
    for n in lo..=hi {
        let mut o = a.orders_at(n + 1).to_vec();
        o.extend(b.orders_at(n).iter().cloned());
        orders.push(o);
        if n < hi {
            let (ra1, rb0, ra2, rb1) = (a.rank(n + 1), b.rank(n), a.rank(n + 2), b.rank(n + 1));
            let mut d = IntMatrix::zeros(ra2 + rb1, ra1 + rb0);
            d.add_block(0, 0, &a.differential(n + 1).scaled(&-Int::one()));
            if let Some(mm) = m.get(&(n + 1)) {
                if mm.rows() == rb1 && mm.cols() == ra1 {
                    d.add_block(ra2, 0, mm);
                }
            }
            d.add_block(ra2, ra1, &b.differential(n));
            ds.push(d);
        }
    }
    FGAbComplex::new(lo, orders, ds)
}

fn is_chain_map(a: &FGAbComplex, b: &FGAbComplex, m: &BTreeMap<i32, IntMatrix>) -> bool {
    let lo = a.lo().min(b.lo());
    let hi = a.hi().max(b.hi());
    let get = |n: i32| m.get(&n).cloned().unwrap_or_else(|| IntMatrix::zeros(b.rank(n), a.rank(n)));
    for n in lo..=hi {
        let lhs = b.differential(n).mul(&get(n));
        let rhs = get(n + 1).mul(&a.differential(n));
        let diff = lhs.sub(&rhs);
        let rel = b.relations(n + 1);
        for j in 0..diff.cols() {
            if !rel.contains(&diff.col(j)) {
                return false;
            }
        }
    }
    true
}

pub fn truncation_quasi_iso(f: &DGFunctorData, a: i32, b: i32, x: &TwistedComplex) -> Result<QuasiIsoWitness, DgError> {
    if a > b {
        return Err(DgError::Hypothesis(format!("truncation window [{a},{b}] is empty")));
    }
    if !f.source.is_negative() {
        return Err(DgError::Hypothesis("truncation_quasi_iso requires a negative source".into()));
    }
    let (win, wp) = truncate_functor(f, Truncation::Window(a, b))?;
    let (can, cp) = truncate_functor(f, Truncation::Canonical(a, b))?;
    let mut objectwise = Vec::new();
    for (w, cc) in wp.iter().zip(&cp) {
        let mut blocks = BTreeMap::new();
        for (&k, s) in &w.pieces {
            if let Some(t) = cc.pieces.get(&k) {
                let id = IntMatrix::identity(s.top().dim());
                let ind = s.induced(&id, t).ok_or_else(|| DgError::Hypothesis("comparison map ill-defined".into()))?;
                blocks.insert(k, ind);
            }
        }
        objectwise.push(GradedMap { degree: 0, blocks }.reduced(&cc.complex));
    }
    let y = f.adjust_complex(x);
    let src = totalize(&win, &y)?;
    let tgt = totalize(&can, &y)?;
    let mut map = BTreeMap::new();
    let (lo, hi) = (src.total.lo().min(tgt.total.lo()), src.total.hi().max(tgt.total.hi()));
    for n in lo..=hi {
        let mut m = IntMatrix::zeros(tgt.total.rank(n), src.total.rank(n));
        for (s, sl) in y.slots.iter().enumerate() {
            let k = n - sl.index;
            let sa = src.layout.get(&n).and_then(|v| v.iter().find(|e| e.0 == s));
            let ta = tgt.layout.get(&n).and_then(|v| v.iter().find(|e| e.0 == s));
            if let (Some(sa), Some(ta), Some(blk)) = (sa, ta, objectwise[sl.object].blocks.get(&k)) {
                m.add_block(ta.1, sa.1, blk);
            }
        }
        map.insert(n, m);
    }
    let chain = is_chain_map(&src.total, &tgt.total, &map);
    let cone = mapping_cone(&src.total, &tgt.total, &map);
    let qi = chain && cone.is_exact();
    Ok(QuasiIsoWitness { objectwise, source: src, target: tgt, map, cone, is_chain_map: chain, is_quasi_iso: qi })
}

/// Transports a realization that kills the kernel of `q: C → C_N` to `C_N`.
pub fn push_through_quotient(f: &DGFunctorData, cn: &DgCategory, q: &DgFunctor) -> Result<DGFunctorData, DgError> {
    let mut maps = BTreeMap::new();
    for (&(x, y, d), h) in cn.homs() {
        let m = q.maps.get(&(x, y, d)).cloned().unwrap_or_else(|| IntMatrix::zeros(h.rank(), f.source.rank(x, y, d)));
        let mut cols: Vec<Vec<Int>> = (0..m.cols()).map(|j| m.col(j)).collect();
        for (k, o) in h.orders.iter().enumerate() {
            if !o.is_zero() {
                let mut e = zero_vec(h.rank());
                e[k] = o.clone();
                cols.push(e);
            }
        }
        let full = IntMatrix::from_cols(h.rank(), &cols);
        let mut imgs = Vec::new();
        for k in 0..h.rank() {
            let sol = image_membership(&full, &unit_vec(h.rank(), k)).ok().flatten().ok_or_else(|| DgError::Hypothesis("quotient functor is not surjective".into()))?;
            imgs.push(f.apply(x, y, d, &sol[..m.cols()]));
        }
        maps.insert((x, y, d), imgs);
    }
    Ok(DGFunctorData { source: Arc::new(cn.clone()), variance: Variance::Covariant, objects: f.objects.clone(), maps })
}

/// `F^b_N`: the canonical `[b−N, b]`-truncation of `F`, realized on `t_N(X)`.
#[derive(Clone, Debug)]
pub struct TruncatedRealization {
    pub category: DgCategory,
    pub functor: DGFunctorData,
    pub complex: TwistedComplex,
    pub filtered: FilteredComplex,
    pub ss: SpectralSequence,
}

pub fn truncated_realization(f: &DGFunctorData, x: &TwistedComplex, b: i32, n: u32) -> Result<TruncatedRealization, DgError> {
    let c = &f.source;
    let (can, _) = truncate_functor(f, Truncation::Canonical(b - n as i32, b))?;
    let (cn, q) = truncate_homs(c, n)?;
    let g = push_through_quotient(&can, &cn, &q)?;
    let y = pretr_of_functor(&q, &f.adjust_complex(x));
    let filtered = totalize(&g, &y)?;
    let ss = SpectralSequence::from_filtration(&filtered.total, &filtered.stupid);
    Ok(TruncatedRealization { category: cn, functor: g, complex: y, filtered, ss })
}

/// Pagewise comparison of `E_{n+1}^{p,q}` with `gr^W_q H^{p+q}(F^{q+n−1}_{2n−2})`.
#[derive(Clone, Debug)]
pub struct EnCheck {
    pub n: u32,
    pub compared: usize,
    pub mismatches: Vec<((i32, i32), FGAbGroup, FGAbGroup)>,
}

impl EnCheck {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn weight_range(f: &DGFunctorData, x: &TwistedComplex) -> Option<(i32, i32)> {
    let mut lo = i32::MAX;
    let mut hi = i32::MIN;
    for sl in &x.slots {
        let o = &f.objects[sl.object];
        for k in o.degrees() {
            if o.rank(k) > 0 {
                lo = lo.min(k);
                hi = hi.max(k);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

pub fn en_from_t2n2(f: &DGFunctorData, x: &TwistedComplex, n: u32) -> Result<EnCheck, DgError> {
    if n == 0 {
        return Err(DgError::Hypothesis("n must be at least 1".into()));
    }
    let ss = spectral_sequence(f, x)?;
    let page = ss.page(n as usize + 1);
    let mut out = EnCheck { n, compared: 0, mismatches: Vec::new() };
    let y = f.adjust_complex(x);
    let (Some((plo, phi)), Some((qlo, qhi))) = (y.support(), weight_range(f, &y)) else {
        return Ok(out);
    };
    let mut cache: BTreeMap<i32, FilteredComplex> = BTreeMap::new();
    for q in qlo..=qhi {
        let b = q + n as i32 - 1;
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(b) {
            e.insert(truncated_realization(f, x, b, 2 * n - 2)?.filtered);
        }
        let fc = &cache[&b];
        for p in plo..=phi {
            let rhs = weight_quotient(fc, p + q, q, q - 1);
            let lhs = page.group(p, q);
            out.compared += 1;
            if lhs != rhs {
                out.mismatches.push(((p, q), lhs, rhs));
            }
        }
    }
    Ok(out)
}

/// Outcome of the weight-separation test.
#[derive(Clone, Debug)]
pub struct DegenerationReport {
    /// Each object image concentrated in one degree, and every generator
    /// between objects of different weights mapped to 0.
    pub hypothesis_holds: bool,
    pub hypothesis_failure: Option<String>,
    /// Engine `d_r = 0` for `r ≥ 2`.
    pub degenerate: bool,
    pub d1_nonzero: bool,
    /// `H^s F^b_N ≅ W_b / W_{b−N−1}` for every `s`, `b`, `N` in range.
    pub truncation_identity: bool,
    pub identity_checks: usize,
}

/// Single weight of an object image, `None` for the zero complex, `Err` if
/// spread over several degrees.
fn single_weight(o: &FGAbComplex) -> Result<Option<i32>, ()> {
    let ds: Vec<i32> = o.degrees().filter(|&k| o.rank(k) > 0).collect();
    match ds.len() {
        0 => Ok(None),
        1 => Ok(Some(ds[0])),
        _ => Err(()),
    }
}

pub fn degeneration_check(f: &DGFunctorData, x: &TwistedComplex) -> Result<DegenerationReport, DgError> {
    let c = &f.source;
    let mut failure = None;
    let mut weights = Vec::new();
    for (k, o) in f.objects.iter().enumerate() {
        match single_weight(o) {
            Ok(w) => weights.push(w),
            Err(()) => {
                failure.get_or_insert(format!("image of object `{}` is not concentrated in one degree", c.objects()[k]));
                weights.push(None);
            }
        }
    }
    if failure.is_none() {
        'outer: for (&(a, b, d), h) in c.homs() {
            if let (Some(wa), Some(wb)) = (weights[a], weights[b]) {
                if wa != wb {
                    for k in 0..h.rank() {
                        if !f.basis_image(a, b, d, k).is_zero() {
                            failure = Some(format!("generator {} of ({},{},{d}) maps between weights {wa} and {wb}", h.labels[k], c.objects()[a], c.objects()[b]));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    let fc = total_complex(f, x)?;
    let ss = SpectralSequence::from_filtration(&fc.total, &fc.stupid);
    let degenerate = ss.degenerates_from(2);
    let d1_nonzero = !ss.page(1).differentials_vanish();
    let mut identity = true;
    let mut checks = 0;
    if let Some((wlo, whi)) = weight_range(f, &f.adjust_complex(x)) {
        let width = (whi - wlo + 1) as u32;
        for b in wlo - 1..=whi {
            for n in 0..=width {
                let tr = truncated_realization(f, x, b, n)?;
                let (lo, hi) = (fc.total.lo().min(tr.filtered.total.lo()), fc.total.hi().max(tr.filtered.total.hi()));
                for s in lo..=hi {
                    checks += 1;
                    let lhs = if s >= tr.filtered.total.lo() && s <= tr.filtered.total.hi() { tr.filtered.total.cohomology_group(s) } else { FGAbGroup::zero() };
                    let rhs = if s >= fc.total.lo() && s <= fc.total.hi() { weight_quotient(&fc, s, b, b - n as i32 - 1) } else { FGAbGroup::zero() };
                    if lhs != rhs {
                        identity = false;
                    }
                }
            }
        }
    }
    Ok(DegenerationReport { hypothesis_holds: failure.is_none(), hypothesis_failure: failure, degenerate, d1_nonzero, truncation_identity: identity, identity_checks: checks })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LefschetzReport {
    pub lhs: Rat,
    pub rhs: Rat,
    pub equal: bool,
}

/// Trace of the map induced on the free part of `h` by `m`.
fn free_trace(h: &Subquotient, m: &IntMatrix) -> Result<Rat, DgError> {
    let ind = h.induced(m, h).ok_or_else(|| DgError::Hypothesis("map does not preserve cycles and boundaries".into()))?;
    let free = h.free_indices();
    let sub: Vec<Vec<Int>> = free.iter().map(|&i| free.iter().map(|&j| ind.get(i, j).clone()).collect()).collect();
    let rows = sub.len();
    let mm = IntMatrix::from_int_rows(rows, rows, sub);
    rational_trace(&to_rational(&mm)).map_err(|e| DgError::Hypothesis(e.to_string()))
}

/// `Σ_s (−1)^s tr H^s(G(f))` versus `Σ_{i,j} (−1)^{i+j} tr H^j(F(f_{ii}))` over ℚ.
pub fn lefschetz_check(f: &DGFunctorData, x: &TwistedComplex, g: &TwistedMorphism) -> Result<LefschetzReport, DgError> {
    let c = &f.source;
    let y = f.adjust_complex(x);
    let gy = f.adjust_morphism(x, x, g);
    crate::twisted::check_morphism(c, &y, &y, &gy)?;
    if gy.degree != 0 || !pretr_differential(c, &y, &y, &gy).is_zero() {
        return Err(DgError::Hypothesis("f must be a closed degree-0 endomorphism".into()));
    }
    let fc = total_complex(f, x)?;
    let m = total_map(f, &y, &y, &fc, &fc, &gy);
    let mut lhs = Rat::zero();
    for n in fc.total.degrees() {
        let t = free_trace(&fc.total.cohomology_at(n), &m[&n])?;
        if n.is_odd() {
            lhs -= t;
        } else {
            lhs += t;
        }
    }
    let mut rhs = Rat::zero();
    for (s, sl) in y.slots.iter().enumerate() {
        let Some(v) = gy.comps.get(&(s, s)) else { continue };
        let o = &f.objects[sl.object];
        let gm = f.apply(sl.object, sl.object, 0, v);
        for q in o.degrees() {
            let t = free_trace(&o.cohomology_at(q), &gm.block(q, o, o))?;
            if (sl.index + q).is_odd() {
                rhs -= t;
            } else {
                rhs += t;
            }
        }
    }
    Ok(LefschetzReport { equal: lhs == rhs, lhs, rhs })
}

/// Basis of the closed degree-0 endomorphisms of `x` (over the declared
/// source category).
pub fn closed_endomorphism_basis(c: &DgCategory, x: &TwistedComplex) -> Vec<TwistedMorphism> {
    let th = crate::twisted::twisted_hom(c, x, x);
    let lay = th.layout(0);
    if lay.rank() == 0 {
        return Vec::new();
    }
    th.complex.cycles(0).basis().iter().map(|v| lay.from_vector(v)).filter(|m| !m.is_zero()).collect()
}

/// Convenience: element of `Pre-Tr_l` as a coefficient vector.
pub fn morphism_vector(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> Vec<Int> {
    HomBlocks::new(c, x, y, f.degree).to_vector(f)
}

/// A representation of a path category in complexes: one complex per vertex
/// and one chain map per arrow, in the arrow order of the quiver.
#[derive(Clone, Debug)]
pub struct QuiverRep {
    pub objects: Vec<FGAbComplex>,
    pub arrows: Vec<GradedMap>,
}

impl QuiverRep {
    /// Image of the path basis element `l` of `A(x, y)` (labels `id_X` or
    /// `a2*a0`, last arrow first).
    pub fn path_image(&self, a: &AdditiveCategoryData, x: usize, y: usize, l: usize) -> Result<GradedMap, DgError> {
        let label = &a.category().hom(x, y, 0).ok_or(StructuralError::Invalid(format!("no hom from {x} to {y}")))?.labels[l];
        if label.starts_with("id_") {
            return Ok(GradedMap::identity(&self.objects[x]));
        }
        let mut out: Option<GradedMap> = None;
        for tok in label.split('*').rev() {
            let k: usize = tok.strip_prefix('a').and_then(|s| s.parse().ok()).ok_or_else(|| StructuralError::Invalid(format!("bad path label `{label}`")))?;
            let g = self.arrows.get(k).ok_or_else(|| StructuralError::Invalid(format!("arrow a{k} has no image")))?;
            out = Some(match out {
                None => g.clone(),
                Some(f) => {
                    let blocks = f.blocks.iter().filter_map(|(&d, fm)| g.blocks.get(&d).map(|gm| (d, gm.mul(fm)))).collect();
                    GradedMap { degree: 0, blocks }
                }
            });
        }
        Ok(out.unwrap_or_else(|| GradedMap::zero(0)).reduced(&self.objects[y]))
    }

    fn path_combination(&self, a: &AdditiveCategoryData, x: usize, y: usize, v: &[Int]) -> Result<GradedMap, DgError> {
        let mut out = GradedMap::zero(0);
        for (l, c) in v.iter().enumerate() {
            if !c.is_zero() {
                out.add_scaled(c, &self.path_image(a, x, y, l)?, &self.objects[x], &self.objects[y]);
            }
        }
        Ok(out)
    }
}

/// The realization of a path category given by a representation.
pub fn path_realization(a: &AdditiveCategoryData, rep: &QuiverRep) -> Result<DGFunctorData, DgError> {
    let c = a.category();
    if rep.objects.len() != c.num_objects() {
        return Err(StructuralError::Invalid("one complex per vertex required".into()).into());
    }
    let mut maps = BTreeMap::new();
    for (&(x, y, d), h) in c.homs() {
        let imgs = (0..h.rank()).map(|l| rep.path_image(a, x, y, l).map(|g| g.reduced(&rep.objects[y]))).collect::<Result<Vec<_>, _>>()?;
        maps.insert((x, y, d), imgs);
    }
    Ok(DGFunctorData::covariant(Arc::new(c.clone()), rep.objects.clone(), maps))
}

/// The termwise extension of a representation by groups (every vertex image
/// concentrated in degree 0) to `B^b(A)` built on `complexes`.
pub fn termwise_realization(a: &AdditiveCategoryData, rep: &QuiverRep, complexes: &[AComplex], bb: Arc<DgCategory>) -> Result<DGFunctorData, DgError> {
    for (k, o) in rep.objects.iter().enumerate() {
        if o.degrees().any(|d| d != 0 && o.rank(d) > 0) {
            return Err(DgError::Hypothesis(format!("vertex {k} is not concentrated in degree 0")));
        }
    }
    let c = a.category();
    let orders0 = |v: usize| rep.objects[v].orders_at(0).to_vec();
    let offsets = |terms: &[usize]| -> Vec<usize> {
        let mut acc = 0;
        terms.iter().map(|&v| {
            let o = acc;
            acc += orders0(v).len();
            o
        }).collect()
    };
    let mut objects = Vec::new();
    for p in complexes {
        if p.terms.is_empty() {
            objects.push(FGAbComplex::zero());
            continue;
        }
        let orders: Vec<Vec<Int>> = (p.lo..=p.hi()).map(|k| p.term(k).iter().flat_map(|&v| orders0(v)).collect()).collect();
        let mut ds = Vec::new();
        for k in p.lo..p.hi() {
            let (src, tgt) = (p.term(k), p.term(k + 1));
            let (so, to) = (offsets(src), offsets(tgt));
            let mut m = IntMatrix::zeros(orders[(k + 1 - p.lo) as usize].len(), orders[(k - p.lo) as usize].len());
            for (j, &pj) in src.iter().enumerate() {
                for (i, &qi) in tgt.iter().enumerate() {
                    if let Some(v) = p.d_component(k, i, j) {
                        let g = rep.path_combination(a, pj, qi, v)?;
                        m.add_block(to[i], so[j], &g.block(0, &rep.objects[pj], &rep.objects[qi]));
                    }
                }
            }
            ds.push(m);
        }
        objects.push(FGAbComplex::new(p.lo, orders, ds));
    }
    let mut maps = BTreeMap::new();
    for (&(x, y, n), h) in bb.homs() {
        let (p, q) = (&complexes[x], &complexes[y]);
        let (blocks, _) = bb_layout(c, p, q, n);
        let mut imgs = Vec::with_capacity(h.rank());
        for &(k, j, i, _, r) in &blocks {
            let (pj, qi) = (p.term(k)[j], q.term(k + n)[i]);
            let (so, to) = (offsets(p.term(k)), offsets(q.term(k + n)));
            for l in 0..r {
                let g = rep.path_image(a, pj, qi, l)?;
                let mut m = IntMatrix::zeros(objects[y].rank(k + n), objects[x].rank(k));
                m.add_block(to[i], so[j], &g.block(0, &rep.objects[pj], &rep.objects[qi]));
                let mut blocks = BTreeMap::new();
                blocks.insert(k, m);
                imgs.push(GradedMap { degree: n, blocks }.reduced(&objects[y]));
            }
        }
        maps.insert((x, y, n), imgs);
    }
    Ok(DGFunctorData::covariant(bb, objects, maps))
}

/// `F ∘ g` for a covariant realization `F` on the target of `g`.
pub fn restrict(f: &DGFunctorData, g: &DgFunctor) -> Result<DGFunctorData, DgError> {
    if f.variance != Variance::Covariant || *f.source != *g.target {
        return Err(DgError::Hypothesis("restriction needs a covariant realization on the functor target".into()));
    }
    let objects = g.objects.iter().map(|&o| f.objects[o].clone()).collect();
    let mut maps = BTreeMap::new();
    for (&(x, y, d), h) in g.source.homs() {
        let (gx, gy) = (g.objects[x], g.objects[y]);
        let imgs = (0..h.rank())
            .map(|k| match g.maps.get(&(x, y, d)) {
                Some(m) => f.apply(gx, gy, d, &m.col(k)),
                None => GradedMap::zero(d),
            })
            .collect();
        maps.insert((x, y, d), imgs);
    }
    Ok(DGFunctorData::covariant(g.source.clone(), objects, maps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::intlin::{int, ints};
    use crate::twisted::{mc_check, HomBlocks};
    use num_traits::Signed;
    use rand::Rng;

    fn gysin(n: i64) -> (DGFunctorData, TwistedComplex) {
        let a = AdditiveCategoryData::path_category(vec!["A", "B"], &[(0, 1)]).unwrap();
        let z = FGAbComplex::free(0, &[1], Vec::new());
        let mut blocks = BTreeMap::new();
        blocks.insert(0, IntMatrix::from_rows(&[vec![n]]));
        let rep = QuiverRep { objects: vec![z.clone(), z], arrows: vec![GradedMap { degree: 0, blocks }] };
        let f = path_realization(&a, &rep).unwrap();
        let mut x = TwistedComplex { slots: vec![Slot { index: 0, object: 0 }, Slot { index: 1, object: 1 }], arrows: BTreeMap::new() };
        x.arrows.insert((0, 1), ints(&[1]));
        (f, x)
    }

    #[test]
    fn gysin_multiplication() {
        let (f, x) = gysin(3);
        assert!(validate_functor(&f).unwrap().is_empty());
        assert!(mc_check(&f.source, &x).unwrap().holds());
        let ss = spectral_sequence(&f, &x).unwrap();
        ss.check().unwrap();
        assert_eq!(ss.page(1).group(0, 0), FGAbGroup::free(1));
        assert_eq!(ss.page(1).group(1, 0), FGAbGroup::free(1));
        let d1 = &ss.page(1).differentials[&(0, 0)];
        assert_eq!(d1.get(0, 0).abs(), int(3));
        assert_eq!(ss.page(2).groups(), [((1, 0), FGAbGroup::from_orders(&ints(&[3])))].into_iter().collect());
        let t0 = e1_from_t0(&f, &x).unwrap();
        assert_eq!(t0.e1, ss.page(1).groups());
        assert_eq!(t0.e2, ss.page(2).groups());
        let rep = degeneration_check(&f, &x).unwrap();
        assert!(rep.hypothesis_holds && rep.degenerate && rep.d1_nonzero && rep.truncation_identity);
    }

    #[test]
    fn three_term_with_long_arrow() {
        for k in [1, 2, 3] {
            let f = gen::delta_u_realization(k);
            assert!(validate_functor(&f).unwrap().is_empty());
            let x = gen::delta_u_three_term(k);
            assert!(mc_check(&f.source, &x).unwrap().holds());
            let fc = total_complex(&f, &x).unwrap();
            fc.total.check().unwrap();
            let ss = SpectralSequence::from_filtration(&fc.total, &fc.stupid);
            ss.check().unwrap();
            let t0 = e1_from_t0(&f, &x).unwrap();
            assert_eq!(t0.e1, ss.page(1).groups());
            assert_eq!(t0.e2, ss.page(2).groups());
            for n in 1..=3 {
                let chk = en_from_t2n2(&f, &x, n).unwrap();
                assert!(chk.holds(), "k={k} n={n}: {:?}", chk.mismatches);
                assert!(chk.compared > 0);
            }
        }
    }

    #[test]
    fn weight_is_decalage_of_stupid() {
        let f = gen::delta_u_realization(2);
        let x = gen::delta_u_three_term(2);
        let fc = total_complex(&f, &x).unwrap();
        let ss = SpectralSequence::from_filtration(&fc.total, &fc.stupid);
        for s in fc.total.degrees() {
            for b in -3..=3 {
                // W_b H^s = F^{s−b} H^s
                let w = weight_quotient(&fc, s, b, b - 1);
                let p = s - b;
                let g = ss.graded.get(&(p, s)).cloned().unwrap_or_default();
                assert_eq!(w, g, "s={s} b={b}");
            }
        }
    }

    #[test]
    fn quasi_iso_of_truncations() {
        let f = gen::delta_u_realization(2);
        let x = gen::delta_u_three_term(2);
        for (a, b) in [(-1, 0), (-1, -1), (0, 0), (-2, 1)] {
            let w = truncation_quasi_iso(&f, a, b, &x).unwrap();
            assert!(w.is_chain_map && w.is_quasi_iso, "[{a},{b}]");
        }
        assert!(truncation_quasi_iso(&f, 1, 0, &x).is_err());
    }

    #[test]
    fn truncation_functors_are_valid() {
        let f = gen::delta_u_realization(3);
        let (le, win, can) = truncation_functors(&f, -1, -1).unwrap();
        for g in [le, win, can] {
            assert!(validate_functor(&g).unwrap().is_empty());
        }
    }

    #[test]
    fn lefschetz_identity_is_euler_characteristic() {
        let (f, x) = gysin(2);
        let id = TwistedMorphism::identity(&f.source, &x);
        let r = lefschetz_check(&f, &x, &id).unwrap();
        assert!(r.equal);
        assert_eq!(r.lhs, Rat::zero());
        let f = gen::delta_u_realization(1);
        let x = TwistedComplex::singleton(0, 0);
        let id = TwistedMorphism::identity(&f.source, &x);
        assert!(lefschetz_check(&f, &x, &id).unwrap().equal);
    }

    #[test]
    fn dual_commutes_with_differential() {
        let mut rng = gen::rng(7);
        let c = gen::delta_u_category(2);
        let op = opposite(&c);
        let xs = [gen::delta_u_three_term(2), TwistedComplex::singleton(0, 0), crate::twisted::shift(&gen::delta_u_three_term(2), 1)];
        let mut seen: BTreeMap<i32, Int> = BTreeMap::new();
        for x in &xs {
            let dx = dual_twisted(x);
            assert!(mc_check(&op, &dx).unwrap().holds());
            for y in &xs {
                let dy = dual_twisted(y);
                for l in -3..=3 {
                    let lay = HomBlocks::new(&c, x, y, l);
                    if lay.rank() == 0 {
                        continue;
                    }
                    for _ in 0..4 {
                        let v: Vec<Int> = (0..lay.rank()).map(|_| int(rng.gen_range(-3..=3))).collect();
                        let g = lay.from_vector(&v);
                        let lhs = pretr_differential(&op, &dy, &dx, &dual_morphism(x, y, &g));
                        let rhs = dual_morphism(x, y, &pretr_differential(&c, x, y, &g));
                        if rhs.is_zero() {
                            assert!(lhs.is_zero());
                            continue;
                        }
                        let s = if lhs == rhs { int(1) } else { assert_eq!(lhs, rhs.scaled(&int(-1))); int(-1) };
                        assert_eq!(*seen.entry(l).or_insert(s.clone()), s, "sign depends on more than the degree");
                    }
                }
            }
        }
    }

    #[test]
    fn dual_composition_is_opposite() {
        let mut rng = gen::rng(11);
        let c = gen::delta_u_category(3);
        let op = opposite(&c);
        let xs = [gen::delta_u_three_term(3), TwistedComplex::singleton(0, 1)];
        for x in &xs {
            for y in &xs {
                for z in &xs {
                    for (l, m) in [(0, 0), (-1, 0), (0, -1), (1, -1), (-1, -1)] {
                        let (lf, lg) = (HomBlocks::new(&c, x, y, l), HomBlocks::new(&c, y, z, m));
                        if lf.rank() == 0 || lg.rank() == 0 {
                            continue;
                        }
                        let f = lf.from_vector(&(0..lf.rank()).map(|_| int(rng.gen_range(-2..=2))).collect::<Vec<_>>());
                        let g = lg.from_vector(&(0..lg.rank()).map(|_| int(rng.gen_range(-2..=2))).collect::<Vec<_>>());
                        let gf = crate::twisted::compose_twisted(&c, x, y, z, &g, &f);
                        let d_gf = dual_morphism(x, z, &gf);
                        let df_dg = crate::twisted::compose_twisted(&op, &dual_twisted(z), &dual_twisted(y), &dual_twisted(x), &dual_morphism(x, y, &f), &dual_morphism(y, z, &g));
                        assert!(d_gf == df_dg || d_gf == df_dg.scaled(&int(-1)), "l={l} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn contravariant_realization() {
        let c = gen::delta_u_category(2);
        let cov = gen::delta_u_realization(2);
        let f = DGFunctorData::contravariant(&c, cov.objects.clone(), cov.maps.clone());
        assert!(validate_functor(&f).unwrap().is_empty());
        let x = gen::delta_u_three_term(2);
        let ss = spectral_sequence(&f, &x).unwrap();
        ss.check().unwrap();
        let t0 = e1_from_t0(&f, &x).unwrap();
        assert_eq!(t0.e1, ss.page(1).groups());
        assert_eq!(t0.e2, ss.page(2).groups());
    }

    #[test]
    fn termwise_realization_on_bb() {
        let mut rng = gen::rng(3);
        for _ in 0..5 {
            let s = gen::random_bb_sample(&mut rng, 3, 3, 3).unwrap();
            let full = termwise_realization(&s.path, &gen::random_module_rep(&mut rng, &s.path, &s.arrows, 2), &s.complexes, s.bb.clone()).unwrap();
            assert!(validate_functor(&full).unwrap().is_empty());
            assert!(validate_functor(&s.realization).unwrap().is_empty());
            let x = gen::random_twisted(&mut rng, &s.negative, -1, 2, 4);
            let ss = spectral_sequence(&s.realization, &x).unwrap();
            ss.check().unwrap();
            let t0 = e1_from_t0(&s.realization, &x).unwrap();
            assert_eq!(t0.e1, ss.page(1).groups());
            assert_eq!(t0.e2, ss.page(2).groups());
        }
    }

    #[test]
    fn push_through_quotient_is_functor() {
        let f = gen::delta_u_realization(2);
        let tr = truncated_realization(&f, &gen::delta_u_three_term(2), 0, 0).unwrap();
        assert!(validate_functor(&tr.functor).unwrap().is_empty());
        tr.ss.check().unwrap();
    }
}
