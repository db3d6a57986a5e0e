//! Twisted complexes over a finite DG category.
//!
//! A twisted complex is a list of slots `(index, object)`; several slots may
//! share an index, which models finite direct sums of base objects. Arrows
//! `q_st` go from slot `s` to slot `t` and live in `C^{i_s−i_t+1}(P_s,P_t)`.
//!
//! Conventions:
//! * Maurer–Cartan: `(−1)^{i_t} δq_st + Σ_m q_mt∘q_sm = 0`.
//! * For `f` of degree `l`, `(Df)_st = (−1)^{i_t} δf_st + Σ_m q′_mt∘f_sm − (−1)^l Σ_m f_mt∘q_sm`.
//! * Composition is plain matrix composition `(h∘g)_st = Σ_m h_mt∘g_sm`.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::dgcat::{truncate_homs, AComplex, AdditiveCategoryData, DgCategory, DgError, DgFunctor, HomElement, StructuralError};
use crate::intlin::{image_membership, is_zero_vec, reduce_mod, smith_normal_form, unit_vec, zero_vec, FGAbComplex, FGAbGroup, Int, IntMatrix, Lattice, Subquotient};

pub(crate) fn sign(e: i32) -> Int {
    if e.is_odd() {
        -Int::one()
    } else {
        Int::one()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub index: i32,
    pub object: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TwistedComplex {
    pub slots: Vec<Slot>,
    /// `(s, t) -> q_st`, absent means zero.
    pub arrows: BTreeMap<(usize, usize), Vec<Int>>,
}

/// Components `(s, t)` from slot `s` of the source to slot `t` of the
/// target, each in `C^{l+i_s−i_t}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistedMorphism {
    pub degree: i32,
    pub comps: BTreeMap<(usize, usize), Vec<Int>>,
}

impl TwistedMorphism {
    pub fn zero(degree: i32) -> Self {
        TwistedMorphism { degree, comps: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|v| is_zero_vec(v))
    }

    pub fn identity(c: &DgCategory, x: &TwistedComplex) -> Self {
        let mut comps = BTreeMap::new();
        for (s, sl) in x.slots.iter().enumerate() {
            let id = c.identity(sl.object).to_vec();
            if !is_zero_vec(&id) {
                comps.insert((s, s), id);
            }
        }
        TwistedMorphism { degree: 0, comps }
    }

    pub fn scaled(&self, k: &Int) -> Self {
        TwistedMorphism { degree: self.degree, comps: self.comps.iter().map(|(&key, v)| (key, v.iter().map(|a| a * k).collect())).collect() }
    }
}

impl TwistedComplex {
    pub fn zero() -> Self {
        TwistedComplex::default()
    }

    pub fn singleton(object: usize, index: i32) -> Self {
        TwistedComplex { slots: vec![Slot { index, object }], arrows: BTreeMap::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Smallest and largest slot index.
    pub fn support(&self) -> Option<(i32, i32)> {
        let lo = self.slots.iter().map(|s| s.index).min()?;
        let hi = self.slots.iter().map(|s| s.index).max()?;
        Some((lo, hi))
    }

    pub fn arrow_degree(&self, s: usize, t: usize) -> i32 {
        self.slots[s].index - self.slots[t].index + 1
    }

    /// Slots ordered by index (stable), useful for display.
    pub fn indices(&self) -> BTreeSet<i32> {
        self.slots.iter().map(|s| s.index).collect()
    }
}

fn add_into(map: &mut BTreeMap<(usize, usize), Vec<Int>>, key: (usize, usize), v: Vec<Int>, scale: &Int) {
    if is_zero_vec(&v) {
        return;
    }
    match map.get_mut(&key) {
        Some(old) => {
            for (a, b) in old.iter_mut().zip(v) {
                *a += b * scale;
            }
        }
        None => {
            map.insert(key, v.into_iter().map(|b| b * scale).collect());
        }
    }
}

fn finish(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, degree: i32, mut comps: BTreeMap<(usize, usize), Vec<Int>>) -> TwistedMorphism {
    comps.retain(|&(s, t), v| {
        let d = degree + x.slots[s].index - y.slots[t].index;
        reduce_mod(v, c.orders(x.slots[s].object, y.slots[t].object, d));
        !is_zero_vec(v)
    });
    TwistedMorphism { degree, comps }
}

/// Checks slot objects and coefficient lengths.
pub fn check_structure(c: &DgCategory, x: &TwistedComplex) -> Result<(), StructuralError> {
    for sl in &x.slots {
        if sl.object >= c.num_objects() {
            return Err(StructuralError::ObjectIndex(sl.object));
        }
    }
    for (&(s, t), v) in &x.arrows {
        if s >= x.slots.len() || t >= x.slots.len() {
            return Err(StructuralError::Invalid(format!("arrow ({s},{t}) refers to a missing slot")));
        }
        let d = x.arrow_degree(s, t);
        let r = c.rank(x.slots[s].object, x.slots[t].object, d);
        if v.len() != r {
            return Err(StructuralError::Length { context: format!("arrow ({s},{t}) of degree {d}"), expected: r, found: v.len() });
        }
    }
    Ok(())
}

pub fn check_morphism(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> Result<(), StructuralError> {
    for (&(s, t), v) in &f.comps {
        if s >= x.slots.len() || t >= y.slots.len() {
            return Err(StructuralError::Invalid(format!("component ({s},{t}) refers to a missing slot")));
        }
        let d = f.degree + x.slots[s].index - y.slots[t].index;
        let r = c.rank(x.slots[s].object, y.slots[t].object, d);
        if v.len() != r {
            return Err(StructuralError::Length { context: format!("component ({s},{t}) of degree {d}"), expected: r, found: v.len() });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McReport {
    /// `(s, t)` and the nonzero residual of the MC equation there.
    pub residuals: Vec<((usize, usize), Vec<Int>)>,
}

impl McReport {
    pub fn holds(&self) -> bool {
        self.residuals.is_empty()
    }
}

pub fn mc_check(c: &DgCategory, x: &TwistedComplex) -> Result<McReport, StructuralError> {
    check_structure(c, x)?;
    let mut acc: BTreeMap<(usize, usize), Vec<Int>> = BTreeMap::new();
    for (&(s, t), q) in &x.arrows {
        let (ps, pt) = (x.slots[s].object, x.slots[t].object);
        let d = x.arrow_degree(s, t);
        add_into(&mut acc, (s, t), c.delta(ps, pt, d, q), &sign(x.slots[t].index));
    }
    for (&(s, m), q1) in &x.arrows {
        for (&(m2, t), q2) in x.arrows.range((m, 0)..) {
            if m2 != m {
                break;
            }
            let (ps, pm, pt) = (x.slots[s].object, x.slots[m].object, x.slots[t].object);
            let v = c.compose((ps, pm, pt), x.arrow_degree(m, t), q2, x.arrow_degree(s, m), q1);
            add_into(&mut acc, (s, t), v, &Int::one());
        }
    }
    let mut residuals = Vec::new();
    for ((s, t), mut v) in acc {
        reduce_mod(&mut v, c.orders(x.slots[s].object, x.slots[t].object, x.arrow_degree(s, t) + 1));
        if !is_zero_vec(&v) {
            residuals.push(((s, t), v));
        }
    }
    Ok(McReport { residuals })
}

/// `D f` for `f: x → y`.
pub fn pretr_differential(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> TwistedMorphism {
    let l = f.degree;
    let mut acc = BTreeMap::new();
    let deg = |s: usize, t: usize| l + x.slots[s].index - y.slots[t].index;
    for (&(s, t), v) in &f.comps {
        let (ps, pt) = (x.slots[s].object, y.slots[t].object);
        add_into(&mut acc, (s, t), c.delta(ps, pt, deg(s, t), v), &sign(y.slots[t].index));
        // q′_mt ∘ f_sm with m = t here
        for (&(m2, t2), q) in y.arrows.range((t, 0)..) {
            if m2 != t {
                break;
            }
            let v2 = c.compose((ps, pt, y.slots[t2].object), y.arrow_degree(t, t2), q, deg(s, t), v);
            add_into(&mut acc, (s, t2), v2, &Int::one());
        }
    }
    let sl = -sign(l);
    for (&(s, m), q) in &x.arrows {
        for (&(m2, t), v) in f.comps.range((m, 0)..) {
            if m2 != m {
                break;
            }
            let (ps, pm, pt) = (x.slots[s].object, x.slots[m].object, y.slots[t].object);
            let v2 = c.compose((ps, pm, pt), deg(m, t), v, x.arrow_degree(s, m), q);
            add_into(&mut acc, (s, t), v2, &sl);
        }
    }
    finish(c, x, y, l + 1, acc)
}

/// `h∘g` for `g: x → y`, `h: y → z`.
pub fn compose_twisted(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, z: &TwistedComplex, h: &TwistedMorphism, g: &TwistedMorphism) -> TwistedMorphism {
    let mut acc = BTreeMap::new();
    for (&(s, m), gv) in &g.comps {
        for (&(m2, t), hv) in h.comps.range((m, 0)..) {
            if m2 != m {
                break;
            }
            let dg = g.degree + x.slots[s].index - y.slots[m].index;
            let dh = h.degree + y.slots[m].index - z.slots[t].index;
            let v = c.compose((x.slots[s].object, y.slots[m].object, z.slots[t].object), dh, hv, dg, gv);
            add_into(&mut acc, (s, t), v, &Int::one());
        }
    }
    finish(c, x, z, g.degree + h.degree, acc)
}

pub fn add_morphisms(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism, g: &TwistedMorphism, k: &Int) -> TwistedMorphism {
    assert_eq!(f.degree, g.degree);
    let mut acc = f.comps.clone();
    for (&key, v) in &g.comps {
        add_into(&mut acc, key, v.clone(), k);
    }
    finish(c, x, y, f.degree, acc)
}

/// Layout of `Pre-Tr_l(x, y)` as a based module: blocks `(s, t, offset, rank)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomBlocks {
    pub degree: i32,
    pub blocks: Vec<(usize, usize, usize, usize)>,
    pub orders: Vec<Int>,
}

impl HomBlocks {
    pub fn new(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, l: i32) -> Self {
        let mut blocks = Vec::new();
        let mut orders = Vec::new();
        for (s, ss) in x.slots.iter().enumerate() {
            for (t, st) in y.slots.iter().enumerate() {
                let d = l + ss.index - st.index;
                let o = c.orders(ss.object, st.object, d);
                if !o.is_empty() {
                    blocks.push((s, t, orders.len(), o.len()));
                    orders.extend(o.iter().cloned());
                }
            }
        }
        HomBlocks { degree: l, blocks, orders }
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn to_vector(&self, f: &TwistedMorphism) -> Vec<Int> {
        let mut v = zero_vec(self.rank());
        for &(s, t, off, r) in &self.blocks {
            if let Some(c) = f.comps.get(&(s, t)) {
                v[off..off + r].clone_from_slice(c);
            }
        }
        v
    }

    pub fn from_vector(&self, v: &[Int]) -> TwistedMorphism {
        let mut comps = BTreeMap::new();
        for &(s, t, off, r) in &self.blocks {
            let mut part = v[off..off + r].to_vec();
            reduce_mod(&mut part, &self.orders[off..off + r]);
            if !is_zero_vec(&part) {
                comps.insert((s, t), part);
            }
        }
        TwistedMorphism { degree: self.degree, comps }
    }
}

/// The hom complex `Pre-Tr(x, y)` with its based layout.
#[derive(Clone, Debug)]
pub struct TwistedHom {
    pub complex: FGAbComplex,
    pub layouts: BTreeMap<i32, HomBlocks>,
}

impl TwistedHom {
    pub fn layout(&self, l: i32) -> HomBlocks {
        self.layouts.get(&l).cloned().unwrap_or(HomBlocks { degree: l, blocks: Vec::new(), orders: Vec::new() })
    }
}

pub fn hom_degree_range(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex) -> Option<(i32, i32)> {
    let mut lo = i32::MAX;
    let mut hi = i32::MIN;
    for ss in &x.slots {
        for st in &y.slots {
            for d in c.hom_degrees(ss.object, st.object) {
                let l = d - ss.index + st.index;
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

pub fn twisted_hom(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex) -> TwistedHom {
    let Some((lo, hi)) = hom_degree_range(c, x, y) else {
        return TwistedHom { complex: FGAbComplex::zero(), layouts: BTreeMap::new() };
    };
    let layouts: BTreeMap<i32, HomBlocks> = (lo..=hi).map(|l| (l, HomBlocks::new(c, x, y, l))).collect();
    let mut ds = Vec::new();
    for l in lo..hi {
        let (src, tgt) = (&layouts[&l], &layouts[&(l + 1)]);
        let cols: Vec<Vec<Int>> = (0..src.rank()).map(|k| tgt.to_vector(&pretr_differential(c, x, y, &src.from_vector(&unit_vec(src.rank(), k))))).collect();
        ds.push(IntMatrix::from_cols(tgt.rank(), &cols));
    }
    let orders = (lo..=hi).map(|l| layouts[&l].orders.clone()).collect();
    TwistedHom { complex: FGAbComplex::new(lo, orders, ds), layouts }
}

pub fn hom_complex(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex) -> FGAbComplex {
    twisted_hom(c, x, y).complex
}

/// `Tr(C)(x, y[i])`.
pub fn tr_hom(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, i: i32) -> FGAbGroup {
    hom_complex(c, x, y).cohomology_group(i)
}

/// `X[n]`: indices lowered by `n`, arrows multiplied by `(−1)^n`.
pub fn shift(x: &TwistedComplex, n: i32) -> TwistedComplex {
    let sg = sign(n);
    TwistedComplex {
        slots: x.slots.iter().map(|s| Slot { index: s.index - n, object: s.object }).collect(),
        arrows: x.arrows.iter().map(|(&k, v)| (k, v.iter().map(|a| a * &sg).collect())).collect(),
    }
}

pub fn direct_sum(x: &TwistedComplex, y: &TwistedComplex) -> TwistedComplex {
    let n = x.slots.len();
    let mut slots = x.slots.clone();
    slots.extend(y.slots.iter().cloned());
    let mut arrows = x.arrows.clone();
    for (&(s, t), v) in &y.arrows {
        arrows.insert((s + n, t + n), v.clone());
    }
    TwistedComplex { slots, arrows }
}

/// Cone data: `y → cone(f) → x[1]`.
#[derive(Clone, Debug)]
pub struct Cone {
    pub object: TwistedComplex,
    pub inj: TwistedMorphism,
    pub proj: TwistedMorphism,
    /// `x[1]`
    pub shifted_source: TwistedComplex,
}

pub fn is_closed(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> bool {
    pretr_differential(c, x, y, f).is_zero()
}

/// Cone of a closed degree-0 morphism `f: x → y`: the slots of `y`, then the
/// slots of `x[1]`, with the components of `f` as mixed arrows.
pub fn cone(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> Result<Cone, DgError> {
    check_morphism(c, x, y, f)?;
    if f.degree != 0 {
        return Err(DgError::Hypothesis("cone requires a degree-0 morphism".into()));
    }
    if !is_closed(c, x, y, f) {
        return Err(DgError::Hypothesis("cone requires a closed morphism".into()));
    }
    let ny = y.slots.len();
    let x1 = shift(x, 1);
    let mut obj = direct_sum(y, &x1);
    for (&(s, t), v) in &f.comps {
        obj.arrows.insert((s + ny, t), v.clone());
    }
    let mut inj = BTreeMap::new();
    for (t, sl) in y.slots.iter().enumerate() {
        inj.insert((t, t), c.identity(sl.object).to_vec());
    }
    let mut proj = BTreeMap::new();
    for (s, sl) in x.slots.iter().enumerate() {
        proj.insert((s + ny, s), c.identity(sl.object).to_vec());
    }
    let inj = finish(c, y, &obj, 0, inj);
    let proj = finish(c, &obj, &x1, 0, proj);
    Ok(Cone { object: obj, inj, proj, shifted_source: x1 })
}

/// Solves `D L = target` for `L` in `Pre-Tr_{l−1}(x, y)`.
pub fn solve_boundary(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, target: &TwistedMorphism) -> Option<TwistedMorphism> {
    let l = target.degree;
    let src = HomBlocks::new(c, x, y, l - 1);
    let tgt = HomBlocks::new(c, x, y, l);
    let v = tgt.to_vector(target);
    if is_zero_vec(&v) {
        return Some(TwistedMorphism::zero(l - 1));
    }
    let mut cols: Vec<Vec<Int>> = (0..src.rank()).map(|k| tgt.to_vector(&pretr_differential(c, x, y, &src.from_vector(&unit_vec(src.rank(), k))))).collect();
    for (k, o) in tgt.orders.iter().enumerate() {
        if !o.is_zero() {
            let mut e = zero_vec(tgt.rank());
            e[k] = o.clone();
            cols.push(e);
        }
    }
    let m = IntMatrix::from_cols(tgt.rank(), &cols);
    let sol = image_membership(&m, &v).ok()??;
    Some(src.from_vector(&sol[..src.rank()]))
}

/// Rational version of [`solve_boundary`]: decides existence only.
pub fn is_boundary_rational(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, target: &TwistedMorphism) -> bool {
    let l = target.degree;
    let src = HomBlocks::new(c, x, y, l - 1);
    let tgt = HomBlocks::new(c, x, y, l);
    let v = tgt.to_vector(target);
    let mut cols: Vec<Vec<Int>> = (0..src.rank()).map(|k| tgt.to_vector(&pretr_differential(c, x, y, &src.from_vector(&unit_vec(src.rank(), k))))).collect();
    for (k, o) in tgt.orders.iter().enumerate() {
        if !o.is_zero() {
            let mut e = zero_vec(tgt.rank());
            e[k] = o.clone();
            cols.push(e);
        }
    }
    let m = IntMatrix::from_cols(tgt.rank(), &cols);
    let r0 = smith_normal_form(&m).rank();
    cols.push(v);
    let r1 = smith_normal_form(&IntMatrix::from_cols(tgt.rank(), &cols)).rank();
    r0 == r1
}

/// Returns `L` with `g − h = D L` when one exists over ℤ.
pub fn is_homotopic(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, g: &TwistedMorphism, h: &TwistedMorphism) -> Option<TwistedMorphism> {
    let diff = add_morphisms(c, x, y, g, h, &-Int::one());
    solve_boundary(c, x, y, &diff)
}

pub fn is_homotopic_rational(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, g: &TwistedMorphism, h: &TwistedMorphism) -> bool {
    let diff = add_morphisms(c, x, y, g, h, &-Int::one());
    is_boundary_rational(c, x, y, &diff)
}

/// A contracting homotopy `L` with `D L = id_X` when `X ≅ 0` in `Tr(C)`.
pub fn is_zero_in_tr(c: &DgCategory, x: &TwistedComplex) -> Option<TwistedMorphism> {
    solve_boundary(c, x, x, &TwistedMorphism::identity(c, x))
}

/// Certificate `m_i` (per slot index) with `i + m_i < j + m_j` whenever an
/// arrow from index `i` to index `j` is nonzero.
pub type OneSidedCertificate = BTreeMap<i32, i32>;

/// Difference-constraint feasibility by Bellman–Ford; `Err` carries an
/// infeasible cycle of slot indices.
pub fn one_sided(x: &TwistedComplex) -> Result<OneSidedCertificate, Vec<i32>> {
    let idx: Vec<i32> = x.indices().into_iter().collect();
    let pos = |i: i32| idx.iter().position(|&k| k == i).unwrap();
    // constraint m_a − m_b ≤ b − a − 1 is an edge b → a of weight b − a − 1
    let mut edges = Vec::new();
    for (&(s, t), v) in &x.arrows {
        if !is_zero_vec(v) {
            let (a, b) = (x.slots[s].index, x.slots[t].index);
            edges.push((pos(b), pos(a), (b - a - 1) as i64));
        }
    }
    let n = idx.len();
    let mut dist = vec![0i64; n];
    let mut pred = vec![usize::MAX; n];
    let mut last = usize::MAX;
    for _ in 0..=n {
        last = usize::MAX;
        for &(u, v, w) in &edges {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                pred[v] = u;
                last = v;
            }
        }
        if last == usize::MAX {
            break;
        }
    }
    if last == usize::MAX {
        return Ok(idx.iter().zip(dist).map(|(&i, d)| (i, d as i32)).collect());
    }
    let mut v = last;
    for _ in 0..n {
        v = pred[v];
    }
    let mut cycle = vec![idx[v]];
    let mut u = pred[v];
    while u != v {
        cycle.push(idx[u]);
        u = pred[u];
    }
    cycle.reverse();
    Err(cycle)
}

fn require_negative(c: &DgCategory, what: &str) -> Result<(), DgError> {
    if c.is_negative() {
        Ok(())
    } else {
        Err(DgError::Hypothesis(format!("{what} requires a negative base category")))
    }
}

/// Restriction to the slots with index in `[a, b]`, with the slot map.
pub fn stupid_window_with_slots(c: &DgCategory, x: &TwistedComplex, a: i32, b: i32) -> Result<(TwistedComplex, Vec<usize>), DgError> {
    require_negative(c, "stupid_window")?;
    let keep: Vec<usize> = (0..x.slots.len()).filter(|&s| (a..=b).contains(&x.slots[s].index)).collect();
    let pos = |s: usize| keep.iter().position(|&k| k == s);
    let slots = keep.iter().map(|&s| x.slots[s]).collect();
    let arrows = x.arrows.iter().filter_map(|(&(s, t), v)| Some(((pos(s)?, pos(t)?), v.clone()))).collect();
    Ok((TwistedComplex { slots, arrows }, keep))
}

pub fn stupid_window(c: &DgCategory, x: &TwistedComplex, a: i32, b: i32) -> Result<TwistedComplex, DgError> {
    Ok(stupid_window_with_slots(c, x, a, b)?.0)
}

/// `X_[b+1,c] → X → X_[a,b] → X_[b+1,c][1]` together with an explicit
/// isomorphism to the cone triangle of the first map.
#[derive(Clone, Debug)]
pub struct StupidTriangle {
    pub upper: TwistedComplex,
    pub lower: TwistedComplex,
    pub incl: TwistedMorphism,
    pub proj: TwistedMorphism,
    /// `X_[a,b] → X_[b+1,c][1]`
    pub connecting: TwistedMorphism,
    pub cone: Cone,
    /// `φ: cone → X_[a,b]`, `ψ: X_[a,b] → cone`
    pub phi: TwistedMorphism,
    pub psi: TwistedMorphism,
    /// `φ∘ψ − id = D h_lower`, `ψ∘φ − id = D h_cone`
    pub h_lower: TwistedMorphism,
    pub h_cone: TwistedMorphism,
}

pub fn stupid_triangle(c: &DgCategory, x: &TwistedComplex, a: i32, b: i32, cc: i32) -> Result<StupidTriangle, DgError> {
    require_negative(c, "stupid_triangle")?;
    if !(a <= b && b < cc) {
        return Err(DgError::Hypothesis(format!("stupid_triangle requires a ≤ b < c, got {a}, {b}, {cc}")));
    }
    if let Some((lo, hi)) = x.support() {
        if lo < a || hi > cc {
            return Err(DgError::Hypothesis(format!("complex supported in [{lo},{hi}], not in [{a},{cc}]")));
        }
    }
    let (upper, us) = stupid_window_with_slots(c, x, b + 1, cc)?;
    let (lower, ls) = stupid_window_with_slots(c, x, a, b)?;
    let id = |s: usize| c.identity(x.slots[s].object).to_vec();
    let incl = finish(c, &upper, x, 0, us.iter().enumerate().map(|(k, &s)| ((k, s), id(s))).collect());
    let proj = finish(c, x, &lower, 0, ls.iter().enumerate().map(|(k, &s)| ((s, k), id(s))).collect());
    let cone_d = cone(c, &upper, x, &incl)?;
    let nx = x.slots.len();
    // ψ: identity into the X-part, −q into the upper[1]-part
    let mut psi = BTreeMap::new();
    let mut conn = BTreeMap::new();
    for (k, &s) in ls.iter().enumerate() {
        psi.insert((k, s), id(s));
        for (u, &t) in us.iter().enumerate() {
            if let Some(q) = x.arrows.get(&(s, t)) {
                let neg: Vec<Int> = q.iter().map(|v| -v).collect();
                psi.insert((k, nx + u), neg.clone());
                conn.insert((k, u), neg);
            }
        }
    }
    let psi = finish(c, &lower, &cone_d.object, 0, psi);
    let connecting = finish(c, &lower, &cone_d.shifted_source, 0, conn);
    let phi = finish(c, &cone_d.object, &lower, 0, ls.iter().enumerate().map(|(k, &s)| ((s, k), id(s))).collect());
    for (name, src, tgt, m) in [("ψ", &lower, &cone_d.object, &psi), ("φ", &cone_d.object, &lower, &phi)] {
        if !is_closed(c, src, tgt, m) {
            return Err(DgError::Hypothesis(format!("{name} is not closed")));
        }
    }
    let phipsi = compose_twisted(c, &lower, &cone_d.object, &lower, &phi, &psi);
    let h_lower = is_homotopic(c, &lower, &lower, &phipsi, &TwistedMorphism::identity(c, &lower)).ok_or_else(|| DgError::Hypothesis("φ∘ψ is not homotopic to the identity".into()))?;
    let psiphi = compose_twisted(c, &cone_d.object, &lower, &cone_d.object, &psi, &phi);
    let h_cone = is_homotopic(c, &cone_d.object, &cone_d.object, &psiphi, &TwistedMorphism::identity(c, &cone_d.object)).ok_or_else(|| DgError::Hypothesis("ψ∘φ is not homotopic to the identity".into()))?;
    // the triangle maps agree with the cone triangle through φ, ψ
    if compose_twisted(c, x, &cone_d.object, &lower, &phi, &cone_d.inj) != proj {
        return Err(DgError::Hypothesis("φ∘inj differs from the projection".into()));
    }
    if compose_twisted(c, &lower, &cone_d.object, &cone_d.shifted_source, &cone_d.proj, &psi) != connecting {
        return Err(DgError::Hypothesis("proj∘ψ differs from the connecting map".into()));
    }
    Ok(StupidTriangle { upper, lower, incl, proj, connecting, cone: cone_d, phi, psi, h_lower, h_cone })
}

/// Weight complex `t₀(X)` over `H(C)`: terms are the slot objects, the
/// differential has the classes `[q_st]` for `i_t = i_s + 1`.
pub fn weight_complex_t0(c: &DgCategory, x: &TwistedComplex) -> Result<(AdditiveCategoryData, AComplex), DgError> {
    require_negative(c, "weight_complex_t0")?;
    let h = crate::dgcat::homotopy_category(c);
    let cx = t0_complex(c, &h, x)?;
    Ok((h, cx))
}

/// Same as [`weight_complex_t0`] with a precomputed `H(C)`.
pub fn t0_complex(c: &DgCategory, h: &AdditiveCategoryData, x: &TwistedComplex) -> Result<AComplex, DgError> {
    check_structure(c, x)?;
    let Some((lo, hi)) = x.support() else {
        return Ok(AComplex { name: "t0".into(), lo: 0, terms: Vec::new(), d: Vec::new() });
    };
    let mut pos = vec![0usize; x.slots.len()];
    let mut terms = vec![Vec::new(); (hi - lo + 1) as usize];
    for (s, sl) in x.slots.iter().enumerate() {
        let k = (sl.index - lo) as usize;
        pos[s] = terms[k].len();
        terms[k].push(sl.object);
    }
    let mut d = vec![BTreeMap::new(); (hi - lo) as usize];
    for (&(s, t), q) in &x.arrows {
        if x.slots[t].index != x.slots[s].index + 1 {
            continue;
        }
        let cls = class_in_h(c, h, x.slots[s].object, x.slots[t].object, q);
        if !is_zero_vec(&cls) {
            d[(x.slots[s].index - lo) as usize].insert((pos[t], pos[s]), cls);
        }
    }
    Ok(AComplex { name: "t0".into(), lo, terms, d })
}

/// Coordinates in `H(C)(p, q)` of a closed degree-0 element.
pub fn class_in_h(c: &DgCategory, _h: &AdditiveCategoryData, p: usize, q: usize, v: &[Int]) -> Vec<Int> {
    h0_subquotient(c, p, q).coords(v).expect("closed degree-0 element")
}

pub(crate) fn h0_subquotient(c: &DgCategory, x: usize, y: usize) -> Subquotient {
    let rel = Lattice::relations(c.orders(x, y, 0));
    let z = Lattice::preimage(&c.differential_matrix(x, y, 0), &Lattice::relations(c.orders(x, y, 1)));
    Subquotient::new(z.sum(&rel), Lattice::column_span(&c.differential_matrix(x, y, -1)).sum(&rel))
}

/// Image of a twisted complex under a DG functor.
pub fn pretr_of_functor(f: &DgFunctor, x: &TwistedComplex) -> TwistedComplex {
    let slots: Vec<Slot> = x.slots.iter().map(|s| Slot { index: s.index, object: f.objects[s.object] }).collect();
    let mut arrows = BTreeMap::new();
    for (&(s, t), q) in &x.arrows {
        let v = f.apply(x.slots[s].object, x.slots[t].object, x.arrow_degree(s, t), q);
        if !is_zero_vec(&v) {
            arrows.insert((s, t), v);
        }
    }
    TwistedComplex { slots, arrows }
}

pub fn pretr_of_functor_morphism(f: &DgFunctor, x: &TwistedComplex, y: &TwistedComplex, g: &TwistedMorphism) -> TwistedMorphism {
    let mut comps = BTreeMap::new();
    for (&(s, t), v) in &g.comps {
        let d = g.degree + x.slots[s].index - y.slots[t].index;
        let w = f.apply(x.slots[s].object, y.slots[t].object, d, v);
        if !is_zero_vec(&w) {
            comps.insert((s, t), w);
        }
    }
    TwistedMorphism { degree: g.degree, comps }
}

/// `t_N(X)` over `C_N`, with the category and the quotient functor.
pub fn apply_tn(c: &DgCategory, x: &TwistedComplex, n: u32) -> Result<(DgCategory, DgFunctor, TwistedComplex), DgError> {
    let (cn, f) = truncate_homs(c, n)?;
    let y = pretr_of_functor(&f, x);
    Ok((cn, f, y))
}

/// Matrix of the map `Pre-Tr_l(x, y) → Pre-Tr_l(Fx, Fy)` induced by `F`.
pub fn functor_hom_matrix(f: &DgFunctor, x: &TwistedComplex, y: &TwistedComplex, l: i32) -> IntMatrix {
    let (fx, fy) = (pretr_of_functor(f, x), pretr_of_functor(f, y));
    let src = HomBlocks::new(&f.source, x, y, l);
    let tgt = HomBlocks::new(&f.target, &fx, &fy, l);
    let cols: Vec<Vec<Int>> = (0..src.rank()).map(|k| tgt.to_vector(&pretr_of_functor_morphism(f, x, y, &src.from_vector(&unit_vec(src.rank(), k))))).collect();
    IntMatrix::from_cols(tgt.rank(), &cols)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomComparison {
    pub source_group: FGAbGroup,
    pub truncated_group: FGAbGroup,
    pub bijective: bool,
}

/// Compares `H⁰ Pre-Tr(A, B)` with `H⁰ Pre-Tr_N(t_N A, t_N B)` through the
/// map induced by `t_N`. Refuses unless `N ≥ d − a` for `A ⊂ [a,b]`, `B ⊂ [c,d]`.
pub fn hom_comparison_tn(c: &DgCategory, a: &TwistedComplex, b: &TwistedComplex, n: u32) -> Result<HomComparison, DgError> {
    require_negative(c, "hom_comparison_tN")?;
    if let (Some((alo, _)), Some((_, bhi))) = (a.support(), b.support()) {
        if (n as i64) < (bhi - alo) as i64 {
            return Err(DgError::Hypothesis(format!("window hypothesis N ≥ d − a fails: N = {n}, d − a = {}", bhi - alo)));
        }
    }
    let (cn, f) = truncate_homs(c, n)?;
    let (ta, tb) = (pretr_of_functor(&f, a), pretr_of_functor(&f, b));
    let h1 = hom_complex(c, a, b).cohomology_at(0);
    let h2 = hom_complex(&cn, &ta, &tb).cohomology_at(0);
    let m = functor_hom_matrix(&f, a, b, 0);
    let g1 = h1.group();
    let g2 = h2.group();
    let bijective = match h1.induced(&m, &h2) {
        Some(ind) => {
            // surjective onto an isomorphic f.g. group ⇒ bijective
            let mut cols: Vec<Vec<Int>> = (0..ind.cols()).map(|j| ind.col(j)).collect();
            for (k, o) in h2.orders().iter().enumerate() {
                if !o.is_zero() {
                    let mut e = zero_vec(h2.ngens());
                    e[k] = o.clone();
                    cols.push(e);
                }
            }
            let span = Lattice::span(h2.ngens(), cols);
            g1 == g2 && span == Lattice::full(h2.ngens())
        }
        None => false,
    };
    Ok(HomComparison { source_group: g1, truncated_group: g2, bijective })
}

/// Result of factoring an idempotent through a stupid window.
#[derive(Clone, Debug)]
pub struct WindowFactor {
    pub window: TwistedComplex,
    /// `s′: Y_[a,b] → Y`
    pub s_prime: TwistedMorphism,
    /// `s″: Y → Y_[a,b]`
    pub s_double_prime: TwistedMorphism,
    /// normalized representative `(s + D L)^{r+1}`
    pub normalized: TwistedMorphism,
    /// `s′∘s″ − s = D h`
    pub homotopy: TwistedMorphism,
}

/// Factors an idempotent `s` of `Tr(C)(Y, Y)` through `Y_[a,b]`: first kills
/// the diagonal blocks outside `[a,b]` up to homotopy, then raises to the
/// power `r + 1` (r = support width), then splits off the window components.
pub fn idempotent_window_factor(c: &DgCategory, y: &TwistedComplex, s: &TwistedMorphism, a: i32, b: i32) -> Result<WindowFactor, DgError> {
    require_negative(c, "idempotent_window_factor")?;
    check_morphism(c, y, y, s)?;
    if s.degree != 0 || !is_closed(c, y, y, s) {
        return Err(DgError::Hypothesis("s must be closed of degree 0".into()));
    }
    let ss = compose_twisted(c, y, y, y, s, s);
    if is_homotopic(c, y, y, &ss, s).is_none() {
        return Err(DgError::Hypothesis("s∘s is not homotopic to s".into()));
    }
    let width = y.support().map_or(0, |(lo, hi)| hi - lo);
    // 1.) normalization: find L with (s + D L)_{st} = 0 for i_s = i_t ∉ [a,b]
    let src = HomBlocks::new(c, y, y, -1);
    let tgt = HomBlocks::new(c, y, y, 0);
    let diag: Vec<(usize, usize)> = tgt.blocks.iter().filter(|bl| {
        let (i, j) = (y.slots[bl.0].index, y.slots[bl.1].index);
        i == j && !(a..=b).contains(&i)
    }).flat_map(|bl| (bl.2..bl.2 + bl.3).map(|k| (k, 0))).collect();
    let rows: Vec<usize> = diag.iter().map(|p| p.0).collect();
    let mut cols: Vec<Vec<Int>> = (0..src.rank())
        .map(|k| {
            let v = tgt.to_vector(&pretr_differential(c, y, y, &src.from_vector(&unit_vec(src.rank(), k))));
            rows.iter().map(|&r| v[r].clone()).collect()
        })
        .collect();
    for (j, &r) in rows.iter().enumerate() {
        if !tgt.orders[r].is_zero() {
            let mut e = zero_vec(rows.len());
            e[j] = tgt.orders[r].clone();
            cols.push(e);
        }
    }
    let sv = tgt.to_vector(s);
    let rhs: Vec<Int> = rows.iter().map(|&r| -sv[r].clone()).collect();
    let l = if rows.is_empty() {
        TwistedMorphism::zero(-1)
    } else {
        let m = IntMatrix::from_cols(rows.len(), &cols);
        let sol = image_membership(&m, &rhs)
            .ok()
            .flatten()
            .ok_or_else(|| DgError::Hypothesis("diagonal components outside the window are not null-homotopic".into()))?;
        src.from_vector(&sol[..src.rank()])
    };
    let s1 = add_morphisms(c, y, y, s, &pretr_differential(c, y, y, &l), &Int::one());
    // 2.) s_new = s1^{r+1}
    let mut snew = s1.clone();
    for _ in 0..width {
        snew = compose_twisted(c, y, y, y, &s1, &snew);
    }
    // 3.) split through the window
    let (w, keep) = stupid_window_with_slots(c, y, a, b)?;
    let pos = |s: usize| keep.iter().position(|&k| k == s);
    let sp = TwistedMorphism { degree: 0, comps: snew.comps.iter().filter_map(|(&(s0, t0), v)| Some(((pos(s0)?, t0), v.clone()))).collect() };
    let spp = TwistedMorphism { degree: 0, comps: snew.comps.iter().filter_map(|(&(s0, t0), v)| Some(((s0, pos(t0)?), v.clone()))).collect() };
    if !is_closed(c, &w, y, &sp) {
        return Err(DgError::Hypothesis("s′ is not closed".into()));
    }
    if !is_closed(c, y, &w, &spp) {
        return Err(DgError::Hypothesis("s″ is not closed".into()));
    }
    let prod = compose_twisted(c, y, &w, y, &sp, &spp);
    let homotopy = is_homotopic(c, y, y, &prod, s).ok_or_else(|| DgError::Hypothesis("s′∘s″ is not homotopic to s".into()))?;
    Ok(WindowFactor { window: w, s_prime: sp, s_double_prime: spp, normalized: snew, homotopy })
}

/// `Σ (−1)^i [P^i]` keyed by object name.
pub type FormalClass = BTreeMap<String, i64>;

pub fn euler_class(c: &DgCategory, x: &TwistedComplex) -> FormalClass {
    let mut out = FormalClass::new();
    for sl in &x.slots {
        *out.entry(c.objects()[sl.object].clone()).or_insert(0) += if sl.index.is_odd() { -1 } else { 1 };
    }
    out.retain(|_, v| *v != 0);
    out
}

pub fn class_sub(a: &FormalClass, b: &FormalClass) -> FormalClass {
    let mut out = a.clone();
    for (k, v) in b {
        *out.entry(k.clone()).or_insert(0) -= v;
    }
    out.retain(|_, v| *v != 0);
    out
}

pub fn class_neg(a: &FormalClass) -> FormalClass {
    a.iter().map(|(k, v)| (k.clone(), -v)).collect()
}

/// The full DG subcategory on `objects`; its `Tr` is the triangulated
/// subcategory generated by them.
pub fn generated_subcategory(c: &DgCategory, objects: &[usize]) -> Result<(DgCategory, DgFunctor), StructuralError> {
    crate::dgcat::full_subcategory(c, objects)
}

/// One-way membership test: every term of `x` lies in `objects`.
pub fn in_generated_subcategory(x: &TwistedComplex, objects: &[usize]) -> bool {
    x.slots.iter().all(|s| objects.contains(&s.object))
}

/// `[f]: [P] → [Q]` for a base element, with both singletons at index 0.
pub fn morphism_from_element(f: &HomElement) -> (TwistedComplex, TwistedComplex, TwistedMorphism) {
    let x = TwistedComplex::singleton(f.source, 0);
    let y = TwistedComplex::singleton(f.target, 0);
    let mut comps = BTreeMap::new();
    if !is_zero_vec(&f.coeffs) {
        comps.insert((0, 0), f.coeffs.clone());
    }
    (x, y, TwistedMorphism { degree: f.degree, comps })
}

/// Cone of an object `(X, Y, f)` of the closed-morphism category.
pub fn cone_of_closed_object(c: &DgCategory, obj: &crate::dgcat::ClosedMorphismObject) -> Result<Cone, DgError> {
    let f = HomElement { source: obj.source, target: obj.target, degree: 0, coeffs: obj.f.clone() };
    let (x, y, m) = morphism_from_element(&f);
    cone(c, &x, &y, &m)
}

/// Largest absolute arrow degree, i.e. how deep the arrows reach.
pub fn arrow_depth(x: &TwistedComplex) -> i32 {
    x.arrows.keys().map(|&(s, t)| x.arrow_degree(s, t).abs()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgcat::{HomSpace, DgCategoryBuilder};
    use crate::intlin::{int, ints};

    fn delta_u(k: i64) -> DgCategory {
        let mut b: DgCategoryBuilder = DgCategory::builder(vec!["e"]);
        b.hom(0, 0, 0, HomSpace::free(vec!["id"]));
        b.hom(0, 0, -1, HomSpace::free(vec!["u"]));
        b.differential(0, 0, -1, IntMatrix::from_rows(&[vec![k]]));
        b.compose((0, 0, 0), (0, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (-1, 0), (0, 0), 0, int(1));
        b.compose((0, 0, 0), (0, 0), (-1, 0), 0, int(1));
        b.identity(0, ints(&[1]));
        b.build().unwrap()
    }

    fn three_term() -> TwistedComplex {
        let mut x = TwistedComplex { slots: (0..3).map(|i| Slot { index: i, object: 0 }).collect(), arrows: BTreeMap::new() };
        x.arrows.insert((0, 1), ints(&[1]));
        x.arrows.insert((1, 2), ints(&[1]));
        x.arrows.insert((0, 2), ints(&[-1]));
        x
    }

    #[test]
    fn mc_example() {
        let c = delta_u(1);
        assert!(mc_check(&c, &three_term()).unwrap().holds());
        let mut bad = three_term();
        bad.arrows.remove(&(0, 2));
        let r = mc_check(&c, &bad).unwrap();
        assert_eq!(r.residuals, vec![((0, 2), ints(&[1]))]);
    }

    #[test]
    fn hom_complex_squares_to_zero() {
        let c = delta_u(2);
        let x = three_term();
        let c1 = delta_u(1);
        assert!(hom_complex(&c1, &x, &x).check().is_ok());
        let s = TwistedComplex::singleton(0, 0);
        assert!(hom_complex(&c, &s, &s).check().is_ok());
    }

    #[test]
    fn cone_of_identity_is_zero() {
        let c = delta_u(2);
        let x = TwistedComplex::singleton(0, 0);
        let id = TwistedMorphism::identity(&c, &x);
        let cn = cone(&c, &x, &x, &id).unwrap();
        assert!(mc_check(&c, &cn.object).unwrap().holds());
        assert!(is_zero_in_tr(&c, &cn.object).is_some());
        assert!(is_zero_in_tr(&c, &x).is_none());
        assert!(is_zero_in_tr(&delta_u(1), &x).is_some());
        assert_eq!(tr_hom(&c, &x, &x, 0), FGAbGroup::from_orders(&ints(&[2])));
    }

    #[test]
    fn homotopy_mod_two() {
        let c = delta_u(2);
        let x = TwistedComplex::singleton(0, 0);
        let two = TwistedMorphism::identity(&c, &x).scaled(&int(2));
        assert!(is_homotopic(&c, &x, &x, &two, &TwistedMorphism::zero(0)).is_some());
        assert!(is_homotopic(&c, &x, &x, &TwistedMorphism::identity(&c, &x), &TwistedMorphism::zero(0)).is_none());
        assert!(is_homotopic_rational(&c, &x, &x, &TwistedMorphism::identity(&c, &x), &TwistedMorphism::zero(0)));
    }

    #[test]
    fn stupid_triangle_on_three_terms() {
        let c = delta_u(1);
        let x = three_term();
        let t = stupid_triangle(&c, &x, 0, 0, 2).unwrap();
        assert_eq!(t.lower.slots.len(), 1);
        assert_eq!(t.upper.slots.len(), 2);
        let t2 = stupid_triangle(&c, &x, 0, 1, 2).unwrap();
        assert!(mc_check(&c, &t2.cone.object).unwrap().holds());
    }

    #[test]
    fn one_sided_certificates() {
        let x = three_term();
        let cert = one_sided(&x).unwrap();
        assert!(cert.values().all(|&m| m == 0));
        let mut y = TwistedComplex { slots: vec![Slot { index: 0, object: 0 }, Slot { index: 1, object: 0 }], arrows: BTreeMap::new() };
        y.arrows.insert((0, 1), ints(&[1]));
        y.arrows.insert((1, 0), ints(&[1]));
        assert!(one_sided(&y).is_err());
    }

    #[test]
    fn shift_roundtrip_and_euler() {
        let c = delta_u(1);
        let x = three_term();
        assert_eq!(shift(&shift(&x, 3), -3), x);
        assert!(mc_check(&c, &shift(&x, 1)).unwrap().holds());
        assert_eq!(euler_class(&c, &shift(&x, 1)), class_neg(&euler_class(&c, &x)));
    }

    #[test]
    fn idempotent_factor_identity() {
        let c = delta_u(2);
        let y = TwistedComplex::singleton(0, 0);
        let id = TwistedMorphism::identity(&c, &y);
        let f = idempotent_window_factor(&c, &y, &id, 0, 0).unwrap();
        assert_eq!(f.window, y);
        let z = idempotent_window_factor(&c, &y, &TwistedMorphism::zero(0), 0, 0).unwrap();
        assert!(z.s_prime.is_zero());
        assert!(idempotent_window_factor(&c, &y, &id, 1, 1).is_err());
    }
}
