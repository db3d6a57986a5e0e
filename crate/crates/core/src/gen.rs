//! Seeded random inputs: path categories of acyclic quivers, complexes over
//! them, `B^b(A)` and its truncations, twisted complexes built from iterated
//! cones, and realizations from quiver representations.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dgcat::{build_bb, negative_part_with_inclusion, AComplex, AdditiveCategoryData, DgCategory, DgError, HomSpace};
use crate::intlin::{int, ints, zero_vec, FGAbComplex, Int, IntMatrix, Lattice};
use crate::realize::{restrict, termwise_realization, DGFunctorData, GradedMap, QuiverRep};
use crate::twisted::{cone, direct_sum, shift, twisted_hom, Slot, TwistedComplex, TwistedMorphism};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small(rng: &mut Rng64, bound: i64) -> Int {
    int(rng.gen_range(-bound..=bound))
}

/// Random combination of lattice basis vectors with small coefficients.
pub fn random_in_lattice(rng: &mut Rng64, l: &Lattice, bound: i64) -> Vec<Int> {
    let mut v = zero_vec(l.dim());
    for b in l.basis() {
        let k = small(rng, bound);
        for (x, y) in v.iter_mut().zip(b) {
            *x += &k * y;
        }
    }
    v
}

/// An acyclic quiver on `n` vertices: arrows only go from lower to higher
/// vertex numbers.
pub fn random_quiver(rng: &mut Rng64, n: usize, max_arrows: usize) -> Vec<(usize, usize)> {
    let mut arrows = Vec::new();
    if n < 2 {
        return arrows;
    }
    let m = rng.gen_range(0..=max_arrows);
    for _ in 0..m {
        let a = rng.gen_range(0..n - 1);
        let b = rng.gen_range(a + 1..n);
        arrows.push((a, b));
    }
    arrows.sort();
    arrows
}

pub fn random_path_category(rng: &mut Rng64, n: usize, max_arrows: usize) -> (AdditiveCategoryData, Vec<(usize, usize)>) {
    let arrows = random_quiver(rng, n, max_arrows);
    let names: Vec<String> = (0..n).map(|k| format!("v{k}")).collect();
    (AdditiveCategoryData::path_category(names, &arrows).expect("acyclic quiver"), arrows)
}

/// A bounded complex over a path category with `len` terms of at most
/// `width` summands. Each differential is drawn from the kernel of
/// precomposition with the previous one, so `d∘d = 0` holds by construction.
pub fn random_acomplex(rng: &mut Rng64, a: &AdditiveCategoryData, name: &str, lo: i32, len: usize, width: usize) -> AComplex {
    let c = a.category();
    let n = c.num_objects();
    let terms: Vec<Vec<usize>> = (0..len).map(|_| (0..rng.gen_range(1..=width.max(1))).map(|_| rng.gen_range(0..n)).collect()).collect();
    let mut d: Vec<BTreeMap<(usize, usize), Vec<Int>>> = Vec::new();
    for k in 0..len.saturating_sub(1) {
        let (src, tgt) = (&terms[k], &terms[k + 1]);
        // unknown components (i, j): src[j] → tgt[i]
        let mut unknowns = Vec::new();
        let mut off = 0;
        for (i, &ti) in tgt.iter().enumerate() {
            for (j, &sj) in src.iter().enumerate() {
                let r = c.rank(sj, ti, 0);
                if r > 0 {
                    unknowns.push((i, j, off, r));
                    off += r;
                }
            }
        }
        let total = off;
        let sol = if k == 0 || total == 0 {
            let full = Lattice::full(total);
            random_in_lattice(rng, &full, 2)
        } else {
            let prev_terms = &terms[k - 1];
            let prev = &d[k - 1];
            // rows: composite components (i, p) from prev_terms[p] → tgt[i]
            let mut rows = Vec::new();
            let mut roff = 0;
            for (i, &ti) in tgt.iter().enumerate() {
                for (p, &pp) in prev_terms.iter().enumerate() {
                    let r = c.rank(pp, ti, 0);
                    if r > 0 {
                        rows.push((i, p, roff));
                        roff += r;
                    }
                }
            }
            let mut m = IntMatrix::zeros(roff, total);
            for &(i, j, uoff, r) in &unknowns {
                for l in 0..r {
                    let mut e = zero_vec(r);
                    e[l] = int(1);
                    for &(ri, p, ro) in &rows {
                        if ri != i {
                            continue;
                        }
                        if let Some(dp) = prev.get(&(j, p)) {
                            let v = c.compose((prev_terms[p], src[j], tgt[i]), 0, &e, 0, dp);
                            for (t, x) in v.iter().enumerate() {
                                *m.get_mut(ro + t, uoff + l) += x;
                            }
                        }
                    }
                }
            }
            random_in_lattice(rng, &Lattice::kernel(&m), 2)
        };
        let mut map = BTreeMap::new();
        for &(i, j, uoff, r) in &unknowns {
            let v = sol[uoff..uoff + r].to_vec();
            if v.iter().any(|x| *x != int(0)) {
                map.insert((i, j), v);
            }
        }
        d.push(map);
    }
    AComplex { name: name.into(), lo, terms, d }
}

/// A representation by free groups in degree 0 with random integer matrices.
pub fn random_module_rep(rng: &mut Rng64, a: &AdditiveCategoryData, arrows: &[(usize, usize)], max_rank: usize) -> QuiverRep {
    let n = a.category().num_objects();
    let ranks: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_rank.max(1))).collect();
    let objects = ranks.iter().map(|&r| FGAbComplex::free(0, &[r], Vec::new())).collect();
    let arrows = arrows
        .iter()
        .map(|&(s, t)| {
            let rows: Vec<Vec<Int>> = (0..ranks[t]).map(|_| (0..ranks[s]).map(|_| small(rng, 3)).collect()).collect();
            let mut blocks = BTreeMap::new();
            blocks.insert(0, IntMatrix::from_int_rows(ranks[t], ranks[s], rows));
            GradedMap { degree: 0, blocks }
        })
        .collect();
    QuiverRep { objects, arrows }
}

/// Random free complex on `[lo, lo+len)`: each differential is a random
/// element of the kernel of precomposition with the previous one.
pub fn random_free_complex(rng: &mut Rng64, lo: i32, len: usize, max_rank: usize) -> FGAbComplex {
    let ranks: Vec<usize> = (0..len).map(|_| rng.gen_range(0..=max_rank)).collect();
    let mut ds: Vec<IntMatrix> = Vec::new();
    for k in 0..len.saturating_sub(1) {
        let (r0, r1) = (ranks[k], ranks[k + 1]);
        // unknown D (r1×r0), constraint D·prev = 0
        let m = match ds.last() {
            None => IntMatrix::zeros(0, r0 * r1),
            Some(prev) => {
                let rp = prev.cols();
                let mut m = IntMatrix::zeros(r1 * rp, r1 * r0);
                for i in 0..r1 {
                    for j in 0..r0 {
                        for p in 0..rp {
                            *m.get_mut(i * rp + p, i * r0 + j) += prev.get(j, p);
                        }
                    }
                }
                m
            }
        };
        let v = random_in_lattice(rng, &Lattice::kernel(&m), 2);
        let rows: Vec<Vec<Int>> = (0..r1).map(|i| v[i * r0..(i + 1) * r0].to_vec()).collect();
        ds.push(IntMatrix::from_int_rows(r1, r0, rows));
    }
    FGAbComplex::free(lo, &ranks, ds)
}

/// Random chain map `x → y`: a combination of the cycles of the degree-0
/// hom complex.
pub fn random_chain_map(rng: &mut Rng64, x: &FGAbComplex, y: &FGAbComplex) -> GradedMap {
    let degs: Vec<i32> = x.degrees().filter(|&k| x.rank(k) > 0 && y.rank(k) > 0).collect();
    let mut layout = Vec::new();
    let mut off = 0;
    for &k in &degs {
        layout.push((k, off));
        off += x.rank(k) * y.rank(k);
    }
    // constraint: d_y f_k − f_{k+1} d_x = 0 for every k
    let (lo, hi) = (x.lo().min(y.lo()) - 1, x.hi().max(y.hi()));
    let mut rows = Vec::new();
    for k in lo..=hi {
        let (rx, ry1) = (x.rank(k), y.rank(k + 1));
        let mut block = IntMatrix::zeros(ry1 * rx, off);
        let dy = y.differential(k);
        let dx = x.differential(k);
        if let Some(&(_, o)) = layout.iter().find(|e| e.0 == k) {
            let cols = x.rank(k);
            for i in 0..ry1 {
                for j in 0..rx {
                    for m in 0..y.rank(k) {
                        *block.get_mut(i * rx + j, o + m * cols + j) += dy.get(i, m);
                    }
                }
            }
        }
        if let Some(&(_, o)) = layout.iter().find(|e| e.0 == k + 1) {
            let cols = x.rank(k + 1);
            for i in 0..ry1 {
                for j in 0..rx {
                    for m in 0..cols {
                        *block.get_mut(i * rx + j, o + i * cols + m) -= dx.get(m, j);
                    }
                }
            }
        }
        rows.push(block);
    }
    let m = rows.iter().fold(IntMatrix::zeros(0, off), |acc, b| acc.vstack(b));
    let v = random_in_lattice(rng, &Lattice::kernel(&m), 2);
    let mut blocks = BTreeMap::new();
    for &(k, o) in &layout {
        let (r, c) = (y.rank(k), x.rank(k));
        let rows: Vec<Vec<Int>> = (0..r).map(|i| v[o + i * c..o + (i + 1) * c].to_vec()).collect();
        blocks.insert(k, IntMatrix::from_int_rows(r, c, rows));
    }
    GradedMap { degree: 0, blocks }
}

/// A representation by free complexes and random chain maps.
pub fn random_complex_rep(rng: &mut Rng64, a: &AdditiveCategoryData, arrows: &[(usize, usize)], lo: i32, len: usize, max_rank: usize) -> QuiverRep {
    let n = a.category().num_objects();
    let objects: Vec<FGAbComplex> = (0..n).map(|_| random_free_complex(rng, lo, len, max_rank)).collect();
    let arrows = arrows.iter().map(|&(s, t)| random_chain_map(rng, &objects[s], &objects[t])).collect();
    QuiverRep { objects, arrows }
}

/// One object `e` with `C^0 = Z·id`, `C^{−1} = Z·u` and `δu = k·id`.
pub fn delta_u_category(k: i64) -> DgCategory {
    let mut b = DgCategory::builder(vec!["e"]);
    b.hom(0, 0, 0, HomSpace::free(vec!["id"]));
    b.hom(0, 0, -1, HomSpace::free(vec!["u"]));
    b.differential(0, 0, -1, IntMatrix::from_rows(&[vec![k]]));
    b.compose((0, 0, 0), (0, 0), (0, 0), 0, int(1));
    b.compose((0, 0, 0), (-1, 0), (0, 0), 0, int(1));
    b.compose((0, 0, 0), (0, 0), (-1, 0), 0, int(1));
    b.identity(0, ints(&[1]));
    b.build().expect("valid by construction")
}

/// `e ↦ (Z --k--> Z)` in degrees −1, 0, with `u` acting as the contracting
/// map of degree −1.
pub fn delta_u_realization(k: i64) -> DGFunctorData {
    let c = Arc::new(delta_u_category(k));
    let obj = FGAbComplex::free(-1, &[1, 1], vec![IntMatrix::from_rows(&[vec![k]])]);
    let mut maps = BTreeMap::new();
    maps.insert((0, 0, 0), vec![GradedMap::identity(&obj)]);
    let mut h = BTreeMap::new();
    h.insert(0, IntMatrix::from_rows(&[vec![1]]));
    maps.insert((0, 0, -1), vec![GradedMap { degree: -1, blocks: h }]);
    DGFunctorData::covariant(c, vec![obj], maps)
}

/// `e@0 → e@1 → e@2` with `q01 = id`, `q12 = −k·id` and `q02 = u`.
pub fn delta_u_three_term(k: i64) -> TwistedComplex {
    let slots = (0..3).map(|i| Slot { index: i, object: 0 }).collect();
    let mut arrows = BTreeMap::new();
    arrows.insert((0, 1), ints(&[1]));
    arrows.insert((1, 2), ints(&[-k]));
    arrows.insert((0, 2), ints(&[1]));
    TwistedComplex { slots, arrows }
}

/// Random closed degree-0 morphism, `None` when the cycle group is zero.
pub fn random_closed_morphism(rng: &mut Rng64, c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex) -> Option<TwistedMorphism> {
    let th = twisted_hom(c, x, y);
    let lay = th.layout(0);
    if lay.rank() == 0 {
        return None;
    }
    let z = th.complex.cycles(0);
    if z.rank() == 0 {
        return None;
    }
    let v = random_in_lattice(rng, &z, 2);
    let f = lay.from_vector(&v);
    (!f.is_zero()).then_some(f)
}

/// A random twisted complex with at most `max_slots` slots: singletons at
/// random indices in `[lo, hi]`, combined by cones of random closed
/// morphisms, shifts and direct sums.
pub fn random_twisted(rng: &mut Rng64, c: &DgCategory, lo: i32, hi: i32, max_slots: usize) -> TwistedComplex {
    let n = c.num_objects();
    let mut pool: Vec<TwistedComplex> = (0..3).map(|_| TwistedComplex::singleton(rng.gen_range(0..n), rng.gen_range(lo..=hi))).collect();
    for _ in 0..16 {
        let op = rng.gen_range(0..6);
        let x = pool.choose(rng).unwrap().clone();
        let y = pool.choose(rng).unwrap().clone();
        let next = match op {
            0..=3 => {
                // align so a degree-0 closed map can exist: put y one step above some slot of x
                let sx = x.slots.choose(rng).unwrap().index;
                let sy = y.slots.choose(rng).unwrap().index;
                let y2 = shift(&y, sy - sx - rng.gen_range(0..=1));
                match random_closed_morphism(rng, c, &x, &y2) {
                    Some(f) => cone(c, &x, &y2, &f).map(|k| k.object).ok(),
                    None => None,
                }
            }
            4 => Some(direct_sum(&x, &y)),
            _ => Some(shift(&x, rng.gen_range(-1..=1))),
        };
        if let Some(z) = next {
            let ok = z.slots.len() <= max_slots && z.slots.iter().all(|s| s.index >= lo && s.index <= hi);
            if ok && !z.is_empty() {
                pool.push(z);
            }
        }
    }
    pool.into_iter().max_by_key(|z| (z.arrows.len().min(4), z.slots.len())).unwrap()
}

/// A random `B^b(A)` with its termwise realization, restricted to the
/// negative part so the result is a valid negative source.
pub struct BbSample {
    pub path: AdditiveCategoryData,
    pub arrows: Vec<(usize, usize)>,
    pub complexes: Vec<AComplex>,
    pub bb: Arc<DgCategory>,
    pub negative: Arc<DgCategory>,
    pub realization: DGFunctorData,
}

pub fn random_bb_sample(rng: &mut Rng64, vertices: usize, objects: usize, max_len: usize) -> Result<BbSample, DgError> {
    let (path, arrows) = random_path_category(rng, vertices, vertices + 1);
    let complexes: Vec<AComplex> = (0..objects)
        .map(|k| {
            let len = rng.gen_range(1..=max_len.max(1));
            let lo = rng.gen_range(-1..=0);
            random_acomplex(rng, &path, &format!("P{k}"), lo, len, 2)
        })
        .collect();
    let bb = Arc::new(build_bb(&path, &complexes)?);
    let rep = random_module_rep(rng, &path, &arrows, 2);
    let full = termwise_realization(&path, &rep, &complexes, bb.clone())?;
    let (neg, incl) = negative_part_with_inclusion(&bb);
    let negative = Arc::new(neg);
    let mut incl = incl;
    incl.source = negative.clone();
    let realization = restrict(&full, &incl)?;
    Ok(BbSample { path, arrows, complexes, bb, negative, realization })
}

/// `P ⊕ Q` termwise; the summands of `P` come first in every term.
pub fn acomplex_sum(p: &AComplex, q: &AComplex, name: &str) -> AComplex {
    if p.terms.is_empty() {
        return AComplex { name: name.into(), ..q.clone() };
    }
    if q.terms.is_empty() {
        return AComplex { name: name.into(), ..p.clone() };
    }
    let lo = p.lo.min(q.lo);
    let hi = p.hi().max(q.hi());
    let terms: Vec<Vec<usize>> = (lo..=hi).map(|k| p.term(k).iter().chain(q.term(k)).copied().collect()).collect();
    let mut d = vec![BTreeMap::new(); (hi - lo) as usize];
    for k in lo..hi {
        let slot = &mut d[(k - lo) as usize];
        for (i, _) in p.term(k + 1).iter().enumerate() {
            for (j, _) in p.term(k).iter().enumerate() {
                if let Some(v) = p.d_component(k, i, j) {
                    slot.insert((i, j), v.clone());
                }
            }
        }
        let (oi, oj) = (p.term(k + 1).len(), p.term(k).len());
        for (i, _) in q.term(k + 1).iter().enumerate() {
            for (j, _) in q.term(k).iter().enumerate() {
                if let Some(v) = q.d_component(k, i, j) {
                    slot.insert((oi + i, oj + j), v.clone());
                }
            }
        }
    }
    AComplex { name: name.into(), lo, terms, d }
}

/// Element of `B^b(A)(x, x)⁰` that is the identity on the summands
/// `(k, j)` selected by `keep` and zero elsewhere.
pub fn bb_summand_idempotent(a: &AdditiveCategoryData, complexes: &[AComplex], x: usize, keep: impl Fn(i32, usize) -> bool) -> Vec<Int> {
    let c = a.category();
    let p = &complexes[x];
    let (blocks, total) = crate::dgcat::bb_layout(c, p, p, 0);
    let mut v = zero_vec(total);
    for (k, j, i, off, r) in blocks {
        if i == j && keep(k, j) {
            let id = c.identity(p.term(k)[j]);
            v[off..off + r].clone_from_slice(&id[..r]);
        }
    }
    v
}
