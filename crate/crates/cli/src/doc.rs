//! The document format: UTF-8 JSON with a top-level `kind` and
//! `schema_version`. Keys are emitted in sorted order and integers as
//! decimal strings, so serialization is canonical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use dgtwist::dgcat::{DgCategory, DgError, HomSpace, StructuralError};
use dgtwist::realize::{validate_functor, DGFunctorData, GradedMap, Variance};
use dgtwist::twisted::{check_morphism, check_structure, Slot, TwistedComplex, TwistedMorphism};
use dgtwist::{FGAbComplex, FGAbGroup, Int, IntMatrix};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Hypothesis(_) => 1,
            _ => 2,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Structural(_) => "structural",
            CliError::Hypothesis(_) => "hypothesis",
            CliError::Io(_) => "io",
        }
    }

    /// The machine-readable error document.
    pub fn to_document(&self) -> Value {
        let mut m = Map::new();
        m.insert("class".into(), self.class().into());
        m.insert("exit_code".into(), self.exit_code().into());
        let msg = match self {
            CliError::Schema(s) | CliError::Structural(s) | CliError::Hypothesis(s) | CliError::Io(s) => s.clone(),
        };
        m.insert("message".into(), msg.into());
        envelope("error", Value::Object(m))
    }
}

impl From<StructuralError> for CliError {
    fn from(e: StructuralError) -> Self {
        CliError::Structural(e.to_string())
    }
}

impl From<DgError> for CliError {
    fn from(e: DgError) -> Self {
        match e {
            DgError::Structural(s) => s.into(),
            DgError::Hypothesis(h) => CliError::Hypothesis(h),
        }
    }
}

/// An integer serialized as a decimal string; numbers are accepted on input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Num(pub Int);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                v.parse::<Int>().map(Num).map_err(|_| E::custom(format!("`{v}` is not an integer")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(Int::from(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(Int::from(v)))
            }
        }
        d.deserialize_any(V)
    }
}

fn nums(v: &[Int]) -> Vec<Num> {
    v.iter().cloned().map(Num).collect()
}

fn ints(v: &[Num]) -> Vec<Int> {
    v.iter().map(|n| n.0.clone()).collect()
}

/// Row-major entries with an explicit shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub shape: [usize; 2],
    pub entries: Vec<Num>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &IntMatrix) -> Self {
        let entries = m.to_rows().into_iter().flatten().map(Num).collect();
        MatrixDoc { shape: [m.rows(), m.cols()], entries }
    }

    pub fn to_matrix(&self) -> Result<IntMatrix, CliError> {
        let [r, c] = self.shape;
        if self.entries.len() != r * c {
            return Err(CliError::Structural(format!("matrix of shape {r}x{c} has {} entries", self.entries.len())));
        }
        let rows = (0..r).map(|i| ints(&self.entries[i * c..(i + 1) * c])).collect();
        Ok(IntMatrix::from_int_rows(r, c, rows))
    }
}

// ---------------------------------------------------------------- category

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomDoc {
    pub source: String,
    pub target: String,
    pub degree: i32,
    pub labels: Vec<String>,
    /// Orders of the generators (0 = free); omitted when all are free.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentialDoc {
    pub source: String,
    pub target: String,
    pub degree: i32,
    pub matrix: MatrixDoc,
}

/// `then ∘ first` along `path = [x, y, z]`, where `first = [degree, basis]`
/// lives in `C(x, y)` and `then` in `C(y, z)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionDoc {
    pub path: [String; 3],
    pub first: (i32, usize),
    pub then: (i32, usize),
    pub result: Vec<(usize, Num)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityDoc {
    pub object: String,
    pub coeffs: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryDoc {
    pub objects: Vec<String>,
    pub homs: Vec<HomDoc>,
    #[serde(default)]
    pub differentials: Vec<DifferentialDoc>,
    #[serde(default)]
    pub compositions: Vec<CompositionDoc>,
    #[serde(default)]
    pub identities: Vec<IdentityDoc>,
}

impl CategoryDoc {
    pub fn from_category(c: &DgCategory) -> Self {
        let name = |k: usize| c.objects()[k].clone();
        let homs = c
            .homs()
            .map(|(&(x, y, d), h)| HomDoc {
                source: name(x),
                target: name(y),
                degree: d,
                labels: h.labels.clone(),
                orders: if h.is_free() { Vec::new() } else { nums(&h.orders) },
            })
            .collect();
        let differentials = c
            .differentials()
            .map(|(&(x, y, d), m)| DifferentialDoc { source: name(x), target: name(y), degree: d, matrix: MatrixDoc::from_matrix(m) })
            .collect();
        let mut compositions = Vec::new();
        for (&(x, y, z, a, b), t) in c.compositions() {
            for v in 0..t.nv {
                for u in 0..t.nu {
                    let e = t.get(v, u);
                    if !e.is_empty() {
                        compositions.push(CompositionDoc {
                            path: [name(x), name(y), name(z)],
                            first: (a, u),
                            then: (b, v),
                            result: e.iter().map(|(w, k)| (*w, Num(k.clone()))).collect(),
                        });
                    }
                }
            }
        }
        let identities = (0..c.num_objects())
            .filter(|&x| c.rank(x, x, 0) > 0)
            .map(|x| IdentityDoc { object: name(x), coeffs: nums(c.identity(x)) })
            .collect();
        CategoryDoc { objects: c.objects().to_vec(), homs, differentials, compositions, identities }
    }

    pub fn to_category(&self) -> Result<DgCategory, CliError> {
        let names = Names::new(&self.objects)?;
        let mut b = DgCategory::builder(self.objects.clone());
        let mut seen = BTreeSet::new();
        for h in &self.homs {
            let key = (names.get(&h.source)?, names.get(&h.target)?, h.degree);
            if !seen.insert(key) {
                return Err(CliError::Structural(format!("hom ({}, {}, {}) listed twice", h.source, h.target, h.degree)));
            }
            let orders = if h.orders.is_empty() {
                vec![Int::from(0); h.labels.len()]
            } else if h.orders.len() == h.labels.len() {
                ints(&h.orders)
            } else {
                return Err(CliError::Structural(format!("hom ({}, {}, {}) has {} labels but {} orders", h.source, h.target, h.degree, h.labels.len(), h.orders.len())));
            };
            b.hom(key.0, key.1, key.2, HomSpace { labels: h.labels.clone(), orders });
        }
        for d in &self.differentials {
            b.differential(names.get(&d.source)?, names.get(&d.target)?, d.degree, d.matrix.to_matrix()?);
        }
        for c in &self.compositions {
            let p = (names.get(&c.path[0])?, names.get(&c.path[1])?, names.get(&c.path[2])?);
            for (w, k) in &c.result {
                b.compose(p, c.first, c.then, *w, k.0.clone());
            }
        }
        for i in &self.identities {
            b.identity(names.get(&i.object)?, ints(&i.coeffs));
        }
        Ok(b.build()?)
    }
}

struct Names<'a> {
    index: BTreeMap<&'a str, usize>,
}

impl<'a> Names<'a> {
    fn new(objects: &'a [String]) -> Result<Self, CliError> {
        let mut index = BTreeMap::new();
        for (k, o) in objects.iter().enumerate() {
            if index.insert(o.as_str(), k).is_some() {
                return Err(CliError::Structural(format!("object `{o}` listed twice")));
            }
        }
        Ok(Names { index })
    }

    fn get(&self, name: &str) -> Result<usize, CliError> {
        self.index.get(name).copied().ok_or_else(|| StructuralError::UnknownObject(name.to_string()).into())
    }
}

// ---------------------------------------------------------------- twisted

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotDoc {
    pub index: i32,
    pub object: String,
}

/// A component between slots `source` and `target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub source: usize,
    pub target: usize,
    pub coeffs: Vec<Num>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    pub slots: Vec<SlotDoc>,
    #[serde(default)]
    pub arrows: Vec<EntryDoc>,
}

fn entries(m: &BTreeMap<(usize, usize), Vec<Int>>) -> Vec<EntryDoc> {
    m.iter().map(|(&(s, t), v)| EntryDoc { source: s, target: t, coeffs: nums(v) }).collect()
}

fn entry_map(e: &[EntryDoc], n_src: usize, n_tgt: usize) -> Result<BTreeMap<(usize, usize), Vec<Int>>, CliError> {
    let mut out = BTreeMap::new();
    for a in e {
        if a.source >= n_src || a.target >= n_tgt {
            return Err(StructuralError::Invalid(format!("component ({}, {}) refers to a missing slot", a.source, a.target)).into());
        }
        if out.insert((a.source, a.target), ints(&a.coeffs)).is_some() {
            return Err(CliError::Structural(format!("component ({}, {}) listed twice", a.source, a.target)));
        }
    }
    Ok(out)
}

impl ComplexDoc {
    pub fn from_twisted(c: &DgCategory, x: &TwistedComplex) -> Self {
        let slots = x.slots.iter().map(|s| SlotDoc { index: s.index, object: c.objects()[s.object].clone() }).collect();
        ComplexDoc { slots, arrows: entries(&x.arrows) }
    }

    pub fn to_twisted(&self, c: &DgCategory) -> Result<TwistedComplex, CliError> {
        let names = Names::new(c.objects())?;
        let slots = self.slots.iter().map(|s| Ok(Slot { index: s.index, object: names.get(&s.object)? })).collect::<Result<Vec<_>, CliError>>()?;
        let arrows = entry_map(&self.arrows, slots.len(), slots.len())?;
        let x = TwistedComplex { slots, arrows };
        check_structure(c, &x)?;
        Ok(x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistedDoc {
    pub category: CategoryDoc,
    pub complex: ComplexDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismDoc {
    pub category: CategoryDoc,
    pub source: ComplexDoc,
    pub target: ComplexDoc,
    pub degree: i32,
    pub components: Vec<EntryDoc>,
}

pub struct Twisted {
    pub category: Arc<DgCategory>,
    pub complex: TwistedComplex,
}

pub struct Morphism {
    pub category: Arc<DgCategory>,
    pub source: TwistedComplex,
    pub target: TwistedComplex,
    pub morphism: TwistedMorphism,
}

impl TwistedDoc {
    pub fn new(c: &DgCategory, x: &TwistedComplex) -> Self {
        TwistedDoc { category: CategoryDoc::from_category(c), complex: ComplexDoc::from_twisted(c, x) }
    }

    pub fn resolve(&self) -> Result<Twisted, CliError> {
        let c = self.category.to_category()?;
        let x = self.complex.to_twisted(&c)?;
        Ok(Twisted { category: Arc::new(c), complex: x })
    }
}

impl MorphismDoc {
    pub fn new(c: &DgCategory, x: &TwistedComplex, y: &TwistedComplex, f: &TwistedMorphism) -> Self {
        MorphismDoc {
            category: CategoryDoc::from_category(c),
            source: ComplexDoc::from_twisted(c, x),
            target: ComplexDoc::from_twisted(c, y),
            degree: f.degree,
            components: entries(&f.comps),
        }
    }

    pub fn resolve(&self) -> Result<Morphism, CliError> {
        let c = self.category.to_category()?;
        let x = self.source.to_twisted(&c)?;
        let y = self.target.to_twisted(&c)?;
        let comps = entry_map(&self.components, x.slots.len(), y.slots.len())?;
        let f = TwistedMorphism { degree: self.degree, comps };
        check_morphism(&c, &x, &y, &f)?;
        Ok(Morphism { category: Arc::new(c), source: x, target: y, morphism: f })
    }
}

// ---------------------------------------------------------------- functor

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceDoc {
    Covariant,
    Contravariant,
}

/// A complex of f.g. abelian groups: `orders[k]` presents degree `lo + k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbComplexDoc {
    pub lo: i32,
    pub orders: Vec<Vec<Num>>,
    #[serde(default)]
    pub differentials: Vec<MatrixDoc>,
}

impl AbComplexDoc {
    pub fn from_complex(x: &FGAbComplex) -> Self {
        let orders: Vec<Vec<Num>> = x.degrees().map(|k| nums(x.orders_at(k))).collect();
        let differentials = if orders.is_empty() { Vec::new() } else { (x.lo()..x.hi()).map(|k| MatrixDoc::from_matrix(&x.differential(k))).collect() };
        AbComplexDoc { lo: x.lo(), orders, differentials }
    }

    pub fn to_complex(&self) -> Result<FGAbComplex, CliError> {
        let orders: Vec<Vec<Int>> = self.orders.iter().map(|o| ints(o)).collect();
        let want = orders.len().saturating_sub(1);
        if self.differentials.len() != want {
            return Err(StructuralError::Length { context: "complex differentials".into(), expected: want, found: self.differentials.len() }.into());
        }
        let mut d = Vec::new();
        for (k, m) in self.differentials.iter().enumerate() {
            let m = m.to_matrix()?;
            let exp = (orders[k + 1].len(), orders[k].len());
            if m.shape() != exp {
                return Err(StructuralError::Shape { context: format!("differential at degree {}", self.lo + k as i32), expected: exp, found: m.shape() }.into());
            }
            d.push(m);
        }
        let x = FGAbComplex::new(self.lo, orders, d);
        x.check().map_err(CliError::Hypothesis)?;
        Ok(x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub at: i32,
    pub matrix: MatrixDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedMapDoc {
    pub degree: i32,
    pub blocks: Vec<BlockDoc>,
}

impl GradedMapDoc {
    fn from_map(g: &GradedMap) -> Self {
        GradedMapDoc { degree: g.degree, blocks: g.blocks.iter().map(|(&at, m)| BlockDoc { at, matrix: MatrixDoc::from_matrix(m) }).collect() }
    }

    fn to_map(&self, x: &FGAbComplex, y: &FGAbComplex) -> Result<GradedMap, CliError> {
        let mut blocks = BTreeMap::new();
        for b in &self.blocks {
            let m = b.matrix.to_matrix()?;
            let exp = (y.rank(b.at + self.degree), x.rank(b.at));
            if m.shape() != exp {
                return Err(StructuralError::Shape { context: format!("block at degree {}", b.at), expected: exp, found: m.shape() }.into());
            }
            if blocks.insert(b.at, m).is_some() {
                return Err(CliError::Structural(format!("block at degree {} listed twice", b.at)));
            }
        }
        Ok(GradedMap { degree: self.degree, blocks })
    }
}

/// Images of the basis of the hom `(source, target, degree)` of the declared
/// category. For contravariant functors each image goes `F(target) → F(source)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorMapDoc {
    pub source: String,
    pub target: String,
    pub degree: i32,
    pub images: Vec<GradedMapDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorDoc {
    pub source: CategoryDoc,
    pub variance: VarianceDoc,
    /// One complex per object of `source`, in order.
    pub objects: Vec<AbComplexDoc>,
    pub maps: Vec<FunctorMapDoc>,
}

pub struct Functor {
    /// The declared source (twisted complexes live here).
    pub category: Arc<DgCategory>,
    pub data: DGFunctorData,
}

impl FunctorDoc {
    pub fn from_functor(f: &DGFunctorData) -> Self {
        let (declared, variance) = match f.variance {
            Variance::Covariant => ((*f.source).clone(), VarianceDoc::Covariant),
            Variance::Contravariant => (dgtwist::dgcat::opposite(&f.source), VarianceDoc::Contravariant),
        };
        let name = |k: usize| declared.objects()[k].clone();
        let mut maps: Vec<FunctorMapDoc> = f
            .maps
            .iter()
            .map(|(&(x, y, d), imgs)| {
                let (s, t) = if variance == VarianceDoc::Covariant { (x, y) } else { (y, x) };
                FunctorMapDoc { source: name(s), target: name(t), degree: d, images: imgs.iter().map(GradedMapDoc::from_map).collect() }
            })
            .collect();
        maps.sort_by_key(|a| (declared.object_index(&a.source).ok(), declared.object_index(&a.target).ok(), a.degree));
        FunctorDoc { source: CategoryDoc::from_category(&declared), variance, objects: f.objects.iter().map(AbComplexDoc::from_complex).collect(), maps }
    }

    pub fn resolve(&self) -> Result<Functor, CliError> {
        let c = self.source.to_category()?;
        if self.objects.len() != c.num_objects() {
            return Err(StructuralError::Length { context: "object images".into(), expected: c.num_objects(), found: self.objects.len() }.into());
        }
        let objects = self.objects.iter().map(|o| o.to_complex()).collect::<Result<Vec<_>, _>>()?;
        let names = Names::new(c.objects())?;
        let mut maps = BTreeMap::new();
        for m in &self.maps {
            let (x, y) = (names.get(&m.source)?, names.get(&m.target)?);
            let r = c.rank(x, y, m.degree);
            if m.images.len() != r {
                return Err(StructuralError::Length { context: format!("images of ({}, {}, {})", m.source, m.target, m.degree), expected: r, found: m.images.len() }.into());
            }
            let (fs, ft) = if self.variance == VarianceDoc::Covariant { (x, y) } else { (y, x) };
            let imgs = m.images.iter().map(|g| g.to_map(&objects[fs], &objects[ft])).collect::<Result<Vec<_>, _>>()?;
            if maps.insert((x, y, m.degree), imgs).is_some() {
                return Err(CliError::Structural(format!("map ({}, {}, {}) listed twice", m.source, m.target, m.degree)));
            }
        }
        let c = Arc::new(c);
        let data = match self.variance {
            VarianceDoc::Covariant => DGFunctorData::covariant(c.clone(), objects, maps),
            VarianceDoc::Contravariant => DGFunctorData::contravariant(&c, objects, maps),
        };
        let problems = validate_functor(&data)?;
        if let Some(p) = problems.first() {
            return Err(CliError::Hypothesis(format!("not a DG functor: {p}")));
        }
        Ok(Functor { category: c, data })
    }
}

// ---------------------------------------------------------------- job

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<i32>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub kill: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[i32; 2]>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub rational: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

/// A command with input documents given as paths relative to the job file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDoc {
    pub command: String,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub options: JobOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn is_default(o: &JobOptions) -> bool {
    *o == JobOptions::default()
}

// ---------------------------------------------------------------- envelope

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Category(CategoryDoc),
    Twisted(TwistedDoc),
    Morphism(MorphismDoc),
    Functor(FunctorDoc),
    Job(JobDoc),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Category(_) => "category",
            Document::Twisted(_) => "twisted",
            Document::Morphism(_) => "morphism",
            Document::Functor(_) => "functor",
            Document::Job(_) => "job",
        }
    }

    pub fn to_value(&self) -> Value {
        let body = match self {
            Document::Category(d) => serde_json::to_value(d),
            Document::Twisted(d) => serde_json::to_value(d),
            Document::Morphism(d) => serde_json::to_value(d),
            Document::Functor(d) => serde_json::to_value(d),
            Document::Job(d) => serde_json::to_value(d),
        };
        envelope(self.kind(), body.expect("documents serialize"))
    }
}

/// Adds `kind` and `schema_version` to an object body.
pub fn envelope(kind: &str, body: Value) -> Value {
    let mut m = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("body".into(), other);
            m
        }
    };
    m.insert("kind".into(), kind.into());
    m.insert("schema_version".into(), SCHEMA_VERSION.into());
    Value::Object(m)
}

/// Canonical text: pretty JSON with sorted keys and a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn parse_document(text: &str) -> Result<Document, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("not a JSON document: {e}")))?;
    let Value::Object(mut m) = v else {
        return Err(CliError::Schema("top level must be an object".into()));
    };
    match m.remove("schema_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(CliError::Schema(format!("unsupported schema_version {other}"))),
        None => return Err(CliError::Schema("missing schema_version".into())),
    }
    let kind = match m.remove("kind") {
        Some(Value::String(k)) => k,
        Some(other) => return Err(CliError::Schema(format!("kind must be a string, found {other}"))),
        None => return Err(CliError::Schema("missing kind".into())),
    };
    let body = Value::Object(m);
    fn body_as<T: serde::de::DeserializeOwned>(kind: &str, body: Value) -> Result<T, CliError> {
        serde_json::from_value(body).map_err(|e| CliError::Schema(format!("{kind} document: {e}")))
    }
    Ok(match kind.as_str() {
        "category" => Document::Category(body_as(&kind, body)?),
        "twisted" => Document::Twisted(body_as(&kind, body)?),
        "morphism" => Document::Morphism(body_as(&kind, body)?),
        "functor" => Document::Functor(body_as(&kind, body)?),
        "job" => Document::Job(body_as(&kind, body)?),
        other => return Err(CliError::Schema(format!("unknown kind `{other}`"))),
    })
}

pub fn group_value(g: &FGAbGroup, rational: bool) -> Value {
    let mut m = Map::new();
    if rational {
        m.insert("dimension".into(), g.free_rank.into());
    } else {
        m.insert("free_rank".into(), g.free_rank.into());
        m.insert("torsion".into(), Value::Array(g.torsion.iter().map(|t| Value::String(t.to_string())).collect()));
    }
    Value::Object(m)
}
