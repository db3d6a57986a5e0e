//! Command implementations. Each returns a document and an exit status.

use std::sync::Arc;

use dgtwist::dgcat::{build_s, validate_dg, DgCategory};
use dgtwist::gen;
use dgtwist::quotient::dg_quotient;
use dgtwist::realize::{lefschetz_check, spectral_sequence, total_complex, truncated_realization, weight_graded, FilteredComplex, SpectralSequence};
use dgtwist::twisted::{
    apply_tn, cone, euler_class, hom_complex, hom_degree_range, is_closed, is_zero_in_tr, mc_check, stupid_window, weight_complex_t0, TwistedMorphism,
};
use dgtwist::{FGAbComplex, Rat};
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::doc::{envelope, group_value, CategoryDoc, CliError, Document, Functor, Morphism, MatrixDoc, Twisted, TwistedDoc};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Homs,
    Cone,
    T0,
    Tn { level: u32 },
    Window { a: i32, b: i32 },
    Ss,
    Truncated { b: i32, n: u32 },
    Lefschetz,
    Quotient { kill: Vec<String>, window: (i32, i32) },
    Euler,
    McCheck,
    Check { seed: u64, count: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Homs => "homs",
            Command::Cone => "cone",
            Command::T0 => "t0",
            Command::Tn { .. } => "tn",
            Command::Window { .. } => "window",
            Command::Ss => "ss",
            Command::Truncated { .. } => "truncated",
            Command::Lefschetz => "lefschetz",
            Command::Quotient { .. } => "quotient",
            Command::Euler => "euler",
            Command::McCheck => "mc-check",
            Command::Check { .. } => "check",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Command::Check { .. } => 0,
            Command::Homs | Command::Ss | Command::Truncated { .. } | Command::Lefschetz => 2,
            _ => 1,
        }
    }
}

pub struct Outcome {
    pub document: Value,
    pub exit: i32,
}

impl Outcome {
    fn ok(document: Value) -> Self {
        Outcome { document, exit: 0 }
    }
}

fn report(command: &Command, ok: bool, result: Value) -> Outcome {
    let mut m = Map::new();
    m.insert("command".into(), command.name().into());
    m.insert("status".into(), if ok { "ok" } else { "hypothesis_failure" }.into());
    m.insert("result".into(), result);
    Outcome { document: envelope("report", Value::Object(m)), exit: if ok { 0 } else { 1 } }
}

fn want<'a>(docs: &'a [Document], k: usize, kind: &str) -> Result<&'a Document, CliError> {
    let d = &docs[k];
    if d.kind() != kind {
        return Err(CliError::Schema(format!("input {} must be a {kind} document, found {}", k + 1, d.kind())));
    }
    Ok(d)
}

fn twisted(docs: &[Document], k: usize) -> Result<Twisted, CliError> {
    match want(docs, k, "twisted")? {
        Document::Twisted(t) => t.resolve(),
        _ => unreachable!(),
    }
}

fn morphism(docs: &[Document], k: usize) -> Result<Morphism, CliError> {
    match want(docs, k, "morphism")? {
        Document::Morphism(m) => m.resolve(),
        _ => unreachable!(),
    }
}

fn functor(docs: &[Document], k: usize) -> Result<Functor, CliError> {
    match want(docs, k, "functor")? {
        Document::Functor(f) => f.resolve(),
        _ => unreachable!(),
    }
}

fn category(docs: &[Document], k: usize) -> Result<DgCategory, CliError> {
    match want(docs, k, "category")? {
        Document::Category(c) => c.to_category(),
        _ => unreachable!(),
    }
}

fn same_category(a: &DgCategory, b: &DgCategory, what: &str) -> Result<(), CliError> {
    if a != b {
        return Err(CliError::Structural(format!("{what} are over different categories")));
    }
    Ok(())
}

/// Twisted complexes must satisfy the Maurer–Cartan equation before use.
fn require_mc(t: &Twisted) -> Result<(), CliError> {
    if !mc_check(&t.category, &t.complex)?.holds() {
        return Err(CliError::Hypothesis("twisted complex violates the Maurer–Cartan equation".into()));
    }
    Ok(())
}

fn rat(r: &Rat) -> Value {
    Value::String(r.to_string())
}

fn cohomology_value(x: &FGAbComplex, rational: bool) -> Value {
    Value::Array(x.cohomology().iter().filter(|(_, g)| !g.is_zero()).map(|(d, g)| json!({ "degree": d, "group": group_value(g, rational) })).collect())
}

fn ss_value(ss: &SpectralSequence, fc: &FilteredComplex, rational: bool) -> Value {
    let pages: Vec<Value> = ss
        .pages
        .iter()
        .map(|p| {
            let entries: Vec<Value> = p.groups().iter().map(|(&(a, b), g)| json!({ "p": a, "q": b, "group": group_value(g, rational) })).collect();
            let diffs: Vec<Value> = p
                .differentials
                .iter()
                .filter(|(_, m)| !m.is_zero())
                .map(|(&(a, b), m)| json!({ "p": a, "q": b, "matrix": MatrixDoc::from_matrix(m) }))
                .collect();
            json!({ "r": p.r, "entries": entries, "differentials": diffs })
        })
        .collect();
    let limit: Vec<Value> = ss.limit.iter().filter(|(_, g)| !g.is_zero()).map(|(&(a, b), g)| json!({ "p": a, "q": b, "group": group_value(g, rational) })).collect();
    let abutment: Vec<Value> = ss
        .abutment
        .iter()
        .filter(|(_, g)| !g.is_zero())
        .map(|(&s, g)| {
            let w: Vec<Value> = weight_graded(fc, s).iter().map(|(&b, g)| json!({ "weight": b, "graded": group_value(g, rational) })).collect();
            json!({ "degree": s, "group": group_value(g, rational), "weight_filtration": w })
        })
        .collect();
    json!({ "pages": pages, "limit": limit, "abutment": abutment, "check": ss.check().is_ok() })
}

pub fn execute(cmd: &Command, docs: &[Document], rational: bool) -> Result<Outcome, CliError> {
    if docs.len() != cmd.arity() {
        return Err(CliError::Schema(format!("`{}` takes {} input document(s), got {}", cmd.name(), cmd.arity(), docs.len())));
    }
    match cmd {
        Command::Validate => validate(cmd, &docs[0]),
        Command::Homs => {
            let (x, y) = (twisted(docs, 0)?, twisted(docs, 1)?);
            same_category(&x.category, &y.category, "inputs")?;
            require_mc(&x)?;
            require_mc(&y)?;
            let hc = hom_complex(&x.category, &x.complex, &y.complex);
            let range = hom_degree_range(&x.category, &x.complex, &y.complex);
            let groups = cohomology_value(&hc, rational);
            Ok(report(cmd, true, json!({ "hom_degrees": range.map(|(a, b)| vec![a, b]), "cohomology": groups })))
        }
        Command::Cone => {
            let m = morphism(docs, 0)?;
            let k = cone(&m.category, &m.source, &m.target, &m.morphism)?;
            Ok(Outcome::ok(Document::Twisted(TwistedDoc::new(&m.category, &k.object)).to_value()))
        }
        Command::T0 => {
            let x = twisted(docs, 0)?;
            require_mc(&x)?;
            let (h, t) = weight_complex_t0(&x.category, &x.complex)?;
            let names = h.category().objects();
            let terms: Vec<Value> = (t.lo..=t.hi()).map(|k| json!({ "degree": k, "objects": t.term(k).iter().map(|&o| names[o].clone()).collect::<Vec<_>>() })).collect();
            let mut diffs = Vec::new();
            for (k, d) in t.d.iter().enumerate() {
                for (&(i, j), v) in d {
                    diffs.push(json!({ "degree": t.lo + k as i32, "source": j, "target": i, "coeffs": v.iter().map(|c| c.to_string()).collect::<Vec<_>>() }));
                }
            }
            let zero = is_zero_in_tr(&x.category, &x.complex).is_some();
            Ok(report(cmd, true, json!({ "homotopy_category": CategoryDoc::from_category(h.category()), "terms": terms, "differentials": diffs, "zero_in_tr": zero })))
        }
        Command::Tn { level } => {
            let x = twisted(docs, 0)?;
            require_mc(&x)?;
            let (cn, _, y) = apply_tn(&x.category, &x.complex, *level)?;
            Ok(Outcome::ok(Document::Twisted(TwistedDoc::new(&cn, &y)).to_value()))
        }
        Command::Window { a, b } => {
            let x = twisted(docs, 0)?;
            require_mc(&x)?;
            let w = stupid_window(&x.category, &x.complex, *a, *b)?;
            Ok(Outcome::ok(Document::Twisted(TwistedDoc::new(&x.category, &w)).to_value()))
        }
        Command::Ss => {
            let f = functor(docs, 0)?;
            let x = twisted(docs, 1)?;
            same_category(&f.category, &x.category, "functor source and twisted complex")?;
            require_mc(&x)?;
            let fc = total_complex(&f.data, &x.complex)?;
            let ss = spectral_sequence(&f.data, &x.complex)?;
            let v = ss_value(&ss, &fc, rational);
            let ok = v["check"] == Value::Bool(true);
            Ok(report(cmd, ok, v))
        }
        Command::Truncated { b, n } => {
            let f = functor(docs, 0)?;
            let x = twisted(docs, 1)?;
            same_category(&f.category, &x.category, "functor source and twisted complex")?;
            require_mc(&x)?;
            let t = truncated_realization(&f.data, &x.complex, *b, *n)?;
            let v = json!({
                "b": b,
                "N": n,
                "cohomology": cohomology_value(&t.filtered.total, rational),
                "spectral_sequence": ss_value(&t.ss, &t.filtered, rational),
            });
            Ok(report(cmd, t.ss.check().is_ok(), v))
        }
        Command::Lefschetz => {
            let f = functor(docs, 0)?;
            let m = morphism(docs, 1)?;
            same_category(&f.category, &m.category, "functor source and morphism")?;
            if m.source != m.target {
                return Err(CliError::Structural("morphism must be an endomorphism".into()));
            }
            let r = lefschetz_check(&f.data, &m.source, &m.morphism)?;
            Ok(report(cmd, r.equal, json!({ "lhs": rat(&r.lhs), "rhs": rat(&r.rhs), "equal": r.equal })))
        }
        Command::Quotient { kill, window } => {
            let c = category(docs, 0)?;
            let killed = kill.iter().map(|k| c.object_index(k)).collect::<Result<Vec<_>, _>>()?;
            let q = dg_quotient(&c, &killed, *window)?;
            Ok(Outcome::ok(Document::Category(CategoryDoc::from_category(&q.category)).to_value()))
        }
        Command::Euler => {
            let x = twisted(docs, 0)?;
            let class: Map<String, Value> = euler_class(&x.category, &x.complex).into_iter().filter(|(_, v)| *v != 0).map(|(k, v)| (k, Value::from(v))).collect();
            Ok(report(cmd, true, json!({ "class": class })))
        }
        Command::McCheck => {
            let x = twisted(docs, 0)?;
            let r = mc_check(&x.category, &x.complex)?;
            let residuals: Vec<Value> = r
                .residuals
                .iter()
                .map(|((s, t), v)| json!({ "source": s, "target": t, "coeffs": v.iter().map(|c| c.to_string()).collect::<Vec<_>>() }))
                .collect();
            Ok(report(cmd, r.holds(), json!({ "holds": r.holds(), "residuals": residuals })))
        }
        Command::Check { seed, count } => Ok(random_check(cmd, *seed, *count)),
    }
}

fn validate(cmd: &Command, d: &Document) -> Result<Outcome, CliError> {
    let (mut problems, mut checked) = (Vec::new(), 0);
    let mut category_report = |c: &DgCategory, problems: &mut Vec<String>| {
        let r = validate_dg(c);
        checked += r.checked;
        problems.extend(r.violations.iter().map(|v| v.to_string()));
    };
    match d {
        Document::Category(c) => category_report(&c.to_category()?, &mut problems),
        Document::Twisted(t) => {
            let x = t.resolve()?;
            category_report(&x.category, &mut problems);
            if !mc_check(&x.category, &x.complex)?.holds() {
                problems.push("Maurer–Cartan equation fails".into());
            }
        }
        Document::Morphism(m) => {
            let m = m.resolve()?;
            category_report(&m.category, &mut problems);
            for (name, x) in [("source", &m.source), ("target", &m.target)] {
                if !mc_check(&m.category, x)?.holds() {
                    problems.push(format!("{name} violates the Maurer–Cartan equation"));
                }
            }
        }
        Document::Functor(f) => {
            let f = f.resolve()?;
            category_report(&f.category, &mut problems);
        }
        Document::Job(j) => {
            parse_job_command(j)?;
        }
    }
    let mut extra = Map::new();
    if let Document::Morphism(m) = d {
        let m = m.resolve()?;
        extra.insert("closed".into(), is_closed(&m.category, &m.source, &m.target, &m.morphism).into());
    }
    let ok = problems.is_empty();
    let mut result = json!({ "document": d.kind(), "valid": ok, "checked": checked, "violations": problems });
    result.as_object_mut().unwrap().extend(extra);
    Ok(report(cmd, ok, result))
}

/// Randomized property sweep: DG axioms on path categories, Maurer–Cartan
/// and contractibility of `cone(id)`, and `δ² = 0` on hom complexes.
fn random_check(cmd: &Command, seed: u64, count: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let mut failures = Vec::new();
    for i in 0..count {
        let n = rng.gen_range(1..=3);
        let (a, _) = gen::random_path_category(&mut rng, n, 3);
        let c = Arc::new(if rng.gen_bool(0.5) { build_s(&a) } else { gen::delta_u_category(rng.gen_range(1..=3)) });
        if !validate_dg(&c).is_valid() {
            failures.push(format!("instance {i}: DG axioms fail"));
        }
        let x = gen::random_twisted(&mut rng, &c, -1, 2, 4);
        let k = cone(&c, &x, &x, &TwistedMorphism::identity(&c, &x));
        match k {
            Ok(k) => {
                if !mc_check(&c, &k.object).map(|r| r.holds()).unwrap_or(false) {
                    failures.push(format!("instance {i}: cone violates Maurer–Cartan"));
                }
                if is_zero_in_tr(&c, &k.object).is_none() {
                    failures.push(format!("instance {i}: cone(id) is not contractible"));
                }
            }
            Err(e) => failures.push(format!("instance {i}: {e}")),
        }
        if hom_complex(&c, &x, &x).check().is_err() {
            failures.push(format!("instance {i}: δ² ≠ 0"));
        }
    }
    report(cmd, failures.is_empty(), json!({ "seed": seed.to_string(), "instances": count, "failures": failures }))
}

/// The command a job document names, with its options.
pub fn parse_job_command(j: &crate::doc::JobDoc) -> Result<(Command, bool), CliError> {
    let o = &j.options;
    let need = |v: Option<i64>, what: &str| v.ok_or_else(|| CliError::Schema(format!("`{}` needs option `{what}`", j.command)));
    let cmd = match j.command.as_str() {
        "validate" => Command::Validate,
        "homs" => Command::Homs,
        "cone" => Command::Cone,
        "t0" => Command::T0,
        "tn" => Command::Tn { level: need(o.level.map(i64::from), "level")? as u32 },
        "window" => Command::Window { a: need(o.a.map(i64::from), "a")? as i32, b: need(o.b.map(i64::from), "b")? as i32 },
        "ss" => Command::Ss,
        "truncated" => Command::Truncated { b: need(o.b.map(i64::from), "b")? as i32, n: need(o.n.map(i64::from), "N")? as u32 },
        "lefschetz" => Command::Lefschetz,
        "quotient" => {
            let w = o.window.ok_or_else(|| CliError::Schema("`quotient` needs option `window`".into()))?;
            Command::Quotient { kill: o.kill.clone(), window: (w[0], w[1]) }
        }
        "euler" => Command::Euler,
        "mc-check" => Command::McCheck,
        "check" => Command::Check { seed: o.seed.unwrap_or(0), count: o.count.unwrap_or(20) },
        other => return Err(CliError::Schema(format!("unknown command `{other}`"))),
    };
    Ok((cmd, o.rational))
}
