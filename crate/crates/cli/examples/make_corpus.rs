//! Regenerates the shipped corpus under `crates/cli/corpus`:
//! `cargo run -p dgtwist-cli --example make_corpus`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dgtwist::dgcat::{build_bb, AdditiveCategoryData, DgCategory};
use dgtwist::gen;
use dgtwist::intlin::ints;
use dgtwist::realize::{path_realization, DGFunctorData, GradedMap, QuiverRep};
use dgtwist::twisted::{Slot, TwistedComplex, TwistedMorphism};
use dgtwist::{FGAbComplex, IntMatrix};
use dgtwist_cli::doc::{CategoryDoc, FunctorDoc, JobDoc, JobOptions, MorphismDoc, TwistedDoc};
use dgtwist_cli::{run_job, to_text, Document};
use serde_json::Value;

fn write(root: &Path, rel: &str, d: &Document) {
    write_value(root, rel, &d.to_value());
}

fn write_value(root: &Path, rel: &str, v: &Value) {
    let p = root.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, to_text(v)).unwrap();
}

fn job(command: &str, inputs: &[&str], options: JobOptions) -> Document {
    Document::Job(JobDoc { command: command.into(), inputs: inputs.iter().map(|s| s.to_string()).collect(), options, output: None })
}

fn single(index: i32) -> TwistedComplex {
    TwistedComplex { slots: vec![Slot { index, object: 0 }], arrows: BTreeMap::new() }
}

/// `A → B` realized as `Z --×n--> Z` in degree 0.
fn gysin(n: i64) -> (AdditiveCategoryData, DGFunctorData, TwistedComplex) {
    let a = AdditiveCategoryData::path_category(vec!["A", "B"], &[(0, 1)]).unwrap();
    let z = FGAbComplex::free(0, &[1], Vec::new());
    let mut blocks = BTreeMap::new();
    blocks.insert(0, IntMatrix::from_rows(&[vec![n]]));
    let rep = QuiverRep { objects: vec![z.clone(), z], arrows: vec![GradedMap { degree: 0, blocks }] };
    let f = path_realization(&a, &rep).unwrap();
    let mut arrows = BTreeMap::new();
    arrows.insert((0, 1), ints(&[1]));
    let x = TwistedComplex { slots: vec![Slot { index: 0, object: 0 }, Slot { index: 1, object: 1 }], arrows };
    (a, f, x)
}

fn small_bb() -> DgCategory {
    let mut rng = gen::rng(7);
    let (a, _) = gen::random_path_category(&mut rng, 2, 2);
    let p = gen::random_acomplex(&mut rng, &a, "P", -1, 2, 2);
    let q = gen::random_acomplex(&mut rng, &a, "Q", 0, 1, 2);
    build_bb(&a, &[p, q]).unwrap()
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let _ = fs::remove_dir_all(&root);

    // categories
    let (a, g3, gx) = gysin(3);
    let s = a.category().clone();
    let du = gen::delta_u_category(2);
    write(&root, "categories/path_a_b.json", &Document::Category(CategoryDoc::from_category(&s)));
    write(&root, "categories/delta_u2.json", &Document::Category(CategoryDoc::from_category(&du)));
    write(&root, "categories/bb_small.json", &Document::Category(CategoryDoc::from_category(&small_bb())));

    // twisted complexes
    write(&root, "twisted/gysin_x.json", &Document::Twisted(TwistedDoc::new(&s, &gx)));
    write(&root, "twisted/delta_u_three_term.json", &Document::Twisted(TwistedDoc::new(&du, &gen::delta_u_three_term(2))));
    write(&root, "twisted/delta_u_point.json", &Document::Twisted(TwistedDoc::new(&du, &single(0))));

    // morphisms
    let id = TwistedMorphism::identity(&s, &gx);
    write(&root, "morphisms/gysin_id.json", &Document::Morphism(MorphismDoc::new(&s, &gx, &gx, &id)));
    let mut twice = TwistedMorphism::zero(0);
    twice.comps.insert((0, 0), ints(&[2]));
    write(&root, "morphisms/delta_u_twice.json", &Document::Morphism(MorphismDoc::new(&du, &single(0), &single(0), &twice)));
    let x3 = gen::delta_u_three_term(2);
    let idx3 = TwistedMorphism::identity(&du, &x3);
    write(&root, "morphisms/delta_u_three_term_id.json", &Document::Morphism(MorphismDoc::new(&du, &x3, &x3, &idx3)));

    // functors
    write(&root, "functors/gysin3.json", &Document::Functor(FunctorDoc::from_functor(&g3)));
    let dr = gen::delta_u_realization(2);
    write(&root, "functors/delta_u2.json", &Document::Functor(FunctorDoc::from_functor(&dr)));
    let contra = DGFunctorData::contravariant(&du, dr.objects.clone(), dr.maps.clone());
    write(&root, "functors/delta_u2_dual.json", &Document::Functor(FunctorDoc::from_functor(&contra)));

    // jobs
    let o = JobOptions::default;
    let jobs: Vec<(&str, Document)> = vec![
        ("validate_path", job("validate", &["../categories/path_a_b.json"], o())),
        ("validate_bb", job("validate", &["../categories/bb_small.json"], o())),
        ("validate_functor", job("validate", &["../functors/delta_u2_dual.json"], o())),
        ("mc_three_term", job("mc-check", &["../twisted/delta_u_three_term.json"], o())),
        ("homs_three_term", job("homs", &["../twisted/delta_u_three_term.json", "../twisted/delta_u_point.json"], o())),
        ("homs_rational", job("homs", &["../twisted/delta_u_three_term.json", "../twisted/delta_u_point.json"], JobOptions { rational: true, ..o() })),
        ("cone_twice", job("cone", &["../morphisms/delta_u_twice.json"], o())),
        ("t0_three_term", job("t0", &["../twisted/delta_u_three_term.json"], o())),
        ("tn_three_term", job("tn", &["../twisted/delta_u_three_term.json"], JobOptions { level: Some(1), ..o() })),
        ("window_three_term", job("window", &["../twisted/delta_u_three_term.json"], JobOptions { a: Some(1), b: Some(2), ..o() })),
        ("ss_gysin", job("ss", &["../functors/gysin3.json", "../twisted/gysin_x.json"], o())),
        ("ss_three_term", job("ss", &["../functors/delta_u2.json", "../twisted/delta_u_three_term.json"], o())),
        ("ss_dual", job("ss", &["../functors/delta_u2_dual.json", "../twisted/delta_u_three_term.json"], o())),
        ("truncated_three_term", job("truncated", &["../functors/delta_u2.json", "../twisted/delta_u_three_term.json"], JobOptions { b: Some(0), n: Some(1), ..o() })),
        ("lefschetz_gysin", job("lefschetz", &["../functors/gysin3.json", "../morphisms/gysin_id.json"], o())),
        ("lefschetz_three_term", job("lefschetz", &["../functors/delta_u2.json", "../morphisms/delta_u_three_term_id.json"], o())),
        ("quotient_path", job("quotient", &["../categories/path_a_b.json"], JobOptions { kill: vec!["B".into()], window: Some([-6, 0]), ..o() })),
        ("euler_three_term", job("euler", &["../twisted/delta_u_three_term.json"], o())),
        ("check_seeded", job("check", &[], JobOptions { seed: Some(11), count: Some(10), ..o() })),
    ];
    for (name, d) in &jobs {
        write(&root, &format!("jobs/{name}.json"), d);
    }

    // failure fixtures: the expected exit status is the file-name prefix
    let broken = {
        let mut x = gen::delta_u_three_term(2);
        x.arrows.remove(&(0, 2));
        x
    };
    write(&root, "failures/inputs/broken_mc.json", &Document::Twisted(TwistedDoc::new(&du, &broken)));
    let pair = TwistedComplex { slots: vec![Slot { index: 0, object: 0 }, Slot { index: 1, object: 0 }], arrows: BTreeMap::new() };
    let mut open = TwistedMorphism::zero(0);
    open.comps.insert((0, 1), ints(&[1]));
    let mut open_single = TwistedMorphism::zero(0);
    open_single.comps.insert((0, 0), ints(&[1]));
    write(&root, "failures/inputs/not_closed.json", &Document::Morphism(MorphismDoc::new(&du, &single(0), &single(1), &open_single)));
    write(&root, "failures/inputs/not_closed_endo.json", &Document::Morphism(MorphismDoc::new(&du, &pair, &pair, &open)));
    let mut no_unit = CategoryDoc::from_category(&du);
    no_unit.compositions.retain(|c| c.first.0 != -1);
    write(&root, "failures/inputs/no_unit_law.json", &Document::Category(no_unit));
    let mut bad_shape = CategoryDoc::from_category(&du);
    bad_shape.differentials[0].matrix.shape = [2, 1];
    write(&root, "failures/inputs/bad_shape.json", &Document::Category(bad_shape));
    let mut unknown = TwistedDoc::new(&du, &single(0));
    unknown.complex.slots[0].object = "f".into();
    write(&root, "failures/inputs/unknown_object.json", &Document::Twisted(unknown));
    let mut extra = Document::Twisted(TwistedDoc::new(&du, &single(0))).to_value();
    extra.as_object_mut().unwrap().insert("colour".into(), "blue".into());
    write_value(&root, "failures/inputs/unknown_field.json", &extra);
    let mut version = Document::Twisted(TwistedDoc::new(&du, &single(0))).to_value();
    version.as_object_mut().unwrap().insert("schema_version".into(), 2.into());
    write_value(&root, "failures/inputs/bad_version.json", &version);
    fs::write(root.join("failures/inputs/not_json.json"), "{ \"kind\": \"twisted\", \n").unwrap();

    let fails: Vec<(&str, Document)> = vec![
        ("exit1_mc_violation", job("mc-check", &["inputs/broken_mc.json"], o())),
        ("exit1_cone_not_closed", job("cone", &["inputs/not_closed.json"], o())),
        ("exit1_lefschetz_not_closed", job("lefschetz", &["../functors/delta_u2.json", "inputs/not_closed_endo.json"], o())),
        ("exit1_validate_unit_law", job("validate", &["inputs/no_unit_law.json"], o())),
        ("exit1_quotient_window", job("quotient", &["../categories/path_a_b.json"], JobOptions { kill: vec!["B".into()], window: Some([-2, 1]), ..o() })),
        ("exit1_homs_broken_mc", job("homs", &["inputs/broken_mc.json", "../twisted/delta_u_point.json"], o())),
        ("exit2_bad_shape", job("validate", &["inputs/bad_shape.json"], o())),
        ("exit2_unknown_object", job("euler", &["inputs/unknown_object.json"], o())),
        ("exit2_unknown_field", job("euler", &["inputs/unknown_field.json"], o())),
        ("exit2_bad_version", job("euler", &["inputs/bad_version.json"], o())),
        ("exit2_not_json", job("euler", &["inputs/not_json.json"], o())),
        ("exit2_missing_input", job("euler", &["inputs/does_not_exist.json"], o())),
        ("exit2_wrong_kind", job("homs", &["../categories/delta_u2.json", "../twisted/delta_u_point.json"], o())),
        ("exit2_mixed_categories", job("homs", &["../twisted/gysin_x.json", "../twisted/delta_u_point.json"], o())),
        ("exit2_unknown_command", job("frobnicate", &[], o())),
    ];
    for (name, d) in &fails {
        write(&root, &format!("failures/{name}.json"), d);
    }

    // expected reports for the passing jobs
    for (name, _) in &jobs {
        let (out, _) = run_job(&root.join(format!("jobs/{name}.json"))).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(out.exit, 0, "{name} should succeed");
        write_value(&root, &format!("expected/{name}.json"), &out.document);
    }
    println!("corpus written to {}", root.display());
}
