//! Criterion 11: round-trip and byte-determinism on the shipped corpus, and
//! exit statuses on the failure fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use dgtwist_cli::doc::{CategoryDoc, FunctorDoc, MorphismDoc, TwistedDoc};
use dgtwist_cli::{parse_document, to_text, Document};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn json_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "json")).collect();
    v.sort();
    v
}

fn bin(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_dgtwist")).args(args).output().expect("run dgtwist");
    (out.status.code().unwrap_or(-1), out.stdout)
}

/// Document → core value → document.
fn semantic_roundtrip(d: &Document) -> Result<Document, String> {
    Ok(match d {
        Document::Category(c) => Document::Category(CategoryDoc::from_category(&c.to_category().map_err(|e| e.to_string())?)),
        Document::Twisted(t) => {
            let r = t.resolve().map_err(|e| e.to_string())?;
            Document::Twisted(TwistedDoc::new(&r.category, &r.complex))
        }
        Document::Morphism(m) => {
            let r = m.resolve().map_err(|e| e.to_string())?;
            Document::Morphism(MorphismDoc::new(&r.category, &r.source, &r.target, &r.morphism))
        }
        Document::Functor(f) => Document::Functor(FunctorDoc::from_functor(&f.resolve().map_err(|e| e.to_string())?.data)),
        Document::Job(j) => Document::Job(j.clone()),
    })
}

fn roundtrip(failures: &mut Vec<String>) -> usize {
    let root = corpus();
    let mut n = 0;
    for dir in ["categories", "twisted", "morphisms", "functors", "jobs", "failures"] {
        for p in json_files(&root.join(dir)) {
            n += 1;
            let text = std::fs::read_to_string(&p).unwrap();
            let name = p.strip_prefix(&root).unwrap().display().to_string();
            match parse_document(&text) {
                Ok(d) => {
                    if to_text(&d.to_value()) != text {
                        failures.push(format!("{name}: serialize∘parse is not the identity"));
                    }
                    match semantic_roundtrip(&d) {
                        Ok(e) if e == d => {}
                        Ok(_) => failures.push(format!("{name}: document → value → document changed it")),
                        Err(e) => failures.push(format!("{name}: {e}")),
                    }
                }
                Err(e) => failures.push(format!("{name}: {e}")),
            }
        }
    }
    // structurally sound failure inputs also round-trip
    for f in ["broken_mc", "not_closed", "not_closed_endo", "no_unit_law"] {
        n += 1;
        let text = std::fs::read_to_string(root.join(format!("failures/inputs/{f}.json"))).unwrap();
        let ok = parse_document(&text).is_ok_and(|d| to_text(&d.to_value()) == text && semantic_roundtrip(&d).is_ok_and(|e| e == d));
        if !ok {
            failures.push(format!("failures/inputs/{f}.json does not round-trip"));
        }
    }
    // reports are canonical text too
    for p in json_files(&root.join("expected")) {
        n += 1;
        let text = std::fs::read_to_string(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        if to_text(&v) != text {
            failures.push(format!("{}: report is not canonical", p.display()));
        }
    }
    n
}

fn determinism(failures: &mut Vec<String>) -> usize {
    let root = corpus();
    let mut n = 0;
    for job in json_files(&root.join("jobs")) {
        n += 1;
        let stem = job.file_stem().unwrap().to_str().unwrap().to_string();
        let expected = std::fs::read(root.join(format!("expected/{stem}.json"))).unwrap();
        let (c1, o1) = bin(&["run", job.to_str().unwrap()]);
        let (c2, o2) = bin(&["run", job.to_str().unwrap()]);
        if c1 != 0 || c2 != 0 {
            failures.push(format!("{stem}: exit {c1}/{c2}"));
        }
        if o1 != o2 {
            failures.push(format!("{stem}: two runs differ"));
        }
        if o1 != expected {
            failures.push(format!("{stem}: output differs from the shipped report"));
        }
    }
    // direct subcommands agree with their job forms
    let c = |p: &str| root.join(p).to_str().unwrap().to_string();
    let direct: Vec<(&str, Vec<String>)> = vec![
        ("ss_gysin", vec!["ss".into(), c("functors/gysin3.json"), c("twisted/gysin_x.json")]),
        ("tn_three_term", vec!["tn".into(), "--level".into(), "1".into(), c("twisted/delta_u_three_term.json")]),
        ("window_three_term", vec!["window".into(), "--a".into(), "1".into(), "--b".into(), "2".into(), c("twisted/delta_u_three_term.json")]),
        ("quotient_path", vec!["quotient".into(), "--kill".into(), "B".into(), "--window".into(), "-6".into(), "0".into(), c("categories/path_a_b.json")]),
        ("homs_rational", vec!["homs".into(), "--rational".into(), c("twisted/delta_u_three_term.json"), c("twisted/delta_u_point.json")]),
        ("truncated_three_term", vec!["truncated".into(), "--b".into(), "0".into(), "--N".into(), "1".into(), c("functors/delta_u2.json"), c("twisted/delta_u_three_term.json")]),
        ("check_seeded", vec!["check".into(), "--seed".into(), "11".into(), "--count".into(), "10".into()]),
    ];
    for (stem, args) in direct {
        n += 1;
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, out) = bin(&args);
        let expected = std::fs::read(root.join(format!("expected/{stem}.json"))).unwrap();
        if code != 0 || out != expected {
            failures.push(format!("{stem}: direct invocation differs from the job (exit {code})"));
        }
    }
    // --out writes the same bytes; --format table succeeds
    n += 1;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ss.json");
    let (code, stdout) = bin(&["ss", &c("functors/gysin3.json"), &c("twisted/gysin_x.json"), "--out", out.to_str().unwrap()]);
    let expected = std::fs::read(root.join("expected/ss_gysin.json")).unwrap();
    if code != 0 || !stdout.is_empty() || std::fs::read(&out).ok() != Some(expected) {
        failures.push("--out does not reproduce the report".into());
    }
    let (code, table) = bin(&["run", &c("jobs/ss_gysin.json"), "--format", "table"]);
    if code != 0 || !String::from_utf8_lossy(&table).contains("group: Z/3") {
        failures.push("table rendering of the Gysin report lacks Z/3".into());
    }
    n
}

fn exit_codes(failures: &mut Vec<String>) -> usize {
    let root = corpus();
    let mut n = 0;
    for f in json_files(&root.join("failures")) {
        n += 1;
        let stem = f.file_stem().unwrap().to_str().unwrap().to_string();
        let want: i32 = stem[4..5].parse().unwrap();
        let (code, out) = bin(&["run", f.to_str().unwrap()]);
        if code != want {
            failures.push(format!("{stem}: exit {code}, expected {want}"));
            continue;
        }
        let v: serde_json::Value = match serde_json::from_slice(&out) {
            Ok(v) => v,
            Err(_) => {
                failures.push(format!("{stem}: stdout is not a document"));
                continue;
            }
        };
        let machine_readable = match v["kind"].as_str() {
            Some("error") => v["exit_code"] == want,
            Some("report") => v["status"] == "hypothesis_failure" && want == 1,
            _ => false,
        };
        if !machine_readable {
            failures.push(format!("{stem}: missing machine-readable error object"));
        }
    }
    // the MC fixture lists its residual
    let (_, out) = bin(&["run", root.join("failures/exit1_mc_violation.json").to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    if v["result"]["residuals"].as_array().is_none_or(|r| r.is_empty()) {
        failures.push("MC violation report lists no residual".into());
    }
    // usage errors are exit 2 as well
    n += 1;
    if bin(&["window", "--a", "1"]).0 != 2 {
        failures.push("usage error does not exit 2".into());
    }
    n
}

fn main() -> ExitCode {
    let mut failures = Vec::new();
    let a = roundtrip(&mut failures);
    let b = determinism(&mut failures);
    let c = exit_codes(&mut failures);
    if failures.is_empty() {
        println!("criterion 11 [CLI]: PASS ({a} documents round-trip, {b} deterministic runs, {c} exit-status checks)");
        ExitCode::SUCCESS
    } else {
        println!("criterion 11 [CLI]: FAIL ({} problems)", failures.len());
        for f in failures.iter().take(10) {
            println!("    {f}");
        }
        ExitCode::FAILURE
    }
}
