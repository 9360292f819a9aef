//! The shipped proof-table files parse canonically, verify against their
//! instances, and fail verification under any single-coefficient corruption.

use std::fs;
use std::path::PathBuf;

use entroplex::model::{DemandFilter, DemandType, ProblemInstance};
use entroplex::prooftab::{parse_table, serialize_table, verify, ProofTable};
use entroplex::ratsolve::rat_int;
use entroplex::symmetry::Canonicalizer;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The instance a fixture file is stated over, keyed by its name prefix.
fn instance_for(name: &str) -> ProblemInstance {
    if name.starts_with("nk32_") {
        ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap()
    } else if name.starts_with("nk42_") {
        ProblemInstance::with_cap(4, 2, DemandFilter::All, None, 22).unwrap()
    } else if name.starts_with("nk24_") {
        ProblemInstance::with_cap(2, 4, DemandFilter::All, None, 22).unwrap()
    } else if name.starts_with("nk33_t210_") {
        ProblemInstance::with_cap(
            3,
            3,
            DemandFilter::OfType(DemandType(vec![2, 1, 0])),
            None,
            24,
        )
        .unwrap()
    } else if name.starts_with("nk33_t111_") {
        ProblemInstance::new(3, 3, DemandFilter::OfType(DemandType(vec![1, 1, 1])), None)
            .unwrap()
    } else {
        panic!("unrecognized fixture name {name}");
    }
}

fn fixtures() -> Vec<(String, String, ProblemInstance)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(fixture_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let text = fs::read_to_string(&path).unwrap();
        let inst = instance_for(&name);
        out.push((name, text, inst));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(out.len(), 14, "fixture corpus is incomplete");
    out
}

fn parse_fixture(text: &str, inst: &ProblemInstance) -> ProofTable {
    parse_table(text, inst.n_files(), inst.n_users()).unwrap()
}

#[test]
fn all_fixture_tables_verify() {
    for (name, text, inst) in fixtures() {
        let table = parse_fixture(&text, &inst);
        assert_eq!(
            serialize_table(&table),
            text,
            "{name} is not canonically serialized"
        );
        let canon = Canonicalizer::new(&inst).unwrap();
        let report = verify(&table, &canon).unwrap();
        assert!(report.ok, "{name} failed: {:?}", report.failures);
    }
}

#[test]
fn every_single_coefficient_corruption_fails() {
    for (name, text, inst) in fixtures() {
        let base = parse_fixture(&text, &inst);
        let canon = Canonicalizer::new(&inst).unwrap();
        let mut targets: Vec<(Option<usize>, usize)> = Vec::new();
        for (ri, row) in base.rows.iter().enumerate() {
            for &col in row.coeffs.keys() {
                targets.push((Some(ri), col));
            }
        }
        for &col in base.final_row.keys() {
            targets.push((None, col));
        }
        for (ri, col) in targets {
            let mut bad = base.clone();
            let slot = match ri {
                Some(r) => bad.rows[r].coeffs.get_mut(&col).unwrap(),
                None => bad.final_row.get_mut(&col).unwrap(),
            };
            *slot += rat_int(1);
            let report = verify(&bad, &canon).unwrap();
            assert!(
                !report.ok,
                "{name}: bumping row {ri:?} column T{} went undetected",
                col + 1
            );
        }
    }
}
