use std::fs;
use std::path::PathBuf;

use easytime::compiler::{compile, disassemble};
use easytime::dsl;
use easytime::model::{from_exchange, FindingCode};

fn repo(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn read(path: &str) -> String {
    fs::read_to_string(repo(path)).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Compares against a golden file; `BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("BLESS").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}

#[test]
fn olympic_text_and_exchange_agree() {
    let from_text = dsl::load(&read("models/olympic.et")).unwrap();
    let mut from_json = from_exchange(&read("models/olympic.json")).unwrap();
    for n in &mut from_json.nodes {
        n.position = None;
    }
    for a in &mut from_json.agents {
        a.position = None;
    }
    assert_eq!(from_text, from_json);
}

#[test]
fn olympic_disassembly_golden() {
    let model = dsl::load(&read("models/olympic.et")).unwrap();
    let program = compile(&model).unwrap();
    assert_eq!(program.rule_count(), 14);
    golden("olympic.dis", &disassemble(&program));
}

#[test]
fn duathlon_disassembly_golden() {
    let model = dsl::load(&read("models/duathlon.et")).unwrap();
    let report = model.validate();
    assert!(report.is_valid(), "{report}");
    golden("duathlon.dis", &disassemble(&compile(&model).unwrap()));
}

#[test]
fn olympic_canonical_format_golden() {
    let model = dsl::load(&read("models/olympic.et")).unwrap();
    golden("olympic.canonical.et", &dsl::format(&model).unwrap());
}

#[test]
fn every_invalid_fixture_reports_its_code() {
    let dir = repo("models/invalid");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let code = path.file_stem().unwrap().to_str().unwrap().to_string();
        let model = from_exchange(&fs::read_to_string(&path).unwrap()).unwrap();
        let report = model.validate();
        let codes: Vec<String> = report.errors.iter().map(|f| f.code.to_string()).collect();
        assert!(codes.contains(&code), "{code}: got {codes:?}");
        seen += 1;
    }
    // One fixture per error code.
    let error_codes = [
        FindingCode::EmptyName,
        FindingCode::InvalidId,
        FindingCode::DuplicateId,
        FindingCode::InvalidName,
        FindingCode::DuplicateNodeName,
        FindingCode::LapsNotPositive,
        FindingCode::EmptyAgentField,
        FindingCode::DanglingArrow,
        FindingCode::NotASimplePath,
        FindingCode::UnboundNode,
        FindingCode::MultipleBindings,
    ];
    assert_eq!(seen, error_codes.len());
}
