use std::fs;
use std::path::PathBuf;

use omega_cli::bundle::{parse_bundle, Bundle};
use omega_core::approx::SeparableGramJson;
use omega_core::complex::ComplexJson;
use omega_core::familycheck::{parse_family, LocalFamilyJson};
use omega_core::positivity::{parse_gram, GramJson};
use omega_core::symmetry::ActionJson;
use omega_core::tensorbridge::{parse_tensor, TensorJson};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn fixtures() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

/// Parse into the schema type, write back, and compare as JSON values.
fn round_trip<T: Serialize + DeserializeOwned>(text: &str) -> bool {
    let original: Value = serde_json::from_str(text).unwrap();
    let typed: T = serde_json::from_str(text).unwrap();
    let back = serde_json::to_value(&typed).unwrap();
    same_numbers(&original, &back)
}

// Fixtures write 1 where the float schemas give back 1.0.
fn same_numbers(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_numbers(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same_numbers(v, w)))
        }
        _ => a == b,
    }
}

#[derive(Serialize, serde::Deserialize)]
struct Witness {
    #[serde(flatten)]
    witness: SeparableGramJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    complex: Option<ComplexJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<ActionJson>,
}

#[test]
fn every_fixture_round_trips() {
    let all = fixtures();
    assert!(all.len() >= 15);
    for (name, text) in &all {
        let ok = if name.starts_with("example-") || name.starts_with("minus-sign") || name.ends_with("-terms.json") {
            let b: Bundle = parse_bundle(text).unwrap();
            b.complex().unwrap();
            round_trip::<Bundle>(text)
        } else if name == "planted.json" || name == "nonnegative-family.json" {
            parse_family(text).unwrap();
            round_trip::<LocalFamilyJson>(text)
        } else if name.starts_with("gram-") {
            parse_gram(text).unwrap();
            round_trip::<GramJson>(text)
        } else if name.starts_with("distance") {
            parse_tensor(text).unwrap();
            round_trip::<TensorJson>(text)
        } else if name.starts_with("witness-") {
            round_trip::<Witness>(text)
        } else if text.contains("\"generators\"") {
            round_trip::<ActionJson>(text)
        } else {
            round_trip::<ComplexJson>(text)
        };
        assert!(ok, "{name} does not round-trip");
    }
}
