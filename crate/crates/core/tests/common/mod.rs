//! Helpers shared by the integration test targets. Not every target uses
//! every helper.
#![allow(dead_code)]

pub mod random;
pub mod retail;

use std::path::PathBuf;

use feather::expr::{evaluate_condition, Binding, Expr};
use feather::model::FeatureModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every `*.feaf` file under tests/fixtures, sorted by name.
pub fn feather_fixtures() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(fixture_path(""))
        .expect("fixtures directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "feaf"))
        .collect();
    out.sort();
    out
}

/// Brute-force resolution: every assignment of features to `vars`, kept
/// when the condition evaluates to true. Written against the evaluator
/// only, so it shares no code with the resolver's search.
pub fn brute_force(model: &FeatureModel, vars: &[String], cond: &Expr) -> Vec<Vec<usize>> {
    let names: Vec<&str> = model.features().map(|f| f.name.as_str()).collect();
    let mut out = Vec::new();
    let total = names.len().pow(vars.len() as u32);
    for code in 0..total {
        let mut tuple = Vec::with_capacity(vars.len());
        let mut rest = code;
        for _ in vars {
            tuple.push(rest % names.len());
            rest /= names.len();
        }
        tuple.reverse();
        let binding: Binding = vars
            .iter()
            .zip(&tuple)
            .map(|(v, &i)| (v.clone(), names[i].to_string()))
            .collect();
        if evaluate_condition(cond, model, &binding) == Ok(true) {
            out.push(tuple);
        }
    }
    out.sort();
    out
}

/// Median wall time of `runs` calls, in milliseconds. `setup` runs outside
/// the timed region.
pub fn median_ms<S, T>(runs: usize, mut setup: impl FnMut() -> S, mut timed: impl FnMut(S) -> T) -> f64 {
    let mut samples: Vec<f64> = (0..runs)
        .map(|_| {
            let input = setup();
            let start = std::time::Instant::now();
            std::hint::black_box(timed(input));
            start.elapsed().as_secs_f64() * 1000.0
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[runs / 2]
}
