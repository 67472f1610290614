#![allow(dead_code)]

pub mod explicit;
pub mod gen;

use flowsum::driver::{analyze, parse_stubs, Analysis, AnalysisConfig, StubEntry};
use flowsum::heap::HeapModel;
use flowsum::ir::{parse_program, Program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stubs(model: HeapModel) -> Vec<StubEntry> {
    parse_stubs(gen::STUBS, model).expect("generator stubs parse")
}

pub fn parse(src: &str) -> Program {
    match parse_program(src) {
        Ok(p) => p,
        Err(e) => panic!("generated program does not parse: {e}\n{src}"),
    }
}

/// Analyse generated source with the generator's stubs.
pub fn run(src: &str, model: HeapModel) -> (Program, Vec<StubEntry>, Analysis) {
    let p = parse(src);
    let st = stubs(model);
    let a = analyze(&p, &st, &AnalysisConfig::new(model)).unwrap_or_else(|e| panic!("analysis failed: {e}\n{src}"));
    (p, st, a)
}
