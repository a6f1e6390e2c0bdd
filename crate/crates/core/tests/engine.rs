//! The sparse engine agrees with the full synchronous update, and snapshots
//! of evolved configurations survive a round trip.

use limca::automaton::Automaton;
use limca::lattice::snapshot::{read_binary, read_text, write_binary, write_text};
use limca::lattice::{sample_bernoulli, Engine, Symbol, Torus};
use limca::metabolism::Schedule;

fn start(seed: u64) -> limca::lattice::Grid<limca::lattice::Cell> {
    let torus = Torus::new(2, 40).unwrap();
    let lambda = [(Symbol::Seed, 0.01), (Symbol::SeedMarked, 0.005), (Symbol::Marked, 0.2), (Symbol::Letter(0), 0.785)];
    sample_bernoulli(torus, &lambda, seed).unwrap()
}

#[test]
fn sparse_engine_matches_full_steps() {
    let rule = Automaton::new(Schedule::Scaled { t0: 40, c: 60, e: 1 });
    for seed in 1..=3 {
        let mut full = start(seed);
        let mut engine = Engine::new(full.clone(), rule.clone());
        for t in 1..=250 {
            full = full.step(&rule);
            engine.step();
            assert_eq!(engine.grid, full, "seed {seed} diverges at t = {t}");
        }
    }
}

#[test]
fn evolved_snapshots_round_trip() {
    let mut engine = Engine::new(start(9), Automaton::new(Schedule::Scaled { t0: 40, c: 60, e: 1 }));
    engine.run(120);
    let mut bin = Vec::new();
    write_binary(&engine.grid, &mut bin).unwrap();
    assert_eq!(read_binary(bin.as_slice()).unwrap(), engine.grid);
    let mut text = Vec::new();
    write_text(&engine.grid, &mut text).unwrap();
    assert_eq!(read_text(text.as_slice()).unwrap(), engine.grid);
}

#[test]
fn corrupt_snapshots_are_rejected() {
    let mut bin = Vec::new();
    write_binary(&start(1), &mut bin).unwrap();
    bin[0] = b'X';
    assert!(read_binary(bin.as_slice()).is_err());
    assert!(read_binary(&bin[..10]).is_err());
}
