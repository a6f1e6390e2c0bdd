//! Property tests for invariants that hold for every configuration.

use proptest::prelude::*;

use limca::counters::{cube_edge, isqrt, RespirationState};
use limca::lattice::snapshot::{read_binary, read_text, write_binary, write_text};
use limca::lattice::{sample_bernoulli, Symbol, Torus, Vector};
use limca::measures::{dist_to_barycentre, dist_to_segment, dm, empirical_symbols, CylinderTable};

fn table(cells: &[u8]) -> CylinderTable {
    empirical_symbols(Torus::new(2, 6).unwrap(), cells, 2, 3).unwrap()
}

fn configuration() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=2, 36)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torus_coordinates_round_trip(d in 1usize..=3, side in 1i32..12, i in 0usize..1728) {
        let torus = Torus::new(d, side).unwrap();
        let i = i % torus.volume();
        prop_assert_eq!(torus.index(torus.coord(i)), i);
        let v = torus.coord(i);
        let shifted = v + Vector::basis(0, side);
        prop_assert_eq!(torus.index(shifted), i);
    }

    #[test]
    fn breaths_fall_on_squares(t in 1u64..3000) {
        let s = RespirationState::at_time(t);
        let m = isqrt(t);
        prop_assert_eq!(s.is_breath(), t >= 4 && m * m == t);
        prop_assert_eq!(s.respire().0, RespirationState::at_time(t + 1));
        prop_assert_eq!(cube_edge(t), 3 + 2 * m);
        prop_assert_eq!(s.age.value(), t as i64 - 1);
    }

    #[test]
    fn dm_is_a_metric(a in configuration(), b in configuration(), c in configuration(), n in 0usize..3) {
        let (a, b, c) = (table(&a), table(&b), table(&c));
        let ab = dm(&a, &b, n).unwrap();
        prop_assert!(dm(&a, &a, n).unwrap() == 0.0);
        prop_assert!((ab - dm(&b, &a, n).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= dm(&a, &c, n).unwrap() + dm(&c, &b, n).unwrap() + 1e-12);
        prop_assert!(ab <= 2.0 + 1e-12);
    }

    #[test]
    fn segment_distance_is_a_minimum(nu in configuration(), a in configuration(), b in configuration(), s in 0.0f64..=1.0) {
        let (nu, a, b) = (table(&nu), table(&a), table(&b));
        let (d, best) = dist_to_segment(&nu, &a, &b, 2).unwrap();
        prop_assert!((0.0..=1.0).contains(&best));
        prop_assert!(d <= dist_to_barycentre(&nu, &a, &b, 2, s).unwrap() + 1e-9);
        prop_assert!(d <= dm(&nu, &a, 2).unwrap() + 1e-9);
        prop_assert!(d <= dm(&nu, &b, 2).unwrap() + 1e-9);
    }

    #[test]
    fn snapshots_round_trip(seed in 0u64..1000, side in 3i32..10) {
        let torus = Torus::new(2, side).unwrap();
        let lambda = [(Symbol::Seed, 0.1), (Symbol::Marked, 0.2), (Symbol::Letter(0), 0.4), (Symbol::Letter(1), 0.3)];
        let grid = sample_bernoulli(torus, &lambda, seed).unwrap();
        let mut bin = Vec::new();
        write_binary(&grid, &mut bin).unwrap();
        prop_assert_eq!(&read_binary(bin.as_slice()).unwrap(), &grid);
        let mut text = Vec::new();
        write_text(&grid, &mut text).unwrap();
        prop_assert_eq!(&read_text(text.as_slice()).unwrap(), &grid);
    }
}
