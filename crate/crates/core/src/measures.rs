//! Shift-invariant measures through their cubic cylinder probabilities.
//!
//! A table stores, for every side `m = 1..=max_side`, pattern counts over a
//! common denominator, so periodic measures and empirical frequencies are both
//! exact rationals. Cells that are not plain letters are projected onto an
//! extra `aux` symbol. Patterns are packed into `u64` keys in base
//! `letters + 1`, cell `0` least significant, cells in torus index order.

use std::collections::HashMap;
use std::io::Write;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cube, Cell, Grid, Layer, Torus, Vector};
use crate::metabolism::Schedule;

/// A cubic pattern of side `side` over letters `0..`, cells in torus index
/// order (last coordinate fastest).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub d: usize,
    pub side: usize,
    pub cells: Vec<u8>,
}

impl Pattern {
    pub fn new(d: usize, side: usize, cells: Vec<u8>) -> Result<Self> {
        if side == 0 || cells.len() != side.pow(d as u32) {
            return Err(Error::Window(format!("{} cells do not form a cube of side {side} in dimension {d}", cells.len())));
        }
        Ok(Self { d, side, cells })
    }

    pub fn constant(d: usize, side: usize, letter: u8) -> Self {
        Self { d, side, cells: vec![letter; side.pow(d as u32)] }
    }

    /// A 2-dimensional pattern from rows of letters; the first row is `x_0 = 0`.
    pub fn from_rows(rows: &[&str], alphabet: &[char]) -> Result<Self> {
        let side = rows.len();
        let mut cells = Vec::with_capacity(side * side);
        for r in rows {
            let row: Vec<char> = r.chars().collect();
            if row.len() != side {
                return Err(Error::Window(format!("row {r:?} is not of length {side}")));
            }
            for c in row {
                let l = alphabet.iter().position(|&a| a == c).ok_or_else(|| Error::Alphabet(format!("letter {c:?}")))?;
                cells.push(l as u8);
            }
        }
        Self::new(2, side, cells)
    }

    fn torus(&self) -> Torus {
        Torus { d: self.d, side: self.side as i32 }
    }

    /// Letter of the periodic tiling at `v`.
    pub fn at(&self, v: Vector) -> u8 {
        self.cells[self.torus().index(v)]
    }

    /// Concatenates `m` copies along every axis.
    pub fn tile(&self, m: usize) -> Pattern {
        let side = self.side * m;
        let t = Torus { d: self.d, side: side as i32 };
        let cells = (0..t.volume()).map(|i| self.at(t.coord(i))).collect();
        Pattern { d: self.d, side, cells }
    }
}

/// Cylinder counts for sides `1..=max_side`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderTable {
    pub d: usize,
    /// Plain letters; the aux symbol is `letters`.
    pub letters: u8,
    pub max_side: usize,
    /// `levels[m - 1]` maps pattern keys of side `m` to counts.
    pub levels: Vec<HashMap<u64, u64>>,
    /// Common denominator of every level.
    pub total: u64,
}

fn key_fits(letters: u8, d: usize, m: usize) -> bool {
    let base = letters as f64 + 1.0;
    (m.pow(d as u32) as f64) * base.log2() < 63.0
}

impl CylinderTable {
    fn empty(d: usize, letters: u8, max_side: usize) -> Result<Self> {
        if max_side == 0 || !key_fits(letters, d, max_side) {
            return Err(Error::Window(format!("side {max_side} patterns over {letters} letters do not fit a key")));
        }
        Ok(Self { d, letters, max_side, levels: vec![HashMap::new(); max_side], total: 0 })
    }

    pub fn aux(&self) -> u8 {
        self.letters
    }

    pub fn prob(&self, m: usize, key: u64) -> Ratio<u64> {
        Ratio::new(self.levels[m - 1].get(&key).copied().unwrap_or(0), self.total)
    }

    pub fn probf(&self, m: usize, key: u64) -> f64 {
        self.levels[m - 1].get(&key).copied().unwrap_or(0) as f64 / self.total as f64
    }

    /// Adds the counts of another table over the same alphabet (ensemble
    /// averaging).
    pub fn merge(&mut self, other: &CylinderTable) -> Result<()> {
        self.check(other)?;
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            for (k, c) in b {
                *a.entry(*k).or_insert(0) += c;
            }
        }
        self.total += other.total;
        Ok(())
    }

    fn check(&self, other: &CylinderTable) -> Result<()> {
        if self.d != other.d || self.letters != other.letters {
            return Err(Error::Alphabet(format!(
                "tables over ({}, {} letters) and ({}, {} letters)",
                self.d, self.letters, other.d, other.letters
            )));
        }
        Ok(())
    }

    /// Mass of patterns of side 1 that are the aux symbol.
    pub fn aux_density(&self) -> f64 {
        self.probf(1, self.aux() as u64)
    }

    /// Counts a periodic symbol array (torus of side `side`, every offset).
    fn count(&mut self, torus: Torus, symbols: &[u8]) {
        let base = self.letters as u64 + 1;
        for m in 1..=self.max_side {
            let offs = cube(torus.d, m as i32);
            let level = &mut self.levels[m - 1];
            for i in 0..torus.volume() {
                let x = torus.coord(i);
                let mut key = 0u64;
                for o in offs.iter().rev() {
                    key = key * base + symbols[torus.index(x + *o)] as u64;
                }
                *level.entry(key).or_insert(0) += 1;
            }
        }
        self.total += torus.volume() as u64;
    }
}

/// Key of a pattern (letters must be below `letters + 1`).
pub fn pattern_key(p: &Pattern, letters: u8) -> u64 {
    let base = letters as u64 + 1;
    p.cells.iter().rev().fold(0, |k, &c| k * base + c as u64)
}

/// Pattern of side `m` encoded by `key`.
pub fn key_pattern(key: u64, d: usize, m: usize, letters: u8) -> Pattern {
    let base = letters as u64 + 1;
    let mut k = key;
    let cells = (0..m.pow(d as u32))
        .map(|_| {
            let c = (k % base) as u8;
            k /= base;
            c
        })
        .collect();
    Pattern { d, side: m, cells }
}

/// ⟨w⟩([u]): the fraction of the `k^d` offsets at which the tiling by `w`
/// shows `u`.
pub fn periodic_cylinder(w: &Pattern, u: &Pattern) -> Ratio<u64> {
    let k = w.torus();
    let offs = cube(w.d, u.side as i32);
    let hits = (0..k.volume())
        .filter(|&i| {
            let x = k.coord(i);
            offs.iter().enumerate().all(|(j, o)| w.at(x + *o) == u.cells[j])
        })
        .count();
    Ratio::new(hits as u64, k.volume() as u64)
}

/// The table of ⟨w⟩ up to side `max_side`.
pub fn periodic_table(w: &Pattern, letters: u8, max_side: usize) -> Result<CylinderTable> {
    let mut t = CylinderTable::empty(w.d, letters, max_side)?;
    t.count(w.torus(), &w.cells);
    Ok(t)
}

/// Projection of a cell onto the pattern alphabet plus aux.
pub fn project(c: &Cell, letters: u8) -> u8 {
    match c.plain_letter() {
        Some(l) if l < letters => l,
        _ => letters,
    }
}

/// Empirical table of a symbol array on a torus (symbols already projected).
pub fn empirical_symbols(torus: Torus, symbols: &[u8], letters: u8, max_side: usize) -> Result<CylinderTable> {
    if max_side > torus.side as usize {
        return Err(Error::Window(format!("side {max_side} exceeds the torus side {}", torus.side)));
    }
    let mut t = CylinderTable::empty(torus.d, letters, max_side)?;
    t.count(torus, symbols);
    Ok(t)
}

/// Empirical table of a configuration, for patterns of sides `1..=n + 1`.
pub fn empirical(grid: &Grid<Cell>, letters: u8, n: usize) -> Result<CylinderTable> {
    let symbols: Vec<u8> = grid.cells.iter().map(|c| project(c, letters)).collect();
    empirical_symbols(grid.torus, &symbols, letters, n + 1)
}

/// Fraction of cells that are not plain letters, and per layer the fraction
/// of cells where that layer is not blank.
pub fn aux_densities(grid: &Grid<Cell>) -> (f64, [f64; 7]) {
    let v = grid.cells.len() as f64;
    let mut per = [0usize; 7];
    let mut total = 0usize;
    for c in &grid.cells {
        if c.plain_letter().is_none() {
            total += 1;
        }
        for (i, l) in Layer::ALL.iter().enumerate() {
            if !c.layer_is_blank(*l) {
                per[i] += 1;
            }
        }
    }
    (total as f64 / v, per.map(|x| x as f64 / v))
}

/// Rows of `(mu, nu, extra)` probabilities per side over the union of
/// supports; patterns in no table contribute zero to every term.
fn aligned(tables: &[&CylinderTable], n: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    for t in tables {
        tables[0].check(t)?;
        if t.max_side < n + 1 {
            return Err(Error::Window(format!("table stops at side {}, need {}", t.max_side, n + 1)));
        }
    }
    Ok((1..=n + 1)
        .map(|m| {
            let mut keys: Vec<u64> = tables.iter().flat_map(|t| t.levels[m - 1].keys().copied()).collect();
            keys.sort_unstable();
            keys.dedup();
            keys.iter().map(|&k| tables.iter().map(|t| t.probf(m, k)).collect()).collect()
        })
        .collect())
}

/// d_M truncated at `n`: Σ_{j=0..n} 2^-j max over patterns of side `j + 1`.
/// The omitted tail is at most 2^-n.
pub fn dm(mu: &CylinderTable, nu: &CylinderTable, n: usize) -> Result<f64> {
    let rows = aligned(&[mu, nu], n)?;
    Ok(rows
        .iter()
        .enumerate()
        .map(|(j, level)| 0.5f64.powi(j as i32) * level.iter().map(|r| (r[0] - r[1]).abs()).fold(0.0, f64::max))
        .sum())
}

/// d_M with the max over every pattern of the alphabet (letters and aux),
/// not just observed ones. Only for small alphabets and sides.
pub fn dm_exhaustive(mu: &CylinderTable, nu: &CylinderTable, n: usize) -> Result<f64> {
    mu.check(nu)?;
    let base = mu.letters as u64 + 1;
    let mut sum = 0.0;
    for j in 0..=n {
        let m = j + 1;
        let count = (base as f64).powi(m.pow(mu.d as u32) as i32);
        if count > 1e6 {
            return Err(Error::Window(format!("{count} patterns of side {m}")));
        }
        let max = (0..count as u64).map(|k| (mu.probf(m, k) - nu.probf(m, k)).abs()).fold(0.0, f64::max);
        sum += 0.5f64.powi(j as i32) * max;
    }
    Ok(sum)
}

/// Distance from `nu` to the segment [a, b] and the minimising weight `s`
/// of the barycentre `s·a + (1 - s)·b`. The objective is convex in `s`.
pub fn dist_to_segment(nu: &CylinderTable, a: &CylinderTable, b: &CylinderTable, n: usize) -> Result<(f64, f64)> {
    let rows = aligned(&[nu, a, b], n)?;
    let f = |s: f64| -> f64 {
        rows.iter()
            .enumerate()
            .map(|(j, level)| {
                0.5f64.powi(j as i32) * level.iter().map(|r| (r[0] - s * r[1] - (1.0 - s) * r[2]).abs()).fold(0.0, f64::max)
            })
            .sum()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-9 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let s = 0.5 * (lo + hi);
    Ok((f(s), s))
}

/// Distance from `nu` to the barycentre `s·a + (1 - s)·b`.
pub fn dist_to_barycentre(nu: &CylinderTable, a: &CylinderTable, b: &CylinderTable, n: usize, s: f64) -> Result<f64> {
    let rows = aligned(&[nu, a, b], n)?;
    Ok(rows
        .iter()
        .enumerate()
        .map(|(j, level)| {
            0.5f64.powi(j as i32) * level.iter().map(|r| (r[0] - s * r[1] - (1.0 - s) * r[2]).abs()).fold(0.0, f64::max)
        })
        .sum())
}

/// One line of the convergence tracker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub t: u64,
    pub generation: u32,
    pub dm_to_current: f64,
    pub dm_to_next: f64,
    pub dist_to_segment: f64,
    pub aux_density_total: f64,
    pub aux_per_layer: [f64; 7],
}

/// Compares sampled tables with the target sequence: at time `t` in
/// `[t_n, t_{n+1})` the current target is `w(n)` and the next one `w(n + 1)`.
pub fn track<W>(
    samples: &[(u64, CylinderTable, [f64; 7])],
    schedule: &Schedule,
    w: W,
    n: usize,
) -> Result<Vec<TrackRow>>
where
    W: Fn(u32) -> Pattern,
{
    let mut cache: HashMap<u32, CylinderTable> = HashMap::new();
    let mut rows = Vec::with_capacity(samples.len());
    for (t, table, per_layer) in samples {
        let g = schedule.generation_at(*t)?;
        for h in [g, g + 1] {
            if !cache.contains_key(&h) {
                cache.insert(h, periodic_table(&w(h), table.letters, n + 1)?);
            }
        }
        let cur = &cache[&g];
        let next = &cache[&(g + 1)];
        rows.push(TrackRow {
            t: *t,
            generation: g,
            dm_to_current: dm(table, cur, n)?,
            dm_to_next: dm(table, next, n)?,
            dist_to_segment: dist_to_segment(table, cur, next, n)?.0,
            aux_density_total: table.aux_density(),
            aux_per_layer: *per_layer,
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 13] = [
    "t",
    "generation",
    "dm_to_current",
    "dm_to_next",
    "dist_to_segment",
    "aux_density_total",
    "aux_birth",
    "aux_growth",
    "aux_organism",
    "aux_evolution",
    "aux_computing",
    "aux_copying",
    "aux_main",
];

pub fn write_csv<W: Write>(out: W, rows: &[TrackRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.t.to_string(),
            r.generation.to_string(),
            r.dm_to_current.to_string(),
            r.dm_to_next.to_string(),
            r.dist_to_segment.to_string(),
            r.aux_density_total.to_string(),
        ];
        rec.extend(r.aux_per_layer.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`].
pub fn read_table(text: &str) -> Result<CylinderTable> {
    #[derive(Deserialize)]
    struct Raw {
        d: usize,
        letters: u8,
        max_side: usize,
        total: u64,
        levels: Vec<Vec<(u64, u64)>>,
    }
    let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if raw.levels.len() != raw.max_side {
        return Err(Error::Parse("level count differs from max_side".into()));
    }
    Ok(CylinderTable {
        d: raw.d,
        letters: raw.letters,
        max_side: raw.max_side,
        total: raw.total,
        levels: raw.levels.into_iter().map(|l| l.into_iter().collect()).collect(),
    })
}

/// JSON form of a table: dimension, letters, denominator and sorted counts.
pub fn write_table(t: &CylinderTable) -> String {
    let levels: Vec<Vec<(u64, u64)>> = t
        .levels
        .iter()
        .map(|l| {
            let mut v: Vec<(u64, u64)> = l.iter().map(|(k, c)| (*k, *c)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    serde_json::json!({
        "d": t.d, "letters": t.letters, "max_side": t.max_side, "total": t.total, "levels": levels
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const AB: [char; 2] = ['a', 'b'];

    fn checker() -> Pattern {
        Pattern::from_rows(&["ab", "ba"], &AB).unwrap()
    }

    #[test]
    fn checkerboard_cylinders() {
        let w = checker();
        let a = Pattern::constant(2, 1, 0);
        assert_eq!(periodic_cylinder(&w, &a), Ratio::new(1, 2));
        assert_eq!(periodic_cylinder(&w, &Pattern::constant(2, 2, 0)), Ratio::new(0, 1));
        assert_eq!(periodic_cylinder(&Pattern::constant(2, 1, 0), &a), Ratio::new(1, 1));
    }

    #[test]
    fn constant_measures_are_far_apart() {
        for n in 0..6 {
            let a = periodic_table(&Pattern::constant(2, 1, 0), 2, n + 1).unwrap();
            let b = periodic_table(&Pattern::constant(2, 1, 1), 2, n + 1).unwrap();
            let expect = 2.0 - 0.5f64.powi(n as i32);
            assert!((dm(&a, &b, n).unwrap() - expect).abs() < 1e-12);
            assert_eq!(dm(&a, &a, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn tiled_torus_matches_periodic_table() {
        let w = Pattern::from_rows(&["aab", "bab", "bbb"], &AB).unwrap();
        let big = w.tile(4);
        let torus = Torus::new(2, 12).unwrap();
        let emp = empirical_symbols(torus, &big.cells, 2, 3).unwrap();
        let per = periodic_table(&w, 2, 3).unwrap();
        for m in 1..=3 {
            let mut keys: Vec<u64> = emp.levels[m - 1].keys().chain(per.levels[m - 1].keys()).copied().collect();
            keys.dedup();
            for k in keys {
                assert_eq!(emp.prob(m, k), per.prob(m, k));
                assert_eq!(per.prob(m, k), periodic_cylinder(&w, &key_pattern(k, 2, m, 2)));
            }
        }
    }

    fn random_table(seed: u64) -> CylinderTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let torus = Torus::new(2, 6).unwrap();
        let p: f64 = rng.gen();
        let s: Vec<u8> = (0..36).map(|_| if rng.gen::<f64>() < p { 0 } else { rng.gen_range(1..3) }).collect();
        empirical_symbols(torus, &s, 2, 3).unwrap()
    }

    #[test]
    fn observed_max_equals_exhaustive_max() {
        for seed in 0..5 {
            let (a, b) = (random_table(seed), random_table(seed + 100));
            assert!((dm(&a, &b, 1).unwrap() - dm_exhaustive(&a, &b, 1).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn sides_sum_to_one() {
        let t = random_table(3);
        for l in &t.levels {
            assert_eq!(l.values().sum::<u64>(), t.total);
        }
    }

    #[test]
    fn segment_endpoints_and_midpoint() {
        let a = periodic_table(&checker(), 2, 3).unwrap();
        let b = periodic_table(&Pattern::constant(2, 1, 0), 2, 3).unwrap();
        assert!(dist_to_segment(&a, &a, &b, 2).unwrap().0 < 1e-8);
        assert!(dist_to_segment(&b, &a, &b, 2).unwrap().0 < 1e-8);
        // the barycentre with weight 1/2 is the ensemble of both tables
        let mut mid = a.clone();
        mid.merge(&b.tile_like(&a)).unwrap();
        assert!(dist_to_segment(&mid, &a, &b, 2).unwrap().0 < 1e-8);
    }

    #[test]
    fn key_round_trip() {
        let p = Pattern::from_rows(&["ab", "bb"], &AB).unwrap();
        assert_eq!(key_pattern(pattern_key(&p, 2), 2, 2, 2), p);
    }

    #[test]
    fn table_text_round_trip() {
        let t = random_table(8);
        assert_eq!(read_table(&write_table(&t)).unwrap(), t);
    }

    impl CylinderTable {
        /// Same probabilities, scaled to the denominator of `other`.
        fn tile_like(&self, other: &CylinderTable) -> CylinderTable {
            let f = other.total / self.total;
            assert_eq!(f * self.total, other.total);
            let mut t = self.clone();
            t.levels.iter_mut().for_each(|l| l.values_mut().for_each(|c| *c *= f));
            t.total = other.total;
            t
        }
    }
}
