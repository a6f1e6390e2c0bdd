use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{units, Grid, Torus, Vector};
use crate::error::{Error, Result};
use crate::membranes::{DeadMark, Membrane, Shared};
use crate::metabolism::{Computing, CopyRecord};
use crate::organisms::BodyCell;

/// Bits harvested at birth: the central bit and one side bit per unit
/// direction (bit `i` belongs to `units(d)[i]`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeartBits {
    pub central: bool,
    pub side: u32,
}

impl HeartBits {
    pub fn side_bit(&self, d: usize, dir: Vector) -> bool {
        let i = units(d).iter().position(|u| *u == dir).expect("unit direction");
        self.side >> i & 1 == 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Birth {
    #[default]
    Blank,
    Seed,
    Heart(HeartBits),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Growth {
    #[default]
    Blank,
    /// The designated membrane symbol without any counters. Random copies of
    /// it are malformed and vanish; seeds read it to harvest their bits.
    Marked,
    Membrane(Box<Membrane>),
    /// A cell claimed by two membranes in the same step.
    Shared(Box<Shared>),
    Dead(Box<DeadMark>),
}

impl Growth {
    pub fn membrane(&self) -> Option<&Membrane> {
        match self {
            Growth::Membrane(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Growth::Blank)
    }
}

/// Organism layer. Every symbol written by a building signal carries the
/// generation of that signal; all but borders also remember their offset
/// from the heart that emitted it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Organism {
    #[default]
    Blank,
    /// `left`: steps the front may still travel before it fades.
    Signal { rel: Vector, left: u32, gen: u32 },
    Border { gen: u32 },
    Pseudo { rel: Vector, gen: u32 },
    /// Left behind by the front: the cell was reached first by this heart.
    /// Cleared when the copy writes the cell.
    Body { rel: Vector, gen: u32 },
}

impl Organism {
    pub fn gen(&self) -> Option<u32> {
        match *self {
            Organism::Blank => None,
            Organism::Signal { gen, .. } | Organism::Border { gen } | Organism::Pseudo { gen, .. } | Organism::Body { gen, .. } => Some(gen),
        }
    }

    /// Offset from the owning heart, for symbols that have one.
    pub fn rel(&self) -> Option<Vector> {
        match *self {
            Organism::Signal { rel, .. } | Organism::Pseudo { rel, .. } | Organism::Body { rel, .. } => Some(rel),
            Organism::Blank | Organism::Border { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub birth: Birth,
    pub growth: Growth,
    pub organism: Organism,
    pub evolution: Vec<BodyCell>,
    pub computing: Computing,
    pub copying: Vec<CopyRecord>,
    /// Main layer: index into the pattern alphabet, `None` for blank.
    pub main: Option<u8>,
    /// Diagnostic tag, never read by the rule: the cell has belonged to the
    /// closed interior of an initialised membrane.
    pub colonised: bool,
}

/// The seven layers, for per-layer diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Birth,
    Growth,
    Organism,
    Evolution,
    Computing,
    Copying,
    Main,
}

impl Layer {
    pub const ALL: [Layer; 7] = [
        Layer::Birth,
        Layer::Growth,
        Layer::Organism,
        Layer::Evolution,
        Layer::Computing,
        Layer::Copying,
        Layer::Main,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Birth => "birth",
            Layer::Growth => "growth",
            Layer::Organism => "organism",
            Layer::Evolution => "evolution",
            Layer::Computing => "computing",
            Layer::Copying => "copying",
            Layer::Main => "main",
        }
    }
}

impl Cell {
    pub fn letter(l: u8) -> Self {
        Cell { main: Some(l), ..Cell::default() }
    }

    /// All layers except the main one are blank.
    #[inline]
    pub fn is_quiescent(&self) -> bool {
        matches!(self.birth, Birth::Blank)
            && matches!(self.growth, Growth::Blank)
            && matches!(self.organism, Organism::Blank)
            && self.evolution.is_empty()
            && self.computing.is_blank()
            && self.copying.is_empty()
    }

    pub fn layer_is_blank(&self, layer: Layer) -> bool {
        match layer {
            Layer::Birth => matches!(self.birth, Birth::Blank),
            Layer::Growth => matches!(self.growth, Growth::Blank),
            Layer::Organism => matches!(self.organism, Organism::Blank),
            Layer::Evolution => self.evolution.is_empty(),
            Layer::Computing => self.computing.is_blank(),
            Layer::Copying => self.copying.is_empty(),
            Layer::Main => self.main.is_none(),
        }
    }

    /// The letter this cell shows through the projection onto the pattern
    /// alphabet, if it is a plain letter cell.
    #[inline]
    pub fn plain_letter(&self) -> Option<u8> {
        if self.is_quiescent() {
            self.main
        } else {
            None
        }
    }

    /// Quiescent, or holding only organism symbols that no longer move:
    /// such a cell changes only when an active neighbour reaches it.
    #[inline]
    pub fn is_static(&self) -> bool {
        matches!(self.birth, Birth::Blank)
            && matches!(self.growth, Growth::Blank)
            && !matches!(self.organism, Organism::Signal { .. })
            && self.evolution.is_empty()
            && self.computing.is_blank()
            && self.copying.is_empty()
    }

    pub fn is_heart(&self) -> bool {
        matches!(self.birth, Birth::Heart(_))
    }
}

/// Named symbols a Bernoulli measure may put mass on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Blank,
    Seed,
    /// A seed sitting on the designated growth symbol (its central bit is 1).
    SeedMarked,
    Marked,
    Letter(u8),
}

impl Symbol {
    pub fn cell(&self) -> Cell {
        match *self {
            Symbol::Blank => Cell::default(),
            Symbol::Seed => Cell { birth: Birth::Seed, ..Cell::default() },
            Symbol::SeedMarked => Cell { birth: Birth::Seed, growth: Growth::Marked, ..Cell::default() },
            Symbol::Marked => Cell { growth: Growth::Marked, ..Cell::default() },
            Symbol::Letter(l) => Cell::letter(l),
        }
    }

    /// `blank`, `seed`, `seed_marked`, `marked`, or a letter of `alphabet`.
    pub fn parse(name: &str, alphabet: &[char]) -> Result<Self> {
        Ok(match name {
            "blank" => Symbol::Blank,
            "seed" => Symbol::Seed,
            "seed_marked" => Symbol::SeedMarked,
            "marked" => Symbol::Marked,
            _ => {
                let mut chars = name.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => match alphabet.iter().position(|&a| a == c) {
                        Some(i) => Symbol::Letter(i as u8),
                        None => return Err(Error::Bernoulli(format!("letter {c:?} not in alphabet"))),
                    },
                    _ => return Err(Error::Bernoulli(format!("unknown symbol {name:?}"))),
                }
            }
        })
    }
}

/// Draws an i.i.d. configuration. Each site uses its own ChaCha8 stream
/// (stream number = site index) under the common `seed`, so the result does
/// not depend on evaluation order.
pub fn sample_bernoulli(torus: Torus, lambda: &[(Symbol, f64)], seed: u64) -> Result<Grid<Cell>> {
    if lambda.is_empty() {
        return Err(Error::Bernoulli("empty vector".into()));
    }
    if let Some((s, p)) = lambda.iter().find(|(_, p)| !(*p >= 0.0)) {
        return Err(Error::Bernoulli(format!("negative mass {p} on {s:?}")));
    }
    let total: f64 = lambda.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Bernoulli(format!("masses sum to {total}")));
    }
    let cells = (0..torus.volume())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x: f64 = rng.gen();
            let mut acc = 0.0;
            for (s, p) in lambda {
                acc += p;
                if x < acc {
                    return s.cell();
                }
            }
            lambda.iter().rev().find(|(_, p)| *p > 0.0).unwrap().0.cell()
        })
        .collect();
    Ok(Grid { torus, t: 0, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_validation() {
        let t = Torus::new(2, 4).unwrap();
        assert!(sample_bernoulli(t, &[(Symbol::Seed, 0.5), (Symbol::Blank, 0.6)], 1).is_err());
        assert!(sample_bernoulli(t, &[(Symbol::Seed, -0.1), (Symbol::Blank, 1.1)], 1).is_err());
        let g = sample_bernoulli(t, &[(Symbol::Letter(0), 1.0)], 1).unwrap();
        assert!(g.cells.iter().all(|c| c.main == Some(0)));
    }

    #[test]
    fn bernoulli_frequencies_and_determinism() {
        let t = Torus::new(2, 200).unwrap();
        let lam = [(Symbol::Seed, 0.05), (Symbol::Letter(0), 0.45), (Symbol::Letter(1), 0.5)];
        let g = sample_bernoulli(t, &lam, 9).unwrap();
        let seeds = g.cells.iter().filter(|c| c.birth == Birth::Seed).count() as f64;
        let p = seeds / t.volume() as f64;
        assert!((p - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / 40000.0).sqrt());
        assert_eq!(g, sample_bernoulli(t, &lam, 9).unwrap());
        assert_ne!(g, sample_bernoulli(t, &lam, 10).unwrap());
    }

    #[test]
    fn symbol_names() {
        let ab = ['a', 'b'];
        assert_eq!(Symbol::parse("b", &ab).unwrap(), Symbol::Letter(1));
        assert_eq!(Symbol::parse("seed_marked", &ab).unwrap(), Symbol::SeedMarked);
        assert!(Symbol::parse("c", &ab).is_err());
    }
}
