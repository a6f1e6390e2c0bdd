//! Organism and evolution layers: territories around hearts, bodies, and the
//! conflicts that thin out hearts which are too close to each other.
//!
//! At each generation start every heart emits a building signal that floods
//! its colony at speed one. Signals from different hearts stop each other and
//! leave borders behind; the region a heart's signal reaches is its territory.
//! In parallel each heart grows a cubic body of radius `n` (one cell every `n`
//! steps). Bodies of hearts at distance `2n` or `2n+1` touch; the touching
//! extremal points settle the conflict with the hearts' central bits, then the
//! body shrinks back and reports to the heart.

use serde::{Deserialize, Serialize};

use crate::lattice::{ball1, units, Cell, Grid, Growth, HeartBits, Neighbourhood, Organism, Torus, Vector};

/// One cell of a body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyCell {
    /// Offset from the heart.
    pub rel: Vector,
    pub n: u32,
    /// Steps since the generation started.
    pub age: u32,
    pub bits: HeartBits,
    pub lost: bool,
    pub won: bool,
    /// XOR of the side bits received from victims.
    pub xor: bool,
}

impl BodyCell {
    pub fn start(n: u32, bits: HeartBits) -> Self {
        Self { rel: Vector::ZERO, n, age: 0, bits, lost: false, won: false, xor: false }
    }

    fn n2(&self) -> u32 {
        self.n * self.n
    }

    fn expands(&self) -> bool {
        self.age < self.n2() && (self.age + 1) % self.n == 0
    }

    fn in_conflict_step(&self) -> bool {
        self.age == self.n2() && self.rel.norm_inf() == self.n as i32
    }

    fn shrinks(&self) -> bool {
        self.age >= self.n2() && self.age < 2 * self.n2() && (self.age + 1 - self.n2()) % self.n == 0
    }

    /// The body has shrunk back onto the heart and reports this step.
    pub fn finished(&self) -> bool {
        self.age == 2 * self.n2()
    }

    fn same_body(&self, other: &BodyCell) -> bool {
        self.rel == other.rel && self.n == other.n
    }
}

/// Directions of n-extremality of `rel` (offset from the heart), as
/// (axis, sign) pairs.
pub fn ext_n(rel: Vector, n: i32, d: usize) -> Vec<(usize, i32)> {
    (0..d).filter(|&i| rel.0[i].abs() == n).map(|i| (i, rel.0[i].signum())).collect()
}

/// `rel` is one of the 3^d - 1 n-extremal points: every component is 0 or +-n.
pub fn is_extremal(rel: Vector, n: i32) -> bool {
    !rel.is_zero() && rel.0.iter().all(|&x| x == 0 || x.abs() == n)
}

/// Does the extremal point `y` (offset `y_rel` from its heart) deal with the
/// body symbol at `y' = y + delta` (offset `yp_rel` from the other heart)?
pub fn settle_conflict(y_rel: Vector, yp_rel: Vector, delta: Vector, n: i32, d: usize) -> bool {
    for i in 0..d {
        let extremal = y_rel.0[i].abs() == n;
        // (I) y' differs from y only along directions y is extremal in
        if delta.0[i] != 0 && !(extremal && delta.0[i] == y_rel.0[i].signum()) {
            return false;
        }
        // (II) a shared extremality direction requires y_i != y'_i
        if extremal && yp_rel.0[i] == y_rel.0[i] && delta.0[i] == 0 {
            return false;
        }
        // (III) an "=" component of the quadrant must stay "="
        if y_rel.0[i] == 0 && yp_rel.0[i] != 0 {
            return false;
        }
    }
    true
}

/// Which of two conflicting hearts dies. `b_minus_a` is the offset from heart
/// `a` to heart `b`. Equal central bits destroy the lexicographically larger
/// heart, different bits the smaller. Returns true when `a` dies.
pub fn resolve_kill(bit_a: bool, bit_b: bool, b_minus_a: Vector) -> bool {
    let b_larger = !b_minus_a.is_lex_negative();
    if bit_a == bit_b {
        !b_larger
    } else {
        b_larger
    }
}

/// Outcome of the body's conflict step at one extremal cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConflictFlags {
    pub lost: bool,
    pub won: bool,
    pub xor: bool,
}

/// Conflicts settled by the body cell `b` located at offset `p` of the view.
pub fn conflict_flags(n: &Neighbourhood<'_, Cell>, p: Vector, b: &BodyCell) -> ConflictFlags {
    let d = n.dim();
    let mut flags = ConflictFlags { lost: b.lost, won: b.won, xor: b.xor };
    if !b.in_conflict_step() || !is_extremal(b.rel, b.n as i32) {
        return flags;
    }
    let heart = p - b.rel;
    let mut seen: Vec<Vector> = Vec::new();
    for &delta in ball1(d) {
        for o in &n.at(p + delta).evolution {
            if o.n != b.n || o.age != b.age || o.rel.norm_inf() != b.n as i32 {
                continue;
            }
            let other = p + delta - o.rel;
            if other == heart || seen.contains(&other) {
                continue;
            }
            if !settle_conflict(b.rel, o.rel, delta, b.n as i32, d) {
                continue;
            }
            seen.push(other);
            let offset = other - heart;
            if resolve_kill(b.bits.central, o.bits.central, offset) {
                flags.lost = true;
            } else {
                flags.won = true;
                // the victim hands over its side bit for the killer's quadrant
                flags.xor ^= o.bits.side_bit(d, (-offset).signum());
            }
        }
    }
    flags
}

/// Result of the evolution layer for the heart cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeartVerdict {
    Unchanged,
    Dies,
    NewCentral(bool),
}

/// New evolution layer of the centre cell. `start` is the body seed a heart
/// plants when a generation starts. Also returns the verdict of a body that
/// finished on this cell.
pub fn evolution_update(n: &Neighbourhood<'_, Cell>, start: Option<BodyCell>) -> (Vec<BodyCell>, HeartVerdict) {
    let me = n.me();
    let mut out: Vec<BodyCell> = Vec::new();
    let mut verdict = HeartVerdict::Unchanged;
    let blocked = !matches!(me.growth, Growth::Blank);

    for b in &me.evolution {
        if b.finished() {
            if b.rel.is_zero() {
                verdict = if b.lost {
                    HeartVerdict::Dies
                } else if b.won {
                    HeartVerdict::NewCentral(b.xor)
                } else {
                    HeartVerdict::Unchanged
                };
            }
            continue;
        }
        if b.expands() || b.shrinks() {
            continue;
        }
        let f = conflict_flags(n, Vector::ZERO, b);
        out.push(BodyCell { age: b.age + 1, lost: f.lost, won: f.won, xor: f.xor, ..*b });
    }

    if !blocked {
        for &v in units(n.dim()) {
            let p = -v;
            for b in &n.at(p).evolution {
                let moved = if b.expands() && b.rel.extremal_sign().admits_outward(&v) {
                    BodyCell { rel: b.rel + v, age: b.age + 1, ..*b }
                } else if b.shrinks() && b.rel.extremal_sign() == p {
                    let f = conflict_flags(n, p, b);
                    BodyCell { rel: b.rel + v, age: b.age + 1, lost: f.lost, won: f.won, xor: f.xor, ..*b }
                } else {
                    continue;
                };
                match out.iter_mut().find(|o| o.same_body(&moved)) {
                    Some(o) => {
                        o.lost |= moved.lost;
                        o.won |= moved.won;
                        o.xor ^= moved.xor;
                    }
                    None => out.push(moved),
                }
            }
        }
    }
    if let Some(s) = start {
        out.push(s);
    }
    (out, verdict)
}

/// A front of generation `gen` erases symbols of older generations only, so
/// each cell belongs to the first heart whose signal reaches it.
fn enterable(c: &Cell, gen: u32) -> bool {
    matches!(c.growth, Growth::Blank) && !c.is_heart() && c.organism.gen().map_or(true, |g| g < gen)
}

enum Claim {
    Nothing,
    /// Two different hearts enter at once.
    Tie(u32),
    One { rel: Vector, left: u32, gen: u32 },
}

/// The signals that would enter the cell at offset `q` this step.
fn signal_claim(n: &Neighbourhood<'_, Cell>, q: Vector) -> Claim {
    let target = n.at(q);
    let mut found = Claim::Nothing;
    for &v in units(n.dim()) {
        if let Organism::Signal { rel, left, gen } = n.at(q - v).organism {
            if left == 0 || !rel.extremal_sign().admits_outward(&v) || !enterable(target, gen) {
                continue;
            }
            let implied = rel + v;
            match found {
                Claim::Nothing => found = Claim::One { rel: implied, left: left - 1, gen },
                Claim::One { rel: r, .. } if r == implied => {}
                _ => return Claim::Tie(gen),
            }
        }
    }
    found
}

/// New organism layer of the centre cell. `emit` carries the generation and
/// lifetime of the building signal of a heart whose generation starts this
/// step.
pub fn organism_update(n: &Neighbourhood<'_, Cell>, emit: Option<(u32, u32)>) -> Organism {
    if let Some((gen, left)) = emit {
        return Organism::Signal { rel: Vector::ZERO, left, gen };
    }
    let me = n.me();
    match signal_claim(n, Vector::ZERO) {
        Claim::Nothing => match me.organism {
            // a front running into a membrane leaves a border behind it
            Organism::Signal { rel, gen, .. }
                if units(n.dim())
                    .iter()
                    .any(|v| rel.extremal_sign().admits_outward(v) && !matches!(n.at(*v).growth, Growth::Blank)) =>
            {
                Organism::Border { gen }
            }
            Organism::Signal { rel, gen, .. } => Organism::Body { rel, gen },
            other => other,
        },
        Claim::Tie(gen) => Organism::Border { gen },
        Claim::One { rel, left, gen } => {
            // running into another heart's front ends both with a border
            for &e in units(n.dim()) {
                if let Organism::Signal { rel: r2, .. } = n.at(e).organism {
                    if e - r2 != -rel {
                        return Organism::Border { gen };
                    }
                }
            }
            // same-step arrival of another heart's signal next door
            for &e in units(n.dim()) {
                if let Claim::One { rel: r2, .. } = signal_claim(n, e) {
                    if e - r2 != -rel {
                        return Organism::Pseudo { rel, gen };
                    }
                }
            }
            Organism::Signal { rel, left, gen }
        }
    }
}

/// Territory of the heart at `heart`: the axis-connected set of cells
/// reachable from it without crossing membranes, borders or symbols that
/// belong to another heart.
pub fn territory(grid: &Grid<Cell>, heart: Vector) -> Vec<Vector> {
    let torus = grid.torus;
    let mut seen = vec![false; torus.volume()];
    let mut stack = vec![torus.wrap(heart)];
    seen[torus.index(heart)] = true;
    let mut out = Vec::new();
    while let Some(x) = stack.pop() {
        out.push(x);
        for j in 0..torus.d {
            for s in [-1, 1] {
                let y = torus.wrap(x + Vector::basis(j, s));
                let i = torus.index(y);
                if seen[i] {
                    continue;
                }
                let c = grid.get(y);
                let mine = |rel: Vector| torus.wrap(y - rel) == torus.wrap(heart);
                let ok = matches!(c.growth, Growth::Blank)
                    && !(c.is_heart() && y != torus.wrap(heart))
                    && match c.organism {
                        Organism::Blank => true,
                        Organism::Border { .. } => false,
                        o => o.rel().is_some_and(mine),
                    };
                if ok {
                    seen[i] = true;
                    stack.push(y);
                }
            }
        }
    }
    out.sort();
    out
}

/// Positions and bits of live hearts.
pub fn hearts(grid: &Grid<Cell>) -> Vec<(Vector, HeartBits)> {
    grid.torus
        .coords()
        .filter_map(|x| match grid.get(x).birth {
            crate::lattice::Birth::Heart(b) => Some((x, b)),
            _ => None,
        })
        .collect()
}

/// Organism-level model of the selection process: hearts on a torus fight
/// generation by generation using the same kill rule and bit transfer as the
/// bodies, without simulating the lattice.
#[derive(Clone, Debug)]
pub struct Tournament {
    pub torus: Torus,
    pub hearts: Vec<(Vector, HeartBits)>,
}

impl Tournament {
    pub fn new(torus: Torus, hearts: Vec<(Vector, HeartBits)>) -> Self {
        Self { torus, hearts }
    }

    /// Plays generation `n`: hearts at distance 2n or 2n+1 are in conflict.
    pub fn generation(&mut self, n: u32) {
        let d = self.torus.d;
        let lo = 2 * n as i32;
        let mut lost = vec![false; self.hearts.len()];
        let mut won = vec![false; self.hearts.len()];
        let mut xor = vec![false; self.hearts.len()];
        for a in 0..self.hearts.len() {
            for b in 0..self.hearts.len() {
                if a == b {
                    continue;
                }
                let (xa, ba) = self.hearts[a];
                let (xb, bb) = self.hearts[b];
                let off = self.torus.displacement(xa, xb);
                let dist = off.norm_inf();
                if dist != lo && dist != lo + 1 {
                    continue;
                }
                if resolve_kill(ba.central, bb.central, off) {
                    lost[a] = true;
                } else {
                    won[a] = true;
                    xor[a] ^= bb.side_bit(d, (-off).signum());
                }
            }
        }
        let mut next = Vec::with_capacity(self.hearts.len());
        for (i, &(x, mut bits)) in self.hearts.iter().enumerate() {
            if lost[i] {
                continue;
            }
            if won[i] {
                bits.central = xor[i];
            }
            next.push((x, bits));
        }
        self.hearts = next;
    }
}
