//! Turing machines on a d-dimensional tape, a reference simulator, and their
//! embedding as a cellular rule where one step of the automaton is one step
//! of the machine.
//!
//! Text format, one item per line (`%` starts a comment):
//!
//! ```text
//! dim 1
//! states carry ret halt
//! alphabet # 0 1
//! blank #
//! initial carry
//! final halt
//! carry 1 -> carry 0 -1
//! ```
//!
//! A move `+i` / `-i` shifts the head by ±e_i (axes counted from 1).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Engine, Grid, LocalRule, Neighbourhood, Torus, Vector};
use crate::measures::Pattern;

#[derive(Clone, Debug, PartialEq)]
pub struct TuringMachine {
    pub dim: usize,
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub blank: u8,
    pub initial: u16,
    pub finals: Vec<bool>,
    pub delta: HashMap<(u16, u8), (u16, u8, Vector)>,
}

impl TuringMachine {
    pub fn parse(text: &str) -> Result<Self> {
        let err = |m: String| Error::Machine(m);
        let mut dim = None;
        let mut states: Vec<String> = vec![];
        let mut alphabet: Vec<String> = vec![];
        let (mut blank, mut initial, mut finals) = (None, None, vec![]);
        let mut rules = vec![];
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('%').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[0] {
                "dim" => dim = Some(words.get(1).and_then(|w| w.parse::<usize>().ok()).ok_or_else(|| err(format!("line {}: bad dim", ln + 1)))?),
                "states" => states = words[1..].iter().map(|s| s.to_string()).collect(),
                "alphabet" => alphabet = words[1..].iter().map(|s| s.to_string()).collect(),
                "blank" => blank = words.get(1).map(|s| s.to_string()),
                "initial" => initial = words.get(1).map(|s| s.to_string()),
                "final" => finals = words[1..].iter().map(|s| s.to_string()).collect(),
                _ => rules.push((ln + 1, words)),
            }
        }
        let dim = dim.ok_or_else(|| err("missing dim".into()))?;
        if !(1..=crate::lattice::MAX_DIM).contains(&dim) {
            return Err(err(format!("dimension {dim}")));
        }
        let state = |s: &str| states.iter().position(|x| x == s).map(|i| i as u16).ok_or_else(|| err(format!("unknown state {s:?}")));
        let symbol = |s: &str| alphabet.iter().position(|x| x == s).map(|i| i as u8).ok_or_else(|| err(format!("unknown symbol {s:?}")));
        let blank = symbol(&blank.ok_or_else(|| err("missing blank".into()))?)?;
        let initial = state(&initial.ok_or_else(|| err("missing initial".into()))?)?;
        let mut fin = vec![false; states.len()];
        for f in &finals {
            fin[state(f)? as usize] = true;
        }
        let mut delta = HashMap::new();
        for (ln, w) in rules {
            if w.len() != 6 || w[2] != "->" {
                return Err(err(format!("line {ln}: expected `q s -> q' s' ±i`")));
            }
            let (q, s, q2, s2) = (state(w[0])?, symbol(w[1])?, state(w[3])?, symbol(w[4])?);
            let mv = w[5];
            let sign = match mv.chars().next() {
                Some('+') => 1,
                Some('-') => -1,
                _ => return Err(err(format!("line {ln}: bad move {mv:?}"))),
            };
            let axis: usize = mv[1..].parse().map_err(|_| err(format!("line {ln}: bad move {mv:?}")))?;
            if axis == 0 || axis > dim {
                return Err(err(format!("line {ln}: axis {axis} outside 1..={dim}")));
            }
            if fin[q as usize] {
                return Err(err(format!("line {ln}: final state {} has a transition", w[0])));
            }
            if delta.insert((q, s), (q2, s2, Vector::basis(axis - 1, sign))).is_some() {
                return Err(err(format!("line {ln}: duplicate transition")));
            }
        }
        for q in 0..states.len() as u16 {
            if fin[q as usize] {
                continue;
            }
            for s in 0..alphabet.len() as u8 {
                if !delta.contains_key(&(q, s)) {
                    return Err(err(format!("no transition for ({}, {})", states[q as usize], alphabet[s as usize])));
                }
            }
        }
        Ok(Self { dim, states, alphabet, blank, initial, finals: fin, delta })
    }

    pub fn is_final(&self, q: u16) -> bool {
        self.finals[q as usize]
    }

    pub fn symbol(&self, name: &str) -> Result<u8> {
        self.alphabet.iter().position(|x| x == name).map(|i| i as u8).ok_or_else(|| Error::Machine(format!("unknown symbol {name:?}")))
    }
}

/// Reference simulator on an unbounded sparse tape.
#[derive(Clone, Debug)]
pub struct Run<'a> {
    pub tm: &'a TuringMachine,
    pub tape: HashMap<Vector, u8>,
    pub head: Vector,
    pub state: u16,
    pub steps: u64,
}

impl<'a> Run<'a> {
    pub fn new(tm: &'a TuringMachine, input: &[(Vector, u8)], head: Vector) -> Self {
        Self { tm, tape: input.iter().copied().collect(), head, state: tm.initial, steps: 0 }
    }

    pub fn read(&self, v: Vector) -> u8 {
        self.tape.get(&v).copied().unwrap_or(self.tm.blank)
    }

    pub fn halted(&self) -> bool {
        self.tm.is_final(self.state)
    }

    /// One step; false once halted.
    pub fn step(&mut self) -> bool {
        if self.halted() {
            return false;
        }
        let (q, s, mv) = self.tm.delta[&(self.state, self.read(self.head))];
        self.tape.insert(self.head, s);
        self.head = self.head + mv;
        self.state = q;
        self.steps += 1;
        true
    }
}

/// A tape cell of the embedding: the symbol and, on the head, the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeCell {
    pub symbol: u8,
    pub state: Option<u16>,
}

pub struct TmRule<'a> {
    pub tm: &'a TuringMachine,
}

impl LocalRule<TapeCell> for TmRule<'_> {
    fn radius(&self) -> u32 {
        1
    }

    fn update(&self, n: &Neighbourhood<'_, TapeCell>) -> TapeCell {
        let me = *n.me();
        let mut next = me;
        if let Some(q) = me.state {
            if self.tm.is_final(q) {
                return me;
            }
            let (_, s, _) = self.tm.delta[&(q, me.symbol)];
            next = TapeCell { symbol: s, state: None };
        }
        for i in 0..n.dim() {
            for sign in [-1, 1] {
                let p = Vector::basis(i, sign);
                let c = n.at(p);
                if let Some(q) = c.state {
                    if self.tm.is_final(q) {
                        continue;
                    }
                    let (q2, _, mv) = self.tm.delta[&(q, c.symbol)];
                    if p + mv == Vector::ZERO {
                        next.state = Some(q2);
                    }
                }
            }
        }
        next
    }

    fn is_quiescent(&self, c: &TapeCell) -> bool {
        c.state.is_none()
    }
}

/// Heads on the tape (more than one is a malformation).
pub fn heads(grid: &Grid<TapeCell>) -> usize {
    grid.cells.iter().filter(|c| c.state.is_some()).count()
}

/// Runs the embedding on a torus of side `side` until the state is final or
/// `max_steps` have passed.
pub fn run_embedded(
    tm: &TuringMachine,
    side: i32,
    input: &[(Vector, u8)],
    head: Vector,
    max_steps: u64,
) -> Result<Grid<TapeCell>> {
    let torus = Torus::new(tm.dim, side)?;
    let mut grid = Grid::filled(torus, TapeCell { symbol: tm.blank, state: None });
    for (v, s) in input {
        grid.get_mut(*v).symbol = *s;
    }
    grid.get_mut(head).state = Some(tm.initial);
    let mut e = Engine::new(grid, TmRule { tm });
    for _ in 0..max_steps {
        let done = e.grid.cells.iter().any(|c| c.state.is_some_and(|q| tm.is_final(q)));
        if done {
            break;
        }
        e.step();
        if heads(&e.grid) != 1 {
            return Err(Error::Machine(format!("{} heads at t = {}", heads(&e.grid), e.t())));
        }
    }
    Ok(e.into_grid())
}

/// Pattern computed by the embedded machine on input `n`, written in binary
/// (least significant bit first) along the first axis from the origin using
/// the symbols `0` and `1`. The output is read on [0, side)^d through
/// `letters` (tape symbol, letter); unlisted symbols read as letter 0.
pub fn embedded_output(tm: &TuringMachine, n: u64, side: usize, letters: &[(u8, u8)], max_steps: u64) -> Result<Pattern> {
    let (zero, one) = (tm.symbol("0")?, tm.symbol("1")?);
    let bits = 64 - n.leading_zeros() as usize;
    let input: Vec<(Vector, u8)> =
        (0..bits.max(1)).map(|i| (Vector::basis(0, 1).scale(i as i32), if n >> i & 1 == 1 { one } else { zero })).collect();
    let tape_side = (side + bits + max_steps as usize).max(side) as i32;
    let g = run_embedded(tm, tape_side.min(4096), &input, Vector::ZERO, max_steps)?;
    let t = Torus::new(tm.dim, side as i32)?;
    let cells = t
        .coords()
        .map(|v| {
            let s = g.get(v).symbol;
            letters.iter().find(|(a, _)| *a == s).map(|x| x.1).unwrap_or(0)
        })
        .collect();
    Pattern::new(tm.dim, side, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const INCREMENTER: &str = "\
dim 1
states carry ret halt
alphabet # 0 1
blank #
initial carry
final halt
carry 0 -> ret 1 +1
carry 1 -> carry 0 -1
carry # -> ret 1 +1
ret 0 -> ret 0 +1
ret 1 -> ret 1 +1
ret # -> halt # -1
";

    #[test]
    fn incrementer_embedding_follows_the_reference() {
        let tm = TuringMachine::parse(INCREMENTER).unwrap();
        let side = 12;
        let base = 4;
        for x in 0u32..16 {
            // most significant bit first at cells base..base+4, head on the last bit
            let input: Vec<(Vector, u8)> =
                (0..4).map(|i| (Vector::new(&[base + i]), 1 + (x >> (3 - i) & 1) as u8)).collect();
            let head = Vector::new(&[base + 3]);
            let mut reference = Run::new(&tm, &input, head);
            let torus = Torus::new(1, side).unwrap();
            let mut grid = Grid::filled(torus, TapeCell { symbol: tm.blank, state: None });
            for (v, s) in &input {
                grid.get_mut(*v).symbol = *s;
            }
            grid.get_mut(head).state = Some(tm.initial);
            let mut e = Engine::new(grid, TmRule { tm: &tm });
            for _ in 0..20 {
                let before = reference.head;
                reference.step();
                assert!((reference.head - before).norm_inf() <= 1);
                e.step();
                assert_eq!(heads(&e.grid), 1);
                for v in torus.coords() {
                    let c = e.grid.get(v);
                    assert_eq!(c.symbol, reference.read(v), "input {x}, cell {v:?}");
                    assert_eq!(c.state, (v == reference.head).then_some(reference.state));
                }
            }
            assert!(reference.halted());
            let value: u32 = (0..6).fold(0, |acc, i| {
                let s = reference.read(Vector::new(&[base - 1 + i]));
                if s == tm.blank { acc } else { acc * 2 + (s - 1) as u32 }
            });
            assert_eq!(value, x + 1);
        }
    }

    #[test]
    fn write_and_halt_freezes() {
        let tm = TuringMachine::parse(
            "dim 2\nstates s f\nalphabet # a\nblank #\ninitial s\nfinal f\ns # -> f a +1\ns a -> f a +1\n",
        )
        .unwrap();
        let g = run_embedded(&tm, 5, &[], Vector::ZERO, 10).unwrap();
        assert_eq!(g.get(Vector::ZERO).symbol, 1);
        assert_eq!(g.get(Vector::new(&[1, 0])).state, Some(1));
        let mut e = Engine::new(g.clone(), TmRule { tm: &tm });
        e.run(5);
        assert_eq!(e.grid.cells, g.cells);
    }

    #[test]
    fn malformed_machines_are_rejected() {
        assert!(TuringMachine::parse("dim 1\nstates a b\nalphabet #\nblank #\ninitial a\nfinal b\n").is_err());
        assert!(TuringMachine::parse("dim 1\nstates a\nalphabet #\nblank #\ninitial a\nfinal a\na # -> a # +1\n").is_err());
        assert!(TuringMachine::parse("dim 1\nstates a b\nalphabet #\nblank #\ninitial a\nfinal b\na # -> b # +2\n").is_err());
    }
}
