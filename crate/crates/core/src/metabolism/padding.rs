//! Resource-bounded reindexing of a pattern sequence. At stage n the padder
//! gives the generator t_lim(n) steps to produce its next pattern; on timeout
//! it repeats the previous one. The index map g is non-decreasing, grows by
//! at most one per stage, and reaches every index of a total generator.

use crate::error::{Error, Result};
use crate::measures::Pattern;

/// A pattern generator with a step count per input.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// Halts after one step on every input; outputs the constant letter i mod 2.
    Immediate,
    /// Like `Immediate`, but runs forever on input `stuck`.
    NeverOn { stuck: u64 },
    /// Takes base^i steps on input i; outputs the constant letter i mod 2.
    Growing { base: u64 },
}

impl Generator {
    /// Steps until halting on `input`, `None` if it never halts.
    pub fn runtime(&self, input: u64) -> Option<u64> {
        match *self {
            Generator::Immediate => Some(1),
            Generator::NeverOn { stuck } => (input != stuck).then_some(1),
            Generator::Growing { base } => base.checked_pow(input as u32).or(Some(u64::MAX)),
        }
    }

    pub fn output(&self, input: u64, d: usize) -> Pattern {
        Pattern::constant(d, 1, (input % 2) as u8)
    }

    /// The generator as a machine advanced one step at a time.
    pub fn start(&self, input: u64) -> Stepper {
        Stepper { remaining: self.runtime(input), input }
    }
}

/// A running generator.
pub struct Stepper {
    remaining: Option<u64>,
    pub input: u64,
}

impl Stepper {
    /// Advances one step; true once the generator has halted.
    pub fn step(&mut self) -> bool {
        match &mut self.remaining {
            None => false,
            Some(r) => {
                *r = r.saturating_sub(1);
                *r == 0
            }
        }
    }
}

/// t_lim(n) = ⌈n^-d · 2^(n^(d - 1/4))⌉, saturating.
pub fn time_budget(n: u64, d: usize) -> u64 {
    let e = (n as f64).powf(d as f64 - 0.25);
    let log = e - d as f64 * (n as f64).log2();
    if log >= 63.0 {
        u64::MAX
    } else {
        log.exp2().ceil().max(1.0) as u64
    }
}

/// Side bound n^((d - 1/2)/d) for the normalised pattern at stage n.
pub fn side_bound(n: u64, d: usize) -> f64 {
    (n as f64).powf((d as f64 - 0.5) / d as f64)
}

/// Concatenates `w` with itself so that its side k satisfies
/// bound/2 < k <= bound.
pub fn normalise_side(w: &Pattern, n: u64) -> Result<Pattern> {
    let a = side_bound(n, w.d);
    if w.side as f64 > a {
        return Err(Error::Generator(format!("pattern side {} exceeds the bound {a:.3} at stage {n}", w.side)));
    }
    Ok(w.tile((a / w.side as f64).floor() as usize))
}

/// (w'_n, g(n)) for n = 0..=stages. `w0` is w'_0, with g(0) = 0.
pub fn pad_sequence(gen: &Generator, w0: &Pattern, stages: u64) -> Vec<(Pattern, u64)> {
    let d = w0.d;
    let mut out = vec![(w0.clone(), 0)];
    for n in 1..=stages {
        let (w, g) = out.last().unwrap().clone();
        let next = match gen.runtime(g + 1) {
            Some(rt) if rt <= time_budget(n, d) => (gen.output(g + 1, d), g + 1),
            _ => (w, g),
        };
        out.push(next);
    }
    out
}

/// The two-tape padder, simulated step by step: one tape runs the generator,
/// the other counts down the budget; whichever finishes first decides.
pub fn reference_padder(gen: &Generator, w0: &Pattern, n: u64) -> (Pattern, u64) {
    if n == 0 {
        return (w0.clone(), 0);
    }
    let (w, g) = reference_padder(gen, w0, n - 1);
    let mut machine = gen.start(g + 1);
    let mut clock = time_budget(n, w0.d);
    while clock > 0 {
        clock -= 1;
        if machine.step() {
            return (gen.output(machine.input, w0.d), g + 1);
        }
    }
    (w, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets() {
        assert_eq!(time_budget(1, 2), 2);
        assert_eq!(time_budget(2, 2), 3);
        assert_eq!(time_budget(3, 2), 13);
    }

    #[test]
    fn immediate_generator_is_not_padded() {
        let w0 = Pattern::constant(2, 1, 0);
        for (n, (_, g)) in pad_sequence(&Generator::Immediate, &w0, 10).iter().enumerate() {
            assert_eq!(*g, n as u64);
        }
    }

    #[test]
    fn stuck_generator_repeats_the_start() {
        let w0 = Pattern::constant(2, 1, 0);
        for (w, g) in pad_sequence(&Generator::NeverOn { stuck: 1 }, &w0, 10) {
            assert_eq!(g, 0);
            assert_eq!(w, w0);
        }
    }

    #[test]
    fn normalised_sides_fall_in_range() {
        let w = Pattern::constant(2, 2, 1);
        assert!(normalise_side(&w, 1).is_err());
        for n in 3..200 {
            let k = normalise_side(&w, n).unwrap().side as f64;
            let a = side_bound(n, 2);
            assert!(a / 2.0 < k && k <= a, "n = {n}");
        }
    }
}
