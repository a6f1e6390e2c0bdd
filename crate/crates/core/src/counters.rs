//! Redundant binary counters and the respiration cycle carried by membranes.
//!
//! A counter is a word of digits in {-1, 0, 1, 2}, least significant first.
//! Carries travel one position per step, so every update is local: a digit
//! only looks at its immediate neighbours in the word. The value of a word is
//! the usual sum of `d_i * 2^i`; several words share a value, which is what
//! lets increments and decrements be absorbed in constant time.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the word length. 32 digits hold values well past 2^31,
/// far more than any desk-scale run reaches.
pub const MAX_DIGITS: usize = 32;

/// Change applied at the least significant digit during a tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Delta {
    Inc,
    Dec,
    Hold,
}

impl Delta {
    fn amount(self) -> i8 {
        match self {
            Delta::Inc => 1,
            Delta::Dec => -1,
            Delta::Hold => 0,
        }
    }
}

/// Packed redundant binary word: two bits per digit (digit + 1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RedundantCounter {
    bits: u64,
    len: u8,
}

impl Default for RedundantCounter {
    fn default() -> Self {
        Self::zero()
    }
}

impl RedundantCounter {
    pub const fn zero() -> Self {
        Self { bits: 1, len: 1 }
    }

    /// Standard binary word for `v`.
    pub fn from_value(mut v: u64) -> Self {
        if v == 0 {
            return Self::zero();
        }
        let mut digits = Vec::new();
        while v > 0 {
            digits.push((v & 1) as i8);
            v >>= 1;
        }
        Self::from_digits(&digits).expect("binary words are valid")
    }

    /// Digits least significant first.
    pub fn from_digits(digits: &[i8]) -> Result<Self> {
        if digits.is_empty() || digits.len() > MAX_DIGITS {
            return Err(Error::MalformedCounter(format!(
                "word length {} outside 1..={MAX_DIGITS}",
                digits.len()
            )));
        }
        let mut bits = 0u64;
        for (i, &d) in digits.iter().enumerate() {
            if !(-1..=2).contains(&d) {
                return Err(Error::MalformedCounter(format!("digit {d} at position {i}")));
            }
            bits |= ((d + 1) as u64) << (2 * i);
        }
        Ok(Self { bits, len: digits.len() as u8 })
    }

    /// Parses the most-significant-first notation used in printed traces,
    /// where `1̄` (or `-1`) stands for the digit -1.
    pub fn parse_msb(s: &str) -> Result<Self> {
        let mut digits = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let d = match c {
                '-' => match chars.next() {
                    Some('1') => -1,
                    _ => return Err(Error::MalformedCounter(s.to_string())),
                },
                '0' => 0,
                '1' => {
                    if chars.peek() == Some(&'\u{304}') {
                        chars.next();
                        -1
                    } else {
                        1
                    }
                }
                '2' => 2,
                _ => return Err(Error::MalformedCounter(s.to_string())),
            };
            digits.push(d);
        }
        digits.reverse();
        Self::from_digits(&digits)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn digit(&self, i: usize) -> i8 {
        if i >= self.len() {
            return 0;
        }
        ((self.bits >> (2 * i)) & 3) as i8 - 1
    }

    pub fn digits(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.digit(i)).collect()
    }

    /// Numeric value of the word.
    pub fn value(&self) -> i64 {
        (0..self.len()).rev().fold(0i64, |acc, i| 2 * acc + self.digit(i) as i64)
    }

    /// The zero test a cell can perform locally: the window at the least
    /// significant end reads "#0", i.e. the whole word is the single digit 0.
    #[inline]
    pub fn is_zero_window(&self) -> bool {
        self.len == 1 && self.bits == 1
    }

    /// One synchronous step: every digit applies the local carry rules, the
    /// least significant digit additionally absorbs `delta`, and leading
    /// zeros are trimmed.
    pub fn tick(&self, delta: Delta) -> Self {
        self.try_tick(delta).expect("counter left the redundant digit range")
    }

    pub fn try_tick(&self, delta: Delta) -> Result<Self> {
        let n = self.len();
        let mut out = [0i8; MAX_DIGITS + 1];
        for (i, slot) in out.iter_mut().enumerate().take(n + 1) {
            let below = if i == 0 { None } else { Some(self.digit(i - 1)) };
            let me = if i < n { Some(self.digit(i)) } else { None };
            let above = if i + 1 < n { Some(self.digit(i + 1)) } else { None };
            let d = local_rewrite(below, me, above, if i == 0 { delta } else { Delta::Hold });
            if !(-1..=2).contains(&d) {
                return Err(Error::MalformedCounter(format!(
                    "digit {d} at position {i} after ticking {self:?}"
                )));
            }
            *slot = d;
        }
        let mut len = n + 1;
        while len > 1 && out[len - 1] == 0 {
            len -= 1;
        }
        if len > MAX_DIGITS {
            return Err(Error::MalformedCounter("counter overflow".into()));
        }
        Self::from_digits(&out[..len])
    }
}

/// Does the digit `me` (with `above` its more significant neighbour, `None`
/// for the blank past the end) push a carry upwards this step?
#[inline]
fn emits_carry(me: i8, above: Option<i8>) -> bool {
    me == 2 && matches!(above, None | Some(0) | Some(1))
}

/// Does `me` borrow from its more significant neighbour this step? Besides
/// `1(-1) -> 01` and `0(-1) -> (-1)1`, a `-1` under a `2` borrows too
/// (`2(-1) -> 11`): that pair appears when a decrement follows a carry.
#[inline]
fn borrows(me: i8, above: Option<i8>) -> bool {
    me == -1 && matches!(above, Some(0) | Some(1) | Some(2))
}

/// The local rule on one digit position. `me = None` is the blank position
/// just past the most significant digit, which may receive a carry (`#2 -> 10`).
/// Covers `02 -> 10`, `12 -> 20`, `#2 -> 10`, `1(-1) -> 01`, `0(-1) -> (-1)1`.
pub fn local_rewrite(below: Option<i8>, me: Option<i8>, above: Option<i8>, delta: Delta) -> i8 {
    let incoming = match below {
        Some(b) => {
            let up = emits_carry(b, me) as i8;
            let down = if me.is_some() { borrows(b, me) as i8 } else { 0 };
            up - down
        }
        None => 0,
    };
    match me {
        None => incoming,
        Some(m) => {
            let outgoing = 2 * emits_carry(m, above) as i8 - 2 * borrows(m, above) as i8;
            m - outgoing + incoming + delta.amount()
        }
    }
}

impl fmt::Debug for RedundantCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Most significant digit first, `1̄` for -1.
impl fmt::Display for RedundantCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.len()).rev() {
            match self.digit(i) {
                -1 => f.write_str("1\u{304}")?,
                d => write!(f, "{d}")?,
            }
        }
        Ok(())
    }
}

/// Phase of the A/B cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Plus,
    Minus,
    Breath,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Plus => "+",
            Phase::Minus => "-",
            Phase::Breath => "breath",
        })
    }
}

/// Counters carried by every membrane cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RespirationState {
    pub phase: Phase,
    pub a: RedundantCounter,
    pub b: RedundantCounter,
    pub age: RedundantCounter,
}

impl Default for RespirationState {
    fn default() -> Self {
        Self::initial()
    }
}

impl RespirationState {
    /// State of a freshly initialised membrane (at time 1).
    pub fn initial() -> Self {
        Self {
            phase: Phase::Plus,
            a: RedundantCounter::from_value(1),
            b: RedundantCounter::zero(),
            age: RedundantCounter::zero(),
        }
    }

    /// State an initialised membrane holds at time `t >= 1`.
    pub fn at_time(t: u64) -> Self {
        assert!(t >= 1, "membranes are born at time 1");
        let mut s = Self::initial();
        for _ in 1..t {
            s = s.respire().0;
        }
        s
    }

    /// One step of the cycle. Returns the new state and the action taken;
    /// `Phase::Breath` as action means the membrane grows during this step.
    pub fn respire(&self) -> (Self, Phase) {
        let action = match self.phase {
            Phase::Plus | Phase::Breath => Phase::Plus,
            Phase::Minus if self.b.is_zero_window() => Phase::Breath,
            Phase::Minus => Phase::Minus,
        };
        let (da, db) = match action {
            Phase::Plus => (Delta::Dec, Delta::Inc),
            Phase::Minus => (Delta::Inc, Delta::Dec),
            Phase::Breath => (Delta::Inc, Delta::Hold),
        };
        let a = self.a.tick(da);
        let b = self.b.tick(db);
        let phase = match action {
            Phase::Plus if a.is_zero_window() => Phase::Minus,
            other => other,
        };
        (Self { phase, a, b, age: self.age.tick(Delta::Inc) }, action)
    }

    /// Will the next `respire` breathe?
    #[inline]
    pub fn breathes_next(&self) -> bool {
        self.phase == Phase::Minus && self.b.is_zero_window()
    }

    pub fn is_breath(&self) -> bool {
        self.phase == Phase::Breath
    }
}

/// Edge length of the membrane cube grown from a single viable seed at time
/// `t >= 1`: 5 at birth, one more cell on each side at every breath.
pub fn cube_edge(t: u64) -> u64 {
    3 + 2 * isqrt(t)
}

pub fn isqrt(t: u64) -> u64 {
    let mut r = (t as f64).sqrt() as u64;
    while r * r > t {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= t {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> RedundantCounter {
        RedundantCounter::parse_msb(s).unwrap()
    }

    #[test]
    fn local_rules_from_the_text() {
        // pairs written most significant first
        assert_eq!(w("02").tick(Delta::Hold), w("10"));
        assert_eq!(w("12").tick(Delta::Hold), w("20"));
        assert_eq!(w("2").tick(Delta::Hold), w("10"));
        assert_eq!(w("101\u{304}").tick(Delta::Hold), w("11\u{304}1"));
        assert_eq!(w("11\u{304}").tick(Delta::Hold), w("1"));
    }

    #[test]
    fn lsb_increment_cycle() {
        assert_eq!(w("0").tick(Delta::Inc), w("1"));
        assert_eq!(w("1").tick(Delta::Inc), w("2"));
        assert_eq!(w("2").tick(Delta::Inc), w("11"));
    }

    #[test]
    fn display_round_trip() {
        for s in ["0", "11\u{304}", "102", "1\u{304}1"] {
            assert_eq!(w(s).to_string(), s);
        }
        assert_eq!(w("1-1"), w("11\u{304}"));
        assert!(RedundantCounter::parse_msb("3").is_err());
    }

    #[test]
    fn increments_from_zero_track_value_and_length() {
        let mut c = RedundantCounter::zero();
        for t in 1..=100_000u64 {
            c = c.tick(Delta::Inc);
            assert_eq!(c.value(), t as i64);
            let bound = (64 - (t - 1).leading_zeros()) as usize + 1; // ceil(log2 t) + 1
            assert!(c.len() <= bound.max(1), "t={t} len={} word={c}", c.len());
        }
    }

    #[test]
    fn first_ten_steps_of_the_cycle() {
        let table = [
            (1, "+", "1", "0", "0", 5),
            (2, "-", "0", "1", "1", 5),
            (3, "-", "1", "0", "2", 5),
            (4, "breath", "2", "0", "11", 7),
            (5, "+", "11\u{304}", "1", "12", 7),
            (6, "-", "0", "2", "21", 7),
            (7, "-", "1", "11\u{304}", "102", 7),
            (8, "-", "2", "0", "111", 7),
            (9, "breath", "11", "0", "112", 9),
            (10, "+", "10", "1", "121", 9),
        ];
        for (t, phase, a, b, age, edge) in table {
            let s = RespirationState::at_time(t);
            assert_eq!(s.phase.to_string(), phase, "t={t}");
            assert_eq!(s.a.to_string(), a, "t={t}");
            assert_eq!(s.b.to_string(), b, "t={t}");
            assert_eq!(s.age.to_string(), age, "t={t}");
            assert_eq!(cube_edge(t), edge);
        }
    }

    #[test]
    fn respiration_counters_stay_well_formed() {
        let mut s = RespirationState::initial();
        for t in 1..200_000u64 {
            for c in [s.a, s.b, s.age] {
                let d = c.digits();
                assert!(d.iter().all(|x| (-1..=2).contains(x)));
                assert!(d.windows(2).all(|p| !(p[0] == -1 && p[1] == -1)), "t={t} {c}");
                assert!(c.value() >= 0);
                assert_eq!(c.is_zero_window(), c.value() == 0, "t={t} {c}");
            }
            assert_eq!(s.age.value(), t as i64 - 1);
            s = s.respire().0;
        }
    }

    #[test]
    fn is_zero_window_never_lies_on_short_words() {
        fn all_words(len: usize, prefix: &mut Vec<i8>, out: &mut Vec<RedundantCounter>) {
            if prefix.len() == len {
                out.push(RedundantCounter::from_digits(prefix).unwrap());
                return;
            }
            for d in -1..=2 {
                prefix.push(d);
                all_words(len, prefix, out);
                prefix.pop();
            }
        }
        let mut words = Vec::new();
        for len in 1..=6 {
            all_words(len, &mut Vec::new(), &mut words);
        }
        for c in words {
            if c.is_zero_window() {
                assert_eq!(c.value(), 0);
            }
        }
    }

    #[test]
    fn isqrt_exact() {
        for t in 0..10_000u64 {
            let r = isqrt(t);
            assert!(r * r <= t && (r + 1) * (r + 1) > t);
        }
    }
}
