//! Computing and copying layers: the brain that counts generations, the
//! schedule it follows, the pattern programs, and the copy process that tiles
//! a territory with the current pattern.

mod copy;
pub mod padding;
pub mod tm;

pub use copy::{copy_update, heirs, launch, local_ok, CopyRecord, CopyUpdate};

use serde::{Deserialize, Serialize};

use crate::counters::{isqrt, Delta, RedundantCounter};
use crate::error::{Error, Result};
use crate::measures::Pattern;

/// Generation start times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    /// t_n = Σ_{k<n} ⌈2^(k^(d - 1/4))⌉.
    Paper { d: u32 },
    /// t_n = t0 + c·n^e.
    Scaled { t0: u64, c: u64, e: u32 },
}

impl Schedule {
    pub fn t(&self, n: u32) -> Result<u64> {
        let overflow = || Error::Config(format!("t_{n} exceeds the representable horizon"));
        match *self {
            Schedule::Paper { d } => {
                let mut sum: u64 = 0;
                for k in 0..n {
                    let x = (k as f64).powf(d as f64 - 0.25);
                    if x >= 63.0 {
                        return Err(overflow());
                    }
                    let term = if x.fract() == 0.0 { 1u64 << x as u32 } else { x.exp2().ceil() as u64 };
                    sum = sum.checked_add(term).ok_or_else(overflow)?;
                }
                Ok(sum)
            }
            Schedule::Scaled { t0, c, e } => (n as u64)
                .checked_pow(e)
                .and_then(|p| p.checked_mul(c))
                .and_then(|p| p.checked_add(t0))
                .ok_or_else(overflow),
        }
    }

    /// The generation running at time `t`: the largest n with t_n <= t.
    pub fn generation_at(&self, t: u64) -> Result<u32> {
        let mut n = 0;
        while self.t(n + 1)? <= t {
            n += 1;
        }
        Ok(n)
    }

    /// Largest territory radius around a heart at time `t`.
    pub fn territory_radius(t: u64) -> u64 {
        1 + isqrt(t)
    }

    /// Steps a generation needs at time `t_n`: the body cycle (2n² + 1) and
    /// the copy process over a territory of the largest possible radius at
    /// the next generation start.
    pub fn work_bound(n: u32, k: u64, next_start: u64) -> u64 {
        let body = 2 * (n as u64).pow(2) + 1;
        body.max(copy_completion_bound(k, Self::territory_radius(next_start)))
    }

    /// Checks t_{n+1} - t_n > work_bound(n) for every generation starting
    /// before `horizon`.
    pub fn validate(&self, horizon: u64, k: u64) -> Result<()> {
        let mut n = 0;
        loop {
            let a = self.t(n)?;
            let b = self.t(n + 1)?;
            if b <= a {
                return Err(Error::Config(format!("schedule not increasing at n = {n}")));
            }
            if a > horizon {
                return Ok(());
            }
            if n >= 1 {
                let need = Self::work_bound(n, k, b);
                if b - a <= need {
                    return Err(Error::Config(format!(
                        "generation {n} lasts {} steps, needs more than {need} (body cycle and copy completion)",
                        b - a
                    )));
                }
            }
            n += 1;
        }
    }

    /// Checks that generation `n` starts no earlier than `at`.
    pub fn validate_settled(&self, n: u32, at: u64, horizon: u64) -> Result<()> {
        let t = self.t(n)?;
        if t < at {
            return Err(Error::Config(format!("generation {n} starts at {t}, before the torus is fully colonised at {at}")));
        }
        // the settled generation must also end, so its copy can be measured
        let end = self.t(n + 1)?;
        if end > horizon {
            return Err(Error::Config(format!("generation {} starts at {end}, beyond the horizon {horizon}", n + 1)));
        }
        Ok(())
    }

    /// Smallest `c` making the scaled schedule valid up to `horizon`, and, if
    /// `settle = (n, at)`, starting generation `n` no earlier than `at`.
    pub fn fit_scaled(t0: u64, e: u32, k: u64, horizon: u64, settle: Option<(u32, u64)>) -> Result<Schedule> {
        let mut c = match settle {
            // t0 + c n^e >= at
            Some((n, at)) if n > 0 => at.saturating_sub(t0).div_ceil((n as u64).pow(e)).max(1),
            _ => 1,
        };
        loop {
            let s = Schedule::Scaled { t0, c, e };
            if s.validate(horizon, k).is_ok() && settle.map_or(true, |(n, at)| s.validate_settled(n, at, horizon).is_ok()) {
                return Ok(s);
            }
            if settle.is_some_and(|(n, _)| s.t(n + 1).map_or(true, |t| t > horizon)) {
                return Err(Error::Config("no scaled schedule settles within the horizon".into()));
            }
            c = c.checked_add(1).filter(|&c| c < 1 << 40).ok_or_else(|| Error::Config("no valid scaled schedule".into()))?;
        }
    }

    /// Fits both the exponent (1 to 3) and `c`: the fitted schedule with the
    /// most generation starts within `horizon` wins, the smaller exponent on
    /// ties.
    pub fn fit_scaled_exponent(t0: u64, k: u64, horizon: u64, settle: Option<(u32, u64)>) -> Result<Schedule> {
        let mut best: Option<(u32, Schedule)> = None;
        for e in 1..=3 {
            let Ok(s) = Self::fit_scaled(t0, e, k, horizon, settle) else { continue };
            let count = s.generation_at(horizon)?;
            if best.map_or(true, |(b, _)| count > b) {
                best = Some((count, s));
            }
        }
        best.map(|b| b.1).ok_or_else(|| Error::Config("no valid scaled schedule".into()))
    }
}

/// Steps the copy process needs to cover every grid element within
/// distance `radius` of the heart: `2k + 1` per element crossed.
pub fn copy_completion_bound(k: u64, radius: u64) -> u64 {
    (radius / k + 2) * copy_period(k)
}

/// Time from one element's launch to its heirs' launch.
pub fn copy_period(k: u64) -> u64 {
    2 * k + 1
}

/// Heart-cell sublayers of the computing layer: the generation counter and
/// the time counter. The next start time is computed from the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Brain {
    pub generation: u32,
    pub time: RedundantCounter,
    /// The generation counter was incremented this step.
    pub fired: bool,
}

impl Brain {
    /// The brain of a heart born at time 1.
    pub fn newborn() -> Self {
        Self { generation: 0, time: RedundantCounter::from_value(1), fired: false }
    }

    pub fn step(&self, schedule: &Schedule) -> Brain {
        let time = self.time.tick(Delta::Inc);
        let due = schedule.t(self.generation + 1).map(|t| time.value() as u64 == t).unwrap_or(false);
        Brain { generation: self.generation + due as u32, time, fired: due }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Computing {
    pub brain: Option<Brain>,
}

impl Computing {
    pub fn is_blank(&self) -> bool {
        self.brain.is_none()
    }
}

/// Source of the pattern sequence (w_n).
#[derive(Clone, Debug, PartialEq)]
pub enum PatternProgram {
    Constant(Pattern),
    /// w_n = a for even n, b for odd n.
    Alternating(Pattern, Pattern),
    /// Square pattern of side `side` over {0, 1}: row i shows bit i of n.
    CounterStripes { d: usize, side: usize },
    /// A machine run by its cellular embedding on input n; the output is the
    /// tape on [0, side)^d, symbols mapped to letters by `letters`.
    Machine { tm: tm::TuringMachine, side: usize, letters: Vec<(u8, u8)>, max_steps: u64 },
}

impl PatternProgram {
    pub fn pattern(&self, n: u32) -> Result<Pattern> {
        match self {
            PatternProgram::Constant(w) => Ok(w.clone()),
            PatternProgram::Alternating(a, b) => Ok(if n % 2 == 0 { a.clone() } else { b.clone() }),
            PatternProgram::CounterStripes { d, side } => {
                let t = crate::lattice::Torus::new(*d, *side as i32)?;
                let cells = t.coords().map(|v| (n >> (v.0[0] as u32 % 32) & 1) as u8).collect();
                Pattern::new(*d, *side, cells)
            }
            PatternProgram::Machine { tm, side, letters, max_steps } => tm::embedded_output(tm, n as u64, *side, letters, *max_steps),
        }
    }

    pub fn max_side(&self) -> usize {
        match self {
            PatternProgram::Constant(w) => w.side,
            PatternProgram::Alternating(a, b) => a.side.max(b.side),
            PatternProgram::CounterStripes { side, .. } | PatternProgram::Machine { side, .. } => *side,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_schedule_in_the_plane() {
        let s = Schedule::Paper { d: 2 };
        assert_eq!(s.t(0).unwrap(), 0);
        assert_eq!(s.t(1).unwrap(), 1);
        assert_eq!(s.t(2).unwrap(), 3);
        assert_eq!(s.t(3).unwrap(), 14);
        // 3^1.75 = 6.839..., 2^that = 114.5...
        assert_eq!(s.t(4).unwrap(), 14 + 115);
        assert!(s.t(40).is_err());
    }

    #[test]
    fn scaled_schedule() {
        let s = Schedule::Scaled { t0: 0, c: 500, e: 3 };
        assert_eq!(s.t(1).unwrap() - s.t(0).unwrap(), 500);
        assert_eq!(s.generation_at(499).unwrap(), 0);
        assert_eq!(s.generation_at(500).unwrap(), 1);
        assert_eq!(s.generation_at(4000).unwrap(), 2);
    }

    #[test]
    fn fitted_schedule_validates() {
        let s = Schedule::fit_scaled(100, 2, 4, 20_000, None).unwrap();
        s.validate(20_000, 4).unwrap();
        if let Schedule::Scaled { c, .. } = s {
            assert!(Schedule::Scaled { t0: 100, c: c - 1, e: 2 }.validate(20_000, 4).is_err());
        }
    }

    #[test]
    fn fit_respects_settling() {
        let s = Schedule::fit_scaled(0, 1, 4, 15_600, Some((4, 10_404))).unwrap();
        assert_eq!(s, Schedule::Scaled { t0: 0, c: 2601, e: 1 });
        let s = Schedule::fit_scaled_exponent(0, 4, 15_600, Some((4, 10_404))).unwrap();
        assert_eq!(s, Schedule::Scaled { t0: 0, c: 2601, e: 1 });
        assert!(s.validate_settled(4, 10_405, 15_600).is_err());
        assert!(s.validate_settled(4, 10_404, 13_004).is_err());
        // t_5 = 5 * 3481 lies beyond the horizon
        assert!(Schedule::fit_scaled_exponent(0, 4, 15_600, Some((4, 13_924))).is_err());
    }

    #[test]
    fn brain_counts_generations() {
        let s = Schedule::Scaled { t0: 0, c: 7, e: 1 };
        let mut b = Brain::newborn();
        let mut fired = vec![];
        for t in 2..=30u64 {
            b = b.step(&s);
            assert_eq!(b.time.value() as u64, t);
            assert_eq!(b.generation, s.generation_at(t).unwrap());
            if b.fired {
                fired.push(t);
            }
        }
        assert_eq!(fired, vec![7, 14, 21, 28]);
    }
}
