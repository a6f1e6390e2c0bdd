//! Experiment runner: configuration, the generation loop with the pattern
//! oracle, sampling of empirical measures, reports, and brute-force oracles
//! used to cross-check the automaton.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::automaton::{launch_copies, launch_delay, live_hearts, Automaton};
use crate::counters::isqrt;
use crate::error::{Error, Result};
use crate::lattice::{ball, cube, sample_bernoulli, Cell, Engine, Grid, Symbol, Torus, Vector};
use crate::measures::{aux_densities, empirical, track, write_csv, CylinderTable, Pattern, TrackRow};
use crate::membranes::viable_seeds;
use crate::metabolism::{heirs, tm::TuringMachine, CopyRecord, PatternProgram, Schedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// `paper` or `scaled`.
    pub kind: String,
    #[serde(default)]
    pub t0: u64,
    /// Omitted: the smallest valid value is fitted.
    pub c: Option<u64>,
    /// Omitted: 2 when `c` is given, fitted otherwise.
    pub e: Option<u32>,
    /// Generation whose start must find every ensemble member's torus fully
    /// colonised.
    pub settled_by: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    /// `constant`, `alternating`, `counter-stripes` or `machine`.
    pub kind: String,
    /// Patterns as flat strings of side^d letters in index order.
    #[serde(default)]
    pub patterns: Vec<String>,
    #[serde(default)]
    pub side: usize,
    /// Machine description (text format of `tm`) for `machine`.
    pub machine: Option<String>,
    /// For `machine`: tape symbol names read as each alphabet letter.
    #[serde(default)]
    pub letters: Vec<String>,
    #[serde(default = "default_machine_steps")]
    pub max_steps: u64,
}

fn default_machine_steps() -> u64 {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub side: i32,
    /// Letters of the pattern alphabet B, e.g. "ab".
    pub alphabet: String,
    /// Masses of the Bernoulli measure by symbol name (`blank`, `seed`,
    /// `seed_marked`, `marked` or a letter).
    pub lambda: BTreeMap<String, f64>,
    pub schedule: ScheduleSpec,
    pub pattern: PatternSpec,
    pub rng_seed: u64,
    pub horizon: u64,
    #[serde(default = "default_samples")]
    pub samples_per_generation: u32,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_ensemble")]
    pub ensemble: u32,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_samples() -> u32 {
    4
}
fn default_truncation() -> usize {
    2
}
fn default_ensemble() -> u32 {
    1
}

/// A configuration after validation, with everything resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub torus: Torus,
    pub lambda: Vec<(Symbol, f64)>,
    pub schedule: Schedule,
    pub program: PatternProgram,
    /// Time at which the slowest ensemble member is fully colonised, when
    /// the schedule asks for it.
    pub cover_time: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn letters(&self) -> Vec<char> {
        self.alphabet.chars().collect()
    }

    fn pattern(&self, s: &str) -> Result<Pattern> {
        let letters = self.letters();
        let cells = s
            .chars()
            .map(|c| letters.iter().position(|&a| a == c).map(|i| i as u8).ok_or_else(|| Error::Alphabet(format!("letter {c:?}"))))
            .collect::<Result<Vec<u8>>>()?;
        let side = (1..=cells.len()).find(|k| k.pow(self.d as u32) >= cells.len()).unwrap_or(0);
        Pattern::new(self.d, side, cells)
    }

    fn program(&self) -> Result<PatternProgram> {
        let p = &self.pattern;
        let pats = p.patterns.iter().map(|s| self.pattern(s)).collect::<Result<Vec<_>>>()?;
        Ok(match p.kind.as_str() {
            "constant" if pats.len() == 1 => PatternProgram::Constant(pats[0].clone()),
            "alternating" if pats.len() == 2 => PatternProgram::Alternating(pats[0].clone(), pats[1].clone()),
            "counter-stripes" if p.side > 0 => PatternProgram::CounterStripes { d: self.d, side: p.side },
            "machine" => {
                let tm = TuringMachine::parse(p.machine.as_deref().ok_or_else(|| Error::Config("machine text missing".into()))?)?;
                if tm.dim != self.d {
                    return Err(Error::Config(format!("machine dimension {} differs from d = {}", tm.dim, self.d)));
                }
                let letters = p.letters.iter().enumerate().map(|(i, s)| Ok((tm.symbol(s)?, i as u8))).collect::<Result<Vec<_>>>()?;
                PatternProgram::Machine { tm, side: p.side, letters, max_steps: p.max_steps }
            }
            k => return Err(Error::Config(format!("pattern kind {k:?} with {} patterns", pats.len()))),
        })
    }

    /// Checks every bound the run relies on.
    pub fn validate(&self) -> Result<Experiment> {
        let torus = Torus::new(self.d, self.side)?;
        let letters = self.letters();
        if letters.is_empty() || letters.len() > 250 {
            return Err(Error::Config("alphabet must have 1 to 250 letters".into()));
        }
        let lambda = self
            .lambda
            .iter()
            .map(|(k, v)| Ok((Symbol::parse(k, &letters)?, *v)))
            .collect::<Result<Vec<_>>>()?;
        sample_bernoulli(Torus::new(self.d, 1)?, &lambda, 0)?;
        let seed_mass: f64 = lambda.iter().filter(|(s, _)| matches!(s, Symbol::Seed | Symbol::SeedMarked)).map(|x| x.1).sum();
        if seed_mass <= 0.0 {
            return Err(Error::Config("lambda(seed) must be positive".into()));
        }
        let program = self.program()?;
        let k = program.max_side();
        let needed = 2.0 * (1.0 + (self.horizon as f64).sqrt()) + k as f64;
        if (self.side as f64) <= needed {
            return Err(Error::Config(format!("torus side {} must exceed 2(1 + sqrt(horizon)) + pattern side = {needed:.1}", self.side)));
        }
        let s = &self.schedule;
        let cover_time = match s.settled_by {
            Some(_) => Some(
                (0..self.ensemble)
                    .map(|m| cover_time(&sample_bernoulli(torus, &lambda, self.rng_seed + m as u64)?))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .max()
                    .unwrap_or(0),
            ),
            None => None,
        };
        let settle = s.settled_by.zip(cover_time);
        let schedule = match (s.kind.as_str(), s.c, s.e) {
            ("paper", ..) => Schedule::Paper { d: self.d as u32 },
            ("scaled", Some(c), e) => Schedule::Scaled { t0: s.t0, c, e: e.unwrap_or(2) },
            ("scaled", None, Some(e)) => Schedule::fit_scaled(s.t0, e, k as u64, self.horizon, settle)?,
            ("scaled", None, None) => Schedule::fit_scaled_exponent(s.t0, k as u64, self.horizon, settle)?,
            (other, ..) => return Err(Error::Config(format!("schedule kind {other:?}"))),
        };
        if s.kind == "scaled" {
            schedule.validate(self.horizon, k as u64)?;
        }
        if let Some((n, at)) = settle {
            schedule.validate_settled(n, at, self.horizon)?;
        }
        if self.truncation + 1 > self.side as usize {
            return Err(Error::Config("truncation exceeds the torus".into()));
        }
        Ok(Experiment { config: self.clone(), torus, lambda, schedule, program, cover_time })
    }
}

/// Heart census at a generation start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub member: u32,
    pub generation: u32,
    pub t: u64,
    pub hearts: usize,
    pub launched: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Copy records still present when the next generation started.
    pub copy_overrun: Vec<(u32, u32)>,
    /// Body records still present when the next generation started.
    pub body_overrun: Vec<(u32, u32)>,
}

impl Flags {
    pub fn is_empty(&self) -> bool {
        self.copy_overrun.is_empty() && self.body_overrun.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub schedule: Schedule,
    /// Ensemble rows (tables merged over members).
    pub rows: Vec<TrackRow>,
    /// Rows of each member on its own.
    pub member_rows: Vec<Vec<TrackRow>>,
    pub census: Vec<Census>,
    pub flags: Flags,
    pub hash: String,
}

/// Sample times: every t_n up to the horizon and `per` evenly spaced times
/// strictly inside each generation.
pub fn sample_times(schedule: &Schedule, horizon: u64, per: u32) -> Result<Vec<u64>> {
    let mut out = vec![0];
    let mut n = 1;
    loop {
        let a = schedule.t(n)?;
        if a > horizon {
            break;
        }
        out.push(a);
        let b = schedule.t(n + 1)?;
        for j in 1..=per as u64 {
            let s = a + (b - a) * j / (per as u64 + 1);
            if s > a && s < b && s <= horizon {
                out.push(s);
            }
        }
        n += 1;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

type Sample = (u64, CylinderTable, [f64; 7]);

/// Runs one member of the ensemble and returns its samples.
fn run_member(x: &Experiment, member: u32, times: &[u64], census: &mut Vec<Census>, flags: &mut Flags) -> Result<Vec<Sample>> {
    let c = &x.config;
    let letters = c.letters().len() as u8;
    let grid = sample_bernoulli(x.torus, &x.lambda, c.rng_seed + member as u64)?;
    let mut engine = Engine::new(grid, Automaton::new(x.schedule));
    let mut samples = Vec::new();
    let mut next_sample = 0;
    let mut gen_starts = HashMap::new();
    let mut n = 1;
    while x.schedule.t(n)? <= c.horizon {
        gen_starts.insert(x.schedule.t(n)?, n);
        n += 1;
    }
    let launches: HashMap<u64, u32> = gen_starts.iter().map(|(t, n)| (t + launch_delay(x.program.max_side()), *n)).collect();
    loop {
        let t = engine.t();
        if let Some(&g) = gen_starts.get(&t) {
            if g > 1 {
                // the new generation's body seeds are already planted at t_g
                let stale_copy = |r: &CopyRecord| match *r {
                    CopyRecord::Probe { gen, .. } | CopyRecord::Verdict { gen, .. } => gen < g,
                };
                if engine.grid.cells.iter().any(|c| c.copying.iter().any(stale_copy)) {
                    flags.copy_overrun.push((member, g - 1));
                }
                if engine.grid.cells.iter().any(|c| c.evolution.iter().any(|b| b.n < g)) {
                    flags.body_overrun.push((member, g - 1));
                }
            }
            census.push(Census { member, generation: g, t, hearts: live_hearts(&engine.grid).len(), launched: 0 });
        }
        if let Some(&g) = launches.get(&t) {
            let w = x.program.pattern(g + 1)?;
            let launched = launch_copies(&mut engine, g, &w);
            if let Some(cs) = census.iter_mut().rev().find(|cs| cs.member == member && cs.generation == g) {
                cs.launched = launched;
            }
        }
        if next_sample < times.len() && times[next_sample] == t {
            let table = empirical(&engine.grid, letters, c.truncation)?;
            let (_, per_layer) = aux_densities(&engine.grid);
            samples.push((t, table, per_layer));
            if c.snapshots {
                if let Some(dir) = &c.output {
                    let p = dir.join(format!("snapshot_m{member}_t{t}.bin"));
                    crate::lattice::snapshot::write_binary(&engine.grid, std::fs::File::create(p)?)?;
                }
            }
            next_sample += 1;
        }
        if t >= c.horizon {
            break;
        }
        engine.step();
    }
    Ok(samples)
}

/// Runs the experiment: every ensemble member with seed `rng_seed + r`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let x = config.validate()?;
    let c = &x.config;
    let times = sample_times(&x.schedule, c.horizon, c.samples_per_generation)?;
    let mut census = Vec::new();
    let mut flags = Flags::default();
    let mut merged: Vec<Sample> = Vec::new();
    let mut member_rows = Vec::new();
    let w = |n: u32| x.program.pattern(n).expect("pattern program failed");
    if let Some(dir) = &c.output {
        std::fs::create_dir_all(dir)?;
    }
    for r in 0..c.ensemble {
        let samples = run_member(&x, r, &times, &mut census, &mut flags)?;
        member_rows.push(track(&samples, &x.schedule, w, c.truncation)?);
        if merged.is_empty() {
            merged = samples;
        } else {
            for (m, s) in merged.iter_mut().zip(samples) {
                m.1.merge(&s.1)?;
                for i in 0..7 {
                    m.2[i] += s.2[i];
                }
            }
        }
    }
    for m in merged.iter_mut() {
        m.2.iter_mut().for_each(|v| *v /= c.ensemble as f64);
    }
    let rows = track(&merged, &x.schedule, w, c.truncation)?;
    let mut report = RunReport { config: c.clone(), schedule: x.schedule, rows, member_rows, census, flags, hash: String::new() };
    report.hash = report_hash(&report);
    if let Some(dir) = &c.output {
        write_csv(std::fs::File::create(dir.join("measures.csv"))?, &report.rows)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?)?;
    }
    Ok(report)
}

/// SHA-256 of the report without its hash field.
pub fn report_hash(r: &RunReport) -> String {
    let mut copy = r.clone();
    copy.hash.clear();
    let bytes = serde_json::to_vec(&copy).expect("report serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First time at which the colonised space is the whole torus: the square of
/// (covering radius of the viable seeds - 1).
pub fn cover_time(initial: &Grid<Cell>) -> Result<u64> {
    let torus = initial.torus;
    let mut dist = vec![u32::MAX; torus.volume()];
    let mut queue = VecDeque::new();
    for s in viable_seeds(initial) {
        dist[torus.index(s)] = 0;
        queue.push_back(s);
    }
    if queue.is_empty() {
        return Err(Error::Config("no viable seed: the torus is never colonised".into()));
    }
    let mut r = 0;
    while let Some(x) = queue.pop_front() {
        let dx = dist[torus.index(x)];
        r = r.max(dx);
        for &u in crate::lattice::units(torus.d) {
            let y = torus.wrap(x + u);
            let i = torus.index(y);
            if dist[i] == u32::MAX {
                dist[i] = dx + 1;
                queue.push_back(y);
            }
        }
    }
    Ok((r.saturating_sub(1) as u64).pow(2))
}

/// Cells at distance at most 1 + √t from a viable seed of the initial
/// configuration, by brute force.
pub fn oracle_colonised(initial: &Grid<Cell>, t: u64) -> Vec<Vector> {
    let torus = initial.torus;
    let r = 1 + isqrt(t) as i32;
    let mut set = HashSet::new();
    for s in viable_seeds(initial) {
        for o in ball(torus.d, r) {
            set.insert(torus.wrap(s + o));
        }
    }
    let mut v: Vec<Vector> = set.into_iter().collect();
    v.sort_by_key(|x| torus.index(*x));
    v
}

/// Letters the copy process writes for the heart at `heart`: the tiling of
/// `w` anchored at the heart, on every grid element reached through the
/// heir tree whose cells all lie in `territory`.
pub fn oracle_tiling(torus: Torus, w: &Pattern, heart: Vector, territory: &[Vector]) -> HashMap<Vector, u8> {
    let d = torus.d;
    let k = w.side as i32;
    let inside: HashSet<Vector> = territory.iter().map(|v| torus.wrap(*v)).collect();
    let block_cells = |i: Vector| cube(d, k).into_iter().map(move |o| i.scale(k) + o);
    let fits = |i: Vector| block_cells(i).all(|o| inside.contains(&torus.wrap(heart + o)));
    let mut out = HashMap::new();
    if !fits(Vector::ZERO) {
        return out;
    }
    let mut queue: VecDeque<(Vector, Vector)> = VecDeque::new();
    let visit = |i: Vector, out: &mut HashMap<Vector, u8>| {
        for o in block_cells(i) {
            out.insert(torus.wrap(heart + o), w.at(o));
        }
    };
    visit(Vector::ZERO, &mut out);
    for &u in crate::lattice::units(d) {
        queue.push_back((Vector::ZERO, u));
    }
    let limit = torus.side / k + 2;
    while let Some((i, u)) = queue.pop_front() {
        let j = i + u;
        if j.norm_inf() > limit || !fits(j) {
            continue;
        }
        visit(j, &mut out);
        for u2 in heirs(u, d) {
            queue.push_back((j, u2));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
d = 2
side = 40
alphabet = "ab"
rng_seed = 3
horizon = 80
samples_per_generation = 2
[lambda]
seed = 0.01
a = 0.5
b = 0.49
[schedule]
kind = "scaled"
t0 = 0
c = 40
e = 1
[pattern]
kind = "alternating"
patterns = ["abba", "aaab"]
"#,
        )
        .unwrap()
    }

    #[test]
    fn validator_names_the_violated_bound() {
        let mut c = small_config();
        c.horizon = 10_000;
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("torus side"), "{e}");
        let mut c = small_config();
        c.lambda.insert("seed".into(), 0.0);
        c.lambda.insert("a".into(), 0.51);
        assert!(c.validate().unwrap_err().to_string().contains("seed"));
        let mut c = small_config();
        c.schedule.c = Some(2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_horizon_has_one_row() {
        let mut c = small_config();
        c.horizon = 0;
        let r = run(&c).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].t, 0);
    }

    #[test]
    fn runs_are_reproducible() {
        let c = small_config();
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a, b);
    }

    #[test]
    fn tiling_oracle_small_cases() {
        let torus = Torus::new(2, 30).unwrap();
        let w = Pattern::new(2, 2, vec![0, 1, 1, 0]).unwrap();
        let heart = Vector::new(&[10, 10]);
        let sigma0: Vec<Vector> = cube(2, 2).into_iter().map(|o| heart + o).collect();
        let t = oracle_tiling(torus, &w, heart, &sigma0);
        assert_eq!(t.len(), 4);
        assert_eq!(t[&Vector::new(&[10, 11])], 1);
        assert!(oracle_tiling(torus, &w, heart, &[heart]).is_empty());
    }
}
