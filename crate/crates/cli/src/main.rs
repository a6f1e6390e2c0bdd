//! Command-line front end: run and validate experiments, query the
//! brute-force oracles and compare cylinder tables.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use limca::harness::{oracle_colonised, oracle_tiling, run, ExperimentConfig};
use limca::lattice::snapshot::{read_binary, read_text};
use limca::lattice::{sample_bernoulli, Cell, Grid, Vector};
use limca::measures::{dm, empirical, periodic_table, read_table, write_csv, write_table, Pattern};
use limca::organisms::territory;

#[derive(Parser)]
#[command(name = "limca", version, about = "Self-organising cellular automaton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its measure rows as CSV.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and print the resolved schedule.
    Validate { config: PathBuf },
    /// Brute-force oracles.
    #[command(subcommand)]
    Oracle(Oracle),
    /// Cylinder table of a snapshot or of a periodic pattern, as JSON.
    Table {
        #[command(flatten)]
        source: Source,
        /// Pattern as a flat string of side^d letters (instead of a grid).
        #[arg(long, conflicts_with_all = ["snapshot", "config"])]
        pattern: Option<String>,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value = "ab")]
        alphabet: String,
        /// Truncation: the table covers cubes of side up to N + 1.
        #[arg(long = "N", short = 'N', default_value_t = 2)]
        n: usize,
    },
    /// Truncated distance between two tables written by `table`.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long = "N", short = 'N', default_value_t = 2)]
        n: usize,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Sites within 1 + √t of a viable seed, one per line.
    Colonised {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        t: u64,
    },
    /// The tiling of a pattern anchored at a heart, over its territory.
    Tiling {
        #[command(flatten)]
        source: Source,
        /// Heart position, comma separated.
        #[arg(long, value_delimiter = ',')]
        heart: Vec<i32>,
        /// Pattern as a flat string of side^d letters.
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value = "ab")]
        alphabet: String,
    },
}

/// A configuration: a snapshot file, or the initial grid of an ensemble
/// member sampled from an experiment config.
#[derive(Args)]
struct Source {
    /// Binary snapshot, or text snapshot when the name ends in `.txt`.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long, conflicts_with = "snapshot")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "config")]
    member: u64,
}

impl Source {
    fn grid(&self) -> Result<Option<Grid<Cell>>> {
        if let Some(p) = &self.snapshot {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let grid = if p.extension().is_some_and(|e| e == "txt") { read_text(BufReader::new(f))? } else { read_binary(BufReader::new(f))? };
            return Ok(Some(grid));
        }
        if let Some(p) = &self.config {
            let x = ExperimentConfig::load(p)?.validate()?;
            return Ok(Some(sample_bernoulli(x.torus, &x.lambda, x.config.rng_seed + self.member)?));
        }
        Ok(None)
    }

    fn require(&self) -> Result<Grid<Cell>> {
        self.grid()?.context("give --snapshot or --config")
    }
}

fn parse_pattern(flat: &str, d: usize, alphabet: &str) -> Result<Pattern> {
    let letters: Vec<char> = alphabet.chars().collect();
    let cells = flat
        .chars()
        .map(|c| letters.iter().position(|l| *l == c).map(|i| i as u8).with_context(|| format!("letter {c:?} not in {alphabet:?}")))
        .collect::<Result<Vec<u8>>>()?;
    let side = (cells.len() as f64).powf(1.0 / d as f64).round() as usize;
    if side.pow(d as u32) != cells.len() {
        bail!("{} letters do not form a cube in dimension {d}", cells.len());
    }
    Ok(Pattern::new(d, side, cells)?)
}

fn load_table(p: &Path) -> Result<limca::measures::CylinderTable> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Ok(read_table(&text)?)
}

fn coords(v: Vector, d: usize) -> String {
    v.0[..d].iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run { config, out: dir } => {
            let mut c = ExperimentConfig::load(&config)?;
            if dir.is_some() {
                c.output = dir;
            }
            let report = run(&c)?;
            write_csv(&mut out, &report.rows)?;
            eprintln!("schedule {:?}", report.schedule);
            for k in &report.census {
                eprintln!("member {} generation {} (t = {}): {} hearts, {} copies", k.member, k.generation, k.t, k.hearts, k.launched);
            }
            if !report.flags.is_empty() {
                eprintln!("flags: {:?}", report.flags);
            }
            eprintln!("report hash {}", report.hash);
        }
        Command::Validate { config } => {
            let x = ExperimentConfig::load(&config)?.validate()?;
            writeln!(out, "torus: d = {}, side = {}", x.torus.d, x.torus.side)?;
            writeln!(out, "schedule: {:?}", x.schedule)?;
            let mut n = 1;
            while let Ok(t) = x.schedule.t(n) {
                if t > x.config.horizon {
                    break;
                }
                writeln!(out, "  t_{n} = {t}")?;
                n += 1;
            }
            if let Some(t) = x.cover_time {
                writeln!(out, "every member fully colonised by t = {t}")?;
            }
            writeln!(out, "ok")?;
        }
        Command::Oracle(Oracle::Colonised { source, t }) => {
            if t == 0 {
                bail!("t must be at least 1");
            }
            let grid = source.require()?;
            for v in oracle_colonised(&grid, t) {
                writeln!(out, "{}", coords(v, grid.torus.d))?;
            }
        }
        Command::Oracle(Oracle::Tiling { source, heart, pattern, alphabet }) => {
            let grid = source.require()?;
            let d = grid.torus.d;
            if heart.len() != d {
                bail!("heart needs {d} coordinates");
            }
            let w = parse_pattern(&pattern, d, &alphabet)?;
            let heart = grid.torus.wrap(Vector::new(&heart));
            let land = territory(&grid, heart);
            let letters: Vec<char> = alphabet.chars().collect();
            let mut tiled: Vec<_> = oracle_tiling(grid.torus, &w, heart, &land).into_iter().collect();
            tiled.sort();
            for (v, l) in tiled {
                writeln!(out, "{} {}", coords(v, d), letters[l as usize])?;
            }
        }
        Command::Table { source, pattern, d, alphabet, n } => {
            let letters = alphabet.chars().count() as u8;
            let table = match (pattern, source.grid()?) {
                (Some(p), _) => periodic_table(&parse_pattern(&p, d, &alphabet)?, letters, n + 1)?,
                (None, Some(grid)) => empirical(&grid, letters, n)?,
                (None, None) => bail!("give --pattern, --snapshot or --config"),
            };
            writeln!(out, "{}", write_table(&table))?;
        }
        Command::Distance { a, b, n } => {
            writeln!(out, "{}", dm(&load_table(&a)?, &load_table(&b)?, n)?)?;
        }
    }
    Ok(())
}
