//! The complete local rule: every layer updated together in one synchronous
//! step, plus the host side of the pattern oracle.

use crate::lattice::{Birth, Cell, Engine, Grid, Growth, HeartBits, LocalRule, Neighbourhood, Organism, Vector, RULE_RADIUS};
use crate::measures::Pattern;
use crate::membranes::{birth_fate, growth_update, BirthFate, Membrane};
use crate::counters::RespirationState;
use crate::metabolism::{copy_update, launch, local_ok, Brain, Schedule};
use crate::organisms::{evolution_update, organism_update, BodyCell, HeartVerdict};

/// Radius of the cells that can change a quiescent site from time 1 on.
pub const ACTIVITY_RADIUS: u32 = 2;

#[derive(Clone, Debug)]
pub struct Automaton {
    pub schedule: Schedule,
}

impl Automaton {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule }
    }

    fn birth(&self, n: &Neighbourhood<'_, Cell>) -> Option<Cell> {
        let fate = birth_fate(n)?;
        let base = Cell { colonised: true, ..Cell::default() };
        Some(match fate {
            BirthFate::Heart(bits) => Cell {
                birth: Birth::Heart(bits),
                computing: crate::metabolism::Computing { brain: Some(Brain::newborn()) },
                ..base
            },
            BirthFate::Membrane(o) => {
                Cell { growth: Growth::Membrane(Box::new(Membrane::new(n.dim(), o, RespirationState::initial(), true))), ..base }
            }
            BirthFate::Interior => base,
        })
    }
}

impl LocalRule<Cell> for Automaton {
    fn radius(&self) -> u32 {
        RULE_RADIUS
    }

    fn is_quiescent(&self, c: &Cell) -> bool {
        c.is_static()
    }

    fn activity_radius(&self, t: u64) -> u32 {
        if t == 0 {
            RULE_RADIUS
        } else {
            ACTIVITY_RADIUS
        }
    }

    fn update(&self, n: &Neighbourhood<'_, Cell>) -> Cell {
        if n.time() == 0 {
            if let Some(c) = self.birth(n) {
                return c;
            }
        }
        let me = n.me();
        let g = growth_update(n);
        if g.claimed || g.erased {
            return Cell { growth: g.growth, colonised: me.colonised || g.colonised, ..Cell::default() };
        }

        let mut birth = match me.birth {
            Birth::Seed => Birth::Blank,
            ref b => b.clone(),
        };
        let mut computing = me.computing.clone();
        let mut start = None;
        if let (Birth::Heart(bits), Some(brain)) = (&birth, &me.computing.brain) {
            let next = brain.step(&self.schedule);
            if next.fired {
                start = Some(BodyCell::start(next.generation, *bits));
            }
            computing.brain = Some(next);
        }
        // the building signal fades out before the next generation starts
        let emit = start.map(|b| {
            let g = b.n;
            let lifetime = match (self.schedule.t(g), self.schedule.t(g + 1)) {
                (Ok(a), Ok(b)) => (b - a - 1).min(u32::MAX as u64) as u32,
                _ => u32::MAX,
            };
            (g, lifetime)
        });
        let mut organism = organism_update(n, emit);
        let (evolution, verdict) = evolution_update(n, start);
        match verdict {
            HeartVerdict::Unchanged => {}
            HeartVerdict::Dies => {
                birth = Birth::Blank;
                computing.brain = None;
            }
            HeartVerdict::NewCentral(c) => {
                if let Birth::Heart(bits) = &mut birth {
                    bits.central = c;
                }
            }
        }
        let cu = copy_update(n);
        if cu.write.is_some() && matches!(organism, Organism::Body { .. }) {
            organism = Organism::Blank;
        }
        Cell {
            birth,
            growth: g.growth,
            organism,
            evolution,
            computing,
            copying: cu.records,
            main: cu.write.or(me.main),
            colonised: me.colonised,
        }
    }
}

/// Delay between a generation start and the copy launch from Σ_0, leaving
/// time for the building signals to settle around the heart.
pub fn launch_delay(k: usize) -> u64 {
    k as u64 + 1
}

/// Hearts with their bits and brains.
pub fn live_hearts(grid: &Grid<Cell>) -> Vec<(Vector, HeartBits, u32)> {
    grid.cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match (&c.birth, &c.computing.brain) {
            (Birth::Heart(b), Some(brain)) => Some((grid.torus.coord(i), *b, brain.generation)),
            _ => None,
        })
        .collect()
}

/// Host side of the pattern oracle: writes `w` on Σ_0 of every heart of
/// generation `gen` whose Σ_0 lies in its territory, and places the probes
/// of the initial copy processes. Returns the number of launches.
pub fn launch_copies(engine: &mut Engine<Cell, Automaton>, gen: u32, w: &Pattern) -> usize {
    let d = engine.grid.torus.d;
    let offsets = crate::lattice::cube(d, w.side as i32);
    let mut launched = 0;
    for (x, _, g) in live_hearts(&engine.grid) {
        if g != gen {
            continue;
        }
        if !offsets.iter().all(|o| local_ok(engine.grid.get(x + *o), *o, gen)) {
            continue;
        }
        for (j, o) in offsets.iter().enumerate() {
            let mut c = engine.grid.get(x + *o).clone();
            c.main = Some(w.cells[j]);
            c.copying.extend(launch(w.cells[j], *o, w.side as u16, gen, d));
            engine.set(x + *o, c);
        }
        launched += 1;
    }
    launched
}
