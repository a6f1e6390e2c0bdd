//! Growth layer: seeds, membranes, breathing, meetings and death.
//!
//! Membranes are surface-only: a membrane cell carries the set of neighbour
//! directions that lie outside its colony, an orientation vector summarising
//! that set, and the respiration counters. On a breath every membrane cell is
//! replaced by the cells it claims outward, so a cube of radius r becomes the
//! cube of radius r + 1. A claimed cell keeps as outside only the neighbours
//! that neither belong to its own family nor are claimed with it, which merges
//! colonies with equal counters and turns enclosed cells into interior.
//! Interiors hold no growth symbol at all.
//!
//! When two membranes touch they compare ages with a bit-serial protocol; the
//! younger one survives, equal ages merge, and the older one is erased by a
//! death signal that runs along it at speed one.

use serde::{Deserialize, Serialize};

use crate::counters::{Phase, RespirationState};
use crate::lattice::{units, Birth, Cell, Grid, Growth, HeartBits, Neighbourhood, Torus, Vector, MAX_DIM};

/// Seeds closer than this (sup norm) are in competition.
pub const VIABILITY_RADIUS: i32 = 4;

/// A membrane that breathes more often than this during one comparison is
/// malformed and dies.
pub const MAX_BREATHS_IN_COMPARISON: u8 = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membrane {
    /// Summary of `exterior`: the components shared by all outside directions.
    pub orientation: Vector,
    /// Outside neighbour directions, one bit per direction (see `dir_bit`).
    pub exterior: u32,
    pub resp: RespirationState,
    /// Provenance only (descends from a viable seed); never read by the rule.
    pub initialised: bool,
    pub cmp: Option<Comparison>,
    pub breaths_in_cmp: u8,
}

impl Membrane {
    /// A membrane of a cube face or corner: outside is every direction
    /// strictly outward from `orientation`.
    pub fn new(d: usize, orientation: Vector, resp: RespirationState, initialised: bool) -> Self {
        Self::with_exterior(d, outward_mask(orientation, d), resp, initialised)
    }

    pub fn with_exterior(d: usize, exterior: u32, resp: RespirationState, initialised: bool) -> Self {
        Self { orientation: hull(exterior, d), exterior, resp, initialised, cmp: None, breaths_in_cmp: 0 }
    }
}

/// Bit of a direction in {-1,0,1}^3 (base-3 code).
#[inline]
pub fn dir_bit(v: Vector) -> u32 {
    let mut i = 0;
    for k in (0..MAX_DIM).rev() {
        i = i * 3 + (v.0[k] + 1) as u32;
    }
    1 << i
}

/// Directions strictly outward from `o`.
pub fn outward_mask(o: Vector, d: usize) -> u32 {
    units(d).iter().filter(|v| o.admits_outward(v)).fold(0, |m, v| m | dir_bit(*v))
}

/// Components on which every direction of `mask` agrees; zero for an empty mask.
pub fn hull(mask: u32, d: usize) -> Vector {
    let mut o = Vector::ZERO;
    if mask == 0 {
        return o;
    }
    for i in 0..d {
        let mut signs = units(d).iter().filter(|v| mask & dir_bit(**v) != 0).map(|v| v.0[i]);
        let first = signs.next().unwrap();
        if signs.all(|x| x == first) {
            o.0[i] = first;
        }
    }
    o
}

/// Comparison record held by a cell taking part in a meeting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    /// Offset of the partner cell (a signed basis vector).
    pub partner: Vector,
    /// Age values snapshotted when the meeting started.
    pub mine: u64,
    pub theirs: u64,
    pub elapsed: u32,
}

/// A cell claimed in the same step by two membranes with different counters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shared {
    pub a: Membrane,
    pub b: Membrane,
    pub cmp: Comparison,
    /// Set one step before the cell resolves, so that the loser's neighbours
    /// can start the death signal in the same step.
    pub outcome: Option<Outcome>,
}

/// A cell carrying the death signal. Keeps the counters of its membrane so
/// that the signal only spreads within that membrane.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadMark {
    pub resp: RespirationState,
    pub orientation: Vector,
}

/// Result of a comparison from the point of view of `mine`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Lose,
    Tie,
}

impl Outcome {
    pub fn flip(self) -> Self {
        match self {
            Outcome::Win => Outcome::Lose,
            Outcome::Lose => Outcome::Win,
            Outcome::Tie => Outcome::Tie,
        }
    }
}

pub fn bit_len(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

/// Bits of a `len`-bit word that have reached the meeting point after
/// `elapsed` steps: the most significant one needs `2 len` steps (one pass
/// out to the far end of the word and back), the others follow one per step.
fn arrived(len: u32, elapsed: u32) -> u32 {
    if elapsed < 2 * len {
        0
    } else {
        (elapsed - 2 * len + 1).min(len)
    }
}

/// The bit-serial age comparison. Returns the outcome for `mine` once it can
/// be decided from the bits delivered so far. The younger age wins.
pub fn protocol_decide(mine: u64, theirs: u64, elapsed: u32) -> Option<Outcome> {
    let (la, lb) = (bit_len(mine), bit_len(theirs));
    let (na, nb) = (arrived(la, elapsed), arrived(lb, elapsed));
    match (na, nb) {
        (0, 0) => None,
        // a word that is already complete while the other has not started is shorter
        (_, 0) => Some(Outcome::Win),
        (0, _) => Some(Outcome::Lose),
        _ => {
            debug_assert_eq!(la, lb);
            let n = na.min(nb);
            for j in 0..n {
                let ba = mine >> (la - 1 - j) & 1;
                let bb = theirs >> (lb - 1 - j) & 1;
                if ba != bb {
                    return Some(if ba < bb { Outcome::Win } else { Outcome::Lose });
                }
            }
            (n == la).then_some(Outcome::Tie)
        }
    }
}

/// Steps the protocol needs; at most `3 * max(bit_len)`.
pub fn protocol_duration(mine: u64, theirs: u64) -> u32 {
    (1..).find(|&e| protocol_decide(mine, theirs, e).is_some()).unwrap()
}

/// Is the seed at offset `s` viable: no other seed within distance 4 is
/// lexicographically smaller.
pub fn is_viable(n: &Neighbourhood<'_, Cell>, s: Vector, d: usize) -> bool {
    if n.at(s).birth != Birth::Seed {
        return false;
    }
    for off in crate::lattice::ball(d, VIABILITY_RADIUS) {
        if off.is_lex_negative() && n.at(s + off).birth == Birth::Seed {
            return false;
        }
    }
    true
}

/// Bits harvested by a viable seed from its own cell and its neighbours.
pub fn harvest_bits(n: &Neighbourhood<'_, Cell>, s: Vector, d: usize) -> HeartBits {
    let marked = |c: &Cell| matches!(c.growth, Growth::Marked);
    let mut side = 0u32;
    for (i, &u) in units(d).iter().enumerate() {
        if marked(n.at(s + u)) {
            side |= 1 << i;
        }
    }
    HeartBits { central: marked(n.at(s)), side }
}

/// What the first step does to a cell near a viable seed.
pub enum BirthFate {
    Heart(HeartBits),
    Membrane(Vector),
    Interior,
}

/// Only meaningful while seeds exist (time 0).
pub fn birth_fate(n: &Neighbourhood<'_, Cell>) -> Option<BirthFate> {
    let d = n.dim();
    for off in crate::lattice::ball(d, 2) {
        if n.at(off).birth == Birth::Seed && is_viable(n, off, d) {
            let rel = -off;
            return Some(match rel.norm_inf() {
                0 => BirthFate::Heart(harvest_bits(n, off, d)),
                1 => BirthFate::Interior,
                _ => BirthFate::Membrane(rel.extremal_sign()),
            });
        }
    }
    None
}

/// Viable seeds of a configuration (brute force, for oracles).
pub fn viable_seeds(grid: &Grid<Cell>) -> Vec<Vector> {
    let d = grid.torus.d;
    let near = crate::lattice::ball(d, VIABILITY_RADIUS);
    grid.torus
        .coords()
        .filter(|&x| grid.get(x).birth == Birth::Seed)
        .filter(|&x| !near.iter().any(|off| off.is_lex_negative() && grid.get(x + *off).birth == Birth::Seed))
        .collect()
}

/// Where a membrane cell goes in one step.
#[derive(Clone, Debug)]
pub struct Fate {
    pub next: Growth,
    /// Set when the cell breathes: claims go to every outside neighbour,
    /// except towards `blocked` (the partner of a running comparison, if any).
    pub claims: Option<Claims>,
}

#[derive(Clone, Debug)]
pub struct Claims {
    pub exterior: u32,
    /// Counters before the breath; they identify the claiming family.
    pub from: RespirationState,
    pub resp: RespirationState,
    pub initialised: bool,
    pub blocked: Vector,
}

impl Claims {
    fn reaches(&self, v: Vector) -> bool {
        if self.exterior & dir_bit(v) == 0 {
            return false;
        }
        if self.blocked.is_zero() {
            return true;
        }
        let j = (0..3).find(|&j| self.blocked.0[j] != 0).unwrap();
        v.0[j] != self.blocked.0[j]
    }
}

fn dead(resp: RespirationState, orientation: Vector) -> Fate {
    Fate { next: Growth::Dead(Box::new(DeadMark { resp, orientation })), claims: None }
}

fn compatible(a: Vector, b: Vector) -> bool {
    (a - b).norm_inf() <= 1
}

/// Fate of the membrane cell at offset `p` of the view.
pub fn membrane_fate(n: &Neighbourhood<'_, Cell>, p: Vector) -> Fate {
    let d = n.dim();
    let m = match &n.at(p).growth {
        Growth::Membrane(m) => m.as_ref(),
        _ => unreachable!("membrane_fate on a non-membrane cell"),
    };
    let (resp, action) = m.resp.respire();
    let mut orientation = m.orientation;
    let mut exterior = m.exterior;

    // death signal, or a decided shared meeting that this membrane lost
    for j in 0..d {
        for s in [-1, 1] {
            match &n.at(p + Vector::basis(j, s)).growth {
                Growth::Dead(dm) if dm.resp == m.resp && compatible(dm.orientation, m.orientation) => {
                    return dead(resp, orientation);
                }
                Growth::Shared(sh) => {
                    let loser = match sh.outcome {
                        Some(Outcome::Win) => Some(&sh.b),
                        Some(Outcome::Lose) => Some(&sh.a),
                        _ => None,
                    };
                    if loser.is_some_and(|l| l.resp == m.resp) {
                        return dead(resp, orientation);
                    }
                }
                _ => {}
            }
        }
    }

    let mut cmp = m.cmp;
    let mut breaths = m.breaths_in_cmp;
    if let Some(c) = cmp.as_mut() {
        c.elapsed += 1;
        let partner_alive = match &n.at(p + c.partner).growth {
            Growth::Membrane(pm) => pm.cmp.is_some_and(|pc| pc.partner == -c.partner),
            _ => false,
        };
        let outcome = if partner_alive {
            protocol_decide(c.mine, c.theirs, c.elapsed)
        } else {
            Some(Outcome::Win)
        };
        match outcome {
            Some(Outcome::Lose) => return dead(resp, orientation),
            Some(Outcome::Win) => {
                cmp = None;
                breaths = 0;
            }
            Some(Outcome::Tie) => {
                // merged: the partner's side is no longer outside
                let j = (0..3).find(|&j| c.partner.0[j] != 0).unwrap();
                for &v in units(d) {
                    if v.0[j] == c.partner.0[j] {
                        exterior &= !dir_bit(v);
                    }
                }
                orientation = hull(exterior, d);
                cmp = None;
                breaths = 0;
                if exterior == 0 {
                    return Fate { next: Growth::Blank, claims: None };
                }
            }
            None => {}
        }
    }

    if action == Phase::Breath {
        match cmp {
            Some(c) => {
                breaths += 1;
                if breaths > MAX_BREATHS_IN_COMPARISON {
                    return dead(resp, orientation);
                }
                let claims = Claims { exterior, from: m.resp, resp, initialised: m.initialised, blocked: c.partner };
                let next = Membrane { orientation, exterior, resp, initialised: m.initialised, cmp, breaths_in_cmp: breaths };
                return Fate { next: Growth::Membrane(Box::new(next)), claims: Some(claims) };
            }
            None => {
                let claims = Claims { exterior, from: m.resp, resp, initialised: m.initialised, blocked: Vector::ZERO };
                return Fate { next: Growth::Blank, claims: Some(claims) };
            }
        }
    }

    if cmp.is_none() {
        'scan: for j in 0..d {
            for s in [-1, 1] {
                let off = Vector::basis(j, s);
                if let Growth::Membrane(q) = &n.at(p + off).growth {
                    // equal counters merge when claiming; only strangers compare
                    if q.resp != m.resp {
                        cmp = Some(Comparison {
                            partner: off,
                            mine: m.resp.age.value() as u64,
                            theirs: q.resp.age.value() as u64,
                            elapsed: 0,
                        });
                        breaths = 0;
                        break 'scan;
                    }
                }
            }
        }
    }

    let next = Membrane { orientation, exterior, resp, initialised: m.initialised, cmp, breaths_in_cmp: breaths };
    Fate { next: Growth::Membrane(Box::new(next)), claims: None }
}

/// New growth layer for the cell at the centre of the view, for t >= 1.
#[derive(Clone, Debug)]
pub struct GrowthUpdate {
    pub growth: Growth,
    /// The cell was taken by a membrane this step: other layers are erased.
    pub claimed: bool,
    /// The death signal passed: every layer is erased.
    pub erased: bool,
    /// The cell entered the closed interior of an initialised membrane.
    pub colonised: bool,
}

impl GrowthUpdate {
    fn keep(growth: Growth) -> Self {
        Self { growth, claimed: false, erased: false, colonised: false }
    }
}

pub fn growth_update(n: &Neighbourhood<'_, Cell>) -> GrowthUpdate {
    let me = n.me();
    match &me.growth {
        Growth::Marked | Growth::Blank => claim_update(n),
        Growth::Dead(_) => {
            let u = claim_update(n);
            if u.claimed {
                u
            } else {
                GrowthUpdate { erased: true, ..GrowthUpdate::keep(Growth::Blank) }
            }
        }
        Growth::Membrane(_) => {
            // a breathing cell becomes interior; membranes never claim
            // cells that currently hold a membrane symbol
            let f = membrane_fate(n, Vector::ZERO);
            let erased = matches!(f.next, Growth::Dead(_));
            GrowthUpdate { erased, ..GrowthUpdate::keep(f.next) }
        }
        Growth::Shared(sh) => GrowthUpdate::keep(shared_update(n, sh)),
    }
}

fn shared_update(n: &Neighbourhood<'_, Cell>, sh: &Shared) -> Growth {
    let tick = |m: &Membrane| Membrane { resp: m.resp.respire().0, ..m.clone() };
    if let Some(out) = sh.outcome {
        return match out {
            Outcome::Win => Growth::Membrane(Box::new(Membrane { cmp: None, ..tick(&sh.a) })),
            Outcome::Lose => Growth::Membrane(Box::new(Membrane { cmp: None, ..tick(&sh.b) })),
            Outcome::Tie => {
                let ext = sh.a.exterior & sh.b.exterior;
                if ext == 0 {
                    Growth::Blank
                } else {
                    let d = n.dim();
                    Growth::Membrane(Box::new(Membrane { orientation: hull(ext, d), exterior: ext, cmp: None, ..tick(&sh.a) }))
                }
            }
        };
    }
    // a death signal reaching either side settles the meeting by default
    let d = n.dim();
    let mut outcome = None;
    for j in 0..d {
        for s in [-1, 1] {
            if let Growth::Dead(dm) = &n.at(Vector::basis(j, s)).growth {
                if dm.resp == sh.a.resp {
                    outcome = Some(Outcome::Lose);
                } else if dm.resp == sh.b.resp {
                    outcome = Some(Outcome::Win);
                }
            }
        }
    }
    let mut cmp = sh.cmp;
    cmp.elapsed += 1;
    if outcome.is_none() {
        outcome = protocol_decide(cmp.mine, cmp.theirs, cmp.elapsed);
    }
    Growth::Shared(Box::new(Shared { a: tick(&sh.a), b: tick(&sh.b), cmp, outcome }))
}

/// Claims the cell at offset `q` receives this step: (family, claims).
fn claims_at(n: &Neighbourhood<'_, Cell>, q: Vector) -> Vec<Claims> {
    let mut out = Vec::new();
    if !matches!(n.at(q).growth, Growth::Blank | Growth::Marked | Growth::Dead(_)) {
        return out;
    }
    for &v in units(n.dim()) {
        let p = q - v;
        match &n.at(p).growth {
            Growth::Membrane(m) if m.resp.breathes_next() => {}
            _ => continue,
        }
        if let Some(c) = membrane_fate(n, p).claims {
            if c.reaches(v) {
                out.push(c);
            }
        }
    }
    out
}

/// Outside directions of a cell claimed by `families` (their counters before
/// the breath): neighbours that are neither members of a family nor claimed by
/// one in the same step.
fn claimed_exterior(n: &Neighbourhood<'_, Cell>, families: &[RespirationState]) -> u32 {
    let mut ext = 0;
    for &v in units(n.dim()) {
        let member = match &n.at(v).growth {
            Growth::Membrane(m) => families.contains(&m.resp),
            _ => false,
        };
        if member || claims_at(n, v).iter().any(|c| families.contains(&c.from)) {
            continue;
        }
        ext |= dir_bit(v);
    }
    ext
}

/// A non-membrane cell collects the claims of breathing neighbours.
fn claim_update(n: &Neighbourhood<'_, Cell>) -> GrowthUpdate {
    let d = n.dim();
    // (counters before, counters after, initialised)
    let mut families: Vec<(RespirationState, RespirationState, bool)> = Vec::new();
    for c in claims_at(n, Vector::ZERO) {
        match families.iter_mut().find(|f| f.0 == c.from) {
            Some(fam) => fam.2 |= c.initialised,
            None => families.push((c.from, c.resp, c.initialised)),
        }
    }
    if families.is_empty() {
        return GrowthUpdate::keep(Growth::Blank);
    }
    let colonised = families.iter().any(|f| f.2);
    // each family sees the other one as outside
    let exts: Vec<u32> = families.iter().map(|f| claimed_exterior(n, &[f.0])).collect();
    let growth = if exts.iter().all(|&e| e == 0) {
        // enclosed: the cell joins the interior straight away
        Growth::Blank
    } else if families.len() == 1 {
        let (_, resp, init) = families[0];
        Growth::Membrane(Box::new(Membrane::with_exterior(d, exts[0], resp, init)))
    } else {
        let (_, ra, ia) = families[0];
        let (_, rb, ib) = families[1];
        let a = Membrane::with_exterior(d, exts[0], ra, ia);
        let b = Membrane::with_exterior(d, exts[1], rb, ib);
        let cmp = Comparison { partner: Vector::ZERO, mine: ra.age.value() as u64, theirs: rb.age.value() as u64, elapsed: 0 };
        Growth::Shared(Box::new(Shared { a, b, cmp, outcome: None }))
    };
    GrowthUpdate { growth, claimed: true, erased: false, colonised }
}

/// Cells carrying the colonisation tag.
pub fn colonised_space(grid: &Grid<Cell>) -> Vec<Vector> {
    grid.torus.coords().filter(|&x| grid.get(x).colonised).collect()
}

/// Membrane cells of a cube of radius `r` around `center`, all carrying `resp`.
pub fn cube_membrane(torus: Torus, center: Vector, r: i32, resp: RespirationState, initialised: bool) -> Vec<(Vector, Cell)> {
    crate::lattice::ball(torus.d, r)
        .into_iter()
        .filter(|v| v.norm_inf() == r)
        .map(|v| {
            let c = Cell {
                growth: Growth::Membrane(Box::new(Membrane::new(torus.d, v.extremal_sign(), resp, initialised))),
                ..Cell::default()
            };
            (center + v, c)
        })
        .collect()
}
