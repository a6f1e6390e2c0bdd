//! The torus, synchronous update engine and layered cell alphabet.
//!
//! Dimensions 1 to 3 are supported. Coordinates are stored in a fixed
//! three-component vector whose unused components stay zero, which keeps the
//! hot loops free of allocation.

mod cell;
pub mod snapshot;

pub use cell::{sample_bernoulli, Birth, Cell, Growth, HeartBits, Layer, Organism, Symbol};

use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Radius of the construction rule. Most processes need at most 3, but
/// deciding at time 1 whether a membrane cell two steps away from a seed
/// belongs to a *viable* seed means seeing that seed's radius-4 neighbourhood.
pub const RULE_RADIUS: u32 = 6;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Vector(pub [i32; MAX_DIM]);

impl std::fmt::Debug for Vector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

impl Vector {
    pub const ZERO: Vector = Vector([0; MAX_DIM]);

    pub fn new(components: &[i32]) -> Self {
        assert!(components.len() <= MAX_DIM);
        let mut v = [0; MAX_DIM];
        v[..components.len()].copy_from_slice(components);
        Vector(v)
    }

    pub fn basis(i: usize, sign: i32) -> Self {
        let mut v = [0; MAX_DIM];
        v[i] = sign;
        Vector(v)
    }

    #[inline]
    pub fn norm_inf(&self) -> i32 {
        self.0.iter().map(|x| x.abs()).max().unwrap()
    }

    pub fn signum(&self) -> Self {
        Vector(self.0.map(i32::signum))
    }

    pub fn scale(&self, k: i32) -> Self {
        Vector(self.0.map(|x| x * k))
    }

    /// Lexicographically negative: the first non-zero component is negative.
    pub fn is_lex_negative(&self) -> bool {
        self.0.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    /// Outward direction at the boundary of the sup-ball through `self`:
    /// the sign of the components that attain the norm.
    pub fn extremal_sign(&self) -> Self {
        let n = self.norm_inf();
        if n == 0 {
            return Vector::ZERO;
        }
        Vector(self.0.map(|x| if x.abs() == n { x.signum() } else { 0 }))
    }

    /// `v` steps strictly outward from a cell with orientation `self`:
    /// it agrees with every non-zero component.
    #[inline]
    pub fn admits_outward(&self, v: &Vector) -> bool {
        (0..MAX_DIM).all(|i| self.0[i] == 0 || self.0[i] == v.0[i])
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(self, o: Vector) -> Vector {
        Vector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(self, o: Vector) -> Vector {
        Vector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.map(|x| -x))
    }
}

/// Unit(d) = {-1, 0, 1}^d without the origin, in lexicographic order.
pub fn units(d: usize) -> &'static [Vector] {
    static CACHE: [OnceLock<Vec<Vector>>; MAX_DIM] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[d - 1].get_or_init(|| ball(d, 1).into_iter().filter(|v| !v.is_zero()).collect())
}

/// `ball(d, 1)`, cached.
pub fn ball1(d: usize) -> &'static [Vector] {
    static CACHE: [OnceLock<Vec<Vector>>; MAX_DIM] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CACHE[d - 1].get_or_init(|| ball(d, 1))
}

/// All offsets of sup-norm at most `r`, lexicographic order.
pub fn ball(d: usize, r: i32) -> Vec<Vector> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut v = [0; MAX_DIM];
            for i in (0..d).rev() {
                v[i] = (k % side) as i32 - r;
                k /= side;
            }
            Vector(v)
        })
        .collect()
}

/// Points of the cube [0, k)^d, lexicographic order.
pub fn cube(d: usize, k: i32) -> Vec<Vector> {
    ball_from(d, 0, k)
}

fn ball_from(d: usize, lo: i32, hi: i32) -> Vec<Vector> {
    let side = (hi - lo) as usize;
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut v = [0; MAX_DIM];
            for i in (0..d).rev() {
                v[i] = (k % side) as i32 + lo;
                k /= side;
            }
            Vector(v)
        })
        .collect()
}

/// The torus (Z / side Z)^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Torus {
    pub d: usize,
    pub side: i32,
}

impl Torus {
    pub fn new(d: usize, side: i32) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::Coordinate(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        if side < 1 {
            return Err(Error::Coordinate(format!("side {side} must be positive")));
        }
        Ok(Self { d, side })
    }

    pub fn volume(&self) -> usize {
        (self.side as usize).pow(self.d as u32)
    }

    #[inline]
    pub fn wrap(&self, v: Vector) -> Vector {
        let mut w = v.0;
        for x in w.iter_mut().take(self.d) {
            *x = x.rem_euclid(self.side);
        }
        Vector(w)
    }

    #[inline]
    pub fn index(&self, v: Vector) -> usize {
        let l = self.side;
        let mut idx = 0usize;
        for i in 0..self.d {
            idx = idx * l as usize + v.0[i].rem_euclid(l) as usize;
        }
        idx
    }

    #[inline]
    pub fn coord(&self, mut idx: usize) -> Vector {
        let l = self.side as usize;
        let mut v = [0; MAX_DIM];
        for i in (0..self.d).rev() {
            v[i] = (idx % l) as i32;
            idx /= l;
        }
        Vector(v)
    }

    /// Shortest toroidal displacement from `a` to `b`, components in
    /// [-side/2, side/2).
    pub fn displacement(&self, a: Vector, b: Vector) -> Vector {
        let mut v = (b - a).0;
        let l = self.side;
        for x in v.iter_mut().take(self.d) {
            *x = (*x + l / 2).rem_euclid(l) - l / 2;
        }
        Vector(v)
    }

    pub fn dist_inf(&self, a: Vector, b: Vector) -> i32 {
        self.displacement(a, b).norm_inf()
    }

    pub fn coords(&self) -> impl Iterator<Item = Vector> + '_ {
        (0..self.volume()).map(move |i| self.coord(i))
    }
}

/// A configuration: one cell per torus site plus the current time.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<C> {
    pub torus: Torus,
    pub t: u64,
    pub cells: Vec<C>,
}

impl<C: Clone> Grid<C> {
    pub fn filled(torus: Torus, c: C) -> Self {
        Self { torus, t: 0, cells: vec![c; torus.volume()] }
    }

    pub fn get(&self, v: Vector) -> &C {
        &self.cells[self.torus.index(v)]
    }

    pub fn get_mut(&mut self, v: Vector) -> &mut C {
        let i = self.torus.index(v);
        &mut self.cells[i]
    }

    /// Writes `cells` at `origin + offset` for each entry.
    pub fn patch(&mut self, origin: Vector, cells: &[(Vector, C)]) {
        for (off, c) in cells {
            *self.get_mut(origin + *off) = c.clone();
        }
    }

    pub fn view(&self, center: Vector, radius: u32) -> Neighbourhood<'_, C> {
        Neighbourhood { grid: self, center: self.torus.wrap(center), radius: radius as i32 }
    }

    /// One synchronous step over every site, into a fresh buffer.
    pub fn step<R: LocalRule<C>>(&self, rule: &R) -> Grid<C>
    where
        C: Send + Sync,
    {
        let radius = rule.radius();
        let cells = (0..self.cells.len())
            .into_par_iter()
            .map(|i| rule.update(&self.view(self.torus.coord(i), radius)))
            .collect();
        Grid { torus: self.torus, t: self.t + 1, cells }
    }
}

/// Read access to the cells around one site.
pub struct Neighbourhood<'a, C> {
    grid: &'a Grid<C>,
    center: Vector,
    radius: i32,
}

impl<'a, C> Neighbourhood<'a, C> {
    #[inline]
    pub fn at(&self, offset: Vector) -> &'a C {
        debug_assert!(offset.norm_inf() <= self.radius, "offset {offset:?} beyond rule radius");
        // the centre is wrapped, so one correction suffices unless the torus is tiny
        let l = self.grid.torus.side;
        let mut idx = 0usize;
        for i in 0..self.grid.torus.d {
            let mut x = self.center.0[i] + offset.0[i];
            if x < 0 {
                x += l;
            } else if x >= l {
                x -= l;
            }
            if !(0..l).contains(&x) {
                x = x.rem_euclid(l);
            }
            idx = idx * l as usize + x as usize;
        }
        &self.grid.cells[idx]
    }

    #[inline]
    pub fn me(&self) -> &'a C {
        self.at(Vector::ZERO)
    }

    pub fn center(&self) -> Vector {
        self.center
    }

    pub fn dim(&self) -> usize {
        self.grid.torus.d
    }

    /// Time of the configuration being read.
    pub fn time(&self) -> u64 {
        self.grid.t
    }

    pub fn torus(&self) -> Torus {
        self.grid.torus
    }
}

/// A local rule of finite radius.
pub trait LocalRule<C>: Sync {
    fn radius(&self) -> u32;

    fn update(&self, n: &Neighbourhood<'_, C>) -> C;

    /// Cells the sparse engine may skip: if every cell within
    /// `activity_radius` of a site is quiescent, the site does not change.
    fn is_quiescent(&self, _c: &C) -> bool {
        false
    }

    fn activity_radius(&self, _t: u64) -> u32 {
        self.radius()
    }
}

/// Sparse synchronous engine. Every step reads only the old configuration and
/// commits all new values at once, so the result is the same as a full
/// double-buffered sweep; only sites near non-quiescent cells are evaluated.
pub struct Engine<C, R> {
    pub grid: Grid<C>,
    pub rule: R,
    active: Vec<usize>,
    mark: Vec<u32>,
    epoch: u32,
}

impl<C, R> Engine<C, R>
where
    C: Clone + Send + Sync,
    R: LocalRule<C>,
{
    pub fn new(grid: Grid<C>, rule: R) -> Self {
        let active = (0..grid.cells.len()).filter(|&i| !rule.is_quiescent(&grid.cells[i])).collect();
        let n = grid.cells.len();
        Self { grid, rule, active, mark: vec![0; n], epoch: 0 }
    }

    pub fn t(&self) -> u64 {
        self.grid.t
    }

    /// Sites currently holding non-quiescent cells.
    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Re-scan after the host edited the grid directly.
    pub fn refresh(&mut self) {
        self.active = (0..self.grid.cells.len())
            .filter(|&i| !self.rule.is_quiescent(&self.grid.cells[i]))
            .collect();
    }

    /// Host edit of one cell, keeping the activity set consistent.
    pub fn set(&mut self, v: Vector, c: C) {
        let i = self.grid.torus.index(v);
        let quiet = self.rule.is_quiescent(&c);
        self.grid.cells[i] = c;
        if !quiet {
            // duplicates are harmless: candidates are de-duplicated per step
            self.active.push(i);
        }
    }

    pub fn step(&mut self) {
        let torus = self.grid.torus;
        let r = self.rule.activity_radius(self.grid.t) as i32;
        let offsets = ball(torus.d, r);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        let mut candidates = Vec::with_capacity(self.active.len() * 4);
        for &i in &self.active {
            let c = torus.coord(i);
            for off in &offsets {
                let j = torus.index(c + *off);
                if self.mark[j] != self.epoch {
                    self.mark[j] = self.epoch;
                    candidates.push(j);
                }
            }
        }
        let grid = &self.grid;
        let rule = &self.rule;
        let radius = rule.radius();
        let updates: Vec<C> = candidates
            .par_iter()
            .map(|&i| rule.update(&grid.view(torus.coord(i), radius)))
            .collect();
        let mut active = Vec::with_capacity(self.active.len());
        for (i, c) in candidates.into_iter().zip(updates) {
            if !self.rule.is_quiescent(&c) {
                active.push(i);
            }
            self.grid.cells[i] = c;
        }
        active.sort_unstable();
        self.active = active;
        self.grid.t += 1;
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn into_grid(self) -> Grid<C> {
        self.grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Parity rule on u8 cells: sum of the von Neumann neighbourhood mod 3.
    struct Mod3;
    impl LocalRule<u8> for Mod3 {
        fn radius(&self) -> u32 {
            1
        }
        fn update(&self, n: &Neighbourhood<'_, u8>) -> u8 {
            let d = n.dim();
            let mut s = *n.me() as u32;
            for i in 0..d {
                for sgn in [-1, 1] {
                    s += *n.at(Vector::basis(i, sgn)) as u32;
                }
            }
            (s % 3) as u8
        }
        fn is_quiescent(&self, c: &u8) -> bool {
            *c == 0
        }
    }

    #[test]
    fn units_and_balls() {
        assert_eq!(units(1).len(), 2);
        assert_eq!(units(2).len(), 8);
        assert_eq!(units(3).len(), 26);
        assert_eq!(ball(2, 2).len(), 25);
        assert_eq!(cube(2, 3)[4], Vector::new(&[1, 1]));
    }

    #[test]
    fn index_round_trip_and_wrap() {
        let t = Torus::new(3, 5).unwrap();
        for i in 0..t.volume() {
            assert_eq!(t.index(t.coord(i)), i);
        }
        assert_eq!(t.index(Vector::new(&[-1, 0, 0])), t.index(Vector::new(&[4, 0, 0])));
        assert_eq!(t.dist_inf(Vector::new(&[0, 0, 0]), Vector::new(&[4, 1, 0])), 1);
        assert!(Torus::new(4, 5).is_err());
    }

    #[test]
    fn lexicographic_sign() {
        assert!(Vector::new(&[0, -1]).is_lex_negative());
        assert!(!Vector::new(&[1, -5]).is_lex_negative());
        assert!(!Vector::ZERO.is_lex_negative());
    }

    #[test]
    fn sparse_engine_matches_full_sweep() {
        let torus = Torus::new(2, 17).unwrap();
        let mut g = Grid::filled(torus, 0u8);
        *g.get_mut(Vector::new(&[3, 3])) = 1;
        *g.get_mut(Vector::new(&[16, 0])) = 2;
        let mut full = g.clone();
        let mut eng = Engine::new(g, Mod3);
        for _ in 0..30 {
            full = full.step(&Mod3);
            eng.step();
            assert_eq!(full, eng.grid);
        }
    }
}
