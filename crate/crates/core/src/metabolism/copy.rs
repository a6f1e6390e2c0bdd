//! The copy process C_i(u): every cell of the grid element Σ_i sends a probe
//! carrying its letter k steps along u. Arrived probes check that their cell
//! belongs to the territory and flood the verdict across Σ_{i+u} for k - 1
//! rounds; a unanimous block then writes its letters and launches the heirs.
//!
//! Grid elements are the half-open blocks heart + k·i + [0, k)^d.

use serde::{Deserialize, Serialize};

use crate::lattice::{units, Birth, Cell, Growth, Neighbourhood, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CopyRecord {
    /// In flight; `rel` is the current cell's offset from the heart.
    Probe { letter: u8, rel: Vector, u: Vector, left: u16, k: u16, gen: u32 },
    /// Arrived; `ok` is the conjunction of the verdicts seen so far.
    Verdict { letter: u8, rel: Vector, u: Vector, left: u16, k: u16, gen: u32, ok: bool },
}

/// Grid element of an offset from the heart.
pub fn block(rel: Vector, k: u16, d: usize) -> Vector {
    let mut b = Vector::ZERO;
    for i in 0..d {
        b.0[i] = rel.0[i].div_euclid(k as i32);
    }
    b
}

/// Directions of the processes spawned on Σ_{i+u} by C_i(u): every unit
/// vector agreeing with `u` on its non-zero components. An axis direction
/// has 3^(d-1) heirs; in the plane a diagonal one has only itself.
pub fn heirs(u: Vector, d: usize) -> Vec<Vector> {
    units(d).iter().copied().filter(|v| (0..d).all(|i| u.0[i] == 0 || v.0[i] == u.0[i])).collect()
}

/// Can the generation-`gen` copy of the heart at offset `-rel` write into
/// this cell? Only cells its own building signal reached first qualify.
pub fn local_ok(c: &Cell, rel: Vector, gen: u32) -> bool {
    if !matches!(c.growth, Growth::Blank) {
        return false;
    }
    if matches!(c.birth, Birth::Heart(_)) && !rel.is_zero() {
        return false;
    }
    c.organism.gen() == Some(gen) && c.organism.rel() == Some(rel)
}

/// Probes for every direction from one cell of Σ_0 (placed by the host).
pub fn launch(letter: u8, rel: Vector, k: u16, gen: u32, d: usize) -> Vec<CopyRecord> {
    units(d).iter().copied().map(|u| CopyRecord::Probe { letter, rel, u, left: k, k, gen }).collect()
}

pub struct CopyUpdate {
    pub records: Vec<CopyRecord>,
    /// Letter committed to the main layer this step.
    pub write: Option<u8>,
}

fn neighbours_agree(n: &Neighbourhood<'_, Cell>, rel: Vector, u: Vector, k: u16, gen: u32) -> bool {
    let d = n.dim();
    let mine = block(rel, k, d);
    units(d).iter().all(|&e| {
        let r2 = rel + e;
        if block(r2, k, d) != mine {
            return true;
        }
        n.at(e).copying.iter().any(|c| {
            matches!(*c, CopyRecord::Verdict { rel: r, u: u2, k: k2, gen: g, ok, .. }
                if r == r2 && u2 == u && k2 == k && g == gen && ok)
        })
    })
}

pub fn copy_update(n: &Neighbourhood<'_, Cell>) -> CopyUpdate {
    let d = n.dim();
    let me = n.me();
    let mut records = Vec::new();
    let mut write = None;
    for &v in units(d) {
        for c in &n.at(-v).copying {
            if let CopyRecord::Probe { letter, rel, u, left, k, gen } = *c {
                if left > 0 && u == v {
                    records.push(CopyRecord::Probe { letter, rel: rel + u, u, left: left - 1, k, gen });
                }
            }
        }
    }
    for c in &me.copying {
        match *c {
            CopyRecord::Probe { left: 0, letter, rel, u, k, gen } => {
                let ok = local_ok(me, rel, gen);
                if k <= 1 {
                    // a one-cell block has nothing to agree on
                    if ok {
                        write = Some(letter);
                        records.extend(heirs(u, d).into_iter().map(|u2| CopyRecord::Probe { letter, rel, u: u2, left: k, k, gen }));
                    }
                } else {
                    records.push(CopyRecord::Verdict { letter, rel, u, left: k - 1, k, gen, ok });
                }
            }
            CopyRecord::Probe { .. } => {}
            CopyRecord::Verdict { letter, rel, u, left, k, gen, ok } => {
                if left > 0 {
                    let ok = ok && local_ok(me, rel, gen) && neighbours_agree(n, rel, u, k, gen);
                    records.push(CopyRecord::Verdict { letter, rel, u, left: left - 1, k, gen, ok });
                } else if ok {
                    write = Some(letter);
                    records.extend(heirs(u, d).into_iter().map(|u2| CopyRecord::Probe { letter, rel, u: u2, left: k, k, gen }));
                }
            }
        }
    }
    CopyUpdate { records, write }
}
