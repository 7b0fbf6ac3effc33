//! Occupation-number bases.
//!
//! A sector with `n` particles in `M` modes holds every tuple `(n_0, ..., n_{M-1})`
//! with `sum n_i = n`, in descending lexicographic order: for `M = 2`, `n = 1` the
//! order is `(1,0), (0,1)`. The truncated Fock basis concatenates sectors
//! `0, 1, ..., n_max`. Indices are computed by combinatorial ranking, no hashing.

use std::sync::Arc;

use crate::{Error, Result};

/// Hard cap on the number of Fock states.
pub const MAX_STATES: usize = 5_000_000;

/// Version tag of the state ordering, stored with serialized vectors.
pub const ORDERING_VERSION: u32 = 1;

/// Number of ways to place `n` bosons in `m` modes.
pub fn compositions(n: usize, m: usize) -> u128 {
    if m == 0 {
        return u128::from(n == 0);
    }
    binomial((n + m - 1) as u128, (m - 1) as u128)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Size of the truncated Fock space `sum_{n <= n_max} C(n+M-1, M-1) = C(n_max+M, M)`.
pub fn fock_dimension(modes: usize, n_max: usize) -> u128 {
    (0..=n_max).map(|n| compositions(n, modes)).sum()
}

/// Anything indexable by occupation tuples.
pub trait OccupationSpace {
    fn modes(&self) -> usize;
    fn dim(&self) -> usize;
    fn state(&self, i: usize) -> &[u8];
    fn index_of(&self, occ: &[u8]) -> Option<usize>;
    /// Particle number of state `i`.
    fn particles(&self, i: usize) -> usize {
        self.state(i).iter().map(|&v| v as usize).sum()
    }
}

/// Fixed particle-number sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    modes: usize,
    particles: usize,
    states: Vec<u8>,
    // counts[r * (modes + 1) + k] = compositions(r, k)
    counts: Vec<usize>,
}

impl SectorBasis {
    pub fn new(modes: usize, particles: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidInput("at least one mode is required".into()));
        }
        if particles > u8::MAX as usize {
            return Err(Error::InvalidInput(format!("at most 255 particles per sector, got {particles}")));
        }
        let size = compositions(particles, modes);
        if size > MAX_STATES as u128 {
            return Err(Error::BasisTooLarge {
                size: size.min(usize::MAX as u128) as usize,
                cap: MAX_STATES,
            });
        }
        let mut counts = vec![0usize; (particles + 1) * (modes + 1)];
        for r in 0..=particles {
            for k in 0..=modes {
                counts[r * (modes + 1) + k] = compositions(r, k) as usize;
            }
        }
        let mut states = Vec::with_capacity(size as usize * modes);
        let mut cur = vec![0u8; modes];
        Self::enumerate(0, particles, &mut cur, &mut states);
        Ok(Self {
            modes,
            particles,
            states,
            counts,
        })
    }

    fn enumerate(pos: usize, remaining: usize, cur: &mut [u8], out: &mut Vec<u8>) {
        if pos + 1 == cur.len() {
            cur[pos] = remaining as u8;
            out.extend_from_slice(cur);
            return;
        }
        for v in (0..=remaining).rev() {
            cur[pos] = v as u8;
            Self::enumerate(pos + 1, remaining - v, cur, out);
        }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    fn count(&self, r: usize, k: usize) -> usize {
        self.counts[r * (self.modes + 1) + k]
    }
}

impl OccupationSpace for SectorBasis {
    fn modes(&self) -> usize {
        self.modes
    }

    fn dim(&self) -> usize {
        self.states.len() / self.modes
    }

    fn state(&self, i: usize) -> &[u8] {
        &self.states[i * self.modes..(i + 1) * self.modes]
    }

    fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.modes || occ.iter().map(|&v| v as usize).sum::<usize>() != self.particles {
            return None;
        }
        let mut rank = 0;
        let mut remaining = self.particles;
        for (pos, &v) in occ.iter().enumerate().take(self.modes - 1) {
            let v = v as usize;
            let k = self.modes - pos - 1;
            // States with a larger entry at `pos` come first.
            for larger in v + 1..=remaining {
                rank += self.count(remaining - larger, k);
            }
            remaining -= v;
        }
        Some(rank)
    }

    fn particles(&self, _i: usize) -> usize {
        self.particles
    }
}

/// Truncated Fock space `F^{<= n_max}`, ordered by sector then within sector.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    sectors: Vec<Arc<SectorBasis>>,
    offsets: Vec<usize>,
}

impl FockBasis {
    pub fn new(modes: usize, n_max: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidInput("at least one mode is required".into()));
        }
        let size = fock_dimension(modes, n_max);
        if size > MAX_STATES as u128 {
            return Err(Error::BasisTooLarge {
                size: size.min(usize::MAX as u128) as usize,
                cap: MAX_STATES,
            });
        }
        let sectors = (0..=n_max)
            .map(|n| SectorBasis::new(modes, n).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = vec![0];
        for s in &sectors {
            offsets.push(offsets.last().unwrap() + s.dim());
        }
        Ok(Self {
            modes,
            n_max,
            sectors,
            offsets,
        })
    }

    pub fn shared(modes: usize, n_max: usize) -> Result<Arc<Self>> {
        Self::new(modes, n_max).map(Arc::new)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn sector(&self, n: usize) -> &Arc<SectorBasis> {
        &self.sectors[n]
    }

    /// Index range of sector `n` inside the full basis.
    pub fn sector_range(&self, n: usize) -> std::ops::Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    pub fn sector_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    /// Particle number of every state, in basis order.
    pub fn particle_numbers(&self) -> Vec<usize> {
        (0..=self.n_max)
            .flat_map(|n| std::iter::repeat_n(n, self.sectors[n].dim()))
            .collect()
    }
}

impl OccupationSpace for FockBasis {
    fn modes(&self) -> usize {
        self.modes
    }

    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn state(&self, i: usize) -> &[u8] {
        let n = self.sector_of(i);
        self.sectors[n].state(i - self.offsets[n])
    }

    fn index_of(&self, occ: &[u8]) -> Option<usize> {
        let n: usize = occ.iter().map(|&v| v as usize).sum();
        if n > self.n_max {
            return None;
        }
        self.sectors[n].index_of(occ).map(|k| self.offsets[n] + k)
    }

    fn particles(&self, i: usize) -> usize {
        self.sector_of(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_modes_one_particle_order() {
        let b = FockBasis::new(2, 1).unwrap();
        let states: Vec<Vec<u8>> = (0..b.dim()).map(|i| b.state(i).to_vec()).collect();
        assert_eq!(states, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn dimension_formula() {
        for m in 1..5 {
            for n in 0..7 {
                let b = FockBasis::new(m, n).unwrap();
                assert_eq!(b.dim() as u128, fock_dimension(m, n));
                assert_eq!(fock_dimension(m, n), binomial((n + m) as u128, m as u128));
            }
        }
    }

    #[test]
    fn ranking_inverts_enumeration() {
        let b = FockBasis::new(4, 6).unwrap();
        for i in 0..b.dim() {
            assert_eq!(b.index_of(b.state(i)), Some(i));
        }
        assert_eq!(b.index_of(&[7, 0, 0, 0]), None);
    }

    #[test]
    fn descending_lexicographic_within_sector() {
        let s = SectorBasis::new(3, 3).unwrap();
        for i in 1..s.dim() {
            assert!(s.state(i - 1) > s.state(i));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(FockBasis::new(40, 12), Err(Error::BasisTooLarge { .. })));
    }
}
