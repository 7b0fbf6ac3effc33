//! State vectors on a sector or on the truncated Fock space, and their on-disk format.
//!
//! Both formats carry a header `{modes, n_max, ordering_version}` followed by the
//! amplitudes as interleaved `(re, im)` doubles in basis order. The binary layout is
//! little-endian: magic `BFCK`, `u32` ordering version, `u32` modes, `u32` n_max,
//! `u64` amplitude count, then `2 * count` `f64`.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::basis::{FockBasis, OccupationSpace, SectorBasis, ORDERING_VERSION};
use crate::linalg;
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

/// Vector in a fixed particle-number sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorVector {
    pub basis: Arc<SectorBasis>,
    pub amps: Vec<C64>,
}

impl SectorVector {
    pub fn new(basis: Arc<SectorBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        Ok(Self { basis, amps })
    }

    pub fn zeros(basis: Arc<SectorBasis>) -> Self {
        let amps = vec![C64::new(0.0, 0.0); basis.dim()];
        Self { basis, amps }
    }

    pub fn particles(&self) -> usize {
        self.basis.particles()
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            basis: self.basis.clone(),
            amps: self.amps.iter().map(|a| a / n).collect(),
        }
    }

    /// Amplitude of an occupation tuple, zero when absent.
    pub fn amplitude(&self, occ: &[u8]) -> C64 {
        self.basis
            .index_of(occ)
            .map(|i| self.amps[i])
            .unwrap_or(C64::new(0.0, 0.0))
    }
}

/// Vector on `F^{<= n_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub basis: Arc<FockBasis>,
    pub amps: Vec<C64>,
}

impl FockVector {
    pub fn new(basis: Arc<FockBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        Ok(Self { basis, amps })
    }

    pub fn zeros(basis: Arc<FockBasis>) -> Self {
        let amps = vec![C64::new(0.0, 0.0); basis.dim()];
        Self { basis, amps }
    }

    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        let mut v = Self::zeros(basis);
        v.amps[0] = C64::new(1.0, 0.0);
        v
    }

    /// Places sector vectors `phis[n]` into sector `n`.
    pub fn from_sectors(basis: Arc<FockBasis>, phis: &[SectorVector]) -> Result<Self> {
        let mut v = Self::zeros(basis);
        for phi in phis {
            v.set_sector(phi)?;
        }
        Ok(v)
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn n_max(&self) -> usize {
        self.basis.n_max()
    }

    pub fn sector(&self, n: usize) -> &[C64] {
        &self.amps[self.basis.sector_range(n)]
    }

    pub fn sector_mut(&mut self, n: usize) -> &mut [C64] {
        let r = self.basis.sector_range(n);
        &mut self.amps[r]
    }

    pub fn sector_vector(&self, n: usize) -> SectorVector {
        SectorVector {
            basis: self.basis.sector(n).clone(),
            amps: self.sector(n).to_vec(),
        }
    }

    pub fn set_sector(&mut self, phi: &SectorVector) -> Result<()> {
        let n = phi.particles();
        if phi.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: phi.modes(),
            });
        }
        if n > self.n_max() {
            return Err(Error::InvalidInput(format!(
                "sector {n} exceeds truncation {}",
                self.n_max()
            )));
        }
        self.sector_mut(n).copy_from_slice(&phi.amps);
        Ok(())
    }

    pub fn sector_norm(&self, n: usize) -> f64 {
        if n > self.n_max() {
            return 0.0;
        }
        linalg::norm(self.sector(n))
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        op.expectation(&self.amps)
    }

    /// `<N>`.
    pub fn number_expectation(&self) -> f64 {
        (0..=self.n_max())
            .map(|n| n as f64 * self.sector_norm(n).powi(2))
            .sum()
    }

    /// `||self - other||` for vectors with the same mode count but possibly different
    /// truncations; sectors present in only one of them contribute their norm.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.modes() != other.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: other.modes(),
            });
        }
        let top = self.n_max().max(other.n_max());
        let mut acc = 0.0;
        for n in 0..=top {
            acc += match (n <= self.n_max(), n <= other.n_max()) {
                (true, true) => linalg::distance(self.sector(n), other.sector(n)).powi(2),
                (true, false) => self.sector_norm(n).powi(2),
                (false, true) => other.sector_norm(n).powi(2),
                (false, false) => 0.0,
            };
        }
        Ok(acc.sqrt())
    }

    /// Copies into another basis with the same modes, dropping sectors above its truncation.
    pub fn embed(&self, basis: Arc<FockBasis>) -> Result<Self> {
        if basis.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: basis.modes(),
            });
        }
        let mut out = Self::zeros(basis);
        for n in 0..=self.n_max().min(out.n_max()) {
            out.sector_mut(n).copy_from_slice(self.sector(n));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&VectorFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<VectorFile>(s)?.into_vector()
    }

    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"BFCK")?;
        w.write_all(&ORDERING_VERSION.to_le_bytes())?;
        w.write_all(&(self.modes() as u32).to_le_bytes())?;
        w.write_all(&(self.n_max() as u32).to_le_bytes())?;
        w.write_all(&(self.amps.len() as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"BFCK" {
            return Err(Error::InvalidInput("not a Fock vector file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        r.read_exact(&mut b4)?;
        let modes = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let n_max = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut flat = Vec::with_capacity(2 * count);
        for _ in 0..2 * count {
            r.read_exact(&mut b8)?;
            flat.push(f64::from_le_bytes(b8));
        }
        VectorFile {
            modes,
            n_max,
            ordering_version: version,
            amplitudes: flat,
        }
        .into_vector()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorFile {
    modes: usize,
    n_max: usize,
    ordering_version: u32,
    amplitudes: Vec<f64>,
}

impl From<&FockVector> for VectorFile {
    fn from(v: &FockVector) -> Self {
        Self {
            modes: v.modes(),
            n_max: v.n_max(),
            ordering_version: ORDERING_VERSION,
            amplitudes: v.amps.iter().flat_map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl VectorFile {
    fn into_vector(self) -> Result<FockVector> {
        if self.ordering_version != ORDERING_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported ordering version {}",
                self.ordering_version
            )));
        }
        if !self.amplitudes.len().is_multiple_of(2) {
            return Err(Error::InvalidInput("odd number of amplitude components".into()));
        }
        let basis = FockBasis::shared(self.modes, self.n_max)?;
        let amps = self
            .amplitudes
            .chunks_exact(2)
            .map(|c| C64::new(c[0], c[1]))
            .collect();
        FockVector::new(basis, amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FockVector {
        let b = FockBasis::shared(3, 3).unwrap();
        let amps = (0..b.dim())
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos() / 3.0))
            .collect();
        FockVector::new(b, amps).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let v = sample();
        let back = FockVector::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn binary_round_trip() {
        let v = sample();
        let mut bytes = Vec::new();
        v.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 4 + 4 + 8 + 16 * v.amps.len());
        let back = FockVector::read_binary(bytes.as_slice()).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn distance_across_truncations() {
        let v = sample();
        let small = v.embed(FockBasis::shared(3, 1).unwrap()).unwrap();
        let tail: f64 = (2..=3).map(|n| v.sector_norm(n).powi(2)).sum::<f64>().sqrt();
        assert!((v.distance(&small).unwrap() - tail).abs() < 1e-14);
        assert!((small.distance(&v).unwrap() - tail).abs() < 1e-14);
    }
}
