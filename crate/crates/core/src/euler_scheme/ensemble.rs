use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot_metrics::EmpiricalMeasure;
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"MFLVSNAP";
const FORMAT_VERSION: u32 = 1;

/// Which frozen law a step used: a digest of the snapshot and how many
/// particles were advanced against it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawRecord {
    pub step: usize,
    pub digest: u64,
    pub evaluations: usize,
}

/// Particle trajectories on the uniform grid `0, τ, 2τ, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PathEnsemble<T> {
    pub dim: usize,
    pub tau: T,
    pub times: Vec<T>,
    /// One row-major `N × d` buffer per grid time.
    pub states: Vec<Vec<T>>,
    pub weights: Vec<T>,
    /// Present when the run recorded its frozen laws.
    pub cache: Option<Vec<LawRecord>>,
}

/// FNV-1a over the bit patterns of a state buffer.
pub(crate) fn digest<T: Real>(states: &[T]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in states {
        for b in v.f64().to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl<T: Real> PathEnsemble<T> {
    pub fn particles(&self) -> usize {
        self.weights.len()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("grid is never empty")
    }

    pub fn state(&self, k: usize, i: usize) -> &[T] {
        &self.states[k][i * self.dim..(i + 1) * self.dim]
    }

    /// Empirical law at grid index `k`.
    pub fn snapshot(&self, k: usize) -> EmpiricalMeasure<T> {
        EmpiricalMeasure::new(self.dim, self.states[k].clone(), self.weights.clone())
            .expect("ensemble invariants hold")
    }

    /// Grid index of time `t`, if `t` is a grid point.
    pub fn index_of(&self, t: T) -> Option<usize> {
        let k = (t / self.tau).round();
        let ki = k.to_usize()?;
        if ki < self.times.len() && (self.times[ki] - t).abs() <= T::of(1e-9) * T::one().max(t.abs()) {
            Some(ki)
        } else {
            None
        }
    }

    /// Every `stride`-th grid point.
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.steps() % stride != 0 {
            return Err(Error::Alignment(format!(
                "cannot coarsen {} steps by {stride}",
                self.steps()
            )));
        }
        Ok(Self {
            dim: self.dim,
            tau: self.tau * T::count(stride),
            times: self.times.iter().step_by(stride).copied().collect(),
            states: self.states.iter().step_by(stride).cloned().collect(),
            weights: self.weights.clone(),
            cache: None,
        })
    }

    /// Checks that each cached law matches the recorded grid state.
    pub fn verify_cache(&self) -> Result<()> {
        let cache = self.cache.as_ref().ok_or_else(|| {
            Error::Diagnostic("ensemble has no law cache; rerun with caching enabled".into())
        })?;
        if cache.len() != self.steps() {
            return Err(Error::Diagnostic("law cache length does not match the grid".into()));
        }
        for rec in cache {
            if rec.digest != digest(&self.states[rec.step]) || rec.evaluations != self.particles() {
                return Err(Error::Diagnostic(format!(
                    "step {} was not advanced against a single frozen law",
                    rec.step
                )));
            }
        }
        Ok(())
    }

    /// `step,time,particle,x1..xd`, one row per particle and grid time.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "time".into(), "particle".into()];
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            for i in 0..self.particles() {
                let mut row = vec![k.to_string(), format!("{:e}", t.f64()), i.to_string()];
                row.extend(self.state(k, i).iter().map(|v| format!("{:e}", v.f64())));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Binary snapshot: magic, version, dimension, particle and step
    /// counts, then `τ`, weights, times and states as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.particles() as u64).to_le_bytes())?;
        out.write_all(&(self.steps() as u64).to_le_bytes())?;
        let mut put = |v: T| out.write_all(&v.f64().to_le_bytes());
        put(self.tau)?;
        for &w in &self.weights {
            put(w)?;
        }
        for &t in &self.times {
            put(t)?;
        }
        for s in &self.states {
            for &v in s {
                put(v)?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("not a path snapshot file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != FORMAT_VERSION {
            return Err(Error::Io(format!("unsupported snapshot version {version}")));
        }
        input.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8)?;
        let steps = u64::from_le_bytes(b8) as usize;
        let mut get = || -> Result<T> {
            input.read_exact(&mut b8)?;
            Ok(T::of(f64::from_le_bytes(b8)))
        };
        let tau = get()?;
        let weights = (0..n).map(|_| get()).collect::<Result<Vec<_>>>()?;
        let times = (0..=steps).map(|_| get()).collect::<Result<Vec<_>>>()?;
        let mut states = Vec::with_capacity(steps + 1);
        for _ in 0..=steps {
            states.push((0..n * dim).map(|_| get()).collect::<Result<Vec<_>>>()?);
        }
        Ok(Self {
            dim,
            tau,
            times,
            states,
            weights,
            cache: None,
        })
    }
}
