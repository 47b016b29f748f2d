//! Seeded sampling of initial positions and Brownian paths.
//!
//! Every random quantity attached to particle `k` is drawn from its own
//! ChaCha8 stream, selected by `(seed, purpose, k)`. A particle's path is
//! therefore the same whatever the ensemble size or the number of worker
//! threads, which is what makes paired refinement studies possible.
//!
//! Two path containers are provided. [`PathEnsemble`] stores the Brownian
//! values on the mesh. [`StreamedPaths`] regenerates them on the fly from the
//! streams and needs only `O(N)` memory; for the same inputs both produce
//! bit-identical paths.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

use crate::error::{ensure, Error, Result};
use crate::model::{InitialLaw, MeshKind, TimeMesh};
use crate::par;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    InitialPosition = 1,
    Brownian = 2,
    /// Bernoulli thinning of fractional survival weights.
    Survivor = 3,
}

/// Independent generator for particle `index` and the given purpose.
pub fn particle_rng(seed: u64, purpose: Purpose, index: usize) -> ChaCha8Rng {
    debug_assert!((index as u64) < (1 << 56));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | index as u64);
    rng
}

fn draw_initial(law: &InitialLaw, rng: &mut ChaCha8Rng) -> f64 {
    match *law {
        InitialLaw::Dirac { y0 } => y0,
        InitialLaw::Gamma { shape, scale } => {
            let gamma = Gamma::new(shape, scale).expect("validated parameters");
            // Rejections simply continue along the particle's own stream.
            loop {
                let y: f64 = gamma.sample(rng);
                if y > 0.0 {
                    return y;
                }
            }
        }
        InitialLaw::ReciprocalExp { rate } => {
            let u: f64 = rng.sample(Open01);
            rate / -u.ln()
        }
    }
}

/// `count` i.i.d. draws of the initial position.
pub fn sample_initial(law: &InitialLaw, count: usize, seed: u64) -> Result<Vec<f64>> {
    law.validate()?;
    ensure!(count >= 1, "number of particles must be >= 1");
    let mut out = vec![0.0; count];
    par::for_each_chunk(&mut out, |offset, chunk| {
        for (j, y) in chunk.iter_mut().enumerate() {
            let mut rng = particle_rng(seed, Purpose::InitialPosition, offset + j);
            *y = draw_initial(law, &mut rng);
        }
    });
    Ok(out)
}

fn sqrt_spacings(mesh: &TimeMesh) -> Vec<f64> {
    (1..=mesh.steps()).map(|i| mesh.spacing(i).sqrt()).collect()
}

/// Brownian increments on `mesh`, row-major `count x n`: entry `(k, i-1)` is
/// `W_{t_i} - W_{t_{i-1}}` for particle `k`.
pub fn sample_increments(mesh: &TimeMesh, count: usize, seed: u64) -> Result<Vec<f64>> {
    ensure!(count >= 1, "number of particles must be >= 1");
    let n = mesh.steps();
    let scales = sqrt_spacings(mesh);
    let mut out = vec![0.0; count * n];
    let mut rows: Vec<&mut [f64]> = out.chunks_mut(n).collect();
    par::for_each_chunk(&mut rows, |offset, chunk| {
        for (j, row) in chunk.iter_mut().enumerate() {
            let mut rng = particle_rng(seed, Purpose::Brownian, offset + j);
            for (x, s) in row.iter_mut().zip(&scales) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = s * z;
            }
        }
    });
    Ok(out)
}

/// Source of Brownian paths on a mesh, consumed one step at a time.
pub trait BrownianPaths: Sync {
    fn mesh(&self) -> &TimeMesh;

    fn initial_positions(&self) -> &[f64];

    fn particles(&self) -> usize {
        self.initial_positions().len()
    }

    /// Starts a fresh walk from `t_0`.
    fn walker(&self) -> Box<dyn PathWalker + '_>;
}

pub trait PathWalker {
    /// Moves to the next mesh point and returns `W` there for every particle.
    fn advance(&mut self) -> &[f64];
}

/// Initial positions together with Brownian values `W_{t_1}, ..., W_{t_n}` for
/// each particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    mesh: TimeMesh,
    initial_positions: Vec<f64>,
    // Step-major: W at t_i for particle k sits at (i - 1) * N + k.
    path: Vec<f64>,
    seed: u64,
    law: Option<InitialLaw>,
}

impl PathEnsemble {
    /// Draws `count` initial positions and Brownian paths on `mesh`.
    pub fn sample(law: &InitialLaw, mesh: &TimeMesh, count: usize, seed: u64) -> Result<Self> {
        let initial = sample_initial(law, count, seed)?;
        let increments = sample_increments(mesh, count, seed)?;
        let mut ens = Self::from_increments(mesh.clone(), initial, &increments)?;
        ens.seed = seed;
        ens.law = Some(*law);
        Ok(ens)
    }

    /// Builds an ensemble from explicit row-major `N x n` increments. The path
    /// is their left-to-right running sum.
    pub fn from_increments(mesh: TimeMesh, initial: Vec<f64>, increments: &[f64]) -> Result<Self> {
        let count = initial.len();
        let n = mesh.steps();
        ensure!(count >= 1, "an ensemble needs at least one particle");
        ensure!(
            increments.len() == count * n,
            "expected {} increments, got {}",
            count * n,
            increments.len()
        );
        ensure!(
            initial.iter().all(|y| y.is_finite() && *y > 0.0),
            "initial positions must be finite and > 0"
        );
        ensure!(
            increments.iter().all(|x| x.is_finite()),
            "increments must be finite"
        );
        let mut path = vec![0.0; count * n];
        for k in 0..count {
            let mut w = 0.0;
            for i in 0..n {
                w += increments[k * n + i];
                path[i * count + k] = w;
            }
        }
        Ok(Self { mesh, initial_positions: initial, path, seed: 0, law: None })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law(&self) -> Option<InitialLaw> {
        self.law
    }

    /// `W_{t_i}` for particle `k`, with `W_{t_0} = 0`.
    pub fn brownian(&self, k: usize, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.path[(i - 1) * self.particles() + k]
        }
    }

    /// `W_{t_i} - W_{t_{i-1}}` for particle `k` and `1 <= i <= n`.
    pub fn increment(&self, k: usize, i: usize) -> f64 {
        self.brownian(k, i) - self.brownian(k, i - 1)
    }

    /// All increments, row-major `N x n`.
    pub fn increments(&self) -> Vec<f64> {
        let (count, n) = (self.particles(), self.mesh.steps());
        let mut out = Vec::with_capacity(count * n);
        for k in 0..count {
            out.extend((1..=n).map(|i| self.increment(k, i)));
        }
        out
    }

    /// The same paths observed on every `factor`-th mesh point. The coarse
    /// path coincides bit for bit with the fine one at the shared times, so
    /// each coarse increment is the telescoped sum of the fine ones.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let mesh = self.mesh.subsample(factor)?;
        let count = self.particles();
        let mut path = Vec::with_capacity(count * mesh.steps());
        for i in 1..=mesh.steps() {
            let row = i * factor - 1;
            path.extend_from_slice(&self.path[row * count..(row + 1) * count]);
        }
        Ok(Self { mesh, path, initial_positions: self.initial_positions.clone(), ..*self })
    }

    /// Writes a little-endian debug dump: magic, then `seed, N, n, law tag,
    /// mesh tag` as u64, then `law p0, law p1, mesh beta`, the mesh points,
    /// the initial positions and the increments row-major as f64.
    pub fn write_dump(&self, mut out: impl Write) -> Result<()> {
        let (tag, p0, p1) = law_descriptor(self.law);
        let (mesh_tag, beta) = match self.mesh.kind() {
            MeshKind::Uniform => (0, 0.0),
            MeshKind::Refined { beta } => (1, beta),
        };
        out.write_all(DUMP_MAGIC)?;
        for v in [self.seed, self.particles() as u64, self.mesh.steps() as u64, tag, mesh_tag] {
            out.write_all(&v.to_le_bytes())?;
        }
        let floats = [p0, p1, beta]
            .into_iter()
            .chain(self.mesh.times().iter().copied())
            .chain(self.initial_positions.iter().copied())
            .chain(self.increments());
        for x in floats {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::domain("not an ensemble dump"));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |input: &mut dyn Read| -> Result<u64> {
            input.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let seed = next_u64(&mut input)?;
        let count = next_u64(&mut input)? as usize;
        let n = next_u64(&mut input)? as usize;
        let tag = next_u64(&mut input)?;
        let mesh_tag = next_u64(&mut input)?;
        let mut floats = vec![0.0; 3 + (n + 1) + count + count * n];
        for x in floats.iter_mut() {
            *x = f64::from_bits(next_u64(&mut input)?);
        }
        let law = law_from_descriptor(tag, floats[0], floats[1])?;
        let kind = match mesh_tag {
            0 => MeshKind::Uniform,
            1 => MeshKind::Refined { beta: floats[2] },
            other => return Err(Error::domain(format!("unknown mesh tag {other} in dump"))),
        };
        let (times, rest) = floats[3..].split_at(n + 1);
        let (initial, increments) = rest.split_at(count);
        let mesh = TimeMesh::from_times(times.to_vec(), kind)?;
        let mut ens = Self::from_increments(mesh, initial.to_vec(), increments)?;
        ens.seed = seed;
        ens.law = law;
        Ok(ens)
    }
}

const DUMP_MAGIC: &[u8; 8] = b"HSPATHS1";

fn law_descriptor(law: Option<InitialLaw>) -> (u64, f64, f64) {
    match law {
        None => (0, 0.0, 0.0),
        Some(InitialLaw::Dirac { y0 }) => (1, y0, 0.0),
        Some(InitialLaw::Gamma { shape, scale }) => (2, shape, scale),
        Some(InitialLaw::ReciprocalExp { rate }) => (3, rate, 0.0),
    }
}

fn law_from_descriptor(tag: u64, p0: f64, p1: f64) -> Result<Option<InitialLaw>> {
    Ok(match tag {
        0 => None,
        1 => Some(InitialLaw::Dirac { y0: p0 }),
        2 => Some(InitialLaw::Gamma { shape: p0, scale: p1 }),
        3 => Some(InitialLaw::ReciprocalExp { rate: p0 }),
        other => return Err(Error::domain(format!("unknown law tag {other} in dump"))),
    })
}

impl BrownianPaths for PathEnsemble {
    fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    fn initial_positions(&self) -> &[f64] {
        &self.initial_positions
    }

    fn walker(&self) -> Box<dyn PathWalker + '_> {
        Box::new(StoredWalker { ens: self, step: 0 })
    }
}

struct StoredWalker<'a> {
    ens: &'a PathEnsemble,
    step: usize,
}

impl PathWalker for StoredWalker<'_> {
    fn advance(&mut self) -> &[f64] {
        let count = self.ens.particles();
        let row = self.step;
        self.step += 1;
        &self.ens.path[row * count..(row + 1) * count]
    }
}

/// Paths regenerated from the particle streams during the walk.
///
/// Holds a fine mesh on which increments are drawn and an observation factor;
/// coarsening only changes the factor, so all levels of a refinement study
/// share one set of paths without storing them.
#[derive(Debug, Clone)]
pub struct StreamedPaths {
    fine_mesh: TimeMesh,
    mesh: TimeMesh,
    factor: usize,
    initial_positions: Vec<f64>,
    seed: u64,
}

impl StreamedPaths {
    pub fn new(law: &InitialLaw, mesh: &TimeMesh, count: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            fine_mesh: mesh.clone(),
            mesh: mesh.clone(),
            factor: 1,
            initial_positions: sample_initial(law, count, seed)?,
            seed,
        })
    }

    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        Ok(Self {
            mesh: self.mesh.subsample(factor)?,
            factor: self.factor * factor,
            ..self.clone()
        })
    }

    /// Stores the paths; equal to [`PathEnsemble::sample`] on the fine mesh
    /// followed by the same coarsening.
    pub fn materialize(&self) -> PathEnsemble {
        let count = self.particles();
        let mut path = Vec::with_capacity(count * self.mesh.steps());
        let mut walker = self.walker();
        for _ in 0..self.mesh.steps() {
            path.extend_from_slice(walker.advance());
        }
        PathEnsemble {
            mesh: self.mesh.clone(),
            initial_positions: self.initial_positions.clone(),
            path,
            seed: self.seed,
            law: None,
        }
    }
}

impl BrownianPaths for StreamedPaths {
    fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    fn initial_positions(&self) -> &[f64] {
        &self.initial_positions
    }

    fn walker(&self) -> Box<dyn PathWalker + '_> {
        let count = self.particles();
        Box::new(StreamWalker {
            rngs: (0..count)
                .map(|k| particle_rng(self.seed, Purpose::Brownian, k))
                .collect(),
            w: vec![0.0; count],
            scales: sqrt_spacings(&self.fine_mesh),
            factor: self.factor,
            fine_step: 0,
        })
    }
}

struct StreamWalker {
    rngs: Vec<ChaCha8Rng>,
    w: Vec<f64>,
    scales: Vec<f64>,
    factor: usize,
    fine_step: usize,
}

impl PathWalker for StreamWalker {
    fn advance(&mut self) -> &[f64] {
        let scales = &self.scales[self.fine_step..self.fine_step + self.factor];
        par::for_each_chunk2(&mut self.rngs, &mut self.w, |_, rngs, ws| {
            for (rng, w) in rngs.iter_mut().zip(ws.iter_mut()) {
                for s in scales {
                    let z: f64 = StandardNormal.sample(rng);
                    *w += s * z;
                }
            }
        });
        self.fine_step += self.factor;
        &self.w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_refined_mesh, build_uniform_mesh};

    #[test]
    fn dirac_samples_are_constant() {
        let law = InitialLaw::dirac(1.0).unwrap();
        assert_eq!(sample_initial(&law, 5, 99).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let law = InitialLaw::gamma(1.5, 0.5).unwrap();
        let a = sample_initial(&law, 5000, 7).unwrap();
        let b = sample_initial(&law, 5000, 7).unwrap();
        let c = sample_initial(&law, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(&a[..100], &c[..]);
        assert_ne!(a, sample_initial(&law, 5000, 8).unwrap());
        assert!(a.iter().all(|&y| y > 0.0));
    }

    #[test]
    fn increments_are_reproducible() {
        let mesh = TimeMesh::from_times(vec![0.0, 0.5, 1.0], MeshKind::Uniform).unwrap();
        let a = sample_increments(&mesh, 1, 42).unwrap();
        let b = sample_increments(&mesh, 1, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn coarsen_telescopes() {
        let mesh = build_uniform_mesh(2, 1.0).unwrap();
        let (a, b) = (0.3, -0.7);
        let ens = PathEnsemble::from_increments(mesh, vec![1.0], &[a, b]).unwrap();
        let coarse = ens.coarsen(2).unwrap();
        assert_eq!(coarse.mesh().times(), &[0.0, 1.0]);
        assert_eq!(coarse.increments(), vec![a + b]);
        assert_eq!(ens.coarsen(1).unwrap(), ens);
        assert!(ens.coarsen(3).is_err());
    }

    #[test]
    fn rejects_bad_explicit_ensembles() {
        let mesh = build_uniform_mesh(2, 1.0).unwrap();
        assert!(PathEnsemble::from_increments(mesh.clone(), vec![1.0], &[0.1]).is_err());
        assert!(PathEnsemble::from_increments(mesh.clone(), vec![-1.0], &[0.1, 0.1]).is_err());
        assert!(PathEnsemble::from_increments(mesh, vec![1.0], &[f64::NAN, 0.1]).is_err());
    }

    #[test]
    fn streamed_paths_match_stored_paths() {
        let law = InitialLaw::reciprocal_exp(1.0).unwrap();
        for mesh in [
            build_uniform_mesh(16, 2.0).unwrap(),
            build_refined_mesh(16, 2.0, 0.5).unwrap(),
        ] {
            let stored = PathEnsemble::sample(&law, &mesh, 3000, 5).unwrap();
            let streamed = StreamedPaths::new(&law, &mesh, 3000, 5).unwrap();
            assert_eq!(streamed.materialize().path, stored.path);
            let c_stored = stored.coarsen(4).unwrap();
            let c_streamed = streamed.coarsen(2).unwrap().coarsen(2).unwrap();
            assert_eq!(c_streamed.mesh(), c_stored.mesh());
            assert_eq!(c_streamed.materialize().path, c_stored.path);
            assert_eq!(c_streamed.initial_positions(), c_stored.initial_positions());
        }
    }

    #[test]
    fn dump_round_trip() {
        let law = InitialLaw::gamma(1.5, 0.5).unwrap();
        let mesh = build_uniform_mesh(8, 1.0).unwrap();
        let ens = PathEnsemble::sample(&law, &mesh, 50, 3).unwrap();
        let mut buf = Vec::new();
        ens.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 5 * 8 + 8 * (3 + 9 + 50 + 50 * 8));
        let back = PathEnsemble::read_dump(buf.as_slice()).unwrap();
        assert_eq!(back.mesh(), ens.mesh());
        assert_eq!(back.initial_positions(), ens.initial_positions());
        assert_eq!((back.seed(), back.law()), (3, Some(law)));
        // Differencing and re-summing may move the path by a rounding error.
        for (a, b) in back.path.iter().zip(&ens.path) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
