use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::KernelError;
use crate::target::Target;
use crate::tuning::{Tuner, TuningSchedule};
use crate::StepInfo;

/// A partition of the coordinates `0..dim` into disjoint blocks, validated
/// at construction.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, dim: usize) -> Result<Self, KernelError> {
        let mut seen = vec![false; dim];
        for block in &blocks {
            for &idx in block {
                if idx >= dim {
                    return Err(KernelError::BadPartition(format!("index {idx} out of range for dim {dim}")));
                }
                if seen[idx] {
                    return Err(KernelError::BadPartition(format!("coordinate {idx} appears in two blocks")));
                }
                seen[idx] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|covered| !covered) {
            return Err(KernelError::BadPartition(format!("coordinate {missing} not covered by any block")));
        }
        Ok(BlockPartition { blocks, dim })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Per-block random-walk kernel inside a Metropolis-within-Gibbs sweep.
#[derive(Debug, Clone)]
pub struct BlockKernel {
    pub indices: Vec<usize>,
    pub scale: f64,
    pub accepted: u64,
    pub proposed: u64,
    pub tuner: Tuner,
}

impl BlockKernel {
    pub fn maybe_tune<R: Rng + ?Sized>(&mut self, iter: u64, schedule: &TuningSchedule, rng: &mut R) -> bool {
        let BlockKernel { scale, accepted, proposed, tuner, .. } = self;
        tuner.maybe_tune(iter, schedule, scale, accepted, proposed, rng)
    }
}

/// State for a Metropolis-within-Gibbs sampler over one vector `x`.
#[derive(Debug, Clone)]
pub struct MwgState {
    pub x: Vec<f64>,
    pub logp: Option<f64>,
    pub blocks: Vec<BlockKernel>,
}

impl MwgState {
    /// Build a sweep state from a validated partition and per-block initial
    /// scales (`scales.len()` must match the number of blocks).
    pub fn new<R: Rng + ?Sized>(
        x: Vec<f64>,
        partition: &BlockPartition,
        scales: &[f64],
        band: (f64, f64),
        interval: (f64, f64),
        rng: &mut R,
    ) -> Result<Self, KernelError> {
        if x.len() != partition.dim() {
            return Err(KernelError::Dimension { expected: partition.dim(), got: x.len() });
        }
        if scales.len() != partition.blocks().len() {
            return Err(KernelError::Dimension { expected: partition.blocks().len(), got: scales.len() });
        }
        let blocks = partition
            .blocks()
            .iter()
            .zip(scales)
            .map(|(indices, &scale)| BlockKernel {
                indices: indices.clone(),
                scale,
                accepted: 0,
                proposed: 0,
                tuner: Tuner::new(band, interval, rng),
            })
            .collect();
        Ok(MwgState { x: x.to_vec(), logp: None, blocks })
    }
}

/// One Gibbs sweep: for each block in listed order, one random-walk
/// Metropolis proposal on that block conditional on the freshest values of
/// all other coordinates.
pub fn mwg_sweep<T: Target + ?Sized, R: Rng + ?Sized>(state: &mut MwgState, target: &T, rng: &mut R) -> Vec<StepInfo> {
    debug_assert_eq!(state.x.len(), target.dim());
    let mut logp_x = match state.logp {
        Some(v) => v,
        None => target.log_density(&state.x),
    };

    let mut infos = Vec::with_capacity(state.blocks.len());
    for block in &mut state.blocks {
        let saved: Vec<f64> = block.indices.iter().map(|&i| state.x[i]).collect();
        for &i in &block.indices {
            state.x[i] += block.scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        }
        let logp_y = target.log_density(&state.x);
        block.proposed += 1;

        let info = if logp_y.is_nan() {
            StepInfo::divergent()
        } else if rng.random::<f64>().ln() < logp_y - logp_x {
            block.accepted += 1;
            logp_x = logp_y;
            StepInfo::accepted()
        } else {
            StepInfo::rejected()
        };
        if !info.accepted {
            for (&i, &old) in block.indices.iter().zip(&saved) {
                state.x[i] = old;
            }
        }
        infos.push(info);
    }
    state.logp = Some(logp_x);
    infos
}
