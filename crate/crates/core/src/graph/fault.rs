//! Fault injection for batch commits.

use std::collections::HashMap;

/// Where in a batch attempt the store consults the injector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// Before applying element `index` (nodes first, then edges).
    Element { batch_id: u64, attempt: u32, index: usize },
    /// After all elements are applied, before the batch becomes durable.
    Commit { batch_id: u64, attempt: u32 },
}

impl FaultPoint {
    pub fn batch_id(&self) -> u64 {
        match *self {
            FaultPoint::Element { batch_id, .. } | FaultPoint::Commit { batch_id, .. } => batch_id,
        }
    }

    pub fn attempt(&self) -> u32 {
        match *self {
            FaultPoint::Element { attempt, .. } | FaultPoint::Commit { attempt, .. } => attempt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectedFault(pub String);

pub trait FaultInjector: Send + Sync {
    fn check(&self, point: FaultPoint) -> Result<(), InjectedFault>;
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) fn mix(values: &[u64]) -> u64 {
    values.iter().fold(0x5eed_u64, |acc, v| splitmix(acc ^ splitmix(*v)))
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// A seeded, reproducible fault schedule.
///
/// Each (batch, attempt) pair fails with probability `transient_rate`,
/// at a position chosen from the seed. A `permanent_rate` fraction of batches
/// fails on every attempt.
#[derive(Debug, Clone, Copy)]
pub struct RandomFaults {
    pub seed: u64,
    pub transient_rate: f64,
    pub permanent_rate: f64,
}

impl RandomFaults {
    /// Whether the schedule makes `batch_id` fail on every attempt.
    pub fn is_permanent(&self, batch_id: u64) -> bool {
        unit(mix(&[self.seed, batch_id, 1])) < self.permanent_rate
    }

    fn fails(&self, batch_id: u64, attempt: u32) -> bool {
        self.is_permanent(batch_id) || unit(mix(&[self.seed, batch_id, attempt as u64, 2])) < self.transient_rate
    }
}

impl FaultInjector for RandomFaults {
    fn check(&self, point: FaultPoint) -> Result<(), InjectedFault> {
        let (batch, attempt) = (point.batch_id(), point.attempt());
        if !self.fails(batch, attempt) {
            return Ok(());
        }
        // Fail at the commit point or at one element, picked from the seed.
        let pick = mix(&[self.seed, batch, attempt as u64, 3]);
        let hit = match point {
            FaultPoint::Commit { .. } => pick.is_multiple_of(2),
            FaultPoint::Element { index, .. } => pick % 2 == 1 && (index as u64) == (pick >> 1) % 8,
        };
        if hit {
            Err(InjectedFault(format!("injected fault in batch {batch}, attempt {attempt}")))
        } else {
            Ok(())
        }
    }
}

/// Fails the first `n` attempts of selected batches at the commit point.
#[derive(Debug, Clone, Default)]
pub struct ScriptedFaults(pub HashMap<u64, u32>);

impl FaultInjector for ScriptedFaults {
    fn check(&self, point: FaultPoint) -> Result<(), InjectedFault> {
        match (point, self.0.get(&point.batch_id())) {
            (FaultPoint::Commit { attempt, batch_id }, Some(&n)) if attempt < n => {
                Err(InjectedFault(format!("scripted fault in batch {batch_id}, attempt {attempt}")))
            }
            _ => Ok(()),
        }
    }
}
