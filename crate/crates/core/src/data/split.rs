use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{Label, WeightedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
    /// Rescale each part's class weights back to the full dataset's class totals.
    pub renormalize: bool,
}

impl SplitSpec {
    pub fn new(validation_fraction: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            validation_fraction,
            seed,
            renormalize: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction {} not in (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Stratified train/validation partition.
///
/// Each class is shuffled independently and cut so that both parts hold at
/// least one example of it. Rows keep their original relative order.
pub fn split(
    dataset: &WeightedDataset,
    spec: &SplitSpec,
) -> Result<(WeightedDataset, WeightedDataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::with_capacity(dataset.len());
    let mut validation = Vec::new();
    for class in [Label::Signal, Label::Background] {
        let mut members: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels()[i] == class)
            .collect();
        if members.len() < 2 {
            return Err(Error::Split(format!(
                "class {class} has {} example(s); need at least 2 to populate both parts",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let wanted = (spec.validation_fraction * members.len() as f64).round() as usize;
        let n_val = wanted.clamp(1, members.len() - 1);
        validation.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    validation.sort_unstable();

    let mut train = dataset.subset(&train);
    let mut validation = dataset.subset(&validation);
    if spec.renormalize {
        let (sig, bkg) = dataset.class_totals();
        for part in [&mut train, &mut validation] {
            let (part_sig, part_bkg) = part.class_totals();
            *part = part.rescale_classes(sig / part_sig, bkg / part_bkg)?;
        }
    }
    Ok((train, validation))
}
