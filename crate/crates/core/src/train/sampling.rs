use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::VoteExample;

/// A binary-labeled example with a stable identity.
pub trait Labeled: Clone {
    fn id(&self) -> usize;
    fn label(&self) -> u8;
}

impl Labeled for VoteExample {
    fn id(&self) -> usize {
        self.id
    }

    fn label(&self) -> u8 {
        self.label
    }
}

#[derive(Debug, Clone)]
pub struct BalancedSplit<T> {
    /// Balanced training set (minority class resampled with replacement).
    pub train: Vec<T>,
    /// Balanced test set, resampled independently of `train`.
    pub test: Vec<T>,
    /// The test split before oversampling.
    pub test_original: Vec<T>,
}

/// Stratified split followed by independent minority oversampling within
/// each side.
///
/// Each class contributes `round(split_frac * n_class)` observations to the
/// training side, clamped so both sides keep at least one of every class.
pub fn split_and_oversample<T: Labeled>(data: &[T], split_frac: f64, seed: u64) -> Result<BalancedSplit<T>> {
    if !(split_frac > 0.0 && split_frac < 1.0) {
        return Err(Error::Config(format!("split fraction {split_frac} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: [Vec<&T>; 2] = [Vec::new(), Vec::new()];
    for x in data {
        match x.label() {
            0 => classes[0].push(x),
            1 => classes[1].push(x),
            l => return Err(Error::Data(format!("observation {} has label {l}", x.id()))),
        }
    }
    let (yes, no) = (classes[0].len(), classes[1].len());
    if yes < 2 || no < 2 {
        return Err(Error::ClassCoverage { yes, no });
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut train_by_class: [Vec<&T>; 2] = [Vec::new(), Vec::new()];
    let mut test_by_class: [Vec<&T>; 2] = [Vec::new(), Vec::new()];
    for (c, members) in classes.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let n = members.len();
        let k = ((split_frac * n as f64).round() as usize).clamp(1, n - 1);
        train_by_class[c] = members[..k].to_vec();
        test_by_class[c] = members[k..].to_vec();
    }
    let test_original: Vec<T> = test_by_class.iter().flatten().map(|x| (*x).clone()).collect();
    for (side, out) in [(&train_by_class, &mut train), (&test_by_class, &mut test)] {
        let target = side[0].len().max(side[1].len());
        for members in side.iter() {
            out.extend(members.iter().map(|x| (*x).clone()));
            for _ in members.len()..target {
                out.push((*members.choose(&mut rng).expect("class is nonempty")).clone());
            }
        }
        out.shuffle(&mut rng);
    }
    Ok(BalancedSplit { train, test, test_original })
}
