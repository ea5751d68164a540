//! Seeded 4:1 train/test partitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const TRAIN_RATIO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Samples are shuffled independently.
    ImageWise,
    /// Whole object categories go to one side.
    ObjectWise,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::ImageWise => "image_wise",
            SplitMode::ObjectWise => "object_wise",
        }
    }
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image_wise" | "image-wise" => Ok(Self::ImageWise),
            "object_wise" | "object-wise" => Ok(Self::ObjectWise),
            other => Err(Error::InvalidArgument(format!("unknown split mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
}

/// Indices into the input slice, each side sorted by sample id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(samples: &[Sample], spec: &SplitSpec) -> Result<SplitIndices> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("nothing to split".into()));
    }
    let n = samples.len();
    let mut rng = SplitMix64::new(spec.seed);
    let (mut train, mut test) = match spec.mode {
        SplitMode::ImageWise => {
            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            let n_train = (TRAIN_RATIO * n as f64).round() as usize;
            let test = order.split_off(n_train);
            (order, test)
        }
        SplitMode::ObjectWise => {
            let unlabeled: Vec<String> = samples
                .iter()
                .filter(|s| s.object_category.is_none())
                .map(|s| s.id.clone())
                .collect();
            if !unlabeled.is_empty() {
                return Err(Error::MissingCategories(unlabeled));
            }
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, s) in samples.iter().enumerate() {
                groups.entry(s.object_category.as_deref().unwrap()).or_default().push(i);
            }
            let mut cats: Vec<Vec<usize>> = groups.into_values().collect();
            // seeded order breaks ties between equally sized categories
            rng.shuffle(&mut cats);
            cats.sort_by_key(|c| std::cmp::Reverse(c.len()));
            let target = TRAIN_RATIO * n as f64;
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for c in cats {
                let now = train.len() as f64;
                if (now + c.len() as f64 - target).abs() < (now - target).abs() {
                    train.extend(c);
                } else {
                    test.extend(c);
                }
            }
            (train, test)
        }
    };
    let by_id = |a: &usize, b: &usize| samples[*a].id.cmp(&samples[*b].id).then(a.cmp(b));
    train.sort_by(by_id);
    test.sort_by(by_id);
    Ok(SplitIndices { train, test })
}

/// Partitions owned samples; see [`split_indices`].
pub fn split(samples: Vec<Sample>, spec: &SplitSpec) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let idx = split_indices(&samples, spec)?;
    let mut slots: Vec<Option<Sample>> = samples.into_iter().map(Some).collect();
    let mut take = |ids: &[usize]| ids.iter().map(|&i| slots[i].take().unwrap()).collect();
    let train = take(&idx.train);
    let test = take(&idx.test);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn labeled(n: usize, cats: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let mut s = Sample::new(format!("s{i:03}"), 10, 10);
                s.object_category = Some(format!("c{}", i % cats));
                s
            })
            .collect()
    }

    #[test]
    fn image_wise_ten_samples() {
        let idx = split_indices(&labeled(10, 3), &SplitSpec { mode: SplitMode::ImageWise, seed: 1 }).unwrap();
        assert_eq!((idx.train.len(), idx.test.len()), (8, 2));
    }

    #[test]
    fn object_wise_disjoint_categories() {
        let s = labeled(50, 13);
        let spec = SplitSpec { mode: SplitMode::ObjectWise, seed: 9 };
        let idx = split_indices(&s, &spec).unwrap();
        let cat = |i: &usize| s[*i].object_category.clone().unwrap();
        let train: HashSet<_> = idx.train.iter().map(cat).collect();
        let test: HashSet<_> = idx.test.iter().map(cat).collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(idx.train.len() + idx.test.len(), 50);
        assert!((idx.train.len() as i64 - 40).abs() <= 2, "{}", idx.train.len());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let s = labeled(40, 7);
        for mode in [SplitMode::ImageWise, SplitMode::ObjectWise] {
            let a = split_indices(&s, &SplitSpec { mode, seed: 7 }).unwrap();
            let b = split_indices(&s, &SplitSpec { mode, seed: 7 }).unwrap();
            assert_eq!(a, b);
        }
        let a = split_indices(&s, &SplitSpec { mode: SplitMode::ImageWise, seed: 7 }).unwrap();
        let c = split_indices(&s, &SplitSpec { mode: SplitMode::ImageWise, seed: 8 }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn errors() {
        let spec = SplitSpec { mode: SplitMode::ImageWise, seed: 0 };
        assert!(matches!(split_indices(&[], &spec), Err(Error::EmptyDataset(_))));
        let mut s = labeled(3, 2);
        s[1].object_category = None;
        let spec = SplitSpec { mode: SplitMode::ObjectWise, seed: 0 };
        assert!(matches!(split_indices(&s, &spec), Err(Error::MissingCategories(ids)) if ids == vec!["s001"]));
    }

    #[test]
    fn owned_split_keeps_every_sample() {
        let (train, test) = split(labeled(23, 5), &SplitSpec { mode: SplitMode::ObjectWise, seed: 3 }).unwrap();
        let mut ids: Vec<_> = train.iter().chain(&test).map(|s| s.id.clone()).collect();
        ids.sort();
        assert_eq!(ids, (0..23).map(|i| format!("s{i:03}")).collect::<Vec<_>>());
    }
}
