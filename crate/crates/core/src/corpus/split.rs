use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{label_counts, ClassList, LabeledExample};
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |f: f64| (0.0..1.0).contains(&f);
        if !ok(self.dev_fraction)
            || !ok(self.test_fraction)
            || self.dev_fraction + self.test_fraction >= 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "split fractions dev={} test={} must lie in [0,1) and sum below 1",
                self.dev_fraction, self.test_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// The `manifest.json` written next to the split files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub spec: SplitSpec,
    pub classes: ClassList,
    pub per_class: Vec<SubsetCounts>,
    pub totals: SubsetCounts,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn manifest(&self, spec: SplitSpec, classes: &ClassList) -> SplitManifest {
        let mut per_class = vec![SubsetCounts::default(); classes.len()];
        let grow = |v: &mut Vec<SubsetCounts>, l: usize| {
            if v.len() <= l {
                v.resize(l + 1, SubsetCounts::default());
            }
        };
        for e in &self.train {
            grow(&mut per_class, e.label);
            per_class[e.label].train += 1;
        }
        for e in &self.dev {
            grow(&mut per_class, e.label);
            per_class[e.label].dev += 1;
        }
        for e in &self.test {
            grow(&mut per_class, e.label);
            per_class[e.label].test += 1;
        }
        SplitManifest {
            spec,
            classes: classes.clone(),
            per_class,
            totals: SubsetCounts {
                train: self.train.len(),
                dev: self.dev.len(),
                test: self.test.len(),
            },
        }
    }
}

fn rounded(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction).round() as usize
}

/// Per-class quotas for one subset. Each class gets floor(exact), classes with
/// a zero floor are lifted to one so every class is represented, then the
/// remaining slots up to `target` go to the largest fractional remainders.
/// No class exceeds `capacity[c]`.
fn apportion(sizes: &[usize], fraction: f64, target: usize, capacity: &[usize]) -> Vec<usize> {
    if fraction == 0.0 {
        return vec![0; sizes.len()];
    }
    let mut quota = Vec::with_capacity(sizes.len());
    let mut lifted = vec![false; sizes.len()];
    for (c, &n) in sizes.iter().enumerate() {
        let base = (n as f64 * fraction).floor() as usize;
        let q = if base == 0 && n > 0 {
            lifted[c] = true;
            1
        } else {
            base
        };
        quota.push(q.min(capacity[c]));
    }
    let assigned: usize = quota.iter().sum();
    let mut remaining = target.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..sizes.len())
        .filter(|&c| !lifted[c] && sizes[c] > 0)
        .collect();
    let remainder = |c: usize| {
        let exact = sizes[c] as f64 * fraction;
        exact - exact.floor()
    };
    order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)).then(a.cmp(&b)));
    for c in order {
        if remaining == 0 {
            break;
        }
        if remainder(c) > 0.0 && quota[c] < capacity[c] {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    quota
}

/// Deterministic train/dev/test split.
///
/// Dev and test sizes are `round(n * fraction)`; train gets the remainder.
/// With `stratified`, each class is shuffled with its own seeded stream and
/// sliced so its share of each subset is within one example of exact
/// proportionality (and at least one example when the fraction is nonzero).
/// Within each subset, examples keep their input order.
pub fn split_dataset(examples: &[LabeledExample], spec: &SplitSpec) -> Result<DatasetSplit> {
    spec.validate()?;
    let n = examples.len();
    let mut assignment = vec![0u8; n]; // 0 train, 1 dev, 2 test

    if spec.stratified {
        let counts = label_counts(examples);
        if let Some((class, &count)) = counts
            .iter()
            .enumerate()
            .find(|(_, &c)| c > 0 && c < 3)
        {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count,
            });
        }
        let test_reserve = usize::from(spec.test_fraction > 0.0);
        let dev_capacity: Vec<usize> = counts
            .iter()
            .map(|&c| c.saturating_sub(1 + test_reserve))
            .collect();
        let dev_quota = apportion(
            &counts,
            spec.dev_fraction,
            rounded(n, spec.dev_fraction),
            &dev_capacity,
        );
        let test_capacity: Vec<usize> = counts
            .iter()
            .zip(&dev_quota)
            .map(|(&c, &d)| c.saturating_sub(1 + d))
            .collect();
        let test_quota = apportion(
            &counts,
            spec.test_fraction,
            rounded(n, spec.test_fraction),
            &test_capacity,
        );

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); counts.len()];
        for (i, e) in examples.iter().enumerate() {
            members[e.label].push(i);
        }
        for (class, idx) in members.iter_mut().enumerate() {
            idx.shuffle(&mut rng_from(spec.seed, &[class as u64]));
            let (dev, rest) = idx.split_at(dev_quota[class]);
            for &i in dev {
                assignment[i] = 1;
            }
            for &i in &rest[..test_quota[class]] {
                assignment[i] = 2;
            }
        }
    } else {
        let n_dev = rounded(n, spec.dev_fraction);
        let n_test = rounded(n, spec.test_fraction);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_from(spec.seed, &[]));
        for &i in &order[..n_dev] {
            assignment[i] = 1;
        }
        for &i in &order[n_dev..n_dev + n_test] {
            assignment[i] = 2;
        }
    }

    let mut split = DatasetSplit::default();
    for (e, &a) in examples.iter().zip(&assignment) {
        match a {
            0 => split.train.push(e.clone()),
            1 => split.dev.push(e.clone()),
            _ => split.test.push(e.clone()),
        }
    }
    Ok(split)
}
