//! Deterministic 2-D toy dataset generators (moons, circles, blobs) with
//! stratified train/test splits and lossless CSV persistence.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::rng::CounterRng;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("n must be an even integer >= 4, got {0}")]
    InvalidCount(usize),
    #[error("noise must be >= 0, got {0}")]
    InvalidNoise(f64),
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DatasetName {
    Moons,
    Circles,
    BlobsClassification,
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetName::Moons => "moons",
            DatasetName::Circles => "circles",
            DatasetName::BlobsClassification => "blobs-classification",
        };
        f.write_str(s)
    }
}

impl FromStr for DatasetName {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "moons" => Ok(DatasetName::Moons),
            "circles" => Ok(DatasetName::Circles),
            "blobs" | "blobs-classification" => Ok(DatasetName::BlobsClassification),
            other => Err(DataError::UnknownDataset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Labeled 2-D point cloud. Regeneration with the same `(name, n, noise,
/// seed)` is bitwise identical, and the CSV round-trip is lossless.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: DatasetName,
    pub noise: f64,
    pub seed: u64,
    pub features: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    pub split: Vec<Split>,
}

/// Radius of the inner circle relative to the outer one.
pub const CIRCLES_RATIO: f64 = 0.5;
/// Vertical offset between the two interleaved half-circles.
pub const MOON_OFFSET: f64 = 0.5;

const BLOB_CENTERS: [[f64; 2]; 2] = [[-1.25, 0.0], [1.25, 0.0]];
const BLOB_BASE_STD: f64 = 0.35;

pub fn generate(name: DatasetName, n: usize, noise: f64, seed: u64) -> Result<Dataset, DataError> {
    if n < 4 || n % 2 != 0 {
        return Err(DataError::InvalidCount(n));
    }
    if !(noise >= 0.0) {
        return Err(DataError::InvalidNoise(noise));
    }
    let per_class = n / 2;
    let rng = CounterRng::new(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for class in 0..2u8 {
        let jitter = rng.substream(class as u64);
        for i in 0..per_class {
            // parameter runs over [0, 1) so the noiseless point lies exactly
            // on the class's parametric curve
            let t = i as f64 / per_class as f64;
            let base = match name {
                DatasetName::Moons => moon_point(class, t),
                DatasetName::Circles => circle_point(class, t),
                DatasetName::BlobsClassification => BLOB_CENTERS[class as usize],
            };
            // circles scale the jitter by the class radius so the rings stay
            // separable at the default noise level; moons use the absolute
            // convention
            let spread = match name {
                DatasetName::BlobsClassification => BLOB_BASE_STD + noise,
                DatasetName::Circles => {
                    let r = if class == 0 { 1.0 } else { CIRCLES_RATIO };
                    0.5 * noise * r
                }
                DatasetName::Moons => noise,
            };
            let idx = 2 * i as u64;
            features.push([
                base[0] + spread * jitter.normal(idx),
                base[1] + spread * jitter.normal(idx + 1),
            ]);
            labels.push(class);
        }
    }
    let split = stratified_split(&labels, rng.substream(2));
    Ok(Dataset {
        name,
        noise,
        seed,
        features,
        labels,
        split,
    })
}

fn moon_point(class: u8, t: f64) -> [f64; 2] {
    let theta = std::f64::consts::PI * t;
    if class == 0 {
        [theta.cos(), theta.sin()]
    } else {
        [1.0 - theta.cos(), MOON_OFFSET - theta.sin()]
    }
}

fn circle_point(class: u8, t: f64) -> [f64; 2] {
    let theta = 2.0 * std::f64::consts::PI * t;
    let r = if class == 0 { 1.0 } else { CIRCLES_RATIO };
    [r * theta.cos(), r * theta.sin()]
}

/// 80/20 split with exact per-class proportions: within each class the
/// indices are shuffled deterministically and the first 20% become test.
fn stratified_split(labels: &[u8], rng: CounterRng) -> Vec<Split> {
    let mut split = vec![Split::Train; labels.len()];
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.substream(class as u64).shuffle(&mut members);
        let test_count = members.len() / 5;
        for &i in members.iter().take(test_count) {
            split[i] = Split::Test;
        }
    }
    split
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, which: Split) -> (Vec<[f64; 2]>, Vec<u8>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..self.len() {
            if self.split[i] == which {
                xs.push(self.features[i]);
                ys.push(self.labels[i]);
            }
        }
        (xs, ys)
    }

    /// Per-feature mean and std over the training split, for standardizing
    /// inputs before the first layer.
    pub fn train_stats(&self) -> ([f64; 2], [f64; 2]) {
        let (xs, _) = self.subset(Split::Train);
        let n = xs.len().max(1) as f64;
        let mut mean = [0.0f64; 2];
        for x in &xs {
            mean[0] += x[0];
            mean[1] += x[1];
        }
        mean[0] /= n;
        mean[1] /= n;
        let mut var = [0.0f64; 2];
        for x in &xs {
            var[0] += (x[0] - mean[0]).powi(2);
            var[1] += (x[1] - mean[1]).powi(2);
        }
        let std = [(var[0] / n).sqrt().max(1e-12), (var[1] / n).sqrt().max(1e-12)];
        (mean, std)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DataError> {
        let mut out = String::from("x1,x2,label,split\n");
        for i in 0..self.len() {
            let tag = match self.split[i] {
                Split::Train => "train",
                Split::Test => "test",
            };
            // 17 significant digits round-trips f64 exactly
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{}\n",
                self.features[i][0], self.features[i][1], self.labels[i], tag
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load_csv(path: &Path, name: DatasetName, noise: f64, seed: u64) -> Result<Dataset, DataError> {
        let text = std::fs::read_to_string(path)?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut split = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                continue;
            }
            let parse = |detail: &str| DataError::Parse {
                line: lineno + 1,
                detail: detail.to_string(),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(parse("expected 4 columns"));
            }
            let x1: f64 = cols[0].parse().map_err(|_| parse("bad x1"))?;
            let x2: f64 = cols[1].parse().map_err(|_| parse("bad x2"))?;
            let label: u8 = cols[2].parse().map_err(|_| parse("bad label"))?;
            let tag = match cols[3] {
                "train" => Split::Train,
                "test" => Split::Test,
                _ => return Err(parse("bad split tag")),
            };
            features.push([x1, x2]);
            labels.push(label);
            split.push(tag);
        }
        Ok(Dataset {
            name,
            noise,
            seed,
            features,
            labels,
            split,
        })
    }
}

/// Nearest-centroid classifier accuracy, used as a noise smoke test. Works
/// in the lifted feature space (x1, x2, x1^2 + x2^2) so radially separated
/// classes (circles) are reachable by the centroid rule.
pub fn nearest_centroid_accuracy(data: &Dataset) -> f64 {
    let lift = |x: &[f64; 2]| [x[0], x[1], x[0] * x[0] + x[1] * x[1]];
    let (train_x, train_y) = data.subset(Split::Train);
    let mut centroids = [[0.0f64; 3]; 2];
    let mut counts = [0usize; 2];
    for (x, &y) in train_x.iter().zip(&train_y) {
        let f = lift(x);
        for k in 0..3 {
            centroids[y as usize][k] += f[k];
        }
        counts[y as usize] += 1;
    }
    for c in 0..2 {
        for k in 0..3 {
            centroids[c][k] /= counts[c].max(1) as f64;
        }
    }
    let (test_x, test_y) = data.subset(Split::Test);
    let mut hits = 0usize;
    for (x, &y) in test_x.iter().zip(&test_y) {
        let f = lift(x);
        let dist = |c: &[f64; 3]| -> f64 {
            (0..3).map(|k| (f[k] - c[k]).powi(2)).sum::<f64>()
        };
        let pred = if dist(&centroids[1]) < dist(&centroids[0]) {
            1u8
        } else {
            0u8
        };
        if pred == y {
            hits += 1;
        }
    }
    hits as f64 / test_x.len().max(1) as f64
}
