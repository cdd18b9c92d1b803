//! Synthetic regression data and mini-batch sampling.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Which side of the train/validation partition a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitTag::Train => write!(f, "train"),
            SplitTag::Val => write!(f, "val"),
        }
    }
}

/// A scalar-input regression dataset with a fixed train/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    tags: Vec<SplitTag>,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
}

impl Dataset {
    fn from_parts(xs: Vec<f64>, ys: Vec<f64>, tags: Vec<SplitTag>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() != tags.len() {
            return Err(Error::structural(format!(
                "dataset columns disagree in length: {} xs, {} ys, {} tags",
                xs.len(),
                ys.len(),
                tags.len()
            )));
        }
        if xs.is_empty() {
            return Err(Error::domain("dataset must contain at least one sample"));
        }
        let mut train_idx = Vec::new();
        let mut val_idx = Vec::new();
        for (i, tag) in tags.iter().enumerate() {
            match tag {
                SplitTag::Train => train_idx.push(i),
                SplitTag::Val => val_idx.push(i),
            }
        }
        Ok(Dataset {
            xs,
            ys,
            tags,
            train_idx,
            val_idx,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xs[i]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn tag(&self, i: usize) -> SplitTag {
        self.tags[i]
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn val_indices(&self) -> &[usize] {
        &self.val_idx
    }

    pub fn train_len(&self) -> usize {
        self.train_idx.len()
    }

    pub fn val_len(&self) -> usize {
        self.val_idx.len()
    }

    /// Writes the dataset as CSV with columns `x,y,split`. Floats are
    /// printed with 17 significant digits so a later import reproduces the
    /// dataset bit-for-bit.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "x,y,split")?;
        for i in 0..self.len() {
            writeln!(w, "{:.16e},{:.16e},{}", self.xs[i], self.ys[i], self.tags[i])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dataset previously written by [`Dataset::to_csv`].
    pub fn from_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("dataset csv is empty"))??;
        if header.trim() != "x,y,split" {
            return Err(Error::parse(format!(
                "unexpected dataset csv header: {header:?}"
            )));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut tags = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let x = parse_float(fields.next(), lineno + 2, "x")?;
            let y = parse_float(fields.next(), lineno + 2, "y")?;
            let tag = match fields.next().map(str::trim) {
                Some("train") => SplitTag::Train,
                Some("val") => SplitTag::Val,
                other => {
                    return Err(Error::parse(format!(
                        "line {}: bad split tag {:?}",
                        lineno + 2,
                        other
                    )))
                }
            };
            if fields.next().is_some() {
                return Err(Error::parse(format!(
                    "line {}: expected 3 fields",
                    lineno + 2
                )));
            }
            xs.push(x);
            ys.push(y);
            tags.push(tag);
        }
        Dataset::from_parts(xs, ys, tags)
    }
}

fn parse_float(field: Option<&str>, lineno: usize, name: &str) -> Result<f64> {
    let raw = field.ok_or_else(|| Error::parse(format!("line {lineno}: missing column {name}")))?;
    raw.trim()
        .parse::<f64>()
        .map_err(|e| Error::parse(format!("line {lineno}: bad {name} value {raw:?}: {e}")))
}

/// Draws a noisy sine-regression dataset: inputs uniform on `(-10, 10)`,
/// targets `sin(x)` plus Gaussian noise of the given standard deviation.
///
/// `n_train` fixes the training-set size; the full dataset holds
/// `round(n_train / 0.8)` samples so that validation gets the remaining
/// one-fifth. Draw order is fixed (all inputs, then all noise, then the
/// split assignment), so a seed pins the dataset exactly.
pub fn sin_dataset(n_train: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n_train == 0 {
        return Err(Error::domain("sin dataset needs at least one training sample"));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::domain(format!(
            "noise standard deviation must be finite and non-negative (got {noise_sd})"
        )));
    }
    let total = (n_train as f64 / 0.8).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = Vec::with_capacity(total);
    for _ in 0..total {
        xs.push(rng.random_range(-10.0..10.0));
    }
    let noise = Normal::new(0.0, noise_sd)
        .map_err(|e| Error::domain(format!("bad noise distribution: {e}")))?;
    let mut ys = Vec::with_capacity(total);
    for &x in &xs {
        ys.push(x.sin() + noise.sample(&mut rng));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let mut tags = vec![SplitTag::Val; total];
    for &i in order.iter().take(n_train) {
        tags[i] = SplitTag::Train;
    }
    Dataset::from_parts(xs, ys, tags)
}

/// Draws mini-batches from a dataset's training split in shuffled epochs:
/// every training index appears exactly once per epoch, the final batch of
/// an epoch may be short, and each new epoch is reshuffled.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    batch_size: usize,
    cursor: usize,
    epoch: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(dataset: &Dataset, batch_size: usize, mut rng: ChaCha8Rng) -> Result<Self> {
        let n = dataset.train_len();
        if batch_size == 0 || batch_size > n {
            return Err(Error::domain(format!(
                "batch size must lie in 1..={n} (got {batch_size})"
            )));
        }
        let mut order = dataset.train_indices().to_vec();
        order.shuffle(&mut rng);
        Ok(BatchSampler {
            order,
            batch_size,
            cursor: 0,
            epoch: 0,
            rng,
        })
    }

    pub fn new_seeded(dataset: &Dataset, batch_size: usize, seed: u64) -> Result<Self> {
        BatchSampler::new(dataset, batch_size, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }

    /// Zero-based index of the epoch the *next* batch belongs to.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Returns the next batch of dataset indices, reshuffling at epoch
    /// boundaries.
    pub fn next_batch(&mut self) -> &[usize] {
        if self.cursor >= self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
            self.epoch += 1;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = &self.order[self.cursor..end];
        self.cursor = end;
        batch
    }
}
