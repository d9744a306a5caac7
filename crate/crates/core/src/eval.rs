//! Segmentation scoring and ranking statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::{LabelMap, CLASS_NAMES, NUM_CLASSES, VOID};
use crate::raster::{check_dims, ScalarField};

/// Scene-distance bin edges in meters; the last bin is open.
pub const DEFAULT_BIN_EDGES: [f64; 9] = [0.0, 20.0, 50.0, 80.0, 120.0, 160.0, 230.0, 400.0, f64::INFINITY];

/// Ground truth rows, predictions columns. Void ground truth is skipped;
/// a void prediction on a labeled pixel counts as a miss for the true class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
    missed: [u64; NUM_CLASSES],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix {
            counts: [[0; NUM_CLASSES]; NUM_CLASSES],
            missed: [0; NUM_CLASSES],
        }
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, gt: u8, pred: u8) -> u64 {
        self.counts[gt as usize][pred as usize]
    }

    /// Labeled pixels of class `gt` predicted as void.
    pub fn missed(&self, gt: u8) -> u64 {
        self.missed[gt as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.missed.iter().sum::<u64>()
    }

    #[inline]
    fn add_pixel(&mut self, gt: u8, pred: u8) {
        if gt == VOID {
            return;
        }
        if pred == VOID {
            self.missed[gt as usize] += 1;
        } else {
            self.counts[gt as usize][pred as usize] += 1;
        }
    }

    pub fn accumulate(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        check_labels(pred, gt)?;
        for (&p, &g) in pred.ids().iter().zip(gt.ids()) {
            self.add_pixel(g, p);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in row.iter_mut().zip(orow) {
                *x += y;
            }
        }
        for (x, y) in self.missed.iter_mut().zip(&other.missed) {
            *x += y;
        }
    }

    /// `TP / (TP + FP + FN)`, or `None` when the class appears in neither
    /// prediction nor ground truth.
    pub fn iou(&self, class: u8) -> Option<f64> {
        let c = class as usize;
        let tp = self.counts[c][c];
        let fn_ = self.counts[c].iter().sum::<u64>() - tp + self.missed[c];
        let fp = self.counts.iter().map(|row| row[c]).sum::<u64>() - tp;
        let denom = tp + fp + fn_;
        (denom > 0).then(|| tp as f64 / denom as f64)
    }

    pub fn per_class_iou(&self) -> [Option<f64>; NUM_CLASSES] {
        std::array::from_fn(|c| self.iou(c as u8))
    }
}

fn check_labels(pred: &LabelMap, gt: &LabelMap) -> Result<()> {
    check_dims("prediction vs ground truth", (pred.width(), pred.height()), (gt.width(), gt.height()))
}

pub fn confusion_accumulate(pred: &LabelMap, gt: &LabelMap, cm: &mut ConfusionMatrix) -> Result<()> {
    cm.accumulate(pred, gt)
}

/// Mean IoU over the classes of `subset` that occur; absent classes are
/// dropped from the mean.
pub fn mean_iou(cm: &ConfusionMatrix, subset: &[u8]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::invalid("class subset is empty"));
    }
    if let Some(bad) = subset.iter().find(|&&c| c as usize >= NUM_CLASSES) {
        return Err(Error::invalid(format!("class {bad} is not an evaluation class")));
    }
    let scores: Vec<f64> = subset.iter().filter_map(|&c| cm.iou(c)).collect();
    if scores.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean IoU of a single image pair.
pub fn per_image_mean_iou(pred: &LabelMap, gt: &LabelMap, subset: &[u8]) -> Result<f64> {
    let mut cm = ConfusionMatrix::new();
    cm.accumulate(pred, gt)?;
    mean_iou(&cm, subset)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinScore {
    pub lo: f64,
    /// `None` stands for an unbounded bin.
    pub hi: Option<f64>,
    /// Non-void ground-truth pixels in the bin.
    pub pixels: u64,
    /// `None` when the bin holds no data.
    pub mean_iou: Option<f64>,
}

/// Accumulates one confusion matrix per distance bin `[lo, hi)`. Pixels
/// outside every bin are ignored.
#[derive(Debug, Clone)]
pub struct BinnedConfusion {
    edges: Vec<f64>,
    matrices: Vec<ConfusionMatrix>,
}

impl BinnedConfusion {
    pub fn new(edges: &[f64]) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid("need at least two bin edges"));
        }
        if edges.iter().any(|e| e.is_nan()) || edges.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::invalid(format!("bin edges must increase strictly: {edges:?}")));
        }
        Ok(BinnedConfusion {
            edges: edges.to_vec(),
            matrices: vec![ConfusionMatrix::new(); edges.len() - 1],
        })
    }

    fn bin_of(&self, x: f64) -> Option<usize> {
        // First edge strictly above x, minus one.
        let k = self.edges.partition_point(|&e| e <= x);
        (k >= 1 && k < self.edges.len()).then(|| k - 1)
    }

    pub fn accumulate(&mut self, pred: &LabelMap, gt: &LabelMap, distance: &ScalarField) -> Result<()> {
        check_labels(pred, gt)?;
        check_dims("labels vs distance", (gt.width(), gt.height()), (distance.width(), distance.height()))?;
        if !distance.is_complete() {
            return Err(Error::invalid("distance map must be complete"));
        }
        for ((&p, &g), &d) in pred.ids().iter().zip(gt.ids()).zip(distance.values()) {
            if let Some(b) = self.bin_of(d) {
                self.matrices[b].add_pixel(g, p);
            }
        }
        Ok(())
    }

    pub fn matrices(&self) -> &[ConfusionMatrix] {
        &self.matrices
    }

    pub fn scores(&self, subset: &[u8]) -> Result<Vec<BinScore>> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(k, cm)| {
                let score = match mean_iou(cm, subset) {
                    Ok(x) => Some(x),
                    Err(Error::NothingToEvaluate) => None,
                    Err(e) => return Err(e),
                };
                let hi = self.edges[k + 1];
                Ok(BinScore {
                    lo: self.edges[k],
                    hi: hi.is_finite().then_some(hi),
                    pixels: cm.total(),
                    mean_iou: score,
                })
            })
            .collect()
    }
}

/// Mean IoU within each distance bin of a single image.
pub fn distance_binned_iou(
    pred: &LabelMap,
    gt: &LabelMap,
    distance: &ScalarField,
    edges: &[f64],
    subset: &[u8],
) -> Result<Vec<BinScore>> {
    let mut binned = BinnedConfusion::new(edges)?;
    binned.accumulate(pred, gt, distance)?;
    binned.scores(subset)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassIou {
    pub id: u8,
    pub name: &'static str,
    /// `None` when the class is absent from both maps.
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_class_iou: Vec<ClassIou>,
    pub mean_iou_all: Option<f64>,
    pub mean_iou_frequent: Option<f64>,
    pub per_bin: Vec<BinScore>,
}

impl EvalReport {
    pub fn new(cm: &ConfusionMatrix, binned: Option<&BinnedConfusion>) -> Result<Self> {
        let optional = |r: Result<f64>| match r {
            Ok(x) => Ok(Some(x)),
            Err(Error::NothingToEvaluate) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(EvalReport {
            per_class_iou: CLASS_NAMES
                .iter()
                .zip(cm.per_class_iou())
                .enumerate()
                .map(|(id, (&name, iou))| ClassIou { id: id as u8, name, iou })
                .collect(),
            mean_iou_all: optional(mean_iou(cm, &crate::labels::all_classes()))?,
            mean_iou_frequent: optional(mean_iou(cm, &crate::labels::FREQUENT_CLASSES))?,
            per_bin: match binned {
                Some(b) => b.scores(&crate::labels::all_classes())?,
                None => Vec::new(),
            },
        })
    }
}

/// Paired-comparison tallies: `a[i][j]` counts how often option `i` was
/// preferred over option `j`; `m` subjects judged every comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseCounts {
    m: u64,
    a: Vec<Vec<u64>>,
}

impl PairwiseCounts {
    pub fn new(m: u64, a: Vec<Vec<u64>>) -> Result<Self> {
        let t = a.len();
        if m < 2 {
            return Err(Error::invalid(format!("agreement needs at least 2 subjects, got {m}")));
        }
        if t < 2 {
            return Err(Error::invalid("agreement needs at least 2 options"));
        }
        if a.iter().any(|row| row.len() != t) {
            return Err(Error::invalid("pairwise count matrix must be square"));
        }
        let mut per_pair = None;
        for i in 0..t {
            if a[i][i] != 0 {
                return Err(Error::invalid("pairwise count diagonal must be zero"));
            }
            for j in i + 1..t {
                let n = a[i][j] + a[j][i];
                if n == 0 || !n.is_multiple_of(m) || per_pair.is_some_and(|p| p != n) {
                    return Err(Error::invalid(format!(
                        "a[{i}][{j}] + a[{j}][{i}] = {n} is not the same positive multiple of m = {m} for every pair"
                    )));
                }
                per_pair = Some(n);
            }
        }
        Ok(PairwiseCounts { m, a })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn t(&self) -> usize {
        self.a.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.a[i][j]
    }
}

fn choose2(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

/// Coefficient of agreement as an exact fraction `(numerator, denominator)`.
pub fn agreement_fraction(counts: &PairwiseCounts) -> (i128, u128) {
    let sigma: u128 = counts.a.iter().flatten().map(|&x| choose2(x)).sum();
    let denom = choose2(counts.m) * choose2(counts.t() as u64);
    (2 * sigma as i128 - denom as i128, denom)
}

/// `mu = 2 sigma / (C(m,2) C(t,2)) - 1` with `sigma = sum C(a_ij, 2)`.
pub fn agreement_coefficient(counts: &PairwiseCounts) -> f64 {
    let (num, den) = agreement_fraction(counts);
    num as f64 / den as f64
}

/// Kendall's tau-b between two score lists over the same items, in
/// `O(n log n)`. Returns NaN when either list is constant.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("rankings differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::invalid("rankings contain NaN"));
    }
    let n = a.len() as u64;
    if n < 2 {
        return Err(Error::invalid("kendall tau needs at least two items"));
    }
    let mut pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));

    let tie_pairs = |eq: &dyn Fn(usize, usize) -> bool, len: usize| -> u64 {
        let (mut total, mut run) = (0u64, 1u64);
        for i in 1..len {
            if eq(i - 1, i) {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total + run * (run - 1) / 2
    };
    let len = pairs.len();
    let ties_a = tie_pairs(&|i, j| pairs[i].0 == pairs[j].0, len);
    let ties_joint = tie_pairs(&|i, j| pairs[i] == pairs[j], len);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_sort_count(&mut ys);
    let ties_b = tie_pairs(&|i, j| ys[i] == ys[j], len);

    let total = n * (n - 1) / 2;
    let numer = total as f64 - ties_a as f64 - ties_b as f64 + ties_joint as f64 - 2.0 * swaps as f64;
    let denom = ((total - ties_a) as f64 * (total - ties_b) as f64).sqrt();
    Ok(numer / denom)
}

/// Sorts ascending and returns the number of strict inversions.
fn merge_sort_count(xs: &mut [f64]) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_sort_count(&mut xs[..mid]) + merge_sort_count(&mut xs[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            merged.push(xs[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(xs[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&xs[i..mid]);
    merged.extend_from_slice(&xs[j..]);
    xs.copy_from_slice(&merged);
    swaps
}
