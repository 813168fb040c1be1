use crate::error::{Error, Result};

/// Symmetric binary matrix over `n` segments, stored densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl SimilarityMatrix {
    /// Fails with a validation error when `entries` is not `n × n` or not symmetric.
    pub fn new(n: usize, entries: Vec<bool>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Validation(format!(
                "similarity matrix over {n} items needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::Validation(format!("similarity matrix is asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SimilarityMatrix { n, entries })
    }

    /// Entry (i, j) is set iff items i and j carry equal labels.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let n = labels.len();
        let mut entries = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = labels[i] == labels[j];
            }
        }
        SimilarityMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    /// Number of similar unordered pairs `i < j`.
    pub fn similar_pairs(&self) -> usize {
        (0..self.n)
            .map(|i| (i + 1..self.n).filter(|&j| self.get(i, j)).count())
            .sum()
    }
}

/// Pair-agreement counts over unordered pairs `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn pair_counts(reference: &SimilarityMatrix, predicted: &SimilarityMatrix) -> Result<PairCounts> {
    if reference.n != predicted.n {
        return Err(Error::Validation(format!(
            "similarity matrices differ in size: {} vs {}",
            reference.n, predicted.n
        )));
    }
    let mut c = PairCounts::default();
    for i in 0..reference.n {
        for j in i + 1..reference.n {
            match (reference.get(i, j), predicted.get(i, j)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(c)
}

/// (TP + TN) / (TP + FP + FN + TN) over unordered off-diagonal pairs.
pub fn rand_index(reference: &SimilarityMatrix, predicted: &SimilarityMatrix) -> Result<f64> {
    if reference.n < 2 {
        return Err(Error::UndefinedMetric("rand index needs at least two items".into()));
    }
    let c = pair_counts(reference, predicted)?;
    let total = c.tp + c.fp + c.fn_ + c.tn;
    Ok((c.tp + c.tn) as f64 / total as f64)
}

/// Rand index between two labelings without materializing matrices.
pub fn rand_index_labels<A: PartialEq, B: PartialEq>(reference: &[A], predicted: &[B]) -> Result<f64> {
    if reference.len() != predicted.len() {
        return Err(Error::Validation("labelings differ in length".into()));
    }
    let n = reference.len();
    if n < 2 {
        return Err(Error::UndefinedMetric("rand index needs at least two items".into()));
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (reference[i] == reference[j]) == (predicted[i] == predicted[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC AUC needs both classes ({pos} positives, {neg} negatives)"
        )));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve as the Mann–Whitney statistic with average
/// ranks for ties: P(s⁺ > s⁻) + ½·P(s⁺ = s⁻).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // rank sums are kept doubled so tied groups stay integral
    let mut pos_rank2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 averaged, doubled
        let avg2 = (i + 1 + j + 1) as u128;
        let p = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        pos_rank2 += avg2 * p;
        i = j + 1;
    }
    let (pos, neg) = (pos as u128, neg as u128);
    let u2 = pos_rank2 - pos * (pos + 1);
    Ok(u2 as f64 / (2 * pos * neg) as f64)
}

/// ROC curve points, one per distinct threshold, from (0,0) to (1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub thresholds: Vec<f64>,
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let (pos, neg) = check_binary(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut curve = RocCurve {
        fpr: vec![0.0],
        tpr: vec![0.0],
        thresholds: vec![f64::INFINITY],
    };
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.fpr.push(fp as f64 / neg as f64);
        curve.tpr.push(tp as f64 / pos as f64);
        curve.thresholds.push(s);
    }
    Ok(curve)
}

impl RocCurve {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["fpr", "tpr", "threshold"])?;
        for k in 0..self.fpr.len() {
            w.write_record([
                self.fpr[k].to_string(),
                self.tpr[k].to_string(),
                self.thresholds[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Trapezoidal area; equals `roc_auc` on the same data.
    pub fn area(&self) -> f64 {
        self.fpr
            .windows(2)
            .zip(self.tpr.windows(2))
            .map(|(f, t)| (f[1] - f[0]) * (t[1] + t[0]) / 2.0)
            .sum()
    }
}

/// Per-type one-vs-rest AUCs; `None` where a type lacks one of the classes.
pub fn per_type_auc(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<Vec<Option<f64>>> {
    if scores.len() != labels.len() {
        return Err(Error::Shape("score and label type counts differ".into()));
    }
    scores
        .iter()
        .zip(labels)
        .map(|(s, l)| match roc_auc(s, l) {
            Ok(v) => Ok(Some(v)),
            Err(Error::UndefinedMetric(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Unweighted mean of the per-type AUCs that are defined.
pub fn multiclass_auc(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<f64> {
    macro_mean(&per_type_auc(scores, labels)?)
}

pub fn macro_mean(aucs: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::UndefinedMetric("no accident type has both classes".into()));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn rand_index_examples() {
        let r = SimilarityMatrix::from_labels(&[0, 0, 1]);
        let p = SimilarityMatrix::from_labels(&[0, 1, 1]);
        // (0,1) FN, (0,2) TN, (1,2) FP
        assert_eq!(
            pair_counts(&r, &p).unwrap(),
            PairCounts { tp: 0, fp: 1, fn_: 1, tn: 1 }
        );
        assert!((rand_index(&r, &p).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index(&r, &r).unwrap(), 1.0);

        let n = 4;
        let base = SimilarityMatrix::from_labels(&[0, 0, 1, 2]);
        let comp: Vec<bool> = (0..n * n)
            .map(|k| if k / n == k % n { true } else { !base.entries[k] })
            .collect();
        let comp = SimilarityMatrix::new(n, comp).unwrap();
        assert_eq!(rand_index(&base, &comp).unwrap(), 0.0);
    }

    #[test]
    fn asymmetric_rejected() {
        let e = vec![true, true, false, true];
        assert!(matches!(SimilarityMatrix::new(2, e), Err(Error::Validation(_))));
        let a = SimilarityMatrix::from_labels(&[0, 1]);
        let b = SimilarityMatrix::from_labels(&[0, 1, 2]);
        assert!(matches!(rand_index(&a, &b), Err(Error::Validation(_))));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn auc_matches_pair_oracle() {
        let mut r = rng::rng(11);
        for _ in 0..200 {
            let n = r.random_range(2..=30);
            let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            // coarse grid forces ties
            let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64 / 4.0).collect();
            let auc = roc_auc(&scores, &labels).unwrap();
            assert_eq!(auc, brute_auc(&scores, &labels));
            let curve = roc_curve(&scores, &labels).unwrap();
            assert!((curve.area() - auc).abs() < 1e-12);
        }
    }

    #[test]
    fn multiclass_skips_degenerate() {
        let s = vec![
            vec![0.9, 0.1, 0.8, 0.2],
            vec![0.9, 0.1, 0.1, 0.9],
            vec![0.1; 4],
        ];
        let l = vec![
            vec![true, false, true, false],
            vec![true, false, true, false],
            vec![false; 4],
        ];
        let per = per_type_auc(&s, &l).unwrap();
        assert_eq!(per, vec![Some(1.0), Some(0.5), None]);
        assert_eq!(multiclass_auc(&s, &l).unwrap(), 0.75);
        assert!(matches!(
            multiclass_auc(&s[2..], &l[2..]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn random_scores_average_one_half() {
        let mut r = rng::rng(5);
        let mut total = 0.0;
        for _ in 0..50 {
            let scores: Vec<Vec<f64>> = (0..6).map(|_| (0..200).map(|_| r.random()).collect()).collect();
            let labels: Vec<Vec<bool>> = (0..6).map(|_| (0..200).map(|i| i % 2 == 0).collect()).collect();
            total += multiclass_auc(&scores, &labels).unwrap();
        }
        assert!((total / 50.0 - 0.5).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn auc_antisymmetric(scores in prop::collection::vec(-5i32..5, 2..40), bits in prop::collection::vec(any::<bool>(), 40)) {
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let mut labels: Vec<bool> = bits[..scores.len()].to_vec();
            labels[0] = true;
            labels[1] = false;
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let a = roc_auc(&scores, &labels).unwrap();
            let b = roc_auc(&neg, &labels).unwrap();
            prop_assert_eq!(a + b, 1.0);
            let cubed: Vec<f64> = scores.iter().map(|s| s * s * s + 3.0).collect();
            prop_assert_eq!(roc_auc(&cubed, &labels).unwrap(), a);
        }

        #[test]
        fn rand_index_symmetric(a in prop::collection::vec(0u8..3, 2..25), b in prop::collection::vec(0u8..3, 25)) {
            let b = &b[..a.len()];
            let ma = SimilarityMatrix::from_labels(&a);
            let mb = SimilarityMatrix::from_labels(b);
            let ab = rand_index(&ma, &mb).unwrap();
            prop_assert_eq!(ab, rand_index(&mb, &ma).unwrap());
            prop_assert_eq!(ab, rand_index_labels(&a, b).unwrap());
            prop_assert_eq!(ab == 1.0, ma == mb);
        }
    }
}
