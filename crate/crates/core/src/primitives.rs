//! Feature-space primitives: datasets, hyperplane discriminants and the sign
//! decision rule.
//!
//! Feature vectors are plain `f64` slices. Every dataset constructor checks
//! that rows share one dimensionality and hold only finite values.

use crate::error::{check_dim, Error, Result};

/// Tolerance used when deciding that a vector has no usable direction.
const ZERO_NORM: f64 = 1e-300;

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot_unchecked(x, x).sqrt()
}

/// Orthogonal projection of `v` onto the line spanned by `n`.
pub fn project_onto_normal(v: &[f64], n: &[f64]) -> Result<Vec<f64>> {
    check_dim(n.len(), v.len())?;
    let nn = dot_unchecked(n, n);
    if !(nn > ZERO_NORM) {
        return Err(Error::Degenerate("projection onto a zero normal".into()));
    }
    let scale = dot_unchecked(v, n) / nn;
    Ok(n.iter().map(|ni| scale * ni).collect())
}

/// Arithmetic mean of a set of rows, `None` when the set is empty.
pub(crate) fn mean_of<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; dim];
    let mut count = 0usize;
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
        count += 1;
    }
    (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
}

/// Class label of a binary problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryLabel {
    Negative,
    Positive,
}

impl BinaryLabel {
    /// The label as the real number -1 or +1.
    pub fn value(self) -> f64 {
        match self {
            BinaryLabel::Negative => -1.0,
            BinaryLabel::Positive => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BinaryLabel::Negative => BinaryLabel::Positive,
            BinaryLabel::Positive => BinaryLabel::Negative,
        }
    }

    /// Sign decision rule. A score of `+0.0` maps to `Positive`.
    ///
    /// The IEEE sign bit is used rather than `< 0.0`, so a negative score that
    /// underflowed to `-0.0` inside a bounded transform keeps its class.
    /// Linear discriminants never produce `-0.0` (see [`LinearModel::discriminant`]).
    pub fn from_score(score: f64) -> Self {
        if score.is_sign_negative() {
            BinaryLabel::Negative
        } else {
            BinaryLabel::Positive
        }
    }
}

/// A decision hyperplane `<n, x> + b = 0` with unit normal `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    normal: Vec<f64>,
    offset: f64,
}

impl LinearModel {
    /// Builds a model from an arbitrary (non-zero) weight vector and bias.
    /// Both are divided by the weight norm, which leaves every decision unchanged.
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Degenerate("empty weight vector".into()));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Degenerate(
                "non-finite hyperplane coefficients".into(),
            ));
        }
        let len = norm(&weights);
        if !(len > ZERO_NORM) || !len.is_finite() {
            return Err(Error::Degenerate(
                "hyperplane normal has zero length".into(),
            ));
        }
        let normal = weights.into_iter().map(|w| w / len).collect();
        // `+ 0.0` folds a negative zero offset into positive zero.
        Ok(LinearModel {
            normal,
            offset: bias / len + 0.0,
        })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed distance from `x` to the plane.
    pub fn discriminant(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.normal.len(), x.len())?;
        Ok(self.discriminant_unchecked(x))
    }

    #[inline]
    pub(crate) fn discriminant_unchecked(&self, x: &[f64]) -> f64 {
        dot_unchecked(&self.normal, x) + self.offset + 0.0
    }

    pub fn classify(&self, x: &[f64]) -> Result<BinaryLabel> {
        self.discriminant(x).map(BinaryLabel::from_score)
    }

    /// The same plane with the opposite orientation.
    pub fn negated(&self) -> Self {
        LinearModel {
            normal: self.normal.iter().map(|v| -v).collect(),
            offset: -self.offset + 0.0,
        }
    }
}

fn validate_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Data("dataset has no instances".into()))?;
    if dim == 0 {
        return Err(Error::Data("feature vectors are empty".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Data(format!(
                "row {i} has {} features, expected {dim}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i}, feature {j} is not finite")));
        }
    }
    Ok(dim)
}

/// A two-class training set.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<BinaryLabel>,
    dim: usize,
}

impl BinaryDataset {
    /// Does not require both classes to be present; trainers check that.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<BinaryLabel>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let dim = validate_rows(&rows)?;
        Ok(BinaryDataset { rows, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[BinaryLabel] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], BinaryLabel)> + '_ {
        self.rows
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    pub fn class_rows(&self, label: BinaryLabel) -> impl Iterator<Item = &[f64]> + '_ {
        self.iter()
            .filter(move |(_, l)| *l == label)
            .map(|(x, _)| x)
    }

    pub fn count(&self, label: BinaryLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        BinaryDataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// Copy with every label swapped.
    pub fn relabeled(&self) -> Self {
        BinaryDataset {
            rows: self.rows.clone(),
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
            dim: self.dim,
        }
    }

    /// Fails unless both classes hold at least `min_per_class` instances.
    pub fn require_classes(&self, min_per_class: usize) -> Result<()> {
        for label in [BinaryLabel::Positive, BinaryLabel::Negative] {
            let count = self.count(label);
            if count < min_per_class {
                return Err(Error::Training(format!(
                    "class {label:?} has {count} instances, at least {min_per_class} required"
                )));
            }
        }
        Ok(())
    }
}

/// A multiclass dataset. Labels are indices into `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if class_names.len() < 2 {
            return Err(Error::Data(format!(
                "at least 2 classes required, found {}",
                class_names.len()
            )));
        }
        let dim = validate_rows(&rows)?;
        if let Some(bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Data(format!("label index {bad} out of range")));
        }
        Ok(LabeledDataset {
            rows,
            labels,
            class_names,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`; the class list is kept whole.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            dim: self.dim,
        }
    }

    /// Same labels, new feature rows (e.g. after a fitted transform).
    pub fn with_rows(&self, rows: Vec<Vec<f64>>) -> Result<Self> {
        LabeledDataset::new(rows, self.labels.clone(), self.class_names.clone())
    }

    /// Instances of classes `positive` and `negative` as a binary problem.
    pub fn binary_pair(&self, positive: usize, negative: usize) -> Result<BinaryDataset> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (x, &l) in self.rows.iter().zip(&self.labels) {
            if l == positive {
                rows.push(x.clone());
                labels.push(BinaryLabel::Positive);
            } else if l == negative {
                rows.push(x.clone());
                labels.push(BinaryLabel::Negative);
            }
        }
        if rows.is_empty() {
            return Err(Error::Data(format!(
                "classes {positive} and {negative} have no instances"
            )));
        }
        BinaryDataset::new(rows, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(matches!(
            dot(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(norm(&[0.0, 0.0, 0.0]), 0.0);
        let m = LinearModel::new(vec![3.0, -7.0, 0.5], 2.0).unwrap();
        assert!((norm(m.normal()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn discriminant_examples() {
        let m = LinearModel::new(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(m.discriminant(&[2.0, 5.0]).unwrap(), 2.0);
        assert_eq!(m.discriminant(&[0.0, 5.0]).unwrap(), 0.0);
        let m = LinearModel::new(vec![1.0, 0.0], -1.0).unwrap();
        assert_eq!(m.discriminant(&[0.0, 0.0]).unwrap(), -1.0);
        assert!(m.discriminant(&[0.0]).is_err());
    }

    #[test]
    fn classify_sign_rule() {
        assert_eq!(BinaryLabel::from_score(2.3), BinaryLabel::Positive);
        assert_eq!(BinaryLabel::from_score(-0.1), BinaryLabel::Negative);
        assert_eq!(BinaryLabel::from_score(0.0), BinaryLabel::Positive);
        // A point on the plane, including one reached with a negative-zero product.
        let m = LinearModel::new(vec![-1.0, 0.0], 0.0).unwrap();
        assert_eq!(
            m.discriminant(&[0.0, 3.0]).unwrap().to_bits(),
            0.0f64.to_bits()
        );
        assert_eq!(m.classify(&[0.0, 3.0]).unwrap(), BinaryLabel::Positive);
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(LinearModel::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(LinearModel::new(vec![f64::NAN, 1.0], 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            project_onto_normal(&[3.0, 4.0], &[1.0, 0.0]).unwrap(),
            vec![3.0, 0.0]
        );
        assert_eq!(
            project_onto_normal(&[0.0, 4.0], &[1.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let p = project_onto_normal(&[2.0, 4.0], &[1.0, 2.0]).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-12 && (p[1] - 4.0).abs() < 1e-12);
        assert!(matches!(
            project_onto_normal(&[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn dataset_validation() {
        assert!(BinaryDataset::new(
            vec![vec![1.0], vec![1.0, 2.0]],
            vec![BinaryLabel::Positive, BinaryLabel::Negative]
        )
        .is_err());
        assert!(
            BinaryDataset::new(vec![vec![f64::INFINITY]], vec![BinaryLabel::Positive]).is_err()
        );
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![0], vec!["a".into()]).is_err());
        let d = LabeledDataset::new(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 1, 2],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let pair = d.binary_pair(0, 2).unwrap();
        assert_eq!(pair.len(), 2);
        assert_eq!(
            pair.labels(),
            &[BinaryLabel::Positive, BinaryLabel::Negative]
        );
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, d)
    }

    proptest! {
        #[test]
        fn dot_self_is_squared_norm(x in vec_strategy(5)) {
            let n = norm(&x);
            prop_assert!((dot(&x, &x).unwrap() - n * n).abs() <= 1e-9 * (1.0 + n * n));
        }

        #[test]
        fn positive_scaling_keeps_decisions(
            w in vec_strategy(3), b in -5.0f64..5.0, c in 0.01f64..100.0, x in vec_strategy(3)
        ) {
            prop_assume!(norm(&w) > 1e-3);
            let m = LinearModel::new(w.clone(), b).unwrap();
            let scaled = LinearModel::new(w.iter().map(|v| v * c).collect(), b * c).unwrap();
            let d = m.discriminant(&x).unwrap();
            prop_assume!(d.abs() > 1e-9);
            prop_assert_eq!(m.classify(&x).unwrap(), scaled.classify(&x).unwrap());
        }

        #[test]
        fn linear_along_normal(w in vec_strategy(4), b in -5.0f64..5.0, x in vec_strategy(4), t in -20.0f64..20.0) {
            prop_assume!(norm(&w) > 1e-3);
            let m = LinearModel::new(w, b).unwrap();
            let shifted: Vec<f64> = x.iter().zip(m.normal()).map(|(xi, ni)| xi + t * ni).collect();
            let lhs = m.discriminant(&shifted).unwrap();
            let rhs = m.discriminant(&x).unwrap() + t;
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn projection_is_idempotent(v in vec_strategy(4), n in vec_strategy(4)) {
            prop_assume!(norm(&n) > 1e-2);
            let p = project_onto_normal(&v, &n).unwrap();
            let pp = project_onto_normal(&p, &n).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }

        // |discriminant| is the distance to the nearest plane point, found by
        // brute force over a sampled 2-D plane (a line).
        #[test]
        fn discriminant_is_plane_distance(
            w in vec_strategy(2), b in -3.0f64..3.0, x in vec_strategy(2)
        ) {
            prop_assume!(norm(&w) > 0.1);
            let m = LinearModel::new(w, b).unwrap();
            let n = m.normal();
            let anchor = [-m.offset() * n[0], -m.offset() * n[1]];
            let dir = [-n[1], n[0]];
            let along = (x[0] - anchor[0]) * dir[0] + (x[1] - anchor[1]) * dir[1];
            // Coarse scan then a fine scan around the best sample.
            let dist = |t: f64| ((anchor[0] + t * dir[0] - x[0]).powi(2) + (anchor[1] + t * dir[1] - x[1]).powi(2)).sqrt();
            let mut best_t = 0.0;
            let mut best = f64::INFINITY;
            for k in -4000..=4000 {
                let t = along.round() + k as f64 * 0.01;
                if dist(t) < best { best = dist(t); best_t = t; }
            }
            for k in -20000..=20000 {
                let t = best_t + k as f64 * 1e-6;
                best = best.min(dist(t));
            }
            prop_assert!((m.discriminant(&x).unwrap().abs() - best).abs() < 1e-6);
        }
    }
}
