//! Datasets, weight matrices and the linear decision rule.
//!
//! Class indices are 0-based everywhere in the API. Files and reports use
//! 1-based labels; conversion happens in the `data` and `experiment` modules.

use crate::error::{Error, Result};

/// A borrowed feature vector, either dense or sparse.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse { indices: &'a [u32], values: &'a [f64] },
}

impl Row<'_> {
    #[inline]
    pub fn dot(&self, w: &[f64]) -> f64 {
        match *self {
            Row::Dense(x) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
            Row::Sparse { indices, values } => indices.iter().zip(values).map(|(&j, v)| v * w[j as usize]).sum(),
        }
    }

    /// `out += scale * self`
    #[inline]
    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        match *self {
            Row::Dense(x) => out.iter_mut().zip(x).for_each(|(o, v)| *o += scale * v),
            Row::Sparse { indices, values } => {
                for (&j, v) in indices.iter().zip(values) {
                    out[j as usize] += scale * v;
                }
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match *self {
            Row::Dense(x) => x.iter().map(|v| v * v).sum(),
            Row::Sparse { values, .. } => values.iter().map(|v| v * v).sum(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.add_scaled_to(1.0, &mut out);
        out
    }
}

/// Feature storage: row-major dense or CSR sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense { dim: usize, data: Vec<f64> },
    Sparse { dim: usize, indptr: Vec<usize>, indices: Vec<u32>, values: Vec<f64> },
}

impl Features {
    pub fn dense(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 && !data.is_empty() || dim > 0 && !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!("{} values do not form rows of dimension {dim}", data.len())));
        }
        Ok(Features::Dense { dim, data })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Features::Dense { dim, data })
    }

    pub fn len(&self) -> usize {
        match self {
            Features::Dense { dim, data } => {
                if *dim == 0 {
                    0
                } else {
                    data.len() / dim
                }
            }
            Features::Sparse { indptr, .. } => indptr.len() - 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Features::Dense { dim, .. } | Features::Sparse { dim, .. } => *dim,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Features::Sparse { .. })
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        match self {
            Features::Dense { dim, data } => Row::Dense(&data[i * dim..(i + 1) * dim]),
            Features::Sparse { indptr, indices, values, .. } => {
                let (a, b) = (indptr[i], indptr[i + 1]);
                Row::Sparse { indices: &indices[a..b], values: &values[a..b] }
            }
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn select(&self, idx: &[usize]) -> Features {
        match self {
            Features::Dense { dim, data } => {
                let mut out = Vec::with_capacity(idx.len() * dim);
                for &i in idx {
                    out.extend_from_slice(&data[i * dim..(i + 1) * dim]);
                }
                Features::Dense { dim: *dim, data: out }
            }
            Features::Sparse { dim, indptr, indices, values } => {
                let mut p = vec![0];
                let (mut ind, mut val) = (Vec::new(), Vec::new());
                for &i in idx {
                    ind.extend_from_slice(&indices[indptr[i]..indptr[i + 1]]);
                    val.extend_from_slice(&values[indptr[i]..indptr[i + 1]]);
                    p.push(ind.len());
                }
                Features::Sparse { dim: *dim, indptr: p, indices: ind, values: val }
            }
        }
    }

    pub fn to_dense(&self) -> Features {
        match self {
            Features::Dense { .. } => self.clone(),
            Features::Sparse { dim, .. } => {
                let mut data = Vec::with_capacity(self.len() * dim);
                for r in self.rows() {
                    data.extend(r.to_dense(*dim));
                }
                Features::Dense { dim: *dim, data }
            }
        }
    }

    /// Rescales every nonzero row to unit Euclidean norm.
    pub fn normalize_rows(&mut self) {
        let scale = |v: &mut [f64]| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
        };
        match self {
            Features::Dense { dim, data } => {
                if *dim > 0 {
                    data.chunks_mut(*dim).for_each(scale);
                }
            }
            Features::Sparse { indptr, values, .. } => {
                for w in indptr.windows(2) {
                    scale(&mut values[w[0]..w[1]]);
                }
            }
        }
    }
}

/// Feature matrix with observed (possibly noisy) labels and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Features,
    observed: Vec<usize>,
    truth: Option<Vec<usize>>,
    num_classes: usize,
    label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: Features,
        observed: Vec<usize>,
        truth: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = features.len();
        if observed.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: observed.len() });
        }
        check_labels(&observed, num_classes)?;
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: t.len() });
            }
            check_labels(t, num_classes)?;
        }
        Ok(Dataset { features, observed, truth, num_classes, label_names: None })
    }

    /// A dataset whose observed labels are the ground truth.
    pub fn clean(features: Features, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let truth = labels.clone();
        Self::new(features, labels, Some(truth), num_classes)
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes {
            return Err(Error::DimensionMismatch { expected: self.num_classes, got: names.len() });
        }
        self.label_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut Features {
        &mut self.features
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    pub fn truth_or_err(&self) -> Result<&[usize]> {
        self.truth().ok_or_else(|| Error::InvalidInput("dataset has no ground-truth labels".into()))
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        self.features.row(i)
    }

    /// Same features and truth, with new observed labels.
    pub fn with_observed(&self, observed: Vec<usize>) -> Result<Self> {
        let mut out = Self::new(self.features.clone(), observed, self.truth.clone(), self.num_classes)?;
        out.label_names = self.label_names.clone();
        Ok(out)
    }

    /// Observed labels replaced by the ground truth.
    pub fn relabeled_with_truth(&self) -> Result<Self> {
        let truth = self.truth_or_err()?.to_vec();
        self.with_observed(truth)
    }

    pub fn with_features(&self, features: Features) -> Result<Self> {
        let mut out = Self::new(features, self.observed.clone(), self.truth.clone(), self.num_classes)?;
        out.label_names = self.label_names.clone();
        Ok(out)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(idx),
            observed: idx.iter().map(|&i| self.observed[i]).collect(),
            truth: self.truth.as_ref().map(|t| idx.iter().map(|&i| t[i]).collect()),
            num_classes: self.num_classes,
            label_names: self.label_names.clone(),
        }
    }

    /// Number of observed labels per class.
    pub fn observed_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes];
        for &y in &self.observed {
            c[y] += 1;
        }
        c
    }
}

fn check_labels(labels: &[usize], num_classes: usize) -> Result<()> {
    match labels.iter().find(|&&y| y >= num_classes) {
        Some(&y) => Err(Error::InvalidInput(format!("label {} outside 1..={num_classes}", y + 1))),
        None => Ok(()),
    }
}

/// `d x Q` matrix of class prototypes, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    dim: usize,
    num_classes: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(dim: usize, num_classes: usize) -> Self {
        WeightMatrix { dim, num_classes, data: vec![0.0; dim * num_classes] }
    }

    pub fn from_prototypes(prototypes: &[Vec<f64>]) -> Result<Self> {
        let dim = prototypes.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(dim * prototypes.len());
        for w in prototypes {
            if w.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: w.len() });
            }
            data.extend_from_slice(w);
        }
        Ok(WeightMatrix { dim, num_classes: prototypes.len(), data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn prototype(&self, q: usize) -> &[f64] {
        &self.data[q * self.dim..(q + 1) * self.dim]
    }

    #[inline]
    pub fn prototype_mut(&mut self, q: usize) -> &mut [f64] {
        &mut self.data[q * self.dim..(q + 1) * self.dim]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit Frobenius norm; the zero matrix is left unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.frobenius_norm();
        let mut out = self.clone();
        if n > 0.0 {
            out.data.iter_mut().for_each(|v| *v /= n);
        }
        out
    }

    /// `Σ_q w_q`
    pub fn prototype_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for q in 0..self.num_classes {
            s.iter_mut().zip(self.prototype(q)).for_each(|(a, b)| *a += b);
        }
        s
    }

    /// Inner products `<w_q, x>` for every class.
    pub fn scores(&self, x: Row<'_>) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes];
        self.scores_into(x, &mut out);
        out
    }

    #[inline]
    pub fn scores_into(&self, x: Row<'_>, out: &mut [f64]) {
        for (q, s) in out.iter_mut().enumerate() {
            *s = x.dot(self.prototype(q));
        }
    }

    /// `w_q += scale * x`
    pub fn add_scaled(&mut self, q: usize, scale: f64, x: Row<'_>) {
        x.add_scaled_to(scale, self.prototype_mut(q));
    }

    fn check_dim(&self, x: Row<'_>) -> Result<()> {
        if let Row::Dense(v) = x {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
            }
        }
        Ok(())
    }

    /// `argmax_q <w_q, x>`, ties going to the lowest class index.
    pub fn predict(&self, x: Row<'_>) -> Result<usize> {
        self.check_dim(x)?;
        Ok(argmax(&self.scores(x)))
    }

    pub fn predict_slice(&self, x: &[f64]) -> Result<usize> {
        self.predict(Row::Dense(x))
    }

    pub fn predict_all(&self, features: &Features) -> Result<Vec<usize>> {
        if features.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: features.dim() });
        }
        let mut buf = vec![0.0; self.num_classes];
        Ok(features
            .rows()
            .map(|x| {
                self.scores_into(x, &mut buf);
                argmax(&buf)
            })
            .collect())
    }
}

/// Index of the largest value; the first one on ties.
#[inline]
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Minimum over examples of `<w_y - w_p, x>` for all rival classes `p`.
///
/// Meaningful as a margin when `w` has unit Frobenius norm. Negative when
/// some example is misclassified.
pub fn dataset_margin(w: &WeightMatrix, features: &Features, labels: &[usize]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::InvalidInput("margin of an empty dataset".into()));
    }
    if labels.len() != features.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), got: labels.len() });
    }
    if features.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: features.dim() });
    }
    let mut buf = vec![0.0; w.num_classes()];
    let mut margin = f64::INFINITY;
    for (x, &y) in features.rows().zip(labels) {
        w.scores_into(x, &mut buf);
        for (p, &s) in buf.iter().enumerate() {
            if p != y {
                margin = margin.min(buf[y] - s);
            }
        }
    }
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn predict_examples() {
        let w = WeightMatrix::from_prototypes(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(w.predict_slice(&[1.0, 0.0]).unwrap(), 0);

        let zero = WeightMatrix::zeros(3, 4);
        assert_eq!(zero.predict_slice(&[0.3, -1.0, 2.0]).unwrap(), 0);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = WeightMatrix::from_prototypes(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-s, -s]]).unwrap();
        assert_eq!(w.predict_slice(&[0.6, 0.8]).unwrap(), 1);
    }

    #[test]
    fn predict_rejects_wrong_dimension() {
        let w = WeightMatrix::zeros(2, 3);
        assert!(matches!(w.predict_slice(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn margin_examples() {
        let w = WeightMatrix::from_prototypes(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap().normalized();
        let x = Features::dense(2, vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dataset_margin(&w, &x, &[0]).unwrap(), 2f64.sqrt(), epsilon = 1e-12);

        let zero = WeightMatrix::zeros(2, 2);
        assert_eq!(dataset_margin(&zero, &x, &[1]).unwrap(), 0.0);

        let empty = Features::dense(2, vec![]).unwrap();
        assert!(dataset_margin(&w, &empty, &[]).is_err());
    }

    #[test]
    fn sparse_and_dense_rows_agree() {
        let w = vec![0.5, -1.0, 2.0, 0.0];
        let dense = Row::Dense(&[0.0, 3.0, 0.0, 1.0]);
        let sparse = Row::Sparse { indices: &[1, 3], values: &[3.0, 1.0] };
        assert_eq!(dense.dot(&w), sparse.dot(&w));
        assert_eq!(dense.to_dense(4), sparse.to_dense(4));
    }

    #[test]
    fn dataset_rejects_bad_labels() {
        let f = Features::dense(1, vec![1.0, 2.0]).unwrap();
        assert!(Dataset::new(f.clone(), vec![0, 2], None, 2).is_err());
        assert!(Dataset::new(f, vec![0], None, 2).is_err());
    }

    fn small_matrix() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        (1usize..5, 2usize..6).prop_flat_map(|(d, q)| {
            (
                prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), q),
                prop::collection::vec(-5.0..5.0f64, d),
                prop::collection::vec(-5.0..5.0f64, d),
            )
        })
    }

    proptest! {
        #[test]
        fn predict_invariant_under_common_shift((protos, shift, x) in small_matrix()) {
            // Dyadic values keep the shifted inner products exact.
            let q = |v: f64| (v * 8.0).round() / 8.0;
            let protos: Vec<Vec<f64>> = protos.iter().map(|w| w.iter().map(|&v| q(v)).collect()).collect();
            let shift: Vec<f64> = shift.iter().map(|&v| q(v)).collect();
            let x: Vec<f64> = x.iter().map(|&v| q(v)).collect();
            let w = WeightMatrix::from_prototypes(&protos).unwrap();
            let shifted: Vec<Vec<f64>> = protos.iter()
                .map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect())
                .collect();
            let ws = WeightMatrix::from_prototypes(&shifted).unwrap();
            prop_assert_eq!(w.predict_slice(&x).unwrap(), ws.predict_slice(&x).unwrap());
        }

        #[test]
        fn positive_margin_means_no_training_error(
            (protos, _s, _x) in small_matrix(),
            pts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..20),
        ) {
            let w = WeightMatrix::from_prototypes(&protos).unwrap().normalized();
            let d = w.dim();
            let rows: Vec<Vec<f64>> = pts.iter().map(|p| p[..d].to_vec()).collect();
            let f = Features::from_rows(d, &rows).unwrap();
            let labels: Vec<usize> = rows.iter().enumerate().map(|(i, _)| i % w.num_classes()).collect();
            if dataset_margin(&w, &f, &labels).unwrap() > 0.0 {
                prop_assert_eq!(w.predict_all(&f).unwrap(), labels);
            }
        }
    }
}
