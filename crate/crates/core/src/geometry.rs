//! Class-conditional geometry and the two potential functions.
//!
//! [`pf_transform`] is the symmetric, bounded transform of a raw discriminant.
//! [`ClassGeometry`] holds what the class-specific potential needs: the class
//! centroid, the inverse class covariance (for the centroid distance `dc`),
//! and the inverse variance of the class projected on a plane normal (for the
//! normal distance `dn`).

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::primitives::{mean_of, BinaryDataset, BinaryLabel, LinearModel};

/// Mixing weight `beta` of the centroid and normal terms, and steepness `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    beta: f64,
    gamma: f64,
}

impl PotentialParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!(
                "beta must lie in [0, 1], got {beta}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(PotentialParams { beta, gamma })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Peak position/steepness coefficient of [`pf_transform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaParam(f64);

impl ZetaParam {
    pub fn new(zeta: f64) -> Result<Self> {
        if zeta > 0.0 && zeta.is_finite() {
            Ok(ZetaParam(zeta))
        } else {
            Err(Error::Config(format!("zeta must be positive, got {zeta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Where the transform peaks: `±1/√(2ζ)`.
    pub fn peak_position(self) -> f64 {
        (2.0 * self.0).sqrt().recip()
    }
}

/// `g(z) = z · exp(−ζz² + ½) · √(2ζ)`.
///
/// Odd, bounded by ±1 with the extrema at `z = ±1/√(2ζ)`, decaying to zero
/// far from the plane. For large `|z|` the product underflows to a zero that
/// still carries the sign of `z`.
pub fn pf_transform(z: f64, zeta: ZetaParam) -> f64 {
    let k = zeta.0;
    z * (-k * z * z + 0.5).exp() * (2.0 * k).sqrt()
}

/// Arithmetic mean of the rows labelled `label`.
pub fn class_centroid(data: &BinaryDataset, label: BinaryLabel) -> Result<Vec<f64>> {
    mean_of(data.class_rows(label), data.dim())
        .ok_or_else(|| Error::Data(format!("class {label:?} has no instances")))
}

/// Sample covariance with the `1/(k−1)` estimator. Needs `k ≥ 2` rows.
pub fn sample_covariance<'a>(
    rows: impl Iterator<Item = &'a [f64]>,
    centroid: &[f64],
) -> Result<DMatrix<f64>> {
    let d = centroid.len();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut count = 0usize;
    for x in rows {
        check_dim(d, x.len())?;
        for i in 0..d {
            let di = x[i] - centroid[i];
            for j in 0..=i {
                cov[(i, j)] += di * (x[j] - centroid[j]);
            }
        }
        count += 1;
    }
    if count < 2 {
        return Err(Error::Data(format!(
            "covariance needs at least 2 instances, found {count}"
        )));
    }
    let denom = (count - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

/// Geometry of one class relative to one decision plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGeometry {
    label: BinaryLabel,
    centroid: Vec<f64>,
    cov_inverse: DMatrix<f64>,
    normal_var_inverse: f64,
}

impl ClassGeometry {
    /// Builds a geometry from an already regularized covariance and projected
    /// variance, inverting both.
    pub fn new(
        label: BinaryLabel,
        centroid: Vec<f64>,
        covariance: DMatrix<f64>,
        normal_variance: f64,
    ) -> Result<Self> {
        let d = centroid.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if centroid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("centroid is not finite".into()));
        }
        if !(normal_variance > 0.0 && normal_variance.is_finite()) {
            return Err(Error::Degenerate(format!(
                "projected variance must be positive, got {normal_variance}"
            )));
        }
        let inverse = covariance
            .cholesky()
            .ok_or_else(|| Error::Degenerate("class covariance is not positive definite".into()))?
            .inverse();
        let cov_inverse = (&inverse + inverse.transpose()) * 0.5;
        Ok(ClassGeometry {
            label,
            centroid,
            cov_inverse,
            normal_var_inverse: normal_variance.recip(),
        })
    }

    /// Fits the geometry of class `label` in `data` for the plane of `model`.
    ///
    /// The covariance is regularized as `S + λI`, `λ = 1e-6 · trace(S) / d`.
    /// With fewer than `d + 1` instances only the diagonal is kept, and the
    /// identity is used if any variance is zero. The projected variance gets
    /// the same `λ`.
    pub fn fit(data: &BinaryDataset, label: BinaryLabel, model: &LinearModel) -> Result<Self> {
        check_dim(data.dim(), model.dim())?;
        let d = data.dim();
        let count = data.count(label);
        if count < 2 {
            return Err(Error::Data(format!(
                "class {label:?} has {count} instances, geometry needs at least 2"
            )));
        }
        let centroid = class_centroid(data, label)?;
        let raw = sample_covariance(data.class_rows(label), &centroid)?;
        let trace = raw.trace();
        let ridge = 1e-6 * trace / d as f64;
        let covariance = if trace <= 0.0 {
            DMatrix::identity(d, d)
        } else if count < d + 1 {
            let diag = raw.diagonal();
            if diag.iter().any(|&v| v <= 0.0) {
                DMatrix::identity(d, d)
            } else {
                DMatrix::from_diagonal(&diag.add_scalar(ridge))
            }
        } else {
            &raw + DMatrix::identity(d, d) * ridge
        };

        let n = model.normal();
        let projections: Vec<f64> = data
            .class_rows(label)
            .map(|x| {
                x.iter()
                    .zip(&centroid)
                    .zip(n)
                    .map(|((a, c), ni)| (a - c) * ni)
                    .sum()
            })
            .collect();
        let mean_proj = projections.iter().sum::<f64>() / count as f64;
        let proj_var = projections
            .iter()
            .map(|p| (p - mean_proj).powi(2))
            .sum::<f64>()
            / (count - 1) as f64
            + ridge;
        let normal_variance = if proj_var > 0.0 { proj_var } else { 1.0 };

        ClassGeometry::new(label, centroid, covariance, normal_variance)
    }

    pub fn label(&self) -> BinaryLabel {
        self.label
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    pub fn cov_inverse(&self) -> &DMatrix<f64> {
        &self.cov_inverse
    }

    pub fn normal_var_inverse(&self) -> f64 {
        self.normal_var_inverse
    }

    fn centroid_sq(&self, x: &[f64]) -> f64 {
        let d = self.centroid.len();
        let diff: Vec<f64> = x.iter().zip(&self.centroid).map(|(a, c)| a - c).collect();
        let mut q = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.cov_inverse[(i, j)] * diff[j];
            }
            q += diff[i] * row;
        }
        q.max(0.0)
    }

    fn normal_sq(&self, x: &[f64], model: &LinearModel) -> f64 {
        let along: f64 = x
            .iter()
            .zip(&self.centroid)
            .zip(model.normal())
            .map(|((a, c), ni)| (a - c) * ni)
            .sum();
        along * along * self.normal_var_inverse
    }

    /// Mahalanobis distance from `x` to the class centroid (`dc`).
    pub fn mahalanobis_dc(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.centroid.len(), x.len())?;
        Ok(self.centroid_sq(x).sqrt())
    }

    /// Length of `x − C` along the plane normal, in units of the class's
    /// projected standard deviation (`dn`).
    pub fn normal_distance_dn(&self, x: &[f64], model: &LinearModel) -> Result<f64> {
        check_dim(self.centroid.len(), x.len())?;
        check_dim(self.centroid.len(), model.dim())?;
        Ok(self.normal_sq(x, model).sqrt())
    }

    /// `β·exp(−γ·dc²) + (1−β)·exp(−γ·dn²)`, in `(0, 1]`.
    pub fn class_potential(
        &self,
        x: &[f64],
        model: &LinearModel,
        params: PotentialParams,
    ) -> Result<f64> {
        check_dim(self.centroid.len(), x.len())?;
        check_dim(self.centroid.len(), model.dim())?;
        Ok(self.potential_unchecked(x, model, params))
    }

    pub(crate) fn potential_unchecked(
        &self,
        x: &[f64],
        model: &LinearModel,
        params: PotentialParams,
    ) -> f64 {
        potential_from_squared(self.centroid_sq(x), self.normal_sq(x, model), params)
    }

    /// Squared distances `(dc², dn²)` of `x` for the plane of `model`.
    pub(crate) fn squared_distances(&self, x: &[f64], model: &LinearModel) -> (f64, f64) {
        (self.centroid_sq(x), self.normal_sq(x, model))
    }
}

/// Class potential from precomputed squared distances.
pub fn potential_from_squared(dc_sq: f64, dn_sq: f64, params: PotentialParams) -> f64 {
    let PotentialParams { beta, gamma } = params;
    let centroid_term = if beta > 0.0 {
        beta * (-gamma * dc_sq).exp()
    } else {
        0.0
    };
    let normal_term = if beta < 1.0 {
        (1.0 - beta) * (-gamma * dn_sq).exp()
    } else {
        0.0
    };
    centroid_term + normal_term
}

/// The geometries of both classes for one member classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryPair {
    positive: ClassGeometry,
    negative: ClassGeometry,
}

impl GeometryPair {
    pub fn new(positive: ClassGeometry, negative: ClassGeometry) -> Result<Self> {
        if positive.label != BinaryLabel::Positive || negative.label != BinaryLabel::Negative {
            return Err(Error::Config(
                "geometry pair needs one geometry per class".into(),
            ));
        }
        check_dim(positive.centroid.len(), negative.centroid.len())?;
        Ok(GeometryPair { positive, negative })
    }

    pub fn fit(data: &BinaryDataset, model: &LinearModel) -> Result<Self> {
        GeometryPair::new(
            ClassGeometry::fit(data, BinaryLabel::Positive, model)?,
            ClassGeometry::fit(data, BinaryLabel::Negative, model)?,
        )
    }

    pub fn positive(&self) -> &ClassGeometry {
        &self.positive
    }

    pub fn negative(&self) -> &ClassGeometry {
        &self.negative
    }

    /// Class-specific potential discriminant `ω₊(x) − ω₋(x)`, in `[−1, 1]`.
    pub fn pc_discriminant(
        &self,
        x: &[f64],
        model: &LinearModel,
        params: PotentialParams,
    ) -> Result<f64> {
        check_dim(self.positive.centroid.len(), x.len())?;
        check_dim(self.positive.centroid.len(), model.dim())?;
        Ok(self.pc_unchecked(x, model, params))
    }

    pub(crate) fn pc_unchecked(
        &self,
        x: &[f64],
        model: &LinearModel,
        params: PotentialParams,
    ) -> f64 {
        PcTerms::new(self, x, model).discriminant(params)
    }
}

/// Squared distances of one point to both classes of one member, reusable
/// across potential parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcTerms {
    pub positive: (f64, f64),
    pub negative: (f64, f64),
}

impl PcTerms {
    pub(crate) fn new(pair: &GeometryPair, x: &[f64], model: &LinearModel) -> Self {
        PcTerms {
            positive: pair.positive.squared_distances(x, model),
            negative: pair.negative.squared_distances(x, model),
        }
    }

    pub fn discriminant(&self, params: PotentialParams) -> f64 {
        potential_from_squared(self.positive.0, self.positive.1, params)
            - potential_from_squared(self.negative.0, self.negative.1, params)
    }
}
