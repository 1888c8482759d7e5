//! Bagged ensembles of linear models, the five combination rules, and the
//! one-vs-one decomposition of multiclass problems.
//!
//! Every combiner reduces the per-member responses at a point to one score
//! whose sign is the ensemble decision. [`MemberResponse`] holds everything
//! a combiner can need (the raw discriminant plus, when geometry is present,
//! the squared class distances), so callers that sweep combiner parameters
//! can compute responses once and score them many times.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::seq::index;
use rand::Rng as _;

use crate::classifiers::{train, TrainerConfig};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{pf_transform, GeometryPair, PcTerms, PotentialParams, ZetaParam};
use crate::primitives::{BinaryDataset, BinaryLabel, LabeledDataset, LinearModel};
use crate::resample;

const MAX_REDRAWS: usize = 100;
const MIN_PER_CLASS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CombinerKind {
    /// Mean of member sigmoid outputs.
    SoftMax,
    /// Mean of raw discriminants.
    Averaging,
    /// Sum of member votes.
    Voting,
    /// Mean of the symmetric potential transform.
    SymmetricPotential,
    /// Mean of the class-specific potential discriminants.
    ClassPotential,
}

impl CombinerKind {
    pub const ALL: [CombinerKind; 5] = [
        CombinerKind::SoftMax,
        CombinerKind::Averaging,
        CombinerKind::Voting,
        CombinerKind::SymmetricPotential,
        CombinerKind::ClassPotential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CombinerKind::SoftMax => "SM",
            CombinerKind::Averaging => "MA",
            CombinerKind::Voting => "MV",
            CombinerKind::SymmetricPotential => "PF",
            CombinerKind::ClassPotential => "PC",
        }
    }

    /// Whether the kind has parameters chosen by grid search.
    pub fn is_tuned(self) -> bool {
        matches!(
            self,
            CombinerKind::SymmetricPotential | CombinerKind::ClassPotential
        )
    }
}

impl fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CombinerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown combiner `{s}`")))
    }
}

/// A combination rule together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Combiner {
    SoftMax,
    Averaging,
    Voting,
    SymmetricPotential(ZetaParam),
    ClassPotential(PotentialParams),
}

impl Combiner {
    /// Assembles a combiner from a kind and optional parameters, failing when
    /// the kind needs a parameter that is missing.
    pub fn from_parts(
        kind: CombinerKind,
        zeta: Option<ZetaParam>,
        potential: Option<PotentialParams>,
    ) -> Result<Self> {
        Ok(match kind {
            CombinerKind::SoftMax => Combiner::SoftMax,
            CombinerKind::Averaging => Combiner::Averaging,
            CombinerKind::Voting => Combiner::Voting,
            CombinerKind::SymmetricPotential => Combiner::SymmetricPotential(
                zeta.ok_or_else(|| Error::Config("PF combiner requires zeta".into()))?,
            ),
            CombinerKind::ClassPotential => Combiner::ClassPotential(
                potential
                    .ok_or_else(|| Error::Config("PC combiner requires beta and gamma".into()))?,
            ),
        })
    }

    pub fn kind(&self) -> CombinerKind {
        match self {
            Combiner::SoftMax => CombinerKind::SoftMax,
            Combiner::Averaging => CombinerKind::Averaging,
            Combiner::Voting => CombinerKind::Voting,
            Combiner::SymmetricPotential(_) => CombinerKind::SymmetricPotential,
            Combiner::ClassPotential(_) => CombinerKind::ClassPotential,
        }
    }

    /// The combined value: a vote count for MV, a mean in `(0, 1)` for SM, and
    /// a mean discriminant otherwise.
    pub fn combine(&self, responses: &[MemberResponse]) -> Result<f64> {
        if responses.is_empty() {
            return Err(Error::Config("cannot combine an empty ensemble".into()));
        }
        let values = responses.iter().map(|r| r.discriminant);
        Ok(match *self {
            Combiner::Voting => majority_vote(values),
            Combiner::Averaging => model_average(values),
            Combiner::SoftMax => softmax_average(values),
            Combiner::SymmetricPotential(zeta) => potential_average(values, zeta),
            Combiner::ClassPotential(params) => class_potential_average(responses, params)?,
        })
    }

    /// A score whose sign is the ensemble decision. For SM this is the
    /// combined value shifted by one half, computed without the rounding
    /// the shift would introduce near the threshold.
    pub fn decision_score(&self, responses: &[MemberResponse]) -> Result<f64> {
        match self {
            Combiner::SoftMax => {
                if responses.is_empty() {
                    return Err(Error::Config("cannot combine an empty ensemble".into()));
                }
                Ok(mean(
                    responses
                        .iter()
                        .map(|r| 0.5 * (0.5 * r.discriminant).tanh()),
                ))
            }
            _ => self.combine(responses),
        }
    }

    pub fn decide(&self, responses: &[MemberResponse]) -> Result<BinaryLabel> {
        self.decision_score(responses).map(BinaryLabel::from_score)
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Combiner::SymmetricPotential(z) => write!(f, "PF(zeta={})", z.value()),
            Combiner::ClassPotential(p) => write!(f, "PC(beta={}, gamma={})", p.beta(), p.gamma()),
            other => f.write_str(other.kind().name()),
        }
    }
}

// Starting from -0.0 keeps the sign of a sum of zeros, so members whose
// bounded outputs all underflowed still decide the side they were on.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((-0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// `Σ sign(ωᵢ)` with `sign(0) = +1`.
pub fn majority_vote(discriminants: impl IntoIterator<Item = f64>) -> f64 {
    discriminants
        .into_iter()
        .map(|w| BinaryLabel::from_score(w).value())
        .sum()
}

/// `(1/N) Σ ωᵢ`.
pub fn model_average(discriminants: impl IntoIterator<Item = f64>) -> f64 {
    mean(discriminants.into_iter())
}

/// `(1/N) Σ 1/(1 + exp(−ωᵢ))`.
pub fn softmax_average(discriminants: impl IntoIterator<Item = f64>) -> f64 {
    mean(discriminants.into_iter().map(|w| 1.0 / (1.0 + (-w).exp())))
}

/// `(1/N) Σ g(ωᵢ)` with the symmetric potential transform `g`.
pub fn potential_average(discriminants: impl IntoIterator<Item = f64>, zeta: ZetaParam) -> f64 {
    mean(discriminants.into_iter().map(|w| pf_transform(w, zeta)))
}

fn class_potential_average(responses: &[MemberResponse], params: PotentialParams) -> Result<f64> {
    let mut sum = 0.0;
    for r in responses {
        let terms = r
            .terms
            .ok_or_else(|| Error::Config("PC combiner requires per-member geometry".into()))?;
        sum += terms.discriminant(params);
    }
    Ok(sum / responses.len() as f64)
}

/// What one member contributes at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberResponse {
    pub discriminant: f64,
    /// Squared class distances, present when the ensemble carries geometry.
    pub terms: Option<PcTerms>,
}

/// How bags are drawn from the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct BagSpec {
    pub n_members: usize,
    pub sample_fraction: f64,
    /// Draw with replacement (bootstrap) instead of subsampling.
    pub replacement: bool,
    pub seed: u64,
}

impl Default for BagSpec {
    fn default() -> Self {
        BagSpec {
            n_members: 11,
            sample_fraction: 0.8,
            replacement: false,
            seed: 0,
        }
    }
}

impl BagSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_members == 0 {
            return Err(Error::Config(
                "an ensemble needs at least one member".into(),
            ));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "sample_fraction must lie in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        Ok(())
    }

    /// Number of instances per bag for a training set of `n`.
    pub fn bag_size(&self, n: usize) -> usize {
        ((self.sample_fraction * n as f64).ceil() as usize).clamp(1, n.max(1))
    }

    /// Draws `n_members` bags of indices into `data`, each sorted ascending
    /// and holding at least two instances of both classes.
    pub fn draw_bags(&self, data: &BinaryDataset) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        data.require_classes(MIN_PER_CLASS)?;
        let n = data.len();
        let size = self.bag_size(n);
        let mut rng = resample::rng(self.seed);
        let mut bags = Vec::with_capacity(self.n_members);
        for member in 0..self.n_members {
            let mut attempt = 0;
            let bag = loop {
                let mut bag: Vec<usize> = if self.replacement {
                    (0..size).map(|_| rng.random_range(0..n)).collect()
                } else {
                    index::sample(&mut rng, n, size).into_vec()
                };
                bag.sort_unstable();
                let pos = bag
                    .iter()
                    .filter(|&&i| data.labels()[i] == BinaryLabel::Positive)
                    .count();
                if pos >= MIN_PER_CLASS && bag.len() - pos >= MIN_PER_CLASS {
                    break bag;
                }
                attempt += 1;
                if attempt > MAX_REDRAWS {
                    return Err(Error::Training(format!(
                        "bag {member} lacked a class after {MAX_REDRAWS} redraws"
                    )));
                }
            };
            bags.push(bag);
        }
        Ok(bags)
    }
}

/// `N` linear models, the rule combining them, and optionally the class
/// geometry of every member.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<LinearModel>,
    geometry: Option<Vec<GeometryPair>>,
    combiner: Combiner,
}

impl Ensemble {
    pub fn new(
        members: Vec<LinearModel>,
        geometry: Option<Vec<GeometryPair>>,
        combiner: Combiner,
    ) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Config("an ensemble needs at least one member".into()))?;
        let d = first.dim();
        for m in &members {
            check_dim(d, m.dim())?;
        }
        if let Some(g) = &geometry {
            if g.len() != members.len() {
                return Err(Error::Config(format!(
                    "{} geometries for {} members",
                    g.len(),
                    members.len()
                )));
            }
            for pair in g {
                check_dim(d, pair.positive().centroid().len())?;
            }
        }
        if combiner.kind() == CombinerKind::ClassPotential && geometry.is_none() {
            return Err(Error::Config(
                "PC combiner requires per-member geometry".into(),
            ));
        }
        Ok(Ensemble {
            members,
            geometry,
            combiner,
        })
    }

    /// The same members and geometry under another combination rule.
    pub fn with_combiner(&self, combiner: Combiner) -> Result<Self> {
        Ensemble::new(self.members.clone(), self.geometry.clone(), combiner)
    }

    pub fn members(&self) -> &[LinearModel] {
        &self.members
    }

    pub fn geometry(&self) -> Option<&[GeometryPair]> {
        self.geometry.as_deref()
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    /// Per-member responses at `x`.
    pub fn responses(&self, x: &[f64]) -> Result<Vec<MemberResponse>> {
        check_dim(self.dim(), x.len())?;
        Ok(match &self.geometry {
            Some(geometry) => self
                .members
                .iter()
                .zip(geometry)
                .map(|(m, g)| MemberResponse {
                    discriminant: m.discriminant_unchecked(x),
                    terms: Some(PcTerms::new(g, x, m)),
                })
                .collect(),
            None => self
                .members
                .iter()
                .map(|m| MemberResponse {
                    discriminant: m.discriminant_unchecked(x),
                    terms: None,
                })
                .collect(),
        })
    }

    /// The combined value of the configured rule (see [`Combiner::combine`]).
    pub fn combine(&self, x: &[f64]) -> Result<f64> {
        self.combiner.combine(&self.responses(x)?)
    }

    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        self.combiner.decision_score(&self.responses(x)?)
    }

    pub fn predict(&self, x: &[f64]) -> Result<BinaryLabel> {
        self.decision_score(x).map(BinaryLabel::from_score)
    }
}

/// Trains one member per bag. Every member uses the same trainer settings,
/// so diversity comes from the bags alone. Class geometry is fitted for
/// every member on its own bag; if that fails the ensemble carries no
/// geometry and cannot use the PC rule.
pub fn bag_train(
    data: &BinaryDataset,
    trainer: &TrainerConfig,
    spec: &BagSpec,
    combiner: Combiner,
) -> Result<Ensemble> {
    let bags = spec.draw_bags(data)?;
    let mut members = Vec::with_capacity(bags.len());
    let mut geometry = Some(Vec::with_capacity(bags.len()));
    for bag in &bags {
        let sample = data.subset(bag);
        let fit = train(&sample, trainer)?;
        if let Some(g) = geometry.as_mut() {
            match GeometryPair::fit(&sample, &fit.model) {
                Ok(pair) => g.push(pair),
                Err(e) => {
                    warn!("dropping ensemble geometry: {e}");
                    geometry = None;
                }
            }
        }
        members.push(fit.model);
    }
    Ensemble::new(members, geometry, combiner)
}

/// One ensemble per unordered class pair `(a, b)`, `a < b`, with class `a`
/// as the positive side.
#[derive(Debug, Clone, PartialEq)]
pub struct OvoModel {
    n_classes: usize,
    pairs: Vec<(usize, usize)>,
    ensembles: Vec<Ensemble>,
}

impl OvoModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn ensembles(&self) -> &[Ensemble] {
        &self.ensembles
    }

    pub fn with_combiner(&self, combiner: Combiner) -> Result<Self> {
        Ok(OvoModel {
            n_classes: self.n_classes,
            pairs: self.pairs.clone(),
            ensembles: self
                .ensembles
                .iter()
                .map(|e| e.with_combiner(combiner))
                .collect::<Result<_>>()?,
        })
    }

    /// Responses of every pair ensemble at `x`, in pair order.
    pub fn responses(&self, x: &[f64]) -> Result<Vec<Vec<MemberResponse>>> {
        self.ensembles.iter().map(|e| e.responses(x)).collect()
    }

    /// Class decided by `combiner` from precomputed pair responses.
    pub fn predict_from(
        &self,
        responses: &[Vec<MemberResponse>],
        combiner: &Combiner,
    ) -> Result<usize> {
        let mut wins = vec![0usize; self.n_classes];
        for (&(a, b), r) in self.pairs.iter().zip(responses) {
            match combiner.decide(r)? {
                BinaryLabel::Positive => wins[a] += 1,
                BinaryLabel::Negative => wins[b] += 1,
            }
        }
        Ok(vote_winner(&wins))
    }

    /// Class with the most pairwise wins under each ensemble's own rule.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let mut wins = vec![0usize; self.n_classes];
        for (&(a, b), e) in self.pairs.iter().zip(&self.ensembles) {
            match e.predict(x)? {
                BinaryLabel::Positive => wins[a] += 1,
                BinaryLabel::Negative => wins[b] += 1,
            }
        }
        Ok(vote_winner(&wins))
    }
}

/// Index with the most wins; ties go to the lowest index.
pub fn vote_winner(wins: &[usize]) -> usize {
    let mut best = 0;
    for (i, &w) in wins.iter().enumerate() {
        if w > wins[best] {
            best = i;
        }
    }
    best
}

/// Trains a bagged ensemble for every class pair on that pair's instances.
/// Pair `k` uses the bag seed `derive_seed(spec.seed, [k])`.
pub fn ovo_train(
    data: &LabeledDataset,
    trainer: &TrainerConfig,
    spec: &BagSpec,
    combiner: Combiner,
) -> Result<OvoModel> {
    let c = data.n_classes();
    let counts = data.class_counts();
    let mut pairs = Vec::new();
    let mut ensembles = Vec::new();
    for a in 0..c {
        for b in (a + 1)..c {
            if counts[a] == 0 || counts[b] == 0 {
                return Err(Error::Data(format!(
                    "class pair ({a}, {b}) has an empty class"
                )));
            }
            let pair_data = data.binary_pair(a, b)?;
            let pair_spec = BagSpec {
                seed: resample::derive_seed(spec.seed, &[pairs.len() as u64]),
                ..spec.clone()
            };
            ensembles.push(bag_train(&pair_data, trainer, &pair_spec, combiner)?);
            pairs.push((a, b));
        }
    }
    Ok(OvoModel {
        n_classes: c,
        pairs,
        ensembles,
    })
}
