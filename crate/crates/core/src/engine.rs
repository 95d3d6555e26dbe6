//! The fairness-aware boosting loop: cumulative fairness deltas, per-round
//! fairness costs, learner weights, distribution updates, termination, and
//! post-training prefix selection. The vanilla-AdaBoost and non-cumulative
//! baselines are configurations of the same loop.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Group, Label};
use crate::diagnostics::RoundTrace;
use crate::error::{Error, Result};
use crate::metrics::{confusion_by_group, GroupConfusion};
use crate::stump::{Stump, StumpFitter};

/// Which parity notion drives cost assignment and prefix selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FairnessNotion {
    StatisticalParity,
    EqualOpportunity,
    DisparateMistreatment,
}

/// Training mode. `NoCumul` evaluates fairness on the current weak learner
/// alone instead of the partial ensemble; `VanillaAdaBoost` never assigns
/// fairness costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    AdaFair,
    NoCumul,
    VanillaAdaBoost,
}

/// Which partial-ensemble score the cumulative deltas are computed from in
/// `AdaFair` mode. The learner weight depends on the costs while the
/// cumulative deltas depend on the learner weight; the default resolves the
/// cycle by scoring the current round with a provisional cost-free weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaBasis {
    /// Deltas from `H_{1:j}` where round `j` enters with a provisional
    /// cost-free weight. The committed weight is recomputed with costs.
    ProvisionalInclusive,
    /// Deltas from the committed rounds `H_{1:j-1}` only (ablation).
    PriorRoundsOnly,
}

/// Full training configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Maximum boosting rounds (T).
    pub rounds: usize,
    /// Unfairness tolerance; costs are assigned only when `|delta| > epsilon`.
    pub epsilon: f64,
    /// Blend between balanced error (c = 1) and plain error (c = 0) in the
    /// prefix-selection objective.
    pub c: f64,
    pub notion: FairnessNotion,
    pub mode: Mode,
    pub delta_basis: DeltaBasis,
    /// Recorded for provenance; training itself is deterministic.
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(rounds: usize, notion: FairnessNotion, mode: Mode) -> Self {
        TrainConfig {
            rounds,
            epsilon: 0.0,
            c: 1.0,
            notion,
            mode,
            delta_basis: DeltaBasis::ProvisionalInclusive,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::InvalidSpec(String::from(
                "rounds must be at least 1",
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidSpec(format!(
                "c must lie in [0, 1], got {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Per-instance probability weights; non-negative and summing to one within
/// `1e-12` (verified with compensated summation so the tolerance is
/// meaningful at large row counts).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDistribution(Vec<f64>);

pub(crate) fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let y = v - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    sum
}

impl WeightDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Internal(String::from(
                "weights must be finite and non-negative",
            )));
        }
        let sum = kahan_sum(&weights);
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Internal(format!("weights sum to {sum}, expected 1")));
        }
        Ok(WeightDistribution(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over zero instances");
        WeightDistribution(vec![1.0 / n as f64; n])
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Signed cumulative fairness deltas of a (partial) ensemble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FairnessDeltas {
    pub delta_sp: f64,
    pub delta_fnr: f64,
    pub delta_fpr: f64,
}

impl FairnessDeltas {
    pub fn from_predictions(
        predictions: &[Label],
        truth: &[Label],
        groups: &[Group],
    ) -> Result<Self> {
        let confusion = confusion_by_group(truth, predictions, groups)?;
        Self::from_confusion(&confusion)
    }

    pub fn from_confusion(confusion: &GroupConfusion) -> Result<Self> {
        let dm = confusion.disparate_mistreatment()?;
        Ok(FairnessDeltas {
            delta_sp: confusion.statistical_parity()?,
            delta_fnr: dm.delta_fnr,
            delta_fpr: dm.delta_fpr,
        })
    }
}

/// Per-instance fairness-related costs for one round. `u` is the additive
/// part; the multiplicative cost applied to the weight update is `1 + u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessCosts {
    u: Vec<f64>,
}

impl FairnessCosts {
    pub fn zero(n: usize) -> Self {
        FairnessCosts { u: vec![0.0; n] }
    }

    #[inline]
    pub fn cost(&self, i: usize) -> f64 {
        1.0 + self.u[i]
    }

    #[inline]
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Instances carrying a positive cost this round.
    pub fn boosted_count(&self) -> usize {
        self.u.iter().filter(|&&v| v > 0.0).count()
    }
}

/// Cost assignment for one round: the misclassified members of the group
/// currently discriminated against receive `|delta|` as their cost, gated
/// by the strict tolerance `|delta| > epsilon`.
///
/// The sign of a delta names the discriminated group. Statistical parity
/// measures a benefit rate (non-protected minus protected), so a positive
/// delta means the protected group is short of positive predictions and
/// gets the boost. The FNR and FPR deltas measure harm rates in the same
/// subtraction order, so there a positive delta means the non-protected
/// group suffers the higher error rate and is the one boosted. For
/// disparate mistreatment the FNR rule applies to positives and the FPR
/// rule to negatives, so the two row sets are disjoint and no row receives
/// two costs.
pub fn fairness_costs(
    deltas: &FairnessDeltas,
    learner_predictions: &[Label],
    d: &Dataset,
    notion: FairnessNotion,
    epsilon: f64,
) -> FairnessCosts {
    let n = d.row_count();
    debug_assert_eq!(learner_predictions.len(), n);
    let labels = d.labels();
    let groups = d.groups();
    let mut u = vec![0.0; n];

    let mut assign = |delta: f64, boosted: Group, class_filter: Option<Label>| {
        if delta.abs() > epsilon {
            for i in 0..n {
                let misclassified = learner_predictions[i] != labels[i];
                let in_class = class_filter.is_none_or(|c| labels[i] == c);
                if misclassified && in_class && groups[i] == boosted {
                    u[i] = delta.abs();
                }
            }
        }
    };
    // Positive benefit shortfall points at the protected group; a positive
    // harm-rate gap points at the non-protected group.
    let short_of_benefit = |delta: f64| {
        if delta > 0.0 {
            Group::Protected
        } else {
            Group::NonProtected
        }
    };
    let harmed = |delta: f64| {
        if delta > 0.0 {
            Group::NonProtected
        } else {
            Group::Protected
        }
    };

    match notion {
        FairnessNotion::StatisticalParity => {
            assign(deltas.delta_sp, short_of_benefit(deltas.delta_sp), None);
        }
        FairnessNotion::EqualOpportunity => {
            assign(
                deltas.delta_fnr,
                harmed(deltas.delta_fnr),
                Some(Label::Positive),
            );
        }
        FairnessNotion::DisparateMistreatment => {
            assign(
                deltas.delta_fnr,
                harmed(deltas.delta_fnr),
                Some(Label::Positive),
            );
            assign(
                deltas.delta_fpr,
                harmed(deltas.delta_fpr),
                Some(Label::Negative),
            );
        }
    }
    FairnessCosts { u }
}

/// Learner-weight computation from cost-weighted correct/incorrect masses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaOutcome {
    /// The strictly-positive closed-form minimizer.
    Positive(f64),
    /// No cost-weighted mass was misclassified; the weight is clamped to
    /// the standard degenerate-case ceiling and training stops after the
    /// round is committed.
    Clamped(f64),
    /// Correct mass did not strictly exceed incorrect mass; the learner is
    /// discarded and training terminates.
    NotPositive,
}

/// Ceiling used when a round classifies all cost-weighted mass correctly:
/// `0.5 * ln((1 - 1e-10) / 1e-10)`.
pub fn alpha_clamp() -> f64 {
    0.5 * libm::log((1.0 - 1e-10) / 1e-10)
}

/// Half the log-ratio of cost-weighted correct to incorrect mass.
pub fn compute_alpha(
    w: &WeightDistribution,
    costs: &FairnessCosts,
    predictions: &[Label],
    truth: &[Label],
) -> AlphaOutcome {
    debug_assert_eq!(w.len(), predictions.len());
    debug_assert_eq!(w.len(), truth.len());
    let mut correct = 0.0;
    let mut incorrect = 0.0;
    for (i, wi) in w.as_slice().iter().enumerate() {
        let mass = wi * costs.cost(i);
        if predictions[i] == truth[i] {
            correct += mass;
        } else {
            incorrect += mass;
        }
    }
    if incorrect == 0.0 {
        return AlphaOutcome::Clamped(alpha_clamp());
    }
    if correct <= incorrect {
        return AlphaOutcome::NotPositive;
    }
    AlphaOutcome::Positive(0.5 * libm::log(correct / incorrect))
}

/// One multiplicative re-weighting step. Returns the normalized next
/// distribution and the pre-normalization sum `Z`.
pub fn update_distribution(
    w: &WeightDistribution,
    costs: &FairnessCosts,
    alpha: f64,
    predictions: &[Label],
    truth: &[Label],
) -> Result<(WeightDistribution, f64)> {
    if !alpha.is_finite() {
        return Err(Error::Internal(format!("non-finite alpha {alpha}")));
    }
    let n = w.len();
    if predictions.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: predictions.len(),
        });
    }
    if truth.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: truth.len(),
        });
    }
    let mut unnormalized = Vec::with_capacity(n);
    for (i, wi) in w.as_slice().iter().enumerate() {
        let agreement = if predictions[i] == truth[i] {
            1.0
        } else {
            -1.0
        };
        unnormalized.push(wi * costs.cost(i) * libm::exp(-alpha * agreement));
    }
    let z = kahan_sum(&unnormalized);
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::Internal(format!(
            "normalization constant {z} is not positive"
        )));
    }
    for v in &mut unnormalized {
        *v /= z;
    }
    Ok((WeightDistribution::new(unnormalized)?, z))
}

/// Objective components of one validation prefix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrefixObjective {
    pub balanced_error_rate: f64,
    pub error_rate: f64,
    /// Magnitude form of the configured notion.
    pub fairness: f64,
    pub objective: f64,
}

/// A trained ensemble: ordered weak learners, their weights, the selected
/// prefix length, and the per-round audit trail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    learners: Vec<Stump>,
    alphas: Vec<f64>,
    /// Running weighted-vote margin per training instance; empty on models
    /// reloaded from an artifact (it is recomputable from the learners).
    margin_sum: Vec<f64>,
    round_traces: Vec<RoundTrace>,
    z_values: Vec<f64>,
    theta: usize,
    config: TrainConfig,
}

impl EnsembleState {
    /// Reassembles a state, e.g. from a serialized artifact. `margin_sum`
    /// may be empty; prediction and diagnostics recompute margins on demand.
    pub fn from_parts(
        learners: Vec<Stump>,
        alphas: Vec<f64>,
        margin_sum: Vec<f64>,
        round_traces: Vec<RoundTrace>,
        z_values: Vec<f64>,
        theta: usize,
        config: TrainConfig,
    ) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if alphas.len() != learners.len() {
            return Err(Error::LengthMismatch {
                left: learners.len(),
                right: alphas.len(),
            });
        }
        if z_values.len() != learners.len() {
            return Err(Error::LengthMismatch {
                left: learners.len(),
                right: z_values.len(),
            });
        }
        if round_traces.len() != learners.len() {
            return Err(Error::LengthMismatch {
                left: learners.len(),
                right: round_traces.len(),
            });
        }
        if alphas.iter().any(|a| a.is_nan() || *a <= 0.0) {
            return Err(Error::Internal(String::from(
                "all learner weights must be positive",
            )));
        }
        if theta < 1 || theta > learners.len() {
            return Err(Error::InvalidSpec(format!(
                "theta {theta} out of range 1..={}",
                learners.len()
            )));
        }
        Ok(EnsembleState {
            learners,
            alphas,
            margin_sum,
            round_traces,
            z_values,
            theta,
            config,
        })
    }

    #[inline]
    pub fn learner_count(&self) -> usize {
        self.learners.len()
    }

    #[inline]
    pub fn learners(&self) -> &[Stump] {
        &self.learners
    }

    #[inline]
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    #[inline]
    pub fn margin_sum(&self) -> &[f64] {
        &self.margin_sum
    }

    #[inline]
    pub fn round_traces(&self) -> &[RoundTrace] {
        &self.round_traces
    }

    #[inline]
    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    /// Selected prefix length, in `1..=learner_count()`.
    #[inline]
    pub fn theta(&self) -> usize {
        self.theta
    }

    #[inline]
    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn set_theta(&mut self, theta: usize) -> Result<()> {
        if theta < 1 || theta > self.learners.len() {
            return Err(Error::InvalidSpec(format!(
                "theta {theta} out of range 1..={}",
                self.learners.len()
            )));
        }
        self.theta = theta;
        Ok(())
    }

    /// Weighted-vote margins of the first `prefix` learners on `d`.
    pub fn prefix_margins(&self, d: &Dataset, prefix: usize) -> Result<Vec<f64>> {
        if prefix < 1 || prefix > self.learners.len() {
            return Err(Error::InvalidSpec(format!(
                "prefix {prefix} out of range 1..={}",
                self.learners.len()
            )));
        }
        let mut margins = vec![0.0; d.row_count()];
        for (stump, alpha) in self.learners[..prefix].iter().zip(&self.alphas) {
            let column = d.column(stump.feature_index)?;
            for (margin, &value) in margins.iter_mut().zip(column) {
                *margin += alpha * stump.classify(value).sign();
            }
        }
        Ok(margins)
    }

    /// Sign of the selected prefix's weighted vote; a zero margin is the
    /// negative class.
    pub fn predict(&self, d: &Dataset) -> Result<Vec<Label>> {
        self.predict_prefix(d, self.theta)
    }

    pub fn predict_prefix(&self, d: &Dataset, prefix: usize) -> Result<Vec<Label>> {
        Ok(self
            .prefix_margins(d, prefix)?
            .iter()
            .map(|&m| Label::from_margin(m))
            .collect())
    }
}

/// Signed fairness deltas of the full committed ensemble's predictions
/// (`sign(margin)`, zero margins negative) over `d`.
pub fn cumulative_deltas(ensemble: &EnsembleState, d: &Dataset) -> Result<FairnessDeltas> {
    if ensemble.learner_count() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let predictions = ensemble.predict_prefix(d, ensemble.learner_count())?;
    FairnessDeltas::from_predictions(&predictions, d.labels(), d.groups())
}

fn fairness_magnitude(confusion: &GroupConfusion, notion: FairnessNotion) -> Result<f64> {
    match notion {
        FairnessNotion::StatisticalParity => Ok(confusion.statistical_parity()?.abs()),
        FairnessNotion::EqualOpportunity => Ok(confusion.equal_opportunity()?.abs()),
        FairnessNotion::DisparateMistreatment => Ok(confusion.disparate_mistreatment()?.magnitude),
    }
}

/// Objective components for every prefix length `1..=learner_count()`,
/// evaluated on `d` with `cfg`'s blend parameter and notion.
pub fn prefix_objectives(
    ensemble: &EnsembleState,
    d: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<PrefixObjective>> {
    if ensemble.learner_count() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut margins = vec![0.0; d.row_count()];
    let mut out = Vec::with_capacity(ensemble.learner_count());
    for (stump, alpha) in ensemble.learners().iter().zip(ensemble.alphas()) {
        let column = d.column(stump.feature_index)?;
        for (margin, &value) in margins.iter_mut().zip(column) {
            *margin += alpha * stump.classify(value).sign();
        }
        let predictions: Vec<Label> = margins.iter().map(|&m| Label::from_margin(m)).collect();
        let confusion = confusion_by_group(d.labels(), &predictions, d.groups())?;
        let balanced_error_rate = confusion.balanced_error_rate()?;
        let error_rate = confusion.error_rate()?;
        let fairness = fairness_magnitude(&confusion, cfg.notion)?;
        let objective = cfg.c * balanced_error_rate + (1.0 - cfg.c) * error_rate + fairness;
        out.push(PrefixObjective {
            balanced_error_rate,
            error_rate,
            fairness,
            objective,
        });
    }
    Ok(out)
}

/// The prefix length minimizing `c * BER + (1 - c) * ER + fairness` on the
/// validation set; ties go to the smallest prefix.
pub fn select_theta(
    ensemble: &EnsembleState,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<usize> {
    let objectives = prefix_objectives(ensemble, validation, cfg).map_err(|e| match e {
        Error::UndefinedRate { subset } => Error::SelectionDegenerate { subset },
        other => other,
    })?;
    let mut best = 0;
    for (idx, candidate) in objectives.iter().enumerate() {
        if candidate.objective < objectives[best].objective {
            best = idx;
        }
    }
    Ok(best + 1)
}

fn check_validation_for(d: &Dataset, notion: FairnessNotion) -> Result<()> {
    d.check_training_viable()?;
    match notion {
        FairnessNotion::StatisticalParity => Ok(()),
        // FNR/FPR deltas need the per-group class subsets.
        FairnessNotion::EqualOpportunity | FairnessNotion::DisparateMistreatment => {
            d.check_group_class_cells()
        }
    }
}

/// Reusable trainer: holds the train set and its per-feature sort orders so
/// multiple configurations can be fit on one split without re-sorting.
pub struct Trainer<'a> {
    train: &'a Dataset,
    fitter: StumpFitter,
}

impl<'a> Trainer<'a> {
    /// Validates that the training data supports fairness accounting: both
    /// classes, both groups, and all four group-by-class cells must be
    /// non-empty (the per-round trace records all three deltas regardless
    /// of the configured notion).
    pub fn new(train: &'a Dataset) -> Result<Self> {
        train.check_training_viable()?;
        train.check_group_class_cells()?;
        Ok(Trainer {
            train,
            fitter: StumpFitter::new(train),
        })
    }

    pub fn train_data(&self) -> &Dataset {
        self.train
    }

    /// Runs the boosting loop and selects the final prefix on `validation`.
    pub fn fit(&self, validation: &Dataset, cfg: &TrainConfig) -> Result<EnsembleState> {
        cfg.validate()?;
        check_validation_for(validation, cfg.notion)?;
        if validation.column_count() != self.train.column_count() {
            return Err(Error::LengthMismatch {
                left: self.train.column_count(),
                right: validation.column_count(),
            });
        }

        let train = self.train;
        let n = train.row_count();
        let labels = train.labels();
        let groups = train.groups();

        let mut weights = WeightDistribution::uniform(n);
        let mut margins = vec![0.0; n];
        let mut cost_products = vec![1.0; n];

        let mut learners: Vec<Stump> = Vec::new();
        let mut alphas: Vec<f64> = Vec::new();
        let mut z_values: Vec<f64> = Vec::new();
        let mut traces: Vec<RoundTrace> = Vec::new();
        let mut first_round_note = String::new();

        for round in 1..=cfg.rounds {
            let stump = self.fitter.fit(train, &weights);
            let predictions = stump.predict(train)?;

            let mut weighted_error = 0.0;
            for (i, wi) in weights.as_slice().iter().enumerate() {
                if predictions[i] != labels[i] {
                    weighted_error += wi;
                }
            }

            // Provisional cost-free weight for scoring the current round
            // inside the cumulative deltas.
            let provisional_alpha = if weighted_error <= 0.0 {
                alpha_clamp()
            } else if weighted_error >= 1.0 {
                -alpha_clamp()
            } else {
                0.5 * libm::log((1.0 - weighted_error) / weighted_error)
            };

            let deltas = match cfg.mode {
                Mode::NoCumul => FairnessDeltas::from_predictions(&predictions, labels, groups)?,
                Mode::AdaFair | Mode::VanillaAdaBoost => {
                    let scored: Vec<Label> = match cfg.delta_basis {
                        DeltaBasis::ProvisionalInclusive => margins
                            .iter()
                            .zip(&predictions)
                            .map(|(&m, p)| Label::from_margin(m + provisional_alpha * p.sign()))
                            .collect(),
                        DeltaBasis::PriorRoundsOnly => {
                            margins.iter().map(|&m| Label::from_margin(m)).collect()
                        }
                    };
                    FairnessDeltas::from_predictions(&scored, labels, groups)?
                }
            };

            let costs = match cfg.mode {
                Mode::VanillaAdaBoost => FairnessCosts::zero(n),
                Mode::AdaFair | Mode::NoCumul => {
                    fairness_costs(&deltas, &predictions, train, cfg.notion, cfg.epsilon)
                }
            };

            let (alpha, stop_after_commit) =
                match compute_alpha(&weights, &costs, &predictions, labels) {
                    AlphaOutcome::Positive(a) => (a, false),
                    AlphaOutcome::Clamped(a) => (a, true),
                    AlphaOutcome::NotPositive => {
                        if round == 1 {
                            first_round_note = format!(
                                "round 1 weight condition failed: weighted error {weighted_error}, \
                                 boosted instances {}",
                                costs.boosted_count()
                            );
                        }
                        break;
                    }
                };

            let (next_weights, z) =
                update_distribution(&weights, &costs, alpha, &predictions, labels)?;

            for (margin, prediction) in margins.iter_mut().zip(&predictions) {
                *margin += alpha * prediction.sign();
            }
            for (product, i) in cost_products.iter_mut().zip(0..n) {
                *product *= costs.cost(i);
            }
            let min_cost_product = cost_products.iter().copied().fold(f64::INFINITY, f64::min);

            learners.push(stump);
            alphas.push(alpha);
            z_values.push(z);
            traces.push(RoundTrace {
                round,
                weighted_error,
                alpha,
                z,
                delta_sp: deltas.delta_sp,
                delta_fnr: deltas.delta_fnr,
                delta_fpr: deltas.delta_fpr,
                boosted_instances: costs.boosted_count(),
                min_cost_product,
                validation_balanced_error_rate: 0.0,
                validation_error_rate: 0.0,
                validation_fairness: 0.0,
                validation_objective: 0.0,
            });
            weights = next_weights;
            if stop_after_commit {
                break;
            }
        }

        if learners.is_empty() {
            return Err(Error::NoUsableRounds(first_round_note));
        }

        let mut state = EnsembleState {
            learners,
            alphas,
            margin_sum: margins,
            round_traces: traces,
            z_values,
            theta: 1,
            config: *cfg,
        };

        let objectives = prefix_objectives(&state, validation, cfg).map_err(|e| match e {
            Error::UndefinedRate { subset } => Error::SelectionDegenerate { subset },
            other => other,
        })?;
        for (trace, objective) in state.round_traces.iter_mut().zip(&objectives) {
            trace.validation_balanced_error_rate = objective.balanced_error_rate;
            trace.validation_error_rate = objective.error_rate;
            trace.validation_fairness = objective.fairness;
            trace.validation_objective = objective.objective;
        }
        let mut best = 0;
        for (idx, candidate) in objectives.iter().enumerate() {
            if candidate.objective < objectives[best].objective {
                best = idx;
            }
        }
        state.theta = best + 1;
        Ok(state)
    }
}

/// Trains a fresh ensemble; one-shot form of [`Trainer`].
pub fn fit(train: &Dataset, validation: &Dataset, cfg: &TrainConfig) -> Result<EnsembleState> {
    Trainer::new(train)?.fit(validation, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, SyntheticSpec};
    use crate::error::Subset;

    fn close(a: f64, b: f64, tolerance: f64) -> bool {
        (a - b).abs() <= tolerance
    }

    /// Dataset whose single-stump predictions reproduce the 6-instance
    /// metrics fixture: truth (+,+,-,+,-,-), predictions (+,-,-,+,+,-),
    /// groups (s,s,s,s̄,s̄,s̄).
    fn fixture_dataset_and_stump() -> (Dataset, Stump) {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        let xs = vec![5.0, 1.0, 2.0, 6.0, 7.0, 0.0];
        let labels = vec![Pos, Pos, Neg, Pos, Neg, Neg];
        let groups = vec![P, P, P, N, N, N];
        let d = Dataset::new(vec![xs], labels, groups, vec!["x".into()]).unwrap();
        let stump = Stump {
            feature_index: 0,
            threshold: 4.5,
            polarity: -1,
            training_weighted_error: 0.0,
        };
        (d, stump)
    }

    fn single_learner_state(d: &Dataset, stump: Stump, alpha: f64) -> EnsembleState {
        let trace = RoundTrace {
            round: 1,
            weighted_error: stump.training_weighted_error,
            alpha,
            z: 1.0,
            delta_sp: 0.0,
            delta_fnr: 0.0,
            delta_fpr: 0.0,
            boosted_instances: 0,
            min_cost_product: 1.0,
            validation_balanced_error_rate: 0.0,
            validation_error_rate: 0.0,
            validation_fairness: 0.0,
            validation_objective: 0.0,
        };
        let _ = d;
        EnsembleState::from_parts(
            vec![stump],
            vec![alpha],
            Vec::new(),
            vec![trace],
            vec![1.0],
            1,
            TrainConfig::new(1, FairnessNotion::StatisticalParity, Mode::AdaFair),
        )
        .unwrap()
    }

    #[test]
    fn alpha_three_of_four_correct() {
        let w = WeightDistribution::uniform(4);
        let costs = FairnessCosts::zero(4);
        use Label::{Negative as Neg, Positive as Pos};
        let truth = [Pos, Pos, Pos, Neg];
        let predictions = [Pos, Pos, Pos, Pos];
        match compute_alpha(&w, &costs, &predictions, &truth) {
            AlphaOutcome::Positive(a) => {
                assert!(close(a, 0.5 * (3.0f64).ln(), 1e-12), "alpha {a}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn alpha_with_doubled_cost_on_the_error() {
        let w = WeightDistribution::uniform(4);
        let costs = FairnessCosts {
            u: vec![0.0, 0.0, 0.0, 1.0],
        };
        use Label::{Negative as Neg, Positive as Pos};
        let truth = [Pos, Pos, Pos, Neg];
        let predictions = [Pos, Pos, Pos, Pos];
        match compute_alpha(&w, &costs, &predictions, &truth) {
            AlphaOutcome::Positive(a) => {
                assert!(close(a, 0.5 * (0.75f64 / 0.5).ln(), 1e-12), "alpha {a}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn alpha_at_exactly_half_mass_terminates() {
        let w = WeightDistribution::uniform(4);
        let costs = FairnessCosts::zero(4);
        use Label::{Negative as Neg, Positive as Pos};
        let truth = [Pos, Pos, Neg, Neg];
        let predictions = [Pos, Pos, Pos, Pos];
        assert_eq!(
            compute_alpha(&w, &costs, &predictions, &truth),
            AlphaOutcome::NotPositive
        );
    }

    #[test]
    fn alpha_clamps_on_zero_incorrect_mass() {
        let w = WeightDistribution::uniform(2);
        let costs = FairnessCosts::zero(2);
        let truth = [Label::Positive, Label::Negative];
        match compute_alpha(&w, &costs, &truth, &truth) {
            AlphaOutcome::Clamped(a) => assert!(close(a, alpha_clamp(), 0.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distribution_update_identity_case() {
        let w = WeightDistribution::uniform(4);
        let costs = FairnessCosts::zero(4);
        let truth = [
            Label::Positive,
            Label::Negative,
            Label::Positive,
            Label::Negative,
        ];
        let (next, z) = update_distribution(&w, &costs, 0.0, &truth, &truth).unwrap();
        assert_eq!(next.as_slice(), w.as_slice());
        assert!(close(z, 1.0, 1e-15));
    }

    #[test]
    fn distribution_update_worked_example() {
        let w = WeightDistribution::uniform(2);
        let costs = FairnessCosts { u: vec![0.0, 1.0] };
        let truth = [Label::Positive, Label::Negative];
        let (next, z) = update_distribution(&w, &costs, (2.0f64).ln(), &truth, &truth).unwrap();
        assert!(close(z, 0.75, 1e-15), "z {z}");
        assert!(close(next.as_slice()[0], 1.0 / 3.0, 1e-15));
        assert!(close(next.as_slice()[1], 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn distribution_update_always_normalizes() {
        let w = WeightDistribution::new(vec![0.125, 0.5, 0.25, 0.125]).unwrap();
        let costs = FairnessCosts {
            u: vec![0.3, 0.0, 0.9, 0.0],
        };
        use Label::{Negative as Neg, Positive as Pos};
        let truth = [Pos, Neg, Pos, Neg];
        let predictions = [Neg, Neg, Pos, Pos];
        let (next, _) = update_distribution(&w, &costs, 0.7, &predictions, &truth).unwrap();
        assert!(close(kahan_sum(next.as_slice()), 1.0, 1e-12));
    }

    #[test]
    fn normalization_tolerance_holds_at_census_scale() {
        // A naive sum of 300k weights carries enough rounding error to blow
        // a 1e-12 budget; the compensated validation must not.
        let n = 300_000;
        let w = WeightDistribution::uniform(n);
        let costs = FairnessCosts {
            u: (0..n).map(|i| if i % 7 == 0 { 0.4 } else { 0.0 }).collect(),
        };
        let truth: alloc::vec::Vec<Label> = (0..n)
            .map(|i| if i % 3 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        let predictions: alloc::vec::Vec<Label> = (0..n)
            .map(|i| if i % 5 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        let (next, z) = update_distribution(&w, &costs, 0.37, &predictions, &truth).unwrap();
        assert!(z > 0.0);
        assert!(close(kahan_sum(next.as_slice()), 1.0, WeightDistribution::SUM_TOLERANCE));
    }

    #[test]
    fn cumulative_deltas_reproduce_fixture_values() {
        let (d, stump) = fixture_dataset_and_stump();
        let state = single_learner_state(&d, stump, 1.0);
        let deltas = cumulative_deltas(&state, &d).unwrap();
        assert!(close(deltas.delta_sp, 1.0 / 3.0, 1e-12));
        assert!(close(deltas.delta_fnr, -0.5, 1e-12));
        assert!(close(deltas.delta_fpr, 0.5, 1e-12));
    }

    #[test]
    fn cumulative_deltas_vanish_on_perfect_ensemble() {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        let d = Dataset::new(
            vec![vec![1.0, 2.0, 3.0, 4.0]],
            vec![Neg, Neg, Pos, Pos],
            vec![P, N, P, N],
            vec!["x".into()],
        )
        .unwrap();
        let stump = Stump {
            feature_index: 0,
            threshold: 2.5,
            polarity: -1,
            training_weighted_error: 0.0,
        };
        let state = single_learner_state(&d, stump, 1.0);
        let deltas = cumulative_deltas(&state, &d).unwrap();
        assert_eq!(deltas.delta_fnr, 0.0);
        assert_eq!(deltas.delta_fpr, 0.0);
    }

    #[test]
    fn opposite_learners_cancel_to_all_negative() {
        let (d, stump) = fixture_dataset_and_stump();
        let flipped = Stump {
            polarity: 1,
            ..stump
        };
        let trace = single_learner_state(&d, stump, 1.0).round_traces()[0].clone();
        let state = EnsembleState::from_parts(
            vec![stump, flipped],
            vec![1.0, 1.0],
            Vec::new(),
            vec![trace.clone(), trace],
            vec![1.0, 1.0],
            2,
            TrainConfig::new(2, FairnessNotion::StatisticalParity, Mode::AdaFair),
        )
        .unwrap();
        // Equal weights, opposite predictions: every margin is exactly zero,
        // so every row is predicted negative and parity is exact.
        let predictions = state.predict(&d).unwrap();
        assert!(predictions.iter().all(|p| *p == Label::Negative));
        let deltas = cumulative_deltas(&state, &d).unwrap();
        assert_eq!(deltas.delta_sp, 0.0);
    }

    #[test]
    fn costs_follow_sp_sign_rule() {
        let (d, stump) = fixture_dataset_and_stump();
        let predictions = stump.predict(&d).unwrap();
        let deltas = FairnessDeltas {
            delta_sp: 1.0 / 3.0,
            delta_fnr: -0.5,
            delta_fpr: 0.5,
        };
        let costs = fairness_costs(
            &deltas,
            &predictions,
            &d,
            FairnessNotion::StatisticalParity,
            0.0,
        );
        // Positive delta boosts the protected group; row 1 is its only
        // misclassified member. Row 4 (non-protected, misclassified) gets 0.
        assert_eq!(costs.u(), &[0.0, 1.0 / 3.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(costs.boosted_count(), 1);
    }

    #[test]
    fn costs_follow_eqop_sign_rule() {
        let (d, stump) = fixture_dataset_and_stump();
        let predictions = stump.predict(&d).unwrap();
        let deltas = FairnessDeltas {
            delta_sp: 1.0 / 3.0,
            delta_fnr: -0.5,
            delta_fpr: 0.5,
        };
        let costs = fairness_costs(
            &deltas,
            &predictions,
            &d,
            FairnessNotion::EqualOpportunity,
            0.0,
        );
        // Negative FNR delta means protected positives suffer the higher
        // false-negative rate; row 1 is the one misclassified among them.
        assert_eq!(costs.u(), &[0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);

        // Flipped sign points at non-protected positives, none of which are
        // misclassified here.
        let flipped = FairnessDeltas {
            delta_fnr: 0.5,
            ..deltas
        };
        let costs = fairness_costs(
            &flipped,
            &predictions,
            &d,
            FairnessNotion::EqualOpportunity,
            0.0,
        );
        assert_eq!(costs.boosted_count(), 0);
    }

    #[test]
    fn costs_follow_dm_fpr_rule_on_negatives() {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        // Fixture with instance 3's prediction flipped to positive:
        // predictions (+,-,+,+,+,-).
        let xs = vec![5.0, 1.0, 5.5, 6.0, 7.0, 0.0];
        let labels = vec![Pos, Pos, Neg, Pos, Neg, Neg];
        let groups = vec![P, P, P, N, N, N];
        let d = Dataset::new(vec![xs], labels.clone(), groups, vec!["x".into()]).unwrap();
        let stump = Stump {
            feature_index: 0,
            threshold: 4.5,
            polarity: -1,
            training_weighted_error: 0.0,
        };
        let predictions = stump.predict(&d).unwrap();
        let deltas =
            FairnessDeltas::from_predictions(&predictions, d.labels(), d.groups()).unwrap();
        assert!(
            close(deltas.delta_fpr, -0.5, 1e-12),
            "delta_fpr {}",
            deltas.delta_fpr
        );

        let costs = fairness_costs(
            &deltas,
            &predictions,
            &d,
            FairnessNotion::DisparateMistreatment,
            0.0,
        );
        // Negative FPR delta: protected negatives carry the higher
        // false-positive rate; instance 3 (index 2) is the misclassified
        // one and receives |delta_fpr|.
        assert_eq!(costs.u()[2], 0.5);
        // FNR rule fires on the protected positives (delta_fnr = -0.5);
        // instance 2 (index 1) is their misclassified member.
        assert_eq!(costs.u()[1], 0.5);
        // The two rules touch disjoint rows and nothing else is boosted.
        assert_eq!(costs.boosted_count(), 2);
    }

    #[test]
    fn epsilon_gates_cost_assignment_strictly() {
        let (d, stump) = fixture_dataset_and_stump();
        let predictions = stump.predict(&d).unwrap();
        let deltas = FairnessDeltas {
            delta_sp: 0.2,
            delta_fnr: 0.0,
            delta_fpr: 0.0,
        };
        let at_tolerance = fairness_costs(
            &deltas,
            &predictions,
            &d,
            FairnessNotion::StatisticalParity,
            0.2,
        );
        assert_eq!(at_tolerance.boosted_count(), 0);
        let below_tolerance = fairness_costs(
            &deltas,
            &predictions,
            &d,
            FairnessNotion::StatisticalParity,
            0.19,
        );
        assert_eq!(below_tolerance.boosted_count(), 1);
    }

    #[test]
    fn separable_data_trains_to_zero_error_and_parity() {
        let spec = SyntheticSpec {
            n: 64,
            positive_fraction: 0.5,
            protected_fraction: 0.5,
            bias_shift: 0.0,
            noise: 0.1,
            seed: 3,
        };
        let d = synthesize(&spec).unwrap();
        for notion in [
            FairnessNotion::StatisticalParity,
            FairnessNotion::EqualOpportunity,
            FairnessNotion::DisparateMistreatment,
        ] {
            let cfg = TrainConfig::new(10, notion, Mode::AdaFair);
            let state = fit(&d, &d, &cfg).unwrap();
            assert!(state.learner_count() <= 10);
            let predictions = state.predict(&d).unwrap();
            assert_eq!(predictions, d.labels().to_vec(), "notion {notion:?}");
            let deltas = cumulative_deltas(&state, &d).unwrap();
            assert_eq!(
                deltas.delta_sp.abs() + deltas.delta_fnr.abs() + deltas.delta_fpr.abs(),
                0.0
            );
        }
    }

    #[test]
    fn select_theta_takes_argmin_with_smallest_tie() {
        // Synthetic prefix objectives exercised through a hand-built
        // three-learner ensemble are covered in the integration suite; here
        // the argmin rule itself is checked on crafted objective vectors via
        // the same comparison logic.
        let objectives = [0.40, 0.31, 0.33];
        let mut best = 0;
        for (idx, value) in objectives.iter().enumerate() {
            if *value < objectives[best] {
                best = idx;
            }
        }
        assert_eq!(best + 1, 2);

        let tied = [0.30, 0.30, 0.35];
        let mut best = 0;
        for (idx, value) in tied.iter().enumerate() {
            if *value < tied[best] {
                best = idx;
            }
        }
        assert_eq!(best + 1, 1);
    }

    #[test]
    fn c_extremes_trade_error_for_balanced_error() {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        // Ten rows, positives at x = 9, 10; groups alternate so both
        // prefixes have exactly equal positive-prediction rates across
        // groups (fairness term zero for both).
        let xs: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let labels: Vec<Label> = (1..=10).map(|v| if v >= 9 { Pos } else { Neg }).collect();
        let groups: Vec<Group> = (1..=10).map(|v| if v % 2 == 1 { P } else { N }).collect();
        let d = Dataset::new(vec![xs], labels, groups, vec!["x".into()]).unwrap();

        // Prefix 1: all-negative constant stump. ER = 0.2, BER = 0.5.
        let h1 = Stump {
            feature_index: 0,
            threshold: f64::NEG_INFINITY,
            polarity: 1,
            training_weighted_error: 0.2,
        };
        // Prefix 2 dominated by h2: positive for x > 4.5. ER = 0.4, BER = 0.25.
        let h2 = Stump {
            feature_index: 0,
            threshold: 4.5,
            polarity: -1,
            training_weighted_error: 0.4,
        };
        let trace = RoundTrace {
            round: 1,
            weighted_error: 0.0,
            alpha: 0.5,
            z: 1.0,
            delta_sp: 0.0,
            delta_fnr: 0.0,
            delta_fpr: 0.0,
            boosted_instances: 0,
            min_cost_product: 1.0,
            validation_balanced_error_rate: 0.0,
            validation_error_rate: 0.0,
            validation_fairness: 0.0,
            validation_objective: 0.0,
        };
        let state = EnsembleState::from_parts(
            vec![h1, h2],
            vec![0.5, 1.0],
            Vec::new(),
            vec![trace.clone(), trace],
            vec![1.0, 1.0],
            1,
            TrainConfig::new(2, FairnessNotion::StatisticalParity, Mode::AdaFair),
        )
        .unwrap();

        let mut cfg = TrainConfig::new(2, FairnessNotion::StatisticalParity, Mode::AdaFair);
        cfg.c = 0.0;
        let theta_er = select_theta(&state, &d, &cfg).unwrap();
        cfg.c = 1.0;
        let theta_ber = select_theta(&state, &d, &cfg).unwrap();
        assert_eq!(theta_er, 1);
        assert_eq!(theta_ber, 2);

        let objectives = prefix_objectives(&state, &d, &cfg).unwrap();
        assert!(objectives[theta_er - 1].error_rate < objectives[theta_ber - 1].error_rate);
        assert!(
            objectives[theta_ber - 1].balanced_error_rate
                < objectives[theta_er - 1].balanced_error_rate
        );
        assert_eq!(objectives[0].fairness, 0.0);
        assert_eq!(objectives[1].fairness, 0.0);
    }

    #[test]
    fn predict_follows_weighted_vote_and_zero_convention() {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        let d = Dataset::new(
            vec![vec![0.0, 1.0]],
            vec![Pos, Neg],
            vec![P, N],
            vec!["x".into()],
        )
        .unwrap();
        let plus = Stump {
            feature_index: 0,
            threshold: 0.5,
            polarity: 1,
            training_weighted_error: 0.0,
        };
        let minus = Stump {
            feature_index: 0,
            threshold: 0.5,
            polarity: -1,
            training_weighted_error: 0.0,
        };

        // Single stump behaves like the stump itself.
        let single = single_learner_state(&d, plus, 1.0);
        assert_eq!(single.predict(&d).unwrap(), plus.predict(&d).unwrap());

        // Disagreeing stumps: the heavier first stump wins.
        let trace = single.round_traces()[0].clone();
        let cfg = TrainConfig::new(2, FairnessNotion::StatisticalParity, Mode::AdaFair);
        let state = EnsembleState::from_parts(
            vec![plus, minus],
            vec![2.0, 1.0],
            Vec::new(),
            vec![trace.clone(), trace.clone()],
            vec![1.0, 1.0],
            2,
            cfg,
        )
        .unwrap();
        assert_eq!(state.predict(&d).unwrap(), plus.predict(&d).unwrap());

        // Exactly cancelling stumps: zero margin goes negative.
        let state = EnsembleState::from_parts(
            vec![plus, minus],
            vec![1.0, 1.0],
            Vec::new(),
            vec![trace.clone(), trace],
            vec![1.0, 1.0],
            2,
            cfg,
        )
        .unwrap();
        assert_eq!(state.predict(&d).unwrap(), vec![Neg, Neg]);
    }

    #[test]
    fn predict_rejects_arity_mismatch() {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        let d = Dataset::new(
            vec![vec![0.0, 1.0]],
            vec![Pos, Neg],
            vec![P, N],
            vec!["x".into()],
        )
        .unwrap();
        let stump = Stump {
            feature_index: 5,
            threshold: 0.5,
            polarity: 1,
            training_weighted_error: 0.0,
        };
        let state = single_learner_state(&d, stump, 1.0);
        assert!(matches!(
            state.predict(&d).unwrap_err(),
            Error::FeatureOutOfRange {
                index: 5,
                columns: 1
            }
        ));
    }

    #[test]
    fn vanilla_mode_never_assigns_costs() {
        let spec = SyntheticSpec {
            n: 200,
            positive_fraction: 0.3,
            protected_fraction: 0.5,
            bias_shift: 1.5,
            noise: 0.8,
            seed: 9,
        };
        let d = synthesize(&spec).unwrap();
        let cfg = TrainConfig::new(
            15,
            FairnessNotion::DisparateMistreatment,
            Mode::VanillaAdaBoost,
        );
        let state = fit(&d, &d, &cfg).unwrap();
        for trace in state.round_traces() {
            assert_eq!(trace.boosted_instances, 0);
            assert_eq!(trace.min_cost_product, 1.0);
            assert!(trace.alpha > 0.0);
        }
    }

    #[test]
    fn training_rejects_single_group_data() {
        use Label::{Negative as Neg, Positive as Pos};
        let d = Dataset::new(
            vec![vec![1.0, 2.0, 3.0, 4.0]],
            vec![Pos, Pos, Neg, Neg],
            vec![Group::Protected; 4],
            vec!["x".into()],
        )
        .unwrap();
        let cfg = TrainConfig::new(5, FairnessNotion::StatisticalParity, Mode::AdaFair);
        assert!(matches!(
            fit(&d, &d, &cfg).unwrap_err(),
            Error::UndefinedRate {
                subset: Subset::NonProtected
            }
        ));
    }

    #[test]
    fn first_round_termination_is_a_training_error() {
        use Group::{NonProtected as N, Protected as P};
        use Label::{Negative as Neg, Positive as Pos};
        // A single constant feature with balanced classes: the best stump
        // is a constant classifier at exactly half the weight mass, so the
        // positivity condition fails in round 1 and no learner is usable.
        let d = Dataset::new(
            vec![vec![1.0; 4]],
            vec![Pos, Pos, Neg, Neg],
            vec![P, N, P, N],
            vec!["x".into()],
        )
        .unwrap();
        let cfg = TrainConfig::new(5, FairnessNotion::StatisticalParity, Mode::VanillaAdaBoost);
        let err = fit(&d, &d, &cfg).unwrap_err();
        assert!(matches!(err, Error::NoUsableRounds(_)), "{err}");
        assert!(err.to_string().contains("round 1"), "{err}");
    }
}
