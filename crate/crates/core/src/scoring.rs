//! The aggregation engine.
//!
//! A device's coefficient is the weighted mean of its factor values scaled
//! to a percentage; the case coefficient is the mean of the device
//! coefficients. With strict completeness and uniform weights that equals
//! the flat sum of all scores over nine slots per device, and splits exactly
//! into the three status aggregates recombined by arity:
//! `(3*IQA_I + 2*IQA_II + 4*IQA_III) / 9 = IQA_tot`.
//!
//! All intermediate values are exact rationals. Nothing is rounded here.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::model::{
    CaseFile, DeviceAssessment, FactorId, Layer, MissingPolicy, ThresholdPolicy, Weights,
};
use crate::percent::{mean_percent, Percent, Rational};
use crate::taxonomy::InfoStatus;

/// One computed coefficient, with enough context to audit how it was formed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IqaResult {
    /// The coefficient, exact, within [0, 100].
    pub value: Percent,
    /// How many factor values were aggregated into the numerator.
    pub numerator_terms: usize,
    /// Human-readable description of the formula instance.
    pub basis: String,
}

/// Layer coefficient: the raw sum of per-device layer means, plus the same
/// value rescaled by the contributing device count.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LayerIqaResult {
    pub layer: Layer,
    /// Sum over contributing devices of the device's mean cell value; grows
    /// with the device count and is not a percentage.
    pub raw: Rational,
    /// `raw` divided by the contributing device count, as a percentage.
    pub normalized: Percent,
    /// Contributing device count.
    pub devices: usize,
    /// Per-device layer means, case order.
    pub per_device_terms: Vec<(String, Rational)>,
}

/// The three status aggregates next to the case coefficient, demonstrating
/// the arity-weighted recombination identity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Decomposition {
    pub as_reality: Percent,
    pub about_reality: Percent,
    pub for_reality: Percent,
    /// `(3*I + 2*II + 4*III) / 9`, computed exactly.
    pub recombined: Percent,
    /// The case coefficient computed directly.
    pub total: Percent,
}

/// Outcome of applying a retention cutoff to every device.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GateOutcome {
    cutoff: Percent,
    justification: String,
    retained: Vec<String>,
    discarded: Vec<String>,
    values: BTreeMap<String, Percent>,
}

impl GateOutcome {
    pub fn cutoff(&self) -> Percent {
        self.cutoff
    }

    pub fn justification(&self) -> &str {
        &self.justification
    }

    /// Devices at or above the cutoff, in evaluation order.
    pub fn retained(&self) -> &[String] {
        &self.retained
    }

    /// Devices strictly below the cutoff, in evaluation order.
    pub fn discarded(&self) -> &[String] {
        &self.discarded
    }

    pub fn values(&self) -> &BTreeMap<String, Percent> {
        &self.values
    }

    pub fn is_retained(&self, device_id: &str) -> bool {
        self.retained.iter().any(|d| d == device_id)
    }
}

/// Why one device could not be aggregated.
#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum DeviceError {
    #[error("missing factors {}", codes(.0))]
    MissingFactors(Vec<FactorId>),
    #[error("no scored factors under the active weights")]
    EmptyAssessment,
    #[error("no scores in the {0} layer")]
    NoLayerScores(Layer),
}

fn codes(factors: &[FactorId]) -> String {
    factors
        .iter()
        .map(|f| f.code())
        .collect::<Vec<_>>()
        .join(", ")
}

/// A device failure tagged with its device.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DeviceFailure {
    pub device_id: String,
    pub error: DeviceError,
}

fn failure_lines(failures: &[DeviceFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{}: {}", f.device_id, f.error))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Case-level aggregation failures. Per-device problems are collected
/// across the whole case, not reported one at a time.
#[derive(Error, Clone, PartialEq, Eq, Debug)]
pub enum ScoringError {
    #[error("case has no devices")]
    EmptyCase,
    #[error("{}", failure_lines(.0))]
    Devices(Vec<DeviceFailure>),
    #[error("no {} values recorded anywhere in the case", .status.describe())]
    EmptyCategory { status: InfoStatus },
    #[error("no {layer} layer scores recorded anywhere in the case")]
    NoLayeredScores { layer: Layer },
    #[error("decomposition requires uniform weights across all nine factors")]
    NonUniformWeights,
}

/// Factors in play and their weights: the whitelist when weights are given,
/// otherwise all nine at weight one.
fn included_factors(weights: Option<&Weights>) -> Vec<(FactorId, Rational)> {
    match weights {
        Some(w) => w
            .included()
            .into_iter()
            .map(|f| (f, w.get(f)))
            .collect(),
        None => FactorId::ALL
            .into_iter()
            .map(|f| (f, Rational::from_integer(1)))
            .collect(),
    }
}

/// Numerator, denominator, and term count for one device over a factor set.
fn device_terms(
    device: &DeviceAssessment,
    policy: MissingPolicy,
    included: &[(FactorId, Rational)],
) -> Result<(Rational, Rational, usize), DeviceError> {
    if policy == MissingPolicy::Strict {
        let missing: Vec<FactorId> = included
            .iter()
            .map(|(f, _)| *f)
            .filter(|f| device.score(*f).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(DeviceError::MissingFactors(missing));
        }
    }
    let mut numerator = Rational::zero();
    let mut denominator = Rational::zero();
    let mut terms = 0usize;
    for (factor, weight) in included {
        match device.score(*factor) {
            Some(score) => {
                numerator += *weight * score.value().unit();
                denominator += *weight;
                terms += 1;
            }
            None if policy == MissingPolicy::ImputeZero => {
                denominator += *weight;
                terms += 1;
            }
            None => {}
        }
    }
    if terms == 0 || denominator.is_zero() {
        return Err(DeviceError::EmptyAssessment);
    }
    Ok((numerator, denominator, terms))
}

fn weighting_label(weights: Option<&Weights>) -> &'static str {
    if weights.is_some() {
        "weighted"
    } else {
        "unweighted"
    }
}

/// Coefficient of a single device: the weighted mean of its factor values
/// under the policy, as a percentage.
pub fn device_iqa(
    device: &DeviceAssessment,
    policy: MissingPolicy,
    weights: Option<&Weights>,
) -> Result<IqaResult, DeviceError> {
    let included = included_factors(weights);
    let (numerator, denominator, terms) = device_terms(device, policy, &included)?;
    Ok(IqaResult {
        value: Percent::from_unit(numerator / denominator),
        numerator_terms: terms,
        basis: format!(
            "{} mean of {} factor terms ({})",
            weighting_label(weights),
            terms,
            policy.name()
        ),
    })
}

/// Runs a per-device computation over the whole case, collecting every
/// failure instead of stopping at the first.
fn per_device<T>(
    case: &CaseFile,
    mut compute: impl FnMut(&DeviceAssessment) -> Result<T, DeviceError>,
) -> Result<Vec<(String, T)>, ScoringError> {
    if case.devices.is_empty() {
        return Err(ScoringError::EmptyCase);
    }
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for device in &case.devices {
        match compute(device) {
            Ok(value) => results.push((device.device_id().to_string(), value)),
            Err(error) => failures.push(DeviceFailure {
                device_id: device.device_id().to_string(),
                error,
            }),
        }
    }
    if !failures.is_empty() {
        return Err(ScoringError::Devices(failures));
    }
    Ok(results)
}

/// Every device's coefficient under the case's policy and weights, in case
/// order. Failures are aggregated across all devices.
pub fn device_coefficients(case: &CaseFile) -> Result<Vec<(String, IqaResult)>, ScoringError> {
    per_device(case, |device| {
        device_iqa(device, case.missing_policy, case.weights.as_ref())
    })
}

/// Case coefficient: the mean over devices of the per-device coefficient.
pub fn case_iqa(case: &CaseFile) -> Result<IqaResult, ScoringError> {
    let results = device_coefficients(case)?;
    let terms: usize = results.iter().map(|(_, r)| r.numerator_terms).sum();
    let value = mean_percent(results.iter().map(|(_, r)| r.value))
        .expect("per_device rejects empty cases");
    Ok(IqaResult {
        value,
        numerator_terms: terms,
        basis: format!(
            "mean of {} device coefficients, {} factor terms ({}, {})",
            results.len(),
            terms,
            case.missing_policy.name(),
            weighting_label(case.weights.as_ref())
        ),
    })
}

/// Status aggregate: the weighted mean of every recorded value of the
/// status's factors, pooled across all devices.
pub fn category_iqa(case: &CaseFile, status: InfoStatus) -> Result<IqaResult, ScoringError> {
    if case.devices.is_empty() {
        return Err(ScoringError::EmptyCase);
    }
    let included: Vec<(FactorId, Rational)> = included_factors(case.weights.as_ref())
        .into_iter()
        .filter(|(f, _)| status.factors().contains(f))
        .collect();
    if case.missing_policy == MissingPolicy::Strict {
        let mut failures = Vec::new();
        for device in &case.devices {
            let missing: Vec<FactorId> = included
                .iter()
                .map(|(f, _)| *f)
                .filter(|f| device.score(*f).is_none())
                .collect();
            if !missing.is_empty() {
                failures.push(DeviceFailure {
                    device_id: device.device_id().to_string(),
                    error: DeviceError::MissingFactors(missing),
                });
            }
        }
        if !failures.is_empty() {
            return Err(ScoringError::Devices(failures));
        }
    }
    let mut numerator = Rational::zero();
    let mut denominator = Rational::zero();
    let mut terms = 0usize;
    for device in &case.devices {
        for (factor, weight) in &included {
            match device.score(*factor) {
                Some(score) => {
                    numerator += *weight * score.value().unit();
                    denominator += *weight;
                    terms += 1;
                }
                None if case.missing_policy == MissingPolicy::ImputeZero => {
                    denominator += *weight;
                    terms += 1;
                }
                None => {}
            }
        }
    }
    if terms == 0 || denominator.is_zero() {
        return Err(ScoringError::EmptyCategory { status });
    }
    Ok(IqaResult {
        value: Percent::from_unit(numerator / denominator),
        numerator_terms: terms,
        basis: format!(
            "{} over {} {} terms pooled from {} devices ({})",
            weighting_label(case.weights.as_ref()),
            terms,
            status.describe(),
            case.devices.len(),
            case.missing_policy.name()
        ),
    })
}

/// Layer coefficient. Each contributing device adds the mean of its scored
/// cells in the layer; devices with no cells there are skipped (or refused
/// under strict policy). Factor weights do not apply to layer cells.
pub fn layer_iqa(case: &CaseFile, layer: Layer) -> Result<LayerIqaResult, ScoringError> {
    if case.devices.is_empty() {
        return Err(ScoringError::EmptyCase);
    }
    let mut per_device_terms = Vec::new();
    let mut failures = Vec::new();
    for device in &case.devices {
        let cells: Vec<Rational> = device
            .layer_scores(layer)
            .map(|c| c.value().unit())
            .collect();
        if cells.is_empty() {
            if case.missing_policy == MissingPolicy::Strict {
                failures.push(DeviceFailure {
                    device_id: device.device_id().to_string(),
                    error: DeviceError::NoLayerScores(layer),
                });
            }
            continue;
        }
        let mean = cells.iter().copied().sum::<Rational>()
            / Rational::from_integer(cells.len() as i128);
        per_device_terms.push((device.device_id().to_string(), mean));
    }
    if !failures.is_empty() {
        return Err(ScoringError::Devices(failures));
    }
    if per_device_terms.is_empty() {
        return Err(ScoringError::NoLayeredScores { layer });
    }
    let raw: Rational = per_device_terms.iter().map(|(_, m)| *m).sum();
    let devices = per_device_terms.len();
    Ok(LayerIqaResult {
        layer,
        raw,
        normalized: Percent::from_unit(raw / Rational::from_integer(devices as i128)),
        devices,
        per_device_terms,
    })
}

/// Splits the case coefficient into the three status aggregates and
/// recombines them by arity. Demands complete nine-factor devices and
/// uniform (or absent) weights, the regime where the identity
/// `(3*I + 2*II + 4*III) / 9 = total` holds exactly.
pub fn decompose(case: &CaseFile) -> Result<Decomposition, ScoringError> {
    if let Some(weights) = &case.weights {
        if !weights.is_uniform() {
            return Err(ScoringError::NonUniformWeights);
        }
    }
    // Uniform weights cancel out exactly, so the split is computed over a
    // strict unweighted view of the same devices.
    let complete = CaseFile {
        missing_policy: MissingPolicy::Strict,
        weights: None,
        ..case.clone()
    };
    let total = case_iqa(&complete)?.value;
    let as_reality = category_iqa(&complete, InfoStatus::AsReality)?.value;
    let about_reality = category_iqa(&complete, InfoStatus::AboutReality)?.value;
    let for_reality = category_iqa(&complete, InfoStatus::ForReality)?.value;
    let recombined = Percent::new(
        (Rational::from_integer(3) * as_reality.value()
            + Rational::from_integer(2) * about_reality.value()
            + Rational::from_integer(4) * for_reality.value())
            / Rational::from_integer(9),
    )
    .expect("convex combination of percentages stays in range");
    Ok(Decomposition {
        as_reality,
        about_reality,
        for_reality,
        recombined,
        total,
    })
}

/// Applies the retention cutoff to every device coefficient computed under
/// the case's policy and weights. Comparison is exact and inclusive.
pub fn gate(case: &CaseFile, policy: &ThresholdPolicy) -> Result<GateOutcome, ScoringError> {
    let results = device_coefficients(case)?;
    let values: Vec<(String, Percent)> = results
        .into_iter()
        .map(|(id, r)| (id, r.value))
        .collect();
    Ok(apply_cutoff(values, policy))
}

/// Applies the cutoff to externally supplied per-device percentages, for
/// gating published or third-party results. Evaluation order follows the
/// map's key order.
pub fn gate_values(values: &BTreeMap<String, Percent>, policy: &ThresholdPolicy) -> GateOutcome {
    apply_cutoff(
        values.iter().map(|(id, v)| (id.clone(), *v)).collect(),
        policy,
    )
}

fn apply_cutoff(values: Vec<(String, Percent)>, policy: &ThresholdPolicy) -> GateOutcome {
    let mut retained = Vec::new();
    let mut discarded = Vec::new();
    for (device_id, value) in &values {
        if *value >= policy.cutoff() {
            retained.push(device_id.clone());
        } else {
            discarded.push(device_id.clone());
        }
    }
    GateOutcome {
        cutoff: policy.cutoff(),
        justification: policy.justification().to_string(),
        retained,
        discarded,
        values: values.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_score;

    fn device(id: &str, values: &[(FactorId, &str)]) -> DeviceAssessment {
        let mut d = DeviceAssessment::new(id, "test rig").unwrap();
        for (factor, value) in values {
            d.insert_score(make_score(*factor, value, "test value", "synthetic").unwrap());
        }
        d
    }

    fn case_of(devices: Vec<DeviceAssessment>) -> CaseFile {
        let mut case = CaseFile::new("case-t");
        case.devices = devices;
        case
    }

    #[test]
    fn single_factor_device_scores_its_value() {
        let d = device("d1", &[(FactorId::Dtc, "0.56")]);
        let result = device_iqa(&d, MissingPolicy::AvailableOnly, None).unwrap();
        assert_eq!(result.value.to_string(), "56.00");
        assert_eq!(result.numerator_terms, 1);
    }

    #[test]
    fn strict_policy_lists_every_missing_factor() {
        let d = device("d1", &[(FactorId::Dtc, "0.56"), (FactorId::Os, "0.20")]);
        let err = device_iqa(&d, MissingPolicy::Strict, None).unwrap_err();
        match err {
            DeviceError::MissingFactors(missing) => {
                assert_eq!(missing.len(), 7);
                assert!(missing.contains(&FactorId::Cs));
                assert!(!missing.contains(&FactorId::Dtc));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn impute_zero_keeps_the_full_denominator() {
        let d = device("d1", &[(FactorId::Dtc, "0.90")]);
        let result = device_iqa(&d, MissingPolicy::ImputeZero, None).unwrap();
        assert_eq!(result.value.value(), Rational::new(90, 9));
        assert_eq!(result.numerator_terms, 9);
    }

    #[test]
    fn empty_device_is_refused() {
        let d = device("d1", &[]);
        assert_eq!(
            device_iqa(&d, MissingPolicy::AvailableOnly, None).unwrap_err(),
            DeviceError::EmptyAssessment
        );
    }

    #[test]
    fn whitelist_weights_project_onto_one_factor() {
        let d = device("d1", &[(FactorId::Dtc, "0.56"), (FactorId::Os, "0.90")]);
        let weights =
            Weights::new([(FactorId::Dtc, Rational::from_integer(1))].into()).unwrap();
        let result = device_iqa(&d, MissingPolicy::AvailableOnly, Some(&weights)).unwrap();
        assert_eq!(result.value.to_string(), "56.00");
        assert_eq!(result.numerator_terms, 1);
    }

    #[test]
    fn case_mean_over_complete_devices_matches_flat_sum() {
        let all_half: Vec<(FactorId, &str)> = FactorId::ALL.iter().map(|f| (*f, "0.50")).collect();
        let all_one: Vec<(FactorId, &str)> = FactorId::ALL.iter().map(|f| (*f, "1.00")).collect();
        let case = case_of(vec![device("d1", &all_half), device("d2", &all_one)]);
        let result = case_iqa(&case).unwrap();
        // flat: (9*0.5 + 9*1.0) / 18 = 0.75
        assert_eq!(result.value.value(), Rational::from_integer(75));
        assert_eq!(result.numerator_terms, 18);
    }

    #[test]
    fn empty_case_is_refused() {
        let case = case_of(vec![]);
        assert_eq!(case_iqa(&case).unwrap_err(), ScoringError::EmptyCase);
    }

    #[test]
    fn category_pools_values_across_devices() {
        let case = case_of(vec![
            device("d1", &[(FactorId::Cm, "0.30"), (FactorId::Sr, "0.50")]),
            device("d2", &[(FactorId::Cm, "0.70")]),
        ]);
        let result = category_iqa(&case, InfoStatus::AboutReality).unwrap();
        // (0.30 + 0.50 + 0.70) / 3 = 0.50
        assert_eq!(result.value.value(), Rational::from_integer(50));
        assert_eq!(result.numerator_terms, 3);
        assert_eq!(
            category_iqa(&case, InfoStatus::ForReality).unwrap_err(),
            ScoringError::EmptyCategory {
                status: InfoStatus::ForReality
            }
        );
    }

    #[test]
    fn layer_means_sum_raw_and_rescale_normalized() {
        let mut d1 = DeviceAssessment::new("d1", "x").unwrap();
        d1.insert_layered(
            crate::model::LayeredFactorScore::new(
                FactorId::Dtc,
                Layer::Physical,
                crate::model::Score::parse("0.80").unwrap(),
                "probe",
                "synthetic",
            )
            .unwrap(),
        );
        d1.insert_layered(
            crate::model::LayeredFactorScore::new(
                FactorId::Dst,
                Layer::Physical,
                crate::model::Score::parse("0.60").unwrap(),
                "probe",
                "synthetic",
            )
            .unwrap(),
        );
        let mut d2 = DeviceAssessment::new("d2", "x").unwrap();
        d2.insert_layered(
            crate::model::LayeredFactorScore::new(
                FactorId::Dtc,
                Layer::Physical,
                crate::model::Score::parse("0.40").unwrap(),
                "probe",
                "synthetic",
            )
            .unwrap(),
        );
        let case = case_of(vec![d1, d2]);
        let result = layer_iqa(&case, Layer::Physical).unwrap();
        // means 0.70 and 0.40, raw 1.10, normalized 55%
        assert_eq!(result.raw, Rational::new(110, 100));
        assert_eq!(result.devices, 2);
        assert_eq!(result.normalized.to_string(), "55.00");
        assert_eq!(
            layer_iqa(&case, Layer::Network).unwrap_err(),
            ScoringError::NoLayeredScores {
                layer: Layer::Network
            }
        );
    }

    #[test]
    fn decompose_recombines_exactly() {
        let values = [
            "0.56", "0.62", "0.41", "0.34", "0.48", "0.77", "0.55", "0.84", "0.26",
        ];
        let scores: Vec<(FactorId, &str)> = FactorId::ALL
            .iter()
            .zip(values.iter())
            .map(|(f, v)| (*f, *v))
            .collect();
        let case = case_of(vec![device("d1", &scores), device("d2", &scores)]);
        let d = decompose(&case).unwrap();
        assert_eq!(d.recombined, d.total);
        assert_eq!(d.total, case_iqa(&case).unwrap().value);

        let mut weighted = case.clone();
        weighted.weights =
            Some(Weights::new([(FactorId::Dtc, Rational::from_integer(2))].into()).unwrap());
        assert_eq!(
            decompose(&weighted).unwrap_err(),
            ScoringError::NonUniformWeights
        );
    }

    #[test]
    fn gate_is_inclusive_at_the_cutoff() {
        let exactly = device("d-at", &[(FactorId::Dtc, "0.50")]);
        let below = device("d-under", &[(FactorId::Dtc, "0.49")]);
        let above = device("d-over", &[(FactorId::Dtc, "0.51")]);
        let case = case_of(vec![exactly, below, above]);
        let policy = ThresholdPolicy::parse("50", "retention floor").unwrap();
        let outcome = gate(&case, &policy).unwrap();
        assert_eq!(outcome.retained(), ["d-at", "d-over"]);
        assert_eq!(outcome.discarded(), ["d-under"]);
        assert!(outcome.is_retained("d-at"));
        assert_eq!(outcome.values().len(), 3);
        assert_eq!(outcome.justification(), "retention floor");
    }

    #[test]
    fn gate_at_one_hundred_keeps_only_perfect_devices() {
        let perfect = device("d-full", &[(FactorId::Dtc, "1.00")]);
        let near = device("d-near", &[(FactorId::Dtc, "0.99")]);
        let case = case_of(vec![perfect, near]);
        let policy = ThresholdPolicy::parse("100", "only pristine evidence").unwrap();
        let outcome = gate(&case, &policy).unwrap();
        assert_eq!(outcome.retained(), ["d-full"]);
        assert_eq!(outcome.discarded(), ["d-near"]);
    }
}
