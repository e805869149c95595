//! Domain model: factors, scores, devices, and the case container.
//!
//! Invariants live in constructors. A [`FactorScore`] cannot exist without a
//! justification, a [`Score`] cannot leave [0.00, 1.00] or carry sub-hundredth
//! precision, and [`Weights`] cannot be all zero. Everything downstream
//! (scoring, serialization, the CLI) leans on that.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::percent::{parse_decimal, render_exact, Percent, Rational};

/// Violations of the value-level invariants.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed number {text:?}")]
    MalformedNumber { text: String },
    #[error("score {text:?} is outside [0.00, 1.00]")]
    ScoreOutOfRange { text: String },
    #[error("score {text:?} carries more than two decimal places")]
    ScorePrecision { text: String },
    #[error("percentage {text:?} is outside [0, 100]")]
    PercentOutOfRange { text: String },
    #[error("justification must not be empty")]
    MissingJustification,
    #[error("device id must not be empty")]
    EmptyDeviceId,
    #[error("weight for {factor} must not be negative")]
    NegativeWeight { factor: FactorId },
    #[error("weights must contain at least one positive entry")]
    NoPositiveWeight,
}

/// The nine quality factors, in canonical order.
///
/// The declaration order is load-bearing: serialized maps, report tables,
/// and radar axes all follow it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FactorId {
    /// Device technical status: hardware integrity and software currency.
    Dtc,
    /// Device security status: hardening, malware protection, access logs.
    Dst,
    /// Cloud service security: trust in the transport channel and the
    /// originating entity.
    Cs,
    /// Cloud manipulation: how exposed raw data are to third-party
    /// alteration while stored or relayed.
    Cm,
    /// Source reliability: what can be established about where the data
    /// originate.
    Sr,
    /// Privacy compliance: lawful handling of records and their metadata.
    Pc,
    /// Technical data accessibility: availability of device and format
    /// documentation.
    Tda,
    /// Observer technological advancement: the operator's recognized
    /// standing in the field.
    Ot,
    /// Observer skills: the examiner's own expertise.
    Os,
}

impl FactorId {
    pub const ALL: [FactorId; 9] = [
        FactorId::Dtc,
        FactorId::Dst,
        FactorId::Cs,
        FactorId::Cm,
        FactorId::Sr,
        FactorId::Pc,
        FactorId::Tda,
        FactorId::Ot,
        FactorId::Os,
    ];

    pub const COUNT: usize = 9;

    /// Short uppercase code used in files, tables, and chart axes.
    pub fn code(self) -> &'static str {
        match self {
            FactorId::Dtc => "DTC",
            FactorId::Dst => "DST",
            FactorId::Cs => "CS",
            FactorId::Cm => "CM",
            FactorId::Sr => "SR",
            FactorId::Pc => "PC",
            FactorId::Tda => "TDA",
            FactorId::Ot => "OT",
            FactorId::Os => "OS",
        }
    }

    pub fn parse_code(text: &str) -> Option<FactorId> {
        FactorId::ALL.into_iter().find(|f| f.code() == text)
    }

    /// One-line description for reports and checklists.
    pub fn describe(self) -> &'static str {
        match self {
            FactorId::Dtc => "device technical status",
            FactorId::Dst => "device security status",
            FactorId::Cs => "cloud service security",
            FactorId::Cm => "cloud manipulation of raw data",
            FactorId::Sr => "source reliability",
            FactorId::Pc => "privacy and data-protection compliance",
            FactorId::Tda => "technical data accessibility",
            FactorId::Ot => "observer technological advancement",
            FactorId::Os => "observer skills",
        }
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for FactorId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

/// Architectural layer of an IoT deployment. Declaration order is canonical.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Layer {
    Physical,
    Network,
    Application,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Physical, Layer::Network, Layer::Application];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Physical => "physical",
            Layer::Network => "network",
            Layer::Application => "application",
        }
    }

    pub fn parse_name(text: &str) -> Option<Layer> {
        Layer::ALL.into_iter().find(|l| l.name() == text)
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Layer {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// A factor value held as integer hundredths of the unit interval.
/// `Score::parse("0.56")` and `Score::from_hundredths(56)` are the same
/// score; there is no representation in between hundredths.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Score(u8);

impl Score {
    pub const MIN: Score = Score(0);
    pub const MAX: Score = Score(100);

    pub fn from_hundredths(h: u8) -> Result<Self, ModelError> {
        if h > 100 {
            return Err(ModelError::ScoreOutOfRange {
                text: format!("{}.{:02}", h / 100, h % 100),
            });
        }
        Ok(Score(h))
    }

    /// Parses a decimal literal. The value must be exact hundredths within
    /// [0.00, 1.00]; trailing zeros beyond two places are tolerated.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let value = parse_decimal(text)?;
        let hundredths = value * Rational::from_integer(100);
        if !hundredths.is_integer() {
            return Err(ModelError::ScorePrecision {
                text: text.to_string(),
            });
        }
        let h = hundredths.to_integer();
        if !(0..=100).contains(&h) {
            return Err(ModelError::ScoreOutOfRange {
                text: text.to_string(),
            });
        }
        Ok(Score(h as u8))
    }

    pub fn hundredths(self) -> u8 {
        self.0
    }

    /// The score as an exact rational in [0, 1].
    pub fn unit(self) -> Rational {
        Rational::new(self.0 as i128, 100)
    }
}

/// Canonical two-decimal form, `"0.56"`.
impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// A justified factor evaluation. Scores enter a case only with a recorded
/// reason and origin; a blank justification is refused at construction.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct FactorScore {
    #[serde(skip)]
    factor: FactorId,
    value: Score,
    justification: String,
    provenance: String,
}

impl FactorScore {
    pub fn new(
        factor: FactorId,
        value: Score,
        justification: impl Into<String>,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let justification = justification.into();
        if justification.trim().is_empty() {
            return Err(ModelError::MissingJustification);
        }
        Ok(FactorScore {
            factor,
            value,
            justification,
            provenance: provenance.into(),
        })
    }

    /// Parses the value from a decimal literal and validates the rest.
    pub fn from_decimal(
        factor: FactorId,
        value: &str,
        justification: impl Into<String>,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        FactorScore::new(factor, Score::parse(value)?, justification, provenance)
    }

    pub fn factor(&self) -> FactorId {
        self.factor
    }

    pub fn value(&self) -> Score {
        self.value
    }

    pub fn justification(&self) -> &str {
        &self.justification
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// A factor evaluated within one architectural layer. Layer cells compose a
/// factor with a layer; they never enlarge the factor enumeration.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct LayeredFactorScore {
    #[serde(skip)]
    factor: FactorId,
    #[serde(skip)]
    layer: Layer,
    value: Score,
    justification: String,
    provenance: String,
}

impl LayeredFactorScore {
    pub fn new(
        factor: FactorId,
        layer: Layer,
        value: Score,
        justification: impl Into<String>,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let justification = justification.into();
        if justification.trim().is_empty() {
            return Err(ModelError::MissingJustification);
        }
        Ok(LayeredFactorScore {
            factor,
            layer,
            value,
            justification,
            provenance: provenance.into(),
        })
    }

    pub fn factor(&self) -> FactorId {
        self.factor
    }

    pub fn layer(&self) -> Layer {
        self.layer
    }

    pub fn value(&self) -> Score {
        self.value
    }

    pub fn justification(&self) -> &str {
        &self.justification
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// One device's recorded evaluations. Both maps may be partially filled;
/// completeness is a property the scoring policies interpret, not a type
/// invariant.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct DeviceAssessment {
    device_id: String,
    kind: String,
    scores: BTreeMap<FactorId, FactorScore>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    layered_scores: BTreeMap<FactorId, BTreeMap<Layer, LayeredFactorScore>>,
}

impl DeviceAssessment {
    pub fn new(device_id: impl Into<String>, kind: impl Into<String>) -> Result<Self, ModelError> {
        let device_id = device_id.into();
        if device_id.trim().is_empty() {
            return Err(ModelError::EmptyDeviceId);
        }
        Ok(DeviceAssessment {
            device_id,
            kind: kind.into(),
            scores: BTreeMap::new(),
            layered_scores: BTreeMap::new(),
        })
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    /// Records a factor score, returning the one it replaced, if any.
    pub fn insert_score(&mut self, score: FactorScore) -> Option<FactorScore> {
        self.scores.insert(score.factor(), score)
    }

    /// Records a layer cell, returning the one it replaced, if any.
    pub fn insert_layered(&mut self, score: LayeredFactorScore) -> Option<LayeredFactorScore> {
        self.layered_scores
            .entry(score.factor())
            .or_default()
            .insert(score.layer(), score)
    }

    pub fn remove_score(&mut self, factor: FactorId) -> Option<FactorScore> {
        self.scores.remove(&factor)
    }

    pub fn score(&self, factor: FactorId) -> Option<&FactorScore> {
        self.scores.get(&factor)
    }

    /// Recorded factor scores in canonical factor order.
    pub fn scores(&self) -> impl Iterator<Item = &FactorScore> {
        self.scores.values()
    }

    pub fn score_count(&self) -> usize {
        self.scores.len()
    }

    pub fn layered_score(&self, factor: FactorId, layer: Layer) -> Option<&LayeredFactorScore> {
        self.layered_scores.get(&factor).and_then(|m| m.get(&layer))
    }

    /// Cells recorded in one layer, canonical factor order.
    pub fn layer_scores(&self, layer: Layer) -> impl Iterator<Item = &LayeredFactorScore> {
        self.layered_scores
            .values()
            .filter_map(move |m| m.get(&layer))
    }

    /// Every layer cell, factor-major then layer order.
    pub fn layered_scores(&self) -> impl Iterator<Item = &LayeredFactorScore> {
        self.layered_scores.values().flat_map(|m| m.values())
    }

    pub fn has_layered_scores(&self) -> bool {
        !self.layered_scores.is_empty()
    }
}

/// Factor-level weighting. The map is a whitelist: a factor absent from it
/// weighs zero and drops out of every aggregate. At least one entry must be
/// strictly positive.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Weights(BTreeMap<FactorId, Rational>);

impl Weights {
    pub fn new(map: BTreeMap<FactorId, Rational>) -> Result<Self, ModelError> {
        let mut any_positive = false;
        for (factor, weight) in &map {
            if *weight.numer() < 0 {
                return Err(ModelError::NegativeWeight { factor: *factor });
            }
            if *weight.numer() > 0 {
                any_positive = true;
            }
        }
        if !any_positive {
            return Err(ModelError::NoPositiveWeight);
        }
        Ok(Weights(map))
    }

    /// All nine factors at weight one.
    pub fn uniform() -> Self {
        Weights(
            FactorId::ALL
                .into_iter()
                .map(|f| (f, Rational::from_integer(1)))
                .collect(),
        )
    }

    /// Weight of a factor; absent means zero.
    pub fn get(&self, factor: FactorId) -> Rational {
        self.0
            .get(&factor)
            .copied()
            .unwrap_or_else(|| Rational::from_integer(0))
    }

    /// Factors with strictly positive weight, canonical order.
    pub fn included(&self) -> Vec<FactorId> {
        self.0
            .iter()
            .filter(|(_, w)| *w.numer() > 0)
            .map(|(f, _)| *f)
            .collect()
    }

    /// True when every factor carries the same positive weight, which makes
    /// the weighted aggregates collapse to the unweighted ones exactly.
    pub fn is_uniform(&self) -> bool {
        if self.0.len() != FactorId::COUNT {
            return false;
        }
        let mut values = self.0.values();
        let first = match values.next() {
            Some(v) if *v.numer() > 0 => *v,
            _ => return false,
        };
        values.all(|v| *v == first)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactorId, Rational)> + '_ {
        self.0.iter().map(|(f, w)| (*f, *w))
    }
}

impl Serialize for Weights {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (factor, weight) in &self.0 {
            map.serialize_entry(factor.code(), &render_exact(*weight))?;
        }
        map.end()
    }
}

/// How aggregates treat factors that were never scored.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Every positively weighted factor must be present on every device.
    Strict,
    /// Aggregate over whatever was recorded. The default.
    #[default]
    AvailableOnly,
    /// Count absent factors as 0.00 over the full denominator.
    ImputeZero,
}

impl MissingPolicy {
    pub const ALL: [MissingPolicy; 3] = [
        MissingPolicy::Strict,
        MissingPolicy::AvailableOnly,
        MissingPolicy::ImputeZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MissingPolicy::Strict => "strict",
            MissingPolicy::AvailableOnly => "available_only",
            MissingPolicy::ImputeZero => "impute_zero",
        }
    }

    /// Accepts both snake and kebab spellings.
    pub fn parse_name(text: &str) -> Option<MissingPolicy> {
        let normalized = text.replace('-', "_");
        MissingPolicy::ALL
            .into_iter()
            .find(|p| p.name() == normalized)
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive retention gate. A device exactly at the cutoff is retained.
/// The justification is mandatory: discarding evidence is a forensic
/// decision somebody must own.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ThresholdPolicy {
    cutoff: Percent,
    justification: String,
}

impl ThresholdPolicy {
    pub fn new(cutoff: Percent, justification: impl Into<String>) -> Result<Self, ModelError> {
        let justification = justification.into();
        if justification.trim().is_empty() {
            return Err(ModelError::MissingJustification);
        }
        Ok(ThresholdPolicy {
            cutoff,
            justification,
        })
    }

    pub fn parse(cutoff: &str, justification: impl Into<String>) -> Result<Self, ModelError> {
        ThresholdPolicy::new(Percent::parse(cutoff)?, justification)
    }

    pub fn cutoff(&self) -> Percent {
        self.cutoff
    }

    pub fn justification(&self) -> &str {
        &self.justification
    }
}

/// Reference percentages a case may embed for regression comparison.
/// `basis_factors` records the factor set those numbers assumed, which may
/// be wider than what the devices actually carry; reports use the gap to
/// explain discrepancies.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct ExpectedResults {
    pub basis_factors: Vec<FactorId>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub per_device: BTreeMap<String, Percent>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: BTreeMap<crate::taxonomy::InfoStatus, Percent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<Percent>,
}

impl ExpectedResults {
    pub fn is_empty(&self) -> bool {
        self.per_device.is_empty() && self.categories.is_empty() && self.total.is_none()
    }
}

/// A complete case document: devices plus the policies and reference data
/// that travel with them.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct CaseFile {
    pub schema_version: u32,
    pub case_id: String,
    pub missing_policy: MissingPolicy,
    pub devices: Vec<DeviceAssessment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Weights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedResults>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_log: Option<String>,
}

impl CaseFile {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn new(case_id: impl Into<String>) -> Self {
        CaseFile {
            schema_version: CaseFile::SCHEMA_VERSION,
            case_id: case_id.into(),
            missing_policy: MissingPolicy::default(),
            devices: Vec::new(),
            weights: None,
            threshold: None,
            expected: None,
            audit_log: None,
        }
    }

    pub fn device(&self, device_id: &str) -> Option<&DeviceAssessment> {
        self.devices.iter().find(|d| d.device_id() == device_id)
    }

    pub fn device_mut(&mut self, device_id: &str) -> Option<&mut DeviceAssessment> {
        self.devices.iter_mut().find(|d| d.device_id() == device_id)
    }

    /// Factors recorded on at least one device, canonical order.
    pub fn recorded_factors(&self) -> Vec<FactorId> {
        FactorId::ALL
            .into_iter()
            .filter(|f| self.devices.iter().any(|d| d.score(*f).is_some()))
            .collect()
    }
}

/// Validated score construction, the one road into a [`FactorScore`].
pub fn make_score(
    factor: FactorId,
    value: &str,
    justification: &str,
    provenance: &str,
) -> Result<FactorScore, ModelError> {
    FactorScore::from_decimal(factor, value, justification, provenance)
}
