//! Classification of the nine factors along two axes: the classical
//! data-quality category, and the status the information holds relative to
//! the reality it witnesses. Both classifications are total: every factor
//! lands in exactly one bucket on each axis.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::model::{FactorId, Layer};

/// Classical data-quality category of a factor.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Category {
    Intrinsic,
    Contextual,
    Representational,
    Accessibility,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Intrinsic,
        Category::Contextual,
        Category::Representational,
        Category::Accessibility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Intrinsic => "intrinsic",
            Category::Contextual => "contextual",
            Category::Representational => "representational",
            Category::Accessibility => "accessibility",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Relation between recorded information and the observed reality:
/// information *as* reality (the captured signal itself), *about* reality
/// (descriptions layered onto the signal), and *for* reality (the
/// conditions for putting the signal to investigative use).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum InfoStatus {
    AsReality,
    AboutReality,
    ForReality,
}

impl InfoStatus {
    pub const ALL: [InfoStatus; 3] = [
        InfoStatus::AsReality,
        InfoStatus::AboutReality,
        InfoStatus::ForReality,
    ];

    /// Factors aggregated under this status, canonical order.
    pub fn factors(self) -> &'static [FactorId] {
        match self {
            InfoStatus::AsReality => &[FactorId::Dtc, FactorId::Dst, FactorId::Cs],
            InfoStatus::AboutReality => &[FactorId::Cm, FactorId::Sr],
            InfoStatus::ForReality => &[FactorId::Pc, FactorId::Tda, FactorId::Ot, FactorId::Os],
        }
    }

    pub fn arity(self) -> usize {
        self.factors().len()
    }

    /// Aggregate label used in tables and exports.
    pub fn aggregate_label(self) -> &'static str {
        match self {
            InfoStatus::AsReality => "IQA_I",
            InfoStatus::AboutReality => "IQA_II",
            InfoStatus::ForReality => "IQA_III",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            InfoStatus::AsReality => "information as reality",
            InfoStatus::AboutReality => "information about reality",
            InfoStatus::ForReality => "information for reality",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InfoStatus::AsReality => "as_reality",
            InfoStatus::AboutReality => "about_reality",
            InfoStatus::ForReality => "for_reality",
        }
    }

    pub fn parse_name(text: &str) -> Option<InfoStatus> {
        InfoStatus::ALL.into_iter().find(|s| s.name() == text)
    }
}

impl fmt::Display for InfoStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

impl Serialize for InfoStatus {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// The category a factor belongs to.
pub fn category_of(factor: FactorId) -> Category {
    match factor {
        FactorId::Dtc => Category::Intrinsic,
        FactorId::Dst | FactorId::Cs => Category::Contextual,
        FactorId::Cm | FactorId::Sr => Category::Representational,
        FactorId::Pc | FactorId::Tda | FactorId::Ot | FactorId::Os => Category::Accessibility,
    }
}

/// The info status a factor aggregates under.
pub fn info_status_of(factor: FactorId) -> InfoStatus {
    match category_of(factor) {
        Category::Intrinsic | Category::Contextual => InfoStatus::AsReality,
        Category::Representational => InfoStatus::AboutReality,
        Category::Accessibility => InfoStatus::ForReality,
    }
}

/// Expands a factor into its three layer cells, layer order.
pub fn expand_layers(factor: FactorId) -> [(FactorId, Layer); 3] {
    [
        (factor, Layer::Physical),
        (factor, Layer::Network),
        (factor, Layer::Application),
    ]
}

/// The full classification grid as a value, for rendering and verification.
#[derive(Clone, Debug)]
pub struct TaxonomyTable {
    rows: Vec<(FactorId, Category, InfoStatus)>,
}

impl TaxonomyTable {
    pub fn standard() -> Self {
        TaxonomyTable {
            rows: FactorId::ALL
                .into_iter()
                .map(|f| (f, category_of(f), info_status_of(f)))
                .collect(),
        }
    }

    pub fn rows(&self) -> &[(FactorId, Category, InfoStatus)] {
        &self.rows
    }

    pub fn factors_in_category(&self, category: Category) -> Vec<FactorId> {
        self.rows
            .iter()
            .filter(|(_, c, _)| *c == category)
            .map(|(f, _, _)| *f)
            .collect()
    }
}
