//! Machine-readable accessibility and safety rules.
//!
//! A rubric file is a JSON object keyed by object name, each holding one or
//! more named checks (`"Counter": {"Dim_Height": {...}}`). Checks compare a
//! measured quantity against thresholds in inches, assert that an item must
//! not exist, or assert that an assistive item must exist (optionally within
//! a radius of another object).

mod engine;
pub mod oracle;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::{evaluate, resolve_message, MessageError};
pub use parse::{parse_rubrics, RubricError};

use crate::geometry::Vec3;
use crate::scene::Category;

/// Literal token in messages that is replaced by `short` or `tall`.
pub const PLACEHOLDER: &str = "PLACEHOLDER";

/// Slack on the compliant side of every threshold, in inches.
pub const BOUND_EPS_INCHES: f64 = 1e-9;

const DEFAULT_RUBRICS: &str = include_str!("../../data/default_rubrics.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Community {
    Wheelchair,
    Elder,
    Children,
    #[serde(rename = "BLV")]
    Blv,
}

impl Community {
    pub const ALL: [Community; 4] = [
        Community::Wheelchair,
        Community::Elder,
        Community::Children,
        Community::Blv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Community::Wheelchair => "Wheelchair",
            Community::Elder => "Elder",
            Community::Children => "Children",
            Community::Blv => "BLV",
        }
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Community {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Community::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown community `{s}`"))
    }
}

/// The four issue classes shown to users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCategory {
    ObjectDimension,
    ObjectPosition,
    RiskyItem,
    LackOfAssistiveItem,
}

impl IssueCategory {
    pub const ALL: [IssueCategory; 4] = [
        IssueCategory::ObjectDimension,
        IssueCategory::ObjectPosition,
        IssueCategory::RiskyItem,
        IssueCategory::LackOfAssistiveItem,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Dimension,
    Position,
    Existence,
}

/// Which horizontal face of a box a height rule measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Top,
    Bottom,
    Center,
}

/// Where a measured value falls relative to the compliant band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assessment {
    Compliant,
    Below,
    Above,
}

/// The compliant condition of a rule, thresholds in inches. Bounds are
/// inclusive on the compliant side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComparisonRepr", into = "ComparisonRepr")]
pub enum Comparison {
    Between(f64, f64),
    LessThan(f64),
    GreaterThan(f64),
}

impl Comparison {
    pub fn assess(&self, inches: f64) -> Assessment {
        match *self {
            Comparison::Between(lo, _) if inches < lo - BOUND_EPS_INCHES => Assessment::Below,
            Comparison::Between(_, hi) if inches > hi + BOUND_EPS_INCHES => Assessment::Above,
            Comparison::LessThan(t) if inches > t + BOUND_EPS_INCHES => Assessment::Above,
            Comparison::GreaterThan(t) if inches < t - BOUND_EPS_INCHES => Assessment::Below,
            _ => Assessment::Compliant,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Comparison::Between(..) => "Between",
            Comparison::LessThan(_) => "LessThan",
            Comparison::GreaterThan(_) => "GreaterThan",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Comparison::Between(lo, hi) => vec![lo, hi],
            Comparison::LessThan(t) | Comparison::GreaterThan(t) => vec![t],
        }
    }

    /// Builds a comparison from the file form, checking arity and ordering.
    pub fn from_parts(kind: &str, values: &[f64]) -> Result<Self, String> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(format!("threshold {v} must be positive"));
        }
        match (kind, values) {
            ("Between", [lo, hi]) if lo < hi => Ok(Comparison::Between(*lo, *hi)),
            ("Between", [lo, hi]) => Err(format!("Between bounds out of order: [{lo}, {hi}]")),
            ("Between", v) => Err(format!("Between needs 2 values, got {}", v.len())),
            ("LessThan", [t]) => Ok(Comparison::LessThan(*t)),
            ("GreaterThan", [t]) => Ok(Comparison::GreaterThan(*t)),
            ("LessThan" | "GreaterThan", v) => {
                Err(format!("{kind} needs 1 value, got {}", v.len()))
            }
            (other, _) => Err(format!("unknown comparison `{other}`")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ComparisonRepr {
    kind: String,
    values: Vec<f64>,
}

impl TryFrom<ComparisonRepr> for Comparison {
    type Error = String;
    fn try_from(r: ComparisonRepr) -> Result<Self, Self::Error> {
        Comparison::from_parts(&r.kind, &r.values)
    }
}

impl From<Comparison> for ComparisonRepr {
    fn from(c: Comparison) -> Self {
        ComparisonRepr {
            kind: c.kind().to_string(),
            values: c.values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub name: String,
    pub url: String,
}

/// One normalized rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rubric {
    /// Lowercased `<object>.<check>`, e.g. `counter.dim_height`.
    pub id: String,
    pub target: Category,
    pub check: CheckKind,
    pub category: IssueCategory,
    pub community: BTreeSet<Community>,
    pub dependency: Option<Category>,
    pub dimension: Option<Comparison>,
    pub relative_position: Option<Comparison>,
    pub existence: Option<bool>,
    pub anchor: Anchor,
    pub note: Option<String>,
    pub message: String,
    pub description: String,
    pub suggestions: Vec<String>,
    pub sources: Vec<Source>,
}

impl Rubric {
    /// True when the rule measures a wall element's clear width instead of a box height.
    pub fn measures_width(&self) -> bool {
        matches!(self.target, Category::Door | Category::Opening | Category::Window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricSet {
    pub version: String,
    pub rubrics: Vec<Rubric>,
}

impl RubricSet {
    /// The shipped 20-rule set.
    pub fn default_set() -> Self {
        parse_rubrics(DEFAULT_RUBRICS.as_bytes()).expect("shipped rubric file is valid")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_RUBRICS
    }

    pub fn get(&self, id: &str) -> Option<&Rubric> {
        self.rubrics.iter().find(|r| r.id == id)
    }

    /// Drops rubrics by id; unknown ids are ignored.
    pub fn without(&self, excluded: &[String]) -> RubricSet {
        RubricSet {
            version: self.version.clone(),
            rubrics: self
                .rubrics
                .iter()
                .filter(|r| !excluded.contains(&r.id))
                .cloned()
                .collect(),
        }
    }
}

/// Rubrics whose community list meets the selection; an empty selection keeps all.
pub fn select_active(set: &RubricSet, communities: &BTreeSet<Community>) -> Vec<Rubric> {
    set.rubrics
        .iter()
        .filter(|r| communities.is_empty() || !r.community.is_disjoint(communities))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueStatus {
    Active,
    Confirmed,
    Dismissed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthUnit {
    #[serde(rename = "in")]
    Inch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub unit: LengthUnit,
}

impl Measurement {
    pub fn inches(value: f64) -> Self {
        Self {
            value,
            unit: LengthUnit::Inch,
        }
    }
}

/// One concrete violation anchored in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub id: String,
    pub rubric_id: String,
    pub category: IssueCategory,
    pub subject_ids: Vec<String>,
    pub anchor_point: Vec3,
    pub measured: Option<Measurement>,
    pub message: String,
    pub status: IssueStatus,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_bounds_are_inclusive() {
        let band = Comparison::Between(28.0, 34.0);
        assert_eq!(band.assess(28.0), Assessment::Compliant);
        assert_eq!(band.assess(34.0), Assessment::Compliant);
        assert_eq!(band.assess(27.99), Assessment::Below);
        assert_eq!(band.assess(34.01), Assessment::Above);
        assert_eq!(Comparison::LessThan(27.0).assess(27.0), Assessment::Compliant);
        assert_eq!(Comparison::LessThan(27.0).assess(30.0), Assessment::Above);
        assert_eq!(Comparison::GreaterThan(32.0).assess(32.0), Assessment::Compliant);
        assert_eq!(Comparison::GreaterThan(32.0).assess(28.0), Assessment::Below);
    }

    #[test]
    fn comparison_arity() {
        assert!(Comparison::from_parts("Between", &[28.0]).is_err());
        assert!(Comparison::from_parts("Between", &[34.0, 28.0]).is_err());
        assert!(Comparison::from_parts("LessThan", &[27.0, 30.0]).is_err());
        assert!(Comparison::from_parts("LessThan", &[-1.0]).is_err());
        assert!(Comparison::from_parts("Around", &[1.0]).is_err());
    }

    #[test]
    fn comparison_serde_shape() {
        let c = Comparison::Between(28.0, 34.0);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"kind":"Between","values":[28.0,34.0]}"#);
        assert_eq!(serde_json::from_str::<Comparison>(&json).unwrap(), c);
        assert!(serde_json::from_str::<Comparison>(r#"{"kind":"Between","values":[1.0]}"#).is_err());
    }

    #[test]
    fn community_filter() {
        let set = RubricSet::default_set();
        let all = select_active(&set, &BTreeSet::new());
        assert_eq!(all.len(), 20);

        let children = select_active(&set, &BTreeSet::from([Community::Children]));
        for id in ["knives.existenceornot", "scissors.existenceornot", "medication.existenceornot"] {
            assert!(children.iter().any(|r| r.id == id), "{id}");
        }

        let wheelchair = select_active(&set, &BTreeSet::from([Community::Wheelchair]));
        assert!(wheelchair.iter().any(|r| r.id == "counter.dim_height"));
        assert!(!wheelchair.iter().any(|r| r.id == "knives.existenceornot"));
    }

    #[test]
    fn exclusion_by_id() {
        let set = RubricSet::default_set().without(&["knob.pos_height".to_string()]);
        assert_eq!(set.rubrics.len(), 19);
        assert!(set.get("knob.pos_height").is_none());
    }
}
