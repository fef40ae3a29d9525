use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::Value;

use super::{
    Anchor, CheckKind, Community, Comparison, IssueCategory, Rubric, RubricSet, Source,
    PLACEHOLDER,
};
use crate::scene::Category;

const DEFAULT_VERSION: &str = "0";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RubricError {
    #[error("malformed rubric JSON: {0}")]
    Parse(String),
    #[error("rubric `{rubric}`: {message}")]
    Schema { rubric: String, message: String },
    #[error("rubric `{rubric}`: {message}")]
    Arity { rubric: String, message: String },
    #[error("rubric `{rubric}`: {message}")]
    Semantic { rubric: String, message: String },
    #[error("rubric `{rubric}`: unknown community `{value}`")]
    UnknownCommunity { rubric: String, value: String },
    #[error("rubric `{rubric}`: unknown category `{value}`")]
    UnknownCategory { rubric: String, value: String },
    #[error("duplicate rubric id `{0}`")]
    DuplicateId(String),
}

impl RubricError {
    /// Rubric id the error refers to, if any.
    pub fn rubric_id(&self) -> Option<&str> {
        match self {
            RubricError::Parse(_) => None,
            RubricError::DuplicateId(id) => Some(id),
            RubricError::Schema { rubric, .. }
            | RubricError::Arity { rubric, .. }
            | RubricError::Semantic { rubric, .. }
            | RubricError::UnknownCommunity { rubric, .. }
            | RubricError::UnknownCategory { rubric, .. } => Some(rubric),
        }
    }
}

/// JSON object kept as an ordered entry list so repeated keys survive parsing.
struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparisonFile {
    #[serde(rename = "Comparison")]
    comparison: Option<String>,
    #[serde(rename = "Value")]
    value: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "PascalCase")]
struct CheckFile {
    community: Vec<String>,
    #[serde(default)]
    dependency: Option<OneOrMany>,
    #[serde(default)]
    dimension: Option<ComparisonFile>,
    #[serde(default)]
    relative_position: Option<ComparisonFile>,
    #[serde(default)]
    existence: Option<bool>,
    #[serde(default)]
    note: Option<String>,
    message: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    suggestions: Vec<String>,
    #[serde(default)]
    sources: Vec<Source>,
    #[serde(default)]
    anchor: Option<Anchor>,
    #[serde(default)]
    target: Option<String>,
}

/// Parses a rubric file in the nested `{"Object": {"Check": {...}}}` form.
///
/// A top-level `"Version"` string is taken as the set version. Rubrics are
/// returned sorted by id.
pub fn parse_rubrics(bytes: &[u8]) -> Result<RubricSet, RubricError> {
    let top: Entries = serde_json::from_slice(bytes).map_err(|e| RubricError::Parse(e.to_string()))?;
    let mut version = DEFAULT_VERSION.to_string();
    let mut rubrics = Vec::new();
    let mut seen = HashSet::new();

    for (name, value) in top.0 {
        if name == "Version" {
            version = match value {
                Value::String(s) => s,
                other => {
                    return Err(RubricError::Schema {
                        rubric: name,
                        message: format!("Version must be a string, got {other}"),
                    })
                }
            };
            continue;
        }
        let checks: Entries = serde_json::from_value(value).map_err(|e| RubricError::Schema {
            rubric: name.clone(),
            message: e.to_string(),
        })?;
        for (check_name, body) in checks.0 {
            let id = format!("{name}.{check_name}").to_lowercase();
            if !seen.insert(id.clone()) {
                return Err(RubricError::DuplicateId(id));
            }
            let file: CheckFile = serde_json::from_value(body).map_err(|e| RubricError::Schema {
                rubric: id.clone(),
                message: e.to_string(),
            })?;
            rubrics.push(normalize(&name, &check_name, id, file)?);
        }
    }

    rubrics.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(RubricSet { version, rubrics })
}

fn normalize(name: &str, check_name: &str, id: String, file: CheckFile) -> Result<Rubric, RubricError> {
    let semantic = |message: &str| RubricError::Semantic {
        rubric: id.clone(),
        message: message.to_string(),
    };

    let target = match &file.target {
        Some(t) => resolve_category(t),
        None => resolve_category(name).or_else(|| {
            name.split_once('_').and_then(|(head, _)| resolve_category(head))
        }),
    }
    .ok_or_else(|| RubricError::UnknownCategory {
        rubric: id.clone(),
        value: file.target.clone().unwrap_or_else(|| name.to_string()),
    })?;

    let mut community = BTreeSet::new();
    for c in &file.community {
        let parsed = c.parse::<Community>().map_err(|_| RubricError::UnknownCommunity {
            rubric: id.clone(),
            value: c.clone(),
        })?;
        community.insert(parsed);
    }

    let dependency = match file.dependency {
        None => None,
        Some(OneOrMany::One(s)) => Some(s),
        Some(OneOrMany::Many(v)) => match v.as_slice() {
            [] => None,
            [one] => Some(one.clone()),
            _ => return Err(semantic("only a single dependency object is supported")),
        },
    };
    let dependency = dependency
        .map(|d| {
            resolve_category(&d).ok_or_else(|| RubricError::UnknownCategory {
                rubric: id.clone(),
                value: d.clone(),
            })
        })
        .transpose()?;

    let dimension = comparison(&id, file.dimension)?;
    let relative_position = comparison(&id, file.relative_position)?;

    let check = match (file.existence, dimension) {
        (Some(_), Some(_)) => return Err(semantic("a check cannot have both Existence and Dimension")),
        (Some(_), None) => CheckKind::Existence,
        (None, Some(_)) if check_name.to_ascii_lowercase().starts_with("pos") => CheckKind::Position,
        (None, Some(_)) => CheckKind::Dimension,
        (None, None) => return Err(semantic("a check needs either Existence or Dimension")),
    };

    if dependency.is_some() && relative_position.is_none() {
        return Err(semantic("Dependency requires a RelativePosition comparison"));
    }
    if relative_position.is_some() && dependency.is_none() {
        return Err(semantic("RelativePosition requires a Dependency"));
    }
    if dependency.is_some() && file.existence != Some(true) {
        return Err(semantic("Dependency is only supported on Existence: true checks"));
    }
    if file.message.trim().is_empty() {
        return Err(semantic("Message must not be empty"));
    }
    if check == CheckKind::Existence && file.message.contains(PLACEHOLDER) {
        return Err(semantic("existence checks have no measurement to resolve PLACEHOLDER"));
    }
    if file.anchor.is_some() && check == CheckKind::Existence {
        return Err(semantic("Anchor only applies to dimension and position checks"));
    }

    let category = match (check, file.existence) {
        (CheckKind::Dimension, _) => IssueCategory::ObjectDimension,
        (CheckKind::Position, _) => IssueCategory::ObjectPosition,
        (CheckKind::Existence, Some(true)) => IssueCategory::LackOfAssistiveItem,
        (CheckKind::Existence, _) => IssueCategory::RiskyItem,
    };
    let anchor = file.anchor.unwrap_or(match check {
        CheckKind::Dimension => Anchor::Top,
        _ => Anchor::Center,
    });

    Ok(Rubric {
        id,
        target,
        check,
        category,
        community,
        dependency,
        dimension,
        relative_position,
        existence: file.existence,
        anchor,
        note: file.note,
        message: file.message,
        description: file.description.unwrap_or_default(),
        suggestions: file.suggestions,
        sources: file.sources,
    })
}

fn comparison(id: &str, file: Option<ComparisonFile>) -> Result<Option<Comparison>, RubricError> {
    let Some(file) = file else { return Ok(None) };
    match (file.comparison, file.value) {
        (None, None) => Ok(None),
        (Some(kind), values) => Comparison::from_parts(&kind, values.as_deref().unwrap_or(&[]))
            .map(Some)
            .map_err(|message| RubricError::Arity {
                rubric: id.to_string(),
                message,
            }),
        (None, Some(_)) => Err(RubricError::Arity {
            rubric: id.to_string(),
            message: "Value given without a Comparison".into(),
        }),
    }
}

/// Maps object names used in rubric files onto the scene vocabulary.
fn resolve_category(name: &str) -> Option<Category> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let alias = match key.as_str() {
        "tub" | "bath" => Some(Category::Bathtub),
        "counter" | "cabinet" | "cupboard" => Some(Category::Storage),
        "knives" => Some(Category::Knife),
        "knob" | "handle" => Some(Category::DoorHandle),
        "firealarm" | "smokedetector" => Some(Category::SmokeAlarm),
        "socket" | "outlet" => Some(Category::ElectricSocket),
        "switch" => Some(Category::LightSwitch),
        "medicine" | "medications" => Some(Category::Medication),
        "tv" => Some(Category::Television),
        _ => None,
    };
    alias.or_else(|| Category::ALL.into_iter().find(|c| c.as_str().replace('_', "") == key))
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTER: &str = r#"{"Counter":{
        "Dim_Height":{
            "Community":["Wheelchair"],
            "Dependency":null,
            "Dimension":{"Comparison":"Between","Value":[28,34]},
            "RelativePosition":{"Comparison":null,"Value":null},
            "Existence":null,
            "Note":"replace PLACEHOLDER to either 'short' or 'tall' depends on the actual height of the counter.",
            "Message":"Warning: Counter is too PLACEHOLDER.",
            "Description":"According to ADA compliance, counters must be at the proper height (this often is 28-34 inches from the floor).",
            "Suggestions":["Replace to an adjustable height counter"],
            "Sources":[{"name":"2010 ADA Standards for Accessible Design","url":"https://www.ada.gov/regs2010/2010ADAStandards/2010ADAstandards.htm"}]
        }}}"#;

    const GRAB_BAR_TUB: &str = r#"{"GrabBar_Existence_Tub": {
        "ExistenceOrNot": {
          "Community": ["Wheelchair", "Elder"],
          "Dependency": ["Tub"],
          "Dimension": {"Comparison": null, "Value": null},
          "RelativePosition":{"Comparison":"LessThan","Value":[27]},
          "Existence": true,
          "Note": null,
          "Message": "Warning: No grab bar detected near tub!",
          "Description": "For safety, there should be grab bars near tub.",
          "Suggestions": ["Add a bath grab bar on the wall or a clamp-on grab bar to the tub."],
          "Sources": [{"name":"HSSAT","url":"https://www.tompkinscountyny.gov/files2/cofa/documents/hssat_v3.pdf"}]
        }}}"#;

    #[test]
    fn counter_entry() {
        let set = parse_rubrics(COUNTER.as_bytes()).unwrap();
        let r = &set.rubrics[0];
        assert_eq!(r.id, "counter.dim_height");
        assert_eq!(r.target, Category::Storage);
        assert_eq!(r.check, CheckKind::Dimension);
        assert_eq!(r.category, IssueCategory::ObjectDimension);
        assert_eq!(r.dimension, Some(Comparison::Between(28.0, 34.0)));
        assert_eq!(r.community, BTreeSet::from([Community::Wheelchair]));
        assert_eq!(r.relative_position, None);
        assert_eq!(r.anchor, Anchor::Top);
    }

    #[test]
    fn grab_bar_tub_entry() {
        let set = parse_rubrics(GRAB_BAR_TUB.as_bytes()).unwrap();
        let r = &set.rubrics[0];
        assert_eq!(r.id, "grabbar_existence_tub.existenceornot");
        assert_eq!(r.target, Category::GrabBar);
        assert_eq!(r.check, CheckKind::Existence);
        assert_eq!(r.existence, Some(true));
        assert_eq!(r.dependency, Some(Category::Bathtub));
        assert_eq!(r.relative_position, Some(Comparison::LessThan(27.0)));
        assert_eq!(r.category, IssueCategory::LackOfAssistiveItem);
    }

    #[test]
    fn between_with_one_value_is_arity_error() {
        let text = COUNTER.replace("[28,34]", "[28]");
        assert!(matches!(
            parse_rubrics(text.as_bytes()),
            Err(RubricError::Arity { rubric, .. }) if rubric == "counter.dim_height"
        ));
    }

    #[test]
    fn dependency_without_relative_position() {
        let text = GRAB_BAR_TUB.replace(r#""Comparison":"LessThan","Value":[27]"#, r#""Comparison":null,"Value":null"#);
        assert!(matches!(parse_rubrics(text.as_bytes()), Err(RubricError::Semantic { .. })));
    }

    #[test]
    fn unknown_community_and_category() {
        let text = COUNTER.replace(r#"["Wheelchair"]"#, r#"["Astronaut"]"#);
        assert!(matches!(
            parse_rubrics(text.as_bytes()),
            Err(RubricError::UnknownCommunity { value, .. }) if value == "Astronaut"
        ));
        let text = COUNTER.replace(r#""Counter""#, r#""Spaceship""#);
        assert!(matches!(
            parse_rubrics(text.as_bytes()),
            Err(RubricError::UnknownCategory { value, .. }) if value == "Spaceship"
        ));
    }

    #[test]
    fn duplicate_ids_detected() {
        let inner = &COUNTER[1..COUNTER.len() - 1];
        let doubled = format!("{{{inner},{inner}}}");
        assert_eq!(
            parse_rubrics(doubled.as_bytes()),
            Err(RubricError::DuplicateId("counter.dim_height".into()))
        );
        let case_clash = format!("{{{inner},{}}}", inner.replace("\"Counter\"", "\"COUNTER\""));
        assert!(matches!(parse_rubrics(case_clash.as_bytes()), Err(RubricError::DuplicateId(_))));
    }

    #[test]
    fn empty_file_is_empty_set() {
        let set = parse_rubrics(b"{}").unwrap();
        assert!(set.rubrics.is_empty());
    }

    #[test]
    fn placeholder_on_existence_rejected() {
        let text = GRAB_BAR_TUB.replace("No grab bar detected", "PLACEHOLDER grab bar");
        assert!(matches!(parse_rubrics(text.as_bytes()), Err(RubricError::Semantic { .. })));
    }

    #[test]
    fn unknown_check_field_rejected() {
        let text = COUNTER.replace(r#""Existence":null,"#, r#""Existence":null, "Severity": 3,"#);
        assert!(matches!(parse_rubrics(text.as_bytes()), Err(RubricError::Schema { .. })));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_rubrics(b"{\"Counter\": "), Err(RubricError::Parse(_))));
    }
}
