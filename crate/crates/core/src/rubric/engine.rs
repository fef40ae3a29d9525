use super::{
    Anchor, Assessment, CheckKind, Issue, IssueStatus, Measurement, Rubric, PLACEHOLDER,
};
use crate::geometry::Vec3;
use crate::scene::{object_distance, ElementKind, ParametricScene, SceneObject};
use crate::units::meters_to_inches;

/// Subject label used in issue ids for scene-level findings.
pub(crate) const SCENE_SUBJECT: &str = "scene";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MessageError {
    #[error("rubric `{0}`: message contains PLACEHOLDER but no measurement was given")]
    MissingMeasurement(String),
    #[error("rubric `{0}`: message contains PLACEHOLDER but the rule has no dimension band")]
    NoBand(String),
    #[error("rubric `{rubric}`: measured {value} in is within the compliant band")]
    Compliant { rubric: String, value: f64 },
}

/// Replaces `PLACEHOLDER` with `short` or `tall` depending on which side of
/// the compliant band `measured_inches` falls.
pub fn resolve_message(rubric: &Rubric, measured_inches: Option<f64>) -> Result<String, MessageError> {
    if !rubric.message.contains(PLACEHOLDER) {
        return Ok(rubric.message.clone());
    }
    let value = measured_inches.ok_or_else(|| MessageError::MissingMeasurement(rubric.id.clone()))?;
    let band = rubric
        .dimension
        .ok_or_else(|| MessageError::NoBand(rubric.id.clone()))?;
    let word = match band.assess(value) {
        Assessment::Below => "short",
        Assessment::Above => "tall",
        Assessment::Compliant => {
            return Err(MessageError::Compliant {
                rubric: rubric.id.clone(),
                value,
            })
        }
    };
    Ok(rubric.message.replace(PLACEHOLDER, word))
}

fn anchor_height(obj: &SceneObject, anchor: Anchor) -> f64 {
    match anchor {
        Anchor::Top => obj.top_height(),
        Anchor::Bottom => obj.bottom_height(),
        Anchor::Center => obj.center_height(),
    }
}

/// Evaluates the active rubrics against a scene. Output is sorted by rubric
/// id, then subject id; issue ids are `<rubric id>:<subject id>`.
pub fn evaluate(scene: &ParametricScene, active: &[Rubric]) -> Vec<Issue> {
    let mut issues = Vec::new();
    for rubric in active {
        match rubric.check {
            CheckKind::Dimension | CheckKind::Position => measure(scene, rubric, &mut issues),
            CheckKind::Existence => existence(scene, rubric, &mut issues),
        }
    }
    issues.sort_by(|a, b| {
        (a.rubric_id.as_str(), a.subject_ids.first())
            .cmp(&(b.rubric_id.as_str(), b.subject_ids.first()))
    });
    issues
}

fn issue(
    rubric: &Rubric,
    subject: Option<&str>,
    anchor_point: Vec3,
    measured: Option<f64>,
) -> Issue {
    let message = resolve_message(rubric, measured)
        .expect("violations always fall outside the band and parse rejects unmeasured placeholders");
    Issue {
        id: format!("{}:{}", rubric.id, subject.unwrap_or(SCENE_SUBJECT)),
        rubric_id: rubric.id.clone(),
        category: rubric.category,
        subject_ids: subject.map(|s| vec![s.to_string()]).unwrap_or_default(),
        anchor_point,
        measured: measured.map(Measurement::inches),
        message,
        status: IssueStatus::Active,
    }
}

fn measure(scene: &ParametricScene, rubric: &Rubric, out: &mut Vec<Issue>) {
    let Some(band) = rubric.dimension else { return };
    if let Some(kind) = ElementKind::from_category(rubric.target) {
        for el in scene.elements.iter().filter(|e| e.kind == kind) {
            let Some(wall) = scene.wall(&el.wall_id) else { continue };
            let width = meters_to_inches(el.width);
            if band.assess(width) != Assessment::Compliant {
                out.push(issue(rubric, Some(&el.id), el.center(wall), Some(width)));
            }
        }
        return;
    }
    for obj in scene.objects_of(rubric.target) {
        let value = meters_to_inches(anchor_height(obj, rubric.anchor));
        if band.assess(value) != Assessment::Compliant {
            out.push(issue(rubric, Some(&obj.id), obj.center, Some(value)));
        }
    }
}

fn existence(scene: &ParametricScene, rubric: &Rubric, out: &mut Vec<Issue>) {
    match (rubric.existence, rubric.dependency, rubric.relative_position) {
        (Some(false), _, _) => {
            for obj in scene.objects_of(rubric.target) {
                out.push(issue(rubric, Some(&obj.id), obj.center, None));
            }
        }
        (Some(true), Some(dependency), Some(radius)) => {
            for host in scene.objects_of(dependency) {
                let nearest = scene
                    .objects_of(rubric.target)
                    .map(|t| meters_to_inches(object_distance(host, t)))
                    .min_by(f64::total_cmp);
                let satisfied = nearest.is_some_and(|d| radius.assess(d) == Assessment::Compliant);
                if !satisfied {
                    out.push(issue(rubric, Some(&host.id), host.center, nearest));
                }
            }
        }
        (Some(true), None, _) if scene.objects_of(rubric.target).next().is_none() => {
            out.push(issue(rubric, None, scene.floor_center(), None));
        }
        _ => {}
    }
}
