//! Brute-force reference evaluator.
//!
//! Walks every (subject, rubric) pair and converts thresholds to meters
//! rather than scene lengths to inches. It shares no code with
//! [`super::evaluate`] beyond the data types, so the two can be checked
//! against each other.

use serde::{Deserialize, Serialize};

use super::{Anchor, CheckKind, Comparison, Rubric, BOUND_EPS_INCHES};
use crate::geometry::Vec3;
use crate::scene::{ElementKind, ParametricScene};

const INCH: f64 = 0.0254;

/// One violation found by the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rubric_id: String,
    /// `None` for scene-level findings.
    pub subject: Option<String>,
    pub anchor_point: Vec3,
}

fn violates(cmp: &Comparison, meters: f64) -> bool {
    let eps = BOUND_EPS_INCHES * INCH;
    match *cmp {
        Comparison::Between(lo, hi) => meters < lo * INCH - eps || meters > hi * INCH + eps,
        Comparison::LessThan(t) => meters > t * INCH + eps,
        Comparison::GreaterThan(t) => meters < t * INCH - eps,
    }
}

pub fn findings(scene: &ParametricScene, rubrics: &[Rubric]) -> Vec<Finding> {
    let mut out = Vec::new();

    for rubric in rubrics {
        // Wall elements.
        for el in &scene.elements {
            if rubric.check == CheckKind::Existence {
                continue;
            }
            let matches_target = match el.kind {
                ElementKind::Door => rubric.target.as_str() == "door",
                ElementKind::Opening => rubric.target.as_str() == "opening",
                ElementKind::Window => rubric.target.as_str() == "window",
            };
            if !matches_target {
                continue;
            }
            if let Some(cmp) = &rubric.dimension {
                if violates(cmp, el.width) {
                    let wall = scene.walls.iter().find(|w| w.id == el.wall_id).unwrap();
                    out.push(Finding {
                        rubric_id: rubric.id.clone(),
                        subject: Some(el.id.clone()),
                        anchor_point: el.center(wall),
                    });
                }
            }
        }

        // Objects.
        for obj in &scene.objects {
            let is_target = obj.category == rubric.target;
            let is_host = rubric.dependency == Some(obj.category);
            match rubric.check {
                CheckKind::Dimension | CheckKind::Position if is_target => {
                    let z = match rubric.anchor {
                        Anchor::Top => obj.center.z + obj.half_extents.z,
                        Anchor::Bottom => obj.center.z - obj.half_extents.z,
                        Anchor::Center => obj.center.z,
                    };
                    if let Some(cmp) = &rubric.dimension {
                        if violates(cmp, z) {
                            out.push(Finding {
                                rubric_id: rubric.id.clone(),
                                subject: Some(obj.id.clone()),
                                anchor_point: obj.center,
                            });
                        }
                    }
                }
                CheckKind::Existence if rubric.existence == Some(false) && is_target => {
                    out.push(Finding {
                        rubric_id: rubric.id.clone(),
                        subject: Some(obj.id.clone()),
                        anchor_point: obj.center,
                    });
                }
                CheckKind::Existence if rubric.existence == Some(true) && is_host => {
                    let radius = rubric.relative_position.as_ref();
                    let mut helped = false;
                    for other in &scene.objects {
                        if other.category != rubric.target {
                            continue;
                        }
                        let d = ((obj.center.x - other.center.x).powi(2)
                            + (obj.center.y - other.center.y).powi(2)
                            + (obj.center.z - other.center.z).powi(2))
                        .sqrt();
                        if radius.is_some_and(|r| !violates(r, d)) {
                            helped = true;
                        }
                    }
                    if !helped {
                        out.push(Finding {
                            rubric_id: rubric.id.clone(),
                            subject: Some(obj.id.clone()),
                            anchor_point: obj.center,
                        });
                    }
                }
                _ => {}
            }
        }

        // Scene-level existence.
        if rubric.check == CheckKind::Existence
            && rubric.existence == Some(true)
            && rubric.dependency.is_none()
            && !scene.objects.iter().any(|o| o.category == rubric.target)
        {
            let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for w in &scene.walls {
                for p in [w.start, w.end] {
                    lo_x = lo_x.min(p.x);
                    lo_y = lo_y.min(p.y);
                    hi_x = hi_x.max(p.x);
                    hi_y = hi_y.max(p.y);
                }
            }
            let anchor_point = if scene.walls.is_empty() {
                Vec3::ZERO
            } else {
                Vec3::new((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0, 0.0)
            };
            out.push(Finding {
                rubric_id: rubric.id.clone(),
                subject: None,
                anchor_point,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rubric::RubricSet;

    #[test]
    fn empty_scene_only_fire_alarm() {
        let f = findings(&ParametricScene::default(), &RubricSet::default_set().rubrics);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].rubric_id, "firealarm.existenceornot");
        assert_eq!(f[0].subject, None);
    }

    #[test]
    fn boundary_inclusive_in_meters() {
        let band = Comparison::Between(28.0, 34.0);
        assert!(!violates(&band, 28.0 * 0.0254));
        assert!(!violates(&band, 34.0 * 0.0254));
        assert!(violates(&band, 27.9 * 0.0254));
    }
}
