use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{match_issues, EvalError, GroundTruthIssue, MatchOptions, ScanIssues};
use crate::geometry::Vec3;

/// Binary coding of issue units by raters; `cells[unit][rater]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaMatrix {
    pub raters: Vec<String>,
    pub units: Vec<String>,
    pub cells: Vec<Vec<u8>>,
}

impl AlphaMatrix {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.raters.len() < 2 {
            return Err(EvalError::TooFewRaters(self.raters.len()));
        }
        if self.cells.is_empty() {
            return Err(EvalError::NoUnits);
        }
        if let Some(i) = self.cells.iter().position(|row| row.len() != self.raters.len()) {
            return Err(EvalError::RaggedMatrix(i));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaOutcome {
    pub alpha: f64,
    /// True when expected disagreement is zero and alpha was set to 1.
    pub degenerate: bool,
}

/// Nominal Krippendorff's alpha with no missing values, via the coincidence
/// matrix of ordered within-unit rater pairs.
pub fn krippendorff_alpha(m: &AlphaMatrix) -> Result<AlphaOutcome, EvalError> {
    m.validate()?;
    let mut o: BTreeMap<(u8, u8), f64> = BTreeMap::new();
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for row in &m.cells {
        counts.clear();
        for &v in row {
            *counts.entry(v).or_default() += 1;
        }
        let weight = 1.0 / (row.len() as f64 - 1.0);
        for (&c, &nc) in &counts {
            for (&k, &nk) in &counts {
                let pairs = if c == k { nc * (nc - 1) } else { nc * nk };
                *o.entry((c, k)).or_default() += pairs as f64 * weight;
            }
        }
    }
    let mut marg: BTreeMap<u8, f64> = BTreeMap::new();
    for (&(c, _), &v) in &o {
        *marg.entry(c).or_default() += v;
    }
    let n: f64 = marg.values().sum();
    let observed: f64 = o.iter().filter(|((c, k), _)| c != k).map(|(_, v)| v).sum();
    let mut expected = 0.0;
    for (&c, &nc) in &marg {
        for (&k, &nk) in &marg {
            if c != k {
                expected += nc * nk;
            }
        }
    }
    if expected == 0.0 {
        return Ok(AlphaOutcome {
            alpha: 1.0,
            degenerate: true,
        });
    }
    Ok(AlphaOutcome {
        alpha: 1.0 - (n - 1.0) * observed / expected,
        degenerate: false,
    })
}

/// Units are every ground-truth issue plus every reported issue that matched
/// no ground truth. Unmatched reports from different scans merge into one
/// unit when they share a rubric and lie within the matching tolerance.
/// A scan codes 1 for a unit it reported and 0 otherwise.
pub fn build_alpha_matrix(scans: &[ScanIssues], gt: &[GroundTruthIssue], opts: &MatchOptions) -> Result<AlphaMatrix, EvalError> {
    let raters: Vec<String> = scans.iter().map(|s| s.scan_id.clone()).collect();
    let mut units: Vec<String> = gt.iter().enumerate().map(|(i, g)| format!("gt{}:{}", i, g.rubric_id)).collect();
    let mut cells: Vec<Vec<u8>> = vec![vec![0; scans.len()]; gt.len()];
    // (rubric, representative anchor, row index) of extra units.
    let mut extras: Vec<(String, Vec3, usize)> = Vec::new();

    for (r, scan) in scans.iter().enumerate() {
        let m = match_issues(&scan.issues, gt, opts)?;
        for pair in &m.matched {
            cells[pair.gt_index][r] = 1;
        }
        for id in &m.unmatched_reported {
            let issue = scan.issues.iter().find(|i| &i.id == id).expect("unmatched id comes from the scan");
            let existing = extras
                .iter()
                .filter(|(rubric, anchor, row)| {
                    rubric == &issue.rubric_id && cells[*row][r] == 0 && anchor.distance(issue.anchor_point) <= opts.tolerance
                })
                .min_by(|a, b| a.1.distance(issue.anchor_point).total_cmp(&b.1.distance(issue.anchor_point)))
                .map(|e| e.2);
            let row = match existing {
                Some(row) => row,
                None => {
                    let row = cells.len();
                    units.push(format!("extra{}:{}", extras.len(), issue.rubric_id));
                    cells.push(vec![0; scans.len()]);
                    extras.push((issue.rubric_id.clone(), issue.anchor_point, row));
                    row
                }
            };
            cells[row][r] = 1;
        }
    }
    Ok(AlphaMatrix { raters, units, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cells: Vec<Vec<u8>>) -> AlphaMatrix {
        let r = cells[0].len();
        AlphaMatrix {
            raters: (0..r).map(|i| i.to_string()).collect(),
            units: (0..cells.len()).map(|i| i.to_string()).collect(),
            cells,
        }
    }

    #[test]
    fn hand_computed_two_raters() {
        // o = [[2, 2], [2, 2]], n = 8: alpha = 1 - 7 * 4 / 32.
        let a = krippendorff_alpha(&matrix(vec![vec![1, 1], vec![0, 0], vec![1, 0], vec![0, 1]])).unwrap();
        assert!((a.alpha - 0.125).abs() < 1e-12);
        assert!(!a.degenerate);
    }

    #[test]
    fn unanimous_with_both_values_is_one() {
        let cells = (0..11).map(|i| vec![(i % 3 == 0) as u8; 3]).collect();
        let a = krippendorff_alpha(&matrix(cells)).unwrap();
        assert_eq!(a.alpha, 1.0);
        assert!(!a.degenerate);
    }

    #[test]
    fn all_identical_is_degenerate_one() {
        let a = krippendorff_alpha(&matrix(vec![vec![1, 1, 1]; 5])).unwrap();
        assert_eq!(a, AlphaOutcome { alpha: 1.0, degenerate: true });
    }

    #[test]
    fn systematic_disagreement_is_negative() {
        let a = krippendorff_alpha(&matrix(vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![1, 1]])).unwrap();
        assert!(a.alpha < 0.0, "{}", a.alpha);
    }

    #[test]
    fn matrix_shape_errors() {
        assert_eq!(krippendorff_alpha(&matrix(vec![vec![1]])), Err(EvalError::TooFewRaters(1)));
        let mut m = matrix(vec![vec![1, 0]]);
        m.cells.clear();
        assert_eq!(krippendorff_alpha(&m), Err(EvalError::NoUnits));
        let mut m = matrix(vec![vec![1, 0], vec![1, 0]]);
        m.cells[1].pop();
        assert_eq!(krippendorff_alpha(&m), Err(EvalError::RaggedMatrix(1)));
    }
}
