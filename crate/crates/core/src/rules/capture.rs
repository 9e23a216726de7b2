use serde::Serialize;

use super::Rule;
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::kb::RelationId;
use crate::model::ModelParams;

/// A (0-based position, dimension) location in the box configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub position: usize,
    pub dim: usize,
}

/// Outcome of [`check_capture`]. For equality and containment rules the
/// witness marks a violation; for anti-symmetry and exclusion it marks the
/// separating dimension when the rule is captured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Capture {
    pub captured: bool,
    pub witness: Option<Witness>,
}

impl Capture {
    fn from_violation(v: Option<Witness>) -> Self {
        Capture {
            captured: v.is_none(),
            witness: v,
        }
    }
}

fn unequal_dim(a: &HyperBox, b: &HyperBox, eps: f64) -> Option<usize> {
    (0..a.dim()).find(|&k| {
        (a.lower()[k] - b.lower()[k]).abs() > eps || (a.upper()[k] - b.upper()[k]).abs() > eps
    })
}

fn uncontained_dim(outer: &HyperBox, inner: &HyperBox, eps: f64) -> Option<usize> {
    (0..outer.dim()).find(|&k| {
        inner.lower()[k] < outer.lower()[k] - eps || inner.upper()[k] > outer.upper()[k] + eps
    })
}

/// Dimension with the widest gap between the boxes and that gap; a positive
/// gap means the boxes are disjoint.
fn widest_gap(a: &HyperBox, b: &HyperBox) -> (usize, f64) {
    (0..a.dim())
        .map(|k| (k, a.lower()[k].max(b.lower()[k]) - a.upper()[k].min(b.upper()[k])))
        .fold((0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best })
}

fn need_binary(params: &ModelParams, r: RelationId, rule: &Rule) -> Result<()> {
    if params.arity(r) != 2 {
        return Err(Error::Unsupported(format!("{:?} needs a binary relation", rule.form())));
    }
    Ok(())
}

/// Checks the geometric condition under which `rule` holds for every entity
/// configuration. `eps` loosens equality, containment and disjointness tests.
pub fn check_capture(params: &ModelParams, rule: &Rule, eps: f64) -> Result<Capture> {
    let b = |r: RelationId, p: usize| params.box_at(r, p);
    Ok(match *rule {
        Rule::Symmetry(r) => {
            need_binary(params, r, rule)?;
            Capture::from_violation(unequal_dim(&b(r, 0), &b(r, 1), eps).map(|dim| Witness { position: 0, dim }))
        }
        Rule::Inversion(r1, r2) => {
            need_binary(params, r1, rule)?;
            need_binary(params, r2, rule)?;
            let v = (0..2).find_map(|p| {
                unequal_dim(&b(r1, p), &b(r2, 1 - p), eps).map(|dim| Witness { position: p, dim })
            });
            Capture::from_violation(v)
        }
        Rule::Antisymmetry(r) => {
            need_binary(params, r, rule)?;
            let (dim, gap) = widest_gap(&b(r, 0), &b(r, 1));
            Capture {
                captured: gap > -eps,
                witness: Some(Witness { position: 0, dim }),
            }
        }
        Rule::Hierarchy { body, head } => {
            let v = (0..params.arity(head)).find_map(|p| {
                uncontained_dim(&b(head, p), &b(body, p), eps).map(|dim| Witness { position: p, dim })
            });
            Capture::from_violation(v)
        }
        Rule::Intersection { body, head } => {
            let mut violation = None;
            for p in 0..params.arity(head) {
                if let Some(region) = b(body[0], p).intersect(&b(body[1], p))? {
                    if let Some(dim) = uncontained_dim(&b(head, p), &region, eps) {
                        violation = Some(Witness { position: p, dim });
                        break;
                    }
                }
            }
            Capture::from_violation(violation)
        }
        Rule::Exclusion(r1, r2) => {
            let separated = (0..params.arity(r1))
                .map(|p| (p, widest_gap(&b(r1, p), &b(r2, p))))
                .find(|(_, (_, gap))| *gap > -eps);
            Capture {
                captured: separated.is_some(),
                witness: separated.map(|(position, (dim, _))| Witness { position, dim }),
            }
        }
        Rule::Composition { .. } => {
            return Err(Error::Unsupported(
                "composition has no geometric capture condition in this model".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Vocabulary;
    use crate::model::NormOrder;

    fn params_with(boxes: &[(usize, usize, f64, f64)], d: usize) -> ModelParams {
        let vocab = Vocabulary::uniform(2, 3, 2);
        let mut p = ModelParams::zeros(&vocab, d, NormOrder::L1, false);
        for pool in 0..6 {
            p.set_raw_box(pool, &HyperBox::new(vec![-1.0; d], vec![1.0; d]).unwrap());
        }
        for &(r, pos, l, u) in boxes {
            let pool = p.slot(RelationId(r), pos);
            let mut lower = vec![-1.0; d];
            let mut upper = vec![1.0; d];
            lower[d - 1] = l;
            upper[d - 1] = u;
            p.set_raw_box(pool, &HyperBox::new(lower, upper).unwrap());
        }
        p
    }

    fn r(i: usize) -> RelationId {
        RelationId(i)
    }

    #[test]
    fn symmetry_equal_boxes() {
        let p = params_with(&[], 2);
        assert!(check_capture(&p, &Rule::Symmetry(r(0)), 0.0).unwrap().captured);
        let p = params_with(&[(0, 1, 0.0, 1.0)], 2);
        let c = check_capture(&p, &Rule::Symmetry(r(0)), 0.0).unwrap();
        assert_eq!(c.witness, Some(Witness { position: 0, dim: 1 }));
    }

    #[test]
    fn hierarchy_strictly_inside() {
        let p = params_with(&[(0, 0, -0.5, 0.5), (0, 1, -0.5, 0.5)], 2);
        let rule = Rule::Hierarchy { body: r(0), head: r(1) };
        assert!(check_capture(&p, &rule, 0.0).unwrap().captured);
        let back = Rule::Hierarchy { body: r(1), head: r(0) };
        assert!(!check_capture(&p, &back, 0.0).unwrap().captured);
    }

    #[test]
    fn exclusion_witness() {
        let p = params_with(&[(0, 0, 0.0, 1.0), (1, 0, 2.0, 3.0)], 3);
        let c = check_capture(&p, &Rule::Exclusion(r(0), r(1)), 0.0).unwrap();
        assert_eq!((c.captured, c.witness), (true, Some(Witness { position: 0, dim: 2 })));
        let p = params_with(&[], 3);
        assert!(!check_capture(&p, &Rule::Exclusion(r(0), r(1)), 0.0).unwrap().captured);
    }

    #[test]
    fn antisymmetry_and_tolerance() {
        let p = params_with(&[(0, 0, 0.0, 1.0), (0, 1, 1.0, 2.0)], 1);
        assert!(!check_capture(&p, &Rule::Antisymmetry(r(0)), 0.0).unwrap().captured);
        assert!(check_capture(&p, &Rule::Antisymmetry(r(0)), 1e-6).unwrap().captured);
    }

    #[test]
    fn intersection_vacuous_when_disjoint() {
        let p = params_with(&[(0, 0, 0.0, 0.2), (1, 0, 0.5, 0.7), (2, 0, 0.9, 0.95)], 1);
        let rule = Rule::intersection(r(0), r(1), r(2));
        assert!(check_capture(&p, &rule, 0.0).unwrap().captured);
    }

    #[test]
    fn composition_unsupported() {
        let p = params_with(&[], 1);
        let rule = Rule::Composition { body: [r(0), r(1)], head: r(2) };
        assert!(matches!(check_capture(&p, &rule, 0.0), Err(Error::Unsupported(_))));
    }
}
