//! Axis-aligned boxes. All comparisons are exact and boundaries are
//! inclusive; tolerance-based checks live in the rule engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Result of [`HyperBox::grow_to_cover`].
#[derive(Debug, Clone, PartialEq)]
pub struct Growth {
    pub grown: HyperBox,
    /// Number of individual lower/upper bounds that moved.
    pub moved_bounds: usize,
    /// Set when the region to cover was empty; `grown` is then unchanged.
    pub empty_region: bool,
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl HyperBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if let Some(dim) = (0..lower.len()).find(|&k| lower[k].is_nan() || upper[k].is_nan() || lower[k] > upper[k]) {
            return Err(Error::InvalidBox { dim });
        }
        Ok(HyperBox { lower, upper })
    }

    /// Box spanned by two arbitrary corners (element-wise min/max).
    pub fn from_corners(a: &[f64], b: &[f64]) -> Self {
        assert_eq!(a.len(), b.len(), "corner dimensions differ");
        let lower = a.iter().zip(b).map(|(x, y)| x.min(*y)).collect();
        let upper = a.iter().zip(b).map(|(x, y)| x.max(*y)).collect();
        HyperBox { lower, upper }
    }

    /// Zero-width box at `p`.
    pub fn point(p: &[f64]) -> Self {
        HyperBox {
            lower: p.to_vec(),
            upper: p.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (l + u) / 2.0)
            .collect()
    }

    /// `upper - lower + 1`, element-wise; every entry is at least 1.
    pub fn width_plus_one(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l + 1.0)
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        check_dim(self.dim(), p.len())?;
        Ok(p
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| l <= x && x <= u))
    }

    pub fn intersect(&self, other: &HyperBox) -> Result<Option<HyperBox>> {
        check_dim(self.dim(), other.dim())?;
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let l = self.lower[k].max(other.lower[k]);
            let u = self.upper[k].min(other.upper[k]);
            if l > u {
                return Ok(None);
            }
            lower.push(l);
            upper.push(u);
        }
        Ok(Some(HyperBox { lower, upper }))
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &HyperBox) -> Result<HyperBox> {
        check_dim(self.dim(), other.dim())?;
        Ok(HyperBox {
            lower: self.lower.iter().zip(&other.lower).map(|(a, b)| a.min(*b)).collect(),
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a.max(*b)).collect(),
        })
    }

    /// `self ⊇ inner`.
    pub fn contains_box(&self, inner: &HyperBox) -> Result<bool> {
        check_dim(self.dim(), inner.dim())?;
        Ok((0..self.dim()).all(|k| self.lower[k] <= inner.lower[k] && inner.upper[k] <= self.upper[k]))
    }

    /// Smallest enlargement of `self` containing `region`: each violated
    /// bound moves exactly onto the region's bound, others stay put.
    pub fn grow_to_cover(&self, region: Option<&HyperBox>) -> Result<Growth> {
        let Some(region) = region else {
            return Ok(Growth {
                grown: self.clone(),
                moved_bounds: 0,
                empty_region: true,
            });
        };
        check_dim(self.dim(), region.dim())?;
        let mut grown = self.clone();
        let mut moved = 0;
        for k in 0..self.dim() {
            if region.lower[k] < grown.lower[k] {
                grown.lower[k] = region.lower[k];
                moved += 1;
            }
            if region.upper[k] > grown.upper[k] {
                grown.upper[k] = region.upper[k];
                moved += 1;
            }
        }
        Ok(Growth {
            grown,
            moved_bounds: moved,
            empty_region: false,
        })
    }

    /// Geometric mean of the side lengths `upper - lower`.
    pub fn geometric_mean_side(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let sides = self.lower.iter().zip(&self.upper).map(|(l, u)| u - l);
        let mut log_sum = 0.0;
        for s in sides {
            if s <= 0.0 {
                return 0.0;
            }
            log_sum += s.ln();
        }
        (log_sum / self.dim() as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(lower: &[f64], upper: &[f64]) -> HyperBox {
        HyperBox::new(lower.to_vec(), upper.to_vec()).unwrap()
    }

    #[test]
    fn center_examples() {
        assert_eq!(b(&[0.0, 0.0], &[2.0, 4.0]).center(), vec![1.0, 2.0]);
        assert_eq!(b(&[3.0, 3.0], &[3.0, 3.0]).center(), vec![3.0, 3.0]);
        assert_eq!(b(&[-1.0, -1.0], &[1.0, 1.0]).center(), vec![0.0, 0.0]);
    }

    #[test]
    fn width_examples() {
        assert_eq!(b(&[0.0], &[2.0]).width_plus_one(), vec![3.0]);
        assert_eq!(b(&[5.0], &[5.0]).width_plus_one(), vec![1.0]);
        assert_eq!(b(&[-1.0, 0.0], &[1.0, 4.0]).width_plus_one(), vec![3.0, 5.0]);
    }

    #[test]
    fn contains_is_inclusive() {
        let unit = b(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(unit.contains(&[1.0, 1.0]).unwrap());
        assert!(!unit.contains(&[1.0, 1.0001]).unwrap());
        assert!(unit.contains(&unit.center()).unwrap());
        assert!(matches!(unit.contains(&[0.5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn intersect_examples() {
        let x = b(&[0.0], &[2.0]);
        assert_eq!(x.intersect(&b(&[1.0], &[3.0])).unwrap(), Some(b(&[1.0], &[2.0])));
        assert_eq!(b(&[0.0], &[1.0]).intersect(&b(&[2.0], &[3.0])).unwrap(), None);
        assert_eq!(x.intersect(&x).unwrap(), Some(x.clone()));
    }

    #[test]
    fn contains_box_examples() {
        assert!(b(&[0.0], &[10.0]).contains_box(&b(&[2.0], &[3.0])).unwrap());
        let x = b(&[0.0], &[1.0]);
        assert!(x.contains_box(&x).unwrap());
        assert!(!x.contains_box(&b(&[0.0], &[2.0])).unwrap());
    }

    #[test]
    fn grow_examples() {
        let t = b(&[2.0], &[3.0]);
        let g = t.grow_to_cover(Some(&b(&[1.0], &[4.0]))).unwrap();
        assert_eq!((g.grown, g.moved_bounds), (b(&[1.0], &[4.0]), 2));

        let big = b(&[0.0], &[10.0]);
        let g = big.grow_to_cover(Some(&b(&[2.0], &[3.0]))).unwrap();
        assert_eq!((g.grown, g.moved_bounds), (big.clone(), 0));

        let g = t.grow_to_cover(Some(&b(&[1.0], &[2.5]))).unwrap();
        assert_eq!((g.grown, g.moved_bounds), (b(&[1.0], &[3.0]), 1));

        let g = t.grow_to_cover(None).unwrap();
        assert!(g.empty_region);
        assert_eq!(g.grown, t);
    }

    #[test]
    fn hull_covers_both() {
        let h = b(&[0.0, 2.0], &[1.0, 3.0]).hull(&b(&[-1.0, 2.5], &[0.5, 4.0])).unwrap();
        assert_eq!(h, b(&[-1.0, 2.0], &[1.0, 4.0]));
    }

    #[test]
    fn invalid_box_rejected() {
        assert!(matches!(HyperBox::new(vec![1.0], vec![0.0]), Err(Error::InvalidBox { dim: 0 })));
        assert!(HyperBox::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn geometric_mean() {
        assert_eq!(b(&[0.0; 3], &[2.0; 3]).geometric_mean_side(), 2.0);
        assert_eq!(b(&[0.0, 0.0], &[2.0, 0.0]).geometric_mean_side(), 0.0);
    }

    fn arb_box(d: usize) -> impl Strategy<Value = HyperBox> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), d)
            .prop_map(|pairs| {
                let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let c: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                HyperBox::from_corners(&a, &c)
            })
    }

    fn arb_triple() -> impl Strategy<Value = (HyperBox, HyperBox, HyperBox)> {
        (1usize..=8).prop_flat_map(|d| (arb_box(d), arb_box(d), arb_box(d)))
    }

    fn meet(a: Option<HyperBox>, b: &HyperBox) -> Option<HyperBox> {
        a.and_then(|a| a.intersect(b).unwrap())
    }

    proptest! {
        #[test]
        fn intersect_laws((x, y, z) in arb_triple()) {
            prop_assert_eq!(x.intersect(&y).unwrap(), y.intersect(&x).unwrap());
            prop_assert_eq!(x.intersect(&x).unwrap(), Some(x.clone()));
            let left = meet(x.intersect(&y).unwrap(), &z);
            let right = y.intersect(&z).unwrap().and_then(|yz| x.intersect(&yz).unwrap());
            prop_assert_eq!(left, right);
        }

        #[test]
        fn grow_is_minimal_cover((t, r, _) in arb_triple()) {
            let g = t.grow_to_cover(Some(&r)).unwrap().grown;
            prop_assert!(g.contains_box(&r).unwrap());
            prop_assert!(g.contains_box(&t).unwrap());
            let eps = 1e-3;
            for k in 0..g.dim() {
                if g.lower()[k] != t.lower()[k] {
                    let mut lower = g.lower().to_vec();
                    lower[k] += eps;
                    let shrunk = HyperBox::new(lower, g.upper().to_vec());
                    prop_assert!(shrunk.map(|s| !s.contains_box(&r).unwrap()).unwrap_or(true));
                }
                if g.upper()[k] != t.upper()[k] {
                    let mut upper = g.upper().to_vec();
                    upper[k] -= eps;
                    let shrunk = HyperBox::new(g.lower().to_vec(), upper);
                    prop_assert!(shrunk.map(|s| !s.contains_box(&r).unwrap()).unwrap_or(true));
                }
            }
        }

        #[test]
        fn point_containment_matches_point_box(x in arb_box(3), p in prop::collection::vec(-6.0f64..6.0, 3)) {
            let via_box = x.intersect(&HyperBox::point(&p)).unwrap().is_some();
            prop_assert_eq!(x.contains(&p).unwrap(), via_box);
        }
    }
}
