use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{check_consistency, deductive_closure, Rule};
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::kb::{RelationId, Vocabulary};
use crate::model::ModelParams;

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// The smaller index becomes the root, so classes are order independent.
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Dense numbering of (relation, position) slots.
pub(crate) struct SlotSpace {
    offsets: Vec<usize>,
    total: usize,
}

impl SlotSpace {
    pub(crate) fn new(arities: impl Iterator<Item = usize>) -> Self {
        let mut offsets = Vec::new();
        let mut total = 0;
        for a in arities {
            offsets.push(total);
            total += a;
        }
        SlotSpace { offsets, total }
    }

    pub(crate) fn of_vocab(vocab: &Vocabulary) -> Self {
        Self::new(vocab.relations().map(|(_, r)| r.arity))
    }

    pub(crate) fn len(&self) -> usize {
        self.total
    }

    pub(crate) fn id(&self, r: RelationId, position: usize) -> usize {
        self.offsets[r.0] + position
    }

    pub(crate) fn slot(&self, id: usize) -> (RelationId, usize) {
        let r = self.offsets.partition_point(|&o| o <= id) - 1;
        (RelationId(r), id - self.offsets[r])
    }
}

/// Slot identifications implied by symmetry and inversion rules.
pub(crate) fn sharing_union(uf: &mut UnionFind, space: &SlotSpace, rules: &[Rule]) {
    for rule in rules {
        match *rule {
            Rule::Symmetry(r) => uf.union(space.id(r, 0), space.id(r, 1)),
            Rule::Inversion(a, b) => {
                uf.union(space.id(a, 0), space.id(b, 1));
                uf.union(space.id(a, 1), space.id(b, 0));
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SharingPlan {
    /// Classes of (relation, position) slots bound to one box; singletons
    /// are omitted.
    pub classes: Vec<Vec<(RelationId, usize)>>,
}

/// The region spanned by `body` (one box, or the intersection of two) must
/// lie inside `head`. All indices are pool boxes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Containment {
    pub head: usize,
    pub body: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProjectionPlan {
    pub constraints: Vec<Containment>,
    /// Strongly connected groups of head boxes, dependencies first.
    pub order: Vec<Vec<usize>>,
}

impl ProjectionPlan {
    /// Builds containment constraints for the hierarchy and intersection
    /// rules in `closure`, resolved against the current slot table.
    pub fn build(params: &ModelParams, closure: &[Rule]) -> Self {
        let mut set = BTreeSet::new();
        for rule in closure {
            let (bodies, head) = match *rule {
                Rule::Hierarchy { body, head } => (vec![body], head),
                Rule::Intersection { body, head } => (body.to_vec(), head),
                _ => continue,
            };
            for p in 0..params.arity(head) {
                let h = params.slot(head, p);
                let mut b: Vec<usize> = bodies.iter().map(|r| params.slot(*r, p)).collect();
                b.sort_unstable();
                b.dedup();
                // A head sharing a box with a body relation is satisfied by
                // construction.
                if b.contains(&h) {
                    continue;
                }
                set.insert(Containment { head: h, body: b });
            }
        }
        let constraints: Vec<Containment> = set.into_iter().collect();
        let order = dependency_order(&constraints);
        ProjectionPlan { constraints, order }
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// Strongly connected components of the body -> head graph in topological
/// order (Kosaraju).
fn dependency_order(constraints: &[Containment]) -> Vec<Vec<usize>> {
    let mut nodes = BTreeSet::new();
    let mut fwd: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut rev: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for c in constraints {
        nodes.insert(c.head);
        for &b in &c.body {
            nodes.insert(b);
            fwd.entry(b).or_default().insert(c.head);
            rev.entry(c.head).or_default().insert(b);
        }
    }
    let empty = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut finish = Vec::new();
    for &start in &nodes {
        if !visited.insert(start) {
            continue;
        }
        let mut stack = vec![(start, fwd.get(&start).unwrap_or(&empty).iter())];
        while let Some((node, iter)) = stack.last_mut() {
            if let Some(&next) = iter.next() {
                if visited.insert(next) {
                    stack.push((next, fwd.get(&next).unwrap_or(&empty).iter()));
                }
            } else {
                finish.push(*node);
                stack.pop();
            }
        }
    }
    let heads: BTreeSet<usize> = constraints.iter().map(|c| c.head).collect();
    let mut assigned = BTreeSet::new();
    let mut order = Vec::new();
    for &root in finish.iter().rev() {
        if !assigned.insert(root) {
            continue;
        }
        let mut comp = vec![root];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            for &m in rev.get(&n).unwrap_or(&empty) {
                if assigned.insert(m) {
                    comp.push(m);
                    stack.push(m);
                }
            }
        }
        comp.retain(|n| heads.contains(n));
        if !comp.is_empty() {
            comp.sort_unstable();
            order.push(comp);
        }
    }
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub sharing: SharingPlan,
    pub projection: ProjectionPlan,
    pub closure: Vec<Rule>,
    /// Bound moves made by the initial projection.
    pub initial_growth: usize,
}

/// Makes `params` satisfy `rules` from now on: symmetry and inversion rebind
/// slots to shared boxes, hierarchy and intersection (closed under
/// entailment) are enforced by growing head boxes. Keep calling
/// [`apply_projection`] with the returned plan after every parameter update.
pub fn inject(params: &mut ModelParams, vocab: &Vocabulary, rules: &[Rule]) -> Result<Injection> {
    check_consistency(rules, vocab).map_err(Error::Inconsistent)?;
    if let Some(bad) = rules.iter().find(|r| !r.form().injectable()) {
        return Err(Error::Unsupported(format!(
            "rule `{}` cannot be injected (only symmetry, inversion, hierarchy and intersection can)",
            bad.display(vocab)
        )));
    }

    let space = SlotSpace::of_vocab(vocab);
    let mut uf = UnionFind::new(space.len());
    let mut first_with_pool: BTreeMap<usize, usize> = BTreeMap::new();
    for id in 0..space.len() {
        let (r, p) = space.slot(id);
        match first_with_pool.get(&params.slot(r, p)) {
            Some(&other) => uf.union(other, id),
            None => {
                first_with_pool.insert(params.slot(r, p), id);
            }
        }
    }
    sharing_union(&mut uf, &space, rules);

    let mut classes: BTreeMap<usize, Vec<(RelationId, usize)>> = BTreeMap::new();
    for id in 0..space.len() {
        let root = uf.find(id);
        let (r, p) = space.slot(id);
        let (rr, rp) = space.slot(root);
        let pool = params.slot(rr, rp);
        params.assign_slot(r, p, pool);
        classes.entry(root).or_default().push((r, p));
    }
    let sharing = SharingPlan {
        classes: classes.into_values().filter(|c| c.len() > 1).collect(),
    };

    let closure = deductive_closure(rules);
    let projection = ProjectionPlan::build(params, &closure);
    let initial_growth = apply_projection(params, &projection)?;
    Ok(Injection {
        sharing,
        projection,
        closure,
        initial_growth,
    })
}

fn region(params: &ModelParams, body: &[usize]) -> Result<Option<HyperBox>> {
    let mut acc = params.raw_box(body[0]);
    for &b in &body[1..] {
        match acc.intersect(&params.raw_box(b))? {
            Some(next) => acc = next,
            None => return Ok(None),
        }
    }
    Ok(Some(acc))
}

/// Grows head boxes by the least amount that restores every containment in
/// `plan`; returns the number of individual bounds moved. Works on raw
/// corners, which is exact under bounding because tanh is monotone.
pub fn apply_projection(params: &mut ModelParams, plan: &ProjectionPlan) -> Result<usize> {
    let limit = 2 * params.dim() * params.slots().iter().map(Vec::len).sum::<usize>();
    let mut by_head: BTreeMap<usize, Vec<&Containment>> = BTreeMap::new();
    for c in &plan.constraints {
        by_head.entry(c.head).or_default().push(c);
    }
    let mut moves = 0;
    for group in &plan.order {
        loop {
            let mut changed = false;
            for &head in group {
                let mut needed: Option<HyperBox> = None;
                for c in by_head.get(&head).into_iter().flatten() {
                    if let Some(r) = region(params, &c.body)? {
                        needed = Some(match needed {
                            Some(n) => n.hull(&r)?,
                            None => r,
                        });
                    }
                }
                let growth = params.raw_box(head).grow_to_cover(needed.as_ref())?;
                if growth.moved_bounds > 0 {
                    params.set_raw_box(head, &growth.grown);
                    moves += growth.moved_bounds;
                    changed = true;
                }
            }
            if moves > limit {
                return Err(Error::Internal(format!(
                    "projection moved {moves} bounds, more than the bound {limit}"
                )));
            }
            if !changed || group.len() == 1 {
                break;
            }
        }
    }
    Ok(moves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NormOrder;
    use crate::rules::{check_capture, parse_rules_open};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(text: &str, seed: u64) -> (Vocabulary, Vec<Rule>, ModelParams) {
        let (vocab, rules) = parse_rules_open(text).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::random(&vocab, 6, NormOrder::L1, true, &mut rng);
        (vocab, rules, params)
    }

    #[test]
    fn slot_space_roundtrip() {
        let space = SlotSpace::new([2, 3, 1].into_iter());
        for id in 0..space.len() {
            let (r, p) = space.slot(id);
            assert_eq!(space.id(r, p), id);
        }
        assert_eq!(space.slot(4), (RelationId(1), 2));
    }

    #[test]
    fn symmetry_shares_one_box() {
        let (vocab, rules, mut params) = setup("symmetry r", 1);
        let inj = inject(&mut params, &vocab, &rules).unwrap();
        assert_eq!(params.slot(RelationId(0), 0), params.slot(RelationId(0), 1));
        assert_eq!(inj.sharing.classes.len(), 1);
        assert!(check_capture(&params, &rules[0], 0.0).unwrap().captured);
    }

    #[test]
    fn inversion_cycle_collapses() {
        let (vocab, rules, mut params) = setup("inversion a b\ninversion b c\ninversion c a", 2);
        inject(&mut params, &vocab, &rules).unwrap();
        let pools: BTreeSet<usize> = params.slots().iter().flatten().copied().collect();
        assert_eq!(pools.len(), 1);
        for r in 0..3 {
            assert!(check_capture(&params, &Rule::Symmetry(RelationId(r)), 0.0).unwrap().captured);
        }
    }

    #[test]
    fn hierarchy_chain_projects_and_is_idempotent() {
        for seed in 0..20 {
            let (vocab, rules, mut params) = setup("hierarchy a b\nhierarchy b c", seed);
            let inj = inject(&mut params, &vocab, &rules).unwrap();
            for rule in &inj.closure {
                assert!(check_capture(&params, rule, 0.0).unwrap().captured);
            }
            assert_eq!(apply_projection(&mut params, &inj.projection).unwrap(), 0);
        }
    }

    #[test]
    fn single_violated_dimension_moves_one_or_two_bounds() {
        let (vocab, rules, mut params) = setup("hierarchy a b", 0);
        for p in 0..2 {
            let inner = HyperBox::new(vec![-0.2; 6], vec![0.2; 6]).unwrap();
            let mut outer = HyperBox::new(vec![-0.5; 6], vec![0.5; 6]).unwrap();
            if p == 0 {
                let mut lower = outer.lower().to_vec();
                lower[3] = 0.1;
                outer = HyperBox::new(lower, outer.upper().to_vec()).unwrap();
            }
            params.set_raw_box(params.slot(RelationId(0), p), &inner);
            params.set_raw_box(params.slot(RelationId(1), p), &outer);
        }
        let inj = inject(&mut params, &vocab, &rules).unwrap();
        assert_eq!(inj.initial_growth, 1);
    }

    #[test]
    fn cyclic_hierarchy_reaches_fixpoint() {
        let (vocab, rules, mut params) = setup("hierarchy a b\nhierarchy b c\nintersection c d a", 4);
        let inj = inject(&mut params, &vocab, &rules).unwrap();
        for rule in &inj.closure {
            assert!(check_capture(&params, rule, 0.0).unwrap().captured, "{:?}", rule);
        }
        assert_eq!(apply_projection(&mut params, &inj.projection).unwrap(), 0);
    }

    #[test]
    fn rejects_check_only_forms() {
        for text in ["composition a b c", "antisymmetry a", "exclusion a b"] {
            let (vocab, rules, mut params) = setup(text, 0);
            assert!(matches!(inject(&mut params, &vocab, &rules), Err(Error::Unsupported(_))));
        }
        let (vocab, rules, mut params) = setup("symmetry a\nantisymmetry a", 0);
        assert!(matches!(inject(&mut params, &vocab, &rules), Err(Error::Inconsistent(_))));
    }
}
