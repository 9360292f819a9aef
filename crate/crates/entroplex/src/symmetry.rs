//! The symmetry group of a caching instance and canonicalization of
//! variable sets under it.
//!
//! The group is the direct product of the user permutations (degree `K`) and
//! the file permutations (degree `N`), of order `N!*K!`. A user permutation
//! relabels caches and permutes demand-vector positions; a file permutation
//! relabels files and demand-vector values. Canonicalization combines the
//! group action with the functional-dependence closure: the representative of
//! `s` is the minimum, in the [`VarSet`] order, of `closure(g * closure(s))`
//! over all group elements `g` whose action keeps the set inside the
//! (possibly restricted) universe.

use std::cell::RefCell;
use std::collections::HashMap;

use itertools::Itertools;

use crate::model::{ProblemInstance, RandomVar, VarSet};

/// Errors from group construction.
#[derive(Debug, thiserror::Error)]
pub enum SymmetryError {
    #[error("group order {order} exceeds the cap of {cap}")]
    GroupTooLarge { order: u128, cap: u128 },
}

/// Cap on the group order `N!*K!` for explicit enumeration.
pub const GROUP_ORDER_CAP: u128 = 1_000_000;

/// One symmetry: a user permutation and a file permutation, stored 0-based.
///
/// `user_perm[k]` is the image of user `k`, `file_perm[n]` the image of
/// file `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    pub user_perm: Vec<u8>,
    pub file_perm: Vec<u8>,
}

impl GroupElement {
    pub fn identity(n_files: usize, n_users: usize) -> Self {
        GroupElement {
            user_perm: (0..n_users as u8).collect(),
            file_perm: (0..n_files as u8).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.user_perm.iter().enumerate().all(|(i, &v)| v as usize == i)
            && self.file_perm.iter().enumerate().all(|(i, &v)| v as usize == i)
    }

    /// Apply the symmetry to a single random variable.
    ///
    /// Caches map as `Zk -> Z(pi(k))`; files as `Wn -> W(sigma(n))`; a delivery
    /// `Xd` maps to `Xe` with `e[pi(k)] = sigma(d[k])`, so that the statement
    /// "cache `k` plus delivery `d` decode file `d_k`" is preserved.
    pub fn act(&self, rv: &RandomVar) -> RandomVar {
        match rv {
            RandomVar::File(n) => RandomVar::File(self.file_perm[(*n - 1) as usize] + 1),
            RandomVar::Cache(k) => RandomVar::Cache(self.user_perm[(*k - 1) as usize] + 1),
            RandomVar::Delivery(d) => {
                let mut e = vec![0u8; d.len()];
                for (k, &dk) in d.iter().enumerate() {
                    e[self.user_perm[k] as usize] = self.file_perm[(dk - 1) as usize] + 1;
                }
                RandomVar::Delivery(e)
            }
        }
    }
}

/// All `N!*K!` group elements, in a deterministic order.
pub fn group_elements(n_files: usize, n_users: usize) -> Result<Vec<GroupElement>, SymmetryError> {
    let fact = |m: usize| -> u128 { (1..=m as u128).product::<u128>().max(1) };
    let order = fact(n_files) * fact(n_users);
    if order > GROUP_ORDER_CAP {
        return Err(SymmetryError::GroupTooLarge { order, cap: GROUP_ORDER_CAP });
    }
    let users: Vec<u8> = (0..n_users as u8).collect();
    let files: Vec<u8> = (0..n_files as u8).collect();
    let mut out = Vec::with_capacity(order as usize);
    for up in users.iter().copied().permutations(n_users) {
        for fp in files.iter().copied().permutations(n_files) {
            out.push(GroupElement { user_perm: up.clone(), file_perm: fp });
        }
    }
    Ok(out)
}

/// The group action precomputed on a concrete universe.
///
/// `maps[g][i]` is the universe index of the image of variable `i` under
/// element `g`, or `None` when the image falls outside a restricted universe.
pub struct Action {
    pub elements: Vec<GroupElement>,
    maps: Vec<Vec<Option<u16>>>,
}

impl Action {
    pub fn new(inst: &ProblemInstance) -> Result<Self, SymmetryError> {
        let elements = group_elements(inst.n_files(), inst.n_users())?;
        let maps = elements
            .iter()
            .map(|g| {
                inst.universe()
                    .iter()
                    .map(|rv| inst.var_index(&g.act(rv)).map(|ix| ix as u16))
                    .collect()
            })
            .collect();
        Ok(Action { elements, maps })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Image of a set under element `g`, or `None` if any member leaves the
    /// universe.
    pub fn apply(&self, g: usize, s: VarSet) -> Option<VarSet> {
        let map = &self.maps[g];
        let mut out = 0u32;
        for i in s.iter() {
            match map[i] {
                Some(j) => out |= 1 << j,
                None => return None,
            }
        }
        Some(VarSet(out))
    }
}

/// Memoized canonicalization of variable sets. Owns a copy of the instance
/// so it can be embedded in longer-lived contexts.
pub struct Canonicalizer {
    inst: ProblemInstance,
    action: Action,
    memo: RefCell<HashMap<u32, u32>>,
}

impl Canonicalizer {
    pub fn new(inst: &ProblemInstance) -> Result<Self, SymmetryError> {
        Ok(Canonicalizer {
            inst: inst.clone(),
            action: Action::new(inst)?,
            memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.inst
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    /// The canonical representative of `s`: the minimum of
    /// `closure(g * closure(s))` over all applicable group elements.
    pub fn canon(&self, s: VarSet) -> VarSet {
        let closed = self.inst.closure(s);
        if let Some(&rep) = self.memo.borrow().get(&closed.0) {
            return VarSet(rep);
        }
        let mut best = closed;
        for g in 0..self.action.len() {
            if let Some(img) = self.action.apply(g, closed) {
                let cand = self.inst.closure(img);
                if cand < best {
                    best = cand;
                }
            }
        }
        self.memo.borrow_mut().insert(closed.0, best.0);
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DemandFilter, ProblemInstance};

    fn inst32() -> ProblemInstance {
        ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap()
    }

    #[test]
    fn identity_first_and_action_bijective_on_full_universe() {
        let inst = inst32();
        let action = Action::new(&inst).unwrap();
        assert!(action.elements[0].is_identity());
        for g in 0..action.len() {
            let mut seen = vec![false; inst.universe_len()];
            for i in 0..inst.universe_len() {
                let j = action.apply(g, VarSet::singleton(i)).unwrap();
                let jx = j.iter().next().unwrap();
                assert!(!seen[jx]);
                seen[jx] = true;
            }
        }
    }

    #[test]
    fn act_preserves_decoding_relation() {
        for g in group_elements(3, 2).unwrap() {
            for d in crate::model::all_demands(3, 2) {
                for k in 1..=2usize {
                    let file = d[k - 1];
                    let gz = g.act(&RandomVar::Cache(k as u8));
                    let gx = g.act(&RandomVar::Delivery(d.clone()));
                    let gw = g.act(&RandomVar::File(file));
                    let (RandomVar::Cache(k2), RandomVar::Delivery(e), RandomVar::File(f2)) =
                        (gz, gx, gw)
                    else {
                        panic!("kind not preserved");
                    };
                    // The permuted user must request the permuted file.
                    assert_eq!(e[(k2 - 1) as usize], f2);
                }
            }
        }
    }

    #[test]
    fn canonical_is_invariant_and_closed() {
        let inst = inst32();
        let canon = Canonicalizer::new(&inst).unwrap();
        let action = Action::new(&inst).unwrap();
        for raw in (0u32..(1 << 14)).step_by(53) {
            let s = VarSet(raw);
            let rep = canon.canon(s);
            assert_eq!(inst.closure(rep), rep);
            assert!(rep <= inst.closure(s));
            for g in 0..action.len() {
                if let Some(img) = action.apply(g, inst.closure(s)) {
                    assert_eq!(canon.canon(img), rep);
                }
            }
        }
    }

    /// Orbit census on the full (3,2) instance, checked against Burnside's
    /// lemma: the number of orbits of closed sets equals the average number
    /// of closed sets fixed by a group element.
    #[test]
    fn orbit_count_matches_burnside_on_full_3_2() {
        let inst = inst32();
        let canon = Canonicalizer::new(&inst).unwrap();
        let action = Action::new(&inst).unwrap();

        let mut closed_sets: Vec<VarSet> = (0u32..(1 << 14))
            .map(|raw| inst.closure(VarSet(raw)))
            .collect();
        closed_sets.sort();
        closed_sets.dedup();

        // On the full universe the action maps closed sets to closed sets.
        let mut fixed_total: u64 = 0;
        for g in 0..action.len() {
            for &s in &closed_sets {
                let img = action.apply(g, s).unwrap();
                assert_eq!(inst.closure(img), img, "action must preserve closedness");
                if img == s {
                    fixed_total += 1;
                }
            }
        }
        assert_eq!(fixed_total % action.len() as u64, 0);
        let burnside_orbits = fixed_total / action.len() as u64;

        let mut reps: Vec<VarSet> = closed_sets.iter().map(|&s| canon.canon(s)).collect();
        reps.sort();
        reps.dedup();
        assert_eq!(reps.len() as u64, burnside_orbits);
    }

    /// Brute-force orbit partition: canonical() must be constant on each
    /// orbit and distinguish different orbits.
    #[test]
    fn canonical_separates_orbits_on_full_3_2() {
        let inst = inst32();
        let canon = Canonicalizer::new(&inst).unwrap();
        let action = Action::new(&inst).unwrap();

        let mut orbit_of: HashMap<u32, u32> = HashMap::new();
        for raw in 0u32..(1 << 14) {
            let s = inst.closure(VarSet(raw));
            if orbit_of.contains_key(&s.0) {
                continue;
            }
            // BFS over the orbit of s.
            let label = s.0;
            let mut stack = vec![s];
            while let Some(t) = stack.pop() {
                if orbit_of.insert(t.0, label).is_some() {
                    continue;
                }
                for g in 0..action.len() {
                    let img = action.apply(g, t).unwrap();
                    if !orbit_of.contains_key(&img.0) {
                        stack.push(img);
                    }
                }
            }
        }

        let mut rep_by_orbit: HashMap<u32, u32> = HashMap::new();
        for (&set, &label) in &orbit_of {
            let rep = canon.canon(VarSet(set));
            match rep_by_orbit.get(&label) {
                Some(&r) => assert_eq!(r, rep.0, "canonical differs inside an orbit"),
                None => {
                    rep_by_orbit.insert(label, rep.0);
                }
            }
            // The representative must lie in the same orbit.
            assert_eq!(orbit_of[&rep.0], label);
        }
        // Distinct orbits get distinct representatives.
        let mut reps: Vec<u32> = rep_by_orbit.values().copied().collect();
        reps.sort();
        let n = reps.len();
        reps.dedup();
        assert_eq!(reps.len(), n);
    }

    #[test]
    fn restricted_universe_skips_escaping_images() {
        // Restrict (2,4) to two deliveries; most permutations map X1122 out
        // of the universe and must be skipped rather than misapplied.
        let inst = ProblemInstance::new(
            2,
            4,
            DemandFilter::All,
            Some(vec![
                RandomVar::Delivery(vec![1, 1, 1, 2]),
                RandomVar::Delivery(vec![1, 1, 2, 2]),
            ]),
        )
        .unwrap();
        let canon = Canonicalizer::new(&inst).unwrap();
        let x1122 = inst.var_index(&RandomVar::Delivery(vec![1, 1, 2, 2])).unwrap();
        let rep = canon.canon(VarSet::singleton(x1122));
        // X1122's orbit inside the universe is itself alone (X2211 etc. are
        // absent), so the representative is its own closure.
        assert_eq!(rep, VarSet::singleton(x1122));
    }

    #[test]
    fn group_order_cap_enforced() {
        assert!(group_elements(9, 9).is_err());
        assert_eq!(group_elements(2, 4).unwrap().len(), 48);
        assert_eq!(group_elements(3, 3).unwrap().len(), 36);
    }
}
