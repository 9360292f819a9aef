//! Problem instances, the random-variable universe, demand vectors and
//! demand types, and naming/parsing of all entities.
//!
//! A caching system has `N` files `W1..WN`, `K` user caches `Z1..ZK`, and one
//! delivery variable `Xd` per demand vector `d` in `{1..N}^K`. An instance
//! fixes `(N, K)` together with a demand filter and an optional explicit
//! restriction of the delivery variables, which determines the *universe*:
//! the ordered list of random variables the entropy LP ranges over.

use std::collections::HashMap;
use std::fmt;

use num::BigUint;
use serde::{Deserialize, Serialize};

/// Default cap on the universe size; enumeration is exponential in it.
pub const DEFAULT_UNIVERSE_CAP: usize = 16;

/// Hard ceiling imposed by the `u32` bitmask representation of [`VarSet`].
pub const MAX_UNIVERSE: usize = 32;

/// Errors from instance construction and name parsing.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("universe would contain {count} variables, exceeding the cap of {cap}")]
    CapacityExceeded { count: usize, cap: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("malformed variable name `{name}`: {reason}")]
    BadName { name: String, reason: String },
    #[error("argument out of domain: {0}")]
    Domain(String),
}

/// One of the system's random variables.
///
/// Indices are 1-based, matching the usual notation: `File(2)` is `W2`,
/// `Cache(1)` is `Z1`, and `Delivery(vec![1,1,2,2])` is `X1122`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RandomVar {
    File(u8),
    Cache(u8),
    Delivery(Vec<u8>),
}

impl RandomVar {
    /// Text name in the `W<n> | Z<k> | X<d1..dK>` grammar (single-digit indices).
    pub fn name(&self) -> String {
        match self {
            RandomVar::File(n) => format!("W{n}"),
            RandomVar::Cache(k) => format!("Z{k}"),
            RandomVar::Delivery(d) => {
                let digits: String = d.iter().map(|x| x.to_string()).collect();
                format!("X{digits}")
            }
        }
    }
}

impl fmt::Display for RandomVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Which delivery variables an instance admits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DemandFilter {
    /// All `N^K` demand vectors.
    All,
    /// Only demands of one demand type.
    OfType(DemandType),
    /// An explicit, duplicate-free list of demand vectors.
    Explicit(Vec<Vec<u8>>),
}

impl DemandFilter {
    /// Does the filter admit demand vector `d`?
    pub fn admits(&self, d: &[u8], n_files: usize) -> bool {
        match self {
            DemandFilter::All => true,
            DemandFilter::OfType(t) => demand_type_of(d, n_files) == *t,
            DemandFilter::Explicit(list) => list.iter().any(|e| e == d),
        }
    }
}

/// A demand type: the request histogram sorted in non-increasing order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemandType(pub Vec<u8>);

impl fmt::Display for DemandType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A subset of the instance universe, as a bitmask over universe indices.
///
/// The total order compares by cardinality first, then lexicographically on
/// the sorted member index lists (the set containing the lowest differing
/// index is smaller). This is the order used everywhere a canonical
/// representative is chosen, so it must be stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarSet(pub u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(i: usize) -> VarSet {
        VarSet(1u32 << i)
    }

    pub fn from_indices(ix: impl IntoIterator<Item = usize>) -> VarSet {
        let mut m = 0u32;
        for i in ix {
            m |= 1 << i;
        }
        VarSet(m)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn union(&self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn is_subset(&self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn remove(&self, i: usize) -> VarSet {
        VarSet(self.0 & !(1 << i))
    }

    pub fn insert(&self, i: usize) -> VarSet {
        VarSet(self.0 | (1 << i))
    }

    /// Iterate member indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }
}

impl Ord for VarSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match self.len().cmp(&other.len()) {
            Equal => {
                let d = self.0 ^ other.0;
                if d == 0 {
                    Equal
                } else if self.0 & (d & d.wrapping_neg()) != 0 {
                    // `self` contains the lowest differing index, so its sorted
                    // member list is lexicographically smaller.
                    Less
                } else {
                    Greater
                }
            }
            o => o,
        }
    }
}

impl PartialOrd for VarSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A caching problem instance: `(N, K)`, the demand filter, an optional
/// restriction of the delivery variables, and the resulting ordered universe.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    n_files: usize,
    n_users: usize,
    demand_filter: DemandFilter,
    restriction: Option<Vec<RandomVar>>,
    universe: Vec<RandomVar>,
    index: HashMap<RandomVar, usize>,
    /// Bitmask of all file variables (always indices `0..N`).
    files_mask: VarSet,
    /// For cache index `k` (0-based universe index `N + k`) and delivery
    /// universe index `x`: the universe index of the decoded file.
    decode: Vec<Vec<usize>>,
}

impl ProblemInstance {
    /// Build an instance with the default universe-size cap.
    pub fn new(
        n_files: usize,
        n_users: usize,
        demand_filter: DemandFilter,
        restriction: Option<Vec<RandomVar>>,
    ) -> Result<Self, ModelError> {
        Self::with_cap(n_files, n_users, demand_filter, restriction, DEFAULT_UNIVERSE_CAP)
    }

    /// Build an instance with an explicit universe-size cap (hard max 32).
    pub fn with_cap(
        n_files: usize,
        n_users: usize,
        demand_filter: DemandFilter,
        restriction: Option<Vec<RandomVar>>,
        cap: usize,
    ) -> Result<Self, ModelError> {
        if n_files < 1 || n_users < 1 {
            return Err(ModelError::InvalidInstance(
                "need at least one file and one user".into(),
            ));
        }
        let check_demand = |d: &[u8]| -> Result<(), ModelError> {
            if d.len() != n_users || d.iter().any(|&x| x < 1 || x as usize > n_files) {
                return Err(ModelError::InvalidInstance(format!(
                    "demand vector ({:?}) must have {} entries in 1..={}",
                    d, n_users, n_files
                )));
            }
            Ok(())
        };
        match &demand_filter {
            DemandFilter::All => {}
            DemandFilter::OfType(t) => {
                if t.0.len() != n_files
                    || t.0.iter().map(|&m| m as usize).sum::<usize>() != n_users
                    || t.0.windows(2).any(|w| w[0] < w[1])
                {
                    return Err(ModelError::InvalidInstance(format!(
                        "{t} is not a valid demand type for ({n_files},{n_users})"
                    )));
                }
            }
            DemandFilter::Explicit(list) => {
                if list.is_empty() {
                    return Err(ModelError::InvalidInstance("empty demand list".into()));
                }
                for d in list {
                    check_demand(d)?;
                }
                let mut sorted = list.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != list.len() {
                    return Err(ModelError::InvalidInstance("duplicate demands".into()));
                }
            }
        }
        if let Some(r) = &restriction {
            for rv in r {
                match rv {
                    RandomVar::Delivery(d) => check_demand(d)?,
                    other => {
                        return Err(ModelError::InvalidInstance(format!(
                            "restriction may only list X-variables, found {other}"
                        )));
                    }
                }
            }
        }

        // Assemble the universe: all W, all Z, then the selected X-variables
        // in lexicographic demand order.
        let mut universe: Vec<RandomVar> = Vec::new();
        for n in 1..=n_files {
            universe.push(RandomVar::File(n as u8));
        }
        for k in 1..=n_users {
            universe.push(RandomVar::Cache(k as u8));
        }
        let mut demands: Vec<Vec<u8>> = Vec::new();
        let admit = |d: &[u8]| -> bool {
            let in_filter = demand_filter.admits(d, n_files);
            match &restriction {
                Some(r) => in_filter && r.iter().any(|rv| matches!(rv, RandomVar::Delivery(e) if e == d)),
                None => in_filter,
            }
        };
        for d in all_demands(n_files, n_users) {
            if admit(&d) {
                demands.push(d);
            }
        }
        // A restriction may list demands outside the filter; the intersection
        // is what counts, but an explicit restriction with a default filter of
        // All simply selects the listed demands.
        for d in demands {
            universe.push(RandomVar::Delivery(d));
        }

        let count = universe.len();
        let effective_cap = cap.min(MAX_UNIVERSE);
        if count > effective_cap {
            return Err(ModelError::CapacityExceeded { count, cap: effective_cap });
        }

        let index: HashMap<RandomVar, usize> =
            universe.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let files_mask = VarSet::from_indices(0..n_files);
        let mut decode = vec![Vec::new(); n_users];
        for k in 0..n_users {
            let mut row = Vec::new();
            for rv in &universe {
                if let RandomVar::Delivery(d) = rv {
                    // File index decoded by user k+1 from this delivery.
                    row.push((d[k] - 1) as usize);
                }
            }
            decode[k] = row;
        }

        Ok(ProblemInstance {
            n_files,
            n_users,
            demand_filter,
            restriction,
            universe,
            index,
            files_mask,
            decode,
        })
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn demand_filter(&self) -> &DemandFilter {
        &self.demand_filter
    }

    pub fn restriction(&self) -> Option<&[RandomVar]> {
        self.restriction.as_deref()
    }

    /// The ordered universe: all `W`, all `Z`, then the selected `X`s.
    pub fn universe(&self) -> &[RandomVar] {
        &self.universe
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    /// Bitmask of the whole universe.
    pub fn full_set(&self) -> VarSet {
        if self.universe.len() == 32 {
            VarSet(u32::MAX)
        } else {
            VarSet((1u32 << self.universe.len()) - 1)
        }
    }

    /// Bitmask of the file variables.
    pub fn files_mask(&self) -> VarSet {
        self.files_mask
    }

    /// Universe index of a variable, if present.
    pub fn var_index(&self, rv: &RandomVar) -> Option<usize> {
        self.index.get(rv).copied()
    }

    pub fn var_at(&self, i: usize) -> &RandomVar {
        &self.universe[i]
    }

    /// Universe indices of the delivery variables.
    pub fn delivery_indices(&self) -> std::ops::Range<usize> {
        (self.n_files + self.n_users)..self.universe.len()
    }

    /// Universe index of cache `Zk` (1-based `k`).
    pub fn cache_index(&self, k: usize) -> usize {
        self.n_files + (k - 1)
    }

    /// For the `k`-th user (0-based) and the `x`-th delivery variable
    /// (0-based among deliveries), the universe index of the decoded file.
    pub fn decoded_file(&self, user: usize, delivery_offset: usize) -> usize {
        self.decode[user][delivery_offset]
    }

    /// Functional-dependence closure of a set.
    ///
    /// Least fixed point of: (a) a cache `Zk` together with a delivery `Xd`
    /// determines the file `W(d_k)`; (b) once all `N` files are present,
    /// every variable is determined.
    pub fn closure(&self, s: VarSet) -> VarSet {
        let mut cur = s;
        loop {
            if self.files_mask.is_subset(cur) {
                return self.full_set();
            }
            let mut next = cur;
            let base = self.n_files + self.n_users;
            for k in 0..self.n_users {
                if !cur.contains(self.n_files + k) {
                    continue;
                }
                let row = &self.decode[k];
                for (off, &file_ix) in row.iter().enumerate() {
                    if cur.contains(base + off) {
                        next = next.insert(file_ix);
                    }
                }
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    /// Render a set as a comma-joined name list in universe order.
    pub fn set_name(&self, s: VarSet) -> String {
        let names: Vec<String> = s.iter().map(|i| self.universe[i].name()).collect();
        names.join(",")
    }

    /// Parse a comma-joined name list into a set.
    pub fn parse_set(&self, text: &str) -> Result<VarSet, ModelError> {
        let mut s = VarSet::EMPTY;
        for part in text.split(',').filter(|p| !p.trim().is_empty()) {
            let rv = parse_var(part.trim(), self.n_files, self.n_users)?;
            let ix = self.var_index(&rv).ok_or_else(|| ModelError::BadName {
                name: part.trim().into(),
                reason: "variable not in the instance universe".into(),
            })?;
            s = s.insert(ix);
        }
        Ok(s)
    }
}

/// All demand vectors for `(N, K)` in lexicographic order.
pub fn all_demands(n_files: usize, n_users: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![1u8; n_users];
    loop {
        out.push(cur.clone());
        // Increment like an odometer in base N with digits 1..=N.
        let mut pos = n_users;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if (cur[pos] as usize) < n_files {
                cur[pos] += 1;
                for later in cur.iter_mut().skip(pos + 1) {
                    *later = 1;
                }
                break;
            }
        }
    }
}

/// The demand type of a demand vector: its request histogram, sorted
/// non-increasing.
pub fn demand_type_of(d: &[u8], n_files: usize) -> DemandType {
    let mut hist = vec![0u8; n_files];
    for &x in d {
        hist[(x - 1) as usize] += 1;
    }
    hist.sort_unstable_by(|a, b| b.cmp(a));
    DemandType(hist)
}

/// All demand types for `(N, K)`: the non-increasing `N`-part compositions of
/// `K`, sorted lexicographically descending.
pub fn demand_types(n_files: usize, n_users: usize) -> Vec<DemandType> {
    fn rec(remaining: usize, parts_left: usize, max_part: usize, prefix: &mut Vec<u8>, out: &mut Vec<DemandType>) {
        if parts_left == 0 {
            if remaining == 0 {
                out.push(DemandType(prefix.clone()));
            }
            return;
        }
        let hi = remaining.min(max_part);
        for part in (0..=hi).rev() {
            // Remaining parts are each at most `part`, so the rest must fit.
            if remaining - part <= part * (parts_left - 1) {
                prefix.push(part as u8);
                rec(remaining - part, parts_left - 1, part, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n_users, n_files, n_users, &mut Vec::new(), &mut out);
    // The recursion emits in lexicographically descending order already.
    out
}

/// The canonical representative demand of a type: `m1` ones, then `m2` twos,
/// and so on.
pub fn representative_demand(t: &DemandType) -> Vec<u8> {
    let mut d = Vec::new();
    for (file0, &m) in t.0.iter().enumerate() {
        for _ in 0..m {
            d.push(file0 as u8 + 1);
        }
    }
    d
}

/// Number of elemental entropy inequalities over `n` random variables:
/// `n + C(n,2) * 2^(n-2)`, computed exactly.
pub fn elemental_count(n: usize) -> Result<BigUint, ModelError> {
    if n < 2 {
        return Err(ModelError::Domain(format!(
            "elemental count needs n >= 2, got {n}"
        )));
    }
    let n_big = BigUint::from(n);
    let pairs = BigUint::from(n * (n - 1) / 2);
    let pow = BigUint::from(2u32).pow(n as u32 - 2);
    Ok(n_big + pairs * pow)
}

/// Parse a variable name in the `W<n> | Z<k> | X<d1..dK>` grammar.
pub fn parse_var(name: &str, n_files: usize, n_users: usize) -> Result<RandomVar, ModelError> {
    let bad = |reason: &str| ModelError::BadName {
        name: name.into(),
        reason: reason.into(),
    };
    if n_files > 9 || n_users > 9 {
        return Err(bad("text names require N <= 9 and K <= 9"));
    }
    let mut chars = name.chars();
    let head = chars.next().ok_or_else(|| bad("empty name"))?;
    let rest: String = chars.collect();
    let digits = |s: &str| -> Result<Vec<u8>, ModelError> {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| bad("expected digits")))
            .collect()
    };
    match head {
        'W' => {
            let d = digits(&rest)?;
            if d.len() != 1 || d[0] < 1 || d[0] as usize > n_files {
                return Err(bad(&format!("file index must be a single digit in 1..={n_files}")));
            }
            Ok(RandomVar::File(d[0]))
        }
        'Z' => {
            let d = digits(&rest)?;
            if d.len() != 1 || d[0] < 1 || d[0] as usize > n_users {
                return Err(bad(&format!("cache index must be a single digit in 1..={n_users}")));
            }
            Ok(RandomVar::Cache(d[0]))
        }
        'X' => {
            let d = digits(&rest)?;
            if d.len() != n_users {
                return Err(bad(&format!("demand must have exactly {n_users} digits")));
            }
            if d.iter().any(|&x| x < 1 || x as usize > n_files) {
                return Err(bad(&format!("demand entries must be in 1..={n_files}")));
            }
            Ok(RandomVar::Delivery(d))
        }
        _ => Err(bad("name must start with W, Z or X")),
    }
}

/// Format a variable name; inverse of [`parse_var`] for single-digit indices.
pub fn format_var(rv: &RandomVar) -> String {
    rv.name()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universe_sizes() {
        let full32 = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
        assert_eq!(full32.universe_len(), 14);

        let restricted = ProblemInstance::new(
            2,
            4,
            DemandFilter::All,
            Some(vec![
                RandomVar::Delivery(vec![1, 1, 1, 2]),
                RandomVar::Delivery(vec![1, 1, 2, 2]),
            ]),
        )
        .unwrap();
        assert_eq!(restricted.universe_len(), 8);

        let full24 = ProblemInstance::with_cap(2, 4, DemandFilter::All, None, 22).unwrap();
        assert_eq!(full24.universe_len(), 22);
    }

    #[test]
    fn capacity_error_names_count() {
        let err = ProblemInstance::new(2, 4, DemandFilter::All, None).unwrap_err();
        match err {
            ModelError::CapacityExceeded { count, cap } => {
                assert_eq!(count, 22);
                assert_eq!(cap, 16);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn demand_types_small_cases() {
        let types = |n, k| {
            demand_types(n, k)
                .into_iter()
                .map(|t| t.0)
                .collect::<Vec<_>>()
        };
        assert_eq!(types(3, 4), vec![vec![4, 0, 0], vec![3, 1, 0], vec![2, 2, 0], vec![2, 1, 1]]);
        assert_eq!(types(4, 3), vec![vec![3, 0, 0, 0], vec![2, 1, 0, 0], vec![1, 1, 1, 0]]);
        assert_eq!(types(1, 7), vec![vec![7]]);
        assert_eq!(types(2, 3), vec![vec![3, 0], vec![2, 1]]);
        assert_eq!(types(2, 4), vec![vec![4, 0], vec![3, 1], vec![2, 2]]);
        assert_eq!(types(3, 2), vec![vec![2, 0, 0], vec![1, 1, 0]]);
        assert_eq!(
            types(3, 3),
            vec![vec![3, 0, 0], vec![2, 1, 0], vec![1, 1, 1]]
        );
    }

    /// Independent partition-counting recurrence: p(k, at most n parts).
    fn partitions_at_most(k: usize, n: usize) -> usize {
        // p(k, n) = p(k, n-1) + p(k-n, n)
        fn p(k: i64, n: i64, memo: &mut HashMap<(i64, i64), usize>) -> usize {
            if k == 0 {
                return 1;
            }
            if k < 0 || n == 0 {
                return 0;
            }
            if let Some(&v) = memo.get(&(k, n)) {
                return v;
            }
            let v = p(k, n - 1, memo) + p(k - n, n, memo);
            memo.insert((k, n), v);
            v
        }
        p(k as i64, n as i64, &mut HashMap::new())
    }

    #[test]
    fn demand_type_count_matches_partition_recurrence() {
        for n in 1..=5 {
            for k in 1..=6 {
                assert_eq!(
                    demand_types(n, k).len(),
                    partitions_at_most(k, n),
                    "count mismatch at ({n},{k})"
                );
            }
        }
    }

    #[test]
    fn every_demand_has_a_listed_type() {
        for n in 1..=3 {
            for k in 1..=4 {
                let types = demand_types(n, k);
                for d in all_demands(n, k) {
                    let t = demand_type_of(&d, n);
                    assert!(types.contains(&t), "type {t} of {d:?} missing");
                }
            }
        }
    }

    #[test]
    fn demand_type_of_examples() {
        assert_eq!(demand_type_of(&[1, 2, 2, 3], 3).0, vec![2, 1, 1]);
        assert_eq!(demand_type_of(&[1, 1, 1], 3).0, vec![3, 0, 0]);
        assert_eq!(demand_type_of(&[1, 2], 4).0, vec![1, 1, 0, 0]);
    }

    #[test]
    fn elemental_count_values() {
        assert_eq!(elemental_count(3).unwrap(), BigUint::from(9u32));
        assert_eq!(elemental_count(4).unwrap(), BigUint::from(28u32));
        assert_eq!(elemental_count(22).unwrap(), BigUint::from(242_221_078u64));
        assert!(elemental_count(1).is_err());
    }

    #[test]
    fn var_name_round_trip() {
        let inst = ProblemInstance::with_cap(2, 4, DemandFilter::All, None, 22).unwrap();
        for rv in inst.universe() {
            let s = format_var(rv);
            assert_eq!(&parse_var(&s, 2, 4).unwrap(), rv);
        }
        assert_eq!(
            parse_var("X1122", 2, 4).unwrap(),
            RandomVar::Delivery(vec![1, 1, 2, 2])
        );
        assert_eq!(parse_var("W2", 2, 4).unwrap(), RandomVar::File(2));
        assert!(parse_var("X12", 2, 4).is_err());
        assert!(parse_var("W0", 2, 4).is_err());
        assert!(parse_var("Q1", 2, 4).is_err());
    }

    #[test]
    fn varset_order_is_total_and_by_cardinality() {
        let a = VarSet::from_indices([0, 3]);
        let b = VarSet::from_indices([1, 2]);
        let c = VarSet::from_indices([5]);
        assert!(c < a);
        assert!(a < b); // both size 2; `a` contains the lowest differing index 0
        let mut all: Vec<VarSet> = (1u32..64).map(VarSet).collect();
        all.sort();
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn closure_examples() {
        let inst = ProblemInstance::with_cap(
            3,
            3,
            DemandFilter::OfType(DemandType(vec![2, 1, 0])),
            None,
            24,
        )
        .unwrap();
        // {W2, Z3, X233} closes to {W2, W3, Z3, X233}: user 3 requests file 3.
        let s = inst.parse_set("W2,Z3,X233").unwrap();
        assert_eq!(inst.closure(s), inst.parse_set("W2,W3,Z3,X233").unwrap());
        assert_eq!(inst.closure(VarSet::EMPTY), VarSet::EMPTY);

        let inst2 = ProblemInstance::with_cap(2, 4, DemandFilter::All, None, 22).unwrap();
        let files = inst2.parse_set("W1,W2").unwrap();
        assert_eq!(inst2.closure(files), inst2.full_set());
    }

    #[test]
    fn closure_is_monotone_extensive_idempotent() {
        let inst = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
        for raw in (0u32..(1 << 14)).step_by(97) {
            let s = VarSet(raw & (inst.full_set().0));
            let c = inst.closure(s);
            assert!(s.is_subset(c));
            assert_eq!(inst.closure(c), c);
            let t = VarSet(c.0 | (raw.rotate_left(5) & inst.full_set().0));
            assert!(inst.closure(c).is_subset(inst.closure(t)));
        }
    }

    #[test]
    fn universe_ordering_is_stable() {
        let a = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
        let b = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
        assert_eq!(a.universe(), b.universe());
    }
}
