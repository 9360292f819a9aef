//! Explicit linear caching codes over prime fields.
//!
//! A [`LinearCode`] stores, for each user, a placement matrix over `F_p`
//! whose rows are the cached symbols, and for each demand a delivery matrix
//! whose rows are the transmitted symbols; columns index the `N * s` message
//! symbols (`s` segments per file, file blocks in order). Decodability and
//! joint entropies are decided by exact rank computations: a linear function
//! of the messages has entropy `rank / s` in file-size units.

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::lpbuild::LpContext;
use crate::model::{DemandFilter, DemandType, ProblemInstance, RandomVar, VarSet};
use crate::ratsolve::{Rational, Sense};
use crate::tradeoff::TradeoffPoint;

/// Errors from code construction, I/O, and entropy evaluation.
#[derive(Debug, thiserror::Error)]
pub enum CodeError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("t={t} out of range for K={k}")]
    BadT { t: usize, k: usize },
    #[error("matrix row has width {got}, expected {want}")]
    BadWidth { got: usize, want: usize },
    #[error("no delivery defined for demand {0}")]
    MissingDelivery(String),
    #[error("variable {0} has no matrix in this code")]
    UndefinedVariable(String),
    #[error("no symmetry of the placement maps demand {0} to a listed delivery")]
    NoSymmetricDelivery(String),
    #[error("malformed code JSON: {0}")]
    Json(String),
}

/// Arithmetic mod a checked prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<PrimeField, CodeError> {
        if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(CodeError::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn reduce(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(&self, a: u64) -> u64 {
        let mut result = 1u64;
        let mut base = a % self.p;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }
}

/// A dense matrix over `F_p`; entries are already reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    pub width: usize,
    pub rows: Vec<Vec<u64>>,
}

impl Matrix {
    pub fn new(width: usize) -> Matrix {
        Matrix { width, rows: Vec::new() }
    }

    pub fn from_rows(width: usize, rows: Vec<Vec<u64>>) -> Result<Matrix, CodeError> {
        for row in &rows {
            if row.len() != width {
                return Err(CodeError::BadWidth { got: row.len(), want: width });
            }
        }
        Ok(Matrix { width, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn stack(&self, other: &Matrix) -> Matrix {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Matrix { width: self.width, rows }
    }

    /// Rank by Gaussian elimination mod p.
    pub fn rank(&self, field: &PrimeField) -> usize {
        let mut rows: Vec<Vec<u64>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| v % field.modulus()).collect())
            .collect();
        let mut rank = 0;
        for col in 0..self.width {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let inv = field.inv(rows[rank][col]);
            for v in rows[rank].iter_mut() {
                *v = field.mul(*v, inv);
            }
            for r in 0..rows.len() {
                if r != rank && rows[r][col] != 0 {
                    let f = rows[r][col];
                    for c in 0..self.width {
                        let sub = field.mul(f, rows[rank][c]);
                        rows[r][c] = field.add(rows[r][c], field.neg(sub));
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Permute columns: output column `j` is input column `perm[j]`.
    fn permute_columns(&self, perm: &[usize]) -> Matrix {
        let rows = self
            .rows
            .iter()
            .map(|r| perm.iter().map(|&src| r[src]).collect())
            .collect();
        Matrix { width: self.width, rows }
    }
}

fn same_rowspace(a: &Matrix, b: &Matrix, field: &PrimeField) -> bool {
    let ra = a.rank(field);
    ra == b.rank(field) && a.stack(b).rank(field) == ra
}

/// A vector linear caching code.
#[derive(Debug, Clone)]
pub struct LinearCode {
    pub field: PrimeField,
    pub n_files: usize,
    pub n_users: usize,
    /// Segments per file; every matrix has `n_files * segments` columns.
    pub segments: usize,
    /// Placement matrix per user, in user order.
    pub placement: Vec<Matrix>,
    /// Delivery matrix per covered demand.
    pub deliveries: BTreeMap<Vec<u8>, Matrix>,
}

fn demand_name(d: &[u8]) -> String {
    d.iter().map(|v| v.to_string()).collect()
}

impl LinearCode {
    pub fn n_cols(&self) -> usize {
        self.n_files * self.segments
    }

    /// Column index of segment `i` (0-based) of file `n` (1-based).
    pub fn col(&self, file: usize, seg: usize) -> usize {
        (file - 1) * self.segments + seg
    }

    /// Unit-row matrix spanning one file's symbols.
    pub fn file_matrix(&self, file: usize) -> Matrix {
        let mut m = Matrix::new(self.n_cols());
        for seg in 0..self.segments {
            let mut row = vec![0; self.n_cols()];
            row[self.col(file, seg)] = 1;
            m.rows.push(row);
        }
        m
    }

    /// The matrix of one model variable, if the code defines it.
    pub fn var_matrix(&self, var: &RandomVar) -> Result<Matrix, CodeError> {
        match var {
            RandomVar::File(n) => Ok(self.file_matrix(*n as usize)),
            RandomVar::Cache(k) => Ok(self.placement[*k as usize - 1].clone()),
            RandomVar::Delivery(d) => self
                .deliveries
                .get(d)
                .cloned()
                .ok_or_else(|| CodeError::UndefinedVariable(var.name())),
        }
    }

    /// Achieved `(M, R)`: worst-case symbol counts over users and demands,
    /// in file-size units.
    pub fn code_point(&self) -> TradeoffPoint {
        let s = self.segments as i64;
        let m = self.placement.iter().map(Matrix::n_rows).max().unwrap_or(0);
        let r = self.deliveries.values().map(Matrix::n_rows).max().unwrap_or(0);
        TradeoffPoint {
            m: Rational::new((m as i64).into(), s.into()),
            r: Rational::new((r as i64).into(), s.into()),
        }
    }
}

/// Outcome of [`verify_code`]: empty `failures` means every requested demand
/// is decodable by every user.
#[derive(Debug, Clone)]
pub struct CodeReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Check decodability by rank: user `k` can decode file `d_k` from demand
/// `d` iff stacking the file's unit rows onto `[placement_k; delivery_d]`
/// does not increase the rank.
pub fn verify_code(code: &LinearCode, demands: &[Vec<u8>]) -> Result<CodeReport, CodeError> {
    let mut failures = Vec::new();
    for d in demands {
        let delivery = code
            .deliveries
            .get(d)
            .ok_or_else(|| CodeError::MissingDelivery(demand_name(d)))?;
        for k in 0..code.n_users {
            let known = code.placement[k].stack(delivery);
            let with_file = known.stack(&code.file_matrix(d[k] as usize));
            if with_file.rank(&code.field) != known.rank(&code.field) {
                failures.push(format!("user {} cannot decode file {} under demand {}",
                    k + 1, d[k], demand_name(d)));
            }
        }
    }
    Ok(CodeReport { ok: failures.is_empty(), failures })
}

/// Joint entropies (in file-size units) of the given variable sets.
pub fn entropy_vector(
    code: &LinearCode,
    inst: &ProblemInstance,
    sets: &[VarSet],
) -> Result<Vec<Rational>, CodeError> {
    sets.iter()
        .map(|s| {
            let mut stacked = Matrix::new(code.n_cols());
            for i in s.iter() {
                stacked = stacked.stack(&code.var_matrix(inst.var_at(i))?);
            }
            let rank = stacked.rank(&code.field);
            Ok(Rational::new((rank as i64).into(), (code.segments as i64).into()))
        })
        .collect()
}

/// The code's point in the LP coordinate space of `ctx`: one entropy per
/// canonical term, then `M` and `R` from [`LinearCode::code_point`].
pub fn lp_vector(code: &LinearCode, ctx: &LpContext) -> Result<Vec<Rational>, CodeError> {
    let mut v = entropy_vector(code, ctx.instance(), &ctx.terms.reps)?;
    let point = code.code_point();
    v.push(point.m);
    v.push(point.r);
    Ok(v)
}

/// Check the code's LP vector against every constraint of `ctx`. Returns the
/// violated constraint indices (empty for a sound code).
pub fn constraint_violations(code: &LinearCode, ctx: &LpContext) -> Result<Vec<usize>, CodeError> {
    let v = lp_vector(code, ctx)?;
    let mut bad = Vec::new();
    for (i, cons) in ctx.constraints.iter().enumerate() {
        let lhs: Rational = cons
            .coeffs
            .iter()
            .map(|(var, c)| c * &v[*var])
            .fold(Rational::zero(), |a, b| a + b);
        let ok = match cons.sense {
            Sense::Ge => lhs >= cons.rhs,
            Sense::Eq => lhs == cons.rhs,
        };
        if !ok {
            bad.push(i);
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------
// Standard schemes
// ---------------------------------------------------------------------------

fn subsets_of_size(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, k: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for v in start..k {
            cur.push(v);
            rec(v + 1, k, t, cur, out);
            cur.pop();
        }
    }
    rec(0, k, t, &mut cur, &mut out);
    out
}

fn all_demands(n: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![1u8; k];
    loop {
        out.push(cur.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if (cur[pos] as usize) < n {
                cur[pos] += 1;
                for v in cur.iter_mut().skip(pos + 1) {
                    *v = 1;
                }
                break;
            }
        }
    }
}

/// The subset-placement coded scheme: `C(K,t)` segments per file indexed by
/// `t`-subsets of users; user `k` caches segment `(n,T)` iff `k` is in `T`;
/// the delivery for demand `d` sends, for each `(t+1)`-subset `S`, the sum
/// over `k` in `S` of segment `(d_k, S minus k)`. Achieves
/// `(tN/K, C(K,t+1)/C(K,t))` over `F_2`.
pub fn man_scheme(n: usize, k: usize, t: usize) -> Result<LinearCode, CodeError> {
    if t > k {
        return Err(CodeError::BadT { t, k });
    }
    let field = PrimeField::new(2)?;
    let t_subsets = subsets_of_size(k, t);
    let segments = t_subsets.len();
    let n_cols = n * segments;
    let seg_of: BTreeMap<Vec<usize>, usize> =
        t_subsets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let col = |file: usize, seg: usize| (file - 1) * segments + seg;

    let mut placement = Vec::new();
    for user in 0..k {
        let mut m = Matrix::new(n_cols);
        for file in 1..=n {
            for (seg, t_set) in t_subsets.iter().enumerate() {
                if t_set.contains(&user) {
                    let mut row = vec![0; n_cols];
                    row[col(file, seg)] = 1;
                    m.rows.push(row);
                }
            }
        }
        placement.push(m);
    }

    let s1_subsets = subsets_of_size(k, t + 1);
    let mut deliveries = BTreeMap::new();
    for d in all_demands(n, k) {
        let mut m = Matrix::new(n_cols);
        for s_set in &s1_subsets {
            let mut row = vec![0u64; n_cols];
            for &user in s_set {
                let t_set: Vec<usize> = s_set.iter().copied().filter(|&v| v != user).collect();
                let c = col(d[user] as usize, seg_of[&t_set]);
                row[c] = field.add(row[c], 1);
            }
            m.rows.push(row);
        }
        deliveries.insert(d, m);
    }
    Ok(LinearCode { field, n_files: n, n_users: k, segments, placement, deliveries })
}

/// The uncoded memory-sharing baseline at the same cache size `tN/K`:
/// `K` segments per file, every user caches segments `1..t` of every file,
/// and the delivery sends the remaining segments of each distinct requested
/// file. Achieves the line `R = N - M` (or better when fewer files are
/// requested).
pub fn man_uncoded(n: usize, k: usize, t: usize) -> Result<LinearCode, CodeError> {
    if t > k {
        return Err(CodeError::BadT { t, k });
    }
    let field = PrimeField::new(2)?;
    let segments = k;
    let n_cols = n * segments;
    let col = |file: usize, seg: usize| (file - 1) * segments + seg;
    let mut cache = Matrix::new(n_cols);
    for file in 1..=n {
        for seg in 0..t {
            let mut row = vec![0; n_cols];
            row[col(file, seg)] = 1;
            cache.rows.push(row);
        }
    }
    let mut deliveries = BTreeMap::new();
    for d in all_demands(n, k) {
        let mut wanted: Vec<usize> = d.iter().map(|&f| f as usize).collect();
        wanted.sort_unstable();
        wanted.dedup();
        let mut m = Matrix::new(n_cols);
        for file in wanted {
            for seg in t..segments {
                let mut row = vec![0; n_cols];
                row[col(file, seg)] = 1;
                m.rows.push(row);
            }
        }
        deliveries.insert(d, m);
    }
    Ok(LinearCode {
        field,
        n_files: n,
        n_users: k,
        segments,
        placement: vec![cache; k],
        deliveries,
    })
}

// ---------------------------------------------------------------------------
// Explicit transcribed codes
// ---------------------------------------------------------------------------

/// Identifier of a transcribed code listing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperCodeId {
    /// `(2,4)` at `(2/3, 1)` over `F_5`, all 16 demands.
    Table2,
    /// `(2,4)` at `(1/2, 7/6)` over `F_2`, demand type `(3,1)`.
    Table16,
    /// `(2,4)` at `(1/3, 4/3)` over `F_2`, demand type `(2,2)`.
    Table17,
    /// `(2,4)` at `(4/3, 1/3)` over `F_2`, demand type `(2,2)`.
    Table18,
}

impl PaperCodeId {
    pub fn parse(text: &str) -> Option<PaperCodeId> {
        match text.to_ascii_lowercase().as_str() {
            "table2" => Some(PaperCodeId::Table2),
            "table16" => Some(PaperCodeId::Table16),
            "table17" => Some(PaperCodeId::Table17),
            "table18" => Some(PaperCodeId::Table18),
            _ => None,
        }
    }

    /// The demand filter of the instance the code serves.
    pub fn demand_filter(&self) -> DemandFilter {
        match self {
            PaperCodeId::Table2 => DemandFilter::All,
            PaperCodeId::Table16 => DemandFilter::OfType(DemandType(vec![3, 1])),
            PaperCodeId::Table17 | PaperCodeId::Table18 => DemandFilter::OfType(DemandType(vec![2, 2])),
        }
    }
}

/// Sparse row builder: `(coefficient, file, segment)` triples, 1-based file
/// and segment numbers as in the listings.
fn row(width: usize, segments: usize, terms: &[(i64, usize, usize)], field: &PrimeField) -> Vec<u64> {
    let mut r = vec![0u64; width];
    for &(c, file, seg) in terms {
        let ix = (file - 1) * segments + (seg - 1);
        r[ix] = field.add(r[ix], field.reduce(c));
    }
    r
}

/// Demands of the `(2,4)` system admitted by a filter.
fn admitted_demands(filter: &DemandFilter) -> Vec<Vec<u8>> {
    all_demands(2, 4)
        .into_iter()
        .filter(|d| filter.admits(d, 2))
        .collect()
}

/// Extend deliveries listed for representative demands to every admitted
/// demand, using symmetries of the placement: a user permutation and file
/// permutation mapping the demand to a representative, together with a
/// segment permutation under which every user's cache row space is
/// preserved. The transported delivery is provably decodable whenever the
/// representative's is.
fn extend_by_symmetry(code: &mut LinearCode, wanted: &[Vec<u8>]) -> Result<(), CodeError> {
    let n = code.n_files;
    let k = code.n_users;
    let s = code.segments;
    let reps: Vec<Vec<u8>> = code.deliveries.keys().cloned().collect();
    let user_perms = permutations(k);
    let file_perms = permutations(n);
    let seg_perms = permutations(s);
    for d in wanted {
        if code.deliveries.contains_key(d) {
            continue;
        }
        let mut found = None;
        'search: for rep in &reps {
            for up in &user_perms {
                for fp in &file_perms {
                    // Demand match: user k requesting file d_k plays the role
                    // of user up[k] requesting file fp[d_k] == rep[up[k]].
                    if !(0..k).all(|u| rep[up[u]] == fp[d[u] as usize - 1] as u8 + 1) {
                        continue;
                    }
                    for sp in &seg_perms {
                        // Column relabel phi: symbol (n, i) maps to
                        // (fp(n), sp(i)).
                        let mut phi = vec![0usize; n * s];
                        for file in 0..n {
                            for seg in 0..s {
                                phi[file * s + seg] = fp[file] * s + sp[seg];
                            }
                        }
                        // A matrix relabeled by phi reads its column j from
                        // source phi^-1(j).
                        let inv_phi = inverse_permutation(&phi);
                        let ok = (0..k).all(|u| {
                            same_rowspace(
                                &code.placement[u].permute_columns(&inv_phi),
                                &code.placement[up[u]],
                                &code.field,
                            )
                        });
                        if ok {
                            // Pull the representative's rows back through
                            // phi^-1 to serve the original demand.
                            let delivery = code.deliveries[rep].permute_columns(&phi);
                            found = Some(delivery);
                            break 'search;
                        }
                    }
                }
            }
        }
        match found {
            Some(delivery) => {
                code.deliveries.insert(d.clone(), delivery);
            }
            None => return Err(CodeError::NoSymmetricDelivery(demand_name(d))),
        }
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    fn rec(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            rec(items, k + 1, out);
            items.swap(k, i);
        }
    }
    rec(&mut items, 0, &mut out);
    out
}

fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &src) in perm.iter().enumerate() {
        inv[src] = j;
    }
    inv
}

/// Build one of the transcribed `(2,4)` codes, with deliveries for all
/// demands its filter admits.
pub fn paper_code(id: PaperCodeId) -> Result<LinearCode, CodeError> {
    const A: usize = 1;
    const B: usize = 2;
    let (p, s) = match id {
        PaperCodeId::Table2 => (5, 6),
        PaperCodeId::Table16 => (2, 6),
        PaperCodeId::Table17 | PaperCodeId::Table18 => (2, 3),
    };
    let field = PrimeField::new(p)?;
    let w = 2 * s;
    let r = |terms: &[(i64, usize, usize)]| row(w, s, terms, &field);
    let mix = |i: usize| vec![(1, A, i), (1, B, i)]; // A_i + B_i

    // Each user's pair-cached segment indices in Table 2 / Table 16:
    // segment i is shared by the i-th pair of users in lexicographic order.
    let pairs = [[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 5, 6]];

    let placement: Vec<Matrix> = match id {
        PaperCodeId::Table2 => pairs
            .iter()
            .map(|segs| {
                let mut m = Matrix::new(w);
                for &i in segs {
                    m.rows.push(r(&mix(i)));
                }
                let mut sum = Vec::new();
                for &i in segs {
                    sum.push((1, A, i));
                    sum.push((2, B, i));
                }
                m.rows.push(r(&sum)); // A_i+A_j+A_k + 2(B_i+B_j+B_k)
                m
            })
            .collect(),
        PaperCodeId::Table16 => pairs
            .iter()
            .map(|segs| {
                let mut m = Matrix::new(w);
                for &i in segs {
                    m.rows.push(r(&mix(i)));
                }
                m
            })
            .collect(),
        PaperCodeId::Table17 => {
            let mut users: Vec<Matrix> = (1..=3)
                .map(|i| Matrix::from_rows(w, vec![r(&mix(i))]).unwrap())
                .collect();
            users.push(
                Matrix::from_rows(
                    w,
                    vec![r(&[(1, A, 1), (1, A, 2), (1, A, 3), (1, B, 1), (1, B, 2), (1, B, 3)])],
                )
                .unwrap(),
            );
            users
        }
        PaperCodeId::Table18 => {
            let segs = [[1, 2], [2, 3], [1, 3]];
            let mut users: Vec<Matrix> = segs
                .iter()
                .map(|&[i, j]| {
                    Matrix::from_rows(
                        w,
                        vec![
                            r(&[(1, A, i)]),
                            r(&[(1, A, j)]),
                            r(&[(1, B, i)]),
                            r(&[(1, B, j)]),
                        ],
                    )
                    .unwrap()
                })
                .collect();
            users.push(
                Matrix::from_rows(
                    w,
                    vec![
                        r(&[(1, A, 1), (1, A, 2)]),
                        r(&[(1, A, 2), (1, A, 3)]),
                        r(&[(1, B, 1), (1, B, 2)]),
                        r(&[(1, B, 2), (1, B, 3)]),
                    ],
                )
                .unwrap(),
            );
            users
        }
    };

    let mut deliveries = BTreeMap::new();
    match id {
        PaperCodeId::Table2 => {
            // Demand (A,A,A,B): steps B1,B2,B4; A3+2A5+3A6, A3+3A5+4A6;
            // A1+A2+A4.
            deliveries.insert(
                vec![1, 1, 1, 2],
                Matrix::from_rows(
                    w,
                    vec![
                        r(&[(1, B, 1)]),
                        r(&[(1, B, 2)]),
                        r(&[(1, B, 4)]),
                        r(&[(1, A, 3), (2, A, 5), (3, A, 6)]),
                        r(&[(1, A, 3), (3, A, 5), (4, A, 6)]),
                        r(&[(1, A, 1), (1, A, 2), (1, A, 4)]),
                    ],
                )
                .unwrap(),
            );
            // Demand (A,A,B,B): steps B1, A6; A2+2A4, A3+2A5, B2+2B3,
            // B4+2B5.
            deliveries.insert(
                vec![1, 1, 2, 2],
                Matrix::from_rows(
                    w,
                    vec![
                        r(&[(1, B, 1)]),
                        r(&[(1, A, 6)]),
                        r(&[(1, A, 2), (2, A, 4)]),
                        r(&[(1, A, 3), (2, A, 5)]),
                        r(&[(1, B, 2), (2, B, 3)]),
                        r(&[(1, B, 4), (2, B, 5)]),
                    ],
                )
                .unwrap(),
            );
            // Demand (A,A,A,A): send the requested file whole (rate 1).
            deliveries.insert(
                vec![1, 1, 1, 1],
                Matrix::from_rows(w, (1..=6).map(|i| r(&[(1, A, i)])).collect()).unwrap(),
            );
        }
        PaperCodeId::Table16 => {
            // Demand (A,A,A,B): A3,A5,A6, B1,B2,B4, A1+A2+A4.
            deliveries.insert(
                vec![1, 1, 1, 2],
                Matrix::from_rows(
                    w,
                    vec![
                        r(&[(1, A, 3)]),
                        r(&[(1, A, 5)]),
                        r(&[(1, A, 6)]),
                        r(&[(1, B, 1)]),
                        r(&[(1, B, 2)]),
                        r(&[(1, B, 4)]),
                        r(&[(1, A, 1), (1, A, 2), (1, A, 4)]),
                    ],
                )
                .unwrap(),
            );
        }
        PaperCodeId::Table17 => {
            // Demand (A,A,B,B): B1, B2, A3, A1+A2+A3.
            deliveries.insert(
                vec![1, 1, 2, 2],
                Matrix::from_rows(
                    w,
                    vec![
                        r(&[(1, B, 1)]),
                        r(&[(1, B, 2)]),
                        r(&[(1, A, 3)]),
                        r(&[(1, A, 1), (1, A, 2), (1, A, 3)]),
                    ],
                )
                .unwrap(),
            );
        }
        PaperCodeId::Table18 => {
            // Demand (A,A,B,B): A1 - A3 + B2 (minus is plus over F_2).
            deliveries.insert(
                vec![1, 1, 2, 2],
                Matrix::from_rows(w, vec![r(&[(1, A, 1), (-1, A, 3), (1, B, 2)])]).unwrap(),
            );
        }
    }

    let mut code = LinearCode {
        field,
        n_files: 2,
        n_users: 4,
        segments: s,
        placement,
        deliveries,
    };
    let wanted = admitted_demands(&id.demand_filter());
    extend_by_symmetry(&mut code, &wanted)?;
    Ok(code)
}

// ---------------------------------------------------------------------------
// JSON import/export
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CodeJson {
    p: u64,
    files: usize,
    users: usize,
    segments: usize,
    placement: Vec<Vec<Vec<u64>>>,
    deliveries: BTreeMap<String, Vec<Vec<u64>>>,
}

pub fn code_to_json(code: &LinearCode) -> String {
    let raw = CodeJson {
        p: code.field.modulus(),
        files: code.n_files,
        users: code.n_users,
        segments: code.segments,
        placement: code.placement.iter().map(|m| m.rows.clone()).collect(),
        deliveries: code
            .deliveries
            .iter()
            .map(|(d, m)| (demand_name(d), m.rows.clone()))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("serialization cannot fail");
    s.push('\n');
    s
}

pub fn code_from_json(text: &str) -> Result<LinearCode, CodeError> {
    let raw: CodeJson = serde_json::from_str(text).map_err(|e| CodeError::Json(e.to_string()))?;
    let field = PrimeField::new(raw.p)?;
    let width = raw.files * raw.segments;
    if raw.placement.len() != raw.users {
        return Err(CodeError::Json(format!(
            "expected {} placement matrices, found {}",
            raw.users,
            raw.placement.len()
        )));
    }
    let placement: Result<Vec<Matrix>, CodeError> = raw
        .placement
        .into_iter()
        .map(|rows| Matrix::from_rows(width, rows))
        .collect();
    let mut deliveries = BTreeMap::new();
    for (name, rows) in raw.deliveries {
        let d: Option<Vec<u8>> = name
            .chars()
            .map(|c| c.to_digit(10).map(|v| v as u8).filter(|&v| v >= 1))
            .collect();
        let d = d
            .filter(|d| d.len() == raw.users && d.iter().all(|&v| (v as usize) <= raw.files))
            .ok_or_else(|| CodeError::Json(format!("bad demand key `{name}`")))?;
        deliveries.insert(d, Matrix::from_rows(width, rows)?);
    }
    Ok(LinearCode {
        field,
        n_files: raw.files,
        n_users: raw.users,
        segments: raw.segments,
        placement: placement?,
        deliveries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratsolve::rat;

    /// Brute-force decodability oracle: enumerate all message vectors and
    /// check that `(cache, delivery)` values determine the requested file.
    fn oracle_decodable(code: &LinearCode, d: &[u8], user: usize) -> bool {
        let p = code.field.modulus();
        let cols = code.n_cols();
        let total = (p as u128).pow(cols as u32);
        assert!(total <= 1 << 20, "oracle search space too large");
        let eval = |m: &Matrix, msg: &[u64]| -> Vec<u64> {
            m.rows
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(msg)
                        .fold(0u64, |acc, (&c, &v)| code.field.add(acc, code.field.mul(c, v)))
                })
                .collect()
        };
        let mut seen: std::collections::HashMap<(Vec<u64>, Vec<u64>), Vec<u64>> =
            std::collections::HashMap::new();
        let mut msg = vec![0u64; cols];
        loop {
            let key = (
                eval(&code.placement[user], &msg),
                eval(&code.deliveries[d], &msg),
            );
            let file = eval(&code.file_matrix(d[user] as usize), &msg);
            match seen.get(&key) {
                Some(prev) if *prev != file => return false,
                Some(_) => {}
                None => {
                    seen.insert(key, file);
                }
            }
            let mut pos = cols;
            loop {
                if pos == 0 {
                    return true;
                }
                pos -= 1;
                if msg[pos] + 1 < p {
                    msg[pos] += 1;
                    for v in msg.iter_mut().skip(pos + 1) {
                        *v = 0;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn rank_examples() {
        let f2 = PrimeField::new(2).unwrap();
        let m = Matrix::from_rows(3, vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]]).unwrap();
        assert_eq!(m.rank(&f2), 2);
        let f5 = PrimeField::new(5).unwrap();
        assert_eq!(m.rank(&f5), 3);
        assert!(PrimeField::new(6).is_err());
        assert_eq!(f5.inv(3), 2);
    }

    #[test]
    fn man_scheme_points() {
        let c = man_scheme(2, 4, 2).unwrap();
        assert_eq!(c.code_point(), TradeoffPoint { m: rat(1, 1), r: rat(2, 3) });
        let c = man_scheme(3, 2, 1).unwrap();
        assert_eq!(c.code_point(), TradeoffPoint { m: rat(3, 2), r: rat(1, 2) });
        let c = man_scheme(3, 3, 3).unwrap();
        assert_eq!(c.code_point(), TradeoffPoint { m: rat(3, 1), r: rat(0, 1) });
        assert!(man_scheme(2, 3, 4).is_err());
    }

    #[test]
    fn man_scheme_decodes_with_oracle_cross_check() {
        let c = man_scheme(2, 2, 1).unwrap();
        let demands = all_demands(2, 2);
        let report = verify_code(&c, &demands).unwrap();
        assert!(report.ok, "{:?}", report.failures);
        for d in &demands {
            for user in 0..2 {
                assert!(oracle_decodable(&c, d, user), "demand {d:?} user {user}");
            }
        }
    }

    #[test]
    fn man_uncoded_point_and_decoding() {
        let c = man_uncoded(2, 4, 2).unwrap();
        // Two files, half cached: M = 1, worst-case rate 2 * (1/2) = 1.
        assert_eq!(c.code_point(), TradeoffPoint { m: rat(1, 1), r: rat(1, 1) });
        let report = verify_code(&c, &all_demands(2, 4)).unwrap();
        assert!(report.ok, "{:?}", report.failures);
    }

    #[test]
    fn paper_codes_verify_and_hit_their_points() {
        for (id, m, r) in [
            (PaperCodeId::Table2, rat(2, 3), rat(1, 1)),
            (PaperCodeId::Table16, rat(1, 2), rat(7, 6)),
            (PaperCodeId::Table17, rat(1, 3), rat(4, 3)),
            (PaperCodeId::Table18, rat(4, 3), rat(1, 3)),
        ] {
            let code = paper_code(id).unwrap();
            assert_eq!(code.code_point(), TradeoffPoint { m, r }, "{id:?}");
            let demands = admitted_demands(&id.demand_filter());
            assert_eq!(code.deliveries.len(), demands.len(), "{id:?}");
            let report = verify_code(&code, &demands).unwrap();
            assert!(report.ok, "{id:?}: {:?}", report.failures);
        }
    }

    #[test]
    fn table17_matches_brute_force() {
        let code = paper_code(PaperCodeId::Table17).unwrap();
        for d in admitted_demands(&PaperCodeId::Table17.demand_filter()) {
            for user in 0..4 {
                assert!(oracle_decodable(&code, &d, user), "demand {d:?} user {user}");
            }
        }
    }

    #[test]
    fn table2_entropy_examples() {
        let code = paper_code(PaperCodeId::Table2).unwrap();
        let inst = ProblemInstance::with_cap(2, 4, DemandFilter::All, None, 24).unwrap();
        let sets = vec![
            inst.parse_set("W1").unwrap(),
            inst.parse_set("Z1").unwrap(),
            inst.parse_set("Z1,Z2").unwrap(),
        ];
        let h = entropy_vector(&code, &inst, &sets).unwrap();
        assert_eq!(h[0], rat(1, 1));
        assert_eq!(h[1], rat(2, 3));
        // Two users' caches share one pair segment: rank 7 of 6 -> 7/6.
        assert_eq!(h[2], rat(7, 6));
    }

    #[test]
    fn json_round_trip() {
        let code = paper_code(PaperCodeId::Table18).unwrap();
        let text = code_to_json(&code);
        let back = code_from_json(&text).unwrap();
        assert_eq!(code_to_json(&back), text);
        let report = verify_code(&back, &admitted_demands(&PaperCodeId::Table18.demand_filter()))
            .unwrap();
        assert!(report.ok);
        assert!(code_from_json("{\"p\":4,\"files\":1,\"users\":1,\"segments\":1,\"placement\":[[]],\"deliveries\":{}}").is_err());
    }
}
