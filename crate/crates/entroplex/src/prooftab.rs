//! Proof tables: matrices of scaled valid inequalities over named entropy
//! terms whose column sums certify a memory-rate bound.
//!
//! A table lists term columns (`F`, `R`, `M`, or joint-entropy sets), rows
//! (each a valid inequality or equality, optionally annotated with its
//! certified form), and a final row equal to the column-wise sum of the rows.
//! Tables can be extracted from sparse dual certificates, verified
//! independently, serialized canonically to JSON, and rendered as a chain of
//! inequalities.
//!
//! # File format
//!
//! ```json
//! {
//!   "terms": ["F", "R", "Z1", "W1,Z1"],
//!   "rows": [ {"coeffs": {"T2": "2", "T3": "-2"}, "annotation": "2*rate(X12)"} ],
//!   "final": {"T1": "-4", "T2": "2"}
//! }
//! ```
//!
//! Term strings are `F`, `R`, `M`, or comma-joined variable names in the
//! model grammar. Column keys `T<i>` are 1-based into `terms`. Rationals are
//! `p/q` or integer strings. Serialization is canonical: sorted keys, fixed
//! field order, so fixtures round-trip byte-for-byte.
//!
//! # Annotation grammar
//!
//! `[scale*]form` where `scale` is a rational (default 1) and `form` is one
//! of `I(a;b|S)`, `I(a;b)`, `H(a|S)`, `H(a)`, `filesize(c)` (the equality
//! `H(W1..Wc) - cF == 0`; scale may be negative), `rate(Xd)`
//! (`R - H(Xd) >= 0`), `memory` (`M - H(Z1) >= 0`), or `decode(S;T)`
//! (`H(S) - H(T) == 0` for sets with equal closure; scale may be negative).

use std::collections::{BTreeMap, HashMap, HashSet};

use num::{BigInt, One, Signed, Zero};
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::lpbuild::{LpContext, Provenance};
use crate::model::{parse_var, ModelError, ProblemInstance, RandomVar, VarSet};
use crate::ratsolve::{
    format_rational, parse_rational, solve_standard, sparse_dual, Rational, Row, SolveError,
    SolverOptions, StandardLp, Status,
};
use crate::symmetry::Canonicalizer;

/// One column heading of a proof table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermDescriptor {
    F,
    R,
    M,
    /// A joint entropy, displayed as authored (not canonicalized).
    Entropy(Vec<RandomVar>),
}

impl TermDescriptor {
    pub fn text(&self) -> String {
        match self {
            TermDescriptor::F => "F".into(),
            TermDescriptor::R => "R".into(),
            TermDescriptor::M => "M".into(),
            TermDescriptor::Entropy(vars) => vars
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// One row: sparse coefficients over the table's columns plus an optional
/// annotation in the grammar above.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofRow {
    pub coeffs: BTreeMap<usize, Rational>,
    pub annotation: Option<String>,
}

/// A proof table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofTable {
    pub terms: Vec<TermDescriptor>,
    pub rows: Vec<ProofRow>,
    pub final_row: BTreeMap<usize, Rational>,
}

/// Errors from parsing, extraction, and rendering.
#[derive(Debug, thiserror::Error)]
pub enum ProofError {
    #[error("malformed proof-table JSON: {0}")]
    Json(String),
    #[error("term {index}: unresolvable name `{name}`")]
    BadTerm { index: usize, name: String },
    #[error("bad column key `{key}` (expected T<i> within the term list)")]
    BadColumnKey { key: String },
    #[error("bad rational `{value}` at key `{key}`")]
    BadRational { key: String, value: String },
    #[error("row {row}: bad annotation `{text}`: {reason}")]
    BadAnnotation { row: usize, text: String, reason: String },
    #[error("claimed bound is not valid: LP optimum is {optimum}")]
    BoundInvalid { optimum: String },
    #[error("no exact nonnegative combination reproduces the bound")]
    CertificationFailed,
    #[error("table does not verify: {0}")]
    NotVerified(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome of [`verify`]: pass/fail plus human-readable failure messages.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Internal verification dimension: a scalar or a canonical entropy orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Dim {
    F,
    M,
    R,
    H(u32),
}

type DimMap = BTreeMap<Dim, Rational>;

fn add_dim(map: &mut DimMap, d: Dim, v: Rational) {
    if v.is_zero() {
        return;
    }
    let slot = map.entry(d).or_insert_with(Rational::zero);
    *slot += v;
    if slot.is_zero() {
        map.remove(&d);
    }
}

fn resolve_terms(table: &ProofTable, canon: &Canonicalizer) -> Result<Vec<Dim>, ProofError> {
    let inst = canon.instance();
    table
        .terms
        .iter()
        .enumerate()
        .map(|(index, t)| match t {
            TermDescriptor::F => Ok(Dim::F),
            TermDescriptor::M => Ok(Dim::M),
            TermDescriptor::R => Ok(Dim::R),
            TermDescriptor::Entropy(vars) => {
                let mut s = VarSet::EMPTY;
                for v in vars {
                    let ix = inst.var_index(v).ok_or_else(|| ProofError::BadTerm {
                        index: index + 1,
                        name: t.text(),
                    })?;
                    s = s.insert(ix);
                }
                if s.is_empty() {
                    return Err(ProofError::BadTerm { index: index + 1, name: t.text() });
                }
                Ok(Dim::H(canon.canon(s).0))
            }
        })
        .collect()
}

fn row_dims(coeffs: &BTreeMap<usize, Rational>, dims: &[Dim]) -> DimMap {
    let mut map = DimMap::new();
    for (&col, v) in coeffs {
        add_dim(&mut map, dims[col], v.clone());
    }
    map
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

fn parse_set_text(
    text: &str,
    inst: &ProblemInstance,
) -> Result<VarSet, String> {
    let mut s = VarSet::EMPTY;
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let rv = parse_var(part.trim(), inst.n_files(), inst.n_users())
            .map_err(|e| e.to_string())?;
        let ix = inst
            .var_index(&rv)
            .ok_or_else(|| format!("{} not in universe", part.trim()))?;
        s = s.insert(ix);
    }
    Ok(s)
}

/// Expand an annotation string into its exact dimension map.
fn expand_annotation(text: &str, canon: &Canonicalizer) -> Result<DimMap, String> {
    let inst = canon.instance();
    let (scale, form) = match text.split_once('*') {
        Some((s, f)) if !f.contains(')') || s.parse::<f64>().is_ok() || parse_rational(s).is_some() => {
            let scale = parse_rational(s).ok_or_else(|| format!("bad scale `{s}`"))?;
            (scale, f.trim())
        }
        _ => (Rational::one(), text.trim()),
    };
    if scale.is_zero() {
        return Err("scale must be nonzero".into());
    }
    let h = |map: &mut DimMap, s: VarSet, sign: Rational| {
        if !s.is_empty() {
            add_dim(map, Dim::H(canon.canon(s).0), sign);
        }
    };
    let mut map = DimMap::new();
    if let Some(rest) = form.strip_prefix("I(").and_then(|r| r.strip_suffix(')')) {
        if scale.is_negative() {
            return Err("mutual-information scale must be positive".into());
        }
        let (pair, given) = match rest.split_once('|') {
            Some((p, g)) => (p, Some(g)),
            None => (rest, None),
        };
        let (a, b) = pair.split_once(';').ok_or("expected I(a;b|S)")?;
        let a = parse_set_text(a, inst)?;
        let b = parse_set_text(b, inst)?;
        let phi = match given {
            Some(g) => parse_set_text(g, inst)?,
            None => VarSet::EMPTY,
        };
        if a.len() != 1 || b.len() != 1 {
            return Err("I arguments must be single variables".into());
        }
        h(&mut map, phi.union(a), scale.clone());
        h(&mut map, phi.union(b), scale.clone());
        h(&mut map, phi, -scale.clone());
        h(&mut map, phi.union(a).union(b), -scale);
    } else if let Some(rest) = form.strip_prefix("H(").and_then(|r| r.strip_suffix(')')) {
        if scale.is_negative() {
            return Err("conditional-entropy scale must be positive".into());
        }
        let (a, given) = match rest.split_once('|') {
            Some((p, g)) => (p, Some(g)),
            None => (rest, None),
        };
        let a = parse_set_text(a, inst)?;
        if a.len() != 1 {
            return Err("H argument must be a single variable".into());
        }
        let phi = match given {
            Some(g) => parse_set_text(g, inst)?,
            None => VarSet::EMPTY,
        };
        h(&mut map, phi.union(a), scale.clone());
        h(&mut map, phi, -scale);
    } else if let Some(rest) = form.strip_prefix("filesize(").and_then(|r| r.strip_suffix(')')) {
        let c: usize = rest.trim().parse().map_err(|_| "bad file count")?;
        if c < 1 || c > inst.n_files() {
            return Err("file count out of range".into());
        }
        let files = VarSet::from_indices(0..c);
        h(&mut map, files, scale.clone());
        add_dim(&mut map, Dim::F, -scale * Rational::from_integer((c as i64).into()));
    } else if let Some(rest) = form.strip_prefix("rate(").and_then(|r| r.strip_suffix(')')) {
        if scale.is_negative() {
            return Err("rate scale must be positive".into());
        }
        let s = parse_set_text(rest, inst)?;
        if s.len() != 1 {
            return Err("rate argument must be one delivery variable".into());
        }
        add_dim(&mut map, Dim::R, scale.clone());
        h(&mut map, s, -scale);
    } else if form == "memory" {
        if scale.is_negative() {
            return Err("memory scale must be positive".into());
        }
        add_dim(&mut map, Dim::M, scale.clone());
        h(&mut map, VarSet::singleton(inst.cache_index(1)), -scale);
    } else if let Some(rest) = form.strip_prefix("decode(").and_then(|r| r.strip_suffix(')')) {
        let (s, t) = rest.split_once(';').ok_or("expected decode(S;T)")?;
        let s = parse_set_text(s, inst)?;
        let t = parse_set_text(t, inst)?;
        if canon.canon(s) != canon.canon(t) {
            return Err("decode sets have different closures".into());
        }
        h(&mut map, s, scale.clone());
        h(&mut map, t, -scale);
    } else {
        return Err(format!("unknown annotation form `{form}`"));
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Row certification
// ---------------------------------------------------------------------------

/// Normalized integer key of a dimension map with direction preserved.
fn norm_key(map: &DimMap) -> Vec<(Dim, BigInt)> {
    let mut lcm = BigInt::one();
    for v in map.values() {
        lcm = lcm.lcm(v.denom());
    }
    let ints: Vec<(Dim, BigInt)> = map
        .iter()
        .map(|(d, v)| (*d, (v * Rational::from_integer(lcm.clone())).to_integer()))
        .collect();
    let mut g = BigInt::zero();
    for (_, v) in &ints {
        g = g.gcd(v);
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    ints.into_iter().map(|(d, v)| (d, v / &g)).collect()
}

/// The decode-closure of the row's mentioned variables: rule (a) only
/// (cache + delivery determine a file); rule (b) is intentionally omitted so
/// the sub-universe stays small.  Caches able to decode a mentioned file from
/// a mentioned delivery are pulled in too, so that rows relying on an
/// orbit-equivalent cache (the one whose user demands the mentioned file)
/// stay certifiable.
fn mention_closure(inst: &ProblemInstance, mentioned: VarSet) -> VarSet {
    let mut cur = mentioned;
    loop {
        let mut next = cur;
        let base = inst.n_files() + inst.n_users();
        for k in 0..inst.n_users() {
            let zk = inst.n_files() + k;
            for x in inst.delivery_indices() {
                if !cur.contains(x) {
                    continue;
                }
                let file = inst.decoded_file(k, x - base);
                if cur.contains(zk) {
                    next = next.insert(file);
                } else if cur.contains(file) {
                    next = next.insert(zk);
                }
            }
        }
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Candidate generating rows over a sub-universe, as (dim map, equality?).
fn candidates(
    canon: &Canonicalizer,
    sub: VarSet,
    mentions_m: bool,
    mentions_r: bool,
    mentions_f: bool,
) -> Vec<(DimMap, bool)> {
    let inst = canon.instance();
    let mut out: Vec<(DimMap, bool)> = Vec::new();
    let members: Vec<usize> = sub.iter().collect();
    let u = members.len();
    let h = |map: &mut DimMap, s: VarSet, sign: i64| {
        if !s.is_empty() {
            add_dim(map, Dim::H(canon.canon(s).0), Rational::from_integer(sign.into()));
        }
    };
    if u <= 14 {
        // Conditional mutual informations I(i;j|phi), phi within the
        // sub-universe.
        for ai in 0..u {
            for bi in (ai + 1)..u {
                let (i, j) = (members[ai], members[bi]);
                let rest: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&v| v != i && v != j)
                    .collect();
                for mask in 0u32..(1 << rest.len()) {
                    let mut phi = VarSet::EMPTY;
                    for (bit, &v) in rest.iter().enumerate() {
                        if mask & (1 << bit) != 0 {
                            phi = phi.insert(v);
                        }
                    }
                    let mut map = DimMap::new();
                    h(&mut map, phi.insert(i), 1);
                    h(&mut map, phi.insert(j), 1);
                    h(&mut map, phi, -1);
                    h(&mut map, phi.insert(i).insert(j), -1);
                    if !map.is_empty() {
                        out.push((map, false));
                    }
                }
            }
        }
        // Conditional entropies H(i|S), S within the sub-universe.
        for ai in 0..u {
            let i = members[ai];
            let rest: Vec<usize> = members.iter().copied().filter(|&v| v != i).collect();
            for mask in 0u32..(1 << rest.len()) {
                let mut phi = VarSet::EMPTY;
                for (bit, &v) in rest.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        phi = phi.insert(v);
                    }
                }
                let mut map = DimMap::new();
                h(&mut map, phi.insert(i), 1);
                h(&mut map, phi, -1);
                if !map.is_empty() {
                    out.push((map, false));
                }
            }
        }
    }
    if mentions_f {
        for c in 1..=inst.n_files() {
            let mut map = DimMap::new();
            h(&mut map, VarSet::from_indices(0..c), 1);
            add_dim(&mut map, Dim::F, Rational::from_integer(BigInt::from(-(c as i64))));
            out.push((map, true));
        }
    }
    if mentions_r {
        let mut seen = HashSet::new();
        for x in inst.delivery_indices() {
            if !sub.contains(x) {
                continue;
            }
            let rep = canon.canon(VarSet::singleton(x)).0;
            if !seen.insert(rep) {
                continue;
            }
            let mut map = DimMap::new();
            add_dim(&mut map, Dim::R, Rational::one());
            h(&mut map, VarSet::singleton(x), -1);
            out.push((map, false));
        }
    }
    if mentions_m {
        let mut map = DimMap::new();
        add_dim(&mut map, Dim::M, Rational::one());
        h(&mut map, VarSet::singleton(inst.cache_index(1)), -1);
        out.push((map, false));
    }
    out
}

/// Certify that a row is a valid inequality: either a positive multiple of a
/// single generated constraint, or (fallback) a nonnegative combination of
/// the candidates, decided by an exact feasibility LP.
fn certify_row(
    rowmap: &DimMap,
    mentioned: VarSet,
    canon: &Canonicalizer,
    opts: &SolverOptions,
) -> bool {
    if rowmap.is_empty() {
        return true; // a pure decoding identity collapses to zero
    }
    let sub = mention_closure(canon.instance(), mentioned);
    let mentions_m = rowmap.contains_key(&Dim::M);
    let mentions_r = rowmap.contains_key(&Dim::R);
    let mentions_f = rowmap.contains_key(&Dim::F);
    let cands = candidates(canon, sub, mentions_m, mentions_r, mentions_f);

    // Fast path: exact match against one candidate (either orientation for
    // equalities).
    let mut keys: HashSet<Vec<(Dim, BigInt)>> = HashSet::new();
    for (map, eq) in &cands {
        keys.insert(norm_key(map));
        if *eq {
            let neg: DimMap = map.iter().map(|(d, v)| (*d, -v.clone())).collect();
            keys.insert(norm_key(&neg));
        }
    }
    if keys.contains(&norm_key(rowmap)) {
        return true;
    }

    // Fallback: cone membership. Equations over every dimension touched.
    let mut dim_ix: BTreeMap<Dim, usize> = BTreeMap::new();
    let intern = |d: Dim, dim_ix: &mut BTreeMap<Dim, usize>| {
        let next = dim_ix.len();
        *dim_ix.entry(d).or_insert(next)
    };
    for d in rowmap.keys() {
        intern(*d, &mut dim_ix);
    }
    for (map, _) in &cands {
        for d in map.keys() {
            intern(*d, &mut dim_ix);
        }
    }
    let m = dim_ix.len();
    if m > 4000 {
        return false; // refuse pathological blow-ups rather than hang
    }
    let mut cols: Vec<Vec<(usize, Rational)>> = Vec::new();
    for (map, eq) in &cands {
        let col: Vec<(usize, Rational)> =
            map.iter().map(|(d, v)| (dim_ix[d], v.clone())).collect();
        if *eq {
            cols.push(col.iter().map(|(r, v)| (*r, -v.clone())).collect());
        }
        cols.push(col);
    }
    let mut b = vec![Rational::zero(); m];
    for (d, v) in rowmap {
        b[dim_ix[d]] = v.clone();
    }
    let c = vec![Rational::zero(); cols.len()];
    let lp = StandardLp { m, cols, b, c };
    matches!(
        solve_standard(&lp, opts),
        Ok(res) if res.status == Status::Optimal
    )
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Verify a proof table against an instance: the rows must sum to the final
/// row exactly (after canonicalization), and every row must be a certified
/// valid inequality (annotated rows must match their annotation exactly).
pub fn verify(table: &ProofTable, canon: &Canonicalizer) -> Result<VerifyReport, ProofError> {
    let dims = resolve_terms(table, canon)?;
    let inst = canon.instance();
    let mut failures = Vec::new();

    // Column-sum check.
    let mut residual = DimMap::new();
    for row in &table.rows {
        for (&col, v) in &row.coeffs {
            add_dim(&mut residual, dims[col], v.clone());
        }
    }
    for (&col, v) in &table.final_row {
        add_dim(&mut residual, dims[col], -v.clone());
    }
    if !residual.is_empty() {
        let bad_dim = *residual.keys().next().unwrap();
        let col = dims.iter().position(|d| *d == bad_dim).unwrap_or(0);
        failures.push(format!(
            "sum mismatch at column T{} ({})",
            col + 1,
            table.terms[col].text()
        ));
        // The table is already invalid; skip the per-row certification work.
        return Ok(VerifyReport { ok: false, failures });
    }

    // Row checks.
    let opts = SolverOptions::default();
    for (ri, row) in table.rows.iter().enumerate() {
        let map = row_dims(&row.coeffs, &dims);
        match &row.annotation {
            Some(text) => match expand_annotation(text, canon) {
                Ok(expanded) => {
                    if expanded != map {
                        failures.push(format!(
                            "row {} does not match its annotation `{}`",
                            ri + 1,
                            text
                        ));
                    }
                }
                Err(reason) => {
                    return Err(ProofError::BadAnnotation {
                        row: ri + 1,
                        text: text.clone(),
                        reason,
                    })
                }
            },
            None => {
                let mut mentioned = VarSet::EMPTY;
                for (&col, _) in &row.coeffs {
                    if let TermDescriptor::Entropy(vars) = &table.terms[col] {
                        for v in vars {
                            if let Some(ix) = inst.var_index(v) {
                                mentioned = mentioned.insert(ix);
                            }
                        }
                    }
                }
                if !certify_row(&map, mentioned, canon, &opts) {
                    failures.push(format!("row {} not certified as a valid inequality", ri + 1));
                }
            }
        }
    }

    Ok(VerifyReport { ok: failures.is_empty(), failures })
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// Extract a proof table certifying `a*M + b*R >= rhs` from a sparse dual
/// certificate of the instance's LP. The memory multiplier is folded into
/// the final row, which is emitted over `F`, `R`, and `H(Z1)` with integer
/// entries.
pub fn extract(
    ctx: &LpContext,
    a: &Rational,
    b: &Rational,
    rhs: &Rational,
    opts: &SolverOptions,
) -> Result<ProofTable, ProofError> {
    let inst = ctx.instance();
    // The bound must be valid before certification is attempted.
    let mut objective = Vec::new();
    if !a.is_zero() {
        objective.push((ctx.m_id(), a.clone()));
    }
    if !b.is_zero() {
        objective.push((ctx.r_id(), b.clone()));
    }
    if !objective.is_empty() {
        let res = ctx.solve(&objective, &[], opts)?;
        if res.status != Status::Optimal || res.objective < *rhs {
            return Err(ProofError::BoundInvalid {
                optimum: if res.status == Status::Optimal {
                    format_rational(&res.objective)
                } else {
                    format!("{:?}", res.status)
                },
            });
        }
    } else if rhs.is_positive() {
        return Err(ProofError::BoundInvalid { optimum: "0".into() });
    }

    let rows: Vec<Row> = ctx
        .constraints
        .iter()
        .map(|c| Row { coeffs: c.coeffs.clone(), sense: c.sense, rhs: c.rhs.clone() })
        .collect();
    let mults = sparse_dual(&rows, ctx.n_vars(), &objective, rhs, opts)?
        .ok_or(ProofError::CertificationFailed)?;

    // Integer scaling factor for all rows and the final row.
    let mut lcm = a.denom().lcm(b.denom()).lcm(rhs.denom());
    for v in &mults {
        lcm = lcm.lcm(v.denom());
    }
    let scale = Rational::from_integer(lcm);

    // Materialize the rows (the memory row folds into the final row).
    let z1_rep = ctx
        .canonicalizer()
        .canon(VarSet::singleton(inst.cache_index(1)));
    let mut used_dims: HashSet<Dim> = HashSet::new();
    let mut raw_rows: Vec<(DimMap, Option<String>)> = Vec::new();
    for (cons, mult) in ctx.constraints.iter().zip(&mults) {
        if mult.is_zero() || matches!(cons.provenance, Provenance::Memory) {
            continue;
        }
        let im = mult * &scale;
        let mut map = DimMap::new();
        for (var, coeff) in &cons.coeffs {
            let dim = if *var == ctx.m_id() {
                Dim::M
            } else if *var == ctx.r_id() {
                Dim::R
            } else {
                Dim::H(ctx.terms.reps[*var].0)
            };
            add_dim(&mut map, dim, coeff * &im);
        }
        if !cons.rhs.is_zero() {
            add_dim(&mut map, Dim::F, -(&cons.rhs * &im));
        }
        let im_txt = format_rational(&im);
        let name = |i: usize| inst.var_at(i).name();
        let set_names = |s: VarSet| inst.set_name(s);
        let annotation = match &cons.provenance {
            Provenance::Elemental { i, j: Some(j), phi } => Some(if phi.is_empty() {
                format!("{im_txt}*I({};{})", name(*i), name(*j))
            } else {
                format!("{im_txt}*I({};{}|{})", name(*i), name(*j), set_names(*phi))
            }),
            Provenance::Elemental { i, j: None, .. } => {
                let rest = inst.full_set().remove(*i);
                Some(format!("{im_txt}*H({}|{})", name(*i), set_names(rest)))
            }
            Provenance::FileSize { size } => Some(format!("{im_txt}*filesize({size})")),
            Provenance::Rate { demand } => Some(format!(
                "{im_txt}*rate(X{})",
                demand.iter().map(|d| d.to_string()).collect::<String>()
            )),
            Provenance::Memory | Provenance::Custom(_) => None,
        };
        for d in map.keys() {
            used_dims.insert(*d);
        }
        if !map.is_empty() {
            raw_rows.push((map, annotation));
        }
    }
    let mut final_map = DimMap::new();
    add_dim(&mut final_map, Dim::F, -(rhs * &scale));
    add_dim(&mut final_map, Dim::R, b * &scale);
    add_dim(&mut final_map, Dim::H(z1_rep.0), a * &scale);
    for d in final_map.keys() {
        used_dims.insert(*d);
    }

    // Column layout: F, M, R, then entropy terms in VarSet order.
    let mut hs: Vec<u32> = used_dims
        .iter()
        .filter_map(|d| match d {
            Dim::H(s) => Some(*s),
            _ => None,
        })
        .collect();
    hs.sort_by_key(|&s| VarSet(s));
    let mut terms = Vec::new();
    let mut col_of: HashMap<Dim, usize> = HashMap::new();
    for (dim, desc) in [
        (Dim::F, TermDescriptor::F),
        (Dim::M, TermDescriptor::M),
        (Dim::R, TermDescriptor::R),
    ] {
        if used_dims.contains(&dim) {
            col_of.insert(dim, terms.len());
            terms.push(desc);
        }
    }
    for s in hs {
        col_of.insert(Dim::H(s), terms.len());
        terms.push(TermDescriptor::Entropy(
            VarSet(s).iter().map(|i| inst.var_at(i).clone()).collect(),
        ));
    }
    let to_row = |map: &DimMap| -> BTreeMap<usize, Rational> {
        map.iter().map(|(d, v)| (col_of[d], v.clone())).collect()
    };
    Ok(ProofTable {
        terms,
        rows: raw_rows
            .iter()
            .map(|(map, ann)| ProofRow { coeffs: to_row(map), annotation: ann.clone() })
            .collect(),
        final_row: to_row(&final_map),
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RowJson {
    coeffs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annotation: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    terms: Vec<String>,
    rows: Vec<RowJson>,
    #[serde(rename = "final")]
    final_row: BTreeMap<String, String>,
}

fn parse_term(text: &str, index: usize, n: usize, k: usize) -> Result<TermDescriptor, ProofError> {
    match text {
        "F" => Ok(TermDescriptor::F),
        "R" => Ok(TermDescriptor::R),
        "M" => Ok(TermDescriptor::M),
        other => {
            let vars: Result<Vec<RandomVar>, _> = other
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| parse_var(p.trim(), n, k))
                .collect();
            match vars {
                Ok(vars) if !vars.is_empty() => Ok(TermDescriptor::Entropy(vars)),
                _ => Err(ProofError::BadTerm { index: index + 1, name: other.into() }),
            }
        }
    }
}

fn parse_coeffs(
    map: &BTreeMap<String, String>,
    n_terms: usize,
) -> Result<BTreeMap<usize, Rational>, ProofError> {
    let mut out = BTreeMap::new();
    for (key, value) in map {
        let col: usize = key
            .strip_prefix('T')
            .and_then(|s| s.parse().ok())
            .filter(|&i| i >= 1 && i <= n_terms)
            .ok_or_else(|| ProofError::BadColumnKey { key: key.clone() })?;
        let v = parse_rational(value).ok_or_else(|| ProofError::BadRational {
            key: key.clone(),
            value: value.clone(),
        })?;
        if !v.is_zero() {
            out.insert(col - 1, v);
        }
    }
    Ok(out)
}

/// Parse a proof table from its JSON text.
pub fn parse_table(text: &str, n_files: usize, n_users: usize) -> Result<ProofTable, ProofError> {
    let raw: TableJson =
        serde_json::from_str(text).map_err(|e| ProofError::Json(e.to_string()))?;
    let terms: Result<Vec<TermDescriptor>, ProofError> = raw
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| parse_term(t, i, n_files, n_users))
        .collect();
    let terms = terms?;
    let rows: Result<Vec<ProofRow>, ProofError> = raw
        .rows
        .iter()
        .map(|r| {
            Ok(ProofRow {
                coeffs: parse_coeffs(&r.coeffs, terms.len())?,
                annotation: r.annotation.clone(),
            })
        })
        .collect();
    let final_row = parse_coeffs(&raw.final_row, terms.len())?;
    Ok(ProofTable { terms, rows: rows?, final_row })
}

/// Canonical serialization: fixed field order, sorted keys, `p/q` rationals,
/// trailing newline. Fixtures are stored in exactly this form.
pub fn serialize_table(table: &ProofTable) -> String {
    let coeffs_json = |coeffs: &BTreeMap<usize, Rational>| -> BTreeMap<String, String> {
        coeffs
            .iter()
            .map(|(col, v)| (format!("T{}", col + 1), format_rational(v)))
            .collect()
    };
    let raw = TableJson {
        terms: table.terms.iter().map(|t| t.text()).collect(),
        rows: table
            .rows
            .iter()
            .map(|r| RowJson { coeffs: coeffs_json(&r.coeffs), annotation: r.annotation.clone() })
            .collect(),
        final_row: coeffs_json(&table.final_row),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("serialization cannot fail");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn render_dims(map: &DimMap, canon: &Canonicalizer) -> String {
    // Order: M, R, entropy terms in VarSet order, F last.
    let mut entries: Vec<(Dim, &Rational)> = map.iter().map(|(d, v)| (*d, v)).collect();
    let rank = |d: &Dim| -> (u8, u64) {
        match d {
            Dim::M => (0, 0),
            Dim::R => (1, 0),
            Dim::H(s) => (2, ((VarSet(*s).len() as u64) << 32) | *s as u64),
            Dim::F => (3, 0),
        }
    };
    entries.sort_by_key(|(d, _)| rank(d));
    let mut out = String::new();
    for (d, v) in entries {
        let name = match d {
            Dim::F => "F".to_string(),
            Dim::M => "M".to_string(),
            Dim::R => "R".to_string(),
            Dim::H(s) => format!("H({})", canon.instance().set_name(VarSet(s))),
        };
        let mag = v.abs();
        let coeff = if mag.is_one() { String::new() } else { format_rational(&mag) };
        if v.is_negative() {
            out.push_str(&format!("-{coeff}{name}"));
        } else {
            if !out.is_empty() {
                out.push('+');
            }
            out.push_str(&format!("{coeff}{name}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Render the table as a plain-text chain of inequalities, applying the rows
/// in listed order. The table must verify.
pub fn render_text(table: &ProofTable, canon: &Canonicalizer) -> Result<String, ProofError> {
    let report = verify(table, canon)?;
    if !report.ok {
        return Err(ProofError::NotVerified(report.failures.join("; ")));
    }
    if table.rows.is_empty() && table.final_row.is_empty() {
        return Ok(String::new());
    }
    let dims = resolve_terms(table, canon)?;
    let mut e = row_dims(&table.final_row, &dims);
    e.remove(&Dim::F);

    // Display form of the start: substitute M for H(Z1) (justified by the
    // memory constraint M >= H(Z1)) when M is not already a column.
    let z1 = Dim::H(
        canon
            .canon(VarSet::singleton(canon.instance().cache_index(1)))
            .0,
    );
    let mut start = e.clone();
    if !start.contains_key(&Dim::M) {
        if let Some(v) = start.remove(&z1) {
            add_dim(&mut start, Dim::M, v);
        }
    }
    let mut out = String::new();
    out.push_str(&render_dims(&start, canon));
    out.push('\n');
    for row in &table.rows {
        let map = row_dims(&row.coeffs, &dims);
        for (d, v) in &map {
            add_dim(&mut e, *d, -v.clone());
        }
        out.push_str("  >= ");
        out.push_str(&render_dims(&e, canon));
        if let Some(ann) = &row.annotation {
            out.push_str(&format!("    [{ann}]"));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DemandFilter, ProblemInstance};
    use crate::ratsolve::{rat, rat_int};

    fn ctx32() -> LpContext {
        let inst = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
        LpContext::new(&inst).unwrap()
    }

    #[test]
    fn annotation_expansion_matches_manual() {
        let inst = ProblemInstance::new(3, 2, DemandFilter::All, None).unwrap();
        let canon = Canonicalizer::new(&inst).unwrap();
        let map = expand_annotation("I(Z1;Z2|W1)", &canon).unwrap();
        let mut want = DimMap::new();
        let h = |s: &str| Dim::H(canon.canon(inst.parse_set(s).unwrap()).0);
        add_dim(&mut want, h("W1,Z1"), rat_int(2)); // Z1 and Z2 sides share an orbit
        add_dim(&mut want, h("W1"), rat_int(-1));
        add_dim(&mut want, h("W1,Z1,Z2"), rat_int(-1));
        assert_eq!(map, want);

        let map = expand_annotation("2*rate(X12)", &canon).unwrap();
        assert_eq!(map.get(&Dim::R), Some(&rat_int(2)));
        assert!(expand_annotation("-1*I(Z1;Z2)", &canon).is_err());
        assert!(expand_annotation("0*memory", &canon).is_err());
        let map = expand_annotation("-2*filesize(1)", &canon).unwrap();
        assert_eq!(map.get(&Dim::F), Some(&rat_int(2)));
    }

    #[test]
    fn extract_verifies_and_round_trips() {
        let ctx = ctx32();
        let opts = SolverOptions::default();
        let table = extract(&ctx, &rat_int(1), &rat_int(1), &rat_int(2), &opts).unwrap();
        let report = verify(&table, ctx.canonicalizer()).unwrap();
        assert!(report.ok, "failures: {:?}", report.failures);

        let text = serialize_table(&table);
        let parsed = parse_table(&text, 3, 2).unwrap();
        assert_eq!(serialize_table(&parsed), text);
        // Canonical serialization is idempotent byte-for-byte.
        assert_eq!(parsed, table);
    }

    #[test]
    fn corrupted_table_fails() {
        let ctx = ctx32();
        let opts = SolverOptions::default();
        let mut table = extract(&ctx, &rat_int(1), &rat_int(3), &rat_int(3), &opts).unwrap();
        let (&col, v) = table.rows[0].coeffs.iter().next().unwrap();
        let bumped = v + rat_int(1);
        table.rows[0].coeffs.insert(col, bumped);
        let report = verify(&table, ctx.canonicalizer()).unwrap();
        assert!(!report.ok);
    }

    #[test]
    fn invalid_bound_rejected() {
        let ctx = ctx32();
        let opts = SolverOptions::default();
        // (3,2) satisfies M+R >= 2 but not M+R >= 3.
        match extract(&ctx, &rat_int(1), &rat_int(1), &rat_int(3), &opts) {
            Err(ProofError::BoundInvalid { optimum }) => assert_eq!(optimum, "2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn render_chain_shape() {
        let ctx = ctx32();
        let opts = SolverOptions::default();
        let table = extract(&ctx, &rat_int(1), &rat_int(1), &rat_int(2), &opts).unwrap();
        let text = render_text(&table, ctx.canonicalizer()).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.contains('M') && first.contains('R'), "start was `{first}`");
        let last = text.lines().last().unwrap();
        assert!(last.trim_start_matches("  >= ").split_whitespace().next().unwrap().ends_with('F'),
            "chain must end at a multiple of F, got `{last}`");
    }

    #[test]
    fn zero_bound_gives_empty_table() {
        let ctx = ctx32();
        let opts = SolverOptions::default();
        let table = extract(&ctx, &rat_int(0), &rat_int(0), &rat_int(0), &opts).unwrap();
        assert!(table.rows.is_empty());
        assert!(verify(&table, ctx.canonicalizer()).unwrap().ok);
    }

    #[test]
    fn unknown_term_name_is_an_error() {
        let text = r#"{"terms":["F","Q9"],"rows":[],"final":{}}"#;
        match parse_table(text, 3, 2) {
            Err(ProofError::BadTerm { index, name }) => {
                assert_eq!(index, 2);
                assert_eq!(name, "Q9");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hand_written_annotated_row_verifies() {
        let ctx = ctx32();
        let canon = ctx.canonicalizer();
        // Table: single row I(Z1;Z2|W1) >= 0 summing to itself.
        let table = ProofTable {
            terms: vec![
                TermDescriptor::Entropy(vec![RandomVar::File(1)]),
                TermDescriptor::Entropy(vec![RandomVar::File(1), RandomVar::Cache(1)]),
                TermDescriptor::Entropy(vec![RandomVar::File(1), RandomVar::Cache(2)]),
                TermDescriptor::Entropy(vec![
                    RandomVar::File(1),
                    RandomVar::Cache(1),
                    RandomVar::Cache(2),
                ]),
            ],
            rows: vec![ProofRow {
                coeffs: [(0, rat_int(-1)), (1, rat_int(1)), (2, rat_int(1)), (3, rat_int(-1))]
                    .into_iter()
                    .collect(),
                annotation: Some("I(Z1;Z2|W1)".into()),
            }],
            final_row: [(0, rat_int(-1)), (1, rat_int(1)), (2, rat_int(1)), (3, rat_int(-1))]
                .into_iter()
                .collect(),
        };
        let report = verify(&table, canon).unwrap();
        assert!(report.ok, "failures: {:?}", report.failures);

        // The same row without its annotation must certify via the fast path.
        let mut table2 = table.clone();
        table2.rows[0].annotation = None;
        let report = verify(&table2, canon).unwrap();
        assert!(report.ok, "failures: {:?}", report.failures);
    }

    #[test]
    fn fraction_rationals_accepted() {
        assert_eq!(parse_rational("\u{2212}3/2"), Some(rat(-3, 2)));
    }
}
