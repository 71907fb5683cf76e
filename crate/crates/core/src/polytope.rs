//! The polytope of causal correlations: membership testing, witnesses,
//! game bounds, and a seesaw heuristic for quantum strategies.
//!
//! A correlation is causal when it decomposes as a mixture over which
//! party acts first, that party's marginal being independent of the other
//! settings, with the conditional correlation of the remaining parties
//! again causal (the order of later parties may depend on earlier settings
//! and outcomes). For up to three parties this set is a polytope cut out
//! by linear constraints on subnormalized branch tables, one branch per
//! ordering; membership and optimization reduce to linear programs solved
//! here by a dense two-phase simplex with Bland's rule, available both in
//! `f64` and in exact rational arithmetic.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::choi::Instrument;
use crate::correlations::{signaling_violation, ProbabilityTable, Scenario};
use crate::procmat::ProcessMatrix;
use crate::qlinalg::{eig_hermitian, kron, ComplexMatrix};
use crate::{Error, Result, Tolerances};

/// Scalar field for the simplex solver. `f64` uses a small pivot
/// tolerance; rationals are exact with a zero tolerance.
pub trait LpScalar:
    Clone
    + PartialOrd
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::fmt::Debug
{
    fn eps() -> Self;
    /// Exact embedding of a (finite) float.
    fn from_f64_exact(x: f64) -> Self;
    fn to_f64_lossy(&self) -> f64;
    fn abs_val(&self) -> Self;
}

impl LpScalar for f64 {
    fn eps() -> Self {
        1e-9
    }
    fn from_f64_exact(x: f64) -> Self {
        x
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl LpScalar for BigRational {
    fn eps() -> Self {
        BigRational::zero()
    }
    fn from_f64_exact(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
}

/// Minimize `c x` subject to `A x = b`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LpProblem<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome<S> {
    Optimal {
        x: Vec<S>,
        objective: S,
    },
    /// Phase one terminated with positive artificial mass `gap`; `farkas`
    /// is a vector `y` with `y A <= 0` and `y b = gap > 0` certifying
    /// infeasibility of the original system.
    Infeasible {
        farkas: Vec<S>,
        gap: S,
    },
    Unbounded,
}

const MAX_PIVOTS: usize = 200_000;

struct Tableau<S> {
    rows: Vec<Vec<S>>, // each row: coefficients then rhs
    basis: Vec<usize>,
    width: usize, // columns excluding rhs
}

impl<S: LpScalar> Tableau<S> {
    fn rhs(&self, i: usize) -> &S {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v = v.clone() - factor.clone() * pv.clone();
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering column is the smallest index with a
    /// negative reduced cost among `0..n_enter`; the leaving row minimizes
    /// the ratio, ties broken by the smallest basis variable.
    fn run(&mut self, reduced: &mut Vec<S>, objective: &mut S, n_enter: usize) -> Result<bool> {
        let eps = S::eps();
        for _ in 0..MAX_PIVOTS {
            let mut entering = None;
            for (j, r) in reduced.iter().take(n_enter).enumerate() {
                if r.clone() < -eps.clone() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(true) };
            let mut leave: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let t = self.rows[i][col].clone();
                if t > eps.clone() {
                    let ratio = self.rhs(i).clone() / t;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (!(ratio > *lr) && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else { return Ok(false) };
            // update the reduced-cost row alongside the tableau
            let factor = reduced[col].clone();
            self.pivot(row, col);
            for (j, r) in reduced.iter_mut().enumerate() {
                *r = r.clone() - factor.clone() * self.rows[row][j].clone();
            }
            *objective = objective.clone() + factor * self.rhs(row).clone();
        }
        Err(Error::Precondition("simplex did not terminate".into()))
    }
}

/// Two-phase dense simplex. Rows with negative right-hand sides are
/// negated first; the Farkas vector refers to the original orientation.
pub fn solve_lp<S: LpScalar>(p: &LpProblem<S>) -> Result<LpOutcome<S>> {
    let m = p.a.len();
    let n = p.c.len();
    if p.b.len() != m || p.a.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("inconsistent LP dimensions".into()));
    }
    let eps = S::eps();
    let width = n + m;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: (n..n + m).collect(),
        width,
    };
    let mut flipped = vec![false; m];
    for i in 0..m {
        let neg = p.b[i] < S::zero();
        flipped[i] = neg;
        let mut row: Vec<S> = Vec::with_capacity(width + 1);
        for j in 0..n {
            let v = p.a[i][j].clone();
            row.push(if neg { -v } else { v });
        }
        for k in 0..m {
            row.push(if k == i { S::one() } else { S::zero() });
        }
        let rb = p.b[i].clone();
        row.push(if neg { -rb } else { rb });
        tab.rows.push(row);
    }

    // phase one: minimize the artificial mass
    let mut reduced: Vec<S> = vec![S::zero(); width];
    let mut objective = S::zero();
    for j in 0..width {
        let mut acc = if j >= n { S::one() } else { S::zero() };
        for row in &tab.rows {
            acc = acc - row[j].clone();
        }
        reduced[j] = acc;
    }
    for row in &tab.rows {
        objective = objective.clone() + row[width].clone();
    }
    if !tab.run(&mut reduced, &mut objective, n)? {
        return Err(Error::Precondition("phase one reported unbounded".into()));
    }
    if objective > eps.clone() {
        // read the dual off the artificial reduced costs, undo row flips
        let mut farkas = Vec::with_capacity(m);
        for i in 0..m {
            let y = S::one() - reduced[n + i].clone();
            farkas.push(if flipped[i] { -y } else { y });
        }
        return Ok(LpOutcome::Infeasible { farkas, gap: objective });
    }

    // drive artificial variables out of the basis, dropping redundant rows
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            let col = (0..n).find(|&j| tab.rows[i][j].abs_val() > eps);
            match col {
                Some(j) => {
                    let factor = reduced[j].clone();
                    tab.pivot(i, j);
                    for (jj, r) in reduced.iter_mut().enumerate() {
                        *r = r.clone() - factor.clone() * tab.rows[i][jj].clone();
                    }
                }
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // phase two on the real columns only
    for row in tab.rows.iter_mut() {
        let rhs = row[width].clone();
        row.truncate(n);
        row.push(rhs);
    }
    tab.width = n;
    let mut reduced: Vec<S> = p.c.clone();
    let mut objective = S::zero();
    for (i, row) in tab.rows.iter().enumerate() {
        let cb = p.c[tab.basis[i]].clone();
        if cb.is_zero() {
            continue;
        }
        for j in 0..n {
            reduced[j] = reduced[j].clone() - cb.clone() * row[j].clone();
        }
        objective = objective.clone() + cb * row[n].clone();
    }
    let bounded = tab.run(&mut reduced, &mut objective, n)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![S::zero(); n];
    for (i, &bi) in tab.basis.iter().enumerate() {
        x[bi] = tab.rows[i][n].clone();
    }
    Ok(LpOutcome::Optimal { x, objective })
}

/// Check a Farkas certificate against the original system.
pub fn verify_farkas<S: LpScalar>(p: &LpProblem<S>, y: &[S], slack: &S) -> bool {
    if y.len() != p.b.len() {
        return false;
    }
    let n = p.c.len();
    for j in 0..n {
        let mut acc = S::zero();
        for (i, row) in p.a.iter().enumerate() {
            acc = acc + y[i].clone() * row[j].clone();
        }
        if acc > slack.clone() {
            return false;
        }
    }
    let mut yb = S::zero();
    for (yi, bi) in y.iter().zip(&p.b) {
        yb = yb + yi.clone() * bi.clone();
    }
    yb > slack.clone()
}

// ---------------------------------------------------------------------------
// causal polytope membership
// ---------------------------------------------------------------------------

fn orderings(n: usize) -> Vec<Vec<usize>> {
    match n {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        3 => {
            let mut out = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    if j != i {
                        let k = 3 - i - j;
                        out.push(vec![i, j, k]);
                    }
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Index of the variable for branch `b`, setting `s`, outcome `o`.
fn var(b: usize, s: usize, o: usize, ns: usize, no: usize) -> usize {
    debug_assert!(s < ns);
    b * ns * no + s * no + o
}

/// Rows expressing the causal-branch structure, shared between membership
/// and optimization. For each party that can act first, the summed first
/// marginal over its branches must not depend on the other settings; for
/// three parties, each branch must additionally hide the last party's
/// setting from the first two.
fn branch_structure_rows<S: LpScalar>(
    scenario: &Scenario,
    branches: &[Vec<usize>],
) -> (Vec<Vec<S>>, Vec<S>) {
    let n = scenario.n_parties();
    let ns = scenario.n_settings();
    let no = scenario.n_outcomes();
    let n_vars = branches.len() * ns * no;
    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut rhs: Vec<S> = Vec::new();

    let set_dims = &scenario.settings;
    let out_dims = &scenario.outcomes;
    let s_flat = |s: &[usize]| -> usize {
        let mut f = 0;
        for (&d, &v) in set_dims.iter().zip(s) {
            f = f * d + v;
        }
        f
    };
    let o_flat = |o: &[usize]| -> usize {
        let mut f = 0;
        for (&d, &v) in out_dims.iter().zip(o) {
            f = f * d + v;
        }
        f
    };

    // first-marginal independence, per first party, summed over its branches
    for first in 0..n {
        let group: Vec<usize> = branches
            .iter()
            .enumerate()
            .filter(|(_, ord)| ord[0] == first)
            .map(|(b, _)| b)
            .collect();
        if group.is_empty() {
            continue;
        }
        let others: Vec<usize> = (0..n).filter(|&p| p != first).collect();
        let other_set_dims: Vec<usize> = others.iter().map(|&p| set_dims[p]).collect();
        let n_other: usize = other_set_dims.iter().product();
        for si in 0..set_dims[first] {
            for oi in 0..out_dims[first] {
                for combo in 1..n_other {
                    let mut row = vec![S::zero(); n_vars];
                    for (sign_combo, sign) in [(combo, 1.0), (0, -1.0)] {
                        let mut s = vec![0usize; n];
                        s[first] = si;
                        let mut rem = sign_combo;
                        for (pos, &p) in others.iter().enumerate().rev() {
                            s[p] = rem % other_set_dims[pos];
                            rem /= other_set_dims[pos];
                        }
                        let sf = s_flat(&s);
                        for of in 0..no {
                            let mut o = vec![0usize; n];
                            let mut r = of;
                            for p in (0..n).rev() {
                                o[p] = r % out_dims[p];
                                r /= out_dims[p];
                            }
                            if o[first] != oi {
                                continue;
                            }
                            for &b in &group {
                                let v = var(b, sf, o_flat(&o), ns, no);
                                row[v] = row[v].clone() + S::from_f64_exact(sign);
                            }
                        }
                    }
                    rows.push(row);
                    rhs.push(S::zero());
                }
            }
        }
    }

    // per-branch: the first two parties' joint marginal hides the third's
    // setting
    if n == 3 {
        for (b, ord) in branches.iter().enumerate() {
            let (i, j, k) = (ord[0], ord[1], ord[2]);
            for si in 0..set_dims[i] {
                for sj in 0..set_dims[j] {
                    for oi in 0..out_dims[i] {
                        for oj in 0..out_dims[j] {
                            for sk in 1..set_dims[k] {
                                let mut row = vec![S::zero(); n_vars];
                                for (skv, sign) in [(sk, 1.0), (0, -1.0)] {
                                    let mut s = vec![0usize; 3];
                                    s[i] = si;
                                    s[j] = sj;
                                    s[k] = skv;
                                    let sf = s_flat(&s);
                                    for ok in 0..out_dims[k] {
                                        let mut o = vec![0usize; 3];
                                        o[i] = oi;
                                        o[j] = oj;
                                        o[k] = ok;
                                        let v = var(b, sf, o_flat(&o), ns, no);
                                        row[v] = row[v].clone() + S::from_f64_exact(sign);
                                    }
                                }
                                rows.push(row);
                                rhs.push(S::zero());
                            }
                        }
                    }
                }
            }
        }
    }
    (rows, rhs)
}

/// A causal decomposition: one subnormalized table per ordering of the
/// parties. Verification re-derives every defining constraint directly
/// from the branch tables, independently of how they were found.
#[derive(Debug, Clone)]
pub struct CausalWitness {
    pub scenario: Scenario,
    /// `(ordering, branch table)`; entries carry the branch weight.
    pub branches: Vec<(Vec<usize>, ProbabilityTable)>,
}

impl CausalWitness {
    /// Largest violation among: branch nonnegativity, recomposition to the
    /// target table, first-marginal independence per first party, and the
    /// per-branch constraint hiding the last party's setting.
    pub fn max_violation(&self, target: &ProbabilityTable) -> Result<f64> {
        let sc = &self.scenario;
        if *sc != target.scenario {
            return Err(Error::Dimension("witness scenario mismatch".into()));
        }
        let n = sc.n_parties();
        let mut worst = 0.0f64;
        for (_, t) in &self.branches {
            for &v in &t.p {
                worst = worst.max(-v);
            }
        }
        let mut sum = ProbabilityTable::zeros(sc.clone());
        for (_, t) in &self.branches {
            for (acc, &v) in sum.p.iter_mut().zip(&t.p) {
                *acc += v;
            }
        }
        worst = worst.max(sum.max_abs_diff(target));
        for first in 0..n {
            let mut group = ProbabilityTable::zeros(sc.clone());
            let mut any = false;
            for (ord, t) in &self.branches {
                if ord[0] == first {
                    any = true;
                    for (acc, &v) in group.p.iter_mut().zip(&t.p) {
                        *acc += v;
                    }
                }
            }
            if !any {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&p| p != first).collect();
            if !others.is_empty() {
                worst = worst.max(signaling_violation(&group, &others, &[first]));
            }
        }
        if n == 3 {
            for (ord, t) in &self.branches {
                let (i, j, k) = (ord[0], ord[1], ord[2]);
                worst = worst.max(signaling_violation(t, &[k], &[i, j]));
            }
        }
        Ok(worst)
    }

    pub fn recomposed(&self) -> ProbabilityTable {
        let mut sum = ProbabilityTable::zeros(self.scenario.clone());
        for (_, t) in &self.branches {
            for (acc, &v) in sum.p.iter_mut().zip(&t.p) {
                *acc += v;
            }
        }
        sum
    }
}

/// Outcome of a causal membership test.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub causal: bool,
    /// Valid on acceptance.
    pub witness: Option<CausalWitness>,
    /// Largest constraint violation of the returned witness.
    pub witness_violation: f64,
    /// Phase-one mass on rejection (distance-like infeasibility measure).
    pub infeasibility_gap: f64,
    /// Whether the rejection carries a verified Farkas certificate.
    pub farkas_checked: bool,
}

fn membership_problem<S: LpScalar>(
    entries: &[S],
    scenario: &Scenario,
    branches: &[Vec<usize>],
) -> LpProblem<S> {
    let ns = scenario.n_settings();
    let no = scenario.n_outcomes();
    let n_vars = branches.len() * ns * no;
    let (mut rows, mut rhs) = branch_structure_rows::<S>(scenario, branches);
    for s in 0..ns {
        for o in 0..no {
            let mut row = vec![S::zero(); n_vars];
            for b in 0..branches.len() {
                row[var(b, s, o, ns, no)] = S::one();
            }
            rows.push(row);
            rhs.push(entries[s * no + o].clone());
        }
    }
    let c = vec![S::zero(); n_vars];
    LpProblem { a: rows, b: rhs, c }
}

fn clamped_entries(table: &ProbabilityTable, tol: &Tolerances) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(table.p.len());
    for &v in &table.p {
        if v < -tol.lp_feasibility {
            return Err(Error::InvalidInput(format!("negative probability {v}")));
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}

/// Decide membership of a table in the causal polytope (up to three
/// parties), returning a verified decomposition on acceptance and a
/// checked infeasibility certificate on rejection.
pub fn causal_membership(table: &ProbabilityTable, tol: &Tolerances) -> Result<MembershipReport> {
    let n = table.scenario.n_parties();
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!(
            "causal membership implemented for 1 to 3 parties, got {n}"
        )));
    }
    let branches = orderings(n);
    let entries = clamped_entries(table, tol)?;
    let problem = membership_problem::<f64>(&entries, &table.scenario, &branches);
    match solve_lp(&problem)? {
        LpOutcome::Optimal { x, .. } => {
            let witness = witness_from_solution(&table.scenario, &branches, &x);
            let violation = witness.max_violation(table)?;
            Ok(MembershipReport {
                causal: violation <= tol.lp_feasibility.max(1e-8),
                witness: Some(witness),
                witness_violation: violation,
                infeasibility_gap: 0.0,
                farkas_checked: false,
            })
        }
        LpOutcome::Infeasible { farkas, gap } => {
            let checked = verify_farkas(&problem, &farkas, &1e-7);
            Ok(MembershipReport {
                causal: false,
                witness: None,
                witness_violation: f64::INFINITY,
                infeasibility_gap: gap,
                farkas_checked: checked,
            })
        }
        LpOutcome::Unbounded => unreachable!("feasibility problem has no objective"),
    }
}

/// Exact-arithmetic membership on the rationalized table (each float entry
/// embeds exactly). Intended for rejections: a positive rational phase-one
/// gap is a proof of non-membership for the rationalized table.
pub struct ExactMembershipReport {
    pub causal: bool,
    pub gap: BigRational,
    pub farkas_checked: bool,
}

pub fn causal_membership_exact(table: &ProbabilityTable) -> Result<ExactMembershipReport> {
    let n = table.scenario.n_parties();
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!(
            "causal membership implemented for 1 to 3 parties, got {n}"
        )));
    }
    let branches = orderings(n);
    let entries: Vec<BigRational> = table
        .p
        .iter()
        .map(|&v| BigRational::from_f64_exact(v.max(0.0)))
        .collect();
    let problem = membership_problem::<BigRational>(&entries, &table.scenario, &branches);
    match solve_lp(&problem)? {
        LpOutcome::Optimal { .. } => Ok(ExactMembershipReport {
            causal: true,
            gap: BigRational::zero(),
            farkas_checked: false,
        }),
        LpOutcome::Infeasible { farkas, gap } => {
            let checked = verify_farkas(&problem, &farkas, &BigRational::zero());
            Ok(ExactMembershipReport { causal: false, gap, farkas_checked: checked })
        }
        LpOutcome::Unbounded => unreachable!(),
    }
}

fn witness_from_solution(
    scenario: &Scenario,
    branches: &[Vec<usize>],
    x: &[f64],
) -> CausalWitness {
    let ns = scenario.n_settings();
    let no = scenario.n_outcomes();
    let tables = branches
        .iter()
        .enumerate()
        .map(|(b, ord)| {
            let mut t = ProbabilityTable::zeros(scenario.clone());
            for s in 0..ns {
                for o in 0..no {
                    t.p[s * no + o] = x[var(b, s, o, ns, no)];
                }
            }
            (ord.clone(), t)
        })
        .collect();
    CausalWitness { scenario: scenario.clone(), branches: tables }
}

// ---------------------------------------------------------------------------
// games and bounds
// ---------------------------------------------------------------------------

/// A multipartite game: a payoff per (settings, outcomes) pair and a
/// distribution over settings. The figure of merit for a table `p` is
/// `sum_s pi(s) sum_o payoff(s,o) p(o|s)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Game {
    pub scenario: Scenario,
    /// Flat `[s_flat * n_outcomes + o_flat]`, like a table.
    pub payoff: Vec<f64>,
    /// Flat over settings.
    pub setting_distribution: Vec<f64>,
}

impl Game {
    pub fn validate(&self) -> Result<()> {
        let ns = self.scenario.n_settings();
        let no = self.scenario.n_outcomes();
        if self.payoff.len() != ns * no || self.setting_distribution.len() != ns {
            return Err(Error::Dimension("game arrays do not match the scenario".into()));
        }
        if self.payoff.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("payoff entries must be finite".into()));
        }
        let total: f64 = self.setting_distribution.iter().sum();
        if self.setting_distribution.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(
                "setting distribution must be a probability vector".into(),
            ));
        }
        Ok(())
    }

    pub fn value(&self, table: &ProbabilityTable) -> Result<f64> {
        if table.scenario != self.scenario {
            return Err(Error::Dimension("table scenario does not match the game".into()));
        }
        let no = self.scenario.n_outcomes();
        let mut acc = 0.0;
        for (s, &pi) in self.setting_distribution.iter().enumerate() {
            for o in 0..no {
                acc += pi * self.payoff[s * no + o] * table.p[s * no + o];
            }
        }
        Ok(acc)
    }
}

/// Maximum of a game over the causal polytope, exactly and as a float,
/// with a maximizing table and its verified decomposition.
pub struct CausalBoundResult {
    pub exact: BigRational,
    pub value: f64,
    pub maximizer: ProbabilityTable,
    pub witness: CausalWitness,
}

pub fn causal_bound(game: &Game) -> Result<CausalBoundResult> {
    game.validate()?;
    let n = game.scenario.n_parties();
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!(
            "causal bound implemented for 1 to 3 parties, got {n}"
        )));
    }
    let branches = orderings(n);
    let ns = game.scenario.n_settings();
    let no = game.scenario.n_outcomes();
    let n_vars = branches.len() * ns * no;
    let (mut rows, mut rhs) = branch_structure_rows::<BigRational>(&game.scenario, &branches);
    // one normalization row per setting
    for s in 0..ns {
        let mut row = vec![BigRational::zero(); n_vars];
        for b in 0..branches.len() {
            for o in 0..no {
                row[var(b, s, o, ns, no)] = BigRational::one();
            }
        }
        rows.push(row);
        rhs.push(BigRational::one());
    }
    // maximize: minimize the negated payoff
    let mut c = vec![BigRational::zero(); n_vars];
    for s in 0..ns {
        let pi = BigRational::from_f64_exact(game.setting_distribution[s]);
        for o in 0..no {
            let g = BigRational::from_f64_exact(game.payoff[s * no + o]);
            let coeff = -(pi.clone() * g);
            for b in 0..branches.len() {
                c[var(b, s, o, ns, no)] = coeff.clone();
            }
        }
    }
    let outcome = solve_lp(&LpProblem { a: rows, b: rhs, c })?;
    let (x, objective) = match outcome {
        LpOutcome::Optimal { x, objective } => (x, objective),
        LpOutcome::Infeasible { .. } => {
            return Err(Error::Precondition("causal polytope LP reported infeasible".into()))
        }
        LpOutcome::Unbounded => {
            return Err(Error::Precondition("causal polytope LP reported unbounded".into()))
        }
    };
    let exact = -objective;
    let xs: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
    let witness = witness_from_solution(&game.scenario, &branches, &xs);
    let maximizer = witness.recomposed();
    Ok(CausalBoundResult { value: exact.to_f64_lossy(), exact, maximizer, witness })
}

// ---------------------------------------------------------------------------
// seesaw optimization of quantum strategies
// ---------------------------------------------------------------------------

/// One local strategy: per setting, a measure-and-reprepare instrument
/// given by a POVM and one prepared state per outcome.
#[derive(Debug, Clone)]
pub struct LocalStrategy {
    pub povms: Vec<Vec<ComplexMatrix>>,
    pub preparations: Vec<Vec<ComplexMatrix>>,
}

#[derive(Debug, Clone)]
pub struct SeesawOutcome {
    pub value: f64,
    pub sweeps_used: usize,
    pub history: Vec<f64>,
    pub strategy: Vec<LocalStrategy>,
    /// Instruments realizing the final strategy, `[party][setting]`.
    pub instruments: Vec<Vec<Instrument>>,
}

pub struct SeesawOptions {
    pub restarts: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions { restarts: 3, sweeps: 200, seed: crate::config::DEFAULT_SEED }
    }
}

fn random_pure(rng: &mut ChaCha20Rng, d: usize) -> ComplexMatrix {
    use num_complex::Complex64;
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    let mut norm = 0.0;
    for entry in v.iter_mut() {
        let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-12), rng.gen());
        let (u3, u4): (f64, f64) = (rng.gen::<f64>().max(1e-12), rng.gen());
        let re = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        let im = (-2.0 * u3.ln()).sqrt() * (std::f64::consts::TAU * u4).cos();
        *entry = Complex64::new(re, im);
        norm += re * re + im * im;
    }
    let norm = norm.sqrt();
    let mut m = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            m[(r, c)] = v[r] * v[c].conj() / (norm * norm);
        }
    }
    m
}

fn projector_from_columns(v: &ComplexMatrix, cols: &[usize]) -> ComplexMatrix {
    let d = v.nrows();
    let mut p = ComplexMatrix::zeros(d, d);
    for &k in cols {
        for r in 0..d {
            for c in 0..d {
                let add = v[(r, k)] * v[(c, k)].conj();
                p[(r, c)] += add;
            }
        }
    }
    p
}

struct SeesawContext<'a> {
    w: &'a ProcessMatrix,
    game: &'a Game,
}

impl SeesawContext<'_> {
    fn party_dims(&self, i: usize) -> (usize, usize) {
        let p = &self.w.parties()[i];
        (p.d_in, p.d_out)
    }

    fn cj(&self, strat: &[LocalStrategy], i: usize, setting: usize, outcome: usize) -> ComplexMatrix {
        kron(
            &strat[i].povms[setting][outcome],
            &strat[i].preparations[setting][outcome].transpose(),
        )
    }

    fn value(&self, strat: &[LocalStrategy]) -> f64 {
        let sc = &self.game.scenario;
        let n = sc.n_parties();
        let no = sc.n_outcomes();
        let mut total = 0.0;
        for sf in 0..sc.n_settings() {
            let pi = self.game.setting_distribution[sf];
            if pi == 0.0 {
                continue;
            }
            let s = unflatten(&sc.settings, sf);
            for of in 0..no {
                let g = self.game.payoff[sf * no + of];
                if g == 0.0 {
                    continue;
                }
                let o = unflatten(&sc.outcomes, of);
                let mut op = ComplexMatrix::identity(1);
                for i in 0..n {
                    op = kron(&op, &self.cj(strat, i, s[i], o[i]));
                }
                total += pi * g * self.w.matrix().trace_mul(&op).re;
            }
        }
        total
    }

    /// Effective operator on party `i`'s slots for its setting `t` and
    /// outcome `x`: the payoff-weighted partial contraction of the process
    /// with everyone else's instruments.
    fn effective(
        &self,
        strat: &[LocalStrategy],
        i: usize,
        t: usize,
        x: usize,
    ) -> Result<ComplexMatrix> {
        let sc = &self.game.scenario;
        let n = sc.n_parties();
        let no = sc.n_outcomes();
        let (d_in, d_out) = self.party_dims(i);
        let mut acc = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
        let traced: Vec<usize> = (0..2 * n).filter(|&s| s / 2 != i).collect();
        for sf in 0..sc.n_settings() {
            let pi = self.game.setting_distribution[sf];
            if pi == 0.0 {
                continue;
            }
            let s = unflatten(&sc.settings, sf);
            if s[i] != t {
                continue;
            }
            for of in 0..no {
                let o = unflatten(&sc.outcomes, of);
                if o[i] != x {
                    continue;
                }
                let g = self.game.payoff[sf * no + of];
                if g == 0.0 {
                    continue;
                }
                let mut op = ComplexMatrix::identity(1);
                for j in 0..n {
                    if j == i {
                        let (di, do_) = self.party_dims(j);
                        op = kron(&op, &ComplexMatrix::identity(di * do_));
                    } else {
                        op = kron(&op, &self.cj(strat, j, s[j], o[j]));
                    }
                }
                let prod = self.w.matrix().matmul(&op);
                let (g_op, _) = self.w.space().partial_trace(&prod, &traced)?;
                acc.add_assign(&g_op.scale_re(pi * g));
            }
        }
        Ok(acc.hermitize())
    }
}

fn unflatten(dims: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for (pos, &d) in dims.iter().enumerate().rev() {
        idx[pos] = flat % d;
        flat /= d;
    }
    idx
}

/// Alternating optimization of measure-and-reprepare strategies for a
/// fixed process and game. Preparations are updated to the top eigenstate
/// of their effective operator; two-outcome POVMs to the positive
/// eigenspace projector of the outcome difference. Each local update is an
/// exact argmax, so the value is nondecreasing within a restart.
pub fn optimize_quantum_value(
    w: &ProcessMatrix,
    game: &Game,
    opts: &SeesawOptions,
    tol: &Tolerances,
) -> Result<SeesawOutcome> {
    game.validate()?;
    let n = w.n_parties();
    if game.scenario.n_parties() != n {
        return Err(Error::Dimension("game and process party counts differ".into()));
    }
    if game.scenario.outcomes.iter().any(|&m| m != 2) {
        return Err(Error::Unsupported(
            "seesaw POVM update implemented for two-outcome parties".into(),
        ));
    }
    let ctx = SeesawContext { w, game };
    let mut best: Option<SeesawOutcome> = None;

    for restart in 0..opts.restarts.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
        let mut strat: Vec<LocalStrategy> = (0..n)
            .map(|i| {
                let (d_in, d_out) = ctx.party_dims(i);
                let n_set = game.scenario.settings[i];
                let povms = (0..n_set)
                    .map(|_| {
                        let e0 = if d_in == 1 {
                            ComplexMatrix::identity(1)
                        } else {
                            random_pure(&mut rng, d_in)
                        };
                        let mut e1 = ComplexMatrix::identity(d_in);
                        e1 = e1.sub(&e0);
                        vec![e0, e1]
                    })
                    .collect();
                let preparations = (0..n_set)
                    .map(|_| {
                        (0..2)
                            .map(|_| {
                                if d_out == 1 {
                                    ComplexMatrix::identity(1)
                                } else {
                                    random_pure(&mut rng, d_out)
                                }
                            })
                            .collect()
                    })
                    .collect();
                LocalStrategy { povms, preparations }
            })
            .collect();

        let mut history = vec![ctx.value(&strat)];
        let mut sweeps_used = 0;
        for _sweep in 0..opts.sweeps {
            sweeps_used += 1;
            for i in 0..n {
                let (d_in, d_out) = ctx.party_dims(i);
                for t in 0..game.scenario.settings[i] {
                    let g0 = ctx.effective(&strat, i, t, 0)?;
                    let g1 = ctx.effective(&strat, i, t, 1)?;
                    let pair = ctx.w.parties()[i].cj_space();
                    // preparations first, given the current POVM
                    for (x, g) in [(0usize, &g0), (1usize, &g1)] {
                        if d_out == 1 {
                            continue;
                        }
                        let lifted = kron(&strat[i].povms[t][x], &ComplexMatrix::identity(d_out));
                        let (f, _) = pair.partial_trace(&g.matmul(&lifted), &[0])?;
                        let ft = f.hermitize().transpose();
                        let (_, vecs) = eig_hermitian(&ft)?;
                        let top = d_out - 1;
                        strat[i].preparations[t][x] = projector_from_columns(&vecs, &[top]);
                    }
                    // two-outcome POVM: positive eigenspace of the difference
                    let mut h = Vec::with_capacity(2);
                    for (x, g) in [(0usize, &g0), (1usize, &g1)] {
                        let lifted = kron(
                            &ComplexMatrix::identity(d_in),
                            &strat[i].preparations[t][x].transpose(),
                        );
                        let (hx, _) = pair.partial_trace(&g.matmul(&lifted), &[1])?;
                        h.push(hx.hermitize());
                    }
                    let diff = h[0].sub(&h[1]);
                    let (eigs, vecs) = eig_hermitian(&diff)?;
                    let pos: Vec<usize> =
                        (0..d_in).filter(|&k| eigs[k] > 0.0).collect();
                    let e0 = projector_from_columns(&vecs, &pos);
                    let e1 = ComplexMatrix::identity(d_in).sub(&e0);
                    strat[i].povms[t] = vec![e0, e1];
                }
            }
            let v = ctx.value(&strat);
            let gained = v - history.last().copied().unwrap_or(f64::NEG_INFINITY);
            history.push(v);
            if gained.abs() < 1e-12 {
                break;
            }
        }
        let value = *history.last().unwrap();
        let better = best.as_ref().map_or(true, |b| value > b.value);
        if better {
            let instruments = build_instruments(w, game, &strat, tol)?;
            best = Some(SeesawOutcome { value, sweeps_used, history, strategy: strat, instruments });
        }
    }
    Ok(best.expect("at least one restart"))
}

fn build_instruments(
    w: &ProcessMatrix,
    game: &Game,
    strat: &[LocalStrategy],
    tol: &Tolerances,
) -> Result<Vec<Vec<Instrument>>> {
    let mut out = Vec::with_capacity(strat.len());
    for (i, local) in strat.iter().enumerate() {
        let party = &w.parties()[i];
        let mut per_setting = Vec::with_capacity(game.scenario.settings[i]);
        for t in 0..game.scenario.settings[i] {
            per_setting.push(crate::choi::measure_prepare(
                party,
                &local.povms[t],
                &local.preparations[t],
                tol,
            )?);
        }
        out.push(per_setting);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_complex::Complex64;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn r(x: i64, y: i64) -> BigRational {
        BigRational::new(BigInt::from(x), BigInt::from(y))
    }

    #[test]
    fn simplex_small_optimum() {
        // min -x1 - 2 x2 s.t. x1 + x2 + s1 = 4, x1 + 3 x2 + s2 = 6
        let p = LpProblem {
            a: vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
            c: vec![-1.0, -2.0, 0.0, 0.0],
        };
        match solve_lp(&p).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 3.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
                assert!((objective + 5.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
        let pr = LpProblem {
            a: vec![
                vec![r(1, 1), r(1, 1), r(1, 1), r(0, 1)],
                vec![r(1, 1), r(3, 1), r(0, 1), r(1, 1)],
            ],
            b: vec![r(4, 1), r(6, 1)],
            c: vec![r(-1, 1), r(-2, 1), r(0, 1), r(0, 1)],
        };
        match solve_lp(&pr).unwrap() {
            LpOutcome::Optimal { objective, .. } => assert_eq!(objective, r(-5, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn simplex_infeasible_with_farkas() {
        // x1 + x2 = 1, x1 + x2 = 3 cannot both hold
        let p = LpProblem {
            a: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            b: vec![1.0, 3.0],
            c: vec![0.0, 0.0],
        };
        match solve_lp(&p).unwrap() {
            LpOutcome::Infeasible { farkas, gap } => {
                assert!(gap > 1.0);
                assert!(verify_farkas(&p, &farkas, &1e-9));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn scenario2() -> Scenario {
        Scenario::new(vec!["A".into(), "B".into()], vec![2, 2], vec![2, 2]).unwrap()
    }

    #[test]
    fn no_signaling_tables_are_causal() {
        // PR-box style: outcomes uniformly random with o_A xor o_B = s_A s_B
        let mut t = ProbabilityTable::zeros(scenario2());
        for sa in 0..2 {
            for sb in 0..2 {
                for oa in 0..2 {
                    for ob in 0..2 {
                        if oa ^ ob == sa & sb {
                            t.set(&[sa, sb], &[oa, ob], 0.5);
                        }
                    }
                }
            }
        }
        let rep = causal_membership(&t, &tol()).unwrap();
        assert!(rep.causal, "{rep:?}");
        assert!(rep.witness_violation <= 1e-9);
    }

    #[test]
    fn one_way_signaling_is_causal() {
        let mut t = ProbabilityTable::zeros(scenario2());
        for sa in 0..2 {
            for sb in 0..2 {
                t.set(&[sa, sb], &[0, sa], 1.0);
            }
        }
        let rep = causal_membership(&t, &tol()).unwrap();
        assert!(rep.causal);
    }

    #[test]
    fn two_way_signaling_is_rejected() {
        // o_A = s_B and o_B = s_A deterministically
        let mut t = ProbabilityTable::zeros(scenario2());
        for sa in 0..2 {
            for sb in 0..2 {
                t.set(&[sa, sb], &[sb, sa], 1.0);
            }
        }
        let rep = causal_membership(&t, &tol()).unwrap();
        assert!(!rep.causal);
        assert!(rep.infeasibility_gap > 0.2);
        assert!(rep.farkas_checked);
        let exact = causal_membership_exact(&t).unwrap();
        assert!(!exact.causal && exact.farkas_checked);
        assert!(exact.gap > BigRational::zero());
    }

    #[test]
    fn cyclic_tripartite_signaling_is_rejected() {
        let sc = Scenario::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![2, 2, 2],
            vec![2, 2, 2],
        )
        .unwrap();
        let mut t = ProbabilityTable::zeros(sc.clone());
        for sa in 0..2 {
            for sb in 0..2 {
                for scs in 0..2 {
                    t.set(&[sa, sb, scs], &[sb, scs, sa], 1.0);
                }
            }
        }
        let rep = causal_membership(&t, &tol()).unwrap();
        assert!(!rep.causal && rep.farkas_checked);
        // breaking the cycle restores causality: C outputs a constant
        let mut ok = ProbabilityTable::zeros(sc);
        for sa in 0..2 {
            for sb in 0..2 {
                for scs in 0..2 {
                    ok.set(&[sa, sb, scs], &[sb, scs, 0], 1.0);
                }
            }
        }
        let rep = causal_membership(&ok, &tol()).unwrap();
        assert!(rep.causal, "{rep:?}");
        assert!(rep.witness_violation <= 1e-9);
    }

    #[test]
    fn guess_each_other_bound_is_one_half() {
        // win iff o_A = s_B and o_B = s_A, uniform settings
        let sc = scenario2();
        let no = sc.n_outcomes();
        let mut payoff = vec![0.0; sc.n_settings() * no];
        for sa in 0..2 {
            for sb in 0..2 {
                let sf = sa * 2 + sb;
                let of = sb * 2 + sa; // o_A = s_B, o_B = s_A
                payoff[sf * no + of] = 1.0;
            }
        }
        let game = Game {
            scenario: sc,
            payoff,
            setting_distribution: vec![0.25; 4],
        };
        let bound = causal_bound(&game).unwrap();
        assert_eq!(bound.exact, r(1, 2));
        assert!((bound.value - 0.5).abs() < 1e-12);
        assert!(bound.witness.max_violation(&bound.maximizer).unwrap() <= 1e-9);
        assert!((game.value(&bound.maximizer).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn seesaw_learns_to_use_the_wire() {
        // identity channel from A to B; the game pays when B repeats A's
        // outcome, which a measure-and-resend strategy wins with certainty
        let parties = vec![
            crate::choi::PartySpec::new("A", 2, 2),
            crate::choi::PartySpec::new("B", 2, 2),
        ];
        let mut rho = ComplexMatrix::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let m = kron(
            &kron(&rho, &crate::choi::maximally_entangled(2)),
            &ComplexMatrix::identity(2),
        );
        let w = ProcessMatrix::new(parties, m).unwrap();
        let sc = Scenario::new(vec!["A".into(), "B".into()], vec![1, 1], vec![2, 2]).unwrap();
        let mut payoff = vec![0.0; 4];
        payoff[0] = 1.0; // o_A = o_B = 0
        payoff[3] = 1.0; // o_A = o_B = 1
        let game = Game { scenario: sc, payoff, setting_distribution: vec![1.0] };
        let opts = SeesawOptions { restarts: 2, sweeps: 50, seed: 7 };
        let out = optimize_quantum_value(&w, &game, &opts, &tol()).unwrap();
        assert!(out.value > 0.999, "value {}", out.value);
        // the reported instruments reproduce the value
        let table = crate::correlations::table_from_process(&w, &out.instruments).unwrap();
        assert!((game.value(&table).unwrap() - out.value).abs() < 1e-9);
        // monotone within the winning restart
        for pair in out.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-10);
        }
    }

    #[test]
    fn monopartite_tables_are_trivially_causal() {
        let sc = Scenario::new(vec!["A".into()], vec![3], vec![2]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(987);
        for _ in 0..10 {
            let t = crate::suite::generators::random_table(&mut rng, &sc);
            let rep = causal_membership(&t, &Tolerances::default()).unwrap();
            assert!(rep.causal);
            assert!(rep.witness_violation <= 1e-7);
            let free = crate::correlations::CausalConfiguration::from_precedences(1, &[]).unwrap();
            let order =
                crate::correlations::fixed_order_causal_check(&t, &free, &Tolerances::default())
                    .unwrap();
            assert!(order.compatible);
        }
    }

    #[test]
    fn mixtures_of_accepted_tables_stay_accepted() {
        use crate::correlations::mix_tables;
        let tol = Tolerances::default();
        let sc = Scenario::new(vec!["A".into(), "B".into()], vec![2, 2], vec![2, 2]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(4242);
        for round in 0..6 {
            let t1 = crate::suite::generators::random_causal_table(&mut rng, &sc);
            let t2 = crate::suite::generators::random_causal_table(&mut rng, &sc);
            assert!(causal_membership(&t1, &tol).unwrap().causal);
            assert!(causal_membership(&t2, &tol).unwrap().causal);
            let lambda = 0.15 + 0.12 * round as f64;
            let mix = mix_tables(&[&t1, &t2], &[lambda, 1.0 - lambda]).unwrap();
            let rep = causal_membership(&mix, &tol).unwrap();
            assert!(rep.causal, "round {round}");
            assert!(rep.witness_violation <= 1e-7);
        }
    }

    #[test]
    fn exact_bound_is_invariant_under_payoff_rescaling() {
        let game = crate::gallery::ocb_game();
        let base = causal_bound(&game).unwrap();
        assert_eq!(base.exact, BigRational::new(BigInt::from(3), BigInt::from(4)));
        // dyadic factors embed exactly in the payoff floats
        for (num, den) in [(1i64, 2i64), (3, 1), (5, 8)] {
            let factor = num as f64 / den as f64;
            let mut scaled = game.clone();
            for v in &mut scaled.payoff {
                *v *= factor;
            }
            let res = causal_bound(&scaled).unwrap();
            let expect = base.exact.clone()
                * BigRational::new(BigInt::from(num), BigInt::from(den));
            assert_eq!(res.exact, expect, "factor {num}/{den}");
        }
    }
}
