//! Multipartite probability tables and their causal structure.
//!
//! A [`ProbabilityTable`] stores `p(o_1..o_n | s_1..s_n)` densely,
//! settings-major then outcomes, each multi-index row-major with party 0
//! most significant. Signaling between complementary subsets is read off
//! marginal independence; reduced and conditional processes implement the
//! discard/condition operations with the zero-probability convention; and
//! [`fixed_order_causal_check`] decides compatibility with a fixed causal
//! configuration by checking the signaling restrictions of the full table
//! and of every well-defined reduced table.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Tolerances};

/// Party names plus per-party setting and outcome cardinalities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub parties: Vec<String>,
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
}

impl Scenario {
    pub fn new(parties: Vec<String>, settings: Vec<usize>, outcomes: Vec<usize>) -> Result<Self> {
        if parties.is_empty()
            || parties.len() != settings.len()
            || parties.len() != outcomes.len()
        {
            return Err(Error::InvalidInput(
                "scenario needs matching nonempty parties/settings/outcomes".into(),
            ));
        }
        if settings.iter().chain(&outcomes).any(|&c| c == 0) {
            return Err(Error::InvalidInput("cardinalities must be positive".into()));
        }
        Ok(Scenario { parties, settings, outcomes })
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn n_settings(&self) -> usize {
        self.settings.iter().product()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.iter().product()
    }

    pub fn party_index(&self, name: &str) -> Option<usize> {
        self.parties.iter().position(|p| p == name)
    }

    /// Scenario restricted to a subset of parties (kept order).
    pub fn restrict(&self, keep: &[usize]) -> Result<Scenario> {
        Scenario::new(
            keep.iter().map(|&i| self.parties[i].clone()).collect(),
            keep.iter().map(|&i| self.settings[i]).collect(),
            keep.iter().map(|&i| self.outcomes[i]).collect(),
        )
    }
}

fn ravel(dims: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), idx.len());
    let mut flat = 0;
    for (&d, &i) in dims.iter().zip(idx) {
        debug_assert!(i < d);
        flat = flat * d + i;
    }
    flat
}

fn unravel(dims: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for (pos, &d) in dims.iter().enumerate().rev() {
        idx[pos] = flat % d;
        flat /= d;
    }
    idx
}

/// Dense conditional probability table for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub scenario: Scenario,
    /// Flat storage `p[s_flat * n_outcomes + o_flat]`.
    pub p: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(scenario: Scenario, p: Vec<f64>) -> Result<Self> {
        let expect = scenario.n_settings() * scenario.n_outcomes();
        if p.len() != expect {
            return Err(Error::Dimension(format!(
                "expected {expect} entries, got {}",
                p.len()
            )));
        }
        Ok(ProbabilityTable { scenario, p })
    }

    pub fn zeros(scenario: Scenario) -> Self {
        let len = scenario.n_settings() * scenario.n_outcomes();
        ProbabilityTable { scenario, p: vec![0.0; len] }
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let no = scenario.n_outcomes();
        let len = scenario.n_settings() * no;
        ProbabilityTable { scenario, p: vec![1.0 / no as f64; len] }
    }

    pub fn get(&self, s: &[usize], o: &[usize]) -> f64 {
        let sf = ravel(&self.scenario.settings, s);
        let of = ravel(&self.scenario.outcomes, o);
        self.p[sf * self.scenario.n_outcomes() + of]
    }

    pub fn get_flat(&self, s_flat: usize, o_flat: usize) -> f64 {
        self.p[s_flat * self.scenario.n_outcomes() + o_flat]
    }

    pub fn set(&mut self, s: &[usize], o: &[usize], v: f64) {
        let sf = ravel(&self.scenario.settings, s);
        let of = ravel(&self.scenario.outcomes, o);
        self.p[sf * self.scenario.n_outcomes() + of] = v;
    }

    /// Nonnegative entries and unit normalization per setting.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.p.iter().any(|&x| x < -tol.marginal || !x.is_finite()) {
            return Err(Error::InvalidInput("negative or non-finite probability".into()));
        }
        let no = self.scenario.n_outcomes();
        for sf in 0..self.scenario.n_settings() {
            let sum: f64 = self.p[sf * no..(sf + 1) * no].iter().sum();
            if (sum - 1.0).abs() > tol.marginal * 10.0 {
                return Err(Error::InvalidInput(format!(
                    "setting {sf} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> f64 {
        assert_eq!(self.scenario, other.scenario);
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Marginal distribution of the `observe` parties' outcomes at a fixed
    /// full setting assignment.
    pub fn outcome_marginal(&self, s: &[usize], observe: &[usize]) -> Vec<f64> {
        let obs_dims: Vec<usize> = observe.iter().map(|&i| self.scenario.outcomes[i]).collect();
        let mut out = vec![0.0; obs_dims.iter().product()];
        let no = self.scenario.n_outcomes();
        let sf = ravel(&self.scenario.settings, s);
        for of in 0..no {
            let o = unravel(&self.scenario.outcomes, of);
            let obs_idx: Vec<usize> = observe.iter().map(|&i| o[i]).collect();
            out[ravel(&obs_dims, &obs_idx)] += self.p[sf * no + of];
        }
        out
    }
}

/// Largest change of the `observe` parties' outcome marginal under
/// variations of the `from` parties' settings, all other settings fixed.
pub fn signaling_violation(table: &ProbabilityTable, from: &[usize], observe: &[usize]) -> f64 {
    let sc = &table.scenario;
    let n = sc.n_parties();
    let rest: Vec<usize> = (0..n).filter(|i| !from.contains(i)).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&i| sc.settings[i]).collect();
    let from_dims: Vec<usize> = from.iter().map(|&i| sc.settings[i]).collect();
    let n_rest: usize = rest_dims.iter().product();
    let n_from: usize = from_dims.iter().product();
    let mut worst = 0.0f64;
    let mut s = vec![0usize; n];
    for rf in 0..n_rest {
        let r_idx = unravel(&rest_dims, rf);
        for (pos, &party) in rest.iter().enumerate() {
            s[party] = r_idx[pos];
        }
        let mut reference: Option<Vec<f64>> = None;
        for ff in 0..n_from {
            let f_idx = unravel(&from_dims, ff);
            for (pos, &party) in from.iter().enumerate() {
                s[party] = f_idx[pos];
            }
            let m = table.outcome_marginal(&s, observe);
            match &reference {
                None => reference = Some(m),
                Some(base) => {
                    for (a, b) in base.iter().zip(&m) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    worst
}

/// Report of a subset signaling check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSignalingReport {
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub violation: f64,
    pub no_signaling: bool,
}

/// No signaling from the `from` parties to the complementary set: their
/// settings must not move the joint outcome marginal of the others.
pub fn no_signaling_subset(
    table: &ProbabilityTable,
    from: &[usize],
    tol: &Tolerances,
) -> Result<TableSignalingReport> {
    let n = table.scenario.n_parties();
    check_subset(n, from)?;
    let to: Vec<usize> = (0..n).filter(|i| !from.contains(i)).collect();
    if to.is_empty() || from.is_empty() {
        return Err(Error::InvalidInput("need a nonempty proper subset".into()));
    }
    let violation = signaling_violation(table, from, &to);
    Ok(TableSignalingReport {
        from: from.iter().map(|&i| table.scenario.parties[i].clone()).collect(),
        to: to.iter().map(|&i| table.scenario.parties[i].clone()).collect(),
        violation,
        no_signaling: violation <= tol.marginal,
    })
}

fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &p in subset {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!("invalid party subset {subset:?}")));
        }
    }
    Ok(())
}

/// Reduced table on `keep` after discarding the rest. Defined when the
/// discarded parties cannot signal to the kept ones; their settings are
/// then irrelevant and are fixed at the first value.
pub fn reduced_process(
    table: &ProbabilityTable,
    keep: &[usize],
    tol: &Tolerances,
) -> Result<ProbabilityTable> {
    let n = table.scenario.n_parties();
    check_subset(n, keep)?;
    if keep.is_empty() || keep.len() == n {
        return Err(Error::InvalidInput("keep a nonempty proper subset".into()));
    }
    let discard: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let report = no_signaling_subset(table, &discard, tol)?;
    if !report.no_signaling {
        return Err(Error::Precondition(format!(
            "reduction undefined: signaling from {:?} (violation {:.3e})",
            report.from, report.violation
        )));
    }
    let sub = table.scenario.restrict(keep)?;
    let mut out = ProbabilityTable::zeros(sub.clone());
    let keep_set_dims: Vec<usize> = keep.iter().map(|&i| table.scenario.settings[i]).collect();
    let mut s_full = vec![0usize; n];
    for sf in 0..sub.n_settings() {
        let s_idx = unravel(&keep_set_dims, sf);
        for (pos, &party) in keep.iter().enumerate() {
            s_full[party] = s_idx[pos];
        }
        for &party in &discard {
            s_full[party] = 0;
        }
        let marg = table.outcome_marginal(&s_full, keep);
        for (of, &v) in marg.iter().enumerate() {
            out.p[sf * sub.n_outcomes() + of] = v;
        }
    }
    Ok(out)
}

/// Conditional processes of the remaining parties, one per setting/outcome
/// event of the `given` parties, with the reduced table of the `given`
/// parties. Events of probability zero get the uniform table (the
/// convention making the recomposition identity hold trivially there).
#[derive(Debug, Clone)]
pub struct ConditionalFamily {
    pub scenario: Scenario,
    pub given: Vec<usize>,
    pub rest: Vec<usize>,
    pub reduced: ProbabilityTable,
    /// `components[s_given_flat][o_given_flat]` is a table on the rest.
    pub components: Vec<Vec<ProbabilityTable>>,
}

pub fn conditional_process(
    table: &ProbabilityTable,
    given: &[usize],
    tol: &Tolerances,
) -> Result<ConditionalFamily> {
    let n = table.scenario.n_parties();
    check_subset(n, given)?;
    if given.is_empty() || given.len() == n {
        return Err(Error::InvalidInput("condition on a nonempty proper subset".into()));
    }
    let rest: Vec<usize> = (0..n).filter(|i| !given.contains(i)).collect();
    let reduced = reduced_process(table, given, tol)?;
    let given_sc = reduced.scenario.clone();
    let rest_sc = table.scenario.restrict(&rest)?;

    let given_set_dims: Vec<usize> = given.iter().map(|&i| table.scenario.settings[i]).collect();
    let given_out_dims: Vec<usize> = given.iter().map(|&i| table.scenario.outcomes[i]).collect();
    let rest_set_dims: Vec<usize> = rest.iter().map(|&i| table.scenario.settings[i]).collect();
    let rest_out_dims: Vec<usize> = rest.iter().map(|&i| table.scenario.outcomes[i]).collect();

    let mut components = Vec::with_capacity(given_sc.n_settings());
    for gs in 0..given_sc.n_settings() {
        let gs_idx = unravel(&given_set_dims, gs);
        let mut per_outcome = Vec::with_capacity(given_sc.n_outcomes());
        for go in 0..given_sc.n_outcomes() {
            let go_idx = unravel(&given_out_dims, go);
            let weight = reduced.get_flat(gs, go);
            if weight <= tol.coeff_zero {
                per_outcome.push(ProbabilityTable::uniform(rest_sc.clone()));
                continue;
            }
            let mut comp = ProbabilityTable::zeros(rest_sc.clone());
            let mut s_full = vec![0usize; n];
            let mut o_full = vec![0usize; n];
            for (pos, &party) in given.iter().enumerate() {
                s_full[party] = gs_idx[pos];
                o_full[party] = go_idx[pos];
            }
            for rs in 0..rest_sc.n_settings() {
                let rs_idx = unravel(&rest_set_dims, rs);
                for (pos, &party) in rest.iter().enumerate() {
                    s_full[party] = rs_idx[pos];
                }
                for ro in 0..rest_sc.n_outcomes() {
                    let ro_idx = unravel(&rest_out_dims, ro);
                    for (pos, &party) in rest.iter().enumerate() {
                        o_full[party] = ro_idx[pos];
                    }
                    let joint = table.get(&s_full, &o_full);
                    comp.p[rs * rest_sc.n_outcomes() + ro] = joint / weight;
                }
            }
            per_outcome.push(comp);
        }
        components.push(per_outcome);
    }
    Ok(ConditionalFamily {
        scenario: table.scenario.clone(),
        given: given.to_vec(),
        rest,
        reduced,
        components,
    })
}

impl ConditionalFamily {
    /// Rebuild the full table as `reduced * conditional`.
    pub fn recompose(&self) -> Result<ProbabilityTable> {
        let sc = &self.scenario;
        let mut out = ProbabilityTable::zeros(sc.clone());
        let given_set_dims: Vec<usize> = self.given.iter().map(|&i| sc.settings[i]).collect();
        let given_out_dims: Vec<usize> = self.given.iter().map(|&i| sc.outcomes[i]).collect();
        let rest_set_dims: Vec<usize> = self.rest.iter().map(|&i| sc.settings[i]).collect();
        let rest_out_dims: Vec<usize> = self.rest.iter().map(|&i| sc.outcomes[i]).collect();
        for sf in 0..sc.n_settings() {
            let s = unravel(&sc.settings, sf);
            let gs = ravel(&given_set_dims, &self.given.iter().map(|&i| s[i]).collect::<Vec<_>>());
            let rs = ravel(&rest_set_dims, &self.rest.iter().map(|&i| s[i]).collect::<Vec<_>>());
            for of in 0..sc.n_outcomes() {
                let o = unravel(&sc.outcomes, of);
                let go =
                    ravel(&given_out_dims, &self.given.iter().map(|&i| o[i]).collect::<Vec<_>>());
                let ro = ravel(&rest_out_dims, &self.rest.iter().map(|&i| o[i]).collect::<Vec<_>>());
                let w = self.reduced.get_flat(gs, go);
                let c = self.components[gs][go].get_flat(rs, ro);
                out.p[sf * sc.n_outcomes() + of] = w * c;
            }
        }
        Ok(out)
    }
}

/// Pairwise causal relation between two parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// Same party (diagonal only).
    Equal,
    /// Row party strictly precedes column party.
    Before,
    /// Row party strictly succeeds column party.
    After,
    /// Causally unrelated.
    Unrelated,
}

/// A causal configuration: a strict partial order among the parties,
/// stored as the full pairwise relation matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalConfiguration {
    rel: Vec<Vec<Relation>>,
}

impl CausalConfiguration {
    /// Build from the list of strict precedences `x -> y`; all other pairs
    /// are unrelated. Fails unless the result is a strict partial order.
    pub fn from_precedences(n: usize, before: &[(usize, usize)]) -> Result<Self> {
        let mut rel = vec![vec![Relation::Unrelated; n]; n];
        for (i, row) in rel.iter_mut().enumerate() {
            row[i] = Relation::Equal;
        }
        for &(x, y) in before {
            if x >= n || y >= n || x == y {
                return Err(Error::InvalidInput(format!("invalid precedence ({x},{y})")));
            }
            rel[x][y] = Relation::Before;
            rel[y][x] = Relation::After;
        }
        let c = CausalConfiguration { rel };
        c.check()?;
        Ok(c)
    }

    pub fn from_relations(rel: Vec<Vec<Relation>>) -> Result<Self> {
        let c = CausalConfiguration { rel };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        let n = self.rel.len();
        for (i, row) in self.rel.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput("relation matrix must be square".into()));
            }
            for (j, &r) in row.iter().enumerate() {
                if (i == j) != (r == Relation::Equal) {
                    return Err(Error::InvalidInput(
                        "Equal exactly on the diagonal required".into(),
                    ));
                }
                let mirrored = match r {
                    Relation::Equal => Relation::Equal,
                    Relation::Before => Relation::After,
                    Relation::After => Relation::Before,
                    Relation::Unrelated => Relation::Unrelated,
                };
                if self.rel[j][i] != mirrored {
                    return Err(Error::InvalidInput(format!(
                        "relation between {i} and {j} is not antisymmetric"
                    )));
                }
            }
        }
        // transitivity of strict precedence
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if self.precedes(x, y) && self.precedes(y, z) && !self.precedes(x, z) {
                        return Err(Error::InvalidInput(format!(
                            "precedence not transitive at ({x},{y},{z})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_parties(&self) -> usize {
        self.rel.len()
    }

    pub fn precedes(&self, x: usize, y: usize) -> bool {
        self.rel[x][y] == Relation::Before
    }

    pub fn relation(&self, x: usize, y: usize) -> Relation {
        self.rel[x][y]
    }

    /// Configuration induced on a subset (kept order).
    pub fn restrict(&self, keep: &[usize]) -> CausalConfiguration {
        let rel = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| self.rel[i][j]).collect())
            .collect();
        CausalConfiguration { rel }
    }
}

/// One violation found by [`fixed_order_causal_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableOrderViolation {
    pub within: Vec<String>,
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableOrderReport {
    pub compatible: bool,
    pub violations: Vec<TableOrderViolation>,
}

/// Compatibility of a table with a fixed causal configuration: the
/// signaling restriction (a set can signal only where one of its members
/// precedes a receiver) must hold in the full table and in every reduced
/// table that is well defined, across all bipartitions.
pub fn fixed_order_causal_check(
    table: &ProbabilityTable,
    config: &CausalConfiguration,
    tol: &Tolerances,
) -> Result<TableOrderReport> {
    let n = table.scenario.n_parties();
    if config.n_parties() != n {
        return Err(Error::Dimension("configuration party count mismatch".into()));
    }
    if n > 31 {
        return Err(Error::Unsupported("too many parties".into()));
    }
    let mut violations = Vec::new();
    let names = |idxs: &[usize]| -> Vec<String> {
        idxs.iter().map(|&i| table.scenario.parties[i].clone()).collect()
    };
    for k_mask in 1u32..(1u32 << n) {
        let kset: Vec<usize> = (0..n).filter(|i| k_mask >> i & 1 == 1).collect();
        if kset.len() < 2 {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|i| k_mask >> i & 1 == 0).collect();
        let reduced_table;
        let working: &ProbabilityTable = if comp.is_empty() {
            table
        } else {
            match reduced_process(table, &kset, tol) {
                Ok(t) => {
                    reduced_table = t;
                    &reduced_table
                }
                // signaling into K from outside: reduction undefined, skip
                Err(Error::Precondition(_)) => continue,
                Err(e) => return Err(e),
            }
        };
        let k = kset.len();
        for s_mask in 1u32..((1u32 << k) - 1) {
            let s_local: Vec<usize> = (0..k).filter(|i| s_mask >> i & 1 == 1).collect();
            let s_global: Vec<usize> = s_local.iter().map(|&i| kset[i]).collect();
            let o_global: Vec<usize> =
                (0..k).filter(|i| s_mask >> i & 1 == 0).map(|i| kset[i]).collect();
            let may_signal = s_global
                .iter()
                .any(|&x| o_global.iter().any(|&y| config.precedes(x, y)));
            if may_signal {
                continue;
            }
            let o_local: Vec<usize> = (0..k).filter(|i| s_mask >> i & 1 == 0).collect();
            let violation = signaling_violation(working, &s_local, &o_local);
            if violation > tol.marginal {
                violations.push(TableOrderViolation {
                    within: names(&kset),
                    from: names(&s_global),
                    to: names(&o_global),
                    violation,
                });
            }
        }
    }
    Ok(TableOrderReport { compatible: violations.is_empty(), violations })
}

/// Convex mixture of tables over one scenario.
pub fn mix_tables(tables: &[&ProbabilityTable], weights: &[f64]) -> Result<ProbabilityTable> {
    if tables.is_empty() || tables.len() != weights.len() {
        return Err(Error::InvalidInput("need matching nonempty tables and weights".into()));
    }
    if weights.iter().any(|&w| w < -1e-12) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must be a probability vector".into()));
    }
    let sc = tables[0].scenario.clone();
    for t in tables {
        if t.scenario != sc {
            return Err(Error::Dimension("tables must share one scenario".into()));
        }
    }
    let mut p = vec![0.0; tables[0].p.len()];
    for (t, &w) in tables.iter().zip(weights) {
        for (acc, &v) in p.iter_mut().zip(&t.p) {
            *acc += w * v;
        }
    }
    ProbabilityTable::new(sc, p)
}

/// Build the probability table of a process matrix under per-setting
/// instrument lists, one list per party. All instruments of a party must
/// share an outcome count.
pub fn table_from_process(
    w: &crate::procmat::ProcessMatrix,
    per_party: &[Vec<crate::choi::Instrument>],
) -> Result<ProbabilityTable> {
    let n = w.n_parties();
    if per_party.len() != n {
        return Err(Error::Dimension(format!("need instrument lists for {n} parties")));
    }
    let mut settings = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for (party, list) in w.parties().iter().zip(per_party) {
        if list.is_empty() {
            return Err(Error::InvalidInput(format!("party {} has no instruments", party.name)));
        }
        let m = list[0].n_outcomes();
        if list.iter().any(|i| i.n_outcomes() != m) {
            return Err(Error::InvalidInput(format!(
                "instruments of {} must share an outcome count",
                party.name
            )));
        }
        settings.push(list.len());
        outcomes.push(m);
    }
    let scenario = Scenario::new(
        w.parties().iter().map(|p| p.name.clone()).collect(),
        settings.clone(),
        outcomes,
    )?;
    let mut table = ProbabilityTable::zeros(scenario.clone());
    let no = scenario.n_outcomes();
    for sf in 0..scenario.n_settings() {
        let s = unravel(&settings, sf);
        let chosen: Vec<&crate::choi::Instrument> =
            s.iter().enumerate().map(|(party, &si)| &per_party[party][si]).collect();
        let probs = w.probabilities(&chosen)?;
        table.p[sf * no..(sf + 1) * no].copy_from_slice(&probs);
    }
    Ok(table)
}
