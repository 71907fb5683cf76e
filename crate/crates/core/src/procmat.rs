//! Process matrices: validity, term-type structure, signaling analysis,
//! reduction and conditioning.
//!
//! A process matrix W for parties 1..n lives on the tensor product of every
//! party's CJ space, slot order (1_in, 1_out, 2_in, 2_out, ...). Together
//! with one instrument per party it produces outcome probabilities through
//! `p(j_1..j_n) = Tr[ W (M^1_{j_1} (x) ... (x) M^n_{j_n}) ]`.
//!
//! Expanding W in the per-slot Hilbert-Schmidt basis and classifying each
//! product term by which parties carry a nontrivial factor on their input
//! and output slots yields the term-type calculus: a Hermitian, PSD,
//! correctly normalized W is a valid process matrix iff every present term
//! is of an allowed type (identity, or some party nontrivial on its input
//! and trivial on its output), and signaling possibilities are read off the
//! same classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::choi::{Instrument, PartySpec};
use crate::correlations::CausalConfiguration;
use crate::qlinalg::{
    eig_hermitian, hs_expand_hermitian, ComplexMatrix, HSIndex, Slot, TensorSpace,
};
use crate::{Error, Result, Tolerances};

/// Term type of a Hilbert-Schmidt product term: per party, whether the
/// factor on the input slot and on the output slot is nontrivial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermType {
    /// One `(input_nontrivial, output_nontrivial)` pair per party.
    pub flags: Vec<(bool, bool)>,
}

impl TermType {
    pub fn identity(n_parties: usize) -> Self {
        TermType { flags: vec![(false, false); n_parties] }
    }

    pub fn is_identity(&self) -> bool {
        self.flags.iter().all(|&(i, o)| !i && !o)
    }

    /// Classify the term addressed by a Hilbert-Schmidt index on the
    /// interleaved (in, out, in, out, ...) slot layout.
    pub fn from_hs_index(idx: &HSIndex) -> Self {
        assert!(idx.per_slot.len() % 2 == 0);
        let flags = idx
            .per_slot
            .chunks(2)
            .map(|pair| (pair[0] > 0, pair[1] > 0))
            .collect();
        TermType { flags }
    }

    /// Keep only the listed parties' flags, in the listed order.
    pub fn restrict(&self, parties: &[usize]) -> TermType {
        TermType {
            flags: parties.iter().map(|&p| self.flags[p]).collect(),
        }
    }

    /// Allowed in a valid process matrix: the identity term, or some party
    /// with a nontrivial input factor and a trivial output factor.
    pub fn is_allowed(&self) -> bool {
        self.is_identity() || self.flags.iter().any(|&(i, o)| i && !o)
    }

    /// Human-readable label, e.g. `A1A2B1` or `Id`.
    pub fn label(&self, parties: &[PartySpec]) -> String {
        assert_eq!(parties.len(), self.flags.len());
        let mut s = String::new();
        for (party, &(i, o)) in parties.iter().zip(&self.flags) {
            if i {
                s.push_str(&format!("{}1", party.name));
            }
            if o {
                s.push_str(&format!("{}2", party.name));
            }
        }
        if s.is_empty() {
            s.push_str("Id");
        }
        s
    }
}

/// Every term type expressible for these parties; slots of dimension one
/// can never carry a nontrivial factor.
pub fn all_term_types(parties: &[PartySpec]) -> BTreeSet<TermType> {
    let mut out = BTreeSet::new();
    let n = parties.len();
    let mut stack: Vec<Vec<(bool, bool)>> = vec![vec![]];
    for party in parties.iter().take(n) {
        let mut next = Vec::new();
        for prefix in &stack {
            for i in [false, true] {
                if i && party.d_in == 1 {
                    continue;
                }
                for o in [false, true] {
                    if o && party.d_out == 1 {
                        continue;
                    }
                    let mut ext = prefix.clone();
                    ext.push((i, o));
                    next.push(ext);
                }
            }
        }
        stack = next;
    }
    for flags in stack {
        out.insert(TermType { flags });
    }
    out
}

/// Term types allowed in a valid process matrix for these parties.
pub fn allowed_term_types(parties: &[PartySpec]) -> BTreeSet<TermType> {
    all_term_types(parties).into_iter().filter(TermType::is_allowed).collect()
}

/// Complement of [`allowed_term_types`] within [`all_term_types`].
pub fn forbidden_term_types(parties: &[PartySpec]) -> BTreeSet<TermType> {
    all_term_types(parties)
        .into_iter()
        .filter(|t| !t.is_allowed())
        .collect()
}

/// The interleaved slot space (1_in, 1_out, 2_in, 2_out, ...) for a party
/// list.
pub fn process_space(parties: &[PartySpec]) -> TensorSpace {
    let mut slots = Vec::with_capacity(parties.len() * 2);
    for p in parties {
        slots.push(Slot::new(format!("{}1", p.name), p.d_in));
        slots.push(Slot::new(format!("{}2", p.name), p.d_out));
    }
    TensorSpace::new(slots).expect("positive dims")
}

/// One entry of a term-type report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermWeight {
    pub term_type: String,
    pub max_coefficient: f64,
}

/// Outcome of [`ProcessMatrix::validate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub hermiticity_defect: f64,
    pub hermitian: bool,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub trace: f64,
    pub expected_trace: f64,
    pub trace_ok: bool,
    pub identity_coefficient: f64,
    pub expected_identity_coefficient: f64,
    pub identity_coefficient_ok: bool,
    pub forbidden_terms: Vec<TermWeight>,
    pub passed: bool,
}

/// Outcome of [`ProcessMatrix::no_signaling_matrix`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalingReport {
    pub from: Vec<String>,
    pub to: Vec<String>,
    /// Term types whose restriction onto the sending parties' slots is not
    /// allowed for a process of the senders alone; empty iff no signaling.
    pub offending_terms: Vec<TermWeight>,
    pub no_signaling: bool,
}

/// One violated requirement found by [`ProcessMatrix::fixed_order_compatible`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedOrderViolation {
    /// Parties of the (possibly reduced) process in which the violation sits.
    pub within: Vec<String>,
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub offending_terms: Vec<TermWeight>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedOrderReport {
    pub compatible: bool,
    pub violations: Vec<FixedOrderViolation>,
}

/// A process matrix: party list plus the matrix on the interleaved slots.
#[derive(Debug, Clone)]
pub struct ProcessMatrix {
    parties: Vec<PartySpec>,
    space: TensorSpace,
    matrix: ComplexMatrix,
}

impl ProcessMatrix {
    pub fn new(parties: Vec<PartySpec>, matrix: ComplexMatrix) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::InvalidInput("need at least one party".into()));
        }
        let mut names = BTreeSet::new();
        for p in &parties {
            if p.d_in == 0 || p.d_out == 0 {
                return Err(Error::InvalidInput(format!("party {} has a zero dimension", p.name)));
            }
            if !names.insert(p.name.clone()) {
                return Err(Error::InvalidInput(format!("duplicate party name {}", p.name)));
            }
        }
        let space = process_space(&parties);
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "process matrix must be {d}x{d} for these parties, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(ProcessMatrix { parties, space, matrix })
    }

    pub fn parties(&self) -> &[PartySpec] {
        &self.parties
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn party_index(&self, name: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.name == name)
    }

    /// Product of all input dimensions.
    pub fn d_in_total(&self) -> usize {
        self.parties.iter().map(|p| p.d_in).product()
    }

    /// Product of all output dimensions; this is the trace of a valid W.
    pub fn d_out_total(&self) -> usize {
        self.parties.iter().map(|p| p.d_out).product()
    }

    /// Slot indices (into the interleaved space) of the given parties.
    fn slots_of(&self, parties: &[usize]) -> Vec<usize> {
        let mut v = Vec::with_capacity(parties.len() * 2);
        for &p in parties {
            v.push(2 * p);
            v.push(2 * p + 1);
        }
        v
    }

    fn party_names(&self, idxs: &[usize]) -> Vec<String> {
        idxs.iter().map(|&i| self.parties[i].name.clone()).collect()
    }

    fn complement(&self, of: &[usize]) -> Vec<usize> {
        (0..self.parties.len()).filter(|i| !of.contains(i)).collect()
    }

    /// Term types present with coefficient magnitude above `tol.coeff_zero`,
    /// mapped to the largest absolute coefficient of that type.
    pub fn term_types_present(&self, tol: &Tolerances) -> Result<BTreeMap<TermType, f64>> {
        let w = hs_expand_hermitian(&self.matrix, &self.space)?;
        let mut out: BTreeMap<TermType, f64> = BTreeMap::new();
        for (flat, &coeff) in w.iter().enumerate() {
            if coeff.abs() <= tol.coeff_zero {
                continue;
            }
            let t = TermType::from_hs_index(&HSIndex::from_flat(&self.space, flat));
            let entry = out.entry(t).or_insert(0.0);
            *entry = entry.max(coeff.abs());
        }
        Ok(out)
    }

    /// Full validity check: Hermitian, PSD, trace and identity-coefficient
    /// normalization, and only allowed term types present.
    pub fn validate(&self, tol: &Tolerances) -> Result<ValidationReport> {
        let defect = self.matrix.hermiticity_defect();
        let hermitian = defect <= tol.hermiticity;
        let (eigs, _) = eig_hermitian(&self.matrix)?;
        let min_eigenvalue = eigs.first().copied().unwrap_or(0.0);
        let psd = min_eigenvalue >= -tol.psd_min_eig;
        let trace = self.matrix.trace().re;
        let expected_trace = self.d_out_total() as f64;
        let trace_ok = (trace - expected_trace).abs() <= tol.marginal * expected_trace.max(1.0);
        let w = hs_expand_hermitian(&self.matrix, &self.space)?;
        let identity_coefficient = w[0];
        let expected_identity_coefficient = 1.0 / self.d_in_total() as f64;
        let identity_coefficient_ok =
            (identity_coefficient - expected_identity_coefficient).abs() <= tol.marginal;
        let mut forbidden: BTreeMap<TermType, f64> = BTreeMap::new();
        for (flat, &coeff) in w.iter().enumerate() {
            if coeff.abs() <= tol.coeff_zero {
                continue;
            }
            let t = TermType::from_hs_index(&HSIndex::from_flat(&self.space, flat));
            if !t.is_allowed() {
                let entry = forbidden.entry(t).or_insert(0.0);
                *entry = entry.max(coeff.abs());
            }
        }
        let forbidden_terms: Vec<TermWeight> = forbidden
            .into_iter()
            .map(|(t, w)| TermWeight {
                term_type: t.label(&self.parties),
                max_coefficient: w,
            })
            .collect();
        let passed =
            hermitian && psd && trace_ok && identity_coefficient_ok && forbidden_terms.is_empty();
        Ok(ValidationReport {
            hermiticity_defect: defect,
            hermitian,
            min_eigenvalue,
            psd,
            trace,
            expected_trace,
            trace_ok,
            identity_coefficient,
            expected_identity_coefficient,
            identity_coefficient_ok,
            forbidden_terms,
            passed,
        })
    }

    /// Outcome distribution for one instrument per party, outcomes in
    /// row-major order (party 0 most significant).
    pub fn probabilities(&self, instruments: &[&Instrument]) -> Result<Vec<f64>> {
        if instruments.len() != self.parties.len() {
            return Err(Error::Dimension(format!(
                "need {} instruments, got {}",
                self.parties.len(),
                instruments.len()
            )));
        }
        for (p, ins) in self.parties.iter().zip(instruments) {
            if ins.party.d_in != p.d_in || ins.party.d_out != p.d_out {
                return Err(Error::Dimension(format!(
                    "instrument dimensions for {} do not match the process",
                    p.name
                )));
            }
        }
        let counts: Vec<usize> = instruments.iter().map(|i| i.n_outcomes()).collect();
        let total: usize = counts.iter().product();
        let mut probs = Vec::with_capacity(total);
        for flat in 0..total {
            // decompose flat outcome index, party 0 most significant
            let mut rem = flat;
            let mut idx = vec![0usize; counts.len()];
            for (pos, &c) in counts.iter().enumerate().rev() {
                idx[pos] = rem % c;
                rem /= c;
            }
            let mut op = ComplexMatrix::identity(1);
            for (party_pos, &j) in idx.iter().enumerate() {
                op = crate::qlinalg::kron(&op, &instruments[party_pos].outcomes[j]);
            }
            probs.push(self.matrix.trace_mul(&op).re);
        }
        Ok(probs)
    }

    /// Does W allow signaling from the listed parties to the rest?
    /// No signaling iff every present term restricted onto the senders'
    /// slots is an allowed type for a process of the senders alone.
    pub fn no_signaling_matrix(&self, from: &[usize], tol: &Tolerances) -> Result<SignalingReport> {
        self.check_party_subset(from)?;
        let to = self.complement(from);
        let present = self.term_types_present(tol)?;
        let mut offending = Vec::new();
        for (t, weight) in &present {
            if !t.restrict(from).is_allowed() {
                offending.push(TermWeight {
                    term_type: t.label(&self.parties),
                    max_coefficient: *weight,
                });
            }
        }
        Ok(SignalingReport {
            from: self.party_names(from),
            to: self.party_names(&to),
            no_signaling: offending.is_empty(),
            offending_terms: offending,
        })
    }

    fn check_party_subset(&self, subset: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.parties.len()];
        for &p in subset {
            if p >= self.parties.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidInput(format!("invalid party subset {subset:?}")));
            }
        }
        Ok(())
    }

    /// Reduced process matrix on the kept parties. Defined when the
    /// discarded parties cannot signal to the kept ones; the discarded
    /// slots are traced out and the result divided by the discarded output
    /// dimensions (the reduction plugs the fully depolarizing channel,
    /// whose CJ operator is id/d_out, into every discarded party).
    pub fn reduced_matrix(&self, keep: &[usize], tol: &Tolerances) -> Result<ProcessMatrix> {
        self.check_party_subset(keep)?;
        if keep.is_empty() || keep.len() == self.parties.len() {
            return Err(Error::InvalidInput("keep a nonempty proper subset of parties".into()));
        }
        let discard = self.complement(keep);
        let sig = self.no_signaling_matrix(&discard, tol)?;
        if !sig.no_signaling {
            return Err(Error::Precondition(format!(
                "reduction onto {:?} undefined: signaling from {:?} (terms {:?})",
                sig.to,
                sig.from,
                sig.offending_terms.iter().map(|t| t.term_type.clone()).collect::<Vec<_>>()
            )));
        }
        let (traced, _) = self
            .space
            .partial_trace(&self.matrix, &self.slots_of(&discard))?;
        let divisor: f64 = discard.iter().map(|&p| self.parties[p].d_out as f64).product();
        let kept_parties: Vec<PartySpec> = keep.iter().map(|&p| self.parties[p].clone()).collect();
        ProcessMatrix::new(kept_parties, traced.scale_re(1.0 / divisor))
    }

    /// Condition on one party's CP event (a PSD operator on that party's CJ
    /// space). Requires that the remaining parties cannot signal to the
    /// conditioning party, so the event probability is well defined.
    /// Returns the probability and the conditional process of the others.
    pub fn condition_on_event(
        &self,
        party: usize,
        event: &ComplexMatrix,
        tol: &Tolerances,
    ) -> Result<(f64, ProcessMatrix)> {
        self.check_party_subset(&[party])?;
        if self.parties.len() < 2 {
            return Err(Error::InvalidInput("conditioning needs at least two parties".into()));
        }
        let rest = self.complement(&[party]);
        let sig = self.no_signaling_matrix(&rest, tol)?;
        if !sig.no_signaling {
            return Err(Error::Precondition(format!(
                "conditioning on {} undefined: signaling from {:?}",
                self.parties[party].name, sig.from
            )));
        }
        let d_ev = self.parties[party].d_in * self.parties[party].d_out;
        if event.nrows() != d_ev || event.ncols() != d_ev {
            return Err(Error::Dimension(format!("event must be {d_ev}x{d_ev}")));
        }
        let party_slots = self.slots_of(&[party]);
        let embedded = self.space.embed(event, &party_slots)?;
        let weighted = self.matrix.matmul(&embedded);
        let rest_out: f64 = rest.iter().map(|&p| self.parties[p].d_out as f64).product();
        let p = weighted.trace().re / rest_out;
        if p <= tol.coeff_zero {
            return Err(Error::Precondition(format!(
                "event has vanishing probability ({p:.3e})"
            )));
        }
        let (traced, _) = self.space.partial_trace(&weighted, &party_slots)?;
        let rest_parties: Vec<PartySpec> = rest.iter().map(|&i| self.parties[i].clone()).collect();
        // Hermitize: W and the event are Hermitian but the product picks up
        // numerical asymmetry
        let cond = ProcessMatrix::new(rest_parties, traced.scale_re(1.0 / p).hermitize())?;
        Ok((p, cond))
    }

    /// Tensor an ancillary state onto the process, appending each ancilla
    /// slot to the input of an assigned party. `state` lives on `anc_space`;
    /// `assignment[k]` is the receiving party of ancilla slot k.
    pub fn extend_with_ancilla(
        &self,
        state: &ComplexMatrix,
        anc_space: &TensorSpace,
        assignment: &[usize],
    ) -> Result<ProcessMatrix> {
        if assignment.len() != anc_space.n_slots() {
            return Err(Error::Dimension("one assigned party per ancilla slot".into()));
        }
        let d_anc = anc_space.dim();
        if state.nrows() != d_anc || state.ncols() != d_anc {
            return Err(Error::Dimension(format!("ancilla state must be {d_anc}x{d_anc}")));
        }
        for &p in assignment {
            if p >= self.parties.len() {
                return Err(Error::InvalidInput(format!("party index {p} out of range")));
            }
        }
        let n_old = self.space.n_slots();
        // big space: old slots then ancilla slots
        let mut slots = self.space.slots().to_vec();
        slots.extend(anc_space.slots().iter().cloned());
        let big_space = TensorSpace::new(slots)?;
        let big = crate::qlinalg::kron(&self.matrix, state);
        // new order: for each party, input slot, its ancillas (in ancilla
        // order), output slot
        let mut perm: Vec<usize> = Vec::with_capacity(big_space.n_slots());
        let mut new_parties = Vec::with_capacity(self.parties.len());
        for (p, spec) in self.parties.iter().enumerate() {
            perm.push(2 * p);
            let mut d_in = spec.d_in;
            for (k, &owner) in assignment.iter().enumerate() {
                if owner == p {
                    perm.push(n_old + k);
                    d_in *= anc_space.slot_dim(k);
                }
            }
            perm.push(2 * p + 1);
            new_parties.push(PartySpec::new(spec.name.clone(), d_in, spec.d_out));
        }
        let (reordered, _) = big_space.permute(&big, &perm)?;
        ProcessMatrix::new(new_parties, reordered)
    }

    /// Is W compatible with the given fixed causal configuration?
    /// Checks the signaling restriction (signaling from a set only if some
    /// member precedes an outsider) on the full matrix and on every
    /// well-defined reduced matrix, all at the term-type level.
    pub fn fixed_order_compatible(
        &self,
        config: &CausalConfiguration,
        tol: &Tolerances,
    ) -> Result<FixedOrderReport> {
        let n = self.parties.len();
        if config.n_parties() != n {
            return Err(Error::Dimension("configuration party count mismatch".into()));
        }
        let present: Vec<(TermType, f64)> = self
            .term_types_present(tol)?
            .into_iter()
            .collect();
        let mut violations = Vec::new();

        // enumerate subsets K on which a reduced process is defined
        for k_mask in 1u32..(1u32 << n) {
            let kset: Vec<usize> = (0..n).filter(|i| k_mask >> i & 1 == 1).collect();
            let comp: Vec<usize> = (0..n).filter(|i| k_mask >> i & 1 == 0).collect();
            // reduction defined iff the complement cannot signal into K
            if !comp.is_empty()
                && present.iter().any(|(t, _)| !t.restrict(&comp).is_allowed())
            {
                continue;
            }
            // types present in the reduced matrix on K
            let reduced_types: Vec<(TermType, f64)> = present
                .iter()
                .filter(|(t, _)| t.restrict(&comp).is_identity())
                .map(|(t, w)| (t.clone(), *w))
                .collect();
            // each bipartition (S, K \ S): when no member of S precedes a
            // member of K \ S, signaling from S must be absent
            let k = kset.len();
            if k < 2 {
                continue;
            }
            for s_mask in 1u32..((1u32 << k) - 1) {
                let s: Vec<usize> = (0..k).filter(|i| s_mask >> i & 1 == 1).map(|i| kset[i]).collect();
                let others: Vec<usize> =
                    (0..k).filter(|i| s_mask >> i & 1 == 0).map(|i| kset[i]).collect();
                let may_signal = s
                    .iter()
                    .any(|&x| others.iter().any(|&y| config.precedes(x, y)));
                if may_signal {
                    continue;
                }
                let offending: Vec<TermWeight> = reduced_types
                    .iter()
                    .filter(|(t, _)| !t.restrict(&s).is_allowed())
                    .map(|(t, w)| TermWeight {
                        term_type: t.label(&self.parties),
                        max_coefficient: *w,
                    })
                    .collect();
                if !offending.is_empty() {
                    violations.push(FixedOrderViolation {
                        within: self.party_names(&kset),
                        from: self.party_names(&s),
                        to: self.party_names(&others),
                        offending_terms: offending,
                    });
                }
            }
        }
        Ok(FixedOrderReport { compatible: violations.is_empty(), violations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::measure_prepare;
    use crate::correlations::CausalConfiguration;
    use crate::qlinalg::{hs_reconstruct_real, kron, ComplexMatrix};
    use num_complex::Complex64;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn qubits(n: usize) -> Vec<PartySpec> {
        (0..n)
            .map(|i| PartySpec::new(((b'A' + i as u8) as char).to_string(), 2, 2))
            .collect()
    }

    #[test]
    fn allowed_type_counts() {
        assert_eq!(all_term_types(&qubits(1)).len(), 4);
        assert_eq!(allowed_term_types(&qubits(1)).len(), 2);
        assert_eq!(allowed_term_types(&qubits(2)).len(), 8);
        assert_eq!(allowed_term_types(&qubits(3)).len(), 38);
        for n in 1..=5 {
            let expect = 4usize.pow(n as u32) - 3usize.pow(n as u32) + 1;
            assert_eq!(allowed_term_types(&qubits(n)).len(), expect);
        }
        // a trivial input slot removes the input flag entirely
        let mut parties = qubits(2);
        parties.push(PartySpec::new("C", 1, 2));
        assert_eq!(all_term_types(&parties).len(), 32);
        assert_eq!(allowed_term_types(&parties).len(), 15);
    }

    #[test]
    fn bipartite_forbidden_types_are_the_complement() {
        let parties = qubits(2);
        let allowed = allowed_term_types(&parties);
        let forbidden = forbidden_term_types(&parties);
        assert_eq!(allowed.len() + forbidden.len(), 16);
        assert!(allowed.iter().all(|t| t.is_allowed()));
        assert!(forbidden.iter().all(|t| !t.is_allowed()));
        // both output-only factors and output-heavy mixtures are excluded
        let labels: Vec<String> =
            forbidden.iter().map(|t| t.label(&parties)).collect();
        assert!(labels.contains(&"A2".to_string()));
        assert!(labels.contains(&"B2".to_string()));
        assert!(labels.contains(&"A2B2".to_string()));
    }

    /// The two-way-signaling matrix
    /// `(1/4)[id + (zx z + z z)/sqrt(2)]` used throughout: slots are
    /// (A1, A2, B1, B2), terms `z^{A1} x^{B1} z^{B2}` and `z^{A2} z^{B1}`.
    fn two_way_matrix() -> ProcessMatrix {
        let parties = qubits(2);
        let space = process_space(&parties);
        let mut w = vec![0.0; 256];
        w[HSIndex { per_slot: vec![0, 0, 0, 0] }.to_flat(&space)] = 0.25;
        let a = 0.25 / 2.0_f64.sqrt();
        // basis order per qubit slot: I, x, y, z
        w[HSIndex { per_slot: vec![3, 0, 1, 3] }.to_flat(&space)] = a;
        w[HSIndex { per_slot: vec![0, 3, 3, 0] }.to_flat(&space)] = a;
        let m = hs_reconstruct_real(&w, &space).unwrap();
        ProcessMatrix::new(parties, m).unwrap()
    }

    #[test]
    fn two_way_matrix_is_valid_with_expected_terms() {
        let w = two_way_matrix();
        let report = w.validate(&tol()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!((report.trace - 4.0).abs() < 1e-12);
        assert!((report.identity_coefficient - 0.25).abs() < 1e-12);
        assert!(report.min_eigenvalue > -1e-12);

        let present = w.term_types_present(&tol()).unwrap();
        let mut labels: Vec<(String, f64)> = present
            .iter()
            .map(|(t, &c)| (t.label(w.parties()), c))
            .collect();
        labels.sort_by(|a, b| a.0.cmp(&b.0));
        let a = 0.25 / 2.0_f64.sqrt();
        assert_eq!(labels.len(), 3);
        assert_eq!(labels[0].0, "A1B1B2");
        assert!((labels[0].1 - a).abs() < 1e-12);
        assert_eq!(labels[1].0, "A2B1");
        assert!((labels[1].1 - a).abs() < 1e-12);
        assert_eq!(labels[2].0, "Id");
        assert!((labels[2].1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_way_matrix_signals_both_ways() {
        let w = two_way_matrix();
        let from_a = w.no_signaling_matrix(&[0], &tol()).unwrap();
        assert!(!from_a.no_signaling);
        assert_eq!(from_a.offending_terms.len(), 1);
        assert_eq!(from_a.offending_terms[0].term_type, "A2B1");
        let from_b = w.no_signaling_matrix(&[1], &tol()).unwrap();
        assert!(!from_b.no_signaling);
        assert_eq!(from_b.offending_terms[0].term_type, "A1B1B2");
        // two-way signaling is incompatible with every fixed configuration
        for config in [
            CausalConfiguration::from_precedences(2, &[(0, 1)]).unwrap(),
            CausalConfiguration::from_precedences(2, &[(1, 0)]).unwrap(),
            CausalConfiguration::from_precedences(2, &[]).unwrap(),
        ] {
            assert!(!w.fixed_order_compatible(&config, &tol()).unwrap().compatible);
        }
    }

    /// Identity channel from A to B with input state |0><0|.
    fn identity_channel_process() -> ProcessMatrix {
        let parties = qubits(2);
        let mut rho = ComplexMatrix::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let phi = crate::choi::maximally_entangled(2);
        let m = kron(&kron(&rho, &phi), &ComplexMatrix::identity(2));
        ProcessMatrix::new(parties, m).unwrap()
    }

    #[test]
    fn channel_process_validates_and_signals_one_way() {
        let w = identity_channel_process();
        assert!(w.validate(&tol()).unwrap().passed);
        assert!(!w.no_signaling_matrix(&[0], &tol()).unwrap().no_signaling);
        assert!(w.no_signaling_matrix(&[1], &tol()).unwrap().no_signaling);
        let a_first = CausalConfiguration::from_precedences(2, &[(0, 1)]).unwrap();
        assert!(w.fixed_order_compatible(&a_first, &tol()).unwrap().compatible);
        let b_first = CausalConfiguration::from_precedences(2, &[(1, 0)]).unwrap();
        let rep = w.fixed_order_compatible(&b_first, &tol()).unwrap();
        assert!(!rep.compatible);
        assert!(rep.violations.iter().any(|v| v.from == vec!["A".to_string()]));
    }

    #[test]
    fn reduction_keeps_the_receiver_free_side() {
        let w = identity_channel_process();
        // discarding B is defined: A is left with its input state and a
        // trivial output slot
        let ra = w.reduced_matrix(&[0], &tol()).unwrap();
        let mut rho = ComplexMatrix::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        let expect = kron(&rho, &ComplexMatrix::identity(2));
        assert!(ra.matrix().max_abs_diff(&expect) < 1e-12);
        assert!(ra.validate(&tol()).unwrap().passed);
        // discarding A is undefined: A signals to B
        assert!(matches!(
            w.reduced_matrix(&[1], &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn probabilities_follow_the_wire() {
        let w = identity_channel_process();
        let z: Vec<ComplexMatrix> = (0..2)
            .map(|j| {
                let mut e = ComplexMatrix::zeros(2, 2);
                e[(j, j)] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        // both parties measure z and reprepare the observed basis state
        let ins_a = measure_prepare(&w.parties()[0], &z, &z, &tol()).unwrap();
        let ins_b = measure_prepare(&w.parties()[1], &z, &z, &tol()).unwrap();
        let p = w.probabilities(&[&ins_a, &ins_b]).unwrap();
        // A reads its |0> input, B reads the wire carrying A's outcome
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12 && p[2].abs() < 1e-12 && p[3].abs() < 1e-12);
    }

    fn z_projectors() -> Vec<ComplexMatrix> {
        (0..2)
            .map(|j| {
                let mut e = ComplexMatrix::zeros(2, 2);
                e[(j, j)] = Complex64::new(1.0, 0.0);
                e
            })
            .collect()
    }

    /// Random binary measure-prepare instrument on a (2,2) party.
    fn random_instrument(rng: &mut rand_chacha::ChaCha20Rng, party: &PartySpec) -> Instrument {
        use crate::qlinalg::eig_hermitian;
        use crate::suite::generators::random_psd;
        let g = random_psd(rng, 2, 2);
        let (eigs, _) = eig_hermitian(&g).unwrap();
        let e = g.scale_re(1.0 / (eigs[1] + 0.1));
        let rest = ComplexMatrix::identity(2).add(&e.scale_re(-1.0));
        let preps: Vec<ComplexMatrix> = (0..2)
            .map(|_| {
                let r = random_psd(rng, 2, 2);
                let t = r.trace().re;
                r.scale_re(1.0 / t)
            })
            .collect();
        measure_prepare(party, &[e, rest], &preps, &Tolerances::default()).unwrap()
    }

    /// Random single-outcome unitary-channel instrument on a (2,2) party.
    fn random_unitary_instrument(rng: &mut rand_chacha::ChaCha20Rng, party: &PartySpec) -> Instrument {
        use crate::qlinalg::eig_hermitian;
        use crate::suite::generators::random_psd;
        let (_, u) = eig_hermitian(&random_psd(rng, 2, 2)).unwrap();
        let cj = crate::choi::choi_from_kraus(party, &[u]).unwrap();
        Instrument::new(party.clone(), vec![cj.matrix]).unwrap()
    }

    #[test]
    fn probabilities_normalize_for_random_instruments() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(314);
        let mut processes = vec![two_way_matrix(), identity_channel_process()];
        for _ in 0..2 {
            processes.push(crate::suite::generators::random_bipartite_separable(&mut rng));
        }
        for w in &processes {
            for draw in 0..6 {
                let instruments: Vec<Instrument> = w
                    .parties()
                    .iter()
                    .map(|party| {
                        if draw % 2 == 0 {
                            random_instrument(&mut rng, party)
                        } else {
                            random_unitary_instrument(&mut rng, party)
                        }
                    })
                    .collect();
                let refs: Vec<&Instrument> = instruments.iter().collect();
                let p = w.probabilities(&refs).unwrap();
                let total: f64 = p.iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "draw {draw}: total {total}");
                assert!(p.iter().all(|&v| v > -1e-10));
            }
        }
    }

    #[test]
    fn ancilla_extension_preserves_statistics() {
        use crate::choi::maximally_entangled;
        use crate::qlinalg::{Slot, TensorSpace};
        use crate::suite::generators::random_psd;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(59);
        let w = two_way_matrix();
        let z = z_projectors();
        let ins_a = measure_prepare(&w.parties()[0], &z, &z, &tol()).unwrap();
        let ins_b = measure_prepare(&w.parties()[1], &z, &z, &tol()).unwrap();
        let base = w.probabilities(&[&ins_a, &ins_b]).unwrap();

        // one random ancilla qubit handed to B
        let rho = {
            let r = random_psd(&mut rng, 2, 2);
            let t = r.trace().re;
            r.scale_re(1.0 / t)
        };
        let anc = TensorSpace::new(vec![Slot::new("B1p", 2)]).unwrap();
        let ext = w.extend_with_ancilla(&rho, &anc, &[1]).unwrap();
        assert!(ext.validate(&tol()).unwrap().passed);
        let wide: Vec<ComplexMatrix> = z.iter().map(|e| kron(e, &ComplexMatrix::identity(2))).collect();
        let ins_b_ext = measure_prepare(&ext.parties()[1], &wide, &z, &tol()).unwrap();
        let p = ext.probabilities(&[&ins_a, &ins_b_ext]).unwrap();
        for (a, b) in p.iter().zip(&base) {
            assert!((a - b).abs() < 1e-10);
        }

        // an entangled ancilla pair shared between A and B
        let pair = TensorSpace::new(vec![Slot::new("A1p", 2), Slot::new("B1p", 2)]).unwrap();
        let phi = maximally_entangled(2).scale_re(0.5);
        let ext2 = w.extend_with_ancilla(&phi, &pair, &[0, 1]).unwrap();
        assert!(ext2.validate(&tol()).unwrap().passed);
        let ins_a_ext = measure_prepare(&ext2.parties()[0], &wide, &z, &tol()).unwrap();
        let ins_b_ext2 = measure_prepare(&ext2.parties()[1], &wide, &z, &tol()).unwrap();
        let p2 = ext2.probabilities(&[&ins_a_ext, &ins_b_ext2]).unwrap();
        for (a, b) in p2.iter().zip(&base) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn no_signaling_matches_statistics() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(2718);

        // forward: B cannot signal through the A-to-B wire, so A's
        // marginal ignores B's instrument choice
        let w = identity_channel_process();
        assert!(w.no_signaling_matrix(&[1], &tol()).unwrap().no_signaling);
        let z = z_projectors();
        let ins_a = measure_prepare(&w.parties()[0], &z, &z, &tol()).unwrap();
        let mut reference: Option<Vec<f64>> = None;
        for _ in 0..50 {
            let ins_b = random_instrument(&mut rng, &w.parties()[1]);
            let p = w.probabilities(&[&ins_a, &ins_b]).unwrap();
            let marginal: Vec<f64> = (0..2).map(|a| p[2 * a] + p[2 * a + 1]).collect();
            match &reference {
                None => reference = Some(marginal),
                Some(m) => {
                    for (x, y) in marginal.iter().zip(m) {
                        assert!((x - y).abs() < 1e-9);
                    }
                }
            }
        }

        // converse: a term whose restriction onto B is forbidden admits a
        // CPTP perturbation of B's channel that moves A's marginal
        let w = two_way_matrix();
        assert!(!w.no_signaling_matrix(&[1], &tol()).unwrap().no_signaling);
        let sx = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let sz = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let trash = ComplexMatrix::identity(4).scale_re(0.5);
        let tilted = trash.add(&kron(&sx, &sz).scale_re(0.25));
        let b0 = Instrument::new(w.parties()[1].clone(), vec![trash]).unwrap();
        let b1 = Instrument::new(w.parties()[1].clone(), vec![tilted]).unwrap();
        let p0 = w.probabilities(&[&ins_a, &b0]).unwrap();
        let p1 = w.probabilities(&[&ins_a, &b1]).unwrap();
        let shift = (0..2).map(|a| (p0[a] - p1[a]).abs()).fold(0.0f64, f64::max);
        assert!(shift >= 1e-3, "marginal shift {shift}");
    }
}
