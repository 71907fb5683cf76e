//! Choi-Jamiolkowski (CJ) representation of quantum instruments.
//!
//! A party's operation with input space X1 (dimension `d_in`) and output
//! space X2 (dimension `d_out`) is represented by its CJ operator on
//! X1 (x) X2, defined as `[ (id (x) M)(|phi+><phi+|) ]^T` where
//! `|phi+> = sum_j |j>|j>` is unnormalized and the transpose is taken in the
//! fixed computational product basis. A map is completely positive iff its
//! CJ operator is PSD, and trace preserving iff the partial trace over X2
//! equals the identity on X1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qlinalg::{eig_hermitian, ComplexMatrix, Slot, TensorSpace};
use crate::{Error, Result, Tolerances};

/// A party's local laboratory: input and output dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySpec {
    pub name: String,
    pub d_in: usize,
    pub d_out: usize,
}

impl PartySpec {
    pub fn new(name: impl Into<String>, d_in: usize, d_out: usize) -> Self {
        PartySpec { name: name.into(), d_in, d_out }
    }

    /// The CJ tensor space (X1, X2) with labels `<name>1`, `<name>2`.
    pub fn cj_space(&self) -> TensorSpace {
        TensorSpace::new(vec![
            Slot::new(format!("{}1", self.name), self.d_in),
            Slot::new(format!("{}2", self.name), self.d_out),
        ])
        .expect("positive dims")
    }
}

/// CJ operator of a single completely positive map.
#[derive(Debug, Clone)]
pub struct CJOperator {
    pub party: PartySpec,
    pub matrix: ComplexMatrix,
}

impl CJOperator {
    pub fn new(party: PartySpec, matrix: ComplexMatrix) -> Result<Self> {
        let d = party.d_in * party.d_out;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "CJ operator for {} must be {d}x{d}",
                party.name
            )));
        }
        Ok(CJOperator { party, matrix })
    }

    /// Complete positivity: the CJ operator is PSD (within tolerance).
    pub fn is_cp(&self, tol: &Tolerances) -> Result<bool> {
        if !self.matrix.is_hermitian(tol.hermiticity) {
            return Ok(false);
        }
        let (w, _) = eig_hermitian(&self.matrix)?;
        Ok(w.first().map_or(true, |&lo| lo >= -tol.psd_min_eig))
    }

    /// Trace over the output slot, an operator on X1.
    pub fn trace_out(&self) -> Result<ComplexMatrix> {
        let space = self.party.cj_space();
        let (m, _) = space.partial_trace(&self.matrix, &[1])?;
        Ok(m)
    }
}

/// Whether a CJ operator is the representation of a CPTP map:
/// PSD and `Tr_X2 M = id_X1`.
pub fn is_cptp(cj: &CJOperator, tol: &Tolerances) -> Result<bool> {
    if !cj.is_cp(tol)? {
        return Ok(false);
    }
    let reduced = cj.trace_out()?;
    Ok(reduced.max_abs_diff(&ComplexMatrix::identity(cj.party.d_in)) <= tol.marginal)
}

/// An instrument: one CP map per outcome, summing to a CPTP map.
#[derive(Debug, Clone)]
pub struct Instrument {
    pub party: PartySpec,
    pub outcomes: Vec<ComplexMatrix>,
}

impl Instrument {
    pub fn new(party: PartySpec, outcomes: Vec<ComplexMatrix>) -> Result<Self> {
        let d = party.d_in * party.d_out;
        if outcomes.is_empty() {
            return Err(Error::InvalidInput("instrument needs at least one outcome".into()));
        }
        for m in &outcomes {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension(format!(
                    "outcome CJ operator for {} must be {d}x{d}",
                    party.name
                )));
            }
        }
        Ok(Instrument { party, outcomes })
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    /// Sum of all outcome CJ operators.
    pub fn total(&self) -> ComplexMatrix {
        let mut acc = self.outcomes[0].clone();
        for m in &self.outcomes[1..] {
            acc.add_assign(m);
        }
        acc
    }

    /// Every outcome CP, and the total CPTP.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        for (j, m) in self.outcomes.iter().enumerate() {
            let cj = CJOperator::new(self.party.clone(), m.clone())?;
            if !cj.is_cp(tol)? {
                return Err(Error::InvalidInput(format!(
                    "outcome {j} of instrument for {} is not completely positive",
                    self.party.name
                )));
            }
        }
        let total = CJOperator::new(self.party.clone(), self.total())?;
        if !is_cptp(&total, tol)? {
            return Err(Error::InvalidInput(format!(
                "instrument for {} does not sum to a CPTP map",
                self.party.name
            )));
        }
        Ok(())
    }
}

/// Unnormalized maximally entangled projector `|phi+><phi+|` on d (x) d,
/// `|phi+> = sum_j |jj>`.
pub fn maximally_entangled(d: usize) -> ComplexMatrix {
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        v[j * d + j] = Complex64::new(1.0, 0.0);
    }
    ComplexMatrix::outer(&v, &v)
}

/// CJ operator of the CP map with the given Kraus operators
/// (each `d_out x d_in`).
pub fn choi_from_kraus(party: &PartySpec, kraus: &[ComplexMatrix]) -> Result<CJOperator> {
    if kraus.is_empty() {
        return Err(Error::InvalidInput("need at least one Kraus operator".into()));
    }
    let (din, dout) = (party.d_in, party.d_out);
    for k in kraus {
        if k.nrows() != dout || k.ncols() != din {
            return Err(Error::Dimension(format!(
                "Kraus operators for {} must be {dout}x{din}",
                party.name
            )));
        }
    }
    let d = din * dout;
    let mut acc = ComplexMatrix::zeros(d, d);
    for k in kraus {
        // (id (x) K) |phi+> = sum_j |j> (x) K|j>
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        for j in 0..din {
            for o in 0..dout {
                v[j * dout + o] = k[(o, j)];
            }
        }
        acc.add_assign(&ComplexMatrix::outer(&v, &v));
    }
    CJOperator::new(party.clone(), acc.transpose())
}

/// Measure-and-reprepare instrument: POVM `{E_j}` on the input, outcome j
/// repreparing the state `rho_j` on the output. The CJ operator of outcome j
/// is `E_j (x) rho_j^T`.
pub fn measure_prepare(
    party: &PartySpec,
    povm: &[ComplexMatrix],
    preparations: &[ComplexMatrix],
    tol: &Tolerances,
) -> Result<Instrument> {
    if povm.len() != preparations.len() || povm.is_empty() {
        return Err(Error::InvalidInput(
            "POVM and preparation lists must be nonempty and equal length".into(),
        ));
    }
    let mut sum = ComplexMatrix::zeros(party.d_in, party.d_in);
    for e in povm {
        if e.nrows() != party.d_in || e.ncols() != party.d_in {
            return Err(Error::Dimension("POVM element has wrong shape".into()));
        }
        let (w, _) = eig_hermitian(e)?;
        if !e.is_hermitian(tol.hermiticity) || w.first().map_or(false, |&lo| lo < -tol.psd_min_eig) {
            return Err(Error::InvalidInput("POVM element is not PSD".into()));
        }
        sum.add_assign(e);
    }
    if sum.max_abs_diff(&ComplexMatrix::identity(party.d_in)) > tol.marginal {
        return Err(Error::InvalidInput("POVM does not sum to the identity".into()));
    }
    for rho in preparations {
        if rho.nrows() != party.d_out || rho.ncols() != party.d_out {
            return Err(Error::Dimension("preparation has wrong shape".into()));
        }
        if (rho.trace().re - 1.0).abs() > tol.marginal || rho.trace().im.abs() > tol.marginal {
            return Err(Error::InvalidInput("preparation must have unit trace".into()));
        }
        let (w, _) = eig_hermitian(rho)?;
        if !rho.is_hermitian(tol.hermiticity) || w.first().map_or(false, |&lo| lo < -tol.psd_min_eig) {
            return Err(Error::InvalidInput("preparation is not PSD".into()));
        }
    }
    let outcomes = povm
        .iter()
        .zip(preparations)
        .map(|(e, rho)| crate::qlinalg::kron(e, &rho.transpose()))
        .collect();
    Instrument::new(party.clone(), outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::kron;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn qubit_party() -> PartySpec {
        PartySpec::new("X", 2, 2)
    }

    fn ket(amplitudes: &[(f64, f64)]) -> Vec<Complex64> {
        amplitudes.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
    }

    #[test]
    fn identity_channel_is_phi_plus() {
        let party = qubit_party();
        let id = ComplexMatrix::identity(2);
        let cj = choi_from_kraus(&party, &[id]).unwrap();
        // phi+ has real entries, so the transpose acts trivially
        assert!(cj.matrix.max_abs_diff(&maximally_entangled(2)) < 1e-14);
        assert!(is_cptp(&cj, &tol()).unwrap());
    }

    #[test]
    fn trace_and_prepare_channel() {
        let party = qubit_party();
        let k0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let k1 = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let cj = choi_from_kraus(&party, &[k0, k1]).unwrap();
        let zero = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let expect = kron(&ComplexMatrix::identity(2), &zero);
        assert!(cj.matrix.max_abs_diff(&expect) < 1e-14);
        assert!(is_cptp(&cj, &tol()).unwrap());
    }

    #[test]
    fn measure_prepare_matches_kraus_construction() {
        // measure-prepare map sigma -> Tr(E sigma) rho has Kraus
        // sqrt(lambda_l) sqrt(mu_m) |v_l><u_m| over eigenpairs
        let party = qubit_party();
        // E = |y+><y+|, rho = |y-><y-| to exercise complex entries
        let yp = ket(&[(1.0 / 2f64.sqrt(), 0.0), (0.0, 1.0 / 2f64.sqrt())]);
        let ym = ket(&[(1.0 / 2f64.sqrt(), 0.0), (0.0, -1.0 / 2f64.sqrt())]);
        let e_plus = ComplexMatrix::outer(&yp, &yp);
        let e_minus = ComplexMatrix::outer(&ym, &ym);
        let rho_p = ComplexMatrix::outer(&ym, &ym);
        let rho_m = ComplexMatrix::outer(&yp, &yp);
        let instr = measure_prepare(&party, &[e_plus, e_minus], &[rho_p.clone(), rho_m], &tol()).unwrap();
        instr.validate(&tol()).unwrap();

        // Kraus for outcome 0: |y-><y+|
        let mut kmat = ComplexMatrix::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                kmat[(r, c)] = ym[r] * yp[c].conj();
            }
        }
        let via_kraus = choi_from_kraus(&party, &[kmat]).unwrap();
        assert!(instr.outcomes[0].max_abs_diff(&via_kraus.matrix) < 1e-13);
    }

    #[test]
    fn born_rule_with_complex_povm() {
        // single party W = rho_in (x) id_out; p(j) must be Tr(rho E_j)
        let party = qubit_party();
        let yp = ket(&[(1.0 / 2f64.sqrt(), 0.0), (0.0, 1.0 / 2f64.sqrt())]);
        let ym = ket(&[(1.0 / 2f64.sqrt(), 0.0), (0.0, -1.0 / 2f64.sqrt())]);
        let e0 = ComplexMatrix::outer(&yp, &yp);
        let e1 = ComplexMatrix::outer(&ym, &ym);
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        let instr = measure_prepare(&party, &[e0.clone(), e1], &[half.clone(), half], &tol()).unwrap();
        let rho = ComplexMatrix::outer(&yp, &yp); // rho = |y+><y+|
        let w = kron(&rho, &ComplexMatrix::identity(2));
        let p0 = w.trace_mul(&instr.outcomes[0]).re;
        let p1 = w.trace_mul(&instr.outcomes[1]).re;
        assert!((p0 - 1.0).abs() < 1e-12, "p0 = {p0}");
        assert!(p1.abs() < 1e-12, "p1 = {p1}");
    }

    #[test]
    fn unitary_probe() {
        // sigma_x channel on |0> input: W = |0><0| (x) id probes the output
        let party = qubit_party();
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let cj = choi_from_kraus(&party, &[x]).unwrap();
        assert!(is_cptp(&cj, &tol()).unwrap());
        let zero = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let one = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        // Tr[(rho_in (x) P_out) M] = <out| U rho U |out>
        let p = kron(&zero, &one).trace_mul(&cj.matrix).re;
        assert!((p - 1.0).abs() < 1e-13);
        let p2 = kron(&zero, &zero).trace_mul(&cj.matrix).re;
        assert!(p2.abs() < 1e-13);
    }

    fn pseudo_random(seed: u64, nrows: usize, ncols: usize) -> ComplexMatrix {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(7);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = ComplexMatrix::zeros(nrows, ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                m[(r, c)] = Complex64::new(next(), next());
            }
        }
        m
    }

    #[test]
    fn random_kraus_cp_and_tp_detection() {
        use crate::qlinalg::eig_hermitian;
        let party = qubit_party();
        for seed in 0..8u64 {
            let raw: Vec<ComplexMatrix> =
                (0..2 + (seed % 2) as usize).map(|k| pseudo_random(seed * 5 + k as u64, 2, 2)).collect();
            // complete positivity holds for any Kraus list
            let cj = choi_from_kraus(&party, &raw).unwrap();
            let (eigs, _) = eig_hermitian(&cj.matrix).unwrap();
            assert!(eigs[0] > -1e-10, "seed {seed}: CJ not PSD");
            // arbitrary lists are generically not trace preserving
            let mut s = ComplexMatrix::zeros(2, 2);
            for e in &raw {
                s.add_assign(&e.dagger().matmul(e));
            }
            let is_tp = s.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-9;
            assert_eq!(is_cptp(&cj, &tol()).unwrap(), is_tp, "seed {seed}");
            // normalizing by (sum E^dag E)^(-1/2) restores the TP condition
            let (sw, sv) = eig_hermitian(&s).unwrap();
            let mut inv_sqrt = ComplexMatrix::zeros(2, 2);
            for (i, &l) in sw.iter().enumerate() {
                assert!(l > 1e-12, "seed {seed}: singular normalizer");
                let col: Vec<Complex64> = (0..2).map(|r| sv[(r, i)]).collect();
                let proj = ComplexMatrix::outer(&col, &col);
                inv_sqrt.add_assign(&proj.scale_re(1.0 / l.sqrt()));
            }
            let fixed: Vec<ComplexMatrix> = raw.iter().map(|e| e.matmul(&inv_sqrt)).collect();
            let cj_fixed = choi_from_kraus(&party, &fixed).unwrap();
            assert!(is_cptp(&cj_fixed, &tol()).unwrap(), "seed {seed}");
        }
    }
}
