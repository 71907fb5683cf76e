//! Reference processes and end-to-end analysis pipelines: a two-party
//! process that violates a causal inequality, a three-party causal
//! extension of it whose non-causality is activated by shared
//! entanglement, and the quantum-switch process, which is causal but not
//! causally separable.
//!
//! Constructors are deterministic closed forms; pipelines compose the
//! library checks into serializable pass/fail reports.

use crate::choi::{choi_from_kraus, maximally_entangled, measure_prepare, Instrument, PartySpec};
use crate::convexsep::{
    bipartite_causal_sep, rank1_nonseparability_certificate, FeasibilityStatus,
};
use crate::correlations::{table_from_process, Scenario};
use crate::polytope::{
    causal_bound, causal_membership, causal_membership_exact, optimize_quantum_value, Game,
    SeesawOptions,
};
use crate::procmat::{process_space, ProcessMatrix};
use crate::qlinalg::{eig_hermitian, kron, ComplexMatrix, TensorSpace};
use crate::suite::generators;
use crate::{Error, Result, Tolerances};
use num_complex::Complex64;
use serde::Serialize;

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn sigma(k: usize) -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let entries = match k {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("Pauli index 0..4"),
    };
    let mut m = ComplexMatrix::zeros(2, 2);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = entries[r * 2 + c];
        }
    }
    m
}

fn kron_chain(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

/// Two qubit-in/qubit-out parties.
pub fn two_qubit_parties() -> Vec<PartySpec> {
    vec![PartySpec::new("A", 2, 2), PartySpec::new("B", 2, 2)]
}

/// The two-party two-way-signaling process
/// `(1/4)(I + (1/sqrt2) z^{A1} x^{B1} z^{B2} + (1/sqrt2) z^{A2} z^{B1})`:
/// a valid process matrix (the two traceless terms anticommute, so their
/// sum squares to the identity) that violates the causal bound of the
/// guess-your-neighbour game below.
pub fn ocb_process() -> ProcessMatrix {
    let id = sigma(0);
    let sx = sigma(1);
    let sz = sigma(3);
    let mut m = ComplexMatrix::identity(16);
    m.add_assign(&kron_chain(&[&sz, &id, &sx, &sz]).scale_re(INV_SQRT2));
    m.add_assign(&kron_chain(&[&id, &sz, &sz, &id]).scale_re(INV_SQRT2));
    ProcessMatrix::new(two_qubit_parties(), m.scale_re(0.25)).expect("fixed dims")
}

/// The communication game the process above wins too often: Alice gets a
/// uniform bit x, Bob a uniform setting pair (y, y'). For y' = 0 Bob must
/// output b = x; for y' = 1 Alice must output a = y. Bob's flat setting
/// index is `2 y' + y`; all eight setting combinations are equally likely.
pub fn ocb_game() -> Game {
    let scenario = Scenario::new(
        vec!["A".into(), "B".into()],
        vec![2, 4],
        vec![2, 2],
    )
    .expect("fixed scenario");
    let ns = scenario.n_settings();
    let no = scenario.n_outcomes();
    let mut payoff = vec![0.0; ns * no];
    for x in 0..2usize {
        for yp in 0..2usize {
            for y in 0..2usize {
                let s_flat = x * 4 + (2 * yp + y);
                for a in 0..2usize {
                    for b in 0..2usize {
                        let win = if yp == 0 { b == x } else { a == y };
                        if win {
                            payoff[s_flat * no + (a * 2 + b)] = 1.0;
                        }
                    }
                }
            }
        }
    }
    Game { scenario, payoff, setting_distribution: vec![1.0 / 8.0; ns] }
}

/// Three-party extension of the two-way-signaling process in which
/// Charlie has a trivial input and a qubit output:
/// `(1/4)(I + (1/sqrt2) z^{A1} z^{B1} z^{B2} x^{C2} + (1/sqrt2) z^{A2} z^{B1} z^{C2})`.
/// No party set containing Charlie's output can reach Charlie, and every
/// conditional bipartite process left after a Charlie event is diagonal
/// in local z bases, hence causally separable.
pub fn ocb_tripartite() -> ProcessMatrix {
    let id = sigma(0);
    let sx = sigma(1);
    let sz = sigma(3);
    let one = ComplexMatrix::identity(1);
    let mut m = ComplexMatrix::identity(32);
    m.add_assign(
        &kron_chain(&[&sz, &id, &sz, &sz, &one, &sx]).scale_re(INV_SQRT2),
    );
    m.add_assign(
        &kron_chain(&[&id, &sz, &sz, &id, &one, &sz]).scale_re(INV_SQRT2),
    );
    let parties = vec![
        PartySpec::new("A", 2, 2),
        PartySpec::new("B", 2, 2),
        PartySpec::new("C", 1, 2),
    ];
    ProcessMatrix::new(parties, m.scale_re(0.25)).expect("fixed dims")
}

/// The tripartite process extended with a shared maximally entangled
/// input state, one half to Charlie and one half appended to Bob's input.
pub fn ocb_tripartite_extended() -> ProcessMatrix {
    let base = ocb_tripartite();
    let anc_space = TensorSpace::new(vec![
        crate::qlinalg::Slot::new("C1'", 2),
        crate::qlinalg::Slot::new("B1'", 2),
    ])
    .expect("fixed slots");
    let state = maximally_entangled(2).scale_re(0.5);
    base.extend_with_ancilla(&state, &anc_space, &[2, 1]).expect("fixed layout")
}

/// Bipartite process left for Alice and Bob after Charlie's
/// entanglement-swapping event on the extended process: Bob's input is
/// the pair (B1, B1') and
/// `W = (1/8)(I + (1/sqrt2) z^{A1} z^{B1} x^{B1'} z^{B2} + (1/sqrt2) z^{A2} z^{B1} z^{B1'})`.
pub fn wocb2_process() -> ProcessMatrix {
    let id = sigma(0);
    let sx = sigma(1);
    let sz = sigma(3);
    let mut m = ComplexMatrix::identity(32);
    m.add_assign(&kron_chain(&[&sz, &id, &kron(&sz, &sx), &sz]).scale_re(INV_SQRT2));
    m.add_assign(&kron_chain(&[&id, &sz, &kron(&sz, &sz), &id]).scale_re(INV_SQRT2));
    let parties = vec![PartySpec::new("A", 2, 2), PartySpec::new("B", 4, 2)];
    ProcessMatrix::new(parties, m.scale_re(1.0 / 8.0)).expect("fixed dims")
}

/// Input state for the switch process; the control is fixed to the
/// balanced superposition.
#[derive(Debug, Clone)]
pub struct SwitchParams {
    psi: [Complex64; 2],
}

impl SwitchParams {
    pub fn new(psi: [Complex64; 2]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("switch input state must be normalized".into()));
        }
        Ok(SwitchParams { psi })
    }

    /// Computational-basis input |0>.
    pub fn zero() -> Self {
        SwitchParams { psi: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)] }
    }

    /// Balanced superposition input.
    pub fn plus() -> Self {
        let a = Complex64::new(INV_SQRT2, 0.0);
        SwitchParams { psi: [a, a] }
    }

    pub fn psi(&self) -> &[Complex64; 2] {
        &self.psi
    }
}

/// Parties of the switch process: two qubit-in/qubit-out parties and a
/// third with a four-dimensional input (control tensor system, control
/// first) and a trivial output.
pub fn switch_parties() -> Vec<PartySpec> {
    vec![
        PartySpec::new("A", 2, 2),
        PartySpec::new("B", 2, 2),
        PartySpec::new("C", 4, 1),
    ]
}

/// The switch process: a rank-one projector |w><w| where, with an
/// unnormalized pair state |phi> = |00> + |11>,
/// `|w> = (|0>^{C1 ctrl} |psi>^{A1} |phi>^{A2 B1} |phi>^{B2 C1 sys}
///       + |1>^{C1 ctrl} |psi>^{B1} |phi>^{B2 A1} |phi>^{A2 C1 sys}) / sqrt2`.
/// The system crosses the two parties in an order entangled with the
/// control qubit that the third party finally receives.
pub fn switch_process(params: &SwitchParams) -> ProcessMatrix {
    let psi = params.psi;
    let mut v = vec![Complex64::new(0.0, 0.0); 64];
    // slot order (A1, A2, B1, B2, C1); C1 index = 2*control + system
    let flat = |a1: usize, a2: usize, b1: usize, b2: usize, c: usize| {
        (((a1 * 2 + a2) * 2 + b1) * 2 + b2) * 4 + c
    };
    for a1 in 0..2 {
        for a2 in 0..2 {
            for b1 in 0..2 {
                for b2 in 0..2 {
                    for cc in 0..2 {
                        for cs in 0..2 {
                            let mut amp = Complex64::new(0.0, 0.0);
                            if cc == 0 && a2 == b1 && b2 == cs {
                                amp += psi[a1];
                            }
                            if cc == 1 && b2 == a1 && a2 == cs {
                                amp += psi[b1];
                            }
                            if amp.norm_sqr() > 0.0 {
                                v[flat(a1, a2, b1, b2, 2 * cc + cs)] +=
                                    amp * INV_SQRT2;
                            }
                        }
                    }
                }
            }
        }
    }
    let m = ComplexMatrix::outer(&v, &v);
    ProcessMatrix::new(switch_parties(), m).expect("fixed dims")
}

/// Closed form of the switch reduced to the first two parties: an equal
/// mixture of the two fixed orders,
/// `(1/2)(psi^{A1} phi^{A2 B1} I^{B2} + psi^{B1} phi^{B2 A1} I^{A2})`
/// with `phi` the unnormalized pair projector.
pub fn switch_separable_reduction(params: &SwitchParams) -> ProcessMatrix {
    let psi_proj = {
        let v = params.psi.to_vec();
        ComplexMatrix::outer(&v, &v)
    };
    let phi = maximally_entangled(2);
    let space = process_space(&two_qubit_parties());
    let id2 = ComplexMatrix::identity(2);
    let first_a = space
        .embed(&psi_proj, &[0])
        .unwrap()
        .matmul(&space.embed(&phi, &[1, 2]).unwrap());
    let first_b = space
        .embed(&psi_proj, &[2])
        .unwrap()
        .matmul(&space.embed(&phi, &[0, 3]).unwrap())
        .matmul(&space.embed(&id2, &[1]).unwrap());
    let m = first_a.add(&first_b).scale_re(0.5).hermitize();
    ProcessMatrix::new(two_qubit_parties(), m).expect("fixed dims")
}

/// Probability that the third party's control measurement in the +/-
/// basis returns [plus, minus] when the first two parties apply the
/// given unitaries inside the switch. Commuting unitaries leave the
/// control in +, anticommuting ones in -.
pub fn commutation_probe(
    w: &ProcessMatrix,
    u_a: &ComplexMatrix,
    u_b: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<[f64; 2]> {
    let qubit = PartySpec::new("U", 2, 2);
    let inst_a = Instrument::new(
        w.parties()[0].clone(),
        vec![choi_from_kraus(&qubit, std::slice::from_ref(u_a))?.matrix],
    )?;
    let inst_b = Instrument::new(
        w.parties()[1].clone(),
        vec![choi_from_kraus(&qubit, std::slice::from_ref(u_b))?.matrix],
    )?;
    let id2 = ComplexMatrix::identity(2);
    let plus = sigma(0).add(&sigma(1)).scale_re(0.5);
    let minus = sigma(0).add(&sigma(1).scale_re(-1.0)).scale_re(0.5);
    let povm = vec![kron(&plus, &id2), kron(&minus, &id2)];
    let trivial_prep = vec![ComplexMatrix::identity(1), ComplexMatrix::identity(1)];
    let inst_c = measure_prepare(&w.parties()[2], &povm, &trivial_prep, tol)?;
    let p = w.probabilities(&[&inst_a, &inst_b, &inst_c])?;
    Ok([p[0], p[1]])
}

/// One named check inside a pipeline report.
#[derive(Debug, Clone, Serialize)]
pub struct StageOutcome {
    pub stage: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of an end-to-end reproduction pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub name: String,
    pub stages: Vec<StageOutcome>,
    pub passed: bool,
    pub verdict: String,
}

impl PipelineReport {
    fn new(name: &str) -> Self {
        PipelineReport {
            name: name.into(),
            stages: Vec::new(),
            passed: true,
            verdict: String::new(),
        }
    }

    fn stage(&mut self, stage: &str, passed: bool, detail: String) {
        self.stages.push(StageOutcome { stage: stage.into(), passed, detail });
        self.passed &= passed;
    }

    fn finish(mut self, verdict_pass: &str) -> Self {
        self.verdict = if self.passed {
            verdict_pass.into()
        } else {
            let failed: Vec<&str> = self
                .stages
                .iter()
                .filter(|s| !s.passed)
                .map(|s| s.stage.as_str())
                .collect();
            format!("failed at: {}", failed.join(", "))
        };
        self
    }
}

/// Validate the two-party process, bound its game causally (exactly
/// 3/4), optimize a quantum strategy on it past the bound, and reject
/// the optimized correlations from the causal polytope.
pub fn ocb_pipeline(seed: u64, tol: &Tolerances) -> Result<PipelineReport> {
    let mut rep = PipelineReport::new("ocb");
    let w = ocb_process();
    let v = w.validate(tol)?;
    rep.stage("validate", v.passed, format!("min eigenvalue {:.3e}", v.min_eigenvalue));

    let game = ocb_game();
    let bound = causal_bound(&game)?;
    let exact = bound.exact.to_string();
    rep.stage(
        "causal-bound",
        exact == "3/4",
        format!("exact {exact}, float {:.12}", bound.value),
    );

    let opts = SeesawOptions { seed, ..SeesawOptions::default() };
    let seesaw = optimize_quantum_value(&w, &game, &opts, tol)?;
    let quantum_max = (2.0 + std::f64::consts::SQRT_2) / 4.0;
    rep.stage(
        "seesaw",
        seesaw.value >= 0.85 && seesaw.value <= quantum_max + 1e-9,
        format!(
            "value {:.12} in {} sweeps (analytic optimum {:.12})",
            seesaw.value, seesaw.sweeps_used, quantum_max
        ),
    );

    let table = table_from_process(&w, &seesaw.instruments)?;
    let membership = causal_membership(&table, tol)?;
    let exact_membership = causal_membership_exact(&table)?;
    rep.stage(
        "reject-from-causal-polytope",
        !membership.causal && !exact_membership.causal && exact_membership.farkas_checked,
        format!(
            "infeasibility gap {:.3e}, exact gap {}, Farkas checked {}",
            membership.infeasibility_gap, exact_membership.gap, exact_membership.farkas_checked
        ),
    );

    Ok(rep.finish(
        "valid process; causal bound 3/4; quantum strategy beats the bound; correlations outside the causal polytope",
    ))
}

/// Charlie-event battery for the tripartite process: random completely
/// positive events on Charlie leave Alice and Bob a z-diagonal, causally
/// separable bipartite process.
fn charlie_event_battery(
    rep: &mut PipelineReport,
    w: &ProcessMatrix,
    seed: u64,
    n_events: usize,
    tol: &Tolerances,
) -> Result<()> {
    let mut rng = generators::rng(seed);
    let mut worst_offdiag = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut all_ok = true;
    for _ in 0..n_events {
        use rand::Rng;
        let raw = generators::random_psd(&mut rng, 2, 2);
        let scale: f64 = rng.gen_range(0.2..1.0);
        let event = raw.scale_re(scale / raw.trace().re.max(1e-12));
        let (_p, cond) = w.condition_on_event(2, &event, tol)?;
        all_ok &= cond.validate(tol)?.passed;
        let m = cond.matrix();
        let mut offdiag = 0.0f64;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if r != c {
                    offdiag = offdiag.max(m[(r, c)].norm());
                }
            }
        }
        worst_offdiag = worst_offdiag.max(offdiag);
        let feas = bipartite_causal_sep(&cond, tol)?;
        all_ok &= feas.status == FeasibilityStatus::Feasible && feas.residual <= 1e-6;
        worst_residual = worst_residual.max(feas.residual);
    }
    rep.stage(
        "conditional-processes-causally-separable",
        all_ok && worst_offdiag <= 1e-10,
        format!(
            "{n_events} random events: max off-diagonal {worst_offdiag:.3e}, max separability residual {worst_residual:.3e}"
        ),
    );
    Ok(())
}

/// Validate the tripartite process, confirm the first two parties cannot
/// signal to the third, and run the Charlie-event battery.
pub fn ocb_tripartite_pipeline(seed: u64, n_events: usize, tol: &Tolerances) -> Result<PipelineReport> {
    let mut rep = PipelineReport::new("ocb-tripartite");
    let w = ocb_tripartite();
    let v = w.validate(tol)?;
    rep.stage("validate", v.passed, format!("min eigenvalue {:.3e}", v.min_eigenvalue));

    let sig = w.no_signaling_matrix(&[0, 1], tol)?;
    rep.stage(
        "no-signaling-to-third-party",
        sig.no_signaling,
        format!("offending terms: {}", sig.offending_terms.len()),
    );

    charlie_event_battery(&mut rep, &w, seed, n_events, tol)?;

    Ok(rep.finish(
        "valid process; no signaling to the third party; every tested Charlie event leaves a causally separable bipartite process",
    ))
}

/// Full switch analysis: validity, rank-one certificate, signaling to
/// every party, agreement of the two-party reduction with its separable
/// closed form, separability of that reduction, and the
/// commuting-versus-anticommuting unitary discrimination probe.
pub fn switch_pipeline(params: &SwitchParams, tol: &Tolerances) -> Result<PipelineReport> {
    let mut rep = PipelineReport::new("switch");
    let w = switch_process(params);
    let v = w.validate(tol)?;
    rep.stage("validate", v.passed, format!("min eigenvalue {:.3e}", v.min_eigenvalue));

    let (eigs, _) = eig_hermitian(w.matrix())?;
    let spectrum_ok = (eigs[63] - 4.0).abs() <= 1e-10
        && eigs[..63].iter().all(|&x| x.abs() <= 1e-10);
    rep.stage(
        "rank-one-spectrum",
        spectrum_ok,
        format!("top eigenvalue {:.12}, next {:.3e}", eigs[63], eigs[62].abs()),
    );

    let cert = rank1_nonseparability_certificate(&w, tol)?;
    rep.stage(
        "nonseparability-certificate",
        cert.is_some(),
        cert.as_ref().map_or("absent".into(), |c| c.explanation.clone()),
    );

    let mut signals = Vec::new();
    for p in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&q| q != p).collect();
        let sig = w.no_signaling_matrix(&others, tol)?;
        signals.push(!sig.no_signaling);
    }
    rep.stage(
        "signaling-to-every-party",
        signals.iter().all(|&s| s),
        format!("receives signal: A {}, B {}, C {}", signals[0], signals[1], signals[2]),
    );

    let reduced = w.reduced_matrix(&[0, 1], tol)?;
    let closed = switch_separable_reduction(params);
    let diff = reduced.matrix().max_abs_diff(closed.matrix());
    rep.stage(
        "two-party-reduction-closed-form",
        diff <= 1e-12,
        format!("max entry difference {diff:.3e}"),
    );

    let feas = bipartite_causal_sep(&reduced, tol)?;
    rep.stage(
        "reduction-causally-separable",
        feas.status == FeasibilityStatus::Feasible && feas.residual <= 1e-7,
        format!("status {:?}, residual {:.3e}", feas.status, feas.residual),
    );

    let commuting = commutation_probe(&w, &sigma(0), &sigma(3), tol)?;
    let anticommuting = commutation_probe(&w, &sigma(1), &sigma(3), tol)?;
    rep.stage(
        "unitary-commutation-probe",
        (commuting[0] - 1.0).abs() <= 1e-10 && (anticommuting[1] - 1.0).abs() <= 1e-10,
        format!(
            "commuting pair plus-outcome {:.12}; anticommuting pair minus-outcome {:.12}",
            commuting[0], anticommuting[1]
        ),
    );

    Ok(rep.finish(
        "causal process (one-way coarse-grainings are causally separable) that is not causally separable: \
         rank-one with signaling to every party",
    ))
}

/// Composite instrument for Bob on the extended process: measure the
/// first input qubit in the z basis, then run the given instrument on
/// the second input qubit, conjugating its input by sigma_y on outcome 1
/// to undo the sign flip of the conditional process.
fn adaptive_bob_instrument(party: &PartySpec, base: &Instrument) -> Result<Instrument> {
    let sy = sigma(2);
    let rot = kron(&sy, &ComplexMatrix::identity(2));
    let mut outcomes = Vec::with_capacity(base.n_outcomes());
    for cj in &base.outcomes {
        let mut total = ComplexMatrix::zeros(8, 8);
        for m in 0..2usize {
            let mut proj = ComplexMatrix::zeros(2, 2);
            proj[(m, m)] = Complex64::new(1.0, 0.0);
            let branch = if m == 0 { cj.clone() } else { rot.matmul(cj).matmul(&rot) };
            total.add_assign(&kron(&proj, &branch));
        }
        outcomes.push(total);
    }
    Instrument::new(party.clone(), outcomes)
}

/// Activation of non-causality by shared entanglement: the tripartite
/// process is causal on its own (Charlie-event battery), but extending
/// it with a maximally entangled input and conditioning on Charlie's
/// pair-projection event leaves a bipartite process on which Bob's
/// adaptive strategy reproduces the two-way-signaling correlations,
/// which violate the causal bound.
pub fn activation_pipeline(seed: u64, n_events: usize, tol: &Tolerances) -> Result<PipelineReport> {
    let mut rep = PipelineReport::new("activation");
    let base = ocb_tripartite();
    let v = base.validate(tol)?;
    rep.stage("validate-base", v.passed, format!("min eigenvalue {:.3e}", v.min_eigenvalue));

    charlie_event_battery(&mut rep, &base, seed, n_events, tol)?;

    let ext = ocb_tripartite_extended();
    let v_ext = ext.validate(tol)?;
    rep.stage(
        "validate-extended",
        v_ext.passed,
        format!("min eigenvalue {:.3e}", v_ext.min_eigenvalue),
    );

    // Charlie projects his input half onto the unnormalized pair state;
    // the event is the half-weight pair projector (no correction branch),
    // and its sub-unit probability is divided out by the conditioning.
    let event = maximally_entangled(2).scale_re(0.5);
    let (p_event, cond) = ext.condition_on_event(2, &event, tol)?;
    let closed = wocb2_process();
    let diff = cond.matrix().max_abs_diff(closed.matrix());
    rep.stage(
        "conditional-closed-form",
        diff <= 1e-12 && (p_event - 0.5).abs() <= 1e-12,
        format!("event probability {p_event:.12}, max entry difference {diff:.3e}"),
    );

    let two_party = ocb_process();
    let game = ocb_game();
    let opts = SeesawOptions { seed, ..SeesawOptions::default() };
    let seesaw = optimize_quantum_value(&two_party, &game, &opts, tol)?;
    rep.stage(
        "optimize-reference-strategy",
        seesaw.value >= 0.85,
        format!("quantum value {:.12} in {} sweeps", seesaw.value, seesaw.sweeps_used),
    );

    let direct = table_from_process(&two_party, &seesaw.instruments)?;
    let bob_party = cond.parties()[1].clone();
    let adaptive_bob: Vec<Instrument> = seesaw.instruments[1]
        .iter()
        .map(|inst| adaptive_bob_instrument(&bob_party, inst))
        .collect::<Result<_>>()?;
    let adapted = table_from_process(&cond, &[seesaw.instruments[0].clone(), adaptive_bob])?;
    let table_diff = direct.max_abs_diff(&adapted);
    rep.stage(
        "adaptive-strategy-reproduces-correlations",
        table_diff <= 1e-9,
        format!("max table difference {table_diff:.3e}"),
    );

    let membership = causal_membership(&adapted, tol)?;
    rep.stage(
        "post-extension-correlations-non-causal",
        !membership.causal && membership.farkas_checked,
        format!("infeasibility gap {:.3e}", membership.infeasibility_gap),
    );

    Ok(rep.finish(
        "the tripartite process is causal for every tested Charlie event, yet with a shared entangled \
         input its conditional correlations leave the causal polytope: activation demonstrated",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn two_party_process_shape() {
        let w = ocb_process();
        assert!((w.matrix().trace().re - 4.0).abs() < 1e-12, "trace is d_out product");
        let v = w.validate(&tol()).unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.min_eigenvalue >= -1e-10);
        let present = w.term_types_present(&tol()).unwrap();
        let mut labels: Vec<String> = present.keys().map(|t| t.label(w.parties())).collect();
        labels.sort();
        assert_eq!(labels, vec!["A1B1B2", "A2B1", "Id"], "{labels:?}");
        // coefficient agreement with the closed form in the normalized basis
        let coeffs = crate::qlinalg::hs_expand_hermitian(w.matrix(), w.space()).unwrap();
        let idx = |per_slot: [usize; 4]| {
            crate::qlinalg::HSIndex { per_slot: per_slot.to_vec() }.to_flat(w.space())
        };
        assert!((coeffs[idx([0, 0, 0, 0])] - 0.25).abs() < 1e-12);
        assert!((coeffs[idx([3, 0, 1, 3])] - 0.25 * INV_SQRT2).abs() < 1e-12);
        assert!((coeffs[idx([0, 3, 3, 0])] - 0.25 * INV_SQRT2).abs() < 1e-12);
    }

    #[test]
    fn game_bound_is_three_quarters() {
        let bound = causal_bound(&ocb_game()).unwrap();
        assert_eq!(bound.exact.to_string(), "3/4");
        let worst = bound.witness.max_violation(&bound.maximizer).unwrap();
        assert!(worst < 1e-9, "maximizer witness violation {worst}");
    }

    #[test]
    fn tripartite_process_shape() {
        let w = ocb_tripartite();
        assert!(w.validate(&tol()).unwrap().passed);
        assert!((w.matrix().trace().re - 8.0).abs() < 1e-12);
        assert!(w.no_signaling_matrix(&[0, 1], &tol()).unwrap().no_signaling);
        // signaling to Alice and Bob is possible, only Charlie is shielded
        assert!(!w.no_signaling_matrix(&[1, 2], &tol()).unwrap().no_signaling);
        let ext = ocb_tripartite_extended();
        assert!(ext.validate(&tol()).unwrap().passed);
        assert_eq!(ext.parties()[1].d_in, 4);
        assert_eq!(ext.parties()[2].d_in, 2);
    }

    #[test]
    fn conditional_matches_closed_form() {
        let ext = ocb_tripartite_extended();
        let event = maximally_entangled(2).scale_re(0.5);
        let (p, cond) = ext.condition_on_event(2, &event, &tol()).unwrap();
        assert!((p - 0.5).abs() < 1e-12, "event probability {p}");
        let closed = wocb2_process();
        assert!(cond.matrix().max_abs_diff(closed.matrix()) < 1e-12);
        assert!(closed.validate(&tol()).unwrap().passed);
        // the conditional still signals both ways
        assert!(!cond.no_signaling_matrix(&[0], &tol()).unwrap().no_signaling);
        assert!(!cond.no_signaling_matrix(&[1], &tol()).unwrap().no_signaling);
    }

    #[test]
    fn switch_process_shape() {
        for params in [SwitchParams::zero(), SwitchParams::plus()] {
            let w = switch_process(&params);
            assert!((w.matrix().trace().re - 4.0).abs() < 1e-12);
            assert!(w.validate(&tol()).unwrap().passed);
            let (eigs, _) = eig_hermitian(w.matrix()).unwrap();
            assert!((eigs[63] - 4.0).abs() < 1e-10);
            assert!(eigs[..63].iter().all(|&x| x.abs() < 1e-10));
            let reduced = w.reduced_matrix(&[0, 1], &tol()).unwrap();
            let closed = switch_separable_reduction(&params);
            assert!(reduced.matrix().max_abs_diff(closed.matrix()) < 1e-12);
        }
    }

    #[test]
    fn switch_term_types_make_it_causal_but_entangled_in_order() {
        // the reduction is causally separable while the whole process
        // admits a rank-one nonseparability certificate
        let w = switch_process(&SwitchParams::zero());
        let cert = rank1_nonseparability_certificate(&w, &tol()).unwrap();
        assert!(cert.is_some());
        let reduced = w.reduced_matrix(&[0, 1], &tol()).unwrap();
        let feas = bipartite_causal_sep(&reduced, &tol()).unwrap();
        assert_eq!(feas.status, FeasibilityStatus::Feasible, "{feas:?}");
    }

    #[test]
    fn switch_pipeline_passes() {
        for params in [SwitchParams::zero(), SwitchParams::plus()] {
            let rep = switch_pipeline(&params, &tol()).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert!(rep.verdict.contains("not causally separable"));
        }
    }

    #[test]
    fn activation_pipeline_passes() {
        let rep = activation_pipeline(11, 6, &tol()).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn two_party_pipeline_passes() {
        let rep = ocb_pipeline(5, &tol()).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn tripartite_pipeline_passes() {
        let rep = ocb_tripartite_pipeline(7, 6, &tol()).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn forbidden_term_injection_is_caught_on_gallery_matrices() {
        let mut rng = generators::rng(23);
        for w in [ocb_process(), ocb_tripartite()] {
            let (bad, label) = generators::inject_forbidden_term(&mut rng, &w, 1e-3);
            let v = bad.validate(&tol()).unwrap();
            assert!(!v.passed);
            assert!(
                v.forbidden_terms.iter().any(|t| t.term_type == label),
                "expected {label} among {:?}",
                v.forbidden_terms
            );
        }
    }

    #[test]
    fn pipeline_reports_are_byte_stable() {
        let encode = |r: &PipelineReport| serde_json::to_string(r).unwrap();
        let a = encode(&ocb_pipeline(3, &tol()).unwrap());
        let b = encode(&ocb_pipeline(3, &tol()).unwrap());
        assert_eq!(a, b);
        let a = encode(&switch_pipeline(&SwitchParams::plus(), &tol()).unwrap());
        let b = encode(&switch_pipeline(&SwitchParams::plus(), &tol()).unwrap());
        assert_eq!(a, b);
        let a = encode(&activation_pipeline(5, 3, &tol()).unwrap());
        let b = encode(&activation_pipeline(5, 3, &tol()).unwrap());
        assert_eq!(a, b);
    }
}
