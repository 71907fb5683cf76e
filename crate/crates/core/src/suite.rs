//! Acceptance-suite support: seeded random instance generators and
//! independent oracle implementations that cross-check the main
//! algorithms, plus the named pass/fail criteria behind the `suite`
//! subcommand (added at the end of this module).

/// Seeded random quantum and classical objects used by tests and the
/// acceptance battery.
pub mod generators {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use crate::choi::{choi_from_kraus, measure_prepare, Instrument, PartySpec};
    use crate::correlations::{ProbabilityTable, Scenario};
    use crate::procmat::{forbidden_term_types, process_space, ProcessMatrix, TermType};
    use crate::qlinalg::{eig_hermitian, hs_basis, kron, ComplexMatrix};
    use crate::{Result, Tolerances};

    pub fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    pub fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-15);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn random_complex(rng: &mut ChaCha20Rng, nrows: usize, ncols: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(nrows, ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                m[(r, c)] = Complex64::new(gaussian(rng), gaussian(rng));
            }
        }
        m
    }

    /// Haar-like random unitary from Gram-Schmidt on a Gaussian matrix.
    pub fn random_unitary(rng: &mut ChaCha20Rng, d: usize) -> ComplexMatrix {
        let g = random_complex(rng, d, d);
        let mut cols: Vec<Vec<Complex64>> = (0..d)
            .map(|c| (0..d).map(|r| g[(r, c)]).collect())
            .collect();
        for c in 0..d {
            for prev in 0..c {
                let mut overlap = Complex64::new(0.0, 0.0);
                for r in 0..d {
                    overlap += cols[prev][r].conj() * cols[c][r];
                }
                for r in 0..d {
                    let delta = overlap * cols[prev][r];
                    cols[c][r] -= delta;
                }
            }
            let norm: f64 = cols[c].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for v in cols[c].iter_mut() {
                *v /= norm;
            }
        }
        let mut u = ComplexMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                u[(r, c)] = cols[c][r];
            }
        }
        u
    }

    pub fn random_pure_state(rng: &mut ChaCha20Rng, d: usize) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        v
    }

    pub fn random_density(rng: &mut ChaCha20Rng, d: usize) -> ComplexMatrix {
        let g = random_complex(rng, d, d);
        let mut m = g.matmul(&g.dagger());
        let tr = m.trace().re;
        m = m.scale_re(1.0 / tr);
        m.hermitize()
    }

    pub fn random_psd(rng: &mut ChaCha20Rng, d: usize, rank: usize) -> ComplexMatrix {
        let g = random_complex(rng, d, rank.max(1).min(d));
        g.matmul(&g.dagger()).hermitize()
    }

    /// CJ operator of a Haar-like random channel `d_in -> d_out`, via a
    /// Stinespring dilation with a `d_in`-dimensional environment.
    pub fn random_channel_cj(rng: &mut ChaCha20Rng, d_in: usize, d_out: usize) -> ComplexMatrix {
        let dil = d_out * d_in;
        let u = random_unitary(rng, dil);
        // isometry columns: |in> -> sum_{o,e} U[(o,e),in] |o,e>
        let kraus: Vec<ComplexMatrix> = (0..d_in)
            .map(|e| {
                let mut k = ComplexMatrix::zeros(d_out, d_in);
                for o in 0..d_out {
                    for i in 0..d_in {
                        k[(o, i)] = u[(o * d_in + e, i)];
                    }
                }
                k
            })
            .collect();
        let party = PartySpec::new("T", d_in, d_out);
        choi_from_kraus(&party, &kraus).expect("kraus dims").matrix
    }

    /// Random measure-and-reprepare instrument with the given outcome
    /// count: a random POVM (whitened random PSD elements) and random
    /// prepared states.
    pub fn random_instrument(
        rng: &mut ChaCha20Rng,
        party: &PartySpec,
        n_outcomes: usize,
        tol: &Tolerances,
    ) -> Result<Instrument> {
        let d = party.d_in;
        let parts: Vec<ComplexMatrix> = (0..n_outcomes).map(|_| random_psd(rng, d, d)).collect();
        let mut total = ComplexMatrix::zeros(d, d);
        for p in &parts {
            total.add_assign(p);
        }
        let (eigs, vecs) = eig_hermitian(&total)?;
        let mut inv_sqrt = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let lambda = eigs[k].max(1e-12);
            let s = 1.0 / lambda.sqrt();
            for r in 0..d {
                for c in 0..d {
                    let add = vecs[(r, k)] * vecs[(c, k)].conj() * s;
                    inv_sqrt[(r, c)] += add;
                }
            }
        }
        let povm: Vec<ComplexMatrix> = parts
            .iter()
            .map(|p| inv_sqrt.matmul(p).matmul(&inv_sqrt).hermitize())
            .collect();
        let preps: Vec<ComplexMatrix> =
            (0..n_outcomes).map(|_| random_density(rng, party.d_out)).collect();
        measure_prepare(party, &povm, &preps, tol)
    }

    pub fn qubit_parties(n: usize) -> Vec<PartySpec> {
        (0..n)
            .map(|i| PartySpec::new(((b'A' + i as u8) as char).to_string(), 2, 2))
            .collect()
    }

    /// One-way bipartite branch on the full four-slot space: a mixture of
    /// `state (x) channel` links from the first party to the second, with
    /// the identity on the second party's output. `first = 0` produces
    /// the `V^{A1 A2 B1} (x) I^{B2}` form.
    pub fn random_one_way_branch(rng: &mut ChaCha20Rng, first: usize) -> ComplexMatrix {
        let parties = qubit_parties(2);
        let space = process_space(&parties);
        let (in_first, out_first, in_second) = if first == 0 { (0, 1, 2) } else { (2, 3, 0) };
        let k = 3;
        let mut acc = ComplexMatrix::zeros(16, 16);
        let mut weights: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        for &w in &weights {
            let rho = random_density(rng, 2);
            let link = random_channel_cj(rng, 2, 2);
            let part = space
                .embed(&rho, &[in_first])
                .unwrap()
                .matmul(&space.embed(&link, &[out_first, in_second]).unwrap());
            acc.add_assign(&part.scale_re(w));
        }
        acc.hermitize()
    }

    /// Random causally separable bipartite process: a mixture of the two
    /// one-way branch forms.
    pub fn random_bipartite_separable(rng: &mut ChaCha20Rng) -> ProcessMatrix {
        let q: f64 = rng.gen_range(0.15..0.85);
        let x = random_one_way_branch(rng, 0).scale_re(q);
        let y = random_one_way_branch(rng, 1).scale_re(1.0 - q);
        ProcessMatrix::new(qubit_parties(2), x.add(&y)).expect("valid dims")
    }

    /// Fixed-order circuit process for three qubit parties: initial state
    /// into the first party, channel links between consecutive parties,
    /// identity on the last output.
    /// Random channel blended with the fully depolarizing one, so its
    /// Choi matrix is full rank; circuits built from such links have
    /// well-separated spectra, which keeps the feasibility iteration
    /// well-conditioned.
    pub fn random_full_rank_channel_cj(rng: &mut ChaCha20Rng, d_in: usize, d_out: usize) -> ComplexMatrix {
        let noisy = random_channel_cj(rng, d_in, d_out);
        let mix = rng.gen_range(0.2..0.4);
        let mut depol = ComplexMatrix::identity(d_out * d_in);
        depol = depol.scale_re(1.0 / d_out as f64);
        noisy.scale_re(1.0 - mix).add(&depol.scale_re(mix))
    }

    pub fn fixed_order_circuit(rng: &mut ChaCha20Rng, order: &[usize; 3]) -> ComplexMatrix {
        let parties = qubit_parties(3);
        let space = process_space(&parties);
        let in_slot = |p: usize| 2 * p;
        let out_slot = |p: usize| 2 * p + 1;
        let rho = random_density(rng, 2);
        let l1 = random_full_rank_channel_cj(rng, 2, 2);
        let l2 = random_full_rank_channel_cj(rng, 2, 2);
        space
            .embed(&rho, &[in_slot(order[0])])
            .unwrap()
            .matmul(&space.embed(&l1, &[out_slot(order[0]), in_slot(order[1])]).unwrap())
            .matmul(&space.embed(&l2, &[out_slot(order[1]), in_slot(order[2])]).unwrap())
            .hermitize()
    }

    /// Random tripartite process in the three-way extensibly-causally-
    /// separable mixture form: per first party, a mixture of fixed-order
    /// circuits starting with that party.
    pub fn random_tripartite_ecs_form(rng: &mut ChaCha20Rng) -> ProcessMatrix {
        let mut weights: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 0.1).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        // a depolarizing-circuit admixture (itself a fixed-order process
        // for every order) keeps the mixture strictly inside the cone
        let depol_share = rng.gen_range(0.05..0.2);
        let mut acc = ComplexMatrix::identity(64).scale_re(depol_share / 8.0);
        for first in 0..3 {
            let rest: Vec<usize> = (0..3).filter(|&p| p != first).collect();
            let q: f64 = rng.gen();
            for (inner, share) in [(0usize, q), (1usize, 1.0 - q)] {
                let order = [first, rest[inner], rest[1 - inner]];
                let m = fixed_order_circuit(rng, &order);
                let scale = (1.0 - depol_share) * weights[first] * share;
                acc.add_assign(&m.scale_re(scale));
            }
        }
        ProcessMatrix::new(qubit_parties(3), acc).expect("valid dims")
    }

    /// Copy of a process with a forbidden-type coefficient injected at the
    /// given strength; returns the perturbed matrix and the type's label.
    pub fn inject_forbidden_term(
        rng: &mut ChaCha20Rng,
        w: &ProcessMatrix,
        strength: f64,
    ) -> (ProcessMatrix, String) {
        let forbidden: Vec<TermType> = forbidden_term_types(w.parties()).into_iter().collect();
        let pick = forbidden[rng.gen_range(0..forbidden.len())].clone();
        // random nontrivial basis factor on each flagged slot, identity
        // elsewhere; adding strength * basis element shifts exactly that
        // Hilbert-Schmidt coefficient by `strength`
        let mut op = ComplexMatrix::identity(1);
        for (p, &(fin, fout)) in pick.flags.iter().enumerate() {
            let party = &w.parties()[p];
            for (d, nontrivial) in [(party.d_in, fin), (party.d_out, fout)] {
                let factor = if nontrivial {
                    let basis = hs_basis(d);
                    basis[rng.gen_range(1..basis.len())].clone()
                } else {
                    ComplexMatrix::identity(d)
                };
                op = kron(&op, &factor);
            }
        }
        let perturbed = w.matrix().add(&op.scale_re(strength));
        let label = pick.label(w.parties());
        (
            ProcessMatrix::new(w.parties().to_vec(), perturbed).expect("same dims"),
            label,
        )
    }

    fn random_distribution(rng: &mut ChaCha20Rng, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().max(1e-12)).ln()).collect();
        let s: f64 = v.iter().sum();
        for x in v.iter_mut() {
            *x /= s;
        }
        v
    }

    /// Arbitrary random table: an independent distribution per setting.
    pub fn random_table(rng: &mut ChaCha20Rng, scenario: &Scenario) -> ProbabilityTable {
        let mut t = ProbabilityTable::zeros(scenario.clone());
        let no = scenario.n_outcomes();
        for s in 0..scenario.n_settings() {
            let d = random_distribution(rng, no);
            t.p[s * no..(s + 1) * no].copy_from_slice(&d);
        }
        t
    }

    /// Random causal table by the recursive construction: mix over first
    /// parties; the first party's marginal depends only on its setting;
    /// the remaining parties' conditional table is again causal and may
    /// depend arbitrarily on the first party's setting and outcome.
    pub fn random_causal_table(rng: &mut ChaCha20Rng, scenario: &Scenario) -> ProbabilityTable {
        let n = scenario.n_parties();
        assert!((1..=3).contains(&n), "causal sampler supports up to 3 parties");
        if n == 1 {
            return random_table(rng, scenario);
        }
        let q = random_distribution(rng, n);
        let mut mix = ProbabilityTable::zeros(scenario.clone());
        for first in 0..n {
            let t = causal_with_first(rng, scenario, first);
            for (acc, &v) in mix.p.iter_mut().zip(&t.p) {
                *acc += q[first] * v;
            }
        }
        mix
    }

    fn causal_with_first(
        rng: &mut ChaCha20Rng,
        scenario: &Scenario,
        first: usize,
    ) -> ProbabilityTable {
        let n = scenario.n_parties();
        let rest: Vec<usize> = (0..n).filter(|&p| p != first).collect();
        let rest_sc = scenario.restrict(&rest).unwrap();
        // first marginal per setting
        let marg: Vec<Vec<f64>> = (0..scenario.settings[first])
            .map(|_| random_distribution(rng, scenario.outcomes[first]))
            .collect();
        // a causal conditional for every (setting, outcome) of the first
        let cond: Vec<Vec<ProbabilityTable>> = (0..scenario.settings[first])
            .map(|_| {
                (0..scenario.outcomes[first])
                    .map(|_| random_causal_table(rng, &rest_sc))
                    .collect()
            })
            .collect();
        assemble_first(scenario, first, &rest, &marg, &cond)
    }

    fn assemble_first(
        scenario: &Scenario,
        first: usize,
        rest: &[usize],
        marg: &[Vec<f64>],
        cond: &[Vec<ProbabilityTable>],
    ) -> ProbabilityTable {
        let n = scenario.n_parties();
        let rest_sc = cond[0][0].scenario.clone();
        let mut t = ProbabilityTable::zeros(scenario.clone());
        let no = scenario.n_outcomes();
        for sf in 0..scenario.n_settings() {
            let mut s = vec![0usize; n];
            let mut rem = sf;
            for p in (0..n).rev() {
                s[p] = rem % scenario.settings[p];
                rem /= scenario.settings[p];
            }
            let rest_s: Vec<usize> = rest.iter().map(|&p| s[p]).collect();
            let mut rest_sf = 0;
            for (pos, &p) in rest.iter().enumerate() {
                rest_sf = rest_sf * rest_sc.settings[pos] + s[p];
            }
            for of in 0..no {
                let mut o = vec![0usize; n];
                let mut rem = of;
                for p in (0..n).rev() {
                    o[p] = rem % scenario.outcomes[p];
                    rem /= scenario.outcomes[p];
                }
                let mut rest_of = 0;
                for (pos, &p) in rest.iter().enumerate() {
                    rest_of = rest_of * rest_sc.outcomes[pos] + o[p];
                }
                let _ = &rest_s;
                let w = marg[s[first]][o[first]]
                    * cond[s[first]][o[first]].get_flat(rest_sf, rest_of);
                t.p[sf * no + of] = w;
            }
        }
        t
    }

    /// Tripartite causal table in which the first party's outcome flips
    /// the causal order of the other two: order is dynamical, yet the
    /// table is causal.
    pub fn random_dynamical_order_table(
        rng: &mut ChaCha20Rng,
        scenario: &Scenario,
    ) -> ProbabilityTable {
        assert_eq!(scenario.n_parties(), 3);
        let first = rng.gen_range(0..3);
        let rest: Vec<usize> = (0..3).filter(|&p| p != first).collect();
        let rest_sc = scenario.restrict(&rest).unwrap();
        let marg: Vec<Vec<f64>> = (0..scenario.settings[first])
            .map(|_| random_distribution(rng, scenario.outcomes[first]))
            .collect();
        let cond: Vec<Vec<ProbabilityTable>> = (0..scenario.settings[first])
            .map(|_| {
                (0..scenario.outcomes[first])
                    .map(|oi| {
                        // outcome parity decides who of the remaining two
                        // parties signals to the other
                        let leader = oi % 2;
                        one_way_table(rng, &rest_sc, leader)
                    })
                    .collect()
            })
            .collect();
        assemble_first(scenario, first, &rest, &marg, &cond)
    }

    /// Bipartite table where `leader` acts first and its setting and
    /// outcome are handed to the other party.
    pub fn one_way_table(
        rng: &mut ChaCha20Rng,
        scenario: &Scenario,
        leader: usize,
    ) -> ProbabilityTable {
        assert_eq!(scenario.n_parties(), 2);
        let follower = 1 - leader;
        let mut t = ProbabilityTable::zeros(scenario.clone());
        let no = scenario.n_outcomes();
        let lead_marg: Vec<Vec<f64>> = (0..scenario.settings[leader])
            .map(|_| random_distribution(rng, scenario.outcomes[leader]))
            .collect();
        // follower response depends on its setting and everything the
        // leader saw and did
        let mut responses = std::collections::HashMap::new();
        for sf in 0..scenario.n_settings() {
            let s = [sf / scenario.settings[1], sf % scenario.settings[1]];
            for ol in 0..scenario.outcomes[leader] {
                let resp = responses
                    .entry((s[leader], ol, s[follower]))
                    .or_insert_with(|| random_distribution(rng, scenario.outcomes[follower]))
                    .clone();
                for (of_out, &pr) in resp.iter().enumerate() {
                    let mut o = [0usize; 2];
                    o[leader] = ol;
                    o[follower] = of_out;
                    let of = o[0] * scenario.outcomes[1] + o[1];
                    t.p[sf * no + of] = lead_marg[s[leader]][ol] * pr;
                }
            }
        }
        t
    }
}

/// Independent re-implementations used to cross-check the main code
/// paths. They share no logic with the implementations under test.
pub mod oracles {
    use crate::correlations::{CausalConfiguration, ProbabilityTable};
    use crate::polytope::{solve_lp, LpOutcome, LpProblem};
    use crate::Result;

    /// Count the term types a valid process may contain by enumerating
    /// every nontrivial-slot pattern and applying the rule directly: the
    /// all-trivial pattern, or some party with a nontrivial input part and
    /// a trivial output part.
    pub fn brute_force_allowed_count(n_parties: usize) -> usize {
        let mut count = 0usize;
        let combos = 4usize.pow(n_parties as u32);
        for pattern in 0..combos {
            let flags: Vec<(bool, bool)> = (0..n_parties)
                .map(|p| {
                    let f = (pattern >> (2 * p)) & 3;
                    (f & 1 == 1, f & 2 == 2)
                })
                .collect();
            let identity = flags.iter().all(|&(i, o)| !i && !o);
            let sender = flags.iter().any(|&(i, o)| i && !o);
            if identity || sender {
                count += 1;
            }
        }
        count
    }

    /// Membership in the convex hull of the deterministic one-way
    /// strategies for the two-party, two-setting, two-outcome scenario:
    /// 64 vertices where A acts first (o_A a function of s_A, o_B a
    /// function of both settings) and 64 with the roles swapped. Solved
    /// as an explicit convex-combination LP over the 128 vertices.
    pub fn vertex_hull_membership_2222(table: &ProbabilityTable) -> Result<bool> {
        let sc = &table.scenario;
        assert_eq!((sc.n_settings(), sc.n_outcomes()), (4, 4), "2222 scenario only");
        let mut vertices: Vec<[f64; 16]> = Vec::with_capacity(128);
        // A first: o_A = f(s_A), o_B = g(s_A, s_B)
        for f in 0..4u32 {
            for g in 0..16u32 {
                let mut v = [0.0; 16];
                for sa in 0..2usize {
                    for sb in 0..2usize {
                        let oa = (f >> sa & 1) as usize;
                        let ob = (g >> (2 * sa + sb) & 1) as usize;
                        v[(sa * 2 + sb) * 4 + oa * 2 + ob] = 1.0;
                    }
                }
                vertices.push(v);
            }
        }
        // B first: o_B = f(s_B), o_A = g(s_A, s_B)
        for f in 0..4u32 {
            for g in 0..16u32 {
                let mut v = [0.0; 16];
                for sa in 0..2usize {
                    for sb in 0..2usize {
                        let ob = (f >> sb & 1) as usize;
                        let oa = (g >> (2 * sa + sb) & 1) as usize;
                        v[(sa * 2 + sb) * 4 + oa * 2 + ob] = 1.0;
                    }
                }
                vertices.push(v);
            }
        }
        // rows: 16 entry-matching constraints plus total weight one
        let mut a: Vec<Vec<f64>> = (0..16)
            .map(|e| vertices.iter().map(|v| v[e]).collect())
            .collect();
        a.push(vec![1.0; vertices.len()]);
        let mut b: Vec<f64> = table.p.clone();
        b.push(1.0);
        let problem = LpProblem { a, b, c: vec![0.0; vertices.len()] };
        Ok(matches!(solve_lp(&problem)?, LpOutcome::Optimal { .. }))
    }

    /// Direct evaluation of fixed-order compatibility: for the full table
    /// and for each subset whose reduction is defined, every bipartition
    /// with no configured influence across it must show no signaling.
    /// Marginals are recomputed here from scratch.
    pub fn direct_order_compatibility(
        table: &ProbabilityTable,
        config: &CausalConfiguration,
        tol: f64,
    ) -> bool {
        let n = table.scenario.n_parties();
        for k_mask in 1u32..(1u32 << n) {
            let kset: Vec<usize> = (0..n).filter(|i| k_mask >> i & 1 == 1).collect();
            if kset.len() < 2 {
                continue;
            }
            let comp: Vec<usize> = (0..n).filter(|i| k_mask >> i & 1 == 0).collect();
            // is the reduction onto kset defined?
            if !comp.is_empty() && max_influence(table, &comp, &kset) > tol {
                continue;
            }
            for s_mask in 1u32..((1u32 << kset.len()) - 1) {
                let senders: Vec<usize> = (0..kset.len())
                    .filter(|i| s_mask >> i & 1 == 1)
                    .map(|i| kset[i])
                    .collect();
                let receivers: Vec<usize> = (0..kset.len())
                    .filter(|i| s_mask >> i & 1 == 0)
                    .map(|i| kset[i])
                    .collect();
                let permitted = senders
                    .iter()
                    .any(|&x| receivers.iter().any(|&y| config.precedes(x, y)));
                if permitted {
                    continue;
                }
                if reduced_influence(table, &comp, &senders, &receivers) > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Largest change in the joint distribution of `observe`'s outcomes
    /// (all other outcomes summed) when `movers`' settings vary, every
    /// other setting held fixed.
    fn max_influence(table: &ProbabilityTable, movers: &[usize], observe: &[usize]) -> f64 {
        reduced_influence(table, &[], movers, observe)
    }

    /// Same as [`max_influence`] but evaluated on the reduction that
    /// discards `discard` (their settings pinned to zero, their outcomes
    /// summed into the marginal).
    fn reduced_influence(
        table: &ProbabilityTable,
        discard: &[usize],
        movers: &[usize],
        observe: &[usize],
    ) -> f64 {
        let sc = &table.scenario;
        let n = sc.n_parties();
        let fixed: Vec<usize> = (0..n)
            .filter(|p| !movers.contains(p) && !discard.contains(p))
            .collect();
        let card = |set: &[usize], dims: &[usize]| -> usize {
            set.iter().map(|&p| dims[p]).product()
        };
        let assign = |set: &[usize], dims: &[usize], mut flat: usize, into: &mut [usize]| {
            for &p in set.iter().rev() {
                into[p] = flat % dims[p];
                flat /= dims[p];
            }
        };
        let obs_dims: Vec<usize> = observe.iter().map(|&p| sc.outcomes[p]).collect();
        let n_obs: usize = obs_dims.iter().product();
        let mut worst = 0.0f64;
        let mut s = vec![0usize; n];
        for fx in 0..card(&fixed, &sc.settings) {
            assign(&fixed, &sc.settings, fx, &mut s);
            for &p in discard {
                s[p] = 0;
            }
            let mut reference: Option<Vec<f64>> = None;
            for mv in 0..card(movers, &sc.settings) {
                assign(movers, &sc.settings, mv, &mut s);
                // joint marginal of the observed outcomes
                let mut marg = vec![0.0; n_obs];
                let no = sc.n_outcomes();
                let mut sf = 0;
                for p in 0..n {
                    sf = sf * sc.settings[p] + s[p];
                }
                for of in 0..no {
                    let mut o = vec![0usize; n];
                    let mut rem = of;
                    for p in (0..n).rev() {
                        o[p] = rem % sc.outcomes[p];
                        rem /= sc.outcomes[p];
                    }
                    let mut obs_flat = 0;
                    for (pos, &p) in observe.iter().enumerate() {
                        obs_flat = obs_flat * obs_dims[pos] + o[p];
                    }
                    marg[obs_flat] += table.p[sf * no + of];
                }
                match &reference {
                    None => reference = Some(marg),
                    Some(base) => {
                        for (a, b) in base.iter().zip(&marg) {
                            worst = worst.max((a - b).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// One acceptance criterion's outcome.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    /// `PASS`/`FAIL` line as printed by the `suite` subcommand.
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// The named pass/fail checks behind the `suite` subcommand. Each one
/// exercises a full code path end to end against oracles, closed forms,
/// or construction-guaranteed instances.
pub mod criteria {
    use super::generators;
    use super::oracles;
    use super::CriterionReport;
    use crate::convexsep::{
        bipartite_causal_sep, tripartite_ecs, verify_decomposition, FeasibilityStatus,
        SeparabilityProblem,
    };
    use crate::correlations::{
        conditional_process, fixed_order_causal_check, table_from_process, CausalConfiguration,
        Scenario,
    };
    use crate::gallery;
    use crate::polytope::{
        causal_bound, causal_membership, causal_membership_exact, optimize_quantum_value,
        SeesawOptions,
    };
    use crate::procmat::{allowed_term_types, forbidden_term_types, ProcessMatrix};
    use crate::{Result, Tolerances};

    fn run(name: &str, body: impl FnOnce(&mut Vec<String>) -> Result<bool>) -> CriterionReport {
        let start = std::time::Instant::now();
        let mut notes = Vec::new();
        let (passed, detail) = match body(&mut notes) {
            Ok(ok) => (ok, notes.join("; ")),
            Err(e) => (false, format!("error: {e}; {}", notes.join("; "))),
        };
        CriterionReport { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() }
    }

    /// Expected label of the term type whose nontrivial slots are the set
    /// bits of `mask`, slots ordered (1_in, 1_out) per party.
    fn mask_label(mask: usize, parties: &[crate::choi::PartySpec]) -> String {
        if mask == 0 {
            return "Id".into();
        }
        let mut s = String::new();
        for (p, party) in parties.iter().enumerate() {
            if mask >> (2 * p) & 1 == 1 {
                s.push_str(&format!("{}1", party.name));
            }
            if mask >> (2 * p + 1) & 1 == 1 {
                s.push_str(&format!("{}2", party.name));
            }
        }
        s
    }

    /// Counts and exact sets of allowed term types versus independent
    /// enumeration of the rule "identity, or some party has a nontrivial
    /// input factor and a trivial output factor".
    pub fn term_type_algebra(_seed: u64, tol: &Tolerances) -> CriterionReport {
        let _ = tol;
        run("term-type-algebra", |notes| {
            let mut ok = true;

            let single = allowed_term_types(&generators::qubit_parties(1));
            ok &= single.len() == 2;
            notes.push(format!("1 party: {} allowed", single.len()));

            let parties2 = generators::qubit_parties(2);
            let got2: std::collections::BTreeSet<String> =
                allowed_term_types(&parties2).iter().map(|t| t.label(&parties2)).collect();
            let expect2: std::collections::BTreeSet<String> =
                ["Id", "A1", "B1", "A1B1", "A1B2", "A2B1", "A1A2B1", "A1B1B2"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
            ok &= got2 == expect2;
            notes.push(format!("2 parties: {} allowed, set match {}", got2.len(), got2 == expect2));

            let parties3 = generators::qubit_parties(3);
            let allowed3 = allowed_term_types(&parties3);
            let forbidden3 = forbidden_term_types(&parties3);
            let got3: std::collections::BTreeSet<String> =
                allowed3.iter().map(|t| t.label(&parties3)).collect();
            let mut expect3 = std::collections::BTreeSet::new();
            for mask in 0..1usize << 6 {
                let id = mask == 0;
                let some_party_first =
                    (0..3).any(|p| mask >> (2 * p) & 1 == 1 && mask >> (2 * p + 1) & 1 == 0);
                if id || some_party_first {
                    expect3.insert(mask_label(mask, &parties3));
                }
            }
            ok &= allowed3.len() == 38 && forbidden3.len() == 26 && got3 == expect3;
            notes.push(format!(
                "3 parties: {} allowed / {} forbidden, set match {}",
                allowed3.len(),
                forbidden3.len(),
                got3 == expect3
            ));

            let mut counts_ok = true;
            for n in 1..=5usize {
                let expect = 4usize.pow(n as u32) - 3usize.pow(n as u32) + 1;
                let lib = allowed_term_types(&generators::qubit_parties(n)).len();
                let brute = oracles::brute_force_allowed_count(n);
                counts_ok &= lib == expect && brute == expect;
            }
            ok &= counts_ok;
            notes.push(format!("counts 4^n-3^n+1 for n<=5: {counts_ok}"));
            Ok(ok)
        })
    }

    /// The reference processes validate, and forbidden-term injections of
    /// size 1e-3 are all caught with the offending type named.
    pub fn validity_checks(seed: u64, tol: &Tolerances) -> CriterionReport {
        run("validity-checks", |notes| {
            let mut ok = true;
            let matrices: Vec<(&str, ProcessMatrix)> = vec![
                ("two-party", gallery::ocb_process()),
                ("tripartite", gallery::ocb_tripartite()),
                ("post-conditioning", gallery::wocb2_process()),
                ("switch", gallery::switch_process(&gallery::SwitchParams::plus())),
            ];
            for (name, w) in &matrices {
                let rep = w.validate(tol)?;
                ok &= rep.passed && rep.min_eigenvalue >= -1e-10;
                if !rep.passed {
                    notes.push(format!("{name} failed validation"));
                }
            }
            notes.push(format!("{} reference matrices validate", matrices.len()));

            let mut rng = generators::rng(seed);
            let mut caught = 0;
            for i in 0..10 {
                let (_, w) = &matrices[i % matrices.len()];
                let (bad, label) = generators::inject_forbidden_term(&mut rng, w, 1e-3);
                let rep = bad.validate(tol)?;
                if !rep.passed && rep.forbidden_terms.iter().any(|t| t.term_type == label) {
                    caught += 1;
                }
            }
            ok &= caught == 10;
            notes.push(format!("{caught}/10 injected forbidden terms caught with correct type"));
            Ok(ok)
        })
    }

    /// Full switch analysis pipeline.
    pub fn switch_reproduction(_seed: u64, tol: &Tolerances) -> CriterionReport {
        run("switch-reproduction", |notes| {
            let rep = gallery::switch_pipeline(&gallery::SwitchParams::plus(), tol)?;
            for stage in &rep.stages {
                if !stage.passed {
                    notes.push(format!("stage {} failed: {}", stage.stage, stage.detail));
                }
            }
            notes.push(rep.verdict.clone());
            Ok(rep.passed && rep.verdict.contains("not causally separable"))
        })
    }

    /// Exact rational causal bound of the reference game.
    pub fn causal_bound_exact(_seed: u64, _tol: &Tolerances) -> CriterionReport {
        run("causal-bound-exact", |notes| {
            let bound = causal_bound(&gallery::ocb_game())?;
            let exact = bound.exact.to_string();
            let witness_ok = bound.witness.max_violation(&bound.maximizer)? <= 1e-9;
            notes.push(format!("bound {exact}, maximizer witness ok {witness_ok}"));
            Ok(exact == "3/4" && witness_ok)
        })
    }

    /// Seesaw strategy optimization beats the causal bound and its
    /// correlations are rejected from the causal polytope in both
    /// arithmetic modes.
    pub fn quantum_violation(seed: u64, tol: &Tolerances) -> CriterionReport {
        run("quantum-violation", |notes| {
            let w = gallery::ocb_process();
            let game = gallery::ocb_game();
            let opts = SeesawOptions { seed, ..SeesawOptions::default() };
            let outcome = optimize_quantum_value(&w, &game, &opts, tol)?;
            let value_ok = outcome.value >= 0.85 && outcome.sweeps_used <= opts.sweeps;
            notes.push(format!("value {:.6} in {} sweeps", outcome.value, outcome.sweeps_used));

            let table = table_from_process(&w, &outcome.instruments)?;
            let float = causal_membership(&table, tol)?;
            let exact = causal_membership_exact(&table)?;
            let reject_ok = !float.causal
                && float.infeasibility_gap >= 1e-4
                && !exact.causal
                && exact.farkas_checked;
            notes.push(format!(
                "rejected: float gap {:.3e}, exact gap {}, Farkas {}",
                float.infeasibility_gap, exact.gap, exact.farkas_checked
            ));
            Ok(value_ok && reject_ok)
        })
    }

    /// Activation pipeline with the full 20-event Charlie battery.
    pub fn activation(seed: u64, tol: &Tolerances) -> CriterionReport {
        run("activation", |notes| {
            let rep = gallery::activation_pipeline(seed, 20, tol)?;
            for stage in &rep.stages {
                if !stage.passed {
                    notes.push(format!("stage {} failed: {}", stage.stage, stage.detail));
                }
            }
            notes.push(rep.verdict.clone());
            Ok(rep.passed)
        })
    }

    /// Causal membership versus a vertex-hull oracle on 200 bipartite
    /// tables, plus 50 dynamical-order tripartite tables accepted with
    /// independently valid witnesses.
    pub fn polytope_soundness(seed: u64, tol: &Tolerances) -> CriterionReport {
        run("polytope-soundness", |notes| {
            let sc2 = Scenario::new(vec!["A".into(), "B".into()], vec![2, 2], vec![2, 2])?;
            let mut rng = generators::rng(seed);
            let mut disagreements = 0;
            let mut inside_accepted = 0;
            for i in 0..200 {
                let t = if i < 100 {
                    generators::random_causal_table(&mut rng, &sc2)
                } else {
                    generators::random_table(&mut rng, &sc2)
                };
                let main = causal_membership(&t, tol)?;
                let oracle = oracles::vertex_hull_membership_2222(&t)?;
                if main.causal != oracle {
                    disagreements += 1;
                }
                if i < 100 && main.causal {
                    inside_accepted += 1;
                }
                if main.causal {
                    let witness = main.witness.as_ref().ok_or_else(|| {
                        crate::Error::Numerical("accepted without witness".into())
                    })?;
                    if witness.max_violation(&t)? > tol.witness_slack {
                        disagreements += 1;
                    }
                }
            }
            notes.push(format!(
                "bipartite 2x2x2x2: {disagreements} disagreements over 200 tables, {inside_accepted}/100 constructed-causal accepted"
            ));

            let sc3 = Scenario::new(
                vec!["A".into(), "B".into(), "C".into()],
                vec![2, 2, 2],
                vec![2, 2, 2],
            )?;
            let mut dynamical_ok = 0;
            for _ in 0..50 {
                let t = generators::random_dynamical_order_table(&mut rng, &sc3);
                let rep = causal_membership(&t, tol)?;
                let witness_ok = match &rep.witness {
                    Some(wit) => wit.max_violation(&t)? <= tol.witness_slack,
                    None => false,
                };
                if rep.causal && witness_ok {
                    dynamical_ok += 1;
                }
            }
            notes.push(format!("{dynamical_ok}/50 dynamical-order tables accepted with valid witnesses"));
            Ok(disagreements == 0 && inside_accepted == 100 && dynamical_ok == 50)
        })
    }

    /// Construction-guaranteed separable and extensibly-causally-separable
    /// instances are accepted, and each returned decomposition re-validates
    /// away from the solver.
    pub fn separability_generators(seed: u64, tol: &Tolerances) -> CriterionReport {
        run("separability-generators", |notes| {
            let mut rng = generators::rng(seed);
            let mut bi_ok = 0;
            let mut worst_bi = 0.0f64;
            for _ in 0..50 {
                let w = generators::random_bipartite_separable(&mut rng);
                let rep = bipartite_causal_sep(&w, tol)?;
                worst_bi = worst_bi.max(rep.residual);
                let check = verify_decomposition(&w, SeparabilityProblem::Bipartite, &rep.blocks)?;
                if rep.status == FeasibilityStatus::Feasible && rep.residual <= 1e-6 && check.ok {
                    bi_ok += 1;
                }
            }
            notes.push(format!("bipartite: {bi_ok}/50 feasible and re-validated, worst residual {worst_bi:.3e}"));

            let mut tri_ok = 0;
            let mut worst_tri = 0.0f64;
            for _ in 0..50 {
                let w = generators::random_tripartite_ecs_form(&mut rng);
                let rep = tripartite_ecs(&w, tol)?;
                worst_tri = worst_tri.max(rep.residual);
                let check =
                    verify_decomposition(&w, SeparabilityProblem::TripartiteExtensible, &rep.blocks)?;
                if rep.status == FeasibilityStatus::Feasible && rep.residual <= 1e-6 && check.ok {
                    tri_ok += 1;
                }
            }
            notes.push(format!("tripartite: {tri_ok}/50 feasible and re-validated, worst residual {worst_tri:.3e}"));
            Ok(bi_ok == 50 && tri_ok == 50)
        })
    }

    /// Conditional/reduced recomposition identities on random causal
    /// tables, and agreement of the fixed-configuration compatibility check
    /// with a direct brute-force evaluation over all bipartitions.
    pub fn classical_recomposition(seed: u64, tol: &Tolerances) -> CriterionReport {
        run("classical-recomposition", |notes| {
            let mut rng = generators::rng(seed);
            let sc2 = Scenario::new(vec!["A".into(), "B".into()], vec![2, 2], vec![2, 2])?;
            let sc3 = Scenario::new(
                vec!["A".into(), "B".into(), "C".into()],
                vec![2, 2, 2],
                vec![2, 2, 2],
            )?;
            let mut worst_recomp = 0.0f64;
            let mut recomposed = 0;
            let mut order_disagreements = 0;

            let configs2 = [
                CausalConfiguration::from_precedences(2, &[])?,
                CausalConfiguration::from_precedences(2, &[(0, 1)])?,
                CausalConfiguration::from_precedences(2, &[(1, 0)])?,
            ];
            let configs3 = [
                CausalConfiguration::from_precedences(3, &[])?,
                CausalConfiguration::from_precedences(3, &[(0, 1)])?,
                CausalConfiguration::from_precedences(3, &[(0, 1), (1, 2), (0, 2)])?,
                CausalConfiguration::from_precedences(3, &[(2, 0), (2, 1)])?,
            ];

            for i in 0..100 {
                let bipartite = i % 2 == 0;
                let (table, configs): (_, &[CausalConfiguration]) = if bipartite {
                    (generators::one_way_table(&mut rng, &sc2, i / 2 % 2), &configs2)
                } else {
                    (generators::random_dynamical_order_table(&mut rng, &sc3), &configs3)
                };
                let n = table.scenario.n_parties();
                // reduction onto a single party is defined wherever the
                // others cannot signal to it; every table here has at
                // least one such party by construction
                let mut any = false;
                for given in 0..n {
                    match conditional_process(&table, &[given], tol) {
                        Ok(family) => {
                            let back = family.recompose()?;
                            worst_recomp = worst_recomp.max(back.max_abs_diff(&table));
                            any = true;
                        }
                        Err(crate::Error::Precondition(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                if any {
                    recomposed += 1;
                }
                for config in configs {
                    let main = fixed_order_causal_check(&table, config, tol)?.compatible;
                    let oracle = oracles::direct_order_compatibility(&table, config, tol.marginal);
                    if main != oracle {
                        order_disagreements += 1;
                    }
                }
            }
            notes.push(format!(
                "{recomposed}/100 tables recomposed, worst residual {worst_recomp:.3e}"
            ));
            notes.push(format!("fixed-order check: {order_disagreements} oracle disagreements"));
            Ok(recomposed == 100 && worst_recomp <= 1e-10 && order_disagreements == 0)
        })
    }

    /// All criteria in acceptance order.
    pub fn run_all(seed: u64, tol: &Tolerances) -> Vec<CriterionReport> {
        vec![
            term_type_algebra(seed, tol),
            validity_checks(seed, tol),
            switch_reproduction(seed, tol),
            causal_bound_exact(seed, tol),
            quantum_violation(seed, tol),
            activation(seed, tol),
            polytope_soundness(seed, tol),
            separability_generators(seed, tol),
            classical_recomposition(seed, tol),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{
        fixed_order_causal_check, CausalConfiguration, ProbabilityTable, Scenario,
    };
    use crate::polytope::causal_membership;
    use crate::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn brute_force_counts_match_formula() {
        for n in 1..=5 {
            let expect = 4usize.pow(n as u32) - 3usize.pow(n as u32) + 1;
            assert_eq!(oracles::brute_force_allowed_count(n), expect);
        }
    }

    #[test]
    fn generated_processes_validate() {
        let mut rng = generators::rng(11);
        for _ in 0..3 {
            let w = generators::random_bipartite_separable(&mut rng);
            let rep = w.validate(&tol()).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        for _ in 0..2 {
            let w = generators::random_tripartite_ecs_form(&mut rng);
            let rep = w.validate(&tol()).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn injected_forbidden_terms_are_caught() {
        let mut rng = generators::rng(5);
        let w = generators::random_bipartite_separable(&mut rng);
        let (bad, label) = generators::inject_forbidden_term(&mut rng, &w, 1e-3);
        let rep = bad.validate(&tol()).unwrap();
        assert!(!rep.passed);
        assert!(
            rep.forbidden_terms.iter().any(|t| t.term_type == label),
            "expected {label} among {:?}",
            rep.forbidden_terms
        );
    }

    #[test]
    fn hull_oracle_agrees_on_clear_cases() {
        let sc = Scenario::new(vec!["A".into(), "B".into()], vec![2, 2], vec![2, 2]).unwrap();
        let mut rng = generators::rng(23);
        for i in 0..12 {
            let t: ProbabilityTable = if i % 2 == 0 {
                generators::random_causal_table(&mut rng, &sc)
            } else {
                generators::random_table(&mut rng, &sc)
            };
            let ours = causal_membership(&t, &tol()).unwrap().causal;
            let oracle = oracles::vertex_hull_membership_2222(&t).unwrap();
            assert_eq!(ours, oracle, "disagreement on instance {i}");
            if i % 2 == 0 {
                assert!(ours, "sampled causal table rejected");
            }
        }
    }

    #[test]
    fn dynamical_order_tables_are_causal() {
        let sc = Scenario::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![2, 2, 2],
            vec![2, 2, 2],
        )
        .unwrap();
        let mut rng = generators::rng(31);
        for _ in 0..3 {
            let t = generators::random_dynamical_order_table(&mut rng, &sc);
            t.validate(&tol()).unwrap();
            let rep = causal_membership(&t, &tol()).unwrap();
            assert!(rep.causal, "{rep:?}");
            assert!(rep.witness_violation <= 1e-8);
        }
    }

    #[test]
    fn order_oracle_matches_main_check() {
        let sc = Scenario::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![2, 2, 2],
            vec![2, 2, 2],
        )
        .unwrap();
        let mut rng = generators::rng(47);
        let configs = [
            CausalConfiguration::from_precedences(3, &[]).unwrap(),
            CausalConfiguration::from_precedences(3, &[(0, 1)]).unwrap(),
            CausalConfiguration::from_precedences(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(),
        ];
        for _ in 0..4 {
            let t = generators::random_causal_table(&mut rng, &sc);
            for config in &configs {
                let main = fixed_order_causal_check(&t, config, &tol()).unwrap().compatible;
                let oracle = oracles::direct_order_compatibility(&t, config, tol().marginal);
                assert_eq!(main, oracle);
            }
        }
    }
}
