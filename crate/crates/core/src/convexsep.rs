//! Decomposition feasibility for causal separability.
//!
//! A process matrix is causally separable when it splits into positive
//! blocks of one-way form: each block carries an identity factor on the
//! output slot of a party acting last, and each candidate-first-party
//! component is confined to the term types that cannot signal to that
//! first party. Feasibility is decided constructively by
//! Douglas-Rachford splitting over two closed convex sets (the product
//! of positive cones, one per block, and the affine set combining the
//! per-component span constraints with the decomposition sum), followed
//! by an independent verification of the candidate, and negatively by
//! an analytic rank-one certificate. A run that exhausts its budget
//! without either verdict is reported inconclusive, never guessed.

use crate::procmat::{ProcessMatrix, TermType};
use crate::qlinalg::{
    eig_hermitian, hs_expand_hermitian, hs_reconstruct_real, project_psd, ComplexMatrix, HSIndex,
    TensorSpace,
};
use crate::{Error, Result, Tolerances};

/// Thresholds a verified feasible decomposition must meet.
pub const FEASIBLE_MIN_EIGENVALUE: f64 = -1e-8;
pub const FEASIBLE_SPAN_DEFECT: f64 = 1e-8;
pub const FEASIBLE_SUM_DEFECT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparabilityProblem {
    /// Two parties, one block for either party acting first.
    Bipartite,
    /// A fixed first party; the other parties' outputs are omitted one
    /// per block. Block types are unconstrained (terms may cancel in the
    /// sum) because the whole matrix is required up front to be
    /// compatible with the first party acting first.
    FixedFirst(usize),
    /// Three parties, a two-block component per candidate first party,
    /// each component confined to its first party's span.
    TripartiteExtensible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Inconclusive,
    CertifiedInfeasible,
}

/// One block of a candidate decomposition.
#[derive(Debug, Clone)]
pub struct BlockWitness {
    /// Party acting first in this block's component.
    pub first_party: usize,
    /// Full-space slot carried as an identity factor.
    pub omitted_slot: usize,
    pub omitted_label: String,
    /// Operator on the remaining slots, kept in their original order.
    pub reduced: ComplexMatrix,
    pub min_eigenvalue: f64,
}

/// Independent re-validation of a decomposition candidate.
#[derive(Debug, Clone)]
pub struct DecompositionCheck {
    pub min_eigenvalue: f64,
    /// Largest entry of `W - sum of embedded blocks`.
    pub sum_defect: f64,
    /// Largest forbidden component coefficient.
    pub span_defect: f64,
    pub ok: bool,
}

/// Analytic proof that no decomposition exists: a rank-one process in
/// which every party receives signals.
#[derive(Debug, Clone)]
pub struct NonSeparabilityCertificate {
    pub top_eigenvalue: f64,
    pub second_eigenvalue: f64,
    pub explanation: String,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub problem: SeparabilityProblem,
    pub status: FeasibilityStatus,
    pub iterations: usize,
    pub sum_defect: f64,
    pub span_defect: f64,
    pub min_block_eigenvalue: f64,
    /// Worst of the three defects for the reported candidate.
    pub residual: f64,
    pub blocks: Vec<BlockWitness>,
    pub certificate: Option<NonSeparabilityCertificate>,
}

struct BlockDef {
    component: usize,
    /// Party acting first in this block's component.
    first: usize,
    omit: usize,
    /// Dimension of the omitted slot; blocks with a larger identity
    /// factor carry proportionally more of a shared coefficient.
    weight: f64,
    support: Vec<bool>,
    reduced_space: TensorSpace,
    kept: Vec<usize>,
    /// reduced flat coefficient index -> full flat coefficient index
    full_of_reduced: Vec<usize>,
    /// Orthonormal basis of the subspace a positive block can occupy
    /// without leaving supp(W) after embedding; None when unrestricted.
    support_basis: Option<ComplexMatrix>,
}

struct Component {
    blocks: Vec<usize>,
    /// Full flat coefficient indices whose component sum must vanish.
    forbidden: Vec<usize>,
}

struct Problem {
    space: TensorSpace,
    n_coeff: usize,
    dim: usize,
    blocks: Vec<BlockDef>,
    components: Vec<Component>,
    /// Per coefficient: supporting blocks and their total weight.
    sum_plan: Vec<(Vec<usize>, f64)>,
    /// Per coefficient: the combined linear constraints (component span
    /// exclusions and the sum-to-target equation) in projectable form.
    affine_plan: Vec<AffinePlan>,
}

/// The linear constraints touching one coefficient index. Blocks of
/// components that forbid the coefficient must sum to zero per
/// component; the remaining supporting blocks carry the target value.
struct AffinePlan {
    excluded_groups: Vec<Vec<usize>>,
    carriers: Vec<usize>,
}

/// Term types compatible with `first` acting first: allowed overall, and
/// the restriction onto the other parties allowed as well, so the others
/// cannot signal back to the first party.
fn in_first_span(t: &TermType, first: usize, n_parties: usize) -> bool {
    let others: Vec<usize> = (0..n_parties).filter(|&p| p != first).collect();
    t.is_allowed() && t.restrict(&others).is_allowed()
}

impl Problem {
    fn build(w: &ProcessMatrix, kind: SeparabilityProblem) -> Result<Problem> {
        let n = w.n_parties();
        let space = w.space().clone();
        let n_slots = space.n_slots();
        let n_coeff: usize = (0..n_slots).map(|s| space.slot_dim(s) * space.slot_dim(s)).product();
        let out_slot = |p: usize| 2 * p + 1;

        // (component, first party, omitted slot) per block
        let layout: Vec<(usize, usize, usize)> = match kind {
            SeparabilityProblem::Bipartite => {
                if n != 2 {
                    return Err(Error::Precondition(
                        "bipartite separability needs exactly two parties".into(),
                    ));
                }
                vec![(0, 0, out_slot(1)), (1, 1, out_slot(0))]
            }
            SeparabilityProblem::FixedFirst(first) => {
                if first >= n || n < 2 {
                    return Err(Error::Precondition(
                        "first party index out of range".into(),
                    ));
                }
                (0..n).filter(|&p| p != first).map(|p| (0, first, out_slot(p))).collect()
            }
            SeparabilityProblem::TripartiteExtensible => {
                if n != 3 {
                    return Err(Error::Precondition(
                        "extensible separability test needs exactly three parties".into(),
                    ));
                }
                let mut l = Vec::new();
                for first in 0..3 {
                    for p in 0..3 {
                        if p != first {
                            l.push((first, first, out_slot(p)));
                        }
                    }
                }
                l
            }
        };

        let types: Vec<TermType> = (0..n_coeff)
            .map(|mu| TermType::from_hs_index(&HSIndex::from_flat(&space, mu)))
            .collect();

        let mut blocks = Vec::new();
        for &(component, first, omit) in &layout {
            let kept: Vec<usize> = (0..n_slots).filter(|&s| s != omit).collect();
            let reduced_space = TensorSpace::new(
                kept.iter().map(|&s| space.slots()[s].clone()).collect(),
            )?;
            let red_coeff: usize = kept
                .iter()
                .map(|&s| space.slot_dim(s) * space.slot_dim(s))
                .product();
            let mut support = vec![false; n_coeff];
            let mut full_of_reduced = Vec::with_capacity(red_coeff);
            for red in 0..red_coeff {
                let red_idx = HSIndex::from_flat(&reduced_space, red);
                let mut per_slot = vec![0usize; n_slots];
                for (pos, &s) in kept.iter().enumerate() {
                    per_slot[s] = red_idx.per_slot[pos];
                }
                let full = HSIndex { per_slot }.to_flat(&space);
                support[full] = true;
                full_of_reduced.push(full);
            }
            blocks.push(BlockDef {
                component,
                first,
                omit,
                weight: space.slot_dim(omit) as f64,
                support,
                reduced_space,
                kept,
                full_of_reduced,
                support_basis: None,
            });
        }

        // Every positive semidefinite summand of w is supported inside
        // supp(w), and a block embeds as reduced x identity, so its reduced
        // matrix must stay inside S = { v : v tensor (omitted slot) is in
        // supp(w) }. Compressing the cone onto S leaves the feasible set
        // unchanged while removing the flat directions along ker(w) that
        // stall the alternating projections on rank-deficient instances.
        let (w_eigs, w_vecs) = eig_hermitian(w.matrix())?;
        let top = w_eigs.last().copied().unwrap_or(0.0).max(0.0);
        let kernel_cut = top * 1e-10;
        let d_full = space.dim();
        let w_rank = w_eigs.iter().filter(|&&l| l > kernel_cut).count();
        if w_rank < d_full {
            let mut p_supp = ComplexMatrix::zeros(d_full, d_full);
            for (i, &lam) in w_eigs.iter().enumerate() {
                if lam <= kernel_cut {
                    continue;
                }
                for r in 0..d_full {
                    let vr = w_vecs[(r, i)];
                    if vr.norm_sqr() == 0.0 {
                        continue;
                    }
                    for c in 0..d_full {
                        p_supp[(r, c)] += vr * w_vecs[(c, i)].conj();
                    }
                }
            }
            for block in blocks.iter_mut() {
                // v is in S exactly when <v| Tr_omit(P)/d_omit |v> = 1
                let (traced, _) = space.partial_trace(&p_supp, &[block.omit])?;
                let q = traced.scale_re(1.0 / space.slot_dim(block.omit) as f64);
                let (q_eigs, q_vecs) = eig_hermitian(&q)?;
                let d_red = q.nrows();
                let cols: Vec<usize> =
                    (0..d_red).filter(|&i| q_eigs[i] >= 1.0 - 1e-7).collect();
                if cols.len() == d_red {
                    continue;
                }
                let mut u = ComplexMatrix::zeros(d_red, cols.len());
                for (j, &i) in cols.iter().enumerate() {
                    for r in 0..d_red {
                        u[(r, j)] = q_vecs[(r, i)];
                    }
                }
                block.support_basis = Some(u);
            }
        }

        let n_components = blocks.iter().map(|b| b.component).max().unwrap() + 1;
        let mut components: Vec<Component> = (0..n_components)
            .map(|c| Component {
                blocks: blocks
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.component == c)
                    .map(|(i, _)| i)
                    .collect(),
                forbidden: Vec::new(),
            })
            .collect();
        match kind {
            SeparabilityProblem::FixedFirst(_) => {}
            SeparabilityProblem::Bipartite | SeparabilityProblem::TripartiteExtensible => {
                for (first, comp) in components.iter_mut().enumerate() {
                    comp.forbidden = (0..n_coeff)
                        .filter(|&mu| !in_first_span(&types[mu], first, n))
                        .collect();
                }
            }
        }

        let sum_plan: Vec<(Vec<usize>, f64)> = (0..n_coeff)
            .map(|mu| {
                let supp: Vec<usize> = blocks
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.support[mu])
                    .map(|(i, _)| i)
                    .collect();
                let lambda: f64 = supp.iter().map(|&i| blocks[i].weight).sum();
                (supp, lambda)
            })
            .collect();

        let mut forbidden_mask: Vec<Vec<bool>> =
            vec![vec![false; n_coeff]; components.len()];
        for (c, comp) in components.iter().enumerate() {
            for &mu in &comp.forbidden {
                forbidden_mask[c][mu] = true;
            }
        }
        let affine_plan: Vec<AffinePlan> = (0..n_coeff)
            .map(|mu| {
                let mut excluded_groups = Vec::new();
                let mut carriers = Vec::new();
                for (c, comp) in components.iter().enumerate() {
                    let members: Vec<usize> = comp
                        .blocks
                        .iter()
                        .copied()
                        .filter(|&k| blocks[k].support[mu])
                        .collect();
                    if members.is_empty() {
                        continue;
                    }
                    if forbidden_mask[c][mu] {
                        excluded_groups.push(members);
                    } else {
                        carriers.extend(members);
                    }
                }
                AffinePlan { excluded_groups, carriers }
            })
            .collect();

        Ok(Problem {
            dim: space.dim(),
            space,
            n_coeff,
            blocks,
            components,
            sum_plan,
            affine_plan,
        })
    }

    /// Exact Euclidean projection onto the intersection of all linear
    /// constraints. Per coefficient the constraints touch disjoint
    /// variable groups (excluded component sums pinned to zero, carrier
    /// total pinned to the target), so the equal-split corrections below
    /// are the orthogonal projection; block coordinates share one metric
    /// scale because every omitted slot has the same dimension.
    fn project_affine(&self, target: &[f64], state: &mut [Vec<f64>]) {
        for mu in 0..self.n_coeff {
            let plan = &self.affine_plan[mu];
            for group in &plan.excluded_groups {
                let s: f64 = group.iter().map(|&k| state[k][mu]).sum();
                let d = s / group.len() as f64;
                for &k in group {
                    state[k][mu] -= d;
                }
            }
            if !plan.carriers.is_empty() {
                let s: f64 = plan.carriers.iter().map(|&k| state[k][mu]).sum();
                let d = (target[mu] - s) / plan.carriers.len() as f64;
                for &k in &plan.carriers {
                    state[k][mu] += d;
                }
            }
        }
    }

    fn project_cone(&self, state: &mut [Vec<f64>]) -> Result<()> {
        for (k, block) in self.blocks.iter().enumerate() {
            let red: Vec<f64> = block.full_of_reduced.iter().map(|&f| state[k][f]).collect();
            let m = hs_reconstruct_real(&red, &block.reduced_space)?;
            let d = m.nrows();
            // Projecting onto { B psd, B = P B P } clamps the compression:
            // in the block basis of S and its complement, only the S part of
            // the objective depends on B, and psd on S is psd overall.
            let proj = match &block.support_basis {
                Some(u) if u.ncols() == 0 => ComplexMatrix::zeros(d, d),
                Some(u) => {
                    let compressed = u.dagger().matmul(&m).matmul(u);
                    let clamped = project_psd(&compressed)?;
                    u.matmul(&clamped).matmul(&u.dagger())
                }
                None => project_psd(&m)?,
            };
            let new_red = hs_expand_hermitian(&proj, &block.reduced_space)?;
            for (&f, &v) in block.full_of_reduced.iter().zip(&new_red) {
                state[k][f] = v;
            }
        }
        Ok(())
    }

    /// Frobenius-scale defects of the current state; both dominate the
    /// entrywise quantities checked at verification time.
    fn frobenius_defects(&self, target: &[f64], state: &[Vec<f64>]) -> (f64, f64) {
        let mut sum_sq = 0.0;
        for mu in 0..self.n_coeff {
            let total: f64 = self.sum_plan[mu].0.iter().map(|&k| state[k][mu]).sum();
            let d = target[mu] - total;
            sum_sq += d * d;
        }
        let mut span_sq = 0.0f64;
        for comp in &self.components {
            for &mu in &comp.forbidden {
                let v: f64 = comp
                    .blocks
                    .iter()
                    .copied()
                    .filter(|&k| self.blocks[k].support[mu])
                    .map(|k| state[k][mu])
                    .sum();
                span_sq += v * v;
            }
        }
        let scale = self.dim as f64;
        ((scale * sum_sq).sqrt(), (scale * span_sq).sqrt())
    }

    fn run_splitting(
        &self,
        target: &[f64],
        budget: usize,
    ) -> Result<(Vec<Vec<f64>>, usize)> {
        let zeros: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .map(|_| vec![0.0; self.n_coeff])
            .collect();
        // Douglas-Rachford splitting over the two sets: the driver x is
        // reflected through the affine set, projected onto the cone, and
        // nudged by the difference. The cone-side shadow z is the
        // candidate: exactly positive by construction, its linear defects
        // shrink toward the gap between the sets (zero iff feasible).
        // The verdict never rests on the iteration: a candidate counts
        // only after the independent verification pass.
        let mut x = zeros.clone();
        let mut z = zeros;
        let mut used = 0;
        for iter in 0..budget.max(1) {
            used = iter + 1;
            let mut y = x.clone();
            self.project_affine(target, &mut y);
            // z = P_cone(2y - x)
            for (zb, (yb, xb)) in z.iter_mut().zip(y.iter().zip(&x)) {
                for (zv, (yv, xv)) in zb.iter_mut().zip(yb.iter().zip(xb)) {
                    *zv = 2.0 * yv - xv;
                }
            }
            self.project_cone(&mut z)?;
            for (xb, (zb, yb)) in x.iter_mut().zip(z.iter().zip(&y)) {
                for (xv, (zv, yv)) in xb.iter_mut().zip(zb.iter().zip(yb)) {
                    *xv += zv - yv;
                }
            }
            let (sum_frob, span_frob) = self.frobenius_defects(target, &z);
            if sum_frob <= FEASIBLE_SUM_DEFECT && span_frob <= FEASIBLE_SPAN_DEFECT {
                break;
            }
        }
        Ok((z, used))
    }

    /// Package the final state as per-block witnesses carrying the
    /// reduced operators a verifier can re-check independently.
    fn witnesses(&self, state: &[Vec<f64>]) -> Result<Vec<BlockWitness>> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for (k, block) in self.blocks.iter().enumerate() {
            let red: Vec<f64> = block.full_of_reduced.iter().map(|&f| state[k][f]).collect();
            let reduced = hs_reconstruct_real(&red, &block.reduced_space)?;
            let (eigs, _) = eig_hermitian(&reduced)?;
            out.push(BlockWitness {
                first_party: block.first,
                omitted_slot: block.omit,
                omitted_label: self.space.slots()[block.omit].label.clone(),
                reduced,
                min_eigenvalue: eigs.first().copied().unwrap_or(0.0),
            });
        }
        Ok(out)
    }
}

/// Re-validate a candidate decomposition against the original matrix
/// using only embeddings and eigenvalues, independently of the solver
/// state that produced it.
pub fn verify_decomposition(
    w: &ProcessMatrix,
    kind: SeparabilityProblem,
    blocks: &[BlockWitness],
) -> Result<DecompositionCheck> {
    let problem = Problem::build(w, kind)?;
    if blocks.len() != problem.blocks.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} blocks, got {}",
            problem.blocks.len(),
            blocks.len()
        )));
    }
    let mut min_eig = f64::INFINITY;
    let mut total = ComplexMatrix::zeros(problem.dim, problem.dim);
    let mut full_coeffs: Vec<Vec<f64>> = vec![vec![0.0; problem.n_coeff]; blocks.len()];
    for witness in blocks {
        let slot = problem
            .blocks
            .iter()
            .position(|b| b.first == witness.first_party && b.omit == witness.omitted_slot)
            .ok_or_else(|| {
                Error::InvalidInput("witness block does not match the problem layout".into())
            })?;
        let def = &problem.blocks[slot];
        let (eigs, _) = eig_hermitian(&witness.reduced)?;
        min_eig = min_eig.min(eigs[0]);
        total.add_assign(&problem.space.embed(&witness.reduced, &def.kept)?);
        let red = hs_expand_hermitian(&witness.reduced, &def.reduced_space)?;
        for (&f, &v) in def.full_of_reduced.iter().zip(&red) {
            full_coeffs[slot][f] = v;
        }
    }
    let sum_defect = total.max_abs_diff(w.matrix());
    let mut span_defect = 0.0f64;
    for comp in &problem.components {
        for &mu in &comp.forbidden {
            let v: f64 = comp.blocks.iter().map(|&k| full_coeffs[k][mu]).sum();
            span_defect = span_defect.max(v.abs());
        }
    }
    let ok = min_eig >= FEASIBLE_MIN_EIGENVALUE
        && sum_defect <= FEASIBLE_SUM_DEFECT
        && span_defect <= FEASIBLE_SPAN_DEFECT;
    Ok(DecompositionCheck { min_eigenvalue: min_eig, sum_defect, span_defect, ok })
}

/// A rank-one process that signals to every party cannot decompose: in
/// any sum of positive operators equal to a rank-one operator, each
/// summand is proportional to the whole, so the whole matrix would have
/// to be compatible with some party acting first, and that party would
/// receive nothing.
pub fn rank1_nonseparability_certificate(
    w: &ProcessMatrix,
    tol: &Tolerances,
) -> Result<Option<NonSeparabilityCertificate>> {
    let n = w.n_parties();
    if n < 2 {
        return Ok(None);
    }
    let (eigs, _) = eig_hermitian(w.matrix())?;
    let top = eigs[eigs.len() - 1];
    let second = eigs[eigs.len() - 2];
    if !(top > 1e-6 && second.abs() <= tol.rank_one) {
        return Ok(None);
    }
    for party in 0..n {
        let others: Vec<usize> = (0..n).filter(|&p| p != party).collect();
        if w.no_signaling_matrix(&others, tol)?.no_signaling {
            return Ok(None);
        }
    }
    let names: Vec<&str> = w.parties().iter().map(|p| p.name.as_str()).collect();
    Ok(Some(NonSeparabilityCertificate {
        top_eigenvalue: top,
        second_eigenvalue: second,
        explanation: format!(
            "rank-one process (second eigenvalue {second:.2e}) with signaling to every party \
             ({}): every positive block in a decomposition would be proportional to the whole \
             matrix, forcing some party to act first while also receiving signals",
            names.join(", ")
        ),
    }))
}

fn analyze(
    w: &ProcessMatrix,
    kind: SeparabilityProblem,
    tol: &Tolerances,
) -> Result<FeasibilityReport> {
    let problem = Problem::build(w, kind)?;
    let certificate = rank1_nonseparability_certificate(w, tol)?;
    // a certified-infeasible instance still gets a short constructive
    // attempt so the report carries a residual
    let budget = if certificate.is_some() {
        tol.feasibility_budget.min(200)
    } else {
        tol.feasibility_budget
    };
    let target = hs_expand_hermitian(w.matrix(), &problem.space)?;
    let (state, iterations) = problem.run_splitting(&target, budget)?;
    let blocks = problem.witnesses(&state)?;
    let check = verify_decomposition(w, kind, &blocks)?;
    let status = if check.ok {
        FeasibilityStatus::Feasible
    } else if certificate.is_some() {
        FeasibilityStatus::CertifiedInfeasible
    } else {
        FeasibilityStatus::Inconclusive
    };
    let residual = check
        .sum_defect
        .max(check.span_defect)
        .max((-check.min_eigenvalue).max(0.0));
    Ok(FeasibilityReport {
        problem: kind,
        status,
        iterations,
        sum_defect: check.sum_defect,
        span_defect: check.span_defect,
        min_block_eigenvalue: check.min_eigenvalue,
        residual,
        blocks,
        certificate,
    })
}

/// Causal separability of a two-party process: a decomposition into an
/// A-first and a B-first positive one-way block. For two parties this
/// notion coincides with its extensible variant.
pub fn bipartite_causal_sep(w: &ProcessMatrix, tol: &Tolerances) -> Result<FeasibilityReport> {
    analyze(w, SeparabilityProblem::Bipartite, tol)
}

/// Decomposability of a process known to be compatible with `first`
/// acting first into positive blocks, one per choice of a later party
/// whose output carries an identity factor. Errors when the matrix
/// contains term types that signal to `first`.
pub fn fixed_first_ecs(
    w: &ProcessMatrix,
    first: usize,
    tol: &Tolerances,
) -> Result<FeasibilityReport> {
    let n = w.n_parties();
    if first >= n {
        return Err(Error::Precondition("first party index out of range".into()));
    }
    let present = w.term_types_present(tol)?;
    let offending: Vec<String> = present
        .keys()
        .filter(|t| !in_first_span(t, first, n))
        .map(|t| t.label(w.parties()))
        .collect();
    if !offending.is_empty() {
        return Err(Error::Precondition(format!(
            "matrix carries term types incompatible with {} acting first: {}",
            w.parties()[first].name,
            offending.join(", ")
        )));
    }
    analyze(w, SeparabilityProblem::FixedFirst(first), tol)
}

/// Extensible causal separability of a three-party process: a sum over
/// candidate first parties of two-block components, each component's
/// coefficients confined to the types that cannot signal to its first
/// party.
pub fn tripartite_ecs(w: &ProcessMatrix, tol: &Tolerances) -> Result<FeasibilityReport> {
    analyze(w, SeparabilityProblem::TripartiteExtensible, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procmat::ProcessMatrix;
    use crate::qlinalg::hs_reconstruct_real;
    use crate::suite::generators;
    use crate::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn separable_bipartite_instances_are_feasible() {
        let mut rng = generators::rng(101);
        for i in 0..3 {
            let w = generators::random_bipartite_separable(&mut rng);
            let rep = bipartite_causal_sep(&w, &tol()).unwrap();
            assert_eq!(rep.status, FeasibilityStatus::Feasible, "instance {i}: {rep:?}");
            assert!(rep.residual <= FEASIBLE_SUM_DEFECT);
            assert!(rep.certificate.is_none());
            assert_eq!(rep.blocks.len(), 2);
            let check =
                verify_decomposition(&w, SeparabilityProblem::Bipartite, &rep.blocks).unwrap();
            assert!(check.ok, "{check:?}");
        }
    }

    #[test]
    fn two_way_signaling_matrix_is_not_resolved_feasible() {
        // maximal two-way process: identity plus two anticommuting
        // correlation terms, each signaling in one direction
        let parties = generators::qubit_parties(2);
        let space = crate::procmat::process_space(&parties);
        let n_coeff = 256;
        let mut coeffs = vec![0.0; n_coeff];
        let a = 1.0 / (4.0 * 2f64.sqrt());
        coeffs[HSIndex { per_slot: vec![0, 0, 0, 0] }.to_flat(&space)] = 0.25;
        coeffs[HSIndex { per_slot: vec![3, 0, 1, 3] }.to_flat(&space)] = a;
        coeffs[HSIndex { per_slot: vec![0, 3, 3, 0] }.to_flat(&space)] = a;
        let m = hs_reconstruct_real(&coeffs, &space).unwrap();
        let w = ProcessMatrix::new(parties, m).unwrap();
        assert!(w.validate(&tol()).unwrap().passed);
        let mut fast = tol();
        fast.feasibility_budget = 1200;
        let rep = bipartite_causal_sep(&w, &fast).unwrap();
        assert_eq!(rep.status, FeasibilityStatus::Inconclusive, "{rep:?}");
        assert!(rep.sum_defect > 1e-4, "defect should stall, got {}", rep.sum_defect);
    }

    #[test]
    fn tripartite_in_form_instances_are_feasible() {
        let mut rng = generators::rng(211);
        for i in 0..2 {
            let w = generators::random_tripartite_ecs_form(&mut rng);
            let rep = tripartite_ecs(&w, &tol()).unwrap();
            assert_eq!(rep.status, FeasibilityStatus::Feasible, "instance {i}: {rep:?}");
            let check = verify_decomposition(
                &w,
                SeparabilityProblem::TripartiteExtensible,
                &rep.blocks,
            )
            .unwrap();
            assert!(check.ok, "{check:?}");
        }
    }


    #[test]
    fn fixed_first_accepts_the_leader_and_rejects_others() {
        let mut rng = generators::rng(307);
        let parties = generators::qubit_parties(3);
        let m = generators::fixed_order_circuit(&mut rng, &[2, 0, 1]);
        let w = ProcessMatrix::new(parties, m).unwrap();
        assert!(w.validate(&tol()).unwrap().passed);
        let rep = fixed_first_ecs(&w, 2, &tol()).unwrap();
        assert_eq!(rep.status, FeasibilityStatus::Feasible, "{rep:?}");
        let err = fixed_first_ecs(&w, 0, &tol()).unwrap_err();
        assert!(matches!(err, crate::Error::Precondition(_)), "{err:?}");
    }

    #[test]
    fn certificate_never_fires_on_accepted_instances() {
        let mut rng = generators::rng(613);
        // bipartite acceptances, including the closed-form switch reduction
        let mut accepted = vec![crate::gallery::switch_separable_reduction(
            &crate::gallery::SwitchParams::plus(),
        )];
        for _ in 0..5 {
            accepted.push(generators::random_bipartite_separable(&mut rng));
        }
        for w in &accepted {
            let rep = bipartite_causal_sep(w, &tol()).unwrap();
            assert_eq!(rep.status, FeasibilityStatus::Feasible);
            let cert = rank1_nonseparability_certificate(w, &tol()).unwrap();
            assert!(cert.is_none(), "certificate on an accepted bipartite instance");
        }
        for _ in 0..5 {
            let w = generators::random_tripartite_ecs_form(&mut rng);
            let rep = tripartite_ecs(&w, &tol()).unwrap();
            assert_eq!(rep.status, FeasibilityStatus::Feasible);
            let cert = rank1_nonseparability_certificate(&w, &tol()).unwrap();
            assert!(cert.is_none(), "certificate on an accepted tripartite instance");
        }
    }

    #[test]
    fn splitting_residual_improves_with_budget() {
        let mut rng = generators::rng(1009);
        let w = generators::random_bipartite_separable(&mut rng);
        let mut starved = tol();
        starved.feasibility_budget = 1;
        let first = bipartite_causal_sep(&w, &starved).unwrap();
        let full = bipartite_causal_sep(&w, &tol()).unwrap();
        assert_eq!(full.status, FeasibilityStatus::Feasible);
        assert!(full.residual <= 1e-7);
        assert!(
            full.residual < first.residual,
            "no progress: {} -> {}",
            first.residual,
            full.residual
        );
    }
}

