use super::PilotObjectiveContext;
use crate::channel::NetworkConfig;
use crate::error::{Error, Result};
use crate::estimator::PilotSet;
use crate::matlin::{self, real, CMatrix};

fn check_cfg(ctx: &PilotObjectiveContext, cfg: &NetworkConfig) -> Result<()> {
    if ctx.cells() != cfg.cells || ctx.users_per_cell != cfg.users_per_cell {
        return Err(Error::DimMismatch(format!(
            "context is {}x{} users, config is {}x{}",
            ctx.cells(),
            ctx.users_per_cell,
            cfg.cells,
            cfg.users_per_cell
        )));
    }
    cfg.validate()
}

/// `Σ_{i≤τ} λ_i(W̄ P̄)` from the assembled matrix.
pub fn eigen_sum_bound(ctx: &PilotObjectiveContext, tau: usize) -> Result<f64> {
    let wp = matlin::hermitian_part(&(ctx.w_bar() * ctx.shared_p_bar()?));
    Ok(matlin::herm_eig(&wp)?.values.iter().take(tau).sum())
}

/// `S = √𝒫 U_1*` with `U_1` the leading `τ` eigenvectors of `W̄ P̄`.
///
/// `W̄ P̄` is block diagonal, so each `w_j P_j` block is decomposed on its own
/// and the pieces are merged by eigenvalue. Every selected vector is then an
/// eigenvector of `P̄` too, even when different cells share an eigenvalue.
/// Ties keep (cell, in-cell order).
pub fn eigen_pilots(ctx: &PilotObjectiveContext, cfg: &NetworkConfig) -> Result<PilotSet> {
    check_cfg(ctx, cfg)?;
    let p = ctx.shared_p_bar()?;
    let (m, k, tau) = (ctx.cells(), ctx.users_per_cell, cfg.pilot_len);
    let mut candidates = Vec::with_capacity(m * k);
    for j in 0..m {
        let block = p.view((j * k, j * k), (k, k)).into_owned().scale(ctx.weights[j]);
        let eig = matlin::herm_eig(&matlin::hermitian_part(&block))?;
        for (idx, &value) in eig.values.iter().enumerate() {
            candidates.push((value, j, eig.vectors.column(idx).into_owned()));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let amp = cfg.power.sqrt();
    let mut s = CMatrix::zeros(tau, m * k);
    for (row, (_, j, v)) in candidates.iter().take(tau).enumerate() {
        for (c, z) in v.iter().enumerate() {
            s[(row, j * k + c)] = z.conj() * amp;
        }
    }
    PilotSet::from_stacked(s, k)
}

/// Orthogonal unit pilots for the `τ` users with the largest `w_i p_i,kk`;
/// everyone else stays silent. Requires diagonal transmit correlations.
pub fn user_selection(ctx: &PilotObjectiveContext, cfg: &NetworkConfig) -> Result<PilotSet> {
    check_cfg(ctx, cfg)?;
    let p = ctx.shared_p_bar()?;
    let (k, mk) = (ctx.users_per_cell, ctx.total_users());
    for r in 0..mk {
        for c in 0..mk {
            if r != c && p[(r, c)].norm() != 0.0 {
                return Err(Error::InvalidConfig("user selection needs diagonal transmit correlations".into()));
            }
        }
    }
    let mut order: Vec<usize> = (0..mk).collect();
    let d = |u: usize| ctx.weights[u / k] * p[(u, u)].re;
    order.sort_by(|&a, &b| d(b).total_cmp(&d(a)));
    let mut s = CMatrix::zeros(cfg.pilot_len, mk);
    for (row, &u) in order.iter().take(cfg.pilot_len).enumerate() {
        s[(row, u)] = real(cfg.power.sqrt());
    }
    PilotSet::from_stacked(s, k)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{fully_sep_ctx, random_feasible};
    use super::super::{fully_sep_objective, PilotObjectiveContext};
    use super::*;
    use crate::channel::TransmitAssembly;
    use crate::matlin::{blkdiag, identity, rdiag, rel_diff};
    use crate::random::{complex_gaussian, stream};

    fn cfg(m: usize, k: usize, tau: usize, power: f64) -> NetworkConfig {
        NetworkConfig::new(m, k, 4, 2, tau, power).unwrap()
    }

    fn diag_ctx(weights: Vec<f64>, p: &[f64], k: usize) -> PilotObjectiveContext {
        PilotObjectiveContext::from_parts(weights, TransmitAssembly::Shared(rdiag(p)), k).unwrap()
    }

    #[test]
    fn eigen_pilots_attain_bound_on_small_instances() {
        for tau in 1..=3 {
            for seed in 0..5 {
                let (_, ctx) = fully_sep_ctx(2, 2, 3, 100 + seed);
                let c = cfg(2, 2, tau, 1.0);
                let s = eigen_pilots(&ctx, &c).unwrap();
                let best = fully_sep_objective(s.stacked(), &ctx).unwrap();
                let bound = eigen_sum_bound(&ctx, tau).unwrap();
                assert!((best - bound).abs() <= 1e-9 * bound, "{best} vs {bound}");
                for idx in 0..200 {
                    let r = random_feasible(tau, 4, 1.0, seed, idx);
                    assert!(fully_sep_objective(&r, &ctx).unwrap() <= bound + 1e-8);
                }
            }
        }
    }

    #[test]
    fn diagonal_example_selects_strongest_links() {
        let ctx = diag_ctx(vec![1.0, 1.0], &[0.9, 0.1, 0.5, 0.4], 2);
        let c = cfg(2, 2, 2, 1.0);
        let s = eigen_pilots(&ctx, &c).unwrap();
        for col in [1, 3] {
            assert!(s.stacked().column(col).iter().all(|z| z.norm() == 0.0));
        }
        for col in [0, 2] {
            assert!((matlin::col_norm_sqr(s.stacked(), col) - 1.0).abs() < 1e-12);
        }
        let v = fully_sep_objective(s.stacked(), &ctx).unwrap();
        assert!((v - 1.4).abs() < 1e-12);
        // No member of a random ensemble does better.
        let best_random = (0..2000)
            .map(|idx| fully_sep_objective(&random_feasible(2, 4, 1.0, 77, idx), &ctx).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best_random <= v + 1e-9);
        assert!(best_random > 1.0);
    }

    #[test]
    fn full_orthogonality_at_tau_mk() {
        let (_, ctx) = fully_sep_ctx(2, 3, 3, 5);
        let s = eigen_pilots(&ctx, &cfg(2, 3, 6, 2.0)).unwrap();
        let g = s.stacked().adjoint() * s.stacked();
        assert!(rel_diff(&g, &identity(6).scale(2.0)) < 1e-10);
    }

    #[test]
    fn unitary_rotation_keeps_objective() {
        let (_, ctx) = fully_sep_ctx(2, 2, 3, 6);
        let s = eigen_pilots(&ctx, &cfg(2, 2, 3, 1.0)).unwrap();
        let base = fully_sep_objective(s.stacked(), &ctx).unwrap();
        let x = complex_gaussian(&mut stream(6, 0, "t"), 3, 3);
        let q = x.qr().q();
        let v = fully_sep_objective(&(q * s.stacked()), &ctx).unwrap();
        assert!((v - base).abs() <= 1e-10 * base);
    }

    #[test]
    fn eigen_output_is_power_feasible() {
        for seed in 0..10 {
            let (_, ctx) = fully_sep_ctx(3, 2, 4, seed);
            for tau in 1..=6 {
                let s = eigen_pilots(&ctx, &cfg(3, 2, tau, 1.5)).unwrap();
                assert!(s.is_power_feasible(1.5));
            }
        }
    }

    #[test]
    fn degenerate_blocks_still_give_p_eigenvectors() {
        // Equal spectra across cells: the merged basis must stay blockwise.
        let p = blkdiag(&[rdiag(&[2.0, 1.0]), rdiag(&[2.0, 1.0])]);
        let ctx = PilotObjectiveContext::from_parts(vec![1.0, 1.0], TransmitAssembly::Shared(p), 2).unwrap();
        let s = eigen_pilots(&ctx, &cfg(2, 2, 2, 1.0)).unwrap();
        assert!((fully_sep_objective(s.stacked(), &ctx).unwrap() - 4.0).abs() < 1e-12);
        assert!(s.stacked()[(0, 0)].norm() == 1.0 && s.stacked()[(1, 2)].norm() == 1.0);
    }

    #[test]
    fn user_selection_matches_eigen_pilots() {
        let ctx = diag_ctx(vec![2.0, 0.5, 1.0], &[0.3, 0.9, 0.7, 0.2, 0.65, 0.1], 2);
        for tau in 1..=6 {
            let c = cfg(3, 2, tau, 1.0);
            let a = user_selection(&ctx, &c).unwrap();
            let b = eigen_pilots(&ctx, &c).unwrap();
            for (x, y) in a.stacked().iter().zip(b.stacked().iter()) {
                assert!((x.norm() - y.norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn user_selection_ties_and_single_user() {
        let ctx = diag_ctx(vec![1.0, 1.0], &[0.5; 4], 2);
        let s = user_selection(&ctx, &cfg(2, 2, 3, 1.0)).unwrap();
        for (row, col) in [(0, 0), (1, 1), (2, 2)] {
            assert_eq!(s.stacked()[(row, col)], real(1.0));
        }
        assert!(s.stacked().column(3).iter().all(|z| z.norm() == 0.0));
        let ctx = diag_ctx(vec![1.0, 3.0], &[0.9, 0.1, 0.5, 0.4], 2);
        let s = user_selection(&ctx, &cfg(2, 2, 1, 4.0)).unwrap();
        assert_eq!(s.stacked()[(0, 2)], real(2.0));
        assert_eq!(s.stacked().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn user_selection_rejects_dense_p() {
        let (_, ctx) = fully_sep_ctx(2, 2, 3, 1);
        let p = ctx.shared_p_bar().unwrap().clone() + CMatrix::from_element(4, 4, real(0.01));
        let dense = PilotObjectiveContext::from_parts(ctx.weights.clone(), TransmitAssembly::Shared(p), 2).unwrap();
        assert!(user_selection(&dense, &cfg(2, 2, 2, 1.0)).is_err());
    }
}
