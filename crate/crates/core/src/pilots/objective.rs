use super::PilotObjectiveContext;
use crate::error::{Error, Result};
use crate::matlin::{self, CMatrix};

fn ratio_trace(num: &CMatrix, den: &CMatrix, cell: usize) -> Result<f64> {
    let x = matlin::solve_hpd(&matlin::hermitian_part(den), num).map_err(|e| match e {
        Error::Singular { condition } => Error::SingularGram { cell, condition },
        e => e,
    })?;
    Ok(matlin::trace_re(&x))
}

fn check_cols(s: &CMatrix, ctx: &PilotObjectiveContext) -> Result<()> {
    if s.ncols() != ctx.total_users() {
        return Err(Error::DimMismatch(format!(
            "pilot stack has {} columns, expected {}",
            s.ncols(),
            ctx.total_users()
        )));
    }
    Ok(())
}

/// `tr((S P̄ S*)⁻¹ S P̄ W̄ P̄ S*)`.
pub fn fully_sep_objective(s: &CMatrix, ctx: &PilotObjectiveContext) -> Result<f64> {
    check_cols(s, ctx)?;
    let p = ctx.shared_p_bar()?;
    let sp = s * p;
    let num = &sp * ctx.w_bar() * p * s.adjoint();
    ratio_trace(&num, &(&sp * s.adjoint()), 0)
}

/// `Σ_i w_i tr(S P̄_i² L_i S* [S P̄_i S*]⁻¹)`.
pub fn partially_sep_objective(s: &CMatrix, ctx: &PilotObjectiveContext) -> Result<f64> {
    check_cols(s, ctx)?;
    let mut total = 0.0;
    for i in 0..ctx.cells() {
        let p = ctx.p_bar(i);
        let sp = s * p;
        let num = &sp * p * ctx.selector(i) * s.adjoint();
        total += ctx.weights[i] * ratio_trace(&num, &(&sp * s.adjoint()), i)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{fully_sep_ctx, partial_ctx, random_feasible};
    use super::*;
    use crate::channel::TransmitAssembly;
    use crate::matlin::c64;

    #[test]
    fn scale_invariance() {
        let (_, ctx) = fully_sep_ctx(2, 2, 3, 4);
        let pctx = partial_ctx(2, 2, 4);
        for idx in 0..5 {
            let s = random_feasible(3, 4, 1.0, 4, idx);
            let alpha = c64(-2.5, 0.7);
            let a = fully_sep_objective(&s, &ctx).unwrap();
            let b = fully_sep_objective(&s.map(|z| z * alpha), &ctx).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs());
            let a = partially_sep_objective(&s, &pctx).unwrap();
            let b = partially_sep_objective(&s.map(|z| z * alpha), &pctx).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn objectives_agree_when_transmit_is_shared() {
        for seed in 0..10 {
            let (_, ctx) = fully_sep_ctx(3, 2, 4, seed);
            let p = ctx.shared_p_bar().unwrap().clone();
            let per_cell = PilotObjectiveContext::from_parts(
                ctx.weights.clone(),
                TransmitAssembly::PerCell(vec![p; 3]),
                2,
            )
            .unwrap();
            let s = random_feasible(4, 6, 1.0, seed, 1);
            let a = fully_sep_objective(&s, &ctx).unwrap();
            let b = partially_sep_objective(&s, &per_cell).unwrap();
            let c = partially_sep_objective(&s, &ctx).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} {b}");
            assert!((a - c).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn single_cell_reduces_to_ratio_trace() {
        let pctx = partial_ctx(1, 3, 2);
        let p = pctx.p_bar(0).clone();
        let shared = PilotObjectiveContext::from_parts(pctx.weights.clone(), TransmitAssembly::Shared(p), 3).unwrap();
        let s = random_feasible(2, 3, 1.0, 2, 0);
        let a = partially_sep_objective(&s, &pctx).unwrap();
        let b = fully_sep_objective(&s, &shared).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn singular_gram_is_reported() {
        let (_, ctx) = fully_sep_ctx(2, 2, 3, 1);
        let s = CMatrix::zeros(2, 4);
        assert!(matches!(fully_sep_objective(&s, &ctx), Err(Error::SingularGram { .. })));
        assert!(matches!(partially_sep_objective(&s, &ctx), Err(Error::SingularGram { .. })));
        assert!(matches!(fully_sep_objective(&CMatrix::zeros(2, 3), &ctx), Err(Error::DimMismatch(_))));
    }
}
