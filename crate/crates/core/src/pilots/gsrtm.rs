//! Greedy sum-of-ratio-traces maximization.
//!
//! Pilot rows (one symbol time each) are added one at a time. With the stack
//! `S_N` fixed, appending a row `s` raises the objective by
//! `Σ_i w_i (s G_i s*) / (s T_i s*)` up to a constant, so each step is a
//! sum-of-quadratic-ratios problem solved by scanning a dictionary.

use super::{partially_sep_objective, PilotObjectiveContext};
use crate::channel::NetworkConfig;
use crate::error::{Error, Result};
use crate::estimator::PilotSet;
use crate::matlin::{self, identity, CMatrix, C64};

/// Relative positivity margin for `s T_i s*`.
pub const FEASIBILITY_EPS: f64 = 1e-10;

/// `((S̃ S̃*)⁻¹)` for `S̃ = [S; s]` from `Q = (S S*)⁻¹` by the block formula.
pub fn rank1_block_inverse(s_mat: &CMatrix, s: &CMatrix, q_prev: &CMatrix) -> Result<CMatrix> {
    let n = s_mat.nrows();
    if s.nrows() != 1 || s.ncols() != s_mat.ncols() || q_prev.nrows() != n || q_prev.ncols() != n {
        return Err(Error::DimMismatch("rank-one update operands do not conform".into()));
    }
    let ss = s.norm_squared();
    let v = s_mat * s.adjoint(); // S s*
    let qv = q_prev * &v;
    let denom = ss - (v.adjoint() * &qv)[(0, 0)].re;
    if !(denom >= 1e-12 * ss) || ss == 0.0 {
        return Err(Error::RowDependent);
    }
    let alpha = 1.0 / denom;
    let mut out = CMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(&(q_prev + (&qv * qv.adjoint()).scale(alpha)));
    let off = qv.scale(-alpha);
    out.view_mut((0, n), (n, 1)).copy_from(&off);
    out.view_mut((n, 0), (1, n)).copy_from(&off.adjoint());
    out[(n, n)] = C64::new(alpha, 0.0);
    Ok(out)
}

/// Per-cell matrices of the greedy step.
#[derive(Debug, Clone)]
pub struct GsrtmCell {
    /// `A_i = P̄_i² L_i`.
    pub a: CMatrix,
    /// `B_i = P̄_i`.
    pub b: CMatrix,
    pub a_half: CMatrix,
    pub b_half: CMatrix,
    pub b_inv_half: CMatrix,
    pub t: CMatrix,
    pub g: CMatrix,
    pub gamma: f64,
    pub x: CMatrix,
}

#[derive(Debug, Clone)]
pub struct GsrtmState {
    /// `S_N` (`N × MK`).
    pub s: CMatrix,
    pub weights: Vec<f64>,
    pub users_per_cell: usize,
    pub cells: Vec<GsrtmCell>,
}

impl GsrtmState {
    /// Empty stack: `T_i = B_i`, `G_i = A_i`.
    pub fn new(ctx: &PilotObjectiveContext) -> Result<Self> {
        let mk = ctx.total_users();
        let cells = (0..ctx.cells())
            .map(|i| {
                let b = matlin::hermitian_part(ctx.p_bar(i));
                let a = matlin::hermitian_part(&(&b * &b * ctx.selector(i)));
                let (b_half, b_inv_half) = matlin::hpd_sqrt_pair(&b).map_err(|e| match e {
                    Error::Singular { .. } | Error::NotPsd { .. } => Error::SingularB { cell: i },
                    e => e,
                })?;
                let a_half = matlin::psd_sqrt(&a)?;
                Ok(GsrtmCell {
                    t: b.clone(),
                    g: a.clone(),
                    gamma: 0.0,
                    x: -a_half.clone(),
                    a,
                    b,
                    a_half,
                    b_half,
                    b_inv_half,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GsrtmState { s: CMatrix::zeros(0, mk), weights: ctx.weights.clone(), users_per_cell: ctx.users_per_cell, cells })
    }

    pub fn len(&self) -> usize {
        self.s.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.nrows() == 0
    }

    /// Appends `row`, failing if it does not grow the rank.
    pub fn push_row(&mut self, row: &CMatrix) -> Result<()> {
        let n = self.s.nrows();
        let mut grown = self.s.clone().insert_row(n, C64::new(0.0, 0.0));
        grown.row_mut(n).copy_from(row);
        if matlin::range_basis(&grown.adjoint()).ncols() != n + 1 {
            return Err(Error::RowDependent);
        }
        self.s = grown;
        Ok(())
    }

    /// `Σ_i w_i (s G_i s*)/(s T_i s*)`, or `None` if some `s T_i s*` fails the
    /// positivity margin. `t_norms[i]` is `‖T_i‖₂`.
    pub fn score(&self, row: &CMatrix, t_norms: &[f64]) -> Option<f64> {
        let ss = row.norm_squared();
        let mut total = 0.0;
        for ((c, w), tn) in self.cells.iter().zip(&self.weights).zip(t_norms) {
            let den = (row * &c.t * row.adjoint())[(0, 0)].re;
            if !(den > FEASIBILITY_EPS * ss * tn) {
                return None;
            }
            total += w * (row * &c.g * row.adjoint())[(0, 0)].re / den;
        }
        Some(total)
    }

    pub fn t_norms(&self) -> Result<Vec<f64>> {
        self.cells.iter().map(|c| matlin::psd_spectral_norm(&c.t)).collect()
    }
}

/// Recomputes `T_i, γ_i, X_i, G_i` for the current stack.
pub fn gsrtm_update(mut state: GsrtmState) -> Result<GsrtmState> {
    let mk = state.s.ncols();
    let s_adj = state.s.adjoint();
    for c in state.cells.iter_mut() {
        let proj = if s_adj.ncols() == 0 {
            CMatrix::zeros(mk, mk)
        } else {
            matlin::range_projector(&(&c.b_half * &s_adj))
        };
        c.t = matlin::hermitian_part(&(&c.b_half * (identity(mk) - &proj) * &c.b_half));
        c.gamma = matlin::trace_of_product(&proj, &(&c.b_inv_half * &c.a_half * &c.b_inv_half)).re;
        c.x = &c.b_half * &proj * &c.b_inv_half * &c.a_half - &c.a_half;
        c.g = matlin::hermitian_part(&(c.t.scale(c.gamma) + &c.x * c.x.adjoint()));
    }
    Ok(state)
}

/// A chosen dictionary row and its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictionaryPick {
    pub index: usize,
    pub score: f64,
}

/// Scans `dictionary` (one candidate per row) for the best feasible row.
pub fn gsrtm_base_case(state: &GsrtmState, dictionary: &CMatrix) -> Result<DictionaryPick> {
    if dictionary.nrows() == 0 || dictionary.ncols() != state.s.ncols() {
        return Err(Error::DimMismatch("dictionary is empty or rows have the wrong length".into()));
    }
    let norms = state.t_norms()?;
    let mut best: Option<DictionaryPick> = None;
    for r in 0..dictionary.nrows() {
        let row = dictionary.rows(r, 1).into_owned();
        if let Some(score) = state.score(&row, &norms) {
            if best.is_none_or(|b| score > b.score) {
                best = Some(DictionaryPick { index: r, score });
            }
        }
    }
    best.ok_or(Error::NoFeasibleRow)
}

/// Same scores as [`GsrtmState::score`] for a whole dictionary, using
/// `s T s* = ‖s B½‖² − ‖s B½ U‖²` and `s X = s B½ U U* B^{-½} A½ − s A½`
/// with `U` an orthonormal basis of `R(B½ S*)`. Only the `K` columns of
/// cell `i` carry `A_i½`.
struct FastScorer {
    cells: Vec<FastCell>,
    weights: Vec<f64>,
    row_norms: Vec<f64>,
}

struct FastCell {
    b_half: CMatrix,
    /// `D B½`.
    e: CMatrix,
    e_norms: Vec<f64>,
    /// `D A½` restricted to the cell's columns.
    da: CMatrix,
    /// `B^{-½} A½` restricted to the cell's columns.
    f: CMatrix,
    /// `B^{-½} A½ B^{-½}`.
    h: CMatrix,
}

fn row_norms(a: &CMatrix) -> Vec<f64> {
    (0..a.nrows()).map(|r| matlin::row_norm_sqr(a, r)).collect()
}

fn max_eigenvalue(a: &CMatrix) -> f64 {
    matlin::hermitian_part(a).symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max)
}

impl FastScorer {
    fn new(state: &GsrtmState, dictionary: &CMatrix) -> Self {
        let k = state.users_per_cell;
        let cells = state
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let e = dictionary * &c.b_half;
                let a_cols = c.a_half.columns(i * k, k).into_owned();
                FastCell {
                    e_norms: row_norms(&e),
                    e,
                    da: dictionary * &a_cols,
                    f: &c.b_inv_half * &a_cols,
                    h: &c.b_inv_half * &c.a_half * &c.b_inv_half,
                    b_half: c.b_half.clone(),
                }
            })
            .collect();
        FastScorer { cells, weights: state.weights.clone(), row_norms: row_norms(dictionary) }
    }

    fn best(&self, stack: &CMatrix) -> Result<DictionaryPick> {
        let q = self.row_norms.len();
        let mut totals = vec![0.0; q];
        let mut feasible = vec![true; q];
        let s_adj = stack.adjoint();
        for (c, w) in self.cells.iter().zip(&self.weights) {
            let mk = c.b_half.nrows();
            let u = if s_adj.ncols() == 0 { CMatrix::zeros(mk, 0) } else { matlin::range_basis(&(&c.b_half * &s_adj)) };
            let t = &c.b_half * (identity(mk) - &u * u.adjoint()) * &c.b_half;
            let t_norm = max_eigenvalue(&t);
            let gamma = matlin::trace_re(&(u.adjoint() * &c.h * &u));
            let eu = &c.e * &u;
            let sx = &eu * (u.adjoint() * &c.f) - &c.da;
            for d in 0..q {
                if !feasible[d] {
                    continue;
                }
                let den = c.e_norms[d] - matlin::row_norm_sqr(&eu, d);
                if !(den > FEASIBILITY_EPS * self.row_norms[d] * t_norm) {
                    feasible[d] = false;
                    continue;
                }
                totals[d] += w * (gamma + matlin::row_norm_sqr(&sx, d) / den);
            }
        }
        let mut best: Option<DictionaryPick> = None;
        for d in (0..q).filter(|&d| feasible[d]) {
            if best.is_none_or(|b| totals[d] > b.score) {
                best = Some(DictionaryPick { index: d, score: totals[d] });
            }
        }
        best.ok_or(Error::NoFeasibleRow)
    }
}

/// Output of a full GSRTM design.
#[derive(Debug, Clone)]
pub struct GsrtmRun {
    pub pilots: PilotSet,
    pub picks: Vec<DictionaryPick>,
    /// Objective of the unscaled stack after each step.
    pub objective_trace: Vec<f64>,
}

/// GSRTM with the per-step pick and objective history.
pub fn gsrtm_traced(ctx: &PilotObjectiveContext, cfg: &NetworkConfig, dictionary: &CMatrix) -> Result<GsrtmRun> {
    let mk = ctx.total_users();
    if ctx.cells() != cfg.cells || ctx.users_per_cell != cfg.users_per_cell {
        return Err(Error::DimMismatch("context does not match the network configuration".into()));
    }
    if dictionary.nrows() == 0 || dictionary.ncols() != mk {
        return Err(Error::DimMismatch(format!(
            "dictionary is {}x{}, rows must have {mk} entries",
            dictionary.nrows(),
            dictionary.ncols()
        )));
    }
    cfg.validate()?;
    let state = GsrtmState::new(ctx)?;
    let scorer = FastScorer::new(&state, dictionary);
    let mut stack = CMatrix::zeros(0, mk);
    let mut picks = Vec::with_capacity(cfg.pilot_len);
    let mut trace = Vec::with_capacity(cfg.pilot_len);
    for _ in 0..cfg.pilot_len {
        let pick = scorer.best(&stack)?;
        let n = stack.nrows();
        stack = stack.insert_row(n, C64::new(0.0, 0.0));
        stack.row_mut(n).copy_from(&dictionary.row(pick.index));
        picks.push(pick);
        trace.push(partially_sep_objective(&stack, ctx)?);
    }
    // One global factor keeps the objective; the largest column sets it.
    let max_col = (0..mk).map(|c| matlin::col_norm_sqr(&stack, c)).fold(0.0, f64::max);
    let alpha = (cfg.power / max_col).sqrt();
    let pilots = PilotSet::from_stacked(stack.scale(alpha), ctx.users_per_cell)?;
    Ok(GsrtmRun { pilots, picks, objective_trace: trace })
}

/// Greedy pilot design over `dictionary` rows, scaled to the power budget.
pub fn gsrtm(ctx: &PilotObjectiveContext, cfg: &NetworkConfig, dictionary: &CMatrix) -> Result<PilotSet> {
    Ok(gsrtm_traced(ctx, cfg, dictionary)?.pilots)
}
