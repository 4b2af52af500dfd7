//! Interference-limited uplink training and the per-cell MMSE estimator.
//!
//! With `y_i = vec(Y_i) = Σ_j (S_j ⊗ W_i) h_ij` and `h_ij ~ CN(0, P_ij ⊗ Q_i)`:
//!
//! ```text
//! G_i = Σ_j (S_j P_ij S_j*) ⊗ (W_i Q_i W_i*)      (covariance of y_i)
//! B_i = P_ii S_i* ⊗ Q_i W_i*                      (cross-covariance of h_ii, y_i)
//! ĥ_ii = B_i G_i⁻¹ y_i
//! ε_i  = tr(P_ii ⊗ Q_i) − tr(B_i G_i⁻¹ B_i*)
//! ```

use crate::channel::{ChannelRealization, CorrelationProfile};
use crate::combiner::FeasibleSet;
use crate::error::{Error, Result};
use crate::matlin::{self, kron, trace_re, CMatrix};

/// Tolerance on the per-user pilot energy constraint.
pub const POWER_TOL: f64 = 1e-9;

/// Pilot sequences of every user, stacked as `S = [S_1, …, S_M]` (`τ × MK`).
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    stacked: CMatrix,
    users_per_cell: usize,
}

impl PilotSet {
    pub fn from_stacked(stacked: CMatrix, users_per_cell: usize) -> Result<Self> {
        if users_per_cell == 0 || stacked.ncols() % users_per_cell != 0 {
            return Err(Error::DimMismatch(format!(
                "{} pilot columns do not split into cells of {users_per_cell}",
                stacked.ncols()
            )));
        }
        if !matlin::is_finite(&stacked) {
            return Err(Error::NonFinite);
        }
        Ok(PilotSet { stacked, users_per_cell })
    }

    pub fn from_cells(cells: &[CMatrix]) -> Result<Self> {
        let first = cells.first().ok_or_else(|| Error::DimMismatch("no cells".into()))?;
        let (tau, k) = (first.nrows(), first.ncols());
        if cells.iter().any(|s| s.nrows() != tau || s.ncols() != k) {
            return Err(Error::DimMismatch("per-cell pilot matrices differ in shape".into()));
        }
        let mut stacked = CMatrix::zeros(tau, k * cells.len());
        for (i, s) in cells.iter().enumerate() {
            stacked.view_mut((0, i * k), (tau, k)).copy_from(s);
        }
        Self::from_stacked(stacked, k)
    }

    pub fn stacked(&self) -> &CMatrix {
        &self.stacked
    }

    pub fn pilot_len(&self) -> usize {
        self.stacked.nrows()
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn cells(&self) -> usize {
        self.stacked.ncols() / self.users_per_cell
    }

    /// `S_i` (`τ × K`).
    pub fn cell(&self, i: usize) -> CMatrix {
        let k = self.users_per_cell;
        self.stacked.columns(i * k, k).into_owned()
    }

    /// Pilot energy `s_ik* s_ik` of every user, in stacked order.
    pub fn user_energies(&self) -> Vec<f64> {
        (0..self.stacked.ncols()).map(|c| matlin::col_norm_sqr(&self.stacked, c)).collect()
    }

    pub fn is_power_feasible(&self, power: f64) -> bool {
        self.user_energies().iter().all(|&e| e <= power + POWER_TOL)
    }
}

/// Analog combiners `W_i` (`N_RF × N_BS`) for every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSet {
    combiners: Vec<CMatrix>,
    feasible: FeasibleSet,
}

impl CombinerSet {
    pub fn new(combiners: Vec<CMatrix>, feasible: FeasibleSet) -> Result<Self> {
        if let Some(w) = combiners.iter().find(|w| !feasible.contains(w)) {
            return Err(Error::InvalidConfig(format!(
                "{}x{} combiner is outside the {feasible:?} set",
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(CombinerSet { combiners, feasible })
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.combiners[i]
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        self.feasible
    }

    pub fn len(&self) -> usize {
        self.combiners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combiners.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        self.combiners.iter()
    }
}

fn check_dims(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    profile: &CorrelationProfile,
) -> Result<()> {
    let m = profile.cells();
    if pilots.cells() != m || combiners.len() != m {
        return Err(Error::DimMismatch(format!(
            "{} pilot cells / {} combiners for {m} cells",
            pilots.cells(),
            combiners.len()
        )));
    }
    if pilots.users_per_cell() != profile.users_per_cell() {
        return Err(Error::DimMismatch("users per cell differ between pilots and profile".into()));
    }
    if let Some(w) = combiners.iter().find(|w| w.ncols() != profile.antennas()) {
        return Err(Error::DimMismatch(format!(
            "combiner has {} columns, profile has {} antennas",
            w.ncols(),
            profile.antennas()
        )));
    }
    Ok(())
}

/// Per-cell received pilot signals `Y_i = W_i Σ_j H_ij S_jᵀ` (`N_RF × τ`).
pub fn receive(
    real_ch: &ChannelRealization,
    pilots: &PilotSet,
    combiners: &CombinerSet,
) -> Result<Vec<CMatrix>> {
    let m = real_ch.h.len();
    if pilots.cells() != m || combiners.len() != m {
        return Err(Error::DimMismatch("realization, pilots and combiners disagree on M".into()));
    }
    let cells: Vec<CMatrix> = (0..m).map(|j| pilots.cell(j)).collect();
    (0..m)
        .map(|i| {
            let w = combiners.get(i);
            let h0 = real_ch.get(i, 0);
            if w.ncols() != h0.nrows() || h0.ncols() != pilots.users_per_cell() {
                return Err(Error::DimMismatch("channel does not conform to pilots/combiner".into()));
            }
            let mut acc = CMatrix::zeros(h0.nrows(), pilots.pilot_len());
            for (j, s) in cells.iter().enumerate() {
                acc += real_ch.get(i, j) * s.transpose();
            }
            Ok(w * acc)
        })
        .collect()
}

/// How to treat a singular observation covariance `G_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramPolicy {
    /// Fail with `SingularGram`.
    Strict,
    /// Retry once with a ridge of `1e-10 tr(G)/dim(G)` and flag the result.
    RidgeFallback,
}

pub const RIDGE_SCALE: f64 = 1e-10;

/// The MMSE estimator of cell `i`, reusable across channel draws.
#[derive(Debug, Clone)]
pub struct CellEstimator {
    pub cell: usize,
    /// `B_i G_i⁻¹` (`K N_BS × τ N_RF`).
    pub operator: CMatrix,
    /// `ε_i`.
    pub analytic_mse: f64,
    /// `tr(A_i) = tr(P_ii) tr(Q_i)`.
    pub trace_a: f64,
    /// `tr(B_i C_i B_i*)`.
    pub explained: f64,
    pub regularized: bool,
}

impl CellEstimator {
    pub fn build(
        pilots: &PilotSet,
        combiners: &CombinerSet,
        profile: &CorrelationProfile,
        i: usize,
        policy: GramPolicy,
    ) -> Result<Self> {
        check_dims(pilots, combiners, profile)?;
        let m = profile.cells();
        let w = combiners.get(i);
        let q = profile.receive(i);
        let wq = w * &q;
        let wqw = matlin::hermitian_part(&(&wq * w.adjoint()));
        let mut pilot_gram = CMatrix::zeros(pilots.pilot_len(), pilots.pilot_len());
        for j in 0..m {
            let s = pilots.cell(j);
            pilot_gram += &s * profile.transmit(i, j) * s.adjoint();
        }
        let gram = kron(&matlin::hermitian_part(&pilot_gram), &wqw);
        let p_ii = profile.transmit(i, i);
        let b = kron(&(&p_ii * pilots.cell(i).adjoint()), &wq.adjoint());
        let b_adj = b.adjoint();

        let (x, regularized) = match matlin::solve_hpd(&gram, &b_adj) {
            Ok(x) => (x, false),
            Err(Error::Singular { condition }) => {
                if policy == GramPolicy::Strict {
                    return Err(Error::SingularGram { cell: i, condition });
                }
                let dim = gram.nrows().max(1);
                let ridge = RIDGE_SCALE * trace_re(&gram).max(0.0) / dim as f64;
                let shifted = &gram + matlin::identity(dim).scale(ridge);
                match matlin::solve_hpd(&shifted, &b_adj) {
                    Ok(x) => (x, true),
                    Err(Error::Singular { condition }) => {
                        return Err(Error::SingularGram { cell: i, condition })
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(e) => return Err(e),
        };
        let explained = matlin::trace_of_product(&b, &x).re;
        let trace_a = trace_re(&p_ii) * trace_re(&q);
        Ok(CellEstimator {
            cell: i,
            operator: x.adjoint(),
            analytic_mse: (trace_a - explained).max(0.0),
            trace_a,
            explained,
            regularized,
        })
    }

    /// `ĥ_ii` from the received block `Y_i`.
    pub fn estimate(&self, y: &CMatrix) -> CMatrix {
        &self.operator * matlin::vec(y)
    }
}

/// `ĥ_ii` for cell `i` from `Y_i`.
pub fn mmse_estimate(
    y: &CMatrix,
    pilots: &PilotSet,
    combiners: &CombinerSet,
    profile: &CorrelationProfile,
    i: usize,
) -> Result<CMatrix> {
    let est = CellEstimator::build(pilots, combiners, profile, i, GramPolicy::Strict)?;
    if est.operator.ncols() != y.len() {
        return Err(Error::DimMismatch("received block does not match estimator".into()));
    }
    Ok(est.estimate(y))
}

/// Closed-form MSE `ε_i`.
pub fn analytic_mse(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    profile: &CorrelationProfile,
    i: usize,
) -> Result<f64> {
    Ok(CellEstimator::build(pilots, combiners, profile, i, GramPolicy::Strict)?.analytic_mse)
}

/// `ε = Σ_i ε_i`.
pub fn sum_mse(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    profile: &CorrelationProfile,
) -> Result<f64> {
    (0..profile.cells()).map(|i| analytic_mse(pilots, combiners, profile, i)).sum()
}

/// Estimation outcome for one channel draw.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub h_hat: Vec<CMatrix>,
    pub eps: Vec<f64>,
    pub eps_sum: f64,
    /// `(1/M) Σ_i ‖h_ii − ĥ_ii‖² / ‖h_ii‖²`.
    pub nmse_empirical: f64,
    /// Some cell needed the ridge fallback.
    pub regularized: bool,
}

/// Estimators for every cell of one design.
#[derive(Debug, Clone)]
pub struct NetworkEstimator {
    cells: Vec<CellEstimator>,
    pilots: PilotSet,
    combiners: CombinerSet,
}

impl NetworkEstimator {
    pub fn build(
        pilots: &PilotSet,
        combiners: &CombinerSet,
        profile: &CorrelationProfile,
        policy: GramPolicy,
    ) -> Result<Self> {
        let cells = (0..profile.cells())
            .map(|i| CellEstimator::build(pilots, combiners, profile, i, policy))
            .collect::<Result<Vec<_>>>()?;
        Ok(NetworkEstimator { cells, pilots: pilots.clone(), combiners: combiners.clone() })
    }

    pub fn cell(&self, i: usize) -> &CellEstimator {
        &self.cells[i]
    }

    pub fn sum_mse(&self) -> f64 {
        self.cells.iter().map(|c| c.analytic_mse).sum()
    }

    pub fn regularized(&self) -> bool {
        self.cells.iter().any(|c| c.regularized)
    }

    pub fn run(&self, real_ch: &ChannelRealization) -> Result<EstimationReport> {
        let ys = receive(real_ch, &self.pilots, &self.combiners)?;
        let m = self.cells.len();
        let mut h_hat = Vec::with_capacity(m);
        let mut nmse = 0.0;
        for (c, y) in self.cells.iter().zip(&ys) {
            let est = c.estimate(y);
            let truth = real_ch.vec(c.cell, c.cell);
            let energy: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
            let err: f64 = (&truth - &est).iter().map(|z| z.norm_sqr()).sum();
            nmse += if energy > 0.0 { err / energy } else { 0.0 };
            h_hat.push(est);
        }
        let eps: Vec<f64> = self.cells.iter().map(|c| c.analytic_mse).collect();
        Ok(EstimationReport {
            h_hat,
            eps_sum: eps.iter().sum(),
            eps,
            nmse_empirical: nmse / m as f64,
            regularized: self.regularized(),
        })
    }
}

/// The pilot-side ratio `tr(S_i P_ii² S_i* [Σ_j S_j P_ij S_j*]⁻¹)` of cell `i`.
/// Multiplied by the combiner weight `w_i` it equals `tr(B_i C_i B_i*)`.
pub fn pilot_ratio(pilots: &PilotSet, profile: &CorrelationProfile, i: usize) -> Result<f64> {
    let mut gram = CMatrix::zeros(pilots.pilot_len(), pilots.pilot_len());
    for j in 0..profile.cells() {
        let s = pilots.cell(j);
        gram += &s * profile.transmit(i, j) * s.adjoint();
    }
    let s_i = pilots.cell(i);
    let p = profile.transmit(i, i);
    let num = &s_i * &p * &p * s_i.adjoint();
    let x = matlin::solve_hpd(&gram, &num)
        .map_err(|e| match e {
            Error::Singular { condition } => Error::SingularGram { cell: i, condition },
            e => e,
        })?;
    Ok(matlin::trace_re(&x))
}
