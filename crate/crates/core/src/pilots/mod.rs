//! Pilot sequence design.
//!
//! Every designer returns a [`PilotSet`] whose stacked matrix `S` is
//! `τ × MK` and satisfies the per-user energy budget `diag(S* S) ≤ 𝒫`.

mod baselines;
mod dictionary;
mod eigen;
mod gsrtm;
mod objective;

pub use baselines::{baseline_orthogonal_reuse, baseline_random, baseline_spa, dft_matrix, spa_assignment, spa_base_sequences};
pub use dictionary::{make_dictionary, DictionaryKind, DICTIONARY_SIZE};
pub use eigen::{eigen_pilots, eigen_sum_bound, user_selection};
pub use gsrtm::{
    gsrtm, gsrtm_base_case, gsrtm_traced, gsrtm_update, rank1_block_inverse, DictionaryPick, GsrtmCell,
    GsrtmRun, GsrtmState, FEASIBILITY_EPS,
};
pub use objective::{fully_sep_objective, partially_sep_objective};

use rand::Rng;

use crate::channel::{effective_p_matrices, CorrelationProfile, NetworkConfig, TransmitAssembly};
use crate::combiner::weight;
use crate::error::{Error, Result};
use crate::estimator::{CombinerSet, PilotSet};
use crate::matlin::{rdiag, CMatrix};

/// Everything the pilot objectives need: per-cell weights `w_i` and the
/// stacked transmit correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObjectiveContext {
    pub weights: Vec<f64>,
    pub transmit: TransmitAssembly,
    pub users_per_cell: usize,
}

impl PilotObjectiveContext {
    pub fn new(profile: &CorrelationProfile, combiners: &CombinerSet) -> Result<Self> {
        if combiners.len() != profile.cells() {
            return Err(Error::DimMismatch(format!(
                "{} combiners for {} cells",
                combiners.len(),
                profile.cells()
            )));
        }
        let (transmit, receive) = effective_p_matrices(profile);
        let weights = receive
            .iter()
            .zip(combiners.iter())
            .map(|(q, w)| weight(q, w).map(|c| c.0))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(weights, transmit, profile.users_per_cell())
    }

    pub fn from_parts(weights: Vec<f64>, transmit: TransmitAssembly, users_per_cell: usize) -> Result<Self> {
        let mk = weights.len() * users_per_cell;
        let dims_ok = match &transmit {
            TransmitAssembly::Shared(p) => p.nrows() == mk && p.ncols() == mk,
            TransmitAssembly::PerCell(ps) => {
                ps.len() == weights.len() && ps.iter().all(|p| p.nrows() == mk && p.ncols() == mk)
            }
        };
        if !dims_ok || users_per_cell == 0 {
            return Err(Error::DimMismatch(format!("transmit assembly does not match {mk} users")));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidConfig("combiner weights must be nonnegative".into()));
        }
        Ok(PilotObjectiveContext { weights, transmit, users_per_cell })
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn total_users(&self) -> usize {
        self.weights.len() * self.users_per_cell
    }

    /// `W̄ = blkdiag(w_1 I_K, …, w_M I_K)`.
    pub fn w_bar(&self) -> CMatrix {
        let d: Vec<f64> =
            self.weights.iter().flat_map(|&w| std::iter::repeat_n(w, self.users_per_cell)).collect();
        rdiag(&d)
    }

    /// `L_i = Z_i ⊗ I_K`: selects the users of cell `i`.
    pub fn selector(&self, i: usize) -> CMatrix {
        let k = self.users_per_cell;
        let d: Vec<f64> = (0..self.total_users()).map(|u| if u / k == i { 1.0 } else { 0.0 }).collect();
        rdiag(&d)
    }

    /// `P̄_i`; the shared `P̄` for fully-separable profiles.
    pub fn p_bar(&self, i: usize) -> &CMatrix {
        self.transmit.for_cell(i)
    }

    pub fn shared_p_bar(&self) -> Result<&CMatrix> {
        match &self.transmit {
            TransmitAssembly::Shared(p) => Ok(p),
            TransmitAssembly::PerCell(_) => {
                Err(Error::InvalidConfig("operation needs a fully-separable profile".into()))
            }
        }
    }
}

/// How the pilot matrix of a trial is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PilotMethod {
    Eigen,
    Gsrtm(DictionaryKind),
    OrthReuse,
    Random,
    Spa,
}

impl PilotMethod {
    pub fn name(&self) -> String {
        match self {
            PilotMethod::Eigen => "eigen".into(),
            PilotMethod::Gsrtm(DictionaryKind::Gaussian) => "gsrtm".into(),
            PilotMethod::Gsrtm(kind) => format!("gsrtm-{}", kind.name()),
            PilotMethod::OrthReuse => "orth-reuse".into(),
            PilotMethod::Random => "random".into(),
            PilotMethod::Spa => "spa".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "eigen" => Ok(PilotMethod::Eigen),
            "gsrtm" => Ok(PilotMethod::Gsrtm(DictionaryKind::Gaussian)),
            "orth-reuse" | "orthreuse" | "reuse" => Ok(PilotMethod::OrthReuse),
            "random" => Ok(PilotMethod::Random),
            "spa" => Ok(PilotMethod::Spa),
            other => match other.strip_prefix("gsrtm-") {
                Some(kind) => Ok(PilotMethod::Gsrtm(DictionaryKind::parse(kind)?)),
                None => Err(Error::Parse(format!("unknown pilot method `{other}`"))),
            },
        }
    }
}

/// Runs the chosen designer. `rng` feeds the random baseline, the SPA base
/// sequences and the GSRTM dictionary.
pub fn design_pilots<R: Rng + ?Sized>(
    method: PilotMethod,
    profile: &CorrelationProfile,
    combiners: &CombinerSet,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<PilotSet> {
    match method {
        PilotMethod::Eigen => eigen_pilots(&PilotObjectiveContext::new(profile, combiners)?, cfg),
        PilotMethod::Gsrtm(kind) => {
            let ctx = PilotObjectiveContext::new(profile, combiners)?;
            let dict = make_dictionary(kind, DICTIONARY_SIZE, cfg.total_users(), rng);
            gsrtm(&ctx, cfg, &dict)
        }
        PilotMethod::OrthReuse => baseline_orthogonal_reuse(cfg),
        PilotMethod::Random => Ok(baseline_random(cfg, rng)),
        PilotMethod::Spa => {
            let base = spa_base_sequences(cfg.pilot_len, rng);
            baseline_spa(profile, cfg, &base)
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::channel::make_random_fully_separable;
    use crate::combiner::{design_combiners, CombinerMethod};
    use crate::random::{complex_gaussian, stream};

    pub fn fully_sep_ctx(m: usize, k: usize, n: usize, seed: u64) -> (CorrelationProfile, PilotObjectiveContext) {
        let cfg = NetworkConfig::new(m, k, n, n, 1, 1.0).unwrap();
        let mut rng = stream(seed, 0, "profile");
        let profile = make_random_fully_separable(&cfg, &mut rng);
        let qs: Vec<CMatrix> = (0..m).map(|i| profile.receive(i)).collect();
        let w = design_combiners(&qs, n.min(2), CombinerMethod::FullyDigital, &mut rng).unwrap();
        let ctx = PilotObjectiveContext::new(&profile, &w).unwrap();
        (profile, ctx)
    }

    /// Partially-separable context with dense random `P_ij = X X* + 0.1 I`.
    pub fn partial_ctx(m: usize, k: usize, seed: u64) -> PilotObjectiveContext {
        let mut rng = stream(seed, 0, "partial");
        let per_cell = (0..m)
            .map(|_| {
                let blocks: Vec<CMatrix> = (0..m)
                    .map(|_| {
                        let x = complex_gaussian(&mut rng, k, k);
                        &x * x.adjoint() + crate::matlin::identity(k).scale(0.1)
                    })
                    .collect();
                crate::matlin::blkdiag(&blocks)
            })
            .collect();
        let weights = (0..m).map(|i| 1.0 + i as f64 * 0.5).collect();
        PilotObjectiveContext::from_parts(weights, TransmitAssembly::PerCell(per_cell), k).unwrap()
    }

    /// Random `τ × MK` pilots scaled so the largest column is on budget.
    pub fn random_feasible(tau: usize, mk: usize, power: f64, seed: u64, idx: u64) -> CMatrix {
        let s = complex_gaussian(&mut stream(seed, idx, "rand-s"), tau, mk);
        let max = (0..mk).map(|c| crate::matlin::col_norm_sqr(&s, c)).fold(0.0, f64::max);
        s.scale((power / max).sqrt())
    }
}
