use std::f64::consts::TAU;

use rand::Rng;

use crate::channel::{CorrelationProfile, DecayGrid, NetworkConfig};
use crate::error::{Error, Result};
use crate::estimator::PilotSet;
use crate::matlin::{self, CMatrix, C64};
use crate::random::complex_gaussian;

/// Unitary `n × n` DFT matrix.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = (n as f64).sqrt().recip();
    CMatrix::from_fn(n, n, |r, c| C64::from_polar(scale, -TAU * ((r * c) % n) as f64 / n as f64))
}

fn normalize_columns(mut s: CMatrix, power: f64) -> CMatrix {
    for c in 0..s.ncols() {
        let norm = matlin::col_norm_sqr(&s, c).sqrt();
        if norm > 0.0 {
            s.column_mut(c).scale_mut(power.sqrt() / norm);
        }
    }
    s
}

/// The same `K` orthogonal pilots (first DFT columns) in every cell.
pub fn baseline_orthogonal_reuse(cfg: &NetworkConfig) -> Result<PilotSet> {
    let (tau, k) = (cfg.pilot_len, cfg.users_per_cell);
    if tau < k {
        return Err(Error::DimMismatch(format!("{k} orthogonal pilots need tau >= {k}, got {tau}")));
    }
    let s = dft_matrix(tau).columns(0, k).scale(cfg.power.sqrt());
    PilotSet::from_cells(&vec![s; cfg.cells])
}

/// i.i.d. CN(0, 1) pilots, each column scaled to energy `𝒫`.
pub fn baseline_random<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> PilotSet {
    let s = complex_gaussian(rng, cfg.pilot_len, cfg.total_users());
    PilotSet::from_stacked(normalize_columns(s, cfg.power), cfg.users_per_cell)
        .expect("stack shape follows the config")
}

/// Leading eigenvectors of `X X*` for a fresh `τ × τ` Gaussian `X`; the
/// columns are orthonormal.
pub fn spa_base_sequences<R: Rng + ?Sized>(tau: usize, rng: &mut R) -> CMatrix {
    let x = complex_gaussian(rng, tau, tau);
    matlin::herm_eig(&matlin::hermitian_part(&(&x * x.adjoint())))
        .expect("Gram matrix is Hermitian")
        .vectors
}

/// Sequence index of every user, `[cell][user]`, over a pool of `sequences`
/// orthogonal pilots.
///
/// Cell 0 takes the identity assignment. Each later cell repeatedly gives
/// its most attenuated unassigned user (smallest `β_iki`) the free sequence
/// whose current holders in earlier cells reach this base station the
/// weakest (smallest `Σ β_{i,k',j}`). Ties go to the lower index.
pub fn spa_assignment(decay: &DecayGrid, sequences: usize) -> Result<Vec<Vec<usize>>> {
    let (m, k) = (decay.cells(), decay.users());
    if sequences < k {
        return Err(Error::DimMismatch(format!("SPA assigns {k} users per cell and needs {k} sequences, got {sequences}")));
    }
    let mut holders: Vec<Vec<(usize, usize)>> = vec![Vec::new(); sequences];
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut assign = vec![usize::MAX; k];
        if i == 0 {
            for (u, a) in assign.iter_mut().enumerate() {
                *a = u;
            }
        } else {
            let mut free: Vec<bool> = vec![true; sequences];
            for _ in 0..k {
                let user = (0..k)
                    .filter(|&u| assign[u] == usize::MAX)
                    .min_by(|&a, &b| decay.get(i, a, i).total_cmp(&decay.get(i, b, i)))
                    .expect("an unassigned user remains");
                let score = |q: usize| -> f64 { holders[q].iter().map(|&(j, kk)| decay.get(i, kk, j)).sum() };
                let seq = (0..sequences)
                    .filter(|&q| free[q])
                    .min_by(|&a, &b| score(a).total_cmp(&score(b)))
                    .expect("sequences >= K leaves a free sequence");
                assign[user] = seq;
                free[seq] = false;
            }
        }
        for (u, &q) in assign.iter().enumerate() {
            holders[q].push((i, u));
        }
        out.push(assign);
    }
    Ok(out)
}

/// Smart pilot assignment of the first `K` columns of `base_sequences`
/// (`τ × ≥K`, orthonormal), each scaled to energy `𝒫`. Longer pilots add no
/// new sequences: only `K` are ever shared out.
pub fn baseline_spa(profile: &CorrelationProfile, cfg: &NetworkConfig, base_sequences: &CMatrix) -> Result<PilotSet> {
    let decay = profile
        .decay_grid()
        .ok_or_else(|| Error::InvalidConfig("SPA needs diagonal transmit correlations".into()))?;
    let k = cfg.users_per_cell;
    if base_sequences.nrows() != cfg.pilot_len || base_sequences.ncols() < k {
        return Err(Error::DimMismatch(format!(
            "base sequences are {}x{}, need {}x{k} or wider",
            base_sequences.nrows(),
            base_sequences.ncols(),
            cfg.pilot_len
        )));
    }
    let base = normalize_columns(base_sequences.columns(0, k).into_owned(), cfg.power);
    let cells: Vec<CMatrix> = spa_assignment(&decay, k)?
        .iter()
        .map(|assign| {
            let mut s = CMatrix::zeros(cfg.pilot_len, assign.len());
            for (u, &q) in assign.iter().enumerate() {
                s.set_column(u, &base.column(q));
            }
            s
        })
        .collect();
    PilotSet::from_cells(&cells)
}
