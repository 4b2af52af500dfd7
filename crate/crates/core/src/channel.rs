//! Network dimensions, correlation profiles and channel sampling.
//!
//! A channel between the users of cell `j` and base station `i` is
//! `H_ij = Q_i^{1/2} H̄_ij (P_ij^{1/2})^T` with `H̄_ij` i.i.d. CN(0, 1), so
//! that `vec(H_ij) ~ CN(0, P_ij ⊗ Q_i)`. For the real diagonal transmit
//! correlations used by every experiment the transpose is a no-op.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matlin::{self, blkdiag, identity, rdiag, CMatrix};
use crate::random::complex_gaussian;

/// Dimensions and power budget shared by every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    pub rf_chains: usize,
    pub pilot_len: usize,
    /// Per-user pilot energy budget.
    pub power: f64,
}

impl NetworkConfig {
    pub fn new(
        cells: usize,
        users_per_cell: usize,
        antennas: usize,
        rf_chains: usize,
        pilot_len: usize,
        power: f64,
    ) -> Result<Self> {
        let cfg = NetworkConfig { cells, users_per_cell, antennas, rf_chains, pilot_len, power };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.cells == 0 || self.users_per_cell == 0 || self.antennas == 0 {
            return bad("cells, users and antennas must be positive".into());
        }
        if self.rf_chains == 0 || self.rf_chains > self.antennas {
            return bad(format!(
                "rf_chains must lie in 1..={} (got {})",
                self.antennas, self.rf_chains
            ));
        }
        if self.pilot_len == 0 || self.pilot_len > self.total_users() {
            return bad(format!(
                "pilot length must lie in 1..={} (got {})",
                self.total_users(),
                self.pilot_len
            ));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad(format!("power must be positive (got {})", self.power));
        }
        Ok(())
    }

    pub fn total_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    /// True when every user can get an orthogonal pilot (`tau == M K`). The
    /// contamination problem is only interesting below this point.
    pub fn pilots_saturated(&self) -> bool {
        self.pilot_len >= self.total_users()
    }

    pub fn with_pilot_len(mut self, tau: usize) -> Result<Self> {
        self.pilot_len = tau;
        self.validate()?;
        Ok(self)
    }

    pub fn with_rf_chains(mut self, n: usize) -> Result<Self> {
        self.rf_chains = n;
        self.validate()?;
        Ok(self)
    }
}

/// Large-scale decay factors `β_ikj`: gain from user `k` of cell `j` to the
/// base station of cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayGrid {
    cells: usize,
    users: usize,
    beta: Vec<f64>,
}

impl DecayGrid {
    pub fn new(cells: usize, users: usize, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != cells * users * cells {
            return Err(Error::DimMismatch(format!(
                "decay grid needs {} entries, got {}",
                cells * users * cells,
                beta.len()
            )));
        }
        if beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidConfig("decay factors must be positive and finite".into()));
        }
        Ok(DecayGrid { cells, users, beta })
    }

    pub fn from_fn(cells: usize, users: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut beta = Vec::with_capacity(cells * users * cells);
        for i in 0..cells {
            for k in 0..users {
                for j in 0..cells {
                    beta.push(f(i, k, j));
                }
            }
        }
        Self::new(cells, users, beta)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, bs: usize, user: usize, user_cell: usize) -> f64 {
        self.beta[(bs * self.users + user) * self.cells + user_cell]
    }

    /// `D_ij = diag(β_i1j, …, β_iKj)`.
    pub fn diag_matrix(&self, bs: usize, user_cell: usize) -> CMatrix {
        let d: Vec<f64> = (0..self.users).map(|k| self.get(bs, k, user_cell)).collect();
        rdiag(&d)
    }
}

/// Channel statistics `{Q_ij, P_ij}` in one of the three structured forms.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationProfile {
    /// `Q_ij = Q_i`, `P_ij = P_j`.
    FullySeparable { receive: Vec<CMatrix>, transmit: Vec<CMatrix> },
    /// `Q_ij = Q_i`; `transmit[i][j] = P_ij`.
    PartiallySeparable { receive: Vec<CMatrix>, transmit: Vec<Vec<CMatrix>> },
    /// `Q_i = I`, `P_ij = diag(β_i1j … β_iKj)`.
    MuMimo { decay: DecayGrid, antennas: usize },
}

impl CorrelationProfile {
    pub fn cells(&self) -> usize {
        match self {
            CorrelationProfile::FullySeparable { receive, .. } => receive.len(),
            CorrelationProfile::PartiallySeparable { receive, .. } => receive.len(),
            CorrelationProfile::MuMimo { decay, .. } => decay.cells(),
        }
    }

    pub fn users_per_cell(&self) -> usize {
        match self {
            CorrelationProfile::FullySeparable { transmit, .. } => transmit[0].nrows(),
            CorrelationProfile::PartiallySeparable { transmit, .. } => transmit[0][0].nrows(),
            CorrelationProfile::MuMimo { decay, .. } => decay.users(),
        }
    }

    pub fn antennas(&self) -> usize {
        match self {
            CorrelationProfile::FullySeparable { receive, .. }
            | CorrelationProfile::PartiallySeparable { receive, .. } => receive[0].nrows(),
            CorrelationProfile::MuMimo { antennas, .. } => *antennas,
        }
    }

    pub fn is_fully_separable(&self) -> bool {
        matches!(self, CorrelationProfile::FullySeparable { .. })
    }

    /// Receive-side correlation `Q_i` of cell `i`.
    pub fn receive(&self, i: usize) -> CMatrix {
        match self {
            CorrelationProfile::FullySeparable { receive, .. }
            | CorrelationProfile::PartiallySeparable { receive, .. } => receive[i].clone(),
            CorrelationProfile::MuMimo { antennas, .. } => identity(*antennas),
        }
    }

    /// Transmit-side correlation `P_ij` seen by base station `i` from the
    /// users of cell `j`.
    pub fn transmit(&self, i: usize, j: usize) -> CMatrix {
        match self {
            CorrelationProfile::FullySeparable { transmit, .. } => transmit[j].clone(),
            CorrelationProfile::PartiallySeparable { transmit, .. } => transmit[i][j].clone(),
            CorrelationProfile::MuMimo { decay, .. } => decay.diag_matrix(i, j),
        }
    }

    pub fn to_partially_separable(&self) -> CorrelationProfile {
        let m = self.cells();
        let receive = (0..m).map(|i| self.receive(i)).collect();
        let transmit = (0..m).map(|i| (0..m).map(|j| self.transmit(i, j)).collect()).collect();
        CorrelationProfile::PartiallySeparable { receive, transmit }
    }

    /// Decay factors read off the diagonals of `P_ij`, when every transmit
    /// correlation is diagonal.
    pub fn decay_grid(&self) -> Option<DecayGrid> {
        if let CorrelationProfile::MuMimo { decay, .. } = self {
            return Some(decay.clone());
        }
        let (m, k) = (self.cells(), self.users_per_cell());
        for i in 0..m {
            for j in 0..m {
                let p = self.transmit(i, j);
                for r in 0..k {
                    for c in 0..k {
                        if r != c && p[(r, c)].norm() > 0.0 {
                            return None;
                        }
                    }
                }
            }
        }
        DecayGrid::from_fn(m, k, |i, kk, j| self.transmit(i, j)[(kk, kk)].re.max(f64::MIN_POSITIVE))
            .ok()
    }

    /// Checks dimensions against `cfg` and that every matrix is Hermitian PSD.
    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        let (m, k, n) = (self.cells(), self.users_per_cell(), self.antennas());
        if (m, k, n) != (cfg.cells, cfg.users_per_cell, cfg.antennas) {
            return Err(Error::DimMismatch(format!(
                "profile is (M={m}, K={k}, N={n}), config is (M={}, K={}, N={})",
                cfg.cells, cfg.users_per_cell, cfg.antennas
            )));
        }
        let check = |a: &CMatrix, dim: usize| -> Result<()> {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::DimMismatch(format!(
                    "expected {dim}x{dim} correlation, got {}x{}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            matlin::psd_sqrt(a).map(|_| ())
        };
        match self {
            CorrelationProfile::FullySeparable { receive, transmit } => {
                if transmit.len() != m {
                    return Err(Error::DimMismatch("transmit list length".into()));
                }
                receive.iter().try_for_each(|q| check(q, n))?;
                transmit.iter().try_for_each(|p| check(p, k))?;
            }
            CorrelationProfile::PartiallySeparable { receive, transmit } => {
                if transmit.len() != m || transmit.iter().any(|row| row.len() != m) {
                    return Err(Error::DimMismatch("transmit grid must be M x M".into()));
                }
                receive.iter().try_for_each(|q| check(q, n))?;
                transmit.iter().flatten().try_for_each(|p| check(p, k))?;
            }
            CorrelationProfile::MuMimo { .. } => {}
        }
        Ok(())
    }
}

/// Transmit correlations stacked over all `M K` users.
#[derive(Debug, Clone, PartialEq)]
pub enum TransmitAssembly {
    /// `P̄ = blkdiag(P_1, …, P_M)`, shared by every receiving cell.
    Shared(CMatrix),
    /// `P̄_i = blkdiag(P_i1, …, P_iM)` per receiving cell.
    PerCell(Vec<CMatrix>),
}

impl TransmitAssembly {
    pub fn for_cell(&self, i: usize) -> &CMatrix {
        match self {
            TransmitAssembly::Shared(p) => p,
            TransmitAssembly::PerCell(ps) => &ps[i],
        }
    }
}

/// Assembles `P̄` (fully separable) or the per-cell `P̄_i`, alongside `{Q_i}`.
pub fn effective_p_matrices(profile: &CorrelationProfile) -> (TransmitAssembly, Vec<CMatrix>) {
    let m = profile.cells();
    let receive = (0..m).map(|i| profile.receive(i)).collect();
    let assembly = match profile {
        CorrelationProfile::FullySeparable { transmit, .. } => {
            TransmitAssembly::Shared(blkdiag(transmit))
        }
        _ => TransmitAssembly::PerCell(
            (0..m)
                .map(|i| {
                    let blocks: Vec<CMatrix> = (0..m).map(|j| profile.transmit(i, j)).collect();
                    blkdiag(&blocks)
                })
                .collect(),
        ),
    };
    (assembly, receive)
}

/// Adds `1e-12 λ_max I` when the condition number of `q` exceeds 1e12.
fn full_rank_guard(q: CMatrix) -> CMatrix {
    let Ok(eig) = matlin::herm_eig(&q) else { return q };
    let hi = eig.values.first().copied().unwrap_or(0.0);
    let lo = eig.values.last().copied().unwrap_or(0.0);
    if hi > 0.0 && lo < hi * 1e-12 {
        let n = q.nrows();
        q + identity(n).scale(1e-12 * hi)
    } else {
        q
    }
}

/// Fully-separable profile with `Q_i = X_i X_i*` (X i.i.d. CN(0,1), square)
/// and diagonal `P_j` with Uniform[0, 1] entries.
pub fn make_random_fully_separable<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    rng: &mut R,
) -> CorrelationProfile {
    let receive = (0..cfg.cells)
        .map(|_| {
            let x = complex_gaussian(rng, cfg.antennas, cfg.antennas);
            full_rank_guard(matlin::hermitian_part(&(&x * x.adjoint())))
        })
        .collect();
    let transmit = (0..cfg.cells)
        .map(|_| {
            let d: Vec<f64> = (0..cfg.users_per_cell).map(|_| rng.random::<f64>()).collect();
            rdiag(&d)
        })
        .collect();
    CorrelationProfile::FullySeparable { receive, transmit }
}

/// Fully-separable profile with `Q_i = I` and Uniform[0, 1] diagonal `P_j`;
/// the MU-MIMO fading model with `D_ij = P_j`.
pub fn make_identity_receive_profile<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    rng: &mut R,
) -> CorrelationProfile {
    let receive = vec![identity(cfg.antennas); cfg.cells];
    let transmit = (0..cfg.cells)
        .map(|_| {
            let d: Vec<f64> = (0..cfg.users_per_cell).map(|_| rng.random::<f64>()).collect();
            rdiag(&d)
        })
        .collect();
    CorrelationProfile::FullySeparable { receive, transmit }
}

pub type Point = [f64; 2];

/// Minimum user to serving-BS distance, as a fraction of the cell radius.
pub const MIN_DISTANCE_FRACTION: f64 = 0.05;

/// Hexagonal cell layout with uniformly dropped users.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub cell_centers: Vec<Point>,
    /// `ut_positions[j][k]`: user `k` of cell `j`.
    pub ut_positions: Vec<Vec<Point>>,
    /// Circumradius of each (pointy-top) hexagon.
    pub cell_radius: f64,
}

// Axial neighbour directions, walked in order around each ring.
const HEX_DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// First `count` hexagon centers in center-out spiral order. Adjacent
/// centers are `√3 R` apart.
pub fn hex_centers(count: usize, radius: f64) -> Vec<Point> {
    let to_xy = |q: i64, r: i64| -> Point {
        let (q, r) = (q as f64, r as f64);
        [radius * 3f64.sqrt() * (q + r / 2.0), radius * 1.5 * r]
    };
    let mut out = vec![to_xy(0, 0)];
    let mut ring = 1i64;
    while out.len() < count {
        let (mut q, mut r) = (HEX_DIRS[4].0 * ring, HEX_DIRS[4].1 * ring);
        for dir in HEX_DIRS {
            for _ in 0..ring {
                out.push(to_xy(q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    out.truncate(count);
    out
}

/// Whether `p` (relative to the hexagon center) lies in a pointy-top hexagon
/// with circumradius `radius`.
pub fn in_hexagon(p: Point, radius: f64) -> bool {
    let apothem = radius * 3f64.sqrt() / 2.0;
    (0..6).all(|k| {
        let a = std::f64::consts::FRAC_PI_3 * k as f64;
        p[0] * a.cos() + p[1] * a.sin() <= apothem * (1.0 + 1e-12)
    })
}

impl Geometry {
    /// Distance `r_ikj` between user `k` of cell `j` and base station `i`,
    /// floored at the minimum-distance guard.
    pub fn distance(&self, bs: usize, user: usize, user_cell: usize) -> f64 {
        let c = self.cell_centers[bs];
        let p = self.ut_positions[user_cell][user];
        let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        d.max(MIN_DISTANCE_FRACTION * self.cell_radius)
    }
}

/// Drops `K` users uniformly (by rejection) in each of `M` hexagonal cells.
pub fn make_hex_geometry<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    cell_radius: f64,
    rng: &mut R,
) -> Geometry {
    let centers = hex_centers(cfg.cells, cell_radius);
    let half_w = cell_radius * 3f64.sqrt() / 2.0;
    let floor = MIN_DISTANCE_FRACTION * cell_radius;
    let ut_positions = centers
        .iter()
        .map(|c| {
            (0..cfg.users_per_cell)
                .map(|_| loop {
                    let x = (2.0 * rng.random::<f64>() - 1.0) * half_w;
                    let y = (2.0 * rng.random::<f64>() - 1.0) * cell_radius;
                    if in_hexagon([x, y], cell_radius) && x.hypot(y) >= floor {
                        break [c[0] + x, c[1] + y];
                    }
                })
                .collect()
        })
        .collect();
    Geometry { cell_centers: centers, ut_positions, cell_radius }
}

/// `β = z / r^γ` with `10 log10 z ~ N(0, σ²)`.
pub fn decay_factor(distance: f64, gamma: f64, shadow_db: f64) -> f64 {
    10f64.powf(shadow_db / 10.0) / distance.powf(gamma)
}

/// MU-MIMO profile from a geometry, path-loss exponent and log-normal
/// shadowing standard deviation (dB).
pub fn make_mu_mimo_profile<R: Rng + ?Sized>(
    geom: &Geometry,
    antennas: usize,
    gamma: f64,
    sigma_shad_db: f64,
    rng: &mut R,
) -> Result<CorrelationProfile> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!("path-loss exponent must be positive, got {gamma}")));
    }
    let m = geom.cell_centers.len();
    let k = geom.ut_positions.first().map_or(0, Vec::len);
    let mut beta = Vec::with_capacity(m * k * m);
    for i in 0..m {
        for kk in 0..k {
            for j in 0..m {
                let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * sigma_shad_db;
                beta.push(decay_factor(geom.distance(i, kk, j), gamma, shadow));
            }
        }
    }
    Ok(CorrelationProfile::MuMimo { decay: DecayGrid::new(m, k, beta)?, antennas })
}

/// One coherence block of channels; `h[i][j]` is `H_ij` (`N_BS × K`).
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: Vec<Vec<CMatrix>>,
}

impl ChannelRealization {
    pub fn get(&self, i: usize, j: usize) -> &CMatrix {
        &self.h[i][j]
    }

    /// `h_ij = vec(H_ij)`.
    pub fn vec(&self, i: usize, j: usize) -> CMatrix {
        matlin::vec(&self.h[i][j])
    }
}

/// Square-root factors of a profile, computed once and reused for many
/// channel draws.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    receive_sqrt: Vec<Option<CMatrix>>,
    // (P_ij^{1/2})^T, or just the diagonal for MU-MIMO.
    transmit_sqrt_t: Vec<Vec<TransmitFactor>>,
    antennas: usize,
    users: usize,
}

#[derive(Debug, Clone)]
enum TransmitFactor {
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

impl ChannelSampler {
    pub fn new(profile: &CorrelationProfile) -> Result<Self> {
        let (m, k, n) = (profile.cells(), profile.users_per_cell(), profile.antennas());
        let receive_sqrt = (0..m)
            .map(|i| match profile {
                CorrelationProfile::MuMimo { .. } => Ok(None),
                _ => matlin::psd_sqrt(&profile.receive(i)).map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut transmit_sqrt_t = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                let f = match profile {
                    CorrelationProfile::MuMimo { decay, .. } => {
                        TransmitFactor::Diagonal((0..k).map(|kk| decay.get(i, kk, j).sqrt()).collect())
                    }
                    _ => TransmitFactor::Dense(matlin::psd_sqrt(&profile.transmit(i, j))?.transpose()),
                };
                row.push(f);
            }
            transmit_sqrt_t.push(row);
        }
        Ok(ChannelSampler { receive_sqrt, transmit_sqrt_t, antennas: n, users: k })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let m = self.receive_sqrt.len();
        let h = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let bar = complex_gaussian(rng, self.antennas, self.users);
                        let left = match &self.receive_sqrt[i] {
                            Some(q) => q * bar,
                            None => bar,
                        };
                        match &self.transmit_sqrt_t[i][j] {
                            TransmitFactor::Dense(p) => left * p,
                            TransmitFactor::Diagonal(d) => {
                                let mut out = left;
                                for (c, &s) in d.iter().enumerate() {
                                    out.column_mut(c).scale_mut(s);
                                }
                                out
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        ChannelRealization { h }
    }
}

/// Draws one channel realization; fresh `H̄_ij` for every `(i, j)`.
pub fn sample_channels<R: Rng + ?Sized>(
    profile: &CorrelationProfile,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    profile.validate(cfg)?;
    Ok(ChannelSampler::new(profile)?.sample(rng))
}
