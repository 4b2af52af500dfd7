//! Analog combiner design.
//!
//! For both Kronecker models the pilot objective scales with the per-cell
//! weight `w_i = tr(Q_i W_i* (W_i Q_i W_i*)⁻¹ W_i Q_i)`, so each combiner is
//! designed on its own by maximizing `w_i`, without looking at the pilots.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matlin::{self, real, CMatrix, C64};
use crate::random::unit_phase;

/// Hardware constraint on the analog combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibleSet {
    Unconstrained,
    /// Fully-connected phase shifters: every entry has unit modulus.
    Unimodular,
}

/// Tolerance on `|w_kl| = 1` for unimodular combiners.
pub const UNIMODULAR_TOL: f64 = 1e-9;

impl FeasibleSet {
    pub fn contains(&self, w: &CMatrix) -> bool {
        match self {
            FeasibleSet::Unconstrained => matlin::is_finite(w),
            FeasibleSet::Unimodular => w.iter().all(|z| (z.norm() - 1.0).abs() <= UNIMODULAR_TOL),
        }
    }

    /// Euclidean-nearest point of the set. Zero entries map to phase 0.
    pub fn project(&self, a: &CMatrix) -> CMatrix {
        match self {
            FeasibleSet::Unconstrained => a.clone(),
            FeasibleSet::Unimodular => a.map(|z| {
                if z.norm() == 0.0 {
                    real(1.0)
                } else {
                    z / z.norm()
                }
            }),
        }
    }
}

pub fn project_feasible(a: &CMatrix, set: FeasibleSet) -> CMatrix {
    set.project(a)
}

/// `w_i` of a cell; at most the sum of the `N_RF` largest eigenvalues of `Q_i`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CombinerWeight(pub f64);

/// `(W Q W*)⁻¹ W Q`, failing when the reduced Gram matrix is singular.
fn reduced_solve(q: &CMatrix, w: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if w.ncols() != q.nrows() || q.nrows() != q.ncols() {
        return Err(Error::DimMismatch(format!(
            "combiner {}x{} against {}x{} correlation",
            w.nrows(),
            w.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let wq = w * q;
    let reduced = matlin::hermitian_part(&(&wq * w.adjoint()));
    let x = matlin::solve_hpd(&reduced, &wq).map_err(|e| match e {
        Error::Singular { condition } => Error::SingularReducedGram { condition },
        e => e,
    })?;
    Ok((wq, x))
}

/// `w = tr(Q W* (W Q W*)⁻¹ W Q)`.
pub fn weight(q: &CMatrix, w: &CMatrix) -> Result<CombinerWeight> {
    let (wq, x) = reduced_solve(q, w)?;
    // tr((WQ)* X) with X = (WQW*)⁻¹ WQ.
    let t: f64 = wq.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    Ok(CombinerWeight(t))
}

/// Alternate form `tr(W Q² W* (W Q W*)⁻¹)`; equal to [`weight`].
pub fn combiner_objective(q: &CMatrix, w: &CMatrix) -> Result<f64> {
    let (wq, _) = reduced_solve(q, w)?;
    let reduced = matlin::hermitian_part(&(&wq * w.adjoint()));
    let num = &wq * wq.adjoint();
    // tr(N R⁻¹) = tr(R⁻¹ N) for the Hermitian pair.
    let x = matlin::solve_hpd(&reduced, &num)
        .map_err(|_| Error::SingularReducedGram { condition: f64::INFINITY })?;
    Ok(matlin::trace_re(&x))
}

/// `Ũ*`: rows are the conjugated leading `N_RF` eigenvectors of `Q`.
pub fn fully_digital(q: &CMatrix, rf_chains: usize) -> Result<CMatrix> {
    if rf_chains == 0 || rf_chains > q.nrows() {
        return Err(Error::DimMismatch(format!(
            "{rf_chains} RF chains for {} antennas",
            q.nrows()
        )));
    }
    let eig = matlin::herm_eig(q)?;
    Ok(eig.leading_vectors(rf_chains).adjoint())
}

/// Why MaGiQ stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagiqStop {
    /// Gap fell below the threshold.
    Threshold,
    /// The projected combiner repeated exactly, so later iterations would
    /// reproduce the same iterate.
    FixedPoint,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct MagiqState {
    /// Unitary `N_RF × N_RF` rotation.
    pub t: CMatrix,
    pub w: CMatrix,
    /// `‖T Ũ* − W‖_F²` at exit.
    pub gap: f64,
    /// Gap after each iteration.
    pub gap_trace: Vec<f64>,
    pub iterations: usize,
    pub stop: MagiqStop,
}

pub const MAGIQ_THRESHOLD: f64 = 1e-6;
pub const MAGIQ_MAX_ITER: usize = 200;

fn gap(t: &CMatrix, u_star: &CMatrix, w: &CMatrix) -> f64 {
    (t * u_star - w).norm_squared()
}

/// Minimal-gap iterative quantization: alternately projects `T Ũ*` onto the
/// feasible set and re-solves the unitary Procrustes problem for `T`.
pub fn magiq(
    u_tilde_star: &CMatrix,
    set: FeasibleSet,
    threshold: f64,
    max_iter: usize,
) -> Result<(CMatrix, MagiqState)> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!("MaGiQ threshold must be positive, got {threshold}")));
    }
    let n = u_tilde_star.nrows();
    let mut t = matlin::identity(n);
    let mut w = CMatrix::zeros(n, u_tilde_star.ncols());
    let mut g = gap(&t, u_tilde_star, &w);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut stop = MagiqStop::MaxIterations;
    while g >= threshold {
        if iterations == max_iter {
            break;
        }
        iterations += 1;
        let next_w = set.project(&(&t * u_tilde_star));
        let repeated = next_w == w;
        w = next_w;
        let svd = (u_tilde_star * w.adjoint()).svd(true, true);
        let (u_bar, v_bar_adj) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
        t = v_bar_adj.adjoint() * u_bar.adjoint();
        g = gap(&t, u_tilde_star, &w);
        trace.push(g);
        if repeated && g >= threshold {
            stop = MagiqStop::FixedPoint;
            break;
        }
    }
    if g < threshold {
        stop = MagiqStop::Threshold;
    }
    let state = MagiqState { t, w: w.clone(), gap: g, gap_trace: trace, iterations, stop };
    Ok((w, state))
}

/// `count` rows of i.i.d. uniform-phase unit-modulus entries.
pub fn unimodular_dictionary<R: Rng + ?Sized>(rng: &mut R, count: usize, antennas: usize) -> CMatrix {
    let mut d = CMatrix::zeros(count, antennas);
    for r in 0..count {
        for c in 0..antennas {
            d[(r, c)] = unit_phase(rng);
        }
    }
    d
}

pub const GRTM_DICTIONARY_SIZE: usize = 300;

/// Greedy dictionary combiner: adds one RF chain at a time, taking the row
/// that maximizes the weight of the grown combiner.
pub fn grtm_combiner(q: &CMatrix, rf_chains: usize, dictionary: &CMatrix) -> Result<CMatrix> {
    if dictionary.ncols() != q.nrows() {
        return Err(Error::DimMismatch(format!(
            "dictionary rows have {} entries, Q is {}x{}",
            dictionary.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let n = q.nrows();
    let mut w = CMatrix::zeros(0, n);
    for _ in 0..rf_chains {
        let mut best: Option<(f64, usize)> = None;
        for r in 0..dictionary.nrows() {
            let mut cand = w.clone().insert_row(w.nrows(), C64::new(0.0, 0.0));
            cand.row_mut(w.nrows()).copy_from(&dictionary.row(r));
            match weight(q, &cand) {
                Ok(CombinerWeight(v)) => {
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, r));
                    }
                }
                Err(Error::SingularReducedGram { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (_, r) = best.ok_or(Error::DictionaryExhausted)?;
        let last = w.nrows();
        w = w.insert_row(last, C64::new(0.0, 0.0));
        w.row_mut(last).copy_from(&dictionary.row(r));
    }
    Ok(w)
}

/// How each base station builds its combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CombinerMethod {
    /// `Ũ*` with `T = I`, no hardware constraint.
    FullyDigital,
    /// MaGiQ quantization of `Ũ*` onto unimodular matrices.
    Magiq,
    /// Greedy selection from a unimodular dictionary.
    GrtmDict,
    /// No RF reduction: `W = I_{N_BS}`.
    FullReceiver,
}

impl CombinerMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CombinerMethod::FullyDigital => "fd",
            CombinerMethod::Magiq => "magiq",
            CombinerMethod::GrtmDict => "grtm",
            CombinerMethod::FullReceiver => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fd" | "fully-digital" | "fullydigital" => Ok(CombinerMethod::FullyDigital),
            "magiq" => Ok(CombinerMethod::Magiq),
            "grtm" | "grtm-dict" | "grtmdict" => Ok(CombinerMethod::GrtmDict),
            "full" | "full-receiver" | "fullreceiver" => Ok(CombinerMethod::FullReceiver),
            other => Err(Error::Parse(format!("unknown combiner method `{other}`"))),
        }
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        match self {
            CombinerMethod::Magiq | CombinerMethod::GrtmDict => FeasibleSet::Unimodular,
            _ => FeasibleSet::Unconstrained,
        }
    }
}

/// Designs one combiner per receive correlation. Only `GrtmDict` consumes
/// randomness (one dictionary per cell).
pub fn design_combiners<R: Rng + ?Sized>(
    receive: &[CMatrix],
    rf_chains: usize,
    method: CombinerMethod,
    rng: &mut R,
) -> Result<crate::estimator::CombinerSet> {
    let ws = receive
        .iter()
        .map(|q| match method {
            CombinerMethod::FullyDigital => fully_digital(q, rf_chains),
            CombinerMethod::Magiq => {
                let u = fully_digital(q, rf_chains)?;
                Ok(magiq(&u, FeasibleSet::Unimodular, MAGIQ_THRESHOLD, MAGIQ_MAX_ITER)?.0)
            }
            CombinerMethod::GrtmDict => {
                let d = unimodular_dictionary(rng, GRTM_DICTIONARY_SIZE, q.nrows());
                grtm_combiner(q, rf_chains, &d)
            }
            CombinerMethod::FullReceiver => Ok(matlin::identity(q.nrows())),
        })
        .collect::<Result<Vec<_>>>()?;
    crate::estimator::CombinerSet::new(ws, method.feasible_set())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{c64, identity, rdiag, rel_diff};
    use crate::random::{complex_gaussian, stream};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn rand_psd(n: usize, seed: u64) -> CMatrix {
        let x = complex_gaussian(&mut stream(seed, 0, "q"), n, n);
        &x * x.adjoint()
    }

    fn top_sum(q: &CMatrix, n: usize) -> f64 {
        matlin::herm_eig(q).unwrap().values[..n].iter().sum()
    }

    #[test]
    fn weight_closed_forms() {
        let q = rand_psd(4, 1);
        assert!((weight(&q, &identity(4)).unwrap().0 - matlin::trace_re(&q)).abs() < 1e-10);
        let top = fully_digital(&q, 1).unwrap();
        let l1 = matlin::herm_eig(&q).unwrap().values[0];
        assert!((weight(&q, &top).unwrap().0 - l1).abs() < 1e-10 * l1);
        let d = rdiag(&[3.0, 2.0, 1.0]);
        let w = fully_digital(&d, 2).unwrap();
        assert!((weight(&d, &w).unwrap().0 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fully_digital_rows() {
        let d = rdiag(&[3.0, 2.0, 1.0]);
        let w = fully_digital(&d, 2).unwrap();
        for (r, hot) in [(0, 0), (1, 1)] {
            for c in 0..3 {
                let expect = if c == hot { 1.0 } else { 0.0 };
                assert!((w[(r, c)].norm() - expect).abs() < 1e-12);
            }
        }
        let q = rand_psd(5, 2);
        let u = fully_digital(&q, 5).unwrap();
        assert!(rel_diff(&(&u * u.adjoint()), &identity(5)) < 1e-10);
        assert!((weight(&q, &u).unwrap().0 - matlin::trace_re(&q)).abs() < 1e-9 * matlin::trace_re(&q));
        for n in 1..=5 {
            let w = fully_digital(&q, n).unwrap();
            let s = top_sum(&q, n);
            assert!((weight(&q, &w).unwrap().0 - s).abs() <= 1e-8 * s);
        }
    }

    #[test]
    fn projection_cases() {
        let mut rng = stream(3, 0, "p");
        let a = complex_gaussian(&mut rng, 2, 3);
        assert_eq!(project_feasible(&a, FeasibleSet::Unconstrained), a);
        let z = CMatrix::from_element(1, 1, C64::from_polar(3.0, FRAC_PI_4));
        let p = project_feasible(&z, FeasibleSet::Unimodular);
        assert!((p[(0, 0)] - C64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
        let zero = CMatrix::zeros(1, 1);
        assert_eq!(project_feasible(&zero, FeasibleSet::Unimodular)[(0, 0)], real(1.0));
    }

    #[test]
    fn magiq_unconstrained_is_one_step() {
        let u = fully_digital(&rand_psd(4, 4), 2).unwrap();
        let (w, st) = magiq(&u, FeasibleSet::Unconstrained, MAGIQ_THRESHOLD, MAGIQ_MAX_ITER).unwrap();
        assert_eq!(st.iterations, 1);
        assert!(st.gap < 1e-20);
        assert!(rel_diff(&w, &u) < 1e-12);
        assert_eq!(st.stop, MagiqStop::Threshold);
    }

    #[test]
    fn magiq_two_antenna_example() {
        let u = matlin::cmatrix(1, 2, &[c64(FRAC_1_SQRT_2, 0.0), c64(0.0, FRAC_1_SQRT_2)]).unwrap();
        let (w, st) = magiq(&u, FeasibleSet::Unimodular, MAGIQ_THRESHOLD, MAGIQ_MAX_ITER).unwrap();
        assert!((w[(0, 0)] - real(1.0)).norm() < 1e-12);
        assert!((w[(0, 1)] - c64(0.0, 1.0)).norm() < 1e-12);
        let closed = 2.0 * (1.0 - FRAC_1_SQRT_2).powi(2);
        assert!((st.gap - closed).abs() < 1e-12);
        // Grid over the 1x1 unitary phase: no rotation does better.
        let grid_best = (0..3600)
            .map(|k| {
                let t = CMatrix::from_element(1, 1, C64::from_polar(1.0, k as f64 * 1e-3 * std::f64::consts::TAU / 3.6));
                let tu = &t * &u;
                (&tu - FeasibleSet::Unimodular.project(&tu)).norm_squared()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((grid_best - closed).abs() < 1e-9);
        assert!((st.gap - 0.1716).abs() < 1e-4);
    }

    #[test]
    fn magiq_gap_nonincreasing_and_t_unitary() {
        for seed in 0..10 {
            let u = fully_digital(&rand_psd(8, 10 + seed), 4).unwrap();
            let (w, st) = magiq(&u, FeasibleSet::Unimodular, MAGIQ_THRESHOLD, MAGIQ_MAX_ITER).unwrap();
            assert!(FeasibleSet::Unimodular.contains(&w));
            for pair in st.gap_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "{:?}", st.gap_trace);
            }
            assert!(rel_diff(&(st.t.adjoint() * &st.t), &identity(4)) < 1e-9);
        }
    }

    #[test]
    fn magiq_rejects_bad_threshold() {
        let u = identity(2);
        assert!(magiq(&u, FeasibleSet::Unimodular, 0.0, 10).is_err());
    }

    #[test]
    fn combiner_objective_matches_weight() {
        for seed in 0..10 {
            let q = rand_psd(6, 20 + seed);
            let w = complex_gaussian(&mut stream(seed, 1, "w"), 3, 6);
            let a = weight(&q, &w).unwrap().0;
            let b = combiner_objective(&q, &w).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs());
            // Row-space invariance.
            let t = complex_gaussian(&mut stream(seed, 2, "t"), 3, 3);
            let c = combiner_objective(&q, &(&t * &w)).unwrap();
            assert!((c - b).abs() <= 1e-8 * b.abs());
        }
        let q = rand_psd(3, 9);
        assert!((combiner_objective(&q, &identity(3)).unwrap() - matlin::trace_re(&q)).abs() < 1e-10);
    }

    #[test]
    fn weight_singular_reduced_gram() {
        let q = rand_psd(3, 1);
        let w = CMatrix::zeros(1, 3);
        assert!(matches!(weight(&q, &w), Err(Error::SingularReducedGram { .. })));
    }

    #[test]
    fn grtm_single_chain_matches_exhaustive_scan() {
        let q = rand_psd(6, 7);
        let d = unimodular_dictionary(&mut stream(7, 0, "dict"), 50, 6);
        let w = grtm_combiner(&q, 1, &d).unwrap();
        let best = (0..50)
            .map(|r| {
                let row = d.row(r).into_owned();
                let num = (&row * &q * &q * row.adjoint())[(0, 0)].re;
                let den = (&row * &q * row.adjoint())[(0, 0)].re;
                num / den
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((weight(&q, &w).unwrap().0 - best).abs() < 1e-10 * best);
    }

    #[test]
    fn grtm_recovers_fully_digital_with_matching_dictionary() {
        // For diagonal Q the leading eigenvectors are unit vectors; a
        // dictionary row with every phase zero still leaks energy, but rows
        // containing the DFT basis span the space so N_RF = N_BS is optimal.
        let q = rdiag(&[4.0, 3.0, 2.0, 1.0]);
        let dft = CMatrix::from_fn(4, 4, |r, c| C64::from_polar(1.0, -std::f64::consts::TAU * (r * c) as f64 / 4.0));
        let w = grtm_combiner(&q, 4, &dft).unwrap();
        assert!((weight(&q, &w).unwrap().0 - 10.0).abs() < 1e-9);
        // With fewer chains the greedy weight stays below the eigen-sum bound.
        let w2 = grtm_combiner(&q, 2, &dft).unwrap();
        let v = weight(&q, &w2).unwrap().0;
        assert!(v <= 7.0 + 1e-9 && v > 0.0);
    }

    #[test]
    fn grtm_weight_grows_with_each_chain() {
        let q = rand_psd(8, 5);
        let d = unimodular_dictionary(&mut stream(5, 0, "d"), 100, 8);
        let mut prev = 0.0;
        for n in 1..=6 {
            let w = grtm_combiner(&q, n, &d).unwrap();
            assert!(FeasibleSet::Unimodular.contains(&w));
            let v = weight(&q, &w).unwrap().0;
            assert!(v >= prev - 1e-9);
            assert!(v <= top_sum(&q, n) * (1.0 + 1e-8));
            prev = v;
        }
    }

    #[test]
    fn grtm_exhausts_small_dictionary() {
        let q = rand_psd(4, 5);
        let d = unimodular_dictionary(&mut stream(5, 0, "d"), 2, 4);
        assert_eq!(grtm_combiner(&q, 3, &d), Err(Error::DictionaryExhausted));
    }

    #[test]
    fn combiner_design_ignores_pilots_by_construction() {
        // The design API has no pilot argument; the same profile always
        // yields the same combiners.
        let qs = vec![rand_psd(4, 1), rand_psd(4, 2)];
        let a = design_combiners(&qs, 2, CombinerMethod::GrtmDict, &mut stream(1, 0, "c")).unwrap();
        let b = design_combiners(&qs, 2, CombinerMethod::GrtmDict, &mut stream(1, 0, "c")).unwrap();
        assert_eq!(a, b);
        let m = design_combiners(&qs, 2, CombinerMethod::Magiq, &mut stream(1, 0, "c")).unwrap();
        assert_eq!(m.feasible_set(), FeasibleSet::Unimodular);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn weight_bounded_by_eigen_sum(seed in any::<u64>(), n in 2usize..7, k in 1usize..4) {
                let k = k.min(n);
                let q = rand_psd(n, seed);
                let w = complex_gaussian(&mut stream(seed, 3, "w"), k, n);
                let v = weight(&q, &w).unwrap().0;
                prop_assert!(v >= -1e-10);
                prop_assert!(v <= top_sum(&q, k) * (1.0 + 1e-8) + 1e-8);
            }
        }
    }
}
