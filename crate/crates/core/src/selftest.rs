//! Small-instance oracle checks, runnable from the command line.

use std::time::Instant;

use crate::channel::{make_random_fully_separable, CorrelationProfile, NetworkConfig};
use crate::combiner::{fully_digital, magiq, weight, FeasibleSet, MAGIQ_MAX_ITER, MAGIQ_THRESHOLD};
use crate::estimator::{CombinerSet, GramPolicy, NetworkEstimator, PilotSet};
use crate::matlin::{self, c64, rel_diff, CMatrix};
use crate::pilots::{
    self, eigen_pilots, eigen_sum_bound, fully_sep_objective, gsrtm_update, partially_sep_objective,
    rank1_block_inverse, GsrtmState, PilotObjectiveContext,
};
use crate::random::{complex_gaussian, stream};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn() -> Result<String, String>;

const SEED: u64 = 0x5e1f_7e57;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rand_psd(n: usize, idx: u64) -> CMatrix {
    let x = complex_gaussian(&mut stream(SEED, idx, "psd"), n, n);
    &x * x.adjoint()
}

fn feasible_random(tau: usize, mk: usize, idx: u64) -> CMatrix {
    let s = complex_gaussian(&mut stream(SEED, idx, "pilots"), tau, mk);
    let max = (0..mk).map(|c| matlin::col_norm_sqr(&s, c)).fold(0.0, f64::max);
    s.scale(max.sqrt().recip())
}

fn fs_context(m: usize, k: usize, n: usize, n_rf: usize, idx: u64) -> (NetworkConfig, CorrelationProfile, CombinerSet) {
    let cfg = NetworkConfig::new(m, k, n, n_rf, 1, 1.0).expect("valid dimensions");
    let profile = make_random_fully_separable(&cfg, &mut stream(SEED, idx, "profile"));
    let ws = (0..m).map(|i| fully_digital(&profile.receive(i), n_rf)).collect::<crate::Result<Vec<_>>>().expect("PSD");
    (cfg, profile, CombinerSet::new(ws, FeasibleSet::Unconstrained).expect("finite"))
}

fn eigen_optimality() -> Result<String, String> {
    let mut worst = 0.0f64;
    for idx in 0..20 {
        let (cfg, profile, w) = fs_context(2, 2, 3, 2, idx);
        let cfg = cfg.with_pilot_len(2).map_err(|e| e.to_string())?;
        let ctx = PilotObjectiveContext::new(&profile, &w).map_err(|e| e.to_string())?;
        let s = eigen_pilots(&ctx, &cfg).map_err(|e| e.to_string())?;
        let v = fully_sep_objective(s.stacked(), &ctx).map_err(|e| e.to_string())?;
        let bound = eigen_sum_bound(&ctx, 2).map_err(|e| e.to_string())?;
        worst = worst.max((v - bound).abs() / bound);
        for r in 0..100 {
            let x = fully_sep_objective(&feasible_random(2, 4, idx * 1000 + r), &ctx).map_err(|e| e.to_string())?;
            ensure(x <= v + 1e-8 * v, || format!("random pilots beat eigen-pilots: {x} > {v}"))?;
        }
    }
    ensure(worst <= 1e-9, || format!("eigen objective misses the eigen-sum by {worst:e}"))?;
    Ok(format!("max relative gap {worst:.1e}"))
}

fn power_feasibility() -> Result<String, String> {
    let (cfg, profile, w) = fs_context(3, 2, 4, 2, 7);
    let mut rng = stream(SEED, 7, "designs");
    for tau in 2..=6 {
        let cfg = cfg.with_pilot_len(tau).map_err(|e| e.to_string())?;
        for method in [
            pilots::PilotMethod::Eigen,
            pilots::PilotMethod::Gsrtm(pilots::DictionaryKind::Qam16),
            pilots::PilotMethod::OrthReuse,
            pilots::PilotMethod::Random,
            pilots::PilotMethod::Spa,
        ] {
            let s = pilots::design_pilots(method, &profile, &w, &cfg, &mut rng).map_err(|e| e.to_string())?;
            ensure(s.is_power_feasible(cfg.power), || format!("{} violates the budget at tau={tau}", method.name()))?;
        }
    }
    Ok("5 designers x 5 pilot lengths".into())
}

fn scale_invariance() -> Result<String, String> {
    let (_, profile, w) = fs_context(2, 2, 3, 2, 11);
    let fs = PilotObjectiveContext::new(&profile, &w).map_err(|e| e.to_string())?;
    let ps = PilotObjectiveContext::new(&profile.to_partially_separable(), &w).map_err(|e| e.to_string())?;
    for idx in 0..20 {
        let s = feasible_random(3, 4, 500 + idx);
        let scaled = s.map(|z| z * c64(0.3, -1.7));
        let pairs = [
            ("fully separable", fully_sep_objective(&s, &fs), fully_sep_objective(&scaled, &fs)),
            ("partially separable", partially_sep_objective(&s, &ps), partially_sep_objective(&scaled, &ps)),
        ];
        for (name, a, b) in pairs {
            let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
            ensure((a - b).abs() <= 1e-10 * a.abs(), || format!("{name} objective changed under scaling"))?;
        }
    }
    Ok("both objectives, 20 draws".into())
}

fn magiq_monotone() -> Result<String, String> {
    let mut iters = 0;
    for idx in 0..10 {
        let u = fully_digital(&rand_psd(8, 100 + idx), 3).map_err(|e| e.to_string())?;
        let (_, st) = magiq(&u, FeasibleSet::Unimodular, MAGIQ_THRESHOLD, MAGIQ_MAX_ITER).map_err(|e| e.to_string())?;
        iters += st.iterations;
        for pair in st.gap_trace.windows(2) {
            ensure(pair[1] <= pair[0] + 1e-12, || format!("gap rose from {} to {}", pair[0], pair[1]))?;
        }
        ensure(rel_diff(&(st.t.adjoint() * &st.t), &matlin::identity(3)) < 1e-9, || "T is not unitary".into())?;
    }
    Ok(format!("{iters} iterations over 10 runs"))
}

fn weight_bound() -> Result<String, String> {
    for idx in 0..30 {
        let q = rand_psd(6, 200 + idx);
        let eig = matlin::herm_eig(&q).map_err(|e| e.to_string())?;
        for n in 1..=4 {
            let w = complex_gaussian(&mut stream(SEED, 300 + idx, "w"), n, 6);
            let v = weight(&q, &w).map_err(|e| e.to_string())?.0;
            let bound: f64 = eig.values[..n].iter().sum();
            ensure(v <= bound * (1.0 + 1e-9), || format!("weight {v} above eigen-sum {bound}"))?;
            let fd = weight(&q, &fully_digital(&q, n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.0;
            ensure((fd - bound).abs() <= 1e-9 * bound, || "fully-digital combiner misses the bound".into())?;
        }
    }
    Ok("30 correlations x 4 RF counts".into())
}

fn projector_idempotence() -> Result<String, String> {
    for idx in 0..30 {
        let a = complex_gaussian(&mut stream(SEED, 400 + idx, "a"), 7, 1 + (idx as usize % 5));
        let p = matlin::range_projector(&a);
        ensure(rel_diff(&(&p * &p), &p) < 1e-10, || "projector is not idempotent".into())?;
        ensure(rel_diff(&p.adjoint(), &p) < 1e-12, || "projector is not Hermitian".into())?;
    }
    Ok("30 random ranges".into())
}

fn equivalence_chain() -> Result<String, String> {
    let mut worst = 0.0f64;
    for idx in 0..20 {
        let (cfg, profile, w) = fs_context(2, 2, 3, 2, 600 + idx);
        let cfg = cfg.with_pilot_len(3).map_err(|e| e.to_string())?;
        let s = PilotSet::from_stacked(feasible_random(cfg.pilot_len, 4, 600 + idx), 2).map_err(|e| e.to_string())?;
        let est = NetworkEstimator::build(&s, &w, &profile, GramPolicy::Strict).map_err(|e| e.to_string())?;
        let ctx = PilotObjectiveContext::new(&profile, &w).map_err(|e| e.to_string())?;
        let total: f64 = (0..2).map(|i| est.cell(i).explained).sum();
        let obj = partially_sep_objective(s.stacked(), &ctx).map_err(|e| e.to_string())?;
        worst = worst.max((total - obj).abs() / obj);
    }
    ensure(worst <= 1e-8, || format!("estimator and objective differ by {worst:e}"))?;
    Ok(format!("max relative gap {worst:.1e}"))
}

fn block_inverse_and_increment() -> Result<String, String> {
    for idx in 0..20 {
        let mut rng = stream(SEED, 700 + idx, "block-inverse");
        let s = complex_gaussian(&mut rng, 3, 6);
        let row = complex_gaussian(&mut rng, 1, 6);
        let q = (&s * s.adjoint()).try_inverse().ok_or("singular S S*")?;
        let fast = rank1_block_inverse(&s, &row, &q).map_err(|e| e.to_string())?;
        let mut grown = s.clone().insert_row(3, c64(0.0, 0.0));
        grown.row_mut(3).copy_from(&row);
        let direct = (&grown * grown.adjoint()).try_inverse().ok_or("singular")?;
        ensure(rel_diff(&fast, &direct) < 1e-9, || "block inverse disagrees with direct inverse".into())?;
    }
    let (_, profile, w) = fs_context(2, 2, 3, 2, 800);
    let ctx = PilotObjectiveContext::new(&profile.to_partially_separable(), &w).map_err(|e| e.to_string())?;
    let mut state = GsrtmState::new(&ctx).map_err(|e| e.to_string())?;
    let s = complex_gaussian(&mut stream(SEED, 801, "stack"), 2, 4);
    for r in 0..2 {
        state.push_row(&s.rows(r, 1).into_owned()).map_err(|e| e.to_string())?;
    }
    let state = gsrtm_update(state).map_err(|e| e.to_string())?;
    let norms = state.t_norms().map_err(|e| e.to_string())?;
    let mut offsets = Vec::new();
    for idx in 0..10 {
        let row = complex_gaussian(&mut stream(SEED, 810 + idx, "row"), 1, 4);
        let mut grown = s.clone().insert_row(2, c64(0.0, 0.0));
        grown.row_mut(2).copy_from(&row);
        let f = partially_sep_objective(&grown, &ctx).map_err(|e| e.to_string())?;
        offsets.push(f - state.score(&row, &norms).ok_or("row unexpectedly infeasible")?);
    }
    let spread = offsets.iter().map(|o| (o - offsets[0]).abs()).fold(0.0, f64::max);
    ensure(spread <= 1e-8 * offsets[0].abs().max(1.0), || format!("increment offset varies by {spread:e}"))?;
    Ok("20 block inverses, 10 increments".into())
}

pub const CHECKS: [(&str, Check); 8] = [
    ("eigen-pilot optimality", eigen_optimality),
    ("power feasibility", power_feasibility),
    ("objective scale invariance", scale_invariance),
    ("MaGiQ gap monotonicity", magiq_monotone),
    ("combiner weight bound", weight_bound),
    ("projector idempotence", projector_idempotence),
    ("MSE objective equivalence", equivalence_chain),
    ("block inverse and greedy increment", block_inverse_and_increment),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let start = Instant::now();
            let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("check panicked".into()));
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok(detail) => CheckResult { name, passed: true, detail, seconds },
                Err(detail) => CheckResult { name, passed: false, detail, seconds },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_check_passes() {
        for r in super::run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
