//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use pairlight::algebra::OperatorMatrix;
use pairlight::correlations::{cauchy_schwarz, g2_tau, g2_zero, Channel};
use pairlight::dynamics::{build_adjoint_generator, propagate, steady_state, BlochState};
use pairlight::heff::{compare_to_target, derive};
use pairlight::model::{preset, EffectiveModel, PhysicalParams};
use pairlight::sweep::{run_sweep, write_csv, SweepRow, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-10;
const ORACLE_TRIPLES: usize = 50;
const PROPAGATION_TOL: f64 = 1e-8;
const SZ_WEAK_TOL: f64 = 1e-4;
const P2_AT_1E12: f64 = 2.488e-3;
const SZ_AT_1E13: f64 = -1.0 / 3.0;
const SHAPE_REL_TOL: f64 = 1e-2;
const IDENTITY_TOL: f64 = 1e-12;
const HEFF_TOL: f64 = 1e-10;
const HEFF_COUPLING: f64 = 1e9;
const IDENTITY_ANNIHILATION_TOL: f64 = 1e-14;
const TRACE_DRIFT_TOL: f64 = 1e-12;
const HERMITICITY_DRIFT_TOL: f64 = 1e-12;
const SZ_BOUND_TOL: f64 = 1e-9;
const REGRESSION_ZERO_TOL: f64 = 1e-10;
const FACTORISATION_TOL: f64 = 1e-2;
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(1);

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn gg() -> PhysicalParams {
    preset("gamma-globulin").unwrap()
}

fn default_rows() -> Result<Vec<SweepRow>, String> {
    run_sweep(&SweepSpec::new(gg()))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| {
            p.row()
                .copied()
                .ok_or_else(|| format!("grid point {} failed", p.omega_rabi()))
        })
        .collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst: f64 = 0.0;
    let mut worst_prop: f64 = 0.0;
    for k in 0..ORACLE_TRIPLES {
        let omega = log_uniform(&mut rng, 1e8, 1e14);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let delta = sign * log_uniform(&mut rng, 1e8, 1e14);
        let gamma = log_uniform(&mut rng, 1e5, 1e11);
        let model = EffectiveModel::resonance_only(omega, delta, gamma);
        let g = build_adjoint_generator(&model).map_err(|e| format!("triple {k}: {e}"))?;
        let ss = steady_state(&g).map_err(|e| format!("triple {k}: {e}"))?;
        let analytic =
            (omega * omega / 4.0) / (delta * delta + gamma * gamma + omega * omega / 2.0);
        let dev = ((ss.excited_population() - analytic) / analytic).abs();
        worst = worst.max(dev);

        let late = propagate(&g, &BlochState::ground(), 40.0 / gamma).map_err(|e| e.to_string())?;
        worst_prop = worst_prop.max((late.excited_population() - analytic).abs());
    }
    let detail = format!(
        "max relative deviation {worst:.2e} (tol {ORACLE_TOL:e}); long-time propagation max |ΔP₂| {worst_prop:.2e} (tol {PROPAGATION_TOL:e})"
    );
    if worst < ORACLE_TOL && worst_prop < PROPAGATION_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn sweep_shape() -> Outcome {
    let rows = default_rows()?;
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    let at_1e12 = pairlight::sweep::evaluate(&gg(), 1e12)?;
    let weak = (first.sz + 0.5).abs();
    let mid = rel(at_1e12.p2, P2_AT_1E12);
    let strong = rel(last.sz, SZ_AT_1E13);
    let monotone = rows.windows(2).all(|w| w[1].sz >= w[0].sz);
    let detail = format!(
        "sz(1e11)+0.5 = {weak:.2e}, P₂(1e12) = {:.6e} (rel {mid:.2e}), sz(1e13) = {:.6} (rel {strong:.2e}), monotone = {monotone}",
        at_1e12.p2, last.sz
    );
    if weak < SZ_WEAK_TOL && mid < SHAPE_REL_TOL && strong < SHAPE_REL_TOL && monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn correlation_identities() -> Outcome {
    let rows = default_rows()?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        worst = worst
            .max((r.g12 * r.p2 - 1.0).abs())
            .max((r.g21 * (1.0 - r.p2) - 1.0).abs());
    }
    let g12_down = rows.windows(2).all(|w| w[1].g12 <= w[0].g12);
    let g21_up = rows.windows(2).all(|w| w[1].g21 >= w[0].g21);
    let detail = format!(
        "{} points, max |g·P − 1| = {worst:.2e} (tol {IDENTITY_TOL:e}), g12 decreasing = {g12_down}, g21 increasing = {g21_up}",
        rows.len()
    );
    if worst < IDENTITY_TOL && g12_down && g21_up {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cauchy_schwarz_violation() -> Outcome {
    let rows = default_rows()?;
    let bad = rows
        .iter()
        .filter(|r| !(r.cs_lhs == 0.0 && r.violated))
        .count();
    let min_rhs = rows.iter().map(|r| r.cs_rhs).fold(f64::INFINITY, f64::min);
    let detail = format!(
        "{} points, {bad} without violation, smallest g12² = {min_rhs:.4e}",
        rows.len()
    );
    if bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn effective_hamiltonian() -> Outcome {
    let model = EffectiveModel::from_physical(&gg()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let mut reference = None;
    for n in [2, 3, 4] {
        let d = derive(&model, n, model.omega0, HEFF_COUPLING, 1).map_err(|e| e.to_string())?;
        let report = compare_to_target(&d.second_order.kept, &model, HEFF_COUPLING);
        worst = worst.max(report.max_deviation());
        let coeffs: Vec<_> = report.checks.iter().map(|c| c.derived).collect();
        match &reference {
            None => reference = Some(coeffs),
            Some(r) => {
                for (a, b) in coeffs.iter().zip(r) {
                    spread = spread.max((a - b).norm() / b.norm());
                }
            }
        }
    }
    let detail = format!(
        "N = 2,3,4: max deviation {worst:.2e}, spread across N {spread:.2e} (tol {HEFF_TOL:e})"
    );
    if worst < HEFF_TOL && spread < HEFF_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn generator_integrity() -> Outcome {
    let mut annihilation: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut sz_excess: f64 = 0.0;
    let starts = [
        BlochState::ground(),
        BlochState::excited(),
        BlochState::new(OperatorMatrix::from_real_rows([[0.5, 0.5], [0.5, 0.5]])).unwrap(),
    ];
    for name in ["gamma-globulin", "gan-dot"] {
        for omega in [1e11, 1e12, 1e13] {
            let m = EffectiveModel::from_physical(&preset(name).unwrap().with_rabi(omega))
                .map_err(|e| e.to_string())?;
            let g = build_adjoint_generator(&m).map_err(|e| e.to_string())?;
            annihilation =
                annihilation.max(g.apply(&OperatorMatrix::identity()).max_abs() / g.max_entry());
            let horizon = 30.0 / m.gamma_r;
            let mut states = vec![steady_state(&g).map_err(|e| e.to_string())?];
            for s in &starts {
                for k in 1..=10 {
                    states.push(
                        propagate(&g, s, horizon * k as f64 / 10.0).map_err(|e| e.to_string())?,
                    );
                }
            }
            for s in &states {
                trace = trace.max((s.rho().trace() - 1.0).norm());
                herm = herm.max(s.rho().hermiticity_defect());
                sz_excess = sz_excess.max(s.inversion().abs() - 0.5);
            }
        }
    }
    let detail = format!(
        "‖L†(I)‖/max = {annihilation:.2e}, trace drift {trace:.2e}, hermiticity drift {herm:.2e}, |⟨S_z⟩| − 1/2 ≤ {sz_excess:.2e}"
    );
    if annihilation < IDENTITY_ANNIHILATION_TOL
        && trace < TRACE_DRIFT_TOL
        && herm < HERMITICITY_DRIFT_TOL
        && sz_excess <= SZ_BOUND_TOL
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn regression_consistency() -> Outcome {
    let m = EffectiveModel::from_physical(&gg()).map_err(|e| e.to_string())?;
    let g = build_adjoint_generator(&m).map_err(|e| e.to_string())?;
    let ss = steady_state(&g).map_err(|e| e.to_string())?;
    let grid = [0.0, 10.0 / m.gamma_r];
    let mut zero_dev: f64 = 0.0;
    let mut g12_late = f64::NAN;
    for (i, j) in [
        (Channel::Thz, Channel::Optical),
        (Channel::Optical, Channel::Thz),
    ] {
        let curve = g2_tau(i, j, &g, &ss, &grid).map_err(|e| e.to_string())?;
        let at_zero = g2_zero(i, j, &ss).map_err(|e| e.to_string())?;
        zero_dev = zero_dev.max((curve[0] - at_zero).abs());
        if i == Channel::Thz {
            g12_late = curve[1];
        }
    }
    let _ = cauchy_schwarz(&ss).map_err(|e| e.to_string())?;
    let detail = format!("|g(0) − g2_zero| = {zero_dev:.2e}, g12(10/γ_R) = {g12_late:.6}");
    if zero_dev < REGRESSION_ZERO_TOL && (g12_late - 1.0).abs() < FACTORISATION_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn csv_with_threads(threads: usize) -> Result<Vec<u8>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let points = pool
        .install(|| run_sweep(&SweepSpec::new(gg())))
        .map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_csv(&points, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn determinism_and_performance() -> Outcome {
    let start = Instant::now();
    let points = run_sweep(&SweepSpec::new(gg())).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut first = Vec::new();
    write_csv(&points, &mut first).map_err(|e| e.to_string())?;
    let single = csv_with_threads(1)?;
    let quad = csv_with_threads(4)?;
    let again = csv_with_threads(4)?;
    let identical = first == single && single == quad && quad == again;
    let detail = format!(
        "{} rows in {:.1} ms (limit {} ms), byte-identical across runs and 1/4 threads = {identical}",
        points.len(),
        elapsed.as_secs_f64() * 1e3,
        SWEEP_TIME_LIMIT.as_millis()
    );
    if elapsed < SWEEP_TIME_LIMIT && identical {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("steady-state sweep shape", sweep_shape),
        ("correlation identities", correlation_identities),
        ("Cauchy-Schwarz violation", cauchy_schwarz_violation),
        ("effective Hamiltonian", effective_hamiltonian),
        ("generator integrity", generator_integrity),
        ("regression consistency", regression_consistency),
        ("determinism and performance", determinism_and_performance),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} {name}: FAIL ({detail})", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
