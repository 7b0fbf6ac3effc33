//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bogofluct::bogoliubov::verify_bog_bounds;
use bogofluct::coherent::{coherent_series, weyl_op};
use bogofluct::excitation::{r1_bound_constant, ExcitationFrame};
use bogofluct::experiment::algebra::{
    derivative_residuals, hierarchy_residual, master_identity_residual, test_condensate, test_model,
};
use bogofluct::experiment::{compare_coherent, run_convergence, ConvergenceRun, ExperimentConfig};
use bogofluct::fock::{FockBasis, OccupationSpace, SectorBasis, SectorVector};
use bogofluct::linalg;
use bogofluct::model::Interaction;
use bogofluct::nbody::{one_particle_density, trace_distance};
use bogofluct::C64;

type Outcome = Result<String, String>;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn master_identity() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for m in [2, 3] {
        let (h0, w) = test_model(m).map_err(|e| e.to_string())?;
        let r = master_identity_residual(&h0, &w, &test_condensate(m), 3).map_err(|e| e.to_string())?;
        ok &= r <= 1e-10;
        parts.push(format!("M={m} N=3 residual {r:.2e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    check(ok && secs < 10.0, format!("{}; {secs:.2}s", parts.join(", ")))
}

fn derivative_identity() -> Outcome {
    let (h0, w) = test_model(2).map_err(|e| e.to_string())?;
    let r = derivative_residuals(&h0, &w, &test_condensate(2), 3, 0.2, &[0.04, 0.02, 0.01]).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = r.windows(2).map(|p| p[0] / p[1]).collect();
    check(
        ratios.iter().all(|&q| q >= 3.5),
        format!("residuals {:.2e} {:.2e} {:.2e}, ratios {:.3} {:.3}", r[0], r[1], r[2], ratios[0], ratios[1]),
    )
}

fn hierarchy() -> Outcome {
    let (h0, w) = test_model(3).map_err(|e| e.to_string())?;
    let r = hierarchy_residual(&h0, &w, &test_condensate(3), 4, 100, 2024).map_err(|e| e.to_string())?;
    check(r <= 1e-10, format!("100 random states on F^<=4 at M=3, max residual {r:.2e}"))
}

fn conservation(run: &ConvergenceRun) -> Outcome {
    let c = &run.report.conservation;
    let ok = c.hartree_norm_drift <= 1e-8
        && c.hartree_energy_drift <= 1e-8
        && c.nbody_norm_drift <= 1e-8
        && c.nbody_energy_drift <= 1e-8
        && c.bogoliubov_norm_drift <= 1e-7
        && c.tangency <= 1e-6
        && c.leakage <= 1e-6;
    check(
        ok,
        format!(
            "hartree {:.1e}/{:.1e}, nbody {:.1e}/{:.1e}, fluct norm {:.1e}, tangency {:.2e}, leakage {:.2e}",
            c.hartree_norm_drift,
            c.hartree_energy_drift,
            c.nbody_norm_drift,
            c.nbody_energy_drift,
            c.bogoliubov_norm_drift,
            c.tangency,
            c.leakage
        ),
    )
}

fn main_convergence(run: &ConvergenceRun, secs: f64) -> Outcome {
    let errs = run.report.errors_at(1.0);
    let decreasing = errs.windows(2).all(|p| p[1] < p[0]);
    let rate = run.report.rate_at(1.0).ok_or("no fit at t = 1")?;
    let fit = rate.fit.as_ref().ok_or_else(|| rate.note.clone())?;
    let in_band = (-0.7..=-0.3).contains(&fit.slope);
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    check(
        decreasing && in_band && secs < 1200.0 && !run.report.partial(),
        format!("err(t=1) [{}], slope {:.3} (r2 {:.3}), {secs:.0}s", shown.join(", "), fit.slope, fit.r2),
    )
}

fn free_case() -> Outcome {
    let cfg = config("free.json");
    if cfg.model.interaction != Interaction::Zero {
        return Err("free.json must use the zero interaction".into());
    }
    let run = run_convergence(&cfg).map_err(|e| e.to_string())?;
    let worst = run.report.rows.iter().map(|r| r.err_norm).fold(0.0, f64::max);
    let complete = run.report.rows.iter().all(|r| r.status == "ok" && r.time <= 2.0);
    check(complete && worst <= 5e-8, format!("N = {:?}, max err_norm {worst:.2e}", cfg.n_list))
}

fn random_state(rng: &mut ChaCha8Rng, basis: &Arc<SectorBasis>) -> SectorVector {
    let amps: Vec<C64> = (0..basis.dim()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    SectorVector::new(basis.clone(), amps).unwrap().normalized()
}

fn density_corollary(run: &ConvergenceRun) -> Outcome {
    let mut decreasing = true;
    for t in [0.25, 0.5, 1.0, 2.0] {
        let td: Vec<f64> = run.report.rows_at(t).map(|r| r.trace_dist_k1).collect();
        decreasing &= td.windows(2).all(|p| p[1] < p[0]);
    }
    let basis = Arc::new(SectorBasis::new(3, 4).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let a = random_state(&mut rng, &basis);
        let b = if k % 2 == 0 {
            random_state(&mut rng, &basis)
        } else {
            // Nearby pairs probe the small-distance regime.
            let d = random_state(&mut rng, &basis);
            let amps = a.amps.iter().zip(&d.amps).map(|(x, y)| x + y * 0.01).collect();
            SectorVector::new(basis.clone(), amps).unwrap().normalized()
        };
        let lhs = trace_distance(&one_particle_density(&a).unwrap(), &one_particle_density(&b).unwrap()).unwrap();
        let slack = 2.0 * linalg::distance(&a.amps, &b.amps) - lhs;
        worst = worst.min(slack);
    }
    check(
        decreasing && worst >= -1e-10,
        format!("trace distance decreasing in N at every t: {decreasing}; min slack over 100 pairs {worst:.3e}"),
    )
}

fn operator_inequalities() -> Outcome {
    let (h0, w) = test_model(3).map_err(|e| e.to_string())?;
    let u = test_condensate(3);
    let basis = FockBasis::new(3, 4).map_err(|e| e.to_string())?;
    let b = verify_bog_bounds(&u, &h0, &w, &basis).map_err(|e| e.to_string())?;
    let mut constants = Vec::new();
    for n in [4, 6, 8] {
        let frame = ExcitationFrame::new(&u, n).map_err(|e| e.to_string())?;
        for cut in [2, 4] {
            constants.push(r1_bound_constant(&frame, &h0, &w, cut).map_err(|e| e.to_string())?);
        }
    }
    let c = constants.iter().copied().fold(0.0, f64::max);
    check(
        b.pairing_margin >= -1e-10 && b.commutator_margin >= -1e-10 && c.is_finite(),
        format!(
            "pairing margin {:.3e}, commutator margin {:.3e}, R1 constant C = {c:.4}",
            b.pairing_margin, b.commutator_margin
        ),
    )
}

fn parity(run: &ConvergenceRun) -> Outcome {
    let odd = run
        .fluctuation
        .states
        .iter()
        .flat_map(|s| (1..=s.n_max()).step_by(2).map(move |n| s.sector_norm(n)))
        .fold(0.0, f64::max);
    let phi2 = run.fluctuation.state_at(0.25).ok_or("no state at t = 0.25")?.sector_norm(2);
    check(odd <= 1e-12 && phi2 >= 1e-4, format!("max odd sector {odd:.1e}, |phi_2(0.25)| = {phi2:.3e}"))
}

fn coherent_comparison() -> Outcome {
    let basis = FockBasis::shared(3, 14).map_err(|e| e.to_string())?;
    let f = [C64::new(0.5, 0.2), C64::new(-0.3, 0.4), C64::new(0.1, -0.2)];
    let weyl = weyl_op(&f, basis.clone()).map_err(|e| e.to_string())?;
    let state = weyl.coherent_state();
    let series = coherent_series(&f, basis);
    let series_gap = state.distance(&series).map_err(|e| e.to_string())?;
    let number_gap = (state.number_expectation() - linalg::norm(&f).powi(2)).abs();
    let cfg = config("coherent.json");
    let gap = compare_coherent(&cfg).map_err(|e| e.to_string())?.gap_at(1.0).ok_or("no sample at t = 1")?;
    let mut free = cfg.clone();
    free.model.interaction = Interaction::Zero;
    let free_gap = compare_coherent(&free).map_err(|e| e.to_string())?.gap_at(1.0).ok_or("no sample at t = 1")?;
    check(
        series_gap <= 1e-8 && number_gap <= 1e-8 && gap >= 1e-3 && free_gap == 0.0,
        format!(
            "series {series_gap:.1e}, <N> {number_gap:.1e}, gap(t=1) {gap:.3e}, gap at w=0 {free_gap:.1e}"
        ),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let start = Instant::now();
    let main_run = run_convergence(&config("main.json")).map_err(|e| e.to_string());
    let main_secs = start.elapsed().as_secs_f64();
    let with_main = |f: &dyn Fn(&ConvergenceRun) -> Outcome| match &main_run {
        Ok(run) => guarded(|| f(run)),
        Err(e) => Err(format!("main experiment failed: {e}")),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("master algebra identity", guarded(master_identity)),
        ("derivative identity", guarded(derivative_identity)),
        ("hierarchy matches generator", guarded(hierarchy)),
        ("conservation suite", with_main(&conservation)),
        ("main convergence", with_main(&|r| main_convergence(r, main_secs))),
        ("free-case exactness", guarded(free_case)),
        ("density-matrix corollary", with_main(&density_corollary)),
        ("operator inequalities", guarded(operator_inequalities)),
        ("parity and non-triviality", with_main(&parity)),
        ("coherent comparison", guarded(coherent_comparison)),
    ];
    let mut failed = 0;
    for (k, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
